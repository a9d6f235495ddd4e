//! Exact joint distributions on `{0,1}^n` and permutation-ordered MMSE.
//!
//! This is the brute-force layer: every quantity is computed by summing over
//! all `2^n` outcomes, so it doubles as the oracle for the closed forms in
//! [`crate::bounds`] and [`crate::hmm`].
//!
//! Outcome index `i` encodes the bits `(x_1, .., x_n)` with `x_1` as the
//! least significant bit. [`Permutation`]s are stored zero-based and shown
//! one-based.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Probability;

/// Largest dimension an [`ExplicitPmf`] may have.
pub const MAX_DIM: usize = 16;

/// Default largest dimension accepted by the exhaustive permutation searches.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 8;

const NORMALIZATION_TOL: f64 = 1e-12;
const RENORMALIZE_TOL: f64 = 1e-9;

/// Two permutation totals closer than this count as tied; the earlier
/// permutation in lexicographic order wins.
pub const TIE_TOL: f64 = 1e-13;

/// Exact pmf over `{0,1}^n`, stored as `2^n` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitPmf {
    n: usize,
    weights: Vec<f64>,
}

impl ExplicitPmf {
    /// Builds a pmf from `2^n` weights. Weights summing to within `1e-9` of one
    /// are renormalised; anything else is rejected.
    pub fn new(n: usize, weights: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("pmf dimension must be at least 1"));
        }
        if n > MAX_DIM {
            return Err(Error::DimensionTooLarge { n, cap: MAX_DIM });
        }
        if weights.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                found: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::domain(format!(
                "pmf weight {w} is negative or not finite"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > RENORMALIZE_TOL {
            return Err(Error::NotNormalized { sum });
        }
        let mut pmf = ExplicitPmf { n, weights };
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            pmf.weights.iter_mut().for_each(|w| *w /= sum);
        }
        Ok(pmf)
    }

    fn normalized(n: usize, mut weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::domain("weights have no mass"));
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        ExplicitPmf::new(n, weights)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        check_dim(n)?;
        ExplicitPmf::new(n, vec![1.0 / (1u64 << n) as f64; 1 << n])
    }

    pub fn point_mass(n: usize, index: usize) -> Result<Self> {
        check_dim(n)?;
        if index >= 1 << n {
            return Err(Error::domain(format!(
                "outcome {index} does not exist for n = {n}"
            )));
        }
        let mut weights = vec![0.0; 1 << n];
        weights[index] = 1.0;
        ExplicitPmf::new(n, weights)
    }

    /// Independent bits with `P(X_i = 1) = marginals[i]`.
    pub fn product(marginals: &[Probability]) -> Result<Self> {
        let n = marginals.len();
        check_dim(n)?;
        let weights = (0..1usize << n)
            .map(|x| {
                marginals
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        if bit(x, i) {
                            p.value()
                        } else {
                            1.0 - p.value()
                        }
                    })
                    .product()
            })
            .collect();
        ExplicitPmf::normalized(n, weights)
    }

    /// Law of `X_1 ~ Bern(1/2)`, `X_m = X_{m-1} xor W_m` with `W_m` i.i.d.
    /// Bernoulli(q).
    pub fn markov(n: usize, q: Probability) -> Result<Self> {
        check_dim(n)?;
        let q = Probability::noise(q.value())?.value();
        let weights = (0..1usize << n)
            .map(|x| {
                (1..n).fold(0.5, |acc, i| {
                    if bit(x, i) != bit(x, i - 1) {
                        acc * q
                    } else {
                        acc * (1.0 - q)
                    }
                })
            })
            .collect();
        ExplicitPmf::normalized(n, weights)
    }

    /// The two-bit family `P(00) = 1/2, P(x_1=0,x_2=1) = 0, P(x_1=1,x_2=0) = eps,
    /// P(11) = 1/2 - eps`.
    pub fn counterexample(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::domain(format!(
                "counterexample needs 0 < eps < 1/2, got {eps}"
            )));
        }
        // index = x_1 + 2 x_2
        ExplicitPmf::new(2, vec![0.5, eps, 0.0, 0.5 - eps])
    }

    /// Seeded random pmf, uniform on the simplex. Deterministic per seed.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        check_dim(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..1usize << n)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        ExplicitPmf::normalized(n, weights)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights[index]
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        entropy_of(&self.weights)
    }

    /// `P(X_j = 1)` for zero-based coordinate `j`.
    pub fn marginal(&self, j: usize) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .filter(|(x, _)| bit(*x, j))
            .map(|(_, w)| w)
            .sum()
    }

    /// Pmf of `Y = X xor Z` with `Z` i.i.d. Bernoulli(alpha).
    pub fn apply_bsc(&self, alpha: Probability) -> ExplicitPmf {
        self.flip_coordinates(full_mask(self.n), alpha.value())
    }

    /// Passes only the coordinates in `mask` through the channel.
    pub(crate) fn flip_coordinates(&self, mask: usize, alpha: f64) -> ExplicitPmf {
        let mut weights = self.weights.clone();
        let mut scratch = vec![0.0; weights.len()];
        for j in (0..self.n).filter(|j| bit(mask, *j)) {
            for (x, out) in scratch.iter_mut().enumerate() {
                *out = (1.0 - alpha) * weights[x] + alpha * weights[x ^ (1 << j)];
            }
            std::mem::swap(&mut weights, &mut scratch);
        }
        ExplicitPmf { n: self.n, weights }
    }

    /// Entropy of the marginal on the coordinates in `mask`.
    pub fn marginal_entropy(&self, mask: usize) -> f64 {
        let mut marginal = vec![0.0; 1 << self.n];
        for (x, w) in self.weights.iter().enumerate() {
            marginal[x & mask] += w;
        }
        entropy_of(&marginal)
    }

    /// `H(X_j | X_S)` for `S = mask`.
    pub fn conditional_entropy(&self, j: usize, mask: usize) -> f64 {
        self.marginal_entropy(mask | (1 << j)) - self.marginal_entropy(mask & !(1 << j))
    }

    /// `MMSE(X_j | X_S)` for every `j`, where `S = mask`. Entries for `j` in `S`
    /// are zero. Zero-probability prefixes contribute nothing.
    pub fn conditional_mmses(&self, mask: usize) -> Vec<f64> {
        let size = 1 << self.n;
        let mut prefix_mass = vec![0.0; size];
        let mut ones = vec![vec![0.0; size]; self.n];
        for (x, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let key = x & mask;
            prefix_mass[key] += w;
            for (j, acc) in ones.iter_mut().enumerate() {
                if bit(x, j) {
                    acc[key] += w;
                }
            }
        }
        ones.iter()
            .enumerate()
            .map(|(j, acc)| {
                if bit(mask, j) {
                    return 0.0;
                }
                prefix_mass
                    .iter()
                    .zip(acc)
                    .filter(|(b, _)| **b > 0.0)
                    .map(|(b, a)| {
                        let p = (a / b).clamp(0.0, 1.0);
                        b * p * (1.0 - p)
                    })
                    .sum()
            })
            .collect()
    }

    /// `MMSE(X_j | X_S)` for `S = mask`.
    pub fn conditional_mmse(&self, j: usize, mask: usize) -> f64 {
        self.conditional_mmses(mask)[j]
    }

    /// The predictive probabilities `P(X_{pi(i)} = 1 | prefix)` for every
    /// positive-probability realisation of the first `i - 1` coordinates in the
    /// order `perm` (`i` is one-based).
    pub fn predictive_probabilities(
        &self,
        perm: &Permutation,
        i: usize,
    ) -> Result<Vec<PredictiveProbability>> {
        self.check_perm(perm)?;
        if i == 0 || i > self.n {
            return Err(Error::domain(format!("step {i} is outside 1..={}", self.n)));
        }
        let target = perm.0[i - 1];
        let prefix = &perm.0[..i - 1];
        let mask = prefix.iter().fold(0, |m, &j| m | (1 << j));
        let mut mass = vec![0.0; 1 << self.n];
        let mut ones = vec![0.0; 1 << self.n];
        for (x, &w) in self.weights.iter().enumerate() {
            mass[x & mask] += w;
            if bit(x, target) {
                ones[x & mask] += w;
            }
        }
        Ok((0..1usize << self.n)
            .filter(|key| key & !mask == 0 && mass[*key] > 0.0)
            .map(|key| PredictiveProbability {
                prefix: prefix.iter().map(|&j| bit(key, j)).collect(),
                weight: mass[key],
                value: (ones[key] / mass[key]).clamp(0.0, 1.0),
            })
            .collect())
    }

    /// Text export: `n` on the first line, then the `2^n` weights in index order.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for w in &self.weights {
            out.push_str(&format!("{w:e}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("empty pmf file".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad dimension: {e}")))?;
        let weights = lines
            .map(|l| {
                l.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad weight {l:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        ExplicitPmf::new(n, weights)
    }

    fn check_perm(&self, perm: &Permutation) -> Result<()> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: perm.len(),
            });
        }
        Ok(())
    }
}

impl FromStr for ExplicitPmf {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExplicitPmf::from_text(s)
    }
}

/// `P(X_{pi(i)} = 1 | X_{pi(i-1)}, .., X_{pi(1)})` for one realised prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveProbability {
    /// Realised bits of `X_{pi(1)}, .., X_{pi(i-1)}`, in that order.
    pub prefix: Vec<bool>,
    /// Probability of the prefix.
    pub weight: f64,
    pub value: f64,
}

/// A bijection on the coordinates, stored zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    /// Builds a permutation from zero-based indices.
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &j in &order {
            if j >= order.len() || std::mem::replace(&mut seen[j], true) {
                return Err(Error::domain(format!("{order:?} is not a permutation")));
            }
        }
        Ok(Permutation(order))
    }

    pub fn from_one_based(order: &[usize]) -> Result<Self> {
        if order.contains(&0) {
            return Err(Error::domain("one-based permutation contains 0"));
        }
        Permutation::new(order.iter().map(|j| j - 1).collect())
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|j| j + 1).collect()
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(|j| j.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// `MMSE_pi(X) = sum_i E[P_i (1 - P_i)]`, evaluated directly from the
/// predictive probabilities of each step.
pub fn mmse_along_permutation(pmf: &ExplicitPmf, perm: &Permutation) -> Result<f64> {
    pmf.check_perm(perm)?;
    let mut total = 0.0;
    for i in 1..=pmf.n {
        total += pmf
            .predictive_probabilities(perm, i)?
            .iter()
            .map(|p| p.weight * p.value * (1.0 - p.value))
            .sum::<f64>();
    }
    Ok(total)
}

/// `sum_i MMSE(X_{pi(i)} | Y_{pi(i-1)}, .., Y_{pi(1)})` where `Y` is `X`
/// through a BSC(alpha).
pub fn mmse_given_output_along_permutation(
    pmf: &ExplicitPmf,
    alpha: Probability,
    perm: &Permutation,
) -> Result<f64> {
    pmf.check_perm(perm)?;
    let mut mask = 0;
    let mut total = 0.0;
    for &j in perm.as_slice() {
        total += pmf
            .flip_coordinates(mask, alpha.value())
            .conditional_mmse(j, mask);
        mask |= 1 << j;
    }
    Ok(total)
}

/// Table of a cost `c(j, S)` that depends only on the next coordinate and the
/// set already placed; a permutation's total is `sum_i c(pi(i), {pi(1..i-1)})`.
#[derive(Debug, Clone)]
pub struct OrderCostTable {
    n: usize,
    values: Vec<f64>,
}

impl OrderCostTable {
    pub fn build(n: usize, mut row: impl FnMut(usize) -> Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(n << n);
        for mask in 0..1usize << n {
            let r = row(mask);
            debug_assert_eq!(r.len(), n);
            values.extend(r);
        }
        OrderCostTable { n, values }
    }

    /// `MMSE(X_j | X_S)` for all `(j, S)`.
    pub fn predictability(pmf: &ExplicitPmf) -> Self {
        OrderCostTable::build(pmf.n, |mask| pmf.conditional_mmses(mask))
    }

    /// `MMSE(X_j | Y_S)` for all `(j, S)` with `Y = X xor Bern(alpha)`.
    pub fn predictability_from_output(pmf: &ExplicitPmf, alpha: f64) -> Self {
        OrderCostTable::build(pmf.n, |mask| {
            pmf.flip_coordinates(mask, alpha).conditional_mmses(mask)
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, j: usize, mask: usize) -> f64 {
        self.values[mask * self.n + j]
    }

    pub fn total(&self, perm: &Permutation) -> f64 {
        let mut mask = 0;
        let mut total = 0.0;
        for &j in perm.as_slice() {
            total += self.get(j, mask);
            mask |= 1 << j;
        }
        total
    }

    /// Exhaustive search over all `n!` orders, visited in lexicographic order.
    /// Ties (within [`TIE_TOL`]) keep the lexicographically first order.
    pub fn optimize(&self, goal: Goal) -> (f64, Permutation) {
        let mut search = Search {
            table: self,
            goal,
            order: Vec::with_capacity(self.n),
            best: None,
        };
        search.descend(0, 0.0);
        let (value, order) = search.best.expect("at least one permutation");
        (value, Permutation(order))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Goal {
    Maximize,
    Minimize,
}

struct Search<'a> {
    table: &'a OrderCostTable,
    goal: Goal,
    order: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_> {
    fn descend(&mut self, mask: usize, acc: f64) {
        let n = self.table.n;
        if self.order.len() == n {
            let better = match (&self.best, self.goal) {
                (None, _) => true,
                (Some((b, _)), Goal::Maximize) => acc > b + TIE_TOL,
                (Some((b, _)), Goal::Minimize) => acc < b - TIE_TOL,
            };
            if better {
                self.best = Some((acc, self.order.clone()));
            }
            return;
        }
        for j in 0..n {
            if bit(mask, j) {
                continue;
            }
            self.order.push(j);
            self.descend(mask | (1 << j), acc + self.table.get(j, mask));
            self.order.pop();
        }
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::DimensionTooLarge { n, cap })
    } else {
        Ok(())
    }
}

/// `max_pi MMSE_pi(X)` with a maximising permutation.
pub fn worst_case_mmse(pmf: &ExplicitPmf) -> Result<(f64, Permutation)> {
    worst_case_mmse_with_cap(pmf, DEFAULT_EXHAUSTIVE_CAP)
}

pub fn worst_case_mmse_with_cap(pmf: &ExplicitPmf, cap: usize) -> Result<(f64, Permutation)> {
    check_cap(pmf.n, cap)?;
    Ok(OrderCostTable::predictability(pmf).optimize(Goal::Maximize))
}

/// `min_pi sum_i MMSE(X_{pi(i)} | Y_{pi(i-1)}, .., Y_{pi(1)})`.
pub fn best_case_mmse_given_output(
    pmf: &ExplicitPmf,
    alpha: Probability,
) -> Result<(f64, Permutation)> {
    best_case_mmse_given_output_with_cap(pmf, alpha, DEFAULT_EXHAUSTIVE_CAP)
}

pub fn best_case_mmse_given_output_with_cap(
    pmf: &ExplicitPmf,
    alpha: Probability,
    cap: usize,
) -> Result<(f64, Permutation)> {
    check_cap(pmf.n, cap)?;
    Ok(OrderCostTable::predictability_from_output(pmf, alpha.value()).optimize(Goal::Minimize))
}

/// Greedy order: at each step take the unused coordinate that is hardest to
/// predict from the ones already placed (smallest index on ties).
pub fn greedy_permutation(pmf: &ExplicitPmf) -> Permutation {
    let mut mask = 0;
    let mut order = Vec::with_capacity(pmf.n);
    for _ in 0..pmf.n {
        let mmses = pmf.conditional_mmses(mask);
        let mut pick: Option<(usize, f64)> = None;
        for j in (0..pmf.n).filter(|j| !bit(mask, *j)) {
            match pick {
                Some((_, v)) if mmses[j] <= v + TIE_TOL => {}
                _ => pick = Some((j, mmses[j])),
            }
        }
        let (j, _) = pick.expect("an unused coordinate remains");
        order.push(j);
        mask |= 1 << j;
    }
    Permutation(order)
}

#[inline]
pub(crate) fn bit(x: usize, j: usize) -> bool {
    (x >> j) & 1 == 1
}

pub(crate) fn full_mask(n: usize) -> usize {
    (1 << n) - 1
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("pmf dimension must be at least 1"));
    }
    check_cap(n, MAX_DIM)
}

fn entropy_of(weights: &[f64]) -> f64 {
    weights
        .iter()
        .filter(|w| **w > 0.0)
        .map(|w| -w * w.log2())
        .sum()
}
