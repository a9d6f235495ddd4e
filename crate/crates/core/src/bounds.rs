//! Evaluators for Mrs. Gerber's Lemma and the MMSE-based entropy bounds.
//!
//! Per-symbol values are reported in bits. Vector bounds carry the dimension
//! so callers can recover totals with [`BoundResult::total`].

use std::fmt;

use crate::dist::{
    best_case_mmse_given_output, worst_case_mmse, ExplicitPmf, Goal, OrderCostTable, Permutation,
    DEFAULT_EXHAUSTIVE_CAP,
};
use crate::error::{Error, Result};
use crate::scalar::{conv, h, h_inv, Probability};

/// Slack allowed when validating MMSE / normalised-entropy arguments computed
/// in floating point.
const ARG_TOL: f64 = 1e-12;

/// A named bound value (bits per symbol) with the inputs that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub name: &'static str,
    pub value: f64,
    /// Number of symbols the bound covers; `value * n` is the total.
    pub n: usize,
    pub inputs: Vec<(&'static str, f64)>,
    pub variant: Option<&'static str>,
    /// The permutation attaining the optimum, for bounds that search over orders.
    pub permutation: Option<Permutation>,
}

impl BoundResult {
    pub(crate) fn scalar(name: &'static str, value: f64, inputs: Vec<(&'static str, f64)>) -> Self {
        BoundResult {
            name,
            value,
            n: 1,
            inputs,
            variant: None,
            permutation: None,
        }
    }

    pub fn total(&self) -> f64 {
        self.value * self.n as f64
    }

    pub fn input(&self, key: &str) -> Option<f64> {
        self.inputs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }
}

impl fmt::Display for BoundResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.name, self.value)?;
        if let Some(v) = self.variant {
            write!(f, " [{v}]")?;
        }
        Ok(())
    }
}

/// Per-step noise entropies `H(Z_{pi(i)} | Z_{pi(i-1)}, .., Z_{pi(1)})`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProfile {
    pub entries: Vec<f64>,
}

impl NoiseProfile {
    pub fn along(pmf_z: &ExplicitPmf, perm: &Permutation) -> Result<Self> {
        if perm.len() != pmf_z.n() {
            return Err(Error::DimensionMismatch {
                expected: pmf_z.n(),
                found: perm.len(),
            });
        }
        let mut mask = 0;
        let mut entries = Vec::with_capacity(perm.len());
        for &j in perm.as_slice() {
            entries.push(pmf_z.conditional_entropy(j, mask).clamp(0.0, 1.0));
            mask |= 1 << j;
        }
        Ok(NoiseProfile { entries })
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().sum()
    }
}

fn check_noise(alpha: Probability) -> Result<f64> {
    Ok(Probability::noise(alpha.value())?.value())
}

fn check_unit(name: &str, x: f64, hi: f64) -> Result<f64> {
    if x.is_finite() && x >= -ARG_TOL && x <= hi + ARG_TOL {
        Ok(x.clamp(0.0, hi))
    } else {
        Err(Error::domain(format!("{name} = {x} is outside [0, {hi}]")))
    }
}

/// `sqrt(1 - 4 mmse)`, with the argument clamped into `[0, 1]`.
fn bias(mmse: f64) -> f64 {
    (1.0 - 4.0 * mmse).clamp(0.0, 1.0).sqrt()
}

/// Mrs. Gerber's Lemma: `h(alpha * h^{-1}(H))` for a per-symbol input entropy `H`.
pub fn mgl_scalar(alpha: Probability, entropy: f64) -> Result<f64> {
    let a = check_noise(alpha)?;
    let u = check_unit("entropy", entropy, 1.0)?;
    Ok(h(conv(a, h_inv(u))))
}

/// `h(alpha) + (1 - h(alpha)) 4 mmse`.
pub fn scalar_mmse_gerber(alpha: Probability, mmse: f64) -> Result<f64> {
    let a = check_noise(alpha)?;
    let m = check_unit("mmse", mmse, 0.25)?;
    Ok(lower_from_mmse(a, m))
}

#[inline]
fn lower_from_mmse(alpha: f64, mmse: f64) -> f64 {
    let ha = h(alpha);
    ha + (1.0 - ha) * 4.0 * mmse
}

/// `h(1/2 + (1 - 2 alpha)/2 * sqrt(1 - 4 mmse))`, the MMSE upper bound on
/// `H(X xor Z | U)`. As a function of `mmse` this is concave and nondecreasing
/// on `[0, 1/4]`.
pub fn scalar_upper(alpha: Probability, mmse: f64) -> Result<f64> {
    let a = check_noise(alpha)?;
    let m = check_unit("mmse", mmse, 0.25)?;
    Ok(upper_from_mmse(a, m))
}

#[inline]
fn upper_from_mmse(alpha: f64, mmse: f64) -> f64 {
    h(0.5 + 0.5 * (1.0 - 2.0 * alpha) * bias(mmse))
}

/// Lower bound with noise of memory: `H(Z|W) + (1 - H(Z|W)) 4 MMSE(X|T)`.
pub fn scalar_memory_noise(noise_entropy: f64, mmse: f64) -> Result<f64> {
    let hz = check_unit("noise entropy", noise_entropy, 1.0)?;
    let m = check_unit("mmse", mmse, 0.25)?;
    Ok(hz + (1.0 - hz) * 4.0 * m)
}

/// Worst-case MMSE lower bound on `H(Y)/n`.
pub fn vector_mmse_gerber(pmf: &ExplicitPmf, alpha: Probability) -> Result<BoundResult> {
    let a = check_noise(alpha)?;
    let (mmse, perm) = worst_case_mmse(pmf)?;
    let n = pmf.n();
    Ok(BoundResult {
        name: "mmse-gerber",
        value: lower_from_mmse(a, mmse / n as f64),
        n,
        inputs: vec![("alpha", a), ("n", n as f64), ("worst_case_mmse", mmse)],
        variant: None,
        permutation: Some(perm),
    })
}

/// Mrs. Gerber's Lemma applied to the entropy of an explicit pmf.
pub fn mgl_vector(pmf: &ExplicitPmf, alpha: Probability) -> Result<BoundResult> {
    let n = pmf.n();
    let u = pmf.entropy() / n as f64;
    let value = mgl_scalar(alpha, u)?;
    Ok(BoundResult {
        name: "mgl",
        value,
        n,
        inputs: vec![
            ("alpha", alpha.value()),
            ("n", n as f64),
            ("entropy_per_symbol", u),
        ],
        variant: None,
        permutation: None,
    })
}

/// How `MMSE(X|W)` is maximised over orders when conditioning on `W`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Conditioning {
    /// One order shared by every value of `W`.
    #[default]
    SharedPermutation,
    /// A separate optimal order for each value of `W`.
    PerComponent,
}

fn check_family(family: &[(f64, ExplicitPmf)]) -> Result<usize> {
    let first = family
        .first()
        .ok_or_else(|| Error::domain("conditioning family is empty"))?;
    let n = first.1.n();
    if let Some((_, pmf)) = family.iter().find(|(_, pmf)| pmf.n() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: pmf.n(),
        });
    }
    if family.iter().any(|(w, _)| !(*w >= 0.0)) {
        return Err(Error::domain("family weights must be nonnegative"));
    }
    let total: f64 = family.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!(
            "family weights sum to {total}, not 1"
        )));
    }
    if n > DEFAULT_EXHAUSTIVE_CAP {
        return Err(Error::DimensionTooLarge {
            n,
            cap: DEFAULT_EXHAUSTIVE_CAP,
        });
    }
    Ok(n)
}

/// Conditional lower bound on `H(Y|W)/n` where `X | W = w` has law `pmf_w`
/// with probability `weight_w`.
pub fn conditional_vector_mmse_gerber(
    family: &[(f64, ExplicitPmf)],
    alpha: Probability,
    conditioning: Conditioning,
) -> Result<BoundResult> {
    let a = check_noise(alpha)?;
    let n = check_family(family)?;
    let tables: Vec<(f64, OrderCostTable)> = family
        .iter()
        .map(|(w, pmf)| (*w, OrderCostTable::predictability(pmf)))
        .collect();
    let (mmse, permutation, variant) = match conditioning {
        Conditioning::SharedPermutation => {
            let mixed = OrderCostTable::build(n, |mask| {
                (0..n)
                    .map(|j| tables.iter().map(|(w, t)| w * t.get(j, mask)).sum())
                    .collect()
            });
            let (v, perm) = mixed.optimize(Goal::Maximize);
            (v, Some(perm), "shared-permutation")
        }
        Conditioning::PerComponent => {
            let v = tables
                .iter()
                .map(|(w, t)| w * t.optimize(Goal::Maximize).0)
                .sum();
            (v, None, "per-component")
        }
    };
    Ok(BoundResult {
        name: "conditional-mmse-gerber",
        value: lower_from_mmse(a, mmse / n as f64),
        n,
        inputs: vec![("alpha", a), ("n", n as f64), ("conditional_mmse", mmse)],
        variant: Some(variant),
        permutation,
    })
}

/// Exact `H(Y|W)/n` for a conditioning family.
pub fn conditional_output_entropy(
    family: &[(f64, ExplicitPmf)],
    alpha: Probability,
) -> Result<f64> {
    let n = check_family(family)?;
    Ok(family
        .iter()
        .map(|(w, pmf)| w * pmf.apply_bsc(alpha).entropy())
        .sum::<f64>()
        / n as f64)
}

fn memory_noise_tables(pmf_x: &ExplicitPmf, pmf_z: &ExplicitPmf) -> Result<(OrderCostTable, f64)> {
    let n = pmf_x.n();
    if pmf_z.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: pmf_z.n(),
        });
    }
    if n > DEFAULT_EXHAUSTIVE_CAP {
        return Err(Error::DimensionTooLarge {
            n,
            cap: DEFAULT_EXHAUSTIVE_CAP,
        });
    }
    let table = OrderCostTable::build(n, |mask| {
        let mmse = pmf_x.conditional_mmses(mask);
        (0..n)
            .map(|j| {
                if mask >> j & 1 == 1 {
                    0.0
                } else {
                    let hz = pmf_z.conditional_entropy(j, mask).clamp(0.0, 1.0);
                    4.0 * mmse[j] * (1.0 - hz)
                }
            })
            .collect()
    });
    Ok((table, pmf_z.entropy()))
}

/// Lower bound on `H(Y)` for independent `X`, `Z` of arbitrary law:
/// `max_pi { H(Z) + 4 sum_i MMSE_i (1 - H(Z_{pi(i)} | Z-prefix)) }`, reported
/// per symbol.
pub fn vector_memory_noise(pmf_x: &ExplicitPmf, pmf_z: &ExplicitPmf) -> Result<BoundResult> {
    let (table, hz) = memory_noise_tables(pmf_x, pmf_z)?;
    let (gain, perm) = table.optimize(Goal::Maximize);
    let n = pmf_x.n();
    Ok(BoundResult {
        name: "memory-noise",
        value: (hz + gain) / n as f64,
        n,
        inputs: vec![("n", n as f64), ("noise_entropy", hz)],
        variant: None,
        permutation: Some(perm),
    })
}

/// The bracketed expression of [`vector_memory_noise`] for one fixed order,
/// per symbol.
pub fn memory_noise_along_permutation(
    pmf_x: &ExplicitPmf,
    pmf_z: &ExplicitPmf,
    perm: &Permutation,
) -> Result<f64> {
    let profile = NoiseProfile::along(pmf_z, perm)?;
    if pmf_x.n() != perm.len() {
        return Err(Error::DimensionMismatch {
            expected: pmf_x.n(),
            found: perm.len(),
        });
    }
    let mut mask = 0;
    let mut total = profile.total();
    for (&j, hz) in perm.as_slice().iter().zip(&profile.entries) {
        total += 4.0 * pmf_x.conditional_mmse(j, mask) * (1.0 - hz);
        mask |= 1 << j;
    }
    Ok(total / pmf_x.n() as f64)
}

/// Best-case MMSE upper bound on `H(Y)/n`.
pub fn vector_upper(pmf: &ExplicitPmf, alpha: Probability) -> Result<BoundResult> {
    let a = check_noise(alpha)?;
    let (mmse, perm) = best_case_mmse_given_output(pmf, alpha)?;
    let n = pmf.n();
    Ok(BoundResult {
        name: "upper",
        value: upper_from_mmse(a, mmse / n as f64),
        n,
        inputs: vec![("alpha", a), ("n", n as f64), ("best_case_mmse", mmse)],
        variant: None,
        permutation: Some(perm),
    })
}

/// Range of Mrs. Gerber's bound over inputs with `4 MMSE-bar / n = x`:
/// `(h(alpha * h^{-1}(x)), h(alpha * (1/2 + sqrt(1 - x)/2)))`.
pub fn sandwich_mgl(alpha: Probability, x: f64) -> Result<(f64, f64)> {
    let a = check_noise(alpha)?;
    let x = check_unit("x", x, 1.0)?;
    let lower = h(conv(a, h_inv(x)));
    let upper = h(conv(a, 0.5 + 0.5 * (1.0 - x).max(0.0).sqrt()));
    Ok((lower, upper))
}

/// Range of the MMSE lower bound over inputs with `H(X)/n = u`:
/// `(h(a) + (1-h(a)) 4 p(1-p), h(a) + (1-h(a)) u)` with `p = h^{-1}(u)`.
pub fn sandwich_new(alpha: Probability, u: f64) -> Result<(f64, f64)> {
    let a = check_noise(alpha)?;
    let u = check_unit("u", u, 1.0)?;
    let p = h_inv(u);
    let ha = h(a);
    Ok((ha + (1.0 - ha) * 4.0 * p * (1.0 - p), ha + (1.0 - ha) * u))
}

/// Whether `pmf` is a product measure with every marginal in `{0, 1/2, 1}`,
/// the condition under which the worst-case MMSE lower bound is tight.
pub fn is_memoryless_with_extreme_marginals(pmf: &ExplicitPmf, tol: f64) -> bool {
    let marginals: Vec<f64> = (0..pmf.n()).map(|j| pmf.marginal(j)).collect();
    let extreme = marginals
        .iter()
        .all(|m| [0.0, 0.5, 1.0].iter().any(|t| (m - t).abs() <= tol));
    let product = pmf.weights().iter().enumerate().all(|(x, w)| {
        let expected: f64 = marginals
            .iter()
            .enumerate()
            .map(|(j, m)| if x >> j & 1 == 1 { *m } else { 1.0 - m })
            .product();
        (w - expected).abs() <= tol
    });
    extreme && product
}
