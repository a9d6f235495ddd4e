use clap::{Args, ValueEnum};
use gerber_core::bounds::{
    conditional_output_entropy, conditional_vector_mmse_gerber, mgl_vector, sandwich_mgl,
    sandwich_new, vector_memory_noise, vector_mmse_gerber, vector_upper, Conditioning,
};
use gerber_core::dist::{
    greedy_permutation, mmse_along_permutation, mmse_given_output_along_permutation,
    worst_case_mmse, OrderCostTable,
};
use gerber_core::hmm::{
    crossing_q, dyadic_permutation, exact_conditional_entropy, mmse_two_sided, ow_entropy_rate_mc,
    quartic_roots_in_range, series_mmse, series_mmse_terms, small_q_ratio, theorem5_bound,
    theorem6_bound, QuarticCoefficients, Theorem6Variant, DEFAULT_BURNIN, SERIES_TOL,
};
use gerber_core::scalar::{binary_convolve, binary_entropy, entropy_taylor, inv_binary_entropy};
use gerber_core::{ExplicitPmf, MarkovHmmParams, Permutation, Probability};
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::format::{derive_seeds, sig};
use crate::{emit, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Scalar,
    Dist,
    Bounds,
    Hmm,
    All,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Random instances per randomised invariant.
    #[arg(long, default_value_t = 200)]
    pub budget: usize,
    /// Monte Carlo samples per grid point in the hmm suite.
    #[arg(long, default_value_t = 200_000)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_BURNIN)]
    pub burnin: usize,
}

/// One invariant's worst slack over all its checks. Negative slack is a
/// violation; the invariant holds while the worst slack is at least `-tol`.
#[derive(Debug, Clone)]
pub struct Invariant {
    pub suite: &'static str,
    pub name: &'static str,
    pub tol: f64,
    pub worst: f64,
    pub checks: usize,
}

impl Invariant {
    fn new(suite: &'static str, name: &'static str, tol: f64) -> Self {
        Invariant {
            suite,
            name,
            tol,
            worst: f64::INFINITY,
            checks: 0,
        }
    }

    fn record(&mut self, slack: f64) {
        self.checks += 1;
        let slack = if slack.is_nan() {
            f64::NEG_INFINITY
        } else {
            slack
        };
        self.worst = self.worst.min(slack);
    }

    /// `a <= b`.
    fn at_most(&mut self, a: f64, b: f64) {
        self.record(b - a);
    }

    fn close(&mut self, a: f64, b: f64) {
        self.record(-(a - b).abs());
    }

    pub fn passed(&self) -> bool {
        self.checks > 0 && self.worst >= -self.tol
    }

    pub fn line(&self) -> String {
        format!(
            "{}  {:<7}{:<46} worst slack {:>12}  tol {:<6}  ({} checks)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            sig(self.worst, 3),
            sig(self.tol, 2),
            self.checks
        )
    }
}

fn p(v: f64) -> CliResult<Probability> {
    Ok(Probability::new(v)?)
}

fn all_orders(n: usize) -> Vec<Permutation> {
    (0..n)
        .permutations(n)
        .map(|v| Permutation::new(v).expect("a permutation"))
        .collect()
}

fn random_pmfs(seed: u64, count: usize) -> CliResult<Vec<ExplicitPmf>> {
    derive_seeds(seed, count)
        .into_iter()
        .enumerate()
        .map(|(i, s)| Ok(ExplicitPmf::random(2 + i % 3, s)?))
        .collect()
}

pub fn scalar_suite(args: &ValidateArgs) -> CliResult<Vec<Invariant>> {
    const S: &str = "scalar";
    let mut roundtrip = Invariant::new(S, "h(h_inv(u)) = u", 1e-12);
    let mut inv_range = Invariant::new(S, "h_inv(u) in [0, 1/2]", 0.0);
    for i in 0..=1000 {
        let u = i as f64 / 1000.0;
        let x = inv_binary_entropy(u)?;
        roundtrip.close(binary_entropy(x), u);
        inv_range.record(x.value().min(0.5 - x.value()));
    }

    let mut conv_lo = Invariant::new(S, "a*b >= max(a, b)", 1e-15);
    let mut conv_hi = Invariant::new(S, "a*b <= 1/2", 1e-15);
    for i in 0..=50 {
        for j in 0..=50 {
            let (a, b) = (i as f64 / 100.0, j as f64 / 100.0);
            let c = binary_convolve(p(a)?, p(b)?).value();
            conv_lo.at_most(a.max(b), c);
            conv_hi.at_most(c, 0.5);
        }
    }

    let mut taylor = Invariant::new(S, "Taylor partial sums decrease towards h", 1e-15);
    for i in 0..=20 {
        let off = i as f64 / 20.0;
        let exact = binary_entropy(p(0.5 + 0.5 * off)?);
        let mut prev = entropy_taylor(off, 1)?;
        for k in 2..=60 {
            let next = entropy_taylor(off, k)?;
            taylor.at_most(next, prev);
            taylor.at_most(exact, next);
            prev = next;
        }
    }

    let mut concave = Invariant::new(S, "h is midpoint concave", 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    for _ in 0..10 * args.budget {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        let mid = binary_entropy(p(0.5 * (a + b))?);
        concave.at_most(0.5 * (binary_entropy(p(a)?) + binary_entropy(p(b)?)), mid);
    }
    Ok(vec![
        roundtrip, inv_range, conv_lo, conv_hi, taylor, concave,
    ])
}

pub fn dist_suite(args: &ValidateArgs) -> CliResult<Vec<Invariant>> {
    const S: &str = "dist";
    let mut chain = Invariant::new(S, "chain rule sums to H(X)", 1e-10);
    let mut table = Invariant::new(S, "cost table total = direct MMSE_pi", 1e-12);
    let mut mmse_hi = Invariant::new(S, "4 MMSE_pi <= H(X)", 1e-10);
    let mut mmse_lo = Invariant::new(S, "4n p(1-p) <= 4 MMSE_pi, p = h_inv(H/n)", 1e-10);
    let mut worst = Invariant::new(S, "worst case dominates every order", 1e-12);
    let mut greedy = Invariant::new(S, "greedy order <= worst case", 1e-12);
    let mut cond = Invariant::new(S, "conditioning reduces MMSE", 1e-12);
    let mut noisy = Invariant::new(S, "MMSE given Y-prefix >= given X-prefix", 1e-12);
    let mut text = Invariant::new(S, "text export round trip", 1e-15);
    let alpha = p(0.11)?;
    for pmf in random_pmfs(args.seed, args.budget)? {
        let n = pmf.n();
        let h_x = pmf.entropy();
        let mut mask = 0;
        let mut sum = 0.0;
        for j in 0..n {
            sum += pmf.conditional_entropy(j, mask);
            mask |= 1 << j;
        }
        chain.close(sum, h_x);

        let costs = OrderCostTable::predictability(&pmf);
        let (w, _) = worst_case_mmse(&pmf)?;
        let q = inv_binary_entropy((h_x / n as f64).min(1.0))?.value();
        for perm in all_orders(n) {
            let direct = mmse_along_permutation(&pmf, &perm)?;
            table.close(costs.total(&perm), direct);
            mmse_hi.at_most(4.0 * direct, h_x);
            mmse_lo.at_most(4.0 * n as f64 * q * (1.0 - q), 4.0 * direct);
            worst.at_most(direct, w);
            noisy.at_most(
                direct,
                mmse_given_output_along_permutation(&pmf, alpha, &perm)?,
            );
        }
        greedy.at_most(mmse_along_permutation(&pmf, &greedy_permutation(&pmf))?, w);

        for j in 0..n {
            for mask in 0..1usize << n {
                if mask >> j & 1 == 1 {
                    continue;
                }
                let base = pmf.conditional_mmse(j, mask);
                for k in (0..n).filter(|&k| k != j && mask >> k & 1 == 0) {
                    cond.at_most(pmf.conditional_mmse(j, mask | 1 << k), base);
                }
            }
        }

        let back = ExplicitPmf::from_text(&pmf.to_text())?;
        for (a, b) in pmf.weights().iter().zip(back.weights()) {
            text.close(*a, *b);
        }
    }
    Ok(vec![
        chain, table, mmse_hi, mmse_lo, worst, greedy, cond, noisy, text,
    ])
}

/// Law of `X xor Z` for independent `X`, `Z`.
fn xor_law(x: &ExplicitPmf, z: &ExplicitPmf) -> CliResult<ExplicitPmf> {
    let size = x.weights().len();
    let weights = (0..size)
        .map(|y| (0..size).map(|v| x.weight(v) * z.weight(v ^ y)).sum())
        .collect();
    Ok(ExplicitPmf::new(x.n(), weights)?)
}

pub fn bounds_suite(args: &ValidateArgs) -> CliResult<Vec<Invariant>> {
    const S: &str = "bounds";
    let alphas = [0.0, 0.05, 0.11, 0.25, 0.5];
    let mut lower = Invariant::new(S, "mmse-gerber <= H(Y)/n", 1e-10);
    let mut upper = Invariant::new(S, "H(Y)/n <= upper", 1e-10);
    let mut mgl = Invariant::new(S, "mgl <= H(Y)/n", 1e-10);
    let mut mgl_in = Invariant::new(S, "mgl inside its MMSE sandwich", 1e-10);
    let mut new_in = Invariant::new(S, "mmse-gerber inside its entropy sandwich", 1e-10);
    let mut memory = Invariant::new(S, "memory-noise <= H(X xor Z)/n", 1e-10);
    let mut memory_iid = Invariant::new(S, "memory-noise = mmse-gerber for i.i.d. noise", 1e-12);
    let mut conditional = Invariant::new(S, "conditional bounds <= H(Y|W)/n", 1e-10);
    let mut per_component = Invariant::new(S, "per-component >= shared order", 1e-12);
    let pmfs = random_pmfs(args.seed, args.budget)?;
    let partners = random_pmfs(args.seed.wrapping_add(1), args.budget)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    for (x, z) in pmfs.iter().zip(&partners) {
        let n = x.n() as f64;
        let (w, _) = worst_case_mmse(x)?;
        for &a in &alphas {
            let a = Probability::noise(a)?;
            let h_y = x.apply_bsc(a).entropy() / n;
            let lo = vector_mmse_gerber(x, a)?.value;
            let m = mgl_vector(x, a)?.value;
            lower.at_most(lo, h_y);
            upper.at_most(h_y, vector_upper(x, a)?.value);
            mgl.at_most(m, h_y);
            let (s_lo, s_hi) = sandwich_mgl(a, 4.0 * w / n)?;
            mgl_in.at_most(s_lo, m);
            mgl_in.at_most(m, s_hi);
            let (s_lo, s_hi) = sandwich_new(a, x.entropy() / n)?;
            new_in.at_most(s_lo, lo);
            new_in.at_most(lo, s_hi);

            let iid = ExplicitPmf::product(&vec![a; x.n()])?;
            memory_iid.close(vector_memory_noise(x, &iid)?.value, lo);

            let weight: f64 = rng.random();
            let family = [(weight, x.clone()), (1.0 - weight, z.clone())];
            let exact = conditional_output_entropy(&family, a)?;
            let shared =
                conditional_vector_mmse_gerber(&family, a, Conditioning::SharedPermutation)?;
            let split = conditional_vector_mmse_gerber(&family, a, Conditioning::PerComponent)?;
            conditional.at_most(shared.value, exact);
            conditional.at_most(split.value, exact);
            per_component.at_most(shared.value, split.value);
        }
        let y = xor_law(x, z)?;
        memory.at_most(vector_memory_noise(x, z)?.value, y.entropy() / n);
    }

    let mut mgl_grid = Invariant::new(S, "MGL sandwich ordered on grid", 1e-15);
    let mut new_grid = Invariant::new(S, "entropy sandwich ordered on grid", 1e-15);
    for a in [0.05, 0.11, 0.3] {
        let a = Probability::noise(a)?;
        for i in 0..=1000 {
            let t = i as f64 / 1000.0;
            let (lo, hi) = sandwich_mgl(a, t)?;
            mgl_grid.at_most(lo, hi);
            let (lo, hi) = sandwich_new(a, t)?;
            new_grid.at_most(lo, hi);
        }
    }
    Ok(vec![
        lower,
        upper,
        mgl,
        mgl_in,
        new_in,
        memory,
        memory_iid,
        conditional,
        per_component,
        mgl_grid,
        new_grid,
    ])
}

const HMM_ALPHAS: [f64; 3] = [0.05, 0.11, 0.25];
const HMM_QS: [f64; 5] = [0.05, 0.1, 0.2, 0.3, 0.45];

pub fn hmm_suite(args: &ValidateArgs) -> CliResult<Vec<Invariant>> {
    const S: &str = "hmm";
    let mut closed = Invariant::new(S, "two-sided MMSE closed form = enumeration", 1e-10);
    for l in 1..=3u32 {
        let mid = l as usize;
        let ends = 1 | 1 << (2 * mid);
        for q in [0.05, 0.2, 0.4] {
            let pmf = ExplicitPmf::markov(2 * mid + 1, p(q)?)?;
            closed.close(mmse_two_sided(l, q)?, pmf.conditional_mmse(mid, ends));
        }
    }

    let mut resum = Invariant::new(S, "series = reverse-order re-summation", 1e-14);
    for i in 1..=50 {
        let q = i as f64 / 100.0;
        let reversed: f64 = series_mmse_terms(q, SERIES_TOL)?.iter().rev().sum();
        resum.close(series_mmse(q, SERIES_TOL)?, reversed);
    }

    let grid: Vec<MarkovHmmParams> = HMM_ALPHAS
        .iter()
        .flat_map(|&a| HMM_QS.iter().map(move |&q| MarkovHmmParams::new(q, a)))
        .collect::<Result<_, _>>()?;
    let seeds = derive_seeds(args.seed, grid.len());
    let per_point = grid
        .par_iter()
        .zip(&seeds)
        .map(|(&params, &seed)| -> CliResult<_> {
            let exact = exact_conditional_entropy(params, 16)?;
            let mc = ow_entropy_rate_mc(params, args.samples, args.burnin, seed)?;
            Ok((params, exact, mc))
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut t5_exact = Invariant::new(S, "theorem5 <= H(Y_16 | Y^15)", 1e-9);
    let mut t6_exact = Invariant::new(S, "theorem6 factor4 <= H(Y_16 | Y^15)", 1e-9);
    let mut t6_mc = Invariant::new(S, "theorem6 factor4 <= MC + 3 sigma", 1e-3);
    let mut roots = Invariant::new(S, "quartic root residuals", 1e-9);
    for (params, exact, mc) in per_point {
        let t6 = theorem6_bound(params, Theorem6Variant::Factor4)?.value;
        t5_exact.at_most(theorem5_bound(params).value, exact);
        t6_exact.at_most(t6, exact);
        t6_mc.at_most(t6, mc.estimate + 3.0 * mc.stderr);
        let poly = QuarticCoefficients::for_params(params)?;
        roots.record(0.0);
        for s in quartic_roots_in_range(params)? {
            roots.record(-poly.residual(s));
        }
    }

    let mut ratio = Invariant::new(S, "small-q ratio increases as q -> 0", 0.0);
    let ratios = [1e-1, 1e-2, 1e-3, 1e-4, 1e-6]
        .iter()
        .map(|&q| small_q_ratio(q))
        .collect::<Result<Vec<_>, _>>()?;
    for w in ratios.windows(2) {
        ratio.at_most(w[0], w[1]);
    }

    let mut dyadic = Invariant::new(S, "dyadic order beats identity, n = 8", 0.0);
    let order = dyadic_permutation(8)?;
    for q in [0.05, 0.1, 0.2] {
        let pmf = ExplicitPmf::markov(8, p(q)?)?;
        dyadic.at_most(
            mmse_along_permutation(&pmf, &Permutation::identity(8))?,
            mmse_along_permutation(&pmf, &order)?,
        );
    }

    let mut crossing = Invariant::new(S, "theorem5 beats MGL exactly below crossing", 0.0);
    for a in HMM_ALPHAS {
        let qc = crossing_q(a)?;
        let gap = |q: f64| -> CliResult<f64> {
            let params = MarkovHmmParams::new(q, a)?;
            let mgl = binary_entropy(binary_convolve(p(a)?, p(q)?));
            Ok(theorem5_bound(params).value - mgl)
        };
        for k in 1..10 {
            crossing.record(gap(qc * k as f64 / 10.0)?);
            crossing.record(-gap(qc + (0.5 - qc) * k as f64 / 10.0)?);
        }
    }
    Ok(vec![
        closed, resum, t5_exact, t6_exact, t6_mc, roots, ratio, dyadic, crossing,
    ])
}

pub fn run_suites(args: &ValidateArgs) -> CliResult<Vec<Invariant>> {
    let mut out = Vec::new();
    let wanted = |s: Suite| args.suite == Suite::All || args.suite == s;
    if wanted(Suite::Scalar) {
        out.extend(scalar_suite(args)?);
    }
    if wanted(Suite::Dist) {
        out.extend(dist_suite(args)?);
    }
    if wanted(Suite::Bounds) {
        out.extend(bounds_suite(args)?);
    }
    if wanted(Suite::Hmm) {
        out.extend(hmm_suite(args)?);
    }
    Ok(out)
}

pub fn run(args: &ValidateArgs) -> CliResult<()> {
    let report = run_suites(args)?;
    let mut text = String::new();
    for inv in &report {
        text.push_str(&inv.line());
        text.push('\n');
    }
    let failed = report.iter().filter(|i| !i.passed()).count();
    text.push_str(&format!(
        "{} of {} invariants passed\n",
        report.len() - failed,
        report.len()
    ));
    emit(&text)?;
    if failed > 0 {
        return Err(CliError::Validation { failed });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(suite: Suite, budget: usize) -> ValidateArgs {
        ValidateArgs {
            suite,
            seed: 1,
            budget,
            samples: 20_000,
            burnin: 5_000,
        }
    }

    #[test]
    fn invariant_bookkeeping() {
        let mut inv = Invariant::new("t", "x", 1e-3);
        assert!(!inv.passed());
        inv.at_most(1.0, 2.0);
        assert!(inv.passed());
        inv.at_most(1.0005, 1.0);
        assert!(inv.passed());
        assert_eq!(inv.worst, 1.0 - 1.0005);
        inv.record(f64::NAN);
        assert!(!inv.passed());
        assert!(inv.line().starts_with("FAIL"));
    }

    #[test]
    fn xor_law_matches_bsc() {
        let x = ExplicitPmf::random(3, 9).unwrap();
        let a = p(0.2).unwrap();
        let z = ExplicitPmf::product(&[a; 3]).unwrap();
        let y = xor_law(&x, &z).unwrap();
        for (u, v) in y.weights().iter().zip(x.apply_bsc(a).weights()) {
            assert!((u - v).abs() < 1e-15);
        }
    }

    #[test]
    fn cheap_suites_pass() {
        for suite in [Suite::Scalar, Suite::Dist, Suite::Bounds] {
            for inv in run_suites(&args(suite, 30)).unwrap() {
                assert!(inv.passed(), "{}", inv.line());
            }
        }
    }
}
