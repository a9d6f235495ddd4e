//! Symmetric first-order Markov source observed through a BSC.
//!
//! The source is `X_1 ~ Bern(1/2)`, `X_m = X_{m-1} xor W_m` with `W_m` i.i.d.
//! Bernoulli(q); the observation is `Y_m = X_m xor Z_m` with `Z_m` i.i.d.
//! Bernoulli(alpha).

mod exact;
mod ow;

pub use exact::{exact_conditional_entropy, MAX_EXACT_LEN};
pub use ow::{
    f_max, f_star, g_of_f, ow_entropy_rate_mc, ow_entropy_rate_mc_streams, ow_f,
    quartic_roots_in_range, theorem6_bound, McEstimate, OwProcess, OwState, QuarticCoefficients,
    Theorem6Variant, DEFAULT_BURNIN,
};

use crate::bounds::BoundResult;
use crate::dist::Permutation;
use crate::error::{Error, Result};
use crate::scalar::{conv, h, Probability};

/// Default truncation tolerance for [`series_mmse`].
pub const SERIES_TOL: f64 = 1e-16;

/// Transition probability `q` and crossover probability `alpha`, both in
/// `[0, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovHmmParams {
    q: f64,
    alpha: f64,
}

impl MarkovHmmParams {
    pub fn new(q: f64, alpha: f64) -> Result<Self> {
        let q = Probability::noise(q)
            .map_err(|_| Error::domain(format!("transition q = {q} is outside [0, 1/2]")))?;
        let alpha = Probability::noise(alpha)
            .map_err(|_| Error::domain(format!("crossover alpha = {alpha} is outside [0, 1/2]")))?;
        Ok(MarkovHmmParams {
            q: q.value(),
            alpha: alpha.value(),
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `alpha * q`, the flip probability from `X_{i}` to `Y_{i+1}`.
    pub fn effective_noise(&self) -> f64 {
        conv(self.alpha, self.q)
    }

    pub(crate) fn inputs(&self) -> Vec<(&'static str, f64)> {
        vec![("alpha", self.alpha), ("q", self.q)]
    }
}

fn check_q(q: f64) -> Result<f64> {
    Ok(Probability::noise(q)?.value())
}

/// `Pr(X_{n+k} != X_n) = (1 - (1 - 2q)^k) / 2`.
pub fn disagreement_prob(k: u32, q: f64) -> Result<f64> {
    let q = check_q(q)?;
    Ok(disagreement(k, q))
}

fn disagreement(k: u32, q: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    -0.5 * (k as f64 * (-2.0 * q).ln_1p()).exp_m1()
}

/// `MMSE(X_n | X_{n-l}, X_{n+l}) = (1/4) (1 - (1-2q)^{2l}) / (1 + (1-2q)^{2l})`.
pub fn mmse_two_sided(l: u32, q: f64) -> Result<f64> {
    let q = check_q(q)?;
    if l == 0 {
        return Err(Error::domain("two-sided MMSE needs a gap of at least 1"));
    }
    // (1 - c^m) / (1 + c^m) = tanh(-m ln(c) / 2)
    Ok(0.25 * (-(l as f64) * (-2.0 * q).ln_1p()).tanh())
}

/// The same quantity assembled from disagreement probabilities: neighbours
/// that differ leave `P_l(1 - P_l) / P_{2l}` on both outcomes, neighbours that
/// agree leave `P_l^2 (1 - P_l)^2 / (1 - P_{2l})^2` as the product.
pub fn mmse_two_sided_from_disagreement(l: u32, q: f64) -> Result<f64> {
    let q = check_q(q)?;
    if l == 0 {
        return Err(Error::domain("two-sided MMSE needs a gap of at least 1"));
    }
    let pl = disagreement(l, q);
    let p2l = disagreement(2 * l, q);
    let spread = pl * (1.0 - pl);
    let differ = if p2l > 0.0 {
        p2l * (spread / p2l).powi(2)
    } else {
        0.0
    };
    let agree = (1.0 - p2l) * (spread / (1.0 - p2l)).powi(2);
    Ok(differ + agree)
}

/// The dyadic refinement order `(n, n/2, n/4, 3n/4, n/8, 3n/8, ..)` for
/// `n = 2^m`.
pub fn dyadic_permutation(n: usize) -> Result<Permutation> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::domain(format!(
            "dyadic order needs a power of two, got {n}"
        )));
    }
    let mut order = vec![n];
    let mut denom = 2;
    while denom <= n {
        let step = n / denom;
        order.extend((1..denom).step_by(2).map(|r| r * step));
        denom *= 2;
    }
    Permutation::from_one_based(&order)
}

/// Lower bound on `4 MMSE_pi(X) / n` for the dyadic order of length
/// `n = 2^m`: `2 sum_{t=0}^{m-1} 2^{-t} MMSE(2^t)`.
pub fn dyadic_truncated_bound(n: usize, q: f64) -> Result<f64> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::domain(format!(
            "dyadic bound needs a power of two >= 2, got {n}"
        )));
    }
    let m = n.trailing_zeros();
    let mut total = 0.0;
    for t in 0..m {
        total += 2f64.powi(-(t as i32)) * mmse_two_sided(1 << t, q)?;
    }
    Ok(2.0 * total)
}

/// Terms `2^{-t} (1 - (1-2q)^{2^t}) / (1 + (1-2q)^{2^t})` for `t = 1..=T`,
/// with `T` the first index whose geometric tail `2^{-T}` is below `tol`.
pub fn series_mmse_terms(q: f64, tol: f64) -> Result<Vec<f64>> {
    let q = check_q(q)?;
    if !(tol > 0.0) {
        return Err(Error::domain("series tolerance must be positive"));
    }
    let log_c = (-2.0 * q).ln_1p();
    let mut terms = Vec::new();
    let mut weight = 1.0;
    let mut t = 0;
    loop {
        t += 1;
        weight *= 0.5;
        terms.push(weight * (-(2f64.powi(t - 1)) * log_c).tanh());
        if weight < tol {
            return Ok(terms);
        }
    }
}

/// `sum_{t>=1} 2^{-t} (1 - (1-2q)^{2^t}) / (1 + (1-2q)^{2^t})`, the limiting
/// dyadic lower bound on `4 MMSE / n`.
pub fn series_mmse(q: f64, tol: f64) -> Result<f64> {
    Ok(series_mmse_terms(q, tol)?.iter().sum())
}

/// `h(alpha) + (1 - h(alpha)) * series_mmse(q)`.
pub fn theorem5_bound(params: MarkovHmmParams) -> BoundResult {
    let ha = h(params.alpha);
    let s = series_mmse(params.q, SERIES_TOL).expect("validated q");
    BoundResult::scalar("theorem5", ha + (1.0 - ha) * s, params.inputs())
}

/// `theorem5_bound - h(alpha * q)`.
fn advantage_over_mgl(alpha: f64, q: f64) -> f64 {
    let params = MarkovHmmParams { q, alpha };
    theorem5_bound(params).value - h(conv(alpha, q))
}

const CROSSING_LO: f64 = 1e-6;
const CROSSING_HI: f64 = 0.5 - 1e-6;
const CROSSING_SCAN: usize = 512;

/// The transition probability below which the series bound beats Mrs.
/// Gerber's Lemma for a Markov source, located by bisection.
pub fn crossing_q(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::domain(format!(
            "crossing point needs 0 < alpha < 1/2, got {alpha}"
        )));
    }
    let sign = |q: f64| {
        let d = advantage_over_mgl(alpha, q);
        if d.abs() < 1e-13 {
            0
        } else if d > 0.0 {
            1
        } else {
            -1
        }
    };
    let mut changes = 0;
    let mut last = 0;
    for i in 0..CROSSING_SCAN {
        let q = CROSSING_LO + (CROSSING_HI - CROSSING_LO) * i as f64 / (CROSSING_SCAN - 1) as f64;
        let s = sign(q);
        if s != 0 {
            if last != 0 && s != last {
                changes += 1;
            }
            last = s;
        }
    }
    if changes > 1 {
        return Err(Error::MultipleCrossings { count: changes });
    }
    let (mut lo, mut hi) = (CROSSING_LO, CROSSING_HI);
    if advantage_over_mgl(alpha, lo) <= 0.0 || advantage_over_mgl(alpha, hi) > 0.0 {
        return Err(Error::domain(format!(
            "no sign change found for alpha = {alpha}"
        )));
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if advantage_over_mgl(alpha, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `series_mmse(q) / h(q)`; tends to one as `q -> 0`.
pub fn small_q_ratio(q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 0.5) {
        return Err(Error::domain(format!("ratio needs 0 < q <= 1/2, got {q}")));
    }
    Ok(series_mmse(q, SERIES_TOL)? / h(q))
}

/// `h(q^{*m} * alpha)`, the ceiling on order-`m` Cover-Thomas bounds, with
/// `q^{*m} = (1 - (1-2q)^m) / 2`.
pub fn cover_thomas_ceiling(params: MarkovHmmParams, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::domain("Cover-Thomas order must be at least 1"));
    }
    Ok(h(conv(disagreement(m, params.q), params.alpha)))
}

/// `h(alpha) - (1-2alpha)^2 / (1-alpha) * q log2(q)`.
pub fn now05_bound(params: MarkovHmmParams) -> Result<f64> {
    let (q, a) = (params.q, params.alpha);
    if !(q > 0.0 && q < 0.5) {
        return Err(Error::domain(format!(
            "comparison bound needs 0 < q < 1/2, got {q}"
        )));
    }
    Ok(h(a) - (1.0 - 2.0 * a).powi(2) / (1.0 - a) * q * q.log2())
}
