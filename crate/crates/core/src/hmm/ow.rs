//! Entropy rate through the auto-regressive log-likelihood process
//! `W_i = R_i ln((1-alpha)/alpha) + S_i f(W_{i-1})`, and the MMSE lower bound
//! built on the support of `e^{f(W)}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::MarkovHmmParams;
use crate::bounds::BoundResult;
use crate::error::{Error, Result};
use crate::scalar::{conv, h, logistic};

/// Steps discarded before averaging when callers have no preference.
pub const DEFAULT_BURNIN: usize = 100_000;

const ROOT_CELLS: usize = 4096;

/// `f(t) = ln((e^t (1-q) + q) / (q e^t + (1-q)))`.
pub fn ow_f(t: f64, q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 0.5) {
        return Err(Error::domain(format!("f needs 0 < q <= 1/2, got {q}")));
    }
    if !t.is_finite() {
        return Err(Error::domain("f needs a finite argument"));
    }
    Ok(f_unchecked(t, q))
}

#[inline]
fn f_unchecked(t: f64, q: f64) -> f64 {
    if t < 0.0 {
        return -f_unchecked(-t, q);
    }
    let e = (-t).exp();
    ((1.0 - q) + q * e).ln() - (q + (1.0 - q) * e).ln()
}

/// One state of the log-likelihood process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OwState {
    pub w: f64,
}

impl OwState {
    /// `e^w / (1 + e^w)`.
    pub fn posterior(&self) -> f64 {
        logistic(self.w)
    }

    /// `h(posterior * q * alpha)`, the entropy of the next observation.
    pub fn next_symbol_entropy(&self, params: &MarkovHmmParams) -> f64 {
        h(conv(self.posterior(), params.effective_noise()))
    }
}

/// The recursion `W_i = R_i ln(eta) + S_i f(W_{i-1})` from `W_0 = 0`, with
/// `R_i = -1` w.p. `alpha` and `S_i = -1` w.p. `q`. Requires `alpha, q > 0`.
#[derive(Debug, Clone)]
pub struct OwProcess {
    params: MarkovHmmParams,
    log_eta: f64,
    w: f64,
    rng: ChaCha8Rng,
}

impl OwProcess {
    pub fn new(params: MarkovHmmParams, seed: u64) -> Result<Self> {
        if params.alpha() <= 0.0 || params.q() <= 0.0 {
            return Err(Error::domain("log-likelihood process needs alpha, q > 0"));
        }
        Ok(OwProcess {
            params,
            log_eta: ((1.0 - params.alpha()) / params.alpha()).ln(),
            w: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn state(&self) -> OwState {
        OwState { w: self.w }
    }

    /// `e^{f(w)}` for the current state.
    pub fn current_f(&self) -> f64 {
        f_unchecked(self.w, self.params.q()).exp()
    }
}

impl Iterator for OwProcess {
    type Item = OwState;

    fn next(&mut self) -> Option<OwState> {
        let r = if self.rng.random::<f64>() < self.params.alpha() {
            -1.0
        } else {
            1.0
        };
        let s = if self.rng.random::<f64>() < self.params.q() {
            -1.0
        } else {
            1.0
        };
        self.w = r * self.log_eta + s * f_unchecked(self.w, self.params.q());
        Some(OwState { w: self.w })
    }
}

/// Sample mean and standard error of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    /// From the sample variance; the chain is autocorrelated, so this
    /// understates the true error.
    pub stderr: f64,
    pub samples: usize,
}

/// Entropy rate `E h(logistic(W) * q * alpha)` averaged along one simulated
/// path after `burnin` steps. `alpha = 0` and `q = 0` return the exact rates
/// `h(q)` and `h(alpha)`.
pub fn ow_entropy_rate_mc(
    params: MarkovHmmParams,
    samples: usize,
    burnin: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::domain("Monte Carlo needs at least one sample"));
    }
    let exact = |value| McEstimate {
        estimate: value,
        stderr: 0.0,
        samples,
    };
    if params.alpha() == 0.0 {
        return Ok(exact(h(params.q())));
    }
    if params.q() == 0.0 {
        return Ok(exact(h(params.alpha())));
    }
    let mut process = OwProcess::new(params, seed)?;
    for _ in 0..burnin {
        process.next();
    }
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, state) in process.take(samples).enumerate() {
        let x = state.next_symbol_entropy(&params);
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    let var = if samples > 1 {
        m2 / (samples - 1) as f64
    } else {
        0.0
    };
    Ok(McEstimate {
        estimate: mean,
        stderr: (var / samples as f64).sqrt(),
        samples,
    })
}

/// Independent streams, one per seed, run in parallel and averaged.
pub fn ow_entropy_rate_mc_streams(
    params: MarkovHmmParams,
    samples_per_stream: usize,
    burnin: usize,
    seeds: &[u64],
) -> Result<McEstimate> {
    if seeds.is_empty() {
        return Err(Error::domain("at least one stream seed is required"));
    }
    let runs = seeds
        .par_iter()
        .map(|&s| ow_entropy_rate_mc(params, samples_per_stream, burnin, s))
        .collect::<Result<Vec<_>>>()?;
    let k = runs.len() as f64;
    Ok(McEstimate {
        estimate: runs.iter().map(|r| r.estimate).sum::<f64>() / k,
        stderr: runs.iter().map(|r| r.stderr * r.stderr).sum::<f64>().sqrt() / k,
        samples: runs.iter().map(|r| r.samples).sum(),
    })
}

fn check_open(params: &MarkovHmmParams) -> Result<()> {
    if params.alpha() > 0.0 && params.q() > 0.0 {
        Ok(())
    } else {
        Err(Error::domain("needs alpha, q in (0, 1/2]"))
    }
}

fn eta(params: &MarkovHmmParams) -> f64 {
    (1.0 - params.alpha()) / params.alpha()
}

/// Right end of the interval `[1/F_max, F_max]` containing the support of
/// `e^{f(W)}`; the positive fixed point of `F -> e^{f(ln(eta F))}`.
pub fn f_max(params: MarkovHmmParams) -> Result<f64> {
    check_open(&params)?;
    let (q, eta) = (params.q(), eta(&params));
    let a = (eta - 1.0) * (1.0 - q);
    Ok((a + (4.0 * eta * q * q + a * a).sqrt()) / (2.0 * eta * q))
}

/// `g(F) = (1 - alpha*q) eta F / (1 + eta F)^2 + (alpha*q) (F/eta) / (1 + F/eta)^2`,
/// the conditional MMSE of the source bit given `F = e^{f(W_{i-1})}`.
pub fn g_of_f(f: f64, params: MarkovHmmParams) -> Result<f64> {
    check_open(&params)?;
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::domain(format!("g needs F > 0, got {f}")));
    }
    Ok(g_unchecked(f, &params))
}

fn g_unchecked(f: f64, params: &MarkovHmmParams) -> f64 {
    let eta = eta(params);
    let beta = params.effective_noise();
    let bump = |x: f64| x / ((1.0 + x) * (1.0 + x));
    (1.0 - beta) * bump(eta * f) + beta * bump(f / eta)
}

/// Coefficients of the quartic whose roots are the stationary points of `g`.
/// The polynomial is the negative of
/// `(eta - s)(1 + eta s)^3 - K (eta s - 1)(eta + s)^3`, `K = (1 - b)/b`,
/// `b = alpha*q`, so `sign(g'(s)) = -sign(p(s))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCoefficients {
    pub c4: f64,
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    pub eta: f64,
}

impl QuarticCoefficients {
    pub fn for_params(params: MarkovHmmParams) -> Result<Self> {
        let (eta, b) = Self::check(&params)?;
        let k = (1.0 - b) / b;
        let e2 = eta * eta;
        let e4 = e2 * e2;
        Ok(QuarticCoefficients {
            c4: eta * (k + e2),
            c3: 3.0 * e2 / b - e4 - k,
            c2: 3.0 * eta * (1.0 - 2.0 * b) / b * (e2 - 1.0),
            c1: k * e4 + 1.0 - 3.0 * e2 / b,
            c0: -eta * (1.0 + k * e2),
            eta,
        })
    }

    /// The coefficients with the cubic term printed as `3 eta^2/b - eta^4 - eta`.
    /// That term does not match the expansion; kept for comparison only.
    pub fn as_printed(params: MarkovHmmParams) -> Result<Self> {
        let mut c = Self::for_params(params)?;
        c.c3 = 3.0 * c.eta * c.eta / params.effective_noise() - c.eta.powi(4) - c.eta;
        Ok(c)
    }

    fn check(params: &MarkovHmmParams) -> Result<(f64, f64)> {
        let (a, q) = (params.alpha(), params.q());
        if !(a > 0.0 && a < 0.5 && q > 0.0 && q < 0.5) {
            return Err(Error::domain(format!(
                "quartic needs alpha, q in (0, 1/2), got alpha = {a}, q = {q}"
            )));
        }
        Ok((eta(params), params.effective_noise()))
    }

    pub fn eval(&self, s: f64) -> f64 {
        (((self.c4 * s + self.c3) * s + self.c2) * s + self.c1) * s + self.c0
    }

    pub fn norm(&self) -> f64 {
        [self.c4, self.c3, self.c2, self.c1, self.c0]
            .iter()
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt()
    }

    /// `|p(s)| / ||c||`.
    pub fn residual(&self, s: f64) -> f64 {
        self.eval(s).abs() / self.norm()
    }

    /// Sign of `g'(s)` implied by the quartic.
    pub fn derivative_sign(&self, s: f64) -> f64 {
        let v = self.eval(s);
        if v == 0.0 {
            0.0
        } else {
            -v.signum()
        }
    }
}

/// Real roots of the stationary-point quartic in `[1, F_max)`: sign changes on
/// a uniform 4096-cell grid, each refined by bisection.
pub fn quartic_roots_in_range(params: MarkovHmmParams) -> Result<Vec<f64>> {
    let poly = QuarticCoefficients::for_params(params)?;
    let hi = f_max(params)?;
    let mut roots = Vec::new();
    if hi <= 1.0 {
        return Ok(roots);
    }
    let at = |k: usize| 1.0 + (hi - 1.0) * k as f64 / ROOT_CELLS as f64;
    let mut left = poly.eval(1.0);
    if left == 0.0 {
        roots.push(1.0);
    }
    for k in 0..ROOT_CELLS {
        let (a, b) = (at(k), at(k + 1));
        let right = poly.eval(b);
        if right == 0.0 && k + 1 < ROOT_CELLS {
            roots.push(b);
        } else if left * right < 0.0 {
            roots.push(bisect(&poly, a, b, left));
        }
        left = right;
    }
    Ok(roots)
}

fn bisect(poly: &QuarticCoefficients, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if b - a <= 1e-12 * mid.abs().max(1.0) || mid == a || mid == b {
            break;
        }
        let fm = poly.eval(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// The minimiser `F*` of `g` over the interior stationary points in
/// `[1, F_max)` together with `F_max`.
pub fn f_star(params: MarkovHmmParams) -> Result<f64> {
    let fm = f_max(params)?;
    if params.alpha() >= 0.5 || params.q() >= 0.5 {
        // F_max collapses to 1 (q = 1/2) or g is flat in the mixture (alpha = 1/2);
        // the interval [1, F_max] is handled by comparing its endpoints.
        return Ok(if g_unchecked(1.0, &params) <= g_unchecked(fm, &params) {
            1.0
        } else {
            fm
        });
    }
    let mut best = (fm, g_unchecked(fm, &params));
    for s in quartic_roots_in_range(params)? {
        let g = g_unchecked(s, &params);
        if g < best.1 {
            best = (s, g);
        }
    }
    Ok(best.0)
}

/// How the MMSE term enters the bound built on `F*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Theorem6Variant {
    /// `h(alpha*q) + (1 - h(alpha*q)) 4 g(F*)`, the scalar MMSE lemma applied
    /// to `MMSE >= g(F*)`.
    #[default]
    Factor4,
    /// `h(alpha*q) + (1 - h(alpha*q)) g(F*)`.
    AsPrinted,
}

impl Theorem6Variant {
    pub fn name(self) -> &'static str {
        match self {
            Theorem6Variant::Factor4 => "factor4",
            Theorem6Variant::AsPrinted => "printed",
        }
    }

    fn factor(self) -> f64 {
        match self {
            Theorem6Variant::Factor4 => 4.0,
            Theorem6Variant::AsPrinted => 1.0,
        }
    }
}

/// Lower bound on the entropy rate from `MMSE(X | W) >= g(F*)`.
/// At `q = 0` or `alpha = 0` the limiting value (`h(alpha)` resp. `h(q)`) is
/// returned.
pub fn theorem6_bound(params: MarkovHmmParams, variant: Theorem6Variant) -> Result<BoundResult> {
    let beta = params.effective_noise();
    let hb = h(beta);
    let (value, g_star) = if params.q() == 0.0 || params.alpha() == 0.0 {
        (hb, 0.0)
    } else {
        let g = g_unchecked(f_star(params)?, &params);
        (hb + (1.0 - hb) * variant.factor() * g, g)
    };
    let mut inputs = params.inputs();
    inputs.push(("g_star", g_star));
    Ok(BoundResult {
        variant: Some(variant.name()),
        ..BoundResult::scalar("theorem6", value, inputs)
    })
}
