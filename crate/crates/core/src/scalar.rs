//! Scalar primitives: binary entropy, its inverse, binary convolution.

use std::f64::consts::LOG2_E;
use std::fmt;

use crate::error::{Error, Result};

/// A real number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const HALF: Probability = Probability(0.5);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain(format!(
                "probability {value} is outside [0, 1]"
            )))
        }
    }

    /// A crossover / transition parameter, which must additionally be `<= 1/2`.
    pub fn noise(value: f64) -> Result<Self> {
        if (0.0..=0.5).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain(format!(
                "noise parameter {value} is outside [0, 1/2]"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Probability(1.0 - self.0)
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

/// Binary entropy in bits, `0 log 0 = 0`.
pub fn binary_entropy(p: Probability) -> f64 {
    h(p.0)
}

/// Unchecked binary entropy for internal use. Arguments outside `[0, 1]`
/// produce NaN.
#[inline]
pub(crate) fn h(p: f64) -> f64 {
    if p == 0.0 || p == 1.0 {
        return 0.0;
    }
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// The unique `p` in `[0, 1/2]` with `h(p) = u`.
pub fn inv_binary_entropy(u: f64) -> Result<Probability> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::domain(format!("entropy {u} is outside [0, 1]")));
    }
    Ok(Probability(h_inv(u)))
}

pub(crate) fn h_inv(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 0.5;
    }
    // h is increasing on [0, 1/2]; 100 halvings leave a bracket far below 1e-12.
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if h(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `a * b = a(1-b) + b(1-a)`: the flip probability of the XOR of independent
/// Bernoulli(a) and Bernoulli(b) bits.
pub fn binary_convolve(a: Probability, b: Probability) -> Probability {
    Probability(conv(a.0, b.0).clamp(0.0, 1.0))
}

#[inline]
pub(crate) fn conv(a: f64, b: f64) -> f64 {
    a * (1.0 - b) + b * (1.0 - a)
}

/// Partial sum of the expansion of `h(1/2 + p/2)` around `1/2`:
/// `1 - sum_{k=1..terms} log2(e) / (2k(2k-1)) * p^(2k)`.
pub fn entropy_taylor(p_offset: f64, terms: usize) -> Result<f64> {
    if !(p_offset.abs() <= 1.0) {
        return Err(Error::domain(format!(
            "Taylor offset {p_offset} has |p| > 1"
        )));
    }
    if terms == 0 {
        return Err(Error::domain("Taylor expansion needs at least one term"));
    }
    let p2 = p_offset * p_offset;
    let mut power = 1.0;
    let mut sum = 0.0;
    for k in 1..=terms {
        power *= p2;
        let k = k as f64;
        sum += power / (2.0 * k * (2.0 * k - 1.0));
    }
    Ok(1.0 - LOG2_E * sum)
}

#[inline]
pub(crate) fn logistic(w: f64) -> f64 {
    if w >= 0.0 {
        1.0 / (1.0 + (-w).exp())
    } else {
        let e = w.exp();
        e / (1.0 + e)
    }
}
