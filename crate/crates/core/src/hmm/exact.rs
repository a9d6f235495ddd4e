use super::MarkovHmmParams;
use crate::error::{Error, Result};
use crate::scalar::{conv, h};

pub const MAX_EXACT_LEN: usize = 20;

/// `H(Y_n | Y_1, .., Y_{n-1})` by running the two-state forward filter over
/// every observation prefix. Nonincreasing in `n` and an upper bound on the
/// entropy rate.
pub fn exact_conditional_entropy(params: MarkovHmmParams, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("sequence length must be at least 1"));
    }
    if n > MAX_EXACT_LEN {
        return Err(Error::DimensionTooLarge {
            n,
            cap: MAX_EXACT_LEN,
        });
    }
    let mut acc = 0.0;
    descend(&params, n - 1, 1.0, 0.5, &mut acc);
    Ok(acc)
}

/// `predicted` is `P(X_k = 1 | y_1..y_{k-1})`, `mass` is `P(y_1..y_{k-1})`.
fn descend(params: &MarkovHmmParams, remaining: usize, mass: f64, predicted: f64, acc: &mut f64) {
    let alpha = params.alpha();
    let p_one = conv(predicted, alpha);
    if remaining == 0 {
        *acc += mass * h(p_one);
        return;
    }
    for (y, p_y) in [(false, 1.0 - p_one), (true, p_one)] {
        if p_y <= 0.0 {
            continue;
        }
        let like_one = if y { 1.0 - alpha } else { alpha };
        let filtered = (predicted * like_one / p_y).clamp(0.0, 1.0);
        descend(
            params,
            remaining - 1,
            mass * p_y,
            conv(filtered, params.q()),
            acc,
        );
    }
}
