//! Entropy bounds for binary processes observed through a binary symmetric
//! channel, stated in terms of the MMSE predictability of the input.
//!
//! The crate is organised bottom-up:
//!
//! * [`scalar`] holds the binary entropy function, its inverse on `[0, 1/2]`,
//!   binary convolution and the Taylor expansion of `h` around `1/2`.
//! * [`dist`] is the exact layer: joint pmfs on `{0,1}^n`, permutation-ordered
//!   MMSE sums and exhaustive / greedy permutation search. Everything else is
//!   checked against it.
//! * [`bounds`] evaluates Mrs. Gerber's Lemma, the MMSE lower bounds (scalar,
//!   vector, conditional, memory noise), the MMSE upper bound and the sandwich
//!   inequalities relating them.
//! * [`hmm`] specialises to a symmetric Markov source seen through a BSC:
//!   closed-form two-sided MMSE, the dyadic ordering, the series lower bound on
//!   the entropy rate, the auto-regressive log-likelihood representation and a
//!   Monte Carlo / forward-recursion oracle for the entropy rate.
//!
//! Bit convention: index `i` of an [`ExplicitPmf`] encodes `(x_1, .., x_n)`
//! with `x_1` as the least significant bit. Entropies are in bits.

// `!(x >= 0.0)` style guards are used to reject NaN along with the range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod dist;
mod error;
pub mod hmm;
pub mod scalar;

pub use bounds::BoundResult;
pub use dist::{ExplicitPmf, Permutation};
pub use error::{Error, Result};
pub use hmm::MarkovHmmParams;
pub use scalar::Probability;
