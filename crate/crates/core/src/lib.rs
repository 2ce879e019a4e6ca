//! Weak Euler-Maruyama approximation of high-dimensional SDEs driven by
//! orthogonal-system increments.
//!
//! The usual Euler scheme for `dX_t = b(X_t) dt + sigma(X_t) dW_t` consumes a
//! d-dimensional Gaussian vector per time step. For weak approximation of
//! order one the Gaussian can be replaced by any increment whose first three
//! mixed moments match those of `sqrt(dt) N(0, I)`:
//!
//! ```text
//!   E[dZ^j]           = 0
//!   E[dZ^j1 dZ^j2]    = dt * delta(j1, j2)
//!   E[dZ^j1 dZ^j2 dZ^j3] = 0
//! ```
//!
//! This crate builds such increments from a *single* uniform word per time
//! step using two discrete orthogonal systems:
//!
//! * scaled Haar functions on `{1, ..., 2^K}`, and
//! * Walsh products `tau_S = prod_{i in S} tau_i` of i.i.d. signs, indexed by
//!   odd-cardinality subsets `S` of `{1, ..., K}`.
//!
//! The Walsh route needs a bijection from `{1, ..., 2^(K-1)}` onto the
//! odd-cardinality subsets. [`orthogonal::phi_gray`] supplies one with a
//! cheap one-bit-update recurrence and the "odd ordered" prefix property
//! that keeps moment conditions valid for every dimension `d <= 2^(K-1)`;
//! [`orthogonal::phi_bitmask`] supplies the popcount-then-value ordering as
//! a contrast case that loses the prefix property once `K >= 4`.
//!
//! On top of the increment generators sit:
//!
//! * an Euler-Maruyama engine with built-in drift/diffusion models
//!   ([`sde`]),
//! * exact moment oracles that enumerate all `2^K` atoms of a mimicking
//!   increment ([`moments`]),
//! * a deterministic Monte Carlo harness whose results are bit-identical
//!   for any thread count ([`mc`]).

pub mod error;
pub mod generators;
pub mod mc;
pub mod moments;
pub mod numeric;
pub mod orthogonal;
pub mod sde;
pub mod source;

pub use error::{Error, Result};
pub use generators::{
    default_k, DrawCount, GeneratorSpec, Increment, IncrementGenerator, SchemeKind,
};
pub use mc::{McConfig, McResult};
pub use moments::{BiasFormula, MomentReport};
pub use orthogonal::{HaarIndex, IndexSet, SignVector};
pub use sde::{EmState, SdeModel, TestFunction};
pub use source::UniformSource;
