//! Discrete orthogonal systems used to build moment-matching increments.
//!
//! Two families are provided:
//!
//! * scaled Haar indicator functions on the finite set `{1, ..., 2^K}`
//!   ([`haar`]),
//! * Walsh sign products over K i.i.d. symmetric signs ([`walsh`]), together
//!   with the index bijections that pick out odd-cardinality subsets
//!   ([`gray`]).

pub mod gray;
pub mod haar;
pub mod walsh;

pub use gray::{eta, is_odd_ordered, phi_bitmask, phi_gray, psi, theta, GrayPhiIter};
pub use haar::{haar_product_moment, haar_value, HaarIndex};
pub use walsh::{tau_eval, walsh_product_expectation, IndexSet, SignVector, MAX_K};
