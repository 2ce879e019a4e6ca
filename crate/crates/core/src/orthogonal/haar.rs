//! Scaled Haar indicator functions on the finite set `{1, ..., 2^K}`.
//!
//! For `j` in `{1, ..., 2^(K-1)}` the function is
//!
//! ```text
//!   h_j(x) = +2^((K-1)/2)  if x = 2j - 1,
//!            -2^((K-1)/2)  if x = 2j,
//!            0             otherwise.
//! ```
//!
//! Distinct indices have disjoint supports, so under a uniform point `U` on
//! `{1, ..., 2^K}` a product `h_{j_1}(U) ... h_{j_p}(U)` has expectation
//! `2^((p-2)(K-1)/2)` when `p` is even and all indices coincide, and `0`
//! otherwise.

use super::walsh::MAX_K;
use crate::error::{Error, Result};
use crate::numeric::{pow2, sqrt_pow2};

/// Index of one scaled Haar function: level `K` plus position
/// `index` in `{1, ..., 2^(K-1)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HaarIndex {
    k: u32,
    index: u64,
}

impl HaarIndex {
    pub fn new(k: u32, index: u64) -> Result<Self> {
        if k == 0 || k > MAX_K {
            return Err(Error::domain(format!("K must be in 1..={MAX_K}, got {k}")));
        }
        if index == 0 || index > 1 << (k - 1) {
            return Err(Error::domain(format!(
                "Haar index must be in 1..={}, got {index}",
                1u64 << (k - 1)
            )));
        }
        Ok(Self { k, index })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Peak height `2^((K-1)/2)`.
    pub fn peak(&self) -> f64 {
        sqrt_pow2(self.k - 1)
    }
}

/// Evaluates `h_index` at a point `x` of `{1, ..., 2^K}`.
pub fn haar_value(idx: HaarIndex, x: u64) -> Result<f64> {
    if x == 0 || x > 1 << idx.k() {
        return Err(Error::domain(format!(
            "point must be in 1..={}, got {x}",
            1u64 << idx.k()
        )));
    }
    if x == 2 * idx.index() - 1 {
        Ok(idx.peak())
    } else if x == 2 * idx.index() {
        Ok(-idx.peak())
    } else {
        Ok(0.0)
    }
}

/// `E[h_{j_1}(U) ... h_{j_p}(U)]` for a uniform `U` on `{1, ..., 2^K}`.
pub fn haar_product_moment(k: u32, indices: &[u64]) -> Result<f64> {
    for &j in indices {
        HaarIndex::new(k, j)?;
    }
    let p = indices.len() as u32;
    if p == 0 {
        return Ok(1.0);
    }
    if p % 2 == 1 || indices.iter().any(|&j| j != indices[0]) {
        return Ok(0.0);
    }
    let exponent = (p - 2) * (k - 1) / 2;
    Ok(pow2(exponent as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    /// Exact average of the product over all 2^K points.
    fn brute_force_moment(k: u32, indices: &[u64]) -> f64 {
        let points = 1u64 << k;
        let mut total = 0.0;
        for x in 1..=points {
            let mut prod = 1.0;
            for &j in indices {
                prod *= haar_value(HaarIndex::new(k, j).unwrap(), x).unwrap();
            }
            total += prod;
        }
        total / points as f64
    }

    #[test]
    fn values_at_level_two() {
        let h1 = HaarIndex::new(2, 1).unwrap();
        assert_eq!(haar_value(h1, 1).unwrap(), SQRT_2);
        assert_eq!(haar_value(h1, 2).unwrap(), -SQRT_2);
        assert_eq!(haar_value(h1, 3).unwrap(), 0.0);
        assert_eq!(haar_value(h1, 4).unwrap(), 0.0);
        let h2 = HaarIndex::new(2, 2).unwrap();
        assert_eq!(haar_value(h2, 3).unwrap(), SQRT_2);
        assert_eq!(haar_value(h2, 4).unwrap(), -SQRT_2);
    }

    #[test]
    fn rejects_out_of_range_arguments() {
        assert!(HaarIndex::new(0, 1).is_err());
        assert!(HaarIndex::new(3, 0).is_err());
        assert!(HaarIndex::new(3, 5).is_err());
        let h = HaarIndex::new(3, 1).unwrap();
        assert!(haar_value(h, 0).is_err());
        assert!(haar_value(h, 9).is_err());
        assert!(haar_product_moment(3, &[1, 5]).is_err());
    }

    #[test]
    fn peak_height_is_sqrt_of_half_the_points() {
        assert_eq!(HaarIndex::new(1, 1).unwrap().peak(), 1.0);
        assert_eq!(HaarIndex::new(2, 1).unwrap().peak(), SQRT_2);
        assert_eq!(HaarIndex::new(3, 2).unwrap().peak(), 2.0);
        assert_eq!(HaarIndex::new(5, 7).unwrap().peak(), 4.0);
    }

    #[test]
    fn moment_formula_examples() {
        assert_eq!(haar_product_moment(3, &[1, 1]).unwrap(), 1.0);
        assert_eq!(haar_product_moment(3, &[1, 1, 1, 1]).unwrap(), 4.0);
        assert_eq!(haar_product_moment(3, &[1, 1, 1]).unwrap(), 0.0);
        assert_eq!(haar_product_moment(3, &[1, 2]).unwrap(), 0.0);
        assert_eq!(haar_product_moment(3, &[1, 1, 2, 2]).unwrap(), 0.0);
        assert_eq!(haar_product_moment(4, &[]).unwrap(), 1.0);
    }

    #[test]
    fn moment_formula_matches_enumeration() {
        for k in 1..=4u32 {
            let top = 1u64 << (k - 1);
            for j1 in 1..=top {
                for j2 in 1..=top {
                    for len in [2usize, 3, 4] {
                        let mut indices = vec![j1; len];
                        indices[len - 1] = j2;
                        let formula = haar_product_moment(k, &indices).unwrap();
                        let enumerated = brute_force_moment(k, &indices);
                        assert!(
                            (formula - enumerated).abs() <= 1e-12 * formula.abs().max(1.0),
                            "K={k} indices={indices:?}: {formula} vs {enumerated}"
                        );
                    }
                }
            }
        }
    }
}
