//! Walsh sign products.
//!
//! Let `tau_1, ..., tau_K` be i.i.d. uniform signs in `{-1, +1}`. For a
//! subset `S` of `{1, ..., K}` the Walsh product is
//!
//! ```text
//!   tau_S = prod_{i in S} tau_i,        tau_{} = 1.
//! ```
//!
//! The family `{tau_S}` is orthonormal: `E[tau_S tau_S'] = 1` if `S = S'`
//! and `0` otherwise. More generally a product `tau_S1 ... tau_Sp` collapses
//! to `tau_D` where `D` is the symmetric difference of the sets, so its
//! expectation is `1` exactly when the symmetric difference is empty.
//!
//! Subsets are stored as bitmasks: bit `i-1` of the mask set means index
//! `i` is a member. A sign assignment is stored the same way, bit `i-1` set
//! meaning `tau_i = -1`.

use crate::error::{Error, Result};

/// Largest supported ground-set size; masks must fit in a u64.
pub const MAX_K: u32 = 63;

fn check_k(k: u32) -> Result<()> {
    if k == 0 || k > MAX_K {
        return Err(Error::domain(format!("K must be in 1..={MAX_K}, got {k}")));
    }
    Ok(())
}

/// Subset of `{1, ..., K}` stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct IndexSet {
    mask: u64,
    k: u32,
}

impl IndexSet {
    pub fn new(mask: u64, k: u32) -> Result<Self> {
        check_k(k)?;
        if k < 64 && mask >> k != 0 {
            return Err(Error::domain(format!(
                "mask {mask:#b} has bits above position K={k}"
            )));
        }
        Ok(Self { mask, k })
    }

    pub fn empty(k: u32) -> Result<Self> {
        Self::new(0, k)
    }

    /// Builds a set from 1-based element labels.
    pub fn from_elements(k: u32, elements: &[u32]) -> Result<Self> {
        check_k(k)?;
        let mut mask = 0u64;
        for &e in elements {
            if e == 0 || e > k {
                return Err(Error::domain(format!("element {e} outside 1..={k}")));
            }
            mask |= 1 << (e - 1);
        }
        Self::new(mask, k)
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> u32 {
        self.mask.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn has_odd_cardinality(&self) -> bool {
        self.len() % 2 == 1
    }

    /// Membership of the 1-based index `i`.
    pub fn contains(&self, i: u32) -> bool {
        i >= 1 && i <= self.k && self.mask >> (i - 1) & 1 == 1
    }

    pub fn symmetric_difference(&self, other: &IndexSet) -> Result<IndexSet> {
        if self.k != other.k {
            return Err(Error::domain(format!(
                "ground sets differ: K={} vs K={}",
                self.k, other.k
            )));
        }
        IndexSet::new(self.mask ^ other.mask, self.k)
    }

    /// Iterates the 1-based element labels in increasing order.
    pub fn elements(&self) -> impl Iterator<Item = u32> + '_ {
        (1..=self.k).filter(move |&i| self.contains(i))
    }
}

impl std::fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (pos, e) in self.elements().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}/{}", self.k)
    }
}

/// Assignment of K signs, bit `i-1` set meaning `tau_i = -1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignVector {
    bits: u64,
    k: u32,
}

impl SignVector {
    pub fn new(bits: u64, k: u32) -> Result<Self> {
        check_k(k)?;
        if k < 64 && bits >> k != 0 {
            return Err(Error::domain(format!(
                "sign bits {bits:#b} have bits above position K={k}"
            )));
        }
        Ok(Self { bits, k })
    }

    /// Builds a sign vector from explicit `+1`/`-1` entries.
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let k = signs.len() as u32;
        check_k(k)?;
        let mut bits = 0u64;
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => {}
                -1 => bits |= 1 << i,
                other => return Err(Error::domain(format!("sign must be +1 or -1, got {other}"))),
            }
        }
        Self::new(bits, k)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Sign of the 1-based coordinate `i`, as `+1` or `-1`.
    pub fn sign(&self, i: u32) -> i32 {
        if self.bits >> (i - 1) & 1 == 1 {
            -1
        } else {
            1
        }
    }
}

/// Evaluates `tau_S` at a concrete sign assignment.
pub fn tau_eval(set: &IndexSet, signs: &SignVector) -> Result<i32> {
    if set.k() != signs.k() {
        return Err(Error::domain(format!(
            "set over K={} evaluated at K={} signs",
            set.k(),
            signs.k()
        )));
    }
    if (set.mask() & signs.bits()).count_ones() % 2 == 1 {
        Ok(-1)
    } else {
        Ok(1)
    }
}

/// `E[tau_S1 ... tau_Sp]` for any finite list of sets over the same ground
/// set: `1` when the symmetric difference of all sets is empty, else `0`.
pub fn walsh_product_expectation(sets: &[IndexSet]) -> Result<f64> {
    let mut acc: Option<IndexSet> = None;
    for set in sets {
        acc = Some(match acc {
            None => *set,
            Some(prev) => prev.symmetric_difference(set)?,
        });
    }
    match acc {
        None => Ok(1.0),
        Some(d) => Ok(if d.is_empty() { 1.0 } else { 0.0 }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Average of the evaluated product over all 2^K sign assignments,
    /// using integer arithmetic so the result is exact.
    fn brute_force_expectation(sets: &[IndexSet], k: u32) -> f64 {
        let mut total: i64 = 0;
        for bits in 0..1u64 << k {
            let signs = SignVector::new(bits, k).unwrap();
            let mut prod = 1i64;
            for s in sets {
                prod *= tau_eval(s, &signs).unwrap() as i64;
            }
            total += prod;
        }
        total as f64 / (1u64 << k) as f64
    }

    #[test]
    fn index_set_basics() {
        let s = IndexSet::from_elements(4, &[1, 3]).unwrap();
        assert_eq!(s.mask(), 0b101);
        assert_eq!(s.len(), 2);
        assert!(s.contains(1));
        assert!(!s.contains(2));
        assert!(s.contains(3));
        assert_eq!(s.elements().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(format!("{s:?}"), "{1,3}/4");
    }

    #[test]
    fn index_set_rejects_bad_input() {
        assert!(IndexSet::new(0b10000, 4).is_err());
        assert!(IndexSet::new(0, 0).is_err());
        assert!(IndexSet::new(0, 64).is_err());
        assert!(IndexSet::from_elements(4, &[5]).is_err());
        assert!(IndexSet::from_elements(4, &[0]).is_err());
    }

    #[test]
    fn symmetric_difference_xors_masks() {
        let a = IndexSet::from_elements(4, &[1, 2]).unwrap();
        let b = IndexSet::from_elements(4, &[2, 3]).unwrap();
        let d = a.symmetric_difference(&b).unwrap();
        assert_eq!(d.mask(), 0b101);
        let e = IndexSet::from_elements(5, &[1]).unwrap();
        assert!(a.symmetric_difference(&e).is_err());
    }

    #[test]
    fn sign_vector_round_trip() {
        let v = SignVector::from_signs(&[1, -1, 1, -1]).unwrap();
        assert_eq!(v.bits(), 0b1010);
        assert_eq!(v.sign(1), 1);
        assert_eq!(v.sign(2), -1);
        assert_eq!(v.sign(4), -1);
        assert!(SignVector::from_signs(&[0]).is_err());
        assert!(SignVector::new(0b100, 2).is_err());
    }

    #[test]
    fn tau_of_empty_set_is_one() {
        let empty = IndexSet::empty(5).unwrap();
        for bits in 0..32 {
            let signs = SignVector::new(bits, 5).unwrap();
            assert_eq!(tau_eval(&empty, &signs).unwrap(), 1);
        }
    }

    #[test]
    fn tau_eval_matches_explicit_product() {
        let s = IndexSet::from_elements(4, &[2, 3, 4]).unwrap();
        let signs = SignVector::from_signs(&[1, -1, -1, 1]).unwrap();
        assert_eq!(tau_eval(&s, &signs).unwrap(), 1);
        let signs = SignVector::from_signs(&[1, -1, 1, 1]).unwrap();
        assert_eq!(tau_eval(&s, &signs).unwrap(), -1);
    }

    #[test]
    fn pair_expectation_is_orthonormality() {
        let k = 5;
        for m1 in 0..1u64 << k {
            for m2 in 0..1u64 << k {
                let a = IndexSet::new(m1, k).unwrap();
                let b = IndexSet::new(m2, k).unwrap();
                let expected = if m1 == m2 { 1.0 } else { 0.0 };
                assert_eq!(walsh_product_expectation(&[a, b]).unwrap(), expected);
            }
        }
    }

    #[test]
    fn product_expectation_examples() {
        let k = 4;
        let s1 = IndexSet::from_elements(k, &[1]).unwrap();
        let s2 = IndexSet::from_elements(k, &[2]).unwrap();
        let s12 = IndexSet::from_elements(k, &[1, 2]).unwrap();
        assert_eq!(walsh_product_expectation(&[s1, s2, s12]).unwrap(), 1.0);
        assert_eq!(walsh_product_expectation(&[s1, s2]).unwrap(), 0.0);
        assert_eq!(walsh_product_expectation(&[]).unwrap(), 1.0);
        assert_eq!(walsh_product_expectation(&[s1]).unwrap(), 0.0);
        assert_eq!(walsh_product_expectation(&[s12, s12]).unwrap(), 1.0);
    }

    #[test]
    fn expectation_matches_brute_force_exhaustively_for_small_k() {
        let k = 3;
        for m1 in 0..1u64 << k {
            for m2 in 0..1u64 << k {
                for m3 in 0..1u64 << k {
                    let sets = [
                        IndexSet::new(m1, k).unwrap(),
                        IndexSet::new(m2, k).unwrap(),
                        IndexSet::new(m3, k).unwrap(),
                    ];
                    assert_eq!(
                        walsh_product_expectation(&sets).unwrap(),
                        brute_force_expectation(&sets, k),
                    );
                }
            }
        }
    }

    proptest! {
        #[test]
        fn tau_factorizes_over_symmetric_difference(
            m1 in 0u64..256,
            m2 in 0u64..256,
            bits in 0u64..256,
        ) {
            let k = 8;
            let a = IndexSet::new(m1, k).unwrap();
            let b = IndexSet::new(m2, k).unwrap();
            let d = a.symmetric_difference(&b).unwrap();
            let signs = SignVector::new(bits, k).unwrap();
            prop_assert_eq!(
                tau_eval(&d, &signs).unwrap(),
                tau_eval(&a, &signs).unwrap() * tau_eval(&b, &signs).unwrap()
            );
        }

        #[test]
        fn expectation_rule_matches_brute_force(
            masks in proptest::collection::vec(0u64..64, 0..6),
        ) {
            let k = 6;
            let sets: Vec<IndexSet> =
                masks.iter().map(|&m| IndexSet::new(m, k).unwrap()).collect();
            prop_assert_eq!(
                walsh_product_expectation(&sets).unwrap(),
                brute_force_expectation(&sets, k)
            );
        }
    }
}
