//! Bijections from `{1, ..., 2^(K-1)}` onto the odd-cardinality subsets of
//! `{1, ..., K}`.
//!
//! Walsh increments need one subset per coordinate, and the moment
//! conditions survive truncation to any dimension `d <= 2^(K-1)` only if the
//! enumeration is *odd ordered*: for every level `k <= K` its first
//! `2^(k-1)` subsets must be exactly the odd-cardinality subsets of
//! `{1, ..., k}`.
//!
//! [`phi_gray`] is such an enumeration. It starts at `{1}` and each step
//! toggles membership of `1` and of one further index [`theta`], so a
//! sampler can update a running sign with two bit probes per coordinate.
//! Unrolling the toggles shows `phi_gray(j)` is the binary reflected Gray
//! code of `2j - 1`, which gives the closed form used here.
//!
//! [`psi`] extends the walk to all subsets: `psi(1)` is empty and step `j`
//! toggles the single index [`eta`]. It satisfies `psi(2j) = phi_gray(j)`
//! and the level-doubling identity
//! `psi(2^(l-1) + j) = psi(j) xor {l-1, l}`.
//!
//! [`phi_bitmask`] enumerates the same subsets ordered by cardinality and
//! then by mask value. It is odd ordered only for `K <= 3`, which makes it
//! the natural foil when measuring what the prefix property buys.

use super::walsh::IndexSet;
use crate::error::{Error, Result};
use crate::numeric::binomial;

/// Largest level accepted by [`is_odd_ordered`], which walks all
/// `2^(K-1)` positions and marks seen masks.
pub const MAX_ODD_ORDER_CHECK_K: u32 = 24;

fn gray(m: u64) -> u64 {
    m ^ (m >> 1)
}

fn check_j(j: u64, limit: u64) -> Result<()> {
    if j == 0 || j > limit {
        return Err(Error::domain(format!(
            "index must be in 1..={limit}, got {j}"
        )));
    }
    Ok(())
}

/// Second index toggled between `phi_gray(j-1)` and `phi_gray(j)`. The
/// usual piecewise statement (`2` for even `j`, trailing zeros of `j-1`
/// plus `2` for odd `j`) collapses to one expression, since an even `j`
/// leaves `j-1` with no trailing zeros.
pub fn theta(j: u64) -> Result<u32> {
    if j < 2 {
        return Err(Error::domain(format!(
            "theta is defined for j >= 2, got {j}"
        )));
    }
    Ok((j - 1).trailing_zeros() + 2)
}

/// Index toggled between `psi(j-1)` and `psi(j)`, one less than
/// [`theta`] at every position.
pub fn eta(j: u64) -> Result<u32> {
    if j < 2 {
        return Err(Error::domain(format!("eta is defined for j >= 2, got {j}")));
    }
    Ok((j - 1).trailing_zeros() + 1)
}

/// Odd-ordered enumeration of the odd-cardinality subsets of
/// `{1, ..., K}`: the Gray code of `2j - 1`.
pub fn phi_gray(j: u64, k: u32) -> Result<IndexSet> {
    IndexSet::new(0, k)?;
    check_j(j, 1 << (k - 1))?;
    IndexSet::new(gray(2 * j - 1), k)
}

/// Single-toggle walk through all subsets of `{1, ..., K}`: the Gray code
/// of `j - 1`, defined for `j` in `{1, ..., 2^K}`.
pub fn psi(j: u64, k: u32) -> Result<IndexSet> {
    IndexSet::new(0, k)?;
    check_j(j, 1 << k)?;
    IndexSet::new(gray(j - 1), k)
}

/// Iterator form of [`phi_gray`] that applies the two-toggle recurrence
/// instead of evaluating the closed form, yielding
/// `phi_gray(1), ..., phi_gray(2^(K-1))`.
pub struct GrayPhiIter {
    k: u32,
    mask: u64,
    next_j: u64,
    limit: u64,
}

impl GrayPhiIter {
    pub fn new(k: u32) -> Result<Self> {
        IndexSet::new(0, k)?;
        Ok(Self {
            k,
            mask: 1,
            next_j: 1,
            limit: 1 << (k - 1),
        })
    }
}

impl Iterator for GrayPhiIter {
    type Item = IndexSet;

    fn next(&mut self) -> Option<IndexSet> {
        if self.next_j > self.limit {
            return None;
        }
        if self.next_j > 1 {
            let toggle = (self.next_j - 1).trailing_zeros() + 1;
            self.mask ^= 1 | (1 << toggle);
        }
        self.next_j += 1;
        Some(IndexSet::new(self.mask, self.k).expect("recurrence stays within level"))
    }
}

/// Enumeration of the odd-cardinality subsets ordered by cardinality and
/// then by increasing mask value: the `K` singletons first, then all
/// three-element subsets, and so on.
pub fn phi_bitmask(j: u64, k: u32) -> Result<IndexSet> {
    IndexSet::new(0, k)?;
    check_j(j, 1 << (k - 1))?;
    let mut rank = j - 1;
    let mut card = 1u32;
    loop {
        let class_size = binomial(k, card);
        if rank < class_size {
            break;
        }
        rank -= class_size;
        card += 2;
    }
    let mut mask = 0u64;
    for pick in (1..=card).rev() {
        let mut m = pick - 1;
        while binomial(m + 1, pick) <= rank {
            m += 1;
        }
        mask |= 1 << m;
        rank -= binomial(m, pick);
    }
    IndexSet::new(mask, k)
}

/// First `count` masks of the [`phi_bitmask`] order, produced by stepping
/// through each cardinality class in increasing mask value.
pub fn bitmask_order_masks(k: u32, count: usize) -> Result<Vec<u64>> {
    IndexSet::new(0, k)?;
    if count as u64 > 1 << (k - 1) {
        return Err(Error::domain(format!(
            "requested {count} masks but level {k} has only {}",
            1u64 << (k - 1)
        )));
    }
    let mut masks = Vec::with_capacity(count);
    let mut card = 1u32;
    while masks.len() < count {
        let mut mask = (1u64 << card) - 1;
        while masks.len() < count && mask < 1 << k {
            masks.push(mask);
            let low = mask & mask.wrapping_neg();
            let carry = mask + low;
            mask = (((carry ^ mask) >> 2) / low) | carry;
        }
        card += 2;
    }
    Ok(masks)
}

/// Checks the odd-ordered property of an enumeration
/// `map: {1, ..., 2^(K-1)} -> subsets`: every prefix of length `2^(k-1)`
/// must consist of exactly the odd-cardinality subsets of `{1, ..., k}`.
pub fn is_odd_ordered<F>(mut map: F, k: u32) -> Result<bool>
where
    F: FnMut(u64) -> Result<IndexSet>,
{
    IndexSet::new(0, k)?;
    if k > MAX_ODD_ORDER_CHECK_K {
        return Err(Error::capacity(format!(
            "odd-order check walks 2^(K-1) positions; K={k} exceeds {MAX_ODD_ORDER_CHECK_K}"
        )));
    }
    let mut seen = vec![false; 1 << k];
    for j in 1..=1u64 << (k - 1) {
        let mask = map(j)?.mask();
        if mask >= 1 << k {
            return Ok(false);
        }
        if mask.count_ones() % 2 == 0 || seen[mask as usize] {
            return Ok(false);
        }
        seen[mask as usize] = true;
        let level = if j == 1 {
            1
        } else {
            64 - (j - 1).leading_zeros() + 1
        };
        if level < k && mask >> level != 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask_of(f: impl Fn(u64) -> Result<IndexSet>, j: u64) -> u64 {
        f(j).unwrap().mask()
    }

    #[test]
    fn theta_and_eta_openers() {
        let theta_seq: Vec<u32> = (2..=9).map(|j| theta(j).unwrap()).collect();
        assert_eq!(theta_seq, vec![2, 3, 2, 4, 2, 3, 2, 5]);
        let eta_seq: Vec<u32> = (2..=9).map(|j| eta(j).unwrap()).collect();
        assert_eq!(eta_seq, vec![1, 2, 1, 3, 1, 2, 1, 4]);
        assert!(theta(1).is_err());
        assert!(eta(0).is_err());
    }

    #[test]
    fn phi_gray_level_three_walk() {
        let masks: Vec<u64> = (1..=4).map(|j| mask_of(|j| phi_gray(j, 3), j)).collect();
        assert_eq!(masks, vec![0b001, 0b010, 0b111, 0b100]);
        assert_eq!(
            phi_gray(4, 3).unwrap().elements().collect::<Vec<_>>(),
            vec![3]
        );
        assert!(phi_gray(5, 3).is_err());
        assert!(phi_gray(0, 3).is_err());
    }

    #[test]
    fn phi_gray_matches_two_toggle_recurrence() {
        for k in [1u32, 2, 5, 10] {
            let mut mask = 1u64;
            for j in 1..=1u64 << (k - 1) {
                if j > 1 {
                    mask ^= 1 | (1 << (theta(j).unwrap() - 1));
                }
                assert_eq!(mask, mask_of(|j| phi_gray(j, k), j), "k={k} j={j}");
            }
        }
    }

    #[test]
    fn gray_phi_iter_agrees_with_closed_form() {
        for k in [1u32, 3, 8, 12] {
            let from_iter: Vec<u64> = GrayPhiIter::new(k).unwrap().map(|s| s.mask()).collect();
            let direct: Vec<u64> = (1..=1u64 << (k - 1))
                .map(|j| mask_of(|j| phi_gray(j, k), j))
                .collect();
            assert_eq!(from_iter, direct);
        }
    }

    #[test]
    fn phi_gray_is_a_bijection_onto_odd_subsets() {
        for k in 1..=10u32 {
            let mut seen = vec![false; 1 << k];
            for j in 1..=1u64 << (k - 1) {
                let mask = mask_of(|j| phi_gray(j, k), j);
                assert_eq!(mask.count_ones() % 2, 1);
                assert!(!seen[mask as usize]);
                seen[mask as usize] = true;
            }
        }
    }

    #[test]
    fn psi_single_toggle_walk() {
        let masks: Vec<u64> = (1..=4).map(|j| mask_of(|j| psi(j, 2), j)).collect();
        assert_eq!(masks, vec![0b00, 0b01, 0b11, 0b10]);
        assert!(psi(1, 3).unwrap().is_empty());
        assert_eq!(mask_of(|j| psi(j, 3), 6), 0b111);
        assert!(psi(9, 3).is_err());
    }

    #[test]
    fn psi_matches_eta_recurrence() {
        for k in [2u32, 4, 9] {
            let mut mask = 0u64;
            for j in 1..=1u64 << k {
                if j > 1 {
                    mask ^= 1 << (eta(j).unwrap() - 1);
                }
                assert_eq!(mask, mask_of(|j| psi(j, k), j), "k={k} j={j}");
            }
        }
    }

    #[test]
    fn psi_at_even_positions_is_phi_gray() {
        for k in 1..=10u32 {
            for j in 1..=1u64 << (k - 1) {
                assert_eq!(
                    psi(2 * j, k).unwrap().mask(),
                    phi_gray(j, k).unwrap().mask()
                );
            }
        }
    }

    #[test]
    fn psi_level_doubling_identity() {
        for l in 2..=10u32 {
            let k = l;
            let toggles = (1u64 << (l - 1)) | (1 << (l - 2));
            for j in 1..=1u64 << (l - 1) {
                assert_eq!(
                    psi((1 << (l - 1)) + j, k).unwrap().mask(),
                    psi(j, k).unwrap().mask() ^ toggles
                );
            }
        }
    }

    #[test]
    fn phi_bitmask_level_four_walk() {
        let masks: Vec<u64> = (1..=8).map(|j| mask_of(|j| phi_bitmask(j, 4), j)).collect();
        assert_eq!(masks, vec![1, 2, 4, 8, 7, 11, 13, 14]);
        assert_eq!(
            phi_bitmask(5, 4).unwrap().elements().collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
        assert!(phi_bitmask(9, 4).is_err());
    }

    #[test]
    fn phi_bitmask_is_a_bijection_onto_odd_subsets() {
        for k in 1..=10u32 {
            let mut seen = vec![false; 1 << k];
            for j in 1..=1u64 << (k - 1) {
                let mask = mask_of(|j| phi_bitmask(j, k), j);
                assert_eq!(mask.count_ones() % 2, 1);
                assert!(!seen[mask as usize]);
                seen[mask as usize] = true;
            }
        }
    }

    #[test]
    fn bitmask_order_table_matches_pointwise_unranking() {
        for k in [1u32, 3, 4, 7] {
            let count = 1usize << (k - 1);
            let table = bitmask_order_masks(k, count).unwrap();
            for (i, &mask) in table.iter().enumerate() {
                assert_eq!(mask, mask_of(|j| phi_bitmask(j, k), i as u64 + 1));
            }
        }
        assert!(bitmask_order_masks(3, 5).is_err());
    }

    #[test]
    fn gray_map_is_odd_ordered_through_level_sixteen() {
        for k in 1..=16u32 {
            assert!(is_odd_ordered(|j| phi_gray(j, k), k).unwrap(), "k={k}");
        }
    }

    #[test]
    fn bitmask_map_is_odd_ordered_only_below_level_four() {
        for k in 1..=3u32 {
            assert!(is_odd_ordered(|j| phi_bitmask(j, k), k).unwrap());
        }
        for k in 4..=10u32 {
            assert!(!is_odd_ordered(|j| phi_bitmask(j, k), k).unwrap(), "k={k}");
        }
    }

    #[test]
    fn odd_order_check_rejects_duplicates_and_even_sets() {
        let k = 3;
        assert!(!is_odd_ordered(|_| IndexSet::new(0b001, k), k).unwrap());
        assert!(!is_odd_ordered(|_| IndexSet::new(0b011, k), k).unwrap());
        assert!(is_odd_ordered(|j| phi_gray(j, 30), 30).is_err());
    }

    proptest! {
        #[test]
        fn phi_gray_consecutive_sets_differ_by_one_and_theta(
            j in 2u64..(1 << 15),
        ) {
            let k = 16;
            let prev = phi_gray(j - 1, k).unwrap();
            let next = phi_gray(j, k).unwrap();
            let expected = 1 | (1u64 << (theta(j).unwrap() - 1));
            prop_assert_eq!(prev.mask() ^ next.mask(), expected);
        }

        #[test]
        fn psi_is_injective_on_random_pairs(
            a in 1u64..=(1 << 12),
            b in 1u64..=(1 << 12),
        ) {
            let k = 12;
            if a != b {
                prop_assert_ne!(psi(a, k).unwrap().mask(), psi(b, k).unwrap().mask());
            }
        }
    }
}
