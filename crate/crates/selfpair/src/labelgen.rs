//! Pseudo change-label construction: the xor of two semantic masks and the
//! erase specialization used by the inpainting strategy.

use crate::error::{Error, Result};
use crate::raster::SemanticMask;

/// Per-pixel xor of two masks: changed wherever the semantics differ.
pub fn xor_change(a: &SemanticMask, b: &SemanticMask) -> Result<SemanticMask> {
    if !a.same_shape(b) {
        return Err(Error::DimensionMismatch(format!(
            "xor_change: {}x{} vs {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )));
    }
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| x ^ y)
        .collect();
    SemanticMask::new(a.width(), a.height(), data)
}

/// Change mask for object erasure: exactly the pixels of erased objects.
/// `kept` is 1 outside the erased objects, so label AND kept is what survives.
pub fn erase_change(label: &SemanticMask, kept: &SemanticMask) -> Result<SemanticMask> {
    if !label.same_shape(kept) {
        return Err(Error::DimensionMismatch(format!(
            "erase_change: {}x{} vs {}x{}",
            label.height(),
            label.width(),
            kept.height(),
            kept.width()
        )));
    }
    let surviving = SemanticMask::new(
        label.width(),
        label.height(),
        label
            .data()
            .iter()
            .zip(kept.data())
            .map(|(&l, &k)| l & k)
            .collect(),
    )?;
    xor_change(label, &surviving)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use proptest::prelude::*;

    fn mask_from(rows: &[&[u8]]) -> SemanticMask {
        let h = rows.len();
        let w = rows[0].len();
        SemanticMask::new(w, h, rows.concat()).unwrap()
    }

    #[test]
    fn xor_of_equal_masks_is_zero() {
        let a = mask_from(&[&[1, 0], &[0, 1]]);
        assert!(xor_change(&a, &a).unwrap().is_empty_foreground());
    }

    #[test]
    fn xor_truth_table() {
        let a = mask_from(&[&[1, 0], &[0, 1]]);
        let b = mask_from(&[&[1, 1], &[0, 0]]);
        assert_eq!(xor_change(&a, &b).unwrap(), mask_from(&[&[0, 1], &[0, 1]]));
    }

    #[test]
    fn xor_with_zero_is_identity() {
        let b = mask_from(&[&[1, 1], &[0, 1]]);
        let zero = SemanticMask::zeros(2, 2).unwrap();
        assert_eq!(xor_change(&zero, &b).unwrap(), b);
    }

    #[test]
    fn xor_rejects_dimension_mismatch() {
        let a = SemanticMask::zeros(2, 2).unwrap();
        let b = SemanticMask::zeros(3, 2).unwrap();
        assert!(matches!(
            xor_change(&a, &b),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn erase_endpoints() {
        let label = mask_from(&[&[1, 1], &[0, 1]]);
        let ones = mask_from(&[&[1, 1], &[1, 1]]);
        let zeros = SemanticMask::zeros(2, 2).unwrap();
        assert!(erase_change(&label, &ones).unwrap().is_empty_foreground());
        assert_eq!(erase_change(&label, &zeros).unwrap(), label);
    }

    #[test]
    fn erase_selects_exactly_the_dropped_instance() {
        // I1 = 3 px block at top-left, I2 = 5 px column on the right
        let label = mask_from(&[
            &[1, 1, 0, 0, 1],
            &[1, 0, 0, 0, 1],
            &[0, 0, 0, 0, 1],
            &[0, 0, 0, 0, 1],
            &[0, 0, 0, 0, 1],
        ]);
        // keep I1, erase I2
        let kept = mask_from(&[
            &[1, 1, 1, 1, 0],
            &[1, 1, 1, 1, 0],
            &[1, 1, 1, 1, 0],
            &[1, 1, 1, 1, 0],
            &[1, 1, 1, 1, 0],
        ]);
        let change = erase_change(&label, &kept).unwrap();
        // set-difference oracle: label foreground minus kept foreground
        let expect: Vec<u8> = label
            .data()
            .iter()
            .zip(kept.data())
            .map(|(&l, &k)| l & (1 - k))
            .collect();
        assert_eq!(change.data(), &expect[..]);
        assert_eq!(change.count_foreground(), 5);
    }

    fn arb_mask_pair(max: usize) -> impl Strategy<Value = (SemanticMask, SemanticMask)> {
        (1..=max, 1..=max).prop_flat_map(|(w, h)| {
            (
                proptest::collection::vec(0u8..=1, w * h),
                proptest::collection::vec(0u8..=1, w * h),
            )
                .prop_map(move |(a, b)| {
                    (
                        SemanticMask::new(w, h, a).unwrap(),
                        SemanticMask::new(w, h, b).unwrap(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn xor_is_commutative_and_self_inverse((a, b) in arb_mask_pair(16)) {
            let ab = xor_change(&a, &b).unwrap();
            let ba = xor_change(&b, &a).unwrap();
            prop_assert_eq!(&ab, &ba);
            prop_assert_eq!(xor_change(&ab, &b).unwrap(), a);
        }

        #[test]
        fn xor_count_matches_union_minus_intersection((a, b) in arb_mask_pair(16)) {
            let change = xor_change(&a, &b).unwrap();
            let union = a.data().iter().zip(b.data()).filter(|&(&x, &y)| (x | y) == 1).count();
            let inter = a.data().iter().zip(b.data()).filter(|&(&x, &y)| (x & y) == 1).count();
            prop_assert_eq!(change.count_foreground(), union - inter);
        }

        #[test]
        fn erase_output_is_subset_of_label((label, kept) in arb_mask_pair(16)) {
            let change = erase_change(&label, &kept).unwrap();
            for (c, l) in change.data().iter().zip(label.data()) {
                prop_assert!(c <= l);
            }
        }

        #[test]
        fn xor_is_associative(wh in (1usize..=8, 1usize..=8), seed in 0u64..1000) {
            let (w, h) = wh;
            let mut rng = derive_rng(seed, 0);
            let mk = |rng: &mut crate::rng::SeededRng| {
                SemanticMask::new(w, h, (0..w*h).map(|_| (rng.next_u64() & 1) as u8).collect()).unwrap()
            };
            let (a, b, c) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
            let left = xor_change(&xor_change(&a, &b).unwrap(), &c).unwrap();
            let right = xor_change(&a, &xor_change(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }
    }
}
