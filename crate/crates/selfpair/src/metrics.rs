//! Pixelwise agreement metrics between change masks: IoU and F1 with
//! foreground as the positive class.

use crate::error::{Error, Result};
use crate::raster::SemanticMask;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn merge(&self, other: &ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
            tn: self.tn + other.tn,
        }
    }
}

pub fn confusion(pred: &SemanticMask, gt: &SemanticMask) -> Result<ConfusionCounts> {
    if !pred.same_shape(gt) {
        return Err(Error::DimensionMismatch(format!(
            "confusion: {}x{} vs {}x{}",
            pred.height(),
            pred.width(),
            gt.height(),
            gt.width()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        match (p, g) {
            (1, 1) => c.tp += 1,
            (1, 0) => c.fp += 1,
            (0, 1) => c.fn_ += 1,
            _ => c.tn += 1,
        }
    }
    Ok(c)
}

/// Intersection over union; 1.0 when there are no positives anywhere.
pub fn iou(c: &ConfusionCounts) -> f64 {
    let denom = c.tp + c.fp + c.fn_;
    if denom == 0 {
        1.0
    } else {
        c.tp as f64 / denom as f64
    }
}

/// F1 score; 1.0 when there are no positives anywhere.
pub fn f1(c: &ConfusionCounts) -> f64 {
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        1.0
    } else {
        2.0 * c.tp as f64 / denom as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_agreement() {
        let m = SemanticMask::new(2, 2, vec![1, 1, 0, 1]).unwrap();
        let c = confusion(&m, &m).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_, c.tn), (3, 0, 0, 1));
        assert_eq!(iou(&c), 1.0);
        assert_eq!(f1(&c), 1.0);
    }

    #[test]
    fn all_missed() {
        let pred = SemanticMask::zeros(2, 2).unwrap();
        let gt = SemanticMask::new(2, 2, vec![1, 1, 1, 0]).unwrap();
        let c = confusion(&pred, &gt).unwrap();
        assert_eq!(c.fn_, 3);
        assert_eq!(c.tp, 0);
    }

    #[test]
    fn worked_two_by_two() {
        let pred = SemanticMask::new(2, 2, vec![1, 1, 0, 0]).unwrap();
        let gt = SemanticMask::new(2, 2, vec![1, 0, 1, 0]).unwrap();
        let c = confusion(&pred, &gt).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_, c.tn), (1, 1, 1, 1));
        assert!((iou(&c) - 1.0 / 3.0).abs() < 1e-12);
        assert!((f1(&c) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_vs_empty_is_one_by_convention() {
        let c = ConfusionCounts {
            tn: 16,
            ..Default::default()
        };
        assert_eq!(iou(&c), 1.0);
        assert_eq!(f1(&c), 1.0);
    }

    proptest! {
        #[test]
        fn f1_iou_identity(tp in 0u64..10_000, fp in 0u64..10_000, fn_ in 0u64..10_000) {
            let c = ConfusionCounts { tp, fp, fn_, tn: 1 };
            let i = iou(&c);
            let f = f1(&c);
            prop_assert!((f - 2.0 * i / (1.0 + i)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&i));
            prop_assert!((0.0..=1.0).contains(&f));
        }

        #[test]
        fn swap_symmetry(data_a in proptest::collection::vec(0u8..=1, 16),
                         data_b in proptest::collection::vec(0u8..=1, 16)) {
            let a = SemanticMask::new(4, 4, data_a).unwrap();
            let b = SemanticMask::new(4, 4, data_b).unwrap();
            let ab = confusion(&a, &b).unwrap();
            let ba = confusion(&b, &a).unwrap();
            // fp and fn swap; iou and f1 are invariant
            prop_assert_eq!(ab.fp, ba.fn_);
            prop_assert_eq!(iou(&ab), iou(&ba));
            prop_assert_eq!(f1(&ab), f1(&ba));
        }
    }
}
