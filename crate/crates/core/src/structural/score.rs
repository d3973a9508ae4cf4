use crate::error::{Error, Result};
use crate::numeric::{NormOrder, Scalar};

/// `h + r − t`, elementwise.
#[inline]
pub fn translation_residual<T: Scalar>(h: &[T], r: &[T], t: &[T]) -> Vec<T> {
    h.iter().zip(r).zip(t).map(|((&a, &b), &c)| a + b - c).collect()
}

#[inline]
pub(crate) fn residual_norm<T: Scalar>(d: &[T], norm: NormOrder) -> T {
    match norm {
        NormOrder::L2 => d.iter().map(|&x| x * x).sum(),
        NormOrder::L1 => d.iter().map(|&x| x.abs()).sum(),
    }
}

/// Translation distance `‖h + r − t‖`: squared L2 for [`NormOrder::L2`],
/// L1 for [`NormOrder::L1`]. Lower means more plausible.
pub fn score<T: Scalar>(h: &[T], r: &[T], t: &[T], norm: NormOrder) -> Result<T> {
    if h.len() != r.len() || r.len() != t.len() {
        return Err(Error::Shape(format!("score needs equal dimensions, got {}/{}/{}", h.len(), r.len(), t.len())));
    }
    Ok(residual_norm(&translation_residual(h, r, t), norm))
}

/// Gradient of the score w.r.t. `h` (and `r`); the tail gradient is its negation.
pub fn score_grad_coeffs<T: Scalar>(residual: &[T], norm: NormOrder) -> Vec<T> {
    let two = T::from_f64(2.0);
    residual
        .iter()
        .map(|&d| match norm {
            NormOrder::L2 => two * d,
            NormOrder::L1 => {
                if d > T::zero() {
                    T::one()
                } else if d < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                }
            }
        })
        .collect()
}

/// Hinge `[margin + pos − neg]₊`.
#[inline]
pub fn margin_term(pos_score: f64, neg_score: f64, margin: f64) -> f64 {
    (margin + pos_score - neg_score).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_translation_scores_zero() {
        assert_eq!(score(&[0.0; 3], &[0.0; 3], &[0.0; 3], NormOrder::L2).unwrap(), 0.0);
        assert_eq!(score(&[1.0, 2.0], &[3.0, -1.0], &[4.0, 1.0], NormOrder::L2).unwrap(), 0.0);
    }

    #[test]
    fn squared_l2_and_l1() {
        let (h, r, t) = ([1.0, 0.0], [0.0, 0.0], [0.0, 1.0]);
        assert_eq!(score(&h, &r, &t, NormOrder::L2).unwrap(), 2.0);
        assert_eq!(score(&h, &r, &t, NormOrder::L1).unwrap(), 2.0);
        assert_eq!(score(&[3.0], &[0.0], &[0.0], NormOrder::L2).unwrap(), 9.0);
        assert_eq!(score(&[3.0], &[0.0], &[0.0], NormOrder::L1).unwrap(), 3.0);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(score(&[1.0], &[1.0, 2.0], &[0.0], NormOrder::L2), Err(Error::Shape(_))));
    }

    #[test]
    fn hinge_cases() {
        assert_eq!(margin_term(0.0, 2.0, 1.0), 0.0);
        assert_eq!(margin_term(1.0, 1.0, 1.0), 1.0);
        assert!((margin_term(0.5, 0.2, 1.0) - 1.3).abs() < 1e-12);
    }

    #[test]
    fn l1_gradient_is_sign() {
        assert_eq!(score_grad_coeffs(&[2.0, -0.5, 0.0], NormOrder::L1), vec![1.0, -1.0, 0.0]);
        assert_eq!(score_grad_coeffs(&[2.0, -0.5], NormOrder::L2), vec![4.0, -1.0]);
    }

    proptest! {
        #[test]
        fn hinge_nonnegative_and_zero_iff_separated(p in -5.0f64..5.0, n in -5.0f64..5.0, m in 0.0f64..3.0) {
            let v = margin_term(p, n, m);
            prop_assert!(v >= 0.0);
            prop_assert_eq!(v == 0.0, n >= p + m);
        }

        #[test]
        fn l2_score_symmetric_under_reversal(
            v in proptest::collection::vec(-3.0f64..3.0, 12)
        ) {
            let (h, r, t) = (&v[0..4], &v[4..8], &v[8..12]);
            let neg_r: Vec<f64> = r.iter().map(|x| -x).collect();
            let a = score(h, r, t, NormOrder::L2).unwrap();
            let b = score(t, &neg_r, h, NormOrder::L2).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
