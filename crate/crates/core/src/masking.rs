//! Ideal amplitude mask, mask application and the signal-approximation loss.

use ndarray::{Array2, Zip};

use crate::dsp::MagnitudePlane;
use crate::error::{Error, Result};

/// Denominator floor for the ideal amplitude mask.
pub const IAM_EPSILON: f64 = 1e-8;
/// Ceiling applied to the ideal amplitude mask.
pub const IAM_CEILING: f64 = 10.0;

/// Non-negative time-frequency gain plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask(Array2<f64>);

impl Mask {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid(
                "mask values must be finite and non-negative",
            ));
        }
        Ok(Mask(values))
    }

    pub(crate) fn from_array_unchecked(values: Array2<f64>) -> Self {
        Mask(values)
    }

    /// Constant mask of the given shape.
    pub fn filled(shape: (usize, usize), value: f64) -> Result<Self> {
        Mask::new(Array2::from_elem(shape, value))
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<f64> {
        self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.dim()
    }
}

fn same_shape(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch {
            expected: a,
            actual: b,
        });
    }
    Ok(())
}

/// `|X| / max(|Y|, eps)`, clamped to `[0, 10]`.
pub fn compute_iam(clean_mag: &MagnitudePlane, noisy_mag: &MagnitudePlane) -> Result<Mask> {
    same_shape(noisy_mag.shape(), clean_mag.shape())?;
    let mut out = Array2::zeros(clean_mag.shape());
    Zip::from(&mut out)
        .and(clean_mag.as_array())
        .and(noisy_mag.as_array())
        .for_each(|m, &x, &y| *m = (x / y.max(IAM_EPSILON)).clamp(0.0, IAM_CEILING));
    Ok(Mask(out))
}

pub fn apply_mask(noisy_mag: &MagnitudePlane, mask: &Mask) -> Result<MagnitudePlane> {
    same_shape(noisy_mag.shape(), mask.shape())?;
    let out = noisy_mag.as_array() * mask.as_array();
    Ok(MagnitudePlane::from_array_unchecked(out))
}

/// Mean over all bins of `(|Y| * M - |X|)^2`.
pub fn signal_mse(
    noisy_mag: &MagnitudePlane,
    mask: &Mask,
    clean_mag: &MagnitudePlane,
) -> Result<f64> {
    same_shape(noisy_mag.shape(), mask.shape())?;
    same_shape(noisy_mag.shape(), clean_mag.shape())?;
    let count = noisy_mag.as_array().len();
    if count == 0 {
        return Err(Error::invalid("loss over an empty plane"));
    }
    let mut total = 0.0;
    Zip::from(noisy_mag.as_array())
        .and(mask.as_array())
        .and(clean_mag.as_array())
        .for_each(|&y, &m, &x| {
            let d = y * m - x;
            total += d * d;
        });
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn mag(a: Array2<f64>) -> MagnitudePlane {
        MagnitudePlane::new(a).unwrap()
    }

    #[test]
    fn iam_of_equal_planes_is_one() {
        let y = mag(array![[1.0, 2.0], [3.0, 0.5]]);
        let m = compute_iam(&y, &y).unwrap();
        assert!(m.as_array().iter().all(|v| *v == 1.0));
    }

    #[test]
    fn iam_of_silence_is_zero() {
        let y = mag(array![[1.0, 2.0], [3.0, 0.5]]);
        let x = mag(Array2::zeros((2, 2)));
        assert!(compute_iam(&x, &y)
            .unwrap()
            .as_array()
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn iam_ratio_and_clamp() {
        let x = mag(array![[2.0, 5.0, 1.0]]);
        let y = mag(array![[4.0, 0.1, 0.0]]);
        let m = compute_iam(&x, &y).unwrap();
        assert_eq!(m.as_array()[[0, 0]], 0.5);
        assert_eq!(m.as_array()[[0, 1]], IAM_CEILING);
        assert_eq!(m.as_array()[[0, 2]], IAM_CEILING);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let a = mag(Array2::zeros((2, 3)));
        let b = mag(Array2::zeros((3, 3)));
        assert!(matches!(
            compute_iam(&a, &b),
            Err(Error::ShapeMismatch { .. })
        ));
        let m = Mask::filled((3, 3), 1.0).unwrap();
        assert!(matches!(
            apply_mask(&a, &m),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(
            signal_mse(&b, &m, &a),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn apply_mask_values() {
        let y = mag(array![[4.0, 1.0]]);
        assert_eq!(
            apply_mask(&y, &Mask::filled((1, 2), 1.0).unwrap()).unwrap(),
            y
        );
        let zero = apply_mask(&y, &Mask::filled((1, 2), 0.0).unwrap()).unwrap();
        assert!(zero.as_array().iter().all(|v| *v == 0.0));
        let half = apply_mask(&y, &Mask::new(array![[0.5, 0.5]]).unwrap()).unwrap();
        assert_eq!(half.as_array()[[0, 0]], 2.0);
    }

    #[test]
    fn mse_hand_arithmetic() {
        let y = mag(array![[2.0, 2.0]]);
        let m = Mask::new(array![[1.0, 0.5]]).unwrap();
        let x = mag(array![[1.0, 1.0]]);
        assert_eq!(signal_mse(&y, &m, &x).unwrap(), 0.5);
    }

    #[test]
    fn mse_with_zero_mask_is_clean_power() {
        let y = mag(array![[2.0, 2.0], [1.0, 3.0]]);
        let x = mag(array![[1.0, 2.0], [3.0, 0.0]]);
        let m = Mask::filled((2, 2), 0.0).unwrap();
        assert_eq!(signal_mse(&y, &m, &x).unwrap(), (1.0 + 4.0 + 9.0) / 4.0);
    }

    #[test]
    fn mse_rejects_empty() {
        let e = mag(Array2::zeros((0, 3)));
        let m = Mask::filled((0, 3), 1.0).unwrap();
        assert!(signal_mse(&e, &m, &e).is_err());
    }

    fn planes() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(1e-3f64..10.0, n),
                prop::collection::vec(0.0f64..1.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn iam_is_exact_minimiser((noisy, ratio) in planes()) {
            let n = noisy.len();
            let clean: Vec<f64> = noisy.iter().zip(&ratio).map(|(y, r)| y * r * 5.0).collect();
            let y = mag(Array2::from_shape_vec((1, n), noisy).unwrap());
            let x = mag(Array2::from_shape_vec((1, n), clean).unwrap());
            let m = compute_iam(&x, &y).unwrap();
            let loss = signal_mse(&y, &m, &x).unwrap();
            prop_assert!(loss <= 1e-20, "loss {}", loss);
        }

        #[test]
        fn apply_mask_is_bilinear((noisy, ratio) in planes(), a in 0.0f64..4.0, b in 0.0f64..4.0) {
            let n = noisy.len();
            let y = mag(Array2::from_shape_vec((1, n), noisy).unwrap());
            let m1 = Mask::new(Array2::from_shape_vec((1, n), ratio.clone()).unwrap()).unwrap();
            let m2 = Mask::new(Array2::from_shape_vec((1, n), ratio.iter().map(|r| 1.0 - r).collect()).unwrap()).unwrap();
            let combined = Mask::new(m1.as_array() * a + m2.as_array() * b).unwrap();
            let lhs = apply_mask(&y, &combined).unwrap();
            let rhs = apply_mask(&y, &m1).unwrap().into_array() * a + apply_mask(&y, &m2).unwrap().into_array() * b;
            for (l, r) in lhs.as_array().iter().zip(rhs.iter()) {
                prop_assert!((l - r).abs() <= 1e-12 * (1.0 + r.abs()));
            }
        }
    }
}
