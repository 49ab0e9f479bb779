//! Frames, measurements and frame-operator analytics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm, Matrix};

/// Numeric thresholds used wherever an exact-arithmetic statement has to be
/// decided in floating point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Relative threshold below which a pivot or singular value is zero.
    pub eps_rank: f64,
    /// Threshold below which a scalar (coordinate, inner product) is zero.
    pub eps_val: f64,
    /// Relative least-squares misfit above which measurements are rejected
    /// as inconsistent.
    pub eps_residual: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            eps_rank: 1e-9,
            eps_val: 1e-9,
            eps_residual: 1e-6,
        }
    }
}

impl Tolerance {
    pub fn new(eps_rank: f64, eps_val: f64) -> Result<Self> {
        Tolerance {
            eps_rank,
            eps_val,
            ..Tolerance::default()
        }
        .validated()
    }

    pub fn with_residual(self, eps_residual: f64) -> Result<Self> {
        Tolerance {
            eps_residual,
            ..self
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        for (name, v) in [
            ("eps_rank", self.eps_rank),
            ("eps_val", self.eps_val),
            ("eps_residual", self.eps_residual),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidTolerance(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(self)
    }
}

/// An ordered family of `n` vectors in `R^m`.
///
/// Spanning is not required; use [`Frame::bounds`] or [`Frame::classify`]
/// to find out whether the family is a frame in the strict sense.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    dim: usize,
    vectors: Vec<Vec<f64>>,
    tol: Tolerance,
}

impl Frame {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        Frame::with_tolerance(vectors, Tolerance::default())
    }

    pub fn with_tolerance(vectors: Vec<Vec<f64>>, tol: Tolerance) -> Result<Self> {
        let tol = tol.validated()?;
        let dim = vectors.first().ok_or(Error::EmptyFrame)?.len();
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            if let Some(j) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite(i * dim + j));
            }
        }
        Ok(Frame { dim, vectors, tol })
    }

    /// Same vectors, different tolerance policy.
    pub fn retolerance(&self, tol: Tolerance) -> Result<Self> {
        Ok(Frame {
            tol: tol.validated()?,
            ..self.clone()
        })
    }

    /// Ambient dimension `m`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of vectors `n`.
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    pub fn tol(&self) -> Tolerance {
        self.tol
    }

    /// The frame restricted to `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Vec<&[f64]> {
        indices.iter().map(|&i| self.vectors[i].as_slice()).collect()
    }

    /// Rank of the vectors at `indices`.
    pub fn rank_of(&self, indices: &[usize]) -> usize {
        linalg::rank(&self.subset(indices), self.tol.eps_rank)
    }

    pub fn rank(&self) -> usize {
        linalg::rank(&self.vectors, self.tol.eps_rank)
    }

    /// `S = sum_i phi_i phi_i^T`.
    pub fn frame_operator(&self) -> Matrix {
        let m = self.dim;
        let mut s = Matrix::zeros(m, m);
        for v in &self.vectors {
            for j in 0..m {
                for k in 0..m {
                    s[(j, k)] += v[j] * v[k];
                }
            }
        }
        s
    }

    /// Optimal lower and upper frame bounds: the extreme eigenvalues of the
    /// frame operator.
    pub fn bounds(&self) -> (f64, f64) {
        let e = linalg::symmetric_eigen(&self.frame_operator());
        let lower = e.values[0].max(0.0);
        let upper = e.values[e.values.len() - 1];
        (lower, upper.max(lower))
    }

    pub fn classify(&self) -> FrameReport {
        let (lower, upper) = self.bounds();
        let eps = self.tol.eps_val;
        let is_frame = self.rank() == self.dim;
        let is_tight = is_frame && (upper - lower) <= eps * upper.max(1.0);
        let is_parseval = is_tight && (lower - 1.0).abs() <= eps && (upper - 1.0).abs() <= eps;
        let norms: Vec<f64> = self.vectors.iter().map(|v| norm(v)).collect();
        let max_norm = norms.iter().copied().fold(0.0, f64::max);
        let min_norm = norms.iter().copied().fold(f64::INFINITY, f64::min);
        let is_equal_norm = max_norm - min_norm <= eps * max_norm.max(1.0);
        let is_unit_norm = norms.iter().all(|n| (n - 1.0).abs() <= eps);
        FrameReport {
            lower_bound: lower,
            upper_bound: upper,
            is_frame,
            is_tight,
            is_parseval,
            is_equal_norm,
            is_unit_norm,
        }
    }

    /// Squared analysis magnitudes `<x, phi_i>^2`.
    pub fn measure(&self, x: &[f64]) -> Result<MeasurementVector> {
        self.check_signal(x)?;
        Ok(MeasurementVector {
            values: self.vectors.iter().map(|v| dot(v, x).powi(2)).collect(),
        })
    }

    /// The frame `{T phi_i}`.
    pub fn apply_invertible(&self, t: &Matrix) -> Result<Frame> {
        let m = self.dim;
        if t.rows() != m || t.cols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: if t.rows() != m { t.rows() } else { t.cols() },
            });
        }
        if linalg::solve(t, &vec![0.0; m], self.tol.eps_rank).is_none() {
            return Err(Error::SingularOperator);
        }
        let vectors = self.vectors.iter().map(|v| t.mul_vec(v)).collect();
        Frame::with_tolerance(vectors, self.tol)
    }

    /// True when some vector is a nonzero multiple of every standard basis
    /// vector `e_1 .. e_m`.
    pub fn contains_standard_basis(&self) -> bool {
        let eps = self.tol.eps_val;
        (0..self.dim).all(|k| {
            self.vectors.iter().any(|v| {
                v[k].abs() > eps && v.iter().enumerate().all(|(j, x)| j == k || x.abs() <= eps * v[k].abs())
            })
        })
    }

    pub(crate) fn check_signal(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }
}

/// Observed data: `values[i] = |<x, phi_i>|^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeasurementVector {
    values: Vec<f64>,
}

impl MeasurementVector {
    /// Squared magnitudes; rejects negative or non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite(index));
            }
            if value < 0.0 {
                return Err(Error::NegativeMeasurement { index, value });
            }
        }
        Ok(MeasurementVector { values })
    }

    /// Unsquared magnitudes `|<x, phi_i>|`, squared on ingest.
    pub fn from_magnitudes(magnitudes: &[f64]) -> Result<Self> {
        MeasurementVector::new(magnitudes.to_vec())?;
        MeasurementVector::new(magnitudes.iter().map(|v| v * v).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    /// Max absolute entrywise difference.
    pub fn max_diff(&self, other: &MeasurementVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub is_frame: bool,
    pub is_tight: bool,
    pub is_parseval: bool,
    pub is_equal_norm: bool,
    pub is_unit_norm: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn r3() -> Frame {
        Frame::new(vec![
            vec![1.0, 1.0, 1.0],
            vec![-1.0, 1.0, 1.0],
            vec![1.0, -1.0, 1.0],
            vec![1.0, 1.0, -1.0],
        ])
        .unwrap()
    }

    #[test]
    fn frame_operator_examples() {
        let f = Frame::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(f.frame_operator(), Matrix::identity(2));
        // four rank-one outer products of +-1 vectors: off-diagonals cancel
        let s = r3().frame_operator();
        let mut four = Matrix::identity(3);
        for i in 0..3 {
            four[(i, i)] = 4.0;
        }
        assert_eq!(s, four);
        let f = Frame::new(vec![vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        assert_eq!(f.frame_operator(), Matrix::from_rows(&[[2.0, 0.0], [0.0, 2.0]]));
    }

    #[test]
    fn bounds_examples() {
        let f = Frame::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(f.bounds(), (1.0, 1.0));
        let (a, b) = r3().bounds();
        assert_relative_eq!(a, 4.0, max_relative = 1e-10);
        assert_relative_eq!(b, 4.0, max_relative = 1e-10);
        let f = Frame::new(vec![vec![1.0, 0.0]]).unwrap();
        assert_eq!(f.bounds(), (0.0, 1.0));
        assert!(!f.classify().is_frame);
    }

    #[test]
    fn classify_examples() {
        let r = r3().classify();
        assert!(r.is_tight && r.is_equal_norm && !r.is_parseval && r.is_frame);
        let r = Frame::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap().classify();
        assert!(r.is_parseval && r.is_tight && r.is_unit_norm);
        let r = Frame::new(vec![vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap().classify();
        assert!(!r.is_equal_norm && !r.is_tight);
    }

    #[test]
    fn measure_examples() {
        let f = Frame::new(vec![vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let y = f.measure(&[3.0, 5.0]).unwrap();
        assert_eq!(y.values(), &[64.0, 4.0]);
        assert_eq!(f.measure(&[0.0, 0.0]).unwrap().values(), &[0.0, 0.0]);
        assert!(matches!(
            f.measure(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn apply_invertible_examples() {
        let f = Frame::new(vec![vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        assert_eq!(f.apply_invertible(&Matrix::identity(2)).unwrap(), f);
        let t = Matrix::from_rows(&[[0.5, 0.5], [0.5, -0.5]]);
        let g = f.apply_invertible(&t).unwrap();
        assert_eq!(g.vectors(), &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let singular = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert_eq!(f.apply_invertible(&singular), Err(Error::SingularOperator));
    }

    #[test]
    fn construction_errors() {
        assert_eq!(Frame::new(vec![]), Err(Error::EmptyFrame));
        assert_eq!(Frame::new(vec![vec![]]), Err(Error::ZeroDimension));
        assert!(matches!(
            Frame::new(vec![vec![1.0, 0.0], vec![1.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(Frame::new(vec![vec![f64::NAN]]), Err(Error::NonFinite(0)));
        assert!(Tolerance::new(0.0, 1e-9).is_err());
        assert!(Tolerance::new(1e-9, f64::INFINITY).is_err());
        assert!(matches!(
            MeasurementVector::new(vec![1.0, -0.5]),
            Err(Error::NegativeMeasurement { index: 1, .. })
        ));
        assert_eq!(MeasurementVector::from_magnitudes(&[2.0, 3.0]).unwrap().values(), &[4.0, 9.0]);
    }

    #[test]
    fn standard_basis_detection() {
        let f = Frame::new(vec![vec![0.0, -2.0], vec![1.0, 1.0], vec![3.0, 0.0]]).unwrap();
        assert!(f.contains_standard_basis());
        assert!(!r3().contains_standard_basis());
    }

    fn small_frame() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..5).prop_flat_map(|m| prop::collection::vec(prop::collection::vec(-3.0f64..3.0, m), 1..8))
    }

    proptest! {
        #[test]
        fn energy_between_frame_bounds(vs in small_frame(), seed in prop::collection::vec(-2.0f64..2.0, 4)) {
            let f = Frame::new(vs).unwrap();
            let x: Vec<f64> = seed[..f.dim()].to_vec();
            let (a, b) = f.bounds();
            let energy: f64 = f.measure(&x).unwrap().values().iter().sum();
            let xx = dot(&x, &x);
            let slack = 1e-8 * (b * xx).max(1e-12);
            prop_assert!(a * xx <= energy + slack);
            prop_assert!(energy <= b * xx + slack);
            prop_assert!(a <= b);
        }

        #[test]
        fn measurement_is_sign_symmetric(vs in small_frame(), seed in prop::collection::vec(-2.0f64..2.0, 4)) {
            let f = Frame::new(vs).unwrap();
            let x: Vec<f64> = seed[..f.dim()].to_vec();
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert_eq!(f.measure(&x).unwrap(), f.measure(&neg).unwrap());
        }

        #[test]
        fn frame_operator_ignores_order(vs in small_frame(), rot in 0usize..8) {
            let f = Frame::new(vs.clone()).unwrap();
            let mut shuffled = vs;
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let g = Frame::new(shuffled).unwrap();
            let (s, t) = (f.frame_operator(), g.frame_operator());
            prop_assert!(s.is_symmetric(1e-12));
            for i in 0..f.dim() {
                for j in 0..f.dim() {
                    prop_assert!((s[(i, j)] - t[(i, j)]).abs() <= 1e-12 * (1.0 + s.max_abs()));
                }
            }
        }
    }
}
