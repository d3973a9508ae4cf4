use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::matrix::{Matrix, Scalar};
use crate::error::{Error, Result};

/// Norm used by the translation score: squared L2 or L1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum NormOrder {
    L1,
    L2,
}

impl From<NormOrder> for u8 {
    fn from(n: NormOrder) -> u8 {
        match n {
            NormOrder::L1 => 1,
            NormOrder::L2 => 2,
        }
    }
}

impl TryFrom<u8> for NormOrder {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(NormOrder::L1),
            2 => Ok(NormOrder::L2),
            other => Err(Error::Config(format!("norm order must be 1 or 2, got {other}"))),
        }
    }
}

/// Hyperparameters shared by the structural and joint training phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub margin: f64,
    pub dim: usize,
    pub epochs: usize,
    pub seed: u64,
    pub norm_order: NormOrder,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.0005,
            batch_size: 256,
            margin: 1.0,
            dim: 50,
            epochs: 1000,
            seed: 0,
            norm_order: NormOrder::L2,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(Error::Config(format!("margin must be finite and non-negative, got {}", self.margin)));
        }
        if self.dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        Ok(())
    }
}

/// `params ← params − lr · grads`, elementwise.
pub fn sgd_step<T: Scalar>(params: &mut Matrix<T>, grads: &Matrix<T>, lr: f64) -> Result<()> {
    if params.shape() != grads.shape() {
        return Err(Error::Shape(format!(
            "parameter shape {:?} does not match gradient shape {:?}",
            params.shape(),
            grads.shape()
        )));
    }
    let lr = T::from_f64(lr);
    for (p, &g) in params.as_mut_slice().iter_mut().zip(grads.as_slice()) {
        *p -= lr * g;
    }
    Ok(())
}

/// Row-sparse gradient accumulator. Rows are kept in index order so the
/// update sequence is deterministic.
#[derive(Debug, Clone)]
pub struct SparseGrad<T> {
    cols: usize,
    rows: BTreeMap<usize, Vec<T>>,
}

impl<T: Scalar> SparseGrad<T> {
    pub fn new(cols: usize) -> Self {
        Self { cols, rows: BTreeMap::new() }
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        let cols = self.cols;
        self.rows.entry(i).or_insert_with(|| vec![T::zero(); cols])
    }

    /// `row[i] += scale · v`
    pub fn add_scaled(&mut self, i: usize, v: &[T], scale: T) {
        for (g, &x) in self.row_mut(i).iter_mut().zip(v) {
            *g += scale * x;
        }
    }

    pub fn get(&self, i: usize) -> Option<&[T]> {
        self.rows.get(&i).map(Vec::as_slice)
    }

    pub fn touched(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.keys().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn clear(&mut self) {
        self.rows.clear();
    }

    pub fn to_dense(&self, n_rows: usize) -> Matrix<T> {
        let mut m = Matrix::zeros(n_rows, self.cols);
        for (&i, g) in &self.rows {
            m.row_mut(i).copy_from_slice(g);
        }
        m
    }

    /// Applies the SGD rule to the touched rows of `params`.
    pub fn apply(&self, params: &mut Matrix<T>, lr: f64) -> Result<()> {
        if params.cols() != self.cols {
            return Err(Error::Shape(format!(
                "gradient width {} does not match parameter width {}",
                self.cols,
                params.cols()
            )));
        }
        let lr = T::from_f64(lr);
        for (&i, g) in &self.rows {
            if i >= params.rows() {
                return Err(Error::Shape(format!("gradient row {i} outside {} parameter rows", params.rows())));
            }
            for (p, &gi) in params.row_mut(i).iter_mut().zip(g) {
                *p -= lr * gi;
            }
        }
        Ok(())
    }
}

pub fn l2_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Rescales the given rows to unit L2 norm. Zero rows are left untouched.
pub fn normalize_rows<T: Scalar>(m: &mut Matrix<T>, rows: impl IntoIterator<Item = usize>) {
    for i in rows {
        let row = m.row_mut(i);
        let norm = row.iter().map(|&x| x.as_f64() * x.as_f64()).sum::<f64>().sqrt();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            for x in row.iter_mut() {
                *x = T::from_f64(x.as_f64() * inv);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[f64]) -> Matrix<f64> {
        Matrix::from_vec(1, v.len(), v.to_vec()).unwrap()
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let mut p = row(&[1.0, 2.0]);
        sgd_step(&mut p, &row(&[0.0, 0.0]), 0.5).unwrap();
        assert_eq!(p.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn step_arithmetic() {
        let mut p = row(&[1.0, 2.0]);
        sgd_step(&mut p, &row(&[2.0, -2.0]), 0.5).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 3.0]);
    }

    #[test]
    fn zero_learning_rate_is_noop() {
        let mut p = row(&[1.0, -7.5]);
        sgd_step(&mut p, &row(&[123.0, -9.0e9]), 0.0).unwrap();
        assert_eq!(p.as_slice(), &[1.0, -7.5]);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = row(&[1.0, 2.0]);
        assert!(matches!(sgd_step(&mut p, &row(&[1.0]), 0.1), Err(Error::Shape(_))));
    }

    #[test]
    fn sparse_matches_dense() {
        let mut g = SparseGrad::<f64>::new(2);
        g.add_scaled(2, &[1.0, 1.0], 2.0);
        g.add_scaled(0, &[0.5, -1.0], 1.0);
        let mut a = Matrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64);
        let mut b = a.clone();
        g.apply(&mut a, 0.1).unwrap();
        sgd_step(&mut b, &g.to_dense(3), 0.1).unwrap();
        assert_eq!(a, b);
        assert_eq!(g.touched().collect::<Vec<_>>(), vec![0, 2]);
    }

    #[test]
    fn normalize_gives_unit_rows() {
        let mut m = Matrix::from_vec(2, 2, vec![3.0f32, 4.0, 0.0, 0.0]).unwrap();
        normalize_rows(&mut m, 0..2);
        assert!((l2_norm(m.row(0)) - 1.0).abs() < 1e-6);
        assert_eq!(m.row(1), &[0.0, 0.0]);
    }

    #[test]
    fn config_validation() {
        assert!(SgdConfig::default().validate().is_ok());
        let bad = SgdConfig { batch_size: 0, ..SgdConfig::default() };
        assert!(bad.validate().is_err());
        assert!(NormOrder::try_from(3u8).is_err());
    }
}
