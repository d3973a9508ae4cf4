use crate::error::{Error, Result};
use crate::numeric::{init_uniform_bound, Matrix, Scalar};

use super::store::LiteralStore;

/// Affine map `W·v + b` from the native literal dimension to the joint dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LiteralProjection<T> {
    /// `dim_out × dim_in`
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
    pub trainable: bool,
}

impl<T: Scalar> LiteralProjection<T> {
    pub fn new(weight: Matrix<T>, bias: Vec<T>, trainable: bool) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::Shape(format!(
                "projection bias has {} entries for {} outputs",
                bias.len(),
                weight.rows()
            )));
        }
        Ok(Self { weight, bias, trainable })
    }

    /// Weights uniform on `±1/√dim_in`, zero bias.
    pub fn random(dim_in: usize, dim_out: usize, seed: u64) -> Self {
        Self {
            weight: init_uniform_bound(dim_out, dim_in, 1.0 / (dim_in as f64).sqrt(), seed),
            bias: vec![T::zero(); dim_out],
            trainable: true,
        }
    }

    pub fn dim_in(&self) -> usize {
        self.weight.cols()
    }

    pub fn dim_out(&self) -> usize {
        self.weight.rows()
    }

    pub fn apply(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.dim_in() {
            return Err(Error::Shape(format!("projection expects {} inputs, got {}", self.dim_in(), v.len())));
        }
        let mut out = self.weight.matvec(v);
        for (o, &b) in out.iter_mut().zip(&self.bias) {
            *o += b;
        }
        Ok(out)
    }

    pub fn apply_rows(&self, m: &Matrix<T>) -> Result<Matrix<T>> {
        let mut out = Matrix::zeros(m.rows(), self.dim_out());
        for i in 0..m.rows() {
            out.row_mut(i).copy_from_slice(&self.apply(m.row(i))?);
        }
        Ok(out)
    }
}

/// Projects every entity and relation literal.
pub fn project(store: &LiteralStore, projection: &LiteralProjection<f32>) -> Result<(Matrix<f32>, Matrix<f32>)> {
    if projection.dim_in() != store.dim() {
        return Err(Error::Shape(format!(
            "projection input {} does not match literal dimension {}",
            projection.dim_in(),
            store.dim()
        )));
    }
    Ok((projection.apply_rows(store.entity_vectors())?, projection.apply_rows(store.relation_vectors())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> LiteralStore {
        let e = Matrix::from_fn(4, 5, |i, j| (i as f32 - 1.5) * 0.3 + j as f32 * 0.7);
        let r = Matrix::from_fn(2, 5, |i, j| (i * 5 + j) as f32 * -0.1);
        LiteralStore::from_matrices(e, r).unwrap()
    }

    #[test]
    fn identity_projection() {
        let s = store();
        let p = LiteralProjection::new(Matrix::identity(5), vec![0.0; 5], false).unwrap();
        let (e, r) = project(&s, &p).unwrap();
        assert_eq!(&e, s.entity_vectors());
        assert_eq!(&r, s.relation_vectors());
    }

    #[test]
    fn zero_weight_gives_bias() {
        let s = store();
        let b = vec![1.0, -2.0, 0.5];
        let p = LiteralProjection::new(Matrix::zeros(3, 5), b.clone(), true).unwrap();
        let (e, r) = project(&s, &p).unwrap();
        for i in 0..4 {
            assert_eq!(e.row(i), b.as_slice());
        }
        assert_eq!(r.row(1), b.as_slice());
    }

    #[test]
    fn random_projection_matches_dot_products() {
        let s = store();
        let p = LiteralProjection::<f32>::random(5, 3, 99);
        let p = LiteralProjection::new(p.weight, vec![0.1, 0.2, -0.3], true).unwrap();
        let (e, _) = project(&s, &p).unwrap();
        for i in 0..4 {
            for o in 0..3 {
                let mut acc = p.bias[o] as f64;
                for j in 0..5 {
                    acc += p.weight.get(o, j) as f64 * s.entity_vectors().get(i, j) as f64;
                }
                assert!((e.get(i, o) as f64 - acc).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn shape_mismatch() {
        let p = LiteralProjection::<f32>::random(4, 3, 1);
        assert!(project(&store(), &p).is_err());
        assert!(LiteralProjection::new(Matrix::<f32>::zeros(3, 5), vec![0.0; 2], true).is_err());
    }
}
