//! Single-step GRU cell used as a gated fusion unit: the structural vector is
//! the input and the literal vector is the initial hidden state.
//!
//! ```text
//! r = σ(W_sr·x + b_sr + W_lr·h + b_lr)
//! z = σ(W_sz·x + b_sz + W_lz·h + b_lz)
//! n = tanh(W_sn·x + b_sn + r ∗ (W_ln·h + b_ln))
//! out = (1 − z) ∗ n + z ∗ h
//! ```

use crate::error::{Error, Result};
use crate::numeric::{init_uniform_bound, Matrix, Scalar};

pub const GRU_TENSOR_NAMES: [&str; 12] =
    ["w_sr", "w_sz", "w_sn", "w_lr", "w_lz", "w_ln", "b_sr", "b_sz", "b_sn", "b_lr", "b_lz", "b_ln"];

/// Weights and biases of one cell. Input weights are `dim_j × dim_s`,
/// hidden weights `dim_j × dim_j`, biases `dim_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams<T> {
    pub w_sr: Matrix<T>,
    pub w_sz: Matrix<T>,
    pub w_sn: Matrix<T>,
    pub w_lr: Matrix<T>,
    pub w_lz: Matrix<T>,
    pub w_ln: Matrix<T>,
    pub b_sr: Vec<T>,
    pub b_sz: Vec<T>,
    pub b_sn: Vec<T>,
    pub b_lr: Vec<T>,
    pub b_lz: Vec<T>,
    pub b_ln: Vec<T>,
}

/// Intermediates of a forward pass, consumed by [`GruParams::backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct GruCache<T> {
    pub x: Vec<T>,
    pub h0: Vec<T>,
    pub r: Vec<T>,
    pub z: Vec<T>,
    pub n: Vec<T>,
    /// `W_ln·h + b_ln`
    pub u: Vec<T>,
    pub output: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruInputGrads<T> {
    pub dx: Vec<T>,
    pub dh0: Vec<T>,
}

#[inline]
fn sigmoid<T: Scalar>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

impl<T: Scalar> GruParams<T> {
    pub fn zeros(dim_s: usize, dim_j: usize) -> Self {
        let w = || Matrix::zeros(dim_j, dim_s);
        let u = || Matrix::zeros(dim_j, dim_j);
        let b = || vec![T::zero(); dim_j];
        Self {
            w_sr: w(),
            w_sz: w(),
            w_sn: w(),
            w_lr: u(),
            w_lz: u(),
            w_ln: u(),
            b_sr: b(),
            b_sz: b(),
            b_sn: b(),
            b_lr: b(),
            b_lz: b(),
            b_ln: b(),
        }
    }

    /// Every entry uniform on `±1/√dim_j`.
    pub fn random(dim_s: usize, dim_j: usize, seed: u64) -> Self {
        let bound = 1.0 / (dim_j as f64).sqrt();
        let mut p = Self::zeros(dim_s, dim_j);
        for (i, t) in p.tensors_mut().into_iter().enumerate() {
            let src: Matrix<T> = init_uniform_bound(1, t.len(), bound, crate::numeric::sub_seed(seed, i as u64));
            t.copy_from_slice(src.as_slice());
        }
        p
    }

    pub fn dim_s(&self) -> usize {
        self.w_sr.cols()
    }

    pub fn dim_j(&self) -> usize {
        self.w_sr.rows()
    }

    /// Parameter tensors in [`GRU_TENSOR_NAMES`] order.
    pub fn tensors(&self) -> [&[T]; 12] {
        [
            self.w_sr.as_slice(),
            self.w_sz.as_slice(),
            self.w_sn.as_slice(),
            self.w_lr.as_slice(),
            self.w_lz.as_slice(),
            self.w_ln.as_slice(),
            &self.b_sr,
            &self.b_sz,
            &self.b_sn,
            &self.b_lr,
            &self.b_lz,
            &self.b_ln,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [T]; 12] {
        [
            self.w_sr.as_mut_slice(),
            self.w_sz.as_mut_slice(),
            self.w_sn.as_mut_slice(),
            self.w_lr.as_mut_slice(),
            self.w_lz.as_mut_slice(),
            self.w_ln.as_mut_slice(),
            &mut self.b_sr,
            &mut self.b_sz,
            &mut self.b_sn,
            &mut self.b_lr,
            &mut self.b_lz,
            &mut self.b_ln,
        ]
    }

    /// `(rows, cols)` of each tensor in [`GRU_TENSOR_NAMES`] order.
    pub fn shapes(&self) -> [(usize, usize); 12] {
        let (s, j) = (self.dim_s(), self.dim_j());
        [(j, s), (j, s), (j, s), (j, j), (j, j), (j, j), (1, j), (1, j), (1, j), (1, j), (1, j), (1, j)]
    }

    /// Rebuilds a cell from tensors in [`GRU_TENSOR_NAMES`] order.
    pub fn from_tensors(dim_s: usize, dim_j: usize, tensors: Vec<Vec<T>>) -> Result<Self> {
        let mut p = Self::zeros(dim_s, dim_j);
        if tensors.len() != 12 {
            return Err(Error::Shape(format!("GRU needs 12 tensors, got {}", tensors.len())));
        }
        for (dst, src) in p.tensors_mut().into_iter().zip(tensors) {
            if dst.len() != src.len() {
                return Err(Error::Shape(format!("GRU tensor has {} entries, expected {}", src.len(), dst.len())));
            }
            dst.copy_from_slice(&src);
        }
        Ok(p)
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn fill_zero(&mut self) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v = T::zero());
        }
    }

    /// `self −= lr · grads`
    pub fn sgd_update(&mut self, grads: &GruParams<T>, lr: f64) {
        let lr = T::from_f64(lr);
        for (p, g) in self.tensors_mut().into_iter().zip(grads.tensors()) {
            for (pi, &gi) in p.iter_mut().zip(g) {
                *pi -= lr * gi;
            }
        }
    }

    pub fn cast<U: Scalar>(&self) -> GruParams<U> {
        let v = |s: &[T]| s.iter().map(|x| U::from_f64(x.as_f64())).collect::<Vec<U>>();
        GruParams {
            w_sr: self.w_sr.cast(),
            w_sz: self.w_sz.cast(),
            w_sn: self.w_sn.cast(),
            w_lr: self.w_lr.cast(),
            w_lz: self.w_lz.cast(),
            w_ln: self.w_ln.cast(),
            b_sr: v(&self.b_sr),
            b_sz: v(&self.b_sz),
            b_sn: v(&self.b_sn),
            b_lr: v(&self.b_lr),
            b_lz: v(&self.b_lz),
            b_ln: v(&self.b_ln),
        }
    }

    fn check_inputs(&self, x: &[T], h0: &[T]) -> Result<()> {
        if x.len() != self.dim_s() || h0.len() != self.dim_j() {
            return Err(Error::Shape(format!(
                "GRU expects input {} and hidden {}, got {} and {}",
                self.dim_s(),
                self.dim_j(),
                x.len(),
                h0.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[T], h0: &[T]) -> Result<Vec<T>> {
        Ok(self.forward_cached(x, h0)?.output)
    }

    pub fn forward_cached(&self, x: &[T], h0: &[T]) -> Result<GruCache<T>> {
        self.check_inputs(x, h0)?;
        let j = self.dim_j();
        let mut r = self.w_sr.matvec(x);
        let mut z = self.w_sz.matvec(x);
        let mut a_n = self.w_sn.matvec(x);
        let hr = self.w_lr.matvec(h0);
        let hz = self.w_lz.matvec(h0);
        let mut u = self.w_ln.matvec(h0);
        let mut n = vec![T::zero(); j];
        let mut output = vec![T::zero(); j];
        for i in 0..j {
            r[i] = sigmoid(r[i] + self.b_sr[i] + hr[i] + self.b_lr[i]);
            z[i] = sigmoid(z[i] + self.b_sz[i] + hz[i] + self.b_lz[i]);
            u[i] += self.b_ln[i];
            a_n[i] += self.b_sn[i] + r[i] * u[i];
            n[i] = a_n[i].tanh();
            output[i] = (T::one() - z[i]) * n[i] + z[i] * h0[i];
        }
        Ok(GruCache { x: x.to_vec(), h0: h0.to_vec(), r, z, n, u, output })
    }

    /// Accumulates parameter gradients into `grads` and returns the input
    /// gradients, given `upstream = ∂L/∂out`.
    pub fn backward(&self, cache: &GruCache<T>, upstream: &[T], grads: &mut GruParams<T>) -> Result<GruInputGrads<T>> {
        let j = self.dim_j();
        let consistent = cache.x.len() == self.dim_s()
            && [&cache.h0, &cache.r, &cache.z, &cache.n, &cache.u, &cache.output].iter().all(|v| v.len() == j);
        if !consistent {
            return Err(Error::Shape("forward cache does not match this GRU's dimensions".into()));
        }
        if upstream.len() != j {
            return Err(Error::Shape(format!("upstream gradient has {} entries, expected {j}", upstream.len())));
        }
        if grads.dim_s() != self.dim_s() || grads.dim_j() != j {
            return Err(Error::Shape("gradient accumulator shape differs from parameters".into()));
        }
        let one = T::one();
        let mut da_n = vec![T::zero(); j];
        let mut da_z = vec![T::zero(); j];
        let mut da_r = vec![T::zero(); j];
        let mut du = vec![T::zero(); j];
        let mut dh0 = vec![T::zero(); j];
        for i in 0..j {
            let (g, r, z, n) = (upstream[i], cache.r[i], cache.z[i], cache.n[i]);
            let dn = g * (one - z);
            let dz = g * (cache.h0[i] - n);
            dh0[i] = g * z;
            da_n[i] = dn * (one - n * n);
            da_z[i] = dz * z * (one - z);
            du[i] = da_n[i] * r;
            da_r[i] = da_n[i] * cache.u[i] * r * (one - r);
        }

        grads.w_sn.add_outer(&da_n, &cache.x);
        grads.w_sz.add_outer(&da_z, &cache.x);
        grads.w_sr.add_outer(&da_r, &cache.x);
        grads.w_ln.add_outer(&du, &cache.h0);
        grads.w_lz.add_outer(&da_z, &cache.h0);
        grads.w_lr.add_outer(&da_r, &cache.h0);
        for i in 0..j {
            grads.b_sn[i] += da_n[i];
            grads.b_ln[i] += du[i];
            grads.b_sz[i] += da_z[i];
            grads.b_lz[i] += da_z[i];
            grads.b_sr[i] += da_r[i];
            grads.b_lr[i] += da_r[i];
        }

        let mut dx = vec![T::zero(); self.dim_s()];
        self.w_sn.matvec_transpose_acc(&da_n, &mut dx);
        self.w_sz.matvec_transpose_acc(&da_z, &mut dx);
        self.w_sr.matvec_transpose_acc(&da_r, &mut dx);
        self.w_ln.matvec_transpose_acc(&du, &mut dh0);
        self.w_lz.matvec_transpose_acc(&da_z, &mut dh0);
        self.w_lr.matvec_transpose_acc(&da_r, &mut dh0);
        Ok(GruInputGrads { dx, dh0 })
    }
}
