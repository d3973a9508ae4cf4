use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::matrix::{Matrix, Scalar};

/// Entries i.i.d. uniform on `[-6/√dim, 6/√dim]`, deterministic in `seed`.
pub fn init_uniform<T: Scalar>(rows: usize, dim: usize, seed: u64) -> Matrix<T> {
    assert!(rows > 0 && dim > 0, "init_uniform needs rows > 0 and dim > 0");
    init_uniform_bound(rows, dim, 6.0 / (dim as f64).sqrt(), seed)
}

/// Entries i.i.d. uniform on `[-bound, bound]`.
pub fn init_uniform_bound<T: Scalar>(rows: usize, cols: usize, bound: f64, seed: u64) -> Matrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(-bound, bound);
    Matrix::from_fn(rows, cols, |_, _| T::from_f64(dist.sample(&mut rng)))
}

/// Derives an independent seed for a named parameter stream (splitmix64 finalizer).
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
