//! Seeded random matrices. ChaCha8 keeps every stream bit-identical across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matcore::{operator_norm, spectral_radius, ComplexMatrix, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian (unit variance).
pub fn gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    // Fill row-major so the stream order matches the serialized layout.
    let data: Vec<C64> = (0..rows * cols).map(|_| gaussian(rng)).collect();
    ComplexMatrix::from_row_slice(rows, cols, &data)
}

/// Haar-ish unitary from the QR factor of a Gaussian matrix.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    gaussian_matrix(rng, n, n).qr().q()
}

/// Gaussian matrix rescaled to spectral radius `radius`.
pub fn with_spectral_radius(rng: &mut impl Rng, n: usize, radius: f64) -> ComplexMatrix {
    let g = gaussian_matrix(rng, n, n);
    let r = spectral_radius(&g).unwrap_or(0.0);
    if r == 0.0 {
        return g;
    }
    g * C64::new(radius / r, 0.0)
}

/// Gaussian matrix rescaled to operator norm `norm`.
pub fn with_norm(rng: &mut impl Rng, rows: usize, cols: usize, norm: f64) -> ComplexMatrix {
    let g = gaussian_matrix(rng, rows, cols);
    let n = operator_norm(&g);
    if n == 0.0 {
        return g;
    }
    g * C64::new(norm / n, 0.0)
}

/// Uniform point in the disk of radius `radius`.
pub fn disk_point(rng: &mut impl Rng, radius: f64) -> C64 {
    let r = radius * rng.random::<f64>().sqrt();
    let t = std::f64::consts::TAU * rng.random::<f64>();
    C64::from_polar(r, t)
}

/// Point of `C^d` with Euclidean norm uniform in `[0, radius)` and Gaussian direction.
pub fn ball_point(rng: &mut impl Rng, d: usize, radius: f64) -> Vec<C64> {
    let v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let r = radius * rng.random::<f64>();
    v.into_iter().map(|z| z * (r / norm)).collect()
}
