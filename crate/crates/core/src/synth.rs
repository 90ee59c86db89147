//! Seeded generators for test tensors.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Result, TubalError};
use crate::fourier::{self, from_half_slices, half_len, is_self_conjugate};
use crate::linalg::{gaussian, orth, stream_rng, to_complex, C64};
use crate::tensor::{tprod, Tensor3};

/// Which tensor to generate.
#[derive(Clone, Debug, PartialEq)]
pub enum SynthKind {
    /// Every Fourier slice has singular values `e^(-k/6)` for `k <= 15` and `e^(-k/2)` after.
    TensorI,
    /// Every spatial frontal slice has singular values `2^(-k)`.
    TensorII,
    /// `X * Y` with Gaussian `X: n1 x r x n3` and `Y: r x n2 x n3`.
    LowRank { r: usize },
    /// Independent `+-magnitude` spikes with the given density.
    Sparse { density: f64, magnitude: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn generate(&self) -> Result<Tensor3> {
        let SynthSpec { n1, n2, n3, seed, .. } = *self;
        if n1 == 0 || n2 == 0 || n3 == 0 {
            return Err(TubalError::Parameter("dimensions must be positive".into()));
        }
        match self.kind {
            SynthKind::TensorI => tensor_i(n1, n2, n3, seed),
            SynthKind::TensorII => tensor_ii(n1, n2, n3, seed),
            SynthKind::LowRank { r } => low_tubal_rank(n1, n2, n3, r, seed),
            SynthKind::Sparse { density, magnitude } => sparse_corruption(n1, n2, n3, density, magnitude, seed),
        }
    }
}

/// Haar-distributed `n x n` orthogonal matrix: QR of a Gaussian matrix with the signs
/// of `diag(R)` moved into `Q`.
pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let qr = gaussian(n, n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Diagonal of the Fourier-slice spectrum of Tensor I (1-based `k`).
pub fn tensor_i_spectrum(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| {
            let k = k as f64;
            if k <= 15.0 {
                (-k / 6.0).exp()
            } else {
                (-k / 2.0).exp()
            }
        })
        .collect()
}

/// Tensor I: each leading Fourier slice is `U_i diag(tensor_i_spectrum) V_i^T` with
/// independent real orthogonal `U_i`, `V_i`; the other slices are their conjugate
/// partners, so the spatial tensor is real and every Fourier slice has exactly the
/// prescribed singular values.
pub fn tensor_i(n1: usize, n2: usize, n3: usize, seed: u64) -> Result<Tensor3> {
    if n1 != n2 || n1 < 16 {
        return Err(TubalError::Parameter(format!(
            "Tensor I needs square slices of size at least 16, got {n1}x{n2}"
        )));
    }
    let sigma = DVector::from_vec(tensor_i_spectrum(n1));
    let slices: Vec<DMatrix<C64>> = (0..half_len(n3).min(n3))
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let u = random_orthogonal(n1, &mut rng);
            let v = random_orthogonal(n2, &mut rng);
            to_complex(&(u * DMatrix::from_diagonal(&sigma) * v.transpose()))
        })
        .collect();
    fourier::ifft3(&from_half_slices(n1, n2, n3, &slices))
}

/// Tensor II: spatial frontal slices `U_i diag(2^-1, 2^-2, ...) V_i^T`.
pub fn tensor_ii(n1: usize, n2: usize, n3: usize, seed: u64) -> Result<Tensor3> {
    if n1 != n2 {
        return Err(TubalError::Parameter(format!("Tensor II needs square slices, got {n1}x{n2}")));
    }
    let sigma = DVector::from_iterator(n1, (1..=n1).map(|k| 2f64.powi(-(k as i32))));
    let slices: Vec<DMatrix<f64>> = (0..n3)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let u = random_orthogonal(n1, &mut rng);
            let v = random_orthogonal(n2, &mut rng);
            u * DMatrix::from_diagonal(&sigma) * v.transpose()
        })
        .collect();
    Tensor3::from_frontal_slices(&slices)
}

fn gaussian_tensor(n1: usize, n2: usize, n3: usize, rng: &mut impl Rng) -> Tensor3 {
    let g = gaussian(n1 * n2, n3, rng);
    Tensor3::from_vec(n1, n2, n3, g.as_slice().to_vec()).expect("gaussian entries are finite")
}

/// `X * Y` with standard Gaussian `X: n1 x r x n3` and `Y: r x n2 x n3`; tubal rank `r`
/// almost surely.
pub fn low_tubal_rank(n1: usize, n2: usize, n3: usize, r: usize, seed: u64) -> Result<Tensor3> {
    if r > n1.min(n2) {
        return Err(TubalError::Parameter(format!("rank {r} exceeds min({n1}, {n2})")));
    }
    if r == 0 {
        return Ok(Tensor3::zeros(n1, n2, n3));
    }
    let mut rng = stream_rng(seed, 0);
    let x = gaussian_tensor(n1, r, n3, &mut rng);
    let y = gaussian_tensor(r, n2, n3, &mut rng);
    tprod(&x, &y)
}

/// Tubal rank-`spectrum.len()` tensor whose every Fourier slice has exactly the singular
/// values `spectrum`, with random orthonormal singular vectors (real on self-conjugate
/// slices, complex elsewhere).
pub fn low_tubal_rank_with_spectrum(n1: usize, n2: usize, n3: usize, spectrum: &[f64], seed: u64) -> Result<Tensor3> {
    let r = spectrum.len();
    if r > n1.min(n2) || spectrum.iter().any(|&s| !(s >= 0.0)) {
        return Err(TubalError::Parameter(format!(
            "need at most min({n1}, {n2}) nonnegative singular values"
        )));
    }
    let d = DMatrix::from_diagonal(&DVector::from_iterator(r, spectrum.iter().map(|&s| C64::new(s, 0.0))));
    let slices: Vec<DMatrix<C64>> = (0..half_len(n3).min(n3))
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut basis = |n: usize| {
                let re = gaussian(n, r, &mut rng);
                if is_self_conjugate(i, n3) {
                    to_complex(&orth(&re))
                } else {
                    let im = gaussian(n, r, &mut rng);
                    orth(&DMatrix::from_fn(n, r, |a, b| C64::new(re[(a, b)], im[(a, b)])))
                }
            };
            let u = basis(n1);
            let v = basis(n2);
            u * &d * v.adjoint()
        })
        .collect();
    fourier::ifft3(&from_half_slices(n1, n2, n3, &slices))
}

/// Each entry independently equals `+-magnitude` (fair sign) with probability `density`
/// and zero otherwise.
pub fn sparse_corruption(n1: usize, n2: usize, n3: usize, density: f64, magnitude: f64, seed: u64) -> Result<Tensor3> {
    if !(0.0..=1.0).contains(&density) || !magnitude.is_finite() {
        return Err(TubalError::Parameter(format!("density {density} outside [0, 1]")));
    }
    let mut rng = stream_rng(seed, 0);
    Ok(Tensor3::from_fn(n1, n2, n3, |_, _, _| {
        let hit = rng.random::<f64>() < density;
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        if hit {
            sign * magnitude
        } else {
            0.0
        }
    }))
}
