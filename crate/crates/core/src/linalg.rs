//! Dense matrix kernels shared by every algorithm: SVD, thin QR, orthonormalization,
//! twice-orthogonalization against a basis, sorted Hermitian eigendecomposition and
//! seeded Gaussian sketches.
//!
//! Everything is generic over real (`f64`) and complex (`C64`) entries.

use nalgebra::{ComplexField, DMatrix};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, TubalError};

pub type C64 = nalgebra::Complex<f64>;

/// Entry type accepted by the kernels.
pub trait Scalar: ComplexField<RealField = f64> + Copy {}

impl<T: ComplexField<RealField = f64> + Copy> Scalar for T {}

/// Relative norm below which a projected column is treated as linearly dependent.
pub const RANK_DROP_TOL: f64 = 1e-12;

const SVD_MAX_ITERS: usize = 100_000;

/// Thin SVD `M = U diag(sigma) V^H` with `sigma` nonincreasing.
#[derive(Clone, Debug)]
pub struct Svd<T: Scalar> {
    pub u: DMatrix<T>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<T>,
}

impl<T: Scalar> Svd<T> {
    /// `U diag(sigma) V^H`.
    pub fn reconstruct(&self) -> DMatrix<T> {
        let mut us = self.u.clone();
        for (j, &s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.adjoint()
    }
}

pub fn svd<T: Scalar>(m: &DMatrix<T>) -> Result<Svd<T>> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Ok(Svd {
            u: DMatrix::zeros(r, 0),
            sigma: Vec::new(),
            v: DMatrix::zeros(c, 0),
        });
    }
    let out = m
        .clone()
        .try_svd(true, true, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(TubalError::Convergence("svd"))?;
    let u = out.u.expect("left singular vectors requested");
    let v = out.v_t.expect("right singular vectors requested").adjoint();
    Ok(Svd {
        u,
        sigma: out.singular_values.iter().copied().collect(),
        v,
    })
}

/// Singular values only, nonincreasing.
pub fn singular_values<T: Scalar>(m: &DMatrix<T>) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    let out = m
        .clone()
        .try_svd(false, false, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(TubalError::Convergence("svd"))?;
    Ok(out.singular_values.iter().copied().collect())
}

pub fn spectral_norm<T: Scalar>(m: &DMatrix<T>) -> f64 {
    singular_values(m)
        .ok()
        .and_then(|s| s.first().copied())
        .unwrap_or(0.0)
}

/// `Y - Q (Q^H Y)`.
pub fn project_out<T: Scalar>(y: &DMatrix<T>, q: &DMatrix<T>) -> DMatrix<T> {
    if q.ncols() == 0 {
        return y.clone();
    }
    y - q * q.ad_mul(y)
}

/// Orthonormal basis for the column span of `m`.
///
/// Classical Gram-Schmidt with one full reorthogonalization pass per column. Columns
/// whose projected norm falls below `1e-12 * ||m||_F` are dropped, so the result may
/// have fewer columns than `m`.
pub fn orth<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    let (rows, cols) = m.shape();
    let tol = RANK_DROP_TOL * m.norm();
    let mut q: DMatrix<T> = DMatrix::zeros(rows, cols.min(rows));
    let mut kept = 0;
    for c in 0..cols {
        if kept == rows {
            break;
        }
        let mut v = m.column(c).into_owned();
        for _ in 0..2 {
            if kept > 0 {
                let basis = q.columns(0, kept);
                let coeff = basis.ad_mul(&v);
                v -= basis * coeff;
            }
        }
        let nrm = v.norm();
        if nrm > tol && nrm > 0.0 {
            q.set_column(kept, &v.unscale(nrm));
            kept += 1;
        }
    }
    q.columns(0, kept).into_owned()
}

/// Twice-orthogonalization of `y` against the orthonormal columns of `q`:
/// `Y := Y - Q(Q^H Y)`, `Y := orth(Y)`, `Z = Y - Q(Q^H Y)`.
pub fn orth2<T: Scalar>(y: &DMatrix<T>, q: &DMatrix<T>) -> DMatrix<T> {
    let y = orth(&project_out(y, q));
    project_out(&y, q)
}

/// Extends the orthonormal columns of `q` to `cols` orthonormal columns using
/// coordinate vectors. Returns `q` unchanged when it already has `cols` columns.
pub fn complete_orthonormal<T: Scalar>(q: &DMatrix<T>, cols: usize) -> DMatrix<T> {
    let rows = q.nrows();
    assert!(cols <= rows, "cannot fit {cols} orthonormal columns in dimension {rows}");
    let mut out = q.clone();
    let mut e = 0;
    while out.ncols() < cols && e < rows {
        let mut v: DMatrix<T> = DMatrix::zeros(rows, 1);
        v[(e, 0)] = T::one();
        e += 1;
        let w = orth(&project_out(&project_out(&v, &out), &out));
        if w.ncols() == 1 && project_out(&v, &out).norm() > 0.5 / (rows as f64).sqrt() {
            out = DMatrix::from_fn(rows, out.ncols() + 1, |i, j| if j < out.ncols() { out[(i, j)] } else { w[(i, 0)] });
        }
    }
    out
}

/// Real part of a complex matrix.
pub fn real_part(m: &DMatrix<C64>) -> DMatrix<f64> {
    m.map(|c| c.re)
}

/// Economy QR of an `m x n` matrix with `m >= n`: `Q` is `m x n`, `R` is `n x n`.
pub fn qr_thin<T: Scalar>(m: &DMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
    let qr = m.clone().qr();
    (qr.q(), qr.r())
}

/// Eigenpairs of a Hermitian matrix with eigenvalues in nonincreasing order.
pub fn eig_desc<T: Scalar>(m: &DMatrix<T>) -> Result<(DMatrix<T>, Vec<f64>)> {
    if !m.is_square() {
        return Err(TubalError::Shape(format!("eig_desc of a {}x{} matrix", m.nrows(), m.ncols())));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok((DMatrix::zeros(0, 0), Vec::new()));
    }
    let dev = (m - m.adjoint()).camax();
    if dev > RANK_DROP_TOL * m.camax().max(1.0) {
        return Err(TubalError::NotHermitian(dev));
    }
    let eig = nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(TubalError::Convergence("symmetric eigendecomposition"))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vecs = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((vecs, order.iter().map(|&j| eig.eigenvalues[j]).collect()))
}

/// Deterministic random stream `index` under `master_seed`.
///
/// Streams with different indices are independent ChaCha streams, so work split across
/// threads draws the same numbers regardless of scheduling.
pub fn stream_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Stream index for a (slice, block) pair.
#[inline]
pub fn slice_block_stream(slice: usize, block: usize) -> u64 {
    ((slice as u64) << 32) | block as u64
}

/// `rows x cols` matrix of i.i.d. standard normal entries, filled column by column.
pub fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(rows, cols);
    for v in g.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    g
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|v| C64::new(v, 0.0))
}

/// Largest deviation of `Q^H Q` from the identity.
pub fn orthonormality_error<T: Scalar>(q: &DMatrix<T>) -> f64 {
    let g = q.ad_mul(q);
    let n = g.nrows();
    (g - DMatrix::<T>::identity(n, n)).camax()
}

/// Largest singular value of `(I - Q Q^H) M` relative to `||M||_2`, or 0 for `M = 0`.
pub fn residual_range_fraction<T: Scalar>(m: &DMatrix<T>, q: &DMatrix<T>) -> f64 {
    let base = spectral_norm(m);
    if base == 0.0 {
        return 0.0;
    }
    spectral_norm(&project_out(m, q)) / base
}
