//! Tensor singular value thresholding and robust PCA by ADMM.

use nalgebra::DMatrix;

use crate::error::{Result, TubalError};
use crate::fourier::{self, fft3, from_half_slices, is_self_conjugate};
use crate::linalg::{self, qr_thin, real_part, to_complex, Scalar, C64};
use crate::tensor::Tensor3;
use crate::tsvd::{map_half_slices, slice_svd};
use crate::turank::{reveal_fourier_slice, TurankParams};

/// `sign(x) max(|x| - tau, 0)` entrywise.
pub fn soft_threshold(x: &Tensor3, tau: f64) -> Tensor3 {
    x.map(|v| v.signum() * (v.abs() - tau).max(0.0))
}

// `x max(1 - tau / |x|, 0)`; reduces to the real soft threshold on real entries.
fn shrink<T: Scalar>(x: T, tau: f64) -> T {
    let m = x.modulus();
    if m <= tau {
        T::zero()
    } else {
        x.scale(1.0 - tau / m)
    }
}

/// Output of the t-SVT operators.
#[derive(Clone, Debug)]
pub struct TsvtOutput {
    pub tensor: Tensor3,
    /// Number of nonzero shrunk singular values per Fourier slice.
    pub multirank: Vec<usize>,
    pub imag_residual: f64,
}

fn assemble(y: &Tensor3, half: Vec<(DMatrix<C64>, usize)>) -> Result<TsvtOutput> {
    let (n1, n2, n3) = y.dims();
    let ranks: Vec<usize> = (0..n3).map(|k| half[k.min(fourier::mirror_index(k, n3))].1).collect();
    let slices: Vec<DMatrix<C64>> = half.into_iter().map(|(m, _)| m).collect();
    let out = fourier::ifft3_checked(&from_half_slices(n1, n2, n3, &slices))?;
    Ok(TsvtOutput {
        tensor: out.tensor,
        multirank: ranks,
        imag_residual: out.imag_residual,
    })
}

/// Proximal operator of `tau * TNN`: every Fourier singular value is shrunk by `tau`.
pub fn tsvt_exact(y: &Tensor3, tau: f64) -> Result<TsvtOutput> {
    if !(tau >= 0.0) {
        return Err(TubalError::Parameter(format!("threshold must be nonnegative, got {tau}")));
    }
    let n3 = y.n3();
    let hat = fft3(y);
    let half = map_half_slices(&hat, |k, m| {
        let s = slice_svd(&m, is_self_conjugate(k, n3))?;
        let shrunk: Vec<f64> = s.sigma.iter().map(|&v| (v - tau).max(0.0)).collect();
        let r = shrunk.iter().filter(|&&v| v > 0.0).count();
        let mut u = s.u.columns(0, r).into_owned();
        for (j, &v) in shrunk.iter().take(r).enumerate() {
            u.column_mut(j).scale_mut(v);
        }
        Ok((u * s.v.columns(0, r).adjoint(), r))
    })?;
    assemble(y, half)
}

/// Which entries of the small factor `L` the randomized t-SVT shrinks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Shrinkage {
    /// Every entry, by complex magnitude.
    #[default]
    AllEntries,
    /// Only the diagonal; off-diagonal entries pass through unchanged.
    DiagonalOnly,
}

/// t-SVT accelerated by the randomized rank-revealing block loop.
///
/// On each Fourier slice the block loop with threshold `tau` yields a basis `Q`; with the
/// thin QR `Y^H Q = P L^H` the slice is approximated by `Q L P^H` and `L` is shrunk
/// entrywise by `tau`. Directions whose Ritz values fall below `tau` would be removed by
/// the shrinkage anyway. A slice that exhausts its rank keeps the full basis.
pub fn tsvt_randomized(y: &Tensor3, tau: f64, b: usize, q: usize, seed: u64, shrinkage: Shrinkage) -> Result<TsvtOutput> {
    let (n1, n2, n3) = y.dims();
    if !(tau > 0.0) || b == 0 || b > n2 {
        return Err(TubalError::Parameter(format!(
            "need tau > 0 and 1 <= b <= n2; got tau={tau}, b={b}"
        )));
    }
    let params = TurankParams::new(b, tau, q, seed);
    let cap = n1.min(n2);
    let hat = fft3(y);
    let half = map_half_slices(&hat, |k, m| {
        let range = reveal_fourier_slice(&m, k, n3, &params, cap);
        if is_self_conjugate(k, n3) {
            let (out, r) = shrink_in_range(&real_part(&m), &real_part(&range.basis), tau, shrinkage)?;
            Ok((to_complex(&out), r))
        } else {
            shrink_in_range(&m, &range.basis, tau, shrinkage)
        }
    })?;
    assemble(y, half)
}

// Returns `Q L_tau P^H` and the rank of `L_tau`.
fn shrink_in_range<T: Scalar>(m: &DMatrix<T>, basis: &DMatrix<T>, tau: f64, shrinkage: Shrinkage) -> Result<(DMatrix<T>, usize)> {
    if basis.ncols() == 0 {
        return Ok((DMatrix::zeros(m.nrows(), m.ncols()), 0));
    }
    let w = m.ad_mul(basis);
    let (p, r) = qr_thin(&w);
    let mut l = r.adjoint();
    for j in 0..l.ncols() {
        for i in 0..l.nrows() {
            if shrinkage == Shrinkage::AllEntries || i == j {
                l[(i, j)] = shrink(l[(i, j)], tau);
            }
        }
    }
    let sv = linalg::singular_values(&l)?;
    let rank = sv.iter().filter(|&&v| v > 1e-12 * sv[0]).count();
    Ok((basis * l * p.adjoint(), rank))
}

/// Inner proximal solver for the low-rank update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InnerSolver {
    Exact,
    Randomized { b: usize, q: usize, seed: u64 },
}

/// ADMM settings. [`TrpcaParams::for_shape`] gives the defaults.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrpcaParams {
    pub lambda: f64,
    pub mu0: f64,
    pub rho: f64,
    pub mu_max: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub inner: InnerSolver,
}

impl TrpcaParams {
    /// `lambda = 1 / sqrt(max(n1, n2) n3)`, `mu0 = 1e-3`, `rho = 1.1`, `mu_max = 1e10`,
    /// `tol = 1e-6`, 500 iterations, exact inner solver.
    pub fn for_shape(n1: usize, n2: usize, n3: usize) -> Self {
        Self {
            lambda: 1.0 / ((n1.max(n2) * n3) as f64).sqrt(),
            mu0: 1e-3,
            rho: 1.1,
            mu_max: 1e10,
            tol: 1e-6,
            max_iters: 500,
            inner: InnerSolver::Exact,
        }
    }

    /// Constant-penalty setting used for video background modelling with `h x w` frames:
    /// `lambda = 1 / sqrt(3 h w)`, `mu0 = mu_max = scale * lambda`.
    pub fn video(h: usize, w: usize, scale: f64) -> Self {
        let lambda = 1.0 / ((3 * h * w) as f64).sqrt();
        Self {
            lambda,
            mu0: scale * lambda,
            rho: 1.1,
            mu_max: scale * lambda,
            tol: 1e-6,
            max_iters: 500,
            inner: InnerSolver::Exact,
        }
    }
}

/// ADMM iterates and history.
#[derive(Clone, Debug)]
pub struct TrpcaState {
    pub l: Tensor3,
    pub e: Tensor3,
    pub y: Tensor3,
    pub mu: f64,
    pub iterations: usize,
    /// `||L + E - A||_F / ||A||_F` after every iteration.
    pub residuals: Vec<f64>,
    /// Tubal rank of `L` after every iteration.
    pub tubal_ranks: Vec<usize>,
    pub converged: bool,
}

/// Solves `min ||L||_TNN + lambda ||E||_1` subject to `L + E = A` by ADMM, starting from
/// zero iterates. Running out of iterations is reported through `converged`, not as
/// an error.
pub fn trpca_admm(a: &Tensor3, params: &TrpcaParams) -> Result<TrpcaState> {
    let p = *params;
    if !(p.lambda > 0.0 && p.mu0 > 0.0 && p.tol > 0.0 && p.rho >= 1.0 && p.mu_max >= p.mu0) {
        return Err(TubalError::Parameter(format!("invalid ADMM settings {p:?}")));
    }
    let (n1, n2, n3) = a.dims();
    let norm_a = a.frobenius_norm();
    let mut st = TrpcaState {
        l: Tensor3::zeros(n1, n2, n3),
        e: Tensor3::zeros(n1, n2, n3),
        y: Tensor3::zeros(n1, n2, n3),
        mu: p.mu0,
        iterations: 0,
        residuals: Vec::new(),
        tubal_ranks: Vec::new(),
        converged: false,
    };
    while st.iterations < p.max_iters {
        let inv_mu = 1.0 / st.mu;
        let target = a.axpy(-1.0, &st.e)?.axpy(-inv_mu, &st.y)?;
        let svt = match p.inner {
            InnerSolver::Exact => tsvt_exact(&target, inv_mu)?,
            InnerSolver::Randomized { b, q, seed } => {
                let s = linalg::slice_block_stream(st.iterations, 0) ^ seed.rotate_left(17);
                tsvt_randomized(&target, inv_mu, b, q, s, Shrinkage::AllEntries)?
            }
        };
        st.l = svt.tensor;
        let sparse_target = a.axpy(-1.0, &st.l)?.axpy(-inv_mu, &st.y)?;
        st.e = soft_threshold(&sparse_target, p.lambda * inv_mu);
        let resid = st.l.axpy(1.0, &st.e)?.axpy(-1.0, a)?;
        st.y = st.y.axpy(st.mu, &resid)?;
        st.mu = (p.rho * st.mu).min(p.mu_max);
        st.iterations += 1;
        let re = if norm_a == 0.0 { resid.frobenius_norm() } else { resid.frobenius_norm() / norm_a };
        st.residuals.push(re);
        st.tubal_ranks.push(svt.multirank.iter().copied().max().unwrap_or(0));
        if re < p.tol {
            st.converged = true;
            break;
        }
    }
    Ok(st)
}
