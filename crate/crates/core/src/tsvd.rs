//! Exact and truncated t-SVD, the minimal truncation error, and threshold multirank.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Result, TubalError};
use crate::fourier::{self, fft3, from_half_slices, is_self_conjugate, SpectralTensor3};
use crate::linalg::{self, real_part, to_complex, C64};
use crate::tensor::{FDiagonalTensor, Norm, Tensor3};

/// `A ~ U * S * V^T` with `U: n1 x r x n3`, `S: r x r x n3` f-diagonal and `V: n2 x r x n3`.
#[derive(Clone, Debug)]
pub struct TsvdFactors {
    pub u: Tensor3,
    pub s: FDiagonalTensor,
    pub v: Tensor3,
    /// Largest imaginary residual left by the inverse transforms of the three factors.
    pub imag_residual: f64,
}

impl TsvdFactors {
    pub fn rank(&self) -> usize {
        self.u.n2()
    }

    /// `U * S * V^T`.
    pub fn reconstruct(&self) -> Result<Tensor3> {
        let us = crate::tensor::tprod(&self.u, self.s.as_tensor())?;
        crate::tensor::tprod(&us, &self.v.conj_transpose())
    }

    /// Builds factors from the leading Fourier slices of `U_hat`, the per-slice singular
    /// values and `V_hat`; the remaining slices follow by conjugate symmetry.
    pub(crate) fn from_fourier(n3: usize, u_half: &[DMatrix<C64>], sigma_half: &[Vec<f64>], v_half: &[DMatrix<C64>]) -> Result<Self> {
        let r = u_half[0].ncols();
        let (n1, n2) = (u_half[0].nrows(), v_half[0].nrows());
        let u = fourier::ifft3_checked(&from_half_slices(n1, r, n3, u_half))?;
        let v = fourier::ifft3_checked(&from_half_slices(n2, r, n3, v_half))?;
        let mut diags: Vec<Vec<f64>> = sigma_half.to_vec();
        for k in diags.len()..n3 {
            diags.push(sigma_half[fourier::mirror_index(k, n3)].clone());
        }
        let s = FDiagonalTensor::from_fourier_diagonals(r, &diags)?;
        Ok(Self {
            u: u.tensor,
            s,
            v: v.tensor,
            imag_residual: u.imag_residual.max(v.imag_residual),
        })
    }
}

/// SVD of a Fourier slice. Self-conjugate slices are factored in real arithmetic so
/// that their singular vectors stay real.
pub(crate) fn slice_svd(m: &DMatrix<C64>, self_conjugate: bool) -> Result<linalg::Svd<C64>> {
    if self_conjugate {
        let s = linalg::svd(&real_part(m))?;
        Ok(linalg::Svd {
            u: to_complex(&s.u),
            sigma: s.sigma,
            v: to_complex(&s.v),
        })
    } else {
        linalg::svd(m)
    }
}

/// Runs `f(k, slice)` on every leading Fourier slice in parallel, preserving order.
pub(crate) fn map_half_slices<R: Send>(hat: &SpectralTensor3, f: impl Fn(usize, DMatrix<C64>) -> Result<R> + Sync) -> Result<Vec<R>> {
    (0..hat.half_len().min(hat.dims().2))
        .into_par_iter()
        .map(|k| f(k, hat.frontal(k)))
        .collect()
}

/// `k`-term truncated t-SVD. `k = min(n1, n2)` gives the full t-SVD.
pub fn tsvd_truncated(a: &Tensor3, k: usize) -> Result<TsvdFactors> {
    let (n1, n2, n3) = a.dims();
    if k == 0 || k > n1.min(n2) {
        return Err(TubalError::Parameter(format!(
            "truncation rank {k} outside 1..={}",
            n1.min(n2)
        )));
    }
    let hat = fft3(a);
    let parts = map_half_slices(&hat, |i, m| {
        let s = slice_svd(&m, is_self_conjugate(i, n3))?;
        Ok((
            s.u.columns(0, k).into_owned(),
            s.sigma[..k].to_vec(),
            s.v.columns(0, k).into_owned(),
        ))
    })?;
    let (mut us, mut ss, mut vs) = (Vec::new(), Vec::new(), Vec::new());
    for (u, s, v) in parts {
        us.push(u);
        ss.push(s);
        vs.push(v);
    }
    TsvdFactors::from_fourier(n3, &us, &ss, &vs)
}

/// Singular values of every Fourier slice (all `n3` of them), each nonincreasing.
pub fn fourier_spectra(a: &Tensor3) -> Result<Vec<Vec<f64>>> {
    let n3 = a.n3();
    let hat = fft3(a);
    let half = map_half_slices(&hat, |i, m| {
        if is_self_conjugate(i, n3) {
            linalg::singular_values(&real_part(&m))
        } else {
            linalg::singular_values(&m)
        }
    })?;
    Ok((0..n3).map(|i| half[i.min(fourier::mirror_index(i, n3))].clone()).collect())
}

/// The smallest possible error of a tubal rank-`k` approximation in the chosen norm:
/// `max_i sigma_{k+1}^(i)` for the spectral norm and
/// `sqrt((1/n3) sum_i sum_{j>k} (sigma_j^(i))^2)` for the Frobenius norm.
pub fn minimal_error(a: &Tensor3, k: usize, which: Norm) -> Result<f64> {
    Ok(minimal_error_from_spectra(&fourier_spectra(a)?, k, which))
}

pub fn minimal_error_from_spectra(spectra: &[Vec<f64>], k: usize, which: Norm) -> f64 {
    match which {
        Norm::Spectral => spectra
            .iter()
            .map(|s| s.get(k).copied().unwrap_or(0.0))
            .fold(0.0, f64::max),
        Norm::Frobenius => {
            let total: f64 = spectra.iter().flat_map(|s| s.iter().skip(k)).map(|v| v * v).sum();
            (total / spectra.len().max(1) as f64).sqrt()
        }
    }
}

/// Multirank and tubal rank under a threshold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multirank {
    /// Rank of each Fourier slice, length `n3`.
    pub ranks: Vec<usize>,
    pub tubal_rank: usize,
}

impl Multirank {
    pub fn from_ranks(ranks: Vec<usize>) -> Self {
        let tubal_rank = ranks.iter().copied().max().unwrap_or(0);
        Self { ranks, tubal_rank }
    }
}

/// `k_i = #{j : sigma_j^(i) >= tau}` for every Fourier slice.
pub fn exact_multirank(a: &Tensor3, tau: f64) -> Result<Multirank> {
    if !(tau > 0.0) {
        return Err(TubalError::Parameter(format!("threshold must be positive, got {tau}")));
    }
    Ok(multirank_from_spectra(&fourier_spectra(a)?, tau))
}

pub fn multirank_from_spectra(spectra: &[Vec<f64>], tau: f64) -> Multirank {
    Multirank::from_ranks(spectra.iter().map(|s| s.iter().filter(|&&v| v >= tau).count()).collect())
}

/// Tensor nuclear norm `(1/n3) sum_k ||A_hat^(k)||_*`.
pub fn tensor_nuclear_norm(a: &Tensor3) -> Result<f64> {
    let spectra = fourier_spectra(a)?;
    let total: f64 = spectra.iter().flat_map(|s| s.iter()).sum();
    Ok(total / a.n3().max(1) as f64)
}
