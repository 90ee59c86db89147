//! Randomized t-SVD with a fixed truncation `K` and a singular value threshold, and
//! its a priori error bounds.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use crate::error::{Result, TubalError};
use crate::fourier::{self, fft3, from_half_slices, is_self_conjugate};
use crate::linalg::{self, complete_orthonormal, gaussian, real_part, stream_rng, to_complex};
use crate::rsvd::{c_delta, range_finder};
use crate::tensor::Tensor3;
use crate::tsvd::{map_half_slices, Multirank, TsvdFactors};

/// Output of [`rtsvd_fixed`].
#[derive(Clone, Debug)]
pub struct FixedRtsvdResult {
    /// `K`-column factors; Fourier diagonal entries past `k_i` are zero.
    pub factors: TsvdFactors,
    pub multirank: Multirank,
    /// `U * S * V^T`.
    pub approx: Tensor3,
    pub imag_residual: f64,
    pub elapsed: Duration,
}

/// Fixed-threshold randomized t-SVD with truncation `k_trunc`, oversampling `p` and `q`
/// power iterations.
///
/// A single real Gaussian matrix is drawn from `seed` and shared by all Fourier slices.
/// Each slice keeps its leading `K` Ritz values and then counts those `>= tau`.
pub fn rtsvd_fixed(a: &Tensor3, tau: f64, k_trunc: usize, p: usize, q: usize, seed: u64) -> Result<FixedRtsvdResult> {
    let (n1, n2, n3) = a.dims();
    if k_trunc == 0 || k_trunc >= n1.min(n2) || k_trunc + p > n2 || !(tau > 0.0) {
        return Err(TubalError::Parameter(format!(
            "need 1 <= K < min(n1, n2), K + p <= n2 and tau > 0; got K={k_trunc}, p={p}, tau={tau} for {n1}x{n2}x{n3}"
        )));
    }
    let start = Instant::now();
    let g = gaussian(n2, k_trunc + p, &mut stream_rng(seed, 0));
    let hat = fft3(a);
    let parts = map_half_slices(&hat, |i, m| {
        let (u, sigma, v) = if is_self_conjugate(i, n3) {
            let (u, s, v) = sketch_slice(&real_part(&m), &g, k_trunc, q)?;
            (to_complex(&u), s, to_complex(&v))
        } else {
            sketch_slice(&m, &g, k_trunc, q)?
        };
        let k_i = sigma.iter().filter(|&&s| s >= tau).count();
        let sigma: Vec<f64> = sigma.iter().enumerate().map(|(j, &s)| if j < k_i { s } else { 0.0 }).collect();
        Ok((u, sigma, v, k_i))
    })?;
    let mut us = Vec::new();
    let mut ss = Vec::new();
    let mut vs = Vec::new();
    let mut ranks = Vec::new();
    let mut approx_half = Vec::new();
    for (u, s, v, k_i) in parts {
        let mut us_ = u.clone();
        for (j, &x) in s.iter().enumerate() {
            us_.column_mut(j).scale_mut(x);
        }
        approx_half.push(us_ * v.adjoint());
        us.push(u);
        ss.push(s);
        vs.push(v);
        ranks.push(k_i);
    }
    let factors = TsvdFactors::from_fourier(n3, &us, &ss, &vs)?;
    let approx = fourier::ifft3_checked(&from_half_slices(n1, n2, n3, &approx_half))?;
    let full_ranks = (0..n3).map(|i| ranks[i.min(fourier::mirror_index(i, n3))]).collect();
    Ok(FixedRtsvdResult {
        imag_residual: approx.imag_residual.max(factors.imag_residual),
        factors,
        multirank: Multirank::from_ranks(full_ranks),
        approx: approx.tensor,
        elapsed: start.elapsed(),
    })
}

// Randomized rank-K factors of one slice, completed to K columns when the sketch is
// rank deficient.
fn sketch_slice<T: linalg::Scalar>(m: &DMatrix<T>, g: &DMatrix<f64>, k: usize, q: usize) -> Result<(DMatrix<T>, Vec<f64>, DMatrix<T>)> {
    let qm = range_finder(m, g, q);
    let svd = linalg::svd(&qm.ad_mul(m))?;
    let kept = k.min(svd.sigma.len());
    let u = complete_orthonormal(&(&qm * svd.u.columns(0, kept)), k);
    let v = complete_orthonormal(&svd.v.columns(0, kept).into_owned(), k);
    let mut sigma = svd.sigma[..kept].to_vec();
    sigma.resize(k, 0.0);
    Ok((u, sigma, v))
}

/// Values returned by [`thm23_bounds`].
#[derive(Clone, Debug, PartialEq)]
pub struct FixedRtsvdBounds {
    /// Bound on `||A - A_K||_2^2`.
    pub spec_sq: f64,
    /// Bound on `||A - A_K||_F^2`.
    pub fro_sq: f64,
    /// Bound on `||s_j - s~_j||_2` for every tube `j < max_i k_i` (0-based).
    pub tube: Vec<f64>,
}

/// A priori bounds for [`rtsvd_fixed`] holding with probability `1 - delta`.
///
/// `spectra` holds the full descending singular values of all `n3` Fourier slices and
/// `multirank` the computed `k_i`. Uses `C = c_delta(n2, K, K + p, delta)` and
/// `gamma_j^(i) = sigma_{K+1}^(i) / sigma_j^(i)`. A slice with `k_i = 0` contributes
/// its whole spectrum to the first term and nothing to the second.
pub fn thm23_bounds(spectra: &[Vec<f64>], multirank: &[usize], n2: usize, k_trunc: usize, p: usize, q: usize, delta: f64) -> Result<FixedRtsvdBounds> {
    if spectra.len() != multirank.len() {
        return Err(TubalError::Shape("one rank per spectrum expected".into()));
    }
    let c2 = c_delta(n2, k_trunc, k_trunc + p, delta)?.powi(2);
    let at = |s: &[f64], j: usize| s.get(j.wrapping_sub(1)).copied().unwrap_or(0.0);
    let n3 = spectra.len() as f64;
    let mut spec: f64 = 0.0;
    let mut fro = 0.0;
    for (s, &k) in spectra.iter().zip(multirank) {
        if k > k_trunc {
            return Err(TubalError::Parameter(format!("k_i = {k} exceeds K = {k_trunc}")));
        }
        let tail_big: f64 = s.iter().skip(k_trunc).map(|v| v * v).sum();
        let tail_k: f64 = s.iter().skip(k).map(|v| v * v).sum();
        let g4q = if k == 0 || at(s, k_trunc + 1) == 0.0 {
            0.0
        } else if at(s, k) == 0.0 {
            return Err(TubalError::Parameter("sigma_{k_i} is zero; the gap ratio is undefined".into()));
        } else {
            (at(s, k_trunc + 1) / at(s, k)).powi(4 * q as i32)
        };
        spec = spec.max(at(s, k + 1).powi(2) + g4q * c2 * tail_big);
        fro += tail_k + g4q * c2 * tail_big;
    }
    let nu = multirank.iter().copied().max().unwrap_or(0);
    let tube = (1..=nu)
        .map(|j| {
            let mut gmax: f64 = 0.0;
            let mut tube_sq = 0.0;
            for s in spectra {
                let num = at(s, k_trunc + 1);
                let den = at(s, j);
                tube_sq += den * den;
                gmax = gmax.max(if num == 0.0 { 0.0 } else if den == 0.0 { f64::INFINITY } else { num / den });
            }
            0.5 * gmax.powi(4 * q as i32 + 2) * c2 * (tube_sq / n3).sqrt()
        })
        .collect();
    Ok(FixedRtsvdBounds {
        spec_sq: spec,
        fro_sq: fro / n3,
        tube,
    })
}
