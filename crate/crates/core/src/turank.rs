//! Adaptive blocked randomized tubal rank revealing.
//!
//! Each leading Fourier slice grows an orthonormal basis block by block. A block is a
//! Gaussian sketch refined by `q` power iterations, orthogonalized twice against the
//! accumulated basis and rotated onto its Ritz vectors. The loop stops at the first Ritz
//! value below `tau`. Slices are processed in parallel; the remaining slices follow by
//! conjugate symmetry.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use crate::error::{Result, TubalError};
use crate::fourier::{self, fft3, from_half_slices, is_self_conjugate, mirror_index};
use crate::linalg::{self, gaussian, orth, orth2, project_out, real_part, slice_block_stream, stream_rng, to_complex, Scalar, C64};
use crate::rsvd::c_delta;
use crate::tensor::{FDiagonalTensor, Tensor3};
use crate::tsvd::{map_half_slices, Multirank};

/// Parameters of [`r_turank`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TurankParams {
    /// Block size.
    pub b: usize,
    /// Singular value threshold.
    pub tau: f64,
    /// Power iterations per block.
    pub q: usize,
    pub seed: u64,
    /// Largest rank any slice may reach; defaults to `min(n1, n2)`.
    pub max_rank: Option<usize>,
}

impl TurankParams {
    pub fn new(b: usize, tau: f64, q: usize, seed: u64) -> Self {
        Self {
            b,
            tau,
            q,
            seed,
            max_rank: None,
        }
    }
}

/// How the block loop ended on one slice. The revealed rank is
/// `k = b * (blocks - 1) + rho`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockTrace {
    /// Index of the block holding the last kept column (1 when `k = 0`).
    pub blocks: usize,
    /// Columns kept from that block, `0 <= rho <= b`.
    pub rho: usize,
    /// Gaussian blocks drawn, including the one that triggered the stop and any retries.
    pub drawn: usize,
}

/// Result of running the block loop on a single matrix.
#[derive(Clone, Debug)]
pub struct SliceRange<T: Scalar> {
    /// Orthonormal basis, one column per revealed rank.
    pub basis: DMatrix<T>,
    /// Every Ritz value encountered, block `l` at positions `b * l .. b * (l + 1)`,
    /// zero padded.
    pub ritz: Vec<f64>,
    pub trace: BlockTrace,
    /// The rank cap was reached before any Ritz value fell below the threshold.
    pub capped: bool,
}

/// Block loop on one matrix `a`. Random blocks come from streams
/// `slice_block_stream(slice, draw)` under `seed`.
pub fn reveal_range<T: Scalar>(a: &DMatrix<T>, b: usize, tau: f64, q: usize, seed: u64, slice: usize, cap: usize) -> SliceRange<T> {
    let (n1, n2) = a.shape();
    let cap = cap.min(n1).min(n2);
    let mut basis: DMatrix<T> = DMatrix::zeros(n1, 0);
    let mut ritz = Vec::new();
    let mut drawn = 0;
    let mut j = 0;
    loop {
        if basis.ncols() >= cap {
            let k = basis.ncols();
            let blocks = k.div_ceil(b).max(1);
            return SliceRange {
                trace: BlockTrace {
                    blocks,
                    rho: k - b * (blocks - 1),
                    drawn,
                },
                basis,
                ritz,
                capped: true,
            };
        }
        j += 1;
        let mut qt = DMatrix::zeros(n1, 0);
        for _attempt in 0..2 {
            let g = gaussian(n2, b, &mut stream_rng(seed, slice_block_stream(slice, drawn)));
            drawn += 1;
            qt = sketch_block(a, &g.map(T::from_real), &basis, q);
            if qt.ncols() > 0 {
                break;
            }
        }
        let (rotated, mut values) = if qt.ncols() == 0 {
            // Twice collapsed: nothing of `a` is left outside the basis.
            (DMatrix::zeros(n1, 0), Vec::new())
        } else {
            let t = qt.ad_mul(a);
            match linalg::svd(&t) {
                Ok(s) => (&qt * &s.u, s.sigma),
                Err(_) => (DMatrix::zeros(n1, 0), Vec::new()),
            }
        };
        values.resize(b, 0.0);
        ritz.extend_from_slice(&values);
        let stop = values.iter().position(|&s| s < tau);
        let keep = stop.unwrap_or(b).min(rotated.ncols()).min(cap - basis.ncols());
        if keep > 0 {
            let fresh = orth(&project_out(&rotated.columns(0, keep).into_owned(), &basis));
            basis = hstack(&basis, &fresh);
        }
        if let Some(t0) = stop {
            let k = basis.ncols();
            let (blocks, rho) = if k == 0 {
                (1, 0)
            } else if t0 == 0 {
                (j - 1, b)
            } else {
                (j, t0)
            };
            return SliceRange {
                basis,
                ritz,
                trace: BlockTrace { blocks, rho, drawn },
                capped: false,
            };
        }
    }
}

// One refined block orthogonalized against `basis`; may have fewer than `b` columns.
fn sketch_block<T: Scalar>(a: &DMatrix<T>, g: &DMatrix<T>, basis: &DMatrix<T>, q: usize) -> DMatrix<T> {
    let mut y = orth(&(a * g));
    for _ in 0..q {
        let z = orth(&a.ad_mul(&project_out(&y, basis)));
        y = orth(&(a * z));
    }
    let z = orth2(&y, basis);
    // Columns that lived almost entirely inside span(basis) shrink to noise; drop them.
    let keep: Vec<usize> = (0..z.ncols()).filter(|&c| z.column(c).norm() > 0.5).collect();
    DMatrix::from_fn(z.nrows(), keep.len(), |i, c| z[(i, keep[c])])
}

fn hstack<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let ac = a.ncols();
    DMatrix::from_fn(a.nrows(), ac + b.ncols(), |i, j| if j < ac { a[(i, j)] } else { b[(i, j - ac)] })
}

/// [`reveal_range`] on Fourier slice `k`, in real arithmetic when the slice is
/// self-conjugate.
pub(crate) fn reveal_fourier_slice(m: &DMatrix<C64>, k: usize, n3: usize, params: &TurankParams, cap: usize) -> SliceRange<C64> {
    if is_self_conjugate(k, n3) {
        let r = reveal_range(&real_part(m), params.b, params.tau, params.q, params.seed, k, cap);
        SliceRange {
            basis: to_complex(&r.basis),
            ritz: r.ritz,
            trace: r.trace,
            capped: r.capped,
        }
    } else {
        reveal_range(m, params.b, params.tau, params.q, params.seed, k, cap)
    }
}

/// Output of [`r_turank`].
#[derive(Clone)]
pub struct RankReport {
    pub multirank: Multirank,
    /// Orthonormal basis of every Fourier slice (`n3` entries, mirrored by conjugation).
    pub bases: Vec<DMatrix<C64>>,
    /// Estimated singular value tensor: Fourier diagonal of slice `i` holds every Ritz
    /// value computed on that slice, block `l` at positions `b * l ..`.
    pub s_est: FDiagonalTensor,
    /// `Q Q^H A_hat` per slice, transformed back.
    pub approx: Tensor3,
    /// One entry per Fourier slice.
    pub trace: Vec<BlockTrace>,
    pub block_size: usize,
    pub imag_residual: f64,
    pub elapsed: Duration,
}

impl std::fmt::Debug for RankReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RankReport")
            .field("multirank", &self.multirank)
            .field("trace", &self.trace)
            .field("block_size", &self.block_size)
            .field("imag_residual", &self.imag_residual)
            .field("elapsed", &self.elapsed)
            .finish_non_exhaustive()
    }
}

impl RankReport {
    pub fn tubal_rank(&self) -> usize {
        self.multirank.tubal_rank
    }

    /// Singular values of the deflated slices `(I - Q_[s-1] Q_[s-1]^H) A_hat^(i)`, where
    /// `Q_[s-1]` holds the columns accepted before the last block.
    pub fn deflated_spectra(&self, a: &Tensor3) -> Result<Vec<Vec<f64>>> {
        let hat = fft3(a);
        let b = self.block_size;
        (0..a.n3())
            .map(|i| {
                let prev = (b * (self.trace[i].blocks - 1)).min(self.bases[i].ncols());
                let q = self.bases[i].columns(0, prev).into_owned();
                linalg::singular_values(&project_out(&hat.frontal(i), &q))
            })
            .collect()
    }

}

/// Reveals the multirank of `a` under threshold `tau` and returns the tubal
/// rank-`nu` approximation `Q Q^H A` slice by slice.
///
/// Fails with [`TubalError::RankNotRevealed`] (carrying the partial report) when some
/// slice reaches the rank cap while all its Ritz values are still `>= tau`.
pub fn r_turank(a: &Tensor3, params: &TurankParams) -> Result<RankReport> {
    let (n1, n2, n3) = a.dims();
    let TurankParams { b, tau, q: _, seed: _, max_rank } = *params;
    if b == 0 || b > n2 || !(tau > 0.0) {
        return Err(TubalError::Parameter(format!(
            "need 1 <= b <= n2 and tau > 0; got b={b}, tau={tau} for {n1}x{n2}x{n3}"
        )));
    }
    let cap = max_rank.unwrap_or(n1.min(n2)).min(n1.min(n2));
    let start = Instant::now();
    let hat = fft3(a);
    let slices = map_half_slices(&hat, |k, m| {
        let r = reveal_fourier_slice(&m, k, n3, params, cap);
        let approx = &r.basis * r.basis.ad_mul(&m);
        Ok((r, approx))
    })?;
    let capped = slices.iter().position(|(r, _)| r.capped);
    let full = |k: usize| k.min(mirror_index(k, n3));
    let ranks: Vec<usize> = (0..n3).map(|k| slices[full(k)].0.basis.ncols()).collect();
    let bases: Vec<DMatrix<C64>> = (0..n3)
        .map(|k| {
            let q = &slices[full(k)].0.basis;
            if full(k) == k {
                q.clone()
            } else {
                q.map(|c| c.conj())
            }
        })
        .collect();
    let trace = (0..n3).map(|k| slices[full(k)].0.trace).collect();
    let approx_half: Vec<DMatrix<C64>> = slices.iter().map(|(_, m)| m.clone()).collect();
    let approx = fourier::ifft3_checked(&from_half_slices(n1, n2, n3, &approx_half))?;
    let r_est = slices.iter().map(|(r, _)| r.ritz.len()).max().unwrap_or(0);
    let diags: Vec<Vec<f64>> = (0..n3).map(|k| slices[full(k)].0.ritz.clone()).collect();
    let s_est = FDiagonalTensor::from_fourier_diagonals(r_est, &diags)?;
    let report = RankReport {
        multirank: Multirank::from_ranks(ranks),
        bases,
        s_est,
        imag_residual: approx.imag_residual,
        approx: approx.tensor,
        trace,
        block_size: b,
        elapsed: start.elapsed(),
    };
    if let Some(slice) = capped {
        return Err(TubalError::RankNotRevealed {
            slice,
            cap,
            partial: Box::new(report),
        });
    }
    Ok(report)
}

/// Relative error `||s_est_j - s_j||_2 / ||s_j||_2` of the `j`-th (0-based) spatial
/// singular value tube.
pub fn estimated_tube_error(s_est: &FDiagonalTensor, s_true: &FDiagonalTensor, j: usize) -> Result<f64> {
    let truth = s_true.tube(j);
    let est = s_est.tube(j);
    if truth.len() != est.len() {
        return Err(TubalError::Shape("tube lengths differ".into()));
    }
    let norm = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(TubalError::Parameter(format!("true singular value tube {j} is zero")));
    }
    let diff = truth.iter().zip(&est).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok(diff / norm)
}

/// Values returned by [`thm42_bounds`].
#[derive(Clone, Debug, PartialEq)]
pub struct TurankBounds {
    /// Bound on `||A - A_nu||_2^2`, or `None` when some gap ratio is `>= 1`.
    pub spec_sq: Option<f64>,
    /// Bound on `||A - A_nu||_F^2`, or `None` when some gap ratio is `>= 1`.
    pub fro_sq: Option<f64>,
    /// `sigma~_{b+1} / sigma~_rho` per slice (0 when `rho = 0` or the tail vanishes).
    pub gammas: Vec<f64>,
}

/// A priori bounds for [`r_turank`] holding with probability `1 - delta`.
///
/// `residual_spectra[i]` are the singular values of the deflated slice before its last
/// block (see [`RankReport::deflated_spectra`]) and `rho[i]` the columns kept from that
/// block. The caller is responsible for the subspace-distance hypotheses under which
/// the bound is valid.
pub fn thm42_bounds(residual_spectra: &[Vec<f64>], rho: &[usize], n2: usize, b: usize, q: usize, delta: f64) -> Result<TurankBounds> {
    if residual_spectra.len() != rho.len() {
        return Err(TubalError::Shape("one rho per spectrum expected".into()));
    }
    let c2 = c_delta(n2, b, b, delta)?.powi(2);
    let at = |s: &[f64], j: usize| s.get(j.wrapping_sub(1)).copied().unwrap_or(0.0);
    let mut gammas = Vec::with_capacity(rho.len());
    let mut spec: f64 = 0.0;
    let mut fro = 0.0;
    for (s, &r) in residual_spectra.iter().zip(rho) {
        if r > b {
            return Err(TubalError::Parameter(format!("rho = {r} exceeds the block size {b}")));
        }
        let num = at(s, b + 1);
        let gamma = if r == 0 || num == 0.0 {
            0.0
        } else if at(s, r) == 0.0 {
            f64::INFINITY
        } else {
            num / at(s, r)
        };
        gammas.push(gamma);
        let tail_b: f64 = s.iter().skip(b).map(|v| v * v).sum();
        let tail_r: f64 = s.iter().skip(r).map(|v| v * v).sum();
        let g4q = if gamma == 0.0 { 0.0 } else { gamma.powi(4 * q as i32) };
        spec = spec.max(at(s, r + 1).powi(2) + g4q * c2 * tail_b);
        fro += tail_r + g4q * c2 * tail_b;
    }
    let ok = gammas.iter().all(|&g| g < 1.0);
    Ok(TurankBounds {
        spec_sq: ok.then_some(spec),
        fro_sq: ok.then_some(fro / rho.len().max(1) as f64),
        gammas,
    })
}

/// Bound on `||s_est_j - s_j||_2` for a tube inside block `l`:
/// `sqrt(2 tau_j^2 ||s_j||^2 + 2 tau_eps^2 ||A||_2^2)` with
/// `tau_j = gamma_j_max^(4q+2) C^2 / 2`, `C = c_delta(n2, b, b, delta)` and
/// `tau_eps = (1 + tau_j) eps_max`.
#[allow(clippy::too_many_arguments)]
pub fn thm32_tube_bound(s_norm: f64, a_spec_norm: f64, gamma_j_max: f64, eps_max: f64, q: usize, delta: f64, b: usize, n2: usize) -> Result<f64> {
    let c2 = c_delta(n2, b, b, delta)?.powi(2);
    let tau_j = 0.5 * gamma_j_max.powi(4 * q as i32 + 2) * c2;
    let tau_eps = (1.0 + tau_j) * eps_max;
    Ok((2.0 * (tau_j * s_norm).powi(2) + 2.0 * (tau_eps * a_spec_norm).powi(2)).sqrt())
}
