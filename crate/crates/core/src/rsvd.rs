//! Matrix randomized SVD with a power scheme, and the a priori error bounds that go
//! with it.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Result, TubalError};
use crate::linalg::{self, gaussian, orth, Scalar};

/// Output of [`rsvd`]: `M ~ Uk diag(sigma_k) Vk^H`.
#[derive(Clone, Debug)]
pub struct RsvdResult<T: Scalar> {
    pub uk: DMatrix<T>,
    pub sigma_k: Vec<f64>,
    pub vk: DMatrix<T>,
    /// Orthonormal range basis with at most `k + p` columns.
    pub q: DMatrix<T>,
    /// `Q^H M`.
    pub b: DMatrix<T>,
    pub elapsed: Duration,
}

impl<T: Scalar> RsvdResult<T> {
    pub fn reconstruct(&self) -> DMatrix<T> {
        let mut us = self.uk.clone();
        for (j, &s) in self.sigma_k.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.vk.adjoint()
    }
}

/// `orth((M M^H)^q M G)`, with the basis re-orthonormalized after every application
/// of `M` or `M^H`.
///
/// `g` is real even when `M` is complex.
pub fn range_finder<T: Scalar>(m: &DMatrix<T>, g: &DMatrix<f64>, q: usize) -> DMatrix<T> {
    let g = g.map(T::from_real);
    let mut y = orth(&(m * g));
    for _ in 0..q {
        let z = orth(&m.ad_mul(&y));
        y = orth(&(m * z));
    }
    y
}

/// Rank-`k` randomized SVD with `p` oversampling columns and `q` power iterations.
///
/// When the numerical rank of `M` is below `k`, the trailing singular values are zero
/// and the factors are completed with arbitrary orthonormal columns.
pub fn rsvd<T: Scalar>(m: &DMatrix<T>, k: usize, p: usize, q: usize, rng: &mut impl Rng) -> Result<RsvdResult<T>> {
    let (rows, cols) = m.shape();
    let ell = k + p;
    if k == 0 || ell > rows.min(cols) {
        return Err(TubalError::Parameter(format!(
            "rsvd needs 1 <= k and k + p <= min(m, n); got k={k}, p={p} for a {rows}x{cols} matrix"
        )));
    }
    let start = Instant::now();
    let g = gaussian(cols, ell, rng);
    let qm = range_finder(m, &g, q);
    let b = qm.ad_mul(m);
    let svd = linalg::svd(&b)?;
    let kept = k.min(svd.sigma.len());
    let uk = linalg::complete_orthonormal(&(&qm * svd.u.columns(0, kept)), k);
    let vk = linalg::complete_orthonormal(&svd.v.columns(0, kept).into_owned(), k);
    let mut sigma_k = svd.sigma[..kept].to_vec();
    sigma_k.resize(k, 0.0);
    Ok(RsvdResult {
        uk,
        sigma_k,
        vk,
        q: qm,
        b,
        elapsed: start.elapsed(),
    })
}

/// The probabilistic constant bounding `||G_{n-k} G_k^+||_2` with probability `1 - delta`:
///
/// `e sqrt(l) / (l - k + 1) * (2 / delta)^(1 / (l - k + 1)) * (sqrt(n - k) + sqrt(l) + sqrt(2 ln(2 / delta)))`.
pub fn c_delta(n: usize, k: usize, ell: usize, delta: f64) -> Result<f64> {
    if ell < k || n <= k || !(delta > 0.0 && delta < 1.0) {
        return Err(TubalError::Parameter(format!(
            "c_delta needs l >= k, n > k and 0 < delta < 1; got n={n}, k={k}, l={ell}, delta={delta}"
        )));
    }
    let d = (ell - k + 1) as f64;
    let l = ell as f64;
    let lead = std::f64::consts::E * l.sqrt() / d;
    let tail = ((n - k) as f64).sqrt() + l.sqrt() + (2.0 * (2.0 / delta).ln()).sqrt();
    Ok(lead * (2.0 / delta).powf(1.0 / d) * tail)
}

/// Values returned by [`rsvd_bounds`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RsvdBounds {
    /// Bound on `||M - U_i U_i^H M||_F^2`.
    pub fro_sq: f64,
    /// Bound on `||M - U_i U_i^H M||_2^2`.
    pub spec_sq: f64,
    /// Bound on `|sigma~_i - sigma_i| / sigma_i`.
    pub sv_rel: f64,
    /// Whether `gamma_i^(4q+2) sum_{j>k} (sigma_j / sigma_{k+1})^2 < (p - 1) / k` holds.
    pub hypothesis_holds: bool,
}

/// Evaluates the rank-`i` error bounds for a rank-`k` sketch with oversampling `p` and
/// `q` power iterations, given the full descending spectrum `sigma` of an `m x n` matrix.
///
/// With `delta = Some(d)` the bounds hold with probability `1 - d` and use
/// `C = c_delta(n, k, k + p, d)`; with `None` they bound expectations and replace `C^2`
/// by `k / (p - 1)`, which needs `p >= 2`.
pub fn rsvd_bounds(sigma: &[f64], n: usize, k: usize, p: usize, q: usize, i: usize, delta: Option<f64>) -> Result<RsvdBounds> {
    if i == 0 || i > k {
        return Err(TubalError::Parameter(format!("need 1 <= i <= k, got i={i}, k={k}")));
    }
    let at = |j: usize| sigma.get(j - 1).copied().unwrap_or(0.0);
    let c2 = match delta {
        Some(d) => c_delta(n, k, k + p, d)?.powi(2),
        None if p >= 2 => k as f64 / (p as f64 - 1.0),
        None => {
            return Err(TubalError::Parameter(
                "the expectation form needs at least two oversampling columns".into(),
            ))
        }
    };
    let sk1 = at(k + 1);
    let si = at(i);
    let gamma = if sk1 == 0.0 {
        0.0
    } else if si == 0.0 {
        return Err(TubalError::Parameter(format!("sigma_{i} is zero; the gap ratio is undefined")));
    } else {
        sk1 / si
    };
    let tail_k: f64 = sigma.iter().skip(k).map(|s| s * s).sum();
    let tail_i: f64 = sigma.iter().skip(i).map(|s| s * s).sum();
    let g4q = gamma.powi(4 * q as i32);
    let hyp_lhs = if sk1 == 0.0 { 0.0 } else { gamma.powi(4 * q as i32 + 2) * tail_k / (sk1 * sk1) };
    Ok(RsvdBounds {
        fro_sq: tail_i + g4q * c2 * tail_k,
        spec_sq: at(i + 1).powi(2) + g4q * c2 * tail_k,
        sv_rel: 0.5 * gamma.powi(4 * q as i32 + 2) * c2,
        hypothesis_holds: p >= 2 && hyp_lhs < (p as f64 - 1.0) / k as f64,
    })
}
