//! Mode-3 discrete Fourier transform between [`Tensor3`] and [`SpectralTensor3`].
//!
//! The forward transform is unnormalized, `x_hat[k] = sum_t x[t] exp(-2 pi i k t / n3)`,
//! and the inverse carries the `1 / n3` factor. The transform of a real tensor is
//! conjugate symmetric: slice 0 is real and slice `k` equals the conjugate of slice
//! `(n3 - k) mod n3` (0-based).

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, TubalError};
use crate::linalg::C64;
use crate::tensor::Tensor3;

/// Relative tolerance on the imaginary residual accepted by [`ifft3`].
pub const IMAG_RESIDUAL_TOL: f64 = 1e-10;

/// Complex `n1 x n2 x n3` tensor in the same index order as [`Tensor3`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralTensor3 {
    n1: usize,
    n2: usize,
    n3: usize,
    data: Vec<C64>,
}

/// Number of leading Fourier slices that determine the rest by conjugate symmetry,
/// `ceil((n3 + 1) / 2)`.
#[inline]
pub fn half_len(n3: usize) -> usize {
    n3 / 2 + 1
}

/// 0-based index of the conjugate partner of slice `k`.
#[inline]
pub fn mirror_index(k: usize, n3: usize) -> usize {
    (n3 - k) % n3
}

impl SpectralTensor3 {
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        Self {
            n1,
            n2,
            n3,
            data: vec![C64::new(0.0, 0.0); n1 * n2 * n3],
        }
    }

    pub fn from_vec(n1: usize, n2: usize, n3: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != n1 * n2 * n3 {
            return Err(TubalError::Shape(format!(
                "{} values supplied for a {n1}x{n2}x{n3} spectral tensor",
                data.len()
            )));
        }
        Ok(Self { n1, n2, n3, data })
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.n3)
    }

    #[inline]
    pub fn half_len(&self) -> usize {
        half_len(self.n3)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> C64 {
        self.data[i + self.n1 * (j + self.n2 * k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: C64) {
        self.data[i + self.n1 * (j + self.n2 * k)] = v;
    }

    /// Fourier slice `k` as a complex `n1 x n2` matrix.
    pub fn frontal(&self, k: usize) -> DMatrix<C64> {
        let len = self.n1 * self.n2;
        DMatrix::from_column_slice(self.n1, self.n2, &self.data[k * len..(k + 1) * len])
    }

    pub fn set_frontal(&mut self, k: usize, m: &DMatrix<C64>) {
        assert_eq!(m.shape(), (self.n1, self.n2), "spectral slice shape");
        let len = self.n1 * self.n2;
        self.data[k * len..(k + 1) * len].copy_from_slice(m.as_slice());
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation from conjugate symmetry (including the imaginary
    /// part of self-conjugate slices).
    pub fn symmetry_deviation(&self) -> f64 {
        let len = self.n1 * self.n2;
        let mut dev: f64 = 0.0;
        for k in 0..self.n3 {
            let m = mirror_index(k, self.n3);
            for e in 0..len {
                let a = self.data[k * len + e];
                let b = self.data[m * len + e].conj();
                dev = dev.max((a - b).norm());
            }
        }
        dev
    }

    /// Overwrites slices past [`half_len`] with the conjugates of their partners.
    pub fn mirror_conjugate_in_place(&mut self) {
        let len = self.n1 * self.n2;
        for k in self.half_len()..self.n3 {
            let m = mirror_index(k, self.n3);
            for e in 0..len {
                self.data[k * len + e] = self.data[m * len + e].conj();
            }
        }
    }
}

/// Whether Fourier slice `k` equals its own conjugate partner (slice 0, and slice
/// `n3 / 2` for even `n3`). Such slices are real for a real tensor.
#[inline]
pub fn is_self_conjugate(k: usize, n3: usize) -> bool {
    mirror_index(k, n3) == k
}

/// Returns a copy of `ahat` whose slices past [`half_len`] are rebuilt by conjugating
/// their mirror slices. Only the leading slices of the input are read.
pub fn mirror_conjugate(ahat: &SpectralTensor3) -> SpectralTensor3 {
    let mut out = ahat.clone();
    out.mirror_conjugate_in_place();
    out
}

fn plan(n3: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n3)
    } else {
        planner.plan_fft_forward(n3)
    }
}

// Gathers tubes into a tube-major buffer, transforms every tube, and scatters back.
fn transform_tubes(n1: usize, n2: usize, n3: usize, src: impl Fn(usize) -> C64 + Sync, inverse: bool) -> Vec<C64> {
    let tubes = n1 * n2;
    let mut buf = vec![C64::new(0.0, 0.0); tubes * n3];
    buf.par_chunks_mut(n3).enumerate().for_each(|(t, tube)| {
        for (k, v) in tube.iter_mut().enumerate() {
            *v = src(t + tubes * k);
        }
    });
    if n3 > 1 {
        let fft = plan(n3, inverse);
        let per_task = (4096 / n3).max(1) * n3;
        buf.par_chunks_mut(per_task).for_each(|chunk| fft.process(chunk));
    }
    let mut out = vec![C64::new(0.0, 0.0); tubes * n3];
    out.par_chunks_mut(tubes).enumerate().for_each(|(k, slice)| {
        for (t, v) in slice.iter_mut().enumerate() {
            *v = buf[t * n3 + k];
        }
    });
    out
}

/// Forward DFT of every tube `A(i, j, :)`.
pub fn fft3(a: &Tensor3) -> SpectralTensor3 {
    let (n1, n2, n3) = a.dims();
    let src = a.as_slice();
    let data = transform_tubes(n1, n2, n3, |idx| C64::new(src[idx], 0.0), false);
    SpectralTensor3 { n1, n2, n3, data }
}

/// A real tensor recovered from the spectral domain, with the size of the discarded
/// imaginary part.
#[derive(Clone, Debug)]
pub struct Realified {
    pub tensor: Tensor3,
    /// Frobenius norm of the imaginary part of the inverse transform.
    pub imag_residual: f64,
}

/// Inverse DFT along mode 3, keeping the imaginary residual for inspection.
pub fn ifft3_with_residual(ahat: &SpectralTensor3) -> Realified {
    let (n1, n2, n3) = ahat.dims();
    let src = &ahat.data;
    let raw = transform_tubes(n1, n2, n3, |idx| src[idx], true);
    let scale = 1.0 / n3 as f64;
    let mut imag = 0.0;
    let mut real = Vec::with_capacity(raw.len());
    for c in raw {
        imag += (c.im * scale).powi(2);
        real.push(c.re * scale);
    }
    Realified {
        tensor: Tensor3::from_fn(n1, n2, n3, |i, j, k| real[i + n1 * (j + n2 * k)]),
        imag_residual: imag.sqrt(),
    }
}

/// Inverse DFT along mode 3.
///
/// Fails with [`TubalError::ImaginaryResidualTooLarge`] when the imaginary part exceeds
/// `1e-10 * ||ahat||_F`, i.e. when the input is not conjugate symmetric.
pub fn ifft3(ahat: &SpectralTensor3) -> Result<Tensor3> {
    ifft3_checked(ahat).map(|r| r.tensor)
}

/// Like [`ifft3`], but also reports the (accepted) imaginary residual.
pub fn ifft3_checked(ahat: &SpectralTensor3) -> Result<Realified> {
    let out = ifft3_with_residual(ahat);
    let limit = IMAG_RESIDUAL_TOL * ahat.frobenius_norm();
    if out.imag_residual > limit {
        return Err(TubalError::ImaginaryResidualTooLarge {
            residual: out.imag_residual,
            limit,
        });
    }
    Ok(out)
}

/// Assembles a spectral tensor from its leading [`half_len`] slices and fills the rest by
/// conjugate symmetry.
pub fn from_half_slices(n1: usize, n2: usize, n3: usize, slices: &[DMatrix<C64>]) -> SpectralTensor3 {
    assert_eq!(slices.len(), half_len(n3).min(n3), "number of half slices");
    let mut hat = SpectralTensor3::zeros(n1, n2, n3);
    for (k, s) in slices.iter().enumerate() {
        hat.set_frontal(k, s);
    }
    hat.mirror_conjugate_in_place();
    hat
}

/// Inverse DFT that silently drops any imaginary part.
pub fn ifft3_lossy(ahat: &SpectralTensor3) -> Tensor3 {
    ifft3_with_residual(ahat).tensor
}

/// Unnormalized forward DFT of a single sequence.
pub fn dft(x: &[C64]) -> Vec<C64> {
    let mut buf = x.to_vec();
    if buf.len() > 1 {
        plan(buf.len(), false).process(&mut buf);
    }
    buf
}

/// Inverse DFT of a single sequence, including the `1 / n` factor.
pub fn idft(x: &[C64]) -> Vec<C64> {
    let n = x.len();
    let mut buf = x.to_vec();
    if n > 1 {
        plan(n, true).process(&mut buf);
    }
    buf.iter().map(|c| c / n as f64).collect()
}
