//! Dense third-order real tensors and the t-product algebra.
//!
//! Storage is slice-sequential column-major: entry `(i, j, k)` lives at
//! `i + n1 * (j + n2 * k)`, so every frontal slice `A(:, :, k)` is a contiguous
//! column-major `n1 x n2` block.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Result, TubalError};
use crate::fourier::{fft3, ifft3, SpectralTensor3};
use crate::linalg::{self, C64};

/// A real `n1 x n2 x n3` tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    n1: usize,
    n2: usize,
    n3: usize,
    data: Vec<f64>,
}

/// Which tensor norm to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    /// Largest singular value over all Fourier-domain frontal slices.
    Spectral,
    /// Square root of the sum of squared entries.
    Frobenius,
}

impl Tensor3 {
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        Self {
            n1,
            n2,
            n3,
            data: vec![0.0; n1 * n2 * n3],
        }
    }

    /// Wraps `data` (in `(i, j, k)` order, `i` fastest). Rejects non-finite entries.
    pub fn from_vec(n1: usize, n2: usize, n3: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n1 * n2 * n3 {
            return Err(TubalError::Shape(format!(
                "{} values supplied for a {n1}x{n2}x{n3} tensor",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(TubalError::NonFinite(pos));
        }
        Ok(Self { n1, n2, n3, data })
    }

    pub fn from_fn(n1: usize, n2: usize, n3: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n1 * n2 * n3);
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    data.push(f(i, j, k));
                }
            }
        }
        Self { n1, n2, n3, data }
    }

    /// Stacks equally sized matrices as frontal slices.
    pub fn from_frontal_slices(slices: &[DMatrix<f64>]) -> Result<Self> {
        let Some(first) = slices.first() else {
            return Err(TubalError::Shape("no frontal slices given".into()));
        };
        let (n1, n2) = first.shape();
        let mut data = Vec::with_capacity(n1 * n2 * slices.len());
        for (k, s) in slices.iter().enumerate() {
            if s.shape() != (n1, n2) {
                return Err(TubalError::Shape(format!(
                    "frontal slice {k} is {}x{}, expected {n1}x{n2}",
                    s.nrows(),
                    s.ncols()
                )));
            }
            data.extend_from_slice(s.as_slice());
        }
        Self::from_vec(n1, n2, slices.len(), data)
    }

    /// The t-product identity: first frontal slice `I_n`, all others zero.
    pub fn identity(n: usize, n3: usize) -> Self {
        let mut t = Self::zeros(n, n, n3);
        for i in 0..n {
            t[(i, i, 0)] = 1.0;
        }
        t
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.n3)
    }

    #[inline]
    pub fn n1(&self) -> usize {
        self.n1
    }

    #[inline]
    pub fn n2(&self) -> usize {
        self.n2
    }

    #[inline]
    pub fn n3(&self) -> usize {
        self.n3
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.n1 && j < self.n2 && k < self.n3);
        i + self.n1 * (j + self.n2 * k)
    }

    /// Frontal slice `A(:, :, k)` as an `n1 x n2` matrix.
    pub fn frontal(&self, k: usize) -> DMatrix<f64> {
        let len = self.n1 * self.n2;
        DMatrix::from_column_slice(self.n1, self.n2, &self.data[k * len..(k + 1) * len])
    }

    pub fn set_frontal(&mut self, k: usize, m: &DMatrix<f64>) {
        assert_eq!(m.shape(), (self.n1, self.n2), "frontal slice shape");
        let len = self.n1 * self.n2;
        self.data[k * len..(k + 1) * len].copy_from_slice(m.as_slice());
    }

    /// Lateral slice `A(:, j, :)` as an `n1 x n3` matrix.
    pub fn lateral(&self, j: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n1, self.n3, |i, k| self[(i, j, k)])
    }

    /// Tube fiber `A(i, j, :)`.
    pub fn tube(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.n3).map(|k| self[(i, j, k)]).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn norm(&self, which: Norm) -> f64 {
        match which {
            Norm::Frobenius => self.frobenius_norm(),
            Norm::Spectral => {
                let hat = fft3(self);
                (0..hat.half_len())
                    .into_par_iter()
                    .map(|k| linalg::spectral_norm(&hat.frontal(k)))
                    .collect::<Vec<_>>()
                    .into_iter()
                    .fold(0.0, f64::max)
            }
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n1: self.n1,
            n2: self.n2,
            n3: self.n3,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Tensor3) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            n1: self.n1,
            n2: self.n2,
            n3: self.n3,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        })
    }

    pub fn check_same_shape(&self, other: &Tensor3) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(TubalError::Shape(format!(
                "{:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(())
    }

    /// Conjugate transpose: transpose each frontal slice, then reverse slices `2..n3`.
    pub fn conj_transpose(&self) -> Tensor3 {
        let n3 = self.n3;
        Tensor3::from_fn(self.n2, self.n1, n3, |i, j, k| {
            let src = (n3 - k) % n3;
            self[(j, i, src)]
        })
    }
}

impl Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.data[self.offset(i, j, k)]
    }
}

impl IndexMut<(usize, usize, usize)> for Tensor3 {
    #[inline]
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        let o = self.offset(i, j, k);
        &mut self.data[o]
    }
}

impl Add for &Tensor3 {
    type Output = Tensor3;

    fn add(self, rhs: &Tensor3) -> Tensor3 {
        self.axpy(1.0, rhs).expect("tensor shapes differ in addition")
    }
}

impl Sub for &Tensor3 {
    type Output = Tensor3;

    fn sub(self, rhs: &Tensor3) -> Tensor3 {
        self.axpy(-1.0, rhs).expect("tensor shapes differ in subtraction")
    }
}

impl Mul<f64> for &Tensor3 {
    type Output = Tensor3;

    fn mul(self, rhs: f64) -> Tensor3 {
        self.scaled(rhs)
    }
}

fn check_tprod_shapes(a: &Tensor3, b: &Tensor3) -> Result<()> {
    if a.n2 != b.n1 || a.n3 != b.n3 {
        return Err(TubalError::Shape(format!(
            "t-product of {:?} and {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

/// t-product `A * B` computed slice-wise in the Fourier domain.
///
/// Only the first `n3 / 2 + 1` Fourier slices are multiplied; the rest follow
/// from conjugate symmetry.
pub fn tprod(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    check_tprod_shapes(a, b)?;
    let ahat = fft3(a);
    let bhat = fft3(b);
    let (n1, n4, n3) = (a.n1, b.n2, a.n3);
    let half = ahat.half_len();
    let products: Vec<DMatrix<C64>> = (0..half)
        .into_par_iter()
        .map(|k| ahat.frontal(k) * bhat.frontal(k))
        .collect();
    let mut chat = SpectralTensor3::zeros(n1, n4, n3);
    for (k, p) in products.iter().enumerate() {
        chat.set_frontal(k, p);
    }
    chat.mirror_conjugate_in_place();
    ifft3(&chat)
}

/// t-product via the explicit block-circulant matrix `fold(circ(A) . unfold(B))`.
///
/// Costs `O(n1 n2 n4 n3^2)` time and `O(n1 n2 n3^2)` memory; meant as a test oracle.
pub fn tprod_bruteforce(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    check_tprod_shapes(a, b)?;
    let (n1, n2, n3) = a.dims();
    let n4 = b.n2;
    // Block (r, c) of circ(A) is A^((r - c) mod n3).
    let circ = DMatrix::from_fn(n1 * n3, n2 * n3, |row, col| {
        let (br, i) = (row / n1, row % n1);
        let (bc, j) = (col / n2, col % n2);
        a[(i, j, (br + n3 - bc) % n3)]
    });
    let unfold = DMatrix::from_fn(n2 * n3, n4, |row, col| b[(row % n2, col, row / n2)]);
    let prod = circ * unfold;
    Ok(Tensor3::from_fn(n1, n4, n3, |i, j, k| prod[(k * n1 + i, j)]))
}

/// An f-diagonal tensor: every frontal slice is diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct FDiagonalTensor(Tensor3);

impl FDiagonalTensor {
    /// Validates that all off-diagonal entries are exactly zero.
    pub fn new(t: Tensor3) -> Result<Self> {
        for k in 0..t.n3 {
            for j in 0..t.n2 {
                for i in 0..t.n1 {
                    if i != j && t[(i, j, k)] != 0.0 {
                        return Err(TubalError::Shape(format!(
                            "entry ({i},{j},{k}) of an f-diagonal tensor is nonzero"
                        )));
                    }
                }
            }
        }
        Ok(Self(t))
    }

    /// Builds the tensor whose Fourier-domain slice `k` is `diag(diagonals[k])`.
    ///
    /// `diagonals` must have one entry per Fourier slice, each padded or truncated to `r`,
    /// and must be symmetric under `k -> n3 - k` for the result to be real.
    pub fn from_fourier_diagonals(r: usize, diagonals: &[Vec<f64>]) -> Result<Self> {
        let n3 = diagonals.len();
        let mut hat = SpectralTensor3::zeros(r, r, n3);
        for (k, d) in diagonals.iter().enumerate() {
            for (j, &v) in d.iter().take(r).enumerate() {
                hat.set(j, j, k, C64::new(v, 0.0));
            }
        }
        let t = ifft3(&hat)?;
        // The inverse transform of diagonal slices is exactly diagonal; scrub rounding dust.
        let clean = Tensor3::from_fn(r, r, n3, |i, j, k| if i == j { t[(i, j, k)] } else { 0.0 });
        Ok(Self(clean))
    }

    pub fn as_tensor(&self) -> &Tensor3 {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor3 {
        self.0
    }

    /// Number of diagonal positions, `min(n1, n2)`.
    pub fn rank_capacity(&self) -> usize {
        self.0.n1.min(self.0.n2)
    }

    /// Spatial-domain singular value tube `S(j, j, :)`; zeros when `j` is beyond the diagonal.
    pub fn tube(&self, j: usize) -> Vec<f64> {
        if j < self.rank_capacity() {
            self.0.tube(j, j)
        } else {
            vec![0.0; self.0.n3]
        }
    }

    /// Fourier-domain diagonal `S_hat(j, j, k)` for every slice `k`.
    pub fn fourier_tube(&self, j: usize) -> Vec<f64> {
        let tube = self.tube(j);
        crate::fourier::dft(&tube.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>())
            .into_iter()
            .map(|c| c.re)
            .collect()
    }
}
