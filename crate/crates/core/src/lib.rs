//! Third-order tensor algebra under the t-product, with randomized tubal rank revealing,
//! t-SVD variants, tensor singular value thresholding and tensor robust PCA.
//!
//! Start with [`tensor::Tensor3`] and [`turank::r_turank`]. The guide in `book/` walks
//! through every module with runnable examples.

// Parameter checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fourier;
pub mod linalg;
pub mod tensor;
pub mod turank;
pub mod rsvd;
pub mod tsvd;
pub mod rtsvd;
pub mod synth;
pub mod trpca;
pub mod io;
pub mod cli;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/tensors.md")]
    mod tensors {}
    #[doc = include_str!("../../../book/src/tsvd.md")]
    mod tsvd {}
    #[doc = include_str!("../../../book/src/turank.md")]
    mod turank {}
    #[doc = include_str!("../../../book/src/trpca.md")]
    mod trpca {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
