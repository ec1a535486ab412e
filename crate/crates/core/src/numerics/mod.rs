//! Complex linear algebra and transform kernels shared by every other module.

mod decomp;
mod fft;
mod matrix;
mod scalar;

pub use decomp::{
    cholesky, cholesky_solve_factored, forward_substitute, hermitian_solve, solve_in_place, svd,
    Lu, Svd, COND_LIMIT,
};
pub use fft::{fft, ifft, FftEngine};
pub use matrix::CMatrix;
pub use scalar::{complex_normal, mix_seed, Scalar};
