//! Shared numerical kernels.

mod diff;
mod field;
mod prox;
mod spectral;
mod window;

pub use diff::{grad_forward, grad_forward_adjoint, grad_n, laplacian};
pub use field::{Field2D, Spectrum2D, Tensor3};
pub use prox::{
    hard_scalar, hard_threshold, hard_threshold_tensor, sgn, slice_singular_values, soft_scalar,
    soft_threshold, soft_threshold_tensor, tensor_nuclear_norm, tsvt,
};
pub use spectral::{dft2, dft2_complex, idft2, idft2_complex};
pub use window::{cosine_window, gaussian_label, hann};
