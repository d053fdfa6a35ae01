//! Grids, special functions, quadrature, discrete Fourier projection and the
//! dense symmetric eigensolver shared by the rest of the crate.

mod bessel;
mod eigen;
mod grid;
mod quadrature;

pub use bessel::bessel_j0;
pub(crate) use bessel::j0;
pub use eigen::{eigh_symmetric, SymmetricEigen};
pub(crate) use eigen::max_asymmetry as eigen_max_asymmetry;
pub use grid::{SampledFunction1D, SampledFunction2D, UniformGrid};
pub use quadrature::{
    grain_index, integrate, integrate_values, quadrature_weights, spectral_projection,
    spectral_projection_values,
};
