//! Forward simulation and sampling-method imaging for electromagnetic
//! scattering by 3D biperiodic anisotropic media.
//!
//! The crate is organised bottom-up:
//!
//! * [`modal`]: mode lattice, propagation constants, Rayleigh plane waves.
//! * [`green`]: quasiperiodic scalar/dyadic Green kernels (modal, Ewald and
//!   lattice-image routes), per-mode Rayleigh coefficient matrices and the
//!   resolution kernels `F` and `𝔽`.
//! * [`scene`]: permittivity models and point-source arrays.
//! * [`forward`]: volume integral equation solver and Rayleigh data.
//! * [`noise`]: reproducible Frobenius-normalised noise.
//! * [`imaging`]: the sampling indicator, the orthogonality sampling baseline
//!   and isovalue masks.
//! * [`config`], [`io`], [`pipeline`]: the experiment driver behind the CLI.

pub mod config;
pub mod error;
pub mod forward;
pub mod green;
pub mod imaging;
pub mod io;
pub mod krylov;
pub mod modal;
pub mod noise;
pub mod pipeline;
pub mod scene;

mod fft3;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use modal::{Mode, ModeIndex, ModeSet, Side, WaveParameters};

/// Real point or vector in ℝ³.
pub type Point3 = nalgebra::Vector3<f64>;
/// Complex 3-vector.
pub type CVec3 = nalgebra::Vector3<C64>;
/// Complex 3×3 matrix.
pub type CMat3 = nalgebra::Matrix3<C64>;
/// Real 3×3 matrix.
pub type Mat3 = nalgebra::Matrix3<f64>;

pub(crate) fn complexify(m: &Mat3) -> CMat3 {
    m.map(|v| C64::new(v, 0.0))
}
