//! Quasiperiodic Green kernels.
//!
//! [`phi`] and [`green_tensor`] pick a route by height separation: the modal
//! series when `|x₃ − y₃| ≥` [`MODAL_MIN_SEPARATION`], otherwise the spatial
//! route selected by [`KernelTruncation::lattice`].

pub mod ewald;
pub mod lattice;
pub mod modal;
pub mod resolution;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modal::WaveParameters;
use crate::{CMat3, Point3};

pub use ewald::EwaldSum;
pub use modal::{
    g_coeff, green_modal, h_coeff, modal_coefficients, phi_modal, r_coeff, GreenModalCoefficients,
    ModalCoefficients,
};
pub use resolution::ResolutionKernel;

/// Below this height separation the modal series is not used by the dispatchers.
pub const MODAL_MIN_SEPARATION: f64 = 0.5;

/// How lattice sums at small height separation are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeSum {
    /// Ewald splitting for `Φ`/`𝔾`; exact propagating-mode sums for `F`/`𝔽`.
    #[default]
    Accelerated,
    /// Plain image sums over `|j|∞ ≤ lattice_j`.
    Direct,
}

/// Truncation controls shared by every kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelTruncation {
    /// Minimum sup-norm shell of modal sums before the tail test applies.
    pub modal_j: u32,
    /// Image radius of the `Direct` route.
    pub lattice_j: u32,
    /// Relative tail tolerance of adaptive modal sums.
    pub tail_tol: f64,
    pub lattice: LatticeSum,
}

impl Default for KernelTruncation {
    fn default() -> Self {
        Self {
            modal_j: 8,
            lattice_j: 8,
            tail_tol: 1e-4,
            lattice: LatticeSum::Accelerated,
        }
    }
}

impl KernelTruncation {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(Error::invalid(
                "tail_tol",
                format!("must lie in (0, 1), got {}", self.tail_tol),
            ));
        }
        Ok(())
    }
}

/// Scalar quasiperiodic Green's function `Φ(x, y)`.
pub fn phi(
    params: &WaveParameters,
    x: &Point3,
    y: &Point3,
    trunc: &KernelTruncation,
) -> Result<C64> {
    trunc.validate()?;
    let d = x - y;
    if d.z.abs() >= MODAL_MIN_SEPARATION {
        return phi_modal(params, x, y, trunc);
    }
    match trunc.lattice {
        LatticeSum::Accelerated => EwaldSum::new(params)?.phi(&d),
        LatticeSum::Direct => lattice::phi_images(params, &d, trunc.lattice_j),
    }
}

/// Dyadic quasiperiodic Green tensor `𝔾(x, y) = Φ I + k⁻²∇_x∇_x Φ`.
pub fn green_tensor(
    params: &WaveParameters,
    x: &Point3,
    y: &Point3,
    trunc: &KernelTruncation,
) -> Result<CMat3> {
    trunc.validate()?;
    let d = x - y;
    if d.z.abs() >= MODAL_MIN_SEPARATION {
        return green_modal(params, x, y, trunc);
    }
    match trunc.lattice {
        LatticeSum::Accelerated => EwaldSum::new(params)?.dyadic(&d),
        LatticeSum::Direct => lattice::green_images(params, &d, trunc.lattice_j),
    }
}

/// Scalar resolution kernel `F(x, y)`.
pub fn f_kernel(
    params: &WaveParameters,
    x: &Point3,
    y: &Point3,
    trunc: &KernelTruncation,
) -> Result<C64> {
    let d = x - y;
    match trunc.lattice {
        LatticeSum::Accelerated => Ok(ResolutionKernel::new(params)?.f(&d)),
        LatticeSum::Direct => Ok(lattice::f_images(params, &d, trunc.lattice_j)),
    }
}

/// Dyadic resolution kernel `𝔽(x, y)`.
pub fn big_f_kernel(
    params: &WaveParameters,
    x: &Point3,
    y: &Point3,
    trunc: &KernelTruncation,
) -> Result<CMat3> {
    let d = x - y;
    match trunc.lattice {
        LatticeSum::Accelerated => Ok(ResolutionKernel::new(params)?.big_f(&d)),
        LatticeSum::Direct => Ok(lattice::big_f_images(params, &d, trunc.lattice_j)),
    }
}
