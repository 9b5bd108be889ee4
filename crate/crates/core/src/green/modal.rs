//! Modal (Rayleigh-series) forms of the quasiperiodic kernels and the per-mode
//! coefficient matrices `r_j^±`, `g_j^±`, `h_j^±`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::KernelTruncation;
use crate::error::{Error, Result};
use crate::modal::{evanescent_tail_bound, ModeIndex, ModeSet, Side, WaveParameters};
use crate::{CMat3, Point3};

/// Shell cap for adaptive modal sums; reached only for nearly coincident heights.
pub const MAX_SHELLS: u32 = 1024;

/// `δ_mn − γ_m γ_n / k²` for `γ = (α_{1,j}, α_{2,j}, ±β_j)`.
pub(crate) fn projector(gamma: &[C64; 3], k: f64) -> CMat3 {
    let k2 = k * k;
    CMat3::from_fn(|m, n| {
        let delta = if m == n { 1.0 } else { 0.0 };
        C64::new(delta, 0.0) - gamma[m] * gamma[n] / k2
    })
}

/// Row `m` of `h` is `γ_m` times row 3 of `g`.
pub(crate) fn h_from_g(gamma: &[C64; 3], g: &CMat3) -> CMat3 {
    CMat3::from_fn(|m, n| gamma[m] * g[(2, n)])
}

fn check_slab(params: &WaveParameters, z: &Point3) -> Result<()> {
    if z.z.abs() < params.h() {
        Ok(())
    } else {
        Err(Error::OutsideSlab([z.x, z.y, z.z]))
    }
}

/// Rayleigh coefficient `r_j^±(z)` of the scalar kernel `Φ(·, z)`.
pub fn r_coeff(params: &WaveParameters, j: ModeIndex, side: Side, z: &Point3) -> Result<C64> {
    check_slab(params, z)?;
    let beta = params.try_beta(j)?;
    Ok(r_coeff_unchecked(params, j, beta, side, z))
}

pub(crate) fn r_coeff_unchecked(
    params: &WaveParameters,
    j: ModeIndex,
    beta: C64,
    side: Side,
    z: &Point3,
) -> C64 {
    let a = params.alpha_vec(j);
    let phase =
        C64::new(0.0, -a.x * z.x - a.y * z.y) + C64::i() * beta * (params.h() - side.sign() * z.z);
    C64::i() / (8.0 * PI * PI * beta) * phase.exp()
}

/// Rayleigh coefficients of the Green tensor columns: `(δ_mn − γ_mγ_n/k²) r_j^±(z)`.
pub fn g_coeff(params: &WaveParameters, j: ModeIndex, side: Side, z: &Point3) -> Result<CMat3> {
    Ok(modal_coefficients(params, j, side, z)?.g)
}

/// `h_j^±(z)`: rows `(α_{1,j}, α_{2,j}, ±β_j)` times the third row of `g_j^±(z)`.
pub fn h_coeff(params: &WaveParameters, j: ModeIndex, side: Side, z: &Point3) -> Result<CMat3> {
    Ok(modal_coefficients(params, j, side, z)?.h)
}

/// `r`, `g` and `h` for one mode and side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalCoefficients {
    pub r: C64,
    pub g: CMat3,
    pub h: CMat3,
}

pub fn modal_coefficients(
    params: &WaveParameters,
    j: ModeIndex,
    side: Side,
    z: &Point3,
) -> Result<ModalCoefficients> {
    check_slab(params, z)?;
    let beta = params.try_beta(j)?;
    Ok(coefficients_unchecked(params, j, beta, side, z))
}

pub(crate) fn coefficients_unchecked(
    params: &WaveParameters,
    j: ModeIndex,
    beta: C64,
    side: Side,
    z: &Point3,
) -> ModalCoefficients {
    let r = r_coeff_unchecked(params, j, beta, side, z);
    let gamma = params.gamma_vec(j, beta, side);
    let g = projector(&gamma, params.k()) * r;
    let h = h_from_g(&gamma, &g);
    ModalCoefficients { r, g, h }
}

/// Table of [`ModalCoefficients`] for every mode of a [`ModeSet`] at a point.
#[derive(Debug, Clone)]
pub struct GreenModalCoefficients {
    z: Point3,
    entries: Vec<[ModalCoefficients; 2]>,
}

impl GreenModalCoefficients {
    pub fn new(params: &WaveParameters, modes: &ModeSet, z: &Point3) -> Result<Self> {
        check_slab(params, z)?;
        let entries = modes
            .modes()
            .iter()
            .map(|m| {
                Side::BOTH.map(|side| coefficients_unchecked(params, m.index, m.beta, side, z))
            })
            .collect();
        Ok(Self { z: *z, entries })
    }

    pub fn point(&self) -> Point3 {
        self.z
    }

    /// Coefficients for the `m`-th mode of the set used at construction.
    pub fn get(&self, m: usize, side: Side) -> &ModalCoefficients {
        &self.entries[m][side.index()]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Adds sup-norm shells `0, 1, 2, …` until `trunc.modal_j` is reached and the
/// remaining evanescent tail is below `tail_tol` relative to the running sum.
/// `add_shell` returns the norm of the partial sum.
pub(crate) fn sum_shells(
    params: &WaveParameters,
    sep: f64,
    trunc: &KernelTruncation,
    order: u32,
    mut add_shell: impl FnMut(u32) -> Result<f64>,
) -> Result<u32> {
    let mut s = 0;
    loop {
        let norm = add_shell(s)?;
        if s >= trunc.modal_j {
            let bound = evanescent_tail_bound(params, s, sep, order);
            if bound <= trunc.tail_tol * norm.max(f64::MIN_POSITIVE) {
                return Ok(s);
            }
            if s >= MAX_SHELLS {
                return Err(Error::TailNotConverged {
                    shells: s as usize,
                    bound,
                });
            }
        }
        s += 1;
    }
}

fn separation(x: &Point3, y: &Point3) -> Result<f64> {
    let d3 = x.z - y.z;
    if d3 == 0.0 {
        return Err(Error::CoincidentHeight(d3));
    }
    Ok(d3)
}

/// Scalar quasiperiodic Green's function as the Rayleigh series
/// `(i/8π²) Σ_j β_j⁻¹ exp(i(α_j·(x − y) + β_j|x₃ − y₃|))`.
pub fn phi_modal(
    params: &WaveParameters,
    x: &Point3,
    y: &Point3,
    trunc: &KernelTruncation,
) -> Result<C64> {
    let d3 = separation(x, y)?;
    let d = x - y;
    let mut sum = C64::new(0.0, 0.0);
    sum_shells(params, d3.abs(), trunc, 0, |s| {
        for j in ModeIndex::shell(s) {
            let beta = params.try_beta(j)?;
            let a = params.alpha_vec(j);
            let phase = C64::new(0.0, a.x * d.x + a.y * d.y) + C64::i() * beta * d3.abs();
            sum += phase.exp() / beta;
        }
        Ok(sum.norm() / (8.0 * PI * PI))
    })?;
    Ok(C64::i() / (8.0 * PI * PI) * sum)
}

/// Dyadic quasiperiodic Green tensor via the Rayleigh series: every mode
/// contributes `(δ_mn − γ_mγ_n/k²)` times its scalar term, with
/// `γ₃ = sgn(x₃ − y₃) β_j`.
pub fn green_modal(
    params: &WaveParameters,
    x: &Point3,
    y: &Point3,
    trunc: &KernelTruncation,
) -> Result<CMat3> {
    let d3 = separation(x, y)?;
    let d = x - y;
    let side = if d3 > 0.0 { Side::Upper } else { Side::Lower };
    let scale = C64::i() / (8.0 * PI * PI);
    let mut sum = CMat3::zeros();
    sum_shells(params, d3.abs(), trunc, 2, |s| {
        for j in ModeIndex::shell(s) {
            let beta = params.try_beta(j)?;
            let a = params.alpha_vec(j);
            let phase = C64::new(0.0, a.x * d.x + a.y * d.y) + C64::i() * beta * d3.abs();
            let term = phase.exp() / beta;
            let gamma = params.gamma_vec(j, beta, side);
            sum += projector(&gamma, params.k()) * term;
        }
        Ok(sum.norm() / (8.0 * PI * PI))
    })?;
    Ok(sum * scale)
}
