//! Truncated sums over lattice images `|j|∞ ≤ J` of free-space kernels.
//!
//! These converge slowly and are kept as the `Direct` route and as test oracles.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::ewald::radial_hessian;
use crate::error::{Error, Result};
use crate::modal::{ModeIndex, WaveParameters, PERIOD};
use crate::{CMat3, Point3};

const SINGULAR_RADIUS: f64 = 1e-12;

/// `e^{ikr}/(4πr)` and its first two radial derivatives.
pub(crate) fn free_radial(r: f64, k: f64) -> [C64; 3] {
    let e = C64::new(0.0, k * r).exp();
    let ik = C64::new(0.0, k);
    [
        e / (4.0 * PI * r),
        e * (ik * r - 1.0) / (4.0 * PI * r * r),
        e * (2.0 - 2.0 * ik * r - k * k * r * r) / (4.0 * PI * r.powi(3)),
    ]
}

/// Spherical Bessel `j₀(x)` and `j₁(x)/x`, with series near the origin.
fn bessel_j0_j1x(x: f64) -> (f64, f64) {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        (1.0 - x2 / 6.0 + x2 * x2 / 120.0, 1.0 / 3.0 - x2 / 30.0)
    } else {
        let (s, c) = x.sin_cos();
        (s / x, (s / x - c) / (x * x))
    }
}

fn images(
    params: &WaveParameters,
    d: &Point3,
    lattice_j: u32,
) -> impl Iterator<Item = (Point3, C64)> {
    let alpha = params.alpha();
    let d = *d;
    ModeIndex::block(lattice_j).map(move |j| {
        let (j1, j2) = (j.j1 as f64, j.j2 as f64);
        let v = Point3::new(d.x + PERIOD * j1, d.y + PERIOD * j2, d.z);
        let phase = C64::new(0.0, -PERIOD * (alpha[0] * j1 + alpha[1] * j2)).exp();
        (v, phase)
    })
}

/// `Σ_{|j|∞≤J} e^{−i2πα·j} e^{ik|d_j|}/(4π|d_j|)`, `d_j = d + 2π(j₁, j₂, 0)`.
pub fn phi_images(params: &WaveParameters, d: &Point3, lattice_j: u32) -> Result<C64> {
    let mut sum = C64::new(0.0, 0.0);
    for (v, phase) in images(params, d, lattice_j) {
        let r = v.norm();
        if r < SINGULAR_RADIUS {
            return Err(Error::SingularPoint(r));
        }
        sum += phase * free_radial(r, params.k())[0];
    }
    Ok(sum)
}

/// Image sum of the free dyadic kernel `(I + k⁻²∇∇) e^{ikr}/(4πr)`.
pub fn green_images(params: &WaveParameters, d: &Point3, lattice_j: u32) -> Result<CMat3> {
    let k = params.k();
    let mut sum = CMat3::zeros();
    for (v, phase) in images(params, d, lattice_j) {
        let r = v.norm();
        if r < SINGULAR_RADIUS {
            return Err(Error::SingularPoint(r));
        }
        let [f0, f1, f2] = free_radial(r, k);
        let g = CMat3::identity() * f0 + radial_hessian(&v, r, f1, f2) / C64::new(k * k, 0.0);
        sum += g * phase;
    }
    Ok(sum)
}

/// Image sum of `(k/4π) j₀(k|d_j|)`.
pub fn f_images(params: &WaveParameters, d: &Point3, lattice_j: u32) -> C64 {
    let k = params.k();
    images(params, d, lattice_j)
        .map(|(v, phase)| phase * (k / (4.0 * PI) * bessel_j0_j1x(k * v.norm()).0))
        .sum()
}

/// Image sum of `(I + k⁻²∇∇)(k/4π) j₀(k|d_j|)`.
pub fn big_f_images(params: &WaveParameters, d: &Point3, lattice_j: u32) -> CMat3 {
    let k = params.k();
    let c = k / (4.0 * PI);
    let mut sum = CMat3::zeros();
    for (v, phase) in images(params, d, lattice_j) {
        let r = v.norm();
        let x = k * r;
        let (j0, j1x) = bessel_j0_j1x(x);
        // f′/r = −c k² j₁(x)/x, f″ = c k² (−j₀ + 2 j₁(x)/x).
        let f1r = -c * k * k * j1x;
        let f2 = c * k * k * (-j0 + 2.0 * j1x);
        let hess = if r < SINGULAR_RADIUS {
            crate::Mat3::identity() * f1r
        } else {
            let u = v / r;
            crate::Mat3::from_fn(|a, b| {
                let uu = u[a] * u[b];
                let delta = if a == b { 1.0 } else { 0.0 };
                f2 * uu + f1r * (delta - uu)
            })
        };
        let g = crate::Mat3::identity() * (c * j0) + hess / (k * k);
        sum += crate::complexify(&g) * phase;
    }
    sum
}
