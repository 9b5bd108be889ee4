//! Resolution kernels `F = (Φ(x,y) − conj Φ(y,x)) / 2i` and its dyadic
//! counterpart `𝔽`.
//!
//! Evanescent Rayleigh terms cancel exactly in both, so the modal form is a
//! finite sum over propagating modes.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::modal::{ModeIndex, WaveParameters};
use crate::{CMat3, Point3};

#[derive(Debug, Clone, Copy)]
struct Propagating {
    a: [f64; 2],
    beta: f64,
}

/// Finite modal evaluator of `F` and `𝔽` for fixed wave parameters.
#[derive(Debug, Clone)]
pub struct ResolutionKernel {
    k: f64,
    modes: Vec<Propagating>,
}

impl ResolutionKernel {
    pub fn new(params: &WaveParameters) -> Result<Self> {
        let a_inf = params.alpha()[0].abs().max(params.alpha()[1].abs());
        let reach = (params.k() + a_inf).ceil() as u32 + 1;
        let mut modes = Vec::new();
        for j in ModeIndex::block(reach) {
            let a = params.alpha_vec(j);
            if a.x.hypot(a.y) > params.k() {
                continue;
            }
            let beta = params.try_beta(j)?;
            modes.push(Propagating {
                a: [a.x, a.y],
                beta: beta.re,
            });
        }
        Ok(Self {
            k: params.k(),
            modes,
        })
    }

    /// Number of propagating modes in the sum.
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    fn phase(m: &Propagating, d: &Point3) -> C64 {
        C64::new(0.0, m.a[0] * d.x + m.a[1] * d.y).exp() / (8.0 * PI * PI)
    }

    /// `F` at `d = x − y`.
    pub fn f(&self, d: &Point3) -> C64 {
        self.modes
            .iter()
            .map(|m| Self::phase(m, d) * ((m.beta * d.z).cos() / m.beta))
            .sum()
    }

    /// `𝔽` at `d = x − y`.
    pub fn big_f(&self, d: &Point3) -> CMat3 {
        let k2 = self.k * self.k;
        let mut out = CMat3::zeros();
        for m in &self.modes {
            let ph = Self::phase(m, d);
            let (s, c) = (m.beta * d.z).sin_cos();
            let even = c / m.beta;
            for a in 0..2 {
                for b in 0..2 {
                    let delta = if a == b { 1.0 } else { 0.0 };
                    out[(a, b)] += ph * (even * (delta - m.a[a] * m.a[b] / k2));
                }
                let odd = ph * C64::new(0.0, -m.a[a] * s / k2);
                out[(a, 2)] += odd;
                out[(2, a)] += odd;
            }
            out[(2, 2)] += ph * (even * (1.0 - m.beta * m.beta / k2));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::ewald::EwaldSum;

    fn sample_points() -> Vec<(Point3, Point3)> {
        vec![
            (Point3::new(0.3, 0.2, 0.4), Point3::new(-0.1, 0.5, -0.2)),
            (Point3::new(1.0, -1.2, 0.0), Point3::new(0.0, 0.0, 0.0)),
            (Point3::new(0.05, 0.0, 0.3), Point3::new(0.0, 0.1, 0.3)),
        ]
    }

    #[test]
    fn counts_propagating_modes() {
        let k = ResolutionKernel::new(&WaveParameters::benchmark()).unwrap();
        assert_eq!(k.len(), 121);
    }

    #[test]
    fn f_matches_ewald_difference() {
        let p = WaveParameters::new(2.0 * PI, [0.17, -0.31], 1.0).unwrap();
        let e = EwaldSum::new(&p).unwrap();
        let kernel = ResolutionKernel::new(&p).unwrap();
        for (x, y) in sample_points() {
            let oracle =
                (e.phi(&(x - y)).unwrap() - e.phi(&(y - x)).unwrap().conj()) / (2.0 * C64::i());
            let f = kernel.f(&(x - y));
            assert!(
                (f - oracle).norm() < 1e-10 * oracle.norm(),
                "{f} vs {oracle}"
            );
        }
    }

    #[test]
    fn big_f_matches_ewald_difference() {
        let p = WaveParameters::new(2.0 * PI, [0.17, -0.31], 1.0).unwrap();
        let e = EwaldSum::new(&p).unwrap();
        let kernel = ResolutionKernel::new(&p).unwrap();
        for (x, y) in sample_points() {
            let gxy = e.dyadic(&(x - y)).unwrap();
            let gyx = e.dyadic(&(y - x)).unwrap();
            let oracle = (gxy - gyx.map(|v| v.conj())) / (2.0 * C64::i());
            let f = kernel.big_f(&(x - y));
            assert!((f - oracle).norm() < 1e-9 * oracle.norm());
        }
    }

    #[test]
    fn f_is_real_and_even_at_zero_alpha() {
        let kernel = ResolutionKernel::new(&WaveParameters::benchmark()).unwrap();
        let d = Point3::new(0.4, -0.7, 0.25);
        let a = kernel.f(&d);
        let b = kernel.f(&-d);
        assert!(a.im.abs() < 1e-15);
        assert!((a - b).norm() < 1e-15);
    }
}
