use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::lateral_sweep;
use super::{check_exponent, FunctionalKind, ImagingResult, SamplingGrid};
use crate::error::{Error, Result};
use crate::forward::{trace_points, RayleighDataMatrix};
use crate::green::{phi, KernelTruncation};
use crate::modal::{Side, WaveParameters};
use crate::CVec3;

/// Polarisation `q`, measurement height `ρ` and exponent `p` of the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OsmSettings {
    pub q: [f64; 3],
    pub rho: f64,
    pub p: f64,
}

impl Default for OsmSettings {
    fn default() -> Self {
        Self {
            q: [1.0, 1.0, 1.0],
            rho: 1.5,
            p: 3.0,
        }
    }
}

impl OsmSettings {
    pub fn validate(&self, params: &WaveParameters) -> Result<()> {
        check_exponent(self.p)?;
        if !(self.rho >= params.h()) || !self.rho.is_finite() {
            return Err(Error::invalid(
                "rho",
                format!("{} is below h = {}", self.rho, params.h()),
            ));
        }
        if self.q.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("q", "must be finite"));
        }
        Ok(())
    }

    fn q(&self) -> CVec3 {
        CVec3::new(self.q[0].into(), self.q[1].into(), self.q[2].into())
    }
}

/// Orthogonality sampling indicator from Rayleigh data. The surface integral
/// over `Γ_ρ ∪ Γ_{−ρ}` against `conj Φ(x, z)` is diagonal in the modes, which
/// leaves `4π² Σ_j Σ_± (u_j^±·q) conj(r_j^±(z)) |e^{iβ_j(ρ−h)}|²`.
pub fn osm_functional(
    u: &RayleighDataMatrix,
    grid: &SamplingGrid,
    params: &WaveParameters,
    settings: &OsmSettings,
) -> Result<ImagingResult> {
    settings.validate(params)?;
    if u.params() != params {
        return Err(Error::ModeMismatch(
            "data were generated with different wave parameters".into(),
        ));
    }
    let modes = u.modes();
    let sources = u.n_sources();
    let q = settings.q();
    let h = params.h();
    let projected: Vec<[Vec<C64>; 2]> = modes
        .modes()
        .iter()
        .enumerate()
        .map(|(m, mode)| {
            let decay = 4.0 * PI * PI * (-2.0 * mode.beta.im * (settings.rho - h)).exp();
            Side::BOTH.map(|side| {
                (0..sources)
                    .map(|l| u.get(side, m, l).dot(&q) * decay)
                    .collect()
            })
        })
        .collect();
    let values = lateral_sweep::<1, _>(params, modes, grid, sources, settings.p, |z3, out| {
        for (m, mode) in modes.modes().iter().enumerate() {
            let base = C64::i() / (8.0 * PI * PI * mode.beta);
            let level = Side::BOTH
                .map(|side| (base * (C64::i() * mode.beta * (h - side.sign() * z3)).exp()).conj());
            for l in 0..sources {
                out[m * sources + l] =
                    [projected[m][0][l] * level[0] + projected[m][1][l] * level[1]];
            }
        }
    });
    Ok(ImagingResult {
        grid: grid.clone(),
        values,
        p: settings.p,
        kind: FunctionalKind::Osm,
        modes: modes.len(),
    })
}

/// Same indicator by the rectangle rule on `n × n` samples of each plane,
/// laid out as in [`trace_points`]; `traces[l]` holds the upper then lower plane.
pub fn osm_from_traces(
    traces: &[[Vec<CVec3>; 2]],
    n: usize,
    grid: &SamplingGrid,
    params: &WaveParameters,
    settings: &OsmSettings,
    trunc: &KernelTruncation,
) -> Result<ImagingResult> {
    settings.validate(params)?;
    if traces.iter().flatten().any(|t| t.len() != n * n) {
        return Err(Error::ShapeMismatch(format!(
            "every trace needs {n}×{n} samples"
        )));
    }
    let planes = Side::BOTH.map(|side| trace_points(n, side, settings.rho));
    let q = settings.q();
    let weight = 4.0 * PI * PI / (n * n) as f64;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|f| {
            let z = grid.point(f);
            let kernel = planes
                .iter()
                .map(|pts| {
                    pts.iter()
                        .map(|x| phi(params, x, &z, trunc).map(|v| v.conj()))
                        .collect()
                })
                .collect::<Result<Vec<Vec<C64>>>>()?;
            Ok(traces
                .iter()
                .map(|per_source| {
                    let s: C64 = per_source
                        .iter()
                        .zip(&kernel)
                        .flat_map(|(t, k)| t.iter().zip(k).map(|(u, g)| u.dot(&q) * g))
                        .sum();
                    (s * weight).norm().powf(settings.p)
                })
                .sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ImagingResult {
        grid: grid.clone(),
        values,
        p: settings.p,
        kind: FunctionalKind::Osm,
        modes: 0,
    })
}
