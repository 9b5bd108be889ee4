//! Sampling-point indicators: the Rayleigh-data functional, its volume
//! integral form, the orthogonality sampling baseline, and isovalue masks.

mod functional;
mod mask;
mod osm;
mod sweep;
mod theorem;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use functional::{imaging_functional, mode_weights, ModeWeights};
pub use mask::{centroid_of, isosurface_mask, jaccard, rasterize, Mask};
pub use osm::{osm_from_traces, osm_functional, OsmSettings};
pub use theorem::TheoremRhs;

use crate::error::{Error, Result};
use crate::modal::WaveParameters;
use crate::scene::Bounds;
use crate::Point3;

/// Cell-centred sampling points on a box inside the closed slab, first axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    bounds: Bounds,
    dims: [usize; 3],
}

impl SamplingGrid {
    pub fn new(params: &WaveParameters, bounds: Bounds, dims: [usize; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::invalid(
                "sampling",
                "every axis needs at least one point",
            ));
        }
        let tol = 1e-12;
        let inside = (0..2).all(|a| bounds.lo[a] >= -PI - tol && bounds.hi[a] <= PI + tol)
            && bounds.lo[2] >= -params.h() - tol
            && bounds.hi[2] <= params.h() + tol;
        if !inside {
            return Err(Error::invalid(
                "sampling",
                format!("box {bounds:?} leaves the closed period cell"),
            ));
        }
        Ok(Self { bounds, dims })
    }

    /// The whole period cell `(−π, π)² × (−h, h)`.
    pub fn period_cell(params: &WaveParameters, dims: [usize; 3]) -> Result<Self> {
        let h = params.h();
        Self::new(params, Bounds::new([-PI, -PI, -h], [PI, PI, h])?, dims)
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> [f64; 3] {
        let e = self.bounds.extent();
        [0, 1, 2].map(|a| e[a] / self.dims[a] as f64)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.bounds.lo[axis] + self.spacing()[axis] * (i as f64 + 0.5)
    }

    pub fn flat(&self, idx: [usize; 3]) -> usize {
        (idx[2] * self.dims[1] + idx[1]) * self.dims[0] + idx[0]
    }

    pub fn unflat(&self, flat: usize) -> [usize; 3] {
        let [n0, n1, _] = self.dims;
        [flat % n0, (flat / n0) % n1, flat / (n0 * n1)]
    }

    pub fn point(&self, flat: usize) -> Point3 {
        let [i, j, l] = self.unflat(flat);
        Point3::new(self.coord(0, i), self.coord(1, j), self.coord(2, l))
    }

    pub fn points(&self) -> impl Iterator<Item = Point3> + '_ {
        (0..self.len()).map(|f| self.point(f))
    }
}

/// Which indicator produced an [`ImagingResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    New,
    Osm,
    TheoremRhs,
}

/// Nonnegative indicator values on a sampling grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagingResult {
    pub grid: SamplingGrid,
    pub values: Vec<f64>,
    pub p: f64,
    pub kind: FunctionalKind,
    /// Number of modes entering the sum.
    pub modes: usize,
}

impl ImagingResult {
    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Flat index of the first maximum.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn argmax_point(&self) -> Point3 {
        self.grid.point(self.argmax())
    }

    /// Values divided by the maximum; all zeros stay zero.
    pub fn normalized(&self) -> Vec<f64> {
        let m = self.max();
        if m == 0.0 {
            return self.values.clone();
        }
        self.values.iter().map(|v| v / m).collect()
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            "p",
            format!("exponent {p} must be positive"),
        ))
    }
}
