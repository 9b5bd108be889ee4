use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modal::WaveParameters;
use crate::scene::{Bounds, PermittivityModel, Shape};
use crate::Point3;

/// Voxel resolution request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridResolution {
    /// Cubic cells with this many cells along the longest padded axis.
    Cubic(usize),
    /// Cell counts per axis.
    Explicit([usize; 3]),
}

impl Default for GridResolution {
    fn default() -> Self {
        GridResolution::Cubic(32)
    }
}

/// Uniform cell-centred grid on an axis-aligned box; flat indices run with the
/// first axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    lo: [f64; 3],
    spacing: [f64; 3],
    dims: [usize; 3],
}

impl VoxelGrid {
    pub fn new(bounds: Bounds, dims: [usize; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::invalid("grid", "every axis needs at least one cell"));
        }
        let e = bounds.extent();
        Ok(Self {
            lo: bounds.lo,
            spacing: [0, 1, 2].map(|a| e[a] / dims[a] as f64),
            dims,
        })
    }

    /// Grid over the support of `model`, padded by one cell on every side.
    /// Tabulated models use their own box without padding: with
    /// [`GridResolution::Cubic`] the table cells themselves, otherwise the
    /// requested counts.
    pub fn covering(
        model: &PermittivityModel,
        params: &WaveParameters,
        resolution: GridResolution,
    ) -> Result<Self> {
        let support = *model.support();
        let grid = match (model.shape(), resolution) {
            (Shape::CustomVoxel(t), GridResolution::Cubic(_)) => Self::new(*t.bounds(), t.dims())?,
            (Shape::CustomVoxel(t), GridResolution::Explicit(d)) => Self::new(*t.bounds(), d)?,
            (_, GridResolution::Cubic(n)) => {
                if n < 3 {
                    return Err(Error::invalid(
                        "grid",
                        "need at least 3 cells along the longest axis",
                    ));
                }
                let e = support.extent();
                let longest = e.iter().cloned().fold(0.0, f64::max);
                let h = longest / (n - 2) as f64;
                let dims = e.map(|v| (v / h - 1e-9).ceil().max(1.0) as usize + 2);
                Self::padded(&support, [h; 3], dims)
            }
            (_, GridResolution::Explicit(d)) => {
                if d.iter().any(|&n| n < 3) {
                    return Err(Error::invalid("grid", "need at least 3 cells per axis"));
                }
                let e = support.extent();
                let spacing = [0, 1, 2].map(|a| e[a] / (d[a] - 2) as f64);
                Self::padded(&support, spacing, d)
            }
        };
        if !grid.bounds().inside_slab(params.h()) {
            return Err(Error::invalid(
                "grid",
                format!("padded grid {:?} leaves the slab", grid.bounds()),
            ));
        }
        let wavelength = 2.0 * std::f64::consts::PI / params.k();
        if grid.cell_diameter() > wavelength / 10.0 {
            log::warn!(
                "voxel diameter {:.4} exceeds a tenth of the wavelength {:.4}",
                grid.cell_diameter(),
                wavelength
            );
        }
        Ok(grid)
    }

    fn padded(support: &Bounds, spacing: [f64; 3], dims: [usize; 3]) -> Self {
        let lo = [0, 1, 2]
            .map(|a| 0.5 * (support.lo[a] + support.hi[a]) - 0.5 * dims[a] as f64 * spacing[a]);
        Self { lo, spacing, dims }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn cell_diameter(&self) -> f64 {
        self.spacing.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    pub fn bounds(&self) -> Bounds {
        Bounds {
            lo: self.lo,
            hi: [0, 1, 2].map(|a| self.lo[a] + self.spacing[a] * self.dims[a] as f64),
        }
    }

    /// Centre coordinate of cell `i` along `axis`.
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + self.spacing[axis] * (i as f64 + 0.5)
    }

    pub fn flat(&self, idx: [usize; 3]) -> usize {
        (idx[2] * self.dims[1] + idx[1]) * self.dims[0] + idx[0]
    }

    pub fn unflat(&self, flat: usize) -> [usize; 3] {
        let [n0, n1, _] = self.dims;
        [flat % n0, (flat / n0) % n1, flat / (n0 * n1)]
    }

    pub fn center(&self, flat: usize) -> Point3 {
        let [i, j, l] = self.unflat(flat);
        Point3::new(self.coord(0, i), self.coord(1, j), self.coord(2, l))
    }

    pub fn centers(&self) -> impl Iterator<Item = Point3> + '_ {
        (0..self.len()).map(|f| self.center(f))
    }
}
