use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::{check_exponent, FunctionalKind, ImagingResult, SamplingGrid};
use crate::error::{Error, Result};
use crate::forward::{InteriorField, VoxelGrid};
use crate::green::ResolutionKernel;
use crate::modal::WaveParameters;
use crate::scene::PermittivityModel;
use crate::{complexify, CVec3, Point3};

/// `Σ_l |(k²/2π²) ∫_D 𝔽(z, y)(ε(y) − I₃)E(y, l) dy|₂^p` by the midpoint rule on
/// the voxel grid that produced the fields.
pub struct TheoremRhs {
    kernel: ResolutionKernel,
    /// Active cell centres.
    cells: Vec<Point3>,
    /// `(k²/2π²) v (ε − I₃)E` per source, then per active cell.
    weighted: Vec<Vec<CVec3>>,
}

impl TheoremRhs {
    pub fn new(
        params: &WaveParameters,
        model: &PermittivityModel,
        grid: &VoxelGrid,
        fields: &[InteriorField],
    ) -> Result<Self> {
        let kernel = ResolutionKernel::new(params)?;
        let mut cells = Vec::new();
        let mut contrasts = Vec::new();
        for (f, x) in grid.centers().enumerate() {
            let chi = model.contrast(&x);
            if chi.iter().any(|&v| v != 0.0) {
                cells.push(x);
                contrasts.push((f, complexify(&chi)));
            }
        }
        let scale = C64::new(
            params.k() * params.k() / (2.0 * PI * PI) * grid.cell_volume(),
            0.0,
        );
        let weighted = fields
            .iter()
            .map(|e| {
                if e.values().len() != grid.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "field has {} values for a grid of {}",
                        e.values().len(),
                        grid.len()
                    )));
                }
                Ok(contrasts
                    .iter()
                    .map(|(f, chi)| chi * e.values()[*f] * scale)
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            kernel,
            cells,
            weighted,
        })
    }

    /// Value at one sampling point.
    pub fn at(&self, z: &Point3, p: f64) -> f64 {
        let kernels: Vec<_> = self
            .cells
            .iter()
            .map(|y| self.kernel.big_f(&(z - y)))
            .collect();
        self.weighted
            .iter()
            .map(|w| {
                let s: CVec3 = kernels.iter().zip(w).map(|(k, v)| k * v).sum();
                s.norm().powf(p)
            })
            .sum()
    }

    pub fn field(&self, grid: &SamplingGrid, p: f64) -> Result<ImagingResult> {
        check_exponent(p)?;
        let values = (0..grid.len())
            .into_par_iter()
            .map(|f| self.at(&grid.point(f), p))
            .collect();
        Ok(ImagingResult {
            grid: grid.clone(),
            values,
            p,
            kind: FunctionalKind::TheoremRhs,
            modes: self.kernel.len(),
        })
    }
}
