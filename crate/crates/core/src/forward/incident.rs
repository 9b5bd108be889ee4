//! Incident fields on whole voxel grids, summed separably in the lateral axes.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::VoxelGrid;
use crate::error::{Error, Result};
use crate::green::KernelTruncation;
use crate::modal::{ModeIndex, Side, WaveParameters};
use crate::scene::incident_field_with_shells;
use crate::{CVec3, Point3};

/// Incident field of the source at `y` at every cell centre of `grid`.
///
/// The mode block is the one the adaptive pointwise rule needs at the grid
/// level nearest the source, which bounds the tail everywhere else.
pub fn incident_on_grid(
    params: &WaveParameters,
    y: &Point3,
    grid: &VoxelGrid,
    trunc: &KernelTruncation,
) -> Result<Vec<CVec3>> {
    let [n0, n1, n2] = grid.dims();
    let nearest = (0..n2)
        .map(|l| grid.coord(2, l))
        .min_by(|a, b| (a - y.z).abs().total_cmp(&(b - y.z).abs()))
        .expect("grid has at least one level");
    let probe = Point3::new(grid.coord(0, n0 / 2), grid.coord(1, n1 / 2), nearest);
    let (_, shells) = incident_field_with_shells(params, y, &probe, trunc)?;
    let s = shells as i32;
    let width = (2 * s + 1) as usize;
    let k2 = params.k() * params.k();

    let mut betas = Vec::with_capacity(width * width);
    for j1 in -s..=s {
        for j2 in -s..=s {
            betas.push(params.try_beta(ModeIndex::new(j1, j2))?);
        }
    }
    let alpha = params.alpha();
    let phase1: Vec<Vec<C64>> = (-s..=s)
        .map(|j1| {
            let a1 = alpha[0] + j1 as f64;
            (0..n0)
                .map(|i| C64::new(0.0, a1 * (grid.coord(0, i) - y.x)).exp())
                .collect()
        })
        .collect();
    let phase2: Vec<Vec<C64>> = (-s..=s)
        .map(|j2| {
            let a2 = alpha[1] + j2 as f64;
            (0..n1)
                .map(|i| C64::new(0.0, a2 * (grid.coord(1, i) - y.y)).exp())
                .collect()
        })
        .collect();

    let mut out = vec![CVec3::zeros(); grid.len()];
    let mut coef = vec![CVec3::zeros(); width * width];
    let mut partial = vec![CVec3::zeros(); width * n1];
    for l in 0..n2 {
        let d3 = grid.coord(2, l) - y.z;
        if d3 == 0.0 {
            return Err(Error::CoincidentHeight(d3));
        }
        let side = if d3 > 0.0 { Side::Upper } else { Side::Lower };
        for (m, c) in coef.iter_mut().enumerate() {
            let j = ModeIndex::new(m as i32 / width as i32 - s, m as i32 % width as i32 - s);
            let beta = betas[m];
            let g = params.gamma_vec(j, beta, side);
            let scalar = C64::i() / (8.0 * PI * PI * beta) * (C64::i() * beta * d3.abs()).exp();
            *c = CVec3::new(
                -g[0] * g[2] / k2 * scalar,
                -g[1] * g[2] / k2 * scalar,
                (1.0 - g[2] * g[2] / k2) * scalar,
            );
        }
        for a in 0..width {
            for i in 0..n1 {
                partial[a * n1 + i] = (0..width).map(|b| coef[a * width + b] * phase2[b][i]).sum();
            }
        }
        for j in 0..n1 {
            for i in 0..n0 {
                out[grid.flat([i, j, l])] =
                    (0..width).map(|a| partial[a * n1 + j] * phase1[a][i]).sum();
            }
        }
    }
    Ok(out)
}
