//! Discrete volume operator `E ↦ k² ∫_D 𝔾(x, y)(ε(y) − I₃)E(y) dy` at cell centres.
//!
//! Midpoint rule with a precomputed kernel table `K(x − y) = k² v 𝔾(x − y)`
//! applied by zero-padded FFT convolution. The self cell uses the free-space
//! equal-volume-ball integral plus the regular lattice remainder.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::{InteriorField, VoxelGrid};
use crate::error::Result;
use crate::fft3::Fft3;
use crate::green::ewald::{EwaldSum, SpectralMode};
use crate::green::{lattice, KernelTruncation, LatticeSum};
use crate::modal::WaveParameters;
use crate::scene::PermittivityModel;
use crate::{CMat3, CVec3, Mat3, Point3};

/// Storage order of the six independent entries of a symmetric 3×3 tensor.
const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

fn pair_slot(a: usize, b: usize) -> usize {
    match (a.min(b), a.max(b)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) => 3,
        (0, 2) => 4,
        _ => 5,
    }
}

/// Free-space self term `(2/3)((1 − ika)e^{ika} − 1) − 1/3` for the ball of radius `a`.
pub(crate) fn ball_self_term(k: f64, volume: f64) -> C64 {
    let a = (3.0 * volume / (4.0 * PI)).cbrt();
    let ika = C64::new(0.0, k * a);
    (2.0 / 3.0) * ((1.0 - ika) * ika.exp() - 1.0) - 1.0 / 3.0
}

/// Precomputed discrete operator for one grid and medium.
pub struct LsOperator {
    grid: VoxelGrid,
    padded: [usize; 3],
    fft: Fft3,
    spectra: [Vec<C64>; 6],
    contrast: Vec<Option<Mat3>>,
    active: usize,
}

impl LsOperator {
    pub fn new(
        params: &WaveParameters,
        model: &PermittivityModel,
        grid: &VoxelGrid,
        trunc: &KernelTruncation,
    ) -> Result<Self> {
        trunc.validate()?;
        let contrast: Vec<Option<Mat3>> = grid
            .centers()
            .map(|x| {
                let c = model.contrast(&x);
                (c.abs().max() > 0.0).then_some(c)
            })
            .collect();
        let active = contrast.iter().filter(|c| c.is_some()).count();
        let padded = grid.dims().map(|n| 2 * n);
        let fft = Fft3::new(padded);
        let mut tables = match trunc.lattice {
            LatticeSum::Accelerated => ewald_table(params, grid, padded)?,
            LatticeSum::Direct => direct_table(params, grid, padded, trunc.lattice_j)?,
        };
        for t in tables.iter_mut() {
            fft.forward(t);
        }
        Ok(Self {
            grid: grid.clone(),
            padded,
            fft,
            spectra: tables,
            contrast,
            active,
        })
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    /// Number of cells with nonzero contrast.
    pub fn active_cells(&self) -> usize {
        self.active
    }

    pub fn is_zero(&self) -> bool {
        self.active == 0
    }

    pub fn contrast(&self, cell: usize) -> Option<&Mat3> {
        self.contrast[cell].as_ref()
    }

    /// `(ε − I₃)E` per cell, zero outside the scatterer.
    pub fn polarization(&self, e: &[CVec3]) -> Vec<CVec3> {
        e.iter()
            .zip(&self.contrast)
            .map(|(v, c)| match c {
                Some(m) => crate::complexify(m) * v,
                None => CVec3::zeros(),
            })
            .collect()
    }

    /// Applies the discrete operator to a field given at every cell.
    pub fn apply(&self, e: &[CVec3]) -> Vec<CVec3> {
        assert_eq!(e.len(), self.grid.len());
        if self.is_zero() {
            return vec![CVec3::zeros(); e.len()];
        }
        let n = self.fft.len();
        let [n0, n1, n2] = self.grid.dims();
        let [p0, p1, _] = self.padded;
        let w = self.polarization(e);
        let mut inputs: [Vec<C64>; 3] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]);
        for l in 0..n2 {
            for j in 0..n1 {
                for i in 0..n0 {
                    let src = self.grid.flat([i, j, l]);
                    let dst = (l * p1 + j) * p0 + i;
                    for (c, input) in inputs.iter_mut().enumerate() {
                        input[dst] = w[src][c];
                    }
                }
            }
        }
        for input in inputs.iter_mut() {
            self.fft.forward(input);
        }
        let mut out = vec![CVec3::zeros(); e.len()];
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for a in 0..3 {
            for (f, b) in buf.iter_mut().enumerate() {
                *b = (0..3)
                    .map(|c| self.spectra[pair_slot(a, c)][f] * inputs[c][f])
                    .sum();
            }
            self.fft.inverse(&mut buf);
            for l in 0..n2 {
                for j in 0..n1 {
                    for i in 0..n0 {
                        out[self.grid.flat([i, j, l])][a] = buf[(l * p1 + j) * p0 + i];
                    }
                }
            }
        }
        out
    }
}

/// Wrapped position of a signed cell offset inside a padded axis of length `p`.
fn wrap(offset: isize, p: usize) -> usize {
    offset.rem_euclid(p as isize) as usize
}

fn offsets(n: usize) -> impl Iterator<Item = isize> + Clone {
    -(n as isize - 1)..=(n as isize - 1)
}

fn self_entry(params: &WaveParameters, grid: &VoxelGrid, regular: &CMat3) -> CMat3 {
    let k = params.k();
    let v = grid.cell_volume();
    CMat3::identity() * ball_self_term(k, v) + regular * C64::new(k * k * v, 0.0)
}

fn store(tables: &mut [Vec<C64>; 6], at: usize, m: &CMat3) {
    for (slot, &(a, b)) in PAIRS.iter().enumerate() {
        tables[slot][at] = m[(a, b)];
    }
}

fn direct_table(
    params: &WaveParameters,
    grid: &VoxelGrid,
    padded: [usize; 3],
    lattice_j: u32,
) -> Result<[Vec<C64>; 6]> {
    let n = padded.iter().product();
    let mut tables: [Vec<C64>; 6] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]);
    let [n0, n1, n2] = grid.dims();
    let s = grid.spacing();
    let k2v = params.k() * params.k() * grid.cell_volume();
    // The self cell keeps the non-central images of the same truncated sum.
    let mut regular = CMat3::zeros();
    for j in crate::modal::ModeIndex::block(lattice_j) {
        if j == crate::modal::ModeIndex::ZERO {
            continue;
        }
        let shift = Point3::new(2.0 * PI * j.j1 as f64, 2.0 * PI * j.j2 as f64, 0.0);
        let phase = C64::new(
            0.0,
            -2.0 * PI * (params.alpha()[0] * j.j1 as f64 + params.alpha()[1] * j.j2 as f64),
        )
        .exp();
        regular += lattice::green_images(params, &shift, 0)? * phase;
    }
    for r in offsets(n2) {
        for q in offsets(n1) {
            for p in offsets(n0) {
                let at = (wrap(r, padded[2]) * padded[1] + wrap(q, padded[1])) * padded[0]
                    + wrap(p, padded[0]);
                let m = if p == 0 && q == 0 && r == 0 {
                    self_entry(params, grid, &regular)
                } else {
                    let d = Point3::new(p as f64 * s[0], q as f64 * s[1], r as f64 * s[2]);
                    lattice::green_images(params, &d, lattice_j)? * C64::new(k2v, 0.0)
                };
                store(&mut tables, at, &m);
            }
        }
    }
    Ok(tables)
}

/// Kernel table from the Ewald splitting. The spectral half is separable in
/// the lateral offsets and is summed mode group by mode group.
fn ewald_table(
    params: &WaveParameters,
    grid: &VoxelGrid,
    padded: [usize; 3],
) -> Result<[Vec<C64>; 6]> {
    let ewald = EwaldSum::new(params)?;
    let n = padded.iter().product();
    let mut tables: [Vec<C64>; 6] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]);
    let [n0, n1, n2] = grid.dims();
    let s = grid.spacing();
    let k = params.k();
    let v = grid.cell_volume();
    let area = 4.0 * PI * PI;

    // Spectral modes grouped by first index; block order keeps them contiguous.
    let modes: &[SpectralMode] = ewald.spectral_modes();
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (m, mode) in modes.iter().enumerate() {
        match groups.last_mut() {
            Some((a1, members)) if *a1 == mode.a[0] => members.push(m),
            _ => groups.push((mode.a[0], vec![m])),
        }
    }
    let ps: Vec<isize> = offsets(n0).collect();
    let qs: Vec<isize> = offsets(n1).collect();
    let lateral1: Vec<Vec<C64>> = groups
        .iter()
        .map(|(a1, _)| {
            ps.iter()
                .map(|&p| C64::new(0.0, a1 * p as f64 * s[0]).exp())
                .collect()
        })
        .collect();
    let lateral2: Vec<Vec<C64>> = modes
        .iter()
        .map(|mode| {
            qs.iter()
                .map(|&q| C64::new(0.0, mode.a[1] * q as f64 * s[1]).exp())
                .collect()
        })
        .collect();

    let zero = C64::new(0.0, 0.0);
    for r in offsets(n2) {
        let z = r as f64 * s[2];
        let profiles: Vec<_> = modes.iter().map(|mode| ewald.profile(mode, z)).collect();
        // Partial sums over the second index: [c0, c0 a2, c0 a2², c1, c1 a2, c2].
        let partial: Vec<Vec<[C64; 6]>> = groups
            .iter()
            .map(|(_, members)| {
                (0..qs.len())
                    .map(|qi| {
                        let mut acc = [zero; 6];
                        for &m in members {
                            let e = lateral2[m][qi];
                            let a2 = modes[m].a[1];
                            let pr = &profiles[m];
                            let e0 = e * pr.c0;
                            let e1 = e * pr.c1;
                            acc[0] += e0;
                            acc[1] += e0 * a2;
                            acc[2] += e0 * (a2 * a2);
                            acc[3] += e1;
                            acc[4] += e1 * a2;
                            acc[5] += e * pr.c2;
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        for (qi, &q) in qs.iter().enumerate() {
            for (pi, &p) in ps.iter().enumerate() {
                let mut value = zero;
                let mut h = CMat3::zeros();
                for (g, (a1, _)) in groups.iter().enumerate() {
                    let e = lateral1[g][pi];
                    let [s0, s0a, s0aa, s1, s1a, s2] = partial[g][qi];
                    value += e * s0;
                    h[(0, 0)] -= e * s0 * (a1 * a1);
                    h[(0, 1)] -= e * s0a * *a1;
                    h[(1, 1)] -= e * s0aa;
                    h[(0, 2)] += e * s1 * C64::new(0.0, *a1);
                    h[(1, 2)] += e * s1a * C64::i();
                    h[(2, 2)] += e * s2;
                }
                let at = (wrap(r, padded[2]) * padded[1] + wrap(q, padded[1])) * padded[0]
                    + wrap(p, padded[0]);
                if p == 0 && q == 0 && r == 0 {
                    continue;
                }
                let d = Point3::new(p as f64 * s[0], q as f64 * s[1], z);
                let (sv, sh) = ewald.spatial(&d, false, true)?;
                let value = value / area + sv;
                let mut hess = h * C64::new(1.0 / area, 0.0) + sh;
                hess[(1, 0)] = hess[(0, 1)];
                hess[(2, 0)] = hess[(0, 2)];
                hess[(2, 1)] = hess[(1, 2)];
                let entry = (CMat3::identity() * (value * k * k) + hess) * C64::new(v, 0.0);
                store(&mut tables, at, &entry);
            }
        }
    }
    let (reg_value, reg_hess) = ewald.regular_part_at_origin();
    let regular = crate::green::ewald::dyadic_from(reg_value, &reg_hess, k);
    store(&mut tables, 0, &self_entry(params, grid, &regular));
    Ok(tables)
}

/// `k² ∫_D 𝔾(x, y)(ε(y) − I₃)E(y) dy` at every cell centre of `grid`.
pub fn ls_apply(
    params: &WaveParameters,
    model: &PermittivityModel,
    grid: &VoxelGrid,
    e: &InteriorField,
    trunc: &KernelTruncation,
) -> Result<InteriorField> {
    let op = LsOperator::new(params, model, grid, trunc)?;
    Ok(InteriorField::new(op.apply(e.values())))
}
