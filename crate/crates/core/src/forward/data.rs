//! Rayleigh coefficients of scattered fields: the volume route, the surface
//! trace route, and the per-source data matrix.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::incident::incident_on_grid;
use super::solve::{solve_with, SolveReport, SolverSpec};
use super::{InteriorField, LsOperator, VoxelGrid};
use crate::error::{Error, Result};
use crate::green::modal::projector;
use crate::green::KernelTruncation;
use crate::modal::{ModeIndex, ModeSet, Side, WaveParameters, PERIOD};
use crate::scene::PermittivityModel;
use crate::{CVec3, Point3};

/// Upper and lower coefficients of one mode, indexed by [`Side::index`].
pub type SidePair = [CVec3; 2];

/// `u_j^±(l)` for every side, mode and source.
#[derive(Debug, Clone, PartialEq)]
pub struct RayleighDataMatrix {
    params: WaveParameters,
    modes: ModeSet,
    sources: usize,
    data: Vec<CVec3>,
}

impl RayleighDataMatrix {
    pub fn zeros(params: WaveParameters, modes: ModeSet, sources: usize) -> Self {
        let data = vec![CVec3::zeros(); 2 * modes.len() * sources];
        Self {
            params,
            modes,
            sources,
            data,
        }
    }

    /// Flat storage ordered by side, then mode, then source.
    pub fn from_flat(
        params: WaveParameters,
        modes: ModeSet,
        sources: usize,
        data: Vec<CVec3>,
    ) -> Result<Self> {
        if data.len() != 2 * modes.len() * sources {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for 2 × {} modes × {} sources",
                data.len(),
                modes.len(),
                sources
            )));
        }
        Ok(Self {
            params,
            modes,
            sources,
            data,
        })
    }

    pub fn params(&self) -> &WaveParameters {
        &self.params
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn n_sources(&self) -> usize {
        self.sources
    }

    fn at(&self, side: Side, m: usize, l: usize) -> usize {
        (side.index() * self.modes.len() + m) * self.sources + l
    }

    pub fn get(&self, side: Side, m: usize, l: usize) -> &CVec3 {
        &self.data[self.at(side, m, l)]
    }

    pub fn set(&mut self, side: Side, m: usize, l: usize, value: CVec3) {
        let i = self.at(side, m, l);
        self.data[i] = value;
    }

    /// Stores the coefficients of source `l` for every mode.
    pub fn set_source(&mut self, l: usize, coeffs: &[SidePair]) {
        assert_eq!(coeffs.len(), self.modes.len());
        for (m, pair) in coeffs.iter().enumerate() {
            for side in Side::BOTH {
                self.set(side, m, l, pair[side.index()]);
            }
        }
    }

    /// Coefficients of source `l` for every mode.
    pub fn source(&self, l: usize) -> Vec<SidePair> {
        (0..self.modes.len())
            .map(|m| Side::BOTH.map(|s| *self.get(s, m, l)))
            .collect()
    }

    pub fn as_flat(&self) -> &[CVec3] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [CVec3] {
        &mut self.data
    }

    /// Frobenius norm over all complex entries.
    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|v| v.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// Same data scaled by `c`.
    pub fn scaled(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Data restricted to `modes`, which must be a subset of the stored modes.
    pub fn restricted(&self, modes: &ModeSet) -> Result<Self> {
        let mut out = Self::zeros(self.params, modes.clone(), self.sources);
        for (m, mode) in modes.modes().iter().enumerate() {
            let src = self.modes.position(mode.index).ok_or_else(|| {
                Error::ModeMismatch(format!("mode {} is not present in the data", mode.index))
            })?;
            for side in Side::BOTH {
                for l in 0..self.sources {
                    out.set(side, m, l, *self.get(side, src, l));
                }
            }
        }
        Ok(out)
    }
}

/// Precomputed midpoint-rule map from a polarisation `(ε − I₃)E` on a grid to
/// the Rayleigh coefficients `k² ∫ g_j^±(y)(ε − I₃)E(y) dy` of every mode.
pub struct RayleighProjector {
    dims: [usize; 3],
    j1_values: Vec<i32>,
    mode_j1: Vec<usize>,
    /// `e^{−iα₁x₁}` per distinct first index and first-axis cell.
    phase1: Vec<Vec<C64>>,
    /// `e^{−iα₂x₂}` per mode and second-axis cell.
    phase2: Vec<Vec<C64>>,
    /// `e^{∓iβx₃}` per mode, side and level.
    phase3: Vec<[Vec<C64>; 2]>,
    /// `k² v (δ − γγᵀ/k²)(i/8π²β)e^{iβh}` per mode and side.
    weight: Vec<[crate::CMat3; 2]>,
}

impl RayleighProjector {
    pub fn new(params: &WaveParameters, grid: &VoxelGrid, modes: &ModeSet) -> Result<Self> {
        let [n0, n1, n2] = grid.dims();
        let mut j1_values: Vec<i32> = modes.indices().map(|j| j.j1).collect();
        j1_values.sort_unstable();
        j1_values.dedup();
        let alpha = params.alpha();
        let phase1 = j1_values
            .iter()
            .map(|&j1| {
                let a1 = alpha[0] + j1 as f64;
                (0..n0)
                    .map(|i| C64::new(0.0, -a1 * grid.coord(0, i)).exp())
                    .collect()
            })
            .collect();
        let k2v = params.k() * params.k() * grid.cell_volume();
        let mut mode_j1 = Vec::with_capacity(modes.len());
        let mut phase2 = Vec::with_capacity(modes.len());
        let mut phase3 = Vec::with_capacity(modes.len());
        let mut weight = Vec::with_capacity(modes.len());
        for mode in modes.modes() {
            let j = mode.index;
            let beta = params.try_beta(j)?;
            mode_j1.push(j1_values.binary_search(&j.j1).expect("collected above"));
            let a2 = alpha[1] + j.j2 as f64;
            phase2.push(
                (0..n1)
                    .map(|i| C64::new(0.0, -a2 * grid.coord(1, i)).exp())
                    .collect(),
            );
            phase3.push(Side::BOTH.map(|side| {
                (0..n2)
                    .map(|l| (-C64::i() * side.sign() * beta * grid.coord(2, l)).exp())
                    .collect()
            }));
            let scalar =
                C64::i() / (8.0 * PI * PI * beta) * (C64::i() * beta * params.h()).exp() * k2v;
            weight.push(
                Side::BOTH
                    .map(|side| projector(&params.gamma_vec(j, beta, side), params.k()) * scalar),
            );
        }
        Ok(Self {
            dims: grid.dims(),
            j1_values,
            mode_j1,
            phase1,
            phase2,
            phase3,
            weight,
        })
    }

    /// Coefficients of every mode for the polarisation `w` given per cell.
    pub fn project(&self, w: &[CVec3]) -> Vec<SidePair> {
        let [n0, n1, n2] = self.dims;
        assert_eq!(w.len(), n0 * n1 * n2);
        let n_j1 = self.j1_values.len();
        // first[a][(l, j)]: sum over the first axis.
        let mut first = vec![CVec3::zeros(); n_j1 * n1 * n2];
        for a in 0..n_j1 {
            let ph = &self.phase1[a];
            for lj in 0..n1 * n2 {
                let row = &w[lj * n0..(lj + 1) * n0];
                first[a * n1 * n2 + lj] = row.iter().zip(ph).map(|(v, p)| v * *p).sum();
            }
        }
        self.weight
            .iter()
            .enumerate()
            .map(|(m, weight)| {
                let a = self.mode_j1[m];
                let mut levels = vec![CVec3::zeros(); n2];
                for (l, level) in levels.iter_mut().enumerate() {
                    *level = (0..n1)
                        .map(|j| first[a * n1 * n2 + l * n1 + j] * self.phase2[m][j])
                        .sum();
                }
                Side::BOTH.map(|side| {
                    let s: CVec3 = levels
                        .iter()
                        .zip(&self.phase3[m][side.index()])
                        .map(|(v, p)| v * *p)
                        .sum();
                    weight[side.index()] * s
                })
            })
            .collect()
    }
}

/// `u_j^± = k² ∫_D g_j^±(y)(ε(y) − I₃)E(y) dy` by the midpoint rule.
pub fn rayleigh_data(
    params: &WaveParameters,
    model: &PermittivityModel,
    grid: &VoxelGrid,
    e: &InteriorField,
    modes: &ModeSet,
) -> Result<Vec<SidePair>> {
    let w: Vec<CVec3> = grid
        .centers()
        .zip(e.values())
        .map(|(x, v)| crate::complexify(&model.contrast(&x)) * v)
        .collect();
    Ok(RayleighProjector::new(params, grid, modes)?.project(&w))
}

/// `(α_{1,j}, α_{2,j}, ±β_j)ᵀ u_{3,j}^±` for every mode and side.
pub fn third_component_vector(
    params: &WaveParameters,
    modes: &ModeSet,
    coeffs: &[SidePair],
) -> Vec<SidePair> {
    modes
        .modes()
        .iter()
        .zip(coeffs)
        .map(|(mode, pair)| {
            Side::BOTH.map(|side| {
                let g = params.gamma_vec(mode.index, mode.beta, side);
                let u3 = pair[side.index()][2];
                CVec3::new(g[0] * u3, g[1] * u3, g[2] * u3)
            })
        })
        .collect()
}

/// Scattered field `Σ_j u_j^± φ_j^±(x)` above (`x₃ ≥ h`) or below (`x₃ ≤ −h`) the slab.
pub fn scattered_field(
    params: &WaveParameters,
    modes: &ModeSet,
    coeffs: &[SidePair],
    x: &Point3,
) -> Result<CVec3> {
    if x.z.abs() < params.h() {
        return Err(Error::invalid(
            "x",
            format!("|x₃| = {} is inside the slab", x.z.abs()),
        ));
    }
    let side = if x.z > 0.0 { Side::Upper } else { Side::Lower };
    Ok(modes
        .modes()
        .iter()
        .zip(coeffs)
        .map(|(mode, pair)| pair[side.index()] * params.plane_wave(mode.index, side, x))
        .sum())
}

/// The `n × n` sample points of the plane `x₃ = ±r`, first axis fastest.
pub fn trace_points(n: usize, side: Side, r: f64) -> Vec<Point3> {
    let c = |i: usize| -PI + PERIOD * i as f64 / n as f64;
    (0..n * n)
        .map(|f| Point3::new(c(f % n), c(f / n), side.sign() * r))
        .collect()
}

/// Rayleigh coefficient of mode `j` from field samples at [`trace_points`]:
/// `(1/4π²) ∫ u(x) e^{−i(α_j·x ± β_j(x₃ ∓ h))} ds` by the rectangle rule.
pub fn extract_rayleigh_from_trace(
    values: &[CVec3],
    n: usize,
    params: &WaveParameters,
    j: ModeIndex,
    side: Side,
    r: f64,
) -> Result<CVec3> {
    if values.len() != n * n {
        return Err(Error::ShapeMismatch(format!(
            "{} samples for a {n}×{n} trace",
            values.len()
        )));
    }
    if r < params.h() {
        return Err(Error::invalid(
            "r",
            format!("trace height {r} is below h = {}", params.h()),
        ));
    }
    if n <= 2 * j.sup_norm() as usize {
        log::warn!("trace grid {n}×{n} aliases mode {j}");
    }
    params.try_beta(j)?;
    let points = trace_points(n, side, r);
    let sum: CVec3 = values
        .iter()
        .zip(&points)
        .map(|(v, x)| v * params.plane_wave(j, side, x).conj())
        .sum();
    // |φ_j^±| = 1 only for propagating modes; the inverse keeps evanescent amplitudes exact.
    let norm = params.plane_wave(j, side, &points[0]).norm_sqr();
    Ok(sum / C64::new(n as f64 * n as f64 * norm, 0.0))
}

/// Data matrix plus per-source solver diagnostics.
#[derive(Debug, Clone)]
pub struct DataBuild {
    pub matrix: RayleighDataMatrix,
    pub reports: Vec<SolveReport>,
}

/// Solves for every source and assembles `u_j^±(l)`. Sources run in parallel;
/// the result is independent of scheduling.
pub fn build_data_matrix(
    params: &WaveParameters,
    model: &PermittivityModel,
    grid: &VoxelGrid,
    sources: &[Point3],
    modes: &ModeSet,
    solver: &SolverSpec,
    trunc: &KernelTruncation,
) -> Result<DataBuild> {
    let op = LsOperator::new(params, model, grid, trunc)?;
    let projector = RayleighProjector::new(params, grid, modes)?;
    let per_source: Vec<Result<(Vec<SidePair>, SolveReport)>> = sources
        .par_iter()
        .map(|y| {
            let e_in = incident_on_grid(params, y, grid, trunc)?;
            let (e, report) = solve_with(&op, e_in, solver)?;
            Ok((projector.project(&op.polarization(&e)), report))
        })
        .collect();
    let mut matrix = RayleighDataMatrix::zeros(*params, modes.clone(), sources.len());
    let mut reports = Vec::with_capacity(sources.len());
    for (l, result) in per_source.into_iter().enumerate() {
        let (coeffs, report) = result.map_err(|e| Error::Source {
            index: l,
            source: Box::new(e),
        })?;
        matrix.set_source(l, &coeffs);
        reports.push(report);
    }
    Ok(DataBuild { matrix, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::{green_modal, modal_coefficients};
    use crate::scene::{Bounds, VoxelTable};
    use crate::Mat3;

    fn tight() -> KernelTruncation {
        KernelTruncation {
            tail_tol: 1e-12,
            ..KernelTruncation::default()
        }
    }

    #[test]
    fn single_mode_trace_is_recovered_exactly() {
        let p = WaveParameters::new(2.0 * PI, [0.1, 0.2], 1.0).unwrap();
        let j0 = ModeIndex::new(2, -1);
        let c = CVec3::new(C64::new(1.0, 2.0), C64::new(-0.5, 0.0), C64::new(0.0, 0.3));
        let n = 16;
        for side in Side::BOTH {
            let values: Vec<CVec3> = trace_points(n, side, 1.4)
                .iter()
                .map(|x| c * p.plane_wave(j0, side, x))
                .collect();
            assert!(
                (extract_rayleigh_from_trace(&values, n, &p, j0, side, 1.4).unwrap() - c).norm()
                    < 1e-12
            );
            let other =
                extract_rayleigh_from_trace(&values, n, &p, ModeIndex::new(0, 3), side, 1.4)
                    .unwrap();
            assert!(other.norm() < 1e-12);
        }
    }

    #[test]
    fn trace_of_green_column_recovers_g_coeff() {
        let p = WaveParameters::benchmark();
        let z = Point3::new(0.3, -0.2, 0.1);
        let n = 32;
        let j = ModeIndex::new(1, -2);
        for side in Side::BOTH {
            let pts = trace_points(n, side, 1.2);
            let cols: Vec<_> = pts
                .iter()
                .map(|x| green_modal(&p, x, &z, &tight()).unwrap())
                .collect();
            let g = modal_coefficients(&p, j, side, &z).unwrap().g;
            for col in 0..3 {
                let values: Vec<CVec3> = cols.iter().map(|m| m.column(col).into_owned()).collect();
                let got = extract_rayleigh_from_trace(&values, n, &p, j, side, 1.2).unwrap();
                let want = g.column(col).into_owned();
                assert!((got - want).norm() < 1e-8 * g.norm(), "{side:?} {col}");
            }
        }
    }

    fn single_voxel() -> (WaveParameters, PermittivityModel, VoxelGrid, Point3) {
        let p = WaveParameters::benchmark();
        let y0 = Point3::new(0.2, -0.1, 0.05);
        let eps = Mat3::from_diagonal(&[1.3, 1.5, 1.4].into());
        let t = VoxelTable::single_cell(y0, 0.1, eps).unwrap();
        let m = PermittivityModel::custom(t).unwrap();
        let g = VoxelGrid::covering(&m, &p, Default::default()).unwrap();
        (p, m, g, y0)
    }

    #[test]
    fn single_voxel_closed_form() {
        let (p, model, grid, y0) = single_voxel();
        let modes = ModeSet::build(&p, 4, true).unwrap();
        let e = InteriorField::new(vec![CVec3::new(
            C64::new(0.4, 0.1),
            C64::new(-1.0, 0.2),
            C64::new(0.3, 0.0),
        )]);
        let u = rayleigh_data(&p, &model, &grid, &e, &modes).unwrap();
        let chi = crate::complexify(&model.contrast(&y0));
        let k2v = p.k() * p.k() * grid.cell_volume();
        let h = third_component_vector(&p, &modes, &u);
        for (m, mode) in modes.modes().iter().enumerate() {
            for side in Side::BOTH {
                let c = modal_coefficients(&p, mode.index, side, &y0).unwrap();
                let want = c.g * chi * e.values()[0] * C64::new(k2v, 0.0);
                let got = u[m][side.index()];
                assert!((got - want).norm() <= 1e-12 * want.norm().max(1e-300));
                let h_want = c.h * chi * e.values()[0] * C64::new(k2v, 0.0);
                assert!((h[m][side.index()] - h_want).norm() <= 1e-6 * h_want.norm().max(1e-300));
            }
        }
    }

    #[test]
    fn normal_mode_third_component_vector() {
        let p = WaveParameters::benchmark();
        let modes = ModeSet::from_indices(&p, &[ModeIndex::ZERO]).unwrap();
        let u3 = C64::new(0.3, -0.7);
        let coeffs = vec![[CVec3::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), u3); 2]];
        let h = third_component_vector(&p, &modes, &coeffs);
        assert_eq!(
            h[0][0],
            CVec3::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), u3 * 2.0 * PI)
        );
        assert_eq!(
            h[0][1],
            CVec3::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), -u3 * 2.0 * PI)
        );
    }

    #[test]
    fn volume_and_trace_routes_agree() {
        let p = WaveParameters::benchmark();
        let bounds = Bounds::new([-0.3, -0.3, -0.1], [0.3, 0.3, 0.1]).unwrap();
        let grid = VoxelGrid::new(bounds, [6, 6, 2]).unwrap();
        let model = PermittivityModel::new(
            crate::scene::Shape::Cube {
                half_extent: [0.3, 0.3, 0.1],
            },
            Mat3::from_diagonal(&[1.3, 1.5, 1.4].into()),
        )
        .unwrap();
        let y = Point3::new(0.0, 0.5, 2.5);
        let (e, _) = super::super::solve_total_field(
            &p,
            &model,
            &grid,
            &y,
            &SolverSpec::Born { order: 1 },
            &tight(),
        )
        .unwrap();
        let modes = ModeSet::propagating(&p).unwrap();
        let u = rayleigh_data(&p, &model, &grid, &e, &modes).unwrap();
        // Scattered field on the trace, as the midpoint-rule volume integral of 𝔾.
        let n = 24;
        let k2v = p.k() * p.k() * grid.cell_volume();
        let w: Vec<CVec3> = grid
            .centers()
            .zip(e.values())
            .map(|(x, v)| crate::complexify(&model.contrast(&x)) * v)
            .collect();
        for side in Side::BOTH {
            let pts = trace_points(n, side, 1.0);
            let values: Vec<CVec3> = pts
                .iter()
                .map(|x| {
                    grid.centers()
                        .zip(&w)
                        .map(|(yq, wq)| {
                            green_modal(&p, x, &yq, &tight()).unwrap() * wq * C64::new(k2v, 0.0)
                        })
                        .sum()
                })
                .collect();
            for (m, mode) in modes.modes().iter().enumerate().step_by(7) {
                let got =
                    extract_rayleigh_from_trace(&values, n, &p, mode.index, side, 1.0).unwrap();
                let want = u[m][side.index()];
                assert!(
                    (got - want).norm() < 1e-4 * want.norm().max(1e-12),
                    "{}",
                    mode.index
                );
            }
        }
    }

    #[test]
    fn data_matrix_layout_and_permutation() {
        let p = WaveParameters::benchmark();
        let (_, model, grid, _) = single_voxel();
        let modes = ModeSet::build(&p, 2, true).unwrap();
        let sources = vec![Point3::new(0.0, 0.0, 2.5), Point3::new(1.0, -0.5, -2.5)];
        let solver = SolverSpec::Born { order: 1 };
        let a = build_data_matrix(&p, &model, &grid, &sources, &modes, &solver, &tight()).unwrap();
        assert_eq!(a.matrix.as_flat().len(), 2 * modes.len() * 2);
        let swapped = vec![sources[1], sources[0]];
        let b = build_data_matrix(&p, &model, &grid, &swapped, &modes, &solver, &tight()).unwrap();
        for side in Side::BOTH {
            for m in 0..modes.len() {
                assert_eq!(a.matrix.get(side, m, 0), b.matrix.get(side, m, 1));
                assert_eq!(a.matrix.get(side, m, 1), b.matrix.get(side, m, 0));
            }
        }
    }

    #[test]
    fn zero_contrast_gives_zero_matrix() {
        let p = WaveParameters::benchmark();
        let t = VoxelTable::single_cell(Point3::zeros(), 0.2, Mat3::identity()).unwrap();
        let model = PermittivityModel::custom(t).unwrap();
        let grid = VoxelGrid::covering(&model, &p, Default::default()).unwrap();
        let modes = ModeSet::build(&p, 2, true).unwrap();
        let sources = vec![Point3::new(0.0, 0.0, 2.5), Point3::new(0.0, 0.0, -2.5)];
        let out = build_data_matrix(
            &p,
            &model,
            &grid,
            &sources,
            &modes,
            &SolverSpec::default(),
            &tight(),
        )
        .unwrap();
        assert_eq!(out.matrix.frobenius_norm(), 0.0);
    }
}
