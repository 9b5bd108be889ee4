use serde::{Deserialize, Serialize};

use num_complex::Complex64 as C64;

use super::incident::incident_on_grid;
use super::{InteriorField, LsOperator, VoxelGrid};
use crate::error::{Error, Result};
use crate::green::KernelTruncation;
use crate::krylov::{gmres, GmresOptions};
use crate::modal::WaveParameters;
use crate::scene::PermittivityModel;
use crate::{CVec3, Point3};

/// How the discrete volume equation `E = E_in + L E` is solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverSpec {
    /// The first `order` terms of the Neumann series `Σ Lⁱ E_in`.
    Born { order: u32 },
    /// Restarted GMRES on `(I − L)E = E_in`.
    Iterative(GmresOptions),
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec::Iterative(GmresOptions::default())
    }
}

/// Diagnostics of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Operator applications used.
    pub iterations: usize,
    /// `‖E − E_in − L E‖ / ‖E_in‖`.
    pub residual: f64,
}

pub(crate) fn field_norm(v: &[CVec3]) -> f64 {
    v.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

fn flatten(v: &[CVec3]) -> Vec<C64> {
    v.iter().flat_map(|x| [x[0], x[1], x[2]]).collect()
}

fn unflatten(v: &[C64]) -> Vec<CVec3> {
    v.chunks_exact(3)
        .map(|c| CVec3::new(c[0], c[1], c[2]))
        .collect()
}

fn relative_residual(op: &LsOperator, e: &[CVec3], e_in: &[CVec3]) -> f64 {
    let le = op.apply(e);
    let num: f64 = e
        .iter()
        .zip(e_in)
        .zip(&le)
        .map(|((x, b), l)| (x - b - l).norm_squared())
        .sum::<f64>()
        .sqrt();
    let den = field_norm(e_in);
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Solves with a prebuilt operator for a given incident field.
pub fn solve_with(
    op: &LsOperator,
    e_in: Vec<CVec3>,
    solver: &SolverSpec,
) -> Result<(Vec<CVec3>, SolveReport)> {
    if op.is_zero() {
        return Ok((
            e_in,
            SolveReport {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    match solver {
        SolverSpec::Born { order } => {
            if *order == 0 {
                return Err(Error::invalid("born_order", "must be at least 1"));
            }
            let mut total = e_in.clone();
            let mut term = e_in.clone();
            let mut previous = field_norm(&term);
            for i in 1..*order {
                term = op.apply(&term);
                let size = field_norm(&term);
                if previous > 0.0 && size > previous {
                    return Err(Error::BornDivergence {
                        term: i as usize,
                        ratio: size / previous,
                    });
                }
                previous = size;
                total.iter_mut().zip(&term).for_each(|(t, x)| *t += x);
            }
            let residual = relative_residual(op, &total, &e_in);
            Ok((
                total,
                SolveReport {
                    iterations: (*order - 1) as usize,
                    residual,
                },
            ))
        }
        SolverSpec::Iterative(opts) => {
            let b = flatten(&e_in);
            let out = gmres(
                |x| {
                    let v = unflatten(x);
                    let lv = op.apply(&v);
                    v.iter()
                        .zip(&lv)
                        .flat_map(|(a, l)| {
                            let d = a - l;
                            [d[0], d[1], d[2]]
                        })
                        .collect()
                },
                &b,
                opts,
            )?;
            let e = unflatten(&out.x);
            let residual = relative_residual(op, &e, &e_in);
            Ok((
                e,
                SolveReport {
                    iterations: out.iterations,
                    residual,
                },
            ))
        }
    }
}

/// Total field inside the grid for the point source at `source`.
pub fn solve_total_field(
    params: &WaveParameters,
    model: &PermittivityModel,
    grid: &VoxelGrid,
    source: &Point3,
    solver: &SolverSpec,
    trunc: &KernelTruncation,
) -> Result<(InteriorField, SolveReport)> {
    let op = LsOperator::new(params, model, grid, trunc)?;
    let e_in = incident_on_grid(params, source, grid, trunc)?;
    let (e, report) = solve_with(&op, e_in, solver)?;
    Ok((InteriorField::new(e), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Bounds, Shape};
    use crate::Mat3;

    fn setup(scale: f64) -> (WaveParameters, PermittivityModel, VoxelGrid) {
        let p = WaveParameters::benchmark();
        let model = PermittivityModel::new(
            Shape::Cube {
                half_extent: [0.4, 0.4, 0.2],
            },
            Mat3::identity() + Mat3::from_diagonal(&[0.3, 0.5, 0.4].into()) * scale,
        )
        .unwrap();
        let grid = VoxelGrid::new(
            Bounds::new([-0.4, -0.4, -0.2], [0.4, 0.4, 0.2]).unwrap(),
            [8, 8, 4],
        )
        .unwrap();
        (p, model, grid)
    }

    #[test]
    fn zero_contrast_returns_incident_field() {
        let (p, _, grid) = setup(1.0);
        let empty = PermittivityModel::new(
            Shape::Cube {
                half_extent: [0.4, 0.4, 0.2],
            },
            Mat3::identity(),
        )
        .unwrap();
        let y = Point3::new(0.0, 0.0, 2.5);
        let trunc = KernelTruncation::default();
        let (e, report) =
            solve_total_field(&p, &empty, &grid, &y, &SolverSpec::default(), &trunc).unwrap();
        let e_in = incident_on_grid(&p, &y, &grid, &trunc).unwrap();
        assert_eq!(report.iterations, 0);
        assert_eq!(e.values(), &e_in[..]);
    }

    #[test]
    fn iterative_solution_meets_tolerance() {
        let (p, model, grid) = setup(1.0);
        let y = Point3::new(0.5, -0.3, -2.5);
        let solver = SolverSpec::Iterative(GmresOptions {
            tol: 1e-8,
            ..GmresOptions::default()
        });
        let (_, report) =
            solve_total_field(&p, &model, &grid, &y, &solver, &KernelTruncation::default())
                .unwrap();
        assert!(report.residual <= 1e-7, "{report:?}");
        assert!(report.iterations > 0);
    }

    #[test]
    fn born_series_converges_quadratically_in_contrast() {
        let y = Point3::new(0.5, -0.3, 2.5);
        let trunc = KernelTruncation::default();
        let mut errors = Vec::new();
        let scales = [0.05, 0.1, 0.2];
        for s in scales {
            let (p, model, grid) = setup(s);
            let op = LsOperator::new(&p, &model, &grid, &trunc).unwrap();
            let e_in = incident_on_grid(&p, &y, &grid, &trunc).unwrap();
            let solver = SolverSpec::Iterative(GmresOptions {
                tol: 1e-12,
                ..GmresOptions::default()
            });
            let (full, _) = solve_with(&op, e_in.clone(), &solver).unwrap();
            let (born, _) = solve_with(&op, e_in.clone(), &SolverSpec::Born { order: 2 }).unwrap();
            let diff: Vec<CVec3> = full.iter().zip(&born).map(|(a, b)| a - b).collect();
            errors.push(field_norm(&diff) / field_norm(&e_in));
        }
        let slope = (errors[2] / errors[0]).ln() / (scales[2] / scales[0]).ln();
        assert!(slope > 1.8, "{slope} {errors:?}");
    }

    #[test]
    fn born_divergence_is_detected() {
        let (p, _, grid) = setup(1.0);
        let strong = PermittivityModel::new(
            Shape::Cube {
                half_extent: [0.4, 0.4, 0.2],
            },
            Mat3::identity() * 40.0,
        )
        .unwrap();
        let op = LsOperator::new(&p, &strong, &grid, &KernelTruncation::default()).unwrap();
        let e_in = incident_on_grid(
            &p,
            &Point3::new(0.0, 0.0, 2.5),
            &grid,
            &KernelTruncation::default(),
        )
        .unwrap();
        let out = solve_with(&op, e_in, &SolverSpec::Born { order: 12 });
        assert!(matches!(out, Err(Error::BornDivergence { .. })));
    }
}
