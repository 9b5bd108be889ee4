use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::sweep::lateral_sweep;
use super::{check_exponent, FunctionalKind, ImagingResult, SamplingGrid};
use crate::error::{Error, Result};
use crate::forward::RayleighDataMatrix;
use crate::green::modal::projector;
use crate::green::GreenModalCoefficients;
use crate::modal::{ModeSet, Side, WaveParameters};
use crate::{CMat3, CVec3, Point3};

/// Matrix and vector multiplying `u_j^±` and `u_{3,j}^±` in the indicator, per side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeWeights {
    pub w: [CMat3; 2],
    pub v: [CVec3; 2],
}

/// `W_j^±(z) = (h_j^±(z) ∓ 2Re(β_j) g_j^±(z))^*` and
/// `V_j^±(z) = g_j^±(z)^* (α_{1,j}, α_{2,j}, ±β_j)ᵀ` for every mode.
pub fn mode_weights(
    params: &WaveParameters,
    modes: &ModeSet,
    z: &Point3,
) -> Result<Vec<ModeWeights>> {
    let table = GreenModalCoefficients::new(params, modes, z)?;
    Ok(modes
        .modes()
        .iter()
        .enumerate()
        .map(|(m, mode)| {
            let two_re_beta = 2.0 * mode.beta.re;
            let w = Side::BOTH.map(|side| {
                let c = table.get(m, side);
                (c.h - c.g * C64::new(side.sign() * two_re_beta, 0.0)).adjoint()
            });
            let v = Side::BOTH.map(|side| {
                let g = params.gamma_vec(mode.index, mode.beta, side);
                table.get(m, side).g.adjoint() * CVec3::new(g[0], g[1], g[2])
            });
            ModeWeights { w, v }
        })
        .collect())
}

/// `z`-independent part of the weights: with `g_j^± = M r_j^±` the summand
/// for one side is `±conj(r_j^±(z)) C u_j^±`.
fn data_factor(params: &WaveParameters, gamma: &[C64; 3], re_beta: f64, side: Side) -> CMat3 {
    let m = projector(gamma, params.k());
    let column = CVec3::new(gamma[0], gamma[1], gamma[2]);
    let e3 = CVec3::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    let h = column * (e3.transpose() * m);
    let w = (h - m * C64::new(2.0 * side.sign() * re_beta, 0.0)).adjoint();
    w + m.adjoint() * column * e3.transpose()
}

/// The sampling indicator on `grid` from Rayleigh data, restricted to `modes`.
pub fn imaging_functional(
    u: &RayleighDataMatrix,
    grid: &SamplingGrid,
    params: &WaveParameters,
    modes: &ModeSet,
    p: f64,
) -> Result<ImagingResult> {
    check_exponent(p)?;
    if u.params() != params {
        return Err(Error::ModeMismatch(
            "data were generated with different wave parameters".into(),
        ));
    }
    let data = u.restricted(modes)?;
    let sources = data.n_sources();
    let mut weighted: Vec<[Vec<CVec3>; 2]> = Vec::with_capacity(modes.len());
    for (m, mode) in modes.modes().iter().enumerate() {
        weighted.push(Side::BOTH.map(|side| {
            let gamma = params.gamma_vec(mode.index, mode.beta, side);
            let c = data_factor(params, &gamma, mode.beta.re, side) * C64::new(side.sign(), 0.0);
            (0..sources).map(|l| c * data.get(side, m, l)).collect()
        }));
    }
    let h = params.h();
    let values = lateral_sweep::<3, _>(params, modes, grid, sources, p, |z3, out| {
        for (m, mode) in modes.modes().iter().enumerate() {
            let base = C64::i() / (8.0 * PI * PI * mode.beta);
            let level = Side::BOTH
                .map(|side| (base * (C64::i() * mode.beta * (h - side.sign() * z3)).exp()).conj());
            for l in 0..sources {
                let s = weighted[m][0][l] * level[0] + weighted[m][1][l] * level[1];
                out[m * sources + l] = [s[0], s[1], s[2]];
            }
        }
    });
    Ok(ImagingResult {
        grid: grid.clone(),
        values,
        p,
        kind: FunctionalKind::New,
        modes: modes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{build_data_matrix, SolverSpec, VoxelGrid};
    use crate::green::{g_coeff, r_coeff, KernelTruncation};
    use crate::modal::ModeIndex;
    use crate::noise::noise_matrix;
    use crate::scene::{Bounds, PermittivityModel, VoxelTable};
    use crate::Mat3;
    use proptest::prelude::*;

    /// Direct evaluation of the indicator at one point from [`mode_weights`].
    fn pointwise(
        u: &RayleighDataMatrix,
        params: &WaveParameters,
        modes: &ModeSet,
        z: &Point3,
        p: f64,
    ) -> f64 {
        let weights = mode_weights(params, modes, z).unwrap();
        (0..u.n_sources())
            .map(|l| {
                let mut s = CVec3::zeros();
                for (m, w) in weights.iter().enumerate() {
                    let src = u.modes().position(modes.modes()[m].index).unwrap();
                    for side in Side::BOTH {
                        let d = u.get(side, src, l);
                        let i = side.index();
                        s += (w.w[i] * d + w.v[i] * d[2]) * C64::new(side.sign(), 0.0);
                    }
                }
                s.norm().powf(p)
            })
            .sum()
    }

    fn random_data(
        params: WaveParameters,
        modes: ModeSet,
        sources: usize,
        seed: u64,
    ) -> RayleighDataMatrix {
        let len = 2 * modes.len() * sources;
        let data = noise_matrix(len, seed)
            .into_iter()
            .map(|c| CVec3::new(c[0], c[1], c[2]))
            .collect();
        RayleighDataMatrix::from_flat(params, modes, sources, data).unwrap()
    }

    fn small_grid(p: &WaveParameters) -> SamplingGrid {
        SamplingGrid::new(
            p,
            Bounds::new([-1.0, -0.8, -0.6], [1.2, 0.9, 0.7]).unwrap(),
            [5, 4, 3],
        )
        .unwrap()
    }

    #[test]
    fn normal_mode_weights_at_zero_alpha() {
        let p = WaveParameters::benchmark();
        let modes = ModeSet::from_indices(&p, &[ModeIndex::ZERO]).unwrap();
        let z = Point3::new(0.3, -0.2, 0.1);
        let w = &mode_weights(&p, &modes, &z).unwrap()[0];
        let r = r_coeff(&p, ModeIndex::ZERO, Side::Upper, &z).unwrap();
        let expected = Mat3::from_diagonal(&[1.0, 1.0, 0.0].into()).map(|v| C64::new(v, 0.0))
            * (r.conj() * -2.0 * p.k());
        assert!((w.w[0] - expected).norm() < 1e-14 * expected.norm());
        assert!(w.v[0].norm() < 1e-14 * expected.norm());
    }

    #[test]
    fn evanescent_weight_has_no_real_part_term() {
        let p = WaveParameters::benchmark();
        let j = ModeIndex::new(6, -3);
        let modes = ModeSet::from_indices(&p, &[j]).unwrap();
        let z = Point3::new(0.1, 0.4, -0.3);
        let w = &mode_weights(&p, &modes, &z).unwrap()[0];
        for side in Side::BOTH {
            let h = crate::green::h_coeff(&p, j, side, &z).unwrap();
            assert!((w.w[side.index()] - h.adjoint()).norm() <= 1e-15 * h.norm());
        }
    }

    #[test]
    fn factorised_sweep_matches_pointwise_weights() {
        let p = WaveParameters::new(2.0 * PI, [0.13, -0.21], 1.0).unwrap();
        let modes = ModeSet::build(&p, 7, true).unwrap();
        let u = random_data(p, modes.clone(), 3, 11);
        let grid = small_grid(&p);
        let image = imaging_functional(&u, &grid, &p, &modes, 3.0).unwrap();
        for (f, z) in grid.points().enumerate() {
            let want = pointwise(&u, &p, &modes, &z, 3.0);
            assert!(
                (image.values[f] - want).abs() <= 1e-10 * want,
                "{f}: {} {want}",
                image.values[f]
            );
        }
    }

    #[test]
    fn subset_of_data_modes_is_used() {
        let p = WaveParameters::benchmark();
        let all = ModeSet::build(&p, 8, true).unwrap();
        let prop = ModeSet::propagating(&p).unwrap();
        let u = random_data(p, all, 2, 5);
        let grid = small_grid(&p);
        let image = imaging_functional(&u, &grid, &p, &prop, 1.0).unwrap();
        assert_eq!(image.modes, prop.len());
        let z = grid.point(7);
        let want = pointwise(&u, &p, &prop, &z, 1.0);
        assert!((image.values[7] - want).abs() <= 1e-10 * want);
    }

    #[test]
    fn missing_modes_are_rejected() {
        let p = WaveParameters::benchmark();
        let u = random_data(p, ModeSet::propagating(&p).unwrap(), 2, 5);
        let more = ModeSet::build(&p, 8, true).unwrap();
        let out = imaging_functional(&u, &small_grid(&p), &p, &more, 3.0);
        assert!(matches!(out, Err(Error::ModeMismatch(_))));
    }

    #[test]
    fn zero_data_gives_zero_field() {
        let p = WaveParameters::benchmark();
        let modes = ModeSet::propagating(&p).unwrap();
        let u = RayleighDataMatrix::zeros(p, modes.clone(), 4);
        let image = imaging_functional(&u, &small_grid(&p), &p, &modes, 3.0).unwrap();
        assert!(image.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_voxel_born_data_peaks_at_the_voxel() {
        let p = WaveParameters::benchmark();
        let grid = SamplingGrid::period_cell(&p, [20, 20, 10]).unwrap();
        // The voxel sits at a sampling point.
        let y0 = grid.point(grid.flat([12, 7, 4]));
        let table = VoxelTable::single_cell(y0, 0.05, Mat3::from_diagonal(&[1.3, 1.5, 1.4].into()))
            .unwrap();
        let model = PermittivityModel::custom(table).unwrap();
        let vg = VoxelGrid::covering(&model, &p, Default::default()).unwrap();
        let sources: Vec<Point3> =
            crate::scene::source_positions(&crate::scene::SourcePlaneArray {
                z_offset: 2.5,
                n1: 3,
                n2: 3,
            });
        let modes = ModeSet::build(&p, 6, true).unwrap();
        let trunc = KernelTruncation::default();
        let u = build_data_matrix(
            &p,
            &model,
            &vg,
            &sources,
            &modes,
            &SolverSpec::Born { order: 1 },
            &trunc,
        )
        .unwrap();
        let image = imaging_functional(&u.matrix, &grid, &p, &modes, 3.0).unwrap();
        let best = image.argmax_point();
        let h = grid.spacing();
        assert!(
            (0..3).all(|a| (best[a] - y0[a]).abs() <= h[a] + 1e-12),
            "{best:?} vs {y0:?}"
        );
    }

    #[test]
    fn weights_match_coefficient_definitions() {
        let p = WaveParameters::new(2.0 * PI, [0.2, 0.1], 1.0).unwrap();
        let j = ModeIndex::new(-1, 2);
        let modes = ModeSet::from_indices(&p, &[j]).unwrap();
        let z = Point3::new(-0.4, 0.6, 0.2);
        let w = &mode_weights(&p, &modes, &z).unwrap()[0];
        let beta = p.beta(j);
        for side in Side::BOTH {
            let g = g_coeff(&p, j, side, &z).unwrap();
            let gamma = CVec3::new(
                p.gamma(1, j, side),
                p.gamma(2, j, side),
                p.gamma(3, j, side),
            );
            let h = CMat3::from_fn(|m, n| gamma[m] * g[(2, n)]);
            let want = (h - g * C64::new(side.sign() * 2.0 * beta.re, 0.0)).adjoint();
            assert!((w.w[side.index()] - want).norm() < 1e-15 * want.norm());
            assert!((w.v[side.index()] - g.adjoint() * gamma).norm() < 1e-15 * want.norm());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn nonnegative_and_homogeneous(seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0, p_exp in 0.5f64..4.0) {
            prop_assume!(re.hypot(im) > 1e-3);
            let p = WaveParameters::benchmark();
            let modes = ModeSet::build(&p, 4, true).unwrap();
            let u = random_data(p, modes.clone(), 2, seed);
            let grid = small_grid(&p);
            let c = C64::new(re, im);
            let a = imaging_functional(&u, &grid, &p, &modes, p_exp).unwrap();
            let b = imaging_functional(&u.scaled(c), &grid, &p, &modes, p_exp).unwrap();
            let factor = c.norm().powf(p_exp);
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!(*x >= 0.0 && x.is_finite());
                prop_assert!((y - factor * x).abs() <= 1e-10 * factor * x);
            }
        }
    }
}
