//! Grid evaluation of `Σ_l |Σ_j e^{i(α_{1,j}z₁ + α_{2,j}z₂)} D_j(z₃, l)|₂^p`,
//! summed one lateral axis at a time.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::SamplingGrid;
use crate::modal::{ModeSet, WaveParameters};

/// `level(z₃, out)` fills `out[m · sources + l]` with `D_j(z₃, l)` for the `m`-th mode.
pub(super) fn lateral_sweep<const D: usize, F>(
    params: &WaveParameters,
    modes: &ModeSet,
    grid: &SamplingGrid,
    sources: usize,
    p: f64,
    level: F,
) -> Vec<f64>
where
    F: Fn(f64, &mut [[C64; D]]) + Sync,
{
    let [nx, ny, nz] = grid.dims();
    let alpha = params.alpha();
    let mut groups: Vec<i32> = modes.indices().map(|j| j.j1).collect();
    groups.sort_unstable();
    groups.dedup();
    let group_of: Vec<usize> = modes
        .indices()
        .map(|j| groups.binary_search(&j.j1).expect("collected above"))
        .collect();
    let phase1: Vec<Vec<C64>> = groups
        .iter()
        .map(|&j1| {
            let a1 = alpha[0] + j1 as f64;
            (0..nx)
                .map(|i| C64::new(0.0, a1 * grid.coord(0, i)).exp())
                .collect()
        })
        .collect();
    let phase2: Vec<Vec<C64>> = modes
        .indices()
        .map(|j| {
            let a2 = alpha[1] + j.j2 as f64;
            (0..ny)
                .map(|i| C64::new(0.0, a2 * grid.coord(1, i)).exp())
                .collect()
        })
        .collect();
    let zero = [C64::new(0.0, 0.0); D];
    let half_p = 0.5 * p;

    let levels: Vec<Vec<f64>> = (0..nz)
        .into_par_iter()
        .map(|lz| {
            let mut coefs = vec![zero; modes.len() * sources];
            level(grid.coord(2, lz), &mut coefs);
            let mut partial = vec![zero; groups.len() * ny * sources];
            for (m, &a) in group_of.iter().enumerate() {
                let src = &coefs[m * sources..(m + 1) * sources];
                for (j, ph) in phase2[m].iter().enumerate() {
                    let dst = &mut partial[(a * ny + j) * sources..(a * ny + j + 1) * sources];
                    for (d, s) in dst.iter_mut().zip(src) {
                        for c in 0..D {
                            d[c] += ph * s[c];
                        }
                    }
                }
            }
            let mut out = vec![0.0; nx * ny];
            let mut acc = vec![zero; sources];
            for j in 0..ny {
                for i in 0..nx {
                    acc.iter_mut().for_each(|v| *v = zero);
                    for (a, ph1) in phase1.iter().enumerate() {
                        let ph = ph1[i];
                        let row = &partial[(a * ny + j) * sources..(a * ny + j + 1) * sources];
                        for (v, s) in acc.iter_mut().zip(row) {
                            for c in 0..D {
                                v[c] += ph * s[c];
                            }
                        }
                    }
                    out[j * nx + i] = acc
                        .iter()
                        .map(|v| v.iter().map(|c| c.norm_sqr()).sum::<f64>().powf(half_p))
                        .sum();
                }
            }
            out
        })
        .collect();
    levels.concat()
}
