//! Restarted GMRES for complex linear systems given only a matrix-vector product.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Stopping controls for [`gmres`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    /// Relative residual `‖b − Ax‖ / ‖b‖` to reach.
    pub tol: f64,
    /// Total number of matrix-vector products allowed.
    pub max_iter: usize,
    /// Krylov dimension between restarts.
    pub restart: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 500,
            restart: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresOutcome {
    pub x: Vec<C64>,
    pub iterations: usize,
    /// True relative residual of `x`.
    pub residual: f64,
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn givens(a: C64, b: C64) -> (f64, C64) {
    let na = a.norm();
    if na == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    let r = na.hypot(b.norm());
    let c = na / r;
    let s = (a / na) * b.conj() / r;
    (c, s)
}

/// Solves `A x = b` starting from `x = 0`.
pub fn gmres(
    mut apply: impl FnMut(&[C64]) -> Vec<C64>,
    b: &[C64],
    opts: &GmresOptions,
) -> Result<GmresOutcome> {
    let n = b.len();
    let b_norm = norm(b);
    let mut x = vec![C64::new(0.0, 0.0); n];
    if b_norm == 0.0 {
        return Ok(GmresOutcome {
            x,
            iterations: 0,
            residual: 0.0,
        });
    }
    let m = opts.restart.max(1);
    let mut iterations = 0;
    let mut r: Vec<C64> = b.to_vec();
    loop {
        let beta = norm(&r);
        if beta / b_norm <= opts.tol {
            return Ok(GmresOutcome {
                x,
                iterations,
                residual: beta / b_norm,
            });
        }
        if iterations >= opts.max_iter {
            return Err(Error::NotConverged {
                iterations,
                residual: beta / b_norm,
            });
        }
        let mut basis: Vec<Vec<C64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<C64>> = Vec::with_capacity(m);
        let mut cs: Vec<(f64, C64)> = Vec::with_capacity(m);
        let mut g = vec![C64::new(0.0, 0.0); m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut steps = 0;
        while steps < m && iterations < opts.max_iter {
            let mut w = apply(&basis[steps]);
            iterations += 1;
            let mut col = vec![C64::new(0.0, 0.0); steps + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(v, &w);
                col[i] = hij;
                w.iter_mut().zip(v).for_each(|(wk, vk)| *wk -= hij * vk);
            }
            let wn = norm(&w);
            col[steps + 1] = C64::new(wn, 0.0);
            for (i, &(c, s)) in cs.iter().enumerate() {
                let (a, bb) = (col[i], col[i + 1]);
                col[i] = c * a + s * bb;
                col[i + 1] = -s.conj() * a + c * bb;
            }
            let (c, s) = givens(col[steps], col[steps + 1]);
            col[steps] = c * col[steps] + s * col[steps + 1];
            col[steps + 1] = C64::new(0.0, 0.0);
            g[steps + 1] = -s.conj() * g[steps];
            g[steps] *= c;
            cs.push((c, s));
            hess.push(col);
            steps += 1;
            if g[steps].norm() / b_norm <= opts.tol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![C64::new(0.0, 0.0); steps];
        for i in (0..steps).rev() {
            let mut acc = g[i];
            for j in i + 1..steps {
                acc -= hess[j][i] * y[j];
            }
            y[i] = acc / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            x.iter_mut()
                .zip(&basis[j])
                .for_each(|(xk, vk)| *xk += yj * vk);
        }
        let ax = apply(&x);
        r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    }
}
