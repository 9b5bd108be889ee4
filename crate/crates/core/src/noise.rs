//! Additive noise with prescribed relative Frobenius size.

use num_complex::Complex64 as C64;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::RayleighDataMatrix;

/// Noise level `δ ≥ 0` and generator seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNoiseSpec")]
pub struct NoiseSpec {
    delta: f64,
    seed: u64,
}

#[derive(Deserialize)]
struct RawNoiseSpec {
    delta: f64,
    seed: u64,
}

impl TryFrom<RawNoiseSpec> for NoiseSpec {
    type Error = Error;

    fn try_from(raw: RawNoiseSpec) -> Result<Self> {
        NoiseSpec::new(raw.delta, raw.seed)
    }
}

impl NoiseSpec {
    pub fn new(delta: f64, seed: u64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::invalid(
                "delta",
                format!("{delta} is not a finite nonnegative level"),
            ));
        }
        Ok(Self { delta, seed })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Unnormalised noise matrix: real and imaginary parts i.i.d. uniform on
/// `[−1, 1]`, drawn in storage order, real part first.
pub fn noise_matrix(len: usize, seed: u64) -> Vec<[C64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(-1.0, 1.0);
    (0..len)
        .map(|_| [(); 3].map(|_| C64::new(dist.sample(&mut rng), dist.sample(&mut rng))))
        .collect()
}

/// `U + δ‖U‖_F N/‖N‖_F`.
pub fn add_noise(u: &RayleighDataMatrix, spec: &NoiseSpec) -> RayleighDataMatrix {
    let size = u.frobenius_norm();
    if spec.delta == 0.0 || size == 0.0 {
        return u.clone();
    }
    let n = noise_matrix(u.as_flat().len(), spec.seed);
    let n_norm = n.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let scale = spec.delta * size / n_norm;
    let mut out = u.clone();
    for (v, e) in out.as_flat_mut().iter_mut().zip(&n) {
        for c in 0..3 {
            v[c] += e[c] * scale;
        }
    }
    out
}
