//! Mode-lattice arithmetic for 2π×2π biperiodic structures.
//!
//! Every Rayleigh expansion in the crate is indexed by a lattice point
//! `j ∈ ℤ²` with lateral wavevector `α_j = (α₁ + j₁, α₂ + j₂, 0)` and vertical
//! propagation constant `β_j = √(k² − |α_j|²)` (positive-imaginary branch
//! above cutoff).

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Point3;

/// Relative distance to a Wood's anomaly below which `β_j` is treated as zero.
pub const WOOD_TOLERANCE: f64 = 1e-12;

/// Lateral period in both directions.
pub const PERIOD: f64 = 2.0 * PI;

/// Wavenumber, quasiperiodicity pair and slab half-height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParameters {
    k: f64,
    alpha: [f64; 2],
    h: f64,
}

impl WaveParameters {
    pub fn new(k: f64, alpha: [f64; 2], h: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::invalid("k", format!("must be positive, got {k}")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid("h", format!("must be positive, got {h}")));
        }
        if !alpha.iter().all(|a| a.is_finite()) {
            return Err(Error::invalid("alpha", "must be finite"));
        }
        Ok(Self { k, alpha, h })
    }

    /// k = 2π, α = 0, h = 1.
    pub fn benchmark() -> Self {
        Self {
            k: 2.0 * PI,
            alpha: [0.0, 0.0],
            h: 1.0,
        }
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn alpha(&self) -> [f64; 2] {
        self.alpha
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `α_j = (α₁ + j₁, α₂ + j₂, 0)`.
    pub fn alpha_vec(&self, j: ModeIndex) -> Point3 {
        Point3::new(
            self.alpha[0] + j.j1 as f64,
            self.alpha[1] + j.j2 as f64,
            0.0,
        )
    }

    fn alpha_norm(&self, j: ModeIndex) -> f64 {
        let a1 = self.alpha[0] + j.j1 as f64;
        let a2 = self.alpha[1] + j.j2 as f64;
        a1.hypot(a2)
    }

    /// Whether mode `j` sits within [`WOOD_TOLERANCE`] of a Wood's anomaly.
    pub fn is_wood_anomaly(&self, j: ModeIndex) -> bool {
        (self.k - self.alpha_norm(j)).abs() < WOOD_TOLERANCE * self.k
    }

    /// Propagation constant `β_j`. Exactly zero at a Wood's anomaly.
    pub fn beta(&self, j: ModeIndex) -> C64 {
        if self.is_wood_anomaly(j) {
            return C64::new(0.0, 0.0);
        }
        let a1 = self.alpha[0] + j.j1 as f64;
        let a2 = self.alpha[1] + j.j2 as f64;
        let disc = self.k * self.k - (a1 * a1 + a2 * a2);
        if disc >= 0.0 {
            C64::new(disc.sqrt(), 0.0)
        } else {
            C64::new(0.0, (-disc).sqrt())
        }
    }

    /// `β_j`, failing at a Wood's anomaly (every kernel divides by it).
    pub fn try_beta(&self, j: ModeIndex) -> Result<C64> {
        if self.is_wood_anomaly(j) {
            return Err(Error::WoodAnomaly {
                mode: j,
                gap: (self.k - self.alpha_norm(j)).abs(),
            });
        }
        Ok(self.beta(j))
    }

    /// `γ_{n,j}^±`: the lateral wavevector components for `n = 1, 2` and
    /// `±β_j` for `n = 3`. Axes are 1-based.
    pub fn gamma(&self, n: usize, j: ModeIndex, side: Side) -> C64 {
        match n {
            1 => C64::new(self.alpha[0] + j.j1 as f64, 0.0),
            2 => C64::new(self.alpha[1] + j.j2 as f64, 0.0),
            3 => side.sign() * self.beta(j),
            _ => panic!("axis index must be 1, 2 or 3, got {n}"),
        }
    }

    /// `(α_{1,j}, α_{2,j}, ±β_j)` for an already computed `β_j`.
    pub(crate) fn gamma_vec(&self, j: ModeIndex, beta: C64, side: Side) -> [C64; 3] {
        [
            C64::new(self.alpha[0] + j.j1 as f64, 0.0),
            C64::new(self.alpha[1] + j.j2 as f64, 0.0),
            side.sign() * beta,
        ]
    }

    /// Upward (`+`) or downward (`−`) Rayleigh plane wave
    /// `exp(i(α_{1,j}x₁ + α_{2,j}x₂ ± β_j(x₃ ∓ h)))`.
    pub fn plane_wave(&self, j: ModeIndex, side: Side, x: &Point3) -> C64 {
        let a = self.alpha_vec(j);
        let beta = self.beta(j);
        let s = side.sign();
        let phase = C64::new(0.0, a.x * x.x + a.y * x.y) + C64::i() * s * beta * (x.z - s * self.h);
        phase.exp()
    }
}

/// Which half-space a Rayleigh expansion lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    /// `x₃ > h`
    Upper,
    /// `x₃ < −h`
    Lower,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Upper, Side::Lower];

    pub fn sign(self) -> f64 {
        match self {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Side::Upper => '+',
            Side::Lower => '-',
        }
    }

    pub fn from_symbol(c: char) -> Option<Side> {
        match c {
            '+' => Some(Side::Upper),
            '-' => Some(Side::Lower),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Side::Upper => 0,
            Side::Lower => 1,
        }
    }
}

/// Lattice index `j = (j₁, j₂)`. Orders lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub j1: i32,
    pub j2: i32,
}

impl ModeIndex {
    pub const ZERO: ModeIndex = ModeIndex { j1: 0, j2: 0 };

    pub const fn new(j1: i32, j2: i32) -> Self {
        Self { j1, j2 }
    }

    /// Sup norm `max(|j₁|, |j₂|)`.
    pub fn sup_norm(self) -> u32 {
        self.j1.unsigned_abs().max(self.j2.unsigned_abs())
    }

    /// All indices with sup norm exactly `s`, in lexicographic order.
    pub fn shell(s: u32) -> impl Iterator<Item = ModeIndex> {
        let s = s as i32;
        (-s..=s).flat_map(move |j1| {
            let edge = j1.abs() == s;
            let step = if edge || s == 0 { 1 } else { (2 * s) as usize };
            (-s..=s)
                .step_by(step.max(1))
                .map(move |j2| ModeIndex::new(j1, j2))
        })
    }

    /// All indices with sup norm at most `s`, in lexicographic order.
    pub fn block(s: u32) -> impl Iterator<Item = ModeIndex> {
        let s = s as i32;
        (-s..=s).flat_map(move |j1| (-s..=s).map(move |j2| ModeIndex::new(j1, j2)))
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.j1, self.j2)
    }
}

/// One entry of a [`ModeSet`] with its cached wave numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub index: ModeIndex,
    pub alpha: [f64; 2],
    pub beta: C64,
    pub propagating: bool,
}

/// A truncated, lexicographically ordered collection of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    modes: Vec<Mode>,
    j_max: u32,
    include_evanescent: bool,
}

impl ModeSet {
    /// All modes with sup norm `≤ j_max`, or only the propagating ones among
    /// them when `include_evanescent` is false.
    pub fn build(params: &WaveParameters, j_max: u32, include_evanescent: bool) -> Result<Self> {
        let mut modes = Vec::new();
        for index in ModeIndex::block(j_max) {
            let beta = params.try_beta(index)?;
            let propagating = beta.im == 0.0;
            if propagating || include_evanescent {
                modes.push(Self::make_mode(params, index, beta));
            }
        }
        Ok(Self {
            modes,
            j_max,
            include_evanescent,
        })
    }

    /// Every propagating mode, with `j_max` chosen large enough to hold them.
    pub fn propagating(params: &WaveParameters) -> Result<Self> {
        let a = params.alpha[0].abs().max(params.alpha[1].abs());
        let j_max = (params.k + a).ceil() as u32;
        Self::build(params, j_max, false)
    }

    /// A mode set from an explicit list (sorted and deduplicated).
    pub fn from_indices(params: &WaveParameters, indices: &[ModeIndex]) -> Result<Self> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut modes = Vec::with_capacity(sorted.len());
        let mut j_max = 0;
        let mut include_evanescent = false;
        for index in sorted {
            let beta = params.try_beta(index)?;
            let mode = Self::make_mode(params, index, beta);
            include_evanescent |= !mode.propagating;
            j_max = j_max.max(index.sup_norm());
            modes.push(mode);
        }
        Ok(Self {
            modes,
            j_max,
            include_evanescent,
        })
    }

    fn make_mode(params: &WaveParameters, index: ModeIndex, beta: C64) -> Mode {
        Mode {
            index,
            alpha: [
                params.alpha[0] + index.j1 as f64,
                params.alpha[1] + index.j2 as f64,
            ],
            beta,
            propagating: beta.im == 0.0,
        }
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn j_max(&self) -> u32 {
        self.j_max
    }

    pub fn include_evanescent(&self) -> bool {
        self.include_evanescent
    }

    pub fn indices(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        self.modes.iter().map(|m| m.index)
    }

    pub fn position(&self, index: ModeIndex) -> Option<usize> {
        self.modes.binary_search_by(|m| m.index.cmp(&index)).ok()
    }

    pub fn propagating_count(&self) -> usize {
        self.modes.iter().filter(|m| m.propagating).count()
    }
}

/// Upper bound on the magnitude of the evanescent tail of a modal Green-type
/// series beyond sup-norm shell `shell`, at vertical separation `sep`.
///
/// Each term is bounded by `(1 + 4(s + |α|∞)²/k²)^{order/2} e^{−b_s sep} / (8π² b_s)`
/// where `b_s = √((s − |α|∞)² − k²)` underestimates `|β_j|` on shell `s`.
/// Returns `f64::INFINITY` when the next shell still contains propagating modes
/// or `sep` vanishes.
pub(crate) fn evanescent_tail_bound(
    params: &WaveParameters,
    shell: u32,
    sep: f64,
    order: u32,
) -> f64 {
    let a = params.alpha[0].abs().max(params.alpha[1].abs());
    let k = params.k;
    if sep <= 0.0 {
        return f64::INFINITY;
    }
    let mut total = 0.0;
    let mut s = shell as f64 + 1.0;
    loop {
        let m = s - a;
        if m <= k {
            return f64::INFINITY;
        }
        let b = (m * m - k * k).sqrt();
        let amp = (1.0 + 4.0 * (s + a) * (s + a) / (k * k)).powf(order as f64 / 2.0);
        let term = 8.0 * s * amp * (-b * sep).exp() / (8.0 * PI * PI * b);
        total += term;
        if term <= 1e-17 * total || term < 1e-300 || s > shell as f64 + 1e6 {
            return total;
        }
        s += 1.0;
    }
}
