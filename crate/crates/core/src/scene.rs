//! Periodic media and point-source arrays.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green::modal::sum_shells;
use crate::green::KernelTruncation;
use crate::modal::{ModeIndex, Side, WaveParameters, PERIOD};
use crate::{CVec3, Mat3, Point3};

/// Permittivity inside the benchmark scatterers.
pub const DEFAULT_EPS: [f64; 3] = [1.3, 1.5, 1.4];

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Bounds {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Result<Self> {
        if (0..3).any(|a| !(lo[a] < hi[a]) || !lo[a].is_finite() || !hi[a].is_finite()) {
            return Err(Error::invalid(
                "bounds",
                format!("empty or non-finite box {lo:?}..{hi:?}"),
            ));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: &Point3) -> bool {
        (0..3).all(|a| x[a] >= self.lo[a] && x[a] <= self.hi[a])
    }

    pub fn extent(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.hi[a] - self.lo[a])
    }

    /// Whether the box lies in the open period cell `(−π, π)² × (−h, h)`.
    pub fn inside_slab(&self, h: f64) -> bool {
        (0..2).all(|a| self.lo[a] > -PI && self.hi[a] < PI) && self.lo[2] > -h && self.hi[2] < h
    }
}

/// Table of permittivity tensors on a uniform cell grid, looked up by nearest cell.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelTable {
    bounds: Bounds,
    dims: [usize; 3],
    values: Vec<Mat3>,
}

impl VoxelTable {
    /// `values` are ordered with the first axis fastest.
    pub fn new(bounds: Bounds, dims: [usize; 3], values: Vec<Mat3>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::invalid("dims", "every axis needs at least one cell"));
        }
        if values.len() != dims.iter().product::<usize>() {
            return Err(Error::ShapeMismatch(format!(
                "{} tensors for a {:?} table",
                values.len(),
                dims
            )));
        }
        for eps in &values {
            check_spd(eps)?;
        }
        Ok(Self {
            bounds,
            dims,
            values,
        })
    }

    /// A one-cell table: the cube of side `side` centred at `center` holds `eps`.
    pub fn single_cell(center: Point3, side: f64, eps: Mat3) -> Result<Self> {
        let half = side / 2.0;
        let bounds = Bounds::new(
            [center.x - half, center.y - half, center.z - half],
            [center.x + half, center.y + half, center.z + half],
        )?;
        Self::new(bounds, [1, 1, 1], vec![eps])
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn values(&self) -> &[Mat3] {
        &self.values
    }

    /// Centre of cell `(i, j, l)`.
    pub fn cell_center(&self, idx: [usize; 3]) -> Point3 {
        let e = self.bounds.extent();
        Point3::from_fn(|a, _| {
            self.bounds.lo[a] + e[a] * (idx[a] as f64 + 0.5) / self.dims[a] as f64
        })
    }

    fn lookup(&self, x: &Point3) -> Option<&Mat3> {
        if !self.bounds.contains(x) {
            return None;
        }
        let e = self.bounds.extent();
        let mut flat = 0;
        for a in (0..3).rev() {
            let t = (x[a] - self.bounds.lo[a]) / e[a] * self.dims[a] as f64;
            let i = (t.floor() as isize).clamp(0, self.dims[a] as isize - 1) as usize;
            flat = flat * self.dims[a] + i;
        }
        Some(&self.values[flat])
    }
}

/// Scatterer geometry inside one period.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Hollow cylinder `inner ≤ √(x₁² + x₂²) ≤ outer`, `|x₃| ≤ half_height`.
    Ring {
        inner: f64,
        outer: f64,
        half_height: f64,
    },
    /// Union of balls of one radius.
    Spheres { radius: f64, centers: Vec<Point3> },
    /// Box `|x_a| ≤ half_extent[a]`.
    Cube { half_extent: [f64; 3] },
    /// Tabulated permittivity; identity outside the table box.
    CustomVoxel(VoxelTable),
}

impl Shape {
    pub fn ring() -> Self {
        Shape::Ring {
            inner: 1.0,
            outer: 1.5,
            half_height: 0.1,
        }
    }

    pub fn spheres() -> Self {
        Shape::Spheres {
            radius: 0.4,
            centers: [-1.8, -0.6, 0.6, 1.8]
                .iter()
                .map(|&c| Point3::new(c, 0.0, 0.0))
                .collect(),
        }
    }

    pub fn cube() -> Self {
        Shape::Cube {
            half_extent: [1.0, 1.0, 0.3],
        }
    }

    fn contains(&self, x: &Point3) -> bool {
        match self {
            Shape::Ring {
                inner,
                outer,
                half_height,
            } => {
                let rho = x.x.hypot(x.y);
                rho >= *inner && rho <= *outer && x.z.abs() <= *half_height
            }
            Shape::Spheres { radius, centers } => centers.iter().any(|c| (x - c).norm() <= *radius),
            Shape::Cube { half_extent } => (0..3).all(|a| x[a].abs() <= half_extent[a]),
            Shape::CustomVoxel(t) => t.lookup(x).is_some(),
        }
    }

    fn bounds(&self) -> Result<Bounds> {
        match self {
            Shape::Ring {
                outer, half_height, ..
            } => Bounds::new(
                [-outer, -outer, -half_height],
                [*outer, *outer, *half_height],
            ),
            Shape::Spheres { radius, centers } => {
                if centers.is_empty() {
                    return Err(Error::invalid("centers", "at least one sphere is required"));
                }
                let mut lo = [f64::INFINITY; 3];
                let mut hi = [f64::NEG_INFINITY; 3];
                for c in centers {
                    for a in 0..3 {
                        lo[a] = lo[a].min(c[a] - radius);
                        hi[a] = hi[a].max(c[a] + radius);
                    }
                }
                Bounds::new(lo, hi)
            }
            Shape::Cube { half_extent } => Bounds::new(half_extent.map(|v| -v), *half_extent),
            Shape::CustomVoxel(t) => Ok(t.bounds),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Shape::Ring {
                inner,
                outer,
                half_height,
            } => {
                if !(*inner >= 0.0 && inner < outer && *half_height > 0.0) {
                    return Err(Error::invalid(
                        "ring",
                        "need 0 ≤ inner < outer and half_height > 0",
                    ));
                }
            }
            Shape::Spheres { radius, .. } => {
                if !(*radius > 0.0) {
                    return Err(Error::invalid("radius", "must be positive"));
                }
            }
            Shape::Cube { half_extent } => {
                if half_extent.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::invalid("half_extent", "must be positive"));
                }
            }
            Shape::CustomVoxel(_) => {}
        }
        Ok(())
    }
}

fn check_spd(eps: &Mat3) -> Result<()> {
    if (eps - eps.transpose()).abs().max() > 1e-12 * eps.abs().max() {
        return Err(Error::invalid(
            "eps",
            "permittivity tensor must be symmetric",
        ));
    }
    if eps.cholesky().is_none() {
        return Err(Error::invalid(
            "eps",
            "permittivity tensor must be positive definite",
        ));
    }
    Ok(())
}

/// Periodic medium: the identity outside the scatterer, `eps_inside` in it.
#[derive(Debug, Clone, PartialEq)]
pub struct PermittivityModel {
    shape: Shape,
    eps_inside: Mat3,
    support: Bounds,
}

/// Reduces lateral coordinates into `[−π, π)`.
pub fn reduce_lateral(x: &Point3) -> Point3 {
    let wrap = |v: f64| v - PERIOD * ((v + PI) / PERIOD).floor();
    Point3::new(wrap(x.x), wrap(x.y), x.z)
}

impl PermittivityModel {
    pub fn new(shape: Shape, eps_inside: Mat3) -> Result<Self> {
        shape.validate()?;
        check_spd(&eps_inside)?;
        let support = shape.bounds()?;
        if (0..2).any(|a| support.lo[a] <= -PI || support.hi[a] >= PI) {
            return Err(Error::invalid(
                "geometry",
                format!("support {support:?} leaves the period cell"),
            ));
        }
        Ok(Self {
            shape,
            eps_inside,
            support,
        })
    }

    fn benchmark(shape: Shape) -> Self {
        Self::new(shape, Mat3::from_diagonal(&DEFAULT_EPS.into()))
            .expect("benchmark geometry is valid")
    }

    pub fn ring() -> Self {
        Self::benchmark(Shape::ring())
    }

    pub fn spheres() -> Self {
        Self::benchmark(Shape::spheres())
    }

    pub fn cube() -> Self {
        Self::benchmark(Shape::cube())
    }

    pub fn custom(table: VoxelTable) -> Result<Self> {
        Self::new(Shape::CustomVoxel(table), Mat3::identity())
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn eps_inside(&self) -> &Mat3 {
        &self.eps_inside
    }

    /// Box containing the scatterer in the reference period.
    pub fn support(&self) -> &Bounds {
        &self.support
    }

    /// Checks the support against the slab half-height.
    pub fn validate_for(&self, params: &WaveParameters) -> Result<()> {
        if !self.support.inside_slab(params.h()) {
            return Err(Error::invalid(
                "geometry",
                format!(
                    "support {:?} is not inside the slab |x₃| < {}",
                    self.support,
                    params.h()
                ),
            ));
        }
        Ok(())
    }

    /// Whether `x` (any lateral position) lies in the scatterer.
    pub fn contains(&self, x: &Point3) -> bool {
        self.shape.contains(&reduce_lateral(x))
    }

    pub fn permittivity(&self, x: &Point3) -> Mat3 {
        let x = reduce_lateral(x);
        match &self.shape {
            Shape::CustomVoxel(t) => t.lookup(&x).copied().unwrap_or_else(Mat3::identity),
            shape if shape.contains(&x) => self.eps_inside,
            _ => Mat3::identity(),
        }
    }

    /// `ε(x) − I₃`.
    pub fn contrast(&self, x: &Point3) -> Mat3 {
        self.permittivity(x) - Mat3::identity()
    }

    /// Same geometry with the contrast multiplied by `s`.
    pub fn scaled_contrast(&self, s: f64) -> Result<Self> {
        let scale = |eps: &Mat3| Mat3::identity() + (eps - Mat3::identity()) * s;
        let shape = match &self.shape {
            Shape::CustomVoxel(t) => Shape::CustomVoxel(VoxelTable::new(
                t.bounds,
                t.dims,
                t.values.iter().map(scale).collect(),
            )?),
            other => other.clone(),
        };
        Self::new(shape, scale(&self.eps_inside))
    }
}

/// Point sources on the planes `x₃ = ±z_offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourcePlaneArray {
    pub z_offset: f64,
    pub n1: usize,
    pub n2: usize,
}

impl Default for SourcePlaneArray {
    fn default() -> Self {
        Self {
            z_offset: 2.5,
            n1: 15,
            n2: 15,
        }
    }
}

impl SourcePlaneArray {
    pub fn validate(&self, params: &WaveParameters) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::invalid("sources", "n1 and n2 must be at least 1"));
        }
        if !(self.z_offset > params.h()) {
            return Err(Error::invalid(
                "z_offset",
                format!("must exceed h = {}, got {}", params.h(), self.z_offset),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        2 * self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Cell-centred grid on each plane; the upper plane comes first, then the
/// lower one, each with the first lateral index outermost.
pub fn source_positions(array: &SourcePlaneArray) -> Vec<Point3> {
    let coord = |i: usize, n: usize| -PI + PERIOD * (i as f64 + 0.5) / n as f64;
    let mut out = Vec::with_capacity(array.len());
    for z in [array.z_offset, -array.z_offset] {
        for i in 0..array.n1 {
            for j in 0..array.n2 {
                out.push(Point3::new(coord(i, array.n1), coord(j, array.n2), z));
            }
        }
    }
    out
}

/// Third-column term of the dyadic Rayleigh series for one mode:
/// `(i/8π²β) e^{i(α·(x−y) + β|x₃−y₃|)} (δ_m3 − γ_mγ₃/k²)`.
fn incident_term(
    params: &WaveParameters,
    j: ModeIndex,
    beta: C64,
    side: Side,
    d: &Point3,
) -> CVec3 {
    let a = params.alpha_vec(j);
    let gamma = params.gamma_vec(j, beta, side);
    let k2 = params.k() * params.k();
    let phase = C64::new(0.0, a.x * d.x + a.y * d.y) + C64::i() * beta * d.z.abs();
    let scalar = C64::i() / (8.0 * PI * PI * beta) * phase.exp();
    CVec3::new(
        -gamma[0] * gamma[2] / k2 * scalar,
        -gamma[1] * gamma[2] / k2 * scalar,
        (1.0 - gamma[2] * gamma[2] / k2) * scalar,
    )
}

/// Incident field of source `y` at `x`: the third column of the dyadic Green
/// tensor `𝔾(x, y)`, summed modally with the adaptive tail rule of `trunc`.
pub fn incident_field(
    params: &WaveParameters,
    y: &Point3,
    x: &Point3,
    trunc: &KernelTruncation,
) -> Result<CVec3> {
    Ok(incident_field_with_shells(params, y, x, trunc)?.0)
}

/// As [`incident_field`], also returning the last shell summed.
pub(crate) fn incident_field_with_shells(
    params: &WaveParameters,
    y: &Point3,
    x: &Point3,
    trunc: &KernelTruncation,
) -> Result<(CVec3, u32)> {
    trunc.validate()?;
    let d = x - y;
    if d.z == 0.0 {
        return Err(Error::CoincidentHeight(d.z));
    }
    let side = if d.z > 0.0 { Side::Upper } else { Side::Lower };
    let mut sum = CVec3::zeros();
    let shells = sum_shells(params, d.z.abs(), trunc, 2, |s| {
        for j in ModeIndex::shell(s) {
            let beta = params.try_beta(j)?;
            sum += incident_term(params, j, beta, side, &d);
        }
        Ok(sum.norm())
    })?;
    Ok((sum, shells))
}
