//! Experiment configuration in TOML. Every section and key is optional;
//! missing values take the benchmark protocol defaults and unknown keys are
//! rejected.
//!
//! ```toml
//! [wave]
//! k = 6.283185307179586
//! alpha1 = 0.0
//! alpha2 = 0.0
//! h = 1.0
//!
//! [geometry]
//! shape = "ring"          # ring | spheres | cube | custom
//! eps = [1.3, 1.5, 1.4]   # diagonal of the permittivity inside
//! inner = 1.0             # ring only; also outer, half_height
//!
//! [sources]
//! z_offset = 2.5
//! n1 = 15
//! n2 = 15
//!
//! [solver]
//! mode = "iterative"      # iterative | born
//! born_order = 1
//! tol = 1e-6
//! max_iter = 500
//! restart = 30
//! grid = 32               # cells along the longest axis, or [n1, n2, n3]
//!
//! [kernel]
//! modal_j = 8
//! lattice_j = 8
//! tail_tol = 1e-4
//! lattice = "accelerated" # accelerated | direct
//!
//! [modes]
//! j_max = 8
//! include_evanescent = true
//!
//! [noise]
//! delta = 0.2
//! seed = 0
//!
//! [imaging]
//! p = 3.0
//! functional = "new"      # new | osm | both
//! grid = [40, 40, 20]
//! q = [1.0, 1.0, 1.0]
//! rho = 1.5
//!
//! [output]
//! directory = "out"
//! formats = ["vtk", "csv"]
//! iso_fraction = 0.6
//! ```
//!
//! A `custom` geometry takes `lo`, `hi`, `dims` and `diagonals`, one
//! permittivity diagonal per cell with the first axis fastest.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forward::{GridResolution, SolverSpec};
use crate::green::KernelTruncation;
use crate::imaging::{OsmSettings, SamplingGrid};
use crate::krylov::GmresOptions;
use crate::modal::{ModeSet, WaveParameters};
use crate::noise::NoiseSpec;
use crate::scene::{Bounds, PermittivityModel, Shape, SourcePlaneArray, VoxelTable, DEFAULT_EPS};
use crate::{Mat3, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveConfig {
    pub k: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub h: f64,
}

impl Default for WaveConfig {
    fn default() -> Self {
        Self {
            k: 2.0 * PI,
            alpha1: 0.0,
            alpha2: 0.0,
            h: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    #[default]
    Ring,
    Spheres,
    Cube,
    Custom,
}

/// Geometry block; shape parameters not given take the benchmark values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub shape: ShapeKind,
    pub eps: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outer: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_height: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<[f64; 3]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_extent: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<[usize; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagonals: Option<Vec<[f64; 3]>>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            shape: ShapeKind::Ring,
            eps: DEFAULT_EPS,
            inner: None,
            outer: None,
            half_height: None,
            radius: None,
            centers: None,
            half_extent: None,
            lo: None,
            hi: None,
            dims: None,
            diagonals: None,
        }
    }
}

impl GeometryConfig {
    fn reject(&self, keys: &[(&'static str, bool)]) -> Result<()> {
        for (name, present) in keys {
            if *present {
                return Err(Error::invalid(
                    name,
                    format!("not a parameter of the {:?} geometry", self.shape).to_lowercase(),
                ));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<PermittivityModel> {
        let eps = Mat3::from_diagonal(&self.eps.into());
        let ring_keys = [
            ("inner", self.inner.is_some()),
            ("outer", self.outer.is_some()),
            ("half_height", self.half_height.is_some()),
        ];
        let sphere_keys = [
            ("radius", self.radius.is_some()),
            ("centers", self.centers.is_some()),
        ];
        let cube_keys = [("half_extent", self.half_extent.is_some())];
        let custom_keys = [
            ("lo", self.lo.is_some()),
            ("hi", self.hi.is_some()),
            ("dims", self.dims.is_some()),
            ("diagonals", self.diagonals.is_some()),
        ];
        match self.shape {
            ShapeKind::Ring => {
                self.reject(&sphere_keys)?;
                self.reject(&cube_keys)?;
                self.reject(&custom_keys)?;
                let Shape::Ring {
                    inner,
                    outer,
                    half_height,
                } = Shape::ring()
                else {
                    unreachable!()
                };
                let shape = Shape::Ring {
                    inner: self.inner.unwrap_or(inner),
                    outer: self.outer.unwrap_or(outer),
                    half_height: self.half_height.unwrap_or(half_height),
                };
                PermittivityModel::new(shape, eps)
            }
            ShapeKind::Spheres => {
                self.reject(&ring_keys)?;
                self.reject(&cube_keys)?;
                self.reject(&custom_keys)?;
                let Shape::Spheres { radius, centers } = Shape::spheres() else {
                    unreachable!()
                };
                let shape = Shape::Spheres {
                    radius: self.radius.unwrap_or(radius),
                    centers: self
                        .centers
                        .as_ref()
                        .map(|c| c.iter().map(|&p| Point3::from(p)).collect())
                        .unwrap_or(centers),
                };
                PermittivityModel::new(shape, eps)
            }
            ShapeKind::Cube => {
                self.reject(&ring_keys)?;
                self.reject(&sphere_keys)?;
                self.reject(&custom_keys)?;
                let shape = match self.half_extent {
                    Some(half_extent) => Shape::Cube { half_extent },
                    None => Shape::cube(),
                };
                PermittivityModel::new(shape, eps)
            }
            ShapeKind::Custom => {
                self.reject(&ring_keys)?;
                self.reject(&sphere_keys)?;
                self.reject(&cube_keys)?;
                let missing =
                    |name: &'static str| Error::invalid(name, "required by the custom geometry");
                let bounds = Bounds::new(
                    self.lo.ok_or_else(|| missing("lo"))?,
                    self.hi.ok_or_else(|| missing("hi"))?,
                )?;
                let dims = self.dims.ok_or_else(|| missing("dims"))?;
                let values = self
                    .diagonals
                    .as_ref()
                    .ok_or_else(|| missing("diagonals"))?
                    .iter()
                    .map(|d| Mat3::from_diagonal(&(*d).into()))
                    .collect();
                PermittivityModel::custom(VoxelTable::new(bounds, dims, values)?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    #[default]
    Iterative,
    Born,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub mode: SolverMode,
    pub born_order: u32,
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    pub grid: GridResolution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let g = GmresOptions::default();
        Self {
            mode: SolverMode::Iterative,
            born_order: 1,
            tol: g.tol,
            max_iter: g.max_iter,
            restart: g.restart,
            grid: GridResolution::default(),
        }
    }
}

impl SolverConfig {
    pub fn spec(&self) -> SolverSpec {
        match self.mode {
            SolverMode::Born => SolverSpec::Born {
                order: self.born_order,
            },
            SolverMode::Iterative => SolverSpec::Iterative(GmresOptions {
                tol: self.tol,
                max_iter: self.max_iter,
                restart: self.restart,
            }),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.born_order == 0 {
            return Err(Error::invalid("born_order", "must be at least 1"));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::invalid("tol", "must lie in (0, 1)"));
        }
        if self.max_iter == 0 || self.restart == 0 {
            return Err(Error::invalid(
                "max_iter",
                "max_iter and restart must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesConfig {
    pub j_max: u32,
    pub include_evanescent: bool,
}

impl Default for ModesConfig {
    fn default() -> Self {
        Self {
            j_max: 8,
            include_evanescent: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub delta: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            delta: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalChoice {
    #[default]
    New,
    Osm,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImagingConfig {
    pub p: f64,
    pub functional: FunctionalChoice,
    pub grid: [usize; 3],
    pub q: [f64; 3],
    pub rho: f64,
}

impl Default for ImagingConfig {
    fn default() -> Self {
        let osm = OsmSettings::default();
        Self {
            p: 3.0,
            functional: FunctionalChoice::New,
            grid: [40, 40, 20],
            q: osm.q,
            rho: osm.rho,
        }
    }
}

impl ImagingConfig {
    pub fn osm(&self) -> OsmSettings {
        OsmSettings {
            q: self.q,
            rho: self.rho,
            p: self.p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Vtk,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
    pub iso_fraction: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![OutputFormat::Vtk, OutputFormat::Csv],
            iso_fraction: 0.6,
        }
    }
}

/// A complete, validated experiment description.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub wave: WaveConfig,
    pub geometry: GeometryConfig,
    pub sources: SourcePlaneArray,
    pub solver: SolverConfig,
    pub kernel: KernelTruncation,
    pub modes: ModesConfig,
    pub noise: NoiseConfig,
    pub imaging: ImagingConfig,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn params(&self) -> Result<WaveParameters> {
        WaveParameters::new(
            self.wave.k,
            [self.wave.alpha1, self.wave.alpha2],
            self.wave.h,
        )
    }

    pub fn model(&self) -> Result<PermittivityModel> {
        self.geometry.model()
    }

    pub fn modes(&self) -> Result<ModeSet> {
        ModeSet::build(
            &self.params()?,
            self.modes.j_max,
            self.modes.include_evanescent,
        )
    }

    pub fn noise(&self) -> Result<NoiseSpec> {
        NoiseSpec::new(self.noise.delta, self.noise.seed)
    }

    pub fn sampling(&self) -> Result<SamplingGrid> {
        SamplingGrid::period_cell(&self.params()?, self.imaging.grid)
    }

    /// Checks every cross-field constraint.
    pub fn validate(&self) -> Result<()> {
        let params = self.params()?;
        self.model()?.validate_for(&params)?;
        self.sources.validate(&params)?;
        self.solver.validate()?;
        self.kernel.validate()?;
        self.modes()?;
        self.noise()?;
        self.sampling()?;
        self.imaging.osm().validate(&params)?;
        if !(self.output.iso_fraction > 0.0 && self.output.iso_fraction <= 1.0) {
            return Err(Error::invalid("iso_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded. The output directory
    /// does not enter the hash.
    pub fn hash(&self) -> String {
        let mut content = self.clone();
        content.output.directory = PathBuf::new();
        let canonical = serde_json::to_string(&content).expect("config serialises");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Parses and validates TOML configuration text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig =
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}
