//! End-to-end runs: forward data, noise, imaging and comparison, each with a
//! writer producing the files behind the command-line verbs.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ExperimentConfig, FunctionalChoice, OutputFormat};
use crate::error::Result;
use crate::forward::{build_data_matrix, RayleighDataMatrix, SolveReport, VoxelGrid};
use crate::imaging::{
    imaging_functional, isosurface_mask, jaccard, osm_functional, rasterize, ImagingResult,
};
use crate::io::{format_csv, format_vtk, write_data, write_json};
use crate::modal::ModeIndex;
use crate::noise::add_noise;
use crate::scene::source_positions;

/// Result of a forward run.
#[derive(Debug, Clone)]
pub struct ForwardRun {
    pub data: RayleighDataMatrix,
    pub reports: Vec<SolveReport>,
    pub grid_dims: [usize; 3],
    pub config_hash: String,
}

/// Provenance written next to the data file.
#[derive(Debug, Clone, Serialize)]
pub struct ForwardSummary {
    pub config_hash: String,
    pub modes: Vec<ModeIndex>,
    pub sources: usize,
    pub grid_dims: [usize; 3],
    pub iterations: Vec<usize>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

impl ForwardRun {
    pub fn summary(&self) -> ForwardSummary {
        ForwardSummary {
            config_hash: self.config_hash.clone(),
            modes: self.data.modes().indices().collect(),
            sources: self.data.n_sources(),
            grid_dims: self.grid_dims,
            iterations: self.reports.iter().map(|r| r.iterations).collect(),
            residuals: self.reports.iter().map(|r| r.residual).collect(),
            max_residual: self.reports.iter().map(|r| r.residual).fold(0.0, f64::max),
        }
    }
}

pub fn run_forward(config: &ExperimentConfig) -> Result<ForwardRun> {
    config.validate()?;
    let params = config.params()?;
    let model = config.model()?;
    let grid = VoxelGrid::covering(&model, &params, config.solver.grid)?;
    let sources = source_positions(&config.sources);
    let modes = config.modes()?;
    log::info!(
        "forward: {} sources, {} modes, grid {:?}",
        sources.len(),
        modes.len(),
        grid.dims()
    );
    let out = build_data_matrix(
        &params,
        &model,
        &grid,
        &sources,
        &modes,
        &config.solver.spec(),
        &config.kernel,
    )?;
    Ok(ForwardRun {
        data: out.matrix,
        reports: out.reports,
        grid_dims: grid.dims(),
        config_hash: config.hash(),
    })
}

/// Writes `data.txt` and `forward.json` into `dir`.
pub fn write_forward(run: &ForwardRun, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let data = dir.join("data.txt");
    write_data(&data, &run.data, Some(&run.config_hash))?;
    let summary = dir.join("forward.json");
    write_json(&summary, &run.summary())?;
    Ok(vec![data, summary])
}

/// Applies the configured noise; `seed` overrides the configured seed.
pub fn run_noise(
    config: &ExperimentConfig,
    data: &RayleighDataMatrix,
    seed: Option<u64>,
) -> Result<RayleighDataMatrix> {
    let mut spec = config.noise()?;
    if let Some(s) = seed {
        spec = spec.with_seed(s);
    }
    Ok(add_noise(data, &spec))
}

/// Scalar description of one indicator volume.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSummary {
    pub config_hash: String,
    pub kind: crate::imaging::FunctionalKind,
    pub p: f64,
    pub modes: usize,
    pub max: f64,
    pub argmax: [f64; 3],
    pub iso_fraction: f64,
    pub mask_volume_fraction: f64,
}

pub fn summarize(field: &ImagingResult, iso_fraction: f64, config_hash: &str) -> FieldSummary {
    let mask = isosurface_mask(field, iso_fraction);
    let z = field.argmax_point();
    FieldSummary {
        config_hash: config_hash.to_string(),
        kind: field.kind,
        p: field.p,
        modes: field.modes,
        max: field.max(),
        argmax: [z.x, z.y, z.z],
        iso_fraction,
        mask_volume_fraction: mask.volume_fraction(),
    }
}

/// Indicators selected by `imaging.functional`, new method first.
pub fn run_image(
    config: &ExperimentConfig,
    data: &RayleighDataMatrix,
) -> Result<Vec<ImagingResult>> {
    config.validate()?;
    let params = config.params()?;
    let grid = config.sampling()?;
    let mut out = Vec::new();
    if matches!(
        config.imaging.functional,
        FunctionalChoice::New | FunctionalChoice::Both
    ) {
        out.push(imaging_functional(
            data,
            &grid,
            &params,
            &config.modes()?,
            config.imaging.p,
        )?);
    }
    if matches!(
        config.imaging.functional,
        FunctionalChoice::Osm | FunctionalChoice::Both
    ) {
        out.push(osm_functional(data, &grid, &params, &config.imaging.osm())?);
    }
    Ok(out)
}

fn file_stem(field: &ImagingResult) -> &'static str {
    match field.kind {
        crate::imaging::FunctionalKind::New => "new",
        crate::imaging::FunctionalKind::Osm => "osm",
        crate::imaging::FunctionalKind::TheoremRhs => "theorem_rhs",
    }
}

fn write_volume(
    field: &ImagingResult,
    stem: &str,
    config: &ExperimentConfig,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let hash = config.hash();
    let mut paths = Vec::new();
    for format in &config.output.formats {
        let (path, text) = match format {
            OutputFormat::Vtk => (dir.join(format!("{stem}.vtk")), format_vtk(field, &hash)),
            OutputFormat::Csv => (dir.join(format!("{stem}.csv")), format_csv(field, &hash)),
        };
        std::fs::write(&path, text)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Writes one volume per field and format plus `summary.json`.
pub fn write_image(
    fields: &[ImagingResult],
    config: &ExperimentConfig,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let hash = config.hash();
    let mut paths = Vec::new();
    let mut summaries = Vec::new();
    for field in fields {
        paths.extend(write_volume(field, file_stem(field), config, dir)?);
        summaries.push(summarize(field, config.output.iso_fraction, &hash));
    }
    let summary = dir.join("summary.json");
    write_json(&summary, &summaries)?;
    paths.push(summary);
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodReport {
    pub max: f64,
    pub argmax: [f64; 3],
    pub mask_volume_fraction: f64,
    pub jaccard: f64,
}

/// Both indicators on one grid against the rasterised scatterer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub config_hash: String,
    pub iso_fraction: f64,
    pub new: MethodReport,
    pub osm: MethodReport,
    /// `sup |Î_new − Î_osm|` of the peak-normalised fields.
    pub normalized_sup_difference: f64,
}

pub struct Comparison {
    pub new: ImagingResult,
    pub osm: ImagingResult,
    pub report: CompareReport,
}

pub fn run_compare(config: &ExperimentConfig, data: &RayleighDataMatrix) -> Result<Comparison> {
    config.validate()?;
    let params = config.params()?;
    let grid = config.sampling()?;
    let truth = rasterize(&config.model()?, &grid);
    let new = imaging_functional(data, &grid, &params, &config.modes()?, config.imaging.p)?;
    let osm = osm_functional(data, &grid, &params, &config.imaging.osm())?;
    let iso = config.output.iso_fraction;
    let method = |field: &ImagingResult| {
        let mask = isosurface_mask(field, iso);
        let z = field.argmax_point();
        MethodReport {
            max: field.max(),
            argmax: [z.x, z.y, z.z],
            mask_volume_fraction: mask.volume_fraction(),
            jaccard: jaccard(&mask, &truth),
        }
    };
    let diff = new
        .normalized()
        .iter()
        .zip(osm.normalized())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let report = CompareReport {
        config_hash: config.hash(),
        iso_fraction: iso,
        new: method(&new),
        osm: method(&osm),
        normalized_sup_difference: diff,
    };
    if report.new.jaccard < report.osm.jaccard {
        log::warn!(
            "new-method mask overlap {:.3} is below the baseline's {:.3}",
            report.new.jaccard,
            report.osm.jaccard
        );
    }
    Ok(Comparison { new, osm, report })
}

/// Writes the peak-normalised fields and `compare.json`.
pub fn write_compare(
    cmp: &Comparison,
    config: &ExperimentConfig,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (field, stem) in [(&cmp.new, "compare_new"), (&cmp.osm, "compare_osm")] {
        let normalized = ImagingResult {
            values: field.normalized(),
            ..field.clone()
        };
        paths.extend(write_volume(&normalized, stem, config, dir)?);
    }
    let report = dir.join("compare.json");
    write_json(&report, &cmp.report)?;
    paths.push(report);
    Ok(paths)
}
