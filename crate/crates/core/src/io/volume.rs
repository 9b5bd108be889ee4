//! Scalar fields on sampling grids as legacy VTK structured points and CSV.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::imaging::ImagingResult;

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Legacy ASCII VTK; points are cell centres, first axis fastest.
pub fn format_vtk(field: &ImagingResult, config_hash: &str) -> String {
    let g = &field.grid;
    let [nx, ny, nz] = g.dims();
    let h = g.spacing();
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(
        out,
        "pmimg {:?} p={} config={}",
        field.kind, field.p, config_hash
    );
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(out, "DIMENSIONS {nx} {ny} {nz}");
    let _ = writeln!(
        out,
        "ORIGIN {} {} {}",
        real(g.coord(0, 0)),
        real(g.coord(1, 0)),
        real(g.coord(2, 0))
    );
    let _ = writeln!(out, "SPACING {} {} {}", real(h[0]), real(h[1]), real(h[2]));
    let _ = writeln!(out, "POINT_DATA {}", g.len());
    let _ = writeln!(out, "SCALARS indicator double 1");
    let _ = writeln!(out, "LOOKUP_TABLE default");
    for v in &field.values {
        let _ = writeln!(out, "{}", real(*v));
    }
    out
}

/// `z1,z2,z3,value` rows after a `# config` comment and a header row.
pub fn format_csv(field: &ImagingResult, config_hash: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# config {config_hash}");
    let _ = writeln!(out, "z1,z2,z3,value");
    for (z, v) in field.grid.points().zip(&field.values) {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            real(z.x),
            real(z.y),
            real(z.z),
            real(*v)
        );
    }
    out
}

fn bad(line: usize, reason: impl Into<String>) -> Error {
    Error::DataFormat {
        line,
        reason: reason.into(),
    }
}

/// Dimensions and values of a file written by [`format_vtk`].
pub fn parse_vtk(text: &str) -> Result<([usize; 3], Vec<f64>)> {
    let lines: Vec<&str> = text.lines().collect();
    let dims_line = lines
        .iter()
        .position(|l| l.starts_with("DIMENSIONS"))
        .ok_or_else(|| bad(0, "missing DIMENSIONS"))?;
    let d: Vec<usize> = lines[dims_line]
        .split_whitespace()
        .skip(1)
        .map(|s| s.parse().map_err(|_| bad(dims_line + 1, "bad dimension")))
        .collect::<Result<_>>()?;
    if d.len() != 3 {
        return Err(bad(dims_line + 1, "expected three dimensions"));
    }
    let table = lines
        .iter()
        .position(|l| l.starts_with("LOOKUP_TABLE"))
        .ok_or_else(|| bad(0, "missing LOOKUP_TABLE"))?;
    let values: Vec<f64> = lines[table + 1..]
        .iter()
        .enumerate()
        .flat_map(|(i, l)| l.split_whitespace().map(move |s| (i, s)))
        .map(|(i, s)| {
            s.parse()
                .map_err(|_| bad(table + 2 + i, format!("bad value `{s}`")))
        })
        .collect::<Result<_>>()?;
    let dims = [d[0], d[1], d[2]];
    if values.len() != dims.iter().product::<usize>() {
        return Err(bad(lines.len(), "value count does not match DIMENSIONS"));
    }
    Ok((dims, values))
}

/// Rows `[z1, z2, z3, value]` of a file written by [`format_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<[f64; 4]>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.starts_with("z1"))
        .map(|(i, l)| {
            let f: Vec<f64> = l
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| bad(i + 1, format!("bad field `{s}`")))
                })
                .collect::<Result<_>>()?;
            <[f64; 4]>::try_from(f).map_err(|_| bad(i + 1, "expected four fields"))
        })
        .collect()
}
