//! Text format for Rayleigh data.
//!
//! ```text
//! pmimg-rayleigh-data 1
//! k <k>
//! alpha <α₁> <α₂>
//! h <h>
//! config <sha256 or ->
//! sources <N>
//! sides + -
//! modes <M>
//! <j₁> <j₂>                       (M lines, lexicographic)
//! records
//! <side> <j₁> <j₂> <l> <Re u₁> <Im u₁> <Re u₂> <Im u₂> <Re u₃> <Im u₃>
//! ```
//!
//! Records run over side, then mode, then source. Reals are written with 17
//! significant digits.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::forward::RayleighDataMatrix;
use crate::modal::{ModeIndex, ModeSet, Side, WaveParameters};
use crate::CVec3;

const MAGIC: &str = "pmimg-rayleigh-data 1";

/// Data plus the provenance hash found in the header.
#[derive(Debug, Clone, PartialEq)]
pub struct DataFile {
    pub matrix: RayleighDataMatrix,
    pub config_hash: Option<String>,
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_data(matrix: &RayleighDataMatrix, config_hash: Option<&str>) -> String {
    let p = matrix.params();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "k {}", real(p.k()));
    let _ = writeln!(out, "alpha {} {}", real(p.alpha()[0]), real(p.alpha()[1]));
    let _ = writeln!(out, "h {}", real(p.h()));
    let _ = writeln!(out, "config {}", config_hash.unwrap_or("-"));
    let _ = writeln!(out, "sources {}", matrix.n_sources());
    let _ = writeln!(out, "sides + -");
    let _ = writeln!(out, "modes {}", matrix.modes().len());
    for j in matrix.modes().indices() {
        let _ = writeln!(out, "{} {}", j.j1, j.j2);
    }
    let _ = writeln!(out, "records");
    for side in Side::BOTH {
        for (m, j) in matrix.modes().indices().enumerate() {
            for l in 0..matrix.n_sources() {
                let u = matrix.get(side, m, l);
                let _ = write!(out, "{} {} {} {}", side.symbol(), j.j1, j.j2, l);
                for c in u.iter() {
                    let _ = write!(out, " {} {}", real(c.re), real(c.im));
                }
                out.push('\n');
            }
        }
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<Vec<&'a str>> {
        match self.inner.next() {
            Some((i, line)) => {
                self.last = i + 1;
                Ok(line.split_whitespace().collect())
            }
            None => Err(self.error("unexpected end of file")),
        }
    }

    fn error(&self, reason: impl Into<String>) -> Error {
        Error::DataFormat {
            line: self.last,
            reason: reason.into(),
        }
    }

    fn keyed(&mut self, key: &str, count: usize) -> Result<Vec<&'a str>> {
        let fields = self.next()?;
        if fields.first() != Some(&key) || fields.len() != count + 1 {
            return Err(self.error(format!("expected `{key}` with {count} value(s)")));
        }
        Ok(fields[1..].to_vec())
    }

    fn scalar<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.keyed(key, 1)?[0];
        self.number(v)
    }

    fn number<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse()
            .map_err(|_| self.error(format!("`{s}` is not a valid number")))
    }
}

pub fn parse_data(text: &str) -> Result<DataFile> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    if lines.next()?.join(" ") != MAGIC {
        return Err(lines.error("missing `pmimg-rayleigh-data 1` header"));
    }
    let k = lines.scalar("k")?;
    let a = lines.keyed("alpha", 2)?;
    let alpha = [lines.number(a[0])?, lines.number(a[1])?];
    let h = lines.scalar("h")?;
    let params = WaveParameters::new(k, alpha, h).map_err(|e| lines.error(e.to_string()))?;
    let hash = lines.keyed("config", 1)?[0];
    let config_hash = (hash != "-").then(|| hash.to_string());
    let sources: usize = lines.scalar("sources")?;
    if lines.keyed("sides", 2)? != ["+", "-"] {
        return Err(lines.error("sides must be `+ -`"));
    }
    let count: usize = lines.scalar("modes")?;
    let mut indices = Vec::with_capacity(count);
    for _ in 0..count {
        let f = lines.next()?;
        if f.len() != 2 {
            return Err(lines.error("expected a mode index `j1 j2`"));
        }
        let j = ModeIndex::new(lines.number(f[0])?, lines.number(f[1])?);
        if indices.last().is_some_and(|prev| *prev >= j) {
            return Err(lines.error("mode list must be strictly lexicographic"));
        }
        indices.push(j);
    }
    let modes = ModeSet::from_indices(&params, &indices).map_err(|e| lines.error(e.to_string()))?;
    if lines.next()? != ["records"] {
        return Err(lines.error("expected `records`"));
    }
    let mut matrix = RayleighDataMatrix::zeros(params, modes, sources);
    for side in Side::BOTH {
        for (m, j) in indices.iter().enumerate() {
            for l in 0..sources {
                let f = lines.next()?;
                if f.len() != 10 {
                    return Err(lines.error(format!("record needs 10 fields, found {}", f.len())));
                }
                let key_ok = f[0].chars().eq(std::iter::once(side.symbol()))
                    && lines.number::<i32>(f[1])? == j.j1
                    && lines.number::<i32>(f[2])? == j.j2
                    && lines.number::<usize>(f[3])? == l;
                if !key_ok {
                    return Err(lines.error(format!(
                        "expected record {} {} {} {l}",
                        side.symbol(),
                        j.j1,
                        j.j2
                    )));
                }
                let mut v = [0.0; 6];
                for (slot, s) in v.iter_mut().zip(&f[4..]) {
                    *slot = lines.number(s)?;
                }
                matrix.set(
                    side,
                    m,
                    l,
                    CVec3::new(
                        C64::new(v[0], v[1]),
                        C64::new(v[2], v[3]),
                        C64::new(v[4], v[5]),
                    ),
                );
            }
        }
    }
    if let Some((i, extra)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::DataFormat {
            line: i + 1,
            reason: format!("trailing content `{extra}`"),
        });
    }
    Ok(DataFile {
        matrix,
        config_hash,
    })
}

pub fn write_data(
    path: &std::path::Path,
    matrix: &RayleighDataMatrix,
    config_hash: Option<&str>,
) -> Result<()> {
    std::fs::write(path, format_data(matrix, config_hash))?;
    Ok(())
}

pub fn read_data(path: &std::path::Path) -> Result<DataFile> {
    parse_data(&std::fs::read_to_string(path)?)
}
