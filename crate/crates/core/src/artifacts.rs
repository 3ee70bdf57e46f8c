//! CSV artifacts with a versioned header comment, and a manifest recording
//! every artifact's content hash.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::model::{State4, SPECIES};
use crate::ode::StepStats;

/// First line of every trajectory CSV.
pub const TRAJECTORY_FORMAT: &str = "# apzyme-trajectory v1";
/// First line of every other table.
pub const TABLE_FORMAT: &str = "# apzyme-table v1";

/// Writes a table: the format comment, an optional free comment, the column
/// header, then one row per record. Floats use the shortest round-trip form,
/// so equal data gives byte-identical files.
pub fn write_table<I, R>(
    path: &Path,
    format_line: &str,
    comment: Option<&str>,
    columns: &[&str],
    rows: I,
) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(file, "{format_line}")?;
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(file, "# {line}")?;
        }
    }
    let mut w = csv::Writer::from_writer(file);
    w.write_record(columns)?;
    for row in rows {
        let row = row.as_ref();
        if row.len() != columns.len() {
            return Err(Error::DimensionMismatch {
                expected: columns.len(),
                got: row.len(),
            });
        }
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_table`]: returns the column names and
/// rows, checking the format line.
pub fn read_table(path: &Path, format_line: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = BufReader::new(fs::File::open(path)?);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    if first.trim_end() != format_line {
        return Err(Error::param(
            "csv",
            format!(
                "{}: expected format line {format_line:?}, found {:?}",
                path.display(),
                first.trim_end()
            ),
        ));
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(reader);
    let columns = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim().parse::<f64>().map_err(|e| {
                    Error::param(
                        "csv",
                        format!("{}: {s:?} is not a number ({e})", path.display()),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((columns, rows))
}

fn trajectory_columns(with_product: bool) -> Vec<&'static str> {
    let mut cols = vec!["t"];
    cols.extend(SPECIES);
    if with_product {
        cols.push("c_P");
    }
    cols
}

/// Columns `t, c_S, c_I, c_ES, c_EI` and `c_P` when tracked.
pub fn write_trajectory(path: &Path, traj: &Trajectory, comment: Option<&str>) -> Result<()> {
    let cols = trajectory_columns(traj.product.is_some());
    let rows = (0..traj.len()).map(|k| {
        let s = traj.states[k].to_array();
        let mut row = vec![traj.times[k], s[0], s[1], s[2], s[3]];
        if let Some(p) = &traj.product {
            row.push(p[k]);
        }
        row
    });
    write_table(path, TRAJECTORY_FORMAT, comment, &cols, rows)
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let (columns, rows) = read_table(path, TRAJECTORY_FORMAT)?;
    let with_product = columns.len() == 6;
    if columns != trajectory_columns(with_product) {
        return Err(Error::param(
            "csv",
            format!("{}: unexpected columns {columns:?}", path.display()),
        ));
    }
    let times = rows.iter().map(|r| r[0]).collect();
    let states = rows
        .iter()
        .map(|r| State4::new(r[1], r[2], r[3], r[4]))
        .collect();
    let product = with_product.then(|| rows.iter().map(|r| r[5]).collect());
    Trajectory::new(times, states, product, StepStats::default())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArtifactEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Run record written next to the artifacts as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config_hash: String,
    pub seed: u64,
    pub rtol: f64,
    pub atol: f64,
    /// Extra run facts, e.g. the shift `L` and window of an iteration.
    pub parameters: serde_json::Map<String, serde_json::Value>,
    pub wall_time_seconds: f64,
    pub artifacts: Vec<ArtifactEntry>,
}

impl Manifest {
    /// Hashes `relative` (under `out_dir`) and records it.
    pub fn record(&mut self, out_dir: &Path, relative: &str) -> Result<()> {
        let full: PathBuf = out_dir.join(relative);
        let bytes = fs::metadata(&full)?.len();
        self.artifacts.push(ArtifactEntry {
            path: relative.to_string(),
            sha256: sha256_file(&full)?,
            bytes,
        });
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}
