//! CSV and JSON writers, scenario documents and codebook export.

use std::io::Write;
use std::path::Path;

use nfbf_core::{ArrayConfig, PathComponent, PolarCodebook, Scenario};
use serde::{Deserialize, Serialize};

use crate::harness::ResultTable;
use crate::pattern::{PatternRow, UeGainRow};
use crate::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Rows as CSV with a header, or as a JSON array of objects.
pub fn write_rows<T: Serialize, W: Write>(rows: &[T], header: &[&str], format: Format, mut out: W) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(header)?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush().map_err(|e| HarnessError::Io("csv output".into(), e))?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out).map_err(|e| HarnessError::Io("json output".into(), e))?;
        }
    }
    Ok(())
}

pub const RESULT_HEADER: [&str; 6] = ["sweep", "scheme", "metric", "mean", "stderr", "trials"];
pub const PATTERN_HEADER: [&str; 4] = ["scheme", "angle", "radius", "gain_db"];
pub const UE_GAIN_HEADER: [&str; 5] = ["scheme", "ue", "angle", "radius", "gain_db"];
pub const CODEBOOK_HEADER: [&str; 4] = ["p", "q", "angle_rad", "radius_lambda"];

pub fn write_table<W: Write>(table: &ResultTable, format: Format, out: W) -> Result<()> {
    write_rows(&table.rows, &RESULT_HEADER, format, out)
}

pub fn write_pattern<W: Write>(rows: &[PatternRow], format: Format, out: W) -> Result<()> {
    write_rows(rows, &PATTERN_HEADER, format, out)
}

pub fn write_ue_gains<W: Write>(rows: &[UeGainRow], format: Format, out: W) -> Result<()> {
    write_rows(rows, &UE_GAIN_HEADER, format, out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodewordRow {
    pub p: usize,
    pub q: usize,
    pub angle_rad: f64,
    pub radius_lambda: f64,
}

pub fn codebook_rows(cb: &PolarCodebook) -> Result<Vec<CodewordRow>> {
    let lambda = cb.array().wavelength();
    cb.indices()
        .map(|idx| {
            let loc = cb.location(idx)?;
            Ok(CodewordRow {
                p: idx.p,
                q: idx.q,
                angle_rad: loc.angle(),
                radius_lambda: loc.radius() / lambda,
            })
        })
        .collect()
}

pub fn write_codebook<W: Write>(cb: &PolarCodebook, format: Format, out: W) -> Result<()> {
    write_rows(&codebook_rows(cb)?, &CODEBOOK_HEADER, format, out)
}

/// JSON document of a scenario; channel vectors are re-synthesized on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub seed: u64,
    pub array: ArrayConfig,
    pub users: Vec<Vec<PathComponent>>,
}

impl From<&Scenario> for ScenarioDoc {
    fn from(s: &Scenario) -> Self {
        Self {
            seed: s.seed,
            array: s.array,
            users: s.users.iter().map(|u| u.paths().to_vec()).collect(),
        }
    }
}

impl ScenarioDoc {
    pub fn into_scenario(self) -> Result<Scenario> {
        Ok(Scenario::new(self.array, self.users, self.seed)?)
    }
}

pub fn scenario_to_json(s: &Scenario) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ScenarioDoc::from(s))?)
}

pub fn scenario_from_json(text: &str) -> Result<Scenario> {
    serde_json::from_str::<ScenarioDoc>(text)?.into_scenario()
}

pub fn read_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(path.display().to_string(), e))?;
    scenario_from_json(&text)
}
