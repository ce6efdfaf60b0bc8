//! Resolved run configuration: a plain-text `key = value` config file plus
//! flag overrides, flags winning.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use qdecomp_core::effects::{RankConfig, RankSide, Reference};

use crate::error::{CliError, Result};
use crate::ingest::ColumnSchema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Everything a `decompose` or `diagnose` run needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub schema: ColumnSchema,
    /// Closed set of admissible crossed group labels, when declared.
    pub group_levels: Option<Vec<String>>,
    pub rank: RankConfig,
    pub reps_quantile: usize,
    pub reps_average: usize,
    pub seed: u64,
    /// Percentile grid as integer percentiles 1..=99.
    pub grid_percentiles: Vec<u8>,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub stratify_by_arm: bool,
    /// Extra numeric columns for the balance report.
    pub covariates: Vec<String>,
}

impl RunConfig {
    pub fn grid(&self) -> Vec<f64> {
        self.grid_percentiles.iter().map(|&k| k as f64 / 100.0).collect()
    }
}

/// Parses `--reference` values: `y0`, `y1`, `observed`, `group-y0:<label>`,
/// `group-y1:<label>`.
pub fn parse_reference(s: &str) -> Result<Reference> {
    match s {
        "y0" => Ok(Reference::PooledY0),
        "y1" => Ok(Reference::PooledY1),
        "observed" => Ok(Reference::PooledObserved),
        other => {
            if let Some(label) = other.strip_prefix("group-y0:") {
                Ok(Reference::GroupY0(label.to_string()))
            } else if let Some(label) = other.strip_prefix("group-y1:") {
                Ok(Reference::GroupY1(label.to_string()))
            } else {
                Err(CliError::config(format!(
                    "invalid --reference `{other}` (expected y0, y1, observed, group-y0:<label>, group-y1:<label>)"
                )))
            }
        }
    }
}

pub fn reference_to_string(r: &Reference) -> String {
    match r {
        Reference::PooledY0 => "y0".into(),
        Reference::PooledY1 => "y1".into(),
        Reference::PooledObserved => "observed".into(),
        Reference::GroupY0(l) => format!("group-y0:{l}"),
        Reference::GroupY1(l) => format!("group-y1:{l}"),
    }
}

pub fn parse_rank_side(s: &str) -> Result<RankSide> {
    match s {
        "control" => Ok(RankSide::UnderNontreatment),
        "treated" => Ok(RankSide::UnderTreatment),
        other => Err(CliError::config(format!("invalid --rank-side `{other}` (expected control or treated)"))),
    }
}

pub fn rank_side_to_string(s: RankSide) -> &'static str {
    match s {
        RankSide::UnderNontreatment => "control",
        RankSide::UnderTreatment => "treated",
    }
}

/// Parses `--grid`: `all` (default), or comma-separated integer
/// percentiles, e.g. `10,20,30,40,50,60,70,80,90`.
pub fn parse_grid(s: &str) -> Result<Vec<u8>> {
    if s == "all" {
        return Ok((1..=99).collect());
    }
    let mut out = Vec::new();
    for part in s.split(',') {
        let k: u8 = part
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("invalid grid percentile `{part}`")))?;
        if !(1..=99).contains(&k) {
            return Err(CliError::config(format!("grid percentile {k} outside 1..=99")));
        }
        out.push(k);
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err(CliError::config("empty percentile grid"));
    }
    Ok(out)
}

/// Reads a `key = value` config file. `#` starts a comment; repeated keys
/// accumulate for the list-valued keys (`group`, `covariate`).
pub fn read_config_file(path: &Path) -> Result<HashMap<String, Vec<String>>> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let mut map: HashMap<String, Vec<String>> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::config(format!(
                "{}:{}: expected `key = value`, got `{raw}`",
                path.display(),
                i + 1
            )));
        };
        map.entry(key.trim().to_string()).or_default().push(value.trim().to_string());
    }
    Ok(map)
}
