//! CSV ingestion: column mapping, listwise deletion of rows with missing
//! mapped values (counted, not silent), validation, and group crossing.

use std::collections::BTreeSet;
use std::path::Path;

use qdecomp_core::sample::{Observation, WeightedSample};

use crate::error::{CliError, Result};

/// Column-name mapping from the user's file onto the data model. Multiple
/// group columns are crossed into a single label, joined with `:`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ColumnSchema {
    pub outcome: String,
    pub treatment: String,
    pub weight: String,
    pub groups: Vec<String>,
    pub enrolled: Option<String>,
}

/// A loaded sample plus ingestion diagnostics.
#[derive(Debug)]
pub struct LoadReport {
    pub sample: WeightedSample,
    /// Rows dropped because a mapped value was missing.
    pub dropped_rows: usize,
    pub total_rows: usize,
}

fn is_missing(field: &str) -> bool {
    let t = field.trim();
    t.is_empty() || t == "NA" || t == "." || t == "NaN"
}

struct RawRow {
    outcome: f64,
    treatment: bool,
    weight: f64,
    group: String,
    enrolled: Option<bool>,
}

/// Loads and validates a weighted sample from a UTF-8 CSV file with a
/// header row. Rows with missing mapped values are dropped and counted;
/// invalid values (non-binary treatment, non-positive weight, negative or
/// non-numeric outcome) abort with the row number.
///
/// `declared_levels`, when given, is the closed set of admissible crossed
/// group labels; labels outside it are a data error.
pub fn load_csv(
    path: &Path,
    schema: &ColumnSchema,
    declared_levels: Option<&[String]>,
) -> Result<LoadReport> {
    load_csv_with_extras(path, schema, declared_levels, &[]).map(|(report, _)| report)
}

/// [`load_csv`] plus extra numeric columns (for the balance report), each
/// returned as a vector aligned with the retained rows; a missing value in
/// an extra column yields `None` rather than dropping the row.
pub fn load_csv_with_extras(
    path: &Path,
    schema: &ColumnSchema,
    declared_levels: Option<&[String]>,
    extras: &[String],
) -> Result<(LoadReport, Vec<Vec<Option<f64>>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|e| CliError::data(path, format!("cannot open CSV: {e}")))?;

    let headers = reader
        .headers()
        .map_err(|e| CliError::data(path, format!("cannot read header row: {e}")))?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::config(format!("column `{name}` not found in {}", path.display())))
    };
    let outcome_col = col(&schema.outcome)?;
    let treatment_col = col(&schema.treatment)?;
    let weight_col = col(&schema.weight)?;
    if schema.groups.is_empty() {
        return Err(CliError::config("at least one group column is required"));
    }
    let group_cols: Vec<usize> = schema.groups.iter().map(|g| col(g)).collect::<Result<_>>()?;
    let enrolled_col = match &schema.enrolled {
        Some(name) => Some(col(name)?),
        None => None,
    };
    let extra_cols: Vec<usize> = extras.iter().map(|e| col(e)).collect::<Result<_>>()?;

    let mut extra_values: Vec<Vec<Option<f64>>> = vec![Vec::new(); extras.len()];
    let mut rows: Vec<RawRow> = Vec::new();
    let mut dropped = 0usize;
    let mut total = 0usize;
    for (i, record) in reader.records().enumerate() {
        // Header is line 1; data rows start at line 2.
        let line = i + 2;
        let record = record.map_err(|e| CliError::data(path, format!("row {line}: malformed CSV: {e}")))?;
        total += 1;

        let field = |idx: usize| record.get(idx).unwrap_or("");
        let mut mapped = vec![field(outcome_col), field(treatment_col), field(weight_col)];
        mapped.extend(group_cols.iter().map(|&c| field(c)));
        if let Some(c) = enrolled_col {
            mapped.push(field(c));
        }
        if mapped.iter().any(|f| is_missing(f)) {
            dropped += 1;
            continue;
        }

        let parse_f64 = |name: &str, idx: usize| -> Result<f64> {
            field(idx).trim().parse::<f64>().map_err(|_| {
                CliError::data(path, format!("row {line}: column `{name}`: not a number: `{}`", field(idx)))
            })
        };
        let parse_binary = |name: &str, idx: usize| -> Result<bool> {
            match field(idx).trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(CliError::data(
                    path,
                    format!("row {line}: column `{name}` must be 0 or 1, got `{other}`"),
                )),
            }
        };

        let outcome = parse_f64(&schema.outcome, outcome_col)?;
        if !outcome.is_finite() || outcome < 0.0 {
            return Err(CliError::data(
                path,
                format!("row {line}: column `{}`: outcome must be finite and non-negative", schema.outcome),
            ));
        }
        let treatment = parse_binary(&schema.treatment, treatment_col)?;
        let weight = parse_f64(&schema.weight, weight_col)?;
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(CliError::data(
                path,
                format!("row {line}: column `{}`: weight must be strictly positive", schema.weight),
            ));
        }
        let group = group_cols.iter().map(|&c| field(c).trim()).collect::<Vec<_>>().join(":");
        if let Some(levels) = declared_levels {
            if !levels.iter().any(|l| l == &group) {
                return Err(CliError::data(
                    path,
                    format!("row {line}: unknown group label `{group}`"),
                ));
            }
        }
        let enrolled = match enrolled_col {
            Some(c) => Some(parse_binary(schema.enrolled.as_deref().unwrap(), c)?),
            None => None,
        };
        for (k, &c) in extra_cols.iter().enumerate() {
            if is_missing(field(c)) {
                extra_values[k].push(None);
            } else {
                extra_values[k].push(Some(parse_f64(&extras[k], c)?));
            }
        }
        rows.push(RawRow { outcome, treatment, weight, group, enrolled });
    }

    if rows.is_empty() {
        return Err(CliError::data(path, "no usable rows after dropping missing values"));
    }

    // Stable, order-independent level numbering.
    let levels: Vec<String> = match declared_levels {
        Some(l) => l.to_vec(),
        None => rows.iter().map(|r| r.group.clone()).collect::<BTreeSet<_>>().into_iter().collect(),
    };
    let observations: Vec<Observation> = rows
        .iter()
        .map(|r| Observation {
            outcome: r.outcome,
            treatment: r.treatment,
            weight: r.weight,
            group: levels.iter().position(|l| l == &r.group).unwrap(),
            enrolled: r.enrolled,
        })
        .collect();

    let sample = WeightedSample::new(observations, levels)
        .map_err(|e| CliError::data(path, format!("{e}")))?;
    Ok((LoadReport { sample, dropped_rows: dropped, total_rows: total }, extra_values))
}

/// Writes a sample back out in the same schema `load_csv` reads, so
/// generated data can round-trip through the ingestion path.
pub fn write_sample_csv(path: &Path, sample: &WeightedSample, schema: &ColumnSchema) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::data(path, format!("cannot create CSV: {e}")))?;
    let mut header = vec![
        schema.outcome.clone(),
        schema.treatment.clone(),
        schema.weight.clone(),
        schema.groups.first().cloned().unwrap_or_else(|| "group".to_string()),
    ];
    if let Some(e) = &schema.enrolled {
        header.push(e.clone());
    }
    writer
        .write_record(&header)
        .map_err(|e| CliError::data(path, format!("write failed: {e}")))?;
    for o in sample.observations() {
        let mut record = vec![
            format!("{}", o.outcome),
            if o.treatment { "1".to_string() } else { "0".to_string() },
            format!("{}", o.weight),
            sample.group_levels()[o.group].clone(),
        ];
        if schema.enrolled.is_some() {
            record.push(match o.enrolled {
                Some(true) => "1".to_string(),
                Some(false) => "0".to_string(),
                None => String::new(),
            });
        }
        writer
            .write_record(&record)
            .map_err(|e| CliError::data(path, format!("write failed: {e}")))?;
    }
    writer.flush().map_err(|e| CliError::data(path, format!("write failed: {e}")))?;
    Ok(())
}
