//! The `diagnose` command: covariate balance by treatment arm and complier
//! shares overall, by group, and by control-outcome quartile.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use serde::Serialize;

use qdecomp_core::sample::{complier_share, standardized_difference, WeightedSample};
use qdecomp_core::wstat::weighted_mean_var;

use crate::config::{OutputFormat, RunConfig};
use crate::error::{CliError, Result};
use crate::ingest::load_csv_with_extras;

#[derive(Debug, Clone, Serialize)]
pub struct BalanceRow {
    pub variable: String,
    pub mean_treated: f64,
    pub sd_treated: f64,
    pub mean_control: f64,
    pub sd_control: f64,
    /// Absolute standardized difference in percent; `null` in JSON when the
    /// pooled variance degenerates.
    pub std_difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplierRow {
    /// `all`, `group:<label>`, or `quartile:<k>` of the control-arm
    /// outcome.
    pub scope: String,
    pub share: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnoseReport {
    pub balance: Vec<BalanceRow>,
    pub compliers: Vec<ComplierRow>,
    pub dropped_rows: usize,
    pub total_rows: usize,
}

fn split_by_arm(
    sample: &WeightedSample,
    values: &[Option<f64>],
) -> ((Vec<f64>, Vec<f64>), (Vec<f64>, Vec<f64>)) {
    let mut treated = (Vec::new(), Vec::new());
    let mut control = (Vec::new(), Vec::new());
    for (o, v) in sample.observations().iter().zip(values) {
        if let Some(x) = v {
            let cell = if o.treatment { &mut treated } else { &mut control };
            cell.0.push(*x);
            cell.1.push(o.weight);
        }
    }
    (treated, control)
}

pub fn diagnose(config: &RunConfig) -> Result<DiagnoseReport> {
    let (load, extras) = load_csv_with_extras(
        &config.input,
        &config.schema,
        config.group_levels.as_deref(),
        &config.covariates,
    )?;
    let sample = &load.sample;

    let mut balance = Vec::new();
    // The outcome itself always appears in the balance table.
    let outcome_values: Vec<Option<f64>> =
        sample.observations().iter().map(|o| Some(o.outcome)).collect();
    let mut variables: Vec<(String, Vec<Option<f64>>)> =
        vec![(config.schema.outcome.clone(), outcome_values)];
    for (name, values) in config.covariates.iter().zip(extras) {
        variables.push((name.clone(), values));
    }
    for (name, values) in &variables {
        let ((tv, tw), (cv, cw)) = split_by_arm(sample, values);
        if tv.is_empty() || cv.is_empty() {
            return Err(CliError::data(
                &config.input,
                format!("variable `{name}`: one treatment arm has no observed values"),
            ));
        }
        let (mt, vart) = weighted_mean_var(&tv, &tw)?;
        let (mc, varc) = weighted_mean_var(&cv, &cw)?;
        balance.push(BalanceRow {
            variable: name.clone(),
            mean_treated: mt,
            sd_treated: vart.sqrt(),
            mean_control: mc,
            sd_control: varc.sqrt(),
            std_difference: standardized_difference(&tv, &tw, &cv, &cw)?,
        });
    }

    let mut compliers = Vec::new();
    if sample.has_enrollment() {
        compliers.push(ComplierRow { scope: "all".into(), share: complier_share(sample, None, None)? });
        for (g, label) in sample.group_levels().iter().enumerate() {
            compliers.push(ComplierRow {
                scope: format!("group:{label}"),
                share: complier_share(sample, Some(g), None)?,
            });
        }
        // Quartiles of the control-arm outcome distribution.
        let control = sample.arm_ecdf(false, None)?;
        let q = control.quantile_fn();
        let cuts = [q.eval(0.25)?, q.eval(0.5)?, q.eval(0.75)?];
        for k in 0..4usize {
            let lo = if k == 0 { f64::NEG_INFINITY } else { cuts[k - 1] };
            let hi = if k == 3 { f64::INFINITY } else { cuts[k] };
            let filter = move |o: &qdecomp_core::sample::Observation| o.outcome > lo && o.outcome <= hi;
            match complier_share(sample, None, Some(&filter)) {
                Ok(share) => compliers.push(ComplierRow { scope: format!("quartile:{}", k + 1), share }),
                // A quartile can be empty in one arm on discrete outcomes.
                Err(qdecomp_core::Error::EmptyArm { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }

    Ok(DiagnoseReport {
        balance,
        compliers,
        dropped_rows: load.dropped_rows,
        total_rows: load.total_rows,
    })
}

/// Runs `diagnose` and writes `balance.csv` + `compliers.csv` (or
/// `diagnose.json`); returns the written paths.
pub fn run_diagnose(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let report = diagnose(config)?;
    fs::create_dir_all(&config.out_dir)
        .map_err(|source| CliError::Io { path: config.out_dir.clone(), source })?;
    let mut written = Vec::new();
    match config.format {
        OutputFormat::Json => {
            let path = config.out_dir.join("diagnose.json");
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::config(format!("cannot serialize report: {e}")))?;
            fs::write(&path, json + "\n")
                .map_err(|source| CliError::Io { path: path.clone(), source })?;
            written.push(path);
        }
        OutputFormat::Csv => {
            let mut b = String::from(
                "variable,mean_treated,sd_treated,mean_control,sd_control,std_difference\n",
            );
            for r in &report.balance {
                let _ = writeln!(
                    b,
                    "{},{},{},{},{},{}",
                    r.variable, r.mean_treated, r.sd_treated, r.mean_control, r.sd_control, r.std_difference
                );
            }
            let path = config.out_dir.join("balance.csv");
            fs::write(&path, b).map_err(|source| CliError::Io { path: path.clone(), source })?;
            written.push(path);

            let mut c = String::from("scope,share\n");
            for r in &report.compliers {
                let _ = writeln!(c, "{},{}", r.scope, r.share);
            }
            let path = config.out_dir.join("compliers.csv");
            fs::write(&path, c).map_err(|source| CliError::Io { path: path.clone(), source })?;
            written.push(path);
        }
    }
    Ok(written)
}
