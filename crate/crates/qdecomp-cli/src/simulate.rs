//! The `simulate` command: Monte Carlo studies against the generators'
//! analytic truth records.
//!
//! `identity-check` verifies the decomposition's special cases (a pure
//! location shift, a zero structural component, a fully structural design)
//! on one large draw. `size-study` estimates the empirical size of the
//! recentered KS test on a null design.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use serde::Serialize;

use qdecomp_core::dgp::{generate, DgpKind, DgpSpec, Truth};
use qdecomp_core::effects::{decompose_group, percentile_grid, qte, RankConfig};
use qdecomp_core::inference::{ks_tests, BootstrapConfig};
use qdecomp_core::sample::WeightedSample;

use crate::config::OutputFormat;
use crate::error::{CliError, Result};
use crate::parallel::run_replications_parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    IdentityCheck,
    SizeStudy,
}

pub fn parse_study(s: &str) -> Result<Study> {
    match s {
        "identity-check" => Ok(Study::IdentityCheck),
        "size-study" => Ok(Study::SizeStudy),
        other => Err(CliError::config(format!(
            "invalid --study `{other}` (expected identity-check or size-study)"
        ))),
    }
}

/// Builds the named generator with its study parameterization.
pub fn parse_dgp(name: &str, n: usize, seed: u64) -> Result<DgpSpec> {
    let (kind, group_shares) = match name {
        "shift" => (DgpKind::Shift { mu: 0.0, sigma: 0.7, shift: 5.0 }, vec![0.5, 0.5]),
        "null-structural" => {
            (DgpKind::NullStructural { mu0: 0.0, mu1: 0.3, sigma: 0.7 }, vec![0.5, 0.5])
        }
        "fully-structural" => (
            DgpKind::FullyStructural { group_locs: vec![-0.4, 0.4], scale: 0.15, shift: 2.0 },
            vec![0.5, 0.5],
        ),
        "mass-point" => {
            (DgpKind::MassPoint { p_zero: 0.21, mu: 0.0, sigma: 0.7, shift: 3.0 }, vec![0.5, 0.5])
        }
        other => Err(CliError::config(format!(
            "invalid --dgp `{other}` (expected shift, null-structural, fully-structural, mass-point)"
        )))?,
    };
    Ok(DgpSpec { kind, n, group_shares, treatment_prob: 0.5, heterogeneous_weights: false, seed })
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityRow {
    pub tau: f64,
    pub group: String,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub study: String,
    pub dgp: String,
    pub n: usize,
    pub seed: u64,
    /// Which deviation is being bounded, e.g. `max |SQTE|`.
    pub metric: String,
    pub max_abs: f64,
    pub exceedances: usize,
    pub pass: bool,
    pub rows: Vec<IdentityRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SizeReport {
    pub study: String,
    pub dgp: String,
    pub draws: usize,
    pub n: usize,
    pub bootstrap_reps: usize,
    pub seed: u64,
    pub nominal_level: f64,
    pub rejection_rate: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum SimReport {
    Identity(IdentityReport),
    Size(SizeReport),
}

/// Half-width of the quantile band used as a sampling-error yardstick for
/// one estimated quantile from a cell of `n_cell` observations.
fn band_delta(n_cell: usize) -> f64 {
    (3.0 / (n_cell.max(1) as f64).sqrt()).clamp(1e-3, 0.08)
}

fn arm_count(sample: &WeightedSample, treated: bool, group: Option<usize>) -> usize {
    sample
        .observations()
        .iter()
        .filter(|o| o.treatment == treated && group.map_or(true, |g| o.group == g))
        .count()
}

/// Tolerance for a difference of two estimated quantile paths at `tau`:
/// three spacing widths per estimated arm.
fn pair_tolerance(
    truth: &Truth,
    tau: f64,
    d0: f64,
    d1: f64,
    group: Option<usize>,
) -> f64 {
    3.0 * (truth.quantile_spacing(false, group, tau, d0) + truth.quantile_spacing(true, group, tau, d1))
}

/// One large draw, with every retained deviation checked against the
/// analytic tolerance rule.
pub fn identity_check(dgp_name: &str, spec: &DgpSpec) -> Result<IdentityReport> {
    let (sample, truth) = generate(spec)?;
    let grid = percentile_grid();
    let rank = match dgp_name {
        "mass-point" => RankConfig::default(),
        _ => RankConfig { mass_point_exclusion: false, ..RankConfig::default() },
    };
    let mut rows: Vec<IdentityRow> = Vec::new();
    let metric;

    match dgp_name {
        "shift" | "mass-point" => {
            metric = "max |QTE - shift|".to_string();
            let c = match spec.kind {
                DgpKind::Shift { shift, .. } | DgpKind::MassPoint { shift, .. } => shift,
                _ => unreachable!(),
            };
            let series = qte(&sample, &grid)?;
            let d0 = band_delta(arm_count(&sample, false, None));
            let d1 = band_delta(arm_count(&sample, true, None));
            for (tau, v) in series.values() {
                // Below the atom both quantiles sit on the mass point and
                // the shift is not identified.
                if dgp_name == "mass-point" && truth.quantile(false, None, tau) <= 0.0 {
                    continue;
                }
                rows.push(IdentityRow {
                    tau,
                    group: "all".into(),
                    value: (v - c).abs(),
                    tolerance: pair_tolerance(&truth, tau, d0, d1, None),
                });
            }
        }
        "null-structural" => {
            metric = "max |SQTE|".to_string();
            for g in 0..sample.group_levels().len() {
                let d = decompose_group(&sample, g, &grid, &rank)?;
                let d0 = band_delta(arm_count(&sample, false, Some(g)));
                let d1 = band_delta(arm_count(&sample, true, Some(g)));
                for (i, tau) in d.sqte.grid.iter().enumerate() {
                    if let Some(s) = d.sqte.points[i].value() {
                        rows.push(IdentityRow {
                            tau: *tau,
                            group: sample.group_levels()[g].clone(),
                            value: s.abs(),
                            tolerance: pair_tolerance(&truth, *tau, d0, d1, None),
                        });
                    }
                }
            }
        }
        "fully-structural" => {
            metric = "max |TQTE - QTE|".to_string();
            let unconditional = qte(&sample, &grid)?;
            for g in 0..sample.group_levels().len() {
                let d = decompose_group(&sample, g, &grid, &rank)?;
                let d0 = band_delta(arm_count(&sample, false, Some(g)));
                let d1 = band_delta(arm_count(&sample, true, Some(g)));
                for (i, tau) in d.tqte.grid.iter().enumerate() {
                    if let (Some(t), Some(q)) =
                        (d.tqte.points[i].value(), unconditional.points[i].value())
                    {
                        rows.push(IdentityRow {
                            tau: *tau,
                            group: sample.group_levels()[g].clone(),
                            value: (t - q).abs(),
                            tolerance: pair_tolerance(&truth, *tau, d0, d1, Some(g)),
                        });
                    }
                }
            }
        }
        other => {
            return Err(CliError::config(format!("no identity check defined for dgp `{other}`")))
        }
    }

    if rows.is_empty() {
        return Err(CliError::config("identity check produced no retained grid points"));
    }
    let max_abs = rows.iter().map(|r| r.value).fold(0.0f64, f64::max);
    let exceedances = rows.iter().filter(|r| r.value > r.tolerance).count();
    Ok(IdentityReport {
        study: "identity-check".into(),
        dgp: dgp_name.to_string(),
        n: spec.n,
        seed: spec.seed,
        metric,
        max_abs,
        exceedances,
        pass: exceedances == 0,
        rows,
    })
}

/// Empirical rejection rate of the recentered KS test on a zero-effect
/// design, against the nominal 0.10 level.
pub fn size_study(spec: &DgpSpec, draws: usize, bootstrap_reps: usize) -> Result<SizeReport> {
    if draws == 0 || bootstrap_reps == 0 {
        return Err(CliError::config("size study needs positive draws and bootstrap replications"));
    }
    // Force a true null: a pure shift of zero leaves every quantile effect
    // identically zero.
    let null_kind = match &spec.kind {
        DgpKind::Shift { mu, sigma, .. } => DgpKind::Shift { mu: *mu, sigma: *sigma, shift: 0.0 },
        DgpKind::NullStructural { mu0, sigma, .. } => {
            DgpKind::Shift { mu: *mu0, sigma: *sigma, shift: 0.0 }
        }
        _ => DgpKind::Shift { mu: 0.0, sigma: 0.7, shift: 0.0 },
    };
    let nominal = 0.10;
    let grid: Vec<f64> = (1..10).map(|k| k as f64 / 10.0).collect();

    let mut rejections = 0usize;
    for draw in 0..draws {
        let draw_spec = DgpSpec {
            kind: null_kind.clone(),
            group_shares: vec![1.0],
            seed: spec.seed.wrapping_add(draw as u64),
            ..spec.clone()
        };
        let (sample, _) = generate(&draw_spec)?;
        let estimator = {
            let grid = grid.clone();
            move |s: &WeightedSample| {
                qte(s, &grid).map(|series| series.points.iter().map(|p| p.value()).collect())
            }
        };
        let point = estimator(&sample)?;
        let cfg = BootstrapConfig {
            replications: bootstrap_reps,
            seed: draw_spec.seed,
            stratify_by_arm: true,
        };
        let reps = run_replications_parallel(&sample, &estimator, &cfg);
        let ks = ks_tests(&point, &reps, sample.len())?;
        if ks.p_ks <= nominal {
            rejections += 1;
        }
    }

    let rate = rejections as f64 / draws as f64;
    let (band_lo, band_hi) = (0.05, 0.15);
    Ok(SizeReport {
        study: "size-study".into(),
        dgp: "shift(0)".into(),
        draws,
        n: spec.n,
        bootstrap_reps,
        seed: spec.seed,
        nominal_level: nominal,
        rejection_rate: rate,
        band_lo,
        band_hi,
        pass: rate >= band_lo && rate <= band_hi,
    })
}

/// Runs the requested study and writes `simulate.json` (or a CSV pair);
/// returns the written paths and the pass flag.
pub fn run_simulate(
    dgp_name: &str,
    study: Study,
    n: usize,
    seed: u64,
    draws: usize,
    bootstrap_reps: usize,
    out_dir: &PathBuf,
    format: OutputFormat,
) -> Result<(Vec<PathBuf>, bool)> {
    let spec = parse_dgp(dgp_name, n, seed)?;
    let report = match study {
        Study::IdentityCheck => SimReport::Identity(identity_check(dgp_name, &spec)?),
        Study::SizeStudy => SimReport::Size(size_study(&spec, draws, bootstrap_reps)?),
    };
    let pass = match &report {
        SimReport::Identity(r) => r.pass,
        SimReport::Size(r) => r.pass,
    };

    fs::create_dir_all(out_dir).map_err(|source| CliError::Io { path: out_dir.clone(), source })?;
    let mut written = Vec::new();
    match format {
        OutputFormat::Json => {
            let path = out_dir.join("simulate.json");
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::config(format!("cannot serialize report: {e}")))?;
            fs::write(&path, json + "\n")
                .map_err(|source| CliError::Io { path: path.clone(), source })?;
            written.push(path);
        }
        OutputFormat::Csv => {
            let mut s = String::from("study,dgp,n,seed,metric,value,threshold,pass\n");
            match &report {
                SimReport::Identity(r) => {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},,{}",
                        r.study,
                        r.dgp,
                        r.n,
                        r.seed,
                        r.metric.replace(',', ";"),
                        r.max_abs,
                        if r.pass { "PASS" } else { "FAIL" }
                    );
                }
                SimReport::Size(r) => {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},rejection_rate@{},{},{}..{},{}",
                        r.study,
                        r.dgp,
                        r.n,
                        r.seed,
                        r.nominal_level,
                        r.rejection_rate,
                        r.band_lo,
                        r.band_hi,
                        if r.pass { "PASS" } else { "FAIL" }
                    );
                }
            }
            let path = out_dir.join("simulate.csv");
            fs::write(&path, s).map_err(|source| CliError::Io { path: path.clone(), source })?;
            written.push(path);

            if let SimReport::Identity(r) = &report {
                let mut d = String::from("tau,group,value,tolerance\n");
                for row in &r.rows {
                    let _ = writeln!(d, "{},{},{},{}", row.tau, row.group, row.value, row.tolerance);
                }
                let path = out_dir.join("simulate_detail.csv");
                fs::write(&path, d).map_err(|source| CliError::Io { path: path.clone(), source })?;
                written.push(path);
            }
        }
    }
    Ok((written, pass))
}
