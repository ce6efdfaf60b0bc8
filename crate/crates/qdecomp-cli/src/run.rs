//! The `decompose` command: one pass of estimation plus bootstrap
//! inference, emitted as series/averages/tests files with a sealed
//! manifest.
//!
//! All quantile series are stacked into a single vector estimator, so one
//! set of bootstrap resamples serves every standard error and every
//! KS-type test.

use std::path::PathBuf;

use qdecomp_core::averages::average_decomposition;
use qdecomp_core::effects::{
    decompose_group, qte, series_difference, EffectSeries, RankConfig, SeriesPoint,
};
use qdecomp_core::inference::{aggregate, ks_tests, BootstrapConfig, Inference};
use qdecomp_core::sample::WeightedSample;

use crate::config::{rank_side_to_string, reference_to_string, RunConfig};
use crate::error::Result;
use crate::ingest::{load_csv, LoadReport};
use crate::parallel::run_replications_parallel;
use crate::report::{AverageRow, DecompReport, Manifest, SeriesRow, TestRow};

/// One named series of the stacked layout.
pub struct LabeledSeries {
    pub kind: String,
    pub group: String,
    pub series: EffectSeries,
}

/// Computes QTE, per-group CQTE/TQTE/SQTE, and all pairwise between-group
/// differences, in a fixed order shared by the point estimate and every
/// bootstrap replication.
pub fn compute_all_series(
    sample: &WeightedSample,
    grid: &[f64],
    rank: &RankConfig,
) -> qdecomp_core::Result<Vec<LabeledSeries>> {
    let mut out = Vec::new();
    out.push(LabeledSeries {
        kind: "QTE".into(),
        group: "all".into(),
        series: qte(sample, grid)?,
    });

    let n_groups = sample.group_levels().len();
    let mut decomps = Vec::with_capacity(n_groups);
    for g in 0..n_groups {
        decomps.push(decompose_group(sample, g, grid, rank)?);
    }
    for (g, d) in decomps.iter().enumerate() {
        let label = sample.group_levels()[g].clone();
        out.push(LabeledSeries { kind: "CQTE".into(), group: label.clone(), series: d.cqte.clone() });
        out.push(LabeledSeries { kind: "TQTE".into(), group: label.clone(), series: d.tqte.clone() });
        out.push(LabeledSeries { kind: "SQTE".into(), group: label, series: d.sqte.clone() });
    }
    for a in 0..n_groups {
        for b in (a + 1)..n_groups {
            let pair = format!("{}-{}", sample.group_levels()[a], sample.group_levels()[b]);
            for (kind, sa, sb) in [
                ("CQTE_diff", &decomps[a].cqte, &decomps[b].cqte),
                ("TQTE_diff", &decomps[a].tqte, &decomps[b].tqte),
                ("SQTE_diff", &decomps[a].sqte, &decomps[b].sqte),
            ] {
                out.push(LabeledSeries {
                    kind: kind.into(),
                    group: pair.clone(),
                    series: series_difference(sa, sb)?,
                });
            }
        }
    }
    Ok(out)
}

fn flatten(series: &[LabeledSeries]) -> Vec<Option<f64>> {
    series.iter().flat_map(|s| s.series.points.iter().map(|p| p.value())).collect()
}

/// Number of observations entering each stacked segment's estimator, from
/// the original sample.
fn segment_sizes(sample: &WeightedSample, series: &[LabeledSeries]) -> Vec<usize> {
    let group_count = |label: &str| {
        sample
            .group_id(label)
            .map(|g| sample.observations().iter().filter(|o| o.group == g).count())
            .unwrap_or(0)
    };
    series
        .iter()
        .map(|s| {
            if s.group == "all" {
                sample.len()
            } else if let Some((a, b)) = s.group.split_once('-') {
                group_count(a) + group_count(b)
            } else {
                group_count(&s.group)
            }
        })
        .collect()
}

fn average_layout(sample: &WeightedSample) -> Vec<(String, String)> {
    let mut layout = vec![("ATE".to_string(), "all".to_string())];
    for label in sample.group_levels() {
        for effect in ["CATE", "TATE", "SATE"] {
            layout.push((effect.to_string(), label.clone()));
        }
    }
    layout
}

fn flatten_averages(sample: &WeightedSample, rank: &RankConfig) -> qdecomp_core::Result<Vec<Option<f64>>> {
    let d = average_decomposition(sample, rank)?;
    let mut v = vec![Some(d.ate)];
    for g in &d.groups {
        v.push(Some(g.cate));
        v.push(Some(g.tate));
        v.push(Some(g.sate));
    }
    Ok(v)
}

fn exclusion_reason(p: &SeriesPoint) -> String {
    match p {
        SeriesPoint::Value(_) => String::new(),
        SeriesPoint::Excluded(reason) => reason.as_str().to_string(),
    }
}

/// Full decomposition with bootstrap inference, as an in-memory report.
pub fn decompose(config: &RunConfig) -> Result<DecompReport> {
    let load = load_csv(&config.input, &config.schema, config.group_levels.as_deref())?;
    decompose_loaded(config, &load, "decompose")
}

/// Same, but on an already-loaded sample (used by tests and `simulate`).
pub fn decompose_loaded(config: &RunConfig, load: &LoadReport, command: &str) -> Result<DecompReport> {
    let sample = &load.sample;
    let grid = config.grid();
    let rank = &config.rank;

    // Point estimates.
    let series = compute_all_series(sample, &grid, rank)?;
    let point = flatten(&series);
    let sizes = segment_sizes(sample, &series);
    let averages_point = average_decomposition(sample, rank)?;

    // One replication set for all quantile series, one for the averages.
    let series_estimator = {
        let grid = grid.clone();
        let rank = rank.clone();
        move |s: &WeightedSample| compute_all_series(s, &grid, &rank).map(|v| flatten(&v))
    };
    let q_cfg = BootstrapConfig {
        replications: config.reps_quantile,
        seed: config.seed,
        stratify_by_arm: config.stratify_by_arm,
    };
    let q_reps = run_replications_parallel(sample, &series_estimator, &q_cfg);
    let q_inference: Inference = aggregate(&point, &q_reps)?;

    let avg_estimator = {
        let rank = rank.clone();
        move |s: &WeightedSample| flatten_averages(s, &rank)
    };
    let a_cfg = BootstrapConfig { replications: config.reps_average, ..q_cfg };
    let avg_point = flatten_averages(sample, rank)?;
    let a_reps = run_replications_parallel(sample, &avg_estimator, &a_cfg);
    let a_inference = aggregate(&avg_point, &a_reps)?;

    // Series rows plus KS tests per segment.
    let grid_len = grid.len();
    let mut series_rows = Vec::new();
    let mut test_rows = Vec::new();
    for (seg, labeled) in series.iter().enumerate() {
        let offset = seg * grid_len;
        for (i, (&tau, p)) in grid.iter().zip(&labeled.series.points).enumerate() {
            series_rows.push(SeriesRow {
                tau,
                kind: labeled.kind.clone(),
                group: labeled.group.clone(),
                estimate: p.value(),
                se: q_inference.se[offset + i],
                sig_code: q_inference.sig[offset + i].stars().to_string(),
                excluded_reason: exclusion_reason(p),
            });
        }

        let seg_point = &point[offset..offset + grid_len];
        let seg_reps: Vec<qdecomp_core::Result<Vec<Option<f64>>>> = q_reps
            .iter()
            .map(|r| r.as_ref().map(|v| v[offset..offset + grid_len].to_vec()).map_err(|e| e.clone()))
            .collect();
        let ks = ks_tests(seg_point, &seg_reps, sizes[seg])?;
        test_rows.push(TestRow {
            series: labeled.kind.clone(),
            group: labeled.group.clone(),
            n: ks.n,
            ks: ks.ks,
            p_ks: ks.p_ks,
            psd: ks.psd,
            p_psd: ks.p_psd,
            nsd: ks.nsd,
            p_nsd: ks.p_nsd,
        });
    }

    // Average rows.
    let layout = average_layout(sample);
    let mut average_rows = Vec::new();
    for (i, (effect, group)) in layout.iter().enumerate() {
        let dropped = if effect == "TATE" {
            averages_point
                .groups
                .iter()
                .find(|g| &sample.group_levels()[g.group] == group)
                .map(|g| g.tate_dropped_weight_share)
        } else {
            None
        };
        average_rows.push(AverageRow {
            effect: effect.clone(),
            group: group.clone(),
            estimate: avg_point[i].unwrap(),
            se: a_inference.se[i],
            sig_code: a_inference.sig[i].stars().to_string(),
            dropped_weight_share: dropped,
        });
    }

    let mut manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        input: Some(config.input.clone()),
        outcome: Some(config.schema.outcome.clone()),
        treatment: Some(config.schema.treatment.clone()),
        weight: Some(config.schema.weight.clone()),
        groups: config.schema.groups.clone(),
        enrolled: config.schema.enrolled.clone(),
        reference: reference_to_string(&rank.reference),
        rank_side: rank_side_to_string(rank.rank_side).to_string(),
        clip_lo: rank.clip_lo,
        clip_hi: rank.clip_hi,
        mass_point_exclusion: rank.mass_point_exclusion,
        grid_percentiles: config.grid_percentiles.clone(),
        seed: config.seed,
        reps_quantile: config.reps_quantile,
        reps_average: config.reps_average,
        stratify_by_arm: config.stratify_by_arm,
        recentered_ks_bootstrap: true,
        group_levels: sample.group_levels().to_vec(),
        total_rows: load.total_rows,
        dropped_rows: load.dropped_rows,
        tate_dropped_weight_shares: averages_point
            .groups
            .iter()
            .map(|g| (sample.group_levels()[g.group].clone(), g.tate_dropped_weight_share))
            .collect(),
        failed_replications_quantile: q_inference.failed_replications,
        failed_replications_average: a_inference.failed_replications,
        hash: String::new(),
    };
    manifest.seal()?;

    Ok(DecompReport { manifest, series: series_rows, averages: average_rows, tests: test_rows })
}

/// `decompose` end-to-end: compute and write the report files.
pub fn run_decompose(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let report = decompose(config)?;
    report.write(&config.out_dir, config.format)
}
