//! Nonparametric bootstrap (standard errors, pointwise significance) and
//! Kolmogorov-Smirnov-type dominance statistics with recentered bootstrap
//! p-values.
//!
//! Replication `b` derives all of its randomness from `(seed, b)`, so a
//! parallel driver can evaluate replications in any order and aggregate to
//! the same result as the sequential driver here.

use alloc::vec::Vec;

use crate::effects::SigCode;
use crate::rng::CounterStream;
use crate::sample::WeightedSample;
use crate::{math, Error, Result};

/// Bootstrap controls. `replications` defaults to 1,999 for quantile series
/// and 499 for averages in the CLI; the kernel takes whatever it is given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub replications: usize,
    pub seed: u64,
    /// Resample within each treatment arm instead of the pooled sample
    /// (sensitivity option; the default resamples pooled observations).
    pub stratify_by_arm: bool,
}

impl BootstrapConfig {
    pub fn new(replications: usize, seed: u64) -> Self {
        BootstrapConfig { replications, seed, stratify_by_arm: false }
    }
}

/// An estimator evaluated on (re)samples: a vector of per-entry estimates
/// aligned to a fixed grid, `None` marking excluded entries.
pub trait VectorEstimator {
    fn estimate(&self, sample: &WeightedSample) -> Result<Vec<Option<f64>>>;
}

impl<F> VectorEstimator for F
where
    F: Fn(&WeightedSample) -> Result<Vec<Option<f64>>>,
{
    fn estimate(&self, sample: &WeightedSample) -> Result<Vec<Option<f64>>> {
        self(sample)
    }
}

const STREAM_BOOTSTRAP: u64 = 0x626f6f74; // distinct from the dgp streams

/// The resampled dataset of replication `rep`: observations drawn with
/// replacement at the original size from the deterministic counter stream.
pub fn resample(sample: &WeightedSample, config: &BootstrapConfig, rep: u64) -> WeightedSample {
    let stream = CounterStream::new(config.seed, STREAM_BOOTSTRAP.wrapping_add(rep));
    if config.stratify_by_arm {
        let treated_idx: Vec<usize> = sample
            .observations()
            .iter()
            .enumerate()
            .filter_map(|(i, o)| o.treatment.then_some(i))
            .collect();
        let control_idx: Vec<usize> = sample
            .observations()
            .iter()
            .enumerate()
            .filter_map(|(i, o)| (!o.treatment).then_some(i))
            .collect();
        sample.resample(|counter| {
            // Preserve each observation's arm; draw within it.
            if sample.observations()[counter as usize].treatment {
                treated_idx[stream.index(counter, treated_idx.len())]
            } else {
                control_idx[stream.index(counter, control_idx.len())]
            }
        })
    } else {
        let n = sample.len();
        sample.resample(|counter| stream.index(counter, n))
    }
}

/// Runs one replication: resample, then estimate. `Err` marks the
/// replication as failed (e.g., an empty estimation cell); failures are
/// counted rather than re-drawn, which would bias the bootstrap
/// distribution.
pub fn replicate<E: VectorEstimator>(
    sample: &WeightedSample,
    estimator: &E,
    config: &BootstrapConfig,
    rep: u64,
) -> Result<Vec<Option<f64>>> {
    estimator.estimate(&resample(sample, config, rep))
}

/// Sequential driver: all replications in order.
pub fn run_replications<E: VectorEstimator>(
    sample: &WeightedSample,
    estimator: &E,
    config: &BootstrapConfig,
) -> Vec<Result<Vec<Option<f64>>>> {
    (0..config.replications as u64).map(|b| replicate(sample, estimator, config, b)).collect()
}

/// Per-entry bootstrap standard errors and significance codes.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub se: Vec<Option<f64>>,
    pub sig: Vec<SigCode>,
    pub failed_replications: usize,
}

/// Significance from the two-sided normal-approximation test of the
/// t-ratio against 1.645 / 1.960 / 2.576.
pub fn sig_code(estimate: f64, se: f64) -> SigCode {
    if se <= 0.0 {
        return SigCode::None;
    }
    let t = math::abs(estimate) / se;
    if t >= 2.576 {
        SigCode::P1
    } else if t >= 1.960 {
        SigCode::P5
    } else if t >= 1.645 {
        SigCode::P10
    } else {
        SigCode::None
    }
}

/// Aggregates replications into per-entry SEs and significance codes.
///
/// The SE of an entry is the sample standard deviation of the replication
/// estimates that produced a value for it. Entries excluded in the point
/// estimate stay excluded. Aborts when more than 1% of replications failed.
pub fn aggregate(
    point: &[Option<f64>],
    replications: &[Result<Vec<Option<f64>>>],
) -> Result<Inference> {
    let total = replications.len();
    let failed = replications.iter().filter(|r| r.is_err()).count();
    if total > 0 && failed as f64 > 0.01 * total as f64 {
        return Err(Error::BootstrapFailures { failed, total });
    }

    let mut se = Vec::with_capacity(point.len());
    let mut sig = Vec::with_capacity(point.len());
    for (i, p) in point.iter().enumerate() {
        match p {
            None => {
                se.push(None);
                sig.push(SigCode::None);
            }
            Some(estimate) => {
                let draws: Vec<f64> = replications
                    .iter()
                    .filter_map(|r| r.as_ref().ok())
                    .filter_map(|v| v.get(i).copied().flatten())
                    .collect();
                if draws.len() < 2 {
                    se.push(None);
                    sig.push(SigCode::None);
                } else {
                    let m = draws.iter().sum::<f64>() / draws.len() as f64;
                    let var = draws.iter().map(|d| (d - m) * (d - m)).sum::<f64>()
                        / (draws.len() - 1) as f64;
                    let s = math::sqrt(var);
                    se.push(Some(s));
                    sig.push(sig_code(*estimate, s));
                }
            }
        }
    }
    Ok(Inference { se, sig, failed_replications: failed })
}

/// Convenience: full bootstrap of a vector estimator on one sample.
pub fn bootstrap_se<E: VectorEstimator>(
    sample: &WeightedSample,
    estimator: &E,
    config: &BootstrapConfig,
) -> Result<Inference> {
    let point = estimator.estimate(sample)?;
    let reps = run_replications(sample, estimator, config);
    aggregate(&point, &reps)
}

/// Kolmogorov-Smirnov-type statistics of an effect series and their
/// recentered bootstrap p-values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// `√n · sup_τ |δ̂(τ)|`
    pub ks: f64,
    /// `√n · sup_τ δ̂(τ)`
    pub psd: f64,
    /// `√n · inf_τ δ̂(τ)`
    pub nsd: f64,
    pub p_ks: f64,
    pub p_psd: f64,
    pub p_nsd: f64,
    /// Number of observations entering the estimator (the `n` of the √n
    /// scaling).
    pub n: usize,
    /// Recentering (`δ̂* − δ̂` per replication) applied before sup/inf.
    pub recentered: bool,
}

fn sup_inf_stats(values: impl Iterator<Item = f64>, sqrt_n: f64) -> (f64, f64, f64) {
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    for v in values {
        sup = sup.max(v);
        inf = inf.min(v);
    }
    let psd = sqrt_n * sup;
    let nsd = sqrt_n * inf;
    (psd.max(-nsd), psd, nsd)
}

/// Computes KS/PSD/NSD on the point estimate's retained grid and p-values
/// `p = B⁻¹ Σ_b 1{T*_b ≥ T_obs}` from the recentered replication series.
///
/// `n_obs` is the number of observations entering the estimator. Entries
/// excluded in the point estimate are excluded from every statistic, even
/// when a replication happens to retain them.
pub fn ks_tests(
    point: &[Option<f64>],
    replications: &[Result<Vec<Option<f64>>>],
    n_obs: usize,
) -> Result<KsResult> {
    let retained: Vec<(usize, f64)> = point
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|v| (i, v)))
        .collect();
    if retained.is_empty() {
        return Err(Error::AllExcluded);
    }
    let sqrt_n = math::sqrt(n_obs as f64);
    let (ks, psd, nsd) = sup_inf_stats(retained.iter().map(|&(_, v)| v), sqrt_n);

    let mut b = 0usize;
    let (mut ge_ks, mut ge_psd, mut ge_nsd) = (0usize, 0usize, 0usize);
    for rep in replications.iter().filter_map(|r| r.as_ref().ok()) {
        let recentered: Vec<f64> = retained
            .iter()
            .filter_map(|&(i, v)| rep.get(i).copied().flatten().map(|r| r - v))
            .collect();
        if recentered.is_empty() {
            continue;
        }
        b += 1;
        let (rk, rp, rn) = sup_inf_stats(recentered.into_iter(), sqrt_n);
        if rk >= ks {
            ge_ks += 1;
        }
        if rp >= psd {
            ge_psd += 1;
        }
        if rn >= nsd {
            ge_nsd += 1;
        }
    }
    if b == 0 {
        return Err(Error::BootstrapFailures { failed: replications.len(), total: replications.len() });
    }
    let bf = b as f64;
    Ok(KsResult {
        ks,
        psd,
        nsd,
        p_ks: ge_ks as f64 / bf,
        p_psd: ge_psd as f64 / bf,
        p_nsd: ge_nsd as f64 / bf,
        n: n_obs,
        recentered: true,
    })
}
