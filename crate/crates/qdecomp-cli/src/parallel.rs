//! Parallel bootstrap driver. Each replication derives its randomness from
//! `(seed, replication index)`, so running them on a rayon pool and
//! collecting in index order reproduces the sequential driver bit-for-bit.

use rayon::prelude::*;

use qdecomp_core::inference::{replicate, BootstrapConfig, VectorEstimator};
use qdecomp_core::sample::WeightedSample;

pub fn run_replications_parallel<E>(
    sample: &WeightedSample,
    estimator: &E,
    config: &BootstrapConfig,
) -> Vec<qdecomp_core::Result<Vec<Option<f64>>>>
where
    E: VectorEstimator + Sync,
{
    (0..config.replications as u64)
        .into_par_iter()
        .map(|b| replicate(sample, estimator, config, b))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use qdecomp_core::inference::run_replications;
    use qdecomp_core::sample::Observation;

    #[test]
    fn parallel_matches_sequential() {
        let obs: Vec<Observation> = (0..200)
            .map(|i| Observation {
                outcome: (i % 37) as f64,
                treatment: i % 2 == 0,
                weight: 1.0 + (i % 5) as f64 * 0.3,
                group: 0,
                enrolled: None,
            })
            .collect();
        let s = WeightedSample::new(obs, vec!["all".to_string()]).unwrap();
        let est = |s: &WeightedSample| qdecomp_core::averages::ate(s).map(|v| vec![Some(v)]);
        let cfg = BootstrapConfig::new(64, 123);
        assert_eq!(run_replications_parallel(&s, &est, &cfg), run_replications(&s, &est, &cfg));
    }
}
