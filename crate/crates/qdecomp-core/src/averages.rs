//! Average-effect decomposition: ATE, CATE, and the translated/structural
//! split TATE + SATE = CATE.

use alloc::vec::Vec;

use crate::effects::RankConfig;
use crate::sample::{GroupId, WeightedSample};
use crate::wstat::weighted_mean;
use crate::{Error, Result};

/// Average treatment effect: weighted treated mean minus weighted control
/// mean. Identical to the slope of a weighted OLS regression on the
/// treatment dummy.
pub fn ate(sample: &WeightedSample) -> Result<f64> {
    cate_impl(sample, None)
}

/// Group-conditional average treatment effect.
pub fn cate(sample: &WeightedSample, group: GroupId) -> Result<f64> {
    cate_impl(sample, Some(group))
}

fn cate_impl(sample: &WeightedSample, group: Option<GroupId>) -> Result<f64> {
    let (v1, w1) = sample.arm(true, group);
    let (v0, w0) = sample.arm(false, group);
    if v1.is_empty() {
        return Err(Error::EmptyArm { treated: true });
    }
    if v0.is_empty() {
        return Err(Error::EmptyArm { treated: false });
    }
    Ok(weighted_mean(&v1, &w1)? - weighted_mean(&v0, &w0)?)
}

/// Translated average effect with a coverage diagnostic: the share of
/// control-arm weight dropped by rank trimming, so the trimming choice is
/// auditable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TateResult {
    pub value: f64,
    /// Control-arm weight excluded because the observation's rank fell
    /// below the lower clip bound, as a fraction of the group's control
    /// weight.
    pub dropped_weight_share: f64,
}

/// Translated average treatment effect of one group:
/// the weighted average over the group's control observations of
/// `Q̂_{Y(1)|G}(F̂_{Y(0)|G}(Y_i|g)|g) − Y_i`.
///
/// Ranks above the upper clip bound are clamped to it; observations whose
/// rank falls below the lower bound are dropped from the average and their
/// weight reported.
pub fn tate(sample: &WeightedSample, group: GroupId, config: &RankConfig) -> Result<TateResult> {
    config.validate()?;
    let f0 = sample.arm_ecdf(false, Some(group))?;
    let f1 = sample.arm_ecdf(true, Some(group))?;
    let q1 = f1.quantile_fn();

    let mut num = 0.0;
    let mut den = 0.0;
    let mut dropped = 0.0;
    for o in sample.observations() {
        if o.treatment || o.group != group {
            continue;
        }
        let mut rank = f0.cdf(o.outcome);
        if rank > config.clip_hi {
            rank = config.clip_hi;
        }
        if rank < config.clip_lo {
            dropped += o.weight;
            continue;
        }
        num += o.weight * (q1.eval(rank)? - o.outcome);
        den += o.weight;
    }
    if den == 0.0 {
        return Err(Error::AllExcluded);
    }
    Ok(TateResult { value: num / den, dropped_weight_share: dropped / (dropped + den) })
}

/// Structural average effect `cate − tate` (shared-path arithmetic).
pub fn sate(sample: &WeightedSample, group: GroupId, config: &RankConfig) -> Result<f64> {
    Ok(cate(sample, group)? - tate(sample, group, config)?.value)
}

/// One group's row of the average table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupAverages {
    pub group: GroupId,
    pub cate: f64,
    pub tate: f64,
    pub sate: f64,
    pub mean_y1: f64,
    pub mean_y0: f64,
    pub tate_dropped_weight_share: f64,
}

/// The full average decomposition table.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageDecomp {
    pub ate: f64,
    pub mean_y1: f64,
    pub mean_y0: f64,
    pub groups: Vec<GroupAverages>,
}

/// ATE plus per-group CATE/TATE/SATE rows, computed in one pass so the
/// identity `cate − tate = sate` holds bit-exactly per group.
pub fn average_decomposition(sample: &WeightedSample, config: &RankConfig) -> Result<AverageDecomp> {
    let (v1, w1) = sample.arm(true, None);
    let (v0, w0) = sample.arm(false, None);
    if v1.is_empty() {
        return Err(Error::EmptyArm { treated: true });
    }
    if v0.is_empty() {
        return Err(Error::EmptyArm { treated: false });
    }
    let mean_y1 = weighted_mean(&v1, &w1)?;
    let mean_y0 = weighted_mean(&v0, &w0)?;

    let mut groups = Vec::new();
    for g in 0..sample.group_levels().len() {
        let (gv1, gw1) = sample.arm(true, Some(g));
        let (gv0, gw0) = sample.arm(false, Some(g));
        if gv1.is_empty() || gv0.is_empty() {
            return Err(Error::EmptyArm { treated: gv1.is_empty() });
        }
        let gm1 = weighted_mean(&gv1, &gw1)?;
        let gm0 = weighted_mean(&gv0, &gw0)?;
        let c = gm1 - gm0;
        let t = tate(sample, g, config)?;
        groups.push(GroupAverages {
            group: g,
            cate: c,
            tate: t.value,
            sate: c - t.value,
            mean_y1: gm1,
            mean_y0: gm0,
            tate_dropped_weight_share: t.dropped_weight_share,
        });
    }
    Ok(AverageDecomp { ate: mean_y1 - mean_y0, mean_y1, mean_y0, groups })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Observation;
    use alloc::string::ToString;

    fn obs(outcome: f64, treatment: bool, group: GroupId) -> Observation {
        Observation { outcome, treatment, weight: 1.0, group, enrolled: None }
    }

    fn fixture() -> WeightedSample {
        let o = vec![
            obs(10.0, false, 0),
            obs(20.0, false, 0),
            obs(15.0, true, 0),
            obs(25.0, true, 0),
            obs(30.0, false, 1),
            obs(40.0, false, 1),
            obs(35.0, true, 1),
            obs(45.0, true, 1),
        ];
        WeightedSample::new(o, vec!["f".to_string(), "m".to_string()]).unwrap()
    }

    fn cfg() -> RankConfig {
        RankConfig { mass_point_exclusion: false, ..RankConfig::default() }
    }

    #[test]
    fn ate_fixture() {
        // Treated mean 30, control mean 25.
        assert_eq!(ate(&fixture()).unwrap(), 5.0);
    }

    #[test]
    fn ate_identical_arms_zero() {
        let o = vec![obs(3.0, false, 0), obs(3.0, true, 0)];
        let s = WeightedSample::new(o, vec!["g".to_string()]).unwrap();
        assert_eq!(ate(&s).unwrap(), 0.0);
    }

    #[test]
    fn ate_shift_linearity() {
        let base = fixture();
        let shifted: Vec<Observation> = base
            .observations()
            .iter()
            .map(|o| {
                if o.treatment {
                    Observation { outcome: o.outcome + 7.0, ..*o }
                } else {
                    *o
                }
            })
            .collect();
        let s = WeightedSample::new(shifted, vec!["f".to_string(), "m".to_string()]).unwrap();
        assert_eq!(ate(&s).unwrap(), ate(&base).unwrap() + 7.0);
    }

    #[test]
    fn cate_fixture() {
        let s = fixture();
        assert_eq!(cate(&s, 0).unwrap(), 5.0); // 20 − 15
        assert_eq!(cate(&s, 1).unwrap(), 5.0);
    }

    #[test]
    fn tate_fixture_group_f() {
        // Y=10 → rank 0.5 → Q1(0.5)=15, diff 5; Y=20 → rank 1 → clamp 0.99
        // → Q1(0.99)=25, diff 5.
        let t = tate(&fixture(), 0, &cfg()).unwrap();
        assert_eq!(t.value, 5.0);
        assert_eq!(t.dropped_weight_share, 0.0);
    }

    #[test]
    fn tate_identical_arms_zero() {
        let o = vec![
            obs(10.0, false, 0),
            obs(20.0, false, 0),
            obs(10.0, true, 0),
            obs(20.0, true, 0),
        ];
        let s = WeightedSample::new(o, vec!["g".to_string()]).unwrap();
        assert_eq!(tate(&s, 0, &cfg()).unwrap().value, 0.0);
    }

    #[test]
    fn sate_fixture_and_identity() {
        let s = fixture();
        assert_eq!(sate(&s, 0, &cfg()).unwrap(), 0.0);
        let d = average_decomposition(&s, &cfg()).unwrap();
        assert_eq!(d.ate, 5.0);
        for g in &d.groups {
            assert_eq!(g.sate, g.cate - g.tate);
        }
    }

    #[test]
    fn tate_dropped_weight_reported() {
        // One control point far below everything else lands under clip_lo.
        let mut o = Vec::new();
        o.push(obs(0.0, false, 0));
        for i in 1..300 {
            o.push(obs(10.0 + i as f64, false, 0));
        }
        for i in 0..300 {
            o.push(obs(20.0 + i as f64, true, 0));
        }
        let s = WeightedSample::new(o, vec!["g".to_string()]).unwrap();
        let t = tate(&s, 0, &cfg()).unwrap();
        assert!(t.dropped_weight_share > 0.0 && t.dropped_weight_share < 0.01);
    }

    #[test]
    fn weight_rescaling_invariance() {
        let base = fixture();
        let scaled: Vec<Observation> = base
            .observations()
            .iter()
            .map(|o| Observation { weight: o.weight * 17.0, ..*o })
            .collect();
        let s = WeightedSample::new(scaled, vec!["f".to_string(), "m".to_string()]).unwrap();
        assert!((tate(&s, 0, &cfg()).unwrap().value - tate(&base, 0, &cfg()).unwrap().value).abs() < 1e-12);
        assert!((ate(&s).unwrap() - ate(&base).unwrap()).abs() < 1e-12);
    }
}
