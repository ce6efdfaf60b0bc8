//! Data model for weighted randomized-trial samples plus the pre-analysis
//! diagnostics (covariate balance, complier shares).

use alloc::string::String;
use alloc::vec::Vec;

use crate::wstat::{weighted_mean, weighted_mean_var, EcdfTable};
use crate::{math, Error, Result};

/// Index into [`WeightedSample::group_levels`].
pub type GroupId = usize;

/// One observation: outcome, randomized offer indicator, sampling weight,
/// group label, and (optionally) actual enrollment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub outcome: f64,
    pub treatment: bool,
    pub weight: f64,
    pub group: GroupId,
    pub enrolled: Option<bool>,
}

/// Immutable validated sample. Weights are used as-is by every estimator
/// (all of them are ratios, so common rescaling cancels); `normalized` is a
/// reporting flag only.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    observations: Vec<Observation>,
    group_levels: Vec<String>,
    normalized: bool,
}

impl WeightedSample {
    pub fn new(observations: Vec<Observation>, group_levels: Vec<String>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidSample("no observations".into()));
        }
        let mut total_weight = 0.0;
        for (i, obs) in observations.iter().enumerate() {
            if !(obs.weight > 0.0) || !obs.weight.is_finite() {
                return Err(Error::InvalidObservation {
                    index: i,
                    reason: "weight must be strictly positive and finite".into(),
                });
            }
            if !obs.outcome.is_finite() || obs.outcome < 0.0 {
                return Err(Error::InvalidObservation {
                    index: i,
                    reason: "outcome must be finite and non-negative".into(),
                });
            }
            if obs.group >= group_levels.len() {
                return Err(Error::InvalidObservation {
                    index: i,
                    reason: "group index outside declared levels".into(),
                });
            }
            total_weight += obs.weight;
        }
        if !(total_weight > 0.0) {
            return Err(Error::InvalidSample("total weight must be positive".into()));
        }
        Ok(WeightedSample { observations, group_levels, normalized: false })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn group_levels(&self) -> &[String] {
        &self.group_levels
    }

    pub fn group_id(&self, label: &str) -> Result<GroupId> {
        self.group_levels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownGroup(label.into()))
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    /// Rescales weights to sum to n. Reporting convenience only; estimates
    /// are invariant to this.
    pub fn normalize_weights(mut self) -> Self {
        let total: f64 = self.observations.iter().map(|o| o.weight).sum();
        let factor = self.observations.len() as f64 / total;
        for o in &mut self.observations {
            o.weight *= factor;
        }
        self.normalized = true;
        self
    }

    pub fn has_enrollment(&self) -> bool {
        self.observations.iter().all(|o| o.enrolled.is_some())
    }

    /// (outcome, weight) pairs of one treatment arm, optionally restricted
    /// to a group.
    pub fn arm(&self, treated: bool, group: Option<GroupId>) -> (Vec<f64>, Vec<f64>) {
        let mut values = Vec::new();
        let mut weights = Vec::new();
        for o in &self.observations {
            if o.treatment == treated && group.map_or(true, |g| o.group == g) {
                values.push(o.outcome);
                weights.push(o.weight);
            }
        }
        (values, weights)
    }

    /// Weighted ECDF of one arm (optionally group-restricted).
    pub fn arm_ecdf(&self, treated: bool, group: Option<GroupId>) -> Result<EcdfTable> {
        let (v, w) = self.arm(treated, group);
        if v.is_empty() {
            return Err(Error::EmptyArm { treated });
        }
        EcdfTable::build(&v, &w)
    }

    /// Weighted ECDF of the observed outcome pooled over both arms.
    pub fn observed_ecdf(&self, group: Option<GroupId>) -> Result<EcdfTable> {
        let mut values = Vec::new();
        let mut weights = Vec::new();
        for o in &self.observations {
            if group.map_or(true, |g| o.group == g) {
                values.push(o.outcome);
                weights.push(o.weight);
            }
        }
        EcdfTable::build(&values, &weights)
    }

    /// Resample with replacement at the original size, indices drawn from a
    /// caller-supplied function of the draw counter. Group levels carry over.
    pub fn resample(&self, mut draw: impl FnMut(u64) -> usize) -> WeightedSample {
        let n = self.observations.len();
        let obs: Vec<Observation> = (0..n as u64).map(|i| self.observations[draw(i) % n]).collect();
        WeightedSample {
            observations: obs,
            group_levels: self.group_levels.clone(),
            normalized: self.normalized,
        }
    }
}

/// Absolute standardized difference in percent between two cells of a
/// numeric variable: `|x̄_A − x̄_B| / sqrt((Var_A + Var_B)/2) · 100`.
///
/// Means and variances are observation-weighted. Degenerate case (zero
/// pooled variance, unequal means) reports `+∞`.
pub fn standardized_difference(
    values_a: &[f64],
    weights_a: &[f64],
    values_b: &[f64],
    weights_b: &[f64],
) -> Result<f64> {
    let (mean_a, var_a) = weighted_mean_var(values_a, weights_a)?;
    let (mean_b, var_b) = weighted_mean_var(values_b, weights_b)?;
    let pooled = 0.5 * (var_a + var_b);
    let diff = math::abs(mean_a - mean_b);
    if pooled <= 0.0 {
        return Ok(if diff == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(diff / math::sqrt(pooled) * 100.0)
}

/// First-stage difference in weighted enrollment rates between the offer
/// and no-offer arms, optionally within a group and/or an arbitrary row
/// filter (used for the control-outcome-quartile rows of the complier
/// table).
pub fn complier_share(
    sample: &WeightedSample,
    group: Option<GroupId>,
    filter: Option<&dyn Fn(&Observation) -> bool>,
) -> Result<f64> {
    if !sample.has_enrollment() {
        return Err(Error::MissingEnrollment);
    }
    let rate = |treated: bool| -> Result<f64> {
        let mut values = Vec::new();
        let mut weights = Vec::new();
        for o in sample.observations() {
            if o.treatment == treated
                && group.map_or(true, |g| o.group == g)
                && filter.map_or(true, |f| f(o))
            {
                values.push(if o.enrolled == Some(true) { 1.0 } else { 0.0 });
                weights.push(o.weight);
            }
        }
        if values.is_empty() {
            return Err(Error::EmptyArm { treated });
        }
        weighted_mean(&values, &weights)
    };
    Ok(rate(true)? - rate(false)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn obs(outcome: f64, treatment: bool, weight: f64, group: GroupId, enrolled: Option<bool>) -> Observation {
        Observation { outcome, treatment, weight, group, enrolled }
    }

    fn two_group_sample() -> WeightedSample {
        // The 8-point hand fixture used across the estimator tests.
        let mut o = Vec::new();
        for &(y, d) in &[(10.0, false), (20.0, false), (15.0, true), (25.0, true)] {
            o.push(obs(y, d, 1.0, 0, Some(d)));
        }
        for &(y, d) in &[(30.0, false), (40.0, false), (35.0, true), (45.0, true)] {
            o.push(obs(y, d, 1.0, 1, Some(d)));
        }
        WeightedSample::new(o, vec!["f".to_string(), "m".to_string()]).unwrap()
    }

    #[test]
    fn rejects_nonpositive_weight() {
        let e = WeightedSample::new(vec![obs(1.0, true, 0.0, 0, None)], vec!["g".to_string()]);
        assert!(matches!(e, Err(Error::InvalidObservation { index: 0, .. })));
    }

    #[test]
    fn rejects_negative_outcome() {
        let e = WeightedSample::new(vec![obs(-1.0, true, 1.0, 0, None)], vec!["g".to_string()]);
        assert!(e.is_err());
    }

    #[test]
    fn unknown_group_label() {
        let s = two_group_sample();
        assert!(matches!(s.group_id("x"), Err(Error::UnknownGroup(_))));
        assert_eq!(s.group_id("m").unwrap(), 1);
    }

    #[test]
    fn standardized_difference_matches_published_balance_row() {
        // Binary shares 0.277 vs 0.266; SDs 0.447 / 0.442.
        let make = |p: f64, n: usize| -> (Vec<f64>, Vec<f64>) {
            let ones = (p * n as f64).round() as usize;
            let mut v = vec![1.0; ones];
            v.extend(vec![0.0; n - ones]);
            (v, vec![1.0; n])
        };
        let (va, wa) = make(0.277, 1000);
        let (vb, wb) = make(0.266, 1000);
        let sd = standardized_difference(&va, &wa, &vb, &wb).unwrap();
        assert!((sd - 2.47).abs() < 0.01, "sd={sd}");
    }

    #[test]
    fn standardized_difference_identical_cells_zero() {
        let v = [1.0, 2.0, 3.0];
        let w = [1.0, 2.0, 1.0];
        assert_eq!(standardized_difference(&v, &w, &v, &w).unwrap(), 0.0);
    }

    #[test]
    fn standardized_difference_degenerate_variance() {
        let sd = standardized_difference(&[1.0, 1.0], &[1.0, 1.0], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(sd.is_infinite());
    }

    #[test]
    fn complier_share_perfect_compliance() {
        let s = two_group_sample();
        assert_eq!(complier_share(&s, None, None).unwrap(), 1.0);
        assert_eq!(complier_share(&s, Some(0), None).unwrap(), 1.0);
    }

    #[test]
    fn complier_share_rates_difference() {
        // Offer arm enrollment 0.733, no-offer arm 0.011 (scaled to counts).
        let mut o = Vec::new();
        for i in 0..1000 {
            o.push(obs(1.0, true, 1.0, 0, Some(i < 733)));
        }
        for i in 0..1000 {
            o.push(obs(1.0, false, 1.0, 0, Some(i < 11)));
        }
        let s = WeightedSample::new(o, vec!["all".to_string()]).unwrap();
        let share = complier_share(&s, None, None).unwrap();
        assert!((share - 0.722).abs() < 1e-12);
    }

    #[test]
    fn complier_share_needs_enrollment() {
        let s = WeightedSample::new(
            vec![obs(1.0, true, 1.0, 0, None), obs(1.0, false, 1.0, 0, None)],
            vec!["g".to_string()],
        )
        .unwrap();
        assert!(matches!(complier_share(&s, None, None), Err(Error::MissingEnrollment)));
    }

    proptest! {
        #[test]
        fn standardized_difference_symmetric_and_affine_invariant(
            va in proptest::collection::vec(-10.0..10.0f64, 2..12),
            vb in proptest::collection::vec(-10.0..10.0f64, 2..12),
            wa in proptest::collection::vec(0.1..3.0f64, 12),
            wb in proptest::collection::vec(0.1..3.0f64, 12),
            slope in 0.1..10.0f64,
            intercept in -5.0..5.0f64,
        ) {
            let wa = &wa[..va.len()];
            let wb = &wb[..vb.len()];
            let ab = standardized_difference(&va, wa, &vb, wb).unwrap();
            let ba = standardized_difference(&vb, wb, &va, wa).unwrap();
            prop_assert!((ab - ba).abs() < 1e-9 || (ab.is_infinite() && ba.is_infinite()));

            let ta: Vec<f64> = va.iter().map(|x| slope * x + intercept).collect();
            let tb: Vec<f64> = vb.iter().map(|x| slope * x + intercept).collect();
            let scaled = standardized_difference(&ta, wa, &tb, wb).unwrap();
            if ab.is_finite() {
                prop_assert!((ab - scaled).abs() < 1e-6 * (1.0 + ab), "{ab} vs {scaled}");
            }
        }
    }
}
