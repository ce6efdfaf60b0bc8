//! Weighted order-statistics kernel: empirical CDF, generalized-inverse
//! quantile, weighted means, and a brute-force check-function minimizer kept
//! around as a testing oracle for the quantile-regression parameterization.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Weighted empirical distribution function of one subsample.
///
/// `points` are the strictly increasing unique outcome values and
/// `cumweights[i]` is the normalized cumulative weight at `points[i]`; the
/// last entry is 1 (within 1e-12). The implied step function is
/// right-continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct EcdfTable {
    points: Vec<f64>,
    cumweights: Vec<f64>,
}

impl EcdfTable {
    /// Builds the weighted ECDF `F(y) = Σ w_i 1{Y_i ≤ y} / Σ w_i`.
    ///
    /// Cumulative weights are accumulated with Kahan compensation and
    /// normalized once by the total, which keeps the table stable for
    /// 1e4-1e5 observations with heterogeneous weights.
    pub fn build(values: &[f64], weights: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if values.len() != weights.len() {
            return Err(Error::InvalidSample("values and weights differ in length".into()));
        }
        for (i, (&v, &w)) in values.iter().zip(weights).enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidObservation { index: i, reason: "non-finite value".into() });
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidObservation { index: i, reason: "weight must be positive and finite".into() });
            }
        }

        let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(weights.iter().copied()).collect();
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let mut points = Vec::with_capacity(pairs.len());
        let mut cum = Vec::with_capacity(pairs.len());
        let mut sum = 0.0f64;
        let mut comp = 0.0f64; // Kahan compensation
        for (v, w) in pairs {
            let y = w - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            if points.last() == Some(&v) {
                *cum.last_mut().unwrap() = sum;
            } else {
                points.push(v);
                cum.push(sum);
            }
        }
        let total = sum;
        for c in &mut cum {
            *c /= total;
        }
        *cum.last_mut().unwrap() = 1.0;
        Ok(EcdfTable { points, cumweights: cum })
    }

    /// `F(y)`: normalized weight at or below `y`.
    pub fn cdf(&self, y: f64) -> f64 {
        let idx = self.points.partition_point(|&p| p <= y);
        if idx == 0 {
            0.0
        } else {
            self.cumweights[idx - 1]
        }
    }

    pub fn min(&self) -> f64 {
        self.points[0]
    }

    pub fn max(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn cumweights(&self) -> &[f64] {
        &self.cumweights
    }

    pub fn quantile_fn(&self) -> QuantileFn<'_> {
        QuantileFn { ecdf: self }
    }
}

/// Generalized inverse of an [`EcdfTable`]: `Q(τ) = inf{y : F(y) ≥ τ}`.
///
/// Left-continuous, no interpolation; the rank-translation identities rely
/// on this exact convention.
#[derive(Debug, Clone, Copy)]
pub struct QuantileFn<'a> {
    ecdf: &'a EcdfTable,
}

impl QuantileFn<'_> {
    /// Smallest support point whose cumulative weight reaches `tau`.
    ///
    /// `tau` must lie in (0, 1].
    pub fn eval(&self, tau: f64) -> Result<f64> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::InvalidTau(tau));
        }
        let idx = self.ecdf.cumweights.partition_point(|&c| c < tau);
        // cumweights end at exactly 1.0, so idx is always in range.
        Ok(self.ecdf.points[idx.min(self.ecdf.points.len() - 1)])
    }
}

/// Weighted mean `Σ w_i Y_i / Σ w_i`.
pub fn weighted_mean(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.is_empty() || values.len() != weights.len() {
        return Err(Error::EmptyInput);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (&v, &w) in values.iter().zip(weights) {
        num += w * v;
        den += w;
    }
    Ok(num / den)
}

/// Weighted mean and variance (weight-frequency convention,
/// `Σ w (x − x̄)² / Σ w`).
pub fn weighted_mean_var(values: &[f64], weights: &[f64]) -> Result<(f64, f64)> {
    let mean = weighted_mean(values, weights)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&v, &w) in values.iter().zip(weights) {
        let d = v - mean;
        num += w * d * d;
        den += w;
    }
    Ok((mean, num / den))
}

/// The check function `ρ_τ(a) = a (τ − 1{a ≤ 0})`.
pub fn check_loss(a: f64, tau: f64) -> f64 {
    a * (tau - if a <= 0.0 { 1.0 } else { 0.0 })
}

/// Weighted check-function objective of the two-parameter treatment-dummy
/// model: `Σ ω_i ρ_τ(Y_i − β0 − β1 D_i)`.
pub fn check_objective(sample: &[(f64, bool, f64)], beta0: f64, beta1: f64, tau: f64) -> f64 {
    sample
        .iter()
        .map(|&(y, d, w)| w * check_loss(y - beta0 - if d { beta1 } else { 0.0 }, tau))
        .sum()
}

/// Exhaustive minimizer of the weighted check-function objective over all
/// candidate pairs (`β0` from control outcome values, `β0 + β1` from treated
/// outcome values). Returns `(β̂0, β̂1) = (Q̂_{Y(0)}(τ), δ̂_QTE(τ))`.
///
/// Ties break toward the smallest `β0`, then the smallest `|β1|`, so the
/// result is deterministic. O(n_control · n_treated · n); testing oracle
/// only, the production path uses group quantiles directly.
pub fn checkfn_qr_oracle(sample: &[(f64, bool, f64)], tau: f64) -> Result<(f64, f64)> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidTau(tau));
    }
    let control: Vec<f64> = sample.iter().filter(|t| !t.1).map(|t| t.0).collect();
    let treated: Vec<f64> = sample.iter().filter(|t| t.1).map(|t| t.0).collect();
    if control.is_empty() {
        return Err(Error::EmptyArm { treated: false });
    }
    if treated.is_empty() {
        return Err(Error::EmptyArm { treated: true });
    }

    let mut best: Option<(f64, f64, f64)> = None; // (objective, beta0, beta1)
    for &b0 in &control {
        for &level1 in &treated {
            let b1 = level1 - b0;
            let obj = check_objective(sample, b0, b1, tau);
            let better = match best {
                None => true,
                Some((bo, bb0, bb1)) => {
                    obj < bo
                        || (obj == bo && (b0 < bb0 || (b0 == bb0 && libm::fabs(b1) < libm::fabs(bb1))))
                }
            };
            if better {
                best = Some((obj, b0, b1));
            }
        }
    }
    let (_, b0, b1) = best.unwrap();
    Ok((b0, b1))
}
