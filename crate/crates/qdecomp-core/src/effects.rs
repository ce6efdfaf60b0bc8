//! Quantile-level estimands over a percentile grid: QTE and CQTE, the
//! relative-rank transformation with a configurable reference distribution,
//! and the translated/structural decomposition TQTE + SQTE = CQTE.

use alloc::string::String;
use alloc::vec::Vec;

use crate::sample::{GroupId, WeightedSample};
use crate::wstat::EcdfTable;
use crate::{Error, Result};

/// Reference distribution whose quantiles anchor the rank translation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reference {
    /// Pooled potential-outcome distribution under non-treatment (default).
    PooledY0,
    /// Pooled potential-outcome distribution under treatment.
    PooledY1,
    /// Observed outcome distribution, both arms pooled.
    PooledObserved,
    /// One group's distribution under non-treatment.
    GroupY0(String),
    /// One group's distribution under treatment.
    GroupY1(String),
}

/// Which conditional arm the relative rank is read off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankSide {
    /// `τ_g^r = F_{Y(0)|G}(Q_ref(τ)|g)` (default).
    UnderNontreatment,
    /// `τ_g^r = F_{Y(1)|G}(Q_ref(τ)|g)`.
    UnderTreatment,
}

/// Configuration of the rank translation: reference distribution, rank
/// side, clip interval, and mass-point exclusion.
#[derive(Debug, Clone, PartialEq)]
pub struct RankConfig {
    pub reference: Reference,
    pub rank_side: RankSide,
    pub clip_lo: f64,
    pub clip_hi: f64,
    /// Exclude grid points below the reference distribution's mass at the
    /// zero outcome, where the continuity assumption breaks down.
    pub mass_point_exclusion: bool,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            reference: Reference::PooledY0,
            rank_side: RankSide::UnderNontreatment,
            clip_lo: 0.01,
            clip_hi: 0.99,
            mass_point_exclusion: true,
        }
    }
}

impl RankConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.clip_lo && self.clip_lo < self.clip_hi && self.clip_hi < 1.0) {
            return Err(Error::InvalidSpec("clip interval must satisfy 0 < lo < hi < 1".into()));
        }
        Ok(())
    }

    /// ECDF of the configured reference distribution.
    pub fn reference_ecdf(&self, sample: &WeightedSample) -> Result<EcdfTable> {
        match &self.reference {
            Reference::PooledY0 => sample.arm_ecdf(false, None),
            Reference::PooledY1 => sample.arm_ecdf(true, None),
            Reference::PooledObserved => sample.observed_ecdf(None),
            Reference::GroupY0(label) => sample.arm_ecdf(false, Some(sample.group_id(label)?)),
            Reference::GroupY1(label) => sample.arm_ecdf(true, Some(sample.group_id(label)?)),
        }
    }
}

/// Why a grid point carries no estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exclusion {
    /// The grid rank lies below the reference mass at zero.
    BelowMassPoint,
    /// The translated rank fell below the lower clip bound.
    BelowClip,
    /// Propagated from an excluded operand of a series difference.
    Propagated,
}

impl Exclusion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Exclusion::BelowMassPoint => "below_mass_point",
            Exclusion::BelowClip => "below_clip",
            Exclusion::Propagated => "propagated",
        }
    }
}

/// One grid entry: an estimate (with inference slots filled later) or an
/// exclusion marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeriesPoint {
    Value(f64),
    Excluded(Exclusion),
}

impl SeriesPoint {
    pub fn value(&self) -> Option<f64> {
        match self {
            SeriesPoint::Value(v) => Some(*v),
            SeriesPoint::Excluded(_) => None,
        }
    }
}

/// Significance marker from the pointwise normal-approximation test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigCode {
    #[default]
    None,
    P10,
    P5,
    P1,
}

impl SigCode {
    pub fn stars(&self) -> &'static str {
        match self {
            SigCode::None => "",
            SigCode::P10 => "*",
            SigCode::P5 => "**",
            SigCode::P1 => "***",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectKind {
    Qte,
    Cqte,
    Tqte,
    Sqte,
    Diff,
}

impl EffectKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EffectKind::Qte => "QTE",
            EffectKind::Cqte => "CQTE",
            EffectKind::Tqte => "TQTE",
            EffectKind::Sqte => "SQTE",
            EffectKind::Diff => "diff",
        }
    }
}

/// Percentile-indexed estimates of one estimand, with per-point standard
/// errors and significance codes once inference has run.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectSeries {
    pub kind: EffectKind,
    pub grid: Vec<f64>,
    pub points: Vec<SeriesPoint>,
    pub se: Vec<Option<f64>>,
    pub sig: Vec<SigCode>,
}

impl EffectSeries {
    fn new(kind: EffectKind, grid: Vec<f64>, points: Vec<SeriesPoint>) -> Self {
        let n = points.len();
        EffectSeries {
            kind,
            grid,
            points,
            se: (0..n).map(|_| None).collect(),
            sig: (0..n).map(|_| SigCode::None).collect(),
        }
    }

    pub fn values(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid
            .iter()
            .zip(&self.points)
            .filter_map(|(&tau, p)| p.value().map(|v| (tau, v)))
    }

    pub fn retained(&self) -> usize {
        self.points.iter().filter(|p| p.value().is_some()).count()
    }
}

/// The default percentile grid 0.01, 0.02, ..., 0.99.
pub fn percentile_grid() -> Vec<f64> {
    (1..=99).map(|k| k as f64 / 100.0).collect()
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidSpec("empty percentile grid".into()));
    }
    for pair in grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidSpec("grid must be strictly increasing".into()));
        }
    }
    if grid[0] <= 0.0 || *grid.last().unwrap() >= 1.0 {
        return Err(Error::InvalidSpec("grid levels must lie in (0,1)".into()));
    }
    Ok(())
}

/// Unconditional quantile treatment effect
/// `δ_QTE(τ) = Q_{Y(1)}(τ) − Q_{Y(0)}(τ)` over the grid.
pub fn qte(sample: &WeightedSample, grid: &[f64]) -> Result<EffectSeries> {
    validate_grid(grid)?;
    let f0 = sample.arm_ecdf(false, None)?;
    let f1 = sample.arm_ecdf(true, None)?;
    let (q0, q1) = (f0.quantile_fn(), f1.quantile_fn());
    let points = grid
        .iter()
        .map(|&tau| Ok(SeriesPoint::Value(q1.eval(tau)? - q0.eval(tau)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EffectSeries::new(EffectKind::Qte, grid.to_vec(), points))
}

/// Conditional quantile treatment effect within one group.
pub fn cqte(sample: &WeightedSample, group: GroupId, grid: &[f64]) -> Result<EffectSeries> {
    validate_grid(grid)?;
    let f0 = sample.arm_ecdf(false, Some(group))?;
    let f1 = sample.arm_ecdf(true, Some(group))?;
    let (q0, q1) = (f0.quantile_fn(), f1.quantile_fn());
    let points = grid
        .iter()
        .map(|&tau| Ok(SeriesPoint::Value(q1.eval(tau)? - q0.eval(tau)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EffectSeries::new(EffectKind::Cqte, grid.to_vec(), points))
}

/// Outcome of the relative-rank transformation at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankOutcome {
    Rank(f64),
    Excluded(Exclusion),
}

impl RankOutcome {
    pub fn rank(&self) -> Option<f64> {
        match self {
            RankOutcome::Rank(r) => Some(*r),
            RankOutcome::Excluded(_) => None,
        }
    }
}

/// Plug-in relative rank `τ̂_g^r = F̂_cond(Q̂_ref(τ))`, where the conditional
/// ECDF is the group's configured rank-side arm.
///
/// Ranks above the upper clip bound are clamped to it; ranks below the lower
/// bound are excluded, as are grid points below the reference mass at zero
/// when mass-point exclusion is on.
pub fn relative_rank(
    sample: &WeightedSample,
    group: GroupId,
    tau: f64,
    config: &RankConfig,
) -> Result<RankOutcome> {
    config.validate()?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidTau(tau));
    }
    let reference = config.reference_ecdf(sample)?;
    let side_treated = matches!(config.rank_side, RankSide::UnderTreatment);
    let conditional = sample.arm_ecdf(side_treated, Some(group))?;
    Ok(relative_rank_with(&reference, &conditional, tau, config))
}

/// Same as [`relative_rank`], but on pre-built tables so the grid loop does
/// not rebuild ECDFs per point.
pub fn relative_rank_with(
    reference: &EcdfTable,
    conditional: &EcdfTable,
    tau: f64,
    config: &RankConfig,
) -> RankOutcome {
    if config.mass_point_exclusion && tau < reference.cdf(0.0) {
        return RankOutcome::Excluded(Exclusion::BelowMassPoint);
    }
    // tau in (0,1) is guaranteed by grid validation.
    let anchor = reference.quantile_fn().eval(tau).expect("tau validated");
    let mut rank = conditional.cdf(anchor);
    if rank > config.clip_hi {
        rank = config.clip_hi;
    }
    if rank < config.clip_lo {
        return RankOutcome::Excluded(Exclusion::BelowClip);
    }
    RankOutcome::Rank(rank)
}

/// The three quantile series of one group's decomposition, computed in a
/// single pass so that `sqte = cqte − tqte` holds by shared-path arithmetic
/// at every retained grid point.
#[derive(Debug, Clone)]
pub struct GroupDecomposition {
    pub group: GroupId,
    pub cqte: EffectSeries,
    pub tqte: EffectSeries,
    pub sqte: EffectSeries,
    /// Relative rank per grid point (for rank-path diagnostics).
    pub ranks: Vec<RankOutcome>,
}

/// Computes CQTE, TQTE, and SQTE for one group over the grid.
pub fn decompose_group(
    sample: &WeightedSample,
    group: GroupId,
    grid: &[f64],
    config: &RankConfig,
) -> Result<GroupDecomposition> {
    validate_grid(grid)?;
    config.validate()?;
    let reference = config.reference_ecdf(sample)?;
    let f0 = sample.arm_ecdf(false, Some(group))?;
    let f1 = sample.arm_ecdf(true, Some(group))?;
    let side_treated = matches!(config.rank_side, RankSide::UnderTreatment);
    let conditional = if side_treated { &f1 } else { &f0 };
    let (q0, q1) = (f0.quantile_fn(), f1.quantile_fn());

    let mut cqte_pts = Vec::with_capacity(grid.len());
    let mut tqte_pts = Vec::with_capacity(grid.len());
    let mut sqte_pts = Vec::with_capacity(grid.len());
    let mut ranks = Vec::with_capacity(grid.len());

    for &tau in grid {
        let c = q1.eval(tau)? - q0.eval(tau)?;
        cqte_pts.push(SeriesPoint::Value(c));
        let outcome = relative_rank_with(&reference, conditional, tau, config);
        ranks.push(outcome);
        match outcome {
            RankOutcome::Rank(r) => {
                let t = q1.eval(r)? - q0.eval(r)?;
                tqte_pts.push(SeriesPoint::Value(t));
                sqte_pts.push(SeriesPoint::Value(c - t));
            }
            RankOutcome::Excluded(reason) => {
                tqte_pts.push(SeriesPoint::Excluded(reason));
                sqte_pts.push(SeriesPoint::Excluded(reason));
            }
        }
    }

    Ok(GroupDecomposition {
        group,
        cqte: EffectSeries::new(EffectKind::Cqte, grid.to_vec(), cqte_pts),
        tqte: EffectSeries::new(EffectKind::Tqte, grid.to_vec(), tqte_pts),
        sqte: EffectSeries::new(EffectKind::Sqte, grid.to_vec(), sqte_pts),
        ranks,
    })
}

/// Translated QTE series of one group.
pub fn tqte(
    sample: &WeightedSample,
    group: GroupId,
    grid: &[f64],
    config: &RankConfig,
) -> Result<EffectSeries> {
    Ok(decompose_group(sample, group, grid, config)?.tqte)
}

/// Structural QTE series (`cqte − tqte`) of one group.
pub fn sqte(
    sample: &WeightedSample,
    group: GroupId,
    grid: &[f64],
    config: &RankConfig,
) -> Result<EffectSeries> {
    Ok(decompose_group(sample, group, grid, config)?.sqte)
}

/// Pointwise difference `a − b` of two series on the same grid and kind.
/// Exclusions propagate.
pub fn series_difference(a: &EffectSeries, b: &EffectSeries) -> Result<EffectSeries> {
    if a.grid != b.grid {
        return Err(Error::SeriesMismatch("grids differ".into()));
    }
    if a.kind != b.kind {
        return Err(Error::SeriesMismatch("kinds differ".into()));
    }
    let points = a
        .points
        .iter()
        .zip(&b.points)
        .map(|(pa, pb)| match (pa.value(), pb.value()) {
            (Some(x), Some(y)) => SeriesPoint::Value(x - y),
            _ => SeriesPoint::Excluded(Exclusion::Propagated),
        })
        .collect();
    Ok(EffectSeries::new(EffectKind::Diff, a.grid.clone(), points))
}
