//! Trade-volume estimators built on `OT_d`.
//!
//! - [`before_after`]: `ŝ(d) = OT_d(P_pre, P_post)`.
//! - [`placebo`]: sampling-noise floor and the rule-of-thumb bandwidth.
//! - [`diff_in_transports`]: `OT_2d(B_pre, B_post) - OT_d(C_pre, C_post)`.
//!   Oversmoothing the treated side by `2d` makes the difference a lower bound
//!   on the treated city's own displacement, because
//!   `OT_2d(a, b) - OT_d(c, b) <= OT_d(a, c)` for all distributions.
//! - [`select_dstar`], [`d_floor`], [`displacement_floor`]: picking the most
//!   informative admissible bandwidth.
//! - [`composition`]: displacement explained by a changing mix of first-time
//!   and returning buyers.

pub mod composition;
pub mod placebo;

use alloc::format;
use alloc::vec::Vec;

pub use composition::{
    composition_correction, composition_fit, composition_fit_from, composition_objective, CompositionCorrection,
    CompositionEstimate, CompositionInputs, CompositionPeriod, CorrectionRow,
};
pub use placebo::{
    placebo_cost, placebo_curve, placebo_replicate, resample, select_bandwidth, select_from_placebo, PlaceboConfig,
    PlaceboSummary, SelectionRule, DEFAULT_PLACEBO_THRESHOLD,
};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::pmf::PricePmf;
use crate::transport::{ot_cost, Bandwidth};

/// Default tolerance of the equal-displacement rule: half a percentage point.
pub const DEFAULT_DISPLACEMENT_TOLERANCE: f64 = 0.005;

/// Before-and-after estimate `OT_d(pre, post)`.
pub fn before_after(pre: &PricePmf, post: &PricePmf, d: Bandwidth) -> f64 {
    ot_cost(pre, post, d)
}

/// Difference in transports, `OT_2d(b_pre, b_post) - OT_d(c_pre, c_post)`.
///
/// Not clamped: a negative value means the control moved more than the
/// treated city.
pub fn diff_in_transports(b_pre: &PricePmf, b_post: &PricePmf, c_pre: &PricePmf, c_post: &PricePmf, d: Bandwidth) -> f64 {
    ot_cost(b_pre, b_post, d.doubled()) - ot_cost(c_pre, c_post, d)
}

/// Noise floor and equal-displacement floor combined: the larger of the two.
pub fn d_floor(placebo_rule_d: Bandwidth, displacement_rule_d: Bandwidth) -> Bandwidth {
    placebo_rule_d.max(displacement_rule_d)
}

pub(crate) fn validate_grid(grid: &[Bandwidth]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("bandwidth grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("bandwidth grid must be strictly ascending".into()));
    }
    Ok(())
}

/// One bandwidth of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    /// Bandwidth.
    pub d: Bandwidth,
    /// `OT_d(pre, post)` of the treated city.
    pub real_cost: f64,
    /// Placebo summary at `d`.
    pub placebo: PlaceboSummary,
    /// Difference in transports at `d`, when a control was supplied.
    pub dit: Option<f64>,
}

/// Real and placebo costs across a bandwidth grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthScan {
    /// Quantile levels behind each row's `placebo.quantiles`.
    pub quantile_levels: Vec<f64>,
    /// Rows by ascending `d`.
    pub rows: Vec<ScanRow>,
}

impl BandwidthScan {
    /// The scan's grid.
    pub fn grid(&self) -> Vec<Bandwidth> {
        self.rows.iter().map(|r| r.d).collect()
    }

    /// Rule-of-thumb bandwidth on this scan's placebo column.
    pub fn select(&self, threshold: f64, rule: SelectionRule) -> Result<Bandwidth> {
        let placebo: Vec<PlaceboSummary> = self.rows.iter().map(|r| r.placebo.clone()).collect();
        select_from_placebo(&self.grid(), &placebo, &self.quantile_levels, threshold, rule)
    }
}

/// Distributions feeding a scan.
#[derive(Debug, Clone, Copy)]
pub struct ScanInputs<'a> {
    /// Treated city before.
    pub pre: &'a PricePmf,
    /// Treated city after.
    pub post: &'a PricePmf,
    /// Plug-in distribution for the placebo; its resamples have the sizes of
    /// `pre` and `post`.
    pub placebo_base: &'a PricePmf,
    /// Control city before and after, for the difference-in-transports column.
    pub control: Option<(&'a PricePmf, &'a PricePmf)>,
}

/// Real cost, placebo summary and (optionally) difference in transports at
/// every bandwidth of `grid`.
pub fn bandwidth_scan<E: Executor>(exec: &E, inputs: ScanInputs<'_>, grid: &[Bandwidth], cfg: &PlaceboConfig) -> Result<BandwidthScan> {
    validate_grid(grid)?;
    let placebo = placebo_curve(exec, inputs.placebo_base, inputs.pre.n(), inputs.post.n(), grid, cfg)?;
    let rows = grid
        .iter()
        .zip(placebo)
        .map(|(&d, placebo)| ScanRow {
            d,
            real_cost: ot_cost(inputs.pre, inputs.post, d),
            placebo,
            dit: inputs.control.map(|(c_pre, c_post)| diff_in_transports(inputs.pre, inputs.post, c_pre, c_post, d)),
        })
        .collect();
    Ok(BandwidthScan { quantile_levels: cfg.quantiles.clone(), rows })
}

/// The `(d, ŝ_dit(d))` maximising the difference in transports over rows with
/// `d >= d_min`; ties go to the smaller `d`.
pub fn select_dstar(scan: &BandwidthScan, d_min: Bandwidth) -> Result<(Bandwidth, f64)> {
    let mut best: Option<(Bandwidth, f64)> = None;
    for row in scan.rows.iter().filter(|r| r.d >= d_min) {
        let v = row.dit.ok_or_else(|| Error::Config(format!("scan row d = {} has no difference-in-transports value", row.d.0)))?;
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((row.d, v));
        }
    }
    best.ok_or_else(|| Error::EmptyAdmissibleSet(format!("no scan row with d >= {}", d_min.0)))
}

/// Same-bandwidth comparison of two pairs of distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementRow {
    /// Bandwidth.
    pub d: Bandwidth,
    /// `OT_d` of pair A.
    pub cost_a: f64,
    /// `OT_d` of pair B.
    pub cost_b: f64,
    /// `cost_a - cost_b`.
    pub difference: f64,
}

/// Post-trend diagnostic: `OT_d` of both pairs at the same `d`, and their
/// difference.
pub fn equal_displacement_curves(a_pre: &PricePmf, a_post: &PricePmf, b_pre: &PricePmf, b_post: &PricePmf, grid: &[Bandwidth]) -> Result<Vec<DisplacementRow>> {
    validate_grid(grid)?;
    Ok(grid
        .iter()
        .map(|&d| {
            let cost_a = ot_cost(a_pre, a_post, d);
            let cost_b = ot_cost(b_pre, b_post, d);
            DisplacementRow { d, cost_a, cost_b, difference: cost_a - cost_b }
        })
        .collect())
}

/// Smallest grid bandwidth from which `|difference| < tau` at every larger
/// grid bandwidth.
pub fn displacement_floor(rows: &[DisplacementRow], tau: f64) -> Result<Bandwidth> {
    let start = rows.iter().rposition(|r| r.difference.abs() >= tau).map_or(0, |k| k + 1);
    rows.get(start)
        .map(|r| r.d)
        .ok_or_else(|| Error::EmptyAdmissibleSet(format!("displacements differ by at least {tau} at the largest bandwidth")))
}
