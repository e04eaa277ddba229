//! Difference-in-differences regression of log price on treated, post and
//! their interaction.
//!
//! The design is saturated, so OLS reduces to weighted cell means of log price
//! and no linear system is solved.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::pmf::{PeriodFilter, SalesRecord};

/// One price observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DidObservation {
    /// Treated city.
    pub treated: bool,
    /// Post period.
    pub post: bool,
    /// Price, positive.
    pub price: f64,
    /// Units sold at this price.
    pub quantity: u64,
}

/// How observations enter the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Frequency weights: each unit sold is one observation.
    #[default]
    Units,
    /// One observation per row regardless of quantity.
    Rows,
}

/// Coefficients `(intercept, treated, post, treated × post)` with classical
/// standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DidResult {
    /// Coefficients `α₀..α₃`.
    pub alpha: [f64; 4],
    /// Homoskedastic standard errors; NaN when there are no residual degrees
    /// of freedom.
    pub se: [f64; 4],
    /// Number of observations (units or rows, by weighting).
    pub n_obs: u64,
    /// Coefficient of determination, 0 when log prices do not vary.
    pub r2: f64,
}

#[derive(Default, Clone, Copy)]
struct Cell {
    w: f64,
    wy: f64,
}

fn cell_index(o: &DidObservation) -> usize {
    (o.treated as usize) * 2 + o.post as usize
}

/// Weighted least squares on the saturated 2×2 design.
///
/// Rows with zero quantity carry no units and are dropped in both weighting
/// modes.
pub fn did_ols(obs: &[DidObservation], weighting: Weighting) -> Result<DidResult> {
    let weight = |o: &DidObservation| match weighting {
        Weighting::Units => o.quantity as f64,
        Weighting::Rows => 1.0,
    };
    let mut cells = [Cell::default(); 4];
    let mut n_obs = 0u64;
    for o in obs.iter().filter(|o| o.quantity > 0) {
        if !(o.price > 0.0 && o.price.is_finite()) {
            return Err(Error::Domain(format!("log price undefined for price {}", o.price)));
        }
        let w = weight(o);
        let c = &mut cells[cell_index(o)];
        c.w += w;
        c.wy += w * libm::log(o.price);
        n_obs += match weighting {
            Weighting::Units => o.quantity,
            Weighting::Rows => 1,
        };
    }
    const NAMES: [&str; 4] = ["control pre", "control post", "treated pre", "treated post"];
    if let Some(k) = cells.iter().position(|c| c.w == 0.0) {
        return Err(Error::Singular(format!("the {} cell is empty", NAMES[k])));
    }
    let mean: Vec<f64> = cells.iter().map(|c| c.wy / c.w).collect();
    let (c0, c1, t0, t1) = (mean[0], mean[1], mean[2], mean[3]);
    let alpha = [c0, t0 - c0, c1 - c0, (t1 - t0) - (c1 - c0)];

    let total_w: f64 = cells.iter().map(|c| c.w).sum();
    let grand = cells.iter().map(|c| c.wy).sum::<f64>() / total_w;
    let (mut ssr, mut sst) = (0.0, 0.0);
    for o in obs.iter().filter(|o| o.quantity > 0) {
        let (w, y) = (weight(o), libm::log(o.price));
        ssr += w * (y - mean[cell_index(o)]) * (y - mean[cell_index(o)]);
        sst += w * (y - grand) * (y - grand);
    }
    let dof = n_obs as f64 - 4.0;
    let sigma2 = if dof > 0.0 { ssr / dof } else { f64::NAN };
    let inv = |k: usize| 1.0 / cells[k].w;
    let se = [
        libm::sqrt(sigma2 * inv(0)),
        libm::sqrt(sigma2 * (inv(2) + inv(0))),
        libm::sqrt(sigma2 * (inv(1) + inv(0))),
        libm::sqrt(sigma2 * (inv(0) + inv(1) + inv(2) + inv(3))),
    ];
    let r2 = if sst > 0.0 { (1.0 - ssr / sst).clamp(0.0, 1.0) } else { 0.0 };
    Ok(DidResult { alpha, se, n_obs, r2 })
}

/// Observations for a treated city against a pool of control cities, with
/// pre and post windows given as period filters. Records outside both windows
/// or belonging to other cities are skipped.
pub fn did_observations(
    records: &[SalesRecord],
    treated: &str,
    controls: &[&str],
    pre: &PeriodFilter,
    post: &PeriodFilter,
) -> Vec<DidObservation> {
    records
        .iter()
        .filter_map(|r| {
            let is_treated = r.city == treated;
            if !is_treated && !controls.contains(&r.city.as_str()) {
                return None;
            }
            let ym = r.period();
            let post_flag = if post.contains(ym) {
                true
            } else if pre.contains(ym) {
                false
            } else {
                return None;
            };
            Some(DidObservation { treated: is_treated, post: post_flag, price: r.price as f64, quantity: r.quantity })
        })
        .collect()
}
