//! Placebo transport costs: how much displacement pure sampling noise creates
//! between two independent samples of the same plug-in distribution.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::pmf::PricePmf;
use crate::rng;
use crate::stats;
use crate::transport::{ot_cost, Bandwidth};

/// Rule-of-thumb placebo threshold: 0.05 percent.
pub const DEFAULT_PLACEBO_THRESHOLD: f64 = 0.0005;

/// Resampling settings for placebo costs.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaceboConfig {
    /// Number of replicate pairs.
    pub n_sims: usize,
    /// Root seed; replicate `k` uses its own stream derived from `(seed, k)`.
    pub seed: u64,
    /// Quantile levels to report, each strictly inside (0, 1).
    pub quantiles: Vec<f64>,
}

impl Default for PlaceboConfig {
    fn default() -> Self {
        Self { n_sims: 500, seed: 0, quantiles: vec![0.025, 0.25, 0.5, 0.75, 0.975] }
    }
}

impl PlaceboConfig {
    /// Checks the invariants.
    pub fn validate(&self) -> Result<()> {
        if self.n_sims == 0 {
            return Err(Error::Config("placebo needs at least one simulation".into()));
        }
        if let Some(q) = self.quantiles.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
            return Err(Error::Config(format!("quantile level {q} must lie strictly inside (0, 1)")));
        }
        Ok(())
    }
}

/// Distribution of replicate placebo costs at one bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaceboSummary {
    /// Mean over replicates.
    pub mean: f64,
    /// Sample standard deviation over replicates.
    pub sd: f64,
    /// Quantiles at the configured levels.
    pub quantiles: Vec<f64>,
}

impl PlaceboSummary {
    /// Summarises replicate values.
    pub fn from_values(values: &[f64], levels: &[f64]) -> Self {
        Self { mean: stats::mean(values), sd: stats::sample_sd(values), quantiles: stats::quantiles(values, levels) }
    }
}

/// Which placebo statistic the selection rule compares with the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SelectionRule {
    /// Replicate mean.
    #[default]
    Mean,
    /// One of the configured quantile levels.
    Quantile(f64),
}

/// Multinomial sample of `n` units from `base`, as an empirical distribution.
pub fn resample<R: Rng + ?Sized>(base: &PricePmf, n: u64, rng: &mut R) -> PricePmf {
    let mass = base.mass();
    let last = mass.iter().rposition(|&m| m > 0.0).unwrap_or(0);
    let mut tail = 0.0;
    let tails: Vec<f64> = mass[..=last]
        .iter()
        .rev()
        .map(|m| {
            tail += m;
            tail
        })
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    let mut left = n;
    let mut support = Vec::new();
    let mut counts = Vec::new();
    for i in 0..=last {
        if left == 0 {
            break;
        }
        let c = if i == last {
            left
        } else if mass[i] <= 0.0 {
            0
        } else {
            let p = (mass[i] / tails[i]).clamp(0.0, 1.0);
            Binomial::new(left, p).expect("probability in [0, 1]").sample(rng)
        };
        if c > 0 {
            support.push(base.support()[i]);
            counts.push(c);
            left -= c;
        }
    }
    let nf = n as f64;
    PricePmf::new(support, counts.iter().map(|&c| c as f64 / nf).collect(), n)
        .expect("counts of a multinomial draw form a distribution")
}

/// Costs of replicate `index` at every bandwidth of `grid`.
///
/// Both samples of a replicate are drawn once and reused across the grid, so
/// each replicate's curve is nonincreasing in `d`.
pub fn placebo_replicate(base: &PricePmf, n_pre: u64, n_post: u64, grid: &[Bandwidth], seed: u64, index: usize) -> Vec<f64> {
    let mut rng = rng::stream(seed, rng::PLACEBO, index as u64);
    let a = resample(base, n_pre, &mut rng);
    let b = resample(base, n_post, &mut rng);
    grid.iter().map(|&d| ot_cost(&a, &b, d)).collect()
}

/// Placebo summaries for every bandwidth of `grid`, on a common set of
/// replicate pairs.
pub fn placebo_curve<E: Executor>(
    exec: &E,
    base: &PricePmf,
    n_pre: u64,
    n_post: u64,
    grid: &[Bandwidth],
    cfg: &PlaceboConfig,
) -> Result<Vec<PlaceboSummary>> {
    cfg.validate()?;
    if n_pre == 0 || n_post == 0 {
        return Err(Error::Config("placebo sample sizes must be positive".into()));
    }
    let replicates = exec.map_indexed(cfg.n_sims, |k| placebo_replicate(base, n_pre, n_post, grid, cfg.seed, k));
    Ok((0..grid.len())
        .map(|col| {
            let values: Vec<f64> = replicates.iter().map(|r| r[col]).collect();
            PlaceboSummary::from_values(&values, &cfg.quantiles)
        })
        .collect())
}

/// Expected `OT_d` between independent samples of sizes `n_pre` and `n_post`
/// drawn from `base`.
pub fn placebo_cost(base: &PricePmf, n_pre: u64, n_post: u64, d: Bandwidth, cfg: &PlaceboConfig) -> Result<PlaceboSummary> {
    Ok(placebo_curve(&Sequential, base, n_pre, n_post, &[d], cfg)?.remove(0))
}

/// Smallest grid bandwidth whose placebo statistic is below `threshold`.
pub fn select_from_placebo(grid: &[Bandwidth], placebo: &[PlaceboSummary], levels: &[f64], threshold: f64, rule: SelectionRule) -> Result<Bandwidth> {
    let stat = |s: &PlaceboSummary| -> Result<f64> {
        match rule {
            SelectionRule::Mean => Ok(s.mean),
            SelectionRule::Quantile(q) => levels
                .iter()
                .position(|l| (l - q).abs() < 1e-12)
                .map(|k| s.quantiles[k])
                .ok_or_else(|| Error::Config(format!("quantile {q} is not among the configured levels"))),
        }
    };
    let mut best = (f64::INFINITY, 0u64);
    for (d, s) in grid.iter().zip(placebo) {
        let v = stat(s)?;
        if v < threshold {
            return Ok(*d);
        }
        if v < best.0 {
            best = (v, d.0);
        }
    }
    Err(Error::SelectionFailed { threshold, min_placebo: best.0, at_d: best.1 })
}

/// Rule-of-thumb bandwidth: the smallest `d` in `grid` whose mean placebo
/// cost is below `threshold`.
pub fn select_bandwidth(base: &PricePmf, n_pre: u64, n_post: u64, grid: &[Bandwidth], cfg: &PlaceboConfig, threshold: f64) -> Result<Bandwidth> {
    super::validate_grid(grid)?;
    let curve = placebo_curve(&Sequential, base, n_pre, n_post, grid, cfg)?;
    select_from_placebo(grid, &curve, &cfg.quantiles, threshold, SelectionRule::Mean)
}
