//! Subsampling confidence intervals for trade-share estimators.
//!
//! Each draw takes `b` of the `n` registered cars on each side without
//! replacement, re-forms the price distributions and re-evaluates the
//! estimator. Intervals are percentile intervals of the draws with no rate
//! rescaling. The estimators are lower bounds sitting at a boundary, which is
//! where the plain bootstrap is unreliable and `b ≪ n` subsampling is not.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Hypergeometric};

use crate::equilibrium::{invert_from_volume, MarketConfig, MarketSolution, WtpCurve};
use crate::error::{Error, Result};
use crate::estimators::{before_after, diff_in_transports};
use crate::exec::Executor;
use crate::pmf::PriceCounts;
use crate::rng;
use crate::stats;
use crate::transport::Bandwidth;

/// Subsample size rule, applied to each side's unit count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubsampleSize {
    /// `b = floor(n^γ)`.
    Power(f64),
    /// `b = floor(φ n)`.
    Fraction(f64),
    /// The same `b` on every side.
    Fixed(u64),
}

impl Default for SubsampleSize {
    fn default() -> Self {
        SubsampleSize::Power(0.7)
    }
}

impl SubsampleSize {
    /// Subsample size for a side with `n` units; must satisfy `1 ≤ b < n`.
    pub fn resolve(self, n: u64) -> Result<u64> {
        let b = match self {
            SubsampleSize::Power(g) if g > 0.0 && g < 1.0 => libm::floor(libm::pow(n as f64, g)) as u64,
            SubsampleSize::Fraction(f) if f > 0.0 && f < 1.0 => libm::floor(f * n as f64) as u64,
            SubsampleSize::Fixed(b) => b,
            other => return Err(Error::Config(format!("subsample rule {other:?} needs an exponent or fraction in (0, 1)"))),
        };
        if b == 0 || b >= n {
            return Err(Error::Config(format!("subsample size b = {b} must satisfy 1 <= b < n = {n}")));
        }
        Ok(b)
    }
}

/// Subsampling settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsampleConfig {
    /// Number of draws.
    pub n_draws: usize,
    /// Subsample size rule.
    pub size: SubsampleSize,
    /// Interval is `[alpha/2, 1 - alpha/2]` quantiles of the draws.
    pub alpha: f64,
    /// Root seed.
    pub seed: u64,
    /// Control subsamples reuse the treated side's random streams.
    pub paired: bool,
}

impl Default for SubsampleConfig {
    fn default() -> Self {
        Self { n_draws: 200, size: SubsampleSize::default(), alpha: 0.05, seed: 0, paired: false }
    }
}

/// Unit counts per price for each side.
#[derive(Debug, Clone, Copy)]
pub struct SampleSet<'a> {
    /// Treated pre period.
    pub pre: &'a PriceCounts,
    /// Treated post period.
    pub post: &'a PriceCounts,
    /// Control `(pre, post)`, needed for difference in transports.
    pub control: Option<(&'a PriceCounts, &'a PriceCounts)>,
}

/// Trade-share estimator at a fixed bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolumeEstimator {
    /// `OT_d(pre, post)`.
    BeforeAfter(Bandwidth),
    /// `OT_2d(treated) - OT_d(control)`.
    DiffInTransports(Bandwidth),
}

/// Field of a [`MarketSolution`] reported by a composed estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarketField {
    /// Transaction price.
    Price,
    /// Per-side transaction cost.
    Cost,
    /// Gross gains from trade.
    GrossGains,
    /// Total transaction costs.
    TcTotal,
    /// Net gains from trade.
    NetGains,
    /// Transaction costs over gross gains.
    TcShare,
}

impl MarketField {
    /// Reads the field.
    pub fn get(self, sol: &MarketSolution) -> f64 {
        match self {
            MarketField::Price => sol.p,
            MarketField::Cost => sol.t,
            MarketField::GrossGains => sol.gross_gains,
            MarketField::TcTotal => sol.tc_total,
            MarketField::NetGains => sol.net_gains,
            MarketField::TcShare => sol.tc_share,
        }
    }
}

/// Quantity whose sampling distribution is approximated.
#[derive(Debug, Clone, Copy)]
pub enum Estimator<'a> {
    /// A trade share.
    Volume(VolumeEstimator),
    /// A trade share pushed through the equilibrium inversion.
    Market {
        /// Underlying trade-share estimator.
        volume: VolumeEstimator,
        /// Market parameters.
        config: MarketConfig,
        /// Willingness-to-pay curve, treated as known.
        curve: &'a WtpCurve,
        /// Reported field.
        field: MarketField,
    },
}

/// Subsampling output.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleResult {
    /// Full-sample estimate.
    pub point: f64,
    /// Lower percentile bound.
    pub lower: f64,
    /// Upper percentile bound.
    pub upper: f64,
    /// Value per draw in draw order; NaN marks a draw whose trade share the
    /// market model could not support.
    pub draws: Vec<f64>,
    /// Number of NaN draws.
    pub invalid: usize,
    /// Subsample sizes `(pre, post, control pre, control post)`; control sizes
    /// are zero without a control.
    pub sizes: [u64; 4],
}

/// `b` units drawn without replacement from `counts`, by sequential
/// hypergeometric splits over the price cells.
pub fn subsample<R: Rng + ?Sized>(counts: &PriceCounts, b: u64, rng: &mut R) -> Result<PriceCounts> {
    let total = counts.total();
    if b > total {
        return Err(Error::Config(format!("subsample size {b} exceeds {total} units")));
    }
    let mut remaining_pop = total;
    let mut remaining_draws = b;
    let mut pairs = Vec::with_capacity(counts.support().len());
    for (&price, &c) in counts.support().iter().zip(counts.counts()) {
        if remaining_draws == 0 {
            break;
        }
        let x = if c == remaining_pop {
            remaining_draws
        } else {
            Hypergeometric::new(remaining_pop, c, remaining_draws)
                .map_err(|e| Error::Config(format!("hypergeometric parameters: {e}")))?
                .sample(rng)
        };
        pairs.push((price, x));
        remaining_pop -= c;
        remaining_draws -= x;
    }
    Ok(PriceCounts::from_pairs(pairs))
}

fn volume(est: VolumeEstimator, pre: &PriceCounts, post: &PriceCounts, control: Option<(&PriceCounts, &PriceCounts)>) -> Result<f64> {
    let (a, b) = (pre.to_pmf()?, post.to_pmf()?);
    match est {
        VolumeEstimator::BeforeAfter(d) => Ok(before_after(&a, &b, d)),
        VolumeEstimator::DiffInTransports(d) => {
            let (cp, cq) = control.ok_or_else(|| Error::Config("difference in transports needs control samples".into()))?;
            Ok(diff_in_transports(&a, &b, &cp.to_pmf()?, &cq.to_pmf()?, d))
        }
    }
}

fn evaluate(est: &Estimator<'_>, pre: &PriceCounts, post: &PriceCounts, control: Option<(&PriceCounts, &PriceCounts)>) -> Result<f64> {
    match *est {
        Estimator::Volume(v) => volume(v, pre, post, control),
        Estimator::Market { volume: v, config, curve, field } => {
            let s = volume(v, pre, post, control)?;
            Ok(field.get(&invert_from_volume(&config, curve, s)?))
        }
    }
}

/// Percentile subsampling interval for `estimator`.
///
/// Draw `k` uses its own random streams derived from `(seed, k)`, so the
/// output does not depend on the executor. Draws at which a composed market
/// estimator hits an infeasible or nonpositive trade share are recorded as NaN,
/// counted, and left out of the quantiles.
pub fn subsample_ci<E: Executor>(exec: &E, samples: &SampleSet<'_>, estimator: &Estimator<'_>, cfg: &SubsampleConfig) -> Result<SubsampleResult> {
    if cfg.n_draws == 0 {
        return Err(Error::Config("need at least one subsample draw".into()));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::Config(format!("alpha = {} must lie in (0, 1)", cfg.alpha)));
    }
    let needs_control = matches!(
        estimator,
        Estimator::Volume(VolumeEstimator::DiffInTransports(_))
            | Estimator::Market { volume: VolumeEstimator::DiffInTransports(_), .. }
    );
    let control = if needs_control {
        Some(samples.control.ok_or_else(|| Error::Config("difference in transports needs control samples".into()))?)
    } else {
        None
    };
    let mut sizes = [cfg.size.resolve(samples.pre.total())?, cfg.size.resolve(samples.post.total())?, 0, 0];
    if let Some((cp, cq)) = control {
        sizes[2] = cfg.size.resolve(cp.total())?;
        sizes[3] = cfg.size.resolve(cq.total())?;
    }
    let point = evaluate(estimator, samples.pre, samples.post, control)?;

    let draw = |k: usize| -> Result<f64> {
        let base = 4 * k as u64;
        let stream = |side: u64| rng::stream(cfg.seed, rng::SUBSAMPLE, base + side);
        let pre = subsample(samples.pre, sizes[0], &mut stream(0))?;
        let post = subsample(samples.post, sizes[1], &mut stream(1))?;
        let ctrl = match control {
            Some((cp, cq)) => {
                let (i, j) = if cfg.paired { (0, 1) } else { (2, 3) };
                Some((subsample(cp, sizes[2], &mut stream(i))?, subsample(cq, sizes[3], &mut stream(j))?))
            }
            None => None,
        };
        match evaluate(estimator, &pre, &post, ctrl.as_ref().map(|(a, b)| (a, b))) {
            Err(Error::Infeasible { .. } | Error::Domain(_)) if matches!(estimator, Estimator::Market { .. }) => Ok(f64::NAN),
            other => other,
        }
    };
    let draws = exec.map_indexed(cfg.n_draws, draw).into_iter().collect::<Result<Vec<f64>>>()?;
    let mut valid: Vec<f64> = draws.iter().copied().filter(|x| !x.is_nan()).collect();
    if valid.is_empty() {
        return Err(Error::Domain(format!("all {} subsample draws were infeasible", draws.len())));
    }
    valid.sort_by(f64::total_cmp);
    Ok(SubsampleResult {
        point,
        lower: stats::quantile_sorted(&valid, cfg.alpha / 2.0),
        upper: stats::quantile_sorted(&valid, 1.0 - cfg.alpha / 2.0),
        invalid: draws.len() - valid.len(),
        draws,
        sizes,
    })
}
