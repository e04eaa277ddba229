//! Synthetic license lottery with a planted black market.
//!
//! Before rationing every potential buyer purchases a car. After rationing a
//! fresh population enters a lottery for `q` licenses, and a share `σ` of the
//! quota changes hands: the winners who value a license least sell to the
//! losers who value it most. Purchase prices increase with valuation, so the
//! planted trades show up as displaced mass in the post-period price
//! distribution.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::equilibrium::WtpCurve;
use crate::error::{Error, Result};
use crate::pmf::{PriceCounts, SalesRecord, YearMonth};
use crate::rng;

/// Population, quota and valuation curve.
#[derive(Debug, Clone, PartialEq)]
pub struct LotteryMarket {
    /// Potential buyers per period.
    pub buyers: usize,
    /// Licenses drawn in the post period.
    pub quota: usize,
    /// Valuation schedule.
    pub curve: WtpCurve,
}

impl LotteryMarket {
    /// 50,000 buyers, 20,000 licenses, valuations uniform on [0, 280,000].
    pub fn standard() -> Self {
        Self { buyers: 50_000, quota: 20_000, curve: WtpCurve::uniform(280_000.0, 50_000.0).expect("valid uniform curve") }
    }
}

/// Monotone map from valuation to purchase price.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PriceMap {
    /// Price paid by a buyer with zero valuation.
    pub base: u64,
    /// Prices are rounded to a multiple of this.
    pub tick: u64,
}

impl Default for PriceMap {
    fn default() -> Self {
        Self { base: 60_000, tick: 1_000 }
    }
}

impl PriceMap {
    /// `base + v` rounded to the tick.
    pub fn price(&self, v: f64) -> u64 {
        let tick = self.tick.max(1);
        self.base + libm::round(v / tick as f64) as u64 * tick
    }
}

/// Price distributions of one simulated city.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCity {
    /// Purchases before rationing.
    pub pre: PriceCounts,
    /// Purchases after rationing, including traded licenses.
    pub post: PriceCounts,
    /// Purchases by the lottery winners had nobody traded.
    pub post_no_trade: PriceCounts,
    /// Licenses that changed hands.
    pub traded: usize,
}

impl SimulatedCity {
    /// Records for `city`, one per price, dated `pre_month` and `post_month`.
    pub fn to_records(&self, city: &str, pre_month: YearMonth, post_month: YearMonth) -> Vec<SalesRecord> {
        let rows = |counts: &PriceCounts, ym: YearMonth| {
            counts
                .support()
                .iter()
                .zip(counts.counts())
                .map(move |(&price, &quantity)| SalesRecord { city: String::from(city), year: ym.year, month: ym.month, price, quantity })
                .collect::<Vec<_>>()
        };
        let mut out = rows(&self.pre, pre_month);
        out.extend(rows(&self.post, post_month));
        out
    }
}

fn draw_valuations<R: Rng>(curve: &WtpCurve, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| curve.quantile(rng.random::<f64>())).collect()
}

fn counts<I: IntoIterator<Item = f64>>(map: &PriceMap, valuations: I, shift: u64) -> PriceCounts {
    PriceCounts::from_pairs(valuations.into_iter().map(|v| (map.price(v) + shift, 1)))
}

/// Simulates one city with `round(σ q)` planted trades and an additive post
/// period price shift. Runs with the same seed share their populations and
/// lottery draw, so only the planted trades differ across `σ`.
pub fn simulate(market: &LotteryMarket, map: &PriceMap, sigma: f64, post_shift: u64, seed: u64) -> Result<SimulatedCity> {
    if market.quota == 0 || market.quota >= market.buyers {
        return Err(Error::Config(format!("need 0 < quota < buyers, got {} and {}", market.quota, market.buyers)));
    }
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::Config(format!("trade share {sigma} outside [0, 1]")));
    }
    let pre = draw_valuations(&market.curve, market.buyers, &mut rng::stream(seed, rng::SYNTH, 0));
    let population = draw_valuations(&market.curve, market.buyers, &mut rng::stream(seed, rng::SYNTH, 1));
    let mut is_winner = alloc::vec![false; market.buyers];
    for i in rand::seq::index::sample(&mut rng::stream(seed, rng::SYNTH, 2), market.buyers, market.quota) {
        is_winner[i] = true;
    }
    let mut winners: Vec<f64> = population.iter().zip(&is_winner).filter(|(_, w)| **w).map(|(v, _)| *v).collect();
    let mut losers: Vec<f64> = population.iter().zip(&is_winner).filter(|(_, w)| !**w).map(|(v, _)| *v).collect();
    winners.sort_by(f64::total_cmp);
    losers.sort_by(|a, b| b.total_cmp(a));
    let traded = (libm::round(sigma * market.quota as f64) as usize).min(losers.len());

    let post_no_trade = counts(map, winners.iter().copied(), post_shift);
    let holders = winners[traded..].iter().chain(&losers[..traded]).copied();
    Ok(SimulatedCity { pre: counts(map, pre, 0), post: counts(map, holders, post_shift), post_no_trade, traded })
}
