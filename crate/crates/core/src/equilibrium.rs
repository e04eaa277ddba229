//! License market with a per-side transaction cost.
//!
//! Lottery losers who value a license above `p + t` buy from winners who value
//! it below `p - t`. Given a willingness-to-pay curve and an estimated trade
//! share `s` of the quota, the marginal valuations are recovered by inverting
//! the CDF, which pins down the transaction price `p` and cost `t`. An optional
//! share `z` of the quota goes to speculators with zero use value.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Default number of potential buyers.
pub const DEFAULT_MARKET_SIZE: u64 = 700_000;

/// Default quota.
pub const DEFAULT_QUOTA: u64 = 260_000;

/// Bisection iteration cap.
const MAX_BISECTION: usize = 200;

/// Starting panel count for the gains integral.
const MIN_PANELS: usize = 10_000;

/// Largest panel count tried before giving up on further refinement.
const MAX_PANELS: usize = 1 << 22;

/// Relative change between panel doublings accepted as converged.
const GAINS_RTOL: f64 = 1e-6;

/// Willingness-to-pay schedule `v(n)`: the `n`-th most eager buyer values a
/// license at `v(n)`.
///
/// The schedule is piecewise linear through its knots, strictly decreasing,
/// starts at `n = 0` and reaches `v = 0` at the last knot `n = N`. It induces
/// the valuation CDF `F(v) = 1 - n(v) / N`, continuous and strictly increasing
/// on `[0, v_max]`, with a piecewise-constant density.
#[derive(Debug, Clone, PartialEq)]
pub struct WtpCurve {
    n: Vec<f64>,
    v: Vec<f64>,
}

impl WtpCurve {
    /// Builds a curve from `(n, v)` knots, rejecting ties in either coordinate.
    pub fn from_knots(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidCurve("need at least two knots".into()));
        }
        if knots.iter().any(|(n, v)| !n.is_finite() || !v.is_finite() || *n < 0.0 || *v < 0.0) {
            return Err(Error::InvalidCurve("knots must be finite and nonnegative".into()));
        }
        if knots[0].0 != 0.0 {
            return Err(Error::InvalidCurve(format!("first knot must be at n = 0, got {}", knots[0].0)));
        }
        if knots[knots.len() - 1].1 != 0.0 {
            return Err(Error::InvalidCurve("last knot must have v = 0".into()));
        }
        for (k, w) in knots.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidCurve(format!("n must be strictly increasing (knots {k} and {})", k + 1)));
            }
            if w[1].1 >= w[0].1 {
                return Err(Error::InvalidCurve(format!(
                    "v must be strictly decreasing (knots {k} and {}); strictify to perturb ties",
                    k + 1
                )));
            }
        }
        Ok(Self { n: knots.iter().map(|k| k.0).collect(), v: knots.iter().map(|k| k.1).collect() })
    }

    /// Like [`from_knots`](Self::from_knots), but first lifts any knot whose
    /// value does not exceed its successor's by `1e-6 · v_max`.
    pub fn strictify(knots: &[(f64, f64)]) -> Result<Self> {
        let v_max = knots.iter().map(|k| k.1).fold(0.0, f64::max);
        let eps = 1e-6 * v_max;
        let mut fixed = knots.to_vec();
        for k in (0..fixed.len().saturating_sub(1)).rev() {
            if fixed[k].1 <= fixed[k + 1].1 {
                fixed[k].1 = fixed[k + 1].1 + eps;
            }
        }
        Self::from_knots(&fixed)
    }

    /// Valuations uniform on `[0, v_max]` over a population of `size`.
    pub fn uniform(v_max: f64, size: f64) -> Result<Self> {
        Self::from_knots(&[(0.0, v_max), (size, 0.0)])
    }

    /// `(n, v)` knots.
    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.n.iter().copied().zip(self.v.iter().copied())
    }

    /// Highest valuation `v(0)`.
    pub fn v_max(&self) -> f64 {
        self.v[0]
    }

    /// Population size `N` at which the curve reaches zero.
    pub fn population(&self) -> f64 {
        self.n[self.n.len() - 1]
    }

    /// Segment `k` spans `v` in `[v[k+1], v[k])`.
    fn segment(&self, v: f64) -> usize {
        // v is strictly decreasing; find the last k with v[k] > v.
        let idx = self.v.partition_point(|&vk| vk > v);
        idx.saturating_sub(1).min(self.v.len() - 2)
    }

    /// `F(v)`, clamped to 0 below zero and 1 above `v_max`.
    pub fn cdf(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        if v >= self.v_max() {
            return 1.0;
        }
        let k = self.segment(v);
        let frac = (self.v[k] - v) / (self.v[k] - self.v[k + 1]);
        let n = self.n[k] + frac * (self.n[k + 1] - self.n[k]);
        1.0 - n / self.population()
    }

    /// `F⁻¹(u)` for `u` in [0, 1] (clamped).
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let n = (1.0 - u) * self.population();
        let k = self.n.partition_point(|&nk| nk <= n).clamp(1, self.n.len() - 1) - 1;
        let frac = (n - self.n[k]) / (self.n[k + 1] - self.n[k]);
        self.v[k] + frac * (self.v[k + 1] - self.v[k])
    }

    /// Density `f(v)`; zero outside `[0, v_max)`. At a knot the density of the
    /// segment above it is returned.
    pub fn density(&self, v: f64) -> f64 {
        if !(0.0..self.v_max()).contains(&v) {
            return 0.0;
        }
        let k = self.segment(v);
        (self.n[k + 1] - self.n[k]) / (self.population() * (self.v[k] - self.v[k + 1]))
    }
}

/// Market size, quota and speculator share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketConfig {
    /// Number of potential buyers `N`.
    pub market_size: u64,
    /// Licenses issued `q`.
    pub quota: u64,
    /// Share `z` of the quota won by speculators.
    pub speculator_share: f64,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self { market_size: DEFAULT_MARKET_SIZE, quota: DEFAULT_QUOTA, speculator_share: 0.0 }
    }
}

impl MarketConfig {
    /// Checks `0 < q < N` and `z` in [0, 1].
    pub fn validate(&self) -> Result<()> {
        if self.quota == 0 || self.quota >= self.market_size {
            return Err(Error::Config(format!("need 0 < q < N, got q = {} and N = {}", self.quota, self.market_size)));
        }
        if !(0.0..=1.0).contains(&self.speculator_share) {
            return Err(Error::Config(format!("speculator share {} outside [0, 1]", self.speculator_share)));
        }
        Ok(())
    }

    fn n(&self) -> f64 {
        self.market_size as f64
    }

    fn q(&self) -> f64 {
        self.quota as f64
    }

    /// Potential buyers on the secondary market, `N - q(1 - z)`.
    pub fn buyer_pool(&self) -> f64 {
        self.n() - self.q() * (1.0 - self.speculator_share)
    }

    /// Largest trade share with `v_buyer ≥ v_seller`: `(N - q(1-z)) / (N + qz)`,
    /// which is `s_notc = (N - q)/N` without speculators.
    pub fn max_trade_share(&self) -> f64 {
        let m = self.buyer_pool();
        m / (m + self.q())
    }
}

/// One equilibrium scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketSolution {
    /// Traded share of the quota.
    pub s: f64,
    /// Transaction price.
    pub p: f64,
    /// Per-side transaction cost.
    pub t: f64,
    /// Valuation of the marginal seller, `p - t`.
    pub v_seller: f64,
    /// Valuation of the marginal buyer, `p + t`.
    pub v_buyer: f64,
    /// Area between inverse demand and inverse supply up to `sq`.
    pub gross_gains: f64,
    /// `2 t s q`.
    pub tc_total: f64,
    /// `gross_gains - tc_total`.
    pub net_gains: f64,
    /// `tc_total / gross_gains`, or 0 when there are no gains.
    pub tc_share: f64,
}

/// Bisection for the sign change of a monotone `g` on `[lo, hi]`, run to
/// machine precision or the iteration cap.
fn bisect(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    let rising = g(lo) <= g(hi);
    for _ in 0..MAX_BISECTION {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Buyers willing to pay `p + t`: `(N - q(1-z)) (1 - F(p + t))`.
pub fn demand(cfg: &MarketConfig, curve: &WtpCurve, p: f64, t: f64) -> f64 {
    cfg.buyer_pool() * (1.0 - curve.cdf(p + t))
}

/// Licenses offered at `p - t`. Without speculators this is `q F(p - t)` and `s`
/// is ignored; otherwise `zq + ((s - z)/s) q F(p - t)`.
pub fn supply(cfg: &MarketConfig, curve: &WtpCurve, p: f64, t: f64, s: f64) -> Result<f64> {
    let z = cfg.speculator_share;
    let q = cfg.q();
    if z == 0.0 {
        return Ok(q * curve.cdf(p - t));
    }
    if s <= 0.0 {
        return Err(Error::Domain(format!("trade share {s} must be positive when speculators are present")));
    }
    if z > s {
        return Err(Error::Config(format!("speculator share {z} exceeds trade share {s}")));
    }
    Ok(z * q + (s - z) / s * q * curve.cdf(p - t))
}

/// Frictionless equilibrium `(p_notc, s_notc)`, with `p_notc` found by bisection
/// on `q F(p) = (N - q)(1 - F(p))`.
pub fn solve_no_tc(cfg: &MarketConfig, curve: &WtpCurve) -> Result<(f64, f64)> {
    cfg.validate()?;
    if cfg.speculator_share != 0.0 {
        return Err(Error::Config("the frictionless benchmark is defined without speculators".into()));
    }
    let (n, q) = (cfg.n(), cfg.q());
    let p = bisect(0.0, curve.v_max(), |p| {
        let f = curve.cdf(p);
        q * f - (n - q) * (1.0 - f)
    });
    Ok((p, (n - q) / n))
}

/// Recovers prices, costs and gains from a trade share `s` of the quota.
pub fn invert_from_volume(cfg: &MarketConfig, curve: &WtpCurve, s: f64) -> Result<MarketSolution> {
    cfg.validate()?;
    let z = cfg.speculator_share;
    if s.is_nan() || s <= 0.0 {
        return Err(Error::Domain(format!("trade share must be positive, got {s}")));
    }
    if z > s {
        return Err(Error::Config(format!("speculator share {z} exceeds trade share {s}")));
    }
    let buyer_quantile = 1.0 - s * cfg.q() / cfg.buyer_pool();
    let v_seller = if z == s { 0.0 } else { curve.quantile(s) };
    let s_max = if z == s { cfg.buyer_pool() / cfg.q() } else { cfg.max_trade_share() };
    if s > s_max * (1.0 + 1e-12) {
        return Err(Error::Infeasible { s, s_max });
    }
    let v_buyer = curve.quantile(buyer_quantile).max(v_seller);
    let sol = MarketSolution {
        s,
        p: 0.5 * (v_seller + v_buyer),
        t: 0.5 * (v_buyer - v_seller),
        v_seller,
        v_buyer,
        gross_gains: 0.0,
        tc_total: 0.0,
        net_gains: 0.0,
        tc_share: 0.0,
    };
    gains_from_trade(cfg, curve, sol)
}

fn trapezoid(a: f64, b: f64, panels: usize, g: &impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    let interior: f64 = (1..panels).map(|i| g(a + i as f64 * h)).sum();
    h * (0.5 * (g(a) + g(b)) + interior)
}

/// Fills the gains fields of `sol` from its `s` and `t`.
///
/// Gross gains integrate inverse demand minus inverse supply over traded units
/// by the composite trapezoid rule, doubling the panel count from 10⁴ until the
/// relative change falls below 1e-6.
pub fn gains_from_trade(cfg: &MarketConfig, curve: &WtpCurve, sol: MarketSolution) -> Result<MarketSolution> {
    cfg.validate()?;
    let (s, z, q) = (sol.s, cfg.speculator_share, cfg.q());
    let pool = cfg.buyer_pool();
    let units = s * q;
    let inverse_supply = |u: f64| {
        if z == 0.0 {
            curve.quantile(u / q)
        } else if u <= z * q || s <= z {
            0.0
        } else {
            curve.quantile((u - z * q) * s / ((s - z) * q))
        }
    };
    let surplus = |u: f64| curve.quantile(1.0 - u / pool) - inverse_supply(u);
    let gross = if units > 0.0 {
        let mut panels = MIN_PANELS;
        let mut value = trapezoid(0.0, units, panels, &surplus);
        while panels < MAX_PANELS {
            panels *= 2;
            let refined = trapezoid(0.0, units, panels, &surplus);
            let converged = (refined - value).abs() <= GAINS_RTOL * refined.abs();
            value = refined;
            if converged {
                break;
            }
        }
        value
    } else {
        0.0
    };
    let tc_total = 2.0 * sol.t * s * q;
    Ok(MarketSolution {
        gross_gains: gross,
        tc_total,
        net_gains: gross - tc_total,
        tc_share: if gross > 0.0 { tc_total / gross } else { 0.0 },
        ..sol
    })
}

/// Price `p` and trade share that clear the market at cost `t`.
///
/// Uses `F(p - t) = s` on the supply side, which holds for any `z < s`, and
/// solves `D(p, t) = q F(p - t)` by bisection. The share is read off as
/// `D(p, t) / q`. When every trade is by a speculator the price is not pinned
/// down by `t` alone and this function does not apply.
pub fn clear_market(cfg: &MarketConfig, curve: &WtpCurve, t: f64) -> Result<(f64, f64)> {
    cfg.validate()?;
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("transaction cost must be nonnegative, got {t}")));
    }
    let q = cfg.q();
    let p = bisect(t, curve.v_max() + t, |p| demand(cfg, curve, p, t) - q * curve.cdf(p - t));
    Ok((p, demand(cfg, curve, p, t) / q))
}

/// A row of the bounds table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsRow {
    /// The equilibrium at this trade share.
    pub solution: MarketSolution,
    /// Whether `p` is at least the supplied price floor; `None` without a floor.
    pub meets_price_floor: Option<bool>,
}

/// Solutions over a list of trade shares, flagging rows whose price clears an
/// optional lower bound on the transaction price.
pub fn bounds_table(cfg: &MarketConfig, curve: &WtpCurve, s_values: &[f64], price_floor: Option<f64>) -> Result<Vec<BoundsRow>> {
    s_values
        .iter()
        .map(|&s| {
            let solution = invert_from_volume(cfg, curve, s)?;
            Ok(BoundsRow { solution, meets_price_floor: price_floor.map(|floor| solution.p >= floor) })
        })
        .collect()
}

/// Derivatives of the price and cost with respect to the trade share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparativeStatics {
    /// `∂p/∂s`.
    pub dp_ds: f64,
    /// `∂t/∂s`, always negative.
    pub dt_ds: f64,
}

/// Analytic `∂p/∂s` and `∂t/∂s` at `s`.
pub fn comparative_statics(cfg: &MarketConfig, curve: &WtpCurve, s: f64) -> Result<ComparativeStatics> {
    let sol = invert_from_volume(cfg, curve, s)?;
    if cfg.speculator_share == s {
        return Err(Error::DerivativeUndefined("the seller valuation is pinned at zero when z = s".into()));
    }
    let (f_seller, f_buyer) = (curve.density(sol.v_seller), curve.density(sol.v_buyer));
    if f_seller <= 0.0 || f_buyer <= 0.0 {
        return Err(Error::DerivativeUndefined(format!(
            "zero density at a marginal valuation (f(v_seller) = {f_seller}, f(v_buyer) = {f_buyer})"
        )));
    }
    let d_seller = 1.0 / f_seller;
    let d_buyer = -(cfg.q() / cfg.buyer_pool()) / f_buyer;
    Ok(ComparativeStatics { dp_ds: 0.5 * (d_seller + d_buyer), dt_ds: 0.5 * (d_buyer - d_seller) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> WtpCurve {
        WtpCurve::uniform(280_000.0, 700_000.0).unwrap()
    }

    #[test]
    fn curve_validation() {
        assert!(WtpCurve::from_knots(&[(0.0, 10.0)]).is_err());
        assert!(WtpCurve::from_knots(&[(1.0, 10.0), (2.0, 0.0)]).is_err());
        assert!(WtpCurve::from_knots(&[(0.0, 10.0), (1.0, 1.0)]).is_err());
        assert!(WtpCurve::from_knots(&[(0.0, 10.0), (1.0, 10.0), (2.0, 0.0)]).is_err());
        assert!(WtpCurve::from_knots(&[(0.0, 10.0), (0.0, 5.0), (2.0, 0.0)]).is_err());
        let c = WtpCurve::strictify(&[(0.0, 10.0), (1.0, 10.0), (2.0, 0.0)]).unwrap();
        assert!(c.knots().next().unwrap().1 > 10.0);
    }

    #[test]
    fn cdf_quantile_density() {
        let c = WtpCurve::from_knots(&[(0.0, 100.0), (50.0, 80.0), (100.0, 0.0)]).unwrap();
        assert_eq!(c.cdf(0.0), 0.0);
        assert_eq!(c.cdf(100.0), 1.0);
        assert!((c.cdf(80.0) - 0.5).abs() < 1e-15);
        assert!((c.cdf(90.0) - 0.75).abs() < 1e-15);
        for u in [0.0, 0.1, 0.5, 0.6, 0.99, 1.0] {
            assert!((c.cdf(c.quantile(u)) - u).abs() < 1e-12);
        }
        assert!((c.density(40.0) - 50.0 / (100.0 * 80.0)).abs() < 1e-15);
        assert!((c.density(90.0) - 50.0 / (100.0 * 20.0)).abs() < 1e-15);
        assert_eq!(c.density(100.0), 0.0);
    }

    #[test]
    fn demand_supply_closed_forms() {
        let cfg = MarketConfig::default();
        let c = uniform();
        assert_eq!(demand(&cfg, &c, 280_000.0, 0.0), 0.0);
        assert_eq!(demand(&cfg, &c, 0.0, 0.0), 440_000.0);
        assert!((demand(&cfg, &c, 100_000.0, 40_000.0) - 220_000.0).abs() < 1e-9);
        assert_eq!(supply(&cfg, &c, 0.0, 0.0, 0.1).unwrap(), 0.0);
        assert!((supply(&cfg, &c, 150_000.0, 10_000.0, 0.1).unwrap() - 130_000.0).abs() < 1e-9);
        let spec = MarketConfig { speculator_share: 0.11, ..cfg };
        assert!((supply(&spec, &c, 5.0, 5.0, 0.11).unwrap() - 0.11 * 260_000.0).abs() < 1e-9);
        assert!(matches!(supply(&spec, &c, 5.0, 5.0, 0.1), Err(Error::Config(_))));
    }

    #[test]
    fn uniform_inversion() {
        let cfg = MarketConfig::default();
        let sol = invert_from_volume(&cfg, &uniform(), 0.11).unwrap();
        assert!((sol.v_seller - 30_800.0).abs() < 1e-6);
        assert!((sol.v_buyer - 261_800.0).abs() < 1e-6);
        assert!((sol.p - 146_300.0).abs() < 1e-6);
        assert!((sol.t - 115_500.0).abs() < 1e-6);
        let gross = 280_000.0 * 26_097.5;
        assert!((sol.gross_gains - gross).abs() < 1e-6 * gross);
        assert!((sol.tc_total - 6.6066e9).abs() < 1.0);
        assert!((sol.net_gains - (gross - 6.6066e9)).abs() < 1e-5 * gross);
    }

    #[test]
    fn frictionless_benchmark() {
        let cfg = MarketConfig::default();
        let (p, s) = solve_no_tc(&cfg, &uniform()).unwrap();
        assert!((p - 176_000.0).abs() < 1e-6);
        assert_eq!(s, 440_000.0 / 700_000.0);
        let sol = invert_from_volume(&cfg, &uniform(), s).unwrap();
        assert!(sol.t.abs() < 1e-6 && (sol.p - p).abs() < 1e-6);
        assert_eq!(sol.tc_share, 0.0);
        assert!(matches!(invert_from_volume(&cfg, &uniform(), 0.7), Err(Error::Infeasible { .. })));
        assert!(matches!(invert_from_volume(&cfg, &uniform(), 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn all_speculators_sell_at_zero() {
        let cfg = MarketConfig { speculator_share: 0.11, ..MarketConfig::default() };
        let sol = invert_from_volume(&cfg, &uniform(), 0.11).unwrap();
        assert_eq!(sol.v_seller, 0.0);
        assert!((sol.p - sol.t).abs() < 1e-9);
        assert!(comparative_statics(&cfg, &uniform(), 0.11).is_err());
    }

    #[test]
    fn uniform_comparative_statics() {
        let cs = comparative_statics(&MarketConfig::default(), &uniform(), 0.2).unwrap();
        assert!((cs.dt_ds + 0.5 * 280_000.0 * (260.0 / 440.0 + 1.0)).abs() < 1e-6);
        assert!((cs.dp_ds - 0.5 * 280_000.0 * (1.0 - 260.0 / 440.0)).abs() < 1e-6);
    }

    #[test]
    fn clearing_recovers_share() {
        let cfg = MarketConfig::default();
        let sol = invert_from_volume(&cfg, &uniform(), 0.3).unwrap();
        let (p, s) = clear_market(&cfg, &uniform(), sol.t).unwrap();
        assert!((p - sol.p).abs() < 1e-6);
        assert!((s - 0.3).abs() < 1e-12);
    }

    #[test]
    fn bounds_rows_flag_floor() {
        let rows = bounds_table(&MarketConfig::default(), &uniform(), &[0.11, 0.5], Some(150_000.0)).unwrap();
        assert_eq!(rows[0].meets_price_floor, Some(false));
        assert_eq!(rows[1].meets_price_floor, Some(true));
    }
}
