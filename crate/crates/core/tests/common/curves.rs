use diftrans_core::equilibrium::{MarketConfig, WtpCurve};
use rand::Rng;

/// Piecewise-linear curve with 2 to 8 knots, strictly decreasing to zero.
pub fn random_curve<R: Rng>(r: &mut R, population: f64) -> WtpCurve {
    let k = r.random_range(2..=8);
    let mut cuts: Vec<f64> = (0..k - 2).map(|_| r.random_range(0.02..0.98)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    let mut n = vec![0.0];
    n.extend(cuts.iter().map(|c| c * population));
    n.push(population);
    let mut v: Vec<f64> = (0..n.len()).map(|_| r.random_range(1_000.0..400_000.0)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    for i in 1..v.len() {
        if v[i] >= v[i - 1] {
            v[i] = v[i - 1] * 0.9;
        }
    }
    *v.last_mut().unwrap() = 0.0;
    WtpCurve::from_knots(&n.into_iter().zip(v).collect::<Vec<_>>()).unwrap()
}

pub fn random_market<R: Rng>(r: &mut R) -> MarketConfig {
    if r.random_bool(0.5) {
        MarketConfig::default()
    } else {
        let n = r.random_range(10_000..1_000_000u64);
        MarketConfig { market_size: n, quota: r.random_range(n / 20..n * 19 / 20), speculator_share: 0.0 }
    }
}
