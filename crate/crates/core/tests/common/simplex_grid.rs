//! Grid-search oracle for the two-block composition least squares.

use diftrans_core::estimators::{CompositionInputs, CompositionPeriod};
use diftrans_core::PricePmf;

pub const SUPPORT: [u64; 4] = [100, 200, 300, 400];

/// Closest point of the simplex to `g`, by trying every active set.
pub fn project_by_enumeration(g: &[f64; 4]) -> [f64; 4] {
    let mut best: Option<(f64, [f64; 4])> = None;
    for mask in 1u32..16 {
        let k = mask.count_ones() as f64;
        let sum: f64 = (0..4).filter(|i| mask >> i & 1 == 1).map(|i| g[i]).sum();
        let shift = (1.0 - sum) / k;
        let mut x = [0.0; 4];
        let mut feasible = true;
        for i in 0..4 {
            if mask >> i & 1 == 1 {
                x[i] = g[i] + shift;
                feasible &= x[i] >= -1e-15;
            }
        }
        if feasible {
            let dist: f64 = (0..4).map(|i| (x[i] - g[i]).powi(2)).sum();
            if best.is_none_or(|(b, _)| dist < b) {
                best = Some((dist, x.map(|v| v.max(0.0))));
            }
        }
    }
    best.unwrap().1
}

pub struct Instance {
    pub phi: Vec<f64>,
    pub p: Vec<[f64; 4]>,
}

impl Instance {
    pub fn objective(&self, f: &[f64; 4], r: &[f64; 4]) -> f64 {
        let mut ss = 0.0;
        for (phi, p) in self.phi.iter().zip(&self.p) {
            for i in 0..4 {
                ss += (phi * f[i] + (1.0 - phi) * r[i] - p[i]).powi(2);
            }
        }
        ss
    }

    /// Exact minimiser over the second block with the first fixed.
    pub fn best_other(&self, fixed: &[f64; 4], fixed_is_f: bool) -> [f64; 4] {
        let w = |phi: f64| if fixed_is_f { (phi, 1.0 - phi) } else { (1.0 - phi, phi) };
        let c: f64 = self.phi.iter().map(|&p| w(p).1.powi(2)).sum();
        let mut g = [0.0; 4];
        for (&phi, p) in self.phi.iter().zip(&self.p) {
            let (wf, wo) = w(phi);
            for i in 0..4 {
                g[i] += wo * (p[i] - wf * fixed[i]) / c;
            }
        }
        project_by_enumeration(&g)
    }

    pub fn grid_minimum(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..=100 {
            for j in 0..=(100 - i) {
                for k in 0..=(100 - i - j) {
                    let x = [i as f64 / 100.0, j as f64 / 100.0, k as f64 / 100.0, (100 - i - j - k) as f64 / 100.0];
                    let r = self.best_other(&x, true);
                    best = best.min(self.objective(&x, &r));
                    let f = self.best_other(&x, false);
                    best = best.min(self.objective(&f, &x));
                }
            }
        }
        best
    }

    pub fn inputs(&self) -> CompositionInputs {
        CompositionInputs {
            periods: self
                .phi
                .iter()
                .zip(&self.p)
                .map(|(&phi, p)| CompositionPeriod {
                    pmf: PricePmf::new(SUPPORT.to_vec(), p.to_vec(), 1000).unwrap(),
                    licenses: (phi * 1000.0).round() as u64,
                })
                .collect(),
            rho: 1.0,
            theta_pre: (0.3, 0.7),
            theta_post: (0.6, 0.4),
        }
    }
}
