//! Displacement attributable to a changing mix of first-time and returning
//! buyers.
//!
//! Monthly sales `p_t` are modelled as `φ_f,t · f + φ_r,t · r`, where
//! `φ_f,t = ρ L_t / n_t` is the share of purchases made with a newly issued
//! license and `f`, `r` are stable price distributions of first-time and
//! returning buyers. `f` and `r` are fitted by least squares over the product
//! of two probability simplices, using projected gradient with exact simplex
//! projection and backtracking.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::pmf::{union_support, PricePmf};
use crate::transport::{ot_cost, Bandwidth};

/// Stationarity tolerance on the gradient-mapping norm.
pub const KKT_TOLERANCE: f64 = 1e-8;

/// Iteration cap for the projected-gradient loop.
pub const MAX_ITERATIONS: usize = 100_000;

/// Default share of new-license purchases that are new cars.
pub const DEFAULT_RHO: f64 = 0.5;

/// One month of sales with the licenses issued in it.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionPeriod {
    /// Sales distribution of the month; its `n` is the month's unit total.
    pub pmf: PricePmf,
    /// Licenses issued in the month.
    pub licenses: u64,
}

/// Inputs to [`composition_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionInputs {
    /// Monthly observations.
    pub periods: Vec<CompositionPeriod>,
    /// Share of new-license purchases that are new cars, in (0, 1].
    pub rho: f64,
    /// `(θ_f, θ_r)` for the pre period.
    pub theta_pre: (f64, f64),
    /// `(θ_f, θ_r)` for the post period.
    pub theta_post: (f64, f64),
}

impl CompositionInputs {
    /// `φ_f,t = ρ L_t / n_t` per period, each checked to lie in [0, 1].
    pub fn first_time_shares(&self) -> Result<Vec<f64>> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::Config(format!("rho = {} must lie in (0, 1]", self.rho)));
        }
        for (name, (f, r)) in [("pre", self.theta_pre), ("post", self.theta_post)] {
            if f < 0.0 || r < 0.0 || (f + r - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("{name} weights ({f}, {r}) must be nonnegative and sum to 1")));
            }
        }
        self.periods
            .iter()
            .enumerate()
            .map(|(t, p)| {
                let phi = self.rho * p.licenses as f64 / p.pmf.n() as f64;
                if (0.0..=1.0).contains(&phi) {
                    Ok(phi)
                } else {
                    Err(Error::Config(format!("period {t}: first-time share {phi} outside [0, 1]")))
                }
            })
            .collect()
    }
}

/// Fitted first-time and returning distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionEstimate {
    /// First-time buyers' price distribution.
    pub f_hat: PricePmf,
    /// Returning buyers' price distribution.
    pub r_hat: PricePmf,
    /// Sum of squared residuals at the solution.
    pub residual_ss: f64,
    /// False when `f` does not enter the objective (all `φ_f,t = 0`).
    pub f_identified: bool,
    /// False when `r` does not enter the objective (all `φ_f,t = 1`).
    pub r_identified: bool,
    /// `φ_f,t` per period.
    pub first_time_shares: Vec<f64>,
    /// Projected-gradient iterations used.
    pub iterations: usize,
    /// Gradient-mapping norm at the solution.
    pub gradient_mapping_norm: f64,
    /// Pre-period `(θ_f, θ_r)`.
    pub theta_pre: (f64, f64),
    /// Post-period `(θ_f, θ_r)`.
    pub theta_post: (f64, f64),
}

/// One bandwidth of the correction table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionRow {
    /// Bandwidth.
    pub d: Bandwidth,
    /// `OT_d(f̂, r̂)`, the reported correction.
    pub ot_first_returning: f64,
    /// `OT_d(p̂_pre, p̂_post)` of the reconstructed mixtures.
    pub ot_pre_post: f64,
}

/// Correction table plus the reconstructed pre/post mixtures.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionCorrection {
    /// One row per bandwidth.
    pub rows: Vec<CorrectionRow>,
    /// `θ_f,pre f̂ + θ_r,pre r̂`.
    pub p_pre: PricePmf,
    /// `θ_f,post f̂ + θ_r,post r̂`.
    pub p_post: PricePmf,
}

/// Euclidean projection onto the probability simplex (sort-based, exact up to
/// rounding).
pub(crate) fn project_simplex(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Period masses aligned on a common support.
struct Problem {
    support: Vec<u64>,
    phi: Vec<f64>,
    rows: Vec<Vec<f64>>,
    n_total: u64,
}

impl Problem {
    fn new(inputs: &CompositionInputs) -> Result<Self> {
        if inputs.periods.is_empty() {
            return Err(Error::Config("composition fit needs at least one period".into()));
        }
        let phi = inputs.first_time_shares()?;
        let support = inputs.periods.iter().fold(Vec::new(), |acc, p| union_support(&acc, p.pmf.support()));
        let rows = inputs
            .periods
            .iter()
            .map(|p| support.iter().map(|&x| p.pmf.mass_at(x)).collect())
            .collect();
        let n_total = inputs.periods.iter().map(|p| p.pmf.n()).sum();
        Ok(Self { support, phi, rows, n_total })
    }

    fn objective(&self, f: &[f64], r: &[f64]) -> f64 {
        let mut ss = 0.0;
        for (row, &pf) in self.rows.iter().zip(&self.phi) {
            let pr = 1.0 - pf;
            for i in 0..row.len() {
                let e = pf * f[i] + pr * r[i] - row[i];
                ss += e * e;
            }
        }
        ss
    }

    fn gradient(&self, f: &[f64], r: &[f64], gf: &mut [f64], gr: &mut [f64]) {
        gf.fill(0.0);
        gr.fill(0.0);
        for (row, &pf) in self.rows.iter().zip(&self.phi) {
            let pr = 1.0 - pf;
            for i in 0..row.len() {
                let e = 2.0 * (pf * f[i] + pr * r[i] - row[i]);
                gf[i] += pf * e;
                gr[i] += pr * e;
            }
        }
    }

    /// `objective(x + Δ) - objective(x) - ∇·Δ`.
    fn curvature(&self, df: &[f64], dr: &[f64]) -> f64 {
        let mut q = 0.0;
        for &pf in &self.phi {
            let pr = 1.0 - pf;
            q += df.iter().zip(dr).map(|(a, b)| (pf * a + pr * b) * (pf * a + pr * b)).sum::<f64>();
        }
        q
    }

    /// Largest eigenvalue of the Hessian, `2 λ_max([[Σφ_f², Σφ_fφ_r], [Σφ_fφ_r, Σφ_r²]])`.
    fn lipschitz(&self) -> f64 {
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for &pf in &self.phi {
            let pr = 1.0 - pf;
            a += pf * pf;
            b += pf * pr;
            c += pr * pr;
        }
        let half_trace = 0.5 * (a + c);
        let disc = libm::sqrt(0.25 * (a - c) * (a - c) + b * b);
        2.0 * (half_trace + disc)
    }

    fn mean_row(&self) -> Vec<f64> {
        let t = self.rows.len() as f64;
        (0..self.support.len()).map(|i| self.rows.iter().map(|r| r[i]).sum::<f64>() / t).collect()
    }

    fn pmf(&self, mass: Vec<f64>) -> Result<PricePmf> {
        PricePmf::new(self.support.clone(), mass, self.n_total.max(1))
    }
}

fn projected_step(f: &[f64], r: &[f64], gf: &[f64], gr: &[f64], step: f64) -> (Vec<f64>, Vec<f64>) {
    let mut nf: Vec<f64> = f.iter().zip(gf).map(|(x, g)| x - step * g).collect();
    let mut nr: Vec<f64> = r.iter().zip(gr).map(|(x, g)| x - step * g).collect();
    project_simplex(&mut nf);
    project_simplex(&mut nr);
    (nf, nr)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Least-squares objective `Σ_t Σ_i (φ_f,t f_i + φ_r,t r_i - p_i,t)²`, with
/// `f` and `r` given on the union support of all periods.
pub fn composition_objective(inputs: &CompositionInputs, f: &[f64], r: &[f64]) -> Result<f64> {
    let problem = Problem::new(inputs)?;
    if f.len() != problem.support.len() || r.len() != problem.support.len() {
        return Err(Error::Config(format!("expected vectors of length {}", problem.support.len())));
    }
    Ok(problem.objective(f, r))
}

/// Fits `f̂` and `r̂` starting from the uniform distribution.
pub fn composition_fit(inputs: &CompositionInputs) -> Result<CompositionEstimate> {
    let k = Problem::new(inputs)?.support.len();
    let uniform = vec![1.0 / k as f64; k];
    composition_fit_from(inputs, &uniform, &uniform)
}

/// Fits `f̂` and `r̂` from a warm start given on the union support.
///
/// If every `φ_f,t` equals 1 (or 0) the other distribution drops out of the
/// objective; it is returned as the mean monthly distribution and flagged as
/// unidentified. Any other constant `φ_f,t` is not identified and is an error.
pub fn composition_fit_from(inputs: &CompositionInputs, f0: &[f64], r0: &[f64]) -> Result<CompositionEstimate> {
    let problem = Problem::new(inputs)?;
    let k = problem.support.len();
    if f0.len() != k || r0.len() != k {
        return Err(Error::Config(format!("warm start must have length {k}")));
    }
    let (lo, hi) = problem.phi.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    let estimate = |f: Vec<f64>, r: Vec<f64>, f_id, r_id, iterations, norm| -> Result<CompositionEstimate> {
        Ok(CompositionEstimate {
            residual_ss: problem.objective(&f, &r),
            f_hat: problem.pmf(f)?,
            r_hat: problem.pmf(r)?,
            f_identified: f_id,
            r_identified: r_id,
            first_time_shares: problem.phi.clone(),
            iterations,
            gradient_mapping_norm: norm,
            theta_pre: inputs.theta_pre,
            theta_post: inputs.theta_post,
        })
    };
    if hi - lo <= 1e-12 {
        let mean = problem.mean_row();
        return if lo == 1.0 {
            estimate(mean.clone(), mean, true, false, 0, 0.0)
        } else if hi == 0.0 {
            estimate(mean.clone(), mean, false, true, 0, 0.0)
        } else {
            Err(Error::NotIdentified(format!(
                "first-time share is {lo} in every period; at least two distinct shares are needed"
            )))
        };
    }

    let mut f = f0.to_vec();
    let mut r = r0.to_vec();
    project_simplex(&mut f);
    project_simplex(&mut r);
    let lipschitz = problem.lipschitz();
    let mut step = 1.0 / lipschitz;
    let mut gf = vec![0.0; k];
    let mut gr = vec![0.0; k];
    let mut norm = f64::INFINITY;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        problem.gradient(&f, &r, &mut gf, &mut gr);
        let (pf, pr) = projected_step(&f, &r, &gf, &gr, 1.0 / lipschitz);
        norm = lipschitz * libm::sqrt(dist2(&f, &pf) + dist2(&r, &pr));
        if norm < KKT_TOLERANCE {
            break;
        }
        step *= 2.0;
        let (nf, nr) = loop {
            let (nf, nr) = projected_step(&f, &r, &gf, &gr, step);
            // The objective is quadratic, so the backtracking test compares
            // the exact second-order term with the proximal term and involves
            // no cancellation near the optimum.
            let df: Vec<f64> = nf.iter().zip(&f).map(|(a, b)| a - b).collect();
            let dr: Vec<f64> = nr.iter().zip(&r).map(|(a, b)| a - b).collect();
            let quad = (dist2(&nf, &f) + dist2(&nr, &r)) / (2.0 * step);
            if problem.curvature(&df, &dr) <= quad || step <= 1.0 / lipschitz {
                break (nf, nr);
            }
            step = (step * 0.5).max(1.0 / lipschitz);
        };
        f = nf;
        r = nr;
        iterations += 1;
    }
    estimate(f, r, true, true, iterations, norm)
}

/// `OT_d(f̂, r̂)` and `OT_d(p̂_pre, p̂_post)` at every bandwidth of `grid`.
pub fn composition_correction(est: &CompositionEstimate, grid: &[Bandwidth]) -> Result<CompositionCorrection> {
    let n = est.f_hat.n();
    let p_pre = est.f_hat.mix(est.theta_pre.0, &est.r_hat, n)?;
    let p_post = est.f_hat.mix(est.theta_post.0, &est.r_hat, n)?;
    let rows = grid
        .iter()
        .map(|&d| CorrectionRow { d, ot_first_returning: ot_cost(&est.f_hat, &est.r_hat, d), ot_pre_post: ot_cost(&p_pre, &p_post, d) })
        .collect();
    Ok(CompositionCorrection { rows, p_pre, p_post })
}
