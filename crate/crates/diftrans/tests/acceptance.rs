//! Acceptance criteria, one line per criterion. Run with
//! `cargo test -p diftrans --test acceptance`.

// `check!` negates on purpose so a NaN fails.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

#[path = "../../core/tests/common/mod.rs"]
mod oracles;

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::{diftrans, s, small_market, two_cities, write_records, CONTROL, POST, PRE, TREATED};
use diftrans::parallel::Parallel;
use diftrans_core::baseline::{did_ols, DidObservation, Weighting};
use diftrans_core::equilibrium::{clear_market, comparative_statics, invert_from_volume, solve_no_tc, MarketConfig, WtpCurve};
use diftrans_core::estimators::{bandwidth_scan, composition_fit, select_dstar, PlaceboConfig, ScanInputs};
use diftrans_core::synth::{simulate, LotteryMarket, PriceMap};
use diftrans_core::transport::{ot_cost, strassen_certificate};
use diftrans_core::inference::{subsample_ci, Estimator, SampleSet, SubsampleConfig, SubsampleSize, VolumeEstimator};
use diftrans_core::{Bandwidth, PricePmf, Sequential};
use oracles::curves::{random_curve, random_market};
use oracles::linalg::solve_full_pivot;
use oracles::lp;
use oracles::simplex_grid::Instance;
use oracles::{dirichlet, half_l1, random_pmf, rng};
use rand::Rng;
use serde_json::Value;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;
type Criterion = (&'static str, Box<dyn FnOnce() -> Option<Check>>);

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(limit: Duration, started: Instant) -> Check {
    let took = started.elapsed();
    check!(took < limit, "took {took:.2?}, limit {limit:?}");
    Ok(format!("{took:.2?}"))
}

fn c1_worked_example() -> Check {
    let a = PricePmf::new(vec![1, 2], vec![0.75, 0.25], 8).unwrap();
    let b = PricePmf::new(vec![1, 2], vec![0.25, 0.75], 8).unwrap();
    let started = Instant::now();
    let fast = ot_cost(&a, &b, Bandwidth(0));
    let took = started.elapsed();
    let cert = strassen_certificate(&a, &b, Bandwidth(0)).unwrap().value;
    let (lp_value, _) = lp::transport(a.support(), a.mass(), b.support(), b.mass(), lp::indicator(0));
    check!(fast.to_bits() == 0.5f64.to_bits(), "fast path gave {fast}");
    check!(cert.to_bits() == 0.5f64.to_bits(), "certificate gave {cert}");
    check!(lp_value.to_bits() == 0.5f64.to_bits(), "LP oracle gave {lp_value}");
    check!(took < Duration::from_millis(1), "fast path took {took:?}");
    Ok(format!("OT_0 = 0.5 on all three paths, fast path {took:.2?}"))
}

fn c2_triangle() -> Check {
    let started = Instant::now();
    let mut r = rng(1001);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let [a, b, c] = [0, 1, 2].map(|_| {
            let k = r.random_range(1..=50);
            random_pmf(&mut r, k, 30_000)
        });
        for d in [0, 1, 500, 10_000] {
            let d = Bandwidth(d);
            let gap = ot_cost(&a, &b, d.doubled()) - ot_cost(&c, &b, d) - ot_cost(&a, &c, d);
            worst = worst.max(gap);
            check!(gap <= 1e-10, "violation {gap} at d = {}", d.get());
        }
    }
    let t = within(Duration::from_secs(30), started)?;
    Ok(format!("4000 checks, largest lhs - rhs {worst:.3e}, {t}"))
}

fn c3_oracle_equivalence() -> Check {
    let started = Instant::now();
    let mut r = rng(1002);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let (ka, kb) = (r.random_range(1..=6), r.random_range(1..=6));
        let a = random_pmf(&mut r, ka, 20);
        let b = random_pmf(&mut r, kb, 20);
        let d = [0, 1, 2, 5, 10][r.random_range(0..5)];
        let fast = ot_cost(&a, &b, Bandwidth(d));
        let (lp_value, _) = lp::transport(a.support(), a.mass(), b.support(), b.mass(), lp::indicator(d));
        let cert = strassen_certificate(&a, &b, Bandwidth(d)).unwrap().value;
        let gap = (fast - lp_value).abs().max((fast - cert).abs());
        worst = worst.max(gap);
        check!(gap <= 1e-10, "fast {fast}, LP {lp_value}, certificate {cert} at d = {d}");
    }
    let t = within(Duration::from_secs(60), started)?;
    Ok(format!("500 instances, largest gap {worst:.1e}, {t}"))
}

fn c4_total_variation() -> Check {
    let mut r = rng(1003);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let (ka, kb) = (r.random_range(1..=40), r.random_range(1..=40));
        let a = random_pmf(&mut r, ka, 200);
        let b = random_pmf(&mut r, kb, 200);
        let gap = (ot_cost(&a, &b, Bandwidth(0)) - half_l1(&a, &b)).abs();
        worst = worst.max(gap);
        check!(gap <= 1e-12, "gap {gap}");
    }
    Ok(format!("500 pairs, largest gap {worst:.1e}"))
}

fn c5_frictionless_share() -> Check {
    let mut r = rng(1004);
    for _ in 0..100 {
        let cfg = random_market(&mut r);
        let curve = random_curve(&mut r, cfg.market_size as f64);
        let (_, s) = solve_no_tc(&cfg, &curve).map_err(|e| e.to_string())?;
        let expected = (cfg.market_size - cfg.quota) as f64 / cfg.market_size as f64;
        check!((s - expected).abs() <= 1e-9, "s_notc {s} vs {expected}");
    }
    let (_, s) = solve_no_tc(&MarketConfig::default(), &random_curve(&mut r, 700_000.0)).unwrap();
    check!((s - 0.628_571_428_571_428_6).abs() <= 1e-9, "default market gives {s}");
    Ok(format!("100 curves; default market s_notc = {s:.6}"))
}

fn c6_roundtrip_and_statics() -> Check {
    let mut r = rng(1005);
    let (mut worst_rel, mut worst_fd, mut compared) = (0.0f64, 0.0f64, 0);
    let h = 1e-4;
    for _ in 0..100 {
        let cfg = random_market(&mut r);
        let curve = random_curve(&mut r, cfg.market_size as f64);
        let s_notc = cfg.max_trade_share();
        let levels: Vec<f64> = curve.knots().map(|(n, _)| 1.0 - n / curve.population()).collect();
        let ratio = cfg.quota as f64 / (cfg.market_size - cfg.quota) as f64;
        let straddles = |lo: f64, hi: f64| levels.iter().any(|&u| u > lo - 1e-12 && u < hi + 1e-12);
        for k in 1..=20 {
            let s = s_notc * k as f64 / 20.0;
            let sol = invert_from_volume(&cfg, &curve, s).map_err(|e| e.to_string())?;
            let (_, back) = clear_market(&cfg, &curve, sol.t).map_err(|e| e.to_string())?;
            let rel = (back - s).abs() / s;
            worst_rel = worst_rel.max(rel);
            check!(rel <= 1e-9, "roundtrip {s} -> {back}");
            if k == 20 {
                continue;
            }
            let cs = comparative_statics(&cfg, &curve, s).map_err(|e| e.to_string())?;
            check!(cs.dt_ds < 0.0, "dt/ds = {} at s = {s}", cs.dt_ds);
            if s + h > s_notc || straddles(s - h, s + h) || straddles(1.0 - (s + h) * ratio, 1.0 - (s - h) * ratio) {
                continue;
            }
            let up = invert_from_volume(&cfg, &curve, s + h).unwrap();
            let down = invert_from_volume(&cfg, &curve, s - h).unwrap();
            let dp = (up.p - down.p) / (2.0 * h);
            let dt = (up.t - down.t) / (2.0 * h);
            let scale = cs.dp_ds.abs().max(cs.dt_ds.abs());
            let err = ((dp - cs.dp_ds).abs() / scale).max((dt - cs.dt_ds).abs() / cs.dt_ds.abs());
            worst_fd = worst_fd.max(err);
            check!(err <= 1e-3, "finite differences ({dp}, {dt}) vs ({}, {})", cs.dp_ds, cs.dt_ds);
            compared += 1;
        }
    }
    check!(compared > 200, "only {compared} smooth stencils");
    Ok(format!("2000 roundtrips (worst rel {worst_rel:.1e}), {compared} derivative checks (worst rel {worst_fd:.1e})"))
}

fn c7_uniform_closed_forms() -> Check {
    let cfg = MarketConfig::default();
    let curve = WtpCurve::uniform(280_000.0, 700_000.0).unwrap();
    let sol = invert_from_volume(&cfg, &curve, 0.11).map_err(|e| e.to_string())?;
    for (name, got, want) in [("v_seller", sol.v_seller, 30_800.0), ("v_buyer", sol.v_buyer, 261_800.0), ("p", sol.p, 146_300.0), ("t", sol.t, 115_500.0)] {
        check!((got - want).abs() <= 1e-6, "{name} = {got}, expected {want}");
    }
    let (q, m, u) = (260_000.0, 440_000.0, 0.11 * 260_000.0);
    let quadratic: f64 = 280_000.0 * (u - u * u / (2.0 * m) - u * u / (2.0 * q));
    check!((sol.gross_gains - quadratic).abs() <= 1e-6 * quadratic, "gross {} vs {quadratic}", sol.gross_gains);
    check!((sol.gross_gains / 7.307e9 - 1.0).abs() < 1e-3, "gross {}", sol.gross_gains);
    check!((sol.net_gains / 7.01e8 - 1.0).abs() < 1e-3, "net {}", sol.net_gains);
    Ok(format!("(30800, 261800, 146300, 115500); gross {:.4e}, net {:.4e}", sol.gross_gains, sol.net_gains))
}

fn c8_synthetic_lower_bound() -> Check {
    let started = Instant::now();
    let market = LotteryMarket::standard();
    let grid: Vec<Bandwidth> = (0..=30).map(|k| Bandwidth(k * 1_000)).collect();
    let cfg = PlaceboConfig { n_sims: 500, seed: 8, ..Default::default() };
    let exec = Parallel::from_env().map_err(|e| e.to_string())?;
    let mut curves: Vec<Vec<f64>> = Vec::new();
    let mut notes = Vec::new();
    for sigma in [0.0, 0.1, 0.3] {
        let city = simulate(&market, &PriceMap::default(), sigma, 0, 2024).map_err(|e| e.to_string())?;
        let (pre, post) = (city.pre.to_pmf().unwrap(), city.post.to_pmf().unwrap());
        let scan = bandwidth_scan(&exec, ScanInputs { pre: &pre, post: &post, placebo_base: &pre, control: None }, &grid, &cfg).map_err(|e| e.to_string())?;
        for row in &scan.rows {
            check!(row.real_cost <= sigma + row.placebo.mean + 0.01, "sigma {sigma}: s({}) = {} above bound", row.d.get(), row.real_cost);
        }
        if sigma == 0.0 {
            let d = scan.select(0.0005, Default::default()).map_err(|e| e.to_string())?;
            let at = scan.rows.iter().find(|r| r.d == d).unwrap().real_cost;
            check!(at < 0.005, "null estimate {at} at selected d = {}", d.get());
            notes.push(format!("null estimate {at:.4} at d = {}", d.get()));
        }
        curves.push(scan.rows.iter().map(|r| r.real_cost).collect());
    }
    for k in 0..grid.len() {
        check!(curves[0][k] <= curves[1][k] && curves[1][k] <= curves[2][k], "not monotone in sigma at d = {}", grid[k].get());
    }
    let t = within(Duration::from_secs(300), started)?;
    notes.push(format!("s(0) = {:.4}/{:.4}/{:.4}", curves[0][0], curves[1][0], curves[2][0]));
    Ok(format!("{}, {t}", notes.join(", ")))
}

fn c9_dit_nulls() -> Check {
    let market = small_market();
    let grid: Vec<Bandwidth> = (0..=20).map(|k| Bandwidth(k * 1_000)).collect();
    let cfg = PlaceboConfig { n_sims: 200, seed: 9, ..Default::default() };
    let exec = Parallel::from_env().map_err(|e| e.to_string())?;

    let twin = simulate(&LotteryMarket::standard(), &PriceMap::default(), 0.2, 0, 90).unwrap();
    let (pre, post) = (twin.pre.to_pmf().unwrap(), twin.post.to_pmf().unwrap());
    let same = bandwidth_scan(&exec, ScanInputs { pre: &pre, post: &post, placebo_base: &pre, control: Some((&pre, &post)) }, &grid, &cfg).unwrap();
    check!(same.rows.iter().all(|r| r.dit.unwrap() <= 0.0), "identical pairs gave a positive difference");

    let sigma = 0.3;
    let mut found = Vec::new();
    for seed in [91, 92, 93] {
        let treated = simulate(&market, &PriceMap::default(), sigma, 4_000, seed).unwrap();
        let control = simulate(&market, &PriceMap::default(), 0.0, 4_000, seed + 100).unwrap();
        let [b_pre, b_post, c_pre, c_post] = [&treated.pre, &treated.post, &control.pre, &control.post].map(|c| c.to_pmf().unwrap());
        let scan = bandwidth_scan(&exec, ScanInputs { pre: &b_pre, post: &b_post, placebo_base: &b_pre, control: Some((&c_pre, &c_post)) }, &grid, &cfg).unwrap();
        let d_min = scan.select(0.0005, Default::default()).unwrap_or(*grid.last().unwrap());
        let (d_star, s_dit) = select_dstar(&scan, d_min).map_err(|e| e.to_string())?;
        check!((0.5 * sigma..=sigma + 0.01).contains(&s_dit), "seed {seed}: s_dit = {s_dit} at d* = {}", d_star.get());
        found.push(format!("{s_dit:.3}@{}", d_star.get()));
    }
    Ok(format!("twin pairs never positive; planted 0.3 gives {}", found.join(", ")))
}

fn c10_composition() -> Check {
    let mut r = rng(1010);
    let mut worst: f64 = 0.0;
    for phi in [[0.2, 0.3, 0.4], [0.1, 0.25, 0.45], [0.3, 0.35, 0.5]] {
        for _ in 0..2 {
            let p: Vec<[f64; 4]> = (0..3).map(|_| dirichlet(&mut r, 4).try_into().unwrap()).collect();
            let inst = Instance { phi: phi.to_vec(), p };
            let est = composition_fit(&inst.inputs()).map_err(|e| e.to_string())?;
            let grid = inst.grid_minimum();
            let gap = est.residual_ss - grid;
            worst = worst.max(gap.abs());
            check!(gap.abs() <= 1e-4, "fit {} vs grid {grid}", est.residual_ss);
        }
    }
    let p: Vec<[f64; 4]> = (0..2).map(|_| dirichlet(&mut r, 4).try_into().unwrap()).collect();
    let est = composition_fit(&Instance { phi: vec![1.0, 0.0], p: p.clone() }.inputs()).unwrap();
    let sep = (0..4).map(|i| (est.f_hat.mass()[i] - p[0][i]).abs().max((est.r_hat.mass()[i] - p[1][i]).abs())).fold(0.0, f64::max);
    check!(sep <= 1e-12, "separable corner off by {sep}");
    let est = composition_fit(&Instance { phi: vec![1.0, 1.0], p: p.clone() }.inputs()).unwrap();
    let mean_gap = (0..4).map(|i| (est.f_hat.mass()[i] - 0.5 * (p[0][i] + p[1][i])).abs()).fold(0.0, f64::max);
    check!(mean_gap <= 1e-12 && !est.r_identified, "all-first-time corner off by {mean_gap}");
    Ok(format!("6 instances within {worst:.1e} of the grid; corners within {:.1e}", sep.max(mean_gap)))
}

fn c11_did_identity() -> Check {
    let mut r = rng(1011);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let mut obs = Vec::new();
        for cell in 0..4 {
            for _ in 0..r.random_range(1..12) {
                obs.push(DidObservation {
                    treated: cell >= 2,
                    post: cell % 2 == 1,
                    price: r.random_range(20_000.0..400_000.0_f64).round(),
                    quantity: r.random_range(1..500),
                });
            }
        }
        let fit = did_ols(&obs, Weighting::Units).map_err(|e| e.to_string())?;
        let mean = |t: bool, p: bool| {
            let (mut w, mut wy) = (0.0, 0.0);
            for o in obs.iter().filter(|o| o.treated == t && o.post == p) {
                w += o.quantity as f64;
                wy += o.quantity as f64 * libm::log(o.price);
            }
            wy / w
        };
        let identity = (mean(true, true) - mean(true, false)) - (mean(false, true) - mean(false, false));
        check!(fit.alpha[3] == identity, "interaction {} vs cell means {identity}", fit.alpha[3]);

        let (mut xtx, mut xty) = ([[0.0; 4]; 4], [0.0; 4]);
        for o in &obs {
            let (t, p) = (o.treated as u8 as f64, o.post as u8 as f64);
            let x = [1.0, t, p, t * p];
            for i in 0..4 {
                for j in 0..4 {
                    xtx[i][j] += o.quantity as f64 * x[i] * x[j];
                }
                xty[i] += o.quantity as f64 * x[i] * o.price.ln();
            }
        }
        let beta = solve_full_pivot(xtx, xty);
        for k in 0..4 {
            let gap = (beta[k] - fit.alpha[k]).abs();
            worst = worst.max(gap);
            check!(gap <= 1e-10, "coefficient {k}: {} vs {}", fit.alpha[k], beta[k]);
        }
    }
    Ok(format!("200 datasets exact; normal equations within {worst:.1e}"))
}

fn c12_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = write_records(dir.path(), "two.csv", &two_cities(&small_market(), 0.2, 2_000, 12));
    let base = ["--data", s(&data), "--pre", PRE, "--post", POST];
    let runs: [(&str, Vec<&str>, &str); 3] = [
        ("scan", vec!["scan", "--city", TREATED, "--control", CONTROL, "--d-grid", "0:20000:1000", "--sims", "100", "--seed", "3"], "--scan-csv"),
        ("dit", vec!["dit", "--treated", TREATED, "--control", CONTROL, "--d-grid", "0:20000:1000", "--sims", "100", "--seed", "3", "--trend-pre", PRE, "--trend-post", PRE], "--curve-csv"),
        ("ci", vec!["ci", "--city", TREATED, "--control", CONTROL, "--estimator", "dit", "--d", "8000", "--draws", "200", "--seed", "3"], "--draws-csv"),
    ];
    let run = |args: &[&str], side: &Path, threads: Option<&str>| -> Result<(Vec<u8>, Vec<u8>), String> {
        let out = diftrans(args, threads);
        check!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        Ok((out.stdout, std::fs::read(side).map_err(|e| e.to_string())?))
    };
    let mut names = Vec::new();
    for (name, head, side_flag) in runs {
        let one = dir.path().join(format!("{name}-1.csv"));
        let many = dir.path().join(format!("{name}-n.csv"));
        let args = |side: &Path| -> Vec<String> { head.iter().chain(&base).map(|x| x.to_string()).chain([side_flag.to_string(), s(side).to_string()]).collect() };
        let (a1, a2) = (args(&one), args(&many));
        let single = run(&a1.iter().map(String::as_str).collect::<Vec<_>>(), &one, Some("1"))?;
        let multi = run(&a2.iter().map(String::as_str).collect::<Vec<_>>(), &many, None)?;
        check!(single.0 == multi.0, "{name}: JSON differs between 1 and all threads");
        check!(single.1 == multi.1, "{name}: CSV differs between 1 and all threads");
        names.push(name);
    }
    let threads = Parallel::from_env().map_err(|e| e.to_string())?.threads();

    // The binaries cap the pool at the core count, so also pin a wide pool
    // in process and compare it with the sequential executor.
    let wide = Parallel::new(4);
    let market = small_market();
    let b = simulate(&market, &PriceMap::default(), 0.2, 2_000, 12).unwrap();
    let c = simulate(&market, &PriceMap::default(), 0.0, 2_000, 1012).unwrap();
    let [bp, bq, cp, cq] = [&b.pre, &b.post, &c.pre, &c.post].map(|x| x.to_pmf().unwrap());
    let grid: Vec<Bandwidth> = (0..=20).map(|k| Bandwidth(k * 1_000)).collect();
    let cfg = PlaceboConfig { n_sims: 100, seed: 3, ..Default::default() };
    let inputs = ScanInputs { pre: &bp, post: &bq, placebo_base: &bp, control: Some((&cp, &cq)) };
    let scan_seq = bandwidth_scan(&Sequential, inputs, &grid, &cfg).unwrap();
    let scan_wide = bandwidth_scan(&wide, inputs, &grid, &cfg).unwrap();
    check!(format!("{scan_seq:?}") == format!("{scan_wide:?}"), "scan differs between sequential and 4 threads");
    let samples = SampleSet { pre: &b.pre, post: &b.post, control: Some((&c.pre, &c.post)) };
    let est = Estimator::Volume(VolumeEstimator::DiffInTransports(Bandwidth(8_000)));
    let sub = SubsampleConfig { n_draws: 200, size: SubsampleSize::Power(0.7), alpha: 0.05, seed: 3, paired: true };
    let ci_seq = subsample_ci(&Sequential, &samples, &est, &sub).unwrap();
    let ci_wide = subsample_ci(&wide, &samples, &est, &sub).unwrap();
    check!(format!("{ci_seq:?}") == format!("{ci_wide:?}"), "subsampling differs between sequential and 4 threads");
    Ok(format!("{} identical at 1 and {threads} threads; scan and subsampling identical sequential vs 4 threads", names.join(", ")))
}

/// Environment variable naming a user-supplied `n,v` file for the external
/// willingness-to-pay curve.
const EXTERNAL_WTP: &str = "DIFTRANS_EXTERNAL_WTP";

fn c13_external_curve() -> Option<Check> {
    let path = std::env::var(EXTERNAL_WTP).ok()?;
    Some((|| {
        let out = diftrans(&["equilibrium", "--wtp", &path, "--strictify", "--s", "0.62,0.49,0.37,0.27,0.11"], None);
        check!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let report: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
        let row = |k: usize| {
            let r = &report["rows"][k];
            (r["p"].as_f64().unwrap_or(f64::NAN), r["t"].as_f64().unwrap_or(f64::NAN))
        };
        let (p, t) = row(4);
        check!((104_000.0..=106_000.0).contains(&p) && (99_000.0..=101_000.0).contains(&t), "s = 0.11 gives p = {p}, t = {t}");
        let table = [(59.0, 0.0), (57.0, 21.0), (64.0, 42.0), (73.0, 59.0), (105.0, 100.0)];
        for (k, (tp, tt)) in table.iter().enumerate() {
            let (p, t) = row(k);
            check!((p / 1e3 - tp).abs() <= 1.0 && (t / 1e3 - tt).abs() <= 1.0, "row {k}: ({:.1}, {:.1}) vs ({tp}, {tt})", p / 1e3, t / 1e3);
        }
        Ok(format!("p = {p:.0}, t = {t:.0} at s = 0.11; five table rows within 1,000"))
    })())
}

fn main() {
    // Quiet the default hook; failures are reported on the criterion line.
    std::panic::set_hook(Box::new(|_| {}));
    let criteria: Vec<Criterion> = vec![
        ("1 worked example", Box::new(|| Some(c1_worked_example()))),
        ("2 triangle inequality", Box::new(|| Some(c2_triangle()))),
        ("3 oracle equivalence", Box::new(|| Some(c3_oracle_equivalence()))),
        ("4 total variation duality", Box::new(|| Some(c4_total_variation()))),
        ("5 frictionless share identity", Box::new(|| Some(c5_frictionless_share()))),
        ("6 inversion roundtrip and statics", Box::new(|| Some(c6_roundtrip_and_statics()))),
        ("7 uniform closed forms", Box::new(|| Some(c7_uniform_closed_forms()))),
        ("8 synthetic lower bound", Box::new(|| Some(c8_synthetic_lower_bound()))),
        ("9 difference-in-transports nulls", Box::new(|| Some(c9_dit_nulls()))),
        ("10 composition least squares", Box::new(|| Some(c10_composition()))),
        ("11 saturated DiD identity", Box::new(|| Some(c11_did_identity()))),
        ("12 thread-count determinism", Box::new(|| Some(c12_determinism()))),
        ("13 external curve reproduction", Box::new(c13_external_curve)),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = match catch_unwind(AssertUnwindSafe(run)) {
            Ok(Some(Ok(detail))) => Outcome::Pass(detail),
            Ok(Some(Err(why))) => Outcome::Fail(why),
            Ok(None) => Outcome::Skip(format!("{EXTERNAL_WTP} not set")),
            Err(panic) => Outcome::Fail(
                panic.downcast_ref::<String>().cloned().or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()),
            ),
        };
        match outcome {
            Outcome::Pass(d) => println!("[PASS] {name}: {d}"),
            Outcome::Skip(d) => println!("[SKIP] {name}: {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("[FAIL] {name}: {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
