#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use diftrans_core::equilibrium::WtpCurve;
use diftrans_core::synth::{simulate, LotteryMarket, PriceMap};
use diftrans_core::{SalesRecord, YearMonth};
use serde_json::Value;

pub const TREATED: &str = "beijing";
pub const CONTROL: &str = "tianjin";
pub const PRE: &str = "2010-06";
pub const POST: &str = "2011-06";

pub fn small_market() -> LotteryMarket {
    LotteryMarket { buyers: 5_000, quota: 2_000, curve: WtpCurve::uniform(280_000.0, 5_000.0).unwrap() }
}

/// Treated city with `sigma` planted trades, control city without, both with
/// the same post-period price shift.
pub fn two_cities(market: &LotteryMarket, sigma: f64, shift: u64, seed: u64) -> Vec<SalesRecord> {
    let (pre, post) = (YearMonth::new(2010, 6).unwrap(), YearMonth::new(2011, 6).unwrap());
    let treated = simulate(market, &PriceMap::default(), sigma, shift, seed).unwrap();
    let control = simulate(market, &PriceMap::default(), 0.0, shift, seed + 1_000).unwrap();
    let mut records = treated.to_records(TREATED, pre, post);
    records.extend(control.to_records(CONTROL, pre, post));
    records
}

pub fn write_records(dir: &Path, name: &str, records: &[SalesRecord]) -> PathBuf {
    let path = dir.join(name);
    diftrans::io::write_records(std::fs::File::create(&path).unwrap(), records).unwrap();
    path
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

pub fn diftrans(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_diftrans"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("DIFTRANS_THREADS", t),
        None => cmd.env_remove("DIFTRANS_THREADS"),
    };
    cmd.output().expect("binary runs")
}

/// Runs a command that must succeed; returns its stdout report, or null when
/// the report went to `--out`.
pub fn ok(args: &[&str]) -> Value {
    let out = diftrans(args, None);
    assert!(out.status.success(), "diftrans {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    if out.stdout.is_empty() {
        return Value::Null;
    }
    serde_json::from_slice(&out.stdout).expect("JSON report on stdout")
}

pub fn fails(args: &[&str]) -> String {
    let out = diftrans(args, None);
    assert!(!out.status.success(), "diftrans {args:?} should fail");
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
