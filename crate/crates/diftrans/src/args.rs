//! Value grammars for the command line. Each parsed value keeps a canonical
//! spelling, which is what the run manifest records.

use std::fmt;

use diftrans_core::estimators::SelectionRule;
use diftrans_core::inference::SubsampleSize;
use diftrans_core::{Bandwidth, PeriodFilter, PeriodRange, YearMonth};
use serde::{Serialize, Serializer};

fn year_month(s: &str) -> Result<YearMonth, String> {
    let (y, m) = s.trim().split_once('-').ok_or_else(|| format!("expected YYYY-MM, got {s:?}"))?;
    let year: i32 = y.parse().map_err(|_| format!("bad year in {s:?}"))?;
    let month: u8 = m.parse().map_err(|_| format!("bad month in {s:?}"))?;
    YearMonth::new(year, month).map_err(|e| e.to_string())
}

macro_rules! canonical_serialize {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }
    };
}

/// `2010-01:2010-12`, a single month `2010-06`, or a whole year `2010`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Period(pub PeriodRange);

impl Period {
    pub fn filter(&self, exclude: &Months) -> PeriodFilter {
        PeriodFilter::range(self.0).excluding(exclude.0.iter().copied())
    }
}

pub fn parse_period(s: &str) -> Result<Period, String> {
    let s = s.trim();
    let range = if let Some((a, b)) = s.split_once(':') {
        PeriodRange::new(year_month(a)?, year_month(b)?).map_err(|e| e.to_string())?
    } else if s.contains('-') {
        let ym = year_month(s)?;
        PeriodRange::new(ym, ym).map_err(|e| e.to_string())?
    } else {
        PeriodRange::year(s.parse().map_err(|_| format!("expected YYYY-MM:YYYY-MM, YYYY-MM or YYYY, got {s:?}"))?)
    };
    Ok(Period(range))
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.0.start, self.0.end)
    }
}
canonical_serialize!(Period);

/// Comma-separated months, possibly empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Months(pub Vec<YearMonth>);

pub fn parse_months(s: &str) -> Result<Months, String> {
    let mut months = s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(year_month).collect::<Result<Vec<_>, _>>()?;
    months.sort();
    months.dedup();
    Ok(Months(months))
}

impl fmt::Display for Months {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|m| m.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}
canonical_serialize!(Months);

/// `lo:hi:step`, inclusive of `hi` when it falls on the lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub lo: u64,
    pub hi: u64,
    pub step: u64,
}

impl Grid {
    pub fn points(&self) -> Vec<Bandwidth> {
        (self.lo..=self.hi).step_by(self.step as usize).map(Bandwidth).collect()
    }
}

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let [lo, hi, step] = parts[..] else {
        return Err(format!("expected lo:hi:step, got {s:?}"));
    };
    let num = |x: &str| x.parse::<u64>().map_err(|_| format!("bad grid value {x:?}"));
    let grid = Grid { lo: num(lo)?, hi: num(hi)?, step: num(step)? };
    if grid.step == 0 || grid.lo > grid.hi {
        return Err(format!("grid {s:?} needs lo <= hi and step > 0"));
    }
    if (grid.hi - grid.lo) / grid.step >= 1_000_000 {
        return Err(format!("grid {s:?} has too many points"));
    }
    Ok(grid)
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.step)
    }
}
canonical_serialize!(Grid);

/// `mean` or `quantile:LEVEL`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rule(pub SelectionRule);

pub fn parse_rule(s: &str) -> Result<Rule, String> {
    match s.trim().split_once(':') {
        None if s.trim() == "mean" => Ok(Rule(SelectionRule::Mean)),
        Some(("quantile", level)) => {
            let level: f64 = level.parse().map_err(|_| format!("bad quantile level {level:?}"))?;
            Ok(Rule(SelectionRule::Quantile(level)))
        }
        _ => Err(format!("expected mean or quantile:LEVEL, got {s:?}")),
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            SelectionRule::Mean => f.write_str("mean"),
            SelectionRule::Quantile(q) => write!(f, "quantile:{q}"),
        }
    }
}
canonical_serialize!(Rule);

/// `power:EXP` (b = floor(n^EXP)), `fraction:F` or `fixed:B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subsample(pub SubsampleSize);

pub fn parse_subsample(s: &str) -> Result<Subsample, String> {
    let (kind, value) = s.trim().split_once(':').ok_or_else(|| format!("expected power:EXP, fraction:F or fixed:B, got {s:?}"))?;
    let real = || value.parse::<f64>().map_err(|_| format!("bad number {value:?}"));
    Ok(Subsample(match kind {
        "power" => SubsampleSize::Power(real()?),
        "fraction" => SubsampleSize::Fraction(real()?),
        "fixed" => SubsampleSize::Fixed(value.parse().map_err(|_| format!("bad size {value:?}"))?),
        _ => return Err(format!("unknown subsample rule {kind:?}")),
    }))
}

impl fmt::Display for Subsample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            SubsampleSize::Power(e) => write!(f, "power:{e}"),
            SubsampleSize::Fraction(x) => write!(f, "fraction:{x}"),
            SubsampleSize::Fixed(b) => write!(f, "fixed:{b}"),
        }
    }
}
canonical_serialize!(Subsample);

/// A trade share, or `notc` for the frictionless share of the configured market.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Share {
    Value(f64),
    Frictionless,
}

pub fn parse_share(s: &str) -> Result<Share, String> {
    match s.trim() {
        "notc" => Ok(Share::Frictionless),
        x => x.parse().map(Share::Value).map_err(|_| format!("expected a share or `notc`, got {x:?}")),
    }
}

impl fmt::Display for Share {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Share::Value(x) => write!(f, "{x}"),
            Share::Frictionless => f.write_str("notc"),
        }
    }
}
canonical_serialize!(Share);
