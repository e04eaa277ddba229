//! Sales records and the empirical price distributions built from them.
//!
//! Prices stay at their exact integer RMB values. A [`PricePmf`] is the
//! normalised distribution of units sold over distinct prices together with the
//! number of units behind it; a [`PriceCounts`] keeps the raw unit counts, which
//! the resampling procedures need.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Tolerance on the total mass of a distribution.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    /// Calendar year.
    pub year: i32,
    /// Month, 1 to 12.
    pub month: u8,
}

impl YearMonth {
    /// Checked constructor.
    pub fn new(year: i32, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidRecord(format!("month {month} out of range")));
        }
        Ok(Self { year, month })
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// One row of registration data: units sold at a price in a city-month.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SalesRecord {
    /// City label.
    pub city: String,
    /// Calendar year.
    pub year: i32,
    /// Month, 1 to 12.
    pub month: u8,
    /// Price in RMB.
    pub price: u64,
    /// Units sold; zero is allowed.
    pub quantity: u64,
}

impl SalesRecord {
    /// Checks the month range. Prices and quantities are unsigned by type.
    pub fn validate(&self) -> Result<()> {
        if !(1..=12).contains(&self.month) {
            return Err(Error::InvalidRecord(format!("month out of range: {}", self.month)));
        }
        Ok(())
    }

    /// The record's month.
    pub fn period(&self) -> YearMonth {
        YearMonth { year: self.year, month: self.month }
    }
}

/// Inclusive range of months.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodRange {
    /// First month, inclusive.
    pub start: YearMonth,
    /// Last month, inclusive.
    pub end: YearMonth,
}

impl PeriodRange {
    /// Range from `start` to `end`; errors if `end` precedes `start`.
    pub fn new(start: YearMonth, end: YearMonth) -> Result<Self> {
        if end < start {
            return Err(Error::Config(format!("period range {start}:{end} is reversed")));
        }
        Ok(Self { start, end })
    }

    /// The twelve months of `year`.
    pub fn year(year: i32) -> Self {
        Self { start: YearMonth { year, month: 1 }, end: YearMonth { year, month: 12 } }
    }

    /// Whether `ym` lies in the range.
    pub fn contains(&self, ym: YearMonth) -> bool {
        self.start <= ym && ym <= self.end
    }
}

/// Selects months: the union of `include` ranges minus the `exclude` months.
///
/// An empty `include` list selects every month.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PeriodFilter {
    /// Ranges to keep.
    pub include: Vec<PeriodRange>,
    /// Individual months to drop.
    pub exclude: Vec<YearMonth>,
}

impl PeriodFilter {
    /// Filter that keeps every month.
    pub fn all() -> Self {
        Self::default()
    }

    /// Filter keeping a single range.
    pub fn range(range: PeriodRange) -> Self {
        Self { include: alloc::vec![range], exclude: Vec::new() }
    }

    /// Adds months to drop.
    pub fn excluding(mut self, months: impl IntoIterator<Item = YearMonth>) -> Self {
        self.exclude.extend(months);
        self
    }

    /// Whether the month passes the filter.
    pub fn contains(&self, ym: YearMonth) -> bool {
        let included = self.include.is_empty() || self.include.iter().any(|r| r.contains(ym));
        included && !self.exclude.contains(&ym)
    }
}

/// Unit counts per distinct price, support ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriceCounts {
    support: Vec<u64>,
    counts: Vec<u64>,
}

impl PriceCounts {
    /// Builds from `(price, count)` pairs in any order; duplicates are merged
    /// and zero counts dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, u64)>) -> Self {
        let mut acc: BTreeMap<u64, u64> = BTreeMap::new();
        for (price, q) in pairs {
            if q > 0 {
                *acc.entry(price).or_insert(0) += q;
            }
        }
        let (support, counts) = acc.into_iter().unzip();
        Self { support, counts }
    }

    /// Ascending prices with positive count.
    pub fn support(&self) -> &[u64] {
        &self.support
    }

    /// Units at each support point.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Total units.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Whether there are no units.
    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Normalised distribution; errors when there are no units.
    pub fn to_pmf(&self) -> Result<PricePmf> {
        let total = self.total();
        if total == 0 {
            return Err(Error::EmptyDistribution("no units".into()));
        }
        let t = total as f64;
        Ok(PricePmf {
            support: self.support.clone(),
            mass: self.counts.iter().map(|&c| c as f64 / t).collect(),
            n: total,
        })
    }
}

/// Probability mass function over strictly ascending integer prices, with the
/// number of units it was estimated from.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePmf {
    support: Vec<u64>,
    mass: Vec<f64>,
    n: u64,
}

impl PricePmf {
    /// Validated constructor.
    pub fn new(support: Vec<u64>, mass: Vec<f64>, n: u64) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        if support.len() != mass.len() {
            return Err(Error::InvalidPmf(format!(
                "support has {} points but mass has {}",
                support.len(),
                mass.len()
            )));
        }
        if n == 0 {
            return Err(Error::InvalidPmf("sample size must be positive".into()));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPmf("support must be strictly ascending".into()));
        }
        if let Some(m) = mass.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::InvalidPmf(format!("mass entry {m} is not a nonnegative number")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidPmf(format!("mass sums to {total}, not 1")));
        }
        Ok(Self { support, mass, n })
    }

    /// All mass at one price.
    pub fn point_mass(price: u64, n: u64) -> Self {
        Self { support: alloc::vec![price], mass: alloc::vec![1.0], n: n.max(1) }
    }

    /// Support points, ascending.
    pub fn support(&self) -> &[u64] {
        &self.support
    }

    /// Mass at each support point.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Units underlying the distribution.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Number of support points.
    pub fn len(&self) -> usize {
        self.support.len()
    }

    /// Always false for a validated distribution.
    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// `(price, mass)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.support.iter().copied().zip(self.mass.iter().copied())
    }

    /// Mass at `price`, zero off the support.
    pub fn mass_at(&self, price: u64) -> f64 {
        self.support.binary_search(&price).map_or(0.0, |i| self.mass[i])
    }

    /// Distance between the smallest and largest support points.
    pub fn span(&self) -> u64 {
        self.support[self.support.len() - 1] - self.support[0]
    }

    /// Same distribution with a different sample size.
    pub fn with_n(mut self, n: u64) -> Self {
        self.n = n.max(1);
        self
    }

    /// Mixture `w * self + (1 - w) * other` over the union support.
    pub fn mix(&self, w: f64, other: &PricePmf, n: u64) -> Result<PricePmf> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::Config(format!("mixture weight {w} outside [0, 1]")));
        }
        let mut acc: BTreeMap<u64, f64> = BTreeMap::new();
        for (x, m) in self.iter() {
            *acc.entry(x).or_insert(0.0) += w * m;
        }
        for (x, m) in other.iter() {
            *acc.entry(x).or_insert(0.0) += (1.0 - w) * m;
        }
        let (support, mass): (Vec<u64>, Vec<f64>) = acc.into_iter().unzip();
        PricePmf::new(support, mass, n)
    }
}

/// Sorted union of two supports.
pub fn union_support(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}

/// Aggregates units by price over records whose city satisfies `city` and
/// whose month passes `filter`.
pub fn count_prices<'a, I, P>(records: I, city: P, filter: &PeriodFilter) -> PriceCounts
where
    I: IntoIterator<Item = &'a SalesRecord>,
    P: Fn(&str) -> bool,
{
    PriceCounts::from_pairs(
        records
            .into_iter()
            .filter(|r| city(&r.city) && filter.contains(r.period()))
            .map(|r| (r.price, r.quantity)),
    )
}

/// Empirical price distribution of `city` over the months selected by `filter`.
///
/// Mass at each price is its unit count divided by the total; no binning is
/// applied. Errors when no matching record has a positive quantity.
pub fn build_pmf(records: &[SalesRecord], city: &str, filter: &PeriodFilter) -> Result<PricePmf> {
    build_pmf_for(records, &[city], filter)
}

/// [`build_pmf`] over the union of several cities.
pub fn build_pmf_for(records: &[SalesRecord], cities: &[&str], filter: &PeriodFilter) -> Result<PricePmf> {
    let counts = count_prices(records, |c| cities.contains(&c), filter);
    counts.to_pmf().map_err(|_| {
        Error::EmptyDistribution(format!("no units sold for {} in the selected periods", cities.join("+")))
    })
}
