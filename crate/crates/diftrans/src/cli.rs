//! Subcommands. Each one writes a JSON report (stdout unless `--out` is given)
//! that embeds its run manifest, plus optional CSV side files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use diftrans_core::baseline::{did_observations, did_ols, Weighting};
use diftrans_core::equilibrium::{bounds_table, comparative_statics, solve_no_tc, MarketConfig, MarketSolution, WtpCurve, DEFAULT_MARKET_SIZE, DEFAULT_QUOTA};
use diftrans_core::estimators::{
    bandwidth_scan, d_floor, displacement_floor, equal_displacement_curves, select_dstar, BandwidthScan, PlaceboConfig, ScanInputs,
    DEFAULT_PLACEBO_THRESHOLD,
};
use diftrans_core::inference::{subsample_ci, Estimator, MarketField, SampleSet, SubsampleConfig, VolumeEstimator};
use diftrans_core::pmf::{build_pmf, count_prices};
use diftrans_core::transport::{ot_cost, solve_ot, solve_ot_regularized, tie_break_within_breakpoint};
use diftrans_core::{Bandwidth, PeriodFilter, PricePmf, SalesRecord};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{self, Grid, Months, Period, Rule, Share, Subsample};
use crate::io::{self, Schema, SCAN_QUANTILES};
use crate::manifest::RunManifest;
use crate::parallel::Parallel;

#[derive(Debug, Parser)]
#[command(name = "diftrans", version, about = "Lower bounds on unobserved license trading from price distributions", long_about = None)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a sales CSV and summarise it by city.
    Ingest(IngestArgs),
    /// Thresholded transport cost between two periods of one city.
    Transport(TransportArgs),
    /// Real and placebo transport costs over a bandwidth grid.
    Scan(ScanArgs),
    /// Difference in transports with a data-driven bandwidth floor.
    Dit(DitArgs),
    /// Transaction prices and costs implied by trade shares.
    Equilibrium(EquilibriumArgs),
    /// Difference-in-differences regression on log prices.
    Did(DidArgs),
    /// Subsampling confidence interval for a trade-share estimator.
    Ci(CiArgs),
    /// Combine earlier reports into one bundle.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct DataArgs {
    /// Sales CSV with columns city,year,month,price,quantity.
    #[arg(long)]
    pub data: PathBuf,
    /// Header overrides, e.g. `city=City,price=Price`.
    #[arg(long, default_value = "")]
    pub columns: String,
    /// Months dropped from every window, e.g. `2010-12,2011-01`.
    #[arg(long, value_parser = args::parse_months, default_value = "")]
    pub exclude: Months,
}

#[derive(Debug, Args, Serialize)]
pub struct Window {
    /// Pre-period, `YYYY-MM:YYYY-MM`, `YYYY-MM` or `YYYY`.
    #[arg(long, value_parser = args::parse_period)]
    pub pre: Period,
    /// Post-period, same grammar as `--pre`.
    #[arg(long, value_parser = args::parse_period)]
    pub post: Period,
}

#[derive(Debug, Args, Serialize)]
pub struct PlaceboArgs {
    /// Bandwidth grid `lo:hi:step` in RMB.
    #[arg(long, value_parser = args::parse_grid)]
    pub d_grid: Grid,
    /// Placebo replicate pairs per bandwidth.
    #[arg(long, default_value_t = 500)]
    pub sims: usize,
    /// Root seed for every random stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rule-of-thumb cutoff on the placebo statistic.
    #[arg(long, default_value_t = DEFAULT_PLACEBO_THRESHOLD)]
    pub threshold: f64,
    /// Placebo statistic compared with the cutoff: `mean` or `quantile:LEVEL`.
    #[arg(long, value_parser = args::parse_rule, default_value = "mean")]
    pub rule: Rule,
    /// Period whose distribution is resampled for the placebo.
    #[arg(long, value_enum, default_value_t = PlaceboBase::Pre)]
    pub placebo_base: PlaceboBase,
}

impl PlaceboArgs {
    fn config(&self) -> PlaceboConfig {
        PlaceboConfig { n_sims: self.sims, seed: self.seed, quantiles: SCAN_QUANTILES.to_vec() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlaceboBase {
    Pre,
    Post,
}

#[derive(Debug, Args, Serialize)]
pub struct MarketArgs {
    /// Number of potential buyers N.
    #[arg(long, default_value_t = DEFAULT_MARKET_SIZE)]
    pub market_size: u64,
    /// Licenses issued q.
    #[arg(long, default_value_t = DEFAULT_QUOTA)]
    pub quota: u64,
    /// Share of the quota won by speculators z.
    #[arg(long, default_value_t = 0.0)]
    pub speculators: f64,
}

impl MarketArgs {
    fn config(&self) -> MarketConfig {
        MarketConfig { market_size: self.market_size, quota: self.quota, speculator_share: self.speculators }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Restrict the summary to months in this period.
    #[arg(long, value_parser = args::parse_period)]
    pub period: Option<Period>,
    /// Write `price,units,mass` for this city.
    #[arg(long, requires = "pmf_csv")]
    pub city: Option<String>,
    #[arg(long, requires = "city")]
    #[serde(skip)]
    pub pmf_csv: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TransportArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub city: String,
    #[command(flatten)]
    pub window: Window,
    /// Cost threshold in RMB.
    #[arg(long)]
    pub d: u64,
    /// Tie-break weight on distance moved for the plan (0 keeps the sweep plan).
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Write the plan as `i,j,x_i,x_j,mass`.
    #[arg(long)]
    #[serde(skip)]
    pub plan_csv: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub city: String,
    /// Control city; adds the difference-in-transports column.
    #[arg(long)]
    pub control: Option<String>,
    #[command(flatten)]
    pub window: Window,
    #[command(flatten)]
    pub placebo: PlaceboArgs,
    /// Write the scan as CSV.
    #[arg(long)]
    #[serde(skip)]
    pub scan_csv: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DitArgs {
    /// Sales CSV; not needed with `--from-scan`.
    #[arg(long, required_unless_present = "from_scan")]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "")]
    pub columns: String,
    #[arg(long, value_parser = args::parse_months, default_value = "")]
    pub exclude: Months,
    #[arg(long, required_unless_present = "from_scan")]
    pub treated: Option<String>,
    #[arg(long, required_unless_present = "from_scan")]
    pub control: Option<String>,
    #[arg(long, value_parser = args::parse_period, required_unless_present = "from_scan")]
    pub pre: Option<Period>,
    #[arg(long, value_parser = args::parse_period, required_unless_present = "from_scan")]
    pub post: Option<Period>,
    /// Bandwidth grid `lo:hi:step` in RMB.
    #[arg(long, value_parser = args::parse_grid, required_unless_present = "from_scan")]
    pub d_grid: Option<Grid>,
    #[arg(long, default_value_t = 500)]
    pub sims: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_PLACEBO_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, value_parser = args::parse_rule, default_value = "mean")]
    pub rule: Rule,
    #[arg(long, value_enum, default_value_t = PlaceboBase::Pre)]
    pub placebo_base: PlaceboBase,
    /// Diagnostic pre-period for the equal-displacement floor.
    #[arg(long, value_parser = args::parse_period, requires = "trend_post")]
    pub trend_pre: Option<Period>,
    /// Diagnostic post-period for the equal-displacement floor.
    #[arg(long, value_parser = args::parse_period, requires = "trend_pre")]
    pub trend_post: Option<Period>,
    /// Largest displacement gap treated as equal.
    #[arg(long, default_value_t = 0.005)]
    pub tau: f64,
    /// Use this floor instead of deriving one.
    #[arg(long)]
    pub d_min: Option<u64>,
    /// Select from an existing scan CSV (needs `--d-min`).
    #[arg(long, requires = "d_min", conflicts_with = "data")]
    pub from_scan: Option<PathBuf>,
    /// Write the scan, including the `dit` column, as CSV.
    #[arg(long)]
    #[serde(skip)]
    pub curve_csv: Option<PathBuf>,
    /// Write the equal-displacement curves as CSV.
    #[arg(long)]
    #[serde(skip)]
    pub trends_csv: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EquilibriumArgs {
    /// Willingness-to-pay knots, CSV with header `n,v`.
    #[arg(long)]
    pub wtp: PathBuf,
    /// Lift tied knot values instead of rejecting them.
    #[arg(long)]
    pub strictify: bool,
    #[command(flatten)]
    pub market: MarketArgs,
    /// Trade shares of the quota, comma-separated; `notc` is the frictionless share.
    #[arg(long, value_delimiter = ',', value_parser = args::parse_share, required = true)]
    pub s: Vec<Share>,
    /// Lower bound on the transaction price, in RMB.
    #[arg(long)]
    pub price_floor: Option<f64>,
    /// Write the table (RMB 1,000 and RMB billion) as CSV.
    #[arg(long)]
    #[serde(skip)]
    pub table_csv: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingArg {
    Units,
    Rows,
}

#[derive(Debug, Args, Serialize)]
pub struct DidArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub treated: String,
    /// Control cities, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub controls: Vec<String>,
    #[command(flatten)]
    pub window: Window,
    #[arg(long, value_enum, default_value_t = WeightingArg::Units)]
    pub weighting: WeightingArg,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorArg {
    BeforeAfter,
    Dit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldArg {
    Share,
    Price,
    Cost,
    GrossGains,
    TcTotal,
    NetGains,
    TcShare,
}

#[derive(Debug, Args, Serialize)]
pub struct CiArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub city: String,
    /// Control city, required by `--estimator dit`.
    #[arg(long)]
    pub control: Option<String>,
    #[command(flatten)]
    pub window: Window,
    #[arg(long, value_enum, default_value_t = EstimatorArg::BeforeAfter)]
    pub estimator: EstimatorArg,
    /// Cost threshold in RMB.
    #[arg(long)]
    pub d: u64,
    /// Quantity reported: the trade share or a field of the implied equilibrium.
    #[arg(long, value_enum, default_value_t = FieldArg::Share)]
    pub field: FieldArg,
    /// Willingness-to-pay knots, needed for equilibrium fields.
    #[arg(long)]
    pub wtp: Option<PathBuf>,
    #[arg(long)]
    pub strictify: bool,
    #[command(flatten)]
    pub market: MarketArgs,
    #[arg(long, default_value_t = 200)]
    pub draws: usize,
    /// Subsample size: `power:EXP`, `fraction:F` or `fixed:B`.
    #[arg(long, value_parser = args::parse_subsample, default_value = "power:0.7")]
    pub subsample: Subsample,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Reuse the treated draws' random streams for the control city.
    #[arg(long)]
    pub paired: bool,
    /// Write the draws as `draw_index,value`.
    #[arg(long)]
    #[serde(skip)]
    pub draws_csv: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    pub scan: Option<PathBuf>,
    #[arg(long)]
    pub dit: Option<PathBuf>,
    #[arg(long)]
    pub equilibrium: Option<PathBuf>,
    #[arg(long)]
    pub did: Option<PathBuf>,
    /// Interval reports; repeat for several.
    #[arg(long)]
    pub ci: Vec<PathBuf>,
    /// Also render the bundle as Markdown.
    #[arg(long)]
    #[serde(skip)]
    pub markdown: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Transport(a) => transport(a),
        Command::Scan(a) => scan(a),
        Command::Dit(a) => dit(a),
        Command::Equilibrium(a) => equilibrium(a),
        Command::Did(a) => did(a),
        Command::Ci(a) => ci(a),
        Command::Report(a) => report(a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn emit_json(out: Option<&Path>, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load_records(path: &Path, columns: &str, manifest: &mut RunManifest) -> Result<Vec<SalesRecord>> {
    let schema = Schema::with_overrides(columns)?;
    let records = io::read_records_file(path, &schema).with_context(|| format!("reading {}", path.display()))?;
    manifest.add_input("data", path)?;
    Ok(records)
}

fn load_curve(path: &Path, strictify: bool, manifest: &mut RunManifest) -> Result<WtpCurve> {
    let curve = io::read_wtp_file(path, strictify).with_context(|| format!("reading {}", path.display()))?;
    manifest.add_input("wtp", path)?;
    Ok(curve)
}

fn pmf(records: &[SalesRecord], city: &str, period: &Period, exclude: &Months) -> Result<PricePmf> {
    build_pmf(records, city, &period.filter(exclude)).with_context(|| format!("{city} in {period}"))
}

#[derive(Serialize)]
struct CitySummary {
    rows: usize,
    zero_quantity_rows: usize,
    units: u64,
    distinct_prices: usize,
    min_price: Option<u64>,
    max_price: Option<u64>,
    first_month: Option<String>,
    last_month: Option<String>,
}

fn ingest(a: IngestArgs) -> Result<()> {
    let mut manifest = RunManifest::new("ingest", None, &a);
    let records = load_records(&a.data.data, &a.data.columns, &mut manifest)?;
    let filter = match &a.period {
        Some(p) => p.filter(&a.data.exclude),
        None => PeriodFilter::all().excluding(a.data.exclude.0.iter().copied()),
    };
    let kept: Vec<&SalesRecord> = records.iter().filter(|r| filter.contains(r.period())).collect();
    let mut cities: BTreeMap<&str, Vec<&SalesRecord>> = BTreeMap::new();
    for r in &kept {
        cities.entry(r.city.as_str()).or_default().push(r);
    }
    let summary: BTreeMap<&str, CitySummary> = cities
        .iter()
        .map(|(city, rows)| {
            let counts = count_prices(rows.iter().copied(), |_| true, &PeriodFilter::all());
            let months = rows.iter().map(|r| r.period());
            (
                *city,
                CitySummary {
                    rows: rows.len(),
                    zero_quantity_rows: rows.iter().filter(|r| r.quantity == 0).count(),
                    units: counts.total(),
                    distinct_prices: counts.support().len(),
                    min_price: counts.support().first().copied(),
                    max_price: counts.support().last().copied(),
                    first_month: months.clone().min().map(|m| m.to_string()),
                    last_month: months.max().map(|m| m.to_string()),
                },
            )
        })
        .collect();
    if let (Some(city), Some(path)) = (&a.city, &a.pmf_csv) {
        let counts = count_prices(kept.iter().copied(), |c| c == city, &PeriodFilter::all());
        ensure!(!counts.is_empty(), "no units sold for {city} in the selected periods");
        let total = counts.total() as f64;
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(["price", "units", "mass"])?;
        for (p, k) in counts.support().iter().zip(counts.counts()) {
            w.write_record([p.to_string(), k.to_string(), (*k as f64 / total).to_string()])?;
        }
        w.flush()?;
    }
    emit_json(a.out.as_deref(), &json!({ "manifest": manifest, "records": records.len(), "records_in_period": kept.len(), "cities": summary }))
}

fn transport(a: TransportArgs) -> Result<()> {
    let mut manifest = RunManifest::new("transport", None, &a);
    let records = load_records(&a.data.data, &a.data.columns, &mut manifest)?;
    let pre = pmf(&records, &a.city, &a.window.pre, &a.data.exclude)?;
    let post = pmf(&records, &a.city, &a.window.post, &a.data.exclude)?;
    let d = Bandwidth(a.d);
    let cost = ot_cost(&pre, &post, d);
    let mut report = json!({
        "manifest": manifest,
        "cost": cost,
        "d": a.d,
        "n_pre": pre.n(),
        "n_post": post.n(),
        "support_pre": pre.len(),
        "support_post": post.len(),
    });
    if let Some(path) = &a.plan_csv {
        let plan = if a.lambda > 0.0 { solve_ot_regularized(&pre, &post, d, a.lambda)? } else { solve_ot(&pre, &post, d) };
        io::write_plan(create(path)?, &plan)?;
        report["plan"] = json!({
            "entries": plan.entries().len(),
            "indicator_cost": plan.cost(),
            "displacement": plan.displacement(),
            "lambda": a.lambda,
            "lambda_below_breakpoint": a.lambda == 0.0 || tie_break_within_breakpoint(&pre, &post, a.lambda),
        });
    }
    emit_json(a.out.as_deref(), &report)
}

#[derive(Serialize)]
struct ScanRowOut {
    d: u64,
    real_cost: f64,
    placebo_mean: f64,
    placebo_sd: f64,
    placebo_quantiles: Vec<f64>,
    dit: Option<f64>,
}

fn scan_rows(scan: &BandwidthScan) -> Vec<ScanRowOut> {
    scan.rows
        .iter()
        .map(|r| ScanRowOut {
            d: r.d.get(),
            real_cost: r.real_cost,
            placebo_mean: r.placebo.mean,
            placebo_sd: r.placebo.sd,
            placebo_quantiles: r.placebo.quantiles.clone(),
            dit: r.dit,
        })
        .collect()
}

fn scan(a: ScanArgs) -> Result<()> {
    let mut manifest = RunManifest::new("scan", Some(a.placebo.seed), &a);
    let records = load_records(&a.data.data, &a.data.columns, &mut manifest)?;
    let pre = pmf(&records, &a.city, &a.window.pre, &a.data.exclude)?;
    let post = pmf(&records, &a.city, &a.window.post, &a.data.exclude)?;
    let control = match &a.control {
        Some(c) => Some((pmf(&records, c, &a.window.pre, &a.data.exclude)?, pmf(&records, c, &a.window.post, &a.data.exclude)?)),
        None => None,
    };
    let base = match a.placebo.placebo_base {
        PlaceboBase::Pre => &pre,
        PlaceboBase::Post => &post,
    };
    let inputs = ScanInputs { pre: &pre, post: &post, placebo_base: base, control: control.as_ref().map(|(x, y)| (x, y)) };
    let result = bandwidth_scan(&Parallel::from_env()?, inputs, &a.placebo.d_grid.points(), &a.placebo.config())?;
    if let Some(path) = &a.scan_csv {
        io::write_scan(create(path)?, &result)?;
    }
    let selection = result.select(a.placebo.threshold, a.placebo.rule.0);
    let report = json!({
        "manifest": manifest,
        "n_pre": pre.n(),
        "n_post": post.n(),
        "quantile_levels": SCAN_QUANTILES,
        "selected_d": selection.as_ref().ok().map(|d| d.get()),
        "selection_error": selection.as_ref().err().map(|e| e.to_string()),
        "rows": scan_rows(&result),
    });
    emit_json(a.out.as_deref(), &report)?;
    selection.context("bandwidth selection")?;
    Ok(())
}

fn dit(a: DitArgs) -> Result<()> {
    let mut manifest = RunManifest::new("dit", a.from_scan.is_none().then_some(a.seed), &a);
    if let Some(path) = &a.from_scan {
        let scan = io::read_scan(File::open(path).with_context(|| format!("reading {}", path.display()))?)?;
        manifest.add_input("scan", path)?;
        let d_min = Bandwidth(a.d_min.expect("clap requires --d-min"));
        ensure!(scan.rows.iter().all(|r| r.dit.is_some()), "scan has no dit column");
        let (d_star, s_dit) = select_dstar(&scan, d_min)?;
        let report = json!({
            "manifest": manifest,
            "d_star": d_star.get(),
            "s_dit": s_dit,
            "d_floor": { "placebo_rule": null, "displacement_rule": null, "d_min": d_min.get(), "manual": true },
            "rows": scan_rows(&scan),
        });
        return emit_json(a.out.as_deref(), &report);
    }

    let (Some(data), Some(treated), Some(control), Some(pre_p), Some(post_p), Some(grid)) = (&a.data, &a.treated, &a.control, &a.pre, &a.post, &a.d_grid) else {
        bail!("--data, --treated, --control, --pre, --post and --d-grid are required without --from-scan");
    };
    let records = load_records(data, &a.columns, &mut manifest)?;
    let ex = &a.exclude;
    let (b_pre, b_post) = (pmf(&records, treated, pre_p, ex)?, pmf(&records, treated, post_p, ex)?);
    let (c_pre, c_post) = (pmf(&records, control, pre_p, ex)?, pmf(&records, control, post_p, ex)?);
    let base = if a.placebo_base == PlaceboBase::Pre { &b_pre } else { &b_post };
    let cfg = PlaceboConfig { n_sims: a.sims, seed: a.seed, quantiles: SCAN_QUANTILES.to_vec() };
    let points = grid.points();
    let scan = bandwidth_scan(
        &Parallel::from_env()?,
        ScanInputs { pre: &b_pre, post: &b_post, placebo_base: base, control: Some((&c_pre, &c_post)) },
        &points,
        &cfg,
    )?;
    if let Some(path) = &a.curve_csv {
        io::write_scan(create(path)?, &scan)?;
    }

    let trends = match (&a.trend_pre, &a.trend_post) {
        (Some(tp), Some(tq)) => {
            let rows = equal_displacement_curves(&pmf(&records, treated, tp, ex)?, &pmf(&records, treated, tq, ex)?, &pmf(&records, control, tp, ex)?, &pmf(&records, control, tq, ex)?, &points)?;
            if let Some(path) = &a.trends_csv {
                io::write_displacement(create(path)?, &rows)?;
            }
            Some(rows)
        }
        _ => None,
    };
    let (placebo_d, displacement_d, d_min) = match a.d_min {
        Some(d) => (None, None, Bandwidth(d)),
        None => {
            let placebo_d = scan.select(a.threshold, a.rule.0).context("placebo floor")?;
            let displacement_d = trends.as_ref().map(|rows| displacement_floor(rows, a.tau)).transpose().context("equal-displacement floor")?;
            (Some(placebo_d), displacement_d, d_floor(placebo_d, displacement_d.unwrap_or(Bandwidth(0))))
        }
    };
    let (d_star, s_dit) = select_dstar(&scan, d_min)?;
    let report = json!({
        "manifest": manifest,
        "d_star": d_star.get(),
        "s_dit": s_dit,
        "d_floor": {
            "placebo_rule": placebo_d.map(Bandwidth::get),
            "displacement_rule": displacement_d.map(Bandwidth::get),
            "d_min": d_min.get(),
            "manual": a.d_min.is_some(),
        },
        "n": { "treated_pre": b_pre.n(), "treated_post": b_post.n(), "control_pre": c_pre.n(), "control_post": c_post.n() },
        "rows": scan_rows(&scan),
        "post_trends": trends.map(|rows| rows.iter().map(|r| json!({"d": r.d.get(), "cost_a": r.cost_a, "cost_b": r.cost_b, "difference": r.difference})).collect::<Vec<_>>()),
    });
    emit_json(a.out.as_deref(), &report)
}

#[derive(Serialize)]
struct Thousands {
    p: f64,
    t: f64,
    v_seller: f64,
    v_buyer: f64,
}

#[derive(Serialize)]
struct Billions {
    gross_gains: f64,
    tc_total: f64,
    net_gains: f64,
}

#[derive(Serialize)]
struct EquilibriumRow {
    s: f64,
    p: f64,
    t: f64,
    v_seller: f64,
    v_buyer: f64,
    gross_gains: f64,
    tc_total: f64,
    net_gains: f64,
    tc_share: f64,
    meets_price_floor: Option<bool>,
    dp_ds: Option<f64>,
    dt_ds: Option<f64>,
    statics_note: Option<String>,
    rmb_1000: Thousands,
    rmb_billion: Billions,
}

fn equilibrium_row(sol: &MarketSolution, floor: Option<bool>, statics: diftrans_core::Result<diftrans_core::equilibrium::ComparativeStatics>) -> EquilibriumRow {
    let (dp_ds, dt_ds, statics_note) = match statics {
        Ok(cs) => (Some(cs.dp_ds), Some(cs.dt_ds), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    EquilibriumRow {
        s: sol.s,
        p: sol.p,
        t: sol.t,
        v_seller: sol.v_seller,
        v_buyer: sol.v_buyer,
        gross_gains: sol.gross_gains,
        tc_total: sol.tc_total,
        net_gains: sol.net_gains,
        tc_share: sol.tc_share,
        meets_price_floor: floor,
        dp_ds,
        dt_ds,
        statics_note,
        rmb_1000: Thousands { p: sol.p / 1e3, t: sol.t / 1e3, v_seller: sol.v_seller / 1e3, v_buyer: sol.v_buyer / 1e3 },
        rmb_billion: Billions { gross_gains: sol.gross_gains / 1e9, tc_total: sol.tc_total / 1e9, net_gains: sol.net_gains / 1e9 },
    }
}

fn equilibrium(a: EquilibriumArgs) -> Result<()> {
    let mut manifest = RunManifest::new("equilibrium", None, &a);
    let curve = load_curve(&a.wtp, a.strictify, &mut manifest)?;
    let cfg = a.market.config();
    cfg.validate()?;
    let s_max = cfg.max_trade_share();
    let shares: Vec<f64> = a.s.iter().map(|s| if let Share::Value(x) = s { *x } else { s_max }).collect();
    let table = bounds_table(&cfg, &curve, &shares, a.price_floor)?;
    let rows: Vec<EquilibriumRow> = table.iter().map(|r| equilibrium_row(&r.solution, r.meets_price_floor, comparative_statics(&cfg, &curve, r.solution.s))).collect();
    if let Some(path) = &a.table_csv {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(["s", "p_k", "t_k", "v_seller_k", "v_buyer_k", "gross_gains_bn", "tc_total_bn", "net_gains_bn", "tc_share", "meets_price_floor"])?;
        for r in &rows {
            w.write_record([
                r.s.to_string(),
                r.rmb_1000.p.to_string(),
                r.rmb_1000.t.to_string(),
                r.rmb_1000.v_seller.to_string(),
                r.rmb_1000.v_buyer.to_string(),
                r.rmb_billion.gross_gains.to_string(),
                r.rmb_billion.tc_total.to_string(),
                r.rmb_billion.net_gains.to_string(),
                r.tc_share.to_string(),
                r.meets_price_floor.map(|b| b.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
    }
    let frictionless = if cfg.speculator_share == 0.0 { Some(solve_no_tc(&cfg, &curve)?) } else { None };
    emit_json(
        a.out.as_deref(),
        &json!({
            "manifest": manifest,
            "s_max": s_max,
            "s_notc": frictionless.map(|(_, s)| s),
            "p_notc": frictionless.map(|(p, _)| p),
            "rows": rows,
        }),
    )
}

fn did(a: DidArgs) -> Result<()> {
    let mut manifest = RunManifest::new("did", None, &a);
    let records = load_records(&a.data.data, &a.data.columns, &mut manifest)?;
    let controls: Vec<&str> = a.controls.iter().map(String::as_str).collect();
    ensure!(!controls.contains(&a.treated.as_str()), "the treated city {} is also listed as a control", a.treated);
    let obs = did_observations(&records, &a.treated, &controls, &a.window.pre.filter(&a.data.exclude), &a.window.post.filter(&a.data.exclude));
    let weighting = match a.weighting {
        WeightingArg::Units => Weighting::Units,
        WeightingArg::Rows => Weighting::Rows,
    };
    let fit = did_ols(&obs, weighting)?;
    let names = ["intercept", "treated", "post", "treated_x_post"];
    let coefficients: Vec<Value> = names.iter().enumerate().map(|(k, n)| json!({ "term": n, "estimate": fit.alpha[k], "se": fit.se[k] })).collect();
    emit_json(a.out.as_deref(), &json!({ "manifest": manifest, "coefficients": coefficients, "n_obs": fit.n_obs, "r2": fit.r2 }))
}

fn ci(a: CiArgs) -> Result<()> {
    let mut manifest = RunManifest::new("ci", Some(a.seed), &a);
    let records = load_records(&a.data.data, &a.data.columns, &mut manifest)?;
    let counts = |city: &str, period: &Period| {
        let c = count_prices(&records, |x| x == city, &period.filter(&a.data.exclude));
        if c.is_empty() {
            bail!("no units sold for {city} in {period}");
        }
        Ok(c)
    };
    let (pre, post) = (counts(&a.city, &a.window.pre)?, counts(&a.city, &a.window.post)?);
    let d = Bandwidth(a.d);
    let (volume, control) = match a.estimator {
        EstimatorArg::BeforeAfter => (VolumeEstimator::BeforeAfter(d), None),
        EstimatorArg::Dit => {
            let c = a.control.as_deref().context("--estimator dit needs --control")?;
            (VolumeEstimator::DiffInTransports(d), Some((counts(c, &a.window.pre)?, counts(c, &a.window.post)?)))
        }
    };
    let curve = match &a.wtp {
        Some(path) => Some(load_curve(path, a.strictify, &mut manifest)?),
        None => None,
    };
    let field = match a.field {
        FieldArg::Share => None,
        FieldArg::Price => Some(MarketField::Price),
        FieldArg::Cost => Some(MarketField::Cost),
        FieldArg::GrossGains => Some(MarketField::GrossGains),
        FieldArg::TcTotal => Some(MarketField::TcTotal),
        FieldArg::NetGains => Some(MarketField::NetGains),
        FieldArg::TcShare => Some(MarketField::TcShare),
    };
    let estimator = match field {
        None => Estimator::Volume(volume),
        Some(field) => Estimator::Market {
            volume,
            config: a.market.config(),
            curve: curve.as_ref().context("equilibrium fields need --wtp")?,
            field,
        },
    };
    let samples = SampleSet { pre: &pre, post: &post, control: control.as_ref().map(|(x, y)| (x, y)) };
    let cfg = SubsampleConfig { n_draws: a.draws, size: a.subsample.0, alpha: a.alpha, seed: a.seed, paired: a.paired };
    let res = subsample_ci(&Parallel::from_env()?, &samples, &estimator, &cfg)?;
    if let Some(path) = &a.draws_csv {
        io::write_draws(create(path)?, &res.draws)?;
    }
    emit_json(
        a.out.as_deref(),
        &json!({
            "manifest": manifest,
            "estimator": a.estimator,
            "field": a.field,
            "d": a.d,
            "point": res.point,
            "lower": res.lower,
            "upper": res.upper,
            "alpha": a.alpha,
            "n_draws": a.draws,
            "invalid_draws": res.invalid,
            "subsample_sizes": { "pre": res.sizes[0], "post": res.sizes[1], "control_pre": res.sizes[2], "control_post": res.sizes[3] },
        }),
    )
}

/// Version tag of the bundle layout.
pub const BUNDLE_SCHEMA: &str = "diftrans-bundle/1";

fn read_report(path: &Path, command: &str, manifest: &mut RunManifest) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let found = value.pointer("/manifest/command").and_then(Value::as_str);
    ensure!(found == Some(command), "{} is not a {command} report (manifest command {found:?})", path.display());
    manifest.add_input(command, path)?;
    Ok(value)
}

fn gap(what: &str) -> Value {
    json!({ "gap": format!("no {what} report supplied") })
}

fn report(a: ReportArgs) -> Result<()> {
    let mut manifest = RunManifest::new("report", None, &a);
    ensure!(
        a.scan.is_some() || a.dit.is_some() || a.equilibrium.is_some() || a.did.is_some() || !a.ci.is_empty(),
        "report needs at least one input report"
    );
    let mut sections = serde_json::Map::new();
    for (name, path) in [("scan", &a.scan), ("dit", &a.dit), ("equilibrium", &a.equilibrium), ("did", &a.did)] {
        let value = match path {
            Some(p) => read_report(p, name, &mut manifest)?,
            None => gap(name),
        };
        sections.insert(name.into(), value);
    }
    let cis = a.ci.iter().map(|p| read_report(p, "ci", &mut manifest)).collect::<Result<Vec<_>>>()?;
    sections.insert("ci".into(), if cis.is_empty() { gap("ci") } else { Value::Array(cis) });
    let bundle = json!({ "schema": BUNDLE_SCHEMA, "manifest": manifest, "sections": sections });
    if let Some(path) = &a.markdown {
        std::fs::write(path, render_markdown(&bundle)).with_context(|| format!("cannot write {}", path.display()))?;
    }
    emit_json(a.out.as_deref(), &bundle)
}

fn num(v: &Value, pointer: &str) -> String {
    match v.pointer(pointer) {
        Some(Value::Number(n)) => n.to_string(),
        Some(Value::Null) | None => "n/a".into(),
        Some(other) => other.to_string(),
    }
}

fn thousands(v: &Value, pointer: &str) -> String {
    v.pointer(pointer).and_then(Value::as_f64).map_or("n/a".into(), |x| format!("{:.0}", x / 1e3))
}

pub fn render_markdown(bundle: &Value) -> String {
    let mut md = String::from("# Trade volume report\n\n");
    let s = &bundle["sections"];
    let gap_line = |md: &mut String, v: &Value| {
        if let Some(g) = v.get("gap").and_then(Value::as_str) {
            let _ = writeln!(md, "_Gap: {g}._\n");
            true
        } else {
            false
        }
    };

    md.push_str("## Bandwidth scan\n\n");
    if !gap_line(&mut md, &s["scan"]) {
        let _ = writeln!(md, "Selected d: {} RMB. Rows: {}.\n", num(&s["scan"], "/selected_d"), s["scan"]["rows"].as_array().map_or(0, Vec::len));
    }
    md.push_str("## Difference in transports\n\n");
    if !gap_line(&mut md, &s["dit"]) {
        let _ = writeln!(
            md,
            "Lower bound {} at d* = {} RMB (floor {} RMB).\n",
            num(&s["dit"], "/s_dit"),
            num(&s["dit"], "/d_star"),
            num(&s["dit"], "/d_floor/d_min")
        );
    }
    md.push_str("## Prices and costs (RMB 1,000)\n\n");
    if !gap_line(&mut md, &s["equilibrium"]) {
        md.push_str("| s | p | t | p - t | p + t | net gains (RMB bn) |\n|---|---|---|---|---|---|\n");
        for row in s["equilibrium"]["rows"].as_array().into_iter().flatten() {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} |",
                num(row, "/s"),
                thousands(row, "/p"),
                thousands(row, "/t"),
                thousands(row, "/v_seller"),
                thousands(row, "/v_buyer"),
                row.pointer("/rmb_billion/net_gains").and_then(Value::as_f64).map_or("n/a".into(), |x| format!("{x:.2}"))
            );
        }
        md.push('\n');
    }
    md.push_str("## Difference in differences\n\n");
    if !gap_line(&mut md, &s["did"]) {
        let _ = writeln!(md, "Interaction {} (se {}), n = {}.\n", num(&s["did"], "/coefficients/3/estimate"), num(&s["did"], "/coefficients/3/se"), num(&s["did"], "/n_obs"));
    }
    md.push_str("## Subsampling intervals\n\n");
    if !gap_line(&mut md, &s["ci"]) {
        for c in s["ci"].as_array().into_iter().flatten() {
            let _ = writeln!(
                md,
                "- {} {} at d = {}: {} [{}, {}]",
                c["estimator"].as_str().unwrap_or("?"),
                c["field"].as_str().unwrap_or("?"),
                num(c, "/d"),
                num(c, "/point"),
                num(c, "/lower"),
                num(c, "/upper")
            );
        }
        md.push('\n');
    }
    md
}
