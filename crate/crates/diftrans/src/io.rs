//! CSV formats: sales records, willingness-to-pay knots, transport plans,
//! bandwidth scans, displacement curves and subsample draws.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use diftrans_core::equilibrium::WtpCurve;
use diftrans_core::estimators::{BandwidthScan, DisplacementRow, PlaceboSummary, ScanRow};
use diftrans_core::{Bandwidth, SalesRecord, TransportPlan};
use serde::Serialize;

/// Quantile levels behind the fixed `q025..q975` scan columns.
pub const SCAN_QUANTILES: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

const SCAN_HEADER: [&str; 10] = ["d", "real_cost", "placebo_mean", "placebo_sd", "q025", "q25", "q50", "q75", "q975", "dit"];

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("invalid {column} {value:?}, row {row}")]
    Parse { column: &'static str, value: String, row: usize },
    #[error("{message}, row {row}")]
    Invalid { message: String, row: usize },
    #[error("{0}")]
    Schema(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FormatError>;

/// Header names for the five sales-record fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schema {
    pub city: String,
    pub year: String,
    pub month: String,
    pub price: String,
    pub quantity: String,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            city: "city".into(),
            year: "year".into(),
            month: "month".into(),
            price: "price".into(),
            quantity: "quantity".into(),
        }
    }
}

impl Schema {
    /// Overrides from `field=header` pairs separated by commas.
    pub fn with_overrides(spec: &str) -> Result<Self> {
        let mut schema = Self::default();
        for pair in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (field, header) = pair
                .split_once('=')
                .ok_or_else(|| FormatError::Schema(format!("expected field=header, got {pair:?}")))?;
            let slot = match field.trim() {
                "city" => &mut schema.city,
                "year" => &mut schema.year,
                "month" => &mut schema.month,
                "price" => &mut schema.price,
                "quantity" => &mut schema.quantity,
                other => return Err(FormatError::Schema(format!("unknown field {other:?}"))),
            };
            *slot = header.trim().to_string();
        }
        Ok(schema)
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers.iter().position(|h| h.trim() == name).ok_or_else(|| FormatError::MissingColumn(name.into()))
}

fn parse_int(column: &'static str, value: &str, row: usize) -> Result<i64> {
    value.trim().parse().map_err(|_| FormatError::Parse { column, value: value.into(), row })
}

fn nonnegative(column: &'static str, value: &str, row: usize) -> Result<u64> {
    let x = parse_int(column, value, row)?;
    u64::try_from(x).map_err(|_| FormatError::Invalid { message: format!("negative {column} {x}"), row })
}

/// Reads sales records. Rows are numbered as in a spreadsheet, so the first
/// data row is row 2. Zero quantities are kept.
pub fn read_records<R: Read>(reader: R, schema: &Schema) -> Result<Vec<SalesRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx = [
        column(&headers, &schema.city)?,
        column(&headers, &schema.year)?,
        column(&headers, &schema.month)?,
        column(&headers, &schema.price)?,
        column(&headers, &schema.quantity)?,
    ];
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec?;
        let field = |i: usize| rec.get(idx[i]).unwrap_or("");
        let year = parse_int("year", field(1), row)?;
        let year = i32::try_from(year).map_err(|_| FormatError::Invalid { message: format!("year {year} out of range"), row })?;
        let month = parse_int("month", field(2), row)?;
        if !(1..=12).contains(&month) {
            return Err(FormatError::Invalid { message: "month out of range".into(), row });
        }
        out.push(SalesRecord {
            city: field(0).to_string(),
            year,
            month: month as u8,
            price: nonnegative("price", field(3), row)?,
            quantity: nonnegative("quantity", field(4), row)?,
        });
    }
    Ok(out)
}

pub fn read_records_file(path: &Path, schema: &Schema) -> Result<Vec<SalesRecord>> {
    read_records(std::fs::File::open(path)?, schema)
}

/// Writes records with the default header.
pub fn write_records<W: Write>(writer: W, records: &[SalesRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["city", "year", "month", "price", "quantity"])?;
    for r in records {
        w.write_record([r.city.clone(), r.year.to_string(), r.month.to_string(), r.price.to_string(), r.quantity.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `n,v` knots. With `strictify`, ties in `v` are lifted instead of
/// rejected.
pub fn read_wtp<R: Read>(reader: R, strictify: bool) -> Result<WtpCurve> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let (ni, vi) = (column(&headers, "n")?, column(&headers, "v")?);
    let mut knots = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec?;
        let num = |i: usize, name: &'static str| -> Result<f64> {
            let s = rec.get(i).unwrap_or("");
            s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or(FormatError::Parse { column: name, value: s.into(), row })
        };
        knots.push((num(ni, "n")?, num(vi, "v")?));
    }
    let curve = if strictify { WtpCurve::strictify(&knots) } else { WtpCurve::from_knots(&knots) };
    curve.map_err(|e| FormatError::Schema(e.to_string()))
}

pub fn read_wtp_file(path: &Path, strictify: bool) -> Result<WtpCurve> {
    read_wtp(std::fs::File::open(path)?, strictify)
}

pub fn write_plan<W: Write>(writer: W, plan: &TransportPlan) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["i", "j", "x_i", "x_j", "mass"])?;
    for e in plan.entries() {
        w.write_record([e.source.to_string(), e.target.to_string(), e.source_price.to_string(), e.target_price.to_string(), e.mass.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a scan whose placebo quantiles are at [`SCAN_QUANTILES`]. The `dit`
/// cell is empty when the scan has no control.
pub fn write_scan<W: Write>(writer: W, scan: &BandwidthScan) -> Result<()> {
    if scan.quantile_levels != SCAN_QUANTILES {
        return Err(FormatError::Schema(format!("scan CSV needs quantile levels {SCAN_QUANTILES:?}")));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SCAN_HEADER)?;
    for r in &scan.rows {
        let mut fields = vec![r.d.get().to_string(), r.real_cost.to_string(), r.placebo.mean.to_string(), r.placebo.sd.to_string()];
        fields.extend(r.placebo.quantiles.iter().map(f64::to_string));
        fields.push(r.dit.map(|x| x.to_string()).unwrap_or_default());
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scan<R: Read>(reader: R) -> Result<BandwidthScan> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx: HashMap<&str, usize> = SCAN_HEADER.iter().map(|&h| column(&headers, h).map(|i| (h, i))).collect::<Result<_>>()?;
    let mut rows: Vec<ScanRow> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec?;
        let real = |name: &'static str| -> Result<f64> {
            let s = rec.get(idx[name]).unwrap_or("");
            s.parse().map_err(|_| FormatError::Parse { column: name, value: s.into(), row })
        };
        let d = nonnegative("d", rec.get(idx["d"]).unwrap_or(""), row)?;
        if rows.last().is_some_and(|r| r.d.get() >= d) {
            return Err(FormatError::Invalid { message: "d must be strictly ascending".into(), row });
        }
        let dit_cell = rec.get(idx["dit"]).unwrap_or("");
        rows.push(ScanRow {
            d: Bandwidth(d),
            real_cost: real("real_cost")?,
            placebo: PlaceboSummary {
                mean: real("placebo_mean")?,
                sd: real("placebo_sd")?,
                quantiles: vec![real("q025")?, real("q25")?, real("q50")?, real("q75")?, real("q975")?],
            },
            dit: if dit_cell.is_empty() { None } else { Some(real("dit")?) },
        });
    }
    Ok(BandwidthScan { quantile_levels: SCAN_QUANTILES.to_vec(), rows })
}

pub fn write_displacement<W: Write>(writer: W, rows: &[DisplacementRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["d", "cost_a", "cost_b", "difference"])?;
    for r in rows {
        w.write_record([r.d.get().to_string(), r.cost_a.to_string(), r.cost_b.to_string(), r.difference.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Invalid draws are written as `NaN`.
pub fn write_draws<W: Write>(writer: W, draws: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["draw_index", "value"])?;
    for (k, x) in draws.iter().enumerate() {
        w.write_record([k.to_string(), x.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
