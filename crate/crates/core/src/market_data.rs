//! Quote ingestion, adjusted closing prices, normalization, and panels.
//!
//! An adjusted closing price is the close multiplied by a running share count
//! that grows on every ex-dividend day by `c0 / (c0 - d)`, where `c0` is the
//! previous market day's close and `d` the cash distribution. Splits multiply
//! the share count by the split ratio. Any two adjusted series for the same
//! instrument differ by a positive scalar, so the result is normalized to a
//! base value (100 by default) on an anchor date.

use std::collections::HashSet;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::fmt::fixed;

pub const DEFAULT_BASE: f64 = 100.0;

/// Decimal places used for panel CSV output.
pub const PANEL_DECIMALS: usize = 5;

/// Normalization date and the value the series carries on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub date: NaiveDate,
    pub base: f64,
}

impl Anchor {
    pub fn new(date: NaiveDate, base: f64) -> Self {
        Anchor { date, base }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawQuote {
    pub date: NaiveDate,
    pub close: f64,
    pub adj_close: Option<f64>,
}

/// Cash distribution per share, effective on `ex_date`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionEvent {
    pub ex_date: NaiveDate,
    pub amount: f64,
}

/// Share split effective on `ex_date`; `ratio` new shares per old share (3.0 for 3:1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitEvent {
    pub ex_date: NaiveDate,
    pub ratio: f64,
}

/// Dated, strictly positive prices for one instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    label: String,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
    anchor: Option<Anchor>,
}

impl PriceSeries {
    /// Unnormalized series. Requires at least two strictly increasing dates and
    /// positive finite values.
    pub fn new(label: impl Into<String>, dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: dates.len(),
                actual: values.len(),
            });
        }
        if dates.len() < 2 {
            return Err(Error::InsufficientData {
                required: 2,
                actual: dates.len(),
            });
        }
        check_increasing(&dates)?;
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::domain(format!(
                "price {v} on {} is not strictly positive",
                dates[i]
            )));
        }
        Ok(PriceSeries {
            label: label.into(),
            dates,
            values,
            anchor: None,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn anchor(&self) -> Option<Anchor> {
        self.anchor
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Value on `date`.
    pub fn value_at(&self, date: NaiveDate) -> Result<f64> {
        self.index_of(date)
            .map(|i| self.values[i])
            .ok_or(Error::UnknownDate(date))
    }
}

fn check_increasing(dates: &[NaiveDate]) -> Result<()> {
    for w in dates.windows(2) {
        if w[1] == w[0] {
            return Err(Error::domain(format!("duplicate date {}", w[0])));
        }
        if w[1] < w[0] {
            return Err(Error::domain(format!("dates out of order: {} follows {}", w[1], w[0])));
        }
    }
    Ok(())
}

fn parse_date(s: &str, row: usize) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|e| Error::parse(row, format!("bad date {:?}: {e}", s.trim())))
}

fn parse_number(s: &str, row: usize) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::parse(row, format!("bad number {:?}", s.trim())))?;
    if !v.is_finite() {
        return Err(Error::parse(row, format!("non-finite number {:?}", s.trim())));
    }
    Ok(v)
}

fn positive(v: f64, what: &str, row: usize) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::domain(format!("row {row}: {what} {v} is not strictly positive")))
    }
}

type Rows = Vec<(usize, Vec<String>)>;

/// Rows of a headed CSV, as (1-based row number, fields). The header is row 1.
fn csv_rows(text: &str) -> Result<(Vec<String>, Rows)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| Error::parse(1, e.to_string()))?,
        None => return Err(Error::parse(1, "missing header row")),
    };
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::parse(row, e.to_string()))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push((row, rec.iter().map(|s| s.to_string()).collect()));
    }
    Ok((header, rows))
}

fn find_column(header: &[String], names: &[&str]) -> Option<usize> {
    header.iter().position(|h| {
        let h = h.trim().to_ascii_lowercase();
        names.iter().any(|n| *n == h)
    })
}

/// Parse a quote file: either the seven-column
/// `Date,Open,High,Low,Close,Adj Close,Volume` download or a two-column
/// `date,close` / `date,value` file.
pub fn parse_quote_csv(text: &str) -> Result<Vec<RawQuote>> {
    let (header, rows) = csv_rows(text)?;
    let date_col = find_column(&header, &["date"]).ok_or_else(|| Error::parse(1, "no date column"))?;
    let adj_col = find_column(&header, &["adj close", "adj_close", "adjclose"]);
    let close_col = find_column(&header, &["close", "value", "price"])
        .or_else(|| if header.len() == 2 { Some(1 - date_col) } else { None })
        .ok_or_else(|| Error::parse(1, "no close/value column"))?;
    let width = header.len();

    let mut quotes = Vec::with_capacity(rows.len());
    for (row, fields) in rows {
        if fields.len() != width {
            return Err(Error::parse(
                row,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        let date = parse_date(&fields[date_col], row)?;
        let close = positive(parse_number(&fields[close_col], row)?, "close", row)?;
        let adj_close = match adj_col {
            Some(c) => Some(positive(parse_number(&fields[c], row)?, "adj close", row)?),
            None => None,
        };
        if let Some(prev) = quotes.last().map(|q: &RawQuote| q.date) {
            if date == prev {
                return Err(Error::domain(format!("row {row}: duplicate date {date}")));
            }
            if date < prev {
                return Err(Error::domain(format!("row {row}: date {date} precedes {prev}")));
            }
        }
        quotes.push(RawQuote { date, close, adj_close });
    }
    Ok(quotes)
}

/// Parse `ex_date,amount` distribution rows.
pub fn parse_distribution_csv(text: &str) -> Result<Vec<DistributionEvent>> {
    parse_dated_amounts(text, &["amount", "dividend", "dividends"])?
        .into_iter()
        .map(|(row, ex_date, amount)| {
            positive(amount, "distribution", row).map(|amount| DistributionEvent { ex_date, amount })
        })
        .collect()
}

/// Parse `ex_date,ratio` split rows.
pub fn parse_split_csv(text: &str) -> Result<Vec<SplitEvent>> {
    parse_dated_amounts(text, &["ratio", "split", "factor"])?
        .into_iter()
        .map(|(row, ex_date, ratio)| positive(ratio, "split ratio", row).map(|ratio| SplitEvent { ex_date, ratio }))
        .collect()
}

fn parse_dated_amounts(text: &str, value_names: &[&str]) -> Result<Vec<(usize, NaiveDate, f64)>> {
    let (header, rows) = csv_rows(text)?;
    let date_col =
        find_column(&header, &["ex_date", "date", "ex-date"]).ok_or_else(|| Error::parse(1, "no ex_date column"))?;
    let value_col = find_column(&header, value_names)
        .or_else(|| if header.len() == 2 { Some(1 - date_col) } else { None })
        .ok_or_else(|| Error::parse(1, "no amount column"))?;
    rows.into_iter()
        .map(|(row, fields)| {
            if fields.len() != header.len() {
                return Err(Error::parse(
                    row,
                    format!("expected {} fields, found {}", header.len(), fields.len()),
                ));
            }
            Ok((
                row,
                parse_date(&fields[date_col], row)?,
                parse_number(&fields[value_col], row)?,
            ))
        })
        .collect()
}

/// Running adjusted share count, one entry per quote, starting at `seed`.
pub fn adjusted_shares(
    quotes: &[RawQuote],
    events: &[DistributionEvent],
    splits: &[SplitEvent],
    seed: f64,
) -> Result<Vec<f64>> {
    if !(seed.is_finite() && seed > 0.0) {
        return Err(Error::domain(format!("share seed {seed} must be positive")));
    }
    let dates: Vec<NaiveDate> = quotes.iter().map(|q| q.date).collect();
    check_increasing(&dates)?;

    let mut factors = vec![1.0; quotes.len()];
    for ev in events {
        let i = dates
            .binary_search(&ev.ex_date)
            .map_err(|_| Error::domain(format!("distribution ex-date {} is not a market day", ev.ex_date)))?;
        if i == 0 {
            return Err(Error::domain(format!(
                "distribution on {} has no prior close",
                ev.ex_date
            )));
        }
        let prior = quotes[i - 1].close;
        if !(ev.amount > 0.0 && ev.amount < prior) {
            return Err(Error::domain(format!(
                "distribution {} on {} must lie in (0, prior close {prior})",
                ev.amount, ev.ex_date
            )));
        }
        factors[i] *= prior / (prior - ev.amount);
    }
    for sp in splits {
        let i = dates
            .binary_search(&sp.ex_date)
            .map_err(|_| Error::domain(format!("split ex-date {} is not a market day", sp.ex_date)))?;
        if !(sp.ratio.is_finite() && sp.ratio > 0.0) {
            return Err(Error::domain(format!("split ratio {} must be positive", sp.ratio)));
        }
        factors[i] *= sp.ratio;
    }

    let mut s = seed;
    Ok(factors
        .into_iter()
        .map(|f| {
            s *= f;
            s
        })
        .collect())
}

/// Adjusted closing prices from closes and distributions, normalized to
/// `base` on `anchor`.
pub fn build_adjusted_closes(
    label: &str,
    quotes: &[RawQuote],
    events: &[DistributionEvent],
    splits: &[SplitEvent],
    anchor: NaiveDate,
    base: f64,
) -> Result<PriceSeries> {
    let shares = adjusted_shares(quotes, events, splits, 1.0)?;
    let values = quotes.iter().zip(&shares).map(|(q, s)| q.close * s).collect();
    let series = PriceSeries::new(label, quotes.iter().map(|q| q.date).collect(), values)?;
    normalize(&series, anchor, base)
}

/// Series from a download that already carries adjusted closes (falls back to
/// the close where a row has none), normalized at `anchor`.
pub fn series_from_adjusted(label: &str, quotes: &[RawQuote], anchor: NaiveDate, base: f64) -> Result<PriceSeries> {
    let values = quotes.iter().map(|q| q.adj_close.unwrap_or(q.close)).collect();
    let series = PriceSeries::new(label, quotes.iter().map(|q| q.date).collect(), values)?;
    normalize(&series, anchor, base)
}

/// Rescale so the value on `anchor` equals `base`.
pub fn normalize(series: &PriceSeries, anchor: NaiveDate, base: f64) -> Result<PriceSeries> {
    if !(base.is_finite() && base > 0.0) {
        return Err(Error::domain(format!("base {base} must be positive")));
    }
    let i = series.index_of(anchor).ok_or(Error::UnknownDate(anchor))?;
    let at = series.values[i];
    let mut values: Vec<f64> = series.values.iter().map(|v| v * base / at).collect();
    values[i] = base;
    Ok(PriceSeries {
        label: series.label.clone(),
        dates: series.dates.clone(),
        values,
        anchor: Some(Anchor::new(anchor, base)),
    })
}

/// Date-aligned matrix of instruments, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    dates: Vec<NaiveDate>,
    labels: Vec<String>,
    columns: Vec<Vec<f64>>,
    anchor: Option<Anchor>,
}

impl PricePanel {
    pub fn new(dates: Vec<NaiveDate>, labels: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if dates.is_empty() {
            return Err(Error::InsufficientData { required: 1, actual: 0 });
        }
        check_increasing(&dates)?;
        if labels.len() != columns.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                actual: columns.len(),
            });
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::domain(format!("duplicate column label {l:?}")));
            }
        }
        for c in &columns {
            if c.len() != dates.len() {
                return Err(Error::DimensionMismatch {
                    expected: dates.len(),
                    actual: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain("non-finite panel value"));
            }
        }
        Ok(PricePanel {
            dates,
            labels,
            columns,
            anchor: None,
        })
    }

    /// Attach an anchor; every column must carry `base` on the anchor date
    /// (within 5e-6, the resolution of the CSV format).
    pub fn with_anchor(mut self, anchor: Anchor) -> Result<Self> {
        let i = self.index_of(anchor.date).ok_or(Error::UnknownDate(anchor.date))?;
        for (l, c) in self.labels.iter().zip(&self.columns) {
            if (c[i] - anchor.base).abs() > 5e-6 * anchor.base.abs().max(1.0) {
                return Err(Error::MismatchedAnchors(format!(
                    "column {l} is {} on {}, expected {}",
                    c[i], anchor.date, anchor.base
                )));
            }
        }
        self.anchor = Some(anchor);
        Ok(self)
    }

    /// Every column rescaled to `base` on `date`.
    pub fn normalized(&self, date: NaiveDate, base: f64) -> Result<PricePanel> {
        if !(base.is_finite() && base > 0.0) {
            return Err(Error::domain(format!("base {base} must be positive")));
        }
        let i = self.index_of(date).ok_or(Error::UnknownDate(date))?;
        let mut columns = Vec::with_capacity(self.columns.len());
        for (l, c) in self.labels.iter().zip(&self.columns) {
            let at = c[i];
            if at.is_nan() || at <= 0.0 {
                return Err(Error::domain(format!("column {l} is {at} on {date}, cannot normalize")));
            }
            let mut v: Vec<f64> = c.iter().map(|x| x * base / at).collect();
            v[i] = base;
            columns.push(v);
        }
        Ok(PricePanel {
            dates: self.dates.clone(),
            labels: self.labels.clone(),
            columns,
            anchor: Some(Anchor::new(date, base)),
        })
    }

    /// First date on which every column equals `base` (to CSV resolution).
    pub fn detect_anchor(&self, base: f64) -> Option<Anchor> {
        (0..self.dates.len())
            .find(|&i| {
                self.columns
                    .iter()
                    .all(|c| (c[i] - base).abs() <= 5e-6 * base.abs().max(1.0))
            })
            .map(|i| Anchor::new(self.dates[i], base))
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn anchor(&self) -> Option<Anchor> {
        self.anchor
    }

    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    pub fn column_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn column(&self, label: &str) -> Result<&[f64]> {
        Ok(&self.columns[self.column_index(label)?])
    }

    /// Column as a [`PriceSeries`] (fails if a value is non-positive).
    pub fn series(&self, label: &str) -> Result<PriceSeries> {
        let mut s = PriceSeries::new(label, self.dates.clone(), self.column(label)?.to_vec())?;
        s.anchor = self.anchor;
        Ok(s)
    }

    /// Append a column on the same date axis.
    pub fn push_column(&mut self, label: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let label = label.into();
        if self.labels.contains(&label) {
            return Err(Error::domain(format!("duplicate column label {label:?}")));
        }
        if values.len() != self.dates.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dates.len(),
                actual: values.len(),
            });
        }
        if let Some(a) = self.anchor {
            let i = self.index_of(a.date).expect("anchor date is on the axis");
            if (values[i] - a.base).abs() > 5e-6 * a.base.abs().max(1.0) {
                self.anchor = None;
            }
        }
        self.labels.push(label);
        self.columns.push(values);
        Ok(())
    }

    /// Keep only the named columns, in the given order.
    pub fn select(&self, labels: &[&str]) -> Result<PricePanel> {
        let columns = labels
            .iter()
            .map(|l| self.column(l).map(|c| c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        let mut p = PricePanel::new(
            self.dates.clone(),
            labels.iter().map(|s| s.to_string()).collect(),
            columns,
        )?;
        p.anchor = self.anchor;
        Ok(p)
    }
}

/// Restrict every series to the common dates and stack them as columns.
pub fn align_panel(series_list: &[PriceSeries]) -> Result<PricePanel> {
    let first = series_list
        .first()
        .ok_or(Error::InsufficientData { required: 1, actual: 0 })?;
    let anchor = first.anchor;
    for s in &series_list[1..] {
        if s.anchor != anchor {
            return Err(Error::MismatchedAnchors(format!(
                "{} has {:?}, {} has {:?}",
                first.label, anchor, s.label, s.anchor
            )));
        }
    }
    let mut common: Vec<NaiveDate> = first.dates.clone();
    for s in &series_list[1..] {
        let set: HashSet<&NaiveDate> = s.dates.iter().collect();
        common.retain(|d| set.contains(d));
    }
    if common.is_empty() {
        return Err(Error::domain("date intersection is empty"));
    }
    if let Some(a) = anchor {
        if common.binary_search(&a.date).is_err() {
            return Err(Error::domain(format!(
                "anchor {} is not in the common date range",
                a.date
            )));
        }
    }
    let columns = series_list
        .iter()
        .map(|s| {
            common
                .iter()
                .map(|d| s.values[s.index_of(*d).expect("date in intersection")])
                .collect()
        })
        .collect();
    let mut panel = PricePanel::new(common, series_list.iter().map(|s| s.label.clone()).collect(), columns)?;
    panel.anchor = anchor;
    Ok(panel)
}

/// Read a `date,<label1>,...` panel. The anchor is left unset; see
/// [`PricePanel::detect_anchor`] and [`PricePanel::with_anchor`].
pub fn read_panel_csv(text: &str) -> Result<PricePanel> {
    let (header, rows) = csv_rows(text)?;
    if header.is_empty() || !header[0].trim().eq_ignore_ascii_case("date") {
        return Err(Error::parse(1, "panel header must start with \"date\""));
    }
    let labels: Vec<String> = header[1..].to_vec();
    if labels.iter().any(|l| l.is_empty()) {
        return Err(Error::parse(1, "empty column label"));
    }
    let mut dates = Vec::with_capacity(rows.len());
    let mut columns = vec![Vec::with_capacity(rows.len()); labels.len()];
    for (row, fields) in rows {
        if fields.len() != header.len() {
            return Err(Error::parse(
                row,
                format!("expected {} fields, found {}", header.len(), fields.len()),
            ));
        }
        dates.push(parse_date(&fields[0], row)?);
        for (c, f) in columns.iter_mut().zip(&fields[1..]) {
            c.push(parse_number(f, row)?);
        }
    }
    PricePanel::new(dates, labels, columns)
}

/// Write the panel with `decimals` places (5 for the standard format), LF line endings.
pub fn write_panel_csv(panel: &PricePanel, decimals: usize) -> String {
    let mut out = String::from("date");
    for l in &panel.labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (i, d) in panel.dates.iter().enumerate() {
        out.push_str(&d.format("%Y-%m-%d").to_string());
        for c in &panel.columns {
            out.push(',');
            out.push_str(&fixed(c[i], decimals));
        }
        out.push('\n');
    }
    out
}
