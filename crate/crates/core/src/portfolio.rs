//! Portfolio price histories.
//!
//! An unattended (buy-and-hold) portfolio's price path is the fixed affine
//! combination `sum_j p_j a_j` of its components' normalized prices, so its
//! effective proportions drift every day. A continually reallocated portfolio
//! is rebalanced to `p` at every close; its period returns are `sum_j p_j r_j`.

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::market_data::{Anchor, PricePanel, PriceSeries, DEFAULT_BASE};

/// Tolerance on `sum(p) == 1` for weights built in code.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Tolerance on `sum(p) == 1` for weights read from a file.
pub const WEIGHT_FILE_TOL: f64 = 1e-9;

/// Portfolio proportions at the anchor close.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    labels: Vec<String>,
    p: Vec<f64>,
}

impl Weights {
    pub fn new(labels: Vec<String>, p: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(labels, p, WEIGHT_SUM_TOL)
    }

    pub fn with_tolerance(labels: Vec<String>, p: Vec<f64>, tol: f64) -> Result<Self> {
        if labels.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                actual: p.len(),
            });
        }
        if labels.is_empty() {
            return Err(Error::InvalidWeights("no instruments".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidWeights(format!("duplicate label {l:?}")));
            }
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidWeights("non-finite proportion".into()));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidWeights(format!("proportions sum to {sum}, not 1")));
        }
        Ok(Weights { labels, p })
    }

    /// Weights restricted to the simplex `0 <= p <= 1`.
    pub fn long_only(labels: Vec<String>, p: Vec<f64>) -> Result<Self> {
        let w = Self::new(labels, p)?;
        if !w.is_long_only() {
            return Err(Error::InvalidWeights("negative proportion in long-only weights".into()));
        }
        Ok(w)
    }

    /// Convenience for literals: `Weights::from_pairs(&[("FBT", 0.75), ("XBI", 0.25)])`.
    pub fn from_pairs(pairs: &[(&str, f64)]) -> Result<Self> {
        Self::new(
            pairs.iter().map(|(l, _)| l.to_string()).collect(),
            pairs.iter().map(|(_, p)| *p).collect(),
        )
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn proportions(&self) -> &[f64] {
        &self.p
    }

    pub fn is_long_only(&self) -> bool {
        self.p.iter().all(|&x| (0.0..=1.0).contains(&x))
    }

    fn column_indices(&self, panel: &PricePanel) -> Result<Vec<usize>> {
        self.labels.iter().map(|l| panel.column_index(l)).collect()
    }
}

/// Parse a `label,proportion` weights file; the sum must be 1 within 1e-9.
pub fn parse_weights_csv(text: &str) -> Result<Weights> {
    let mut labels = Vec::new();
    let mut p = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (l, v) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(row, "expected label,proportion"))?;
        let (l, v) = (l.trim(), v.trim());
        if row == 1 && v.parse::<f64>().is_err() {
            continue; // header
        }
        let x: f64 = v
            .parse()
            .map_err(|_| Error::parse(row, format!("bad proportion {v:?}")))?;
        labels.push(l.to_string());
        p.push(x);
    }
    Weights::with_tolerance(labels, p, WEIGHT_FILE_TOL)
}

/// Parse inline weights of the form `FBT=0.75,XBI=0.25`.
pub fn parse_weights_inline(spec: &str) -> Result<Weights> {
    let mut labels = Vec::new();
    let mut p = Vec::new();
    for (i, part) in spec.split(',').enumerate() {
        let (l, v) = part
            .split_once('=')
            .or_else(|| part.split_once(':'))
            .ok_or_else(|| Error::parse(i + 1, format!("expected label=proportion, got {part:?}")))?;
        labels.push(l.trim().to_string());
        p.push(
            v.trim()
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad proportion {v:?}")))?,
        );
    }
    Weights::with_tolerance(labels, p, WEIGHT_FILE_TOL)
}

/// A generated portfolio history. Unlike [`PriceSeries`] it may contain
/// non-positive values (long-short portfolios); `nonpositive` flags that.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioPath {
    pub label: String,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
    pub anchor: Option<Anchor>,
    pub nonpositive: bool,
}

impl PortfolioPath {
    fn new(label: &str, dates: Vec<NaiveDate>, values: Vec<f64>, anchor: Option<Anchor>) -> Self {
        let nonpositive = values.iter().any(|v| *v <= 0.0);
        PortfolioPath {
            label: label.to_string(),
            dates,
            values,
            anchor,
            nonpositive,
        }
    }

    pub fn to_series(&self) -> Result<PriceSeries> {
        let s = PriceSeries::new(self.label.clone(), self.dates.clone(), self.values.clone())?;
        match self.anchor {
            Some(a) => crate::market_data::normalize(&s, a.date, a.base),
            None => Ok(s),
        }
    }
}

/// Buy-and-hold path `a_P(t) = sum_j p_j a_j(t)`.
pub fn unattended_path(panel: &PricePanel, w: &Weights, label: &str) -> Result<PortfolioPath> {
    let idx = w.column_indices(panel)?;
    let cols = panel.columns();
    let values = (0..panel.n_rows())
        .map(|t| idx.iter().zip(w.proportions()).map(|(&j, p)| p * cols[j][t]).sum())
        .collect();
    Ok(PortfolioPath::new(
        label,
        panel.dates().to_vec(),
        values,
        panel.anchor(),
    ))
}

/// Path rebalanced to `w` at every close, starting from the panel's anchor
/// base (or 100 when the panel has no anchor) on the first date.
pub fn reallocated_path(panel: &PricePanel, w: &Weights, label: &str) -> Result<PortfolioPath> {
    let start = panel.anchor().map_or(DEFAULT_BASE, |a| a.base);
    reallocated_path_from(panel, w, label, start)
}

/// Reallocated path seeded with `start` on the panel's first date.
pub fn reallocated_path_from(panel: &PricePanel, w: &Weights, label: &str, start: f64) -> Result<PortfolioPath> {
    if panel.n_rows() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: panel.n_rows(),
        });
    }
    let idx = w.column_indices(panel)?;
    let cols = panel.columns();
    for &j in &idx {
        if cols[j].iter().any(|v| *v <= 0.0) {
            return Err(Error::domain(format!(
                "column {} has non-positive prices",
                panel.labels()[j]
            )));
        }
    }
    let mut values = Vec::with_capacity(panel.n_rows());
    values.push(start);
    for t in 1..panel.n_rows() {
        let r: f64 = idx
            .iter()
            .zip(w.proportions())
            .map(|(&j, p)| p * (cols[j][t] / cols[j][t - 1] - 1.0))
            .sum();
        let prev = values[t - 1];
        values.push(prev * (1.0 + r));
    }
    let anchor = if panel.anchor().map(|a| a.date) == Some(panel.dates()[0]) {
        Some(Anchor::new(panel.dates()[0], start))
    } else {
        None
    };
    Ok(PortfolioPath::new(label, panel.dates().to_vec(), values, anchor))
}

/// Effective proportions `p_j a_j(date) / a_P(date)` of an unattended portfolio.
pub fn holdings_proportions(panel: &PricePanel, w: &Weights, date: NaiveDate) -> Result<Vec<f64>> {
    let t = panel.index_of(date).ok_or(Error::UnknownDate(date))?;
    let idx = w.column_indices(panel)?;
    let parts: Vec<f64> = idx
        .iter()
        .zip(w.proportions())
        .map(|(&j, p)| p * panel.columns()[j][t])
        .collect();
    let total: f64 = parts.iter().sum();
    if total == 0.0 {
        return Err(Error::domain(format!("portfolio value is zero on {date}")));
    }
    Ok(parts.into_iter().map(|x| x / total).collect())
}

/// Total return and pure-risk vector of one price history.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskCoordinates {
    e0: f64,
    z0: Vec<f64>,
}

impl RiskCoordinates {
    /// `z0` must sum to zero (within 1e-12 relative to its 1-norm).
    pub fn new(e0: f64, z0: Vec<f64>) -> Result<Self> {
        if z0.is_empty() {
            return Err(Error::InsufficientData { required: 1, actual: 0 });
        }
        if !e0.is_finite() || z0.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite risk coordinates"));
        }
        let sum: f64 = z0.iter().sum();
        let scale = z0.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        if sum.abs() > 1e-12 * scale {
            return Err(Error::domain(format!("risk vector sums to {sum:e}, not 0")));
        }
        Ok(RiskCoordinates { e0, z0 })
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn z0(&self) -> &[f64] {
        &self.z0
    }

    pub fn n(&self) -> usize {
        self.z0.len()
    }

    /// `a_i = base (1 + sum_{k<=i} (z_k + e0/n))`, with `a_0 = base`; length `n + 1`.
    pub fn reconstruct(&self, base: f64) -> Result<Vec<f64>> {
        let drift = self.e0 / self.n() as f64;
        let mut level = 1.0;
        let mut out = Vec::with_capacity(self.n() + 1);
        out.push(base);
        for (i, z) in self.z0.iter().enumerate() {
            level += z + drift;
            let a = base * level;
            if a <= 0.0 {
                return Err(Error::domain(format!("path crosses zero at period {}", i + 1)));
            }
            out.push(a);
        }
        Ok(out)
    }
}

/// Rebuild a price series from its total return and risk vector. `dates`
/// must hold `n + 1` market days, the first being the anchor.
pub fn reconstruct_from_risk(
    rc: &RiskCoordinates,
    base: f64,
    label: &str,
    dates: Vec<NaiveDate>,
) -> Result<PriceSeries> {
    if dates.len() != rc.n() + 1 {
        return Err(Error::DimensionMismatch {
            expected: rc.n() + 1,
            actual: dates.len(),
        });
    }
    let anchor = dates[0];
    let s = PriceSeries::new(label, dates, rc.reconstruct(base)?)?;
    crate::market_data::normalize(&s, anchor, base)
}
