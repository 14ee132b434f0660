//! Periodic returns and discounts, effective return/discount, anchored
//! increments, annualization, and the theory-of-interest identity report.
//!
//! Everything here is a dimensionless fraction. Standard deviations are the
//! population form (divide by `n`), and annualization factors are always
//! passed in explicitly (252 for daily, 4 for quarterly data).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodicKind {
    /// `a_i / a_{i-1} - 1`
    Return,
    /// `1 - a_{i-1} / a_i`
    Discount,
    /// `(a_i - a_{i-1}) / a_0`, changes in window-to-date return.
    AnchoredStart,
    /// `(a_i - a_{i-1}) / a_n`, changes in date-to-window-end discount.
    AnchoredEnd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSeries {
    pub kind: PeriodicKind,
    pub values: Vec<f64>,
    pub periods_per_year: f64,
}

impl PeriodicSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Which end of the window anchored increments are divided by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorEnd {
    Start,
    End,
}

fn check_prices(a: &[f64]) -> Result<()> {
    if a.len() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: a.len(),
        });
    }
    if let Some(v) = a.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::domain(format!("price {v} is not strictly positive")));
    }
    Ok(())
}

pub fn periodic_returns(a: &[f64], periods_per_year: f64) -> Result<PeriodicSeries> {
    check_prices(a)?;
    Ok(PeriodicSeries {
        kind: PeriodicKind::Return,
        values: a.windows(2).map(|w| w[1] / w[0] - 1.0).collect(),
        periods_per_year,
    })
}

pub fn periodic_discounts(a: &[f64], periods_per_year: f64) -> Result<PeriodicSeries> {
    check_prices(a)?;
    Ok(PeriodicSeries {
        kind: PeriodicKind::Discount,
        values: a.windows(2).map(|w| 1.0 - w[0] / w[1]).collect(),
        periods_per_year,
    })
}

/// `(a1 - a0) / a0`
pub fn effective_return(a0: f64, a1: f64) -> Result<f64> {
    check_prices(&[a0, a1])?;
    Ok((a1 - a0) / a0)
}

/// `(a1 - a0) / a1`
pub fn effective_discount(a0: f64, a1: f64) -> Result<f64> {
    check_prices(&[a0, a1])?;
    Ok((a1 - a0) / a1)
}

/// Price increments divided by the first or the last price. They telescope:
/// the start-anchored sum is the effective return over the window, the
/// end-anchored sum the effective discount.
pub fn anchored_increments(a: &[f64], end: AnchorEnd, periods_per_year: f64) -> Result<PeriodicSeries> {
    check_prices(a)?;
    let (kind, denom) = match end {
        AnchorEnd::Start => (PeriodicKind::AnchoredStart, a[0]),
        AnchorEnd::End => (PeriodicKind::AnchoredEnd, a[a.len() - 1]),
    };
    Ok(PeriodicSeries {
        kind,
        values: a.windows(2).map(|w| (w[1] - w[0]) / denom).collect(),
        periods_per_year,
    })
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population standard deviation (divides by `n`).
pub fn population_std(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

/// `periods_per_year * mean`
pub fn annualized_mean(ps: &PeriodicSeries) -> Result<f64> {
    if ps.is_empty() {
        return Err(Error::InsufficientData { required: 1, actual: 0 });
    }
    Ok(ps.periods_per_year * mean(&ps.values))
}

/// `sqrt(periods_per_year) * population std`
pub fn annualized_std(ps: &PeriodicSeries) -> Result<f64> {
    if ps.is_empty() {
        return Err(Error::InsufficientData { required: 1, actual: 0 });
    }
    Ok(ps.periods_per_year.sqrt() * population_std(&ps.values))
}

/// Mean-return vs. total-return diagnostics for one price series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    /// Annualized mean periodic return.
    pub e_r: f64,
    /// Annualized mean periodic discount.
    pub e_d: f64,
    /// Total return over the window (sum of start-anchored increments).
    pub e0: f64,
    /// Total discount over the window (sum of end-anchored increments).
    pub e1: f64,
    /// `(1 + e_r)(1 - e_d)`; generally not 1.
    pub product_r_d: f64,
    /// `(1 + e0)(1 - e1)`; always 1 up to rounding.
    pub product_0_1: f64,
}

pub fn interest_identity_report(a: &[f64], periods_per_year: f64) -> Result<IdentityReport> {
    let e_r = annualized_mean(&periodic_returns(a, periods_per_year)?)?;
    let e_d = annualized_mean(&periodic_discounts(a, periods_per_year)?)?;
    let e0 = anchored_increments(a, AnchorEnd::Start, periods_per_year)?.sum();
    let e1 = anchored_increments(a, AnchorEnd::End, periods_per_year)?.sum();
    Ok(IdentityReport {
        e_r,
        e_d,
        e0,
        e1,
        product_r_d: (1.0 + e_r) * (1.0 - e_d),
        product_0_1: (1.0 + e0) * (1.0 - e1),
    })
}
