//! The linear total-return / pure-risk model.
//!
//! For a price column `a_0..a_n` the anchored increments
//! `r0_i = (a_i - a_{i-1}) / a_0` sum to the total return `e0 = (a_n - a_0) / a_0`.
//! Removing the mean increment gives the risk vector `z0 = r0 - e0/n`, which
//! sums to zero. Risk magnitude is `|z0|` and the covariance is the Gram
//! matrix `Z0' Z0`. Unattended portfolios are affine in both `e0` and `z0`.

use std::fmt;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::market_data::PricePanel;
use crate::portfolio::RiskCoordinates;

/// Total returns, risk magnitudes, and the `n x m` pure-risk matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskTable {
    pub labels: Vec<String>,
    pub e0: Vec<f64>,
    pub sigma0: Vec<f64>,
    pub z0: DMatrix<f64>,
    /// The `n + 1` dates of the window, anchor first.
    pub dates: Vec<NaiveDate>,
}

impl RiskTable {
    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn n_periods(&self) -> usize {
        self.z0.nrows()
    }

    pub fn coordinates(&self, label: &str) -> Result<RiskCoordinates> {
        let j = self.index_of(label)?;
        RiskCoordinates::new(self.e0[j], self.z0.column(j).iter().cloned().collect())
    }

    /// Total discount `e1 = e0 / (1 + e0)` per column.
    pub fn e1(&self) -> Vec<f64> {
        self.e0.iter().map(|e| e / (1.0 + e)).collect()
    }
}

/// Total returns and pure-risk matrix of every panel column. The window
/// starts at the first row, which must be the anchor when one is set.
pub fn linear_moments(panel: &PricePanel) -> Result<RiskTable> {
    if panel.n_rows() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: panel.n_rows(),
        });
    }
    if let Some(a) = panel.anchor() {
        if a.date != panel.dates()[0] {
            return Err(Error::domain(format!(
                "the linear model needs the window to start at the anchor; anchor {} but first date {}",
                a.date,
                panel.dates()[0]
            )));
        }
    }
    let n = panel.n_rows() - 1;
    let m = panel.n_cols();
    let mut z0 = DMatrix::zeros(n, m);
    let mut e0 = Vec::with_capacity(m);
    for (j, col) in panel.columns().iter().enumerate() {
        let base = col[0];
        if base.is_nan() || base <= 0.0 {
            return Err(Error::domain(format!(
                "column {} starts at {base}, not a positive price",
                panel.labels()[j]
            )));
        }
        let inc: Vec<f64> = col.windows(2).map(|w| (w[1] - w[0]) / base).collect();
        let total: f64 = inc.iter().sum();
        let drift = total / n as f64;
        for (i, r) in inc.iter().enumerate() {
            z0[(i, j)] = r - drift;
        }
        e0.push(total);
    }
    let sigma0 = (0..m).map(|j| z0.column(j).norm()).collect();
    Ok(RiskTable {
        labels: panel.labels().to_vec(),
        e0,
        sigma0,
        z0,
        dates: panel.dates().to_vec(),
    })
}

/// Gram covariance `Z0' Z0`.
pub fn gram(rt: &RiskTable) -> DMatrix<f64> {
    let g = rt.z0.transpose() * &rt.z0;
    (&g + g.transpose()) * 0.5
}

/// One Gram-Schmidt step's input direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pivot {
    Column(String),
    /// `z_first - z_second`
    Difference(String, String),
}

impl Pivot {
    /// `"FBT"` names a column, `"FBT-XBI"` a difference. An exact column
    /// match wins over splitting on `-`.
    pub fn parse(s: &str, labels: &[String]) -> Result<Pivot> {
        let s = s.trim();
        if labels.iter().any(|l| l == s) {
            return Ok(Pivot::Column(s.to_string()));
        }
        match s.split_once('-') {
            Some((a, b)) if labels.iter().any(|l| l == a.trim()) && labels.iter().any(|l| l == b.trim()) => {
                Ok(Pivot::Difference(a.trim().to_string(), b.trim().to_string()))
            }
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }

    /// `(first - second, first, reallocated)`: the difference direction, then
    /// the first fund, then a reallocated portfolio that leaves the plane.
    pub fn two_fund_default(first: &str, second: &str, reallocated: &str) -> Vec<Pivot> {
        vec![
            Pivot::Difference(first.to_string(), second.to_string()),
            Pivot::Column(first.to_string()),
            Pivot::Column(reallocated.to_string()),
        ]
    }

    fn direction(&self, rt: &RiskTable) -> Result<DVector<f64>> {
        match self {
            Pivot::Column(l) => Ok(rt.z0.column(rt.index_of(l)?).into_owned()),
            Pivot::Difference(a, b) => Ok(rt.z0.column(rt.index_of(a)?) - rt.z0.column(rt.index_of(b)?)),
        }
    }
}

impl fmt::Display for Pivot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pivot::Column(l) => write!(f, "{l}"),
            Pivot::Difference(a, b) => write!(f, "{a}-{b}"),
        }
    }
}

/// A pivot whose deflated direction vanished (rank deficiency).
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedPivot {
    pub pivot: Pivot,
    /// `|deflated| / |input|`
    pub residual_ratio: f64,
}

/// `Z0 = U Ztilde` with orthonormal, zero-sum columns in `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis {
    pub labels: Vec<String>,
    pub u: DMatrix<f64>,
    pub ztilde: DMatrix<f64>,
    pub skipped: Vec<SkippedPivot>,
}

/// Deflated directions shorter than this fraction of their input are skipped.
pub const PIVOT_TOL: f64 = 1e-12;

/// Classical Gram-Schmidt over the pivot directions with one
/// re-orthogonalization pass; `Ztilde = U' Z0`.
pub fn orthogonalize(rt: &RiskTable, pivots: &[Pivot]) -> Result<OrthoBasis> {
    let n = rt.n_periods();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut skipped = Vec::new();
    for pivot in pivots {
        let v0 = pivot.direction(rt)?;
        let norm0 = v0.norm();
        let mut v = v0;
        for _ in 0..2 {
            for u in &basis {
                let c = u.dot(&v);
                v.axpy(-c, u, 1.0);
            }
        }
        let norm = v.norm();
        if norm0 == 0.0 || norm <= PIVOT_TOL * norm0 {
            skipped.push(SkippedPivot {
                pivot: pivot.clone(),
                residual_ratio: if norm0 == 0.0 { 0.0 } else { norm / norm0 },
            });
            continue;
        }
        basis.push(v / norm);
    }
    let u = if basis.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&basis)
    };
    let ztilde = u.transpose() * &rt.z0;
    Ok(OrthoBasis {
        labels: rt.labels.clone(),
        u,
        ztilde,
        skipped,
    })
}

impl OrthoBasis {
    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    /// Frobenius norm of `U'U - I` (an upper bound on the spectral norm).
    pub fn orthonormality_error(&self) -> f64 {
        let k = self.u.ncols();
        (self.u.transpose() * &self.u - DMatrix::<f64>::identity(k, k)).norm()
    }

    pub fn column_means(&self) -> Vec<f64> {
        let n = self.u.nrows().max(1) as f64;
        self.u.column_iter().map(|c| c.sum() / n).collect()
    }

    /// Largest entry of `|U Ztilde - Z0|`.
    pub fn reconstruction_error(&self, z0: &DMatrix<f64>) -> f64 {
        (&self.u * &self.ztilde - z0).amax()
    }

    /// Coordinates of the named columns only.
    pub fn select(&self, labels: &[&str]) -> Result<OrthoBasis> {
        let idx = labels
            .iter()
            .map(|l| {
                self.labels
                    .iter()
                    .position(|x| x == l)
                    .ok_or_else(|| Error::UnknownLabel(l.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OrthoBasis {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            u: self.u.clone(),
            ztilde: self.ztilde.select_columns(&idx),
            skipped: self.skipped.clone(),
        })
    }
}
