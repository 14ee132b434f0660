//! Sectioned-CSV container for an orthogonal decomposition.
//!
//! ```text
//! #U,<n>,<k>          n rows of k values
//! #E0,<m>             one row of m values
//! #Ztilde,<k>,<m>     k rows of m values
//! #dates,<n+1>        one date per line, anchor first
//! #labels,<m>         one comma-separated row
//! #legend             free text until end of file
//! ```
//!
//! Numbers carry 12 significant digits. Files are UTF-8 with LF endings.

use chrono::NaiveDate;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fmt::sig12;
use crate::linear::{OrthoBasis, RiskTable};
use crate::market_data::{PricePanel, DEFAULT_BASE};
use crate::portfolio::RiskCoordinates;

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    /// `n x k`, orthonormal zero-sum columns.
    pub u: DMatrix<f64>,
    /// Total return per stored instrument.
    pub e0: Vec<f64>,
    /// `k x m` risk coordinates.
    pub ztilde: DMatrix<f64>,
    /// The `n + 1` market days, anchor first.
    pub dates: Vec<NaiveDate>,
    pub labels: Vec<String>,
    pub legend: Vec<String>,
}

impl Bundle {
    /// Keep the named instruments of a decomposition.
    pub fn from_basis(basis: &OrthoBasis, rt: &RiskTable, keep: &[&str], legend: Vec<String>) -> Result<Bundle> {
        let sub = basis.select(keep)?;
        let e0 = keep
            .iter()
            .map(|l| rt.index_of(l).map(|j| rt.e0[j]))
            .collect::<Result<Vec<_>>>()?;
        let b = Bundle {
            u: sub.u,
            e0,
            ztilde: sub.ztilde,
            dates: rt.dates.clone(),
            labels: sub.labels,
            legend,
        };
        b.validate()?;
        Ok(b)
    }

    fn validate(&self) -> Result<()> {
        let (n, k) = self.u.shape();
        let m = self.labels.len();
        if self.ztilde.shape() != (k, m) {
            return Err(Error::DimensionMismatch {
                expected: k * m,
                actual: self.ztilde.len(),
            });
        }
        if self.e0.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: self.e0.len(),
            });
        }
        if !self.dates.is_empty() && self.dates.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                actual: self.dates.len(),
            });
        }
        Ok(())
    }

    pub fn n_periods(&self) -> usize {
        self.u.nrows()
    }

    /// `(e0_j, U ztilde_j)` for one stored instrument.
    pub fn coordinates(&self, label: &str) -> Result<RiskCoordinates> {
        let j = self
            .labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        let z = &self.u * self.ztilde.column(j);
        RiskCoordinates::new(self.e0[j], z.iter().cloned().collect())
    }

    /// Gram covariance of the stored instruments, `Ztilde' Ztilde`.
    pub fn gram(&self) -> DMatrix<f64> {
        self.ztilde.transpose() * &self.ztilde
    }

    /// Rebuild every stored price history, starting from `base`.
    pub fn reconstruct(&self, base: f64) -> Result<PricePanel> {
        let columns = self
            .labels
            .iter()
            .map(|l| self.coordinates(l)?.reconstruct(base))
            .collect::<Result<Vec<_>>>()?;
        let panel = PricePanel::new(self.dates.clone(), self.labels.clone(), columns)?;
        let anchor = crate::market_data::Anchor::new(self.dates[0], base);
        panel.with_anchor(anchor)
    }

    /// [`Bundle::reconstruct`] at the default base of 100.
    pub fn reconstruct_default(&self) -> Result<PricePanel> {
        self.reconstruct(DEFAULT_BASE)
    }
}

fn push_row<'a>(out: &mut String, values: impl Iterator<Item = &'a f64>) {
    let row: Vec<String> = values.map(|v| sig12(*v)).collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

pub fn save_bundle(b: &Bundle) -> String {
    let (n, k) = b.u.shape();
    let m = b.labels.len();
    let mut out = String::new();
    out.push_str(&format!("#U,{n},{k}\n"));
    if k > 0 {
        for row in b.u.row_iter() {
            push_row(&mut out, row.iter());
        }
    }
    out.push_str(&format!("#E0,{m}\n"));
    push_row(&mut out, b.e0.iter());
    out.push_str(&format!("#Ztilde,{k},{m}\n"));
    if m > 0 {
        for row in b.ztilde.row_iter() {
            push_row(&mut out, row.iter());
        }
    }
    out.push_str(&format!("#dates,{}\n", b.dates.len()));
    for d in &b.dates {
        out.push_str(&d.format("%Y-%m-%d").to_string());
        out.push('\n');
    }
    out.push_str(&format!("#labels,{m}\n"));
    out.push_str(&b.labels.join(","));
    out.push('\n');
    out.push_str("#legend\n");
    for line in &b.legend {
        out.push_str(line);
        out.push('\n');
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| Error::parse(0, "unexpected end of bundle"))
    }

    fn header(&mut self, name: &str, dims: usize) -> Result<Vec<usize>> {
        let (row, line) = self.next_line()?;
        let mut parts = line.trim().split(',');
        if parts.next() != Some(name) {
            return Err(Error::parse(row, format!("expected section {name}")));
        }
        let out = parts
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::parse(row, format!("bad size {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if out.len() != dims {
            return Err(Error::parse(row, format!("{name} needs {dims} sizes")));
        }
        Ok(out)
    }

    fn numbers(&mut self, width: usize) -> Result<Vec<f64>> {
        let (row, line) = self.next_line()?;
        let line = line.trim();
        if width == 0 && line.is_empty() {
            return Ok(Vec::new());
        }
        let vals = line
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(row, format!("bad number {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != width {
            return Err(Error::parse(
                row,
                format!("expected {width} values, found {}", vals.len()),
            ));
        }
        Ok(vals)
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        if cols == 0 || rows == 0 {
            return Ok(DMatrix::zeros(rows, cols));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(self.numbers(cols)?);
        }
        Ok(DMatrix::from_row_slice(rows, cols, &data))
    }
}

pub fn load_bundle(text: &str) -> Result<Bundle> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let uh = lines.header("#U", 2)?;
    let u = lines.matrix(uh[0], uh[1])?;
    let m = lines.header("#E0", 1)?[0];
    let e0 = lines.numbers(m)?;
    let zh = lines.header("#Ztilde", 2)?;
    let ztilde = lines.matrix(zh[0], zh[1])?;
    let nd = lines.header("#dates", 1)?[0];
    let mut dates = Vec::with_capacity(nd);
    for _ in 0..nd {
        let (row, line) = lines.next_line()?;
        dates.push(
            NaiveDate::parse_from_str(line.trim(), "%Y-%m-%d")
                .map_err(|e| Error::parse(row, format!("bad date {line:?}: {e}")))?,
        );
    }
    let ml = lines.header("#labels", 1)?[0];
    let (row, line) = lines.next_line()?;
    let labels: Vec<String> = if ml == 0 {
        Vec::new()
    } else {
        line.split(',').map(|s| s.trim().to_string()).collect()
    };
    if labels.len() != ml {
        return Err(Error::parse(row, format!("expected {ml} labels")));
    }
    let (row, line) = lines.next_line()?;
    if line.trim() != "#legend" {
        return Err(Error::parse(row, "expected section #legend"));
    }
    let legend = lines.inner.map(|(_, l)| l.to_string()).collect();
    let b = Bundle {
        u,
        e0,
        ztilde,
        dates,
        labels,
        legend,
    };
    b.validate()?;
    Ok(b)
}
