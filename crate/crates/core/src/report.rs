//! CSV renderings of moment tables, frontiers, and identity reports.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fmt::fixed;
use crate::linear::{gram, RiskTable};
use crate::returns::IdentityReport;
use crate::traditional::{FrontierResult, MomentTable};

fn row(out: &mut String, name: &str, values: impl IntoIterator<Item = f64>, decimals: usize) {
    out.push_str(name);
    for v in values {
        out.push(',');
        out.push_str(&fixed(v, decimals));
    }
    out.push('\n');
}

fn header(out: &mut String, first: &str, labels: &[String]) {
    out.push_str(first);
    for l in labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
}

fn matrix_rows(out: &mut String, labels: &[String], m: &DMatrix<f64>, decimals: usize) {
    for (i, l) in labels.iter().enumerate() {
        row(out, l, m.row(i).iter().cloned(), decimals);
    }
}

/// `E` row, `sigma` row, then one covariance row per instrument.
pub fn moments_csv(mt: &MomentTable, decimals: usize) -> String {
    let mut out = String::new();
    header(&mut out, "row", &mt.labels);
    row(&mut out, "E", mt.mean.iter().cloned(), decimals);
    row(&mut out, "sigma", mt.sigma.iter().cloned(), decimals);
    matrix_rows(&mut out, &mt.labels, &mt.cov, decimals);
    out
}

/// `E0` row, `sigma0` row, then the Gram covariance.
pub fn linear_csv(rt: &RiskTable, decimals: usize) -> String {
    let mut out = String::new();
    header(&mut out, "row", &rt.labels);
    row(&mut out, "E0", rt.e0.iter().cloned(), decimals);
    row(&mut out, "sigma0", rt.sigma0.iter().cloned(), decimals);
    matrix_rows(&mut out, &rt.labels, &gram(rt), decimals);
    out
}

/// `target,<weights...>,e,sigma`, one line per frontier point.
pub fn frontier_csv(f: &FrontierResult, decimals: usize) -> String {
    let mut out = String::from("target");
    for l in &f.labels {
        out.push(',');
        out.push_str(l);
    }
    out.push_str(",e,sigma\n");
    for ((t, w), (e, s)) in f.targets.iter().zip(&f.weights).zip(&f.achieved) {
        out.push_str(&fixed(*t, decimals));
        for x in w {
            out.push(',');
            out.push_str(&fixed(*x, decimals));
        }
        out.push(',');
        out.push_str(&fixed(*e, decimals));
        out.push(',');
        out.push_str(&fixed(*s, decimals));
        out.push('\n');
    }
    out
}

pub fn identity_csv(rows: &[(String, IdentityReport)], decimals: usize) -> String {
    let mut out = String::from("label,e_r,e_d,e0,e1,product_r_d,product_0_1\n");
    for (l, r) in rows {
        row(
            &mut out,
            l,
            [r.e_r, r.e_d, r.e0, r.e1, r.product_r_d, r.product_0_1],
            decimals,
        );
    }
    out
}

/// Read back a table written by [`moments_csv`].
pub fn parse_moments_csv(text: &str) -> Result<MomentTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or_else(|| Error::parse(1, "empty moment table"))?;
    let mut cells = head.split(',').map(str::trim);
    if cells.next() != Some("row") {
        return Err(Error::parse(1, "moment table header must start with \"row\""));
    }
    let labels: Vec<String> = cells.map(String::from).collect();
    let m = labels.len();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let mut cells = line.split(',').map(str::trim);
        let name = cells.next().unwrap_or_default().to_string();
        let vals = cells
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|_| Error::parse(i + 1, format!("bad number {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != m {
            return Err(Error::parse(
                i + 1,
                format!("expected {m} values, found {}", vals.len()),
            ));
        }
        rows.push((i + 1, name, vals));
    }
    if rows.len() != m + 2 || rows[0].1 != "E" || rows[1].1 != "sigma" {
        return Err(Error::parse(
            1,
            "expected E, sigma, then one covariance row per instrument",
        ));
    }
    let mean = rows[0].2.clone();
    let mut cov = DMatrix::zeros(m, m);
    for (r, (row, name, vals)) in rows[2..].iter().enumerate() {
        if name != &labels[r] {
            return Err(Error::parse(*row, format!("expected covariance row {}", labels[r])));
        }
        for (c, v) in vals.iter().enumerate() {
            cov[(r, c)] = *v;
        }
    }
    let cov = (&cov + cov.transpose()) * 0.5;
    MomentTable::new(labels, mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_layout() {
        let mt = MomentTable::new(
            vec!["A".into(), "B".into()],
            vec![0.1, 0.2],
            DMatrix::from_row_slice(2, 2, &[0.04, 0.01, 0.01, 0.09]),
        )
        .unwrap();
        assert_eq!(
            moments_csv(&mt, 4),
            "row,A,B\nE,0.1000,0.2000\nsigma,0.2000,0.3000\nA,0.0400,0.0100\nB,0.0100,0.0900\n"
        );
        let back = parse_moments_csv(&moments_csv(&mt, 6)).unwrap();
        assert_eq!(back, mt);
        assert!(parse_moments_csv("row,A\nE,1\n").is_err());
        assert!(parse_moments_csv("date,A\n").is_err());
    }
}
