//! Fixtures and oracles shared by the integration tests.
#![allow(dead_code)]

use chrono::NaiveDate;
use mvledger::market_data::{DistributionEvent, RawQuote};
use mvledger::{Anchor, PricePanel};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn d(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

/// December 2014 adjusted closes: date, FBT, XBI, UIP, CRP.
pub const DECEMBER: [(&str, f64, f64, f64, f64); 22] = [
    ("2014-12-01", 145.736, 135.477, 143.171, 143.490),
    ("2014-12-02", 147.918, 139.052, 145.702, 146.048),
    ("2014-12-03", 148.034, 139.184, 145.821, 146.169),
    ("2014-12-04", 147.123, 138.121, 144.873, 145.215),
    ("2014-12-05", 148.150, 140.580, 146.258, 146.622),
    ("2014-12-08", 151.214, 141.417, 148.765, 149.114),
    ("2014-12-09", 151.807, 145.504, 150.231, 150.630),
    ("2014-12-10", 148.699, 142.379, 147.119, 147.508),
    ("2014-12-11", 148.786, 142.720, 147.269, 147.661),
    ("2014-12-12", 146.878, 142.480, 145.778, 146.179),
    ("2014-12-15", 142.657, 136.400, 141.093, 141.469),
    ("2014-12-16", 140.807, 135.609, 139.507, 139.888),
    ("2014-12-17", 145.851, 142.076, 144.907, 145.314),
    ("2014-12-18", 150.737, 146.628, 149.710, 150.129),
    ("2014-12-19", 152.212, 147.990, 151.156, 151.579),
    ("2014-12-22", 150.463, 146.886, 149.569, 149.990),
    ("2014-12-23", 143.842, 139.313, 142.710, 143.107),
    ("2014-12-24", 145.968, 141.988, 144.973, 145.380),
    ("2014-12-26", 149.554, 145.261, 148.481, 148.897),
    ("2014-12-29", 150.017, 145.790, 148.960, 149.378),
    ("2014-12-30", 148.151, 144.258, 147.178, 147.592),
    ("2014-12-31", 147.544, 144.973, 146.901, 147.321),
];

/// FBT and XBI columns of the December table.
pub fn december_panel() -> PricePanel {
    PricePanel::new(
        DECEMBER.iter().map(|r| d(r.0)).collect(),
        vec!["FBT".into(), "XBI".into()],
        vec![
            DECEMBER.iter().map(|r| r.1).collect(),
            DECEMBER.iter().map(|r| r.2).collect(),
        ],
    )
    .unwrap()
}

/// XBI closes around its 2014 ex-dates: date, dividend, close, adjusted close.
pub const XBI_2014: [(&str, f64, f64, f64); 10] = [
    ("2013-12-31", 0.0, 130.20, 100.000),
    ("2014-03-20", 0.0, 160.17, 123.018),
    ("2014-03-21", 0.333023, 153.15, 117.872),
    ("2014-06-19", 0.0, 153.32, 118.003),
    ("2014-06-20", 0.616142, 153.42, 118.556),
    ("2014-09-18", 0.0, 159.94, 123.594),
    ("2014-09-19", 0.562774, 158.27, 122.736),
    ("2014-12-18", 0.0, 189.08, 146.628),
    ("2014-12-19", 0.490997, 190.34, 147.990),
    ("2014-12-31", 0.0, 186.46, 144.973),
];

pub fn xbi_quotes() -> Vec<RawQuote> {
    XBI_2014
        .iter()
        .map(|r| RawQuote {
            date: d(r.0),
            close: r.2,
            adj_close: None,
        })
        .collect()
}

pub fn xbi_dividends() -> Vec<DistributionEvent> {
    XBI_2014
        .iter()
        .filter(|r| r.1 > 0.0)
        .map(|r| DistributionEvent {
            ex_date: d(r.0),
            amount: r.1,
        })
        .collect()
}

/// Quarterly swings used for the theory-of-interest identities.
pub const SWINGS: [f64; 5] = [100.0, 150.0, 50.0, 150.0, 125.0];

pub fn market_days(n: usize) -> Vec<NaiveDate> {
    let start = d("2013-12-31");
    (0..n).map(|i| start + chrono::Days::new(i as u64)).collect()
}

/// A random panel anchored at 100 on its first row, columns labelled `S0..`.
pub fn random_panel(rng: &mut ChaCha8Rng, m: usize, periods: usize) -> PricePanel {
    let columns = (0..m)
        .map(|_| {
            let vol = rng.gen_range(0.005..0.04);
            let drift = rng.gen_range(-0.001..0.002);
            let mut a = vec![100.0];
            for _ in 0..periods {
                let r: f64 = drift + vol * rng.gen_range(-1.7..1.7);
                a.push(a.last().unwrap() * (1.0 + r));
            }
            a
        })
        .collect();
    PricePanel::new(
        market_days(periods + 1),
        (0..m).map(|j| format!("S{j}")).collect(),
        columns,
    )
    .unwrap()
    .with_anchor(Anchor::new(d("2013-12-31"), 100.0))
    .unwrap()
}

/// Random PSD covariance, sometimes rank-deficient.
pub fn random_psd(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<f64> {
    let rank = rng.gen_range(1..=m);
    let a = DMatrix::from_fn(m, rank, |_, _| rng.gen_range(-0.4..0.4));
    let v = &a * a.transpose();
    (&v + v.transpose()) * 0.5
}

/// Smallest `p'Vp` over the long-only simplex with `Ep = target`, by a dense
/// grid of step 1e-3 over one coordinate (the remaining one or two
/// coordinates are then fixed by the constraints).
pub fn grid_min_variance(mean: &[f64], cov: &DMatrix<f64>, target: f64) -> Option<f64> {
    let var = |p: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..p.len() {
            for j in 0..p.len() {
                s += p[i] * cov[(i, j)] * p[j];
            }
        }
        s
    };
    let feasible = |p: &[f64]| p.iter().all(|x| *x >= -1e-12);
    match mean.len() {
        1 => ((mean[0] - target).abs() < 1e-12).then(|| var(&[1.0])),
        2 => {
            if (mean[0] - mean[1]).abs() < 1e-15 {
                let mut best = f64::INFINITY;
                for k in 0..=1000 {
                    let t = k as f64 / 1000.0;
                    best = best.min(var(&[t, 1.0 - t]));
                }
                return ((mean[0] - target).abs() < 1e-12).then_some(best);
            }
            let t = (target - mean[1]) / (mean[0] - mean[1]);
            let p = [t, 1.0 - t];
            feasible(&p).then(|| var(&p))
        }
        3 => {
            // step each coordinate in turn, so optima on an edge are hit exactly
            let mut best: Option<f64> = None;
            for g in 0..3 {
                let o: Vec<usize> = (0..3).filter(|&i| i != g).collect();
                let (i, j) = (o[0], o[1]);
                if (mean[i] - mean[j]).abs() < 1e-9 {
                    continue;
                }
                for k in 0..=1000 {
                    let pg = k as f64 / 1000.0;
                    let rest = 1.0 - pg;
                    let t = target - pg * mean[g];
                    // p_i + p_j = rest, E_i p_i + E_j p_j = t
                    let pi = (t - mean[j] * rest) / (mean[i] - mean[j]);
                    let mut p = [0.0; 3];
                    p[g] = pg;
                    p[i] = pi;
                    p[j] = rest - pi;
                    if feasible(&p) {
                        let v = var(&p);
                        best = Some(best.map_or(v, |b: f64| b.min(v)));
                    }
                }
            }
            best
        }
        _ => unimplemented!("grid oracle covers two or three assets"),
    }
}
