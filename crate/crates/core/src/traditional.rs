//! The traditional periodic-return moment model.
//!
//! Moments are annualized means and population covariances of periodic
//! returns. The long-only efficient frontier is solved exactly by enumerating
//! every support pattern of the weight vector: for each subset of assets the
//! equality-constrained problem `min p'Vp s.t. Ep = target, sum p = 1` is
//! solved through its KKT system (least squares, so singular `V` is fine),
//! infeasible patterns are discarded, and the best objective wins. Ties are
//! broken by smallest support, then by the lexicographically smallest label
//! set.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::market_data::PricePanel;
use crate::portfolio::Weights;
use crate::returns::{annualized_mean, annualized_std, periodic_returns};

/// Eigenvalues of `V` down to `-PSD_TOL` are accepted and clamped to zero.
pub const PSD_TOL: f64 = 1e-10;
/// Largest asset count the exhaustive frontier solver accepts.
pub const MAX_FRONTIER_ASSETS: usize = 16;

const FEAS_TOL: f64 = 1e-9;
const SUPPORT_TOL: f64 = 1e-12;

/// Annualized mean vector, deviations, and covariance of periodic returns.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub labels: Vec<String>,
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
    pub cov: DMatrix<f64>,
}

impl MomentTable {
    /// Build from a mean vector and covariance; `sigma` is taken from the diagonal.
    pub fn new(labels: Vec<String>, mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let m = labels.len();
        if mean.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: mean.len(),
            });
        }
        if cov.nrows() != m || cov.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: cov.nrows(),
            });
        }
        for i in 0..m {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 {
                    return Err(Error::domain("covariance matrix is not symmetric"));
                }
            }
            if cov[(i, i)] < 0.0 {
                return Err(Error::domain("negative variance on the diagonal"));
            }
        }
        let sigma = (0..m).map(|i| cov[(i, i)].sqrt()).collect();
        Ok(MomentTable {
            labels,
            mean,
            sigma,
            cov,
        })
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Weights laid out in this table's column order (missing labels get 0).
    pub fn dense_weights(&self, w: &Weights) -> Result<Vec<f64>> {
        let mut p = vec![0.0; self.labels.len()];
        for (l, x) in w.labels().iter().zip(w.proportions()) {
            p[self.index_of(l)?] = *x;
        }
        Ok(p)
    }
}

/// Annualized moments of the panel's periodic returns.
pub fn estimate_moments(panel: &PricePanel, periods_per_year: f64) -> Result<MomentTable> {
    if panel.n_rows() < 3 {
        return Err(Error::InsufficientData {
            required: 3,
            actual: panel.n_rows(),
        });
    }
    let returns = panel
        .columns()
        .iter()
        .map(|c| periodic_returns(c, periods_per_year).map(|r| r.values))
        .collect::<Result<Vec<_>>>()?;
    let n = returns[0].len() as f64;
    let means: Vec<f64> = returns.iter().map(|r| r.iter().sum::<f64>() / n).collect();
    let m = returns.len();
    let mut cov = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let c = returns[i]
                .iter()
                .zip(&returns[j])
                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                .sum::<f64>()
                / n;
            cov[(i, j)] = periods_per_year * c;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    MomentTable::new(
        panel.labels().to_vec(),
        means.iter().map(|x| periods_per_year * x).collect(),
        cov,
    )
}

/// `(E p, sqrt(p' V p))`
pub fn portfolio_stats(mt: &MomentTable, p: &[f64]) -> Result<(f64, f64)> {
    if p.len() != mt.labels.len() {
        return Err(Error::DimensionMismatch {
            expected: mt.labels.len(),
            actual: p.len(),
        });
    }
    let pv = DVector::from_column_slice(p);
    let e = mt.mean.iter().zip(p).map(|(a, b)| a * b).sum();
    let v = (pv.transpose() * &mt.cov * &pv)[(0, 0)];
    Ok((e, v.max(0.0).sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierResult {
    pub labels: Vec<String>,
    pub targets: Vec<f64>,
    /// One long-only weight vector per target, in `labels` order.
    pub weights: Vec<Vec<f64>>,
    /// `(e, sigma)` achieved by each weight vector.
    pub achieved: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
struct Candidate {
    p: Vec<f64>,
    objective: f64,
    support: Vec<usize>,
}

/// Covariance with eigenvalues in `[-PSD_TOL, 0)` clamped to zero.
fn psd_covariance(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = cov.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOL {
        return Err(Error::NotPositiveSemidefinite(min));
    }
    if min >= 0.0 {
        return Ok(cov.clone());
    }
    let clamped = eig.eigenvalues.map(|l| l.max(0.0));
    let q = &eig.eigenvectors;
    let v = q * DMatrix::from_diagonal(&clamped) * q.transpose();
    Ok((&v + v.transpose()) * 0.5)
}

/// Minimize `p'Vp` over the simplex, optionally with `Ep = target`.
struct SimplexQp<'a> {
    mean: &'a [f64],
    cov: DMatrix<f64>,
    labels: &'a [String],
}

impl SimplexQp<'_> {
    fn solve_pattern(&self, support: &[usize], target: Option<f64>) -> Option<Candidate> {
        let s = support.len();
        let c = if target.is_some() { 2 } else { 1 };
        let mut kkt = DMatrix::zeros(s + c, s + c);
        let mut rhs = DVector::zeros(s + c);
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                kkt[(a, b)] = 2.0 * self.cov[(i, j)];
            }
            kkt[(a, s)] = 1.0;
            kkt[(s, a)] = 1.0;
            if target.is_some() {
                kkt[(a, s + 1)] = self.mean[i];
                kkt[(s + 1, a)] = self.mean[i];
            }
        }
        rhs[s] = 1.0;
        if let Some(t) = target {
            rhs[s + 1] = t;
        }
        let scale = kkt.amax().max(1.0);
        let x = kkt.svd(true, true).solve(&rhs, 1e-13 * scale).ok()?;

        let mut p = vec![0.0; self.mean.len()];
        for (a, &i) in support.iter().enumerate() {
            if !x[a].is_finite() || x[a] < -FEAS_TOL {
                return None;
            }
            p[i] = x[a].clamp(0.0, 1.0);
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > FEAS_TOL {
            return None;
        }
        p.iter_mut().for_each(|x| *x /= sum);
        if let Some(t) = target {
            let e: f64 = self.mean.iter().zip(&p).map(|(a, b)| a * b).sum();
            let escale = self.mean.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            if (e - t).abs() > FEAS_TOL * escale {
                return None;
            }
        }
        let pv = DVector::from_column_slice(&p);
        let objective = (pv.transpose() * &self.cov * &pv)[(0, 0)].max(0.0);
        let support = (0..p.len()).filter(|&i| p[i] > SUPPORT_TOL).collect();
        Some(Candidate { p, objective, support })
    }

    fn better(&self, a: &Candidate, b: &Candidate, tie: f64) -> bool {
        if a.objective < b.objective - tie {
            return true;
        }
        if a.objective > b.objective + tie {
            return false;
        }
        if a.support.len() != b.support.len() {
            return a.support.len() < b.support.len();
        }
        let names = |c: &Candidate| {
            let mut v: Vec<&str> = c.support.iter().map(|&i| self.labels[i].as_str()).collect();
            v.sort_unstable();
            v
        };
        names(a) < names(b)
    }

    fn solve(&self, target: Option<f64>) -> Result<Candidate> {
        let n = self.mean.len();
        let tie = 1e-12 * (1.0 + self.cov.diagonal().amax());
        let mut best: Option<Candidate> = None;
        for mask in 1u32..(1u32 << n) {
            let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            if let Some(c) = self.solve_pattern(&support, target) {
                if best.as_ref().is_none_or(|b| self.better(&c, b, tie)) {
                    best = Some(c);
                }
            }
        }
        best.ok_or_else(|| Error::Optimization(format!("no feasible portfolio for target {target:?}")))
    }
}

/// Long-only frontier at `k` mean levels equally spaced from the mean of the
/// minimum-variance simplex portfolio to the largest asset mean.
pub fn efficient_frontier(mt: &MomentTable, k: usize) -> Result<FrontierResult> {
    let n = mt.labels.len();
    if k < 2 {
        return Err(Error::InsufficientData { required: 2, actual: k });
    }
    if n == 0 {
        return Err(Error::InsufficientData { required: 1, actual: 0 });
    }
    if n > MAX_FRONTIER_ASSETS {
        return Err(Error::Optimization(format!(
            "{n} assets exceeds the exhaustive solver limit of {MAX_FRONTIER_ASSETS}"
        )));
    }
    let qp = SimplexQp {
        mean: &mt.mean,
        cov: psd_covariance(&mt.cov)?,
        labels: &mt.labels,
    };
    let min_var = qp.solve(None)?;
    let lo: f64 = mt.mean.iter().zip(&min_var.p).map(|(a, b)| a * b).sum();
    let hi = mt.mean.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = lo.min(hi);

    let mut targets = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    let mut achieved = Vec::with_capacity(k);
    for i in 0..k {
        let t = if i == k - 1 {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (k - 1) as f64
        };
        let c = if i == 0 { min_var.clone() } else { qp.solve(Some(t))? };
        achieved.push(portfolio_stats(mt, &c.p)?);
        targets.push(t);
        weights.push(c.p);
    }
    Ok(FrontierResult {
        labels: mt.labels.clone(),
        targets,
        weights,
        achieved,
    })
}

/// A point on an `(e, sigma)` path, `t` being the weight on the first endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsigPoint {
    pub t: f64,
    pub e: f64,
    pub sigma: f64,
}

fn grid(n_points: usize) -> Result<impl Iterator<Item = f64>> {
    if n_points < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: n_points,
        });
    }
    Ok((0..n_points).map(move |i| i as f64 / (n_points - 1) as f64))
}

/// Moments of unattended blends `t a_from + (1 - t) a_to`: the prices are
/// blended first, then returns and moments are taken from the blend.
pub fn unattended_esig_path(
    panel: &PricePanel,
    from_label: &str,
    to_label: &str,
    n_points: usize,
    periods_per_year: f64,
) -> Result<Vec<EsigPoint>> {
    let a = panel.column(from_label)?;
    let b = panel.column(to_label)?;
    grid(n_points)?
        .map(|t| {
            let blend: Vec<f64> = a.iter().zip(b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
            let r = periodic_returns(&blend, periods_per_year)?;
            Ok(EsigPoint {
                t,
                e: annualized_mean(&r)?,
                sigma: annualized_std(&r)?,
            })
        })
        .collect()
}

/// Moments of continually reallocated blends `p(t) = t e_i + (1 - t) e_j`.
pub fn reallocated_esig_path(
    mt: &MomentTable,
    from_label: &str,
    to_label: &str,
    n_points: usize,
) -> Result<Vec<EsigPoint>> {
    let i = mt.index_of(from_label)?;
    let j = mt.index_of(to_label)?;
    grid(n_points)?
        .map(|t| {
            let mut p = vec![0.0; mt.labels.len()];
            p[i] += t;
            p[j] += 1.0 - t;
            let (e, sigma) = portfolio_stats(mt, &p)?;
            Ok(EsigPoint { t, e, sigma })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use chrono::NaiveDate;

    fn table(mean: &[f64], cov: &[f64]) -> MomentTable {
        let n = mean.len();
        MomentTable::new(
            (0..n).map(|i| format!("A{i}")).collect(),
            mean.to_vec(),
            DMatrix::from_row_slice(n, n, cov),
        )
        .unwrap()
    }

    fn panel(cols: Vec<Vec<f64>>) -> PricePanel {
        let start = NaiveDate::from_ymd_opt(2014, 1, 1).unwrap();
        let n = cols[0].len();
        PricePanel::new(
            (0..n).map(|i| start + chrono::Days::new(i as u64)).collect(),
            (0..cols.len()).map(|i| format!("C{i}")).collect(),
            cols,
        )
        .unwrap()
    }

    #[test]
    fn moments_match_two_pass_by_hand() {
        // r = [0.1, -0.1]; mean 0, population variance 0.01
        let mt = estimate_moments(&panel(vec![vec![100.0, 110.0, 99.0]]), 252.0).unwrap();
        assert_abs_diff_eq!(mt.mean[0], 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(mt.cov[(0, 0)], 2.52, epsilon = 1e-12);
        assert_abs_diff_eq!(mt.sigma[0], 2.52f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn constant_returns_have_no_variance() {
        let col: Vec<f64> = (0..6).map(|i| 100.0 * 1.01f64.powi(i)).collect();
        let mt = estimate_moments(&panel(vec![col]), 252.0).unwrap();
        assert_abs_diff_eq!(mt.mean[0], 2.52, epsilon = 1e-12);
        assert_abs_diff_eq!(mt.cov[(0, 0)], 0.0, epsilon = 1e-15);
        assert!(estimate_moments(&panel(vec![vec![1.0, 2.0]]), 252.0).is_err());
    }

    #[test]
    fn stats_of_vertex_and_mix() {
        let mt = table(&[0.4245, 0.4324], &[0.0705, 0.0804, 0.0804, 0.1219]);
        let (e, s) = portfolio_stats(&mt, &[1.0, 0.0]).unwrap();
        assert_eq!(e, 0.4245);
        assert_abs_diff_eq!(s, 0.0705f64.sqrt(), epsilon = 1e-15);
        let (e, _) = portfolio_stats(&mt, &[0.75, 0.25]).unwrap();
        assert_abs_diff_eq!(e, 0.426475, epsilon = 1e-12);
        assert!(portfolio_stats(&mt, &[1.0]).is_err());
        let zero = table(&[0.1, 0.2], &[0.0; 4]);
        assert_eq!(portfolio_stats(&zero, &[0.3, 0.7]).unwrap().1, 0.0);
    }

    #[test]
    fn symmetric_two_asset_frontier() {
        let mt = table(&[0.0, 1.0], &[1.0, 0.0, 0.0, 1.0]);
        let f = efficient_frontier(&mt, 3).unwrap();
        assert_abs_diff_eq!(f.targets[0], 0.5, epsilon = 1e-12);
        // min-variance portfolio is already the midpoint
        assert_abs_diff_eq!(f.weights[0][0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(f.weights[1][0], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(f.weights[2][1], 1.0, epsilon = 1e-12);

        // targets spanning [0, 1] when the low-mean asset is riskless
        let mt = table(&[0.0, 1.0], &[0.0, 0.0, 0.0, 1.0]);
        let f = efficient_frontier(&mt, 3).unwrap();
        assert_eq!(f.targets, vec![0.0, 0.5, 1.0]);
        assert_abs_diff_eq!(f.weights[1][0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn frontier_rejects_non_psd() {
        let mt = table(&[0.1, 0.2], &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            efficient_frontier(&mt, 3),
            Err(Error::NotPositiveSemidefinite(_))
        ));
        let mt = table(&[0.1, 0.2], &[1.0, 0.0, 0.0, 1.0]);
        assert!(efficient_frontier(&mt, 1).is_err());
    }

    #[test]
    fn duplicate_asset_tie_breaks_to_smaller_label_set() {
        // A1 and A2 are the same asset: every mix of them ties
        let mt = table(&[0.1, 0.2, 0.2], &[1.0, 0.2, 0.2, 0.2, 2.0, 2.0, 0.2, 2.0, 2.0]);
        let f = efficient_frontier(&mt, 4).unwrap();
        for w in &f.weights {
            assert_eq!(w[2], 0.0, "{w:?}");
        }
    }

    #[test]
    fn frontier_is_monotone() {
        let mt = table(
            &[0.05, 0.10, 0.15],
            &[0.04, 0.006, 0.002, 0.006, 0.09, 0.01, 0.002, 0.01, 0.16],
        );
        let f = efficient_frontier(&mt, 8).unwrap();
        for w in f.achieved.windows(2) {
            assert!(w[1].0 >= w[0].0 - 1e-12);
            assert!(w[1].1 >= w[0].1 - 1e-12);
        }
        for w in &f.weights {
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
            assert!(w.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn esig_path_endpoints() {
        let p = panel(vec![
            vec![100.0, 150.0, 50.0, 150.0, 125.0],
            vec![100.0, 104.0, 101.0, 106.0, 110.0],
        ]);
        let path = unattended_esig_path(&p, "C0", "C1", 5, 4.0).unwrap();
        let mt = estimate_moments(&p, 4.0).unwrap();
        let last = path.last().unwrap();
        assert_eq!(last.t, 1.0);
        assert_abs_diff_eq!(last.e, mt.mean[0], epsilon = 1e-12);
        assert_abs_diff_eq!(last.sigma, mt.sigma[0], epsilon = 1e-12);
        assert_abs_diff_eq!(path[0].e, mt.mean[1], epsilon = 1e-12);

        let re = reallocated_esig_path(&mt, "C0", "C1", 5).unwrap();
        let (e_mix, _) = portfolio_stats(&mt, &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(re[2].e, e_mix, epsilon = 1e-14);
        assert!((path[2].e - re[2].e).abs() > 1e-3);
        for pt in &re {
            assert!(pt.sigma <= pt.t * mt.sigma[0] + (1.0 - pt.t) * mt.sigma[1] + 1e-12);
        }
    }
}
