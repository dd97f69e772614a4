//! Least squares via Householder QR.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Conditioning above this is logged as a warning.
pub const CONDITION_WARNING: f64 = 1e8;

/// A column is treated as dependent when the part of it orthogonal to the
/// preceding columns is below this fraction of its own norm.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceKind {
    /// sigma^2 (X'X)^-1
    #[default]
    Classical,
    /// White's heteroskedasticity-consistent estimator with the n/(n-k) correction.
    Hc1,
}

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub tss: f64,
    pub r_squared: f64,
    pub sigma2: f64,
    pub dof: usize,
    pub condition_number: f64,
}

impl OlsFit {
    pub fn std_errors(&self) -> Vec<f64> {
        self.covariance
            .diagonal()
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .collect()
    }
}

/// Ordinary least squares of `y` on the columns of `x`.
///
/// `names` label the columns in singularity errors. R² is computed against
/// the centred total sum of squares, so `x` is expected to carry an intercept.
pub fn least_squares(
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    names: &[String],
    kind: CovarianceKind,
) -> Result<OlsFit> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(Error::Dimension(format!(
            "response has {} rows, design {n}",
            y.len()
        )));
    }
    if k == 0 || n <= k {
        return Err(Error::Dimension(format!(
            "{n} observations for {k} parameters leaves no residual degrees of freedom"
        )));
    }
    if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "non-finite value in regression data".into(),
        ));
    }

    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)].abs() <= RANK_TOLERANCE * x.column(j).norm() || x.column(j).norm() == 0.0 {
            let column = names.get(j).cloned().unwrap_or_else(|| format!("#{j}"));
            return Err(Error::Singular { column });
        }
    }
    let q = qr.q();

    let qty = q.transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Singular { column: "?".into() })?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::Singular { column: "?".into() })?;

    let fitted_v = x * &beta;
    let resid_v = y - &fitted_v;
    let rss = resid_v.norm_squared();
    let mean = y.mean();
    let tss = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let dof = n - k;
    let sigma2 = rss / dof as f64;
    let r_squared = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        1.0
    };

    let covariance = match kind {
        CovarianceKind::Classical => (&r_inv * r_inv.transpose()) * sigma2,
        CovarianceKind::Hc1 => {
            // X = QR, so (X'X)^-1 X' diag(e^2) X (X'X)^-1 = R^-1 (Q' diag(e^2) Q) R^-T.
            let mut weighted = q.clone();
            for (i, mut row) in weighted.row_iter_mut().enumerate() {
                row *= resid_v[i] * resid_v[i];
            }
            let meat = q.transpose() * weighted;
            (&r_inv * meat * r_inv.transpose()) * (n as f64 / dof as f64)
        }
    };

    let sv = r.singular_values();
    let (smax, smin) = sv
        .iter()
        .fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
    let condition_number = smax / smin;
    if condition_number > CONDITION_WARNING {
        warn!("ill-conditioned design: condition number {condition_number:.3e}");
    }

    Ok(OlsFit {
        coefficients: beta.iter().copied().collect(),
        covariance,
        fitted: fitted_v.iter().copied().collect(),
        residuals: resid_v.iter().copied().collect(),
        rss,
        tss,
        r_squared,
        sigma2,
        dof,
        condition_number,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|j| format!("x{j}")).collect()
    }

    #[test]
    fn noiseless_line() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let x = DMatrix::from_fn(10, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
        let y = DVector::from_iterator(10, xs.iter().map(|v| 2.0 + 3.0 * v));
        let fit = least_squares(&y, &x, &names(2), CovarianceKind::Classical).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-12);
        assert_eq!(fit.r_squared, 1.0);
        assert!(fit.residuals.iter().all(|e| e.abs() < 1e-12));
        assert_eq!(fit.dof, 8);
    }

    #[test]
    fn known_small_regression() {
        // y = [1, 3, 2, 5, 4] on [1, x], x = 1..5: Sxy = 8, Sxx = 10, Syy = 10.
        let x = DMatrix::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { (i + 1) as f64 });
        let y = DVector::from_vec(vec![1.0, 3.0, 2.0, 5.0, 4.0]);
        let fit = least_squares(&y, &x, &names(2), CovarianceKind::Classical).unwrap();
        assert!((fit.coefficients[1] - 0.8).abs() < 1e-12);
        assert!((fit.coefficients[0] - 0.6).abs() < 1e-12);
        // RSS = Syy - slope * Sxy = 3.6, sigma2 = 3.6 / 3
        assert!((fit.rss - 3.6).abs() < 1e-12);
        assert!((fit.sigma2 - 1.2).abs() < 1e-12);
        assert!((fit.r_squared - 0.64).abs() < 1e-12);
        // var(slope) = sigma2 / Sxx
        assert!((fit.covariance[(1, 1)] - 0.12).abs() < 1e-12);
        // var(intercept) = sigma2 (1/n + xbar^2/Sxx) = 1.2 * (0.2 + 0.9)
        assert!((fit.covariance[(0, 0)] - 1.32).abs() < 1e-12);
    }

    #[test]
    fn hc1_matches_sandwich() {
        let x = DMatrix::from_fn(6, 2, |i, j| if j == 0 { 1.0 } else { (i * i) as f64 });
        let y = DVector::from_vec(vec![0.3, 1.1, 3.9, 9.5, 15.2, 26.0]);
        let fit = least_squares(&y, &x, &names(2), CovarianceKind::Hc1).unwrap();
        let xtx_inv = (x.transpose() * &x).try_inverse().unwrap();
        let e2 = DMatrix::from_diagonal(&DVector::from_iterator(
            6,
            fit.residuals.iter().map(|e| e * e),
        ));
        let expected = &xtx_inv * x.transpose() * e2 * &x * &xtx_inv * (6.0 / 4.0);
        assert!((fit.covariance - expected).abs().max() < 1e-10);
    }

    #[test]
    fn dependent_column_is_named() {
        let x = DMatrix::from_fn(8, 3, |i, j| match j {
            0 => 1.0,
            1 => i as f64,
            _ => 2.0 * i as f64 + 1.0,
        });
        let y = DVector::from_fn(8, |i, _| i as f64);
        match least_squares(&y, &x, &names(3), CovarianceKind::Classical) {
            Err(Error::Singular { column }) => assert_eq!(column, "x2"),
            other => panic!("expected singular, got {other:?}"),
        }
        let zero = DMatrix::from_fn(8, 2, |_, j| if j == 0 { 1.0 } else { 0.0 });
        assert!(matches!(
            least_squares(&y, &zero, &names(2), CovarianceKind::Classical),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn needs_residual_dof() {
        let x = DMatrix::from_element(2, 2, 1.0);
        let y = DVector::from_element(2, 1.0);
        assert!(matches!(
            least_squares(&y, &x, &names(2), CovarianceKind::Classical),
            Err(Error::Dimension(_))
        ));
    }
}
