//! Augmented Dickey-Fuller unit-root test.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dist;
use crate::error::{Error, Result};
use crate::ols::{least_squares, CovarianceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeterministicTerm {
    #[default]
    Constant,
    ConstantTrend,
}

impl DeterministicTerm {
    fn n_terms(self) -> usize {
        match self {
            DeterministicTerm::Constant => 1,
            DeterministicTerm::ConstantTrend => 2,
        }
    }

    // MacKinnon (2010) response surfaces, one regressor: rows are 1%, 5%, 10%.
    fn response_surface(self) -> [[f64; 4]; 3] {
        match self {
            DeterministicTerm::Constant => [
                [-3.43035, -6.5393, -16.786, -79.433],
                [-2.86154, -2.8903, -4.234, -40.040],
                [-2.56677, -1.5384, -2.809, 0.0],
            ],
            DeterministicTerm::ConstantTrend => [
                [-3.95877, -9.0531, -28.428, -134.155],
                [-3.41049, -4.3904, -9.036, -45.374],
                [-3.12705, -2.5856, -3.925, -22.380],
            ],
        }
    }

    // MacKinnon (1994) p-value polynomials: (max, min, star, small-p, large-p).
    #[allow(clippy::type_complexity)]
    fn p_value_surface(self) -> (f64, f64, f64, [f64; 3], [f64; 4]) {
        match self {
            DeterministicTerm::Constant => (
                2.74,
                -18.83,
                -1.61,
                [2.1659, 1.4412, 3.8269e-2],
                [1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2],
            ),
            DeterministicTerm::ConstantTrend => (
                0.7,
                -16.18,
                -2.89,
                [3.2512, 1.6047, 4.9588e-2],
                [2.5261, 6.1654e-1, -3.7956e-1, -6.0285e-2],
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdfLags {
    Fixed(usize),
    /// Search `0..=floor(12 (n/100)^(1/4))` by AIC on a common sample.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub p_value: f64,
    pub used_lags: usize,
    pub n_obs: usize,
    /// 1%, 5% and 10% critical values for `n_obs`.
    pub critical_values: [f64; 3],
    pub reject_at_95: bool,
}

/// Finite-sample critical values `b0 + b1/T + b2/T^2 + b3/T^3`.
pub fn critical_values(det: DeterministicTerm, n_obs: usize) -> [f64; 3] {
    let t = n_obs as f64;
    det.response_surface()
        .map(|[b0, b1, b2, b3]| b0 + b1 / t + b2 / (t * t) + b3 / (t * t * t))
}

/// Approximate asymptotic p-value of a Dickey-Fuller t-ratio.
pub fn mackinnon_p_value(stat: f64, det: DeterministicTerm) -> f64 {
    let (max, min, star, small, large) = det.p_value_surface();
    if stat > max {
        return 1.0;
    }
    if stat < min {
        return 0.0;
    }
    let z = if stat <= star {
        small[0] + small[1] * stat + small[2] * stat * stat
    } else {
        large[0] + large[1] * stat + large[2] * stat * stat + large[3] * stat * stat * stat
    };
    dist::normal_cdf(z)
}

pub fn schwert_max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

pub fn adf_test(series: &[f64], lags: AdfLags, det: DeterministicTerm) -> Result<AdfResult> {
    let n = series.len();
    if n < 20 {
        return Err(Error::InvalidArgument(format!(
            "ADF needs at least 20 observations, got {n}"
        )));
    }
    let used_lags = match lags {
        AdfLags::Fixed(k) => k,
        AdfLags::Auto => {
            // keep at least half the sample for estimation
            let cap = (n / 2).saturating_sub(det.n_terms() + 2);
            let max_lag = schwert_max_lag(n).min(cap);
            select_lag_by_aic(series, max_lag, det)?
        }
    };
    let (statistic, n_obs) = df_regression(series, used_lags, det, used_lags + 1)?;
    let critical_values = critical_values(det, n_obs);
    Ok(AdfResult {
        statistic,
        p_value: mackinnon_p_value(statistic, det),
        used_lags,
        n_obs,
        critical_values,
        reject_at_95: statistic < critical_values[1],
    })
}

fn select_lag_by_aic(series: &[f64], max_lag: usize, det: DeterministicTerm) -> Result<usize> {
    let mut best = (f64::INFINITY, 0);
    for k in 0..=max_lag {
        let (rss, n_obs, n_params) = df_rss(series, k, det, max_lag + 1)?;
        let aic = n_obs as f64 * (rss / n_obs as f64).ln() + 2.0 * n_params as f64;
        if aic < best.0 {
            best = (aic, k);
        }
    }
    Ok(best.1)
}

fn df_design(
    series: &[f64],
    k: usize,
    det: DeterministicTerm,
    first: usize,
) -> Result<(DVector<f64>, DMatrix<f64>, Vec<String>)> {
    let n = series.len();
    let p = det.n_terms() + 1 + k;
    if first >= n || n - first <= p {
        return Err(Error::Dimension(format!(
            "{n} observations cannot support an ADF regression with {k} lags"
        )));
    }
    let dx = |t: usize| series[t] - series[t - 1];
    let rows = n - first;
    let y = DVector::from_fn(rows, |i, _| dx(first + i));
    let x = DMatrix::from_fn(rows, p, |i, j| {
        let t = first + i;
        match (det, j) {
            (_, 0) => 1.0,
            (DeterministicTerm::ConstantTrend, 1) => t as f64,
            _ => {
                let j = j - det.n_terms();
                if j == 0 {
                    series[t - 1]
                } else {
                    dx(t - j)
                }
            }
        }
    });
    let mut names: Vec<String> = vec!["const".into()];
    if det == DeterministicTerm::ConstantTrend {
        names.push("trend".into());
    }
    names.push("x.L1".into());
    names.extend((1..=k).map(|j| format!("dx.L{j}")));
    Ok((y, x, names))
}

fn df_rss(
    series: &[f64],
    k: usize,
    det: DeterministicTerm,
    first: usize,
) -> Result<(f64, usize, usize)> {
    let (y, x, names) = df_design(series, k, det, first)?;
    let fit = least_squares(&y, &x, &names, CovarianceKind::Classical)?;
    Ok((fit.rss, y.len(), x.ncols()))
}

fn df_regression(
    series: &[f64],
    k: usize,
    det: DeterministicTerm,
    first: usize,
) -> Result<(f64, usize)> {
    let (y, x, names) = df_design(series, k, det, first)?;
    let fit = least_squares(&y, &x, &names, CovarianceKind::Classical)?;
    let idx = det.n_terms();
    let se = fit.covariance[(idx, idx)].sqrt();
    Ok((fit.coefficients[idx] / se, y.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_value_surface() {
        let cv = critical_values(DeterministicTerm::Constant, 500);
        assert!(
            (cv[1] - (-2.86154 - 2.8903 / 500.0 - 4.234 / 250_000.0 - 40.04 / 1.25e8)).abs()
                < 1e-12
        );
        assert!(cv[0] < cv[1] && cv[1] < cv[2]);
        let asym = critical_values(DeterministicTerm::Constant, usize::MAX);
        assert!((asym[1] + 2.86154).abs() < 1e-9);
    }

    #[test]
    fn p_value_is_monotone_and_consistent_with_critical_values() {
        let mut prev = 0.0;
        for i in 0..200 {
            let stat = -8.0 + i as f64 * 0.05;
            let p = mackinnon_p_value(stat, DeterministicTerm::Constant);
            assert!(p >= prev - 1e-12);
            prev = p;
        }
        let p5 = mackinnon_p_value(-2.86154, DeterministicTerm::Constant);
        assert!((p5 - 0.05).abs() < 0.005, "{p5}");
        let p5 = mackinnon_p_value(-3.41049, DeterministicTerm::ConstantTrend);
        assert!((p5 - 0.05).abs() < 0.005, "{p5}");
    }

    #[test]
    fn too_short() {
        assert!(adf_test(&[1.0; 10], AdfLags::Auto, DeterministicTerm::Constant).is_err());
        let x: Vec<f64> = (0..25).map(|i| ((i * 7) % 5) as f64).collect();
        assert!(matches!(
            adf_test(&x, AdfLags::Fixed(20), DeterministicTerm::Constant),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn schwert_rule() {
        assert_eq!(schwert_max_lag(100), 12);
        assert_eq!(schwert_max_lag(500), 17);
    }
}
