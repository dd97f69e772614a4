use std::io::Write;

use serde::Serialize;

use crate::dist;
use crate::error::{Error, Result};

/// Sample autocorrelations at lags `1..=max_lag` with a symmetric white-noise band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcfResult {
    pub values: Vec<f64>,
    pub band: f64,
    pub max_lag: usize,
    pub n: usize,
}

impl AcfResult {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn within_band(&self) -> bool {
        self.values.iter().all(|v| v.abs() <= self.band)
    }
}

/// `floor(10 * log10(n))`, capped at `n - 1`.
pub fn default_max_lag(n: usize) -> usize {
    if n < 2 {
        return 0;
    }
    ((10.0 * (n as f64).log10()).floor() as usize).min(n - 1)
}

pub fn acf(series: &[f64], max_lag: usize) -> Result<AcfResult> {
    acf_with_confidence(series, max_lag, 0.95)
}

/// Autocorrelations with the denominator taken over the whole series.
pub fn acf_with_confidence(series: &[f64], max_lag: usize, confidence: f64) -> Result<AcfResult> {
    let n = series.len();
    if n < max_lag + 1 {
        return Err(Error::InvalidArgument(format!(
            "{n} observations cannot support {max_lag} lags"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let denom: f64 = centred.iter().map(|d| d * d).sum();
    if !(denom > 0.0) {
        return Err(Error::Degenerate("series has zero variance".into()));
    }
    let values = (1..=max_lag)
        .map(|lag| {
            centred[lag..]
                .iter()
                .zip(&centred[..n - lag])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / denom
        })
        .collect();
    Ok(AcfResult {
        values,
        band: dist::normal_critical(confidence) / (n as f64).sqrt(),
        max_lag,
        n,
    })
}

/// True when any autocorrelation at lags `1..=floor(10 log10 n)` leaves the band.
/// Zero-variance input counts as free of autocorrelation.
pub fn autocorr_present(residuals: &[f64], confidence: f64) -> Result<bool> {
    if residuals.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "need at least 8 residuals, got {}",
            residuals.len()
        )));
    }
    match acf_with_confidence(residuals, default_max_lag(residuals.len()), confidence) {
        Ok(r) => Ok(!r.within_band()),
        Err(Error::Degenerate(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LjungBox {
    pub statistic: f64,
    pub p_value: f64,
    pub lags: usize,
    pub dof: usize,
}

/// Ljung-Box Q over lags `1..=lags`; `fitted_params` is subtracted from the
/// chi-squared degrees of freedom (floored at 1).
pub fn ljung_box(series: &[f64], lags: usize, fitted_params: usize) -> Result<LjungBox> {
    let r = acf(series, lags)?;
    let n = series.len() as f64;
    let q = n
        * (n + 2.0)
        * r.values
            .iter()
            .enumerate()
            .map(|(i, rho)| rho * rho / (n - (i + 1) as f64))
            .sum::<f64>();
    let dof = lags.saturating_sub(fitted_params).max(1);
    Ok(LjungBox {
        statistic: q,
        p_value: dist::chi_squared_sf(q, dof),
        lags,
        dof,
    })
}

pub fn write_acf_csv<W: Write>(acf: &AcfResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lag", "acf", "band"])?;
    for (i, v) in acf.values.iter().enumerate() {
        w.write_record([(i + 1).to_string(), v.to_string(), acf.band.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<acf csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_series() {
        let x: Vec<f64> = (0..100)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let r = acf(&x, 2).unwrap();
        assert!((r.values[0] + 0.99).abs() < 1e-12);
        assert!((r.values[1] - 0.98).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(acf(&[3.0; 10], 2), Err(Error::Degenerate(_))));
        assert!(matches!(
            acf(&[1.0, 2.0], 2),
            Err(Error::InvalidArgument(_))
        ));
        assert!(!autocorr_present(&[2.0; 20], 0.95).unwrap());
        assert!(autocorr_present(&[1.0; 7], 0.95).is_err());
    }

    #[test]
    fn max_lag_rule() {
        assert_eq!(default_max_lag(39), 15);
        assert_eq!(default_max_lag(168), 22);
        assert_eq!(default_max_lag(1195), 30);
        assert_eq!(default_max_lag(500), 26);
        assert_eq!(default_max_lag(5), 4);
    }

    #[test]
    fn band_is_196_over_root_n() {
        let x: Vec<f64> = (0..400).map(|i| ((i * 37) % 11) as f64).collect();
        let r = acf(&x, 3).unwrap();
        assert!((r.band - 1.959963984540054 / 20.0).abs() < 1e-12);
    }

    #[test]
    fn ljung_box_hand_computed() {
        // x = [1, 2, 3, 4]: mean 2.5, centred [-1.5, -0.5, 0.5, 1.5], denom 5.
        // r1 = (0.75 - 0.25 + 0.75) / 5 = 0.25; Q(1) = 4 * 6 * 0.0625 / 3 = 0.5
        let lb = ljung_box(&[1.0, 2.0, 3.0, 4.0], 1, 0).unwrap();
        assert!((lb.statistic - 0.5).abs() < 1e-12);
        assert!((lb.p_value - 0.479_500_122_186_953_5).abs() < 1e-9);
    }
}
