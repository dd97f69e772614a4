use std::io::Write;

use serde::Serialize;

use crate::dist;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JarqueBera {
    pub statistic: f64,
    /// Chi-squared(2) upper tail, i.e. `exp(-JB / 2)`.
    pub p_value: f64,
    pub skewness: f64,
    /// Raw (non-excess) kurtosis.
    pub kurtosis: f64,
    pub n: usize,
    pub reject_at_95: bool,
}

/// `JB = n/6 (S^2 + (K - 3)^2 / 4)` with plain moment estimators.
pub fn jarque_bera(series: &[f64]) -> Result<JarqueBera> {
    let n = series.len();
    if n < 8 {
        return Err(Error::InvalidArgument(format!(
            "Jarque-Bera needs at least 8 observations, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = series.iter().sum::<f64>() / nf;
    let (m2, m3, m4) = series.iter().fold((0.0, 0.0, 0.0), |(a, b, c), x| {
        let d = x - mean;
        let d2 = d * d;
        (a + d2, b + d2 * d, c + d2 * d2)
    });
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    if !(m2 > 0.0) {
        return Err(Error::Degenerate("series has zero variance".into()));
    }
    let skewness = m3 / m2.powf(1.5);
    let kurtosis = m4 / (m2 * m2);
    let statistic = nf / 6.0 * (skewness * skewness + (kurtosis - 3.0).powi(2) / 4.0);
    let p_value = dist::chi_squared_sf(statistic, 2);
    Ok(JarqueBera {
        statistic,
        p_value,
        skewness,
        kurtosis,
        n,
        reject_at_95: p_value < 0.05,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QqPoint {
    pub theoretical: f64,
    pub sample: f64,
}

/// Sorted sample against normal quantiles at plotting positions `(i - 0.5) / n`.
pub fn qq_points(series: &[f64]) -> Result<Vec<QqPoint>> {
    let n = series.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "QQ data needs at least 2 observations".into(),
        ));
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, sample)| QqPoint {
            theoretical: dist::inverse_normal_cdf((i as f64 + 0.5) / n as f64),
            sample,
        })
        .collect())
}

pub fn write_qq_csv<W: Write>(points: &[QqPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theoretical", "sample"])?;
    for p in points {
        w.write_record([p.theoretical.to_string(), p.sample.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<qq csv>", e))?;
    Ok(())
}
