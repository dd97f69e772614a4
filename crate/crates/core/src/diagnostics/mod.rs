//! Residual and series diagnostics.

mod acf;
mod adf;
mod normality;

use std::io::Write;

use serde::Serialize;

pub use acf::{
    acf, acf_with_confidence, autocorr_present, default_max_lag, ljung_box, write_acf_csv,
    AcfResult, LjungBox,
};
pub use adf::{
    adf_test, critical_values, mackinnon_p_value, schwert_max_lag, AdfLags, AdfResult,
    DeterministicTerm,
};
pub use normality::{jarque_bera, qq_points, write_qq_csv, JarqueBera, QqPoint};

use crate::ardl::{ArdlFit, Target};
use crate::error::{Error, Result};

/// Percentage of values strictly above `limit`.
pub fn exceedance_percent(values: &[f64], limit: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let over = values.iter().filter(|&&v| v > limit).count();
    100.0 * over as f64 / values.len() as f64
}

/// Share of fitted malware-share values above 100%.
pub fn share_exceedance(fit: &ArdlFit) -> Result<f64> {
    match fit.target {
        Some(Target::MalShare) => Ok(exceedance_percent(&fit.fitted, 100.0)),
        other => Err(Error::Usage(format!(
            "share exceedance is only defined for share models, got {other:?}"
        ))),
    }
}

pub fn write_fitted_csv<W: Write>(fit: &ArdlFit, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "fitted", "residual", "observed"])?;
    for i in 0..fit.fitted.len() {
        w.write_record([
            (fit.first_index + i).to_string(),
            fit.fitted[i].to_string(),
            fit.residuals[i].to_string(),
            fit.observed[i].to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<fitted csv>", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub acf: AcfResult,
    pub ljung_box: LjungBox,
    pub jarque_bera: JarqueBera,
    pub qq: Vec<QqPoint>,
    /// ADF on the modelled (transformed) response series.
    pub adf: Option<AdfResult>,
    pub share_exceedance: Option<f64>,
}

/// Runs the residual battery on a fit. `response` is the transformed,
/// untrimmed response series for the stationarity test.
pub fn diagnose(fit: &ArdlFit, response: Option<&[f64]>) -> Result<DiagnosticsReport> {
    let n = fit.residuals.len();
    let lags = default_max_lag(n);
    let acf = acf(&fit.residuals, lags)?;
    let ljung_box = ljung_box(&fit.residuals, lags, 0)?;
    let jarque_bera = jarque_bera(&fit.residuals)?;
    let qq = qq_points(&fit.residuals)?;
    let adf = response
        .map(|y| adf_test(y, AdfLags::Auto, DeterministicTerm::Constant))
        .transpose()?;
    let share_exceedance = match fit.target {
        Some(Target::MalShare) => Some(share_exceedance(fit)?),
        _ => None,
    };
    Ok(DiagnosticsReport {
        acf,
        ljung_box,
        jarque_bera,
        qq,
        adf,
        share_exceedance,
    })
}
