//! Autoregressive distributed lag models.
//!
//! The response `f(y_t)` is regressed on an intercept, its own lags
//! `1..=p1`, and lags `0..=p2`, `0..=p3`, `0..=p4` of the three explanatory
//! series (ecosystem count, advisory references, article references). The
//! same transform `f` is applied to every term.

use std::fmt;
use std::io::Write;
use std::ops::Range;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dist;
use crate::error::{Error, Result};
use crate::ols::{self, CovarianceKind};
use crate::series::SeriesBundle;

/// Threshold on `|1 - sum(beta)|` below which multipliers are undefined.
pub const UNIT_ROOT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    /// x -> ln(x + 1)
    LogPlusOne,
    Identity,
}

impl Transform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Transform::LogPlusOne => x.ln_1p(),
            Transform::Identity => x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// Malware entries per period, modelled in logs.
    #[serde(rename = "freq")]
    MalFreq,
    /// Malware share in percent, modelled in levels.
    #[serde(rename = "share")]
    MalShare,
}

impl Target {
    pub const ALL: [Target; 2] = [Target::MalFreq, Target::MalShare];

    pub fn default_transform(self) -> Transform {
        match self {
            Target::MalFreq => Transform::LogPlusOne,
            Target::MalShare => Transform::Identity,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Target::MalFreq => "freq",
            Target::MalShare => "share",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "freq" | "malfreq" | "frequency" => Ok(Target::MalFreq),
            "share" | "malshare" => Ok(Target::MalShare),
            other => Err(Error::InvalidArgument(format!("unknown target {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regressor {
    Eco,
    Adv,
    Art,
}

impl Regressor {
    pub const ALL: [Regressor; 3] = [Regressor::Eco, Regressor::Adv, Regressor::Art];

    pub fn as_str(self) -> &'static str {
        match self {
            Regressor::Eco => "eco",
            Regressor::Adv => "adv",
            Regressor::Art => "art",
        }
    }
}

impl fmt::Display for Regressor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lag orders: `p1` autoregressive lags, `p2`/`p3`/`p4` distributed lags of
/// the ecosystem, advisory and article series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArdlOrders {
    pub p1: usize,
    pub p2: usize,
    pub p3: usize,
    pub p4: usize,
}

impl ArdlOrders {
    pub fn new(p1: usize, p2: usize, p3: usize, p4: usize) -> Result<Self> {
        if p1 == 0 {
            return Err(Error::InvalidArgument(
                "at least one autoregressive lag is required".into(),
            ));
        }
        Ok(ArdlOrders { p1, p2, p3, p4 })
    }

    pub fn uniform(p: usize) -> Self {
        ArdlOrders {
            p1: p,
            p2: p,
            p3: p,
            p4: p,
        }
    }

    pub fn max_lag(&self) -> usize {
        self.p1.max(self.p2).max(self.p3).max(self.p4)
    }

    pub fn n_params(&self) -> usize {
        1 + self.p1 + self.p2 + self.p3 + self.p4 + 3
    }

    pub fn regressor_order(&self, r: Regressor) -> usize {
        match r {
            Regressor::Eco => self.p2,
            Regressor::Adv => self.p3,
            Regressor::Art => self.p4,
        }
    }

    pub fn with_regressor_order(mut self, r: Regressor, p: usize) -> Self {
        match r {
            Regressor::Eco => self.p2 = p,
            Regressor::Adv => self.p3 = p,
            Regressor::Art => self.p4 = p,
        }
        self
    }

    pub fn as_array(&self) -> [usize; 4] {
        [self.p1, self.p2, self.p3, self.p4]
    }

    /// Element-wise `<=`.
    pub fn dominated_by(&self, other: &ArdlOrders) -> bool {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .all(|(a, b)| *a <= b)
    }

    /// Column range of the autoregressive coefficients in the design.
    pub fn beta_range(&self) -> Range<usize> {
        1..1 + self.p1
    }

    /// Column range of a regressor's lag-0..=p coefficients in the design.
    pub fn regressor_range(&self, r: Regressor) -> Range<usize> {
        let eco = 1 + self.p1;
        let adv = eco + self.p2 + 1;
        let art = adv + self.p3 + 1;
        match r {
            Regressor::Eco => eco..adv,
            Regressor::Adv => adv..art,
            Regressor::Art => art..art + self.p4 + 1,
        }
    }
}

impl fmt::Display for ArdlOrders {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.p1, self.p2, self.p3, self.p4)
    }
}

impl FromStr for ArdlOrders {
    type Err = Error;

    /// Accepts `3,2,2,2` or `(3, 2, 2, 2)`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<usize> = s
            .trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidArgument(format!("bad orders {s:?}")))?;
        match parts.as_slice() {
            &[p1, p2, p3, p4] => ArdlOrders::new(p1, p2, p3, p4),
            _ => Err(Error::InvalidArgument(format!(
                "expected four orders, got {s:?}"
            ))),
        }
    }
}

/// Aligned untransformed series for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelData {
    pub target: Option<Target>,
    pub y: Vec<f64>,
    pub eco: Vec<f64>,
    pub adv: Vec<f64>,
    pub art: Vec<f64>,
}

impl ModelData {
    pub fn new(y: Vec<f64>, eco: Vec<f64>, adv: Vec<f64>, art: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if eco.len() != n || adv.len() != n || art.len() != n {
            return Err(Error::Dimension("series lengths differ".into()));
        }
        if [&y, &eco, &adv, &art]
            .iter()
            .any(|s| s.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidArgument("non-finite observation".into()));
        }
        Ok(ModelData {
            target: None,
            y,
            eco,
            adv,
            art,
        })
    }

    pub fn from_bundle(bundle: &SeriesBundle, target: Target) -> Self {
        let counts = |v: &[u64]| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
        let y = match target {
            Target::MalFreq => counts(&bundle.mal_freq),
            Target::MalShare => bundle.mal_share.clone(),
        };
        ModelData {
            target: Some(target),
            y,
            eco: bundle.eco.iter().map(|&x| f64::from(x)).collect(),
            adv: counts(&bundle.adv),
            art: counts(&bundle.art),
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn regressor(&self, r: Regressor) -> &[f64] {
        match r {
            Regressor::Eco => &self.eco,
            Regressor::Adv => &self.adv,
            Regressor::Art => &self.art,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Design {
    pub orders: ArdlOrders,
    pub transform: Transform,
    pub target: Option<Target>,
    /// Transformed response at `first_index..T`.
    pub response: DVector<f64>,
    pub matrix: DMatrix<f64>,
    pub names: Vec<String>,
    /// Index in the original series of the first usable row (= max lag).
    pub first_index: usize,
}

pub fn coefficient_names(orders: &ArdlOrders) -> Vec<String> {
    let mut names = vec!["const".to_owned()];
    names.extend((1..=orders.p1).map(|j| format!("y.L{j}")));
    for r in Regressor::ALL {
        names.extend((0..=orders.regressor_order(r)).map(|j| format!("{r}.L{j}")));
    }
    names
}

/// Builds the response vector and design matrix for the given orders.
///
/// Row `t - maxlag` holds `[1, f(y[t-1])..f(y[t-p1]), f(eco[t])..f(eco[t-p2]),
/// f(adv[t])..f(adv[t-p3]), f(art[t])..f(art[t-p4])]`.
pub fn build_design(data: &ModelData, orders: ArdlOrders, transform: Transform) -> Result<Design> {
    let n = data.len();
    let start = orders.max_lag();
    let k = orders.n_params();
    if n <= start {
        return Err(Error::Dimension(format!(
            "{n} observations cannot support orders {orders} (max lag {start})"
        )));
    }
    let rows = n - start;
    let f = |v: f64| transform.apply(v);
    let mut matrix = DMatrix::zeros(rows, k);
    for i in 0..rows {
        let t = start + i;
        let mut col = 0;
        matrix[(i, col)] = 1.0;
        col += 1;
        for j in 1..=orders.p1 {
            matrix[(i, col)] = f(data.y[t - j]);
            col += 1;
        }
        for r in Regressor::ALL {
            let x = data.regressor(r);
            for j in 0..=orders.regressor_order(r) {
                matrix[(i, col)] = f(x[t - j]);
                col += 1;
            }
        }
    }
    let response = DVector::from_iterator(rows, data.y[start..].iter().map(|&v| f(v)));
    Ok(Design {
        orders,
        transform,
        target: data.target,
        response,
        matrix,
        names: coefficient_names(&orders),
        first_index: start,
    })
}

/// An estimated ARDL model. Coefficients are stored in design-column order;
/// use the accessors for the named blocks.
#[derive(Debug, Clone)]
pub struct ArdlFit {
    pub orders: ArdlOrders,
    pub transform: Transform,
    pub target: Option<Target>,
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub coef_covariance: DMatrix<f64>,
    pub covariance_kind: CovarianceKind,
    /// Transformed observed response at the aligned indices.
    pub observed: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub first_index: usize,
    pub r_squared: f64,
    pub sigma2: f64,
    /// Residual degrees of freedom; 0 when unknown.
    pub dof: usize,
    pub condition_number: f64,
}

impl ArdlFit {
    /// A fit carrying only coefficients, for multiplier computations.
    /// Covariance is zero and there are no residuals.
    pub fn from_coefficients(
        orders: ArdlOrders,
        transform: Transform,
        coefficients: Vec<f64>,
    ) -> Result<Self> {
        let k = orders.n_params();
        if coefficients.len() != k {
            return Err(Error::Dimension(format!(
                "orders {orders} need {k} coefficients, got {}",
                coefficients.len()
            )));
        }
        Ok(ArdlFit {
            orders,
            transform,
            target: None,
            names: coefficient_names(&orders),
            coefficients,
            coef_covariance: DMatrix::zeros(k, k),
            covariance_kind: CovarianceKind::Classical,
            observed: Vec::new(),
            fitted: Vec::new(),
            residuals: Vec::new(),
            first_index: orders.max_lag(),
            r_squared: f64::NAN,
            sigma2: f64::NAN,
            dof: 0,
            condition_number: f64::NAN,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn beta(&self) -> &[f64] {
        &self.coefficients[self.orders.beta_range()]
    }

    pub fn regressor_coefficients(&self, r: Regressor) -> &[f64] {
        &self.coefficients[self.orders.regressor_range(r)]
    }

    pub fn gamma(&self) -> &[f64] {
        self.regressor_coefficients(Regressor::Eco)
    }

    pub fn phi(&self) -> &[f64] {
        self.regressor_coefficients(Regressor::Adv)
    }

    pub fn rho(&self) -> &[f64] {
        self.regressor_coefficients(Regressor::Art)
    }

    pub fn std_errors(&self) -> Vec<f64> {
        self.coef_covariance
            .diagonal()
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .collect()
    }

    pub fn t_critical(&self, confidence: f64) -> f64 {
        dist::student_t_critical(confidence, self.dof)
    }

    /// Coefficient, standard error and t-ratio of a regressor's highest lag.
    pub fn top_lag(&self, r: Regressor) -> CoefficientStat {
        let idx = self.orders.regressor_range(r).end - 1;
        self.stat(idx)
    }

    pub fn stat(&self, idx: usize) -> CoefficientStat {
        let value = self.coefficients[idx];
        let std_error = self.coef_covariance[(idx, idx)].max(0.0).sqrt();
        let t = value / std_error;
        CoefficientStat {
            name: self.names[idx].clone(),
            value,
            std_error,
            t,
            p_value: dist::student_t_p_value(t, self.dof),
        }
    }

    pub fn n_obs(&self) -> usize {
        self.residuals.len()
    }

    pub fn report(&self) -> FitReport {
        FitReport {
            target: self.target,
            orders: self.orders,
            transform: self.transform,
            covariance: self.covariance_kind,
            n_obs: self.n_obs(),
            dof: self.dof,
            r_squared: self.r_squared,
            sigma2: self.sigma2,
            condition_number: self.condition_number,
            coefficients: (0..self.coefficients.len()).map(|i| self.stat(i)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientStat {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
    pub t: f64,
    pub p_value: f64,
}

/// JSON-friendly summary of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub target: Option<Target>,
    pub orders: ArdlOrders,
    pub transform: Transform,
    pub covariance: CovarianceKind,
    pub n_obs: usize,
    pub dof: usize,
    pub r_squared: f64,
    pub sigma2: f64,
    pub condition_number: f64,
    pub coefficients: Vec<CoefficientStat>,
}

pub fn fit_ols(design: &Design, kind: CovarianceKind) -> Result<ArdlFit> {
    let fit = ols::least_squares(&design.response, &design.matrix, &design.names, kind)?;
    Ok(ArdlFit {
        orders: design.orders,
        transform: design.transform,
        target: design.target,
        names: design.names.clone(),
        coefficients: fit.coefficients,
        coef_covariance: fit.covariance,
        covariance_kind: kind,
        observed: design.response.iter().copied().collect(),
        fitted: fit.fitted,
        residuals: fit.residuals,
        first_index: design.first_index,
        r_squared: fit.r_squared,
        sigma2: fit.sigma2,
        dof: fit.dof,
        condition_number: fit.condition_number,
    })
}

/// Builds the design and fits it with classical standard errors.
pub fn fit_ardl(data: &ModelData, orders: ArdlOrders, transform: Transform) -> Result<ArdlFit> {
    fit_ols(
        &build_design(data, orders, transform)?,
        CovarianceKind::Classical,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierResult {
    pub regressor: Regressor,
    pub value: f64,
    pub std_error: f64,
    pub significant_95: bool,
}

/// Long-run multiplier `sum(c_j) / (1 - sum(beta_j))` with a delta-method
/// standard error.
pub fn long_run_multiplier(fit: &ArdlFit, regressor: Regressor) -> Result<MultiplierResult> {
    let beta_sum: f64 = fit.beta().iter().sum();
    let denom = 1.0 - beta_sum;
    if denom.abs() < UNIT_ROOT_TOLERANCE {
        return Err(Error::UnitRoot { denominator: denom });
    }
    let coef_sum: f64 = fit.regressor_coefficients(regressor).iter().sum();
    let value = coef_sum / denom;

    // d value / d beta_j = coef_sum / denom^2, d value / d c_j = 1 / denom.
    let k = fit.coefficients.len();
    let mut grad = DVector::zeros(k);
    for j in fit.orders.beta_range() {
        grad[j] = coef_sum / (denom * denom);
    }
    for j in fit.orders.regressor_range(regressor) {
        grad[j] = 1.0 / denom;
    }
    let variance = (grad.transpose() * &fit.coef_covariance * &grad)[(0, 0)];
    let std_error = variance.max(0.0).sqrt();
    let significant_95 = value.abs() / std_error > fit.t_critical(0.95);

    Ok(MultiplierResult {
        regressor,
        value,
        std_error,
        significant_95,
    })
}

/// Responses of the model at horizons `0..=k` to a one-period unit impulse
/// in `regressor` (in transformed units).
pub fn dynamic_multipliers(fit: &ArdlFit, regressor: Regressor, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let beta = fit.beta();
    let c = fit.regressor_coefficients(regressor);
    let mut dm = Vec::with_capacity(k + 1);
    for i in 0..=k {
        let direct = c.get(i).copied().unwrap_or(0.0);
        let propagated: f64 = (1..=i.min(beta.len()))
            .map(|j| beta[j - 1] * dm[i - j])
            .sum();
        dm.push(direct + propagated);
    }
    Ok(dm)
}

pub fn write_multipliers_csv<W: Write>(values: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "value"])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<multiplier csv>", e))?;
    Ok(())
}
