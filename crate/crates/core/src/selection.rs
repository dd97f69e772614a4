//! Three-step lag-order selection driven by residual autocorrelation and
//! top-lag significance.
//!
//! 1. Raise all four orders together from 1 until the residual ACF stays
//!    inside its band at every lag up to `floor(10 log10 n)`.
//! 2. Hold `p1`; lower `p2 = p3 = p4` together.
//! 3. Lower `p4`, then `p3`, then `p2`, one at a time.
//!
//! Steps 2 and 3 stop as soon as the next lower model would leave residual
//! autocorrelation, or the relevant top-lag coefficient is significant (see
//! [`SignificanceCheck`] for which model that coefficient is read from).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ardl::{fit_ardl, ArdlOrders, ModelData, Regressor, Transform};
use crate::diagnostics::{acf_with_confidence, default_max_lag, ljung_box, AcfResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignificanceCheck {
    /// Stop lowering an order when the current model's top-lag coefficient
    /// for it is significant.
    #[default]
    CurrentModel,
    /// Stop when the top-lag coefficient of the one-step-lower candidate is
    /// significant; the current order is kept.
    LowerCandidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub p_max: usize,
    pub confidence: f64,
    pub significance: SignificanceCheck,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            p_max: 30,
            confidence: 0.95,
            significance: SignificanceCheck::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    /// Step 1: residuals autocorrelated, orders raised.
    Increase,
    /// Candidate became the current model.
    Adopt,
    RejectAutocorrelation,
    RejectSignificance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopLagStat {
    pub regressor: Regressor,
    pub lag: usize,
    pub t: f64,
    pub significant: bool,
}

/// One fitted candidate model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub step: u8,
    pub orders: ArdlOrders,
    pub n_obs: usize,
    pub acf_max_abs: f64,
    pub band: f64,
    pub acf_lags: usize,
    pub autocorr_detected: bool,
    /// Ljung-Box p-value at the same lag count; reported only.
    pub ljung_box_p: f64,
    pub top_lags: Vec<TopLagStat>,
    pub top_lag_significant: bool,
    pub t_critical: f64,
    pub decision: Decision,
    pub accepted: bool,
}

impl Candidate {
    fn significant(&self, r: Regressor) -> bool {
        self.top_lags
            .iter()
            .any(|s| s.regressor == r && s.significant)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub candidates: Vec<Candidate>,
    pub final_orders: Option<ArdlOrders>,
}

impl SelectionTrace {
    pub fn accepted(&self) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.accepted)
    }

    /// Orders adopted after step 1, in order.
    pub fn adopted_path(&self) -> Vec<ArdlOrders> {
        self.candidates
            .iter()
            .filter(|c| c.decision == Decision::Adopt)
            .map(|c| c.orders)
            .collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for c in &self.candidates {
            let line = serde_json::to_string(c).expect("candidate serializes");
            writeln!(out, "{line}").map_err(|e| Error::io("<trace jsonl>", e))?;
        }
        Ok(())
    }
}

fn evaluate(
    data: &ModelData,
    orders: ArdlOrders,
    transform: Transform,
    step: u8,
    config: &SelectionConfig,
) -> Result<Candidate> {
    let fit = fit_ardl(data, orders, transform)?;
    let n = fit.residuals.len();
    if n < 8 {
        return Err(Error::Dimension(format!(
            "orders {orders} leave {n} residuals, need at least 8"
        )));
    }
    let lags = default_max_lag(n);
    let (acf, autocorr_detected) =
        match acf_with_confidence(&fit.residuals, lags, config.confidence) {
            Ok(acf) => {
                let present = !acf.within_band();
                (acf, present)
            }
            Err(Error::Degenerate(_)) => (
                AcfResult {
                    values: vec![0.0; lags],
                    band: f64::NAN,
                    max_lag: lags,
                    n,
                },
                false,
            ),
            Err(e) => return Err(e),
        };
    let ljung_box_p = ljung_box(&fit.residuals, lags, 0)
        .map(|lb| lb.p_value)
        .unwrap_or(f64::NAN);
    let t_critical = fit.t_critical(config.confidence);
    let top_lags: Vec<TopLagStat> = Regressor::ALL
        .iter()
        .map(|&r| {
            let stat = fit.top_lag(r);
            TopLagStat {
                regressor: r,
                lag: orders.regressor_order(r),
                t: stat.t,
                significant: stat.t.abs() > t_critical,
            }
        })
        .collect();
    let top_lag_significant = top_lags.iter().any(|s| s.significant);
    Ok(Candidate {
        step,
        orders,
        n_obs: n,
        acf_max_abs: acf.max_abs(),
        band: acf.band,
        acf_lags: lags,
        autocorr_detected,
        ljung_box_p,
        top_lags,
        top_lag_significant,
        t_critical,
        decision: Decision::Adopt,
        accepted: false,
    })
}

struct Search<'a> {
    data: &'a ModelData,
    transform: Transform,
    config: &'a SelectionConfig,
    trace: SelectionTrace,
    /// Index of the current model in `trace.candidates`.
    current: usize,
}

impl Search<'_> {
    fn current(&self) -> &Candidate {
        &self.trace.candidates[self.current]
    }

    fn push(&mut self, mut candidate: Candidate, decision: Decision) {
        candidate.decision = decision;
        self.trace.candidates.push(candidate);
        if decision == Decision::Adopt {
            self.current = self.trace.candidates.len() - 1;
        }
    }

    fn failure(self, reason: String) -> Error {
        Error::SelectionFailed {
            reason,
            trace: Box::new(self.trace),
        }
    }

    /// Tries to move to `lower`; `watched` are the regressors whose top-lag
    /// significance stops the move. Returns whether the move happened.
    fn try_lower(&mut self, lower: ArdlOrders, watched: &[Regressor], step: u8) -> Result<bool> {
        let check = self.config.significance;
        if check == SignificanceCheck::CurrentModel
            && watched.iter().any(|&r| self.current().significant(r))
        {
            return Ok(false);
        }
        let c = evaluate(self.data, lower, self.transform, step, self.config)?;
        if c.autocorr_detected {
            self.push(c, Decision::RejectAutocorrelation);
            return Ok(false);
        }
        if check == SignificanceCheck::LowerCandidate && watched.iter().any(|&r| c.significant(r)) {
            self.push(c, Decision::RejectSignificance);
            return Ok(false);
        }
        self.push(c, Decision::Adopt);
        Ok(true)
    }
}

/// Runs the three-step search and returns the selected orders with the full trace.
pub fn select_orders(
    data: &ModelData,
    transform: Transform,
    config: &SelectionConfig,
) -> Result<(ArdlOrders, SelectionTrace)> {
    if config.p_max == 0 {
        return Err(Error::InvalidArgument("p_max must be at least 1".into()));
    }
    let mut search = Search {
        data,
        transform,
        config,
        trace: SelectionTrace {
            candidates: Vec::new(),
            final_orders: None,
        },
        current: usize::MAX,
    };

    for q in 1..=config.p_max {
        let orders = ArdlOrders::uniform(q);
        let c = match evaluate(data, orders, transform, 1, config) {
            Ok(c) => c,
            Err(Error::Dimension(msg)) => {
                return Err(search.failure(format!("step 1 ran out of observations: {msg}")))
            }
            Err(e) => return Err(e),
        };
        if c.autocorr_detected {
            search.push(c, Decision::Increase);
        } else {
            search.push(c, Decision::Adopt);
            break;
        }
    }
    if search.current == usize::MAX {
        let p_max = config.p_max;
        return Err(search.failure(format!(
            "residual autocorrelation remains at uniform order {p_max}"
        )));
    }

    let p1 = search.current().orders.p1;
    loop {
        let q = search.current().orders.p2;
        if q == 0 {
            break;
        }
        let lower = ArdlOrders {
            p1,
            p2: q - 1,
            p3: q - 1,
            p4: q - 1,
        };
        if !search.try_lower(lower, &Regressor::ALL, 2)? {
            break;
        }
    }

    for r in [Regressor::Art, Regressor::Adv, Regressor::Eco] {
        loop {
            let orders = search.current().orders;
            let p = orders.regressor_order(r);
            if p == 0 {
                break;
            }
            if !search.try_lower(orders.with_regressor_order(r, p - 1), &[r], 3)? {
                break;
            }
        }
    }

    let current = search.current;
    let mut trace = search.trace;
    trace.candidates[current].accepted = true;
    let final_orders = trace.candidates[current].orders;
    trace.final_orders = Some(final_orders);
    Ok((final_orders, trace))
}
