//! Malware and vulnerability time series for package ecosystems.
//!
//! The crate covers the whole analysis path: OSV snapshot ingestion
//! ([`osv`]), period aggregation ([`series`]), ARDL estimation with long-run
//! and dynamic multipliers ([`ardl`]), residual-driven lag-order selection
//! ([`selection`]) and the diagnostics battery ([`diagnostics`]).

pub mod ardl;
pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod ols;
pub mod osv;
pub mod selection;
pub mod series;

pub use ardl::{
    build_design, dynamic_multipliers, fit_ardl, fit_ols, long_run_multiplier, ArdlFit, ArdlOrders,
    ModelData, MultiplierResult, Regressor, Target, Transform,
};
pub use error::{Error, Result};
pub use osv::{parse_record, scan_snapshot, Ecosystem, EventRow, OsvRecord, RecordKind};
pub use selection::{select_orders, SelectionConfig, SelectionTrace};
pub use series::{aggregate, Granularity, SeriesBundle};
