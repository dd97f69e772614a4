//! Process exit codes.

use std::fmt;

use serde::Serialize;

/// Failure classes with a stable exit code. Attached to errors as anyhow
/// context so `main` can recover the code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitKind {
    Ingest,
    Selection,
    Numerical,
}

pub const EXIT_OTHER: u8 = 1;
/// Command-line usage errors. Kept off 2, which belongs to ingest failures.
pub const EXIT_USAGE: u8 = 64;

impl ExitKind {
    pub fn code(self) -> u8 {
        match self {
            ExitKind::Ingest => 2,
            ExitKind::Selection => 3,
            ExitKind::Numerical => 4,
        }
    }

    /// Classifies a library error raised while modelling one series.
    pub fn of_model_error(err: &ecomal::Error) -> Option<ExitKind> {
        use ecomal::Error as E;
        match err {
            E::SelectionFailed { .. } => Some(ExitKind::Selection),
            E::Singular { .. } | E::UnitRoot { .. } | E::Degenerate(_) | E::Dimension(_) => {
                Some(ExitKind::Numerical)
            }
            E::InvalidArgument(_) => Some(ExitKind::Numerical),
            _ => None,
        }
    }
}

impl fmt::Display for ExitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExitKind::Ingest => "ingest failed",
            ExitKind::Selection => "order selection failed",
            ExitKind::Numerical => "numerical failure",
        })
    }
}

/// Exit code for an error returned by a command.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(kind) = err.downcast_ref::<ExitKind>() {
        return kind.code();
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ecomal::Error>() {
            return match e {
                ecomal::Error::EmptySnapshot(_)
                | ecomal::Error::Json { .. }
                | ecomal::Error::Schema(_) => ExitKind::Ingest.code(),
                other => ExitKind::of_model_error(other).map_or(EXIT_OTHER, ExitKind::code),
            };
        }
    }
    EXIT_OTHER
}
