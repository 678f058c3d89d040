//! Piecewise-linear arrival time functions (ATFs) and step costs.
//!
//! An [`Atf`] maps a departure time to an arrival time. It is constant to the
//! left of its first breakpoint and undefined to the right of its last one.
//! Every ATF carries a [`StepCost`], a lower semi-continuous piecewise-constant
//! cost of departing at a given time.

mod atf;
mod compose;
mod envelope;
mod min;
mod pwl;
mod simplify;
mod stepcost;
mod text;

pub use atf::{Atf, TravelBounds};
pub use compose::{compose, compose_chain};
pub use envelope::{envelope_affine, multi_sort, Line, LowerEnvelope};
pub use min::{min2, min_n};
pub use pwl::PiecewiseLinear;
pub use simplify::{default_epsilon, polish, simplify};
pub use stepcost::StepCost;
pub use text::ParseAtfError;

/// Slopes closer than this are treated as equal when pruning breakpoints.
pub const EPS_SLOPE: f64 = 1e-9;
/// Abscissae closer than this are treated as coincident.
pub const EPS_T: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlfError {
    #[error("time {t} is past the end of the domain ({t_max})")]
    OutOfDomain { t: f64, t_max: f64 },
    #[error("composition has an empty domain")]
    EmptyDomain,
    #[error("functions are defined on different domains")]
    MismatchedDomain,
    #[error("approximation tolerance must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("invalid function: {0}")]
    Invalid(String),
}
