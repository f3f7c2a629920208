//! Teichmüller harmonic map flow from cylinders.
//!
//! Evolves a surface of cylinder type spanning two prescribed Jordan curves
//! toward a solution of the Douglas–Plateau problem. The surface is carried
//! by a pair `(u, g)`: a map `u: C0 -> R^n` over the fixed cylinder
//! `C0 = [-1,1] x S^1` and a domain metric `g` drawn from a 7-parameter
//! family (hyperbolic collar metrics pulled back by Möbius-type boundary
//! diffeomorphisms). The flow alternates
//!
//! * a metric phase: project the Hopf differential of `u` onto the tangent
//!   space of the metric family and advance the 7 parameters by an ODE, and
//! * a map phase: minimize `E(w,g) + ||w - v||^2 / (2h)` over maps whose
//!   boundary traces monotonically reparametrize the two curves subject to a
//!   three-point condition.
//!
//! Runs terminate in one of two geometric outcomes: a minimal cylinder
//! (e.g. a catenoid for nearby coaxial circles) or a degeneration into two
//! minimal discs (the Goldschmidt regime), plus bookkeeping outcomes for
//! degenerating boundary parametrizations and time-outs.

pub mod collar;
pub mod config;
pub mod curve;
pub mod flow;
pub mod hopf;
pub mod mesh;
pub mod moebius;
pub mod par;
pub mod plateau;
pub mod presets;
pub mod verify;

pub use collar::{CollarChart, CollarParams};
pub use config::FlowConfig;
pub use curve::BoundaryCurve;
pub use flow::{Classification, FlowTrajectory, StepRecord};
pub use hopf::MetricState;
pub use mesh::{Grid, SurfaceMap, TensorField};
pub use moebius::{CutoffPair, DiffeoParams};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input outside the mathematical domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),
    /// Structurally invalid parameter (e.g. |b| >= 1, bad grid size).
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    /// Numerical breakdown (singular Jacobian, non-SPD metric, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Iterative solver failed to reach its tolerance.
    #[error("solver failure: {0}")]
    Solver(String),
    /// Malformed configuration or curve file.
    #[error("config error (line {line}): {msg}")]
    Config { line: usize, msg: String },
    /// Operation called in a state where it is not meaningful.
    #[error("usage error: {0}")]
    Usage(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
