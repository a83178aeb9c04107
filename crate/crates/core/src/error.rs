use alloc::string::String;
use core::fmt;

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Every failure the engines and analyses can report.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter or argument is outside its admissible range.
    InvalidInput(String),
    /// A state falls outside the neuron's domain box.
    OutOfDomain { quantity: &'static str, value: f64 },
    /// The nullcline is undefined or a knee leaves the domain.
    Geometry(String),
    /// The nullcline at `level` does not have exactly two interior extrema.
    NotNShaped { level: f64, extrema: usize },
    /// A flow rate vanished (or changed sign) inside a travel interval.
    DegenerateFlow { x: f64, rate: f64 },
    /// A branch was queried outside the range it covers.
    OffBranch { x: f64, lo: f64, hi: f64 },
    /// Quadrature or root finding failed to reach tolerance.
    Numeric(String),
    /// The closed-form knee sensitivity disagrees with finite differences.
    GeometryConsistency { formula: f64, finite_difference: f64 },
    /// The ODE state left the domain box.
    Unstable { neuron: usize, time: f64, excursion: f64 },
    /// The ODE step violates the stability bound.
    StepTooLarge { dt: f64, limit: f64 },
    /// An internal structural invariant broke (for example an unbounded
    /// re-leveling cascade).
    InvariantViolation(String),
    /// An iterate left the synchronizing region.
    NoInvariantSet { iteration: usize, witness: usize },
    /// The fixed-point iteration ran out of iterations.
    NonConvergence { iterations: usize, residual: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::OutOfDomain { quantity, value } => {
                write!(f, "{quantity} = {value} lies outside the domain box")
            }
            Error::Geometry(msg) => write!(f, "nullcline geometry: {msg}"),
            Error::NotNShaped { level, extrema } => write!(
                f,
                "nullcline at level m = {level} has {extrema} interior extrema instead of 2"
            ),
            Error::DegenerateFlow { x, rate } => {
                write!(f, "flow rate {rate} at x = {x} is not bounded away from zero")
            }
            Error::OffBranch { x, lo, hi } => {
                write!(f, "x = {x} is off the branch, which covers [{lo}, {hi}]")
            }
            Error::Numeric(msg) => write!(f, "numerical failure: {msg}"),
            Error::GeometryConsistency {
                formula,
                finite_difference,
            } => write!(
                f,
                "knee sensitivity {formula} disagrees with finite difference {finite_difference}"
            ),
            Error::Unstable {
                neuron,
                time,
                excursion,
            } => write!(
                f,
                "neuron {neuron} left the domain by {excursion} at t = {time}"
            ),
            Error::StepTooLarge { dt, limit } => {
                write!(f, "step {dt} exceeds the stability limit {limit}")
            }
            Error::InvariantViolation(msg) => write!(f, "invariant violated: {msg}"),
            Error::NoInvariantSet { iteration, witness } => write!(
                f,
                "iterate {iteration} left the synchronizing region (neuron {witness} was not recruited)"
            ),
            Error::NonConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "no convergence after {iterations} iterations (residual {residual})"
            ),
        }
    }
}

impl core::error::Error for Error {}
