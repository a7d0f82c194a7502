//! Error type shared by the model library.

use alloc::string::String;
use core::fmt;

/// Errors produced by the model library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the physical domain of an operation.
    Domain(&'static str),
    /// Invalid configuration (grid sizes, parameter invariants, inputs).
    Config(String),
    /// A scalar root solve did not converge within its iteration cap.
    RootFind {
        what: &'static str,
        last_residual: f64,
        iterations: u32,
    },
    /// A non-finite number showed up where a finite one was required.
    NonFinite(&'static str),
    /// Newton failed to converge for one backward-Euler step.
    NewtonDiverged {
        time: f64,
        dt: f64,
        scaled_residual: f64,
        iterations: u32,
    },
    /// Adaptive stepping shrank dt below its floor.
    StepUnderflow { time: f64, dt: f64 },
    /// The linearized system is numerically singular.
    SingularMatrix { column: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::RootFind {
                what,
                last_residual,
                iterations,
            } => write!(
                f,
                "root solve `{what}` did not converge in {iterations} iterations \
                 (last residual {last_residual:e})"
            ),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::NewtonDiverged {
                time,
                dt,
                scaled_residual,
                iterations,
            } => write!(
                f,
                "Newton diverged at t = {time:.6e} s (dt = {dt:.3e} s): \
                 scaled residual {scaled_residual:.3e} after {iterations} iterations"
            ),
            Error::StepUnderflow { time, dt } => write!(
                f,
                "time step underflow at t = {time:.6e} s (dt = {dt:.3e} s below floor)"
            ),
            Error::SingularMatrix { column } => {
                write!(f, "singular matrix at elimination column {column}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
