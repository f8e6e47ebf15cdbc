//! Conservative finite-volume solver in one dimension on an exhaustion
//! piece D_K, implicit Euler in time, with a vanishing-viscosity ladder and
//! an exact discrete mass ledger.
//!
//! The frontier of D_K is absorbing: whatever crosses it is booked as
//! outflow B(t), so that M(t) − ν(D) − C(t) = −B(t) step by step.

mod grid;
mod solver;

pub use grid::{FluxStencil, Grid1D, MIN_CELLS};
pub use solver::{
    continue_run, mass_identity_report, run_single, run_single_with, solve, solve_with, step, DensityFlow, EpsRun, FvmState, LedgerRow, MassIdentityReport, MassLedger, MassRegime,
    SolveOptions, SolveReport,
};

use crate::exprlang::EvalError;
use crate::mollify::MollifiedSet;
use crate::problem::{CoefficientSet, ProblemError};

/// One-dimensional coefficient fields as the grid solver consumes them.
pub trait Coefficients1D: Send + Sync {
    fn a1(&self, x: f64, t: f64) -> Result<f64, EvalError>;
    fn b1(&self, x: f64, t: f64) -> Result<f64, EvalError>;
    fn c1(&self, x: f64, t: f64) -> Result<f64, EvalError>;
    fn depends_on_time(&self) -> bool;
}

impl Coefficients1D for CoefficientSet {
    fn a1(&self, x: f64, t: f64) -> Result<f64, EvalError> {
        CoefficientSet::a1(self, x, t)
    }
    fn b1(&self, x: f64, t: f64) -> Result<f64, EvalError> {
        CoefficientSet::b1(self, x, t)
    }
    fn c1(&self, x: f64, t: f64) -> Result<f64, EvalError> {
        CoefficientSet::c1(self, x, t)
    }
    fn depends_on_time(&self) -> bool {
        CoefficientSet::depends_on_time(self)
    }
}

/// Requires a one-dimensional tabulation.
impl Coefficients1D for MollifiedSet {
    fn a1(&self, x: f64, t: f64) -> Result<f64, EvalError> {
        Ok(self.eval(&[x], t)[0])
    }
    fn b1(&self, x: f64, t: f64) -> Result<f64, EvalError> {
        Ok(self.eval(&[x], t)[1])
    }
    fn c1(&self, x: f64, t: f64) -> Result<f64, EvalError> {
        Ok(self.eval(&[x], t)[2])
    }
    fn depends_on_time(&self) -> bool {
        self.time.is_some()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FvmError {
    #[error("the grid solver is one-dimensional, problem has dimension {0}")]
    NotOneDimensional(usize),
    #[error("grid: {0}")]
    Grid(String),
    #[error("coefficient is not finite at x = {x}, t = {t}")]
    NonFiniteCoefficient { x: f64, t: f64 },
    #[error("tridiagonal solve broke down at t = {t}")]
    SolveBreakdown { t: f64 },
    #[error("density became non-finite at t = {t}, x = {x}")]
    NonFiniteDensity { t: f64, x: f64 },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[cfg(test)]
mod tests;
