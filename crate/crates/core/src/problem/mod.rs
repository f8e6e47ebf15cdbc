//! The Cauchy problem: domain with exhaustion, coefficients, initial measure,
//! and sampled checks of the standing hypotheses.

mod coefficients;
mod domain;
mod initial;
mod validate;

pub use coefficients::{max_dim_used, CoefficientSet};
pub use domain::{DomainKind, DomainSpec, ExhaustionRule, Region, Shape};
pub use initial::{InitialMeasure, Tabulated};
pub use validate::{sym_eigenvalues, validate, ShellReport, SampleOptions, ValidationReport, Violation, ViolationKind, DEFAULT_SAMPLES};

use crate::exprlang::EvalError;

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{field} uses x{index} but the problem has dimension {dim}")]
    VariableIndex { field: String, index: usize, dim: usize },
    #[error("invalid initial measure: {0}")]
    InvalidInitial(String),
    #[error("a{i}{j} and a{j}{i} differ by {residual:e} at x = {x:?}, t = {t}")]
    Asymmetric { i: usize, j: usize, x: Vec<f64>, t: f64, residual: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub domain: DomainSpec,
    pub coefficients: CoefficientSet,
    pub initial: InitialMeasure,
}

impl Problem {
    pub fn new(domain: DomainSpec, coefficients: CoefficientSet, initial: InitialMeasure) -> Result<Self, ProblemError> {
        domain.check()?;
        if coefficients.dim() != domain.dim() {
            return Err(ProblemError::Dimension(format!(
                "domain has dimension {} but coefficients have {}",
                domain.dim(),
                coefficients.dim()
            )));
        }
        initial.check(&domain)?;
        Ok(Problem {
            domain,
            coefficients,
            initial,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }
}
