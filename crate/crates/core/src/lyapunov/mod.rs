//! Lyapunov-type certificates checked by shell-wise sampling, the integrable
//! rescaling W = log(1 + θ(V)), and a-posteriori functionals on computed
//! flows (uniqueness-class ladders, moment bounds).
//!
//! Every result is empirical: a sampled supremum, not a proof.

mod certify;
mod generator;
mod integrability;
mod rescale;
mod uniqueness;

use std::collections::BTreeMap;

use serde::Serialize;

pub use certify::{check_blow_up, check_ergodic_condition, check_existence_condition, check_timedep_condition, moment_factors, QrRow};
pub use generator::{apply_generator, Generator, GeneratorEval};
pub use integrability::{check_initial_integrability, integrate_against, IntegrabilityReport};
pub use rescale::{rescale_integrable, Rescaling};
pub use uniqueness::{check_uniqueness_class, moment_bound_check, MomentReport, MomentRow};

use crate::exprlang::EvalError;
use crate::fvm::FvmError;
use crate::problem::ProblemError;

#[derive(Debug, thiserror::Error)]
pub enum LyapunovError {
    #[error("V uses x{used} but the problem has dimension {dim}")]
    Dimension { used: usize, dim: usize },
    #[error("V does not blow up along the exhaustion (shell minima {mins:?})")]
    NoBlowUp { mins: Vec<f64> },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Fvm(#[from] FvmError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    #[serde(rename = "existence_KV")]
    ExistenceKv,
    #[serde(rename = "timedep_KH")]
    TimedepKh,
    Ergodic,
    Integrability,
    UniquenessClassI,
    UniquenessClassIi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellSup {
    pub k: u32,
    pub sup: f64,
    pub argmax_point: Vec<f64>,
    pub argmax_t: f64,
    /// Sup of LV/V over the shell when V > 0 there.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_lv_over_v: Option<f64>,
}

/// A sampled point where the certificate inequality `lhs <= rhs` fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RnEntry {
    pub n: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub status: Status,
    pub empirical: bool,
    pub constants: BTreeMap<String, f64>,
    pub samples_per_shell: usize,
    pub seed: u64,
    pub shells: Vec<ShellSup>,
    pub witnesses: Vec<Witness>,
    #[serde(rename = "R_N", skip_serializing_if = "Vec::is_empty")]
    pub r_n: Vec<RnEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Certificate {
    pub(crate) fn new(kind: CertificateKind, samples: usize, seed: u64) -> Self {
        Certificate {
            kind,
            status: Status::Inconclusive,
            empirical: true,
            constants: BTreeMap::new(),
            samples_per_shell: samples,
            seed,
            shells: Vec::new(),
            witnesses: Vec::new(),
            r_n: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn holds(&self) -> bool {
        self.status == Status::Holds
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.get(name).copied()
    }
}
