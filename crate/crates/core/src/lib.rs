//! Numerical toolkit for Fokker–Planck–Kolmogorov equations with
//! unbounded and degenerate coefficients: Lyapunov certificates, a
//! finite-volume solver on an exhaustion, a Monte Carlo oracle and
//! ergodic diagnostics.

pub mod config;
pub mod ergodic;
pub mod exprlang;
pub mod fvm;
pub mod lyapunov;
pub mod mollify;
pub mod output;
pub mod problem;
pub mod quadrature;
pub mod sampling;
pub mod sde;
pub mod tridiag;
