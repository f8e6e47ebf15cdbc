//! Cesàro averages σ_t = t⁻¹∫₀ᵗ μ_s ds, the discrete stationary density
//! and the L¹ distance between the two.

use serde::Serialize;

use crate::exprlang::{Compiled, EvalError};
use crate::fvm::{Coefficients1D, DensityFlow, FluxStencil, FvmError, Grid1D};
use crate::problem::Problem;
use crate::tridiag::Tridiagonal;

pub const MIN_SAVES: usize = 8;
/// Eigenvalues within this multiple of the operator scale count as zero.
pub const NULL_TOL: f64 = 1e-9;
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const NEGATIVE_TOL: f64 = -1e-10;

#[derive(Debug, thiserror::Error)]
pub enum ErgodicError {
    #[error("only {count} save times in [0, {t}], need at least {MIN_SAVES}")]
    TooFewSaves { count: usize, t: f64 },
    #[error("flow ends at {last}, cannot average up to {t}")]
    Coverage { t: f64, last: f64 },
    #[error("stationary regime required: {0}")]
    NotStationary(String),
    #[error("null space of the discrete operator is {dim}-dimensional (eigenvalues nearest zero: {lambda1:e}, {lambda2:e}; tolerance {tol:e})")]
    NullSpace { dim: usize, lambda1: f64, lambda2: f64, tol: f64 },
    #[error("null vector is not sign-definite (min component {min:e})")]
    Negative { min: f64 },
    #[error("relative stationary residual {residual:e} exceeds {RESIDUAL_TOL:e}")]
    Residual { residual: f64 },
    #[error("flow and stationary density live on different grids")]
    GridMismatch,
    #[error(transparent)]
    Fvm(#[from] FvmError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Trapezoid weights of the save times in [0, t], plus the interpolation
/// weight for a final partial segment.
fn trapezoid_weights(times: &[f64], t: f64) -> Result<Vec<(usize, f64)>, ErgodicError> {
    if !(t > 0.0) {
        return Err(ErgodicError::TooFewSaves { count: 0, t });
    }
    let last = *times.last().unwrap_or(&0.0);
    let slack = 1e-12 * t.max(1.0);
    if t > last + slack {
        return Err(ErgodicError::Coverage { t, last });
    }
    let inside = times.iter().take_while(|s| **s <= t + slack).count();
    if inside < MIN_SAVES {
        return Err(ErgodicError::TooFewSaves { count: inside, t });
    }
    let mut w = vec![0.0; times.len()];
    for m in 1..inside {
        let d = times[m] - times[m - 1];
        w[m - 1] += 0.5 * d;
        w[m] += 0.5 * d;
    }
    let t_in = times[inside - 1];
    if t - t_in > slack {
        // linear interpolation between saves inside-1 and inside
        let (s0, s1) = (t_in, times[inside]);
        let d = t - s0;
        let theta = d / (s1 - s0);
        w[inside - 1] += 0.5 * d * (2.0 - theta);
        w[inside] += 0.5 * d * theta;
    }
    Ok(w.into_iter().enumerate().filter(|(_, v)| *v != 0.0).map(|(m, v)| (m, v / t)).collect())
}

/// σ_t by the trapezoid rule over save times, not renormalized.
pub fn time_average(flow: &DensityFlow, t: f64) -> Result<Vec<f64>, ErgodicError> {
    let w = trapezoid_weights(&flow.times, t)?;
    let mut sigma = vec![0.0; flow.grid.n];
    for (m, wm) in w {
        for (s, u) in sigma.iter_mut().zip(&flow.densities[m]) {
            *s += wm * u;
        }
    }
    Ok(sigma)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDensity {
    pub grid: Grid1D,
    pub u: Vec<f64>,
    pub mass: f64,
    /// ‖L_h u‖₁ / (scale ‖u‖₁), scale = max |diagonal| of L_h.
    pub residual: f64,
    /// The two eigenvalues of L_h closest to zero.
    pub eigenvalues: [f64; 2],
    pub scale: f64,
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix with
/// diagonal `d` and squared off-diagonals `e2`.
fn sturm_count(d: &[f64], e2: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    for i in 0..d.len() {
        if i > 0 {
            q = d[i] - x - e2[i] / q;
        }
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The k-th largest eigenvalue (k = 1, 2, ...) by bisection.
fn kth_largest(d: &[f64], e2: &[f64], k: usize, lo: f64, hi: f64, pivmin: f64) -> f64 {
    let n = d.len();
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        // eigenvalues above mid
        if n - sturm_count(d, e2, mid, pivmin) >= k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Null vector of the discrete stationary operator (same stencils as the
/// time stepper, ∂_t = 0), normalized to mass 1.
pub fn stationary_solve(problem: &Problem, grid: &Grid1D) -> Result<StationaryDensity, ErgodicError> {
    if problem.coefficients.depends_on_time() {
        return Err(ErgodicError::NotStationary("coefficients depend on t".into()));
    }
    if !problem.coefficients.c_is_zero() {
        return Err(ErgodicError::NotStationary("killing term c is not zero".into()));
    }
    stationary_solve_with(&problem.coefficients, grid)
}

pub fn stationary_solve_with<C: Coefficients1D + ?Sized>(coeffs: &C, grid: &Grid1D) -> Result<StationaryDensity, ErgodicError> {
    if coeffs.depends_on_time() {
        return Err(ErgodicError::NotStationary("coefficients depend on t".into()));
    }
    let stencil = FluxStencil::assemble(grid, coeffs, 0.0, 0.0)?;
    if stencil.c.iter().any(|c| *c != 0.0) {
        return Err(ErgodicError::NotStationary("killing term c is not zero".into()));
    }
    let m = stencil.operator_matrix(grid.h);
    let n = grid.n;
    // nonnegative off-diagonals: similar to a symmetric matrix with
    // squared off-diagonals lower[i]·upper[i-1]
    let e2: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { m.lower[i] * m.upper[i - 1] }).collect();
    let scale = m.diag.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    let pivmin = f64::MIN_POSITIVE.max(1e-300 * scale * scale);
    let radius = m.diag.iter().enumerate().map(|(i, d)| d.abs() + m.lower[i].abs() + m.upper[i].abs()).fold(0.0f64, f64::max);
    let (lo, hi) = (-radius - 1.0, 1e-6 * scale + 1.0);
    let lambda1 = kth_largest(&m.diag, &e2, 1, lo, hi, pivmin);
    let lambda2 = kth_largest(&m.diag, &e2, 2, lo, hi, pivmin);
    let tol = NULL_TOL * scale;
    let dim = [lambda1, lambda2].iter().filter(|l| l.abs() <= tol).count();
    if dim != 1 {
        return Err(ErgodicError::NullSpace { dim, lambda1, lambda2, tol });
    }

    // inverse iteration on L_h − δI, δ > 0: the inverse of −(L_h − δI) is a
    // nonnegative matrix, so iterates started from a positive vector stay
    // positive.
    let delta = tol;
    let mut shifted = Tridiagonal {
        lower: m.lower.iter().map(|v| -v).collect(),
        diag: m.diag.iter().map(|v| delta - v).collect(),
        upper: m.upper.iter().map(|v| -v).collect(),
    };
    shifted.lower[0] = 0.0;
    let mut u = vec![1.0 / (n as f64 * grid.h); n];
    let mut next = vec![0.0; n];
    let mut scratch = Vec::new();
    for _ in 0..100 {
        shifted.solve(&u, &mut scratch, &mut next).ok_or(FvmError::SolveBreakdown { t: 0.0 })?;
        let mass = grid.mass(&next);
        for v in next.iter_mut() {
            *v /= mass;
        }
        let change = grid.l1_distance(&u, &next);
        std::mem::swap(&mut u, &mut next);
        if change <= 1e-15 {
            break;
        }
    }
    let min = u.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < NEGATIVE_TOL {
        return Err(ErgodicError::Negative { min });
    }
    let mut r = vec![0.0; n];
    m.mul_vec(&u, &mut r);
    let norm_u: f64 = u.iter().map(|v| v.abs()).sum();
    let residual = r.iter().map(|v| v.abs()).sum::<f64>() / (scale * norm_u);
    if residual > RESIDUAL_TOL {
        return Err(ErgodicError::Residual { residual });
    }
    Ok(StationaryDensity {
        grid: grid.clone(),
        mass: grid.mass(&u),
        u,
        residual,
        eigenvalues: [lambda1, lambda2],
        scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErgodicRow {
    pub t: f64,
    pub l1_to_stationary: f64,
    pub sigma_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ErgodicRow>,
    /// No value exceeds the running minimum of the earlier ones by more
    /// than a relative 1e-3.
    pub monotone_trend: bool,
}

impl ConvergenceReport {
    /// Distance at the first save time ≥ t.
    pub fn at(&self, t: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.t >= t - 1e-9 * t.max(1.0)).map(|r| r.l1_to_stationary)
    }
}

/// L¹(σ_t, stationary) at every save time with enough history. The running
/// trapezoid sum makes this linear in the number of saves.
pub fn convergence_report(flow: &DensityFlow, stationary: &StationaryDensity) -> Result<ConvergenceReport, ErgodicError> {
    if flow.grid != stationary.grid {
        return Err(ErgodicError::GridMismatch);
    }
    let g = &flow.grid;
    let mut integral = vec![0.0; g.n];
    let mut rows = Vec::new();
    for m in 1..flow.times.len() {
        let d = flow.times[m] - flow.times[m - 1];
        for i in 0..g.n {
            integral[i] += 0.5 * d * (flow.densities[m - 1][i] + flow.densities[m][i]);
        }
        if m + 1 < MIN_SAVES {
            continue;
        }
        let t = flow.times[m];
        let sigma: Vec<f64> = integral.iter().map(|v| v / t).collect();
        rows.push(ErgodicRow {
            t,
            l1_to_stationary: g.l1_distance(&sigma, &stationary.u),
            sigma_mass: g.mass(&sigma),
        });
    }
    let mut best = f64::INFINITY;
    let mut monotone_trend = true;
    for r in &rows {
        if r.l1_to_stationary > best * (1.0 + 1e-3) + 1e-12 {
            monotone_trend = false;
        }
        best = best.min(r.l1_to_stationary);
    }
    Ok(ConvergenceReport { rows, monotone_trend })
}

/// ∫V dσ_t at every save time with enough history.
pub fn averaged_moment(flow: &DensityFlow, v: &Compiled) -> Result<Vec<(f64, f64)>, ErgodicError> {
    let g = &flow.grid;
    let vals: Vec<f64> = g.centers().iter().map(|x| v.eval(&[*x], 0.0)).collect::<Result<_, _>>()?;
    let moments: Vec<f64> = flow.densities.iter().map(|u| u.iter().zip(&vals).map(|(a, b)| a * b).sum::<f64>() * g.h).collect();
    let mut acc = 0.0;
    let mut out = Vec::new();
    for m in 1..flow.times.len() {
        acc += 0.5 * (flow.times[m] - flow.times[m - 1]) * (moments[m - 1] + moments[m]);
        if m + 1 >= MIN_SAVES {
            out.push((flow.times[m], acc / flow.times[m]));
        }
    }
    Ok(out)
}
