use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::grid::{FluxStencil, Grid1D};
use super::{Coefficients1D, FvmError};
use crate::problem::Problem;
use crate::tridiag::Tridiagonal;

/// Grid densities at the save times of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityFlow {
    pub grid: Grid1D,
    pub eps: f64,
    pub times: Vec<f64>,
    pub densities: Vec<Vec<f64>>,
}

impl DensityFlow {
    pub fn mass(&self, m: usize) -> f64 {
        self.grid.mass(&self.densities[m])
    }

    pub fn last(&self) -> &[f64] {
        self.densities.last().expect("flows hold at least the initial time")
    }

    /// Index of the save time closest to `t`.
    pub fn index_near(&self, t: f64) -> usize {
        let mut best = 0;
        for (m, s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = m;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: f64,
    /// Mass present.
    pub m: f64,
    /// Accumulated ∫∫ c u (nonpositive).
    pub c: f64,
    /// Accumulated frontier outflow.
    pub b: f64,
    /// M − ν(D) − C.
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassLedger {
    pub initial_mass: f64,
    pub rows: Vec<LedgerRow>,
}

impl MassLedger {
    /// max over rows of |M + |C| + B − ν(D)|.
    pub fn budget_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.m + r.c.abs() + r.b - self.initial_mass).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.r).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Time-stepping state of one run. Times are `step * dt` so that a restart
/// reproduces the arithmetic of an uninterrupted run.
#[derive(Clone)]
pub struct FvmState {
    grid: Grid1D,
    coeffs: Arc<dyn Coefficients1D>,
    eps: f64,
    dt: f64,
    step: u64,
    u: Vec<f64>,
    cached: Option<FluxStencil>,
    time_dependent: bool,
    matrix: Tridiagonal,
    scratch: Vec<f64>,
    next: Vec<f64>,
    initial_mass: f64,
    killed: f64,
    outflow: f64,
}

impl FvmState {
    pub fn new(problem: &Problem, grid: &Grid1D, dt: f64, eps: f64) -> Result<Self, FvmError> {
        Self::with_coefficients(problem, Arc::new(problem.coefficients.clone()), grid, dt, eps)
    }

    /// Initial data from `problem`, coefficient fields from `coeffs`.
    pub fn with_coefficients(problem: &Problem, coeffs: Arc<dyn Coefficients1D>, grid: &Grid1D, dt: f64, eps: f64) -> Result<Self, FvmError> {
        let masses = problem.initial.cell_masses_1d(&grid.edges())?;
        let u = masses.iter().map(|m| m / grid.h).collect();
        Self::from_density(grid, coeffs, u, 0.0, dt, eps)
    }

    /// Restart from cell densities at time `t0` (rounded to the dt grid).
    pub fn from_density(grid: &Grid1D, coeffs: Arc<dyn Coefficients1D>, u: Vec<f64>, t0: f64, dt: f64, eps: f64) -> Result<Self, FvmError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(FvmError::Grid(format!("time step must be positive, got {dt}")));
        }
        if !(eps >= 0.0) {
            return Err(FvmError::Grid(format!("viscosity must be nonnegative, got {eps}")));
        }
        if u.len() != grid.n {
            return Err(FvmError::Grid(format!("density has {} cells, grid has {}", u.len(), grid.n)));
        }
        let initial_mass = grid.mass(&u);
        Ok(FvmState {
            grid: grid.clone(),
            time_dependent: coeffs.depends_on_time(),
            coeffs,
            eps,
            dt,
            step: (t0 / dt).round() as u64,
            cached: None,
            matrix: Tridiagonal::zeros(grid.n),
            scratch: Vec::with_capacity(grid.n),
            next: vec![0.0; grid.n],
            u,
            initial_mass,
            killed: 0.0,
            outflow: 0.0,
        })
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn density(&self) -> &[f64] {
        &self.u
    }

    pub fn ledger_row(&self) -> LedgerRow {
        let m = self.grid.mass(&self.u);
        LedgerRow {
            t: self.time(),
            m,
            c: self.killed,
            b: self.outflow,
            r: m - self.initial_mass - self.killed,
        }
    }

    /// One backward-Euler step with coefficients frozen at the new time.
    pub fn step(&mut self) -> Result<(), FvmError> {
        let t_new = (self.step + 1) as f64 * self.dt;
        let h = self.grid.h;
        if self.time_dependent || self.cached.is_none() {
            let s = FluxStencil::assemble(&self.grid, self.coeffs.as_ref(), self.eps, t_new)?;
            s.implicit_matrix(h, self.dt, &mut self.matrix);
            self.cached = Some(s);
        }
        let stencil = self.cached.as_ref().unwrap();
        if self.matrix.solve(&self.u, &mut self.scratch, &mut self.next).is_none() {
            return Err(FvmError::SolveBreakdown { t: t_new });
        }
        if let Some(i) = self.next.iter().position(|v| !v.is_finite()) {
            return Err(FvmError::NonFiniteDensity { t: t_new, x: self.grid.center(i) });
        }
        std::mem::swap(&mut self.u, &mut self.next);
        self.outflow += self.dt * stencil.outflow(&self.u);
        self.killed += self.dt * stencil.killing_rate(h, &self.u);
        self.step += 1;
        Ok(())
    }

    /// Advance to the absolute step index `target`, recording at `saves`.
    fn run_to(&mut self, saves: &[u64], flow: &mut DensityFlow, ledger: &mut MassLedger) -> Result<(), FvmError> {
        for &s in saves {
            while self.step < s {
                self.step()?;
            }
            flow.times.push(self.time());
            flow.densities.push(self.u.clone());
            ledger.rows.push(self.ledger_row());
        }
        Ok(())
    }
}

/// Single implicit Euler step of the ε-regularized equation.
pub fn step<C: Coefficients1D + ?Sized>(grid: &Grid1D, coeffs: &C, u: &[f64], t_new: f64, dt: f64, eps: f64) -> Result<Vec<f64>, FvmError> {
    let s = FluxStencil::assemble(grid, coeffs, eps, t_new)?;
    let mut m = Tridiagonal::zeros(grid.n);
    s.implicit_matrix(grid.h, dt, &mut m);
    let mut out = vec![0.0; grid.n];
    m.solve(u, &mut Vec::new(), &mut out).ok_or(FvmError::SolveBreakdown { t: t_new })?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOptions {
    pub t_end: f64,
    pub k: u32,
    pub n: usize,
    pub dt: f64,
    pub eps_ladder: Vec<f64>,
    pub save_times: Vec<f64>,
}

impl SolveOptions {
    /// Step count and step size: `dt` is shrunk so that T is hit exactly.
    pub fn time_grid(&self) -> Result<(u64, f64), FvmError> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(FvmError::Grid(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.dt > 0.0) {
            return Err(FvmError::Grid(format!("dt must be positive, got {}", self.dt)));
        }
        let steps = ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as u64;
        let dt = if ((steps as f64) * self.dt - self.t_end).abs() <= 1e-12 * self.t_end {
            self.dt
        } else {
            self.t_end / steps as f64
        };
        Ok((steps, dt))
    }

    /// Save steps: 0, every requested time snapped to the dt grid, and T.
    pub fn save_steps(&self, steps: u64, dt: f64) -> Vec<u64> {
        let mut s: Vec<u64> = std::iter::once(0)
            .chain(self.save_times.iter().map(|t| ((t / dt).round().max(0.0) as u64).min(steps)))
            .chain(std::iter::once(steps))
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsRun {
    pub eps: f64,
    pub flow: DensityFlow,
    pub ledger: MassLedger,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub dt: f64,
    pub runs: Vec<EpsRun>,
    /// L¹ distance at T between consecutive ladder entries.
    pub ladder_l1: Vec<f64>,
    pub warnings: Vec<String>,
}

impl SolveReport {
    /// The run with the smallest ε.
    pub fn finest(&self) -> &EpsRun {
        self.runs
            .iter()
            .min_by(|a, b| a.eps.total_cmp(&b.eps))
            .expect("a solve has at least one run")
    }
}

pub fn run_single(problem: &Problem, grid: &Grid1D, opts: &SolveOptions, eps: f64) -> Result<EpsRun, FvmError> {
    run_single_with(problem, Arc::new(problem.coefficients.clone()), grid, opts, eps)
}

pub fn run_single_with(problem: &Problem, coeffs: Arc<dyn Coefficients1D>, grid: &Grid1D, opts: &SolveOptions, eps: f64) -> Result<EpsRun, FvmError> {
    let (steps, dt) = opts.time_grid()?;
    let saves = opts.save_steps(steps, dt);
    let mut state = FvmState::with_coefficients(problem, coeffs, grid, dt, eps)?;
    let mut flow = DensityFlow {
        grid: grid.clone(),
        eps,
        times: Vec::with_capacity(saves.len()),
        densities: Vec::with_capacity(saves.len()),
    };
    let mut ledger = MassLedger {
        initial_mass: state.initial_mass,
        rows: Vec::with_capacity(saves.len()),
    };
    state.run_to(&saves, &mut flow, &mut ledger)?;
    Ok(EpsRun { eps, flow, ledger })
}

/// Continue `state` through the given absolute save steps.
pub fn continue_run(state: &mut FvmState, saves: &[u64]) -> Result<(DensityFlow, MassLedger), FvmError> {
    let mut flow = DensityFlow {
        grid: state.grid.clone(),
        eps: state.eps,
        times: Vec::new(),
        densities: Vec::new(),
    };
    let mut ledger = MassLedger {
        initial_mass: state.initial_mass,
        rows: Vec::new(),
    };
    state.run_to(saves, &mut flow, &mut ledger)?;
    Ok((flow, ledger))
}

/// Full solve over the ε ladder. Ladder runs are independent and run in
/// parallel.
pub fn solve(problem: &Problem, opts: &SolveOptions) -> Result<SolveReport, FvmError> {
    solve_with(problem, Arc::new(problem.coefficients.clone()), opts)
}

/// As [`solve`], with replacement coefficient fields (e.g. mollified ones).
pub fn solve_with(problem: &Problem, coeffs: Arc<dyn Coefficients1D>, opts: &SolveOptions) -> Result<SolveReport, FvmError> {
    if problem.dim() != 1 {
        return Err(FvmError::NotOneDimensional(problem.dim()));
    }
    let grid = Grid1D::new(problem, opts.k, opts.n)?;
    let ladder = if opts.eps_ladder.is_empty() { vec![0.0] } else { opts.eps_ladder.clone() };
    let (_, dt) = opts.time_grid()?;
    let runs = ladder
        .par_iter()
        .map(|&eps| run_single_with(problem, coeffs.clone(), &grid, opts, eps))
        .collect::<Result<Vec<_>, _>>()?;
    let ladder_l1: Vec<f64> = runs
        .windows(2)
        .map(|w| grid.l1_distance(w[0].flow.last(), w[1].flow.last()))
        .collect();
    let mut warnings = Vec::new();
    if ladder_l1.len() >= 2 {
        let (a, b) = (ladder_l1[ladder_l1.len() - 2], ladder_l1[ladder_l1.len() - 1]);
        if b >= a {
            warnings.push(format!("viscosity ladder not converging: last L1 distances {a:e}, {b:e}"));
        }
    }
    Ok(SolveReport {
        dt,
        runs,
        ladder_l1,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MassRegime {
    Identity,
    StrictSubprobability,
    /// r(t) > tol somewhere: the discrete inequality itself failed.
    Con1Violated,
}

#[derive(Debug, Clone, Serialize)]
pub struct MassIdentityReport {
    pub regime: MassRegime,
    pub tol_mass: f64,
    pub max_abs_residual: f64,
    pub min_residual: f64,
    pub max_residual: f64,
    pub budget_error: f64,
    pub outflow_curve: Vec<(f64, f64)>,
}

pub fn mass_identity_report(ledger: &MassLedger, tol_mass: f64) -> MassIdentityReport {
    let tol = tol_mass * ledger.initial_mass.max(f64::MIN_POSITIVE);
    let min_r = ledger.rows.iter().map(|r| r.r).fold(f64::INFINITY, f64::min);
    let max_r = ledger.rows.iter().map(|r| r.r).fold(f64::NEG_INFINITY, f64::max);
    let max_abs = ledger.rows.iter().map(|r| r.r.abs()).fold(0.0, f64::max);
    let regime = if max_r > tol {
        MassRegime::Con1Violated
    } else if max_abs <= tol {
        MassRegime::Identity
    } else {
        MassRegime::StrictSubprobability
    };
    MassIdentityReport {
        regime,
        tol_mass,
        max_abs_residual: max_abs,
        min_residual: min_r,
        max_residual: max_r,
        budget_error: ledger.budget_error(),
        outflow_curve: ledger.rows.iter().map(|r| (r.t, r.b)).collect(),
    }
}
