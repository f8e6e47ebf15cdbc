//! Euler–Maruyama particle oracle for dX = b dt + σ dW with σσᵀ = 2A,
//! killing at rate |c| and absorption when a path leaves D.
//!
//! Every path owns one ChaCha8 stream (stream index = path index), so the
//! result does not depend on the number of worker threads, and a resumed
//! ensemble continues exactly where a longer run would be.

use nalgebra::{Matrix2, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::exprlang::{Compiled, EvalError};
use crate::fvm::{DensityFlow, Grid1D};
use crate::problem::{InitialMeasure, Problem, ProblemError, Tabulated};

#[derive(Debug, thiserror::Error)]
pub enum SdeError {
    #[error("options: {0}")]
    Options(String),
    #[error("diffusion matrix is not positive semidefinite at x = {x:?}, t = {t} (eigenvalue {lambda})")]
    NotPsd { x: Vec<f64>, t: f64, lambda: f64 },
    #[error("coefficient is not finite at x = {x:?}, t = {t}")]
    NonFinite { x: Vec<f64>, t: f64 },
    #[error("the Monte Carlo oracle supports dimension 1 to 3, got {0}")]
    Dimension(usize),
    #[error("time mismatch: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathStatus {
    Alive,
    Killed,
    Exited,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McOptions {
    pub t_end: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub save_times: Vec<f64>,
    /// Exhaustion index of the region used to sample a density ν.
    pub sample_k: u32,
    /// Cells per axis for that tabulation.
    pub sample_cells: usize,
}

impl McOptions {
    pub fn new(t_end: f64, dt: f64, n_paths: usize, seed: u64) -> Self {
        McOptions {
            t_end,
            dt,
            n_paths,
            seed,
            save_times: Vec::new(),
            sample_k: 20,
            sample_cells: 2000,
        }
    }
}

/// Positions and statuses of all paths at one save time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub n_paths: usize,
    pub alive: usize,
    pub killed: usize,
    pub exited: usize,
    /// Alive positions, `dim` numbers per path, in path order.
    pub positions: Vec<f64>,
    /// Mean and standard error over paths of 1{alive} − 1 − ∫₀ᵗ c(X_s) 1{alive} ds.
    pub con1_mean: f64,
    pub con1_se: f64,
}

impl Snapshot {
    pub fn alive_fraction(&self) -> f64 {
        self.alive as f64 / self.n_paths as f64
    }

    pub fn killed_fraction(&self) -> f64 {
        self.killed as f64 / self.n_paths as f64
    }

    pub fn exited_fraction(&self) -> f64 {
        self.exited as f64 / self.n_paths as f64
    }

    /// The sampled form of μ_t(D) ≤ ν(D) + ∫∫ c dμ holds within 3 SE.
    pub fn con1_holds(&self) -> bool {
        self.con1_mean <= 3.0 * self.con1_se + 1e-15
    }
}

#[derive(Debug, Clone)]
struct PathState {
    x: Vec<f64>,
    status: PathStatus,
    event_time: f64,
    c_integral: f64,
    rng: ChaCha8Rng,
}

/// Full simulation state; `resume` continues it.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub dim: usize,
    pub dt: f64,
    pub seed: u64,
    pub step: u64,
    paths: Vec<PathState>,
}

impl PathEnsemble {
    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn status(&self, i: usize) -> PathStatus {
        self.paths[i].status
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.paths[i].x
    }

    /// Time of killing or exit, NaN while alive.
    pub fn event_time(&self, i: usize) -> f64 {
        self.paths[i].event_time
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for p in &self.paths {
            match p.status {
                PathStatus::Alive => c.0 += 1,
                PathStatus::Killed => c.1 += 1,
                PathStatus::Exited => c.2 += 1,
            }
        }
        c
    }

    fn snapshot(&self) -> Snapshot {
        let (alive, killed, exited) = self.counts();
        let mut positions = Vec::with_capacity(alive * self.dim);
        let n = self.paths.len() as f64;
        let (mut s, mut s2) = (0.0, 0.0);
        for p in &self.paths {
            if p.status == PathStatus::Alive {
                positions.extend_from_slice(&p.x);
            }
            let d = if p.status == PathStatus::Alive { 0.0 } else { -1.0 } - p.c_integral;
            s += d;
            s2 += d * d;
        }
        let mean = s / n;
        let var = if n > 1.0 { ((s2 - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        Snapshot {
            t: self.time(),
            n_paths: self.paths.len(),
            alive,
            killed,
            exited,
            positions,
            con1_mean: mean,
            con1_se: (var / n).sqrt(),
        }
    }
}

/// Compiled coefficients plus a cached square root when A is constant.
struct Dynamics {
    dim: usize,
    a: Vec<Compiled>,
    b: Vec<Compiled>,
    c: Compiled,
    c_zero: bool,
    sigma_const: Option<Vec<f64>>,
}

impl Dynamics {
    fn new(problem: &Problem) -> Result<Self, SdeError> {
        let co = &problem.coefficients;
        let d = co.dim();
        if !(1..=3).contains(&d) {
            return Err(SdeError::Dimension(d));
        }
        let a: Vec<Compiled> = (0..d * d).map(|k| Compiled::new(co.a(k / d, k % d))).collect();
        let b = (0..d).map(|i| Compiled::new(co.b(i))).collect();
        let c = Compiled::new(co.c());
        let c_zero = c.constant_value() == Some(0.0);
        let mut dynamics = Dynamics {
            dim: d,
            a,
            b,
            c,
            c_zero,
            sigma_const: None,
        };
        if co.diffusion_is_constant() {
            let origin = vec![0.0; d];
            let mut s = vec![0.0; d * d];
            dynamics.sigma(&origin, 0.0, &mut s)?;
            dynamics.sigma_const = Some(s);
        }
        Ok(dynamics)
    }

    /// Symmetric square root of 2A into `out`.
    fn sigma(&self, x: &[f64], t: f64, out: &mut [f64]) -> Result<(), SdeError> {
        if let Some(s) = &self.sigma_const {
            out.copy_from_slice(s);
            return Ok(());
        }
        let d = self.dim;
        let mut m = [0.0; 9];
        for k in 0..d * d {
            m[k] = 2.0 * self.a[k].eval(x, t)?;
        }
        let not_psd = |lambda: f64| SdeError::NotPsd { x: x.to_vec(), t, lambda };
        let tol = |scale: f64| -1e-12 * scale.max(1.0);
        match d {
            1 => {
                if !m[0].is_finite() {
                    return Err(SdeError::NonFinite { x: x.to_vec(), t });
                }
                if m[0] < tol(0.0) {
                    return Err(not_psd(m[0] / 2.0));
                }
                out[0] = m[0].max(0.0).sqrt();
            }
            2 => {
                let e = Matrix2::new(m[0], 0.5 * (m[1] + m[2]), 0.5 * (m[1] + m[2]), m[3]).symmetric_eigen();
                let scale = e.eigenvalues.amax();
                let mut r = Matrix2::zeros();
                for k in 0..2 {
                    let l = e.eigenvalues[k];
                    if !l.is_finite() {
                        return Err(SdeError::NonFinite { x: x.to_vec(), t });
                    }
                    if l < tol(scale) {
                        return Err(not_psd(l / 2.0));
                    }
                    let v = e.eigenvectors.column(k);
                    r += v * v.transpose() * l.max(0.0).sqrt();
                }
                out.copy_from_slice(&[r[(0, 0)], r[(0, 1)], r[(1, 0)], r[(1, 1)]]);
            }
            _ => {
                let sym = |i: usize, j: usize| 0.5 * (m[3 * i + j] + m[3 * j + i]);
                let e = Matrix3::from_fn(sym).symmetric_eigen();
                let scale = e.eigenvalues.amax();
                let mut r = Matrix3::zeros();
                for k in 0..3 {
                    let l = e.eigenvalues[k];
                    if !l.is_finite() {
                        return Err(SdeError::NonFinite { x: x.to_vec(), t });
                    }
                    if l < tol(scale) {
                        return Err(not_psd(l / 2.0));
                    }
                    let v = e.eigenvectors.column(k);
                    r += v * v.transpose() * l.max(0.0).sqrt();
                }
                for i in 0..3 {
                    for j in 0..3 {
                        out[3 * i + j] = r[(i, j)];
                    }
                }
            }
        }
        Ok(())
    }
}

/// One Euler–Maruyama step of a single path from time `t`.
fn advance(p: &mut PathState, dyn_: &Dynamics, problem: &Problem, t: f64, dt: f64, sigma: &mut [f64], z: &mut [f64], drift: &mut [f64]) -> Result<(), SdeError> {
    let d = dyn_.dim;
    if !dyn_.c_zero {
        let c = dyn_.c.eval(&p.x, t)?;
        if !c.is_finite() {
            return Err(SdeError::NonFinite { x: p.x.clone(), t });
        }
        p.c_integral += c * dt;
        let u: f64 = p.rng.random();
        if u < -(c * dt).exp_m1() {
            p.status = PathStatus::Killed;
            p.event_time = t + dt;
            return Ok(());
        }
    }
    for i in 0..d {
        drift[i] = dyn_.b[i].eval(&p.x, t)?;
    }
    dyn_.sigma(&p.x, t, sigma)?;
    for zi in z.iter_mut() {
        *zi = p.rng.sample(StandardNormal);
    }
    let sq = dt.sqrt();
    for i in 0..d {
        let mut noise = 0.0;
        for j in 0..d {
            noise += sigma[i * d + j] * z[j];
        }
        p.x[i] += drift[i] * dt + noise * sq;
    }
    if p.x.iter().any(|v| !v.is_finite()) {
        return Err(SdeError::NonFinite { x: p.x.clone(), t });
    }
    if !problem.domain.contains(&p.x) {
        p.status = PathStatus::Exited;
        p.event_time = t + dt;
    }
    Ok(())
}

fn sample_initial(nu: &InitialMeasure, table: Option<&(Tabulated, Vec<f64>)>, rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    match nu {
        InitialMeasure::Dirac(p) => p.clone(),
        InitialMeasure::Uniform { lower, upper } => (0..d).map(|i| lower[i] + (upper[i] - lower[i]) * rng.random::<f64>()).collect(),
        InitialMeasure::Density(_) => {
            let (tab, cum) = table.expect("density tabulated");
            let u: f64 = rng.random();
            let k = cum.partition_point(|c| *c <= u).min(cum.len() - 1);
            (0..d).map(|i| tab.corners[k][i] + tab.widths[i] * rng.random::<f64>()).collect()
        }
    }
}

fn step_plan(dt: f64, t_start: u64, t_end: f64, save_times: &[f64]) -> Result<(u64, Vec<u64>), SdeError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SdeError::Options(format!("dt must be positive, got {dt}")));
    }
    let end = (t_end / dt).round() as u64;
    if ((end as f64) * dt - t_end).abs() > 1e-9 * t_end.max(1.0) {
        return Err(SdeError::Options(format!("t_end = {t_end} is not a multiple of dt = {dt}")));
    }
    if end < t_start {
        return Err(SdeError::Options(format!("cannot run backwards to t = {t_end}")));
    }
    let mut saves: Vec<u64> = save_times
        .iter()
        .map(|t| (t / dt).round() as u64)
        .filter(|s| *s >= t_start && *s <= end)
        .chain([t_start, end])
        .collect();
    saves.sort_unstable();
    saves.dedup();
    Ok((end, saves))
}

/// Simulate `n_paths` from ν over [0, T]; snapshots at 0, each save time
/// (snapped to the dt grid) and T.
pub fn simulate(problem: &Problem, opts: &McOptions) -> Result<(PathEnsemble, Vec<Snapshot>), SdeError> {
    if opts.n_paths == 0 {
        return Err(SdeError::Options("need at least one path".into()));
    }
    let d = problem.dim();
    let table = match &problem.initial {
        InitialMeasure::Density(_) => {
            let region = problem.domain.exhaust(opts.sample_k.max(1));
            let cells = if d == 1 { opts.sample_cells } else { opts.sample_cells.min(if d == 2 { 400 } else { 60 }) };
            let tab = problem.initial.tabulate(&region, cells.max(1))?;
            let mut acc = 0.0;
            let cum: Vec<f64> = tab.masses.iter().map(|m| {
                acc += m;
                acc
            })
            .collect();
            Some((tab, cum))
        }
        _ => None,
    };
    let paths: Vec<PathState> = (0..opts.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(i as u64);
            let x = sample_initial(&problem.initial, table.as_ref(), &mut rng, d);
            let inside = problem.domain.contains(&x);
            PathState {
                x,
                status: if inside { PathStatus::Alive } else { PathStatus::Exited },
                event_time: if inside { f64::NAN } else { 0.0 },
                c_integral: 0.0,
                rng,
            }
        })
        .collect();
    let mut ens = PathEnsemble {
        dim: d,
        dt: opts.dt,
        seed: opts.seed,
        step: 0,
        paths,
    };
    let snaps = resume(problem, &mut ens, opts.t_end, &opts.save_times)?;
    Ok((ens, snaps))
}

/// Continue an ensemble to `t_end`. The first snapshot is the current state.
pub fn resume(problem: &Problem, ens: &mut PathEnsemble, t_end: f64, save_times: &[f64]) -> Result<Vec<Snapshot>, SdeError> {
    let (_, saves) = step_plan(ens.dt, ens.step, t_end, save_times)?;
    let dyn_ = Dynamics::new(problem)?;
    let d = ens.dim;
    let dt = ens.dt;
    let start = ens.step;
    // path-major: each path runs through all saves, recording its state
    let records: Vec<Vec<PathState>> = ens
        .paths
        .par_iter_mut()
        .map(|p| -> Result<Vec<PathState>, SdeError> {
            let mut sigma = vec![0.0; d * d];
            let mut z = vec![0.0; d];
            let mut drift = vec![0.0; d];
            let mut step = start;
            let mut out = Vec::with_capacity(saves.len());
            for &s in &saves {
                while step < s {
                    if p.status == PathStatus::Alive {
                        advance(p, &dyn_, problem, step as f64 * dt, dt, &mut sigma, &mut z, &mut drift)?;
                    }
                    step += 1;
                }
                out.push(PathState {
                    x: p.x.clone(),
                    status: p.status,
                    event_time: p.event_time,
                    c_integral: p.c_integral,
                    rng: ChaCha8Rng::seed_from_u64(0),
                });
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    let mut snaps = Vec::with_capacity(saves.len());
    for (m, &s) in saves.iter().enumerate() {
        let view = PathEnsemble {
            dim: d,
            dt,
            seed: ens.seed,
            step: s,
            paths: records.iter().map(|r| r[m].clone()).collect(),
        };
        snaps.push(view.snapshot());
    }
    ens.step = *saves.last().unwrap();
    Ok(snaps)
}

/// Histogram density of the alive paths of a 1D snapshot on `grid`; its
/// mass is the fraction of paths alive and inside the grid. A path sitting
/// exactly on an interior face counts half to each side, as a Dirac does
/// in the grid solver.
pub fn empirical_density(snap: &Snapshot, grid: &Grid1D) -> Vec<f64> {
    let mut u = vec![0.0; grid.n];
    let w = 1.0 / (snap.n_paths as f64 * grid.h);
    for x in &snap.positions {
        if let Some(i) = grid.locate(*x) {
            let i = if i + 1 < grid.n && *x == grid.edge(i + 1) { i + 1 } else { i };
            if i > 0 && *x == grid.edge(i) {
                u[i - 1] += 0.5 * w;
                u[i] += 0.5 * w;
            } else {
                u[i] += w;
            }
        }
    }
    u
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareRow {
    pub t: f64,
    pub l1: f64,
    pub mass_delta: f64,
}

/// Sum adjacent cells into about `blocks` blocks.
fn coarsen(u: &[f64], h: f64, factor: usize) -> Vec<f64> {
    u.chunks(factor).map(|c| c.iter().sum::<f64>() * h).collect()
}

/// Per save time L¹ distance between the PDE flow and the particle
/// histogram, measured on blocks of cells (about `blocks` of them), and the
/// absolute mass difference. Save times must match.
pub fn compare(flow: &DensityFlow, snaps: &[Snapshot], blocks: usize) -> Result<Vec<CompareRow>, SdeError> {
    let times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let mc: Vec<Vec<f64>> = snaps.iter().map(|s| empirical_density(s, &flow.grid)).collect();
    compare_densities(flow, &times, &mc, blocks)
}

/// `compare` on histograms already binned on the flow's grid.
pub fn compare_densities(flow: &DensityFlow, times: &[f64], mc: &[Vec<f64>], blocks: usize) -> Result<Vec<CompareRow>, SdeError> {
    if flow.times.len() != times.len() || mc.len() != times.len() {
        return Err(SdeError::Mismatch(format!("flow has {} save times, ensemble has {}", flow.times.len(), times.len())));
    }
    let g = &flow.grid;
    let factor = (g.n / blocks.max(1)).max(1);
    let mut rows = Vec::with_capacity(times.len());
    for (m, &s) in times.iter().enumerate() {
        let t = flow.times[m];
        if (s - t).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(SdeError::Mismatch(format!("flow time {t} vs snapshot time {s}")));
        }
        if mc[m].len() != g.n || flow.densities[m].len() != g.n {
            return Err(SdeError::Mismatch(format!("histogram has {} cells, grid has {}", mc[m].len(), g.n)));
        }
        let a = coarsen(&flow.densities[m], g.h, factor);
        let b = coarsen(&mc[m], g.h, factor);
        let l1 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        rows.push(CompareRow {
            t,
            l1,
            mass_delta: (g.mass(&flow.densities[m]) - g.mass(&mc[m])).abs(),
        });
    }
    Ok(rows)
}
