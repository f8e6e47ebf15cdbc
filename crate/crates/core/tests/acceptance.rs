//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if a criterion fails that is not listed in `KNOWN_RED`.
//!
//! Reference values come from closed forms evaluated here by Gauss-Legendre
//! cell averages, independent of the library's quadrature.

use std::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use fpk_core::config::RunConfig;
use fpk_core::ergodic::{stationary_solve, time_average};
use fpk_core::exprlang::{parse, Compiled, Expr, Var};
use fpk_core::fvm::{continue_run, mass_identity_report, run_single, solve, FvmState, Grid1D, MassRegime};
use fpk_core::lyapunov::{check_ergodic_condition, check_existence_condition, check_uniqueness_class, moment_bound_check, CertificateKind};
use fpk_core::mollify::{mollify_coefficients, TimeExtension};
use fpk_core::problem::{sym_eigenvalues, Problem};
use fpk_core::sampling::Halton;
use fpk_core::sde::{resume, simulate, McOptions, PathEnsemble};

/// Criteria that cannot be met as stated. They run and print FAIL without
/// failing the suite; see the README.
const KNOWN_RED: [&str; 1] = ["3(b)"];

type Res<T> = Result<T, Box<dyn Error>>;

struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn line(id: &'static str, pass: bool, detail: String) -> Line {
    Line { id, pass, detail }
}

fn config(name: &str) -> Res<RunConfig> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    Ok(RunConfig::parse(&std::fs::read_to_string(&path)?)?)
}

fn shipped_configs() -> Res<Vec<(String, RunConfig)>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".cfg"))
        .collect();
    names.sort();
    names.into_iter().map(|n| Ok((n.clone(), config(&n)?))).collect()
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Cell averages of `f` on `grid`, five-point Gauss-Legendre on each of
/// `sub` pieces per cell.
fn cell_averages(grid: &Grid1D, sub: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..grid.n)
        .map(|i| {
            let (a, b) = (grid.edge(i), grid.edge(i + 1));
            let w = (b - a) / sub as f64;
            let mut s = 0.0;
            for j in 0..sub {
                let mid = a + (j as f64 + 0.5) * w;
                for (z, wt) in GL5 {
                    s += wt * 0.5 * w * f(mid + 0.5 * w * z);
                }
            }
            s / (b - a)
        })
        .collect()
}

fn gaussian_half(x: f64) -> f64 {
    (-x * x).exp() / std::f64::consts::PI.sqrt()
}

fn min_density(densities: &[Vec<f64>]) -> f64 {
    densities.iter().flatten().copied().fold(f64::INFINITY, f64::min)
}

fn heat_kernel() -> Res<Vec<Line>> {
    let cfg = config("heat.cfg")?;
    let p = cfg.problem()?;
    let report = solve(&p, &cfg.solve_options())?;
    let run = report.finest();
    let g = &run.flow.grid;
    let exact = cell_averages(g, 1, gaussian_half);
    let l1 = g.l1_distance(run.flow.last(), &exact);
    let m = run.flow.mass(run.flow.times.len() - 1);
    let t = *run.flow.times.last().unwrap();
    Ok(vec![line(
        "1",
        l1 <= 5e-3 && m >= 1.0 - 1e-6 && t == 0.5,
        format!("heat on ({}, {}), N = {}: L1 = {l1:.3e} at t = {t}, M = 1 - {:.2e}", g.lower, g.upper, g.n, 1.0 - m),
    )])
}

fn killing_ledger() -> Res<Vec<Line>> {
    let cfg = config("killing.cfg")?;
    let p = cfg.problem()?;
    let run = run_single(&p, &Grid1D::new(&p, cfg.solver.k, cfg.solver.n)?, &cfg.solve_options(), 0.0)?;
    let worst = run.ledger.rows.iter().map(|r| (r.m - (-0.3 * r.t).exp()).abs()).fold(0.0, f64::max);
    let budget = run.ledger.budget_error();
    Ok(vec![line(
        "2",
        worst <= 1e-3 && budget <= 1e-6,
        format!("max |M - exp(-0.3 t)| = {worst:.3e} over {} saves, |M + |C| + B - 1| = {budget:.2e}", run.ledger.rows.len()),
    )])
}

fn ou_ergodic() -> Res<Vec<Line>> {
    let mut cfg = config("ou.cfg")?;
    let p = cfg.problem()?;
    let grid = Grid1D::new(&p, cfg.solver.k, 2000)?;
    let exact = cell_averages(&grid, 1, gaussian_half);
    let st = stationary_solve(&p, &grid)?;
    let l1_st = grid.l1_distance(&st.u, &exact);

    let t_end = 20.0;
    cfg.solver.t_end = t_end;
    cfg.solver.save_times = (1..=1000).map(|i| t_end * i as f64 / 1000.0).collect();
    let run = run_single(&p, &grid, &cfg.solve_options(), 0.0)?;
    let sigma = time_average(&run.flow, t_end)?;
    let l1_sigma = grid.l1_distance(&sigma, &exact);
    Ok(vec![
        line("3(a)", l1_st <= 1e-3, format!("stationary on ({}, {}), N = 2000: L1 = {l1_st:.3e}", grid.lower, grid.upper)),
        line(
            "3(b)",
            l1_sigma <= 1e-2,
            format!("L1(sigma_20, exp(-x^2)/sqrt(pi)) = {l1_sigma:.3e}, L1(sigma_20, stationary) = {:.3e}", grid.l1_distance(&sigma, &st.u)),
        ),
    ])
}

fn degenerate_interval() -> Res<Vec<Line>> {
    let cfg = config("interval_degenerate.cfg")?;
    let p = cfg.problem()?;
    let v = cfg.lyapunov_v()?.ok_or("config has no V")?;
    let opts = cfg.sample_options();
    let mut out = Vec::new();

    let cert = check_existence_condition(&p, &v, &opts)?;
    let k1 = cert.constant("K").unwrap_or(f64::INFINITY);
    let ratios: Vec<(u32, f64)> = cert.shells.iter().map(|s| (s.k, s.sup_lv_over_v.unwrap_or(f64::INFINITY))).collect();
    let mut k0 = None;
    for (k, r) in ratios.iter().rev() {
        if *r < -1.0 {
            k0 = Some(*k);
        } else {
            break;
        }
    }
    let last = ratios.last().map(|r| r.1).unwrap_or(f64::NAN);
    out.push(line(
        "4(a)",
        cert.holds() && k1.is_finite() && k0.is_some_and(|k| k <= 12) && ratios.last().is_some_and(|r| r.0 >= 12),
        format!("existence {:?}, K1 = {k1:.5}, sup LV/V < -1 from shell {k0:?} to {}, last shell {last:.3e}", cert.status, ratios.len()),
    ));

    let cert = check_ergodic_condition(&p, &v, &opts)?;
    let k2 = cert.constant("K2").unwrap_or(f64::NAN);
    out.push(line("4(b)", cert.holds() && k2 > 0.0, format!("ergodic {:?}, K2 = {k2:.5}", cert.status)));

    let so = cfg.solve_options();
    let report = solve(&p, &so)?;
    let run = report.finest();
    let m1 = run.flow.mass(run.flow.times.len() - 1);
    out.push(line(
        "4(c)",
        m1 >= 0.999 && so.k == 12 && so.n == 4000 && so.dt == 5e-4,
        format!("K = {}, N = {}, dt = {}: M(1) = {m1:.6}", so.k, so.n, so.dt),
    ));

    let mo = cfg.mc_options(100_000, 1);
    let (_, snaps) = simulate(&p, &mo)?;
    let exited = snaps.last().unwrap().exited_fraction();
    out.push(line(
        "4(d)",
        exited <= 1e-3 && mo.dt == 1e-4,
        format!("{} paths, dt = {}: exited fraction {exited:.2e} at t = {}", mo.n_paths, mo.dt, mo.t_end),
    ));

    let grid = Grid1D::new(&p, so.k, so.n)?;
    let st = stationary_solve(&p, &grid)?;
    let mut long = so.clone();
    long.t_end = 50.0;
    long.save_times = (1..=500).map(|i| 0.1 * i as f64).collect();
    let flow = run_single(&p, &grid, &long, 0.0)?.flow;
    let sigma = time_average(&flow, 50.0)?;
    let l1 = grid.l1_distance(&sigma, &st.u);
    out.push(line("4(e)", l1 <= 0.05, format!("L1(sigma_50, stationary) = {l1:.4e}")));
    Ok(out)
}

fn linear_drift_killing() -> Res<Vec<Line>> {
    let mut detail = Vec::new();
    let mut ok = true;
    for name in ["rd_example_d1.cfg", "rd_example_d2.cfg"] {
        let cfg = config(name)?;
        let p = cfg.problem()?;
        let v = cfg.lyapunov_v()?.ok_or("config has no V")?;
        let cert = check_existence_condition(&p, &v, &cfg.sample_options())?;
        let k = cert.constant("K").unwrap_or(f64::INFINITY);
        ok &= cert.holds() && k.is_finite();
        detail.push(format!("d = {}: K = {k:.4}", p.dim()));
    }
    let cfg = config("rd_example_d2.cfg")?;
    let p = cfg.problem()?;
    let (_, snaps) = simulate(&p, &cfg.mc_options(cfg.mc.paths, 7))?;
    let worst = snaps.iter().filter(|s| s.con1_se > 0.0).map(|s| s.con1_mean / s.con1_se).fold(f64::NEG_INFINITY, f64::max);
    let con1 = snaps.iter().all(|s| s.con1_holds());
    detail.push(format!("MC d = 2, {} paths: max mean/SE of the (con1) defect {worst:.2} over {} saves", cfg.mc.paths, snaps.len()));
    Ok(vec![line("5", ok && con1, detail.join("; "))])
}

fn vanishing_viscosity() -> Res<Vec<Line>> {
    let cfg = config("transport.cfg")?;
    let p = cfg.problem()?;
    let report = solve(&p, &cfg.solve_options())?;
    let decreasing = report.ladder_l1.len() == 3 && report.ladder_l1.windows(2).all(|w| w[1] < w[0]);
    let run = report.finest();
    let g = &run.flow.grid;
    // the bump starts at -1 and moves with unit speed; its mass is 16/35
    let bump = |x: f64| (1.0 - 4.0 * x * x).max(0.0).powi(3) * 35.0 / 16.0;
    let shifted = cell_averages(g, 4, bump);
    let l1 = g.l1_distance(run.flow.last(), &shifted);
    Ok(vec![line(
        "6",
        decreasing && run.eps == 0.0 && l1 <= 0.02,
        format!("ladder {:?}: L1 between neighbours {:.4?}; eps = 0 vs shifted bump L1 = {l1:.4e}", cfg.solver.eps, report.ladder_l1),
    )])
}

fn restart_fvm(cfg: &RunConfig) -> Res<f64> {
    let p = cfg.problem()?;
    let opts = cfg.solve_options();
    let grid = Grid1D::new(&p, opts.k, opts.n)?;
    let (steps, dt) = opts.time_grid()?;
    let direct = run_single(&p, &grid, &opts, 0.0)?;
    let half = steps / 2;
    let mut first = FvmState::new(&p, &grid, dt, 0.0)?;
    let (flow, _) = continue_run(&mut first, &[half])?;
    let mut second = FvmState::from_density(&grid, Arc::new(p.coefficients.clone()), flow.last().to_vec(), half as f64 * dt, dt, 0.0)?;
    let (flow, _) = continue_run(&mut second, &[steps])?;
    Ok(grid.l1_distance(direct.flow.last(), flow.last()))
}

fn same_paths(a: &PathEnsemble, b: &PathEnsemble) -> bool {
    a.n_paths() == b.n_paths()
        && a.step == b.step
        && (0..a.n_paths()).all(|i| {
            a.status(i) == b.status(i)
                && a.event_time(i).to_bits() == b.event_time(i).to_bits()
                && a.position(i).iter().zip(b.position(i)).all(|(x, y)| x.to_bits() == y.to_bits())
        })
}

fn restart_mc(p: &Problem, t_end: f64, dt: f64) -> Res<bool> {
    let mut o = McOptions::new(t_end, dt, 2000, 11);
    o.save_times = vec![0.5 * t_end];
    let (direct, snaps) = simulate(p, &o)?;
    o.t_end = 0.5 * t_end;
    o.save_times.clear();
    let (mut split, _) = simulate(p, &o)?;
    let resumed = resume(p, &mut split, t_end, &[])?;
    Ok(same_paths(&direct, &split) && snaps.last() == resumed.last())
}

fn semigroup() -> Res<Vec<Line>> {
    let heat = config("heat.cfg")?;
    let degen = config("interval_degenerate.cfg")?;
    let l1_heat = restart_fvm(&heat)?;
    let l1_degen = restart_fvm(&degen)?;
    let mc_heat = restart_mc(&heat.problem()?, heat.solver.t_end, heat.mc.dt)?;
    let mc_degen = restart_mc(&degen.problem()?, degen.solver.t_end, degen.mc.dt)?;
    Ok(vec![line(
        "7",
        l1_heat <= 1e-8 && l1_degen <= 1e-8 && mc_heat && mc_degen,
        format!("restart at T/2 vs direct: L1 {l1_heat:.2e} (heat), {l1_degen:.2e} (degenerate); MC restart bit-identical: {mc_heat}, {mc_degen}"),
    )])
}

fn richardson(f: impl Fn(f64) -> f64, z: f64, h: f64) -> f64 {
    let c = |h: f64| (f(z + h) - f(z - h)) / (2.0 * h);
    (4.0 * c(0.5 * h) - c(h)) / 3.0
}

/// (checked, skipped, worst relative error) over Halton points of D_4 × [0, T].
fn derivative_agreement(cfg: &RunConfig) -> Res<(usize, usize, f64)> {
    let p = cfg.problem()?;
    let d = p.dim();
    let mut exprs: Vec<Expr> = Vec::new();
    for i in 0..d {
        for j in 0..d {
            exprs.push(p.coefficients.a(i, j).clone());
        }
        exprs.push(p.coefficients.b(i).clone());
    }
    exprs.push(p.coefficients.c().clone());
    if let Some(v) = cfg.lyapunov_v()? {
        exprs.push(v);
    }
    let region = p.domain.exhaust(4);
    let mut halton = Halton::new(d + 1, 3);
    let mut z = vec![0.0; d + 1];
    let (mut checked, mut skipped, mut worst) = (0, 0, 0.0f64);
    for _ in 0..64 {
        halton.next_point(&mut z);
        let x: Vec<f64> = (0..d).map(|i| region.lower[i] + z[i] * (region.upper[i] - region.lower[i])).collect();
        let t = z[d] * cfg.solver.t_end;
        for e in &exprs {
            let f = Compiled::new(e);
            let vars: Vec<Var> = (0..d).map(Var::X).chain(std::iter::once(Var::T)).collect();
            for var in vars {
                let sym = Compiled::new(&e.differentiate(var)).eval(&x, t)?;
                let along = |s: f64| {
                    let mut y = x.clone();
                    let mut tt = t;
                    match var {
                        Var::X(i) => y[i] = s,
                        Var::T => tt = s,
                    }
                    f.eval(&y, tt).unwrap_or(f64::NAN)
                };
                let z0 = match var {
                    Var::X(i) => x[i],
                    Var::T => t,
                };
                let coarse = richardson(along, z0, 1e-3);
                let fine = richardson(along, z0, 1e-4);
                // a kink inside the stencil: the two estimates disagree
                if !((coarse - fine).abs() <= 1e-5 * (1.0 + fine.abs())) {
                    skipped += 1;
                    continue;
                }
                checked += 1;
                worst = worst.max((sym - coarse).abs() / (1.0 + sym.abs()));
            }
        }
    }
    Ok((checked, skipped, worst))
}

fn mollifier_properties() -> Res<(bool, String)> {
    let mut notes = Vec::new();
    let mut ok = true;

    // degenerate interval example: ellipticity floor min(m_n, 1) on D_{n-1}
    let cfg = config("interval_degenerate.cfg")?;
    let p = cfg.problem()?;
    let n = 6;
    let m = mollify_coefficients(&p, n, 1.0 / 24.0, 1.0, TimeExtension::Reflect)?;
    let dn = p.domain.exhaust(n);
    let m_n = (0..=10_000)
        .map(|i| dn.lower[0] + (dn.upper[0] - dn.lower[0]) * i as f64 / 10_000.0)
        .map(|x| p.coefficients.a1(x, 0.0).unwrap())
        .fold(f64::INFINITY, f64::min);
    let inner = p.domain.exhaust(n - 1);
    let mut low = f64::INFINITY;
    for i in 0..m.node_count() {
        let (x, _) = m.node_point(i);
        let v = m.node_values(i);
        ok &= v[0] >= 0.0 && v[2] <= 0.0;
        if inner.contains(&x) {
            low = low.min(v[0]);
        }
    }
    ok &= low >= m_n.min(1.0) * (1.0 - 1e-9);
    notes.push(format!("degenerate n = 6: min a_n on D_5 {low:.3e} >= min(m_6, 1) = {:.3e}", m_n.min(1.0)));

    // killing keeps its sign; plane example keeps A_n symmetric PSD and the far field
    for (name, n) in [("killing.cfg", 4), ("rd_example_d2.cfg", 2)] {
        let cfg = config(name)?;
        let p = cfg.problem()?;
        let d = p.dim();
        let m = mollify_coefficients(&p, n, 0.25 / n as f64, 1.0, TimeExtension::Reflect)?;
        let (mut min_eig, mut max_c, mut asym) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for i in 0..m.node_count() {
            let v = m.node_values(i);
            let a = &v[..d * d];
            for r in 0..d {
                for c in 0..d {
                    asym = asym.max((a[r * d + c] - a[c * d + r]).abs());
                }
            }
            min_eig = min_eig.min(sym_eigenvalues(a, d).0);
            max_c = max_c.max(v[d * d + d]);
        }
        let far = m.eval(&vec![50.0; d], 0.5);
        let mut identity = vec![0.0; d * d + d + 1];
        for i in 0..d {
            identity[i * d + i] = 1.0;
        }
        ok &= min_eig >= -1e-12 && max_c <= 0.0 && asym == 0.0 && far == identity;
        notes.push(format!("{name} n = {n}: min eig {min_eig:.3e}, max c_n {max_c:.3e}, asymmetry {asym:.1e}"));
    }
    Ok((ok, notes.join("; ")))
}

fn invariants() -> Res<Vec<Line>> {
    let mut out = Vec::new();
    let configs = shipped_configs()?;

    let mut pos = (true, f64::INFINITY, 0);
    let mut con1 = (true, f64::NEG_INFINITY, 0);
    for (name, cfg) in &configs {
        let p = cfg.problem()?;
        if p.dim() != 1 {
            continue;
        }
        let report = solve(&p, &cfg.solve_options())?;
        for run in &report.runs {
            let m = min_density(&run.flow.densities);
            pos.0 &= m >= 0.0;
            pos.1 = pos.1.min(m);
            let mi = mass_identity_report(&run.ledger, cfg.tolerances.mass);
            if mi.regime == MassRegime::Con1Violated {
                con1.0 = false;
                eprintln!("  {name}: eps = {} (con1) residual {:e}", run.eps, mi.max_residual);
            }
            con1.1 = con1.1.max(mi.max_residual / cfg.tolerances.mass);
        }
        pos.2 += 1;
        con1.2 += 1;
    }
    out.push(line("8(a)", pos.0, format!("min density over {} one-dimensional configs: {:e}", pos.2, pos.1)));
    out.push(line("8(b)", con1.0, format!("max (con1) residual / tol_mass over {} configs: {:.3e}", con1.2, con1.1)));

    let mut fd = (0, 0, 0.0f64);
    for (_, cfg) in &configs {
        let (c, s, w) = derivative_agreement(cfg)?;
        fd = (fd.0 + c, fd.1 + s, fd.2.max(w));
    }
    out.push(line(
        "8(c)",
        fd.2 <= 1e-6 && fd.1 * 20 <= fd.0,
        format!("symbolic vs finite-difference derivatives: {} checks, {} kink-straddling skipped, worst {:.2e}", fd.0, fd.1, fd.2),
    ));

    let (ok, detail) = mollifier_properties()?;
    out.push(line("8(d)", ok, detail));

    let mut ladders = Vec::new();
    let mut ok = true;
    for (name, v, ladder) in [("heat.cfg", "1 + x^2", vec![2.0, 4.0, 8.0, 16.0]), ("interval_degenerate.cfg", "", Vec::new())] {
        let cfg = config(name)?;
        let p = cfg.problem()?;
        let (v, ladder) = match &cfg.lyapunov {
            Some(l) if v.is_empty() => (parse(&l.v)?, l.ladder.clone()),
            _ => (parse(v)?, ladder),
        };
        let flow = solve(&p, &cfg.solve_options())?.finest().flow.clone();
        let cert = check_uniqueness_class(&flow, &p, &v, &ladder, CertificateKind::UniquenessClassI)?;
        let r: Vec<f64> = cert.r_n.iter().map(|e| e.r).collect();
        ok &= cert.holds() && r.len() == ladder.len() && r.windows(2).all(|w| w[1] < w[0]);
        ladders.push(format!("{name}: {:?}", r.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>()));
    }
    out.push(line("8(e)", ok, format!("R_N over N = 2, 4, 8, 16: {}", ladders.join("; "))));

    let cfg = config("ou.cfg")?;
    let p = cfg.problem()?;
    let l = cfg.lyapunov.as_ref().ok_or("ou.cfg has no [lyapunov]")?;
    let flow = solve(&p, &cfg.solve_options())?.finest().flow.clone();
    let (k, h) = (parse(l.k.as_deref().ok_or("k")?)?, parse(l.h.as_deref().ok_or("h")?)?);
    let mr = moment_bound_check(&flow, &p, &parse(&l.v)?, &k, &h, &cfg.sample_options(), cfg.tolerances.moment)?;
    out.push(line("8(f)", mr.pass, format!("OU moment bound: max excess {:.3e} over {} saves (tol {})", mr.max_excess, mr.rows.len(), mr.tol)));
    Ok(out)
}

type Criterion = (&'static str, f64, fn() -> Res<Vec<Line>>);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1", 10.0, heat_kernel),
        ("2", 10.0, killing_ledger),
        ("3", 60.0, ou_ergodic),
        ("4", 300.0, degenerate_interval),
        ("5", 120.0, linear_drift_killing),
        ("6", 30.0, vanishing_viscosity),
        ("7", 60.0, semigroup),
        ("8", 120.0, invariants),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = Vec::new();
    let mut passed = 0;
    let mut total = 0;
    for (id, budget, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        let lines = match result {
            Ok(lines) => lines,
            Err(e) => vec![line(id, false, format!("error: {e}"))],
        };
        let in_time = secs <= budget;
        for l in lines {
            let pass = l.pass && in_time;
            let known = KNOWN_RED.contains(&l.id);
            let tag = match (pass, known) {
                (true, _) => "PASS",
                (false, true) => "FAIL (known)",
                (false, false) => "FAIL",
            };
            println!("{tag} {}: {} [{secs:.1} s of {budget} s]", l.id, l.detail);
            total += 1;
            if pass {
                passed += 1;
            } else if !known {
                unexpected.push(l.id);
            }
        }
    }
    println!("acceptance: {passed}/{total} criteria pass");
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
