use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{json, Map, Value};

use fpk_core::config::{ConfigError, RunConfig};
use fpk_core::ergodic::{averaged_moment, convergence_report, stationary_solve_with, ErgodicError};
use fpk_core::exprlang::{parse, Compiled, Expr};
use fpk_core::fvm::{mass_identity_report, run_single_with, solve_with, Coefficients1D, FvmError, Grid1D, MassRegime, SolveOptions, SolveReport};
use fpk_core::lyapunov::{
    check_ergodic_condition, check_existence_condition, check_initial_integrability, check_timedep_condition, check_uniqueness_class, moment_bound_check, rescale_integrable,
    CertificateKind, LyapunovError,
};
use fpk_core::mollify::{mollify_coefficients, MollifyError, TimeExtension};
use fpk_core::output::{self, DensityTable, TableError, DENSITY_HEADER, HIST_HEADER};
use fpk_core::problem::{validate as validate_problem, Problem, ProblemError};
use fpk_core::sde::{compare_densities, simulate, SdeError};

pub const METADATA_VERSION: u32 = 1;
/// Save times used by `ergodic` when the configured ones are too few or
/// leave a gap wider than T/100.
const ERGODIC_SAVES: usize = 500;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Config { path: PathBuf, source: ConfigError },
    #[error("{}: {source}", path.display())]
    Table { path: PathBuf, source: TableError },
    #[error("{}: {source}", path.display())]
    Metadata { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    ConfigValue(#[from] ConfigError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Fvm(#[from] FvmError),
    #[error(transparent)]
    Mollify(#[from] MollifyError),
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
    #[error(transparent)]
    Sde(#[from] SdeError),
    #[error(transparent)]
    Ergodic(#[from] ErgodicError),
}

type Result<T> = std::result::Result<T, CliError>;

fn load(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    RunConfig::parse(&text).map_err(|source| CliError::Config { path: path.into(), source })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.into(), source })?;
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(|source| CliError::Io { path, source })
}

fn table<F>(dir: &Path, name: &str, write: F) -> Result<()>
where
    F: FnOnce(BufWriter<File>) -> std::result::Result<(), TableError>,
{
    let w = create(dir, name)?;
    write(w).map_err(|source| CliError::Table { path: dir.join(name), source })
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<()> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
    text.push('\n');
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.into(), source })?;
    fs::write(&path, text).map_err(|source| CliError::Io { path, source })
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json value serializes"));
}

fn header(cfg: &RunConfig, command: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("version".into(), json!(METADATA_VERSION));
    m.insert("command".into(), json!(command));
    m.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    m.insert("config_hash".into(), json!(cfg.hash()));
    m
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn expr(src: &str) -> Result<Expr> {
    parse(src).map_err(|e| CliError::Usage(format!("expression `{src}`: {e}")))
}

/// Coefficients as the grid solver sees them: raw, or mollified when
/// `[solver] mollify_n` is set.
fn grid_coefficients(cfg: &RunConfig, p: &Problem) -> Result<Arc<dyn Coefficients1D>> {
    let n = cfg.solver.mollify_n;
    if n == 0 {
        return Ok(Arc::new(p.coefficients.clone()));
    }
    let spacing = if cfg.solver.mollify_spacing > 0.0 { cfg.solver.mollify_spacing } else { 1.0 / (8.0 * n as f64) };
    let set = mollify_coefficients(p, n, spacing, cfg.solver.t_end, TimeExtension::Reflect)?;
    Ok(Arc::new(set))
}

fn run_solve(cfg: &RunConfig, p: &Problem) -> Result<SolveReport> {
    Ok(solve_with(p, grid_coefficients(cfg, p)?, &cfg.solve_options())?)
}

pub fn validate(path: &Path) -> Result<bool> {
    let cfg = load(path)?;
    let p = cfg.problem()?;
    let report = validate_problem(&p, &cfg.validate_options())?;
    for v in &report.violations {
        eprintln!("violation: {} on shell {} at x = {:?}, t = {} (value {})", to_value(&v.kind).as_str().unwrap_or("?"), v.shell, v.x, v.t, v.value);
    }
    if report.violation_count > report.violations.len() {
        eprintln!("({} violations in total)", report.violation_count);
    }
    let mut out = header(&cfg, "validate");
    out.insert("report".into(), to_value(&report));
    print_json(&Value::Object(out));
    Ok(report.is_clean())
}

fn certificate_kind(name: &str) -> CertificateKind {
    match name {
        "existence" => CertificateKind::ExistenceKv,
        "timedep" => CertificateKind::TimedepKh,
        "ergodic" => CertificateKind::Ergodic,
        "integrability" => CertificateKind::Integrability,
        "uniqueness_i" => CertificateKind::UniquenessClassI,
        _ => CertificateKind::UniquenessClassIi,
    }
}

pub fn check(path: &Path) -> Result<bool> {
    let cfg = load(path)?;
    let p = cfg.problem()?;
    let l = cfg.lyapunov.as_ref().ok_or_else(|| CliError::Usage("check needs a [lyapunov] section".into()))?;
    let v = expr(&l.v)?;
    let opts = cfg.sample_options();
    let mut flow = None;
    let mut all_hold = true;
    let mut certs = Vec::new();
    for name in &l.certificates {
        let kind = certificate_kind(name);
        let result: std::result::Result<Value, CliError> = (|| {
            Ok(match kind {
                CertificateKind::ExistenceKv => to_value(&check_existence_condition(&p, &v, &opts)?),
                CertificateKind::TimedepKh => {
                    let k = expr(l.k.as_deref().unwrap_or("0"))?;
                    let h = expr(l.h.as_deref().unwrap_or("0"))?;
                    to_value(&check_timedep_condition(&p, &v, &k, &h, &opts)?)
                }
                CertificateKind::Ergodic => to_value(&check_ergodic_condition(&p, &v, &opts)?),
                CertificateKind::Integrability => {
                    let (cert, report) = check_initial_integrability(&p, &v, l.cells)?;
                    let mut value = to_value(&cert);
                    value["report"] = to_value(&report);
                    if !report.finite {
                        value["rescaling"] = to_value(&rescale_integrable(&p, &v, &opts, l.cells)?);
                    }
                    value
                }
                CertificateKind::UniquenessClassI | CertificateKind::UniquenessClassIi => {
                    if flow.is_none() {
                        flow = Some(run_solve(&cfg, &p)?.finest().flow.clone());
                    }
                    to_value(&check_uniqueness_class(flow.as_ref().expect("solved"), &p, &v, &l.ladder, kind)?)
                }
            })
        })();
        match result {
            Ok(value) => {
                let status = value["status"].as_str().unwrap_or("inconclusive").to_string();
                let constants = value["constants"].to_string();
                eprintln!("{name}: {status} {constants}");
                if status != "holds" {
                    all_hold = false;
                }
                certs.push(value);
            }
            Err(e) => {
                eprintln!("{name}: error: {e}");
                all_hold = false;
                certs.push(json!({ "kind": to_value(&kind), "status": "error", "error": e.to_string() }));
            }
        }
    }
    let mut out = header(&cfg, "check");
    out.insert("certificates".into(), Value::Array(certs));
    out.insert("all_hold".into(), json!(all_hold));
    print_json(&Value::Object(out));
    Ok(all_hold)
}

pub fn solve(path: &Path, out: &Path) -> Result<bool> {
    let cfg = load(path)?;
    let p = cfg.problem()?;
    if p.dim() != 1 {
        return Err(CliError::Usage(format!("the grid solver is one-dimensional, config has dimension {}", p.dim())));
    }
    let report = run_solve(&cfg, &p)?;
    let finest = report.finest();
    table(out, "density.csv", |w| output::write_density(w, &finest.flow))?;
    table(out, "mass.csv", |w| output::write_mass(w, &finest.ledger))?;

    let tol = cfg.tolerances.mass;
    let mut ok = true;
    let mut runs = Vec::new();
    let mut min_density = f64::INFINITY;
    for run in &report.runs {
        let mi = mass_identity_report(&run.ledger, tol);
        if mi.regime == MassRegime::Con1Violated {
            ok = false;
        }
        let m = run.flow.densities.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        min_density = min_density.min(m);
        runs.push(json!({ "eps": run.eps, "mass_identity": to_value(&mi), "min_density": m, "final_mass": run.flow.mass(run.flow.times.len() - 1) }));
    }
    if min_density < 0.0 {
        eprintln!("warning: negative density {min_density:e}");
    }

    let mut meta = header(&cfg, "solve");
    meta.insert("grid".into(), to_value(&finest.flow.grid));
    meta.insert("dt".into(), json!(report.dt));
    meta.insert("eps_ladder".into(), json!(cfg.solver.eps));
    meta.insert("ladder_l1".into(), json!(report.ladder_l1));
    meta.insert("tolerances".into(), to_value(&cfg.tolerances));
    meta.insert("exhaustion".into(), json!(p.domain.exhaustion_rule_text()));
    meta.insert("runs".into(), Value::Array(runs));
    meta.insert("warnings".into(), json!(report.warnings));
    meta.insert("mollified".into(), json!(cfg.solver.mollify_n > 0));

    let mut uniqueness = None;
    if let Some(l) = &cfg.lyapunov {
        let v = expr(&l.v)?;
        let mut certs = Vec::new();
        for name in ["uniqueness_i", "uniqueness_ii"] {
            if cfg.wants(name) {
                let cert = check_uniqueness_class(&finest.flow, &p, &v, &l.ladder, certificate_kind(name))?;
                uniqueness = Some(uniqueness.unwrap_or(true) && cert.holds());
                certs.push(to_value(&cert));
            }
        }
        if !certs.is_empty() {
            meta.insert("uniqueness_certificates".into(), Value::Array(certs));
        }
        if let (Some(k), Some(h)) = (&l.k, &l.h) {
            let mr = moment_bound_check(&finest.flow, &p, &v, &expr(k)?, &expr(h)?, &cfg.sample_options(), cfg.tolerances.moment)?;
            if !mr.pass {
                eprintln!("warning: moment bound exceeded by {:e}", mr.max_excess);
            }
            meta.insert("moment_bound".into(), to_value(&mr));
        }
    }
    let note = match uniqueness {
        Some(true) => "uniqueness class certificate holds on this run",
        _ => "uniqueness not certified",
    };
    meta.insert("uniqueness".into(), json!(note));
    write_json(out, "metadata.json", &Value::Object(meta))?;
    let last = finest.ledger.rows.last().expect("ledger has rows");
    eprintln!("solved to t = {}: M = {:e}, C = {:e}, B = {:e}", last.t, last.m, last.c, last.b);
    if !ok {
        eprintln!("(con1) residual exceeds tol_mass = {tol:e}");
    }
    Ok(ok)
}

pub fn mc(path: &Path, paths: Option<usize>, seed: u64, out: &Path) -> Result<bool> {
    let cfg = load(path)?;
    let p = cfg.problem()?;
    let n_paths = paths.unwrap_or(cfg.mc.paths);
    let (_, snaps) = simulate(&p, &cfg.mc_options(n_paths, seed))?;
    let grid = if p.dim() == 1 { Some(Grid1D::new(&p, cfg.solver.k, cfg.solver.n)?) } else { None };
    table(out, "mc.csv", |w| output::write_mc(w, &snaps))?;
    table(out, "mc_hist.csv", |w| output::write_mc_hist(w, &snaps, grid.as_ref()))?;
    let con1: Vec<Value> = snaps.iter().map(|s| json!({ "t": s.t, "mean": s.con1_mean, "se": s.con1_se, "holds": s.con1_holds() })).collect();
    let mut meta = header(&cfg, "mc");
    meta.insert("paths".into(), json!(n_paths));
    meta.insert("seed".into(), json!(seed));
    meta.insert("dt".into(), json!(cfg.mc.dt));
    meta.insert("grid".into(), grid.as_ref().map(to_value).unwrap_or(Value::Null));
    meta.insert("con1".into(), Value::Array(con1));
    write_json(out, "metadata.json", &Value::Object(meta))?;
    let last = snaps.last().expect("at least one snapshot");
    eprintln!(
        "t = {}: alive {} killed {} exited {} of {}",
        last.t, last.alive, last.killed, last.exited, last.n_paths
    );
    if snaps.iter().any(|s| !s.con1_holds()) {
        eprintln!("warning: sampled (con1) inequality exceeded by more than 3 SE");
    }
    Ok(true)
}

fn read_metadata(dir: &Path) -> Result<Value> {
    let path = dir.join("metadata.json");
    let f = File::open(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    serde_json::from_reader(BufReader::new(f)).map_err(|source| CliError::Metadata { path, source })
}

fn read_density(dir: &Path, name: &str, header: &[&str]) -> Result<DensityTable> {
    let path = dir.join(name);
    let f = File::open(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    DensityTable::read(BufReader::new(f), header).map_err(|source| CliError::Table { path, source })
}

pub fn compare(pde_dir: &Path, mc_dir: &Path, out: Option<&Path>) -> Result<bool> {
    let meta = read_metadata(pde_dir)?;
    let cfg: RunConfig = serde_json::from_value(meta["config"].clone()).map_err(|source| CliError::Metadata { path: pde_dir.join("metadata.json"), source })?;
    let mc_meta = read_metadata(mc_dir)?;
    if mc_meta["config_hash"] != meta["config_hash"] {
        eprintln!("warning: the two runs were made from different configs");
    }
    let pde = read_density(pde_dir, "density.csv", &DENSITY_HEADER)?;
    let hist = read_density(mc_dir, "mc_hist.csv", &HIST_HEADER)?;
    if pde.x.len() != hist.x.len() || pde.x.iter().zip(&hist.x).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0)) {
        return Err(CliError::Usage("density and histogram tables use different grids".into()));
    }
    let eps = meta["eps_ladder"].as_array().and_then(|a| a.iter().filter_map(Value::as_f64).reduce(f64::min)).unwrap_or(0.0);
    let flow = pde.to_flow(cfg.solver.k, eps).map_err(|source| CliError::Table { path: pde_dir.join("density.csv"), source })?;
    let rows = compare_densities(&flow, &hist.times, &hist.values, cfg.mc.compare_blocks)?;
    let out = out.unwrap_or(mc_dir);
    table(out, "compare.csv", |w| output::write_compare(w, &rows))?;
    let worst = rows.iter().map(|r| r.l1).fold(0.0, f64::max);
    let worst_mass = rows.iter().map(|r| r.mass_delta).fold(0.0, f64::max);
    eprintln!("max L1 = {worst:e} (bound {:e}), max mass delta = {worst_mass:e}", cfg.tolerances.compare_l1);
    Ok(worst <= cfg.tolerances.compare_l1)
}

pub fn ergodic(path: &Path, t_end: f64, out: &Path) -> Result<bool> {
    let mut cfg = load(path)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(CliError::Usage(format!("--t-end must be positive, got {t_end}")));
    }
    cfg.solver.t_end = t_end;
    cfg.solver.save_times.retain(|t| *t <= t_end);
    let mut marks = vec![0.0];
    marks.extend(cfg.solver.save_times.iter().copied());
    marks.push(t_end);
    let widest = marks.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if cfg.solver.save_times.len() < 8 || widest > t_end / 100.0 {
        cfg.solver.save_times = (1..=ERGODIC_SAVES).map(|i| t_end * i as f64 / ERGODIC_SAVES as f64).collect();
    }
    cfg.check()?;
    let p = cfg.problem()?;
    if p.dim() != 1 {
        return Err(CliError::Usage(format!("ergodic averages are computed on the one-dimensional grid, config has dimension {}", p.dim())));
    }
    let coeffs = grid_coefficients(&cfg, &p)?;
    let grid = Grid1D::new(&p, cfg.solver.k, cfg.solver.n)?;
    let opts: SolveOptions = cfg.solve_options();
    let eps = cfg.solver.eps.iter().copied().fold(f64::INFINITY, f64::min);
    let stationary = match stationary_solve_with(coeffs.as_ref(), &grid) {
        Ok(s) => s,
        Err(e @ (ErgodicError::NullSpace { .. } | ErgodicError::Negative { .. } | ErgodicError::Residual { .. })) => {
            eprintln!("no stationary probability density: {e}");
            return Ok(false);
        }
        Err(e) => return Err(e.into()),
    };
    let run = run_single_with(&p, coeffs, &grid, &opts, eps)?;
    let report = convergence_report(&run.flow, &stationary)?;
    table(out, "ergodic.csv", |w| output::write_ergodic(w, &report.rows))?;
    table(out, "stationary.csv", |w| output::write_stationary(w, &stationary))?;
    let mut meta = header(&cfg, "ergodic");
    meta.insert("grid".into(), to_value(&grid));
    meta.insert("stationary".into(), json!({ "mass": stationary.mass, "residual": stationary.residual, "eigenvalues": stationary.eigenvalues }));
    meta.insert("monotone_trend".into(), json!(report.monotone_trend));
    let final_l1 = report.rows.last().map(|r| r.l1_to_stationary);
    meta.insert("final_l1".into(), json!(final_l1));
    if let Some(v) = cfg.lyapunov_v()? {
        let moments = averaged_moment(&run.flow, &Compiled::new(&v))?;
        let sup = moments.iter().map(|m| m.1).fold(0.0, f64::max);
        meta.insert("sup_v_sigma".into(), json!(sup));
    }
    write_json(out, "metadata.json", &Value::Object(meta))?;
    if let Some(l1) = final_l1 {
        eprintln!("L1(sigma_T, stationary) = {l1:e} at T = {t_end}; monotone trend: {}", report.monotone_trend);
    }
    Ok(true)
}
