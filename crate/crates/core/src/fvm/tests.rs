use super::*;
use crate::exprlang::parse;
use crate::problem::{CoefficientSet, DomainSpec, InitialMeasure, Problem};

fn problem(a: &str, b: &str, c: &str, lo: f64, hi: f64, initial: InitialMeasure) -> Problem {
    Problem::new(
        DomainSpec::interval(lo, hi),
        CoefficientSet::new(1, vec![parse(a).unwrap()], vec![parse(b).unwrap()], parse(c).unwrap()).unwrap(),
        initial,
    )
    .unwrap()
}

/// Grid on the full interval for tests: with K large the dyadic margin is
/// below any cell size of interest.
fn opts(t_end: f64, n: usize, dt: f64) -> SolveOptions {
    SolveOptions {
        t_end,
        k: 30,
        n,
        dt,
        eps_ladder: vec![0.0],
        save_times: vec![],
    }
}

fn gaussian_l1(grid: &Grid1D, u: &[f64], var: f64) -> f64 {
    // cell averages of the exact kernel by 5-point Gauss-Legendre
    let mut err = 0.0;
    for (i, ui) in u.iter().enumerate() {
        let exact = crate::quadrature::gauss_legendre::<std::convert::Infallible>(grid.edge(i), grid.edge(i + 1), 1, |x| {
            Ok((-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt())
        })
        .unwrap()
            / grid.h;
        err += (ui - exact).abs() * grid.h;
    }
    err
}

#[test]
fn heat_kernel_converges_at_least_first_order() {
    let p = problem("0.5", "0", "0", -8.0, 8.0, InitialMeasure::Dirac(vec![0.0]));
    let mut errs = Vec::new();
    // dt refined with h so that the time error does not mask the space error
    for n in [200, 400, 800] {
        let r = solve(&p, &opts(0.5, n, 0.4 / n as f64)).unwrap();
        let run = r.finest();
        errs.push(gaussian_l1(&run.flow.grid, run.flow.last(), 0.5));
        assert!(run.flow.densities.iter().flatten().all(|v| *v >= 0.0));
        assert!(run.ledger.rows.last().unwrap().m > 1.0 - 1e-10);
    }
    assert!(errs[1] <= 0.5 * errs[0] + 1e-4, "{errs:?}");
    assert!(errs[2] < 1e-2, "{errs:?}");
}

#[test]
fn killing_matches_mass_ode() {
    let p = problem("0.5", "0", "-0.3", -8.0, 8.0, InitialMeasure::Dirac(vec![0.0]));
    let mut o = opts(1.0, 200, 1e-3);
    o.save_times = (1..10).map(|i| 0.1 * i as f64).collect();
    let r = solve(&p, &o).unwrap();
    let run = r.finest();
    for row in &run.ledger.rows {
        assert!((row.m - (-0.3 * row.t).exp()).abs() < 1e-4, "{row:?}");
        assert!((row.r + row.b).abs() < 1e-12);
    }
    assert!(run.ledger.budget_error() < 1e-12);
    let rep = mass_identity_report(&run.ledger, 1e-3);
    assert_eq!(rep.regime, MassRegime::Identity);
}

#[test]
fn pure_killing_step_is_scalar_euler() {
    let p = problem("0", "0", "-1", -1.0, 1.0, InitialMeasure::Dirac(vec![0.0]));
    let g = Grid1D::new(&p, 3, 16).unwrap();
    let u: Vec<f64> = (0..16).map(|i| 1.0 + i as f64).collect();
    let dt = 0.1;
    let v = step(&g, &p.coefficients, &u, dt, dt, 0.0).unwrap();
    for (a, b) in u.iter().zip(&v) {
        assert_eq!(*b, a / (1.0 + dt));
    }
}

#[test]
fn heat_step_from_a_spike_is_symmetric_and_positive() {
    let p = problem("0.5", "0", "0", -1.0, 1.0, InitialMeasure::Dirac(vec![0.0]));
    let g = Grid1D::on_interval(1, -1.0, 1.0, 41).unwrap();
    let mut u = vec![0.0; 41];
    u[20] = 1.0 / g.h;
    let v = step(&g, &p.coefficients, &u, 0.01, 0.01, 0.0).unwrap();
    assert!(v.iter().all(|x| *x > 0.0));
    for i in 0..20 {
        assert!((v[i] - v[40 - i]).abs() <= 1e-12 * v[20]);
    }
}

#[test]
fn ou_discrete_equilibrium_is_a_fixed_point() {
    use nalgebra::{DMatrix, DVector};
    let p = problem("0.5", "-x", "0", -6.0, 6.0, InitialMeasure::Dirac(vec![0.0]));
    let g = Grid1D::on_interval(1, -6.0, 6.0, 200).unwrap();
    let s = FluxStencil::assemble(&g, &p.coefficients, 0.0, 0.0).unwrap();
    let m = s.operator_matrix(g.h);
    // dense direct solve of L u = 0 with the last equation replaced by mass 1
    let n = g.n;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = m.diag[i];
        if i > 0 {
            a[(i, i - 1)] = m.lower[i];
        }
        if i + 1 < n {
            a[(i, i + 1)] = m.upper[i];
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = g.h;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let u = a.lu().solve(&rhs).unwrap();
    let u: Vec<f64> = u.iter().copied().collect();
    for dt in [1e-3, 0.1, 10.0] {
        let v = step(&g, &p.coefficients, &u, dt, dt, 0.0).unwrap();
        let diff = u.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "dt={dt}: {diff}");
    }
}

#[test]
fn restart_reproduces_direct_run() {
    let p = problem("0.5*abs(1-abs(x))^2", "tan(-pi*x/2) + sign(x)", "0", -1.0, 1.0, InitialMeasure::Dirac(vec![0.0]));
    let g = Grid1D::new(&p, 8, 400).unwrap();
    let dt = 1e-3;
    let mut direct = FvmState::new(&p, &g, dt, 0.0).unwrap();
    let (flow, _) = continue_run(&mut direct, &[300]).unwrap();
    let mut first = FvmState::new(&p, &g, dt, 0.0).unwrap();
    let (mid, _) = continue_run(&mut first, &[120]).unwrap();
    let mut second = FvmState::from_density(&g, std::sync::Arc::new(p.coefficients.clone()), mid.last().to_vec(), mid.times[0], dt, 0.0).unwrap();
    let (end, _) = continue_run(&mut second, &[300]).unwrap();
    assert_eq!(end.times, flow.times);
    assert!(g.l1_distance(end.last(), flow.last()) <= 1e-8);
}

#[test]
fn outward_transport_loses_mass_through_the_frontier() {
    let p = problem("0", "5", "0", -1.0, 1.0, InitialMeasure::Uniform { lower: vec![-0.5], upper: vec![0.5] });
    let mut o = opts(1.0, 400, 1e-3);
    o.k = 6;
    let r = solve(&p, &o).unwrap();
    let run = r.finest();
    let rep = mass_identity_report(&run.ledger, 1e-3);
    assert_eq!(rep.regime, MassRegime::StrictSubprobability);
    let last = run.ledger.rows.last().unwrap();
    assert!(last.m < 0.01);
    assert!((last.b - (1.0 - last.m)).abs() < 1e-12);
}

#[test]
fn save_times_snap_to_the_step_grid() {
    let mut o = opts(1.0, 64, 0.3);
    o.save_times = vec![0.25, 0.5, 2.0];
    let (steps, dt) = o.time_grid().unwrap();
    assert_eq!(steps, 4);
    assert_eq!(dt, 0.25);
    assert_eq!(o.save_steps(steps, dt), vec![0, 1, 2, 4]);
}

#[test]
fn ladder_reports_pairwise_distances() {
    let p = problem("0", "1", "0", -2.0, 3.0, InitialMeasure::Density(parse("max(0, 1 - 16*x^2)^2").unwrap()));
    let o = SolveOptions {
        t_end: 0.5,
        k: 30,
        n: 500,
        dt: 2e-3,
        eps_ladder: vec![1e-2, 1e-3, 0.0],
        save_times: vec![],
    };
    let r = solve(&p, &o).unwrap();
    assert_eq!(r.ladder_l1.len(), 2);
    assert!(r.ladder_l1[1] < r.ladder_l1[0]);
    assert_eq!(r.finest().eps, 0.0);
    assert!(r.warnings.is_empty());
}
