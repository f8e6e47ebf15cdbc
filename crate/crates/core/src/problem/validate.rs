use std::collections::BTreeMap;

use nalgebra::{Matrix2, Matrix3};
use rayon::prelude::*;
use serde::Serialize;

use super::{Problem, ProblemError, Region};

pub const DEFAULT_SAMPLES: usize = 4096;
const SYMMETRY_TOL: f64 = 1e-12;
const WITNESS_CAP: usize = 16;

#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    pub k_max: u32,
    pub samples: usize,
    pub seed: u64,
    pub t_end: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            k_max: 12,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            t_end: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    PositiveC,
    NotPositiveSemidefinite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub shell: u32,
    pub x: Vec<f64>,
    pub t: f64,
    /// c(x,t) or the smallest eigenvalue of A(x,t).
    pub value: f64,
}

/// Per-shell figures. Ellipticity bounds, Lipschitz constants and sup-norms
/// are cumulative over D_k × [0, T], i.e. over shells 1..=k.
#[derive(Debug, Clone, Serialize)]
pub struct ShellReport {
    pub k: u32,
    pub region: Region,
    pub m_k: f64,
    #[serde(rename = "M_k")]
    pub big_m_k: f64,
    pub degenerate: bool,
    pub lambda_k: BTreeMap<String, f64>,
    pub sup_a: f64,
    pub sup_b: f64,
    pub sup_c: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub empirical: bool,
    pub exhaustion: String,
    pub samples_per_shell: usize,
    pub seed: u64,
    pub t_end: f64,
    pub symmetry_residual: f64,
    pub shells: Vec<ShellReport>,
    pub violation_count: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violation_count == 0
    }
}

struct ShellRaw {
    min_eig: f64,
    max_eig: f64,
    lambda: Vec<f64>,
    sup_a: f64,
    sup_b: f64,
    sup_c: f64,
    symmetry: f64,
    asym_witness: Option<(usize, usize, Vec<f64>, f64)>,
    violations: Vec<Violation>,
    violation_count: usize,
}

/// Eigenvalues of the symmetric part of a row-major d×d matrix, ascending.
pub fn sym_eigenvalues(a: &[f64], d: usize) -> (f64, f64) {
    match d {
        1 => (a[0], a[0]),
        2 => {
            let off = 0.5 * (a[1] + a[2]);
            let m = Matrix2::new(a[0], off, off, a[3]);
            let e = m.symmetric_eigenvalues();
            (e.min(), e.max())
        }
        3 => {
            let s = |i: usize, j: usize| 0.5 * (a[i * 3 + j] + a[j * 3 + i]);
            let m = Matrix3::new(a[0], s(0, 1), s(0, 2), s(1, 0), a[4], s(1, 2), s(2, 0), s(2, 1), a[8]);
            let e = m.symmetric_eigenvalues();
            (e.min(), e.max())
        }
        _ => unreachable!("dimension checked at construction"),
    }
}

fn shell_raw(p: &Problem, k: u32, opts: &SampleOptions) -> Result<ShellRaw, ProblemError> {
    let d = p.dim();
    let coeffs = &p.coefficients;
    let outer = p.domain.exhaust(k);
    let step = 1e-3 * outer.diameter();
    let pts = p.domain.sample_shell(k, opts.samples, opts.seed, opts.t_end);
    let mut raw = ShellRaw {
        min_eig: f64::INFINITY,
        max_eig: f64::NEG_INFINITY,
        lambda: vec![0.0; d * d],
        sup_a: 0.0,
        sup_b: 0.0,
        sup_c: 0.0,
        symmetry: 0.0,
        asym_witness: None,
        violations: Vec::new(),
        violation_count: 0,
    };
    let mut a = vec![0.0; d * d];
    let mut a2 = vec![0.0; d * d];
    let mut b = vec![0.0; d];
    let mut y = vec![0.0; d];
    let mut psd_witnesses = 0;
    let mut c_witnesses = 0;
    for (n, (x, t)) in pts.iter().enumerate() {
        coeffs.eval_a(x, *t, &mut a)?;
        coeffs.eval_b(x, *t, &mut b)?;
        let c = coeffs.eval_c(x, *t)?;
        for i in 0..d {
            for j in (i + 1)..d {
                let r = (a[i * d + j] - a[j * d + i]).abs();
                if r > raw.symmetry {
                    raw.symmetry = r;
                    raw.asym_witness = Some((i, j, x.clone(), *t));
                }
            }
        }
        let (lo, hi) = sym_eigenvalues(&a, d);
        raw.min_eig = raw.min_eig.min(lo);
        raw.max_eig = raw.max_eig.max(hi);
        if lo < -SYMMETRY_TOL * hi.abs().max(1.0) {
            raw.violation_count += 1;
            if psd_witnesses < WITNESS_CAP {
                psd_witnesses += 1;
                raw.violations.push(Violation {
                    kind: ViolationKind::NotPositiveSemidefinite,
                    shell: k,
                    x: x.clone(),
                    t: *t,
                    value: lo,
                });
            }
        }
        if c > 0.0 {
            raw.violation_count += 1;
            if c_witnesses < WITNESS_CAP {
                c_witnesses += 1;
                raw.violations.push(Violation {
                    kind: ViolationKind::PositiveC,
                    shell: k,
                    x: x.clone(),
                    t: *t,
                    value: c,
                });
            }
        }
        raw.sup_a = a.iter().fold(raw.sup_a, |m, v| m.max(v.abs()));
        raw.sup_b = b.iter().fold(raw.sup_b, |m, v| m.max(v.abs()));
        raw.sup_c = raw.sup_c.max(c.abs());

        // paired sample for the Lipschitz estimate: cycle through axis
        // directions and the main diagonal
        let dir = n % (d + 1);
        for i in 0..d {
            let unit = if dir == d { 1.0 / (d as f64).sqrt() } else if i == dir { 1.0 } else { 0.0 };
            y[i] = x[i] + step * unit;
        }
        outer.clamp(&mut y);
        let dist = x.iter().zip(&y).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
        if dist > 0.25 * step {
            coeffs.eval_a(&y, *t, &mut a2)?;
            for e in 0..d * d {
                raw.lambda[e] = raw.lambda[e].max((a2[e] - a[e]).abs() / dist);
            }
        }
    }
    Ok(raw)
}

/// Samples the standing hypotheses shell by shell. Deterministic for a
/// fixed seed; shells are processed in parallel and merged in order.
pub fn validate(p: &Problem, opts: &SampleOptions) -> Result<ValidationReport, ProblemError> {
    let d = p.dim();
    let raws: Vec<Result<ShellRaw, ProblemError>> = (1..=opts.k_max).into_par_iter().map(|k| shell_raw(p, k, opts)).collect();
    let names = p.coefficients.field_names();
    let mut shells = Vec::with_capacity(raws.len());
    let mut violations = Vec::new();
    let mut violation_count = 0;
    let mut symmetry: f64 = 0.0;
    let mut m = f64::INFINITY;
    let mut big_m = f64::NEG_INFINITY;
    let mut lambda = vec![0.0f64; d * d];
    let (mut sa, mut sb, mut sc) = (0.0f64, 0.0f64, 0.0f64);
    for (idx, raw) in raws.into_iter().enumerate() {
        let k = idx as u32 + 1;
        let raw = raw?;
        if raw.symmetry > SYMMETRY_TOL {
            let (i, j, x, t) = raw.asym_witness.unwrap();
            return Err(ProblemError::Asymmetric {
                i: i + 1,
                j: j + 1,
                x,
                t,
                residual: raw.symmetry,
            });
        }
        symmetry = symmetry.max(raw.symmetry);
        m = m.min(raw.min_eig);
        big_m = big_m.max(raw.max_eig);
        for e in 0..d * d {
            lambda[e] = lambda[e].max(raw.lambda[e]);
        }
        sa = sa.max(raw.sup_a);
        sb = sb.max(raw.sup_b);
        sc = sc.max(raw.sup_c);
        violations.extend(raw.violations);
        violation_count += raw.violation_count;
        shells.push(ShellReport {
            k,
            region: p.domain.exhaust(k),
            m_k: m,
            big_m_k: big_m,
            degenerate: m <= 0.0,
            lambda_k: names.iter().cloned().zip(lambda.iter().copied()).collect(),
            sup_a: sa,
            sup_b: sb,
            sup_c: sc,
        });
    }
    Ok(ValidationReport {
        empirical: true,
        exhaustion: p.domain.exhaustion_rule_text(),
        samples_per_shell: opts.samples,
        seed: opts.seed,
        t_end: opts.t_end,
        symmetry_residual: symmetry,
        shells,
        violation_count,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::{parse, Expr};
    use crate::problem::{CoefficientSet, DomainSpec, InitialMeasure};

    fn example1() -> Problem {
        Problem::new(
            DomainSpec::interval(-1.0, 1.0),
            CoefficientSet::new(
                1,
                vec![parse("0.5*abs(1-abs(x))^2").unwrap()],
                vec![parse("tan(-pi*x/2) + sign(x)").unwrap()],
                Expr::num(0.0),
            )
            .unwrap(),
            InitialMeasure::Dirac(vec![0.0]),
        )
        .unwrap()
    }

    #[test]
    fn degenerate_example_ellipticity() {
        let r = validate(&example1(), &SampleOptions { k_max: 14, ..Default::default() }).unwrap();
        assert!(r.is_clean());
        // independent dense scan of a on |x| <= 0.875
        let oracle = (0..=1_000_000)
            .map(|i| -0.875 + 1.75 * i as f64 / 1e6)
            .map(|x: f64| 0.5 * (1.0 - x.abs()).powi(2))
            .fold(f64::INFINITY, f64::min);
        assert!((r.shells[2].m_k - oracle).abs() < 1e-9, "{}", r.shells[2].m_k);
        assert!((oracle - 0.0078125).abs() < 1e-12);
        for w in r.shells.windows(2) {
            assert!(w[1].m_k > 0.0 && w[1].m_k < w[0].m_k);
            assert!(w[0].m_k <= w[0].big_m_k);
        }
        assert!(r.shells[13].m_k < 1e-8);
        assert!(r.shells.iter().all(|s| s.lambda_k["a11"] <= 1.0 + 1e-9));
    }

    #[test]
    fn constant_heat_coefficients() {
        let p = Problem::new(
            DomainSpec::whole_space(1),
            CoefficientSet::new(1, vec![Expr::num(1.0)], vec![Expr::num(0.0)], Expr::num(0.0)).unwrap(),
            InitialMeasure::Dirac(vec![0.0]),
        )
        .unwrap();
        let r = validate(&p, &SampleOptions { k_max: 6, samples: 256, ..Default::default() }).unwrap();
        for s in &r.shells {
            assert_eq!((s.m_k, s.big_m_k), (1.0, 1.0));
            assert_eq!(s.lambda_k["a11"], 0.0);
            assert!(!s.degenerate);
        }
    }

    #[test]
    fn positive_c_has_witness() {
        let p = Problem::new(
            DomainSpec::interval(-1.0, 1.0),
            CoefficientSet::new(1, vec![Expr::num(1.0)], vec![Expr::num(0.0)], Expr::num(0.1)).unwrap(),
            InitialMeasure::Dirac(vec![0.0]),
        )
        .unwrap();
        let r = validate(&p, &SampleOptions { k_max: 3, samples: 64, ..Default::default() }).unwrap();
        assert!(!r.is_clean());
        let v = &r.violations[0];
        assert_eq!(v.kind, ViolationKind::PositiveC);
        assert_eq!(p.coefficients.eval_c(&v.x, v.t).unwrap(), v.value);
    }

    #[test]
    fn asymmetric_matrix_is_an_error() {
        let c = CoefficientSet::new(
            2,
            vec![Expr::num(1.0), Expr::num(0.1), Expr::num(0.0), Expr::num(1.0)],
            vec![Expr::num(0.0), Expr::num(0.0)],
            Expr::num(0.0),
        )
        .unwrap();
        let p = Problem::new(DomainSpec::whole_space(2), c, InitialMeasure::Dirac(vec![0.0, 0.0])).unwrap();
        let r = validate(&p, &SampleOptions { k_max: 2, samples: 16, ..Default::default() });
        assert!(matches!(r, Err(ProblemError::Asymmetric { i: 1, j: 2, .. })));
    }

    #[test]
    fn indefinite_matrix_is_flagged() {
        let c = CoefficientSet::new(
            2,
            vec![Expr::num(1.0), Expr::num(2.0), Expr::num(2.0), Expr::num(1.0)],
            vec![Expr::num(0.0), Expr::num(0.0)],
            Expr::num(0.0),
        )
        .unwrap();
        let p = Problem::new(DomainSpec::whole_space(2), c, InitialMeasure::Dirac(vec![0.0, 0.0])).unwrap();
        let r = validate(&p, &SampleOptions { k_max: 1, samples: 8, ..Default::default() }).unwrap();
        assert!(r.violations.iter().all(|v| v.kind == ViolationKind::NotPositiveSemidefinite));
        assert!((r.violations[0].value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let opts = SampleOptions { k_max: 5, samples: 500, seed: 9, t_end: 1.0 };
        let a = serde_json::to_string(&validate(&example1(), &opts).unwrap()).unwrap();
        let b = serde_json::to_string(&validate(&example1(), &opts).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
