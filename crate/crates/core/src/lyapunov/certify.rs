use rayon::prelude::*;
use serde::Serialize;

use super::generator::{apply_generator, GeneratorEval};
use super::{Certificate, CertificateKind, LyapunovError, ShellSup, Status, Witness};
use crate::exprlang::{Compiled, EvalError, Expr};
use crate::problem::{Problem, SampleOptions};
use crate::quadrature::adaptive_simpson;

const TIMEDEP_TOL: f64 = 1e-9;

/// Sampled point value: the quantity whose sup is taken, plus LV/V when
/// it is defined.
struct PointValue {
    value: f64,
    lv_over_v: Option<f64>,
}

fn scan_shells<F>(problem: &Problem, opts: &SampleOptions, f: F) -> Result<Vec<ShellSup>, EvalError>
where
    F: Fn(&[f64], f64) -> Result<PointValue, EvalError> + Sync,
{
    (1..=opts.k_max)
        .into_par_iter()
        .map(|k| {
            let pts = problem.domain.sample_shell(k, opts.samples, opts.seed, opts.t_end);
            let mut best = ShellSup {
                k,
                sup: f64::NEG_INFINITY,
                argmax_point: pts[0].0.clone(),
                argmax_t: pts[0].1,
                sup_lv_over_v: Some(f64::NEG_INFINITY),
            };
            for (x, t) in &pts {
                let pv = f(x, *t)?;
                if pv.value > best.sup {
                    best.sup = pv.value;
                    best.argmax_point = x.clone();
                    best.argmax_t = *t;
                }
                best.sup_lv_over_v = match (best.sup_lv_over_v, pv.lv_over_v) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                };
            }
            Ok(best)
        })
        .collect()
}

fn inconclusive(mut cert: Certificate, err: impl std::fmt::Display) -> Certificate {
    cert.status = Status::Inconclusive;
    cert.notes.push(format!("evaluation failed: {err}"));
    cert
}

/// Shell minima of V; errors unless they increase along the exhaustion.
pub fn check_blow_up(problem: &Problem, v: &Expr, opts: &SampleOptions) -> Result<Vec<f64>, LyapunovError> {
    let vf = Compiled::new(v);
    let mins = (1..=opts.k_max)
        .into_par_iter()
        .map(|k| {
            let mut m = f64::INFINITY;
            for (x, t) in problem.domain.sample_shell(k, opts.samples.min(1024), opts.seed, opts.t_end) {
                m = m.min(vf.eval(&x, t)?);
            }
            Ok(m)
        })
        .collect::<Result<Vec<f64>, EvalError>>()?;
    let increasing = mins.len() >= 2 && mins.windows(2).all(|w| w[1] > w[0]);
    if !increasing || mins[mins.len() - 1] < mins[0] + 1.0 {
        return Err(LyapunovError::NoBlowUp { mins });
    }
    Ok(mins)
}

/// Sampled K* = sup LV/(1+V) over D_{k_max} × [0,T].
pub fn check_existence_condition(problem: &Problem, v: &Expr, opts: &SampleOptions) -> Result<Certificate, LyapunovError> {
    let cert = Certificate::new(CertificateKind::ExistenceKv, opts.samples, opts.seed);
    match check_blow_up(problem, v, opts) {
        Err(LyapunovError::Eval(e)) => return Ok(inconclusive(cert, e)),
        other => other?,
    };
    let g = apply_generator(&problem.coefficients, v)?;
    let ev = GeneratorEval::new(&g);
    let shells = scan_shells(problem, opts, |x, t| {
        let (v, lv) = ev.v_lv(x, t)?;
        Ok(PointValue {
            value: lv / (1.0 + v),
            lv_over_v: (v > 0.0).then(|| lv / v),
        })
    });
    let mut cert = cert;
    let shells = match shells {
        Ok(s) => s,
        Err(e) => return Ok(inconclusive(cert, e)),
    };
    let sups: Vec<f64> = shells.iter().map(|s| s.sup).collect();
    let k_star = sups.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    cert.shells = shells;
    if !k_star.is_finite() {
        cert.status = Status::Inconclusive;
        cert.notes.push("LV/(1+V) is not finite on the samples (1 + V <= 0 somewhere?)".into());
        return Ok(cert);
    }
    let n = sups.len();
    if n >= 4 {
        let earlier = sups[..n - 3].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let growing = sups[n - 3] < sups[n - 2] && sups[n - 2] < sups[n - 1];
        if growing && sups[n - 1] > 2.0 * earlier.max(1.0) {
            let last = &cert.shells[n - 1];
            let (vv, lv) = ev.v_lv(&last.argmax_point, last.argmax_t)?;
            cert.witnesses.push(Witness {
                x: last.argmax_point.clone(),
                t: last.argmax_t,
                lhs: lv,
                rhs: earlier * (1.0 + vv),
            });
            cert.status = Status::Fails;
            cert.constants.insert("K_ref".into(), earlier);
            cert.notes.push("per-shell sup of LV/(1+V) grows along the exhaustion".into());
            return Ok(cert);
        }
    }
    cert.status = Status::Holds;
    cert.constants.insert("K".into(), k_star);
    Ok(cert)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QrRow {
    pub t: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

fn time_only(e: &Expr, what: &str) -> Result<Compiled, LyapunovError> {
    if e.max_space_index().is_some() {
        return Err(LyapunovError::Precondition(format!("{what} must depend on t only")));
    }
    Ok(Compiled::new(e))
}

/// R(t) = exp ∫₀ᵗ H and Q(t) = R(t) ∫₀ᵗ K/R at the given ascending times.
pub fn moment_factors(k: &Expr, h: &Expr, times: &[f64]) -> Result<Vec<QrRow>, LyapunovError> {
    let kf = time_only(k, "K")?;
    let hf = time_only(h, "H")?;
    let mut hfun = |s: f64| hf.eval(&[], s);
    let mut rows = Vec::with_capacity(times.len());
    let (mut ih, mut iq, mut prev) = (0.0, 0.0, 0.0);
    for &t in times {
        if t < prev {
            return Err(LyapunovError::Precondition("moment factor times must be ascending and nonnegative".into()));
        }
        let base = ih;
        let seg_h = adaptive_simpson(prev, t, 1e-14, &mut hfun)?;
        let seg_q = adaptive_simpson(prev, t, 1e-14, &mut |s: f64| {
            let inner = base + adaptive_simpson(prev, s, 1e-15, &mut |u: f64| hf.eval(&[], u))?;
            Ok::<f64, EvalError>(kf.eval(&[], s)? * (-inner).exp())
        })?;
        ih += seg_h;
        iq += seg_q;
        rows.push(QrRow { t, q: ih.exp() * iq, r: ih.exp() });
        prev = t;
    }
    Ok(rows)
}

/// Samples ∂_tV + LV − K(t) − H(t)V. Shell sups are of the excess divided
/// by 1 + |∂_tV| + |LV| + |K| + |HV|.
pub fn check_timedep_condition(problem: &Problem, v: &Expr, k: &Expr, h: &Expr, opts: &SampleOptions) -> Result<Certificate, LyapunovError> {
    let kf = time_only(k, "K")?;
    let hf = time_only(h, "H")?;
    for i in 0..=100 {
        let t = opts.t_end * i as f64 / 100.0;
        let hv = hf.eval(&[], t)?;
        if hv < 0.0 {
            return Err(LyapunovError::Precondition(format!("H({t}) = {hv} is negative")));
        }
    }
    let mut cert = Certificate::new(CertificateKind::TimedepKh, opts.samples, opts.seed);
    match check_blow_up(problem, v, opts) {
        Err(LyapunovError::Eval(e)) => return Ok(inconclusive(cert, e)),
        other => other?,
    };
    let g = apply_generator(&problem.coefficients, v)?;
    let ev = GeneratorEval::new(&g);
    let parts = |x: &[f64], t: f64| -> Result<(f64, f64), EvalError> {
        let vv = ev.v.eval(x, t)?;
        let lhs = ev.dt_v.eval(x, t)? + ev.lv.eval(x, t)?;
        let kk = kf.eval(&[], t)?;
        let hh = hf.eval(&[], t)?;
        Ok((lhs, kk + hh * vv))
    };
    let shells = scan_shells(problem, opts, |x, t| {
        let (lhs, rhs) = parts(x, t)?;
        Ok(PointValue {
            value: (lhs - rhs) / (1.0 + lhs.abs() + rhs.abs()),
            lv_over_v: None,
        })
    });
    let shells = match shells {
        Ok(s) => s,
        Err(e) => return Ok(inconclusive(cert, e)),
    };
    for s in &shells {
        if s.sup > TIMEDEP_TOL {
            let (lhs, rhs) = parts(&s.argmax_point, s.argmax_t)?;
            cert.witnesses.push(Witness {
                x: s.argmax_point.clone(),
                t: s.argmax_t,
                lhs,
                rhs,
            });
        }
    }
    cert.shells = shells;
    cert.status = if cert.witnesses.is_empty() { Status::Holds } else { Status::Fails };
    let qr = moment_factors(k, h, &[opts.t_end])?;
    cert.constants.insert("Q_T".into(), qr[0].q);
    cert.constants.insert("R_T".into(), qr[0].r);
    Ok(cert)
}

/// Smallest shell index n and largest K > 0 with LV <= −K V on the sampled
/// part of D_{k_max} \ D_n.
pub fn check_ergodic_condition(problem: &Problem, v: &Expr, opts: &SampleOptions) -> Result<Certificate, LyapunovError> {
    if problem.coefficients.depends_on_time() || v.depends_on_time() {
        return Err(LyapunovError::Precondition("ergodic check needs time-independent coefficients and V".into()));
    }
    if !problem.coefficients.c_is_zero() {
        return Err(LyapunovError::Precondition("ergodic check needs c = 0".into()));
    }
    let mut cert = Certificate::new(CertificateKind::Ergodic, opts.samples, opts.seed);
    match check_blow_up(problem, v, opts) {
        Err(LyapunovError::Eval(e)) => return Ok(inconclusive(cert, e)),
        other => other?,
    };
    let g = apply_generator(&problem.coefficients, v)?;
    let ev = GeneratorEval::new(&g);
    let shells = scan_shells(problem, opts, |x, t| {
        let (v, lv) = ev.v_lv(x, t)?;
        let r = if v > 0.0 { lv / v } else { f64::INFINITY };
        Ok(PointValue {
            value: r,
            lv_over_v: (v > 0.0).then_some(r),
        })
    });
    let shells = match shells {
        Ok(s) => s,
        Err(e) => return Ok(inconclusive(cert, e)),
    };
    let sups: Vec<f64> = shells.iter().map(|s| s.sup).collect();
    cert.shells = shells;
    for n in 0..sups.len() {
        let worst = sups[n..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if worst < 0.0 {
            cert.status = Status::Holds;
            cert.constants.insert("K2".into(), -worst);
            cert.constants.insert("n".into(), n as f64);
            return Ok(cert);
        }
    }
    let last = cert.shells.last().expect("k_max >= 1");
    let (_, lv) = ev.v_lv(&last.argmax_point, last.argmax_t)?;
    cert.witnesses.push(Witness {
        x: last.argmax_point.clone(),
        t: last.argmax_t,
        lhs: lv,
        rhs: 0.0,
    });
    cert.status = Status::Fails;
    Ok(cert)
}
