use serde::Serialize;

use super::{Certificate, CertificateKind, LyapunovError, Status};
use crate::exprlang::{Compiled, EvalError, Expr};
use crate::problem::{DomainKind, DomainSpec, InitialMeasure, Problem};
use crate::quadrature::gauss_legendre_nodes;

const BOUNDED_SHELLS: u32 = 50;
const WHOLE_LINE_SHELLS: u32 = 160;
const DIVERGENCE_LIMIT: f64 = 1e12;
const TAIL_WINDOW: usize = 6;
const MAX_RATIO: f64 = 0.95;

#[derive(Debug, Clone, Serialize)]
pub struct IntegrabilityReport {
    pub finite: bool,
    /// ∫ f dν, or +∞ when the partial sums diverge.
    pub value: f64,
    /// Mass of the unnormalized density on the same ladder.
    pub normalization: f64,
    pub shells: usize,
    pub tail_estimate: f64,
    /// Per-shell contributions to ∫ f ρ before normalization.
    pub increments: Vec<f64>,
}

/// Pieces of the 1D quadrature ladder: shell k is a list of intervals.
fn ladder_1d(domain: &DomainSpec) -> Result<Vec<Vec<(f64, f64)>>, LyapunovError> {
    match &domain.kind {
        DomainKind::Interval { lower, upper } => {
            let (l, u) = (*lower, *upper);
            let w = u - l;
            let margin = |k: u32| w * 0.5f64.powi(k as i32 + 1);
            let mut shells = vec![vec![(l + margin(1), u - margin(1))]];
            for k in 2..=BOUNDED_SHELLS {
                let (outer, inner) = (margin(k), margin(k - 1));
                shells.push(vec![(l + outer, l + inner), (u - inner, u - outer)]);
            }
            Ok(shells)
        }
        DomainKind::WholeSpace { dim: 1 } => {
            let r = |k: u32| 2f64.powf((k as f64 - 1.0) / 4.0);
            let mut shells = vec![vec![(-1.0, 1.0)]];
            for k in 2..=WHOLE_LINE_SHELLS {
                shells.push(vec![(-r(k), -r(k - 1)), (r(k - 1), r(k))]);
            }
            Ok(shells)
        }
        _ => Err(LyapunovError::Unsupported("quadrature of a density is implemented for one-dimensional domains".into())),
    }
}

/// Weighted nodes (x, weight) of the unnormalized density, shell by shell.
/// Nodes where the density vanishes are dropped.
fn density_nodes(domain: &DomainSpec, nu: &InitialMeasure, cells: usize) -> Result<Vec<Vec<(f64, f64)>>, LyapunovError> {
    let cells = cells.max(1);
    let ladder = ladder_1d(domain)?;
    let (rho, support): (Option<Compiled>, (f64, f64)) = match nu {
        InitialMeasure::Density(e) => (Some(Compiled::new(e)), (f64::NEG_INFINITY, f64::INFINITY)),
        InitialMeasure::Uniform { lower, upper } => (None, (lower[0], upper[0])),
        InitialMeasure::Dirac(_) => unreachable!("dirac handled by point evaluation"),
    };
    let mut out = Vec::with_capacity(ladder.len());
    for pieces in ladder {
        let mut nodes = Vec::new();
        for (a, b) in pieces {
            let (a, b) = (a.max(support.0), b.min(support.1));
            if a >= b {
                continue;
            }
            for (x, w) in gauss_legendre_nodes(a, b, cells) {
                let r = match &rho {
                    Some(f) => f.eval(&[x], 0.0)?,
                    None => 1.0,
                };
                if r < 0.0 || r.is_nan() {
                    return Err(LyapunovError::Precondition(format!("initial density is {r} at x = {x}")));
                }
                if r > 0.0 {
                    nodes.push((x, w * r));
                }
            }
        }
        out.push(nodes);
    }
    Ok(out)
}

/// Normalized atoms approximating ν, for building distributions of V.
pub(crate) fn measure_atoms(domain: &DomainSpec, nu: &InitialMeasure, cells: usize) -> Result<Vec<(Vec<f64>, f64)>, LyapunovError> {
    if let InitialMeasure::Dirac(p) = nu {
        return Ok(vec![(p.clone(), 1.0)]);
    }
    let nodes: Vec<(f64, f64)> = density_nodes(domain, nu, cells)?.into_iter().flatten().collect();
    let z: f64 = nodes.iter().map(|n| n.1).sum();
    if !(z > 0.0 && z.is_finite()) {
        return Err(LyapunovError::Precondition("initial measure has no mass on the quadrature ladder".into()));
    }
    Ok(nodes.into_iter().map(|(x, w)| (vec![x], w / z)).collect())
}

struct Series {
    sum: f64,
    tail: f64,
    finite: bool,
}

fn judge(increments: &[f64]) -> Series {
    let sum: f64 = increments.iter().sum();
    if !sum.is_finite() || sum.abs() > DIVERGENCE_LIMIT {
        return Series { sum, tail: f64::INFINITY, finite: false };
    }
    let n = increments.len();
    if n <= TAIL_WINDOW {
        return Series { sum, tail: 0.0, finite: true };
    }
    let last = &increments[n - TAIL_WINDOW..];
    if last.iter().all(|i| i.abs() <= 1e-15 * sum.abs().max(f64::MIN_POSITIVE)) {
        return Series { sum, tail: 0.0, finite: true };
    }
    let mut ratio: f64 = 0.0;
    for w in increments[n - TAIL_WINDOW - 1..].windows(2) {
        if w[0] == 0.0 {
            ratio = f64::INFINITY;
            break;
        }
        ratio = ratio.max((w[1] / w[0]).abs());
    }
    if ratio < MAX_RATIO {
        let tail = increments[n - 1].abs() * ratio / (1.0 - ratio);
        Series { sum, tail, finite: true }
    } else {
        Series { sum, tail: f64::INFINITY, finite: false }
    }
}

/// ∫ f dν on the exhaustion ladder. Densities need not be normalized.
pub fn integrate_against<F>(domain: &DomainSpec, nu: &InitialMeasure, cells: usize, f: F) -> Result<IntegrabilityReport, LyapunovError>
where
    F: Fn(&[f64]) -> Result<f64, EvalError>,
{
    if let InitialMeasure::Dirac(p) = nu {
        let v = f(p)?;
        return Ok(IntegrabilityReport {
            finite: v.is_finite(),
            value: v,
            normalization: 1.0,
            shells: 1,
            tail_estimate: 0.0,
            increments: vec![v],
        });
    }
    let shells = density_nodes(domain, nu, cells)?;
    let mut fi = Vec::with_capacity(shells.len());
    let mut zi = Vec::with_capacity(shells.len());
    for nodes in &shells {
        let (mut s, mut z) = (0.0, 0.0);
        for &(x, w) in nodes {
            s += w * f(&[x])?;
            z += w;
        }
        fi.push(s);
        zi.push(z);
    }
    let zs = judge(&zi);
    if !zs.finite || zs.sum + zs.tail <= 0.0 {
        return Err(LyapunovError::Precondition("initial density is not normalizable".into()));
    }
    let fs = judge(&fi);
    let z = zs.sum + zs.tail;
    Ok(IntegrabilityReport {
        finite: fs.finite,
        value: if fs.finite { (fs.sum + fs.tail) / z } else { f64::INFINITY },
        normalization: z,
        shells: shells.len(),
        tail_estimate: fs.tail / z,
        increments: fi,
    })
}

/// Whether V(·, 0) ∈ L¹(ν), with the value of ∫ V dν.
pub fn check_initial_integrability(problem: &Problem, v: &Expr, cells: usize) -> Result<(Certificate, IntegrabilityReport), LyapunovError> {
    let vf = Compiled::new(v);
    let rep = integrate_against(&problem.domain, &problem.initial, cells, |x| vf.eval(x, 0.0))?;
    let mut cert = Certificate::new(CertificateKind::Integrability, cells, 0);
    cert.status = if rep.finite { Status::Holds } else { Status::Fails };
    cert.constants.insert("integral".into(), rep.value);
    cert.constants.insert("tail_estimate".into(), rep.tail_estimate);
    cert.constants.insert("shells".into(), rep.shells as f64);
    if !rep.finite {
        cert.notes.push("partial sums of the shell ladder do not settle".into());
    }
    Ok((cert, rep))
}
