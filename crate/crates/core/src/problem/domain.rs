use serde::{Deserialize, Serialize};

use super::ProblemError;
use crate::sampling::Halton;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    Interval { lower: f64, upper: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    WholeSpace { dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ExhaustionRule {
    Dyadic,
    Linear { step: f64 },
}

/// An open set D together with its exhaustion D_1 ⊂ D_2 ⊂ ...
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub exhaustion: ExhaustionRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Box,
    Ball,
}

/// Bounded open piece of an exhaustion. For balls `lower`/`upper` hold the
/// bounding box and `radius` the radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    pub shape: Shape,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub radius: f64,
}

impl Region {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        match self.shape {
            Shape::Box => self.lower.iter().zip(&self.upper).any(|(l, u)| l >= u),
            Shape::Ball => self.radius <= 0.0,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self.shape {
            Shape::Box => x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *l < *v && *v < *u),
            Shape::Ball => norm2(x) < self.radius * self.radius,
        }
    }

    pub fn contains_closed(&self, x: &[f64]) -> bool {
        match self.shape {
            Shape::Box => x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *l <= *v && *v <= *u),
            Shape::Ball => norm2(x) <= self.radius * self.radius,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self.shape {
            Shape::Box => norm2(&self.upper.iter().zip(&self.lower).map(|(u, l)| u - l).collect::<Vec<_>>()).sqrt(),
            Shape::Ball => 2.0 * self.radius,
        }
    }

    /// Nearest point of the closure (componentwise clamp for boxes, radial
    /// projection for balls).
    pub fn clamp(&self, x: &mut [f64]) {
        match self.shape {
            Shape::Box => {
                for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
                    *v = v.clamp(*l, *u);
                }
            }
            Shape::Ball => {
                let r = norm2(x).sqrt();
                if r > self.radius {
                    let s = self.radius / r;
                    x.iter_mut().for_each(|v| *v *= s);
                }
            }
        }
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

impl DomainSpec {
    pub fn interval(lower: f64, upper: f64) -> Self {
        DomainSpec {
            kind: DomainKind::Interval { lower, upper },
            exhaustion: ExhaustionRule::Dyadic,
        }
    }

    pub fn whole_space(dim: usize) -> Self {
        DomainSpec {
            kind: DomainKind::WholeSpace { dim },
            exhaustion: ExhaustionRule::Dyadic,
        }
    }

    pub fn with_rule(mut self, rule: ExhaustionRule) -> Self {
        self.exhaustion = rule;
        self
    }

    pub fn check(&self) -> Result<(), ProblemError> {
        let bad = |m: String| Err(ProblemError::InvalidDomain(m));
        match &self.kind {
            DomainKind::Interval { lower, upper } => {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return bad(format!("interval needs finite lower < upper, got ({lower}, {upper})"));
                }
            }
            DomainKind::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() || lower.len() > 3 {
                    return bad("box needs matching lower/upper of length 1..=3".into());
                }
                if let Some(i) = (0..lower.len()).find(|&i| !(lower[i].is_finite() && upper[i].is_finite() && lower[i] < upper[i])) {
                    return bad(format!("box component {} has lower {} >= upper {}", i + 1, lower[i], upper[i]));
                }
            }
            DomainKind::WholeSpace { dim } => {
                if !(1..=3).contains(dim) {
                    return bad(format!("whole space dimension {dim} unsupported (1..=3)"));
                }
            }
        }
        if let ExhaustionRule::Linear { step } = self.exhaustion {
            if !(step.is_finite() && step > 0.0) {
                return bad(format!("linear exhaustion step must be positive, got {step}"));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            DomainKind::Interval { .. } => 1,
            DomainKind::Box { lower, .. } => lower.len(),
            DomainKind::WholeSpace { dim } => *dim,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self.kind, DomainKind::WholeSpace { .. })
    }

    fn bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.kind {
            DomainKind::Interval { lower, upper } => Some((vec![*lower], vec![*upper])),
            DomainKind::Box { lower, upper } => Some((lower.clone(), upper.clone())),
            DomainKind::WholeSpace { .. } => None,
        }
    }

    /// Membership in the open set D.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self.bounds() {
            Some((l, u)) => x.iter().zip(l.iter().zip(&u)).all(|(v, (l, u))| *l < *v && *v < *u),
            None => x.iter().all(|v| v.is_finite()),
        }
    }

    /// The closed bounding description of D_k. `k = 0` gives the empty set.
    pub fn exhaust(&self, k: u32) -> Region {
        let d = self.dim();
        match self.bounds() {
            Some((lower, upper)) => {
                let frac = match self.exhaustion {
                    ExhaustionRule::Dyadic => 0.5f64.powi(k as i32 + 1),
                    ExhaustionRule::Linear { step } => 0.5 / (1.0 + k as f64 * step),
                };
                let mut lo = Vec::with_capacity(d);
                let mut hi = Vec::with_capacity(d);
                for i in 0..d {
                    let margin = frac * (upper[i] - lower[i]);
                    lo.push(lower[i] + margin);
                    hi.push(upper[i] - margin);
                }
                Region {
                    shape: Shape::Box,
                    lower: lo,
                    upper: hi,
                    radius: 0.0,
                }
            }
            None => {
                let r = match self.exhaustion {
                    ExhaustionRule::Dyadic => k as f64,
                    ExhaustionRule::Linear { step } => k as f64 * step,
                };
                Region {
                    shape: if d == 1 { Shape::Box } else { Shape::Ball },
                    lower: vec![-r; d],
                    upper: vec![r; d],
                    radius: r,
                }
            }
        }
    }

    pub fn exhaustion_rule_text(&self) -> String {
        match (self.is_bounded(), self.exhaustion) {
            (true, ExhaustionRule::Dyadic) => "dyadic: D_k = (lower + 2^-(k+1) width, upper - 2^-(k+1) width)".into(),
            (true, ExhaustionRule::Linear { step }) => {
                format!("linear({step}): D_k = (lower + width/(2(1+k*{step})), upper - width/(2(1+k*{step})))")
            }
            (false, ExhaustionRule::Dyadic) => "ball: D_k = {|x| < k}".into(),
            (false, ExhaustionRule::Linear { step }) => format!("ball: D_k = {{|x| < {step}*k}}"),
        }
    }

    /// Quasi-random points of closure(D_k) \ D_{k-1} crossed with [0, t_end],
    /// followed by the corner points of D_k at t = 0 and t = t_end.
    pub fn sample_shell(&self, k: u32, n: usize, seed: u64, t_end: f64) -> Vec<(Vec<f64>, f64)> {
        let outer = self.exhaust(k);
        let inner = self.exhaust(k.saturating_sub(1));
        let d = self.dim();
        let mut halton = Halton::new(d + 2, seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut u = vec![0.0; d + 2];
        let mut out = Vec::with_capacity(n + 16);
        for _ in 0..n {
            halton.next_point(&mut u);
            let x = match outer.shape {
                Shape::Box => box_shell_point(&outer, &inner, &u[..d + 1]),
                Shape::Ball => ball_shell_point(inner.radius, outer.radius, &u[..d]),
            };
            out.push((x, u[d + 1] * t_end));
        }
        let times: &[f64] = if t_end > 0.0 { &[0.0, t_end] } else { &[0.0] };
        for x in corner_points(&outer) {
            for &t in times {
                out.push((x.clone(), t));
            }
        }
        out
    }
}

fn corner_points(r: &Region) -> Vec<Vec<f64>> {
    let d = r.dim();
    match r.shape {
        Shape::Box => (0..1usize << d)
            .map(|mask| (0..d).map(|i| if mask >> i & 1 == 1 { r.upper[i] } else { r.lower[i] }).collect())
            .collect(),
        Shape::Ball => (0..2 * d)
            .map(|j| {
                let mut x = vec![0.0; d];
                x[j / 2] = if j % 2 == 0 { r.radius } else { -r.radius };
                x
            })
            .collect(),
    }
}

/// Uniform point of `outer \ inner` for nested boxes: the difference is cut
/// into disjoint slabs, slab j having coordinate j outside the inner range
/// and coordinates before j inside it.
fn box_shell_point(outer: &Region, inner: &Region, u: &[f64]) -> Vec<f64> {
    let d = outer.dim();
    let empty_inner = inner.is_empty();
    let out_len: Vec<f64> = (0..d).map(|i| outer.upper[i] - outer.lower[i]).collect();
    let in_len: Vec<f64> = (0..d)
        .map(|i| if empty_inner { 0.0 } else { inner.upper[i] - inner.lower[i] })
        .collect();
    let mut vols = Vec::with_capacity(d);
    for j in 0..d {
        let mut v = out_len[j] - in_len[j];
        for i in 0..d {
            if i < j {
                v *= in_len[i];
            } else if i > j {
                v *= out_len[i];
            }
        }
        vols.push(v.max(0.0));
    }
    let total: f64 = vols.iter().sum();
    let mut pick = u[0] * total;
    let mut slab = d - 1;
    for (j, v) in vols.iter().enumerate() {
        if pick < *v {
            slab = j;
            break;
        }
        pick -= v;
    }
    (0..d)
        .map(|i| {
            let s = u[i + 1];
            if i < slab {
                inner.lower[i] + s * in_len[i]
            } else if i > slab {
                outer.lower[i] + s * out_len[i]
            } else {
                // two side pieces of equal length for symmetric exhaustions
                let left = if empty_inner { out_len[i] } else { inner.lower[i] - outer.lower[i] };
                let right = if empty_inner { 0.0 } else { outer.upper[i] - inner.upper[i] };
                let z = s * (left + right);
                if z < left {
                    outer.lower[i] + z
                } else {
                    inner.upper[i] + (z - left)
                }
            }
        })
        .collect()
}

fn ball_shell_point(r0: f64, r1: f64, u: &[f64]) -> Vec<f64> {
    let d = u.len();
    let r0 = r0.max(0.0);
    let r = (r0.powi(d as i32) + u[0] * (r1.powi(d as i32) - r0.powi(d as i32))).powf(1.0 / d as f64);
    match d {
        2 => {
            let phi = 2.0 * std::f64::consts::PI * u[1];
            vec![r * phi.cos(), r * phi.sin()]
        }
        3 => {
            let z = 2.0 * u[1] - 1.0;
            let phi = 2.0 * std::f64::consts::PI * u[2];
            let s = (1.0 - z * z).max(0.0).sqrt();
            vec![r * s * phi.cos(), r * s * phi.sin(), r * z]
        }
        _ => unreachable!("ball shells are only used for d = 2, 3"),
    }
}
