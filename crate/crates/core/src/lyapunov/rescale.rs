use serde::Serialize;

use super::integrability::{integrate_against, measure_atoms};
use super::{check_blow_up, LyapunovError};
use crate::exprlang::{Compiled, EvalError, Expr};
use crate::problem::{Problem, SampleOptions};

const BREAKPOINTS: usize = 64;

/// θ and W = log(1 + θ(V)) tabulated on breakpoints z_1 < z_2 < ... with
/// ν(V ≥ z_k) ≤ 2^{-k} and nondecreasing gaps of at least one.
#[derive(Debug, Clone, Serialize)]
pub struct Rescaling {
    pub breakpoints: Vec<f64>,
    /// Slope of θ₀ on [z_k, z_{k+1}].
    pub slopes: Vec<f64>,
    /// Width of the blending window ending at z_{k+1}.
    pub windows: Vec<f64>,
    /// θ at each breakpoint.
    pub theta_at: Vec<f64>,
    /// ∫ θ(V) dν.
    pub integral: f64,
    pub integral_finite: bool,
    #[serde(skip)]
    v: Option<Compiled>,
}

impl Rescaling {
    fn from_breakpoints(z: Vec<f64>) -> Self {
        let m = z.len();
        let slopes: Vec<f64> = z.windows(2).map(|w| 1.0 / (w[1] - w[0])).collect();
        let mut windows = vec![0.0; m - 1];
        for i in 0..m.saturating_sub(2) {
            windows[i] = (1.0 / (i + 1) as f64).min(0.5 * (z[i + 1] - z[i]));
        }
        let mut r = Rescaling {
            breakpoints: z,
            slopes,
            windows,
            theta_at: Vec::with_capacity(m),
            integral: f64::NAN,
            integral_finite: false,
            v: None,
        };
        let mut th = 0.0;
        r.theta_at.push(0.0);
        for i in 0..m - 1 {
            let gap = r.breakpoints[i + 1] - r.breakpoints[i];
            th += r.slopes[i] * gap;
            if i + 2 < m {
                th += 0.5 * (r.slopes[i + 1] - r.slopes[i]) * r.windows[i];
            }
            r.theta_at.push(th);
        }
        r
    }

    fn segment(&self, s: f64) -> usize {
        let z = &self.breakpoints;
        z.partition_point(|zk| *zk <= s).saturating_sub(1).min(z.len() - 2)
    }

    /// Piecewise-linear θ₀ with θ₀(z_k) = k - 1.
    pub fn theta0(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let i = self.segment(s);
        if s == self.breakpoints[i + 1] {
            return (i + 1) as f64;
        }
        i as f64 + self.slopes[i] * (s - self.breakpoints[i])
    }

    /// g = θ'.
    pub fn g(&self, s: f64) -> f64 {
        let i = self.segment(s.max(0.0));
        let w = self.windows[i];
        let start = self.breakpoints[i + 1] - w;
        if w > 0.0 && s > start && s < self.breakpoints[i + 1] {
            let tau = (s - start) / w;
            self.slopes[i] + (self.slopes[i + 1] - self.slopes[i]) * tau * tau * (3.0 - 2.0 * tau)
        } else {
            self.slopes[i]
        }
    }

    pub fn theta(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let i = self.segment(s);
        let zi = self.breakpoints[i];
        let mut th = self.theta_at[i] + self.slopes[i] * (s - zi);
        let w = self.windows[i];
        let start = self.breakpoints[i + 1] - w;
        if w > 0.0 && s > start {
            let tau = ((s - start) / w).min(1.0);
            th += (self.slopes[i + 1] - self.slopes[i]) * w * (tau.powi(3) - 0.5 * tau.powi(4));
        }
        th
    }

    /// log(1 + θ(s)).
    pub fn w_of(&self, s: f64) -> f64 {
        self.theta(s).ln_1p()
    }

    /// W(x, t) = log(1 + θ(V(x, t))).
    pub fn evaluate(&self, x: &[f64], t: f64) -> Result<f64, EvalError> {
        let v = self.v.as_ref().expect("rescaling built from an expression");
        Ok(self.w_of(v.eval(x, t)?))
    }
}

fn breakpoints(mut values: Vec<(f64, f64)>) -> Vec<f64> {
    values.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut z = vec![0.0];
    let mut gap: f64 = 1.0;
    // suffix[i] = weight of atoms i.. ; q_k sits just above the highest atom
    // whose upper cumulative weight exceeds 2^{-k}
    let mut suffix = vec![0.0; values.len() + 1];
    for i in (0..values.len()).rev() {
        suffix[i] = suffix[i + 1] + values[i].1;
    }
    for k in 2..=BREAKPOINTS {
        let level = 0.5f64.powi(k as i32);
        let idx = suffix.partition_point(|s| *s > level);
        let q = if idx > 0 { values[idx - 1].0.next_up() } else { 0.0 };
        let prev = *z.last().unwrap();
        gap = gap.max(1.0);
        let mut next = q.max(prev + gap);
        while next - prev < gap {
            next = next.next_up();
        }
        gap = next - prev;
        z.push(next);
    }
    z
}

/// Builds θ from the distribution of V(·, 0) under ν.
pub fn rescale_integrable(problem: &Problem, v: &Expr, opts: &SampleOptions, cells: usize) -> Result<Rescaling, LyapunovError> {
    check_blow_up(problem, v, opts)?;
    let vf = Compiled::new(v);
    let atoms = measure_atoms(&problem.domain, &problem.initial, cells)?;
    let mut values = Vec::with_capacity(atoms.len());
    for (x, w) in &atoms {
        let val = vf.eval(x, 0.0)?;
        if val < 0.0 {
            return Err(LyapunovError::Precondition(format!("V = {val} < 0 at {x:?}")));
        }
        values.push((val, *w));
    }
    let mut r = Rescaling::from_breakpoints(breakpoints(values));
    let rep = integrate_against(&problem.domain, &problem.initial, cells, |x| Ok(r.theta(vf.eval(x, 0.0)?)))?;
    r.integral = rep.value;
    r.integral_finite = rep.finite;
    r.v = Some(vf);
    Ok(r)
}
