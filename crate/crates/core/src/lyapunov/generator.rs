use super::LyapunovError;
use crate::exprlang::{add, mul, Compiled, EvalError, Expr, Var};
use crate::problem::{max_dim_used, CoefficientSet};

/// Symbolic pieces of the generator applied to V.
#[derive(Debug, Clone)]
pub struct Generator {
    pub v: Expr,
    pub grad: Vec<Expr>,
    pub dt_v: Expr,
    /// a^{ij} ∂_i∂_j V + b^i ∂_i V + c V
    pub lv: Expr,
    /// a^{ij} ∂_i∂_j V + b^i ∂_i V
    pub l0v: Expr,
    /// (A ∇V, ∇V)
    pub grad_sq: Expr,
}

fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
    terms.into_iter().fold(Expr::num(0.0), add)
}

pub fn apply_generator(coeffs: &CoefficientSet, v: &Expr) -> Result<Generator, LyapunovError> {
    let d = coeffs.dim();
    let used = max_dim_used(v);
    if used > d {
        return Err(LyapunovError::Dimension { used, dim: d });
    }
    let grad: Vec<Expr> = (0..d).map(|i| v.differentiate(Var::X(i))).collect();
    let mut second = Vec::with_capacity(d * d);
    let mut metric = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let a = coeffs.a(i, j).clone();
            second.push(mul(a.clone(), grad[i].differentiate(Var::X(j))));
            metric.push(mul(a, mul(grad[i].clone(), grad[j].clone())));
        }
    }
    let drift = (0..d).map(|i| mul(coeffs.b(i).clone(), grad[i].clone()));
    let l0v = add(sum(second), sum(drift));
    let lv = add(l0v.clone(), mul(coeffs.c().clone(), v.clone()));
    Ok(Generator {
        v: v.clone(),
        dt_v: v.differentiate(Var::T),
        grad,
        lv,
        l0v,
        grad_sq: sum(metric),
    })
}

/// Compiled form for sampling loops.
#[derive(Debug, Clone)]
pub struct GeneratorEval {
    pub v: Compiled,
    pub dt_v: Compiled,
    pub lv: Compiled,
    pub l0v: Compiled,
    pub grad_sq: Compiled,
}

impl GeneratorEval {
    pub fn new(g: &Generator) -> Self {
        GeneratorEval {
            v: Compiled::new(&g.v),
            dt_v: Compiled::new(&g.dt_v),
            lv: Compiled::new(&g.lv),
            l0v: Compiled::new(&g.l0v),
            grad_sq: Compiled::new(&g.grad_sq),
        }
    }

    /// (V, LV) at a point.
    pub fn v_lv(&self, x: &[f64], t: f64) -> Result<(f64, f64), EvalError> {
        Ok((self.v.eval(x, t)?, self.lv.eval(x, t)?))
    }
}
