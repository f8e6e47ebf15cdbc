use thiserror::Error;

use super::ast::{BinOp, Expr, Func, Var};

/// Variable bindings for one evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Env<'a> {
    pub x: &'a [f64],
    pub t: f64,
}

impl<'a> Env<'a> {
    pub fn new(x: &'a [f64], t: f64) -> Self {
        Env { x, t }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable {0}")]
    Unbound(Var),
    #[error("domain error in `{expr}` at x={x:?}, t={t}: {reason}")]
    Domain {
        expr: String,
        reason: &'static str,
        x: Vec<f64>,
        t: f64,
    },
}

impl EvalError {
    fn domain(e: &Expr, reason: &'static str, env: &Env<'_>) -> Self {
        EvalError::Domain {
            expr: e.to_string(),
            reason,
            x: env.x.to_vec(),
            t: env.t,
        }
    }
}

/// `sign` with `sign(0) = 0`.
#[inline]
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn kink_sign(u: f64, du: f64) -> f64 {
    if u != 0.0 {
        sign(u)
    } else if du < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Checked primitive: returns `Err(reason)` instead of producing NaN or an
/// infinity. Shared by the tree walker and the compiled evaluator so both
/// agree bit for bit.
#[inline]
pub(crate) fn apply_binary(op: BinOp, l: f64, r: f64) -> Result<f64, &'static str> {
    let v = match op {
        BinOp::Add => l + r,
        BinOp::Sub => l - r,
        BinOp::Mul => l * r,
        BinOp::Div => {
            if r == 0.0 {
                return Err("division by zero");
            }
            l / r
        }
        BinOp::Pow => pow(l, r)?,
    };
    finite(v)
}

#[inline]
fn pow(base: f64, exp: f64) -> Result<f64, &'static str> {
    if base == 0.0 && exp < 0.0 {
        return Err("division by zero");
    }
    if exp == 2.0 {
        return Ok(base * base);
    }
    if exp.fract() == 0.0 && exp.abs() <= 64.0 {
        return Ok(base.powi(exp as i32));
    }
    if base < 0.0 {
        return Err("negative base with non-integer exponent");
    }
    Ok(base.powf(exp))
}

#[inline]
fn finite(v: f64) -> Result<f64, &'static str> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err("non-finite result")
    }
}

#[inline]
pub(crate) fn apply_unary(f: Func, u: f64) -> Result<f64, &'static str> {
    let v = match f {
        Func::Sin => u.sin(),
        Func::Cos => u.cos(),
        Func::Tan => u.tan(),
        Func::Exp => u.exp(),
        Func::Log => {
            if u <= 0.0 {
                return Err("log of non-positive argument");
            }
            u.ln()
        }
        Func::Sqrt => {
            if u < 0.0 {
                return Err("sqrt of negative argument");
            }
            u.sqrt()
        }
        Func::Abs => u.abs(),
        Func::Sign => sign(u),
        Func::Min | Func::Max | Func::Pow | Func::KinkSign => unreachable!("binary function"),
    };
    finite(v)
}

#[inline]
pub(crate) fn apply_func2(f: Func, u: f64, v: f64) -> Result<f64, &'static str> {
    match f {
        Func::Min => Ok(u.min(v)),
        Func::Max => Ok(u.max(v)),
        Func::Pow => apply_binary(BinOp::Pow, u, v),
        Func::KinkSign => Ok(kink_sign(u, v)),
        _ => unreachable!("unary function"),
    }
}

impl Expr {
    /// Evaluate at a point. Errors name the failing sub-expression.
    pub fn eval(&self, env: &Env<'_>) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Pi => Ok(std::f64::consts::PI),
            Expr::Var(Var::T) => Ok(env.t),
            Expr::Var(v @ Var::X(i)) => env.x.get(*i).copied().ok_or(EvalError::Unbound(*v)),
            Expr::Neg(u) => Ok(-u.eval(env)?),
            Expr::Binary(op, l, r) => {
                let a = l.eval(env)?;
                let b = r.eval(env)?;
                apply_binary(*op, a, b).map_err(|why| EvalError::domain(self, why, env))
            }
            Expr::Call(f, args) => {
                let res = if f.arity() == 1 {
                    let u = args[0].eval(env)?;
                    apply_unary(*f, u)
                } else {
                    let u = args[0].eval(env)?;
                    let v = args[1].eval(env)?;
                    apply_func2(*f, u, v)
                };
                res.map_err(|why| EvalError::domain(self, why, env))
            }
        }
    }

    /// Convenience for one-dimensional, time-independent use.
    pub fn eval_at(&self, x: f64, t: f64) -> Result<f64, EvalError> {
        self.eval(&Env::new(&[x], t))
    }
}
