use super::ProblemError;
use crate::exprlang::{Compiled, EvalError, Expr, Var};

/// Coefficients a^{ij}, b^i, c of the operator, kept both as trees (for
/// symbolic work) and in compiled form (for sampling loops).
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    d: usize,
    a: Vec<Expr>,
    b: Vec<Expr>,
    c: Expr,
    a_fast: Vec<Compiled>,
    b_fast: Vec<Compiled>,
    c_fast: Compiled,
}

fn check_vars(field: String, e: &Expr, d: usize) -> Result<(), ProblemError> {
    if let Some(i) = e.max_space_index() {
        if i >= d {
            return Err(ProblemError::VariableIndex { field, index: i + 1, dim: d });
        }
    }
    Ok(())
}

impl CoefficientSet {
    /// `a` is row-major d×d.
    pub fn new(d: usize, a: Vec<Expr>, b: Vec<Expr>, c: Expr) -> Result<Self, ProblemError> {
        if !(1..=3).contains(&d) {
            return Err(ProblemError::Dimension(format!("dimension {d} unsupported (1..=3)")));
        }
        if a.len() != d * d || b.len() != d {
            return Err(ProblemError::Dimension(format!(
                "expected {} diffusion and {d} drift entries, got {} and {}",
                d * d,
                a.len(),
                b.len()
            )));
        }
        for i in 0..d {
            for j in 0..d {
                check_vars(format!("a{}{}", i + 1, j + 1), &a[i * d + j], d)?;
            }
            check_vars(format!("b{}", i + 1), &b[i], d)?;
        }
        check_vars("c".into(), &c, d)?;
        Ok(CoefficientSet {
            d,
            a_fast: a.iter().map(Compiled::new).collect(),
            b_fast: b.iter().map(Compiled::new).collect(),
            c_fast: Compiled::new(&c),
            a,
            b,
            c,
        })
    }

    /// Isotropic diffusion a·I.
    pub fn isotropic(d: usize, a: Expr, b: Vec<Expr>, c: Expr) -> Result<Self, ProblemError> {
        let mut m = vec![Expr::num(0.0); d * d];
        for i in 0..d {
            m[i * d + i] = a.clone();
        }
        Self::new(d, m, b, c)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn a(&self, i: usize, j: usize) -> &Expr {
        &self.a[i * self.d + j]
    }

    pub fn b(&self, i: usize) -> &Expr {
        &self.b[i]
    }

    pub fn c(&self) -> &Expr {
        &self.c
    }

    pub fn depends_on_time(&self) -> bool {
        self.a.iter().chain(&self.b).chain(std::iter::once(&self.c)).any(Expr::depends_on_time)
    }

    pub fn c_is_zero(&self) -> bool {
        self.c.as_num() == Some(0.0)
    }

    pub fn eval_a(&self, x: &[f64], t: f64, out: &mut [f64]) -> Result<(), EvalError> {
        for (o, e) in out.iter_mut().zip(&self.a_fast) {
            *o = e.eval(x, t)?;
        }
        Ok(())
    }

    pub fn eval_a_entry(&self, i: usize, j: usize, x: &[f64], t: f64) -> Result<f64, EvalError> {
        self.a_fast[i * self.d + j].eval(x, t)
    }

    pub fn eval_b(&self, x: &[f64], t: f64, out: &mut [f64]) -> Result<(), EvalError> {
        for (o, e) in out.iter_mut().zip(&self.b_fast) {
            *o = e.eval(x, t)?;
        }
        Ok(())
    }

    pub fn eval_b_entry(&self, i: usize, x: &[f64], t: f64) -> Result<f64, EvalError> {
        self.b_fast[i].eval(x, t)
    }

    pub fn eval_c(&self, x: &[f64], t: f64) -> Result<f64, EvalError> {
        self.c_fast.eval(x, t)
    }

    /// 1D shorthands.
    pub fn a1(&self, x: f64, t: f64) -> Result<f64, EvalError> {
        self.a_fast[0].eval(&[x], t)
    }

    pub fn b1(&self, x: f64, t: f64) -> Result<f64, EvalError> {
        self.b_fast[0].eval(&[x], t)
    }

    pub fn c1(&self, x: f64, t: f64) -> Result<f64, EvalError> {
        self.c_fast.eval(&[x], t)
    }

    /// True when A does not depend on x or t (used to cache square roots).
    pub fn diffusion_is_constant(&self) -> bool {
        self.a_fast.iter().all(|e| e.constant_value().is_some())
    }

    pub fn field_names(&self) -> Vec<String> {
        let mut v = Vec::new();
        for i in 0..self.d {
            for j in 0..self.d {
                v.push(format!("a{}{}", i + 1, j + 1));
            }
        }
        v
    }
}

/// Variables used by an expression, for dimension checks on V.
pub fn max_dim_used(e: &Expr) -> usize {
    let mut d = 0;
    e.for_each_var(&mut |v| {
        if let Var::X(i) = v {
            d = d.max(i + 1);
        }
    });
    d
}
