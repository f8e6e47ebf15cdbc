//! Symbolic differentiation.
//!
//! `abs`, `min` and `max` are differentiated piecewise; at a kink the result
//! is the one-sided derivative from the right. `sign` differentiates to zero.

use super::ast::{BinOp, Expr, Func, Var};

fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
    Expr::Binary(op, Box::new(l), Box::new(r))
}

fn call(f: Func, args: Vec<Expr>) -> Expr {
    Expr::Call(f, args)
}

pub(crate) fn add(l: Expr, r: Expr) -> Expr {
    match (l.as_num(), r.as_num()) {
        (Some(a), Some(b)) => Expr::Num(a + b),
        (Some(a), _) if a == 0.0 => r,
        (_, Some(b)) if b == 0.0 => l,
        _ => match r {
            Expr::Neg(inner) => sub(l, *inner),
            r => bin(BinOp::Add, l, r),
        },
    }
}

pub(crate) fn sub(l: Expr, r: Expr) -> Expr {
    match (l.as_num(), r.as_num()) {
        (Some(a), Some(b)) => Expr::Num(a - b),
        (Some(a), _) if a == 0.0 => neg(r),
        (_, Some(b)) if b == 0.0 => l,
        _ => bin(BinOp::Sub, l, r),
    }
}

pub(crate) fn neg(u: Expr) -> Expr {
    match u {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        u => Expr::Neg(Box::new(u)),
    }
}

pub(crate) fn mul(l: Expr, r: Expr) -> Expr {
    match (l.as_num(), r.as_num()) {
        (Some(a), Some(b)) => Expr::Num(a * b),
        (Some(a), _) | (_, Some(a)) if a == 0.0 => Expr::Num(0.0),
        (Some(a), _) if a == 1.0 => r,
        (_, Some(b)) if b == 1.0 => l,
        (Some(a), _) if a == -1.0 => neg(r),
        (_, Some(b)) if b == -1.0 => neg(l),
        _ => bin(BinOp::Mul, l, r),
    }
}

pub(crate) fn div(l: Expr, r: Expr) -> Expr {
    match (l.as_num(), r.as_num()) {
        (Some(a), _) if a == 0.0 => Expr::Num(0.0),
        (_, Some(b)) if b == 1.0 => l,
        _ => bin(BinOp::Div, l, r),
    }
}

pub(crate) fn pow(base: Expr, exp: Expr) -> Expr {
    match exp.as_num() {
        Some(e) if e == 1.0 => base,
        Some(e) if e == 0.0 => Expr::Num(1.0),
        _ => bin(BinOp::Pow, base, exp),
    }
}

impl Expr {
    /// Partial derivative with respect to `var`.
    pub fn differentiate(&self, var: Var) -> Expr {
        match self {
            Expr::Num(_) | Expr::Pi => Expr::Num(0.0),
            Expr::Var(v) => Expr::Num(if *v == var { 1.0 } else { 0.0 }),
            Expr::Neg(u) => neg(u.differentiate(var)),
            Expr::Binary(op, l, r) => {
                let dl = l.differentiate(var);
                let dr = r.differentiate(var);
                let (l, r) = ((**l).clone(), (**r).clone());
                match op {
                    BinOp::Add => add(dl, dr),
                    BinOp::Sub => sub(dl, dr),
                    BinOp::Mul => add(mul(dl, r.clone()), mul(l, dr)),
                    BinOp::Div => {
                        if !r.depends_on(var) {
                            div(dl, r)
                        } else {
                            div(sub(mul(dl, r.clone()), mul(l, dr)), pow(r, Expr::Num(2.0)))
                        }
                    }
                    BinOp::Pow => power_rule(l, r, dl, dr, var),
                }
            }
            Expr::Call(f, args) => {
                let u = args[0].clone();
                let du = args[0].differentiate(var);
                match f {
                    Func::Sin => mul(call(Func::Cos, vec![u]), du),
                    Func::Cos => neg(mul(call(Func::Sin, vec![u]), du)),
                    Func::Tan => div(du, pow(call(Func::Cos, vec![u]), Expr::Num(2.0))),
                    Func::Exp => mul(self.clone(), du),
                    Func::Log => div(du, u),
                    Func::Sqrt => div(du, mul(Expr::Num(2.0), self.clone())),
                    Func::Abs => {
                        if du.as_num() == Some(0.0) {
                            Expr::Num(0.0)
                        } else {
                            mul(call(Func::KinkSign, vec![u, du.clone()]), du)
                        }
                    }
                    Func::Sign | Func::KinkSign => Expr::Num(0.0),
                    Func::Min | Func::Max => {
                        // min(u,v) = (u + v - |u - v|)/2, max(u,v) = (u + v + |u - v|)/2
                        let v = args[1].clone();
                        let dv = args[1].differentiate(var);
                        let gap = sub(u, v);
                        let dgap = sub(du.clone(), dv.clone());
                        let dabs = if dgap.as_num() == Some(0.0) {
                            Expr::Num(0.0)
                        } else {
                            mul(call(Func::KinkSign, vec![gap, dgap.clone()]), dgap)
                        };
                        let sum = add(du, dv);
                        let total = if *f == Func::Min { sub(sum, dabs) } else { add(sum, dabs) };
                        div(total, Expr::Num(2.0))
                    }
                    Func::Pow => {
                        let v = args[1].clone();
                        let dv = args[1].differentiate(var);
                        power_rule(u, v, du, dv, var)
                    }
                }
            }
        }
    }
}

fn power_rule(base: Expr, exp: Expr, dbase: Expr, dexp: Expr, var: Var) -> Expr {
    if !exp.depends_on(var) {
        // d(u^c) = c u^(c-1) u'
        let lowered = match exp.as_num() {
            Some(c) => Expr::Num(c - 1.0),
            None => sub(exp.clone(), Expr::Num(1.0)),
        };
        return mul(mul(exp, pow(base, lowered)), dbase);
    }
    let whole = pow(base.clone(), exp.clone());
    if !base.depends_on(var) {
        return mul(mul(whole, call(Func::Log, vec![base])), dexp);
    }
    // d(u^v) = u^v (v' ln u + v u'/u)
    let inner = add(
        mul(dexp, call(Func::Log, vec![base.clone()])),
        div(mul(exp, dbase), base),
    );
    mul(whole, inner)
}
