//! Flat postfix form of an [`Expr`] for hot loops (Monte Carlo steps,
//! dense shell sampling). Results are bit-identical to [`Expr::eval`]; on any
//! failure the tree walker is re-run to produce the detailed error.

use super::ast::{BinOp, Expr, Func, Var};
use super::eval::{apply_binary, apply_func2, apply_unary, Env, EvalError};

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    X(usize),
    T,
    Neg,
    Bin(BinOp),
    Unary(Func),
    Func2(Func),
}

const INLINE_STACK: usize = 32;

#[derive(Debug, Clone)]
pub struct Compiled {
    ops: Vec<Op>,
    max_stack: usize,
    constant: Option<f64>,
    tree: Expr,
}

impl Compiled {
    pub fn new(expr: &Expr) -> Self {
        let mut ops = Vec::with_capacity(expr.node_count());
        emit(expr, &mut ops);
        let mut depth = 0usize;
        let mut max_stack = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::X(_) | Op::T => depth += 1,
                Op::Neg | Op::Unary(_) => {}
                Op::Bin(_) | Op::Func2(_) => depth -= 1,
            }
            max_stack = max_stack.max(depth);
        }
        let constant = if expr.is_constant() {
            expr.eval(&Env::new(&[], 0.0)).ok()
        } else {
            None
        };
        Compiled {
            ops,
            max_stack,
            constant,
            tree: expr.clone(),
        }
    }

    pub fn expr(&self) -> &Expr {
        &self.tree
    }

    /// Value if the expression has no free variables and evaluates cleanly.
    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    #[inline]
    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64, EvalError> {
        if let Some(c) = self.constant {
            return Ok(c);
        }
        let fast = if self.max_stack <= INLINE_STACK {
            let mut stack = [0.0f64; INLINE_STACK];
            self.run(&mut stack, x, t)
        } else {
            let mut stack = vec![0.0f64; self.max_stack];
            self.run(&mut stack, x, t)
        };
        match fast {
            Some(v) => Ok(v),
            None => self.tree.eval(&Env::new(x, t)),
        }
    }

    #[inline]
    fn run(&self, stack: &mut [f64], x: &[f64], t: f64) -> Option<f64> {
        let mut sp = 0usize;
        for op in &self.ops {
            match *op {
                Op::Const(v) => {
                    stack[sp] = v;
                    sp += 1;
                }
                Op::X(i) => {
                    stack[sp] = *x.get(i)?;
                    sp += 1;
                }
                Op::T => {
                    stack[sp] = t;
                    sp += 1;
                }
                Op::Neg => stack[sp - 1] = -stack[sp - 1],
                Op::Bin(b) => {
                    sp -= 1;
                    stack[sp - 1] = apply_binary(b, stack[sp - 1], stack[sp]).ok()?;
                }
                Op::Unary(f) => stack[sp - 1] = apply_unary(f, stack[sp - 1]).ok()?,
                Op::Func2(f) => {
                    sp -= 1;
                    stack[sp - 1] = apply_func2(f, stack[sp - 1], stack[sp]).ok()?;
                }
            }
        }
        Some(stack[0])
    }
}

fn emit(e: &Expr, ops: &mut Vec<Op>) {
    match e {
        Expr::Num(v) => ops.push(Op::Const(*v)),
        Expr::Pi => ops.push(Op::Const(std::f64::consts::PI)),
        Expr::Var(Var::X(i)) => ops.push(Op::X(*i)),
        Expr::Var(Var::T) => ops.push(Op::T),
        Expr::Neg(u) => {
            emit(u, ops);
            ops.push(Op::Neg);
        }
        Expr::Binary(op, l, r) => {
            emit(l, ops);
            emit(r, ops);
            ops.push(Op::Bin(*op));
        }
        Expr::Call(f, args) => {
            for a in args {
                emit(a, ops);
            }
            if f.arity() == 1 {
                ops.push(Op::Unary(*f));
            } else {
                ops.push(Op::Func2(*f));
            }
        }
    }
}
