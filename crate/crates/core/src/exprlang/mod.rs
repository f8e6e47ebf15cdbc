//! The scalar expression language used for coefficients, Lyapunov
//! functions and initial densities.
//!
//! Variables are `x` (alias of `x1`), `x1..xd` and `t`; the constant `pi`;
//! operators `+ - * / ^` with `^` right-associative and binding tighter than
//! unary minus; functions `sin cos tan exp log sqrt abs sign min max pow`.

mod ast;
mod compile;
mod diff;
mod eval;
mod parse;

pub use ast::{BinOp, Expr, Func, Var};
pub use compile::Compiled;
pub use eval::{sign, Env, EvalError};
pub use parse::{parse, ParseError, MAX_DEPTH};

pub(crate) use diff::{add, mul};
