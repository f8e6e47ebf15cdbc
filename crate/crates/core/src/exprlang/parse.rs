//! Recursive-descent parser for the coefficient expression language.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | ident | ident '(' args ')' | '(' expr ')'
//! ```

use thiserror::Error;

use super::ast::{BinOp, Expr, Func, Var};

/// Trees deeper than this are rejected so that the recursive evaluator and
/// differentiator cannot exhaust the stack.
pub const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{name}` at byte {offset} takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("expression nested deeper than {MAX_DEPTH} levels at byte {offset}")]
    TooDeep { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownFunction { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Arity { offset, .. }
            | ParseError::TooDeep { offset } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push((Tok::Op(c as char), i));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            b',' => {
                out.push((Tok::Comma, i));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let mantissa = &src[start..i];
                if mantissa == "." {
                    return Err(ParseError::Syntax {
                        offset: start,
                        expected: "digits".into(),
                    });
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    let digits = j;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    if j == digits {
                        return Err(ParseError::Syntax {
                            offset: j,
                            expected: "exponent digits".into(),
                        });
                    }
                    i = j;
                }
                let value: f64 = src[start..i].parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    expected: "a number".into(),
                })?;
                if !value.is_finite() {
                    return Err(ParseError::Syntax {
                        offset: start,
                        expected: "a finite number".into(),
                    });
                }
                out.push((Tok::Num(value), start));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                return Err(ParseError::Syntax {
                    offset: i,
                    expected: "a number, identifier, operator or parenthesis".into(),
                })
            }
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

/// Maps `x`, `x1`, `x2`, ... and `t` to variables. `x` is an alias for `x1`.
fn variable(name: &str) -> Option<Var> {
    if name == "t" {
        return Some(Var::T);
    }
    if name == "x" {
        return Some(Var::X(0));
    }
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let index: usize = digits.parse().ok()?;
    Some(Var::X(index - 1))
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    depth: usize,
}

type Node = (Expr, usize);

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expected(&self, what: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            expected: format!("{what}, found {}", self.peek().describe()),
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError::TooDeep {
                offset: self.offset(),
            });
        }
        Ok(())
    }

    fn node(&self, e: Expr, depth: usize, at: usize) -> Result<Node, ParseError> {
        if depth > MAX_DEPTH {
            return Err(ParseError::TooDeep { offset: at });
        }
        Ok((e, depth))
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        self.enter()?;
        let (mut lhs, mut d) = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => break,
            };
            let at = self.offset();
            self.bump();
            let (rhs, rd) = self.term()?;
            let (e, nd) = self.node(Expr::Binary(op, Box::new(lhs), Box::new(rhs)), 1 + d.max(rd), at)?;
            lhs = e;
            d = nd;
        }
        self.depth -= 1;
        Ok((lhs, d))
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let (mut lhs, mut d) = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => break,
            };
            let at = self.offset();
            self.bump();
            let (rhs, rd) = self.unary()?;
            let (e, nd) = self.node(Expr::Binary(op, Box::new(lhs), Box::new(rhs)), 1 + d.max(rd), at)?;
            lhs = e;
            d = nd;
        }
        Ok((lhs, d))
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if matches!(self.peek(), Tok::Op('-')) {
            let at = self.offset();
            self.bump();
            self.enter()?;
            let (inner, d) = self.unary()?;
            self.depth -= 1;
            return self.node(Expr::Neg(Box::new(inner)), d + 1, at);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let (base, bd) = self.atom()?;
        if matches!(self.peek(), Tok::Op('^')) {
            let at = self.offset();
            self.bump();
            self.enter()?;
            let (exp, ed) = self.unary()?;
            self.depth -= 1;
            return self.node(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)), 1 + bd.max(ed), at);
        }
        Ok((base, bd))
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(v) => Ok((Expr::Num(v), 1)),
            Tok::LParen => {
                let inner = self.expr()?;
                match self.peek() {
                    Tok::RParen => {
                        self.bump();
                        Ok(inner)
                    }
                    _ => Err(self.expected("`)`")),
                }
            }
            Tok::Ident(name) => {
                if matches!(self.peek(), Tok::LParen) {
                    let func = Func::from_name(&name).ok_or_else(|| ParseError::UnknownFunction {
                        name: name.clone(),
                        offset: at,
                    })?;
                    self.bump();
                    self.call(func, name, at)
                } else if name == "pi" {
                    Ok((Expr::Pi, 1))
                } else if let Some(v) = variable(&name) {
                    Ok((Expr::Var(v), 1))
                } else if Func::from_name(&name).is_some() {
                    Err(self.expected(&format!("`(` after function `{name}`")))
                } else {
                    Err(ParseError::UnknownIdentifier { name, offset: at })
                }
            }
            other => {
                Err(ParseError::Syntax {
                    offset: at,
                    expected: format!("an expression, found {}", other.describe()),
                })
            }
        }
    }

    fn call(&mut self, func: Func, name: String, at: usize) -> Result<Node, ParseError> {
        self.enter()?;
        let mut args = Vec::new();
        let mut depth = 0;
        if !matches!(self.peek(), Tok::RParen) {
            loop {
                let (a, d) = self.expr()?;
                depth = depth.max(d);
                args.push(a);
                match self.peek() {
                    Tok::Comma => {
                        self.bump();
                    }
                    Tok::RParen => break,
                    _ => return Err(self.expected("`,` or `)`")),
                }
            }
        }
        self.bump();
        self.depth -= 1;
        if args.len() != func.arity() {
            return Err(ParseError::Arity {
                name,
                offset: at,
                expected: func.arity(),
                found: args.len(),
            });
        }
        self.node(Expr::Call(func, args), depth + 1, at)
    }
}

/// Parse an expression string.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, depth: 0 };
    let (e, _) = p.expr()?;
    if !matches!(p.peek(), Tok::End) {
        return Err(p.expected("an operator or end of input"));
    }
    Ok(e)
}
