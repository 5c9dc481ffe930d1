//! A tiny expression language for registry programs.
//!
//! Values are `u64`. `-` is truncated subtraction; overflow, division by zero
//! and `loop` never converge. Comparisons and `&&`, `||`, `!` yield 0 or 1.
//! Every evaluated node costs one unit of fuel.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Num(u64),
    Var(usize),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Loop,
}

/// Outcome of a fueled evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Eval<T> {
    Converged(T),
    OutOfFuel,
}

impl<T> Eval<T> {
    pub fn converged(self) -> Option<T> {
        match self {
            Eval::Converged(v) => Some(v),
            Eval::OutOfFuel => None,
        }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Eval<U> {
        match self {
            Eval::Converged(v) => Eval::Converged(f(v)),
            Eval::OutOfFuel => Eval::OutOfFuel,
        }
    }
}

/// Fuel shared by a chain of evaluations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fuel(pub u64);

impl Fuel {
    fn burn(&mut self) -> Option<()> {
        self.0 = self.0.checked_sub(1)?;
        Some(())
    }
}

impl Expr {
    pub fn eval(&self, env: &[u64], fuel: &mut Fuel) -> Eval<u64> {
        match self.eval_inner(env, fuel) {
            Some(v) => Eval::Converged(v),
            None => Eval::OutOfFuel,
        }
    }

    fn eval_inner(&self, env: &[u64], fuel: &mut Fuel) -> Option<u64> {
        fuel.burn()?;
        match self {
            Expr::Num(n) => Some(*n),
            Expr::Var(i) => Some(env[*i]),
            Expr::Not(e) => Some((e.eval_inner(env, fuel)? == 0) as u64),
            Expr::If(c, t, e) => {
                if c.eval_inner(env, fuel)? != 0 {
                    t.eval_inner(env, fuel)
                } else {
                    e.eval_inner(env, fuel)
                }
            }
            Expr::Loop => {
                fuel.0 = 0;
                None
            }
            Expr::Bin(BinOp::And, a, b) => {
                if a.eval_inner(env, fuel)? == 0 {
                    return Some(0);
                }
                Some((b.eval_inner(env, fuel)? != 0) as u64)
            }
            Expr::Bin(BinOp::Or, a, b) => {
                if a.eval_inner(env, fuel)? != 0 {
                    return Some(1);
                }
                Some((b.eval_inner(env, fuel)? != 0) as u64)
            }
            Expr::Bin(op, a, b) => {
                let x = a.eval_inner(env, fuel)?;
                let y = b.eval_inner(env, fuel)?;
                match op {
                    BinOp::Add => x.checked_add(y),
                    BinOp::Sub => Some(x.saturating_sub(y)),
                    BinOp::Mul => x.checked_mul(y),
                    BinOp::Div => x.checked_div(y),
                    BinOp::Rem => x.checked_rem(y),
                    BinOp::BitAnd => Some(x & y),
                    BinOp::BitOr => Some(x | y),
                    BinOp::BitXor => Some(x ^ y),
                    BinOp::Shl => u32::try_from(y)
                        .ok()
                        .and_then(|y| x.checked_shl(y))
                        .filter(|v| v >> y.min(63) == x),
                    BinOp::Shr => Some(u32::try_from(y).ok().and_then(|y| x.checked_shr(y)).unwrap_or(0)),
                    BinOp::Eq => Some((x == y) as u64),
                    BinOp::Ne => Some((x != y) as u64),
                    BinOp::Lt => Some((x < y) as u64),
                    BinOp::Le => Some((x <= y) as u64),
                    BinOp::Gt => Some((x > y) as u64),
                    BinOp::Ge => Some((x >= y) as u64),
                    BinOp::And | BinOp::Or => unreachable!("short-circuit handled above"),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprError {
    /// Byte offset into the source.
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (at byte {})", self.message, self.offset)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Num(u64),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
}

const OPERATORS: [&str; 21] = [
    "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+", "-", "*", "/", "%", "&", "|", "^", "<", ">", "!", "(", ")",
];

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = src[start..i].parse().map_err(|_| ExprError {
                offset: start,
                message: "number too large".into(),
            })?;
            out.push((start, Tok::Num(n)));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else {
            let op = OPERATORS
                .iter()
                .find(|op| src[i..].starts_with(**op))
                .ok_or_else(|| ExprError {
                    offset: i,
                    message: format!("unexpected character `{}`", src[i..].chars().next().unwrap()),
                })?;
            let tok = match *op {
                "(" => Tok::LParen,
                ")" => Tok::RParen,
                op => Tok::Op(op),
            };
            out.push((i, tok));
            i += op.len();
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    vars: &'a [&'a str],
    end: usize,
}

const LEVELS: [&[(&str, BinOp)]; 9] = [
    &[("||", BinOp::Or)],
    &[("&&", BinOp::And)],
    &[
        ("==", BinOp::Eq),
        ("!=", BinOp::Ne),
        ("<=", BinOp::Le),
        (">=", BinOp::Ge),
        ("<", BinOp::Lt),
        (">", BinOp::Gt),
    ],
    &[("|", BinOp::BitOr)],
    &[("^", BinOp::BitXor)],
    &[("&", BinOp::BitAnd)],
    &[("<<", BinOp::Shl), (">>", BinOp::Shr)],
    &[("+", BinOp::Add), ("-", BinOp::Sub)],
    &[("*", BinOp::Mul), ("/", BinOp::Div), ("%", BinOp::Rem)],
];

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error(&self, message: impl Into<String>) -> ExprError {
        ExprError {
            offset: self.offset(),
            message: message.into(),
        }
    }

    fn keyword(&mut self, word: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(w)) if w == word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        if self.keyword("if") {
            let c = self.expr()?;
            if !self.keyword("then") {
                return Err(self.error("expected `then`"));
            }
            let t = self.expr()?;
            if !self.keyword("else") {
                return Err(self.error("expected `else`"));
            }
            let e = self.expr()?;
            return Ok(Expr::If(Box::new(c), Box::new(t), Box::new(e)));
        }
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> Result<Expr, ExprError> {
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op(op)) => LEVELS[level].iter().find(|(s, _)| s == op).map(|(_, b)| *b),
                _ => None,
            };
            let Some(op) = op else {
                return Ok(lhs);
            };
            self.pos += 1;
            let rhs = self.binary(level + 1)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if matches!(self.peek(), Some(Tok::Op("!"))) {
            self.pos += 1;
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        let at = self.offset();
        match self.toks.get(self.pos).map(|(_, t)| t.clone()) {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Expr::Num(n))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(Tok::Ident(w)) if w == "loop" => {
                self.pos += 1;
                Ok(Expr::Loop)
            }
            Some(Tok::Ident(w)) => match self.vars.iter().position(|v| *v == w) {
                Some(i) => {
                    self.pos += 1;
                    Ok(Expr::Var(i))
                }
                None => Err(ExprError {
                    offset: at,
                    message: format!("unknown variable `{w}` (expected one of {:?})", self.vars),
                }),
            },
            Some(t) => Err(self.error(format!("unexpected {t:?}"))),
            None => Err(self.error("unexpected end of expression")),
        }
    }
}

/// Parses an expression over the named variables.
pub fn parse_expr(src: &str, vars: &[&str]) -> Result<Expr, ExprError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        vars,
        end: src.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.error("trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(src: &str, n: u64, fuel: u64) -> Eval<u64> {
        parse_expr(src, &["n"]).unwrap().eval(&[n], &mut Fuel(fuel))
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(run("1 + 2 * 3", 0, 100), Eval::Converged(7));
        assert_eq!(run("(1 + 2) * 3", 0, 100), Eval::Converged(9));
        assert_eq!(run("2 - 5", 0, 100), Eval::Converged(0));
        assert_eq!(run("n % 3 == 1 && n > 3", 7, 100), Eval::Converged(1));
        assert_eq!(run("1 << 4 | 1", 0, 100), Eval::Converged(17));
        assert_eq!(run("if n < 5 then n + 1 else n * 2", 9, 100), Eval::Converged(18));
        assert_eq!(run("!0 + !7", 0, 100), Eval::Converged(1));
    }

    #[test]
    fn divergence() {
        assert_eq!(run("loop", 0, 100), Eval::OutOfFuel);
        assert_eq!(run("n / 0", 1, 100), Eval::OutOfFuel);
        assert_eq!(run("18446744073709551615 + n", 1, 100), Eval::OutOfFuel);
        assert_eq!(run("1 << 64", 1, 100), Eval::OutOfFuel);
        assert_eq!(run("3 << 63", 1, 100), Eval::OutOfFuel);
        assert_eq!(run("if n then 1 else loop", 1, 100), Eval::Converged(1));
        assert_eq!(run("if n then 1 else loop", 0, 100), Eval::OutOfFuel);
    }

    #[test]
    fn fuel_is_monotone() {
        let e = parse_expr("if n > 2 then (n * n + 1) % 7 else n + 40", &["n"]).unwrap();
        for n in 0..6 {
            let mut first = None;
            for fuel in 0..30 {
                match e.eval(&[n], &mut Fuel(fuel)) {
                    Eval::Converged(v) => {
                        if let Some(w) = first {
                            assert_eq!(v, w);
                        }
                        first = Some(v);
                    }
                    Eval::OutOfFuel => assert!(first.is_none()),
                }
            }
            assert!(first.is_some());
        }
    }

    #[test]
    fn parse_errors() {
        assert!(parse_expr("n +", &["n"]).is_err());
        assert!(parse_expr("m", &["n"]).is_err());
        assert!(parse_expr("if n then 1", &["n"]).is_err());
        assert!(parse_expr("(n", &["n"]).is_err());
        assert!(parse_expr("n n", &["n"]).is_err());
        assert_eq!(parse_expr("n $ 1", &["n"]).unwrap_err().offset, 2);
    }
}
