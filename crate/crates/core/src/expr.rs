//! Scalar surface expressions `f(x, y)`.
//!
//! Grammar (lowest to highest binding):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'x' | 'y' | 'pi' | func '(' args ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus on its left,
//! so `-x^2` is `-(x^2)` while `2^-3` is `2^(-3)`.
//!
//! Functions: `sqrt exp sin cos abs` take one argument, `max min` take two.
//! Mathematica-style input maps directly: `Sqrt[...]` is `sqrt(...)`,
//! `Exp[...]` is `exp(...)`, `Max[a, b]` is `max(a, b)`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{function}` takes {expected} argument(s), found {found} (byte {offset})")]
    Arity {
        function: &'static str,
        expected: usize,
        found: usize,
        offset: usize,
    },
    #[error("non-finite value at x = {x}, y = {y}")]
    Domain { x: f64, y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => PREC_ADD,
            BinOp::Mul | BinOp::Div => PREC_MUL,
            BinOp::Pow => PREC_POW,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Sin,
    Cos,
    Abs,
    Max,
    Min,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Sqrt,
        Func::Exp,
        Func::Sin,
        Func::Cos,
        Func::Abs,
        Func::Max,
        Func::Min,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Max => "max",
            Func::Min => "min",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Max | Func::Min => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Expression tree. Immutable once parsed; `Send + Sync`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Num(f64),
    Var(Var),
    Pi,
    Neg(Box<Expression>),
    Binary {
        op: BinOp,
        lhs: Box<Expression>,
        rhs: Box<Expression>,
    },
    Call {
        func: Func,
        args: Vec<Expression>,
    },
}

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Expression {
    /// Parse infix source text.
    pub fn parse(source: &str) -> Result<Expression, ExprError> {
        parse_expression(source)
    }

    /// Evaluate with IEEE semantics. Domain problems (`sqrt(-1)`, `1/0`)
    /// come back as NaN or infinity; check with `f64::is_finite`.
    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        match self {
            Expression::Num(v) => *v,
            Expression::Var(Var::X) => x,
            Expression::Var(Var::Y) => y,
            Expression::Pi => std::f64::consts::PI,
            Expression::Neg(e) => -e.evaluate(x, y),
            Expression::Binary { op, lhs, rhs } => {
                let a = lhs.evaluate(x, y);
                let b = rhs.evaluate(x, y);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => pow(a, b),
                }
            }
            Expression::Call { func, args } => {
                let a = args[0].evaluate(x, y);
                match func {
                    Func::Sqrt => a.sqrt(),
                    Func::Exp => a.exp(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Abs => a.abs(),
                    Func::Max => nan_max(a, args[1].evaluate(x, y)),
                    Func::Min => nan_min(a, args[1].evaluate(x, y)),
                }
            }
        }
    }

    /// Like [`evaluate`](Self::evaluate) but rejects non-finite results.
    pub fn evaluate_strict(&self, x: f64, y: f64) -> Result<f64, ExprError> {
        let v = self.evaluate(x, y);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::Domain { x, y })
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expression::Num(_) | Expression::Var(_) | Expression::Pi | Expression::Call { .. } => {
                PREC_ATOM
            }
            Expression::Neg(_) => PREC_NEG,
            Expression::Binary { op, .. } => op.precedence(),
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let wrap = self.precedence() < min_prec;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            Expression::Num(v) => write!(f, "{v:?}")?,
            Expression::Var(Var::X) => f.write_str("x")?,
            Expression::Var(Var::Y) => f.write_str("y")?,
            Expression::Pi => f.write_str("pi")?,
            Expression::Neg(e) => {
                f.write_str("-")?;
                e.write_at(f, PREC_NEG)?;
            }
            Expression::Binary { op, lhs, rhs } => {
                let (l, r) = match op {
                    BinOp::Add | BinOp::Sub => (PREC_ADD, PREC_MUL),
                    BinOp::Mul | BinOp::Div => (PREC_MUL, PREC_NEG),
                    BinOp::Pow => (PREC_ATOM, PREC_NEG),
                };
                lhs.write_at(f, l)?;
                if *op == BinOp::Pow {
                    f.write_str("^")?;
                } else {
                    write!(f, " {} ", op.symbol())?;
                }
                rhs.write_at(f, r)?;
            }
            Expression::Call { func, args } => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    a.write_at(f, 0)?;
                }
                f.write_str(")")?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

// Integer exponents go through powi so that (-2)^2 is 4 rather than NaN.
fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

// f64::max ignores NaN; a surface sample must stay flagged instead.
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn nan_min(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.min(b)
    }
}

/// Pretty-prints with the minimum parentheses needed to re-parse to the same tree.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

impl std::str::FromStr for Expression {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expression(s)
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

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn peek_byte(&self, at: usize) -> Option<u8> {
        self.src.as_bytes().get(at).copied()
    }

    /// Returns the token and its starting byte offset.
    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        while let Some(b) = self.peek_byte(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
        let start = self.pos;
        let Some(b) = self.peek_byte(start) else {
            return Ok((Tok::End, start));
        };
        let tok = match b {
            b'0'..=b'9' | b'.' => return self.number(start),
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = start;
                while matches!(self.peek_byte(end), Some(c) if c.is_ascii_alphanumeric() || c == b'_')
                {
                    end += 1;
                }
                self.pos = end;
                return Ok((Tok::Ident(self.src[start..end].to_string()), start));
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(b as char),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        self.pos += 1;
        Ok((tok, start))
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), ExprError> {
        let mut end = start;
        let digits = |lx: &Self, mut i: usize| {
            while matches!(lx.peek_byte(i), Some(b'0'..=b'9')) {
                i += 1;
            }
            i
        };
        end = digits(self, end);
        if self.peek_byte(end) == Some(b'.') {
            end = digits(self, end + 1);
        }
        if matches!(self.peek_byte(end), Some(b'e' | b'E')) {
            let mut exp = end + 1;
            if matches!(self.peek_byte(exp), Some(b'+' | b'-')) {
                exp += 1;
            }
            if matches!(self.peek_byte(exp), Some(b'0'..=b'9')) {
                end = digits(self, exp);
            }
        }
        let text = &self.src[start..end];
        let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        self.pos = end;
        Ok((Tok::Num(value), start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
}

/// Parse expression text into an [`Expression`].
pub fn parse_expression(source: &str) -> Result<Expression, ExprError> {
    if source.trim().is_empty() {
        return Err(ExprError::Syntax {
            offset: source.len(),
            message: "empty expression".into(),
        });
    }
    let mut lexer = Lexer::new(source);
    let (tok, at) = lexer.next()?;
    let mut p = Parser { lexer, tok, at };
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.unexpected("end of input"));
    }
    Ok(e)
}

impl Parser<'_> {
    fn bump(&mut self) -> Result<(), ExprError> {
        let (tok, at) = self.lexer.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn unexpected(&self, wanted: &str) -> ExprError {
        let found = match &self.tok {
            Tok::End => "end of input".to_string(),
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
        };
        ExprError::Syntax {
            offset: self.at,
            message: format!("expected {wanted}, found {found}"),
        }
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<(), ExprError> {
        if self.tok == tok {
            self.bump()
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn expr(&mut self) -> Result<Expression, ExprError> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = self.tok {
            self.bump()?;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expression::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expression, ExprError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = self.tok {
            self.bump()?;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expression::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expression, ExprError> {
        if self.tok == Tok::Op('-') {
            self.bump()?;
            return Ok(Expression::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expression, ExprError> {
        let base = self.atom()?;
        if self.tok == Tok::Op('^') {
            self.bump()?;
            let exp = self.unary()?;
            return Ok(Expression::Binary {
                op: BinOp::Pow,
                lhs: Box::new(base),
                rhs: Box::new(exp),
            });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expression, ExprError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expression::Num(v))
            }
            Tok::LParen => {
                self.bump()?;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let at = self.at;
                self.bump()?;
                match name.as_str() {
                    "x" => return Ok(Expression::Var(Var::X)),
                    "y" => return Ok(Expression::Var(Var::Y)),
                    "pi" => return Ok(Expression::Pi),
                    _ => {}
                }
                let func = Func::from_name(&name)
                    .ok_or(ExprError::UnknownIdentifier { name, offset: at })?;
                self.expect(Tok::LParen, "`(` after function name")?;
                let mut args = Vec::new();
                if self.tok != Tok::RParen {
                    loop {
                        args.push(self.expr()?);
                        if self.tok == Tok::Comma {
                            self.bump()?;
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen, "`,` or `)`")?;
                if args.len() != func.arity() {
                    return Err(ExprError::Arity {
                        function: func.name(),
                        expected: func.arity(),
                        found: args.len(),
                        offset: at,
                    });
                }
                Ok(Expression::Call { func, args })
            }
            _ => Err(self.unexpected("a number, variable, function or `(`")),
        }
    }
}
