//! Scalar expression language used for metric components.
//!
//! The grammar is ordinary infix arithmetic over real literals, the constant
//! `pi`, coordinate names and a fixed set of elementary functions:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?          // right associative
//! primary := number | 'pi' | coord | func '(' expr ')' | '(' expr ')'
//! ```

use std::fmt;

use thiserror::Error;

use crate::hyperdual::Scalar;

/// Elementary functions accepted by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply<T: Scalar>(self, x: T) -> Result<T, EvalError> {
        let v = x.value();
        Ok(match self {
            Func::Sin => x.chain(v.sin(), v.cos(), -v.sin()),
            Func::Cos => x.chain(v.cos(), -v.sin(), -v.cos()),
            Func::Tan => {
                let t = v.tan();
                let sec2 = 1.0 + t * t;
                x.chain(t, sec2, 2.0 * t * sec2)
            }
            Func::Sinh => x.chain(v.sinh(), v.cosh(), v.sinh()),
            Func::Cosh => x.chain(v.cosh(), v.sinh(), v.cosh()),
            Func::Tanh => {
                let t = v.tanh();
                let sech2 = 1.0 - t * t;
                x.chain(t, sech2, -2.0 * t * sech2)
            }
            Func::Exp => {
                let e = v.exp();
                x.chain(e, e, e)
            }
            Func::Log => {
                if v <= 0.0 {
                    return Err(EvalError::LogDomain(v));
                }
                x.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
            }
            Func::Sqrt => {
                if v < 0.0 {
                    return Err(EvalError::SqrtDomain(v));
                }
                let r = v.sqrt();
                x.chain(r, 0.5 / r, -0.25 / (r * v))
            }
        })
    }
}

/// Expression tree. `Coord(k)` refers to the k-th chart coordinate (0-based).
///
/// Literals produced by the parser are always non-negative; a leading minus
/// is a [`Expr::Neg`] node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Coord(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of non-positive value {0}")]
    LogDomain(f64),
    #[error("square root of negative value {0}")]
    SqrtDomain(f64),
    #[error("power with non-positive base {0} and non-integer exponent")]
    PowDomain(f64),
    #[error("non-finite result")]
    NonFinite,
    #[error("coordinate index {0} out of range")]
    BadCoordinate(usize),
}

/// Syntax error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Expr {
    pub fn is_const(&self) -> bool {
        matches!(self, Expr::Const(_))
    }

    /// Depth of the tree; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Coord(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.depth(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Evaluates at `x`. Domain violations are reported, never turned into NaN.
    pub fn eval<T: Scalar>(&self, x: &[T]) -> Result<T, EvalError> {
        let r = self.eval_inner(x)?;
        if r.is_finite() {
            Ok(r)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn eval_inner<T: Scalar>(&self, x: &[T]) -> Result<T, EvalError> {
        Ok(match self {
            Expr::Const(c) => T::from_f64(*c),
            Expr::Coord(k) => *x.get(*k).ok_or(EvalError::BadCoordinate(*k))?,
            Expr::Add(a, b) => a.eval_inner(x)? + b.eval_inner(x)?,
            Expr::Sub(a, b) => a.eval_inner(x)? - b.eval_inner(x)?,
            Expr::Mul(a, b) => a.eval_inner(x)? * b.eval_inner(x)?,
            Expr::Div(a, b) => {
                let num = a.eval_inner(x)?;
                let den = b.eval_inner(x)?;
                if den.value() == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                num / den
            }
            Expr::Pow(a, b) => {
                let base = a.eval_inner(x)?;
                match integer_exponent(b) {
                    Some(n) => {
                        if n < 0 && base.value() == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        base.powi(n)
                    }
                    None => {
                        let bv = base.value();
                        if bv <= 0.0 {
                            return Err(EvalError::PowDomain(bv));
                        }
                        let e = b.eval_inner(x)?;
                        let ln = base.chain(bv.ln(), 1.0 / bv, -1.0 / (bv * bv));
                        let p = ln * e;
                        let ev = p.value().exp();
                        p.chain(ev, ev, ev)
                    }
                }
            }
            Expr::Neg(a) => -a.eval_inner(x)?,
            Expr::Call(f, a) => f.apply(a.eval_inner(x)?)?,
        })
    }

    /// Fully parenthesised rendering; `parse_expr(print(e)) == e`.
    pub fn display<'a>(&'a self, coords: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, coords }
    }
}

/// Constant integral exponents are evaluated with `powi`, which admits
/// negative bases (`sin(x)^2`).
fn integer_exponent(e: &Expr) -> Option<i32> {
    match e {
        Expr::Const(c) if c.fract() == 0.0 && c.abs() <= 64.0 => Some(*c as i32),
        Expr::Neg(inner) => match inner.as_ref() {
            Expr::Const(c) if c.fract() == 0.0 && c.abs() <= 64.0 => Some(-(*c as i32)),
            _ => None,
        },
        _ => None,
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    coords: &'a [String],
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self.expr, self.coords, f)
    }
}

fn write_expr(e: &Expr, coords: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let bin = |f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr| -> fmt::Result {
        write!(f, "(")?;
        write_expr(a, coords, f)?;
        write!(f, " {op} ")?;
        write_expr(b, coords, f)?;
        write!(f, ")")
    };
    match e {
        Expr::Const(c) => write!(f, "{c:?}"),
        Expr::Coord(k) => match coords.get(*k) {
            Some(name) => write!(f, "{name}"),
            None => write!(f, "x{}", k + 1),
        },
        Expr::Add(a, b) => bin(f, a, "+", b),
        Expr::Sub(a, b) => bin(f, a, "-", b),
        Expr::Mul(a, b) => bin(f, a, "*", b),
        Expr::Div(a, b) => bin(f, a, "/", b),
        Expr::Pow(a, b) => bin(f, a, "^", b),
        Expr::Neg(a) => {
            write!(f, "(-")?;
            write_expr(a, coords, f)?;
            write!(f, ")")
        }
        Expr::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(a, coords, f)?;
            write!(f, ")")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    column: usize,
}

fn tokenize(src: &str, line: usize, col0: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = col0 + i;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| ParseError {
                line,
                column,
                message: format!("malformed number `{text}`"),
            })?;
            out.push(Token {
                tok: Tok::Num(v),
                column,
            });
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                column,
            });
        } else if "+-*/^()".contains(c) {
            out.push(Token {
                tok: Tok::Sym(c),
                column,
            });
            i += 1;
        } else {
            return Err(ParseError {
                line,
                column,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    line: usize,
    end_column: usize,
    coords: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn err_here(&self, message: impl Into<String>) -> ParseError {
        let column = match self.toks.get(self.pos) {
            Some(t) => t.column,
            // Dangling input is reported at the last token consumed.
            None => self
                .toks
                .last()
                .map(|t| t.column)
                .unwrap_or(self.end_column),
        };
        ParseError {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_sym('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat_sym('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_sym('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat_sym('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_sym('-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else if self.eat_sym('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat_sym('^') {
            Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)))
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.err_here("unexpected end of expression"));
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat_sym(')') {
                    return Err(self.err_here("expected `)`"));
                }
                Ok(e)
            }
            Tok::Sym(c) => Err(self.err_here(format!("unexpected `{c}`"))),
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.pos += 1;
                    if !self.eat_sym('(') {
                        return Err(self.err_here(format!("expected `(` after `{name}`")));
                    }
                    let arg = self.expr()?;
                    if !self.eat_sym(')') {
                        return Err(self.err_here("expected `)`"));
                    }
                    Ok(Expr::Call(func, Box::new(arg)))
                } else if name == "pi" {
                    self.pos += 1;
                    Ok(Expr::Const(std::f64::consts::PI))
                } else if let Some(k) = self.coords.iter().position(|c| *c == name) {
                    self.pos += 1;
                    Ok(Expr::Coord(k))
                } else {
                    Err(self.err_here(format!("unknown identifier `{name}`")))
                }
            }
        }
    }
}

/// Parses `src` as an expression over the given coordinate names.
pub fn parse_expr(src: &str, coords: &[String]) -> Result<Expr, ParseError> {
    parse_expr_at(src, coords, 1, 1)
}

/// Like [`parse_expr`], reporting positions relative to `line`/`column` of the
/// enclosing source text.
pub fn parse_expr_at(
    src: &str,
    coords: &[String],
    line: usize,
    column: usize,
) -> Result<Expr, ParseError> {
    let toks = tokenize(src, line, column)?;
    let mut p = Parser {
        toks,
        pos: 0,
        line,
        end_column: column + src.chars().count(),
        coords,
    };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return Err(p.err_here("unexpected trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperdual::HyperDual;

    fn names() -> Vec<String> {
        ["x1", "x2", "x3", "x4"].map(String::from).to_vec()
    }

    #[test]
    fn precedence_and_associativity() {
        let c = names();
        let e = parse_expr("1 + 2 * 3 ^ 2 ^ 0.5 - -x1", &c).unwrap();
        let v = e.eval(&[2.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((v - (1.0 + 2.0 * 3f64.powf(2f64.sqrt()) + 2.0)).abs() < 1e-12);
        let e = parse_expr("-x1^2", &c).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0, 0.0, 0.0]).unwrap(), -9.0);
        let e = parse_expr("8 / 4 / 2", &c).unwrap();
        assert_eq!(e.eval(&[0.0; 4]).unwrap(), 1.0);
    }

    #[test]
    fn print_then_parse_is_identity() {
        let c = names();
        let e = parse_expr("sin(x2)^2 * (1 + x1 / 3e-2) - -exp(x3)", &c).unwrap();
        let printed = e.display(&c).to_string();
        assert_eq!(parse_expr(&printed, &c).unwrap(), e);
    }

    #[test]
    fn domain_errors_are_reported() {
        let c = names();
        let zero = [0.0; 4];
        assert_eq!(
            parse_expr("1 / x1", &c).unwrap().eval(&zero),
            Err(EvalError::DivisionByZero)
        );
        assert!(matches!(
            parse_expr("log(x1 - 1)", &c).unwrap().eval(&zero),
            Err(EvalError::LogDomain(_))
        ));
        assert!(matches!(
            parse_expr("sqrt(x1 - 1)", &c).unwrap().eval(&zero),
            Err(EvalError::SqrtDomain(_))
        ));
        assert!(matches!(
            parse_expr("(x1 - 1) ^ 0.5", &c).unwrap().eval(&zero),
            Err(EvalError::PowDomain(_))
        ));
        assert_eq!(
            parse_expr("(x1 - 1) ^ 3", &c).unwrap().eval(&zero),
            Ok(-1.0)
        );
    }

    #[test]
    fn unknown_identifier_rejected() {
        let err = parse_expr("x1 + y", &names()).unwrap_err();
        assert_eq!(err.column, 6);
        assert!(err.message.contains("unknown identifier"));
    }

    #[test]
    fn dangling_operator_points_at_operator() {
        let err = parse_expr_at("1 +", &names(), 3, 11).unwrap_err();
        assert_eq!((err.line, err.column), (3, 13));
    }

    #[test]
    fn hyperdual_evaluation_of_general_power() {
        let c = names();
        let e = parse_expr("x1 ^ x2", &c).unwrap();
        let x = [HyperDual::variable(2.0, 0), HyperDual::variable(3.0, 1), HyperDual::constant(0.0), HyperDual::constant(0.0)];
        let v = e.eval(&x).unwrap();
        assert!((v.re - 8.0).abs() < 1e-12);
        assert!((v.grad[0] - 12.0).abs() < 1e-12);
        assert!((v.grad[1] - 8.0 * 2f64.ln()).abs() < 1e-12);
        // d2/dx1dx2 x1^x2 = x1^(x2-1) (1 + x2 ln x1)
        assert!((v.hess[0][1] - 4.0 * (1.0 + 3.0 * 2f64.ln())).abs() < 1e-12);
    }
}
