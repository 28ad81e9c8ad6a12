//! Arithmetic expressions over point coordinates, used by `custom` models.
//!
//! Grammar (usual precedence, `^` right associative):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'pi' | x<k> | func '(' expr ')' | '(' expr ')'
//! func  := sin | cos | tan | exp | ln | sqrt | abs
//! ```

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Expr {
    pub fn eval(&self, p: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => p[*i],
            Expr::Neg(a) => -a.eval(p),
            Expr::Add(a, b) => a.eval(p) + b.eval(p),
            Expr::Sub(a, b) => a.eval(p) - b.eval(p),
            Expr::Mul(a, b) => a.eval(p) * b.eval(p),
            Expr::Div(a, b) => a.eval(p) / b.eval(p),
            Expr::Pow(a, b) => libm::pow(a.eval(p), b.eval(p)),
            Expr::Call(f, a) => {
                let x = a.eval(p);
                match f {
                    Func::Sin => libm::sin(x),
                    Func::Cos => libm::cos(x),
                    Func::Tan => libm::tan(x),
                    Func::Exp => libm::exp(x),
                    Func::Ln => libm::log(x),
                    Func::Sqrt => libm::sqrt(x),
                    Func::Abs => libm::fabs(x),
                }
            }
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Num(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Call(_, a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| Error::Parse(format!("bad number `{text}` in `{src}`")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character `{c}` in `{src}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn err(&self, what: &str) -> Error {
        Error::Parse(format!("{what} at token {} in `{}`", self.pos, self.src))
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.peek_op() == Some('+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self.tokens.get(self.pos).cloned().ok_or_else(|| self.err("unexpected end"))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Expr::Num(v)),
            Token::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Token::Op(_) => Err(self.err("unexpected operator")),
            Token::Ident(name) => {
                if name == "pi" {
                    return Ok(Expr::Num(core::f64::consts::PI));
                }
                if let Some(rest) = name.strip_prefix('x') {
                    if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
                        return Ok(Expr::Var(rest.parse().map_err(|_| self.err("bad variable"))?));
                    }
                }
                let func = match name.as_str() {
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "tan" => Func::Tan,
                    "exp" => Func::Exp,
                    "ln" | "log" => Func::Ln,
                    "sqrt" => Func::Sqrt,
                    "abs" => Func::Abs,
                    _ => return Err(Error::Parse(format!("unknown identifier `{name}` in `{}`", self.src))),
                };
                self.expect('(')?;
                let arg = self.expr()?;
                self.expect(')')?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{c}`")))
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0, src };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

/// Parses a parenthesized tuple `(e1, e2, …)`.
pub fn parse_tuple(src: &str) -> Result<Vec<Expr>> {
    let s = src.trim();
    let inner = s
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::Parse(format!("expected a parenthesized tuple, got `{s}`")))?;
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in inner.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&inner[start..i]);
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(Error::Parse(format!("unbalanced parentheses in `{s}`")));
        }
    }
    parts.push(&inner[start..]);
    parts.into_iter().map(parse_expr).collect()
}

/// Parsed `V1=(…);V2=(…);…[;V=(…)]` specification.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    pub fields: Vec<Vec<Expr>>,
    pub drift: Option<Vec<Expr>>,
}

pub fn parse_field_spec(src: &str) -> Result<FieldSpec> {
    let mut indexed: Vec<(usize, Vec<Expr>)> = Vec::new();
    let mut drift = None;
    for item in src.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (lhs, rhs) =
            item.split_once('=').ok_or_else(|| Error::Parse(format!("expected `Vk=(…)`, got `{item}`")))?;
        let lhs = lhs.trim();
        let tuple = parse_tuple(rhs)?;
        if lhs == "V" {
            drift = Some(tuple);
            continue;
        }
        let idx: usize = lhs
            .strip_prefix('V')
            .and_then(|k| k.parse().ok())
            .filter(|&k| k >= 1)
            .ok_or_else(|| Error::Parse(format!("bad field name `{lhs}`")))?;
        indexed.push((idx, tuple));
    }
    indexed.sort_by_key(|(k, _)| *k);
    for (pos, (k, _)) in indexed.iter().enumerate() {
        if *k != pos + 1 {
            return Err(Error::Parse("fields must be named V1, V2, … without gaps".to_string()));
        }
    }
    if indexed.is_empty() {
        return Err(Error::Parse("no fields given".to_string()));
    }
    Ok(FieldSpec { fields: indexed.into_iter().map(|(_, t)| t).collect(), drift })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_functions() {
        let e = parse_expr("1 + 2*x0^2 - sin(pi/2) / 2").unwrap();
        assert!((e.eval(&[3.0]) - 18.5).abs() < 1e-14);
        let e = parse_expr("-x1^2").unwrap();
        assert_eq!(e.eval(&[0.0, 3.0]), -9.0);
        let e = parse_expr("2^3^2").unwrap();
        assert_eq!(e.eval(&[]), 512.0);
        let e = parse_expr("1.5e-1*x0").unwrap();
        assert!((e.eval(&[2.0]) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn tuple_with_nested_commas_in_parens() {
        let t = parse_tuple("(sin(x0), (1+x1)*2)").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[1].eval(&[0.0, 1.0]), 4.0);
    }

    #[test]
    fn field_spec_with_drift() {
        let s = parse_field_spec("V1=(1,0); V2=(0,x0); V=(0.5, 0)").unwrap();
        assert_eq!(s.fields.len(), 2);
        assert!(s.drift.is_some());
    }

    #[test]
    fn parse_errors() {
        assert!(parse_expr("1 +").is_err());
        assert!(parse_expr("foo(1)").is_err());
        assert!(parse_expr("(1").is_err());
        assert!(parse_expr("1 $ 2").is_err());
        assert!(parse_field_spec("V1=(1,0);V3=(0,1)").is_err());
        assert!(parse_field_spec("W=(1)").is_err());
        assert!(parse_tuple("1,2").is_err());
    }
}
