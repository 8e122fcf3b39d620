use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use super::{Monomial, QPoly};
use crate::rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("unexpected character `{ch}` at column {col}")]
    UnexpectedChar { ch: char, col: usize },
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected token `{token}` at column {col}")]
    UnexpectedToken { token: String, col: usize },
    #[error("unknown variable `{name}` at column {col}")]
    UnknownVariable { name: String, col: usize },
    #[error("exponent at column {col} must be a small non-negative integer")]
    BadExponent { col: usize },
    #[error("division by a non-constant or zero expression at column {col}")]
    BadDivision { col: usize },
    #[error("invalid number `{text}` at column {col}")]
    BadNumber { text: String, col: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Op(char),
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            out.push((Tok::Num(chars[start..i].iter().collect()), col));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), col));
            i += 1;
        } else {
            return Err(ParseError::UnexpectedChar { ch: c, col });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    names: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|(_, c)| *c).unwrap_or(0)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<QPoly, ParseError> {
        let n = self.names.len();
        let mut acc = QPoly::zero(n);
        let mut sign = if self.eat('-') {
            -1
        } else {
            self.eat('+');
            1
        };
        loop {
            let t = self.term()?;
            acc = if sign < 0 { &acc - &t } else { &acc + &t };
            if self.eat('+') {
                sign = 1;
            } else if self.eat('-') {
                sign = -1;
            } else {
                return Ok(acc);
            }
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Num(_)) | Some(Tok::Ident(_)) | Some(Tok::Op('('))
        )
    }

    fn term(&mut self) -> Result<QPoly, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat('*') {
                let f = self.factor()?;
                acc = &acc * &f;
            } else if self.peek() == Some(&Tok::Op('/')) {
                let col = self.col();
                self.pos += 1;
                let f = self.factor()?;
                let constant = f.total_degree() == Some(0);
                if !constant {
                    return Err(ParseError::BadDivision { col });
                }
                let c = f.coeff_of(&Monomial::one(f.nvars()));
                if c.is_zero() {
                    return Err(ParseError::BadDivision { col });
                }
                acc = acc.scale(&(rational::int(1) / c));
            } else if self.starts_atom() {
                let f = self.factor()?;
                acc = &acc * &f;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<QPoly, ParseError> {
        if self.eat('-') {
            let f = self.factor()?;
            return Ok(-&f);
        }
        let base = self.atom()?;
        if self.eat('^') {
            let col = self.col();
            let e = match self.toks.get(self.pos) {
                Some((Tok::Num(s), _)) => s.parse::<u32>().ok(),
                Some((Tok::Op('('), _)) => {
                    self.pos += 1;
                    let inner = self.expr()?;
                    if !self.eat(')') {
                        return Err(ParseError::BadExponent { col });
                    }
                    self.pos -= 1;
                    let c = inner.coeff_of(&Monomial::one(inner.nvars()));
                    if inner.total_degree().unwrap_or(0) == 0 && rational::is_integer(&c) {
                        c.to_integer().to_u32()
                    } else {
                        None
                    }
                }
                _ => None,
            };
            let e = e.filter(|&e| e < 1000).ok_or(ParseError::BadExponent { col })?;
            self.pos += 1;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<QPoly, ParseError> {
        let n = self.names.len();
        let Some((tok, col)) = self.toks.get(self.pos).cloned() else {
            return Err(ParseError::UnexpectedEnd);
        };
        self.pos += 1;
        match tok {
            Tok::Num(s) => {
                let v = rational::parse(&s).map_err(|_| ParseError::BadNumber { text: s, col })?;
                Ok(QPoly::constant(n, v))
            }
            Tok::Ident(name) => match self.names.iter().position(|&v| v == name) {
                Some(i) => Ok(QPoly::var(n, i)),
                None => Err(ParseError::UnknownVariable { name, col }),
            },
            Tok::Op('(') => {
                let inner = self.expr()?;
                if self.eat(')') {
                    Ok(inner)
                } else {
                    match self.toks.get(self.pos) {
                        Some((t, c)) => Err(ParseError::UnexpectedToken {
                            token: format!("{t:?}"),
                            col: *c,
                        }),
                        None => Err(ParseError::UnexpectedEnd),
                    }
                }
            }
            Tok::Op(c) => Err(ParseError::UnexpectedToken {
                token: c.to_string(),
                col,
            }),
        }
    }
}

pub(super) fn parse_poly(text: &str, names: &[&str]) -> Result<QPoly, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, names };
    let out = p.expr()?;
    if let Some((t, col)) = p.toks.get(p.pos) {
        let token = match t {
            Tok::Num(s) | Tok::Ident(s) => s.clone(),
            Tok::Op(c) => c.to_string(),
        };
        return Err(ParseError::UnexpectedToken { token, col: *col });
    }
    Ok(out)
}
