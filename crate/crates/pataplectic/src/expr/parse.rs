use super::{Expr, Func, Rational, Sym};
use num_bigint::BigInt;
use num_traits::Zero;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at column {}: {}", self.pos + 1, self.msg)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && i + 1 < b.len() && b[i + 1].is_ascii_digit()) {
            let start = i;
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    while j < b.len() && b[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let r = parse_number(text).ok_or(ParseError {
                pos: start,
                msg: format!("malformed number '{text}'"),
            })?;
            out.push((start, Tok::Num(r)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^(),".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(ParseError {
                pos: i,
                msg: format!("unexpected character '{c}'"),
            });
        }
    }
    Ok(out)
}

/// Exact decimal literal, with optional exponent.
pub fn parse_number(text: &str) -> Option<Rational> {
    let (mant, exp) = match text.find(['e', 'E']) {
        Some(k) => (&text[..k], text[k + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = match mant.find('.') {
        Some(k) => (&mant[..k], &mant[k + 1..]),
        None => (mant, ""),
    };
    if frac_part.contains('.') || (int_part.is_empty() && frac_part.is_empty()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let shift = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let p = num_traits::pow(ten, shift.unsigned_abs() as usize);
    Some(if shift >= 0 {
        Rational::from_integer(num * p)
    } else {
        Rational::new(num, p)
    })
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    resolve: &'a dyn Fn(&str) -> Option<Sym>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|t| t.0).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let pos = self.pos();
                let d = self.unary()?;
                if d.is_zero() {
                    return Err(ParseError {
                        pos,
                        msg: "division by zero".into(),
                    });
                }
                acc = acc.div(&d);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let pos = self.pos();
        let e = self.unary()?;
        let c = match e.as_constant() {
            Some(c) => c,
            None => {
                return Err(ParseError {
                    pos,
                    msg: "exponent must be a constant".into(),
                })
            }
        };
        let two = Rational::from_integer(BigInt::from(2));
        let doubled = &c * &two;
        if !doubled.is_integer() {
            return Err(ParseError {
                pos,
                msg: "exponent must be an integer or half-integer".into(),
            });
        }
        let k: i32 = match i32::try_from(doubled.to_integer()) {
            Ok(k) if k.abs() <= 4096 => k,
            _ => {
                return Err(ParseError {
                    pos,
                    msg: "exponent too large".into(),
                })
            }
        };
        if base.is_zero() && k < 0 {
            return Err(ParseError {
                pos,
                msg: "negative power of zero".into(),
            });
        }
        if k % 2 == 0 {
            Ok(base.pow(k / 2))
        } else {
            Ok(base.sqrt().pow(k))
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return self.err("unexpected end of expression"),
        };
        match tok {
            Tok::Num(r) => {
                self.at += 1;
                Ok(Expr::constant(r))
            }
            Tok::Op('(') => {
                self.at += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected ')'");
                }
                Ok(e)
            }
            Tok::Ident(name) => {
                let pos = self.pos();
                self.at += 1;
                if self.peek() == Some(&Tok::Op('(')) {
                    let f = match Func::from_name(&name) {
                        Some(f) => f,
                        None => {
                            return Err(ParseError {
                                pos,
                                msg: format!("unknown function '{name}'"),
                            })
                        }
                    };
                    self.at += 1;
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return self.err("expected ')' after function argument");
                    }
                    return Ok(Expr::apply(f, arg));
                }
                match (self.resolve)(&name) {
                    Some(s) => Ok(Expr::sym(s)),
                    None => Err(ParseError {
                        pos,
                        msg: format!("unknown symbol '{name}'"),
                    }),
                }
            }
            Tok::Op(c) => self.err(format!("unexpected '{c}'")),
        }
    }
}

/// Parse an infix expression. Identifiers are resolved by `resolve`.
pub fn parse(src: &str, resolve: &dyn Fn(&str) -> Option<Sym>) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: src.len(),
        resolve,
    };
    if p.peek().is_none() {
        return p.err("empty expression");
    }
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(s: &str) -> Option<Sym> {
        match s {
            "x" => Some(0),
            "y" => Some(1),
            _ => None,
        }
    }

    #[test]
    fn precedence_and_powers() {
        let e = parse("1 + 2*x^2 - y/4", &names).unwrap();
        let x = Expr::sym(0);
        let y = Expr::sym(1);
        let want =
            &(&Expr::one() + &x.pow(2).scale_int(2)) - &y.scale(&Rational::new(1.into(), 4.into()));
        assert_eq!(e, want);
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse("0.25", &names).unwrap(), Expr::frac(1, 4));
        assert_eq!(parse("1.5e-1", &names).unwrap(), Expr::frac(3, 20));
    }

    #[test]
    fn half_integer_power_is_sqrt() {
        let e = parse("x^(1/2)", &names).unwrap();
        assert_eq!(e, Expr::sym(0).sqrt());
        let e = parse("x^(-3/2) * x^2", &names).unwrap();
        assert_eq!(e, Expr::sym(0).sqrt());
    }

    #[test]
    fn errors_carry_position() {
        let err = parse("x + z", &names).unwrap_err();
        assert_eq!(err.pos, 4);
        assert!(parse("x +", &names).is_err());
        assert!(parse("foo(x)", &names).is_err());
        assert!(parse("x^y", &names).is_err());
        assert!(parse("1/0", &names).is_err());
    }
}
