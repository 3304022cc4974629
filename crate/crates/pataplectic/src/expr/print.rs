use super::{Atom, Expr, Monomial, Rational, Sym};
use num_traits::{One, Signed};
use std::fmt;

pub struct Display<'a> {
    pub(super) expr: &'a Expr,
    pub(super) names: &'a dyn Fn(Sym) -> String,
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.expr, self.names)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, names: &dyn Fn(Sym) -> String) -> fmt::Result {
    if e.is_zero() {
        return write!(f, "0");
    }
    // Highest-ordered monomials first reads more naturally (constants last).
    for (k, (m, c)) in e.terms().rev().enumerate() {
        let neg = c.is_negative();
        if k == 0 {
            if neg {
                write!(f, "-")?;
            }
        } else if neg {
            write!(f, " - ")?;
        } else {
            write!(f, " + ")?;
        }
        write_term(f, m, &c.abs(), names)?;
    }
    Ok(())
}

fn write_rational(f: &mut fmt::Formatter<'_>, r: &Rational) -> fmt::Result {
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

fn write_term(
    f: &mut fmt::Formatter<'_>,
    m: &Monomial,
    c: &Rational,
    names: &dyn Fn(Sym) -> String,
) -> fmt::Result {
    if m.is_one() {
        return write_rational(f, c);
    }
    let mut first = true;
    if !c.is_one() {
        write_rational(f, c)?;
        first = false;
    }
    for (a, e) in m.factors() {
        if !first {
            write!(f, "*")?;
        }
        first = false;
        match a {
            Atom::Sym(s) => write!(f, "{}", names(*s))?,
            Atom::Func(func, x) => {
                write!(f, "{}(", func.name())?;
                write_expr(f, x, names)?;
                write!(f, ")")?;
            }
            Atom::Base(x) => {
                write!(f, "(")?;
                write_expr(f, x, names)?;
                write!(f, ")")?;
            }
        }
        if *e < 0 {
            write!(f, "^({e})")?;
        } else if *e != 1 {
            write!(f, "^{e}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn names(s: Sym) -> String {
        ["x", "y"][s as usize].to_string()
    }
    fn resolve(s: &str) -> Option<Sym> {
        match s {
            "x" => Some(0),
            "y" => Some(1),
            _ => None,
        }
    }

    #[test]
    fn round_trip() {
        for src in [
            "x^2 - 3/2*x*y + 1",
            "exp(-x)*sin(2*y)",
            "1/(1 + x^2)",
            "sqrt(x)*y^(-2)",
            "-x",
        ] {
            let e = parse(src, &resolve).unwrap();
            let printed = format!("{}", e.display(&names));
            let back = parse(&printed, &resolve).unwrap();
            assert_eq!(e, back, "{src} -> {printed}");
        }
    }
}
