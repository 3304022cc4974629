//! Exact symbolic scalars over chart coordinates.
//!
//! An [`Expr`] is kept in a canonical sum-of-monomials form: each monomial is a
//! product of atoms raised to nonzero integer powers, atoms being coordinate
//! symbols, analytic primitives applied to a canonical argument, or a
//! non-monomial base that carries a negative power. Two expressions are equal
//! exactly when their canonical forms coincide.

mod compile;
mod parse;
mod print;

pub use compile::Compiled;
pub use parse::{parse, ParseError};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

pub type Rational = BigRational;

/// Symbol id inside a chart's symbol table.
pub type Sym = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        match s {
            "exp" => Some(Func::Exp),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Sym(Sym),
    Func(Func, Expr),
    /// A sum that cannot be inverted monomially; only ever stored with a negative power.
    Base(Expr),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(Atom, i32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn factors(&self) -> &[(Atom, i32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    fn from_atom(a: Atom, e: i32) -> Self {
        Monomial(vec![(a, e)])
    }

    fn merge(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let e = self.0[i].1 + other.0[j].1;
                    if e != 0 {
                        out.push((self.0[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    fn inverse(&self) -> Monomial {
        Monomial(self.0.iter().map(|(a, e)| (a.clone(), -e)).collect())
    }

    fn needs_reduction(&self) -> bool {
        self.0.iter().any(|(a, e)| match a {
            Atom::Func(Func::Sqrt, _) => *e != 1,
            Atom::Base(_) => *e > 0,
            _ => false,
        })
    }
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Inner {
    terms: BTreeMap<Monomial, Rational>,
    syms: Vec<Sym>,
}

/// Canonical exact expression. Cheap to clone.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Inner>);

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

fn collect_syms(terms: &BTreeMap<Monomial, Rational>) -> Vec<Sym> {
    let mut out: Vec<Sym> = Vec::new();
    for m in terms.keys() {
        for (a, _) in &m.0 {
            match a {
                Atom::Sym(s) => out.push(*s),
                Atom::Func(_, e) | Atom::Base(e) => out.extend_from_slice(&e.0.syms),
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

impl Expr {
    fn from_terms(terms: BTreeMap<Monomial, Rational>) -> Expr {
        let syms = collect_syms(&terms);
        Expr(Arc::new(Inner { terms, syms }))
    }

    pub fn zero() -> Expr {
        Expr::from_terms(BTreeMap::new())
    }

    pub fn one() -> Expr {
        Expr::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Expr {
        let mut t = BTreeMap::new();
        if !c.is_zero() {
            t.insert(Monomial::one(), c);
        }
        Expr::from_terms(t)
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(Rational::from_integer(BigInt::from(n)))
    }

    pub fn frac(n: i64, d: i64) -> Expr {
        Expr::constant(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn sym(s: Sym) -> Expr {
        Expr::monomial(Monomial::from_atom(Atom::Sym(s), 1), Rational::one())
    }

    fn monomial(m: Monomial, c: Rational) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        if m.needs_reduction() {
            return reduce_monomial(m, c);
        }
        let mut t = BTreeMap::new();
        t.insert(m, c);
        Expr::from_terms(t)
    }

    pub fn terms(
        &self,
    ) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> + ExactSizeIterator {
        self.0.terms.iter()
    }

    pub fn n_terms(&self) -> usize {
        self.0.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().map(|c| c.is_one()).unwrap_or(false)
    }

    /// Free symbols, sorted.
    pub fn symbols(&self) -> &[Sym] {
        &self.0.syms
    }

    pub fn depends_on(&self, s: Sym) -> bool {
        self.0.syms.binary_search(&s).is_ok()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.0.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.0.terms.iter().next().unwrap();
                if m.is_one() {
                    Some(c.clone())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// Single-term expressions are invertible without introducing a `Base` atom.
    pub fn as_single_term(&self) -> Option<(&Monomial, &Rational)> {
        if self.0.terms.len() == 1 {
            self.0.terms.iter().next()
        } else {
            None
        }
    }

    pub fn scale(&self, c: &Rational) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        let t = self
            .0
            .terms
            .iter()
            .map(|(m, k)| (m.clone(), k * c))
            .collect();
        Expr::from_terms(t)
    }

    pub fn scale_int(&self, c: i64) -> Expr {
        self.scale(&Rational::from_integer(BigInt::from(c)))
    }

    pub fn pow(&self, e: i32) -> Expr {
        if e == 0 {
            return Expr::one();
        }
        if e > 0 {
            let mut acc = Expr::one();
            let mut base = self.clone();
            let mut k = e as u32;
            while k > 0 {
                if k & 1 == 1 {
                    acc = &acc * &base;
                }
                k >>= 1;
                if k > 0 {
                    base = &base * &base;
                }
            }
            return acc;
        }
        if self.is_zero() {
            panic!("division by an expression that is identically zero");
        }
        if let Some((m, c)) = self.as_single_term() {
            let inv_c = c.recip();
            let m = m.inverse();
            let c = pow_rational(&inv_c, -e);
            let m = Monomial(m.0.into_iter().map(|(a, k)| (a, k * -e)).collect());
            return Expr::monomial(m, c);
        }
        // Pull out the leading coefficient so that equal bases compare equal.
        let lead = self.0.terms.iter().next_back().unwrap().1.clone();
        let normed = self.scale(&lead.recip());
        let c = pow_rational(&lead.recip(), -e);
        Expr::monomial(Monomial::from_atom(Atom::Base(normed), e), c)
    }

    pub fn recip(&self) -> Expr {
        self.pow(-1)
    }

    pub fn div(&self, other: &Expr) -> Expr {
        self * &other.recip()
    }

    pub fn apply(f: Func, arg: Expr) -> Expr {
        if let Some(c) = arg.as_constant() {
            if c.is_zero() {
                return match f {
                    Func::Exp | Func::Cos => Expr::one(),
                    Func::Sin | Func::Sqrt => Expr::zero(),
                };
            }
            if f == Func::Sqrt {
                if let Some(r) = rational_sqrt(&c) {
                    return Expr::constant(r);
                }
            }
        }
        Expr::monomial(Monomial::from_atom(Atom::Func(f, arg), 1), Rational::one())
    }

    pub fn exp(&self) -> Expr {
        Expr::apply(Func::Exp, self.clone())
    }
    pub fn sin(&self) -> Expr {
        Expr::apply(Func::Sin, self.clone())
    }
    pub fn cos(&self) -> Expr {
        Expr::apply(Func::Cos, self.clone())
    }
    pub fn sqrt(&self) -> Expr {
        Expr::apply(Func::Sqrt, self.clone())
    }

    /// Partial derivative with respect to a symbol.
    pub fn diff(&self, s: Sym) -> Expr {
        if !self.depends_on(s) {
            return Expr::zero();
        }
        let mut acc = Expr::zero();
        for (m, c) in self.terms() {
            for (k, (atom, e)) in m.0.iter().enumerate() {
                let da = atom_diff(atom, s);
                if da.is_zero() {
                    continue;
                }
                let mut rest = m.0.clone();
                if *e == 1 {
                    rest.remove(k);
                } else {
                    rest[k].1 = e - 1;
                }
                let coeff = c * Rational::from_integer(BigInt::from(*e));
                let term = &Expr::monomial(Monomial(rest), coeff) * &da;
                acc = &acc + &term;
            }
        }
        acc
    }

    /// Substitute symbols by expressions.
    pub fn subs(&self, map: &dyn Fn(Sym) -> Option<Expr>) -> Expr {
        let mut acc = Expr::zero();
        for (m, c) in self.terms() {
            let mut t = Expr::constant(c.clone());
            for (a, e) in &m.0 {
                let base = match a {
                    Atom::Sym(s) => map(*s).unwrap_or_else(|| Expr::sym(*s)),
                    Atom::Func(f, arg) => Expr::apply(*f, arg.subs(map)),
                    Atom::Base(b) => b.subs(map),
                };
                t = &t * &base.pow(*e);
            }
            acc = &acc + &t;
        }
        acc
    }

    /// Total degree in the given symbols when the expression is polynomial in
    /// them (symbols appear only as plain atoms with nonnegative powers).
    pub fn polynomial_degree_in(&self, set: &[Sym]) -> Option<u32> {
        let mut deg = 0u32;
        for (m, _) in self.terms() {
            let mut d = 0u32;
            for (a, e) in &m.0 {
                match a {
                    Atom::Sym(s) if set.contains(s) => {
                        if *e < 0 {
                            return None;
                        }
                        d += *e as u32;
                    }
                    Atom::Sym(_) => {}
                    Atom::Func(_, x) | Atom::Base(x) => {
                        if set.iter().any(|s| x.depends_on(*s)) {
                            return None;
                        }
                    }
                }
            }
            deg = deg.max(d);
        }
        Some(deg)
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (m, c) in self.terms() {
            let mut t = c.to_f64().unwrap_or(f64::NAN);
            for (a, e) in &m.0 {
                t *= atom_eval(a, point).powi(*e);
            }
            acc += t;
        }
        acc
    }

    /// Sum of absolute term values at a point; the natural scale for round-off.
    pub fn magnitude(&self, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (m, c) in self.terms() {
            let mut t = c.to_f64().unwrap_or(f64::NAN);
            for (a, e) in &m.0 {
                t *= atom_eval(a, point).powi(*e);
            }
            acc += t.abs();
        }
        acc
    }

    pub fn compile(&self) -> Compiled {
        Compiled::new(self)
    }

    pub fn display<'a>(&'a self, names: &'a dyn Fn(Sym) -> String) -> print::Display<'a> {
        print::Display { expr: self, names }
    }
}

fn atom_eval(a: &Atom, point: &[f64]) -> f64 {
    match a {
        Atom::Sym(s) => point[*s as usize],
        Atom::Func(f, x) => {
            let v = x.eval(point);
            match f {
                Func::Exp => v.exp(),
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Sqrt => v.sqrt(),
            }
        }
        Atom::Base(x) => x.eval(point),
    }
}

fn atom_diff(a: &Atom, s: Sym) -> Expr {
    match a {
        Atom::Sym(t) => {
            if *t == s {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Atom::Func(f, x) => {
            let dx = x.diff(s);
            if dx.is_zero() {
                return Expr::zero();
            }
            let outer = match f {
                Func::Exp => x.exp(),
                Func::Sin => x.cos(),
                Func::Cos => -x.sin(),
                Func::Sqrt => x.sqrt().recip().scale(&Rational::new(1.into(), 2.into())),
            };
            &outer * &dx
        }
        Atom::Base(x) => x.diff(s),
    }
}

fn reduce_monomial(m: Monomial, c: Rational) -> Expr {
    let mut plain = Vec::new();
    let mut extra = Expr::constant(c);
    for (a, e) in m.0 {
        match &a {
            // keep only sqrt(x)^1: sqrt(x)^e = x^{⌊e/2⌋} sqrt(x)^{e mod 2}
            Atom::Func(Func::Sqrt, x) if e != 1 => {
                let q = e.div_euclid(2);
                let r = e.rem_euclid(2);
                extra = &extra * &x.pow(q);
                if r != 0 {
                    plain.push((a, r));
                }
            }
            Atom::Base(x) if e > 0 => {
                extra = &extra * &x.pow(e);
            }
            _ => plain.push((a, e)),
        }
    }
    let base = Expr::monomial(Monomial(plain), Rational::one());
    &base * &extra
}

fn pow_rational(r: &Rational, e: i32) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..e.unsigned_abs() {
        acc *= r;
    }
    if e < 0 {
        acc.recip()
    } else {
        acc
    }
}

fn rational_sqrt(c: &Rational) -> Option<Rational> {
    if c.is_negative() {
        return None;
    }
    let n = c.numer().sqrt();
    let d = c.denom().sqrt();
    if &(&n * &n) == c.numer() && &(&d * &d) == c.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

pub fn rational_from_f64_exact(text: &str) -> Option<Rational> {
    parse::parse_number(text)
}

impl<'a> Add<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn add(self, rhs: &'a Expr) -> Expr {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let (big, small) = if self.n_terms() >= rhs.n_terms() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mut t = big.0.terms.clone();
        for (m, c) in small.terms() {
            match t.get_mut(m) {
                Some(k) => {
                    *k += c;
                    if k.is_zero() {
                        t.remove(m);
                    }
                }
                None => {
                    t.insert(m.clone(), c.clone());
                }
            }
        }
        Expr::from_terms(t)
    }
}

impl<'a> Sub<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn sub(self, rhs: &'a Expr) -> Expr {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn mul(self, rhs: &'a Expr) -> Expr {
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        if let Some(c) = self.as_constant() {
            return rhs.scale(&c);
        }
        if let Some(c) = rhs.as_constant() {
            return self.scale(&c);
        }
        let mut t: BTreeMap<Monomial, Rational> = BTreeMap::new();
        let mut deferred = Vec::new();
        for (m1, c1) in self.terms() {
            for (m2, c2) in rhs.terms() {
                let m = m1.merge(m2);
                let c = c1 * c2;
                if m.needs_reduction() {
                    deferred.push(reduce_monomial(m, c));
                    continue;
                }
                match t.get_mut(&m) {
                    Some(k) => {
                        *k += &c;
                        if k.is_zero() {
                            t.remove(&m);
                        }
                    }
                    None => {
                        t.insert(m, c);
                    }
                }
            }
        }
        let mut out = Expr::from_terms(t);
        for d in deferred {
            out = &out + &d;
        }
        out
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scale(&-Rational::one())
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &'a Expr) -> Expr {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<Expr> for &'a Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                self.$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |a, b| &a + &b)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = |s: Sym| format!("s{s}");
        write!(f, "{}", self.display(&names))
    }
}

/// Outcome of a zero test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroTest {
    /// The canonical form is empty.
    Exact,
    /// Canonical form did not close but all random evaluations vanished.
    Numeric,
    NonZero,
}

impl ZeroTest {
    pub fn holds(self) -> bool {
        !matches!(self, ZeroTest::NonZero)
    }
}

pub const NUMERIC_ZERO_POINTS: usize = 30;
pub const NUMERIC_ZERO_TOL: f64 = 1e-12;

/// Symbolic zero test with random-point fallback. Points are drawn in
/// `[lo, hi]` for every symbol up to `n_syms`.
pub fn zero_test<R: Rng>(e: &Expr, n_syms: usize, rng: &mut R, lo: f64, hi: f64) -> ZeroTest {
    if e.is_zero() {
        return ZeroTest::Exact;
    }
    let has_opaque = e
        .terms()
        .any(|(m, _)| m.factors().iter().any(|(a, _)| !matches!(a, Atom::Sym(_))));
    if !has_opaque {
        return ZeroTest::NonZero;
    }
    let mut pt = vec![0.0; n_syms.max(e.symbols().last().map(|s| *s as usize + 1).unwrap_or(0))];
    for _ in 0..NUMERIC_ZERO_POINTS {
        for v in pt.iter_mut() {
            *v = rng.gen_range(lo..hi);
        }
        let v = e.eval(&pt);
        let scale = e.magnitude(&pt).max(1.0);
        if !(v.abs() <= NUMERIC_ZERO_TOL * scale) {
            return ZeroTest::NonZero;
        }
    }
    ZeroTest::Numeric
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::sym(0)
    }
    fn y() -> Expr {
        Expr::sym(1)
    }

    #[test]
    fn like_terms_cancel() {
        let e = &(&x() + &y()) - &(&y() + &x());
        assert!(e.is_zero());
    }

    #[test]
    fn product_expands() {
        let e = (&x() + &y()).pow(2);
        let f = &(&x() * &x() + &(&x() * &y()).scale_int(2)) + &(&y() * &y());
        assert_eq!(e, f);
    }

    #[test]
    fn derivative_of_polynomial() {
        let e = &x().pow(3) * &y();
        assert_eq!(e.diff(0), &x().pow(2).scale_int(3) * &y());
        assert_eq!(e.diff(2), Expr::zero());
    }

    #[test]
    fn chain_rule_for_primitives() {
        let e = (&x() * &y()).sin();
        assert_eq!(e.diff(0), &y() * &(&x() * &y()).cos());
        let s = x().sqrt();
        assert_eq!(&s * &s, x());
        let ds = s.diff(0);
        assert_eq!(&ds * &s, Expr::frac(1, 2));
    }

    #[test]
    fn reciprocal_of_sum_is_canonical() {
        let a = (&x() + &y()).recip();
        let b = (&x().scale_int(2) + &y().scale_int(2)).recip().scale_int(2);
        assert_eq!(a, b);
        assert_eq!(&a * &(&x() + &y()), &a * &(&x() + &y()));
    }

    #[test]
    fn monomial_inverse_is_laurent() {
        let e = &x().recip() * &x();
        assert!(e.is_one());
    }

    #[test]
    fn constant_folding_of_primitives() {
        assert!(Expr::zero().exp().is_one());
        assert_eq!(Expr::int(4).sqrt(), Expr::int(2));
        assert!(Expr::zero().sin().is_zero());
    }

    #[test]
    fn numeric_fallback_detects_identity() {
        let s = x().sin();
        let c = x().cos();
        let e = &(&(&s * &s) + &(&c * &c)) - &Expr::one();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert_eq!(zero_test(&e, 2, &mut rng, -1.0, 1.0), ZeroTest::Numeric);
        let e2 = &e + &Expr::frac(1, 1000);
        assert_eq!(zero_test(&e2, 2, &mut rng, -1.0, 1.0), ZeroTest::NonZero);
    }

    use rand::SeedableRng;

    #[test]
    fn degree_detection() {
        let e = &(&x() * &x()) * &y().exp();
        assert_eq!(e.polynomial_degree_in(&[0]), Some(2));
        assert_eq!(e.polynomial_degree_in(&[1]), None);
    }
}
