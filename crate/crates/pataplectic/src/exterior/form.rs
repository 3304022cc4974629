use super::multiindex::{canonicalize_raw, MultiIndex};
use crate::error::{Error, Result};
use crate::expr::{zero_test, Expr, ZeroTest};
use rand::Rng;
use std::collections::BTreeMap;

pub(crate) type Terms = BTreeMap<MultiIndex, Expr>;

pub(crate) fn add_term(t: &mut Terms, idx: MultiIndex, c: Expr) {
    if c.is_zero() {
        return;
    }
    match t.get_mut(&idx) {
        Some(v) => {
            let s = &*v + &c;
            if s.is_zero() {
                t.remove(&idx);
            } else {
                *v = s;
            }
        }
        None => {
            t.insert(idx, c);
        }
    }
}

pub(crate) fn wedge_terms(a: &Terms, b: &Terms) -> Terms {
    let mut out = Terms::new();
    for (i, x) in a {
        for (j, y) in b {
            if let Some((m, s)) = i.merge(j) {
                add_term(&mut out, m, (x * y).scale_int(s as i64));
            }
        }
    }
    out
}

/// Sparse differential form on a coordinate patch of dimension `dim`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DifferentialForm {
    dim: usize,
    degree: usize,
    terms: Terms,
}

impl DifferentialForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        DifferentialForm {
            dim,
            degree,
            terms: Terms::new(),
        }
    }

    pub fn scalar(dim: usize, f: Expr) -> Self {
        let mut t = Terms::new();
        add_term(&mut t, MultiIndex::empty(), f);
        DifferentialForm {
            dim,
            degree: 0,
            terms: t,
        }
    }

    /// `dq^c`.
    pub fn dq(dim: usize, c: usize) -> Self {
        DifferentialForm::monomial(dim, &[c], Expr::one())
    }

    /// `f dq^{i₁}∧…∧dq^{i_d}` for an arbitrary (0-based) ordering.
    pub fn monomial(dim: usize, idx: &[usize], f: Expr) -> Self {
        let (sorted, sign) = canonicalize_raw(idx);
        let mut t = Terms::new();
        if sign != 0 {
            assert!(
                sorted.last().map(|&i| i < dim).unwrap_or(true),
                "index out of range"
            );
            add_term(
                &mut t,
                MultiIndex::from_sorted(&sorted),
                f.scale_int(sign as i64),
            );
        }
        DifferentialForm {
            dim,
            degree: idx.len(),
            terms: t,
        }
    }

    pub fn from_terms(
        dim: usize,
        degree: usize,
        terms: impl IntoIterator<Item = (MultiIndex, Expr)>,
    ) -> Self {
        let mut t = Terms::new();
        for (i, c) in terms {
            assert_eq!(i.len(), degree);
            add_term(&mut t, i, c);
        }
        DifferentialForm {
            dim,
            degree,
            terms: t,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, Expr> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient read through an arbitrary ordering of indices (0-based).
    pub fn component(&self, idx: &[usize]) -> Expr {
        let (sorted, sign) = canonicalize_raw(idx);
        if sign == 0 || idx.len() != self.degree {
            return Expr::zero();
        }
        self.terms
            .get(&MultiIndex::from_sorted(&sorted))
            .map(|c| c.scale_int(sign as i64))
            .unwrap_or_else(Expr::zero)
    }

    /// Scalar part of a 0-form.
    pub fn as_scalar(&self) -> Expr {
        self.terms
            .get(&MultiIndex::empty())
            .cloned()
            .unwrap_or_else(Expr::zero)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::ChartMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        if self.is_zero() {
            return Ok(DifferentialForm {
                degree: self.degree.max(other.degree),
                ..other.clone()
            });
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.degree != other.degree {
            return Err(Error::Degree(format!(
                "cannot add forms of degree {} and {}",
                self.degree, other.degree
            )));
        }
        let mut t = self.terms.clone();
        for (i, c) in &other.terms {
            add_term(&mut t, i.clone(), c.clone());
        }
        Ok(DifferentialForm {
            dim: self.dim,
            degree: self.degree,
            terms: t,
        })
    }

    pub fn add(&self, other: &Self) -> Self {
        self.try_add(other).expect("form addition")
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&Expr::int(-1))
    }

    pub fn scale(&self, f: &Expr) -> Self {
        let mut t = Terms::new();
        for (i, c) in &self.terms {
            add_term(&mut t, i.clone(), c * f);
        }
        DifferentialForm {
            dim: self.dim,
            degree: self.degree,
            terms: t,
        }
    }

    pub fn try_wedge(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(DifferentialForm {
            dim: self.dim,
            degree: self.degree + other.degree,
            terms: wedge_terms(&self.terms, &other.terms),
        })
    }

    pub fn wedge(&self, other: &Self) -> Self {
        self.try_wedge(other).expect("wedge")
    }

    /// Exterior derivative. Only symbols below `dim` are phase-space coordinates.
    pub fn d(&self) -> Self {
        let mut t = Terms::new();
        for (i, c) in &self.terms {
            for &s in c.symbols() {
                let s = s as usize;
                if s >= self.dim {
                    continue;
                }
                if let Some((m, sign)) = i.insert_front(s) {
                    add_term(&mut t, m, c.diff(s as u32).scale_int(sign as i64));
                }
            }
        }
        DifferentialForm {
            dim: self.dim,
            degree: self.degree + 1,
            terms: t,
        }
    }

    /// `ξ⌟a`: the vector fills the first slot.
    pub fn interior(&self, xi: &VectorField) -> Result<Self> {
        if xi.dim != self.dim {
            return Err(Error::ChartMismatch {
                left: xi.dim,
                right: self.dim,
            });
        }
        if self.degree == 0 {
            return Err(Error::Degree("interior product of a 0-form".into()));
        }
        let mut t = Terms::new();
        for (i, c) in &self.terms {
            for (pos, q) in i.iter().enumerate() {
                if let Some(x) = xi.comps.get(&q) {
                    let sign = if pos % 2 == 0 { 1 } else { -1 };
                    add_term(&mut t, i.without(pos), (c * x).scale_int(sign));
                }
            }
        }
        Ok(DifferentialForm {
            dim: self.dim,
            degree: self.degree - 1,
            terms: t,
        })
    }

    /// `X⌟a` for an m-vector: the factors of `X` fill the first `m` slots.
    pub fn interior_multi(&self, x: &MultiVectorField) -> Result<Self> {
        if x.dim != self.dim {
            return Err(Error::ChartMismatch {
                left: x.dim,
                right: self.dim,
            });
        }
        if x.degree > self.degree {
            return Err(Error::Degree(format!(
                "{}-vector into a {}-form",
                x.degree, self.degree
            )));
        }
        let mut t = Terms::new();
        for (j, xc) in &x.terms {
            for (i, c) in &self.terms {
                let rest: Vec<usize> = i.iter().filter(|q| !j.contains(*q)).collect();
                if rest.len() + j.len() != i.len() {
                    continue;
                }
                let mut tuple = j.to_vec();
                tuple.extend_from_slice(&rest);
                let (_, sign) = canonicalize_raw(&tuple);
                add_term(
                    &mut t,
                    MultiIndex::from_sorted(&rest),
                    (c * xc).scale_int(sign as i64),
                );
            }
        }
        Ok(DifferentialForm {
            dim: self.dim,
            degree: self.degree - x.degree,
            terms: t,
        })
    }

    /// Lie derivative from the coordinate formula
    /// `ℒ_ξ(a_I dq^I) = ξ(a_I) dq^I + a_I Σ_s dq^{i₁}∧…∧dξ^{i_s}∧…`.
    pub fn lie_derivative(&self, xi: &VectorField) -> Self {
        assert_eq!(xi.dim, self.dim, "chart mismatch");
        let mut t = Terms::new();
        for (i, c) in &self.terms {
            add_term(&mut t, i.clone(), xi.apply(c));
            for (slot, q) in i.iter().enumerate() {
                let Some(xq) = xi.comps.get(&q) else { continue };
                for &s in xq.symbols() {
                    let s = s as usize;
                    if s >= self.dim {
                        continue;
                    }
                    let mut tuple = i.to_vec();
                    tuple[slot] = s;
                    let (sorted, sign) = canonicalize_raw(&tuple);
                    if sign == 0 {
                        continue;
                    }
                    add_term(
                        &mut t,
                        MultiIndex::from_sorted(&sorted),
                        (c * &xq.diff(s as u32)).scale_int(sign as i64),
                    );
                }
            }
        }
        DifferentialForm {
            dim: self.dim,
            degree: self.degree,
            terms: t,
        }
    }

    pub fn map_coeffs(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        DifferentialForm::from_terms(
            self.dim,
            self.degree,
            self.terms.iter().map(|(i, c)| (i.clone(), f(c))),
        )
    }

    /// Zero test of every coefficient, with random-point fallback.
    pub fn zero_test<R: Rng>(&self, n_syms: usize, rng: &mut R, lo: f64, hi: f64) -> ZeroTest {
        let mut out = ZeroTest::Exact;
        for c in self.terms.values() {
            match zero_test(c, n_syms, rng, lo, hi) {
                ZeroTest::NonZero => return ZeroTest::NonZero,
                ZeroTest::Numeric => out = ZeroTest::Numeric,
                ZeroTest::Exact => {}
            }
        }
        out
    }

    /// Numeric coefficients at a point.
    pub fn eval(&self, point: &[f64]) -> Vec<(MultiIndex, f64)> {
        self.terms
            .iter()
            .map(|(i, c)| (i.clone(), c.eval(point)))
            .collect()
    }
}

/// Vector field on the patch: sparse components along `∂/∂q^c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorField {
    dim: usize,
    comps: BTreeMap<usize, Expr>,
}

impl VectorField {
    pub fn zero(dim: usize) -> Self {
        VectorField {
            dim,
            comps: BTreeMap::new(),
        }
    }

    pub fn basis(dim: usize, c: usize) -> Self {
        let mut v = VectorField::zero(dim);
        v.set(c, Expr::one());
        v
    }

    pub fn from_comps(dim: usize, comps: impl IntoIterator<Item = (usize, Expr)>) -> Self {
        let mut v = VectorField::zero(dim);
        for (c, e) in comps {
            v.add_to(c, &e);
        }
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn set(&mut self, c: usize, e: Expr) {
        assert!(c < self.dim, "component out of range");
        if e.is_zero() {
            self.comps.remove(&c);
        } else {
            self.comps.insert(c, e);
        }
    }

    pub fn add_to(&mut self, c: usize, e: &Expr) {
        let cur = self.get(c);
        self.set(c, &cur + e);
    }

    pub fn get(&self, c: usize) -> Expr {
        self.comps.get(&c).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn comps(&self) -> &BTreeMap<usize, Expr> {
        &self.comps
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn scale(&self, f: &Expr) -> Self {
        VectorField::from_comps(self.dim, self.comps.iter().map(|(c, e)| (*c, e * f)))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "chart mismatch");
        let mut v = self.clone();
        for (c, e) in &other.comps {
            v.add_to(*c, e);
        }
        v
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&Expr::int(-1)))
    }

    /// Directional derivative `ξ(f)`.
    pub fn apply(&self, f: &Expr) -> Expr {
        self.comps
            .iter()
            .filter(|(c, _)| f.depends_on(**c as u32))
            .map(|(c, x)| x * &f.diff(*c as u32))
            .sum()
    }

    /// `[ξ, η]^c = ξ(η^c) − η(ξ^c)`.
    pub fn bracket(&self, other: &Self) -> Self {
        let mut v = VectorField::zero(self.dim);
        for c in 0..self.dim {
            let e = &self.apply(&other.get(c)) - &other.apply(&self.get(c));
            v.set(c, e);
        }
        v
    }

    pub fn to_multivector(&self) -> MultiVectorField {
        MultiVectorField::from_terms(
            self.dim,
            1,
            self.comps
                .iter()
                .map(|(c, e)| (MultiIndex::single(*c), e.clone())),
        )
    }
}

/// Multivector field, optionally remembering a factorization into vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiVectorField {
    dim: usize,
    degree: usize,
    terms: Terms,
    factors: Option<Vec<VectorField>>,
}

impl MultiVectorField {
    pub fn from_terms(
        dim: usize,
        degree: usize,
        terms: impl IntoIterator<Item = (MultiIndex, Expr)>,
    ) -> Self {
        let mut t = Terms::new();
        for (i, c) in terms {
            assert_eq!(i.len(), degree);
            add_term(&mut t, i, c);
        }
        MultiVectorField {
            dim,
            degree,
            terms: t,
            factors: None,
        }
    }

    /// `X₁∧…∧X_m`, expanded into components.
    pub fn decomposable(factors: &[VectorField]) -> Self {
        assert!(!factors.is_empty());
        let dim = factors[0].dim;
        let mut acc = Terms::new();
        add_term(&mut acc, MultiIndex::empty(), Expr::one());
        for f in factors {
            assert_eq!(f.dim, dim, "chart mismatch");
            acc = wedge_terms(&acc, &f.to_multivector().terms);
        }
        MultiVectorField {
            dim,
            degree: factors.len(),
            terms: acc,
            factors: Some(factors.to_vec()),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn degree(&self) -> usize {
        self.degree
    }
    pub fn terms(&self) -> &BTreeMap<MultiIndex, Expr> {
        &self.terms
    }
    pub fn factors(&self) -> Option<&[VectorField]> {
        self.factors.as_deref()
    }
    pub fn is_decomposable(&self) -> bool {
        self.factors.is_some()
    }

    pub fn component(&self, idx: &[usize]) -> Expr {
        let (sorted, sign) = canonicalize_raw(idx);
        if sign == 0 {
            return Expr::zero();
        }
        self.terms
            .get(&MultiIndex::from_sorted(&sorted))
            .map(|c| c.scale_int(sign as i64))
            .unwrap_or_else(Expr::zero)
    }

    pub fn scale(&self, f: &Expr) -> Self {
        let mut m = MultiVectorField::from_terms(
            self.dim,
            self.degree,
            self.terms.iter().map(|(i, c)| (i.clone(), c * f)),
        );
        if let Some(fs) = &self.factors {
            let mut fs = fs.clone();
            fs[0] = fs[0].scale(f);
            m.factors = Some(fs);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(i: u32) -> Expr {
        Expr::sym(i)
    }

    #[test]
    fn wedge_examples() {
        let dx1 = DifferentialForm::dq(3, 0);
        let dx2 = DifferentialForm::dq(3, 1);
        assert!(dx1.wedge(&dx1).is_zero());
        let w = dx1.wedge(&dx2);
        assert_eq!(w.component(&[0, 1]), Expr::one());
        assert_eq!(w.component(&[1, 0]), Expr::int(-1));
        let e = dx1.scale(&s(2)).wedge(&dx2);
        assert_eq!(e.component(&[0, 1]), s(2));
    }

    #[test]
    fn interior_examples() {
        let w = DifferentialForm::monomial(3, &[0, 1], Expr::one());
        let i1 = w.interior(&VectorField::basis(3, 0)).unwrap();
        assert_eq!(i1, DifferentialForm::dq(3, 1));
        let i2 = w.interior(&VectorField::basis(3, 1)).unwrap();
        assert_eq!(i2, DifferentialForm::dq(3, 0).neg());
    }

    #[test]
    fn two_vector_fills_first_slots() {
        // (∂₁∧∂₂)⌟(dε∧dx¹∧dx²) on coordinates (x1, x2, eps) = (0, 1, 2).
        let form = DifferentialForm::monomial(3, &[2, 0, 1], Expr::one());
        let x =
            MultiVectorField::decomposable(&[VectorField::basis(3, 0), VectorField::basis(3, 1)]);
        let r = form.interior_multi(&x).unwrap();
        // Slot filling by hand: Ω(∂₁, ∂₂, V) = dε(V) · det[[dx¹(∂₁),dx¹(∂₂)],[dx²(∂₁),dx²(∂₂)]] = dε(V).
        assert_eq!(r, DifferentialForm::dq(3, 2));
        // Sequential interior products agree.
        let seq = form
            .interior(&VectorField::basis(3, 0))
            .unwrap()
            .interior(&VectorField::basis(3, 1))
            .unwrap();
        assert_eq!(seq, r);
    }

    #[test]
    fn exterior_derivative_examples() {
        let a = DifferentialForm::monomial(3, &[0], s(1));
        assert!(a.d().d().is_zero());
        let b = DifferentialForm::monomial(3, &[0, 1], s(2));
        assert_eq!(
            b.d(),
            DifferentialForm::monomial(3, &[2, 0, 1], Expr::one())
        );
    }

    #[test]
    fn lie_derivative_example() {
        // ℒ_{∂/∂x¹}(x¹ dx²) = dx²
        let a = DifferentialForm::monomial(2, &[1], s(0));
        let l = a.lie_derivative(&VectorField::basis(2, 0));
        assert_eq!(l, DifferentialForm::dq(2, 1));
        let c = DifferentialForm::scalar(2, Expr::int(5));
        assert!(c.lie_derivative(&VectorField::basis(2, 0)).is_zero());
    }

    #[test]
    fn decomposable_matches_determinant() {
        // Hand oracle: components of X₁∧X₂ are 2×2 minors.
        let dim = 3;
        let x1 = VectorField::from_comps(dim, [(0, s(0)), (1, Expr::int(2)), (2, s(1))]);
        let x2 = VectorField::from_comps(dim, [(0, Expr::int(1)), (2, s(2))]);
        let x = MultiVectorField::decomposable(&[x1.clone(), x2.clone()]);
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let det = &(&x1.get(a) * &x2.get(b)) - &(&x1.get(b) * &x2.get(a));
            assert_eq!(x.component(&[a, b]), det);
        }
    }
}
