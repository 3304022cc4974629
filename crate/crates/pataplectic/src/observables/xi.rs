use super::{ObservableForm, ZetaTerm};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::exterior::{canonicalize_raw, ChartSpec, DifferentialForm, PhaseSpace, VectorField};
use crate::symsolve::{reduce, Row, ZeroCtx};
use std::collections::BTreeMap;

/// A vector field `Ξ(a)` with `da = −Ξ(a)⌟Ω`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PataplecticVectorField {
    pub field: VectorField,
    pub origin: String,
}

/// Canonical `p_T` for an arbitrary tuple `T`, in chart coordinates.
fn canonical_p(c: &ChartSpec, tuple: &[usize]) -> Expr {
    let (sorted, s) = canonicalize_raw(tuple);
    if s == 0 {
        return Expr::zero();
    }
    let (sym, sm) = c
        .momentum_by_sorted(&sorted)
        .expect("full chart has every momentum");
    Expr::sym(sym).scale_int((s * sm) as i64)
}

/// Lemma-3 closed form for `Ξ(Q^ζ)`.
fn xi_generalized_position(ps: &PhaseSpace, zeta: &[ZetaTerm]) -> VectorField {
    let c = ps.chart();
    let nq = c.n() + c.k();
    let mut out = VectorField::zero(ps.dim());
    for t in zeta {
        let s = t.index.iter().position(|&i| i == t.dir).expect("validated");
        for mu in 0..nq {
            if mu != t.dir && t.index.contains(&mu) {
                continue;
            }
            let dz = t.coeff.diff(mu as u32);
            if dz.is_zero() {
                continue;
            }
            let mut tup = t.index.clone();
            tup[s] = mu;
            let (j, _) = canonicalize_raw(&tup);
            let alpha = j.iter().position(|&i| i == mu).unwrap();
            let mut back = j.clone();
            back[alpha] = t.dir;
            let (_, s2) = canonicalize_raw(&back);
            let (pm, sm) = c.momentum_by_sorted(&j).expect("full chart");
            out.add_to(pm as usize, &dz.scale_int(-(s2 * sm) as i64));
        }
    }
    out
}

/// `Π^ν_μ` of Lemma 3, in chart coordinates.
pub(crate) fn pi_field(c: &ChartSpec, nu: usize, mu: usize) -> VectorField {
    let mut out = VectorField::zero(c.dim());
    for (j, m) in c.momenta().iter().enumerate() {
        let Some(alpha) = m.sorted.iter().position(|&i| i == nu) else {
            continue;
        };
        let mut tup = m.sorted.clone();
        tup[alpha] = mu;
        let coef = canonical_p(c, &tup);
        out.add_to(c.momentum_sym(j) as usize, &coef.scale_int(m.sign as i64));
    }
    out
}

/// Lemma-3 closed form for `Ξ(P_ξ)`.
fn xi_generalized_momentum(ps: &PhaseSpace, xi: &[Expr]) -> VectorField {
    let c = ps.chart();
    let nq = c.n() + c.k();
    let mut out = VectorField::from_comps(ps.dim(), xi.iter().cloned().enumerate());
    for (mu, x) in xi.iter().enumerate() {
        for nu in 0..nq {
            let dx = x.diff(nu as u32);
            if dx.is_zero() {
                continue;
            }
            out = out.sub(&pi_field(c, nu, mu).scale(&dx));
        }
    }
    out
}

fn closed_form(ps: &PhaseSpace, a: &ObservableForm) -> Option<VectorField> {
    if ps.is_weighted() || !ps.chart().is_full() {
        return None;
    }
    let c = ps.chart();
    match a {
        ObservableForm::Position { field, f } => Some(xi_generalized_position(
            ps,
            &ObservableForm::position_as_zeta(ps, *field, f),
        )),
        ObservableForm::GeneralizedPosition { zeta } => Some(xi_generalized_position(ps, zeta)),
        ObservableForm::Momentum { mu, g } => {
            let mut xi = vec![Expr::zero(); c.n() + c.k()];
            xi[*mu] = g.clone();
            Some(xi_generalized_momentum(ps, &xi))
        }
        ObservableForm::GeneralizedMomentum { xi } => Some(xi_generalized_momentum(ps, xi)),
        _ => None,
    }
}

/// `Ξ(a)`: closed forms on full unweighted charts, symbolic solve otherwise.
pub fn xi_of(ps: &PhaseSpace, a: &ObservableForm) -> Result<PataplecticVectorField> {
    a.validate(ps)?;
    let n = ps.chart().n();
    if let Some(field) = closed_form(ps, a) {
        return Ok(PataplecticVectorField {
            field,
            origin: a.name().to_string(),
        });
    }
    let form = a.expand(ps)?;
    if form.degree() != n - 1 && !form.is_zero() {
        return Err(Error::Degree(format!(
            "Ξ is defined on (n−1)-forms; {} has degree {}",
            a.name(),
            form.degree()
        )));
    }
    Ok(PataplecticVectorField {
        field: xi_generic(ps, &form)?,
        origin: a.name().to_string(),
    })
}

/// Solve `da = −ξ⌟Ω` for `ξ` over the chart's coordinate basis.
pub fn xi_generic(ps: &PhaseSpace, a: &DifferentialForm) -> Result<VectorField> {
    let dim = ps.dim();
    let omega = ps.pataplectic();
    let da = a.d();
    let mut rows: BTreeMap<_, (Row, Expr)> = BTreeMap::new();
    for col in 0..dim {
        let b = omega.interior(&VectorField::basis(dim, col))?;
        for (idx, e) in b.terms() {
            rows.entry(idx.clone())
                .or_insert_with(|| (Row::new(), Expr::zero()))
                .0
                .insert(col, e.clone());
        }
    }
    for (idx, e) in da.terms() {
        rows.entry(idx.clone())
            .or_insert_with(|| (Row::new(), Expr::zero()))
            .1 = -e;
    }
    let mut zc = ZeroCtx::new(ps.chart().n_symbols(), 0x5eed);
    let red = reduce(rows.into_values().collect(), dim, &mut zc);
    if !red.is_consistent() {
        return Err(Error::NotPataplectic(format!(
            "da has components outside the span of ξ⌟Ω (residual {})",
            ps.chart().show(&red.inconsistent[0])
        )));
    }
    if !red.free.is_empty() {
        return Err(Error::Degenerate(format!(
            "Ω is degenerate along {} on this chart",
            red.free
                .iter()
                .map(|&c| ps.chart().name(c as u32))
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    let vals = red.assign(dim, &BTreeMap::new());
    Ok(VectorField::from_comps(dim, vals.into_iter().enumerate()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::ChartSpec;

    fn check_defining_identity(ps: &PhaseSpace, a: &ObservableForm) -> VectorField {
        let x = xi_of(ps, a).unwrap().field;
        let da = a.expand(ps).unwrap().d();
        let r = da.add(&ps.pataplectic().interior(&x).unwrap());
        let mut zc = ZeroCtx::new(ps.chart().n_symbols(), 7);
        assert!(r.terms().values().all(|e| zc.is_zero(e)), "{:?}", r);
        x
    }

    #[test]
    fn position_field_on_weyl_chart() {
        // Q^{1,f}, f = ∂/∂x¹ → Ξ = −∂/∂p¹
        let c = ChartSpec::weyl(2, 1).unwrap();
        let ps = PhaseSpace::new(c.clone());
        let a = ObservableForm::position(0, vec![Expr::one(), Expr::zero()]);
        let x = check_defining_identity(&ps, &a);
        assert_eq!(
            x,
            VectorField::basis(6, c.p1(0, 0).unwrap() as usize).scale(&Expr::int(-1))
        );
    }

    #[test]
    fn fibre_momentum_with_unit_weight() {
        let c = ChartSpec::full(2, 2).unwrap();
        let ps = PhaseSpace::new(c.clone());
        for i in 0..2 {
            let a = ObservableForm::momentum(2 + i, Expr::one());
            let x = check_defining_identity(&ps, &a);
            assert_eq!(x, VectorField::basis(c.dim(), c.y(i) as usize));
        }
    }

    #[test]
    fn constant_weight_momentum_is_translation() {
        let ps = PhaseSpace::new(ChartSpec::full(3, 1).unwrap());
        for mu in 0..4 {
            let a = ObservableForm::momentum(mu, Expr::int(3));
            let x = check_defining_identity(&ps, &a);
            assert_eq!(x, VectorField::basis(ps.dim(), mu).scale(&Expr::int(3)));
        }
    }

    #[test]
    fn closed_forms_agree_with_symbolic_solve() {
        for (n, k) in [(2, 1), (2, 2), (3, 1)] {
            let c = ChartSpec::full(n, k).unwrap();
            let ps = PhaseSpace::new(c.clone());
            let x0 = Expr::sym(0);
            let y0 = Expr::sym(c.y(0));
            let cases = vec![
                ObservableForm::position(
                    0,
                    (0..n).map(|a| x0.pow(2) + Expr::int(a as i64)).collect(),
                ),
                ObservableForm::momentum(0, &x0 * &Expr::sym(1)),
                ObservableForm::momentum(n, x0.pow(2)),
                ObservableForm::GeneralizedMomentum {
                    xi: (0..n + k)
                        .map(|m| (&x0 * &y0) + Expr::int(m as i64))
                        .collect(),
                },
            ];
            for a in cases {
                let closed = xi_of(&ps, &a).unwrap().field;
                let generic = xi_generic(&ps, &a.expand(&ps).unwrap()).unwrap();
                assert_eq!(closed, generic, "{} on ({n},{k})", a.name());
            }
        }
    }

    #[test]
    fn section_table_closed_form_for_position() {
        // Ξ(Q^{i,f}) = −Σ f^α ∂/∂p^α_i − y^i Σ ∂_α f^α ∂/∂ε
        let c = ChartSpec::full(2, 2).unwrap();
        let ps = PhaseSpace::new(c.clone());
        let f = vec![Expr::sym(0).pow(2), &Expr::sym(0) * &Expr::sym(1)];
        let x = xi_of(&ps, &ObservableForm::position(1, f.clone()))
            .unwrap()
            .field;
        let mut want = VectorField::zero(c.dim());
        for a in 0..2 {
            want.add_to(c.p1(a, 1).unwrap() as usize, &-&f[a]);
        }
        let div = &f[0].diff(0) + &f[1].diff(1);
        want.add_to(c.eps() as usize, &-(&Expr::sym(c.y(1)) * &div));
        assert_eq!(x, want);
    }

    #[test]
    fn weighted_chart_uses_solve() {
        let c = ChartSpec::weyl(2, 1).unwrap();
        let g = Expr::sym(0).pow(2) + Expr::int(1);
        let ps = PhaseSpace::weighted(c, g).unwrap();
        let a = ObservableForm::position(0, vec![Expr::sym(1), Expr::one()]);
        check_defining_identity(&ps, &a);
        check_defining_identity(&ps, &ObservableForm::momentum(2, Expr::sym(0)));
    }

    #[test]
    fn non_pataplectic_form_is_rejected() {
        // y dε is a 1-form whose differential dy∧dε is not of the form ξ⌟Ω
        let c = ChartSpec::weyl(2, 1).unwrap();
        let ps = PhaseSpace::new(c.clone());
        let a = DifferentialForm::monomial(c.dim(), &[c.eps() as usize], Expr::sym(c.y(0)));
        assert!(matches!(xi_generic(&ps, &a), Err(Error::NotPataplectic(_))));
    }
}
