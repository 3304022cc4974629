use super::nvector::HamiltonianNVector;
use super::xi::{xi_generic, xi_of};
use super::ObservableForm;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::exterior::{DifferentialForm, PhaseSpace};
use crate::symsolve::ZeroCtx;

/// Internal p-bracket `{a,b} = Ξ(b)⌟Ξ(a)⌟Ω`.
pub fn pbracket_internal(
    ps: &PhaseSpace,
    a: &ObservableForm,
    b: &ObservableForm,
) -> Result<DifferentialForm> {
    let xa = xi_of(ps, a)?.field;
    let xb = xi_of(ps, b)?.field;
    ps.pataplectic().interior(&xa)?.interior(&xb)
}

/// External p-bracket `{λ,b} = −Ξ(b)⌟dλ` for a form `λ` of degree ≤ n.
pub fn pbracket_external(
    ps: &PhaseSpace,
    lambda: &DifferentialForm,
    b: &ObservableForm,
) -> Result<DifferentialForm> {
    let n = ps.chart().n();
    if lambda.degree() > n {
        return Err(Error::Degree(format!("external bracket needs deg ≤ {n}")));
    }
    let xb = xi_of(ps, b)?.field;
    Ok(lambda.d().interior(&xb)?.neg())
}

/// `{ℋω, a}`.
pub fn bracket_with_density(
    ps: &PhaseSpace,
    h: &Expr,
    a: &ObservableForm,
) -> Result<DifferentialForm> {
    pbracket_external(ps, &ps.density(h), a)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Admissibility {
    pub admissible: bool,
    /// Offending base direction `β` and the component `dx^β(Ξ(a))`.
    pub witness: Option<(usize, Expr)>,
}

/// Admissibility of `a ∈ 𝔓ⁿ⁻¹ℳ`: every `dx^β(Ξ(a))` vanishes.
pub fn is_admissible(ps: &PhaseSpace, a: &ObservableForm) -> Result<Admissibility> {
    let x = xi_of(ps, a)?.field;
    let mut zc = ZeroCtx::new(ps.chart().n_symbols(), 0xad);
    for beta in 0..ps.chart().n() {
        let comp = x.get(beta);
        if !zc.is_zero(&comp) {
            return Ok(Admissibility {
                admissible: false,
                witness: Some((beta, comp)),
            });
        }
    }
    Ok(Admissibility {
        admissible: true,
        witness: None,
    })
}

fn is_spacetime_form(ps: &PhaseSpace, f: &DifferentialForm) -> bool {
    let nq = ps.chart().n() + ps.chart().k();
    f.terms()
        .iter()
        .all(|(i, c)| i.iter().all(|q| q < nq) && c.symbols().iter().all(|&s| (s as usize) < nq))
}

/// `{ℋω, λ}_ω = X♯λ`, refusing forms that are not admissible.
pub fn omega_bracket(
    ps: &PhaseSpace,
    h: &Expr,
    lambda: &DifferentialForm,
) -> Result<DifferentialForm> {
    let n = ps.chart().n();
    let x = HamiltonianNVector::complete(ps, h, 1)?;
    if is_spacetime_form(ps, lambda) {
        return x.sharp(ps, lambda);
    }
    if lambda.degree() + 1 == n {
        if let Ok(xi) = xi_generic(ps, lambda) {
            let mut zc = ZeroCtx::new(ps.chart().n_symbols(), 0xad);
            if let Some(beta) = (0..n).find(|&b| !zc.is_zero(&xi.get(b))) {
                return Err(Error::NotAdmissible(format!(
                    "dx^{}(Ξ) = {} ≠ 0",
                    beta + 1,
                    ps.chart().show(&xi.get(beta))
                )));
            }
            return x.sharp(ps, lambda);
        }
    }
    // no criterion applies: require agreement of two completions
    let first = x.sharp(ps, lambda)?;
    let second = HamiltonianNVector::complete(ps, h, 2)?.sharp(ps, lambda)?;
    let mut zc = ZeroCtx::new(ps.chart().n_symbols(), 0xad);
    let diff = first.sub(&second);
    if diff.terms().values().any(|e| !zc.is_zero(e)) {
        return Err(Error::NotAdmissible(
            "X♯λ depends on the Hamiltonian n-vector".into(),
        ));
    }
    Ok(first)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Rational;
    use crate::exterior::{ChartSpec, VectorField};

    fn ps21() -> (ChartSpec, PhaseSpace) {
        let c = ChartSpec::weyl(2, 1).unwrap();
        (c.clone(), PhaseSpace::new(c))
    }

    #[test]
    fn external_examples() {
        let (c, ps) = ps21();
        let g = Expr::sym(0).pow(2) + Expr::one();
        let p = ObservableForm::momentum(2, g.clone());
        // {P_{i,g}, q^μ} = g δ^μ_i, i.e. −{q^μ, P}
        for mu in 0..3 {
            let q = DifferentialForm::scalar(c.dim(), Expr::sym(mu as u32));
            let r = pbracket_external(&ps, &q, &p).unwrap().neg().as_scalar();
            let want = if mu == 2 { g.clone() } else { Expr::zero() };
            assert_eq!(r, want);
        }
        let qf = ObservableForm::position(0, vec![Expr::sym(1), Expr::one()]);
        for mu in 0..3 {
            let q = DifferentialForm::scalar(c.dim(), Expr::sym(mu as u32));
            assert!(pbracket_external(&ps, &q, &qf).unwrap().is_zero());
        }
        // {θ, a} = da
        let t = pbracket_external(&ps, ps.theta(), &qf).unwrap();
        assert_eq!(t, qf.expand(&ps).unwrap().d());
    }

    #[test]
    fn density_bracket_for_scalar_field() {
        // {ℋω, P_{1,f}} = (−f ∂V/∂φ + ∂_α f p^α) ω
        let (c, ps) = ps21();
        let half = Rational::new(1.into(), 2.into());
        let phi = Expr::sym(c.y(0));
        let p = |a| Expr::sym(c.p1(a, 0).unwrap());
        let v = phi.pow(4).scale(&half);
        let h = Expr::sym(c.eps()) + (p(0).pow(2) - p(1).pow(2)).scale(&half) + v.clone();
        let f = &Expr::sym(0) * &Expr::sym(1);
        let r = bracket_with_density(&ps, &h, &ObservableForm::momentum(2, f.clone())).unwrap();
        let coef = -(&f * &v.diff(c.y(0))) + &f.diff(0) * &p(0) + &f.diff(1) * &p(1);
        assert_eq!(r, ps.volume().scale(&coef));
    }

    #[test]
    fn admissibility_dichotomy() {
        let (_, ps) = ps21();
        let g = Expr::sym(0) + Expr::int(2);
        assert!(
            is_admissible(
                &ps,
                &ObservableForm::position(0, vec![Expr::one(), g.clone()])
            )
            .unwrap()
            .admissible
        );
        assert!(
            is_admissible(&ps, &ObservableForm::momentum(2, g.clone()))
                .unwrap()
                .admissible
        );
        let a = is_admissible(&ps, &ObservableForm::momentum(1, g.clone())).unwrap();
        assert!(!a.admissible);
        assert_eq!(a.witness, Some((1, g)));
    }

    #[test]
    fn internal_bracket_is_antisymmetric() {
        let (_, ps) = ps21();
        let a = ObservableForm::momentum(2, Expr::sym(0));
        let b = ObservableForm::position(0, vec![Expr::sym(1), Expr::one()]);
        let ab = pbracket_internal(&ps, &a, &b).unwrap();
        let ba = pbracket_internal(&ps, &b, &a).unwrap();
        assert_eq!(ab, ba.neg());
        // {P_{i,g}, Q^{i,f}} = Σ f^α g ω_α
        let want = ps
            .volume()
            .interior(&VectorField::from_comps(
                ps.dim(),
                [(0, Expr::sym(1)), (1, Expr::one())],
            ))
            .unwrap()
            .scale(&Expr::sym(0));
        assert_eq!(ab, want);
    }

    #[test]
    fn omega_bracket_refuses_base_momentum() {
        let (c, ps) = ps21();
        let half = Rational::new(1.into(), 2.into());
        let p = |a| Expr::sym(c.p1(a, 0).unwrap());
        let h = Expr::sym(c.eps()) + (p(0).pow(2) + p(1).pow(2)).scale(&half);
        let bad = ObservableForm::momentum(0, Expr::one())
            .expand(&ps)
            .unwrap();
        assert!(matches!(
            omega_bracket(&ps, &h, &bad),
            Err(Error::NotAdmissible(_))
        ));
        let good = ObservableForm::momentum(2, Expr::sym(0))
            .expand(&ps)
            .unwrap();
        assert!(omega_bracket(&ps, &h, &good).is_ok());
    }
}
