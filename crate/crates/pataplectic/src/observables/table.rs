use super::bracket::{pbracket_external, pbracket_internal};
use super::nvector::subsets;
use super::{ObservableForm, ZetaTerm};
use crate::error::Result;
use crate::expr::Expr;
use crate::exterior::{canonicalize_raw, DifferentialForm, PhaseSpace, VectorField};
use crate::symsolve::ZeroCtx;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketFlag {
    Match,
    /// Matches a stated value that contains a nonzero exact term.
    MatchExactTerm,
    Mismatch,
    /// No closed value is stated for this pair on this chart.
    NotStated,
}

#[derive(Clone, Debug)]
pub struct BracketEntry {
    pub left: String,
    pub right: String,
    pub result: DifferentialForm,
    pub expected: Option<DifferentialForm>,
    pub flag: BracketFlag,
}

/// Sample functions for the table: two base vector fields and two weights.
#[derive(Clone, Debug)]
pub struct TableInputs {
    pub f: Vec<Expr>,
    pub f2: Vec<Expr>,
    pub g: Expr,
    pub g2: Expr,
    pub time_axis: usize,
}

impl TableInputs {
    /// Polynomial defaults in the base coordinates.
    pub fn default_for(n: usize) -> Self {
        let x = |a: usize| Expr::sym(a as u32);
        TableInputs {
            f: (0..n)
                .map(|a| x(a).pow(2) + Expr::int(a as i64 + 1))
                .collect(),
            f2: (0..n)
                .map(|a| &x((a + 1) % n) * &x(a) - Expr::int(2))
                .collect(),
            g: x(0) + x(n - 1).pow(2) + Expr::one(),
            g2: &x(0) * &x(n - 1) + Expr::int(3),
            time_axis: 0,
        }
    }
}

enum Pair {
    Internal(ObservableForm, ObservableForm),
    External(&'static str, DifferentialForm, ObservableForm),
}

fn label(a: &ObservableForm, tag: &str) -> String {
    match a {
        ObservableForm::Position { field, .. } => format!("Q^{{{},{tag}}}", field + 1),
        ObservableForm::Momentum { mu, .. } => format!("P_{{{},{tag}}}", mu + 1),
        other => other.name().to_string(),
    }
}

/// `{P_ξ, Q^ζ} = ξ⌟Σ_I Σ_α Σ_ν ∂_{q^{I_α}} ζ^ν_{I[α→ν]} dq^I`.
pub(crate) fn momentum_position_expected(
    ps: &PhaseSpace,
    xi: &VectorField,
    zeta: &[ZetaTerm],
) -> Result<DifferentialForm> {
    let c = ps.chart();
    let (n, nq, dim) = (c.n(), c.n() + c.k(), ps.dim());
    let mut table: BTreeMap<(Vec<usize>, usize), Expr> = BTreeMap::new();
    for t in zeta {
        let e = table
            .entry((t.index.clone(), t.dir))
            .or_insert_with(Expr::zero);
        *e = &*e + &t.coeff;
    }
    let value = |tuple: &[usize], nu: usize| -> Expr {
        if !tuple.contains(&nu) {
            return Expr::zero();
        }
        let (sorted, s) = canonicalize_raw(tuple);
        match table.get(&(sorted, nu)) {
            Some(e) if s != 0 => e.scale_int(s as i64),
            _ => Expr::zero(),
        }
    };
    let mut acc = DifferentialForm::zero(dim, n);
    for idx in subsets(nq, n) {
        let mut coef = Expr::zero();
        for a in 0..n {
            for nu in 0..nq {
                let mut tup = idx.clone();
                tup[a] = nu;
                coef = coef + value(&tup, nu).diff(idx[a] as u32);
            }
        }
        if !coef.is_zero() {
            acc = acc.add(&DifferentialForm::monomial(dim, &idx, coef));
        }
    }
    acc.interior(xi)
}

/// Every pairwise bracket among `Q^{i,f}`, `P_{μ,g}`, `η₀`, `ℋω`, with stated values flagged.
pub fn bracket_table(ps: &PhaseSpace, h: &Expr, inp: &TableInputs) -> Result<Vec<BracketEntry>> {
    let c = ps.chart();
    let (n, k, dim) = (c.n(), c.k(), ps.dim());
    let t = inp.time_axis;
    let weyl = !ps.is_weighted() && c.degrees() == [0, 1];
    let h_eps = h.diff(c.eps());
    // the η₀ values assume ∂ℋ/∂ε = 1
    let eta_stated = weyl && h_eps.is_one();
    let plain = !ps.is_weighted();

    let mut pairs: Vec<(Pair, Option<DifferentialForm>, bool)> = Vec::new();
    let q = |i: usize, f: &Vec<Expr>| ObservableForm::position(i, f.clone());
    let p = |mu: usize, g: &Expr| ObservableForm::momentum(mu, g.clone());

    for i in 0..k {
        for j in 0..k {
            pairs.push((
                Pair::Internal(q(i, &inp.f), q(j, &inp.f2)),
                Some(DifferentialForm::zero(dim, n - 1)),
                false,
            ));
        }
    }
    for mu in 0..n + k {
        for nu in 0..n + k {
            // P_{[ξ,ξ̃]} + d(ξ̃⌟ξ⌟θ)
            let xi = VectorField::basis(dim, mu).scale(&inp.g);
            let xi2 = VectorField::basis(dim, nu).scale(&inp.g2);
            let expected = if plain {
                let comm = xi.bracket(&xi2);
                let pc = ps.theta().interior(&comm)?;
                let ex = ps.theta().interior(&xi)?.interior(&xi2)?.d();
                let exact = !ex.is_zero();
                Some((pc.add(&ex), exact))
            } else {
                None
            };
            let exact = expected.as_ref().map(|e| e.1).unwrap_or(false);
            pairs.push((
                Pair::Internal(p(mu, &inp.g), p(nu, &inp.g2)),
                expected.map(|e| e.0),
                exact,
            ));
        }
    }
    for mu in 0..n + k {
        for j in 0..k {
            let xi = VectorField::basis(dim, mu).scale(&inp.g);
            let zeta = ObservableForm::position_as_zeta(ps, j, &inp.f);
            let expected = if plain {
                Some(momentum_position_expected(ps, &xi, &zeta)?)
            } else {
                None
            };
            pairs.push((Pair::Internal(p(mu, &inp.g), q(j, &inp.f)), expected, false));
        }
    }

    let eta0 = ObservableForm::EtaSlice {
        h: h.clone(),
        axis: t,
    }
    .expand(ps)?;
    let omega0 = ps.omega_alpha(t);
    for j in 0..k {
        let expected = eta_stated.then(|| {
            let mut e = DifferentialForm::zero(dim, n - 1);
            for a in 0..n {
                let dp = h.diff(c.p1(a, j).unwrap());
                e = e.add(&omega0.scale(&(&inp.f[a] * &dp)));
                if a != t {
                    let inner = omega0.interior(&VectorField::basis(dim, a)).unwrap();
                    e = e.sub(
                        &DifferentialForm::dq(dim, c.y(j) as usize)
                            .wedge(&inner)
                            .scale(&inp.f[a]),
                    );
                }
            }
            e
        });
        pairs.push((
            Pair::External("eta0", eta0.clone(), q(j, &inp.f)),
            expected,
            false,
        ));
    }
    for mu in 0..n + k {
        let expected = if eta_stated && mu >= n {
            let j = mu - n;
            let mut e = omega0.scale(&-(&inp.g * &h.diff(c.y(j))));
            for a in (0..n).filter(|&a| a != t) {
                let inner = omega0.interior(&VectorField::basis(dim, a)).unwrap();
                let dp = DifferentialForm::dq(dim, c.p1(a, j).unwrap() as usize);
                e = e.sub(&dp.wedge(&inner).scale(&inp.g));
            }
            Some(e)
        } else {
            None
        };
        pairs.push((
            Pair::External("eta0", eta0.clone(), p(mu, &inp.g)),
            expected,
            false,
        ));
    }
    let hw = ps.density(h);
    for j in 0..k {
        let expected = plain.then(|| {
            let yj = Expr::sym(c.y(j));
            let div: Expr = (0..n).map(|a| inp.f[a].diff(a as u32)).sum();
            let mut coef = &(&yj * &div) * &h_eps;
            for a in 0..n {
                if let Some(pj) = c.p1(a, j) {
                    coef = coef + &inp.f[a] * &h.diff(pj);
                }
            }
            ps.volume().scale(&coef)
        });
        pairs.push((
            Pair::External("H_omega", hw.clone(), q(j, &inp.f)),
            expected,
            false,
        ));
    }
    for mu in 0..n + k {
        let expected = if weyl && mu >= n {
            let j = mu - n;
            let mut coef = -(&inp.g * &h.diff(c.y(j)));
            for a in 0..n {
                coef = coef + &(&inp.g.diff(a as u32) * &Expr::sym(c.p1(a, j).unwrap())) * &h_eps;
            }
            Some(ps.volume().scale(&coef))
        } else {
            None
        };
        pairs.push((
            Pair::External("H_omega", hw.clone(), p(mu, &inp.g)),
            expected,
            false,
        ));
    }

    pairs
        .into_par_iter()
        .enumerate()
        .map(|(idx, (pair, expected, exact))| {
            let (left, right, result) = match pair {
                Pair::Internal(a, b) => {
                    let r = pbracket_internal(ps, &a, &b)?;
                    let lt = if matches!(a, ObservableForm::Position { .. }) {
                        "f"
                    } else {
                        "g"
                    };
                    (
                        label(&a, lt),
                        label(
                            &b,
                            if lt == "f" {
                                "f~"
                            } else if matches!(b, ObservableForm::Momentum { .. }) {
                                "g~"
                            } else {
                                "f"
                            },
                        ),
                        r,
                    )
                }
                Pair::External(name, lam, b) => {
                    let r = pbracket_external(ps, &lam, &b)?;
                    let tag = if matches!(b, ObservableForm::Position { .. }) {
                        "f"
                    } else {
                        "g"
                    };
                    (name.to_string(), label(&b, tag), r)
                }
            };
            let flag = match &expected {
                None => BracketFlag::NotStated,
                Some(e) => {
                    let mut zc = ZeroCtx::new(c.n_symbols(), idx as u64);
                    let d = result.sub(e);
                    if d.terms().values().all(|v| zc.is_zero(v)) {
                        if exact {
                            BracketFlag::MatchExactTerm
                        } else {
                            BracketFlag::Match
                        }
                    } else {
                        BracketFlag::Mismatch
                    }
                }
            };
            Ok(BracketEntry {
                left,
                right,
                result,
                expected,
                flag,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Rational;
    use crate::exterior::ChartSpec;

    fn kg_h(c: &ChartSpec) -> Expr {
        let half = Rational::new(1.into(), 2.into());
        let p = |a| Expr::sym(c.p1(a, 0).unwrap());
        Expr::sym(c.eps())
            + (p(0).pow(2) - p(1).pow(2)).scale(&half)
            + Expr::sym(c.y(0)).pow(2).scale(&half)
    }

    #[test]
    fn weyl_table_has_no_mismatch() {
        let c = ChartSpec::weyl(2, 1).unwrap();
        let ps = PhaseSpace::new(c.clone());
        let tab = bracket_table(&ps, &kg_h(&c), &TableInputs::default_for(2)).unwrap();
        for e in &tab {
            assert_ne!(e.flag, BracketFlag::Mismatch, "{} , {}", e.left, e.right);
        }
        assert!(tab
            .iter()
            .any(|e| e.flag == BracketFlag::Match && e.left.starts_with("P_{3")));
    }

    #[test]
    fn full_chart_table_fibre_momenta_give_exact_term() {
        let c = ChartSpec::full(2, 2).unwrap();
        let ps = PhaseSpace::new(c.clone());
        let h = Expr::sym(c.eps());
        let tab = bracket_table(&ps, &h, &TableInputs::default_for(2)).unwrap();
        assert!(tab.iter().all(|e| e.flag != BracketFlag::Mismatch));
        let pp = tab
            .iter()
            .find(|e| e.left == "P_{3,g}" && e.right == "P_{4,g~}")
            .unwrap();
        assert_eq!(pp.flag, BracketFlag::MatchExactTerm);
    }
}
