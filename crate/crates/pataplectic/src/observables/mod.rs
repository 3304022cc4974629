//! Observable `(n−1)`-forms, the map `Ξ`, and their brackets.

mod bracket;
pub mod identities;
mod json;
mod nvector;
mod table;
mod xi;

pub use bracket::{
    bracket_with_density, is_admissible, omega_bracket, pbracket_external, pbracket_internal,
    Admissibility,
};
pub use json::ObservableJson;
pub use nvector::HamiltonianNVector;
pub use table::{bracket_table, BracketEntry, BracketFlag};
pub use xi::{xi_generic, xi_of, PataplecticVectorField};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::exterior::{DifferentialForm, MultiVectorField, PhaseSpace, VectorField};

/// One component `ζ^ν_J ∂/∂p_J ∧ ∂/∂q^ν` of a generalized position, `ν ∈ J`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZetaTerm {
    /// Increasing `n`-subset of the coordinates of `𝒳×𝒴` (0-based).
    pub index: Vec<usize>,
    /// Coordinate `ν`, an element of `index`.
    pub dir: usize,
    pub coeff: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObservableForm {
    /// `Q^{i,f} = y^i f⌟ω`, `f = Σ f^α(x) ∂_α`.
    Position {
        field: usize,
        f: Vec<Expr>,
    },
    /// `Q^ζ = ζ⌟Ω`.
    GeneralizedPosition {
        zeta: Vec<ZetaTerm>,
    },
    /// `P_{μ,g} = g ∂_μ⌟θ`.
    Momentum {
        mu: usize,
        g: Expr,
    },
    /// `P_ξ = ξ⌟θ`, `ξ` a vector field on `𝒳×𝒴` (components over `x` then `y`).
    GeneralizedMomentum {
        xi: Vec<Expr>,
    },
    /// `P*_{μ,g} = g ∂_μ⌟(θ − ℋω)`.
    StarMomentum {
        mu: usize,
        g: Expr,
        h: Expr,
    },
    /// `ℋω`.
    HamiltonianDensity {
        h: Expr,
    },
    /// `η = ℋω − θ`.
    Eta {
        h: Expr,
    },
    /// `η₀ = −∂_t⌟(θ − ℋω)` for the time axis `t`.
    EtaSlice {
        h: Expr,
        axis: usize,
    },
    Generic(DifferentialForm),
}

fn depends_only_on(e: &Expr, bound: usize) -> bool {
    e.symbols().iter().all(|&s| (s as usize) < bound)
}

impl ObservableForm {
    pub fn position(field: usize, f: Vec<Expr>) -> Self {
        ObservableForm::Position { field, f }
    }

    pub fn momentum(mu: usize, g: Expr) -> Self {
        ObservableForm::Momentum { mu, g }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ObservableForm::Position { .. } => "Q",
            ObservableForm::GeneralizedPosition { .. } => "Q_zeta",
            ObservableForm::Momentum { .. } => "P",
            ObservableForm::GeneralizedMomentum { .. } => "P_xi",
            ObservableForm::StarMomentum { .. } => "P_star",
            ObservableForm::HamiltonianDensity { .. } => "H_omega",
            ObservableForm::Eta { .. } => "eta",
            ObservableForm::EtaSlice { .. } => "eta0",
            ObservableForm::Generic(_) => "form",
        }
    }

    /// Check index ranges and that coefficient functions live on the right space.
    pub fn validate(&self, ps: &PhaseSpace) -> Result<()> {
        let c = ps.chart();
        let (n, k) = (c.n(), c.k());
        let nq = n + k;
        let bad = |what: &str| Err(Error::Input(what.to_string()));
        match self {
            ObservableForm::Position { field, f } => {
                if *field >= k {
                    return Err(Error::IndexOutOfRange {
                        index: field + 1,
                        dim: k,
                    });
                }
                if f.len() != n {
                    return bad(&format!("f needs {n} components, got {}", f.len()));
                }
                if !f.iter().all(|e| depends_only_on(e, n)) {
                    return bad("f must depend on base coordinates only");
                }
            }
            ObservableForm::GeneralizedPosition { zeta } => {
                for t in zeta {
                    if t.index.len() != n
                        || t.index.windows(2).any(|w| w[0] >= w[1])
                        || t.index.iter().any(|&i| i >= nq)
                        || !t.index.contains(&t.dir)
                    {
                        return bad(
                            "zeta index must be an increasing n-subset of 𝒳×𝒴 containing dir",
                        );
                    }
                    if !depends_only_on(&t.coeff, nq) {
                        return bad("zeta coefficients must depend on (x, y) only");
                    }
                    if c.momentum_by_sorted(&t.index).is_none() {
                        return Err(Error::InvalidChart(format!(
                            "chart lacks the momentum conjugate to {:?}",
                            t.index
                        )));
                    }
                }
            }
            ObservableForm::Momentum { mu, g } | ObservableForm::StarMomentum { mu, g, .. } => {
                if *mu >= nq {
                    return Err(Error::IndexOutOfRange {
                        index: mu + 1,
                        dim: nq,
                    });
                }
                if !depends_only_on(g, n) {
                    return bad("g must depend on base coordinates only");
                }
            }
            ObservableForm::GeneralizedMomentum { xi } => {
                if xi.len() != nq {
                    return bad(&format!("xi needs {nq} components, got {}", xi.len()));
                }
                if !xi.iter().all(|e| depends_only_on(e, nq)) {
                    return bad("xi must depend on (x, y) only");
                }
            }
            ObservableForm::EtaSlice { axis, .. } => {
                if *axis >= n {
                    return Err(Error::IndexOutOfRange {
                        index: axis + 1,
                        dim: n,
                    });
                }
            }
            ObservableForm::Generic(f) => {
                if f.dim() != ps.dim() {
                    return Err(Error::ChartMismatch {
                        left: f.dim(),
                        right: ps.dim(),
                    });
                }
            }
            ObservableForm::HamiltonianDensity { .. } | ObservableForm::Eta { .. } => {}
        }
        Ok(())
    }

    /// The concrete differential form.
    pub fn expand(&self, ps: &PhaseSpace) -> Result<DifferentialForm> {
        self.validate(ps)?;
        let dim = ps.dim();
        let c = ps.chart();
        let theta = ps.theta();
        Ok(match self {
            ObservableForm::Position { field, f } => {
                let fv = VectorField::from_comps(dim, f.iter().cloned().enumerate());
                ps.volume().interior(&fv)?.scale(&Expr::sym(c.y(*field)))
            }
            ObservableForm::GeneralizedPosition { zeta } => {
                let mut acc = DifferentialForm::zero(dim, c.n() - 1);
                for t in zeta {
                    let (pm, sign) = c.momentum_by_sorted(&t.index).expect("validated");
                    let x = MultiVectorField::decomposable(&[
                        VectorField::basis(dim, pm as usize),
                        VectorField::basis(dim, t.dir),
                    ]);
                    let part = ps.pataplectic().interior_multi(&x)?;
                    acc = acc.add(&part.scale(&t.coeff.scale_int(sign as i64)));
                }
                acc
            }
            ObservableForm::Momentum { mu, g } => {
                theta.interior(&VectorField::basis(dim, *mu))?.scale(g)
            }
            ObservableForm::GeneralizedMomentum { xi } => theta.interior(
                &VectorField::from_comps(dim, xi.iter().cloned().enumerate()),
            )?,
            ObservableForm::StarMomentum { mu, g, h } => theta
                .sub(&ps.density(h))
                .interior(&VectorField::basis(dim, *mu))?
                .scale(g),
            ObservableForm::HamiltonianDensity { h } => ps.density(h),
            ObservableForm::Eta { h } => ps.density(h).sub(theta),
            ObservableForm::EtaSlice { h, axis } => theta
                .sub(&ps.density(h))
                .interior(&VectorField::basis(dim, *axis))?
                .neg(),
            ObservableForm::Generic(f) => f.clone(),
        })
    }

    /// `ζ` for `Q^{i,f}`: `y^i f^α ∂/∂ε ∧ ∂/∂x^α`.
    pub fn position_as_zeta(ps: &PhaseSpace, field: usize, f: &[Expr]) -> Vec<ZetaTerm> {
        let c = ps.chart();
        let base: Vec<usize> = (0..c.n()).collect();
        f.iter()
            .enumerate()
            .filter(|(_, fa)| !fa.is_zero())
            .map(|(a, fa)| ZetaTerm {
                index: base.clone(),
                dir: a,
                coeff: fa * &Expr::sym(c.y(field)),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::ChartSpec;

    #[test]
    fn position_via_zeta_matches_definition() {
        for (n, k) in [(2, 1), (3, 1), (2, 2)] {
            let ps = PhaseSpace::new(ChartSpec::full(n, k).unwrap());
            let f: Vec<Expr> = (0..n)
                .map(|a| Expr::sym(a as u32).pow(2) + Expr::int(a as i64))
                .collect();
            let q = ObservableForm::position(0, f.clone()).expand(&ps).unwrap();
            let z = ObservableForm::GeneralizedPosition {
                zeta: ObservableForm::position_as_zeta(&ps, 0, &f),
            }
            .expand(&ps)
            .unwrap();
            assert_eq!(q, z);
        }
    }

    #[test]
    fn star_momentum_on_fibre_direction_equals_momentum() {
        let ps = PhaseSpace::new(ChartSpec::weyl(2, 1).unwrap());
        let h = Expr::sym(3) + Expr::sym(2).pow(2);
        let g = Expr::sym(0);
        let p = ObservableForm::momentum(2, g.clone()).expand(&ps).unwrap();
        let ps_ = ObservableForm::StarMomentum { mu: 2, g, h }
            .expand(&ps)
            .unwrap();
        assert_eq!(p, ps_);
    }

    #[test]
    fn validation_rejects_bad_coefficients() {
        let ps = PhaseSpace::new(ChartSpec::weyl(2, 1).unwrap());
        assert!(
            ObservableForm::position(0, vec![Expr::sym(2), Expr::zero()])
                .expand(&ps)
                .is_err()
        );
        assert!(ObservableForm::position(1, vec![Expr::one(), Expr::zero()])
            .expand(&ps)
            .is_err());
        assert!(ObservableForm::momentum(7, Expr::one())
            .expand(&ps)
            .is_err());
    }
}
