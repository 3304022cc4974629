use super::chart::ChartSpec;
use super::form::{DifferentialForm, VectorField};
use crate::error::{Error, Result};
use crate::expr::Expr;
use std::sync::Arc;

/// A chart together with the volume weight `g(x)` of `ω = g dx¹∧…∧dxⁿ`,
/// and the forms built from it.
#[derive(Clone, Debug)]
pub struct PhaseSpace {
    chart: Arc<ChartSpec>,
    weight: Expr,
    volume: DifferentialForm,
    theta: DifferentialForm,
    omega: DifferentialForm,
}

impl PhaseSpace {
    pub fn new(chart: ChartSpec) -> Self {
        PhaseSpace::build(chart, Expr::one())
    }

    /// Volume-weighted variant: `θ̃ = gθ`, `Ω̃ = dθ̃`. `g` may depend on `x` only.
    pub fn weighted(chart: ChartSpec, g: Expr) -> Result<Self> {
        if g.is_zero() {
            return Err(Error::Model("volume weight is identically zero".into()));
        }
        if let Some(&s) = g.symbols().iter().find(|&&s| !chart.is_base(s as usize)) {
            return Err(Error::Model(format!(
                "volume weight depends on {}, not a base coordinate",
                chart.name(s)
            )));
        }
        Ok(PhaseSpace::build(chart, g))
    }

    fn build(chart: ChartSpec, weight: Expr) -> Self {
        let volume = volume_form(&chart, &weight);
        let theta = cartan_form_weighted(&chart, &weight);
        let omega = theta.d();
        PhaseSpace {
            chart: Arc::new(chart),
            weight,
            volume,
            theta,
            omega,
        }
    }

    pub fn chart(&self) -> &ChartSpec {
        &self.chart
    }
    pub fn dim(&self) -> usize {
        self.chart.dim()
    }
    pub fn weight(&self) -> &Expr {
        &self.weight
    }
    pub fn is_weighted(&self) -> bool {
        !self.weight.is_one()
    }
    /// `ω`.
    pub fn volume(&self) -> &DifferentialForm {
        &self.volume
    }
    /// `θ`.
    pub fn theta(&self) -> &DifferentialForm {
        &self.theta
    }
    /// `Ω = dθ`.
    pub fn pataplectic(&self) -> &DifferentialForm {
        &self.omega
    }

    /// `ω_α = ∂_α⌟ω`.
    pub fn omega_alpha(&self, alpha: usize) -> DifferentialForm {
        self.volume
            .interior(&VectorField::basis(self.dim(), alpha))
            .expect("volume form has degree n ≥ 1")
    }

    /// `ℋω` for a scalar `ℋ`.
    pub fn density(&self, h: &Expr) -> DifferentialForm {
        self.volume.scale(h)
    }
}

/// `g dx¹∧…∧dxⁿ`.
pub fn volume_form(chart: &ChartSpec, g: &Expr) -> DifferentialForm {
    let idx: Vec<usize> = (0..chart.n()).collect();
    DifferentialForm::monomial(chart.dim(), &idx, g.clone())
}

/// `θ = Σ_m p_m dq^{slots(m)}` over the chart's momenta (restricted sums).
pub fn cartan_form(chart: &ChartSpec) -> DifferentialForm {
    cartan_form_weighted(chart, &Expr::one())
}

pub fn cartan_form_weighted(chart: &ChartSpec, g: &Expr) -> DifferentialForm {
    let dim = chart.dim();
    let mut acc = DifferentialForm::zero(dim, chart.n());
    for (j, m) in chart.momenta().iter().enumerate() {
        let c = &Expr::sym(chart.momentum_sym(j)) * g;
        acc = acc.add(&DifferentialForm::monomial(dim, &m.slots, c));
    }
    acc
}

pub fn pataplectic_form(chart: &ChartSpec) -> DifferentialForm {
    cartan_form(chart).d()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::multiindex::canonicalize_raw;

    #[test]
    fn weyl_theta_two_dimensional() {
        let c = ChartSpec::weyl(2, 1).unwrap();
        let ps = PhaseSpace::new(c.clone());
        let (x1, x2, y, e) = (0, 1, 2, 3);
        let p1 = Expr::sym(c.p1(0, 0).unwrap());
        let p2 = Expr::sym(c.p1(1, 0).unwrap());
        let want = DifferentialForm::monomial(6, &[x1, x2], Expr::sym(e as u32))
            .add(&DifferentialForm::monomial(6, &[y, x2], p1))
            .add(&DifferentialForm::monomial(6, &[x1, y], p2));
        assert_eq!(ps.theta(), &want);
    }

    #[test]
    fn weyl_omega_two_dimensional() {
        // Ω = dε∧ω + Σ_α dp^α∧dy∧ω_α
        let c = ChartSpec::weyl(2, 1).unwrap();
        let ps = PhaseSpace::new(c.clone());
        let dim = c.dim();
        let y = DifferentialForm::dq(dim, 2);
        let mut want = DifferentialForm::dq(dim, 3).wedge(ps.volume());
        for a in 0..2 {
            let dp = DifferentialForm::dq(dim, c.p1(a, 0).unwrap() as usize);
            want = want.add(&dp.wedge(&y).wedge(&ps.omega_alpha(a)));
        }
        assert_eq!(ps.pataplectic(), &want);
        assert!(ps.pataplectic().d().is_zero());
    }

    #[test]
    fn string_chart_theta_has_degree_two_term() {
        let c = ChartSpec::full(2, 2).unwrap();
        let g = Expr::sym(0).pow(2) + Expr::one();
        let ps = PhaseSpace::weighted(c.clone(), g.clone()).unwrap();
        let p12 = c.p(&[0, 1], &[0, 1]).unwrap();
        let (y1, y2) = (c.y(0) as usize, c.y(1) as usize);
        assert_eq!(ps.theta().component(&[y1, y2]), &Expr::sym(p12) * &g);
    }

    #[test]
    fn weighted_omega_keeps_weight_derivatives() {
        let c = ChartSpec::weyl(2, 1).unwrap();
        let g = Expr::sym(0).pow(2) + Expr::int(2);
        let ps = PhaseSpace::weighted(c.clone(), g).unwrap();
        // dθ̃ carries ∂g/∂x¹ p² dx¹∧dx¹∧dy = 0 but ∂g/∂x¹ p¹ dx¹∧dy∧dx² ≠ 0
        let p1 = c.p1(0, 0).unwrap();
        let k = ps.pataplectic().component(&[0, 2, 1]);
        assert_eq!(k, (Expr::sym(0).scale_int(2) * Expr::sym(p1)).scale_int(1));
        assert!(PhaseSpace::weighted(c, Expr::sym(2)).is_err());
    }

    // Oracle: 1/p!² over unrestricted index sums with
    // ω^{i₁…}_{α₁…} = (dy^{i₁}∧∂_{α₁})⌟…⌟ω and p antisymmetric in both index sets.
    fn theta_unrestricted(c: &ChartSpec) -> DifferentialForm {
        let dim = c.dim();
        let vol = volume_form(c, &Expr::one());
        let mut acc = vol.scale(&Expr::sym(c.eps()));
        let tuples = |m: usize, p: usize| -> Vec<Vec<usize>> {
            let mut out: Vec<Vec<usize>> = vec![vec![]];
            for _ in 0..p {
                out = out
                    .into_iter()
                    .flat_map(|t| {
                        (0..m).map(move |i| {
                            let mut t = t.clone();
                            t.push(i);
                            t
                        })
                    })
                    .collect();
            }
            out
        };
        for &p in c.degrees().iter().filter(|&&p| p > 0) {
            let fact: i64 = (1..=p as i64).product();
            for al in tuples(c.n(), p) {
                for is in tuples(c.k(), p) {
                    let (sa, sgn_a) = canonicalize_raw(&al);
                    let (si, sgn_i) = canonicalize_raw(&is);
                    if sgn_a == 0 || sgn_i == 0 {
                        continue;
                    }
                    let mom = Expr::sym(c.p(&sa, &si).unwrap()).scale_int((sgn_a * sgn_i) as i64);
                    let mut w = vol.clone();
                    for s in (0..p).rev() {
                        let inner = w.interior(&VectorField::basis(dim, al[s])).unwrap();
                        w = DifferentialForm::dq(dim, c.n() + is[s]).wedge(&inner);
                    }
                    acc = acc.add(&w.scale(
                        &mom.scale(&crate::expr::Rational::new(1.into(), (fact * fact).into())),
                    ));
                }
            }
        }
        acc
    }

    #[test]
    fn restricted_sum_matches_unrestricted_sum() {
        for (n, k) in [(2, 1), (2, 2), (3, 1), (3, 2), (2, 3), (3, 3)] {
            let c = ChartSpec::full(n, k).unwrap();
            assert_eq!(cartan_form(&c), theta_unrestricted(&c), "chart ({n},{k})");
        }
    }
}
