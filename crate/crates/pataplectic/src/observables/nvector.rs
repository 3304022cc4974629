use crate::error::{Error, Result};
use crate::expr::{Expr, Rational, Sym};
use crate::exterior::{DifferentialForm, MultiVectorField, PhaseSpace, VectorField};
use crate::symsolve::{reduce, Row, ZeroCtx};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// A decomposable `ℋ`-Hamiltonian n-vector `X = (1/g) X₁∧…∧X_n` with
/// `dx^β(X_α) = δ^β_α` and `(−1)ⁿ X⌟Ω = dℋ` modulo `dx¹,…,dxⁿ`.
#[derive(Clone, Debug)]
pub struct HamiltonianNVector {
    factors: Vec<VectorField>,
    inv_weight: Expr,
}

fn contract_full(form: &DifferentialForm, factors: &[VectorField]) -> Result<Expr> {
    let mut f = form.clone();
    for x in factors {
        f = f.interior(x)?;
    }
    Ok(f.as_scalar())
}

/// Split an expression that is affine in `unknowns` into coefficients and constant part.
fn linearize(e: &Expr, unknowns: &[Sym]) -> (Row, Expr) {
    let mut row = Row::new();
    for (j, &u) in unknowns.iter().enumerate() {
        let d = e.diff(u);
        if !d.is_zero() {
            row.insert(j, d);
        }
    }
    let constant = e.subs(&|s| unknowns.contains(&s).then(Expr::zero));
    (row, constant)
}

fn random_rational<R: Rng>(rng: &mut R) -> Expr {
    let num: i64 = rng.gen_range(-9..=9);
    let den: i64 = rng.gen_range(1..=4);
    Expr::constant(Rational::new(num.into(), den.into()))
}

impl HamiltonianNVector {
    /// Complete `X` for `ℋ = h`; components left free by the Hamiltonian
    /// condition are set to seeded random rationals.
    pub fn complete(ps: &PhaseSpace, h: &Expr, seed: u64) -> Result<Self> {
        let c = ps.chart();
        let (n, k, dim) = (c.n(), c.k(), ps.dim());
        let nm = c.momenta().len();
        let v_sym = |i: usize, a: usize| c.v(i, a);
        let p_base = c.n_symbols() as Sym;
        let p_sym = |a: usize, m: usize| p_base + (a * nm + m) as Sym;
        let n_all = c.n_symbols() + n * nm;

        let factors: Vec<VectorField> = (0..n)
            .map(|a| {
                let mut x = VectorField::basis(dim, a);
                for i in 0..k {
                    x.set(c.y(i) as usize, Expr::sym(v_sym(i, a)));
                }
                for m in 0..nm {
                    x.set(c.momentum_sym(m) as usize, Expr::sym(p_sym(a, m)));
                }
                x
            })
            .collect();
        let mut f = ps.pataplectic().clone();
        for x in &factors {
            f = f.interior(x)?;
        }
        let sign = if n % 2 == 0 { 1 } else { -1 };
        let inv_g = ps.weight().recip();
        let f = f.scale(&inv_g.scale_int(sign));
        let residual = |coord: usize| -> Expr { &f.component(&[coord]) - &h.diff(coord as u32) };

        let mut zc = ZeroCtx::new(n_all, seed ^ 0x9e37);
        // velocities from the degree-1 momentum equations
        let v_unknowns: Vec<Sym> = (0..k)
            .flat_map(|i| (0..n).map(move |a| (i, a)))
            .map(|(i, a)| v_sym(i, a))
            .collect();
        let mut rows = Vec::new();
        for (m, mom) in c.momenta().iter().enumerate() {
            if mom.degree() == 1 {
                let (row, c0) = linearize(&residual(c.momentum_sym(m) as usize), &v_unknowns);
                rows.push((row, -c0));
            }
        }
        let red = reduce(rows, v_unknowns.len(), &mut zc);
        if !red.is_consistent() || !red.free.is_empty() {
            return Err(Error::Model(
                "velocity part of the Hamiltonian n-vector is not determined by ℋ".into(),
            ));
        }
        let v_vals = red.assign(v_unknowns.len(), &BTreeMap::new());
        let v_map: BTreeMap<Sym, Expr> = v_unknowns.iter().copied().zip(v_vals).collect();
        let sub_v = |e: &Expr| e.subs(&|s| v_map.get(&s).cloned());

        for (m, mom) in c.momenta().iter().enumerate() {
            let r = sub_v(&residual(c.momentum_sym(m) as usize));
            if !zc.is_zero(&r) {
                return Err(Error::Model(format!(
                    "no Hamiltonian n-vector: the {} equation fails (degree {} momentum)",
                    c.name(c.momentum_sym(m)),
                    mom.degree()
                )));
            }
        }

        // momentum components from the fibre equations
        let p_unknowns: Vec<Sym> = (0..n)
            .flat_map(|a| (0..nm).map(move |m| (a, m)))
            .map(|(a, m)| p_sym(a, m))
            .collect();
        let mut rows = Vec::new();
        for i in 0..k {
            let r = sub_v(&residual(c.y(i) as usize));
            let (row, c0) = linearize(&r, &p_unknowns);
            rows.push((row, -c0));
        }
        let red = reduce(rows, p_unknowns.len(), &mut zc);
        if !red.is_consistent() {
            return Err(Error::Model(
                "fibre part of the Hamiltonian condition is inconsistent".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let free: BTreeMap<usize, Expr> = red
            .free
            .iter()
            .map(|&j| (j, random_rational(&mut rng)))
            .collect();
        let p_vals = red.assign(p_unknowns.len(), &free);
        let p_map: BTreeMap<Sym, Expr> = p_unknowns.iter().copied().zip(p_vals).collect();

        let factors = factors
            .into_iter()
            .map(|x| {
                VectorField::from_comps(
                    dim,
                    x.comps().iter().map(|(cc, e)| {
                        let e = sub_v(e).subs(&|s| p_map.get(&s).cloned());
                        (*cc, e)
                    }),
                )
            })
            .collect();
        Ok(HamiltonianNVector {
            factors,
            inv_weight: inv_g,
        })
    }

    pub fn factors(&self) -> &[VectorField] {
        &self.factors
    }

    /// `X⌟F` for an n-form `F`.
    pub fn contract(&self, form: &DifferentialForm) -> Result<Expr> {
        Ok(&contract_full(form, &self.factors)? * &self.inv_weight)
    }

    /// `X♯λ = Σ_{α₁<…<α_{n−p}} X⌟(dx^{α…}∧dλ) ∂_{α…}⌟ω` for a `(p−1)`-form `λ`.
    pub fn sharp(&self, ps: &PhaseSpace, lambda: &DifferentialForm) -> Result<DifferentialForm> {
        let n = ps.chart().n();
        let dim = ps.dim();
        let p = lambda.degree() + 1;
        if p > n {
            return Err(Error::Degree(format!(
                "X♯λ needs deg λ ≤ n − 1, got {}",
                lambda.degree()
            )));
        }
        let dl = lambda.d();
        let mut acc = DifferentialForm::zero(dim, p);
        for alphas in subsets(n, n - p) {
            let dxa = DifferentialForm::monomial(dim, &alphas, Expr::one());
            let s = self.contract(&dxa.wedge(&dl))?;
            if s.is_zero() {
                continue;
            }
            let part = if alphas.is_empty() {
                ps.volume().clone()
            } else {
                let basis: Vec<VectorField> =
                    alphas.iter().map(|&a| VectorField::basis(dim, a)).collect();
                ps.volume()
                    .interior_multi(&MultiVectorField::decomposable(&basis))?
            };
            acc = acc.add(&part.scale(&s));
        }
        Ok(acc)
    }
}

pub(crate) fn subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..p {
        let mut next = Vec::new();
        for s in out {
            let start = s.last().map(|l| l + 1).unwrap_or(0);
            for i in start..n {
                let mut t = s.clone();
                t.push(i);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::ChartSpec;

    #[test]
    fn hamiltonian_condition_holds_mod_dx() {
        for (n, k) in [(2, 1), (3, 1), (2, 2)] {
            let c = ChartSpec::full(n, k).unwrap();
            let ps = PhaseSpace::new(c.clone());
            // ℋ = ε + ½ Σ (p^α_i)² + y₁²
            let mut h = Expr::sym(c.eps()) + Expr::sym(c.y(0)).pow(2);
            for a in 0..n {
                for i in 0..k {
                    h = h + Expr::sym(c.p1(a, i).unwrap())
                        .pow(2)
                        .scale(&Rational::new(1.into(), 2.into()));
                }
            }
            let res = HamiltonianNVector::complete(&ps, &h, 3);
            if (n, k) == (2, 2) {
                // ∂ℋ/∂p^{12}_{12} = 0 contradicts the minor det V ≠ 0
                assert!(res.is_err());
                continue;
            }
            let x = res.unwrap();
            let mv = MultiVectorField::decomposable(x.factors());
            let f = ps.pataplectic().interior_multi(&mv).unwrap();
            let sign = if n % 2 == 0 { 1 } else { -1 };
            for coord in n..c.dim() {
                let lhs = f.component(&[coord]).scale_int(sign);
                assert_eq!(
                    lhs,
                    h.diff(coord as u32),
                    "coordinate {}",
                    c.name(coord as u32)
                );
            }
        }
    }

    #[test]
    fn sharp_of_position_coordinate() {
        // {ℋω, y}_ω = Σ_α ∂ℋ/∂p^α dx^α
        let c = ChartSpec::weyl(2, 1).unwrap();
        let ps = PhaseSpace::new(c.clone());
        let p = |a| Expr::sym(c.p1(a, 0).unwrap());
        let h = Expr::sym(c.eps())
            + (p(0).pow(2) - p(1).pow(2)).scale(&Rational::new(1.into(), 2.into()));
        let x = HamiltonianNVector::complete(&ps, &h, 1).unwrap();
        let got = x
            .sharp(&ps, &DifferentialForm::scalar(c.dim(), Expr::sym(c.y(0))))
            .unwrap();
        let want = DifferentialForm::monomial(c.dim(), &[0], h.diff(c.p1(0, 0).unwrap())).add(
            &DifferentialForm::monomial(c.dim(), &[1], h.diff(c.p1(1, 0).unwrap())),
        );
        assert_eq!(got, want);
    }
}
