//! The Legendre correspondence `(q,v,w) ↔ (q,p)` generated by `W = ⟨p,z⟩ − L`.
//!
//! Points are flat arrays indexed by chart symbol id: `x`, `y`, momenta (ε
//! first) and velocities `v^i_α` at `dim + i·n + α`.

use crate::error::{Error, Result};
use crate::expr::{Compiled, Expr, Sym};
use crate::exterior::{cartan_form, ChartSpec, VectorField};
use crate::linalg::{condition_number, solve, symbolic_solve};
use crate::symsolve::ZeroCtx;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Hessians with a larger condition number are treated as singular.
pub const DOMAIN_COND_LIMIT: f64 = 1e12;

#[derive(Clone, Copy, Debug)]
pub struct InvertOpts {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InvertOpts {
    fn default() -> Self {
        InvertOpts {
            tol: 1e-12,
            max_iter: 50,
        }
    }
}

/// A flat point with every chart symbol, velocities included.
pub fn chart_point(chart: &ChartSpec, q: &[f64], momenta: &[f64], v: &[f64]) -> Vec<f64> {
    let mut pt = vec![0.0; chart.n_symbols()];
    let nq = chart.n() + chart.k();
    pt[..q.len().min(nq)].copy_from_slice(&q[..q.len().min(nq)]);
    let m0 = nq;
    pt[m0..m0 + momenta.len()].copy_from_slice(momenta);
    let v0 = chart.dim();
    pt[v0..v0 + v.len()].copy_from_slice(v);
    pt
}

#[derive(Clone, Debug)]
pub struct LagrangianModel {
    chart: ChartSpec,
    l: Expr,
    pairing: Expr,
    generator: Expr,
    quadratic: bool,
    vsyms: Vec<Sym>,
    c_l: Compiled,
    c_w: Compiled,
    c_dl_dv: Vec<Compiled>,
    c_dl_dq: Vec<Compiled>,
    c_grad_w: Vec<Compiled>,
    c_hess_w: Vec<Vec<Compiled>>,
    c_pair_dv: Vec<Compiled>,
    c_pair_dp: Vec<Compiled>,
    /// `⟨p, z₁∧…∧∂_β (slot α)∧…∧z_n⟩`, indexed `[α][β]`.
    c_tensor: Vec<Vec<Compiled>>,
}

/// `⟨p, z⟩` with `z_α = ∂_α + v^i_α ∂_{y^i}`, optionally replacing slot `α` by `∂_β`.
fn pairing_with(chart: &ChartSpec, replace: Option<(usize, usize)>) -> Expr {
    let dim = chart.dim();
    let mut f = cartan_form(chart);
    for a in 0..chart.n() {
        let z = match replace {
            Some((ra, b)) if ra == a => VectorField::basis(dim, b),
            _ => {
                let mut z = VectorField::basis(dim, a);
                for i in 0..chart.k() {
                    z.set(chart.y(i) as usize, Expr::sym(chart.v(i, a)));
                }
                z
            }
        };
        f = f.interior(&z).expect("dimension matches");
    }
    f.as_scalar()
}

impl LagrangianModel {
    /// `l` may depend on `x`, `y` and the velocities only.
    pub fn new(chart: ChartSpec, l: Expr) -> Result<Self> {
        let nq = chart.n() + chart.k();
        if let Some(&s) = l
            .symbols()
            .iter()
            .find(|&&s| (s as usize) >= nq && (s as usize) < chart.dim())
        {
            return Err(Error::Model(format!(
                "Lagrangian depends on the momentum {}",
                chart.name(s)
            )));
        }
        let vsyms = chart.velocity_syms();
        let pairing = pairing_with(&chart, None);
        let generator = &pairing - &l;
        let quadratic = l.polynomial_degree_in(&vsyms).is_some_and(|d| d <= 2)
            && pairing.polynomial_degree_in(&vsyms).is_some_and(|d| d <= 2);
        let grad: Vec<Expr> = vsyms.iter().map(|&s| generator.diff(s)).collect();
        let hess: Vec<Vec<Compiled>> = grad
            .iter()
            .map(|g| vsyms.iter().map(|&s| g.diff(s).compile()).collect())
            .collect();
        let c_tensor = (0..chart.n())
            .map(|a| {
                (0..chart.n())
                    .map(|b| pairing_with(&chart, Some((a, b))).compile())
                    .collect()
            })
            .collect();
        Ok(LagrangianModel {
            c_l: l.compile(),
            c_w: generator.compile(),
            c_dl_dv: vsyms.iter().map(|&s| l.diff(s).compile()).collect(),
            c_dl_dq: (0..nq as Sym).map(|s| l.diff(s).compile()).collect(),
            c_grad_w: grad.iter().map(|g| g.compile()).collect(),
            c_hess_w: hess,
            c_pair_dv: vsyms.iter().map(|&s| pairing.diff(s).compile()).collect(),
            c_pair_dp: (nq..chart.dim())
                .map(|s| pairing.diff(s as Sym).compile())
                .collect(),
            c_tensor,
            chart,
            l,
            pairing,
            generator,
            quadratic,
            vsyms,
        })
    }

    pub fn chart(&self) -> &ChartSpec {
        &self.chart
    }
    pub fn lagrangian(&self) -> &Expr {
        &self.l
    }
    /// `⟨p, z⟩`.
    pub fn pairing(&self) -> &Expr {
        &self.pairing
    }
    /// `W(q, v, p) = ⟨p, z⟩ − L(q, v)`.
    pub fn generator(&self) -> &Expr {
        &self.generator
    }
    pub fn is_quadratic(&self) -> bool {
        self.quadratic
    }
    pub fn velocity_syms(&self) -> &[Sym] {
        &self.vsyms
    }

    pub fn l_value(&self, pt: &[f64]) -> f64 {
        self.c_l.eval(pt)
    }
    pub fn dl_dv(&self, pt: &[f64]) -> Vec<f64> {
        self.c_dl_dv.iter().map(|c| c.eval(pt)).collect()
    }
    pub fn dl_dq(&self, pt: &[f64]) -> Vec<f64> {
        self.c_dl_dq.iter().map(|c| c.eval(pt)).collect()
    }
    pub fn w_value(&self, pt: &[f64]) -> f64 {
        self.c_w.eval(pt)
    }
    /// `∂W/∂v` in velocity order `i·n + α`.
    pub fn grad_w(&self, pt: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.c_grad_w.len(),
            self.c_grad_w.iter().map(|c| c.eval(pt)),
        )
    }
    pub fn hess_w(&self, pt: &[f64]) -> DMatrix<f64> {
        let m = self.c_hess_w.len();
        DMatrix::from_fn(m, m, |r, c| self.c_hess_w[r][c].eval(pt))
    }

    /// Forward map on the chart: `p^α_i` from `∂W/∂v = 0`, `ε` from `W = w`.
    /// Momenta of degree ≥ 2 are free in the correspondence and read from `pt`.
    pub fn forward(&self, pt: &[f64], w: f64) -> Vec<f64> {
        let c = &self.chart;
        let mut out = pt.to_vec();
        out[c.eps() as usize] = 0.0;
        for i in 0..c.k() {
            for a in 0..c.n() {
                out[c.p1(a, i).map(|s| s as usize).unwrap_or(0)] = 0.0;
            }
        }
        let has_p1 = c.degrees().contains(&1);
        // higher-degree contribution to ∂⟨p,z⟩/∂v with ε = p^α_i = 0
        let hi: Vec<f64> = self.c_pair_dv.iter().map(|e| e.eval(&out)).collect();
        let dl = self.dl_dv(pt);
        if has_p1 {
            for i in 0..c.k() {
                for a in 0..c.n() {
                    let j = i * c.n() + a;
                    out[c.p1(a, i).unwrap() as usize] = dl[j] - hi[j];
                }
            }
        }
        let pair0 = self.pairing_value(&out);
        out[c.eps() as usize] = w + self.l_value(pt) - pair0;
        out
    }

    fn pairing_value(&self, pt: &[f64]) -> f64 {
        self.c_w.eval(pt) + self.c_l.eval(pt)
    }

    /// `S^α_β = δ^α_β L − ∂L/∂v^i_α v^i_β`.
    pub fn stress_energy(&self, pt: &[f64]) -> DMatrix<f64> {
        let (n, k) = (self.chart.n(), self.chart.k());
        let l = self.l_value(pt);
        let dl = self.dl_dv(pt);
        let v0 = self.chart.dim();
        DMatrix::from_fn(n, n, |a, b| {
            let mut s = if a == b { l } else { 0.0 };
            for i in 0..k {
                s -= dl[i * n + a] * pt[v0 + i * n + b];
            }
            s
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Inversion {
    pub v: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub condition: f64,
    /// `∥∂W/∂v∥∞` after each accepted step.
    pub history: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct HamiltonianModel {
    lag: LagrangianModel,
    symbolic: Option<Expr>,
    velocity: Option<Vec<Expr>>,
    c_h: Option<Compiled>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DhReport {
    pub dh_deps: f64,
    pub max_dp_residual: f64,
    pub max_dq_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointVerdict {
    pub condition: f64,
    pub inside: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LegendreConditionReport {
    pub samples: usize,
    pub inside: usize,
    pub fraction: f64,
    pub points: Vec<PointVerdict>,
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Five-point central difference.
fn fd5(f: &dyn Fn(f64) -> Result<f64>, x: f64, h: f64) -> Result<f64> {
    Ok((f(x - 2.0 * h)? - 8.0 * f(x - h)? + 8.0 * f(x + h)? - f(x + 2.0 * h)?) / (12.0 * h))
}

/// Build `ℋ = W(q, 𝒱(q,p), p)`, in closed form when `W` is quadratic in `v`
/// with a momentum-independent Hessian.
pub fn build_hamiltonian(lag: LagrangianModel) -> Result<HamiltonianModel> {
    let c = lag.chart().clone();
    let nq = (c.n() + c.k()) as Sym;
    let mut symbolic = None;
    let mut velocity = None;
    if lag.is_quadratic() {
        let vs = lag.velocity_syms().to_vec();
        let grad: Vec<Expr> = vs.iter().map(|&s| lag.generator().diff(s)).collect();
        let hess: Vec<Vec<Expr>> = grad
            .iter()
            .map(|g| vs.iter().map(|&s| g.diff(s)).collect())
            .collect();
        let p_free = hess
            .iter()
            .flatten()
            .all(|e| e.symbols().iter().all(|&s| s < nq));
        if p_free {
            let zero_v = |e: &Expr| e.subs(&|s| vs.contains(&s).then(Expr::zero));
            let rhs: Vec<Expr> = grad.iter().map(|g| -zero_v(g)).collect();
            let sol = symbolic_solve(&hess, &rhs, c.n_symbols())?;
            let h = lag
                .generator()
                .subs(&|s| vs.iter().position(|&v| v == s).map(|j| sol[j].clone()));
            symbolic = Some(h);
            velocity = Some(sol);
        }
    }
    let c_h = symbolic.as_ref().map(|h| h.compile());
    Ok(HamiltonianModel {
        lag,
        symbolic,
        velocity,
        c_h,
    })
}

impl HamiltonianModel {
    pub fn lagrangian(&self) -> &LagrangianModel {
        &self.lag
    }
    pub fn chart(&self) -> &ChartSpec {
        self.lag.chart()
    }
    /// Closed-form `ℋ`, when available.
    pub fn symbolic(&self) -> Option<&Expr> {
        self.symbolic.as_ref()
    }
    /// Closed-form `𝒱^i_α(q,p)` in velocity order.
    pub fn velocity_exprs(&self) -> Option<&[Expr]> {
        self.velocity.as_deref()
    }

    /// `∂ℋ/∂ε ≡ 1`: symbolic when closed form, else from `∂W/∂ε ≡ 1` and
    /// stationarity of `W` in `v`.
    pub fn eps_derivative_is_one(&self) -> bool {
        let c = self.chart();
        let e = match &self.symbolic {
            Some(h) => h.diff(c.eps()),
            None => self.lag.generator().diff(c.eps()),
        };
        let mut zc = ZeroCtx::new(c.n_symbols(), 0xe5);
        zc.is_zero(&(e - Expr::one()))
    }

    /// Condition number of `∂²W/∂v∂v` at `pt`.
    pub fn condition(&self, pt: &[f64]) -> f64 {
        condition_number(&self.lag.hess_w(pt))
    }

    /// `𝒱(q,p)`: one linear solve for quadratic `W`, damped Newton otherwise.
    pub fn invert(&self, pt: &[f64], opts: &InvertOpts) -> Result<Inversion> {
        let c = self.chart();
        let v0 = c.dim();
        let nv = c.n() * c.k();
        let mut work = pt.to_vec();
        work[v0..v0 + nv].iter_mut().for_each(|x| *x = 0.0);
        let hess = self.lag.hess_w(&work);
        let cond = condition_number(&hess);
        if !(cond < DOMAIN_COND_LIMIT) {
            return Err(Error::SingularHessian { cond });
        }
        if self.lag.is_quadratic() {
            let g = self.lag.grad_w(&work);
            let v = solve(&hess, &(-g)).ok_or(Error::SingularHessian { cond })?;
            work[v0..v0 + nv].copy_from_slice(v.as_slice());
            let r = inf_norm(&self.lag.grad_w(&work));
            return Ok(Inversion {
                v: v.as_slice().to_vec(),
                iterations: 1,
                residual: r,
                condition: cond,
                history: vec![r],
            });
        }
        let mut r = self.lag.grad_w(&work);
        let mut rn = inf_norm(&r);
        let mut history = vec![rn];
        let mut cond = cond;
        for it in 0..opts.max_iter {
            if rn <= opts.tol {
                return Ok(Inversion {
                    v: work[v0..v0 + nv].to_vec(),
                    iterations: it,
                    residual: rn,
                    condition: cond,
                    history,
                });
            }
            let hess = self.lag.hess_w(&work);
            cond = condition_number(&hess);
            if !(cond < DOMAIN_COND_LIMIT) {
                return Err(Error::SingularHessian { cond });
            }
            let step = solve(&hess, &(-&r)).ok_or(Error::SingularHessian { cond })?;
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let mut trial = work.clone();
                for j in 0..nv {
                    trial[v0 + j] += t * step[j];
                }
                let rt = self.lag.grad_w(&trial);
                let rtn = inf_norm(&rt);
                if rtn < rn {
                    work = trial;
                    r = rt;
                    rn = rtn;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            history.push(rn);
            if !accepted {
                break;
            }
        }
        if rn <= opts.tol {
            return Ok(Inversion {
                v: work[v0..v0 + nv].to_vec(),
                iterations: opts.max_iter,
                residual: rn,
                condition: cond,
                history,
            });
        }
        Err(Error::NoConvergence {
            iters: opts.max_iter,
            residual: rn,
        })
    }

    /// `pt` with its velocity slots set to `𝒱(q,p)`.
    pub fn linked(&self, pt: &[f64]) -> Result<Vec<f64>> {
        let inv = self.invert(pt, &InvertOpts::default())?;
        let v0 = self.chart().dim();
        let mut out = pt.to_vec();
        out[v0..v0 + inv.v.len()].copy_from_slice(&inv.v);
        Ok(out)
    }

    /// `ℋ(q,p)`.
    pub fn value(&self, pt: &[f64]) -> Result<f64> {
        match &self.c_h {
            Some(h) => Ok(h.eval(pt)),
            None => Ok(self.lag.w_value(&self.linked(pt)?)),
        }
    }

    /// The `ε` making `ℋ = 0` at `pt` (the gauge of a vanishing Hamiltonian).
    pub fn gauge_eps(&self, pt: &[f64]) -> Result<f64> {
        Ok(pt[self.chart().eps() as usize] - self.value(pt)?)
    }

    /// Finite-difference check of `dℋ = −∂L/∂q dq + Σ 𝒵^J dp_J`.
    pub fn verify_dh(&self, pt: &[f64]) -> Result<DhReport> {
        let c = self.chart();
        let linked = self.linked(pt)?;
        let nq = c.n() + c.k();
        let partial = |s: usize| -> Result<f64> {
            let h = 1e-3 * pt[s].abs().max(1.0);
            let f = |t: f64| -> Result<f64> {
                let mut q = pt.to_vec();
                q[s] = t;
                self.value(&q)
            };
            fd5(&f, pt[s], h)
        };
        let dl = self.lag.dl_dq(&linked);
        let mut max_dq: f64 = 0.0;
        for (s, dls) in dl.iter().enumerate().take(nq) {
            max_dq = max_dq.max((partial(s)? + dls).abs());
        }
        let mut max_dp: f64 = 0.0;
        let mut dh_deps = 0.0;
        for (j, zj) in self.lag.c_pair_dp.iter().enumerate() {
            let s = nq + j;
            let d = partial(s)?;
            if s == c.eps() as usize {
                dh_deps = d;
            }
            max_dp = max_dp.max((d - zj.eval(&linked)).abs());
        }
        Ok(DhReport {
            dh_deps,
            max_dp_residual: max_dp,
            max_dq_residual: max_dq,
        })
    }

    /// `H^α_β = δ^α_β ℋ − ⟨p, 𝒵₁∧…∧∂_β (slot α)∧…∧𝒵_n⟩`.
    pub fn hamiltonian_tensor(&self, pt: &[f64]) -> Result<DMatrix<f64>> {
        let linked = self.linked(pt)?;
        let h = self.lag.w_value(&linked);
        let n = self.chart().n();
        Ok(DMatrix::from_fn(n, n, |a, b| {
            let d = if a == b { h } else { 0.0 };
            d - self.lag.c_tensor[a][b].eval(&linked)
        }))
    }

    /// Sampled generalized Legendre condition.
    pub fn check_legendre_condition(&self, points: &[Vec<f64>]) -> LegendreConditionReport {
        let verdicts: Vec<PointVerdict> = points
            .iter()
            .map(|pt| {
                let condition = self.condition(pt);
                PointVerdict {
                    condition,
                    inside: condition < DOMAIN_COND_LIMIT,
                }
            })
            .collect();
        let inside = verdicts.iter().filter(|v| v.inside).count();
        LegendreConditionReport {
            samples: verdicts.len(),
            inside,
            fraction: if verdicts.is_empty() {
                0.0
            } else {
                inside as f64 / verdicts.len() as f64
            },
            points: verdicts,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn half() -> crate::expr::Rational {
        crate::expr::Rational::new(1.into(), 2.into())
    }

    /// `L = ½|v|² − V(y)` for `n = 1`.
    fn mechanics() -> HamiltonianModel {
        let c = ChartSpec::weyl(1, 1).unwrap();
        let v = Expr::sym(c.v(0, 0));
        let y = Expr::sym(c.y(0));
        let l = v.pow(2).scale(&half()) - y.pow(4);
        build_hamiltonian(LagrangianModel::new(c, l).unwrap()).unwrap()
    }

    #[test]
    fn mechanics_limit() {
        let m = mechanics();
        let c = m.chart();
        let want = Expr::sym(c.eps())
            + Expr::sym(c.p1(0, 0).unwrap()).pow(2).scale(&half())
            + Expr::sym(c.y(0)).pow(4);
        assert_eq!(m.symbolic().unwrap(), &want);
        assert!(m.eps_derivative_is_one());
        // H¹₁ = p v − L
        let pt = chart_point(c, &[0.3, 0.7], &[0.1, -1.2], &[]);
        let t = m.hamiltonian_tensor(&pt).unwrap();
        let linked = m.linked(&pt).unwrap();
        let v = linked[c.dim()];
        let energy = -1.2 * v - m.lagrangian().l_value(&linked);
        assert!((t[(0, 0)] - energy).abs() < 1e-14);
    }

    #[test]
    fn flat_forward_at_rest() {
        let c = ChartSpec::weyl(2, 1).unwrap();
        let l = (Expr::sym(c.v(0, 0)).pow(2) + Expr::sym(c.v(0, 1)).pow(2)).scale(&half());
        let lag = LagrangianModel::new(c.clone(), l).unwrap();
        let pt = chart_point(&c, &[0.1, 0.2, 0.3], &[], &[0.0, 0.0]);
        let out = lag.forward(&pt, 0.0);
        assert_eq!(&out[c.eps() as usize..c.dim()], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn linear_lagrangian_is_singular() {
        let c = ChartSpec::weyl(2, 1).unwrap();
        let l = Expr::sym(c.v(0, 0)) + Expr::sym(c.y(0));
        let m = build_hamiltonian(LagrangianModel::new(c.clone(), l).unwrap());
        // the closed-form attempt already fails on the singular Hessian
        assert!(m.is_err());
    }

    #[test]
    fn newton_handles_quartic_lagrangian() {
        // L = ½v² + v⁴/12: strictly convex, not quadratic
        let c = ChartSpec::weyl(1, 1).unwrap();
        let v = Expr::sym(c.v(0, 0));
        let l = v.pow(2).scale(&half())
            + v.pow(4)
                .scale(&crate::expr::Rational::new(1.into(), 12.into()));
        let m = build_hamiltonian(LagrangianModel::new(c.clone(), l).unwrap()).unwrap();
        assert!(m.symbolic().is_none());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let vv: f64 = rng.gen_range(-2.0..2.0);
            let pt = chart_point(&c, &[0.2, 0.1], &[], &[vv]);
            let lp = m.lagrangian().forward(&pt, 0.5);
            let inv = m.invert(&lp, &InvertOpts::default()).unwrap();
            assert!((inv.v[0] - vv).abs() < 1e-10);
            assert!(inv.history.windows(2).all(|w| w[1] < w[0]));
            assert!((m.value(&lp).unwrap() - 0.5).abs() < 1e-10);
            let rep = m.verify_dh(&lp).unwrap();
            assert!(
                rep.max_dp_residual < 1e-9 && rep.max_dq_residual < 1e-9,
                "{rep:?}"
            );
        }
    }
}
