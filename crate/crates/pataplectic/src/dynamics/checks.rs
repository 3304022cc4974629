//! On-solution checks: each pulls symbolic identities back to the graph of a
//! lattice trajectory and reports a residual.

use super::harness::{max_over, CompiledForm, Graph};
use super::lattice::Boundary;
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::expr::{Compiled, Expr, Sym};
use crate::exterior::{show_form, DifferentialForm, PhaseSpace, VectorField};
use crate::models::Model;
use crate::observables::{
    bracket_with_density, omega_bracket, pbracket_external, pbracket_internal, xi_of,
    ObservableForm,
};
use crate::symsolve::ZeroCtx;
use rayon::prelude::*;
use serde::Serialize;

/// Model-side data shared by the checks on one trajectory.
pub struct Checker<'a> {
    pub model: &'a Model,
    pub ps: PhaseSpace,
    pub graph: Graph<'a>,
}

fn symbolic_h(model: &Model) -> Result<Expr> {
    model.hamiltonian.symbolic().cloned().ok_or_else(|| {
        Error::Model(format!(
            "model '{}' has no closed-form Hamiltonian",
            model.name
        ))
    })
}

fn first_nonzero(ps: &PhaseSpace, form: &DifferentialForm, seed: u64) -> Option<String> {
    let mut zc = ZeroCtx::new(ps.chart().n_symbols(), seed);
    form.terms()
        .iter()
        .find(|(_, e)| !zc.is_zero(e))
        .map(|(idx, e)| {
            let names: Vec<String> = idx.iter().map(|c| ps.chart().name(c as Sym)).collect();
            format!("d{} : {}", names.join("∧d"), ps.chart().show(e))
        })
}

impl<'a> Checker<'a> {
    pub fn new(model: &'a Model, traj: &'a Trajectory) -> Result<Self> {
        let chart = model.chart();
        if traj.n != chart.n() || traj.k != chart.k() {
            return Err(Error::ChartMismatch {
                left: traj.n * 100 + traj.k,
                right: chart.n() * 100 + chart.k(),
            });
        }
        Ok(Checker {
            model,
            ps: model.phase_space()?,
            graph: Graph::new(traj, chart),
        })
    }

    fn n(&self) -> usize {
        self.graph.chart.n()
    }

    /// Nodes off fixed edges, where the evolution equations are imposed.
    pub fn nodes(&self) -> Vec<usize> {
        let l = self.graph.lattice();
        (0..l.n_nodes())
            .filter(|&node| l.distance_to_fixed_edge(node % l.ns()) >= 1)
            .collect()
    }

    /// `max |Γ*(α − β)|` over the check nodes for two `n`-forms.
    fn top_residual(&self, a: &DifferentialForm, b: &DifferentialForm) -> f64 {
        let diff = CompiledForm::new(&a.sub(b));
        let cols: Vec<usize> = (0..self.n()).collect();
        max_over(&self.nodes(), &|node| {
            let jac = self.graph.jacobian(node);
            diff.pullback(&self.graph.points[node], &jac, &cols).abs()
        })
    }

    /// `d a = {ℋω, a}` along the graph.
    pub fn theorem2(&self, a: &ObservableForm) -> Result<f64> {
        let h = symbolic_h(self.model)?;
        let lhs = a.expand(&self.ps)?.d();
        let rhs = bracket_with_density(&self.ps, &h, a)?;
        Ok(self.top_residual(&lhs, &rhs))
    }

    /// `dλ = {ℋω, λ}_ω` along the graph, every component of the pulled-back form.
    pub fn lemma4(&self, lambda: &DifferentialForm) -> Result<f64> {
        let h = symbolic_h(self.model)?;
        let rhs = omega_bracket(&self.ps, &h, lambda)?;
        let diff = CompiledForm::new(&lambda.d().sub(&rhs));
        let subsets = increasing_subsets(self.n(), diff.degree);
        Ok(max_over(&self.nodes(), &|node| {
            let jac = self.graph.jacobian(node);
            subsets
                .iter()
                .map(|cols| diff.pullback(&self.graph.points[node], &jac, cols).abs())
                .fold(0.0, f64::max)
        }))
    }

    /// `∫_D {ℋω, a} = ∫_{∂D} a` on the cylinder `D = [t₀, t₁] × S` (periodic slices).
    pub fn stokes_cylinder(
        &self,
        a: &ObservableForm,
        t0: usize,
        t1: usize,
    ) -> Result<StokesReport> {
        let l = self.graph.lattice();
        if l.spatial_axes()
            .iter()
            .any(|&ax| l.axes[ax].boundary != Boundary::Periodic)
        {
            return Err(Error::Lattice(
                "the cylinder check needs periodic spatial axes".into(),
            ));
        }
        if !(t0 < t1 && t1 < l.nt()) {
            return Err(Error::Lattice(format!("invalid time window {t0}..{t1}")));
        }
        let h = symbolic_h(self.model)?;
        let bulk_form = CompiledForm::new(&bracket_with_density(&self.ps, &h, a)?);
        let a_form = CompiledForm::new(&a.expand(&self.ps)?);
        let cols: Vec<usize> = (0..self.n()).collect();
        let dt = l.dt();
        let levels: Vec<f64> = (t0..=t1)
            .into_par_iter()
            .map(|t| {
                let w = if t == t0 || t == t1 { 0.5 * dt } else { dt };
                let s: f64 = (0..l.ns())
                    .map(|s| {
                        let node = l.node(t, s);
                        let jac = self.graph.jacobian(node);
                        l.slice_weight(s)
                            * bulk_form.pullback(&self.graph.points[node], &jac, &cols)
                    })
                    .sum();
                w * s
            })
            .collect();
        let bulk: f64 = levels.into_iter().sum();
        let boundary =
            self.graph.slice_integral(&a_form, t1) - self.graph.slice_integral(&a_form, t0);
        Ok(StokesReport {
            bulk,
            boundary,
            residual: (bulk - boundary).abs(),
        })
    }

    /// Velocity-filled chart point at a node.
    fn linked_point(&self, node: usize) -> Vec<f64> {
        let jac = self.graph.jacobian(node);
        self.graph.point_with_velocity(node, &jac)
    }

    /// `max_β |∂_α(g S^α_β) − ∂(gL)/∂x^β|` with `∂y` from the graph.
    pub fn stress_divergence(&self) -> Result<f64> {
        let n = self.n();
        let lag = self.model.lagrangian();
        let w = self.model.weight.compile();
        let dw: Vec<Compiled> = (0..n)
            .map(|b| self.model.weight.diff(b as Sym).compile())
            .collect();
        let m = self.graph.lattice().n_nodes();
        let pts: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|node| self.linked_point(node))
            .collect();
        // g S^α_β per node, [node][α·n+β]
        let gs: Vec<Vec<f64>> = pts
            .par_iter()
            .map(|pt| {
                let s = lag.stress_energy(pt);
                let g = w.eval(pt);
                (0..n * n).map(|ab| g * s[(ab / n, ab % n)]).collect()
            })
            .collect();
        Ok(max_over(&self.nodes(), &|node| {
            let pt = &pts[node];
            let g = w.eval(pt);
            let l = lag.l_value(pt);
            let dl = lag.dl_dq(pt);
            (0..n)
                .map(|b| {
                    let div: f64 = (0..n)
                        .map(|a| self.graph.derivative(&|nd| gs[nd][a * n + b], node, a))
                        .sum();
                    (div - g * dl[b] - l * dw[b].eval(pt)).abs()
                })
                .fold(0.0, f64::max)
        }))
    }

    /// Euler–Lagrange residual `∂_α(g ∂L/∂v^i_α) − g ∂L/∂y^i`.
    pub fn el_residual(&self) -> Result<f64> {
        let c = self.graph.chart;
        let (n, k) = (c.n(), c.k());
        let lag = self.model.lagrangian();
        let w = self.model.weight.compile();
        let m = self.graph.lattice().n_nodes();
        let pts: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|node| self.linked_point(node))
            .collect();
        let flux: Vec<Vec<f64>> = pts
            .par_iter()
            .map(|pt| {
                let g = w.eval(pt);
                lag.dl_dv(pt).into_iter().map(|v| g * v).collect()
            })
            .collect();
        Ok(max_over(&self.nodes(), &|node| {
            let pt = &pts[node];
            let g = w.eval(pt);
            let dl = lag.dl_dq(pt);
            (0..k)
                .map(|i| {
                    let div: f64 = (0..n)
                        .map(|a| self.graph.derivative(&|nd| flux[nd][i * n + a], node, a))
                        .sum();
                    (div - g * dl[n + i]).abs()
                })
                .fold(0.0, f64::max)
        }))
    }

    /// Slice energies `∫_{S_t} η₀` and their largest deviation from the first.
    pub fn slice_energy(&self) -> Result<EnergyReport> {
        let h = symbolic_h(self.model)?;
        let t = self.graph.lattice().time_axis;
        let eta = CompiledForm::new(&ObservableForm::EtaSlice { h, axis: t }.expand(&self.ps)?);
        let e: Vec<f64> = (0..self.graph.lattice().nt())
            .into_par_iter()
            .map(|lev| self.graph.slice_integral(&eta, lev))
            .collect();
        let drift = e.iter().map(|v| (v - e[0]).abs()).fold(0.0, f64::max);
        Ok(EnergyReport { energy: e, drift })
    }

    /// Symmetry test for `ξ` on `𝒳×𝒴`, Lemma-5 identity, and closure of `P*_ξ` on the graph.
    pub fn noether(&self, xi: &[Expr]) -> Result<NoetherReport> {
        let h = symbolic_h(self.model)?;
        let ps = &self.ps;
        let a = ObservableForm::GeneralizedMomentum { xi: xi.to_vec() };
        let x = xi_of(ps, &a)?.field;
        let action = ps.theta().sub(&ps.density(&h));
        let lie = action.lie_derivative(&x);
        let witness = first_nonzero(ps, &lie, 0x5e);
        let field = VectorField::from_comps(ps.dim(), xi.iter().cloned().enumerate());
        let lhs = pbracket_external(ps, &ps.density(&h), &a)?;
        let exact = ps.density(&h).interior(&field)?.d();
        let lemma5 = first_nonzero(ps, &lhs.sub(&lie).sub(&exact), 0x5f);
        let current = action.interior(&field)?;
        let closure = self.top_residual(&current.d(), &DifferentialForm::zero(ps.dim(), self.n()));
        Ok(NoetherReport {
            symmetric: witness.is_none(),
            witness,
            lemma5_holds: lemma5.is_none(),
            lemma5_witness: lemma5,
            closure_residual: closure,
        })
    }

    /// `∫_{S_t}{P_{i,g}, Q^{i,f}}` against the nodal sum of `f^t g`, and `∫_{S_t}{Q^f, Q^{f'}}`.
    pub fn slice_brackets(
        &self,
        field: usize,
        f: &[Expr],
        f2: &[Expr],
        g: &Expr,
        level: usize,
    ) -> Result<SliceBracketReport> {
        let l = self.graph.lattice();
        let t = l.time_axis;
        let p = ObservableForm::momentum(self.graph.chart.y(field) as usize, g.clone());
        let q = ObservableForm::position(field, f.to_vec());
        let q2 = ObservableForm::position(field, f2.to_vec());
        let pq = CompiledForm::new(&pbracket_internal(&self.ps, &p, &q)?);
        let qq = CompiledForm::new(&pbracket_internal(&self.ps, &q, &q2)?);
        let bracket = self.graph.slice_integral(&pq, level);
        let (ft, gc) = (f[t].compile(), g.compile());
        let wg = self.model.weight.compile();
        let oracle: f64 = (0..l.ns())
            .map(|s| {
                let x = l.coords(level, s);
                l.slice_weight(s) * ft.eval(&x) * gc.eval(&x) * wg.eval(&x)
            })
            .sum();
        Ok(SliceBracketReport {
            bracket,
            oracle,
            residual: (bracket - oracle).abs(),
            qq: self.graph.slice_integral(&qq, level),
        })
    }

    /// `d/dt ∫_{S_t} a = ∫_{S_t}{η₀, a} + ∫_{S_t} a'` where `a'` carries `∂_t` of the test function.
    pub fn slice_evolution(&self, a: &ObservableForm) -> Result<f64> {
        let l = self.graph.lattice();
        let t = l.time_axis;
        let h = symbolic_h(self.model)?;
        let ts = t as Sym;
        let dt_a = match a {
            ObservableForm::Position { field, f } => ObservableForm::Position {
                field: *field,
                f: f.iter().map(|e| e.diff(ts)).collect(),
            },
            ObservableForm::Momentum { mu, g } => ObservableForm::Momentum {
                mu: *mu,
                g: g.diff(ts),
            },
            _ => {
                return Err(Error::Input(
                    "slice evolution is defined for Q^f and P_g".into(),
                ))
            }
        };
        let eta = ObservableForm::EtaSlice { h, axis: t }.expand(&self.ps)?;
        let a_form = CompiledForm::new(&a.expand(&self.ps)?);
        let br = CompiledForm::new(&pbracket_external(&self.ps, &eta, a)?);
        let corr = CompiledForm::new(&dt_a.expand(&self.ps)?);
        let nt = l.nt();
        let phi: Vec<f64> = (0..nt)
            .into_par_iter()
            .map(|lev| self.graph.slice_integral(&a_form, lev))
            .collect();
        let rhs: Vec<f64> = (0..nt)
            .into_par_iter()
            .map(|lev| self.graph.slice_integral(&br, lev) + self.graph.slice_integral(&corr, lev))
            .collect();
        let mut res: f64 = 0.0;
        for lev in 0..nt {
            let d = super::harness::fd4(&|j| phi[j as usize], lev, nt, l.dt(), false);
            res = res.max((d - rhs[lev]).abs());
        }
        Ok(res)
    }

    /// `∫_Γ (θ − ℋω)` against `∫ L g ω`, both by the trapezoidal rule.
    pub fn action(&self) -> Result<ActionReport> {
        let l = self.graph.lattice();
        if l.spatial_axes()
            .iter()
            .any(|&ax| l.axes[ax].boundary != Boundary::Periodic)
        {
            return Err(Error::Lattice(
                "the action check needs periodic spatial axes".into(),
            ));
        }
        let theta = CompiledForm::new(self.ps.theta());
        let w = self.model.weight.compile();
        let lag = self.model.lagrangian();
        let cols: Vec<usize> = (0..self.n()).collect();
        let ham = &self.model.hamiltonian;
        let m = l.n_nodes();
        let parts: Vec<Result<(f64, f64)>> = (0..m)
            .into_par_iter()
            .map(|node| {
                let (lev, s) = self.graph.split(node);
                let weight = self.graph.time_weight(lev) * l.slice_weight(s);
                let jac = self.graph.jacobian(node);
                let pt = &self.graph.points[node];
                let g = w.eval(pt);
                let gamma = theta.pullback(pt, &jac, &cols) - ham.value(pt)? * g;
                let lp = self.graph.point_with_velocity(node, &jac);
                Ok((weight * gamma, weight * g * lag.l_value(&lp)))
            })
            .collect();
        let (mut a_gamma, mut a_l) = (0.0, 0.0);
        for p in parts {
            let (x, y) = p?;
            a_gamma += x;
            a_l += y;
        }
        Ok(ActionReport {
            gamma: a_gamma,
            lagrangian: a_l,
            residual: (a_gamma - a_l).abs(),
        })
    }
}

fn increasing_subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == m {
            out.push((0..n).filter(|&i| mask & (1 << i) != 0).collect());
        }
    }
    out.sort();
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct StokesReport {
    pub bulk: f64,
    pub boundary: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    pub energy: Vec<f64>,
    pub drift: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NoetherReport {
    pub symmetric: bool,
    pub witness: Option<String>,
    pub lemma5_holds: bool,
    pub lemma5_witness: Option<String>,
    pub closure_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SliceBracketReport {
    pub bracket: f64,
    pub oracle: f64,
    pub residual: f64,
    pub qq: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ActionReport {
    pub gamma: f64,
    pub lagrangian: f64,
    pub residual: f64,
}

/// Printable form, for reports.
pub fn describe(ps: &PhaseSpace, f: &DifferentialForm) -> String {
    show_form(f, ps.chart())
}
