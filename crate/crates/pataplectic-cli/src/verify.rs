//! `verify`: on-solution checks across a refinement ladder.

use crate::files::{emit, observable, REPORT_FORMAT};
use crate::{CheckName, Failure, VerifyArgs};
use pataplectic::dynamics::checks::Checker;
use pataplectic::dynamics::io::read_trajectory;
use pataplectic::dynamics::{solve_dw, InitData, Trajectory};
use pataplectic::expr::Expr;
use pataplectic::exterior::{ChartSpec, DifferentialForm};
use pataplectic::models::Model;
use pataplectic::observables::{ObservableForm, ObservableJson};
use serde::Serialize;
use serde_json::{json, Value};
use std::io::BufReader;
use std::time::Instant;

#[derive(Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum Expect {
    /// Order at least `--min-order`, or every residual within `--tol`.
    Converges,
    /// Every residual within `--tol`.
    Exact,
    /// Finest-lattice residual within `--quad-tol`; otherwise as `Converges`,
    /// since away from exactly conserved currents the residual is scheme truncation.
    Quadrature,
}

#[derive(Debug, Serialize)]
struct Series {
    quantity: String,
    expect: Expect,
    residuals: Vec<f64>,
    orders: Vec<f64>,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct CheckReport {
    name: String,
    status: &'static str,
    spacing: Vec<f64>,
    series: Vec<Series>,
    estimated_order: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    notes: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<f64>,
}

struct Ctx<'a> {
    args: &'a VerifyArgs,
    model: &'a Model,
    runs: &'a [Trajectory],
    observables: Vec<(String, ObservableForm)>,
}

fn orders(e: &[f64]) -> Vec<f64> {
    e.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

impl Ctx<'_> {
    fn series(&self, quantity: String, expect: Expect, residuals: Vec<f64>) -> Series {
        let a = self.args;
        let orders = orders(&residuals);
        let exact = residuals.iter().all(|r| r.abs() <= a.tol);
        let pass = match expect {
            Expect::Exact => exact,
            Expect::Converges => {
                exact || (!orders.is_empty() && orders.iter().all(|o| *o >= a.min_order))
            }
            Expect::Quadrature => {
                residuals.last().is_some_and(|r| r.abs() <= a.quad_tol)
                    || (!orders.is_empty() && orders.iter().all(|o| *o >= a.min_order))
            }
        };
        Series {
            quantity,
            expect,
            residuals,
            orders,
            pass,
        }
    }

    fn ladder(
        &self,
        f: impl Fn(&Checker) -> pataplectic::error::Result<f64>,
    ) -> pataplectic::error::Result<Vec<f64>> {
        self.runs
            .iter()
            .map(|t| {
                let ch = Checker::new(self.model, t)?;
                f(&ch)
            })
            .collect()
    }

    fn chart(&self) -> &ChartSpec {
        self.model.chart()
    }

    fn run(&self, name: CheckName) -> pataplectic::error::Result<(Vec<Series>, Option<Value>)> {
        let c = self.chart();
        let mut out = Vec::new();
        let mut notes = None;
        match name {
            CheckName::Theorem2 => {
                for (label, a) in &self.observables {
                    let r = self.ladder(|ch| ch.theorem2(a))?;
                    out.push(self.series(
                        format!("d a - {{H omega, a}} for {label}"),
                        Expect::Converges,
                        r,
                    ));
                }
            }
            CheckName::Lemma4 => {
                let dim = self.model.phase_space()?.dim();
                for i in 0..c.k() {
                    let lam = DifferentialForm::scalar(dim, Expr::sym(c.y(i)));
                    let r = self.ladder(|ch| ch.lemma4(&lam))?;
                    out.push(self.series(
                        format!(
                            "d lambda - {{H omega, lambda}}_omega for lambda = y{}",
                            i + 1
                        ),
                        Expect::Converges,
                        r,
                    ));
                }
            }
            CheckName::Noether => {
                let xi = self.generator()?;
                let reps: Vec<_> = self
                    .runs
                    .iter()
                    .map(|t| Checker::new(self.model, t)?.noether(&xi))
                    .collect::<Result<_, _>>()?;
                let r0 = &reps[0];
                let mut s = self.series(
                    "d P*_xi on the solution".into(),
                    Expect::Converges,
                    reps.iter().map(|r| r.closure_residual).collect(),
                );
                s.pass &= r0.symmetric && r0.lemma5_holds;
                notes = Some(json!({
                    "generator": xi.iter().map(|e| c.show(e)).collect::<Vec<_>>(),
                    "symmetric": r0.symmetric,
                    "symmetry_witness": r0.witness,
                    "lemma5_identity_holds": r0.lemma5_holds,
                    "lemma5_witness": r0.lemma5_witness,
                }));
                out.push(s);
            }
            CheckName::Stress => {
                let r = self.ladder(|ch| ch.stress_divergence())?;
                out.push(self.series(
                    "divergence of the weighted stress-energy tensor".into(),
                    Expect::Converges,
                    r,
                ));
            }
            CheckName::El => {
                let r = self.ladder(|ch| ch.el_residual())?;
                out.push(self.series("Euler-Lagrange residual".into(), Expect::Converges, r));
            }
            CheckName::Action => {
                let r = self.ladder(|ch| Ok(ch.action()?.residual))?;
                out.push(self.series(
                    "integral of theta - H omega minus integral of L omega".into(),
                    Expect::Converges,
                    r,
                ));
            }
            CheckName::Stokes => {
                for (label, a) in &self.observables {
                    let r = self.ladder(|ch| {
                        Ok(ch
                            .stokes_cylinder(a, 0, ch.graph.lattice().nt() - 1)?
                            .residual)
                    })?;
                    out.push(self.series(
                        format!("bulk minus boundary integral for {label}"),
                        Expect::Quadrature,
                        r,
                    ));
                }
            }
            CheckName::Slices => {
                let r = self.ladder(|ch| Ok(ch.slice_energy()?.drift))?;
                out.push(self.series("slice energy drift".into(), Expect::Converges, r));
                let (f, f2, g) = self.slice_functions();
                let r = self.ladder(|ch| {
                    let nt = ch.graph.lattice().nt();
                    let mut worst: f64 = 0.0;
                    for level in [0, nt / 2, nt - 1] {
                        for field in 0..c.k() {
                            let rep = ch.slice_brackets(field, &f, &f2, &g, level)?;
                            worst = worst.max(rep.residual).max(rep.qq.abs());
                        }
                    }
                    Ok(worst)
                })?;
                out.push(self.series(
                    "slice {P_g, Q^f} minus the nodal sum of f^t g".into(),
                    Expect::Exact,
                    r,
                ));
                for field in 0..c.k() {
                    let q = ObservableForm::position(field, f.clone());
                    let r = self.ladder(|ch| ch.slice_evolution(&q))?;
                    out.push(self.series(
                        format!("d/dt of the slice integral of Q^(y{}, f)", field + 1),
                        Expect::Converges,
                        r,
                    ));
                }
            }
        }
        Ok((out, notes))
    }

    fn generator(&self) -> pataplectic::error::Result<Vec<Expr>> {
        let c = self.chart();
        let m = c.n() + c.k();
        if self.args.xi.is_empty() {
            let t = self.runs[0].lattice.time_axis;
            return Ok((0..m)
                .map(|a| if a == t { Expr::one() } else { Expr::zero() })
                .collect());
        }
        if self.args.xi.len() != m {
            return Err(pataplectic::error::Error::Input(format!(
                "--xi: need {m} components, got {}",
                self.args.xi.len()
            )));
        }
        self.args
            .xi
            .iter()
            .enumerate()
            .map(|(i, s)| c.parse_field(&format!("xi[{i}]"), s))
            .collect()
    }

    /// Time-dependent `f`, a second `f'`, and `g` for the slice checks.
    fn slice_functions(&self) -> (Vec<Expr>, Vec<Expr>, Expr) {
        let c = self.chart();
        let t = self.runs[0].lattice.time_axis;
        let last = c.name(c.x(if t + 1 == c.n() { 0 } else { c.n() - 1 }));
        let tn = c.name(c.x(t));
        let p = |s: String| c.parse(&s).expect("built-in test function");
        let f = (0..c.n())
            .map(|a| {
                if a == t {
                    p(format!("(1 + {tn}/2) * cos({last})"))
                } else {
                    p(format!("{tn} * sin({last})"))
                }
            })
            .collect();
        let f2 = (0..c.n())
            .map(|a| {
                if a == t {
                    p(format!("sin({last})^2"))
                } else {
                    Expr::one()
                }
            })
            .collect();
        (f, f2, p(format!("1 + cos({last})/2")))
    }
}

fn default_observables(model: &Model, time_axis: usize) -> Vec<ObservableJson> {
    let c = model.chart();
    let t = time_axis;
    let last = c.name(c.x(if t + 1 == c.n() { 0 } else { c.n() - 1 }));
    let mut out = Vec::new();
    for i in 0..c.k() {
        out.push(ObservableJson::Momentum {
            coordinate: c.name(c.y(i)),
            g: "1".into(),
        });
        out.push(ObservableJson::Momentum {
            coordinate: c.name(c.y(i)),
            g: format!("cos({last})"),
        });
        out.push(ObservableJson::Position {
            field: i,
            f: (0..c.n())
                .map(|a| {
                    if a == t {
                        format!("1 + sin({last})/2")
                    } else {
                        "0".into()
                    }
                })
                .collect(),
        });
    }
    out
}

fn label(j: &ObservableJson) -> String {
    match j {
        ObservableJson::Position { field, f } => format!("Q^(y{}, [{}])", field + 1, f.join(", ")),
        ObservableJson::Momentum { coordinate, g } => format!("P_({coordinate}, {g})"),
        ObservableJson::GeneralizedMomentum { xi } => format!("P_xi[{}]", xi.join(", ")),
        ObservableJson::StarMomentum { coordinate, g } => format!("P*_({coordinate}, {g})"),
        ObservableJson::HamiltonianDensity => "H omega".into(),
        ObservableJson::Eta => "eta".into(),
    }
}

pub fn run(a: &VerifyArgs, timings: bool) -> Result<(), Failure> {
    if a.tol < f64::EPSILON || a.quad_tol < f64::EPSILON {
        return Err(Failure::Usage(
            "tolerances must be at least machine epsilon".into(),
        ));
    }
    if a.levels == 0 {
        return Err(Failure::Usage("--levels must be positive".into()));
    }
    let file = std::fs::File::open(&a.traj)
        .map_err(|e| Failure::Usage(format!("{}: {e}", a.traj.display())))?;
    let (meta, first) = read_trajectory(BufReader::new(file), |j| {
        Ok(Model::from_json(j)?.chart().clone())
    })
    .map_err(|e| Failure::Usage(format!("{}: {e}", a.traj.display())))?;
    let model = Model::from_json(&meta.model)?;
    let mut runs = vec![first];
    if a.levels > 1 {
        let ij = meta.init.as_ref().ok_or_else(|| {
            Failure::Usage("the trajectory header has no initial data; use --levels 1".into())
        })?;
        let init = InitData::from_json(ij, model.chart())?;
        let mut lat = meta.lattice.clone();
        for _ in 1..a.levels {
            lat = lat.refined();
            let start = Instant::now();
            runs.push(solve_dw(&model, &lat, &init)?);
            if timings {
                eprintln!(
                    "solve on {} nodes: {:.3}s",
                    lat.n_nodes(),
                    start.elapsed().as_secs_f64()
                );
            }
        }
    }
    let ps = model.phase_space()?;
    let h = model.hamiltonian.symbolic().cloned();
    let specs: Vec<ObservableJson> = if a.observable.is_empty() {
        default_observables(&model, meta.lattice.time_axis)
    } else {
        a.observable
            .iter()
            .map(|s| observable(s))
            .collect::<Result<_, _>>()?
    };
    let observables = specs
        .iter()
        .map(|j| Ok((label(j), j.build(&ps, h.as_ref())?)))
        .collect::<Result<Vec<_>, Failure>>()?;
    let ctx = Ctx {
        args: a,
        model: &model,
        runs: &runs,
        observables,
    };
    let spacing: Vec<f64> = runs.iter().map(|t| t.lattice.dt()).collect();
    let mut names = a.check.clone();
    names.sort();
    names.dedup();
    let mut reports = Vec::new();
    for name in names {
        let start = Instant::now();
        let cname = format!("{name:?}").to_lowercase();
        let mut rep = CheckReport {
            name: cname.clone(),
            status: "fail",
            spacing: spacing.clone(),
            series: Vec::new(),
            estimated_order: None,
            notes: None,
            error: None,
            wall_time_s: None,
        };
        match ctx.run(name) {
            Ok((series, notes)) => {
                let pass = !series.is_empty() && series.iter().all(|s| s.pass);
                rep.estimated_order = series
                    .iter()
                    .filter(|s| matches!(s.expect, Expect::Converges))
                    .flat_map(|s| s.orders.iter().cloned())
                    .filter(|o| o.is_finite())
                    .reduce(f64::min);
                rep.status = if pass { "pass" } else { "fail" };
                rep.series = series;
                rep.notes = notes;
            }
            Err(e) => rep.error = Some(e.to_string()),
        }
        let secs = start.elapsed().as_secs_f64();
        if timings {
            rep.wall_time_s = Some(secs);
            eprintln!("{cname}: {} in {secs:.3}s", rep.status);
        }
        reports.push(rep);
    }
    let passed = reports.iter().filter(|r| r.status == "pass").count();
    let report = json!({
        "format_version": REPORT_FORMAT,
        "model": model.name,
        "levels": a.levels,
        "min_order": a.min_order,
        "tol": a.tol,
        "checks": reports,
        "summary": {
            "total": reports.len(),
            "passed": passed,
            "failed": reports.len() - passed,
            "status": if passed == reports.len() { "pass" } else { "fail" },
        },
    });
    emit(&report, a.report.as_deref())?;
    if passed == reports.len() {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}
