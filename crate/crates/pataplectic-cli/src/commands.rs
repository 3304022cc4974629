use crate::files::{emit, load_model, observable, read_json, REPORT_FORMAT};
use crate::{BracketArgs, Failure, IdentityArgs, LegendreArgs, SimulateArgs};
use pataplectic::dynamics::io::write_trajectory;
use pataplectic::dynamics::{solve_dw, InitData, InitJson, LatticeSpec};
use pataplectic::exterior::{ChartJson, ChartSpec};
use pataplectic::legendre::InvertOpts;
use pataplectic::observables::identities::{run_suite, SuiteConfig};
use pataplectic::observables::{
    bracket_with_density, is_admissible, pbracket_internal, ObservableForm,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::Path;

fn show_matrix(chart: &ChartSpec, m: &[Vec<pataplectic::expr::Expr>]) -> Vec<Vec<String>> {
    m.iter()
        .map(|r| r.iter().map(|e| chart.show(e)).collect())
        .collect()
}

pub fn model_show(path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let (_, m) = load_model(path)?;
    let c = m.chart();
    let names: Vec<String> = (0..c.n_symbols()).map(|s| c.name(s as _)).collect();
    let sigma = m.sigma.as_ref().map(|s| {
        json!({
            "kind": s.kind(),
            "metric_x": show_matrix(c, s.metric_x()),
            "metric_y": show_matrix(c, s.metric_y()),
            "b_form": s.b_form().map(|b| show_matrix(c, b)),
            "potential": c.show(s.potential()),
        })
    });
    let report = json!({
        "format_version": REPORT_FORMAT,
        "name": m.name,
        "chart": c.to_json(),
        "coordinates": &names[..c.n() + c.k()],
        "momenta": (0..c.momenta().len()).map(|j| c.name(c.momentum_sym(j))).collect::<Vec<_>>(),
        "velocities": c.velocity_syms().iter().map(|&s| c.name(s)).collect::<Vec<_>>(),
        "weight": c.show(&m.weight),
        "lagrangian": c.show(m.lagrangian().lagrangian()),
        "hamiltonian": m.hamiltonian.symbolic().map(|h| c.show(h)),
        "sigma": sigma,
    });
    emit(&report, out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointJson {
    q: Vec<f64>,
    v: Vec<f64>,
    w: f64,
}

pub fn legendre(a: &LegendreArgs) -> Result<(), Failure> {
    if a.tol < f64::EPSILON {
        return Err(Failure::Usage(format!(
            "--tol {} is below machine epsilon",
            a.tol
        )));
    }
    let (_, m) = load_model(&a.model)?;
    let c = m.chart().clone();
    let (nq, nv) = (c.n() + c.k(), c.n() * c.k());
    let points: Vec<PointJson> = match &a.points {
        Some(p) => read_json(p)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            (0..a.samples)
                .map(|_| PointJson {
                    q: (0..nq).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    v: (0..nv).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    w: rng.gen_range(-1.0..1.0),
                })
                .collect()
        }
    };
    let mut rows = Vec::new();
    let (mut worst_v, mut worst_h) = (0.0f64, 0.0f64);
    for (i, p) in points.iter().enumerate() {
        if p.q.len() != nq || p.v.len() != nv {
            return Err(Failure::Usage(format!(
                "points[{i}]: need {nq} q and {nv} v entries"
            )));
        }
        let pt = m.forward(&p.q, &p.v, p.w);
        let momenta: BTreeMap<String, f64> = (0..c.momenta().len())
            .map(|j| {
                let s = c.momentum_sym(j);
                (c.name(s), pt[s as usize])
            })
            .collect();
        let inv = m.hamiltonian.invert(&pt, &InvertOpts::default())?;
        let ev = inv
            .v
            .iter()
            .zip(&p.v)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        let h = m.hamiltonian.value(&pt)?;
        worst_v = worst_v.max(ev);
        worst_h = worst_h.max((h - p.w).abs());
        rows.push(json!({
            "q": p.q, "v": p.v, "w": p.w,
            "momenta": momenta,
            "hamiltonian": h,
            "inverted_v": inv.v,
            "roundtrip_error": ev,
            "condition": inv.condition,
        }));
    }
    let pass = worst_v <= a.tol && worst_h <= a.tol;
    let report = json!({
        "format_version": REPORT_FORMAT,
        "model": m.name,
        "eps_derivative_is_one": m.hamiltonian.eps_derivative_is_one(),
        "points": rows,
        "max_roundtrip_error": worst_v,
        "max_hamiltonian_error": worst_h,
        "status": if pass { "pass" } else { "fail" },
    });
    emit(&report, a.out.as_deref())?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

pub fn bracket(a: &BracketArgs) -> Result<(), Failure> {
    let (_, m) = load_model(&a.model)?;
    let ps = m.phase_space()?;
    let h = m.hamiltonian.symbolic().cloned();
    let oa = observable(&a.a)?.build(&ps, h.as_ref())?;
    let ob = observable(&a.b)?.build(&ps, h.as_ref())?;
    let result = match &oa {
        ObservableForm::HamiltonianDensity { h } => bracket_with_density(&ps, h, &ob)?,
        _ => pbracket_internal(&ps, &oa, &ob)?,
    };
    let adm = |o: &ObservableForm| -> Result<Value, Failure> {
        if o.expand(&ps)?.degree() + 1 != ps.chart().n() {
            return Ok(Value::Null);
        }
        let r = is_admissible(&ps, o)?;
        Ok(json!({
            "admissible": r.admissible,
            "witness": r.witness.map(|(b, w)| json!({"base_index": b, "coefficient": ps.chart().show(&w)})),
        }))
    };
    let report = json!({
        "format_version": REPORT_FORMAT,
        "model": m.name,
        "a": {"kind": oa.name(), "form": pataplectic::dynamics::checks::describe(&ps, &oa.expand(&ps)?), "admissibility": adm(&oa)?},
        "b": {"kind": ob.name(), "form": pataplectic::dynamics::checks::describe(&ps, &ob.expand(&ps)?), "admissibility": adm(&ob)?},
        "bracket": pataplectic::dynamics::checks::describe(&ps, &result),
        "degree": result.degree(),
    });
    emit(&report, a.out.as_deref())
}

pub fn verify_identities(a: &IdentityArgs) -> Result<(), Failure> {
    let charts = match &a.chart {
        Some(p) => {
            let cj: ChartJson = read_json(p)?;
            ChartSpec::from_json(&cj)?;
            vec![(cj.n, cj.k)]
        }
        None => SuiteConfig::default().charts,
    };
    if a.instances == 0 {
        return Err(Failure::Usage("--instances must be positive".into()));
    }
    let report = run_suite(&SuiteConfig {
        seed: a.seed,
        instances: a.instances,
        charts,
    })?;
    emit(&report, a.out.as_deref())?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let (mj, m) = load_model(&a.model)?;
    let lattice: LatticeSpec = read_json(&a.lattice)?;
    let ij: InitJson = read_json(&a.init)?;
    let init = InitData::from_json(&ij, m.chart())?;
    let traj = solve_dw(&m, &lattice, &init)?;
    let file = std::fs::File::create(&a.out)
        .map_err(|e| Failure::Usage(format!("{}: {e}", a.out.display())))?;
    write_trajectory(file, &traj, m.chart(), &mj, Some(&ij))?;
    eprintln!(
        "{}: {} nodes written to {}",
        m.name,
        lattice.n_nodes(),
        a.out.display()
    );
    Ok(())
}
