//! Randomized verification of the bracket identities on full charts.
//!
//! Every instance draws polynomial coefficient functions of degree at most
//! two, builds the relevant observables and checks that the residual of each
//! identity normalizes to zero, falling back to numeric evaluation at random
//! points when rational cancellation is not closed symbolically.

use super::bracket::{is_admissible, omega_bracket, pbracket_external, pbracket_internal};
use super::nvector::HamiltonianNVector;
use super::table::{bracket_table, momentum_position_expected, BracketFlag, TableInputs};
use super::xi::xi_of;
use super::{ObservableForm, ZetaTerm};
use crate::error::Result;
use crate::expr::{Expr, Sym};
use crate::exterior::{ChartSpec, DifferentialForm, PhaseSpace, VectorField};
use crate::symsolve::ZeroCtx;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub seed: u64,
    pub instances: usize,
    pub charts: Vec<(usize, usize)>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            instances: 50,
            charts: vec![(2, 1), (2, 2), (3, 1)],
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub check: String,
    pub chart: String,
    pub instances: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub format_version: u32,
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

impl IdentityReport {
    /// Outcomes for one check name across charts.
    pub fn check(&self, name: &str) -> impl Iterator<Item = &CheckOutcome> {
        let name = name.to_string();
        self.checks.iter().filter(move |c| c.check == name)
    }
}

pub const CHECKS: [&str; 11] = [
    "defining_identity",
    "lie_isomorphism",
    "bracket_table",
    "generalized_table",
    "omega_symmetry",
    "noether",
    "jacobi",
    "admissibility",
    "external_equals_omega",
    "x_independence",
    "x_dependence_detected",
];

type CheckFn = fn(&Instance) -> std::result::Result<(), String>;

fn check_fn(name: &str) -> CheckFn {
    match name {
        "defining_identity" => check_defining,
        "lie_isomorphism" => check_isomorphism,
        "bracket_table" => check_table,
        "generalized_table" => check_generalized_table,
        "omega_symmetry" => check_omega_symmetry,
        "noether" => check_noether,
        "jacobi" => check_jacobi,
        "admissibility" => check_admissibility,
        "external_equals_omega" => check_external_equals_omega,
        "x_independence" => check_x_independence,
        "x_dependence_detected" => check_x_dependence,
        _ => unreachable!(),
    }
}

/// Run every check on every chart.
pub fn run_suite(cfg: &SuiteConfig) -> Result<IdentityReport> {
    let mut checks = Vec::new();
    for &(n, k) in &cfg.charts {
        let ps = PhaseSpace::new(ChartSpec::full(n, k)?);
        let instances: Vec<Instance> = (0..cfg.instances)
            .into_par_iter()
            .map(|i| Instance::draw(&ps, cfg.seed ^ ((n * 31 + k) as u64) << 32 ^ i as u64))
            .collect();
        for name in CHECKS {
            let f = check_fn(name);
            let results: Vec<_> = instances.par_iter().map(f).collect();
            let fails: Vec<String> = results.into_iter().filter_map(|r| r.err()).collect();
            checks.push(CheckOutcome {
                check: name.to_string(),
                chart: format!("({n},{k})"),
                instances: instances.len(),
                failures: fails.len(),
                first_failure: fails.into_iter().next(),
                passed: false,
            });
            let last = checks.last_mut().unwrap();
            last.passed = last.failures == 0;
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(IdentityReport {
        format_version: REPORT_FORMAT_VERSION,
        seed: cfg.seed,
        checks,
        passed,
    })
}

struct Instance {
    ps: PhaseSpace,
    seed: u64,
    /// Observables of every family, in a random order.
    observables: Vec<ObservableForm>,
    zeta: [Vec<ZetaTerm>; 2],
    xi: [Vec<Expr>; 2],
    table: TableInputs,
    h_free: Expr,
    h_dyn: Expr,
    field: usize,
    base_dir: usize,
    g: Expr,
    f: Vec<Expr>,
}

fn random_poly<R: Rng>(rng: &mut R, vars: &[Sym], max_deg: usize) -> Expr {
    let coef = |rng: &mut R| {
        let mut c = rng.gen_range(-3i64..=2);
        if c >= 0 {
            c += 1;
        }
        Expr::int(c)
    };
    let mut e = Expr::zero();
    if rng.gen_bool(0.6) {
        e = e + coef(rng);
    }
    for (a, &v) in vars.iter().enumerate() {
        if rng.gen_bool(0.5) {
            e = e + &coef(rng) * &Expr::sym(v);
        }
        if max_deg >= 2 {
            for &w in &vars[a..] {
                if rng.gen_bool(0.3) {
                    e = e + &coef(rng) * &(&Expr::sym(v) * &Expr::sym(w));
                }
            }
        }
    }
    e
}

fn nonzero_poly<R: Rng>(rng: &mut R, vars: &[Sym], max_deg: usize) -> Expr {
    loop {
        let e = random_poly(rng, vars, max_deg);
        if !e.is_zero() {
            return e;
        }
    }
}

fn random_zeta<R: Rng>(rng: &mut R, c: &ChartSpec) -> Vec<ZetaTerm> {
    let (n, nq) = (c.n(), c.n() + c.k());
    let xy: Vec<Sym> = (0..nq as Sym).collect();
    let subsets = super::nvector::subsets(nq, n);
    (0..rng.gen_range(1..=3))
        .map(|_| {
            let index = subsets.choose(rng).unwrap().clone();
            let dir = *index.choose(rng).unwrap();
            ZetaTerm {
                index,
                dir,
                coeff: nonzero_poly(rng, &xy, 2),
            }
        })
        .collect()
}

/// A Hamiltonian admitting a Hamiltonian n-vector on the chart.
fn dynamical_hamiltonian<R: Rng>(rng: &mut R, ps: &PhaseSpace) -> Expr {
    let c = ps.chart();
    let (n, k) = (c.n(), c.k());
    let xy: Vec<Sym> = (0..(n + k) as Sym).collect();
    let mut h = Expr::sym(c.eps()) + random_poly(rng, &xy, 2);
    if c.momenta().iter().all(|m| m.degree() <= 1) {
        let ps1: Vec<Sym> = (0..n)
            .flat_map(|a| (0..k).map(move |i| (a, i)))
            .map(|(a, i)| c.p1(a, i).unwrap())
            .collect();
        for &p in &ps1 {
            h = h + &random_poly(rng, &xy, 1) * &Expr::sym(p);
        }
        for &p in &ps1 {
            let s = rng.gen_range(1i64..=2);
            h = h + Expr::sym(p)
                .pow(2)
                .scale_int(if rng.gen_bool(0.5) { s } else { -s });
        }
        return h;
    }
    // n = k = 2: velocities c^i_α(x,y), and ∂ℋ/∂p^{12}_{12} = ± det c
    let coeffs: Vec<Vec<Expr>> = (0..k)
        .map(|_| (0..n).map(|_| random_poly(rng, &xy, 1)).collect())
        .collect();
    for (i, row) in coeffs.iter().enumerate() {
        for (a, cia) in row.iter().enumerate() {
            h = h + cia * &Expr::sym(c.p1(a, i).unwrap());
        }
    }
    let det = &(&coeffs[0][0] * &coeffs[1][1]) - &(&coeffs[0][1] * &coeffs[1][0]);
    let p2 = Expr::sym(c.p(&[0, 1], &[0, 1]).expect("full chart"));
    for sign in [1, -1] {
        let cand = &h + &(&det * &p2).scale_int(sign);
        if HamiltonianNVector::complete(ps, &cand, 0).is_ok() {
            return cand;
        }
    }
    h
}

impl Instance {
    fn draw(ps: &PhaseSpace, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = ps.chart();
        let (n, k) = (c.n(), c.k());
        let base: Vec<Sym> = (0..n as Sym).collect();
        let xy: Vec<Sym> = (0..(n + k) as Sym).collect();
        let all: Vec<Sym> = (0..ps.dim() as Sym).collect();
        let field_vec = |rng: &mut ChaCha8Rng| {
            (0..n)
                .map(|_| random_poly(rng, &base, 2))
                .collect::<Vec<_>>()
        };
        let zeta = [random_zeta(&mut rng, c), random_zeta(&mut rng, c)];
        let xi: [Vec<Expr>; 2] = [
            (0..n + k).map(|_| random_poly(&mut rng, &xy, 2)).collect(),
            (0..n + k).map(|_| random_poly(&mut rng, &xy, 2)).collect(),
        ];
        let mut observables = vec![
            ObservableForm::position(rng.gen_range(0..k), field_vec(&mut rng)),
            ObservableForm::momentum(rng.gen_range(0..n + k), random_poly(&mut rng, &base, 2)),
            ObservableForm::GeneralizedPosition {
                zeta: zeta[0].clone(),
            },
            ObservableForm::GeneralizedMomentum { xi: xi[0].clone() },
        ];
        observables.shuffle(&mut rng);
        let table = TableInputs {
            f: field_vec(&mut rng),
            f2: field_vec(&mut rng),
            g: random_poly(&mut rng, &base, 2),
            g2: random_poly(&mut rng, &base, 2),
            time_axis: rng.gen_range(0..n),
        };
        let h_free = random_poly(&mut rng, &all, 2);
        let h_dyn = dynamical_hamiltonian(&mut rng, ps);
        Instance {
            ps: ps.clone(),
            seed,
            observables,
            zeta,
            xi,
            table,
            h_free,
            h_dyn,
            field: rng.gen_range(0..k),
            base_dir: rng.gen_range(0..n),
            g: nonzero_poly(&mut rng, &base, 2),
            f: (0..n).map(|_| nonzero_poly(&mut rng, &base, 2)).collect(),
        }
    }

    fn zc(&self) -> ZeroCtx {
        ZeroCtx::new(self.ps.chart().n_symbols(), self.seed)
    }

    fn expect_zero(&self, what: &str, form: &DifferentialForm) -> std::result::Result<(), String> {
        let mut zc = self.zc();
        match form.terms().iter().find(|(_, e)| !zc.is_zero(e)) {
            None => Ok(()),
            Some((idx, e)) => Err(format!(
                "seed {}: {what}: component {:?} = {}",
                self.seed,
                idx.to_vec(),
                self.ps.chart().show(e)
            )),
        }
    }

    fn expect_zero_field(&self, what: &str, v: &VectorField) -> std::result::Result<(), String> {
        let mut zc = self.zc();
        match v.comps().iter().find(|(_, e)| !zc.is_zero(e)) {
            None => Ok(()),
            Some((c, e)) => Err(format!(
                "seed {}: {what}: component {} = {}",
                self.seed,
                self.ps.chart().name(*c as Sym),
                self.ps.chart().show(e)
            )),
        }
    }

    fn xi(&self, a: &ObservableForm) -> std::result::Result<VectorField, String> {
        xi_of(&self.ps, a)
            .map(|x| x.field)
            .map_err(|e| e.to_string())
    }

    fn field_of(&self, comps: &[Expr]) -> VectorField {
        VectorField::from_comps(self.ps.dim(), comps.iter().cloned().enumerate())
    }

    fn admissible_observables(&self) -> Vec<ObservableForm> {
        let c = self.ps.chart();
        let n = c.n();
        // vertical generalized momentum: ξ^α = 0
        let mut vertical = self.xi[0].clone();
        for v in vertical.iter_mut().take(n) {
            *v = Expr::zero();
        }
        vec![
            ObservableForm::position(self.field, self.f.clone()),
            ObservableForm::momentum(n + self.field, self.g.clone()),
            ObservableForm::GeneralizedPosition {
                zeta: self.zeta[1].clone(),
            },
            ObservableForm::GeneralizedMomentum { xi: vertical },
        ]
    }
}

type Outcome = std::result::Result<(), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn check_defining(inst: &Instance) -> Outcome {
    for a in &inst.observables {
        let x = inst.xi(a)?;
        let da = a.expand(&inst.ps).map_err(err)?.d();
        let r = da.add(&inst.ps.pataplectic().interior(&x).map_err(err)?);
        inst.expect_zero(&format!("d{0} + Ξ({0})⌟Ω", a.name()), &r)?;
    }
    Ok(())
}

fn check_isomorphism(inst: &Instance) -> Outcome {
    let obs = &inst.observables;
    for (i, a) in obs.iter().enumerate() {
        for b in &obs[i..] {
            let ab = pbracket_internal(&inst.ps, a, b).map_err(err)?;
            let comm = inst.xi(a)?.bracket(&inst.xi(b)?);
            let r = ab
                .d()
                .add(&inst.ps.pataplectic().interior(&comm).map_err(err)?);
            inst.expect_zero(&format!("d{{{},{}}} + [Ξa,Ξb]⌟Ω", a.name(), b.name()), &r)?;
        }
    }
    Ok(())
}

fn check_table(inst: &Instance) -> Outcome {
    let tab = bracket_table(&inst.ps, &inst.h_dyn, &inst.table).map_err(err)?;
    match tab.iter().find(|e| e.flag == BracketFlag::Mismatch) {
        None => Ok(()),
        Some(e) => Err(format!(
            "seed {}: {{{}, {}}} mismatch",
            inst.seed, e.left, e.right
        )),
    }
}

fn check_generalized_table(inst: &Instance) -> Outcome {
    let ps = &inst.ps;
    let z = |i: usize| ObservableForm::GeneralizedPosition {
        zeta: inst.zeta[i].clone(),
    };
    let p = |i: usize| ObservableForm::GeneralizedMomentum {
        xi: inst.xi[i].clone(),
    };
    let qq = pbracket_internal(ps, &z(0), &z(1)).map_err(err)?;
    inst.expect_zero("{Q^ζ, Q^ζ~}", &qq)?;

    let (x0, x1) = (inst.field_of(&inst.xi[0]), inst.field_of(&inst.xi[1]));
    let pp = pbracket_internal(ps, &p(0), &p(1)).map_err(err)?;
    let theta = ps.theta();
    let want = theta.interior(&x0.bracket(&x1)).map_err(err)?.add(
        &theta
            .interior(&x0)
            .map_err(err)?
            .interior(&x1)
            .map_err(err)?
            .d(),
    );
    inst.expect_zero("{P_ξ, P_ξ~} − P_[ξ,ξ~] − d(ξ~⌟ξ⌟θ)", &pp.sub(&want))?;

    let pq = pbracket_internal(ps, &p(0), &z(0)).map_err(err)?;
    let want = momentum_position_expected(ps, &x0, &inst.zeta[0]).map_err(err)?;
    inst.expect_zero("{P_ξ, Q^ζ} − stated value", &pq.sub(&want))
}

fn check_omega_symmetry(inst: &Instance) -> Outcome {
    for a in &inst.observables {
        let l = inst.ps.pataplectic().lie_derivative(&inst.xi(a)?);
        inst.expect_zero(&format!("ℒ_Ξ({})Ω", a.name()), &l)?;
    }
    Ok(())
}

fn check_noether(inst: &Instance) -> Outcome {
    let ps = &inst.ps;
    let h = &inst.h_free;
    for comps in &inst.xi {
        let a = ObservableForm::GeneralizedMomentum { xi: comps.clone() };
        let lhs = pbracket_external(ps, &ps.density(h), &a).map_err(err)?;
        let x = inst.xi(&a)?;
        let lie = ps.theta().sub(&ps.density(h)).lie_derivative(&x);
        let exact = ps
            .density(h)
            .interior(&inst.field_of(comps))
            .map_err(err)?
            .d();
        inst.expect_zero("{ℋω,P_ξ} − ℒ(θ−ℋω) − d(ξ⌟ℋω)", &lhs.sub(&lie).sub(&exact))?;
    }
    Ok(())
}

fn check_jacobi(inst: &Instance) -> Outcome {
    let ps = &inst.ps;
    let obs = &inst.observables[..3];
    let xs: Vec<VectorField> = obs
        .iter()
        .map(|a| inst.xi(a))
        .collect::<std::result::Result<_, _>>()?;
    let mut jv = VectorField::zero(ps.dim());
    let mut jf = DifferentialForm::zero(ps.dim(), ps.chart().n() - 1);
    for r in 0..3 {
        let (a, b, c) = (&xs[r], &xs[(r + 1) % 3], &xs[(r + 2) % 3]);
        let bc = b.bracket(c);
        jv = jv.add(&a.bracket(&bc));
        // {a,{b,c}} with Ξ({b,c}) = [Ξb,Ξc]
        let term = ps
            .pataplectic()
            .interior(a)
            .map_err(err)?
            .interior(&bc)
            .map_err(err)?;
        jf = jf.add(&term);
    }
    inst.expect_zero_field("[Ξa,[Ξb,Ξc]] + cyclic", &jv)?;
    inst.expect_zero("d({a,{b,c}} + cyclic)", &jf.d())
}

fn check_admissibility(inst: &Instance) -> Outcome {
    let ps = &inst.ps;
    for a in inst.admissible_observables() {
        let adm = is_admissible(ps, &a).map_err(err)?;
        if !adm.admissible {
            return Err(format!(
                "seed {}: {} reported inadmissible",
                inst.seed,
                a.name()
            ));
        }
    }
    let bad = ObservableForm::momentum(inst.base_dir, inst.g.clone());
    let adm = is_admissible(ps, &bad).map_err(err)?;
    match adm.witness {
        Some((beta, w)) if !adm.admissible && beta == inst.base_dir && w == inst.g => Ok(()),
        other => Err(format!(
            "seed {}: P_{{{},g}} gave admissible={} witness={:?}",
            inst.seed,
            inst.base_dir + 1,
            adm.admissible,
            other.map(|(b, e)| (b, ps.chart().show(&e)))
        )),
    }
}

fn check_external_equals_omega(inst: &Instance) -> Outcome {
    let ps = &inst.ps;
    for a in inst.admissible_observables() {
        let ext = pbracket_external(ps, &ps.density(&inst.h_dyn), &a).map_err(err)?;
        let om = omega_bracket(ps, &inst.h_dyn, &a.expand(ps).map_err(err)?).map_err(err)?;
        inst.expect_zero(
            &format!("{{ℋω,{0}}} − {{ℋω,{0}}}_ω", a.name()),
            &ext.sub(&om),
        )?;
    }
    Ok(())
}

fn two_completions(
    inst: &Instance,
) -> std::result::Result<(HamiltonianNVector, HamiltonianNVector), String> {
    let x1 = HamiltonianNVector::complete(&inst.ps, &inst.h_dyn, inst.seed).map_err(err)?;
    let x2 = HamiltonianNVector::complete(&inst.ps, &inst.h_dyn, inst.seed.wrapping_add(1))
        .map_err(err)?;
    Ok((x1, x2))
}

fn check_x_independence(inst: &Instance) -> Outcome {
    let ps = &inst.ps;
    let (x1, x2) = two_completions(inst)?;
    for a in inst.admissible_observables() {
        let lam = a.expand(ps).map_err(err)?;
        let d = x1
            .sharp(ps, &lam)
            .map_err(err)?
            .sub(&x2.sharp(ps, &lam).map_err(err)?);
        inst.expect_zero(&format!("X♯{} − X'♯{}", a.name(), a.name()), &d)?;
    }
    Ok(())
}

fn check_x_dependence(inst: &Instance) -> Outcome {
    let ps = &inst.ps;
    let (x1, x2) = two_completions(inst)?;
    let lam = ObservableForm::momentum(inst.base_dir, inst.g.clone())
        .expand(ps)
        .map_err(err)?;
    let d = x1
        .sharp(ps, &lam)
        .map_err(err)?
        .sub(&x2.sharp(ps, &lam).map_err(err)?);
    match inst.expect_zero("", &d) {
        Ok(()) => Err(format!(
            "seed {}: X♯P_{{{},g}} agrees across completions",
            inst.seed,
            inst.base_dir + 1
        )),
        Err(_) => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let rep = run_suite(&SuiteConfig {
            seed: 11,
            instances: 4,
            charts: vec![(2, 1), (2, 2), (3, 1)],
        })
        .unwrap();
        for c in &rep.checks {
            assert!(
                c.passed,
                "{} on {}: {:?}",
                c.check, c.chart, c.first_failure
            );
        }
        assert_eq!(rep.checks.len(), 3 * CHECKS.len());
    }

    #[test]
    fn report_is_deterministic() {
        let cfg = SuiteConfig {
            seed: 5,
            instances: 2,
            charts: vec![(2, 1)],
        };
        let a = serde_json::to_string(&run_suite(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_suite(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
