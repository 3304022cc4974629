//! Sigma models `L = ½(h_ij g^{αβ} + b_ij ε^{αβ}/g) v^i_α v^j_β − V`: interacting
//! scalar fields (`b = 0`, Weyl chart) and the string (`n = 2`, degree-2 momenta).

use crate::error::{Error, Result};
use crate::expr::{Expr, Sym};
use crate::exterior::{ChartJson, ChartSpec, PhaseSpace};
use crate::legendre::{build_hamiltonian, chart_point, HamiltonianModel, LagrangianModel};
use crate::linalg::{inverse, symbolic_det, symbolic_inverse};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaKind {
    /// Weyl chart only.
    Scalar,
    /// `n = 2` with the degree-2 momenta `p_ij`.
    String,
}

#[derive(Clone, Debug)]
pub struct SigmaModel {
    kind: SigmaKind,
    chart: ChartSpec,
    metric_x: Vec<Vec<Expr>>,
    inv_metric_x: Vec<Vec<Expr>>,
    weight: Expr,
    metric_y: Vec<Vec<Expr>>,
    b_form: Option<Vec<Vec<Expr>>>,
    potential: Expr,
}

fn identity_exprs(k: usize) -> Vec<Vec<Expr>> {
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| if i == j { Expr::one() } else { Expr::zero() })
                .collect()
        })
        .collect()
}

fn check_square(name: &str, m: &[Vec<Expr>], size: usize) -> Result<()> {
    if m.len() != size || m.iter().any(|r| r.len() != size) {
        return Err(Error::Model(format!("{name} must be {size}×{size}")));
    }
    Ok(())
}

fn levi(a: usize, b: usize) -> i64 {
    match (a, b) {
        (0, 1) => 1,
        (1, 0) => -1,
        _ => 0,
    }
}

impl SigmaModel {
    /// `metric_x` in `x`, `metric_y` and `b_form` in `y`, `potential` in `(x, y)`.
    pub fn new(
        kind: SigmaKind,
        n: usize,
        k: usize,
        metric_x: Vec<Vec<Expr>>,
        metric_y: Vec<Vec<Expr>>,
        b_form: Option<Vec<Vec<Expr>>>,
        potential: Expr,
    ) -> Result<Self> {
        check_square("metric_x", &metric_x, n)?;
        check_square("metric_y", &metric_y, k)?;
        let degrees: &[usize] = match kind {
            SigmaKind::Scalar => &[0, 1],
            SigmaKind::String if n != 2 => {
                return Err(Error::Model("the string model needs n = 2".into()))
            }
            SigmaKind::String if k >= 2 => &[0, 1, 2],
            SigmaKind::String => &[0, 1],
        };
        let chart = ChartSpec::new(n, k, degrees)?;
        let nq = (n + k) as Sym;
        for (name, m, ok) in [
            ("metric_x", &metric_x, (0..n as Sym).collect::<Vec<_>>()),
            ("metric_y", &metric_y, (n as Sym..nq).collect()),
        ] {
            for (r, row) in m.iter().enumerate() {
                for (c, e) in row.iter().enumerate() {
                    if let Some(s) = e.symbols().iter().find(|s| !ok.contains(s)) {
                        return Err(Error::Model(format!(
                            "{name}[{r}][{c}] depends on {}",
                            chart.name(*s)
                        )));
                    }
                    if !(e - &m[c][r]).is_zero() {
                        return Err(Error::Model(format!(
                            "{name} is not symmetric at [{r}][{c}]"
                        )));
                    }
                }
            }
        }
        if let Some(b) = &b_form {
            if n != 2 {
                return Err(Error::Model("b_form requires n = 2".into()));
            }
            check_square("b_form", b, k)?;
            for (r, row) in b.iter().enumerate() {
                for (c, e) in row.iter().enumerate() {
                    if e.symbols().iter().any(|&s| s < n as Sym || s >= nq) {
                        return Err(Error::Model(format!(
                            "b_form[{r}][{c}] must depend on y only"
                        )));
                    }
                    if !(e + &b[c][r]).is_zero() {
                        return Err(Error::Model(format!(
                            "b_form is not antisymmetric at [{r}][{c}]"
                        )));
                    }
                }
            }
        }
        if let Some(&s) = potential.symbols().iter().find(|&&s| s >= nq) {
            return Err(Error::Model(format!(
                "potential depends on {}",
                chart.name(s)
            )));
        }
        let det = symbolic_det(&metric_x);
        if det.is_zero() {
            return Err(Error::Model("metric_x is singular".into()));
        }
        // sign of the determinant at a sample point fixes |det g|
        let sample: Vec<f64> = (0..chart.n_symbols())
            .map(|s| 0.5 + 0.1 * s as f64)
            .collect();
        let d0 = det.eval(&sample);
        let weight = if d0 < 0.0 { (-det).sqrt() } else { det.sqrt() };
        let inv_metric_x = symbolic_inverse(&metric_x, chart.n_symbols())?;
        Ok(SigmaModel {
            kind,
            chart,
            metric_x,
            inv_metric_x,
            weight,
            metric_y,
            b_form,
            potential,
        })
    }

    /// Scalar fields `y^i` with Euclidean target.
    pub fn scalar(metric_x: Vec<Vec<Expr>>, k: usize, potential: Expr) -> Result<Self> {
        let n = metric_x.len();
        SigmaModel::new(
            SigmaKind::Scalar,
            n,
            k,
            metric_x,
            identity_exprs(k),
            None,
            potential,
        )
    }

    /// Minkowski `diag(1, −1, …)`, one field, `V = ½m²y²`.
    pub fn klein_gordon(n: usize, mass: Expr) -> Result<Self> {
        let g = minkowski(n);
        let y = Expr::sym(n as Sym);
        let v = (&mass * &mass * y.pow(2)).scale(&half());
        SigmaModel::scalar(g, 1, v)
    }

    pub fn string(
        metric_x: Vec<Vec<Expr>>,
        metric_y: Vec<Vec<Expr>>,
        b_form: Option<Vec<Vec<Expr>>>,
    ) -> Result<Self> {
        let k = metric_y.len();
        SigmaModel::new(
            SigmaKind::String,
            2,
            k,
            metric_x,
            metric_y,
            b_form,
            Expr::zero(),
        )
    }

    /// Euclidean base and target, `b = 0`.
    pub fn harmonic_map(k: usize) -> Result<Self> {
        SigmaModel::string(identity_exprs(2), identity_exprs(k), None)
    }

    pub fn kind(&self) -> SigmaKind {
        self.kind
    }
    pub fn chart(&self) -> &ChartSpec {
        &self.chart
    }
    pub fn n(&self) -> usize {
        self.chart.n()
    }
    pub fn k(&self) -> usize {
        self.chart.k()
    }
    pub fn metric_x(&self) -> &[Vec<Expr>] {
        &self.metric_x
    }
    pub fn inv_metric_x(&self) -> &[Vec<Expr>] {
        &self.inv_metric_x
    }
    pub fn metric_y(&self) -> &[Vec<Expr>] {
        &self.metric_y
    }
    pub fn b_form(&self) -> Option<&[Vec<Expr>]> {
        self.b_form.as_deref()
    }
    pub fn potential(&self) -> &Expr {
        &self.potential
    }
    /// `g = √|det g_{αβ}|`.
    pub fn weight(&self) -> &Expr {
        &self.weight
    }

    pub fn phase_space(&self) -> Result<PhaseSpace> {
        if self.weight.is_one() {
            Ok(PhaseSpace::new(self.chart.clone()))
        } else {
            PhaseSpace::weighted(self.chart.clone(), self.weight.clone())
        }
    }

    /// `G^{αβ}_{ij} = h_ij g^{αβ} + b_ij ε^{αβ}/g`.
    pub fn g_tensor(&self, i: usize, a: usize, j: usize, b: usize) -> Expr {
        let mut e = &self.metric_y[i][j] * &self.inv_metric_x[a][b];
        if let Some(bf) = &self.b_form {
            let s = levi(a, b);
            if s != 0 && !bf[i][j].is_zero() {
                e = e + bf[i][j].scale_int(s).div(&self.weight);
            }
        }
        e
    }

    /// Antisymmetric extension of `p_ij`.
    pub fn p2(&self, i: usize, j: usize) -> Expr {
        if i == j {
            return Expr::zero();
        }
        let (lo, hi, s) = if i < j { (i, j, 1) } else { (j, i, -1) };
        match self.chart.p(&[0, 1], &[lo, hi]) {
            Some(p) => Expr::sym(p).scale_int(s),
            None => Expr::zero(),
        }
    }

    /// `M^{αβ}_{ij} = G^{αβ}_{ij} − p_ij ε^{αβ}`, indexed by `(i·n + α, j·n + β)`.
    pub fn m_symbolic(&self) -> Vec<Vec<Expr>> {
        let (n, k) = (self.n(), self.k());
        let mut m = vec![vec![Expr::zero(); n * k]; n * k];
        for i in 0..k {
            for a in 0..n {
                for j in 0..k {
                    for b in 0..n {
                        let mut e = self.g_tensor(i, a, j, b);
                        let s = levi(a, b);
                        if s != 0 && n == 2 {
                            e = e - self.p2(i, j).scale_int(s);
                        }
                        m[i * n + a][j * n + b] = e;
                    }
                }
            }
        }
        m
    }

    pub fn lagrangian(&self) -> Expr {
        let (n, k) = (self.n(), self.k());
        let c = &self.chart;
        let mut acc = Expr::zero();
        for i in 0..k {
            for a in 0..n {
                for j in 0..k {
                    for b in 0..n {
                        let gt = self.g_tensor(i, a, j, b);
                        if gt.is_zero() {
                            continue;
                        }
                        acc = acc + &gt * &(&Expr::sym(c.v(i, a)) * &Expr::sym(c.v(j, b)));
                    }
                }
            }
        }
        acc.scale(&half()) - &self.potential
    }

    /// `ε + ½ g_{αβ} h^{ij} p^α_i p^β_j + V` for models without `b`.
    pub fn closed_hamiltonian(&self) -> Result<Expr> {
        if self.b_form.is_some() || self.kind == SigmaKind::String && self.k() >= 2 {
            return Err(Error::Model(
                "no closed-form Hamiltonian on this chart".into(),
            ));
        }
        let (n, k) = (self.n(), self.k());
        let c = &self.chart;
        let hinv = symbolic_inverse(&self.metric_y, c.n_symbols())?;
        let mut acc = Expr::zero();
        for i in 0..k {
            for j in 0..k {
                for a in 0..n {
                    for b in 0..n {
                        let coef = &self.metric_x[a][b] * &hinv[i][j];
                        if coef.is_zero() {
                            continue;
                        }
                        acc = acc
                            + &coef
                                * &(&Expr::sym(c.p1(a, i).unwrap())
                                    * &Expr::sym(c.p1(b, j).unwrap()));
                    }
                }
            }
        }
        Ok(Expr::sym(c.eps()) + acc.scale(&half()) + &self.potential)
    }

    /// Numeric `M` at a chart point.
    pub fn m_matrix(&self, pt: &[f64]) -> DMatrix<f64> {
        let m = self.m_symbolic();
        let s = m.len();
        DMatrix::from_fn(s, s, |r, c| m[r][c].eval(pt))
    }

    /// `K = M⁻¹`.
    pub fn k_matrix(&self, pt: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.m_matrix(pt);
        inverse(&m).ok_or(Error::SingularHessian {
            cond: f64::INFINITY,
        })
    }

    /// `pt` with `p_ij` moved onto `ℛ`: `g p_ij = b_ij`.
    pub fn project_to_r(&self, pt: &[f64]) -> Vec<f64> {
        let mut out = pt.to_vec();
        let g = self.weight.eval(pt);
        for i in 0..self.k() {
            for j in i + 1..self.k() {
                if let Some(s) = self.chart.p(&[0, 1], &[i, j]) {
                    let b = self
                        .b_form
                        .as_ref()
                        .map(|b| b[i][j].eval(pt))
                        .unwrap_or(0.0);
                    out[s as usize] = b / g;
                }
            }
        }
        out
    }

    pub fn to_model(&self, name: &str) -> Result<Model> {
        let lag = LagrangianModel::new(self.chart.clone(), self.lagrangian())?;
        let ham = build_hamiltonian(lag)?;
        Ok(Model {
            name: name.to_string(),
            weight: self.weight.clone(),
            hamiltonian: ham,
            sigma: Some(self.clone()),
        })
    }
}

fn half() -> crate::expr::Rational {
    crate::expr::Rational::new(1.into(), 2.into())
}

/// `diag(1, −1, …, −1)` with the time axis first.
pub fn minkowski(n: usize) -> Vec<Vec<Expr>> {
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| match (a == b, a) {
                    (true, 0) => Expr::one(),
                    (true, _) => Expr::int(-1),
                    _ => Expr::zero(),
                })
                .collect()
        })
        .collect()
}

/// A Lagrangian model with its Hamiltonian and the volume weight of `ω`.
#[derive(Clone, Debug)]
pub struct Model {
    pub name: String,
    pub weight: Expr,
    pub hamiltonian: HamiltonianModel,
    pub sigma: Option<SigmaModel>,
}

impl Model {
    pub fn chart(&self) -> &ChartSpec {
        self.hamiltonian.chart()
    }
    pub fn lagrangian(&self) -> &LagrangianModel {
        self.hamiltonian.lagrangian()
    }
    pub fn phase_space(&self) -> Result<PhaseSpace> {
        if self.weight.is_one() {
            Ok(PhaseSpace::new(self.chart().clone()))
        } else {
            PhaseSpace::weighted(self.chart().clone(), self.weight.clone())
        }
    }

    /// Linked point `(q, v, w) → (q, p)`; on string charts the free `p_ij` are put on `ℛ`.
    pub fn forward(&self, q: &[f64], v: &[f64], w: f64) -> Vec<f64> {
        let c = self.chart();
        let mut pt = chart_point(c, q, &[], v);
        if let Some(s) = &self.sigma {
            pt = s.project_to_r(&pt);
        }
        self.lagrangian().forward(&pt, w)
    }

    pub fn from_json(j: &ModelJson) -> Result<Model> {
        if let Some(src) = &j.lagrangian {
            let cj = j
                .chart
                .as_ref()
                .ok_or_else(|| Error::Input("chart: required with lagrangian".into()))?;
            let chart = ChartSpec::from_json(cj)?;
            let l = chart.parse_field("lagrangian", src)?;
            let weight = match &j.weight {
                Some(w) => chart.parse_field("weight", w)?,
                None => Expr::one(),
            };
            let ham = build_hamiltonian(LagrangianModel::new(chart, l)?)?;
            return Ok(Model {
                name: j.name.clone().unwrap_or_else(|| "custom".into()),
                weight,
                hamiltonian: ham,
                sigma: None,
            });
        }
        if let Some(mx) = &j.metric_x {
            let cj = j
                .chart
                .as_ref()
                .ok_or_else(|| Error::Input("chart: required with metric_x".into()))?;
            let chart = ChartSpec::from_json(cj)?;
            let matrix = |field: &str, m: &Vec<Vec<String>>| -> Result<Vec<Vec<Expr>>> {
                m.iter()
                    .enumerate()
                    .map(|(r, row)| {
                        row.iter()
                            .enumerate()
                            .map(|(c, s)| chart.parse_field(&format!("{field}[{r}][{c}]"), s))
                            .collect()
                    })
                    .collect()
            };
            let gx = matrix("metric_x", mx)?;
            let hy = match &j.metric_y {
                Some(m) => matrix("metric_y", m)?,
                None => identity_exprs(cj.k),
            };
            let b = j.b_form.as_ref().map(|m| matrix("b_form", m)).transpose()?;
            let v = match &j.potential {
                Some(s) => chart.parse_field("potential", s)?,
                None => Expr::zero(),
            };
            let kind = if cj.momentum_degrees.contains(&2) {
                SigmaKind::String
            } else {
                SigmaKind::Scalar
            };
            let s = SigmaModel::new(kind, cj.n, cj.k, gx, hy, b, v)?;
            return s.to_model(j.name.as_deref().unwrap_or("sigma"));
        }
        match j.preset.as_deref() {
            Some("klein_gordon") => {
                let n = j.chart.as_ref().map(|c| c.n).unwrap_or(2);
                let m = j.mass.unwrap_or(1.0);
                let mass = crate::expr::rational_from_f64_exact(&format!("{m}"))
                    .map(Expr::constant)
                    .ok_or_else(|| Error::Input("mass: not a finite number".into()))?;
                SigmaModel::klein_gordon(n, mass)?.to_model("klein_gordon")
            }
            Some("harmonic_map") => {
                let k = j.chart.as_ref().map(|c| c.k).unwrap_or(2);
                SigmaModel::harmonic_map(k)?.to_model("harmonic_map")
            }
            Some(other) => Err(Error::Input(format!("preset: unknown preset '{other}'"))),
            None => Err(Error::Input(
                "model: one of lagrangian, metric_x or preset is required".into(),
            )),
        }
    }
}

/// Model definition file.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelJson {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub chart: Option<ChartJson>,
    #[serde(default)]
    pub lagrangian: Option<String>,
    #[serde(default)]
    pub weight: Option<String>,
    #[serde(default)]
    pub metric_x: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub metric_y: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub b_form: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub potential: Option<String>,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub mass: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::InvertOpts;
    use crate::symsolve::ZeroCtx;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn klein_gordon_hamiltonian_sign_pattern() {
        let m = SigmaModel::klein_gordon(2, Expr::one())
            .unwrap()
            .to_model("kg")
            .unwrap();
        let c = m.chart();
        let p = |a| Expr::sym(c.p1(a, 0).unwrap());
        let want = Expr::sym(c.eps())
            + (p(0).pow(2) - p(1).pow(2)).scale(&half())
            + Expr::sym(c.y(0)).pow(2).scale(&half());
        assert_eq!(m.hamiltonian.symbolic().unwrap(), &want);
        assert!(m.weight.is_one());
    }

    #[test]
    fn curved_scalar_matches_closed_form() {
        let c = ChartSpec::weyl(2, 2).unwrap();
        let x1 = Expr::sym(c.x(0));
        let g = vec![
            vec![Expr::one() + x1.pow(2), Expr::frac(1, 3)],
            vec![Expr::frac(1, 3), Expr::int(2)],
        ];
        let v = Expr::sym(c.y(0)).pow(4) + &Expr::sym(c.y(1)) * &x1;
        let s = SigmaModel::scalar(g, 2, v).unwrap();
        let m = s.to_model("curved").unwrap();
        let h = m.hamiltonian.symbolic().unwrap().clone();
        let mut zc = ZeroCtx::new(c.n_symbols(), 9);
        assert!(zc.is_zero(&(h - s.closed_hamiltonian().unwrap())));
    }

    #[test]
    fn string_hessian_is_minus_m() {
        let c = ChartSpec::new(2, 3, &[0, 1, 2]).unwrap();
        let y = |i| Expr::sym(c.y(i));
        let h = vec![
            vec![Expr::one() + y(0).pow(2), Expr::zero(), Expr::zero()],
            vec![Expr::zero(), Expr::int(2), y(2).clone()],
            vec![Expr::zero(), y(2).clone(), Expr::int(3)],
        ];
        let b = vec![
            vec![Expr::zero(), y(1).clone(), Expr::one()],
            vec![-y(1), Expr::zero(), Expr::zero()],
            vec![Expr::int(-1), Expr::zero(), Expr::zero()],
        ];
        let s = SigmaModel::string(identity_exprs(2), h, Some(b)).unwrap();
        let m = s.to_model("s").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let pt: Vec<f64> = (0..c.n_symbols())
                .map(|_| rng.gen_range(-0.5..0.5))
                .collect();
            let hess = m.lagrangian().hess_w(&pt);
            let mm = s.m_matrix(&pt);
            assert!((hess + &mm).abs().max() < 1e-13);
            // numeric ℋ = ε + ½ pᵀ K p
            let k = s.k_matrix(&pt).unwrap();
            let p1: Vec<f64> = (0..3)
                .flat_map(|i| (0..2).map(move |a| (i, a)))
                .map(|(i, a)| pt[c.p1(a, i).unwrap() as usize])
                .collect();
            let pv = nalgebra::DVector::from_vec(p1);
            let want = pt[c.eps() as usize] + 0.5 * pv.dot(&(&k * &pv));
            assert!((m.hamiltonian.value(&pt).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn string_round_trip_on_r() {
        let s = SigmaModel::harmonic_map(2).unwrap();
        let m = s.to_model("hm").unwrap();
        let v = [0.3, -0.2, 0.5, 0.1];
        let pt = m.forward(&[0.1, 0.2, 0.3, 0.4], &v, 0.25);
        let inv = m.hamiltonian.invert(&pt, &InvertOpts::default()).unwrap();
        for (a, b) in inv.v.iter().zip(v) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((m.hamiltonian.value(&pt).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn json_errors_name_the_field() {
        let j: ModelJson = serde_json::from_str(
            r#"{"chart":{"n":2,"k":1},"metric_x":[["1","0"],["0","-1"]],"potential":"y1^^2"}"#,
        )
        .unwrap();
        let e = Model::from_json(&j).unwrap_err().to_string();
        assert!(e.contains("potential"), "{e}");
        let j: ModelJson = serde_json::from_str(r#"{"preset":"klein_gordon"}"#).unwrap();
        assert_eq!(Model::from_json(&j).unwrap().chart().n(), 2);
    }
}
