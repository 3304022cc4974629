use super::lattice::LatticeSpec;
use crate::error::{Error, Result};
use crate::expr::{Compiled, Expr, Sym};
use crate::exterior::ChartSpec;
use crate::models::Model;
use serde::{Deserialize, Serialize};

pub const BLOW_UP: f64 = 1e12;

/// Nodal values of a lattice solution, time-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub lattice: LatticeSpec,
    pub n: usize,
    pub k: usize,
    /// `y^i`, `[node·k + i]`.
    pub y: Vec<f64>,
    /// `p^α_i`, `[node·n·k + i·n + α]`.
    pub p: Vec<f64>,
    /// `ε`, one per node.
    pub eps: Vec<f64>,
    /// Degree-2 momenta in chart order, `[node·n2 + j]`.
    pub p2: Vec<f64>,
    pub n2: usize,
}

impl Trajectory {
    pub fn zeros(lattice: LatticeSpec, chart: &ChartSpec) -> Self {
        let (n, k) = (chart.n(), chart.k());
        let m = lattice.n_nodes();
        let n2 = chart.momenta().iter().filter(|m| m.degree() == 2).count();
        Trajectory {
            lattice,
            n,
            k,
            y: vec![0.0; m * k],
            p: vec![0.0; m * n * k],
            eps: vec![0.0; m],
            p2: vec![0.0; m * n2],
            n2,
        }
    }

    pub fn y_at(&self, node: usize) -> &[f64] {
        &self.y[node * self.k..(node + 1) * self.k]
    }
    pub fn p_at(&self, node: usize) -> &[f64] {
        let w = self.n * self.k;
        &self.p[node * w..(node + 1) * w]
    }

    /// Flat chart point (velocities zero) at a node.
    pub fn point(&self, chart: &ChartSpec, node: usize) -> Vec<f64> {
        let t = node / self.lattice.ns();
        let s = node % self.lattice.ns();
        let mut pt = vec![0.0; chart.n_symbols()];
        pt[..self.n].copy_from_slice(&self.lattice.coords(t, s));
        for i in 0..self.k {
            pt[chart.y(i) as usize] = self.y[node * self.k + i];
            for a in 0..self.n {
                if let Some(sym) = chart.p1(a, i) {
                    pt[sym as usize] = self.p[node * self.n * self.k + i * self.n + a];
                }
            }
        }
        pt[chart.eps() as usize] = self.eps[node];
        let mut j = 0;
        for (mi, m) in chart.momenta().iter().enumerate() {
            if m.degree() == 2 {
                pt[chart.momentum_sym(mi) as usize] = self.p2[node * self.n2 + j];
                j += 1;
            }
        }
        pt
    }

    /// Store a chart point's momenta at a node.
    pub fn set_momenta(&mut self, chart: &ChartSpec, node: usize, pt: &[f64]) {
        for i in 0..self.k {
            for a in 0..self.n {
                if let Some(sym) = chart.p1(a, i) {
                    self.p[node * self.n * self.k + i * self.n + a] = pt[sym as usize];
                }
            }
        }
        self.eps[node] = pt[chart.eps() as usize];
        let mut j = 0;
        for (mi, m) in chart.momenta().iter().enumerate() {
            if m.degree() == 2 {
                self.p2[node * self.n2 + j] = pt[chart.momentum_sym(mi) as usize];
                j += 1;
            }
        }
    }

    /// `ε = −(ℋ − ε)`, the gauge `ℋ = 0`.
    pub fn fill_gauge_eps(&mut self, model: &Model) -> Result<()> {
        let chart = model.chart().clone();
        for node in 0..self.lattice.n_nodes() {
            let pt = self.point(&chart, node);
            self.eps[node] = model.hamiltonian.gauge_eps(&pt)?;
        }
        Ok(())
    }

    pub fn check_finite(&self) -> Result<()> {
        let k = self.k.max(1);
        for (j, v) in self.y.iter().enumerate() {
            if !v.is_finite() || v.abs() > BLOW_UP {
                return Err(self.blow_up(j / k, *v));
            }
        }
        let w = (self.n * self.k).max(1);
        for (j, v) in self.p.iter().enumerate() {
            if !v.is_finite() || v.abs() > BLOW_UP {
                return Err(self.blow_up(j / w, *v));
            }
        }
        Ok(())
    }

    fn blow_up(&self, node: usize, value: f64) -> Error {
        let ns = self.lattice.ns();
        let mut idx = vec![node / ns];
        idx.extend(self.lattice.spatial_index(node % ns));
        Error::BlowUp {
            node: idx,
            value: if value.is_finite() {
                value.abs()
            } else {
                f64::INFINITY
            },
        }
    }
}

/// Initial data: `y^i(x)` as expressions in the base coordinates, evaluated
/// on the first time slice, with `∂_t y^i` defaulting to the symbolic derivative.
#[derive(Clone, Debug)]
pub struct InitData {
    pub y: Vec<Expr>,
    pub dt_y: Option<Vec<Expr>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitJson {
    pub y: Vec<String>,
    #[serde(default)]
    pub dt_y: Option<Vec<String>>,
}

impl InitData {
    pub fn from_json(j: &InitJson, chart: &ChartSpec) -> Result<Self> {
        let parse = |field: &str, v: &[String]| -> Result<Vec<Expr>> {
            v.iter()
                .enumerate()
                .map(|(i, s)| {
                    let e = chart.parse_field(&format!("{field}[{i}]"), s)?;
                    if e.symbols().iter().any(|&s| s as usize >= chart.n()) {
                        return Err(Error::Input(format!(
                            "{field}[{i}]: initial data may depend on x only"
                        )));
                    }
                    Ok(e)
                })
                .collect()
        };
        let y = parse("y", &j.y)?;
        if y.len() != chart.k() {
            return Err(Error::Input(format!(
                "y: expected {} fields, got {}",
                chart.k(),
                y.len()
            )));
        }
        let dt_y = j.dt_y.as_ref().map(|v| parse("dt_y", v)).transpose()?;
        if dt_y.as_ref().is_some_and(|d| d.len() != chart.k()) {
            return Err(Error::Input("dt_y: wrong number of fields".into()));
        }
        Ok(InitData { y, dt_y })
    }

    /// Nodal `y` and velocities `v^i_α` on time level 0.
    pub fn sample(&self, lattice: &LatticeSpec, k: usize) -> (Vec<f64>, Vec<f64>) {
        let n = lattice.n();
        let t = lattice.time_axis;
        let cy: Vec<Compiled> = self.y.iter().map(|e| e.compile()).collect();
        let cv: Vec<Vec<Compiled>> = (0..k)
            .map(|i| {
                (0..n)
                    .map(|a| match (&self.dt_y, a == t) {
                        (Some(d), true) => d[i].compile(),
                        _ => self.y[i].diff(a as Sym).compile(),
                    })
                    .collect()
            })
            .collect();
        let ns = lattice.ns();
        let mut y = vec![0.0; ns * k];
        let mut v = vec![0.0; ns * k * n];
        for s in 0..ns {
            let x = lattice.coords(0, s);
            for i in 0..k {
                y[s * k + i] = cy[i].eval(&x);
                for a in 0..n {
                    v[(s * k + i) * n + a] = cv[i][a].eval(&x);
                }
            }
        }
        (y, v)
    }
}
