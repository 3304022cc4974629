//! Scalar fields on a time-orthogonal base: staggered leapfrog for the
//! De Donder–Weyl system, and a three-level scheme for the Euler–Lagrange
//! equation used as its reference.

use super::lattice::LatticeSpec;
use super::trajectory::{InitData, Trajectory};
use crate::error::{Error, Result};
use crate::expr::{Compiled, Sym};
use crate::models::{Model, SigmaKind};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Spatial operator of the Euler–Lagrange reference scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElStencil {
    /// Nearest-neighbour second differences with midpoint coefficients.
    #[default]
    Compact,
    /// Composed central first differences, the operator of the DW scheme.
    Wide,
}

const PAR_MIN: usize = 256;

pub(crate) struct ScalarSetup {
    n: usize,
    k: usize,
    t_axis: usize,
    spatial: Vec<usize>,
    h: DMatrix<f64>,
    hinv: DMatrix<f64>,
    weight: Compiled,
    ginv: Vec<Vec<Compiled>>,
    dv: Vec<Compiled>,
    time_dependent: bool,
    /// `[j][s] = (s − e_j, s + e_j)` along spatial axis `spatial[j]`.
    nbr: Vec<Vec<(Option<usize>, Option<usize>)>>,
}

#[derive(Clone)]
struct Geometry {
    /// `g` per slice node.
    g: Vec<f64>,
    /// `g g^{ab}` per slice node, `[s][a][b]` over all axes.
    gg: Vec<Vec<Vec<f64>>>,
}

impl ScalarSetup {
    pub(crate) fn new(model: &Model, lat: &LatticeSpec) -> Result<Self> {
        let sigma = model
            .sigma
            .as_ref()
            .filter(|s| s.kind() == SigmaKind::Scalar && s.b_form().is_none())
            .ok_or_else(|| Error::Model("scalar solver needs a scalar-field model".into()))?;
        let (n, k) = (sigma.n(), sigma.k());
        lat.validate(n)?;
        let t = lat.time_axis;
        for a in (0..n).filter(|&a| a != t) {
            if !sigma.metric_x()[t][a].is_zero() {
                return Err(Error::Model("base metric must be time-orthogonal".into()));
            }
        }
        let mut h = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                let c = sigma.metric_y()[i][j].as_constant().ok_or_else(|| {
                    Error::Model("scalar solver needs a constant target metric".into())
                })?;
                h[(i, j)] = num_traits::ToPrimitive::to_f64(&c).unwrap_or(f64::NAN);
            }
        }
        let hinv = crate::linalg::inverse(&h)
            .ok_or_else(|| Error::Model("target metric is singular".into()))?;
        let ts = t as Sym;
        let time_dependent = sigma.weight().depends_on(ts)
            || sigma
                .inv_metric_x()
                .iter()
                .flatten()
                .any(|e| e.depends_on(ts));
        let spatial = lat.spatial_axes();
        let ns = lat.ns();
        let nbr = spatial
            .iter()
            .map(|&a| {
                (0..ns)
                    .map(|s| (lat.shift(s, a, -1), lat.shift(s, a, 1)))
                    .collect()
            })
            .collect();
        let chart = sigma.chart();
        Ok(ScalarSetup {
            n,
            k,
            t_axis: t,
            spatial,
            h,
            hinv,
            weight: sigma.weight().compile(),
            ginv: sigma
                .inv_metric_x()
                .iter()
                .map(|r| r.iter().map(|e| e.compile()).collect())
                .collect(),
            dv: (0..k)
                .map(|i| sigma.potential().diff(chart.y(i)).compile())
                .collect(),
            time_dependent,
            nbr,
        })
    }

    fn geometry_at(&self, lat: &LatticeSpec, time: f64, offset: Option<(usize, f64)>) -> Geometry {
        let ns = lat.ns();
        let mut g = Vec::with_capacity(ns);
        let mut gg = Vec::with_capacity(ns);
        for s in 0..ns {
            let mut x = lat.coords(0, s);
            x[self.t_axis] = time;
            if let Some((a, d)) = offset {
                x[a] += d;
            }
            let w = self.weight.eval(&x);
            g.push(w);
            gg.push(
                (0..self.n)
                    .map(|a| (0..self.n).map(|b| w * self.ginv[a][b].eval(&x)).collect())
                    .collect(),
            );
        }
        Geometry { g, gg }
    }

    /// Central difference `D_b y^j` at slice node `s`; second-order one-sided at fixed edges.
    fn d(
        &self,
        lat: &LatticeSpec,
        field: &[f64],
        width: usize,
        s: usize,
        j: usize,
        comp: usize,
    ) -> f64 {
        let hb = lat.axes[self.spatial[j]].spacing;
        let at = |node: usize| field[node * width + comp];
        match self.nbr[j][s] {
            (Some(m), Some(p)) => (at(p) - at(m)) / (2.0 * hb),
            (None, Some(p)) => {
                let p2 = self.nbr[j][p].1.unwrap();
                (-3.0 * at(s) + 4.0 * at(p) - at(p2)) / (2.0 * hb)
            }
            (Some(m), None) => {
                let m2 = self.nbr[j][m].0.unwrap();
                (3.0 * at(s) - 4.0 * at(m) + at(m2)) / (2.0 * hb)
            }
            (None, None) => 0.0,
        }
    }

    fn potential_force(
        &self,
        lat: &LatticeSpec,
        y: &[f64],
        time: f64,
        geo: &Geometry,
        s: usize,
        out: &mut [f64],
    ) {
        let mut x = lat.coords(0, s);
        x[self.t_axis] = time;
        x.extend_from_slice(&y[s * self.k..(s + 1) * self.k]);
        for i in 0..self.k {
            out[i] -= geo.g[s] * self.dv[i].eval(&x);
        }
    }

    /// `−D_a(g g^{ab} h D_b y) − g ∂V` with composed central differences.
    fn force_wide(&self, lat: &LatticeSpec, y: &[f64], time: f64, geo: &Geometry) -> Vec<f64> {
        let (k, ns, nsp) = (self.k, lat.ns(), self.spatial.len());
        // flux[s][(a, i)] = g g^{ab} h_ij D_b y^j
        let flux_at = |s: usize| -> Vec<f64> {
            let dy: Vec<f64> = (0..nsp)
                .flat_map(|b| (0..k).map(move |j| (b, j)))
                .map(|(b, j)| self.d(lat, y, k, s, b, j))
                .collect();
            let mut f = vec![0.0; nsp * k];
            for a in 0..nsp {
                for b in 0..nsp {
                    let c = geo.gg[s][self.spatial[a]][self.spatial[b]];
                    if c == 0.0 {
                        continue;
                    }
                    for i in 0..k {
                        for j in 0..k {
                            f[a * k + i] += c * self.h[(i, j)] * dy[b * k + j];
                        }
                    }
                }
            }
            f
        };
        let flux: Vec<f64> = par_map(ns, flux_at).into_iter().flatten().collect();
        let w = nsp * k;
        par_map(ns, |s| {
            let mut out = vec![0.0; k];
            if lat.on_fixed_edge(s) {
                return out;
            }
            for a in 0..nsp {
                for i in 0..k {
                    out[i] -= self.d(lat, &flux, w, s, a, a * k + i);
                }
            }
            self.potential_force(lat, y, time, geo, s, &mut out);
            out
        })
        .into_iter()
        .flatten()
        .collect()
    }

    /// Compact variant: nearest-neighbour differences on the diagonal terms.
    fn force_compact(
        &self,
        lat: &LatticeSpec,
        y: &[f64],
        time: f64,
        geo: &Geometry,
        half: &[(Geometry, Geometry)],
    ) -> Vec<f64> {
        let (k, ns, nsp) = (self.k, lat.ns(), self.spatial.len());
        let wide_off: Option<Vec<f64>> = if (0..nsp).any(|a| {
            (0..nsp).any(|b| {
                a != b
                    && geo
                        .gg
                        .iter()
                        .any(|m| m[self.spatial[a]][self.spatial[b]] != 0.0)
            })
        }) {
            Some(self.force_offdiag(lat, y, geo))
        } else {
            None
        };
        par_map(ns, |s| {
            let mut out = vec![0.0; k];
            if lat.on_fixed_edge(s) {
                return out;
            }
            for (j, &a) in self.spatial.iter().enumerate() {
                let ha = lat.axes[a].spacing;
                let (m, p) = self.nbr[j][s];
                let (m, p) = (m.unwrap(), p.unwrap());
                let cm = half[j].0.gg[s][a][a];
                let cp = half[j].1.gg[s][a][a];
                for i in 0..k {
                    for jj in 0..k {
                        let hy = self.h[(i, jj)];
                        if hy == 0.0 {
                            continue;
                        }
                        let yp = y[p * k + jj];
                        let y0 = y[s * k + jj];
                        let ym = y[m * k + jj];
                        out[i] -= hy * (cp * (yp - y0) - cm * (y0 - ym)) / (ha * ha);
                    }
                }
            }
            if let Some(off) = &wide_off {
                for i in 0..k {
                    out[i] -= off[s * k + i];
                }
            }
            self.potential_force(lat, y, time, geo, s, &mut out);
            out
        })
        .into_iter()
        .flatten()
        .collect()
    }

    fn force_offdiag(&self, lat: &LatticeSpec, y: &[f64], geo: &Geometry) -> Vec<f64> {
        let (k, ns, nsp) = (self.k, lat.ns(), self.spatial.len());
        let mut out = vec![0.0; ns * k];
        for a in 0..nsp {
            for b in (0..nsp).filter(|&b| b != a) {
                let mut flux = vec![0.0; ns * k];
                for s in 0..ns {
                    let c = geo.gg[s][self.spatial[a]][self.spatial[b]];
                    for i in 0..k {
                        for j in 0..k {
                            flux[s * k + i] += c * self.h[(i, j)] * self.d(lat, y, k, s, b, j);
                        }
                    }
                }
                for s in 0..ns {
                    for i in 0..k {
                        out[s * k + i] += self.d(lat, &flux, k, s, a, i);
                    }
                }
            }
        }
        out
    }
}

fn par_map<T: Send, F: Fn(usize) -> T + Sync + Send>(ns: usize, f: F) -> Vec<T> {
    if ns >= PAR_MIN {
        (0..ns).into_par_iter().map(f).collect()
    } else {
        (0..ns).map(f).collect()
    }
}

struct Stepper<'a> {
    setup: &'a ScalarSetup,
    lat: &'a LatticeSpec,
    cache: Option<Geometry>,
    half_cache: Option<Vec<(Geometry, Geometry)>>,
}

impl<'a> Stepper<'a> {
    fn time(&self, level: f64) -> f64 {
        self.lat.axes[self.lat.time_axis].origin + level * self.lat.dt()
    }

    fn geo(&mut self, level: f64) -> Geometry {
        if !self.setup.time_dependent {
            if self.cache.is_none() {
                self.cache = Some(self.setup.geometry_at(self.lat, self.time(0.0), None));
            }
            return self.cache.clone().unwrap();
        }
        self.setup.geometry_at(self.lat, self.time(level), None)
    }

    fn half_geo(&mut self, level: f64) -> Vec<(Geometry, Geometry)> {
        let build = |st: &Self, t: f64| -> Vec<(Geometry, Geometry)> {
            st.setup
                .spatial
                .iter()
                .map(|&a| {
                    let h = st.lat.axes[a].spacing;
                    (
                        st.setup.geometry_at(st.lat, t, Some((a, -0.5 * h))),
                        st.setup.geometry_at(st.lat, t, Some((a, 0.5 * h))),
                    )
                })
                .collect()
        };
        if !self.setup.time_dependent {
            if self.half_cache.is_none() {
                self.half_cache = Some(build(self, self.time(0.0)));
            }
            return self.half_cache.clone().unwrap();
        }
        build(self, self.time(level))
    }

    fn force(&mut self, y: &[f64], level: f64, stencil: ElStencil) -> Vec<f64> {
        let geo = self.geo(level);
        let t = self.time(level);
        match stencil {
            ElStencil::Wide => self.setup.force_wide(self.lat, y, t, &geo),
            ElStencil::Compact => {
                let half = self.half_geo(level);
                self.setup.force_compact(self.lat, y, t, &geo, &half)
            }
        }
    }

    /// `s = g g^{tt}` per slice node.
    fn s_coef(&mut self, level: f64) -> Vec<f64> {
        let t = self.setup.t_axis;
        self.geo(level).gg.iter().map(|m| m[t][t]).collect()
    }
}

fn check_levels(lat: &LatticeSpec, y: &[f64], level: usize, k: usize) -> Result<()> {
    for (j, v) in y.iter().enumerate() {
        if !v.is_finite() || v.abs() > super::trajectory::BLOW_UP {
            let mut node = vec![level];
            node.extend(lat.spatial_index(j / k.max(1)));
            return Err(Error::BlowUp {
                node,
                value: if v.is_finite() {
                    v.abs()
                } else {
                    f64::INFINITY
                },
            });
        }
    }
    Ok(())
}

/// Initial `y⁰` and `π⁰ = g p^t` from the Legendre map of the initial velocities.
fn initial_state(
    model: &Model,
    lat: &LatticeSpec,
    init: &InitData,
) -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
    let chart = model.chart();
    let (n, k) = (chart.n(), chart.k());
    if init.y.len() != k {
        return Err(Error::Input(format!(
            "initial data has {} fields, model has {k}",
            init.y.len()
        )));
    }
    let (y0, v0) = init.sample(lat, k);
    let ns = lat.ns();
    let t = lat.time_axis;
    let mut pi0 = vec![0.0; ns * k];
    let mut pts = Vec::with_capacity(ns);
    let wexpr = model.weight.compile();
    for s in 0..ns {
        let x = lat.coords(0, s);
        let mut q = x.clone();
        q.extend_from_slice(&y0[s * k..(s + 1) * k]);
        let pt = model.forward(&q, &v0[s * k * n..(s + 1) * k * n], 0.0);
        let g = wexpr.eval(&x);
        for i in 0..k {
            pi0[s * k + i] = g * pt[chart.p1(t, i).unwrap() as usize];
        }
        pts.push(pt);
    }
    Ok((y0, pi0, pts))
}

/// De Donder–Weyl leapfrog: `y` on integer levels, `π = g p^t` on half levels.
pub fn solve_dw_scalar(model: &Model, lat: &LatticeSpec, init: &InitData) -> Result<Trajectory> {
    let setup = ScalarSetup::new(model, lat)?;
    let chart = model.chart().clone();
    let (n, k, ns, nt, dt) = (setup.n, setup.k, lat.ns(), lat.nt(), lat.dt());
    let (y0, pi0, _) = initial_state(model, lat, init)?;
    let mut st = Stepper {
        setup: &setup,
        lat,
        cache: None,
        half_cache: None,
    };
    let mut traj = Trajectory::zeros(lat.clone(), &chart);
    traj.y[..ns * k].copy_from_slice(&y0);
    let f0 = st.force(&y0, 0.0, ElStencil::Wide);
    let mut pi_prev: Vec<f64> = pi0.iter().zip(&f0).map(|(p, f)| p - 0.5 * dt * f).collect();
    let mut pi_next: Vec<f64> = pi0.iter().zip(&f0).map(|(p, f)| p + 0.5 * dt * f).collect();
    let mut y = y0;
    let t_axis = lat.time_axis;
    let mut geo_now = st.geo(0.0);
    for level in 0..nt {
        // p^t on the integer level
        for s in 0..ns {
            let node = lat.node(level, s);
            for i in 0..k {
                traj.p[node * n * k + i * n + t_axis] =
                    0.5 * (pi_prev[s * k + i] + pi_next[s * k + i]) / geo_now.g[s];
            }
        }
        if level + 1 == nt {
            break;
        }
        let s_half = st.s_coef(level as f64 + 0.5);
        let mut y_new = y.clone();
        for s in 0..ns {
            if lat.on_fixed_edge(s) {
                continue;
            }
            for i in 0..k {
                let hp: f64 = (0..k)
                    .map(|j| setup.hinv[(i, j)] * pi_next[s * k + j])
                    .sum();
                y_new[s * k + i] = y[s * k + i] + dt * hp / s_half[s];
            }
        }
        check_levels(lat, &y_new, level + 1, k)?;
        let f = st.force(&y_new, (level + 1) as f64, ElStencil::Wide);
        let pi_after: Vec<f64> = pi_next.iter().zip(&f).map(|(p, f)| p + dt * f).collect();
        check_levels(lat, &pi_after, level + 1, k)?;
        pi_prev = std::mem::replace(&mut pi_next, pi_after);
        y = y_new;
        traj.y[(level + 1) * ns * k..(level + 2) * ns * k].copy_from_slice(&y);
        geo_now = st.geo((level + 1) as f64);
    }
    fill_spatial_momenta(&setup, lat, &mut traj);
    traj.fill_gauge_eps(model)?;
    traj.check_finite()?;
    Ok(traj)
}

/// `p^a = g^{ab} h D_b y` on every level.
fn fill_spatial_momenta(setup: &ScalarSetup, lat: &LatticeSpec, traj: &mut Trajectory) {
    let (n, k, ns) = (setup.n, setup.k, lat.ns());
    let mut st = Stepper {
        setup,
        lat,
        cache: None,
        half_cache: None,
    };
    for level in 0..lat.nt() {
        let geo = st.geo(level as f64);
        let y = traj.y[level * ns * k..(level + 1) * ns * k].to_vec();
        for s in 0..ns {
            let node = lat.node(level, s);
            let dy: Vec<Vec<f64>> = (0..setup.spatial.len())
                .map(|b| (0..k).map(|j| setup.d(lat, &y, k, s, b, j)).collect())
                .collect();
            for &a in &setup.spatial {
                for i in 0..k {
                    let mut acc = 0.0;
                    for (bj, &b) in setup.spatial.iter().enumerate() {
                        let c = geo.gg[s][a][b] / geo.g[s];
                        for j in 0..k {
                            acc += c * setup.h[(i, j)] * dy[bj][j];
                        }
                    }
                    traj.p[node * n * k + i * n + a] = acc;
                }
            }
        }
    }
}

/// Three-level scheme for `∂_α(g g^{αβ} h ∂_β y) = −g ∂V/∂y`.
pub fn solve_el(
    model: &Model,
    lat: &LatticeSpec,
    init: &InitData,
    stencil: ElStencil,
) -> Result<Trajectory> {
    let setup = ScalarSetup::new(model, lat)?;
    let chart = model.chart().clone();
    let (n, k, ns, nt, dt) = (setup.n, setup.k, lat.ns(), lat.nt(), lat.dt());
    let (y0, pi0, _) = initial_state(model, lat, init)?;
    let mut st = Stepper {
        setup: &setup,
        lat,
        cache: None,
        half_cache: None,
    };
    let mut traj = Trajectory::zeros(lat.clone(), &chart);
    traj.y[..ns * k].copy_from_slice(&y0);
    let f0 = st.force(&y0, 0.0, stencil);
    let s_half = st.s_coef(0.5);
    let mut y1 = y0.clone();
    for s in (0..ns).filter(|&s| !lat.on_fixed_edge(s)) {
        for i in 0..k {
            let hp: f64 = (0..k)
                .map(|j| setup.hinv[(i, j)] * (pi0[s * k + j] + 0.5 * dt * f0[s * k + j]))
                .sum();
            y1[s * k + i] = y0[s * k + i] + dt * hp / s_half[s];
        }
    }
    check_levels(lat, &y1, 1, k)?;
    traj.y[ns * k..2 * ns * k].copy_from_slice(&y1);
    let (mut ym, mut y) = (y0, y1);
    for level in 1..nt - 1 {
        let f = st.force(&y, level as f64, stencil);
        let s_minus = st.s_coef(level as f64 - 0.5);
        let s_plus = st.s_coef(level as f64 + 0.5);
        let mut yn = y.clone();
        for s in (0..ns).filter(|&s| !lat.on_fixed_edge(s)) {
            for i in 0..k {
                let hf: f64 = (0..k).map(|j| setup.hinv[(i, j)] * f[s * k + j]).sum();
                let num = s_minus[s] * (y[s * k + i] - ym[s * k + i]) + dt * dt * hf;
                yn[s * k + i] = y[s * k + i] + num / s_plus[s];
            }
        }
        check_levels(lat, &yn, level + 1, k)?;
        traj.y[(level + 1) * ns * k..(level + 2) * ns * k].copy_from_slice(&yn);
        ym = std::mem::replace(&mut y, yn);
    }
    // momenta from the Legendre map of the discrete velocities
    let t_axis = lat.time_axis;
    for level in 0..nt {
        for s in 0..ns {
            let node = lat.node(level, s);
            let x = lat.coords(level, s);
            let mut q = x.clone();
            q.extend_from_slice(traj.y_at(node));
            let mut v = vec![0.0; n * k];
            let yl = &traj.y[level * ns * k..(level + 1) * ns * k];
            for i in 0..k {
                let at = |l: usize| traj.y[lat.node(l, s) * k + i];
                v[i * n + t_axis] = if level == 0 {
                    (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * dt)
                } else if level + 1 == nt {
                    (3.0 * at(level) - 4.0 * at(level - 1) + at(level - 2)) / (2.0 * dt)
                } else {
                    (at(level + 1) - at(level - 1)) / (2.0 * dt)
                };
                for (j, &a) in setup.spatial.iter().enumerate() {
                    v[i * n + a] = setup.d(lat, yl, k, s, j, i);
                }
            }
            let pt = model.forward(&q, &v, 0.0);
            traj.set_momenta(&chart, node, &pt);
        }
    }
    traj.fill_gauge_eps(model)?;
    traj.check_finite()?;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::models::SigmaModel;
    use std::f64::consts::PI;

    fn kg() -> Model {
        SigmaModel::klein_gordon(2, Expr::one())
            .unwrap()
            .to_model("kg")
            .unwrap()
    }

    fn plane_wave(m: &Model) -> InitData {
        let c = m.chart();
        let y = c.parse("cos(x2 - sqrt(2)*x1)").unwrap();
        InitData {
            y: vec![y],
            dt_y: None,
        }
    }

    fn lattice(nx: usize) -> LatticeSpec {
        let dx = 2.0 * PI / nx as f64;
        LatticeSpec::periodic(nx / 2 + 1, 0.5 * dx, &[(nx, dx)])
    }

    fn exact_err(t: &Trajectory) -> f64 {
        let l = &t.lattice;
        let mut e: f64 = 0.0;
        for lev in 0..l.nt() {
            for s in 0..l.ns() {
                let x = l.coords(lev, s);
                let ex = (x[1] - 2f64.sqrt() * x[0]).cos();
                e = e.max((t.y[l.node(lev, s)] - ex).abs());
            }
        }
        e
    }

    #[test]
    fn plane_wave_second_order() {
        let m = kg();
        let e: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&nx| exact_err(&solve_dw_scalar(&m, &lattice(nx), &plane_wave(&m)).unwrap()))
            .collect();
        let o1 = (e[0] / e[1]).log2();
        let o2 = (e[1] / e[2]).log2();
        assert!((o1 - 2.0).abs() < 0.3 && (o2 - 2.0).abs() < 0.3, "{e:?}");
        let el: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&nx| {
                exact_err(&solve_el(&m, &lattice(nx), &plane_wave(&m), ElStencil::Compact).unwrap())
            })
            .collect();
        assert!(((el[1] / el[2]).log2() - 2.0).abs() < 0.3, "{el:?}");
    }

    #[test]
    fn wide_el_reproduces_dw() {
        let m = kg();
        let l = lattice(64);
        let a = solve_dw_scalar(&m, &l, &plane_wave(&m)).unwrap();
        let b = solve_el(&m, &l, &plane_wave(&m), ElStencil::Wide).unwrap();
        let d =
            a.y.iter()
                .zip(&b.y)
                .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn constant_data_at_rest() {
        let c = crate::exterior::ChartSpec::weyl(2, 1).unwrap();
        let v = (Expr::sym(c.y(0)) - Expr::int(1)).pow(2);
        let m = SigmaModel::scalar(crate::models::minkowski(2), 1, v)
            .unwrap()
            .to_model("w")
            .unwrap();
        let init = InitData {
            y: vec![Expr::one()],
            dt_y: None,
        };
        let t = solve_dw_scalar(&m, &lattice(16), &init).unwrap();
        assert!(t.y.iter().all(|&y| y == 1.0));
        assert!(t.p.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn oscillator_limit() {
        let c = crate::exterior::ChartSpec::weyl(1, 1).unwrap();
        let v = Expr::sym(c.y(0))
            .pow(2)
            .scale(&crate::expr::Rational::new(1.into(), 2.into()));
        let m = SigmaModel::scalar(vec![vec![Expr::one()]], 1, v)
            .unwrap()
            .to_model("osc")
            .unwrap();
        let init = InitData {
            y: vec![c.parse("cos(x1)").unwrap()],
            dt_y: None,
        };
        let err = |nt: usize| {
            let l = LatticeSpec {
                axes: vec![crate::dynamics::Axis {
                    nodes: nt,
                    spacing: 4.0 / (nt - 1) as f64,
                    origin: 0.0,
                    boundary: Default::default(),
                }],
                time_axis: 0,
            };
            let t = solve_el(&m, &l, &init, ElStencil::Compact).unwrap();
            (0..nt).fold(0.0f64, |e, j| {
                e.max((t.y[j] - (j as f64 * l.dt()).cos()).abs())
            })
        };
        let o = (err(101) / err(201)).log2();
        assert!((o - 2.0).abs() < 0.2, "{o}");
    }

    #[test]
    fn blow_up_is_reported() {
        let c = crate::exterior::ChartSpec::weyl(2, 1).unwrap();
        let v = Expr::sym(c.y(0)).pow(4).scale_int(-1000);
        let m = SigmaModel::scalar(crate::models::minkowski(2), 1, v)
            .unwrap()
            .to_model("bad")
            .unwrap();
        let init = InitData {
            y: vec![Expr::int(3)],
            dt_y: None,
        };
        let mut l = lattice(16);
        l.axes[0].nodes = 400;
        assert!(matches!(
            solve_dw_scalar(&m, &l, &init),
            Err(Error::BlowUp { .. })
        ));
    }
}
