//! String model on `n = 2` with `p_ij` held on `ℛ`. The state is `(y, Π)` with
//! `Π_i = g p^t_i + b_ij ε^{tβ} ∂_β y^j`, the slice density of `P_i`; time
//! stepping is the implicit midpoint rule solved by fixed-point iteration.

use super::lattice::LatticeSpec;
use super::trajectory::{InitData, Trajectory};
use crate::error::{Error, Result};
use crate::expr::Compiled;
use crate::legendre::DOMAIN_COND_LIMIT;
use crate::linalg::{condition_number, inverse};
use crate::models::{Model, SigmaKind, SigmaModel};
use nalgebra::DMatrix;
use rayon::prelude::*;

const PICARD_TOL: f64 = 1e-14;
const PICARD_MAX: usize = 100;
/// Below this, a non-decreasing update is treated as the round-off floor.
const PICARD_FLOOR: f64 = 1e-12;

fn levi(a: usize, b: usize) -> f64 {
    match (a, b) {
        (0, 1) => 1.0,
        (1, 0) => -1.0,
        _ => 0.0,
    }
}

struct StringSetup {
    k: usize,
    t: usize,
    x: usize,
    weight: Compiled,
    ginv: Vec<Vec<Compiled>>,
    h: Vec<Vec<Compiled>>,
    /// `∂_l h_ij`, `[l][i][j]`.
    dh: Vec<Vec<Vec<Compiled>>>,
    b: Option<Vec<Vec<Compiled>>>,
    db: Option<Vec<Vec<Vec<Compiled>>>>,
    nbr: Vec<(Option<usize>, Option<usize>)>,
}

fn compile_matrix(m: &[Vec<crate::expr::Expr>]) -> Vec<Vec<Compiled>> {
    m.iter()
        .map(|r| r.iter().map(|e| e.compile()).collect())
        .collect()
}

impl StringSetup {
    fn new(sigma: &SigmaModel, lat: &LatticeSpec) -> Result<Self> {
        if sigma.kind() != SigmaKind::String {
            return Err(Error::Model("string solver needs a string model".into()));
        }
        lat.validate(2)?;
        let k = sigma.k();
        let chart = sigma.chart();
        let t = lat.time_axis;
        let x = 1 - t;
        let dh = (0..k)
            .map(|l| {
                sigma
                    .metric_y()
                    .iter()
                    .map(|r| r.iter().map(|e| e.diff(chart.y(l)).compile()).collect())
                    .collect()
            })
            .collect();
        let db = sigma.b_form().map(|b| {
            (0..k)
                .map(|l| {
                    b.iter()
                        .map(|r| r.iter().map(|e| e.diff(chart.y(l)).compile()).collect())
                        .collect()
                })
                .collect()
        });
        let ns = lat.ns();
        Ok(StringSetup {
            k,
            t,
            x,
            weight: sigma.weight().compile(),
            ginv: compile_matrix(sigma.inv_metric_x()),
            h: compile_matrix(sigma.metric_y()),
            dh,
            b: sigma.b_form().map(compile_matrix),
            db,
            nbr: (0..ns)
                .map(|s| (lat.shift(s, x, -1), lat.shift(s, x, 1)))
                .collect(),
        })
    }

    fn dx(&self, lat: &LatticeSpec, f: &[f64], s: usize, i: usize) -> f64 {
        let h = lat.axes[self.x].spacing;
        let k = self.k;
        let at = |node: usize| f[node * k + i];
        match self.nbr[s] {
            (Some(m), Some(p)) => (at(p) - at(m)) / (2.0 * h),
            (None, Some(p)) => {
                let p2 = self.nbr[p].1.unwrap();
                (-3.0 * at(s) + 4.0 * at(p) - at(p2)) / (2.0 * h)
            }
            (Some(m), None) => {
                let m2 = self.nbr[m].0.unwrap();
                (3.0 * at(s) - 4.0 * at(m) + at(m2)) / (2.0 * h)
            }
            (None, None) => 0.0,
        }
    }

    fn point(&self, lat: &LatticeSpec, time: f64, s: usize, y: &[f64]) -> Vec<f64> {
        let mut pt = lat.coords(0, s);
        pt[self.t] = time;
        pt.extend_from_slice(&y[s * self.k..(s + 1) * self.k]);
        pt
    }

    fn mat(&self, m: &[Vec<Compiled>], pt: &[f64]) -> DMatrix<f64> {
        let k = self.k;
        DMatrix::from_fn(k, k, |i, j| m[i][j].eval(pt))
    }

    /// Nodal `(y_t, p^t, p^x, flux, source)` from the state.
    #[allow(clippy::type_complexity)]
    fn local(
        &self,
        lat: &LatticeSpec,
        y: &[f64],
        pi: &[f64],
        time: f64,
        s: usize,
    ) -> Result<[Vec<f64>; 5]> {
        let k = self.k;
        let pt = self.point(lat, time, s, y);
        let g = self.weight.eval(&pt);
        let gi = |a: usize, b: usize| self.ginv[a][b].eval(&pt);
        let (gtt, gtx, gxx) = (gi(self.t, self.t), gi(self.t, self.x), gi(self.x, self.x));
        let h = self.mat(&self.h, &pt);
        let hinv = inverse(&h).ok_or_else(|| Error::Model("target metric is singular".into()))?;
        let b = self.b.as_ref().map(|b| self.mat(b, &pt));
        let yx: Vec<f64> = (0..k).map(|i| self.dx(lat, y, s, i)).collect();
        let yx_v = nalgebra::DVector::from_vec(yx.clone());
        let lt = levi(self.t, self.x);
        let mut p_t = nalgebra::DVector::from_fn(k, |i, _| pi[s * k + i] / g);
        if let Some(b) = &b {
            p_t -= (b * &yx_v) * (lt / g);
        }
        let yt_v = (&hinv * &p_t - &yx_v * gtx) / gtt;
        let p_x = &h * (&yt_v * gtx + &yx_v * gxx);
        let mut flux = &p_x * g;
        if let Some(b) = &b {
            flux += (b * &yt_v) * levi(self.x, self.t);
        }
        let mut src = vec![0.0; k];
        let d = |i: usize, a: usize| if a == self.t { yt_v[i] } else { yx_v[i] };
        for (l, out) in src.iter_mut().enumerate() {
            let dhl = self.mat(&self.dh[l], &pt);
            let mut acc = 0.0;
            for be in 0..2 {
                for ga in 0..2 {
                    let gbg = gi(be, ga);
                    for j in 0..k {
                        for kk in 0..k {
                            acc += 0.5 * g * dhl[(j, kk)] * gbg * d(j, be) * d(kk, ga);
                        }
                    }
                }
            }
            if let Some(db) = &self.db {
                let dbl = self.mat(&db[l], &pt);
                for be in 0..2 {
                    for ga in 0..2 {
                        let e = levi(be, ga);
                        if e == 0.0 {
                            continue;
                        }
                        for j in 0..k {
                            for kk in 0..k {
                                acc += 0.5 * dbl[(j, kk)] * e * d(j, be) * d(kk, ga);
                            }
                        }
                    }
                }
            }
            *out = acc;
        }
        Ok([
            yt_v.as_slice().to_vec(),
            p_t.as_slice().to_vec(),
            p_x.as_slice().to_vec(),
            flux.as_slice().to_vec(),
            src,
        ])
    }

    /// `(dy/dt, dΠ/dt)`.
    fn rhs(
        &self,
        lat: &LatticeSpec,
        y: &[f64],
        pi: &[f64],
        time: f64,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let (k, ns) = (self.k, lat.ns());
        let locals: Vec<[Vec<f64>; 5]> = (0..ns)
            .into_par_iter()
            .map(|s| self.local(lat, y, pi, time, s))
            .collect::<Result<_>>()?;
        let flux: Vec<f64> = locals.iter().flat_map(|l| l[3].iter().copied()).collect();
        let mut dy = vec![0.0; ns * k];
        let mut dpi = vec![0.0; ns * k];
        for s in (0..ns).filter(|&s| !lat.on_fixed_edge(s)) {
            for i in 0..k {
                dy[s * k + i] = locals[s][0][i];
                dpi[s * k + i] = -self.dx(lat, &flux, s, i) + locals[s][4][i];
            }
        }
        Ok((dy, dpi))
    }
}

/// De Donder–Weyl evolution of the string model on `ℛ`.
pub fn solve_dw_string(model: &Model, lat: &LatticeSpec, init: &InitData) -> Result<Trajectory> {
    let sigma = model
        .sigma
        .as_ref()
        .ok_or_else(|| Error::Model("string solver needs a sigma model".into()))?;
    let setup = StringSetup::new(sigma, lat)?;
    let chart = model.chart().clone();
    let (k, ns, nt, dt) = (setup.k, lat.ns(), lat.nt(), lat.dt());
    if init.y.len() != k {
        return Err(Error::Input(format!(
            "initial data has {} fields, model has {k}",
            init.y.len()
        )));
    }
    let (y0, v0) = init.sample(lat, k);
    let mut pi = vec![0.0; ns * k];
    for s in 0..ns {
        let x = lat.coords(0, s);
        let mut q = x.clone();
        q.extend_from_slice(&y0[s * k..(s + 1) * k]);
        let pt = model.forward(&q, &v0[s * 2 * k..(s + 1) * 2 * k], 0.0);
        let m = sigma.m_matrix(&pt);
        let cond = condition_number(&m);
        let gtt = setup.ginv[setup.t][setup.t].eval(&pt);
        if !(cond < DOMAIN_COND_LIMIT) || gtt == 0.0 {
            return Err(Error::NonHyperbolicInit(format!(
                "M is singular at slice node {s} (condition {cond:.3e})"
            )));
        }
        let g = setup.weight.eval(&pt);
        let lt = levi(setup.t, setup.x);
        for i in 0..k {
            let mut v = g * pt[chart.p1(setup.t, i).unwrap() as usize];
            if let Some(b) = &setup.b {
                for j in 0..k {
                    v += lt * b[i][j].eval(&pt) * setup.dx(lat, &y0, s, j);
                }
            }
            pi[s * k + i] = v;
        }
    }
    let mut traj = Trajectory::zeros(lat.clone(), &chart);
    let mut y = y0;
    let time = |l: f64| lat.axes[setup.t].origin + l * dt;
    store_level(&setup, model, lat, &mut traj, 0, &y, &pi, time(0.0))?;
    for level in 0..nt - 1 {
        let tm = time(level as f64 + 0.5);
        let (dy0, dp0) = setup.rhs(lat, &y, &pi, time(level as f64))?;
        let mut yn: Vec<f64> = y.iter().zip(&dy0).map(|(a, b)| a + dt * b).collect();
        let mut pn: Vec<f64> = pi.iter().zip(&dp0).map(|(a, b)| a + dt * b).collect();
        let mut converged = false;
        let mut change = f64::INFINITY;
        for _ in 0..PICARD_MAX {
            let prev = change;
            let ym: Vec<f64> = y.iter().zip(&yn).map(|(a, b)| 0.5 * (a + b)).collect();
            let pm: Vec<f64> = pi.iter().zip(&pn).map(|(a, b)| 0.5 * (a + b)).collect();
            let (dy, dp) = setup.rhs(lat, &ym, &pm, tm)?;
            let y2: Vec<f64> = y.iter().zip(&dy).map(|(a, b)| a + dt * b).collect();
            let p2: Vec<f64> = pi.iter().zip(&dp).map(|(a, b)| a + dt * b).collect();
            change = y2
                .iter()
                .zip(&yn)
                .chain(p2.iter().zip(&pn))
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / (1.0 + a.abs())));
            yn = y2;
            pn = p2;
            if !change.is_finite() {
                break;
            }
            if change < PICARD_TOL || (change < PICARD_FLOOR && change >= prev) {
                converged = true;
                break;
            }
        }
        if !converged {
            if yn
                .iter()
                .chain(&pn)
                .any(|v| !v.is_finite() || v.abs() > super::trajectory::BLOW_UP)
            {
                let j = yn
                    .iter()
                    .position(|v| !v.is_finite() || v.abs() > super::trajectory::BLOW_UP)
                    .unwrap_or(0);
                let mut node = vec![level + 1];
                node.extend(lat.spatial_index(j / k));
                return Err(Error::BlowUp {
                    node,
                    value: f64::INFINITY,
                });
            }
            return Err(Error::NoConvergence {
                iters: PICARD_MAX,
                residual: change,
            });
        }
        y = yn;
        pi = pn;
        store_level(
            &setup,
            model,
            lat,
            &mut traj,
            level + 1,
            &y,
            &pi,
            time((level + 1) as f64),
        )?;
    }
    traj.fill_gauge_eps(model)?;
    traj.check_finite()?;
    Ok(traj)
}

#[allow(clippy::too_many_arguments)]
fn store_level(
    setup: &StringSetup,
    model: &Model,
    lat: &LatticeSpec,
    traj: &mut Trajectory,
    level: usize,
    y: &[f64],
    pi: &[f64],
    time: f64,
) -> Result<()> {
    let (k, ns) = (setup.k, lat.ns());
    let chart = model.chart().clone();
    let sigma = model.sigma.as_ref().unwrap();
    traj.y[level * ns * k..(level + 1) * ns * k].copy_from_slice(y);
    for s in 0..ns {
        let node = lat.node(level, s);
        let [_, p_t, p_x, _, _] = setup.local(lat, y, pi, time, s)?;
        let mut pt = traj.point(&chart, node);
        for i in 0..k {
            pt[chart.p1(setup.t, i).unwrap() as usize] = p_t[i];
            pt[chart.p1(setup.x, i).unwrap() as usize] = p_x[i];
        }
        let pt = sigma.project_to_r(&pt);
        traj.set_momenta(&chart, node, &pt);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::models::minkowski;
    use std::f64::consts::PI;

    fn lattice(nx: usize) -> LatticeSpec {
        let dx = 2.0 * PI / nx as f64;
        LatticeSpec::periodic(nx / 2 + 1, 0.5 * dx, &[(nx, dx)])
    }

    fn flat(b: Option<Vec<Vec<Expr>>>) -> Model {
        let id = vec![vec![Expr::one()]];
        SigmaModel::string(minkowski(2), id, b)
            .unwrap()
            .to_model("flat")
            .unwrap()
    }

    fn wave_err(t: &Trajectory) -> f64 {
        let l = &t.lattice;
        let mut e: f64 = 0.0;
        for lev in 0..l.nt() {
            for s in 0..l.ns() {
                let x = l.coords(lev, s);
                e = e.max((t.y[l.node(lev, s)] - (x[1] - x[0]).cos()).abs());
            }
        }
        e
    }

    #[test]
    fn flat_target_is_the_wave_equation() {
        let m = flat(None);
        let init = InitData {
            y: vec![m.chart().parse("cos(x2 - x1)").unwrap()],
            dt_y: None,
        };
        let e: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&nx| wave_err(&solve_dw_string(&m, &lattice(nx), &init).unwrap()))
            .collect();
        for w in e.windows(2) {
            assert!(((w[0] / w[1]).log2() - 2.0).abs() < 0.3, "{e:?}");
        }
    }

    #[test]
    fn constant_b_field_does_not_change_the_motion() {
        let init = |m: &Model| InitData {
            y: vec![m.chart().parse("sin(x2) + cos(2*x2)/3").unwrap()],
            dt_y: None,
        };
        let zero = flat(None);
        let a = solve_dw_string(&zero, &lattice(32), &init(&zero)).unwrap();
        let bm = flat(Some(vec![vec![Expr::zero()]]));
        let c = solve_dw_string(&bm, &lattice(32), &init(&bm)).unwrap();
        assert_eq!(a.y, c.y);
        // k = 2 with a constant antisymmetric b
        let id = vec![
            vec![Expr::one(), Expr::zero()],
            vec![Expr::zero(), Expr::one()],
        ];
        let b = vec![
            vec![Expr::zero(), Expr::int(3)],
            vec![Expr::int(-3), Expr::zero()],
        ];
        let m0 = SigmaModel::string(minkowski(2), id.clone(), None)
            .unwrap()
            .to_model("a")
            .unwrap();
        let m1 = SigmaModel::string(minkowski(2), id, Some(b))
            .unwrap()
            .to_model("b")
            .unwrap();
        let init2 = |m: &Model| InitData {
            y: vec![
                m.chart().parse("sin(x2)").unwrap(),
                m.chart().parse("cos(x2)/2").unwrap(),
            ],
            dt_y: Some(vec![m.chart().parse("cos(x2)/4").unwrap(), Expr::zero()]),
        };
        let t0 = solve_dw_string(&m0, &lattice(32), &init2(&m0)).unwrap();
        let t1 = solve_dw_string(&m1, &lattice(32), &init2(&m1)).unwrap();
        let d =
            t0.y.iter()
                .zip(&t1.y)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn curved_target_converges() {
        let c = crate::exterior::ChartSpec::full(2, 2).unwrap();
        let s0 = Expr::sym(c.y(0)).sin();
        let h = vec![
            vec![Expr::one(), Expr::zero()],
            vec![Expr::zero(), &s0 * &s0],
        ];
        let m = SigmaModel::string(minkowski(2), h, None)
            .unwrap()
            .to_model("sphere")
            .unwrap();
        let init = InitData {
            y: vec![
                m.chart().parse("3/2 + cos(x2)/5").unwrap(),
                m.chart().parse("sin(x2)").unwrap(),
            ],
            dt_y: None,
        };
        let runs: Vec<Trajectory> = [32, 64, 128]
            .iter()
            .map(|&nx| solve_dw_string(&m, &lattice(nx), &init).unwrap())
            .collect();
        // compare at the final level on the coarse nodes
        let last = |t: &Trajectory, stride: usize| -> Vec<f64> {
            let l = &t.lattice;
            let lev = l.nt() - 1;
            (0..l.ns())
                .step_by(stride)
                .flat_map(|s| t.y_at(l.node(lev, s)).to_vec())
                .collect()
        };
        let (a, b, cc) = (last(&runs[0], 1), last(&runs[1], 2), last(&runs[2], 4));
        let d1 = a
            .iter()
            .zip(&b)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        let d2 = b
            .iter()
            .zip(&cc)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(((d1 / d2).log2() - 2.0).abs() < 0.4, "{d1} {d2}");
    }

    #[test]
    fn null_time_axis_is_rejected() {
        let g = vec![
            vec![Expr::zero(), Expr::one()],
            vec![Expr::one(), Expr::zero()],
        ];
        let m = SigmaModel::string(g, vec![vec![Expr::one()]], None)
            .unwrap()
            .to_model("null")
            .unwrap();
        let init = InitData {
            y: vec![m.chart().parse("sin(x2)").unwrap()],
            dt_y: None,
        };
        assert!(matches!(
            solve_dw_string(&m, &lattice(16), &init),
            Err(Error::NonHyperbolicInit(_))
        ));
    }
}
