//! Graph of a lattice solution: nodal points, finite-difference Jacobians,
//! numeric pullbacks of symbolic forms, quadrature and order estimates.

use super::lattice::{Boundary, LatticeSpec};
use super::trajectory::Trajectory;
use crate::expr::Compiled;
use crate::exterior::{ChartSpec, DifferentialForm};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

/// Fourth-order derivative at position `i` of a line with `m` samples.
pub fn fd4(at: &dyn Fn(isize) -> f64, i: usize, m: usize, h: f64, periodic: bool) -> f64 {
    let i = i as isize;
    let m = m as isize;
    let f = |o: isize| {
        at(if periodic {
            (i + o).rem_euclid(m)
        } else {
            i + o
        })
    };
    if periodic || (i >= 2 && i + 2 < m) {
        return (f(-2) - 8.0 * f(-1) + 8.0 * f(1) - f(2)) / (12.0 * h);
    }
    if i < 2 {
        let s = -i;
        let g = |o: isize| f(s + o);
        let d = if i == 0 {
            -25.0 * g(0) + 48.0 * g(1) - 36.0 * g(2) + 16.0 * g(3) - 3.0 * g(4)
        } else {
            -3.0 * g(0) - 10.0 * g(1) + 18.0 * g(2) - 6.0 * g(3) + g(4)
        };
        return d / (12.0 * h);
    }
    let s = m - 1 - i;
    let g = |o: isize| f(s - o);
    let d = if s == 0 {
        -25.0 * g(0) + 48.0 * g(1) - 36.0 * g(2) + 16.0 * g(3) - 3.0 * g(4)
    } else {
        -3.0 * g(0) - 10.0 * g(1) + 18.0 * g(2) - 6.0 * g(3) + g(4)
    };
    // mirrored stencil: reversing the direction flips the sign
    -d / (12.0 * h)
}

/// Order estimates `log₂(e_j / e_{j+1})` for errors on grids `h, h/2, …`.
pub fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Ladder {
    pub spacing: Vec<f64>,
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
}

impl Ladder {
    pub fn new(spacing: Vec<f64>, errors: Vec<f64>) -> Self {
        let orders = orders(&errors);
        Ladder {
            spacing,
            errors,
            orders,
        }
    }
    pub fn min_order(&self) -> f64 {
        self.orders.iter().cloned().fold(f64::INFINITY, f64::min)
    }
    pub fn last_order(&self) -> f64 {
        *self.orders.last().unwrap_or(&f64::NAN)
    }
}

/// Symbolic form with compiled coefficients.
#[derive(Clone, Debug)]
pub struct CompiledForm {
    pub degree: usize,
    terms: Vec<(Vec<usize>, Compiled)>,
}

fn det_sub(jac: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    let m = rows.len();
    match m {
        0 => 1.0,
        1 => jac[(rows[0], cols[0])],
        2 => {
            jac[(rows[0], cols[0])] * jac[(rows[1], cols[1])]
                - jac[(rows[0], cols[1])] * jac[(rows[1], cols[0])]
        }
        _ => DMatrix::from_fn(m, m, |r, c| jac[(rows[r], cols[c])]).determinant(),
    }
}

impl CompiledForm {
    pub fn new(f: &DifferentialForm) -> Self {
        CompiledForm {
            degree: f.degree(),
            terms: f
                .terms()
                .iter()
                .map(|(i, c)| (i.to_vec(), c.compile()))
                .collect(),
        }
    }

    /// Component of the pullback along `dx^{cols}` (increasing base axes),
    /// with `jac[(μ, A)] = ∂q^μ/∂x^A`.
    pub fn pullback(&self, pt: &[f64], jac: &DMatrix<f64>, cols: &[usize]) -> f64 {
        debug_assert_eq!(cols.len(), self.degree);
        self.terms
            .iter()
            .map(|(idx, c)| {
                let d = det_sub(jac, idx, cols);
                if d == 0.0 {
                    0.0
                } else {
                    c.eval(pt) * d
                }
            })
            .sum()
    }
}

/// A trajectory viewed as the graph `x ↦ q(x), p(x)` in a chart.
pub struct Graph<'a> {
    pub traj: &'a Trajectory,
    pub chart: &'a ChartSpec,
    pub points: Vec<Vec<f64>>,
}

impl<'a> Graph<'a> {
    pub fn new(traj: &'a Trajectory, chart: &'a ChartSpec) -> Self {
        let points = (0..traj.lattice.n_nodes())
            .into_par_iter()
            .map(|node| traj.point(chart, node))
            .collect();
        Graph {
            traj,
            chart,
            points,
        }
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.traj.lattice
    }

    /// `(time level, slice node)`.
    pub fn split(&self, node: usize) -> (usize, usize) {
        let ns = self.lattice().ns();
        (node / ns, node % ns)
    }

    /// Nodes at least `margin` levels from the time ends and from fixed edges.
    pub fn interior(&self, margin: usize) -> Vec<usize> {
        let l = self.lattice();
        (0..l.n_nodes())
            .filter(|&node| {
                let (t, s) = self.split(node);
                t >= margin && t + margin < l.nt() && l.distance_to_fixed_edge(s) >= margin
            })
            .collect()
    }

    /// Fourth-order derivative of a nodal scalar along base axis `axis`.
    pub fn derivative(
        &self,
        field: &(dyn Fn(usize) -> f64 + Sync),
        node: usize,
        axis: usize,
    ) -> f64 {
        let l = self.lattice();
        let (t, s) = self.split(node);
        let ax = &l.axes[axis];
        if axis == l.time_axis {
            let at = |tt: isize| field(l.node(tt as usize, s));
            return fd4(&at, t, l.nt(), ax.spacing, false);
        }
        let sp = l.spatial_axes();
        let j = sp.iter().position(|&a| a == axis).unwrap();
        let idx = l.spatial_index(s);
        let periodic = ax.boundary == Boundary::Periodic;
        let at = |ii: isize| {
            let mut idx = idx.clone();
            idx[j] = ii as usize;
            field(l.node(t, l.slice_node(&idx)))
        };
        fd4(&at, idx[j], ax.nodes, ax.spacing, periodic)
    }

    /// `∂q^μ/∂x^A` for every chart coordinate `μ` (rows) and base axis `A`.
    pub fn jacobian(&self, node: usize) -> DMatrix<f64> {
        let dim = self.chart.dim();
        let n = self.chart.n();
        let mut jac = DMatrix::zeros(dim, n);
        for a in 0..n {
            jac[(a, a)] = 1.0;
        }
        for mu in n..dim {
            for a in 0..n {
                jac[(mu, a)] = self.derivative(&|nd| self.points[nd][mu], node, a);
            }
        }
        jac
    }

    /// Point with velocity slots set to `∂_α y^i`.
    pub fn point_with_velocity(&self, node: usize, jac: &DMatrix<f64>) -> Vec<f64> {
        let c = self.chart;
        let mut pt = self.points[node].clone();
        for i in 0..c.k() {
            for a in 0..c.n() {
                pt[c.v(i, a) as usize] = jac[(c.y(i) as usize, a)];
            }
        }
        pt
    }

    /// Spatial axes and orientation sign of the slices `S_t`.
    pub fn slice_axes(&self) -> (Vec<usize>, f64) {
        let t = self.lattice().time_axis;
        (
            self.lattice().spatial_axes(),
            if t % 2 == 0 { 1.0 } else { -1.0 },
        )
    }

    /// `∫_{S_t}` of an `(n−1)`-form by the trapezoidal rule.
    pub fn slice_integral(&self, form: &CompiledForm, level: usize) -> f64 {
        let l = self.lattice();
        let (cols, sign) = self.slice_axes();
        (0..l.ns())
            .map(|s| {
                let node = l.node(level, s);
                let jac = self.jacobian(node);
                l.slice_weight(s) * form.pullback(&self.points[node], &jac, &cols)
            })
            .sum::<f64>()
            * sign
    }

    /// Trapezoidal weight of a time level.
    pub fn time_weight(&self, level: usize) -> f64 {
        let l = self.lattice();
        if level == 0 || level + 1 == l.nt() {
            0.5 * l.dt()
        } else {
            l.dt()
        }
    }
}

/// Max over `nodes` of `f`, computed in parallel with an order-independent reduction.
pub fn max_over(nodes: &[usize], f: &(dyn Fn(usize) -> f64 + Sync)) -> f64 {
    let vals: Vec<f64> = nodes.par_iter().map(|&n| f(n)).collect();
    vals.into_iter().fold(0.0, |m, v| {
        if v.is_nan() || m.is_nan() {
            f64::NAN
        } else {
            m.max(v)
        }
    })
}

/// Sum in node order.
pub fn sum_over(nodes: &[usize], f: &(dyn Fn(usize) -> f64 + Sync)) -> f64 {
    let vals: Vec<f64> = nodes.par_iter().map(|&n| f(n)).collect();
    vals.into_iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd4_is_exact_on_quartics() {
        let h = 0.1;
        let f = |x: f64| x.powi(4) - 2.0 * x.powi(3) + x;
        let df = |x: f64| 4.0 * x.powi(3) - 6.0 * x.powi(2) + 1.0;
        let m = 9;
        for i in 0..m {
            let at = |j: isize| f(j as f64 * h);
            let d = fd4(&at, i, m, h, false);
            assert!(
                (d - df(i as f64 * h)).abs() < 1e-10,
                "i={i}: {d} vs {}",
                df(i as f64 * h)
            );
        }
    }

    #[test]
    fn order_of_quadratic_errors() {
        let o = orders(&[4.0, 1.0, 0.25]);
        assert_eq!(o, vec![2.0, 2.0]);
    }
}
