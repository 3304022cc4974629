use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Periodic,
    /// Dirichlet: boundary nodes keep their initial values.
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub nodes: usize,
    pub spacing: f64,
    #[serde(default)]
    pub origin: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

/// Regular grid on `𝒳`; the time axis is evolved, the others are spatial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub time_axis: usize,
}

impl LatticeSpec {
    /// Time axis 0 with `nt` levels, periodic spatial axes.
    pub fn periodic(nt: usize, dt: f64, spatial: &[(usize, f64)]) -> Self {
        let mut axes = vec![Axis {
            nodes: nt,
            spacing: dt,
            origin: 0.0,
            boundary: Boundary::Periodic,
        }];
        axes.extend(spatial.iter().map(|&(nodes, spacing)| Axis {
            nodes,
            spacing,
            origin: 0.0,
            boundary: Boundary::Periodic,
        }));
        LatticeSpec { axes, time_axis: 0 }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.axes.len() != n {
            return Err(Error::Lattice(format!(
                "{} axes for a base of dimension {n}",
                self.axes.len()
            )));
        }
        if self.time_axis >= n {
            return Err(Error::Lattice(format!(
                "time_axis {} out of range",
                self.time_axis
            )));
        }
        for (a, ax) in self.axes.iter().enumerate() {
            if !(ax.spacing > 0.0) || !ax.spacing.is_finite() {
                return Err(Error::Lattice(format!(
                    "axis {a}: spacing must be positive"
                )));
            }
            if ax.nodes < 4 {
                return Err(Error::Lattice(format!("axis {a}: need at least 4 nodes")));
            }
            if !ax.origin.is_finite() {
                return Err(Error::Lattice(format!("axis {a}: origin must be finite")));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.axes.len()
    }
    pub fn nt(&self) -> usize {
        self.axes[self.time_axis].nodes
    }
    pub fn dt(&self) -> f64 {
        self.axes[self.time_axis].spacing
    }
    /// Spatial axis ids in increasing order.
    pub fn spatial_axes(&self) -> Vec<usize> {
        (0..self.n()).filter(|&a| a != self.time_axis).collect()
    }
    /// Nodes per time slice.
    pub fn ns(&self) -> usize {
        self.spatial_axes()
            .iter()
            .map(|&a| self.axes[a].nodes)
            .product()
    }
    pub fn n_nodes(&self) -> usize {
        self.nt() * self.ns()
    }
    pub fn node(&self, t: usize, s: usize) -> usize {
        t * self.ns() + s
    }

    /// Row-major spatial multi-index of a slice node.
    pub fn spatial_index(&self, mut s: usize) -> Vec<usize> {
        let sp = self.spatial_axes();
        let mut idx = vec![0; sp.len()];
        for (j, &a) in sp.iter().enumerate().rev() {
            let m = self.axes[a].nodes;
            idx[j] = s % m;
            s /= m;
        }
        idx
    }

    pub fn slice_node(&self, idx: &[usize]) -> usize {
        let sp = self.spatial_axes();
        let mut s = 0;
        for (j, &a) in sp.iter().enumerate() {
            s = s * self.axes[a].nodes + idx[j];
        }
        s
    }

    /// Full coordinates `x^α` of a node.
    pub fn coords(&self, t: usize, s: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.n()];
        let ta = &self.axes[self.time_axis];
        x[self.time_axis] = ta.origin + t as f64 * ta.spacing;
        for (&a, i) in self.spatial_axes().iter().zip(self.spatial_index(s)) {
            let ax = &self.axes[a];
            x[a] = ax.origin + i as f64 * ax.spacing;
        }
        x
    }

    /// Slice neighbour `offset` steps along spatial axis `axis`; `None` past a fixed edge.
    pub fn shift(&self, s: usize, axis: usize, offset: isize) -> Option<usize> {
        let sp = self.spatial_axes();
        let j = sp.iter().position(|&a| a == axis).expect("spatial axis");
        let mut idx = self.spatial_index(s);
        let ax = &self.axes[axis];
        let m = ax.nodes as isize;
        let v = idx[j] as isize + offset;
        idx[j] = match ax.boundary {
            Boundary::Periodic => v.rem_euclid(m) as usize,
            Boundary::Fixed if (0..m).contains(&v) => v as usize,
            Boundary::Fixed => return None,
        };
        Some(self.slice_node(&idx))
    }

    /// Whether a slice node lies on a fixed edge.
    pub fn on_fixed_edge(&self, s: usize) -> bool {
        self.distance_to_fixed_edge(s) == 0
    }

    pub fn distance_to_fixed_edge(&self, s: usize) -> usize {
        let idx = self.spatial_index(s);
        let mut d = usize::MAX;
        for (j, &a) in self.spatial_axes().iter().enumerate() {
            let ax = &self.axes[a];
            if ax.boundary == Boundary::Fixed {
                d = d.min(idx[j]).min(ax.nodes - 1 - idx[j]);
            }
        }
        d
    }

    /// Cell volume of a slice under the trapezoidal rule at slice node `s`.
    pub fn slice_weight(&self, s: usize) -> f64 {
        let idx = self.spatial_index(s);
        let mut w = 1.0;
        for (j, &a) in self.spatial_axes().iter().enumerate() {
            let ax = &self.axes[a];
            let edge = ax.boundary == Boundary::Fixed && (idx[j] == 0 || idx[j] == ax.nodes - 1);
            w *= if edge { 0.5 * ax.spacing } else { ax.spacing };
        }
        w
    }

    /// The same domain with every spacing halved.
    pub fn refined(&self) -> LatticeSpec {
        let mut out = self.clone();
        for ax in &mut out.axes {
            ax.nodes = match ax.boundary {
                Boundary::Periodic => ax.nodes * 2,
                Boundary::Fixed => 2 * ax.nodes - 1,
            };
            ax.spacing *= 0.5;
        }
        let t = &mut out.axes[self.time_axis];
        t.nodes = 2 * self.axes[self.time_axis].nodes - 1;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_shift_wraps_and_fixed_stops() {
        let mut l = LatticeSpec::periodic(5, 0.1, &[(8, 0.5), (4, 1.0)]);
        assert_eq!(l.ns(), 32);
        let s = l.slice_node(&[7, 3]);
        assert_eq!(l.spatial_index(l.shift(s, 1, 1).unwrap()), vec![0, 3]);
        assert_eq!(l.coords(2, s), vec![0.2, 3.5, 3.0]);
        l.axes[2].boundary = Boundary::Fixed;
        assert!(l.shift(s, 2, 1).is_none());
        assert!(l.on_fixed_edge(s));
        assert_eq!(l.slice_weight(s), 0.5 * 0.5);
    }

    #[test]
    fn refinement_keeps_the_domain() {
        let l = LatticeSpec::periodic(5, 0.1, &[(8, 0.5)]);
        let r = l.refined();
        assert_eq!(r.nt(), 9);
        assert_eq!(r.axes[1].nodes, 16);
        let end = |l: &LatticeSpec| (l.nt() - 1) as f64 * l.dt();
        assert!((end(&l) - end(&r)).abs() < 1e-15);
    }
}
