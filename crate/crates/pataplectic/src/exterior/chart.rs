use crate::error::{Error, Result};
use crate::expr::{self, Expr, Sym};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use super::multiindex::canonicalize_raw;

/// A momentum coordinate `p^{α₁…α_p}_{i₁…i_p}`: the base slots `α` of
/// `dx¹∧…∧dxⁿ` are replaced by `dy^i` in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Momentum {
    /// Replaced base slots, 0-based, increasing.
    pub alphas: Vec<usize>,
    /// Fiber indices, 0-based, increasing; paired with `alphas`.
    pub fibers: Vec<usize>,
    /// Coordinate indices in slot order.
    pub slots: Vec<usize>,
    /// Increasing coordinate indices.
    pub sorted: Vec<usize>,
    /// `dq^{slots} = sign · dq^{sorted}`.
    pub sign: i32,
}

impl Momentum {
    pub fn degree(&self) -> usize {
        self.alphas.len()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ChartJson {
    pub n: usize,
    pub k: usize,
    #[serde(default = "weyl_degrees")]
    pub momentum_degrees: Vec<usize>,
}

fn weyl_degrees() -> Vec<usize> {
    vec![0, 1]
}

/// Coordinate patch on `ΛⁿT*(𝒳×𝒴)` restricted to a set of momentum degrees.
///
/// Symbol ids: `x^α` first, then `y^i`, then the momenta (ε first), then the
/// velocities `v^i_α`, which are not coordinates of the phase space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChartSpec {
    n: usize,
    k: usize,
    degrees: Vec<usize>,
    momenta: Vec<Momentum>,
    names: Vec<String>,
    lookup: HashMap<String, Sym>,
    by_sorted: HashMap<Vec<usize>, usize>,
}

fn subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, p: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, p, &mut Vec::new(), &mut out);
    out
}

fn digits(v: &[usize]) -> String {
    v.iter().map(|i| (i + 1).to_string()).collect()
}

impl ChartSpec {
    pub fn new(n: usize, k: usize, degrees: &[usize]) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidChart(format!(
                "need n ≥ 1 and k ≥ 1, got n={n}, k={k}"
            )));
        }
        if n > 9 || k > 9 {
            return Err(Error::InvalidChart("n and k are limited to 9".into()));
        }
        let mut degrees: Vec<usize> = degrees.to_vec();
        degrees.sort_unstable();
        degrees.dedup();
        if !degrees.contains(&0) {
            return Err(Error::InvalidChart(
                "momentum degree 0 (ε) is mandatory".into(),
            ));
        }
        if let Some(&d) = degrees.iter().find(|&&d| d > n.min(k)) {
            return Err(Error::InvalidChart(format!(
                "momentum degree {d} exceeds min(n, k) = {}",
                n.min(k)
            )));
        }
        let mut momenta = Vec::new();
        for &p in &degrees {
            for alphas in subsets(n, p) {
                for fibers in subsets(k, p) {
                    let mut slots: Vec<usize> = (0..n).collect();
                    for (a, i) in alphas.iter().zip(&fibers) {
                        slots[*a] = n + i;
                    }
                    let (sorted, sign) = canonicalize_raw(&slots);
                    momenta.push(Momentum {
                        alphas: alphas.clone(),
                        fibers,
                        slots,
                        sorted,
                        sign,
                    });
                }
            }
        }
        let mut names: Vec<String> = Vec::new();
        names.extend((0..n).map(|a| format!("x{}", a + 1)));
        names.extend((0..k).map(|i| format!("y{}", i + 1)));
        for m in &momenta {
            if m.degree() == 0 {
                names.push("eps".into());
            } else {
                names.push(format!("p{}_{}", digits(&m.alphas), digits(&m.fibers)));
            }
        }
        for i in 0..k {
            for a in 0..n {
                names.push(format!("v{}_{}", i + 1, a + 1));
            }
        }
        let lookup = names
            .iter()
            .enumerate()
            .map(|(s, nm)| (nm.clone(), s as Sym))
            .collect();
        let by_sorted = momenta
            .iter()
            .enumerate()
            .map(|(j, m)| (m.sorted.clone(), j))
            .collect();
        Ok(ChartSpec {
            n,
            k,
            degrees,
            momenta,
            names,
            lookup,
            by_sorted,
        })
    }

    pub fn weyl(n: usize, k: usize) -> Result<Self> {
        ChartSpec::new(n, k, &[0, 1])
    }

    /// All momenta of `ΛⁿT*(𝒳×𝒴)`.
    pub fn full(n: usize, k: usize) -> Result<Self> {
        let degs: Vec<usize> = (0..=n.min(k)).collect();
        ChartSpec::new(n, k, &degs)
    }

    pub fn from_json(j: &ChartJson) -> Result<Self> {
        ChartSpec::new(j.n, j.k, &j.momentum_degrees)
    }

    pub fn to_json(&self) -> ChartJson {
        ChartJson {
            n: self.n,
            k: self.k,
            momentum_degrees: self.degrees.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }
    pub fn is_full(&self) -> bool {
        self.degrees.len() == self.n.min(self.k) + 1
    }

    /// Dimension of the phase-space patch.
    pub fn dim(&self) -> usize {
        self.n + self.k + self.momenta.len()
    }

    /// Number of symbols including velocities.
    pub fn n_symbols(&self) -> usize {
        self.names.len()
    }

    pub fn momenta(&self) -> &[Momentum] {
        &self.momenta
    }

    pub fn x(&self, alpha: usize) -> Sym {
        assert!(alpha < self.n);
        alpha as Sym
    }
    pub fn y(&self, i: usize) -> Sym {
        assert!(i < self.k);
        (self.n + i) as Sym
    }
    pub fn eps(&self) -> Sym {
        (self.n + self.k) as Sym
    }
    pub fn momentum_sym(&self, j: usize) -> Sym {
        (self.n + self.k + j) as Sym
    }
    pub fn momentum_of(&self, s: Sym) -> Option<&Momentum> {
        let s = s as usize;
        if s >= self.n + self.k && s < self.dim() {
            Some(&self.momenta[s - self.n - self.k])
        } else {
            None
        }
    }

    /// `p^α_i`.
    pub fn p1(&self, alpha: usize, i: usize) -> Option<Sym> {
        self.p(&[alpha], &[i])
    }

    /// `p^{α…}_{i…}` with increasing index lists.
    pub fn p(&self, alphas: &[usize], fibers: &[usize]) -> Option<Sym> {
        self.momenta
            .iter()
            .position(|m| m.alphas == alphas && m.fibers == fibers)
            .map(|j| self.momentum_sym(j))
    }

    /// Momentum conjugate to the canonical `n`-index, with the sign relating
    /// `p_{sorted}` to the chart coordinate.
    pub fn momentum_by_sorted(&self, sorted: &[usize]) -> Option<(Sym, i32)> {
        self.by_sorted
            .get(sorted)
            .map(|&j| (self.momentum_sym(j), self.momenta[j].sign))
    }

    pub fn v(&self, i: usize, alpha: usize) -> Sym {
        (self.dim() + i * self.n + alpha) as Sym
    }

    pub fn velocity_syms(&self) -> Vec<Sym> {
        (self.dim()..self.n_symbols()).map(|s| s as Sym).collect()
    }

    pub fn is_base(&self, c: usize) -> bool {
        c < self.n
    }
    pub fn is_fiber(&self, c: usize) -> bool {
        c >= self.n && c < self.n + self.k
    }
    pub fn is_momentum(&self, c: usize) -> bool {
        c >= self.n + self.k && c < self.dim()
    }

    pub fn name(&self, s: Sym) -> String {
        self.names
            .get(s as usize)
            .cloned()
            .unwrap_or_else(|| format!("s{s}"))
    }

    pub fn resolve(&self, name: &str) -> Option<Sym> {
        self.lookup.get(name).copied()
    }

    pub fn parse(&self, src: &str) -> std::result::Result<Expr, expr::ParseError> {
        expr::parse(src, &|s| self.resolve(s))
    }

    pub fn parse_field(&self, field: &str, src: &str) -> Result<Expr> {
        self.parse(src).map_err(|e| Error::parse(field, e))
    }

    pub fn show(&self, e: &Expr) -> String {
        format!("{}", e.display(&|s| self.name(s)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weyl_chart_layout() {
        let c = ChartSpec::weyl(2, 1).unwrap();
        assert_eq!(c.dim(), 6);
        assert_eq!(c.name(c.eps()), "eps");
        assert_eq!(c.name(c.p1(0, 0).unwrap()), "p1_1");
        assert_eq!(c.name(c.v(0, 1)), "v1_2");
        assert_eq!(c.resolve("y1"), Some(2));
    }

    #[test]
    fn momentum_signs_follow_slot_order() {
        let c = ChartSpec::weyl(3, 1).unwrap();
        // p^1_1 replaces slot 1: dy∧dx²∧dx³ = +dx²∧dx³∧dy after two transpositions.
        let m = c.momentum_of(c.p1(0, 0).unwrap()).unwrap();
        assert_eq!(m.sorted, vec![1, 2, 3]);
        assert_eq!(m.sign, 1);
        let m = c.momentum_of(c.p1(1, 0).unwrap()).unwrap();
        assert_eq!(m.sign, -1);
    }

    #[test]
    fn full_chart_counts_all_momenta() {
        let c = ChartSpec::full(2, 2).unwrap();
        assert_eq!(c.momenta().len(), 6);
        assert!(c.is_full());
        assert_eq!(c.name(c.p(&[0, 1], &[0, 1]).unwrap()), "p12_12");
    }

    #[test]
    fn rejects_bad_charts() {
        assert!(ChartSpec::new(0, 1, &[0]).is_err());
        assert!(ChartSpec::new(2, 1, &[1]).is_err());
        assert!(ChartSpec::new(2, 1, &[0, 2]).is_err());
    }
}
