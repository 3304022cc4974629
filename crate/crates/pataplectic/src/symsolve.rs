//! Gauss–Jordan elimination over symbolic coefficients.

use crate::expr::{zero_test, Expr};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Zero oracle: exact normal form first, random points in `[lo, hi]` otherwise.
pub struct ZeroCtx {
    pub n_syms: usize,
    pub lo: f64,
    pub hi: f64,
    rng: ChaCha8Rng,
}

impl ZeroCtx {
    pub fn new(n_syms: usize, seed: u64) -> Self {
        // positive range keeps sqrt arguments and weights well defined
        ZeroCtx {
            n_syms,
            lo: 0.3,
            hi: 1.7,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn is_zero(&mut self, e: &Expr) -> bool {
        zero_test(e, self.n_syms, &mut self.rng, self.lo, self.hi).holds()
    }
}

pub type Row = BTreeMap<usize, Expr>;

/// One row of the reduced system: `x_pivot + Σ_f c_f x_f = rhs` over free unknowns `f`.
#[derive(Clone, Debug)]
pub struct PivotRow {
    pub pivot: usize,
    pub free: BTreeMap<usize, Expr>,
    pub rhs: Expr,
}

#[derive(Clone, Debug)]
pub struct Reduced {
    pub rows: Vec<PivotRow>,
    pub free: Vec<usize>,
    /// Right-hand sides of rows that reduced to `0 = r` with `r ≠ 0`.
    pub inconsistent: Vec<Expr>,
}

impl Reduced {
    pub fn is_consistent(&self) -> bool {
        self.inconsistent.is_empty()
    }

    /// Values of all unknowns given values of the free ones.
    pub fn assign(&self, n_unknowns: usize, free_values: &BTreeMap<usize, Expr>) -> Vec<Expr> {
        let mut out = vec![Expr::zero(); n_unknowns];
        for f in &self.free {
            if let Some(v) = free_values.get(f) {
                out[*f] = v.clone();
            }
        }
        for r in &self.rows {
            let mut v = r.rhs.clone();
            for (f, c) in &r.free {
                v = &v - &(c * &out[*f]);
            }
            out[r.pivot] = v;
        }
        out
    }
}

fn pivot_rank(e: &Expr) -> usize {
    if e.as_constant().is_some() {
        0
    } else if e.as_single_term().is_some() {
        1
    } else {
        2 + e.n_terms()
    }
}

/// Reduce `Σ_c A[r][c] x_c = b[r]`. Pivots prefer constant, then monomial coefficients.
pub fn reduce(mut rows: Vec<(Row, Expr)>, n_unknowns: usize, zc: &mut ZeroCtx) -> Reduced {
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut used = vec![false; rows.len()];
    let mut is_pivot = vec![false; n_unknowns];
    let mut progress = true;
    // repeat: eliminations can create entries in columns that had none
    while progress {
        progress = false;
        for col in 0..n_unknowns {
            if is_pivot[col] {
                continue;
            }
            let mut best: Option<(usize, usize)> = None;
            for (r, (row, _)) in rows.iter().enumerate() {
                if used[r] {
                    continue;
                }
                if let Some(c) = row.get(&col) {
                    let rank = pivot_rank(c);
                    if best.map(|b| rank < b.1).unwrap_or(true) {
                        if rank >= 2 && zc.is_zero(c) {
                            continue;
                        }
                        best = Some((r, rank));
                    }
                }
            }
            let Some((pr, _)) = best else { continue };
            used[pr] = true;
            let pc = rows[pr].0[&col].clone();
            let inv = pc.recip();
            let (prow, prhs) = {
                let (row, rhs) = &rows[pr];
                let scaled: Row = row
                    .iter()
                    .filter(|(c, _)| **c != col)
                    .map(|(c, e)| (*c, e * &inv))
                    .filter(|(_, e)| !e.is_zero())
                    .collect();
                (scaled, rhs * &inv)
            };
            let mut new_p = prow.clone();
            new_p.insert(col, Expr::one());
            rows[pr] = (new_p, prhs.clone());
            for r in 0..rows.len() {
                if r == pr {
                    continue;
                }
                let Some(f) = rows[r].0.remove(&col) else {
                    continue;
                };
                for (c, e) in &prow {
                    let v = &rows[r].0.get(c).cloned().unwrap_or_else(Expr::zero) - &(&f * e);
                    if v.is_zero() {
                        rows[r].0.remove(c);
                    } else {
                        rows[r].0.insert(*c, v);
                    }
                }
                rows[r].1 = &rows[r].1 - &(&f * &prhs);
            }
            pivots.push((pr, col));
            is_pivot[col] = true;
            progress = true;
        }
    }
    let pivot_cols: Vec<usize> = pivots.iter().map(|p| p.1).collect();
    let free: Vec<usize> = (0..n_unknowns)
        .filter(|c| !pivot_cols.contains(c))
        .collect();
    let mut out_rows = Vec::new();
    for &(r, col) in &pivots {
        let (row, rhs) = &rows[r];
        let mut fr = BTreeMap::new();
        for (c, e) in row {
            if *c != col && !zc.is_zero(e) {
                fr.insert(*c, e.clone());
            }
        }
        out_rows.push(PivotRow {
            pivot: col,
            free: fr,
            rhs: rhs.clone(),
        });
    }
    let mut inconsistent = Vec::new();
    for (r, (_, rhs)) in rows.iter().enumerate() {
        if used[r] {
            continue;
        }
        // any leftover coefficients are numerically zero
        if !zc.is_zero(rhs) {
            inconsistent.push(rhs.clone());
        }
    }
    Reduced {
        rows: out_rows,
        free,
        inconsistent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_symbolic_system() {
        // x0 + s x1 = 1, x1 = s  with s = symbol 0
        let s = Expr::sym(0);
        let rows = vec![
            (Row::from([(0, Expr::one()), (1, s.clone())]), Expr::one()),
            (Row::from([(1, Expr::one())]), s.clone()),
        ];
        let mut zc = ZeroCtx::new(1, 1);
        let r = reduce(rows, 2, &mut zc);
        assert!(r.is_consistent() && r.free.is_empty());
        let v = r.assign(2, &BTreeMap::new());
        assert_eq!(v[0], &Expr::one() - &s.pow(2));
        assert_eq!(v[1], s);
    }

    #[test]
    fn detects_inconsistency_and_free_unknowns() {
        let rows = vec![
            (Row::from([(0, Expr::one())]), Expr::one()),
            (Row::from([(0, Expr::int(2))]), Expr::int(3)),
        ];
        let mut zc = ZeroCtx::new(1, 1);
        let r = reduce(rows, 2, &mut zc);
        assert!(!r.is_consistent());
        assert_eq!(r.free, vec![1]);
    }
}
