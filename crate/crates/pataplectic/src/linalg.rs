//! Small dense linear-algebra helpers, numeric and symbolic.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::symsolve::{reduce, Row, ZeroCtx};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;

/// Ratio of extreme singular values; infinite for singular matrices.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 1.0;
    }
    let sv = a.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Partial-pivot LU solve.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().lu().solve(b)
}

pub fn inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    a.clone().lu().try_inverse()
}

/// Solve `A x = b` symbolically; the system must have a unique solution.
pub fn symbolic_solve(a: &[Vec<Expr>], b: &[Expr], n_syms: usize) -> Result<Vec<Expr>> {
    let n = b.len();
    let rows: Vec<(Row, Expr)> = a
        .iter()
        .zip(b)
        .map(|(r, rhs)| {
            let row: Row = r
                .iter()
                .enumerate()
                .filter(|(_, e)| !e.is_zero())
                .map(|(j, e)| (j, e.clone()))
                .collect();
            (row, rhs.clone())
        })
        .collect();
    let mut zc = ZeroCtx::new(n_syms, 0x11a9);
    let red = reduce(rows, n, &mut zc);
    if !red.is_consistent() || !red.free.is_empty() {
        return Err(Error::Model("symbolic matrix is singular".into()));
    }
    Ok(red.assign(n, &BTreeMap::new()))
}

/// Column-by-column symbolic inverse.
pub fn symbolic_inverse(a: &[Vec<Expr>], n_syms: usize) -> Result<Vec<Vec<Expr>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let e: Vec<Expr> = (0..n)
            .map(|i| if i == j { Expr::one() } else { Expr::zero() })
            .collect();
        cols.push(symbolic_solve(a, &e, n_syms)?);
    }
    Ok((0..n)
        .map(|i| (0..n).map(|j| cols[j][i].clone()).collect())
        .collect())
}

/// Symbolic determinant by cofactor expansion (small matrices only).
pub fn symbolic_det(a: &[Vec<Expr>]) -> Expr {
    let n = a.len();
    match n {
        0 => Expr::one(),
        1 => a[0][0].clone(),
        _ => {
            let mut acc = Expr::zero();
            for j in 0..n {
                if a[0][j].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Expr>> = a[1..]
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != j)
                            .map(|(_, e)| e.clone())
                            .collect()
                    })
                    .collect();
                let t = &a[0][j] * &symbolic_det(&minor);
                acc = if j % 2 == 0 { acc + t } else { acc - t };
            }
            acc
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condition_of_identity_and_singular() {
        assert!((condition_number(&DMatrix::identity(3, 3)) - 1.0).abs() < 1e-14);
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(condition_number(&s) > 1e15);
    }

    #[test]
    fn symbolic_inverse_times_matrix() {
        let x = Expr::sym(0);
        let a = vec![
            vec![x.clone() + Expr::one(), Expr::int(2)],
            vec![Expr::one(), x.clone()],
        ];
        let inv = symbolic_inverse(&a, 1).unwrap();
        let mut zc = ZeroCtx::new(1, 3);
        for i in 0..2 {
            for j in 0..2 {
                let e: Expr = (0..2).map(|m| &a[i][m] * &inv[m][j]).sum();
                let want = if i == j { Expr::one() } else { Expr::zero() };
                assert!(zc.is_zero(&(e - want)));
            }
        }
        let d = symbolic_det(&a);
        assert!(zc.is_zero(&(d - (&x * &x + x.clone() - Expr::int(2)))));
    }
}
