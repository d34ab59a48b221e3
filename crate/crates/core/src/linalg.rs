//! Numeric rank and Jacobians at sample points.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::expr::{Expr, Symbol};
use crate::jet::{evaluate, JetPoint};

/// Default relative singular-value threshold.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `tol` times the largest one.
pub fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    rank_of(&singular_values(m), tol)
}

pub fn rank_of(sv: &[f64], tol: f64) -> usize {
    match sv.first() {
        Some(&top) if top > 0.0 && top.is_finite() => {
            sv.iter().filter(|&&s| s > tol * top).count()
        }
        _ => 0,
    }
}

/// Row-major matrix from evaluated expressions.
pub fn evaluate_matrix(rows: &[Vec<Expr>], p: &JetPoint) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut m = DMatrix::zeros(rows.len(), ncols);
    for (i, row) in rows.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            m[(i, j)] = if e.is_zero() { 0.0 } else { evaluate(e, p)? };
        }
    }
    Ok(m)
}

/// Symbolic Jacobian rows `∂f/∂x` for each function.
pub fn jacobian(funcs: &[Expr], vars: &[Symbol]) -> Vec<Vec<Expr>> {
    funcs
        .iter()
        .map(|f| vars.iter().map(|x| f.diff(x)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_simple_matrices() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(rank(&m, DEFAULT_TOL), 1);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-12]);
        assert_eq!(rank(&m, DEFAULT_TOL), 1);
        assert_eq!(rank(&m, 1e-14), 2);
        assert_eq!(rank(&DMatrix::zeros(3, 3), DEFAULT_TOL), 0);
    }
}
