//! SVD-based rank, least-squares and null-space helpers.
//!
//! All rank decisions use a relative threshold: a singular value counts when
//! it exceeds `rel_tol · σ_max`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SVD};

/// Default relative threshold for numeric rank.
pub const RANK_TOL: f64 = 1e-9;

/// Singular values in descending order. Empty for a matrix with no entries.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    SVD::new(a.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect()
}

/// Number of singular values above `rel_tol · σ_max`.
pub fn rank_of_values(s: &[f64], rel_tol: f64) -> usize {
    let smax = s.first().copied().unwrap_or(0.0);
    if smax <= 0.0 {
        return 0;
    }
    s.iter().filter(|v| **v > rel_tol * smax).count()
}

pub fn numeric_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    rank_of_values(&singular_values(a), rel_tol)
}

/// `σ_k / σ_max` for the `k`-th (zero-based) singular value, treating
/// missing values (more requested than `min(m, n)`) as zero.
pub fn relative_singular_value(s: &[f64], k: usize) -> f64 {
    let smax = s.first().copied().unwrap_or(0.0);
    if smax <= 0.0 {
        return 0.0;
    }
    s.get(k).copied().unwrap_or(0.0) / smax
}

/// Orthonormal basis of `{ v : vᵀ a = 0 }`, one basis vector per row.
pub fn left_null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return DMatrix::identity(m, m);
    }
    // nalgebra's U is thin (m × min(m, n)); zero columns make it square
    // without adding nonzero singular values.
    let square = if n < m {
        let mut padded = DMatrix::zeros(m, m);
        padded.view_mut((0, 0), (m, n)).copy_from(a);
        padded
    } else {
        a.clone()
    };
    let svd = SVD::new(square, true, false);
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    let r = rank_of_values(&s, rel_tol);
    let u = svd.u.expect("requested U");
    u.columns(r, m - r).transpose()
}

/// Orthonormal basis of `{ x : a x = 0 }`, one basis vector per column.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    left_null_space(&a.transpose(), rel_tol).transpose()
}

/// Minimum-norm least-squares solution of `a x ≈ b`.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub x: DVector<f64>,
    pub rank: usize,
    /// `max |a x − b|`.
    pub residual: f64,
}

pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> LeastSquares {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return LeastSquares {
            x: DVector::zeros(n),
            rank: 0,
            residual: b.amax(),
        };
    }
    let svd = SVD::new(a.clone(), true, true);
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let cut = rel_tol * smax;
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested Vt");
    let mut x = DVector::zeros(n);
    let mut rank = 0;
    for i in 0..s.len() {
        if smax > 0.0 && s[i] > cut {
            rank += 1;
            let coef = u.column(i).dot(b) / s[i];
            x += vt.row(i).transpose() * coef;
        }
    }
    let residual = (a * &x - b).amax();
    LeastSquares { x, rank, residual }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_simple_matrices() {
        assert_eq!(numeric_rank(&DMatrix::identity(3, 3), RANK_TOL), 3);
        assert_eq!(numeric_rank(&DMatrix::zeros(2, 4), RANK_TOL), 0);
        let r1 = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(numeric_rank(&r1, RANK_TOL), 1);
    }

    #[test]
    fn null_spaces_are_orthogonal_and_complete() {
        let a = DMatrix::from_row_slice(
            3,
            5,
            &[
                1.0, 0.0, 2.0, -1.0, 0.5, //
                0.0, 1.0, 1.0, 1.0, 0.0, //
                1.0, 1.0, 3.0, 0.0, 0.5,
            ],
        );
        let ln = left_null_space(&a, RANK_TOL);
        assert_eq!(ln.nrows(), 1);
        assert!((&ln * &a).amax() < 1e-12);
        let rn = null_space(&a, RANK_TOL);
        assert_eq!(rn.ncols(), 3);
        assert!((&a * &rn).amax() < 1e-12);
        assert!((rn.transpose() * &rn - DMatrix::identity(3, 3)).amax() < 1e-12);

        let tall = a.transpose();
        let ln_tall = left_null_space(&tall, RANK_TOL);
        assert_eq!(ln_tall.nrows(), 3);
        assert!((&ln_tall * &tall).amax() < 1e-12);
    }

    #[test]
    fn lstsq_min_norm() {
        // x1 + x2 = 2 has min-norm solution (1, 1)
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_vec(alloc::vec![2.0]);
        let sol = lstsq(&a, &b, RANK_TOL);
        assert_eq!(sol.rank, 1);
        assert!((sol.x[0] - 1.0).abs() < 1e-14 && (sol.x[1] - 1.0).abs() < 1e-14);
        assert!(sol.residual < 1e-14);

        let inconsistent = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let rhs = DVector::from_vec(alloc::vec![0.0, 2.0]);
        let sol = lstsq(&inconsistent, &rhs, RANK_TOL);
        assert!((sol.x[0] - 1.0).abs() < 1e-14);
        assert!((sol.residual - 1.0).abs() < 1e-14);
    }

    #[test]
    fn relative_values_handle_missing_entries() {
        let s = [4.0, 2.0];
        assert_eq!(relative_singular_value(&s, 1), 0.5);
        assert_eq!(relative_singular_value(&s, 5), 0.0);
        assert_eq!(relative_singular_value(&[], 0), 0.0);
    }
}
