//! Small dense linear algebra for the m×m group systems (m ≤ 8 in practice).

use alloc::vec;
use alloc::vec::Vec;

/// Solves `a x = b` for a dense row-major `n×n` matrix by Gaussian
/// elimination with partial pivoting. `a` and `b` are consumed as scratch.
/// Returns `None` when a pivot falls below `1e-12` times the largest input
/// entry, which the callers treat as "matrix singular at working precision".
pub(crate) fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    assert_eq!(a.len(), n * n, "matrix shape mismatch");
    assert_eq!(b.len(), n, "rhs length mismatch");
    let mut scale = 0.0f64;
    for &v in a.iter() {
        scale = scale.max(libm::fabs(v));
    }
    let tol = 1e-12 * scale;

    for col in 0..n {
        let mut piv = col;
        let mut piv_abs = libm::fabs(a[col * n + col]);
        for row in col + 1..n {
            let cand = libm::fabs(a[row * n + col]);
            if cand > piv_abs {
                piv = row;
                piv_abs = cand;
            }
        }
        if piv_abs <= tol {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }

    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col * n + k] * x[k];
        }
        x[col] = s / a[col * n + col];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        // [[2,1],[1,3]] x = [3,5] -> x = [4/5, 7/5]
        let x = solve_dense(vec![2.0, 1.0, 1.0, 3.0], vec![3.0, 5.0], 2).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14);
        assert!((x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn rejects_singular() {
        assert!(solve_dense(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 2.0], 2).is_none());
    }

    #[test]
    fn pivots_on_zero_diagonal() {
        let x = solve_dense(vec![0.0, 1.0, 1.0, 0.0], vec![2.0, 3.0], 2).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-14);
        assert!((x[1] - 2.0).abs() < 1e-14);
    }
}
