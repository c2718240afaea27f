//! Small dense symmetric kernels: dot products, Cholesky solves with a ridge
//! retry, and Jacobi eigenvalue extremes. Everything here works on systems of
//! support size, so `O(k^3)` with tiny `k`; no external linear algebra needed.

use alloc::vec::Vec;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub(crate) fn norm_squared(v: &[f64]) -> f64 {
    dot(v, v)
}

/// Solution of a symmetric positive definite system, with a note on whether
/// the fallback regularizer had to be applied.
pub(crate) struct SpdSolution {
    pub x: Vec<f64>,
    pub ridged: bool,
}

/// Solve `A x = b` for symmetric `A` (k-by-k, column-major) via Cholesky.
///
/// If the factorization meets a non-positive pivot (rank deficiency), retry
/// once with `ridge` added to the diagonal. Returns `None` only when even the
/// ridged system fails, which requires non-finite input.
pub(crate) fn solve_spd(a: &[f64], b: &[f64], k: usize, ridge: f64) -> Option<SpdSolution> {
    if let Some(x) = cholesky_solve(a, b, k, 0.0) {
        return Some(SpdSolution { x, ridged: false });
    }
    if ridge > 0.0 {
        if let Some(x) = cholesky_solve(a, b, k, ridge) {
            return Some(SpdSolution { x, ridged: true });
        }
    }
    None
}

/// One Cholesky factorization + solve attempt; `None` when a pivot falls at or
/// below the rank tolerance (relative to the largest diagonal entry).
fn cholesky_solve(a: &[f64], b: &[f64], k: usize, ridge: f64) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), k * k);
    debug_assert_eq!(b.len(), k);
    let mut l = a.to_vec();
    let mut scale = 0.0f64;
    for j in 0..k {
        l[j + j * k] += ridge;
        scale = scale.max(l[j + j * k].abs());
    }
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);

    for j in 0..k {
        let mut d = l[j + j * k];
        for r in 0..j {
            d -= l[j + r * k] * l[j + r * k];
        }
        if !(d > tol) {
            return None; // non-positive, tiny, or NaN pivot
        }
        let d = libm::sqrt(d);
        l[j + j * k] = d;
        for i in (j + 1)..k {
            let mut v = l[i + j * k];
            for r in 0..j {
                v -= l[i + r * k] * l[j + r * k];
            }
            l[i + j * k] = v / d;
        }
    }

    // Forward solve L z = b, then backward solve L^T x = z.
    let mut x = b.to_vec();
    for i in 0..k {
        let mut v = x[i];
        for r in 0..i {
            v -= l[i + r * k] * x[r];
        }
        x[i] = v / l[i + i * k];
    }
    for i in (0..k).rev() {
        let mut v = x[i];
        for r in (i + 1)..k {
            v -= l[r + i * k] * x[r];
        }
        x[i] = v / l[i + i * k];
    }
    Some(x)
}

/// Extreme eigenvalues `(min, max)` of a symmetric k-by-k matrix by cyclic
/// Jacobi rotations. Exact enough for restricted-isometry bookkeeping on
/// support-sized systems.
pub(crate) fn symmetric_eigen_extremes(a: &[f64], k: usize) -> (f64, f64) {
    debug_assert_eq!(a.len(), k * k);
    if k == 0 {
        return (0.0, 0.0);
    }
    if k == 1 {
        return (a[0], a[0]);
    }
    let mut m = a.to_vec();
    let mut scale = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            scale = scale.max(m[i + j * k].abs());
        }
    }
    if scale == 0.0 {
        return (0.0, 0.0);
    }
    for _sweep in 0..50 {
        let mut off = 0.0f64;
        for p in 0..k - 1 {
            for q in (p + 1)..k {
                off = off.max(m[p + q * k].abs());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..k - 1 {
            for q in (p + 1)..k {
                let apq = m[p + q * k];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[p + p * k];
                let aqq = m[q + q * k];
                let theta = (aqq - app) / (2.0 * apq);
                let t = {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                // Rotate rows/columns p and q.
                for i in 0..k {
                    let aip = m[i + p * k];
                    let aiq = m[i + q * k];
                    m[i + p * k] = c * aip - s * aiq;
                    m[i + q * k] = s * aip + c * aiq;
                }
                for i in 0..k {
                    let api = m[p + i * k];
                    let aqi = m[q + i * k];
                    m[p + i * k] = c * api - s * aqi;
                    m[q + i * k] = s * api + c * aqi;
                }
            }
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..k {
        let d = m[j + j * k];
        lo = lo.min(d);
        hi = hi.max(d);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn cholesky_solves_diagonal_system() {
        // 2x2 diagonal: [4 0; 0 9] x = (8, 27) -> x = (2, 3)
        let a = [4.0, 0.0, 0.0, 9.0];
        let b = [8.0, 27.0];
        let sol = solve_spd(&a, &b, 2, 0.0).unwrap();
        assert!(!sol.ridged);
        assert!(close(sol.x[0], 2.0, 1e-14));
        assert!(close(sol.x[1], 3.0, 1e-14));
    }

    #[test]
    fn cholesky_solves_dense_spd_system() {
        // A = [[4,2],[2,3]], b = (10, 9): solution (1.5, 2) since
        // 4*1.5+2*2 = 10 and 2*1.5+3*2 = 9.
        let a = [4.0, 2.0, 2.0, 3.0];
        let b = [10.0, 9.0];
        let sol = solve_spd(&a, &b, 2, 0.0).unwrap();
        assert!(close(sol.x[0], 1.5, 1e-12));
        assert!(close(sol.x[1], 2.0, 1e-12));
    }

    #[test]
    fn singular_system_falls_back_to_ridge() {
        // Duplicated column: gram [[1,1],[1,1]] is rank one.
        let a = [1.0, 1.0, 1.0, 1.0];
        let b = [1.0, 1.0];
        assert!(cholesky_solve(&a, &b, 2, 0.0).is_none());
        let sol = solve_spd(&a, &b, 2, 1e-8).unwrap();
        assert!(sol.ridged);
        // Ridged solution stays near the minimum-norm solution (0.5, 0.5).
        assert!(close(sol.x[0], 0.5, 1e-6));
        assert!(close(sol.x[1], 0.5, 1e-6));
    }

    #[test]
    fn jacobi_matches_hand_eigenvalues() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let a = [2.0, 1.0, 1.0, 2.0];
        let (lo, hi) = symmetric_eigen_extremes(&a, 2);
        assert!(close(lo, 1.0, 1e-12));
        assert!(close(hi, 3.0, 1e-12));
    }

    #[test]
    fn jacobi_on_diagonal_matrix_returns_extremes() {
        let a = [5.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0];
        let (lo, hi) = symmetric_eigen_extremes(&a, 3);
        assert!(close(lo, -1.0, 1e-14));
        assert!(close(hi, 5.0, 1e-14));
    }

    #[test]
    fn jacobi_handles_larger_known_spectrum() {
        // Tridiagonal (-1, 2, -1) of size 4: eigenvalues 2 - 2 cos(k pi / 5).
        let k = 4;
        let mut a = vec![0.0; k * k];
        for i in 0..k {
            a[i + i * k] = 2.0;
            if i + 1 < k {
                a[i + (i + 1) * k] = -1.0;
                a[(i + 1) + i * k] = -1.0;
            }
        }
        let (lo, hi) = symmetric_eigen_extremes(&a, k);
        let expect_lo = 2.0 - 2.0 * libm::cos(core::f64::consts::PI / 5.0);
        let expect_hi = 2.0 - 2.0 * libm::cos(4.0 * core::f64::consts::PI / 5.0);
        assert!(close(lo, expect_lo, 1e-10));
        assert!(close(hi, expect_hi, 1e-10));
    }
}
