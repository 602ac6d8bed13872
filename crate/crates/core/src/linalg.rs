//! Small complex linear-algebra helpers built on `nalgebra`.
//!
//! Vectorization is column-major throughout, so that
//! `vec(A B C) = (C^T ⊗ A) vec(B)` holds with [`kron`].

use nalgebra::{DMatrix, DVector, Dyn, SVD};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative singular-value threshold below which a least-squares system is
/// treated as rank deficient.
pub const RANK_RTOL: f64 = 1e-10;

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Column-major vectorization.
pub fn vec(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec`]: reshape a length `rows * cols` vector column-major.
pub fn unvec(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    assert_eq!(v.len(), rows * cols, "unvec length mismatch");
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Row vector `v^T` as a 1 × n matrix.
pub fn row(v: &CVector) -> CMatrix {
    CMatrix::from_row_slice(1, v.len(), v.as_slice())
}

pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Outer product `u v^H`.
pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

/// `u^H v`.
pub fn inner(u: &CVector, v: &CVector) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Relative reconstruction error above which an SVD is rejected.
const SVD_CHECK_RTOL: f64 = 1e-8;

/// SVD with a reconstruction check.
///
/// nalgebra's bidiagonal iteration occasionally returns a non-converged
/// factorization for rank-deficient complex inputs. Each candidate is
/// verified against `a`; the adjoint is tried next and a Gram-matrix
/// eigendecomposition is the last resort.
pub fn checked_svd(a: &CMatrix) -> SVD<Complex64, Dyn, Dyn> {
    let direct = a.clone().svd(true, true);
    if reconstructs(a, &direct) {
        return direct;
    }
    let flipped = a.adjoint().svd(true, true);
    let swapped = SVD {
        u: flipped.v_t.as_ref().map(|m| m.adjoint()),
        v_t: flipped.u.as_ref().map(|m| m.adjoint()),
        singular_values: flipped.singular_values,
    };
    if reconstructs(a, &swapped) {
        return swapped;
    }
    gram_svd(a)
}

fn reconstructs(a: &CMatrix, svd: &SVD<Complex64, Dyn, Dyn>) -> bool {
    let (Some(u), Some(v_t)) = (&svd.u, &svd.v_t) else {
        return false;
    };
    let sigma = svd.singular_values.map(|s| Complex64::new(s, 0.0));
    let rebuilt = u * CMatrix::from_diagonal(&sigma) * v_t;
    let err = (rebuilt - a).norm();
    err.is_finite() && err <= SVD_CHECK_RTOL * a.norm().max(f64::MIN_POSITIVE)
}

/// Thin SVD through the eigendecomposition of the smaller Gram matrix.
/// Singular values below about `sqrt(eps) * sigma_1` lose relative accuracy.
fn gram_svd(a: &CMatrix) -> SVD<Complex64, Dyn, Dyn> {
    if a.nrows() < a.ncols() {
        let t = gram_svd(&a.adjoint());
        return SVD {
            u: t.v_t.map(|m| m.adjoint()),
            v_t: t.u.map(|m| m.adjoint()),
            singular_values: t.singular_values,
        };
    }
    let eig = (a.adjoint() * a).symmetric_eigen();
    let n = a.ncols();
    let av_raw = a * &eig.eigenvectors;
    let norms: Vec<f64> = av_raw.column_iter().map(|c| c.norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let v = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let av = CMatrix::from_fn(a.nrows(), n, |r, c| av_raw[(r, order[c])]);
    let singular_values = DVector::from_fn(n, |c, _| norms[order[c]]);
    let u = CMatrix::from_fn(a.nrows(), n, |r, c| {
        let s = singular_values[c];
        if s > 0.0 {
            av[(r, c)] / s
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    SVD {
        u: Some(u),
        v_t: Some(v.adjoint()),
        singular_values,
    }
}

/// Minimum-norm least-squares solution of `a x = b`.
///
/// Returns the solution and whether `a` was found rank deficient.
pub fn lstsq(a: &CMatrix, b: &CVector) -> (CVector, bool) {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return (CVector::zeros(0), false);
    }
    let svd = checked_svd(a);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let tol = smax * RANK_RTOL * (rows.max(cols) as f64);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let x = svd
        .solve(b, tol)
        .expect("both singular vector sets were computed");
    (x, rank < cols)
}

/// Numerical rank using the same threshold as [`lstsq`].
pub fn effective_rank(a: &CMatrix) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = checked_svd(a).singular_values;
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    let tol = smax * RANK_RTOL * (a.nrows().max(a.ncols()) as f64);
    sv.iter().filter(|&&s| s > tol).count()
}

/// Dominant singular triple `(sigma_1, u_1, v_1)` of `m`, from the leading
/// eigenvector of the smaller Gram matrix.
pub fn dominant_singular_pair(m: &CMatrix) -> (f64, CVector, CVector) {
    if m.nrows() < m.ncols() {
        let (s, u, v) = dominant_singular_pair(&m.adjoint());
        return (s, v, u);
    }
    let eig = (m.adjoint() * m).symmetric_eigen();
    let v = eig.eigenvectors.column(eig.eigenvalues.imax()).into_owned();
    let mv = m * &v;
    let s = mv.norm();
    if s == 0.0 {
        let mut u = CVector::zeros(m.nrows());
        u[0] = Complex64::new(1.0, 0.0);
        return (0.0, u, v);
    }
    (s, mv / Complex64::new(s, 0.0), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_small_case() {
        let a = CMatrix::from_row_slice(1, 2, &[c(1.0, 0.0), c(0.0, 1.0)]);
        let b = CMatrix::from_row_slice(2, 1, &[c(2.0, 0.0), c(3.0, 0.0)]);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (2, 2));
        assert_eq!(k[(0, 0)], c(2.0, 0.0));
        assert_eq!(k[(1, 0)], c(3.0, 0.0));
        assert_eq!(k[(0, 1)], c(0.0, 2.0));
        assert_eq!(k[(1, 1)], c(0.0, 3.0));
    }

    #[test]
    fn vec_is_column_major() {
        let m =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        let v = vec(&m);
        assert_eq!(v[1], c(3.0, 0.0));
        assert_eq!(unvec(&v, 2, 2), m);
    }

    #[test]
    fn lstsq_flags_rank_deficiency() {
        let col = [c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0)];
        let a = CMatrix::from_fn(3, 2, |i, _| col[i]);
        let b = CVector::from_column_slice(&col);
        let (x, deficient) = lstsq(&a, &b);
        assert!(deficient);
        // minimum-norm: the weight splits evenly across duplicate columns
        assert_abs_diff_eq!(x[0].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1].re, 0.5, epsilon = 1e-12);
    }

    /// Rank-one 64 x 16 steering product on which the plain bidiagonal
    /// iteration returned sigma_1 = 33.3 instead of 32.
    fn rank_one_regression_case(phase: f64, aoa: f64, aod: f64) -> CMatrix {
        use crate::channel_model::steering_vector;
        let a_r = steering_vector(64, aoa, 0.5).unwrap();
        let a_t = steering_vector(16, aod, 0.5).unwrap();
        outer(&a_r, &a_t) * Complex64::from_polar(32.0, phase + 0.4)
    }

    #[test]
    fn rank_one_steering_products_decompose() {
        let mut cases = vec![(4.563390825194505, 0.3, -0.6)];
        let mut state = 0x9e37_79b9_u64;
        let mut unit = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..300 {
            cases.push((
                unit() * std::f64::consts::TAU,
                unit() * 2.0 - 1.0,
                unit() * 2.0 - 1.0,
            ));
        }
        for (phase, aoa, aod) in cases {
            let m = rank_one_regression_case(phase, aoa, aod);
            assert!(reconstructs(&m, &checked_svd(&m)), "{phase} {aoa} {aod}");
            let (s, u, v) = dominant_singular_pair(&m);
            assert_abs_diff_eq!(s, 32.0, epsilon = 1e-10);
            assert_abs_diff_eq!(inner(&u, &(&m * &v)).norm(), 32.0, epsilon = 1e-10);
            assert_eq!(effective_rank(&m), 1);
        }
    }

    #[test]
    fn gram_fallback_reconstructs_rank_deficient_input() {
        let a = CMatrix::from_fn(9, 3, |i, j| {
            c((i + 2 * j) as f64 * 0.3, (i * j) as f64 * 0.1 - 0.5)
        });
        let b = CMatrix::from_fn(3, 5, |i, j| {
            c(
                1.0 / (1.0 + i as f64 + j as f64),
                (i as f64 - j as f64) * 0.2,
            )
        });
        for m in [&a * &b, (&a * &b).adjoint()] {
            let svd = gram_svd(&m);
            assert!(reconstructs(&m, &svd));
            let s = &svd.singular_values;
            assert!(s.iter().zip(s.iter().skip(1)).all(|(x, y)| x >= y));
        }
    }

    #[test]
    fn dominant_pair_of_rank_one() {
        let u = CVector::from_column_slice(&[c(0.6, 0.0), c(0.0, 0.8)]);
        let v = CVector::from_column_slice(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let m = outer(&u, &v) * c(3.0, 0.0);
        let (s, uu, vv) = dominant_singular_pair(&m);
        assert_abs_diff_eq!(s, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(inner(&uu, &(&m * &vv)).norm(), 3.0, epsilon = 1e-12);
    }
}
