//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, Dim, Matrix, RawStorage, Schur};

use crate::error::{Error, Result};
use crate::model::C64;

/// Largest modulus among the entries of a complex matrix or vector.
pub trait MaxAbs {
    fn max_abs(&self) -> f64;
}

impl<R: Dim, C: Dim, S: RawStorage<C64, R, C>> MaxAbs for Matrix<C64, R, C, S> {
    fn max_abs(&self) -> f64 {
        self.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
}

/// Eigenvalues of a square complex matrix via the Schur decomposition.
pub fn eigenvalues(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    let schur = Schur::try_new(m.clone(), 1e-15, 10_000).ok_or(Error::Singular)?;
    Ok(schur.eigenvalues().ok_or(Error::Singular)?.iter().copied().collect())
}

/// Singular values in descending order together with the right singular
/// vectors (as columns of a unitary matrix, same order).
fn svd_sorted(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.ncols();
    // Pad to square so a full set of right singular vectors is produced.
    let padded = if m.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let values = order.iter().map(|&k| svd.singular_values[k]).collect();
    let v = DMatrix::from_fn(n, n, |r, c| v_t[(order[c], r)].conj());
    (values, v)
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    svd_sorted(m).0
}

/// Unit right singular vector belonging to the smallest singular value.
pub fn null_vector(m: &DMatrix<C64>) -> DVector<C64> {
    let (_, v) = svd_sorted(m);
    v.column(v.ncols() - 1).into_owned()
}

/// Orthonormal basis of the numerical null space: right singular vectors whose
/// singular values do not exceed `tol`.
pub fn null_space(m: &DMatrix<C64>, tol: f64) -> Vec<DVector<C64>> {
    let (s, v) = svd_sorted(m);
    (0..s.len())
        .filter(|&k| s[k] <= tol)
        .map(|k| v.column(k).into_owned())
        .collect()
}

/// Minimum-norm least-squares solution of `m x = b`, discarding singular
/// values below `rtol · σ_max`.
pub fn min_norm_solve(m: &DMatrix<C64>, b: &DVector<C64>, rtol: f64) -> Result<DVector<C64>> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.solve(b, rtol * smax).map_err(|_| Error::Singular)
}

/// Inverse via LU; fails when the matrix is numerically singular.
pub fn inverse(m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let inv = m.clone().try_inverse().ok_or(Error::Singular)?;
    if inv.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(inv)
}

/// 2-norm condition number.
pub fn condition_number(m: &DMatrix<C64>) -> f64 {
    let s = singular_values(m);
    s[0] / s[s.len() - 1]
}

/// Greedy minimal-distance pairing of two equally sized multisets. Returns the
/// largest paired distance. Ties are broken by real part, then imaginary part.
pub fn match_spectra(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len(), "spectra must have equal size");
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| {
        p.0.total_cmp(&q.0)
            .then(a[p.1].re.total_cmp(&a[q.1].re))
            .then(a[p.1].im.total_cmp(&a[q.1].im))
            .then(b[p.2].re.total_cmp(&b[q.2].re))
            .then(b[p.2].im.total_cmp(&b[q.2].im))
    });
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for (d, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            worst = worst.max(d);
        }
    }
    worst
}

pub(crate) fn identity(n: usize) -> DMatrix<C64> {
    DMatrix::identity(n, n)
}

pub(crate) fn shifted(m: &DMatrix<C64>, lambda: C64) -> DMatrix<C64> {
    m - identity(m.nrows()) * lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn null_vector_of_rank_deficient_matrix() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(1., 0.),
                c(2., 0.),
                c(3., 0.),
                c(2., 0.),
                c(4., 0.),
                c(6., 0.),
                c(0., 1.),
                c(0., 1.),
                c(0., 1.),
            ],
        );
        let v = null_vector(&m);
        assert!((&m * &v).max_abs() < 1e-14);
        assert!((v.norm() - 1.0).abs() < 1e-14);
        assert_eq!(null_space(&m, 1e-12).len(), 1);
    }

    #[test]
    fn min_norm_solution_is_orthogonal_to_kernel() {
        let m = DMatrix::from_row_slice(
            2,
            3,
            &[c(1., 0.), c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.), c(1., 0.)],
        );
        let b = DVector::from_vec(vec![c(1., 0.), c(1., 0.)]);
        let x = min_norm_solve(&m, &b, 1e-12).unwrap();
        assert!((&m * &x - &b).max_abs() < 1e-14);
        let kernel = DVector::from_vec(vec![c(1., 0.), c(-1., 0.), c(1., 0.)]);
        assert!(kernel.dotc(&x).norm() < 1e-14);
    }

    #[test]
    fn eigenvalues_of_triangular_matrix() {
        let mut rng = StdRng::seed_from_u64(2);
        let mut m = DMatrix::<C64>::zeros(5, 5);
        let diag: Vec<C64> = (0..5).map(|k| c(-(k as f64), 0.5 * k as f64)).collect();
        for i in 0..5 {
            m[(i, i)] = diag[i];
            for j in i + 1..5 {
                m[(i, j)] = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
        let ev = eigenvalues(&m).unwrap();
        assert!(match_spectra(&ev, &diag) < 1e-12);
    }

    #[test]
    fn greedy_matching_pairs_nearest() {
        let a = [c(0., 0.), c(1., 0.), c(5., 1.)];
        let b = [c(5., 1.1), c(0.01, 0.), c(1., 0.)];
        assert!((match_spectra(&a, &b) - 0.1).abs() < 1e-12);
    }
}
