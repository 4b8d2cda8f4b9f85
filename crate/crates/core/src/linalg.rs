//! Small dense/sparse linear-algebra helpers on top of `faer`.

use faer::linalg::solvers::Solve;
use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;

use crate::error::{Error, Result};

/// Sparse matrix type used throughout the crate.
pub type SpMat = SparseColMat<usize, f64>;

pub fn sparse_from_triplets(nrows: usize, ncols: usize, trips: &[(usize, usize, f64)]) -> SpMat {
    let t: Vec<Triplet<usize, usize, f64>> = trips
        .iter()
        .map(|&(r, c, v)| Triplet::new(r, c, v))
        .collect();
    SparseColMat::try_new_from_triplets(nrows, ncols, &t).expect("triplet indices in range")
}

pub fn sparse_zeros(nrows: usize, ncols: usize) -> SpMat {
    sparse_from_triplets(nrows, ncols, &[])
}

pub fn sparse_identity(n: usize) -> SpMat {
    let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
    sparse_from_triplets(n, n, &t)
}

/// Stored entries as `(row, col, value)`, column-major.
pub fn triplets(a: &SpMat) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::with_capacity(a.compute_nnz());
    for j in 0..a.ncols() {
        for (r, v) in a.row_idx_of_col_raw(j).iter().zip(a.val_of_col(j)) {
            out.push((*r, j, *v));
        }
    }
    out
}

pub fn transpose(a: &SpMat) -> SpMat {
    a.transpose().to_col_major().expect("transpose")
}

pub fn scale_sparse(a: &SpMat, s: f64) -> SpMat {
    let t: Vec<_> = triplets(a)
        .into_iter()
        .map(|(r, c, v)| (r, c, s * v))
        .collect();
    sparse_from_triplets(a.nrows(), a.ncols(), &t)
}

/// Stack sparse matrices vertically.
pub fn vstack(blocks: &[&SpMat]) -> SpMat {
    let ncols = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    let mut trips = Vec::new();
    let mut offset = 0;
    for b in blocks {
        assert_eq!(b.ncols(), ncols, "vstack column mismatch");
        trips.extend(triplets(b).into_iter().map(|(r, c, v)| (r + offset, c, v)));
        offset += b.nrows();
    }
    sparse_from_triplets(offset, ncols, &trips)
}

/// Block-diagonal sparse matrix from equally sized dense blocks.
pub fn block_diag(blocks: &[Mat<f64>]) -> SpMat {
    let mut trips = Vec::new();
    let (mut ro, mut co) = (0, 0);
    for b in blocks {
        for j in 0..b.ncols() {
            for i in 0..b.nrows() {
                let v = b[(i, j)];
                if v != 0.0 {
                    trips.push((ro + i, co + j, v));
                }
            }
        }
        ro += b.nrows();
        co += b.ncols();
    }
    sparse_from_triplets(ro, co, &trips)
}

pub fn spmv(a: &SpMat, x: &Col<f64>) -> Col<f64> {
    a * x
}

pub fn dot(a: &Col<f64>, b: &Col<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn col_from_slice(v: &[f64]) -> Col<f64> {
    Col::from_fn(v.len(), |i| v[i])
}

pub fn col_to_vec(v: &Col<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

pub fn mat_from_rows(rows: &[Vec<f64>]) -> Mat<f64> {
    let nr = rows.len();
    let nc = rows.first().map(|r| r.len()).unwrap_or(0);
    Mat::from_fn(nr, nc, |i, j| rows[i][j])
}

pub fn max_abs(a: MatRef<'_, f64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].abs());
        }
    }
    m
}

/// `max |A - A^T|`.
pub fn asymmetry(a: MatRef<'_, f64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    m
}

pub fn symmetrize(a: MatRef<'_, f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(a: MatRef<'_, f64>) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let s = symmetrize(a);
    s.self_adjoint_eigenvalues(Side::Lower)
        .expect("symmetric eigenvalue decomposition")
}

/// `(min, max)` eigenvalue of the symmetric part of `a`.
pub fn sym_extreme_eigs(a: MatRef<'_, f64>) -> (f64, f64) {
    let ev = sym_eigenvalues(a);
    match (ev.first(), ev.last()) {
        (Some(lo), Some(hi)) => (*lo, *hi),
        _ => (0.0, 0.0),
    }
}

pub fn singular_values(a: MatRef<'_, f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    a.singular_values().expect("svd")
}

pub fn spectral_norm(a: MatRef<'_, f64>) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Numerical rank with tolerance `rel_tol * sigma_max`.
pub fn rank(a: MatRef<'_, f64>, rel_tol: f64) -> usize {
    let sv = singular_values(a);
    let Some(&smax) = sv.first() else { return 0 };
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Orthonormal basis of the column space, rank decided by `rel_tol * sigma_max`.
pub fn column_space(a: MatRef<'_, f64>, rel_tol: f64) -> Mat<f64> {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return Mat::zeros(m, 0);
    }
    let svd = a.svd().expect("svd");
    let s = svd.S().column_vector();
    let smax = s[0];
    let r = if smax == 0.0 {
        0
    } else {
        (0..s.nrows()).filter(|&i| s[i] > rel_tol * smax).count()
    };
    svd.U().subcols(0, r).to_owned()
}

/// Orthonormal basis of the null space, rank decided by `rel_tol * sigma_max`.
pub fn null_space(a: MatRef<'_, f64>, rel_tol: f64) -> Mat<f64> {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 {
        return Mat::identity(n, n);
    }
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    let svd = a.svd().expect("svd");
    let s = svd.S().column_vector();
    let smax = s[0];
    let r = if smax == 0.0 {
        0
    } else {
        (0..s.nrows()).filter(|&i| s[i] > rel_tol * smax).count()
    };
    svd.V().subcols(r, n - r).to_owned()
}

/// Orthogonal projector `U U^T` onto the column space.
pub fn range_projector(a: MatRef<'_, f64>, rel_tol: f64) -> Mat<f64> {
    let u = column_space(a, rel_tol);
    &u * u.transpose()
}

/// Largest principal angle between two subspaces given by (not necessarily
/// orthonormal) column bases. Subspaces of different dimension are at
/// angle pi/2.
pub fn subspace_angle(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    let qa = column_space(a, 1e-12);
    let qb = column_space(b, 1e-12);
    if qa.ncols() != qb.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    if qa.ncols() == 0 {
        return 0.0;
    }
    // sin of the largest angle = || (I - Qb Qb^T) Qa ||_2
    let proj = &qb * (qb.transpose() * &qa);
    let resid = &qa - &proj;
    spectral_norm(resid.as_ref()).min(1.0).asin()
}

/// Inverse of a small square matrix, failing when numerically singular.
pub fn inverse(a: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let sv = singular_values(a);
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    if smax == 0.0 || smin <= 1e-14 * smax {
        return Err(Error::Singular {
            ratio: if smax == 0.0 { 0.0 } else { smin / smax },
        });
    }
    let lu = a.partial_piv_lu();
    Ok(lu.solve(Mat::<f64>::identity(a.nrows(), a.nrows())))
}

/// Symmetric positive definite check by minimum eigenvalue.
pub fn is_spd(a: MatRef<'_, f64>, sym_tol: f64) -> bool {
    if asymmetry(a) > sym_tol * max_abs(a).max(1.0) {
        return false;
    }
    let (lo, _) = sym_extreme_eigs(a);
    lo > 0.0
}

/// `A^p` for symmetric positive (semi)definite `A` via eigendecomposition.
pub fn spd_power(a: MatRef<'_, f64>, p: f64) -> Mat<f64> {
    let s = symmetrize(a);
    let evd = s.self_adjoint_eigen(Side::Lower).expect("evd");
    let u = evd.U();
    let d = evd.S().column_vector();
    let scaled = Mat::from_fn(u.nrows(), u.ncols(), |i, j| {
        u[(i, j)] * d[j].max(0.0).powf(p)
    });
    &scaled * u.transpose()
}

/// Matrix exponential by scaling and squaring with a diagonal Pade(8) approximant.
pub fn expm(a: MatRef<'_, f64>) -> Mat<f64> {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    if norm1 > 0.5 {
        squarings = (norm1 / 0.5).log2().ceil() as u32;
    }
    let scale = 0.5f64.powi(squarings as i32);
    let x = Mat::from_fn(n, n, |i, j| a[(i, j)] * scale);
    // Pade coefficients c_k = (2q-k)! q! / ((2q)! k! (q-k)!), q = 8
    let q = 8usize;
    let mut c = vec![1.0f64; q + 1];
    for k in 1..=q {
        c[k] = c[k - 1] * ((q - k + 1) as f64) / (((2 * q - k + 1) * k) as f64);
    }
    let id = Mat::<f64>::identity(n, n);
    let mut num = Mat::<f64>::identity(n, n);
    let mut den = Mat::<f64>::identity(n, n);
    let mut pow = id.clone();
    for (k, ck) in c.iter().enumerate().skip(1) {
        pow = &pow * &x;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        num = &num + &pow * faer::Scale(*ck);
        den = &den + &pow * faer::Scale(sign * ck);
    }
    let mut r = den.partial_piv_lu().solve(&num);
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Dense copy of a sparse matrix.
pub fn to_dense(a: &SpMat) -> Mat<f64> {
    a.to_dense()
}

/// Sparse copy of a dense matrix, dropping exact zeros.
pub fn to_sparse(a: MatRef<'_, f64>) -> SpMat {
    let mut t = Vec::new();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let v = a[(i, j)];
            if v != 0.0 {
                t.push((i, j, v));
            }
        }
    }
    sparse_from_triplets(a.nrows(), a.ncols(), &t)
}
