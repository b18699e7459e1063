//! Small dense linear algebra for the tensor sizes this crate works at
//! (n <= 3 parameters). Matrices are row-major `Vec<Vec<T>>` so they
//! serialize to nested JSON arrays without adapters.

use crate::error::{GeomError, Result};
use crate::scalar::{as_f64, lit, Scalar};

pub type Matrix<T> = Vec<Vec<T>>;
pub type Tensor3<T> = Vec<Vec<Vec<T>>>;
pub type Tensor4<T> = Vec<Vec<Vec<Vec<T>>>>;

pub fn zeros_matrix<T: Scalar>(n: usize) -> Matrix<T> {
    vec![vec![T::zero(); n]; n]
}

pub fn zeros_tensor3<T: Scalar>(n: usize) -> Tensor3<T> {
    vec![vec![vec![T::zero(); n]; n]; n]
}

pub fn zeros_tensor4<T: Scalar>(n: usize) -> Tensor4<T> {
    vec![vec![vec![vec![T::zero(); n]; n]; n]; n]
}

pub fn identity<T: Scalar>(n: usize) -> Matrix<T> {
    let mut m = zeros_matrix(n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn mat_vec<T: Scalar>(a: &Matrix<T>, x: &[T]) -> Vec<T> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
        })
        .collect()
}

pub fn mat_mul<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let n = a.len();
    let p = b[0].len();
    let mut c = vec![vec![T::zero(); p]; n];
    for i in 0..n {
        for (k, b_row) in b.iter().enumerate() {
            let aik = a[i][k];
            for j in 0..p {
                c[i][j] = c[i][j] + aik * b_row[j];
            }
        }
    }
    c
}

pub fn max_abs_matrix<T: Scalar>(a: &Matrix<T>) -> T {
    a.iter()
        .flatten()
        .fold(T::zero(), |acc, &v| acc.max(v.abs()))
}

pub fn max_abs_diff_matrix<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> T {
    let mut worst = T::zero();
    for (ra, rb) in a.iter().zip(b) {
        for (&x, &y) in ra.iter().zip(rb) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

pub fn max_abs_diff_tensor3<T: Scalar>(a: &Tensor3<T>, b: &Tensor3<T>) -> T {
    let mut worst = T::zero();
    for (ma, mb) in a.iter().zip(b) {
        worst = worst.max(max_abs_diff_matrix(ma, mb));
    }
    worst
}

pub fn max_abs_tensor3<T: Scalar>(a: &Tensor3<T>) -> T {
    a.iter()
        .fold(T::zero(), |acc, m| acc.max(max_abs_matrix(m)))
}

pub fn max_abs_tensor4<T: Scalar>(a: &Tensor4<T>) -> T {
    a.iter()
        .fold(T::zero(), |acc, t| acc.max(max_abs_tensor3(t)))
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors stored as columns,
/// sorted by ascending eigenvalue. Accurate to a few ulps at these sizes.
pub fn sym_eigen<T: Scalar>(a: &Matrix<T>) -> (Vec<T>, Matrix<T>) {
    let n = a.len();
    let mut m: Matrix<T> = a.clone();
    let mut v = identity::<T>(n);
    if n == 1 {
        return (vec![m[0][0]], v);
    }

    let frob = {
        let mut s = T::zero();
        for row in &m {
            for &x in row {
                s = s + x * x;
            }
        }
        s.sqrt()
    };
    let tol = T::epsilon() * frob.max(T::one());

    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[p][q].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() <= tol * lit(1e-3) {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (lit::<T>(2.0) * m[p][q]);
                let t = {
                    let denom = theta.abs() + (T::one() + theta * theta).sqrt();
                    let t = T::one() / denom;
                    if theta < T::zero() {
                        -t
                    } else {
                        t
                    }
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<T> = (0..n).map(|i| m[i][i]).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let values: Vec<T> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = zeros_matrix::<T>(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            vectors[k][new_col] = v[k][old_col];
        }
    }
    (values, vectors)
}

/// Certify positive definiteness with the scale-invariant threshold
/// `lambda_min > 1e-10 * lambda_max` and return `(eigenvalues, inverse)`.
pub fn spd_certify_invert<T: Scalar>(a: &Matrix<T>) -> Result<(Vec<T>, Matrix<T>)> {
    let n = a.len();
    let (values, vectors) = sym_eigen(a);
    let lambda_min = values[0];
    let lambda_max = values[n - 1];
    if !(lambda_min > lit::<T>(1e-10) * lambda_max.abs()) || lambda_max <= T::zero() {
        return Err(GeomError::NotPositiveDefinite {
            eigenvalues: values.iter().map(|&x| as_f64(x)).collect(),
        });
    }
    // inverse = V diag(1/lambda) V^T
    let mut inv = zeros_matrix::<T>(n);
    for i in 0..n {
        for j in 0..n {
            let mut s = T::zero();
            for (k, &lambda) in values.iter().enumerate() {
                s = s + vectors[i][k] * vectors[j][k] / lambda;
            }
            inv[i][j] = s;
        }
    }
    // exact symmetry of the inverse
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (inv[i][j] + inv[j][i]) / lit(2.0);
            inv[i][j] = avg;
            inv[j][i] = avg;
        }
    }
    Ok((values, inv))
}
