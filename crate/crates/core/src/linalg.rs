//! Small dense linear algebra used throughout the crate.
//!
//! Everything here targets matrices with at most a few hundred rows or
//! columns: frames with `m <= 16`, and their lifted coefficient matrices
//! with `m(m+1)/2` columns. The routines favour accuracy and predictable
//! rank decisions over speed.

use std::fmt;
use std::ops::{Index, IndexMut};

/// Row-major dense real matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from equal-length rows.
    ///
    /// Panics if the rows are ragged.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Rank of the matrix whose rows are `rows`, by Gaussian elimination with
/// complete pivoting.
///
/// A pivot counts as nonzero when it exceeds `eps * max|entry|` of the
/// original matrix.
pub fn rank<R: AsRef<[f64]>>(rows: &[R], eps: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut a = Matrix::from_rows(rows);
    let (n, m) = (a.rows, a.cols);
    let scale = a.max_abs();
    if scale == 0.0 {
        return 0;
    }
    let threshold = eps * scale;
    let mut r = 0;
    while r < n.min(m) {
        let (mut pi, mut pj, mut best) = (r, r, 0.0);
        for i in r..n {
            for j in r..m {
                let v = a[(i, j)].abs();
                if v > best {
                    best = v;
                    pi = i;
                    pj = j;
                }
            }
        }
        if best <= threshold {
            break;
        }
        if pi != r {
            for j in 0..m {
                a.data.swap(pi * m + j, r * m + j);
            }
        }
        if pj != r {
            for i in 0..n {
                a.data.swap(i * m + pj, i * m + r);
            }
        }
        let pivot = a[(r, r)];
        for i in r + 1..n {
            let factor = a[(i, r)] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in r..m {
                let v = a[(r, j)];
                a[(i, j)] -= factor * v;
            }
        }
        r += 1;
    }
    r
}

/// Solves `a x = b` for square `a` by partial-pivot elimination.
///
/// Returns `None` when a pivot falls below `eps * max|a|`.
pub fn solve(a: &Matrix, b: &[f64], eps: f64) -> Option<Vec<f64>> {
    let n = a.rows;
    assert_eq!(n, a.cols);
    assert_eq!(b.len(), n);
    let threshold = eps * a.max_abs();
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[(i, c)].abs().total_cmp(&m[(j, c)].abs()))?;
        if m[(p, c)].abs() <= threshold || m[(p, c)] == 0.0 {
            return None;
        }
        if p != c {
            for j in 0..n {
                m.data.swap(p * n + j, c * n + j);
            }
            rhs.swap(p, c);
        }
        for i in c + 1..n {
            let f = m[(i, c)] / m[(c, c)];
            for j in c..n {
                let v = m[(c, j)];
                m[(i, j)] -= f * v;
            }
            rhs[i] -= f * rhs[c];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[(i, j)] * x[j]).sum();
        x[i] = (rhs[i] - s) / m[(i, i)];
    }
    Some(x)
}

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unit eigenvectors, `vectors[k]` belongs to `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi eigensolver.
///
/// Eigenvectors are sign-normalised so their first entry of significant
/// magnitude is positive, which makes downstream outputs reproducible.
pub fn symmetric_eigen(a: &Matrix) -> SymmetricEigen {
    let n = a.rows;
    assert_eq!(n, a.cols, "matrix must be square");
    let mut s = a.clone();
    // symmetrise against round-off in the caller
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    let mut v = Matrix::identity(n);
    let total = s.frobenius();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = s[(p, q)];
                let diag = s[(p, p)].abs() + s[(q, q)].abs();
                if apq.abs() <= 1e-18 * total || apq.abs() <= 1e-17 * diag {
                    continue;
                }
                rotated = true;
                let theta = (s[(q, q)] - s[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let skp = s[(k, p)];
                    let skq = s[(k, q)];
                    s[(k, p)] = c * skp - sn * skq;
                    s[(k, q)] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let spk = s[(p, k)];
                    let sqk = s[(q, k)];
                    s[(p, k)] = c * spk - sn * sqk;
                    s[(q, k)] = sn * spk + c * sqk;
                }
                s[(p, q)] = 0.0;
                s[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[(i, i)].total_cmp(&s[(j, j)]));
    let values = order.iter().map(|&i| s[(i, i)]).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            let mut col = v.column(k);
            canonical_sign(&mut col);
            col
        })
        .collect();
    SymmetricEigen { values, vectors }
}

/// Flips `v` so its first entry with magnitude above `1e-12 * max|v|` is positive.
pub fn canonical_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * scale) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Thin singular value decomposition `A V = U diag(sigma)` computed by
/// one-sided (Hestenes) Jacobi on the columns of `A`.
///
/// `v` is the full `p x p` orthogonal factor, so the columns of `v` whose
/// singular value is negligible span the kernel of `A`.
#[derive(Clone, Debug)]
pub struct Svd {
    /// `sigma[k]` in descending order, one per column of `A`.
    pub sigma: Vec<f64>,
    /// Left vectors, `u[k]` has length `rows(A)`; zero when `sigma[k] == 0`.
    pub u: Vec<Vec<f64>>,
    /// Right vectors, `v[k]` has length `cols(A)`.
    pub v: Vec<Vec<f64>>,
}

impl Svd {
    pub fn new(a: &Matrix) -> Svd {
        let (n, p) = (a.rows, a.cols);
        let mut w: Vec<Vec<f64>> = (0..p).map(|j| a.column(j)).collect();
        let mut v: Vec<Vec<f64>> = (0..p)
            .map(|j| {
                let mut e = vec![0.0; p];
                e[j] = 1.0;
                e
            })
            .collect();
        for _sweep in 0..80 {
            let mut rotated = false;
            for j in 0..p {
                for k in j + 1..p {
                    let alpha = dot(&w[j], &w[j]);
                    let beta = dot(&w[k], &w[k]);
                    let gamma = dot(&w[j], &w[k]);
                    if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    let (left, right) = w.split_at_mut(k);
                    rotate(&mut left[j], &mut right[0], c, s);
                    let (left, right) = v.split_at_mut(k);
                    rotate(&mut left[j], &mut right[0], c, s);
                }
            }
            if !rotated {
                break;
            }
        }
        let mut order: Vec<usize> = (0..p).collect();
        let norms: Vec<f64> = w.iter().map(|c| norm(c)).collect();
        order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
        let sigma: Vec<f64> = order.iter().map(|&k| norms[k]).collect();
        let u = order
            .iter()
            .map(|&k| {
                if norms[k] > 0.0 {
                    w[k].iter().map(|x| x / norms[k]).collect()
                } else {
                    vec![0.0; n]
                }
            })
            .collect();
        let v = order.iter().map(|&k| v[k].clone()).collect();
        Svd { sigma, u, v }
    }

    /// Singular values above `eps * sigma_max` count toward the rank.
    pub fn threshold(&self, eps: f64) -> f64 {
        eps * self.sigma.first().copied().unwrap_or(0.0)
    }

    pub fn rank(&self, eps: f64) -> usize {
        let t = self.threshold(eps);
        self.sigma.iter().filter(|&&s| s > t && s > 0.0).count()
    }
}

fn rotate(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xa, yb) = (*x, *y);
        *x = c * xa - s * yb;
        *y = s * xa + c * yb;
    }
}

/// Orthonormal basis of the orthogonal complement of `span(rows)` in `R^dim`.
pub fn orthogonal_complement<R: AsRef<[f64]>>(rows: &[R], dim: usize, eps: f64) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return (0..dim)
            .map(|j| {
                let mut e = vec![0.0; dim];
                e[j] = 1.0;
                e
            })
            .collect();
    }
    let a = Matrix::from_rows(rows);
    let svd = Svd::new(&a);
    let r = svd.rank(eps);
    svd.v[r..].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rank_of_small_matrices() {
        assert_eq!(rank(&[[1.0, 0.0], [0.0, 1.0]], 1e-9), 2);
        assert_eq!(rank(&[[1.0, 2.0], [2.0, 4.0]], 1e-9), 1);
        assert_eq!(rank(&[[0.0, 0.0]], 1e-9), 0);
        let empty: [[f64; 2]; 0] = [];
        assert_eq!(rank(&empty, 1e-9), 0);
        assert_eq!(rank(&[[1.0, 1.0, 1.0], [-1.0, 1.0, 1.0], [1.0, -1.0, 1.0]], 1e-9), 3);
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]);
        let e = symmetric_eigen(&a);
        assert_relative_eq!(e.values[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(e.values[1], 3.0, epsilon = 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(e.vectors[1][0], s, epsilon = 1e-14);
        assert_relative_eq!(e.vectors[1][1], s, epsilon = 1e-14);
        assert_relative_eq!(e.vectors[0][0], s, epsilon = 1e-14);
        assert_relative_eq!(e.vectors[0][1], -s, epsilon = 1e-14);
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let a = Matrix::from_rows(&[
            [4.0, -2.0, 0.5, 1.0],
            [-2.0, 3.0, 0.0, 0.25],
            [0.5, 0.0, -1.0, 2.0],
            [1.0, 0.25, 2.0, 0.0],
        ]);
        let e = symmetric_eigen(&a);
        for i in 0..4 {
            for j in 0..4 {
                let r: f64 = (0..4).map(|k| e.values[k] * e.vectors[k][i] * e.vectors[k][j]).sum();
                assert_relative_eq!(r, a[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn svd_kernel_and_reconstruction() {
        let a = Matrix::from_rows(&[[1.0, 2.0, 1.0], [1.0, -2.0, 1.0]]);
        let svd = Svd::new(&a);
        assert_eq!(svd.rank(1e-9), 2);
        let k = &svd.v[2];
        let ak = a.mul_vec(k);
        assert!(norm(&ak) < 1e-14);
        // kernel direction is diag(1, -1) in (a11, a12, a22) coordinates
        assert_relative_eq!(k[1].abs(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(k[0], -k[2], epsilon = 1e-14);
        for i in 0..2 {
            for j in 0..3 {
                let r: f64 = (0..3).map(|t| svd.u[t][i] * svd.sigma[t] * svd.v[t][j]).sum();
                assert_relative_eq!(r, a[(i, j)], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn complement_of_plane() {
        let basis = orthogonal_complement(&[[1.0, 1.0, 1.0], [-1.0, 1.0, 1.0]], 3, 1e-9);
        assert_eq!(basis.len(), 1);
        let b = &basis[0];
        assert_relative_eq!(b[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(b[1].abs(), b[2].abs(), epsilon = 1e-14);
        assert_relative_eq!(b[1], -b[2], epsilon = 1e-14);
    }

    #[test]
    fn solve_detects_singularity() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(solve(&a, &[1.0, 1.0], 1e-9).is_none());
        let b = Matrix::from_rows(&[[2.0, 1.0], [1.0, 3.0]]);
        let x = solve(&b, &[3.0, 5.0], 1e-9).unwrap();
        assert_relative_eq!(x[0], 0.8, epsilon = 1e-14);
        assert_relative_eq!(x[1], 1.4, epsilon = 1e-14);
    }
}
