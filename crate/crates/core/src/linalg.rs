//! Dense row-major matrices and a symmetric eigensolver.
//!
//! ## Purpose
//! Just enough linear algebra for the rest of the crate: matrix storage,
//! products, and a deterministic symmetric eigendecomposition used by the
//! principal-component scaling and by classical MDS.
//!
//! ## Design notes
//! The eigensolver is the classic two-stage route: Householder reduction to
//! tridiagonal form followed by implicit-shift QL iteration, with the
//! orthogonal transformations accumulated along the way. It is O(n^3) with a
//! small constant, which matters because MDS decomposes n x n matrices with
//! n in the hundreds. Output order and eigenvector signs are pinned so that
//! equal inputs give bit-identical results everywhere:
//! - eigenvalues sorted non-increasing;
//! - in each eigenvector the entry of largest absolute value is made
//!   positive, ties broken by lowest index.

use crate::error::{Error, Result};

/// Maximum QL iterations per eigenvalue before giving up.
const MAX_QL_ITERATIONS: usize = 50;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build a matrix by evaluating `f(i, j)` at every position.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Build from nested rows; panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
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

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// The underlying row-major slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Split into disjoint row chunks for parallel fills. Each chunk is
    /// `chunk_rows` full rows (the last may be shorter).
    pub fn par_row_chunks_mut(&mut self, chunk_rows: usize) -> Vec<(usize, &mut [f64])> {
        let cols = self.cols;
        self.data
            .chunks_mut(chunk_rows * cols)
            .enumerate()
            .map(|(k, chunk)| (k * chunk_rows, chunk))
            .collect()
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in matmul");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = out.row_mut(i);
                for j in 0..other.cols {
                    dst[j] += a * src[j];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Largest absolute entry (0 for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigendecomposition of a symmetric matrix: `values[k]` belongs to column
/// `k` of `vectors`, values sorted non-increasing.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Symmetric eigendecomposition via Householder tridiagonalization and
/// implicit-shift QL iteration.
///
/// The input must be square and symmetric; only its lower triangle is
/// actually read. Errors with [`Error::NoConvergence`] if any eigenvalue
/// fails to settle within the iteration budget (essentially unreachable for
/// real symmetric input).
pub fn sym_eig(s: &Matrix) -> Result<SymEig> {
    assert!(s.is_square(), "sym_eig needs a square matrix");
    let n = s.rows();
    if n == 0 {
        return Ok(SymEig {
            values: Vec::new(),
            vectors: Matrix::zeros(0, 0),
        });
    }
    let mut v = s.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    ql_implicit(&mut v, &mut d, &mut e)?;
    sort_descending(&mut v, &mut d);
    fix_signs(&mut v);
    Ok(SymEig {
        values: d,
        vectors: v,
    })
}

/// Householder reduction of `v` to tridiagonal form, accumulating the
/// orthogonal transformation back into `v`. On exit `d` holds the diagonal
/// and `e[1..]` the subdiagonal.
fn tridiagonalize(v: &mut Matrix, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        // Scale to avoid under/overflow, then build the Householder vector.
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }

            // Apply the similarity transformation to the remaining block.
            for j in 0..i {
                let f = d[j];
                v[(j, i)] = f;
                let mut g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate the transformations.
    for i in 0..(n - 1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for (k, item) in d.iter_mut().enumerate().take(i + 1) {
                *item = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for (k, item) in d.iter().enumerate().take(i + 1) {
                    v[(k, j)] -= g * item;
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL iteration on the tridiagonal (d, e), rotations
/// accumulated into `v`.
fn ql_implicit(v: &mut Matrix, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON / 2.0; // 2^-53

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());

        // Find a small subdiagonal element.
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::NoConvergence);
                }

                // Compute the implicit shift.
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                // QL sweep.
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    let r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    for k in 0..n {
                        let h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Selection-sort eigenvalues into non-increasing order, swapping the
/// corresponding eigenvector columns along.
fn sort_descending(v: &mut Matrix, d: &mut [f64]) {
    let n = d.len();
    for i in 0..n {
        let mut k = i;
        for j in (i + 1)..n {
            if d[j] > d[k] {
                k = j;
            }
        }
        if k != i {
            d.swap(i, k);
            for r in 0..v.rows() {
                let tmp = v[(r, i)];
                v[(r, i)] = v[(r, k)];
                v[(r, k)] = tmp;
            }
        }
    }
}

/// Make the entry of largest absolute value in each column positive, ties
/// broken by lowest row index.
fn fix_signs(v: &mut Matrix) {
    for j in 0..v.cols() {
        let mut best = 0;
        let mut best_abs = 0.0;
        for i in 0..v.rows() {
            let a = v[(i, j)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if v[(best, j)] < 0.0 {
            for i in 0..v.rows() {
                v[(i, j)] = -v[(i, j)];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn reconstruction_error(s: &Matrix, eig: &SymEig) -> f64 {
        let n = s.rows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += eig.vectors[(i, k)] * eig.values[k] * eig.vectors[(j, k)];
                }
                worst = worst.max((acc - s[(i, j)]).abs());
            }
        }
        worst
    }

    fn orthonormality_error(eig: &SymEig) -> f64 {
        let n = eig.vectors.rows();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let mut dot = 0.0;
                for i in 0..n {
                    dot += eig.vectors[(i, a)] * eig.vectors[(i, b)];
                }
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    #[test]
    fn two_by_two_known_eigenpairs() {
        let s = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let eig = sym_eig(&s).unwrap();
        assert!((eig.values[0] - 3.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((eig.vectors[(0, 0)] - inv_sqrt2).abs() < 1e-14);
        assert!((eig.vectors[(1, 0)] - inv_sqrt2).abs() < 1e-14);
        // Tie in magnitudes: lowest index becomes positive.
        assert!((eig.vectors[(0, 1)] - inv_sqrt2).abs() < 1e-14);
        assert!((eig.vectors[(1, 1)] + inv_sqrt2).abs() < 1e-14);
    }

    #[test]
    fn four_by_four_matches_reference_eigenvalues() {
        let s = Matrix::from_rows(&[
            vec![4.0, 1.0, -2.0, 2.0],
            vec![1.0, 2.0, 0.0, 1.0],
            vec![-2.0, 0.0, 3.0, -2.0],
            vec![2.0, 1.0, -2.0, -1.0],
        ]);
        let eig = sym_eig(&s).unwrap();
        let expected = [
            6.84462110723497,
            2.26853140643124,
            1.08436446377322,
            -2.19751697743943,
        ];
        for (got, want) in eig.values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-10, "got {got}, want {want}");
        }
        assert!(reconstruction_error(&s, &eig) < 1e-12);
        assert!(orthonormality_error(&eig) < 1e-13);
    }

    #[test]
    fn diagonal_matrix_is_its_own_decomposition() {
        let s = Matrix::from_fn(3, 3, |i, j| if i == j { [5.0, -1.0, 2.0][i] } else { 0.0 });
        let eig = sym_eig(&s).unwrap();
        assert_eq!(eig.values, vec![5.0, 2.0, -1.0]);
        for (k, col) in [0usize, 2, 1].iter().enumerate() {
            assert_eq!(eig.vectors[(*col, k)], 1.0);
        }
    }

    #[test]
    fn identity_stays_identity() {
        let eig = sym_eig(&Matrix::identity(4)).unwrap();
        assert_eq!(eig.values, vec![1.0; 4]);
        assert_eq!(eig.vectors, Matrix::identity(4));
    }

    #[test]
    fn random_symmetric_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [2usize, 5, 17, 40] {
            let mut s = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v = rng.random_range(-3.0..3.0);
                    s[(i, j)] = v;
                    s[(j, i)] = v;
                }
            }
            let eig = sym_eig(&s).unwrap();
            let scale = s.max_abs();
            assert!(reconstruction_error(&s, &eig) <= 1e-12 * scale.max(1.0));
            assert!(orthonormality_error(&eig) <= 1e-12);
            for k in 1..n {
                assert!(eig.values[k - 1] >= eig.values[k]);
            }
        }
    }

    #[test]
    fn matmul_and_transpose() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let b = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let ab = a.matmul(&b);
        assert_eq!(ab, Matrix::from_rows(&[vec![2.0, 1.0], vec![4.0, 3.0]]));
        assert_eq!(a.transpose()[(0, 1)], 3.0);
    }
}
