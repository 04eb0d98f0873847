use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "Matrix::new",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "Matrix::from_rows",
                    expected: cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Column vector (n × 1).
    pub fn column(values: &[f64]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics, so empty-column matrices yield empty rows explicitly.
        let cols = self.cols;
        (0..self.rows).map(move |i| &self.data[i * cols..(i + 1) * cols])
    }

    /// Gathers the given rows into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self · v` for a vector `v` of length `cols`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "matvec",
                expected: self.cols,
                actual: v.len(),
            });
        }
        Ok(self.iter_rows().map(|row| dot_unchecked(row, v)).collect())
    }

    /// `selfᵀ · v` for a vector `v` of length `rows`.
    pub fn t_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "t_matvec",
                expected: self.rows,
                actual: v.len(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (row, &scale) in self.iter_rows().zip(v) {
            if scale == 0.0 {
                continue;
            }
            for (o, &r) in out.iter_mut().zip(row) {
                *o += scale * r;
            }
        }
        Ok(out)
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

/// Standard matrix product with f64 accumulation.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch {
            context: "matmul",
            expected: a.cols,
            actual: b.rows,
        });
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (o, &bkj) in out_row.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// Solves `a · x = b` for symmetric positive definite `a` by Cholesky factorization.
///
/// `b` may carry several right-hand sides as columns.
pub fn solve_spd(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = a.rows;
    if a.cols != n {
        return Err(Error::DimensionMismatch {
            context: "solve_spd (square)",
            expected: n,
            actual: a.cols,
        });
    }
    if b.rows != n {
        return Err(Error::DimensionMismatch {
            context: "solve_spd (rhs)",
            expected: n,
            actual: b.rows,
        });
    }

    // Lower-triangular factor L with a = L Lᵀ.
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::Singular {
                pivot: j,
                value: diag,
            });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }

    let mut x = b.clone();
    for c in 0..b.cols {
        // forward: L y = b
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

#[inline]
pub(crate) fn dot_unchecked(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn matmul_identity_left() {
        let a = m(&[&[1.5, -2.0, 3.0], &[0.25, 4.0, -1.0]]);
        assert_eq!(matmul(&Matrix::identity(2), &a).unwrap(), a);
    }

    #[test]
    fn matmul_hand_example() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[0.0], &[1.0]]);
        assert_eq!(matmul(&a, &b).unwrap(), m(&[&[2.0], &[4.0]]));
    }

    #[test]
    fn matmul_zero() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(matmul(&Matrix::zeros(3, 2), &a).unwrap(), Matrix::zeros(3, 2));
    }

    #[test]
    fn matmul_rejects_mismatch() {
        let err = matmul(&Matrix::zeros(2, 3), &Matrix::zeros(2, 2)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn solve_spd_examples() {
        let v = Matrix::column(&[1.0, -2.0, 0.5]);
        assert_eq!(solve_spd(&Matrix::identity(3), &v).unwrap(), v);

        let x = solve_spd(&m(&[&[4.0]]), &m(&[&[2.0]])).unwrap();
        assert_eq!(x[(0, 0)], 0.5);

        let x = solve_spd(&m(&[&[2.0, 1.0], &[1.0, 2.0]]), &Matrix::column(&[1.0, 1.0])).unwrap();
        assert!((x[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);
        assert!((x[(1, 0)] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn solve_spd_rejects_indefinite() {
        let a = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let err = solve_spd(&a, &Matrix::column(&[1.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::Singular { pivot: 1, .. }));
    }

    #[test]
    fn transpose_and_select() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        assert_eq!(a.transpose(), m(&[&[1.0, 3.0, 5.0], &[2.0, 4.0, 6.0]]));
        assert_eq!(a.select_rows(&[2, 0]), m(&[&[5.0, 6.0], &[1.0, 2.0]]));
        assert_eq!(a.t_matvec(&[1.0, 0.0, 1.0]).unwrap(), vec![6.0, 8.0]);
    }
}
