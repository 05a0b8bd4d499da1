//! Column-major dense matrices: design matrices, Gram blocks, the dense
//! covariance sub-block of the direct likelihood path, and a plain SPD
//! Cholesky for them.

use crate::error::{Error, Result};
use crate::sparse::validate_selection;

/// Dense matrix, column-major storage (columns contiguous).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            values: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_col_major(nrows: usize, ncols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != nrows * ncols {
            return Err(Error::DimensionMismatch {
                context: "column-major buffer length",
                expected: nrows * ncols,
                got: values.len(),
            });
        }
        Ok(Self {
            nrows,
            ncols,
            values,
        })
    }

    /// Build from row slices (each of length ncols).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut m = Self::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch {
                    context: "ragged row in dense construction",
                    expected: ncols,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    /// Single-column matrix wrapping a vector.
    pub fn from_vec(v: Vec<f64>) -> Self {
        Self {
            nrows: v.len(),
            ncols: 1,
            values: v,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.values[j * self.nrows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.values[j * self.nrows + i] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.values[j * self.nrows..(j + 1) * self.nrows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.ncols, self.nrows);
        for j in 0..self.ncols {
            for i in 0..self.nrows {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch {
                context: "matmul inner dimensions",
                expected: self.ncols,
                got: other.nrows,
            });
        }
        let mut out = Self::zeros(self.nrows, other.ncols);
        for j in 0..other.ncols {
            let bcol = other.col(j);
            let ocol = out.col_mut(j);
            for (k, &bkj) in bcol.iter().enumerate() {
                if bkj == 0.0 {
                    continue;
                }
                let acol = self.col(k);
                for i in 0..acol.len() {
                    ocol[i] += acol[i] * bkj;
                }
            }
        }
        Ok(out)
    }

    /// `self' * other`, computed column-dot-column (no explicit transpose).
    pub fn transpose_matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.nrows != other.nrows {
            return Err(Error::DimensionMismatch {
                context: "transpose_matmul row dimensions",
                expected: self.nrows,
                got: other.nrows,
            });
        }
        let mut out = Self::zeros(self.ncols, other.ncols);
        for j in 0..other.ncols {
            let bcol = other.col(j);
            for i in 0..self.ncols {
                let acol = self.col(i);
                let mut s = 0.0;
                for k in 0..acol.len() {
                    s += acol[k] * bcol[k];
                }
                out.set(i, j, s);
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                context: "mul_vec length",
                expected: self.ncols,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.nrows];
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let col = self.col(j);
            for i in 0..self.nrows {
                y[i] += col[i] * xj;
            }
        }
        Ok(y)
    }

    /// Rows at `idx` (strictly increasing), order preserved.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        validate_selection(idx, self.nrows)?;
        let mut out = Self::zeros(idx.len(), self.ncols);
        for j in 0..self.ncols {
            let src = self.col(j);
            let dst = out.col_mut(j);
            for (new, &old) in idx.iter().enumerate() {
                dst[new] = src[old];
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// In-place scaled add: `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &DenseMatrix) -> Result<()> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch {
                context: "axpy shapes",
                expected: self.nrows * self.ncols,
                got: other.nrows * other.ncols,
            });
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }
}

/// Dense SPD Cholesky factor (lower triangular, column-major, in place).
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    n: usize,
    l: Vec<f64>,
}

impl DenseCholesky {
    /// Left-looking factorization of a symmetric positive definite matrix.
    /// Reads only the lower triangle of `a`.
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                context: "cholesky requires square matrix",
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        let n = a.nrows();
        let mut l = a.as_slice().to_vec();
        let mut max_diag = 0.0f64;
        for i in 0..n {
            max_diag = max_diag.max(l[i * n + i].abs());
        }
        let tol = 1e-13 * max_diag.max(1.0);
        for j in 0..n {
            // split at column j so we can read earlier columns while writing col j
            let (done, rest) = l.split_at_mut(j * n);
            let colj = &mut rest[..n];
            for k in 0..j {
                let ljk = done[k * n + j];
                if ljk == 0.0 {
                    continue;
                }
                let colk = &done[k * n..k * n + n];
                for i in j..n {
                    colj[i] -= ljk * colk[i];
                }
            }
            let d = colj[j];
            if !(d > tol) {
                return Err(Error::NotPositiveDefinite { index: j, pivot: d });
            }
            let s = d.sqrt();
            colj[j] = s;
            let inv = 1.0 / s;
            for i in (j + 1)..n {
                colj[i] *= inv;
            }
            // zero strict upper part of the stored column
            for i in 0..j {
                colj[i] = 0.0;
            }
        }
        Ok(Self { n, l })
    }

    pub fn logdet(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            s += self.l[i * self.n + i].ln();
        }
        2.0 * s
    }

    /// Solve `A x = b` in place (forward then backward substitution).
    pub fn solve_vec_in_place(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "dense solve length",
                expected: self.n,
                got: x.len(),
            });
        }
        let n = self.n;
        for j in 0..n {
            let xj = x[j] / self.l[j * n + j];
            x[j] = xj;
            if xj != 0.0 {
                let col = &self.l[j * n..(j + 1) * n];
                for i in (j + 1)..n {
                    x[i] -= col[i] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            let col = &self.l[j * n..(j + 1) * n];
            let mut s = x[j];
            for i in (j + 1)..n {
                s -= col[i] * x[i];
            }
            x[j] = s / col[j];
        }
        Ok(())
    }

    pub fn solve_mat(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if b.nrows() != self.n {
            return Err(Error::DimensionMismatch {
                context: "dense solve rows",
                expected: self.n,
                got: b.nrows(),
            });
        }
        let mut out = b.clone();
        for j in 0..out.ncols() {
            self.solve_vec_in_place(out.col_mut(j))?;
        }
        Ok(out)
    }

    /// Inverse via n unit solves; for small matrices (covariance blocks).
    pub fn inverse(&self) -> Result<DenseMatrix> {
        self.solve_mat(&DenseMatrix::identity(self.n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_spd(rng: &mut StdRng, n: usize) -> DenseMatrix {
        let mut b = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                b.set(i, j, rng.random_range(-1.0..1.0));
            }
        }
        let mut s = b.transpose_matmul(&b).unwrap();
        for i in 0..n {
            s.set(i, i, s.get(i, i) + n as f64 * 0.1);
        }
        s
    }

    #[test]
    fn cholesky_hand_example() {
        // [[4,2],[2,3]] -> L = [[2,0],[1,sqrt(2)]], logdet = log 8
        let a = DenseMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let f = DenseCholesky::factor(&a).unwrap();
        assert!((f.logdet() - 8.0f64.ln()).abs() < 1e-14);
        let mut x = vec![1.0, 0.0];
        f.solve_vec_in_place(&mut x).unwrap();
        assert!((x[0] - 0.375).abs() < 1e-14);
        assert!((x[1] + 0.25).abs() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        match DenseCholesky::factor(&a) {
            Err(Error::NotPositiveDefinite { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn solve_matches_nalgebra() {
        let mut rng = StdRng::seed_from_u64(3);
        let n = 30;
        let s = random_spd(&mut rng, n);
        let f = DenseCholesky::factor(&s).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut x = b.clone();
        f.solve_vec_in_place(&mut x).unwrap();

        let sn = nalgebra::DMatrix::from_fn(n, n, |i, j| s.get(i, j));
        let bn = nalgebra::DVector::from_column_slice(&b);
        let xn = sn.clone().cholesky().unwrap().solve(&bn);
        for i in 0..n {
            assert!((x[i] - xn[i]).abs() < 1e-9);
        }
        let ld = sn.cholesky().unwrap().determinant().ln();
        assert!((f.logdet() - ld).abs() < 1e-9 * ld.abs().max(1.0));
    }

    #[test]
    fn matmul_and_gram_match_nalgebra() {
        let mut rng = StdRng::seed_from_u64(5);
        let a = DenseMatrix::from_rows(
            &(0..7)
                .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let b = DenseMatrix::from_rows(
            &(0..4)
                .map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let c = a.matmul(&b).unwrap();
        let an = nalgebra::DMatrix::from_fn(7, 4, |i, j| a.get(i, j));
        let bn = nalgebra::DMatrix::from_fn(4, 5, |i, j| b.get(i, j));
        let cn = &an * &bn;
        for i in 0..7 {
            for j in 0..5 {
                assert!((c.get(i, j) - cn[(i, j)]).abs() < 1e-13);
            }
        }
        let g = a.transpose_matmul(&a).unwrap();
        let gn = an.transpose() * &an;
        for i in 0..4 {
            for j in 0..4 {
                assert!((g.get(i, j) - gn[(i, j)]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn select_rows_dense() {
        let m = DenseMatrix::from_rows(&[
            vec![1.0, 2.0],
            vec![3.0, 4.0],
            vec![5.0, 6.0],
        ])
        .unwrap();
        let s = m.select_rows(&[0, 2]).unwrap();
        assert_eq!(s.get(0, 1), 2.0);
        assert_eq!(s.get(1, 0), 5.0);
        assert!(m.select_rows(&[1, 1]).is_err());
    }
}
