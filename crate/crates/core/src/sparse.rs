//! Compressed sparse column storage and the handful of kernels the
//! estimation pipeline needs: construction, transpose, sparse products,
//! matrix-vector products, and row selection.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Sparse matrix in compressed sparse column (CSC) form.
///
/// Invariants: `col_ptr` is nondecreasing with `col_ptr[0] == 0` and
/// `col_ptr[ncols] == nnz`; row indices are strictly increasing within each
/// column; no explicitly stored zeros after canonicalization.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Build a canonical CSC matrix from (row, col, value) triplets.
    /// Duplicate entries are summed; entries that are exactly zero after
    /// summation are pruned.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        entries: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, _) in entries {
            if r >= nrows {
                return Err(Error::IndexOutOfRange {
                    what: "row",
                    got: r,
                    bound: nrows,
                });
            }
            if c >= ncols {
                return Err(Error::IndexOutOfRange {
                    what: "col",
                    got: c,
                    bound: ncols,
                });
            }
        }
        // Counting sort by column, then sort rows and merge duplicates per column.
        let mut counts = vec![0usize; ncols + 1];
        for &(_, c, _) in entries {
            counts[c + 1] += 1;
        }
        for c in 0..ncols {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut rows = vec![0usize; entries.len()];
        let mut vals = vec![0.0f64; entries.len()];
        for &(r, c, v) in entries {
            let p = next[c];
            rows[p] = r;
            vals[p] = v;
            next[c] += 1;
        }

        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        col_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for c in 0..ncols {
            scratch.clear();
            for p in counts[c]..counts[c + 1] {
                scratch.push((rows[p], vals[p]));
            }
            scratch.sort_unstable_by_key(|&(r, _)| r);
            let mut i = 0;
            while i < scratch.len() {
                let r = scratch[i].0;
                let mut sum = 0.0;
                while i < scratch.len() && scratch[i].0 == r {
                    sum += scratch[i].1;
                    i += 1;
                }
                if sum != 0.0 {
                    row_idx.push(r);
                    values.push(sum);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Identity matrix of size n.
    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// The matrix `I - rho * W`, merged column by column in O(nnz).
    pub fn identity_minus_scaled(w: &SparseMatrix, rho: f64) -> Result<Self> {
        if w.nrows != w.ncols {
            return Err(Error::DimensionMismatch {
                context: "identity_minus_scaled requires a square matrix",
                expected: w.nrows,
                got: w.ncols,
            });
        }
        let n = w.nrows;
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::with_capacity(w.nnz() + n);
        let mut values = Vec::with_capacity(w.nnz() + n);
        col_ptr.push(0);
        for j in 0..n {
            let mut wrote_diag = false;
            for p in w.col_ptr[j]..w.col_ptr[j + 1] {
                let i = w.row_idx[p];
                let v = -rho * w.values[p];
                if i == j {
                    let d = 1.0 + v;
                    if d != 0.0 {
                        row_idx.push(i);
                        values.push(d);
                    }
                    wrote_diag = true;
                } else {
                    if i > j && !wrote_diag {
                        row_idx.push(j);
                        values.push(1.0);
                        wrote_diag = true;
                    }
                    if v != 0.0 {
                        row_idx.push(i);
                        values.push(v);
                    }
                }
            }
            if !wrote_diag {
                row_idx.push(j);
                values.push(1.0);
            }
            // entries were emitted in increasing row order except when the
            // diagonal lands after trailing sub-diagonal rows of W
            let start = col_ptr[j];
            if !row_idx[start..].windows(2).all(|w| w[0] < w[1]) {
                let mut pairs: Vec<(usize, f64)> = row_idx[start..]
                    .iter()
                    .copied()
                    .zip(values[start..].iter().copied())
                    .collect();
                pairs.sort_unstable_by_key(|&(r, _)| r);
                for (k, (r, v)) in pairs.into_iter().enumerate() {
                    row_idx[start + k] = r;
                    values[start + k] = v;
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self {
            nrows: n,
            ncols: n,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entries of column j as (row, value) pairs, rows strictly increasing.
    pub fn col_iter(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Value at (i, j), zero if not stored. Binary search within the column.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        match self.row_idx[range.clone()].binary_search(&i) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    /// Re-canonicalize: sort rows within columns, merge duplicates, prune zeros.
    /// Idempotent on already-canonical input.
    pub fn canonicalize(self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz());
        for j in 0..self.ncols {
            for (i, v) in self.col_iter(j) {
                triplets.push((i, j, v));
            }
        }
        Self::from_triplets(self.nrows, self.ncols, &triplets)
            .expect("indices already validated")
    }

    /// Transpose via counting sort on row indices.
    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.nrows + 1];
        for &r in &self.row_idx {
            counts[r + 1] += 1;
        }
        for r in 0..self.nrows {
            counts[r + 1] += counts[r];
        }
        let mut next = counts.clone();
        let mut row_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0f64; self.nnz()];
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let r = self.row_idx[p];
                let q = next[r];
                row_idx[q] = j;
                values[q] = self.values[p];
                next[r] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            col_ptr: counts,
            row_idx,
            values,
        }
    }

    /// Sparse product `self * other` (Gustavson scatter/gather, column-wise).
    pub fn spgemm(&self, other: &SparseMatrix) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch {
                context: "spgemm inner dimensions",
                expected: self.ncols,
                got: other.nrows,
            });
        }
        let m = self.nrows;
        let n = other.ncols;
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx: Vec<usize> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        col_ptr.push(0);
        let mut accum = vec![0.0f64; m];
        let mut marked = vec![false; m];
        let mut pattern: Vec<usize> = Vec::with_capacity(m);
        for j in 0..n {
            pattern.clear();
            for (k, bv) in other.col_iter(j) {
                for p in self.col_ptr[k]..self.col_ptr[k + 1] {
                    let i = self.row_idx[p];
                    if !marked[i] {
                        marked[i] = true;
                        pattern.push(i);
                    }
                    accum[i] += self.values[p] * bv;
                }
            }
            pattern.sort_unstable();
            for &i in &pattern {
                if accum[i] != 0.0 {
                    row_idx.push(i);
                    values.push(accum[i]);
                }
                accum[i] = 0.0;
                marked[i] = false;
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self {
            nrows: m,
            ncols: n,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Matrix-vector product `self * x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                context: "spmv vector length",
                expected: self.ncols,
                got: x.len(),
            });
        }
        let mut y = vec![0.0f64; self.nrows];
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[p]] += self.values[p] * xj;
            }
        }
        Ok(y)
    }

    /// Sparse-times-dense product `self * b`, column by column.
    pub fn mul_dense(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if b.nrows() != self.ncols {
            return Err(Error::DimensionMismatch {
                context: "mul_dense inner dimensions",
                expected: self.ncols,
                got: b.nrows(),
            });
        }
        let mut out = DenseMatrix::zeros(self.nrows, b.ncols());
        for j in 0..b.ncols() {
            let col = self.spmv(b.col(j))?;
            out.col_mut(j).copy_from_slice(&col);
        }
        Ok(out)
    }

    /// Rows of `self` at `idx` (strictly increasing), order preserved.
    /// Equals `B * self` for the selection matrix `B` built from `idx`.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        validate_selection(idx, self.nrows)?;
        // map original row -> new row, usize::MAX for dropped rows
        let mut map = vec![usize::MAX; self.nrows];
        for (new, &old) in idx.iter().enumerate() {
            map[old] = new;
        }
        let mut col_ptr = Vec::with_capacity(self.ncols + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for j in 0..self.ncols {
            for (i, v) in self.col_iter(j) {
                if map[i] != usize::MAX {
                    row_idx.push(map[i]);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self {
            nrows: idx.len(),
            ncols: self.ncols,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Columns of `self` at `idx` (strictly increasing).
    pub fn select_cols(&self, idx: &[usize]) -> Result<Self> {
        validate_selection(idx, self.ncols)?;
        let mut col_ptr = Vec::with_capacity(idx.len() + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for &j in idx {
            for (i, v) in self.col_iter(j) {
                row_idx.push(i);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: idx.len(),
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Symmetric permutation `P S P'` where `perm[new] = old`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> Result<Self> {
        if self.nrows != self.ncols {
            return Err(Error::DimensionMismatch {
                context: "permute_symmetric requires square matrix",
                expected: self.nrows,
                got: self.ncols,
            });
        }
        if perm.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                context: "permutation length",
                expected: self.nrows,
                got: perm.len(),
            });
        }
        let n = self.nrows;
        let mut inv = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || inv[old] != usize::MAX {
                return Err(Error::InvalidInput(
                    "perm is not a permutation".to_string(),
                ));
            }
            inv[old] = new;
        }
        let mut triplets = Vec::with_capacity(self.nnz());
        for j in 0..n {
            for (i, v) in self.col_iter(j) {
                triplets.push((inv[i], inv[j], v));
            }
        }
        Self::from_triplets(n, n, &triplets)
    }

    /// Dense copy, mainly for small-scale test oracles.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for j in 0..self.ncols {
            for (i, v) in self.col_iter(j) {
                d.set(i, j, v);
            }
        }
        d
    }

    /// Maximum absolute entry, 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn validate_selection(idx: &[usize], bound: usize) -> Result<()> {
    for (k, &i) in idx.iter().enumerate() {
        if i >= bound {
            return Err(Error::IndexOutOfRange {
                what: "selection index",
                got: i,
                bound,
            });
        }
        if k > 0 && idx[k - 1] >= i {
            return Err(Error::InvalidInput(
                "selection indices must be strictly increasing".to_string(),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_sparse(rng: &mut StdRng, nrows: usize, ncols: usize, density: f64) -> SparseMatrix {
        let mut triplets = Vec::new();
        for i in 0..nrows {
            for j in 0..ncols {
                if rng.random::<f64>() < density {
                    triplets.push((i, j, rng.random_range(-1.0..1.0)));
                }
            }
        }
        SparseMatrix::from_triplets(nrows, ncols, &triplets).unwrap()
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let m = SparseMatrix::from_triplets(1, 1, &[(0, 0, 1.0), (0, 0, 1.0)]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), 2.0);
    }

    #[test]
    fn empty_triplets_give_zero_matrix() {
        let m = SparseMatrix::from_triplets(3, 3, &[]).unwrap();
        assert_eq!(m.nnz(), 0);
        assert_eq!(m.col_ptr(), &[0, 0, 0, 0]);
    }

    #[test]
    fn identity_from_triplets() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert_eq!(m.col_ptr(), &[0, 1, 2]);
        assert_eq!(m.values(), &[1.0, 1.0]);
    }

    #[test]
    fn triplet_index_out_of_range_is_rejected() {
        assert!(SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
        assert!(SparseMatrix::from_triplets(2, 2, &[(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn exact_zero_sums_are_pruned() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, -1.0), (1, 0, 2.0)]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(1, 0), 2.0);
    }

    #[test]
    fn transpose_identity_and_rectangular() {
        let id = SparseMatrix::identity(4);
        assert_eq!(id.transpose(), id);

        let m = SparseMatrix::from_triplets(2, 3, &[(0, 2, 5.0)]).unwrap();
        let t = m.transpose();
        assert_eq!(t.nrows(), 3);
        assert_eq!(t.ncols(), 2);
        assert_eq!(t.get(2, 0), 5.0);
    }

    #[test]
    fn transpose_matches_dense_oracle() {
        let mut rng = StdRng::seed_from_u64(7);
        let m = random_sparse(&mut rng, 10, 10, 0.3);
        let t = m.transpose();
        let md = m.to_dense();
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(t.get(j, i), md.get(i, j));
            }
        }
        assert_eq!(t.transpose(), m);
    }

    #[test]
    fn spgemm_identity() {
        let id = SparseMatrix::identity(3);
        let p = id.spgemm(&id).unwrap();
        assert_eq!(p, id);
    }

    #[test]
    fn spgemm_hand_example() {
        // A = I - 0.5 W with W the 2-cycle; A'A = [[1.25, -1], [-1, 1.25]]
        let w = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let a = SparseMatrix::identity_minus_scaled(&w, 0.5).unwrap();
        let ata = a.transpose().spgemm(&a).unwrap();
        assert!((ata.get(0, 0) - 1.25).abs() < 1e-15);
        assert!((ata.get(1, 1) - 1.25).abs() < 1e-15);
        assert!((ata.get(0, 1) + 1.0).abs() < 1e-15);
        assert!((ata.get(1, 0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn spgemm_matches_dense_oracle() {
        let mut rng = StdRng::seed_from_u64(11);
        let a = random_sparse(&mut rng, 20, 20, 0.2);
        let b = random_sparse(&mut rng, 20, 20, 0.2);
        let c = a.spgemm(&b).unwrap();
        let oracle = a.to_dense().matmul(&b.to_dense()).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                assert!((c.get(i, j) - oracle.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spgemm_ata_is_symmetric() {
        let mut rng = StdRng::seed_from_u64(13);
        let a = random_sparse(&mut rng, 25, 25, 0.15);
        let s = a.transpose().spgemm(&a).unwrap();
        let scale = s.max_abs().max(1.0);
        for i in 0..25 {
            for j in 0..25 {
                assert!((s.get(i, j) - s.get(j, i)).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn spgemm_dimension_mismatch() {
        let a = SparseMatrix::identity(3);
        let b = SparseMatrix::identity(4);
        assert!(a.spgemm(&b).is_err());
    }

    #[test]
    fn spmv_identity_zero_and_oracle() {
        let id = SparseMatrix::identity(3);
        let x = vec![1.0, -2.0, 3.0];
        assert_eq!(id.spmv(&x).unwrap(), x);

        let z = SparseMatrix::from_triplets(3, 3, &[]).unwrap();
        assert_eq!(z.spmv(&x).unwrap(), vec![0.0; 3]);

        let mut rng = StdRng::seed_from_u64(17);
        let m = random_sparse(&mut rng, 15, 15, 0.3);
        let x: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = m.spmv(&x).unwrap();
        let md = m.to_dense();
        for i in 0..15 {
            let mut expect = 0.0;
            for j in 0..15 {
                expect += md.get(i, j) * x[j];
            }
            assert!((y[i] - expect).abs() < 1e-14 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn select_rows_cases() {
        let id = SparseMatrix::identity(3);
        let all = id.select_rows(&[0, 1, 2]).unwrap();
        assert_eq!(all, id);

        let none = id.select_rows(&[]).unwrap();
        assert_eq!(none.nrows(), 0);
        assert_eq!(none.nnz(), 0);

        let some = id.select_rows(&[0, 2]).unwrap();
        assert_eq!(some.nrows(), 2);
        assert_eq!(some.get(0, 0), 1.0);
        assert_eq!(some.get(1, 2), 1.0);
        assert_eq!(some.nnz(), 2);

        assert!(id.select_rows(&[2, 0]).is_err());
        assert!(id.select_rows(&[0, 3]).is_err());
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let mut rng = StdRng::seed_from_u64(23);
        let m = random_sparse(&mut rng, 12, 12, 0.25);
        let once = m.clone().canonicalize();
        let twice = once.clone().canonicalize();
        assert_eq!(once, twice);
        assert_eq!(once, m);
    }

    #[test]
    fn identity_minus_scaled_matches_triplet_build() {
        let mut rng = StdRng::seed_from_u64(29);
        // W nonneg with zero diagonal, like a weight matrix
        let mut triplets = Vec::new();
        for i in 0..12 {
            for j in 0..12 {
                if i != j && rng.random::<f64>() < 0.2 {
                    triplets.push((i, j, rng.random_range(0.1..1.0)));
                }
            }
        }
        let w = SparseMatrix::from_triplets(12, 12, &triplets).unwrap();
        let rho = 0.63;
        let fast = SparseMatrix::identity_minus_scaled(&w, rho).unwrap();
        let mut ref_triplets: Vec<(usize, usize, f64)> =
            (0..12).map(|i| (i, i, 1.0)).collect();
        for (i, j, v) in &triplets {
            ref_triplets.push((*i, *j, -rho * v));
        }
        let slow = SparseMatrix::from_triplets(12, 12, &ref_triplets).unwrap();
        assert_eq!(fast, slow);
    }

    #[test]
    fn permute_symmetric_matches_dense() {
        let mut rng = StdRng::seed_from_u64(31);
        let a = random_sparse(&mut rng, 8, 8, 0.3);
        let s = a.transpose().spgemm(&a).unwrap();
        let perm = vec![3, 1, 7, 0, 5, 2, 6, 4];
        let p = s.permute_symmetric(&perm).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(p.get(i, j), s.get(perm[i], perm[j]));
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_triplets(n: usize) -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
            proptest::collection::vec(
                (0..n, 0..n, -1.0f64..1.0),
                0..4 * n,
            )
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn canonicalize_idempotent_and_transpose_involutive(t in arb_triplets(12)) {
                let m = SparseMatrix::from_triplets(12, 12, &t).unwrap();
                let once = m.clone().canonicalize();
                prop_assert_eq!(&once, &m);
                prop_assert_eq!(m.transpose().transpose(), m);
            }

            #[test]
            fn products_match_dense_oracle(
                ta in arb_triplets(10),
                tb in arb_triplets(10),
                x in proptest::collection::vec(-1.0f64..1.0, 10),
            ) {
                let a = SparseMatrix::from_triplets(10, 10, &ta).unwrap();
                let b = SparseMatrix::from_triplets(10, 10, &tb).unwrap();
                let c = a.spgemm(&b).unwrap();
                let (ad, bd) = (a.to_dense(), b.to_dense());
                let cd = ad.matmul(&bd).unwrap();
                for i in 0..10 {
                    for j in 0..10 {
                        prop_assert!((c.get(i, j) - cd.get(i, j)).abs() < 1e-12);
                    }
                }
                let y = a.spmv(&x).unwrap();
                let yd = ad.mul_vec(&x).unwrap();
                for i in 0..10 {
                    prop_assert!((y[i] - yd[i]).abs() < 1e-12);
                }
            }

            #[test]
            fn gram_product_is_symmetric(t in arb_triplets(14)) {
                let a = SparseMatrix::from_triplets(14, 14, &t).unwrap();
                let s = a.transpose().spgemm(&a).unwrap();
                let scale = s.max_abs();
                for i in 0..14 {
                    for j in 0..14 {
                        prop_assert!((s.get(i, j) - s.get(j, i)).abs() <= 1e-12 * scale.max(1.0));
                    }
                }
            }
        }
    }
}
