//! Sparse SPD Cholesky: fill-reducing orderings, cached symbolic analysis,
//! up-looking numeric factorization, triangular solves, log-determinant,
//! and rank-1 updates that turn a factor of A'A into a factor of
//! A'A + theta * B'B without refactorizing.
//!
//! The symbolic analysis is computed once per (structure, permutation) pair
//! and reused across numeric factorizations whose values change but whose
//! pattern does not (or shrinks, e.g. different autocorrelation values).

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

const NONE: usize = usize::MAX;

/// Pivot acceptance threshold relative to the largest diagonal entry.
const PIVOT_RTOL: f64 = 1e-13;

/// Fraction of diagonal entries updated above which a fresh factorization
/// beats the rank-1 update sequence.
pub const UPDATE_CUTOFF: f64 = 0.25;

/// Cached symbolic analysis: permutation, elimination tree, and the column
/// pointers of L for a fixed sparsity structure.
#[derive(Debug, Clone)]
pub struct CholeskySymbolic {
    n: usize,
    /// perm[new] = old
    perm: Vec<usize>,
    /// pinv[old] = new
    pinv: Vec<usize>,
    parent: Vec<usize>,
    /// strict upper-triangle pattern of the permuted matrix, CSC-like
    up_ptr: Vec<usize>,
    up_idx: Vec<usize>,
    /// column pointers of L (length n+1)
    lp: Vec<usize>,
}

impl CholeskySymbolic {
    /// Analyze the structure of a symmetric sparse matrix under `perm`
    /// (perm[new] = old). The matrix must be stored with full symmetry.
    pub fn analyze(structure: &SparseMatrix, perm: &[usize]) -> Result<Self> {
        let n = structure.nrows();
        if structure.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "symbolic analysis requires square matrix",
                expected: n,
                got: structure.ncols(),
            });
        }
        if perm.len() != n {
            return Err(Error::DimensionMismatch {
                context: "permutation length",
                expected: n,
                got: perm.len(),
            });
        }
        let mut pinv = vec![NONE; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || pinv[old] != NONE {
                return Err(Error::InvalidInput("perm is not a permutation".into()));
            }
            pinv[old] = new;
        }

        // strict upper pattern of the permuted matrix
        let mut counts = vec![0usize; n + 1];
        for j in 0..n {
            let pj = pinv[j];
            for (i, _) in structure.col_iter(j) {
                let pi = pinv[i];
                if pi < pj {
                    counts[pj + 1] += 1;
                }
            }
        }
        for k in 0..n {
            counts[k + 1] += counts[k];
        }
        let up_ptr = counts;
        let mut up_idx = vec![0usize; up_ptr[n]];
        let mut next = up_ptr[..n].to_vec();
        for j in 0..n {
            let pj = pinv[j];
            for (i, _) in structure.col_iter(j) {
                let pi = pinv[i];
                if pi < pj {
                    up_idx[next[pj]] = pi;
                    next[pj] += 1;
                }
            }
        }
        for k in 0..n {
            up_idx[up_ptr[k]..up_ptr[k + 1]].sort_unstable();
        }

        // elimination tree via path compression on ancestors
        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for k in 0..n {
            for p in up_ptr[k]..up_ptr[k + 1] {
                let mut i = up_idx[p];
                while i != NONE && i < k {
                    let inext = ancestor[i];
                    ancestor[i] = k;
                    if inext == NONE {
                        parent[i] = k;
                    }
                    i = inext;
                }
            }
        }

        // column counts of L by one ereach sweep (linear in nnz(L))
        let mut col_count = vec![1usize; n]; // diagonal
        let mut flag = vec![NONE; n];
        let mut path = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for p in up_ptr[k]..up_ptr[k + 1] {
                let mut i = up_idx[p];
                let mut len = 0;
                while flag[i] != k {
                    path[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                for &j in &path[..len] {
                    col_count[j] += 1;
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + col_count[k];
        }

        Ok(Self {
            n,
            perm: perm.to_vec(),
            pinv,
            parent,
            up_ptr,
            up_idx,
            lp,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Number of nonzeros in L.
    pub fn lnz(&self) -> usize {
        self.lp[self.n]
    }

    /// Nonzero pattern of row k of L in topological order (ancestors last).
    /// Returns `top`: the pattern occupies `stack[top..n]`.
    fn ereach(&self, k: usize, stack: &mut [usize], flag: &mut [usize], path: &mut [usize]) -> usize {
        let mut top = self.n;
        flag[k] = k;
        for p in self.up_ptr[k]..self.up_ptr[k + 1] {
            let mut i = self.up_idx[p];
            let mut len = 0;
            while flag[i] != k {
                path[len] = i;
                len += 1;
                flag[i] = k;
                i = self.parent[i];
            }
            while len > 0 {
                len -= 1;
                top -= 1;
                stack[top] = path[len];
            }
        }
        top
    }
}

/// Lower-triangular Cholesky factor with its permutation and log-determinant.
///
/// Each stored column starts with the diagonal entry; row indices are strictly
/// increasing. `L L' = P S P'` for the factored matrix S.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    perm: Vec<usize>,
    pinv: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    logdet: f64,
}

impl CholeskyFactor {
    /// Factor a symmetric positive definite sparse matrix under `perm`.
    pub fn factor(s: &SparseMatrix, perm: &[usize]) -> Result<Self> {
        let symb = CholeskySymbolic::analyze(s, perm)?;
        Self::factor_with_symbolic(s, &symb, None)
    }

    /// Numeric factorization reusing a cached symbolic analysis.
    ///
    /// `diag_add`, when given, adds `diag_add[i]` to the (i, i) entry of the
    /// matrix being factored (indices in the original, unpermuted domain);
    /// the addition must not enlarge the symbolic structure, which always
    /// holds for diagonal shifts.
    pub fn factor_with_symbolic(
        s: &SparseMatrix,
        symb: &CholeskySymbolic,
        diag_add: Option<&[f64]>,
    ) -> Result<Self> {
        let n = symb.n;
        if s.nrows() != n || s.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "matrix size vs symbolic analysis",
                expected: n,
                got: s.nrows(),
            });
        }
        let lnz = symb.lnz();
        let mut li = vec![0usize; lnz];
        let mut lx = vec![0.0f64; lnz];
        let mut fill = symb.lp[..n].to_vec();
        let mut x = vec![0.0f64; n];
        let mut stack = vec![0usize; n];
        let mut flag = vec![NONE; n];
        let mut path = vec![0usize; n];

        let mut max_diag = 0.0f64;
        for j in 0..n {
            let d = s.get(j, j) + diag_add.map_or(0.0, |a| a[j]);
            max_diag = max_diag.max(d.abs());
        }
        let pivot_tol = PIVOT_RTOL * max_diag.max(1.0);

        let mut logdet = 0.0;
        for k in 0..n {
            let top = symb.ereach(k, &mut stack, &mut flag, &mut path);
            // scatter the upper part of permuted column k
            let orig = symb.perm[k];
            x[k] = 0.0;
            for (i, v) in s.col_iter(orig) {
                let pi = symb.pinv[i];
                if pi <= k {
                    x[pi] = v;
                }
            }
            if let Some(add) = diag_add {
                x[k] += add[orig];
            }
            let mut dk = x[k];
            x[k] = 0.0;
            for t in top..n {
                let j = stack[t];
                let ljj = lx[symb.lp[j]];
                let lkj = x[j] / ljj;
                x[j] = 0.0;
                for p in (symb.lp[j] + 1)..fill[j] {
                    x[li[p]] -= lx[p] * lkj;
                }
                dk -= lkj * lkj;
                li[fill[j]] = k;
                lx[fill[j]] = lkj;
                fill[j] += 1;
            }
            if !(dk > pivot_tol) {
                return Err(Error::NotPositiveDefinite {
                    index: orig,
                    pivot: dk,
                });
            }
            let sqrt_dk = dk.sqrt();
            li[fill[k]] = k;
            lx[fill[k]] = sqrt_dk;
            fill[k] += 1;
            logdet += sqrt_dk.ln();
        }
        Ok(Self {
            n,
            perm: symb.perm.clone(),
            pinv: symb.pinv.clone(),
            lp: symb.lp.clone(),
            li,
            lx,
            logdet: 2.0 * logdet,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// log|S| of the factored matrix, natural log.
    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    pub fn nnz(&self) -> usize {
        self.lp[self.n]
    }

    /// The factor L as a sparse matrix (permuted domain).
    pub fn l_matrix(&self) -> SparseMatrix {
        let mut triplets = Vec::with_capacity(self.nnz());
        for j in 0..self.n {
            for p in self.lp[j]..self.lp[j + 1] {
                triplets.push((self.li[p], j, self.lx[p]));
            }
        }
        SparseMatrix::from_triplets(self.n, self.n, &triplets).expect("valid factor indices")
    }

    fn lsolve(&self, x: &mut [f64]) {
        for j in 0..self.n {
            let xj = x[j] / self.lx[self.lp[j]];
            x[j] = xj;
            if xj != 0.0 {
                for p in (self.lp[j] + 1)..self.lp[j + 1] {
                    x[self.li[p]] -= self.lx[p] * xj;
                }
            }
        }
    }

    fn ltsolve(&self, x: &mut [f64]) {
        for j in (0..self.n).rev() {
            let mut s = x[j];
            for p in (self.lp[j] + 1)..self.lp[j + 1] {
                s -= self.lx[p] * x[self.li[p]];
            }
            x[j] = s / self.lx[self.lp[j]];
        }
    }

    /// Solve `S x = b` (original index domain): permute, forward solve,
    /// backward solve, inverse permute.
    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "solve right-hand side length",
                expected: self.n,
                got: b.len(),
            });
        }
        let mut x = vec![0.0; self.n];
        for k in 0..self.n {
            x[k] = b[self.perm[k]];
        }
        self.lsolve(&mut x);
        self.ltsolve(&mut x);
        let mut out = vec![0.0; self.n];
        for k in 0..self.n {
            out[self.perm[k]] = x[k];
        }
        Ok(out)
    }

    /// Solve `S X = B` column by column.
    pub fn solve_mat(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if b.nrows() != self.n {
            return Err(Error::DimensionMismatch {
                context: "solve right-hand side rows",
                expected: self.n,
                got: b.nrows(),
            });
        }
        let mut out = DenseMatrix::zeros(self.n, b.ncols());
        for j in 0..b.ncols() {
            let x = self.solve_vec(b.col(j))?;
            out.col_mut(j).copy_from_slice(&x);
        }
        Ok(out)
    }

    /// Rank-1 update: returns the factor of `S + v v'` where `v` is given as
    /// sparse (index, value) pairs in the original index domain.
    ///
    /// The update is performed within the existing symbolic pattern; an
    /// update whose fill-in would leave that pattern (possible when the
    /// support of `v` spans unrelated elimination subtrees) is rejected with
    /// `InvalidInput` rather than silently truncated.
    pub fn rank1_update(&self, v: &[(usize, f64)]) -> Result<Self> {
        let mut f = self.clone();
        f.rank1_update_in_place(v)?;
        Ok(f)
    }

    pub fn rank1_update_in_place(&mut self, v: &[(usize, f64)]) -> Result<()> {
        let n = self.n;
        let mut w = vec![0.0f64; n];
        let mut heap: BinaryHeap<Reverse<usize>> = BinaryHeap::new();
        let mut queued = vec![false; n];
        for &(i, val) in v {
            if i >= n {
                return Err(Error::IndexOutOfRange {
                    what: "update vector index",
                    got: i,
                    bound: n,
                });
            }
            if val == 0.0 {
                continue;
            }
            let k = self.pinv[i];
            w[k] += val;
            if !queued[k] {
                queued[k] = true;
                heap.push(Reverse(k));
            }
        }

        // Davis-Hager style alpha recurrence on the LDL' scaling of L; rows
        // outside a processed column's pattern keep their w entry untouched,
        // which is what makes the sparse walk valid.
        let mut alpha = 1.0f64;
        let mut in_pattern = vec![false; n];
        while let Some(Reverse(j)) = heap.pop() {
            let wj = w[j];
            w[j] = 0.0;
            queued[j] = false;
            if wj == 0.0 {
                continue;
            }
            let p0 = self.lp[j];
            let p1 = self.lp[j + 1];
            let ljj = self.lx[p0];
            let dj = ljj * ljj;
            let alpha_bar = alpha + wj * wj / dj;
            let dj_bar = dj * alpha_bar / alpha;
            if !(dj_bar > 0.0) || !dj_bar.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    index: self.perm[j],
                    pivot: dj_bar,
                });
            }
            let gamma = wj / (dj * alpha_bar);
            self.logdet += (alpha_bar / alpha).ln();
            alpha = alpha_bar;

            let ljj_bar = dj_bar.sqrt();
            self.lx[p0] = ljj_bar;
            for p in (p0 + 1)..p1 {
                let i = self.li[p];
                in_pattern[i] = true;
                let lij = self.lx[p] / ljj; // LDL'-scaled entry
                let wi = w[i] - wj * lij;
                w[i] = wi;
                self.lx[p] = (lij + gamma * wi) * ljj_bar;
                if wi != 0.0 && !queued[i] {
                    queued[i] = true;
                    heap.push(Reverse(i));
                }
            }
            // any other queued row with a nonzero w entry would need fill
            // outside the stored pattern
            for &Reverse(i) in heap.iter() {
                if !in_pattern[i] && w[i] != 0.0 {
                    return Err(Error::InvalidInput(
                        "rank-1 update requires fill outside the factor pattern; refactor instead"
                            .to_string(),
                    ));
                }
            }
            for p in (p0 + 1)..p1 {
                in_pattern[self.li[p]] = false;
            }
        }
        Ok(())
    }
}

/// Factor of `S + theta * D` where `D` has ones at `obs_idx`, built either by
/// a rank-1 update sequence (few observed entries) or by a fresh numeric
/// factorization under the same permutation. Both routes agree to rounding.
pub fn factor_observed_system(
    base: &CholeskyFactor,
    s: &SparseMatrix,
    symb: &CholeskySymbolic,
    obs_idx: &[usize],
    theta: f64,
) -> Result<CholeskyFactor> {
    if theta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "theta must be nonnegative, got {theta}"
        )));
    }
    if theta == 0.0 {
        return Ok(base.clone());
    }
    let n = base.n();
    if obs_idx.len() as f64 <= UPDATE_CUTOFF * n as f64 {
        let sqrt_theta = theta.sqrt();
        let mut f = base.clone();
        for &i in obs_idx {
            f.rank1_update_in_place(&[(i, sqrt_theta)])?;
        }
        Ok(f)
    } else {
        let mut diag = vec![0.0f64; n];
        for &i in obs_idx {
            diag[i] = theta;
        }
        CholeskyFactor::factor_with_symbolic(s, symb, Some(&diag))
    }
}

/// Fill-reducing ordering: nested dissection when the matrix comes from a
/// known rectangular grid, minimum degree otherwise. Deterministic.
pub fn symbolic_order(s: &SparseMatrix, grid_hint: Option<(usize, usize)>) -> Result<Vec<usize>> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "ordering requires square matrix",
            expected: n,
            got: s.ncols(),
        });
    }
    if let Some((rows, cols)) = grid_hint {
        if rows * cols == n {
            return Ok(nested_dissection_grid(rows, cols));
        }
    }
    Ok(min_degree_order(s))
}

/// Identity permutation, for baseline comparisons.
pub fn natural_order(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Nested dissection on a rows x cols grid: recursively order the two
/// halves, then the separator band. Cells are numbered row-major as
/// `r * cols + c`. Separators are two cells thick because the matrix being
/// ordered (A'A) couples grid cells up to two steps apart.
pub fn nested_dissection_grid(rows: usize, cols: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(rows * cols);
    dissect(0, rows, 0, cols, cols, &mut order);
    order
}

fn dissect(r0: usize, r1: usize, c0: usize, c1: usize, stride: usize, out: &mut Vec<usize>) {
    let h = r1 - r0;
    let w = c1 - c0;
    if h == 0 || w == 0 {
        return;
    }
    if h <= 5 && w <= 5 {
        for r in r0..r1 {
            for c in c0..c1 {
                out.push(r * stride + c);
            }
        }
        return;
    }
    if h >= w {
        let mid = r0 + h / 2 - 1;
        dissect(r0, mid, c0, c1, stride, out);
        dissect(mid + 2, r1, c0, c1, stride, out);
        for r in mid..mid + 2 {
            for c in c0..c1 {
                out.push(r * stride + c);
            }
        }
    } else {
        let mid = c0 + w / 2 - 1;
        dissect(r0, r1, c0, mid, stride, out);
        dissect(r0, r1, mid + 2, c1, stride, out);
        for r in r0..r1 {
            for c in mid..mid + 2 {
                out.push(r * stride + c);
            }
        }
    }
}

/// Minimum-degree ordering on the filled graph. Ties break toward the lowest
/// node index, making the ordering deterministic.
pub fn min_degree_order(s: &SparseMatrix) -> Vec<usize> {
    let n = s.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..n {
        for (i, _) in s.col_iter(j) {
            if i != j {
                adj[j].push(i);
            }
        }
        adj[j].sort_unstable();
        adj[j].dedup();
    }
    let mut eliminated = vec![false; n];
    let mut degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = BinaryHeap::new();
    for v in 0..n {
        heap.push(Reverse((degree[v], v)));
    }
    let mut order = Vec::with_capacity(n);
    let mut merged: Vec<usize> = Vec::new();
    while order.len() < n {
        let Reverse((d, p)) = heap.pop().expect("heap exhausted before ordering finished");
        if eliminated[p] || d != degree[p] {
            continue; // stale entry
        }
        eliminated[p] = true;
        order.push(p);
        let nb: Vec<usize> = adj[p].iter().copied().filter(|&u| !eliminated[u]).collect();
        for &u in &nb {
            // adj[u] = (adj[u] ∪ nb) \ {u, p, eliminated}
            merged.clear();
            let a = &adj[u];
            let mut i = 0;
            let mut k = 0;
            while i < a.len() || k < nb.len() {
                let take = if k == nb.len() || (i < a.len() && a[i] < nb[k]) {
                    let v = a[i];
                    i += 1;
                    v
                } else if i == a.len() || a[i] > nb[k] {
                    let v = nb[k];
                    k += 1;
                    v
                } else {
                    let v = a[i];
                    i += 1;
                    k += 1;
                    v
                };
                if take != u && !eliminated[take] {
                    merged.push(take);
                }
            }
            merged.dedup();
            adj[u].clear();
            adj[u].extend_from_slice(&merged);
            if adj[u].len() != degree[u] {
                degree[u] = adj[u].len();
                heap.push(Reverse((degree[u], u)));
            }
        }
        adj[p] = Vec::new();
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rook_adjacency(rows: usize, cols: usize) -> SparseMatrix {
        let n = rows * cols;
        let mut t = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let u = r * cols + c;
                if r + 1 < rows {
                    t.push((u, (r + 1) * cols + c, 1.0));
                    t.push(((r + 1) * cols + c, u, 1.0));
                }
                if c + 1 < cols {
                    t.push((u, r * cols + c + 1, 1.0));
                    t.push((r * cols + c + 1, u, 1.0));
                }
            }
        }
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    }

    fn grid_ata(rows: usize, cols: usize, rho: f64) -> SparseMatrix {
        // row-normalized rook weights, A = I - rho W, returns A'A
        let w = rook_adjacency(rows, cols);
        let n = w.nrows();
        let mut t = Vec::new();
        for j in 0..n {
            for (i, v) in w.col_iter(j) {
                let deg: f64 = w.col_iter(i).map(|(_, x)| x).sum(); // symmetric: row sum = col sum
                t.push((i, j, v / deg));
            }
        }
        let wn = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let a = SparseMatrix::identity_minus_scaled(&wn, rho).unwrap();
        a.transpose().spgemm(&a).unwrap()
    }

    fn random_spd_sparse(rng: &mut StdRng, n: usize, density: f64) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if rng.random::<f64>() < density {
                    t.push((i, j, rng.random_range(-1.0..1.0)));
                }
            }
        }
        let b = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let mut s = b.transpose().spgemm(&b).unwrap();
        // diagonal shift for definiteness
        let mut tt: Vec<(usize, usize, f64)> = Vec::new();
        for j in 0..n {
            for (i, v) in s.col_iter(j) {
                tt.push((i, j, v));
            }
            tt.push((j, j, 0.5 + n as f64 * 0.05));
        }
        s = SparseMatrix::from_triplets(n, n, &tt).unwrap();
        s
    }

    fn logdet_eig_oracle(s: &SparseMatrix) -> f64 {
        let n = s.nrows();
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| s.get(i, j));
        m.symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|&l| l.ln())
            .sum()
    }

    #[test]
    fn identity_factor() {
        let id = SparseMatrix::identity(3);
        let f = CholeskyFactor::factor(&id, &natural_order(3)).unwrap();
        assert_eq!(f.logdet(), 0.0);
        let l = f.l_matrix();
        assert_eq!(l, id);
    }

    #[test]
    fn hand_factor_2x2() {
        let s =
            SparseMatrix::from_triplets(2, 2, &[(0, 0, 4.0), (1, 0, 2.0), (0, 1, 2.0), (1, 1, 3.0)])
                .unwrap();
        let f = CholeskyFactor::factor(&s, &natural_order(2)).unwrap();
        let l = f.l_matrix();
        assert!((l.get(0, 0) - 2.0).abs() < 1e-15);
        assert!((l.get(1, 0) - 1.0).abs() < 1e-15);
        assert!((l.get(1, 1) - 2.0f64.sqrt()).abs() < 1e-15);
        assert!((f.logdet() - 8.0f64.ln()).abs() < 1e-14);

        let x = f.solve_vec(&[1.0, 0.0]).unwrap();
        assert!((x[0] - 0.375).abs() < 1e-14);
        assert!((x[1] + 0.25).abs() < 1e-14);
    }

    #[test]
    fn not_positive_definite_reports_pivot() {
        let s = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 1.0), (1, 0, 2.0), (0, 1, 2.0), (1, 1, 1.0)],
        )
        .unwrap();
        match CholeskyFactor::factor(&s, &natural_order(2)) {
            Err(Error::NotPositiveDefinite { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn grid_logdet_matches_dense_oracle() {
        let ata = grid_ata(10, 10, 0.8);
        let perm = symbolic_order(&ata, Some((10, 10))).unwrap();
        let f = CholeskyFactor::factor(&ata, &perm).unwrap();
        let oracle = logdet_eig_oracle(&ata);
        assert!(
            (f.logdet() - oracle).abs() < 1e-8 * oracle.abs().max(1.0),
            "logdet {} vs oracle {}",
            f.logdet(),
            oracle
        );
    }

    #[test]
    fn reconstruction_and_logdet_random_spd() {
        let mut rng = StdRng::seed_from_u64(42);
        for trial in 0..20 {
            let n = rng.random_range(5..=60);
            let s = random_spd_sparse(&mut rng, n, 0.15);
            let perm = if trial % 2 == 0 {
                natural_order(n)
            } else {
                min_degree_order(&s)
            };
            let f = CholeskyFactor::factor(&s, &perm).unwrap();
            // ||L L' - P S P'||_max <= 1e-10 ||S||_max
            let l = f.l_matrix().to_dense();
            let n_ = s.nrows();
            let scale = s.max_abs();
            for i in 0..n_ {
                for j in 0..n_ {
                    let mut v = 0.0;
                    for k in 0..n_ {
                        v += l.get(i, k) * l.get(j, k);
                    }
                    let expect = s.get(perm[i], perm[j]);
                    assert!(
                        (v - expect).abs() <= 1e-10 * scale,
                        "reconstruction off at ({i},{j}): {v} vs {expect}"
                    );
                }
            }
            let oracle = logdet_eig_oracle(&s);
            assert!((f.logdet() - oracle).abs() < 1e-8 * oracle.abs().max(1.0));
        }
    }

    #[test]
    fn logdet_invariant_under_ordering() {
        let ata = grid_ata(7, 9, 0.6);
        let f1 = CholeskyFactor::factor(&ata, &natural_order(ata.nrows())).unwrap();
        let perm = symbolic_order(&ata, Some((7, 9))).unwrap();
        let f2 = CholeskyFactor::factor(&ata, &perm).unwrap();
        let f3 = CholeskyFactor::factor(&ata, &min_degree_order(&ata)).unwrap();
        assert!((f1.logdet() - f2.logdet()).abs() < 1e-10 * f1.logdet().abs().max(1.0));
        assert!((f1.logdet() - f3.logdet()).abs() < 1e-10 * f1.logdet().abs().max(1.0));
    }

    #[test]
    fn solve_matches_dense_oracle() {
        let mut rng = StdRng::seed_from_u64(9);
        let n = 30;
        let s = random_spd_sparse(&mut rng, n, 0.2);
        let perm = min_degree_order(&s);
        let f = CholeskyFactor::factor(&s, &perm).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = f.solve_vec(&b).unwrap();
        let sn = nalgebra::DMatrix::from_fn(n, n, |i, j| s.get(i, j));
        let xn = sn
            .cholesky()
            .unwrap()
            .solve(&nalgebra::DVector::from_column_slice(&b));
        for i in 0..n {
            assert!((x[i] - xn[i]).abs() < 1e-9, "{} vs {}", x[i], xn[i]);
        }
        // residual check, ||Sx - b||_max <= 1e-8 ||b||_max
        let r = s.spmv(&x).unwrap();
        let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            assert!((r[i] - b[i]).abs() <= 1e-8 * bmax.max(1.0));
        }
    }

    #[test]
    fn rank1_zero_vector_is_identity_update() {
        let ata = grid_ata(4, 4, 0.5);
        let f = CholeskyFactor::factor(&ata, &natural_order(16)).unwrap();
        let g = f.rank1_update(&[]).unwrap();
        assert_eq!(f.logdet(), g.logdet());
        let h = f.rank1_update(&[(3, 0.0)]).unwrap();
        assert_eq!(f.logdet(), h.logdet());
    }

    #[test]
    fn rank1_diagonal_update() {
        let id = SparseMatrix::identity(2);
        let f = CholeskyFactor::factor(&id, &natural_order(2)).unwrap();
        let g = f.rank1_update(&[(0, 1.0)]).unwrap();
        assert!((g.logdet() - 2.0f64.ln()).abs() < 1e-14);
        let l = g.l_matrix();
        assert!((l.get(0, 0) - 2.0f64.sqrt()).abs() < 1e-14);
        assert!((l.get(1, 1) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank1_sequence_matches_refactorization() {
        let mut rng = StdRng::seed_from_u64(77);
        let ata = grid_ata(12, 12, 0.7);
        let n = ata.nrows();
        let perm = symbolic_order(&ata, Some((12, 12))).unwrap();
        let symb = CholeskySymbolic::analyze(&ata, &perm).unwrap();
        let base = CholeskyFactor::factor_with_symbolic(&ata, &symb, None).unwrap();

        // 10% observed
        let mut obs: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            obs.swap(i, j);
        }
        obs.truncate(n / 10);
        obs.sort_unstable();
        let theta: f64 = 2.0;

        let sqrt_theta = theta.sqrt();
        let mut updated = base.clone();
        for &i in &obs {
            updated.rank1_update_in_place(&[(i, sqrt_theta)]).unwrap();
        }

        let mut diag = vec![0.0; n];
        for &i in &obs {
            diag[i] = theta;
        }
        let refactored = CholeskyFactor::factor_with_symbolic(&ata, &symb, Some(&diag)).unwrap();

        assert!(
            (updated.logdet() - refactored.logdet()).abs()
                <= 1e-10 * refactored.logdet().abs().max(1.0),
            "update logdet {} vs refactor {}",
            updated.logdet(),
            refactored.logdet()
        );
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let xu = updated.solve_vec(&b).unwrap();
        let xr = refactored.solve_vec(&b).unwrap();
        for i in 0..n {
            assert!((xu[i] - xr[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn rank1_general_vector_on_full_pattern() {
        // dense-support SPD so the factor pattern is the full lower triangle
        let mut rng = StdRng::seed_from_u64(5);
        let n = 12;
        let s = random_spd_sparse(&mut rng, n, 1.0);
        let f = CholeskyFactor::factor(&s, &natural_order(n)).unwrap();
        let v: Vec<(usize, f64)> = (0..n).map(|i| (i, rng.random_range(-1.0..1.0))).collect();
        let updated = f.rank1_update(&v).unwrap();

        let mut t: Vec<(usize, usize, f64)> = Vec::new();
        for j in 0..n {
            for (i, val) in s.col_iter(j) {
                t.push((i, j, val));
            }
        }
        for &(i, vi) in &v {
            for &(j, vj) in &v {
                t.push((i, j, vi * vj));
            }
        }
        let s2 = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let g = CholeskyFactor::factor(&s2, &natural_order(n)).unwrap();
        assert!((updated.logdet() - g.logdet()).abs() < 1e-10 * g.logdet().abs().max(1.0));
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let xu = updated.solve_vec(&b).unwrap();
        let xg = g.solve_vec(&b).unwrap();
        for i in 0..n {
            assert!((xu[i] - xg[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn rank1_rejects_pattern_overflow() {
        // identity factor has diagonal-only pattern; a two-point update needs fill
        let id = SparseMatrix::identity(4);
        let f = CholeskyFactor::factor(&id, &natural_order(4)).unwrap();
        let err = f.rank1_update(&[(0, 1.0), (3, 1.0)]);
        assert!(err.is_err());
    }

    #[test]
    fn observed_system_theta_zero_is_exact_copy() {
        let ata = grid_ata(5, 5, 0.4);
        let perm = symbolic_order(&ata, Some((5, 5))).unwrap();
        let symb = CholeskySymbolic::analyze(&ata, &perm).unwrap();
        let base = CholeskyFactor::factor_with_symbolic(&ata, &symb, None).unwrap();
        let f = factor_observed_system(&base, &ata, &symb, &[0, 3, 7], 0.0).unwrap();
        assert_eq!(f.logdet(), base.logdet());
    }

    #[test]
    fn observed_system_all_observed_matches_oracle() {
        let ata = grid_ata(6, 6, 0.8);
        let n = ata.nrows();
        let perm = symbolic_order(&ata, Some((6, 6))).unwrap();
        let symb = CholeskySymbolic::analyze(&ata, &perm).unwrap();
        let base = CholeskyFactor::factor_with_symbolic(&ata, &symb, None).unwrap();
        let all: Vec<usize> = (0..n).collect();
        let f = factor_observed_system(&base, &ata, &symb, &all, 1.0).unwrap();
        // oracle: dense eigenvalues of A'A + I
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            ata.get(i, j) + if i == j { 1.0 } else { 0.0 }
        });
        let oracle: f64 = m.symmetric_eigen().eigenvalues.iter().map(|l| l.ln()).sum();
        assert!((f.logdet() - oracle).abs() < 1e-8 * oracle.abs().max(1.0));
    }

    #[test]
    fn observed_system_update_and_refactor_paths_agree() {
        let mut rng = StdRng::seed_from_u64(123);
        let ata = grid_ata(12, 12, 0.65);
        let n = ata.nrows();
        let perm = symbolic_order(&ata, Some((12, 12))).unwrap();
        let symb = CholeskySymbolic::analyze(&ata, &perm).unwrap();
        let base = CholeskyFactor::factor_with_symbolic(&ata, &symb, None).unwrap();
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            idx.swap(i, j);
        }
        idx.truncate(n / 10); // below the cutoff: update path
        idx.sort_unstable();
        let via_updates = factor_observed_system(&base, &ata, &symb, &idx, 2.0).unwrap();

        let mut diag = vec![0.0; n];
        for &i in &idx {
            diag[i] = 2.0;
        }
        let via_refactor = CholeskyFactor::factor_with_symbolic(&ata, &symb, Some(&diag)).unwrap();
        assert!(
            (via_updates.logdet() - via_refactor.logdet()).abs()
                <= 1e-10 * via_refactor.logdet().abs().max(1.0)
        );
    }

    #[test]
    fn orderings_are_valid_and_reduce_fill() {
        let ata = grid_ata(5, 5, 0.5);
        let perm = symbolic_order(&ata, Some((5, 5))).unwrap();
        let mut seen = vec![false; 25];
        for &p in &perm {
            assert!(!seen[p]);
            seen[p] = true;
        }
        let symb = CholeskySymbolic::analyze(&ata, &perm).unwrap();
        assert!(symb.lnz() <= 25 * 26 / 2);

        // diagonal matrix: min degree keeps natural order
        let d = SparseMatrix::from_triplets(4, 4, &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0), (3, 3, 4.0)])
            .unwrap();
        assert_eq!(min_degree_order(&d), vec![0, 1, 2, 3]);
        // 1x1
        let one = SparseMatrix::identity(1);
        assert_eq!(symbolic_order(&one, None).unwrap(), vec![0]);
    }

    #[test]
    fn nested_dissection_beats_natural_order_on_grid() {
        let ata = grid_ata(16, 16, 0.7);
        let nd = CholeskySymbolic::analyze(&ata, &nested_dissection_grid(16, 16)).unwrap();
        let nat = CholeskySymbolic::analyze(&ata, &natural_order(256)).unwrap();
        assert!(
            nd.lnz() < nat.lnz(),
            "nd fill {} should beat natural fill {}",
            nd.lnz(),
            nat.lnz()
        );
    }
}
