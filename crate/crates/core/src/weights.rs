//! Spatial weight matrices: Rook-neighborhood grids, row normalization, and
//! the admissible interval for the autocorrelation parameter.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Margin by which the open admissibility interval is shrunk before being
/// handed to the optimizer.
pub const RHO_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    None,
    Row,
}

/// How to determine the admissible interval for rho.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoIntervalMethod {
    /// Full real spectrum of W via a dense eigensolver; refused for n > 2000.
    ExactDense,
    /// Extremal eigenvalues by (shifted) power iteration, tolerance 1e-6.
    ExtremalIterative,
    /// (-1 + margin, 1 - margin); valid for row-normalized weights.
    Conservative,
}

/// A spatial weight matrix together with its normalization state, the open
/// interval of admissible autocorrelation values, and an optional regular
/// grid layout used to pick better orderings downstream.
#[derive(Debug, Clone)]
pub struct SpatialWeights {
    w: SparseMatrix,
    w_t: SparseMatrix,
    normalization: Normalization,
    rho_lo: f64,
    rho_hi: f64,
    grid_hint: Option<(usize, usize)>,
    /// true when row normalization encountered rows with no neighbors
    has_islands: bool,
}

impl SpatialWeights {
    /// Wrap an arbitrary weight matrix. The diagonal must be zero. The
    /// admissible interval is computed with the given method, defaulting to
    /// conservative for row-normalized input and extremal iteration otherwise.
    pub fn new(
        w: SparseMatrix,
        normalization: Normalization,
        method: Option<RhoIntervalMethod>,
        grid_hint: Option<(usize, usize)>,
    ) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(Error::DimensionMismatch {
                context: "weight matrix must be square",
                expected: w.nrows(),
                got: w.ncols(),
            });
        }
        for j in 0..w.ncols() {
            if w.get(j, j) != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "weight matrix has nonzero diagonal at {j}"
                )));
            }
        }
        let has_islands = (0..w.nrows()).any(|i| row_sum(&w, i) == 0.0);
        let method = method.unwrap_or(match normalization {
            Normalization::Row => RhoIntervalMethod::Conservative,
            Normalization::None => RhoIntervalMethod::ExtremalIterative,
        });
        let w_t = w.transpose();
        let mut sw = Self {
            w,
            w_t,
            normalization,
            rho_lo: -1.0 + RHO_MARGIN,
            rho_hi: 1.0 - RHO_MARGIN,
            grid_hint,
            has_islands,
        };
        let (lo, hi) = sw.compute_rho_interval(method)?;
        sw.rho_lo = lo;
        sw.rho_hi = hi;
        Ok(sw)
    }

    /// Rook-neighborhood grid: unit (i, j) is adjacent to its orthogonal
    /// neighbors within bounds, so interior units have 4 neighbors, edges 3,
    /// corners 2. Optionally row-normalized.
    pub fn rook_grid(rows: usize, cols: usize, normalize: bool) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(
                "rook grid needs at least one row and column".into(),
            ));
        }
        let n = rows * cols;
        let mut triplets = Vec::with_capacity(4 * n);
        for r in 0..rows {
            for c in 0..cols {
                let u = r * cols + c;
                let mut push = |v: usize| triplets.push((u, v, 1.0));
                if r > 0 {
                    push(u - cols);
                }
                if r + 1 < rows {
                    push(u + cols);
                }
                if c > 0 {
                    push(u - 1);
                }
                if c + 1 < cols {
                    push(u + 1);
                }
            }
        }
        let adj = SparseMatrix::from_triplets(n, n, &triplets)?;
        if normalize {
            let mut sw = Self::row_normalize(&adj)?;
            sw.grid_hint = Some((rows, cols));
            Ok(sw)
        } else {
            Self::new(
                adj,
                Normalization::None,
                Some(RhoIntervalMethod::ExtremalIterative),
                Some((rows, cols)),
            )
        }
    }

    /// Row-normalize a nonnegative weight matrix with zero diagonal: every
    /// row with at least one neighbor is divided by its sum. Rows without
    /// neighbors are left zero and flagged rather than rejected.
    pub fn row_normalize(w: &SparseMatrix) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(Error::DimensionMismatch {
                context: "weight matrix must be square",
                expected: w.nrows(),
                got: w.ncols(),
            });
        }
        let n = w.nrows();
        let mut sums = vec![0.0f64; n];
        for j in 0..n {
            for (i, v) in w.col_iter(j) {
                if i == j && v != 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "weight matrix has nonzero diagonal at {i}"
                    )));
                }
                if v < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "negative weight at ({i}, {j})"
                    )));
                }
                sums[i] += v;
            }
        }
        let mut triplets = Vec::with_capacity(w.nnz());
        for j in 0..n {
            for (i, v) in w.col_iter(j) {
                if sums[i] > 0.0 {
                    triplets.push((i, j, v / sums[i]));
                }
            }
        }
        let wn = SparseMatrix::from_triplets(n, n, &triplets)?;
        Self::new(
            wn,
            Normalization::Row,
            Some(RhoIntervalMethod::Conservative),
            None,
        )
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.w
    }

    /// Transpose of W, cached at construction.
    pub fn matrix_t(&self) -> &SparseMatrix {
        &self.w_t
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn rho_interval(&self) -> (f64, f64) {
        (self.rho_lo, self.rho_hi)
    }

    pub fn grid_hint(&self) -> Option<(usize, usize)> {
        self.grid_hint
    }

    pub fn has_islands(&self) -> bool {
        self.has_islands
    }

    pub fn contains_rho(&self, rho: f64) -> bool {
        rho >= self.rho_lo && rho <= self.rho_hi
    }

    /// Recompute the admissible interval with an explicit method.
    pub fn compute_rho_interval(&self, method: RhoIntervalMethod) -> Result<(f64, f64)> {
        let n = self.n();
        match method {
            RhoIntervalMethod::Conservative => Ok((-1.0 + RHO_MARGIN, 1.0 - RHO_MARGIN)),
            RhoIntervalMethod::ExactDense => {
                if n > 2000 {
                    return Err(Error::InvalidInput(format!(
                        "exact dense spectrum refused for n = {n} > 2000"
                    )));
                }
                if n == 0 {
                    return Ok((-1.0 + RHO_MARGIN, 1.0 - RHO_MARGIN));
                }
                let m = nalgebra::DMatrix::from_fn(n, n, |i, j| self.w.get(i, j));
                let eig = m.complex_eigenvalues();
                let mut lambda_min = f64::INFINITY;
                let mut lambda_max = f64::NEG_INFINITY;
                for e in eig.iter() {
                    if e.im.abs() < 1e-8 * (1.0 + e.re.abs()) {
                        lambda_min = lambda_min.min(e.re);
                        lambda_max = lambda_max.max(e.re);
                    }
                }
                Ok(interval_from_extremes(lambda_min, lambda_max, self.normalization))
            }
            RhoIntervalMethod::ExtremalIterative => {
                if self.w.nnz() == 0 {
                    // no spatial structure constrains rho; keep the default box
                    return Ok((-1.0 + RHO_MARGIN, 1.0 - RHO_MARGIN));
                }
                let (lmin, lmax) = extremal_eigenvalues(&self.w, 1e-6, 10_000)?;
                Ok(interval_from_extremes(lmin, lmax, self.normalization))
            }
        }
    }

    /// W restricted to the given units (rows and columns), re-row-normalized.
    /// This is the deliberately misspecified weight matrix of the
    /// observed-data baseline.
    pub fn restrict_and_normalize(&self, idx: &[usize]) -> Result<SpatialWeights> {
        let sub = self.w.select_rows(idx)?.select_cols(idx)?;
        SpatialWeights::row_normalize(&sub)
    }
}

fn row_sum(w: &SparseMatrix, row: usize) -> f64 {
    // CSC: row sums need a pass over all columns; only used at construction
    let mut s = 0.0;
    for j in 0..w.ncols() {
        s += w.get(row, j);
    }
    s
}

fn interval_from_extremes(lmin: f64, lmax: f64, norm: Normalization) -> (f64, f64) {
    let hi = match norm {
        Normalization::Row => 1.0,
        Normalization::None => {
            if lmax > 0.0 {
                1.0 / lmax
            } else {
                f64::INFINITY
            }
        }
    };
    let lo = if lmin < 0.0 { 1.0 / lmin } else { f64::NEG_INFINITY };
    // shrink the open interval so the singular endpoints are unreachable
    let lo = if lo.is_finite() { lo + RHO_MARGIN } else { -1e6 };
    let hi = if hi.is_finite() { hi - RHO_MARGIN } else { 1e6 };
    (lo, hi)
}

/// Extremal real eigenvalues of a weight matrix with real spectrum, by
/// shifted power iterations. Symmetric matrices are handled directly;
/// row-normalized matrices built from a symmetric affinity satisfy detailed
/// balance and are first transformed to the similar symmetric operator
/// sqrt(W o W'). Matrices with neither property are rejected (use the dense
/// spectrum instead).
pub fn extremal_eigenvalues(w: &SparseMatrix, tol: f64, max_iter: usize) -> Result<(f64, f64)> {
    let k = symmetrized_similarity(w)?;
    Ok(symmetric_extremes(&k, tol, max_iter))
}

fn symmetrized_similarity(w: &SparseMatrix) -> Result<SparseMatrix> {
    let n = w.nrows();
    let wt = w.transpose();
    let mut is_symmetric = true;
    for j in 0..n {
        for ((i1, v1), (i2, v2)) in w.col_iter(j).zip(wt.col_iter(j)) {
            if i1 != i2 || (v1 - v2).abs() > 1e-12 * v1.abs().max(v2.abs()).max(1e-300) {
                is_symmetric = false;
                break;
            }
        }
        if w.col_ptr()[j + 1] - w.col_ptr()[j] != wt.col_ptr()[j + 1] - wt.col_ptr()[j] {
            is_symmetric = false;
        }
        if !is_symmetric {
            break;
        }
    }
    if is_symmetric {
        return Ok(w.clone());
    }

    // detailed balance: r_j / r_i = W_ij / W_ji must be consistent on every
    // cycle; verified by propagating log-ratios over a spanning forest and
    // checking the remaining edges
    let mut triplets = Vec::with_capacity(w.nnz());
    for j in 0..n {
        for (i, v) in w.col_iter(j) {
            let back = w.get(j, i);
            if v * back <= 0.0 {
                return Err(Error::InvalidInput(
                    "weight matrix is neither symmetric nor reversible; \
                     iterative spectrum estimation is unreliable, use the dense method"
                        .to_string(),
                ));
            }
            triplets.push((i, j, (v * back).sqrt() * v.signum()));
        }
    }
    let mut log_r = vec![f64::NAN; n];
    let mut stack = Vec::new();
    for root in 0..n {
        if !log_r[root].is_nan() {
            continue;
        }
        log_r[root] = 0.0;
        stack.push(root);
        while let Some(i) = stack.pop() {
            // neighbors of i: walk column i (in-edges) which mirrors the
            // support of the out-edges under reversibility
            for (j, w_ji) in w.col_iter(i) {
                let w_ij = w.get(i, j);
                if w_ij == 0.0 {
                    return Err(Error::InvalidInput(
                        "weight matrix support is not symmetric; use the dense method".to_string(),
                    ));
                }
                let expected = log_r[i] + (w_ij / w_ji).abs().ln();
                if log_r[j].is_nan() {
                    log_r[j] = expected;
                    stack.push(j);
                } else if (log_r[j] - expected).abs() > 1e-8 * (1.0 + expected.abs()) {
                    return Err(Error::InvalidInput(
                        "weight matrix violates detailed balance; \
                         iterative spectrum estimation is unreliable, use the dense method"
                            .to_string(),
                    ));
                }
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &triplets)
}

fn symmetric_extremes(k: &SparseMatrix, tol: f64, max_iter: usize) -> (f64, f64) {
    let n = k.nrows();
    // Gershgorin bound on |lambda|
    let mut bound = 0.0f64;
    let mut abs_col_sum = vec![0.0f64; n];
    for j in 0..n {
        for (_, v) in k.col_iter(j) {
            abs_col_sum[j] += v.abs();
        }
        bound = bound.max(abs_col_sum[j]);
    }
    if bound == 0.0 {
        return (0.0, 0.0);
    }
    // shift makes one end dominant in modulus, so plain power iteration
    // converges to it
    let lambda_max = power_dominant(k, bound, tol, max_iter) - bound;
    let lambda_min = power_dominant(k, -bound, tol, max_iter) + bound;
    (lambda_min.min(lambda_max), lambda_max.max(lambda_min))
}

/// Dominant eigenvalue of `K + shift I` minus nothing (returned on the
/// shifted scale) for symmetric K, by power iteration with a Rayleigh
/// quotient estimate.
fn power_dominant(k: &SparseMatrix, shift: f64, tol: f64, max_iter: usize) -> f64 {
    let n = k.nrows();
    let mut x: Vec<f64> = (0..n)
        .map(|i| 0.5 + ((i * 2654435761) % 97) as f64 / 97.0)
        .collect();
    normalize(&mut x);
    let mut lambda = 0.0f64;
    for _ in 0..max_iter {
        let mut y = k.spmv(&x).expect("dimension checked");
        for i in 0..n {
            y[i] += shift * x[i];
        }
        let ray: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        if normalize(&mut y) == 0.0 {
            return shift;
        }
        let done = (ray - lambda).abs() <= tol * ray.abs().max(1.0);
        lambda = ray;
        x = y;
        if done {
            break;
        }
    }
    lambda
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
    norm
}
