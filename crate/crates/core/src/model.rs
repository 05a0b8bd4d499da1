//! Model definitions: the two hierarchical SAR variants, the dataset with
//! its observed/missing partition, parameter containers, and the per-
//! evaluation working state (A, A'A and its factors) shared by both
//! likelihood routes.
//!
//! Both variants share the covariance scale V = I + theta (A'A)^{-1}; only
//! the mean differs (X beta for H-SEM, A^{-1} X beta for H-SAM).

use crate::cholesky::{
    factor_observed_system, symbolic_order, CholeskyFactor, CholeskySymbolic,
};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use crate::weights::SpatialWeights;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Spatial dependence in the error term.
    Hsem,
    /// Spatial dependence in the latent response.
    Hsam,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Hsem => write!(f, "hsem"),
            ModelKind::Hsam => write!(f, "hsam"),
        }
    }
}

/// Response vector with missing entries, covariates, and the index partition.
/// The design matrix is used as given; an intercept column is the caller's
/// responsibility.
#[derive(Debug, Clone)]
pub struct Dataset {
    y: Vec<f64>, // NaN at missing slots; never read there
    mask: Vec<bool>,
    x: DenseMatrix,
    obs_idx: Vec<usize>,
    mis_idx: Vec<usize>,
}

impl Dataset {
    pub fn new(y: Vec<Option<f64>>, x: DenseMatrix) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                context: "design matrix rows vs response length",
                expected: y.len(),
                got: x.nrows(),
            });
        }
        let mut yv = Vec::with_capacity(y.len());
        let mut mask = Vec::with_capacity(y.len());
        let mut obs_idx = Vec::new();
        let mut mis_idx = Vec::new();
        for (i, slot) in y.iter().enumerate() {
            match slot {
                Some(v) => {
                    if !v.is_finite() {
                        return Err(Error::InvalidInput(format!(
                            "observed response at {i} is not finite"
                        )));
                    }
                    yv.push(*v);
                    mask.push(true);
                    obs_idx.push(i);
                }
                None => {
                    yv.push(f64::NAN);
                    mask.push(false);
                    mis_idx.push(i);
                }
            }
        }
        Ok(Self {
            y: yv,
            mask,
            x,
            obs_idx,
            mis_idx,
        })
    }

    /// A dataset with no missing entries.
    pub fn complete(y: Vec<f64>, x: DenseMatrix) -> Result<Self> {
        Self::new(y.into_iter().map(Some).collect(), x)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn n_obs(&self) -> usize {
        self.obs_idx.len()
    }

    pub fn n_mis(&self) -> usize {
        self.mis_idx.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_complete(&self) -> bool {
        self.mis_idx.is_empty()
    }

    pub fn x(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn obs_idx(&self) -> &[usize] {
        &self.obs_idx
    }

    pub fn mis_idx(&self) -> &[usize] {
        &self.mis_idx
    }

    /// Observed responses in index order.
    pub fn y_obs(&self) -> Vec<f64> {
        self.obs_idx.iter().map(|&i| self.y[i]).collect()
    }

    /// Full response vector; missing slots are NaN.
    pub fn y_raw(&self) -> &[f64] {
        &self.y
    }

    /// The observed sub-dataset as a complete dataset over n_o units.
    pub fn restrict_to_observed(&self) -> Result<Dataset> {
        let y = self.y_obs();
        let x = self.x.select_rows(&self.obs_idx)?;
        Dataset::complete(y, x)
    }
}

/// Model parameters. `omega` is the measurement-error variance and `theta`
/// the innovation-to-measurement variance ratio, so sigma2_eps = omega and
/// sigma2_e = theta * omega.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub beta: Vec<f64>,
    pub rho: f64,
    pub omega: f64,
    pub theta: f64,
}

impl Params {
    pub fn sigma2_eps(&self) -> f64 {
        self.omega
    }

    pub fn sigma2_e(&self) -> f64 {
        self.theta * self.omega
    }

    pub fn validate(&self, weights: &SpatialWeights) -> Result<()> {
        if !weights.contains_rho(self.rho) {
            let (lo, hi) = weights.rho_interval();
            return Err(Error::InvalidParameter(format!(
                "rho = {} outside admissible interval ({lo}, {hi})",
                self.rho
            )));
        }
        if !(self.omega > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        if self.theta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "theta must be nonnegative, got {}",
                self.theta
            )));
        }
        Ok(())
    }
}

/// Build `A = I - rho W`, rejecting autocorrelation values outside the
/// admissible interval.
pub fn build_a(weights: &SpatialWeights, rho: f64) -> Result<SparseMatrix> {
    if !weights.contains_rho(rho) {
        let (lo, hi) = weights.rho_interval();
        return Err(Error::InvalidParameter(format!(
            "rho = {rho} outside admissible interval ({lo}, {hi})"
        )));
    }
    SparseMatrix::identity_minus_scaled(weights.matrix(), rho)
}

/// Ordering and symbolic analysis reused across all (rho, theta) iterates of
/// a fit: the structure of A'A does not depend on rho. The structural
/// superset is built from nonnegative data so no entry cancels for any rho.
#[derive(Debug, Clone)]
pub struct SparsityContext {
    perm: Vec<usize>,
    symbolic: CholeskySymbolic,
}

impl SparsityContext {
    pub fn new(weights: &SpatialWeights) -> Result<Self> {
        // (I + W')(I + W) carries the structure of A'A for every rho != 0
        let ipw = SparseMatrix::identity_minus_scaled(weights.matrix(), -1.0)?;
        let ipw_t = ipw.transpose();
        let structure = ipw_t.spgemm(&ipw)?;
        let perm = symbolic_order(&structure, weights.grid_hint())?;
        let symbolic = CholeskySymbolic::analyze(&structure, &perm)?;
        Ok(Self { perm, symbolic })
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn symbolic(&self) -> &CholeskySymbolic {
        &self.symbolic
    }
}

/// Rho-dependent state shared by both likelihood routes: A, A'A, and the
/// factor of A'A under the cached symbolic analysis.
#[derive(Debug)]
pub struct BaseState {
    pub rho: f64,
    pub a: SparseMatrix,
    pub a_t: SparseMatrix,
    pub ata: SparseMatrix,
    pub f_ata: CholeskyFactor,
}

impl BaseState {
    pub fn build(ctx: &SparsityContext, weights: &SpatialWeights, rho: f64) -> Result<Self> {
        let a = build_a(weights, rho)?;
        let a_t = SparseMatrix::identity_minus_scaled(weights.matrix_t(), rho)?;
        let ata = a_t.spgemm(&a)?;
        let f_ata = CholeskyFactor::factor_with_symbolic(&ata, ctx.symbolic(), None)?;
        Ok(Self {
            rho,
            a,
            a_t,
            ata,
            f_ata,
        })
    }

    /// Solve `A M = B` through the normal equations, reusing the SPD factor:
    /// M = (A'A)^{-1} (A' B).
    pub fn solve_a(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        let atb = self.a_t.mul_dense(b)?;
        self.f_ata.solve_mat(&atb)
    }
}

/// Per-(rho, theta) evaluation state for the sparse route: the base state
/// plus the factor of A'A + theta B'B. Kind-independent; the mean structure
/// enters later through the transformed design.
#[derive(Debug)]
pub struct WorkingState {
    pub base: BaseState,
    pub theta: f64,
    pub f_obs: CholeskyFactor,
}

impl WorkingState {
    pub fn build(
        ctx: &SparsityContext,
        weights: &SpatialWeights,
        obs_idx: &[usize],
        rho: f64,
        theta: f64,
    ) -> Result<Self> {
        let base = BaseState::build(ctx, weights, rho)?;
        let f_obs =
            factor_observed_system(&base.f_ata, &base.ata, ctx.symbolic(), obs_idx, theta)?;
        Ok(Self { base, theta, f_obs })
    }

    /// log|V_oo| from the determinant identity: the log-determinant of
    /// A'A + theta B'B minus that of A'A.
    pub fn logdet_v_oo(&self) -> f64 {
        self.f_obs.logdet() - self.base.f_ata.logdet()
    }
}

/// The transformed observed design: X rows at the observed units for H-SEM,
/// rows of A^{-1} X for H-SAM (computed through the SPD factor of A'A).
pub fn xtilde_o(
    kind: ModelKind,
    state: &BaseState,
    x: &DenseMatrix,
    obs_idx: &[usize],
) -> Result<DenseMatrix> {
    match kind {
        ModelKind::Hsem => x.select_rows(obs_idx),
        ModelKind::Hsam => {
            let m = state.solve_a(x)?;
            m.select_rows(obs_idx)
        }
    }
}

/// Observed-mean vector mu_o = Xtilde_o * beta (the transformed design
/// already embeds A^{-1} for H-SAM).
pub fn mean_o(xtilde: &DenseMatrix, beta: &[f64]) -> Result<Vec<f64>> {
    xtilde.mul_vec(beta)
}

/// Complete-data log-likelihood at the given parameters (no missing
/// entries): the joint normal density of y with mean mu and covariance
/// omega V, evaluated through the same determinant and Woodbury identities
/// as the marginal route with every unit observed.
pub fn complete_loglik(
    kind: ModelKind,
    params: &Params,
    weights: &SpatialWeights,
    y_full: &[f64],
    x: &DenseMatrix,
) -> Result<f64> {
    let n = weights.n();
    if y_full.len() != n {
        return Err(Error::DimensionMismatch {
            context: "response length vs weight matrix",
            expected: n,
            got: y_full.len(),
        });
    }
    params.validate(weights)?;
    let all: Vec<usize> = (0..n).collect();
    let ctx = SparsityContext::new(weights)?;
    let state = WorkingState::build(&ctx, weights, &all, params.rho, params.theta)?;
    let xt = xtilde_o(kind, &state.base, x, &all)?;
    let mu = mean_o(&xt, &params.beta)?;
    let r: Vec<f64> = y_full.iter().zip(&mu).map(|(y, m)| y - m).collect();

    let logdet_v = state.logdet_v_oo();
    // r' V^{-1} r = r'r - theta * r' (A'A + theta I)^{-1} r
    let rtr: f64 = r.iter().map(|v| v * v).sum();
    let sol = state.f_obs.solve_vec(&r)?;
    let quad = rtr - params.theta * r.iter().zip(&sol).map(|(a, b)| a * b).sum::<f64>();

    let omega = params.omega;
    Ok(-(n as f64) / 2.0 * (2.0 * std::f64::consts::PI).ln()
        - (n as f64) / 2.0 * omega.ln()
        - 0.5 * logdet_v
        - quad / (2.0 * omega))
}
