//! Standard errors: the regression-coefficient covariance in closed form,
//! the covariance of (rho, sigma2_eps, sigma2_e) from the observed
//! information via central differences, and the coefficient/autocorrelation
//! cross term that the spatial-lag variant requires.

use crate::dense::{DenseCholesky, DenseMatrix};
use crate::error::{Error, Result};
use crate::estimator::{FitResult, LcEngine};
use crate::model::{xtilde_o, Dataset, ModelKind, WorkingState};
use crate::weights::SpatialWeights;
use serde::{Deserialize, Serialize};

/// Default relative step for the finite-difference information matrix.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Standard errors and the pieces they came from. `info_zeta` is the
/// observed information of (rho, sigma2_eps, sigma2_e) at the optimum;
/// `cross_beta_rho` is present only for the spatial-lag model, where the
/// coefficient block and the autocorrelation are not asymptotically
/// independent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StdErrors {
    pub se_beta: Vec<f64>,
    pub se_rho: f64,
    pub se_sigma2_eps: f64,
    pub se_sigma2_e: f64,
    pub info_zeta: [[f64; 3]; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_beta_rho: Option<Vec<f64>>,
    pub fd_step: f64,
}

/// Central-difference Hessian of `f` at `center`, with per-coordinate steps
/// `rel_step * max(|center_i|, 1e-3)`. If any stencil point is undefined the
/// whole stencil shrinks by halves, up to eight times. Returns the
/// symmetrized Hessian and the relative step actually used.
pub fn fd_hessian3<F>(
    mut f: F,
    center: &[f64; 3],
    rel_step: f64,
) -> Result<(DenseMatrix, f64)>
where
    F: FnMut(&[f64; 3]) -> Result<f64>,
{
    let mut step = rel_step;
    'shrink: for _attempt in 0..=8 {
        let h: Vec<f64> = center.iter().map(|&c| step * c.abs().max(1e-3)).collect();
        let mut eval = |dz: [f64; 3]| -> Option<f64> {
            let z = [center[0] + dz[0], center[1] + dz[1], center[2] + dz[2]];
            match f(&z) {
                Ok(v) if v.is_finite() => Some(v),
                _ => None,
            }
        };
        let f0 = match eval([0.0; 3]) {
            Some(v) => v,
            None => {
                step *= 0.5;
                continue 'shrink;
            }
        };
        let mut hess = DenseMatrix::zeros(3, 3);
        for i in 0..3 {
            let mut dp = [0.0; 3];
            dp[i] = h[i];
            let mut dm = [0.0; 3];
            dm[i] = -h[i];
            let (fp, fm) = match (eval(dp), eval(dm)) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    step *= 0.5;
                    continue 'shrink;
                }
            };
            hess.set(i, i, (fp - 2.0 * f0 + fm) / (h[i] * h[i]));
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                let mut dpp = [0.0; 3];
                dpp[i] = h[i];
                dpp[j] = h[j];
                let mut dpm = [0.0; 3];
                dpm[i] = h[i];
                dpm[j] = -h[j];
                let mut dmp = [0.0; 3];
                dmp[i] = -h[i];
                dmp[j] = h[j];
                let mut dmm = [0.0; 3];
                dmm[i] = -h[i];
                dmm[j] = -h[j];
                let vals = (eval(dpp), eval(dpm), eval(dmp), eval(dmm));
                let (a, b, c, d) = match vals {
                    (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
                    _ => {
                        step *= 0.5;
                        continue 'shrink;
                    }
                };
                let v = (a - b - c + d) / (4.0 * h[i] * h[j]);
                hess.set(i, j, v);
                hess.set(j, i, v);
            }
        }
        return Ok((hess, step));
    }
    Err(Error::NonFiniteLikelihood {
        context: Some("finite-difference stencil left the valid domain after 8 shrinks".into()),
    })
}

/// Coefficient covariance omega * (Xtilde' V^{-1} Xtilde)^{-1} at the fitted
/// optimum.
pub fn cov_beta(
    kind: ModelKind,
    fit: &FitResult,
    data: &Dataset,
    weights: &SpatialWeights,
) -> Result<DenseMatrix> {
    let engine = LcEngine::new(kind, data, weights)?;
    let value = engine.lc_param(fit.params.rho, fit.params.theta)?;
    let inv = DenseCholesky::factor(&value.xtvx)
        .map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => Error::RankDeficientDesign,
            other => other,
        })?
        .inverse()?;
    let mut cov = inv;
    let omega = fit.params.omega;
    for j in 0..cov.ncols() {
        for i in 0..cov.nrows() {
            cov.set(i, j, cov.get(i, j) * omega);
        }
    }
    Ok(cov)
}

/// Observed information of zeta = (rho, sigma2_eps, sigma2_e): the
/// central-difference Hessian of the negative marginal log-likelihood with
/// the coefficients held at their estimate. Returns the symmetrized matrix
/// and the relative step used.
pub fn observed_info_zeta(
    kind: ModelKind,
    fit: &FitResult,
    data: &Dataset,
    weights: &SpatialWeights,
    fd_step: Option<f64>,
) -> Result<(DenseMatrix, f64)> {
    let engine = LcEngine::new(kind, data, weights)?;
    let beta = fit.params.beta.clone();
    let center = [fit.params.rho, fit.sigma2_eps, fit.sigma2_e];
    fd_hessian3(
        |z| {
            engine
                .marginal_loglik_fixed_beta(&beta, z[0], z[1], z[2])
                .map(|l| -l)
        },
        &center,
        fd_step.unwrap_or(DEFAULT_FD_STEP),
    )
}

/// Standard errors with the default block treatment: joint (beta, zeta)
/// information for the spatial-lag model, independent blocks otherwise.
pub fn standard_errors(
    kind: ModelKind,
    fit: &FitResult,
    data: &Dataset,
    weights: &SpatialWeights,
) -> Result<StdErrors> {
    standard_errors_with(kind, fit, data, weights, None, kind == ModelKind::Hsam)
}

/// As `standard_errors`, with an explicit finite-difference step and the
/// choice between the joint (beta, zeta) inverse and the block inverse.
pub fn standard_errors_with(
    kind: ModelKind,
    fit: &FitResult,
    data: &Dataset,
    weights: &SpatialWeights,
    fd_step: Option<f64>,
    joint: bool,
) -> Result<StdErrors> {
    let (info, step) = observed_info_zeta(kind, fit, data, weights, fd_step)?;
    let mut info_zeta = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            info_zeta[i][j] = info.get(i, j);
        }
    }

    let engine = LcEngine::new(kind, data, weights)?;
    let value = engine.lc_param(fit.params.rho, fit.params.theta)?;
    let p = value.beta.len();
    let omega = fit.params.omega;

    let cross = match kind {
        ModelKind::Hsem => None,
        ModelKind::Hsam => Some(hsam_cross_beta_rho(&engine, fit)?),
    };

    let (se_beta, se_zeta) = if joint && kind == ModelKind::Hsam {
        // assemble the joint (beta, zeta) information:
        //   [ X'V^{-1}X / omega     c  0  0 ]
        //   [ c'                  I_zeta    ]
        let dim = p + 3;
        let mut joint_info = DenseMatrix::zeros(dim, dim);
        for i in 0..p {
            for j in 0..p {
                joint_info.set(i, j, value.xtvx.get(i, j) / omega);
            }
        }
        let c = cross.as_ref().expect("cross term computed for H-SAM");
        for i in 0..p {
            joint_info.set(i, p, c[i]);
            joint_info.set(p, i, c[i]);
        }
        for i in 0..3 {
            for j in 0..3 {
                joint_info.set(p + i, p + j, info.get(i, j));
            }
        }
        let cov = invert_information(&joint_info)?;
        let se_beta: Vec<f64> = (0..p).map(|i| cov.get(i, i).sqrt()).collect();
        let se_zeta: Vec<f64> = (0..3).map(|i| cov.get(p + i, p + i).sqrt()).collect();
        (se_beta, se_zeta)
    } else {
        let cov_b = cov_beta(kind, fit, data, weights)?;
        let se_beta: Vec<f64> = (0..p).map(|i| cov_b.get(i, i).sqrt()).collect();
        let cov_z = invert_information(&info)?;
        let se_zeta: Vec<f64> = (0..3).map(|i| cov_z.get(i, i).sqrt()).collect();
        (se_beta, se_zeta)
    };

    if se_beta.iter().chain(se_zeta.iter()).any(|s| !s.is_finite()) {
        return Err(Error::SingularInformation {
            eigenvalues: information_eigenvalues(&info),
        });
    }

    Ok(StdErrors {
        se_beta,
        se_rho: se_zeta[0],
        se_sigma2_eps: se_zeta[1],
        se_sigma2_e: se_zeta[2],
        info_zeta,
        cross_beta_rho: cross,
        fd_step: step,
    })
}

/// The (beta, rho) block of the observed information for the spatial-lag
/// model: (1/omega) Xtilde_o' V_oo^{-1} (A^{-1} W A^{-1} X)_o beta, with the
/// inner matrix obtained by two sequential SPD solves through the factor of
/// A'A.
fn hsam_cross_beta_rho(engine: &LcEngine<'_>, fit: &FitResult) -> Result<Vec<f64>> {
    let data = engine.data();
    let weights = engine.weights();
    let obs = data.obs_idx();
    let state = WorkingState::build(
        engine.context(),
        weights,
        obs,
        fit.params.rho,
        fit.params.theta,
    )?;
    let x = data.x();
    let ainv_x = state.base.solve_a(x)?;
    let w_ainv_x = weights.matrix().mul_dense(&ainv_x)?;
    let d_full = state.base.solve_a(&w_ainv_x)?;
    let d_o = d_full.select_rows(obs)?;
    let d_beta = d_o.mul_vec(&fit.params.beta)?;

    // V_oo^{-1} m = m - theta * B (A'A + theta B'B)^{-1} B' m
    let theta = fit.params.theta;
    let v_inv_dbeta: Vec<f64> = if theta > 0.0 {
        let mut full = vec![0.0f64; data.n()];
        for (row, &orig) in obs.iter().enumerate() {
            full[orig] = d_beta[row];
        }
        let sol = state.f_obs.solve_vec(&full)?;
        obs.iter()
            .enumerate()
            .map(|(row, &orig)| d_beta[row] - theta * sol[orig])
            .collect()
    } else {
        d_beta
    };

    let xt = xtilde_o(ModelKind::Hsam, &state.base, x, obs)?;
    let mut cross = vec![0.0f64; x.ncols()];
    for (j, c) in cross.iter_mut().enumerate() {
        let col = xt.col(j);
        *c = col
            .iter()
            .zip(&v_inv_dbeta)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / fit.params.omega;
    }
    Ok(cross)
}

fn invert_information(info: &DenseMatrix) -> Result<DenseMatrix> {
    DenseCholesky::factor(info)
        .map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => Error::SingularInformation {
                eigenvalues: information_eigenvalues(info),
            },
            other => other,
        })?
        .inverse()
}

fn information_eigenvalues(info: &DenseMatrix) -> Vec<f64> {
    let n = info.nrows();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| 0.5 * (info.get(i, j) + info.get(j, i)));
    let mut eig: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    eig
}
