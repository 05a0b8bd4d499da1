//! Synthetic-data generation and the replicate-study driver: draws
//! covariates, innovations, and measurement error on a Rook grid, masks a
//! fixed fraction of responses completely at random, fits each replicate
//! with the requested methods, and aggregates means, mean squared errors,
//! mean standard errors, coverage, and timings.
//!
//! Replicates are reproducible and parallel: each one draws from its own
//! counter-based substream keyed by (seed, replicate_index), and the
//! aggregation pass is sequential so thread scheduling never changes the
//! report.

use crate::error::{Error, Result};
use crate::estimator::{fit, fit_with_errors, FitMethod, FitOptions, FitResult};
use crate::model::{Dataset, ModelKind, Params, SparsityContext, WorkingState};
use crate::weights::SpatialWeights;
use crate::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub kind: ModelKind,
    pub grid: (usize, usize),
    pub beta: Vec<f64>,
    pub rho: f64,
    pub sigma2_eps: f64,
    pub sigma2_e: f64,
    pub missing_frac: f64,
    pub n_replicates: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn n(&self) -> usize {
        self.grid.0 * self.grid.1
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.0 == 0 || self.grid.1 == 0 {
            return Err(Error::InvalidInput("grid dimensions must be positive".into()));
        }
        if self.beta.is_empty() {
            return Err(Error::InvalidInput("beta must have at least an intercept".into()));
        }
        if !(0.0..1.0).contains(&self.missing_frac) {
            return Err(Error::InvalidInput(format!(
                "missing_frac must be in [0, 1), got {}",
                self.missing_frac
            )));
        }
        if self.sigma2_eps < 0.0 || self.sigma2_e < 0.0 {
            return Err(Error::InvalidInput("variances must be nonnegative".into()));
        }
        if self.rho.abs() >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "rho = {} outside the row-normalized interval",
                self.rho
            )));
        }
        Ok(())
    }

    /// Row-normalized Rook weights for this configuration's grid.
    pub fn build_weights(&self) -> Result<SpatialWeights> {
        SpatialWeights::rook_grid(self.grid.0, self.grid.1, true)
    }
}

/// One synthetic draw: the masked dataset plus every latent ingredient.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub dataset: Dataset,
    /// latent process before measurement error
    pub z: Vec<f64>,
    /// spatial error (H-SEM only)
    pub u: Option<Vec<f64>>,
    /// measurement errors
    pub eps: Vec<f64>,
    /// innovations
    pub e: Vec<f64>,
    pub truth: Params,
}

/// Deterministic draw for (config.seed, replicate): covariates standard
/// normal, innovations and measurement errors normal with the configured
/// variances, the latent process solved through A, and exactly
/// round(missing_frac * n) responses masked uniformly at random.
pub fn simulate_one(
    config: &SimConfig,
    weights: &SpatialWeights,
    replicate: usize,
) -> Result<SimulatedData> {
    config.validate()?;
    let n = config.n();
    if weights.n() != n {
        return Err(Error::DimensionMismatch {
            context: "weights vs simulation grid",
            expected: n,
            got: weights.n(),
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    rng.set_stream(replicate as u64);

    let p = config.beta.len();
    let mut x = DenseMatrix::zeros(n, p);
    for i in 0..n {
        x.set(i, 0, 1.0);
    }
    for j in 1..p {
        for i in 0..n {
            let v: f64 = rng.sample(StandardNormal);
            x.set(i, j, v);
        }
    }
    let sd_e = config.sigma2_e.sqrt();
    let e: Vec<f64> = (0..n)
        .map(|_| sd_e * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let sd_eps = config.sigma2_eps.sqrt();
    let eps: Vec<f64> = (0..n)
        .map(|_| sd_eps * rng.sample::<f64, _>(StandardNormal))
        .collect();

    // mask drawn before the response exists: missing at random by design
    let n_missing = (config.missing_frac * n as f64).round() as usize;
    let mut slots: Vec<usize> = (0..n).collect();
    for i in 0..n_missing {
        let j = rng.random_range(i..n);
        slots.swap(i, j);
    }
    let mut is_missing = vec![false; n];
    for &s in &slots[..n_missing] {
        is_missing[s] = true;
    }

    let xb = x.mul_vec(&config.beta)?;
    let ctx = SparsityContext::new(weights)?;
    let state = WorkingState::build(&ctx, weights, &[], config.rho, 0.0)?;
    let (z, u) = match config.kind {
        ModelKind::Hsem => {
            let u = state.base.solve_a(&DenseMatrix::from_vec(e.clone()))?;
            let u = u.col(0).to_vec();
            let z: Vec<f64> = xb.iter().zip(&u).map(|(a, b)| a + b).collect();
            (z, Some(u))
        }
        ModelKind::Hsam => {
            let rhs: Vec<f64> = xb.iter().zip(&e).map(|(a, b)| a + b).collect();
            let z = state.base.solve_a(&DenseMatrix::from_vec(rhs))?;
            (z.col(0).to_vec(), None)
        }
    };
    let y: Vec<Option<f64>> = (0..n)
        .map(|i| {
            if is_missing[i] {
                None
            } else {
                Some(z[i] + eps[i])
            }
        })
        .collect();

    let truth = Params {
        beta: config.beta.clone(),
        rho: config.rho,
        omega: config.sigma2_eps,
        theta: if config.sigma2_eps > 0.0 {
            config.sigma2_e / config.sigma2_eps
        } else {
            0.0
        },
    };
    Ok(SimulatedData {
        dataset: Dataset::new(y, x)?,
        z,
        u,
        eps,
        e,
        truth,
    })
}

/// Per-parameter aggregate over the successful replicates of one method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamStat {
    pub name: String,
    pub truth: f64,
    pub mean_est: f64,
    pub mse: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_se: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: FitMethod,
    pub n_ok: usize,
    pub n_failed: usize,
    /// replicates whose observed information was positive definite
    pub n_info_pd: usize,
    pub mean_fit_secs: f64,
    pub params: Vec<ParamStat>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyReport {
    pub schema_version: u32,
    pub config: SimConfig,
    pub methods: Vec<FitMethod>,
    pub reports: Vec<MethodReport>,
}

impl StudyReport {
    /// Aligned text table: one block per method, one row per parameter with
    /// mean estimate, MSE, mean standard error, and coverage.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "model {} grid {}x{} n={} replicates={} missing={:.0}%\n",
            self.config.kind,
            self.config.grid.0,
            self.config.grid.1,
            self.config.n(),
            self.config.n_replicates,
            self.config.missing_frac * 100.0
        ));
        for rep in &self.reports {
            out.push_str(&format!(
                "\n[{}] ok={} failed={} mean fit {:.3}s\n",
                rep.method, rep.n_ok, rep.n_failed, rep.mean_fit_secs
            ));
            out.push_str(&format!(
                "{:<12} {:>10} {:>12} {:>12} {:>10} {:>9}\n",
                "parameter", "truth", "mean est", "mse", "mean se", "coverage"
            ));
            for p in &rep.params {
                let se = p
                    .mean_se
                    .map(|v| format!("{v:>10.4}"))
                    .unwrap_or_else(|| format!("{:>10}", "-"));
                let cov = p
                    .coverage
                    .map(|v| format!("{v:>9.4}"))
                    .unwrap_or_else(|| format!("{:>9}", "-"));
                out.push_str(&format!(
                    "{:<12} {:>10.4} {:>12.4} {:>12.4} {} {}\n",
                    p.name, p.truth, p.mean_est, p.mse, se, cov
                ));
            }
        }
        out
    }
}

/// Options for the replicate study driver.
#[derive(Debug, Clone)]
pub struct StudyOptions {
    pub fit: FitOptions,
    pub compute_se: bool,
    /// worker threads; None uses the machine default, Some(1) is sequential
    pub threads: Option<usize>,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            compute_se: true,
            threads: None,
        }
    }
}

fn run_replicate(
    config: &SimConfig,
    weights: &SpatialWeights,
    methods: &[FitMethod],
    options: &StudyOptions,
    replicate: usize,
) -> Vec<Result<FitResult>> {
    let sim = match simulate_one(config, weights, replicate) {
        Ok(s) => s,
        Err(e) => {
            let msg = e.to_string();
            return methods
                .iter()
                .map(|_| Err(Error::InvalidInput(format!("simulation failed: {msg}"))))
                .collect();
        }
    };
    methods
        .iter()
        .map(|&method| {
            let opts = FitOptions {
                method,
                ..options.fit.clone()
            };
            if options.compute_se {
                fit_with_errors(config.kind, &sim.dataset, weights, &opts)
            } else {
                fit(config.kind, &sim.dataset, weights, &opts)
            }
        })
        .collect()
}

/// Simulate `config.n_replicates` datasets, fit each with every method, and
/// aggregate. Failed fits are counted and excluded; nothing is fatal.
pub fn run_study(
    config: &SimConfig,
    methods: &[FitMethod],
    options: &StudyOptions,
) -> Result<StudyReport> {
    if methods.is_empty() {
        return Err(Error::InvalidInput("study requires at least one method".into()));
    }
    config.validate()?;
    let weights = config.build_weights()?;
    let reps = config.n_replicates;

    let all: Vec<Vec<Result<FitResult>>> =
        map_replicates(reps, options.threads, |r| {
            run_replicate(config, &weights, methods, options, r)
        });

    let mut reports = Vec::with_capacity(methods.len());
    for (mi, &method) in methods.iter().enumerate() {
        reports.push(aggregate_method(config, method, all.iter().map(|r| &r[mi])));
    }
    Ok(StudyReport {
        schema_version: crate::SCHEMA_VERSION,
        config: config.clone(),
        methods: methods.to_vec(),
        reports,
    })
}

/// Sequential study driver; compiled unconditionally and used by the
/// benchmark suite as the baseline against the parallel path.
pub fn run_study_sequential(
    config: &SimConfig,
    methods: &[FitMethod],
    options: &StudyOptions,
) -> Result<StudyReport> {
    let opts = StudyOptions {
        threads: Some(1),
        ..options.clone()
    };
    run_study(config, methods, &opts)
}

#[cfg(feature = "parallel")]
fn map_replicates<F>(reps: usize, threads: Option<usize>, f: F) -> Vec<Vec<Result<FitResult>>>
where
    F: Fn(usize) -> Vec<Result<FitResult>> + Sync,
{
    use rayon::prelude::*;
    match threads {
        Some(1) => (0..reps).map(f).collect(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .expect("thread pool construction")
            .install(|| (0..reps).into_par_iter().map(&f).collect()),
        None => (0..reps).into_par_iter().map(&f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn map_replicates<F>(reps: usize, _threads: Option<usize>, f: F) -> Vec<Vec<Result<FitResult>>>
where
    F: Fn(usize) -> Vec<Result<FitResult>> + Sync,
{
    (0..reps).map(f).collect()
}

fn aggregate_method<'a>(
    config: &SimConfig,
    method: FitMethod,
    results: impl Iterator<Item = &'a Result<FitResult>>,
) -> MethodReport {
    let p = config.beta.len();
    let mut names: Vec<String> = (0..p).map(|j| format!("beta{j}")).collect();
    names.push("rho".into());
    names.push("sigma2_eps".into());
    names.push("sigma2_e".into());
    let theta_truth = if config.sigma2_eps > 0.0 {
        config.sigma2_e / config.sigma2_eps
    } else {
        0.0
    };
    let _ = theta_truth;
    let mut truths: Vec<f64> = config.beta.clone();
    truths.push(config.rho);
    truths.push(config.sigma2_eps);
    truths.push(config.sigma2_e);

    let dim = truths.len();
    let mut n_ok = 0usize;
    let mut n_failed = 0usize;
    let mut n_info_pd = 0usize;
    let mut secs = 0.0f64;
    let mut sum = vec![0.0f64; dim];
    let mut sq = vec![0.0f64; dim];
    let mut se_sum = vec![0.0f64; dim];
    let mut cover = vec![0usize; dim];
    let mut n_se = 0usize;

    for res in results {
        match res {
            Err(_) => n_failed += 1,
            Ok(r) => {
                n_ok += 1;
                secs += r.timing.estimation_secs;
                let mut ests: Vec<f64> = r.params.beta.clone();
                ests.resize(p, f64::NAN); // baseline could in principle differ
                ests.push(r.params.rho);
                ests.push(r.sigma2_eps);
                ests.push(r.sigma2_e);
                for i in 0..dim {
                    sum[i] += ests[i];
                    let d = ests[i] - truths[i];
                    sq[i] += d * d;
                }
                if let Some(se) = &r.se {
                    n_se += 1;
                    let mut ses: Vec<f64> = se.se_beta.clone();
                    ses.resize(p, f64::NAN);
                    ses.push(se.se_rho);
                    ses.push(se.se_sigma2_eps);
                    ses.push(se.se_sigma2_e);
                    for i in 0..dim {
                        se_sum[i] += ses[i];
                        if (ests[i] - truths[i]).abs() <= 1.96 * ses[i] {
                            cover[i] += 1;
                        }
                    }
                    if info_is_pd(&se.info_zeta) {
                        n_info_pd += 1;
                    }
                }
            }
        }
    }

    let params = (0..dim)
        .map(|i| ParamStat {
            name: names[i].clone(),
            truth: truths[i],
            mean_est: if n_ok > 0 { sum[i] / n_ok as f64 } else { f64::NAN },
            mse: if n_ok > 0 { sq[i] / n_ok as f64 } else { f64::NAN },
            mean_se: (n_se > 0).then(|| se_sum[i] / n_se as f64),
            coverage: (n_se > 0).then(|| cover[i] as f64 / n_se as f64),
        })
        .collect();

    MethodReport {
        method,
        n_ok,
        n_failed,
        n_info_pd,
        mean_fit_secs: if n_ok > 0 { secs / n_ok as f64 } else { f64::NAN },
        params,
    }
}

fn info_is_pd(info: &[[f64; 3]; 3]) -> bool {
    let m = nalgebra::DMatrix::from_fn(3, 3, |i, j| 0.5 * (info[i][j] + info[j][i]));
    m.symmetric_eigen().eigenvalues.iter().all(|&e| e > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> SimConfig {
        SimConfig {
            kind: ModelKind::Hsem,
            grid: (8, 8),
            beta: vec![1.0, 5.0],
            rho: 0.8,
            sigma2_eps: 2.0,
            sigma2_e: 1.0,
            missing_frac: 0.5,
            n_replicates: 2,
            seed: 99,
        }
    }

    #[test]
    fn simulation_is_reproducible() {
        let cfg = base_config();
        let w = cfg.build_weights().unwrap();
        let a = simulate_one(&cfg, &w, 3).unwrap();
        let b = simulate_one(&cfg, &w, 3).unwrap();
        assert_eq!(a.dataset.y_raw().len(), b.dataset.y_raw().len());
        for (x, y) in a.eps.iter().zip(&b.eps) {
            assert_eq!(x, y);
        }
        for i in 0..a.dataset.n() {
            let (ya, yb) = (a.dataset.y_raw()[i], b.dataset.y_raw()[i]);
            assert!(ya.to_bits() == yb.to_bits() || (ya.is_nan() && yb.is_nan()));
        }
        // different replicates differ
        let c = simulate_one(&cfg, &w, 4).unwrap();
        assert!(a.eps.iter().zip(&c.eps).any(|(x, y)| x != y));
    }

    #[test]
    fn missing_count_is_exact() {
        let mut cfg = base_config();
        cfg.missing_frac = 0.37;
        let w = cfg.build_weights().unwrap();
        let sim = simulate_one(&cfg, &w, 0).unwrap();
        let k = (0.37f64 * 64.0).round() as usize;
        assert_eq!(sim.dataset.n_mis(), k);

        cfg.missing_frac = 0.0;
        let sim = simulate_one(&cfg, &w, 0).unwrap();
        assert!(sim.dataset.is_complete());
    }

    #[test]
    fn noise_free_hsem_is_exactly_the_regression_surface() {
        let mut cfg = base_config();
        cfg.sigma2_e = 0.0;
        cfg.sigma2_eps = 0.0;
        cfg.missing_frac = 0.0;
        let w = cfg.build_weights().unwrap();
        let sim = simulate_one(&cfg, &w, 1).unwrap();
        let xb = sim.dataset.x().mul_vec(&cfg.beta).unwrap();
        for i in 0..sim.dataset.n() {
            assert!((sim.dataset.y_raw()[i] - xb[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn y_is_z_plus_eps_everywhere() {
        let cfg = base_config();
        let w = cfg.build_weights().unwrap();
        let sim = simulate_one(&cfg, &w, 7).unwrap();
        for (i, &obs) in sim.dataset.mask().iter().enumerate() {
            if obs {
                assert!((sim.dataset.y_raw()[i] - (sim.z[i] + sim.eps[i])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn measurement_error_variance_matches_at_large_n() {
        let cfg = SimConfig {
            grid: (71, 71),
            n_replicates: 1,
            ..base_config()
        };
        let w = cfg.build_weights().unwrap();
        let sim = simulate_one(&cfg, &w, 0).unwrap();
        let n = sim.eps.len() as f64;
        let var = sim.eps.iter().map(|v| v * v).sum::<f64>() / n;
        assert!(
            (var - cfg.sigma2_eps).abs() < 0.1 * cfg.sigma2_eps,
            "sample var {var} vs {}",
            cfg.sigma2_eps
        );
    }

    #[test]
    fn mask_is_independent_of_noise() {
        let cfg = SimConfig {
            grid: (31, 31),
            ..base_config()
        };
        let w = cfg.build_weights().unwrap();
        let sim = simulate_one(&cfg, &w, 0).unwrap();
        let n = sim.dataset.n() as f64;
        let mean_mask = sim.dataset.n_obs() as f64 / n;
        let mean_eps = sim.eps.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut var_m = 0.0;
        let mut var_e = 0.0;
        for (i, &obs) in sim.dataset.mask().iter().enumerate() {
            let m = if obs { 1.0 } else { 0.0 };
            cov += (m - mean_mask) * (sim.eps[i] - mean_eps);
            var_m += (m - mean_mask) * (m - mean_mask);
            var_e += (sim.eps[i] - mean_eps) * (sim.eps[i] - mean_eps);
        }
        let corr = cov / (var_m.sqrt() * var_e.sqrt());
        assert!(corr.abs() < 3.0 / n.sqrt(), "corr = {corr}");
    }

    #[test]
    fn study_aggregates_and_path_equivalence() {
        let cfg = SimConfig {
            grid: (12, 12),
            n_replicates: 2,
            missing_frac: 0.3,
            ..base_config()
        };
        let opts = StudyOptions {
            compute_se: false,
            threads: Some(1),
            ..StudyOptions::default()
        };
        let report = run_study(&cfg, &[FitMethod::MmlP, FitMethod::MmlD], &opts).unwrap();
        assert_eq!(report.reports.len(), 2);
        let p = &report.reports[0];
        let d = &report.reports[1];
        assert_eq!(p.n_ok, 2);
        assert_eq!(d.n_ok, 2);
        for (a, b) in p.params.iter().zip(&d.params) {
            assert!(
                (a.mean_est - b.mean_est).abs() <= 1e-6 * a.mean_est.abs().max(1.0),
                "{}: {} vs {}",
                a.name,
                a.mean_est,
                b.mean_est
            );
        }
        let table = report.to_table();
        assert!(table.contains("rho"));
        assert!(table.contains("mml-p"));
    }

    #[test]
    fn mml_beats_oml_mse_at_high_missingness() {
        // directional claim at scaled-down replicate counts, the 90%-missing
        // counterpart of the acceptance study
        for kind in [ModelKind::Hsem, ModelKind::Hsam] {
            let cfg = SimConfig {
                kind,
                grid: (51, 51),
                missing_frac: 0.9,
                n_replicates: 8,
                seed: 424_242,
                ..base_config()
            };
            let report = run_study(
                &cfg,
                &[FitMethod::Oml, FitMethod::MmlP],
                &StudyOptions {
                    compute_se: false,
                    ..StudyOptions::default()
                },
            )
            .unwrap();
            let mse = |r: &MethodReport| {
                r.params
                    .iter()
                    .find(|p| p.name == "rho")
                    .unwrap()
                    .mse
            };
            let (oml, mml) = (mse(&report.reports[0]), mse(&report.reports[1]));
            assert!(
                mml < oml,
                "{kind}: MSE(MML-P) = {mml} not below MSE(OML) = {oml} at 90% missing"
            );
        }
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_and_sequential_studies_agree_exactly() {
        let cfg = SimConfig {
            n_replicates: 4,
            missing_frac: 0.4,
            ..base_config()
        };
        let seq = run_study_sequential(
            &cfg,
            &[FitMethod::MmlP],
            &StudyOptions {
                compute_se: false,
                ..StudyOptions::default()
            },
        )
        .unwrap();
        let par = run_study(
            &cfg,
            &[FitMethod::MmlP],
            &StudyOptions {
                compute_se: false,
                threads: Some(4),
                ..StudyOptions::default()
            },
        )
        .unwrap();
        for (a, b) in seq.reports[0].params.iter().zip(&par.reports[0].params) {
            assert_eq!(a.mean_est.to_bits(), b.mean_est.to_bits());
            assert_eq!(a.mse.to_bits(), b.mse.to_bits());
        }
    }
}
