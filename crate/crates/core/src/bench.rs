//! Empirical-complexity harness: time a kernel across grid sizes at fixed
//! (rho, theta) and fit the power law t = b * n^alpha by least squares on
//! the log scale.

use crate::error::{Error, Result};
use crate::estimator::{fit, lc_direct_cached, lc_param_cached, FitMethod, FitOptions};
use crate::model::{BaseState, ModelKind, SparsityContext};
use crate::simulate::{simulate_one, SimConfig};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Evaluation point used by every kernel.
pub const BENCH_RHO: f64 = 0.8;
pub const BENCH_THETA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    /// Numeric factorization of A'A under the cached symbolic analysis.
    CholAta,
    /// One forward/backward solve against the factor of A'A.
    SolveFb,
    /// Dense formation of the observed block of (A'A)^{-1} by selected solves.
    DirectInverse,
    /// One concentrated-likelihood evaluation, sparse route.
    LcParamEval,
    /// One concentrated-likelihood evaluation, direct route.
    LcDirectEval,
    /// A complete fit, sparse route.
    FullFitP,
    /// A complete fit, direct route.
    FullFitD,
}

impl std::fmt::Display for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Kernel::CholAta => "chol-ata",
            Kernel::SolveFb => "solve-fb",
            Kernel::DirectInverse => "direct-inverse",
            Kernel::LcParamEval => "lc-param-eval",
            Kernel::LcDirectEval => "lc-direct-eval",
            Kernel::FullFitP => "full-fit-p",
            Kernel::FullFitD => "full-fit-d",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for Kernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chol-ata" => Ok(Kernel::CholAta),
            "solve-fb" => Ok(Kernel::SolveFb),
            "direct-inverse" => Ok(Kernel::DirectInverse),
            "lc-param-eval" => Ok(Kernel::LcParamEval),
            "lc-direct-eval" => Ok(Kernel::LcDirectEval),
            "full-fit-p" => Ok(Kernel::FullFitP),
            "full-fit-d" => Ok(Kernel::FullFitD),
            other => Err(Error::InvalidInput(format!("unknown kernel '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchOptions {
    /// Repetitions per size; None uses 20 at small sizes decaying to 5.
    pub reps: Option<usize>,
    pub missing_frac: f64,
    /// Kernels allocating more than this many bytes for dense blocks skip
    /// the size instead of thrashing.
    pub memory_cap_bytes: usize,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            reps: None,
            missing_frac: 0.5,
            memory_cap_bytes: 2 << 30,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchResult {
    pub schema_version: u32,
    pub kernel: String,
    pub sizes: Vec<usize>,
    pub mean_secs: Vec<f64>,
    pub sd_secs: Vec<f64>,
    pub reps: Vec<usize>,
    pub alpha: f64,
    pub b: f64,
    pub r_squared: f64,
    /// sizes skipped with the reason (memory guard, non-square, ...)
    pub skipped: Vec<(usize, String)>,
}

impl BenchResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,mean_secs,sd_secs,reps\n");
        for i in 0..self.sizes.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.sizes[i], self.mean_secs[i], self.sd_secs[i], self.reps[i]
            ));
        }
        out
    }
}

fn default_reps(n: usize) -> usize {
    if n <= 2500 {
        20
    } else if n <= 10_000 {
        10
    } else {
        5
    }
}

/// Least-squares fit of log t = log b + alpha log n.
/// Returns (alpha, b, r_squared).
pub fn fit_power_law(sizes: &[usize], times: &[f64]) -> (f64, f64, f64) {
    assert_eq!(sizes.len(), times.len());
    let k = sizes.len() as f64;
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = times.iter().map(|&t| t.max(1e-12).ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let alpha = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - alpha * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let fit = intercept + alpha * x;
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - my) * (y - my);
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (alpha, intercept.exp(), r2)
}

/// Time a prepared closure per size: one warm-up run, then `reps` timed
/// runs. The generic entry point doubles as the test seam for dummy kernels.
pub fn bench_prepared<P>(
    name: &str,
    sizes: &[usize],
    options: &BenchOptions,
    mut prepare: P,
) -> BenchResult
where
    P: FnMut(usize) -> Result<Box<dyn FnMut() -> Result<()>>>,
{
    let mut kept_sizes = Vec::new();
    let mut mean_secs = Vec::new();
    let mut sd_secs = Vec::new();
    let mut reps_used = Vec::new();
    let mut skipped = Vec::new();

    for &n in sizes {
        let mut runner = match prepare(n) {
            Ok(r) => r,
            Err(e) => {
                skipped.push((n, e.to_string()));
                continue;
            }
        };
        let reps = options.reps.unwrap_or_else(|| default_reps(n));
        // warm-up excluded from the statistics
        if let Err(e) = runner() {
            skipped.push((n, e.to_string()));
            continue;
        }
        let mut samples = Vec::with_capacity(reps);
        let mut failed = None;
        for _ in 0..reps {
            let t0 = Instant::now();
            if let Err(e) = runner() {
                failed = Some(e);
                break;
            }
            samples.push(t0.elapsed().as_secs_f64());
        }
        if let Some(e) = failed {
            skipped.push((n, e.to_string()));
            continue;
        }
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples
            .iter()
            .map(|s| (s - mean) * (s - mean))
            .sum::<f64>()
            / samples.len() as f64;
        kept_sizes.push(n);
        mean_secs.push(mean);
        sd_secs.push(var.sqrt());
        reps_used.push(reps);
    }

    let (alpha, b, r_squared) = if kept_sizes.len() >= 2 {
        fit_power_law(&kept_sizes, &mean_secs)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    BenchResult {
        schema_version: crate::SCHEMA_VERSION,
        kernel: name.to_string(),
        sizes: kept_sizes,
        mean_secs,
        sd_secs,
        reps: reps_used,
        alpha,
        b,
        r_squared,
        skipped,
    }
}

/// Benchmark one named kernel over square-grid sizes. Each size builds Rook
/// weights on a sqrt(n) x sqrt(n) grid and one simulated dataset with the
/// configured missing fraction; the kernel then runs at the fixed
/// (rho, theta) evaluation point. Timed sections are single-threaded.
pub fn bench_kernel(kernel: Kernel, sizes: &[usize], options: &BenchOptions) -> BenchResult {
    let opts = options.clone();
    bench_prepared(&kernel.to_string(), sizes, options, move |n| {
        prepare_kernel(kernel, n, &opts)
    })
}

fn prepare_kernel(
    kernel: Kernel,
    n: usize,
    options: &BenchOptions,
) -> Result<Box<dyn FnMut() -> Result<()>>> {
    let side = (n as f64).sqrt().round() as usize;
    if side * side != n {
        return Err(Error::InvalidInput(format!(
            "size {n} is not a perfect square grid"
        )));
    }
    let config = SimConfig {
        kind: ModelKind::Hsem,
        grid: (side, side),
        beta: vec![1.0, 5.0],
        rho: BENCH_RHO,
        sigma2_eps: 2.0,
        sigma2_e: 1.0,
        missing_frac: options.missing_frac,
        n_replicates: 1,
        seed: options.seed,
    };
    let weights = config.build_weights()?;
    let sim = simulate_one(&config, &weights, 0)?;
    let data = sim.dataset;
    let n_o = data.n_obs();

    let dense_block_bytes = n_o.saturating_mul(n_o).saturating_mul(8);
    let needs_dense = matches!(
        kernel,
        Kernel::DirectInverse | Kernel::LcDirectEval | Kernel::FullFitD
    );
    if needs_dense && dense_block_bytes > options.memory_cap_bytes {
        return Err(Error::InvalidInput(format!(
            "dense observed block would use {dense_block_bytes} bytes, over the cap"
        )));
    }

    match kernel {
        Kernel::CholAta => {
            let ctx = SparsityContext::new(&weights)?;
            Ok(Box::new(move || {
                let state = BaseState::build(&ctx, &weights, BENCH_RHO)?;
                std::hint::black_box(state.f_ata.logdet());
                Ok(())
            }))
        }
        Kernel::SolveFb => {
            let ctx = SparsityContext::new(&weights)?;
            let state = BaseState::build(&ctx, &weights, BENCH_RHO)?;
            let rhs: Vec<f64> = (0..n).map(|i| ((i % 17) as f64) * 0.1 - 0.5).collect();
            Ok(Box::new(move || {
                let x = state.f_ata.solve_vec(&rhs)?;
                std::hint::black_box(x[0]);
                Ok(())
            }))
        }
        Kernel::DirectInverse => {
            let ctx = SparsityContext::new(&weights)?;
            let state = BaseState::build(&ctx, &weights, BENCH_RHO)?;
            let obs = data.obs_idx().to_vec();
            Ok(Box::new(move || {
                // observed block of (A'A)^{-1}, one selected solve per column
                let mut unit = vec![0.0f64; n];
                let mut acc = 0.0;
                for &j in &obs {
                    unit[j] = 1.0;
                    let s = state.f_ata.solve_vec(&unit)?;
                    unit[j] = 0.0;
                    acc += s[j];
                }
                std::hint::black_box(acc);
                Ok(())
            }))
        }
        Kernel::LcParamEval => {
            let ctx = SparsityContext::new(&weights)?;
            Ok(Box::new(move || {
                let v = lc_param_cached(
                    ModelKind::Hsem,
                    &ctx,
                    &data,
                    &weights,
                    BENCH_RHO,
                    BENCH_THETA,
                )?;
                std::hint::black_box(v.lc);
                Ok(())
            }))
        }
        Kernel::LcDirectEval => {
            let ctx = SparsityContext::new(&weights)?;
            Ok(Box::new(move || {
                let v = lc_direct_cached(
                    ModelKind::Hsem,
                    &ctx,
                    &data,
                    &weights,
                    BENCH_RHO,
                    BENCH_THETA,
                    usize::MAX,
                )?;
                std::hint::black_box(v.lc);
                Ok(())
            }))
        }
        Kernel::FullFitP => Ok(Box::new(move || {
            let r = fit(
                ModelKind::Hsem,
                &data,
                &weights,
                &FitOptions::with_method(FitMethod::MmlP),
            )?;
            std::hint::black_box(r.loglik);
            Ok(())
        })),
        Kernel::FullFitD => Ok(Box::new(move || {
            let r = fit(
                ModelKind::Hsem,
                &data,
                &weights,
                &FitOptions {
                    direct_cap: usize::MAX,
                    ..FitOptions::with_method(FitMethod::MmlD)
                },
            )?;
            std::hint::black_box(r.loglik);
            Ok(())
        })),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_fit_recovers_known_exponent() {
        let sizes = vec![100usize, 400, 1600, 6400];
        let times: Vec<f64> = sizes.iter().map(|&n| 3e-9 * (n as f64).powf(1.5)).collect();
        let (alpha, b, r2) = fit_power_law(&sizes, &times);
        assert!((alpha - 1.5).abs() < 1e-9);
        assert!((b - 3e-9).abs() < 1e-12);
        assert!(r2 > 0.999999);
    }

    #[test]
    fn constant_time_dummy_kernel_has_near_zero_exponent() {
        let sizes = vec![100usize, 400, 900, 1600];
        let result = bench_prepared(
            "dummy",
            &sizes,
            &BenchOptions {
                reps: Some(5),
                ..BenchOptions::default()
            },
            |_n| {
                Ok(Box::new(move || {
                    // fixed work independent of n
                    let mut acc = 0.0f64;
                    for i in 0..200_000u64 {
                        acc += std::hint::black_box((i as f64).sqrt());
                    }
                    std::hint::black_box(acc);
                    Ok(())
                }) as Box<dyn FnMut() -> Result<()>>)
            },
        );
        assert!(
            result.alpha.abs() < 0.1,
            "dummy kernel exponent {} should be near zero",
            result.alpha
        );
    }

    #[test]
    fn non_square_sizes_are_skipped_with_note() {
        let result = bench_kernel(
            Kernel::CholAta,
            &[99, 100],
            &BenchOptions {
                reps: Some(2),
                ..BenchOptions::default()
            },
        );
        assert_eq!(result.sizes, vec![100]);
        assert_eq!(result.skipped.len(), 1);
        assert_eq!(result.skipped[0].0, 99);
    }

    #[test]
    fn memory_guard_skips_oversized_dense_kernels() {
        let result = bench_kernel(
            Kernel::LcDirectEval,
            &[400],
            &BenchOptions {
                reps: Some(1),
                memory_cap_bytes: 1024,
                ..BenchOptions::default()
            },
        );
        assert!(result.sizes.is_empty());
        assert_eq!(result.skipped.len(), 1);
    }

    #[test]
    fn mean_time_is_monotone_with_slack() {
        let result = bench_kernel(
            Kernel::CholAta,
            &[400, 1600, 6400],
            &BenchOptions {
                reps: Some(5),
                ..BenchOptions::default()
            },
        );
        assert_eq!(result.sizes.len(), 3);
        for w in result.mean_secs.windows(2) {
            assert!(w[1] >= 0.9 * w[0], "time regressed: {} -> {}", w[0], w[1]);
        }
        // a decade of sizes with a clean power law
        assert!(result.r_squared >= 0.95, "r^2 = {}", result.r_squared);
    }

    #[test]
    fn csv_rendering_is_well_formed() {
        let result = bench_kernel(
            Kernel::SolveFb,
            &[100, 225],
            &BenchOptions {
                reps: Some(3),
                ..BenchOptions::default()
            },
        );
        let csv = result.to_csv();
        assert!(csv.starts_with("n,mean_secs,sd_secs,reps\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
