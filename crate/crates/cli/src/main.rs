//! Command-line front end: simulate, fit, study, and bench subcommands with
//! CSV/Matrix Market/JSON file I/O. Exit codes: 0 success, 1 input or
//! runtime error, 2 fit did not converge.

mod manifest;

use clap::{Args, Parser, Subcommand};
use hsar::bench::{bench_kernel, BenchOptions, Kernel};
use hsar::estimator::{fit, fit_with_errors, FitMethod, FitOptions};
use hsar::io::{
    read_dataset_csv, read_matrix_market, read_neighbor_list, write_dataset_csv,
    write_matrix_market, MatrixMarketKind,
};
use hsar::model::{Dataset, ModelKind};
use hsar::simulate::{run_study, simulate_one, SimConfig, StudyOptions};
use hsar::weights::{Normalization, SpatialWeights};
use manifest::RunManifest;
use serde::Serialize;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hsar",
    version,
    about = "Hierarchical SAR models with measurement error and missing responses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a dataset CSV and a weight matrix file.
    Fit(FitArgs),
    /// Generate one synthetic dataset (CSV + truth JSON + weights).
    Simulate(SimArgs),
    /// Run a replicate study and report estimate quality per method.
    Study(StudyArgs),
    /// Time a kernel across grid sizes and fit the complexity exponent.
    Bench(BenchArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Model kind: hsem or hsam.
    #[arg(long)]
    model: String,
    /// Estimation method: mml-p, mml-d, oml, or fml.
    #[arg(long)]
    method: String,
    /// Dataset CSV: header row, response column `y` (empty/NA/NaN = missing).
    #[arg(long)]
    data: PathBuf,
    /// Weight matrix: Matrix Market or neighbor-list text (sniffed).
    #[arg(long)]
    weights: PathBuf,
    /// Row-normalize the weight matrix after reading.
    #[arg(long, default_value_t = false)]
    row_normalize: bool,
    /// Do not prepend an intercept column to the covariates.
    #[arg(long, default_value_t = false)]
    no_intercept: bool,
    /// Optimizer convergence threshold.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_evals: usize,
    /// Compute standard errors: on or off.
    #[arg(long, default_value = "on")]
    se: String,
    /// Observed-unit cap for the direct route.
    #[arg(long, default_value_t = 4000)]
    direct_cap: usize,
    /// Output JSON path.
    #[arg(long, default_value = "fit.json")]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct SimArgs {
    /// Optional key=value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "hsem")]
    model: String,
    /// Grid as ROWSxCOLS, e.g. 71x71.
    #[arg(long, default_value = "71x71")]
    grid: String,
    /// Comma-separated regression coefficients (intercept first).
    #[arg(long, default_value = "1,5")]
    beta: String,
    #[arg(long, default_value_t = 0.8)]
    rho: f64,
    #[arg(long, default_value_t = 2.0)]
    sigma2_eps: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma2_e: f64,
    #[arg(long, default_value_t = 0.5)]
    missing: f64,
    #[arg(long, default_value_t = 1)]
    replicates: usize,
    #[arg(long, default_value_t = 20240901)]
    seed: u64,
    /// Replicate index to write out.
    #[arg(long, default_value_t = 0)]
    replicate: usize,
    #[arg(long, default_value = "simulated.csv")]
    out_data: PathBuf,
    #[arg(long, default_value = "truth.json")]
    out_truth: PathBuf,
    #[arg(long, default_value = "weights.mtx")]
    out_weights: PathBuf,
}

#[derive(Args, Clone)]
struct StudyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "hsem")]
    model: String,
    #[arg(long, default_value = "71x71")]
    grid: String,
    #[arg(long, default_value = "1,5")]
    beta: String,
    #[arg(long, default_value_t = 0.8)]
    rho: f64,
    #[arg(long, default_value_t = 2.0)]
    sigma2_eps: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma2_e: f64,
    #[arg(long, default_value_t = 0.5)]
    missing: f64,
    #[arg(long, default_value_t = 250)]
    replicates: usize,
    #[arg(long, default_value_t = 20240901)]
    seed: u64,
    /// Comma-separated methods, e.g. oml,mml-p.
    #[arg(long, default_value = "oml,mml-p")]
    methods: String,
    #[arg(long, default_value = "on")]
    se: String,
    /// Worker threads (default: machine parallelism; HSAR_THREADS as fallback).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "study.json")]
    out: PathBuf,
    /// Also write the aligned text table to this path.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct BenchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Kernel: chol-ata, solve-fb, direct-inverse, lc-param-eval,
    /// lc-direct-eval, full-fit-p, full-fit-d.
    #[arg(long, default_value = "lc-param-eval")]
    kernel: String,
    /// Comma-separated grid sizes (total units, perfect squares).
    #[arg(long, default_value = "2500,4900,10000")]
    sizes: String,
    /// Repetitions per size (default: 20 shrinking to 5 with size).
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    missing: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value = "bench.csv")]
    out_csv: PathBuf,
    #[arg(long, default_value = "bench.json")]
    out_json: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Study(args) => cmd_study(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn parse_model(s: &str) -> Result<ModelKind, AnyError> {
    match s {
        "hsem" => Ok(ModelKind::Hsem),
        "hsam" => Ok(ModelKind::Hsam),
        other => Err(format!("unknown model '{other}' (expected hsem or hsam)").into()),
    }
}

fn parse_method(s: &str) -> Result<FitMethod, AnyError> {
    match s {
        "mml-p" => Ok(FitMethod::MmlP),
        "mml-d" => Ok(FitMethod::MmlD),
        "oml" => Ok(FitMethod::Oml),
        "fml" => Ok(FitMethod::Fml),
        other => {
            Err(format!("unknown method '{other}' (expected mml-p, mml-d, oml, fml)").into())
        }
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize), AnyError> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("grid '{s}' must look like 71x71"))?;
    Ok((r.trim().parse()?, c.trim().parse()?))
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, AnyError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| e.into()))
        .collect()
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>, AnyError> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| e.into()))
        .collect()
}

fn parse_on_off(s: &str) -> Result<bool, AnyError> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(format!("expected on or off, got '{other}'").into()),
    }
}

fn read_weights_file(path: &Path, row_normalize: bool) -> Result<SpatialWeights, AnyError> {
    let mut file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut head = [0u8; 16];
    let got = file.read(&mut head)?;
    let is_mm = head[..got].starts_with(b"%%MatrixMarket");
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let w = if is_mm {
        read_matrix_market(reader)?
    } else {
        read_neighbor_list(reader)?
    };
    if row_normalize {
        return Ok(SpatialWeights::row_normalize(&w)?);
    }
    // detect row-stochastic weights so the admissible interval is right
    let n = w.nrows();
    let mut sums = vec![0.0f64; n];
    for j in 0..w.ncols() {
        for (i, v) in w.col_iter(j) {
            sums[i] += v;
        }
    }
    let row_stochastic = sums.iter().all(|&s| s == 0.0 || (s - 1.0).abs() <= 1e-8);
    let normalization = if row_stochastic {
        Normalization::Row
    } else {
        Normalization::None
    };
    Ok(SpatialWeights::new(w, normalization, None, None)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), AnyError> {
    let file = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    Ok(())
}

#[derive(Serialize)]
struct FitOutput<'a> {
    schema_version: u32,
    #[serde(flatten)]
    result: &'a hsar::estimator::FitResult,
}

fn cmd_fit(args: FitArgs) -> Result<ExitCode, AnyError> {
    let mut manifest = RunManifest::start(None);
    let kind = parse_model(&args.model)?;
    let method = parse_method(&args.method)?;
    let with_se = parse_on_off(&args.se)?;

    let file = File::open(&args.data).map_err(|e| format!("{}: {e}", args.data.display()))?;
    let csv = read_dataset_csv(BufReader::new(file))?;
    let x = csv.design(!args.no_intercept);
    let dataset = Dataset::new(csv.y.clone(), x)?;
    let weights = read_weights_file(&args.weights, args.row_normalize)?;
    if weights.n() != dataset.n() {
        return Err(format!(
            "dataset has {} rows but the weight matrix is {}x{}",
            dataset.n(),
            weights.n(),
            weights.n()
        )
        .into());
    }

    let options = FitOptions {
        method,
        tol: args.tol,
        max_evals: args.max_evals,
        direct_cap: args.direct_cap,
        ..FitOptions::default()
    };
    let result = if with_se {
        fit_with_errors(kind, &dataset, &weights, &options)?
    } else {
        fit(kind, &dataset, &weights, &options)?
    };

    write_json(
        &args.out,
        &FitOutput {
            schema_version: hsar::SCHEMA_VERSION,
            result: &result,
        },
    )?;
    manifest.add_output(&args.out);
    manifest.finish_for(&args.out, serde_json::json!({
        "model": args.model, "method": args.method,
        "data": args.data.display().to_string(),
        "weights": args.weights.display().to_string(),
        "tol": args.tol, "max_evals": args.max_evals, "se": with_se,
    }))?;

    println!(
        "{} {} fit: rho = {:.6}, sigma2_e = {:.6}, sigma2_eps = {:.6}, loglik = {:.4}, \
         converged = {}, {} evaluations, {:.3}s",
        args.model,
        args.method,
        result.params.rho,
        result.sigma2_e,
        result.sigma2_eps,
        result.loglik,
        result.converged,
        result.n_evals,
        result.timing.estimation_secs,
    );
    Ok(if result.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn apply_config_file(path: &Path, pairs: &mut dyn FnMut(&str, &str) -> Result<bool, AnyError>) -> Result<(), AnyError> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut unknown = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key=value", path.display(), i + 1))?;
        if !pairs(key.trim(), value.trim())? {
            unknown.push(key.trim().to_string());
        }
    }
    if !unknown.is_empty() {
        return Err(format!("unknown config keys: {}", unknown.join(", ")).into());
    }
    Ok(())
}

fn sim_config_from(args: &SimArgs) -> Result<SimConfig, AnyError> {
    let mut a = args.clone();
    if let Some(cfg) = &args.config {
        apply_config_file(cfg, &mut |k, v| {
            match k {
                "model" => a.model = v.to_string(),
                "grid" => a.grid = v.to_string(),
                "beta" => a.beta = v.to_string(),
                "rho" => a.rho = v.parse()?,
                "sigma2_eps" => a.sigma2_eps = v.parse()?,
                "sigma2_e" => a.sigma2_e = v.parse()?,
                "missing" => a.missing = v.parse()?,
                "replicates" => a.replicates = v.parse()?,
                "seed" => a.seed = v.parse()?,
                _ => return Ok(false),
            }
            Ok(true)
        })?;
    }
    Ok(SimConfig {
        kind: parse_model(&a.model)?,
        grid: parse_grid(&a.grid)?,
        beta: parse_f64_list(&a.beta)?,
        rho: a.rho,
        sigma2_eps: a.sigma2_eps,
        sigma2_e: a.sigma2_e,
        missing_frac: a.missing,
        n_replicates: a.replicates,
        seed: a.seed,
    })
}

#[derive(Serialize)]
struct TruthOutput {
    schema_version: u32,
    config: SimConfig,
    replicate: usize,
    truth: hsar::model::Params,
}

fn cmd_simulate(args: SimArgs) -> Result<ExitCode, AnyError> {
    let mut manifest = RunManifest::start(None);
    let config = sim_config_from(&args)?;
    let weights = config.build_weights()?;
    let sim = simulate_one(&config, &weights, args.replicate)?;

    // response plus raw covariates; the intercept column is dropped so the
    // file reads back through the default fit pipeline
    let n = sim.dataset.n();
    let p = sim.dataset.x().ncols();
    let mut cov = hsar::DenseMatrix::zeros(n, p - 1);
    for j in 1..p {
        let src = sim.dataset.x().col(j);
        cov.col_mut(j - 1).copy_from_slice(src);
    }
    let names: Vec<String> = (1..p).map(|j| format!("x{j}")).collect();
    let y: Vec<Option<f64>> = sim
        .dataset
        .y_raw()
        .iter()
        .zip(sim.dataset.mask())
        .map(|(&v, &obs)| if obs { Some(v) } else { None })
        .collect();
    let file = File::create(&args.out_data)?;
    write_dataset_csv(BufWriter::new(file), &y, &cov, &names)?;

    write_json(
        &args.out_truth,
        &TruthOutput {
            schema_version: hsar::SCHEMA_VERSION,
            config: config.clone(),
            replicate: args.replicate,
            truth: sim.truth.clone(),
        },
    )?;
    let file = File::create(&args.out_weights)?;
    let mut writer = BufWriter::new(file);
    write_matrix_market(&mut writer, weights.matrix(), MatrixMarketKind::General)?;
    writer.flush()?;

    manifest.add_output(&args.out_data);
    manifest.add_output(&args.out_truth);
    manifest.add_output(&args.out_weights);
    manifest.seed = Some(config.seed);
    manifest.finish_for(&args.out_data, serde_json::to_value(&config)?)?;

    println!(
        "simulated {} grid {}x{} replicate {} ({} observed of {}): {} / {} / {}",
        args.model,
        config.grid.0,
        config.grid.1,
        args.replicate,
        sim.dataset.n_obs(),
        sim.dataset.n(),
        args.out_data.display(),
        args.out_truth.display(),
        args.out_weights.display(),
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_study(args: StudyArgs) -> Result<ExitCode, AnyError> {
    let mut manifest = RunManifest::start(None);
    let mut a = args.clone();
    if let Some(cfg) = &args.config {
        apply_config_file(cfg, &mut |k, v| {
            match k {
                "model" => a.model = v.to_string(),
                "grid" => a.grid = v.to_string(),
                "beta" => a.beta = v.to_string(),
                "rho" => a.rho = v.parse()?,
                "sigma2_eps" => a.sigma2_eps = v.parse()?,
                "sigma2_e" => a.sigma2_e = v.parse()?,
                "missing" => a.missing = v.parse()?,
                "replicates" => a.replicates = v.parse()?,
                "seed" => a.seed = v.parse()?,
                "methods" => a.methods = v.to_string(),
                "threads" => a.threads = Some(v.parse()?),
                "se" => a.se = v.to_string(),
                _ => return Ok(false),
            }
            Ok(true)
        })?;
    }
    let config = SimConfig {
        kind: parse_model(&a.model)?,
        grid: parse_grid(&a.grid)?,
        beta: parse_f64_list(&a.beta)?,
        rho: a.rho,
        sigma2_eps: a.sigma2_eps,
        sigma2_e: a.sigma2_e,
        missing_frac: a.missing,
        n_replicates: a.replicates,
        seed: a.seed,
    };
    let methods: Vec<FitMethod> = a
        .methods
        .split(',')
        .map(|m| parse_method(m.trim()))
        .collect::<Result<_, _>>()?;
    let threads = a.threads.or_else(|| {
        std::env::var("HSAR_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    let options = StudyOptions {
        compute_se: parse_on_off(&a.se)?,
        threads,
        ..StudyOptions::default()
    };

    let report = run_study(&config, &methods, &options)?;
    write_json(&a.out, &report)?;
    let table = report.to_table();
    if let Some(table_path) = &a.table {
        std::fs::write(table_path, &table)?;
        manifest.add_output(table_path);
    }
    manifest.add_output(&a.out);
    manifest.seed = Some(config.seed);
    manifest.finish_for(&a.out, serde_json::to_value(&config)?)?;

    print!("{table}");
    println!("report written to {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, AnyError> {
    let mut manifest = RunManifest::start(None);
    let mut a = args.clone();
    if let Some(cfg) = &args.config {
        apply_config_file(cfg, &mut |k, v| {
            match k {
                "kernel" => a.kernel = v.to_string(),
                "sizes" => a.sizes = v.to_string(),
                "reps" => a.reps = Some(v.parse()?),
                "missing" => a.missing = v.parse()?,
                "seed" => a.seed = v.parse()?,
                _ => return Ok(false),
            }
            Ok(true)
        })?;
    }
    let kernel: Kernel = a.kernel.parse()?;
    let sizes = parse_usize_list(&a.sizes)?;
    let options = BenchOptions {
        reps: a.reps,
        missing_frac: a.missing,
        seed: a.seed,
        ..BenchOptions::default()
    };
    let result = bench_kernel(kernel, &sizes, &options);

    std::fs::write(&a.out_csv, result.to_csv())?;
    write_json(&a.out_json, &result)?;
    manifest.add_output(&a.out_csv);
    manifest.add_output(&a.out_json);
    manifest.seed = Some(a.seed);
    manifest.finish_for(&a.out_json, serde_json::json!({
        "kernel": a.kernel, "sizes": sizes, "missing": a.missing,
    }))?;

    println!(
        "kernel {}: alpha = {:.4}, b = {:.3e}, r^2 = {:.4} over {} sizes ({} skipped)",
        result.kernel,
        result.alpha,
        result.b,
        result.r_squared,
        result.sizes.len(),
        result.skipped.len(),
    );
    for (n, reason) in &result.skipped {
        println!("  skipped n = {n}: {reason}");
    }
    Ok(ExitCode::SUCCESS)
}
