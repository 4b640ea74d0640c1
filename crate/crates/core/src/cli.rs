//! Command-line front end. Exit codes: 0 success, 2 usage or configuration
//! error, 3 data error, 4 numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dantzig::{dantzig_init, multi_dantzig_init, DantzigConfig};
use crate::data::{generate_linear, generate_logistic, generate_multi_response, standard_signal};
use crate::error::{Error, Result};
use crate::experiments::{run_experiment, write_outcome, ExperimentKind, ExperimentOutcome, ExperimentSpec, Preset};
use crate::io::{eval_real, load_csv, robust_standardize, write_atomic, EvalConfig};
use crate::linalg::{DenseMatrix, DenseVector, Parameter};
use crate::models::Model;
use crate::mom::OracleKind;
use crate::samplers::{DistributionSpec, RngStream};
use crate::solvers::{block_count, right_solve, BlockRule, RightConfig};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "robust-sparse", version, about = "Robust sparse regression with median-of-means hard thresholding")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML file overriding preset fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "desk")]
    preset: PresetArg,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PresetArg {
    Desk,
    Paper,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Preset {
        match p {
            PresetArg::Desk => Preset::Desk,
            PresetArg::Paper => Preset::Paper,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Error rate against n for several noise tails.
    RateExp(Common),
    /// MoM gradient error against n for several design tails.
    GradExp(Common),
    /// Paired comparison of RIGHT, IHT, Lasso, Huber and shrinkage.
    Compare(Common),
    /// Solve one generated instance and print the final error.
    Solve(Common),
    /// Robust Dantzig selector on one generated instance.
    Init(Common),
    /// Held-out MAPE/MSE of each method on a CSV dataset.
    EvalReal(Common),
}

/// Parses `argv` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        _ if e.is_numerical() => EXIT_NUMERICAL,
        Error::Config(_) | Error::InvalidParameter(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::RateExp(c) => experiment(ExperimentKind::Rate, &c, "rate"),
        Command::GradExp(c) => experiment(ExperimentKind::Gradient, &c, "grad"),
        Command::Compare(c) => experiment(ExperimentKind::Comparison, &c, "compare"),
        Command::Solve(c) => solve(&c, false),
        Command::Init(c) => solve(&c, true),
        Command::EvalReal(c) => eval(&c),
    }
}

fn read_config(path: &Path) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    text.parse::<toml::Table>().map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Overlays the keys of the config file (if any) onto `base`.
fn layered<T: Serialize + for<'de> Deserialize<'de>>(base: &T, config: Option<&Path>) -> Result<T> {
    let mut table = match toml::Value::try_from(base).map_err(|e| Error::Config(e.to_string()))? {
        toml::Value::Table(t) => t,
        _ => return Err(Error::Config("configuration must be a table".into())),
    };
    let origin = match config {
        Some(path) => {
            for (k, v) in read_config(path)? {
                table.insert(k, v);
            }
            format!("{}: ", path.display())
        }
        None => String::new(),
    };
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| Error::Config(format!("{origin}{e}")))
}

fn experiment(kind: ExperimentKind, c: &Common, stem: &str) -> Result<()> {
    let mut spec: ExperimentSpec = layered(&ExperimentSpec::preset(kind, c.preset.into()), c.config.as_deref())?;
    spec.kind = kind;
    if let Some(seed) = c.seed {
        spec.seed = seed;
    }
    let outcome = run_experiment(&spec)?;
    report(&outcome);
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    write_outcome(&outcome, &out, stem)?;
    println!("wrote {} and {}", out.join(format!("{stem}.csv")).display(), out.join(format!("{stem}_summary.json")).display());
    Ok(())
}

fn report(outcome: &ExperimentOutcome) {
    for f in &outcome.fits {
        println!(
            "{:<12} tail={:<6.3} slope={:+.4} expected={:+.4} r2={:.4}",
            f.method, f.tail_param, f.fit.slope, f.expected_slope, f.fit.r_squared
        );
    }
    if outcome.fits.is_empty() {
        for c in &outcome.curves {
            println!("{:<12} n={:<6} mean_error={:.6} diverged={}", c.method, c.n, c.mean_error, c.diverged);
        }
    }
}

/// Settings for `solve` and `init` on a generated instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct InstanceConfig {
    model: Model,
    n: usize,
    p: usize,
    s_star: usize,
    responses: usize,
    sparsity: usize,
    step_size: f64,
    iterations: usize,
    block_scale: f64,
    oracle: OracleKind,
    /// Start from the Dantzig selector instead of zero.
    dantzig_start: bool,
    seed: u64,
    design: DistributionSpec,
    noise: DistributionSpec,
    dantzig: DantzigConfig,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            model: Model::Linear,
            n: 1000,
            p: 100,
            s_star: 5,
            responses: 2,
            sparsity: 10,
            step_size: 0.02,
            iterations: 250,
            block_scale: 1.0,
            oracle: OracleKind::Mom,
            dantzig_start: false,
            seed: 1,
            design: DistributionSpec::gaussian(),
            noise: DistributionSpec::student_t(1.8),
            dantzig: DantzigConfig::default(),
        }
    }
}

fn multi_truth(p: usize, s_star: usize, m: usize) -> Result<DenseMatrix> {
    let base = standard_signal(p, s_star);
    let mut data = vec![0.0; p * m];
    for j in 0..p {
        for l in 0..m {
            data[j * m + l] = base[j] * (1.0 + 0.5 * l as f64);
        }
    }
    DenseMatrix::new(p, m, data)
}

fn solve(c: &Common, init_only: bool) -> Result<()> {
    let mut cfg: InstanceConfig = layered(&InstanceConfig::default(), c.config.as_deref())?;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    let mut rng = RngStream::new(cfg.seed, 0);
    let k = block_count(BlockRule::PLogN, cfg.n, cfg.p, cfg.block_scale);
    let summary = match cfg.model {
        Model::Linear | Model::Logistic => {
            let truth = standard_signal(cfg.p, cfg.s_star);
            let data = if cfg.model == Model::Linear {
                generate_linear(cfg.n, &truth, &cfg.design, &cfg.noise, &mut rng)?
            } else {
                generate_logistic(cfg.n, &truth, &cfg.design, &mut rng)?
            };
            let start = if init_only || cfg.dantzig_start {
                dantzig_init(&data, &cfg.dantzig)?
            } else {
                DenseVector::zeros(cfg.p)
            };
            let estimate = if init_only {
                start
            } else {
                let rc = RightConfig::new(start, cfg.sparsity, cfg.step_size, cfg.iterations, k).with_oracle(cfg.oracle);
                right_solve(cfg.model, &data, &rc, None)?.estimate
            };
            (estimate.distance_to(&truth), serde_json::to_value(estimate.as_slice()))
        }
        Model::MultiResponse => {
            let truth = multi_truth(cfg.p, cfg.s_star, cfg.responses)?;
            let data = generate_multi_response(cfg.n, &truth, &cfg.design, &cfg.noise, &mut rng)?;
            let start = if init_only || cfg.dantzig_start {
                multi_dantzig_init(&data, &cfg.dantzig)?
            } else {
                DenseMatrix::zeros(cfg.p, cfg.responses)
            };
            let estimate = if init_only {
                start
            } else {
                let rc = RightConfig::new(start, cfg.sparsity, cfg.step_size, cfg.iterations, k).with_oracle(cfg.oracle);
                right_solve(cfg.model, &data, &rc, None)?.estimate
            };
            (estimate.distance_to(&truth), serde_json::to_value(&estimate))
        }
    };
    println!("final_l2_error = {:.6e}", summary.0);
    if let Some(out) = &c.out {
        std::fs::create_dir_all(out).map_err(|e| Error::Io { path: out.display().to_string(), source: e })?;
        let json = serde_json::json!({
            "final_l2_error": summary.0,
            "estimate": summary.1.map_err(|e| Error::Data(e.to_string()))?,
        });
        let name = if init_only { "init.json" } else { "solve.json" };
        write_atomic(&out.join(name), serde_json::to_string_pretty(&json).unwrap_or_default().as_bytes())?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct EvalFile {
    data: Option<PathBuf>,
    response: String,
    has_header: bool,
    standardize: bool,
    #[serde(flatten)]
    eval: EvalConfig,
}

impl Default for EvalFile {
    fn default() -> Self {
        EvalFile { data: None, response: "y".into(), has_header: true, standardize: true, eval: EvalConfig::default() }
    }
}

fn eval(c: &Common) -> Result<()> {
    let path = c.config.as_deref().ok_or_else(|| Error::Config("eval-real needs --config naming the dataset".into()))?;
    let mut cfg: EvalFile = layered(&EvalFile::default(), Some(path))?;
    if let Some(seed) = c.seed {
        cfg.eval.seed = seed;
    }
    let data_path = cfg.data.clone().ok_or_else(|| Error::Config(format!("{}: missing `data` path", path.display())))?;
    let data_path = if data_path.is_relative() {
        path.parent().unwrap_or(Path::new(".")).join(data_path)
    } else {
        data_path
    };
    let mut ds = load_csv(&data_path, &cfg.response, cfg.has_header)?;
    if ds.skipped_rows > 0 {
        eprintln!("warning: skipped {} rows with missing or non-numeric cells", ds.skipped_rows);
    }
    if cfg.standardize {
        ds = robust_standardize(&ds)?;
        if let Some(rec) = &ds.standardization {
            if !rec.dropped.is_empty() {
                eprintln!("warning: dropped {} zero-MAD columns", rec.dropped.len());
            }
        }
    }
    let metrics = eval_real(&ds.data, &cfg.eval)?;
    for m in &metrics {
        println!("{:<10} mape={:.6} mse={:.6} splits={}", m.method, m.mape, m.mse, m.splits);
    }
    if let Some(out) = &c.out {
        std::fs::create_dir_all(out).map_err(|e| Error::Io { path: out.display().to_string(), source: e })?;
        let json = serde_json::to_vec_pretty(&metrics).map_err(|e| Error::Data(e.to_string()))?;
        write_atomic(&out.join("eval_real.json"), &json)?;
    }
    Ok(())
}
