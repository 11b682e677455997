use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use qrem_core::disorder::{sample_field, Sampler};
use qrem_core::harness::{
    content_hash, field_pressures, run_experiment, write_csv, write_json, Experiment,
    ExperimentConfig, Format, MethodChoice, SlqSettings,
};
use qrem_core::{Error, Field, ModelKind, ModelParameters, Order, Result};

#[derive(Parser, Debug)]
#[command(name = "qrem", version, about = "Quantum random energy model toolkit")]
struct Cli {
    /// Experiment description in TOML.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `master_seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; overrides `output` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = enum_arg::<Format>)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw one disorder field and write it as `<name>.f64` + `<name>.json`.
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "field")]
        name: String,
    },
    /// Pressure of a saved field, or of a freshly sampled one.
    Pressure(PressureArgs),
    /// Limiting phase diagram over a (T, Γ) grid.
    PhaseDiagram,
    /// Deviation-set clusters and ball containment.
    Clusters,
    /// Check the Gibbs and Golden–Thompson bounds against exact pressures.
    AuditBounds,
    /// Finite-size pressures against the limiting formula.
    Converge,
    /// Spread of the quenched pressure across realizations.
    SelfAverage,
    /// Monotonicity of the classical pressure in the order p.
    Monotonicity,
    /// Empirical field covariance against the exact kernel.
    Covariance,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long)]
    n: usize,
    /// Interaction order, or `inf` for the REM.
    #[arg(long, default_value = "2")]
    p: Order,
    #[arg(long, default_value = "sk", value_parser = enum_arg::<ModelKind>)]
    kind: ModelKind,
    #[arg(long)]
    sampler: Option<Sampler>,
}

#[derive(Args, Debug)]
struct PressureArgs {
    /// Stem of a saved field (without extension).
    #[arg(long, conflicts_with_all = ["n", "p", "kind", "sampler"])]
    field: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<Order>,
    #[arg(long, value_parser = enum_arg::<ModelKind>)]
    kind: Option<ModelKind>,
    #[arg(long)]
    sampler: Option<Sampler>,
    /// Inverse temperatures (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    beta: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, default_value = "auto", value_parser = enum_arg::<MethodChoice>)]
    method: MethodChoice,
    #[arg(long, default_value_t = SlqSettings::default().probes)]
    probes: usize,
    #[arg(long, default_value_t = SlqSettings::default().steps)]
    steps: usize,
    /// Low-lying Ritz vectors handled exactly by SLQ (0 disables).
    #[arg(long, default_value_t = SlqSettings::default().deflation)]
    deflation: usize,
    #[arg(long, default_value_t = qrem_core::free_energy::DEFAULT_DENSE_CAP)]
    dense_cap: usize,
}

/// Parses a snake_case enum from its serialized name; dashes are accepted.
fn enum_arg<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| format!("unrecognized value `{s}`"))
}

#[derive(Serialize)]
struct PressureRow {
    n: usize,
    p: Order,
    kind: ModelKind,
    sampler: Sampler,
    seed: u64,
    beta: f64,
    gamma: f64,
    value: f64,
    method: String,
    std_error: f64,
    probes: usize,
    lanczos_steps: usize,
    breakdowns: usize,
    quadrature_converged: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 4 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Error::Config("--threads must be ≥ 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    }
    let format = cli.format.unwrap_or_default();
    let experiment = match &cli.command {
        Command::Sample { model, name } => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("."));
            return sample(model, name, cli.seed.unwrap_or(0), &out);
        }
        Command::Pressure(args) => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("."));
            return pressure(args, cli.seed.unwrap_or(0), &out, format);
        }
        Command::PhaseDiagram => Experiment::PhaseDiagram,
        Command::Clusters => Experiment::Clusters,
        Command::AuditBounds => Experiment::BoundsAudit,
        Command::Converge => Experiment::Convergence,
        Command::SelfAverage => Experiment::SelfAveraging,
        Command::Monotonicity => Experiment::Monotonicity,
        Command::Covariance => Experiment::Covariance,
    };
    let mut cfg = match (&cli.config, experiment) {
        (Some(path), e) => ExperimentConfig::load_as(path, e)?,
        (None, Experiment::PhaseDiagram) => default_phase_grid(),
        (None, e) => return Err(Error::Config(format!("{e} needs --config <file>"))),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    let out = cli
        .out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let result = run_experiment(&cfg)?;
    std::fs::create_dir_all(&out)?;
    for path in result.write(&out, format, &cfg.hash())? {
        println!("{}", path.display());
    }
    match result.contract_violation() {
        Some(msg) => Err(Error::Contract(msg)),
        None => Ok(()),
    }
}

/// Temperatures 0.1..3.0 and fields 0..2.5 on a regular grid.
fn default_phase_grid() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Experiment::PhaseDiagram);
    cfg.temperature = (1..=30).map(|i| i as f64 * 0.1).collect();
    cfg.gamma = (0..=25).map(|i| i as f64 * 0.1).collect();
    cfg
}

fn model_params(n: usize, p: Order, kind: ModelKind) -> Result<ModelParameters> {
    let p = if kind == ModelKind::Rem { Order::Infinite } else { p };
    ModelParameters::new(n, p, 0.0, 0.0, kind).map_err(|e| e.context("model"))
}

fn sample(model: &ModelArgs, name: &str, seed: u64, out: &Path) -> Result<()> {
    let params = model_params(model.n, model.p, model.kind)?;
    let sampler = model.sampler.unwrap_or(Sampler::default_for(model.kind));
    let field: Field = sample_field(&params, seed, sampler)?;
    std::fs::create_dir_all(out)?;
    let (raw, meta) = field.save(out.join(name))?;
    println!("{}", raw.display());
    println!("{}", meta.display());
    Ok(())
}

fn pressure(args: &PressureArgs, seed: u64, out: &Path, format: Format) -> Result<()> {
    let field: Field = match &args.field {
        Some(stem) => Field::load(stem).map_err(|e| e.context(format!("field {}", stem.display())))?,
        None => {
            let n = args
                .n
                .ok_or_else(|| Error::Config("pressure needs --field or --n".into()))?;
            let kind = args.kind.unwrap_or(ModelKind::Sk);
            let params = model_params(n, args.p.unwrap_or(Order::Finite(2)), kind)?;
            let sampler = args.sampler.unwrap_or(Sampler::default_for(kind));
            sample_field(&params, seed, sampler)?
        }
    };
    let mut cfg = ExperimentConfig::new(Experiment::Convergence);
    cfg.method = args.method;
    cfg.dense_cap = args.dense_cap;
    cfg.slq = SlqSettings {
        probes: args.probes,
        steps: args.steps,
        deflation: args.deflation,
    };
    if cfg.slq.probes < 2 || cfg.slq.steps < 10 {
        return Err(Error::Config("slq needs --probes ≥ 2 and --steps ≥ 10".into()));
    }
    let estimates = field_pressures(&field, &args.beta, args.gamma, &cfg)?;
    let params = field.params();
    let rows: Vec<PressureRow> = args
        .beta
        .iter()
        .zip(&estimates)
        .map(|(&beta, est)| PressureRow {
            n: params.n,
            p: params.p,
            kind: params.kind,
            sampler: field.sampler(),
            seed: field.seed(),
            beta,
            gamma: args.gamma,
            value: est.value,
            method: est.method.to_string(),
            std_error: est.std_error,
            probes: est.probes,
            lanczos_steps: est.lanczos_steps,
            breakdowns: est.breakdowns,
            quadrature_converged: est.quadrature_converged,
        })
        .collect();
    let hash = content_hash(&serde_json::json!({
        "n": params.n,
        "p": params.p,
        "kind": params.kind,
        "sampler": field.sampler(),
        "seed": field.seed(),
        "beta": args.beta,
        "gamma": args.gamma,
        "method": cfg.method,
        "dense_cap": cfg.dense_cap,
        "slq": cfg.slq,
    }));
    std::fs::create_dir_all(out)?;
    let path = match format {
        Format::Csv => {
            let path = out.join("pressure.csv");
            write_csv(&path, &hash, &rows)?;
            path
        }
        Format::Json => {
            let path = out.join("pressure.json");
            write_json(&path, &hash, &rows)?;
            path
        }
    };
    for r in &rows {
        println!(
            "beta={} gamma={} pressure={} method={} std_error={}",
            r.beta, r.gamma, r.value, r.method, r.std_error
        );
    }
    println!("{}", path.display());
    Ok(())
}
