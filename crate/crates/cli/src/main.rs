use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pairpot::estimators::{self, EstimatorInput, EstimatorSettings};
use pairpot::harness::config::parse_boundary;
use pairpot::harness::report::{write_gnz, ExperimentOutput};
use pairpot::harness::{run_experiment, validate_sampler, ConfigFile, ExperimentConfig};
use pairpot::sampler::{run_birth_death, ChainConfig};
use pairpot::{io as pio, Error, Kernel, KernelKind, Result, Window};

#[derive(Parser)]
#[command(name = "pairpot", version, about = "Simulate Gibbs point patterns and estimate their pair potential")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the birth–death sampler and write the final pattern.
    Simulate(SimulateArgs),
    /// Estimate R̂, Ĵ, β̂, Φ̂ and γ̂ on an r-grid from a pattern file.
    Estimate(EstimateArgs),
    /// GNZ residual checks of the sampler (single-point and pair).
    Validate(ExperimentArgs),
    /// Run the experiment described by a configuration file.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML file with a [model] section.
    #[arg(long)]
    model_config: PathBuf,
    #[arg(long)]
    side: f64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Total proposals; defaults to twice the burn-in.
    #[arg(long)]
    steps: Option<u64>,
    /// Defaults to max(1000, 10 β|W|).
    #[arg(long)]
    burn_in: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// free or torus.
    #[arg(long, default_value = "free")]
    boundary: String,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    pattern: PathBuf,
    /// TOML file supplying model.range, kernel.kind and bandwidth.constant.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    range: Option<f64>,
    #[arg(long)]
    kernel: Option<KernelKind>,
    #[arg(long)]
    bandwidth: Option<f64>,
    /// lo:hi:n
    #[arg(long, default_value = "0.05:1:20")]
    r_grid: String,
    #[arg(long, default_value_t = estimators::DEFAULT_SPHERE_NODES)]
    sphere_nodes: usize,
    #[arg(long, default_value_t = 128)]
    region_grid_res: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Resource(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let model = ConfigFile::load(&a.model_config)?.model()?;
    let window = Window::new(a.dim, a.side).map_err(|e| Error::Config(e.to_string()))?;
    let defaults = ChainConfig::for_model(&model, &window, a.seed);
    let burn_in = a.burn_in.unwrap_or(defaults.burn_in);
    let steps = a.steps.unwrap_or(2 * burn_in.max(1));
    let cfg = ChainConfig::new(steps, burn_in, a.seed)?.with_boundary(parse_boundary(&a.boundary)?);
    let x = run_birth_death(&model, &window, &cfg)?;
    let mut out = output(&a.out)?;
    pio::write_pattern(&x, &mut out)?;
    out.flush()?;
    Ok(())
}

fn parse_r_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("--r-grid expects lo:hi:n, got {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else { return Err(bad()) };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let n: usize = n.parse().map_err(|_| bad())?;
    if n == 0 || (n > 1 && hi <= lo) {
        return Err(bad());
    }
    Ok(estimators::linear_grid(lo, hi, n))
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let file = a.config.as_deref().map(ConfigFile::load).transpose()?.unwrap_or_default();
    let range = a
        .range
        .or_else(|| file.model.as_ref().and_then(|m| m.range))
        .ok_or_else(|| Error::Config("--range is required (or model.range in --config)".into()))?;
    let kind = match (a.kernel, &file.kernel) {
        (Some(k), _) => k,
        (None, Some(k)) => k.kind.parse()?,
        (None, None) => KernelKind::Epanechnikov,
    };
    let bandwidth = a
        .bandwidth
        .or_else(|| file.bandwidth.as_ref().and_then(|b| b.constant))
        .unwrap_or(range / 4.0);
    let mut settings = EstimatorSettings::new(range, Kernel::new(kind), bandwidth, parse_r_grid(&a.r_grid)?);
    settings.sphere_nodes = a.sphere_nodes;
    settings.region_grid_res = a.region_grid_res;
    settings.validate().map_err(|e| Error::Config(e.to_string()))?;
    let f = File::open(&a.pattern)?;
    let x = pio::read_pattern(BufReader::new(f), range)?;
    let report = estimators::estimate_phi(&EstimatorInput::new(&x, settings)?)?;
    let mut out = output(&a.out)?;
    pio::write_estimate(&report, &mut out)?;
    out.flush()?;
    let violations = report.positivity_violations();
    if violations > 0 {
        eprintln!("warning: γ̂ < 0 at {violations} grid points; the positivity assumption looks violated");
    }
    Ok(())
}

fn load_experiment(a: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut file = ConfigFile::load(&a.config)?;
    let exp = file.experiment.get_or_insert_with(Default::default);
    if let Some(seed) = a.seed {
        exp.seed = Some(seed);
    }
    if let Some(n) = a.replicates {
        exp.replicates = Some(n);
    }
    if let Some(dir) = &a.output_dir {
        exp.output_dir = Some(dir.clone());
    }
    // relative paths in the file are relative to the file
    let base = a.config.parent().unwrap_or(Path::new("."));
    if let Some(t) = exp.target_file.as_mut() {
        if t.is_relative() {
            *t = base.join(&*t);
        }
    }
    ExperimentConfig::from_file(&file)
}

fn validate(a: ExperimentArgs) -> Result<()> {
    let cfg = load_experiment(&a)?;
    let reports = validate_sampler(&cfg)?;
    let path = cfg.output_dir.as_ref().map(|d| d.join("gnz.csv"));
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = output(&path)?;
    write_gnz(&reports, &mut out)?;
    out.flush()?;
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let cfg = load_experiment(&a)?;
    let (result, written) = run_experiment(&cfg)?;
    match &result {
        ExperimentOutput::Consistency(r) => {
            for f in r.bias_slopes.iter() {
                eprintln!("r={} side={}: log|bias| vs log b slope {:.3}", f.r, f.group, f.slope);
            }
            for f in r.variance_slopes.iter() {
                eprintln!("r={}: log Var vs log|W⊖2R| slope {:.3}", f.r, f.slope);
            }
        }
        ExperimentOutput::Recovery(r) => {
            eprintln!("median γ̂ over the band: {:.4} (b = {})", r.band_median, r.bandwidth);
            if !r.repulsive {
                eprintln!("warning: the model is not purely repulsive; γ̂ is only meaningful where γ >= 0");
            }
        }
        ExperimentOutput::Validate(g) => {
            for rep in g {
                eprintln!("GNZ s={}: z = {:.3}", rep.order, rep.z_score);
            }
        }
        ExperimentOutput::Pilot(t) => {
            for (r, v) in t {
                eprintln!("r={r}: pilot R = {v:.6e}");
            }
        }
    }
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Argument(_) | Error::Parse { .. } | Error::UnsupportedModel(_) => 2,
        Error::Degenerate(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Validate(a) => validate(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
