use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use maxmin_bandits::bounds::{bound_table, c_tilde, LowerBoundParams};
use maxmin_bandits::generator::{generate_indexed, GeneratorSpec};
use maxmin_bandits::harness::output::{self, check_output_dir};
use maxmin_bandits::harness::{
    prepare_instances, run_cells, Algorithm, ExperimentConfig, InstanceSource, PolicyConfig,
};
use maxmin_bandits::{BanditInstance, RecommendRule, RewardModel};

#[derive(Parser)]
#[command(name = "maxmin", version, about = "Max-min grouped bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write random instances with a prescribed gap.
    Generate(GenerateArgs),
    /// Run an experiment grid and write CSV outputs.
    Run(RunArgs),
    /// Print gap quantities and bounds of one instance as CSV.
    Bounds(BoundsArgs),
    /// Fixed-horizon run that also writes mean regret curves.
    RegretCurve(RunArgs),
    /// Summarise an existing trials.csv.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Reward {
    Bernoulli,
    Gaussian,
}

fn reward_model(kind: Reward, sigma: f64) -> RewardModel {
    match kind {
        Reward::Bernoulli => RewardModel::Bernoulli,
        Reward::Gaussian => RewardModel::Gaussian { sigma },
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    groups: usize,
    #[arg(long)]
    gap: f64,
    #[arg(long, default_value_t = 10)]
    count: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Reward::Bernoulli)]
    reward: Reward,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyKind {
    Lil,
    Practical,
}

#[derive(Clone, Copy, ValueEnum)]
enum Recommend {
    CurrentLcb,
    BestHistorical,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "algo", value_delimiter = ',')]
    algorithms: Vec<Algorithm>,
    #[arg(long, value_enum)]
    policy: Option<PolicyKind>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, value_enum)]
    recommend: Option<Recommend>,
    /// Instance files.
    #[arg(long, num_args = 1..)]
    instances: Vec<PathBuf>,
    /// Generate instances with these gaps instead of reading files.
    #[arg(long, value_delimiter = ',')]
    gap: Vec<f64>,
    /// Generated instances per gap.
    #[arg(long)]
    count: Option<u32>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    groups: Option<usize>,
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stride: Option<u64>,
    /// Record regret trajectories.
    #[arg(long)]
    trajectories: bool,
    /// Record per-epoch elimination snapshots.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    serial: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
enum CTilde {
    Gaussian,
    Bernoulli,
    Value(f64),
}

fn parse_c_tilde(s: &str) -> Result<CTilde, String> {
    match s {
        "gaussian" => Ok(CTilde::Gaussian),
        "bernoulli" => Ok(CTilde::Bernoulli),
        _ => s
            .parse()
            .map(CTilde::Value)
            .map_err(|_| format!("expected a number, 'gaussian' or 'bernoulli', got '{s}'")),
    }
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// KL constant: a number, `gaussian` (sigma of the instance, 0.5 for
    /// Bernoulli instances) or `bernoulli`.
    #[arg(long, default_value = "gaussian", value_parser = parse_c_tilde)]
    c_tilde: CTilde,
    /// Maximum number of groups per arm; defaults to the instance's.
    #[arg(long)]
    m: Option<usize>,
    /// Also report the regret bound at this horizon.
    #[arg(long)]
    horizon: Option<u64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Path to trials.csv.
    trials: PathBuf,
    /// Write summary CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn generated_defaults() -> InstanceSource {
    InstanceSource::Generated {
        n: 100,
        groups: 10,
        gaps: Vec::new(),
        count: 10,
        reward_model: RewardModel::Bernoulli,
    }
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => {
            let source = if !args.instances.is_empty() {
                InstanceSource::Files {
                    paths: args.instances.clone(),
                }
            } else if !args.gap.is_empty() {
                generated_defaults()
            } else {
                bail!("give --config, --instances or --gap");
            };
            ExperimentConfig::new(source)
        }
    };

    if !args.instances.is_empty() {
        config.instances = InstanceSource::Files {
            paths: args.instances.clone(),
        };
    } else if !args.gap.is_empty() && matches!(config.instances, InstanceSource::Files { .. }) {
        config.instances = generated_defaults();
    }
    if let InstanceSource::Generated {
        n,
        groups,
        gaps,
        count,
        ..
    } = &mut config.instances
    {
        if !args.gap.is_empty() {
            *gaps = args.gap.clone();
        }
        if let Some(v) = args.count {
            *count = v;
        }
        if let Some(v) = args.n {
            *n = v;
        }
        if let Some(v) = args.groups {
            *groups = v;
        }
    }

    if !args.algorithms.is_empty() {
        config.algorithms = args.algorithms.clone();
    }
    let (old_eps, old_delta, old_c) = match config.policy {
        PolicyConfig::Lil { epsilon, delta } => (epsilon, delta, 1.0),
        PolicyConfig::Practical { c } => (0.5, 0.05, c),
    };
    let kind = args.policy.unwrap_or(match config.policy {
        PolicyConfig::Lil { .. } => PolicyKind::Lil,
        PolicyConfig::Practical { .. } => PolicyKind::Practical,
    });
    config.policy = match kind {
        PolicyKind::Lil => PolicyConfig::Lil {
            epsilon: args.epsilon.unwrap_or(old_eps),
            delta: args.delta.unwrap_or(old_delta),
        },
        PolicyKind::Practical => PolicyConfig::Practical {
            c: args.c.unwrap_or(old_c),
        },
    };
    if let Some(v) = args.eta {
        config.eta = v;
    }
    if let Some(v) = args.budget {
        config.budget = v;
    }
    if args.horizon.is_some() {
        config.horizon = args.horizon;
    }
    if let Some(r) = args.recommend {
        config.recommend = match r {
            Recommend::CurrentLcb => RecommendRule::CurrentLcb,
            Recommend::BestHistorical => RecommendRule::BestHistorical,
        };
    }
    if let Some(v) = args.trials {
        config.trials = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.stride {
        config.stride = v;
    }
    config.trajectories |= args.trajectories;
    config.trace |= args.trace;
    config.serial |= args.serial;
    if args.out.is_some() {
        config.out = args.out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn run(args: &RunArgs, curve: bool) -> Result<()> {
    let mut config = build_config(args)?;
    if curve {
        if config.horizon.is_none() {
            bail!("regret-curve needs --horizon (or `horizon` in the config)");
        }
        config.trajectories = true;
    }
    let out = config
        .out
        .clone()
        .context("no output directory (--out or `out` in the config)")?;

    let instances = prepare_instances(&config)?;
    check_output_dir(&out)?;
    let records = run_cells(&config, &instances)?;
    let files = output::write_outputs(&out, &config, &records)?;

    let rows: Vec<_> = records.iter().map(output::TrialRow::from).collect();
    for s in output::summarize(&rows) {
        println!(
            "{:<10} gap {:<6} trials {:>4}  success {:.3}  mean pulls {:>12.1}  median {:>12.1}",
            s.algorithm, s.gap, s.trials, s.success_rate, s.mean_pulls, s.median_pulls
        );
    }
    println!("wrote {}", files.trials.display());
    if let Some(p) = files.curve {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let spec = GeneratorSpec {
        n: args.n,
        num_groups: args.groups,
        gap: args.gap,
        reward_model: reward_model(args.reward, args.sigma),
    };
    check_output_dir(&args.out)?;
    for i in 0..args.count {
        let instance = generate_indexed(&spec, args.seed, i)?;
        let path = args.out.join(format!("instance_{i:03}.json"));
        instance.save(&path)?;
    }
    println!("wrote {} instances to {}", args.count, args.out.display());
    Ok(())
}

fn bounds(args: &BoundsArgs) -> Result<()> {
    let instance = BanditInstance::load(&args.instance)?;
    let c = match args.c_tilde {
        CTilde::Value(v) => v,
        CTilde::Bernoulli => c_tilde::bernoulli(),
        CTilde::Gaussian => match instance.reward_model() {
            RewardModel::Gaussian { sigma } if sigma > 0.0 => c_tilde::gaussian(sigma),
            _ => c_tilde::gaussian(0.5),
        },
    };
    let m = args.m.unwrap_or(instance.groups().max_overlap());
    let params = LowerBoundParams::new(c, args.delta, m)?;
    let rows = bound_table(&instance, args.epsilon, args.delta, &params, args.horizon)?;

    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["quantity", "arm", "group", "value", "note"])?;
    let index = |i: Option<usize>| i.map(|i| (i + 1).to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.quantity.to_string(),
            index(r.arm),
            index(r.group),
            r.value.to_string(),
            r.note,
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let rows = output::read_trials(&args.trials)?;
    if rows.is_empty() {
        bail!("{} has no trials", args.trials.display());
    }
    let summary = output::summarize(&rows);
    match &args.out {
        Some(path) => {
            output::write_summary(path, "", &summary)?;
            println!("wrote {}", path.display());
        }
        None => {
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            for row in summary {
                w.serialize(row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a, false),
        Command::RegretCurve(a) => run(a, true),
        Command::Bounds(a) => bounds(a),
        Command::Report(a) => report(a),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
