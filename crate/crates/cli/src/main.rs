//! Command-line front end: DR core allocation, containment checks and the
//! sample-size, radius and consistency experiments.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use drcore::ambiguity::{AmbiguityConfig, BallSpec, TailParams};
use drcore::core_set::{build_dr_core, build_expected_core, check_containment, find_allocation, DrCore};
use drcore::distributions::{
    build_multisamples, EmpiricalDistribution, SampleCounts, SamplingMode, SamplingPlan, TruncatedGaussianSpec,
};
use drcore::experiment::{
    aggregation_for, run_consistency_study, run_radius_sweep, run_sample_size_sweep, ConsistencyConfig,
    ExperimentConfig, RadiusSchedule, SweepAxis, SweepResult,
};
use drcore::game::{CoalitionId, GameSpec};
use drcore::norm::NormTag;
use drcore::worst_case::{dual_lp_program, Engine};

#[derive(Parser)]
#[command(name = "drcore", version, about = "Distributionally robust core allocations for stochastic coalitional games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a DR core allocation and its confidence.
    Allocate(AllocateArgs),
    /// Repeated trials over a list of sample sizes.
    SweepK(SweepKArgs),
    /// Repeated trials over a list of radii at a fixed sample size.
    SweepEps(SweepEpsArgs),
    /// Gap between DR and expected thresholds as the sample size grows.
    Consistency(ConsistencyArgs),
    /// Check whether the DR core built from a sample file lies inside the expected-value core.
    Check(CheckArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Game specification (JSON). Defaults to the built-in three-agent reference game.
    #[arg(long)]
    game: Option<PathBuf>,
    /// Master seed for all sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Concentration constant c.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Concentration constant q.
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    /// Light-tail exponent a (> 1).
    #[arg(long, default_value_t = 2.0)]
    a: f64,
    /// Exponent to use when p = 2, which the concentration bound excludes.
    #[arg(long = "allow-p2-exponent", value_name = "E")]
    allow_p2_exponent: Option<f64>,
    /// Sampling plan.
    #[arg(long, default_value = "shared")]
    plan: SamplingMode,
    /// Worst-case engine.
    #[arg(long, default_value = "closed")]
    engine: Engine,
    /// Grid points per axis for the oracle engine.
    #[arg(long, default_value_t = 2001)]
    grid: usize,
    /// Ground norm of the Wasserstein distance.
    #[arg(long, default_value = "one")]
    norm: NormTag,
    /// Mean of the untruncated Gaussian.
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Variance of the untruncated Gaussian.
    #[arg(long, default_value_t = 1.0)]
    variance: f64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args, Clone)]
#[group(multiple = false)]
struct BallArgs {
    /// Wasserstein radius used for every coalition.
    #[arg(long)]
    eps: Option<f64>,
    /// Confidence parameter per coalition, converted to a radius.
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct AllocateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    ball: BallArgs,
    /// Sample file (CSV with header x1..xp) used by every coalition.
    #[arg(long, conflicts_with_all = ["k", "agent_samples"])]
    samples: Option<PathBuf>,
    /// Samples per coalition, per agent or in the shared stream.
    #[arg(long, default_value_t = 100)]
    k: usize,
    /// Per-agent sample counts, comma separated (per-agent plan only).
    #[arg(long, value_delimiter = ',')]
    agent_samples: Option<Vec<usize>>,
    /// Override the grand coalition value.
    #[arg(long)]
    grand_value: Option<f64>,
    /// Write the core polyhedron and allocation as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write every coalition's dual LP in tabular form into this directory.
    #[arg(long)]
    dump_lp: Option<PathBuf>,
}

#[derive(Args)]
struct SweepKArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    ball: BallArgs,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "5,10,30,50,100,200,500")]
    k_values: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    /// Output directory for trials.csv and summary.csv.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepEpsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Radii, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.03,0.1,0.3,1.0")]
    eps_values: Vec<f64>,
    /// Sample size held fixed.
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ConsistencyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_delimiter = ',', default_value = "10,30,100,300,1000,3000,10000")]
    k_values: Vec<usize>,
    /// Hold the radius fixed instead of following the β = c/K² schedule.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    ball: BallArgs,
    /// Sample file (CSV with header x1..xp) used by every coalition.
    #[arg(long)]
    samples: PathBuf,
}

impl CommonArgs {
    fn game(&self) -> anyhow::Result<GameSpec> {
        match &self.game {
            Some(path) => GameSpec::load(path).with_context(|| format!("loading game {}", path.display())),
            // The reference game's grand value 12 is a configuration choice.
            None => Ok(GameSpec::three_agent_example(12.0)?),
        }
    }

    fn tail(&self, game: &GameSpec) -> anyhow::Result<TailParams> {
        let tail = TailParams {
            a: self.a,
            c: self.c,
            q: self.q,
            p: game.dim(),
            p2_exponent: self.allow_p2_exponent,
            ..TailParams::default()
        };
        tail.validate()?;
        Ok(tail)
    }

    fn engine(&self) -> Engine {
        match self.engine {
            Engine::Oracle { .. } => Engine::Oracle { grid_points: self.grid },
            other => other,
        }
    }

    fn distribution(&self, game: &GameSpec) -> anyhow::Result<TruncatedGaussianSpec> {
        if game.dim() != 1 {
            bail!("the truncated Gaussian model needs a one-dimensional game, got p = {}", game.dim());
        }
        let s = game.support();
        Ok(TruncatedGaussianSpec::new(self.mu, self.variance, s.lo()[0], s.hi()[0])?)
    }
}

impl BallArgs {
    fn spec(&self, default_eps: f64) -> BallSpec {
        match (self.eps, self.beta) {
            (_, Some(b)) => BallSpec::Confidence(b),
            (Some(e), None) => BallSpec::Radius(e),
            (None, None) => BallSpec::Radius(default_eps),
        }
    }
}

fn by_mask<T: Into<Value> + Copy>(map: impl IntoIterator<Item = (CoalitionId, T)>) -> Map<String, Value> {
    map.into_iter().map(|(s, v)| (s.mask().to_string(), v.into())).collect()
}

fn constants_json(tail: &TailParams) -> Value {
    json!({ "c": tail.c, "q": tail.q, "a": tail.a, "p": tail.p, "p2_exponent": tail.p2_exponent })
}

fn load_shared_samples(
    path: &PathBuf,
    game: &GameSpec,
) -> anyhow::Result<BTreeMap<CoalitionId, EmpiricalDistribution>> {
    let emp = EmpiricalDistribution::load_csv(path).with_context(|| format!("reading samples {}", path.display()))?;
    emp.check_support(game.support())?;
    Ok(game.subcoalitions().into_iter().map(|s| (s, emp.clone())).collect())
}

fn allocate(args: &AllocateArgs) -> anyhow::Result<()> {
    let c = &args.common;
    let mut game = c.game()?;
    if let Some(v) = args.grand_value {
        game = game.with_grand_value(v)?;
    }
    let tail = c.tail(&game)?;
    let (samples, mode) = match &args.samples {
        Some(path) => (load_shared_samples(path, &game)?, SamplingMode::Shared),
        None => {
            let mut plan = SamplingPlan::uniform(c.plan, &game, args.k, c.seed);
            if let Some(counts) = &args.agent_samples {
                if c.plan != SamplingMode::PerAgent {
                    bail!("--agent-samples requires --plan per-agent");
                }
                plan.counts = SampleCounts::PerAgent(counts.clone());
            }
            (build_multisamples(&plan, &c.distribution(&game)?, &game)?, c.plan)
        }
    };
    let ambiguity = AmbiguityConfig::uniform(&game, args.ball.spec(0.3), tail, c.norm);
    let dr = pool(c.workers)?.install(|| build_dr_core(&game, &samples, &ambiguity, c.engine(), aggregation_for(mode)))?;

    if let Some(dir) = &args.dump_lp {
        std::fs::create_dir_all(dir)?;
        for (s, ball) in &dr.balls {
            let lp = dual_lp_program(game.value(*s).expect("coalition"), &samples[s], ball.radius, game.support(), c.norm)?;
            let mut file = std::fs::File::create(dir.join(format!("coalition_{}.lp.txt", s.mask())))?;
            lp.write_tabular(&mut file)?;
        }
    }

    let allocation = find_allocation(&dr.core)?;
    if let Some(path) = &args.out {
        dr.core.save(path, Some(&allocation))?;
    }
    println!("{}", serde_json::to_string_pretty(&allocation_report(&game, &dr, &allocation.x, &tail, mode))?);
    Ok(())
}

fn allocation_report(game: &GameSpec, dr: &DrCore, x: &[f64], tail: &TailParams, mode: SamplingMode) -> Value {
    let n = game.n_agents();
    json!({
        "allocation": x,
        "u_N": game.grand_value(),
        "thresholds": by_mask(dr.core.thresholds().iter().map(|(s, t)| (*s, *t))),
        "radii": by_mask(dr.balls.iter().map(|(s, b)| (*s, b.radius))),
        "betas": by_mask(dr.balls.iter().map(|(s, b)| (*s, b.beta))),
        "samples": by_mask(dr.balls.iter().map(|(s, b)| (*s, b.samples as u64))),
        "aggregate_confidence": dr.confidence.aggregate,
        "aggregation": dr.confidence.method,
        "vacuous_flag": dr.confidence.vacuous,
        "plan": mode.to_string(),
        "engine": dr.worst_case.values().next().map(|w| w.engine),
        "coalitions": (1u64 << n) - 2,
        "coalitions_with_empty_set": (1u64 << n) - 1,
        "constants": constants_json(tail),
    })
}

fn pool(workers: usize) -> anyhow::Result<rayon::ThreadPool> {
    if workers == 0 {
        bail!("--workers must be at least 1");
    }
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}

fn experiment_config(c: &CommonArgs, axis: SweepAxis, values: Vec<f64>, trials: usize) -> anyhow::Result<ExperimentConfig> {
    let game = c.game()?;
    let mut cfg = ExperimentConfig::reference(axis, values)?;
    cfg.distribution = c.distribution(&game)?;
    cfg.tail = c.tail(&game)?;
    cfg.game = game;
    cfg.trials = trials;
    cfg.mode = c.plan;
    cfg.norm = c.norm;
    cfg.engine = c.engine();
    cfg.master_seed = c.seed;
    cfg.workers = c.workers;
    Ok(cfg)
}

fn report_sweep(result: &SweepResult, out: &PathBuf, tail: &TailParams) -> anyhow::Result<()> {
    result.save(out)?;
    println!(
        "# constants c={} q={} a={} p={}; wrote {} and {}",
        tail.c,
        tail.q,
        tail.a,
        tail.p,
        out.join("trials.csv").display(),
        out.join("summary.csv").display()
    );
    println!("# axis confidence band_width aggregate_bound vacuous_trials");
    for s in &result.summaries {
        println!(
            "{} {} {} {} {}",
            drcore::experiment::fmt_g12(s.axis_value),
            drcore::experiment::fmt_g12(s.confidence),
            drcore::experiment::fmt_g12(s.band_width),
            drcore::experiment::fmt_g12(s.aggregate_confidence),
            s.vacuous_trials
        );
    }
    Ok(())
}

fn sweep_k(args: &SweepKArgs) -> anyhow::Result<()> {
    let values = args.k_values.iter().map(|k| *k as f64).collect();
    let mut cfg = experiment_config(&args.common, SweepAxis::SampleSize, values, args.trials)?;
    cfg.fixed_ball = args.ball.spec(0.3);
    report_sweep(&run_sample_size_sweep(&cfg)?, &args.out, &cfg.tail)
}

fn sweep_eps(args: &SweepEpsArgs) -> anyhow::Result<()> {
    let mut cfg = experiment_config(&args.common, SweepAxis::Radius, args.eps_values.clone(), args.trials)?;
    cfg.fixed_samples = args.k;
    report_sweep(&run_radius_sweep(&cfg)?, &args.out, &cfg.tail)
}

fn consistency(args: &ConsistencyArgs) -> anyhow::Result<()> {
    let c = &args.common;
    let game = c.game()?;
    let schedule = match args.eps {
        Some(e) => RadiusSchedule::Fixed(e),
        None => RadiusSchedule::InverseSquare,
    };
    let mut cfg = ConsistencyConfig::reference(args.k_values.clone(), schedule)?;
    cfg.distribution = c.distribution(&game)?;
    cfg.tail = c.tail(&game)?;
    cfg.game = game;
    cfg.trials = args.trials;
    cfg.mode = c.plan;
    cfg.norm = c.norm;
    cfg.engine = c.engine();
    cfg.master_seed = c.seed;
    cfg.workers = c.workers;
    let result = run_consistency_study(&cfg)?;
    result.save(&args.out)?;
    println!("# wrote {}", args.out.join("consistency.csv").display());
    println!("# K radius beta mean_gap");
    for r in &result.rows {
        println!(
            "{} {} {} {}",
            r.samples,
            drcore::experiment::fmt_g12(r.radius),
            drcore::experiment::fmt_g12(r.beta),
            drcore::experiment::fmt_g12(r.mean_gap())
        );
    }
    Ok(())
}

fn check(args: &CheckArgs) -> anyhow::Result<()> {
    let c = &args.common;
    let game = c.game()?;
    let samples = load_shared_samples(&args.samples, &game)?;
    let tail = c.tail(&game)?;
    let ambiguity = AmbiguityConfig::uniform(&game, args.ball.spec(0.3), tail, c.norm);
    let dr = pool(c.workers)?.install(|| build_dr_core(&game, &samples, &ambiguity, c.engine(), aggregation_for(SamplingMode::Shared)))?;
    let expected = build_expected_core(&game, &c.distribution(&game)?)?;
    let report = check_containment(&dr.core, &expected)?;
    let out = json!({
        "contained": report.contained,
        "vacuous": report.vacuous,
        "all_dominate": report.all_dominate,
        "max_violation": report.max_violation,
        "dominance": by_mask(report.dominance.iter().map(|(s, d)| (*s, *d))),
        "dr_thresholds": by_mask(dr.core.thresholds().iter().map(|(s, t)| (*s, *t))),
        "expected_thresholds": by_mask(expected.thresholds().iter().map(|(s, t)| (*s, *t))),
        "aggregate_confidence": dr.confidence.aggregate,
        "vacuous_flag": dr.confidence.vacuous,
        "constants": constants_json(&tail),
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Allocate(a) => allocate(a),
        Command::SweepK(a) => sweep_k(a),
        Command::SweepEps(a) => sweep_eps(a),
        Command::Consistency(a) => consistency(a),
        Command::Check(a) => check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if matches!(e.downcast_ref::<drcore::Error>(), Some(drcore::Error::EmptyCore)) {
                eprintln!("error: empty DR core");
                ExitCode::from(2)
            } else {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        }
    }
}
