//! Monte Carlo harness: repeated multi-samples, DR thresholds against the true
//! expected values, and CSV output that does not depend on the worker count.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::ambiguity::{radius_from_beta, Aggregation, AmbiguityConfig, BallSpec, TailParams};
use crate::core_set::{build_dr_core, build_expected_core, CORE_TOL};
use crate::distributions::{
    build_multisamples, derive_seed, SamplingMode, SamplingPlan, StreamRole, TruncatedGaussianSpec,
};
use crate::error::{Error, Result};
use crate::game::{CoalitionId, GameSpec};
use crate::norm::NormTag;
use crate::worst_case::Engine;

pub const TRIALS_HEADER: &str = "axis,trial,coalition,W,E,dominates,all_dominate";

/// Formats like C's `%.12g`.
pub fn fmt_g12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= DIGITS {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Confidence aggregation matching a sampling mode: independent streams use
/// the product bound, samples shared through agents use Bonferroni.
pub fn aggregation_for(mode: SamplingMode) -> Aggregation {
    match mode {
        SamplingMode::PerAgent => Aggregation::Bonferroni,
        SamplingMode::PerCoalition | SamplingMode::Shared => Aggregation::Product,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SampleSize,
    Radius,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub game: GameSpec,
    pub distribution: TruncatedGaussianSpec,
    pub axis: SweepAxis,
    /// Sample counts or radii, depending on `axis`.
    pub values: Vec<f64>,
    /// Sample count held fixed in a radius sweep.
    pub fixed_samples: usize,
    /// Ball used at every point of a sample-size sweep.
    pub fixed_ball: BallSpec,
    pub trials: usize,
    pub mode: SamplingMode,
    pub tail: TailParams,
    pub norm: NormTag,
    pub engine: Engine,
    pub master_seed: u64,
    pub workers: usize,
}

impl ExperimentConfig {
    /// Reference setup: the three-agent game, the unit truncated Gaussian,
    /// shared samples and 500 trials per point.
    pub fn reference(axis: SweepAxis, values: Vec<f64>) -> Result<Self> {
        Ok(ExperimentConfig {
            game: GameSpec::three_agent_example(12.0)?,
            distribution: TruncatedGaussianSpec::unit_example(),
            axis,
            values,
            fixed_samples: 100,
            fixed_ball: BallSpec::Radius(0.3),
            trials: 500,
            mode: SamplingMode::Shared,
            tail: TailParams::default(),
            norm: NormTag::OneNorm,
            engine: Engine::ClosedForm,
            master_seed: 0,
            workers: 1,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("at least one trial is required".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("at least one worker is required".into()));
        }
        if self.values.is_empty() {
            return Err(Error::Config("the sweep axis is empty".into()));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("axis values must be strictly increasing".into()));
        }
        match self.axis {
            SweepAxis::SampleSize => {
                if self.values.iter().any(|k| *k < 1.0 || k.fract() != 0.0) {
                    return Err(Error::Config("sample sizes must be positive integers".into()));
                }
            }
            SweepAxis::Radius => {
                if self.values.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
                    return Err(Error::Config("radii must be nonnegative".into()));
                }
                if self.fixed_samples == 0 {
                    return Err(Error::Config("the fixed sample count must be positive".into()));
                }
            }
        }
        self.tail.validate()
    }

    fn point(&self, value: f64) -> (usize, BallSpec) {
        match self.axis {
            SweepAxis::SampleSize => (value as usize, self.fixed_ball),
            SweepAxis::Radius => (self.fixed_samples, BallSpec::Radius(value)),
        }
    }
}

/// Seed of one trial. It depends on the sample count but not on the radius,
/// so a radius sweep reuses the same multi-samples at every point.
pub fn trial_seed(master: u64, samples: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(master, StreamRole::Trial, samples as u64), StreamRole::Trial, trial as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoalitionOutcome {
    pub coalition: CoalitionId,
    pub worst_case: f64,
    pub expected: f64,
    pub dominates: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub axis_value: f64,
    pub trial: usize,
    pub outcomes: Vec<CoalitionOutcome>,
    pub all_dominate: bool,
    pub aggregate_confidence: f64,
    pub vacuous: bool,
}

impl TrialRecord {
    /// Flags agree with the stored values up to [`CORE_TOL`].
    pub fn is_consistent(&self) -> bool {
        let flags_ok = self.outcomes.iter().all(|o| flag_consistent(o.dominates, o.worst_case, o.expected));
        flags_ok && self.all_dominate == self.outcomes.iter().all(|o| o.dominates)
    }
}

fn flag_consistent(dominates: bool, w: f64, e: f64) -> bool {
    if dominates {
        w >= e - CORE_TOL
    } else {
        w <= e + CORE_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoalitionBand {
    pub coalition: CoalitionId,
    pub w_min: f64,
    pub w_max: f64,
    pub w_mean: f64,
    pub centered_min: f64,
    pub centered_max: f64,
    pub centered_mean: f64,
}

impl CoalitionBand {
    pub fn width(&self) -> f64 {
        self.w_max - self.w_min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub axis_value: f64,
    pub trials: usize,
    /// Fraction of trials in which every coalition dominates.
    pub confidence: f64,
    /// Largest band width over the coalitions.
    pub band_width: f64,
    pub bands: Vec<CoalitionBand>,
    /// Mean over trials of the aggregate confidence bound.
    pub aggregate_confidence: f64,
    pub vacuous_trials: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<PointSummary>,
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

fn run_trial(cfg: &ExperimentConfig, expected: &BTreeMap<CoalitionId, f64>, value: f64, trial: usize) -> Result<TrialRecord> {
    let (k, ball) = cfg.point(value);
    let plan = SamplingPlan::uniform(cfg.mode, &cfg.game, k, trial_seed(cfg.master_seed, k, trial));
    let samples = build_multisamples(&plan, &cfg.distribution, &cfg.game)?;
    let ambiguity = AmbiguityConfig::uniform(&cfg.game, ball, cfg.tail, cfg.norm);
    let dr = build_dr_core(&cfg.game, &samples, &ambiguity, cfg.engine, aggregation_for(cfg.mode))?;
    let outcomes: Vec<CoalitionOutcome> = dr
        .core
        .thresholds()
        .iter()
        .map(|(&s, &w)| CoalitionOutcome {
            coalition: s,
            worst_case: w,
            expected: expected[&s],
            dominates: w >= expected[&s],
        })
        .collect();
    Ok(TrialRecord {
        axis_value: value,
        trial,
        all_dominate: outcomes.iter().all(|o| o.dominates),
        outcomes,
        aggregate_confidence: dr.confidence.aggregate,
        vacuous: dr.confidence.vacuous,
    })
}

fn summarize(value: f64, records: &[TrialRecord]) -> PointSummary {
    let n = records.len() as f64;
    let bands: Vec<CoalitionBand> = (0..records[0].outcomes.len())
        .map(|c| {
            let w: Vec<f64> = records.iter().map(|r| r.outcomes[c].worst_case).collect();
            let d: Vec<f64> = records.iter().map(|r| r.outcomes[c].worst_case - r.outcomes[c].expected).collect();
            CoalitionBand {
                coalition: records[0].outcomes[c].coalition,
                w_min: w.iter().copied().fold(f64::INFINITY, f64::min),
                w_max: w.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                w_mean: w.iter().sum::<f64>() / n,
                centered_min: d.iter().copied().fold(f64::INFINITY, f64::min),
                centered_max: d.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                centered_mean: d.iter().sum::<f64>() / n,
            }
        })
        .collect();
    PointSummary {
        axis_value: value,
        trials: records.len(),
        confidence: records.iter().filter(|r| r.all_dominate).count() as f64 / n,
        band_width: bands.iter().map(CoalitionBand::width).fold(0.0, f64::max),
        bands,
        aggregate_confidence: records.iter().map(|r| r.aggregate_confidence).sum::<f64>() / n,
        vacuous_trials: records.iter().filter(|r| r.vacuous).count(),
    }
}

/// Runs every trial at every axis point. Trials run on `cfg.workers` threads
/// and are gathered in order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let expected: BTreeMap<CoalitionId, f64> = build_expected_core(&cfg.game, &cfg.distribution)?
        .thresholds()
        .clone();
    let pool = thread_pool(cfg.workers)?;
    let mut records = Vec::with_capacity(cfg.values.len() * cfg.trials);
    let mut summaries = Vec::with_capacity(cfg.values.len());
    for &value in &cfg.values {
        let point: Vec<TrialRecord> = pool.install(|| {
            (0..cfg.trials)
                .into_par_iter()
                .map(|t| run_trial(cfg, &expected, value, t))
                .collect::<Result<Vec<_>>>()
        })?;
        summaries.push(summarize(value, &point));
        records.extend(point);
    }
    Ok(SweepResult {
        axis: cfg.axis,
        records,
        summaries,
    })
}

pub fn run_sample_size_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    if cfg.axis != SweepAxis::SampleSize {
        return Err(Error::Config("expected a sample-size axis".into()));
    }
    run_sweep(cfg)
}

pub fn run_radius_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    if cfg.axis != SweepAxis::Radius {
        return Err(Error::Config("expected a radius axis".into()));
    }
    run_sweep(cfg)
}

impl SweepResult {
    pub fn write_trials_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(TRIALS_HEADER.split(','))?;
        for r in &self.records {
            for o in &r.outcomes {
                out.write_record([
                    fmt_g12(r.axis_value),
                    r.trial.to_string(),
                    o.coalition.mask().to_string(),
                    fmt_g12(o.worst_case),
                    fmt_g12(o.expected),
                    u8::from(o.dominates).to_string(),
                    u8::from(r.all_dominate).to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// One row per axis point and coalition, with raw and centered
    /// (`W - E`) bands.
    pub fn write_summary_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "axis",
            "trials",
            "confidence",
            "aggregate_bound",
            "vacuous_trials",
            "coalition",
            "W_min",
            "W_max",
            "W_mean",
            "centered_min",
            "centered_max",
            "centered_mean",
            "band_width",
        ])?;
        for s in &self.summaries {
            for b in &s.bands {
                out.write_record([
                    fmt_g12(s.axis_value),
                    s.trials.to_string(),
                    fmt_g12(s.confidence),
                    fmt_g12(s.aggregate_confidence),
                    s.vacuous_trials.to_string(),
                    b.coalition.mask().to_string(),
                    fmt_g12(b.w_min),
                    fmt_g12(b.w_max),
                    fmt_g12(b.w_mean),
                    fmt_g12(b.centered_min),
                    fmt_g12(b.centered_max),
                    fmt_g12(b.centered_mean),
                    fmt_g12(b.width()),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Writes `trials.csv` and `summary.csv` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.write_trials_csv(std::fs::File::create(dir.join("trials.csv"))?)?;
        self.write_summary_csv(std::fs::File::create(dir.join("summary.csv"))?)?;
        Ok(())
    }
}

/// One parsed row of a trials CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub axis: f64,
    pub trial: usize,
    pub coalition: u32,
    pub w: f64,
    pub e: f64,
    pub dominates: bool,
    pub all_dominate: bool,
}

impl TrialRow {
    pub fn is_consistent(&self) -> bool {
        flag_consistent(self.dominates, self.w, self.e)
    }
}

/// Parses a trials CSV and checks each row's flags against its values and
/// each trial's aggregate flag against its rows.
pub fn read_trials_csv(r: impl Read) -> Result<Vec<TrialRow>> {
    let mut reader = csv::Reader::from_reader(r);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != TRIALS_HEADER {
        return Err(Error::Input(format!("unexpected trials header `{}`", header.join(","))));
    }
    let flag = |s: &str| match s {
        "1" => Ok(true),
        "0" => Ok(false),
        other => Err(Error::Input(format!("flag `{other}` is not 0 or 1"))),
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Input(format!("`{s}` is not a number")));
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let row = TrialRow {
            axis: num(&rec[0])?,
            trial: rec[1].parse().map_err(|_| Error::Input("bad trial index".into()))?,
            coalition: rec[2].parse().map_err(|_| Error::Input("bad coalition mask".into()))?,
            w: num(&rec[3])?,
            e: num(&rec[4])?,
            dominates: flag(&rec[5])?,
            all_dominate: flag(&rec[6])?,
        };
        if !row.is_consistent() {
            return Err(Error::Input(format!("row {row:?} has inconsistent flags")));
        }
        rows.push(row);
    }
    let mut groups: BTreeMap<(u64, usize), Vec<&TrialRow>> = BTreeMap::new();
    for row in &rows {
        groups.entry((row.axis.to_bits(), row.trial)).or_default().push(row);
    }
    for group in groups.values() {
        let all = group.iter().all(|r| r.dominates);
        if group.iter().any(|r| r.all_dominate != all) {
            return Err(Error::Input(format!("trial {} has an inconsistent aggregate flag", group[0].trial)));
        }
    }
    Ok(rows)
}

/// Radius schedule for the consistency study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusSchedule {
    /// `β_K = c / K²`, converted to a radius per `K`.
    InverseSquare,
    /// The same radius at every `K`.
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct ConsistencyConfig {
    pub game: GameSpec,
    pub distribution: TruncatedGaussianSpec,
    pub sample_sizes: Vec<usize>,
    pub schedule: RadiusSchedule,
    pub trials: usize,
    pub mode: SamplingMode,
    pub tail: TailParams,
    pub norm: NormTag,
    pub engine: Engine,
    pub master_seed: u64,
    pub workers: usize,
}

impl ConsistencyConfig {
    pub fn reference(sample_sizes: Vec<usize>, schedule: RadiusSchedule) -> Result<Self> {
        Ok(ConsistencyConfig {
            game: GameSpec::three_agent_example(12.0)?,
            distribution: TruncatedGaussianSpec::unit_example(),
            sample_sizes,
            schedule,
            trials: 1,
            mode: SamplingMode::Shared,
            tail: TailParams::default(),
            norm: NormTag::OneNorm,
            engine: Engine::ClosedForm,
            master_seed: 0,
            workers: 1,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyRow {
    pub samples: usize,
    pub radius: f64,
    pub beta: f64,
    /// Gap `max_S |W_S - E_P[u_S]|` per trial.
    pub gaps: Vec<f64>,
}

impl ConsistencyRow {
    pub fn mean_gap(&self) -> f64 {
        self.gaps.iter().sum::<f64>() / self.gaps.len() as f64
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyResult {
    pub rows: Vec<ConsistencyRow>,
}

pub fn run_consistency_study(cfg: &ConsistencyConfig) -> Result<ConsistencyResult> {
    if cfg.trials == 0 || cfg.workers == 0 {
        return Err(Error::Config("trials and workers must be positive".into()));
    }
    if cfg.sample_sizes.is_empty() || cfg.sample_sizes.windows(2).any(|w| w[0] >= w[1]) || cfg.sample_sizes[0] == 0 {
        return Err(Error::Config("sample sizes must be positive and strictly increasing".into()));
    }
    cfg.tail.validate()?;
    let expected = build_expected_core(&cfg.game, &cfg.distribution)?.thresholds().clone();
    let pool = thread_pool(cfg.workers)?;
    let mut rows = Vec::new();
    for &k in &cfg.sample_sizes {
        let ball = match cfg.schedule {
            RadiusSchedule::InverseSquare => {
                let beta = cfg.tail.c / (k as f64 * k as f64);
                BallSpec::Radius(radius_from_beta(beta, k, &cfg.tail)?)
            }
            RadiusSchedule::Fixed(eps) => BallSpec::Radius(eps),
        };
        let ambiguity = AmbiguityConfig::uniform(&cfg.game, ball, cfg.tail, cfg.norm);
        let resolved = ambiguity.resolve(cfg.game.subcoalitions()[0], k)?;
        let gaps = pool.install(|| {
            (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let plan = SamplingPlan::uniform(cfg.mode, &cfg.game, k, trial_seed(cfg.master_seed, k, t));
                    let samples = build_multisamples(&plan, &cfg.distribution, &cfg.game)?;
                    let dr = build_dr_core(&cfg.game, &samples, &ambiguity, cfg.engine, aggregation_for(cfg.mode))?;
                    Ok(dr
                        .core
                        .thresholds()
                        .iter()
                        .map(|(s, w)| (w - expected[s]).abs())
                        .fold(0.0, f64::max))
                })
                .collect::<Result<Vec<f64>>>()
        })?;
        rows.push(ConsistencyRow {
            samples: k,
            radius: resolved.radius,
            beta: resolved.beta,
            gaps,
        });
    }
    Ok(ConsistencyResult { rows })
}

impl ConsistencyResult {
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["K", "radius", "beta", "trials", "mean_gap", "max_gap"])?;
        for r in &self.rows {
            out.write_record([
                r.samples.to_string(),
                fmt_g12(r.radius),
                fmt_g12(r.beta),
                r.gaps.len().to_string(),
                fmt_g12(r.mean_gap()),
                fmt_g12(r.max_gap()),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        std::fs::create_dir_all(dir.as_ref())?;
        self.write_csv(std::fs::File::create(dir.as_ref().join("consistency.csv"))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g12_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (2.5401, "2.5401"),
            (1.0 / 3.0, "0.333333333333"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (1e-5, "1e-05"),
            (0.0001, "0.0001"),
            (-2.0 / 3.0, "-0.666666666667"),
            (9.9999999999996, "10"),
            (6.0e-300, "6e-300"),
        ];
        for (x, s) in cases {
            assert_eq!(fmt_g12(x), s, "{x}");
        }
    }

    fn small_sweep(workers: usize) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::reference(SweepAxis::SampleSize, vec![5.0, 20.0]).unwrap();
        cfg.trials = 12;
        cfg.workers = workers;
        cfg.master_seed = 99;
        cfg
    }

    fn csv_bytes(result: &SweepResult) -> Vec<u8> {
        let mut buf = Vec::new();
        result.write_trials_csv(&mut buf).unwrap();
        buf
    }

    #[test]
    fn output_is_independent_of_worker_count() {
        let one = csv_bytes(&run_sweep(&small_sweep(1)).unwrap());
        let four = csv_bytes(&run_sweep(&small_sweep(4)).unwrap());
        assert_eq!(one, four);
        let rows = read_trials_csv(one.as_slice()).unwrap();
        assert_eq!(rows.len(), 2 * 12 * 6);
    }

    #[test]
    fn single_trial_is_deterministic() {
        let mut cfg = small_sweep(2);
        cfg.trials = 1;
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert!(a.records.iter().all(TrialRecord::is_consistent));
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_sweep(1);
        cfg.values = vec![10.0, 5.0];
        assert!(run_sweep(&cfg).is_err());
        cfg.values = vec![2.5];
        assert!(run_sweep(&cfg).is_err());
        cfg.values = vec![5.0];
        cfg.trials = 0;
        assert!(run_sweep(&cfg).is_err());
        assert!(run_radius_sweep(&small_sweep(1)).is_err());
    }

    #[test]
    fn constant_values_have_zero_gap() {
        let support = crate::game::BoxSupport::interval(0.0, 1.0).unwrap();
        let values = crate::game::enumerate_subcoalitions(3)
            .unwrap()
            .into_iter()
            .map(|s| (s, crate::game::PiecewiseAffineValue::constant(s.size() as f64, 1).unwrap()))
            .collect();
        let mut cfg = ConsistencyConfig::reference(vec![10, 100, 1000], RadiusSchedule::InverseSquare).unwrap();
        cfg.game = GameSpec::new(3, 4.0, support, values).unwrap();
        let result = run_consistency_study(&cfg).unwrap();
        assert!(result.rows.iter().all(|r| r.max_gap() == 0.0));
    }

    #[test]
    fn radius_zero_is_the_empirical_baseline() {
        let mut cfg = ExperimentConfig::reference(SweepAxis::Radius, vec![0.0]).unwrap();
        cfg.trials = 40;
        cfg.fixed_samples = 20;
        let result = run_sweep(&cfg).unwrap();
        let expected = build_expected_core(&cfg.game, &cfg.distribution).unwrap();
        let mut hits = 0;
        for t in 0..cfg.trials {
            let plan = SamplingPlan::uniform(cfg.mode, &cfg.game, 20, trial_seed(0, 20, t));
            let samples = build_multisamples(&plan, &cfg.distribution, &cfg.game).unwrap();
            let all = cfg
                .game
                .values()
                .all(|(s, u)| samples[&s].mean_of(u).unwrap() >= expected.threshold(s).unwrap() - 1e-12);
            hits += usize::from(all);
        }
        assert_eq!(result.summaries[0].confidence, hits as f64 / 40.0);
        assert_eq!(result.summaries[0].vacuous_trials, 40);
    }
}
