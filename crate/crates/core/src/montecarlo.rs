//! Monte-Carlo estimation of outage probabilities, feedback rates and
//! distortions.
//!
//! Trial `i` always sees the channel drawn from stream `i` of the master
//! seed, so every scheme evaluated in one run shares the same channel
//! sequence (common random numbers), and results do not depend on the number
//! of workers. Trials are processed in fixed-size blocks; a block is evaluated
//! in parallel and then folded in trial order, which makes the stopping point
//! of event-driven runs exact and reproducible.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{dq_conv, no_feedback_pair, ConvCodebooks};
use crate::channel::{trial_channel, ChannelState, FadingParams, TrialStreams};
use crate::conferencing::{dq_mr_it, dq_mr_ts, dq_sr_it, dq_sr_ts, gq_mr_it, CodebookCm};
use crate::error::{Error, Result};
use crate::rates::{opt_outage, report, Metric, Strategy};

const BLOCK: usize = 1 << 14;

/// Default outage-event target of event-driven estimates.
pub const DEFAULT_MIN_OUTAGE_EVENTS: u64 = 5000;
pub const DEFAULT_MAX_TRIALS: u64 = 200_000_000;
pub const DEFAULT_FR_TRIALS: u64 = 1_000_000;

/// A policy that maps a channel state to a transmission decision.
#[derive(Debug, Clone)]
pub enum Scheme {
    /// Full-CSI optimum for the metric and strategy.
    Optimal {
        metric: Metric,
        strategy: Strategy,
    },
    SumRateIt,
    SumRateTs,
    MinRateTs {
        max_rounds: usize,
    },
    MinRateIt {
        codebook: CodebookCm,
    },
    /// Global quantizer over the uniform pair codebook (no transcript).
    GlobalIt {
        codebook: CodebookCm,
    },
    Conventional {
        strategy: Strategy,
        codebooks: ConvCodebooks,
    },
    NoFeedback {
        strategy: Strategy,
    },
}

/// Per-trial result of one scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrialOutcome {
    pub outage: bool,
    pub bits: u32,
    pub capped: bool,
}

impl Scheme {
    pub fn label(&self) -> String {
        match self {
            Scheme::Optimal { metric, strategy } => format!("opt({metric:?},{strategy:?})"),
            Scheme::SumRateIt => "dq_sr_it".into(),
            Scheme::SumRateTs => "dq_sr_ts".into(),
            Scheme::MinRateTs { max_rounds } => format!("dq_mr_ts(max_rounds={max_rounds})"),
            Scheme::MinRateIt { codebook } => format!("dq_mr_it(M={})", codebook.m()),
            Scheme::GlobalIt { codebook } => format!("gq_mr_it(M={})", codebook.m()),
            Scheme::Conventional {
                strategy,
                codebooks,
            } => {
                format!("dq_conv({strategy:?},B_tot={})", codebooks.b_tot())
            }
            Scheme::NoFeedback { strategy } => format!("no_feedback({strategy:?})"),
        }
    }

    /// Whether the scheme exchanges feedback with a defined bit count.
    pub fn has_feedback_cost(&self) -> bool {
        !matches!(self, Scheme::Optimal { .. } | Scheme::GlobalIt { .. })
    }

    pub fn evaluate(&self, h: &ChannelState, params: &FadingParams) -> TrialOutcome {
        let rho = params.rho();
        let min_rate_outage = |pair| report(h, &pair, params).min < rho;
        match self {
            Scheme::Optimal { metric, strategy } => TrialOutcome {
                outage: opt_outage(h, params, *metric, *strategy),
                ..Default::default()
            },
            Scheme::SumRateIt => from_transcript(&dq_sr_it(h, params)),
            Scheme::SumRateTs => from_transcript(&dq_sr_ts(h, params)),
            Scheme::MinRateTs { max_rounds } => {
                from_transcript(&dq_mr_ts(h, params, *max_rounds).expect("validated max_rounds"))
            }
            Scheme::MinRateIt { codebook } => from_transcript(&dq_mr_it(h, params, codebook)),
            Scheme::GlobalIt { codebook } => TrialOutcome {
                outage: min_rate_outage(gq_mr_it(h, params, codebook)),
                ..Default::default()
            },
            Scheme::Conventional {
                strategy,
                codebooks,
            } => {
                let (pair, bits) = dq_conv(h, params, *strategy, codebooks.b_tot(), codebooks)
                    .expect("codebooks built for their own budget");
                TrialOutcome {
                    outage: min_rate_outage(pair),
                    bits,
                    capped: false,
                }
            }
            Scheme::NoFeedback { strategy } => TrialOutcome {
                outage: min_rate_outage(no_feedback_pair(*strategy)),
                ..Default::default()
            },
        }
    }

    fn validate(&self) -> Result<()> {
        if let Scheme::MinRateTs { max_rounds: 0 } = self {
            return Err(Error::config("max_rounds must be at least 1"));
        }
        Ok(())
    }
}

fn from_transcript(t: &crate::conferencing::Transcript) -> TrialOutcome {
    TrialOutcome {
        outage: t.declared_outage(),
        bits: t.total_bits(),
        capped: t.terminated_by_cap(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stopping {
    pub min_outage_events: u64,
    /// Cap on the trial count of event-driven estimates.
    pub max_trials: u64,
    /// Trial count of fixed-length estimates (feedback rate).
    pub fr_trials: u64,
}

impl Default for Stopping {
    fn default() -> Self {
        Self {
            min_outage_events: DEFAULT_MIN_OUTAGE_EVENTS,
            max_trials: DEFAULT_MAX_TRIALS,
            fr_trials: DEFAULT_FR_TRIALS,
        }
    }
}

impl Stopping {
    pub fn validate(&self) -> Result<()> {
        if self.min_outage_events == 0 {
            return Err(Error::config("min_outage_events must be at least 1"));
        }
        if self.max_trials < self.min_outage_events {
            return Err(Error::config("max_trials must be >= min_outage_events"));
        }
        if self.fr_trials == 0 {
            return Err(Error::config("fr_trials must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: FadingParams,
    pub scheme: Scheme,
    pub stopping: Stopping,
    pub master_seed: u64,
    pub workers: usize,
}

impl RunConfig {
    pub fn new(params: FadingParams, scheme: Scheme) -> Self {
        Self {
            params,
            scheme,
            stopping: Stopping::default(),
            master_seed: 0,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.stopping.validate()?;
        self.scheme.validate()?;
        if self.workers == 0 {
            return Err(Error::config("workers must be at least 1"));
        }
        Ok(())
    }
}

/// A Monte-Carlo proportion or mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub trials: u64,
    /// Outage events behind the value (0 for feedback-rate estimates).
    pub events: u64,
    pub std_err: f64,
    /// The run hit its trial cap before seeing the requested events.
    pub undersampled: bool,
}

/// Signed paired difference `mean(1{A outage} - 1{B outage})` over common
/// channel draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedEstimate {
    pub value: f64,
    pub trials: u64,
    pub std_err: f64,
    pub events_a: u64,
    pub events_b: u64,
    /// Trials where exactly one of the two schemes is in outage.
    pub discordant: u64,
    pub undersampled: bool,
}

/// When an engine run ends.
#[derive(Debug, Clone, PartialEq)]
pub enum StopRule {
    Fixed(u64),
    /// Stop as soon as every listed scheme has `min_events` outages, or at
    /// `max_trials`.
    Events {
        schemes: Vec<usize>,
        min_events: u64,
        max_trials: u64,
    },
}

/// Aggregated counts of a multi-scheme run.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiRun {
    pub trials: u64,
    pub outages: Vec<u64>,
    pub bits: Vec<u64>,
    pub bits_sq: Vec<u128>,
    pub capped: Vec<u64>,
    /// `only[i][j]`: trials where scheme `i` is in outage and `j` is not.
    pub only: Vec<Vec<u64>>,
    pub min_events: Option<u64>,
}

impl MultiRun {
    fn new(k: usize) -> Self {
        Self {
            trials: 0,
            outages: vec![0; k],
            bits: vec![0; k],
            bits_sq: vec![0; k],
            capped: vec![0; k],
            only: vec![vec![0; k]; k],
            min_events: None,
        }
    }

    fn absorb(&mut self, row: &[TrialOutcome]) {
        self.trials += 1;
        for (i, o) in row.iter().enumerate() {
            self.outages[i] += o.outage as u64;
            self.bits[i] += o.bits as u64;
            self.bits_sq[i] += (o.bits as u128) * (o.bits as u128);
            self.capped[i] += o.capped as u64;
            if o.outage {
                for (j, other) in row.iter().enumerate() {
                    if !other.outage {
                        self.only[i][j] += 1;
                    }
                }
            }
        }
    }

    fn undersampled(&self, i: usize) -> bool {
        self.min_events.is_some_and(|m| self.outages[i] < m)
    }

    pub fn outage(&self, i: usize) -> Estimate {
        let n = self.trials as f64;
        let value = self.outages[i] as f64 / n;
        Estimate {
            value,
            trials: self.trials,
            events: self.outages[i],
            std_err: (value * (1.0 - value) / n).sqrt(),
            undersampled: self.undersampled(i),
        }
    }

    pub fn feedback_rate(&self, i: usize) -> Estimate {
        let n = self.trials as f64;
        let mean = self.bits[i] as f64 / n;
        let second = self.bits_sq[i] as f64 / n;
        Estimate {
            value: mean,
            trials: self.trials,
            events: 0,
            std_err: ((second - mean * mean).max(0.0) / n).sqrt(),
            undersampled: false,
        }
    }

    /// Paired difference `OUT(a) - OUT(b)`.
    pub fn difference(&self, a: usize, b: usize) -> PairedEstimate {
        let n = self.trials as f64;
        let (ab, ba) = (self.only[a][b], self.only[b][a]);
        let mean = (ab as f64 - ba as f64) / n;
        let second = (ab + ba) as f64 / n;
        PairedEstimate {
            value: mean,
            trials: self.trials,
            std_err: ((second - mean * mean).max(0.0) / n).sqrt(),
            events_a: self.outages[a],
            events_b: self.outages[b],
            discordant: ab + ba,
            undersampled: self.undersampled(a) || self.undersampled(b),
        }
    }
}

/// Evaluates `schemes` on common channel draws until `stop` is met.
pub fn run_schemes(
    params: &FadingParams,
    schemes: &[Scheme],
    master_seed: u64,
    workers: usize,
    stop: &StopRule,
) -> Result<MultiRun> {
    if schemes.is_empty() {
        return Err(Error::config("no schemes to evaluate"));
    }
    if workers == 0 {
        return Err(Error::config("workers must be at least 1"));
    }
    for s in schemes {
        s.validate()?;
    }
    let (cap, rule) = match stop {
        StopRule::Fixed(n) => (*n, None),
        StopRule::Events {
            schemes: watch,
            min_events,
            max_trials,
        } => {
            if watch.is_empty() || watch.iter().any(|&i| i >= schemes.len()) {
                return Err(Error::config("stopping rule watches an unknown scheme"));
            }
            if *min_events == 0 {
                return Err(Error::config("min_events must be at least 1"));
            }
            (*max_trials, Some((watch.as_slice(), *min_events)))
        }
    };

    let pool = if workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::config(e.to_string()))?,
        )
    } else {
        None
    };

    let streams = TrialStreams::new(master_seed);
    let k = schemes.len();
    let mut acc = MultiRun::new(k);
    acc.min_events = rule.map(|(_, m)| m);
    let mut buf = vec![TrialOutcome::default(); BLOCK * k];

    let done = |acc: &MultiRun| match rule {
        Some((watch, min)) => watch.iter().all(|&i| acc.outages[i] >= min),
        None => false,
    };

    let mut next = 0u64;
    while next < cap && !done(&acc) {
        let len = (cap - next).min(BLOCK as u64) as usize;
        let rows = &mut buf[..len * k];
        let fill = |(offset, row): (usize, &mut [TrialOutcome])| {
            let h = trial_channel(&streams, next + offset as u64, params);
            for (slot, scheme) in row.iter_mut().zip(schemes) {
                *slot = scheme.evaluate(&h, params);
            }
        };
        match &pool {
            Some(pool) => pool.install(|| rows.par_chunks_mut(k).enumerate().for_each(fill)),
            None => rows.chunks_mut(k).enumerate().for_each(fill),
        }
        for row in rows.chunks(k) {
            acc.absorb(row);
            if done(&acc) {
                break;
            }
        }
        next += len as u64;
    }
    Ok(acc)
}

/// Outage probability of `cfg.scheme`, drawing channels until the scheme has
/// `min_outage_events` outages or `max_trials` trials were spent.
pub fn estimate_outage(cfg: &RunConfig) -> Result<Estimate> {
    cfg.validate()?;
    let run = run_schemes(
        &cfg.params,
        std::slice::from_ref(&cfg.scheme),
        cfg.master_seed,
        cfg.workers,
        &StopRule::Events {
            schemes: vec![0],
            min_events: cfg.stopping.min_outage_events,
            max_trials: cfg.stopping.max_trials,
        },
    )?;
    Ok(run.outage(0))
}

/// Average feedback bits per channel state over `fr_trials` trials.
pub fn estimate_fr(cfg: &RunConfig) -> Result<Estimate> {
    cfg.validate()?;
    if !cfg.scheme.has_feedback_cost() {
        return Err(Error::config(format!(
            "{} exchanges no feedback",
            cfg.scheme.label()
        )));
    }
    let run = run_schemes(
        &cfg.params,
        std::slice::from_ref(&cfg.scheme),
        cfg.master_seed,
        cfg.workers,
        &StopRule::Fixed(cfg.stopping.fr_trials),
    )?;
    Ok(run.feedback_rate(0))
}

/// Distortion `OUT(scheme) - OUT(opt_scheme)` on common draws. The run stops
/// on the reference scheme's outage count, which does not depend on the
/// quantizer, so sweeps over quantizer knobs with the same seed share
/// exactly the same trials.
pub fn estimate_distortion(cfg: &RunConfig, opt_scheme: &Scheme) -> Result<PairedEstimate> {
    cfg.validate()?;
    let run = run_schemes(
        &cfg.params,
        &[opt_scheme.clone(), cfg.scheme.clone()],
        cfg.master_seed,
        cfg.workers,
        &StopRule::Events {
            schemes: vec![0],
            min_events: cfg.stopping.min_outage_events,
            max_trials: cfg.stopping.max_trials,
        },
    )?;
    Ok(run.difference(1, 0))
}

/// Where the two optimal minimum-rate outage curves cross.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Crossing {
    /// Interpolated crossing power in dB.
    At(f64),
    /// Time sharing is already no worse than interference transmission at
    /// the lowest grid point: the crossing lies at or below the grid.
    BelowGrid,
    /// Interference transmission wins on the whole grid.
    AboveGrid,
}

impl Crossing {
    pub fn db(&self) -> Option<f64> {
        match self {
            Crossing::At(x) => Some(*x),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub p_db: f64,
    pub ts: Estimate,
    pub it: Estimate,
    /// `OUT_ts - OUT_it` on common draws.
    pub diff: PairedEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    pub points: Vec<GridPoint>,
    pub crossing: Crossing,
    pub undersampled: bool,
}

/// Sampling settings shared by every grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointConfig {
    pub stopping: Stopping,
    pub master_seed: u64,
    pub workers: usize,
}

impl Default for PointConfig {
    fn default() -> Self {
        Self {
            stopping: Stopping::default(),
            master_seed: 0,
            workers: 1,
        }
    }
}

/// First sign change of `diffs` over `xs`, by linear interpolation.
pub fn first_crossing(xs: &[f64], diffs: &[f64]) -> Crossing {
    for i in 0..xs.len() {
        if diffs[i] == 0.0 {
            return Crossing::At(xs[i]);
        }
        if i + 1 < xs.len() && (diffs[i] > 0.0) != (diffs[i + 1] > 0.0) && diffs[i + 1] != 0.0 {
            let (x0, x1, d0, d1) = (xs[i], xs[i + 1], diffs[i], diffs[i + 1]);
            return Crossing::At(x0 + d0 * (x1 - x0) / (d0 - d1));
        }
    }
    if diffs[0] < 0.0 {
        Crossing::BelowGrid
    } else {
        Crossing::AboveGrid
    }
}

/// Estimates both optimal minimum-rate outage curves on `p_grid_db` (common
/// draws at every point) and locates their crossing.
pub fn find_p_th(
    eps: f64,
    rho: f64,
    p_grid_db: &[f64],
    cfg: &PointConfig,
) -> Result<ThresholdSearch> {
    if p_grid_db.len() < 2 {
        return Err(Error::config("power grid needs at least two points"));
    }
    if p_grid_db.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("power grid must be strictly ascending"));
    }
    cfg.stopping.validate()?;
    let schemes = [
        Scheme::Optimal {
            metric: Metric::MinRate,
            strategy: Strategy::TimeSharing,
        },
        Scheme::Optimal {
            metric: Metric::MinRate,
            strategy: Strategy::Interference,
        },
    ];
    let stop = StopRule::Events {
        schemes: vec![0, 1],
        min_events: cfg.stopping.min_outage_events,
        max_trials: cfg.stopping.max_trials,
    };
    let mut points = Vec::with_capacity(p_grid_db.len());
    for &p_db in p_grid_db {
        let params = FadingParams::with_db(eps, p_db, rho)?;
        let run = run_schemes(&params, &schemes, cfg.master_seed, cfg.workers, &stop)?;
        points.push(GridPoint {
            p_db,
            ts: run.outage(0),
            it: run.outage(1),
            diff: run.difference(0, 1),
        });
    }
    let diffs: Vec<f64> = points.iter().map(|p| p.diff.value).collect();
    let crossing = first_crossing(p_grid_db, &diffs);
    let undersampled = points.iter().any(|p| p.diff.undersampled);
    Ok(ThresholdSearch {
        points,
        crossing,
        undersampled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opt(metric: Metric, strategy: Strategy) -> Scheme {
        Scheme::Optimal { metric, strategy }
    }

    fn cfg(p_db: f64, scheme: Scheme) -> RunConfig {
        let mut c = RunConfig::new(FadingParams::with_db(0.1, p_db, 0.5).unwrap(), scheme);
        c.stopping.min_outage_events = 2000;
        c.stopping.fr_trials = 50_000;
        c.master_seed = 3;
        c
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(0.0, opt(Metric::SumRate, Strategy::TimeSharing));
        c.stopping.min_outage_events = 0;
        assert!(estimate_outage(&c).is_err());
        let mut c = cfg(0.0, opt(Metric::SumRate, Strategy::TimeSharing));
        c.stopping.max_trials = 10;
        assert!(estimate_outage(&c).is_err());
        let mut c = cfg(0.0, opt(Metric::SumRate, Strategy::TimeSharing));
        c.workers = 0;
        assert!(estimate_outage(&c).is_err());
        let c = cfg(0.0, Scheme::MinRateTs { max_rounds: 0 });
        assert!(estimate_outage(&c).is_err());
        let c = cfg(0.0, opt(Metric::MinRate, Strategy::TimeSharing));
        assert!(estimate_fr(&c).is_err());
    }

    #[test]
    fn stops_exactly_at_event_target() {
        let c = cfg(0.0, opt(Metric::SumRate, Strategy::TimeSharing));
        let e = estimate_outage(&c).unwrap();
        assert_eq!(e.events, 2000);
        assert!(!e.undersampled);
        assert!((e.value - 0.3996).abs() < 4.0 * e.std_err);
    }

    #[test]
    fn zero_events_is_flagged() {
        let mut c = cfg(0.0, opt(Metric::SumRate, Strategy::TimeSharing));
        c.params = FadingParams::with_db(0.1, 90.0, 0.5).unwrap();
        c.stopping.min_outage_events = 1;
        c.stopping.max_trials = 1000;
        let e = estimate_outage(&c).unwrap();
        assert_eq!((e.value, e.events, e.trials), (0.0, 0, 1000));
        assert!(e.undersampled);
    }

    #[test]
    fn vanishing_power_means_certain_outage() {
        for scheme in [
            opt(Metric::SumRate, Strategy::Interference),
            opt(Metric::MinRate, Strategy::TimeSharing),
            Scheme::MinRateTs { max_rounds: 64 },
            Scheme::MinRateIt {
                codebook: CodebookCm::new(4).unwrap(),
            },
            Scheme::NoFeedback {
                strategy: Strategy::Interference,
            },
        ] {
            let e = estimate_outage(&cfg(-40.0, scheme.clone())).unwrap();
            assert!(e.value >= 0.99, "{}: {}", scheme.label(), e.value);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let schemes = [
            Scheme::MinRateTs { max_rounds: 64 },
            opt(Metric::MinRate, Strategy::TimeSharing),
            Scheme::MinRateIt {
                codebook: CodebookCm::new(3).unwrap(),
            },
        ];
        let params = FadingParams::with_db(0.1, 5.0, 0.5).unwrap();
        let stop = StopRule::Events {
            schemes: vec![1],
            min_events: 3000,
            max_trials: 1_000_000,
        };
        let a = run_schemes(&params, &schemes, 9, 1, &stop).unwrap();
        let b = run_schemes(&params, &schemes, 9, 3, &stop).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.outages[1], 3000);
    }

    #[test]
    fn distortion_against_itself_is_zero() {
        let s = opt(Metric::MinRate, Strategy::Interference);
        let d = estimate_distortion(&cfg(5.0, s.clone()), &s).unwrap();
        assert_eq!(d.value, 0.0);
        assert_eq!(d.std_err, 0.0);
        assert_eq!(d.discordant, 0);
    }

    #[test]
    fn sum_rate_quantizer_equals_optimum() {
        let a = estimate_outage(&cfg(10.0, Scheme::SumRateIt)).unwrap();
        let b = estimate_outage(&cfg(10.0, opt(Metric::SumRate, Strategy::Interference))).unwrap();
        assert_eq!(a, b);
        let fr = estimate_fr(&cfg(10.0, Scheme::SumRateIt)).unwrap();
        assert_eq!((fr.value, fr.std_err), (2.0, 0.0));
    }

    #[test]
    fn power_protocol_rate_bound() {
        let fr = estimate_fr(&cfg(
            5.0,
            Scheme::MinRateIt {
                codebook: CodebookCm::new(4).unwrap(),
            },
        ))
        .unwrap();
        assert!(fr.value <= 7.0 && fr.value >= 4.0);
    }

    #[test]
    fn crossing_interpolation() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(
            first_crossing(&xs, &[0.3, 0.1, -0.1, -0.2]),
            Crossing::At(1.5)
        );
        assert_eq!(
            first_crossing(&xs, &[0.3, 0.0, -0.1, -0.2]),
            Crossing::At(1.0)
        );
        assert_eq!(
            first_crossing(&xs, &[-0.3, -0.1, -0.1, -0.2]),
            Crossing::BelowGrid
        );
        assert_eq!(
            first_crossing(&xs, &[0.3, 0.1, 0.1, 0.2]),
            Crossing::AboveGrid
        );
    }

    #[test]
    fn p_th_grid_validation() {
        let c = PointConfig::default();
        assert!(find_p_th(1.0, 0.5, &[3.0], &c).is_err());
        assert!(find_p_th(1.0, 0.5, &[3.0, 2.0], &c).is_err());
    }

    #[test]
    fn p_th_without_crossing() {
        let c = PointConfig {
            stopping: Stopping {
                min_outage_events: 500,
                ..Stopping::default()
            },
            ..PointConfig::default()
        };
        // far above the crossing for eps = 1, time sharing wins everywhere
        let r = find_p_th(1.0, 0.5, &[20.0, 25.0], &c).unwrap();
        assert_eq!(r.crossing, Crossing::BelowGrid);
        assert!(r.points.iter().all(|p| p.ts.value < p.it.value));
    }

    #[test]
    fn std_err_is_calibrated() {
        let truth = (1.0 - (-1f64).exp()).powi(2);
        let mut inside = 0;
        for seed in 0..100 {
            let mut c = cfg(0.0, opt(Metric::SumRate, Strategy::TimeSharing));
            c.master_seed = 1000 + seed;
            c.stopping.min_outage_events = 400;
            let e = estimate_outage(&c).unwrap();
            inside += ((e.value - truth).abs() <= 3.0 * e.std_err) as u32;
        }
        assert!(inside >= 99, "{inside}/100 within 3 sigma");
    }
}
