//! Experiment specifications and the tables behind each figure.
//!
//! Every table carries the resolved configuration as metadata. The worker
//! count is deliberately left out, so output bytes only depend on what can
//! change the numbers.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use serde_json::{json, Map, Value};

use crate::baseline::{CodebookStore, ConvCodebooks, TrainConfig};
use crate::channel::FadingParams;
use crate::conferencing::{CodebookCm, DEFAULT_MAX_ROUNDS};
use crate::error::{Error, Result};
use crate::montecarlo::{
    find_p_th, run_schemes, Crossing, MultiRun, PointConfig, Scheme, StopRule, Stopping,
};
use crate::rates::{Metric, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Custom,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::config(format!("unknown format `{s}` (csv or json)"))),
        }
    }
}

/// Scheme names accepted by custom sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Opt { metric: Metric, strategy: Strategy },
    DqSrIt,
    DqSrTs,
    DqMrTs,
    DqMrIt,
    GqMrIt,
    Conv(Strategy),
    NoFeedback(Strategy),
}

const SCHEME_NAMES: [(&str, SchemeKind); 15] = {
    use Metric::*;
    use Strategy::*;
    [
        (
            "opt-sr-ts",
            SchemeKind::Opt {
                metric: SumRate,
                strategy: TimeSharing,
            },
        ),
        (
            "opt-sr-it",
            SchemeKind::Opt {
                metric: SumRate,
                strategy: Interference,
            },
        ),
        (
            "opt-mr-ts",
            SchemeKind::Opt {
                metric: MinRate,
                strategy: TimeSharing,
            },
        ),
        (
            "opt-mr-it",
            SchemeKind::Opt {
                metric: MinRate,
                strategy: Interference,
            },
        ),
        ("dq-sr-it", SchemeKind::DqSrIt),
        ("dq-sr-ts", SchemeKind::DqSrTs),
        ("dq-mr-ts", SchemeKind::DqMrTs),
        ("dq-mr-it", SchemeKind::DqMrIt),
        ("gq-mr-it", SchemeKind::GqMrIt),
        ("conv-ts", SchemeKind::Conv(TimeSharing)),
        ("conv-it", SchemeKind::Conv(Interference)),
        ("nofb-ts", SchemeKind::NoFeedback(TimeSharing)),
        ("nofb-it", SchemeKind::NoFeedback(Interference)),
        ("no-feedback-ts", SchemeKind::NoFeedback(TimeSharing)),
        ("no-feedback-it", SchemeKind::NoFeedback(Interference)),
    ]
};

impl SchemeKind {
    pub fn name(self) -> &'static str {
        SCHEME_NAMES
            .iter()
            .find(|(_, k)| *k == self)
            .map(|(n, _)| *n)
            .expect("every kind is named")
    }

    fn uses_m(self) -> bool {
        matches!(self, SchemeKind::DqMrIt | SchemeKind::GqMrIt)
    }

    fn uses_b_tot(self) -> bool {
        matches!(self, SchemeKind::Conv(_))
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SCHEME_NAMES
            .iter()
            .find(|(n, _)| *n == s)
            .map(|(_, k)| *k)
            .ok_or_else(|| {
                let names: Vec<_> = SCHEME_NAMES.iter().map(|(n, _)| *n).collect();
                Error::config(format!(
                    "unknown scheme `{s}`; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Reference crossing powers (dB) used to place the single power of the
/// distortion-versus-M sweep below the crossing.
pub const P_TH_REFERENCE: [(f64, f64); 4] = [(1.0, 2.0), (0.5, 5.0), (0.1, 12.0), (0.01, 25.0)];
/// Offset below the reference crossing for distortion sweeps.
pub const P_BELOW_TH_DB: f64 = 5.0;

fn p_th_reference(eps: f64) -> Option<f64> {
    P_TH_REFERENCE
        .iter()
        .find(|(e, _)| *e == eps)
        .map(|(_, p)| *p)
}

/// `4 * ceil((2 log2(M + 1) + 3) / 4)`: the conventional budget matched to
/// the power protocol's worst-case bit count.
pub fn matched_b_tot(m: u32) -> u32 {
    let worst = 2.0 * (m as f64 + 1.0).log2() + 3.0;
    4 * (worst / 4.0).ceil() as u32
}

pub fn db_range(from: f64, to: f64, step: f64) -> Vec<f64> {
    let n = ((to - from) / step).round() as i64;
    (0..=n).map(|i| from + i as f64 * step).collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    pub figure: Figure,
    pub eps: Vec<f64>,
    pub rho: Vec<f64>,
    /// Powers in dB. Empty for fig3/fig4 selects the per-eps default.
    pub p_db: Vec<f64>,
    pub m: Vec<u32>,
    pub b_tot: Vec<u32>,
    /// Custom sweeps only; empty means just `seed`.
    pub seeds: Vec<u64>,
    pub scheme: Option<SchemeKind>,
    pub max_rounds: usize,
    pub stopping: Stopping,
    pub seed: u64,
    pub workers: usize,
    pub format: Format,
    pub training: TrainConfig,
    pub codebook_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    /// The defaults of each figure. Power ranges are presentation choices.
    pub fn for_figure(figure: Figure) -> Self {
        let all_eps = vec![1.0, 0.5, 0.1, 0.01];
        let (eps, p_db, m, b_tot) = match figure {
            Figure::Fig1 => (all_eps, db_range(-10.0, 30.0, 1.0), vec![], vec![]),
            Figure::Fig2 => (vec![0.1], db_range(-20.0, 40.0, 5.0), vec![], vec![16]),
            Figure::Fig3 => (all_eps, vec![], (1..=16).collect(), vec![]),
            Figure::Fig4 => (vec![0.1], vec![], vec![2, 8], vec![]),
            Figure::Custom => (vec![], vec![], vec![], vec![]),
        };
        Self {
            name: figure.name().to_string(),
            figure,
            eps,
            rho: vec![0.5],
            p_db,
            m,
            b_tot,
            seeds: vec![],
            scheme: None,
            max_rounds: DEFAULT_MAX_ROUNDS,
            stopping: Stopping::default(),
            seed: 1,
            workers: 1,
            format: Format::Csv,
            training: TrainConfig::default(),
            codebook_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.stopping.validate()?;
        if self.workers == 0 {
            return Err(Error::config("workers must be at least 1"));
        }
        if self.max_rounds == 0 {
            return Err(Error::config("max_rounds must be at least 1"));
        }
        if self.eps.is_empty() || self.rho.is_empty() {
            return Err(Error::config("eps and rho sweeps must be non-empty"));
        }
        for &e in &self.eps {
            for &r in &self.rho {
                FadingParams::new(e, 1.0, r)?;
            }
        }
        if self.p_db.iter().any(|p| !p.is_finite()) {
            return Err(Error::config("powers must be finite"));
        }
        if self.m.contains(&0) {
            return Err(Error::config("M must be at least 1"));
        }
        if self.b_tot.iter().any(|b| *b == 0 || !b.is_multiple_of(4)) {
            return Err(Error::config(
                "B_tot values must be positive multiples of 4",
            ));
        }
        let needs_p = matches!(self.figure, Figure::Fig1 | Figure::Fig2 | Figure::Custom);
        if needs_p && self.p_db.is_empty() {
            return Err(Error::config("power sweep must be non-empty"));
        }
        match self.figure {
            Figure::Fig1 => {
                if self.p_db.len() < 2 || self.p_db.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::config(
                        "fig1 needs an ascending power grid of at least two points",
                    ));
                }
            }
            Figure::Fig2 => {
                if self.b_tot.is_empty() {
                    return Err(Error::config("fig2 needs a B_tot value"));
                }
            }
            Figure::Fig3 | Figure::Fig4 => {
                if self.m.is_empty() {
                    return Err(Error::config("M sweep must be non-empty"));
                }
                if self.p_db.is_empty() {
                    for &e in &self.eps {
                        if p_th_reference(e).is_none() {
                            return Err(Error::config(format!(
                                "no default power for eps = {e}; pass powers explicitly"
                            )));
                        }
                    }
                }
            }
            Figure::Custom => {
                let kind = self
                    .scheme
                    .ok_or_else(|| Error::config("custom sweep needs a scheme"))?;
                if kind.uses_m() != !self.m.is_empty() {
                    return Err(Error::config(format!(
                        "scheme {kind} {} an M sweep",
                        if kind.uses_m() {
                            "needs"
                        } else {
                            "does not take"
                        }
                    )));
                }
                if kind.uses_b_tot() != !self.b_tot.is_empty() {
                    return Err(Error::config(format!(
                        "scheme {kind} {} a B_tot sweep",
                        if kind.uses_b_tot() {
                            "needs"
                        } else {
                            "does not take"
                        }
                    )));
                }
            }
        }
        Ok(())
    }

    fn point_config(&self) -> PointConfig {
        PointConfig {
            stopping: self.stopping,
            master_seed: self.seed,
            workers: self.workers,
        }
    }

    fn store(&self) -> CodebookStore {
        match &self.codebook_dir {
            Some(d) => CodebookStore::with_dir(self.training, d.clone()),
            None => CodebookStore::new(self.training),
        }
    }

    fn powers_for(&self, eps: f64) -> Vec<f64> {
        if !self.p_db.is_empty() {
            return self.p_db.clone();
        }
        let th = p_th_reference(eps).expect("validated");
        match self.figure {
            Figure::Fig4 => db_range(th - 20.0, th, 5.0),
            _ => vec![th - P_BELOW_TH_DB],
        }
    }

    fn meta(&self) -> Vec<(String, String)> {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        let ints = |v: &[u32]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        let mut m = vec![
            ("name".into(), self.name.clone()),
            ("figure".into(), self.figure.name().into()),
            ("version".into(), env!("CARGO_PKG_VERSION").into()),
            ("seed".into(), self.seed.to_string()),
            (
                "min_outage_events".into(),
                self.stopping.min_outage_events.to_string(),
            ),
            ("max_trials".into(), self.stopping.max_trials.to_string()),
            ("fr_trials".into(), self.stopping.fr_trials.to_string()),
            ("eps".into(), list(&self.eps)),
            ("rho".into(), list(&self.rho)),
            ("p_db".into(), list(&self.p_db)),
        ];
        if !self.m.is_empty() {
            m.push(("m".into(), ints(&self.m)));
        }
        if !self.b_tot.is_empty() {
            m.push(("b_tot".into(), ints(&self.b_tot)));
        }
        if matches!(self.figure, Figure::Fig2 | Figure::Custom) {
            m.push(("max_rounds".into(), self.max_rounds.to_string()));
        }
        if matches!(
            self.figure,
            Figure::Fig2 | Figure::Fig3 | Figure::Fig4 | Figure::Custom
        ) {
            m.push((
                "lloyd".into(),
                format!(
                    "training_draws={} max_iterations={} rel_tol={}",
                    self.training.training_draws,
                    self.training.max_iterations,
                    self.training.rel_tol
                ),
            ));
        }
        if matches!(self.figure, Figure::Fig3 | Figure::Fig4) && self.p_db.is_empty() {
            let refs: Vec<_> = P_TH_REFERENCE
                .iter()
                .map(|(e, p)| format!("{e}:{p}"))
                .collect();
            let rule = match self.figure {
                Figure::Fig3 => format!("p_th_ref - {P_BELOW_TH_DB} dB"),
                _ => "p_th_ref - 20 ..= p_th_ref dB, step 5".to_string(),
            };
            m.push((
                "p_rule".into(),
                format!("{rule}; p_th_ref {}", refs.join(";")),
            ));
        }
        if let Some(kind) = self.scheme {
            m.push(("scheme".into(), kind.name().into()));
        }
        if !self.seeds.is_empty() {
            m.push((
                "seeds".into(),
                self.seeds
                    .iter()
                    .map(u64::to_string)
                    .collect::<Vec<_>>()
                    .join(";"),
            ));
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => x.to_string(),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(n) => json!(n),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(n) => Some(*n as f64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub undersampled: bool,
}

impl Table {
    fn new(meta: Vec<(String, String)>, columns: &[&'static str]) -> Self {
        Self {
            meta,
            columns: columns.to_vec(),
            rows: vec![],
            undersampled: false,
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Numeric values of a column, `None` for empty cells.
    pub fn values(&self, name: &str) -> Vec<Option<f64>> {
        let i = self.column(name).expect("known column");
        self.rows.iter().map(|r| r[i].as_f64()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "# undersampled: {}", self.undersampled);
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<_> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut meta = Map::new();
        for (k, v) in &self.meta {
            meta.insert(k.clone(), json!(v));
        }
        meta.insert("undersampled".into(), json!(self.undersampled));
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(r)
                    .map(|(c, v)| (c.to_string(), v.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&json!({ "meta": meta, "rows": rows }))
            .expect("tables serialize");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

pub const FIG1_COLUMNS: [&str; 15] = [
    "kind",
    "rho",
    "eps",
    "p_db",
    "out_ts",
    "out_ts_se",
    "events_ts",
    "out_it",
    "out_it_se",
    "events_it",
    "diff",
    "diff_se",
    "trials",
    "undersampled",
    "note",
];

/// Optimal minimum-rate outage of time sharing and interference transmission
/// versus power, with one crossing summary row per (rho, eps).
pub fn run_fig1(spec: &ExperimentSpec) -> Result<Table> {
    spec.validate()?;
    let mut t = Table::new(spec.meta(), &FIG1_COLUMNS);
    for &rho in &spec.rho {
        for &eps in &spec.eps {
            let search = find_p_th(eps, rho, &spec.p_db, &spec.point_config())?;
            for p in &search.points {
                t.push(vec![
                    Cell::Text("point".into()),
                    Cell::Num(rho),
                    Cell::Num(eps),
                    Cell::Num(p.p_db),
                    Cell::Num(p.ts.value),
                    Cell::Num(p.ts.std_err),
                    Cell::Int(p.ts.events),
                    Cell::Num(p.it.value),
                    Cell::Num(p.it.std_err),
                    Cell::Int(p.it.events),
                    Cell::Num(p.diff.value),
                    Cell::Num(p.diff.std_err),
                    Cell::Int(p.diff.trials),
                    Cell::Bool(p.diff.undersampled),
                    Cell::Empty,
                ]);
            }
            let (p_th, note) = match search.crossing {
                Crossing::At(x) => (Cell::Num(x), "crossing"),
                Crossing::BelowGrid => (Cell::Empty, "below_grid"),
                Crossing::AboveGrid => (Cell::Empty, "above_grid"),
            };
            let mut row = vec![Cell::Empty; FIG1_COLUMNS.len()];
            row[0] = Cell::Text("p_th".into());
            row[1] = Cell::Num(rho);
            row[2] = Cell::Num(eps);
            row[3] = p_th;
            row[13] = Cell::Bool(search.undersampled);
            row[14] = Cell::Text(note.into());
            t.push(row);
            t.undersampled |= search.undersampled;
        }
    }
    Ok(t)
}

pub const FIG2_COLUMNS: [&str; 16] = [
    "rho",
    "eps",
    "p_db",
    "b_tot",
    "out_dq",
    "out_dq_se",
    "out_opt",
    "out_conv",
    "out_conv_se",
    "out_nofb",
    "out_nofb_se",
    "fr_dq",
    "fr_dq_se",
    "cap_rate",
    "trials",
    "undersampled",
];

/// Time-sharing outage of the bisection protocol, the conventional quantizer
/// and no feedback, plus the protocol's average feedback rate.
pub fn run_fig2(spec: &ExperimentSpec) -> Result<Table> {
    spec.validate()?;
    let mut store = spec.store();
    let mut t = Table::new(spec.meta(), &FIG2_COLUMNS);
    let dq = Scheme::MinRateTs {
        max_rounds: spec.max_rounds,
    };
    for &rho in &spec.rho {
        for &eps in &spec.eps {
            for &b_tot in &spec.b_tot {
                let codebooks = store.conventional(b_tot, eps)?;
                let schemes = [
                    dq.clone(),
                    Scheme::Optimal {
                        metric: Metric::MinRate,
                        strategy: Strategy::TimeSharing,
                    },
                    Scheme::Conventional {
                        strategy: Strategy::TimeSharing,
                        codebooks,
                    },
                    Scheme::NoFeedback {
                        strategy: Strategy::TimeSharing,
                    },
                ];
                for &p_db in &spec.p_db {
                    let params = FadingParams::with_db(eps, p_db, rho)?;
                    let run = run_schemes(
                        &params,
                        &schemes,
                        spec.seed,
                        spec.workers,
                        &events_rule(spec, vec![0, 1, 2, 3]),
                    )?;
                    let fr_run = run_schemes(
                        &params,
                        std::slice::from_ref(&dq),
                        spec.seed,
                        spec.workers,
                        &StopRule::Fixed(spec.stopping.fr_trials),
                    )?;
                    let (out, conv, nofb) = (run.outage(0), run.outage(2), run.outage(3));
                    let fr = fr_run.feedback_rate(0);
                    let under = (0..4).any(|i| run.outage(i).undersampled);
                    t.undersampled |= under;
                    t.push(vec![
                        Cell::Num(rho),
                        Cell::Num(eps),
                        Cell::Num(p_db),
                        Cell::Int(b_tot as u64),
                        Cell::Num(out.value),
                        Cell::Num(out.std_err),
                        Cell::Num(run.outage(1).value),
                        Cell::Num(conv.value),
                        Cell::Num(conv.std_err),
                        Cell::Num(nofb.value),
                        Cell::Num(nofb.std_err),
                        Cell::Num(fr.value),
                        Cell::Num(fr.std_err),
                        Cell::Num(fr_run.capped[0] as f64 / fr_run.trials as f64),
                        Cell::Int(run.trials),
                        Cell::Bool(under),
                    ]);
                }
            }
        }
    }
    Ok(t)
}

fn events_rule(spec: &ExperimentSpec, schemes: Vec<usize>) -> StopRule {
    StopRule::Events {
        schemes,
        min_events: spec.stopping.min_outage_events,
        max_trials: spec.stopping.max_trials,
    }
}

pub const FIG34_COLUMNS: [&str; 16] = [
    "rho",
    "eps",
    "p_db",
    "m",
    "b_tot",
    "out_opt",
    "dist_dq",
    "dist_dq_se",
    "dist_conv",
    "dist_conv_se",
    "dist_nofb",
    "dist_nofb_se",
    "dist_conv_minus_dq_se",
    "fr_dq",
    "trials",
    "undersampled",
];

/// Distortions of the power protocol, the budget-matched conventional
/// quantizer and no feedback against the optimal interference-transmission
/// outage. All M values at one power share a single common-draw run.
pub fn run_fig3_fig4(spec: &ExperimentSpec) -> Result<Table> {
    spec.validate()?;
    let mut store = spec.store();
    let mut t = Table::new(spec.meta(), &FIG34_COLUMNS);
    for &rho in &spec.rho {
        for &eps in &spec.eps {
            let mut schemes = vec![
                Scheme::Optimal {
                    metric: Metric::MinRate,
                    strategy: Strategy::Interference,
                },
                Scheme::NoFeedback {
                    strategy: Strategy::Interference,
                },
            ];
            let mut conv_cache: Vec<(u32, ConvCodebooks)> = vec![];
            for &m in &spec.m {
                let b_tot = matched_b_tot(m);
                let codebooks = match conv_cache.iter().find(|(b, _)| *b == b_tot) {
                    Some((_, c)) => c.clone(),
                    None => {
                        let c = store.conventional(b_tot, eps)?;
                        conv_cache.push((b_tot, c.clone()));
                        c
                    }
                };
                schemes.push(Scheme::MinRateIt {
                    codebook: CodebookCm::new(m)?,
                });
                schemes.push(Scheme::Conventional {
                    strategy: Strategy::Interference,
                    codebooks,
                });
            }
            let dq_only: Vec<Scheme> = schemes.iter().skip(2).step_by(2).cloned().collect();
            for p_db in spec.powers_for(eps) {
                let params = FadingParams::with_db(eps, p_db, rho)?;
                let run = run_schemes(
                    &params,
                    &schemes,
                    spec.seed,
                    spec.workers,
                    &events_rule(spec, vec![0]),
                )?;
                let fr_run = run_schemes(
                    &params,
                    &dq_only,
                    spec.seed,
                    spec.workers,
                    &StopRule::Fixed(spec.stopping.fr_trials),
                )?;
                let opt = run.outage(0);
                t.undersampled |= opt.undersampled;
                let nofb = run.difference(1, 0);
                for (k, &m) in spec.m.iter().enumerate() {
                    let (i_dq, i_conv) = (2 + 2 * k, 3 + 2 * k);
                    let dq = run.difference(i_dq, 0);
                    let conv = run.difference(i_conv, 0);
                    let gap = run.difference(i_conv, i_dq);
                    t.push(vec![
                        Cell::Num(rho),
                        Cell::Num(eps),
                        Cell::Num(p_db),
                        Cell::Int(m as u64),
                        Cell::Int(matched_b_tot(m) as u64),
                        Cell::Num(opt.value),
                        Cell::Num(dq.value),
                        Cell::Num(dq.std_err),
                        Cell::Num(conv.value),
                        Cell::Num(conv.std_err),
                        Cell::Num(nofb.value),
                        Cell::Num(nofb.std_err),
                        Cell::Num(gap.std_err),
                        Cell::Num(fr_run.feedback_rate(k).value),
                        Cell::Int(run.trials),
                        Cell::Bool(opt.undersampled),
                    ]);
                }
            }
        }
    }
    Ok(t)
}

pub const CUSTOM_COLUMNS: [&str; 15] = [
    "scheme",
    "seed",
    "rho",
    "eps",
    "p_db",
    "m",
    "b_tot",
    "out",
    "out_se",
    "events",
    "trials",
    "fr",
    "fr_se",
    "cap_rate",
    "undersampled",
];

/// One row per point of the declared sweep axes for a single scheme.
pub fn run_custom(spec: &ExperimentSpec) -> Result<Table> {
    spec.validate()?;
    let kind = spec.scheme.expect("validated");
    let mut store = spec.store();
    let mut t = Table::new(spec.meta(), &CUSTOM_COLUMNS);
    let seeds = if spec.seeds.is_empty() {
        vec![spec.seed]
    } else {
        spec.seeds.clone()
    };
    let knobs: Vec<(Option<u32>, Option<u32>)> = if kind.uses_m() {
        spec.m.iter().map(|&m| (Some(m), None)).collect()
    } else if kind.uses_b_tot() {
        spec.b_tot.iter().map(|&b| (None, Some(b))).collect()
    } else {
        vec![(None, None)]
    };
    for &seed in &seeds {
        for &rho in &spec.rho {
            for &eps in &spec.eps {
                for &(m, b_tot) in &knobs {
                    let scheme = build_scheme(kind, m, b_tot, eps, spec.max_rounds, &mut store)?;
                    for &p_db in &spec.p_db {
                        let params = FadingParams::with_db(eps, p_db, rho)?;
                        let schemes = std::slice::from_ref(&scheme);
                        let run = run_schemes(
                            &params,
                            schemes,
                            seed,
                            spec.workers,
                            &events_rule(spec, vec![0]),
                        )?;
                        let out = run.outage(0);
                        let fr_run: Option<MultiRun> = if scheme.has_feedback_cost() {
                            Some(run_schemes(
                                &params,
                                schemes,
                                seed,
                                spec.workers,
                                &StopRule::Fixed(spec.stopping.fr_trials),
                            )?)
                        } else {
                            None
                        };
                        t.undersampled |= out.undersampled;
                        let opt_int =
                            |v: Option<u32>| v.map_or(Cell::Empty, |x| Cell::Int(x as u64));
                        t.push(vec![
                            Cell::Text(kind.name().into()),
                            Cell::Int(seed),
                            Cell::Num(rho),
                            Cell::Num(eps),
                            Cell::Num(p_db),
                            opt_int(m),
                            opt_int(b_tot),
                            Cell::Num(out.value),
                            Cell::Num(out.std_err),
                            Cell::Int(out.events),
                            Cell::Int(out.trials),
                            fr_run
                                .as_ref()
                                .map_or(Cell::Empty, |r| Cell::Num(r.feedback_rate(0).value)),
                            fr_run
                                .as_ref()
                                .map_or(Cell::Empty, |r| Cell::Num(r.feedback_rate(0).std_err)),
                            fr_run.as_ref().map_or(Cell::Empty, |r| {
                                Cell::Num(r.capped[0] as f64 / r.trials as f64)
                            }),
                            Cell::Bool(out.undersampled),
                        ]);
                    }
                }
            }
        }
    }
    Ok(t)
}

fn build_scheme(
    kind: SchemeKind,
    m: Option<u32>,
    b_tot: Option<u32>,
    eps: f64,
    max_rounds: usize,
    store: &mut CodebookStore,
) -> Result<Scheme> {
    Ok(match kind {
        SchemeKind::Opt { metric, strategy } => Scheme::Optimal { metric, strategy },
        SchemeKind::DqSrIt => Scheme::SumRateIt,
        SchemeKind::DqSrTs => Scheme::SumRateTs,
        SchemeKind::DqMrTs => Scheme::MinRateTs { max_rounds },
        SchemeKind::DqMrIt => Scheme::MinRateIt {
            codebook: CodebookCm::new(m.expect("validated"))?,
        },
        SchemeKind::GqMrIt => Scheme::GlobalIt {
            codebook: CodebookCm::new(m.expect("validated"))?,
        },
        SchemeKind::Conv(strategy) => Scheme::Conventional {
            strategy,
            codebooks: store.conventional(b_tot.expect("validated"), eps)?,
        },
        SchemeKind::NoFeedback(strategy) => Scheme::NoFeedback { strategy },
    })
}

pub fn run(spec: &ExperimentSpec) -> Result<Table> {
    match spec.figure {
        Figure::Fig1 => run_fig1(spec),
        Figure::Fig2 => run_fig2(spec),
        Figure::Fig3 | Figure::Fig4 => run_fig3_fig4(spec),
        Figure::Custom => run_custom(spec),
    }
}
