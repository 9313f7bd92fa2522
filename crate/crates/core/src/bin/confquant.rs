use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use confquant::experiment::{self, ExperimentSpec, Figure, Format, SchemeKind};
use confquant::Error;

/// Reproducible outage and feedback-rate experiments for conferencing
/// channel quantizers.
#[derive(Parser, Debug)]
#[command(name = "confquant", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal minimum-rate outage, time sharing vs interference, and the crossing power.
    Fig1 {
        #[command(flatten)]
        common: Common,
    },
    /// Bisection protocol vs conventional quantizer vs no feedback, with feedback rate.
    Fig2 {
        #[command(flatten)]
        common: Common,
        /// Conventional quantizer budget(s) in bits.
        #[arg(long, value_delimiter = ',')]
        b_tot: Option<Vec<u32>>,
        #[arg(long)]
        max_rounds: Option<usize>,
    },
    /// Power-protocol distortion versus codebook size M.
    Fig3 {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        m: Option<Vec<u32>>,
    },
    /// Power-protocol distortion versus power for a few codebook sizes.
    Fig4 {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        m: Option<Vec<u32>>,
    },
    /// Any single scheme over arbitrary sweeps.
    Custom {
        #[command(flatten)]
        common: Common,
        /// e.g. dq-mr-ts, dq-mr-it, gq-mr-it, conv-it, nofb-ts, opt-mr-it
        #[arg(long)]
        scheme: SchemeKind,
        #[arg(long, value_delimiter = ',')]
        m: Option<Vec<u32>>,
        #[arg(long, value_delimiter = ',')]
        b_tot: Option<Vec<u32>>,
        /// Repeat the sweep for each seed.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        max_rounds: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// Trials of fixed-length feedback-rate estimates.
    #[arg(long)]
    trials: Option<u64>,
    /// Trial cap of outage estimates.
    #[arg(long)]
    max_trials: Option<u64>,
    #[arg(long)]
    min_outage_events: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    eps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    rho: Option<Vec<f64>>,
    /// Powers in dB.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    p: Option<Vec<f64>>,
    /// Cache trained Lloyd codebooks as JSON in this directory.
    #[arg(long)]
    codebook_dir: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
}

impl Common {
    fn apply(self, spec: &mut ExperimentSpec) -> Option<PathBuf> {
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        if let Some(v) = self.trials {
            spec.stopping.fr_trials = v;
        }
        if let Some(v) = self.max_trials {
            spec.stopping.max_trials = v;
        }
        if let Some(v) = self.min_outage_events {
            spec.stopping.min_outage_events = v;
        }
        spec.workers = self
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        spec.format = self.format;
        if let Some(v) = self.eps {
            spec.eps = v;
        }
        if let Some(v) = self.rho {
            spec.rho = v;
        }
        if let Some(v) = self.p {
            spec.p_db = v;
        }
        if let Some(v) = self.name {
            spec.name = v;
        }
        spec.codebook_dir = self.codebook_dir;
        self.out
    }
}

fn build(command: Command) -> (ExperimentSpec, Option<PathBuf>) {
    match command {
        Command::Fig1 { common } => {
            let mut spec = ExperimentSpec::for_figure(Figure::Fig1);
            let out = common.apply(&mut spec);
            (spec, out)
        }
        Command::Fig2 {
            common,
            b_tot,
            max_rounds,
        } => {
            let mut spec = ExperimentSpec::for_figure(Figure::Fig2);
            let out = common.apply(&mut spec);
            if let Some(v) = b_tot {
                spec.b_tot = v;
            }
            if let Some(v) = max_rounds {
                spec.max_rounds = v;
            }
            (spec, out)
        }
        Command::Fig3 { common, m } => distortion_spec(Figure::Fig3, common, m),
        Command::Fig4 { common, m } => distortion_spec(Figure::Fig4, common, m),
        Command::Custom {
            common,
            scheme,
            m,
            b_tot,
            seeds,
            max_rounds,
        } => {
            let mut spec = ExperimentSpec::for_figure(Figure::Custom);
            let out = common.apply(&mut spec);
            spec.scheme = Some(scheme);
            spec.m = m.unwrap_or_default();
            spec.b_tot = b_tot.unwrap_or_default();
            spec.seeds = seeds.unwrap_or_default();
            if let Some(v) = max_rounds {
                spec.max_rounds = v;
            }
            (spec, out)
        }
    }
}

fn distortion_spec(
    figure: Figure,
    common: Common,
    m: Option<Vec<u32>>,
) -> (ExperimentSpec, Option<PathBuf>) {
    let mut spec = ExperimentSpec::for_figure(figure);
    let out = common.apply(&mut spec);
    if let Some(v) = m {
        spec.m = v;
    }
    (spec, out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (spec, out) = build(cli.command);
    let table = match experiment::run(&spec) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(match e {
                Error::Io(_) => 1,
                _ => 2,
            });
        }
    };
    let text = table.render(spec.format);
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    if table.undersampled {
        eprintln!("warning: some estimates did not reach the requested outage events");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
