use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use adapted_hill::commands::{
    cmd_estimate, cmd_quantile, cmd_simulate, cmd_tables, load_for_config,
};
use adapted_hill::io::{DistributionKind, KRange, RunConfig};
use adapted_hill::montecarlo::TableSelection;
use adapted_hill::Result;

/// Tail index and high-quantile estimation that borrows strength from
/// tail-dependent related variables.
#[derive(Parser)]
#[command(name = "adapted-hill", version)]
struct Cli {
    /// Flat `key = value` settings file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hill and adapted estimates of the tail index over a range of k.
    Estimate {
        /// Dataset with header `x,y2,…,yd`; empty `x` marks related-only rows.
        data: PathBuf,
        #[command(flatten)]
        tuning: TuningArgs,
        #[command(flatten)]
        input: InputArgs,
        /// Report file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// High-quantile estimates at tail probability p over a range of k.
    Quantile {
        data: PathBuf,
        #[command(flatten)]
        tuning: TuningArgs,
        #[command(flatten)]
        input: InputArgs,
        /// Tail probability of the quantile, in (0, 1).
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo run of a single scenario.
    Simulate {
        /// logistic or cauchy.
        #[arg(long)]
        dist: Option<DistributionKind>,
        /// Dimension (variable of interest plus related variables).
        #[arg(long)]
        d: Option<usize>,
        /// Logistic dependence parameter in (0, 1].
        #[arg(long)]
        theta: Option<f64>,
        /// Cauchy scale off-diagonal.
        #[arg(long)]
        s: Option<f64>,
        /// Cauchy scale entry between the two related variables (d = 3).
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        k_plus: Option<usize>,
        #[arg(long)]
        matched: bool,
        #[command(flatten)]
        run: RunArgs,
        /// Directory for summary, boxplot and per-replication files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduces the variance-reduction grids.
    Tables {
        /// table-1, table-2 or both.
        #[arg(long)]
        which: Option<TableSelection>,
        #[command(flatten)]
        run: RunArgs,
        /// Directory for per-cell summaries and boxplots.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TuningArgs {
    /// Number of top order statistics for the joint sample.
    #[arg(long)]
    k: Option<usize>,
    /// Inclusive range LO..HI of k values.
    #[arg(long)]
    k_sweep: Option<KRange>,
    /// Number of top order statistics for the full related-variable record.
    #[arg(long)]
    k_plus: Option<usize>,
    /// Choose k_plus = k(n+m)/n (the default when --k-plus is absent).
    #[arg(long)]
    matched: bool,
}

#[derive(Args)]
struct InputArgs {
    /// Tab-delimited input and output.
    #[arg(long)]
    tab: bool,
    /// Second file of related-only rows (header `y2,…,yd`).
    #[arg(long)]
    extra: Option<PathBuf>,
    /// Related columns are earthquake magnitudes; convert them to energy.
    #[arg(long)]
    magnitudes: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    tab: bool,
}

impl TuningArgs {
    fn apply(self, c: &mut RunConfig) {
        c.k = self.k;
        c.k_sweep = self.k_sweep;
        c.k_plus = self.k_plus;
        c.matched = self.matched;
    }
}

impl InputArgs {
    fn apply(self, c: &mut RunConfig) {
        c.tab = self.tab;
        c.extra = self.extra;
        c.magnitudes = self.magnitudes;
    }
}

impl RunArgs {
    fn apply(self, c: &mut RunConfig) {
        c.reps = self.reps;
        c.seed = self.seed;
        c.threads = self.threads;
        c.tab = self.tab;
    }
}

fn run(cli: Cli) -> Result<()> {
    let base = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let mut flags = RunConfig::default();
    let stdout = io::stdout();
    let mut console = stdout.lock();
    match cli.command {
        Command::Estimate {
            data,
            tuning,
            input,
            out,
        } => {
            tuning.apply(&mut flags);
            input.apply(&mut flags);
            flags.out = out;
            let config = base.overlay(flags);
            let sample = load_for_config(&config, &data)?;
            cmd_estimate(&config, &sample, &mut console)?;
        }
        Command::Quantile {
            data,
            tuning,
            input,
            p,
            out,
        } => {
            tuning.apply(&mut flags);
            input.apply(&mut flags);
            flags.p = p;
            flags.out = out;
            let config = base.overlay(flags);
            let sample = load_for_config(&config, &data)?;
            cmd_quantile(&config, &sample, &mut console)?;
        }
        Command::Simulate {
            dist,
            d,
            theta,
            s,
            r,
            n,
            m,
            k,
            k_plus,
            matched,
            run,
            out,
        } => {
            run.apply(&mut flags);
            flags = RunConfig {
                dist,
                d,
                theta,
                s,
                r,
                n,
                m,
                k,
                k_plus,
                matched,
                out,
                ..flags
            };
            cmd_simulate(&base.overlay(flags), &mut console)?;
        }
        Command::Tables { which, run, out } => {
            run.apply(&mut flags);
            flags.which = which;
            flags.out = out;
            cmd_tables(&base.overlay(flags), &mut console)?;
        }
    }
    console.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
