use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use dpdlib::apps::{self, Report, WeightedGraph};
use dpdlib::transport::read_hosts;
use dpdlib::{BackendKind, CostParams, RunConfig};

/// Sample SPMD programs with serial oracles and cost reports.
#[derive(Parser)]
#[command(
    name = "dpdlib",
    version,
    after_help = "Exit status: 0 when the oracle matches, 3 when it does not, 1 on errors."
)]
struct Cli {
    #[command(flatten)]
    run: RunFlags,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunFlags {
    /// Message backend.
    #[arg(long, global = true, default_value = "sim")]
    backend: BackendKind,

    /// Number of ranks. Defaults to 4 under sim and to the hosts file
    /// length under tcp.
    #[arg(long, global = true)]
    np: Option<usize>,

    /// This process's rank (tcp only).
    #[arg(long, global = true)]
    rank: Option<usize>,

    /// Hosts file with one `address port` line per rank (tcp only).
    #[arg(long, global = true)]
    hosts: Option<PathBuf>,

    /// Scheduler seed under sim; also seeds generated inputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Message startup time in seconds.
    #[arg(long, global = true, default_value_t = CostParams::default().t_s)]
    ts: f64,

    /// Transfer time per 8-byte word in seconds.
    #[arg(long, global = true, default_value_t = CostParams::default().t_w)]
    tw: f64,

    /// Print only the JSON record.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Midpoint-rule approximation of pi.
    Pi {
        #[arg(long)]
        n: usize,
    },
    /// Agree on a random seed from the ranks' clocks.
    Seed {
        /// Comma-separated per-rank timestamps instead of clock readings.
        #[arg(long, value_delimiter = ',')]
        timestamps: Option<Vec<u64>>,
    },
    /// Ordered product of one random k×k matrix per rank, tree against
    /// linear reduction.
    Matreduce {
        #[arg(long)]
        k: usize,
    },
    /// Blocked all-pairs shortest paths on a q×q grid of ranks.
    Floyd {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        q: usize,
    },
    /// Write a random graph in the input format of `floyd`.
    GenGraph {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.3)]
        density: f64,
        #[arg(long)]
        output: PathBuf,
    },
}

impl RunFlags {
    fn config(&self) -> anyhow::Result<RunConfig> {
        let np = match (self.np, self.backend, &self.hosts) {
            (Some(np), _, _) => np,
            (None, BackendKind::Tcp, Some(path)) => read_hosts(path)?.len(),
            (None, _, _) => 4,
        };
        let config = RunConfig {
            backend: self.backend,
            np,
            rank: self.rank,
            hosts_path: self.hosts.clone(),
            seed: self.seed,
            cost: CostParams::new(self.ts, self.tw)?,
        };
        config.validate()?;
        Ok(config)
    }
}

fn execute(cli: &Cli) -> anyhow::Result<Option<Report>> {
    if let Command::GenGraph { n, density, output } = &cli.command {
        if !(0.0..=1.0).contains(density) {
            bail!("density must lie in [0, 1]");
        }
        let g = WeightedGraph::seeded(*n, *density, cli.run.seed);
        g.write(output).with_context(|| format!("writing {}", output.display()))?;
        return Ok(None);
    }
    let config = cli.run.config()?;
    let report = match &cli.command {
        Command::Pi { n } => apps::run_pi(&config, *n)?,
        Command::Seed { timestamps } => apps::run_seed(&config, timestamps.as_deref())?,
        Command::Matreduce { k } => apps::run_matreduce(&config, *k)?,
        Command::Floyd { input, q } => {
            let g = WeightedGraph::read(input).with_context(|| format!("reading {}", input.display()))?;
            apps::run_floyd(&config, &g, *q)?
        }
        Command::GenGraph { .. } => unreachable!("handled above"),
    };
    Ok(Some(report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(report)) => {
            if !cli.run.json {
                println!("{}", report.to_text());
            }
            println!("{}", report.to_json());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
