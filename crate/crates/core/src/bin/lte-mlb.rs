//! Command-line front end: single runs, scenario matrices and plots.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use lte_mlb::export;
use lte_mlb::{run_matrix, Algorithm, BetaVariant, RunOptions, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "lte-mlb",
    version,
    about = "LTE handover and mobility load balancing simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its tables.
    Run(RunArgs),
    /// Run every algorithm x UE count x seed combination.
    Matrix(MatrixArgs),
    /// Draw throughput, loss and handover charts from a kpi.csv.
    Plot(PlotArgs),
}

#[derive(Args)]
struct Common {
    /// JSON scenario file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    beta_variant: Option<BetaVariant>,
    /// Simulated seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Offered rate per UE, bit/s.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn base_config(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::from_file(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(v) = self.beta_variant {
            cfg.beta_variant = v;
        }
        if let Some(d) = self.duration {
            cfg.duration_s = d;
        }
        if let Some(r) = self.rate {
            cfg.traffic.offered_rate_bps = r;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    ues: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also record UE positions every N ticks.
    #[arg(long)]
    trajectory_stride: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct MatrixArgs {
    #[arg(long, value_delimiter = ',', default_value = "none,mlb1,mlb2")]
    algorithms: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',', default_value = "37,56,75")]
    ue_counts: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    seeds: Vec<u64>,
    /// Also write SVG charts next to kpi.csv.
    #[arg(long)]
    plot: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Matrix(args) => matrix(args),
        Command::Plot(args) => plot(args),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = args.common.base_config()?;
    if let Some(a) = args.algorithm {
        cfg.algorithm = a;
    }
    if let Some(n) = args.ues {
        cfg.ue_count = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let options = RunOptions {
        trajectory_stride: args.trajectory_stride,
        ..RunOptions::default()
    };
    let out = lte_mlb::sim::run_with(&cfg, options)?;
    let files = export::write_run(&args.common.out, &out)?;
    if !out.trajectories.is_empty() {
        let path = args.common.out.join("trajectories.csv");
        export::write_trajectories(&path, &out.trajectories)?;
        println!("wrote {}", path.display());
    }
    let k = &out.kpi;
    println!(
        "{} ues={} seed={}: throughput {:.3} Mbps, loss {:.4}, handovers {} ({} mlb-induced), {} control messages",
        k.algorithm, k.ue_count, k.seed, k.throughput_mbps, k.loss_ratio, k.ho_count,
        k.mlb_induced_ho_count, k.control_messages
    );
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn matrix(args: MatrixArgs) -> Result<()> {
    let base = args.common.base_config()?;
    let result = run_matrix(&base, &args.algorithms, &args.ue_counts, &args.seeds)?;
    let path = export::write_matrix(&args.common.out, &result)?;
    println!(
        "{:<6} {:>4} {:>18} {:>18} {:>16}",
        "alg", "ues", "throughput Mbps", "loss ratio", "handovers"
    );
    for c in &result.cells {
        println!(
            "{:<6} {:>4} {:>10.3} ±{:<6.3} {:>10.4} ±{:<6.4} {:>8.1} ±{:<6.1}",
            c.algorithm.as_str(),
            c.ue_count,
            c.throughput_mean,
            c.throughput_std,
            c.loss_mean,
            c.loss_std,
            c.ho_mean,
            c.ho_std
        );
    }
    println!("wrote {}", path.display());
    if args.plot {
        let rows = export::read_kpi_csv(&path)?;
        for f in export::plot_kpis(&rows, &args.common.out)? {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}

fn plot(args: PlotArgs) -> Result<()> {
    let rows = export::read_kpi_csv(&args.input)?;
    for f in export::plot_kpis(&rows, &args.out)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}
