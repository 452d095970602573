use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use reserve_lab::config::MarketConfig;
use reserve_lab::harness::{
    best_response_oracle, run_experiment, stability_experiment, sweep, BestResponseConfig, Mechanism,
    StabilityConfig, SweepSpec,
};
use reserve_lab::Result;

#[derive(Parser)]
#[command(name = "reserve-lab", version, about = "Private reserve-price learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long, short)]
    config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Full-information single-bidder posted pricing.
    SimulateSingle(Common),
    /// Bandit-feedback single-bidder posted pricing.
    SimulateBandit(Common),
    /// Multi-bidder, multi-copy reserve-price auction.
    SimulateMulti(Common),
    /// Tiny-scale best response of one strategic bidder.
    BestResponse(Common),
    /// Two-branch stability replays.
    Stability(Common),
    /// Parameter sweep with replicas.
    Sweep(Common),
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn simulate(args: &Common, mechanism: Mechanism) -> Result<()> {
    let mut cfg = MarketConfig::from_json_file(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let exp = run_experiment(&cfg, mechanism)?;
    exp.write_outputs(&args.out)?;
    let r = &exp.report;
    println!(
        "ALG {:.6}  OPT(values) {:.6}  OPT(bids) {:.6}  regret {:.6} (learning {:.6}, game {:.6})",
        r.alg, r.opt_values, r.opt_bids, r.total_regret, r.learning_regret, r.game_regret
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SimulateSingle(a) => simulate(&a, Mechanism::Single),
        Command::SimulateBandit(a) => simulate(&a, Mechanism::Bandit),
        Command::SimulateMulti(a) => simulate(&a, Mechanism::Multi),
        Command::BestResponse(a) => {
            let cfg: BestResponseConfig = read_json(&a.config)?;
            let rep = best_response_oracle(&cfg)?;
            write_json(&a.out, "best_response.json", &rep)?;
            fs::write(a.out.join("policy.json"), rep.policy.to_json_pretty()?)?;
            println!(
                "value {:.9}  max |b - v| {:.6}  exact {}",
                rep.value, rep.max_deviation, rep.exact
            );
            Ok(())
        }
        Command::Stability(a) => {
            let mut cfg: StabilityConfig = read_json(&a.config)?;
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            let rep = stability_experiment(&cfg)?;
            write_json(&a.out, "stability.json", &rep)?;
            println!(
                "seeds {}  max excess {:.6}  within bound {}  conclusive {}",
                rep.seeds, rep.max_excess, rep.within_bound, rep.conclusive
            );
            Ok(())
        }
        Command::Sweep(a) => {
            let mut spec: SweepSpec = read_json(&a.config)?;
            if let Some(s) = a.seed {
                spec.base.seed = s;
            }
            let res = sweep(&spec)?;
            fs::create_dir_all(&a.out)?;
            res.write_rows_csv(fs::File::create(a.out.join("sweep_rows.csv"))?)?;
            res.write_table_csv(fs::File::create(a.out.join("sweep.csv"))?)?;
            for c in &res.table {
                println!(
                    "T={} alpha={} eps={:.3e} tau={} gamma={}  regret/T {:.6} +- {:.6}",
                    c.rounds, c.alpha, c.epsilon, c.tau, c.gamma, c.mean_regret_per_round, c.ci95_regret_per_round
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {
            info!("done");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
