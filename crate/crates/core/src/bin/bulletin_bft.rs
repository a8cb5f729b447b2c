//! Command-line front end for the experiment harness.
//!
//! Subcommands: `run` (a named preset, a config file, or an ad-hoc sweep
//! from flags), `fit` (log-log slope over a recorded summary), and `replay`
//! (re-execute a transcript and diff it). Exit code 0 means every check
//! passed, 1 means an assertion or integrity check failed, 2 means the
//! invocation itself was unusable. `BULLETIN_BFT_OUT` sets the default
//! output directory (flag `--out` overrides).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bulletin_bft::harness::{
    self, AdversarySpec, CoinSetup, CryptoMode, ExperimentConfig, Metric, Protocol,
};
use bulletin_bft::simnet::sched::{BaseOrder, MatchRule, SchedulerSpec};

#[derive(Parser)]
#[command(name = "bulletin-bft", version, about = "asynchronous BFT experiment harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a preset, a config file, or an ad-hoc sweep described by flags.
    Run(RunArgs),
    /// Fit a power law to a summary written by `run`.
    Fit(FitArgs),
    /// Re-execute a recorded transcript and report the first divergence.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Named check: one of the release-gate presets, or `all`.
    #[arg(long, conflicts_with_all = ["config", "protocol"])]
    preset: Option<String>,
    /// JSON experiment config (same shape `--protocol`-style flags build).
    #[arg(long, conflicts_with = "protocol")]
    config: Option<PathBuf>,
    /// Protocol to sweep: rbc | avss | seeding | coin | aba | election.
    #[arg(long)]
    protocol: Option<String>,
    /// Party counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    n: Vec<usize>,
    /// Fault budget; defaults to ⌊(n−1)/3⌋ per size.
    #[arg(long)]
    f: Option<usize>,
    #[arg(long, default_value = "mock")]
    crypto: String,
    /// Coin seeds: genesis | seeding | fixture.
    #[arg(long, default_value = "genesis")]
    coin: String,
    /// fifo | random | starve:<party>.
    #[arg(long, default_value = "random")]
    scheduler: String,
    /// none | silent:<k> | dealer:<script> | equiv-leader | equiv-leader-amplify | contradictor | vote-forger.
    #[arg(long, default_value = "none")]
    adversary: String,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Record the first trial of each size as a replayable transcript.
    #[arg(long)]
    record: bool,
    /// Output directory (default: $BULLETIN_BFT_OUT, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Path to a summary.jsonl produced by `run`.
    #[arg(long)]
    summary: PathBuf,
    /// msgs | bits | rounds.
    #[arg(long, default_value = "bits")]
    metric: String,
    /// Optional acceptance window `lo,hi`; exits 1 when the slope misses it.
    #[arg(long)]
    window: Option<String>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Path to a .bbtx transcript written by `run --record`.
    #[arg(long)]
    transcript: PathBuf,
}

fn usage_err(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("BULLETIN_BFT_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn parse_scheduler(s: &str) -> Result<SchedulerSpec, String> {
    match s {
        "fifo" => Ok(SchedulerSpec::Fifo),
        "random" => Ok(SchedulerSpec::Random),
        other => {
            if let Some(p) = other.strip_prefix("starve:") {
                let party: u16 =
                    p.parse().map_err(|_| format!("starve wants a party id, got `{p}`"))?;
                let (a, b) = MatchRule::involving_party(party);
                Ok(SchedulerSpec::Starve { rules: vec![a, b], base: BaseOrder::Random })
            } else {
                Err(format!("unknown scheduler `{other}`"))
            }
        }
    }
}

fn parse_adversary(s: &str) -> Result<AdversarySpec, String> {
    match s {
        "none" => Ok(AdversarySpec::None),
        "equiv-leader" => Ok(AdversarySpec::EquivLeader { amplify: false }),
        "equiv-leader-amplify" => Ok(AdversarySpec::EquivLeader { amplify: true }),
        "contradictor" => Ok(AdversarySpec::Contradictor),
        "vote-forger" => Ok(AdversarySpec::VoteForger),
        other => {
            if let Some(k) = other.strip_prefix("silent:") {
                let count = k.parse().map_err(|_| format!("silent wants a count, got `{k}`"))?;
                Ok(AdversarySpec::Silent { count })
            } else if let Some(script) = other.strip_prefix("dealer:") {
                Ok(AdversarySpec::Dealer { script: script.into() })
            } else {
                Err(format!("unknown adversary `{other}`"))
            }
        }
    }
}

fn cmd_run(args: RunArgs) -> ExitCode {
    if let Some(name) = args.preset {
        let names: Vec<&str> = if name == "all" {
            harness::PRESETS.to_vec()
        } else if harness::PRESETS.contains(&name.as_str()) {
            vec![harness::PRESETS.iter().find(|p| **p == name).copied().unwrap()]
        } else {
            return usage_err(&format!(
                "unknown preset `{name}`; expected one of: all, {}",
                harness::PRESETS.join(", ")
            ));
        };
        let mut all_pass = true;
        for p in names {
            match harness::run_preset(p) {
                Ok(res) => {
                    println!("{}", res.line());
                    all_pass &= res.pass;
                }
                Err(e) => return usage_err(&e.to_string()),
            }
        }
        return if all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) };
    }

    let cfg: ExperimentConfig = if let Some(path) = args.config {
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => return usage_err(&format!("{}: {e}", path.display())),
        };
        match serde_json::from_str(&text) {
            Ok(c) => c,
            Err(e) => return usage_err(&format!("{}: {e}", path.display())),
        }
    } else {
        let Some(protocol) = args.protocol.as_deref() else {
            return usage_err("nothing to run: pass --preset, --config, or --protocol");
        };
        let protocol: Protocol = match protocol.parse() {
            Ok(p) => p,
            Err(e) => return usage_err(&e.to_string()),
        };
        let crypto = match args.crypto.as_str() {
            "mock" => CryptoMode::Mock,
            "real" => CryptoMode::Real,
            other => return usage_err(&format!("unknown crypto mode `{other}`")),
        };
        let coin = match args.coin.as_str() {
            "genesis" => CoinSetup::Genesis,
            "seeding" => CoinSetup::Seeding,
            "fixture" => CoinSetup::Fixture,
            other => return usage_err(&format!("unknown coin setup `{other}`")),
        };
        let scheduler = match parse_scheduler(&args.scheduler) {
            Ok(s) => s,
            Err(e) => return usage_err(&e),
        };
        let adversary = match parse_adversary(&args.adversary) {
            Ok(a) => a,
            Err(e) => return usage_err(&e),
        };
        ExperimentConfig {
            protocol,
            n: args.n,
            f: args.f,
            crypto,
            coin,
            scheduler,
            adversary,
            trials: args.trials,
            master_seed: args.seed,
            record_transcripts: args.record,
        }
    };

    if let Err(e) = cfg.validate() {
        return usage_err(&e.to_string());
    }
    let (rows, transcripts) = match harness::sweep(&cfg) {
        Ok(r) => r,
        Err(e) => return usage_err(&e.to_string()),
    };
    print!("{}", harness::render_table(&rows));

    let dir = out_dir(args.out);
    if let Err(e) = std::fs::create_dir_all(&dir) {
        return usage_err(&format!("{}: {e}", dir.display()));
    }
    let summary = dir.join("summary.jsonl");
    if let Err(e) = std::fs::write(&summary, harness::rows_to_jsonl(&rows)) {
        return usage_err(&format!("{}: {e}", summary.display()));
    }
    if let Err(e) = std::fs::write(dir.join("summary.txt"), harness::render_table(&rows)) {
        return usage_err(&format!("summary.txt: {e}"));
    }
    for (stem, t) in &transcripts {
        use bulletin_bft::wire::Encode;
        let path = dir.join(format!("{stem}.bbtx"));
        if let Err(e) = std::fs::write(&path, t.encode()) {
            return usage_err(&format!("{}: {e}", path.display()));
        }
        println!("transcript: {}", path.display());
    }
    println!("summary: {}", summary.display());
    ExitCode::SUCCESS
}

fn cmd_fit(args: FitArgs) -> ExitCode {
    let text = match std::fs::read_to_string(&args.summary) {
        Ok(t) => t,
        Err(e) => return usage_err(&format!("{}: {e}", args.summary.display())),
    };
    let rows = match harness::rows_from_jsonl(&text) {
        Ok(r) => r,
        Err(e) => return usage_err(&e.to_string()),
    };
    let metric: Metric = match args.metric.parse() {
        Ok(m) => m,
        Err(e) => return usage_err(&e.to_string()),
    };
    let fit = match harness::fit_rows(&rows, metric) {
        Ok(f) => f,
        Err(e) => return usage_err(&e.to_string()),
    };
    println!(
        "{} ≈ {:.3} · n^{:.3}  (log-log slope {:.3} over {} sizes)",
        args.metric,
        fit.intercept.exp(),
        fit.slope,
        fit.slope,
        rows.len()
    );
    if let Some(w) = args.window {
        let Some((lo, hi)) = w.split_once(',') else {
            return usage_err("window wants `lo,hi`");
        };
        let (Ok(lo), Ok(hi)) = (lo.trim().parse::<f64>(), hi.trim().parse::<f64>()) else {
            return usage_err("window bounds must be numbers");
        };
        if fit.slope < lo || fit.slope > hi {
            eprintln!("slope {:.3} outside window [{lo}, {hi}]", fit.slope);
            return ExitCode::from(1);
        }
        println!("slope inside window [{lo}, {hi}]");
    }
    ExitCode::SUCCESS
}

fn cmd_replay(args: ReplayArgs) -> ExitCode {
    let bytes = match std::fs::read(&args.transcript) {
        Ok(b) => b,
        Err(e) => return usage_err(&format!("{}: {e}", args.transcript.display())),
    };
    match harness::replay(&bytes) {
        Ok(out) => match out.divergence {
            None => {
                println!(
                    "replay clean: {} events match ({} n={} seed={})",
                    out.events,
                    out.spec.protocol.name(),
                    out.spec.n,
                    out.spec.seed
                );
                ExitCode::SUCCESS
            }
            Some(d) => {
                eprintln!("replay diverged: {d}");
                ExitCode::from(1)
            }
        },
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Fit(a) => cmd_fit(a),
        Cmd::Replay(a) => cmd_replay(a),
    }
}
