use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cbim::harness::{
    evaluate, read_csv_file, summarize, train, write_outputs, Algorithm, ExperimentConfig,
    RewardMode, SrMode,
};
use cbim::marl::checkpoint;
use cbim::oracle;
use cbim::{Error, Result};

/// Competitive seed bidding: train bidders, evaluate them, summarize runs.
#[derive(Debug, Parser)]
#[command(name = "cbim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train bidders (or play the random baseline) and write
    /// <output>.csv, <output>.summary.txt and <output>.ckpt.
    Train(RunArgs),
    /// Replay a checkpoint with frozen actors and no exploration noise.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Recompute the summary block of an episode CSV.
    Summarize {
        csv: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        rho: f64,
        #[arg(long, default_value = "sold-and-fair")]
        sr_mode: SrMode,
    },
    /// Run the brute-force reference suites.
    OracleCheck {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// key = value file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed. Required for train; evaluate falls back to the
    /// checkpoint's.
    #[arg(long)]
    seed: Option<u64>,
    /// Output prefix.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(short)]
    k: Option<usize>,
    #[arg(short)]
    l: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    reward_mode: Option<RewardMode>,
    #[arg(long)]
    sr_mode: Option<SrMode>,
    /// Any config key, as key=value. Repeatable; applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let mut put = |key: &str, value: Option<String>| match value {
            Some(v) => cfg.set(key, &v),
            None => Ok(()),
        };
        put("seed", self.seed.map(|v| v.to_string()))?;
        put(
            "output",
            self.output.as_ref().map(|p| p.display().to_string()),
        )?;
        put("dataset", self.dataset.clone())?;
        put("algorithm", self.algorithm.map(|v| v.to_string()))?;
        put("iterations", self.iterations.map(|v| v.to_string()))?;
        put("rounds", self.rounds.map(|v| v.to_string()))?;
        put("k", self.k.map(|v| v.to_string()))?;
        put("l", self.l.map(|v| v.to_string()))?;
        put("rho", self.rho.map(|v| v.to_string()))?;
        put("reward_mode", self.reward_mode.map(|v| v.to_string()))?;
        put("sr_mode", self.sr_mode.map(|v| v.to_string()))?;
        for kv in &self.sets {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects key=value, got {kv:?}")))?;
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }
}

// a closed pipe (`cbim summarize x.csv | head`) is not an error
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn output_prefix(cfg: &ExperimentConfig, default: &str) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train(args) => {
            let cfg = args.config()?;
            if cfg.seed.is_none() {
                return Err(Error::Config("train needs --seed".into()));
            }
            let out = train(&cfg)?;
            let prefix = output_prefix(&cfg, "run");
            write_outputs(&prefix, &out)?;
            say!("{}", out.summary);
            say!("updates    {}", out.updates);
            say!("written    {}.csv", prefix.display());
        }
        Command::Evaluate {
            checkpoint: path,
            run,
        } => {
            let (learner, cursor) = checkpoint::load(&path)?;
            let mut cfg = run.config()?;
            cfg.seed.get_or_insert(cursor.master);
            let out = evaluate(&cfg, &learner)?;
            let prefix = output_prefix(&cfg, "eval");
            write_outputs(&prefix, &out)?;
            say!("{}", out.summary);
            say!("written    {}.csv", prefix.display());
        }
        Command::Summarize { csv, rho, sr_mode } => {
            let records = read_csv_file(&csv)?;
            say!("{}", summarize(&records, rho, sr_mode)?);
        }
        Command::OracleCheck { trials, seed } => {
            let mut ok = true;
            for (name, report) in oracle::run_all(trials, seed)? {
                let verdict = if report.passed() { "PASS" } else { "FAIL" };
                ok &= report.passed();
                say!("{verdict} {name}: {report}");
            }
            if !ok {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
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
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
