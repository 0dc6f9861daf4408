use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use goalplan::attractor::{HttpJudge, Judge, MockJudge, ENDPOINT_ENV};
use goalplan::bank::{generate_experiments, BankStats, ExperimentSpec};
use goalplan::harness::{
    compute_metrics, csv_string, run_episode, run_repl, run_suite, summary_json, sweep, table, AssetConfig, Assets,
    MethodConfig, SuiteSummary, PRESETS,
};

#[derive(Parser)]
#[command(name = "goalplan", version, about = "Goal inference and planning for a simulated kitchen")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Preset name or path to a method TOML file.
    #[arg(long, default_value = "kg-pb-q")]
    method: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Judge service URL; the offline judge is used when unset.
    #[arg(long, env = ENDPOINT_ENV)]
    judge_endpoint: Option<String>,
    #[arg(long, default_value_t = 30)]
    judge_timeout_secs: u64,
    /// JSON file of cached judge replies, read and rewritten.
    #[arg(long)]
    judge_cache: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Actions kept per plan node; 0 keeps all.
    #[arg(long)]
    topk: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment suite for one or more methods.
    Run {
        #[command(flatten)]
        common: Common,
        /// Extra methods, comma separated, run after --method.
        #[arg(long, value_delimiter = ',')]
        also: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        parallel: usize,
        /// Only the first N experiments.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Run a single experiment and print its trace.
    Episode {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Play the human yourself.
    Repl {
        #[command(flatten)]
        common: Common,
        /// Stated preferences, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        prefs: Vec<String>,
        /// Goal you intend to cook, for scoring the session.
        #[arg(long)]
        goal: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Goal bank checks.
    Bank {
        #[command(subcommand)]
        action: BankCommand,
    },
    /// Question count across a grid of maximum interruption costs.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4,8")]
        c_max: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        parallel: usize,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BankCommand {
    /// Validate the bundled bank and print its statistics.
    Check {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn load_method(spec: &str, common: &Common) -> Result<MethodConfig> {
    let mut m = match MethodConfig::preset(spec) {
        Some(m) => m,
        None if Path::new(spec).exists() => {
            let text = fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?;
            MethodConfig::from_toml(&text).map_err(anyhow::Error::msg).with_context(|| format!("parsing {spec}"))?
        }
        None => bail!("unknown method `{spec}` (presets: {})", PRESETS.join(", ")),
    };
    if let Some(h) = common.horizon {
        m.planner.horizon = h;
    }
    if let Some(k) = common.topk {
        m.planner.branch_cap = (k > 0).then_some(k);
    }
    m.validate().map_err(anyhow::Error::msg)?;
    Ok(m)
}

fn load_assets(common: &Common) -> Result<Assets> {
    let judge: Box<dyn Judge> = match &common.judge_endpoint {
        Some(url) if !url.is_empty() => Box::new(HttpJudge::new(url, Duration::from_secs(common.judge_timeout_secs))),
        _ => Box::new(MockJudge::bundled()),
    };
    let assets = Assets::bundled_with(judge, AssetConfig::default())?;
    if let Some(p) = &common.judge_cache {
        if p.exists() {
            assets.judge.load(p)?;
        }
    }
    Ok(assets)
}

fn save_cache(assets: &Assets, common: &Common) -> Result<()> {
    if let Some(p) = &common.judge_cache {
        assets.judge.save(p)?;
    }
    Ok(())
}

fn experiments(assets: &Assets, seed: u64, limit: Option<usize>) -> Vec<ExperimentSpec> {
    let mut e = generate_experiments(&assets.bank.preferences, seed);
    if let Some(n) = limit {
        e.truncate(n);
    }
    e
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { common, also, out, parallel, limit } => {
            let assets = load_assets(&common)?;
            let exps = experiments(&assets, common.seed, limit);
            let mut names = vec![common.method.clone()];
            names.extend(also);
            let mut summaries: Vec<SuiteSummary> = Vec::new();
            let mut ok = true;
            for name in &names {
                let method = load_method(name, &common)?;
                let report = run_suite(&assets, &method, &exps, parallel)?;
                ok &= report.summary.failures == 0;
                if let Some(dir) = &out {
                    fs::create_dir_all(dir)?;
                    fs::write(dir.join(format!("{}.csv", method.name)), csv_string(&report.rows))?;
                }
                summaries.push(report.summary);
            }
            if let Some(dir) = &out {
                fs::write(dir.join("summary.json"), summary_json(&summaries))?;
            }
            print!("{}", table(&summaries));
            save_cache(&assets, &common)?;
            Ok(ok)
        }
        Command::Episode { common, index, out } => {
            let assets = load_assets(&common)?;
            let method = load_method(&common.method, &common)?;
            let exps = experiments(&assets, common.seed, None);
            let exp = exps.get(index).with_context(|| format!("only {} experiments", exps.len()))?;
            let trace = run_episode(&assets, &method, exp)?;
            let json = serde_json::to_string_pretty(&trace)?;
            match out {
                Some(p) => fs::write(p, json)?,
                None => println!("{json}"),
            }
            let m = compute_metrics(&trace);
            eprintln!(
                "{} with {}: {:?}, {} steps for {}, {} questions, top-1 {:.1}%",
                m.true_goal, m.preferences, m.outcome, m.steps, m.ground_truth_len, m.n_questions, m.top1_pct
            );
            save_cache(&assets, &common)?;
            Ok(!m.outcome.is_failure())
        }
        Command::Repl { common, prefs, goal, out } => {
            let assets = load_assets(&common)?;
            let method = load_method(&common.method, &common)?;
            let goal = match goal {
                Some(g) => Some(assets.goal(&g).with_context(|| format!("unknown goal `{g}`"))?),
                None => None,
            };
            let stdin = io::stdin();
            let r = run_repl(&assets, &method, prefs, goal, stdin.lock(), io::stdout())?;
            let json = serde_json::to_string_pretty(&r.trace)?;
            match out {
                Some(p) => fs::write(p, json)?,
                None => println!("{json}"),
            }
            save_cache(&assets, &common)?;
            Ok(!r.trace.outcome.is_failure())
        }
        Command::Bank { action: BankCommand::Check { seed } } => {
            let assets = Assets::bundled()?;
            let stats = BankStats::of(&assets.bank);
            println!("{}", serde_json::to_string_pretty(&stats)?);
            println!("policy sequences: {}", assets.policy.total());
            println!("experiments: {}", generate_experiments(&assets.bank.preferences, seed).len());
            Ok(true)
        }
        Command::Sweep { common, c_max, parallel, limit, out } => {
            let assets = load_assets(&common)?;
            let method = load_method(&common.method, &common)?;
            let exps = experiments(&assets, common.seed, limit);
            let points = sweep(&assets, &method, &exps, &c_max, parallel)?;
            println!("{:>8} {:>10} {:>12} {:>8}", "c_max", "questions", "extra steps", "top-1 %");
            for p in &points {
                println!("{:>8.2} {:>10.3} {:>12.3} {:>8.2}", p.c_max, p.questions, p.extra_steps, p.top1_pct);
            }
            if let Some(p) = out {
                fs::write(p, serde_json::to_string_pretty(&points)?)?;
            }
            save_cache(&assets, &common)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
