//! `rigidity`: experiment runner. Each subcommand reads a JSON config (and/or
//! inline flags), writes CSV/JSON results plus `report.json` into `--out`.
//!
//! Exit codes: 0 success, 1 configuration or runtime error, 2 when a bound or
//! inequality is violated.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use commands::Outcome;
use output::Writer;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] entropy_rigidity::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_assertion_failure() => 2,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "rigidity", version, about = "Entropy rigidity experiments on products of hyperbolic spaces")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file; inline flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "rigidity-out")]
    out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "RIGIDITY_THREADS")]
    threads: Option<usize>,
}

/// Factors as `3,4` (real) or `3:1,4:2` (`n:d`).
#[derive(Args, Default)]
struct FactorArgs {
    #[arg(long)]
    factors: Option<String>,
}

/// `optimal` or a comma list of scales.
#[derive(Args, Default)]
struct BetaArgs {
    #[arg(long)]
    beta: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form entropy-minimizing scales checked against a numeric optimizer.
    OptimalMetric {
        #[command(flatten)]
        factors: FactorArgs,
        #[arg(long)]
        base_volume: Option<f64>,
    },
    /// Critical exponent of the Poincaré series versus the entropy formula.
    Entropy {
        #[command(flatten)]
        factors: FactorArgs,
        #[command(flatten)]
        beta: BetaArgs,
        /// `lo,hi`.
        #[arg(long)]
        s_bracket: Option<String>,
    },
    /// Cap mass of Patterson–Sullivan measures along a regular ray.
    PsConcentration {
        #[command(flatten)]
        factors: FactorArgs,
        /// Comma list of times.
        #[arg(long)]
        times: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        angle: Option<f64>,
    },
    /// One evaluation of the natural map.
    Barycenter {
        #[command(flatten)]
        factors: FactorArgs,
        #[command(flatten)]
        beta: BetaArgs,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        s_multiplier: Option<f64>,
        #[arg(long = "n-z")]
        n_z: Option<usize>,
        #[arg(long = "n-theta")]
        n_theta: Option<usize>,
        /// `fixed` or `moving`.
        #[arg(long)]
        frame: Option<String>,
    },
    /// Finite-difference Jacobians of the natural map against the bound.
    JacobianScan {
        #[command(flatten)]
        factors: FactorArgs,
        #[command(flatten)]
        beta: BetaArgs,
        #[arg(long)]
        s_multiplier: Option<f64>,
        #[arg(long)]
        n_points: Option<usize>,
        #[arg(long = "n-z")]
        n_z: Option<usize>,
        #[arg(long = "n-theta")]
        n_theta: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        richardson_points: Option<usize>,
        #[arg(long)]
        frame: Option<String>,
    },
    /// Fuzz the determinant functional against its bound.
    Lemma55 {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Fuzz the block determinant inequality.
    Blockdet {
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        slack: Option<f64>,
    },
}

fn parse_list<T: std::str::FromStr>(flag: &str, s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("--{flag}: cannot parse \"{t}\"")))
        })
        .collect()
}

fn parse_factors(s: &str) -> Result<Value, CliError> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let (n, d) = item.trim().split_once(':').unwrap_or((item.trim(), "1"));
        let n: usize = n.parse().map_err(|_| CliError::Config(format!("--factors: bad entry \"{item}\"")))?;
        let d: usize = d.parse().map_err(|_| CliError::Config(format!("--factors: bad entry \"{item}\"")))?;
        out.push(json!([n, d]));
    }
    Ok(Value::Array(out))
}

#[derive(Default)]
struct Overrides(Map<String, Value>);

impl Overrides {
    fn set<T: Serialize>(&mut self, key: &str, v: Option<T>) {
        if let Some(v) = v {
            self.0.insert(key.into(), json!(v));
        }
    }

    fn factors(&mut self, f: &FactorArgs) -> Result<(), CliError> {
        if let Some(s) = &f.factors {
            self.0.insert("factors".into(), parse_factors(s)?);
        }
        Ok(())
    }

    fn beta(&mut self, b: &BetaArgs) -> Result<(), CliError> {
        if let Some(s) = &b.beta {
            let v = if s.trim() == "optimal" {
                json!("optimal")
            } else {
                json!(parse_list::<f64>("beta", s)?)
            };
            self.0.insert("beta".into(), v);
        }
        Ok(())
    }
}

const UNSEEDED: [&str; 2] = ["optimal-metric", "entropy"];

fn execute<T, F>(name: &'static str, common: &Common, overrides: Overrides, run: F) -> Result<Outcome, CliError>
where
    T: DeserializeOwned + Serialize,
    F: FnOnce(&T, &mut Writer) -> Result<Outcome, CliError>,
{
    let start = Instant::now();
    let mut overrides = overrides.0;
    if let Some(seed) = common.seed {
        if UNSEEDED.contains(&name) {
            return Err(CliError::Config(format!("{name} is deterministic and takes no --seed")));
        }
        overrides.insert("seed".into(), json!(seed));
    }
    let (config, echo): (T, Value) = config::load(common.config.as_deref(), overrides)?;
    let mut writer = Writer::new(&common.out, name, &echo)?;
    let outcome = run(&config, &mut writer)?;
    let status = if outcome.violation { "violation" } else { "ok" };
    writer.report(&echo, status, &outcome.warnings, start.elapsed().as_secs_f64())?;
    Ok(outcome)
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    let c = &cli.common;
    let mut o = Overrides::default();
    match &cli.command {
        Command::OptimalMetric { factors, base_volume } => {
            o.factors(factors)?;
            o.set("base_volume", *base_volume);
            execute("optimal-metric", c, o, commands::optimal_metric)
        }
        Command::Entropy { factors, beta, s_bracket } => {
            o.factors(factors)?;
            o.beta(beta)?;
            if let Some(b) = s_bracket {
                o.set("s_bracket", Some(parse_list::<f64>("s-bracket", b)?));
            }
            execute("entropy", c, o, commands::entropy)
        }
        Command::PsConcentration { factors, times, n, angle } => {
            o.factors(factors)?;
            if let Some(t) = times {
                o.set("times", Some(parse_list::<f64>("times", t)?));
            }
            o.set("n", *n);
            o.set("angle", *angle);
            execute("ps-concentration", c, o, commands::ps_concentration)
        }
        Command::Barycenter { factors, beta, s, s_multiplier, n_z, n_theta, frame } => {
            o.factors(factors)?;
            o.beta(beta)?;
            o.set("s", *s);
            o.set("s_multiplier", *s_multiplier);
            o.set("N_z", *n_z);
            o.set("N_theta", *n_theta);
            o.set("frame", frame.clone());
            execute("barycenter", c, o, commands::barycenter)
        }
        Command::JacobianScan {
            factors,
            beta,
            s_multiplier,
            n_points,
            n_z,
            n_theta,
            eps,
            richardson_points,
            frame,
        } => {
            o.factors(factors)?;
            o.beta(beta)?;
            o.set("s_multiplier", *s_multiplier);
            o.set("n_points", *n_points);
            o.set("N_z", *n_z);
            o.set("N_theta", *n_theta);
            o.set("eps", *eps);
            o.set("richardson_points", *richardson_points);
            o.set("frame", frame.clone());
            execute("jacobian-scan", c, o, commands::jacobian_scan)
        }
        Command::Lemma55 { n, d, trials } => {
            o.set("n", *n);
            o.set("d", *d);
            o.set("trials", *trials);
            execute("lemma55", c, o, commands::lemma55)
        }
        Command::Blockdet { trials, slack } => {
            o.set("trials", *trials);
            o.set("slack", *slack);
            execute("blockdet", c, o, commands::blockdet)
        }
    }
}

fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = init_threads(cli.common.threads).and_then(|_| dispatch(&cli));
    match result {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            if outcome.violation {
                eprintln!("violation reported in {}", Path::new(&cli.common.out).join("report.json").display());
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
