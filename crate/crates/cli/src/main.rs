//! Command-line front end for the tamed kinetic Langevin samplers.
//!
//! Exit codes: 0 success, 2 a chain diverged, 3 strict-mode parameter
//! validation failed, 4 I/O failure, 1 anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tklmc::experiment::{parse_config_with_overrides, run_experiment, write_reference_csv};
use tklmc::samplers::{validate_params, SamplerKind};
use tklmc::targets::TargetPotential;
use tklmc::Error;

#[derive(Parser)]
#[command(
    name = "tklmc",
    version,
    about = "Tamed kinetic Langevin Monte Carlo experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-chain sampling experiment and write CSV artifacts.
    Sample(ParamArgs),
    /// Print the theoretical parameter-restriction report.
    Validate(ParamArgs),
    /// Dump the quadrature reference CDF to a CSV file.
    Reference(ReferenceArgs),
}

#[derive(Args)]
struct ParamArgs {
    /// Flat key = value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Target name: quartic or quadratic:a=<v>.
    #[arg(long)]
    target: Option<String>,
    /// Sampler: tklmc1, tklmc2, overdamped or exact-quadratic.
    #[arg(long)]
    sampler: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Total steps per chain, burn-in included.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    /// Fail instead of warning when the theoretical restrictions break.
    #[arg(long)]
    strict: bool,
    /// Replace the tamed drift by the raw gradient (explosion demo).
    #[arg(long)]
    untamed: bool,
    /// Output directory for the artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for concurrent chains (0 = default).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ReferenceArgs {
    #[arg(long)]
    target: String,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Support radius; derived from the target when omitted.
    #[arg(long)]
    tail: Option<f64>,
    /// Destination CSV path.
    #[arg(long)]
    out: PathBuf,
}

impl ParamArgs {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut kv: Vec<(String, String)> = Vec::new();
        let mut push = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                kv.push((key.to_string(), v));
            }
        };
        push("target", self.target.clone());
        push("sampler", self.sampler.clone());
        push("gamma", self.gamma.map(|v| v.to_string()));
        push("lambda", self.lambda.map(|v| v.to_string()));
        push("beta", self.beta.map(|v| v.to_string()));
        push("n_steps", self.steps.map(|v| v.to_string()));
        push("burn_in", self.burnin.map(|v| v.to_string()));
        push("n_chains", self.chains.map(|v| v.to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        push("dim", self.dim.map(|v| v.to_string()));
        push("thin", self.thin.map(|v| v.to_string()));
        push(
            "out_dir",
            self.out.as_ref().map(|v| v.display().to_string()),
        );
        push("jobs", self.jobs.map(|v| v.to_string()));
        if self.strict {
            kv.push(("strict".into(), "true".into()));
        }
        if self.untamed {
            kv.push(("untamed".into(), "true".into()));
        }
        kv
    }

    fn spec(&self) -> tklmc::Result<tklmc::experiment::ExperimentSpec> {
        let text = match &self.config {
            Some(path) => std::fs::read_to_string(path)?,
            None => String::new(),
        };
        parse_config_with_overrides(&text, &self.overrides())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through this path as well
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::ValidationFailed { .. } => 3,
                Error::Io(_) => 4,
                _ => 1,
            })
        }
    }
}

fn run(cli: Cli) -> tklmc::Result<u8> {
    match cli.command {
        Command::Sample(args) => {
            let spec = args.spec()?;
            let report = run_experiment(&spec)?;
            for v in &report.violations {
                eprintln!("warning: {v}");
            }
            if let Some((chain, step)) = report.divergence {
                eprintln!("chain {chain} diverged at step {step}");
            }
            println!(
                "wrote {} ({} recorded states, {} metrics)",
                spec.out_dir.display(),
                report.n_recorded,
                report.metrics.len()
            );
            Ok(if report.diverged { 2 } else { 0 })
        }
        Command::Validate(args) => {
            let spec = args.spec()?;
            let target = TargetPotential::from_name(&spec.target, spec.dim)?;
            let config = spec.chain_config();
            println!(
                "target {} (m = {}, L = {}, l = {}), beta = {}",
                spec.target, target.m, target.lip_l, target.growth_l, spec.beta
            );
            match config.resolved_k() {
                Some(k) => println!("K = {k}"),
                None => println!("K unresolved (set epsilon or lipschitz_k)"),
            }
            let mut any_hard = false;
            for kind in [SamplerKind::Tklmc1, SamplerKind::Tklmc2] {
                if let Some(k) = config.resolved_k() {
                    let floor = match kind {
                        SamplerKind::Tklmc1 => ((k + target.m) / config.beta)
                            .sqrt()
                            .max(k)
                            .max(32.0)
                            .max(48.0 * (2.0 * target.m + 1.0).powi(2) / target.m),
                        SamplerKind::Tklmc2 => (2.0 * k / config.beta).sqrt(),
                        SamplerKind::OverdampedTamed => 0.0,
                    };
                    println!("[{}] friction floor = {floor}", kind.name());
                }
                let violations = validate_params(&target, &config, kind);
                if violations.is_empty() {
                    println!("[{}] all restrictions hold", kind.name());
                }
                for v in &violations {
                    any_hard |= !v.advisory;
                    println!("[{}] {v}", kind.name());
                }
            }
            Ok(if spec.strict && any_hard { 3 } else { 0 })
        }
        Command::Reference(args) => {
            write_reference_csv(&args.target, args.dim, args.beta, args.tail, &args.out)?;
            println!("wrote {}", args.out.display());
            Ok(0)
        }
    }
}
