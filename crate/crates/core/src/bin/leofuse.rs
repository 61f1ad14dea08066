use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use leo_fusion::engine::EngineError;
use leo_fusion::experiment::{
    run_command, sweep_command, validate, ExperimentError, SweepParam, SweepSpec,
};
use leo_fusion::metagraph::Scheme;
use leo_fusion::scenario::{ConfigError, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "leofuse",
    version,
    about = "LEO satellite task offloading simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write per-task CSVs.
    Run(Common),
    /// Sweep one parameter over schemes and seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// load, sat_gflops, sgl_gbps, subtask_gflo or subtask_gb
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Comma-separated schemes (default: all three).
        #[arg(long, value_delimiter = ',')]
        schemes: Vec<String>,
        /// Comma-separated seeds (default: the scenario seed).
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Run the shortest-path and scheme-dominance oracle suites.
    Validate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Flat key=value scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// uniform, hotspots or file:PATH
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    literal_step16: bool,
    /// Extra KEY=VALUE overrides.
    overrides: Vec<String>,
}

impl Common {
    fn config(&self) -> Result<ScenarioConfig, ConfigError> {
        let mut c = ScenarioConfig::default();
        if let Some(p) = &self.config {
            c.apply_file(p)?;
        }
        for kv in &self.overrides {
            let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: 0,
                text: kv.clone(),
            })?;
            c.set(k, v)?;
        }
        if let Some(s) = &self.scheme {
            c.set("scheme", s)?;
        }
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        if let Some(eta) = &self.eta {
            c.set("eta", eta)?;
        }
        if self.literal_step16 {
            c.literal_step16 = true;
        }
        c.validate()?;
        Ok(c)
    }
}

fn fail(e: &dyn std::fmt::Display, code: u8) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(code)
}

fn experiment_failure(e: ExperimentError) -> ExitCode {
    let code = match &e {
        ExperimentError::Config(_) | ExperimentError::Engine(EngineError::Config(_)) => 2,
        ExperimentError::Engine(EngineError::Traffic(_)) => 2,
        _ => 1,
    };
    fail(&e, code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(common) => {
            let config = match common.config() {
                Ok(c) => c,
                Err(e) => return fail(&e, 2),
            };
            match run_command(&config, &common.out) {
                Ok(summary) => {
                    println!("{summary}");
                    ExitCode::SUCCESS
                }
                Err(e) => experiment_failure(e),
            }
        }
        Command::Sweep {
            common,
            param,
            values,
            schemes,
            seeds,
        } => {
            let config = match common.config() {
                Ok(c) => c,
                Err(e) => return fail(&e, 2),
            };
            let param: SweepParam = match param.parse() {
                Ok(p) => p,
                Err(e) => return fail(&e, 2),
            };
            let schemes: Result<Vec<Scheme>, String> = if schemes.is_empty() {
                Ok(Scheme::ALL.to_vec())
            } else {
                schemes.iter().map(|s| s.parse()).collect()
            };
            let schemes = match schemes {
                Ok(s) => s,
                Err(e) => return fail(&e, 2),
            };
            let spec = SweepSpec {
                param,
                values,
                schemes,
                seeds: if seeds.is_empty() {
                    vec![config.seed]
                } else {
                    seeds
                },
            };
            match sweep_command(&config, &spec, &common.out) {
                Ok(rows) => {
                    println!(
                        "rows={} written to {}",
                        rows.len(),
                        common.out.join("sweep.csv").display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => experiment_failure(e),
            }
        }
        Command::Validate { seed, out } => match validate(seed, out.as_deref()) {
            Ok(summary) => {
                println!("{summary}");
                if summary.passed() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => fail(&e, 1),
        },
    }
}
