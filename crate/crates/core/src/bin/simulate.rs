use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use spincat::scenario::{run_scenario, ScenarioConfig, ScenarioError, ScenarioKind};

/// Run a cat-state decoherence scenario from a TOML config.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Cli {
    scenario: ScenarioKind,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `output.workers`.
    #[arg(long)]
    workers: Option<usize>,
    /// `key=value` with a dotted key, e.g. `cat.beta1=1.2`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(cli: &Cli) -> Result<ScenarioConfig, ScenarioError> {
    let mut overrides = cli.overrides.clone();
    if let Some(out) = &cli.out {
        overrides.push(format!("output.dir={}", toml::Value::String(out.display().to_string())));
    }
    if let Some(w) = cli.workers {
        overrides.push(format!("output.workers={w}"));
    }
    let cfg = ScenarioConfig::load(&cli.config, &overrides)?;
    if cfg.scenario != cli.scenario {
        return Err(ScenarioError::Config(format!(
            "scenario: config says `{}` but `{}` was requested",
            cfg.scenario.name(),
            cli.scenario.name()
        )));
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli).and_then(|cfg| run_scenario(&cfg));
    match result {
        Ok(report) => {
            println!("wrote {}", report.out_dir.join("manifest.json").display());
            if let Some(ts) = &report.manifest.timescales {
                println!("{ts}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("simulate: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
