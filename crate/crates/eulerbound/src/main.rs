use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;

use eulerbound::config::{parse_overrides, ExperimentConfig};
use eulerbound::{run, Command};

/// Euler-scheme Monte Carlo experiments with Gaussian concentration bounds.
#[derive(Parser, Debug)]
#[command(name = "eulerbound", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,

    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,

    /// Config field override, `key=value` with a JSON value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = parse_overrides(cli.set.iter().map(String::as_str)).and_then(|mut o| {
        if let Some(s) = cli.seed {
            o.insert("seed".into(), Value::from(s));
        }
        if let Some(d) = &cli.out_dir {
            o.insert("out_dir".into(), Value::from(d.to_string_lossy().into_owned()));
        }
        if let Some(t) = cli.threads {
            o.insert("threads".into(), Value::from(t));
        }
        let cfg = ExperimentConfig::load(cli.config.as_deref(), o)?;
        run(cli.command, &cfg)
    });
    match result {
        Ok(out) => {
            println!("{}", out.summary);
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
