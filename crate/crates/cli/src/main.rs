use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use gcf_lab::config::parse_assignment;
use gcf_lab::{output_dir, run, RunConfig, Subcommand};

/// Run a gcf-core experiment from a flat key=value config.
#[derive(Debug, Parser)]
#[command(name = "gcf-lab", version)]
struct Args {
    subcommand: Subcommand,
    #[arg(long)]
    config: PathBuf,
    /// Override a config key; repeatable, later wins.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_assignment)]
    set: Vec<(String, String)>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let result = RunConfig::parse(args.subcommand, &text, &args.set).and_then(|cfg| {
        let out = output_dir(&cfg);
        run(&cfg, &out).map(|s| (s, out))
    });
    match result {
        Ok((summary, out)) => {
            for c in &summary.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if let Some(e) = &summary.error {
                eprintln!("{e}");
            }
            println!("{} -> {}", summary.status.as_str(), out.join("summary.json").display());
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
