use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vsatlink::budget::{render_table, run_linkbudget};
use vsatlink::output::{write_artifacts, write_atomic};
use vsatlink::sweep::{run_sweep, write_sweep, SweepRange};
use vsatlink::{pipeline, CliError, ScenarioConfig};

/// VSAT satellite link simulator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the link budget of every configured leg.
    Linkbudget {
        config: PathBuf,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run the full chain and write BER, constellation and spectrum files.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override `total_bits`.
        #[arg(long)]
        bits: Option<usize>,
        /// Override `seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep one numeric parameter and tabulate BER.
    Sweep {
        config: PathBuf,
        /// Dotted key, e.g. `target_es_n0_db` or `impairments.phase_offset_deg`.
        #[arg(long)]
        param: String,
        /// `start:stop:step`, inclusive.
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Linkbudget { config, json } => {
            let cfg = ScenarioConfig::load(&config)?;
            let report = run_linkbudget(&cfg)?;
            print!("{}", render_table(&report));
            if let Some(path) = json {
                let mut bytes = serde_json::to_vec_pretty(&report).expect("report serialises");
                bytes.push(b'\n');
                write_atomic(&path, &bytes)?;
            }
        }
        Command::Simulate {
            config,
            out,
            bits,
            seed,
        } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(b) = bits {
                cfg.total_bits = b;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate()?;
            let run = pipeline::run(&cfg)?;
            write_artifacts(&run, &cfg, &out)?;
            let r = run.ber(&cfg);
            println!(
                "BER {:.6e} ({} errors / {} bits) -> {}",
                r.ber,
                r.bit_errors,
                r.bits_compared,
                out.display()
            );
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let cfg = ScenarioConfig::load(&config)?;
            let range: SweepRange = values.parse()?;
            let rows = run_sweep(&cfg, &param, &range)?;
            write_sweep(&rows, &out)?;
            println!("{} points -> {}", rows.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
