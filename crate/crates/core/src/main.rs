use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ch2lab::cli::{kernel_selftest, run_batch, run_config_file, SelftestOptions};

#[derive(Parser)]
#[command(name = "ch2lab", version, about = "Two-component Camassa-Holm scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the kernel property suite.
    Selftest {
        /// Negate the difference kernel (the S positivity checks must fail).
        #[arg(long, hide = true)]
        flip_s_kernel: bool,
    },
    /// Run every `*.cfg` in a directory, one thread per scenario.
    Batch {
        #[arg(long)]
        config_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out } => match run_config_file(&config, &out) {
            Ok(m) => {
                println!(
                    "{}: {} after {} steps (t = {}), {} records, max relative energy drift {:.3e}",
                    m.scenario.name, m.termination, m.steps, m.final_time, m.records, m.max_relative_hamiltonian_drift
                );
                if let Some(ev) = m.breaking {
                    println!("breaking at t = {}, x = {}, slope {:.3}", ev.t, ev.x, ev.slope);
                }
                if m.vanishing_window_hits > 0 {
                    eprintln!(
                        "note: vanishing windows (max(|u|, |rho|) < {:e}) in {} nonzero records after t = 0",
                        m.scenario.tol, m.vanishing_window_hits
                    );
                }
                if m.sandwich_failures > 0 {
                    eprintln!("check failure: sandwich inequality violated at {} records", m.sandwich_failures);
                }
                m.exit_code()
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::Selftest { flip_s_kernel } => {
            let report = kernel_selftest(&SelftestOptions {
                flip_s_kernel,
                ..Default::default()
            });
            for c in &report.checks {
                println!("{c}");
            }
            if report.passed() {
                0
            } else {
                2
            }
        }
        Command::Batch { config_dir, out } => match run_batch(&config_dir, &out) {
            Ok(items) => {
                for item in &items {
                    match &item.result {
                        Ok(m) => println!("{}: {} ({} steps)", item.config.display(), m.termination, m.steps),
                        Err(e) => eprintln!("{}: error: {e}", item.config.display()),
                    }
                }
                items.iter().map(|i| i.exit_code()).max().unwrap_or(0)
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
    };
    ExitCode::from(code as u8)
}
