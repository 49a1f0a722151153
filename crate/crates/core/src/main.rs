use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thzlink::harness::{linspace, plan_frequencies, run_link, sweep, write_csv, Scenario};
use thzlink::{Error, Result};

#[derive(Parser)]
#[command(name = "thzlink", version, about = "Fiber-THz-fiber 2x2 MIMO link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the frequency plan of a scenario.
    Plan { scenario: PathBuf },
    /// Run the link once and print a JSON report.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one numeric scenario parameter and write CSV rows.
    Sweep {
        scenario: PathBuf,
        /// Dotted path of the parameter, e.g. `voa.attenuation_db`.
        #[arg(long)]
        param: String,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long)]
        points: usize,
        /// Number of seeds, counted up from the scenario seed.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Load the scenario and check its frequency plan.
    Validate { scenario: PathBuf },
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Plan { scenario } => {
            let sc = Scenario::load(&scenario)?;
            print!("{}", plan_frequencies(&sc)?);
        }
        Command::Validate { scenario } => {
            let sc = Scenario::load(&scenario)?;
            let plan = plan_frequencies(&sc)?;
            for w in &plan.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}: ok", sc.name);
        }
        Command::Run { scenario, seed, out } => {
            let mut sc = Scenario::load(&scenario)?;
            if let Some(s) = seed {
                sc.seed = s;
            }
            plan_frequencies(&sc)?;
            let report = run_link(&sc)?;
            let mut w = output(out.as_ref())?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
        }
        Command::Sweep {
            scenario,
            param,
            from,
            to,
            points,
            seeds,
            out,
        } => {
            let sc = Scenario::load(&scenario)?;
            plan_frequencies(&sc)?;
            if points == 0 || seeds == 0 {
                return Err(Error::Scenario("--points and --seeds must be at least 1".into()));
            }
            let seed_list: Vec<u64> = (0..seeds).map(|i| sc.seed + i).collect();
            let rows = sweep(&sc, &param, &linspace(from, to, points), &seed_list)?;
            write_csv(&rows, output(out.as_ref())?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_scenario_error() { 1 } else { 2 })
        }
    }
}
