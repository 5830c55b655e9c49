use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qglow::environments::GridWorld;
use qglow::navigation::NavigationReport;
use qglow::runner::{
    grid_policy, preset, preset_catalog, run_curve, run_ensemble, verify::verify_invariants, write_experiment,
    write_policy_table, EnvironmentConfig, Overrides,
};
use qglow::Error;

#[derive(Parser)]
#[command(name = "qglow", version, about = "Glow agents with a unitary memory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset and write one CSV per curve.
    Run {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        agents: Option<usize>,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List preset names.
    ListPresets,
    /// Train one agent and write its grid policy table.
    PolicyDump {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Run the invariant suite and the navigation demos.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 2,
        _ => 1,
    }
}

fn run(cmd: Command) -> Result<bool, Error> {
    match cmd {
        Command::Run { preset: name, seed, agents, budget, out } => {
            let cfg = preset(&name)?.with_overrides(&Overrides { seed, agents, budget, out });
            let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("results"));
            let results = run_ensemble(&cfg)?;
            for path in write_experiment(&results, &cfg.name, &dir)? {
                println!("{}", path.display());
            }
            Ok(true)
        }
        Command::ListPresets => {
            for (name, cfg) in preset_catalog() {
                let curves: Vec<String> = cfg.curves.iter().map(|c| c.label.clone()).collect();
                println!("{name}\t{}", curves.join(","));
            }
            Ok(true)
        }
        Command::PolicyDump { preset: name, out, seed, budget } => {
            let cfg = preset(&name)?.with_overrides(&Overrides { seed, agents: Some(1), budget, out: None });
            let curve = cfg.resolve()?.into_iter().next().ok_or_else(|| Error::Config("preset has no curves".into()))?;
            let (world, p_coh): (GridWorld, f64) = match &curve.environment {
                EnvironmentConfig::Grid(g) => (g.world.clone(), g.p_coh),
                _ => return Err(Error::Config(format!("{name} is not a grid-world preset"))),
            };
            let result = run_curve(&curve)?;
            let table = grid_policy(&result.agents[0].learner, &world, p_coh)?;
            write_policy_table(&table, &out)?;
            println!("{}", out.display());
            Ok(true)
        }
        Command::Verify { seed } => {
            let (checks, reports) = verify_invariants(seed)?;
            let mut ok = true;
            for c in &checks {
                ok &= c.passed;
                println!("{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("{}", NavigationReport::CSV_HEADER);
            for r in &reports {
                println!("{}", r.csv_row());
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
