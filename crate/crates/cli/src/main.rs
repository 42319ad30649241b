//! `mf`: scenario runner for differential-inclusion simulation and
//! invariance/Lyapunov certification.
//!
//! Exit codes: 0 pass/complete, 1 criterion violated or falsified, 2 error.
//! `MF_THREADS` caps the per-point evaluation parallelism.

use anyhow::Context;
use clap::{Parser, Subcommand};
use monoflow::invariance::CriterionVariant;
use monoflow::lyapunov::LyapunovVariant;
use monoflow::scenario::{
    cmd_check_invariance, cmd_check_lyapunov, cmd_simulate, cmd_sweep, load_scenario,
    CommandOutput, Scenario,
};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "mf", about = "Simulate and certify ẋ ∈ F(x) − A(x)", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the inclusion and write a trajectory CSV plus summary.
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Certify strong or weak invariance of the scenario set.
    CheckInvariance {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// tangent-projected | tangent-intersect | normal-projected |
        /// normal-inf | normal-inf-truncated | weak-tangent | weak-normal
        #[arg(long, default_value = "normal-inf")]
        variant: String,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Certify a strong a-Lyapunov pair.
    CheckLyapunov {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// subgrad-inf | subgrad-inf-truncated | directional-projected |
        /// directional-truncated
        #[arg(long, default_value = "subgrad-inf")]
        variant: String,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-run the simulation over a list of parameter values.
    Sweep {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value = "h")]
        param: String,
        /// Comma-separated values, e.g. 1e-2,1e-3,1e-4
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(path: &Path, seed: Option<u64>) -> anyhow::Result<Scenario> {
    let mut scn = load_scenario(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(s) = seed {
        scn.seed = s;
    }
    Ok(scn)
}

fn write_output(out_dir: &Path, output: &CommandOutput) -> anyhow::Result<()> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for (name, content) in &output.files {
        let path = out_dir.join(name);
        std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    println!("{}", output.message);
    Ok(())
}

fn run() -> anyhow::Result<i32> {
    let cli = Cli::parse();
    let output = match &cli.command {
        Command::Simulate {
            scenario,
            out,
            seed,
        } => {
            let scn = load(scenario, *seed)?;
            let output = cmd_simulate(&scn)?;
            write_output(out, &output)?;
            output
        }
        Command::CheckInvariance {
            scenario,
            out,
            variant,
            tol,
            seed,
        } => {
            let scn = load(scenario, *seed)?;
            let variant = CriterionVariant::parse(variant)
                .with_context(|| format!("unknown invariance variant `{variant}`"))?;
            let output = cmd_check_invariance(&scn, variant, *tol, *seed)?;
            write_output(out, &output)?;
            output
        }
        Command::CheckLyapunov {
            scenario,
            out,
            variant,
            tol,
            seed,
        } => {
            let scn = load(scenario, *seed)?;
            let variant = LyapunovVariant::parse(variant)
                .with_context(|| format!("unknown lyapunov variant `{variant}`"))?;
            let output = cmd_check_lyapunov(&scn, variant, *tol, *seed)?;
            write_output(out, &output)?;
            output
        }
        Command::Sweep {
            scenario,
            out,
            param,
            values,
            seed,
        } => {
            let scn = load(scenario, *seed)?;
            let output = cmd_sweep(&scn, param, values)?;
            write_output(out, &output)?;
            output
        }
    };
    Ok(output.exit_code)
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}
