use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rootless::experiment::{
    check_profiles, orbit_table, run_scenario, write_outputs, PerturbationVariant, Scenario,
};
use rootless::milnor::{validate_milnor_on_sn, ValidationOptions};
use rootless::orbits::write_orbit_csv;

/// Exit status when a check ran but did not certify.
const NOT_CERTIFIED: u8 = 2;

#[derive(Parser)]
#[command(
    name = "rootless",
    version,
    about = "Periodic-orbit parity checks for maps without square roots"
)]
struct Cli {
    /// Output directory; overrides output.dir from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Annulus grid density; overrides search.grid_density.
    #[arg(long, global = true)]
    seed_grid: Option<usize>,
    /// Perturbation variant: m_equals_k, m_equals_2k or symplectic_cos_k.
    #[arg(long, global = true)]
    variant: Option<PerturbationVariant>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write report.json and orbits.csv.
    Run { config: PathBuf },
    /// Exhaustively check the parity criterion on the symmetric group S_n.
    ValidateMilnor {
        #[arg(long)]
        n: usize,
        /// Even periods to check; defaults to every even l ≤ n.
        #[arg(long, value_delimiter = ',')]
        l: Vec<usize>,
        /// Check every permutation, square root or not.
        #[arg(long)]
        skip_root_filter: bool,
    },
    /// Build the scenario's profiles and run their grid certificates.
    CheckProfiles { config: PathBuf },
    /// Search one period and write the orbit table only.
    OrbitTable {
        config: PathBuf,
        #[arg(long)]
        l: usize,
    },
}

fn load(cli: &Cli, path: &Path) -> Result<Scenario> {
    let mut s = Scenario::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(dir) = &cli.out {
        s.output.dir = dir.clone();
    }
    if let Some(density) = cli.seed_grid {
        s.search.grid_density = density;
    }
    if let Some(variant) = cli.variant {
        s.variant = variant;
    }
    s.validate()
        .with_context(|| format!("invalid overrides for {}", path.display()))?;
    Ok(s)
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Run { config } => {
            let s = load(cli, config)?;
            eprintln!(
                "[run] {}: {} structure, k = {}, variant {}, grid {}",
                s.name,
                if s.structure.is_contact() {
                    "contact"
                } else {
                    "symplectic"
                },
                s.k,
                s.variant,
                s.search.grid_density
            );
            let report = run_scenario(&s)?;
            let (json, csv) = write_outputs(&report, &s.output)?;
            println!(
                "classes: {}  parity: {:?}  conclusion: {:?}  certified: {}",
                report.parity.class_count,
                report.parity.parity,
                report.parity.conclusion,
                report.certified
            );
            println!("wrote {} and {}", json.display(), csv.display());
            Ok(report.certified)
        }
        Command::ValidateMilnor {
            n,
            l,
            skip_root_filter,
        } => {
            let periods: Vec<usize> = if l.is_empty() {
                (2..=(*n).max(2)).step_by(2).collect()
            } else {
                l.clone()
            };
            let opts = ValidationOptions {
                skip_root_filter: *skip_root_filter,
            };
            let report = validate_milnor_on_sn(*n, &periods, opts)?;
            println!(
                "S_{}: {} permutations, {} with a square root, {} criterion mismatches, {} violations",
                report.n,
                report.permutations_checked,
                report.with_square_root,
                report.criterion_mismatches.len(),
                report.violations.len()
            );
            for v in report.violations.iter().take(10) {
                println!(
                    "  violation: {} has {} classes of period {}",
                    v.cycles, v.class_count, v.l
                );
            }
            if let Some(dir) = &cli.out {
                fs::create_dir_all(dir)?;
                let path = dir.join("milnor.json");
                fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
                println!("wrote {}", path.display());
            }
            Ok(report.passed())
        }
        Command::CheckProfiles { config } => {
            let s = load(cli, config)?;
            let checks = check_profiles(&s)?;
            println!("{}", serde_json::to_string_pretty(&checks)?);
            Ok(checks.passed)
        }
        Command::OrbitTable { config, l } => {
            if *l < 2 {
                bail!("--l must be at least 2");
            }
            let s = load(cli, config)?;
            let search = orbit_table(&s, *l)?;
            fs::create_dir_all(&s.output.dir)?;
            let path = s.output.dir.join(&s.output.orbits);
            let file =
                fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_orbit_csv(&search.classes, s.structure, std::io::BufWriter::new(file))?;
            println!(
                "{} classes of period {}; wrote {}",
                search.classes.len(),
                l,
                path.display()
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(NOT_CERTIFIED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
