use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fade_exp::sweep::{cells, clean_data, run_cell};
use fade_exp::{output, ExperimentSpec, Mode};
use fade_modfun::{add_noise, checks, newton_estimate};

#[derive(Parser)]
#[command(
    version,
    about = "Modulating-function estimation of velocity, dispersion and fractional order"
)]
#[command(after_long_help = concat!("Configuration file (TOML), with defaults:\n\n", include_str!("default.toml")))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration; defaults apply to missing keys (see --help)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use this single noise seed instead of `seeds`
    #[arg(long)]
    seed: Option<u64>,
    /// Print only errors
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate once, on the first value of every sweep list
    Estimate(Common),
    /// Run every cell of the configured sweep and write results
    Sweep(Common),
    /// Run the built-in numerical checks
    Selftest {
        #[arg(long)]
        quiet: bool,
    },
}

fn load(common: &Common) -> Result<ExperimentSpec> {
    let mut spec = match &common.config {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(out) = &common.out {
        spec.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        spec.seeds = vec![seed];
    }
    spec.validate()?;
    Ok(spec)
}

fn estimate(common: &Common) -> Result<bool> {
    let mut spec = load(common)?;
    spec.noise_levels.truncate(1);
    spec.per_unit.truncate(1);
    spec.n_list.truncate(1);
    spec.l1_list.truncate(1);
    spec.seeds.truncate(1);
    let cell = cells(&spec)[0];
    let clean = clean_data(&spec, cell.per_unit)?;
    let row = run_cell(&spec, &clean, &cell);

    if !common.quiet {
        println!(
            "{} | noise {} | dx 1/{} | N {} | L1 {} | seed {}",
            spec.mode.as_str(),
            cell.noise,
            cell.per_unit,
            cell.n,
            cell.l1,
            cell.seed
        );
        if spec.mode == Mode::ThreeParam && row.error.is_empty() {
            let data = add_noise(&clean, cell.noise, cell.seed)?;
            let r = newton_estimate(&data, &spec.estimator.config(cell.n, cell.l1))?;
            println!(
                "{:>4} {:>12} {:>12} {:>12} {:>12}",
                "iter", "alpha", "J", "nu", "d"
            );
            for (k, it) in r.iterations.iter().enumerate() {
                println!(
                    "{k:>4} {:>12.8} {:>12.4e} {:>12.8} {:>12.8}",
                    it.alpha, it.cost, it.nu, it.d
                );
            }
        }
        if row.error.is_empty() {
            println!("        estimate        truth    rel. error");
            for (name, est, truth, err) in [
                ("nu", row.nu, spec.truth.nu, row.err_nu),
                ("d", row.d, spec.truth.d, row.err_d),
                ("alpha", row.alpha, spec.truth.alpha, row.err_alpha),
            ] {
                println!("{name:>5} {est:>12.8} {truth:>12.8} {err:>12.4e}");
            }
            println!(
                "combined error {:.4e}, {} updates, stop: {}, cond {:.4}",
                row.err_combined, row.iterations, row.stop, row.cond
            );
        }
    }
    if !row.error.is_empty() {
        eprintln!("estimation failed: {}", row.error);
    } else if !row.converged {
        eprintln!("estimation did not converge ({})", row.stop);
    }
    if let Some(out) = &common.out {
        std::fs::create_dir_all(out)?;
        output::write_rows(
            std::fs::File::create(out.join("estimate.csv"))?,
            std::slice::from_ref(&row),
        )?;
        let data = add_noise(&clean, cell.noise, cell.seed)?;
        data.write_csv(std::io::BufWriter::new(std::fs::File::create(
            out.join("data.csv"),
        )?))?;
    }
    Ok(!row.failed())
}

fn sweep(common: &Common) -> Result<bool> {
    let spec = load(common)?;
    let total = cells(&spec).len();
    let done = AtomicUsize::new(0);
    let quiet = common.quiet;
    let rows = fade_exp::run(&spec, &|row| {
        let k = done.fetch_add(1, Ordering::Relaxed) + 1;
        if !row.error.is_empty() {
            eprintln!("cell {} failed: {}", row.cell, row.error);
        } else if !quiet {
            eprintln!(
                "[{k}/{total}] cell {} noise {} N {} L1 {} seed {}: err {:.3e}",
                row.cell, row.noise, row.n, row.l1, row.seed, row.err_combined
            );
        }
    })?;
    let written = output::write_all(&spec.output_dir, &spec, &rows)
        .with_context(|| format!("writing to {}", spec.output_dir.display()))?;
    let failed = rows.iter().filter(|r| r.failed()).count();
    if !quiet {
        println!("{} cells, {failed} failed or not converged", rows.len());
        for path in written {
            println!("wrote {}", path.display());
        }
    }
    Ok(failed == 0)
}

fn selftest(quiet: bool) -> bool {
    let outcomes = checks::run_all();
    for o in &outcomes {
        if !quiet || !o.passed {
            println!(
                "{:<22} {} worst {:.3e} (tolerance {:.0e})",
                o.name,
                if o.passed { "ok  " } else { "FAIL" },
                o.worst,
                o.tolerance
            );
        }
    }
    outcomes.iter().all(|o| o.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(common) => estimate(common),
        Command::Sweep(common) => sweep(common),
        Command::Selftest { quiet } => Ok(selftest(*quiet)),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
