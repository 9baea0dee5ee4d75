use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use orbitphase::bem;
use orbitphase::config::SceneConfig;
use orbitphase::report::{self, Analysis};
use orbitphase::twodisk::{self, ChiOptions};
use orbitphase::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Periodic-orbit phase series and boundary-element cross-checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Periodic orbit parameters and leg lengths.
    Orbit(Common),
    /// Bivariate distance-series coefficients per leg.
    Fseries(Common),
    /// Phase and stationary-map Taylor coefficients.
    Phase(Common),
    /// Two-disk closed-form and reflected-ray cross-checks.
    Twodisk(Common),
    /// Dominant cycle mode of the boundary-element operator.
    Mode(Common),
    /// Reflection-by-reflection scattering iteration.
    Iterate(Common),
    /// Every table plus summary and manifest.
    Report(Common),
    /// Compare a report directory against a baseline.
    Compare {
        report: PathBuf,
        baseline: PathBuf,
        /// Relative tolerance applied to every table.
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the one named in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Taylor order override.
    #[arg(long)]
    order: Option<usize>,
    /// Wavenumber override.
    #[arg(long)]
    k: Option<f64>,
    /// Power-iteration tolerance override.
    #[arg(long)]
    tol: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<(SceneConfig, PathBuf)> {
        let mut cfg = SceneConfig::load(&self.config)?;
        if let Some(o) = self.order {
            cfg.taylor_order = o;
        }
        if let Some(k) = self.k {
            cfg.wavenumber = k;
        }
        if let Some(t) = self.tol {
            cfg.bem.tol = t;
        }
        cfg.validate()?;
        let out = self.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
        Ok((cfg, out))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::PhaseSeriesFailed { partial, .. } = &e {
                eprintln!("solved through order {}", partial.solved_order);
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn wrote(path: &Path) {
    println!("wrote {}", path.display());
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Compare { report, baseline, tol } => {
            let summary = report::compare_reports(&report, &baseline, tol)?;
            for t in &summary.tables {
                println!(
                    "{:<8} {} max_rel_diff={:.3e} tol={:.1e} cells={} rows={:?}",
                    t.name,
                    if t.pass { "PASS" } else { "FAIL" },
                    t.max_rel_diff,
                    t.tolerance,
                    t.compared_cells,
                    t.row_count
                );
            }
            Ok(if summary.pass { 0 } else { 1 })
        }
        Command::Orbit(c) => {
            let (cfg, out) = c.load()?;
            let orbit = orbitphase::orbit::find_orbit(&cfg.scene()?, None)?;
            println!("length {:.16e}", orbit.total_length);
            wrote(&report::write_table(&out, &report::orbit_table(&orbit))?);
            Ok(0)
        }
        Command::Fseries(c) => {
            let (cfg, out) = c.load()?;
            let a = report::analyze(&cfg)?;
            wrote(&report::write_table(&out, &report::fseries_table(&a))?);
            Ok(0)
        }
        Command::Phase(c) => {
            let (cfg, out) = c.load()?;
            let a = report::analyze(&cfg)?;
            println!("max residual {:.3e}", a.solution.residuals.max_abs());
            wrote(&report::write_table(&out, &report::fphase_table(&a.solution))?);
            Ok(0)
        }
        Command::Twodisk(c) => {
            let (cfg, out) = c.load()?;
            let tc = cfg
                .twodisk_config()
                .ok_or_else(|| Error::Config("config has no twodisk section".into()))?;
            let a = report::analyze(&cfg)?;
            let grid = twodisk::solve_chi(tc, &ChiOptions::default())?;
            println!(
                "chi residual {:.3e}, slope at zero {:.16e}",
                grid.max_residual,
                grid.slope_at_zero()
            );
            wrote(&report::write_table(&out, &report::twodisk_table(&a.solution))?);
            wrote(&report::write_table(&out, &report::fconv_twodisk(&a, &grid, None)?)?);
            Ok(0)
        }
        Command::Mode(c) => {
            let (cfg, out) = c.load()?;
            let a = report::analyze(&cfg)?;
            let run = report::run_bem(&cfg, &a)?;
            print_lambda(&a, &run);
            wrote(&report::write_table(&out, &report::mode_table(&run))?);
            Ok(0)
        }
        Command::Iterate(c) => {
            let (cfg, out) = c.load()?;
            let it = cfg
                .iterate
                .clone()
                .ok_or_else(|| Error::Config("config has no iterate section".into()))?;
            let scene = cfg.scene()?;
            let orbit = orbitphase::orbit::find_orbit(&scene, None)?;
            let system = bem::BlockSystem::build(&scene, &cfg.bem.options())?;
            let refl = bem::iterate_scattering(&system, &it.incident.to_incident(), it.start, it.reflections)?;
            wrote(&report::write_table(&out, &report::fiter_table(&refl, &orbit.taus, scene.len()))?);
            Ok(0)
        }
        Command::Report(c) => {
            let (cfg, out) = c.load()?;
            let rep = report::build_report(&cfg)?;
            report::write_report(&cfg, &rep, &out)?;
            println!("wrote report to {}", out.display());
            Ok(0)
        }
    }
}

fn print_lambda(a: &Analysis, run: &report::BemRun) {
    let l = run.pair.value;
    let kl = (a.scene.wavenumber() * a.orbit.total_length).rem_euclid(std::f64::consts::TAU);
    println!(
        "lambda {:.6e}{:+.6e}i |lambda| {:.6} arg {:.6} kL mod 2pi {:.6}",
        l.re,
        l.im,
        l.norm(),
        l.arg().rem_euclid(std::f64::consts::TAU),
        kl
    );
}
