use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::config::{RunConfig, Truncation, PARITY_N_MAX};
use super::experiments::{
    default_rabi_grid_hz, parse_grid, predicted_cat_time, prepare, run_evolution, run_ideal,
    sweep_eta_fixed_time, sweep_eta_optimum, sweep_rabi, write_manifest, write_sweep_eta,
    write_sweep_rabi, write_wigner, IDEAL_SNAPSHOTS, DEFAULT_SWEEP_ETAS,
};
use super::validate::{render_checks, run_validation};
use crate::analysis::{negativity_metrics, wigner_function, WignerSpec};
use crate::fock::partial_trace_spin;
use crate::kerr::{kerr_state, KerrParams};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "kerr-ion", version, about = "Kerr states in the motion of a trapped ion")]
struct Cli {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Fix the Fock cutoff at n_max = 21.
    #[arg(long, global = true)]
    paper_parity: bool,
    /// Sweep worker threads (overrides config and KERR_ION_WORKERS).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Override any config key, e.g. `--set dt_ns=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct PhysicsArgs {
    #[arg(long)]
    rabi_hz: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    trap_hz: Option<f64>,
    #[arg(long)]
    alpha_re: Option<f64>,
    #[arg(long)]
    alpha_im: Option<f64>,
    #[arg(long)]
    dt_ns: Option<f64>,
    /// Total evolution time in ms.
    #[arg(long)]
    t_ms: Option<f64>,
    /// plus or minus.
    #[arg(long)]
    spin: Option<String>,
    /// fitted, fixed or off.
    #[arg(long)]
    frame: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ideal Kerr evolution: moments.csv and Wigner snapshots.
    Ideal {
        /// Comma-separated tau values for the snapshots.
        #[arg(long)]
        tau: Option<String>,
        #[arg(long, default_value_t = 6.0)]
        half_width: f64,
        #[arg(long, default_value_t = 121)]
        points: usize,
    },
    /// Full laser-ion evolution: trajectory.csv and phonon_populations.csv.
    Evolve(PhysicsArgs),
    /// Cat fidelity versus Rabi frequency.
    SweepRabi {
        /// Grid `start:stop:step` or list.
        #[arg(long)]
        eta: Option<String>,
        /// Rabi frequencies in Hz, grid or list.
        #[arg(long)]
        rabi_hz: Option<String>,
    },
    /// Cat fidelity versus eta at a fixed creation time.
    SweepEta {
        #[arg(long, default_value_t = 10.0)]
        t_ms: f64,
        #[arg(long, default_value = "0.10:0.24:0.01")]
        eta: String,
    },
    /// Wigner function of the ideal state (`--tau`) or of the simulated
    /// motion at `--at-ms`.
    Wigner {
        #[arg(long, conflicts_with = "at_ms")]
        tau: Option<f64>,
        #[arg(long)]
        at_ms: Option<f64>,
        #[arg(long, default_value_t = 6.0)]
        half_width: f64,
        #[arg(long, default_value_t = 121)]
        points: usize,
        #[command(flatten)]
        physics: PhysicsArgs,
    },
    /// Run the built-in invariant checks.
    Validate,
}

fn apply_physics(cfg: &mut RunConfig, a: &PhysicsArgs) -> Result<()> {
    let nums = [
        ("rabi_hz", a.rabi_hz),
        ("eta", a.eta),
        ("trap_freq_hz", a.trap_hz),
        ("alpha_re", a.alpha_re),
        ("alpha_im", a.alpha_im),
        ("dt_ns", a.dt_ns),
        ("t_total_ms", a.t_ms),
    ];
    for (k, v) in nums {
        if let Some(v) = v {
            cfg.set(k, &v.to_string())?;
        }
    }
    if let Some(s) = &a.spin {
        cfg.set("spin", s)?;
    }
    if let Some(f) = &a.frame {
        cfg.set("frame", f)?;
    }
    Ok(())
}

fn base_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for kv in &cli.sets {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if cli.paper_parity {
        cfg.truncation = Truncation::Fixed { n_max: PARITY_N_MAX };
    }
    if let Some(w) = cli.workers {
        cfg.workers = Some(w);
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<i32> {
    let mut cfg = base_config(&cli)?;
    let dir = cfg.output_dir.clone();
    match &cli.command {
        Command::Ideal {
            tau,
            half_width,
            points,
        } => {
            cfg.validate()?;
            let taus = match tau {
                Some(t) => parse_grid(t)?,
                None => IDEAL_SNAPSHOTS.to_vec(),
            };
            let mut files = run_ideal(
                cfg.alpha(),
                &taus,
                &WignerSpec::square(*half_width, *points),
                &cfg.policy()?,
                &dir,
            )?;
            files.push(write_manifest(&dir, "ideal", &files, &cfg)?);
            for f in &files {
                println!("wrote {}", f.display());
            }
        }
        Command::Evolve(physics) => {
            apply_physics(&mut cfg, physics)?;
            cfg.validate()?;
            let out = run_evolution(&cfg)?;
            if let Some(pk) = out.peak {
                println!(
                    "cat peak fidelity {:.6} at {:.4} ms (predicted {:.4} ms)",
                    pk.fidelity,
                    pk.t_peak * 1e-3,
                    predicted_cat_time(&cfg)? * 1e-3
                );
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
        }
        Command::SweepRabi { eta, rabi_hz } => {
            cfg.validate()?;
            let etas = match eta {
                Some(g) => parse_grid(g)?,
                None => DEFAULT_SWEEP_ETAS.to_vec(),
            };
            let rabis = match rabi_hz {
                Some(g) => parse_grid(g)?,
                None => default_rabi_grid_hz(),
            };
            let rows = sweep_rabi(&etas, &rabis, &cfg)?;
            let path = dir.join("sweep_rabi.csv");
            write_sweep_rabi(&rows, &cfg, &path)?;
            write_manifest(&dir, "sweep-rabi", &[path.clone()], &cfg)?;
            println!("wrote {} ({} rows)", path.display(), rows.len());
        }
        Command::SweepEta { t_ms, eta } => {
            cfg.validate()?;
            let etas = parse_grid(eta)?;
            let rows = sweep_eta_fixed_time(&etas, *t_ms, &cfg)?;
            let path = dir.join("sweep_eta.csv");
            write_sweep_eta(&rows, *t_ms, &cfg, &path)?;
            write_manifest(&dir, "sweep-eta", &[path.clone()], &cfg)?;
            if let Some(best) = sweep_eta_optimum(&rows) {
                println!("optimum eta {} with fidelity {:.6}", best.eta, best.fidelity);
            }
            println!("wrote {} ({} rows)", path.display(), rows.len());
        }
        Command::Wigner {
            tau,
            at_ms,
            half_width,
            points,
            physics,
        } => {
            apply_physics(&mut cfg, physics)?;
            cfg.validate()?;
            let spec = WignerSpec::square(*half_width, *points);
            let (rho, label) = match (tau, at_ms) {
                (_, Some(t_ms)) => {
                    let (sim, _) = prepare(&cfg)?;
                    let end = sim.state_at(&sim.initial_state()?, t_ms * 1e3)?;
                    (partial_trace_spin(&end), format!("t_ms = {t_ms}"))
                }
                (tau, None) => {
                    let tau = tau.unwrap_or(std::f64::consts::PI);
                    let state = kerr_state(KerrParams::new(cfg.alpha(), tau), &cfg.policy()?)?;
                    (state.density(), format!("tau = {tau}"))
                }
            };
            let grid = wigner_function(&rho, &spec)?;
            let rep = negativity_metrics(&grid)?;
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let path = dir.join("wigner.csv");
            let note = format!(
                "kerr-ion {}\n{label}\nw_min = {}\nw_max = {}\nnegativity_ratio = {}\n{}",
                env!("CARGO_PKG_VERSION"),
                rep.w_min,
                rep.w_max,
                rep.ratio,
                cfg.to_ini()
            );
            write_wigner(&grid, &note, &path)?;
            write_manifest(&dir, "wigner", &[path.clone()], &cfg)?;
            println!(
                "negativity ratio {:.4} (w_min {:.5}, w_max {:.5})",
                rep.ratio, rep.w_min, rep.w_max
            );
            println!("wrote {}", path.display());
        }
        Command::Validate => {
            let checks = run_validation();
            print!("{}", render_checks(&checks));
            if checks.iter().any(|c| !c.passed) {
                return Ok(2);
            }
        }
    }
    Ok(0)
}

/// Entry point of the `kerr-ion` binary: 0 on success, 1 on usage or
/// configuration errors, 2 on numerical failures.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
