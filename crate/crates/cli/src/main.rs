//! `snubber`: modal analysis, forced response, frequency sweeps and spectrum
//! comparison for a clamped-free beam striking a one-sided spring.

mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use snubber::contact::SystemState;
use snubber::integrator::integrate_uniform;
use snubber::spectral::{compare_spectra, fft_spectrum, find_harmonics, normalize_by_max, steady_window};
use snubber::sweep::{bilinear_bounds, find_resonances, frequency_sweep_with, geometric_grid, SweepOptions};
use snubber::table::{parse_spectrum, write_harmonics, write_spectrum, write_sweep, TrajectoryTable};

use config::{RunConfig, Settings};

const CONFIG_HELP: &str = "\
The config file is flat TOML: one `key = value` per line, keys as the long
flag names with '-' replaced by '_' (e.g. young_modulus = 69e9, kr = 0.0,
sine = \"1,32\"). Flags override the file. All quantities are SI; frequencies
in Hz.

Exit status: 0 success, 1 configuration or parse error, 2 numerical failure.";

#[derive(Debug, Parser)]
#[command(name = "snubber", version, about, after_long_help = CONFIG_HELP)]
struct Cli {
    /// Flat key-value config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the lowest eigenfrequencies with and without the transducer mass
    Modal {
        /// Number of frequencies
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[command(flatten)]
        settings: Settings,
    },
    /// Integrate the forced response; write trajectory, spectrum and harmonics
    Simulate {
        #[command(flatten)]
        settings: Settings,
    },
    /// Stepped-sine sweep of the steady tip amplitude
    Sweep {
        #[arg(long, default_value_t = 20.0)]
        f_start: f64,
        #[arg(long, default_value_t = 150.0)]
        f_end: f64,
        #[arg(long, default_value_t = 60)]
        points: usize,
        /// Evaluate grid points one after another
        #[arg(long)]
        sequential: bool,
        #[command(flatten)]
        settings: Settings,
    },
    /// Compare harmonic peaks of two spectrum tables
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Fundamental frequency (Hz)
        #[arg(long)]
        f0: f64,
        #[arg(long, default_value_t = 5)]
        k_max: usize,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<snubber::Error> for CliError {
    fn from(e: snubber::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn resolve(file: Option<&Path>, flags: Settings) -> Result<RunConfig, CliError> {
    let base = match file {
        Some(p) => Settings::from_file(p)?,
        None => Settings::default(),
    };
    RunConfig::resolve(base.overlay(flags))
}

fn cmd_modal(cfg: &RunConfig, k: usize) -> Result<(), CliError> {
    let bare = cfg.beam_model()?;
    let loaded = cfg.model()?;
    let k = k.min(bare.n_free());
    let f0 = bare.eigenfrequencies(k)?;
    let f1 = loaded.eigenfrequencies(k)?;
    println!(
        "# elements = {}, transducer {} kg at node {}",
        cfg.elements, cfg.transducer_mass, cfg.transducer_node
    );
    println!("{:>4}  {:>14}  {:>16}", "mode", "beam_Hz", "with_mass_Hz");
    for i in 0..k {
        println!("{:>4}  {:>14.4}  {:>16.4}", i + 1, f0[i], f1[i]);
    }
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let model = cfg.model()?;
    let forcing = cfg.forcing_signal()?;
    let f0 = 1.0 / forcing.period();
    let sys = cfg.system(&model, forcing)?;
    let traj = integrate_uniform(
        &sys,
        &SystemState::at_rest(sys.n_free()),
        &cfg.integrator,
        cfg.sample_dt,
    )?;
    let meta = cfg.metadata();
    let table = TrajectoryTable::from_trajectory(&traj, &sys, meta.clone());

    let u = steady_window(&table.u_tip, cfg.sample_dt, cfg.analysis);
    let spectrum = fft_spectrum(u, cfg.sample_dt, cfg.window)?;
    let harmonics = find_harmonics(&spectrum, f0, cfg.harmonics, cfg.tol_bins);
    let normalized = normalize_by_max(&spectrum).unwrap_or(spectrum);

    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", cfg.out_dir.display())))?;
    let paths = [
        (cfg.output_path("trajectory"), table.to_text()),
        (cfg.output_path("spectrum"), write_spectrum(&normalized, &meta)),
        (cfg.output_path("harmonics"), write_harmonics(&harmonics, &meta)),
    ];
    for (path, text) in &paths {
        write_file(path, text)?;
    }

    let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    let duty = u.iter().filter(|&&x| x < 0.0).count() as f64 / u.len() as f64;
    let s = &traj.stats;
    println!("steps: {} accepted, {} rejected", s.accepted, s.rejected);
    println!(
        "analysis window: last {:.4} s ({} samples, df = {:.4} Hz)",
        u.len() as f64 * cfg.sample_dt,
        u.len(),
        normalized.df
    );
    if f0 < 2.0 * normalized.df {
        println!(
            "warning: fundamental {f0} Hz is not resolved by df = {} Hz",
            normalized.df
        );
    }
    println!("tip displacement: min {lo:.6e} m, max {hi:.6e} m");
    println!("contact duty fraction: {duty:.4}");
    println!("{:>3}  {:>10}  {:>12}  present", "k", "f_peak", "magnitude");
    for h in &harmonics {
        println!("{:>3}  {:>10.3}  {:>12.4e}  {}", h.k, h.f_peak, h.magnitude, h.present);
    }
    for (path, _) in &paths {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, f_start: f64, f_end: f64, points: usize, sequential: bool) -> Result<(), CliError> {
    let model = cfg.model()?;
    let amplitude = match cfg.forcing {
        config::ForcingSpec::Sine { amplitude, .. } => amplitude,
        config::ForcingSpec::File { .. } => {
            return Err(CliError::Config("sweep uses sine forcing; drop --force-file".into()))
        }
    };
    let grid = geometric_grid(f_start, f_end, points)?;
    let options = SweepOptions {
        damping: cfg.damping,
        parallel: !sequential,
        ..Default::default()
    };
    let curve = frequency_sweep_with(
        &model,
        cfg.spring,
        amplitude,
        cfg.force_node,
        &grid,
        &cfg.integrator,
        &options,
    )?;
    let path = cfg.output_path("sweep");
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", cfg.out_dir.display())))?;
    write_file(&path, &write_sweep(&curve, &cfg.metadata()))?;

    let (lo, hi) = bilinear_bounds(&model, &cfg.spring)?;
    println!("linear bounds: detached {lo:.4} Hz, attached {hi:.4} Hz");
    if curve.failures() > 0 {
        println!("failed points: {}", curve.failures());
    }
    let resonances = find_resonances(&curve, 2);
    if resonances.is_empty() {
        println!("no resonance (no interior maximum)");
    }
    for (i, r) in resonances.iter().enumerate() {
        println!(
            "resonance {}: {:.4} Hz, amplitude {:.6e} m",
            i + 1,
            r.frequency,
            r.amplitude
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn read_spectrum(path: &Path) -> Result<snubber::Spectrum, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_spectrum(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn cmd_compare(a: &Path, b: &Path, f0: f64, k_max: usize) -> Result<(), CliError> {
    if !(f0.is_finite() && f0 > 0.0) {
        return Err(CliError::Config(format!("f0 must be > 0, got {f0}")));
    }
    let sa = read_spectrum(a)?;
    let sb = read_spectrum(b)?;
    let rows = compare_spectra(&sa, &sb, f0, k_max)?;
    println!("{:>3}  {:>10}  {:>10}", "k", "df_Hz", "ratio");
    for r in rows {
        println!("{:>3}  {:>10.4}  {:>10.4}", r.k, r.df, r.ratio);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = cli.config.as_deref();
    match cli.command {
        Command::Modal { k, settings } => {
            if k == 0 {
                return Err(CliError::Config("--k must be >= 1".into()));
            }
            cmd_modal(&resolve(file, settings)?, k)
        }
        Command::Simulate { settings } => cmd_simulate(&resolve(file, settings)?),
        Command::Sweep {
            f_start,
            f_end,
            points,
            sequential,
            settings,
        } => cmd_sweep(&resolve(file, settings)?, f_start, f_end, points, sequential),
        Command::Compare { a, b, f0, k_max } => cmd_compare(&a, &b, f0, k_max),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
