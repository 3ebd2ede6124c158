//! Run configuration: defaults, then the config file, then flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use snubber::beam_fem::{assemble, FEModel};
use snubber::contact::BeamSystem;
use snubber::forcing::read_force_file;
use snubber::spectral::DEFAULT_TOL_BINS;
use snubber::table::Metadata;
use snubber::{BeamProperties, ForcingSignal, IntegratorConfig, UnilateralSpring, Window};

use crate::CliError;

/// Default snubber stiffness (N/m).
pub const DEFAULT_KR: f64 = 57_140.0;
/// Force transducer mass (kg), lumped at the forcing node.
pub const DEFAULT_TRANSDUCER_MASS: f64 = 0.015;
/// Distance from the clamp at which the force is applied (m).
pub const DEFAULT_FORCE_POSITION: f64 = 0.07;

/// Every setting that can come from the config file or a flag. Flag names
/// are the kebab-case spelling of the file keys.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Beam length (m)
    #[arg(long)]
    pub length: Option<f64>,
    /// Beam width (m)
    #[arg(long)]
    pub width: Option<f64>,
    /// Beam thickness (m)
    #[arg(long)]
    pub thickness: Option<f64>,
    /// Young's modulus (N/m²)
    #[arg(long)]
    pub young_modulus: Option<f64>,
    /// Density (kg/m³)
    #[arg(long)]
    pub rho: Option<f64>,
    /// Number of finite elements
    #[arg(long)]
    pub elements: Option<usize>,
    /// Snubber stiffness k_r (N/m); 0 gives the linear beam
    #[arg(long)]
    pub kr: Option<f64>,
    /// Node carrying the snubber [default: tip]
    #[arg(long)]
    pub spring_node: Option<usize>,
    /// Node where the force is applied [default: nearest to x = 0.07 m]
    #[arg(long)]
    pub force_node: Option<usize>,
    /// Force transducer mass (kg)
    #[arg(long)]
    pub transducer_mass: Option<f64>,
    /// Node carrying the transducer mass [default: force node]
    #[arg(long)]
    pub transducer_node: Option<usize>,
    /// Sine forcing as AMP,FREQ[,PHASE] (N, Hz, rad)
    #[arg(long, value_name = "AMP,FREQ[,PHASE]")]
    pub sine: Option<String>,
    /// Sine amplitude (N)
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Sine frequency (Hz)
    #[arg(long)]
    pub frequency: Option<f64>,
    /// Sine phase (rad)
    #[arg(long)]
    pub phase: Option<f64>,
    /// Two-column (t, F) force record, repeated periodically
    #[arg(long)]
    pub force_file: Option<PathBuf>,
    /// Period of the force record (s)
    #[arg(long)]
    pub force_period: Option<f64>,
    /// Relative tolerance
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Absolute displacement tolerance (m)
    #[arg(long)]
    pub atol: Option<f64>,
    /// Initial step (s)
    #[arg(long)]
    pub h_init: Option<f64>,
    /// Largest step (s)
    #[arg(long)]
    pub h_max: Option<f64>,
    /// End time (s)
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Mass-proportional damping (1/s)
    #[arg(long)]
    pub damping: Option<f64>,
    /// Output sampling interval (s)
    #[arg(long)]
    pub sample_dt: Option<f64>,
    /// Length of the trailing analysis window (s)
    #[arg(long)]
    pub analysis: Option<f64>,
    /// FFT window: none | hann
    #[arg(long)]
    pub window: Option<String>,
    /// Highest harmonic reported
    #[arg(long)]
    pub harmonics: Option<usize>,
    /// Peak search half-width in bins
    #[arg(long)]
    pub tol_bins: Option<usize>,
    /// Directory for output tables
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// File name prefix for output tables
    #[arg(long)]
    pub prefix: Option<String>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),* $(,)?) => {
        Settings { $($field: $top.$field.or($base.$field)),* }
    };
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Values in `top` win over values in `self`.
    pub fn overlay(self, top: Settings) -> Settings {
        let base = self;
        overlay!(
            base,
            top,
            length,
            width,
            thickness,
            young_modulus,
            rho,
            elements,
            kr,
            spring_node,
            force_node,
            transducer_mass,
            transducer_node,
            sine,
            amplitude,
            frequency,
            phase,
            force_file,
            force_period,
            rtol,
            atol,
            h_init,
            h_max,
            t_end,
            damping,
            sample_dt,
            analysis,
            window,
            harmonics,
            tol_bins,
            out_dir,
            prefix,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSpec {
    Sine { amplitude: f64, frequency: f64, phase: f64 },
    File { path: PathBuf, period: f64 },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub beam: BeamProperties,
    pub elements: usize,
    pub spring: UnilateralSpring,
    pub force_node: usize,
    pub transducer_mass: f64,
    pub transducer_node: usize,
    pub forcing: ForcingSpec,
    pub integrator: IntegratorConfig,
    pub damping: f64,
    pub sample_dt: f64,
    pub analysis: f64,
    pub window: Window,
    pub harmonics: usize,
    pub tol_bins: usize,
    pub out_dir: PathBuf,
    pub prefix: String,
}

fn parse_sine(s: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match parts.as_deref() {
        Ok([a, f]) => Ok((*a, *f, 0.0)),
        Ok([a, f, p]) => Ok((*a, *f, *p)),
        _ => Err(CliError::Config(format!("--sine expects AMP,FREQ[,PHASE], got '{s}'"))),
    }
}

impl RunConfig {
    pub fn resolve(s: Settings) -> Result<Self, CliError> {
        let d = BeamProperties::default();
        let beam = BeamProperties {
            length: s.length.unwrap_or(d.length),
            width: s.width.unwrap_or(d.width),
            thickness: s.thickness.unwrap_or(d.thickness),
            young_modulus: s.young_modulus.unwrap_or(d.young_modulus),
            density: s.rho.unwrap_or(d.density),
        };
        beam.validate()?;
        let elements = s.elements.unwrap_or(10);
        if elements == 0 {
            return Err(CliError::Config("elements must be >= 1".into()));
        }
        let default_force_node =
            ((DEFAULT_FORCE_POSITION / beam.length * elements as f64).round() as usize).clamp(1, elements);
        let force_node = s.force_node.unwrap_or(default_force_node);
        let spring = UnilateralSpring::new(s.kr.unwrap_or(DEFAULT_KR), s.spring_node.unwrap_or(elements))?;

        let (mut amplitude, mut frequency, mut phase) = (1.0, 32.0, 0.0);
        if let Some(sine) = &s.sine {
            (amplitude, frequency, phase) = parse_sine(sine)?;
        }
        amplitude = s.amplitude.unwrap_or(amplitude);
        frequency = s.frequency.unwrap_or(frequency);
        phase = s.phase.unwrap_or(phase);
        let forcing = match (&s.force_file, s.force_period) {
            (Some(path), Some(period)) => ForcingSpec::File {
                path: path.clone(),
                period,
            },
            (Some(_), None) => return Err(CliError::Config("--force-file needs --force-period".into())),
            (None, _) => ForcingSpec::Sine {
                amplitude,
                frequency,
                phase,
            },
        };

        let base = IntegratorConfig::default();
        let integrator = IntegratorConfig {
            rtol: s.rtol.unwrap_or(base.rtol),
            atol: s.atol.unwrap_or(base.atol),
            h_init: s.h_init.unwrap_or(base.h_init),
            h_max: s.h_max.unwrap_or(base.h_max),
            t_end: s.t_end.unwrap_or(base.t_end),
            ..base
        };
        integrator.validate()?;
        let window = match &s.window {
            Some(w) => w.parse()?,
            None => Window::Rectangular,
        };
        let cfg = RunConfig {
            beam,
            elements,
            spring,
            force_node,
            transducer_mass: s.transducer_mass.unwrap_or(DEFAULT_TRANSDUCER_MASS),
            transducer_node: s.transducer_node.unwrap_or(force_node),
            forcing,
            integrator,
            damping: s.damping.unwrap_or(0.0),
            sample_dt: s.sample_dt.unwrap_or(1.0 / 8192.0),
            analysis: s.analysis.unwrap_or(0.5),
            window,
            harmonics: s.harmonics.unwrap_or(5),
            tol_bins: s.tol_bins.unwrap_or(DEFAULT_TOL_BINS),
            out_dir: s.out_dir.unwrap_or_else(|| PathBuf::from(".")),
            prefix: s.prefix.unwrap_or_else(|| "snubber".into()),
        };
        for (what, v) in [("sample_dt", cfg.sample_dt), ("analysis", cfg.analysis)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("{what} must be > 0, got {v}")));
            }
        }
        for (what, node) in [
            ("spring_node", cfg.spring.node),
            ("force_node", cfg.force_node),
            ("transducer_node", cfg.transducer_node),
        ] {
            if node == 0 || node > elements {
                return Err(CliError::Config(format!(
                    "{what} {node} is not a free node of a {elements}-element mesh (1..={elements})"
                )));
            }
        }
        if cfg.harmonics == 0 {
            return Err(CliError::Config("harmonics must be >= 1".into()));
        }
        Ok(cfg)
    }

    /// Bare beam model, without the transducer.
    pub fn beam_model(&self) -> Result<FEModel, CliError> {
        Ok(assemble(self.beam, self.elements)?)
    }

    pub fn model(&self) -> Result<FEModel, CliError> {
        let m = self.beam_model()?;
        if self.transducer_mass > 0.0 {
            Ok(m.add_point_mass(self.transducer_node, self.transducer_mass)?)
        } else {
            Ok(m)
        }
    }

    pub fn forcing_signal(&self) -> Result<ForcingSignal, CliError> {
        Ok(match &self.forcing {
            ForcingSpec::Sine {
                amplitude,
                frequency,
                phase,
            } => ForcingSignal::sine(*amplitude, *frequency, *phase)?,
            ForcingSpec::File { path, period } => {
                read_force_file(path, *period).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
        })
    }

    pub fn system(&self, model: &FEModel, forcing: ForcingSignal) -> Result<BeamSystem, CliError> {
        Ok(BeamSystem::new(model, self.spring, forcing, self.force_node)?.with_damping(self.damping)?)
    }

    pub fn output_path(&self, kind: &str) -> PathBuf {
        self.out_dir.join(format!("{}_{kind}.txt", self.prefix))
    }

    /// Resolved configuration as `key = value` pairs for table headers.
    pub fn metadata(&self) -> Metadata {
        let mut m: Vec<(&str, String)> = vec![
            ("length", self.beam.length.to_string()),
            ("width", self.beam.width.to_string()),
            ("thickness", self.beam.thickness.to_string()),
            ("young_modulus", self.beam.young_modulus.to_string()),
            ("rho", self.beam.density.to_string()),
            ("elements", self.elements.to_string()),
            ("kr", self.spring.stiffness.to_string()),
            ("spring_node", self.spring.node.to_string()),
            ("force_node", self.force_node.to_string()),
            ("transducer_mass", self.transducer_mass.to_string()),
            ("transducer_node", self.transducer_node.to_string()),
        ];
        match &self.forcing {
            ForcingSpec::Sine {
                amplitude,
                frequency,
                phase,
            } => {
                m.push(("amplitude", amplitude.to_string()));
                m.push(("frequency", frequency.to_string()));
                m.push(("phase", phase.to_string()));
            }
            ForcingSpec::File { path, period } => {
                m.push(("force_file", path.display().to_string()));
                m.push(("force_period", period.to_string()));
            }
        }
        let i = &self.integrator;
        m.extend([
            ("rtol", i.rtol.to_string()),
            ("atol", i.atol.to_string()),
            ("h_init", i.h_init.to_string()),
            ("h_max", i.h_max.to_string()),
            ("t_end", i.t_end.to_string()),
            ("damping", self.damping.to_string()),
            ("sample_dt", self.sample_dt.to_string()),
            ("analysis", self.analysis.to_string()),
            ("harmonics", self.harmonics.to_string()),
            ("tol_bins", self.tol_bins.to_string()),
        ]);
        m.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_setup() {
        let c = RunConfig::resolve(Settings::default()).unwrap();
        assert_eq!(c.elements, 10);
        assert_eq!(c.force_node, 2);
        assert_eq!(c.spring.node, 10);
        assert_eq!(c.spring.stiffness, DEFAULT_KR);
        assert_eq!(c.transducer_node, 2);
        assert_eq!(
            c.forcing,
            ForcingSpec::Sine {
                amplitude: 1.0,
                frequency: 32.0,
                phase: 0.0
            }
        );
        assert_eq!(c.integrator, IntegratorConfig::default());
    }

    #[test]
    fn flags_win_over_file() {
        let file: Settings = toml::from_str("rho = 5400.0\nelements = 4\nsine = \"2,50\"").unwrap();
        let flags = Settings {
            elements: Some(6),
            frequency: Some(60.0),
            ..Default::default()
        };
        let c = RunConfig::resolve(file.overlay(flags)).unwrap();
        assert_eq!(c.beam.density, 5400.0);
        assert_eq!(c.elements, 6);
        assert_eq!(
            c.forcing,
            ForcingSpec::Sine {
                amplitude: 2.0,
                frequency: 60.0,
                phase: 0.0
            }
        );
    }

    #[test]
    fn bad_settings_rejected() {
        assert!(toml::from_str::<Settings>("colour = 3").is_err());
        let bad = |s: Settings| RunConfig::resolve(s).is_err();
        assert!(bad(Settings {
            elements: Some(0),
            ..Default::default()
        }));
        assert!(bad(Settings {
            sine: Some("1".into()),
            ..Default::default()
        }));
        assert!(bad(Settings {
            rtol: Some(-1.0),
            ..Default::default()
        }));
        assert!(bad(Settings {
            force_file: Some("x".into()),
            ..Default::default()
        }));
        assert!(bad(Settings {
            window: Some("kaiser".into()),
            ..Default::default()
        }));
    }

    #[test]
    fn single_element_defaults_stay_on_mesh() {
        let c = RunConfig::resolve(Settings {
            elements: Some(1),
            ..Default::default()
        })
        .unwrap();
        assert_eq!((c.force_node, c.spring.node), (1, 1));
        assert!(c.model().is_ok());
    }
}
