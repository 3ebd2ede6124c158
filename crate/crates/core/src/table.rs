//! Plain-text tables for trajectories, spectra, harmonic reports and sweeps.
//!
//! Layout: `# key = value` metadata lines, one comma-separated column header,
//! then one row per sample. Every writer has a parser that reads its own
//! output back.

use std::fmt::Write as _;

use crate::contact::BeamSystem;
use crate::integrator::Trajectory;
use crate::spectral::{Harmonic, Spectrum, Window};
use crate::sweep::{PointStatus, SweepCurve};
use crate::{Error, Result};

pub const TRAJECTORY_COLUMNS: [&str; 5] = ["t", "u_tip", "theta_tip", "contact_force", "F(t)"];
pub const SPECTRUM_COLUMNS: [&str; 2] = ["f_Hz", "magnitude"];
pub const HARMONIC_COLUMNS: [&str; 4] = ["k", "f_peak", "magnitude", "present"];
pub const SWEEP_COLUMNS: [&str; 3] = ["f_Hz", "amplitude_m", "status"];

pub type Metadata = Vec<(String, String)>;

fn header(meta: &[(String, String)], columns: &[&str]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k} = {v}");
    }
    out.push_str(&columns.join(", "));
    out.push('\n');
    out
}

/// Value of `key` among the metadata lines, if present.
pub fn meta_value<'a>(meta: &'a [(String, String)], key: &str) -> Option<&'a str> {
    meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

struct Parsed<'a> {
    meta: Metadata,
    rows: Vec<(usize, Vec<&'a str>)>,
}

fn parse_table<'a>(text: &'a str, columns: &[&str]) -> Result<Parsed<'a>> {
    let mut meta = Vec::new();
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !seen_header {
            if fields != columns {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected header '{}', found '{line}'", columns.join(", ")),
                });
            }
            seen_header = true;
            continue;
        }
        if fields.len() != columns.len() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} columns, found {}", columns.len(), fields.len()),
            });
        }
        rows.push((line_no, fields));
    }
    if !seen_header {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: format!("missing column header '{}'", columns.join(", ")),
        });
    }
    Ok(Parsed { meta, rows })
}

fn num(line: usize, s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|e| Error::Parse {
        line,
        message: format!("'{s}': {e}"),
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryTable {
    pub meta: Metadata,
    pub t: Vec<f64>,
    pub u_tip: Vec<f64>,
    pub theta_tip: Vec<f64>,
    pub contact_force: Vec<f64>,
    pub force: Vec<f64>,
}

impl TrajectoryTable {
    pub fn from_trajectory(traj: &Trajectory, sys: &BeamSystem, meta: Metadata) -> Self {
        let (u, theta) = sys.tip_dofs();
        let s = sys.spring_dof();
        let mut table = TrajectoryTable {
            meta,
            ..Default::default()
        };
        for (t, q) in traj.times.iter().zip(&traj.q_history) {
            table.t.push(*t);
            table.u_tip.push(q[u]);
            table.theta_tip.push(q[theta]);
            table.contact_force.push(sys.spring().force(q[s]));
            table.force.push(sys.forcing().value_at(*t));
        }
        table
    }

    pub fn to_text(&self) -> String {
        let mut out = header(&self.meta, &TRAJECTORY_COLUMNS);
        for i in 0..self.t.len() {
            let _ = writeln!(
                out,
                "{:e}, {:e}, {:e}, {:e}, {:e}",
                self.t[i], self.u_tip[i], self.theta_tip[i], self.contact_force[i], self.force[i]
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let p = parse_table(text, &TRAJECTORY_COLUMNS)?;
        let mut table = TrajectoryTable {
            meta: p.meta,
            ..Default::default()
        };
        for (line, f) in p.rows {
            table.t.push(num(line, f[0])?);
            table.u_tip.push(num(line, f[1])?);
            table.theta_tip.push(num(line, f[2])?);
            table.contact_force.push(num(line, f[3])?);
            table.force.push(num(line, f[4])?);
        }
        Ok(table)
    }
}

/// Spectrum table. Window and normalisation travel as metadata.
pub fn write_spectrum(s: &Spectrum, meta: &[(String, String)]) -> String {
    let mut meta = meta.to_vec();
    meta.push(("window".into(), s.window.to_string()));
    meta.push(("normalized".into(), s.normalized.to_string()));
    let mut out = header(&meta, &SPECTRUM_COLUMNS);
    for (f, m) in s.frequencies.iter().zip(&s.magnitudes) {
        let _ = writeln!(out, "{f:e}, {m:e}");
    }
    out
}

pub fn parse_spectrum(text: &str) -> Result<Spectrum> {
    let p = parse_table(text, &SPECTRUM_COLUMNS)?;
    let mut frequencies = Vec::with_capacity(p.rows.len());
    let mut magnitudes = Vec::with_capacity(p.rows.len());
    for (line, f) in &p.rows {
        frequencies.push(num(*line, f[0])?);
        magnitudes.push(num(*line, f[1])?);
    }
    if frequencies.len() < 2 {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: "a spectrum needs at least 2 rows".into(),
        });
    }
    let df = frequencies[1] - frequencies[0];
    for (i, w) in frequencies.windows(2).enumerate() {
        if !(df > 0.0) || ((w[1] - w[0]) - df).abs() > 1e-6 * df {
            return Err(Error::Parse {
                line: p.rows[i + 1].0,
                message: "frequencies must form a uniform ascending grid".into(),
            });
        }
    }
    let window = match meta_value(&p.meta, "window") {
        Some(w) => w.parse()?,
        None => Window::Rectangular,
    };
    let normalized = meta_value(&p.meta, "normalized") == Some("true");
    Ok(Spectrum {
        frequencies,
        magnitudes,
        df,
        window,
        normalized,
    })
}

pub fn write_harmonics(h: &[Harmonic], meta: &[(String, String)]) -> String {
    let mut out = header(meta, &HARMONIC_COLUMNS);
    for x in h {
        let _ = writeln!(out, "{}, {:e}, {:e}, {}", x.k, x.f_peak, x.magnitude, x.present);
    }
    out
}

pub fn parse_harmonics(text: &str) -> Result<Vec<Harmonic>> {
    let p = parse_table(text, &HARMONIC_COLUMNS)?;
    p.rows
        .iter()
        .map(|(line, f)| {
            let k = f[0].parse::<usize>().map_err(|e| Error::Parse {
                line: *line,
                message: format!("'{}': {e}", f[0]),
            })?;
            let present = f[3].parse::<bool>().map_err(|e| Error::Parse {
                line: *line,
                message: format!("'{}': {e}", f[3]),
            })?;
            Ok(Harmonic {
                k,
                f_peak: num(*line, f[1])?,
                magnitude: num(*line, f[2])?,
                present,
            })
        })
        .collect()
}

pub fn write_sweep(c: &SweepCurve, meta: &[(String, String)]) -> String {
    let mut meta = meta.to_vec();
    meta.push(("settle_periods".into(), c.settle_periods.to_string()));
    meta.push(("measure_periods".into(), c.measure_periods.to_string()));
    let mut out = header(&meta, &SWEEP_COLUMNS);
    for i in 0..c.len() {
        let _ = writeln!(out, "{:e}, {:e}, {}", c.frequencies[i], c.amplitudes[i], c.status[i]);
    }
    out
}

pub fn parse_sweep(text: &str) -> Result<SweepCurve> {
    let p = parse_table(text, &SWEEP_COLUMNS)?;
    let count = |key: &str, default: usize| -> Result<usize> {
        match meta_value(&p.meta, key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::invalid(format!("bad {key} '{v}' in sweep header"))),
            None => Ok(default),
        }
    };
    let mut c = SweepCurve {
        frequencies: Vec::new(),
        amplitudes: Vec::new(),
        status: Vec::new(),
        settle_periods: count("settle_periods", crate::sweep::SETTLE_PERIODS)?,
        measure_periods: count("measure_periods", crate::sweep::MEASURE_PERIODS)?,
    };
    for (line, f) in &p.rows {
        c.frequencies.push(num(*line, f[0])?);
        c.amplitudes.push(num(*line, f[1])?);
        c.status.push(f[2].parse::<PointStatus>().map_err(|e| Error::Parse {
            line: *line,
            message: e.to_string(),
        })?);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam_fem::{assemble, BeamProperties};
    use crate::contact::{SystemState, UnilateralSpring};
    use crate::forcing::ForcingSignal;
    use crate::integrator::{integrate_uniform, IntegratorConfig};
    use proptest::prelude::*;

    fn meta() -> Metadata {
        vec![("elements".into(), "10".into()), ("k_r".into(), "57140".into())]
    }

    #[test]
    fn trajectory_round_trip() {
        let model = assemble(BeamProperties::default(), 2).unwrap();
        let sys = BeamSystem::new(
            &model,
            UnilateralSpring::new(57_140.0, 2).unwrap(),
            ForcingSignal::sine(1.0, 32.0, 0.0).unwrap(),
            1,
        )
        .unwrap();
        let cfg = IntegratorConfig {
            t_end: 0.05,
            ..Default::default()
        };
        let traj = integrate_uniform(&sys, &SystemState::at_rest(4), &cfg, 1e-3).unwrap();
        let table = TrajectoryTable::from_trajectory(&traj, &sys, meta());
        assert_eq!(table.t.len(), 51);
        let text = table.to_text();
        assert!(text.starts_with("# elements = 10\n# k_r = 57140\nt, u_tip, theta_tip, contact_force, F(t)\n"));
        assert_eq!(TrajectoryTable::parse(&text).unwrap(), table);
        // Contact force only where the tip is below the spring.
        for (u, f) in table.u_tip.iter().zip(&table.contact_force) {
            assert!(*f == 0.0 || *u < 0.0);
        }
    }

    #[test]
    fn spectrum_round_trip_keeps_window_and_scale() {
        let s = Spectrum {
            frequencies: vec![0.0, 0.5, 1.0, 1.5],
            magnitudes: vec![0.1, 1.0, 0.25, 1e-17],
            df: 0.5,
            window: Window::Hann,
            normalized: true,
        };
        let text = write_spectrum(&s, &meta());
        assert_eq!(parse_spectrum(&text).unwrap(), s);
    }

    #[test]
    fn harmonics_and_sweep_round_trip() {
        let h = vec![
            Harmonic {
                k: 1,
                f_peak: 32.0,
                magnitude: 1.0,
                present: true,
            },
            Harmonic {
                k: 2,
                f_peak: 64.0,
                magnitude: 3.5e-9,
                present: false,
            },
        ];
        assert_eq!(parse_harmonics(&write_harmonics(&h, &[])).unwrap(), h);

        let c = SweepCurve {
            frequencies: vec![20.0, 25.0, 31.25],
            amplitudes: vec![1e-4, 0.0, 3.3e-3],
            status: vec![PointStatus::Ok, PointStatus::Failed(String::new()), PointStatus::Ok],
            settle_periods: 7,
            measure_periods: 3,
        };
        assert_eq!(parse_sweep(&write_sweep(&c, &meta())).unwrap(), c);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let text = "# a = b\nf_Hz, magnitude\n0, 1\n1, x\n";
        assert!(matches!(parse_spectrum(text), Err(Error::Parse { line: 4, .. })));
        let text = "f_Hz, magnitude\n0, 1\n1, 2, 3\n";
        assert!(matches!(parse_spectrum(text), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_spectrum("k, f\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_spectrum("# only\n"), Err(Error::Parse { .. })));
        let uneven = "f_Hz, magnitude\n0, 1\n1, 1\n3, 1\n";
        assert!(matches!(parse_spectrum(uneven), Err(Error::Parse { line: 4, .. })));
        assert!(parse_sweep("f_Hz, amplitude_m, status\n20, 1, maybe\n").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn spectrum_values_survive_text(mags in proptest::collection::vec(0.0f64..1e3, 2..40), df in 1e-3f64..10.0) {
            let s = Spectrum {
                frequencies: (0..mags.len()).map(|i| i as f64 * df).collect(),
                magnitudes: mags,
                df,
                window: Window::Rectangular,
                normalized: false,
            };
            let back = parse_spectrum(&write_spectrum(&s, &[])).unwrap();
            prop_assert_eq!(back.magnitudes, s.magnitudes);
            prop_assert_eq!(back.frequencies, s.frequencies);
        }
    }
}
