//! Stepped-sine frequency sweeps and resonance extraction.
//!
//! Every grid frequency is an independent run from rest, so the grid can be
//! evaluated in any order (or concurrently) with identical results.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::beam_fem::{modes_of, FEModel};
use crate::contact::{BeamSystem, SystemState, UnilateralSpring};
use crate::forcing::ForcingSignal;
use crate::integrator::{dense_output, integrate_with, IntegratorConfig, StepPoint};
use crate::{Error, Result};

pub const SETTLE_PERIODS: usize = 20;
pub const MEASURE_PERIODS: usize = 5;

/// Dense-output samples taken inside each step while measuring extrema.
const SAMPLES_PER_STEP: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum PointStatus {
    Ok,
    Failed(String),
}

impl PointStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, PointStatus::Ok)
    }
}

impl fmt::Display for PointStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointStatus::Ok => f.write_str("ok"),
            PointStatus::Failed(_) => f.write_str("failed"),
        }
    }
}

impl FromStr for PointStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ok" => Ok(PointStatus::Ok),
            "failed" => Ok(PointStatus::Failed(String::new())),
            other => Err(Error::invalid(format!("unknown sweep status '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    /// Hz, ascending.
    pub frequencies: Vec<f64>,
    /// Half peak-to-peak tip displacement (m); zero where the run failed.
    pub amplitudes: Vec<f64>,
    pub status: Vec<PointStatus>,
    pub settle_periods: usize,
    pub measure_periods: usize,
}

impl SweepCurve {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn failures(&self) -> usize {
        self.status.iter().filter(|s| !s.is_ok()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub settle_periods: usize,
    pub measure_periods: usize,
    /// Mass-proportional damping (1/s) used for every run.
    pub damping: f64,
    pub parallel: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            settle_periods: SETTLE_PERIODS,
            measure_periods: MEASURE_PERIODS,
            damping: 0.0,
            parallel: true,
        }
    }
}

/// `n` frequencies spaced geometrically from `f_start` to `f_end` inclusive.
pub fn geometric_grid(f_start: f64, f_end: f64, n: usize) -> Result<Vec<f64>> {
    if !(f_start.is_finite() && f_start > 0.0 && f_end.is_finite() && f_end > f_start) {
        return Err(Error::invalid(format!(
            "need 0 < f_start < f_end, got {f_start} and {f_end}"
        )));
    }
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 sweep points, got {n}")));
    }
    let ratio = (f_end / f_start).ln() / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| f_start * (ratio * i as f64).exp()).collect();
    grid[n - 1] = f_end;
    Ok(grid)
}

/// Half the peak-to-peak tip displacement over `measure` forcing periods,
/// after `settle` periods from rest.
pub fn steady_amplitude(
    sys: &BeamSystem,
    frequency: f64,
    settle: usize,
    measure: usize,
    config: &IntegratorConfig,
) -> Result<f64> {
    if measure == 0 {
        return Err(Error::invalid("measure_periods must be at least 1"));
    }
    let period = 1.0 / frequency;
    let t_measure = settle as f64 * period;
    let cfg = IntegratorConfig {
        t_end: (settle + measure) as f64 * period,
        h_init: config.h_init.min(period / 100.0),
        ..*config
    };
    let tip = sys.tip_dofs().0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut prev: Option<StepPoint> = None;
    integrate_with(sys, &SystemState::at_rest(sys.n_free()), &cfg, |p| {
        if let Some(p0) = &prev {
            if p.t >= t_measure {
                let start = p0.t.max(t_measure);
                for i in 0..=SAMPLES_PER_STEP {
                    let t = start + (p.t - start) * i as f64 / SAMPLES_PER_STEP as f64;
                    let u = dense_output(p0, p, t).q[tip];
                    lo = lo.min(u);
                    hi = hi.max(u);
                }
            }
        }
        prev = Some(p.clone());
    })?;
    Ok(0.5 * (hi - lo))
}

/// Sweep with the default settle/measure windows, no damping.
#[allow(clippy::too_many_arguments)]
pub fn frequency_sweep(
    model: &FEModel,
    spring: UnilateralSpring,
    forcing_amplitude: f64,
    force_node: usize,
    f_start: f64,
    f_end: f64,
    n_points: usize,
    config: &IntegratorConfig,
) -> Result<SweepCurve> {
    frequency_sweep_with(
        model,
        spring,
        forcing_amplitude,
        force_node,
        &geometric_grid(f_start, f_end, n_points)?,
        config,
        &SweepOptions::default(),
    )
}

/// Sweep over an explicit ascending grid. Individual integration failures
/// are recorded in the curve; only invalid input is an error.
pub fn frequency_sweep_with(
    model: &FEModel,
    spring: UnilateralSpring,
    forcing_amplitude: f64,
    force_node: usize,
    grid: &[f64],
    config: &IntegratorConfig,
    options: &SweepOptions,
) -> Result<SweepCurve> {
    config.validate()?;
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|f| !(*f > 0.0)) {
        return Err(Error::invalid("sweep grid must be positive and strictly ascending"));
    }
    if options.measure_periods == 0 {
        return Err(Error::invalid("measure_periods must be at least 1"));
    }
    // Validate everything that does not depend on the frequency once.
    let probe = ForcingSignal::sine(forcing_amplitude, 1.0, 0.0)?;
    BeamSystem::new(model, spring, probe, force_node)?.with_damping(options.damping)?;

    let run = |&f: &f64| -> (f64, PointStatus) {
        let result = ForcingSignal::sine(forcing_amplitude, f, 0.0)
            .and_then(|forcing| BeamSystem::new(model, spring, forcing, force_node))
            .and_then(|sys| sys.with_damping(options.damping))
            .and_then(|sys| steady_amplitude(&sys, f, options.settle_periods, options.measure_periods, config));
        match result {
            Ok(a) => (a, PointStatus::Ok),
            Err(e) => (0.0, PointStatus::Failed(e.to_string())),
        }
    };
    let results: Vec<(f64, PointStatus)> = if options.parallel {
        grid.par_iter().map(run).collect()
    } else {
        grid.iter().map(run).collect()
    };
    let (amplitudes, status) = results.into_iter().unzip();
    Ok(SweepCurve {
        frequencies: grid.to_vec(),
        amplitudes,
        status,
        settle_periods: options.settle_periods,
        measure_periods: options.measure_periods,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub frequency: f64,
    pub amplitude: f64,
}

/// Vertex of the parabola through three points, if it opens downwards.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<(f64, f64)> {
    let d01 = (y[1] - y[0]) / (x[1] - x[0]);
    let d12 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d12 - d01) / (x[2] - x[0]);
    if !(a < 0.0) {
        return None;
    }
    let b = d01 - a * (x[0] + x[1]);
    let xv = -b / (2.0 * a);
    let yv = y[1] + (xv - x[1]) * (d01 + a * (xv - x[0]));
    Some((xv, yv))
}

/// The `n` largest strict interior local maxima, largest first, each refined
/// by a quadratic through its two neighbours. Failed points never take part.
pub fn find_resonances(curve: &SweepCurve, n: usize) -> Vec<Resonance> {
    let f = &curve.frequencies;
    let y = &curve.amplitudes;
    let ok = |i: usize| curve.status.get(i).is_none_or(PointStatus::is_ok);
    let mut peaks: Vec<Resonance> = (1..f.len().saturating_sub(1))
        .filter(|&i| ok(i - 1) && ok(i) && ok(i + 1))
        .filter(|&i| y[i] > y[i - 1] && y[i] > y[i + 1])
        .map(|i| {
            let (fv, yv) = parabola_vertex([f[i - 1], f[i], f[i + 1]], [y[i - 1], y[i], y[i + 1]])
                .filter(|(fv, _)| *fv > f[i - 1] && *fv < f[i + 1])
                .unwrap_or((f[i], y[i]));
            Resonance {
                frequency: fv,
                amplitude: yv,
            }
        })
        .collect();
    peaks.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    peaks.truncate(n);
    peaks
}

/// The lowest-frequency entry among the two strongest resonances.
pub fn first_resonance(curve: &SweepCurve) -> Option<Resonance> {
    find_resonances(curve, 2)
        .into_iter()
        .min_by(|a, b| a.frequency.total_cmp(&b.frequency))
}

/// First eigenfrequency with the spring detached and with it permanently
/// attached (`K + k_r e eᵀ`); a bilinear resonance lies between the two.
pub fn bilinear_bounds(model: &FEModel, spring: &UnilateralSpring) -> Result<(f64, f64)> {
    let m = model.reduced_mass();
    let mut k = model.reduced_stiffness();
    let detached = modes_of(&m, &k, 1)?.frequencies[0];
    let dof = spring.dof(model)?;
    k[(dof, dof)] += spring.stiffness;
    let attached = modes_of(&m, &k, 1)?.frequencies[0];
    Ok((detached, attached))
}
