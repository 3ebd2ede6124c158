#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DVector;
use snubber::beam_fem::{assemble, FEModel};
use snubber::contact::BeamSystem;
use snubber::{BeamProperties, ForcingSignal, UnilateralSpring};

pub const KR: f64 = 57_140.0;
pub const FORCE_NODE: usize = 2;
pub const TRANSDUCER_MASS: f64 = 0.015;
pub const SAMPLE_DT: f64 = 1.0 / 8192.0;

/// Ten-element beam with the transducer mass at the forcing node.
pub fn reference_model() -> FEModel {
    assemble(BeamProperties::default(), 10)
        .unwrap()
        .add_point_mass(FORCE_NODE, TRANSDUCER_MASS)
        .unwrap()
}

pub fn sine_system(model: &FEModel, kr: f64, frequency: f64) -> BeamSystem {
    let spring = UnilateralSpring::new(kr, model.tip_node()).unwrap();
    let forcing = ForcingSignal::sine(1.0, frequency, 0.0).unwrap();
    BeamSystem::new(model, spring, forcing, FORCE_NODE).unwrap()
}

/// Classical fixed-step RK4 on the first-order form; returns `q` every
/// `every` steps, starting with the initial state.
pub fn rk4(
    sys: &BeamSystem,
    q0: &DVector<f64>,
    v0: &DVector<f64>,
    h: f64,
    t_end: f64,
    every: usize,
) -> Vec<(f64, DVector<f64>)> {
    let (mut q, mut v) = (q0.clone(), v0.clone());
    let n = (t_end / h).round() as usize;
    let mut out = vec![(0.0, q.clone())];
    for k in 0..n {
        let t = k as f64 * h;
        let a1 = sys.acceleration(t, &q, &v);
        let (q2, v2) = (&q + &v * (h / 2.0), &v + &a1 * (h / 2.0));
        let a2 = sys.acceleration(t + h / 2.0, &q2, &v2);
        let (q3, v3) = (&q + &v2 * (h / 2.0), &v + &a2 * (h / 2.0));
        let a3 = sys.acceleration(t + h / 2.0, &q3, &v3);
        let (q4, v4) = (&q + &v3 * h, &v + &a3 * h);
        let a4 = sys.acceleration(t + h, &q4, &v4);
        q += (&v + &v2 * 2.0 + &v3 * 2.0 + &v4) * (h / 6.0);
        v += (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
        if (k + 1) % every == 0 {
            out.push(((k + 1) as f64 * h, q.clone()));
        }
    }
    out
}

/// Steady forced response of the undamped linear system to `sin(ωt)` at
/// `force_dof`, by modal superposition over all modes.
pub struct ModalResponse {
    omega: f64,
    eigenvalues: Vec<f64>,
    participation: Vec<DVector<f64>>,
}

impl ModalResponse {
    pub fn new(model: &FEModel, force_dof: usize, frequency: f64) -> Self {
        let modes = model.modes(model.n_free()).unwrap();
        let omega = 2.0 * PI * frequency;
        let participation = modes
            .eigenvalues
            .iter()
            .zip(&modes.shapes)
            .map(|(l, phi)| phi * (phi[force_dof] / (l - omega * omega)))
            .collect();
        Self {
            omega,
            eigenvalues: modes.eigenvalues,
            participation,
        }
    }

    pub fn at(&self, t: f64) -> (DVector<f64>, DVector<f64>) {
        let p: DVector<f64> = self.participation.iter().sum();
        let (s, c) = (self.omega * t).sin_cos();
        (&p * s, &p * (self.omega * c))
    }

    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// One-sided amplitude of the half-wave rectified unit sine at harmonic `k`.
pub fn half_wave_amplitude(k: usize) -> f64 {
    match k {
        0 => 1.0 / PI,
        1 => 0.5,
        k if k % 2 == 0 => 2.0 / (PI * ((k * k) as f64 - 1.0)),
        _ => 0.0,
    }
}

pub fn sine_samples(frequency: f64, dt: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (2.0 * PI * frequency * i as f64 * dt).sin()).collect()
}
