//! Adaptive variable-step BDF2 for the piecewise-linear beam–snubber system.
//!
//! Each step solves, for the new acceleration `a`,
//!
//! ```text
//! (d·M + c²·K_p) a = F(t₁) e_f − K_p (α_q + c·α_v) − α_damp·M α_v,
//! v = α_v + c·a,   q = α_q + c·v,   c = γh,   d = 1 + c·α_damp
//! ```
//!
//! where `α_q`, `α_v` are the BDF2 history combinations and `K_p` is the
//! stiffness of the active contact piece. Solving for the acceleration keeps
//! the step free of the `1/h²` cancellation a displacement unknown suffers.
//! The residual is piecewise linear, so Newton converges once the piece guess
//! is consistent with the sign of the solution at the spring DOF. Only two
//! Jacobians exist per step size and both factorisations are cached.
//!
//! Step size is controlled by the implicit-Euler local error estimate
//! `(h/2)(f₁ − f₀)`, passed once through the iteration matrix to damp its
//! stiff components. Only the displacement part is measured, as an RMS norm
//! against `atol + rtol·‖q‖∞`. Steps whose solution changes contact state are
//! halved until they are shorter than [`IntegratorConfig::switch_floor`].

use nalgebra::{Cholesky, DVector, Dyn};

use crate::contact::{BeamSystem, SystemState};
use crate::{Error, Result};

const SAFETY: f64 = 0.9;
const MAX_GROWTH: f64 = 2.0;
const MIN_SHRINK: f64 = 0.1;
/// Growth below this ratio keeps the current step (and its factorisations).
const HOLD_BAND: f64 = 1.2;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub rtol: f64,
    /// Absolute tolerance, applied to every state component.
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    /// Smallest step accepted before giving up.
    pub h_min: f64,
    /// Steps that cross the contact switch are bisected down to this length.
    pub switch_floor: f64,
    pub max_newton_iters: usize,
    pub t_end: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-9,
            h_init: 1e-6,
            h_max: 1e-4,
            h_min: 1e-14,
            switch_floor: 1e-9,
            max_newton_iters: 8,
            t_end: 1.0,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("h_init", self.h_init),
            ("h_max", self.h_max),
            ("h_min", self.h_min),
            ("switch_floor", self.switch_floor),
            ("t_end", self.t_end),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(format!("{name} must be > 0, got {value}")));
            }
        }
        if self.h_init > self.h_max {
            return Err(Error::invalid(format!(
                "h_init ({}) must not exceed h_max ({})",
                self.h_init, self.h_max
            )));
        }
        if self.h_min > self.switch_floor {
            return Err(Error::invalid("h_min must not exceed switch_floor"));
        }
        if self.max_newton_iters < 2 {
            return Err(Error::invalid("max_newton_iters must be >= 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    /// Rejected on the local error test.
    pub rejected: usize,
    /// Rejected because the step crossed the contact switch.
    pub switch_bisections: usize,
    pub newton_iterations: usize,
    pub factorizations: usize,
}

/// Accepted state, handed to observers after each step.
#[derive(Debug, Clone)]
pub struct StepPoint {
    pub t: f64,
    pub q: DVector<f64>,
    pub v: DVector<f64>,
    pub a: DVector<f64>,
}

/// Time history of the reduced state. Accelerations are kept so that the
/// cubic Hermite interpolant of the velocity is available.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub q_history: Vec<DVector<f64>>,
    pub v_history: Vec<DVector<f64>>,
    pub a_history: Vec<DVector<f64>>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, p: StepPoint) {
        self.times.push(p.t);
        self.q_history.push(p.q);
        self.v_history.push(p.v);
        self.a_history.push(p.a);
    }

    /// Time series of a single displacement DOF.
    pub fn displacement(&self, dof: usize) -> Vec<f64> {
        self.q_history.iter().map(|q| q[dof]).collect()
    }

    pub fn velocity(&self, dof: usize) -> Vec<f64> {
        self.v_history.iter().map(|v| v[dof]).collect()
    }

    pub fn span(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Interpolate onto `t0, t0 + dt, …` up to the last stored time. Both
    /// displacement and velocity use cubic Hermite interpolation with the
    /// stored derivatives; acceleration is interpolated linearly.
    pub fn resample_uniform(&self, dt: f64) -> Result<Trajectory> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
        }
        let span = self.span();
        if dt >= span {
            return Err(Error::invalid(format!(
                "dt ({dt}) must be smaller than the trajectory span ({span})"
            )));
        }
        let t0 = self.times[0];
        let t_last = *self.times.last().unwrap();
        let mut out = Trajectory {
            stats: self.stats,
            ..Default::default()
        };
        let mut seg = 0;
        let mut k = 0usize;
        loop {
            let t = t0 + k as f64 * dt;
            if t > t_last + 1e-9 * dt {
                break;
            }
            let t = t.min(t_last);
            while seg + 2 < self.times.len() && self.times[seg + 1] < t {
                seg += 1;
            }
            out.push(self.interpolate_segment(seg, t));
            k += 1;
        }
        Ok(out)
    }

    fn interpolate_segment(&self, i: usize, t: f64) -> StepPoint {
        let j = (i + 1).min(self.times.len() - 1);
        if i == j {
            return StepPoint {
                t,
                q: self.q_history[i].clone(),
                v: self.v_history[i].clone(),
                a: self.a_history[i].clone(),
            };
        }
        let left = StepPoint {
            t: self.times[i],
            q: self.q_history[i].clone(),
            v: self.v_history[i].clone(),
            a: self.a_history[i].clone(),
        };
        let right = StepPoint {
            t: self.times[j],
            q: self.q_history[j].clone(),
            v: self.v_history[j].clone(),
            a: self.a_history[j].clone(),
        };
        dense_output(&left, &right, t)
    }
}

/// Cubic Hermite interpolation between two accepted points.
pub fn dense_output(p0: &StepPoint, p1: &StepPoint, t: f64) -> StepPoint {
    let h = p1.t - p0.t;
    if h <= 0.0 {
        return StepPoint { t, ..p1.clone() };
    }
    let s = ((t - p0.t) / h).clamp(0.0, 1.0);
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = (s3 - 2.0 * s2 + s) * h;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = (s3 - s2) * h;
    let q = &p0.q * h00 + &p0.v * h10 + &p1.q * h01 + &p1.v * h11;
    let v = &p0.v * h00 + &p0.a * h10 + &p1.v * h01 + &p1.a * h11;
    let a = &p0.a * (1.0 - s) + &p1.a * s;
    StepPoint { t, q, v, a }
}

/// Integrate and keep every accepted step.
pub fn integrate(sys: &BeamSystem, init: &SystemState, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let mut traj = Trajectory::default();
    let stats = integrate_with(sys, init, cfg, |p| traj.push(p.clone()))?;
    traj.stats = stats;
    Ok(traj)
}

/// Integrate and keep only samples on the uniform grid `init.t + k·dt`,
/// produced on the fly from the dense output. Memory stays proportional to
/// the output grid regardless of how small the steps become.
pub fn integrate_uniform(sys: &BeamSystem, init: &SystemState, cfg: &IntegratorConfig, dt: f64) -> Result<Trajectory> {
    if !(dt.is_finite() && dt > 0.0) || dt >= cfg.t_end - init.t {
        return Err(Error::invalid(format!(
            "dt must be > 0 and shorter than the integration span, got {dt}"
        )));
    }
    let mut traj = Trajectory::default();
    let mut prev: Option<StepPoint> = None;
    let mut k = 0usize;
    let t0 = init.t;
    let stats = integrate_with(sys, init, cfg, |p| {
        match &prev {
            None => {
                traj.push(p.clone());
                k = 1;
            }
            Some(p0) => loop {
                let t = t0 + k as f64 * dt;
                if t > p.t + 1e-9 * dt {
                    break;
                }
                traj.push(dense_output(p0, p, t.min(p.t)));
                k += 1;
            },
        }
        prev = Some(p.clone());
    })?;
    traj.stats = stats;
    Ok(traj)
}

/// Integrate from `init` to `cfg.t_end`, calling `observer` with the initial
/// point and every accepted step.
pub fn integrate_with<F>(
    sys: &BeamSystem,
    init: &SystemState,
    cfg: &IntegratorConfig,
    mut observer: F,
) -> Result<StepStats>
where
    F: FnMut(&StepPoint),
{
    cfg.validate()?;
    let n = sys.n_free();
    if init.q.len() != n || init.v.len() != n {
        return Err(Error::invalid(format!(
            "initial state dimension ({}, {}) does not match {n} free DOFs",
            init.q.len(),
            init.v.len()
        )));
    }
    if init.t >= cfg.t_end {
        return Err(Error::invalid(format!(
            "start time {} is not before t_end {}",
            init.t, cfg.t_end
        )));
    }
    let mut stepper = Bdf2::new(sys, cfg, init);
    observer(&stepper.current);
    while stepper.current.t < cfg.t_end {
        stepper.step()?;
        observer(&stepper.current);
    }
    Ok(stepper.stats)
}

struct History {
    h: f64,
    q: DVector<f64>,
    v: DVector<f64>,
}

/// Cholesky factors of `d·M + c²·K_p` for the two contact pieces at one
/// `(c, d)` pair.
struct FactorCache {
    key: Option<(f64, f64)>,
    pieces: [Option<Cholesky<f64, Dyn>>; 2],
}

struct Bdf2<'a> {
    sys: &'a BeamSystem,
    cfg: &'a IntegratorConfig,
    current: StepPoint,
    history: Option<History>,
    /// Step size the controller wants, before clipping to breakpoints.
    h: f64,
    cache: FactorCache,
    stats: StepStats,
}

enum Attempt {
    Accepted,
    Rejected,
}

impl<'a> Bdf2<'a> {
    fn new(sys: &'a BeamSystem, cfg: &'a IntegratorConfig, init: &SystemState) -> Self {
        let a = sys.acceleration(init.t, &init.q, &init.v);
        Self {
            sys,
            cfg,
            current: StepPoint {
                t: init.t,
                q: init.q.clone(),
                v: init.v.clone(),
                a,
            },
            history: None,
            h: cfg.h_init,
            cache: FactorCache {
                key: None,
                pieces: [None, None],
            },
            stats: StepStats::default(),
        }
    }

    fn step(&mut self) -> Result<()> {
        loop {
            let t = self.current.t;
            let mut h = self.h.min(self.cfg.h_max);
            if let Some(bp) = self.sys.forcing.next_breakpoint(t) {
                if bp < t + h {
                    h = bp - t;
                }
            }
            let remaining = self.cfg.t_end - t;
            if h >= remaining * (1.0 - 1e-12) {
                h = remaining;
            }
            if !(h >= self.cfg.h_min) {
                return Err(Error::IntegrationFailure {
                    t,
                    reason: format!("step size {h:e} fell below h_min {:e}", self.cfg.h_min),
                });
            }
            if let Attempt::Accepted = self.attempt(h)? {
                return Ok(());
            }
        }
    }

    /// BDF coefficients `(α_q, α_v, γ)` for a step of length `h`.
    fn history_terms(&self, h: f64) -> (DVector<f64>, DVector<f64>, f64) {
        let cur = &self.current;
        match &self.history {
            None => (cur.q.clone(), cur.v.clone(), 1.0),
            Some(prev) => {
                let w = h / prev.h;
                let denom = 1.0 + 2.0 * w;
                let a0 = (1.0 + w) * (1.0 + w) / denom;
                let a1 = -w * w / denom;
                let aq = &cur.q * a0 + &prev.q * a1;
                let av = &cur.v * a0 + &prev.v * a1;
                (aq, av, (1.0 + w) / denom)
            }
        }
    }

    fn factor(&mut self, c: f64, d: f64, engaged: bool) -> Result<&Cholesky<f64, Dyn>> {
        if self.cache.key != Some((c, d)) {
            self.cache.key = Some((c, d));
            self.cache.pieces = [None, None];
        }
        let slot = usize::from(engaged);
        if self.cache.pieces[slot].is_none() {
            let jac = self.sys.mass() * d + self.sys.piece_stiffness(engaged) * (c * c);
            let chol = jac.cholesky().ok_or_else(|| Error::IntegrationFailure {
                t: self.current.t,
                reason: "step matrix is not positive definite".into(),
            })?;
            self.stats.factorizations += 1;
            self.cache.pieces[slot] = Some(chol);
        }
        Ok(self.cache.pieces[slot].as_ref().unwrap())
    }

    /// Solve the implicit step for the new acceleration. Returns `None` when
    /// Newton fails to settle on a consistent contact piece.
    fn solve(
        &mut self,
        t1: f64,
        c: f64,
        d: f64,
        aq: &DVector<f64>,
        av: &DVector<f64>,
    ) -> Result<Option<(DVector<f64>, DVector<f64>, DVector<f64>)>> {
        let sys = self.sys;
        let s = sys.spring_dof;
        let k_r = sys.spring.stiffness;

        // Displacement reached with zero acceleration; the step then adds c²·a.
        let base = aq + av * c;
        let mut load = -(sys.stiffness() * &base);
        load[sys.force_dof] += sys.forcing.value_at(t1);
        if sys.damping != 0.0 {
            load -= sys.mass() * av * sys.damping;
        }

        let predicted = self.current.q[s] + (t1 - self.current.t) * self.current.v[s];
        let mut engaged = k_r > 0.0 && predicted < 0.0;
        for _ in 0..self.cfg.max_newton_iters {
            self.stats.newton_iterations += 1;
            let mut rhs = load.clone();
            if engaged {
                rhs[s] -= k_r * base[s];
            }
            let a1 = self.factor(c, d, engaged)?.solve(&rhs);
            let v1 = av + &a1 * c;
            let q1 = aq + &v1 * c;
            let now_engaged = k_r > 0.0 && q1[s] < 0.0;
            if now_engaged == engaged {
                return Ok(Some((q1, v1, a1)));
            }
            engaged = now_engaged;
        }
        Ok(None)
    }

    fn attempt(&mut self, h: f64) -> Result<Attempt> {
        let sys = self.sys;
        let t1 = self.current.t + h;
        let (aq, av, gamma) = self.history_terms(h);
        let c = gamma * h;
        let d = 1.0 + c * sys.damping;

        let Some((q1, v1, a1)) = self.solve(t1, c, d, &aq, &av)? else {
            self.stats.rejected += 1;
            self.h = h * 0.25;
            return Ok(Attempt::Rejected);
        };
        if q1.iter().chain(v1.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Divergence { t: t1 });
        }

        let s = sys.spring_dof;
        let crossed = sys.spring.stiffness > 0.0 && (self.current.q[s] < 0.0) != (q1[s] < 0.0);
        if crossed && h > self.cfg.switch_floor {
            self.stats.switch_bisections += 1;
            self.h = (0.5 * h).max(self.cfg.switch_floor);
            return Ok(Attempt::Rejected);
        }

        // Local error of implicit Euler over this step, filtered through the
        // iteration matrix so that modes BDF2 damps do not dictate the step.
        let engaged = sys.spring.stiffness > 0.0 && q1[s] < 0.0;
        let cur = &self.current;
        let eq = (&v1 - &cur.v) * (0.5 * h);
        let ev = (&a1 - &cur.a) * (0.5 * h);
        let filt_rhs = sys.mass() * &ev - sys.piece_stiffness(engaged) * &eq * c;
        let ev_f = self.factor(c, d, engaged)?.solve(&filt_rhs);
        let eq_f = &eq + &ev_f * c;
        // Displacement error against the size of the whole displacement
        // vector, so entries passing through zero do not collapse the step.
        let weight = self.cfg.atol + self.cfg.rtol * q1.amax().max(self.current.q.amax());
        let err = eq_f.norm() / (weight * (q1.len() as f64).sqrt());
        if !err.is_finite() {
            return Err(Error::Divergence { t: t1 });
        }

        if err > 1.0 {
            self.stats.rejected += 1;
            let factor = (SAFETY / err.sqrt()).clamp(MIN_SHRINK, SAFETY);
            self.h = h * factor;
            return Ok(Attempt::Rejected);
        }

        self.stats.accepted += 1;
        let prev = std::mem::replace(
            &mut self.current,
            StepPoint {
                t: t1,
                q: q1,
                v: v1,
                a: a1,
            },
        );
        self.history = Some(History {
            h,
            q: prev.q,
            v: prev.v,
        });

        let factor = if err > 0.0 {
            (SAFETY / err.sqrt()).min(MAX_GROWTH)
        } else {
            MAX_GROWTH
        };
        if !(1.0..HOLD_BAND).contains(&factor) {
            self.h = h * factor;
        } else {
            self.h = h;
        }
        Ok(Attempt::Accepted)
    }
}
