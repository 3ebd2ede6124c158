//! One-sided spring law and the first-order right-hand side of the
//! beam–snubber system
//!
//! ```text
//! M q̈ + K q = −k_r (q_s)₋ e_s + F(t) e_f
//! ```
//!
//! where `s` is the translation DOF the spring touches and `f` the one the
//! excitation drives.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::beam_fem::FEModel;
use crate::forcing::ForcingSignal;
use crate::{Error, Result};

/// `u` when `u ≤ 0`, else 0.
#[inline]
pub fn negative_part(u: f64) -> f64 {
    u.min(0.0)
}

/// Compression-only linear spring acting on the translation of `node`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnilateralSpring {
    /// N/m
    pub stiffness: f64,
    pub node: usize,
}

impl UnilateralSpring {
    pub fn new(stiffness: f64, node: usize) -> Result<Self> {
        if !(stiffness.is_finite() && stiffness >= 0.0) {
            return Err(Error::invalid(format!(
                "spring stiffness must be >= 0, got {stiffness}"
            )));
        }
        Ok(Self { stiffness, node })
    }

    /// Reduced-system DOF the spring acts on. The clamped node is rejected.
    pub fn dof(&self, model: &FEModel) -> Result<usize> {
        model
            .free_translation(self.node)?
            .ok_or_else(|| Error::invalid("spring node must be an unconstrained node (not the clamped node 0)"))
    }

    /// Scalar spring force on its DOF for displacement `u` there.
    #[inline]
    pub fn force(&self, u: f64) -> f64 {
        // `+ 0.0` turns the −0 of a slack spring into +0.
        -self.stiffness * negative_part(u) + 0.0
    }
}

/// Spring force as a reduced-system vector: zero everywhere except the
/// spring DOF.
pub fn contact_force(spring: &UnilateralSpring, model: &FEModel, q: &DVector<f64>) -> Result<DVector<f64>> {
    let dof = spring.dof(model)?;
    if q.len() != model.n_free() {
        return Err(Error::invalid(format!(
            "state has {} entries, model has {} free DOFs",
            q.len(),
            model.n_free()
        )));
    }
    let mut f = DVector::zeros(q.len());
    f[dof] = spring.force(q[dof]);
    Ok(f)
}

/// Time and reduced displacement/velocity vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub q: DVector<f64>,
    pub v: DVector<f64>,
}

impl SystemState {
    pub fn at_rest(n_free: usize) -> Self {
        Self {
            t: 0.0,
            q: DVector::zeros(n_free),
            v: DVector::zeros(n_free),
        }
    }
}

/// Beam, spring and excitation bound together with the reduced matrices and
/// a cached mass factorisation. Immutable once built, so one instance can be
/// shared across threads.
#[derive(Debug, Clone)]
pub struct BeamSystem {
    pub(crate) mass: DMatrix<f64>,
    pub(crate) stiffness: DMatrix<f64>,
    mass_chol: Cholesky<f64, Dyn>,
    pub(crate) spring: UnilateralSpring,
    pub(crate) spring_dof: usize,
    pub(crate) forcing: ForcingSignal,
    pub(crate) force_dof: usize,
    /// Mass-proportional damping coefficient (1/s); zero reproduces the
    /// undamped equations.
    pub(crate) damping: f64,
    tip_dofs: (usize, usize),
}

impl BeamSystem {
    pub fn new(model: &FEModel, spring: UnilateralSpring, forcing: ForcingSignal, force_node: usize) -> Result<Self> {
        let spring_dof = spring.dof(model)?;
        let force_dof = model
            .free_translation(force_node)?
            .ok_or_else(|| Error::invalid("force node must be an unconstrained node"))?;
        let mass = model.reduced_mass();
        let stiffness = model.reduced_stiffness();
        let mass_chol = mass
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("reduced mass matrix is not positive definite".into()))?;
        let tip = model.tip_node();
        let tip_dofs = (
            model.free_translation(tip)?.expect("tip is free"),
            model.free_rotation(tip)?.expect("tip is free"),
        );
        Ok(Self {
            mass,
            stiffness,
            mass_chol,
            spring,
            spring_dof,
            forcing,
            force_dof,
            damping: 0.0,
            tip_dofs,
        })
    }

    pub fn with_damping(mut self, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::invalid(format!("damping must be >= 0, got {alpha}")));
        }
        self.damping = alpha;
        Ok(self)
    }

    pub fn n_free(&self) -> usize {
        self.mass.nrows()
    }

    pub fn spring(&self) -> &UnilateralSpring {
        &self.spring
    }

    pub fn spring_dof(&self) -> usize {
        self.spring_dof
    }

    pub fn force_dof(&self) -> usize {
        self.force_dof
    }

    pub fn forcing(&self) -> &ForcingSignal {
        &self.forcing
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    /// Reduced indices of the tip translation and rotation.
    pub fn tip_dofs(&self) -> (usize, usize) {
        self.tip_dofs
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    /// Stiffness of the active linear piece: `K` when the spring is
    /// detached, `K + k_r e eᵀ` when it is compressed.
    pub fn piece_stiffness(&self, engaged: bool) -> DMatrix<f64> {
        let mut k = self.stiffness.clone();
        if engaged {
            k[(self.spring_dof, self.spring_dof)] += self.spring.stiffness;
        }
        k
    }

    /// Net applied load `−K q + f_contact + F(t) e_f`.
    pub fn load(&self, t: f64, q: &DVector<f64>) -> DVector<f64> {
        let mut f = -(&self.stiffness * q);
        f[self.spring_dof] += self.spring.force(q[self.spring_dof]);
        f[self.force_dof] += self.forcing.value_at(t);
        f
    }

    pub fn acceleration(&self, t: f64, q: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut a = self.mass_chol.solve(&self.load(t, q));
        if self.damping != 0.0 {
            a.axpy(-self.damping, v, 1.0);
        }
        a
    }

    /// First-order right-hand side `(q̇, v̇)`.
    pub fn rhs(&self, state: &SystemState) -> Result<(DVector<f64>, DVector<f64>)> {
        let n = self.n_free();
        if state.q.len() != n || state.v.len() != n {
            return Err(Error::invalid(format!(
                "state dimension ({}, {}) does not match {n} free DOFs",
                state.q.len(),
                state.v.len()
            )));
        }
        Ok((state.v.clone(), self.acceleration(state.t, &state.q, &state.v)))
    }

    /// Kinetic plus elastic energy of the beam (spring energy excluded).
    pub fn beam_energy(&self, q: &DVector<f64>, v: &DVector<f64>) -> f64 {
        0.5 * v.dot(&(&self.mass * v)) + 0.5 * q.dot(&(&self.stiffness * q))
    }

    /// Beam energy plus the energy stored in the compressed spring.
    pub fn total_energy(&self, q: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let pen = negative_part(q[self.spring_dof]);
        self.beam_energy(q, v) + 0.5 * self.spring.stiffness * pen * pen
    }
}
