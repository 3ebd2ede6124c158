//! Hermite-cubic Euler–Bernoulli beam model.
//!
//! Each node carries a transverse displacement and a slope, ordered
//! `(u0, u0', u1, u1', ...)`. Node 0 is clamped; its two DOFs are removed by
//! row/column elimination when the reduced (free) system is requested.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen};

use crate::{Error, Result};

pub const DOF_PER_NODE: usize = 2;

/// Number of clamped DOFs (translation and rotation of node 0).
pub const CLAMPED_DOFS: usize = 2;

/// Geometry and material of a uniform rectangular beam, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamProperties {
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
    pub young_modulus: f64,
    pub density: f64,
}

impl Default for BeamProperties {
    /// Aluminium test beam: 350 × 38.5 × 3 mm, E = 69 GPa, ρ = 2700 kg/m³.
    fn default() -> Self {
        Self {
            length: 0.35,
            width: 0.0385,
            thickness: 0.003,
            young_modulus: 69e9,
            density: 2700.0,
        }
    }
}

impl BeamProperties {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("length", self.length),
            ("width", self.width),
            ("thickness", self.thickness),
            ("young_modulus", self.young_modulus),
            ("density", self.density),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(format!(
                    "beam {name} must be finite and > 0, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Cross-section area `b·h`.
    pub fn area(&self) -> f64 {
        self.width * self.thickness
    }

    /// Second moment of area `b·h³/12`.
    pub fn second_moment(&self) -> f64 {
        self.width * self.thickness.powi(3) / 12.0
    }

    pub fn bending_stiffness(&self) -> f64 {
        self.young_modulus * self.second_moment()
    }

    pub fn mass_per_length(&self) -> f64 {
        self.density * self.area()
    }
}

/// Element stiffness and consistent mass matrices of a Hermite-cubic beam
/// element, DOF order `(u1, θ1, u2, θ2)`.
///
/// A zero `mass_per_length` is accepted and yields a zero mass matrix.
pub fn element_matrices(bending_stiffness: f64, mass_per_length: f64, le: f64) -> Result<(Matrix4<f64>, Matrix4<f64>)> {
    if !(bending_stiffness.is_finite() && bending_stiffness > 0.0) {
        return Err(Error::invalid(format!(
            "bending stiffness must be > 0, got {bending_stiffness}"
        )));
    }
    if !(mass_per_length.is_finite() && mass_per_length >= 0.0) {
        return Err(Error::invalid(format!(
            "mass per length must be >= 0, got {mass_per_length}"
        )));
    }
    if !(le.is_finite() && le > 0.0) {
        return Err(Error::invalid(format!("element length must be > 0, got {le}")));
    }

    let l = le;
    let l2 = l * l;
    let k = bending_stiffness / (l2 * l);
    #[rustfmt::skip]
    let ke = Matrix4::new(
         12.0,    6.0 * l,  -12.0,    6.0 * l,
          6.0 * l, 4.0 * l2, -6.0 * l, 2.0 * l2,
        -12.0,   -6.0 * l,   12.0,   -6.0 * l,
          6.0 * l, 2.0 * l2, -6.0 * l, 4.0 * l2,
    ) * k;

    let m = mass_per_length * l / 420.0;
    #[rustfmt::skip]
    let me = Matrix4::new(
        156.0,      22.0 * l,   54.0,     -13.0 * l,
         22.0 * l,   4.0 * l2,  13.0 * l,  -3.0 * l2,
         54.0,      13.0 * l,  156.0,     -22.0 * l,
        -13.0 * l,  -3.0 * l2, -22.0 * l,   4.0 * l2,
    ) * m;

    Ok((ke, me))
}

/// Assembled beam model. Matrices are stored at full size, including the
/// clamped DOFs; [`FEModel::reduced_mass`] and [`FEModel::reduced_stiffness`]
/// give the constrained view.
#[derive(Debug, Clone)]
pub struct FEModel {
    pub props: BeamProperties,
    pub n_elements: usize,
    mass: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    point_masses: Vec<(usize, f64)>,
}

/// Assemble `n_elements` uniform elements over the beam length.
pub fn assemble(props: BeamProperties, n_elements: usize) -> Result<FEModel> {
    props.validate()?;
    if n_elements == 0 {
        return Err(Error::invalid("n_elements must be >= 1"));
    }
    let le = props.length / n_elements as f64;
    let (ke, me) = element_matrices(props.bending_stiffness(), props.mass_per_length(), le)?;

    let n_dof = (n_elements + 1) * DOF_PER_NODE;
    let mut mass = DMatrix::zeros(n_dof, n_dof);
    let mut stiffness = DMatrix::zeros(n_dof, n_dof);
    for e in 0..n_elements {
        let base = e * DOF_PER_NODE;
        for i in 0..4 {
            for j in 0..4 {
                stiffness[(base + i, base + j)] += ke[(i, j)];
                mass[(base + i, base + j)] += me[(i, j)];
            }
        }
    }

    Ok(FEModel {
        props,
        n_elements,
        mass,
        stiffness,
        point_masses: Vec::new(),
    })
}

impl FEModel {
    pub fn n_nodes(&self) -> usize {
        self.n_elements + 1
    }

    pub fn n_dof(&self) -> usize {
        self.n_nodes() * DOF_PER_NODE
    }

    pub fn n_free(&self) -> usize {
        self.n_dof() - CLAMPED_DOFS
    }

    pub fn tip_node(&self) -> usize {
        self.n_elements
    }

    pub fn node_position(&self, node: usize) -> f64 {
        self.props.length * node as f64 / self.n_elements as f64
    }

    /// Full-size `(translation, rotation)` DOF indices of `node`.
    pub fn dof_map(&self, node: usize) -> Result<(usize, usize)> {
        self.check_node(node)?;
        Ok((DOF_PER_NODE * node, DOF_PER_NODE * node + 1))
    }

    pub fn constrained_dofs(&self) -> [usize; CLAMPED_DOFS] {
        [0, 1]
    }

    /// Index of `node`'s translation DOF in the reduced system; `None` for
    /// the clamped node.
    pub fn free_translation(&self, node: usize) -> Result<Option<usize>> {
        self.check_node(node)?;
        Ok(node.checked_sub(1).map(|n| n * DOF_PER_NODE))
    }

    pub fn free_rotation(&self, node: usize) -> Result<Option<usize>> {
        Ok(self.free_translation(node)?.map(|i| i + 1))
    }

    pub fn point_masses(&self) -> &[(usize, f64)] {
        &self.point_masses
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn reduced_mass(&self) -> DMatrix<f64> {
        self.reduce(&self.mass)
    }

    pub fn reduced_stiffness(&self) -> DMatrix<f64> {
        self.reduce(&self.stiffness)
    }

    fn reduce(&self, full: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n_free();
        full.view((CLAMPED_DOFS, CLAMPED_DOFS), (n, n)).into_owned()
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.n_nodes() {
            return Err(Error::Index {
                what: "node",
                index: node,
                limit: self.n_nodes(),
            });
        }
        Ok(())
    }

    /// Lump a concentrated mass onto the translation DOF of `node`.
    pub fn add_point_mass(mut self, node: usize, m: f64) -> Result<FEModel> {
        let (t, _) = self.dof_map(node)?;
        if !(m.is_finite() && m >= 0.0) {
            return Err(Error::invalid(format!("point mass must be >= 0, got {m}")));
        }
        if m > 0.0 {
            self.mass[(t, t)] += m;
            self.point_masses.push((node, m));
        }
        Ok(self)
    }

    /// Total translational mass: beam plus point masses.
    pub fn total_mass(&self) -> f64 {
        let n = self.n_nodes();
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                sum += self.mass[(DOF_PER_NODE * i, DOF_PER_NODE * j)];
            }
        }
        sum
    }

    /// Lowest `count` eigenfrequencies in Hz of the clamped model.
    pub fn eigenfrequencies(&self, count: usize) -> Result<Vec<f64>> {
        Ok(self.modes(count)?.frequencies)
    }

    /// Lowest `count` modes of the clamped model, mass-normalised.
    pub fn modes(&self, count: usize) -> Result<Modes> {
        modes_of(&self.reduced_mass(), &self.reduced_stiffness(), count)
    }
}

/// Eigenpairs of a reduced symmetric pair, ascending.
#[derive(Debug, Clone)]
pub struct Modes {
    /// Circular frequencies squared (rad²/s²).
    pub eigenvalues: Vec<f64>,
    pub frequencies: Vec<f64>,
    /// Mode shapes on the reduced DOFs with `φᵀ M φ = 1`.
    pub shapes: Vec<DVector<f64>>,
}

/// Solve `K φ = ω² M φ` for the `count` smallest eigenvalues via Cholesky of
/// `M` followed by a standard symmetric eigensolve.
pub fn modes_of(mass: &DMatrix<f64>, stiffness: &DMatrix<f64>, count: usize) -> Result<Modes> {
    let n = mass.nrows();
    if mass.shape() != stiffness.shape() || mass.ncols() != n {
        return Err(Error::invalid("mass and stiffness must be square and equal in size"));
    }
    if count > n {
        return Err(Error::invalid(format!(
            "requested {count} modes but the reduced system has {n} DOFs"
        )));
    }
    let chol = mass.clone().cholesky().ok_or_else(|| {
        Error::Numerical(format!(
            "reduced mass matrix ({n}×{n}) is not positive definite; check density and mesh"
        ))
    })?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular Cholesky factor of mass matrix".into()))?;
    let mut a = &l_inv * stiffness * l_inv.transpose();
    a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let lt_inv = l_inv.transpose();
    let mut eigenvalues = Vec::with_capacity(count);
    let mut frequencies = Vec::with_capacity(count);
    let mut shapes = Vec::with_capacity(count);
    for &i in order.iter().take(count) {
        let lambda = eig.eigenvalues[i];
        if lambda < 0.0 {
            return Err(Error::Numerical(format!(
                "negative eigenvalue {lambda:e}; stiffness matrix is not positive semidefinite"
            )));
        }
        eigenvalues.push(lambda);
        frequencies.push(lambda.sqrt() / (2.0 * PI));
        let mut phi = &lt_inv * eig.eigenvectors.column(i);
        // Fix sign so the largest-magnitude entry is positive.
        let imax = phi.iamax();
        if phi[imax] < 0.0 {
            phi = -phi;
        }
        shapes.push(phi);
    }
    Ok(Modes {
        eigenvalues,
        frequencies,
        shapes,
    })
}

/// Roots of `cos(x)·cosh(x) = −1`, the clamped-free characteristic equation.
pub const CANTILEVER_BETA_L: [f64; 3] = [1.875_104_068_711_961, 4.694_091_132_974_175, 7.854_757_438_237_613];

/// Closed-form clamped-free frequencies `(βL)²/(2πL²)·√(EI/ρS)` for the first
/// three modes.
pub fn cantilever_frequencies(props: &BeamProperties) -> [f64; 3] {
    const BETA_L: [f64; 3] = CANTILEVER_BETA_L;
    let c = (props.bending_stiffness() / props.mass_per_length()).sqrt();
    BETA_L.map(|bl| bl * bl / (2.0 * PI * props.length * props.length) * c)
}
