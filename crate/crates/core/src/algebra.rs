//! Exact 2×2 complex operator algebra on spin-1/2 space.
//!
//! Every observable, propagator and autocorrelation operator in the crate is a
//! [`SpinOperator`]. States are either pure spinors or density matrices; pure
//! states are promoted to density matrices whenever a mixed-state operation
//! needs them.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on matrix entries for Hermiticity, unitarity and state
/// normalization checks. Scaled up for operators with entries larger than one.
pub const TOLERANCE: f64 = 1e-12;

/// Cartesian 3-vector (fields, momenta, Bloch vectors).
pub type Vec3 = [f64; 3];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// A 2×2 complex matrix acting on spin space, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinOperator {
    m: [[Complex64; 2]; 2],
}

impl SpinOperator {
    pub const fn new(m: [[Complex64; 2]; 2]) -> Self {
        Self { m }
    }

    pub const fn identity() -> Self {
        Self::new([[ONE, ZERO], [ZERO, ONE]])
    }

    pub const fn zero() -> Self {
        Self::new([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub fn diagonal(a: Complex64, d: Complex64) -> Self {
        Self::new([[a, ZERO], [ZERO, d]])
    }

    /// `v · σ` for a real 3-vector.
    pub fn sigma_dot(v: Vec3) -> Self {
        let [x, y, z] = v;
        Self::new([
            [Complex64::new(z, 0.0), Complex64::new(x, -y)],
            [Complex64::new(x, y), Complex64::new(-z, 0.0)],
        ])
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::new([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn determinant(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.scale_complex(Complex64::new(factor, 0.0))
    }

    pub fn scale_complex(&self, factor: Complex64) -> Self {
        self.map(|z| z * factor)
    }

    fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let m = &self.m;
        Self::new([[f(m[0][0]), f(m[0][1])], [f(m[1][0]), f(m[1][1])]])
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let (a, b) = (&self.m, &other.m);
        Self::new([
            [f(a[0][0], b[0][0]), f(a[0][1], b[0][1])],
            [f(a[1][0], b[1][0]), f(a[1][1], b[1][1])],
        ])
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }

    /// Coefficient `c` of the identity in the Pauli decomposition `c·1 + v·σ`.
    pub fn identity_component(&self) -> Complex64 {
        self.trace() * 0.5
    }

    /// Coefficients of σx, σy, σz in the Pauli decomposition.
    pub fn pauli_components(&self) -> [Complex64; 3] {
        Axis::ALL.map(|axis| (pauli(axis) * *self).trace() * 0.5)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn unitarity_deviation(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Self::identity())
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= scaled_tolerance(self.max_abs())
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_deviation() <= TOLERANCE
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        if deviation <= scaled_tolerance(self.max_abs()) {
            Ok(())
        } else {
            Err(Error::NotHermitian { deviation })
        }
    }

    pub fn ensure_unitary(&self) -> Result<()> {
        let deviation = self.unitarity_deviation();
        if deviation <= TOLERANCE {
            Ok(())
        } else {
            Err(Error::NotUnitary { deviation })
        }
    }

    /// Eigenvalues of a Hermitian operator, largest first.
    ///
    /// Closed form `(a+d)/2 ± sqrt(((a-d)/2)² + |b|²)`; exact for the Pauli
    /// matrices.
    pub fn hermitian_eigenvalues(&self) -> Result<[f64; 2]> {
        self.ensure_hermitian()?;
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = self.m[0][1];
        let mean = 0.5 * (a + d);
        let half_gap = 0.5 * (a - d);
        let radius = (half_gap * half_gap + b.norm_sqr()).sqrt();
        Ok([mean + radius, mean - radius])
    }
}

fn scaled_tolerance(magnitude: f64) -> f64 {
    TOLERANCE * magnitude.max(1.0)
}

impl Default for SpinOperator {
    fn default() -> Self {
        Self::zero()
    }
}

impl Add for SpinOperator {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.zip(&rhs, |a, b| a + b)
    }
}

impl Sub for SpinOperator {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.zip(&rhs, |a, b| a - b)
    }
}

impl Neg for SpinOperator {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|z| -z)
    }
}

impl Mul for SpinOperator {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.m, &rhs.m);
        Self::new([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Mul<f64> for SpinOperator {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

impl Mul<Complex64> for SpinOperator {
    type Output = Self;
    fn mul(self, rhs: Complex64) -> Self {
        self.scale_complex(rhs)
    }
}

impl fmt::Display for SpinOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.m;
        write!(f, "[[{}, {}], [{}, {}]]", m[0][0], m[0][1], m[1][0], m[1][1])
    }
}

/// Standard Pauli matrix with σz diagonal.
pub fn pauli(axis: Axis) -> SpinOperator {
    match axis {
        Axis::X => SpinOperator::new([[ZERO, ONE], [ONE, ZERO]]),
        Axis::Y => SpinOperator::new([[ZERO, -I], [I, ZERO]]),
        Axis::Z => SpinOperator::new([[ONE, ZERO], [ZERO, -ONE]]),
    }
}

/// `ab − ba`.
pub fn commutator(a: &SpinOperator, b: &SpinOperator) -> SpinOperator {
    *a * *b - *b * *a
}

/// `ab + ba`.
pub fn anticommutator(a: &SpinOperator, b: &SpinOperator) -> SpinOperator {
    *a * *b + *b * *a
}

/// Spin state: a normalized spinor or a density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpinState {
    Pure([Complex64; 2]),
    Mixed(SpinOperator),
}

impl SpinState {
    /// Pure state from amplitudes that must already be normalized.
    pub fn pure(up: Complex64, down: Complex64) -> Result<Self> {
        let state = SpinState::Pure([up, down]);
        state.validate()?;
        Ok(state)
    }

    /// Pure state from arbitrary non-zero amplitudes, normalized here.
    pub fn pure_normalized(up: Complex64, down: Complex64) -> Result<Self> {
        let norm = (up.norm_sqr() + down.norm_sqr()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidState(
                "spinor amplitudes must be finite and not both zero".into(),
            ));
        }
        Ok(SpinState::Pure([up / norm, down / norm]))
    }

    /// Eigenstate of σ along `axis` with eigenvalue +1 (`positive`) or −1.
    pub fn eigenstate(axis: Axis, positive: bool) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let amps = match (axis, positive) {
            (Axis::Z, true) => [ONE, ZERO],
            (Axis::Z, false) => [ZERO, ONE],
            (Axis::X, true) => [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            (Axis::X, false) => [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
            (Axis::Y, true) => [Complex64::new(h, 0.0), Complex64::new(0.0, h)],
            (Axis::Y, false) => [Complex64::new(h, 0.0), Complex64::new(0.0, -h)],
        };
        SpinState::Pure(amps)
    }

    /// The σz = +1 state.
    pub fn up_z() -> Self {
        Self::eigenstate(Axis::Z, true)
    }

    /// Maximally mixed state ρ = 1/2.
    pub fn unpolarized() -> Self {
        SpinState::Mixed(SpinOperator::identity().scale(0.5))
    }

    /// ρ = (1 + r·σ)/2 for a Bloch vector with |r| ≤ 1.
    pub fn from_bloch(r: Vec3) -> Result<Self> {
        if r.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidState("Bloch vector must be finite".into()));
        }
        let len = norm3(r);
        if len > 1.0 + TOLERANCE {
            return Err(Error::InvalidState(format!(
                "Bloch vector length {len} exceeds 1"
            )));
        }
        Ok(SpinState::Mixed(
            (SpinOperator::identity() + SpinOperator::sigma_dot(r)).scale(0.5),
        ))
    }

    /// Density matrix, validated as Hermitian, unit-trace and positive semidefinite.
    pub fn mixed(rho: SpinOperator) -> Result<Self> {
        let state = SpinState::Mixed(rho);
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpinState::Pure(a) => {
                let norm = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
                if (norm - 1.0).abs() > TOLERANCE || !norm.is_finite() {
                    return Err(Error::InvalidState(format!("spinor norm {norm} is not 1")));
                }
                Ok(())
            }
            SpinState::Mixed(rho) => {
                rho.ensure_hermitian()
                    .map_err(|e| Error::InvalidState(format!("density matrix: {e}")))?;
                let trace = rho.trace();
                if (trace - ONE).norm() > TOLERANCE {
                    return Err(Error::InvalidState(format!(
                        "density matrix trace {trace} is not 1"
                    )));
                }
                let [_, smallest] = rho.hermitian_eigenvalues()?;
                if smallest < -TOLERANCE {
                    return Err(Error::InvalidState(format!(
                        "density matrix has negative eigenvalue {smallest}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn density_matrix(&self) -> SpinOperator {
        match *self {
            SpinState::Pure([a, b]) => {
                SpinOperator::new([[a * a.conj(), a * b.conj()], [b * a.conj(), b * b.conj()]])
            }
            SpinState::Mixed(rho) => rho,
        }
    }

    /// Polarization vector `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)`.
    pub fn bloch_vector(&self) -> Vec3 {
        let rho = self.density_matrix();
        Axis::ALL.map(|axis| (rho * pauli(axis)).trace().re)
    }

    pub fn purity(&self) -> f64 {
        let rho = self.density_matrix();
        (rho * rho).trace().re
    }

    /// Apply a unitary: `|ψ⟩ → U|ψ⟩` or `ρ → UρU†`.
    pub fn evolve(&self, u: &SpinOperator) -> Self {
        match *self {
            SpinState::Pure([a, b]) => SpinState::Pure([
                u.get(0, 0) * a + u.get(0, 1) * b,
                u.get(1, 0) * a + u.get(1, 1) * b,
            ]),
            SpinState::Mixed(rho) => SpinState::Mixed(*u * rho * u.adjoint()),
        }
    }

    /// `Some(±1)` when the state is a σz eigenstate within `tol`.
    pub fn sigma_z_eigenvalue(&self, tol: f64) -> Option<f64> {
        let sz = self.bloch_vector()[2];
        if (sz - 1.0).abs() <= tol {
            Some(1.0)
        } else if (sz + 1.0).abs() <= tol {
            Some(-1.0)
        } else {
            None
        }
    }
}

/// `tr(ρ·op)` for a Hermitian observable.
pub fn expectation(state: &SpinState, op: &SpinOperator) -> Result<f64> {
    op.ensure_hermitian()?;
    let value = match *state {
        SpinState::Pure([a, b]) => {
            let ta = op.get(0, 0) * a + op.get(0, 1) * b;
            let tb = op.get(1, 0) * a + op.get(1, 1) * b;
            a.conj() * ta + b.conj() * tb
        }
        SpinState::Mixed(rho) => (rho * *op).trace(),
    };
    Ok(value.re)
}

/// First and second moments of the transverse spin components.
///
/// The condition σx = σy = 0 cannot hold in any state: σx² = σy² = 1 as
/// operators, so the second moments are pinned at one even when the means
/// vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransverseSpinReport {
    pub mean_sx: f64,
    pub mean_sy: f64,
    pub mean_sx2: f64,
    pub mean_sy2: f64,
    /// True when no transverse second moment vanishes, i.e. σx = σy = 0 is
    /// not realized by this state.
    pub unsatisfiable: bool,
}

pub fn transverse_spin_report(state: &SpinState) -> TransverseSpinReport {
    let sx = pauli(Axis::X);
    let sy = pauli(Axis::Y);
    let ev = |op: &SpinOperator| expectation(state, op).expect("Pauli products are Hermitian");
    let mean_sx2 = ev(&(sx * sx));
    let mean_sy2 = ev(&(sy * sy));
    TransverseSpinReport {
        mean_sx: ev(&sx),
        mean_sy: ev(&sy),
        mean_sx2,
        mean_sy2,
        unsatisfiable: mean_sx2 > TOLERANCE || mean_sy2 > TOLERANCE,
    }
}

pub fn norm3(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn cross3(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
