//! Spin propagators for `H = −μ σ·B(t)` and Heisenberg-picture evolution.
//!
//! Fields are piecewise: each segment holds a fixed magnitude and either a
//! fixed direction or a direction rotating uniformly about an axis. The closed
//! form uses `exp(iθ σ·n̂) = cos θ + i sin θ σ·n̂` per segment (with a
//! rotating-frame factorization for rotating segments). The independent oracle
//! slices time and multiplies generic matrix exponentials evaluated at slice
//! midpoints.
//!
//! The kinetic term `p²/2m` contributes a phase common to both arms of an
//! interferometer and is not represented here.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{cross3, dot3, norm3, pauli, Axis, SpinOperator, Vec3, TOLERANCE};
use crate::error::{check_duration, check_finite, Error, Result};

/// Particle constants in a user-chosen unit system (natural units by default).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Particle {
    /// μ; negative for the neutron.
    pub magnetic_moment: f64,
    pub mass: f64,
    pub hbar: f64,
    /// Speed of light.
    pub c: f64,
    /// Charge `e` entering the electric and magnetic AB phases.
    pub charge: f64,
}

impl Default for Particle {
    fn default() -> Self {
        Self {
            magnetic_moment: 1.0,
            mass: 1.0,
            hbar: 1.0,
            c: 1.0,
            charge: 1.0,
        }
    }
}

impl Particle {
    pub fn with_moment(magnetic_moment: f64) -> Self {
        Self {
            magnetic_moment,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_finite("particle.magnetic_moment", self.magnetic_moment)?;
        check_finite("particle.charge", self.charge)?;
        for (name, value) in [
            ("particle.mass", self.mass),
            ("particle.hbar", self.hbar),
            ("particle.c", self.c),
        ] {
            check_finite(name, value)?;
            if value <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {value}"),
                });
            }
        }
        Ok(())
    }

    /// The scalar phase `μBτ/ħ` picked up by the σz = +1 amplitude.
    pub fn moment_phase(&self, field: f64, duration: f64) -> f64 {
        self.magnetic_moment * field * duration / self.hbar
    }
}

/// Uniform rotation of the field direction about `axis` at angular `rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rotation {
    pub axis: Vec3,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSegment {
    pub duration: f64,
    pub magnitude: f64,
    /// Field direction at the start of the segment.
    pub direction: Vec3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Rotation>,
}

impl FieldSegment {
    pub fn constant(magnitude: f64, direction: Vec3, duration: f64) -> Self {
        Self {
            duration,
            magnitude,
            direction,
            rotation: None,
        }
    }

    pub fn along_z(magnitude: f64, duration: f64) -> Self {
        Self::constant(magnitude, [0.0, 0.0, 1.0], duration)
    }

    pub fn rotating(magnitude: f64, direction: Vec3, duration: f64, rotation: Rotation) -> Self {
        Self {
            duration,
            magnitude,
            direction,
            rotation: Some(rotation),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_duration("segment.duration", self.duration)?;
        check_finite("segment.magnitude", self.magnitude)?;
        check_unit(self.direction)?;
        if let Some(rot) = self.rotation {
            check_unit(rot.axis)?;
            check_finite("rotation.rate", rot.rate)?;
        }
        Ok(())
    }

    /// Unit field direction at time `s` into the segment.
    pub fn direction_at(&self, s: f64) -> Vec3 {
        match self.rotation {
            None => self.direction,
            Some(rot) => rotate(self.direction, rot.axis, rot.rate * s),
        }
    }

    pub fn field_at(&self, s: f64) -> Vec3 {
        self.direction_at(s).map(|c| c * self.magnitude)
    }

    /// True when the field stays along ±z for the whole segment.
    pub fn is_along_z(&self) -> bool {
        let d = self.direction;
        let static_z = d[0].abs() <= TOLERANCE && d[1].abs() <= TOLERANCE;
        if self.magnitude == 0.0 || self.duration == 0.0 {
            return true;
        }
        match self.rotation {
            None => static_z,
            Some(rot) => {
                let axis_z = rot.axis[0].abs() <= TOLERANCE && rot.axis[1].abs() <= TOLERANCE;
                static_z && (rot.rate == 0.0 || axis_z)
            }
        }
    }
}

fn check_unit(v: Vec3) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) && (norm3(v) - 1.0).abs() <= TOLERANCE {
        Ok(())
    } else {
        Err(Error::NonUnitDirection { direction: v })
    }
}

/// Rodrigues rotation of `v` by `angle` about unit `axis`.
pub fn rotate(v: Vec3, axis: Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    let k = cross3(axis, v);
    let along = dot3(axis, v) * (1.0 - c);
    [
        v[0] * c + k[0] * s + axis[0] * along,
        v[1] * c + k[1] * s + axis[1] * along,
        v[2] * c + k[2] * s + axis[2] * along,
    ]
}

/// Time-ordered sequence of field segments.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldProfile {
    pub segments: Vec<FieldSegment>,
}

impl FieldProfile {
    pub fn new(segments: Vec<FieldSegment>) -> Result<Self> {
        let profile = Self { segments };
        profile.validate()?;
        Ok(profile)
    }

    /// A single constant segment: the ideal pulse.
    pub fn pulse(magnitude: f64, direction: Vec3, duration: f64) -> Result<Self> {
        Self::new(vec![FieldSegment::constant(magnitude, direction, duration)])
    }

    pub fn validate(&self) -> Result<()> {
        self.segments.iter().try_for_each(FieldSegment::validate)
    }

    /// This profile followed by `later`.
    pub fn then(&self, later: &FieldProfile) -> FieldProfile {
        let mut segments = self.segments.clone();
        segments.extend_from_slice(&later.segments);
        FieldProfile { segments }
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }
}

/// `exp(i w·σ) = cos|w| + i sin|w| (w/|w|)·σ`.
pub fn exp_i_sigma(w: Vec3) -> SpinOperator {
    let theta = norm3(w);
    if theta == 0.0 {
        return SpinOperator::identity();
    }
    let axis = w.map(|c| c / theta);
    let (s, c) = theta.sin_cos();
    SpinOperator::identity().scale(c) + SpinOperator::sigma_dot(axis) * Complex64::new(0.0, s)
}

/// Closed-form propagator of one segment.
pub fn segment_propagator(particle: &Particle, segment: &FieldSegment) -> SpinOperator {
    let rate = particle.magnetic_moment * segment.magnitude / particle.hbar;
    let tau = segment.duration;
    match segment.rotation {
        None => exp_i_sigma(segment.direction.map(|c| c * rate * tau)),
        Some(rot) => {
            // Rotating frame: U(τ) = exp(−iΩτ σ·a/2) exp(iτ σ·g), g = (μB/ħ) n̂₀ + (Ω/2) â.
            let frame = exp_i_sigma(rot.axis.map(|c| -0.5 * rot.rate * tau * c));
            let g: Vec3 = std::array::from_fn(|k| rate * segment.direction[k] + 0.5 * rot.rate * rot.axis[k]);
            frame * exp_i_sigma(g.map(|c| c * tau))
        }
    }
}

/// Time-ordered unitary for the whole profile; later segments act on the left.
pub fn propagator(particle: &Particle, profile: &FieldProfile) -> Result<SpinOperator> {
    particle.validate()?;
    profile.validate()?;
    Ok(profile
        .segments
        .iter()
        .fold(SpinOperator::identity(), |acc, seg| {
            segment_propagator(particle, seg) * acc
        }))
}

/// Propagator for a constant field vector over a signed time `t`.
pub fn constant_field_propagator(particle: &Particle, field: Vec3, t: f64) -> SpinOperator {
    let scale = particle.magnetic_moment * t / particle.hbar;
    exp_i_sigma(field.map(|c| c * scale))
}

/// Generic 2×2 matrix exponential by scaling and squaring of a Taylor series.
///
/// Knows nothing about Pauli structure; serves the oracle.
pub fn expm(a: &SpinOperator) -> SpinOperator {
    let norm = a.max_abs() * 2.0;
    let mut squarings = 0u32;
    let mut scaled = *a;
    if norm > 0.25 {
        squarings = (norm / 0.25).log2().ceil() as u32;
        scaled = a.scale(0.5f64.powi(squarings as i32));
    }
    let mut term = SpinOperator::identity();
    let mut sum = SpinOperator::identity();
    for k in 1..=18 {
        term = (term * scaled).scale(1.0 / k as f64);
        sum = sum + term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// Independent check of [`propagator`]: each segment is cut into
/// `steps_per_segment` uniform slices and the generator is sampled at the
/// slice midpoint. Exact for fixed-direction segments, second order in the
/// slice width for rotating ones.
pub fn oracle_propagator(
    particle: &Particle,
    profile: &FieldProfile,
    steps_per_segment: usize,
) -> Result<SpinOperator> {
    if steps_per_segment == 0 {
        return Err(Error::InvalidParameter {
            name: "steps_per_segment",
            reason: "must be at least 1".into(),
        });
    }
    particle.validate()?;
    profile.validate()?;
    let coupling = particle.magnetic_moment / particle.hbar;
    let mut u = SpinOperator::identity();
    for seg in &profile.segments {
        let h = seg.duration / steps_per_segment as f64;
        for j in 0..steps_per_segment {
            let mid = (j as f64 + 0.5) * h;
            let generator = SpinOperator::sigma_dot(seg.field_at(mid)) * Complex64::new(0.0, coupling * h);
            u = expm(&generator) * u;
        }
    }
    Ok(u)
}

/// `U† op U`: the operator at time t given the propagator from 0 to t.
pub fn heisenberg_evolve(op: &SpinOperator, u: &SpinOperator) -> Result<SpinOperator> {
    u.ensure_unitary()?;
    Ok(u.adjoint() * *op * *u)
}

/// Larmor frequency ω = 2μB/ħ.
pub fn precession_frequency(particle: &Particle, field: f64) -> f64 {
    2.0 * particle.magnetic_moment * field / particle.hbar
}

/// Heisenberg-picture spin vector `σ(t)` for a constant field.
pub fn evolved_spin(particle: &Particle, field: Vec3, t: f64) -> [SpinOperator; 3] {
    let u = constant_field_propagator(particle, field, t);
    Axis::ALL.map(|axis| u.adjoint() * pauli(axis) * u)
}

/// Residual of the precession equation `(ħ/2) dσ/dt = μ σ × B` at time `t`,
/// using a central difference with step `dt`. Returns the largest entry
/// modulus of each component's residual.
pub fn precession_residual(particle: &Particle, field: Vec3, t: f64, dt: f64) -> Result<Vec3> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be positive, got {dt}"),
        });
    }
    let ahead = evolved_spin(particle, field, t + dt);
    let behind = evolved_spin(particle, field, t - dt);
    let now = evolved_spin(particle, field, t);
    let torque = operator_cross(&now, field);
    Ok(std::array::from_fn(|k| {
        let derivative = (ahead[k] - behind[k]).scale(1.0 / (2.0 * dt));
        let residual = derivative.scale(0.5 * particle.hbar) - torque[k].scale(particle.magnetic_moment);
        residual.max_abs()
    }))
}

/// `σ × B` for an operator-valued vector and a c-number field.
pub fn operator_cross(sigma: &[SpinOperator; 3], b: Vec3) -> [SpinOperator; 3] {
    [
        sigma[1].scale(b[2]) - sigma[2].scale(b[1]),
        sigma[2].scale(b[0]) - sigma[0].scale(b[2]),
        sigma[0].scale(b[1]) - sigma[1].scale(b[0]),
    ]
}
