//! Balanced two-path Mach-Zehnder over path ⊗ spin space.
//!
//! Each arm is an ordered list of [`ArmElement`]s and reduces to a spin
//! unitary times a spin-independent phase, `V = e^{iφ} U`. With 50/50
//! splitting and recombination the output amplitudes are `½(V₁ ± V₂)|χ⟩`, so
//! for a beam density matrix ρ
//!
//! ```text
//! I₁ = ¼ tr[(V₁+V₂) ρ (V₁+V₂)†] = ½ (1 + Re γ),   γ = tr[ρ V₂†V₁]
//! I₂ = ¼ tr[(V₁−V₂) ρ (V₁−V₂)†] = ½ (1 − Re γ)
//! ```
//!
//! `arg γ` is the fringe phase and `|γ|` the visibility. Port 1 is the
//! constructive port for identical arms. For a field pulse along z and a
//! σz = +1 beam the relative phase is `Δ = μBτ/ħ` and `I₁ = cos²(Δ/2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{SpinOperator, SpinState, Vec3, TOLERANCE};
use crate::correlation::Note;
use crate::dynamics::{segment_propagator, FieldSegment, Particle, Rotation};
use crate::error::{check_duration, check_finite, Error, Result};
use crate::gauge::ac_effective_field;

pub const INTENSITY_CONVENTION_NOTE: Note = Note {
    code: "intensity-from-amplitudes",
    message: "intensities are computed from amplitudes as I1 = cos^2(delta/2) for a relative \
              phase delta between the arms; for a z field pulse delta = mu B tau/hbar, so the \
              shorthand I1 = cos^2(dphi) holds only if dphi denotes delta/2",
};

fn z_axis() -> Vec3 {
    [0.0, 0.0, 1.0]
}

/// Piece of an optical phase profile: phase accumulates at `rate` for `duration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseRate {
    pub rate: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArmElement {
    /// Magnetic field acting on the moment; `-μσ·B` for `duration`.
    FieldPulse {
        magnitude: f64,
        #[serde(default = "z_axis")]
        direction: Vec3,
        duration: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation: Option<Rotation>,
    },
    /// Electric field seen in the rest frame as `B = (p/mc) × E`.
    AcField {
        momentum: Vec3,
        electric_field: Vec3,
        duration: f64,
    },
    /// Shielding cylinder held at potential difference `delta_v`; phase `eΔVτ/ħ`.
    ShieldedPotential {
        delta_v: f64,
        duration: f64,
    },
    /// Time-programmed refractive phase shifter; phase `Σ rate·duration`.
    OpticalPhase {
        profile: Vec<PhaseRate>,
    },
    Free {
        duration: f64,
    },
}

impl ArmElement {
    pub fn field_pulse(magnitude: f64, direction: Vec3, duration: f64) -> Self {
        ArmElement::FieldPulse {
            magnitude,
            direction,
            duration,
            rotation: None,
        }
    }

    pub fn free(duration: f64) -> Self {
        ArmElement::Free { duration }
    }

    pub fn duration(&self) -> f64 {
        match self {
            ArmElement::FieldPulse { duration, .. }
            | ArmElement::AcField { duration, .. }
            | ArmElement::ShieldedPotential { duration, .. }
            | ArmElement::Free { duration } => *duration,
            ArmElement::OpticalPhase { profile } => profile.iter().map(|p| p.duration).sum(),
        }
    }

    /// The field segment this element applies to the spin, if any.
    pub fn field_segment(&self, particle: &Particle) -> Option<FieldSegment> {
        match *self {
            ArmElement::FieldPulse {
                magnitude,
                direction,
                duration,
                rotation,
            } => Some(FieldSegment {
                duration,
                magnitude,
                direction,
                rotation,
            }),
            ArmElement::AcField {
                momentum,
                electric_field,
                duration,
            } => {
                let b = ac_effective_field(particle, momentum, electric_field);
                let magnitude = crate::algebra::norm3(b);
                let direction = if magnitude > 0.0 {
                    b.map(|c| c / magnitude)
                } else {
                    z_axis()
                };
                Some(FieldSegment::constant(magnitude, direction, duration))
            }
            _ => None,
        }
    }

    pub fn validate(&self, particle: &Particle) -> Result<()> {
        match self {
            ArmElement::ShieldedPotential { delta_v, duration } => {
                check_finite("shielded_potential.delta_v", *delta_v)?;
                check_duration("shielded_potential.duration", *duration)
            }
            ArmElement::OpticalPhase { profile } => profile.iter().try_for_each(|p| {
                check_finite("optical_phase.rate", p.rate)?;
                check_duration("optical_phase.duration", p.duration)
            }),
            ArmElement::Free { duration } => check_duration("free.duration", *duration),
            ArmElement::AcField {
                momentum,
                electric_field,
                ..
            } => {
                for c in momentum.iter().chain(electric_field) {
                    check_finite("ac_field", *c)?;
                }
                self.field_segment(particle).expect("field element").validate()
            }
            ArmElement::FieldPulse { .. } => self.field_segment(particle).expect("field element").validate(),
        }
    }
}

pub fn arm_duration(arm: &[ArmElement]) -> f64 {
    arm.iter().map(ArmElement::duration).sum()
}

/// An arm reduced to `e^{i scalar_phase} · spin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmUnitary {
    pub spin: SpinOperator,
    pub scalar_phase: f64,
}

impl ArmUnitary {
    pub fn combined(&self) -> SpinOperator {
        self.spin * Complex64::from_polar(1.0, self.scalar_phase)
    }
}

pub fn arm_unitary(arm: &[ArmElement], particle: &Particle) -> Result<ArmUnitary> {
    particle.validate()?;
    let mut spin = SpinOperator::identity();
    let mut scalar_phase = 0.0;
    for element in arm {
        element.validate(particle)?;
        match element {
            ArmElement::FieldPulse { .. } | ArmElement::AcField { .. } => {
                let seg = element.field_segment(particle).expect("field element");
                spin = segment_propagator(particle, &seg) * spin;
            }
            ArmElement::ShieldedPotential { delta_v, duration } => {
                scalar_phase += particle.charge * delta_v * duration / particle.hbar;
            }
            ArmElement::OpticalPhase { profile } => {
                scalar_phase += profile.iter().map(|p| p.rate * p.duration).sum::<f64>();
            }
            ArmElement::Free { .. } => {}
        }
    }
    Ok(ArmUnitary { spin, scalar_phase })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamOutput {
    pub i1: f64,
    pub i2: f64,
    /// Fringe phase `arg tr[ρ V₂†V₁]`; absent when the visibility vanishes.
    pub relative_phase: Option<f64>,
    /// Fringe contrast `max − min` of I₁ over an added phase sweep, `|γ|`.
    pub visibility: f64,
}

/// Recombines two arm operators for a given beam.
pub fn interfere(v1: &SpinOperator, v2: &SpinOperator, beam: &SpinState) -> BeamOutput {
    let rho = beam.density_matrix();
    let port = |sign: f64| {
        let a = *v1 + v2.scale(sign);
        0.25 * (a * rho * a.adjoint()).trace().re
    };
    let gamma = (rho * v2.adjoint() * *v1).trace();
    let visibility = gamma.norm();
    BeamOutput {
        i1: port(1.0),
        i2: port(-1.0),
        relative_phase: (visibility > TOLERANCE).then(|| gamma.arg()),
        visibility,
    }
}

pub fn run_mach_zehnder(
    arm1: &[ArmElement],
    arm2: &[ArmElement],
    beam: &SpinState,
    particle: &Particle,
) -> Result<BeamOutput> {
    beam.validate()?;
    let v1 = arm_unitary(arm1, particle)?.combined();
    let v2 = arm_unitary(arm2, particle)?.combined();
    Ok(interfere(&v1, &v2, beam))
}

/// Port intensities with an extra phase `phi` added to arm 2, for each `phi`.
pub fn fringe_scan(
    arm1: &[ArmElement],
    arm2: &[ArmElement],
    beam: &SpinState,
    particle: &Particle,
    phases: &[f64],
) -> Result<Vec<BeamOutput>> {
    beam.validate()?;
    let v1 = arm_unitary(arm1, particle)?.combined();
    let v2 = arm_unitary(arm2, particle)?.combined();
    Ok(phases
        .iter()
        .map(|&phi| interfere(&v1, &(v2 * Complex64::from_polar(1.0, phi)), beam))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionReport {
    /// σz eigenvalue substituted for the operator.
    pub sigma_z: f64,
    pub full: BeamOutput,
    pub scalar: BeamOutput,
    pub max_deviation: f64,
}

/// Replaces each z field pulse by the pure phase `s·μBτ/ħ` obtained by
/// substituting the beam's σz eigenvalue `s` into `−μσ·B`.
pub fn scalar_arm(arm: &[ArmElement], sigma_z: f64, particle: &Particle) -> Result<Vec<ArmElement>> {
    arm.iter()
        .map(|element| match element.field_segment(particle) {
            None => Ok(element.clone()),
            Some(seg) => {
                if !seg.is_along_z() {
                    return Err(Error::ReductionInvalid(format!(
                        "field direction {:?} is not along z",
                        seg.direction
                    )));
                }
                let signed = seg.magnitude * seg.direction[2].signum();
                Ok(ArmElement::OpticalPhase {
                    profile: vec![PhaseRate {
                        rate: sigma_z * particle.magnetic_moment * signed / particle.hbar,
                        duration: seg.duration,
                    }],
                })
            }
        })
        .collect()
}

/// Runs the arms with the full spin Hamiltonian and with σz replaced by its
/// eigenvalue in the beam, and compares the outputs.
pub fn scalar_reduction_for_arms(
    arm1: &[ArmElement],
    arm2: &[ArmElement],
    beam: &SpinState,
    particle: &Particle,
) -> Result<ReductionReport> {
    beam.validate()?;
    let sigma_z = beam.sigma_z_eigenvalue(TOLERANCE).ok_or_else(|| {
        Error::ReductionInvalid(format!("beam polarization {:?} is not ±z", beam.bloch_vector()))
    })?;
    let full = run_mach_zehnder(arm1, arm2, beam, particle)?;
    let s1 = scalar_arm(arm1, sigma_z, particle)?;
    let s2 = scalar_arm(arm2, sigma_z, particle)?;
    let scalar = run_mach_zehnder(&s1, &s2, beam, particle)?;
    let mut max_deviation = (full.i1 - scalar.i1).abs().max((full.i2 - scalar.i2).abs());
    max_deviation = max_deviation.max((full.visibility - scalar.visibility).abs());
    if let (Some(a), Some(b)) = (full.relative_phase, scalar.relative_phase) {
        max_deviation = max_deviation.max(crate::correlation::wrap_angle(a - b).abs());
    }
    Ok(ReductionReport {
        sigma_z,
        full,
        scalar,
        max_deviation,
    })
}

/// The ideal scalar-AB layout: a z field `field` for `tau` in arm 1, free
/// flight of equal duration in arm 2.
pub fn sab_arms(field: f64, tau: f64) -> (Vec<ArmElement>, Vec<ArmElement>) {
    (
        vec![ArmElement::field_pulse(field, z_axis(), tau)],
        vec![ArmElement::free(tau)],
    )
}

pub fn scalar_reduction_check(
    field: f64,
    tau: f64,
    particle: &Particle,
    beam: &SpinState,
) -> Result<ReductionReport> {
    let (arm1, arm2) = sab_arms(field, tau);
    scalar_reduction_for_arms(&arm1, &arm2, beam, particle)
}

/// Relative phase for each kinetic energy. Each arm also carries the
/// free-flight phase `−E·T/ħ` for its total duration `T`; with the arm
/// timings fixed this cancels whenever the arms last equally long.
pub fn energy_independence_scan(
    arm1: &[ArmElement],
    arm2: &[ArmElement],
    beam: &SpinState,
    particle: &Particle,
    kinetic_energies: &[f64],
) -> Result<Vec<f64>> {
    beam.validate()?;
    let u1 = arm_unitary(arm1, particle)?;
    let u2 = arm_unitary(arm2, particle)?;
    let (t1, t2) = (arm_duration(arm1), arm_duration(arm2));
    kinetic_energies
        .iter()
        .map(|&energy| {
            check_duration("kinetic_energy", energy)?;
            let v1 = u1.spin * Complex64::from_polar(1.0, u1.scalar_phase - energy * t1 / particle.hbar);
            let v2 = u2.spin * Complex64::from_polar(1.0, u2.scalar_phase - energy * t2 / particle.hbar);
            interfere(&v1, &v2, beam)
                .relative_phase
                .ok_or_else(|| Error::Inconsistent("relative phase undefined: zero visibility".into()))
        })
        .collect()
}
