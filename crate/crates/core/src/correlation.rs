//! Spin autocorrelation operators, the correlation angle and the torque.
//!
//! With Heisenberg-evolved spin components,
//!
//! ```text
//! C(t) = ¼[σx(0)σx(t) + σy(0)σy(t) + h.c.]
//! S(t) = ¼[σx(0)σy(t) − σy(0)σx(t) + h.c.]
//! ```
//!
//! For a constant field along z both are multiples of the identity,
//! `C = cos ωt` and `S = −sin ωt`, so they satisfy `dC/dt = ωS` and
//! `dS/dt = −ωC`.

use serde::Serialize;

use crate::algebra::{expectation, pauli, Axis, SpinOperator, SpinState, Vec3, TOLERANCE};
use crate::dynamics::{
    constant_field_propagator, heisenberg_evolve, operator_cross, precession_frequency, Particle,
};
use crate::error::{Error, Result};

/// A fixed note attached to results whose computation follows a corrected
/// form of a commonly printed relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Note {
    pub code: &'static str,
    pub message: &'static str,
}

pub const AUTOCORR_SIGN_NOTE: Note = Note {
    code: "autocorr-eom-sign",
    message: "dS/dt is evaluated as -(2 mu B/hbar) C; the form dS/dt = +(2 mu B/hbar) C is \
              inconsistent with C(t) = cos(wt), S(t) = -sin(wt) and is reported only as \
              `ds_residual_plus_sign`",
};

pub const TORQUE_VARIANCE_NOTE: Note = Note {
    code: "torque-variance-mu-b",
    message: "torque second moments are (mu B)^2 in a sigma_z eigenstate; the form (m B)^2 \
              is dimensionally inconsistent with a torque and is not used",
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AutocorrResult {
    pub t: f64,
    #[serde(skip)]
    pub c: SpinOperator,
    #[serde(skip)]
    pub s: SpinOperator,
    /// Identity coefficient of `C(t)`.
    pub c_value: f64,
    /// Identity coefficient of `S(t)`.
    pub s_value: f64,
    /// Principal value of `atan2(−s_value, c_value)`.
    pub theta: f64,
}

/// Builds `C` and `S` from an arbitrary propagator `U(0 → t)`.
pub fn autocorrelation_from_propagator(u: &SpinOperator, t: f64) -> Result<AutocorrResult> {
    let sx0 = pauli(Axis::X);
    let sy0 = pauli(Axis::Y);
    let sx = heisenberg_evolve(&sx0, u)?;
    let sy = heisenberg_evolve(&sy0, u)?;
    let symmetrize = |a: SpinOperator| (a + a.adjoint()).scale(0.25);
    let c = symmetrize(sx0 * sx + sy0 * sy);
    let s = symmetrize(sx0 * sy - sy0 * sx);
    let c_value = c.identity_component().re;
    let s_value = s.identity_component().re;
    Ok(AutocorrResult {
        t,
        c,
        s,
        c_value,
        s_value,
        theta: (-s_value).atan2(c_value),
    })
}

/// `C(t)`, `S(t)` for a constant field of strength `field` along z.
pub fn autocorrelation(particle: &Particle, field: f64, t: f64) -> Result<AutocorrResult> {
    let u = constant_field_propagator(particle, [0.0, 0.0, field], t);
    autocorrelation_from_propagator(&u, t)
}

/// One row of the autocorrelation time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AutocorrRecord {
    pub t: f64,
    pub c_value: f64,
    pub s_value: f64,
    /// Correlation angle unwrapped to be continuous along the series.
    pub theta: f64,
    pub theta_principal: f64,
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl AutocorrRecord {
    pub const COLUMNS: [&'static str; 7] = ["t", "c_value", "s_value", "theta", "sx", "sy", "sz"];

    pub fn row(&self) -> [f64; 7] {
        [
            self.t,
            self.c_value,
            self.s_value,
            self.theta,
            self.sx,
            self.sy,
            self.sz,
        ]
    }
}

/// Autocorrelations and spin expectations along an increasing time grid.
pub fn autocorrelation_series(
    particle: &Particle,
    field: f64,
    times: &[f64],
    state: &SpinState,
) -> Result<Vec<AutocorrRecord>> {
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter {
            name: "times",
            reason: "time grid must be strictly increasing".into(),
        });
    }
    let mut out: Vec<AutocorrRecord> = Vec::with_capacity(times.len());
    for &t in times {
        let r = autocorrelation(particle, field, t)?;
        let u = constant_field_propagator(particle, [0.0, 0.0, field], t);
        let [sx, sy, sz] = Axis::ALL.map(|axis| {
            let op = heisenberg_evolve(&pauli(axis), &u).expect("closed-form propagator is unitary");
            expectation(state, &op).expect("evolved Pauli operators are Hermitian")
        });
        let theta = match out.last() {
            None => r.theta,
            Some(prev) => prev.theta + wrap_angle(r.theta - prev.theta_principal),
        };
        out.push(AutocorrRecord {
            t,
            c_value: r.c_value,
            s_value: r.s_value,
            theta,
            theta_principal: r.theta,
            sx,
            sy,
            sz,
        });
    }
    Ok(out)
}

/// Maps an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Finite-difference residuals of the autocorrelation equations of motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EomResidual {
    /// `|dC/dt − ωS|`.
    pub dc_residual: f64,
    /// `|dS/dt + ωC|`, the form the cos/−sin solutions satisfy.
    pub ds_residual: f64,
    /// `|dS/dt − ωC|`, kept to show the plus-sign form fails.
    pub ds_residual_plus_sign: f64,
}

pub fn autocorr_eom_residual(particle: &Particle, field: f64, t: f64, dt: f64) -> Result<EomResidual> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be positive, got {dt}"),
        });
    }
    let omega = precession_frequency(particle, field);
    let ahead = autocorrelation(particle, field, t + dt)?;
    let behind = autocorrelation(particle, field, t - dt)?;
    let now = autocorrelation(particle, field, t)?;
    let dc = (ahead.c - behind.c).scale(1.0 / (2.0 * dt));
    let ds = (ahead.s - behind.s).scale(1.0 / (2.0 * dt));
    Ok(EomResidual {
        dc_residual: (dc - now.s.scale(omega)).max_abs(),
        ds_residual: (ds + now.c.scale(omega)).max_abs(),
        ds_residual_plus_sign: (ds - now.c.scale(omega)).max_abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationAngle {
    /// ϑ = ωτ.
    pub theta: f64,
    /// δφ = μBτ/ħ.
    pub phase_shift: f64,
    /// ϑ/δφ, absent when δφ = 0.
    pub ratio: Option<f64>,
}

/// Spin correlation angle at recombination, checked against twice the
/// scalar phase shift.
pub fn correlation_angle(particle: &Particle, field: f64, tau: f64) -> Result<CorrelationAngle> {
    let theta = precession_frequency(particle, field) * tau;
    let phase_shift = particle.moment_phase(field, tau);
    let mismatch = (theta - 2.0 * phase_shift).abs();
    if mismatch > TOLERANCE * theta.abs().max(1.0) {
        return Err(Error::Inconsistent(format!(
            "correlation angle {theta} differs from twice the phase shift {phase_shift}"
        )));
    }
    Ok(CorrelationAngle {
        theta,
        phase_shift,
        ratio: (phase_shift != 0.0).then(|| theta / phase_shift),
    })
}

/// Components of the torque `L = μ σ × B`.
pub fn torque_operator(particle: &Particle, field: Vec3) -> [SpinOperator; 3] {
    let sigma = Axis::ALL.map(pauli);
    operator_cross(&sigma, field).map(|l| l.scale(particle.magnetic_moment))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TorqueStats {
    pub mean_lx: f64,
    pub mean_ly: f64,
    pub mean_lx2: f64,
    pub mean_ly2: f64,
    pub var_lx: f64,
    pub var_ly: f64,
}

pub fn torque_fluctuations(state: &SpinState, particle: &Particle, field: Vec3) -> Result<TorqueStats> {
    state.validate()?;
    let [lx, ly, _] = torque_operator(particle, field);
    let mean_lx = expectation(state, &lx)?;
    let mean_ly = expectation(state, &ly)?;
    let mean_lx2 = expectation(state, &(lx * lx))?;
    let mean_ly2 = expectation(state, &(ly * ly))?;
    Ok(TorqueStats {
        mean_lx,
        mean_ly,
        mean_lx2,
        mean_ly2,
        var_lx: (mean_lx2 - mean_lx * mean_lx).max(0.0),
        var_ly: (mean_ly2 - mean_ly * mean_ly).max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::commutator;
    use crate::dynamics::{propagator, FieldProfile};
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    /// Builds C and S straight from the definitions with closed-form
    /// σx(t) = cos ωt σx + sin ωt σy and σy(t) = cos ωt σy − sin ωt σx.
    fn direct_construction(omega_t: f64) -> (SpinOperator, SpinOperator) {
        let (s, c) = omega_t.sin_cos();
        let sx = pauli(Axis::X);
        let sy = pauli(Axis::Y);
        let sxt = sx.scale(c) + sy.scale(s);
        let syt = sy.scale(c) - sx.scale(s);
        let h = |a: SpinOperator| (a + a.adjoint()).scale(0.25);
        (h(sx * sxt + sy * syt), h(sx * syt - sy * sxt))
    }

    #[test]
    fn initial_time_values() {
        let r = autocorrelation(&Particle::default(), 0.8, 0.0).unwrap();
        assert_eq!(r.c, SpinOperator::identity());
        assert_eq!(r.s, SpinOperator::zero());
        assert_eq!(r.theta, 0.0);
    }

    #[test]
    fn quarter_period() {
        // ωt = π/2 with μ = ħ = 1: B t = π/4.
        let r = autocorrelation(&Particle::default(), 1.0, PI / 4.0).unwrap();
        assert!(r.c.max_abs_diff(&SpinOperator::zero()) < 1e-15);
        assert!(r.s.max_abs_diff(&-SpinOperator::identity()) < 1e-15);
        assert!((r.theta - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn third_period_matches_direct_construction() {
        let (c_direct, s_direct) = direct_construction(FRAC_PI_3);
        assert!((c_direct.identity_component().re - 0.5).abs() < 1e-15);
        assert!((s_direct.identity_component().re + FRAC_PI_3.sin()).abs() < 1e-15);
        let r = autocorrelation(&Particle::default(), 1.0, FRAC_PI_3 / 2.0).unwrap();
        assert!((r.c_value - 0.5).abs() < 1e-15);
        assert!((r.s_value + FRAC_PI_3.sin()).abs() < 1e-15);
        assert!(r.c.max_abs_diff(&c_direct) < 1e-15);
        assert!(r.s.max_abs_diff(&s_direct) < 1e-15);
    }

    #[test]
    fn autocorrelations_commute_with_sigma_z_and_are_scalars() {
        let p = Particle::with_moment(-1.3);
        let sz = pauli(Axis::Z);
        for k in 0..40 {
            let t = 0.173 * k as f64;
            let r = autocorrelation(&p, 0.77, t).unwrap();
            assert!(commutator(&r.c, &sz).max_abs() < 1e-12);
            assert!(commutator(&r.s, &sz).max_abs() < 1e-12);
            assert!(r.c.is_hermitian() && r.s.is_hermitian());
            let sum = r.c * r.c + r.s * r.s;
            assert!(sum.max_abs_diff(&SpinOperator::identity()) < 1e-10);
        }
    }

    #[test]
    fn general_propagator_extension() {
        // For a z field assembled from several segments the result matches the
        // single-pulse formula.
        let p = Particle::default();
        let prof = FieldProfile::new(vec![
            crate::dynamics::FieldSegment::along_z(0.5, 0.4),
            crate::dynamics::FieldSegment::along_z(1.5, 0.2),
        ])
        .unwrap();
        let u = propagator(&p, &prof).unwrap();
        let r = autocorrelation_from_propagator(&u, 0.6).unwrap();
        let total: f64 = 2.0 * (0.5 * 0.4 + 1.5 * 0.2);
        assert!((r.c_value - total.cos()).abs() < 1e-15);
        assert!((r.s_value + total.sin()).abs() < 1e-15);
    }

    #[test]
    fn series_unwraps_theta() {
        let p = Particle::default();
        let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
        let series = autocorrelation_series(&p, 1.0, &times, &SpinState::up_z()).unwrap();
        for rec in &series {
            let w = precession_frequency(&p, 1.0);
            assert!(
                (rec.theta - w * rec.t).abs() < 1e-12,
                "t={} theta={}",
                rec.t,
                rec.theta
            );
            assert!(rec.sx.abs() < 1e-15 && rec.sy.abs() < 1e-15);
            assert!((rec.sz - 1.0).abs() < 1e-15);
        }
        assert!(autocorrelation_series(&p, 1.0, &[0.0, 0.0], &SpinState::up_z()).is_err());
    }

    #[test]
    fn eom_residual_second_order_and_sign() {
        let p = Particle::with_moment(0.6);
        let (b, t) = (1.7, 0.45);
        let r1 = autocorr_eom_residual(&p, b, t, 1e-3).unwrap();
        let r2 = autocorr_eom_residual(&p, b, t, 5e-4).unwrap();
        assert!((r1.dc_residual / r2.dc_residual - 4.0).abs() < 0.05);
        assert!((r1.ds_residual / r2.ds_residual - 4.0).abs() < 0.05);
        let w = precession_frequency(&p, b);
        // The plus-sign form misses by 2ω|cos ωt|.
        assert!((r1.ds_residual_plus_sign - 2.0 * w * (w * t).cos().abs()).abs() < 1e-5);

        let zero = autocorr_eom_residual(&p, 0.0, t, 1e-3).unwrap();
        assert_eq!((zero.dc_residual, zero.ds_residual), (0.0, 0.0));
    }

    #[test]
    fn eom_at_origin() {
        // dC/dt(0) = 0 and dS/dt(0) = −ω.
        let p = Particle::default();
        let b = 0.9;
        let w = precession_frequency(&p, b);
        let dt = 1e-4;
        let ahead = autocorrelation(&p, b, dt).unwrap();
        let behind = autocorrelation(&p, b, -dt).unwrap();
        let dc = (ahead.c_value - behind.c_value) / (2.0 * dt);
        let ds = (ahead.s_value - behind.s_value) / (2.0 * dt);
        assert!(dc.abs() < 1e-12);
        assert!((ds + w).abs() < 1e-7);
    }

    #[test]
    fn correlation_angle_is_twice_phase() {
        let p = Particle::default();
        let a = correlation_angle(&p, 1.0, 0.0).unwrap();
        assert_eq!(a.theta, 0.0);
        assert_eq!(a.ratio, None);
        let a = correlation_angle(&p, 1.0, FRAC_PI_2).unwrap();
        assert!((a.theta - PI).abs() < 1e-15);
        assert!((a.phase_shift - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(a.ratio, Some(2.0));
        let b = correlation_angle(&p, 1.0, PI).unwrap();
        assert!((b.theta - 2.0 * a.theta).abs() < 1e-15);
    }

    #[test]
    fn torque_components() {
        let p = Particle::with_moment(0.5);
        let b = 3.0;
        let [lx, ly, lz] = torque_operator(&p, [0.0, 0.0, b]);
        assert!(lx.max_abs_diff(&pauli(Axis::Y).scale(1.5)) < 1e-15);
        assert!(ly.max_abs_diff(&pauli(Axis::X).scale(-1.5)) < 1e-15);
        assert_eq!(lz, SpinOperator::zero());
        let [lx, _, _] = torque_operator(&p, [b, 0.0, 0.0]);
        assert_eq!(lx.max_abs(), 0.0);
        let zero = torque_operator(&p, [0.0; 3]);
        assert!(zero.iter().all(|l| l.max_abs() == 0.0));
    }

    #[test]
    fn torque_fluctuations_in_polarized_state() {
        let p = Particle::with_moment(-1.913);
        let b = 0.42;
        let stats = torque_fluctuations(&SpinState::up_z(), &p, [0.0, 0.0, b]).unwrap();
        assert_eq!((stats.mean_lx, stats.mean_ly), (0.0, 0.0));
        let want = (p.magnetic_moment * b).powi(2);
        assert!((stats.mean_lx2 - want).abs() <= 1e-15 * want);
        assert!((stats.var_ly - want).abs() <= 1e-15 * want);

        let zero = torque_fluctuations(&SpinState::up_z(), &p, [0.0; 3]).unwrap();
        assert_eq!(zero.mean_lx2 + zero.mean_ly2 + zero.var_lx + zero.var_ly, 0.0);
    }

    #[test]
    fn spin_angular_momentum_rate_equals_mean_torque() {
        // d⟨(ħ/2)σ⟩/dt = ⟨L⟩ in any state; zero for the z eigenstate, nonzero otherwise.
        let p = Particle::with_moment(0.8);
        let field = [0.3, -0.4, 1.2];
        let state = SpinState::pure_normalized(Complex64::new(0.8, 0.1), Complex64::new(0.2, -0.5)).unwrap();
        let l = torque_operator(&p, field);
        let dt = 1e-5;
        let t = 0.3;
        let spin_at = |t: f64| {
            let u = constant_field_propagator(&p, field, t);
            state.evolve(&u).bloch_vector().map(|s| 0.5 * p.hbar * s)
        };
        let (ahead, behind) = (spin_at(t + dt), spin_at(t - dt));
        let evolved = state.evolve(&constant_field_propagator(&p, field, t));
        for k in 0..3 {
            let rate = (ahead[k] - behind[k]) / (2.0 * dt);
            let torque = expectation(&evolved, &l[k]).unwrap();
            assert!((rate - torque).abs() < 1e-8, "component {k}: {rate} vs {torque}");
        }
    }
}
