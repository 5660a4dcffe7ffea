//! Built-in invariant checks run by `abspin selftest`.

use std::f64::consts::PI;

use crate::algebra::{pauli, transverse_spin_report, Axis, SpinOperator, SpinState};
use crate::correlation::{autocorrelation, correlation_angle, torque_fluctuations};
use crate::dynamics::{
    constant_field_propagator, heisenberg_evolve, oracle_propagator, propagator, FieldProfile, Particle,
};
use crate::error::Result;
use crate::gauge::{ab_phase_difference, gauge_invariance_report, winding_number, GaugeField, PlanarPath};
use crate::interferometer::{run_mach_zehnder, sab_arms, scalar_reduction_check};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Largest deviation observed, or the failure message.
    pub detail: String,
}

fn check(name: &'static str, tolerance: f64, measure: impl FnOnce() -> Result<f64>) -> Check {
    match measure() {
        Ok(dev) => Check {
            name,
            passed: dev <= tolerance,
            detail: format!("max deviation {dev:.3e} (tolerance {tolerance:.0e})"),
        },
        Err(e) => Check {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

pub fn run_selftest() -> Vec<Check> {
    let particle = Particle::default();
    vec![
        check("pauli-algebra", 1e-15, || {
            let [x, y, z] = Axis::ALL.map(pauli);
            let i = num_complex::Complex64::i();
            Ok([
                (x * y).max_abs_diff(&(z * i)),
                (y * z).max_abs_diff(&(x * i)),
                (z * x).max_abs_diff(&(y * i)),
                (x * x).max_abs_diff(&SpinOperator::identity()),
            ]
            .into_iter()
            .fold(0.0, f64::max))
        }),
        check("heisenberg-precession", 1e-14, || {
            let (b, t) = (0.45, 1.0);
            let u = constant_field_propagator(&particle, [0.0, 0.0, b], t);
            let wt: f64 = 2.0 * b * t;
            let expected = pauli(Axis::X).scale(wt.cos()) + pauli(Axis::Y).scale(wt.sin());
            Ok(heisenberg_evolve(&pauli(Axis::X), &u)?.max_abs_diff(&expected))
        }),
        check("autocorrelation-closed-form", 1e-14, || {
            let r = autocorrelation(&particle, 0.8, 1.3)?;
            let wt: f64 = 2.0 * 0.8 * 1.3;
            Ok((r.c_value - wt.cos()).abs().max((r.s_value + wt.sin()).abs()))
        }),
        check("correlation-angle-ratio", 1e-12, || {
            let r = correlation_angle(&particle, 0.6, 0.9)?;
            Ok((r.ratio.unwrap_or(f64::NAN) - 2.0).abs())
        }),
        check("sab-intensity", 1e-14, || {
            let dphi: f64 = 1.1;
            let (a1, a2) = sab_arms(dphi, 1.0);
            let out = run_mach_zehnder(&a1, &a2, &SpinState::up_z(), &particle)?;
            Ok((out.i1 - (dphi / 2.0).cos().powi(2)).abs())
        }),
        check("scalar-reduction", 1e-12, || {
            Ok(scalar_reduction_check(0.7, 1.0, &particle, &SpinState::up_z())?.max_deviation)
        }),
        check("torque-variance", 1e-14, || {
            let b = 1.7;
            let r = torque_fluctuations(&SpinState::up_z(), &particle, [0.0, 0.0, b])?;
            Ok((r.var_lx - b * b).abs().max((r.var_ly - b * b).abs()))
        }),
        check("transverse-condition", 0.0, || {
            let r = transverse_spin_report(&SpinState::up_z());
            Ok(if r.unsatisfiable { 0.0 } else { 1.0 })
        }),
        check("winding-number", 0.0, || {
            let loop2 = PlanarPath::circle([0.0, 0.0], 1.0, 64, 2, [0.0, 0.0])?;
            Ok((winding_number(&loop2)? - 2).abs() as f64)
        }),
        check("ab-phase", 1e-9, || {
            let field = GaugeField::solenoid(0.37, [0.0, 0.0]);
            let upper = PlanarPath::arc([0.0, 0.0], 1.0, 1.0, 0.0, PI, 64)?;
            let lower = PlanarPath::arc([0.0, 0.0], 1.0, 1.0, 0.0, -PI, 64)?;
            let r = ab_phase_difference(&upper, &lower, &field, &particle, 32)?;
            Ok((r.phase - 0.37).abs())
        }),
        check("gauge-invariance", 1e-9, || {
            let field = GaugeField::solenoid(1.0, [0.0, 0.0]);
            let paths = vec![
                PlanarPath::circle([0.0, 0.0], 1.0, 64, 1, [0.0, 0.0])?,
                PlanarPath::arc([0.0, 0.0], 1.0, 1.5, 0.0, PI, 64)?,
            ];
            Ok(gauge_invariance_report(&field, &paths, 5, 7, 32)?.max_invariant_shift)
        }),
        check("propagator-oracle", 1e-12, || {
            let profile = FieldProfile::pulse(0.9, [0.6, 0.0, 0.8], 2.0)?;
            Ok(propagator(&particle, &profile)?.max_abs_diff(&oracle_propagator(&particle, &profile, 100)?))
        }),
    ]
}
