//! Executes the analyses requested by a scenario.

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{ExperimentKind, Scenario};
use crate::algebra::{norm3, transverse_spin_report, SpinState};
use crate::correlation::{
    autocorr_eom_residual, autocorrelation_series, correlation_angle, torque_fluctuations, wrap_angle,
    AutocorrRecord, Note, AUTOCORR_SIGN_NOTE, TORQUE_VARIANCE_NOTE,
};
use crate::dynamics::{oracle_propagator, precession_frequency, propagator, FieldProfile};
use crate::error::{Error, Result};
use crate::gauge::{ab_phase_difference, gauge_invariance_report, winding_number};
use crate::interferometer::{
    energy_independence_scan, run_mach_zehnder, scalar_reduction_for_arms, ArmElement,
    INTENSITY_CONVENTION_NOTE,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarResult {
    pub analysis: String,
    pub key: String,
    pub value: f64,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub analysis: String,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisError {
    pub analysis: String,
    pub message: String,
}

/// Everything a run produces. Analyses that fail leave an entry in `errors`
/// and contribute nothing else.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultSet {
    pub scenario_digest: String,
    pub scalars: Vec<ScalarResult>,
    pub series: Vec<TimeSeries>,
    pub diagnostics: Vec<Diagnostic>,
    pub errors: Vec<AnalysisError>,
}

impl ResultSet {
    pub fn scalar(&self, analysis: &str, key: &str) -> Option<f64> {
        self.scalars
            .iter()
            .find(|s| s.analysis == analysis && s.key == key)
            .map(|s| s.value)
    }

    pub fn series(&self, name: &str) -> Option<&TimeSeries> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn has_errors(&self) -> bool {
        !self.errors.is_empty()
    }
}

/// Hex SHA-256 of the canonical TOML form.
pub fn scenario_digest(scenario: &Scenario) -> String {
    hex::encode(Sha256::digest(scenario.to_toml().as_bytes()))
}

#[derive(Default)]
struct Section {
    scalars: Vec<(String, f64, &'static str)>,
    series: Vec<TimeSeries>,
    notes: Vec<(String, String)>,
}

impl Section {
    fn put(&mut self, key: impl Into<String>, value: f64, unit: &'static str) {
        self.scalars.push((key.into(), value, unit));
    }

    fn flag(&mut self, key: &str, on: bool) {
        self.put(key, if on { 1.0 } else { 0.0 }, "flag");
    }

    fn note(&mut self, note: Note) {
        self.notes.push((note.code.into(), note.message.into()));
    }
}

const DIMENSIONLESS: &str = "dimensionless";
const RAD: &str = "rad";

pub fn run_scenario(scenario: &Scenario) -> ResultSet {
    let mut results = ResultSet {
        scenario_digest: scenario_digest(scenario),
        scalars: Vec::new(),
        series: Vec::new(),
        diagnostics: Vec::new(),
        errors: Vec::new(),
    };
    let beam = match scenario.beam.spin_state() {
        Ok(beam) => beam,
        Err(err) => {
            results.errors.push(AnalysisError {
                analysis: "beam".into(),
                message: err.to_string(),
            });
            return results;
        }
    };
    for name in scenario.analyses.requested() {
        let mut section = Section::default();
        match run_analysis(name, scenario, &beam, &mut section) {
            Ok(()) => {
                results.scalars.extend(
                    section
                        .scalars
                        .into_iter()
                        .map(|(key, value, unit)| ScalarResult {
                            analysis: name.into(),
                            key,
                            value,
                            unit: unit.into(),
                        }),
                );
                results.series.extend(section.series);
                results
                    .diagnostics
                    .extend(section.notes.into_iter().map(|(code, message)| Diagnostic {
                        analysis: name.into(),
                        code,
                        message,
                    }));
            }
            Err(err) => results.errors.push(AnalysisError {
                analysis: name.into(),
                message: err.to_string(),
            }),
        }
    }
    results
}

fn arms(scenario: &Scenario) -> Result<(&[ArmElement], &[ArmElement])> {
    scenario
        .arms()
        .ok_or_else(|| Error::Inconsistent("scenario does not define two arms".into()))
}

fn run_analysis(name: &str, s: &Scenario, beam: &SpinState, out: &mut Section) -> Result<()> {
    let particle = &s.particle;
    match name {
        "intensities" => {
            let (a1, a2) = arms(s)?;
            let r = run_mach_zehnder(a1, a2, beam, particle)?;
            out.put("i1", r.i1, DIMENSIONLESS);
            out.put("i2", r.i2, DIMENSIONLESS);
            out.put("visibility", r.visibility, DIMENSIONLESS);
            match r.relative_phase {
                Some(phase) => out.put("relative_phase", phase, RAD),
                None => out.notes.push((
                    "relative-phase-undefined".into(),
                    "visibility vanishes, so the fringe phase is undefined and not reported".into(),
                )),
            }
            if s.experiment == ExperimentKind::Sab {
                if let Some(dphi) = z_phase(a1, particle)
                    .zip(z_phase(a2, particle))
                    .map(|(p, q)| p - q)
                {
                    out.put("moment_phase", dphi, RAD);
                }
            }
            out.note(INTENSITY_CONVENTION_NOTE);
        }
        "scalar_reduction" => {
            let (a1, a2) = arms(s)?;
            let r = scalar_reduction_for_arms(a1, a2, beam, particle)?;
            out.put("sigma_z", r.sigma_z, DIMENSIONLESS);
            out.put("full_i1", r.full.i1, DIMENSIONLESS);
            out.put("scalar_i1", r.scalar.i1, DIMENSIONLESS);
            out.put("full_i2", r.full.i2, DIMENSIONLESS);
            out.put("scalar_i2", r.scalar.i2, DIMENSIONLESS);
            out.put("max_deviation", r.max_deviation, DIMENSIONLESS);
            out.flag("within_tolerance", r.max_deviation <= s.numerics.tolerance);
        }
        "oracle" => {
            let (a1, a2) = arms(s)?;
            let steps = s.numerics.oracle_steps;
            out.put("steps_per_segment", steps as f64, "count");
            let mut worst: f64 = 0.0;
            for (label, arm) in [("arm1", a1), ("arm2", a2)] {
                let profile =
                    FieldProfile::new(arm.iter().filter_map(|e| e.field_segment(particle)).collect())?;
                let closed = propagator(particle, &profile)?;
                let reference = oracle_propagator(particle, &profile, steps)?;
                let deviation = closed.max_abs_diff(&reference);
                worst = worst.max(deviation);
                out.put(format!("{label}_max_deviation"), deviation, DIMENSIONLESS);
            }
            out.flag("within_tolerance", worst <= s.numerics.tolerance);
        }
        "transverse_spin" => {
            let r = transverse_spin_report(beam);
            out.put("mean_sx", r.mean_sx, DIMENSIONLESS);
            out.put("mean_sy", r.mean_sy, DIMENSIONLESS);
            out.put("mean_sx2", r.mean_sx2, DIMENSIONLESS);
            out.put("mean_sy2", r.mean_sy2, DIMENSIONLESS);
            out.flag("unsatisfiable", r.unsatisfiable);
        }
        "autocorrelation" => {
            let spec = s.analyses.autocorrelation.as_ref().expect("requested");
            let times = spec.times();
            let records = autocorrelation_series(particle, spec.field, &times, beam)?;
            let omega = precession_frequency(particle, spec.field);
            let (mut c_err, mut s_err, mut dc, mut ds, mut ds_plus): (f64, f64, f64, f64, f64) =
                (0.0, 0.0, 0.0, 0.0, 0.0);
            for r in &records {
                c_err = c_err.max((r.c_value - (omega * r.t).cos()).abs());
                s_err = s_err.max((r.s_value + (omega * r.t).sin()).abs());
                let res = autocorr_eom_residual(particle, spec.field, r.t, s.numerics.eom_dt)?;
                dc = dc.max(res.dc_residual);
                ds = ds.max(res.ds_residual);
                ds_plus = ds_plus.max(res.ds_residual_plus_sign);
            }
            out.put("omega", omega, "1/time");
            out.put("max_c_error", c_err, DIMENSIONLESS);
            out.put("max_s_error", s_err, DIMENSIONLESS);
            out.put("max_dc_residual", dc, "1/time");
            out.put("max_ds_residual", ds, "1/time");
            out.put("max_ds_residual_plus_sign", ds_plus, "1/time");
            out.series.push(TimeSeries {
                name: "autocorrelation".into(),
                columns: AutocorrRecord::COLUMNS.iter().map(|c| c.to_string()).collect(),
                rows: records.iter().map(|r| r.row().to_vec()).collect(),
            });
            out.note(AUTOCORR_SIGN_NOTE);
        }
        "torque" => {
            let field = s.analyses.torque.as_ref().expect("requested").field;
            let r = torque_fluctuations(beam, particle, field)?;
            out.put("mean_lx", r.mean_lx, "torque");
            out.put("mean_ly", r.mean_ly, "torque");
            out.put("mean_lx2", r.mean_lx2, "torque^2");
            out.put("mean_ly2", r.mean_ly2, "torque^2");
            out.put("var_lx", r.var_lx, "torque^2");
            out.put("var_ly", r.var_ly, "torque^2");
            out.put(
                "mu_b_squared",
                (particle.magnetic_moment * norm3(field)).powi(2),
                "torque^2",
            );
            out.note(TORQUE_VARIANCE_NOTE);
        }
        "correlation_angle" => {
            let spec = s.analyses.correlation_angle.as_ref().expect("requested");
            let r = correlation_angle(particle, spec.field, spec.tau)?;
            out.put("theta", r.theta, RAD);
            out.put("phase_shift", r.phase_shift, RAD);
            if let Some(ratio) = r.ratio {
                out.put("ratio", ratio, DIMENSIONLESS);
            }
        }
        "energy_scan" => {
            let (a1, a2) = arms(s)?;
            let energies = &s.analyses.energy_scan.as_ref().expect("requested").energies;
            let phases = energy_independence_scan(a1, a2, beam, particle, energies)?;
            let spread = phases
                .iter()
                .map(|p| wrap_angle(p - phases[0]).abs())
                .fold(0.0, f64::max);
            out.put("max_phase_spread", spread, RAD);
            out.series.push(TimeSeries {
                name: "energy_scan".into(),
                columns: vec!["kinetic_energy".into(), "relative_phase".into()],
                rows: energies.iter().zip(&phases).map(|(&e, &p)| vec![e, p]).collect(),
            });
        }
        "winding" => {
            let gauge = s.gauge.as_ref().expect("validated");
            let paths = gauge.paths().map_err(|e| Error::Inconsistent(e.to_string()))?;
            let field = gauge.field();
            let mut reported = 0;
            for (k, path) in paths.iter().enumerate() {
                if path.is_closed() {
                    out.put(format!("path{k}_winding"), winding_number(path)? as f64, "count");
                    reported += 1;
                }
            }
            for i in 0..paths.len() {
                for j in i + 1..paths.len() {
                    if paths[i].is_closed() || paths[j].is_closed() {
                        continue;
                    }
                    match ab_phase_difference(
                        &paths[i],
                        &paths[j],
                        &field,
                        particle,
                        s.numerics.quadrature_panels,
                    ) {
                        Ok(r) => {
                            out.put(format!("pair{i}_{j}_phase"), r.phase, RAD);
                            out.put(format!("pair{i}_{j}_predicted"), r.predicted, RAD);
                            out.put(
                                format!("pair{i}_{j}_winding_difference"),
                                r.winding_difference as f64,
                                "count",
                            );
                            reported += 1;
                        }
                        Err(Error::EndpointMismatch) => {}
                        Err(other) => return Err(other),
                    }
                }
            }
            if reported == 0 {
                return Err(Error::InvalidParameter {
                    name: "paths",
                    reason: "no closed path and no pair of open paths sharing endpoints".into(),
                });
            }
        }
        "gauge_report" => {
            let gauge = s.gauge.as_ref().expect("validated");
            let spec = s.analyses.gauge_report.as_ref().expect("requested");
            let paths = gauge.paths().map_err(|e| Error::Inconsistent(e.to_string()))?;
            let r = gauge_invariance_report(
                &gauge.field(),
                &paths,
                spec.trials,
                spec.seed,
                s.numerics.quadrature_panels,
            )?;
            out.put("trials", r.trials as f64, "count");
            for p in &r.paths {
                out.put(format!("path{}_max_shift", p.index), p.max_shift, "flux");
            }
            for d in &r.differences {
                out.put(
                    format!("pair{}_{}_max_shift", d.first, d.second),
                    d.max_shift,
                    "flux",
                );
            }
            out.put("max_invariant_shift", r.max_invariant_shift, "flux");
            out.put("max_open_shift", r.max_open_shift, "flux");
            out.flag("invariant", r.invariant);
        }
        other => unreachable!("unknown analysis {other}"),
    }
    Ok(())
}

/// Spin-up phase `Σ μBτ/ħ` of an arm whose fields all point along ±z.
fn z_phase(arm: &[ArmElement], particle: &crate::dynamics::Particle) -> Option<f64> {
    let mut total = 0.0;
    for element in arm {
        if let Some(seg) = element.field_segment(particle) {
            if !seg.is_along_z() {
                return None;
            }
            total += particle.moment_phase(seg.magnitude * seg.direction[2].signum(), seg.duration);
        }
    }
    Some(total)
}
