//! Scenario documents: parsing, validation and serialization.
//!
//! A scenario is a TOML document; the grammar is in `docs/scenario-format.md`.
//! Parsing is strict: unknown keys are rejected with their location, every
//! number is range-checked, and analyses must match the experiment kind.

mod output;
mod run;
mod sweep;

pub use output::{
    emit, format_float, render_csv, render_files, render_json, render_messages_csv, render_scalars_csv,
    Destination, OutputFormat,
};
pub use run::{
    run_scenario, scenario_digest, AnalysisError, Diagnostic, ResultSet, ScalarResult, TimeSeries,
};
pub use sweep::{render_sweep_csv, run_sweep, with_parameter, SweepPoint};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{norm3, Axis, SpinState, Vec3, TOLERANCE};
use crate::dynamics::Particle;
use crate::gauge::{GaugeField, GaussianBump, PlanarPath, Point, DEFAULT_EPSILON};
use crate::interferometer::ArmElement;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown key `{key}` at line {line}, column {column}")]
    UnknownKey { key: String, line: usize, column: usize },
    #[error("`{field}` out of range: {message}")]
    Range { field: String, message: String },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ScenarioError {
    /// Stable machine-readable category.
    pub fn code(&self) -> &'static str {
        match self {
            ScenarioError::Syntax { .. } => "syntax",
            ScenarioError::UnknownKey { .. } => "unknown_key",
            ScenarioError::Range { .. } => "range",
            ScenarioError::Invalid { .. } => "invalid",
        }
    }

    fn range(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Range {
            field: field.into(),
            message: message.into(),
        }
    }

    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Field pulse on one arm's magnetic moment.
    Sab,
    /// Pulsed potential difference between shielding cylinders.
    Eab,
    /// Charged particle paths around a solenoid.
    MagneticAb,
    /// Moment moving through an electric field.
    Ac,
    CustomArms,
}

impl ExperimentKind {
    pub fn has_arms(self) -> bool {
        self != ExperimentKind::MagneticAb
    }

    pub fn has_spin(self) -> bool {
        matches!(
            self,
            ExperimentKind::Sab | ExperimentKind::Ac | ExperimentKind::CustomArms
        )
    }

    fn allows(self, element: &ArmElement) -> bool {
        matches!(
            (self, element),
            (_, ArmElement::Free { .. })
                | (ExperimentKind::CustomArms, _)
                | (ExperimentKind::Sab, ArmElement::FieldPulse { .. })
                | (ExperimentKind::Eab, ArmElement::ShieldedPotential { .. })
                | (ExperimentKind::Ac, ArmElement::AcField { .. })
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NamedBeam {
    #[serde(rename = "sz+")]
    SzPlus,
    #[serde(rename = "sz-")]
    SzMinus,
    #[serde(rename = "sx+")]
    SxPlus,
    #[serde(rename = "sx-")]
    SxMinus,
    #[serde(rename = "sy+")]
    SyPlus,
    #[serde(rename = "sy-")]
    SyMinus,
    #[serde(rename = "unpolarized")]
    Unpolarized,
}

/// Beam polarization: a named state or a Bloch vector, exactly one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<NamedBeam>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bloch: Option<Vec3>,
}

impl BeamSpec {
    pub fn named(state: NamedBeam) -> Self {
        Self {
            state: Some(state),
            bloch: None,
        }
    }

    pub fn spin_state(&self) -> Result<SpinState, ScenarioError> {
        match (self.state, self.bloch) {
            (Some(named), None) => Ok(match named {
                NamedBeam::SzPlus => SpinState::eigenstate(Axis::Z, true),
                NamedBeam::SzMinus => SpinState::eigenstate(Axis::Z, false),
                NamedBeam::SxPlus => SpinState::eigenstate(Axis::X, true),
                NamedBeam::SxMinus => SpinState::eigenstate(Axis::X, false),
                NamedBeam::SyPlus => SpinState::eigenstate(Axis::Y, true),
                NamedBeam::SyMinus => SpinState::eigenstate(Axis::Y, false),
                NamedBeam::Unpolarized => SpinState::unpolarized(),
            }),
            (None, Some(r)) => {
                if r.iter().any(|c| !c.is_finite()) || norm3(r) > 1.0 + TOLERANCE {
                    return Err(ScenarioError::range(
                        "beam.bloch",
                        format!("Bloch vector {r:?} must be finite with length at most 1"),
                    ));
                }
                SpinState::from_bloch(r).map_err(|e| ScenarioError::invalid("beam.bloch", e.to_string()))
            }
            _ => Err(ScenarioError::invalid(
                "beam",
                "give exactly one of `state` or `bloch`",
            )),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmSpec {
    #[serde(default)]
    pub element: Vec<ArmElement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathShape {
    Polyline {
        vertices: Vec<Point>,
    },
    Arc {
        radius_start: f64,
        radius_end: f64,
        start_angle: f64,
        sweep: f64,
        segments: usize,
    },
    Circle {
        center: Point,
        radius: f64,
        segments: usize,
        #[serde(default = "one_turn")]
        turns: i32,
    },
}

fn one_turn() -> i32 {
    1
}

fn origin() -> Point {
    [0.0, 0.0]
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSpec {
    pub flux: f64,
    #[serde(default = "origin")]
    pub flux_point: Point,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bump: Vec<GaussianBump>,
    #[serde(default)]
    pub path: Vec<PathShape>,
}

impl GaugeSpec {
    pub fn field(&self) -> GaugeField {
        GaugeField {
            flux: self.flux,
            flux_point: self.flux_point,
            bumps: self.bump.clone(),
        }
    }

    pub fn paths(&self) -> Result<Vec<PlanarPath>, ScenarioError> {
        self.path
            .iter()
            .enumerate()
            .map(|(k, shape)| {
                let built = match shape {
                    PathShape::Polyline { vertices } => {
                        PlanarPath::with_epsilon(vertices.clone(), self.flux_point, self.epsilon)
                    }
                    PathShape::Arc {
                        radius_start,
                        radius_end,
                        start_angle,
                        sweep,
                        segments,
                    } => PlanarPath::arc(
                        self.flux_point,
                        *radius_start,
                        *radius_end,
                        *start_angle,
                        *sweep,
                        *segments,
                    ),
                    PathShape::Circle {
                        center,
                        radius,
                        segments,
                        turns,
                    } => PlanarPath::circle(*center, *radius, *segments, *turns, self.flux_point),
                };
                built.map_err(|e| ScenarioError::invalid(format!("gauge.path[{k}]"), e.to_string()))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutocorrelationSpec {
    /// Field strength along z.
    pub field: f64,
    #[serde(default)]
    pub t_start: f64,
    pub t_stop: f64,
    pub points: usize,
}

impl AutocorrelationSpec {
    pub fn times(&self) -> Vec<f64> {
        let n = self.points.max(2);
        let step = (self.t_stop - self.t_start) / (n - 1) as f64;
        (0..n).map(|k| self.t_start + step * k as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorqueSpec {
    pub field: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationAngleSpec {
    pub field: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyScanSpec {
    pub energies: Vec<f64>,
}

fn default_trials() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeReportSpec {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Requested outputs. Boolean flags come first so the document serializes
/// with plain keys before sub-tables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analyses {
    #[serde(default, skip_serializing_if = "is_false")]
    pub intensities: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub scalar_reduction: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub oracle: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub transverse_spin: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub winding: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub autocorrelation: Option<AutocorrelationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torque: Option<TorqueSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation_angle: Option<CorrelationAngleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_scan: Option<EnergyScanSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge_report: Option<GaugeReportSpec>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl Analyses {
    /// Names of the requested analyses, in a fixed order.
    pub fn requested(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let flags = [
            ("intensities", self.intensities),
            ("scalar_reduction", self.scalar_reduction),
            ("oracle", self.oracle),
            ("transverse_spin", self.transverse_spin),
            ("winding", self.winding),
            ("autocorrelation", self.autocorrelation.is_some()),
            ("torque", self.torque.is_some()),
            ("correlation_angle", self.correlation_angle.is_some()),
            ("energy_scan", self.energy_scan.is_some()),
            ("gauge_report", self.gauge_report.is_some()),
        ];
        for (name, on) in flags {
            if on {
                out.push(name);
            }
        }
        out
    }
}

fn default_tolerance() -> f64 {
    1e-10
}

fn default_oracle_steps() -> usize {
    10_000
}

fn default_panels() -> usize {
    64
}

fn default_eom_dt() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_oracle_steps")]
    pub oracle_steps: usize,
    /// Quadrature panels per path segment.
    #[serde(default = "default_panels")]
    pub quadrature_panels: usize,
    /// Finite-difference step for equation-of-motion residuals.
    #[serde(default = "default_eom_dt")]
    pub eom_dt: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            tolerance: default_tolerance(),
            oracle_steps: default_oracle_steps(),
            quadrature_panels: default_panels(),
            eom_dt: default_eom_dt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: String,
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub particle: Particle,
    pub beam: BeamSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub arm: Vec<ArmSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge: Option<GaugeSpec>,
    #[serde(default)]
    pub analyses: Analyses,
    #[serde(default)]
    pub numerics: Numerics,
}

impl Scenario {
    /// Canonical TOML form; parses back to an equal scenario.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario types serialize to TOML")
    }

    pub fn arms(&self) -> Option<(&[ArmElement], &[ArmElement])> {
        match self.arm.as_slice() {
            [a, b] => Some((&a.element, &b.element)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.version != FORMAT_VERSION {
            return Err(ScenarioError::invalid(
                "version",
                format!(
                    "unsupported version `{}`, expected `{FORMAT_VERSION}`",
                    self.version
                ),
            ));
        }
        self.validate_particle()?;
        self.beam.spin_state()?;

        let kind = self.experiment;
        if kind.has_arms() {
            if self.arm.len() != 2 {
                return Err(ScenarioError::invalid(
                    "arm",
                    format!(
                        "interferometer experiments need exactly 2 arms, got {}",
                        self.arm.len()
                    ),
                ));
            }
            if self.gauge.is_some() {
                return Err(ScenarioError::invalid(
                    "gauge",
                    "only magnetic_ab experiments take a gauge section",
                ));
            }
            for (a, arm) in self.arm.iter().enumerate() {
                for (e, element) in arm.element.iter().enumerate() {
                    let at = format!("arm[{a}].element[{e}]");
                    validate_element(element, &at)?;
                    if !kind.allows(element) {
                        return Err(ScenarioError::invalid(
                            at,
                            format!("element kind not allowed in a {kind:?} experiment"),
                        ));
                    }
                    element
                        .validate(&self.particle)
                        .map_err(|err| ScenarioError::invalid(at, err.to_string()))?;
                }
            }
        } else {
            if !self.arm.is_empty() {
                return Err(ScenarioError::invalid(
                    "arm",
                    "magnetic_ab experiments take paths, not arms",
                ));
            }
            let gauge = self
                .gauge
                .as_ref()
                .ok_or_else(|| ScenarioError::invalid("gauge", "magnetic_ab needs a gauge section"))?;
            self.validate_gauge(gauge)?;
        }
        self.validate_analyses()?;
        self.validate_numerics()
    }

    fn validate_particle(&self) -> Result<(), ScenarioError> {
        let p = &self.particle;
        finite("particle.magnetic_moment", p.magnetic_moment)?;
        finite("particle.charge", p.charge)?;
        for (name, v) in [
            ("particle.mass", p.mass),
            ("particle.hbar", p.hbar),
            ("particle.c", p.c),
        ] {
            finite(name, v)?;
            if v <= 0.0 {
                return Err(ScenarioError::range(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn validate_gauge(&self, gauge: &GaugeSpec) -> Result<(), ScenarioError> {
        finite("gauge.flux", gauge.flux)?;
        finite("gauge.flux_point", gauge.flux_point[0])?;
        finite("gauge.flux_point", gauge.flux_point[1])?;
        if !(gauge.epsilon >= 0.0 && gauge.epsilon.is_finite()) {
            return Err(ScenarioError::range("gauge.epsilon", "must be non-negative"));
        }
        for (k, b) in gauge.bump.iter().enumerate() {
            finite(&format!("gauge.bump[{k}].amplitude"), b.amplitude)?;
            positive(&format!("gauge.bump[{k}].width"), b.width)?;
        }
        gauge.paths()?;
        Ok(())
    }

    fn validate_analyses(&self) -> Result<(), ScenarioError> {
        let kind = self.experiment;
        let a = &self.analyses;
        let need = |ok: bool, name: &str, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(ScenarioError::invalid(
                    format!("analyses.{name}"),
                    format!("requires {what}, experiment is {kind:?}"),
                ))
            }
        };
        let arms = kind.has_arms();
        if a.intensities {
            need(arms, "intensities", "an interferometer experiment")?;
        }
        if a.oracle {
            need(arms, "oracle", "an interferometer experiment")?;
        }
        if a.scalar_reduction {
            need(
                kind == ExperimentKind::Sab,
                "scalar_reduction",
                "an sab experiment",
            )?;
        }
        if a.transverse_spin {
            need(kind.has_spin(), "transverse_spin", "a spin experiment")?;
        }
        if a.winding {
            need(!arms, "winding", "a magnetic_ab experiment")?;
        }
        if let Some(spec) = &a.autocorrelation {
            need(kind.has_spin(), "autocorrelation", "a spin experiment")?;
            finite("analyses.autocorrelation.field", spec.field)?;
            finite("analyses.autocorrelation.t_start", spec.t_start)?;
            finite("analyses.autocorrelation.t_stop", spec.t_stop)?;
            if spec.points < 2 {
                return Err(ScenarioError::range(
                    "analyses.autocorrelation.points",
                    "need at least 2 points",
                ));
            }
            if !(spec.t_stop > spec.t_start) {
                return Err(ScenarioError::range(
                    "analyses.autocorrelation.t_stop",
                    "time grid must be strictly increasing (t_stop > t_start)",
                ));
            }
        }
        if let Some(spec) = &a.torque {
            need(kind.has_spin(), "torque", "a spin experiment")?;
            for c in spec.field {
                finite("analyses.torque.field", c)?;
            }
        }
        if let Some(spec) = &a.correlation_angle {
            need(kind.has_spin(), "correlation_angle", "a spin experiment")?;
            finite("analyses.correlation_angle.field", spec.field)?;
            non_negative("analyses.correlation_angle.tau", spec.tau)?;
        }
        if let Some(spec) = &a.energy_scan {
            need(arms, "energy_scan", "an interferometer experiment")?;
            if spec.energies.is_empty() {
                return Err(ScenarioError::range(
                    "analyses.energy_scan.energies",
                    "need at least one energy",
                ));
            }
            for (k, &e) in spec.energies.iter().enumerate() {
                non_negative(&format!("analyses.energy_scan.energies[{k}]"), e)?;
            }
        }
        if let Some(spec) = &a.gauge_report {
            need(!arms, "gauge_report", "a magnetic_ab experiment")?;
            if spec.trials == 0 {
                return Err(ScenarioError::range(
                    "analyses.gauge_report.trials",
                    "need at least one trial",
                ));
            }
        }
        Ok(())
    }

    fn validate_numerics(&self) -> Result<(), ScenarioError> {
        let n = &self.numerics;
        positive("numerics.tolerance", n.tolerance)?;
        positive("numerics.eom_dt", n.eom_dt)?;
        if n.oracle_steps == 0 {
            return Err(ScenarioError::range(
                "numerics.oracle_steps",
                "must be at least 1",
            ));
        }
        if n.quadrature_panels == 0 {
            return Err(ScenarioError::range(
                "numerics.quadrature_panels",
                "must be at least 1",
            ));
        }
        Ok(())
    }
}

fn finite(field: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ScenarioError::range(field, format!("must be finite, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), ScenarioError> {
    finite(field, v)?;
    if v < 0.0 {
        return Err(ScenarioError::range(
            field,
            format!("must be non-negative, got {v}"),
        ));
    }
    Ok(())
}

fn positive(field: &str, v: f64) -> Result<(), ScenarioError> {
    finite(field, v)?;
    if v <= 0.0 {
        return Err(ScenarioError::range(field, format!("must be positive, got {v}")));
    }
    Ok(())
}

fn validate_element(element: &ArmElement, at: &str) -> Result<(), ScenarioError> {
    let field = |name: &str| format!("{at}.{name}");
    match element {
        ArmElement::FieldPulse {
            magnitude,
            direction,
            duration,
            rotation,
        } => {
            finite(&field("magnitude"), *magnitude)?;
            non_negative(&field("duration"), *duration)?;
            unit(&field("direction"), *direction)?;
            if let Some(rot) = rotation {
                unit(&field("rotation.axis"), rot.axis)?;
                finite(&field("rotation.rate"), rot.rate)?;
            }
        }
        ArmElement::AcField {
            momentum,
            electric_field,
            duration,
        } => {
            for c in momentum {
                finite(&field("momentum"), *c)?;
            }
            for c in electric_field {
                finite(&field("electric_field"), *c)?;
            }
            non_negative(&field("duration"), *duration)?;
        }
        ArmElement::ShieldedPotential { delta_v, duration } => {
            finite(&field("delta_v"), *delta_v)?;
            non_negative(&field("duration"), *duration)?;
        }
        ArmElement::OpticalPhase { profile } => {
            for (k, piece) in profile.iter().enumerate() {
                finite(&field(&format!("profile[{k}].rate")), piece.rate)?;
                non_negative(&field(&format!("profile[{k}].duration")), piece.duration)?;
            }
        }
        ArmElement::Free { duration } => non_negative(&field("duration"), *duration)?,
    }
    Ok(())
}

fn unit(field: &str, v: Vec3) -> Result<(), ScenarioError> {
    for c in v {
        finite(field, c)?;
    }
    if (norm3(v) - 1.0).abs() > TOLERANCE {
        return Err(ScenarioError::range(
            field,
            format!("direction {v:?} must be unit-norm"),
        ));
    }
    Ok(())
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, column)
}

pub(crate) fn map_toml_error(text: &str, err: &toml::de::Error) -> ScenarioError {
    let (line, column) = err.span().map_or((0, 0), |s| line_column(text, s.start));
    let message = err.message().to_string();
    if let Some(key) = backticked(&message, "unknown field `") {
        return ScenarioError::UnknownKey { key, line, column };
    }
    if let Some(key) = backticked(&message, "missing field `") {
        return ScenarioError::Invalid {
            field: key,
            message: format!("required key is missing (line {line}, column {column})"),
        };
    }
    ScenarioError::Syntax {
        line,
        column,
        message,
    }
}

fn backticked(message: &str, prefix: &str) -> Option<String> {
    let rest = message.strip_prefix(prefix)?;
    Some(rest.split('`').next().unwrap_or_default().to_string())
}

/// Parses and fully validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| map_toml_error(text, &e))?;
    scenario.validate()?;
    Ok(scenario)
}
