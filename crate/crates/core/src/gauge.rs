//! Vector potentials, line integrals, winding numbers and gauge checks for
//! an ideal (zero-radius) solenoid in the plane.
//!
//! The solenoid potential `A = Φ/(2π r) φ̂` integrates along a straight
//! segment to `Φ/2π` times the signed angle the segment subtends at the flux
//! line, which gives an exact route for its line integral. Gauge terms are
//! sums of Gaussian bumps `χ(r) = a exp(−|r−c|²/2w²)`, single-valued by
//! construction, whose gradients are integrated by composite Gauss-Legendre
//! quadrature.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{cross3, Vec3};
use crate::dynamics::Particle;
use crate::error::{check_finite, Error, Result};

pub type Point = [f64; 2];

/// Minimum allowed distance between a path and the flux line.
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// Tolerance for winding-law and gauge-invariance checks.
pub const TOPOLOGY_TOLERANCE: f64 = 1e-9;

/// Piecewise-linear path in the plane that avoids `flux_point`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarPath {
    vertices: Vec<Point>,
    flux_point: Point,
    epsilon: f64,
}

impl PlanarPath {
    pub fn new(vertices: Vec<Point>, flux_point: Point) -> Result<Self> {
        Self::with_epsilon(vertices, flux_point, DEFAULT_EPSILON)
    }

    pub fn with_epsilon(vertices: Vec<Point>, flux_point: Point, epsilon: f64) -> Result<Self> {
        let path = Self {
            vertices,
            flux_point,
            epsilon,
        };
        path.validate()?;
        Ok(path)
    }

    /// Polyline along `r(θ) = center + ρ(θ)(cos θ, sin θ)` about the flux
    /// point, sweeping `sweep` radians from `start_angle` with the radius
    /// varying linearly from `radius_start` to `radius_end`.
    pub fn arc(
        flux_point: Point,
        radius_start: f64,
        radius_end: f64,
        start_angle: f64,
        sweep: f64,
        segments: usize,
    ) -> Result<Self> {
        if segments == 0 {
            return Err(Error::DegeneratePath("arc needs at least one segment".into()));
        }
        let vertices = (0..=segments)
            .map(|k| {
                let f = k as f64 / segments as f64;
                let angle = start_angle + sweep * f;
                let r = radius_start + (radius_end - radius_start) * f;
                [flux_point[0] + r * angle.cos(), flux_point[1] + r * angle.sin()]
            })
            .collect();
        Self::new(vertices, flux_point)
    }

    /// Closed regular polygon around `center`, traversed `turns` times
    /// (negative for clockwise).
    pub fn circle(
        center: Point,
        radius: f64,
        segments_per_turn: usize,
        turns: i32,
        flux_point: Point,
    ) -> Result<Self> {
        if segments_per_turn < 3 || turns == 0 {
            return Err(Error::DegeneratePath(
                "circle needs at least 3 segments and a non-zero turn count".into(),
            ));
        }
        let n = segments_per_turn * turns.unsigned_abs() as usize;
        let step = TAU / segments_per_turn as f64 * f64::from(turns.signum());
        let mut vertices: Vec<Point> = (0..n)
            .map(|k| {
                let a = step * k as f64;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            })
            .collect();
        vertices.push(vertices[0]);
        Self::new(vertices, flux_point)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "path.epsilon",
                reason: format!("must be non-negative, got {}", self.epsilon),
            });
        }
        if self.vertices.len() < 2 {
            return Err(Error::DegeneratePath("a path needs at least 2 vertices".into()));
        }
        for v in self.vertices.iter().chain(std::iter::once(&self.flux_point)) {
            check_finite("path vertex", v[0])?;
            check_finite("path vertex", v[1])?;
        }
        for w in self.vertices.windows(2) {
            let d = distance_to_segment(self.flux_point, w[0], w[1]);
            if d <= self.epsilon {
                let nearest = if distance(w[0], self.flux_point) <= distance(w[1], self.flux_point) {
                    w[0]
                } else {
                    w[1]
                };
                return Err(Error::Singularity {
                    x: nearest[0],
                    y: nearest[1],
                    epsilon: self.epsilon,
                });
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn flux_point(&self) -> Point {
        self.flux_point
    }

    pub fn start(&self) -> Point {
        self.vertices[0]
    }

    pub fn end(&self) -> Point {
        *self.vertices.last().expect("validated path has vertices")
    }

    pub fn is_closed(&self) -> bool {
        self.start() == self.end()
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| distance(w[0], w[1])).sum()
    }

    pub fn reversed(&self) -> Self {
        let mut path = self.clone();
        path.vertices.reverse();
        path
    }

    /// This path followed by `next`, which must start where this one ends.
    pub fn concat(&self, next: &PlanarPath) -> Result<Self> {
        if !points_match(self.end(), next.start()) || self.flux_point != next.flux_point {
            return Err(Error::EndpointMismatch);
        }
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&next.vertices[1..]);
        // Snap the closing vertex so that round-off cannot leave a loop open.
        if points_match(vertices[0], *vertices.last().expect("non-empty")) {
            let first = vertices[0];
            *vertices.last_mut().expect("non-empty") = first;
        }
        Self::with_epsilon(vertices, self.flux_point, self.epsilon.min(next.epsilon))
    }

    /// Copy with every vertex displaced by `offset(k)`.
    pub fn perturbed(&self, offset: impl Fn(usize) -> Point) -> Result<Self> {
        let vertices = self
            .vertices
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let d = offset(k);
                [v[0] + d[0], v[1] + d[1]]
            })
            .collect();
        Self::with_epsilon(vertices, self.flux_point, self.epsilon)
    }
}

fn points_match(a: Point, b: Point) -> bool {
    let scale = a[0]
        .abs()
        .max(a[1].abs())
        .max(b[0].abs())
        .max(b[1].abs())
        .max(1.0);
    distance(a, b) <= 1e-12 * scale
}

fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn distance_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    distance(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Signed angle subtended at `center` by the straight segment `a → b`.
fn subtended(center: Point, a: Point, b: Point) -> f64 {
    let u = [a[0] - center[0], a[1] - center[1]];
    let v = [b[0] - center[0], b[1] - center[1]];
    (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1])
}

/// Total signed angle swept about the flux point, in turns.
///
/// A straight segment that avoids the centre subtends less than π, so the
/// principal `atan2` increment is always the right one.
pub fn winding_turns(path: &PlanarPath) -> Result<f64> {
    if path.length() == 0.0 {
        return Err(Error::DegeneratePath("path has zero length".into()));
    }
    let total: f64 = path
        .vertices
        .windows(2)
        .map(|w| subtended(path.flux_point, w[0], w[1]))
        .sum();
    Ok(total / TAU)
}

/// Integer winding number of a closed path about its flux point.
pub fn winding_number(path: &PlanarPath) -> Result<i64> {
    if !path.is_closed() {
        return Err(Error::DegeneratePath(
            "winding number needs a closed path; use winding_turns for open paths".into(),
        ));
    }
    let turns = winding_turns(path)?;
    let n = turns.round();
    if (turns - n).abs() > 1e-9 {
        return Err(Error::Inconsistent(format!(
            "closed path sweeps a non-integer {turns} turns"
        )));
    }
    Ok(n as i64)
}

/// Gaussian bump `a exp(−|r−c|²/2w²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianBump {
    pub amplitude: f64,
    pub center: Point,
    pub width: f64,
}

impl GaussianBump {
    pub fn value(&self, p: Point) -> f64 {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        self.amplitude * (-(dx * dx + dy * dy) / (2.0 * self.width * self.width)).exp()
    }

    pub fn gradient(&self, p: Point) -> Point {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let w2 = self.width * self.width;
        let f = -self.value(p) / w2;
        [f * dx, f * dy]
    }
}

/// Ideal solenoid of flux `flux` at `flux_point` plus the gradient of a
/// single-valued gauge function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeField {
    pub flux: f64,
    pub flux_point: Point,
    #[serde(default)]
    pub bumps: Vec<GaussianBump>,
}

impl GaugeField {
    pub fn solenoid(flux: f64, flux_point: Point) -> Self {
        Self {
            flux,
            flux_point,
            bumps: Vec::new(),
        }
    }

    pub fn with_bumps(&self, bumps: Vec<GaussianBump>) -> Self {
        Self {
            bumps,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_finite("gauge.flux", self.flux)?;
        check_finite("gauge.flux_point", self.flux_point[0])?;
        check_finite("gauge.flux_point", self.flux_point[1])?;
        for b in &self.bumps {
            check_finite("bump.amplitude", b.amplitude)?;
            if !(b.width > 0.0 && b.width.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "bump.width",
                    reason: format!("must be positive, got {}", b.width),
                });
            }
        }
        Ok(())
    }

    /// The gauge function χ.
    pub fn gauge_function(&self, p: Point) -> f64 {
        self.bumps.iter().map(|b| b.value(p)).sum()
    }

    pub fn gauge_gradient(&self, p: Point) -> Point {
        self.bumps.iter().fold([0.0, 0.0], |acc, b| {
            let g = b.gradient(p);
            [acc[0] + g[0], acc[1] + g[1]]
        })
    }

    fn solenoid_potential(&self, p: Point) -> Point {
        let dx = p[0] - self.flux_point[0];
        let dy = p[1] - self.flux_point[1];
        let f = self.flux / (TAU * (dx * dx + dy * dy));
        [-f * dy, f * dx]
    }
}

/// `A(p)`: azimuthal solenoid potential plus `∇χ`.
pub fn vector_potential(field: &GaugeField, p: Point) -> Result<Point> {
    if distance(p, field.flux_point) <= DEFAULT_EPSILON {
        return Err(Error::Singularity {
            x: p[0],
            y: p[1],
            epsilon: DEFAULT_EPSILON,
        });
    }
    let a = field.solenoid_potential(p);
    let g = field.gauge_gradient(p);
    Ok([a[0] + g[0], a[1] + g[1]])
}

const GL_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Composite 4-point Gauss-Legendre rule for `∫ F·dr` along the path.
fn quadrature(path: &PlanarPath, subintervals: usize, f: impl Fn(Point) -> Point) -> f64 {
    let mut total = 0.0;
    for w in path.vertices.windows(2) {
        let (a, b) = (w[0], w[1]);
        let d = [b[0] - a[0], b[1] - a[1]];
        let h = 1.0 / subintervals as f64;
        for k in 0..subintervals {
            let mid = (k as f64 + 0.5) * h;
            for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let s = mid + 0.5 * h * x;
                let v = f([a[0] + s * d[0], a[1] + s * d[1]]);
                total += 0.5 * h * wt * (v[0] * d[0] + v[1] * d[1]);
            }
        }
    }
    total
}

fn check_path_against_field(field: &GaugeField, path: &PlanarPath, subintervals: usize) -> Result<()> {
    field.validate()?;
    path.validate()?;
    if path.flux_point != field.flux_point {
        return Err(Error::InvalidParameter {
            name: "path.flux_point",
            reason: "path and field disagree on the flux location".into(),
        });
    }
    if subintervals == 0 {
        return Err(Error::InvalidParameter {
            name: "samples_per_segment",
            reason: "must be at least 1".into(),
        });
    }
    Ok(())
}

/// `∫ A·dr`: the solenoid part exactly from subtended angles, the gauge
/// part by quadrature with `subintervals` panels per segment.
pub fn line_integral(field: &GaugeField, path: &PlanarPath, subintervals: usize) -> Result<f64> {
    check_path_against_field(field, path, subintervals)?;
    let solenoid = field.flux * winding_turns(path)?;
    let gauge = if field.bumps.is_empty() {
        0.0
    } else {
        quadrature(path, subintervals, |p| field.gauge_gradient(p))
    };
    Ok(solenoid + gauge)
}

/// `∫ A·dr` with the whole potential, solenoid included, integrated by
/// quadrature. Independent of the angle-sum route used for winding numbers.
pub fn line_integral_quadrature(field: &GaugeField, path: &PlanarPath, subintervals: usize) -> Result<f64> {
    check_path_against_field(field, path, subintervals)?;
    Ok(quadrature(path, subintervals, |p| {
        let a = field.solenoid_potential(p);
        let g = field.gauge_gradient(p);
        [a[0] + g[0], a[1] + g[1]]
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbPhase {
    /// `(e/ħc)(∫₁A·dr − ∫₂A·dr)` from quadrature.
    pub phase: f64,
    /// Winding number of path 1 followed by reversed path 2.
    pub winding_difference: i64,
    /// `δn · eΦ/ħc`.
    pub predicted: f64,
}

/// Magnetic AB phase between two paths sharing endpoints, checked against
/// the winding-number law.
pub fn ab_phase_difference(
    path1: &PlanarPath,
    path2: &PlanarPath,
    field: &GaugeField,
    particle: &Particle,
    subintervals: usize,
) -> Result<AbPhase> {
    particle.validate()?;
    if !points_match(path1.start(), path2.start()) || !points_match(path1.end(), path2.end()) {
        return Err(Error::EndpointMismatch);
    }
    let coupling = particle.charge / (particle.hbar * particle.c);
    let i1 = line_integral_quadrature(field, path1, subintervals)?;
    let i2 = line_integral_quadrature(field, path2, subintervals)?;
    let phase = coupling * (i1 - i2);
    let winding_difference = winding_number(&path1.concat(&path2.reversed())?)?;
    let predicted = winding_difference as f64 * coupling * field.flux;
    if (phase - predicted).abs() > TOPOLOGY_TOLERANCE * predicted.abs().max(1.0) {
        return Err(Error::Inconsistent(format!(
            "AB phase {phase} disagrees with winding law {predicted} (dn = {winding_difference})"
        )));
    }
    Ok(AbPhase {
        phase,
        winding_difference,
        predicted,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathShift {
    pub index: usize,
    pub closed: bool,
    pub baseline: f64,
    pub max_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairShift {
    pub first: usize,
    pub second: usize,
    pub max_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeReport {
    pub trials: usize,
    pub paths: Vec<PathShift>,
    /// Differences of open paths sharing both endpoints.
    pub differences: Vec<PairShift>,
    /// Largest shift over closed loops and path differences.
    pub max_invariant_shift: f64,
    /// Largest shift over individual open paths.
    pub max_open_shift: f64,
    pub invariant: bool,
}

/// Draws a random gauge function of 1–4 bumps placed near `(lo, hi)`.
pub fn random_gauge_bumps(rng: &mut impl Rng, lo: Point, hi: Point) -> Vec<GaussianBump> {
    let count = rng.random_range(1..=4);
    (0..count)
        .map(|_| GaussianBump {
            amplitude: rng.random_range(-2.0..2.0),
            center: [rng.random_range(lo[0]..=hi[0]), rng.random_range(lo[1]..=hi[1])],
            width: rng.random_range(0.2..1.0),
        })
        .collect()
}

/// Line integrals under `trials` random single-valued gauge terms added to
/// `field`. Closed loops and same-endpoint differences must not move; single
/// open paths generally do.
pub fn gauge_invariance_report(
    field: &GaugeField,
    paths: &[PlanarPath],
    trials: usize,
    seed: u64,
    subintervals: usize,
) -> Result<GaugeReport> {
    let has_open = paths.iter().any(|p| !p.is_closed());
    let has_closed = paths.iter().any(PlanarPath::is_closed);
    if !(has_open && has_closed) {
        return Err(Error::InvalidParameter {
            name: "paths",
            reason: "need at least one open and one closed path".into(),
        });
    }
    let baseline = paths
        .iter()
        .map(|p| line_integral(field, p, subintervals))
        .collect::<Result<Vec<_>>>()?;

    let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
    for v in paths.iter().flat_map(|p| p.vertices.iter()) {
        for k in 0..2 {
            lo[k] = lo[k].min(v[k] - 0.5);
            hi[k] = hi[k].max(v[k] + 0.5);
        }
    }

    let pairs: Vec<(usize, usize)> = (0..paths.len())
        .flat_map(|i| (i + 1..paths.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| {
            let (a, b) = (&paths[i], &paths[j]);
            !a.is_closed()
                && !b.is_closed()
                && points_match(a.start(), b.start())
                && points_match(a.end(), b.end())
        })
        .collect();

    let mut path_shift = vec![0.0f64; paths.len()];
    let mut pair_shift = vec![0.0f64; pairs.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let mut bumps = field.bumps.clone();
        bumps.extend(random_gauge_bumps(&mut rng, lo, hi));
        let gauged = field.with_bumps(bumps);
        let values = paths
            .iter()
            .map(|p| line_integral(&gauged, p, subintervals))
            .collect::<Result<Vec<_>>>()?;
        for k in 0..paths.len() {
            path_shift[k] = path_shift[k].max((values[k] - baseline[k]).abs());
        }
        for (slot, &(i, j)) in pair_shift.iter_mut().zip(&pairs) {
            let shift = (values[i] - values[j]) - (baseline[i] - baseline[j]);
            *slot = slot.max(shift.abs());
        }
    }

    let path_entries: Vec<PathShift> = paths
        .iter()
        .enumerate()
        .map(|(index, p)| PathShift {
            index,
            closed: p.is_closed(),
            baseline: baseline[index],
            max_shift: path_shift[index],
        })
        .collect();
    let differences: Vec<PairShift> = pairs
        .iter()
        .zip(&pair_shift)
        .map(|(&(first, second), &max_shift)| PairShift {
            first,
            second,
            max_shift,
        })
        .collect();
    let max_invariant_shift = path_entries
        .iter()
        .filter(|e| e.closed)
        .map(|e| e.max_shift)
        .chain(differences.iter().map(|d| d.max_shift))
        .fold(0.0, f64::max);
    let max_open_shift = path_entries
        .iter()
        .filter(|e| !e.closed)
        .map(|e| e.max_shift)
        .fold(0.0, f64::max);
    Ok(GaugeReport {
        trials,
        paths: path_entries,
        differences,
        max_invariant_shift,
        max_open_shift,
        invariant: max_invariant_shift < TOPOLOGY_TOLERANCE,
    })
}

/// Rest-frame magnetic field `B = (p/mc) × E` of a moving magnetic moment.
pub fn ac_effective_field(particle: &Particle, momentum: Vec3, electric_field: Vec3) -> Vec3 {
    let scale = 1.0 / (particle.mass * particle.c);
    cross3(momentum, electric_field).map(|c| c * scale)
}
