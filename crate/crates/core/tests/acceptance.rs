//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; the process fails if any
//! criterion fails.

use std::f64::consts::{PI, TAU};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use abspin::algebra::{expectation, pauli, Axis, SpinOperator, SpinState};
use abspin::correlation::{
    autocorrelation, autocorrelation_series, correlation_angle, torque_fluctuations, TORQUE_VARIANCE_NOTE,
};
use abspin::dynamics::{oracle_propagator, propagator, FieldProfile, FieldSegment, Particle, Rotation};
use abspin::gauge::{
    ab_phase_difference, gauge_invariance_report, line_integral_quadrature, random_gauge_bumps, GaugeField,
    PlanarPath,
};
use abspin::interferometer::{
    energy_independence_scan, run_mach_zehnder, sab_arms, scalar_reduction_check, ArmElement, PhaseRate,
};
use abspin::scenario::{parse_scenario, run_scenario};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn max_entry_error(op: &SpinOperator, scalar: f64) -> f64 {
    op.max_abs_diff(&SpinOperator::identity().scale(scalar))
}

/// Operator-built C(t), S(t) against cos(ωt)·1 and −sin(ωt)·1.
fn autocorrelation_closed_form() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rate: f64 = rng.random_range(0.05..5.0); // μB/ħ
        let wt: f64 = rng.random_range(0.0..=2.0 * TAU);
        let omega = 2.0 * rate;
        let t = wt / omega;
        let r = autocorrelation(&Particle::with_moment(rate), 1.0, t).map_err(|e| e.to_string())?;
        worst = worst
            .max(max_entry_error(&r.c, wt.cos()))
            .max(max_entry_error(&r.s, -wt.sin()));
    }
    let elapsed = started.elapsed().as_secs_f64();
    ensure(
        worst < 1e-10 && elapsed < 1.0,
        format!("100 pairs, max entry error {worst:.2e} (< 1e-10), {elapsed:.3} s (< 1 s)"),
    )
}

/// ϑ(τ) = 2δφ, with ϑ read from the autocorrelations and unwrapped.
fn correlation_angle_doubling() -> Outcome {
    let particle = Particle::with_moment(1.3);
    let field = 0.9;
    let taus: Vec<f64> = (1..=200).map(|k| 0.025 * k as f64).collect();
    let series =
        autocorrelation_series(&particle, field, &taus, &SpinState::up_z()).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for rec in &series {
        let dphi = 1.3 * field * rec.t;
        worst = worst.max((rec.theta - 2.0 * dphi).abs() / (2.0 * dphi));
        let direct = correlation_angle(&particle, field, rec.t).map_err(|e| e.to_string())?;
        worst = worst.max((direct.theta - 2.0 * dphi).abs() / (2.0 * dphi));
    }
    ensure(
        worst < 1e-12,
        format!(
            "{} taus up to ωτ = {:.1}, max relative error {worst:.2e} (< 1e-12)",
            taus.len(),
            2.0 * 1.3 * field * 5.0
        ),
    )
}

/// Torque moments in a σz = +1 state with B along z, and the diagnostic.
fn torque_moments() -> Outcome {
    let mut worst_mean: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    for (mu, b) in [(1.0, 1.0), (0.7, 2.5), (2.0, -0.3), (1.3, 10.0)] {
        let r = torque_fluctuations(&SpinState::up_z(), &Particle::with_moment(mu), [0.0, 0.0, b])
            .map_err(|e| e.to_string())?;
        let expected = (mu * b) * (mu * b);
        worst_mean = worst_mean.max(r.mean_lx.abs()).max(r.mean_ly.abs());
        worst_rel = worst_rel
            .max((r.mean_lx2 - expected).abs() / expected)
            .max((r.mean_ly2 - expected).abs() / expected);
    }
    let scenario = parse_scenario(
        "version = \"1\"\nexperiment = \"sab\"\n[beam]\nstate = \"sz+\"\n[[arm]]\n[[arm]]\n\
         [analyses.torque]\nfield = [0.0, 0.0, 2.0]\n",
    )
    .map_err(|e| e.to_string())?;
    let flagged = run_scenario(&scenario)
        .diagnostics
        .iter()
        .any(|d| d.code == TORQUE_VARIANCE_NOTE.code && d.message == TORQUE_VARIANCE_NOTE.message);
    ensure(
        worst_mean < 1e-14 && worst_rel < 1e-12 && flagged,
        format!("max |<L>| {worst_mean:.1e} (< 1e-14), max rel error of <L^2> {worst_rel:.1e} (< 1e-12), diagnostic flagged: {flagged}"),
    )
}

/// Phase difference of same-endpoint pairs equals δn·eΦ/ħc.
fn winding_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let particle = Particle {
        charge: 0.8,
        hbar: 1.1,
        c: 1.7,
        ..Particle::default()
    };
    let coupling = particle.charge / (particle.hbar * particle.c);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for dn in [0i64, 1, 2, -1] {
        for _ in 0..10 {
            let flux_point = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let flux: f64 = rng.random_range(-3.0..3.0);
            let (r0, r1) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
            let start = rng.random_range(0.0..TAU);
            let sweep: f64 = rng.random_range(-TAU..TAU);
            let path2 = PlanarPath::arc(flux_point, r0, r1, start, sweep, 80).map_err(|e| e.to_string())?;
            let mut path1 = PlanarPath::arc(flux_point, r0, r1, start, sweep + TAU * dn as f64, 160)
                .map_err(|e| e.to_string())?;
            let n = path1.vertices().len();
            // Interior wiggle keeps endpoints fixed and stays clear of the flux line.
            path1 = path1
                .perturbed(|k| {
                    if k == 0 || k + 1 == n {
                        [0.0, 0.0]
                    } else {
                        [0.05 * (k as f64).sin(), 0.05 * (k as f64 * 0.7).cos()]
                    }
                })
                .map_err(|e| e.to_string())?;
            let lo = [flux_point[0] - 3.0, flux_point[1] - 3.0];
            let hi = [flux_point[0] + 3.0, flux_point[1] + 3.0];
            let field =
                GaugeField::solenoid(flux, flux_point).with_bumps(random_gauge_bumps(&mut rng, lo, hi));
            let i1 = line_integral_quadrature(&field, &path1, 24).map_err(|e| e.to_string())?;
            let i2 = line_integral_quadrature(&field, &path2, 24).map_err(|e| e.to_string())?;
            let phase = coupling * (i1 - i2);
            let expected = dn as f64 * coupling * flux;
            worst = worst.max((phase - expected).abs());
            let reported =
                ab_phase_difference(&path1, &path2, &field, &particle, 24).map_err(|e| e.to_string())?;
            if reported.winding_difference != dn {
                return Err(format!(
                    "winding difference {} for constructed δn = {dn}",
                    reported.winding_difference
                ));
            }
            count += 1;
        }
    }
    ensure(
        worst < 1e-9,
        format!("{count} pairs with δn in {{0, 1, 2, -1}}, max |phase - δn eΦ/ħc| {worst:.2e} (< 1e-9)"),
    )
}

/// Closed loops and same-endpoint differences are gauge invariant; single
/// open paths are not.
fn gauge_dichotomy() -> Outcome {
    let flux_point = [0.2, -0.1];
    let field = GaugeField::solenoid(1.3, flux_point);
    let e = |r: abspin::error::Result<PlanarPath>| r.map_err(|e| e.to_string());
    let paths = vec![
        e(PlanarPath::circle([0.0, 0.0], 1.5, 64, 1, flux_point))?,
        e(PlanarPath::circle([0.5, 0.5], 2.0, 48, -2, flux_point))?,
        e(PlanarPath::new(
            vec![[3.0, 3.0], [4.0, 3.0], [4.0, 4.0], [3.0, 3.0]],
            flux_point,
        ))?,
        e(PlanarPath::arc(flux_point, 1.0, 1.4, 0.3, PI, 64))?,
        e(PlanarPath::arc(flux_point, 1.0, 1.4, 0.3, PI - TAU, 64))?,
        e(PlanarPath::new(
            vec![[-2.0, -2.0], [-1.0, -2.5], [0.5, -2.0]],
            flux_point,
        ))?,
    ];
    let report = gauge_invariance_report(&field, &paths, 25, 2024, 32).map_err(|e| e.to_string())?;
    ensure(
        report.trials >= 20 && report.max_invariant_shift < 1e-9 && report.max_open_shift > 1e-3,
        format!(
            "{} trials, max closed/difference shift {:.2e} (< 1e-9), max open-path shift {:.2e} (> 1e-3)",
            report.trials, report.max_invariant_shift, report.max_open_shift
        ),
    )
}

/// Full spin Hamiltonian and scalar substitution agree for σz = +1.
fn scalar_reduction() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for k in 0..=60 {
        let b_tau = -6.0 + 0.2 * k as f64;
        let particle = Particle::with_moment(0.9);
        let r =
            scalar_reduction_check(b_tau, 1.0, &particle, &SpinState::up_z()).map_err(|e| e.to_string())?;
        worst = worst
            .max((r.full.i1 - r.scalar.i1).abs())
            .max((r.full.i2 - r.scalar.i2).abs());
        let half = 0.9 * b_tau / 2.0;
        worst_oracle = worst_oracle.max((r.full.i1 - half.cos().powi(2)).abs());
    }
    ensure(
        worst < 1e-12 && worst_oracle < 1e-12,
        format!("61 Bτ values, max |full - scalar| {worst:.2e} (< 1e-12), max deviation from cos²(δφ/2) {worst_oracle:.2e}"),
    )
}

/// The fringe phase does not move with kinetic energy at fixed τ.
fn energy_independence() -> Outcome {
    let particle = Particle::default();
    let energies: Vec<f64> = (0..=18).map(|k| 1.0 + 0.5 * k as f64).collect();
    let tau = 1.4;
    let (sab1, sab2) = sab_arms(0.6, tau);
    let optical = vec![ArmElement::OpticalPhase {
        profile: vec![PhaseRate {
            rate: 0.6,
            duration: tau,
        }],
    }];
    let mut spreads = Vec::new();
    for (beam, arm1, arm2) in [
        (SpinState::up_z(), &sab1, &sab2),
        (SpinState::eigenstate(Axis::Z, false), &sab1, &sab2),
        (SpinState::up_z(), &optical, &sab2),
    ] {
        let phases =
            energy_independence_scan(arm1, arm2, &beam, &particle, &energies).map_err(|e| e.to_string())?;
        let (lo, hi) = phases
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        spreads.push(hi - lo);
    }
    let worst = spreads.iter().cloned().fold(0.0, f64::max);
    ensure(
        worst < 1e-12,
        format!(
            "E from {} to {} (factor 10), max spread {worst:.2e} (< 1e-12) over SAB ±z and optical arms",
            energies[0],
            energies[energies.len() - 1]
        ),
    )
}

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

/// I₁ + I₂ = 1 for the scenario corpus and random arm configurations.
fn probability_conservation() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    let mut entries: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .map_err(|e| e.to_string())?
        .map(|e| e.map(|e| e.path()).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    entries.sort();
    for path in entries
        .iter()
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
    {
        let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        let scenario = parse_scenario(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let Some((a1, a2)) = scenario.arms() else { continue };
        let beam = scenario.beam.spin_state().map_err(|e| e.to_string())?;
        let out = run_mach_zehnder(a1, a2, &beam, &scenario.particle).map_err(|e| e.to_string())?;
        worst = worst.max((out.i1 + out.i2 - 1.0).abs());
        runs += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut unit = |rng: &mut ChaCha8Rng| {
        let v: [f64; 3] = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        v.map(|c| c / n)
    };
    for k in 0..200 {
        let arm = |rng: &mut ChaCha8Rng, unit: &mut dyn FnMut(&mut ChaCha8Rng) -> [f64; 3]| {
            vec![
                ArmElement::field_pulse(rng.random_range(-3.0..3.0), unit(rng), rng.random_range(0.0..2.0)),
                ArmElement::ShieldedPotential {
                    delta_v: rng.random_range(-2.0..2.0),
                    duration: rng.random_range(0.0..1.0),
                },
            ]
        };
        let a1 = arm(&mut rng, &mut unit);
        let a2 = arm(&mut rng, &mut unit);
        let beam = if k % 4 == 0 {
            SpinState::unpolarized()
        } else {
            let r: f64 = rng.random_range(0.0..=1.0);
            SpinState::from_bloch(unit(&mut rng).map(|c| c * r)).map_err(|e| e.to_string())?
        };
        let out = run_mach_zehnder(&a1, &a2, &beam, &Particle::default()).map_err(|e| e.to_string())?;
        worst = worst.max((out.i1 + out.i2 - 1.0).abs());
        runs += 1;
    }
    ensure(
        worst < 1e-12,
        format!("{runs} configurations (corpus + random, incl. unpolarized and tilted fields), max |I1 + I2 - 1| {worst:.2e} (< 1e-12)"),
    )
}

/// Midpoint propagator error falls by ~4 per halving of the slice width
/// when the field direction turns during a segment.
fn oracle_convergence() -> Outcome {
    let particle = Particle::with_moment(0.8);
    let profile = FieldProfile::new(vec![
        FieldSegment::rotating(
            1.2,
            [0.0, 0.6, 0.8],
            1.5,
            Rotation {
                axis: [1.0, 0.0, 0.0],
                rate: 3.0,
            },
        ),
        FieldSegment::constant(0.5, [1.0, 0.0, 0.0], 0.4),
        FieldSegment::rotating(
            0.9,
            [1.0, 0.0, 0.0],
            1.0,
            Rotation {
                axis: [0.0, 0.6, 0.8],
                rate: -2.0,
            },
        ),
    ])
    .map_err(|e| e.to_string())?;
    let exact = propagator(&particle, &profile).map_err(|e| e.to_string())?;
    let steps = [16usize, 32, 64, 128, 256, 512];
    let errors = steps
        .iter()
        .map(|&n| oracle_propagator(&particle, &profile, n).map(|u| u.max_abs_diff(&exact)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let ok = ratios.iter().all(|r| (3.5..=4.5).contains(r));
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    ensure(
        ok,
        format!(
            "steps {steps:?}, error ratios per doubling [{}] (each in [3.5, 4.5])",
            shown.join(", ")
        ),
    )
}

/// ⟨σx²⟩ = ⟨σy²⟩ = 1 for every state, so σx = σy = 0 cannot hold.
fn transverse_impossibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let sx2 = pauli(Axis::X) * pauli(Axis::X);
    let sy2 = pauli(Axis::Y) * pauli(Axis::Y);
    let (mut min_x, mut min_y, mut max_dev): (f64, f64, f64) = (f64::MAX, f64::MAX, 0.0);
    for _ in 0..1000 {
        // ρ = A A† / tr(A A†) with Gaussian-free uniform entries.
        let mut entries = [[Complex64::new(0.0, 0.0); 2]; 2];
        for row in entries.iter_mut() {
            for z in row.iter_mut() {
                *z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
        let a = SpinOperator::new(entries);
        let aa = a * a.adjoint();
        let rho = aa.scale(1.0 / aa.trace().re);
        let state = SpinState::mixed(rho).map_err(|e| e.to_string())?;
        let x = expectation(&state, &sx2).map_err(|e| e.to_string())?;
        let y = expectation(&state, &sy2).map_err(|e| e.to_string())?;
        min_x = min_x.min(x);
        min_y = min_y.min(y);
        max_dev = max_dev.max((x - 1.0).abs()).max((y - 1.0).abs());
    }
    let eigen_exact = Axis::ALL
        .iter()
        .all(|&axis| pauli(axis).hermitian_eigenvalues() == Ok([1.0, -1.0]));
    ensure(
        max_dev < 1e-12 && eigen_exact,
        format!("1000 mixed states, min <σx²> = {min_x:.15}, min <σy²> = {min_y:.15}, max |·-1| {max_dev:.1e} (< 1e-12), Pauli spectra exactly {{+1, -1}}: {eigen_exact}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("autocorrelation closed form", autocorrelation_closed_form),
        (
            "correlation angle is twice the phase shift",
            correlation_angle_doubling,
        ),
        ("torque moments (μB)² with diagnostic", torque_moments),
        ("winding-number law for AB phase", winding_law),
        ("gauge dichotomy", gauge_dichotomy),
        ("scalar reduction of SAB intensities", scalar_reduction),
        ("energy independence of the phase", energy_independence),
        ("probability conservation I1 + I2 = 1", probability_conservation),
        ("second-order oracle convergence", oracle_convergence),
        ("transverse spin condition impossible", transverse_impossibility),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", k + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL {name}: {detail}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
