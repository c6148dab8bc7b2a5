//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints its PASS/FAIL line; exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ch2lab::analysis::{
    conservation_residual, flux_identity_residual, hamiltonian, s_identity_residual, sandwich_check, tail_mass,
    vanishing_window_search, Window,
};
use ch2lab::cli::selftest::{kernel_integral, kernel_positivity_failures, round_trip_error, s_positivity_failures, SAMPLES};
use ch2lab::cli::{build_initial, parse_config, run_scenario, ScenarioSpec};
use ch2lab::dynamics::{simulate, step_rk4, CH2State, Sigma, SimulationConfig, SinkError, Termination};
use ch2lab::grid::{Domain, Field, Grid};
use ch2lab::helmholtz::{helmholtz_eigenvalue, helmholtz_inverse};

type Outcome = Result<String, String>;

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn scenario(name: &str) -> ScenarioSpec {
    let text = fs::read_to_string(scenario_dir().join(format!("{name}.cfg"))).expect("bundled scenario");
    parse_config(&text).expect("bundled scenario parses")
}

fn grid_of(spec: &ScenarioSpec) -> Arc<Grid> {
    Grid::with_scheme(spec.domain, spec.n, spec.derivative).expect("grid")
}

fn sim_config(spec: &ScenarioSpec) -> SimulationConfig {
    SimulationConfig {
        dt: spec.dt,
        t_max: spec.t_max,
        breaking_threshold: spec.breaking_threshold,
        record_every: spec.record_every,
        route: Some(spec.nonlocal),
    }
}

/// Runs `spec`, handing every recorded state to `visit`.
fn run_with(spec: &ScenarioSpec, mut visit: impl FnMut(&CH2State)) -> (CH2State, Termination) {
    let initial = build_initial(spec, &grid_of(spec)).expect("initial data");
    let mut sink = |_: usize, s: &CH2State| -> Result<(), SinkError> {
        visit(s);
        Ok(())
    };
    let out = simulate(&initial, &sim_config(spec), &mut sink).expect("simulation");
    (out.final_state, out.termination)
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn standard_snapshot(n: usize, t: f64) -> CH2State {
    let mut spec = scenario("standard");
    spec.n = n;
    spec.t_max = t;
    let (state, term) = run_with(&spec, |_| {});
    assert_eq!(term, Termination::Completed);
    state
}

/// Residual at n = 128, 256, 512 on the t = 0.5 standard snapshot; checks the
/// bound at 512 and order >= 1.9 on both refinements.
fn refinement(residual: impl Fn(&CH2State) -> f64, bound: f64) -> Outcome {
    let r: Vec<f64> = [128, 256, 512].iter().map(|&n| residual(&standard_snapshot(n, 0.5))).collect();
    let (o1, o2) = (order(r[0], r[1]), order(r[1], r[2]));
    let detail = format!(
        "residuals {:.3e}, {:.3e}, {:.3e} at n = 128, 256, 512; orders {o1:.2}, {o2:.2}",
        r[0], r[1], r[2]
    );
    if r[2] < bound && o1 >= 1.9 && o2 >= 1.9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn kernel_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut parts = Vec::new();
    let mut ok = true;
    for domain in [Domain::Circle, Domain::Line { half_length: 20.0 }] {
        let g_bad = kernel_positivity_failures(&domain, &mut rng, SAMPLES);
        let s_bad = s_positivity_failures(&domain, &mut rng, SAMPLES, false);
        let n = if domain.is_periodic() { 512 } else { 2048 };
        let mass = kernel_integral(domain, n).expect("grid");
        ok &= g_bad == 0 && s_bad == 0 && (mass - 1.0).abs() < 1e-4;
        parts.push(format!("{domain}: g<=0 at {g_bad}, S<=0 at {s_bad}, |∫g-1| = {:.2e}", (mass - 1.0).abs()));
    }
    let detail = parts.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn round_trip() -> Outcome {
    let e: Vec<f64> = [128, 256, 512].iter().map(|&n| round_trip_error(n).expect("grid")).collect();
    let (o1, o2) = (order(e[0], e[1]), order(e[1], e[2]));
    let detail = format!("relative errors {:.3e}, {:.3e}, {:.3e}; orders {o1:.2}, {o2:.2}", e[0], e[1], e[2]);
    if o1 >= 1.9 && o2 >= 1.9 && e[2] < 1e-4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn eigenfunction() -> Outcome {
    let grid = Grid::new(Domain::Circle, 512).expect("grid");
    let inv = helmholtz_inverse(&Field::from_fn(&grid, |x| (2.0 * PI * x).cos()));
    let err = grid
        .nodes()
        .iter()
        .zip(inv.values())
        .map(|(&x, v)| (v - (2.0 * PI * x).cos() / helmholtz_eigenvalue(1.0)).abs())
        .fold(0.0, f64::max);
    let detail = format!("max error {err:.3e}");
    if err < 1e-4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn max_drift(spec: &ScenarioSpec) -> f64 {
    let mut h0 = None;
    let mut worst: f64 = 0.0;
    run_with(spec, |s| {
        let h = hamiltonian(s);
        let base = *h0.get_or_insert(h);
        worst = worst.max((h - base).abs() / base);
    });
    worst
}

/// Same drift measure by direct stepping, for time steps above the CFL bound
/// of `simulate`.
fn raw_drift(dt: f64) -> f64 {
    let spec = scenario("standard");
    let mut s = build_initial(&spec, &grid_of(&spec)).expect("initial");
    let h0 = hamiltonian(&s);
    let steps = (spec.t_max / dt).round() as usize;
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        s = step_rk4(&s, dt).expect("step");
        worst = worst.max((hamiltonian(&s) - h0).abs() / h0);
    }
    worst
}

fn energy_conservation() -> Outcome {
    let spec = scenario("standard");
    let d1 = max_drift(&spec);
    let mut half = spec.clone();
    half.dt = spec.dt / 2.0;
    half.record_every = spec.record_every * 2;
    let d2 = max_drift(&half);
    let factor = d1 / d2;
    let (c1, c2) = (raw_drift(1e-2), raw_drift(5e-3));
    let detail = format!(
        "max relative drift {d1:.3e} (dt = 1e-3), {d2:.3e} (dt = 5e-4), halving factor {factor:.2} (needs >= 8); \
         for reference dt = 1e-2 vs 5e-3 gives {c1:.3e} vs {c2:.3e}, factor {:.1}",
        c1 / c2
    );
    if d1 < 1e-5 && d2 < 1e-5 && factor >= 8.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sandwich_everywhere() -> Outcome {
    let mut names: Vec<String> = fs::read_dir(scenario_dir())
        .expect("scenario dir")
        .filter_map(|e| {
            let p = e.ok()?.path();
            if p.extension()? != "cfg" {
                return None;
            }
            Some(p.file_stem()?.to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut skipped = Vec::new();
    for name in &names {
        let spec = scenario(name);
        if spec.sigma == Sigma::Twin {
            skipped.push(name.as_str());
            continue;
        }
        run_with(&spec, |s| {
            checked += 1;
            if !sandwich_check(s).ok {
                failures.push(format!("{name}@t={}", s.t));
            }
        });
    }
    let detail = format!(
        "{checked} records over {} scenarios, {} violations; sign-indefinite twin density skipped: {}",
        names.len() - skipped.len(),
        failures.len(),
        skipped.join(", ")
    );
    if failures.is_empty() && checked > 0 {
        Ok(detail)
    } else {
        Err(format!("{detail}; first: {}", failures[0]))
    }
}

fn s_identity() -> Outcome {
    refinement(
        |s| s_identity_residual(s, &Window::new(s.u.grid(), 0.2, 0.6).expect("window")),
        1e-3,
    )
}

fn ch_reduction() -> Outcome {
    let mut spec = scenario("ch_reduction");
    spec.record_every = 1;
    let mut nonzero = 0usize;
    let mut records = 0usize;
    let (last, term) = run_with(&spec, |s| {
        records += 1;
        nonzero += s.rho.values().iter().filter(|v| v.to_bits() != 0).count();
    });
    let detail = format!("{records} steps to t = {}, {nonzero} nonzero density entries ({})", last.t, term.label());
    if nonzero == 0 && term == Termination::Completed {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn compact_support_loss() -> Outcome {
    let spec = scenario("bump");
    let grid = grid_of(&spec);
    let w = Window::new(&grid, 0.3, 0.7).expect("window");
    let initial = build_initial(&spec, &grid).expect("initial");
    let tail0 = tail_mass(&initial, &w);
    let (last, term) = run_with(&spec, |_| {});
    let tail1 = tail_mass(&last, &w);
    let wide = vanishing_window_search(&last, 1e-8).into_iter().filter(|v| v.width() >= 0.05).count();
    let detail = format!(
        "tail mass {tail0:.3e} at t = 0, {tail1:.3e} at t = {}; {wide} vanishing windows of width >= 0.05 ({})",
        last.t,
        term.label()
    );
    if tail0.abs() <= 1e-14 && tail1 > 1e-10 && wide == 0 && (last.t - 0.05).abs() < 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn integrator_order() -> Outcome {
    let grid = Grid::new(Domain::Circle, 64).expect("grid");
    let s0 = CH2State::new(
        0.0,
        Field::from_fn(&grid, |x| 0.5 * (2.0 * PI * x).cos() + 0.2 * (4.0 * PI * x).sin()),
        Field::from_fn(&grid, |x| 0.3 + 0.2 * (2.0 * PI * x).sin()),
        Sigma::Ch2,
    )
    .expect("state");
    let diff = |a: &CH2State, b: &CH2State| {
        let du = a.u.zip_with(&b.u, |x, y| x - y).max_abs();
        du.max(a.rho.zip_with(&b.rho, |x, y| x - y).max_abs())
    };
    // One step of dt against two steps of dt/2.
    let richardson = |dt: f64| {
        let one = step_rk4(&s0, dt).expect("step");
        let two = step_rk4(&step_rk4(&s0, dt / 2.0).expect("step"), dt / 2.0).expect("step");
        diff(&one, &two)
    };
    let (l1, l2) = (richardson(0.02), richardson(0.01));
    let local = order(l1, l2) - 1.0;
    let run = |dt: f64| {
        let mut s = s0.clone();
        for _ in 0..(0.5 / dt).round() as usize {
            s = step_rk4(&s, dt).expect("step");
        }
        s
    };
    let reference = run(0.01 / 8.0);
    let (g1, g2) = (diff(&run(0.02), &reference), diff(&run(0.01), &reference));
    let global = order(g1, g2);
    let detail = format!(
        "one-step differences {l1:.3e}, {l2:.3e} (local order {local:.2}); final-state errors {g1:.3e}, {g2:.3e} (global order {global:.2})"
    );
    if local >= 4.0 && global >= 3.5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Outcome {
    let spec = scenario("standard");
    let dirs = [tempfile::tempdir().expect("tempdir"), tempfile::tempdir().expect("tempdir")];
    for d in &dirs {
        run_scenario(&spec, d.path()).map_err(|e| e.to_string())?;
    }
    let a = fs::read(dirs[0].path().join("diagnostics.csv")).map_err(|e| e.to_string())?;
    let b = fs::read(dirs[1].path().join("diagnostics.csv")).map_err(|e| e.to_string())?;
    let detail = format!("{} bytes each, identical = {}", a.len(), a == b);
    if a == b && !a.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("kernel suite", kernel_suite),
        ("helmholtz round trip", round_trip),
        ("eigenfunction", eigenfunction),
        ("energy conservation", energy_conservation),
        ("sandwich inequality", sandwich_everywhere),
        ("S-identity", s_identity),
        ("flux identity", || refinement(flux_identity_residual, 1e-3)),
        ("conservation-law identity", || refinement(conservation_residual, 1e-2)),
        ("CH reduction", ch_reduction),
        ("compact-support loss", compact_support_loss),
        ("time-integrator order", integrator_order),
        ("determinism", determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{:>2}] {name}: {detail} ({:.1}s)", i + 1, t.elapsed().as_secs_f64());
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
