use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;

use proptest::prelude::*;

use ch2lab::analysis::{hamiltonian, sandwich_check};
use ch2lab::cli::{build_initial, parse_config, ScenarioSpec};
use ch2lab::dynamics::{simulate, step_rk4, CH2State, Sigma, SimulationConfig, SinkError, Termination};
use ch2lab::grid::{Domain, Field, Grid};

fn scenario(name: &str) -> ScenarioSpec {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.cfg"));
    parse_config(&fs::read_to_string(path).unwrap()).unwrap()
}

fn config(spec: &ScenarioSpec) -> SimulationConfig {
    SimulationConfig {
        dt: spec.dt,
        t_max: spec.t_max,
        breaking_threshold: spec.breaking_threshold,
        record_every: spec.record_every,
        route: Some(spec.nonlocal),
    }
}

fn run(spec: &ScenarioSpec, mut visit: impl FnMut(&CH2State)) -> (CH2State, Termination) {
    let grid = Grid::with_scheme(spec.domain, spec.n, spec.derivative).unwrap();
    let initial = build_initial(spec, &grid).unwrap();
    let mut sink = |_: usize, s: &CH2State| -> Result<(), SinkError> {
        visit(s);
        Ok(())
    };
    let out = simulate(&initial, &config(spec), &mut sink).unwrap();
    (out.final_state, out.termination)
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.zip_with(b, |x, y| x - y).max_abs()
}

#[test]
fn standard_scenario_conserves_energy() {
    let spec = scenario("standard");
    let mut h = Vec::new();
    let (last, term) = run(&spec, |s| h.push(hamiltonian(s)));
    assert_eq!(term, Termination::Completed);
    assert_eq!(last.t, 1.0);
    assert_eq!(h.len(), 101);
    let drift = h.iter().map(|v| (v - h[0]).abs() / h[0]).fold(0.0, f64::max);
    assert!(drift < 1e-5, "{drift:e}");
}

#[test]
fn steep_profile_breaks_before_t_max() {
    let spec = scenario("breaking");
    let mut slopes = Vec::new();
    let (_, term) = run(&spec, |s| slopes.push(s.u.dx().argmin().1));
    let Termination::Breaking { event } = term else { panic!("{term:?}") };
    assert!(event.t < 2.0 && event.slope <= -spec.breaking_threshold);
    assert!((slopes[0] + 8.0).abs() < 1e-9);
    assert!(slopes.windows(2).all(|w| w[1] < w[0]), "{slopes:?}");
}

#[test]
fn twin_sign_changes_the_solution() {
    let ch2 = scenario("standard");
    let twin = ScenarioSpec { sigma: Sigma::Twin, ..ch2.clone() };
    let short = |s: &ScenarioSpec| ScenarioSpec { t_max: 0.1, ..s.clone() };
    let (a, _) = run(&short(&ch2), |_| {});
    let (b, _) = run(&short(&twin), |_| {});
    assert!(a.is_finite() && b.is_finite());
    let d = max_diff(&a.u, &b.u).max(max_diff(&a.rho, &b.rho));
    assert!(d > 1e-6, "{d:e}");
}

#[test]
fn line_pulse_runs_with_quadrature_route() {
    let spec = scenario("line_gaussian");
    let mut ok = true;
    let (last, term) = run(&spec, |s| ok &= sandwich_check(s).ok);
    assert_eq!(term, Termination::Completed);
    assert!(ok);
    let n = last.u.len();
    assert!(last.u.values()[0].abs() < 1e-8 && last.u.values()[n - 1].abs() < 1e-8);
}

#[test]
fn global_error_is_fourth_order() {
    let g = Grid::new(Domain::Circle, 64).unwrap();
    let s0 = CH2State::new(
        0.0,
        Field::from_fn(&g, |x| 0.5 * (2.0 * PI * x).cos()),
        Field::from_fn(&g, |x| 0.2 * (2.0 * PI * x).sin()),
        Sigma::Ch2,
    )
    .unwrap();
    let to_half = |dt: f64| {
        let mut s = s0.clone();
        for _ in 0..(0.5 / dt).round() as usize {
            s = step_rk4(&s, dt).unwrap();
        }
        s
    };
    let reference = to_half(0.01 / 8.0);
    let e1 = max_diff(&to_half(0.02).u, &reference.u);
    let e2 = max_diff(&to_half(0.01).u, &reference.u);
    assert!((e1 / e2).log2() >= 3.5, "{e1:e} {e2:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn circle_translation_commutes_with_evolution(shift in 1usize..64, a in 0.05..0.3f64, b in -0.2..0.2f64) {
        let g = Grid::new(Domain::Circle, 64).unwrap();
        let u = Field::from_fn(&g, |x| a * (2.0 * PI * x).cos() + b * (4.0 * PI * x).sin());
        let rho = Field::from_fn(&g, |x| 0.1 + b * (2.0 * PI * x).sin());
        let rotate = |f: &Field| {
            let v = f.values();
            f.with_values((0..v.len()).map(|i| v[(i + v.len() - shift) % v.len()]).collect())
        };
        let cfg = SimulationConfig { dt: 2e-3, t_max: 0.05, record_every: 5, ..Default::default() };
        let mut plain = CH2State::new(0.0, u.clone(), rho.clone(), Sigma::Ch2).unwrap();
        let mut moved = CH2State::new(0.0, rotate(&u), rotate(&rho), Sigma::Ch2).unwrap();
        let mut noop = |_: usize, _: &CH2State| -> Result<(), SinkError> { Ok(()) };
        plain = simulate(&plain, &cfg, &mut noop).unwrap().final_state;
        moved = simulate(&moved, &cfg, &mut noop).unwrap().final_state;
        prop_assert!(max_diff(&rotate(&plain.u), &moved.u) < 1e-10);
        prop_assert!(max_diff(&rotate(&plain.rho), &moved.rho) < 1e-10);
    }

    #[test]
    fn zero_density_is_preserved_bitwise(a in -0.4..0.4f64, k in 1u32..4) {
        let g = Grid::new(Domain::Circle, 32).unwrap();
        let u = Field::from_fn(&g, |x| a * (2.0 * PI * k as f64 * x).sin());
        let s = CH2State::new(0.0, u, Field::zeros(&g), Sigma::Ch2).unwrap();
        let cfg = SimulationConfig { dt: 5e-3, t_max: 0.1, record_every: 1, ..Default::default() };
        let mut all_zero = true;
        let mut sink = |_: usize, st: &CH2State| -> Result<(), SinkError> {
            all_zero &= st.rho.values().iter().all(|v| v.to_bits() == 0);
            Ok(())
        };
        simulate(&s, &cfg, &mut sink).unwrap();
        prop_assert!(all_zero);
    }
}

#[test]
fn zero_state_is_a_bitwise_fixed_point() {
    let spec = scenario("zero");
    let (last, term) = run(&spec, |_| {});
    assert_eq!(term, Termination::Completed);
    assert!(last.u.values().iter().chain(last.rho.values()).all(|v| v.to_bits() == 0));
}
