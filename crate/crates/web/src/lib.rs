//! Browser demo for `ch2lab`.
//!
//! The [`Session`] type and the profile functions are plain Rust so they can be
//! tested natively. The `#[wasm_bindgen]` layer only converts errors.

use ch2lab::analysis::{hamiltonian, tail_mass, Window};
use ch2lab::cli::{build_initial, parse_config, ScenarioSpec};
use ch2lab::dynamics::{detect_breaking, step_rk4_with, CH2State, NonlocalRoute};
use ch2lab::grid::{Domain, Grid};
use ch2lab::helmholtz::{green_kernel, s_kernel};
use wasm_bindgen::prelude::*;

const PRESETS: [(&str, &str); 4] = [
    ("smooth", include_str!("../../core/scenarios/standard.cfg")),
    ("steep", include_str!("../../core/scenarios/breaking.cfg")),
    ("bump", include_str!("../../core/scenarios/bump.cfg")),
    ("twin", include_str!("../../core/scenarios/twin.cfg")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

fn preset(name: &str) -> Result<ScenarioSpec, String> {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| format!("unknown preset `{name}`"))?;
    parse_config(text).map_err(|e| e.to_string())
}

/// A running simulation driven one batch of steps at a time.
pub struct Session {
    state: CH2State,
    dt: f64,
    route: NonlocalRoute,
    threshold: f64,
    window: Window,
    halted: Option<String>,
}

impl Session {
    pub fn new(name: &str) -> Result<Self, String> {
        let spec = preset(name)?;
        let grid = Grid::with_scheme(spec.domain, spec.n, spec.derivative).map_err(|e| e.to_string())?;
        let state = build_initial(&spec, &grid).map_err(|e| e.to_string())?;
        let (x0, x1) = spec.window.unwrap_or_else(|| {
            let (l, r) = (spec.domain.left(), spec.domain.right());
            (l + 0.25 * (r - l), l + 0.75 * (r - l))
        });
        let window = Window::new(&grid, x0, x1).map_err(|e| e.to_string())?;
        Ok(Session { state, dt: spec.dt, route: spec.nonlocal, threshold: spec.breaking_threshold, window, halted: None })
    }

    /// Advances up to `steps` steps and returns the number taken.
    pub fn advance(&mut self, steps: usize) -> usize {
        let mut taken = 0;
        while taken < steps && self.halted.is_none() {
            match step_rk4_with(&self.state, self.dt, self.route) {
                Ok(next) => {
                    self.state = next;
                    taken += 1;
                    if let Some(ev) = detect_breaking(&self.state, self.threshold) {
                        self.halted = Some(format!("slope {:.1} at x = {:.3}", ev.slope, ev.x));
                    }
                }
                Err(e) => self.halted = Some(e.to_string()),
            }
        }
        taken
    }

    pub fn state(&self) -> &CH2State {
        &self.state
    }

    pub fn halted(&self) -> Option<&str> {
        self.halted.as_deref()
    }

    pub fn min_slope(&self) -> f64 {
        self.state.u.dx().argmin().1
    }

    pub fn tail_mass(&self) -> f64 {
        tail_mass(&self.state, &self.window)
    }

    pub fn window(&self) -> (f64, f64) {
        (self.window.x0, self.window.x1)
    }
}

fn domain(name: &str, half_length: f64) -> Result<Domain, String> {
    match name {
        "circle" => Ok(Domain::Circle),
        "line" => Domain::line(half_length).map_err(|e| e.to_string()),
        _ => Err(format!("unknown domain `{name}`")),
    }
}

fn sample_points(d: &Domain, points: usize) -> Vec<f64> {
    let (l, r) = (d.left(), d.right());
    (0..points).map(|i| l + (r - l) * i as f64 / (points.max(2) - 1) as f64).collect()
}

/// Interleaved `(x, g(x - c))` pairs across the domain.
pub fn kernel_profile(d: &Domain, center: f64, points: usize) -> Vec<f64> {
    sample_points(d, points).into_iter().flat_map(|x| [x, green_kernel(d, x - center)]).collect()
}

/// Interleaved `(y, S(a, b, y))` pairs across the domain.
pub fn s_profile(d: &Domain, a: f64, b: f64, points: usize) -> Result<Vec<f64>, String> {
    if a.is_nan() || b.is_nan() || a >= b {
        return Err("need a < b".into());
    }
    Ok(sample_points(d, points).into_iter().flat_map(|y| [y, s_kernel(d, a, b, y)]).collect())
}

#[wasm_bindgen]
pub fn presets() -> Vec<String> {
    preset_names().into_iter().map(String::from).collect()
}

#[wasm_bindgen]
pub struct Simulation(Session);

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(preset: &str) -> Result<Simulation, JsError> {
        Session::new(preset).map(Simulation).map_err(|e| JsError::new(&e))
    }

    pub fn advance(&mut self, steps: usize) -> usize {
        self.0.advance(steps)
    }

    pub fn x(&self) -> Vec<f64> {
        self.0.state().u.grid().nodes().to_vec()
    }

    pub fn u(&self) -> Vec<f64> {
        self.0.state().u.values().to_vec()
    }

    pub fn rho(&self) -> Vec<f64> {
        self.0.state().rho.values().to_vec()
    }

    pub fn time(&self) -> f64 {
        self.0.state().t
    }

    pub fn hamiltonian(&self) -> f64 {
        hamiltonian(self.0.state())
    }

    pub fn min_slope(&self) -> f64 {
        self.0.min_slope()
    }

    pub fn tail_mass(&self) -> f64 {
        self.0.tail_mass()
    }

    pub fn window(&self) -> Vec<f64> {
        let (a, b) = self.0.window();
        vec![a, b]
    }

    pub fn halted(&self) -> Option<String> {
        self.0.halted().map(String::from)
    }
}

#[wasm_bindgen(js_name = kernelProfile)]
pub fn kernel_profile_js(domain_name: &str, half_length: f64, center: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let d = domain(domain_name, half_length).map_err(|e| JsError::new(&e))?;
    Ok(kernel_profile(&d, center, points))
}

#[wasm_bindgen(js_name = sProfile)]
pub fn s_profile_js(domain_name: &str, half_length: f64, a: f64, b: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let d = domain(domain_name, half_length).map_err(|e| JsError::new(&e))?;
    s_profile(&d, a, b, points).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_builds() {
        for name in preset_names() {
            let mut s = Session::new(name).unwrap();
            assert_eq!(s.advance(3), 3, "{name}");
            assert!(s.state().is_finite());
        }
        assert!(Session::new("nope").is_err());
    }

    #[test]
    fn steep_preset_halts_on_breaking() {
        let mut s = Session::new("steep").unwrap();
        let taken = s.advance(5000);
        assert!(taken < 5000);
        assert!(s.halted().unwrap().starts_with("slope"));
        assert!(s.min_slope() <= -50.0);
        assert_eq!(s.advance(10), 0);
    }

    #[test]
    fn bump_spreads_outside_its_window() {
        let mut s = Session::new("bump").unwrap();
        assert_eq!(s.tail_mass(), 0.0);
        s.advance(100);
        assert!(s.tail_mass() > 1e-10, "{}", s.tail_mass());
    }

    #[test]
    fn profiles_are_interleaved_and_positive() {
        let c = Domain::Circle;
        let k = kernel_profile(&c, 0.5, 11);
        assert_eq!(k.len(), 22);
        assert_eq!(k[0], 0.0);
        assert!(k.chunks(2).all(|p| p[1] > 0.0));
        // peak sits at the center
        assert!(k[11] > k[1] && k[11] > k[21]);

        let s = s_profile(&c, 0.3, 0.6, 101).unwrap();
        for p in s.chunks(2) {
            if p[0] < 0.3 || p[0] > 0.6 {
                assert!(p[1] > 0.0, "{p:?}");
            }
        }
        assert!(s_profile(&c, 0.6, 0.3, 10).is_err());
        assert!(domain("line", -1.0).is_err());
    }
}
