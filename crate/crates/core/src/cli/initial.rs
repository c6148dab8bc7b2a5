use std::f64::consts::PI;
use std::sync::Arc;

use crate::cli::config::{FourierSeries, InitialData, Profile, ScenarioSpec};
use crate::dynamics::{boundary_magnitude, CH2State, DynamicsError, BOUNDARY_DECAY};
use crate::grid::{Domain, Field, Grid};

/// `A exp(1 - 1/(1 - s²))` for `|s| < 1`, `s = (x - c)/r`; exactly zero outside.
pub fn mollifier(x: f64, center: f64, radius: f64, amplitude: f64) -> f64 {
    let s = (x - center) / radius;
    if s.abs() < 1.0 {
        amplitude * (1.0 - 1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

fn series(s: &FourierSeries, x: f64) -> f64 {
    let c: f64 = s.cos.iter().map(|&(k, a)| a * (2.0 * PI * k as f64 * x).cos()).sum();
    let d: f64 = s.sin.iter().map(|&(k, a)| a * (2.0 * PI * k as f64 * x).sin()).sum();
    s.mean + c + d
}

/// Distance from `x` to `center`, taking the nearest periodic image on the circle.
fn offset(domain: &Domain, x: f64, center: f64) -> f64 {
    let d = x - center;
    if domain.is_periodic() {
        d - d.round()
    } else {
        d
    }
}

fn gaussian(domain: &Domain, p: &Profile, x: f64) -> f64 {
    if p.amplitude == 0.0 {
        return 0.0;
    }
    if domain.is_periodic() {
        // Sum of periodic images; |k| <= 8 is exhaustive for widths below 1.
        (-8..=8)
            .map(|k: i32| {
                let d = (x - p.center + k as f64) / p.width;
                (-d * d).exp()
            })
            .sum::<f64>()
            * p.amplitude
    } else {
        let d = (x - p.center) / p.width;
        p.amplitude * (-d * d).exp()
    }
}

/// Initial state at `t = 0`. Line data must have decayed below `1e-12` at
/// both boundary nodes.
pub fn build_initial(spec: &ScenarioSpec, grid: &Arc<Grid>) -> Result<CH2State, DynamicsError> {
    let domain = *grid.domain();
    let (u, rho) = match &spec.initial {
        InitialData::Zero => (Field::zeros(grid), Field::zeros(grid)),
        InitialData::Fourier { u, rho } => (Field::from_fn(grid, |x| series(u, x)), Field::from_fn(grid, |x| series(rho, x))),
        InitialData::Gaussian { u, rho } => (
            Field::from_fn(grid, |x| gaussian(&domain, u, x)),
            Field::from_fn(grid, |x| gaussian(&domain, rho, x)),
        ),
        InitialData::Bump { u, rho } => {
            let bump = |p: &Profile, x: f64| mollifier(offset(&domain, x, p.center), 0.0, p.width, p.amplitude);
            (Field::from_fn(grid, |x| bump(u, x)), Field::from_fn(grid, |x| bump(rho, x)))
        }
    };
    let state = CH2State::new(0.0, u, rho, spec.sigma)?;
    let edge = boundary_magnitude(&state);
    if edge >= BOUNDARY_DECAY {
        return Err(DynamicsError::BoundaryDecay(edge));
    }
    Ok(state)
}
