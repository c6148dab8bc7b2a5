//! Time evolution of the two-component Camassa–Holm system in nonlocal form,
//!
//! ```text
//! u_t + u u_x = -∂x Λ⁻² (u² + u_x²/2 + σ ρ²/2)
//! ρ_t + (u ρ)_x = 0
//! ```
//!
//! with `σ = +1` for CH2 and `σ = -1` for its twin system. The method-of-lines
//! system is advanced with classical fixed-step RK4.

use std::error::Error as StdError;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Domain, Field, GridError};
use crate::helmholtz::{grad_helmholtz_inverse, grad_helmholtz_inverse_fourier, helmholtz_apply, HelmholtzError};

pub type SinkError = Box<dyn StdError + Send + Sync>;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("non-finite values in the right-hand side at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("initial data not decayed at the line boundary: max |value| = {0:e} (needs < 1e-12)")]
    BoundaryDecay(f64),
    #[error(transparent)]
    Helmholtz(#[from] HelmholtzError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("diagnostics sink failed: {0}")]
    Sink(SinkError),
}

/// Coefficient of the `ρρ_x` coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sigma {
    /// `σ = +1`, the CH2 system.
    Ch2,
    /// `σ = -1`, the twin system.
    Twin,
}

impl Sigma {
    pub fn value(self) -> f64 {
        match self {
            Sigma::Ch2 => 1.0,
            Sigma::Twin => -1.0,
        }
    }

    pub fn from_sign(s: i32) -> Option<Self> {
        match s {
            1 => Some(Sigma::Ch2),
            -1 => Some(Sigma::Twin),
            _ => None,
        }
    }
}

/// How the nonlocal term `∂x Λ⁻² f` is evaluated inside the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonlocalRoute {
    /// `D (1 - D²)⁻¹` with the grid's own discrete derivative (circle only).
    /// The semi-discrete system then conserves the discrete energy up to
    /// aliasing, so energy drift is controlled by the time step.
    Fourier,
    /// Direct O(n²) convolution with the closed-form `g'`.
    Quadrature,
}

impl NonlocalRoute {
    pub fn default_for(domain: &Domain) -> Self {
        if domain.is_periodic() {
            NonlocalRoute::Fourier
        } else {
            NonlocalRoute::Quadrature
        }
    }

    pub fn apply(self, f: &Field) -> Result<Field, HelmholtzError> {
        match self {
            NonlocalRoute::Fourier => grad_helmholtz_inverse_fourier(f),
            NonlocalRoute::Quadrature => Ok(grad_helmholtz_inverse(f)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CH2State {
    pub t: f64,
    pub u: Field,
    pub rho: Field,
    pub sigma: Sigma,
}

impl CH2State {
    pub fn new(t: f64, u: Field, rho: Field, sigma: Sigma) -> Result<Self, DynamicsError> {
        if !u.same_grid(&rho) {
            return Err(DynamicsError::InvalidState("u and rho live on different grids".into()));
        }
        if !(t.is_finite() && t >= 0.0) {
            return Err(DynamicsError::InvalidState(format!("time must be finite and >= 0, got {t}")));
        }
        Ok(CH2State { t, u, rho, sigma })
    }

    pub fn zero(grid: &std::sync::Arc<crate::grid::Grid>, sigma: Sigma) -> Self {
        CH2State {
            t: 0.0,
            u: Field::zeros(grid),
            rho: Field::zeros(grid),
            sigma,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.rho.is_finite()
    }
}

/// `m = u - u_xx`.
pub fn momentum(u: &Field) -> Field {
    helmholtz_apply(u)
}

/// The argument of the nonlocal term, `u² + u_x²/2 + σρ²/2`.
pub(crate) fn nonlocal_source(u: &Field, ux: &Field, rho: &Field, sigma: Sigma) -> Field {
    let s = 0.5 * sigma.value();
    let vals = u
        .values()
        .iter()
        .zip(ux.values())
        .zip(rho.values())
        .map(|((&u, &ux), &r)| u * u + 0.5 * ux * ux + s * r * r)
        .collect();
    u.with_values(vals)
}

/// Time derivatives `(u_t, ρ_t)` using the domain's default nonlocal route.
pub fn rhs(state: &CH2State) -> Result<(Field, Field), DynamicsError> {
    rhs_with(state, NonlocalRoute::default_for(state.u.grid().domain()))
}

pub fn rhs_with(state: &CH2State, route: NonlocalRoute) -> Result<(Field, Field), DynamicsError> {
    let ux = state.u.dx();
    let source = nonlocal_source(&state.u, &ux, &state.rho, state.sigma);
    let nonlocal = route.apply(&source)?;
    let du = state
        .u
        .values()
        .iter()
        .zip(ux.values())
        .zip(nonlocal.values())
        .map(|((&u, &ux), &p)| -u * ux - p)
        .collect();
    let flux = state.u.zip_with(&state.rho, |u, r| u * r);
    let drho = flux.dx().map(|v| -v);
    let du = state.u.with_values(du);
    if !(du.is_finite() && drho.is_finite()) {
        return Err(DynamicsError::NonFinite { t: state.t });
    }
    Ok((du, drho))
}

fn axpy(base: &Field, scale: f64, dir: &Field) -> Field {
    base.zip_with(dir, |b, d| b + scale * d)
}

/// One classical RK4 step with the default route.
pub fn step_rk4(state: &CH2State, dt: f64) -> Result<CH2State, DynamicsError> {
    step_rk4_with(state, dt, NonlocalRoute::default_for(state.u.grid().domain()))
}

pub fn step_rk4_with(state: &CH2State, dt: f64, route: NonlocalRoute) -> Result<CH2State, DynamicsError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(DynamicsError::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    let stage = |u: Field, rho: Field, t: f64| CH2State {
        t,
        u,
        rho,
        sigma: state.sigma,
    };
    let (k1u, k1r) = rhs_with(state, route)?;
    let s2 = stage(axpy(&state.u, 0.5 * dt, &k1u), axpy(&state.rho, 0.5 * dt, &k1r), state.t + 0.5 * dt);
    let (k2u, k2r) = rhs_with(&s2, route)?;
    let s3 = stage(axpy(&state.u, 0.5 * dt, &k2u), axpy(&state.rho, 0.5 * dt, &k2r), state.t + 0.5 * dt);
    let (k3u, k3r) = rhs_with(&s3, route)?;
    let s4 = stage(axpy(&state.u, dt, &k3u), axpy(&state.rho, dt, &k3r), state.t + dt);
    let (k4u, k4r) = rhs_with(&s4, route)?;
    let combine = |y: &Field, k1: &Field, k2: &Field, k3: &Field, k4: &Field| {
        let vals = (0..y.len())
            .map(|i| {
                let incr = k1.values()[i] + 2.0 * k2.values()[i] + 2.0 * k3.values()[i] + k4.values()[i];
                y.values()[i] + dt / 6.0 * incr
            })
            .collect();
        y.with_values(vals)
    };
    let next = stage(
        combine(&state.u, &k1u, &k2u, &k3u, &k4u),
        combine(&state.rho, &k1r, &k2r, &k3r, &k4r),
        state.t + dt,
    );
    if !next.is_finite() {
        return Err(DynamicsError::NonFinite { t: next.t });
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Breaking is reported once `min u_x <= -breaking_threshold`.
    pub breaking_threshold: f64,
    pub record_every: usize,
    /// `None` picks the domain default.
    pub route: Option<NonlocalRoute>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            dt: 1e-3,
            t_max: 1.0,
            breaking_threshold: 50.0,
            record_every: 10,
            route: None,
        }
    }
}

/// Upper bound on `dt`: `0.5 h / max(1, max|u₀|)`.
pub fn cfl_limit(u0: &Field) -> f64 {
    0.5 * u0.grid().h() / u0.max_abs().max(1.0)
}

impl SimulationConfig {
    pub fn validate(&self, initial: &CH2State) -> Result<(), DynamicsError> {
        let bad = |msg: String| Err(DynamicsError::InvalidConfig(msg));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if self.dt >= self.t_max {
            return bad(format!("dt = {} must be smaller than t_max = {}", self.dt, self.t_max));
        }
        if !(self.breaking_threshold.is_finite() && self.breaking_threshold > 0.0) {
            return bad(format!("breaking_threshold must be positive, got {}", self.breaking_threshold));
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        if self.route == Some(NonlocalRoute::Fourier) && !initial.u.grid().domain().is_periodic() {
            return bad("the fourier nonlocal route needs the circle domain".into());
        }
        Ok(())
    }

    /// The advisory CFL bound when `dt` exceeds it. Not enforced.
    pub fn cfl_excess(&self, initial: &CH2State) -> Option<f64> {
        let limit = cfl_limit(&initial.u);
        (self.dt > limit).then_some(limit)
    }

    pub fn route_for(&self, domain: &Domain) -> NonlocalRoute {
        self.route.unwrap_or_else(|| NonlocalRoute::default_for(domain))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakingEvent {
    pub t: f64,
    /// Node where `u_x` is smallest.
    pub x: f64,
    pub slope: f64,
}

pub fn detect_breaking(state: &CH2State, threshold: f64) -> Option<BreakingEvent> {
    let (i, slope) = state.u.dx().argmin();
    (slope <= -threshold).then(|| BreakingEvent {
        t: state.t,
        x: state.u.grid().nodes()[i],
        slope,
    })
}

/// Largest boundary magnitude of the fields on a line grid (0 on the circle).
pub fn boundary_magnitude(state: &CH2State) -> f64 {
    if state.u.grid().domain().is_periodic() {
        return 0.0;
    }
    let n = state.u.len();
    [state.u.values(), state.rho.values()]
        .iter()
        .flat_map(|v| [v[0], v[n - 1]])
        .fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// Line data must be below this magnitude at both ends.
pub const BOUNDARY_DECAY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    Breaking { event: BreakingEvent },
    BlowUp { t: f64 },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::Breaking { .. } => "breaking",
            Termination::BlowUp { .. } => "blow-up",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationSummary {
    /// Last valid state.
    pub final_state: CH2State,
    pub steps: usize,
    pub termination: Termination,
}

/// Receives states at the recording cadence.
pub trait StateSink {
    fn record(&mut self, step: usize, state: &CH2State) -> Result<(), SinkError>;
}

impl<F> StateSink for F
where
    F: FnMut(usize, &CH2State) -> Result<(), SinkError>,
{
    fn record(&mut self, step: usize, state: &CH2State) -> Result<(), SinkError> {
        self(step, state)
    }
}

/// Steps from `initial.t` to `t_max`, stopping early on breaking or
/// non-finite values. The sink sees step 0, every `record_every`-th step and
/// the final state.
pub fn simulate(
    initial: &CH2State,
    config: &SimulationConfig,
    sink: &mut dyn StateSink,
) -> Result<SimulationSummary, DynamicsError> {
    config.validate(initial)?;
    let boundary = boundary_magnitude(initial);
    if boundary >= BOUNDARY_DECAY {
        return Err(DynamicsError::BoundaryDecay(boundary));
    }
    let route = config.route_for(initial.u.grid().domain());
    let total = ((config.t_max - initial.t) / config.dt - 1e-9).ceil().max(0.0) as usize;
    let t0 = initial.t;

    let mut state = initial.clone();
    sink.record(0, &state).map_err(DynamicsError::Sink)?;
    let mut last_recorded = 0;
    if let Some(event) = detect_breaking(&state, config.breaking_threshold) {
        return Ok(SimulationSummary {
            final_state: state,
            steps: 0,
            termination: Termination::Breaking { event },
        });
    }

    let mut termination = Termination::Completed;
    let mut steps = 0;
    for step in 1..=total {
        let target = if step == total { config.t_max } else { t0 + step as f64 * config.dt };
        let dt = target - state.t;
        match step_rk4_with(&state, dt, route) {
            Ok(mut next) => {
                next.t = target;
                state = next;
                steps = step;
            }
            Err(DynamicsError::NonFinite { t }) => {
                termination = Termination::BlowUp { t };
                break;
            }
            Err(e) => return Err(e),
        }
        if let Some(event) = detect_breaking(&state, config.breaking_threshold) {
            termination = Termination::Breaking { event };
            break;
        }
        if step % config.record_every == 0 {
            sink.record(step, &state).map_err(DynamicsError::Sink)?;
            last_recorded = step;
        }
    }
    if last_recorded != steps {
        sink.record(steps, &state).map_err(DynamicsError::Sink)?;
    }
    Ok(SimulationSummary {
        final_state: state,
        steps,
        termination,
    })
}
