//! Energy functionals, conservation-law residuals and the compact-support
//! probes evaluated on snapshots of a [`CH2State`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{nonlocal_source, rhs, rhs_with, CH2State, NonlocalRoute, Sigma, SinkError, StateSink};
use crate::grid::{Field, Grid};
use crate::helmholtz::{grad_helmholtz_inverse, s_kernel};

/// Slack allowed in the sandwich inequality and identity.
pub const SANDWICH_SLACK: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("window needs x0 < x1, got ({x0}, {x1})")]
    Reversed { x0: f64, x1: f64 },
    #[error("window ({x0}, {x1}) is narrower than 2h = {min}")]
    TooNarrow { x0: f64, x1: f64, min: f64 },
    #[error("window ({x0}, {x1}) leaves the domain [{left}, {right})")]
    OutOfDomain { x0: f64, x1: f64, left: f64, right: f64 },
}

/// One row of the diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub hamiltonian: f64,
    pub alt_hamiltonian: f64,
    pub f_integral: f64,
    pub min_slope: f64,
    pub flux_identity_residual: f64,
    pub divergence_residual: f64,
    pub tail_mass: f64,
    pub vanishing_window_count: usize,
}

/// Open interval `(x0, x1)` of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
}

impl Window {
    pub fn new(grid: &Grid, x0: f64, x1: f64) -> Result<Self, AnalysisError> {
        if !(x0 < x1) {
            return Err(AnalysisError::Reversed { x0, x1 });
        }
        let d = grid.domain();
        let (left, right) = (d.left(), d.right());
        let inside = if d.is_periodic() {
            x0 >= left && x1 < right
        } else {
            x0 >= left && x1 <= right
        };
        if !inside {
            return Err(AnalysisError::OutOfDomain { x0, x1, left, right });
        }
        let min = 2.0 * grid.h();
        if x1 - x0 < min * (1.0 - 1e-12) {
            return Err(AnalysisError::TooNarrow { x0, x1, min });
        }
        Ok(Window { x0, x1 })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.x0 < x && x < self.x1
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }
}

fn energy_density(u: &Field, ux: &Field, rho: impl Fn(f64) -> f64, rho_vals: &[f64]) -> Vec<f64> {
    u.values()
        .iter()
        .zip(ux.values())
        .zip(rho_vals)
        .map(|((&u, &ux), &r)| {
            let r = rho(r);
            0.5 * (u * u + ux * ux + r * r)
        })
        .collect()
}

/// `ℋ = ½∫(u² + u_x² + ρ²)`.
pub fn hamiltonian(state: &CH2State) -> f64 {
    let ux = state.u.dx();
    state.u.grid().quadrature(&energy_density(&state.u, &ux, |r| r, state.rho.values()))
}

/// `½∫(u² + u_x² + (ρ - 1)²)`.
pub fn alt_hamiltonian(state: &CH2State) -> f64 {
    let ux = state.u.dx();
    state.u.grid().quadrature(&energy_density(&state.u, &ux, |r| r - 1.0, state.rho.values()))
}

/// `f_t = u² + u_x²/2 + σρ²/2`. Non-negative for `σ = +1`; for the twin
/// system it is reported as is.
pub fn f_function(state: &CH2State) -> Field {
    nonlocal_source(&state.u, &state.u.dx(), &state.rho, state.sigma)
}

/// `F_t = ∂x Λ⁻² f_t` by direct quadrature.
#[allow(non_snake_case)]
pub fn F_function(state: &CH2State) -> Field {
    grad_helmholtz_inverse(&f_function(state))
}

/// Max node-wise `|F_t + u_t + u u_x|`, with `F_t` from quadrature and `u_t`
/// from the right-hand side as the stepper sees it.
pub fn flux_identity_residual(state: &CH2State) -> f64 {
    let big_f = F_function(state);
    let (du, _) = match rhs(state) {
        Ok(r) => r,
        Err(_) => return f64::NAN,
    };
    let ux = state.u.dx();
    (0..big_f.len())
        .map(|i| (big_f.values()[i] + du.values()[i] + state.u.values()[i] * ux.values()[i]).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich {
    pub hamiltonian: f64,
    pub f_integral: f64,
    pub ok: bool,
}

/// `ℋ ≤ ∫f_t ≤ 2ℋ` together with `ℋ + ½‖u‖² = ∫f_t`.
pub fn sandwich_check(state: &CH2State) -> Sandwich {
    let h = hamiltonian(state);
    let f_int = quadrature_of(&f_function(state));
    let half_l2 = 0.5 * state.u.grid().quadrature(&state.u.values().iter().map(|u| u * u).collect::<Vec<_>>());
    let ok = h <= f_int + SANDWICH_SLACK
        && f_int <= 2.0 * h + SANDWICH_SLACK
        && (h + half_l2 - f_int).abs() < SANDWICH_SLACK;
    Sandwich {
        hamiltonian: h,
        f_integral: f_int,
        ok,
    }
}

fn quadrature_of(f: &Field) -> f64 {
    f.grid().quadrature(f.values())
}

const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// `∫ S_{a,b}(y) f(y) dy` with `f` read by cubic interpolation and every cell
/// split at the kernel jumps `a`, `b`. `S` is smooth on each piece, so 5-point
/// Gauss-Legendre there leaves only the O(h⁴) interpolation error.
fn s_weighted_integral(f: &Field, a: f64, b: f64) -> f64 {
    let grid = f.grid();
    let domain = grid.domain();
    let (n, h) = (grid.n(), grid.h());
    let cells = if domain.is_periodic() { n } else { n - 1 };
    let mut total = 0.0;
    for j in 0..cells {
        let x0 = grid.nodes()[j];
        let x1 = x0 + h;
        let mut pts = [x0, x1, x1, x1];
        let mut m = 1;
        for c in [a, b] {
            if x0 < c && c < x1 {
                pts[m] = c;
                m += 1;
            }
        }
        pts[m] = x1;
        for k in 0..m {
            let (mid, half) = (0.5 * (pts[k] + pts[k + 1]), 0.5 * (pts[k + 1] - pts[k]));
            for (t, w) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                let y = mid + half * t;
                total += w * half * s_kernel(domain, a, b, y) * f.interpolate(y);
            }
        }
    }
    total
}

/// `|(F(b) - F(a)) - ∫ S_{a,b} f_t|` for the window `(a, b)`. `F` is read
/// off-grid by cubic interpolation.
pub fn s_identity_residual(state: &CH2State, w: &Window) -> f64 {
    let f = f_function(state);
    let big_f = grad_helmholtz_inverse(&f);
    let lhs = big_f.interpolate(w.x1) - big_f.interpolate(w.x0);
    let rhs = s_weighted_integral(&f, w.x0, w.x1);
    (lhs - rhs).abs()
}

/// Max node-wise `|∂tC⁰ + ∂xC¹|` with
/// `C⁰ = (u² + u_x² + ρ²)/2` and `C¹ = u³ - u²u_xx - u u_tx + uρ²`.
/// Time derivatives come from the quadrature right-hand side, so the result
/// is pure spatial discretization error.
pub fn conservation_residual(state: &CH2State) -> f64 {
    let (ut, rt) = match rhs_with(state, NonlocalRoute::Quadrature) {
        Ok(r) => r,
        Err(_) => return f64::NAN,
    };
    let ux = state.u.dx();
    let uxx = state.u.dxx();
    let utx = ut.dx();
    let (u, r) = (state.u.values(), state.rho.values());
    let c1: Vec<f64> = (0..u.len())
        .map(|i| u[i].powi(3) - u[i] * u[i] * uxx.values()[i] - u[i] * utx.values()[i] + u[i] * r[i] * r[i])
        .collect();
    let dc1 = state.u.with_values(c1).dx();
    (0..u.len())
        .map(|i| {
            let dc0 = u[i] * ut.values()[i] + ux.values()[i] * utx.values()[i] + r[i] * rt.values()[i];
            (dc0 + dc1.values()[i]).abs()
        })
        .fold(0.0, f64::max)
}

/// Maximal runs of at least three consecutive nodes (width ≥ 2h) where
/// `max(|u|, |ρ|) < tol`. Runs are not merged across the circle's seam.
pub fn vanishing_window_search(state: &CH2State, tol: f64) -> Vec<Window> {
    let (u, r) = (state.u.values(), state.rho.values());
    let nodes = state.u.grid().nodes();
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..=u.len() {
        let small = i < u.len() && u[i].abs().max(r[i].abs()) < tol;
        match (small, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s >= 3 {
                    out.push(Window {
                        x0: nodes[s],
                        x1: nodes[i - 1],
                    });
                }
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Quadrature of `f_t` over the nodes outside the open window.
pub fn tail_mass(state: &CH2State, w: &Window) -> f64 {
    let f = f_function(state);
    let grid = state.u.grid();
    grid.nodes()
        .iter()
        .enumerate()
        .filter(|(_, &x)| !w.contains(x))
        .map(|(i, _)| grid.weight(i) * f.values()[i])
        .sum()
}

/// Every diagnostic for one snapshot. Without a window `tail_mass` is 0.
pub fn diagnostics(state: &CH2State, window: Option<&Window>, tol: f64) -> DiagnosticsRecord {
    let sandwich = sandwich_check(state);
    DiagnosticsRecord {
        t: state.t,
        hamiltonian: sandwich.hamiltonian,
        alt_hamiltonian: alt_hamiltonian(state),
        f_integral: sandwich.f_integral,
        min_slope: state.u.dx().argmin().1,
        flux_identity_residual: flux_identity_residual(state),
        divergence_residual: conservation_residual(state),
        tail_mass: window.map_or(0.0, |w| tail_mass(state, w)),
        vanishing_window_count: vanishing_window_search(state, tol).len(),
    }
}

/// Collects a [`DiagnosticsRecord`] per recorded state. Sandwich failures
/// are counted for `σ = +1` only.
#[derive(Debug, Clone)]
pub struct DiagnosticsSink {
    pub window: Option<Window>,
    pub tol: f64,
    pub records: Vec<DiagnosticsRecord>,
    pub sandwich_failures: usize,
}

impl DiagnosticsSink {
    pub fn new(window: Option<Window>, tol: f64) -> Self {
        DiagnosticsSink {
            window,
            tol,
            records: Vec::new(),
            sandwich_failures: 0,
        }
    }

    pub fn push(&mut self, state: &CH2State) -> &DiagnosticsRecord {
        let rec = diagnostics(state, self.window.as_ref(), self.tol);
        if state.sigma == Sigma::Ch2 && !sandwich_check(state).ok {
            self.sandwich_failures += 1;
        }
        self.records.push(rec);
        self.records.last().expect("just pushed")
    }
}

impl StateSink for DiagnosticsSink {
    fn record(&mut self, _step: usize, state: &CH2State) -> Result<(), SinkError> {
        self.push(state);
        Ok(())
    }
}
