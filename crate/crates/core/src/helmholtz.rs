//! Green's kernels of the Helmholtz operator `1 - d²/dx²` and the nonlocal
//! operators built from them.
//!
//! On the real line the kernel is `e^{-|x|}/2`; on the unit circle it is the
//! periodic profile `cosh(x - floor(x) - 1/2) / (2 sinh(1/2))`. Both are
//! strictly positive and integrate to one.
//!
//! Two discretizations of the inverse are provided:
//!
//! * the quadrature route ([`helmholtz_inverse`], [`grad_helmholtz_inverse`])
//!   sums the closed-form kernel against the samples with the grid's
//!   quadrature weights. It is second-order accurate because the kernel has a
//!   corner (and its derivative a jump) at the origin;
//! * the Fourier route ([`helmholtz_inverse_fourier`],
//!   [`grad_helmholtz_inverse_fourier`]) inverts `1 - D²` exactly in terms of
//!   the grid's own discrete derivative `D`, on the circle only.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use thiserror::Error;

use crate::grid::{Domain, Field, Grid, GridError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HelmholtzError {
    #[error("the Fourier route needs a periodic domain")]
    NotPeriodic,
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn sinh_half() -> f64 {
    0.5f64.sinh()
}

/// Position inside the unit cell, shifted to `[-1/2, 1/2)`.
fn centered_fraction(x: f64) -> f64 {
    x - x.floor() - 0.5
}

/// Closed-form Green's kernel `g(x)`.
pub fn green_kernel(domain: &Domain, x: f64) -> f64 {
    match domain {
        Domain::Line { .. } => 0.5 * (-x.abs()).exp(),
        Domain::Circle => centered_fraction(x).cosh() / (2.0 * sinh_half()),
    }
}

/// Closed-form `g'(x)`.
///
/// At the jump (`x = 0` on the line, integer `x` on the circle) the line
/// returns the average of the one-sided limits, 0, and the circle returns the
/// formula value, which is the right limit `-1/2`.
pub fn green_kernel_derivative(domain: &Domain, x: f64) -> f64 {
    match domain {
        Domain::Line { .. } => {
            if x == 0.0 {
                0.0
            } else {
                -0.5 * x.signum() * (-x.abs()).exp()
            }
        }
        Domain::Circle => centered_fraction(x).sinh() / (2.0 * sinh_half()),
    }
}

/// Difference kernel `S_{a,b}(y) = g'(b - y) - g'(a - y)`, evaluated through
/// its two-branch closed form. Strictly positive for `y` outside `[a, b]`.
///
/// Requires `a < b`, and `0 <= a < b < 1` on the circle.
pub fn s_kernel(domain: &Domain, a: f64, b: f64, y: f64) -> f64 {
    debug_assert!(a < b, "s_kernel needs a < b");
    match domain {
        Domain::Line { .. } => {
            let term = |d: f64| 0.5 * sign(d) * (-d.abs()).exp();
            term(a - y) - term(b - y)
        }
        Domain::Circle => {
            let term = |d: f64| centered_fraction(d).sinh() / (2.0 * sinh_half());
            term(b - y) - term(a - y)
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Kernel samples `g(d h)` and `g'(d h)` over every node displacement `d`,
/// built once per grid. The circle stores `d = 0..n` (periodic); the line
/// stores `d = -(n-1)..=(n-1)` with the zero displacement at index `n - 1`.
/// `g'` at zero displacement holds the average of its one-sided limits, 0.
#[derive(Debug, Clone)]
pub struct KernelTable {
    periodic: bool,
    n: usize,
    g: Vec<f64>,
    gprime: Vec<f64>,
}

impl KernelTable {
    pub fn build(grid: &Grid) -> Self {
        let n = grid.n();
        let h = grid.h();
        let domain = *grid.domain();
        let displacements: Vec<f64> = if domain.is_periodic() {
            (0..n).map(|d| d as f64 * h).collect()
        } else {
            (0..2 * n - 1).map(|i| (i as f64 - (n as f64 - 1.0)) * h).collect()
        };
        let g = displacements.iter().map(|&d| green_kernel(&domain, d)).collect();
        let gprime = displacements
            .iter()
            .map(|&d| {
                if d == 0.0 {
                    0.0
                } else {
                    green_kernel_derivative(&domain, d)
                }
            })
            .collect();
        KernelTable {
            periodic: domain.is_periodic(),
            n,
            g,
            gprime,
        }
    }

    /// Cached table for `grid`.
    pub fn for_grid(grid: &Grid) -> &KernelTable {
        grid.kernel_cache().get_or_init(|| KernelTable::build(grid))
    }

    fn index(&self, i: usize, j: usize) -> usize {
        if self.periodic {
            if i >= j {
                i - j
            } else {
                i + self.n - j
            }
        } else {
            i + self.n - 1 - j
        }
    }

    /// `g(x_i - x_j)`.
    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.g[self.index(i, j)]
    }

    /// `g'(x_i - x_j)` (0 on the diagonal).
    pub fn gprime(&self, i: usize, j: usize) -> f64 {
        self.gprime[self.index(i, j)]
    }

    pub fn g_values(&self) -> &[f64] {
        &self.g
    }

    pub fn gprime_values(&self) -> &[f64] {
        &self.gprime
    }
}

fn convolve(grid: &Arc<Grid>, kernel: &[f64], periodic: bool, values: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let weighted: Vec<f64> = values.iter().enumerate().map(|(j, v)| grid.weight(j) * v).collect();
    (0..n)
        .map(|i| {
            if periodic {
                let (lo, hi) = weighted.split_at(i + 1);
                let near: f64 = lo.iter().enumerate().map(|(j, w)| kernel[i - j] * w).sum();
                let far: f64 = hi.iter().enumerate().map(|(k, w)| kernel[n - 1 - k] * w).sum();
                near + far
            } else {
                let offset = i + n - 1;
                weighted.iter().enumerate().map(|(j, w)| kernel[offset - j] * w).sum()
            }
        })
        .collect()
}

/// `Λ⁻² f = g * f` by direct quadrature against the closed-form kernel.
pub fn helmholtz_inverse(f: &Field) -> Field {
    let grid = f.grid();
    let table = KernelTable::for_grid(grid);
    f.with_values(convolve(grid, table.g_values(), table.periodic, f.values()))
}

/// `∂x Λ⁻² f = g' * f` by direct quadrature; the diagonal uses `g'(0) = 0`.
pub fn grad_helmholtz_inverse(f: &Field) -> Field {
    let grid = f.grid();
    let table = KernelTable::for_grid(grid);
    f.with_values(convolve(grid, table.gprime_values(), table.periodic, f.values()))
}

/// `Λ² f = f - f_xx` with the grid's derivative.
pub fn helmholtz_apply(f: &Field) -> Field {
    let fxx = f.dxx();
    f.zip_with(&fxx, |a, b| a - b)
}

/// `(1 - D²)⁻¹ f` through the discrete Fourier symbols of the grid.
pub fn helmholtz_inverse_fourier(f: &Field) -> Result<Field, HelmholtzError> {
    let grid = f.grid();
    if !grid.domain().is_periodic() {
        return Err(HelmholtzError::NotPeriodic);
    }
    let out = grid.apply_symbol(f.values(), |k| {
        Complex64::new(1.0 / (1.0 - grid.second_derivative_symbol(k)), 0.0)
    })?;
    Ok(f.with_values(out))
}

/// `D (1 - D²)⁻¹ f` through the discrete Fourier symbols of the grid.
pub fn grad_helmholtz_inverse_fourier(f: &Field) -> Result<Field, HelmholtzError> {
    let grid = f.grid();
    if !grid.domain().is_periodic() {
        return Err(HelmholtzError::NotPeriodic);
    }
    let out = grid.apply_symbol(f.values(), |k| {
        Complex64::new(0.0, grid.first_derivative_symbol(k) / (1.0 - grid.second_derivative_symbol(k)))
    })?;
    Ok(f.with_values(out))
}

/// Eigenvalue of `Λ²` on `cos(2πkx)`.
pub fn helmholtz_eigenvalue(k: f64) -> f64 {
    1.0 + 4.0 * PI * PI * k * k
}
