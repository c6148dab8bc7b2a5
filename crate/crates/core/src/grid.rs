//! Spatial domains, uniform grids, sampled fields, discrete differentiation
//! and quadrature.
//!
//! Two domains are supported: the unit circle (period exactly 1, samples on
//! `[0, 1)`) and a symmetric truncation `[-L, L)` of the real line. On the
//! circle derivatives are spectral by default; on the line they use
//! fourth-order central differences with one-sided closures.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::helmholtz::KernelTable;

/// Smallest admissible node count.
pub const MIN_NODES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("node count n = {0} must be even and at least {MIN_NODES}")]
    BadNodeCount(usize),
    #[error("half_length must be positive and finite, got {0}")]
    BadHalfLength(f64),
    #[error("field has {got} values but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("derivative order must be 1 or 2, got {0}")]
    BadOrder(usize),
    #[error("the spectral scheme needs a periodic domain")]
    SpectralOnLine,
}

/// The spatial universe: the unit circle or a truncated real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    /// `[0, 1)` with periodic identification.
    Circle,
    /// `[-half_length, half_length)`.
    Line { half_length: f64 },
}

impl Domain {
    pub fn line(half_length: f64) -> Result<Self, GridError> {
        if half_length.is_finite() && half_length > 0.0 {
            Ok(Domain::Line { half_length })
        } else {
            Err(GridError::BadHalfLength(half_length))
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Domain::Circle)
    }

    /// Length of the computational interval.
    pub fn extent(&self) -> f64 {
        match *self {
            Domain::Circle => 1.0,
            Domain::Line { half_length } => 2.0 * half_length,
        }
    }

    pub fn left(&self) -> f64 {
        match *self {
            Domain::Circle => 0.0,
            Domain::Line { half_length } => -half_length,
        }
    }

    pub fn right(&self) -> f64 {
        self.left() + self.extent()
    }

    fn validate(&self) -> Result<(), GridError> {
        match *self {
            Domain::Circle => Ok(()),
            Domain::Line { half_length } => Domain::line(half_length).map(|_| ()),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Circle => write!(f, "circle"),
            Domain::Line { half_length } => write!(f, "line(L={half_length})"),
        }
    }
}

/// How `derivative` discretizes d/dx.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffScheme {
    /// Fourier differentiation of the periodic samples (circle only).
    Spectral,
    /// Fourth-order central differences; periodic wrap on the circle,
    /// one-sided closures at the two ends of the line.
    FiniteDifference,
}

impl DiffScheme {
    pub fn default_for(domain: &Domain) -> Self {
        if domain.is_periodic() {
            DiffScheme::Spectral
        } else {
            DiffScheme::FiniteDifference
        }
    }
}

struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// A uniform grid over one domain. Immutable once built and shared through
/// `Arc` by every [`Field`] that lives on it.
pub struct Grid {
    domain: Domain,
    n: usize,
    h: f64,
    nodes: Vec<f64>,
    scheme: DiffScheme,
    fft: Option<FftPair>,
    kernels: OnceLock<KernelTable>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("domain", &self.domain)
            .field("n", &self.n)
            .field("h", &self.h)
            .field("scheme", &self.scheme)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain && self.n == other.n && self.scheme == other.scheme
    }
}

/// Builds a grid with the domain's default differentiation scheme.
pub fn make_grid(domain: Domain, n: usize) -> Result<Arc<Grid>, GridError> {
    Grid::new(domain, n)
}

impl Grid {
    pub fn new(domain: Domain, n: usize) -> Result<Arc<Grid>, GridError> {
        Self::with_scheme(domain, n, DiffScheme::default_for(&domain))
    }

    pub fn with_scheme(domain: Domain, n: usize, scheme: DiffScheme) -> Result<Arc<Grid>, GridError> {
        domain.validate()?;
        if n < MIN_NODES || !n.is_multiple_of(2) {
            return Err(GridError::BadNodeCount(n));
        }
        if scheme == DiffScheme::Spectral && !domain.is_periodic() {
            return Err(GridError::SpectralOnLine);
        }
        let h = domain.extent() / n as f64;
        let left = domain.left();
        let nodes = (0..n).map(|i| left + i as f64 * h).collect();
        let fft = domain.is_periodic().then(|| {
            let mut planner = FftPlanner::new();
            FftPair {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            }
        });
        Ok(Arc::new(Grid {
            domain,
            n,
            h,
            nodes,
            scheme,
            fft,
            kernels: OnceLock::new(),
        }))
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn scheme(&self) -> DiffScheme {
        self.scheme
    }

    /// Quadrature weight of node `i`: rectangle rule on the circle,
    /// trapezoid over the sampled nodes on the line.
    pub fn weight(&self, i: usize) -> f64 {
        match self.domain {
            Domain::Circle => self.h,
            Domain::Line { .. } if i == 0 || i + 1 == self.n => 0.5 * self.h,
            Domain::Line { .. } => self.h,
        }
    }

    pub fn quadrature(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        match self.domain {
            Domain::Circle => self.h * values.iter().sum::<f64>(),
            Domain::Line { .. } => {
                let inner: f64 = values.iter().sum();
                self.h * (inner - 0.5 * (values[0] + values[self.n - 1]))
            }
        }
    }

    pub(crate) fn kernel_cache(&self) -> &OnceLock<KernelTable> {
        &self.kernels
    }

    /// Signed integer wavenumber of FFT bin `k`.
    pub fn wavenumber(&self, k: usize) -> f64 {
        if k <= self.n / 2 {
            k as f64
        } else {
            k as f64 - self.n as f64
        }
    }

    /// Imaginary part `s` of the discrete first-derivative symbol `i s` at
    /// FFT bin `k` (circle only). The spectral Nyquist mode is dropped.
    pub fn first_derivative_symbol(&self, k: usize) -> f64 {
        match self.scheme {
            DiffScheme::Spectral => {
                if k == self.n / 2 {
                    0.0
                } else {
                    2.0 * PI * self.wavenumber(k)
                }
            }
            DiffScheme::FiniteDifference => {
                let theta = 2.0 * PI * self.wavenumber(k) / self.n as f64;
                (8.0 * theta.sin() - (2.0 * theta).sin()) / (6.0 * self.h)
            }
        }
    }

    /// Real, non-positive discrete second-derivative symbol at FFT bin `k`.
    pub fn second_derivative_symbol(&self, k: usize) -> f64 {
        match self.scheme {
            DiffScheme::Spectral => {
                let w = 2.0 * PI * self.wavenumber(k);
                -w * w
            }
            DiffScheme::FiniteDifference => {
                let theta = 2.0 * PI * self.wavenumber(k) / self.n as f64;
                (32.0 * theta.cos() - 2.0 * (2.0 * theta).cos() - 30.0) / (12.0 * self.h * self.h)
            }
        }
    }

    /// Multiplies the discrete Fourier coefficients of `values` by
    /// `symbol(k)` and transforms back, keeping the real part.
    pub(crate) fn apply_symbol(
        &self,
        values: &[f64],
        symbol: impl Fn(usize) -> Complex64,
    ) -> Result<Vec<f64>, GridError> {
        let fft = self.fft.as_ref().ok_or(GridError::SpectralOnLine)?;
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.forward.process(&mut buf);
        for (k, c) in buf.iter_mut().enumerate() {
            *c *= symbol(k);
        }
        fft.inverse.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        Ok(buf.iter().map(|c| c.re * scale).collect())
    }

    fn differentiate(&self, values: &[f64], order: usize) -> Vec<f64> {
        match (self.scheme, order) {
            (DiffScheme::Spectral, 1) => self
                .apply_symbol(values, |k| Complex64::new(0.0, self.first_derivative_symbol(k)))
                .expect("spectral scheme implies a periodic grid"),
            (DiffScheme::Spectral, _) => self
                .apply_symbol(values, |k| Complex64::new(self.second_derivative_symbol(k), 0.0))
                .expect("spectral scheme implies a periodic grid"),
            (DiffScheme::FiniteDifference, 1) if self.domain.is_periodic() => periodic_fd1(values, self.h),
            (DiffScheme::FiniteDifference, _) if self.domain.is_periodic() => periodic_fd2(values, self.h),
            (DiffScheme::FiniteDifference, 1) => bounded_fd1(values, self.h),
            (DiffScheme::FiniteDifference, _) => bounded_fd2(values, self.h),
        }
    }
}

fn periodic_fd1(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let at = |i: isize| f[i.rem_euclid(n as isize) as usize];
    (0..n as isize)
        .map(|i| (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) / (12.0 * h))
        .collect()
}

fn periodic_fd2(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let at = |i: isize| f[i.rem_euclid(n as isize) as usize];
    (0..n as isize)
        .map(|i| {
            (-at(i + 2) + 16.0 * at(i + 1) - 30.0 * at(i) + 16.0 * at(i - 1) - at(i - 2)) / (12.0 * h * h)
        })
        .collect()
}

// Fourth-order one-sided and biased closures; mirrored (with a sign flip for
// the odd-order operator) at the right end.
const D1_EDGE: [[f64; 5]; 2] = [
    [-25.0, 48.0, -36.0, 16.0, -3.0],
    [-3.0, -10.0, 18.0, -6.0, 1.0],
];
const D2_EDGE: [[f64; 6]; 2] = [
    [45.0, -154.0, 214.0, -156.0, 61.0, -10.0],
    [10.0, -15.0, -4.0, 14.0, -6.0, 1.0],
];

fn bounded_fd1(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let scale = 1.0 / (12.0 * h);
    let mut out = vec![0.0; n];
    for i in 2..n - 2 {
        out[i] = (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) * scale;
    }
    for (row, coeffs) in D1_EDGE.iter().enumerate() {
        out[row] = coeffs.iter().enumerate().map(|(j, c)| c * f[j]).sum::<f64>() * scale;
        out[n - 1 - row] = -coeffs.iter().enumerate().map(|(j, c)| c * f[n - 1 - j]).sum::<f64>() * scale;
    }
    out
}

fn bounded_fd2(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let scale = 1.0 / (12.0 * h * h);
    let mut out = vec![0.0; n];
    for i in 2..n - 2 {
        out[i] = (-f[i + 2] + 16.0 * f[i + 1] - 30.0 * f[i] + 16.0 * f[i - 1] - f[i - 2]) * scale;
    }
    for (row, coeffs) in D2_EDGE.iter().enumerate() {
        out[row] = coeffs.iter().enumerate().map(|(j, c)| c * f[j]).sum::<f64>() * scale;
        out[n - 1 - row] = coeffs.iter().enumerate().map(|(j, c)| c * f[n - 1 - j]).sum::<f64>() * scale;
    }
    out
}

/// Real samples of a function on a [`Grid`].
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.n() {
            return Err(GridError::LengthMismatch {
                expected: grid.n(),
                got: values.len(),
            });
        }
        Ok(Field {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        Field {
            grid: Arc::clone(grid),
            values: grid.nodes().iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Field {
            grid: Arc::clone(grid),
            values: vec![c; grid.n()],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// Same grid, new values. Panics if the length differs.
    pub fn with_values(&self, values: Vec<f64>) -> Field {
        assert_eq!(values.len(), self.values.len(), "field length mismatch");
        Field {
            grid: Arc::clone(&self.grid),
            values,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    /// Node-wise combination. Panics on a grid mismatch.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert!(self.same_grid(other), "fields live on different grids");
        self.with_values(self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn dx(&self) -> Field {
        self.with_values(self.grid.differentiate(&self.values, 1))
    }

    pub fn dxx(&self) -> Field {
        self.with_values(self.grid.differentiate(&self.values, 2))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Smallest value and the first node attaining it.
    pub fn argmin(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bv), (i, v)| if v < bv { (i, v) } else { (bi, bv) })
    }

    /// Four-point cubic Lagrange interpolation at an arbitrary `x`. Periodic
    /// wrap on the circle; stencils are shifted inward near the line ends.
    pub fn interpolate(&self, x: f64) -> f64 {
        let grid = &self.grid;
        let n = grid.n() as isize;
        let s = (x - grid.domain().left()) / grid.h();
        let mut j = s.floor() as isize;
        if !grid.domain().is_periodic() {
            j = j.clamp(1, n - 3);
        }
        let theta = s - j as f64;
        let at = |i: isize| {
            let idx = if grid.domain().is_periodic() { i.rem_euclid(n) } else { i };
            self.values[idx as usize]
        };
        let (p0, p1, p2, p3) = (at(j - 1), at(j), at(j + 1), at(j + 2));
        let (t0, t1, t2, t3) = (theta + 1.0, theta, theta - 1.0, theta - 2.0);
        -p0 * t1 * t2 * t3 / 6.0 + p1 * t0 * t2 * t3 / 2.0 - p2 * t0 * t1 * t3 / 2.0 + p3 * t0 * t1 * t2 / 6.0
    }
}

/// Discrete d/dx (`order = 1`) or d²/dx² (`order = 2`).
pub fn derivative(f: &Field, order: usize) -> Result<Field, GridError> {
    match order {
        1 => Ok(f.dx()),
        2 => Ok(f.dxx()),
        other => Err(GridError::BadOrder(other)),
    }
}

pub fn quadrature(f: &Field) -> f64 {
    f.grid.quadrature(&f.values)
}
