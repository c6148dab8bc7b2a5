//! Kernel property suite packaged as the `selftest` command.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{quadrature, Domain, Field, Grid, GridError};
use crate::helmholtz::{green_kernel, helmholtz_apply, helmholtz_inverse, s_kernel};

pub const SAMPLES: usize = 10_000;
pub const ROUND_TRIP_SIZES: [usize; 3] = [128, 256, 512];

#[derive(Debug, Clone)]
pub struct SelftestOptions {
    pub seed: u64,
    /// Test hook: negates the difference kernel so S-positivity must fail.
    pub flip_s_kernel: bool,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions {
            seed: 20_240_601,
            flip_s_kernel: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }
}

fn domains() -> [(&'static str, Domain); 2] {
    [("circle", Domain::Circle), ("line", Domain::Line { half_length: 20.0 })]
}

/// Count of random points where `g <= 0`.
pub fn kernel_positivity_failures(domain: &Domain, rng: &mut impl Rng, samples: usize) -> usize {
    (0..samples)
        .filter(|_| {
            let x = match domain {
                Domain::Circle => rng.gen_range(-2.0..2.0),
                Domain::Line { .. } => rng.gen_range(-30.0..30.0),
            };
            !(green_kernel(domain, x) > 0.0)
        })
        .count()
}

/// Count of random `(a, b, y)` with `y` outside `[a, b]` where `S_{a,b}(y) <= 0`.
pub fn s_positivity_failures(domain: &Domain, rng: &mut impl Rng, samples: usize, flip: bool) -> usize {
    let sign = if flip { -1.0 } else { 1.0 };
    let (lo, hi, ylo, yhi) = match domain {
        Domain::Circle => (0.0, 1.0, 0.0, 1.0),
        Domain::Line { .. } => (-10.0, 10.0, -25.0, 25.0),
    };
    let mut failures = 0;
    let mut drawn = 0;
    while drawn < samples {
        let (p, q) = (rng.gen_range(lo..hi), rng.gen_range(lo..hi));
        let (a, b) = if p < q { (p, q) } else { (q, p) };
        let y = rng.gen_range(ylo..yhi);
        if a == b || (a..=b).contains(&y) {
            continue;
        }
        drawn += 1;
        if !(sign * s_kernel(domain, a, b, y) > 0.0) {
            failures += 1;
        }
    }
    failures
}

/// `∫g` by the grid quadrature rule.
pub fn kernel_integral(domain: Domain, n: usize) -> Result<f64, GridError> {
    let grid = Grid::new(domain, n)?;
    let center = 0.5 * (domain.left() + domain.right());
    Ok(quadrature(&Field::from_fn(&grid, |x| green_kernel(&domain, x - center))))
}

/// Smooth, not band-limited test field for the round trip.
pub fn round_trip_field(x: f64) -> f64 {
    (2.0 * PI * x).sin().exp() / (1.5 + (2.0 * PI * x).cos())
}

/// `max|Λ²Λ⁻²f - f| / max|f|` on the circle.
pub fn round_trip_error(n: usize) -> Result<f64, GridError> {
    let grid = Grid::new(Domain::Circle, n)?;
    let f = Field::from_fn(&grid, round_trip_field);
    let back = helmholtz_apply(&helmholtz_inverse(&f));
    Ok(back.zip_with(&f, |a, b| a - b).max_abs() / f.max_abs())
}

pub fn kernel_selftest(options: &SelftestOptions) -> SelftestReport {
    let mut report = SelftestReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);

    for (label, domain) in domains() {
        let bad = kernel_positivity_failures(&domain, &mut rng, SAMPLES);
        report.push(format!("kernel positivity ({label})"), bad == 0, format!("{bad} of {SAMPLES} samples non-positive"));
    }

    for n in ROUND_TRIP_SIZES {
        match kernel_integral(Domain::Circle, n) {
            Ok(v) => report.push(format!("normalization (circle, n={n})"), (v - 1.0).abs() < 1e-4, format!("|∫g - 1| = {:.3e}", (v - 1.0).abs())),
            Err(e) => report.push(format!("normalization (circle, n={n})"), false, e.to_string()),
        }
    }
    match kernel_integral(Domain::Line { half_length: 20.0 }, 2048) {
        Ok(v) => report.push("normalization (line, L=20, n=2048)", (v - 1.0).abs() < 1e-4, format!("|∫g - 1| = {:.3e}", (v - 1.0).abs())),
        Err(e) => report.push("normalization (line, L=20, n=2048)", false, e.to_string()),
    }

    for (label, domain) in domains() {
        let bad = s_positivity_failures(&domain, &mut rng, SAMPLES, options.flip_s_kernel);
        report.push(format!("S positivity ({label})"), bad == 0, format!("{bad} of {SAMPLES} samples non-positive"));
    }

    let errors: Result<Vec<f64>, _> = ROUND_TRIP_SIZES.iter().map(|&n| round_trip_error(n)).collect();
    match errors {
        Ok(e) => {
            let orders: Vec<f64> = e.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
            let ratio = e[0] / e[1];
            let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
            let ok = ratio >= 3.5 && min_order >= 1.9 && e[2] < 1e-4;
            report.push(
                "round trip",
                ok,
                format!(
                    "errors {:.3e}, {:.3e}, {:.3e} at n = 128, 256, 512; ratio {ratio:.2}; orders {:.2}, {:.2}",
                    e[0], e[1], e[2], orders[0], orders[1]
                ),
            );
        }
        Err(err) => report.push("round trip", false, err.to_string()),
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_selftest_passes() {
        let report = kernel_selftest(&SelftestOptions::default());
        for c in &report.checks {
            assert!(c.passed, "{c}");
        }
        assert_eq!(report.checks.len(), 9);
    }

    #[test]
    fn flipped_kernel_fails_s_positivity_only() {
        let report = kernel_selftest(&SelftestOptions {
            flip_s_kernel: true,
            ..Default::default()
        });
        assert!(!report.passed());
        for c in &report.checks {
            assert_eq!(c.passed, !c.name.starts_with("S positivity"), "{c}");
        }
    }

    #[test]
    fn report_lines() {
        let c = Check {
            name: "x".into(),
            passed: false,
            detail: "d".into(),
        };
        assert_eq!(c.to_string(), "FAIL x: d");
    }
}
