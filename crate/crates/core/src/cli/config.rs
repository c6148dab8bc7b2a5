//! Flat `key = value` scenario files.
//!
//! ```text
//! # comment
//! name = standard
//! domain = circle          # or `line` with `half_length = 20`
//! n = 256
//! initial = fourier        # zero | fourier | gaussian | bump
//!
//! [initial]
//! u_cos = 1:0.1            # comma-separated `mode:amplitude` pairs
//! rho_sin = 1:0.1
//! ```

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::{NonlocalRoute, Sigma};
use crate::grid::{DiffScheme, Domain};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based line, `None` when the offending key took its default.
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: `{}`: {}", self.key, self.message),
            None => write!(f, "`{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries {
    pub mean: f64,
    pub cos: Vec<(u32, f64)>,
    pub sin: Vec<(u32, f64)>,
}

/// Center, width (gaussian) or radius (bump), and amplitude of one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialData {
    Zero,
    Fourier { u: FourierSeries, rho: FourierSeries },
    Gaussian { u: Profile, rho: Profile },
    Bump { u: Profile, rho: Profile },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub domain: Domain,
    pub n: usize,
    pub derivative: DiffScheme,
    pub nonlocal: NonlocalRoute,
    pub dt: f64,
    pub t_max: f64,
    pub record_every: usize,
    pub sigma: Sigma,
    pub tol: f64,
    pub breaking_threshold: f64,
    pub window: Option<(f64, f64)>,
    pub initial: InitialData,
}

impl ScenarioSpec {
    pub fn h(&self) -> f64 {
        self.domain.extent() / self.n as f64
    }
}

const TOP_KEYS: &[&str] = &[
    "name",
    "domain",
    "half_length",
    "n",
    "derivative",
    "nonlocal",
    "dt",
    "t_max",
    "record_every",
    "sigma",
    "tol",
    "breaking_threshold",
    "window",
    "initial",
];

const FIELD_KEYS: &[&str] = &["mean", "cos", "sin", "center", "width", "radius", "amplitude"];

struct Entry {
    value: String,
    line: usize,
}

struct Document {
    top: HashMap<String, Entry>,
    initial: HashMap<String, Entry>,
}

impl Document {
    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        let line = self.top.get(key).or_else(|| self.initial.get(key)).map(|e| e.line);
        ConfigError {
            line,
            key: key.to_string(),
            message: message.into(),
        }
    }
}

fn split_document(text: &str) -> Result<Document, ConfigError> {
    let mut doc = Document {
        top: HashMap::new(),
        initial: HashMap::new(),
    };
    let mut in_initial = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(section) = content.strip_prefix('[') {
            let name = section.strip_suffix(']').map(str::trim);
            match name {
                Some("initial") => in_initial = true,
                _ => {
                    return Err(ConfigError {
                        line: Some(line),
                        key: content.to_string(),
                        message: "unknown section (only [initial] is allowed)".into(),
                    })
                }
            }
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError {
                line: Some(line),
                key: content.to_string(),
                message: "expected `key = value`".into(),
            });
        };
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        let allowed = if in_initial {
            key.split_once('_')
                .is_some_and(|(field, param)| matches!(field, "u" | "rho") && FIELD_KEYS.contains(&param))
        } else {
            TOP_KEYS.contains(&key.as_str())
        };
        if !allowed {
            let place = if in_initial { "in [initial]" } else { "at top level" };
            return Err(ConfigError {
                line: Some(line),
                key,
                message: format!("unknown key {place}"),
            });
        }
        let map = if in_initial { &mut doc.initial } else { &mut doc.top };
        if let Some(prev) = map.get(&key) {
            return Err(ConfigError {
                line: Some(line),
                key,
                message: format!("duplicate key (first set on line {})", prev.line),
            });
        }
        map.insert(key, Entry { value, line });
    }
    Ok(doc)
}

fn err_at(entry: &Entry, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line: Some(entry.line),
        key: key.to_string(),
        message: message.into(),
    }
}

fn get_str<'a>(map: &'a HashMap<String, Entry>, key: &str) -> Option<&'a str> {
    map.get(key).map(|e| e.value.as_str())
}

fn get_f64(map: &HashMap<String, Entry>, key: &str) -> Result<Option<f64>, ConfigError> {
    match map.get(key) {
        None => Ok(None),
        Some(e) => match e.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(err_at(e, key, format!("expected a finite number, got `{}`", e.value))),
        },
    }
}

fn get_usize(map: &HashMap<String, Entry>, key: &str) -> Result<Option<usize>, ConfigError> {
    match map.get(key) {
        None => Ok(None),
        Some(e) => e
            .value
            .parse::<usize>()
            .map(Some)
            .map_err(|_| err_at(e, key, format!("expected a non-negative integer, got `{}`", e.value))),
    }
}

fn parse_modes(entry: &Entry, key: &str) -> Result<Vec<(u32, f64)>, ConfigError> {
    entry
        .value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let bad = || err_at(entry, key, format!("expected `mode:amplitude`, got `{pair}`"));
            let (k, a) = pair.split_once(':').ok_or_else(bad)?;
            let k = k.trim().parse::<u32>().map_err(|_| bad())?;
            let a = a.trim().parse::<f64>().ok().filter(|a| a.is_finite()).ok_or_else(bad)?;
            if k == 0 {
                return Err(err_at(entry, key, "mode 0 is the mean; use the `_mean` key"));
            }
            Ok((k, a))
        })
        .collect()
}

fn positive(doc: &Document, key: &str, value: f64) -> Result<f64, ConfigError> {
    if value > 0.0 {
        Ok(value)
    } else {
        Err(doc.err(key, format!("must be positive, got {value}")))
    }
}

/// Parses and validates a scenario document, applying defaults.
pub fn parse_config(text: &str) -> Result<ScenarioSpec, ConfigError> {
    let doc = split_document(text)?;
    let top = &doc.top;

    let name = get_str(top, "name").unwrap_or("scenario").to_string();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        return Err(doc.err("name", "must be a non-empty identifier of [A-Za-z0-9_-]"));
    }

    let domain = match get_str(top, "domain").unwrap_or("circle") {
        "circle" => {
            if let Some(e) = top.get("half_length") {
                return Err(err_at(e, "half_length", "only applies to domain = line"));
            }
            Domain::Circle
        }
        "line" => {
            let l = get_f64(top, "half_length")?
                .ok_or_else(|| doc.err("domain", "domain = line needs `half_length`"))?;
            Domain::line(l).map_err(|e| doc.err("half_length", e.to_string()))?
        }
        other => return Err(doc.err("domain", format!("expected `circle` or `line`, got `{other}`"))),
    };

    let n = get_usize(top, "n")?.unwrap_or(256);
    if n < 8 || n % 2 != 0 {
        return Err(doc.err("n", format!("n must be even and at least 8, got {n}")));
    }

    let derivative = match get_str(top, "derivative") {
        None => DiffScheme::default_for(&domain),
        Some("spectral") if domain.is_periodic() => DiffScheme::Spectral,
        Some("spectral") => return Err(doc.err("derivative", "spectral differentiation needs domain = circle")),
        Some("fd") => DiffScheme::FiniteDifference,
        Some(other) => return Err(doc.err("derivative", format!("expected `spectral` or `fd`, got `{other}`"))),
    };
    let nonlocal = match get_str(top, "nonlocal") {
        None => NonlocalRoute::default_for(&domain),
        Some("fourier") if domain.is_periodic() => NonlocalRoute::Fourier,
        Some("fourier") => return Err(doc.err("nonlocal", "the fourier route needs domain = circle")),
        Some("quadrature") => NonlocalRoute::Quadrature,
        Some(other) => return Err(doc.err("nonlocal", format!("expected `fourier` or `quadrature`, got `{other}`"))),
    };

    let dt = positive(&doc, "dt", get_f64(top, "dt")?.unwrap_or(1e-3))?;
    let t_max = positive(&doc, "t_max", get_f64(top, "t_max")?.unwrap_or(1.0))?;
    if dt >= t_max {
        return Err(doc.err("dt", format!("dt = {dt} must be smaller than t_max = {t_max}")));
    }
    let record_every = get_usize(top, "record_every")?.unwrap_or(10);
    if record_every == 0 {
        return Err(doc.err("record_every", "must be at least 1"));
    }
    let sigma = match get_str(top, "sigma").unwrap_or("1") {
        "1" | "+1" => Sigma::Ch2,
        "-1" => Sigma::Twin,
        other => return Err(doc.err("sigma", format!("expected +1 or -1, got `{other}`"))),
    };
    let tol = positive(&doc, "tol", get_f64(top, "tol")?.unwrap_or(1e-8))?;
    let breaking_threshold = positive(
        &doc,
        "breaking_threshold",
        get_f64(top, "breaking_threshold")?.unwrap_or(50.0),
    )?;

    let h = domain.extent() / n as f64;
    let window = match top.get("window") {
        None => None,
        Some(e) => {
            let parts: Vec<_> = e.value.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let (x0, x1) = match parts.as_slice() {
                [Ok(a), Ok(b)] if a.is_finite() && b.is_finite() => (*a, *b),
                _ => return Err(err_at(e, "window", format!("expected `x0, x1`, got `{}`", e.value))),
            };
            let upper_ok = if domain.is_periodic() { x1 < domain.right() } else { x1 <= domain.right() };
            if !(x0 < x1) {
                return Err(err_at(e, "window", "needs x0 < x1"));
            }
            if x0 < domain.left() || !upper_ok {
                return Err(err_at(e, "window", format!("must lie in [{}, {})", domain.left(), domain.right())));
            }
            if x1 - x0 < 2.0 * h * (1.0 - 1e-12) {
                return Err(err_at(e, "window", format!("narrower than 2h = {}", 2.0 * h)));
            }
            Some((x0, x1))
        }
    };

    let initial = parse_initial(&doc, &domain)?;

    Ok(ScenarioSpec {
        name,
        domain,
        n,
        derivative,
        nonlocal,
        dt,
        t_max,
        record_every,
        sigma,
        tol,
        breaking_threshold,
        window,
        initial,
    })
}

fn parse_initial(doc: &Document, domain: &Domain) -> Result<InitialData, ConfigError> {
    let kind = get_str(&doc.top, "initial").unwrap_or("zero");
    let params = &doc.initial;
    let allowed: &[&str] = match kind {
        "zero" => &[],
        "fourier" => &["mean", "cos", "sin"],
        "gaussian" => &["center", "width", "amplitude"],
        "bump" => &["center", "radius", "amplitude"],
        other => {
            return Err(doc.err("initial", format!("expected zero, fourier, gaussian or bump, got `{other}`")));
        }
    };
    for (key, entry) in params {
        let param = key.split_once('_').map_or("", |(_, p)| p);
        if !allowed.contains(&param) {
            return Err(err_at(entry, key, format!("does not apply to initial = {kind}")));
        }
    }
    let field_series = |field: &str| -> Result<FourierSeries, ConfigError> {
        let mut s = FourierSeries {
            mean: get_f64(params, &format!("{field}_mean"))?.unwrap_or(0.0),
            ..Default::default()
        };
        if let Some(e) = params.get(&format!("{field}_cos")) {
            s.cos = parse_modes(e, &format!("{field}_cos"))?;
        }
        if let Some(e) = params.get(&format!("{field}_sin")) {
            s.sin = parse_modes(e, &format!("{field}_sin"))?;
        }
        Ok(s)
    };
    let profile = |field: &str, width_key: &str| -> Result<Profile, ConfigError> {
        let mid = 0.5 * (domain.left() + domain.right());
        let center_key = format!("{field}_center");
        let width_key = format!("{field}_{width_key}");
        let center = get_f64(params, &center_key)?.unwrap_or(mid);
        let width = get_f64(params, &width_key)?.unwrap_or(0.1);
        let amplitude = get_f64(params, &format!("{field}_amplitude"))?.unwrap_or(0.0);
        if !(width > 0.0) {
            return Err(doc.err(&width_key, format!("must be positive, got {width}")));
        }
        let right_ok = if domain.is_periodic() { center < domain.right() } else { center <= domain.right() };
        if center < domain.left() || !right_ok {
            return Err(doc.err(&center_key, format!("must lie in [{}, {})", domain.left(), domain.right())));
        }
        Ok(Profile { center, width, amplitude })
    };
    match kind {
        "zero" => Ok(InitialData::Zero),
        "fourier" => {
            if !domain.is_periodic() {
                return Err(doc.err("initial", "fourier initial data needs domain = circle"));
            }
            Ok(InitialData::Fourier {
                u: field_series("u")?,
                rho: field_series("rho")?,
            })
        }
        "gaussian" => Ok(InitialData::Gaussian {
            u: profile("u", "width")?,
            rho: profile("rho", "width")?,
        }),
        _ => {
            let limit = if domain.is_periodic() { 0.5 } else { 0.5 * domain.extent() };
            let mut out = [None, None];
            for (slot, field) in out.iter_mut().zip(["u", "rho"]) {
                let p = profile(field, "radius")?;
                if p.width >= limit {
                    return Err(doc.err(&format!("{field}_radius"), format!("bump radius must be below {limit}")));
                }
                *slot = Some(p);
            }
            let [Some(u), Some(rho)] = out else { unreachable!() };
            Ok(InitialData::Bump { u, rho })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_uses_defaults() {
        let s = parse_config("domain = circle\n").unwrap();
        assert_eq!(s.domain, Domain::Circle);
        assert_eq!((s.n, s.dt, s.t_max, s.record_every), (256, 1e-3, 1.0, 10));
        assert_eq!((s.sigma, s.tol), (Sigma::Ch2, 1e-8));
        assert_eq!(s.initial, InitialData::Zero);
        assert_eq!(s.derivative, DiffScheme::Spectral);
        assert_eq!(s.nonlocal, NonlocalRoute::Fourier);
        assert_eq!(parse_config("").unwrap(), s);
    }

    #[test]
    fn line_gaussian_document() {
        let text = "domain = line\nhalf_length = 20\ninitial = gaussian\n[initial]\nu_center = 0\nu_width = 1.5\nu_amplitude = 0.4\n";
        let s = parse_config(text).unwrap();
        assert_eq!(s.domain, Domain::line(20.0).unwrap());
        assert_eq!(s.nonlocal, NonlocalRoute::Quadrature);
        match s.initial {
            InitialData::Gaussian { u, rho } => {
                assert_eq!(u, Profile { center: 0.0, width: 1.5, amplitude: 0.4 });
                assert_eq!(rho.amplitude, 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn odd_n_names_key_and_line() {
        let e = parse_config("# header\ndomain = circle\nn = 255\n").unwrap_err();
        assert_eq!(e.key, "n");
        assert_eq!(e.line, Some(3));
        assert!(e.to_string().contains("even"), "{e}");
    }

    #[test]
    fn fourier_modes_and_comments() {
        let text = "initial = fourier # smooth\n[initial]\nu_cos = 1:0.1, 3:-0.02\nrho_sin = 1:0.1\nrho_mean = 1\n";
        let s = parse_config(text).unwrap();
        let InitialData::Fourier { u, rho } = s.initial else { panic!() };
        assert_eq!(u.cos, vec![(1, 0.1), (3, -0.02)]);
        assert_eq!(rho.sin, vec![(1, 0.1)]);
        assert_eq!(rho.mean, 1.0);
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            ("colour = red\n", "colour", 1),
            ("dt = fast\n", "dt", 1),
            ("dt = -1\n", "dt", 1),
            ("n = 64\n\ndt = 2\n", "dt", 3),
            ("sigma = 2\n", "sigma", 1),
            ("window = 0.5, 0.4\n", "window", 1),
            ("window = 0.1, 0.1001\n", "window", 1),
            ("domain = line\nhalf_length = 10\nderivative = spectral\n", "derivative", 3),
            ("domain = line\nhalf_length = 10\nnonlocal = fourier\n", "nonlocal", 3),
            ("domain = line\n", "domain", 1),
            ("half_length = 3\n", "half_length", 1),
            ("initial = bump\n[initial]\nu_width = 0.1\n", "u_width", 3),
            ("initial = bump\n[initial]\nu_radius = 0.6\n", "u_radius", 3),
            ("initial = fourier\n[initial]\nu_cos = 0:1\n", "u_cos", 3),
            ("initial = spiral\n", "initial", 1),
            ("[boundary]\n", "[boundary]", 1),
            ("n = 64\nn = 128\n", "n", 2),
            ("record_every = 0\n", "record_every", 1),
            ("domain = line\nhalf_length = 5\ninitial = fourier\n", "initial", 3),
        ];
        for (text, key, line) in cases {
            let e = parse_config(text).unwrap_err();
            assert_eq!((e.key.as_str(), e.line), (key, Some(line)), "{text:?}: {e}");
        }
    }

    #[test]
    fn defaults_that_violate_invariants_report_without_line() {
        let e = parse_config("t_max = 0.0005\n").unwrap_err();
        assert_eq!(e.key, "dt");
        assert_eq!(e.line, None);
    }

    #[test]
    fn twin_and_bump() {
        let text = "sigma = -1\nwindow = 0.3, 0.7\ninitial = bump\n[initial]\nu_center = 0.5\nu_radius = 0.1\nu_amplitude = 1\n";
        let s = parse_config(text).unwrap();
        assert_eq!(s.sigma, Sigma::Twin);
        assert_eq!(s.window, Some((0.3, 0.7)));
        assert!(matches!(s.initial, InitialData::Bump { u, .. } if u.width == 0.1 && u.amplitude == 1.0));
    }
}
