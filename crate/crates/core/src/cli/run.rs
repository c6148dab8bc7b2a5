use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{diagnostics, sandwich_check, DiagnosticsRecord, Window, F_function, f_function};
use crate::cli::config::{parse_config, ConfigError, ScenarioSpec};
use crate::cli::initial::build_initial;
use crate::dynamics::{simulate, BreakingEvent, CH2State, DynamicsError, Sigma, SimulationConfig, SinkError, StateSink, Termination};
use crate::grid::Grid;

pub const DIAGNOSTICS_HEADER: &str =
    "t,hamiltonian,alt_hamiltonian,f_integral,min_slope,flux_identity_residual,divergence_residual,tail_mass,vanishing_window_count";
pub const SNAPSHOT_HEADER: &str = "x,u,rho,f,F";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl RunError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Validation(_) => 1,
            RunError::Io { .. } => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub scenario: ScenarioSpec,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub steps: usize,
    pub termination: &'static str,
    pub final_time: f64,
    pub breaking: Option<BreakingEvent>,
    pub blow_up_time: Option<f64>,
    pub records: usize,
    pub max_relative_hamiltonian_drift: f64,
    /// Records (σ = +1 only) where the sandwich inequality failed.
    pub sandwich_failures: usize,
    /// Records at `t > 0` of a nonzero state with at least one vanishing window.
    pub vanishing_window_hits: usize,
    /// Paths relative to the output directory.
    pub files: Vec<String>,
    /// Set when the run stopped on an I/O error.
    pub partial: bool,
}

impl RunManifest {
    /// Exit status for a run that finished writing: 2 if a check failed.
    pub fn exit_code(&self) -> i32 {
        if self.sandwich_failures > 0 {
            2
        } else {
            0
        }
    }
}

fn unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

/// Formats with 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn diagnostics_row(r: &DiagnosticsRecord) -> String {
    let nums = [
        r.t,
        r.hamiltonian,
        r.alt_hamiltonian,
        r.f_integral,
        r.min_slope,
        r.flux_identity_residual,
        r.divergence_residual,
        r.tail_mass,
    ];
    let mut row: Vec<String> = nums.iter().map(|&v| fmt_num(v)).collect();
    row.push(r.vanishing_window_count.to_string());
    row.join(",")
}

struct RunSink<'a> {
    out: &'a Path,
    window: Option<Window>,
    tol: f64,
    diag: BufWriter<File>,
    files: Vec<String>,
    records: Vec<DiagnosticsRecord>,
    sandwich_failures: usize,
    vanishing_hits: usize,
}

impl RunSink<'_> {
    fn write_snapshot(&mut self, state: &CH2State) -> io::Result<()> {
        let rel = format!("snapshots/t_{:05}.csv", self.records.len());
        let mut w = BufWriter::new(File::create(self.out.join(&rel))?);
        writeln!(w, "{SNAPSHOT_HEADER}")?;
        let f = f_function(state);
        let big_f = F_function(state);
        for i in 0..state.u.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_num(state.u.grid().nodes()[i]),
                fmt_num(state.u.values()[i]),
                fmt_num(state.rho.values()[i]),
                fmt_num(f.values()[i]),
                fmt_num(big_f.values()[i])
            )?;
        }
        w.flush()?;
        self.files.push(rel);
        Ok(())
    }
}

impl StateSink for RunSink<'_> {
    fn record(&mut self, _step: usize, state: &CH2State) -> Result<(), SinkError> {
        let rec = diagnostics(state, self.window.as_ref(), self.tol);
        if state.sigma == Sigma::Ch2 && !sandwich_check(state).ok {
            self.sandwich_failures += 1;
        }
        let nonzero = state.u.max_abs().max(state.rho.max_abs()) > 0.0;
        if rec.vanishing_window_count > 0 && state.t > 0.0 && nonzero {
            self.vanishing_hits += 1;
        }
        writeln!(self.diag, "{}", diagnostics_row(&rec))?;
        self.write_snapshot(state)?;
        self.records.push(rec);
        Ok(())
    }
}

/// Parses the file, then runs it.
pub fn run_config_file(config: &Path, out: &Path) -> Result<RunManifest, RunError> {
    let text = fs::read_to_string(config).map_err(io_err(config))?;
    let spec = parse_config(&text)?;
    run_scenario(&spec, out)
}

/// Simulates `spec`, writing `diagnostics.csv`, `snapshots/t_<index>.csv`
/// and `manifest.json` under `out`. The manifest is written on every path
/// that gets far enough to create the directory, flagged `partial` on an I/O
/// failure.
pub fn run_scenario(spec: &ScenarioSpec, out: &Path) -> Result<RunManifest, RunError> {
    let started = unix_ms();
    let grid = Grid::with_scheme(spec.domain, spec.n, spec.derivative).map_err(|e| RunError::Validation(e.to_string()))?;
    let initial = build_initial(spec, &grid).map_err(|e| RunError::Validation(e.to_string()))?;
    let window = spec
        .window
        .map(|(a, b)| Window::new(&grid, a, b))
        .transpose()
        .map_err(|e| RunError::Validation(e.to_string()))?;
    let config = SimulationConfig {
        dt: spec.dt,
        t_max: spec.t_max,
        breaking_threshold: spec.breaking_threshold,
        record_every: spec.record_every,
        route: Some(spec.nonlocal),
    };
    config.validate(&initial).map_err(|e| RunError::Validation(e.to_string()))?;
    if let Some(limit) = config.cfl_excess(&initial) {
        eprintln!("warning: {}: dt = {} exceeds the advisory CFL bound {limit:.3e}", spec.name, spec.dt);
    }

    fs::create_dir_all(out.join("snapshots")).map_err(io_err(out))?;
    let diag_path = out.join("diagnostics.csv");
    let mut manifest = RunManifest {
        scenario: spec.clone(),
        started_unix_ms: started,
        finished_unix_ms: started,
        steps: 0,
        termination: "completed",
        final_time: 0.0,
        breaking: None,
        blow_up_time: None,
        records: 0,
        max_relative_hamiltonian_drift: 0.0,
        sandwich_failures: 0,
        vanishing_window_hits: 0,
        files: Vec::new(),
        partial: false,
    };
    let file = match File::create(&diag_path) {
        Ok(f) => f,
        Err(source) => {
            manifest.partial = true;
            let _ = write_manifest(out, &mut manifest);
            return Err(RunError::Io { path: diag_path, source });
        }
    };
    let mut sink = RunSink {
        out,
        window,
        tol: spec.tol,
        diag: BufWriter::new(file),
        files: vec!["diagnostics.csv".into()],
        records: Vec::new(),
        sandwich_failures: 0,
        vanishing_hits: 0,
    };
    let header = writeln!(sink.diag, "{DIAGNOSTICS_HEADER}");
    let result = header
        .map_err(|e| DynamicsError::Sink(e.into()))
        .and_then(|_| simulate(&initial, &config, &mut sink));
    let flushed = sink.diag.flush();

    manifest.files = std::mem::take(&mut sink.files);
    manifest.records = sink.records.len();
    manifest.sandwich_failures = sink.sandwich_failures;
    manifest.vanishing_window_hits = sink.vanishing_hits;
    if let Some(first) = sink.records.first() {
        let h0 = first.hamiltonian;
        manifest.max_relative_hamiltonian_drift = sink
            .records
            .iter()
            .map(|r| if h0 > 0.0 { (r.hamiltonian - h0).abs() / h0 } else { (r.hamiltonian - h0).abs() })
            .fold(0.0, f64::max);
    }

    let failure = match (result, flushed) {
        (Ok(summary), Ok(())) => {
            manifest.steps = summary.steps;
            manifest.final_time = summary.final_state.t;
            manifest.termination = summary.termination.label();
            match summary.termination {
                Termination::Breaking { event } => manifest.breaking = Some(event),
                Termination::BlowUp { t } => manifest.blow_up_time = Some(t),
                Termination::Completed => {}
            }
            None
        }
        (Err(DynamicsError::Sink(e)), _) => Some(RunError::Io {
            path: out.to_path_buf(),
            source: io::Error::other(e.to_string()),
        }),
        (Err(e), _) => return Err(RunError::Validation(e.to_string())),
        (Ok(_), Err(source)) => Some(RunError::Io { path: diag_path, source }),
    };
    if let Some(err) = failure {
        manifest.partial = true;
        let _ = write_manifest(out, &mut manifest);
        return Err(err);
    }
    write_manifest(out, &mut manifest)?;
    Ok(manifest)
}

fn write_manifest(out: &Path, manifest: &mut RunManifest) -> Result<(), RunError> {
    manifest.finished_unix_ms = unix_ms();
    if !manifest.files.iter().any(|f| f == "manifest.json") {
        manifest.files.push("manifest.json".into());
    }
    let path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(manifest).map_err(|e| RunError::Io {
        path: path.clone(),
        source: io::Error::other(e),
    })?;
    fs::write(&path, text + "\n").map_err(io_err(&path))
}

/// Outcome of one scenario in a batch.
#[derive(Debug)]
pub struct BatchItem {
    pub config: PathBuf,
    pub result: Result<RunManifest, RunError>,
}

impl BatchItem {
    pub fn exit_code(&self) -> i32 {
        match &self.result {
            Ok(m) => m.exit_code(),
            Err(e) => e.exit_code(),
        }
    }
}

/// Runs every `*.cfg` in `config_dir` (sorted by name) on its own thread,
/// each into `out/<file stem>`.
pub fn run_batch(config_dir: &Path, out: &Path) -> Result<Vec<BatchItem>, RunError> {
    let mut configs: Vec<PathBuf> = fs::read_dir(config_dir)
        .map_err(io_err(config_dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    configs.sort();
    let results = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| {
                let stem = cfg.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let dir = out.join(stem);
                scope.spawn(move || run_config_file(cfg, &dir))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(RunError::Validation("scenario thread panicked".into()))))
            .collect::<Vec<_>>()
    });
    Ok(configs
        .into_iter()
        .zip(results)
        .map(|(config, result)| BatchItem { config, result })
        .collect())
}
