//! Command-line front end: coefficient tables, dispersion curves, identity
//! verification, simulations and parameter sweeps, all driven by a
//! [`RunConfig`].
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration or I/O
//! error, 3 numerical blow-up during a simulation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::SeedableRng;
use thiserror::Error;

use crate::coeffs::{dispersion_internal, dispersion_surface, kappa_tilde_asymptotic};
use crate::config::{parse_document, ConfigError, RunConfig};
use crate::exec::Exec;
use crate::solver::{self, Cadence, DiagnosticsRow, Model, SystemState, Trajectory};
use crate::spectral::Grid;
use crate::verify::{run_suites, Suite, VerifyOptions};

#[derive(Parser, Debug)]
#[command(name = "twolayer", version, about = "Two-layer deep-water wave model toolkit", long_about = None)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Configuration file (flat `key = value` lines with dotted keys)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory for artifacts
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Physical parameter preset
    #[arg(long, global = true, value_parser = ["andaman", "oregon"])]
    pub preset: Option<String>,

    /// Random seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Override one configuration key (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Print every model coefficient
    Coeffs,
    /// Tabulate the interface and surface dispersion relations
    Dispersion,
    /// Run the selected identity suites (`verify.suites`)
    Verify,
    /// Run the Hamiltonian coordinate-equivalence and decomposition suites
    VerifyHamiltonian,
    /// Run the gauge-transformation suite
    VerifyGauge,
    /// Integrate the coupled system and write snapshots and diagnostics
    Simulate,
    /// Repeat `simulate` over the values of one configuration key
    Sweep,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{} check(s) failed: {}", .0.len(), .0.join(", "))]
    Verification(Vec<String>),
    #[error("blow-up at t = {t:.16e} (max|r| = {max_r:.16e}); last good state at t = {last_good_t:.16e}{}", .written.as_ref().map(|p| format!(" written to {}", p.display())).unwrap_or_default())]
    BlowUp {
        t: f64,
        max_r: f64,
        last_good_t: f64,
        written: Option<PathBuf>,
    },
    #[error("{0} sweep run(s) blew up")]
    SweepBlowUp(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::BlowUp { .. } | CliError::SweepBlowUp(_) => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Every number the tool emits, round-trip safe.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Assemble the effective configuration: defaults, then the file, then the
/// command-line flags (`--preset`, `--set`, `--seed`, `--out`).
pub fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut doc = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
            parse_document(&text)?
        }
        None => Default::default(),
    };
    if let Some(p) = &cli.preset {
        doc.insert("physics.preset".into(), p.clone());
    }
    let mut cfg = RunConfig::default();
    cfg.apply(&doc)?;
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            text: kv.clone(),
        })?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parse `args` (including the program name), run, and return the exit code.
/// Reports go to `out`, errors to standard error.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    let stdout_err = |e| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    match cli.command {
        Command::Coeffs => cmd_coeffs(&cfg, out),
        Command::Dispersion => cmd_dispersion(&cfg, out),
        Command::Verify => cmd_verify(&cfg, &cfg.verify_suites, out),
        Command::VerifyHamiltonian => cmd_verify(&cfg, &[Suite::Hamiltonian, Suite::Decomposition], out),
        Command::VerifyGauge => cmd_verify(&cfg, &[Suite::Gauge], out),
        Command::Simulate => {
            let dir = require_out(&cfg)?;
            let summary = simulate_into(&cfg, &dir)?;
            match summary.blow_up {
                Some(err) => Err(err),
                None => writeln!(out, "{}", summary.line()).map_err(stdout_err),
            }
        }
        Command::Sweep => cmd_sweep(&cfg, out),
    }
}

fn require_out(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    cfg.out_dir
        .clone()
        .ok_or_else(|| ConfigError::Invalid("this command needs --out DIR or output.dir".into()).into())
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>")))
}

/// Coefficient report: a `name value description` table on stdout; with an
/// output directory also `coeffs.kv`. For γ < 0.1 the κ̃ entries carry their
/// small-γ closed forms and relative deviations.
pub fn cmd_coeffs(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let m = cfg.model_coefficients()?;
    let asymptotic = (m.gamma < 0.1).then(|| kappa_tilde_asymptotic(&m.params));
    let mut table = format!("{:<12} {:>24}  {}\n", "name", "value", "description");
    let mut kv = String::new();
    for (name, value, desc) in m.named_values() {
        table.push_str(&format!("{name:<12} {:>24}  {desc}", fmt(value)));
        kv.push_str(&format!("{name} = {}\n", fmt(value)));
        let kt_index = ["kt", "kt1", "kt2", "kt3", "kt4"].iter().position(|n| *n == name);
        if let (Some(i), Some(asy)) = (kt_index, asymptotic) {
            let dev = (value - asy[i]).abs() / asy[i].abs();
            table.push_str(&format!("; small-gamma form {}, rel. deviation {}", fmt(asy[i]), fmt(dev)));
            kv.push_str(&format!("{name}.asymptotic = {}\n{name}.deviation = {}\n", fmt(asy[i]), fmt(dev)));
        }
        table.push('\n');
    }
    let res = m.resonance_residual();
    table.push_str(&format!("{:<12} {:>24}  |omega1'(k0) - c0| / c0\n", "resonance", fmt(res)));
    table.push_str(
        "note: (a, b, c, d, alpha, beta) follow this tool's own mapping from the Omega/kt ladder; see README\n",
    );
    kv.push_str(&format!("resonance_residual = {}\n", fmt(res)));
    emit(out, &table)?;
    if let Some(dir) = &cfg.out_dir {
        ensure_dir(dir)?;
        write_file(&dir.join("coeffs.kv"), &kv)?;
    }
    Ok(())
}

/// Log-spaced (k, ω, ω₁) rows as CSV.
pub fn cmd_dispersion(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let (lo, hi) = (cfg.k_min.ln(), cfg.k_max.ln());
    let last = (cfg.k_points - 1) as f64;
    let mut csv = String::from("k,omega,omega1\n");
    for i in 0..cfg.k_points {
        let k = (lo + (hi - lo) * i as f64 / last).exp();
        let w = dispersion_internal(&cfg.params, k).sqrt();
        let w1 = dispersion_surface(&cfg.params, k).sqrt();
        csv.push_str(&format!("{},{},{}\n", fmt(k), fmt(w), fmt(w1)));
    }
    emit(out, &csv)?;
    if let Some(dir) = &cfg.out_dir {
        ensure_dir(dir)?;
        write_file(&dir.join("dispersion.csv"), &csv)?;
    }
    Ok(())
}

pub fn verify_options(cfg: &RunConfig) -> VerifyOptions {
    VerifyOptions {
        params: cfg.params,
        param_sets: cfg.verify_param_sets,
        trials: cfg.verify_trials,
        seed: cfg.seed,
        perturb_symbol: cfg.perturb_symbol,
        ..VerifyOptions::default()
    }
}

/// Per-check residual table; fails with the list of failing checks.
pub fn cmd_verify(cfg: &RunConfig, suites: &[Suite], out: &mut dyn Write) -> Result<(), CliError> {
    if suites.is_empty() {
        return Err(ConfigError::Invalid("no verification suite selected".into()).into());
    }
    let results = run_suites(suites, &verify_options(cfg));
    let mut table = format!(
        "{:<14} {:<44} {:>24} {:>24}  status\n",
        "suite", "check", "residual", "tolerance"
    );
    let mut csv = String::from("suite,check,residual,tolerance,passed\n");
    let mut failed = Vec::new();
    for (suite, checks) in &results {
        for c in checks {
            let ok = c.passed();
            table.push_str(&format!(
                "{:<14} {:<44} {:>24} {:>24}  {}\n",
                suite.name(),
                c.name,
                fmt(c.residual),
                fmt(c.tolerance),
                if ok { "PASS" } else { "FAIL" }
            ));
            csv.push_str(&format!("{},{},{},{},{ok}\n", suite.name(), c.name, fmt(c.residual), fmt(c.tolerance)));
            if !ok {
                failed.push(format!("{}/{}", suite.name(), c.name));
            }
        }
    }
    emit(out, &table)?;
    if let Some(dir) = &cfg.out_dir {
        ensure_dir(dir)?;
        write_file(&dir.join("verify.csv"), &csv)?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed))
    }
}

/// Outcome of one simulation written to disk.
#[derive(Debug)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub first: Option<DiagnosticsRow>,
    pub last: Option<DiagnosticsRow>,
    pub blow_up: Option<CliError>,
}

impl RunSummary {
    fn line(&self) -> String {
        match (&self.blow_up, &self.last) {
            (Some(e), _) => format!("{}: {e}", self.dir.display()),
            (None, Some(l)) => format!(
                "{}: completed at t = {}; E1 = {}, E2 = {}, E3 = {}, max|r| = {}",
                self.dir.display(),
                fmt(l.t),
                fmt(l.e1),
                fmt(l.e2),
                fmt(l.e3),
                fmt(l.max_r)
            ),
            (None, None) => format!("{}: completed", self.dir.display()),
        }
    }

    /// Largest relative drift of (E1, E2, E3) between the first and last rows.
    pub fn drifts(&self) -> [f64; 3] {
        match (&self.first, &self.last) {
            (Some(a), Some(b)) => {
                let rel = |x: f64, y: f64| (y - x).abs() / x.abs().max(f64::MIN_POSITIVE);
                [rel(a.e1, b.e1), rel(a.e2, b.e2), rel(a.e3, b.e3)]
            }
            _ => [f64::NAN; 3],
        }
    }
}

pub fn initial_state(cfg: &RunConfig) -> Result<SystemState, CliError> {
    let grid = Arc::new(Grid::new(cfg.n, cfg.length).map_err(|e| ConfigError::Invalid(e.to_string()))?);
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let r = solver::initial_r(&grid, cfg.initial_r(), &mut rng);
    let q = solver::initial_q(&grid, cfg.initial_q());
    SystemState::new(grid, r, q, 0.0).map_err(|e| ConfigError::Invalid(e.to_string()).into())
}

fn diagnostics_csv(rows: &[DiagnosticsRow]) -> String {
    let mut s = String::from("t,E1,E2,E3,mean_r,max_r,gauge_residual\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt(r.t),
            fmt(r.e1),
            fmt(r.e2),
            fmt(r.e3),
            fmt(r.mean_r),
            fmt(r.max_r),
            fmt(r.gauge_residual)
        ));
    }
    s
}

fn snapshot_csv(s: &SystemState) -> String {
    let mut out = format!("# t={}\nx,r,re_q,im_q\n", fmt(s.t));
    let x = s.grid.x();
    for ((xv, r), q) in x.iter().zip(&s.r).zip(&s.q) {
        let q: &Complex64 = q;
        out.push_str(&format!("{},{},{},{}\n", fmt(*xv), fmt(*r), fmt(q.re), fmt(q.im)));
    }
    out
}

fn model_document(model: &Model) -> String {
    let (r, k3, k4, system) = match model {
        Model::Reduced(r) => (*r, 0.0, 0.0, "reduced"),
        Model::Full(f) => (f.reduced, f.kappa3, f.kappa4, "full"),
    };
    [
        ("effective.system", system.to_string()),
        ("effective.a", fmt(r.a)),
        ("effective.b", fmt(r.b)),
        ("effective.c", fmt(r.c)),
        ("effective.d", fmt(r.d)),
        ("effective.alpha", fmt(r.alpha)),
        ("effective.beta", fmt(r.beta)),
        ("effective.kappa3", fmt(k3)),
        ("effective.kappa4", fmt(k4)),
    ]
    .iter()
    .map(|(k, v)| format!("{k} = {v}\n"))
    .collect()
}

fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<(), CliError> {
    write_file(&dir.join("diagnostics.csv"), &diagnostics_csv(&traj.log))?;
    for (i, s) in traj.snapshots.iter().enumerate() {
        write_file(&dir.join(format!("snapshot_{i:05}.csv")), &snapshot_csv(s))?;
    }
    Ok(())
}

/// Run one simulation and write `metadata.kv`, `diagnostics.csv` and the
/// snapshots to `dir`. A blow-up still writes everything recorded so far plus
/// `last_good.csv`, and is returned in the summary rather than as an error.
pub fn simulate_into(cfg: &RunConfig, dir: &Path) -> Result<RunSummary, CliError> {
    ensure_dir(dir)?;
    let model = cfg.model()?;
    let initial = initial_state(cfg)?;
    let cadence = Cadence {
        diagnostics_every: cfg.diagnostics_every,
        snapshot_every: cfg.snapshot_every,
    };
    let mut meta = cfg.to_document();
    meta.push_str(&model_document(&model));
    let result = solver::run(&initial, &cfg.stepper(), model, cfg.t_end, cadence);
    let (traj, blow_up) = match result {
        Ok(traj) => {
            meta.push_str("status = completed\n");
            (traj, None)
        }
        Err(run_err) => {
            let (t, max_r) = match run_err.error {
                solver::SolverError::BlowUp { t, max_r } => (t, max_r),
                other => return Err(ConfigError::Invalid(other.to_string()).into()),
            };
            let written = match &run_err.last_good {
                Some(s) => {
                    let path = dir.join("last_good.csv");
                    write_file(&path, &snapshot_csv(s))?;
                    Some(path)
                }
                None => None,
            };
            let last_good_t = run_err.last_good.as_ref().map_or(f64::NAN, |s| s.t);
            meta.push_str(&format!(
                "status = blow-up\nblow_up.t = {}\nblow_up.max_r = {}\nblow_up.last_good_t = {}\n",
                fmt(t),
                fmt(max_r),
                fmt(last_good_t)
            ));
            let err = CliError::BlowUp {
                t,
                max_r,
                last_good_t,
                written,
            };
            (run_err.partial, Some(err))
        }
    };
    write_file(&dir.join("metadata.kv"), &meta)?;
    write_trajectory(dir, &traj)?;
    Ok(RunSummary {
        dir: dir.to_path_buf(),
        first: traj.log.first().cloned(),
        last: traj.log.last().cloned(),
        blow_up,
    })
}

/// One simulation per `sweep.values` entry, run concurrently into
/// `run_NNN/` subdirectories, merged into `sweep.csv`.
pub fn cmd_sweep(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let key = cfg
        .sweep_key
        .clone()
        .ok_or_else(|| ConfigError::Invalid("sweep needs sweep.key and sweep.values".into()))?;
    let root = require_out(cfg)?;
    // Validate every point before starting any run.
    let configs: Vec<RunConfig> = cfg
        .sweep_values
        .iter()
        .map(|v| {
            let mut c = cfg.clone();
            c.set(&key, v)?;
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<_, ConfigError>>()?;
    ensure_dir(&root)?;
    let indexed: Vec<(usize, RunConfig)> = configs.into_iter().enumerate().collect();
    let results = Exec::default().map(&indexed, |(i, c)| simulate_into(c, &root.join(format!("run_{i:03}"))));
    let mut csv = format!("run,{key},status,t_final,E1_drift,E2_drift,E3_drift,max_r\n");
    let mut blow_ups = 0;
    for ((i, _), (value, res)) in indexed.iter().zip(cfg.sweep_values.iter().zip(results)) {
        let summary = res?;
        let status = if summary.blow_up.is_some() {
            blow_ups += 1;
            "blow-up"
        } else {
            "completed"
        };
        let [d1, d2, d3] = summary.drifts();
        let (t, max_r) = summary.last.as_ref().map_or((f64::NAN, f64::NAN), |l| (l.t, l.max_r));
        csv.push_str(&format!(
            "run_{i:03},{value},{status},{},{},{},{},{}\n",
            fmt(t),
            fmt(d1),
            fmt(d2),
            fmt(d3),
            fmt(max_r)
        ));
        emit(out, &format!("{}\n", summary.line()))?;
    }
    write_file(&root.join("sweep.csv"), &csv)?;
    if blow_ups > 0 {
        Err(CliError::SweepBlowUp(blow_ups))
    } else {
        Ok(())
    }
}
