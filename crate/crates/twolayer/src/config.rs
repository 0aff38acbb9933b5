//! Run configuration: a flat `key = value` document with dotted section
//! keys. Unknown keys, duplicate keys and malformed values are errors.
//!
//! ```text
//! # comments start with '#'
//! physics.preset = oregon
//! grid.n = 512
//! time.scheme = etdrk4
//! init.r = bo-soliton
//! init.r.nu = 0.5
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::coeffs::{derive_coefficients, ModelCoefficients, PhysicalParams, ReducedCoefficients};
use crate::solver::{FullCoefficients, InitialQ, InitialR, Model, Scheme, StepperConfig, TimeScale};
use crate::spectral::Grid;
use crate::verify::Suite;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("key '{0}' given more than once")]
    Duplicate(String),
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("bad value for '{key}': {reason}")]
    BadValue { key: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read config: {0}")]
    Io(String),
}

/// Where the reduced-system coefficients come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoeffSource {
    /// Derived from the physical parameters, ε and δ.
    Derived,
    /// Taken verbatim from the `coeffs.*` keys.
    Explicit,
}

/// Which system `simulate` integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum System {
    Reduced,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RKind {
    Zero,
    Gaussian,
    BoSoliton,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QKind {
    Zero,
    Gaussian,
    Monochromatic,
}

/// Every setting of the command-line tool.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: PhysicalParams,
    pub epsilon: f64,
    pub delta: f64,
    pub n: usize,
    pub length: f64,
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub cfl_guard: f64,
    pub dealias: bool,
    pub system: System,
    pub time_scale: TimeScale,
    pub source: CoeffSource,
    /// Explicit reduced coefficients (used when `source` is explicit).
    pub explicit: ReducedCoefficients,
    /// Explicit ε κ̃₃, ε κ̃₄ for the parent system.
    pub explicit_kappa3: f64,
    pub explicit_kappa4: f64,
    pub r_kind: RKind,
    pub r_amp: f64,
    pub r_width: f64,
    pub r_center: f64,
    pub r_nu: f64,
    pub r_width_modes: f64,
    pub q_kind: QKind,
    pub q_amp: f64,
    pub q_width: f64,
    pub q_center: f64,
    pub q_mode: i64,
    pub out_dir: Option<PathBuf>,
    pub diagnostics_every: usize,
    pub snapshot_every: usize,
    pub seed: u64,
    pub verify_suites: Vec<Suite>,
    pub verify_trials: usize,
    pub verify_param_sets: usize,
    pub perturb_symbol: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub k_points: usize,
    pub sweep_key: Option<String>,
    pub sweep_values: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: PhysicalParams::ANDAMAN,
            epsilon: 0.1,
            delta: 0.25,
            n: 256,
            length: 40.0,
            scheme: Scheme::Strang,
            dt: 1e-3,
            t_end: 1.0,
            cfl_guard: 1e3,
            dealias: true,
            system: System::Reduced,
            time_scale: TimeScale::Tau,
            source: CoeffSource::Explicit,
            explicit: ReducedCoefficients {
                a: 0.6,
                b: 0.8,
                c: 1.5,
                d: 0.4,
                alpha: -0.7,
                beta: 0.9,
            },
            explicit_kappa3: 0.0,
            explicit_kappa4: 0.0,
            r_kind: RKind::Gaussian,
            r_amp: 0.1,
            r_width: 2.0,
            r_center: 0.0,
            r_nu: 0.5,
            r_width_modes: 8.0,
            q_kind: QKind::Gaussian,
            q_amp: 0.2,
            q_width: 4.0,
            q_center: 0.0,
            q_mode: 2,
            out_dir: None,
            diagnostics_every: 100,
            snapshot_every: 1000,
            seed: 0,
            verify_suites: Suite::ALL.to_vec(),
            verify_trials: 20,
            verify_param_sets: 20,
            perturb_symbol: 0.0,
            k_min: 1e-5,
            k_max: 1.0,
            k_points: 200,
            sweep_key: None,
            sweep_values: Vec::new(),
        }
    }
}

/// Parse a document into an ordered key → value map.
pub fn parse_document(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            });
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ConfigError::Duplicate(k.to_string()));
        }
    }
    Ok(map)
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| ConfigError::BadValue {
        key: key.to_string(),
        reason: format!("'{v}': {e}"),
    })
}

fn choice<T: Copy>(key: &str, v: &str, options: &[(&str, T)]) -> Result<T, ConfigError> {
    options
        .iter()
        .find(|(name, _)| *name == v)
        .map(|(_, t)| *t)
        .ok_or_else(|| ConfigError::BadValue {
            key: key.to_string(),
            reason: format!(
                "'{v}' is not one of {}",
                options.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
            ),
        })
}

/// Named physical parameter sets.
pub fn preset(name: &str) -> Option<PhysicalParams> {
    match name {
        "andaman" => Some(PhysicalParams::ANDAMAN),
        "oregon" => Some(PhysicalParams::OREGON),
        _ => None,
    }
}

impl RunConfig {
    /// Apply one setting.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "physics.preset" => {
                self.params = preset(v).ok_or_else(|| ConfigError::BadValue {
                    key: key.into(),
                    reason: format!("unknown preset '{v}' (expected andaman or oregon)"),
                })?
            }
            "physics.g" => self.params.g = num(key, v)?,
            "physics.h1" => self.params.h1 = num(key, v)?,
            "physics.rho" => self.params.rho = num(key, v)?,
            "physics.rho1" => self.params.rho1 = num(key, v)?,
            "scaling.epsilon" => self.epsilon = num(key, v)?,
            "scaling.delta" => self.delta = num(key, v)?,
            "grid.n" => self.n = num(key, v)?,
            "grid.length" => self.length = num(key, v)?,
            "time.scheme" => {
                self.scheme = v.parse().map_err(|e: crate::solver::SolverError| ConfigError::BadValue {
                    key: key.into(),
                    reason: e.to_string(),
                })?
            }
            "time.dt" => self.dt = num(key, v)?,
            "time.t_end" => self.t_end = num(key, v)?,
            "time.cfl_guard" => self.cfl_guard = num(key, v)?,
            "time.dealias" => self.dealias = num(key, v)?,
            "time.scale" => self.time_scale = choice(key, v, &[("tau", TimeScale::Tau), ("tau1", TimeScale::Tau1)])?,
            "model.system" => self.system = choice(key, v, &[("reduced", System::Reduced), ("full", System::Full)])?,
            "coeffs.source" => {
                self.source = choice(key, v, &[("derived", CoeffSource::Derived), ("explicit", CoeffSource::Explicit)])?
            }
            "coeffs.a" => self.explicit.a = num(key, v)?,
            "coeffs.b" => self.explicit.b = num(key, v)?,
            "coeffs.c" => self.explicit.c = num(key, v)?,
            "coeffs.d" => self.explicit.d = num(key, v)?,
            "coeffs.alpha" => self.explicit.alpha = num(key, v)?,
            "coeffs.beta" => self.explicit.beta = num(key, v)?,
            "coeffs.kappa3" => self.explicit_kappa3 = num(key, v)?,
            "coeffs.kappa4" => self.explicit_kappa4 = num(key, v)?,
            "init.r" => {
                self.r_kind = choice(
                    key,
                    v,
                    &[
                        ("zero", RKind::Zero),
                        ("gaussian", RKind::Gaussian),
                        ("bo-soliton", RKind::BoSoliton),
                        ("random", RKind::Random),
                    ],
                )?
            }
            "init.r.amp" => self.r_amp = num(key, v)?,
            "init.r.width" => self.r_width = num(key, v)?,
            "init.r.center" => self.r_center = num(key, v)?,
            "init.r.nu" => self.r_nu = num(key, v)?,
            "init.r.width_modes" => self.r_width_modes = num(key, v)?,
            "init.q" => {
                self.q_kind = choice(
                    key,
                    v,
                    &[
                        ("zero", QKind::Zero),
                        ("gaussian", QKind::Gaussian),
                        ("monochromatic", QKind::Monochromatic),
                    ],
                )?
            }
            "init.q.amp" => self.q_amp = num(key, v)?,
            "init.q.width" => self.q_width = num(key, v)?,
            "init.q.center" => self.q_center = num(key, v)?,
            "init.q.mode" => self.q_mode = num(key, v)?,
            "output.dir" => self.out_dir = Some(PathBuf::from(v)),
            "output.diagnostics_every" => self.diagnostics_every = num(key, v)?,
            "output.snapshot_every" => self.snapshot_every = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "verify.suites" => {
                self.verify_suites = if v == "all" {
                    Suite::ALL.to_vec()
                } else {
                    v.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| {
                            Suite::parse(s).ok_or_else(|| ConfigError::BadValue {
                                key: key.into(),
                                reason: format!("unknown suite '{s}'"),
                            })
                        })
                        .collect::<Result<_, _>>()?
                }
            }
            "verify.trials" => self.verify_trials = num(key, v)?,
            "verify.param_sets" => self.verify_param_sets = num(key, v)?,
            "verify.perturb_symbol" => self.perturb_symbol = num(key, v)?,
            "dispersion.k_min" => self.k_min = num(key, v)?,
            "dispersion.k_max" => self.k_max = num(key, v)?,
            "dispersion.points" => self.k_points = num(key, v)?,
            "sweep.key" => {
                if v == "sweep.key" || v == "sweep.values" {
                    return Err(ConfigError::BadValue {
                        key: key.into(),
                        reason: "cannot sweep over the sweep settings".into(),
                    });
                }
                // the target must itself be a valid key
                self.clone().set(v, "0").or_else(|e| match e {
                    ConfigError::UnknownKey(_) => Err(e),
                    _ => Ok(()),
                })?;
                self.sweep_key = Some(v.to_string())
            }
            "sweep.values" => {
                self.sweep_values = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
            }
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Apply a parsed document. A preset, if present, is applied first so
    /// individual physics keys can refine it.
    pub fn apply(&mut self, doc: &BTreeMap<String, String>) -> Result<(), ConfigError> {
        if let Some(p) = doc.get("physics.preset") {
            self.set("physics.preset", p)?;
        }
        for (k, v) in doc.iter().filter(|(k, _)| k.as_str() != "physics.preset") {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_document(text: &str) -> Result<Self, ConfigError> {
        let mut c = RunConfig::default();
        c.apply(&parse_document(text)?)?;
        Ok(c)
    }

    /// Check every module precondition.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |m: String| Err(ConfigError::Invalid(m));
        self.params.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return inv(format!("scaling.delta must lie in (0, 1/2), got {}", self.delta));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return inv(format!("scaling.epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        Grid::new(self.n, self.length).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.stepper().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return inv(format!("time.t_end must be non-negative, got {}", self.t_end));
        }
        let widths = [("init.r.width", self.r_width), ("init.q.width", self.q_width), ("init.r.nu", self.r_nu), ("init.r.width_modes", self.r_width_modes)];
        for (name, w) in widths {
            if !(w > 0.0 && w.is_finite()) {
                return inv(format!("{name} must be positive, got {w}"));
            }
        }
        if !(self.k_min > 0.0 && self.k_max > self.k_min && self.k_points >= 2) {
            return inv("dispersion needs 0 < k_min < k_max and at least 2 points".into());
        }
        if self.verify_suites.is_empty() {
            return inv("verify.suites selects no suite".into());
        }
        if self.verify_trials == 0 {
            return inv("verify.trials must be at least 1".into());
        }
        if self.sweep_key.is_some() && self.sweep_values.is_empty() {
            return inv("sweep.values is empty".into());
        }
        Ok(())
    }

    pub fn stepper(&self) -> StepperConfig {
        StepperConfig {
            dt: self.dt,
            scheme: self.scheme,
            dealias: self.dealias,
            cfl_guard: self.cfl_guard,
        }
    }

    pub fn model_coefficients(&self) -> Result<ModelCoefficients, ConfigError> {
        derive_coefficients(&self.params, self.epsilon, self.delta).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// The right-hand side `simulate` integrates.
    pub fn model(&self) -> Result<Model, ConfigError> {
        let full = match self.source {
            CoeffSource::Explicit => FullCoefficients {
                reduced: self.explicit,
                kappa3: self.explicit_kappa3,
                kappa4: self.explicit_kappa4,
            },
            CoeffSource::Derived => FullCoefficients::from_model(&self.model_coefficients()?, TimeScale::Tau),
        };
        Ok(match self.system {
            System::Reduced => Model::Reduced(full.reduced),
            System::Full => Model::Full(match self.time_scale {
                TimeScale::Tau => full,
                TimeScale::Tau1 => full.time_rescaled(1.0 / self.epsilon),
            }),
        })
    }

    pub fn initial_r(&self) -> InitialR {
        match self.r_kind {
            RKind::Zero => InitialR::Zero,
            RKind::Gaussian => InitialR::Gaussian {
                amp: self.r_amp,
                width: self.r_width,
                center: self.r_center,
            },
            RKind::BoSoliton => InitialR::BoSoliton {
                nu: self.r_nu,
                center: self.r_center,
            },
            RKind::Random => InitialR::Random {
                amp: self.r_amp,
                width_modes: self.r_width_modes,
            },
        }
    }

    pub fn initial_q(&self) -> InitialQ {
        match self.q_kind {
            QKind::Zero => InitialQ::Zero,
            QKind::Gaussian => InitialQ::Gaussian {
                amp: self.q_amp,
                width: self.q_width,
                center: self.q_center,
                mode: self.q_mode,
            },
            QKind::Monochromatic => InitialQ::Monochromatic {
                amp: self.q_amp,
                mode: self.q_mode,
            },
        }
    }

    /// Effective settings as `key = value` lines, in a stable order; reading
    /// them back reproduces this configuration.
    pub fn to_document(&self) -> String {
        let f = |v: f64| format!("{v:.16e}");
        let scheme = match self.scheme {
            Scheme::Strang => "strang",
            Scheme::Etdrk4 => "etdrk4",
        };
        let mut kv: Vec<(String, String)> = vec![
            ("physics.g".into(), f(self.params.g)),
            ("physics.h1".into(), f(self.params.h1)),
            ("physics.rho".into(), f(self.params.rho)),
            ("physics.rho1".into(), f(self.params.rho1)),
            ("scaling.epsilon".into(), f(self.epsilon)),
            ("scaling.delta".into(), f(self.delta)),
            ("grid.n".into(), self.n.to_string()),
            ("grid.length".into(), f(self.length)),
            ("time.scheme".into(), scheme.into()),
            ("time.dt".into(), f(self.dt)),
            ("time.t_end".into(), f(self.t_end)),
            ("time.cfl_guard".into(), f(self.cfl_guard)),
            ("time.dealias".into(), self.dealias.to_string()),
            (
                "time.scale".into(),
                match self.time_scale {
                    TimeScale::Tau => "tau",
                    TimeScale::Tau1 => "tau1",
                }
                .into(),
            ),
            (
                "model.system".into(),
                match self.system {
                    System::Reduced => "reduced",
                    System::Full => "full",
                }
                .into(),
            ),
            (
                "coeffs.source".into(),
                match self.source {
                    CoeffSource::Derived => "derived",
                    CoeffSource::Explicit => "explicit",
                }
                .into(),
            ),
            ("coeffs.a".into(), f(self.explicit.a)),
            ("coeffs.b".into(), f(self.explicit.b)),
            ("coeffs.c".into(), f(self.explicit.c)),
            ("coeffs.d".into(), f(self.explicit.d)),
            ("coeffs.alpha".into(), f(self.explicit.alpha)),
            ("coeffs.beta".into(), f(self.explicit.beta)),
            ("coeffs.kappa3".into(), f(self.explicit_kappa3)),
            ("coeffs.kappa4".into(), f(self.explicit_kappa4)),
            (
                "init.r".into(),
                match self.r_kind {
                    RKind::Zero => "zero",
                    RKind::Gaussian => "gaussian",
                    RKind::BoSoliton => "bo-soliton",
                    RKind::Random => "random",
                }
                .into(),
            ),
            ("init.r.amp".into(), f(self.r_amp)),
            ("init.r.width".into(), f(self.r_width)),
            ("init.r.center".into(), f(self.r_center)),
            ("init.r.nu".into(), f(self.r_nu)),
            ("init.r.width_modes".into(), f(self.r_width_modes)),
            (
                "init.q".into(),
                match self.q_kind {
                    QKind::Zero => "zero",
                    QKind::Gaussian => "gaussian",
                    QKind::Monochromatic => "monochromatic",
                }
                .into(),
            ),
            ("init.q.amp".into(), f(self.q_amp)),
            ("init.q.width".into(), f(self.q_width)),
            ("init.q.center".into(), f(self.q_center)),
            ("init.q.mode".into(), self.q_mode.to_string()),
            ("output.diagnostics_every".into(), self.diagnostics_every.to_string()),
            ("output.snapshot_every".into(), self.snapshot_every.to_string()),
            ("seed".into(), self.seed.to_string()),
        ];
        if let Some(d) = &self.out_dir {
            kv.push(("output.dir".into(), d.display().to_string()));
        }
        kv.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_blank_lines_and_presets() {
        let c = RunConfig::from_document(
            "# header\n\nphysics.preset = oregon  # trailing\nphysics.h1 = 250\ngrid.n = 512\ntime.scheme = etdrk4\n",
        )
        .unwrap();
        assert_eq!(c.params.rho1, 998.0);
        assert_eq!(c.params.h1, 250.0);
        assert_eq!(c.n, 512);
        assert_eq!(c.scheme, Scheme::Etdrk4);
    }

    #[test]
    fn unknown_and_duplicate_keys_fail() {
        assert_eq!(
            RunConfig::from_document("grid.size = 4"),
            Err(ConfigError::UnknownKey("grid.size".into()))
        );
        assert_eq!(
            RunConfig::from_document("seed = 1\nseed = 2"),
            Err(ConfigError::Duplicate("seed".into()))
        );
        assert!(matches!(RunConfig::from_document("just words"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(RunConfig::from_document("grid.n = many"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(RunConfig::from_document("sweep.key = nope"), Err(ConfigError::UnknownKey(_))));
    }

    #[test]
    fn validation_rejects_bad_settings() {
        let bad = [
            "scaling.delta = 0.5",
            "scaling.delta = 0",
            "physics.rho1 = 1000",
            "grid.n = 100",
            "time.dt = 0",
            "verify.suites = ",
            "init.r.width = -1",
        ];
        for doc in bad {
            let c = RunConfig::from_document(doc).unwrap();
            assert!(c.validate().is_err(), "{doc}");
        }
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn document_round_trip() {
        let mut c = RunConfig::default();
        c.set("physics.preset", "oregon").unwrap();
        c.set("init.r", "bo-soliton").unwrap();
        c.set("time.scale", "tau1").unwrap();
        c.set("output.dir", "out/run").unwrap();
        c.set("coeffs.a", "0.1").unwrap();
        let back = RunConfig::from_document(&c.to_document()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn derived_model_uses_physical_coefficients() {
        let mut c = RunConfig::default();
        c.set("coeffs.source", "derived").unwrap();
        let m = c.model_coefficients().unwrap();
        assert_eq!(*c.model().unwrap().reduced(), m.reduced);
        c.set("model.system", "full").unwrap();
        c.set("time.scale", "tau1").unwrap();
        match c.model().unwrap() {
            Model::Full(f) => {
                assert!((f.reduced.a - m.reduced.a / c.epsilon).abs() <= 1e-12 * m.reduced.a.abs());
                assert!((f.kappa3 - m.kt[3]).abs() <= 1e-12 * m.kt[3].abs());
            }
            _ => panic!("expected full model"),
        }
    }
}
