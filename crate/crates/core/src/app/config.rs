//! Flat `key = value` configuration.
//!
//! Every key is range-checked on load and unknown keys are rejected. Cross-field
//! relations (threshold ordering, voltage ordering) are checked after all keys
//! are applied.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::fillmon::{BinGeometry, FillThresholds};
use crate::fsm::FsmConfig;
use crate::gsm::{GsmConfig, Recipient};
use crate::power::PowerConfig;
use crate::sim::SimConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("{key}: cannot parse `{value}`")]
    InvalidValue { key: String, value: String },
    #[error("{key} = {value} is out of range {range}")]
    OutOfRange { key: String, value: String, range: String },
    #[error("{key}: {reason}")]
    Inconsistent { key: String, reason: String },
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl ConfigError {
    /// The config key this error names, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { key, .. }
            | ConfigError::DuplicateKey { key, .. }
            | ConfigError::InvalidValue { key, .. }
            | ConfigError::OutOfRange { key, .. }
            | ConfigError::Inconsistent { key, .. } => Some(key),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub fsm: FsmConfig,
    pub thresholds: FillThresholds,
    pub geometry: BinGeometry,
    pub gsm: GsmConfig,
    pub power: PowerConfig,
    pub sim: SimConfig,
    pub accuracy: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            fsm: FsmConfig::default(),
            thresholds: FillThresholds::default(),
            geometry: BinGeometry::default(),
            gsm: GsmConfig::default(),
            power: PowerConfig::default(),
            sim: SimConfig::default(),
            accuracy: crate::classifier::DEFAULT_ACCURACY,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Bounds {
    lo: f64,
    hi: f64,
    lo_open: bool,
}

impl Bounds {
    const fn closed(lo: f64, hi: f64) -> Self {
        Bounds { lo, hi, lo_open: false }
    }

    /// `(lo, hi]`
    const fn above(lo: f64, hi: f64) -> Self {
        Bounds { lo, hi, lo_open: true }
    }

    fn contains(&self, v: f64) -> bool {
        let lower = if self.lo_open { v > self.lo } else { v >= self.lo };
        lower && v <= self.hi
    }

    fn describe(&self) -> String {
        format!("{}{}, {}]", if self.lo_open { "(" } else { "[" }, self.lo, self.hi)
    }
}

enum Setter {
    Float(Bounds, fn(&mut Config, f64)),
    Int(Bounds, fn(&mut Config, u64)),
    Text(fn(&mut Config, &str) -> Result<(), String>),
}

struct Field {
    key: &'static str,
    get: fn(&Config) -> String,
    set: Setter,
}

macro_rules! float_field {
    ($key:literal, $bounds:expr, |$c:ident| $place:expr) => {
        Field {
            key: $key,
            get: |$c| $place.to_string(),
            set: Setter::Float($bounds, |$c, v| $place = v),
        }
    };
}

macro_rules! int_field {
    ($key:literal, $ty:ty, $bounds:expr, |$c:ident| $place:expr) => {
        Field {
            key: $key,
            get: |$c| $place.to_string(),
            set: Setter::Int($bounds, |$c, v| $place = v as $ty),
        }
    };
}

const SECONDS: Bounds = Bounds::above(0.0, 86_400.0);
const LATENCY: Bounds = Bounds::closed(0.0, 600.0);
const VOLTS: Bounds = Bounds::above(0.0, 60.0);
const FRACTION: Bounds = Bounds::closed(0.0, 1.0);

fn fields() -> Vec<Field> {
    vec![
        float_field!("fsm.lid_timeout_s", SECONDS, |c| c.fsm.lid_timeout_s),
        float_field!("fsm.countdown_s", SECONDS, |c| c.fsm.countdown_s),
        float_field!("fsm.route_timeout_s", SECONDS, |c| c.fsm.route_timeout_s),
        Field {
            key: "fill.depth_cm",
            get: |c| c.geometry.depth_cm().to_string(),
            set: Setter::Float(Bounds::above(0.0, 400.0), |c, v| {
                c.geometry = BinGeometry::new(v).expect("range checked")
            }),
        },
        float_field!("fill.full_pct", Bounds::above(0.0, 100.0), |c| c.thresholds.full_pct),
        float_field!("fill.clear_pct", Bounds::closed(0.0, 100.0), |c| c.thresholds.clear_pct),
        int_field!("fill.debounce_k", u32, Bounds::closed(1.0, 1000.0), |c| c.thresholds.debounce_k),
        float_field!("fill.poll_interval_s", SECONDS, |c| c.sim.poll_interval_s),
        float_field!("fill.item_height_cm", Bounds::above(0.0, 400.0), |c| c.sim.item_height_cm),
        float_field!("gsm.step_timeout_s", SECONDS, |c| c.gsm.step_timeout_s),
        int_field!("gsm.max_retries", u32, Bounds::closed(0.0, 100.0), |c| c.gsm.max_retries),
        float_field!("gsm.cooldown_s", Bounds::closed(0.0, 1.0e7), |c| c.gsm.cooldown_s),
        Field {
            key: "gsm.recipients",
            get: |c| {
                c.gsm.recipients.iter().map(Recipient::as_str).collect::<Vec<_>>().join(", ")
            },
            set: Setter::Text(|c, v| {
                c.gsm.recipients = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| Recipient::new(s).map_err(|e| e.to_string()))
                    .collect::<Result<_, _>>()?;
                Ok(())
            }),
        },
        float_field!("power.panel_rated_w", Bounds::above(0.0, 10_000.0), |c| c.power.panel_rated_w),
        float_field!("power.battery_capacity_wh", Bounds::above(0.0, 1.0e6), |c| c.power.battery_capacity_wh),
        float_field!("power.v_full", VOLTS, |c| c.power.v_full),
        float_field!("power.v_empty", VOLTS, |c| c.power.v_empty),
        float_field!("power.v_lockout", VOLTS, |c| c.power.v_lockout),
        float_field!("power.v_reconnect", VOLTS, |c| c.power.v_reconnect),
        float_field!("power.charge_limit_v", VOLTS, |c| c.power.charge_limit_v),
        float_field!("power.charging_bias_v", Bounds::closed(0.0, 5.0), |c| c.power.charging_bias_v),
        float_field!("power.collapse_v", Bounds::closed(0.0, 60.0), |c| c.power.collapse_v),
        float_field!("power.inverter_efficiency", Bounds::above(0.0, 1.0), |c| c.power.inverter_efficiency),
        float_field!("power.load_w", Bounds::closed(0.0, 10_000.0), |c| c.sim.load_w),
        float_field!("power.initial_soc", FRACTION, |c| c.sim.initial_soc),
        float_field!("power.initial_irradiance", FRACTION, |c| c.sim.initial_irradiance),
        float_field!("power.log_interval_s", SECONDS, |c| c.sim.power_log_interval_s),
        float_field!("classifier.accuracy", FRACTION, |c| c.accuracy),
        Field {
            key: "sim.seed",
            get: |c| c.seed.to_string(),
            set: Setter::Text(|c, v| {
                c.seed = v.parse().map_err(|_| format!("`{v}` is not an unsigned integer"))?;
                Ok(())
            }),
        },
        float_field!("sim.deposit_delay_s", LATENCY, |c| c.sim.deposit_delay_s),
        float_field!("sim.lid_latency_s", LATENCY, |c| c.sim.lid_latency_s),
        float_field!("sim.capture_latency_s", LATENCY, |c| c.sim.capture_latency_s),
        float_field!("sim.classify_latency_s", LATENCY, |c| c.sim.classify_latency_s),
        float_field!("sim.tip_latency_s", LATENCY, |c| c.sim.tip_latency_s),
        float_field!("sim.emoticon_s", LATENCY, |c| c.sim.emoticon_s),
        float_field!("sim.modem_latency_s", Bounds::closed(0.0, 60.0), |c| c.sim.modem_latency_s),
        int_field!("sim.modem_chunk_bytes", usize, Bounds::closed(1.0, 4096.0), |c| c.sim.modem_chunk_bytes),
        int_field!("stepper.steps_per_rev", u32, Bounds::closed(1.0, 100_000.0), |c| c.sim.stepper.steps_per_rev),
        int_field!("stepper.microsteps", u32, Bounds::closed(1.0, 256.0), |c| c.sim.stepper.microsteps),
        float_field!("stepper.step_period_s", Bounds::above(0.0, 1.0), |c| c.sim.stepper.step_period_s),
    ]
}

/// All recognised keys, in file order.
pub fn keys() -> Vec<&'static str> {
    fields().iter().map(|f| f.key).collect()
}

fn apply(cfg: &mut Config, field: &Field, raw: &str) -> Result<(), ConfigError> {
    let invalid = || ConfigError::InvalidValue { key: field.key.into(), value: raw.into() };
    let out_of_range = |b: &Bounds| ConfigError::OutOfRange {
        key: field.key.into(),
        value: raw.into(),
        range: b.describe(),
    };
    match &field.set {
        Setter::Float(b, set) => {
            let v: f64 = raw.parse().map_err(|_| invalid())?;
            if !v.is_finite() || !b.contains(v) {
                return Err(out_of_range(b));
            }
            set(cfg, v);
        }
        Setter::Int(b, set) => {
            let v: u64 = match raw.parse() {
                Ok(v) => v,
                // a well-formed negative is a range problem, not a syntax one
                Err(_) if raw.parse::<i64>().is_ok() => return Err(out_of_range(b)),
                Err(_) => return Err(invalid()),
            };
            if !b.contains(v as f64) {
                return Err(out_of_range(b));
            }
            set(cfg, v);
        }
        Setter::Text(set) => set(cfg, raw).map_err(|reason| ConfigError::Inconsistent {
            key: field.key.into(),
            reason,
        })?,
    }
    Ok(())
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let fields = fields();
        let mut cfg = Config::default();
        let mut seen = std::collections::BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            let field = fields
                .iter()
                .find(|f| f.key == key)
                .ok_or_else(|| ConfigError::UnknownKey { line, key: key.into() })?;
            if !seen.insert(field.key) {
                return Err(ConfigError::DuplicateKey { line, key: key.into() });
            }
            apply(&mut cfg, field, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Cross-field checks.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let inconsistent = |key: &str, reason: &str| {
            Err(ConfigError::Inconsistent { key: key.into(), reason: reason.into() })
        };
        if self.thresholds.clear_pct >= self.thresholds.full_pct {
            return inconsistent("fill.clear_pct", "must be below fill.full_pct");
        }
        let p = &self.power;
        if p.v_lockout >= p.v_reconnect {
            return inconsistent("power.v_lockout", "must be below power.v_reconnect");
        }
        if p.v_empty >= p.v_full {
            return inconsistent("power.v_empty", "must be below power.v_full");
        }
        if p.v_full > p.charge_limit_v {
            return inconsistent("power.v_full", "must not exceed power.charge_limit_v");
        }
        if p.collapse_v >= p.v_lockout {
            return inconsistent("power.collapse_v", "must be below power.v_lockout");
        }
        if let Err(e) = p.validate() {
            return inconsistent("power", &e.to_string());
        }
        Ok(())
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in fields() {
            let _ = writeln!(out, "{} = {}", f.key, (f.get)(self));
        }
        out
    }

    /// Applies one `key = value` override on top of this config.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let fields = fields();
        let field = fields
            .iter()
            .find(|f| f.key == key)
            .ok_or_else(|| ConfigError::UnknownKey { line: 0, key: key.into() })?;
        apply(self, field, value)?;
        self.validate()
    }
}
