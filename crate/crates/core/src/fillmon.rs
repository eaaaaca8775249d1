//! Ultrasonic fill-level monitoring with debounced, hysteretic full-bin alerts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Station, Timestamp};

/// cm per µs, speed of sound at 343 m/s.
pub const SOUND_CM_PER_US: f64 = 0.0343;
/// Usable range ceiling of an HC-SR04 class sensor.
pub const MAX_RANGE_CM: f64 = 400.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum FillError {
    #[error("echo of {echo_us} µs maps to {distance_cm:.1} cm, beyond the {MAX_RANGE_CM} cm range")]
    OutOfRange { echo_us: f64, distance_cm: f64 },
    #[error("invalid echo duration {0} µs")]
    InvalidEcho(f64),
    #[error("bin depth must be positive, got {0} cm")]
    InvalidDepth(f64),
}

pub fn echo_to_distance(echo_duration_us: f64) -> Result<f64, FillError> {
    if echo_duration_us.is_nan() || echo_duration_us < 0.0 || !echo_duration_us.is_finite() {
        return Err(FillError::InvalidEcho(echo_duration_us));
    }
    let distance_cm = echo_duration_us * SOUND_CM_PER_US / 2.0;
    if distance_cm > MAX_RANGE_CM {
        return Err(FillError::OutOfRange { echo_us: echo_duration_us, distance_cm });
    }
    Ok(distance_cm)
}

/// Round-trip echo time for a target at `distance_cm`.
pub fn distance_to_echo(distance_cm: f64) -> f64 {
    distance_cm * 2.0 / SOUND_CM_PER_US
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinGeometry {
    depth_cm: f64,
}

impl BinGeometry {
    pub fn new(depth_cm: f64) -> Result<Self, FillError> {
        if depth_cm > 0.0 && depth_cm.is_finite() {
            Ok(BinGeometry { depth_cm })
        } else {
            Err(FillError::InvalidDepth(depth_cm))
        }
    }

    pub fn depth_cm(&self) -> f64 {
        self.depth_cm
    }
}

impl Default for BinGeometry {
    fn default() -> Self {
        BinGeometry { depth_cm: 50.0 }
    }
}

/// Percentage of the bin depth occupied, clamped to `[0, 100]`.
pub fn fill_percent(distance_cm: f64, geometry: &BinGeometry) -> f64 {
    let depth = geometry.depth_cm;
    ((depth - distance_cm) / depth).clamp(0.0, 1.0) * 100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FillThresholds {
    pub full_pct: f64,
    pub clear_pct: f64,
    pub debounce_k: u32,
}

impl Default for FillThresholds {
    fn default() -> Self {
        FillThresholds { full_pct: 90.0, clear_pct: 70.0, debounce_k: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FillAlert {
    pub station: Station,
    pub fill_pct: f64,
    pub at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinLevelState {
    pub station: Station,
    pub fill_pct: f64,
    pub consecutive_above: u32,
    pub alert_armed: bool,
}

impl BinLevelState {
    pub fn new(station: Station) -> Self {
        BinLevelState { station, fill_pct: 0.0, consecutive_above: 0, alert_armed: true }
    }

    /// Folds one reading into the state.
    ///
    /// An alert fires when the K-th consecutive reading at or above `full_pct`
    /// arrives while armed; firing disarms, and only a reading at or below
    /// `clear_pct` re-arms.
    pub fn observe(&self, th: &FillThresholds, fill_pct: f64, at: Timestamp) -> (Self, Option<FillAlert>) {
        let fill_pct = if fill_pct.is_nan() { 0.0 } else { fill_pct.clamp(0.0, 100.0) };
        let mut next = *self;
        next.fill_pct = fill_pct;

        if fill_pct <= th.clear_pct {
            next.alert_armed = true;
        }
        if fill_pct >= th.full_pct {
            next.consecutive_above = (self.consecutive_above + 1).min(th.debounce_k);
        } else {
            next.consecutive_above = 0;
        }

        let alert = if next.alert_armed && next.consecutive_above >= th.debounce_k {
            next.alert_armed = false;
            Some(FillAlert { station: self.station, fill_pct, at })
        } else {
            None
        };
        (next, alert)
    }
}

/// Independent monitors for every station.
#[derive(Debug, Clone, PartialEq)]
pub struct FillMonitor {
    thresholds: FillThresholds,
    geometry: BinGeometry,
    bins: [BinLevelState; Station::COUNT],
}

impl FillMonitor {
    pub fn new(thresholds: FillThresholds, geometry: BinGeometry) -> Self {
        FillMonitor { thresholds, geometry, bins: Station::ALL.map(BinLevelState::new) }
    }

    pub fn bin(&self, station: Station) -> &BinLevelState {
        &self.bins[station.index()]
    }

    pub fn geometry(&self) -> &BinGeometry {
        &self.geometry
    }

    /// Feeds one raw echo. Out-of-range echoes are dropped and leave the state
    /// untouched.
    pub fn observe_echo(&mut self, station: Station, echo_us: f64, at: Timestamp) -> Result<Option<FillAlert>, FillError> {
        let distance = echo_to_distance(echo_us)?;
        let pct = fill_percent(distance, &self.geometry);
        Ok(self.observe(station, pct, at))
    }

    pub fn observe(&mut self, station: Station, fill_pct: f64, at: Timestamp) -> Option<FillAlert> {
        let slot = &mut self.bins[station.index()];
        let (next, alert) = slot.observe(&self.thresholds, fill_pct, at);
        *slot = next;
        alert
    }
}
