//! Text-mode SMS over an AT-command modem.
//!
//! The wire grammar is fixed: commands are ASCII terminated by CR, responses are
//! CRLF-delimited lines except the `"> "` body prompt, and a message body ends
//! with SUB (0x1A).

mod job;
mod parser;
mod session;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::domain::{Station, Timestamp, WasteCategory};
use crate::fillmon::FillAlert;

pub use job::{encode_send_sequence, ExpectedReply, JobStatus, Recipient, SendStep, SmsBody, SmsJob, MAX_BODY_BYTES};
pub use parser::{parse_feed, parse_token, AtParser, AtResponse, MAX_BUFFER};
pub use session::{GsmConfig, ModemSession, SessionOutput, SessionPhase};

pub const CR: u8 = 0x0D;
pub const SUB: u8 = 0x1A;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GsmError {
    #[error("invalid recipient `{0}`: expected '+' followed by 8-15 digits")]
    InvalidRecipient(String),
    #[error("body is {0} bytes, limit is {MAX_BODY_BYTES}")]
    BodyTooLong(usize),
    #[error("body contains control byte 0x{0:02X}")]
    BodyHasControlBytes(u8),
    #[error("parse buffer overflow: {0} bytes retained")]
    BufferOverflow(usize),
}

/// SMS text for a full-bin alert. Fill is rounded to a whole percent and time
/// to one decimal.
pub fn format_alert(alert: &FillAlert, category: WasteCategory) -> String {
    let pct = alert.fill_pct.clamp(0.0, 100.0).round() as u32;
    format!(
        "GULP ALERT: {} bin FULL ({}%) at t={:.1}s",
        category.token(),
        pct,
        alert.at.secs()
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateDecision {
    Allow,
    Suppress,
}

/// Per-station SMS cooldown.
#[derive(Debug, Clone, PartialEq)]
pub struct AlertGate {
    cooldown_s: f64,
    last_sent: BTreeMap<Station, Timestamp>,
}

impl AlertGate {
    pub fn new(cooldown_s: f64) -> Self {
        AlertGate { cooldown_s, last_sent: BTreeMap::new() }
    }

    pub fn check(&self, alert: &FillAlert, now: Timestamp) -> GateDecision {
        alert_gate(&self.last_sent, self.cooldown_s, alert, now)
    }

    pub fn record(&mut self, station: Station, at: Timestamp) {
        self.last_sent.insert(station, at);
    }

    /// Checks and, when allowed, records the dispatch in one step.
    pub fn admit(&mut self, alert: &FillAlert, now: Timestamp) -> GateDecision {
        let decision = self.check(alert, now);
        if decision == GateDecision::Allow {
            self.record(alert.station, now);
        }
        decision
    }
}

pub fn alert_gate(
    last_sent_per_station: &BTreeMap<Station, Timestamp>,
    cooldown_s: f64,
    alert: &FillAlert,
    now: Timestamp,
) -> GateDecision {
    match last_sent_per_station.get(&alert.station) {
        Some(prev) if now.since(*prev) < cooldown_s => GateDecision::Suppress,
        _ => GateDecision::Allow,
    }
}
