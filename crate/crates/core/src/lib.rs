//! Control plane for a solar-powered, three-way waste segregation bin.
//!
//! The deposit controller, classifier boundary, fill monitoring, SMS alerting
//! and power protection are pure state machines. [`sim`] wires them to virtual
//! hardware on a fixed-step clock so whole scenarios replay deterministically.

pub mod app;
pub mod classifier;
pub mod domain;
pub mod fillmon;
pub mod fsm;
pub mod gsm;
pub mod power;
pub mod sim;

pub use domain::{GarbageLabel, LedColor, Station, Timestamp, WasteCategory};
