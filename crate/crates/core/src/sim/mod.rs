//! Discrete-time virtual hardware.
//!
//! [`run`] replays a [`Scenario`] on a fixed 0.1 s clock. The controller,
//! classifier, fill monitor, alert gate, modem session and power model are
//! driven exactly as on the device; actuators and sensors are replaced by
//! fixed latencies and a linear fill model. Everything observable goes to an
//! [`EventLog`], and `(scenario, seed, config)` determines its bytes.

pub mod modem;
pub mod scenario;
pub mod stepper;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::app::{Config, EventLog, EventLogRecord};
use crate::classifier::{AccuracyModel, Taxonomy};
use crate::domain::{GarbageLabel, Station, Timestamp};
use crate::fillmon::{distance_to_echo, BinGeometry, FillAlert, FillMonitor};
use crate::fsm::{Action, Controller, ControllerState, DepositedItem, Event, TimerId};
use crate::gsm::{format_alert, AlertGate, GateDecision, JobStatus, SmsJob};
use crate::power::{
    conservation_residual, power_step, protection_step, terminal_voltage, BatteryFlow, PowerState,
};

pub use modem::{LinkEvent, MockModem, ModemLink};
pub use scenario::{parse_scenario, Directive, FaultMode, Scenario, ScenarioError};
pub use stepper::{rotate_time, StepperConfig};

pub const TICKS_PER_SEC: u64 = 10;
pub const DT_S: f64 = 1.0 / TICKS_PER_SEC as f64;

/// Start of tick `tick`.
pub fn tick_time(tick: u64) -> Timestamp {
    Timestamp::from_secs(tick as f64 / TICKS_PER_SEC as f64)
}

/// Whole ticks needed to cover `secs`, rounding up.
pub fn ticks_for(secs: f64) -> u64 {
    // the epsilon keeps 0.3 s at 3 ticks despite 0.3 * 10 = 3.0000000000000004
    (secs * TICKS_PER_SEC as f64 - 1e-9).ceil().max(0.0) as u64
}

/// The 8×8 happy face shown after a successful deposit.
pub const HAPPY_FACE: [&str; 8] = [
    "..####..",
    ".#....#.",
    "#.#..#.#",
    "#......#",
    "#.#..#.#",
    "#..##..#",
    ".#....#.",
    "..####..",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub deposit_delay_s: f64,
    pub lid_latency_s: f64,
    pub capture_latency_s: f64,
    pub classify_latency_s: f64,
    pub tip_latency_s: f64,
    pub emoticon_s: f64,
    pub stepper: StepperConfig,
    pub poll_interval_s: f64,
    pub item_height_cm: f64,
    pub modem_latency_s: f64,
    pub modem_chunk_bytes: usize,
    pub load_w: f64,
    pub initial_soc: f64,
    pub initial_irradiance: f64,
    pub power_log_interval_s: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            deposit_delay_s: 1.0,
            lid_latency_s: 0.5,
            capture_latency_s: 0.2,
            classify_latency_s: 0.3,
            tip_latency_s: 1.0,
            emoticon_s: 2.0,
            stepper: StepperConfig::default(),
            poll_interval_s: 5.0,
            item_height_cm: 2.5,
            modem_latency_s: 0.1,
            modem_chunk_bytes: 7,
            load_w: 30.0,
            initial_soc: 1.0,
            initial_irradiance: 0.0,
            power_log_interval_s: 60.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VirtualBin {
    pub station: Station,
    pub item_count: u32,
    /// Items ever received, including ones since emptied.
    pub received: u32,
}

impl VirtualBin {
    pub fn new(station: Station) -> Self {
        VirtualBin { station, item_count: 0, received: 0 }
    }

    /// Distance from the sensor to the top of the pile.
    pub fn distance_cm(&self, geometry: &BinGeometry, item_height_cm: f64) -> f64 {
        (geometry.depth_cm() - f64::from(self.item_count) * item_height_cm).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub deposits: u32,
    pub busy: u32,
    pub released: u32,
    pub per_station: [u32; 3],
    pub bin_counts: [u32; 3],
    pub alerts_raised: u32,
    pub alerts_suppressed: u32,
    pub sms_sent: u32,
    pub sms_failed: u32,
    pub lockouts: u32,
    pub final_soc: f64,
    pub final_state: String,
    pub load_connected: bool,
    /// Largest energy-balance residual seen, relative to energy throughput.
    pub max_relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub log: EventLog,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq)]
enum Pending {
    Fsm(Event),
    Deposit(DepositedItem),
    LidSettled(bool),
    Captured,
    Classify,
    Release(GarbageLabel),
}

/// Runs `scenario` to its `end` directive with the builtin taxonomy.
pub fn run(scenario: &Scenario, seed: u64, config: &Config) -> SimOutcome {
    run_with_taxonomy(scenario, seed, config, Taxonomy::builtin())
}

pub fn run_with_taxonomy(scenario: &Scenario, seed: u64, config: &Config, taxonomy: Taxonomy) -> SimOutcome {
    let mut sim = Simulation::new(config, seed, taxonomy);
    sim.run(scenario);
    sim.finish()
}

struct Simulation<'a> {
    cfg: &'a Config,
    taxonomy: Taxonomy,
    model: AccuracyModel,
    draw_index: u64,
    controller: Controller,
    timers: [Option<u64>; 3],
    pending: BTreeMap<(u64, u64), Pending>,
    seq: u64,
    carousel: Station,
    bins: [VirtualBin; 3],
    monitor: FillMonitor,
    gate: AlertGate,
    link: ModemLink,
    power: PowerState,
    irradiance: f64,
    tick: u64,
    log: EventLog,
    summary: Summary,
}

fn timer_slot(t: TimerId) -> usize {
    TimerId::ALL.iter().position(|&x| x == t).expect("listed")
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serialises")
}

/// Printable rendering of modem bytes: ASCII as-is, `\r`, `\n` and `\xNN`
/// escapes otherwise.
pub fn escape_bytes(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len());
    for &b in bytes {
        match b {
            b'\r' => s.push_str("\\r"),
            b'\n' => s.push_str("\\n"),
            b'\\' => s.push_str("\\\\"),
            0x20..=0x7e => s.push(b as char),
            _ => s.push_str(&format!("\\x{b:02X}")),
        }
    }
    s
}

impl<'a> Simulation<'a> {
    fn new(cfg: &'a Config, seed: u64, taxonomy: Taxonomy) -> Self {
        let sim = &cfg.sim;
        Simulation {
            cfg,
            taxonomy,
            model: AccuracyModel::new(cfg.accuracy, seed).expect("accuracy validated by config"),
            draw_index: 0,
            controller: Controller::new(cfg.fsm),
            timers: [None; 3],
            pending: BTreeMap::new(),
            seq: 0,
            carousel: Station::ALL[0],
            bins: Station::ALL.map(VirtualBin::new),
            monitor: FillMonitor::new(cfg.thresholds, cfg.geometry),
            gate: AlertGate::new(cfg.gsm.cooldown_s),
            link: ModemLink::new(&cfg.gsm, sim.modem_latency_s, sim.modem_chunk_bytes),
            power: PowerState::new(sim.initial_soc).expect("soc validated by config"),
            irradiance: sim.initial_irradiance,
            tick: 0,
            log: EventLog::new(),
            summary: Summary {
                deposits: 0,
                busy: 0,
                released: 0,
                per_station: [0; 3],
                bin_counts: [0; 3],
                alerts_raised: 0,
                alerts_suppressed: 0,
                sms_sent: 0,
                sms_failed: 0,
                lockouts: 0,
                final_soc: sim.initial_soc,
                final_state: "idle".into(),
                load_connected: true,
                max_relative_residual: 0.0,
            },
        }
    }

    fn now(&self) -> Timestamp {
        tick_time(self.tick)
    }

    fn emit(&mut self, kind: &str, payload: Value) {
        let rec = EventLogRecord::new(self.now(), kind).with_fields(payload);
        self.log.push(rec);
    }

    fn schedule(&mut self, after_s: f64, what: Pending) {
        let due = self.tick + ticks_for(after_s);
        self.pending.insert((due, self.seq), what);
        self.seq += 1;
    }

    fn run(&mut self, scenario: &Scenario) {
        let end_tick = ticks_for(scenario.end_time().secs());
        let poll_ticks = ticks_for(self.cfg.sim.poll_interval_s).max(1);
        let power_log_ticks = ticks_for(self.cfg.sim.power_log_interval_s).max(1);
        let mut next = scenario.directives().iter().peekable();
        for tick in 0..=end_tick {
            self.tick = tick;
            while let Some(d) = next.next_if(|d| ticks_for(d.at.secs()) <= tick) {
                self.emit("directive", json!({ "line": d.line, "text": d.directive.to_string() }));
                self.apply(&d.directive);
            }
            self.settle();
            self.step_power();
            self.settle();
            if tick % poll_ticks == 0 {
                self.poll_fill();
            }
            self.step_modem();
            if tick % power_log_ticks == 0 || tick == end_tick {
                self.log_power("power");
            }
        }
    }

    fn apply(&mut self, directive: &Directive) {
        match directive {
            Directive::Deposit(label) => {
                self.summary.deposits += 1;
                let busy = !self.controller.state().is_idle();
                self.deliver(Event::MotionDetected);
                if busy {
                    self.summary.busy += 1;
                    let state = self.controller.state().tag();
                    self.emit("busy", json!({ "label": label.as_str(), "state": state }));
                } else {
                    let item = DepositedItem { label: label.clone(), truth: self.taxonomy.get(label) };
                    self.schedule(self.cfg.sim.deposit_delay_s, Pending::Deposit(item));
                }
            }
            Directive::Irradiance(x) => self.irradiance = *x,
            Directive::EmptyBin(s) => {
                let bin = &mut self.bins[s.index()];
                let removed = bin.item_count;
                bin.item_count = 0;
                self.emit("bin_emptied", json!({ "station": s.index(), "removed": removed }));
            }
            Directive::ModemFault { mode, count } => self.link.modem_mut().inject_fault(*mode, *count),
            Directive::ActuatorFault(detail) => self.deliver(Event::ActuatorFault(detail.clone())),
            Directive::End => {}
        }
    }

    /// Handles everything due at or before the current tick, including work
    /// scheduled with zero latency while doing so.
    fn settle(&mut self) {
        loop {
            if let Some(entry) = self.pending.first_entry() {
                if entry.key().0 <= self.tick {
                    let what = entry.remove();
                    self.handle_pending(what);
                    continue;
                }
            }
            let due = TimerId::ALL
                .into_iter()
                .find(|&t| self.timers[timer_slot(t)].is_some_and(|d| d <= self.tick));
            match due {
                Some(t) => {
                    self.timers[timer_slot(t)] = None;
                    self.deliver(Event::TimerExpired(t));
                }
                None => break,
            }
        }
    }

    fn handle_pending(&mut self, what: Pending) {
        match what {
            Pending::Fsm(e) => self.deliver(e),
            Pending::Deposit(item) => {
                if matches!(self.controller.state(), ControllerState::LidOpen) {
                    self.deliver(Event::DepositDetected(item));
                } else {
                    let state = self.controller.state().tag();
                    self.emit("deposit_lost", json!({ "label": item.label.as_str(), "state": state }));
                }
            }
            Pending::LidSettled(open) => self.emit("lid", json!({ "open": open })),
            Pending::Captured => {
                if let ControllerState::Recognizing { item } = self.controller.state() {
                    let label = item.label.as_str().to_string();
                    self.emit("image_captured", json!({ "label": label }));
                    self.schedule(self.cfg.sim.classify_latency_s, Pending::Classify);
                }
            }
            Pending::Classify => self.classify(),
            Pending::Release(label) => {
                let s = self.carousel;
                let bin = &mut self.bins[s.index()];
                bin.item_count += 1;
                bin.received += 1;
                let count = bin.item_count;
                self.summary.released += 1;
                self.emit(
                    "bin_item",
                    json!({ "station": s.index(), "label": label.as_str(), "item_count": count }),
                );
                self.deliver(Event::ReleaseComplete);
            }
        }
    }

    fn classify(&mut self) {
        let ControllerState::Recognizing { item } = self.controller.state() else {
            self.emit("classification_discarded", json!({ "state": self.controller.state().tag() }));
            return;
        };
        let item = item.clone();
        match item.truth {
            Some(truth) => {
                let draw = self.draw_index;
                self.draw_index += 1;
                let result = self.model.classify(truth, draw);
                self.emit(
                    "classified",
                    json!({
                        "label": item.label.as_str(),
                        "truth": truth.token(),
                        "predicted": result.category.token(),
                        "confidence": result.confidence,
                        "draw_index": draw,
                    }),
                );
                self.deliver(Event::Classified(result));
            }
            None => {
                self.emit(
                    "classification_failed",
                    json!({ "label": item.label.as_str(), "reason": "label not in taxonomy" }),
                );
                self.deliver(Event::ClassificationFailed);
            }
        }
    }

    fn deliver(&mut self, event: Event) {
        let now = self.now();
        let before = self.controller.state().tag();
        let actions = self.controller.handle(&event, now);
        self.emit("event", to_json(&event));
        let after = self.controller.state();
        if after.tag() != before {
            let mut payload = json!({ "from": before, "to": after.tag() });
            if let ControllerState::Fault(reason) = after {
                payload["reason"] = Value::from(reason.clone());
            }
            self.emit("state", payload);
        }
        for a in actions {
            self.emit("action", to_json(&a));
            self.execute(a);
        }
    }

    fn execute(&mut self, action: Action) {
        let sim = &self.cfg.sim;
        match action {
            Action::OpenLid => self.schedule(sim.lid_latency_s, Pending::LidSettled(true)),
            Action::CloseLid => self.schedule(sim.lid_latency_s, Pending::LidSettled(false)),
            Action::StartTimer { timer, duration_s } => {
                self.timers[timer_slot(timer)] = Some(self.tick + ticks_for(duration_s).max(1));
            }
            Action::CancelTimer(timer) => self.timers[timer_slot(timer)] = None,
            Action::CaptureImage => self.schedule(sim.capture_latency_s, Pending::Captured),
            Action::RotateToStation(to) => {
                let from = self.carousel;
                let (steps, secs) = rotate_time(from, to, &sim.stepper);
                self.carousel = to;
                self.emit(
                    "carousel",
                    json!({ "from": from.index(), "to": to.index(), "steps": steps, "seconds": secs }),
                );
                self.schedule(secs, Pending::Fsm(Event::RouteComplete));
            }
            Action::SetLed { .. } => {}
            Action::TipStorageBox => {
                let label = match self.controller.state() {
                    ControllerState::Releasing { item, .. } => item.label.clone(),
                    _ => unreachable!("the controller tips only on entering Releasing"),
                };
                self.schedule(sim.tip_latency_s, Pending::Release(label));
            }
            Action::ShowEmoticon(face) => {
                self.emit("emoticon", json!({ "face": to_json(&face), "rows": HAPPY_FACE }));
                self.schedule(sim.emoticon_s, Pending::Fsm(Event::EmoticonDone));
            }
            Action::QueueLog(deposit) => {
                self.summary.per_station[deposit.routed_station.index()] += 1;
                self.emit("deposit", to_json(&deposit));
            }
        }
    }

    fn step_power(&mut self) {
        let cfg = &self.cfg.power;
        let stepped = power_step(&self.power, self.irradiance, self.cfg.sim.load_w, DT_S, cfg)
            .expect("inputs validated by config and scenario parser");
        let next = protection_step(&stepped, cfg);
        let was_connected = self.power.load_connected;
        self.power = next;

        let p = &self.power;
        let throughput = p.cumulative_generated_wh
            + p.cumulative_delivered_wh
            + p.cumulative_curtailed_wh
            + p.cumulative_loss_wh
            + self.cfg.sim.initial_soc * cfg.battery_capacity_wh;
        let rel = conservation_residual(self.cfg.sim.initial_soc, p, cfg).abs() / throughput.max(1e-12);
        self.summary.max_relative_residual = self.summary.max_relative_residual.max(rel);

        match (was_connected, self.power.load_connected) {
            (true, false) => {
                self.summary.lockouts += 1;
                self.log_power("power_lockout");
                self.deliver(Event::ActuatorFault("power lockout".into()));
            }
            (false, true) => {
                self.log_power("power_reconnect");
                // restoring the load power-cycles the controller
                self.controller.reset();
                self.timers = [None; 3];
                self.pending.clear();
                self.emit("controller_reset", json!({ "reason": "power restored" }));
            }
            _ => {}
        }
    }

    fn log_power(&mut self, kind: &str) {
        let p = self.power;
        let flow = match p.flow {
            BatteryFlow::Idle => "idle",
            BatteryFlow::Charging => "charging",
            BatteryFlow::Discharging => "discharging",
            BatteryFlow::Exhausted => "exhausted",
        };
        self.emit(
            kind,
            json!({
                "soc": p.soc,
                "voltage": terminal_voltage(&p, &self.cfg.power),
                "load_connected": p.load_connected,
                "flow": flow,
                "irradiance": self.irradiance,
                "generated_wh": p.cumulative_generated_wh,
                "delivered_wh": p.cumulative_delivered_wh,
                "curtailed_wh": p.cumulative_curtailed_wh,
                "loss_wh": p.cumulative_loss_wh,
            }),
        );
    }

    fn poll_fill(&mut self) {
        let now = self.now();
        for s in Station::ALL {
            let distance = self.bins[s.index()].distance_cm(&self.cfg.geometry, self.cfg.sim.item_height_cm);
            let echo = distance_to_echo(distance);
            match self.monitor.observe_echo(s, echo, now) {
                Ok(alert) => {
                    let pct = self.monitor.bin(s).fill_pct;
                    self.emit("fill", json!({ "station": s.index(), "echo_us": echo, "fill_pct": pct }));
                    if let Some(alert) = alert {
                        self.raise(alert);
                    }
                }
                Err(e) => self.emit("fill_error", json!({ "station": s.index(), "error": e.to_string() })),
            }
        }
    }

    fn raise(&mut self, alert: FillAlert) {
        self.summary.alerts_raised += 1;
        let decision = self.gate.admit(&alert, self.now());
        let allowed = decision == GateDecision::Allow;
        self.emit(
            "alert",
            json!({
                "station": alert.station.index(),
                "fill_pct": alert.fill_pct,
                "decision": if allowed { "allow" } else { "suppress" },
            }),
        );
        if !allowed {
            self.summary.alerts_suppressed += 1;
            return;
        }
        let body = format_alert(&alert, alert.station.category());
        for r in self.cfg.gsm.recipients.clone() {
            let job = SmsJob::new(r.as_str(), &body).expect("alert bodies are short printable text");
            self.emit("sms_queued", json!({ "recipient": r.as_str(), "body": body }));
            self.link.submit(job);
        }
    }

    fn step_modem(&mut self) {
        for e in self.link.tick(self.tick) {
            match e {
                LinkEvent::Tx(b) => self.emit("modem_tx", json!({ "bytes": escape_bytes(&b) })),
                LinkEvent::Rx(b) => self.emit("modem_rx", json!({ "bytes": escape_bytes(&b) })),
                LinkEvent::Token(t) => self.emit("modem_token", to_json(&t)),
                LinkEvent::Finished(job) => {
                    let mut payload = json!({
                        "recipient": job.recipient.as_str(),
                        "body": job.body.as_str(),
                        "attempts": job.attempts,
                    });
                    match &job.status {
                        JobStatus::Sent(r) => {
                            self.summary.sms_sent += 1;
                            payload["status"] = "sent".into();
                            payload["msg_ref"] = (*r).into();
                        }
                        JobStatus::Failed(reason) => {
                            self.summary.sms_failed += 1;
                            payload["status"] = "failed".into();
                            payload["reason"] = reason.clone().into();
                        }
                        JobStatus::Pending | JobStatus::InFlight => unreachable!("finished jobs only"),
                    }
                    self.emit("sms_job", payload);
                }
            }
        }
    }

    fn finish(mut self) -> SimOutcome {
        self.summary.bin_counts = self.bins.map(|b| b.item_count);
        self.summary.final_soc = self.power.soc;
        self.summary.final_state = self.controller.state().tag().to_string();
        self.summary.load_connected = self.power.load_connected;
        let summary = to_json(&self.summary);
        self.emit("end", summary);
        SimOutcome { log: self.log, summary: self.summary }
    }
}
