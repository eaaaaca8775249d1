//! Scripted SIM800-style modem and the link that couples it to a
//! [`ModemSession`].

use std::collections::VecDeque;

use super::scenario::FaultMode;
use super::{tick_time, ticks_for};
use crate::gsm::{AtResponse, GsmConfig, ModemSession, Recipient, SmsJob, SUB};

/// Reply emitted in place of a real response by [`FaultMode::GarbageBytes`].
pub const GARBAGE_LINE: &[u8] = b"\r\n\xA5\xFF\x13~noise~\r\n";

/// An accepted message as seen by the network side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveredSms {
    pub recipient: String,
    pub body: Vec<u8>,
    pub msg_ref: u32,
}

/// Answers AT commands byte-for-byte the way the session expects, except for
/// queued faults which each spoil one exchange.
#[derive(Debug, Clone, Default)]
pub struct MockModem {
    faults: VecDeque<FaultMode>,
    line: Vec<u8>,
    body_for: Option<String>,
    next_ref: u32,
    exchanges: u64,
    delivered: Vec<DeliveredSms>,
}

impl MockModem {
    pub fn new() -> Self {
        Self::default()
    }

    /// The next `count` exchanges misbehave per `mode`.
    pub fn inject_fault(&mut self, mode: FaultMode, count: u32) {
        self.faults.extend(std::iter::repeat_n(mode, count as usize));
    }

    pub fn pending_faults(&self) -> usize {
        self.faults.len()
    }

    pub fn exchanges(&self) -> u64 {
        self.exchanges
    }

    pub fn delivered(&self) -> &[DeliveredSms] {
        &self.delivered
    }

    /// Accepts bytes from the host and returns whatever the modem says back.
    pub fn write(&mut self, bytes: &[u8]) -> Vec<u8> {
        let mut reply = Vec::new();
        for &b in bytes {
            let terminator = if self.body_for.is_some() { SUB } else { crate::gsm::CR };
            if b != terminator {
                self.line.push(b);
                continue;
            }
            let unit = std::mem::take(&mut self.line);
            reply.extend(self.exchange(unit));
        }
        reply
    }

    fn exchange(&mut self, unit: Vec<u8>) -> Vec<u8> {
        self.exchanges += 1;
        let body_for = self.body_for.take();
        let text = String::from_utf8_lossy(&unit);
        let command = text.trim_matches(|c: char| c == '\n' || c == '\r' || c == ' ');
        let is_send = body_for.is_some() || command.starts_with("AT+CMGS=");
        if let Some(fault) = self.faults.pop_front() {
            return match fault {
                FaultMode::ErrorReply if is_send => b"\r\n+CMS ERROR: 500\r\n".to_vec(),
                FaultMode::ErrorReply => b"\r\nERROR\r\n".to_vec(),
                FaultMode::Silence => Vec::new(),
                FaultMode::GarbageBytes => GARBAGE_LINE.to_vec(),
            };
        }
        if let Some(recipient) = body_for {
            let msg_ref = self.next_ref;
            self.next_ref = (self.next_ref + 1) % 256;
            self.delivered.push(DeliveredSms { recipient, body: unit, msg_ref });
            return format!("\r\n+CMGS: {msg_ref}\r\n\r\nOK\r\n").into_bytes();
        }
        match command {
            "AT" | "AT+CMGF=1" => b"\r\nOK\r\n".to_vec(),
            c if c.starts_with("AT+CMGS=") => {
                let number = c["AT+CMGS=".len()..].trim_matches('"');
                match Recipient::new(number) {
                    Ok(r) => {
                        self.body_for = Some(r.as_str().to_string());
                        b"\r\n> ".to_vec()
                    }
                    Err(_) => b"\r\n+CMS ERROR: 304\r\n".to_vec(),
                }
            }
            _ => b"\r\nERROR\r\n".to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinkEvent {
    /// Host to modem.
    Tx(Vec<u8>),
    /// Modem to host, as delivered in one read.
    Rx(Vec<u8>),
    Token(AtResponse),
    /// A job reached `Sent` or `Failed`.
    Finished(SmsJob),
}

/// A job queue worker: one session, one modem, replies delayed by a fixed
/// number of ticks and delivered in small reads.
#[derive(Debug, Clone)]
pub struct ModemLink {
    session: ModemSession,
    modem: MockModem,
    queue: VecDeque<SmsJob>,
    in_flight: VecDeque<(u64, Vec<u8>)>,
    latency_ticks: u64,
    chunk: usize,
}

impl ModemLink {
    pub fn new(cfg: &GsmConfig, latency_s: f64, chunk_bytes: usize) -> Self {
        ModemLink {
            session: ModemSession::new(cfg),
            modem: MockModem::new(),
            queue: VecDeque::new(),
            in_flight: VecDeque::new(),
            latency_ticks: ticks_for(latency_s).max(1),
            chunk: chunk_bytes.max(1),
        }
    }

    pub fn modem(&self) -> &MockModem {
        &self.modem
    }

    pub fn modem_mut(&mut self) -> &mut MockModem {
        &mut self.modem
    }

    pub fn session(&self) -> &ModemSession {
        &self.session
    }

    pub fn submit(&mut self, job: SmsJob) {
        self.queue.push_back(job);
    }

    pub fn is_idle(&self) -> bool {
        self.queue.is_empty() && self.in_flight.is_empty() && !self.session.is_busy()
    }

    fn transmit(&mut self, bytes: Vec<u8>, tick: u64, events: &mut Vec<LinkEvent>) {
        let reply = self.modem.write(&bytes);
        events.push(LinkEvent::Tx(bytes));
        if !reply.is_empty() {
            self.in_flight.push_back((tick + self.latency_ticks, reply));
        }
    }

    pub fn tick(&mut self, tick: u64) -> Vec<LinkEvent> {
        let now = tick_time(tick);
        let mut events = Vec::new();
        while self.in_flight.front().is_some_and(|(due, _)| *due <= tick) {
            let (_, bytes) = self.in_flight.pop_front().expect("checked");
            for piece in bytes.chunks(self.chunk) {
                events.push(LinkEvent::Rx(piece.to_vec()));
                let out = self.session.feed(piece, now);
                events.extend(out.tokens.into_iter().map(LinkEvent::Token));
                for w in out.writes {
                    self.transmit(w, tick, &mut events);
                }
                events.extend(out.outcomes.into_iter().map(LinkEvent::Finished));
            }
        }
        let polled = self.session.poll(now);
        if let Some(w) = polled.write {
            self.transmit(w, tick, &mut events);
        }
        events.extend(polled.outcome.map(LinkEvent::Finished));
        if !self.session.is_busy() {
            if let Some(job) = self.queue.pop_front() {
                let first = self.session.start(job, now).expect("session is idle");
                self.transmit(first, tick, &mut events);
            }
        }
        events
    }

    /// Runs until every queued job finishes or `max_ticks` elapse, starting at
    /// `start_tick`. Returns the events and the tick after the last one run.
    pub fn drain(&mut self, start_tick: u64, max_ticks: u64) -> (Vec<LinkEvent>, u64) {
        let mut events = Vec::new();
        let mut tick = start_tick;
        while tick < start_tick + max_ticks {
            events.extend(self.tick(tick));
            tick += 1;
            if self.is_idle() {
                break;
            }
        }
        (events, tick)
    }
}

/// Sends one job through a fresh link with `faults` pre-queued.
pub fn send_one(cfg: &GsmConfig, job: SmsJob, faults: &[(FaultMode, u32)]) -> (SmsJob, Vec<LinkEvent>) {
    let mut link = ModemLink::new(cfg, 0.1, 7);
    for &(mode, count) in faults {
        link.modem_mut().inject_fault(mode, count);
    }
    link.submit(job);
    let budget = ticks_for((cfg.step_timeout_s + 1.0) * 4.0 * f64::from(cfg.max_retries + 1)) + 100;
    let (events, _) = link.drain(0, budget);
    let finished = events
        .iter()
        .find_map(|e| match e {
            LinkEvent::Finished(j) => Some(j.clone()),
            _ => None,
        })
        .expect("every job finishes within the retry budget");
    (finished, events)
}
