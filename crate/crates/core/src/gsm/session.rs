//! Send-one-SMS session driven by parsed modem tokens and the clock.

use serde::{Deserialize, Serialize};

use super::job::{encode_send_sequence, JobStatus, Recipient, SmsJob};
use super::parser::{AtParser, AtResponse};
use crate::domain::Timestamp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsmConfig {
    pub step_timeout_s: f64,
    pub max_retries: u32,
    pub cooldown_s: f64,
    pub recipients: Vec<Recipient>,
}

impl Default for GsmConfig {
    fn default() -> Self {
        GsmConfig {
            step_timeout_s: 10.0,
            max_retries: 2,
            cooldown_s: 1800.0,
            recipients: vec![Recipient::new("+639170000001").expect("valid default")],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionPhase {
    /// `AT` written, awaiting OK.
    Init,
    /// `AT+CMGF=1` written, awaiting OK.
    SetTextMode,
    /// `AT+CMGS` written, awaiting the `"> "` prompt.
    AwaitPrompt,
    /// Body written, awaiting `+CMGS: <ref>`.
    SendingBody,
    /// Reference received, awaiting the OK that commits it.
    AwaitRef,
    /// Idle; the last job was sent (or none was started).
    Done,
    /// Idle; the last job failed.
    Errored,
}

impl SessionPhase {
    fn step_index(self) -> Option<usize> {
        match self {
            SessionPhase::Init => Some(0),
            SessionPhase::SetTextMode => Some(1),
            SessionPhase::AwaitPrompt => Some(2),
            SessionPhase::SendingBody | SessionPhase::AwaitRef => Some(3),
            SessionPhase::Done | SessionPhase::Errored => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepOutput {
    pub write: Option<Vec<u8>>,
    /// The finished job, once it is `Sent` or `Failed`.
    pub outcome: Option<SmsJob>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionOutput {
    pub tokens: Vec<AtResponse>,
    pub writes: Vec<Vec<u8>>,
    pub outcomes: Vec<SmsJob>,
}

impl SessionOutput {
    fn absorb(&mut self, step: StepOutput) {
        self.writes.extend(step.write);
        self.outcomes.extend(step.outcome);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModemSession {
    phase: SessionPhase,
    parser: AtParser,
    current_job: Option<SmsJob>,
    msg_ref: Option<u32>,
    step_started: Timestamp,
    step_timeout_s: f64,
    max_retries: u32,
}

impl ModemSession {
    pub fn new(cfg: &GsmConfig) -> Self {
        ModemSession {
            phase: SessionPhase::Done,
            parser: AtParser::new(),
            current_job: None,
            msg_ref: None,
            step_started: Timestamp::ZERO,
            step_timeout_s: cfg.step_timeout_s,
            max_retries: cfg.max_retries,
        }
    }

    pub fn phase(&self) -> SessionPhase {
        self.phase
    }

    pub fn current_job(&self) -> Option<&SmsJob> {
        self.current_job.as_ref()
    }

    pub fn is_busy(&self) -> bool {
        self.current_job.is_some()
    }

    pub fn parse_buffer(&self) -> &[u8] {
        self.parser.buffered()
    }

    /// Begins the first attempt of `job` and returns the first write. A busy
    /// session hands the job back.
    pub fn start(&mut self, mut job: SmsJob, now: Timestamp) -> Result<Vec<u8>, SmsJob> {
        if self.is_busy() {
            return Err(job);
        }
        job.attempts = 1;
        job.status = JobStatus::InFlight;
        self.current_job = Some(job);
        Ok(self.begin_attempt(now))
    }

    fn begin_attempt(&mut self, now: Timestamp) -> Vec<u8> {
        self.parser.clear();
        self.msg_ref = None;
        self.enter(SessionPhase::Init, now)
    }

    /// Moves to `phase` and returns that phase's write.
    fn enter(&mut self, phase: SessionPhase, now: Timestamp) -> Vec<u8> {
        self.phase = phase;
        self.step_started = now;
        let job = self.current_job.as_ref().expect("active job");
        let idx = phase.step_index().expect("active phase");
        encode_send_sequence(job).swap_remove(idx).write
    }

    fn finish(&mut self, status: JobStatus, phase: SessionPhase) -> StepOutput {
        let mut job = self.current_job.take().expect("active job");
        job.status = status;
        self.phase = phase;
        self.msg_ref = None;
        StepOutput { write: None, outcome: Some(job) }
    }

    fn fail_attempt(&mut self, reason: String, now: Timestamp) -> StepOutput {
        let attempts = self.current_job.as_ref().map_or(0, |j| j.attempts);
        if attempts <= self.max_retries {
            if let Some(job) = self.current_job.as_mut() {
                job.attempts += 1;
            }
            StepOutput { write: Some(self.begin_attempt(now)), outcome: None }
        } else {
            self.finish(JobStatus::Failed(reason), SessionPhase::Errored)
        }
    }

    /// Advances on one observed token. `NeedMore` stands for "nothing new" and
    /// only checks the per-step timeout.
    pub fn step(&mut self, observed: &AtResponse, now: Timestamp) -> StepOutput {
        use AtResponse as R;
        use SessionPhase as P;

        if self.current_job.is_none() {
            return StepOutput::default();
        }
        match (self.phase, observed) {
            (_, R::NeedMore) => {
                if now.since(self.step_started) >= self.step_timeout_s {
                    self.fail_attempt(format!("timeout in {:?}", self.phase), now)
                } else {
                    StepOutput::default()
                }
            }
            (_, R::UnsolicitedLine(_)) => StepOutput::default(),
            (phase, R::FinalError(code)) => {
                let reason = match code {
                    Some(c) => format!("error {c} in {phase:?}"),
                    None => format!("error in {phase:?}"),
                };
                self.fail_attempt(reason, now)
            }
            (P::Init, R::FinalOk) => StepOutput { write: Some(self.enter(P::SetTextMode, now)), outcome: None },
            (P::SetTextMode, R::FinalOk) => StepOutput { write: Some(self.enter(P::AwaitPrompt, now)), outcome: None },
            (P::AwaitPrompt, R::Prompt) => StepOutput { write: Some(self.enter(P::SendingBody, now)), outcome: None },
            (P::SendingBody, R::MsgRef(r)) => {
                self.msg_ref = Some(*r);
                self.phase = P::AwaitRef;
                StepOutput::default()
            }
            (P::SendingBody, R::FinalOk) => self.fail_attempt("OK without message reference".into(), now),
            (P::AwaitRef, R::FinalOk) => {
                let r = self.msg_ref.expect("reference recorded");
                self.finish(JobStatus::Sent(r), P::Done)
            }
            _ => StepOutput::default(),
        }
    }

    /// Checks the step timeout.
    pub fn poll(&mut self, now: Timestamp) -> StepOutput {
        self.step(&AtResponse::NeedMore, now)
    }

    /// Parses `bytes` and steps on every completed token.
    pub fn feed(&mut self, bytes: &[u8], now: Timestamp) -> SessionOutput {
        let mut out = SessionOutput::default();
        if self.current_job.is_none() {
            // nothing to drive; keep the tokenizer consistent anyway
            out.tokens = self.parser.feed(bytes).unwrap_or_default();
            return out;
        }
        match self.parser.feed(bytes) {
            Ok(tokens) => {
                for t in &tokens {
                    if self.current_job.is_none() {
                        break;
                    }
                    let step = self.step(t, now);
                    out.absorb(step);
                }
                out.tokens = tokens;
            }
            Err(e) => {
                let step = self.finish(JobStatus::Failed(e.to_string()), SessionPhase::Errored);
                out.absorb(step);
            }
        }
        out
    }
}
