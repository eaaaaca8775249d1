use serde::{Deserialize, Serialize};

use super::{GsmError, CR, SUB};

pub const MAX_BODY_BYTES: usize = 160;

/// E.164-style number: `+` and 8 to 15 digits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Recipient(String);

impl Recipient {
    pub fn new(number: impl Into<String>) -> Result<Self, GsmError> {
        let number = number.into();
        let valid = number
            .strip_prefix('+')
            .is_some_and(|d| (8..=15).contains(&d.len()) && d.bytes().all(|b| b.is_ascii_digit()));
        if valid {
            Ok(Recipient(number))
        } else {
            Err(GsmError::InvalidRecipient(number))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Recipient {
    type Error = GsmError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Recipient::new(value)
    }
}

impl From<Recipient> for String {
    fn from(r: Recipient) -> String {
        r.0
    }
}

/// Text-mode body: at most 160 bytes, no control bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SmsBody(String);

impl SmsBody {
    pub fn new(text: impl Into<String>) -> Result<Self, GsmError> {
        let text = text.into();
        if text.len() > MAX_BODY_BYTES {
            return Err(GsmError::BodyTooLong(text.len()));
        }
        if let Some(b) = text.bytes().find(|b| b.is_ascii_control()) {
            return Err(GsmError::BodyHasControlBytes(b));
        }
        Ok(SmsBody(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for SmsBody {
    type Error = GsmError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        SmsBody::new(value)
    }
}

impl From<SmsBody> for String {
    fn from(b: SmsBody) -> String {
        b.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum JobStatus {
    Pending,
    InFlight,
    Sent(u32),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmsJob {
    pub recipient: Recipient,
    pub body: SmsBody,
    pub attempts: u32,
    pub status: JobStatus,
}

impl SmsJob {
    pub fn new(recipient: &str, body: &str) -> Result<Self, GsmError> {
        Ok(SmsJob {
            recipient: Recipient::new(recipient)?,
            body: SmsBody::new(body)?,
            attempts: 0,
            status: JobStatus::Pending,
        })
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.status, JobStatus::Sent(_) | JobStatus::Failed(_))
    }
}

/// What the modem must answer to a written step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedReply {
    FinalOk,
    Prompt,
    MsgRefThenOk,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SendStep {
    pub write: Vec<u8>,
    pub expect: ExpectedReply,
}

/// The four writes of one text-mode send.
pub fn encode_send_sequence(job: &SmsJob) -> Vec<SendStep> {
    let mut cmgs = format!("AT+CMGS=\"{}\"", job.recipient.as_str()).into_bytes();
    cmgs.push(CR);
    let mut body = job.body.as_str().as_bytes().to_vec();
    body.push(SUB);
    vec![
        SendStep { write: b"AT\r".to_vec(), expect: ExpectedReply::FinalOk },
        SendStep { write: b"AT+CMGF=1\r".to_vec(), expect: ExpectedReply::FinalOk },
        SendStep { write: cmgs, expect: ExpectedReply::Prompt },
        SendStep { write: body, expect: ExpectedReply::MsgRefThenOk },
    ]
}
