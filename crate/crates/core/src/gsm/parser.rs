//! Incremental response tokenizer.
//!
//! Tokens are decided only once their terminating bytes are present, so the
//! output never depends on how the input was split into chunks.

use serde::{Deserialize, Serialize};

use super::GsmError;

pub const MAX_BUFFER: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "token", content = "value", rename_all = "snake_case")]
pub enum AtResponse {
    /// No complete token is buffered yet.
    NeedMore,
    Prompt,
    FinalOk,
    FinalError(Option<i64>),
    MsgRef(u32),
    UnsolicitedLine(String),
}

fn classify_line(line: &[u8]) -> AtResponse {
    fn int_after<'a>(line: &'a [u8], prefix: &[u8]) -> Option<&'a [u8]> {
        line.strip_prefix(prefix)
    }
    fn parse_int<T: std::str::FromStr>(digits: &[u8]) -> Option<T> {
        let text = std::str::from_utf8(digits).ok()?.trim();
        if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        text.parse().ok()
    }

    match line {
        b"OK" => return AtResponse::FinalOk,
        b"ERROR" => return AtResponse::FinalError(None),
        _ => {}
    }
    for prefix in [&b"+CMS ERROR:"[..], b"+CME ERROR:"] {
        if let Some(code) = int_after(line, prefix).and_then(parse_int::<i64>) {
            return AtResponse::FinalError(Some(code));
        }
    }
    if let Some(r) = int_after(line, b"+CMGS:").and_then(parse_int::<u32>) {
        return AtResponse::MsgRef(r);
    }
    AtResponse::UnsolicitedLine(String::from_utf8_lossy(line).into_owned())
}

/// Extracts the first token from `buf`, returning it with the number of bytes
/// consumed. `NeedMore` may still consume leading line terminators.
pub fn parse_token(buf: &[u8]) -> (AtResponse, usize) {
    let start = buf.iter().position(|&b| b != b'\r' && b != b'\n').unwrap_or(buf.len());
    let rest = &buf[start..];
    if rest.is_empty() {
        return (AtResponse::NeedMore, start);
    }
    if rest[0] == b'>' {
        match rest.get(1) {
            None => return (AtResponse::NeedMore, start),
            Some(b' ') => return (AtResponse::Prompt, start + 2),
            Some(_) => {}
        }
    }
    match rest.windows(2).position(|w| w == b"\r\n") {
        Some(end) => (classify_line(&rest[..end]), start + end + 2),
        None => (AtResponse::NeedMore, start),
    }
}

/// Buffering wrapper around [`parse_token`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AtParser {
    buf: Vec<u8>,
}

impl AtParser {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn buffered(&self) -> &[u8] {
        &self.buf
    }

    pub fn clear(&mut self) {
        self.buf.clear();
    }

    pub fn feed(&mut self, incoming: &[u8]) -> Result<Vec<AtResponse>, GsmError> {
        self.buf.extend_from_slice(incoming);
        let mut out = Vec::new();
        let mut pos = 0;
        loop {
            let (token, used) = parse_token(&self.buf[pos..]);
            pos += used;
            if token == AtResponse::NeedMore {
                break;
            }
            out.push(token);
        }
        self.buf.drain(..pos);
        if self.buf.len() > MAX_BUFFER {
            let len = self.buf.len();
            self.buf.clear();
            return Err(GsmError::BufferOverflow(len));
        }
        Ok(out)
    }
}

/// Functional form: returns the retained buffer and the completed tokens.
pub fn parse_feed(session_buffer: &[u8], incoming: &[u8]) -> Result<(Vec<u8>, Vec<AtResponse>), GsmError> {
    let mut p = AtParser { buf: session_buffer.to_vec() };
    let tokens = p.feed(incoming)?;
    Ok((p.buf, tokens))
}
