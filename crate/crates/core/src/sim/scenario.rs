//! Scenario scripts: one `<time_s> <verb> [args...]` directive per line.
//!
//! ```text
//! # comment
//! 0.0   deposit water plastic bottle
//! 30.0  irradiance 0.8
//! 40.0  modem_fault error_reply 1
//! 60.0  end
//! ```

use std::fmt;

use thiserror::Error;

use crate::domain::{normalize_label, GarbageLabel, Station, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {reason}")]
    SyntaxError { line: usize, reason: String },
    #[error("line {0}: time goes backwards")]
    NonMonotonicTime(usize),
    #[error("line {line}: unknown verb `{verb}`")]
    UnknownVerb { line: usize, verb: String },
    #[error("scenario has no `end` directive")]
    MissingEnd,
}

impl ScenarioError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ScenarioError::SyntaxError { line, .. }
            | ScenarioError::NonMonotonicTime(line)
            | ScenarioError::UnknownVerb { line, .. } => Some(*line),
            ScenarioError::MissingEnd => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultMode {
    ErrorReply,
    Silence,
    GarbageBytes,
}

impl FaultMode {
    pub fn token(self) -> &'static str {
        match self {
            FaultMode::ErrorReply => "error_reply",
            FaultMode::Silence => "silence",
            FaultMode::GarbageBytes => "garbage_bytes",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        [FaultMode::ErrorReply, FaultMode::Silence, FaultMode::GarbageBytes]
            .into_iter()
            .find(|m| m.token() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Directive {
    Deposit(GarbageLabel),
    Irradiance(f64),
    EmptyBin(Station),
    ModemFault { mode: FaultMode, count: u32 },
    ActuatorFault(String),
    End,
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Directive::Deposit(l) => write!(f, "deposit {l}"),
            Directive::Irradiance(x) => write!(f, "irradiance {x}"),
            Directive::EmptyBin(s) => write!(f, "empty_bin {s}"),
            Directive::ModemFault { mode, count } => write!(f, "modem_fault {} {count}", mode.token()),
            Directive::ActuatorFault(d) => write!(f, "actuator_fault {d}"),
            Directive::End => f.write_str("end"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledDirective {
    pub at: Timestamp,
    pub line: usize,
    pub directive: Directive,
}

/// Time-ordered directives ending in exactly one `end`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    directives: Vec<ScheduledDirective>,
}

impl Scenario {
    pub fn directives(&self) -> &[ScheduledDirective] {
        &self.directives
    }

    pub fn end_time(&self) -> Timestamp {
        self.directives.last().expect("end is always present").at
    }

    pub fn deposits(&self) -> usize {
        self.directives.iter().filter(|d| matches!(d.directive, Directive::Deposit(_))).count()
    }

    pub fn to_text(&self) -> String {
        self.directives.iter().map(|d| format!("{} {}\n", d.at.secs(), d.directive)).collect()
    }
}

fn parse_directive(line: usize, verb: &str, args: &[&str]) -> Result<Directive, ScenarioError> {
    let syntax = |reason: String| ScenarioError::SyntaxError { line, reason };
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(syntax(format!("`{verb}` takes {n} argument(s), got {}", args.len())))
        }
    };
    Ok(match verb {
        "deposit" => Directive::Deposit(
            normalize_label(&args.join(" ")).map_err(|_| syntax("deposit needs a label".into()))?,
        ),
        "irradiance" => {
            arity(1)?;
            let x: f64 = args[0].parse().map_err(|_| syntax(format!("bad irradiance `{}`", args[0])))?;
            if !(0.0..=1.0).contains(&x) {
                return Err(syntax(format!("irradiance {x} is outside [0, 1]")));
            }
            Directive::Irradiance(x)
        }
        "empty_bin" => {
            arity(1)?;
            let s = args[0]
                .parse::<u8>()
                .ok()
                .and_then(|i| Station::new(i).ok())
                .ok_or_else(|| syntax(format!("bad station `{}`", args[0])))?;
            Directive::EmptyBin(s)
        }
        "modem_fault" => {
            arity(2)?;
            let mode = FaultMode::from_token(args[0])
                .ok_or_else(|| syntax(format!("unknown fault mode `{}`", args[0])))?;
            let count: u32 = args[1]
                .parse()
                .ok()
                .filter(|&c| c >= 1)
                .ok_or_else(|| syntax(format!("fault count must be a positive integer, got `{}`", args[1])))?;
            Directive::ModemFault { mode, count }
        }
        "actuator_fault" => {
            if args.is_empty() {
                return Err(syntax("actuator_fault needs a detail".into()));
            }
            Directive::ActuatorFault(args.join(" "))
        }
        "end" => {
            arity(0)?;
            Directive::End
        }
        other => return Err(ScenarioError::UnknownVerb { line, verb: other.into() }),
    })
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut directives: Vec<ScheduledDirective> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if directives.last().is_some_and(|d| d.directive == Directive::End) {
            return Err(ScenarioError::SyntaxError { line, reason: "directive after `end`".into() });
        }
        let mut words = content.split_whitespace();
        let time = words.next().expect("non-empty line");
        let at = time
            .parse::<f64>()
            .ok()
            .and_then(|t| Timestamp::new(t).ok())
            .ok_or_else(|| ScenarioError::SyntaxError { line, reason: format!("bad time `{time}`") })?;
        let verb = words
            .next()
            .ok_or_else(|| ScenarioError::SyntaxError { line, reason: "missing verb".into() })?;
        let args: Vec<&str> = words.collect();
        let directive = parse_directive(line, verb, &args)?;
        if directives.last().is_some_and(|d| at < d.at) {
            return Err(ScenarioError::NonMonotonicTime(line));
        }
        directives.push(ScheduledDirective { at, line, directive });
    }
    match directives.last() {
        Some(d) if d.directive == Directive::End => Ok(Scenario { directives }),
        _ => Err(ScenarioError::MissingEnd),
    }
}
