//! Five-point Likert interpretation of ISO/IEC 25010 characteristic means.

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("mean {0} is outside [1.00, 5.00]")]
    OutOfRange(f64),
    #[error("no characteristic scores")]
    EmptyList,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verbal {
    Poor,
    Fair,
    Good,
    VeryGood,
    Excellent,
}

impl Verbal {
    /// Lower bound of each band, highest first.
    const BANDS: [(f64, Verbal); 5] = [
        (4.20, Verbal::Excellent),
        (3.40, Verbal::VeryGood),
        (2.60, Verbal::Good),
        (1.80, Verbal::Fair),
        (1.00, Verbal::Poor),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Verbal::Excellent => "Excellent",
            Verbal::VeryGood => "Very Good",
            Verbal::Good => "Good",
            Verbal::Fair => "Fair",
            Verbal::Poor => "Poor",
        }
    }

    pub fn abbrev(self) -> &'static str {
        match self {
            Verbal::Excellent => "E",
            Verbal::VeryGood => "VG",
            Verbal::Good => "G",
            Verbal::Fair => "F",
            Verbal::Poor => "P",
        }
    }
}

impl fmt::Display for Verbal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.name(), self.abbrev())
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Maps a mean onto its band. Means are judged at the two-decimal precision
/// they are reported with, so 4.195 reads as 4.20 and is Excellent.
pub fn interpret(mean: f64) -> Result<Verbal, ReportError> {
    if !(1.0..=5.0).contains(&mean) {
        return Err(ReportError::OutOfRange(mean));
    }
    let m = round2(mean);
    Ok(Verbal::BANDS
        .iter()
        .find(|(lo, _)| m >= *lo)
        .map(|&(_, v)| v)
        .expect("1.00 is the lowest band"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Characteristic {
    FunctionalSuitability,
    PerformanceEfficiency,
    Compatibility,
    Usability,
    Reliability,
    Security,
    Maintainability,
    Portability,
}

impl Characteristic {
    pub const ALL: [Characteristic; 8] = [
        Characteristic::FunctionalSuitability,
        Characteristic::PerformanceEfficiency,
        Characteristic::Compatibility,
        Characteristic::Usability,
        Characteristic::Reliability,
        Characteristic::Security,
        Characteristic::Maintainability,
        Characteristic::Portability,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            Characteristic::FunctionalSuitability => "Functionality/ Suitability",
            Characteristic::PerformanceEfficiency => "Performance Efficiency",
            Characteristic::Compatibility => "Compatibility",
            Characteristic::Usability => "Usability",
            Characteristic::Reliability => "Reliability",
            Characteristic::Security => "Security",
            Characteristic::Maintainability => "Maintainability",
            Characteristic::Portability => "Portability",
        }
    }

    /// Accepts the display name and common spellings, ignoring case, spaces,
    /// `/`, `-` and `_`.
    pub fn from_name(raw: &str) -> Option<Self> {
        let key: String = raw
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        Some(match key.as_str() {
            "functionalitysuitability" | "functionalsuitability" | "functionality" | "suitability" => {
                Characteristic::FunctionalSuitability
            }
            "performanceefficiency" | "performance" => Characteristic::PerformanceEfficiency,
            "compatibility" => Characteristic::Compatibility,
            "usability" => Characteristic::Usability,
            "reliability" => Characteristic::Reliability,
            "security" => Characteristic::Security,
            "maintainability" => Characteristic::Maintainability,
            "portability" => Characteristic::Portability,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicScore {
    pub characteristic: Characteristic,
    pub mean: f64,
}

impl CharacteristicScore {
    pub fn new(characteristic: Characteristic, mean: f64) -> Result<Self, ReportError> {
        if !(1.0..=5.0).contains(&mean) {
            return Err(ReportError::OutOfRange(mean));
        }
        Ok(CharacteristicScore { characteristic, mean })
    }
}

/// Unweighted mean of the characteristic means, rounded to two decimals.
pub fn overall_mean(scores: &[CharacteristicScore]) -> Result<(f64, Verbal), ReportError> {
    if scores.is_empty() {
        return Err(ReportError::EmptyList);
    }
    let mean = round2(scores.iter().map(|s| s.mean).sum::<f64>() / scores.len() as f64);
    Ok((mean, interpret(mean)?))
}

/// Parses `<characteristic> TAB <mean>` lines. A single space also separates
/// when the name itself contains no tab; blank lines and `#` comments are
/// skipped.
pub fn parse_scores(text: &str) -> Result<Vec<CharacteristicScore>, ReportError> {
    let mut out: Vec<CharacteristicScore> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |reason: String| ReportError::Parse { line, reason };
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (name, mean) = match trimmed.rsplit_once('\t') {
            Some(pair) => pair,
            None => trimmed
                .rsplit_once(char::is_whitespace)
                .ok_or_else(|| err(format!("expected `<characteristic> TAB <mean>`, got `{trimmed}`")))?,
        };
        let (name, mean) = (name.trim(), mean.trim());
        let characteristic = Characteristic::from_name(name)
            .ok_or_else(|| err(format!("unknown characteristic `{name}`")))?;
        let value: f64 = mean.parse().map_err(|_| err(format!("`{mean}` is not a number")))?;
        let score = CharacteristicScore::new(characteristic, value).map_err(|e| err(e.to_string()))?;
        if out.iter().any(|s| s.characteristic == characteristic) {
            return Err(err(format!("`{}` listed twice", characteristic.display_name())));
        }
        out.push(score);
    }
    Ok(out)
}

/// Tabulates the scores with their interpretations and the overall mean.
pub fn render_report(scores: &[CharacteristicScore]) -> Result<String, ReportError> {
    let (overall, verbal) = overall_mean(scores)?;
    let width = scores
        .iter()
        .map(|s| s.characteristic.display_name().len())
        .chain(["Overall Weighted Mean".len()])
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>4}  Verbal Interpretation", "Characteristic", "Mean");
    for s in scores {
        let _ = writeln!(
            out,
            "{:<width$}  {:.2}  {}",
            s.characteristic.display_name(),
            s.mean,
            interpret(s.mean)?
        );
    }
    let _ = writeln!(out, "{:<width$}  {overall:.2}  {verbal}", "Overall Weighted Mean");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TABLE: [(&str, f64); 8] = [
        ("Functionality/ Suitability", 4.41),
        ("Performance Efficiency", 4.61),
        ("Compatibility", 4.53),
        ("Usability", 4.65),
        ("Reliability", 4.52),
        ("Security", 4.50),
        ("Maintainability", 4.58),
        ("Portability", 4.57),
    ];

    fn table_scores() -> Vec<CharacteristicScore> {
        TABLE
            .iter()
            .map(|(n, m)| CharacteristicScore::new(Characteristic::from_name(n).unwrap(), *m).unwrap())
            .collect()
    }

    #[test]
    fn band_endpoints() {
        let cases = [
            (5.00, Verbal::Excellent),
            (4.55, Verbal::Excellent),
            (4.20, Verbal::Excellent),
            (4.19, Verbal::VeryGood),
            (3.40, Verbal::VeryGood),
            (3.39, Verbal::Good),
            (2.60, Verbal::Good),
            (2.59, Verbal::Fair),
            (1.80, Verbal::Fair),
            (1.79, Verbal::Poor),
            (1.00, Verbal::Poor),
        ];
        for (m, v) in cases {
            assert_eq!(interpret(m).unwrap(), v, "{m}");
        }
        assert_eq!(interpret(0.99), Err(ReportError::OutOfRange(0.99)));
        assert!(interpret(5.01).is_err());
        assert!(interpret(f64::NAN).is_err());
    }

    #[test]
    fn evaluation_table_overall() {
        assert_eq!(overall_mean(&table_scores()).unwrap(), (4.55, Verbal::Excellent));
        let single = [CharacteristicScore::new(Characteristic::Usability, 5.0).unwrap()];
        assert_eq!(overall_mean(&single).unwrap(), (5.0, Verbal::Excellent));
        assert_eq!(overall_mean(&[]), Err(ReportError::EmptyList));
    }

    #[test]
    fn rendered_layout() {
        let text: String = TABLE.iter().map(|(n, m)| format!("{n}\t{m:.2}\n")).collect();
        let scores = parse_scores(&text).unwrap();
        assert_eq!(scores.len(), 8);
        let out = render_report(&scores).unwrap();
        let last = out.lines().last().unwrap();
        assert!(last.starts_with("Overall Weighted Mean"));
        assert!(last.ends_with("4.55  Excellent (E)"), "{last}");
        assert!(out.contains("Security                    4.50  Excellent (E)"), "{out}");
    }

    #[test]
    fn parse_single_and_errors() {
        let s = parse_scores("Usability 4.65").unwrap();
        assert_eq!(interpret(s[0].mean).unwrap().to_string(), "Excellent (E)");
        assert!(matches!(parse_scores("garbage"), Err(ReportError::Parse { line: 1, .. })));
        assert!(matches!(parse_scores("Usability\tmany"), Err(ReportError::Parse { line: 1, .. })));
        assert!(matches!(parse_scores("# c\nUsability\t6"), Err(ReportError::Parse { line: 2, .. })));
        assert!(matches!(
            parse_scores("Usability\t4\nusability\t3"),
            Err(ReportError::Parse { line: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn interpretation_is_monotone(a in 1.0f64..=5.0, b in 1.0f64..=5.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(interpret(lo).unwrap() <= interpret(hi).unwrap());
        }
    }
}
