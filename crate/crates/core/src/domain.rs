//! Shared vocabulary: waste categories, labels, stations and simulation time.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("label is empty after normalization")]
    EmptyLabel,
    #[error("unknown category token `{0}`")]
    UnknownCategoryToken(String),
    #[error("station index {0} out of range 0..=2")]
    InvalidStation(u8),
    #[error("invalid timestamp {0}: must be finite and within 0..={max}", max = Timestamp::MAX_SECS)]
    InvalidTimestamp(f64),
}

/// The three segregation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WasteCategory {
    Biodegradable,
    NonBiodegradable,
    Recyclable,
}

impl WasteCategory {
    pub const ALL: [WasteCategory; 3] = [
        WasteCategory::Biodegradable,
        WasteCategory::NonBiodegradable,
        WasteCategory::Recyclable,
    ];

    /// Wire token used in logs, taxonomy files and SMS bodies.
    pub fn token(self) -> &'static str {
        match self {
            WasteCategory::Biodegradable => "BIODEGRADABLE",
            WasteCategory::NonBiodegradable => "NON_BIODEGRADABLE",
            WasteCategory::Recyclable => "RECYCLABLE",
        }
    }

    pub fn from_token(token: &str) -> Result<Self, DomainError> {
        match token {
            "BIODEGRADABLE" => Ok(WasteCategory::Biodegradable),
            "NON_BIODEGRADABLE" => Ok(WasteCategory::NonBiodegradable),
            "RECYCLABLE" => Ok(WasteCategory::Recyclable),
            other => Err(DomainError::UnknownCategoryToken(other.to_string())),
        }
    }

    pub fn color(self) -> LedColor {
        color_of(self)
    }

    pub fn station(self) -> Station {
        station_of(self)
    }

    /// The two categories that are not `self`, in declaration order.
    pub fn others(self) -> [WasteCategory; 2] {
        match self {
            WasteCategory::Biodegradable => {
                [WasteCategory::NonBiodegradable, WasteCategory::Recyclable]
            }
            WasteCategory::NonBiodegradable => {
                [WasteCategory::Biodegradable, WasteCategory::Recyclable]
            }
            WasteCategory::Recyclable => {
                [WasteCategory::Biodegradable, WasteCategory::NonBiodegradable]
            }
        }
    }
}

impl fmt::Display for WasteCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for WasteCategory {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_token(s)
    }
}

/// Bin indicator colors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LedColor {
    Green,
    Red,
    Yellow,
}

impl LedColor {
    pub const ALL: [LedColor; 3] = [LedColor::Green, LedColor::Red, LedColor::Yellow];

    pub fn token(self) -> &'static str {
        match self {
            LedColor::Green => "GREEN",
            LedColor::Red => "RED",
            LedColor::Yellow => "YELLOW",
        }
    }
}

pub fn color_of(category: WasteCategory) -> LedColor {
    match category {
        WasteCategory::Biodegradable => LedColor::Green,
        WasteCategory::NonBiodegradable => LedColor::Red,
        WasteCategory::Recyclable => LedColor::Yellow,
    }
}

pub fn station_of(category: WasteCategory) -> Station {
    match category {
        WasteCategory::Biodegradable => Station(0),
        WasteCategory::NonBiodegradable => Station(1),
        WasteCategory::Recyclable => Station(2),
    }
}

/// Carousel station index, always in `0..=2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Station(u8);

impl Station {
    pub const COUNT: usize = 3;
    pub const ALL: [Station; 3] = [Station(0), Station(1), Station(2)];

    pub fn new(index: u8) -> Result<Self, DomainError> {
        if (index as usize) < Self::COUNT {
            Ok(Station(index))
        } else {
            Err(DomainError::InvalidStation(index))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Category whose bin sits at this station.
    pub fn category(self) -> WasteCategory {
        WasteCategory::ALL[self.index()]
    }
}

impl TryFrom<u8> for Station {
    type Error = DomainError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Station::new(value)
    }
}

impl From<Station> for u8 {
    fn from(s: Station) -> u8 {
        s.0
    }
}

impl fmt::Display for Station {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A garbage label in canonical form: lowercase, trimmed, single-spaced.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GarbageLabel(String);

impl GarbageLabel {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for GarbageLabel {
    type Error = DomainError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        normalize_label(&value)
    }
}

impl From<GarbageLabel> for String {
    fn from(l: GarbageLabel) -> String {
        l.0
    }
}

impl FromStr for GarbageLabel {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        normalize_label(s)
    }
}

impl fmt::Display for GarbageLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn normalize_label(raw: &str) -> Result<GarbageLabel, DomainError> {
    let text = raw
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ");
    if text.is_empty() {
        return Err(DomainError::EmptyLabel);
    }
    Ok(GarbageLabel(text))
}

/// Seconds of simulated time since scenario start.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Timestamp(f64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0.0);
    /// Upper bound on simulated time (about 31,700 years).
    pub const MAX_SECS: f64 = 1.0e12;

    pub fn new(secs: f64) -> Result<Self, DomainError> {
        if secs.is_finite() && (0.0..=Self::MAX_SECS).contains(&secs) {
            // normalizes -0.0
            Ok(Timestamp(secs + 0.0))
        } else {
            Err(DomainError::InvalidTimestamp(secs))
        }
    }

    /// # Panics
    /// If `secs` is not a valid timestamp.
    pub fn from_secs(secs: f64) -> Self {
        match Self::new(secs) {
            Ok(t) => t,
            Err(e) => panic!("{e}"),
        }
    }

    pub fn secs(self) -> f64 {
        self.0
    }

    /// Seconds elapsed since `earlier`, zero if `earlier` is later.
    pub fn since(self, earlier: Timestamp) -> f64 {
        (self.0 - earlier.0).max(0.0)
    }
}

impl TryFrom<f64> for Timestamp {
    type Error = DomainError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Timestamp::new(value)
    }
}

impl From<Timestamp> for f64 {
    fn from(t: Timestamp) -> f64 {
        t.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}s", self.0)
    }
}

/// One completed deposit, as logged at the end of a cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepositEvent {
    pub at: Timestamp,
    pub label: GarbageLabel,
    /// Reference category, `None` when the label is not in the taxonomy.
    pub truth: Option<WasteCategory>,
    pub predicted: WasteCategory,
    pub confidence: f64,
    pub routed_station: Station,
}

impl DepositEvent {
    pub fn new(
        at: Timestamp,
        label: GarbageLabel,
        truth: Option<WasteCategory>,
        predicted: WasteCategory,
        confidence: f64,
    ) -> Self {
        DepositEvent {
            at,
            label,
            truth,
            predicted,
            confidence: confidence.clamp(0.0, 1.0),
            routed_station: station_of(predicted),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_label("Milk tea Cup").unwrap().as_str(), "milk tea cup");
        assert_eq!(normalize_label("  Cardboard ").unwrap().as_str(), "cardboard");
        assert_eq!(normalize_label("   "), Err(DomainError::EmptyLabel));
        assert_eq!(normalize_label(""), Err(DomainError::EmptyLabel));
        assert_eq!(
            normalize_label("Water\tPlastic \n  Bottle").unwrap().as_str(),
            "water plastic bottle"
        );
    }

    #[test]
    fn colors_match_bins() {
        assert_eq!(color_of(WasteCategory::Biodegradable), LedColor::Green);
        assert_eq!(color_of(WasteCategory::NonBiodegradable), LedColor::Red);
        assert_eq!(color_of(WasteCategory::Recyclable), LedColor::Yellow);
    }

    #[test]
    fn stations_fixed_order() {
        assert_eq!(station_of(WasteCategory::Biodegradable).index(), 0);
        assert_eq!(station_of(WasteCategory::NonBiodegradable).index(), 1);
        assert_eq!(station_of(WasteCategory::Recyclable).index(), 2);
        for s in Station::ALL {
            assert_eq!(station_of(s.category()), s);
        }
    }

    #[test]
    fn mappings_injective() {
        let colors: HashSet<_> = WasteCategory::ALL.iter().map(|c| color_of(*c)).collect();
        let stations: HashSet<_> = WasteCategory::ALL.iter().map(|c| station_of(*c)).collect();
        assert_eq!(colors.len(), 3);
        assert_eq!(stations.len(), 3);
    }

    #[test]
    fn tokens_round_trip() {
        for c in WasteCategory::ALL {
            assert_eq!(WasteCategory::from_token(c.token()), Ok(c));
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.token()));
        }
        assert!(matches!(
            WasteCategory::from_token("METALLIC"),
            Err(DomainError::UnknownCategoryToken(_))
        ));
    }

    #[test]
    fn others_excludes_self() {
        for c in WasteCategory::ALL {
            let o = c.others();
            assert!(!o.contains(&c));
            assert_ne!(o[0], o[1]);
        }
    }

    #[test]
    fn station_bounds() {
        assert!(Station::new(2).is_ok());
        assert_eq!(Station::new(3), Err(DomainError::InvalidStation(3)));
        assert!(serde_json::from_str::<Station>("7").is_err());
    }

    #[test]
    fn timestamp_bounds() {
        assert!(Timestamp::new(-0.1).is_err());
        assert!(Timestamp::new(f64::NAN).is_err());
        assert!(Timestamp::new(f64::INFINITY).is_err());
        assert_eq!(Timestamp::new(-0.0).unwrap().secs().to_bits(), 0.0f64.to_bits());
        assert_eq!(Timestamp::from_secs(5.0).since(Timestamp::from_secs(7.0)), 0.0);
    }

    #[test]
    fn deposit_event_routes_to_predicted_station() {
        let e = DepositEvent::new(
            Timestamp::ZERO,
            normalize_label("cardboard").unwrap(),
            Some(WasteCategory::Biodegradable),
            WasteCategory::Recyclable,
            1.5,
        );
        assert_eq!(e.routed_station, station_of(WasteCategory::Recyclable));
        assert_eq!(e.confidence, 1.0);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(raw in "\\PC{0,40}") {
            if let Ok(once) = normalize_label(&raw) {
                let twice = normalize_label(once.as_str()).unwrap();
                prop_assert_eq!(&once, &twice);
                prop_assert!(!once.as_str().is_empty());
                prop_assert_eq!(once.as_str().trim(), once.as_str());
                prop_assert!(!once.as_str().contains("  "));
            }
        }
    }
}
