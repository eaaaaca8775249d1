//! Waste classification boundary.
//!
//! Two classifiers share one result type: a reference lookup over a label
//! taxonomy, and a stochastic model that reproduces the aggregate accuracy of
//! the deployed image classifier without modelling its internals.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{normalize_label, DomainError, GarbageLabel, WasteCategory};

const BUILTIN_TAXONOMY: &str = include_str!("taxonomy.tsv");

/// Items tested on the deployed unit, as printed: (garbage, identification result).
///
/// Kept verbatim and separate from the built-in taxonomy file so that
/// `taxonomy-check` compares two independent sources.
pub const FIELD_TEST_ROWS: [(&str, &str); 24] = [
    ("Cardboard", "Biodegradable"),
    ("Yellow Paper", "Biodegradable"),
    ("Paper Meal Box", "Biodegradable"),
    ("Paper Bag", "Biodegradable"),
    ("Office Paper", "Biodegradable"),
    ("Newspaper", "Biodegradable"),
    ("Burger Paper Wrapper", "Biodegradable"),
    ("Milk tea Cup", "Non-biodegradable"),
    ("Instant Noodles Plastic Wrapper", "Non-biodegradable"),
    ("Cheese Snack Plastic Wrapper", "Non-biodegradable"),
    ("Ice Water Plastic Wrapper", "Non-biodegradable"),
    ("Juice Plastic Wrapper", "Non-biodegradable"),
    ("Coffee Stick Plastic Wrapper", "Non-biodegradable"),
    ("Chocolate Powder Plastic Wrapper", "Non-biodegradable"),
    ("Disposable Cups", "Non-biodegradable"),
    ("Candy Plastic Wrapper", "Non-biodegradable"),
    ("Corn Snack Plastic Wrapper", "Non-biodegradable"),
    ("Chocolate Bar Plastic Wrapper", "Non-biodegradable"),
    ("Biscuit Plastic Wrapper", "Non-biodegradable"),
    ("Black Plastic Trash Bag", "Non-biodegradable"),
    ("Instant Noodles Seasoning Plastic", "Non-biodegradable"),
    ("Juice Plastic Bottle", "Recyclable"),
    ("Water Plastic Bottle", "Recyclable"),
    ("Canned Goods Can", "Recyclable"),
];

/// Parses the human-readable category names used in [`FIELD_TEST_ROWS`].
pub fn parse_verbal_category(text: &str) -> Option<WasteCategory> {
    match text.trim().to_ascii_lowercase().as_str() {
        "biodegradable" => Some(WasteCategory::Biodegradable),
        "non-biodegradable" | "non biodegradable" => Some(WasteCategory::NonBiodegradable),
        "recyclable" => Some(WasteCategory::Recyclable),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifierError {
    #[error("line {line}: duplicate label `{label}`")]
    DuplicateLabel { line: usize, label: String },
    #[error("line {line}: unknown category token `{token}`")]
    UnknownCategoryToken { line: usize, token: String },
    #[error("line {line}: empty label")]
    EmptyLabel { line: usize },
    #[error("line {line}: expected `<label> TAB <CATEGORY_TOKEN>`")]
    Malformed { line: usize },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("accuracy {0} outside [0, 1]")]
    InvalidAccuracy(f64),
}

/// Label to category map with normalized keys.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Taxonomy {
    entries: BTreeMap<GarbageLabel, WasteCategory>,
}

impl Taxonomy {
    /// The 24 field-tested items.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_TAXONOMY).expect("built-in taxonomy is well formed")
    }

    /// Builds a taxonomy from `(label, category token)` records. Line numbers
    /// in errors are 1-based record positions.
    pub fn from_records<I, L, T>(records: I) -> Result<Self, ClassifierError>
    where
        I: IntoIterator<Item = (L, T)>,
        L: AsRef<str>,
        T: AsRef<str>,
    {
        let mut taxonomy = Taxonomy::default();
        for (i, (label, token)) in records.into_iter().enumerate() {
            taxonomy.insert(i + 1, label.as_ref(), token.as_ref())?;
        }
        Ok(taxonomy)
    }

    /// Parses the line-delimited `<label> TAB <TOKEN>` file format. Blank lines
    /// and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, ClassifierError> {
        let mut taxonomy = Taxonomy::default();
        taxonomy.extend_from_text(text)?;
        Ok(taxonomy)
    }

    /// Adds the records of a taxonomy file on top of the current entries.
    /// Labels already present are rejected as duplicates.
    pub fn extend_from_text(&mut self, text: &str) -> Result<(), ClassifierError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (label, token) = raw
                .rsplit_once('\t')
                .ok_or(ClassifierError::Malformed { line })?;
            self.insert(line, label, token.trim())?;
        }
        Ok(())
    }

    fn insert(&mut self, line: usize, label: &str, token: &str) -> Result<(), ClassifierError> {
        let label = normalize_label(label).map_err(|_| ClassifierError::EmptyLabel { line })?;
        let category = WasteCategory::from_token(token).map_err(|e| match e {
            DomainError::UnknownCategoryToken(token) => {
                ClassifierError::UnknownCategoryToken { line, token }
            }
            _ => ClassifierError::Malformed { line },
        })?;
        if self.entries.contains_key(&label) {
            return Err(ClassifierError::DuplicateLabel {
                line,
                label: label.into(),
            });
        }
        self.entries.insert(label, category);
        Ok(())
    }

    pub fn get(&self, label: &GarbageLabel) -> Option<WasteCategory> {
        self.entries.get(label).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GarbageLabel, WasteCategory)> {
        self.entries.iter().map(|(l, c)| (l, *c))
    }

    /// Serializes back to the file format, sorted by label.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (label, category) in self.iter() {
            out.push_str(label.as_str());
            out.push('\t');
            out.push_str(category.token());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassificationSource {
    Reference,
    Simulated,
    /// No usable classification; the controller substituted its default.
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub category: WasteCategory,
    pub confidence: f64,
    pub source: ClassificationSource,
}

pub fn classify_reference(
    taxonomy: &Taxonomy,
    label: &GarbageLabel,
) -> Result<ClassificationResult, ClassifierError> {
    taxonomy
        .get(label)
        .map(|category| ClassificationResult {
            category,
            confidence: 1.0,
            source: ClassificationSource::Reference,
        })
        .ok_or_else(|| ClassifierError::UnknownLabel(label.to_string()))
}

pub const DEFAULT_ACCURACY: f64 = 0.98;

const CORRECT_CONFIDENCE: (f64, f64) = (0.80, 0.99);
const WRONG_CONFIDENCE: (f64, f64) = (0.34, 0.66);

/// Aggregate-accuracy model of the image classifier.
///
/// Each draw is keyed by `(seed, draw_index)`: the ChaCha stream number is the
/// draw index, so a result never depends on how many other draws were made.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyModel {
    accuracy: f64,
    seed: u64,
}

impl AccuracyModel {
    pub fn new(accuracy: f64, seed: u64) -> Result<Self, ClassifierError> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(ClassifierError::InvalidAccuracy(accuracy));
        }
        Ok(AccuracyModel { accuracy, seed })
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn classify(&self, truth: WasteCategory, draw_index: u64) -> ClassificationResult {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(draw_index);
        let u: f64 = rng.gen();
        let (category, range) = if u < self.accuracy {
            (truth, CORRECT_CONFIDENCE)
        } else {
            let others = truth.others();
            (others[rng.gen_range(0..2)], WRONG_CONFIDENCE)
        };
        ClassificationResult {
            category,
            confidence: rng.gen_range(range.0..=range.1),
            source: ClassificationSource::Simulated,
        }
    }
}

pub fn classify_simulated(
    model: &AccuracyModel,
    truth: WasteCategory,
    draw_index: u64,
) -> ClassificationResult {
    model.classify(truth, draw_index)
}
