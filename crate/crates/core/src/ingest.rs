//! Scene interchange documents and anchor label assignment.
//!
//! A scene is a JSON object:
//!
//! ```json
//! {
//!   "image": "scene_0000.pgm",
//!   "candidates": [{"id": 0, "box": [10, 10, 20, 22], "score": 0.9}],
//!   "words": [{"box": [8, 8, 60, 24], "char_count": 4, "text": "word"},
//!             {"quad": [[0, 0], [10, 0], [10, 5], [0, 5]]}],
//!   "gt_chars": [[10, 10, 20, 22]]
//! }
//! ```
//!
//! Candidates may additionally carry a `features` array (synthetic scenes).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{AABox, Point, Quad, Scored};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed scene document at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },
    #[error("serialization failed: {0}")]
    Serialize(String),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> IngestError {
    IngestError::Validation { field: field.into(), message: message.into() }
}

/// A scored character hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CharCandidate<T> {
    pub id: u64,
    #[serde(rename = "box")]
    pub bbox: AABox<T>,
    pub score: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<T>>,
}

impl<T: Scalar> CharCandidate<T> {
    pub fn new(id: u64, bbox: AABox<T>, score: T) -> Self {
        CharCandidate { id, bbox, score, features: None }
    }

    pub fn center(&self) -> Point<T> {
        self.bbox.center()
    }
}

impl<T: Scalar> Scored<T> for CharCandidate<T> {
    fn bbox(&self) -> AABox<T> {
        self.bbox
    }
    fn score(&self) -> T {
        self.score
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region<T> {
    Box(AABox<T>),
    Quad(Quad<T>),
}

impl<T: Scalar> Region<T> {
    pub fn bounding_box(&self) -> AABox<T> {
        match self {
            Region::Box(b) => *b,
            Region::Quad(q) => q.bounding_box(),
        }
    }

    pub fn area(&self) -> T {
        match self {
            Region::Box(b) => b.area(),
            Region::Quad(q) => q.area(),
        }
    }

    pub fn contains(&self, p: Point<T>) -> bool {
        match self {
            Region::Box(b) => b.contains(p),
            Region::Quad(q) => q.contains(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawWord<T> {
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    bbox: Option<AABox<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quad: Option<Quad<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    char_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
}

/// Word-level ground truth region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWord<T>", into = "RawWord<T>")]
#[serde(bound = "T: Scalar")]
pub struct WordAnnotation<T> {
    pub region: Region<T>,
    pub char_count: Option<u32>,
    pub text: Option<String>,
}

impl<T: Scalar> WordAnnotation<T> {
    pub fn from_box(b: AABox<T>) -> Self {
        WordAnnotation { region: Region::Box(b), char_count: None, text: None }
    }

    pub fn from_quad(q: Quad<T>) -> Self {
        WordAnnotation { region: Region::Quad(q), char_count: None, text: None }
    }

    pub fn with_char_count(mut self, n: u32) -> Self {
        self.char_count = Some(n);
        self
    }
}

impl<T: Scalar> TryFrom<RawWord<T>> for WordAnnotation<T> {
    type Error = String;
    fn try_from(raw: RawWord<T>) -> Result<Self, String> {
        let region = match (raw.bbox, raw.quad) {
            (Some(b), None) => Region::Box(b),
            (None, Some(q)) => Region::Quad(q),
            (Some(_), Some(_)) => return Err("word has both `box` and `quad`".into()),
            (None, None) => return Err("word needs a `box` or a `quad`".into()),
        };
        Ok(WordAnnotation { region, char_count: raw.char_count, text: raw.text })
    }
}

impl<T: Scalar> From<WordAnnotation<T>> for RawWord<T> {
    fn from(w: WordAnnotation<T>) -> Self {
        let (bbox, quad) = match w.region {
            Region::Box(b) => (Some(b), None),
            Region::Quad(q) => (None, Some(q)),
        };
        RawWord { bbox, quad, char_count: w.char_count, text: w.text }
    }
}

/// Parsed scene: candidates, word annotations and optional extras.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Scene<T> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(default)]
    pub candidates: Vec<CharCandidate<T>>,
    #[serde(default)]
    pub words: Vec<WordAnnotation<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_chars: Option<Vec<AABox<T>>>,
}

impl<T: Scalar> Default for Scene<T> {
    fn default() -> Self {
        Scene { image: None, candidates: Vec::new(), words: Vec::new(), gt_chars: None }
    }
}

impl<T: Scalar> Scene<T> {
    /// Checks every document invariant not enforced by the types.
    pub fn validate(&self) -> Result<(), IngestError> {
        let mut seen = HashSet::with_capacity(self.candidates.len());
        for (i, c) in self.candidates.iter().enumerate() {
            if !(c.score >= T::zero() && c.score <= T::one()) {
                return Err(invalid(
                    format!("candidates[{i}].score"),
                    format!("{} is outside [0, 1]", c.score),
                ));
            }
            if !seen.insert(c.id) {
                return Err(invalid(format!("candidates[{i}].id"), format!("duplicate id {}", c.id)));
            }
            if let Some(f) = &c.features {
                if f.iter().any(|v| !v.is_finite()) {
                    return Err(invalid(format!("candidates[{i}].features"), "non-finite value"));
                }
            }
        }
        for (i, w) in self.words.iter().enumerate() {
            if !(w.region.area() > T::zero()) {
                return Err(invalid(format!("words[{i}]"), "region has zero area"));
            }
            if w.char_count == Some(0) {
                return Err(invalid(format!("words[{i}].char_count"), "must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, IngestError> {
        serde_json::to_string_pretty(self).map_err(|e| IngestError::Serialize(e.to_string()))
    }
}

/// Parses and validates a scene document.
pub fn parse_scene<T: Scalar>(bytes: &[u8]) -> Result<Scene<T>, IngestError> {
    let scene: Scene<T> = serde_json::from_slice(bytes).map_err(|e| IngestError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    scene.validate()?;
    Ok(scene)
}

/// Parses any JSON document with the same error reporting as scenes.
pub fn parse_document<D: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<D, IngestError> {
    serde_json::from_slice(bytes).map_err(|e| IngestError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn to_document<D: Serialize>(doc: &D) -> Result<String, IngestError> {
    serde_json::to_string_pretty(doc).map_err(|e| IngestError::Serialize(e.to_string()))
}

/// Reference character sizes for label assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AnchorSpec<T> {
    pub diagonals: Vec<T>,
    /// Half-open ratio band `[low, high)`.
    pub positive_band: (T, T),
}

impl<T: Scalar> Default for AnchorSpec<T> {
    fn default() -> Self {
        AnchorSpec {
            diagonals: vec![T::lit(24.0), T::lit(16.0), T::lit(12.0)],
            positive_band: (T::lit(0.7), T::lit(1.4)),
        }
    }
}

impl<T: Scalar> AnchorSpec<T> {
    pub fn new(diagonals: Vec<T>, low: T, high: T) -> Result<Self, IngestError> {
        let spec = AnchorSpec { diagonals, positive_band: (low, high) };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.diagonals.is_empty() || self.diagonals.iter().any(|d| !(*d > T::zero())) {
            return Err(invalid("anchors.diagonals", "must be non-empty and positive"));
        }
        if self.diagonals.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(invalid("anchors.diagonals", "must be strictly decreasing"));
        }
        let (low, high) = self.positive_band;
        if !(low < T::one() && T::one() < high && low > T::zero()) {
            return Err(invalid("anchors.positive_band", "need 0 < low < 1 < high"));
        }
        Ok(())
    }

    /// Anchor for a character of the given diagonal, or `None` if unmatched.
    pub fn assign(&self, diagonal: T) -> Option<usize> {
        let (low, high) = self.positive_band;
        self.diagonals
            .iter()
            .enumerate()
            .filter(|(_, &a)| diagonal >= low * a && diagonal < high * a)
            .map(|(i, &a)| (i, (diagonal / a).ln().abs()))
            .fold(None, |best: Option<(usize, T)>, (i, d)| match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((i, d)),
            })
            .map(|(i, _)| i)
    }
}

/// Anchor index per ground-truth character box.
pub fn assign_anchor_labels<T: Scalar>(gt_chars: &[AABox<T>], anchors: &AnchorSpec<T>) -> Vec<Option<usize>> {
    gt_chars.iter().map(|b| anchors.assign(b.diagonal())).collect()
}
