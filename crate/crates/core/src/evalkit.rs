//! VOC-style detection matching and precision/recall/F-measure.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::geom::{iou, score_order, AABox, Scored};
use crate::scalar::Scalar;

/// IoU threshold of the PASCAL VOC criterion.
pub const VOC_IOU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatchResult {
    /// `(prediction index, ground-truth index)` in claim order.
    pub matched: Vec<(usize, usize)>,
    pub unmatched_preds: Vec<usize>,
    pub unmatched_gts: Vec<usize>,
}

impl MatchResult {
    pub fn n_preds(&self) -> usize {
        self.matched.len() + self.unmatched_preds.len()
    }

    pub fn n_gts(&self) -> usize {
        self.matched.len() + self.unmatched_gts.len()
    }
}

/// Greedy matching: predictions in descending score order (lower index on
/// ties) each claim the unclaimed ground truth with the highest IoU, provided
/// it reaches `iou_threshold`. Equal IoUs go to the lower ground-truth index.
pub fn match_detections<T: Scalar, D: Scored<T>>(preds: &[D], gts: &[AABox<T>], iou_threshold: T) -> MatchResult {
    let mut claimed = vec![false; gts.len()];
    let mut result = MatchResult::default();
    for p in score_order(preds) {
        let pb = preds[p].bbox();
        let mut best: Option<(usize, T)> = None;
        for (g, gb) in gts.iter().enumerate() {
            if claimed[g] {
                continue;
            }
            let v = iou(&pb, gb);
            if v >= iou_threshold && best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        match best {
            Some((g, _)) => {
                claimed[g] = true;
                result.matched.push((p, g));
            }
            None => result.unmatched_preds.push(p),
        }
    }
    result.unmatched_preds.sort_unstable();
    result.unmatched_gts = (0..gts.len()).filter(|&g| !claimed[g]).collect();
    result
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Prf<T> {
    pub precision: T,
    pub recall: T,
    pub f_measure: T,
}

impl<T: Scalar> Prf<T> {
    /// Harmonic mean of `p` and `r`, or 0 when both vanish.
    pub fn from_pr(precision: T, recall: T) -> Self {
        let sum = precision + recall;
        let f_measure = if sum > T::zero() { T::lit(2.0) * precision * recall / sum } else { T::zero() };
        Prf { precision, recall, f_measure }
    }

    pub fn from_counts(matches: usize, preds: usize, gts: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { T::zero() } else { T::from_count(num) / T::from_count(den) };
        Self::from_pr(ratio(matches, preds), ratio(matches, gts))
    }
}

pub fn prf<T: Scalar>(m: &MatchResult) -> Prf<T> {
    Prf::from_counts(m.matched.len(), m.n_preds(), m.n_gts())
}

/// F-measure of `preds` against `gts` at `iou_threshold`, all predictions
/// weighted equally.
pub fn box_f1<T: Scalar>(preds: &[AABox<T>], gts: &[AABox<T>], iou_threshold: T) -> T {
    let scored: Vec<(AABox<T>, T)> = preds.iter().map(|b| (*b, T::one())).collect();
    prf::<T>(&match_detections(&scored, gts, iou_threshold)).f_measure
}

/// One row of an evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub scene: String,
    pub matches: usize,
    pub preds: usize,
    pub gts: usize,
}

impl EvalRow {
    pub fn new(scene: impl Into<String>, m: &MatchResult) -> Self {
        EvalRow { scene: scene.into(), matches: m.matched.len(), preds: m.n_preds(), gts: m.n_gts() }
    }

    pub fn prf(&self) -> Prf<f64> {
        Prf::from_counts(self.matches, self.preds, self.gts)
    }
}

/// Counts pooled over all rows.
pub fn aggregate(rows: &[EvalRow]) -> Prf<f64> {
    let (m, p, g) = rows.iter().fold((0, 0, 0), |(m, p, g), r| (m + r.matches, p + r.preds, g + r.gts));
    Prf::from_counts(m, p, g)
}

/// CSV with header `scene,precision,recall,f_measure`, one line per row and a
/// final `all` line with pooled counts.
pub fn report_csv(rows: &[EvalRow]) -> String {
    let mut out = String::from("scene,precision,recall,f_measure\n");
    let mut line = |name: &str, v: Prf<f64>| {
        let _ = writeln!(out, "{name},{:.6},{:.6},{:.6}", v.precision, v.recall, v.f_measure);
    };
    for r in rows {
        line(&r.scene, r.prf());
    }
    line("all", aggregate(rows));
    out
}
