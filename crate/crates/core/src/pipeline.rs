//! Stage functions and document types behind the command-line tool:
//! group, fit lines, rectify, partition and evaluate, per scene.
//!
//! Every stage is a pure function of its inputs. Scenes are processed in a
//! dedicated thread pool and results are collected in input order, so the
//! number of worker threads never changes the output.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evalkit::{match_detections, EvalRow, VOC_IOU};
use crate::geom::{AABox, Point};
use crate::grouping::{extract_groups, GroupingParams};
use crate::ingest::{CharCandidate, Scene};
use crate::lineshape::{select_model, text_polygon, Line, LineKind, LineModel, TextPolygon};
use crate::maskgen::MaskScoreParams;
use crate::raster::RasterImage;
use crate::rectify::{partition_raster, rectify_strip, PartitionParams, TpsTransform};
use crate::synthlab::{SceneSpec, ScorerState};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("group {group} refers to unknown candidate id {id}")]
    UnknownCandidate { group: usize, id: u64 },
    #[error("group {0} has no characters")]
    EmptyGroup(usize),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Parameters of every stage. Missing fields take the module defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Synthetic scenes generated when no input is given.
    pub scenes: usize,
    pub iou: f64,
    pub mask: MaskScoreParams<f64>,
    pub grouping: GroupingParams<f64>,
    pub partition: PartitionParams<f64>,
    pub synth: SceneSpec,
    /// Scores candidates of synthesized scenes.
    pub detector: ScorerState,
    /// Starting point of the weak-supervision simulation.
    pub scorer: ScorerState,
    pub sim_iters: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            scenes: 4,
            iou: VOC_IOU,
            mask: MaskScoreParams::default(),
            grouping: GroupingParams::default(),
            partition: PartitionParams::default(),
            synth: SceneSpec::default(),
            detector: ScorerState::detector(),
            scorer: ScorerState::default(),
            sim_iters: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub group_id: usize,
    pub char_ids: Vec<u64>,
    pub total_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineRecord {
    pub group_id: usize,
    pub kind: LineKind,
    pub lines: Vec<Line<f64>>,
    pub h: f64,
    pub polygon: Vec<Point<f64>>,
    pub simple: bool,
}

impl LineRecord {
    pub fn model(&self) -> LineModel<f64> {
        LineModel { kind: self.kind, center_lines: self.lines.clone(), height: self.h, segment_spans: Vec::new() }
    }

    pub fn text_polygon(&self) -> TextPolygon<f64> {
        TextPolygon { points: self.polygon.clone(), simple: self.simple }
    }
}

/// Rectification outcome for one group. `file` is empty when the polygon
/// could not be rectified; `error` then says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripRecord {
    pub group_id: usize,
    pub file: String,
    pub width: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to_source: Option<TpsTransform<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordRecord {
    pub group_id: usize,
    pub intervals: Vec<(usize, usize)>,
    pub separators: Vec<(usize, usize)>,
    pub cut_lines: Vec<[Point<f64>; 2]>,
    pub word_quads: Vec<[Point<f64>; 4]>,
}

/// A scored box, the unit of the evaluation input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(rename = "box")]
    pub bbox: AABox<f64>,
    pub score: f64,
}

/// Evaluation input: either partition output or plain detections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Predictions {
    Words(Vec<WordRecord>),
    Detections(Vec<Detection>),
}

impl Predictions {
    pub fn detections(&self) -> Vec<Detection> {
        match self {
            Predictions::Words(w) => word_detections(w),
            Predictions::Detections(d) => d.clone(),
        }
    }
}

pub fn run_group(scene: &Scene<f64>, params: &GroupingParams<f64>) -> Vec<GroupRecord> {
    extract_groups(&scene.candidates, params)
        .groups
        .into_iter()
        .enumerate()
        .map(|(group_id, g)| GroupRecord { group_id, char_ids: g.char_ids, total_cost: g.total_cost })
        .collect()
}

fn group_boxes(by_id: &HashMap<u64, &CharCandidate<f64>>, g: &GroupRecord) -> Result<Vec<AABox<f64>>, PipelineError> {
    if g.char_ids.is_empty() {
        return Err(PipelineError::EmptyGroup(g.group_id));
    }
    g.char_ids
        .iter()
        .map(|id| by_id.get(id).map(|c| c.bbox).ok_or(PipelineError::UnknownCandidate { group: g.group_id, id: *id }))
        .collect()
}

pub fn run_fitline(scene: &Scene<f64>, groups: &[GroupRecord]) -> Result<Vec<LineRecord>, PipelineError> {
    let by_id: HashMap<u64, &CharCandidate<f64>> = scene.candidates.iter().map(|c| (c.id, c)).collect();
    groups
        .iter()
        .map(|g| {
            let boxes = group_boxes(&by_id, g)?;
            let model = select_model(&boxes).chosen;
            let poly = text_polygon(&boxes, &model);
            Ok(LineRecord {
                group_id: g.group_id,
                kind: model.kind,
                lines: model.center_lines,
                h: model.height,
                polygon: poly.points,
                simple: poly.simple,
            })
        })
        .collect()
}

/// Strip file name for a group of a named scene.
pub fn strip_file_name(scene_name: &str, group_id: usize) -> String {
    format!("{scene_name}_{group_id}.pgm")
}

pub fn run_rectify(scene_name: &str, image: &RasterImage, lines: &[LineRecord]) -> Vec<(StripRecord, Option<RasterImage>)> {
    lines
        .iter()
        .map(|l| match rectify_strip(image, &l.text_polygon(), &l.model()) {
            Ok(strip) => (
                StripRecord {
                    group_id: l.group_id,
                    file: strip_file_name(scene_name, l.group_id),
                    width: strip.width(),
                    to_source: Some(strip.to_source),
                    error: None,
                },
                Some(strip.raster),
            ),
            Err(e) => (
                StripRecord { group_id: l.group_id, file: String::new(), width: 0, to_source: None, error: Some(e.to_string()) },
                None,
            ),
        })
        .collect()
}

pub fn run_partition(strips: &[(StripRecord, Option<RasterImage>)], params: &PartitionParams<f64>) -> Vec<WordRecord> {
    strips
        .iter()
        .filter_map(|(rec, raster)| {
            let (raster, tps) = (raster.as_ref()?, rec.to_source.as_ref()?);
            let part = partition_raster(raster, tps, params);
            Some(WordRecord {
                group_id: rec.group_id,
                intervals: part.intervals,
                separators: part.separators,
                cut_lines: part.cut_lines,
                word_quads: part.word_quads,
            })
        })
        .collect()
}

/// Word boxes (bounding boxes of the word quads) with unit scores.
pub fn word_detections(words: &[WordRecord]) -> Vec<Detection> {
    words
        .iter()
        .flat_map(|w| w.word_quads.iter())
        .filter_map(|q| AABox::bounding(q.iter().copied()))
        .map(|bbox| Detection { bbox, score: 1.0 })
        .collect()
}

/// Matches detections against the scene's word annotations (their bounding
/// boxes).
pub fn run_eval(scene_name: &str, scene: &Scene<f64>, dets: &[Detection], iou: f64) -> EvalRow {
    let gts: Vec<AABox<f64>> = scene.words.iter().map(|w| w.region.bounding_box()).collect();
    let preds: Vec<(AABox<f64>, f64)> = dets.iter().map(|d| (d.bbox, d.score)).collect();
    EvalRow::new(scene_name, &match_detections(&preds, &gts, iou))
}

/// One scene ready for processing.
#[derive(Debug, Clone)]
pub struct SceneInput {
    pub name: String,
    pub scene: Scene<f64>,
    pub image: RasterImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneOutput {
    pub name: String,
    pub groups: Vec<GroupRecord>,
    pub lines: Vec<LineRecord>,
    pub strips: Vec<(StripRecord, Option<RasterImage>)>,
    pub words: Vec<WordRecord>,
    pub eval: EvalRow,
}

pub fn process_scene(input: &SceneInput, cfg: &PipelineConfig) -> Result<SceneOutput, PipelineError> {
    let groups = run_group(&input.scene, &cfg.grouping);
    let lines = run_fitline(&input.scene, &groups)?;
    let strips = run_rectify(&input.name, &input.image, &lines);
    let words = run_partition(&strips, &cfg.partition);
    let eval = run_eval(&input.name, &input.scene, &word_detections(&words), cfg.iou);
    Ok(SceneOutput { name: input.name.clone(), groups, lines, strips, words, eval })
}

/// Runs `f` on a pool of `jobs` threads (at least one).
pub fn with_pool<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Processes all scenes on `jobs` threads; output order follows input order.
pub fn process_all(inputs: &[SceneInput], cfg: &PipelineConfig, jobs: usize) -> Result<Vec<SceneOutput>, PipelineError> {
    with_pool(jobs, || inputs.par_iter().map(|i| process_scene(i, cfg)).collect::<Result<Vec<_>, _>>())?
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthlab::generate_scene_with;

    fn input(seed: u64) -> SceneInput {
        let s = generate_scene_with(&SceneSpec { seed, ..SceneSpec::default() }, &ScorerState::detector()).unwrap();
        SceneInput { name: format!("scene{seed}"), scene: s.scene, image: s.image.unwrap() }
    }

    #[test]
    fn synthetic_scene_end_to_end() {
        let out = process_scene(&input(3), &PipelineConfig::default()).unwrap();
        assert!(!out.groups.is_empty());
        assert_eq!(out.lines.len(), out.groups.len());
        for (rec, raster) in &out.strips {
            if let Some(r) = raster {
                assert_eq!(r.height(), 32);
                assert_eq!(rec.file, strip_file_name("scene3", rec.group_id));
            }
        }
        assert!(out.eval.prf().f_measure > 0.5, "{:?}", out.eval);
    }

    #[test]
    fn job_count_does_not_change_output() {
        let inputs: Vec<_> = (0..4).map(input).collect();
        let cfg = PipelineConfig::default();
        assert_eq!(process_all(&inputs, &cfg, 1).unwrap(), process_all(&inputs, &cfg, 4).unwrap());
    }

    #[test]
    fn unknown_candidate_is_an_error() {
        let s = input(1).scene;
        let bad = [GroupRecord { group_id: 0, char_ids: vec![999_999], total_cost: -1.0 }];
        assert!(matches!(run_fitline(&s, &bad), Err(PipelineError::UnknownCandidate { id: 999_999, .. })));
    }

    #[test]
    fn perfect_predictions_score_one() {
        let s = input(2).scene;
        let dets: Vec<_> = s.words.iter().map(|w| Detection { bbox: w.region.bounding_box(), score: 1.0 }).collect();
        assert_eq!(run_eval("x", &s, &dets, 0.5).prf().f_measure, 1.0);
    }

    #[test]
    fn config_defaults_fill_missing_fields() {
        let cfg: PipelineConfig = serde_json::from_str(r#"{"seed": 9, "grouping": {"alpha": 2.0}}"#).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.grouping.alpha, 2.0);
        assert_eq!(cfg.grouping.entry_exit_cost, 0.4);
        assert_eq!(cfg.mask, MaskScoreParams::default());
    }
}
