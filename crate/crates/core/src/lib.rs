//! Character-level text detection post-processing driven by word-level
//! supervision.
//!
//! The crate covers the whole structure-analysis path that sits behind a
//! character detector:
//!
//! * [`maskgen`]: picks the subset of candidate characters inside each
//!   annotated word that best explains it (maximum spanning tree plus greedy
//!   partitioning), producing pseudo ground truth and a loss weight.
//! * [`grouping`]: links characters into oriented or curved text lines with a
//!   greedy min-cost flow over character pairs.
//! * [`lineshape`]: fits horizontal/vertical, oriented and piecewise-linear
//!   center-line models and builds the text polygon.
//! * [`rectify`]: thin-plate-spline rectification to 32-pixel strips and a
//!   gap-profile word partitioner.
//! * [`synthlab`]: seeded synthetic scenes and a simulator of the alternating
//!   mask-generation / scorer-update loop.
//! * [`evalkit`]: VOC-style matching and precision/recall/F-measure.
//!
//! The numeric kernels are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix them to `f64`, which is what the pipeline and
//! the command-line tool use.

pub mod evalkit;
pub mod geom;
pub mod grouping;
pub mod ingest;
pub mod lineshape;
pub mod maskgen;
pub mod pipeline;
pub mod raster;
pub mod rectify;
pub mod scalar;
pub mod synthlab;

pub use scalar::Scalar;

pub type Point = geom::Point<f64>;
pub type AABox = geom::AABox<f64>;
pub type Quad = geom::Quad<f64>;
pub type EigenPair = geom::EigenPair<f64>;
pub type CharCandidate = ingest::CharCandidate<f64>;
pub type WordAnnotation = ingest::WordAnnotation<f64>;
pub type Scene = ingest::Scene<f64>;
pub type AnchorSpec = ingest::AnchorSpec<f64>;
pub type MaskScoreParams = maskgen::MaskScoreParams<f64>;
pub type CharGraph = maskgen::CharGraph<f64>;
pub type CharMask = maskgen::CharMask<f64>;
pub type GroupingParams = grouping::GroupingParams<f64>;
pub type PairNode = grouping::PairNode<f64>;
pub type LineGroup = grouping::LineGroup<f64>;
pub type Line = lineshape::Line<f64>;
pub type LineModel = lineshape::LineModel<f64>;
pub type ModelSelection = lineshape::ModelSelection<f64>;
pub type TextPolygon = lineshape::TextPolygon<f64>;
pub type TpsTransform = rectify::TpsTransform<f64>;
pub type RectifiedStrip = rectify::RectifiedStrip<f64>;
pub type MatchResult = evalkit::MatchResult;
pub type Prf = evalkit::Prf<f64>;

/// Single-precision aliases for callers that trade accuracy for memory.
pub mod f32 {
    pub type Point = crate::geom::Point<f32>;
    pub type AABox = crate::geom::AABox<f32>;
    pub type CharCandidate = crate::ingest::CharCandidate<f32>;
    pub type LineModel = crate::lineshape::LineModel<f32>;
    pub type TpsTransform = crate::rectify::TpsTransform<f32>;
}
