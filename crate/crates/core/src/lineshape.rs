//! Center-line models for a chain of character boxes.
//!
//! Three models of increasing complexity are fitted: a horizontal or
//! vertical line, a total-least-squares line, and one local line per
//! character. Each model's height is twice the largest distance from any
//! character corner to its nearest center line (for the piecewise model, the
//! nearest clipped segment); the model minimizing `height * penalty` wins.

use serde::{Deserialize, Serialize};

use crate::geom::{is_simple_polygon, AABox, Covariance2, Point};
use crate::scalar::{cmp_scalar, Scalar};

/// Complexity penalties for order-0, order-1 and piecewise models.
pub const MODEL_PENALTIES: [f64; 3] = [1.0, 1.2, 1.4];

/// Neighbourhood size cap for piecewise segments.
pub const PIECEWISE_NEIGHBOURS: usize = 11;

/// `a*x + b*y + c = 0` with `a^2 + b^2 = 1`. Serialized as `[a, b, c]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 3]", into = "[T; 3]")]
#[serde(bound = "T: Scalar")]
pub struct Line<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T: Scalar> From<[T; 3]> for Line<T> {
    fn from(v: [T; 3]) -> Self {
        Line { a: v[0], b: v[1], c: v[2] }
    }
}

impl<T: Scalar> From<Line<T>> for [T; 3] {
    fn from(l: Line<T>) -> Self {
        [l.a, l.b, l.c]
    }
}

impl<T: Scalar> Line<T> {
    /// Line through `p` along `dir`; sign fixed so that `b > 0`, or `a > 0`
    /// for vertical lines.
    pub fn through(p: Point<T>, dir: Point<T>) -> Self {
        let n = dir.normalized().perp();
        let (mut a, mut b) = (n.x, n.y);
        if b < T::zero() || (b == T::zero() && a < T::zero()) {
            a = -a;
            b = -b;
        }
        Line { a, b, c: -(a * p.x + b * p.y) }
    }

    pub fn horizontal(y: T) -> Self {
        Line { a: T::zero(), b: T::one(), c: -y }
    }

    pub fn vertical(x: T) -> Self {
        Line { a: T::one(), b: T::zero(), c: -x }
    }

    #[inline]
    pub fn signed_distance(&self, p: Point<T>) -> T {
        self.a * p.x + self.b * p.y + self.c
    }

    #[inline]
    pub fn distance(&self, p: Point<T>) -> T {
        self.signed_distance(p).abs()
    }

    /// Unit direction `(b, -a)`.
    pub fn direction(&self) -> Point<T> {
        Point::new(self.b, -self.a)
    }

    pub fn normal(&self) -> Point<T> {
        Point::new(self.a, self.b)
    }

    /// Orthogonal projection of `p` onto the line.
    pub fn project(&self, p: Point<T>) -> Point<T> {
        p - self.normal() * self.signed_distance(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineKind {
    Order0,
    Order1,
    Piecewise,
}

impl LineKind {
    pub fn penalty(self) -> f64 {
        match self {
            LineKind::Order0 => MODEL_PENALTIES[0],
            LineKind::Order1 => MODEL_PENALTIES[1],
            LineKind::Piecewise => MODEL_PENALTIES[2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LineModel<T> {
    pub kind: LineKind,
    pub center_lines: Vec<Line<T>>,
    pub height: T,
    /// Piecewise only: arc-length interval along the chain covered by each
    /// character's segment.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segment_spans: Vec<(T, T)>,
}

impl<T: Scalar> LineModel<T> {
    /// Center line governing the `i`-th character of the chain.
    pub fn line_for(&self, i: usize) -> &Line<T> {
        match self.kind {
            LineKind::Piecewise => &self.center_lines[i.min(self.center_lines.len() - 1)],
            _ => &self.center_lines[0],
        }
    }
}

fn centers<T: Scalar>(chars: &[AABox<T>]) -> Vec<Point<T>> {
    chars.iter().map(|b| b.center()).collect()
}

/// Twice the largest corner distance to the nearest of `lines`.
pub fn height_for_lines<T: Scalar>(chars: &[AABox<T>], lines: &[Line<T>]) -> T {
    let mut worst = T::zero();
    for corner in chars.iter().flat_map(|b| b.corners()) {
        let d = lines.iter().map(|l| l.distance(corner)).fold(T::infinity(), T::min);
        if d.is_finite() {
            worst = worst.max(d);
        }
    }
    worst * T::lit(2.0)
}

/// Twice the largest corner distance to the nearest of `segments`.
pub fn height_for_segments<T: Scalar>(chars: &[AABox<T>], segments: &[(Point<T>, Point<T>)]) -> T {
    let mut worst = T::zero();
    for corner in chars.iter().flat_map(|b| b.corners()) {
        let d = segments.iter().map(|&(a, b)| segment_distance(corner, a, b)).fold(T::infinity(), T::min);
        if d.is_finite() {
            worst = worst.max(d);
        }
    }
    worst * T::lit(2.0)
}

fn segment_distance<T: Scalar>(p: Point<T>, a: Point<T>, b: Point<T>) -> T {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 > T::zero() { ((p - a).dot(ab) / len2).max(T::zero()).min(T::one()) } else { T::zero() };
    p.dist(a + ab * t)
}

/// Clipped piecewise segments: each character's local line restricted to
/// the half-gaps to its chain neighbours around the character's foot point.
pub fn piecewise_segments<T: Scalar>(chars: &[AABox<T>], lines: &[Line<T>]) -> Vec<(Point<T>, Point<T>)> {
    let n = chars.len().min(lines.len());
    let pts = centers(chars);
    let half = T::lit(0.5);
    let gaps: Vec<T> = pts.windows(2).map(|w| w[0].dist(w[1])).collect();
    (0..n)
        .map(|i| {
            let line = &lines[i];
            let tangent = pts[(i + 1).min(n - 1)] - pts[i.saturating_sub(1)];
            let mut dir = line.direction();
            if dir.dot(tangent) < T::zero() {
                dir = dir * -T::one();
            }
            let before = if i > 0 { gaps[i - 1] } else { gaps.first().copied().unwrap_or(T::zero()) };
            let after = if i + 1 < n { gaps[i] } else { gaps.last().copied().unwrap_or(T::zero()) };
            let foot = line.project(pts[i]);
            (foot - dir * (before * half), foot + dir * (after * half))
        })
        .collect()
}

/// Height of `chars` under `model`.
pub fn height<T: Scalar>(chars: &[AABox<T>], model: &LineModel<T>) -> T {
    match model.kind {
        LineKind::Piecewise => height_for_segments(chars, &piecewise_segments(chars, &model.center_lines)),
        _ => height_for_lines(chars, &model.center_lines),
    }
}

/// Horizontal or vertical line through the mean center, whichever is tighter.
/// Ties go to horizontal.
pub fn fit_order0<T: Scalar>(chars: &[AABox<T>]) -> LineModel<T> {
    let mean = Covariance2::of(&centers(chars)).mean;
    let h_line = Line::horizontal(mean.y);
    let v_line = Line::vertical(mean.x);
    let (hh, hv) = (height_for_lines(chars, &[h_line]), height_for_lines(chars, &[v_line]));
    let (line, height) = if hv < hh { (v_line, hv) } else { (h_line, hh) };
    LineModel { kind: LineKind::Order0, center_lines: vec![line], height, segment_spans: Vec::new() }
}

/// Total-least-squares line through `points`; `None` when they coincide.
fn tls_line<T: Scalar>(points: &[Point<T>]) -> Option<Line<T>> {
    let cov = Covariance2::of(points);
    if cov.eigens().lambda1 <= T::zero() {
        return None;
    }
    Some(Line::through(cov.mean, cov.major_axis()))
}

/// Principal-axis line through the character centers. Falls back to the
/// order-0 model for a single character or coincident centers.
pub fn fit_order1<T: Scalar>(chars: &[AABox<T>]) -> LineModel<T> {
    if chars.len() < 2 {
        return fit_order0(chars);
    }
    match tls_line(&centers(chars)) {
        Some(line) => LineModel {
            kind: LineKind::Order1,
            height: height_for_lines(chars, &[line]),
            center_lines: vec![line],
            segment_spans: Vec::new(),
        },
        None => fit_order0(chars),
    }
}

/// Chain indices of the `min(n, 11)` characters closest to `i` in chain
/// order (ties toward the lower index).
fn chain_window(i: usize, n: usize) -> Vec<usize> {
    let k = n.min(PIECEWISE_NEIGHBOURS);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by_key(|&j| (j.abs_diff(i), j));
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// One local line per character, fitted over its chain neighbourhood.
pub fn fit_piecewise<T: Scalar>(chars: &[AABox<T>]) -> LineModel<T> {
    let n = chars.len();
    if n == 0 {
        return fit_order0(chars);
    }
    let pts = centers(chars);
    let fallback = fit_order0(chars).center_lines[0];
    let center_lines: Vec<Line<T>> = (0..n)
        .map(|i| {
            let window: Vec<Point<T>> = chain_window(i, n).into_iter().map(|j| pts[j]).collect();
            tls_line(&window).unwrap_or(Line { c: fallback.c, ..fallback })
        })
        .collect();

    let half = T::lit(0.5);
    let gaps: Vec<T> = pts.windows(2).map(|w| w[0].dist(w[1])).collect();
    let mut s = T::zero();
    let mut segment_spans = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            s = s + gaps[i - 1];
        }
        let before = if i > 0 { gaps[i - 1] } else { gaps.first().copied().unwrap_or(T::zero()) };
        let after = if i + 1 < n { gaps[i] } else { gaps.last().copied().unwrap_or(T::zero()) };
        segment_spans.push((s - before * half, s + after * half));
    }
    LineModel {
        kind: LineKind::Piecewise,
        height: height_for_segments(chars, &piecewise_segments(chars, &center_lines)),
        center_lines,
        segment_spans,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSelection<T> {
    pub chosen: LineModel<T>,
    /// Fitted models in order-0, order-1, piecewise order.
    pub candidates: [LineModel<T>; 3],
    /// `h_m` per model.
    pub heights: [T; 3],
    pub penalties: [T; 3],
}

/// Fits all three models and keeps the one with the smallest penalized
/// height; ties go to the simpler model.
pub fn select_model<T: Scalar>(chars: &[AABox<T>]) -> ModelSelection<T> {
    let candidates = [fit_order0(chars), fit_order1(chars), fit_piecewise(chars)];
    let heights = [candidates[0].height, candidates[1].height, candidates[2].height];
    let penalties = MODEL_PENALTIES.map(T::lit);
    let mut best = 0;
    for m in 1..3 {
        if heights[m] * penalties[m] < heights[best] * penalties[best] {
            best = m;
        }
    }
    ModelSelection { chosen: candidates[best].clone(), candidates, heights, penalties }
}

/// Orders boxes along their principal axis, for input that did not come
/// out of the grouping stage.
pub fn chain_order<T: Scalar>(chars: &[AABox<T>]) -> Vec<usize> {
    let pts = centers(chars);
    let axis = Covariance2::of(&pts).major_axis();
    let mut idx: Vec<usize> = (0..chars.len()).collect();
    idx.sort_by(|&i, &j| cmp_scalar(pts[i].dot(axis), pts[j].dot(axis)).then(i.cmp(&j)));
    idx
}

/// Closed strip polygon: `n` top control points in chain order followed by
/// `n` bottom control points in reverse order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TextPolygon<T> {
    pub points: Vec<Point<T>>,
    /// False when the strip folds onto itself.
    pub simple: bool,
}

impl<T: Scalar> TextPolygon<T> {
    pub fn char_count(&self) -> usize {
        self.points.len() / 2
    }

    pub fn top(&self, i: usize) -> Point<T> {
        self.points[i]
    }

    pub fn bottom(&self, i: usize) -> Point<T> {
        self.points[self.points.len() - 1 - i]
    }
}

/// Builds the control points: for each character, two points `h/2` either
/// side of its local center line on the perpendicular through the character
/// center. The top side is the left-hand side when walking the chain.
pub fn text_polygon<T: Scalar>(chars: &[AABox<T>], model: &LineModel<T>) -> TextPolygon<T> {
    let n = chars.len();
    let pts = centers(chars);
    let half_h = model.height * T::lit(0.5);
    let mut top = Vec::with_capacity(n);
    let mut bottom = Vec::with_capacity(n);
    for i in 0..n {
        let line = model.line_for(i);
        let tangent = pts[(i + 1).min(n - 1)] - pts[i.saturating_sub(1)];
        let mut dir = line.direction();
        if dir.dot(tangent) < T::zero() {
            dir = dir * -T::one();
        }
        let normal = dir.perp();
        let foot = line.project(pts[i]);
        top.push(foot - normal * half_h);
        bottom.push(foot + normal * half_h);
    }
    let mut points = top;
    points.extend(bottom.into_iter().rev());
    let simple = n >= 2 && is_simple_polygon(&points);
    TextPolygon { points, simple }
}
