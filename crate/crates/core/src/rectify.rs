//! Thin-plate-spline rectification of text polygons into fixed-height strips,
//! and a column-profile word partitioner that works on those strips.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{AABox, Covariance2, Point};
use crate::lineshape::{LineModel, TextPolygon};
use crate::raster::{RasterError, RasterImage};
use crate::scalar::Scalar;

/// Strip height in pixels.
pub const STRIP_HEIGHT: usize = 32;

#[derive(Debug, Error)]
pub enum RectifyError {
    #[error("control point lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 control points, got {0}")]
    TooFewPoints(usize),
    #[error("control points {0} and {1} coincide")]
    DuplicatePoints(usize, usize),
    #[error("control points are collinear")]
    Collinear,
    #[error("singular thin-plate-spline system")]
    Singular,
    #[error("degenerate text polygon: {0}")]
    DegeneratePolygon(&'static str),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// `U(r) = r^2 ln r^2` evaluated from `r^2`, with `U(0) = 0`.
#[inline]
pub fn tps_kernel<T: Scalar>(r2: T) -> T {
    if r2 <= T::zero() {
        T::zero()
    } else {
        r2 * r2.ln()
    }
}

/// Interpolating 2-D thin-plate spline
/// `f(p) = a0 + a1*x + a2*y + sum_i w_i U(|p - c_i|)`, per output coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TpsTransform<T> {
    /// Control points in the domain of the map.
    pub control: Vec<Point<T>>,
    /// `[a0, a1, a2]` for the output x, then the same for output y.
    pub affine: [T; 6],
    /// One weight pair (x output, y output) per control point.
    pub weights: Vec<Point<T>>,
}

impl<T: Scalar> TpsTransform<T> {
    pub fn apply(&self, p: Point<T>) -> Point<T> {
        let a = &self.affine;
        let mut x = a[0] + a[1] * p.x + a[2] * p.y;
        let mut y = a[3] + a[4] * p.x + a[5] * p.y;
        for (c, w) in self.control.iter().zip(&self.weights) {
            let d = p - *c;
            let u = tps_kernel(d.dot(d));
            x = x + w.x * u;
            y = y + w.y * u;
        }
        Point::new(x, y)
    }

    /// Largest absolute value among `sum w`, `sum w*x`, `sum w*y` for both
    /// output coordinates.
    pub fn side_condition_residual(&self) -> T {
        let mut sums = [T::zero(); 6];
        for (c, w) in self.control.iter().zip(&self.weights) {
            sums[0] = sums[0] + w.x;
            sums[1] = sums[1] + w.x * c.x;
            sums[2] = sums[2] + w.x * c.y;
            sums[3] = sums[3] + w.y;
            sums[4] = sums[4] + w.y * c.x;
            sums[5] = sums[5] + w.y * c.y;
        }
        sums.iter().fold(T::zero(), |m, s| m.max(s.abs()))
    }

    pub fn max_weight(&self) -> T {
        self.weights.iter().fold(T::zero(), |m, w| m.max(w.x.abs()).max(w.y.abs()))
    }
}

/// Row-major LU factorization with partial pivoting.
struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    fn factor(mut a: Vec<T>, n: usize) -> Result<Self, RectifyError> {
        let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let tol = scale * T::epsilon() * T::from_count(n) * T::lit(64.0);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            for i in k + 1..n {
                if a[i * n + k].abs() > a[p * n + k].abs() {
                    p = i;
                }
            }
            if !(a[p * n + k].abs() > tol) {
                return Err(RectifyError::Singular);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                a[i * n + k] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        a[i * n + j] = a[i * n + j] - f * a[k * n + j];
                    }
                }
            }
        }
        Ok(Lu { n, lu: a, perm })
    }

    fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] = x[i] - self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] = x[i] - self.lu[i * n + j] * x[j];
            }
            x[i] = x[i] / self.lu[i * n + i];
        }
        x
    }
}

fn tps_system<T: Scalar>(src: &[Point<T>]) -> Vec<T> {
    let m = src.len();
    let n = m + 3;
    let mut a = vec![T::zero(); n * n];
    for i in 0..m {
        for j in 0..m {
            let d = src[i] - src[j];
            a[i * n + j] = tps_kernel(d.dot(d));
        }
        let row = [T::one(), src[i].x, src[i].y];
        for (k, v) in row.into_iter().enumerate() {
            a[i * n + m + k] = v;
            a[(m + k) * n + i] = v;
        }
    }
    a
}

fn mat_vec<T: Scalar>(a: &[T], x: &[T]) -> Vec<T> {
    let n = x.len();
    (0..n).map(|i| (0..n).fold(T::zero(), |s, j| s + a[i * n + j] * x[j])).collect()
}

/// Fits the spline mapping `source[i]` onto `target[i]`.
pub fn tps_fit<T: Scalar>(source: &[Point<T>], target: &[Point<T>]) -> Result<TpsTransform<T>, RectifyError> {
    if source.len() != target.len() {
        return Err(RectifyError::LengthMismatch(source.len(), target.len()));
    }
    let m = source.len();
    if m < 3 {
        return Err(RectifyError::TooFewPoints(m));
    }
    for i in 0..m {
        for j in i + 1..m {
            if source[i] == source[j] {
                return Err(RectifyError::DuplicatePoints(i, j));
            }
        }
    }
    let eig = Covariance2::of(source).eigens();
    if eig.lambda2 <= eig.lambda1 * T::tiny() {
        return Err(RectifyError::Collinear);
    }

    let n = m + 3;
    let a = tps_system(source);
    let lu = Lu::factor(a.clone(), n)?;
    let mut solutions = Vec::with_capacity(2);
    for coord in 0..2 {
        let mut b = vec![T::zero(); n];
        for (bi, t) in b.iter_mut().zip(target) {
            *bi = if coord == 0 { t.x } else { t.y };
        }
        let mut x = lu.solve(&b);
        // one refinement step tightens the interpolation residual
        let ax = mat_vec(&a, &x);
        let r: Vec<T> = b.iter().zip(&ax).map(|(bi, ai)| *bi - *ai).collect();
        let dx = lu.solve(&r);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi = *xi + d;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(RectifyError::Singular);
        }
        solutions.push(x);
    }
    let (sx, sy) = (&solutions[0], &solutions[1]);
    Ok(TpsTransform {
        control: source.to_vec(),
        affine: [sx[m], sx[m + 1], sx[m + 2], sy[m], sy[m + 1], sy[m + 2]],
        weights: (0..m).map(|i| Point::new(sx[i], sy[i])).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RectifiedStrip<T> {
    pub raster: RasterImage,
    pub polygon: TextPolygon<T>,
    /// Strip coordinates to source image coordinates (used for sampling).
    pub to_source: TpsTransform<T>,
    /// Source image coordinates to strip coordinates.
    pub to_strip: TpsTransform<T>,
}

impl<T: Scalar> RectifiedStrip<T> {
    pub fn width(&self) -> usize {
        self.raster.width()
    }

    pub fn height(&self) -> usize {
        self.raster.height()
    }
}

/// Source and strip control points for `polygon`, plus the strip width.
///
/// The center polyline through the per-character foot points is extended by
/// `h/2` past each end so the outer characters land inside the strip; the
/// extension adds one top/bottom pair of control points at each end.
pub fn strip_control_points<T: Scalar>(
    polygon: &TextPolygon<T>,
    model: &LineModel<T>,
) -> Result<(Vec<Point<T>>, Vec<Point<T>>, usize), RectifyError> {
    let n = polygon.char_count();
    if n == 0 || polygon.points.len() != 2 * n {
        return Err(RectifyError::DegeneratePolygon("no control points"));
    }
    let h = model.height;
    if !(h > T::zero()) || !h.is_finite() {
        return Err(RectifyError::DegeneratePolygon("non-positive height"));
    }
    if n >= 2 && !polygon.simple {
        return Err(RectifyError::DegeneratePolygon("self-intersecting"));
    }
    let half = T::lit(0.5);
    let tops: Vec<Point<T>> = (0..n).map(|i| polygon.top(i)).collect();
    let bottoms: Vec<Point<T>> = (0..n).map(|i| polygon.bottom(i)).collect();
    let mids: Vec<Point<T>> = tops.iter().zip(&bottoms).map(|(t, b)| (*t + *b) * half).collect();

    // along-line direction at each end: perpendicular to the top-to-bottom
    // normal, pointing in chain order
    let along = |i: usize| -> Point<T> {
        let normal = (bottoms[i] - tops[i]).normalized();
        Point::new(-normal.y, normal.x) * -T::one()
    };
    let cap = h * half;
    let first = along(0) * -cap;
    let last = along(n - 1) * cap;

    let mut arc = vec![cap];
    for w in mids.windows(2) {
        let s = *arc.last().unwrap() + w[0].dist(w[1]);
        arc.push(s);
    }
    let total = *arc.last().unwrap() + cap;
    let hh = T::from_count(STRIP_HEIGHT);
    let width = (hh * total / h).round().to_usize().unwrap_or(1).max(1);
    let wscale = T::from_count(width) / total;

    let mut src = Vec::with_capacity(2 * n + 4);
    let mut dst = Vec::with_capacity(2 * n + 4);
    src.push(tops[0] + first);
    dst.push(Point::new(T::zero(), T::zero()));
    src.push(bottoms[0] + first);
    dst.push(Point::new(T::zero(), hh));
    for i in 0..n {
        let x = arc[i] * wscale;
        src.push(tops[i]);
        dst.push(Point::new(x, T::zero()));
        src.push(bottoms[i]);
        dst.push(Point::new(x, hh));
    }
    src.push(tops[n - 1] + last);
    dst.push(Point::new(T::from_count(width), T::zero()));
    src.push(bottoms[n - 1] + last);
    dst.push(Point::new(T::from_count(width), hh));
    Ok((src, dst, width))
}

/// Warps the region under `polygon` to a `32 x W` strip by inverse mapping
/// and bilinear sampling.
pub fn rectify_strip<T: Scalar>(
    image: &RasterImage,
    polygon: &TextPolygon<T>,
    model: &LineModel<T>,
) -> Result<RectifiedStrip<T>, RectifyError> {
    let (src, dst, width) = strip_control_points(polygon, model)?;
    let to_source = tps_fit(&dst, &src)?;
    let to_strip = tps_fit(&src, &dst)?;
    let half = T::lit(0.5);
    let mut pixels = Vec::with_capacity(width * STRIP_HEIGHT);
    for j in 0..STRIP_HEIGHT {
        for i in 0..width {
            let p = Point::new(T::from_count(i) + half, T::from_count(j) + half);
            let q = to_source.apply(p);
            let v = image.sample_bilinear(q.x, q.y);
            pixels.push(v.round().max(T::zero()).min(T::lit(255.0)).to_u8().unwrap_or(0));
        }
    }
    Ok(RectifiedStrip { raster: RasterImage::new(width, STRIP_HEIGHT, pixels)?, polygon: polygon.clone(), to_source, to_strip })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "T: Scalar")]
pub struct PartitionParams<T> {
    /// Separator runs must span at least this fraction of the strip height.
    pub min_gap_frac: T,
    /// Column density threshold relative to the strip's densest column.
    pub threshold_frac: T,
}

impl<T: Scalar> Default for PartitionParams<T> {
    fn default() -> Self {
        PartitionParams { min_gap_frac: T::lit(0.5), threshold_frac: T::lit(0.15) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct WordPartition<T> {
    /// Half-open column ranges, one per word.
    pub intervals: Vec<(usize, usize)>,
    /// Half-open column ranges of the separating gaps.
    pub separators: Vec<(usize, usize)>,
    /// Separator mid-columns mapped back to the source image (top, bottom).
    pub cut_lines: Vec<[Point<T>; 2]>,
    /// Word outlines in the source image, clockwise from the strip's top-left.
    pub word_quads: Vec<[Point<T>; 4]>,
}

impl<T: Scalar> WordPartition<T> {
    pub fn separator_centers(&self) -> Vec<T> {
        self.separators.iter().map(|&(a, b)| T::from_count(a + b) * T::lit(0.5)).collect()
    }

    pub fn word_boxes(&self) -> Vec<AABox<T>> {
        self.word_quads.iter().filter_map(|q| AABox::bounding(q.iter().copied())).collect()
    }
}

/// Mean contrast-normalized darkness per column (1 = darkest pixel of the
/// strip, 0 = lightest).
pub fn column_density(raster: &RasterImage) -> Vec<f64> {
    let px = raster.pixels();
    let (lo, hi) = px.iter().fold((u8::MAX, u8::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let (w, h) = (raster.width(), raster.height());
    if hi == lo {
        return vec![0.0; w];
    }
    let range = f64::from(hi - lo);
    (0..w)
        .map(|x| (0..h).map(|y| f64::from(hi - raster.get(x, y)) / range).sum::<f64>() / h as f64)
        .collect()
}

/// Column intervals of a density profile: runs at or above the threshold
/// are ink; sub-threshold runs between ink of length `>= min_gap` separate
/// words. Leading and trailing blank columns belong to no interval.
pub fn split_profile(density: &[f64], threshold_frac: f64, min_gap: usize) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let w = density.len();
    let peak = density.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return (vec![(0, w)], Vec::new());
    }
    let thr = threshold_frac * peak;
    let ink: Vec<bool> = density.iter().map(|&d| d >= thr).collect();
    let first = ink.iter().position(|&b| b).unwrap();
    let last = ink.iter().rposition(|&b| b).unwrap() + 1;
    let mut separators = Vec::new();
    let mut x = first;
    while x < last {
        if ink[x] {
            x += 1;
            continue;
        }
        let start = x;
        while x < last && !ink[x] {
            x += 1;
        }
        if x - start >= min_gap.max(1) {
            separators.push((start, x));
        }
    }
    let mut intervals = Vec::with_capacity(separators.len() + 1);
    let mut begin = first;
    for &(a, b) in &separators {
        intervals.push((begin, a));
        begin = b;
    }
    intervals.push((begin, last));
    (intervals, separators)
}

/// Splits a rectified strip into words at wide low-ink column runs.
pub fn partition_words<T: Scalar>(strip: &RectifiedStrip<T>, params: &PartitionParams<T>) -> WordPartition<T> {
    partition_raster(&strip.raster, &strip.to_source, params)
}

/// [`partition_words`] on a bare strip raster and its strip-to-source map.
pub fn partition_raster<T: Scalar>(
    raster: &RasterImage,
    to_source: &TpsTransform<T>,
    params: &PartitionParams<T>,
) -> WordPartition<T> {
    let density = column_density(raster);
    let h = raster.height();
    let min_gap = (params.min_gap_frac.as_f64() * h as f64).ceil() as usize;
    let (intervals, separators) = split_profile(&density, params.threshold_frac.as_f64(), min_gap);
    let hh = T::from_count(h);
    let map = |x: T, y: T| to_source.apply(Point::new(x, y));
    let cut_lines = separators
        .iter()
        .map(|&(a, b)| {
            let mid = T::from_count(a + b) * T::lit(0.5);
            [map(mid, T::zero()), map(mid, hh)]
        })
        .collect();
    let word_quads = intervals
        .iter()
        .map(|&(a, b)| {
            let (xa, xb) = (T::from_count(a), T::from_count(b));
            [map(xa, T::zero()), map(xb, T::zero()), map(xb, hh), map(xa, hh)]
        })
        .collect();
    WordPartition { intervals, separators, cut_lines, word_quads }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lineshape::{fit_order0, text_polygon};
    use proptest::prelude::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Point<f64>> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn identity_fit() {
        let s = pts(&[(0.0, 0.0), (10.0, 0.0), (0.0, 10.0), (7.0, 4.0), (3.0, 8.0)]);
        let t = tps_fit(&s, &s).unwrap();
        assert!(t.max_weight() < 1e-12);
        let id = [0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        for (a, b) in t.affine.iter().zip(id) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn affine_reproduction() {
        let s = pts(&[(1.0, 2.0), (40.0, 3.0), (5.0, 30.0), (22.0, 17.0), (35.0, 35.0), (12.0, 9.0)]);
        let f = |p: Point<f64>| Point::new(3.0 + 0.9 * p.x - 0.4 * p.y, -7.0 + 0.3 * p.x + 1.1 * p.y);
        let t: Vec<_> = s.iter().map(|&p| f(p)).collect();
        let tps = tps_fit(&s, &t).unwrap();
        assert!(tps.max_weight() <= 1e-8);
        for q in pts(&[(-5.0, 50.0), (100.0, 100.0), (17.5, 3.25)]) {
            assert!(tps.apply(q).dist(f(q)) <= 1e-6);
        }
    }

    #[test]
    fn rejects_degenerate_controls() {
        let line = pts(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]);
        assert!(matches!(tps_fit(&line, &line), Err(RectifyError::Collinear)));
        let dup = pts(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 0.0)]);
        assert!(matches!(tps_fit(&dup, &dup), Err(RectifyError::DuplicatePoints(1, 3))));
        assert!(matches!(tps_fit(&dup[..2], &dup[..2]), Err(RectifyError::TooFewPoints(2))));
        assert!(matches!(tps_fit(&dup[..3], &dup[..2]), Err(RectifyError::LengthMismatch(3, 2))));
    }

    #[test]
    fn kernel_values() {
        assert_eq!(tps_kernel(0.0f64), 0.0);
        assert_eq!(tps_kernel(1.0f64), 0.0);
        assert!((tps_kernel(4.0f64) - 4.0 * 4f64.ln()).abs() < 1e-15);
    }

    fn row_of_boxes(n: usize, y: f64, size: f64, pitch: f64) -> Vec<AABox<f64>> {
        (0..n).map(|i| AABox::centered(Point::new(20.0 + i as f64 * pitch, y), size * 0.6, size)).collect()
    }

    #[test]
    fn horizontal_strip_is_scaled_copy() {
        // smooth gradient image so bilinear sampling is well-defined
        let (w, h) = (160, 60);
        let px: Vec<u8> = (0..w * h).map(|k| ((k % w) + 2 * (k / w)) as u8).collect();
        let img = RasterImage::new(w, h, px).unwrap();
        let boxes = row_of_boxes(8, 30.0, 16.0, 15.0);
        let model = fit_order0(&boxes);
        let poly = text_polygon(&boxes, &model);
        let strip = rectify_strip(&img, &poly, &model).unwrap();
        assert_eq!(strip.height(), 32);
        assert!(strip.to_source.max_weight() < 1e-8);
        let x0 = 20.0 - model.height / 2.0;
        let len = 7.0 * 15.0 + model.height;
        let sx = len / strip.width() as f64;
        let sy = model.height / 32.0;
        for j in 0..32 {
            for i in 0..strip.width() {
                let q = Point::new(x0 + (i as f64 + 0.5) * sx, 30.0 - model.height / 2.0 + (j as f64 + 0.5) * sy);
                let direct = img.sample_bilinear(q.x, q.y).round();
                assert!((direct - strip.raster.get(i, j) as f64).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn width_tracks_aspect() {
        let boxes = row_of_boxes(5, 30.0, 20.0, 20.0);
        let model = fit_order0(&boxes);
        let (_, _, w) = strip_control_points(&text_polygon(&boxes, &model), &model).unwrap();
        assert_eq!(w, (32.0 * (80.0 + model.height) / model.height).round() as usize);
    }

    fn strip_from(cols: &[u8]) -> RectifiedStrip<f64> {
        let w = cols.len();
        let px: Vec<u8> = (0..32).flat_map(|_| cols.iter().copied()).collect();
        let src = pts(&[(0.0, 0.0), (w as f64, 0.0), (w as f64, 32.0), (0.0, 32.0)]);
        let id = tps_fit(&src, &src).unwrap();
        RectifiedStrip {
            raster: RasterImage::new(w, 32, px).unwrap(),
            polygon: TextPolygon { points: src.clone(), simple: true },
            to_source: id.clone(),
            to_strip: id,
        }
    }

    #[test]
    fn blank_middle_third_splits_in_two() {
        let cols: Vec<u8> = (0..96).map(|x| if (32..64).contains(&x) { 255 } else { 0 }).collect();
        let part = partition_words(&strip_from(&cols), &PartitionParams::default());
        assert_eq!(part.intervals, vec![(0, 32), (64, 96)]);
        assert_eq!(part.separators, vec![(32, 64)]);
        let cut = part.cut_lines[0];
        assert!((cut[0].x - 48.0).abs() < 1e-9 && (cut[1].y - 32.0).abs() < 1e-9);
    }

    #[test]
    fn no_gap_gives_one_interval() {
        let cols: Vec<u8> = (0..80).map(|x| if x % 10 < 7 { 0 } else { 255 }).collect();
        let part = partition_words(&strip_from(&cols), &PartitionParams::default());
        assert_eq!(part.intervals.len(), 1);
        assert!(part.separators.is_empty());
        let blank = partition_words(&strip_from(&[200; 50]), &PartitionParams::default());
        assert_eq!(blank.intervals, vec![(0, 50)]);
    }

    proptest! {
        #[test]
        fn tps_interpolates_and_balances(
            raw in prop::collection::vec((0.0..200.0f64, 0.0..200.0f64, -20.0..20.0f64, -20.0..20.0f64), 4..14),
        ) {
            let src: Vec<_> = raw.iter().map(|&(x, y, _, _)| Point::new(x, y)).collect();
            let min_sep = (0..src.len())
                .flat_map(|i| (i + 1..src.len()).map(move |j| (i, j)))
                .map(|(i, j)| src[i].dist(src[j]))
                .fold(f64::INFINITY, f64::min);
            prop_assume!(min_sep > 1.0);
            prop_assume!(Covariance2::of(&src).eigens().lambda2 > 1.0);
            let dst: Vec<_> = raw.iter().map(|&(x, y, dx, dy)| Point::new(x + dx, y + dy)).collect();
            let tps = tps_fit(&src, &dst).unwrap();
            for (s, d) in src.iter().zip(&dst) {
                prop_assert!(tps.apply(*s).dist(*d) <= 1e-6);
            }
            prop_assert!(tps.side_condition_residual() <= 1e-8);
        }

        #[test]
        fn profile_intervals_cover_ink(
            dens in prop::collection::vec(prop_oneof![Just(0.0f64), 0.0..1.0f64], 1..200),
            gap in 1usize..20,
        ) {
            let (iv, seps) = split_profile(&dens, 0.15, gap);
            prop_assert!(iv.windows(2).all(|w| w[0].1 <= w[1].0));
            prop_assert!(iv.iter().all(|&(a, b)| a <= b));
            prop_assert_eq!(iv.len(), seps.len() + 1);
            let peak = dens.iter().cloned().fold(0.0, f64::max);
            if peak > 0.0 {
                for (x, &d) in dens.iter().enumerate() {
                    if d >= 0.15 * peak {
                        prop_assert!(iv.iter().any(|&(a, b)| a <= x && x < b));
                    }
                }
            }
        }
    }
}
