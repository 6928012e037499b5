//! Geometric primitives and small numeric kernels.
//!
//! Coordinates are in pixels with the image convention: `x` grows to the
//! right and `y` grows downward.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{cmp_scalar, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("box has xmax < xmin or ymax < ymin: [{0}, {1}, {2}, {3}]")]
    InvertedBox(f64, f64, f64, f64),
    #[error("quadrangle is degenerate (zero area)")]
    DegenerateQuad,
    #[error("quadrangle is self-intersecting")]
    SelfIntersectingQuad,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[T; 2]", into = "[T; 2]")]
#[serde(bound = "T: Scalar")]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> From<[T; 2]> for Point<T> {
    fn from(v: [T; 2]) -> Self {
        Point { x: v[0], y: v[1] }
    }
}

impl<T: Scalar> From<Point<T>> for [T; 2] {
    fn from(p: Point<T>) -> Self {
        [p.x, p.y]
    }
}

impl<T: Scalar> Point<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2-D cross product.
    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, o: Self) -> T {
        (self - o).norm()
    }

    /// Unit vector in the same direction; zero stays zero.
    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n > T::zero() {
            Point::new(self.x / n, self.y / n)
        } else {
            self
        }
    }

    /// Rotates by +90 degrees: `(x, y) -> (-y, x)`.
    #[inline]
    pub fn perp(self) -> Self {
        Point::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rotation about the origin by `angle` radians.
    pub fn rotated(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl<T: Scalar> Add for Point<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> Sub for Point<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Mul<T> for Point<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        Point::new(self.x * k, self.y * k)
    }
}

/// Axis-aligned box. Serialized as `[xmin, ymin, xmax, ymax]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[T; 4]", into = "[T; 4]")]
#[serde(bound = "T: Scalar")]
pub struct AABox<T> {
    pub xmin: T,
    pub ymin: T,
    pub xmax: T,
    pub ymax: T,
}

impl<T: Scalar> TryFrom<[T; 4]> for AABox<T> {
    type Error = GeomError;
    fn try_from(v: [T; 4]) -> Result<Self, GeomError> {
        AABox::new(v[0], v[1], v[2], v[3])
    }
}

impl<T: Scalar> From<AABox<T>> for [T; 4] {
    fn from(b: AABox<T>) -> Self {
        [b.xmin, b.ymin, b.xmax, b.ymax]
    }
}

impl<T: Scalar> AABox<T> {
    pub fn new(xmin: T, ymin: T, xmax: T, ymax: T) -> Result<Self, GeomError> {
        if !(xmin.is_finite() && ymin.is_finite() && xmax.is_finite() && ymax.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        if xmax < xmin || ymax < ymin {
            return Err(GeomError::InvertedBox(
                xmin.as_f64(),
                ymin.as_f64(),
                xmax.as_f64(),
                ymax.as_f64(),
            ));
        }
        Ok(AABox { xmin, ymin, xmax, ymax })
    }

    /// Box of the given size centered on `c`.
    pub fn centered(c: Point<T>, width: T, height: T) -> Self {
        let two = T::lit(2.0);
        AABox {
            xmin: c.x - width / two,
            ymin: c.y - height / two,
            xmax: c.x + width / two,
            ymax: c.y + height / two,
        }
    }

    #[inline]
    pub fn width(&self) -> T {
        self.xmax - self.xmin
    }

    #[inline]
    pub fn height(&self) -> T {
        self.ymax - self.ymin
    }

    #[inline]
    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    #[inline]
    pub fn center(&self) -> Point<T> {
        let two = T::lit(2.0);
        Point::new((self.xmin + self.xmax) / two, (self.ymin + self.ymax) / two)
    }

    #[inline]
    pub fn diagonal(&self) -> T {
        self.width().hypot(self.height())
    }

    /// Corners clockwise from top-left.
    pub fn corners(&self) -> [Point<T>; 4] {
        [
            Point::new(self.xmin, self.ymin),
            Point::new(self.xmax, self.ymin),
            Point::new(self.xmax, self.ymax),
            Point::new(self.xmin, self.ymax),
        ]
    }

    pub fn contains(&self, p: Point<T>) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn union(&self, o: &Self) -> Self {
        AABox {
            xmin: self.xmin.min(o.xmin),
            ymin: self.ymin.min(o.ymin),
            xmax: self.xmax.max(o.xmax),
            ymax: self.ymax.max(o.ymax),
        }
    }

    pub fn intersection_area(&self, o: &Self) -> T {
        let w = self.xmax.min(o.xmax) - self.xmin.max(o.xmin);
        let h = self.ymax.min(o.ymax) - self.ymin.max(o.ymin);
        if w <= T::zero() || h <= T::zero() {
            T::zero()
        } else {
            w * h
        }
    }

    /// Tight box around a set of points; `None` for an empty set.
    pub fn bounding(points: impl IntoIterator<Item = Point<T>>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = AABox { xmin: first.x, ymin: first.y, xmax: first.x, ymax: first.y };
        for p in it {
            b.xmin = b.xmin.min(p.x);
            b.ymin = b.ymin.min(p.y);
            b.xmax = b.xmax.max(p.x);
            b.ymax = b.ymax.max(p.y);
        }
        Some(b)
    }

    pub fn translated(&self, d: Point<T>) -> Self {
        AABox {
            xmin: self.xmin + d.x,
            ymin: self.ymin + d.y,
            xmax: self.xmax + d.x,
            ymax: self.ymax + d.y,
        }
    }
}

/// Intersection over union; zero when the union has no area.
pub fn iou<T: Scalar>(a: &AABox<T>, b: &AABox<T>) -> T {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= T::zero() {
        return T::zero();
    }
    (inter / union).min(T::one()).max(T::zero())
}

/// Signed shoelace area. Positive for clockwise winding in image coordinates.
pub fn signed_area<T: Scalar>(poly: &[Point<T>]) -> T {
    let n = poly.len();
    if n < 3 {
        return T::zero();
    }
    let mut acc = T::zero();
    for i in 0..n {
        acc = acc + poly[i].cross(poly[(i + 1) % n]);
    }
    acc / T::lit(2.0)
}

pub fn polygon_area<T: Scalar>(poly: &[Point<T>]) -> T {
    signed_area(poly).abs()
}

/// Even-odd point-in-polygon test; points on the boundary count as inside.
pub fn point_in_polygon<T: Scalar>(p: Point<T>, poly: &[Point<T>]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let eps = T::tiny() * (T::one() + p.x.abs() + p.y.abs());
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[j], poly[i]);
        if point_on_segment(p, a, b, eps) {
            return true;
        }
        if (b.y > p.y) != (a.y > p.y) {
            let x = (a.x - b.x) * (p.y - b.y) / (a.y - b.y) + b.x;
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn point_on_segment<T: Scalar>(p: Point<T>, a: Point<T>, b: Point<T>, eps: T) -> bool {
    let ab = b - a;
    let len = ab.norm();
    if len <= T::zero() {
        return p.dist(a) <= eps;
    }
    let cross = ab.cross(p - a).abs() / len;
    if cross > eps {
        return false;
    }
    let t = ab.dot(p - a) / (len * len);
    t >= -eps && t <= T::one() + eps
}

/// Proper or touching intersection between closed segments `ab` and `cd`.
pub fn segments_intersect<T: Scalar>(a: Point<T>, b: Point<T>, c: Point<T>, d: Point<T>) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    let z = T::zero();
    if ((d1 > z && d2 < z) || (d1 < z && d2 > z)) && ((d3 > z && d4 < z) || (d3 < z && d4 > z)) {
        return true;
    }
    let on = |p: Point<T>, q: Point<T>, r: Point<T>, v: T| {
        v == z && r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    on(a, b, c, d1) || on(a, b, d, d2) || on(c, d, a, d3) || on(c, d, b, d4)
}

/// True when no two non-adjacent edges of the closed polygon intersect.
pub fn is_simple_polygon<T: Scalar>(poly: &[Point<T>]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in (i + 1)..n {
            // skip edges sharing a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Quadrangle with clockwise winding (image coordinates) starting at the
/// top-left vertex. Serialized as `[[x, y]; 4]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[Point<T>; 4]", into = "[Point<T>; 4]")]
#[serde(bound = "T: Scalar")]
pub struct Quad<T> {
    pts: [Point<T>; 4],
}

impl<T: Scalar> TryFrom<[Point<T>; 4]> for Quad<T> {
    type Error = GeomError;
    fn try_from(v: [Point<T>; 4]) -> Result<Self, GeomError> {
        Quad::new(v)
    }
}

impl<T: Scalar> From<Quad<T>> for [Point<T>; 4] {
    fn from(q: Quad<T>) -> Self {
        q.pts
    }
}

impl<T: Scalar> Quad<T> {
    /// Validates the polygon and normalizes its winding and start vertex.
    pub fn new(mut pts: [Point<T>; 4]) -> Result<Self, GeomError> {
        if pts.iter().any(|p| !p.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        if !is_simple_polygon(&pts) {
            return Err(GeomError::SelfIntersectingQuad);
        }
        let area = signed_area(&pts);
        if area == T::zero() {
            return Err(GeomError::DegenerateQuad);
        }
        if area < T::zero() {
            pts.reverse();
        }
        let start = (0..4)
            .min_by(|&i, &j| {
                cmp_scalar(pts[i].x + pts[i].y, pts[j].x + pts[j].y)
                    .then(cmp_scalar(pts[i].y, pts[j].y))
            })
            .unwrap_or(0);
        pts.rotate_left(start);
        Ok(Quad { pts })
    }

    pub fn from_box(b: &AABox<T>) -> Self {
        Quad { pts: b.corners() }
    }

    pub fn points(&self) -> &[Point<T>; 4] {
        &self.pts
    }

    pub fn area(&self) -> T {
        polygon_area(&self.pts)
    }

    pub fn bounding_box(&self) -> AABox<T> {
        AABox::bounding(self.pts).expect("four points")
    }

    pub fn contains(&self, p: Point<T>) -> bool {
        point_in_polygon(p, &self.pts)
    }

    /// True when every edge is horizontal or vertical.
    pub fn is_axis_aligned(&self) -> bool {
        (0..4).all(|i| {
            let (a, b) = (self.pts[i], self.pts[(i + 1) % 4]);
            a.x == b.x || a.y == b.y
        })
    }
}

/// Eigenvalues of a 2x2 covariance matrix, `lambda1 >= lambda2 >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EigenPair<T> {
    pub lambda1: T,
    pub lambda2: T,
}

/// Second moments of a point set (1/n normalization).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance2<T> {
    pub mean: Point<T>,
    pub xx: T,
    pub xy: T,
    pub yy: T,
}

impl<T: Scalar> Covariance2<T> {
    /// Two-pass sample covariance; all zeros for an empty input.
    pub fn of(points: &[Point<T>]) -> Self {
        let zero = T::zero();
        if points.is_empty() {
            return Covariance2 { mean: Point::new(zero, zero), xx: zero, xy: zero, yy: zero };
        }
        let n = T::from_count(points.len());
        let (sx, sy) = points.iter().fold((zero, zero), |(sx, sy), p| (sx + p.x, sy + p.y));
        let mean = Point::new(sx / n, sy / n);
        let (mut xx, mut xy, mut yy) = (zero, zero, zero);
        for p in points {
            let d = *p - mean;
            xx = xx + d.x * d.x;
            xy = xy + d.x * d.y;
            yy = yy + d.y * d.y;
        }
        Covariance2 { mean, xx: xx / n, xy: xy / n, yy: yy / n }
    }

    pub fn trace(&self) -> T {
        self.xx + self.yy
    }

    pub fn determinant(&self) -> T {
        self.xx.mul_add(self.yy, -(self.xy * self.xy))
    }

    /// Closed-form roots of the characteristic polynomial. The smaller root
    /// is recovered as `det / lambda1` to avoid cancellation.
    pub fn eigens(&self) -> EigenPair<T> {
        let zero = T::zero();
        let two = T::lit(2.0);
        let half_tr = self.trace() / two;
        let half_diff = (self.xx - self.yy) / two;
        let disc = half_diff.hypot(self.xy);
        let lambda1 = (half_tr + disc).max(zero);
        let lambda2 = if lambda1 > zero {
            (self.determinant() / lambda1).max(zero).min(lambda1)
        } else {
            zero
        };
        EigenPair { lambda1, lambda2 }
    }

    /// Unit eigenvector of the largest eigenvalue; `(1, 0)` when isotropic.
    pub fn major_axis(&self) -> Point<T> {
        let two = T::lit(2.0);
        let theta = (two * self.xy).atan2(self.xx - self.yy) / two;
        let (s, c) = theta.sin_cos();
        Point::new(c, s)
    }
}

/// Eigenvalues of the 1/n sample covariance of `points`; `(0, 0)` when empty.
pub fn covariance_eigens<T: Scalar>(points: &[Point<T>]) -> EigenPair<T> {
    Covariance2::of(points).eigens()
}

/// Anything that carries a box and a confidence score.
pub trait Scored<T> {
    fn bbox(&self) -> AABox<T>;
    fn score(&self) -> T;
}

impl<T: Scalar> Scored<T> for (AABox<T>, T) {
    fn bbox(&self) -> AABox<T> {
        self.0
    }
    fn score(&self) -> T {
        self.1
    }
}

/// Indices of `items` in descending score order, ties by lower index.
pub fn score_order<T: Scalar, D: Scored<T>>(items: &[D]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&i, &j| cmp_scalar(items[j].score(), items[i].score()).then(i.cmp(&j)));
    order
}

/// Greedy non-maximum suppression. Survivors come out in descending score
/// order and every surviving pair has IoU below `iou_threshold`.
pub fn nms<T: Scalar, D: Scored<T> + Clone>(candidates: &[D], iou_threshold: T) -> Vec<D> {
    let mut kept: Vec<usize> = Vec::new();
    for i in score_order(candidates) {
        let b = candidates[i].bbox();
        if kept.iter().all(|&k| iou(&candidates[k].bbox(), &b) < iou_threshold) {
            kept.push(i);
        }
    }
    kept.into_iter().map(|i| candidates[i].clone()).collect()
}
