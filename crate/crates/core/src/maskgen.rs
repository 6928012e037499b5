//! Character mask generation from word annotations.
//!
//! For every annotated word the candidates whose centers fall inside the word
//! are linked into a k-NN graph, reduced to a maximum spanning tree, and the
//! tree is cut greedily: each cut splits the current group in two, the better
//! half is kept, and cutting continues while the selection score improves.
//!
//! The selection score of a set of characters is
//! `s = w * s1 + (1 - w) * s2`, with `s1` the area ratio of the characters'
//! bounding region to the word region and `s2 = 1 - lambda2 / lambda1` the
//! straightness of their centers.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{covariance_eigens, polygon_area, signed_area, AABox, Point, Quad};
use crate::ingest::{CharCandidate, Region, Scene, WordAnnotation};
use crate::scalar::{cmp_scalar, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaskError {
    #[error("cannot score an empty selection")]
    EmptySelection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
#[serde(default)]
pub struct MaskScoreParams<T> {
    /// Balance between coverage and straightness.
    pub w: T,
    /// Weight of the character-count penalty; only used when the word has a
    /// `char_count`.
    pub count_term_weight: Option<T>,
    pub knn_k: usize,
    /// Candidates below this score are not admitted into a word.
    pub score_floor: T,
}

impl<T: Scalar> Default for MaskScoreParams<T> {
    fn default() -> Self {
        MaskScoreParams {
            w: T::lit(0.5),
            count_term_weight: Some(T::lit(0.25)),
            knn_k: 4,
            score_floor: T::lit(0.1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskScore<T> {
    pub s: T,
    pub s1: T,
    pub s2: T,
}

/// Selected candidates of one word together with their score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CharMask<T> {
    pub word_index: usize,
    pub selected_ids: Vec<u64>,
    pub s: T,
    pub s1: T,
    pub s2: T,
}

impl<T: Scalar> CharMask<T> {
    pub fn empty(word_index: usize) -> Self {
        CharMask { word_index, selected_ids: Vec::new(), s: T::zero(), s1: T::zero(), s2: T::zero() }
    }

    pub fn is_empty(&self) -> bool {
        self.selected_ids.is_empty()
    }
}

/// Weight applied to the detector loss of a word: the mask score itself,
/// floored at zero so a penalized mask never flips the gradient.
pub fn loss_weight<T: Scalar>(mask: &CharMask<T>) -> T {
    if mask.is_empty() {
        T::zero()
    } else {
        mask.s.max(T::zero())
    }
}

/// Straightness term. One or two points are trivially collinear.
fn straightness<T: Scalar>(centers: &[Point<T>]) -> T {
    if centers.len() <= 2 {
        return T::one();
    }
    let e = covariance_eigens(centers);
    if e.lambda1 < T::lit(1e-12) {
        return T::one();
    }
    (T::one() - e.lambda2 / e.lambda1).max(T::zero()).min(T::one())
}

/// Score of the characters with the given boxes against `anno`.
fn score_boxes<T: Scalar>(
    boxes: &[AABox<T>],
    anno: &WordAnnotation<T>,
    params: &MaskScoreParams<T>,
) -> Result<MaskScore<T>, MaskError> {
    if boxes.is_empty() {
        return Err(MaskError::EmptySelection);
    }
    let s1 = match &anno.region {
        Region::Box(b) => {
            let tight = boxes.iter().skip(1).fold(boxes[0], |acc, x| acc.union(x));
            let area = b.area();
            if area > T::zero() {
                (tight.area() / area).min(T::one()).max(T::zero())
            } else {
                T::zero()
            }
        }
        Region::Quad(q) => quad_coverage(boxes, q),
    };
    let centers: Vec<Point<T>> = boxes.iter().map(|b| b.center()).collect();
    let s2 = straightness(&centers);
    let mut s = params.w * s1 + (T::one() - params.w) * s2;
    if let (Some(count), Some(cw)) = (anno.char_count, params.count_term_weight) {
        let count = T::from_count(count as usize);
        let n = T::from_count(boxes.len());
        s = s - cw * (n - count).abs() / count;
    }
    Ok(MaskScore { s, s1, s2 })
}

/// Selection score of `selection` for the annotated word.
pub fn mask_score<T: Scalar>(
    selection: &[CharCandidate<T>],
    anno: &WordAnnotation<T>,
    params: &MaskScoreParams<T>,
) -> Result<MaskScore<T>, MaskError> {
    let boxes: Vec<AABox<T>> = selection.iter().map(|c| c.bbox).collect();
    score_boxes(&boxes, anno, params)
}

/// Coverage of a quadrangle annotation: the selected corners are bounded by
/// a rectangle aligned with the quad's top edge, and the part of the quad it
/// covers is reported as a fraction of the quad area.
fn quad_coverage<T: Scalar>(boxes: &[AABox<T>], quad: &Quad<T>) -> T {
    let pts = quad.points();
    let u = (pts[1] - pts[0]).normalized();
    let v = u.perp();
    let (mut umin, mut umax) = (T::infinity(), T::neg_infinity());
    let (mut vmin, mut vmax) = (T::infinity(), T::neg_infinity());
    for c in boxes.iter().flat_map(|b| b.corners()) {
        let (pu, pv) = (c.dot(u), c.dot(v));
        umin = umin.min(pu);
        umax = umax.max(pu);
        vmin = vmin.min(pv);
        vmax = vmax.max(pv);
    }
    let at = |a: T, b: T| u * a + v * b;
    let rect = [at(umin, vmin), at(umax, vmin), at(umax, vmax), at(umin, vmax)];
    let area = quad.area();
    if area <= T::zero() {
        return T::zero();
    }
    let clipped = clip_polygon(pts, &rect);
    (polygon_area(&clipped) / area).min(T::one()).max(T::zero())
}

/// Sutherland-Hodgman clipping of `subject` by the convex polygon `window`.
pub fn clip_polygon<T: Scalar>(subject: &[Point<T>], window: &[Point<T>]) -> Vec<Point<T>> {
    let mut window = window.to_vec();
    if signed_area(&window) < T::zero() {
        window.reverse();
    }
    let mut out = subject.to_vec();
    let m = window.len();
    for i in 0..m {
        if out.is_empty() {
            break;
        }
        let (a, b) = (window[i], window[(i + 1) % m]);
        let edge = b - a;
        let side = |p: Point<T>| edge.cross(p - a);
        let input = std::mem::take(&mut out);
        let n = input.len();
        for j in 0..n {
            let (p, q) = (input[j], input[(j + 1) % n]);
            let (sp, sq) = (side(p), side(q));
            let (pin, qin) = (sp >= T::zero(), sq >= T::zero());
            if pin {
                out.push(p);
            }
            if pin != qin {
                let t = sp / (sp - sq);
                out.push(p + (q - p) * t);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphEdge<T> {
    /// Local node indices with `a < b`.
    pub a: usize,
    pub b: usize,
    pub distance: T,
    pub weight: T,
}

/// k-NN graph over candidate centers.
#[derive(Debug, Clone, PartialEq)]
pub struct CharGraph<T> {
    pub ids: Vec<u64>,
    pub edges: Vec<GraphEdge<T>>,
    /// Mean length of the k-NN edges (each pair once).
    pub mean_knn_distance: T,
}

impl<T: Scalar> CharGraph<T> {
    pub fn node_count(&self) -> usize {
        self.ids.len()
    }
}

/// Unordered k-NN pairs `(i, j)`, `i < j`, under the given distance.
/// Neighbour ties are broken by lower index.
pub(crate) fn knn_pairs<T: Scalar>(n: usize, k: usize, dist: impl Fn(usize, usize) -> T) -> BTreeSet<(usize, usize)> {
    let mut pairs = BTreeSet::new();
    for i in 0..n {
        let mut others: Vec<(T, usize)> = (0..n).filter(|&j| j != i).map(|j| (dist(i, j), j)).collect();
        others.sort_by(|x, y| cmp_scalar(x.0, y.0).then(x.1.cmp(&y.1)));
        for &(_, j) in others.iter().take(k) {
            pairs.insert((i.min(j), i.max(j)));
        }
    }
    pairs
}

/// Builds the k-NN character graph with weights
/// `exp(-d / mean_d) * (t_i + t_j)`.
pub fn build_char_graph<T: Scalar>(cands: &[CharCandidate<T>], k: usize) -> CharGraph<T> {
    let centers: Vec<Point<T>> = cands.iter().map(|c| c.center()).collect();
    let pairs = knn_pairs(cands.len(), k, |i, j| centers[i].dist(centers[j]));
    let dists: Vec<T> = pairs.iter().map(|&(i, j)| centers[i].dist(centers[j])).collect();
    let mean = if dists.is_empty() {
        T::zero()
    } else {
        dists.iter().fold(T::zero(), |a, &d| a + d) / T::from_count(dists.len())
    };
    let edges = pairs
        .iter()
        .zip(&dists)
        .map(|(&(a, b), &d)| {
            let decay = if mean > T::zero() { (-d / mean).exp() } else { T::one() };
            GraphEdge { a, b, distance: d, weight: decay * (cands[a].score + cands[b].score) }
        })
        .collect();
    CharGraph { ids: cands.iter().map(|c| c.id).collect(), edges, mean_knn_distance: mean }
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Kruskal on descending weights; a forest when the graph is disconnected.
/// Equal weights are taken in ascending `(id, id)` order.
pub fn maximum_spanning_tree<T: Scalar>(g: &CharGraph<T>) -> Vec<GraphEdge<T>> {
    let key = |e: &GraphEdge<T>| {
        let (x, y) = (g.ids[e.a], g.ids[e.b]);
        (x.min(y), x.max(y))
    };
    let mut edges = g.edges.clone();
    edges.sort_by(|x, y| cmp_scalar(y.weight, x.weight).then(key(x).cmp(&key(y))));
    let mut dsu = Dsu::new(g.node_count());
    edges.into_iter().filter(|e| dsu.union(e.a, e.b)).collect()
}

/// Nodes reachable from `start` over `edges` restricted to `alive`, never
/// crossing edge `skip`.
fn reach<T>(start: usize, edges: &[GraphEdge<T>], alive: &[bool], skip: Option<usize>) -> Vec<bool> {
    let mut seen = vec![false; alive.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(x) = queue.pop_front() {
        for (i, e) in edges.iter().enumerate() {
            if Some(i) == skip || !alive[e.a] || !alive[e.b] {
                continue;
            }
            let y = if e.a == x {
                e.b
            } else if e.b == x {
                e.a
            } else {
                continue;
            };
            if !seen[y] {
                seen[y] = true;
                queue.push_back(y);
            }
        }
    }
    seen
}

/// Greedy recursive tree partitioning. `tree` indexes into `cands`.
///
/// From the current node set, every single-edge cut (and, for a forest,
/// every component split) proposes two groups; the best-scoring group over
/// all proposals replaces the current set if it scores strictly higher.
pub fn greedy_partition<T: Scalar>(
    tree: &[GraphEdge<T>],
    cands: &[CharCandidate<T>],
    word_index: usize,
    anno: &WordAnnotation<T>,
    params: &MaskScoreParams<T>,
) -> CharMask<T> {
    let n = cands.len();
    if n == 0 {
        return CharMask::empty(word_index);
    }
    let boxes: Vec<AABox<T>> = cands.iter().map(|c| c.bbox).collect();
    let eval = |set: &[bool]| -> Option<MaskScore<T>> {
        let sel: Vec<AABox<T>> = (0..n).filter(|&i| set[i]).map(|i| boxes[i]).collect();
        score_boxes(&sel, anno, params).ok()
    };

    let mut alive = vec![true; n];
    let mut current = eval(&alive).expect("non-empty");
    loop {
        let mut proposals: Vec<Vec<bool>> = Vec::new();
        for (i, e) in tree.iter().enumerate() {
            if !alive[e.a] || !alive[e.b] {
                continue;
            }
            let side_a = reach(e.a, tree, &alive, Some(i));
            let side_b = reach(e.b, tree, &alive, Some(i));
            proposals.push((0..n).map(|x| alive[x] && !side_b[x]).collect());
            proposals.push((0..n).map(|x| alive[x] && !side_a[x]).collect());
        }
        // components of the current forest
        let mut assigned = vec![false; n];
        let mut components = Vec::new();
        for s in 0..n {
            if alive[s] && !assigned[s] {
                let comp = reach(s, tree, &alive, None);
                for x in 0..n {
                    assigned[x] |= comp[x];
                }
                components.push(comp);
            }
        }
        if components.len() > 1 {
            for comp in &components {
                proposals.push(comp.clone());
                proposals.push((0..n).map(|x| alive[x] && !comp[x]).collect());
            }
        }

        let mut best: Option<(MaskScore<T>, Vec<bool>)> = None;
        for p in proposals {
            if let Some(sc) = eval(&p) {
                if best.as_ref().is_none_or(|(b, _)| sc.s > b.s) {
                    best = Some((sc, p));
                }
            }
        }
        match best {
            Some((sc, set)) if sc.s > current.s => {
                current = sc;
                alive = set;
            }
            _ => break,
        }
    }
    CharMask {
        word_index,
        selected_ids: (0..n).filter(|&i| alive[i]).map(|i| cands[i].id).collect(),
        s: current.s,
        s1: current.s1,
        s2: current.s2,
    }
}

/// Candidates admitted into a word: center inside the region and score at
/// least the floor.
pub fn word_candidates<T: Scalar>(
    cands: &[CharCandidate<T>],
    anno: &WordAnnotation<T>,
    params: &MaskScoreParams<T>,
) -> Vec<CharCandidate<T>> {
    cands
        .iter()
        .filter(|c| c.score >= params.score_floor && anno.region.contains(c.center()))
        .cloned()
        .collect()
}

/// Mask for a single word.
pub fn word_mask<T: Scalar>(
    cands: &[CharCandidate<T>],
    word_index: usize,
    anno: &WordAnnotation<T>,
    params: &MaskScoreParams<T>,
) -> CharMask<T> {
    let inside = word_candidates(cands, anno, params);
    if inside.is_empty() {
        return CharMask::empty(word_index);
    }
    let graph = build_char_graph(&inside, params.knn_k);
    let tree = maximum_spanning_tree(&graph);
    greedy_partition(&tree, &inside, word_index, anno, params)
}

/// One mask per annotated word, in word order.
pub fn generate_masks<T: Scalar>(scene: &Scene<T>, params: &MaskScoreParams<T>) -> Vec<CharMask<T>> {
    scene
        .words
        .iter()
        .enumerate()
        .map(|(i, w)| word_mask(&scene.candidates, i, w, params))
        .collect()
}
