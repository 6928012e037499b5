//! Text line grouping by greedy min-cost flow over character pairs.
//!
//! Nodes of the flow graph are pairs of neighbouring characters, so the angle
//! between consecutive pairs can be charged as an edge cost. A path
//! `(a,b) -> (b,c) -> (c,d)` spells the character chain `a b c d`.
//!
//! Paths are searched on directed acyclic orientations of the pair graph:
//! characters are ordered by their projection on a reference axis and a pair
//! always points from the lower to the higher character. Eight reference
//! axes, spaced 22.5 degrees apart and anchored on the dominant pair
//! direction, are searched so that lines of any orientation are monotone on
//! at least one of them.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Point, Scored};
use crate::ingest::CharCandidate;
use crate::maskgen::knn_pairs;
use crate::scalar::{cmp_scalar, Scalar};

const AXIS_COUNT: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupingError {
    #[error("pair nodes ({0}, {1}) and ({2}, {3}) do not share exactly one character")]
    NotAdjacent(u64, u64, u64, u64),
}

/// Form of the angle cost between consecutive pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairwiseForm {
    /// `1 - cos(theta)`: zero for aligned pairs.
    #[default]
    OneMinusCos,
    /// `cos(theta)` as literally written in the original formulation.
    Cos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
#[serde(default)]
pub struct GroupingParams<T> {
    pub alpha: T,
    pub beta: T,
    /// Charged once at each end of a path.
    pub entry_exit_cost: T,
    pub score_floor: T,
    pub k: usize,
    pub pairwise: PairwiseForm,
}

impl<T: Scalar> Default for GroupingParams<T> {
    fn default() -> Self {
        GroupingParams {
            alpha: T::one(),
            beta: T::one(),
            entry_exit_cost: T::lit(0.4),
            score_floor: T::lit(0.5),
            k: 4,
            pairwise: PairwiseForm::OneMinusCos,
        }
    }
}

/// Two neighbouring characters, ordered along the dominant direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PairNode<T> {
    pub left_char_id: u64,
    pub right_char_id: u64,
    pub unary_cost: T,
    pub midpoint: Point<T>,
    /// Unit vector from the left to the right character center.
    pub direction: Point<T>,
    #[serde(skip)]
    left: usize,
    #[serde(skip)]
    right: usize,
}

impl<T: Scalar> PairNode<T> {
    fn reversed(&self) -> Self {
        PairNode {
            left_char_id: self.right_char_id,
            right_char_id: self.left_char_id,
            unary_cost: self.unary_cost,
            midpoint: self.midpoint,
            direction: self.direction * -T::one(),
            left: self.right,
            right: self.left,
        }
    }
}

/// One extracted text line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LineGroup<T> {
    /// Character ids in chain order.
    pub char_ids: Vec<u64>,
    #[serde(skip)]
    pub nodes: Vec<PairNode<T>>,
    pub total_cost: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grouping<T> {
    pub groups: Vec<LineGroup<T>>,
    /// Admitted characters that ended up in no group.
    pub singletons: Vec<u64>,
}

/// Mean-normalized unary cost of a pair node.
fn unary<T: Scalar>(a: &CharCandidate<T>, b: &CharCandidate<T>, params: &GroupingParams<T>) -> T {
    let half = T::lit(0.5);
    let mean_diag = (a.bbox.diagonal() + b.bbox.diagonal()) * half;
    let d = a.center().dist(b.center());
    let nd = if mean_diag > T::zero() { d / mean_diag } else { d };
    -params.alpha * (half * (a.score + b.score)) + params.beta * nd
}

/// Principal axis of a set of undirected unit vectors, sign-normalized to
/// point right (or down when vertical).
fn dominant_direction<T: Scalar>(dirs: impl Iterator<Item = Point<T>>) -> Point<T> {
    let (mut xx, mut xy, mut yy) = (T::zero(), T::zero(), T::zero());
    for d in dirs {
        xx = xx + d.x * d.x;
        xy = xy + d.x * d.y;
        yy = yy + d.y * d.y;
    }
    let two = T::lit(2.0);
    let theta = (two * xy).atan2(xx - yy) / two;
    let (s, c) = theta.sin_cos();
    canonical_sign(Point::new(c, s))
}

fn canonical_sign<T: Scalar>(d: Point<T>) -> Point<T> {
    if d.x < T::zero() || (d.x == T::zero() && d.y < T::zero()) {
        d * -T::one()
    } else {
        d
    }
}

fn knn_char_pairs<T: Scalar>(chars: &[CharCandidate<T>], k: usize) -> BTreeSet<(usize, usize)> {
    knn_pairs(chars.len(), k, |i, j| {
        chars[i].center().dist(chars[j].center()) + (chars[i].bbox.diagonal() - chars[j].bbox.diagonal()).abs()
    })
}

/// Pair nodes over the k-NN pairs of `chars` under the combined metric
/// `|c_i - c_j| + |diag_i - diag_j|`.
pub fn build_pair_nodes<T: Scalar>(chars: &[CharCandidate<T>], params: &GroupingParams<T>) -> Vec<PairNode<T>> {
    if chars.len() < 2 {
        return Vec::new();
    }
    let pairs = knn_char_pairs(chars, params.k);
    let axis = dominant_direction(pairs.iter().map(|&(i, j)| (chars[j].center() - chars[i].center()).normalized()));
    pairs
        .into_iter()
        .map(|(i, j)| {
            let (pi, pj) = (chars[i].center().dot(axis), chars[j].center().dot(axis));
            let (l, r) = if pi < pj || (pi == pj && i < j) { (i, j) } else { (j, i) };
            let (cl, cr) = (chars[l].center(), chars[r].center());
            PairNode {
                left_char_id: chars[l].id,
                right_char_id: chars[r].id,
                unary_cost: unary(&chars[l], &chars[r], params),
                midpoint: (cl + cr) * T::lit(0.5),
                direction: (cr - cl).normalized(),
                left: l,
                right: r,
            }
        })
        .collect()
}

fn angle_cost<T: Scalar>(a: Point<T>, b: Point<T>, form: PairwiseForm) -> T {
    let cos = a.dot(b).max(-T::one()).min(T::one());
    match form {
        PairwiseForm::OneMinusCos => T::one() - cos,
        PairwiseForm::Cos => cos,
    }
}

/// Angle cost between two pair nodes that share one character.
pub fn pairwise_cost<T: Scalar>(m: &PairNode<T>, n: &PairNode<T>, form: PairwiseForm) -> Result<T, GroupingError> {
    let a: HashSet<u64> = [m.left_char_id, m.right_char_id].into();
    let b: HashSet<u64> = [n.left_char_id, n.right_char_id].into();
    if a.intersection(&b).count() != 1 || a.len() != 2 || b.len() != 2 {
        return Err(GroupingError::NotAdjacent(m.left_char_id, m.right_char_id, n.left_char_id, n.right_char_id));
    }
    Ok(angle_cost(m.direction, n.direction, form))
}

/// One acyclic orientation of the pair graph.
struct Orientation<T> {
    nodes: Vec<PairNode<T>>,
    /// Node indices in topological order.
    order: Vec<usize>,
    /// `preds[n]`: nodes whose right character is `n`'s left character.
    preds: Vec<Vec<usize>>,
}

impl<T: Scalar> Orientation<T> {
    fn new(base: &[PairNode<T>], chars: &[CharCandidate<T>], axis: Point<T>) -> Self {
        let mut rank: Vec<usize> = (0..chars.len()).collect();
        rank.sort_by(|&i, &j| cmp_scalar(chars[i].center().dot(axis), chars[j].center().dot(axis)).then(i.cmp(&j)));
        let mut pos = vec![0usize; chars.len()];
        for (r, &c) in rank.iter().enumerate() {
            pos[c] = r;
        }
        let nodes: Vec<PairNode<T>> = base
            .iter()
            .map(|n| if pos[n.left] < pos[n.right] { n.clone() } else { n.reversed() })
            .collect();
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by_key(|&i| (pos[nodes[i].left], pos[nodes[i].right]));
        let mut ending_at: Vec<Vec<usize>> = vec![Vec::new(); chars.len()];
        for (i, n) in nodes.iter().enumerate() {
            ending_at[n.right].push(i);
        }
        let preds = nodes.iter().map(|n| ending_at[n.left].clone()).collect();
        Orientation { nodes, order, preds }
    }

    /// Cheapest source-to-sink path over nodes whose characters are unused.
    fn best_path(&self, used: &[bool], params: &GroupingParams<T>) -> Option<(T, Vec<usize>)> {
        let n = self.nodes.len();
        let mut cost: Vec<Option<T>> = vec![None; n];
        let mut back: Vec<Option<usize>> = vec![None; n];
        let mut best: Option<(T, usize)> = None;
        for &i in &self.order {
            let node = &self.nodes[i];
            if used[node.left] || used[node.right] {
                continue;
            }
            let mut into = params.entry_exit_cost;
            let mut from = None;
            for &p in &self.preds[i] {
                if let Some(cp) = cost[p] {
                    let c = cp + angle_cost(self.nodes[p].direction, node.direction, params.pairwise);
                    if c < into {
                        into = c;
                        from = Some(p);
                    }
                }
            }
            let c = into + node.unary_cost;
            cost[i] = Some(c);
            back[i] = from;
            let total = c + params.entry_exit_cost;
            if best.is_none_or(|(b, _)| total < b) {
                best = Some((total, i));
            }
        }
        let (total, mut at) = best?;
        let mut path = vec![at];
        while let Some(p) = back[at] {
            path.push(p);
            at = p;
        }
        path.reverse();
        Some((total, path))
    }
}

/// Extracts text lines from scored characters. Characters below
/// `score_floor` are ignored; the rest either join exactly one group or are
/// reported as singletons.
pub fn extract_groups<T: Scalar>(chars: &[CharCandidate<T>], params: &GroupingParams<T>) -> Grouping<T> {
    let chars: Vec<CharCandidate<T>> = chars.iter().filter(|c| c.score() >= params.score_floor).cloned().collect();
    let base = build_pair_nodes(&chars, params);
    let mut used = vec![false; chars.len()];
    let mut groups = Vec::new();
    if !base.is_empty() {
        let axis = dominant_direction(base.iter().map(|n| n.direction));
        let step = T::PI() / T::from_count(AXIS_COUNT);
        let orientations: Vec<Orientation<T>> = (0..AXIS_COUNT)
            .map(|j| Orientation::new(&base, &chars, axis.rotated(step * T::from_count(j))))
            .collect();
        loop {
            let mut best: Option<(T, u64, usize, Vec<usize>)> = None;
            for (oi, o) in orientations.iter().enumerate() {
                let Some((cost, path)) = o.best_path(&used, params) else { continue };
                let min_id = path
                    .iter()
                    .flat_map(|&i| [o.nodes[i].left_char_id, o.nodes[i].right_char_id])
                    .min()
                    .unwrap_or(u64::MAX);
                let better = match &best {
                    None => true,
                    Some((bc, bid, _, _)) => cost < *bc || (cost == *bc && min_id < *bid),
                };
                if better {
                    best = Some((cost, min_id, oi, path));
                }
            }
            let Some((cost, _, oi, path)) = best else { break };
            if cost >= T::zero() {
                break;
            }
            let o = &orientations[oi];
            let nodes: Vec<PairNode<T>> = path.iter().map(|&i| o.nodes[i].clone()).collect();
            let mut members: Vec<usize> = vec![nodes[0].left];
            members.extend(nodes.iter().map(|n| n.right));
            for &m in &members {
                used[m] = true;
            }
            groups.push(reading_order(LineGroup {
                char_ids: members.iter().map(|&m| chars[m].id).collect(),
                nodes,
                total_cost: cost,
            }, &chars));
        }
    }
    let singletons = chars.iter().zip(&used).filter(|(_, &u)| !u).map(|(c, _)| c.id).collect();
    Grouping { groups, singletons }
}

/// Flips a group so it runs left to right (top to bottom when vertical).
fn reading_order<T: Scalar>(mut g: LineGroup<T>, chars: &[CharCandidate<T>]) -> LineGroup<T> {
    let center = |id: u64| chars.iter().find(|c| c.id == id).map(|c| c.center());
    let (Some(first), Some(last)) = (center(g.char_ids[0]), center(*g.char_ids.last().expect("non-empty"))) else {
        return g;
    };
    let d = last - first;
    if d.x < T::zero() || (d.x == T::zero() && d.y < T::zero()) {
        g.char_ids.reverse();
        g.nodes = g.nodes.iter().rev().map(|n| n.reversed()).collect();
    }
    g
}

/// Total cost of a chain of pair nodes, as charged by the extraction.
pub fn path_cost<T: Scalar>(nodes: &[PairNode<T>], params: &GroupingParams<T>) -> Result<T, GroupingError> {
    let mut total = params.entry_exit_cost * T::lit(2.0);
    for (i, n) in nodes.iter().enumerate() {
        total = total + n.unary_cost;
        if i > 0 {
            total = total + pairwise_cost(&nodes[i - 1], n, params.pairwise)?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::AABox;
    use proptest::prelude::*;

    fn ch(id: u64, x: f64, y: f64, size: f64, score: f64) -> CharCandidate<f64> {
        CharCandidate::new(id, AABox::centered(Point::new(x, y), size, size), score)
    }

    /// Glyph-like box: 0.6 wide per unit of height.
    fn glyph(id: u64, x: f64, y: f64, upright: bool, score: f64) -> CharCandidate<f64> {
        let (w, h) = if upright { (7.2, 12.0) } else { (12.0, 7.2) };
        CharCandidate::new(id, AABox::centered(Point::new(x, y), w, h), score)
    }

    fn node(l: u64, r: u64, dir: (f64, f64)) -> PairNode<f64> {
        PairNode {
            left_char_id: l,
            right_char_id: r,
            unary_cost: 0.0,
            midpoint: Point::new(0.0, 0.0),
            direction: Point::new(dir.0, dir.1).normalized(),
            left: l as usize,
            right: r as usize,
        }
    }

    #[test]
    fn unary_example() {
        // mean diagonal 10, center distance 10
        let s = 10.0 / 2f64.sqrt();
        let chars = [ch(0, 0.0, 0.0, s, 1.0), ch(1, 10.0, 0.0, s, 1.0)];
        let nodes = build_pair_nodes(&chars, &GroupingParams::default());
        assert_eq!(nodes.len(), 1);
        assert!(nodes[0].unary_cost.abs() < 1e-12);
        assert_eq!((nodes[0].left_char_id, nodes[0].right_char_id), (0, 1));
    }

    #[test]
    fn isolated_char_has_no_pairs() {
        assert!(build_pair_nodes(&[ch(0, 0.0, 0.0, 5.0, 1.0)], &GroupingParams::default()).is_empty());
    }

    #[test]
    fn pairwise_examples() {
        let f = PairwiseForm::OneMinusCos;
        let a = node(0, 1, (1.0, 0.0));
        assert_eq!(pairwise_cost(&a, &node(1, 2, (1.0, 0.0)), f).unwrap(), 0.0);
        assert!((pairwise_cost(&a, &node(1, 2, (0.0, 1.0)), f).unwrap() - 1.0).abs() < 1e-15);
        let sixty = (60f64.to_radians().cos(), 60f64.to_radians().sin());
        assert!((pairwise_cost(&a, &node(1, 2, sixty), f).unwrap() - 0.5).abs() < 1e-12);
        assert!((pairwise_cost(&a, &node(1, 2, sixty), PairwiseForm::Cos).unwrap() - 0.5).abs() < 1e-12);
        assert!(pairwise_cost(&a, &node(2, 3, (1.0, 0.0)), f).is_err());
        assert!(pairwise_cost(&a, &node(0, 1, (1.0, 0.0)), f).is_err());
    }

    #[test]
    fn pair_set_matches_brute_force() {
        // two lines of four characters with varying sizes
        let chars: Vec<_> = (0..8)
            .map(|i| {
                let (x, y) = if i < 4 { (i as f64 * 12.0, 0.0) } else { ((i - 4) as f64 * 12.0 + 3.0, 30.0) };
                ch(i, x, y, 8.0 + i as f64, 0.9)
            })
            .collect();
        let p = GroupingParams::default();
        let got: BTreeSet<(u64, u64)> = build_pair_nodes(&chars, &p)
            .iter()
            .map(|n| (n.left_char_id.min(n.right_char_id), n.left_char_id.max(n.right_char_id)))
            .collect();
        let metric = |a: &CharCandidate<f64>, b: &CharCandidate<f64>| {
            let (ca, cb) = (a.center(), b.center());
            ((ca.x - cb.x).powi(2) + (ca.y - cb.y).powi(2)).sqrt() + (a.bbox.diagonal() - b.bbox.diagonal()).abs()
        };
        let mut want = BTreeSet::new();
        for a in &chars {
            let mut d: Vec<(f64, u64)> = chars.iter().filter(|b| b.id != a.id).map(|b| (metric(a, b), b.id)).collect();
            d.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for &(_, b) in &d[..p.k] {
                want.insert((a.id.min(b), a.id.max(b)));
            }
        }
        assert_eq!(got, want);
    }

    #[test]
    fn collinear_line_is_one_group() {
        let chars: Vec<_> = [3u64, 0, 4, 1, 2].iter().map(|&i| glyph(i, i as f64 * 9.0, 5.0, true, 0.95)).collect();
        let g = extract_groups(&chars, &GroupingParams::default());
        assert_eq!(g.groups.len(), 1);
        assert_eq!(g.groups[0].char_ids, vec![0, 1, 2, 3, 4]);
        assert!(g.groups[0].total_cost < 0.0);
        assert!(g.singletons.is_empty());
        let recomputed = path_cost(&g.groups[0].nodes, &GroupingParams::default()).unwrap();
        assert!((recomputed - g.groups[0].total_cost).abs() < 1e-12);
    }

    #[test]
    fn vertical_line_reads_top_down() {
        let chars: Vec<_> = (0..5).map(|i| glyph(i, 7.0, 100.0 - i as f64 * 9.0, false, 0.95)).collect();
        let g = extract_groups(&chars, &GroupingParams::default());
        assert_eq!(g.groups.len(), 1);
        assert_eq!(g.groups[0].char_ids, vec![4, 3, 2, 1, 0]);
    }

    #[test]
    fn low_scores_give_no_groups() {
        let chars: Vec<_> = (0..5).map(|i| ch(i, i as f64 * 10.0, 5.0, 9.0, 0.3)).collect();
        let g = extract_groups(&chars, &GroupingParams::default());
        assert!(g.groups.is_empty());
        assert!(g.singletons.is_empty());
    }

    #[test]
    fn crossing_lines_do_not_mix() {
        let mut chars: Vec<_> = (0..8).map(|i| glyph(i, i as f64 * 9.0, 0.0, true, 0.9)).collect();
        for j in 0..8 {
            let y = (j as f64 - 3.5) * 9.0;
            chars.push(glyph(100 + j, 31.5, y, false, 0.9));
        }
        let g = extract_groups(&chars, &GroupingParams::default());
        assert_eq!(g.groups.len(), 2);
        for grp in &g.groups {
            let horizontal = grp.char_ids.iter().all(|&i| i < 100);
            let vertical = grp.char_ids.iter().all(|&i| i >= 100);
            assert!(horizontal || vertical, "{:?}", grp.char_ids);
        }
    }

    proptest! {
        #[test]
        fn groups_are_disjoint_and_negative(
            pts in prop::collection::vec((0.0..120.0f64, 0.0..120.0f64, 6.0..12.0f64, 0.0..1.0f64), 0..30),
        ) {
            let chars: Vec<_> = pts.iter().enumerate().map(|(i, &(x, y, s, p))| ch(i as u64, x, y, s, p)).collect();
            let params = GroupingParams::default();
            let g = extract_groups(&chars, &params);
            let mut seen = HashSet::new();
            for grp in &g.groups {
                prop_assert!(grp.total_cost < 0.0);
                prop_assert!(grp.char_ids.len() >= 2);
                for id in &grp.char_ids {
                    prop_assert!(seen.insert(*id));
                }
                let recomputed = path_cost(&grp.nodes, &params).unwrap();
                prop_assert!((recomputed - grp.total_cost).abs() < 1e-9);
            }
            for id in &g.singletons {
                prop_assert!(seen.insert(*id));
            }
            let admitted = chars.iter().filter(|c| c.score >= params.score_floor).count();
            prop_assert_eq!(seen.len(), admitted);
        }

        #[test]
        fn translation_invariant(dx in -500.0..500.0f64, dy in -500.0..500.0f64, seed in 0u64..1000) {
            let chars: Vec<_> = (0..12u64).map(|i| {
                let line = i / 6;
                let t = (i % 6) as f64;
                let jitter = ((seed * 31 + i * 17) % 7) as f64 * 0.3;
                ch(i, t * 11.0 + jitter, line as f64 * 40.0 + jitter, 9.0, 0.7 + 0.02 * (i % 5) as f64)
            }).collect();
            let moved: Vec<_> = chars.iter().map(|c| {
                CharCandidate::new(c.id, c.bbox.translated(Point::new(dx, dy)), c.score)
            }).collect();
            let p = GroupingParams::default();
            let a: Vec<_> = extract_groups(&chars, &p).groups.into_iter().map(|g| g.char_ids).collect();
            let b: Vec<_> = extract_groups(&moved, &p).groups.into_iter().map(|g| g.char_ids).collect();
            prop_assert_eq!(a, b);
        }
    }
}
