//! Marked metric graphs: points of unprojectivized Outer space.
//!
//! A [`MarkedGraph`] carries a word label on every oriented edge; the
//! label of a loop is the product of its edge labels, and the marking is
//! valid when this assignment identifies `pi_1` of the graph with `F_n`.

use std::collections::VecDeque;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Q};
use crate::stallings::Folded;
use crate::word::Word;

/// An edge traversed forwards (`from -> to`) or backwards.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dir {
    pub edge: usize,
    pub fwd: bool,
}

impl Dir {
    pub fn new(edge: usize, fwd: bool) -> Dir {
        Dir { edge, fwd }
    }

    pub fn rev(self) -> Dir {
        Dir { edge: self.edge, fwd: !self.fwd }
    }
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.fwd {
            write!(f, "e{}", self.edge)
        } else {
            write!(f, "E{}", self.edge)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    #[serde(with = "crate::rational::serde_q")]
    pub length: Q,
    pub label: Word,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct MarkedGraph {
    rank: usize,
    vertices: usize,
    edges: Vec<Edge>,
    basepoint: usize,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rank: Option<usize>,
    vertices: Vec<usize>,
    edges: Vec<Edge>,
    basepoint: usize,
}

impl From<MarkedGraph> for GraphJson {
    fn from(g: MarkedGraph) -> Self {
        GraphJson {
            rank: Some(g.rank),
            vertices: (0..g.vertices).collect(),
            edges: g.edges,
            basepoint: g.basepoint,
        }
    }
}

impl TryFrom<GraphJson> for MarkedGraph {
    type Error = Error;
    fn try_from(j: GraphJson) -> Result<Self> {
        if j.vertices.iter().enumerate().any(|(i, v)| i != *v) {
            return Err(Error::Parse("vertex ids must be 0..V in order".into()));
        }
        if j.edges.iter().enumerate().any(|(i, e)| i != e.id) {
            return Err(Error::Parse("edge ids must be 0..E in order".into()));
        }
        let edges = j.edges.into_iter().map(|e| (e.from, e.to, e.length, e.label)).collect();
        let mut g = MarkedGraph::from_parts(j.vertices.len(), edges, j.basepoint)?;
        if let Some(r) = j.rank {
            g.rank = r;
        }
        Ok(g)
    }
}

/// Closed or open path of whole edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgePath {
    pub start: usize,
    pub dirs: Vec<Dir>,
}

pub fn tighten(dirs: impl IntoIterator<Item = Dir>) -> Vec<Dir> {
    let mut out: Vec<Dir> = Vec::new();
    for d in dirs {
        if out.last() == Some(&d.rev()) {
            out.pop();
        } else {
            out.push(d);
        }
    }
    out
}

/// Tightens a closed path, also cancelling across the basepoint.
pub fn tighten_cyclic(dirs: impl IntoIterator<Item = Dir>) -> Vec<Dir> {
    let mut v = tighten(dirs);
    let mut lo = 0;
    let mut hi = v.len();
    while hi - lo >= 2 && v[lo] == v[hi - 1].rev() {
        lo += 1;
        hi -= 1;
    }
    v.truncate(hi);
    v.drain(..lo);
    v
}

pub fn reverse_dirs(p: &[Dir]) -> Vec<Dir> {
    p.iter().rev().map(|d| d.rev()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    RankTooSmall(usize),
    Disconnected,
    NotMinimal(usize),
    BettiMismatch { betti: i64, rank: usize },
    NonPositiveLength(usize),
    MarkingNotIsomorphism,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RankTooSmall(r) => write!(f, "rank {r} is below 2"),
            Violation::Disconnected => write!(f, "graph is disconnected"),
            Violation::NotMinimal(v) => write!(f, "not minimal: vertex {v} has valence below 2"),
            Violation::BettiMismatch { betti, rank } => {
                write!(f, "Betti number {betti} differs from rank {rank}")
            }
            Violation::NonPositiveLength(e) => write!(f, "edge {e} has non-positive length"),
            Violation::MarkingNotIsomorphism => write!(f, "marking not pi_1-isomorphism"),
        }
    }
}

/// Vertex and edge correspondence of a forest collapse.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollapseMap {
    pub vertex_map: Vec<usize>,
    /// `None` for collapsed edges; surviving edges keep their orientation.
    pub edge_map: Vec<Option<usize>>,
}

impl CollapseMap {
    pub fn identity(g: &MarkedGraph) -> CollapseMap {
        CollapseMap {
            vertex_map: (0..g.vertex_count()).collect(),
            edge_map: (0..g.edge_count()).map(Some).collect(),
        }
    }

    pub fn map_dirs(&self, dirs: &[Dir]) -> Vec<Dir> {
        tighten(
            dirs.iter()
                .filter_map(|d| self.edge_map[d.edge].map(|e| Dir::new(e, d.fwd))),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShortBasis {
    pub vertex: usize,
    pub basis: Vec<Word>,
    /// Tight based loops at `vertex`, one per basis element.
    pub loops: Vec<Vec<Dir>>,
    pub lengths: Vec<Q>,
    pub bound: Q,
}

impl MarkedGraph {
    /// Builds a graph from `(from, to, length, label)` tuples; the rank is
    /// taken to be the first Betti number. Only structural checks are made;
    /// use [`MarkedGraph::validate`] for the full invariants.
    pub fn from_parts(vertices: usize, edges: Vec<(usize, usize, Q, Word)>, basepoint: usize) -> Result<Self> {
        if basepoint >= vertices {
            return Err(Error::InvalidGraph(format!("basepoint {basepoint} out of range")));
        }
        let mut out = Vec::with_capacity(edges.len());
        for (id, (from, to, length, label)) in edges.into_iter().enumerate() {
            if from >= vertices || to >= vertices {
                return Err(Error::InvalidGraph(format!("edge {id} has an endpoint out of range")));
            }
            if !length.is_positive() {
                return Err(Error::NonPositiveLength);
            }
            out.push(Edge { id, from, to, length, label });
        }
        let betti = out.len() as i64 - vertices as i64 + 1;
        Ok(MarkedGraph { rank: betti.max(0) as usize, vertices, edges: out, basepoint })
    }

    pub fn rose(rank: usize, petal_lengths: &[Q]) -> Result<Self> {
        if rank < 2 {
            return Err(Error::RankTooSmall(rank));
        }
        if petal_lengths.len() != rank {
            return Err(Error::OutOfRange(format!(
                "{} petal lengths for rank {rank}",
                petal_lengths.len()
            )));
        }
        let edges = petal_lengths
            .iter()
            .enumerate()
            .map(|(i, l)| (0, 0, l.clone(), Word::letter(i as i32 + 1)))
            .collect();
        MarkedGraph::from_parts(1, edges, 0)
    }

    /// Rose whose petals are labelled by the given words (a marked rose for that basis).
    pub fn rose_with_labels(labels: &[Word], lengths: &[Q]) -> Result<Self> {
        let edges = labels
            .iter()
            .zip(lengths)
            .map(|(w, l)| (0, 0, l.clone(), w.clone()))
            .collect();
        MarkedGraph::from_parts(1, edges, 0)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn basepoint(&self) -> usize {
        self.basepoint
    }

    pub fn length(&self, e: usize) -> &Q {
        &self.edges[e].length
    }

    pub fn tail(&self, d: Dir) -> usize {
        let e = &self.edges[d.edge];
        if d.fwd {
            e.from
        } else {
            e.to
        }
    }

    pub fn head(&self, d: Dir) -> usize {
        self.tail(d.rev())
    }

    pub fn dir_label(&self, d: Dir) -> Word {
        let l = &self.edges[d.edge].label;
        if d.fwd {
            l.clone()
        } else {
            l.inverse()
        }
    }

    pub fn path_label(&self, dirs: &[Dir]) -> Word {
        Word::new(dirs.iter().flat_map(|d| self.dir_label(*d).letters().to_vec()))
    }

    pub fn path_length(&self, dirs: &[Dir]) -> Q {
        dirs.iter().map(|d| self.edges[d.edge].length.clone()).sum()
    }

    /// Directions leaving `v`, ordered by edge id with the forward end first.
    pub fn directions_at(&self, v: usize) -> Vec<Dir> {
        let mut out = Vec::new();
        for e in &self.edges {
            if e.from == v {
                out.push(Dir::new(e.id, true));
            }
            if e.to == v {
                out.push(Dir::new(e.id, false));
            }
        }
        out
    }

    pub fn valence(&self, v: usize) -> usize {
        self.edges.iter().map(|e| (e.from == v) as usize + (e.to == v) as usize).sum()
    }

    pub fn volume(&self) -> Q {
        self.edges.iter().map(|e| e.length.clone()).sum()
    }

    pub fn scaled(&self, factor: &Q) -> MarkedGraph {
        let mut g = self.clone();
        for e in &mut g.edges {
            e.length = &e.length * factor;
        }
        g
    }

    pub fn normalize(&self) -> MarkedGraph {
        self.scaled(&(Q::one() / self.volume()))
    }

    pub fn with_lengths(&self, lengths: &[Q]) -> Result<MarkedGraph> {
        if lengths.len() != self.edges.len() {
            return Err(Error::OutOfRange("length vector size".into()));
        }
        if lengths.iter().any(|l| !l.is_positive()) {
            return Err(Error::NonPositiveLength);
        }
        let mut g = self.clone();
        for (e, l) in g.edges.iter_mut().zip(lengths) {
            e.length = l.clone();
        }
        Ok(g)
    }

    pub fn with_labels(&self, labels: &[Word]) -> MarkedGraph {
        let mut g = self.clone();
        for (e, l) in g.edges.iter_mut().zip(labels) {
            e.label = l.clone();
        }
        g
    }

    /// Same graph with the rank overridden (the rank is otherwise the Betti number).
    pub fn with_rank(mut self, rank: usize) -> MarkedGraph {
        self.rank = rank;
        self
    }

    pub fn with_basepoint(&self, v: usize) -> MarkedGraph {
        let mut g = self.clone();
        g.basepoint = v;
        g
    }

    pub fn is_connected(&self) -> bool {
        self.component_of(0, &[]).iter().all(|b| *b)
    }

    /// Vertices reachable from `v` without using the excluded edges.
    pub fn component_of(&self, v: usize, excluded: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.vertices];
        if self.vertices == 0 {
            return seen;
        }
        seen[v] = true;
        let mut q = VecDeque::from([v]);
        while let Some(u) = q.pop_front() {
            for d in self.directions_at(u) {
                if excluded.contains(&d.edge) {
                    continue;
                }
                let w = self.head(d);
                if !seen[w] {
                    seen[w] = true;
                    q.push_back(w);
                }
            }
        }
        seen
    }

    pub(crate) fn folded(&self) -> Folded {
        let sup: Vec<_> = self.edges.iter().map(|e| (e.from, e.to, e.label.clone())).collect();
        Folded::new(self.vertices, &sup)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.rank < 2 {
            out.push(Violation::RankTooSmall(self.rank));
        }
        for e in &self.edges {
            if !e.length.is_positive() {
                out.push(Violation::NonPositiveLength(e.id));
            }
        }
        if !self.is_connected() {
            out.push(Violation::Disconnected);
        }
        for v in 0..self.vertices {
            if self.valence(v) < 2 {
                out.push(Violation::NotMinimal(v));
            }
        }
        let betti = self.edges.len() as i64 - self.vertices as i64 + 1;
        if betti != self.rank as i64 {
            out.push(Violation::BettiMismatch { betti, rank: self.rank });
        }
        if !self.folded().image_is_everything(self.basepoint, self.rank) {
            out.push(Violation::MarkingNotIsomorphism);
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Tight loop at the basepoint whose label product is `w`.
    pub fn realize(&self, w: &Word) -> Option<Vec<Dir>> {
        self.realize_with(&self.folded(), w)
    }

    pub(crate) fn realize_with(&self, folded: &Folded, w: &Word) -> Option<Vec<Dir>> {
        folded
            .realize(self.basepoint, self.basepoint, w)
            .map(|p| tighten(p.into_iter().map(|(e, f)| Dir::new(e, f))))
    }

    /// Cyclically tight loop in the free homotopy class of `w`.
    pub fn loop_realization(&self, w: &Word) -> Result<EdgePath> {
        if w.is_trivial() {
            return Err(Error::TrivialWord);
        }
        let based = self
            .realize(w)
            .ok_or_else(|| Error::InvalidGraph("word not realizable; marking invalid".into()))?;
        let dirs = tighten_cyclic(based);
        let start = dirs.first().map(|d| self.tail(*d)).unwrap_or(self.basepoint);
        Ok(EdgePath { start, dirs })
    }

    pub fn translation_length(&self, w: &Word) -> Result<Q> {
        Ok(self.path_length(&self.loop_realization(w)?.dirs))
    }

    /// Translation lengths of many words, sharing one folding.
    pub fn translation_lengths(&self, words: &[Word]) -> Result<Vec<Q>> {
        let f = self.folded();
        words
            .iter()
            .map(|w| {
                if w.is_trivial() {
                    return Err(Error::TrivialWord);
                }
                let p = self
                    .realize_with(&f, w)
                    .ok_or_else(|| Error::InvalidGraph("word not realizable".into()))?;
                Ok(self.path_length(&tighten_cyclic(p)))
            })
            .collect()
    }

    /// Breadth-first spanning tree from `root`, scanning directions in
    /// edge-id order. Returns, per vertex, the direction entering it.
    pub fn spanning_tree(&self, root: usize) -> Vec<Option<Dir>> {
        let mut parent = vec![None; self.vertices];
        let mut seen = vec![false; self.vertices];
        seen[root] = true;
        let mut q = VecDeque::from([root]);
        while let Some(u) = q.pop_front() {
            for d in self.directions_at(u) {
                let w = self.head(d);
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(d);
                    q.push_back(w);
                }
            }
        }
        parent
    }

    /// Path from the root of `tree` to `v`.
    pub fn tree_path(&self, tree: &[Option<Dir>], mut v: usize) -> Vec<Dir> {
        let mut out = Vec::new();
        while let Some(d) = tree[v] {
            out.push(d);
            v = self.tail(d);
        }
        out.reverse();
        out
    }

    pub fn tree_edges(tree: &[Option<Dir>]) -> Vec<usize> {
        tree.iter().flatten().map(|d| d.edge).collect()
    }

    /// Fundamental loops of `tree` (rooted at its root), one per non-tree edge in id order.
    pub fn fundamental_loops(&self, tree: &[Option<Dir>]) -> Vec<(usize, Vec<Dir>)> {
        let in_tree = Self::tree_edges(tree);
        self.edges
            .iter()
            .filter(|e| !in_tree.contains(&e.id))
            .map(|e| {
                let mut p = self.tree_path(tree, e.from);
                p.push(Dir::new(e.id, true));
                p.extend(reverse_dirs(&self.tree_path(tree, e.to)));
                (e.id, tighten(p))
            })
            .collect()
    }

    /// Basis read off a lexicographic BFS tree from vertex 0: every loop
    /// crosses each edge at most twice, so on a volume-one graph each
    /// displacement is at most 2.
    pub fn short_basis(&self) -> ShortBasis {
        let root = 0;
        let tree = self.spanning_tree(root);
        let loops: Vec<Vec<Dir>> = self.fundamental_loops(&tree).into_iter().map(|(_, l)| l).collect();
        let basis = loops.iter().map(|l| self.path_label(l)).collect();
        let lengths: Vec<Q> = loops.iter().map(|l| self.path_length(l)).collect();
        let bound = lengths.iter().max().cloned().unwrap_or_else(Q::zero);
        ShortBasis { vertex: root, basis, loops, lengths, bound }
    }

    /// Collapses every edge of `forest` to a point.
    pub fn collapse_forest(&self, forest: &[usize]) -> Result<(MarkedGraph, CollapseMap)> {
        let mut forest: Vec<usize> = forest.to_vec();
        forest.sort_unstable();
        forest.dedup();
        let mut uf: Vec<usize> = (0..self.vertices).collect();
        fn find(uf: &mut [usize], mut v: usize) -> usize {
            while uf[v] != v {
                uf[v] = uf[uf[v]];
                v = uf[v];
            }
            v
        }
        for &e in &forest {
            let (a, b) = (find(&mut uf, self.edges[e].from), find(&mut uf, self.edges[e].to));
            if a == b {
                return Err(Error::ForestHasCycle);
            }
            uf[a.max(b)] = a.min(b);
        }
        // Each class is rooted at its least vertex; the class order follows the roots.
        let roots: Vec<usize> = (0..self.vertices).map(|v| find(&mut uf, v)).collect();
        let mut class_ids = vec![usize::MAX; self.vertices];
        let mut next = 0;
        for v in 0..self.vertices {
            if roots[v] == v {
                class_ids[v] = next;
                next += 1;
            }
        }
        let vertex_map: Vec<usize> = roots.iter().map(|r| class_ids[*r]).collect();
        // Label correction c_v: product of forest labels from the class root to v.
        let mut corr: Vec<Option<Word>> = vec![None; self.vertices];
        for v in 0..self.vertices {
            if roots[v] != v {
                continue;
            }
            corr[v] = Some(Word::identity());
            let mut q = VecDeque::from([v]);
            while let Some(u) = q.pop_front() {
                for d in self.directions_at(u) {
                    if !forest.contains(&d.edge) {
                        continue;
                    }
                    let w = self.head(d);
                    if corr[w].is_none() {
                        corr[w] = Some(corr[u].as_ref().unwrap() * &self.dir_label(d));
                        q.push_back(w);
                    }
                }
            }
        }
        let mut edges = Vec::new();
        let mut edge_map = vec![None; self.edges.len()];
        for e in &self.edges {
            if forest.contains(&e.id) {
                continue;
            }
            edge_map[e.id] = Some(edges.len());
            let cf = corr[e.from].as_ref().unwrap();
            let ct = corr[e.to].as_ref().unwrap();
            let label = &(cf * &e.label) * &ct.inverse();
            edges.push((vertex_map[e.from], vertex_map[e.to], e.length.clone(), label));
        }
        let mut g = MarkedGraph::from_parts(next, edges, vertex_map[self.basepoint])?;
        g.rank = self.rank;
        Ok((g, CollapseMap { vertex_map, edge_map }))
    }

    /// Splits edge `e` at distance `t` from its origin. Edge `e` keeps the
    /// first piece with a trivial label; the second piece becomes a new
    /// last edge carrying the old label.
    pub fn subdivide(&self, e: usize, t: &Q) -> Result<MarkedGraph> {
        let len = &self.edges[e].length;
        if !t.is_positive() || t >= len {
            return Err(Error::OutOfRange(format!(
                "subdivision point {} outside (0, {})",
                rational::format_q(t),
                rational::format_q(len)
            )));
        }
        let mut g = self.clone();
        let v = g.vertices;
        g.vertices += 1;
        let old = g.edges[e].clone();
        g.edges[e] = Edge { id: e, from: old.from, to: v, length: t.clone(), label: Word::identity() };
        let id = g.edges.len();
        g.edges.push(Edge { id, from: v, to: old.to, length: len - t, label: old.label });
        Ok(g)
    }

    /// Graph with the given edge set deleted and vertices kept (not re-validated).
    pub fn edge_lengths(&self) -> Vec<Q> {
        self.edges.iter().map(|e| e.length.clone()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    pub fn from_json(s: &str) -> Result<MarkedGraph> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph G {\n");
        for v in 0..self.vertices {
            let shape = if v == self.basepoint { "doublecircle" } else { "circle" };
            s.push_str(&format!("  v{v} [shape={shape}];\n"));
        }
        for e in &self.edges {
            s.push_str(&format!(
                "  v{} -> v{} [label=\"e{} {} | {}\"];\n",
                e.from,
                e.to,
                e.id,
                rational::format_q(&e.length),
                e.label
            ));
        }
        s.push_str("}\n");
        s
    }
}

/// Theta graph on two vertices with three edges `x, y, z` from vertex 0
/// to vertex 1, marked so that `a1 = x z^-1` and `a2 = y z^-1`.
pub fn theta(lengths: [Q; 3]) -> MarkedGraph {
    let [x, y, z] = lengths;
    MarkedGraph::from_parts(
        2,
        vec![
            (0, 1, x, Word::letter(1)),
            (0, 1, y, Word::letter(2)),
            (0, 1, z, Word::identity()),
        ],
        0,
    )
    .expect("theta graph")
}

/// Two petals joined by an arc: loop `a1` at vertex 0, loop `a2` at vertex 1.
pub fn barbell(loop_a: Q, arc: Q, loop_b: Q) -> MarkedGraph {
    MarkedGraph::from_parts(
        2,
        vec![
            (0, 0, loop_a, Word::letter(1)),
            (0, 1, arc, Word::identity()),
            (1, 1, loop_b, Word::letter(2)),
        ],
        0,
    )
    .expect("barbell graph")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn third() -> [Q; 3] {
        [q(1, 3), q(1, 3), q(1, 3)]
    }

    #[test]
    fn roses() {
        let r3 = MarkedGraph::rose(3, &third()).unwrap();
        assert_eq!(r3.volume(), q(1, 1));
        assert!(r3.is_valid());
        let r = MarkedGraph::rose(2, &[q(1, 2), q(1, 1)]).unwrap();
        assert_eq!(r.volume(), q(3, 2));
        assert_eq!(r.rank(), 2);
        assert_eq!(MarkedGraph::rose(1, &[q(1, 1)]), Err(Error::RankTooSmall(1)));
        assert_eq!(MarkedGraph::rose(2, &[q(1, 2), q(0, 1)]), Err(Error::NonPositiveLength));
    }

    #[test]
    fn validation_reports() {
        let bad = MarkedGraph::rose_with_labels(&[w("a"), w("a")], &[q(1, 2), q(1, 2)]).unwrap();
        assert_eq!(bad.validate(), vec![Violation::MarkingNotIsomorphism]);
        assert_eq!(Violation::MarkingNotIsomorphism.to_string(), "marking not pi_1-isomorphism");
        // Rose R2 with a hair.
        let hair = MarkedGraph::from_parts(
            2,
            vec![(0, 0, q(1, 2), w("a")), (0, 0, q(1, 2), w("b")), (0, 1, q(1, 4), Word::identity())],
            0,
        )
        .unwrap();
        let v = hair.validate();
        assert!(v.contains(&Violation::NotMinimal(1)), "{v:?}");
        assert!(v[0].to_string().starts_with("not minimal"));
    }

    #[test]
    fn normalize_volume() {
        let r = MarkedGraph::rose(2, &[q(1, 2), q(1, 1)]).unwrap();
        let n = r.normalize();
        assert_eq!(n.edge_lengths(), vec![q(1, 3), q(2, 3)]);
        assert_eq!(n.normalize(), n);
        assert_eq!(theta(third()).volume(), q(1, 1));
        assert!(theta(third()).is_valid());
    }

    #[test]
    fn collapse_theta_edge_gives_rose() {
        let t = theta(third());
        let (g, map) = t.collapse_forest(&[2]).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (1, 2));
        assert!(g.is_valid());
        assert_eq!(g.volume(), q(2, 3));
        assert_eq!(map.edge_map, vec![Some(0), Some(1), None]);
        // Petals now carry the labels x z^-1 and y z^-1 of the loops.
        assert_eq!(g.edge(0).label, w("a"));
        assert_eq!(g.edge(1).label, w("b"));
        let (same, id) = t.collapse_forest(&[]).unwrap();
        assert_eq!(same, t);
        assert_eq!(id, CollapseMap::identity(&t));
        assert_eq!(t.collapse_forest(&[0, 2, 1]).unwrap_err(), Error::ForestHasCycle);
    }

    #[test]
    fn loop_realizations() {
        let r2 = MarkedGraph::rose(2, &[q(1, 2), q(1, 2)]).unwrap();
        assert_eq!(r2.translation_length(&w("a")).unwrap(), q(1, 2));
        assert_eq!(r2.loop_realization(&w("abA")).unwrap().dirs, vec![Dir::new(1, true)]);
        assert_eq!(r2.translation_length(&w("ab")).unwrap(), q(1, 1));
        assert_eq!(r2.translation_length(&w("ababab")).unwrap(), q(3, 1));
        assert_eq!(r2.translation_length(&Word::identity()), Err(Error::TrivialWord));
        let t = theta(third());
        let l = t.loop_realization(&w("aB")).unwrap();
        assert_eq!(t.path_length(&l.dirs), q(2, 3));
        let mut edges: Vec<usize> = l.dirs.iter().map(|d| d.edge).collect();
        edges.sort();
        assert_eq!(edges, vec![0, 1]);
    }

    #[test]
    fn short_bases() {
        let r3 = MarkedGraph::rose(3, &third()).unwrap();
        let sb = r3.short_basis();
        assert_eq!(sb.basis, vec![w("a"), w("b"), w("c")]);
        assert_eq!(sb.bound, q(1, 3));
        let t = theta(third());
        let sb = t.short_basis();
        assert!(crate::stallings::is_basis(&sb.basis, 2));
        assert!(sb.lengths.iter().all(|l| *l <= q(2, 3)));
    }

    #[test]
    fn subdivision() {
        let r2 = MarkedGraph::rose(2, &[q(1, 2), q(1, 2)]).unwrap();
        let s = r2.subdivide(0, &q(1, 4)).unwrap();
        assert_eq!((s.vertex_count(), s.edge_count()), (2, 3));
        assert_eq!(s.volume(), r2.volume());
        assert!(s.is_valid());
        assert!(r2.subdivide(0, &q(1, 2)).is_err());
        for word in ["a", "b", "ab", "aB", "aabAB"] {
            assert_eq!(s.translation_length(&w(word)), r2.translation_length(&w(word)));
        }
    }

    #[test]
    fn json_roundtrip() {
        let t = theta(third());
        let s = t.to_json();
        assert_eq!(MarkedGraph::from_json(&s).unwrap(), t);
        assert!(s.contains("\"length\":\"1/3\""));
        assert!(t.to_dot().starts_with("digraph"));
    }
}
