//! Marking-compatible maps between marked graphs: gates, train tracks,
//! candidate loops and the Lipschitz constant.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dir, MarkedGraph};
use crate::path::{Path, Point, Seg};
use crate::rational::{self, Q};
use crate::stallings;
use crate::word::Word;

/// Map linear on each edge: the edge is stretched uniformly over its image path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphMorphism {
    pub source: MarkedGraph,
    pub target: MarkedGraph,
    pub vertex_image: Vec<Point>,
    /// Image of each edge traversed forwards, tight, from the image of `from` to that of `to`.
    pub edge_image: Vec<Path>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateStructure {
    /// `gates[v]` partitions the directions at `v`; gates ordered by least member.
    pub gates: Vec<Vec<Vec<Dir>>>,
}

impl GateStructure {
    pub fn gate_count(&self, v: usize) -> usize {
        self.gates[v].len()
    }

    pub fn same_gate(&self, v: usize, a: Dir, b: Dir) -> bool {
        self.gates[v].iter().any(|g| g.contains(&a) && g.contains(&b))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainTrackViolation {
    Stretch {
        edge: usize,
        #[serde(with = "crate::rational::serde_q")]
        stretch: Q,
    },
    CollapsedEdge(usize),
    OneGate(usize),
}

impl GraphMorphism {
    pub fn new(source: MarkedGraph, target: MarkedGraph, vertex_image: Vec<Point>, edge_image: Vec<Path>) -> Result<Self> {
        if vertex_image.len() != source.vertex_count() || edge_image.len() != source.edge_count() {
            return Err(Error::InvalidGraph("morphism size mismatch".into()));
        }
        let vertex_image: Vec<Point> = vertex_image.iter().map(|p| p.normalized(&target)).collect();
        for (e, img) in source.edges().iter().zip(&edge_image) {
            if img.start != vertex_image[e.from] || img.end(&target) != vertex_image[e.to] {
                return Err(Error::InvalidGraph(format!("image of edge {} has wrong ends", e.id)));
            }
        }
        Ok(GraphMorphism { source, target, vertex_image, edge_image })
    }

    pub fn identity(g: &MarkedGraph) -> GraphMorphism {
        let edge_image = (0..g.edge_count())
            .map(|e| Path::from_dirs(g, g.edge(e).from, &[Dir::new(e, true)]))
            .collect();
        GraphMorphism {
            source: g.clone(),
            target: g.clone(),
            vertex_image: (0..g.vertex_count()).map(Point::Vertex).collect(),
            edge_image,
        }
    }

    /// Sends every vertex to the target basepoint and every edge to the
    /// tight loop reading its label.
    pub fn from_markings(s: &MarkedGraph, t: &MarkedGraph) -> Result<GraphMorphism> {
        if s.rank() != t.rank() {
            return Err(Error::RankMismatch(s.rank(), t.rank()));
        }
        let folded = t.folded();
        let base = t.basepoint();
        let mut edge_image = Vec::with_capacity(s.edge_count());
        for e in s.edges() {
            let dirs = t
                .realize_with(&folded, &e.label)
                .ok_or_else(|| Error::InvalidGraph("target marking is not onto".into()))?;
            edge_image.push(Path::from_dirs(t, base, &dirs));
        }
        Ok(GraphMorphism {
            source: s.clone(),
            target: t.clone(),
            vertex_image: vec![Point::Vertex(base); s.vertex_count()],
            edge_image,
        })
    }

    pub fn stretch(&self, e: usize) -> Q {
        self.edge_image[e].length() / self.source.length(e)
    }

    pub fn stretches(&self) -> Vec<Q> {
        (0..self.source.edge_count()).map(|e| self.stretch(e)).collect()
    }

    pub fn max_stretch(&self) -> Q {
        self.stretches().into_iter().max().unwrap_or_else(Q::zero)
    }

    pub fn tension_edges(&self) -> Vec<usize> {
        let m = self.max_stretch();
        (0..self.source.edge_count()).filter(|e| self.stretch(*e) == m).collect()
    }

    pub fn dir_image(&self, d: Dir) -> Path {
        let p = &self.edge_image[d.edge];
        if d.fwd {
            p.clone()
        } else {
            p.reverse(&self.target)
        }
    }

    /// Image of the point at position `pos` along edge `e`.
    pub fn edge_point_image(&self, e: usize, pos: &Q) -> Point {
        self.edge_image[e].point_at(&self.target, &(pos * self.stretch(e)))
    }

    pub fn point_image(&self, p: &Point) -> Point {
        match p {
            Point::Vertex(v) => self.vertex_image[*v].clone(),
            Point::Edge { edge, offset } => self.edge_point_image(*edge, offset),
        }
    }

    /// Image of an edge piece: the matching piece of the edge image.
    pub fn seg_image(&self, s: &Seg) -> Path {
        let k = self.stretch(s.edge);
        self.edge_image[s.edge].sub(&self.target, &(&s.from * &k), &(&s.to * &k))
    }

    pub fn path_image(&self, p: &Path) -> Path {
        let start = self.point_image(&p.start);
        let mut segs = Vec::new();
        for s in &p.segs {
            segs.extend(self.seg_image(s).segs);
        }
        Path::from_segs(&self.target, start, segs)
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &GraphMorphism) -> GraphMorphism {
        GraphMorphism {
            source: self.source.clone(),
            target: other.target.clone(),
            vertex_image: self.vertex_image.iter().map(|p| other.point_image(p)).collect(),
            edge_image: self.edge_image.iter().map(|p| other.path_image(p)).collect(),
        }
    }

    /// First direction of the image of `d`.
    pub fn germ(&self, d: Dir) -> Result<Dir> {
        self.dir_image(d).first_dir().ok_or(Error::CollapsedEdge(d.edge))
    }

    pub fn derivative(&self) -> Result<GateStructure> {
        let mut gates = Vec::with_capacity(self.source.vertex_count());
        for v in 0..self.source.vertex_count() {
            let mut by_germ: BTreeMap<Dir, Vec<Dir>> = BTreeMap::new();
            for d in self.source.directions_at(v) {
                by_germ.entry(self.germ(d)?).or_default().push(d);
            }
            let mut gs: Vec<Vec<Dir>> = by_germ.into_values().collect();
            gs.sort();
            gates.push(gs);
        }
        Ok(GateStructure { gates })
    }

    /// Unordered same-gate pairs `(a, b)` with `a < b`, listed by vertex.
    pub fn illegal_turns(&self) -> Result<Vec<(usize, Dir, Dir)>> {
        let gs = self.derivative()?;
        let mut out = Vec::new();
        for (v, gates) in gs.gates.iter().enumerate() {
            for g in gates {
                for i in 0..g.len() {
                    for j in i + 1..g.len() {
                        out.push((v, g[i], g[j]));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Checks edge-isometry, then at least two gates per vertex. Edge
    /// images are tight, so legal turns map to non-degenerate turns.
    pub fn train_track_violation(&self) -> Option<TrainTrackViolation> {
        for e in 0..self.source.edge_count() {
            let s = self.stretch(e);
            if s.is_zero() {
                return Some(TrainTrackViolation::CollapsedEdge(e));
            }
            if !s.is_one() {
                return Some(TrainTrackViolation::Stretch { edge: e, stretch: s });
            }
        }
        let gs = self.derivative().ok()?;
        (0..self.source.vertex_count())
            .find(|v| gs.gate_count(*v) < 2)
            .map(TrainTrackViolation::OneGate)
    }

    pub fn is_train_track(&self) -> bool {
        self.train_track_violation().is_none()
    }

    /// Whether the map induces the identity of `Out(F_n)` between the markings.
    pub fn is_marking_compatible(&self) -> bool {
        let s = &self.source;
        let t = &self.target;
        let tree = s.spanning_tree(s.basepoint());
        let loops = s.fundamental_loops(&tree);
        let basis: Vec<Word> = loops.iter().map(|(_, l)| s.path_label(l)).collect();
        let alpha = path_from_base(t, &self.vertex_image[s.basepoint()]);
        let alpha_rev = alpha.reverse(t);
        let images: Vec<Word> = loops
            .iter()
            .map(|(_, l)| {
                let img = self.path_image(&Path::from_dirs(s, s.basepoint(), l));
                let closed = alpha.concat(t, &img).concat(t, &alpha_rev);
                t.path_label(&closed.dirs())
            })
            .collect();
        match stallings::automorphism_from_basis(&basis, &images, s.rank()) {
            Some(aut) => stallings::inner_conjugator(&aut).is_some(),
            None => false,
        }
    }

    /// Structural equality of the maps, ignoring the stored graphs.
    pub fn same_map(&self, other: &GraphMorphism) -> bool {
        self.vertex_image == other.vertex_image && self.edge_image == other.edge_image
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("morphism serializes");
        let st: Vec<String> = self.stretches().iter().map(rational::format_q).collect();
        v["stretch"] = serde_json::json!(st);
        v
    }
}

/// Path in `g` from the basepoint to `p` through a breadth-first tree.
pub fn path_from_base(g: &MarkedGraph, p: &Point) -> Path {
    let tree = g.spanning_tree(g.basepoint());
    match p.normalized(g) {
        Point::Vertex(v) => Path::from_dirs(g, g.basepoint(), &g.tree_path(&tree, v)),
        Point::Edge { edge, offset } => {
            let from = g.edge(edge).from;
            let to_from = Path::from_dirs(g, g.basepoint(), &g.tree_path(&tree, from));
            let piece = Path::from_segs(g, Point::Vertex(from), [Seg { edge, from: Q::zero(), to: offset }]);
            to_from.concat(g, &piece)
        }
    }
}

/// Embedded circles of `g` as closed direction sequences, one per edge set.
pub fn embedded_circles(g: &MarkedGraph) -> Vec<Vec<Dir>> {
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut out = Vec::new();
    for s in 0..g.vertex_count() {
        let mut stack: Vec<Dir> = Vec::new();
        let mut on_path = vec![false; g.vertex_count()];
        on_path[s] = true;
        circles_from(g, s, s, &mut stack, &mut on_path, &mut seen, &mut out);
    }
    out
}

fn circles_from(
    g: &MarkedGraph,
    s: usize,
    v: usize,
    stack: &mut Vec<Dir>,
    on_path: &mut [bool],
    seen: &mut BTreeSet<Vec<usize>>,
    out: &mut Vec<Vec<Dir>>,
) {
    for d in g.directions_at(v) {
        if stack.iter().any(|x| x.edge == d.edge) {
            continue;
        }
        let w = g.head(d);
        if w == s {
            stack.push(d);
            let mut key: Vec<usize> = stack.iter().map(|x| x.edge).collect();
            key.sort_unstable();
            if seen.insert(key) {
                out.push(stack.clone());
            }
            stack.pop();
        } else if w > s && !on_path[w] {
            on_path[w] = true;
            stack.push(d);
            circles_from(g, s, w, stack, on_path, seen, out);
            stack.pop();
            on_path[w] = false;
        }
    }
}

fn circle_vertices(g: &MarkedGraph, c: &[Dir]) -> BTreeSet<usize> {
    c.iter().map(|d| g.tail(*d)).collect()
}

/// Rotates a closed path so that it starts at vertex `x`.
fn rotate_to(g: &MarkedGraph, c: &[Dir], x: usize) -> Vec<Dir> {
    let i = c.iter().position(|d| g.tail(*d) == x).expect("vertex on circle");
    c[i..].iter().chain(&c[..i]).copied().collect()
}

/// Simple paths from `x` to `y` whose interior avoids `avoid`.
fn simple_paths(g: &MarkedGraph, x: usize, y: usize, avoid: &BTreeSet<usize>) -> Vec<Vec<Dir>> {
    fn go(g: &MarkedGraph, v: usize, y: usize, avoid: &BTreeSet<usize>, used: &mut Vec<usize>, stack: &mut Vec<Dir>, out: &mut Vec<Vec<Dir>>) {
        for d in g.directions_at(v) {
            let w = g.head(d);
            if w == y {
                stack.push(d);
                out.push(stack.clone());
                stack.pop();
            } else if !avoid.contains(&w) && !used.contains(&w) {
                used.push(w);
                stack.push(d);
                go(g, w, y, avoid, used, stack, out);
                stack.pop();
                used.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(g, x, y, avoid, &mut vec![x], &mut Vec::new(), &mut out);
    out
}

/// Closed paths of the embedded circles, figure-eights and barbells of `g`.
pub fn candidate_paths(g: &MarkedGraph) -> Vec<Vec<Dir>> {
    let circles = embedded_circles(g);
    let verts: Vec<BTreeSet<usize>> = circles.iter().map(|c| circle_vertices(g, c)).collect();
    let mut out: Vec<Vec<Dir>> = circles.clone();
    for i in 0..circles.len() {
        for j in i + 1..circles.len() {
            let common: Vec<usize> = verts[i].intersection(&verts[j]).copied().collect();
            let c1 = &circles[i];
            let c2 = &circles[j];
            if common.len() == 1 {
                let shares_edge = c1.iter().any(|a| c2.iter().any(|b| a.edge == b.edge));
                if shares_edge {
                    continue;
                }
                let x = common[0];
                let a = rotate_to(g, c1, x);
                let b = rotate_to(g, c2, x);
                out.push(a.iter().chain(&b).copied().collect());
                out.push(a.iter().copied().chain(crate::graph::reverse_dirs(&b)).collect());
            } else if common.is_empty() {
                let avoid: BTreeSet<usize> = verts[i].union(&verts[j]).copied().collect();
                for &x in &verts[i] {
                    for &y in &verts[j] {
                        for p in simple_paths(g, x, y, &avoid) {
                            let a = rotate_to(g, c1, x);
                            let b = rotate_to(g, c2, y);
                            let pr = crate::graph::reverse_dirs(&p);
                            for b2 in [b.clone(), crate::graph::reverse_dirs(&b)] {
                                out.push(a.iter().chain(&p).chain(&b2).chain(&pr).copied().collect());
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Words for the candidate loops, deduplicated up to conjugacy and inversion.
pub fn candidate_loops(g: &MarkedGraph) -> Vec<Word> {
    let tree = g.spanning_tree(g.basepoint());
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for c in candidate_paths(g) {
        let to = g.tree_path(&tree, g.tail(c[0]));
        let mut full = to.clone();
        full.extend(c);
        full.extend(crate::graph::reverse_dirs(&to));
        let w = g.path_label(&full);
        let key = std::cmp::min(w.cyclic_normal_form(), w.inverse().cyclic_normal_form());
        if seen.insert(key) {
            out.push(w);
        }
    }
    out
}

/// `max_w l_T(w) / l_S(w)` over the candidate loops of `s`, with a maximizing word.
pub fn lipschitz_witness(s: &MarkedGraph, t: &MarkedGraph) -> Result<(Q, Word)> {
    if s.rank() != t.rank() {
        return Err(Error::RankMismatch(s.rank(), t.rank()));
    }
    let words = candidate_loops(s);
    let ls = s.translation_lengths(&words)?;
    let lt = t.translation_lengths(&words)?;
    let mut best: Option<(Q, Word)> = None;
    for ((w, a), b) in words.into_iter().zip(ls).zip(lt) {
        let r = b / a;
        if best.as_ref().map_or(true, |(m, _)| r > *m) {
            best = Some((r, w));
        }
    }
    best.ok_or_else(|| Error::InvalidGraph("no candidate loops".into()))
}

pub fn lipschitz_constant(s: &MarkedGraph, t: &MarkedGraph) -> Result<Q> {
    Ok(lipschitz_witness(s, t)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::theta;
    use crate::rational::q;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn half_rose() -> MarkedGraph {
        MarkedGraph::rose(2, &[q(1, 2), q(1, 2)]).unwrap()
    }

    /// Rose with petals `a`, `ab` of lengths 1/2, 1.
    fn guide_source() -> MarkedGraph {
        MarkedGraph::rose_with_labels(&[w("a"), w("ab")], &[q(1, 2), q(1, 1)]).unwrap()
    }

    #[test]
    fn identity_map() {
        let g = half_rose();
        let f = GraphMorphism::from_markings(&g, &g).unwrap();
        assert!(f.same_map(&GraphMorphism::identity(&g)));
        assert_eq!(f.stretches(), vec![q(1, 1), q(1, 1)]);
        assert!(f.illegal_turns().unwrap().is_empty());
        assert_eq!(f.derivative().unwrap().gate_count(0), 4);
        assert!(f.is_train_track());
        assert!(f.is_marking_compatible());
    }

    #[test]
    fn remarking_stretch() {
        let s = half_rose();
        let t = MarkedGraph::rose_with_labels(&[w("a"), w("ab")], &[q(1, 2), q(1, 2)]).unwrap();
        let f = GraphMorphism::from_markings(&s, &t).unwrap();
        assert_eq!(f.stretch(1), q(2, 1));
        assert_eq!(f.edge_image[1].length(), q(1, 1));
        assert!(f.is_marking_compatible());
        assert!(!f.is_train_track());
        assert_eq!(lipschitz_witness(&s, &t).unwrap(), (q(2, 1), w("b")));
    }

    #[test]
    fn fold_guide_gates() {
        let s = guide_source();
        let f = GraphMorphism::from_markings(&s, &half_rose()).unwrap();
        assert_eq!(f.stretches(), vec![q(1, 1), q(1, 1)]);
        let turns = f.illegal_turns().unwrap();
        assert_eq!(turns, vec![(0, Dir::new(0, true), Dir::new(1, true))]);
        assert_eq!(f.derivative().unwrap().gate_count(0), 3);
        assert!(f.is_train_track());
    }

    #[test]
    fn single_gate_witness() {
        // Both petals of the source start and end along petal `a` of the target.
        let s = MarkedGraph::rose_with_labels(&[w("a"), w("abA")], &[q(1, 2), q(3, 2)]).unwrap();
        let f = GraphMorphism::from_markings(&s, &half_rose()).unwrap();
        assert_eq!(f.stretches(), vec![q(1, 1), q(1, 1)]);
        let gs = f.derivative().unwrap();
        assert_eq!(gs.gate_count(0), 2);
        assert_eq!(f.illegal_turns().unwrap().len(), 3);
    }

    #[test]
    fn collapse_gives_degenerate_images() {
        let t = theta([q(1, 3), q(1, 3), q(1, 3)]);
        let (c, _) = t.collapse_forest(&[2]).unwrap();
        let f = GraphMorphism::from_markings(&t, &c).unwrap();
        assert!(f.stretch(2).is_zero());
        assert_eq!(f.derivative(), Err(Error::CollapsedEdge(2)));
        assert_eq!(f.train_track_violation(), Some(TrainTrackViolation::CollapsedEdge(2)));
    }

    #[test]
    fn candidates() {
        let mut r2: Vec<Word> = candidate_loops(&half_rose());
        r2.sort();
        let mut expect = vec![w("a"), w("b"), w("ab"), w("aB")];
        expect.sort();
        assert_eq!(r2, expect);
        let r3 = MarkedGraph::rose(3, &[q(1, 3), q(1, 3), q(1, 3)]).unwrap();
        assert_eq!(candidate_loops(&r3).len(), 3 + 2 * 3);
        assert_eq!(candidate_loops(&theta([q(1, 3), q(1, 3), q(1, 3)])).len(), 3);
        let bar = crate::graph::barbell(q(1, 3), q(1, 3), q(1, 3));
        assert_eq!(candidate_loops(&bar).len(), 4);
    }

    #[test]
    fn lipschitz_basics() {
        let g = theta([q(1, 2), q(1, 3), q(1, 6)]);
        assert_eq!(lipschitz_constant(&g, &g).unwrap(), q(1, 1));
        let t = half_rose();
        let base = lipschitz_constant(&g, &t).unwrap();
        for l in [q(1, 2), q(3, 1), q(7, 5)] {
            assert_eq!(lipschitz_constant(&g, &t.scaled(&l)).unwrap(), &base * &l);
        }
        assert!(base * lipschitz_constant(&t, &g).unwrap() >= q(1, 1));
    }

    #[test]
    fn composition() {
        let s = guide_source();
        let t = half_rose();
        let f = GraphMorphism::from_markings(&s, &t).unwrap();
        let id = GraphMorphism::identity(&t);
        assert!(f.then(&id).same_map(&f));
        let back = GraphMorphism::from_markings(&t, &s).unwrap();
        let round = f.then(&back);
        assert!(round.is_marking_compatible());
        for e in 0..2 {
            assert!(round.stretch(e) <= back.max_stretch() * f.stretch(e));
        }
    }

    #[test]
    fn json_has_stretch() {
        let f = GraphMorphism::identity(&half_rose());
        let v = f.to_json_value();
        assert_eq!(v["stretch"][0], "1");
        let back: GraphMorphism = serde_json::from_value(v).unwrap();
        assert_eq!(back, f);
    }
}
