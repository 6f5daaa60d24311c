//! Folds of illegal turns and the elementary graph moves they are built from.
//!
//! Every move takes a graph `G` with a guide `f: G -> T` and returns the
//! new graph `G'`, the move's map `phi: G -> G'` and the new guide `f'`
//! with `f = f' ∘ phi`.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dir, MarkedGraph};
use crate::morphism::GraphMorphism;
use crate::path::{Path, Point};
use crate::rational::Q;
use crate::word::Word;

/// Two directions at a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Turn {
    pub vertex: usize,
    pub a: Dir,
    pub b: Dir,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub turn: Turn,
    #[serde(with = "crate::rational::serde_q")]
    pub amount: Q,
    /// Quotient map from the folded graph onto the result.
    pub map: GraphMorphism,
}

/// A graph together with its guide and the move that produced it.
pub struct Moved {
    pub graph: MarkedGraph,
    pub map: GraphMorphism,
    pub guide: GraphMorphism,
}

fn whole(g: &MarkedGraph, d: Dir) -> Path {
    Path::from_dirs(g, g.tail(d), &[d])
}

fn with_source(f: &GraphMorphism, g: &MarkedGraph, vertex_image: Vec<Point>, edge_image: Vec<Path>) -> GraphMorphism {
    GraphMorphism { source: g.clone(), target: f.target.clone(), vertex_image, edge_image }
}

/// Reverses the orientation of edge `e`.
pub fn reorient(g: &MarkedGraph, f: &GraphMorphism, e: usize) -> Moved {
    let mut parts: Vec<(usize, usize, Q, Word)> =
        g.edges().iter().map(|x| (x.from, x.to, x.length.clone(), x.label.clone())).collect();
    let (a, b, l, w) = parts[e].clone();
    parts[e] = (b, a, l, w.inverse());
    let mut h = MarkedGraph::from_parts(g.vertex_count(), parts, g.basepoint()).expect("reorient");
    h = h.with_rank(g.rank());
    let map_edges = (0..g.edge_count())
        .map(|x| if x == e { whole(&h, Dir::new(e, false)) } else { whole(&h, Dir::new(x, true)) })
        .collect();
    let map = GraphMorphism {
        source: g.clone(),
        target: h.clone(),
        vertex_image: (0..g.vertex_count()).map(Point::Vertex).collect(),
        edge_image: map_edges,
    };
    let mut imgs = f.edge_image.clone();
    imgs[e] = f.dir_image(Dir::new(e, false));
    let guide = with_source(f, &h, f.vertex_image.clone(), imgs);
    Moved { graph: h, map, guide }
}

/// Splits edge `e` at distance `t` from its origin (see [`MarkedGraph::subdivide`]).
pub fn split(g: &MarkedGraph, f: &GraphMorphism, e: usize, t: &Q) -> Result<Moved> {
    let h = g.subdivide(e, t)?;
    let new_edge = g.edge_count();
    let mut map_edges: Vec<Path> = (0..g.edge_count()).map(|x| whole(&h, Dir::new(x, true))).collect();
    map_edges[e] = Path::from_dirs(&h, g.edge(e).from, &[Dir::new(e, true), Dir::new(new_edge, true)]);
    let map = GraphMorphism {
        source: g.clone(),
        target: h.clone(),
        vertex_image: (0..g.vertex_count()).map(Point::Vertex).collect(),
        edge_image: map_edges,
    };
    let k = f.stretch(e);
    let img = &f.edge_image[e];
    let cut = t * &k;
    let mut imgs = f.edge_image.clone();
    imgs[e] = img.sub(&f.target, &Q::zero(), &cut);
    imgs.push(img.sub(&f.target, &cut, &img.length()));
    let mut vimg = f.vertex_image.clone();
    vimg.push(img.point_at(&f.target, &cut));
    let guide = with_source(f, &h, vimg, imgs);
    Ok(Moved { graph: h, map, guide })
}

/// Identifies edges `e1` and `e2`, both leaving the same vertex with equal
/// lengths and equal guide images; `e2` disappears. Labels at the end of
/// one of them are corrected so that every loop keeps its label.
pub fn identify(g: &MarkedGraph, f: &GraphMorphism, e1: usize, e2: usize) -> Result<Moved> {
    let (x1, x2) = (g.edge(e1).to, g.edge(e2).to);
    debug_assert_eq!(g.edge(e1).from, g.edge(e2).from);
    debug_assert_eq!(g.length(e1), g.length(e2));
    if x1 == x2 {
        return Err(Error::InvalidGraph("fold would kill a loop".into()));
    }
    let (s, o, es, eo) = if x2 != g.basepoint() { (x2, x1, e2, e1) } else { (x1, x2, e1, e2) };
    let c = &g.edge(eo).label.inverse() * &g.edge(es).label;
    let renum = |v: usize| {
        let v = if v == s { o } else { v };
        if v > s {
            v - 1
        } else {
            v
        }
    };
    let renum_e = |x: usize| if x > e2 { x - 1 } else { x };
    let mut parts = Vec::new();
    for e in g.edges() {
        if e.id == e2 {
            continue;
        }
        let mut label = e.label.clone();
        if e.from == s {
            label = &c * &label;
        }
        if e.to == s {
            label = &label * &c.inverse();
        }
        parts.push((renum(e.from), renum(e.to), e.length.clone(), label));
    }
    let h = MarkedGraph::from_parts(g.vertex_count() - 1, parts, renum(g.basepoint()))?.with_rank(g.rank());
    let map_edges = (0..g.edge_count())
        .map(|x| {
            let y = if x == e2 { e1 } else { x };
            whole(&h, Dir::new(renum_e(y), true))
        })
        .collect();
    let map = GraphMorphism {
        source: g.clone(),
        target: h.clone(),
        vertex_image: (0..g.vertex_count()).map(|v| Point::Vertex(renum(v))).collect(),
        edge_image: map_edges,
    };
    let mut vimg = vec![Point::Vertex(0); h.vertex_count()];
    for v in 0..g.vertex_count() {
        vimg[renum(v)] = f.vertex_image[v].clone();
    }
    let imgs = (0..g.edge_count()).filter(|x| *x != e2).map(|x| f.edge_image[x].clone()).collect();
    let guide = with_source(f, &h, vimg, imgs);
    Ok(Moved { graph: h, map, guide })
}

/// Length of the common initial piece of two paths from the same point.
pub fn common_prefix(p: &Path, q: &Path) -> Q {
    let mut total = Q::zero();
    for (a, b) in p.segs.iter().zip(&q.segs) {
        if a == b {
            total += a.len();
            continue;
        }
        if a.edge == b.edge && a.from == b.from && a.fwd() == b.fwd() {
            total += std::cmp::min(a.len(), b.len());
        }
        break;
    }
    total
}

fn check_turn(g: &MarkedGraph, f: &GraphMorphism, turn: &Turn) -> Result<()> {
    if g.tail(turn.a) != turn.vertex || g.tail(turn.b) != turn.vertex || turn.a == turn.b {
        return Err(Error::OutOfRange("turn directions must leave its vertex".into()));
    }
    if f.germ(turn.a)? != f.germ(turn.b)? {
        return Err(Error::LegalTurn);
    }
    Ok(())
}

/// Largest amount by which an illegal turn can be folded: where the two
/// image paths stop agreeing, or where the shorter edge ends.
pub fn max_foldable(g: &MarkedGraph, f: &GraphMorphism, turn: &Turn) -> Result<Q> {
    check_turn(g, f, turn)?;
    let agree = common_prefix(&f.dir_image(turn.a), &f.dir_image(turn.b)) / f.stretch(turn.a.edge);
    if turn.a.edge == turn.b.edge {
        // Both ends of one loop: agreement stays below half the loop.
        return Ok(agree);
    }
    Ok([agree, g.length(turn.a.edge).clone(), g.length(turn.b.edge).clone()].into_iter().min().unwrap())
}

fn chain(steps: &mut Vec<GraphMorphism>, m: Moved) -> (MarkedGraph, GraphMorphism) {
    steps.push(m.map);
    (m.graph, m.guide)
}

/// Folds the initial pieces of length `t` of the two directions of an
/// illegal turn. The guide must be an isometry on the two edges.
pub fn fold_turn(g: &MarkedGraph, f: &GraphMorphism, turn: &Turn, t: &Q) -> Result<(MarkedGraph, Fold, GraphMorphism)> {
    let max = max_foldable(g, f, turn)?;
    if !t.is_positive() || *t > max {
        return Err(Error::OutOfRange(format!("fold amount outside (0, {}]", crate::rational::format_q(&max))));
    }
    for d in [turn.a, turn.b] {
        if f.stretch(d.edge) != Q::from_integer(1.into()) {
            return Err(Error::InvalidGraph("guide must be an isometry on folded edges".into()));
        }
    }
    let mut steps = Vec::new();
    let (mut h, mut guide) = (g.clone(), f.clone());
    let (e1, e2);
    if turn.a.edge == turn.b.edge {
        // Cut the loop into [0,t], [t, L-t], [L-t, L] and fold the outer pieces.
        let e = turn.a.edge;
        let len = g.length(e).clone();
        (h, guide) = chain(&mut steps, split(&h, &guide, e, t)?);
        let rest = h.edge_count() - 1;
        (h, guide) = chain(&mut steps, split(&h, &guide, rest, &(&len - t - t))?);
        let last = h.edge_count() - 1;
        (h, guide) = chain(&mut steps, reorient(&h, &guide, last));
        e1 = e;
        e2 = last;
    } else {
        for d in [turn.a, turn.b] {
            if !d.fwd {
                (h, guide) = chain(&mut steps, reorient(&h, &guide, d.edge));
            }
            if *t < *h.length(d.edge) {
                (h, guide) = chain(&mut steps, split(&h, &guide, d.edge, t)?);
            }
        }
        e1 = turn.a.edge;
        e2 = turn.b.edge;
    }
    (h, guide) = chain(&mut steps, identify(&h, &guide, e1, e2)?);
    let mut map = steps[0].clone();
    for s in &steps[1..] {
        map = map.then(s);
    }
    Ok((h, Fold { turn: *turn, amount: t.clone(), map }, guide))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn setup() -> (MarkedGraph, GraphMorphism) {
        let s = MarkedGraph::rose_with_labels(&[w("a"), w("ab")], &[q(1, 2), q(1, 1)]).unwrap();
        let t = MarkedGraph::rose(2, &[q(1, 2), q(1, 2)]).unwrap();
        let f = GraphMorphism::from_markings(&s, &t).unwrap();
        (s, f)
    }

    fn turn() -> Turn {
        Turn { vertex: 0, a: Dir::new(0, true), b: Dir::new(1, true) }
    }

    #[test]
    fn full_fold_gives_rose() {
        let (s, f) = setup();
        assert_eq!(max_foldable(&s, &f, &turn()).unwrap(), q(1, 2));
        let (h, fold, guide) = fold_turn(&s, &f, &turn(), &q(1, 2)).unwrap();
        assert_eq!((h.vertex_count(), h.edge_count()), (1, 2));
        assert_eq!(h.edge_lengths(), vec![q(1, 2), q(1, 2)]);
        assert!(h.is_valid());
        assert_eq!(h.volume(), s.volume() - q(1, 2));
        assert!(fold.map.then(&guide).same_map(&f));
        assert!(guide.is_marking_compatible());
        assert!(guide.illegal_turns().unwrap().is_empty());
        assert!(crate::isometry::is_marked_isometric(&h, &f.target));
    }

    #[test]
    fn partial_fold() {
        let (s, f) = setup();
        let (h, fold, guide) = fold_turn(&s, &f, &turn(), &q(1, 4)).unwrap();
        assert_eq!((h.vertex_count(), h.edge_count()), (2, 3));
        assert_eq!(h.volume(), q(5, 4));
        assert!(h.is_valid(), "{:?}", h.validate());
        assert!(fold.map.then(&guide).same_map(&f));
        assert!(fold.map.is_marking_compatible());
    }

    #[test]
    fn legal_and_oversized() {
        let (s, f) = setup();
        let legal = Turn { vertex: 0, a: Dir::new(0, false), b: Dir::new(1, true) };
        assert_eq!(max_foldable(&s, &f, &legal), Err(Error::LegalTurn));
        assert!(fold_turn(&s, &f, &turn(), &q(3, 4)).is_err());
    }

    #[test]
    fn loop_self_turn() {
        // Petal `aba^-1` starts and ends along petal `a`.
        let s = MarkedGraph::rose_with_labels(&[w("a"), w("abA")], &[q(1, 2), q(3, 2)]).unwrap();
        let t = MarkedGraph::rose(2, &[q(1, 2), q(1, 2)]).unwrap();
        let f = GraphMorphism::from_markings(&s, &t).unwrap();
        let tn = Turn { vertex: 0, a: Dir::new(1, true), b: Dir::new(1, false) };
        assert_eq!(max_foldable(&s, &f, &tn).unwrap(), q(1, 2));
        let (h, fold, guide) = fold_turn(&s, &f, &tn, &q(1, 2)).unwrap();
        assert!(h.is_valid(), "{:?}", h.validate());
        assert_eq!(h.volume(), q(3, 2));
        assert!(fold.map.then(&guide).same_map(&f));
    }
}
