//! Points and tight paths in a metric graph, with rational endpoints.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::graph::{Dir, MarkedGraph};
use crate::rational::Q;

/// A vertex, or a point in the interior of an edge at `offset` from its origin.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Vertex(usize),
    Edge {
        edge: usize,
        #[serde(with = "crate::rational::serde_q")]
        offset: Q,
    },
}

impl Point {
    /// Point at position `pos` along edge `edge`, as a vertex when at an end.
    pub fn on_edge(g: &MarkedGraph, edge: usize, pos: &Q) -> Point {
        let e = g.edge(edge);
        if pos.is_zero() {
            Point::Vertex(e.from)
        } else if *pos == e.length {
            Point::Vertex(e.to)
        } else {
            Point::Edge { edge, offset: pos.clone() }
        }
    }

    pub fn normalized(&self, g: &MarkedGraph) -> Point {
        match self {
            Point::Vertex(v) => Point::Vertex(*v),
            Point::Edge { edge, offset } => Point::on_edge(g, *edge, offset),
        }
    }

    pub fn vertex(&self) -> Option<usize> {
        match self {
            Point::Vertex(v) => Some(*v),
            Point::Edge { .. } => None,
        }
    }
}

/// Piece of a single edge, from position `from` to position `to`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seg {
    pub edge: usize,
    #[serde(with = "crate::rational::serde_q")]
    pub from: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub to: Q,
}

impl Seg {
    pub fn len(&self) -> Q {
        (&self.to - &self.from).abs()
    }

    pub fn fwd(&self) -> bool {
        self.to > self.from
    }

    pub fn dir(&self) -> Dir {
        Dir::new(self.edge, self.fwd())
    }

    pub fn rev(&self) -> Seg {
        Seg { edge: self.edge, from: self.to.clone(), to: self.from.clone() }
    }

    pub fn full(g: &MarkedGraph, d: Dir) -> Seg {
        let l = g.length(d.edge).clone();
        if d.fwd {
            Seg { edge: d.edge, from: Q::zero(), to: l }
        } else {
            Seg { edge: d.edge, from: l, to: Q::zero() }
        }
    }

    /// Position reached after travelling `x` along the segment.
    fn at(&self, x: &Q) -> Q {
        if self.fwd() {
            &self.from + x
        } else {
            &self.from - x
        }
    }
}

/// Path as a start point and consecutive edge pieces. Kept tight: no two
/// neighbouring pieces lie on the same edge and meet at the same position.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    pub start: Point,
    pub segs: Vec<Seg>,
}

impl Path {
    pub fn constant(p: Point) -> Path {
        Path { start: p, segs: Vec::new() }
    }

    pub fn from_dirs(g: &MarkedGraph, start: usize, dirs: &[Dir]) -> Path {
        Path::from_segs(g, Point::Vertex(start), dirs.iter().map(|d| Seg::full(g, *d)))
    }

    /// Builds a tightened path; `start` is used only when nothing survives.
    pub fn from_segs(g: &MarkedGraph, start: Point, segs: impl IntoIterator<Item = Seg>) -> Path {
        let mut out: Vec<Seg> = Vec::new();
        for s in segs {
            if s.from == s.to {
                continue;
            }
            match out.last_mut() {
                Some(top) if top.edge == s.edge && top.to == s.from => {
                    if top.from == s.to {
                        out.pop();
                    } else {
                        top.to = s.to;
                    }
                }
                _ => out.push(s),
            }
        }
        let start = match out.first() {
            Some(s) => Point::on_edge(g, s.edge, &s.from),
            None => start.normalized(g),
        };
        Path { start, segs: out }
    }

    pub fn is_trivial(&self) -> bool {
        self.segs.is_empty()
    }

    pub fn length(&self) -> Q {
        self.segs.iter().map(Seg::len).sum()
    }

    pub fn end(&self, g: &MarkedGraph) -> Point {
        match self.segs.last() {
            Some(s) => Point::on_edge(g, s.edge, &s.to),
            None => self.start.clone(),
        }
    }

    pub fn reverse(&self, g: &MarkedGraph) -> Path {
        Path {
            start: self.end(g),
            segs: self.segs.iter().rev().map(Seg::rev).collect(),
        }
    }

    /// Concatenation followed by tightening. The end of `self` should be the start of `other`.
    pub fn concat(&self, g: &MarkedGraph, other: &Path) -> Path {
        debug_assert_eq!(self.end(g), other.start);
        Path::from_segs(g, self.start.clone(), self.segs.iter().chain(&other.segs).cloned())
    }

    /// Direction in which the path leaves its start.
    pub fn first_dir(&self) -> Option<Dir> {
        self.segs.first().map(Seg::dir)
    }

    pub fn point_at(&self, g: &MarkedGraph, x: &Q) -> Point {
        let mut rest = x.clone();
        for s in &self.segs {
            let l = s.len();
            if rest <= l {
                return Point::on_edge(g, s.edge, &s.at(&rest));
            }
            rest -= l;
        }
        self.end(g)
    }

    /// Piece between arc-length parameters `a` and `b`, reversed when `a > b`.
    pub fn sub(&self, g: &MarkedGraph, a: &Q, b: &Q) -> Path {
        if a > b {
            return self.sub(g, b, a).reverse(g);
        }
        let mut out = Vec::new();
        let mut pos = Q::zero();
        for s in &self.segs {
            let l = s.len();
            let end = &pos + &l;
            let lo = if *a > pos { a.clone() } else { pos.clone() };
            let hi = if *b < end { b.clone() } else { end.clone() };
            if lo < hi {
                out.push(Seg { edge: s.edge, from: s.at(&(&lo - &pos)), to: s.at(&(&hi - &pos)) });
            }
            pos = end;
        }
        Path::from_segs(g, self.point_at(g, a), out)
    }

    /// Directions crossed, for paths running between vertices along whole edges.
    pub fn dirs(&self) -> Vec<Dir> {
        self.segs.iter().map(Seg::dir).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn r2() -> MarkedGraph {
        MarkedGraph::rose(2, &[q(1, 2), q(1, 2)]).unwrap()
    }

    #[test]
    fn tightening_cancels() {
        let g = r2();
        let p = Path::from_dirs(&g, 0, &[Dir::new(0, true), Dir::new(1, true), Dir::new(1, false)]);
        assert_eq!(p.dirs(), vec![Dir::new(0, true)]);
        let loopy = Path::from_dirs(&g, 0, &[Dir::new(0, true), Dir::new(0, true)]);
        assert_eq!(loopy.length(), q(1, 1));
        let partial = Path::from_segs(
            &g,
            Point::Vertex(0),
            vec![
                Seg { edge: 0, from: q(0, 1), to: q(1, 4) },
                Seg { edge: 0, from: q(1, 4), to: q(1, 2) },
            ],
        );
        assert_eq!(partial.segs.len(), 1);
        assert_eq!(partial.end(&g), Point::Vertex(0));
    }

    #[test]
    fn subpaths() {
        let g = r2();
        let p = Path::from_dirs(&g, 0, &[Dir::new(0, true), Dir::new(1, false)]);
        let s = p.sub(&g, &q(1, 4), &q(3, 4));
        assert_eq!(s.length(), q(1, 2));
        assert_eq!(s.start, Point::Edge { edge: 0, offset: q(1, 4) });
        assert_eq!(s.end(&g), Point::Edge { edge: 1, offset: q(1, 4) });
        let r = p.sub(&g, &q(3, 4), &q(1, 4));
        assert_eq!(r, s.reverse(&g));
        assert_eq!(p.sub(&g, &q(0, 1), &q(1, 1)), p);
        assert!(p.sub(&g, &q(1, 2), &q(1, 2)).is_trivial());
    }

    #[test]
    fn json_points() {
        let p = Point::Edge { edge: 3, offset: q(1, 2) };
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"edge":3,"offset":"1/2"}"#);
        assert_eq!(serde_json::from_str::<Point>(&s).unwrap(), p);
        assert_eq!(serde_json::to_string(&Point::Vertex(2)).unwrap(), "2");
    }
}
