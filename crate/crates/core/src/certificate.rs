//! Splitting-complex certificates: along a folding path, and across a forest collapse.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MarkedGraph;
use crate::morphism::GraphMorphism;
use crate::path::Point;
use crate::rational::Q;
use crate::skora::{FoldingPath, Mode};
use crate::splittings::{edge_splittings, refinement_in, upsilon_edge, FreeSplitting, Refinement};

/// Edges of `f`'s source meeting the preimage of the interior point `y`.
/// Fails on an edge mapped to `y` itself; vertex preimages are reported in
/// the second component.
pub fn preimage_edges(f: &GraphMorphism, y: &Point) -> Result<(Vec<usize>, bool)> {
    let Point::Edge { edge, offset } = y else {
        return Err(Error::OutOfRange("point must be interior to an edge".into()));
    };
    let mut edges = Vec::new();
    let mut at_vertex = f.vertex_image.iter().any(|p| p == y);
    for (e, img) in f.edge_image.iter().enumerate() {
        if img.is_trivial() {
            if &img.start == y {
                return Err(Error::InfinitePreimage);
            }
            continue;
        }
        let mut hit = false;
        for s in &img.segs {
            if s.edge != *edge {
                continue;
            }
            let (lo, hi) = if s.from < s.to { (&s.from, &s.to) } else { (&s.to, &s.from) };
            if lo < offset && offset < hi {
                hit = true;
            } else if lo == offset || hi == offset {
                at_vertex = true;
            }
        }
        if hit {
            edges.push(e);
        }
    }
    Ok((edges, at_vertex))
}

/// Number of preimages of the interior point `y`, none at vertices.
pub fn preimage_count(f: &GraphMorphism, y: &Point) -> Result<usize> {
    let Point::Edge { edge, offset } = y else {
        return Err(Error::OutOfRange("point must be interior to an edge".into()));
    };
    let (_, at_vertex) = preimage_edges(f, y)?;
    if at_vertex {
        return Err(Error::OutOfRange("point has a vertex preimage".into()));
    }
    Ok(f.edge_image
        .iter()
        .flat_map(|p| &p.segs)
        .filter(|s| s.edge == *edge && (s.from < *offset) != (s.to < *offset) && s.from != *offset && s.to != *offset)
        .count())
}

/// Positions on `edge` hit by some vertex of the morphisms.
fn vertex_offsets(maps: &[&GraphMorphism], edge: usize) -> Vec<Q> {
    let mut out = Vec::new();
    for f in maps {
        for p in &f.vertex_image {
            if let Point::Edge { edge: e, offset } = p {
                if *e == edge {
                    out.push(offset.clone());
                }
            }
        }
        for img in &f.edge_image {
            for s in &img.segs {
                if s.edge == edge {
                    out.push(s.from.clone());
                    out.push(s.to.clone());
                }
            }
        }
    }
    out
}

/// Moves `y` off every vertex image, staying between the same breakpoints when possible.
fn generic_point(t: &MarkedGraph, maps: &[&GraphMorphism], y: &Point) -> Point {
    let (edge, offset) = match y {
        Point::Edge { edge, offset } => (*edge, offset.clone()),
        Point::Vertex(v) => {
            let d = t.directions_at(*v)[0];
            let len = t.length(d.edge).clone();
            let half = &len / Q::from_integer(2.into());
            (d.edge, if d.fwd { Q::zero() } else { len.clone() } + if d.fwd { half.clone() } else { -half })
        }
    };
    let len = t.length(edge).clone();
    let mut cuts: Vec<Q> = vertex_offsets(maps, edge).into_iter().filter(|q| !q.is_zero() && *q != len).collect();
    if !cuts.contains(&offset) && !offset.is_zero() && offset != len {
        return Point::Edge { edge, offset };
    }
    cuts.push(Q::zero());
    cuts.push(len.clone());
    cuts.sort();
    cuts.dedup();
    let above = cuts.iter().find(|c| **c > offset).cloned().unwrap_or(len.clone());
    let below = cuts.iter().rev().find(|c| **c <= offset).cloned().unwrap_or(Q::zero());
    let (a, b) = if above > offset { (offset.clone(), above) } else { (below, offset.clone()) };
    Point::Edge { edge, offset: (a + b) / Q::from_integer(2.into()) }
}

/// Splittings along a folding path; consecutive entries share a two-edge refinement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FsCertificate {
    pub point: Point,
    pub preimages: usize,
    pub folds: usize,
    pub splittings: Vec<FreeSplitting>,
    /// `links[i]` refines `splittings[i]` and `splittings[i + 1]`.
    pub links: Vec<Refinement>,
}

impl FsCertificate {
    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Length per preimage.
    pub fn ratio(&self) -> Q {
        Q::from_integer((self.len() as i64).into()) / Q::from_integer((self.preimages.max(1) as i64).into())
    }

    pub fn validates(&self) -> bool {
        self.links.len() + 1 == self.splittings.len()
            && self.links.iter().enumerate().all(|(i, r)| {
                self.splittings[i] != self.splittings[i + 1] && r.validates(&self.splittings[i], &self.splittings[i + 1])
            })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("certificate serializes")
    }
}

struct Walker {
    graph: MarkedGraph,
    ups: Vec<Option<FreeSplitting>>,
    edge: usize,
    out: FsCertificate,
}

impl Walker {
    fn push(&mut self, link: Refinement, s: FreeSplitting) {
        self.out.links.push(link);
        self.out.splittings.push(s);
    }

    /// Moves to graph `h` at one of `targets`, adding at most two links.
    fn step(&mut self, h: &MarkedGraph, targets: &[usize]) -> Result<()> {
        let hu = edge_splittings(h);
        let targets: Vec<usize> = targets.iter().copied().filter(|c| hu[*c].is_some()).collect();
        let same = |a: &Option<FreeSplitting>, b: &Option<FreeSplitting>| a.is_some() && a == b;
        let mut plan: Option<(Option<usize>, Option<usize>, usize)> = None;
        if let Some(&c) = targets.iter().find(|c| same(&hu[**c], &self.ups[self.edge])) {
            plan = Some((None, None, c));
        }
        if plan.is_none() {
            'a: for a in 0..self.ups.len() {
                if let Some(&c) = targets.iter().find(|c| same(&hu[**c], &self.ups[a])) {
                    plan = Some((Some(a), None, c));
                    break 'a;
                }
            }
        }
        if plan.is_none() {
            'b: for a in 0..self.ups.len() {
                if let (Some(b), Some(&c)) = ((0..hu.len()).find(|b| same(&hu[*b], &self.ups[a])), targets.first()) {
                    plan = Some((Some(a), Some(b), c));
                    break 'b;
                }
            }
        }
        let (a, b, c) = plan.ok_or(Error::InvalidWitness("consecutive graphs share no one-edge splitting".into()))?;
        if let Some(a) = a.filter(|a| !same(&self.ups[*a], &self.ups[self.edge])) {
            let s = self.ups[a].clone().unwrap();
            self.push(refinement_in(&self.graph, self.edge, a), s);
        }
        if let Some(b) = b.filter(|b| !same(&hu[*b], &hu[c])) {
            self.push(refinement_in(h, b, c), hu[c].clone().unwrap());
        }
        self.graph = h.clone();
        self.ups = hu;
        self.edge = c;
        Ok(())
    }
}

/// Certificate from a splitting of `f`'s source at a preimage of `y` to
/// the splitting of the target at `y`, following the folding path of `f`.
pub fn fs_distance_certificate(f: &GraphMorphism, y: &Point) -> Result<FsCertificate> {
    let path = FoldingPath::guided(f.clone(), Mode::Unnormalized)?;
    let target = f.target.clone();
    let mut maps: Vec<&GraphMorphism> = vec![f];
    maps.extend(path.stages.iter().map(|s| &s.guide));
    let y = generic_point(&target, &maps, &y.normalized(&target));
    let Point::Edge { edge: y_edge, .. } = y.clone() else { unreachable!() };
    let preimages = preimage_count(f, &y)?;
    let (start_edges, _) = preimage_edges(f, &y)?;
    let g = f.source.clone();
    let ups = edge_splittings(&g);
    let first = *start_edges
        .iter()
        .find(|e| ups[**e].is_some())
        .ok_or(Error::InvalidWitness("point has no preimage on a splitting edge".into()))?;
    let mut w = Walker {
        graph: g,
        out: FsCertificate { point: y.clone(), preimages, folds: path.len(), splittings: vec![ups[first].clone().unwrap()], links: Vec::new() },
        ups,
        edge: first,
    };
    for st in &path.stages {
        let (edges, at_vertex) = preimage_edges(&st.guide, &y)?;
        if at_vertex || edges.is_empty() {
            return Err(Error::InvalidWitness("stage preimage is not generic".into()));
        }
        w.step(&st.graph, &edges)?;
    }
    w.step(&target, &[y_edge])?;
    let out = w.out;
    debug_assert!(out.validates());
    Ok(out)
}

/// Collapse `source -> target` along a forest: every surviving edge has the
/// same one-edge splitting on both sides, so the target's splittings are a
/// common collapse of both free-splitting vertices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NearbyCertificate {
    pub source: MarkedGraph,
    pub forest: Vec<usize>,
    pub target: MarkedGraph,
    pub edge_map: Vec<Option<usize>>,
}

impl NearbyCertificate {
    pub fn distance_bound(&self) -> usize {
        2
    }

    pub fn validates(&self) -> bool {
        let Ok((t, map)) = self.source.collapse_forest(&self.forest) else { return false };
        t == self.target
            && map.edge_map == self.edge_map
            && self.edge_map.iter().enumerate().all(|(e, m)| match m {
                Some(x) => match (upsilon_edge(&self.source, e), upsilon_edge(&self.target, *x)) {
                    (Ok(a), Ok(b)) => a == b,
                    _ => false,
                },
                None => true,
            })
    }
}

pub fn nearby_certificate(g: &MarkedGraph, forest: &[usize]) -> Result<NearbyCertificate> {
    let (target, map) = g.collapse_forest(forest)?;
    let c = NearbyCertificate { source: g.clone(), forest: forest.to_vec(), target, edge_map: map.edge_map };
    if !c.validates() {
        return Err(Error::InvalidWitness("collapse changes a surviving splitting".into()));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimal::optimal_map;
    use crate::random::{random_graph, rng};
    use crate::rational::q;

    #[test]
    fn identity_gives_empty_certificate() {
        let g = MarkedGraph::rose(3, &[q(1, 3), q(1, 3), q(1, 3)]).unwrap();
        let f = GraphMorphism::identity(&g);
        let c = fs_distance_certificate(&f, &Point::Edge { edge: 1, offset: q(1, 7) }).unwrap();
        assert_eq!((c.len(), c.preimages), (0, 1));
        assert!(c.validates());
    }

    #[test]
    fn random_certificates_validate() {
        let mut r = rng(21);
        let mut worst = Q::zero();
        for _ in 0..12 {
            let s = random_graph(&mut r, 3, 4);
            let t = random_graph(&mut r, 3, 4);
            let f = optimal_map(&s, &t).unwrap();
            for e in 0..t.edge_count() {
                let y = Point::Edge { edge: e, offset: t.length(e) / Q::from_integer(3.into()) };
                let c = fs_distance_certificate(&f, &y).unwrap();
                assert!(c.validates());
                worst = worst.max(c.ratio());
            }
        }
        assert!(worst > Q::zero());
    }

    #[test]
    fn collapses_are_nearby() {
        let mut r = rng(8);
        for _ in 0..20 {
            let g = random_graph(&mut r, 3, 4);
            let tree = crate::graph::MarkedGraph::tree_edges(&g.spanning_tree(0));
            if tree.is_empty() {
                continue;
            }
            let c = nearby_certificate(&g, &tree[..1]).unwrap();
            assert!(c.validates());
        }
    }
}
