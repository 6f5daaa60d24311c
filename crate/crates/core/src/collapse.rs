//! Collapsing a forest of the last stage of a folding path back along the path.
//!
//! The forest pulls back to every stage through the maps to the last
//! stage; after subdividing at the boundary of the preimage, each stage is
//! collapsed and the fold maps descend to the collapsed graphs.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::folding::split;
use crate::graph::{CollapseMap, Dir, MarkedGraph};
use crate::morphism::GraphMorphism;
use crate::path::{Path, Point, Seg};
use crate::rational::Q;
use crate::skora::FoldingPath;

/// Map collapsing the forest edges of `g` onto the vertices of `c`.
pub fn collapse_morphism(g: &MarkedGraph, c: &MarkedGraph, map: &CollapseMap) -> GraphMorphism {
    let edge_image = g
        .edges()
        .iter()
        .map(|e| match map.edge_map[e.id] {
            Some(x) => Path::from_dirs(c, c.edge(x).from, &[Dir::new(x, true)]),
            None => Path::constant(Point::Vertex(map.vertex_map[e.from])),
        })
        .collect();
    GraphMorphism {
        source: g.clone(),
        target: c.clone(),
        vertex_image: map.vertex_map.iter().map(|v| Point::Vertex(*v)).collect(),
        edge_image,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollapsedStage {
    /// Subdivision of the stage at the boundary of the pulled-back forest.
    pub subdivision: GraphMorphism,
    /// Pulled-back forest, as edges of the subdivided graph.
    pub forest: Vec<usize>,
    /// Collapse of the subdivided graph.
    pub collapse: GraphMorphism,
    /// Original edge and parameter interval of every subdivided edge.
    pub pieces: Vec<Seg>,
}

impl CollapsedStage {
    pub fn graph(&self) -> &MarkedGraph {
        &self.collapse.target
    }

    pub fn apply_path(&self, p: &Path) -> Path {
        self.collapse.path_image(&self.subdivision.path_image(p))
    }

    pub fn apply_point(&self, p: &Point) -> Point {
        self.collapse.point_image(&self.subdivision.point_image(p))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollapsedPath {
    pub stages: Vec<CollapsedStage>,
    /// Maps between consecutive collapsed stages induced by the folds.
    pub maps: Vec<GraphMorphism>,
}

fn pull_back(path: &FoldingPath, k: usize, forest: &[usize]) -> Result<CollapsedStage> {
    let g = &path.stages[k].graph;
    let phi = path.decompose(k, path.len())?;
    let mut sub_graph = g.clone();
    let mut sub_phi = phi.clone();
    let mut subdivision = GraphMorphism::identity(g);
    let mut pieces: Vec<Seg> = g.edges().iter().map(|e| Seg { edge: e.id, from: Q::zero(), to: e.length.clone() }).collect();
    for e in 0..g.edge_count() {
        let img = &phi.edge_image[e];
        let mut cuts: Vec<Q> = Vec::new();
        let mut pos = Q::zero();
        let mut prev_in: Option<bool> = None;
        for s in &img.segs {
            let inside = forest.contains(&s.edge);
            if prev_in.is_some_and(|p| p != inside) {
                cuts.push(pos.clone());
            }
            prev_in = Some(inside);
            pos += s.len();
        }
        // Cut the remaining tail of `e` at each point in turn.
        let mut current = e;
        let mut offset = Q::zero();
        for c in cuts {
            let moved = split(&sub_graph, &sub_phi, current, &(&c - &offset))?;
            subdivision = subdivision.then(&moved.map);
            sub_graph = moved.graph;
            sub_phi = moved.guide;
            let new = sub_graph.edge_count() - 1;
            let end = pieces[current].to.clone();
            pieces[current].to = c.clone();
            pieces.push(Seg { edge: e, from: c.clone(), to: end });
            current = new;
            offset = c;
        }
    }
    let in_forest: Vec<usize> = (0..sub_graph.edge_count())
        .filter(|x| {
            let img = &sub_phi.edge_image[*x];
            !img.is_trivial() && img.segs.iter().all(|s| forest.contains(&s.edge))
        })
        .collect();
    let (c, cmap) = sub_graph.collapse_forest(&in_forest).map_err(|e| match e {
        Error::ForestHasCycle => Error::PreimageNotForest(k),
        other => other,
    })?;
    let collapse = collapse_morphism(&sub_graph, &c, &cmap);
    Ok(CollapsedStage { subdivision, forest: in_forest, collapse, pieces })
}

/// Pulls the forest `forest` of the last stage back to every stage and collapses.
pub fn collapse_along_path(path: &FoldingPath, forest: &[usize]) -> Result<CollapsedPath> {
    let last = &path.stages[path.len()].graph;
    if last.collapse_forest(forest).is_err() {
        return Err(Error::ForestHasCycle);
    }
    let stages: Vec<CollapsedStage> = (0..=path.len()).map(|k| pull_back(path, k, forest)).collect::<Result<_>>()?;
    let mut maps = Vec::with_capacity(path.len());
    for k in 0..path.len() {
        let here = &stages[k];
        let next = &stages[k + 1];
        let fold = &path.folds[k].map;
        let g = &path.stages[k].graph;
        let src = here.graph();
        let sub_g = &here.subdivision.target;
        let mut edge_image = vec![Path::constant(Point::Vertex(0)); src.edge_count()];
        for (x, m) in cmap_edges(here).into_iter().enumerate() {
            if let Some(y) = m {
                let seg = here.pieces[x].clone();
                let piece = Path::from_segs(g, Point::on_edge(g, seg.edge, &seg.from), [seg]);
                edge_image[y] = next.apply_path(&fold.path_image(&piece));
            }
        }
        let mut vertex_image = vec![Point::Vertex(0); src.vertex_count()];
        for x in 0..sub_g.vertex_count() {
            let y = here.collapse.vertex_image[x].vertex().expect("collapse maps vertices to vertices");
            let p = location(here, g, x);
            vertex_image[y] = next.apply_point(&fold.point_image(&p));
        }
        maps.push(GraphMorphism::new(src.clone(), next.graph().clone(), vertex_image, edge_image)?);
    }
    Ok(CollapsedPath { stages, maps })
}

/// For each subdivided edge, the collapsed edge it becomes.
fn cmap_edges(st: &CollapsedStage) -> Vec<Option<usize>> {
    st.collapse
        .edge_image
        .iter()
        .map(|p| if p.is_trivial() { None } else { Some(p.segs[0].edge) })
        .collect()
}

/// Position in the original stage of vertex `x` of the subdivided graph.
fn location(st: &CollapsedStage, g: &MarkedGraph, x: usize) -> Point {
    if x < g.vertex_count() {
        return Point::Vertex(x);
    }
    let sub = &st.subdivision.target;
    let e = sub.edges().iter().find(|e| e.to == x).expect("subdivision vertex has an incoming piece");
    let piece = &st.pieces[e.id];
    Point::on_edge(g, piece.edge, &piece.to)
}

impl CollapsedPath {
    /// Checks, at every stage, that collapsing then following the induced map
    /// agrees with folding then collapsing.
    pub fn squares_commute(&self, path: &FoldingPath) -> bool {
        (0..self.maps.len()).all(|k| {
            let g = &path.stages[k].graph;
            let fold = &path.folds[k].map;
            let here = &self.stages[k];
            let next = &self.stages[k + 1];
            let edges_ok = (0..g.edge_count()).all(|e| {
                let p = Path::from_dirs(g, g.edge(e).from, &[Dir::new(e, true)]);
                let down_right = self.maps[k].path_image(&here.apply_path(&p));
                let right_down = next.apply_path(&fold.path_image(&p));
                down_right == right_down
            });
            let verts_ok = (0..g.vertex_count()).all(|v| {
                let p = Point::Vertex(v);
                self.maps[k].point_image(&here.apply_point(&p)) == next.apply_point(&fold.point_image(&p))
            });
            edges_ok && verts_ok
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::skora::skora_path;
    use crate::word::Word;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn empty_forest_changes_nothing() {
        let s = MarkedGraph::rose_with_labels(&[w("a"), w("ab")], &[q(1, 2), q(1, 1)]).unwrap();
        let t = MarkedGraph::rose(2, &[q(1, 2), q(1, 2)]).unwrap();
        let p = skora_path(&s, &t).unwrap();
        let c = collapse_along_path(&p, &[]).unwrap();
        for (k, st) in c.stages.iter().enumerate() {
            assert_eq!(st.graph(), &p.stages[k].graph);
        }
        assert!(c.squares_commute(&p));
    }

    #[test]
    fn random_paths_commute() {
        use crate::random::{random_graph, rng};
        let mut checked = 0;
        for seed in 0..30 {
            let mut r = rng(seed + 500);
            let s = random_graph(&mut r, 3, 3);
            let t = random_graph(&mut r, 3, 3);
            let p = skora_path(&s, &t).unwrap();
            let last = &p.stages[p.len()].graph;
            // A single non-loop edge is a forest.
            let Some(e) = last.edges().iter().find(|e| e.from != e.to) else { continue };
            match collapse_along_path(&p, &[e.id]) {
                Ok(c) => {
                    assert!(c.squares_commute(&p), "seed {seed}");
                    checked += 1;
                }
                Err(Error::PreimageNotForest(_)) => {}
                Err(other) => panic!("seed {seed}: {other}"),
            }
        }
        assert!(checked > 5, "{checked}");
    }
}
