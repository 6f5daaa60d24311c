//! Folding paths from a marked graph to a target, guided by an optimal map.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::folding::{fold_turn, max_foldable, Fold, Turn};
use crate::graph::MarkedGraph;
use crate::isometry::is_marked_isometric;
use crate::morphism::GraphMorphism;
use crate::optimal::optimal_map;
use crate::path::{Path, Point};
use crate::rational::Q;

const FOLD_CAP: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Unnormalized,
    Normalized,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    /// Unnormalized stage graph; the guide is an isometry on each edge.
    pub graph: MarkedGraph,
    pub guide: GraphMorphism,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldingPath {
    pub mode: Mode,
    /// Optimal map from the original source, before rescaling.
    pub initial: GraphMorphism,
    /// Edges of the source whose optimal image is a point, collapsed before folding.
    pub collapsed: Vec<usize>,
    pub stages: Vec<Stage>,
    pub folds: Vec<Fold>,
}

/// The rescaling of `f`'s source in which every edge has the length of its
/// image, with point-image edges collapsed; the guide becomes edge-isometric.
pub fn stretch_one_rescaling(f: &GraphMorphism) -> Result<(MarkedGraph, GraphMorphism, Vec<usize>)> {
    let s = &f.source;
    let degenerate: Vec<usize> = (0..s.edge_count()).filter(|e| f.edge_image[*e].is_trivial()).collect();
    let (c, map) = s.collapse_forest(&degenerate)?;
    let mut lengths = vec![Q::zero(); c.edge_count()];
    let mut edge_image = vec![Path::constant(Point::Vertex(0)); c.edge_count()];
    for (e, m) in map.edge_map.iter().enumerate() {
        if let Some(x) = m {
            lengths[*x] = f.edge_image[e].length();
            edge_image[*x] = f.edge_image[e].clone();
        }
    }
    let mut vertex_image = vec![Point::Vertex(0); c.vertex_count()];
    for (v, x) in map.vertex_map.iter().enumerate() {
        vertex_image[*x] = f.vertex_image[v].clone();
    }
    let g = c.with_lengths(&lengths)?;
    let guide = GraphMorphism::new(g.clone(), f.target.clone(), vertex_image, edge_image)?;
    Ok((g, guide, degenerate))
}

/// Lowest vertex, then least direction pair.
pub fn next_turn(f: &GraphMorphism) -> Result<Option<Turn>> {
    Ok(f.illegal_turns()?.into_iter().map(|(v, a, b)| Turn { vertex: v, a, b }).min())
}

impl FoldingPath {
    /// Folds maximally, one illegal turn at a time, until the guide is an
    /// isometry onto the target.
    pub fn skora(s: &MarkedGraph, t: &MarkedGraph, mode: Mode) -> Result<FoldingPath> {
        FoldingPath::guided(optimal_map(s, t)?, mode)
    }

    /// Same scheduler, folding along any marking-compatible morphism.
    pub fn guided(initial: GraphMorphism, mode: Mode) -> Result<FoldingPath> {
        let t = initial.target.clone();
        let t = &t;
        let (g, guide, collapsed) = stretch_one_rescaling(&initial)?;
        let mut path = FoldingPath { mode, initial, collapsed, stages: vec![Stage { graph: g, guide }], folds: Vec::new() };
        for _ in 0..FOLD_CAP {
            let last = path.stages.last().unwrap();
            let Some(turn) = next_turn(&last.guide)? else {
                if !is_marked_isometric(&last.graph, t) {
                    return Err(Error::InvalidGraph("guide is locally injective but not an isometry".into()));
                }
                return Ok(path);
            };
            let amount = max_foldable(&last.graph, &last.guide, &turn)?;
            let (h, fold, guide) = fold_turn(&last.graph, &last.guide, &turn, &amount)?;
            path.folds.push(fold);
            path.stages.push(Stage { graph: h, guide });
        }
        Err(Error::IterationCap("skora path"))
    }

    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    pub fn target(&self) -> &MarkedGraph {
        &self.initial.target
    }

    /// Stage graph as seen in the path's mode.
    pub fn stage_graph(&self, k: usize) -> MarkedGraph {
        let g = &self.stages[k].graph;
        match self.mode {
            Mode::Unnormalized => g.clone(),
            Mode::Normalized => g.normalize(),
        }
    }

    /// Scale factor applied to stage `k` in normalized mode.
    pub fn scale(&self, k: usize) -> Q {
        match self.mode {
            Mode::Unnormalized => Q::one(),
            Mode::Normalized => Q::one() / self.stages[k].graph.volume(),
        }
    }

    /// Both clocks at stage `k`: folds performed and total length folded.
    pub fn clocks(&self, k: usize) -> (usize, Q) {
        (k, self.folds[..k].iter().map(|f| f.amount.clone()).sum())
    }

    /// `phi_{st}` with `f_s = f_t ∘ phi_{st}`.
    pub fn decompose(&self, s: usize, t: usize) -> Result<GraphMorphism> {
        if s > t {
            return Err(Error::IndexOrder(s, t));
        }
        if t >= self.stages.len() {
            return Err(Error::OutOfRange(format!("stage {t} of {}", self.stages.len())));
        }
        let mut m = GraphMorphism::identity(&self.stages[s].graph);
        for f in &self.folds[s..t] {
            m = m.then(&f.map);
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("path serializes")
    }

    pub fn from_json(s: &str) -> Result<FoldingPath> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

pub fn skora_path(s: &MarkedGraph, t: &MarkedGraph) -> Result<FoldingPath> {
    FoldingPath::skora(s, t, Mode::Unnormalized)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_graph, random_word, rng};
    use crate::rational::q;
    use crate::word::Word;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn trivial_and_single_fold() {
        let t = MarkedGraph::rose(2, &[q(1, 2), q(1, 2)]).unwrap();
        assert!(skora_path(&t, &t).unwrap().is_empty());
        let s = MarkedGraph::rose_with_labels(&[w("a"), w("ab")], &[q(1, 2), q(1, 1)]).unwrap();
        let p = skora_path(&s, &t).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.folds[0].amount, q(1, 2));
        assert_eq!(p.clocks(1), (1, q(1, 2)));
    }

    #[test]
    fn random_paths() {
        for seed in 0..25 {
            let mut r = rng(seed);
            let s = random_graph(&mut r, 3, 3);
            let t = random_graph(&mut r, 3, 3);
            let p = skora_path(&s, &t).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            for (k, f) in p.folds.iter().enumerate() {
                assert_eq!(p.stages[k + 1].graph.volume(), p.stages[k].graph.volume() - &f.amount);
                assert!(f.map.then(&p.stages[k + 1].guide).same_map(&p.stages[k].guide));
            }
            let whole = p.decompose(0, p.len()).unwrap();
            assert!(whole.then(&p.stages[p.len()].guide).same_map(&p.stages[0].guide));
            let words: Vec<Word> = (0..5).map(|_| random_word(&mut r, 3, 6)).collect();
            for word in &words {
                let mut prev: Option<Q> = None;
                for st in &p.stages {
                    let l = st.graph.translation_length(word).unwrap();
                    if let Some(pl) = &prev {
                        assert!(l <= *pl);
                    }
                    prev = Some(l);
                }
                assert!(prev.unwrap() >= t.translation_length(word).unwrap());
            }
        }
    }
}

#[cfg(test)]
mod stress {
    use super::*;
    use crate::random::{random_graph, rng};

    #[test]
    #[ignore]
    fn fold_counts() {
        let mut counts = Vec::new();
        for seed in 0..200 {
            let mut r = rng(1000 + seed);
            let s = random_graph(&mut r, 3, 3);
            let t = random_graph(&mut r, 3, 3);
            counts.push(skora_path(&s, &t).unwrap().len());
        }
        counts.sort();
        eprintln!("folds: median {} max {}", counts[100], counts[199]);
    }
}
