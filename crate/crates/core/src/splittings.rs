//! Free factors as canonical core graphs, one-edge free and cyclic
//! splittings, common refinements, and free-factor chains.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dir, MarkedGraph, Violation};
use crate::isometry::is_marked_isometric;
use crate::rational::Q;
use crate::stallings::{express_in, is_basis, substitute, SubgroupGraph};
use crate::whitehead::minimize;
use crate::word::{letter_index, signed_letters, Letter, Word};

/// Result of a search with an explicit budget.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "witness", rename_all = "snake_case")]
pub enum Bounded<T> {
    Found(T),
    Exhausted,
}

impl<T> Bounded<T> {
    pub fn found(self) -> Option<T> {
        match self {
            Bounded::Found(t) => Some(t),
            Bounded::Exhausted => None,
        }
    }
}

/// Conjugacy class of a finitely generated subgroup, stored as its folded
/// core graph in least BFS numbering. Vertex groups of free and cyclic
/// splittings both use it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FreeFactor {
    pub rank: usize,
    pub vertices: usize,
    /// `(from, positive letter, to)`, sorted.
    pub edges: Vec<(usize, Letter, usize)>,
}

fn max_letter(edges: &[(usize, Letter, usize)]) -> usize {
    edges.iter().map(|e| e.1.unsigned_abs() as usize).max().unwrap_or(0)
}

fn adjacency(vertices: usize, edges: &[(usize, Letter, usize)]) -> Vec<BTreeMap<usize, usize>> {
    // Keyed by letter_index, which orders a1 < A1 < a2 < ...
    let mut adj = vec![BTreeMap::new(); vertices];
    for &(u, x, v) in edges {
        adj[u].insert(letter_index(x), v);
        adj[v].insert(letter_index(-x), u);
    }
    adj
}

fn letter_at(i: usize) -> Letter {
    let g = (i / 2 + 1) as Letter;
    if i % 2 == 0 {
        g
    } else {
        -g
    }
}

fn relabel(adj: &[BTreeMap<usize, usize>], start: usize) -> Vec<(usize, Letter, usize)> {
    let mut num = vec![usize::MAX; adj.len()];
    num[start] = 0;
    let mut next = 1;
    let mut q = VecDeque::from([start]);
    let mut edges = Vec::new();
    while let Some(u) = q.pop_front() {
        for (&i, &v) in &adj[u] {
            if num[v] == usize::MAX {
                num[v] = next;
                next += 1;
                q.push_back(v);
            }
            let x = letter_at(i);
            if x > 0 {
                edges.push((num[u], x, num[v]));
            }
        }
    }
    edges.sort();
    edges
}

pub fn factor_canonicalize(generators: &[Word]) -> Result<FreeFactor> {
    let core = SubgroupGraph::from_generators(generators).prune(None);
    if core.vertices == 0 {
        return Err(Error::TrivialSubgroup);
    }
    let adj = adjacency(core.vertices, &core.edges);
    let edges = (0..core.vertices).map(|s| relabel(&adj, s)).min().unwrap();
    Ok(FreeFactor { rank: core.rank(), vertices: core.vertices, edges })
}

impl FreeFactor {
    fn adj(&self) -> Vec<BTreeMap<usize, usize>> {
        adjacency(self.vertices, &self.edges)
    }

    /// A free basis of a representative, read at vertex 0.
    pub fn generators(&self) -> Vec<Word> {
        let adj = self.adj();
        let mut label: Vec<Option<Word>> = vec![None; self.vertices];
        label[0] = Some(Word::identity());
        let mut tree = BTreeSet::new();
        let mut q = VecDeque::from([0]);
        while let Some(u) = q.pop_front() {
            for (&i, &v) in &adj[u] {
                if label[v].is_none() {
                    let x = letter_at(i);
                    label[v] = Some(label[u].as_ref().unwrap() * &Word::letter(x));
                    tree.insert(if x > 0 { (u, x, v) } else { (v, -x, u) });
                    q.push_back(v);
                }
            }
        }
        self.edges
            .iter()
            .filter(|e| !tree.contains(*e))
            .map(|&(u, x, v)| {
                let l = |k: usize| label[k].clone().unwrap();
                &(&l(u) * &Word::letter(x)) * &l(v).inverse()
            })
            .collect()
    }

    pub fn contains_word(&self, w: &Word) -> bool {
        match factor_canonicalize(std::slice::from_ref(w)) {
            Ok(c) => factor_contains(self, &c),
            Err(_) => true,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("factor serializes")
    }
}

/// Whether a conjugate of `b` lies in `a`: some label-preserving map of
/// `b`'s core into `a`'s core.
pub fn factor_contains(a: &FreeFactor, b: &FreeFactor) -> bool {
    let (aa, ba) = (a.adj(), b.adj());
    (0..a.vertices).any(|start| {
        let mut img = vec![usize::MAX; b.vertices];
        img[0] = start;
        let mut q = VecDeque::from([0]);
        while let Some(u) = q.pop_front() {
            for (i, &v) in &ba[u] {
                let Some(&t) = aa[img[u]].get(i) else { return false };
                if img[v] == usize::MAX {
                    img[v] = t;
                    q.push_back(v);
                } else if img[v] != t {
                    return false;
                }
            }
        }
        true
    })
}

/// An element of the subgroup generated by `gens` conjugate to `c`.
pub fn conjugate_into(gens: &[Word], c: &Word) -> Option<Word> {
    let g = SubgroupGraph::from_generators(gens);
    let rank = max_letter(&g.edges).max(c.max_generator());
    let mut label: Vec<Option<Word>> = vec![None; g.vertices];
    label[0] = Some(Word::identity());
    let mut q = VecDeque::from([0]);
    while let Some(u) = q.pop_front() {
        for x in signed_letters(rank) {
            if let Some(v) = g.step(u, x) {
                if label[v].is_none() {
                    label[v] = Some(label[u].as_ref().unwrap() * &Word::letter(x));
                    q.push_back(v);
                }
            }
        }
    }
    let r = c.cyclic_reduce();
    let l = r.letters();
    for (v, lv) in label.iter().enumerate() {
        let lv = lv.as_ref()?;
        for s in 0..l.len().max(1) {
            let rot = Word::new(l[s..].iter().chain(&l[..s]).copied());
            if g.read(v, &rot) == Some(v) {
                return Some(rot.conjugate_by(lv));
            }
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplittingKind {
    Amalgam,
    Hnn,
}

/// One-edge free splitting `A * B` or `A *`, with a free basis witnessing
/// that the vertex groups are free factors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FreeSplitting {
    pub kind: SplittingKind,
    /// Sorted; one entry for HNN, two for an amalgam.
    pub vertex_groups: Vec<FreeFactor>,
    pub basis: Vec<Word>,
    /// Basis indices generating each vertex group, parallel to `vertex_groups`.
    pub sides: Vec<Vec<usize>>,
}

impl PartialEq for FreeSplitting {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.vertex_groups == other.vertex_groups
    }
}

impl Eq for FreeSplitting {}

fn pick(basis: &[Word], idx: &[usize]) -> Vec<Word> {
    idx.iter().map(|i| basis[*i].clone()).collect()
}

impl FreeSplitting {
    pub fn hnn(basis: Vec<Word>, stable: usize) -> Result<FreeSplitting> {
        let n = basis.len();
        if stable >= n || n < 2 {
            return Err(Error::OutOfRange(format!("stable letter {stable} of {n}")));
        }
        if !is_basis(&basis, n) {
            return Err(Error::InvalidWitness("not a free basis".into()));
        }
        let side: Vec<usize> = (0..n).filter(|i| *i != stable).collect();
        let a = factor_canonicalize(&pick(&basis, &side))?;
        Ok(FreeSplitting { kind: SplittingKind::Hnn, vertex_groups: vec![a], basis, sides: vec![side] })
    }

    pub fn amalgam(basis: Vec<Word>, side: &[usize]) -> Result<FreeSplitting> {
        let n = basis.len();
        let s: BTreeSet<usize> = side.iter().copied().filter(|i| *i < n).collect();
        if s.is_empty() || s.len() == n || s.len() != side.len() {
            return Err(Error::OutOfRange("amalgam side must be a proper non-empty index set".into()));
        }
        if !is_basis(&basis, n) {
            return Err(Error::InvalidWitness("not a free basis".into()));
        }
        let p: Vec<usize> = s.iter().copied().collect();
        let q: Vec<usize> = (0..n).filter(|i| !s.contains(i)).collect();
        let mut parts = vec![(factor_canonicalize(&pick(&basis, &p))?, p), (factor_canonicalize(&pick(&basis, &q))?, q)];
        parts.sort();
        let (vertex_groups, sides) = parts.into_iter().unzip();
        Ok(FreeSplitting { kind: SplittingKind::Amalgam, vertex_groups, basis, sides })
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Index of the representative vertex group: larger rank, then canonical order.
    pub fn representative_index(&self) -> usize {
        let mut best = 0;
        for (i, g) in self.vertex_groups.iter().enumerate() {
            if g.rank > self.vertex_groups[best].rank {
                best = i;
            }
        }
        best
    }

    pub fn representative(&self) -> &FreeFactor {
        &self.vertex_groups[self.representative_index()]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("splitting serializes")
    }
}

/// One-edge splitting with infinite cyclic edge group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclicSplitting {
    pub kind: SplittingKind,
    pub vertex_groups: Vec<FreeFactor>,
    /// Least cyclic normal form of the generator or its inverse.
    pub edge: Word,
}

/// Spanning tree preferring edges outside `avoid`, as a parent array rooted at `root`.
pub(crate) fn tree_avoiding(g: &MarkedGraph, root: usize, avoid: &[usize]) -> Vec<Option<Dir>> {
    let n = g.vertex_count();
    let mut uf: Vec<usize> = (0..n).collect();
    fn find(uf: &mut [usize], mut x: usize) -> usize {
        while uf[x] != x {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        x
    }
    let order = (0..g.edge_count()).filter(|e| !avoid.contains(e)).chain(avoid.iter().copied());
    let mut keep = Vec::new();
    for e in order {
        let ed = g.edge(e);
        let (a, b) = (find(&mut uf, ed.from), find(&mut uf, ed.to));
        if a != b {
            uf[a] = b;
            keep.push(e);
        }
    }
    tree_from_edges(g, root, &keep)
}

pub(crate) fn tree_from_edges(g: &MarkedGraph, root: usize, keep: &[usize]) -> Vec<Option<Dir>> {
    let mut parent = vec![None; g.vertex_count()];
    let mut seen = vec![false; g.vertex_count()];
    seen[root] = true;
    let mut q = VecDeque::from([root]);
    while let Some(u) = q.pop_front() {
        for d in g.directions_at(u) {
            let w = g.head(d);
            if keep.contains(&d.edge) && !seen[w] {
                seen[w] = true;
                parent[w] = Some(d);
                q.push_back(w);
            }
        }
    }
    parent
}

/// How an edge cuts a fundamental-loop basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Cut {
    /// Non-separating: the loop through the edge is the stable letter.
    Loop(usize),
    /// Separating: basis indices on the tail side.
    Side(Vec<usize>),
    /// Non-separating but in the tree; not a subset cut of this basis.
    Tangled,
}

pub(crate) struct LoopBasis {
    pub basis: Vec<Word>,
    /// Non-tree edge of each basis loop.
    pub loop_edges: Vec<usize>,
    pub cuts: Vec<Cut>,
}

/// Fundamental-loop basis for a tree avoiding `avoid`, and every edge's cut.
pub(crate) fn loop_basis(g: &MarkedGraph, avoid: &[usize]) -> LoopBasis {
    let tree = tree_avoiding(g, g.basepoint(), avoid);
    let loops = g.fundamental_loops(&tree);
    let basis: Vec<Word> = loops.iter().map(|(_, p)| g.path_label(p)).collect();
    let cuts = (0..g.edge_count())
        .map(|e| match loops.iter().position(|(id, _)| *id == e) {
            Some(i) => Cut::Loop(i),
            None => {
                let side = g.component_of(g.edge(e).from, &[e]);
                if side[g.edge(e).to] {
                    return Cut::Tangled;
                }
                Cut::Side((0..loops.len()).filter(|i| side[g.edge(loops[*i].0).from]).collect())
            }
        })
        .collect();
    LoopBasis { basis, loop_edges: loops.iter().map(|(e, _)| *e).collect(), cuts }
}

fn splitting_of(lb: &LoopBasis, e: usize) -> Result<FreeSplitting> {
    match &lb.cuts[e] {
        Cut::Loop(i) => FreeSplitting::hnn(lb.basis.clone(), *i),
        Cut::Side(s) => FreeSplitting::amalgam(lb.basis.clone(), s),
        Cut::Tangled => Err(Error::InvalidGraph(format!("edge {e} lies in the tree"))),
    }
}

/// The one-edge free splitting of each edge, collapsing all other edges.
/// The graph itself is the corresponding vertex of the splitting complex.
pub fn upsilon(g: &MarkedGraph) -> Result<Vec<FreeSplitting>> {
    (0..g.edge_count()).map(|e| splitting_of(&loop_basis(g, &[e]), e)).collect()
}

/// Like [`upsilon`], with `None` for edges carrying no free splitting
/// (such as a hair at the basepoint).
pub fn edge_splittings(g: &MarkedGraph) -> Vec<Option<FreeSplitting>> {
    (0..g.edge_count()).map(|e| splitting_of(&loop_basis(g, &[e]), e).ok()).collect()
}

pub fn upsilon_edge(g: &MarkedGraph, e: usize) -> Result<FreeSplitting> {
    if e >= g.edge_count() {
        return Err(Error::OutOfRange(format!("edge {e}")));
    }
    splitting_of(&loop_basis(g, &[e]), e)
}

/// Longest edge, lowest id among ties.
pub fn longest_edge(g: &MarkedGraph) -> usize {
    let mut best = 0;
    for e in 1..g.edge_count() {
        if g.length(e) > g.length(best) {
            best = e;
        }
    }
    best
}

/// Corank-one free factor from the longest edge. For a separating edge
/// the larger side (ties: the side holding the lowest loop) is completed
/// by all but the last basis element of the other side.
pub fn upsilon_f(g: &MarkedGraph) -> Result<(usize, FreeFactor)> {
    let e = longest_edge(g);
    let lb = loop_basis(g, &[e]);
    let n = lb.basis.len();
    let idx: Vec<usize> = match &lb.cuts[e] {
        Cut::Loop(i) => (0..n).filter(|k| k != i).collect(),
        Cut::Tangled => unreachable!("the longest edge is avoided"),
        Cut::Side(s) => {
            let other: Vec<usize> = (0..n).filter(|k| !s.contains(k)).collect();
            let (big, small) = if s.len() > other.len() || (s.len() == other.len() && s.first() < other.first()) {
                (s.clone(), other)
            } else {
                (other, s.clone())
            };
            let mut idx = big;
            idx.extend(&small[..small.len() - 1]);
            idx.sort();
            idx
        }
    };
    Ok((e, factor_canonicalize(&pick(&lb.basis, &idx))?))
}

/// A two-edge free splitting, given as a marked graph whose other edges
/// are collapsed; collapsing either of `edges` yields the two splittings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Refinement {
    Same,
    TwoEdge { graph: MarkedGraph, edges: [usize; 2] },
}

impl Refinement {
    /// Re-derives both collapses and compares them with `x` and `y`.
    pub fn validates(&self, x: &FreeSplitting, y: &FreeSplitting) -> bool {
        match self {
            Refinement::Same => x == y,
            Refinement::TwoEdge { graph, edges } => {
                edges[0] != edges[1]
                    && edges.iter().all(|e| *e < graph.edge_count())
                    && graph.validate().iter().all(|v| matches!(v, Violation::NotMinimal(_)))
                    && upsilon_edge(graph, edges[0]).ok().as_ref() == Some(x)
                    && upsilon_edge(graph, edges[1]).ok().as_ref() == Some(y)
            }
        }
    }
}

fn unit() -> Q {
    Q::from_integer(1.into())
}

/// Graph with vertex groups `parts[i]` (loops labelled by basis words) on a
/// path of arcs `0 - 1 - ...`; returns it with the arc edge ids.
fn arc_graph(basis: &[Word], parts: &[Vec<usize>]) -> Result<(MarkedGraph, Vec<usize>)> {
    let mut edges = Vec::new();
    for (v, p) in parts.iter().enumerate() {
        for i in p {
            edges.push((v, v, unit(), basis[*i].clone()));
        }
    }
    let mut arcs = Vec::new();
    for v in 1..parts.len() {
        arcs.push(edges.len());
        edges.push((v - 1, v, unit(), Word::identity()));
    }
    let g = MarkedGraph::from_parts(parts.len(), edges, 0)?.with_rank(basis.len());
    Ok((g, arcs))
}

/// Two-edge graph realizing the cuts `a` and `b` of one basis, when they are compatible.
fn pattern_graph(basis: &[Word], a: &Cut, b: &Cut) -> Option<(MarkedGraph, [usize; 2])> {
    let n = basis.len();
    let all: BTreeSet<usize> = (0..n).collect();
    let comp = |s: &[usize]| -> Vec<usize> { all.iter().copied().filter(|i| !s.contains(i)).collect() };
    match (a, b) {
        (Cut::Loop(i), Cut::Loop(j)) if i != j => {
            let g = MarkedGraph::rose_with_labels(basis, &vec![unit(); n]).ok()?;
            Some((g, [*i, *j]))
        }
        (Cut::Loop(i), Cut::Side(s)) | (Cut::Side(s), Cut::Loop(i)) => {
            let (p, q) = if s.contains(i) { (s.clone(), comp(s)) } else { (comp(s), s.clone()) };
            if q.is_empty() {
                return None;
            }
            let (g, arcs) = arc_graph(basis, &[p.clone(), q]).ok()?;
            let lp = p.iter().position(|k| k == i)?;
            Some(if matches!(a, Cut::Loop(_)) { (g, [lp, arcs[0]]) } else { (g, [arcs[0], lp]) })
        }
        (Cut::Side(s), Cut::Side(t)) => {
            for p in [s.clone(), comp(s)] {
                for q in [t.clone(), comp(t)] {
                    let (ps, qs): (BTreeSet<usize>, BTreeSet<usize>) = (p.iter().copied().collect(), q.iter().copied().collect());
                    if ps.len() < qs.len() && ps.is_subset(&qs) {
                        let mid: Vec<usize> = qs.difference(&ps).copied().collect();
                        let (g, arcs) = arc_graph(basis, &[p.clone(), mid, comp(&q)]).ok()?;
                        return Some((g, [arcs[0], arcs[1]]));
                    }
                }
            }
            None
        }
        _ => None,
    }
}

fn cuts_matching(basis: &[Word], x: &FreeSplitting) -> Vec<Cut> {
    let n = basis.len();
    let mut out = Vec::new();
    match x.kind {
        SplittingKind::Hnn => {
            for i in 0..n {
                if FreeSplitting::hnn(basis.to_vec(), i).ok().as_ref() == Some(x) {
                    out.push(Cut::Loop(i));
                }
            }
        }
        SplittingKind::Amalgam => {
            // Sides containing index 0 cover each partition once.
            for mask in 0u32..(1 << (n - 1)) {
                let side: Vec<usize> = std::iter::once(0).chain((1..n).filter(|i| mask & (1 << (i - 1)) != 0)).collect();
                if side.len() < n && FreeSplitting::amalgam(basis.to_vec(), &side).ok().as_ref() == Some(x) {
                    out.push(Cut::Side(side));
                }
            }
        }
    }
    out
}

/// Default number of candidate bases examined by [`common_refinement`].
pub const REFINEMENT_BUDGET: usize = 2000;

/// Searches bases drawn from both witnesses and their pairwise products
/// for a two-edge splitting collapsing to `x` and to `y`.
pub fn common_refinement(x: &FreeSplitting, y: &FreeSplitting, budget: usize) -> Bounded<Refinement> {
    if x == y {
        return Bounded::Found(Refinement::Same);
    }
    let n = x.rank();
    if y.rank() != n {
        return Bounded::Exhausted;
    }
    let mut pool: Vec<Word> = Vec::new();
    let push = |w: Word, pool: &mut Vec<Word>| {
        if !w.is_trivial() && !pool.contains(&w) {
            pool.push(w);
        }
    };
    for w in x.basis.iter().chain(&y.basis) {
        push(w.clone(), &mut pool);
    }
    for u in &x.basis {
        for v in &y.basis {
            for w in [u * v, u * &v.inverse(), v * u, &v.inverse() * u] {
                push(w, &mut pool);
            }
        }
    }
    let mut tried = 0;
    let mut candidates: Vec<Vec<Word>> = vec![x.basis.clone(), y.basis.clone()];
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        for basis in std::mem::take(&mut candidates) {
            tried += 1;
            if tried > budget {
                return Bounded::Exhausted;
            }
            if !is_basis(&basis, n) {
                continue;
            }
            for a in cuts_matching(&basis, x) {
                for b in cuts_matching(&basis, y) {
                    if let Some((graph, edges)) = pattern_graph(&basis, &a, &b) {
                        let r = Refinement::TwoEdge { graph, edges };
                        if r.validates(x, y) {
                            return Bounded::Found(r);
                        }
                    }
                }
            }
        }
        // Next n-subset of the pool in lexicographic order.
        let Some(i) = (0..n).rev().find(|&i| idx[i] < pool.len() - n + i) else {
            return Bounded::Exhausted;
        };
        idx[i] += 1;
        for j in i + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
        candidates.push(idx.iter().map(|k| pool[*k].clone()).collect());
    }
}

/// The two-edge refinement read off a graph at two of its edges.
pub fn refinement_in(g: &MarkedGraph, e: usize, f: usize) -> Refinement {
    Refinement::TwoEdge { graph: g.clone(), edges: [e, f] }
}

/// `A *_<c> <B, c>` for an amalgam `A * B` and `c` in `A` up to conjugacy.
pub fn edge_fold(x: &FreeSplitting, c: &Word) -> Result<CyclicSplitting> {
    if c.is_trivial() {
        return Err(Error::TrivialWord);
    }
    let (root, k) = c.root();
    if k > 1 {
        return Err(Error::ProperPower { root: root.to_string() });
    }
    if x.kind != SplittingKind::Amalgam {
        return Err(Error::InvalidWitness("edge folds need an amalgam".into()));
    }
    let side = (0..2).find(|i| x.vertex_groups[*i].contains_word(c)).ok_or(Error::NotInFactor)?;
    let a_gens = pick(&x.basis, &x.sides[side]);
    let c_in = conjugate_into(&a_gens, c).ok_or(Error::NotInFactor)?;
    let mut b_gens = pick(&x.basis, &x.sides[1 - side]);
    b_gens.push(c_in);
    let mut vertex_groups = vec![x.vertex_groups[side].clone(), factor_canonicalize(&b_gens)?];
    vertex_groups.sort();
    let edge = c.cyclic_normal_form().min(c.inverse().cyclic_normal_form());
    Ok(CyclicSplitting { kind: SplittingKind::Amalgam, vertex_groups, edge })
}

/// A path in the free factor graph; consecutive factors are nested up to conjugacy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FfPath {
    pub factors: Vec<FreeFactor>,
}

impl FfPath {
    pub fn len(&self) -> usize {
        self.factors.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validates(&self, rank: usize) -> bool {
        !self.factors.is_empty()
            && self.factors.iter().all(|f| f.rank >= 1 && f.rank < rank)
            && self.factors.windows(2).all(|w| w[0] != w[1] && (factor_contains(&w[0], &w[1]) || factor_contains(&w[1], &w[0])))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FfWitness {
    Refinement(Refinement),
    /// Elements whose edge folds of `x` and `y` give the same cyclic splitting.
    Folds { x_word: Word, y_word: Word },
}

/// Chain of basis-index sets from `p` to `q` through nested subsets.
fn index_chain(p: &BTreeSet<usize>, q: &BTreeSet<usize>, n: usize) -> Result<Vec<BTreeSet<usize>>> {
    if p == q {
        return Ok(vec![p.clone()]);
    }
    if p.is_subset(q) || q.is_subset(p) {
        return Ok(vec![p.clone(), q.clone()]);
    }
    let meet: BTreeSet<usize> = p.intersection(q).copied().collect();
    if !meet.is_empty() {
        return Ok(vec![p.clone(), meet, q.clone()]);
    }
    let join: BTreeSet<usize> = p.union(q).copied().collect();
    if join.len() < n {
        return Ok(vec![p.clone(), join, q.clone()]);
    }
    if n < 3 {
        return Err(Error::RankTooSmall(n));
    }
    let (a, b) = (*p.iter().next().unwrap(), *q.iter().next().unwrap());
    let mut out = vec![p.clone()];
    for s in [BTreeSet::from([a]), BTreeSet::from([a, b]), BTreeSet::from([b]), q.clone()] {
        if out.last() != Some(&s) {
            out.push(s);
        }
    }
    Ok(out)
}

fn factors_of(basis: &[Word], chain: &[BTreeSet<usize>]) -> Result<Vec<FreeFactor>> {
    chain.iter().map(|s| factor_canonicalize(&s.iter().map(|i| basis[*i].clone()).collect::<Vec<_>>())).collect()
}

fn vertex_sets(cut: &Cut, n: usize) -> Vec<BTreeSet<usize>> {
    match cut {
        Cut::Loop(i) => vec![(0..n).filter(|k| k != i).collect()],
        Cut::Side(s) => vec![s.iter().copied().collect(), (0..n).filter(|k| !s.contains(k)).collect()],
        Cut::Tangled => Vec::new(),
    }
}

/// Smallest free factor containing `c` inside the vertex group `side` of
/// `x`, found by Whitehead minimization in that group's own basis.
fn factor_hull(x: &FreeSplitting, side: usize, c: &Word) -> Result<Vec<Word>> {
    let gens = pick(&x.basis, &x.sides[side]);
    let m = gens.len();
    let inside = conjugate_into(&gens, c).ok_or(Error::NotInFactor)?;
    let local = express_in(&gens, &inside).ok_or(Error::NotInFactor)?;
    if m == 1 {
        return Ok(gens);
    }
    let (min, auts) = minimize(&local, m);
    let letters: BTreeSet<Letter> = min.letters().iter().map(|l| l.abs()).collect();
    let mut out = Vec::new();
    for l in letters {
        let mut w = Word::letter(l);
        for a in auts.iter().rev() {
            w = a.inverse().apply(&w);
        }
        out.push(substitute(&w, &gens));
    }
    Ok(out)
}

/// Chain from `x`'s representative down to the hull of `c`, in `x`'s basis frame.
fn chain_to_hull(x: &FreeSplitting, c: &Word) -> Result<Vec<FreeFactor>> {
    let n = x.rank();
    let side = (0..2).find(|i| x.vertex_groups[*i].contains_word(c)).ok_or(Error::NotInFactor)?;
    let hull_gens = factor_hull(x, side, c)?;
    let hull = factor_canonicalize(&hull_gens)?;
    let a = x.vertex_groups[side].clone();
    let r = x.representative_index();
    let mut out = vec![x.vertex_groups[r].clone()];
    if r != side {
        if hull != a {
            let mut join = pick(&x.basis, &x.sides[r]);
            join.extend(hull_gens);
            out.push(factor_canonicalize(&join)?);
        } else {
            let p: BTreeSet<usize> = x.sides[r].iter().copied().collect();
            let q: BTreeSet<usize> = x.sides[side].iter().copied().collect();
            let chain = index_chain(&p, &q, n)?;
            out.extend(factors_of(&x.basis, &chain[1..chain.len() - 1])?);
            out.push(a);
        }
    }
    if out.last() != Some(&hull) {
        out.push(hull);
    }
    Ok(out)
}

fn dedup(mut v: Vec<FreeFactor>) -> Vec<FreeFactor> {
    v.dedup();
    v
}

/// Chain through vertex groups of the two-edge splitting, which are
/// subsets of one basis: `R(x) > V, ..., W < R(y)`.
fn via_components(g: &MarkedGraph, edges: &[usize; 2], lb: &LoopBasis, x: &FreeSplitting, y: &FreeSplitting) -> Result<Vec<FreeFactor>> {
    let n = lb.basis.len();
    let mut comp = vec![usize::MAX; g.vertex_count()];
    let mut count = 0;
    for v in 0..g.vertex_count() {
        if comp[v] == usize::MAX {
            for (u, inside) in g.component_of(v, edges).into_iter().enumerate() {
                if inside {
                    comp[u] = count;
                }
            }
            count += 1;
        }
    }
    let sets: Vec<BTreeSet<usize>> = (0..count)
        .map(|c| (0..n).filter(|i| !edges.contains(&lb.loop_edges[*i]) && comp[g.edge(lb.loop_edges[*i]).from] == c).collect())
        .filter(|s: &BTreeSet<usize>| !s.is_empty())
        .collect();
    let groups = factors_of(&lb.basis, &sets)?;
    let inside = |r: &FreeFactor| (0..sets.len()).find(|i| factor_contains(r, &groups[*i]));
    let (rx, ry) = (x.representative(), y.representative());
    let (i, j) = match (inside(rx), inside(ry)) {
        (Some(i), Some(j)) => (i, j),
        _ => return Err(Error::InvalidWitness("no vertex group of the refinement below a representative".into())),
    };
    let mut out = vec![rx.clone()];
    out.extend(factors_of(&lb.basis, &index_chain(&sets[i], &sets[j], n)?)?);
    out.push(ry.clone());
    Ok(out)
}

/// Explicit free-factor chain from the representative of `x` to that of `y`.
pub fn ff_adjacency_certificate(x: &FreeSplitting, y: &FreeSplitting, witness: &FfWitness) -> Result<FfPath> {
    let n = x.rank();
    let factors = match witness {
        FfWitness::Refinement(Refinement::Same) => {
            if x != y {
                return Err(Error::InvalidWitness("splittings differ".into()));
            }
            vec![x.representative().clone()]
        }
        FfWitness::Refinement(r @ Refinement::TwoEdge { graph, edges }) => {
            if !r.validates(x, y) {
                return Err(Error::InvalidWitness("refinement does not collapse to both splittings".into()));
            }
            let lb = loop_basis(graph, edges);
            let pick_set = |cut: &Cut, want: &FreeFactor| -> Result<BTreeSet<usize>> {
                for s in vertex_sets(cut, n) {
                    if &factors_of(&lb.basis, std::slice::from_ref(&s))?[0] == want {
                        return Ok(s);
                    }
                }
                Err(Error::InvalidWitness("representative not found in refinement basis".into()))
            };
            match (pick_set(&lb.cuts[edges[0]], x.representative()), pick_set(&lb.cuts[edges[1]], y.representative())) {
                (Ok(p), Ok(q)) => factors_of(&lb.basis, &index_chain(&p, &q, n)?)?,
                _ => via_components(graph, edges, &lb, x, y)?,
            }
        }
        FfWitness::Folds { x_word, y_word } => {
            if edge_fold(x, x_word)? != edge_fold(y, y_word)? {
                return Err(Error::InvalidWitness("edge folds differ".into()));
            }
            let mut v = chain_to_hull(x, x_word)?;
            let mut back = chain_to_hull(y, y_word)?;
            if v.last() != back.last() {
                return Err(Error::InvalidWitness("edge words have different hulls".into()));
            }
            back.pop();
            back.reverse();
            v.extend(back);
            v
        }
    };
    let path = FfPath { factors: dedup(factors) };
    if !path.validates(n) || path.factors[0] != *x.representative() || path.factors.last() != Some(y.representative()) {
        return Err(Error::InvalidWitness("chain failed validation".into()));
    }
    Ok(path)
}

/// Default shortness bound for tied factors.
pub const TIE_BOUND: i64 = 4;
const TREE_CAP: usize = 5000;

/// Every spanning tree of `g` (up to a cap), as edge lists.
fn spanning_trees(g: &MarkedGraph) -> Vec<Vec<usize>> {
    let (v, e) = (g.vertex_count(), g.edge_count());
    let mut out = Vec::new();
    let mut pick: Vec<usize> = Vec::new();
    fn rec(g: &MarkedGraph, v: usize, e: usize, start: usize, pick: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if out.len() >= TREE_CAP {
            return;
        }
        if pick.len() + 1 == v {
            out.push(pick.clone());
            return;
        }
        for k in start..e {
            let ed = g.edge(k);
            if ed.from == ed.to {
                continue;
            }
            pick.push(k);
            // Reject as soon as the chosen edges contain a cycle.
            let mut uf: Vec<usize> = (0..v).collect();
            let mut ok = true;
            for &p in pick.iter() {
                let (mut a, mut b) = (g.edge(p).from, g.edge(p).to);
                while uf[a] != a {
                    a = uf[a];
                }
                while uf[b] != b {
                    b = uf[b];
                }
                if a == b {
                    ok = false;
                    break;
                }
                uf[a] = b;
            }
            if ok {
                rec(g, v, e, k + 1, pick, out);
            }
            pick.pop();
        }
    }
    rec(g, v, e, 0, &mut pick, &mut out);
    out
}

/// Rank-`l` factors spanned by fundamental loops of length at most `k`
/// based at a common vertex, over all spanning trees.
pub fn short_factors(g: &MarkedGraph, l: usize, k: &Q) -> Result<BTreeSet<FreeFactor>> {
    let mut seen = BTreeSet::new();
    let mut out = BTreeSet::new();
    for tree_edges in spanning_trees(g) {
        for root in 0..g.vertex_count() {
            let tree = tree_from_edges(g, root, &tree_edges);
            let loops: Vec<(usize, Word)> = g
                .fundamental_loops(&tree)
                .into_iter()
                .filter(|(_, p)| &g.path_length(p) <= k)
                .map(|(e, p)| (e, g.path_label(&p)))
                .collect();
            if loops.len() < l {
                continue;
            }
            for subset in subsets(loops.len(), l) {
                let key: (Vec<usize>, Vec<usize>) = (tree_edges.clone(), subset.iter().map(|i| loops[*i].0).collect());
                if seen.insert(key) {
                    let gens: Vec<Word> = subset.iter().map(|i| loops[*i].1.clone()).collect();
                    out.insert(factor_canonicalize(&gens)?);
                }
            }
        }
    }
    Ok(out)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, k, 0, &mut cur, &mut out);
    out
}

/// A rank-`l` factor short in both graphs, least in canonical order.
pub fn is_tied(s: &MarkedGraph, t: &MarkedGraph, l: usize, k: &Q) -> Result<Bounded<FreeFactor>> {
    let n = s.rank();
    if t.rank() != n {
        return Err(Error::RankMismatch(n, t.rank()));
    }
    if l == 0 || l >= n {
        return Err(Error::OutOfRange(format!("factor rank {l} at rank {n}")));
    }
    let a = short_factors(s, l, k)?;
    let b = short_factors(t, l, k)?;
    Ok(match a.intersection(&b).next() {
        Some(f) => Bounded::Found(f.clone()),
        None => Bounded::Exhausted,
    })
}

/// Length of a validated chain of pairwise tied graphs from `s` to `t`.
pub fn dng_distance_upper(s: &MarkedGraph, t: &MarkedGraph, l: usize, k: &Q, chain: &[MarkedGraph]) -> Result<usize> {
    let (first, last) = match (chain.first(), chain.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidWitness("empty chain".into())),
    };
    if !is_marked_isometric(first, s) || !is_marked_isometric(last, t) {
        return Err(Error::InvalidWitness("chain endpoints differ from the inputs".into()));
    }
    for (i, w) in chain.windows(2).enumerate() {
        if is_tied(&w[0], &w[1], l, k)? == Bounded::Exhausted {
            return Err(Error::ChainBroken(i));
        }
    }
    Ok(chain.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{barbell, theta};
    use crate::random::{random_graph, rng};
    use crate::rational::{q, qi};

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn ws(s: &[&str]) -> Vec<Word> {
        s.iter().map(|x| w(x)).collect()
    }

    fn f(s: &[&str]) -> FreeFactor {
        factor_canonicalize(&ws(s)).unwrap()
    }

    fn rose(n: usize) -> MarkedGraph {
        MarkedGraph::rose(n, &vec![q(1, n as i64); n]).unwrap()
    }

    #[test]
    fn canonical_cores() {
        let a = f(&["a"]);
        assert_eq!((a.rank, a.vertices, a.edges.len()), (1, 1, 1));
        assert_eq!(f(&["a", "baB"]), f(&["baB", "a"]));
        assert_eq!(f(&["a", "baB"]).rank, 2);
        let ab = f(&["ab", "ba"]);
        assert_eq!((ab.rank, ab.vertices, ab.edges.len()), (2, 3, 4));
        assert_eq!(f(&["abA"]), f(&["b"]));
        assert_eq!(factor_canonicalize(&ws(&["aA"])), Err(Error::TrivialSubgroup));
        let g = f(&["ab", "caC"]);
        assert_eq!(factor_canonicalize(&g.generators()).unwrap(), g);
    }

    #[test]
    fn containment() {
        assert!(factor_contains(&f(&["a", "b"]), &f(&["a"])));
        assert!(factor_contains(&f(&["b"]), &f(&["abA"])));
        assert!(factor_contains(&f(&["a"]), &f(&["aa"])));
        assert!(!factor_contains(&f(&["aa"]), &f(&["a"])));
        assert!(!factor_contains(&f(&["a", "b"]), &f(&["c"])));
        let c = conjugate_into(&ws(&["a", "cbC"]), &w("b")).unwrap();
        assert_eq!(c, w("cbC"));
    }

    #[test]
    fn one_edge_splittings() {
        let r2 = upsilon(&rose(2)).unwrap();
        assert_eq!(r2[0].kind, SplittingKind::Hnn);
        assert_eq!(r2[0].vertex_groups, vec![f(&["b"])]);
        for s in upsilon(&theta([q(1, 3), q(1, 3), q(1, 3)])).unwrap() {
            assert_eq!((s.kind, s.vertex_groups[0].rank), (SplittingKind::Hnn, 1));
        }
        let bb = upsilon(&barbell(q(1, 4), q(1, 2), q(1, 4))).unwrap();
        assert_eq!(bb[1].kind, SplittingKind::Amalgam);
        assert_eq!(bb[1].vertex_groups, vec![f(&["a"]), f(&["b"])]);
    }

    #[test]
    fn corank_one_projection() {
        assert_eq!(upsilon_f(&rose(3)).unwrap(), (0, f(&["b", "c"])));
        assert_eq!(upsilon_f(&barbell(q(1, 4), q(1, 2), q(1, 4))).unwrap(), (1, f(&["a"])));
        let mut r = rng(3);
        for _ in 0..30 {
            let g = random_graph(&mut r, 3, 4);
            let (e, a) = upsilon_f(&g).unwrap();
            assert_eq!(a.rank, 2);
            assert!(g.length(e) * qi(g.edge_count() as i64) >= g.volume());
        }
    }

    #[test]
    fn refinements() {
        let base = ws(&["a", "b", "c"]);
        let x = FreeSplitting::hnn(base.clone(), 0).unwrap();
        let y = FreeSplitting::hnn(base.clone(), 1).unwrap();
        let r = common_refinement(&x, &y, REFINEMENT_BUDGET).found().unwrap();
        assert!(r.validates(&x, &y));
        assert_eq!(common_refinement(&x, &x, 0), Bounded::Found(Refinement::Same));
        assert_eq!(common_refinement(&x, &y, 0), Bounded::Exhausted);
        let z = FreeSplitting::amalgam(base.clone(), &[0]).unwrap();
        let u = FreeSplitting::amalgam(base, &[0, 1]).unwrap();
        for (p, q) in [(&x, &z), (&z, &u), (&y, &u)] {
            let r = common_refinement(p, q, REFINEMENT_BUDGET).found().unwrap();
            assert!(r.validates(p, q));
        }
    }

    #[test]
    fn graph_refinements_validate() {
        let mut r = rng(11);
        for _ in 0..10 {
            let g = random_graph(&mut r, 3, 4);
            let u = upsilon(&g).unwrap();
            for e in 0..g.edge_count() {
                for f in 0..g.edge_count() {
                    if e != f {
                        assert!(refinement_in(&g, e, f).validates(&u[e], &u[f]));
                    }
                }
            }
        }
    }

    #[test]
    fn edge_folds() {
        let x = FreeSplitting::amalgam(ws(&["a", "b"]), &[0]).unwrap();
        let z = edge_fold(&x, &w("a")).unwrap();
        assert_eq!(z.vertex_groups, {
            let mut v = vec![f(&["a"]), f(&["a", "b"])];
            v.sort();
            v
        });
        let x3 = FreeSplitting::amalgam(ws(&["a", "b", "c"]), &[0, 1]).unwrap();
        let z3 = edge_fold(&x3, &w("ab")).unwrap();
        assert_eq!(z3.edge, w("BA"));
        assert!(z3.vertex_groups.contains(&f(&["ab", "c"])));
        assert_eq!(edge_fold(&x, &w("aa")), Err(Error::ProperPower { root: "a".into() }));
        assert_eq!(edge_fold(&x3, &w("ac")), Err(Error::NotInFactor));
    }

    #[test]
    fn ff_chains() {
        let mut r = rng(5);
        for _ in 0..10 {
            let g = random_graph(&mut r, 3, 4);
            let u = upsilon(&g).unwrap();
            for e in 0..g.edge_count() {
                for f in 0..g.edge_count() {
                    let wit = FfWitness::Refinement(if e == f { Refinement::Same } else { refinement_in(&g, e, f) });
                    let p = ff_adjacency_certificate(&u[e], &u[f], &wit).unwrap_or_else(|err| panic!("{err} {e} {f} {}", g.to_json()));
                    assert!(p.len() <= 8 && p.validates(3));
                }
            }
        }
        let x = FreeSplitting::amalgam(ws(&["a", "b", "c"]), &[0, 1]).unwrap();
        let y = FreeSplitting::amalgam(ws(&["a", "b", "cab"]), &[0, 1]).unwrap();
        let wit = FfWitness::Folds { x_word: w("ab"), y_word: w("ab") };
        let p = ff_adjacency_certificate(&x, &y, &wit).unwrap();
        assert!(p.len() <= 8 && p.validates(3));
        let y2 = FreeSplitting::amalgam(ws(&["a", "b", "c"]), &[0]).unwrap();
        let bad = FfWitness::Folds { x_word: w("ab"), y_word: w("a") };
        assert!(ff_adjacency_certificate(&x, &y2, &bad).is_err());
    }

    #[test]
    fn tied_graphs() {
        let r3 = rose(3);
        let k = qi(TIE_BOUND);
        assert!(matches!(is_tied(&r3, &r3, 2, &k).unwrap(), Bounded::Found(_)));
        let other = MarkedGraph::rose_with_labels(&ws(&["a", "bc", "cbc"]), &vec![q(1, 3); 3]).unwrap();
        assert_eq!(is_tied(&r3, &other, 1, &k).unwrap(), Bounded::Found(f(&["a"])));
        assert_eq!(is_tied(&r3, &other, 1, &qi(0)).unwrap(), Bounded::Exhausted);
        assert!(is_tied(&r3, &r3, 3, &k).is_err());
        assert_eq!(dng_distance_upper(&r3, &r3, 1, &k, &[r3.clone()]).unwrap(), 0);
        assert_eq!(dng_distance_upper(&r3, &other, 1, &k, &[r3.clone(), other.clone()]).unwrap(), 1);
        assert_eq!(dng_distance_upper(&r3, &other, 1, &qi(0), &[r3.clone(), other.clone()]), Err(Error::ChainBroken(0)));
    }
}
