//! Stallings folding of label graphs, with witness paths.
//!
//! The input is a graph whose edges carry words ("super-edges"). Each
//! super-edge is subdivided into one atom per letter; an empty label
//! becomes an unlabeled atom whose endpoints are identified up front.
//! Folding identifies vertices through a union-find whose links store a
//! path of atoms with trivial label product, so any word read in the
//! folded graph can be pulled back to a genuine path in the input.

use std::collections::{BTreeMap, HashMap};

use crate::word::{Letter, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Atom {
    from: usize,
    to: usize,
    letter: Option<Letter>,
    sup: usize,
}

/// One traversed atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Step {
    atom: usize,
    fwd: bool,
}

impl Step {
    fn rev(self) -> Step {
        Step { atom: self.atom, fwd: !self.fwd }
    }
}

fn tighten_steps(steps: impl IntoIterator<Item = Step>) -> Vec<Step> {
    let mut out: Vec<Step> = Vec::new();
    for s in steps {
        if out.last() == Some(&s.rev()) {
            out.pop();
        } else {
            out.push(s);
        }
    }
    out
}

fn reverse_steps(p: &[Step]) -> Vec<Step> {
    p.iter().rev().map(|s| s.rev()).collect()
}

#[derive(Clone, Debug)]
pub struct Folded {
    original_vertices: usize,
    atoms: Vec<Atom>,
    parent: Vec<usize>,
    link: Vec<Vec<Step>>,
    /// `(root, signed letter) -> representative step`
    trans: HashMap<(usize, Letter), Step>,
}

impl Folded {
    /// Folds the graph on `vertices` vertices with the given labelled
    /// super-edges `(from, to, label)`.
    pub fn new(vertices: usize, super_edges: &[(usize, usize, Word)]) -> Folded {
        let mut atoms = Vec::new();
        let mut nv = vertices;
        for (k, (from, to, w)) in super_edges.iter().enumerate() {
            let m = w.len();
            if m == 0 {
                atoms.push(Atom { from: *from, to: *to, letter: None, sup: k });
                continue;
            }
            let mut prev = *from;
            for (i, &x) in w.letters().iter().enumerate() {
                let next = if i + 1 == m {
                    *to
                } else {
                    nv += 1;
                    nv - 1
                };
                atoms.push(Atom { from: prev, to: next, letter: Some(x), sup: k });
                prev = next;
            }
        }
        let mut f = Folded {
            original_vertices: vertices,
            atoms,
            parent: (0..nv).collect(),
            link: vec![Vec::new(); nv],
            trans: HashMap::new(),
        };
        for a in 0..f.atoms.len() {
            let at = f.atoms[a];
            if at.letter.is_none() && f.find(at.from) != f.find(at.to) {
                f.union(at.from, at.to, vec![Step { atom: a, fwd: true }]);
            }
        }
        f.fold();
        f
    }

    fn ends(&self, s: Step) -> (usize, usize, Letter) {
        let a = &self.atoms[s.atom];
        let x = a.letter.expect("labelled atom");
        if s.fwd {
            (a.from, a.to, x)
        } else {
            (a.to, a.from, -x)
        }
    }

    pub fn find(&self, mut v: usize) -> usize {
        while self.parent[v] != v {
            v = self.parent[v];
        }
        v
    }

    fn path_to_root(&self, mut v: usize) -> Vec<Step> {
        let mut out = Vec::new();
        while self.parent[v] != v {
            out.extend_from_slice(&self.link[v]);
            v = self.parent[v];
        }
        tighten_steps(out)
    }

    /// Trivially-labelled path between two vertices of the same class.
    fn bridge(&self, x: usize, y: usize) -> Vec<Step> {
        let mut p = self.path_to_root(x);
        p.extend(reverse_steps(&self.path_to_root(y)));
        tighten_steps(p)
    }

    fn union(&mut self, a: usize, b: usize, a_to_b: Vec<Step>) {
        let (ra, rb) = (self.find(a), self.find(b));
        debug_assert_ne!(ra, rb);
        let mut p = reverse_steps(&self.path_to_root(a));
        p.extend(a_to_b);
        p.extend(self.path_to_root(b));
        self.parent[ra] = rb;
        self.link[ra] = tighten_steps(p);
    }

    fn fold(&mut self) {
        loop {
            let mut changed = false;
            self.trans.clear();
            for a in 0..self.atoms.len() {
                if self.atoms[a].letter.is_none() {
                    continue;
                }
                for fwd in [true, false] {
                    let s = Step { atom: a, fwd };
                    let (start, end, x) = self.ends(s);
                    let key = (self.find(start), x);
                    match self.trans.get(&key).copied() {
                        None => {
                            self.trans.insert(key, s);
                        }
                        Some(t) => {
                            let (start2, end2, _) = self.ends(t);
                            if self.find(end) != self.find(end2) {
                                let mut p = vec![s.rev()];
                                p.extend(self.bridge(start, start2));
                                p.push(t);
                                self.union(end, end2, tighten_steps(p));
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        // Rebuild with final roots.
        self.trans.clear();
        for a in 0..self.atoms.len() {
            if self.atoms[a].letter.is_none() {
                continue;
            }
            for fwd in [true, false] {
                let s = Step { atom: a, fwd };
                let (start, _, x) = self.ends(s);
                let key = (self.find(start), x);
                self.trans.entry(key).or_insert(s);
            }
        }
    }

    /// Reads `w` from `start`; returns the atom path and its end vertex.
    fn read_steps(&self, start: usize, w: &Word) -> Option<(Vec<Step>, usize)> {
        let mut cur = start;
        let mut path = Vec::new();
        for &x in w.letters() {
            let s = *self.trans.get(&(self.find(cur), x))?;
            let (s0, s1, _) = self.ends(s);
            path.extend(self.bridge(cur, s0));
            path.push(s);
            cur = s1;
        }
        Some((path, cur))
    }

    /// A tight path of super-edges from `from` to `to` (original vertices)
    /// whose label product is `w`, if one exists.
    pub fn realize(&self, from: usize, to: usize, w: &Word) -> Option<Vec<(usize, bool)>> {
        let (mut path, end) = self.read_steps(from, w)?;
        if self.find(end) != self.find(to) {
            return None;
        }
        path.extend(self.bridge(end, to));
        Some(self.to_super_path(&tighten_steps(path)))
    }

    fn to_super_path(&self, steps: &[Step]) -> Vec<(usize, bool)> {
        let mut out = Vec::new();
        for s in steps {
            let a = &self.atoms[s.atom];
            let end = if s.fwd { a.to } else { a.from };
            if end < self.original_vertices {
                out.push((a.sup, s.fwd));
            }
        }
        out
    }

    pub fn same_class(&self, x: usize, y: usize) -> bool {
        self.find(x) == self.find(y)
    }

    /// True when every generator `a_1..a_rank` is readable as a loop at `base`.
    pub fn image_is_everything(&self, base: usize, rank: usize) -> bool {
        (1..=rank as Letter).all(|i| {
            self.read_steps(base, &Word::letter(i))
                .is_some_and(|(_, end)| self.same_class(end, base))
        })
    }

    /// The folded graph: vertices are union-find roots, edges carry positive letters.
    pub fn folded_edges(&self) -> (Vec<usize>, Vec<(usize, Letter, usize)>) {
        let mut roots: Vec<usize> = (0..self.parent.len()).map(|v| self.find(v)).collect();
        roots.sort_unstable();
        roots.dedup();
        let mut edges = Vec::new();
        let mut keys: Vec<_> = self.trans.iter().filter(|((_, x), _)| *x > 0).collect();
        keys.sort_by_key(|(k, _)| **k);
        for ((r, x), s) in keys {
            let (_, end, _) = self.ends(*s);
            edges.push((*r, *x, self.find(end)));
        }
        (roots, edges)
    }
}

/// A folded, based label graph of a finitely generated subgroup.
#[derive(Clone, Debug)]
pub struct SubgroupGraph {
    /// Vertex 0 is the basepoint.
    pub vertices: usize,
    /// `(from, positive letter, to)`
    pub edges: Vec<(usize, Letter, usize)>,
}

impl SubgroupGraph {
    pub fn from_generators(gens: &[Word]) -> SubgroupGraph {
        let sup: Vec<_> = gens
            .iter()
            .filter(|g| !g.is_trivial())
            .map(|g| (0usize, 0usize, g.clone()))
            .collect();
        let f = Folded::new(1, &sup);
        let (roots, edges) = f.folded_edges();
        let base = f.find(0);
        // Renumber with the basepoint first, then prune hairs away from it.
        let mut order = vec![base];
        order.extend(roots.into_iter().filter(|r| *r != base));
        let idx: BTreeMap<usize, usize> = order.iter().enumerate().map(|(i, r)| (*r, i)).collect();
        let edges = edges.into_iter().map(|(u, x, v)| (idx[&u], x, idx[&v])).collect();
        let g = SubgroupGraph { vertices: order.len(), edges };
        g.prune(Some(0))
    }

    /// Removes valence-one vertices repeatedly, except `keep`.
    pub fn prune(&self, keep: Option<usize>) -> SubgroupGraph {
        let mut alive = vec![true; self.vertices];
        let mut edges = self.edges.clone();
        loop {
            let mut deg = vec![0usize; self.vertices];
            for &(u, _, v) in &edges {
                deg[u] += 1;
                deg[v] += 1;
            }
            let dead: Vec<usize> = (0..self.vertices)
                .filter(|&v| alive[v] && deg[v] <= 1 && Some(v) != keep)
                .collect();
            if dead.is_empty() {
                break;
            }
            // A lone vertex with nothing attached is also removed.
            for v in &dead {
                alive[*v] = false;
            }
            edges.retain(|(u, _, v)| alive[*u] && alive[*v]);
        }
        let map: Vec<Option<usize>> = {
            let mut next = 0;
            alive
                .iter()
                .map(|a| {
                    if *a {
                        next += 1;
                        Some(next - 1)
                    } else {
                        None
                    }
                })
                .collect()
        };
        let n = alive.iter().filter(|a| **a).count();
        SubgroupGraph {
            vertices: n,
            edges: edges
                .into_iter()
                .map(|(u, x, v)| (map[u].unwrap(), x, map[v].unwrap()))
                .collect(),
        }
    }

    pub fn rank(&self) -> usize {
        if self.vertices == 0 {
            return 0;
        }
        self.edges.len() + 1 - self.vertices
    }

    pub fn step(&self, v: usize, x: Letter) -> Option<usize> {
        self.edges.iter().find_map(|&(a, y, b)| {
            if y == x && a == v {
                Some(b)
            } else if y == -x && b == v {
                Some(a)
            } else {
                None
            }
        })
    }

    pub fn read(&self, v: usize, w: &Word) -> Option<usize> {
        w.letters().iter().try_fold(v, |cur, &x| self.step(cur, x))
    }

    /// Membership of `w` in the based subgroup (vertex 0 is the base).
    pub fn contains(&self, w: &Word) -> bool {
        self.vertices > 0 && self.read(0, w) == Some(0)
    }
}

/// Writes `w` as a word in the given basis (letter `i+1` is `basis[i]`).
/// Returns `None` when `w` is not in the subgroup the words generate.
pub fn express_in(basis: &[Word], w: &Word) -> Option<Word> {
    let sup: Vec<_> = basis.iter().map(|b| (0usize, 0usize, b.clone())).collect();
    let f = Folded::new(1, &sup);
    let path = f.realize(0, 0, w)?;
    Some(Word::new(
        path.into_iter()
            .map(|(k, fwd)| if fwd { k as Letter + 1 } else { -(k as Letter + 1) }),
    ))
}

/// Substitutes `images[i]` for letter `i+1` in `w`.
pub fn substitute(w: &Word, images: &[Word]) -> Word {
    let mut out = Word::identity();
    for &x in w.letters() {
        let im = &images[x.unsigned_abs() as usize - 1];
        out = if x > 0 { &out * im } else { &out * &im.inverse() };
    }
    out
}

/// Whether the words form a free basis of the rank-`rank` free group.
pub fn is_basis(words: &[Word], rank: usize) -> bool {
    if words.len() != rank || words.iter().any(|w| w.is_trivial()) {
        return false;
    }
    let sup: Vec<_> = words.iter().map(|b| (0usize, 0usize, b.clone())).collect();
    // A generating n-tuple of F_n is a basis (free groups are Hopfian).
    Folded::new(1, &sup).image_is_everything(0, rank)
}

/// Images of the standard generators under the automorphism sending
/// `basis[i]` to `images[i]`, or `None` if `basis` is not a basis.
pub fn automorphism_from_basis(basis: &[Word], images: &[Word], rank: usize) -> Option<Vec<Word>> {
    (1..=rank as Letter)
        .map(|j| express_in(basis, &Word::letter(j)).map(|e| substitute(&e, images)))
        .collect()
}

/// Finds `c` with `images[j] = c a_{j+1} c^-1` for all `j`, if the map is inner.
pub fn inner_conjugator(images: &[Word]) -> Option<Word> {
    let (g, core) = images.first()?.cyclic_split();
    if core != Word::letter(1) {
        return None;
    }
    let c = match images.get(1) {
        None => g,
        Some(im) => {
            let h = &(&g.inverse() * im) * &g;
            let up = h.letters().iter().take_while(|x| **x == 1).count() as i64;
            let down = h.letters().iter().take_while(|x| **x == -1).count() as i64;
            let m = up - down;
            let a1m = if m >= 0 { Word::letter(1).pow(m as usize) } else { Word::letter(-1).pow((-m) as usize) };
            &g * &a1m
        }
    };
    images
        .iter()
        .enumerate()
        .all(|(j, im)| *im == Word::letter(j as Letter + 1).conjugate_by(&c))
        .then_some(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn inner_automorphisms() {
        let c = w("bAb");
        let imgs: Vec<Word> = ["a", "b", "c"].iter().map(|x| w(x).conjugate_by(&c)).collect();
        assert_eq!(inner_conjugator(&imgs), Some(c));
        assert_eq!(inner_conjugator(&[w("a"), w("ab")]), None);
        assert_eq!(inner_conjugator(&[w("b"), w("a")]), None);
        let aut = automorphism_from_basis(&[w("a"), w("ab")], &[w("a"), w("b")], 2).unwrap();
        assert_eq!(aut, vec![w("a"), w("Ab")]);
    }

    #[test]
    fn basis_detection() {
        assert!(is_basis(&[w("a"), w("b")], 2));
        assert!(is_basis(&[w("ab"), w("b")], 2));
        assert!(is_basis(&[w("aba"), w("ab")], 2));
        assert!(!is_basis(&[w("a"), w("a")], 2));
        assert!(!is_basis(&[w("aa"), w("b")], 2));
        assert!(!is_basis(&[w("ab"), w("ba")], 2));
    }

    #[test]
    fn express_roundtrip() {
        let basis = vec![w("ab"), w("bab")];
        for target in ["a", "b", "abAB", "bbaBA"] {
            let e = express_in(&basis, &w(target)).unwrap();
            assert_eq!(substitute(&e, &basis), w(target));
        }
        assert!(express_in(&[w("aa"), w("b")], &w("a")).is_none());
    }

    #[test]
    fn subgroup_graph_rank_and_membership() {
        let g = SubgroupGraph::from_generators(&[w("ab"), w("ba")]);
        assert_eq!(g.rank(), 2);
        assert!(g.contains(&w("abba")));
        assert!(!g.contains(&w("a")));
        let h = SubgroupGraph::from_generators(&[w("aa")]);
        assert_eq!(h.rank(), 1);
        assert!(!h.contains(&w("a")));
    }

    #[test]
    fn realize_with_empty_labels() {
        // Vertices 0,1: edge 0 (0->1, empty), edge 1 (1->0, "a"), edge 2 (0->0, "b").
        let sup = vec![(0, 1, Word::identity()), (1, 0, w("a")), (0, 0, w("b"))];
        let f = Folded::new(2, &sup);
        assert!(f.image_is_everything(0, 2));
        assert_eq!(f.realize(0, 0, &w("a")).unwrap(), vec![(0, true), (1, true)]);
        assert_eq!(f.realize(0, 0, &w("Ab")).unwrap(), vec![(1, false), (0, false), (2, true)]);
    }
}
