//! Whitehead graphs and Whitehead automorphisms.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::word::{letter_index, signed_letters, Letter, Word};

/// Vertices are the `2n` signed letters (indexed as in [`signed_letters`]);
/// each cyclic adjacency `x y` contributes an edge from `x` to `y^-1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhiteheadGraph {
    pub rank: usize,
    pub edges: Vec<(usize, usize)>,
    /// Set when some input needed cyclic reduction or has length one.
    pub flagged: bool,
}

pub fn whitehead_graph(words: &[Word], rank: usize) -> WhiteheadGraph {
    let mut edges = Vec::new();
    let mut flagged = false;
    for w in words {
        let c = w.cyclic_reduce();
        if c != *w || c.len() <= 1 {
            flagged = true;
        }
        let l = c.letters();
        for i in 0..l.len() {
            let x = l[i];
            let y = l[(i + 1) % l.len()];
            edges.push((letter_index(x), letter_index(-y)));
        }
    }
    WhiteheadGraph { rank, edges, flagged }
}

impl WhiteheadGraph {
    fn vertex_count(&self) -> usize {
        2 * self.rank
    }

    fn used(&self) -> Vec<bool> {
        let mut u = vec![false; self.vertex_count()];
        for (a, b) in &self.edges {
            u[*a] = true;
            u[*b] = true;
        }
        u
    }

    /// Connectivity of the non-isolated vertices, optionally ignoring one vertex.
    fn connected_without(&self, skip: Option<usize>) -> bool {
        let n = self.vertex_count();
        let used = self.used();
        let alive: Vec<usize> = (0..n).filter(|v| used[*v] && Some(*v) != skip).collect();
        let Some(&start) = alive.first() else { return true };
        let mut adj = vec![Vec::new(); n];
        for (a, b) in &self.edges {
            if Some(*a) == skip || Some(*b) == skip {
                continue;
            }
            adj[*a].push(*b);
            adj[*b].push(*a);
        }
        let mut seen = vec![false; n];
        seen[start] = true;
        let mut q = VecDeque::from([start]);
        while let Some(v) = q.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    q.push_back(w);
                }
            }
        }
        alive.iter().all(|v| seen[*v])
    }

    pub fn is_connected(&self) -> bool {
        self.connected_without(None)
    }

    /// Whether every signed letter occurs.
    pub fn is_full(&self) -> bool {
        self.used().iter().all(|u| *u)
    }

    pub fn cut_vertices(&self) -> Vec<usize> {
        if !self.is_connected() {
            return Vec::new();
        }
        let used = self.used();
        (0..self.vertex_count()).filter(|v| used[*v] && !self.connected_without(Some(*v))).collect()
    }

    pub fn has_cut_vertex(&self) -> bool {
        !self.cut_vertices().is_empty()
    }

    pub fn to_dot(&self) -> String {
        let names: Vec<String> = signed_letters(self.rank).iter().map(|x| Word::letter(*x).to_string()).collect();
        let mut s = String::from("graph W {\n");
        for n in &names {
            s.push_str(&format!("  \"{n}\";\n"));
        }
        for (a, b) in &self.edges {
            s.push_str(&format!("  \"{}\" -- \"{}\";\n", names[*a], names[*b]));
        }
        s.push_str("}\n");
        s
    }
}

/// Type-II Whitehead automorphism: `x -> x a`, `a^-1 x` or `a^-1 x a`
/// according to which of `x`, `x^-1` lie in `set` (with `a` the multiplier).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WhiteheadAut {
    pub multiplier: Letter,
    pub set: Vec<Letter>,
}

impl WhiteheadAut {
    pub fn image(&self, x: Letter) -> Word {
        let a = self.multiplier;
        if x.abs() == a.abs() {
            return Word::letter(x);
        }
        let g = x.abs();
        let pos = self.set.contains(&g);
        let neg = self.set.contains(&-g);
        let img = match (pos, neg) {
            (false, false) => Word::letter(g),
            (true, false) => Word::new([g, a]),
            (false, true) => Word::new([-a, g]),
            (true, true) => Word::new([-a, g, a]),
        };
        if x > 0 {
            img
        } else {
            img.inverse()
        }
    }

    pub fn apply(&self, w: &Word) -> Word {
        Word::new(w.letters().iter().flat_map(|x| self.image(*x).letters().to_vec()))
    }

    pub fn inverse(&self) -> WhiteheadAut {
        WhiteheadAut { multiplier: -self.multiplier, set: self.set.clone() }
    }
}

/// All non-identity type-II automorphisms in canonical order: multiplier
/// by [`signed_letters`], then subsets by bitmask.
pub fn whitehead_automorphisms(rank: usize) -> Vec<WhiteheadAut> {
    let letters = signed_letters(rank);
    let mut out = Vec::new();
    for &a in &letters {
        let others: Vec<Letter> = letters.iter().copied().filter(|x| x.abs() != a.abs()).collect();
        for mask in 1u32..(1 << others.len()) {
            let set = (0..others.len()).filter(|i| mask & (1 << i) != 0).map(|i| others[i]).collect();
            out.push(WhiteheadAut { multiplier: a, set });
        }
    }
    out
}

/// Greedy cyclic-length descent, first improving move in canonical order.
pub fn minimize(w: &Word, rank: usize) -> (Word, Vec<WhiteheadAut>) {
    let auts = whitehead_automorphisms(rank);
    let mut cur = w.cyclic_reduce();
    let mut applied = Vec::new();
    'outer: loop {
        for a in &auts {
            let next = a.apply(&cur).cyclic_reduce();
            if next.len() < cur.len() {
                cur = next;
                applied.push(a.clone());
                continue 'outer;
            }
        }
        return (cur, applied);
    }
}

pub fn is_primitive(w: &Word, rank: usize) -> bool {
    !w.is_trivial() && minimize(w, rank).0.len() == 1
}

/// The minimized word misses a letter or has a disconnected Whitehead graph.
pub fn in_proper_free_factor(w: &Word, rank: usize) -> bool {
    let (m, _) = minimize(w, rank);
    let g = whitehead_graph(&[m], rank);
    !g.is_full() || !g.is_connected()
}

/// Least cyclic length in the orbit of `w` reachable by at most `depth`
/// Whitehead moves, exploring only words no longer than `w` (cyclic
/// normal forms, so conjugates and rotations are identified).
pub fn orbit_min_length(w: &Word, rank: usize, depth: usize) -> usize {
    let auts = whitehead_automorphisms(rank);
    let start = w.cyclic_normal_form();
    let cap = start.len();
    let mut seen = BTreeSet::from([start.clone()]);
    let mut frontier = vec![start];
    let mut best = cap;
    for _ in 0..depth {
        let mut next = Vec::new();
        for x in &frontier {
            for a in &auts {
                let y = a.apply(x).cyclic_normal_form();
                if y.len() <= cap && seen.insert(y.clone()) {
                    best = best.min(y.len());
                    next.push(y);
                }
            }
        }
        if best == 1 || next.is_empty() {
            break;
        }
        frontier = next;
    }
    best
}

/// Primitivity decided by the bounded orbit search.
pub fn is_primitive_bruteforce(w: &Word, rank: usize, depth: usize) -> bool {
    !w.is_trivial() && orbit_min_length(w, rank, depth) == 1
}

/// All cyclic normal forms of length `1..=max_len` over `rank` generators.
pub fn cyclic_words(rank: usize, max_len: usize) -> Vec<Word> {
    let letters = signed_letters(rank);
    let mut out = BTreeSet::new();
    let mut layer: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for &x in &letters {
                if w.last() == Some(&-x) {
                    continue;
                }
                let mut v = w.clone();
                v.push(x);
                let word = Word::new(v.clone());
                if word.is_cyclically_reduced() {
                    out.insert(word.cyclic_normal_form());
                }
                next.push(v);
            }
        }
        layer = next;
    }
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn graphs() {
        let comm = whitehead_graph(&[w("abAB")], 2);
        assert_eq!(comm.edges.len(), 4);
        assert!(comm.is_connected());
        assert!(!comm.has_cut_vertex());
        let prim = whitehead_graph(&[w("ab")], 2);
        assert!(!prim.is_connected());
        assert!(whitehead_graph(&[w("a")], 2).flagged);
        assert!(whitehead_graph(&[Word::new([1, 2, -1])], 2).flagged);
        // A path a - B - b is a star around B.
        let star = WhiteheadGraph { rank: 2, edges: vec![(0, 3), (3, 2)], flagged: false };
        assert_eq!(star.cut_vertices(), vec![3]);
        assert!(comm.to_dot().contains("--"));
    }

    #[test]
    fn minimization() {
        assert_eq!(minimize(&w("abA"), 2).0, w("b"));
        assert_eq!(minimize(&w("ab"), 2).0.len(), 1);
        assert_eq!(minimize(&w("abAB"), 2).0.len(), 4);
        assert!(is_primitive(&w("a"), 2));
        assert!(!is_primitive(&w("abAB"), 2));
        assert!(!in_proper_free_factor(&w("abAB"), 2));
        assert!(in_proper_free_factor(&w("aabb"), 3));
        assert!(is_primitive(&w("aab"), 2));
        assert!(!is_primitive(&w("aabb"), 2));
    }

    #[test]
    fn automorphisms_are_invertible() {
        let auts = whitehead_automorphisms(2);
        assert_eq!(auts.len(), 4 * 3);
        for a in &auts {
            for s in ["ab", "aBAb", "abbA"] {
                assert_eq!(a.inverse().apply(&a.apply(&w(s))), w(s));
            }
        }
    }

    #[test]
    fn oracle_agrees_on_short_words() {
        for word in cyclic_words(2, 5) {
            assert_eq!(is_primitive(&word, 2), is_primitive_bruteforce(&word, 2, 6), "{word}");
        }
    }
}
