//! Marking-compatible isometries between marked graphs.

use crate::graph::{Dir, MarkedGraph};
use crate::morphism::path_from_base;
use crate::path::{Path, Point};
use crate::stallings;
use crate::word::Word;

/// Erases vertices of valence two by merging their two edges. When the
/// basepoint is erased it moves to a neighbour, which changes the marking
/// by an inner automorphism only.
pub fn unsubdivide(g: &MarkedGraph) -> MarkedGraph {
    let mut g = g.clone();
    loop {
        let Some(v) = (0..g.vertex_count()).find(|v| {
            let ds = g.directions_at(*v);
            ds.len() == 2 && ds[0].edge != ds[1].edge
        }) else {
            return g;
        };
        let ds = g.directions_at(v);
        let (d1, d2) = (ds[0].rev(), ds[1]);
        // Walk x --d1--> v --d2--> y.
        let x = g.tail(d1);
        let y = g.head(d2);
        let label = &g.dir_label(d1) * &g.dir_label(d2);
        let len = g.length(d1.edge) + g.length(d2.edge);
        let keep = d1.edge.min(d2.edge);
        let drop = d1.edge.max(d2.edge);
        let renum = |u: usize| if u > v { u - 1 } else { u };
        let mut parts = Vec::new();
        for e in g.edges() {
            if e.id == drop {
                continue;
            }
            if e.id == keep {
                parts.push((renum(x), renum(y), len.clone(), label.clone()));
            } else {
                parts.push((renum(e.from), renum(e.to), e.length.clone(), e.label.clone()));
            }
        }
        let base = if g.basepoint() == v { x } else { g.basepoint() };
        let rank = g.rank();
        g = MarkedGraph::from_parts(g.vertex_count() - 1, parts, renum(base)).expect("merge keeps graph");
        debug_assert_eq!(g.rank(), rank);
    }
}

/// Vertex bijection and oriented edge correspondence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Isometry {
    pub vertex_map: Vec<usize>,
    pub edge_map: Vec<Dir>,
}

fn search(a: &MarkedGraph, b: &MarkedGraph, e: usize, vm: &mut Vec<Option<usize>>, used: &mut Vec<bool>, em: &mut Vec<Dir>, found: &mut dyn FnMut(&Isometry) -> bool) -> bool {
    if e == a.edge_count() {
        let iso = Isometry { vertex_map: vm.iter().map(|x| x.unwrap()).collect(), edge_map: em.clone() };
        return found(&iso);
    }
    let ea = a.edge(e);
    for f in 0..b.edge_count() {
        if used[f] || b.length(f) != &ea.length {
            continue;
        }
        for fwd in [true, false] {
            let d = Dir::new(f, fwd);
            let (bf, bt) = (b.tail(d), b.head(d));
            let ok_end = |vm: &Vec<Option<usize>>, av: usize, bv: usize| match vm[av] {
                Some(x) => x == bv,
                None => !vm.contains(&Some(bv)),
            };
            if !ok_end(vm, ea.from, bf) {
                continue;
            }
            let saved = vm.clone();
            vm[ea.from] = Some(bf);
            if !ok_end(vm, ea.to, bt) {
                *vm = saved;
                continue;
            }
            vm[ea.to] = Some(bt);
            used[f] = true;
            em.push(d);
            if search(a, b, e + 1, vm, used, em, found) {
                return true;
            }
            em.pop();
            used[f] = false;
            *vm = saved;
        }
    }
    false
}

fn compatible(a: &MarkedGraph, b: &MarkedGraph, iso: &Isometry) -> bool {
    let tree = a.spanning_tree(a.basepoint());
    let loops = a.fundamental_loops(&tree);
    let basis: Vec<Word> = loops.iter().map(|(_, l)| a.path_label(l)).collect();
    let alpha = path_from_base(b, &Point::Vertex(iso.vertex_map[a.basepoint()]));
    let alpha_rev = alpha.reverse(b);
    let images: Vec<Word> = loops
        .iter()
        .map(|(_, l)| {
            let dirs: Vec<Dir> = l
                .iter()
                .map(|d| {
                    let m = iso.edge_map[d.edge];
                    if d.fwd {
                        m
                    } else {
                        m.rev()
                    }
                })
                .collect();
            let img = Path::from_dirs(b, iso.vertex_map[a.basepoint()], &dirs);
            b.path_label(&alpha.concat(b, &img).concat(b, &alpha_rev).dirs())
        })
        .collect();
    stallings::automorphism_from_basis(&basis, &images, a.rank())
        .map(|aut| stallings::inner_conjugator(&aut).is_some())
        .unwrap_or(false)
}

/// Isometry `a -> b` respecting the markings up to conjugation, after
/// erasing valence-two vertices on both sides.
pub fn marked_isometry(a: &MarkedGraph, b: &MarkedGraph) -> Option<Isometry> {
    let a = unsubdivide(a);
    let b = unsubdivide(b);
    if a.vertex_count() != b.vertex_count() || a.edge_count() != b.edge_count() || a.rank() != b.rank() {
        return None;
    }
    let mut out = None;
    let mut vm = vec![None; a.vertex_count()];
    search(&a, &b, 0, &mut vm, &mut vec![false; b.edge_count()], &mut Vec::new(), &mut |iso| {
        if compatible(&a, &b, iso) {
            out = Some(iso.clone());
            true
        } else {
            false
        }
    });
    out
}

pub fn is_marked_isometric(a: &MarkedGraph, b: &MarkedGraph) -> bool {
    marked_isometry(a, b).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::theta;
    use crate::rational::q;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn relabelled_copies() {
        let t = theta([q(1, 2), q(1, 3), q(1, 6)]);
        assert!(is_marked_isometric(&t, &t));
        let (rose, _) = t.collapse_forest(&[2]).unwrap();
        let r = MarkedGraph::rose(2, &[q(1, 2), q(1, 3)]).unwrap();
        assert!(is_marked_isometric(&rose, &r));
        // Same metric graph, different marking.
        let other = MarkedGraph::rose_with_labels(&[w("a"), w("ab")], &[q(1, 2), q(1, 3)]).unwrap();
        assert!(!is_marked_isometric(&other, &r));
        // Conjugated marking is the same point.
        let conj = r.with_labels(&[w("a").conjugate_by(&w("b")), w("b")]);
        assert!(is_marked_isometric(&conj, &r));
        // Swapped petals with matching lengths.
        let swapped = MarkedGraph::rose_with_labels(&[w("b"), w("a")], &[q(1, 3), q(1, 2)]).unwrap();
        assert!(is_marked_isometric(&swapped, &r));
    }

    #[test]
    fn subdivision_is_invisible() {
        let r = MarkedGraph::rose(2, &[q(1, 2), q(1, 2)]).unwrap();
        let s = r.subdivide(1, &q(1, 8)).unwrap();
        assert_eq!(unsubdivide(&s).edge_count(), 2);
        assert!(is_marked_isometric(&s, &r));
    }
}
