//! Seeded generation of marked graphs, bases and words.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::MarkedGraph;
use crate::rational::{qi, Q};
use crate::word::{Letter, Word};

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nontrivial reduced word of length `1..=max_len`.
pub fn random_word(rng: &mut Rng8, rank: usize, max_len: usize) -> Word {
    let len = rng.gen_range(1..=max_len.max(1));
    let mut out: Vec<Letter> = Vec::with_capacity(len);
    while out.len() < len {
        let g = rng.gen_range(1..=rank as Letter);
        let x = if rng.gen_bool(0.5) { g } else { -g };
        if out.last() != Some(&-x) {
            out.push(x);
        }
    }
    Word::new(out)
}

/// Basis obtained from the standard one by random Nielsen moves, a
/// permutation and inversions. Moves making a word longer than
/// `max_len` are skipped.
pub fn random_basis(rng: &mut Rng8, rank: usize, moves: usize, max_len: usize) -> Vec<Word> {
    let mut b: Vec<Word> = (1..=rank as Letter).map(Word::letter).collect();
    for _ in 0..moves {
        let i = rng.gen_range(0..rank);
        let mut j = rng.gen_range(0..rank - 1);
        if j >= i {
            j += 1;
        }
        let y = if rng.gen_bool(0.5) { b[j].clone() } else { b[j].inverse() };
        let nw = if rng.gen_bool(0.5) { &b[i] * &y } else { &y * &b[i] };
        if nw.len() <= max_len {
            b[i] = nw;
        }
    }
    b.shuffle(rng);
    for w in &mut b {
        if rng.gen_bool(0.5) {
            *w = w.inverse();
        }
    }
    b
}

/// Random connected graph of rank `rank` with every vertex of valence at
/// least 3: a random tree with trivially labelled edges plus `rank` extra
/// edges labelled by a random basis. Integer lengths in `1..=10`, then
/// scaled to volume one.
pub fn random_graph(rng: &mut Rng8, rank: usize, moves: usize) -> MarkedGraph {
    assert!(rank >= 2);
    loop {
        let v = rng.gen_range(1..=2 * rank - 2);
        let mut edges: Vec<(usize, usize)> = (1..v).map(|x| (rng.gen_range(0..x), x)).collect();
        let mut valence = vec![0usize; v];
        for (a, b) in &edges {
            valence[*a] += 1;
            valence[*b] += 1;
        }
        let mut extra = Vec::new();
        for _ in 0..rank {
            // Prefer endpoints still short of valence three.
            let pick = |rng: &mut Rng8, val: &Vec<usize>| {
                let low: Vec<usize> = (0..v).filter(|x| val[*x] < 3).collect();
                if !low.is_empty() && rng.gen_bool(0.8) {
                    *low.choose(rng).unwrap()
                } else {
                    rng.gen_range(0..v)
                }
            };
            let a = pick(rng, &valence);
            valence[a] += 1;
            let b = pick(rng, &valence);
            valence[b] += 1;
            extra.push((a, b));
        }
        if valence.iter().any(|x| *x < 3) {
            continue;
        }
        let basis = random_basis(rng, rank, moves, 6);
        let mut parts: Vec<(usize, usize, Q, Word)> = Vec::new();
        for (a, b) in edges.drain(..) {
            parts.push((a, b, qi(rng.gen_range(1..=10)), Word::identity()));
        }
        for ((a, b), w) in extra.into_iter().zip(basis) {
            parts.push((a, b, qi(rng.gen_range(1..=10)), w));
        }
        let g = MarkedGraph::from_parts(v, parts, 0).expect("random graph").normalize();
        debug_assert!(g.is_valid());
        return g;
    }
}
