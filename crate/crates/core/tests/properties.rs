//! Randomized invariants over seeded graphs and words.

use num_traits::One;
use proptest::prelude::*;

use cvn::morphism::lipschitz_constant;
use cvn::random::{random_graph, random_word, rng};
use cvn::rational::{q, qi};
use cvn::splittings::{factor_canonicalize, factor_contains, upsilon_f};
use cvn::whitehead::{minimize, whitehead_graph};
use cvn::{Word, Q};

fn words(seed: u64, rank: usize, n: usize, len: usize) -> Vec<Word> {
    let mut r = rng(seed);
    (0..n).map(|_| random_word(&mut r, rank, len)).filter(|w| !w.is_trivial()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn normalize_gives_volume_one(seed in 0u64..10_000, rank in 2usize..5, num in 1i64..9, den in 1i64..9) {
        let g = random_graph(&mut rng(seed), rank, rank).scaled(&q(num, den));
        prop_assert_eq!(g.normalize().volume(), Q::one());
    }

    #[test]
    fn factor_core_ignores_presentation(seed in 0u64..10_000, k in 1usize..3) {
        let gens = words(seed, 3, k, 5);
        prop_assume!(!gens.is_empty());
        let f = factor_canonicalize(&gens).unwrap();
        let mut rev = gens.clone();
        rev.reverse();
        let inv: Vec<Word> = gens.iter().map(Word::inverse).collect();
        let c = random_word(&mut rng(seed + 1), 3, 4);
        let conj: Vec<Word> = gens.iter().map(|w| w.conjugate_by(&c)).collect();
        prop_assert_eq!(&factor_canonicalize(&rev).unwrap(), &f);
        prop_assert_eq!(&factor_canonicalize(&inv).unwrap(), &f);
        prop_assert_eq!(&factor_canonicalize(&conj).unwrap(), &f);
    }

    #[test]
    fn containment_is_a_partial_order(seed in 0u64..10_000) {
        let gens = words(seed, 3, 3, 4);
        prop_assume!(gens.len() == 3);
        let a = factor_canonicalize(&gens[..1]).unwrap();
        let b = factor_canonicalize(&gens[..2]).unwrap();
        let c = factor_canonicalize(&gens).unwrap();
        prop_assert!(factor_contains(&a, &a));
        prop_assert!(factor_contains(&b, &a) && factor_contains(&c, &b));
        prop_assert!(factor_contains(&c, &a));
        if factor_contains(&a, &b) {
            prop_assert_eq!(&a, &b);
        }
    }

    #[test]
    fn minimize_shortens_and_respects_conjugacy(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let w = random_word(&mut r, 3, 10);
        prop_assume!(!w.is_trivial());
        let (m, _) = minimize(&w, 3);
        prop_assert!(m.len() <= w.cyclic_reduce().len());
        let c = random_word(&mut r, 3, 4);
        prop_assert_eq!(minimize(&w.conjugate_by(&c), 3).0.len(), m.len());
        prop_assert_eq!(minimize(&w.inverse(), 3).0.len(), m.len());
    }

    #[test]
    fn whitehead_edges_match_cyclic_length(seed in 0u64..10_000, rank in 2usize..5) {
        let ws = words(seed, rank, 3, 8);
        let total: usize = ws.iter().map(|w| w.cyclic_reduce().len()).sum();
        prop_assert_eq!(whitehead_graph(&ws, rank).edges.len(), total);
    }

    #[test]
    fn projection_edge_is_long(seed in 0u64..10_000, rank in 3usize..5) {
        let g = random_graph(&mut rng(seed), rank, rank);
        let (e, f) = upsilon_f(&g).unwrap();
        prop_assert!(g.length(e) * qi(g.edge_count() as i64) >= g.volume());
        prop_assert_eq!(f.rank, rank - 1);
    }

    #[test]
    fn lipschitz_scales(seed in 0u64..10_000, num in 1i64..7, den in 1i64..7) {
        let mut r = rng(seed);
        let s = random_graph(&mut r, 2, 2);
        let t = random_graph(&mut r, 2, 2);
        let l = q(num, den);
        let sigma = lipschitz_constant(&s, &t).unwrap();
        prop_assert_eq!(lipschitz_constant(&s, &t.scaled(&l)).unwrap(), &l * &sigma);
        prop_assert_eq!(lipschitz_constant(&s.scaled(&l), &t).unwrap(), sigma / l);
    }
}
