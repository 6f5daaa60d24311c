//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line;
//! run with `cargo test --test acceptance -- --nocapture` to see them.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use num_traits::{One, Zero};
use rand::Rng;
use sha2::{Digest, Sha256};

use cvn::certificate::{fs_distance_certificate, nearby_certificate, preimage_count, FsCertificate};
use cvn::collapse::collapse_along_path;
use cvn::graph::MarkedGraph;
use cvn::isometry::is_marked_isometric;
use cvn::morphism::{lipschitz_constant, GraphMorphism};
use cvn::optimal::optimal_map;
use cvn::path::Point;
use cvn::random::{random_graph, random_word, rng};
use cvn::rational::{q, qi};
use cvn::skora::{skora_path, FoldingPath};
use cvn::splittings::{
    common_refinement, ff_adjacency_certificate, refinement_in, upsilon, Bounded, FfWitness, REFINEMENT_BUDGET,
};
use cvn::stallings::is_basis;
use cvn::whitehead::{cyclic_words, is_primitive, is_primitive_bruteforce, whitehead_graph};
use cvn::{Error, Word, Q};

/// Largest certificate length per preimage seen on the criterion-6 sample.
const M_PINNED: i64 = 1;

fn path_pair(seed: u64, rank: usize) -> (MarkedGraph, MarkedGraph, FoldingPath) {
    let mut r = rng(seed);
    let s = random_graph(&mut r, rank, rank);
    let t = random_graph(&mut r, rank, rank);
    let p = skora_path(&s, &t).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    (s, t, p)
}

fn short_bases() {
    let start = Instant::now();
    let mut r = rng(1001);
    for i in 0..200 {
        let rank = 3 + i % 3;
        let g = random_graph(&mut r, rank, 2 * rank);
        assert_eq!(g.volume(), Q::one());
        let sb = g.short_basis();
        assert!(is_basis(&sb.basis, rank), "graph {i}: not a basis");
        for (k, l) in sb.loops.iter().enumerate() {
            assert_eq!(g.path_label(l), sb.basis[k]);
            assert_eq!(cvn::graph::tighten(l.iter().copied()), *l);
            assert!(g.path_length(l) <= qi(2), "graph {i}: loop {k} too long");
        }
    }
    assert!(start.elapsed().as_secs_f64() < 10.0, "took {:?}", start.elapsed());
}

fn fold_accounting() {
    for seed in 0..100 {
        let (_, t, p) = path_pair(2000 + seed, 3);
        assert!(p.len() <= 60, "seed {seed}: {} folds", p.len());
        for (k, f) in p.folds.iter().enumerate() {
            assert_eq!(p.stages[k + 1].graph.volume(), p.stages[k].graph.volume() - &f.amount, "seed {seed} fold {k}");
        }
        assert!(is_marked_isometric(&p.stages[p.len()].graph, &t), "seed {seed}");
    }
}

fn semigroup() {
    let mut r = rng(3003);
    for seed in 0..50 {
        let (_, _, p) = path_pair(3000 + seed, 3);
        let n = p.len();
        for _ in 0..10 {
            let mut idx = [r.gen_range(0..=n), r.gen_range(0..=n), r.gen_range(0..=n)];
            idx.sort();
            let [s, t, u] = idx;
            let su = p.decompose(s, u).unwrap();
            let st = p.decompose(s, t).unwrap();
            let tu = p.decompose(t, u).unwrap();
            assert!(st.then(&tu).same_map(&su), "seed {seed}: {s} {t} {u}");
        }
    }
}

fn monotonicity() {
    for seed in 0..50 {
        let (_, t, p) = path_pair(4000 + seed, 3);
        let mut r = rng(4400 + seed);
        for _ in 0..20 {
            let w = random_word(&mut r, 3, 8);
            if w.is_trivial() {
                continue;
            }
            let ls: Vec<Q> = p.stages.iter().map(|st| st.graph.translation_length(&w).unwrap()).collect();
            assert!(ls.windows(2).all(|x| x[0] >= x[1]), "seed {seed} word {w}");
            assert!(*ls.last().unwrap() >= t.translation_length(&w).unwrap());
        }
    }
}

fn lipschitz() {
    let lambdas = [q(1, 2), q(2, 1), q(3, 7), q(5, 3), q(11, 4)];
    for seed in 0..100 {
        let rank = 2 + (seed % 2) as usize;
        let mut r = rng(5000 + seed);
        let s = random_graph(&mut r, rank, rank);
        let t = random_graph(&mut r, rank, rank);
        let f = optimal_map(&s, &t).unwrap();
        let sigma = lipschitz_constant(&s, &t).unwrap();
        assert_eq!(f.max_stretch(), sigma, "seed {seed}");
        assert!(f.is_marking_compatible());
        assert_eq!(lipschitz_constant(&s, &s).unwrap(), Q::one());
        if seed < 20 {
            for l in &lambdas {
                assert_eq!(lipschitz_constant(&s, &t.scaled(l)).unwrap(), l * &sigma);
            }
        }
    }
}

/// Morphisms with points of 1, 2 and 3 preimages, and their certificates.
fn estimate_sample() -> Vec<(usize, FsCertificate)> {
    let mut want = [17usize, 17, 16];
    let mut out = Vec::new();
    let mut seed = 6000;
    while want.iter().any(|w| *w > 0) {
        seed += 1;
        assert!(seed < 9000, "could not build the sample");
        let mut r = rng(seed);
        let s = random_graph(&mut r, 3, 3);
        let t = random_graph(&mut r, 3, 3);
        let f: GraphMorphism = optimal_map(&s, &t).unwrap();
        for e in 0..t.edge_count() {
            let y = Point::Edge { edge: e, offset: t.length(e) * q(1, 3) };
            let Ok(p) = preimage_count(&f, &y) else { continue };
            if !(1..=3).contains(&p) || want[p - 1] == 0 {
                continue;
            }
            let c = fs_distance_certificate(&f, &y).unwrap_or_else(|err| panic!("seed {seed}: {err}"));
            want[p - 1] -= 1;
            out.push((p, c));
            break;
        }
    }
    out
}

fn estimate() {
    let sample = estimate_sample();
    assert_eq!(sample.len(), 50);
    let mut worst = Q::zero();
    for (p, c) in &sample {
        assert_eq!(c.preimages, *p);
        assert!(c.validates());
        worst = worst.max(c.ratio());
    }
    println!("    measured max length/p = {worst} over {} certificates", sample.len());
    assert!(worst <= qi(M_PINNED), "length/p {worst} exceeds pinned {M_PINNED}");
}

fn ff_chains() {
    let mut done = 0;
    let mut seed = 7000;
    while done < 50 {
        seed += 1;
        let mut r = rng(seed);
        let g = random_graph(&mut r, 3, 3);
        let e = r.gen_range(0..g.edge_count());
        let f = (e + 1 + r.gen_range(0..g.edge_count() - 1)) % g.edge_count();
        let ups = upsilon(&g).unwrap();
        let (x, y) = (&ups[e], &ups[f]);
        // Alternate between the graph's own refinement and a searched one.
        let wit = if done % 2 == 0 {
            refinement_in(&g, e, f)
        } else {
            match common_refinement(x, y, REFINEMENT_BUDGET) {
                Bounded::Found(w) => w,
                Bounded::Exhausted => refinement_in(&g, e, f),
            }
        };
        assert!(wit.validates(x, y));
        let chain = ff_adjacency_certificate(x, y, &FfWitness::Refinement(wit)).unwrap();
        assert!(chain.validates(3) && chain.len() <= 8, "seed {seed}: length {}", chain.len());
        done += 1;
    }
}

fn nearby() {
    let mut done = 0;
    let mut seed = 8000;
    while done < 50 {
        seed += 1;
        let mut r = rng(seed);
        let g = random_graph(&mut r, 3, 3);
        let tree = MarkedGraph::tree_edges(&g.spanning_tree(g.basepoint()));
        if tree.is_empty() {
            continue;
        }
        let k = 1 + r.gen_range(0..tree.len());
        let c = nearby_certificate(&g, &tree[..k]).unwrap();
        assert!(c.validates() && c.distance_bound() <= 2);
        done += 1;
    }
}

fn whitehead_oracle() {
    let start = Instant::now();
    let check = |w: &Word, rank: usize| {
        let greedy = is_primitive(w, rank);
        let brute = is_primitive_bruteforce(w, rank, 6);
        assert_eq!(greedy, brute, "{w} at rank {rank}");
        let c = w.cyclic_reduce();
        if brute && c.len() >= 2 {
            let g = whitehead_graph(&[c], rank);
            assert!(!g.is_connected() || g.has_cut_vertex(), "{w}: primitive without cut vertex");
        }
    };
    for w in cyclic_words(2, 6) {
        check(&w, 2);
    }
    let mut r = rng(9009);
    let mut n = 0;
    while n < 500 {
        let w = random_word(&mut r, 3, 6);
        if w.is_trivial() {
            continue;
        }
        check(&w, 3);
        n += 1;
    }
    assert!(start.elapsed().as_secs_f64() < 60.0, "took {:?}", start.elapsed());
}

fn squares() {
    let mut done = 0;
    let mut multi = 0;
    let mut seed = 10_000;
    while done < 30 {
        seed += 1;
        assert!(seed < 12_000, "not enough collapsible paths");
        let (_, _, p) = path_pair(seed, 3);
        if p.is_empty() {
            continue;
        }
        let last = &p.stages[p.len()].graph;
        for e in last.edges().iter().filter(|e| e.from != e.to) {
            match collapse_along_path(&p, &[e.id]) {
                Ok(c) => {
                    assert!(c.squares_commute(&p), "seed {seed}");
                    done += 1;
                    multi += usize::from(p.len() > 1);
                    break;
                }
                Err(Error::PreimageNotForest(_)) => {}
                Err(other) => panic!("seed {seed}: {other}"),
            }
        }
    }
    assert!(multi > 0, "no multi-fold paths among {done}");
}

fn cli_corpus() -> Vec<Vec<&'static str>> {
    vec![
        vec!["gen", "--seed", "1", "--rank", "3", "--count", "5"],
        vec!["gen", "--seed", "7", "--rank", "4", "--count", "3", "--format", "dot"],
        vec!["gen", "--seed", "7", "--rank", "3", "--count", "6", "--threads", "3"],
        vec!["skora", "--seed", "2"],
        vec!["skora", "--seed", "3", "--normalized"],
        vec!["fold", "--seed", "4"],
        vec!["project", "--seed", "5"],
        vec!["cert", "--seed", "6", "fs"],
        vec!["cert", "--seed", "6", "ff", "--edges", "0", "2"],
        vec!["cert", "--seed", "6", "ff", "--search", "--edges", "1", "2"],
        vec!["cert", "--seed", "8", "nearby"],
        vec!["tie", "--seed", "9", "--factor-rank", "1"],
        vec!["whitehead", "--word", "abAB", "--min", "--primitive"],
        vec!["whitehead", "--word", "aabb", "--rank", "3", "--graph-dot"],
    ]
}

fn run_cli(args: &[&str]) -> (i32, [u8; 32]) {
    let out = Command::new(env!("CARGO_BIN_EXE_cvn")).args(args).output().expect("run cvn");
    let mut h = Sha256::new();
    h.update(&out.stdout);
    (out.status.code().unwrap_or(-1), h.finalize().into())
}

fn determinism() {
    for args in cli_corpus() {
        let a = run_cli(&args);
        let b = run_cli(&args);
        assert_eq!(a, b, "{args:?}");
        assert!(a.0 == 0 || a.0 == 3, "{args:?} exited {}", a.0);
    }
    // Threads do not change the bytes.
    let one = run_cli(&["gen", "--seed", "7", "--rank", "3", "--count", "6"]);
    let three = run_cli(&["gen", "--seed", "7", "--rank", "3", "--count", "6", "--threads", "3"]);
    assert_eq!(one, three);
    assert_eq!(run_cli(&["gen", "--rank", "1"]).0, 4);
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn()); 11] = [
        ("1 short bases", short_bases),
        ("2 fold accounting", fold_accounting),
        ("3 semigroup decomposition", semigroup),
        ("4 translation-length monotonicity", monotonicity),
        ("5 lipschitz constant", lipschitz),
        ("6 splitting-path certificates", estimate),
        ("7 free-factor chains", ff_chains),
        ("8 nearby collapse", nearby),
        ("9 whitehead oracle", whitehead_oracle),
        ("10 collapse squares", squares),
        ("11 cli determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let start = Instant::now();
        let ok = catch_unwind(AssertUnwindSafe(f)).is_ok();
        println!("{} criterion {name} ({:.1}s)", if ok { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
        if !ok {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
