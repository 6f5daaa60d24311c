//! Optimal maps by descent on vertex images.
//!
//! Each round looks at the tension subgraph (edges of maximal stretch) and
//! peels off vertices at which all tension directions leave through one
//! gate. Moving those vertices along their gate, faster the earlier they
//! were peeled, shrinks every tension edge; an exact line search over the
//! resulting piecewise-linear stretches picks the step.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::graph::{Dir, MarkedGraph};
use crate::morphism::{lipschitz_constant, GraphMorphism};
use crate::path::{Path, Point, Seg};
use crate::lp::{self, LpOutcome};
use crate::rational::Q;

const ROUND_CAP: usize = 20_000;

struct Mover {
    vertex: usize,
    germ: Dir,
    speed: i64,
}

/// Vertices peeled in order, each with the common germ of its tension directions,
/// and the tension edges that survive.
fn peel(f: &GraphMorphism, tension: &BTreeSet<usize>) -> Result<(Vec<(usize, Dir)>, BTreeSet<usize>)> {
    let s = &f.source;
    let mut delta = tension.clone();
    let mut order = Vec::new();
    loop {
        let mut found = None;
        for v in 0..s.vertex_count() {
            let ds: Vec<Dir> = s.directions_at(v).into_iter().filter(|d| delta.contains(&d.edge)).collect();
            if ds.is_empty() {
                continue;
            }
            let germs = ds.iter().map(|d| f.germ(*d)).collect::<Result<BTreeSet<Dir>>>()?;
            if germs.len() == 1 {
                found = Some((v, *germs.iter().next().unwrap()));
                break;
            }
        }
        let Some((v, g)) = found else { break };
        order.push((v, g));
        for d in s.directions_at(v) {
            delta.remove(&d.edge);
        }
    }
    Ok((order, delta))
}

fn movers(order: &[(usize, Dir)]) -> Vec<Mover> {
    let m = order.len() as i64;
    order
        .iter()
        .enumerate()
        .map(|(k, (v, g))| Mover { vertex: *v, germ: *g, speed: m - k as i64 })
        .collect()
}

/// Room to move from `p` along `germ` before reaching a vertex of `t`.
fn room(t: &MarkedGraph, p: &Point, germ: Dir) -> Q {
    match p {
        Point::Vertex(_) => t.length(germ.edge).clone(),
        Point::Edge { edge, offset } => {
            if germ.fwd {
                t.length(*edge) - offset
            } else {
                offset.clone()
            }
        }
    }
}

fn motion(t: &MarkedGraph, p: &Point, germ: Dir, x: &Q) -> Path {
    let start = match p {
        Point::Vertex(_) => {
            if germ.fwd {
                Q::zero()
            } else {
                t.length(germ.edge).clone()
            }
        }
        Point::Edge { offset, .. } => offset.clone(),
    };
    let end = if germ.fwd { &start + x } else { &start - x };
    Path::from_segs(t, p.clone(), [Seg { edge: germ.edge, from: start, to: end }])
}

/// Linear model `stretch(e) = a + b * eps` of every edge and the largest
/// step for which it is exact on shrinking edges.
fn linear_model(f: &GraphMorphism, ms: &[Mover]) -> Result<(Vec<(Q, Q)>, Q)> {
    let s = &f.source;
    let t = &f.target;
    let mut speed = vec![None; s.vertex_count()];
    let mut cap: Option<Q> = None;
    let mut tighten_cap = |c: Q| {
        if cap.as_ref().map_or(true, |x| c < *x) {
            cap = Some(c);
        }
    };
    for m in ms {
        speed[m.vertex] = Some((m.germ, m.speed));
        tighten_cap(room(t, &f.vertex_image[m.vertex], m.germ) / Q::from_integer(m.speed.into()));
    }
    let mut lines = Vec::with_capacity(s.edge_count());
    for e in s.edges() {
        let img = &f.edge_image[e.id];
        let mut rate: i64 = 0;
        let mut shrink: i64 = 0;
        for (v, d) in [(e.from, Dir::new(e.id, true)), (e.to, Dir::new(e.id, false))] {
            let Some((germ, sp)) = speed[v] else { continue };
            if !img.is_trivial() && f.germ(d)? == germ {
                rate -= sp;
                shrink += sp;
                let first = f.dir_image(d).segs[0].len();
                tighten_cap(first / Q::from_integer(sp.into()));
            } else {
                rate += sp;
            }
        }
        if shrink > 0 {
            tighten_cap(img.length() / Q::from_integer(shrink.into()));
        }
        lines.push((img.length() / &e.length, Q::from_integer(rate.into()) / &e.length));
    }
    Ok((lines, cap.expect("at least one mover")))
}

fn max_at(lines: &[(Q, Q)], x: &Q) -> Q {
    lines.iter().map(|(a, b)| a + b * x).max().unwrap()
}

/// Smallest step in `(0, cap]` minimizing the upper envelope of the lines.
fn line_search(lines: &[(Q, Q)], cap: &Q) -> Q {
    let mut cands = vec![cap.clone()];
    for (i, (ai, bi)) in lines.iter().enumerate() {
        for (aj, bj) in &lines[i + 1..] {
            if bi != bj {
                let x = (aj - ai) / (bi - bj);
                if x.is_positive() && x < *cap {
                    cands.push(x);
                }
            }
        }
    }
    cands.sort();
    let mut best = cands[0].clone();
    let mut val = max_at(lines, &best);
    for c in &cands[1..] {
        let v = max_at(lines, c);
        if v < val {
            val = v;
            best = c.clone();
        }
    }
    best
}

fn apply_moves(f: &GraphMorphism, ms: &[Mover], eps: &Q) -> GraphMorphism {
    let t = &f.target;
    let mut paths: Vec<Path> = f.vertex_image.iter().map(|p| Path::constant(p.clone())).collect();
    for m in ms {
        let x = eps * Q::from_integer(m.speed.into());
        paths[m.vertex] = motion(t, &f.vertex_image[m.vertex], m.germ, &x);
    }
    moved(f, &paths)
}

/// Moves every vertex image along its path, dragging the edge images.
fn moved(f: &GraphMorphism, paths: &[Path]) -> GraphMorphism {
    let t = &f.target;
    let vertex_image: Vec<Point> = paths.iter().map(|p| p.end(t)).collect();
    let edge_image = f
        .source
        .edges()
        .iter()
        .map(|e| paths[e.from].reverse(t).concat(t, &f.edge_image[e.id]).concat(t, &paths[e.to]))
        .collect();
    GraphMorphism { source: f.source.clone(), target: f.target.clone(), vertex_image, edge_image }
}

/// Affine form `konst + sum coef * x_var`.
#[derive(Default)]
struct Affine {
    konst: Q,
    coef: Vec<(usize, Q)>,
}

/// Minimizes the maximal stretch with every vertex image kept on the
/// closed edge it currently lies on (vertices at vertices stay put). In
/// such a chart every image length is affine, or an absolute difference
/// when both ends share one edge, so this is a linear program.
fn chart_optimum(f: &GraphMorphism) -> Option<GraphMorphism> {
    let s = &f.source;
    let t = &f.target;
    let mut var = vec![None; s.vertex_count()];
    let mut chart: Vec<(usize, Q)> = Vec::new();
    for (v, p) in f.vertex_image.iter().enumerate() {
        if let Point::Edge { edge, offset } = p {
            var[v] = Some(chart.len());
            chart.push((*edge, offset.clone()));
        }
    }
    if chart.is_empty() {
        return None;
    }
    let k = chart.len();
    let one = Q::from_integer(1.into());
    let mut rows: Vec<Vec<Q>> = Vec::new();
    let mut rhs: Vec<Q> = Vec::new();
    let mut push = |aff: Affine, len: &Q| {
        let mut row = vec![Q::zero(); k + 1];
        for (i, c) in aff.coef {
            row[i] += c;
        }
        row[k] = -len.clone();
        rows.push(row);
        rhs.push(-aff.konst);
    };
    for e in s.edges() {
        let img = &f.edge_image[e.id];
        let (vu, vw) = (var[e.from], var[e.to]);
        let same_lift = img.segs.len() <= 1 && vu.is_some() && vw.is_some();
        if same_lift {
            let (a, b) = (vu.unwrap(), vw.unwrap());
            push(Affine { konst: Q::zero(), coef: vec![(a, one.clone()), (b, -one.clone())] }, &e.length);
            push(Affine { konst: Q::zero(), coef: vec![(a, -one.clone()), (b, one.clone())] }, &e.length);
            continue;
        }
        let mut aff = Affine { konst: img.length(), coef: Vec::new() };
        if let Some(i) = vu {
            let first = &img.segs[0];
            aff.konst -= first.len();
            let l = t.length(first.edge).clone();
            if first.fwd() {
                aff.konst += l;
                aff.coef.push((i, -one.clone()));
            } else {
                aff.coef.push((i, one.clone()));
            }
        }
        if let Some(i) = vw {
            let last = img.segs.last().unwrap();
            aff.konst -= last.len();
            let l = t.length(last.edge).clone();
            if last.fwd() {
                aff.coef.push((i, one.clone()));
            } else {
                aff.konst += l;
                aff.coef.push((i, -one.clone()));
            }
        }
        push(aff, &e.length);
    }
    for (i, (edge, _)) in chart.iter().enumerate() {
        let mut row = vec![Q::zero(); k + 1];
        row[i] = one.clone();
        rows.push(row);
        rhs.push(t.length(*edge).clone());
    }
    let mut cost = vec![Q::zero(); k + 1];
    cost[k] = one;
    let LpOutcome::Optimal { value, z } = lp::minimize(&cost, &rows, &rhs) else {
        return None;
    };
    if value >= f.max_stretch() {
        return None;
    }
    let paths: Vec<Path> = f
        .vertex_image
        .iter()
        .enumerate()
        .map(|(v, p)| match var[v] {
            None => Path::constant(p.clone()),
            Some(i) => {
                let (edge, from) = chart[i].clone();
                Path::from_segs(t, p.clone(), [Seg { edge, from, to: z[i].clone() }])
            }
        })
        .collect();
    let g = moved(f, &paths);
    debug_assert_eq!(g.max_stretch(), value);
    Some(g)
}

/// Marking-compatible map of least possible maximal stretch whose
/// tension subgraph has at least two gates at each of its vertices.
pub fn optimal_map(s: &MarkedGraph, t: &MarkedGraph) -> Result<GraphMorphism> {
    let sigma = lipschitz_constant(s, t)?;
    let mut f = GraphMorphism::from_markings(s, t)?;
    for _ in 0..ROUND_CAP {
        let lambda = f.max_stretch();
        if lambda < sigma {
            return Err(Error::InvalidGraph("stretch fell below the candidate bound".into()));
        }
        let stretches = f.stretches();
        let (order, rest) = if lambda > sigma {
            // Peel a band of nearly maximal edges; narrowing the band until
            // it peels completely avoids zig-zagging between tension sets.
            let mut band = (&lambda - &sigma) / Q::from_integer(2.into());
            loop {
                let near: BTreeSet<usize> =
                    (0..stretches.len()).filter(|e| stretches[*e] >= &lambda - &band).collect();
                let (order, rest) = peel(&f, &near)?;
                if rest.is_empty() {
                    break (order, rest);
                }
                if near.iter().all(|e| stretches[*e] == lambda) {
                    return Err(Error::InvalidGraph("tension core above the candidate bound".into()));
                }
                band = band / Q::from_integer(2.into());
            }
        } else {
            let tension: BTreeSet<usize> = f.tension_edges().into_iter().collect();
            peel(&f, &tension)?
        };
        if order.is_empty() {
            if lambda == sigma {
                return Ok(f);
            }
            return Err(Error::InvalidGraph("tension graph is gated but not optimal".into()));
        }
        let ms = movers(&order);
        let (lines, cap) = linear_model(&f, &ms)?;
        let eps = if lambda > sigma {
            debug_assert!(rest.is_empty());
            line_search(&lines, &cap)
        } else {
            // Already optimal: shed single-gate tension vertices without
            // letting any other edge reach the maximal stretch.
            let mut room = cap;
            for (a, b) in &lines {
                if b.is_positive() && *a < lambda {
                    let r = (&lambda - a) / b / Q::from_integer(2.into());
                    if r < room {
                        room = r;
                    }
                }
            }
            room
        };
        f = apply_moves(&f, &ms, &eps);
        if lambda > sigma {
            if let Some(g) = chart_optimum(&f) {
                f = g;
            }
        }
    }
    Err(Error::IterationCap("optimal map descent"))
}
