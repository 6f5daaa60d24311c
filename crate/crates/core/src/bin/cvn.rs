use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::RngCore;
use serde_json::{json, Value};

use cvn::certificate::{fs_distance_certificate, nearby_certificate};
use cvn::graph::MarkedGraph;
use cvn::morphism::GraphMorphism;
use cvn::optimal::optimal_map;
use cvn::path::Point;
use cvn::random::{random_graph, rng};
use cvn::rational::{format_q, parse_q, qi};
use cvn::skora::{next_turn, stretch_one_rescaling, FoldingPath, Mode};
use cvn::splittings::{
    common_refinement, dng_distance_upper, ff_adjacency_certificate, is_tied, refinement_in, upsilon, upsilon_f, Bounded, FfWitness,
    Refinement, TIE_BOUND,
};
use cvn::folding::{fold_turn, max_foldable};
use cvn::whitehead::{in_proper_free_factor, is_primitive, minimize, whitehead_graph};
use cvn::{Error, Word};

/// Exact marked metric graphs: generation, folding paths and certificates.
#[derive(Parser)]
#[command(name = "cvn", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 3)]
    rank: usize,
    #[arg(long, global = true, default_value_t = 1)]
    count: usize,
    /// Search budget (candidate bases, folds or trees depending on the command).
    #[arg(long, global = true, default_value_t = 2000)]
    budget: usize,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Subcommand)]
enum Cmd {
    /// Random valid volume-one marked graphs.
    Gen,
    /// Folding path from a source to a target graph.
    Skora(PairArgs),
    /// One maximal fold of the guide from a source to a target.
    Fold(PairArgs),
    /// One-edge splittings and the corank-one factor of a graph.
    Project {
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// A free factor short in both graphs.
    Tie {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 1)]
        factor_rank: usize,
        #[arg(long, default_value_t = TIE_BOUND)]
        bound: i64,
    },
    /// Certificates with independent re-validation.
    Cert {
        #[command(subcommand)]
        kind: CertKind,
    },
    /// Whitehead graph, minimization and primitivity of a word.
    Whitehead {
        #[arg(long)]
        word: String,
        #[arg(long)]
        min: bool,
        #[arg(long)]
        primitive: bool,
        #[arg(long)]
        graph_dot: bool,
    },
}

#[derive(Args, Clone)]
struct PairArgs {
    #[arg(long)]
    source: Option<PathBuf>,
    #[arg(long)]
    target: Option<PathBuf>,
    #[arg(long)]
    normalized: bool,
}

#[derive(Subcommand)]
enum CertKind {
    /// Splitting path along the folding path of the optimal map.
    Fs {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 0)]
        edge: usize,
        /// Position on the target edge as a fraction of its length.
        #[arg(long, default_value = "1/3")]
        offset: String,
    },
    /// Free-factor chain between two edge splittings of one graph.
    Ff {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, num_args = 2, default_values_t = [0, 1])]
        edges: Vec<usize>,
        /// Search for a refinement within `--budget` instead of reading it off the graph.
        #[arg(long)]
        search: bool,
    },
    /// Chain of pairwise tied graphs.
    Dng {
        #[arg(long, num_args = 1..)]
        chain: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        factor_rank: usize,
        #[arg(long, default_value_t = TIE_BOUND)]
        bound: i64,
    },
    /// Common collapse of a graph and its collapse along a forest.
    Nearby {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, num_args = 0..)]
        forest: Vec<usize>,
    },
}

enum Failure {
    Validation(String),
    Budget(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::IterationCap(_) => Failure::Budget(e.to_string()),
            Error::Parse(_) | Error::RankTooSmall(_) | Error::OutOfRange(_) => Failure::Usage(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

type Out = std::result::Result<String, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = run(&cli);
    match result {
        Ok(text) => {
            let write = match &cli.common.out {
                Some(p) => fs::write(p, text.as_bytes()).map_err(|e| e.to_string()),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            match write {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(4)
                }
            }
        }
        Err(Failure::Validation(m)) => {
            eprintln!("validation failure: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(m)) => {
            eprintln!("budget exhausted: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("usage: {m}");
            ExitCode::from(4)
        }
    }
}

fn run(cli: &Cli) -> Out {
    let c = &cli.common;
    if c.rank < 2 {
        return Err(Failure::Usage(format!("rank must be at least 2, got {}", c.rank)));
    }
    match &cli.cmd {
        Cmd::Gen => cmd_gen(c),
        Cmd::Skora(p) => cmd_skora(c, p),
        Cmd::Fold(p) => cmd_fold(c, p),
        Cmd::Project { graph } => cmd_project(c, graph),
        Cmd::Tie { pair, factor_rank, bound } => {
            let (s, t) = load_pair(c, pair)?;
            let found = is_tied(&s, &t, *factor_rank, &qi(*bound))?;
            match found {
                Bounded::Found(f) => emit(json!({ "tied": true, "factor": f, "generators": words(&f.generators()) })),
                Bounded::Exhausted => Err(Failure::Budget("no tied factor within the bound".into())),
            }
        }
        Cmd::Cert { kind } => cmd_cert(c, kind),
        Cmd::Whitehead { word, min, primitive, graph_dot } => {
            let w = Word::parse(word)?;
            if w.is_trivial() {
                return Err(Failure::Usage("trivial word".into()));
            }
            let rank = c.rank.max(w.max_generator());
            let g = whitehead_graph(std::slice::from_ref(&w), rank);
            if *graph_dot || c.format == Format::Dot {
                return Ok(g.to_dot());
            }
            let mut v = json!({
                "word": w.to_string(),
                "rank": rank,
                "connected": g.is_connected(),
                "cut_vertex": g.has_cut_vertex(),
                "flagged": g.flagged,
            });
            if *min {
                let (m, auts) = minimize(&w, rank);
                v["minimum"] = json!(m.to_string());
                v["moves"] = json!(auts);
            }
            if *primitive {
                v["primitive"] = json!(is_primitive(&w, rank));
                v["in_proper_free_factor"] = json!(in_proper_free_factor(&w, rank));
            }
            emit(v)
        }
    }
}

fn emit(v: Value) -> Out {
    Ok(serde_json::to_string_pretty(&v).expect("json") + "\n")
}

fn words(ws: &[Word]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}

fn load(p: &PathBuf) -> std::result::Result<MarkedGraph, Failure> {
    let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
    let g = MarkedGraph::from_json(&text)?;
    let bad = g.validate();
    if !bad.is_empty() {
        let msg: Vec<String> = bad.iter().map(|v| v.to_string()).collect();
        return Err(Failure::Validation(msg.join("; ")));
    }
    Ok(g)
}

/// Seeds for `count` instances, all drawn from one generator.
fn seeds(c: &Common, count: usize) -> Vec<u64> {
    let mut r = rng(c.seed);
    (0..count).map(|_| r.next_u64()).collect()
}

fn seeded_graphs(c: &Common, count: usize) -> Vec<MarkedGraph> {
    par_map(c, seeds(c, count), |s| random_graph(&mut rng(s), c.rank, 2 * c.rank))
}

/// Maps in parallel when `--threads` asks for it; output order follows input order.
fn par_map<T: Send + Sync, U: Send>(c: &Common, items: Vec<T>, f: impl Fn(T) -> U + Sync) -> Vec<U> {
    let threads = c.threads.unwrap_or(1).max(1);
    if threads == 1 || items.len() < 2 {
        return items.into_iter().map(f).collect();
    }
    let mut slots: Vec<Option<T>> = items.into_iter().map(Some).collect();
    let chunk = slots.len().div_ceil(threads);
    let mut out: Vec<Vec<U>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = slots
            .chunks_mut(chunk)
            .map(|part| {
                let f = &f;
                scope.spawn(move || part.iter_mut().map(|x| f(x.take().unwrap())).collect::<Vec<U>>())
            })
            .collect();
        out = handles.into_iter().map(|h| h.join().expect("worker panicked")).collect();
    });
    out.into_iter().flatten().collect()
}

fn load_pair(c: &Common, p: &PairArgs) -> std::result::Result<(MarkedGraph, MarkedGraph), Failure> {
    let gen = seeded_graphs(c, 2);
    let s = match &p.source {
        Some(f) => load(f)?,
        None => gen[0].clone(),
    };
    let t = match &p.target {
        Some(f) => load(f)?,
        None => gen[1].clone(),
    };
    if s.rank() != t.rank() {
        return Err(Failure::Validation(format!("rank mismatch: {} vs {}", s.rank(), t.rank())));
    }
    Ok((s, t))
}

fn load_one(c: &Common, p: &Option<PathBuf>) -> std::result::Result<MarkedGraph, Failure> {
    match p {
        Some(f) => load(f),
        None => Ok(seeded_graphs(c, 1).remove(0)),
    }
}

fn cmd_gen(c: &Common) -> Out {
    let graphs = seeded_graphs(c, c.count);
    match c.format {
        Format::Dot => Ok(graphs.iter().map(|g| g.to_dot()).collect::<Vec<_>>().join("\n")),
        Format::Json => emit(serde_json::to_value(&graphs).expect("json")),
    }
}

fn cmd_skora(c: &Common, p: &PairArgs) -> Out {
    let (s, t) = load_pair(c, p)?;
    let mode = if p.normalized { Mode::Normalized } else { Mode::Unnormalized };
    let path = FoldingPath::skora(&s, &t, mode)?;
    if c.format == Format::Dot {
        return Ok((0..path.stages.len()).map(|k| path.stage_graph(k).to_dot()).collect::<Vec<_>>().join("\n"));
    }
    let mut volumes = Vec::new();
    let mut clocks = Vec::new();
    let mut projections = Vec::new();
    for k in 0..path.stages.len() {
        let g = path.stage_graph(k);
        volumes.push(format_q(&g.volume()));
        let (n, len) = path.clocks(k);
        clocks.push(json!([n, format_q(&len)]));
        projections.push(match upsilon_f(&g.normalize()) {
            Ok((e, f)) => json!({ "edge": e, "generators": words(&f.generators()) }),
            Err(_) => Value::Null,
        });
    }
    emit(json!({
        "path": serde_json::to_value(&path).expect("json"),
        "summary": {
            "folds": path.len(),
            "volumes": volumes,
            "clocks": clocks,
            "projections": projections,
        }
    }))
}

fn cmd_fold(c: &Common, p: &PairArgs) -> Out {
    let (s, t) = load_pair(c, p)?;
    let f = optimal_map(&s, &t)?;
    let (g, guide, collapsed) = stretch_one_rescaling(&f)?;
    let Some(turn) = next_turn(&guide)? else {
        return emit(json!({ "fold": Value::Null, "graph": g, "collapsed": collapsed }));
    };
    let amount = max_foldable(&g, &guide, &turn)?;
    let (h, fold, guide2) = fold_turn(&g, &guide, &turn, &amount)?;
    if c.format == Format::Dot {
        return Ok(h.to_dot());
    }
    emit(json!({
        "before": g,
        "collapsed": collapsed,
        "turn": fold.turn,
        "amount": format_q(&fold.amount),
        "graph": h,
        "guide": guide2.to_json_value(),
    }))
}

fn cmd_project(c: &Common, graph: &Option<PathBuf>) -> Out {
    let g = load_one(c, graph)?.normalize();
    let ups = upsilon(&g)?;
    let (e, f) = upsilon_f(&g)?;
    let splittings: Vec<Value> = ups
        .iter()
        .enumerate()
        .map(|(i, s)| {
            json!({
                "edge": i,
                "kind": s.kind,
                "vertex_groups": s.vertex_groups.iter().map(|v| words(&v.generators())).collect::<Vec<_>>(),
            })
        })
        .collect();
    emit(json!({
        "graph": g,
        "splittings": splittings,
        "corank_one": { "edge": e, "length": format_q(g.length(e)), "generators": words(&f.generators()), "factor": f },
    }))
}

fn cmd_cert(c: &Common, kind: &CertKind) -> Out {
    match kind {
        CertKind::Fs { pair, edge, offset } => {
            let (s, t) = load_pair(c, pair)?;
            let frac = parse_q(offset)?;
            if *edge >= t.edge_count() {
                return Err(Failure::Usage(format!("target has no edge {edge}")));
            }
            let f: GraphMorphism = optimal_map(&s, &t)?;
            let y = Point::Edge { edge: *edge, offset: t.length(*edge) * frac };
            let cert = fs_distance_certificate(&f, &y)?;
            let ok = cert.validates();
            if !ok {
                return Err(Failure::Validation("fs certificate failed re-validation".into()));
            }
            emit(json!({
                "kind": "fs",
                "valid": ok,
                "length": cert.len(),
                "preimages": cert.preimages,
                "ratio": format_q(&cert.ratio()),
                "certificate": serde_json::to_value(&cert).expect("json"),
            }))
        }
        CertKind::Ff { graph, edges, search } => {
            let g = load_one(c, graph)?;
            let (e, f) = (edges[0], edges[1]);
            if e >= g.edge_count() || f >= g.edge_count() {
                return Err(Failure::Usage("edge out of range".into()));
            }
            let ups = upsilon(&g)?;
            let wit = if *search {
                match common_refinement(&ups[e], &ups[f], c.budget) {
                    Bounded::Found(r) => r,
                    Bounded::Exhausted => return Err(Failure::Budget("no refinement within the budget".into())),
                }
            } else if e == f {
                Refinement::Same
            } else {
                refinement_in(&g, e, f)
            };
            let chain = ff_adjacency_certificate(&ups[e], &ups[f], &FfWitness::Refinement(wit))?;
            let ok = chain.validates(g.rank()) && chain.len() <= 8;
            if !ok {
                return Err(Failure::Validation("ff chain failed re-validation".into()));
            }
            emit(json!({
                "kind": "ff",
                "valid": ok,
                "length": chain.len(),
                "factors": chain.factors.iter().map(|f| words(&f.generators())).collect::<Vec<_>>(),
            }))
        }
        CertKind::Dng { chain, factor_rank, bound } => {
            let graphs: Vec<MarkedGraph> = chain.iter().map(load).collect::<std::result::Result<_, _>>()?;
            if graphs.is_empty() {
                return Err(Failure::Usage("empty chain".into()));
            }
            let d = dng_distance_upper(&graphs[0], graphs.last().unwrap(), *factor_rank, &qi(*bound), &graphs);
            match d {
                Ok(d) => emit(json!({ "kind": "dng", "valid": true, "upper_bound": d })),
                Err(Error::ChainBroken(i)) => Err(Failure::Validation(format!("chain broken at pair {i}"))),
                Err(e) => Err(e.into()),
            }
        }
        CertKind::Nearby { graph, forest } => {
            let g = load_one(c, graph)?;
            let forest = if forest.is_empty() && graph.is_none() {
                cvn::graph::MarkedGraph::tree_edges(&g.spanning_tree(g.basepoint())).into_iter().take(1).collect()
            } else {
                forest.clone()
            };
            let cert = nearby_certificate(&g, &forest)?;
            emit(json!({
                "kind": "nearby",
                "valid": cert.validates(),
                "distance_bound": cert.distance_bound(),
                "certificate": serde_json::to_value(&cert).expect("json"),
            }))
        }
    }
}
