use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use snore::embed::{embed_timed, EmbeddingConfig, EmbeddingMode, StageTimings, DEFAULT_BINS};
use snore::eval::{
    repetition_seed, run_label_propagation, run_protocol, run_protocol_with, run_random_baseline, EvalReport,
    ProtocolConfig,
};
use snore::graph::{max_label_node, DatasetStats, NameMap};
use snore::hash::write_hash_dump;
use snore::{load_edge_list, load_embedding, load_labels, pagerank, rank_nodes, save_embedding, Graph, LabelTable};
use snore::{Error, LengthDistribution, PageRankConfig};

use crate::args::{
    Baseline, EmbedArgs, EmbedFlags, EvalArgs, GraphArgs, Method, ProtocolFlags, RankArgs, RankFlags, ReproduceArgs,
    StatsArgs,
};
use crate::reference::{self, Score};
use crate::Failure;

/// Optional base configuration read with `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    embedding: Option<EmbeddingConfig>,
    protocol: Option<ProtocolConfig>,
}

fn read_config(path: Option<&PathBuf>) -> Result<ConfigFile, Failure> {
    let Some(path) = path else { return Ok(ConfigFile::default()) };
    let text = fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Configuration snapshot written next to every output.
#[derive(Debug, Serialize)]
struct RunConfig<'a> {
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    dataset: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    edges: Option<&'a Path>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<&'a Path>,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    embedding: Option<&'a EmbeddingConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sdf_embedding: Option<&'a EmbeddingConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    protocol: Option<&'a ProtocolConfig>,
}

fn write_file(path: &Path, body: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, body).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn write_run_config(dir: &Path, run: &RunConfig<'_>) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(run).expect("run config serialises") + "\n";
    write_file(&dir.join("run.json"), json)
}

fn timing(stage: &str, secs: f64) {
    eprintln!("{stage}\t{secs:.6}");
}

fn load_graph(g: &GraphArgs) -> Result<Graph, Failure> {
    Ok(load_edge_list(&g.edges, g.directed)?)
}

fn pagerank_config(flags: &RankFlags, base: PageRankConfig) -> PageRankConfig {
    let mut cfg = base;
    if flags.pure_power {
        cfg.damping = 1.0;
    }
    if let Some(d) = flags.damping {
        cfg.damping = d;
    }
    cfg
}

/// Applies explicit flags on top of `base`.
fn embedding_config(flags: &EmbedFlags, base: EmbeddingConfig, sdf: bool) -> Result<EmbeddingConfig, Failure> {
    let mut cfg = base;
    if let Some(s) = flags.seed {
        cfg.walk.seed = s;
    }
    if let Some(e) = flags.epsilon {
        cfg.walk.epsilon = e;
    }
    if let Some(m) = flags.max_len {
        cfg.walk.lengths = LengthDistribution::uniform(m)?;
    }
    if let Some(n) = flags.num_walks {
        cfg.walk.num_walks = n;
    }
    if let Some(m) = flags.metric {
        cfg.metric = m;
    }
    cfg.pagerank = pagerank_config(&flags.rank, cfg.pagerank);
    if sdf {
        let budget_dim = flags.budget_dim.unwrap_or(match cfg.mode {
            EmbeddingMode::Sdf { budget_dim } => budget_dim,
            EmbeddingMode::Fixed { .. } => 256,
        });
        cfg.mode = EmbeddingMode::Sdf { budget_dim };
        // Digitization only makes sense for similarities bounded by 1.
        cfg.bins = flags.bins.unwrap_or(if cfg.metric.is_bounded_similarity() { DEFAULT_BINS } else { 0 });
    } else {
        if let Some(d) = flags.dim {
            cfg.mode = EmbeddingMode::Fixed { dim: d };
        } else if matches!(cfg.mode, EmbeddingMode::Sdf { .. }) {
            cfg.mode = EmbeddingMode::Fixed { dim: 2048 };
        }
        if let Some(b) = flags.bins {
            cfg.bins = b;
        }
    }
    Ok(cfg)
}

fn protocol_config(flags: &ProtocolFlags, base: ProtocolConfig, seed: Option<u64>) -> ProtocolConfig {
    let mut cfg = base;
    if let Some(f) = &flags.fractions {
        cfg.train_fractions = f.clone();
    }
    if let Some(s) = flags.shuffles {
        cfg.shuffles = s;
    }
    if let Some(r) = flags.reps {
        cfg.repetitions = r;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg
}

fn report_timings(t: &StageTimings) {
    timing("walks+hash", t.hashing.as_secs_f64());
    timing("pagerank", t.ranking.as_secs_f64());
    timing("similarity", t.similarity.as_secs_f64());
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::data(format!("{}: {e}", dir.display())))
}

pub fn stats(a: &StatsArgs) -> Result<(), Failure> {
    let g = load_graph(&a.graph)?;
    let labels = match &a.labels {
        Some(p) => Some(labels_for(p, g.num_nodes())?),
        None => None,
    };
    let g = match &labels {
        Some(l) if l.num_nodes() > g.num_nodes() => g.padded_to(l.num_nodes()),
        _ => g,
    };
    let s = DatasetStats::compute(&g, labels.as_ref());
    println!("{}", serde_json::to_string(&s).expect("stats serialise"));
    Ok(())
}

/// Labels over at least `min_nodes` nodes (more if the file names more).
fn labels_for(path: &Path, min_nodes: usize) -> Result<LabelTable, Failure> {
    let n = max_label_node(path)?.map_or(min_nodes, |m| min_nodes.max(m + 1));
    Ok(load_labels(path, n)?)
}

pub fn rank(a: &RankArgs) -> Result<(), Failure> {
    let g = load_graph(&a.graph)?;
    let names = a.names.as_ref().map(NameMap::load).transpose()?;
    let t = Instant::now();
    let pr = pagerank(&g, &pagerank_config(&a.rank, PageRankConfig::default()))?;
    timing("pagerank", t.elapsed().as_secs_f64());
    if !pr.converged {
        eprintln!("warning: pagerank stopped after {} iterations without converging", pr.iterations);
    }
    let r = rank_nodes(pr.scores);
    let mut out = String::new();
    for &n in &r.order {
        let score = r.scores[n as usize];
        match names.as_ref().and_then(|m| m.name(n)) {
            Some(name) => writeln!(out, "{name}\t{score:.10}"),
            None => writeln!(out, "{n}\t{score:.10}"),
        }
        .expect("writing to a string");
    }
    match &a.out {
        Some(p) => write_file(p, out),
        None => {
            let _ = std::io::stdout().lock().write_all(out.as_bytes());
            Ok(())
        }
    }
}

pub fn embed(a: &EmbedArgs) -> Result<(), Failure> {
    let base = read_config(a.embed.config.as_ref())?;
    let cfg = embedding_config(&a.embed, base.embedding.unwrap_or_default(), a.embed.sdf)?;
    let g = load_graph(&a.graph)?;
    cfg.validate(g.num_nodes())?;
    let (e, t) = embed_timed(&g, &cfg)?;
    report_timings(&t);
    if let Some(p) = &a.hash_dump {
        let hashes = snore::hash_all(&g, &cfg.walk)?;
        write_hash_dump(&hashes, p)?;
    }
    save_embedding(&e, &a.out)?;
    let run = RunConfig {
        command: "embed",
        dataset: None,
        edges: Some(&a.graph.edges),
        labels: None,
        seed: cfg.walk.seed,
        embedding: Some(&cfg),
        sdf_embedding: None,
        protocol: None,
    };
    write_run_config(&a.out, &run)?;
    let summary = serde_json::json!({
        "rows": e.num_rows(),
        "cols": e.num_cols(),
        "nnz": e.nnz(),
        "value_bytes": e.value_payload_bytes(),
        "seed": cfg.walk.seed,
    });
    println!("{summary}");
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<(), Failure> {
    let base = read_config(a.config.as_ref())?;
    let cfg = protocol_config(&a.protocol, base.protocol.unwrap_or_default(), a.seed);
    cfg.validate()?;
    let t = Instant::now();
    let report = match a.baseline {
        None => {
            let dir = a.embedding.as_ref().expect("clap requires --embedding without --baseline");
            let e = load_embedding(dir)?;
            if let Some(m) = max_label_node(&a.labels)? {
                if m >= e.num_rows() {
                    return Err(Error::ShapeMismatch { rows: e.num_rows(), nodes: m + 1 }.into());
                }
            }
            let labels = load_labels(&a.labels, e.num_rows())?;
            run_protocol(&e, &labels, &cfg)?
        }
        Some(Baseline::Random) => {
            let n = match (&a.embedding, &a.edges) {
                (Some(dir), _) => load_embedding(dir)?.num_rows(),
                (None, Some(edges)) => load_edge_list(edges, a.directed)?.num_nodes(),
                (None, None) => 0,
            };
            let labels = labels_for(&a.labels, n)?;
            run_random_baseline(&labels, &cfg, a.dim)?
        }
        Some(Baseline::Lp) => {
            let edges = a.edges.as_ref().expect("clap requires --edges for lp");
            let g = load_edge_list(edges, a.directed)?;
            let labels = labels_for(&a.labels, g.num_nodes())?;
            let g = g.padded_to(labels.num_nodes());
            run_label_propagation(&g, &labels, &cfg, a.alpha)?
        }
    };
    timing("eval", t.elapsed().as_secs_f64());
    report.write(&a.out, "report")?;
    let run = RunConfig {
        command: "eval",
        dataset: None,
        edges: a.edges.as_deref(),
        labels: Some(&a.labels),
        seed: report.protocol.seed,
        embedding: None,
        sdf_embedding: None,
        protocol: Some(&report.protocol),
    };
    write_run_config(&a.out, &run)?;
    print!("{}", report.to_tsv());
    println!("aggregate\t{:.6}\t{:.6}\t{:.6}\t{:.6}", report.micro_mean, report.micro_std, report.macro_mean, report.macro_std);
    Ok(())
}

struct MethodRun {
    method: Method,
    report: EvalReport,
    secs: f64,
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Snore => "snore",
        Method::SnoreSdf => "snore-sdf",
        Method::Lp => "label-propagation",
        Method::Random => "random",
    }
}

fn published_scores(d: &reference::Dataset, m: Method) -> (Option<Score>, Option<Score>) {
    let pick = |s: &reference::MethodScores| match m {
        Method::Snore => s.snore,
        Method::SnoreSdf => s.snore_sdf,
        Method::Lp => s.label_propagation,
        Method::Random => s.random,
    };
    (pick(&d.micro_f1), pick(&d.macro_f1))
}

fn fmt_score(s: Option<Score>) -> String {
    s.map_or("-".into(), |s| format!("{:.3}±{:.3}", s.mean, s.std))
}

fn fmt_delta(measured: f64, s: Option<Score>) -> String {
    s.map_or("-".into(), |s| format!("{:+.3}", measured - s.mean))
}

pub fn reproduce(a: &ReproduceArgs) -> Result<(), Failure> {
    let Some(reference) = reference::lookup(&a.dataset) else {
        return Err(Failure::usage(format!(
            "unknown dataset `{}`; known datasets: {}",
            a.dataset,
            reference::names().join(", ")
        )));
    };
    let dir = a.data_dir.join(&reference.name);
    let (edges, labels_path) = (dir.join("edges.tsv"), dir.join("labels.tsv"));
    let base = read_config(a.embed.config.as_ref())?;
    let seed = a.embed.seed.unwrap_or(42);
    let protocol = protocol_config(&a.protocol, base.protocol.clone().unwrap_or_default(), Some(seed));
    protocol.validate()?;

    let g = load_edge_list(&edges, false)?;
    let labels = labels_for(&labels_path, g.num_nodes())?;
    let g = g.padded_to(labels.num_nodes());
    let stats = DatasetStats::compute(&g, Some(&labels));
    eprintln!(
        "dataset\t{}\tnodes {} edges {} components {} classes {} (published: {} {} {} {})",
        reference.display,
        stats.nodes,
        stats.edges,
        stats.components,
        stats.classes,
        reference.nodes,
        reference.edges,
        reference.components,
        reference.classes
    );

    let mut base_embedding = base.embedding.clone().unwrap_or_default();
    base_embedding.walk.seed = seed;
    let fixed = {
        let mut c = embedding_config(&a.embed, base_embedding.clone(), false)?;
        if let EmbeddingMode::Fixed { dim } = c.mode {
            if dim > g.num_nodes() {
                eprintln!("note: {dim} pivots requested for {} nodes; using every node", g.num_nodes());
                c.mode = EmbeddingMode::Fixed { dim: g.num_nodes() };
            }
        }
        c
    };
    let sdf = embedding_config(&a.embed, base_embedding, true)?;
    for m in &a.methods {
        match m {
            Method::Snore => fixed.validate(g.num_nodes())?,
            Method::SnoreSdf => sdf.validate(g.num_nodes())?,
            _ => {}
        }
    }
    create_dir(&a.out)?;

    let mut runs = Vec::new();
    for &method in &a.methods {
        let t = Instant::now();
        let report = match method {
            Method::Snore | Method::SnoreSdf => {
                let cfg = if method == Method::Snore { &fixed } else { &sdf };
                let name = method_name(method);
                let embed_rep = |rep: usize| {
                    let mut c = cfg.clone();
                    c.walk.seed = if a.reuse_embedding { seed } else { repetition_seed(seed, rep) };
                    let (e, t) = embed_timed(&g, &c)?;
                    report_timings(&t);
                    Ok(e)
                };
                if a.reuse_embedding {
                    let e = embed_rep(0)?;
                    let mut r = run_protocol(&e, &labels, &protocol)?;
                    r.method = name.into();
                    r
                } else {
                    run_protocol_with(&labels, &protocol, name, embed_rep)?
                }
            }
            Method::Lp => run_label_propagation(&g, &labels, &protocol, a.alpha)?,
            Method::Random => run_random_baseline(&labels, &protocol, snore::eval::RANDOM_DIM)?,
        };
        let secs = t.elapsed().as_secs_f64();
        timing(method_name(method), secs);
        report.write(&a.out, method_name(method))?;
        runs.push(MethodRun { method, report, secs });
    }

    let mut table = String::from("method\tmicro\tpublished_micro\tdelta_micro\tmacro\tpublished_macro\tdelta_macro\tseconds\n");
    for r in &runs {
        let (published_micro, published_macro) = published_scores(&reference, r.method);
        writeln!(
            table,
            "{}\t{:.3}±{:.3}\t{}\t{}\t{:.3}±{:.3}\t{}\t{}\t{:.1}",
            method_name(r.method),
            r.report.micro_mean,
            r.report.micro_std,
            fmt_score(published_micro),
            fmt_delta(r.report.micro_mean, published_micro),
            r.report.macro_mean,
            r.report.macro_std,
            fmt_score(published_macro),
            fmt_delta(r.report.macro_mean, published_macro),
            r.secs
        )
        .expect("writing to a string");
    }
    write_file(&a.out.join("comparison.tsv"), &table)?;
    let run = RunConfig {
        command: "reproduce",
        dataset: Some(&reference.name),
        edges: Some(&edges),
        labels: Some(&labels_path),
        seed,
        embedding: a.methods.contains(&Method::Snore).then_some(&fixed),
        sdf_embedding: a.methods.contains(&Method::SnoreSdf).then_some(&sdf),
        protocol: Some(&protocol),
    };
    write_run_config(&a.out, &run)?;
    print!("{table}");
    Ok(())
}
