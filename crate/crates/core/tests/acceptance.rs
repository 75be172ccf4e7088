//! Acceptance criteria 1-10. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line even when all pass.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use topictrace::app::{run_pipeline, RunConfig, Stage};
use topictrace::corpus::{build_vocabulary, Document};
use topictrace::graph::{build_graph, classify_events, similarity, EventKind, Measure, SimilarityGraph, TopicNode};
use topictrace::hdp::{crp_table_count, stick_breaking, HdpState, Hyperparams, ScanOrder, Topic};
use topictrace::stats::{dirichlet, seeded_rng};
use topictrace::synth::{disjoint_spec, evaluate, merge_spec, split_spec, EvalConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_budget(start: Instant, budget: Duration, detail: String) -> Outcome {
    let took = start.elapsed();
    check(
        took < budget,
        format!("{detail}; {:.1}s of {}s", took.as_secs_f64(), budget.as_secs()),
    )
}

fn stick_breaking_law() -> Outcome {
    let start = Instant::now();
    let n = 100_000;
    let mut rng = seeded_rng(11);
    let mut notes = Vec::new();
    let mut ok = true;
    for gamma in [0.1, 1.0, 10.0] {
        let mut sum_first = 0.0;
        let mut worst = 0.0f64;
        for _ in 0..n {
            let w = stick_breaking(gamma, 1e-8, &mut rng);
            worst = worst.max((w.total() - 1.0).abs());
            sum_first += w.weights[0];
        }
        let mean = sum_first / n as f64;
        let expect = 1.0 / (1.0 + gamma);
        let var = gamma / ((1.0 + gamma).powi(2) * (2.0 + gamma));
        let z = (mean - expect) / (var / n as f64).sqrt();
        ok &= worst <= 1e-12 && z.abs() < 3.0;
        notes.push(format!("gamma={gamma}: z={z:.2} max|sum-1|={worst:.1e}"));
    }
    let detail = notes.join(", ");
    if ok {
        within_budget(start, Duration::from_secs(30), detail)
    } else {
        Err(detail)
    }
}

fn sampler_integrity() -> Outcome {
    let start = Instant::now();
    let v = 40;
    let mut rng = seeded_rng(21);
    let docs: Vec<Vec<u32>> = (0..50)
        .map(|_| (0..100).map(|_| rng.random_range(0..v as u32)).collect())
        .collect();
    let mut state = HdpState::init(&docs, v, Hyperparams::default(), 2, 5).map_err(|e| e.to_string())?;
    state.set_strict(true);
    let mut worst = 0.0f64;
    for sweep in 1..=1000 {
        state
            .gibbs_sweep(&docs, ScanOrder::Fixed)
            .map_err(|e| format!("sweep {sweep}: {e}"))?;
        if sweep % 5 == 0 {
            state
                .resample_concentrations(20)
                .map_err(|e| format!("sweep {sweep}: {e}"))?;
        }
        state
            .check_invariants(&docs)
            .map_err(|e| format!("sweep {sweep}: {e}"))?;
        for (j, d) in docs.iter().enumerate() {
            let n: u32 = (0..state.num_topics()).map(|k| state.doc_topic_count(j, k)).sum();
            if n as usize != d.len() {
                return Err(format!("sweep {sweep}: document {j} holds {n} of {} tokens", d.len()));
            }
        }
        for k in 0..state.num_topics() {
            let n: u64 = (0..v).map(|w| state.topic_word_count(k, w) as u64).sum();
            if n != state.topic_totals()[k] || n == 0 {
                return Err(format!("sweep {sweep}: topic {k} word counts sum to {n}"));
            }
        }
        let stick = state.beta().iter().sum::<f64>() + state.beta_residual();
        worst = worst.max((stick - 1.0).abs());
        if worst > 1e-9 {
            return Err(format!("sweep {sweep}: sticks sum to {stick}"));
        }
    }
    within_budget(
        start,
        Duration::from_secs(120),
        format!(
            "1000 sweeps, final K={}, max|sum beta-1|={worst:.1e}",
            state.num_topics()
        ),
    )
}

fn crp_table_law() -> Outcome {
    let n = 100_000;
    let mut rng = seeded_rng(31);
    let mut counts = [0u32; 4];
    for _ in 0..n {
        counts[crp_table_count(3, 1.0, &mut rng) as usize] += 1;
    }
    let exact = [0.0, 1.0 / 3.0, 1.0 / 2.0, 1.0 / 6.0];
    let mut ok = counts[0] == 0;
    let mut notes = Vec::new();
    for m in 1..=3 {
        let p = exact[m];
        let freq = counts[m] as f64 / n as f64;
        let z = (freq - p) / (p * (1.0 - p) / n as f64).sqrt();
        ok &= z.abs() < 3.0;
        notes.push(format!("m={m}: {freq:.4} (z={z:.2})"));
    }
    check(ok, notes.join(", "))
}

fn planted_recovery() -> Outcome {
    let config = EvalConfig::default();
    let mut hits = 0;
    let mut notes = Vec::new();
    let mut slowest = Duration::ZERO;
    for seed in 0..10u64 {
        let start = Instant::now();
        let spec = disjoint_spec(5, 50, 1, 200, 100, 1000 + seed);
        let eval = evaluate(&spec, &config, seed).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed());
        let k = eval.diagnostics[0].final_k();
        let score = eval.matching.score;
        if (5..=8).contains(&k) && score >= 0.8 {
            hits += 1;
        }
        notes.push(format!("K={k}/{score:.2}"));
    }
    check(
        hits >= 8 && slowest < Duration::from_secs(300),
        format!(
            "{hits}/10 seeds recovered [{}]; slowest seed {:.1}s",
            notes.join(" "),
            slowest.as_secs_f64()
        ),
    )
}

fn capacity_growth() -> Outcome {
    let config = EvalConfig::default();
    let mut medians = Vec::new();
    for planted in [2, 4, 8] {
        let mut ks = Vec::new();
        for seed in 0..10u64 {
            let spec = disjoint_spec(planted, 50, 1, 200, 100, 2000 + seed);
            let eval = evaluate(&spec, &config, seed).map_err(|e| e.to_string())?;
            ks.push(eval.diagnostics[0].final_k() as f64);
        }
        ks.sort_by(f64::total_cmp);
        medians.push((ks[4] + ks[5]) / 2.0);
    }
    check(
        medians.windows(2).all(|w| w[0] <= w[1]),
        format!("median K for 2/4/8 planted topics: {medians:?}"),
    )
}

fn random_topics(rng: &mut impl Rng, epoch: usize, k: usize, v: usize) -> Vec<Topic> {
    (0..k)
        .map(|id| {
            let support: Vec<f64> = (0..v)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        rng.random_range(0.1..1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut phi = support;
            if phi.iter().all(|&x| x == 0.0) {
                phi[rng.random_range(0..v)] = 1.0;
            }
            let total: f64 = phi.iter().sum();
            phi.iter_mut().for_each(|x| *x /= total);
            Topic::new(epoch, id, phi, 10 + id as u64, &[])
        })
        .collect()
}

type EventKey = (EventKind, TopicNode, Vec<TopicNode>);

/// Degree counting straight off the edge list.
fn brute_force_events(graph: &SimilarityGraph, nodes: &[TopicNode]) -> BTreeSet<EventKey> {
    let mut outs: BTreeMap<TopicNode, Vec<TopicNode>> = nodes.iter().map(|n| (*n, Vec::new())).collect();
    let mut ins = outs.clone();
    for e in graph.edges() {
        outs.get_mut(&e.from).unwrap().push(e.to);
        ins.get_mut(&e.to).unwrap().push(e.from);
    }
    let first = nodes.iter().map(|n| n.epoch).min().unwrap();
    let last = nodes.iter().map(|n| n.epoch).max().unwrap();
    let mut out = BTreeSet::new();
    for n in nodes {
        let mut o = outs[n].clone();
        let mut i = ins[n].clone();
        o.sort();
        i.sort();
        if i.is_empty() && n.epoch > first {
            out.insert((EventKind::Emergence, *n, vec![]));
        }
        if o.is_empty() && n.epoch < last {
            out.insert((EventKind::Disappearance, *n, vec![]));
        }
        if o.len() > 1 {
            out.insert((EventKind::Split, *n, o));
        }
        if i.len() > 1 {
            out.insert((EventKind::Merge, *n, i));
        }
    }
    out
}

fn event_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded_rng(61);
    let mut total_events = 0;
    for trial in 0..1000 {
        let n_epochs = rng.random_range(1..=6);
        let v = rng.random_range(2..=8);
        let epochs: Vec<(usize, Vec<Topic>)> = (0..n_epochs)
            .map(|e| {
                let k = rng.random_range(1..=5);
                (e, random_topics(&mut rng, e, k, v))
            })
            .collect();
        let nodes: Vec<TopicNode> = epochs.iter().flat_map(|(_, t)| t.iter().map(TopicNode::from)).collect();
        let threshold = rng.random_range(0.0..0.7);
        let graph = build_graph(&epochs, Measure::Jaccard, threshold).map_err(|e| e.to_string())?;
        let got: Vec<EventKey> = classify_events(&graph)
            .into_iter()
            .map(|e| (e.kind, e.node, e.related))
            .collect();
        let got_set: BTreeSet<EventKey> = got.iter().cloned().collect();
        if got_set.len() != got.len() || got_set != brute_force_events(&graph, &nodes) {
            return Err(format!("graph {trial} disagrees with degree counting"));
        }
        total_events += got.len();
    }
    within_budget(
        start,
        Duration::from_secs(10),
        format!("1000 graphs, {total_events} events identical"),
    )
}

fn js_brute_force(p: &[f64], q: &[f64]) -> f64 {
    let mut jsd = 0.0;
    for i in 0..p.len() {
        let m = 0.5 * (p[i] + q[i]);
        if p[i] > 0.0 {
            jsd += 0.5 * p[i] * (p[i] / m).log2();
        }
        if q[i] > 0.0 {
            jsd += 0.5 * q[i] * (q[i] / m).log2();
        }
    }
    1.0 - jsd
}

fn similarity_measures() -> Outcome {
    let measures = [Measure::Jaccard, Measure::JensenShannon, Measure::L2];
    let sim = |p: &[f64], q: &[f64], m: Measure| similarity(p, q, m).map_err(|e| e.to_string());
    let mut rng = seeded_rng(71);
    let mut worst_js = 0.0f64;
    for _ in 0..1000 {
        let v = rng.random_range(2..30);
        let p = dirichlet(&vec![0.5; v], &mut rng);
        let q = dirichlet(&vec![0.5; v], &mut rng);
        for m in measures {
            if sim(&p, &q, m)? != sim(&q, &p, m)? {
                return Err(format!("{m} is not symmetric"));
            }
            if sim(&p, &p, m)? != 1.0 {
                return Err(format!("{m}(p, p) != 1"));
            }
        }
        worst_js = worst_js.max((sim(&p, &q, Measure::JensenShannon)? - js_brute_force(&p, &q)).abs());
    }
    let a = [0.5, 0.5, 0.0, 0.0];
    let b = [0.0, 0.0, 0.25, 0.75];
    for m in measures {
        let s = sim(&a, &b, m)?;
        if m != Measure::L2 && s.abs() > 1e-12 {
            return Err(format!("{m} on disjoint supports gave {s}"));
        }
    }
    let hand = sim(&[0.5, 0.5, 0.0], &[0.5, 0.0, 0.5], Measure::Jaccard)?;
    check(
        (hand - 1.0 / 3.0).abs() <= 1e-12 && worst_js <= 1e-10,
        format!("hand case {hand:.15}, max JS deviation {worst_js:.1e}"),
    )
}

fn planted_split_and_merge() -> Outcome {
    let start = Instant::now();
    let config = EvalConfig::default();
    let mut found = [0; 2];
    for seed in 0..10u64 {
        for (i, (spec, kind)) in [
            (split_spec(100 + seed), EventKind::Split),
            (merge_spec(100 + seed), EventKind::Merge),
        ]
        .into_iter()
        .enumerate()
        {
            let eval = evaluate(&spec, &config, seed).map_err(|e| e.to_string())?;
            if eval.scores.get(kind).true_positives >= 1 {
                found[i] += 1;
            }
        }
    }
    let detail = format!("split {}/10, merge {}/10", found[0], found[1]);
    if found.iter().all(|&n| n >= 7) {
        within_budget(start, Duration::from_secs(900), detail)
    } else {
        Err(detail)
    }
}

fn vocabulary_energy_rule() -> Outcome {
    let mut rng = seeded_rng(91);
    for trial in 0..1000 {
        let n_terms = rng.random_range(1..40);
        let counts: Vec<usize> = (0..n_terms).map(|_| rng.random_range(1..50)).collect();
        let tokens = counts
            .iter()
            .enumerate()
            .flat_map(|(t, &c)| std::iter::repeat_n(format!("t{t}"), c))
            .collect();
        let docs = [Document {
            id: "d".into(),
            year: 2000,
            tokens,
            encoded: None,
        }];
        let fraction = rng.random_range(0.01..=1.0);
        let vocab = build_vocabulary(&docs, fraction).map_err(|e| e.to_string())?;
        let total: usize = counts.iter().sum();
        let kept: Vec<u64> = vocab.counts().to_vec();
        let covered: u64 = kept.iter().sum();
        let without_last = covered - kept.last().copied().unwrap_or(0);
        let mut sorted = counts.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        let prefix_ok = kept.iter().zip(&sorted).all(|(a, b)| *a as usize == *b);
        if !(prefix_ok && covered as f64 / total as f64 >= fraction && (without_last as f64 / total as f64) < fraction)
        {
            return Err(format!("table {trial}: prefix of {} terms breaks the rule", kept.len()));
        }
    }
    let hand: Vec<String> = [("a", 5), ("b", 3), ("c", 1), ("d", 1)]
        .iter()
        .flat_map(|(t, c)| std::iter::repeat_n(t.to_string(), *c))
        .collect();
    let docs = [Document {
        id: "h".into(),
        year: 2000,
        tokens: hand,
        encoded: None,
    }];
    let vocab = build_vocabulary(&docs, 0.9).map_err(|e| e.to_string())?;
    check(
        vocab.terms() == ["a", "b", "c"],
        format!(
            "1000 tables satisfy coverage and minimality; hand case {:?}",
            vocab.terms()
        ),
    )
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).into_iter().flatten().flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn pipeline_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("spec.toml"), split_spec(5).to_toml()).map_err(|e| e.to_string())?;
    let mut snapshots = Vec::new();
    for (name, jobs) in [("a", 1), ("b", 3)] {
        let text = format!(
            "synthetic_spec = \"spec.toml\"\nenergy_fraction = 1.0\nburn_in = 60\nsweeps = 40\nmaster_seed = 17\noutput_dir = \"run_{name}\"\n"
        );
        let path = dir.path().join(format!("{name}.toml"));
        std::fs::write(&path, text).map_err(|e| e.to_string())?;
        let config = RunConfig::load(&path).map_err(|e| e.to_string())?;
        run_pipeline(&config, Stage::Graph, jobs).map_err(|e| e.to_string())?;
        let run = config.output_path();
        let mut files = files_under(&run.join("epochs"));
        files.extend(
            files_under(&run.join("graph"))
                .into_iter()
                .map(|(p, b)| (Path::new("graph").join(p), b)),
        );
        snapshots.push(files);
    }
    let differing: Vec<_> = snapshots[0]
        .iter()
        .filter(|(p, b)| snapshots[1].get(*p) != Some(b))
        .map(|(p, _)| p.display().to_string())
        .collect();
    check(
        differing.is_empty() && snapshots[0].len() == snapshots[1].len() && !snapshots[0].is_empty(),
        format!("{} files compared, differing: {differing:?}", snapshots[0].len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("stick-breaking law", stick_breaking_law),
        ("sampler integrity", sampler_integrity),
        ("CRP table-count law", crp_table_law),
        ("planted-topic recovery", planted_recovery),
        ("capacity growth", capacity_growth),
        ("event-rule oracle", event_oracle),
        ("similarity measures", similarity_measures),
        ("planted split and merge", planted_split_and_merge),
        ("vocabulary energy rule", vocabulary_energy_rule),
        ("pipeline determinism", pipeline_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| *f == n.to_string() || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail} ({secs:.1}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
