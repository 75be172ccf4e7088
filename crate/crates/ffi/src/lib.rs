//! C interface to the topictrace engine.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `tt_*_free`. Every fallible call returns a
//! [`TtStatus`]; on failure [`tt_last_error_message`] describes the error
//! for the calling thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use topictrace::app::{run_pipeline, RunConfig, Stage};
use topictrace::graph::{
    build_graph, classify_events, similarity, trace_lineage, Direction, EventKind, GraphExport, Measure,
    SimilarityGraph, TopicEvent, TopicNode,
};
use topictrace::hdp::{fit_epoch, FitConfig, Schedule, Topic};
use topictrace::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TtStatus {
    Ok = 0,
    /// Invalid argument or configuration.
    Invalid = 1,
    /// Runtime failure inside the engine.
    Runtime = 2,
    Io = 3,
    UnknownNode = 4,
    NullPointer = 5,
    /// A panic was caught at the boundary.
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TtMeasure {
    Jaccard = 0,
    JensenShannon = 1,
    L2 = 2,
}

impl From<TtMeasure> for Measure {
    fn from(m: TtMeasure) -> Self {
        match m {
            TtMeasure::Jaccard => Measure::Jaccard,
            TtMeasure::JensenShannon => Measure::JensenShannon,
            TtMeasure::L2 => Measure::L2,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TtDirection {
    Forward = 0,
    Backward = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TtEventKind {
    Emergence = 0,
    Disappearance = 1,
    Split = 2,
    Merge = 3,
}

impl From<EventKind> for TtEventKind {
    fn from(k: EventKind) -> Self {
        match k {
            EventKind::Emergence => TtEventKind::Emergence,
            EventKind::Disappearance => TtEventKind::Disappearance,
            EventKind::Split => TtEventKind::Split,
            EventKind::Merge => TtEventKind::Merge,
        }
    }
}

/// Sampler settings for [`tt_fit_epoch`]; start from [`tt_fit_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TtFitOptions {
    pub gamma: f64,
    pub alpha0: f64,
    pub eta: f64,
    pub burn_in: usize,
    pub sweeps: usize,
    /// 0 disables concentration resampling.
    pub resample_every: usize,
    pub k_init: usize,
    pub min_mass: u64,
}

impl From<TtFitOptions> for FitConfig {
    fn from(o: TtFitOptions) -> Self {
        let mut c = FitConfig::default();
        c.hyper.gamma = o.gamma;
        c.hyper.alpha0 = o.alpha0;
        c.hyper.eta = o.eta;
        c.schedule = Schedule {
            burn_in: o.burn_in,
            sweeps: o.sweeps,
            resample_every: o.resample_every,
        };
        c.k_init = o.k_init;
        c.min_mass = o.min_mass;
        c
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TtNode {
    pub epoch: usize,
    pub topic_id: usize,
}

impl From<TopicNode> for TtNode {
    fn from(n: TopicNode) -> Self {
        TtNode {
            epoch: n.epoch,
            topic_id: n.topic_id,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TtEdge {
    pub from: TtNode,
    pub to: TtNode,
    pub weight: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TtEvent {
    pub kind: TtEventKind,
    pub node: TtNode,
    /// Entries available through [`tt_graph_event_related`].
    pub related_count: usize,
}

/// Documents of one epoch as vocabulary indices.
pub struct TtCorpus {
    documents: Vec<Vec<u32>>,
    vocab_size: usize,
}

/// Topics of one epoch.
pub struct TtTopicSet {
    epoch: usize,
    topics: Vec<Topic>,
}

pub struct TtGraph {
    graph: SimilarityGraph,
    events: Vec<TopicEvent>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> TtStatus {
    match err {
        Error::UnknownNode { .. } => TtStatus::UnknownNode,
        other => match other.exit_code() {
            1 => TtStatus::Invalid,
            3 => TtStatus::Io,
            _ => TtStatus::Runtime,
        },
    }
}

enum Failure {
    Engine(Error),
    Null(&'static str),
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

/// Run `f`, translating errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TtStatus::Ok,
        Ok(Err(Failure::Engine(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is null"));
            TtStatus::NullPointer
        }
        Ok(Err(Failure::Invalid(msg))) => {
            set_error(msg);
            TtStatus::Invalid
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            TtStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(ptr: *const T, what: &'static str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or(Failure::Null(what))
}

unsafe fn as_mut<'a, T>(ptr: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or(Failure::Null(what))
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn string<'a>(ptr: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure::Invalid(format!("{what} is not valid UTF-8")))
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Engine version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tt_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn tt_fit_options_default() -> TtFitOptions {
    let c = FitConfig::default();
    TtFitOptions {
        gamma: c.hyper.gamma,
        alpha0: c.hyper.alpha0,
        eta: c.hyper.eta,
        burn_in: c.schedule.burn_in,
        sweeps: c.schedule.sweeps,
        resample_every: c.schedule.resample_every,
        k_init: c.k_init,
        min_mass: c.min_mass,
    }
}

/// Similarity of two probability vectors of length `len`.
#[no_mangle]
pub unsafe extern "C" fn tt_similarity(
    p: *const f64,
    q: *const f64,
    len: usize,
    measure: TtMeasure,
    out: *mut f64,
) -> TtStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = similarity(slice(p, len, "p")?, slice(q, len, "q")?, measure.into())?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tt_corpus_new(vocab_size: usize, out: *mut *mut TtCorpus) -> TtStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        if vocab_size == 0 {
            return Err(Failure::Invalid("vocab_size must be positive".into()));
        }
        *out = Box::into_raw(Box::new(TtCorpus {
            documents: Vec::new(),
            vocab_size,
        }));
        Ok(())
    })
}

/// Append a document given as `len` vocabulary indices.
#[no_mangle]
pub unsafe extern "C" fn tt_corpus_add_document(corpus: *mut TtCorpus, words: *const u32, len: usize) -> TtStatus {
    guard(|| {
        let corpus = as_mut(corpus, "corpus")?;
        let words = slice(words, len, "words")?;
        if let Some(&w) = words.iter().find(|&&w| w as usize >= corpus.vocab_size) {
            return Err(Failure::Invalid(format!(
                "word {w} outside vocabulary of {}",
                corpus.vocab_size
            )));
        }
        corpus.documents.push(words.to_vec());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tt_corpus_document_count(corpus: *const TtCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.documents.len())
}

#[no_mangle]
pub unsafe extern "C" fn tt_corpus_free(corpus: *mut TtCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Fit one epoch's topic model.
#[no_mangle]
pub unsafe extern "C" fn tt_fit_epoch(
    corpus: *const TtCorpus,
    options: *const TtFitOptions,
    seed: u64,
    epoch: usize,
    out: *mut *mut TtTopicSet,
) -> TtStatus {
    guard(|| {
        let corpus = as_ref(corpus, "corpus")?;
        let options = *as_ref(options, "options")?;
        let out = as_mut(out, "out")?;
        let config = FitConfig::from(options);
        config.hyper.validate()?;
        let (topics, _) = fit_epoch(&corpus.documents, &[], corpus.vocab_size, &config, seed, epoch)?;
        *out = Box::into_raw(Box::new(TtTopicSet { epoch, topics }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tt_topic_set_len(set: *const TtTopicSet) -> usize {
    set.as_ref().map_or(0, |s| s.topics.len())
}

#[no_mangle]
pub unsafe extern "C" fn tt_topic_set_epoch(set: *const TtTopicSet) -> usize {
    set.as_ref().map_or(0, |s| s.epoch)
}

/// Token mass of topic `index` (topics are ordered by descending mass).
#[no_mangle]
pub unsafe extern "C" fn tt_topic_mass(set: *const TtTopicSet, index: usize, out: *mut u64) -> TtStatus {
    guard(|| {
        let set = as_ref(set, "set")?;
        let topic = set
            .topics
            .get(index)
            .ok_or_else(|| Failure::Invalid(format!("topic index {index} out of range")))?;
        *as_mut(out, "out")? = topic.mass;
        Ok(())
    })
}

/// Copy the word distribution of topic `index` into `buf` of length `len`,
/// which must equal the vocabulary size.
#[no_mangle]
pub unsafe extern "C" fn tt_topic_phi(set: *const TtTopicSet, index: usize, buf: *mut f64, len: usize) -> TtStatus {
    guard(|| {
        let set = as_ref(set, "set")?;
        let topic = set
            .topics
            .get(index)
            .ok_or_else(|| Failure::Invalid(format!("topic index {index} out of range")))?;
        if len != topic.phi.len() {
            return Err(Failure::Invalid(format!(
                "buffer holds {len}, topic has {}",
                topic.phi.len()
            )));
        }
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(&topic.phi);
        Ok(())
    })
}

/// Build a topic set from `count` dense distributions of length
/// `vocab_size` laid out row-major in `phi`, with per-topic masses.
#[no_mangle]
pub unsafe extern "C" fn tt_topic_set_from_phi(
    epoch: usize,
    phi: *const f64,
    masses: *const u64,
    count: usize,
    vocab_size: usize,
    out: *mut *mut TtTopicSet,
) -> TtStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let total = count
            .checked_mul(vocab_size)
            .ok_or_else(|| Failure::Invalid("count * vocab_size overflows".into()))?;
        let phi = slice(phi, total, "phi")?;
        let masses = slice(masses, count, "masses")?;
        let topics = (0..count)
            .map(|k| {
                Topic::new(
                    epoch,
                    k,
                    phi[k * vocab_size..(k + 1) * vocab_size].to_vec(),
                    masses[k],
                    &[],
                )
            })
            .collect();
        *out = Box::into_raw(Box::new(TtTopicSet { epoch, topics }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tt_topic_set_free(set: *mut TtTopicSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Link `count` topic sets, in increasing epoch order, into a graph.
#[no_mangle]
pub unsafe extern "C" fn tt_graph_build(
    sets: *const *const TtTopicSet,
    count: usize,
    measure: TtMeasure,
    threshold: f64,
    out: *mut *mut TtGraph,
) -> TtStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let epoch_topics = slice(sets, count, "sets")?
            .iter()
            .map(|&s| as_ref(s, "sets[i]").map(|s| (s.epoch, s.topics.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let graph = build_graph(&epoch_topics, measure.into(), threshold)?;
        let events = classify_events(&graph);
        *out = Box::into_raw(Box::new(TtGraph { graph, events }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tt_graph_node_count(graph: *const TtGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.graph.node_count())
}

#[no_mangle]
pub unsafe extern "C" fn tt_graph_edge_count(graph: *const TtGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.graph.edges().len())
}

#[no_mangle]
pub unsafe extern "C" fn tt_graph_edge(graph: *const TtGraph, index: usize, out: *mut TtEdge) -> TtStatus {
    guard(|| {
        let graph = as_ref(graph, "graph")?;
        let e = graph
            .graph
            .edges()
            .get(index)
            .ok_or_else(|| Failure::Invalid(format!("edge index {index} out of range")))?;
        *as_mut(out, "out")? = TtEdge {
            from: e.from.into(),
            to: e.to.into(),
            weight: e.weight,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tt_graph_event_count(graph: *const TtGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.events.len())
}

fn event_at(graph: &TtGraph, index: usize) -> Result<&TopicEvent, Failure> {
    graph
        .events
        .get(index)
        .ok_or_else(|| Failure::Invalid(format!("event index {index} out of range")))
}

#[no_mangle]
pub unsafe extern "C" fn tt_graph_event(graph: *const TtGraph, index: usize, out: *mut TtEvent) -> TtStatus {
    guard(|| {
        let ev = event_at(as_ref(graph, "graph")?, index)?;
        *as_mut(out, "out")? = TtEvent {
            kind: ev.kind.into(),
            node: ev.node.into(),
            related_count: ev.related.len(),
        };
        Ok(())
    })
}

/// Related node `related` of event `index` (split targets or merge sources).
#[no_mangle]
pub unsafe extern "C" fn tt_graph_event_related(
    graph: *const TtGraph,
    index: usize,
    related: usize,
    out: *mut TtNode,
) -> TtStatus {
    guard(|| {
        let ev = event_at(as_ref(graph, "graph")?, index)?;
        let node = ev
            .related
            .get(related)
            .ok_or_else(|| Failure::Invalid(format!("related index {related} out of range")))?;
        *as_mut(out, "out")? = (*node).into();
        Ok(())
    })
}

/// Lineage sub-graph reachable from `seed` within `max_depth` hops.
#[no_mangle]
pub unsafe extern "C" fn tt_graph_trace(
    graph: *const TtGraph,
    seed: TtNode,
    direction: TtDirection,
    max_depth: usize,
    out: *mut *mut TtGraph,
) -> TtStatus {
    guard(|| {
        let graph = as_ref(graph, "graph")?;
        let out = as_mut(out, "out")?;
        let direction = match direction {
            TtDirection::Forward => Direction::Forward,
            TtDirection::Backward => Direction::Backward,
        };
        let sub = trace_lineage(
            &graph.graph,
            TopicNode::new(seed.epoch, seed.topic_id),
            direction,
            max_depth,
        )?;
        let events = classify_events(&sub);
        *out = Box::into_raw(Box::new(TtGraph { graph: sub, events }));
        Ok(())
    })
}

/// Graph export as a JSON string; release it with [`tt_string_free`].
#[no_mangle]
pub unsafe extern "C" fn tt_graph_to_json(graph: *const TtGraph, master_seed: u64, out: *mut *mut c_char) -> TtStatus {
    guard(|| {
        let graph = as_ref(graph, "graph")?;
        let out = as_mut(out, "out")?;
        let json = GraphExport::from_graph(&graph.graph, Some(master_seed)).to_json();
        *out = CString::new(json).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tt_graph_free(graph: *mut TtGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

#[no_mangle]
pub unsafe extern "C" fn tt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Run every pipeline stage for the config file at `config_path`.
/// `jobs` bounds concurrent epoch fits; 0 uses every core.
#[no_mangle]
pub unsafe extern "C" fn tt_run_pipeline(config_path: *const c_char, jobs: usize) -> TtStatus {
    guard(|| {
        let path = string(config_path, "config_path")?;
        let config = RunConfig::load(Path::new(path))?;
        run_pipeline(&config, Stage::Graph, jobs)?;
        Ok(())
    })
}
