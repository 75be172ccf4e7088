use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use topictrace_ffi::*;

fn last_error() -> String {
    let p = tt_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn topic_set(epoch: usize, rows: &[&[f64]]) -> *mut TtTopicSet {
    let v = rows[0].len();
    let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
    let masses: Vec<u64> = (0..rows.len() as u64).map(|k| 100 - k).collect();
    let mut out = ptr::null_mut();
    let st = unsafe { tt_topic_set_from_phi(epoch, flat.as_ptr(), masses.as_ptr(), rows.len(), v, &mut out) };
    assert_eq!(st, TtStatus::Ok);
    out
}

#[test]
fn similarity_and_errors() {
    let p = [0.5, 0.5, 0.0];
    let q = [0.5, 0.0, 0.5];
    let mut s = 0.0;
    let st = unsafe { tt_similarity(p.as_ptr(), q.as_ptr(), 3, TtMeasure::Jaccard, &mut s) };
    assert_eq!(st, TtStatus::Ok);
    assert!((s - 1.0 / 3.0).abs() < 1e-12);

    let bad = [0.5, 0.4, 0.0];
    let st = unsafe { tt_similarity(p.as_ptr(), bad.as_ptr(), 3, TtMeasure::L2, &mut s) };
    assert_eq!(st, TtStatus::Invalid);
    assert!(last_error().contains("sums to"));

    let st = unsafe { tt_similarity(ptr::null(), q.as_ptr(), 3, TtMeasure::Jaccard, &mut s) };
    assert_eq!(st, TtStatus::NullPointer);
    assert_eq!(last_error(), "p is null");
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(tt_version()) }.to_str().unwrap();
    assert_eq!(v, topictrace::VERSION);
}

#[test]
fn fit_through_handles() {
    let mut corpus = ptr::null_mut();
    assert_eq!(unsafe { tt_corpus_new(6, &mut corpus) }, TtStatus::Ok);
    for d in 0..20u32 {
        let words: Vec<u32> = (0..30).map(|i| (d % 2) * 3 + (i % 3)).collect();
        assert_eq!(
            unsafe { tt_corpus_add_document(corpus, words.as_ptr(), words.len()) },
            TtStatus::Ok
        );
    }
    let oob = [6u32];
    assert_eq!(
        unsafe { tt_corpus_add_document(corpus, oob.as_ptr(), 1) },
        TtStatus::Invalid
    );
    assert_eq!(unsafe { tt_corpus_document_count(corpus) }, 20);

    let mut opts = tt_fit_options_default();
    opts.burn_in = 30;
    opts.sweeps = 10;
    let mut set = ptr::null_mut();
    assert_eq!(unsafe { tt_fit_epoch(corpus, &opts, 5, 3, &mut set) }, TtStatus::Ok);
    let k = unsafe { tt_topic_set_len(set) };
    assert!(k >= 1);
    assert_eq!(unsafe { tt_topic_set_epoch(set) }, 3);
    let mut phi = vec![0.0; 6];
    assert_eq!(unsafe { tt_topic_phi(set, 0, phi.as_mut_ptr(), 6) }, TtStatus::Ok);
    assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert_eq!(unsafe { tt_topic_phi(set, 0, phi.as_mut_ptr(), 5) }, TtStatus::Invalid);
    let mut mass = 0;
    assert_eq!(unsafe { tt_topic_mass(set, 0, &mut mass) }, TtStatus::Ok);
    assert!(mass > 0);

    opts.eta = -1.0;
    let mut none = ptr::null_mut();
    assert_eq!(
        unsafe { tt_fit_epoch(corpus, &opts, 5, 3, &mut none) },
        TtStatus::Invalid
    );
    assert!(last_error().contains("eta"));
    assert!(none.is_null());

    unsafe {
        tt_topic_set_free(set);
        tt_corpus_free(corpus);
    }
}

#[test]
fn graph_events_and_trace() {
    let a: &[f64] = &[0.25, 0.25, 0.25, 0.25];
    let b: &[f64] = &[0.5, 0.5, 0.0, 0.0];
    let c: &[f64] = &[0.0, 0.0, 0.5, 0.5];
    let sets = [topic_set(0, &[a]), topic_set(1, &[b, c])];
    let handles: Vec<*const TtTopicSet> = sets.iter().map(|s| *s as *const _).collect();
    let mut graph = ptr::null_mut();
    let st = unsafe { tt_graph_build(handles.as_ptr(), 2, TtMeasure::Jaccard, 0.1, &mut graph) };
    assert_eq!(st, TtStatus::Ok);
    assert_eq!(unsafe { tt_graph_node_count(graph) }, 3);
    assert_eq!(unsafe { tt_graph_edge_count(graph) }, 2);
    let mut edge = TtEdge::default();
    assert_eq!(unsafe { tt_graph_edge(graph, 0, &mut edge) }, TtStatus::Ok);
    assert_eq!(edge.from, TtNode { epoch: 0, topic_id: 0 });
    assert!((edge.weight - 1.0 / 3.0).abs() < 1e-12);

    assert_eq!(unsafe { tt_graph_event_count(graph) }, 1);
    let mut ev = TtEvent {
        kind: TtEventKind::Emergence,
        node: TtNode::default(),
        related_count: 0,
    };
    assert_eq!(unsafe { tt_graph_event(graph, 0, &mut ev) }, TtStatus::Ok);
    assert_eq!(ev.kind, TtEventKind::Split);
    assert_eq!(ev.related_count, 2);
    let mut rel = TtNode::default();
    assert_eq!(unsafe { tt_graph_event_related(graph, 0, 1, &mut rel) }, TtStatus::Ok);
    assert_eq!(rel, TtNode { epoch: 1, topic_id: 1 });

    let mut sub = ptr::null_mut();
    let seed = TtNode { epoch: 1, topic_id: 0 };
    assert_eq!(
        unsafe { tt_graph_trace(graph, seed, TtDirection::Backward, 5, &mut sub) },
        TtStatus::Ok
    );
    assert_eq!(unsafe { tt_graph_node_count(sub) }, 2);
    let missing = TtNode { epoch: 7, topic_id: 0 };
    let mut none = ptr::null_mut();
    assert_eq!(
        unsafe { tt_graph_trace(graph, missing, TtDirection::Forward, 1, &mut none) },
        TtStatus::UnknownNode
    );

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { tt_graph_to_json(sub, 9, &mut json) }, TtStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    assert!(text.contains("\"master_seed\": 9"));
    unsafe {
        tt_string_free(json);
        tt_graph_free(sub);
        tt_graph_free(graph);
        sets.iter().for_each(|s| tt_topic_set_free(*s));
    }
}

#[test]
fn pipeline_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "archive = \"records.jsonl\"\nlag_years = 9\n").unwrap();
    let path = CString::new(cfg.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { tt_run_pipeline(path.as_ptr(), 1) }, TtStatus::Invalid);
    assert!(last_error().contains("lag_years"));

    std::fs::write(&cfg, "archive = \"records.jsonl\"\n").unwrap();
    assert_eq!(unsafe { tt_run_pipeline(path.as_ptr(), 1) }, TtStatus::Io);
    assert_eq!(unsafe { tt_run_pipeline(ptr::null(), 1) }, TtStatus::NullPointer);
}

fn target_dir() -> Option<PathBuf> {
    // tests run from <target>/<profile>/deps
    let exe = std::env::current_exe().ok()?;
    Some(exe.parent()?.parent()?.to_path_buf())
}

fn find_cc() -> Option<&'static str> {
    ["cc", "gcc", "clang"].into_iter().find(|c| {
        Command::new(c)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
    })
}

#[test]
fn header_compiles_and_links_from_c() {
    let header_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(header_dir.join("topictrace.h").exists());
    let Some(cc) = find_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include <string.h>
#include "topictrace.h"

int main(void) {
    double p[3] = {0.5, 0.5, 0.0}, q[3] = {0.5, 0.0, 0.5}, s = 0.0;
    if (tt_similarity(p, q, 3, TT_MEASURE_JACCARD, &s) != TT_STATUS_OK) return 1;
    if (s < 0.3333 || s > 0.3334) return 2;
    if (tt_similarity(p, q, 2, TT_MEASURE_JACCARD, &s) != TT_STATUS_INVALID) return 3;
    if (tt_last_error_message() == NULL) return 4;
    printf("%s\n", tt_version());
    return 0;
}
"#,
    )
    .unwrap();
    let syntax = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&header_dir)
        .arg(&src)
        .output()
        .unwrap();
    assert!(syntax.status.success(), "{}", String::from_utf8_lossy(&syntax.stderr));

    let Some(lib) = target_dir()
        .map(|d| d.join("libtopictrace_ffi.a"))
        .filter(|p| p.exists())
    else {
        eprintln!("static library not built; header checked only");
        return;
    };
    let exe = dir.path().join("smoke");
    let link = Command::new(cc)
        .args(["-std=c99", "-I"])
        .arg(&header_dir)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(link.status.success(), "{}", String::from_utf8_lossy(&link.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), topictrace::VERSION);
}
