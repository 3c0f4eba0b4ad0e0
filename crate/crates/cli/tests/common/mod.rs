#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kbqa_core::annotate::{write_pairs, QAPair, Split};
use kbqa_core::chunk::Chunk;
use kbqa_testkit::planted;

pub fn kbqa(dir: &Path) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_kbqa"));
    c.current_dir(dir)
        .env_remove("KBQA_CONFIG")
        .env("RAG_EMBED_URL", "mock")
        .env("RAG_RERANK_URL", "mock")
        .env("RAG_GEN_URL", "mock")
        .env("RAG_EVAL_EMBED_URL", "mock");
    c
}

pub fn run(dir: &Path, args: &[&str]) -> Output {
    kbqa(dir).args(args).output().expect("binary runs")
}

pub fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "kbqa {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Planted corpus as a clean store, plus every planted pair in the test split.
pub fn planted_workspace(dir: &Path) -> PathBuf {
    let clean = dir.join("clean/html");
    std::fs::create_dir_all(&clean).unwrap();
    for d in planted::documents() {
        std::fs::write(clean.join(format!("{}.txt", d.doc_id)), &d.text).unwrap();
    }
    let pairs: Vec<QAPair> = planted::qa_pairs()
        .iter()
        .map(|p| QAPair {
            split: Split::Test,
            ..QAPair::new(p.question, p.answer, Chunk::make_id(&p.doc_id, 0))
        })
        .collect();
    write_pairs(&dir.join("qa.jsonl"), &pairs).unwrap();
    dir.join("clean")
}

/// Clean store, chunk store and index for the planted corpus.
pub fn planted_index(dir: &Path) {
    planted_workspace(dir);
    run_ok(dir, &["chunk", "--clean", "clean", "--out", "chunks.jsonl"]);
    run_ok(dir, &["index", "--chunks", "chunks.jsonl", "--out", "index.bin"]);
}
