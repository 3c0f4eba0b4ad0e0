mod common;

use common::{kbqa, planted_index, planted_workspace, run, run_ok};
use kbqa_core::annotate::{read_pairs, Split};
use kbqa_core::eval::MetricReport;
use serde_json::Value;

#[test]
fn chunk_index_ask() {
    let dir = tempfile::tempdir().unwrap();
    planted_index(dir.path());
    let out = run_ok(
        dir.path(),
        &["ask", "--index", "index.bin", "--chunks", "chunks.jsonl", "--q", "Where does the Kiltie Band rehearse every Tuesday evening?"],
    );
    let mut lines = out.lines();
    assert!(lines.next().unwrap().contains("Cohon Center ballroom"));
    assert!(out.contains("[1] fact-02#0 (html/fact-02.txt) sim="));

    let base = run_ok(dir.path(), &["ask", "--index", "index.bin", "--chunks", "chunks.jsonl", "--q", "Where?", "--no-rag"]);
    assert!(base.starts_with("I don't know."));
    assert!(base.contains("no context used"));
}

#[test]
fn query_prints_ranked_hits() {
    let dir = tempfile::tempdir().unwrap();
    planted_index(dir.path());
    let out = run_ok(
        dir.path(),
        &["query", "--index", "index.bin", "--chunks", "chunks.jsonl", "--q", "Who founded the Robotics Institute in 1979?", "--k", "3", "--json"],
    );
    let v: Value = serde_json::from_str(&out).unwrap();
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 3);
    assert_eq!(results[0]["chunk_id"], "fact-04#0");
}

#[test]
fn eval_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    planted_index(dir.path());
    let common = ["eval", "--dataset", "qa.jsonl", "--index", "index.bin", "--chunks", "chunks.jsonl", "--runs", "2", "--sample", "10", "--seed", "3"];
    let table = run_ok(dir.path(), &[&common[..], &["--out", "rag.json"]].concat());
    assert!(table.starts_with("Configuration | Recall"));
    run_ok(dir.path(), &[&common[..], &["--no-rag", "--out", "base.json"]].concat());
    let rag = MetricReport::load(&dir.path().join("rag.json")).unwrap();
    assert_eq!(rag.runs.len(), 2);
    assert_eq!(rag.items.len(), 20);

    let cmp = run_ok(dir.path(), &["compare", "--reports", "base.json", "rag.json", "--names", "Baseline", "Raw RAG"]);
    let rows: Vec<&str> = cmp.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[2].starts_with("Baseline") && rows[3].starts_with("Raw RAG"));
    assert!(rows[3].contains(" (0."));
}

#[test]
fn annotate_split_export_stats() {
    let dir = tempfile::tempdir().unwrap();
    planted_workspace(dir.path());
    run_ok(dir.path(), &["chunk", "--clean", "clean", "--out", "chunks.jsonl"]);
    run_ok(dir.path(), &["annotate", "--chunks", "chunks.jsonl", "--out", "gen.jsonl", "--num-qas", "3", "--report", "ann.json"]);
    assert_eq!(read_pairs(&dir.path().join("gen.jsonl")).unwrap().len(), 150);

    let out = run_ok(dir.path(), &["split", "--in", "gen.jsonl", "--fraction", "0.8", "--seed", "13"]);
    assert_eq!(out.trim(), "train 120, test 30");
    let pairs = read_pairs(&dir.path().join("gen.jsonl")).unwrap();
    assert_eq!(pairs.iter().filter(|p| p.split == Split::Test).count(), 30);

    run_ok(dir.path(), &["export-finetune", "--qa", "gen.jsonl", "--chunks", "chunks.jsonl", "--out", "ft.jsonl"]);
    let ft = std::fs::read_to_string(dir.path().join("ft.jsonl")).unwrap();
    assert_eq!(ft.lines().count(), 120);
    assert!(ft.contains("[INST]"));

    let s: Value = serde_json::from_str(&run_ok(dir.path(), &["stats", "--clean", "clean", "--chunks", "chunks.jsonl", "--qa", "gen.jsonl"])).unwrap();
    assert_eq!(s["html"], 50);
    assert_eq!(s["chunks"], 50);
    assert_eq!(s["qa"]["train"], 120);
}

#[test]
fn kappa_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.csv"), "item,label\n1,1\n2,1\n3,1\n4,0\n5,0\n6,0\n").unwrap();
    std::fs::write(dir.path().join("b.csv"), "item,label\n6,1\n5,0\n4,0\n3,0\n2,1\n1,1\n").unwrap();
    let v: Value = serde_json::from_str(&run_ok(dir.path(), &["kappa", "--a", "a.csv", "--b", "b.csv"])).unwrap();
    assert!((v["kappa"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(run(p, &["ask", "--index", "nope.bin", "--q", "x"]).status.code(), Some(3));
    assert_eq!(run(p, &["chunk", "--clean", "nope"]).status.code(), Some(3));
    assert_eq!(run(p, &["bogus"]).status.code(), Some(2));

    planted_index(p);
    let ask = ["ask", "--index", "index.bin", "--chunks", "chunks.jsonl", "--q"];
    assert_eq!(run(p, &[&ask[..], &["   "]].concat()).status.code(), Some(2));
    assert_eq!(run(p, &[&ask[..], &["x", "--k", "11"]].concat()).status.code(), Some(2));

    let out = kbqa(p).env_remove("RAG_GEN_URL").args([&ask[..], &["x"]].concat()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("RAG_GEN_URL"));

    let out = kbqa(p).env("RAG_GEN_URL", "http://127.0.0.1:9/").args([&ask[..], &["x"]].concat()).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn config_file_supplies_paths() {
    let dir = tempfile::tempdir().unwrap();
    planted_index(dir.path());
    std::fs::write(
        dir.path().join("kbqa.toml"),
        "[paths]\nindex = \"index.bin\"\nchunks = \"chunks.jsonl\"\n[retrieval]\nfinal_k = 2\nrerank = false\n",
    )
    .unwrap();
    let out = run_ok(dir.path(), &["query", "--q", "Where do Sweepstakes buggy races start at 8 am?", "--json"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["results"].as_array().unwrap().len(), 2);
    assert!(v["results"][0]["rerank_score"].is_null());
    // flags beat the file
    let out = run_ok(dir.path(), &["query", "--q", "buggy races", "--k", "3", "--json"]);
    assert_eq!(serde_json::from_str::<Value>(&out).unwrap()["results"].as_array().unwrap().len(), 3);
}
