use std::collections::BTreeSet;

use kbqa_core::annotate::{chance_agreement_from, cohen_kappa, parse_qa_response, render_pairs, split_dataset, train_len};
use kbqa_core::chunk::chunk_text;
use kbqa_core::eval::{bleu, normalize_tokens, token_prf};
use kbqa_core::provider::EmbeddingVector;
use kbqa_core::retrieval::{cosine, mmr_select, top_k, Candidate, VectorIndex};
use kbqa_testkit::oracles;
use proptest::prelude::*;

fn labels(v: &[u32]) -> Vec<String> {
    v.iter().map(|x| format!("c{x}")).collect()
}

#[test]
fn kappa_matches_oracle_exhaustively_for_two_categories() {
    for n in 1..=6u32 {
        for bits in 0..(1u32 << (2 * n)) {
            let a: Vec<u32> = (0..n).map(|i| (bits >> i) & 1).collect();
            let b: Vec<u32> = (0..n).map(|i| (bits >> (n + i)) & 1).collect();
            let got = cohen_kappa(&labels(&a), &labels(&b)).unwrap();
            let (p_o, p_e, k) = oracles::kappa(&a, &b);
            assert!((got.p_o - p_o).abs() < 1e-12);
            assert!((got.p_e - p_e).abs() < 1e-12);
            assert!((got.kappa - k).abs() < 1e-12, "{a:?} {b:?}");
        }
    }
}

fn label_pairs() -> impl Strategy<Value = (Vec<u32>, Vec<u32>)> {
    (1usize..40, 1u32..6).prop_flat_map(|(n, k)| (prop::collection::vec(0..k, n), prop::collection::vec(0..k, n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn kappa_properties((a, b) in label_pairs(), shift in 1u32..50) {
        let ab = cohen_kappa(&labels(&a), &labels(&b)).unwrap();
        let (p_o, p_e, k) = oracles::kappa(&a, &b);
        prop_assert!((ab.kappa - k).abs() < 1e-9);
        prop_assert!((ab.p_o - p_o).abs() < 1e-12 && (ab.p_e - p_e).abs() < 1e-12);
        prop_assert!(ab.kappa <= 1.0 + 1e-12);

        let ba = cohen_kappa(&labels(&b), &labels(&a)).unwrap();
        prop_assert!((ab.kappa - ba.kappa).abs() < 1e-12);

        let ra: Vec<u32> = a.iter().map(|x| x * 7 + shift).collect();
        let rb: Vec<u32> = b.iter().map(|x| x * 7 + shift).collect();
        let renamed = cohen_kappa(&labels(&ra), &labels(&rb)).unwrap();
        prop_assert!((renamed.kappa - ab.kappa).abs() < 1e-12);

        if !ab.degenerate && ab.kappa < 1.0 - 1e-9 {
            prop_assert!((chance_agreement_from(ab.p_o, ab.kappa) - ab.p_e).abs() < 1e-9);
        }
        let aa = cohen_kappa(&labels(&a), &labels(&a)).unwrap();
        prop_assert_eq!(aa.kappa, 1.0);
    }

    #[test]
    fn split_is_an_exhaustive_partition(n in 2usize..300, fraction in 0.05f64..0.95, seed in any::<u64>()) {
        let (train, test) = split_dataset((0..n).collect::<Vec<_>>(), fraction, seed).unwrap();
        prop_assert_eq!(train.len(), train_len(n, fraction));
        prop_assert_eq!(train.len() + test.len(), n);
        let all: BTreeSet<usize> = train.iter().chain(&test).copied().collect();
        prop_assert_eq!(all.len(), n);
        let again = split_dataset((0..n).collect::<Vec<_>>(), fraction, seed).unwrap();
        prop_assert_eq!(again, (train, test));
    }

    #[test]
    fn parse_round_trips_rendered_pairs(
        pairs in prop::collection::vec(("[a-zA-Z0-9 ?,\\[\\]{}\"']{1,30}", "[a-zA-Z0-9 .,\\[\\]{}\"']{1,30}"), 0..12),
        prefix in "[a-zA-Z .:]{0,30}",
        fenced in any::<bool>(),
    ) {
        let pairs: Vec<(String, String)> = pairs
            .into_iter()
            .filter(|(q, a)| !q.trim().is_empty() && !a.trim().is_empty())
            .collect();
        let body = render_pairs(&pairs);
        let raw = if fenced { format!("{prefix}\n```json\n{body}\n```\n") } else { format!("{prefix}\n{body}") };
        let parsed = parse_qa_response(&raw).unwrap();
        prop_assert_eq!(parsed.dropped, 0);
        let trimmed: Vec<(String, String)> = pairs.iter().map(|(q, a)| (q.trim().to_owned(), a.trim().to_owned())).collect();
        prop_assert_eq!(parsed.pairs, trimmed);
    }
}

fn small_vec(dim: usize) -> impl Strategy<Value = Vec<f32>> {
    prop::collection::vec(-3i8..=3, dim)
        .prop_filter("non-zero", |v| v.iter().any(|&x| x != 0))
        .prop_map(|v| v.into_iter().map(f32::from).collect())
}

fn unit(v: &[f32]) -> EmbeddingVector {
    EmbeddingVector::normalized(v.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn top_k_matches_brute_force(
        vs in prop::collection::vec(small_vec(4), 1..64),
        q in small_vec(4),
        k in 1usize..70,
    ) {
        let mut index = VectorIndex::new(4, "m", 0).unwrap();
        let mut entries = Vec::new();
        for (i, v) in vs.iter().enumerate() {
            let u = unit(v);
            let id = format!("d{:02}#{}", (i * 37) % 64, i);
            index.push(id.clone(), &u).unwrap();
            entries.push((id, u.values().to_vec()));
        }
        let q = unit(&q);
        let got: Vec<String> = top_k(&index, &q, k).unwrap().iter().map(|h| index.chunk_id(h.position).to_owned()).collect();
        prop_assert_eq!(got, oracles::top_k(&entries, q.values(), k));
    }

    #[test]
    fn mmr_matches_brute_force(
        vs in prop::collection::vec(small_vec(3), 1..=8),
        q in small_vec(3),
        li in 0usize..5,
        k in 1usize..10,
    ) {
        let lambda = li as f64 * 0.25;
        let entries: Vec<(String, Vec<f32>)> = vs
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("c{}", (i * 5) % 8), unit(v).values().to_vec()))
            .collect::<Vec<_>>();
        let ids: BTreeSet<&String> = entries.iter().map(|e| &e.0).collect();
        prop_assume!(ids.len() == entries.len());
        let q = unit(&q);
        let cands: Vec<Candidate> = entries
            .iter()
            .map(|(id, v)| Candidate { chunk_id: id, vector: v, sim: cosine(v, q.values()).unwrap() })
            .collect();
        let got: Vec<String> = mmr_select(&cands, lambda, k).unwrap().into_iter().map(|i| entries[i].0.clone()).collect();
        prop_assert_eq!(got, oracles::mmr(&entries, q.values(), lambda, k));
    }
}

fn doc_text(n_words: usize, seed: u64) -> String {
    let seps = [" ", "  ", "\n", "\t", " \n "];
    let mut s = String::from(if seed.is_multiple_of(3) { "  " } else { "" });
    for i in 0..n_words {
        s.push_str(&format!("w{}x{}", i, seed % 97));
        s.push_str(seps[(i + seed as usize) % seps.len()]);
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn chunks_partition_the_words(n_words in 0usize..10_000, size in prop_oneof![Just(1000usize), 1usize..1500], seed in any::<u64>()) {
        let text = doc_text(n_words, seed);
        let chunks = chunk_text("doc", &text, size).unwrap();
        let words: Vec<&str> = text.split_whitespace().collect();
        prop_assert_eq!(chunks.len(), words.len().div_ceil(size));
        let texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
        prop_assert_eq!(&texts, &oracles::chunk_words(&text, size));
        let mut rejoined = Vec::new();
        for (i, c) in chunks.iter().enumerate() {
            prop_assert_eq!(c.index, i);
            prop_assert_eq!(&c.chunk_id, &format!("doc#{i}"));
            prop_assert!(c.word_count >= 1 && c.word_count <= size);
            if i + 1 < chunks.len() {
                prop_assert_eq!(c.word_count, size);
            }
            prop_assert_eq!(c.word_count, c.text.split(' ').count());
            rejoined.extend(c.text.split(' '));
        }
        prop_assert_eq!(rejoined, words);
    }
}

const VOCAB: [&str; 8] = ["the", "cat", "sat", "on", "mat", "a", "dog", "ran"];

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(&VOCAB[..]), 0..14).prop_map(|w| w.join(" "))
}

#[test]
fn bleu_matches_product_form_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut nonzero = 0;
    for _ in 0..50 {
        let gen = |rng: &mut rand_chacha::ChaCha8Rng, len: usize| -> String {
            (0..len).map(|_| VOCAB[rng.random_range(0..4)]).collect::<Vec<_>>().join(" ")
        };
        let (lc, lr) = (rng.random_range(1..12), rng.random_range(1..12));
        let (c, r) = (gen(&mut rng, lc), gen(&mut rng, lr));
        let ct: Vec<String> = normalize_tokens(&c);
        let rt: Vec<String> = normalize_tokens(&r);
        let ct: Vec<&str> = ct.iter().map(String::as_str).collect();
        let rt: Vec<&str> = rt.iter().map(String::as_str).collect();
        for n in 1..=4 {
            let got = bleu(&c, &r, n).unwrap();
            let want = oracles::bleu(&ct, &rt, n);
            assert!((got - want).abs() < 1e-9, "{c:?} vs {r:?} n={n}: {got} {want}");
            if got > 0.0 {
                nonzero += 1;
            }
        }
    }
    assert!(nonzero > 20);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn prf_bounds_and_symmetry(p in sentence(), g in sentence()) {
        let a = token_prf(&p, &g);
        let b = token_prf(&g, &p);
        prop_assert!((a.precision - b.recall).abs() < 1e-12);
        prop_assert!((a.recall - b.precision).abs() < 1e-12);
        prop_assert!((a.f1 - b.f1).abs() < 1e-12);
        for x in [a.precision, a.recall, a.f1] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
        let lo = a.precision.min(a.recall);
        let hi = a.precision.max(a.recall);
        prop_assert!(a.f1 >= lo - 1e-12 && a.f1 <= hi + 1e-12);
    }

    #[test]
    fn bleu_is_bounded_and_orders_are_monotone(p in sentence(), g in sentence()) {
        let mut prev_n1 = None;
        for n in 1..=4 {
            let s = bleu(&p, &g, n).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
            if n == 1 {
                prev_n1 = Some(s);
            }
        }
        // zero unigram overlap forces every order to zero
        if prev_n1 == Some(0.0) {
            prop_assert_eq!(bleu(&p, &g, 4).unwrap(), 0.0);
        }
        if !normalize_tokens(&g).is_empty() {
            prop_assert!((bleu(&g, &g, 1).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn index_bytes_are_stable(vs in prop::collection::vec(small_vec(6), 0..20), built_at in any::<i64>(), model in "[a-z/-]{1,20}") {
        let mut index = VectorIndex::new(6, model, built_at).unwrap();
        for (i, v) in vs.iter().enumerate() {
            index.push(format!("doc-{i}#0"), &unit(v)).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.bin");
        index.save(&path).unwrap();
        let first = std::fs::read(&path).unwrap();
        let loaded = VectorIndex::load(&path).unwrap();
        prop_assert_eq!(loaded.chunk_ids(), index.chunk_ids());
        loaded.save(&path).unwrap();
        prop_assert_eq!(std::fs::read(&path).unwrap(), first);
    }
}
