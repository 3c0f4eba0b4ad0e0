//! Brute-force reference implementations, written for clarity rather than
//! speed and kept separate from the code they check.

use std::collections::BTreeSet;

/// `(p_o, p_e, kappa)` from an explicit confusion matrix.
pub fn kappa(a: &[u32], b: &[u32]) -> (f64, f64, f64) {
    assert_eq!(a.len(), b.len());
    assert!(!a.is_empty());
    let cats: Vec<u32> = a.iter().chain(b).copied().collect::<BTreeSet<_>>().into_iter().collect();
    let k = cats.len();
    let idx = |x: u32| cats.iter().position(|&c| c == x).unwrap();
    let mut m = vec![vec![0usize; k]; k];
    for (&x, &y) in a.iter().zip(b) {
        m[idx(x)][idx(y)] += 1;
    }
    let n = a.len() as f64;
    let diag: usize = (0..k).map(|i| m[i][i]).sum();
    let p_o = diag as f64 / n;
    let mut p_e = 0.0;
    for i in 0..k {
        let row: usize = m[i].iter().sum();
        let col: usize = m.iter().map(|r| r[i]).sum();
        p_e += (row as f64 / n) * (col as f64 / n);
    }
    let kappa = if p_e == 1.0 { 1.0 } else { (p_o - p_e) / (1.0 - p_e) };
    (p_o, p_e, kappa)
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum();
    let na: f64 = a.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

fn better(score: f64, id: &str, best: Option<(f64, &str)>) -> bool {
    match best {
        None => true,
        Some((s, b)) => score > s || (score == s && id < b),
    }
}

/// Ids of the `k` entries most similar to `q`; ties by id ascending.
pub fn top_k(entries: &[(String, Vec<f32>)], q: &[f32], k: usize) -> Vec<String> {
    let mut left: Vec<usize> = (0..entries.len()).collect();
    let mut out = Vec::new();
    while out.len() < k && !left.is_empty() {
        let mut best: Option<(f64, &str)> = None;
        let mut best_slot = 0;
        for (slot, &i) in left.iter().enumerate() {
            let s = cosine(&entries[i].1, q);
            if better(s, &entries[i].0, best) {
                best = Some((s, &entries[i].0));
                best_slot = slot;
            }
        }
        out.push(entries[left.remove(best_slot)].0.clone());
    }
    out
}

/// Greedy MMR recomputing every score from scratch at each step.
pub fn mmr(entries: &[(String, Vec<f32>)], q: &[f32], lambda: f64, k: usize) -> Vec<String> {
    let mut selected: Vec<usize> = Vec::new();
    while selected.len() < k.min(entries.len()) {
        let mut best: Option<(f64, &str)> = None;
        let mut best_i = 0;
        for (i, (id, v)) in entries.iter().enumerate() {
            if selected.contains(&i) {
                continue;
            }
            let sim = cosine(v, q);
            let score = if selected.is_empty() {
                sim
            } else {
                let redundancy = selected
                    .iter()
                    .map(|&s| cosine(v, &entries[s].1))
                    .fold(f64::NEG_INFINITY, f64::max);
                lambda * sim - (1.0 - lambda) * redundancy
            };
            if better(score, id, best) {
                best = Some((score, id));
                best_i = i;
            }
        }
        selected.push(best_i);
    }
    selected.into_iter().map(|i| entries[i].0.clone()).collect()
}

fn occurrences(tokens: &[&str], gram: &[&str]) -> usize {
    if tokens.len() < gram.len() {
        return 0;
    }
    (0..=tokens.len() - gram.len()).filter(|&i| &tokens[i..i + gram.len()] == gram).count()
}

/// Sentence BLEU in product form: `BP * (p_1 * ... * p_N)^(1/N)`, with
/// clipped counts found by scanning.
pub fn bleu(candidate: &[&str], reference: &[&str], max_n: usize) -> f64 {
    if candidate.is_empty() {
        return 0.0;
    }
    let mut product = 1.0;
    for n in 1..=max_n {
        if candidate.len() < n {
            return 0.0;
        }
        let total = candidate.len() - n + 1;
        let mut distinct: Vec<&[&str]> = Vec::new();
        for i in 0..total {
            let g = &candidate[i..i + n];
            if !distinct.contains(&g) {
                distinct.push(g);
            }
        }
        let clipped: usize = distinct
            .iter()
            .map(|g| occurrences(candidate, g).min(occurrences(reference, g)))
            .sum();
        product *= clipped as f64 / total as f64;
    }
    if product == 0.0 {
        return 0.0;
    }
    let (c, r) = (candidate.len() as f64, reference.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    bp * product.powf(1.0 / max_n as f64)
}

/// Whitespace words grouped `size` at a time and rejoined with spaces.
pub fn chunk_words(text: &str, size: usize) -> Vec<String> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let mut out = Vec::new();
    let mut start = 0;
    while start < words.len() {
        let end = (start + size).min(words.len());
        out.push(words[start..end].join(" "));
        start = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_hand_example() {
        let (p_o, p_e, k) = kappa(&[1, 1, 1, 0, 0, 0], &[1, 1, 0, 0, 0, 1]);
        assert!((p_o - 4.0 / 6.0).abs() < 1e-12);
        assert!((p_e - 0.5).abs() < 1e-12);
        assert!((k - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn bleu_hand_example() {
        let c = ["the", "cat", "sat", "on"];
        let r = ["the", "cat", "sat", "on", "the", "mat"];
        assert!((bleu(&c, &r, 4) - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn mmr_lambda_one_is_top_k() {
        let e: Vec<(String, Vec<f32>)> = vec![
            ("a".into(), vec![1.0, 0.0]),
            ("b".into(), vec![0.6, 0.8]),
            ("c".into(), vec![0.0, 1.0]),
        ];
        let q = [0.8, 0.6];
        assert_eq!(mmr(&e, &q, 1.0, 3), top_k(&e, &q, 3));
    }

    #[test]
    fn chunking() {
        assert_eq!(chunk_words(" a b\n c ", 2), ["a b", "c"]);
        assert!(chunk_words("  ", 2).is_empty());
    }
}
