use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementResult {
    pub kappa: f64,
    pub p_o: f64,
    pub p_e: f64,
    pub n_items: usize,
    /// Sorted union of the labels both annotators used.
    pub categories: Vec<String>,
    /// Set when chance agreement is 1 and kappa is fixed at 1 by convention.
    pub degenerate: bool,
}

/// Cohen's kappa for two annotators labelling the same items.
pub fn cohen_kappa<S: AsRef<str>>(labels_a: &[S], labels_b: &[S]) -> Result<AgreementResult> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::InvalidInput(format!(
            "label lists differ in length: {} vs {}",
            labels_a.len(),
            labels_b.len()
        )));
    }
    if labels_a.is_empty() {
        return Err(Error::Empty("label list"));
    }
    let n = labels_a.len();
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    let mut agree = 0usize;
    for (a, b) in labels_a.iter().zip(labels_b) {
        let (a, b) = (a.as_ref(), b.as_ref());
        counts.entry(a).or_default().0 += 1;
        counts.entry(b).or_default().1 += 1;
        if a == b {
            agree += 1;
        }
    }
    let nf = n as f64;
    let p_o = agree as f64 / nf;
    let p_e = counts
        .values()
        .map(|&(ca, cb)| (ca as f64 / nf) * (cb as f64 / nf))
        .sum::<f64>();
    let categories = counts.keys().map(|s| s.to_string()).collect();
    let degenerate = (1.0 - p_e).abs() < 1e-15;
    let kappa = if degenerate { 1.0 } else { (p_o - p_e) / (1.0 - p_e) };
    Ok(AgreementResult {
        kappa,
        p_o,
        p_e,
        n_items: n,
        categories,
        degenerate,
    })
}

/// Chance agreement implied by an observed agreement and a kappa value.
pub fn chance_agreement_from(p_o: f64, kappa: f64) -> f64 {
    (p_o - kappa) / (1.0 - kappa)
}
