//! Accuracy metrics: Pearson product-moment correlation for continuous
//! traits and ROC AUC (Mann–Whitney rank form, midrank ties) for binary ones.

use crate::error::{Error, Result};
use crate::ingest::TraitName;
use serde::{Deserialize, Serialize};

/// Which metric scores a given trait.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Pearson,
    Auc,
}

impl Metric {
    /// Continuous traits use Pearson, the two binary traits use AUC.
    pub fn for_trait(trait_name: TraitName) -> Metric {
        match trait_name {
            TraitName::Gender | TraitName::Political => Metric::Auc,
            _ => Metric::Pearson,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Metric::Pearson => "pearson",
            Metric::Auc => "auc",
        }
    }
}

/// Per-trait accuracy value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyScore {
    pub trait_name: TraitName,
    pub kind: Metric,
    pub value: f64,
}

/// Sample Pearson correlation of two equally long series.
pub fn pearson(pred: &[f64], actual: &[f64]) -> Result<f64> {
    if pred.len() != actual.len() {
        return Err(Error::Parameter(format!(
            "pearson: length mismatch {} vs {}",
            pred.len(),
            actual.len()
        )));
    }
    let n = pred.len();
    if n < 2 {
        return Err(Error::Parameter("pearson: need at least 2 points".into()));
    }
    let nf = n as f64;
    let mx = pred.iter().sum::<f64>() / nf;
    let my = actual.iter().sum::<f64>() / nf;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = pred[i] - mx;
        let dy = actual[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Numeric(
            "pearson undefined: zero variance input".into(),
        ));
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// ROC AUC: probability that a random positive outscores a random negative,
/// ties counted one half. Computed from midranks in O(n log n); agrees with
/// the O(n²) pairwise definition exactly.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Parameter(format!(
            "auc: length mismatch {} vs {}",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Numeric(
            "auc undefined: labels contain a single class".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("non-finite score"));

    // midranks over tie groups, 1-based
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let n_pos_f = n_pos as f64;
    let u = rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0;
    Ok(u / (n_pos_f * n_neg as f64))
}
