//! Evaluation utilities: AUC, feature-stability JSD, importance report.

use std::collections::HashMap;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gbdt::{self, GbdtConfig};
use crate::num::Scalar;
use crate::operators::{FeatureDef, Operator, TransformPlan};
use crate::Real;

/// Mann-Whitney AUC: probability that a random positive outscores a random
/// negative, ties counted as one half.
pub fn auc<S: Scalar>(scores: &[S], labels: &[u8]) -> Result<S> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassLabels);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // Rank sum of positives with midranks for ties.
    let mut rank_sum = S::zero();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Tied block occupies ranks i+1..=j (1-based); all get the average.
        let avg_rank = S::from_count(i + 1 + j) / S::from_count(2);
        for &idx in &order[i..j] {
            if labels[idx] == 1 {
                rank_sum = rank_sum + avg_rank;
            }
        }
        i = j;
    }
    let np = S::from_count(n_pos);
    let u = rank_sum - np * (np + S::one()) / S::from_count(2);
    Ok(u / (np * S::from_count(n_neg)))
}

fn kld<S: Scalar>(p: &[S], q: &[S]) -> S {
    let mut sum = S::zero();
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > S::zero() {
            sum = sum + pi * (pi / qi).ln();
        }
    }
    sum
}

/// Jensen-Shannon divergence between probability vectors on the same
/// support, natural log.
pub fn jsd<S: Scalar>(p: &[S], q: &[S]) -> S {
    let half = S::from_f64(0.5).unwrap();
    let r: Vec<S> = p.iter().zip(q).map(|(&a, &b)| half * (a + b)).collect();
    half * (kld(p, &r) + kld(q, &r))
}

/// Stability of generated feature names over repeated runs: JSD between the
/// observed name distribution and the ideal where the `2M` most frequent
/// names appear in every run. 0 means perfectly stable.
pub fn stability_jsd(runs: &[Vec<String>], m_original: usize) -> Result<Real> {
    let t = runs.len();
    if t < 2 {
        return Err(Error::InvalidConfig(
            "stability needs at least 2 runs".into(),
        ));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for run in runs {
        for name in run {
            *counts.entry(name.as_str()).or_insert(0) += 1;
        }
    }
    if counts.is_empty() {
        return Err(Error::EmptyDataset);
    }
    // Frequency order, names as tiebreak, fixes the support ordering.
    let mut ordered: Vec<(&str, usize)> = counts.into_iter().collect();
    ordered.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));

    let ideal_support = (2 * m_original).min(ordered.len());
    let observed_total: usize = ordered.iter().map(|(_, c)| c).sum();
    let ideal_total = ideal_support * t;

    let p: Vec<Real> = ordered
        .iter()
        .map(|(_, c)| *c as Real / observed_total as Real)
        .collect();
    let q: Vec<Real> = (0..ordered.len())
        .map(|i| {
            if i < ideal_support {
                t as Real / ideal_total as Real
            } else {
                0.0
            }
        })
        .collect();
    Ok(jsd(&p, &q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureOrigin {
    Base,
    Generated,
}

#[derive(Debug, Clone)]
pub struct ImportanceRow {
    pub feature: String,
    pub origin: FeatureOrigin,
    pub importance: Real,
}

/// Train the built-in ensemble on the M original columns plus up to M
/// top-ranked generated columns from the plan, and report per-column
/// average-gain importance.
pub fn importance_report(
    original: &Dataset,
    plan: &TransformPlan,
    registry: &[Operator],
    gbdt_cfg: &GbdtConfig,
) -> Result<Vec<ImportanceRow>> {
    let m = original.n_features();
    let mut columns: Vec<(String, Vec<Real>)> = original
        .columns()
        .iter()
        .map(|c| (c.name.clone(), c.values.clone()))
        .collect();
    let mut origins = vec![FeatureOrigin::Base; m];

    let generated: Vec<&FeatureDef> = plan
        .features
        .iter()
        .filter(|f| matches!(f, FeatureDef::Derived { .. }))
        .take(m)
        .collect();
    for def in generated {
        let name = def.canonical_name();
        if columns.iter().any(|(n, _)| *n == name) {
            continue;
        }
        columns.push((name, def.eval_columns(original, registry)?));
        origins.push(FeatureOrigin::Generated);
    }

    let d = Dataset::new(columns, original.labels().to_vec())?;
    let ensemble = gbdt::train(&d, None, gbdt_cfg)?;
    let importance = ensemble.feature_importance();
    Ok(d
        .feature_names()
        .into_iter()
        .zip(origins)
        .zip(importance)
        .map(|((feature, origin), importance)| ImportanceRow {
            feature,
            origin,
            importance,
        })
        .collect())
}

/// CSV export of an importance report.
pub fn importance_csv(rows: &[ImportanceRow]) -> String {
    let mut out = String::from("feature,origin,importance\n");
    for r in rows {
        let origin = match r.origin {
            FeatureOrigin::Base => "base",
            FeatureOrigin::Generated => "generated",
        };
        let name = if r.feature.contains(',') {
            format!("\"{}\"", r.feature)
        } else {
            r.feature.clone()
        };
        out.push_str(&format!("{name},{origin},{}\n", r.importance));
    }
    out
}
