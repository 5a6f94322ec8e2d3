//! Three-stage selection cascade: information-value filtering, Pearson
//! redundancy pruning, and importance ranking with a hard output cap.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gbdt::{self, GbdtConfig};
use crate::num::Scalar;
use crate::Real;

/// Which information-value formula to use. The standard form weights each
/// bin by the log odds ratio; the literal form uses the plain ratio and can
/// go negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IvFormula {
    #[default]
    StandardLog,
    PaperLiteral,
}

#[derive(Debug, Clone)]
pub struct SelectorConfig {
    /// Information-value threshold; features with IV <= alpha are dropped.
    pub alpha: Real,
    /// Number of equal-frequency bins.
    pub beta: usize,
    /// Absolute Pearson threshold above which the lower-IV feature is pruned.
    pub theta: Real,
    pub max_features: usize,
    pub iv_formula: IvFormula,
    /// Row cap for the pairwise correlation stage (seeded uniform subsample).
    pub pearson_row_cap: usize,
}

impl SelectorConfig {
    /// Defaults with the output cap set to `2 * m_original`.
    pub fn with_cap_for(m_original: usize) -> Self {
        Self {
            alpha: 0.1,
            beta: 10,
            theta: 0.8,
            max_features: (2 * m_original).max(1),
            iv_formula: IvFormula::StandardLog,
            pearson_row_cap: 100_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 {
            return Err(Error::InvalidConfig("alpha must be >= 0".into()));
        }
        if self.beta < 2 {
            return Err(Error::InvalidConfig("beta must be >= 2".into()));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidConfig("theta must be in (0, 1]".into()));
        }
        if self.max_features < 1 {
            return Err(Error::InvalidConfig("max_features must be >= 1".into()));
        }
        Ok(())
    }
}

/// Record of one redundancy prune: `dropped` correlated with `kept` at `r`.
#[derive(Debug, Clone)]
pub struct PrunePair {
    pub kept: String,
    pub dropped: String,
    pub correlation: Real,
}

#[derive(Debug, Clone, Default)]
pub struct SelectionReport {
    pub iv: Vec<(String, Real)>,
    pub prunes: Vec<PrunePair>,
    pub importance: Vec<(String, Real)>,
    pub kept: Vec<String>,
}

impl SelectionReport {
    /// CSV export: feature, iv, importance, kept, dropped_by.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,iv,importance,kept,dropped_by\n");
        for (name, iv) in &self.iv {
            let importance = self
                .importance
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| format!("{v}"))
                .unwrap_or_default();
            let kept = self.kept.contains(name);
            let dropped_by = self
                .prunes
                .iter()
                .find(|p| &p.dropped == name)
                .map(|p| p.kept.clone())
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_quote(name),
                iv,
                importance,
                kept,
                csv_quote(&dropped_by)
            ));
        }
        out
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Equal-frequency bin edges at quantiles i/beta (lower-quantile convention,
/// duplicates collapsed). Assignment is "value <= edge goes to the lower
/// bin".
pub fn equal_frequency_bins<S: Scalar>(column: &[S], beta: usize) -> Vec<S> {
    assert!(!column.is_empty(), "column must be non-empty");
    let mut sorted: Vec<S> = column.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let max = sorted[n - 1];
    let mut edges = Vec::new();
    for i in 1..beta {
        // ceil(i*n/beta) in integer arithmetic, 1-based rank -> index.
        let rank = (i * n).div_ceil(beta);
        let edge = sorted[rank - 1];
        // An edge equal to the maximum would leave the top bin empty.
        if edge < max && edges.last() != Some(&edge) {
            edges.push(edge);
        }
    }
    edges
}

fn bin_of<S: Scalar>(edges: &[S], v: S) -> usize {
    edges.partition_point(|&e| e < v)
}

/// Information value of a column against binary labels with equal-frequency
/// binning. Class counts are smoothed by 0.5 per bin before normalizing.
pub fn information_value<S: Scalar>(
    column: &[S],
    labels: &[u8],
    beta: usize,
    formula: IvFormula,
) -> Result<S> {
    if column.len() != labels.len() {
        return Err(Error::LengthMismatch(column.len(), labels.len()));
    }
    if column.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::SingleClassLabels);
    }
    let edges = equal_frequency_bins(column, beta);
    let n_bins = edges.len() + 1;
    let mut pos = vec![0usize; n_bins];
    let mut neg = vec![0usize; n_bins];
    for (&v, &y) in column.iter().zip(labels) {
        let b = bin_of(&edges, v);
        if y == 1 {
            pos[b] += 1;
        } else {
            neg[b] += 1;
        }
    }

    let half = S::from_f64(0.5).unwrap();
    let n_pos = S::from_count(pos.iter().sum::<usize>()) + half * S::from_count(n_bins);
    let n_neg = S::from_count(neg.iter().sum::<usize>()) + half * S::from_count(n_bins);
    let mut iv = S::zero();
    for b in 0..n_bins {
        let p = (S::from_count(pos[b]) + half) / n_pos;
        let q = (S::from_count(neg[b]) + half) / n_neg;
        let term = match formula {
            IvFormula::StandardLog => (p - q) * (p / q).ln(),
            IvFormula::PaperLiteral => (p - q) * (p / q),
        };
        iv = iv + term;
    }
    Ok(iv)
}

/// Keep exactly the features with IV strictly above alpha. Returns the kept
/// names and the IV of every input feature.
pub fn filter_by_iv(
    features: &Dataset,
    cfg: &SelectorConfig,
) -> Result<(Vec<String>, Vec<(String, Real)>)> {
    let ivs: Vec<Result<Real>> = features
        .columns()
        .par_iter()
        .map(|c| information_value(&c.values, features.labels(), cfg.beta, cfg.iv_formula))
        .collect();
    let mut all = Vec::with_capacity(ivs.len());
    let mut kept = Vec::new();
    for (col, iv) in features.columns().iter().zip(ivs) {
        let iv = iv?;
        if iv > cfg.alpha {
            kept.push(col.name.clone());
        }
        all.push((col.name.clone(), iv));
    }
    Ok((kept, all))
}

/// Pearson correlation; 0 when either column has zero variance.
pub fn pearson<S: Scalar>(a: &[S], b: &[S]) -> Result<S> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let n = S::from_count(a.len());
    let mean = |v: &[S]| v.iter().fold(S::zero(), |acc, &x| acc + x) / n;
    let ma = mean(a);
    let mb = mean(b);
    let mut cov = S::zero();
    let mut va = S::zero();
    let mut vb = S::zero();
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        cov = cov + dx * dy;
        va = va + dx * dx;
        vb = vb + dy * dy;
    }
    if va == S::zero() || vb == S::zero() {
        return Ok(S::zero());
    }
    Ok(cov / (va.sqrt() * vb.sqrt()))
}

/// Greedy redundancy removal in descending-IV order (ties by name): a
/// feature is kept iff its absolute correlation with every already-kept
/// feature stays within theta. Each drop records the first kept feature that
/// displaced it.
pub fn remove_redundant(
    features: &Dataset,
    ivs: &[(String, Real)],
    cfg: &SelectorConfig,
    seed: u64,
) -> Result<(Vec<String>, Vec<PrunePair>)> {
    let mut order: Vec<(String, Real)> = ivs.to_vec();
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));

    // Row subsample bounds the O(N * M^2) correlation stage.
    let n = features.n_rows();
    let sample: Option<Vec<usize>> = if n > cfg.pearson_row_cap {
        let mut rows: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rows.shuffle(&mut rng);
        rows.truncate(cfg.pearson_row_cap);
        rows.sort_unstable();
        Some(rows)
    } else {
        None
    };
    let column = |name: &str| -> Result<Vec<Real>> {
        let full = features.column(name)?;
        Ok(match &sample {
            Some(rows) => rows.iter().map(|&r| full[r]).collect(),
            None => full.to_vec(),
        })
    };

    let mut kept: Vec<(String, Vec<Real>)> = Vec::new();
    let mut prunes = Vec::new();
    'features: for (name, _) in &order {
        let values = column(name)?;
        for (kept_name, kept_values) in &kept {
            let r = pearson(kept_values, &values)?;
            if r.abs() > cfg.theta {
                prunes.push(PrunePair {
                    kept: kept_name.clone(),
                    dropped: name.clone(),
                    correlation: r,
                });
                continue 'features;
            }
        }
        kept.push((name.clone(), values));
    }
    Ok((kept.into_iter().map(|(n, _)| n).collect(), prunes))
}

/// Train the ranking ensemble on the surviving features and order them by
/// average-gain importance (ties by name), truncated to `max_features`.
/// Zero-importance features are dropped only when the cap forces truncation.
pub fn rank_and_cap(
    features: &Dataset,
    valid: Option<&Dataset>,
    gbdt_cfg: &GbdtConfig,
    max_features: usize,
) -> Result<(Vec<String>, Vec<(String, Real)>, gbdt::TreeEnsemble)> {
    if features.n_features() == 0 {
        return Err(Error::EmptyDataset);
    }
    let ensemble = gbdt::train(features, valid, gbdt_cfg)?;
    let importance = ensemble.feature_importance();
    let mut scored: Vec<(String, Real)> = features
        .feature_names()
        .into_iter()
        .zip(importance)
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let kept: Vec<String> = scored
        .iter()
        .take(max_features)
        .map(|(n, _)| n.clone())
        .collect();
    Ok((kept, scored, ensemble))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_one_to_ten_beta_two() {
        let column: Vec<Real> = (1..=10).map(|i| i as Real).collect();
        let edges = equal_frequency_bins(&column, 2);
        assert_eq!(edges, vec![5.0]);
        let lower: Vec<Real> = column.iter().copied().filter(|&v| bin_of(&edges, v) == 0).collect();
        assert_eq!(lower, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn constant_column_single_bin() {
        let edges = equal_frequency_bins(&[3.0; 20], 10);
        assert!(edges.is_empty());
    }

    #[test]
    fn ties_stay_together() {
        let edges = equal_frequency_bins(&[1.0, 1.0, 1.0, 2.0], 2);
        assert_eq!(edges, vec![1.0]);
        let counts = [1.0, 1.0, 1.0, 2.0]
            .iter()
            .fold([0usize; 2], |mut acc, &v| {
                acc[bin_of(&edges, v)] += 1;
                acc
            });
        assert_eq!(counts, [3, 1]);
    }

    #[test]
    fn iv_zero_for_identical_class_distributions() {
        // Same values in both classes, bin by bin.
        let column = vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0];
        let labels = vec![0, 1, 0, 1, 0, 1, 0, 1];
        for formula in [IvFormula::StandardLog, IvFormula::PaperLiteral] {
            let iv: Real = information_value(&column, &labels, 4, formula).unwrap();
            assert!(iv.abs() < 1e-12, "{formula:?}: {iv}");
        }
    }

    /// 20-row fixture with known per-bin counts, against a hand oracle.
    #[test]
    fn iv_matches_hand_oracle_on_concrete_fixture() {
        // Bin 1: 8 positive, 2 negative. Bin 2: 2 positive, 8 negative.
        let mut column = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            column.push(1.0 + i as Real * 0.01);
            labels.push(if i < 8 { 1 } else { 0 });
        }
        for i in 0..10 {
            column.push(2.0 + i as Real * 0.01);
            labels.push(if i < 2 { 1 } else { 0 });
        }
        let iv: Real = information_value(&column, &labels, 2, IvFormula::StandardLog).unwrap();

        // Hand computation with 0.5 smoothing over 2 bins.
        let np = 10.0 + 0.5 * 2.0;
        let nn = 10.0 + 0.5 * 2.0;
        let p: [Real; 2] = [(8.0 + 0.5) / np, (2.0 + 0.5) / np];
        let q: [Real; 2] = [(2.0 + 0.5) / nn, (8.0 + 0.5) / nn];
        let expect: Real = (0..2).map(|i| (p[i] - q[i]) * (p[i] / q[i]).ln()).sum();
        assert!((iv - expect).abs() < 1e-12);
        // Unsmoothed value would be 2 * 0.6 * ln 4 ~= 1.66; smoothing pulls
        // it down but it stays a strong predictor.
        assert!(iv > 0.5);
    }

    #[test]
    fn iv_single_class_errors() {
        assert!(matches!(
            information_value::<Real>(&[1.0, 2.0], &[1, 1], 2, IvFormula::StandardLog),
            Err(Error::SingleClassLabels)
        ));
    }

    #[test]
    fn standard_log_iv_nonnegative_on_random_fixtures() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.gen_range(4..80);
            let column: Vec<Real> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            labels[0] = 0;
            labels[1] = 1;
            let iv: Real =
                information_value(&column, &labels, 10, IvFormula::StandardLog).unwrap();
            assert!(iv >= -1e-12, "negative standard IV: {iv}");
        }
    }

    fn labeled(columns: Vec<(&str, Vec<Real>)>, labels: Vec<u8>) -> Dataset {
        Dataset::new(
            columns
                .into_iter()
                .map(|(n, v)| (n.to_string(), v))
                .collect(),
            labels,
        )
        .unwrap()
    }

    #[test]
    fn filter_keeps_label_equal_and_drops_constant() {
        let labels: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
        let label_col: Vec<Real> = labels.iter().map(|&y| y as Real).collect();
        let d = labeled(
            vec![("mirror", label_col), ("flat", vec![1.0; 40])],
            labels,
        );
        let cfg = SelectorConfig::with_cap_for(2);
        let (kept, ivs) = filter_by_iv(&d, &cfg).unwrap();
        assert_eq!(kept, vec!["mirror".to_string()]);
        let flat_iv = ivs.iter().find(|(n, _)| n == "flat").unwrap().1;
        assert!(flat_iv.abs() < 1e-12);
        let mirror_iv = ivs.iter().find(|(n, _)| n == "mirror").unwrap().1;
        assert!(mirror_iv > 0.1);
    }

    #[test]
    fn pearson_examples() {
        let x = vec![1.0, 2.0, 4.0, 8.0];
        assert!((pearson(&x, &x).unwrap() - 1.0f64).abs() < 1e-12);
        let neg: Vec<Real> = x.iter().map(|&v| -3.0 * v + 7.0).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        let r: Real = pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
        let z: Real = pearson(&[1.0, 1.0], &[2.0, 3.0]).unwrap();
        assert_eq!(z, 0.0);
        assert!(pearson::<Real>(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn redundancy_keeps_higher_iv_member() {
        let a: Vec<Real> = (0..30).map(|i| i as Real).collect();
        let b: Vec<Real> = a.iter().map(|&v| 2.0 * v + 0.1).collect();
        let labels: Vec<u8> = (0..30).map(|i| (i % 2) as u8).collect();
        let d = labeled(vec![("a", a), ("b", b)], labels);
        let cfg = SelectorConfig::with_cap_for(2);
        let ivs = vec![("a".to_string(), 0.4), ("b".to_string(), 0.3)];
        let (kept, prunes) = remove_redundant(&d, &ivs, &cfg, 0).unwrap();
        assert_eq!(kept, vec!["a".to_string()]);
        assert_eq!(prunes.len(), 1);
        assert_eq!(prunes[0].kept, "a");
        assert_eq!(prunes[0].dropped, "b");
        assert!(prunes[0].correlation.abs() > 0.8);
    }

    #[test]
    fn uncorrelated_features_all_kept() {
        let a = vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let b = vec![1.0, 1.0, -1.0, -1.0, 1.0, -1.0];
        let d = labeled(vec![("a", a), ("b", b)], vec![0, 1, 0, 1, 0, 1]);
        let cfg = SelectorConfig::with_cap_for(2);
        let ivs = vec![("a".to_string(), 0.2), ("b".to_string(), 0.15)];
        let (kept, prunes) = remove_redundant(&d, &ivs, &cfg, 0).unwrap();
        assert_eq!(kept.len(), 2);
        assert!(prunes.is_empty());
    }

    #[test]
    fn transitive_redundancy_follows_greedy_rule() {
        // A and B independent; C correlated > theta with both; IV order
        // C > A > B. Greedy keeps C and drops A and B.
        let a = vec![1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        let b = vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let c: Vec<Real> = a.iter().zip(&b).map(|(&x, &y)| x + 0.95 * y).collect();
        let labels = vec![0, 1, 0, 1, 0, 1, 0, 1];
        let d = labeled(vec![("a", a), ("b", b), ("c", c)], labels);
        let cfg = SelectorConfig {
            theta: 0.5,
            ..SelectorConfig::with_cap_for(3)
        };
        let ivs = vec![
            ("a".to_string(), 0.3),
            ("b".to_string(), 0.2),
            ("c".to_string(), 0.5),
        ];
        let (kept, prunes) = remove_redundant(&d, &ivs, &cfg, 0).unwrap();
        assert_eq!(kept, vec!["c".to_string()]);
        assert_eq!(prunes.len(), 2);
        assert!(prunes.iter().all(|p| p.kept == "c"));
    }

    #[test]
    fn kept_set_pairwise_within_theta() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 60;
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
        let base: Vec<Real> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cols: Vec<(String, Vec<Real>)> = (0..8)
            .map(|i| {
                let mix = i as Real / 8.0;
                (
                    format!("f{i}"),
                    base.iter()
                        .map(|&v| mix * v + (1.0 - mix) * rng.gen_range(-1.0..1.0))
                        .collect(),
                )
            })
            .collect();
        let d = Dataset::new(cols, labels).unwrap();
        let cfg = SelectorConfig {
            theta: 0.6,
            ..SelectorConfig::with_cap_for(8)
        };
        let ivs: Vec<(String, Real)> = (0..8).map(|i| (format!("f{i}"), i as Real)).collect();
        let (kept, _) = remove_redundant(&d, &ivs, &cfg, 0).unwrap();
        for i in 0..kept.len() {
            for j in i + 1..kept.len() {
                let r: Real =
                    pearson(d.column(&kept[i]).unwrap(), d.column(&kept[j]).unwrap()).unwrap();
                assert!(r.abs() <= cfg.theta + 1e-12);
            }
        }
    }

    #[test]
    fn rank_and_cap_truncates() {
        let labels: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
        let signal: Vec<Real> = labels.iter().map(|&y| y as Real).collect();
        let weak: Vec<Real> = (0..40).map(|i| ((i * 7) % 13) as Real).collect();
        let noise: Vec<Real> = (0..40).map(|i| ((i * 11) % 17) as Real).collect();
        let d = labeled(
            vec![("signal", signal), ("weak", weak), ("noise", noise)],
            labels,
        );
        let cfg = GbdtConfig {
            n_trees: 5,
            max_depth: 2,
            ..GbdtConfig::default()
        };
        let (top2, scored, _) = rank_and_cap(&d, None, &cfg, 2).unwrap();
        assert_eq!(top2.len(), 2);
        assert_eq!(top2[0], "signal");
        let (all, _, _) = rank_and_cap(&d, None, &cfg, 10).unwrap();
        assert_eq!(all.len(), 3);
        assert!(scored.iter().all(|(_, v)| *v >= 0.0));
    }
}
