//! Mining feature combinations from ensemble split paths.
//!
//! Every root-to-leaf-parent route of every tree yields a path of distinct
//! split features with their threshold sets. Subsets of a path's features are
//! candidate combinations, scored by the information gain ratio of the
//! partition their split values induce on the training rows.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gbdt::{Node, TreeEnsemble};
use crate::num::entropy_bits;
use crate::Real;

/// One path: distinct split features in root-to-leaf order, each with its
/// sorted set of thresholds along the route.
pub type Path = Vec<(usize, Vec<Real>)>;

#[derive(Debug, Clone, Default)]
pub struct PathSet {
    pub paths: Vec<Path>,
}

/// An unordered set of base features with their collected split values.
#[derive(Debug, Clone)]
pub struct FeatureCombination {
    /// Sorted, distinct feature ids.
    pub feature_ids: Vec<usize>,
    /// Sorted split values, parallel to `feature_ids`.
    pub split_values: Vec<Vec<Real>>,
    pub score: Real,
}

impl FeatureCombination {
    pub fn arity(&self) -> usize {
        self.feature_ids.len()
    }
}

/// Whether combinations are ranked by gain ratio or plain information gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreKind {
    #[default]
    GainRatio,
    Gain,
}

fn merge_sorted(values: &mut Vec<Real>, add: &[Real]) {
    values.extend_from_slice(add);
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
}

/// One path per internal node that parents at least one leaf, per tree.
/// Thresholds of a feature split repeatedly along a route are unioned;
/// duplicate paths (same features and value sets) are removed.
pub fn extract_paths(ensemble: &TreeEnsemble) -> PathSet {
    let mut paths: Vec<Path> = Vec::new();
    let mut seen: std::collections::HashSet<String> = std::collections::HashSet::new();

    for tree in &ensemble.trees {
        if tree.nodes.is_empty() || matches!(tree.nodes[0], Node::Leaf { .. }) {
            continue;
        }
        // DFS with the running route of (feature, values).
        let mut stack: Vec<(usize, Path)> = vec![(0, Vec::new())];
        while let Some((idx, route)) = stack.pop() {
            let (feature, threshold, left, right) = match &tree.nodes[idx] {
                Node::Leaf { .. } => continue,
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => (*feature, *threshold, *left, *right),
            };
            let mut route = route;
            match route.iter_mut().find(|(f, _)| *f == feature) {
                Some((_, values)) => merge_sorted(values, &[threshold]),
                None => route.push((feature, vec![threshold])),
            }
            let parents_leaf = matches!(tree.nodes[left], Node::Leaf { .. })
                || matches!(tree.nodes[right], Node::Leaf { .. });
            if parents_leaf {
                let mut canon: Path = route.clone();
                canon.sort_by_key(|(f, _)| *f);
                let key = format!("{canon:?}");
                if seen.insert(key) {
                    paths.push(route.clone());
                }
            }
            stack.push((right, route.clone()));
            stack.push((left, route));
        }
    }
    PathSet { paths }
}

/// All subsets of size 1..=max_arity of each path's features, deduplicated
/// across paths by feature set; split values are unioned when the same
/// combination arises on multiple paths.
pub fn enumerate_combinations(paths: &PathSet, max_arity: usize) -> Vec<FeatureCombination> {
    let mut by_key: HashMap<Vec<usize>, FeatureCombination> = HashMap::new();
    for path in &paths.paths {
        let mut sorted: Path = path.clone();
        sorted.sort_by_key(|(f, _)| *f);
        let p = sorted.len();
        for arity in 1..=max_arity.min(p) {
            // Lexicographic subset enumeration over indices into `sorted`.
            let mut idx: Vec<usize> = (0..arity).collect();
            loop {
                let feature_ids: Vec<usize> = idx.iter().map(|&i| sorted[i].0).collect();
                match by_key.get_mut(&feature_ids) {
                    Some(existing) => {
                        for (slot, &i) in idx.iter().enumerate() {
                            merge_sorted(&mut existing.split_values[slot], &sorted[i].1);
                        }
                    }
                    None => {
                        by_key.insert(
                            feature_ids.clone(),
                            FeatureCombination {
                                feature_ids,
                                split_values: idx.iter().map(|&i| sorted[i].1.clone()).collect(),
                                score: 0.0,
                            },
                        );
                    }
                }
                // Advance to the next index combination.
                let mut k = arity as isize - 1;
                while k >= 0 && idx[k as usize] == k as usize + p - arity {
                    k -= 1;
                }
                if k < 0 {
                    break;
                }
                let k = k as usize;
                idx[k] += 1;
                for j in k + 1..arity {
                    idx[j] = idx[j - 1] + 1;
                }
            }
        }
    }
    let mut combos: Vec<FeatureCombination> = by_key.into_values().collect();
    combos.sort_by(|a, b| a.feature_ids.cmp(&b.feature_ids));
    combos
}

/// Cell index per row: each feature contributes the count of its split
/// values <= the row's value (a boundary value belongs to the upper
/// interval, matching the "< goes left" routing convention), combined in
/// mixed radix.
pub fn partition_cells(d: &Dataset, combo: &FeatureCombination) -> Result<Vec<usize>> {
    let n = d.n_rows();
    let mut cells = vec![0usize; n];
    let mut stride = 1usize;
    for (slot, &fid) in combo.feature_ids.iter().enumerate() {
        if fid >= d.n_features() {
            return Err(Error::MissingFeature(format!("feature id {fid}")));
        }
        let values = d.column_values(fid);
        let edges = &combo.split_values[slot];
        for (row, &v) in values.iter().enumerate() {
            let interval = edges.partition_point(|&e| e <= v);
            cells[row] += interval * stride;
        }
        stride *= edges.len() + 1;
    }
    Ok(cells)
}

/// C4.5-style gain ratio of a partition against binary labels, entropy in
/// bits. Returns plain information gain when `kind` is [`ScoreKind::Gain`];
/// returns 0 when the split info is 0 (all rows in one cell).
pub fn information_gain_ratio(cells: &[usize], labels: &[u8], kind: ScoreKind) -> Result<Real> {
    if cells.len() != labels.len() {
        return Err(Error::LengthMismatch(cells.len(), labels.len()));
    }
    let n = cells.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    // Dense counting when the cell-id range is modest; hashing otherwise.
    let max_cell = cells.iter().copied().max().unwrap_or(0);
    let mut label_counts = [0usize; 2];
    let nf = n as Real;
    let mut conditional = 0.0;
    let mut split_info = 0.0;
    let mut accumulate = |counts: &[usize; 2]| {
        let n_cell = counts[0] + counts[1];
        if n_cell == 0 {
            return;
        }
        let w = n_cell as Real / nf;
        conditional += w * entropy_bits::<Real>(counts);
        split_info -= w * w.log2();
    };
    if max_cell < 1 << 20 {
        let mut counts = vec![[0usize; 2]; max_cell + 1];
        for (&c, &y) in cells.iter().zip(labels) {
            counts[c][y as usize] += 1;
            label_counts[y as usize] += 1;
        }
        counts.iter().for_each(&mut accumulate);
    } else {
        let mut counts: HashMap<usize, [usize; 2]> = HashMap::new();
        for (&c, &y) in cells.iter().zip(labels) {
            counts.entry(c).or_insert([0, 0])[y as usize] += 1;
            label_counts[y as usize] += 1;
        }
        counts.values().for_each(&mut accumulate);
    }

    let h_y: Real = entropy_bits(&label_counts);
    let gain = h_y - conditional;
    Ok(match kind {
        ScoreKind::Gain => gain,
        ScoreKind::GainRatio => {
            if split_info == 0.0 {
                0.0
            } else {
                gain / split_info
            }
        }
    })
}

/// Score every combination on the training rows.
pub fn score_combinations(
    d: &Dataset,
    combos: &mut [FeatureCombination],
    kind: ScoreKind,
) -> Result<()> {
    let scores: Vec<Result<Real>> = combos
        .par_iter()
        .map(|c| {
            let cells = partition_cells(d, c)?;
            information_gain_ratio(&cells, d.labels(), kind)
        })
        .collect();
    for (combo, score) in combos.iter_mut().zip(scores) {
        combo.score = score?;
    }
    Ok(())
}

/// The `gamma` highest-scoring combinations; ties prefer lower arity, then
/// lexicographic feature ids.
pub fn top_gamma(mut combos: Vec<FeatureCombination>, gamma: usize) -> Vec<FeatureCombination> {
    combos.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(a.arity().cmp(&b.arity()))
            .then(a.feature_ids.cmp(&b.feature_ids))
    });
    combos.truncate(gamma);
    combos
}
