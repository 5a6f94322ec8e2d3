//! Gradient-boosted regression trees for binary classification.
//!
//! Boosting on logistic loss with first/second-order statistics and exact
//! greedy split search over midpoints between consecutive distinct values.
//! The ensemble keeps its full split structure (features, thresholds, gains)
//! so paths can be mined and average-gain importance computed downstream.

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::Real;

#[derive(Debug, Clone)]
pub struct GbdtConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: Real,
    pub reg_lambda: Real,
    /// Flat penalty subtracted from every split gain (the gamma term of the
    /// gain formula, unrelated to the combination budget).
    pub min_gain: Real,
    pub min_child_rows: usize,
    pub seed: u64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self {
            n_trees: 50,
            max_depth: 4,
            learning_rate: 0.3,
            reg_lambda: 1.0,
            min_gain: 0.0,
            min_child_rows: 1,
            seed: 0,
        }
    }
}

impl GbdtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::InvalidConfig("n_trees must be >= 1".into()));
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidConfig("max_depth must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidConfig(
                "learning_rate must be in (0, 1]".into(),
            ));
        }
        if self.reg_lambda < 0.0 || self.min_gain < 0.0 {
            return Err(Error::InvalidConfig(
                "reg_lambda and min_gain must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Tree node; rows with value < threshold route left.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Internal {
        feature: usize,
        threshold: Real,
        gain: Real,
        left: usize,
        right: usize,
    },
    Leaf {
        weight: Real,
    },
}

/// A single regression tree stored as an arena; the root is node 0.
#[derive(Debug, Clone, Default)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Unscaled leaf weight for one row.
    pub fn leaf_weight(&self, row_value: impl Fn(usize) -> Real) -> Real {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { weight } => return *weight,
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    idx = if row_value(*feature) < *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TreeEnsemble {
    pub trees: Vec<Tree>,
    /// Initial log-odds.
    pub base_score: Real,
    pub learning_rate: Real,
    pub feature_names: Vec<String>,
    /// Training log-loss after each boosting round.
    pub train_loss: Vec<Real>,
    /// Validation log-loss after each round, when a validation set was given.
    pub valid_loss: Vec<Real>,
}

pub fn sigmoid(x: Real) -> Real {
    1.0 / (1.0 + (-x).exp())
}

fn log_loss(margins: &[Real], labels: &[u8]) -> Real {
    let mut sum = 0.0;
    for (&m, &y) in margins.iter().zip(labels) {
        let p = sigmoid(m).clamp(1e-15, 1.0 - 1e-15);
        sum -= if y == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    sum / margins.len() as Real
}

/// Best split candidate for one frontier node.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: Real,
    feature: usize,
    threshold: Real,
}

impl Candidate {
    /// Deterministic preference: higher gain, then lower feature id, then
    /// lower threshold.
    fn better_than(&self, other: &Option<Candidate>) -> bool {
        match other {
            None => true,
            Some(o) => {
                (self.gain, o.feature, o.threshold) > (o.gain, self.feature, self.threshold)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    node_pos: usize,
    g_sum: Real,
    h_sum: Real,
    count: usize,
}

fn split_gain(gl: Real, hl: Real, gr: Real, hr: Real, lambda: Real, min_gain: Real) -> Real {
    0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda)
        - (gl + gr) * (gl + gr) / (hl + hr + lambda))
        - min_gain
}

const DONE: u32 = u32::MAX;

/// Train a boosted ensemble. The training set must contain both classes.
pub fn train(train: &Dataset, valid: Option<&Dataset>, cfg: &GbdtConfig) -> Result<TreeEnsemble> {
    cfg.validate()?;
    let n = train.n_rows();
    if n == 0 || train.n_features() == 0 {
        return Err(Error::EmptyDataset);
    }
    if !train.has_both_classes() {
        return Err(Error::SingleClassLabels);
    }
    let labels = train.labels();
    let n_features = train.n_features();

    // Global per-feature row orderings, computed once; ties break by row
    // index so training is deterministic.
    let sorted_idx: Vec<Vec<u32>> = (0..n_features)
        .into_par_iter()
        .map(|f| {
            let col = train.column_values(f);
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| {
                col[a as usize]
                    .partial_cmp(&col[b as usize])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            idx
        })
        .collect();
    // Column values in sorted order, so the split scan reads sequentially.
    let sorted_val: Vec<Vec<Real>> = sorted_idx
        .par_iter()
        .enumerate()
        .map(|(f, idx)| {
            let col = train.column_values(f);
            idx.iter().map(|&r| col[r as usize]).collect()
        })
        .collect();

    let pos = labels.iter().filter(|&&y| y == 1).count() as Real;
    let base_score = (pos / (n as Real - pos)).ln();

    let mut margins = vec![base_score; n];
    let mut valid_margins = valid.map(|v| vec![base_score; v.n_rows()]);

    let mut ensemble = TreeEnsemble {
        trees: Vec::with_capacity(cfg.n_trees),
        base_score,
        learning_rate: cfg.learning_rate,
        feature_names: train.feature_names(),
        train_loss: Vec::new(),
        valid_loss: Vec::new(),
    };

    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut gh_sorted: Vec<Vec<(Real, Real)>> = vec![Vec::with_capacity(n); n_features];

    for _round in 0..cfg.n_trees {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            grad[i] = p - labels[i] as Real;
            hess[i] = p * (1.0 - p);
        }
        // Gather the round's gradient pairs into each feature's sorted order
        // once, so every level's scan is a sequential read.
        gh_sorted
            .par_iter_mut()
            .zip(&sorted_idx)
            .for_each(|(gh, idx)| {
                gh.clear();
                gh.extend(idx.iter().map(|&r| (grad[r as usize], hess[r as usize])));
            });
        let (tree, node_of) = grow_tree(train, &sorted_idx, &sorted_val, &gh_sorted, &grad, &hess, cfg);

        for (m, &node) in margins.iter_mut().zip(&node_of) {
            if let Node::Leaf { weight } = tree.nodes[node as usize] {
                *m += cfg.learning_rate * weight;
            }
        }
        ensemble.train_loss.push(log_loss(&margins, labels));

        if let (Some(v), Some(vm)) = (valid, valid_margins.as_mut()) {
            for (i, m) in vm.iter_mut().enumerate() {
                *m += cfg.learning_rate * tree.leaf_weight(|f| v.column_values(f)[i]);
            }
            ensemble.valid_loss.push(log_loss(vm, v.labels()));
        }

        ensemble.trees.push(tree);
    }
    Ok(ensemble)
}

fn grow_tree(
    train: &Dataset,
    sorted_idx: &[Vec<u32>],
    sorted_val: &[Vec<Real>],
    gh_sorted: &[Vec<(Real, Real)>],
    grad: &[Real],
    hess: &[Real],
    cfg: &GbdtConfig,
) -> (Tree, Vec<u32>) {
    let n = grad.len();
    let mut nodes = vec![Node::Leaf { weight: 0.0 }];
    let mut assignment: Vec<u32> = vec![0; n];
    // Node index each training row ends up at; lets the caller update
    // margins without re-routing rows through the finished tree.
    let mut node_of: Vec<u32> = vec![0; n];
    let mut frontier = vec![Slot {
        node_pos: 0,
        g_sum: grad.iter().sum(),
        h_sum: hess.iter().sum(),
        count: n,
    }];

    for _depth in 0..cfg.max_depth {
        if frontier.is_empty() {
            break;
        }
        let best = best_splits(
            train, sorted_idx, sorted_val, gh_sorted, &assignment, &frontier, cfg,
        );

        // Split or finalize every frontier slot; surviving children form the
        // next frontier, renumbered from 0.
        let mut next_frontier: Vec<Slot> = Vec::new();
        let mut child_of: Vec<Option<(u32, u32, usize, Real)>> = Vec::new();
        for (slot_i, slot) in frontier.iter().enumerate() {
            match best[slot_i] {
                Some(c) if c.gain > 0.0 => {
                    let left = nodes.len();
                    nodes.push(Node::Leaf { weight: 0.0 });
                    let right = nodes.len();
                    nodes.push(Node::Leaf { weight: 0.0 });
                    nodes[slot.node_pos] = Node::Internal {
                        feature: c.feature,
                        threshold: c.threshold,
                        gain: c.gain,
                        left,
                        right,
                    };
                    let l_slot = next_frontier.len() as u32;
                    next_frontier.push(Slot {
                        node_pos: left,
                        g_sum: 0.0,
                        h_sum: 0.0,
                        count: 0,
                    });
                    let r_slot = next_frontier.len() as u32;
                    next_frontier.push(Slot {
                        node_pos: right,
                        g_sum: 0.0,
                        h_sum: 0.0,
                        count: 0,
                    });
                    child_of.push(Some((l_slot, r_slot, c.feature, c.threshold)));
                }
                _ => {
                    nodes[slot.node_pos] = Node::Leaf {
                        weight: -slot.g_sum / (slot.h_sum + cfg.reg_lambda),
                    };
                    child_of.push(None);
                }
            }
        }

        for i in 0..n {
            let s = assignment[i];
            if s == DONE {
                continue;
            }
            match child_of[s as usize] {
                None => assignment[i] = DONE,
                Some((l, r, feature, threshold)) => {
                    let slot = if train.column_values(feature)[i] < threshold {
                        l
                    } else {
                        r
                    };
                    assignment[i] = slot;
                    node_of[i] = next_frontier[slot as usize].node_pos as u32;
                    let s = &mut next_frontier[slot as usize];
                    s.g_sum += grad[i];
                    s.h_sum += hess[i];
                    s.count += 1;
                }
            }
        }
        frontier = next_frontier;
    }

    // Depth limit reached: remaining frontier nodes become leaves.
    for slot in &frontier {
        nodes[slot.node_pos] = Node::Leaf {
            weight: -slot.g_sum / (slot.h_sum + cfg.reg_lambda),
        };
    }
    (Tree { nodes }, node_of)
}

/// Exact greedy search: one pass over each feature's global sorted order,
/// accumulating per-slot prefix statistics and probing the midpoint between
/// consecutive distinct values inside each slot.
fn best_splits(
    train: &Dataset,
    sorted_idx: &[Vec<u32>],
    sorted_val: &[Vec<Real>],
    gh_sorted: &[Vec<(Real, Real)>],
    assignment: &[u32],
    frontier: &[Slot],
    cfg: &GbdtConfig,
) -> Vec<Option<Candidate>> {
    let n_features = train.n_features();
    let per_feature: Vec<Vec<Option<Candidate>>> = (0..n_features)
        .into_par_iter()
        .map(|f| {
            // Per-slot running state. Thresholds increase within a slot, so
            // at equal gain the earlier (lower-threshold) candidate is kept
            // by requiring a strict improvement.
            let mut best_score = vec![Real::NEG_INFINITY; frontier.len()];
            let mut best_lr = vec![(0.0, 0.0, 0.0, 0.0); frontier.len()];
            let mut best_threshold = vec![0.0; frontier.len()];
            let mut cum_g = vec![0.0; frontier.len()];
            let mut cum_h = vec![0.0; frontier.len()];
            let mut cum_n = vec![0usize; frontier.len()];
            let mut prev = vec![Real::NAN; frontier.len()];
            for ((&row, &v), &(g_row, h_row)) in sorted_idx[f]
                .iter()
                .zip(&sorted_val[f])
                .zip(&gh_sorted[f])
            {
                let s = assignment[row as usize];
                if s == DONE {
                    continue;
                }
                let s = s as usize;
                if cum_n[s] > 0 && v > prev[s] {
                    // Guard against the midpoint collapsing onto either
                    // neighbor for adjacent floats.
                    let t = prev[s] + (v - prev[s]) / 2.0;
                    if prev[s] < t
                        && t <= v
                        && cum_n[s] >= cfg.min_child_rows
                        && frontier[s].count - cum_n[s] >= cfg.min_child_rows
                    {
                        // Rank by the two-child score; the constant parent
                        // term and the 0.5 / min_gain affine map are applied
                        // once per slot after the scan.
                        let gl = cum_g[s];
                        let hl = cum_h[s];
                        let gr = frontier[s].g_sum - gl;
                        let hr = frontier[s].h_sum - hl;
                        let score =
                            gl * gl / (hl + cfg.reg_lambda) + gr * gr / (hr + cfg.reg_lambda);
                        if score > best_score[s] {
                            best_score[s] = score;
                            best_lr[s] = (gl, hl, gr, hr);
                            best_threshold[s] = t;
                        }
                    }
                }
                cum_g[s] += g_row;
                cum_h[s] += h_row;
                cum_n[s] += 1;
                prev[s] = v;
            }
            best_score
                .into_iter()
                .zip(best_lr)
                .zip(best_threshold)
                .map(|((score, (gl, hl, gr, hr)), threshold)| {
                    (score > Real::NEG_INFINITY).then(|| Candidate {
                        gain: split_gain(gl, hl, gr, hr, cfg.reg_lambda, cfg.min_gain),
                        feature: f,
                        threshold,
                    })
                })
                .collect()
        })
        .collect();

    let mut best: Vec<Option<Candidate>> = vec![None; frontier.len()];
    for feature_best in per_feature {
        for (s, cand) in feature_best.into_iter().enumerate() {
            if let Some(c) = cand {
                if c.better_than(&best[s]) {
                    best[s] = Some(c);
                }
            }
        }
    }
    best
}

impl TreeEnsemble {
    /// Ensemble with no trees; predicts the constant base score.
    pub fn constant(base_score: Real, learning_rate: Real, feature_names: Vec<String>) -> Self {
        Self {
            trees: Vec::new(),
            base_score,
            learning_rate,
            feature_names,
            train_loss: Vec::new(),
            valid_loss: Vec::new(),
        }
    }

    /// Feature ids that appear at any split.
    pub fn split_features(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self
            .trees
            .iter()
            .flat_map(|t| t.nodes.iter())
            .filter_map(|n| match n {
                Node::Internal { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        used.sort_unstable();
        used.dedup();
        used
    }

    /// All recorded splits as (feature, gain, threshold).
    pub fn gain_records(&self) -> Vec<(usize, Real, Real)> {
        self.trees
            .iter()
            .flat_map(|t| t.nodes.iter())
            .filter_map(|n| match n {
                Node::Internal {
                    feature,
                    gain,
                    threshold,
                    ..
                } => Some((*feature, *gain, *threshold)),
                Node::Leaf { .. } => None,
            })
            .collect()
    }

    /// Raw additive score per row of `d`. Columns are matched by name, so `d`
    /// may order or extend columns differently; every split feature must be
    /// present.
    pub fn predict_margin(&self, d: &Dataset) -> Result<Vec<Real>> {
        let mut mapping: Vec<usize> = Vec::with_capacity(self.feature_names.len());
        let used = self.split_features();
        for (fid, name) in self.feature_names.iter().enumerate() {
            match d.column_index(name) {
                Some(idx) => mapping.push(idx),
                None if used.binary_search(&fid).is_err() => mapping.push(usize::MAX),
                None => return Err(Error::MissingFeature(name.clone())),
            }
        }
        let mut margins = vec![self.base_score; d.n_rows()];
        for tree in &self.trees {
            for (i, m) in margins.iter_mut().enumerate() {
                *m += self.learning_rate
                    * tree.leaf_weight(|f| d.column_values(mapping[f])[i]);
            }
        }
        Ok(margins)
    }

    /// Average recorded split gain per feature; unused features map to 0.
    pub fn feature_importance(&self) -> Vec<Real> {
        let mut total = vec![0.0; self.feature_names.len()];
        let mut count = vec![0usize; self.feature_names.len()];
        for (f, gain, _) in self.gain_records() {
            total[f] += gain;
            count[f] += 1;
        }
        total
            .iter()
            .zip(&count)
            .map(|(&t, &c)| if c == 0 { 0.0 } else { t / c as Real })
            .collect()
    }

    /// Human-readable tree listing for debugging.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("base_score={}\n", self.base_score));
        for (ti, tree) in self.trees.iter().enumerate() {
            out.push_str(&format!("tree {ti}:\n"));
            for (ni, node) in tree.nodes.iter().enumerate() {
                match node {
                    Node::Internal {
                        feature,
                        threshold,
                        gain,
                        left,
                        right,
                    } => out.push_str(&format!(
                        "  node {ni}: [{} < {threshold}] gain={gain} left={left} right={right}\n",
                        self.feature_names[*feature]
                    )),
                    Node::Leaf { weight } => {
                        out.push_str(&format!("  node {ni}: leaf weight={weight}\n"))
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;

    fn one_dim() -> Dataset {
        Dataset::new(
            vec![("x".to_string(), vec![1.0, 2.0, 3.0, 4.0])],
            vec![0, 0, 1, 1],
        )
        .unwrap()
    }

    fn depth1_cfg() -> GbdtConfig {
        GbdtConfig {
            n_trees: 1,
            max_depth: 1,
            ..GbdtConfig::default()
        }
    }

    #[test]
    fn depth_one_split_on_separable_data() {
        let d = one_dim();
        let e = train(&d, None, &depth1_cfg()).unwrap();
        assert_eq!(e.trees.len(), 1);
        match &e.trees[0].nodes[0] {
            Node::Internal {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                assert_eq!(*feature, 0);
                assert!(*threshold > 2.0 && *threshold <= 3.0);
                let (lw, rw) = match (&e.trees[0].nodes[*left], &e.trees[0].nodes[*right]) {
                    (Node::Leaf { weight: l }, Node::Leaf { weight: r }) => (*l, *r),
                    _ => panic!("children must be leaves at depth 1"),
                };
                assert!(lw < 0.0 && 0.0 < rw);
            }
            Node::Leaf { .. } => panic!("expected a split at the root"),
        }
    }

    #[test]
    fn single_class_labels_error() {
        let d = Dataset::new(vec![("x".to_string(), vec![1.0, 2.0])], vec![1, 1]).unwrap();
        assert!(matches!(
            train(&d, None, &depth1_cfg()),
            Err(Error::SingleClassLabels)
        ));
    }

    #[test]
    fn constant_feature_yields_single_leaf() {
        let d = Dataset::new(
            vec![("x".to_string(), vec![5.0; 8])],
            vec![0, 1, 0, 1, 0, 1, 0, 1],
        )
        .unwrap();
        let e = train(&d, None, &depth1_cfg()).unwrap();
        assert_eq!(e.trees[0].nodes.len(), 1);
        assert!(matches!(e.trees[0].nodes[0], Node::Leaf { .. }));
    }

    #[test]
    fn zero_tree_ensemble_predicts_base_score() {
        let e = TreeEnsemble::constant(0.7, 0.3, vec!["x".to_string()]);
        let d = one_dim();
        let m = e.predict_margin(&d).unwrap();
        assert_eq!(m, vec![0.7; 4]);
    }

    #[test]
    fn predict_traces_routing_and_is_monotone_here() {
        let d = one_dim();
        let e = train(&d, None, &depth1_cfg()).unwrap();
        let m = e.predict_margin(&d).unwrap();
        let (threshold, lw) = match &e.trees[0].nodes[0] {
            Node::Internal {
                threshold, left, ..
            } => match &e.trees[0].nodes[*left] {
                Node::Leaf { weight } => (*threshold, *weight),
                _ => unreachable!(),
            },
            _ => unreachable!(),
        };
        assert!(1.0 < threshold);
        assert!((m[0] - (e.base_score + e.learning_rate * lw)).abs() < 1e-15);
        assert!(m[3] > m[0]);
    }

    #[test]
    fn missing_split_feature_errors() {
        let d = one_dim();
        let e = train(&d, None, &depth1_cfg()).unwrap();
        let other = Dataset::new(vec![("z".to_string(), vec![1.0])], vec![0]).unwrap();
        assert!(matches!(
            e.predict_margin(&other),
            Err(Error::MissingFeature(_))
        ));
    }

    #[test]
    fn importance_is_average_gain() {
        let mut e = TreeEnsemble::constant(0.0, 1.0, vec!["a".into(), "b".into()]);
        e.trees.push(Tree {
            nodes: vec![
                Node::Internal {
                    feature: 0,
                    threshold: 0.5,
                    gain: 1.0,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { weight: 0.0 },
                Node::Internal {
                    feature: 0,
                    threshold: 0.7,
                    gain: 3.0,
                    left: 3,
                    right: 4,
                },
                Node::Leaf { weight: 0.0 },
                Node::Leaf { weight: 0.0 },
            ],
        });
        let imp = e.feature_importance();
        assert_eq!(imp, vec![2.0, 0.0]);
    }

    #[test]
    fn training_loss_non_increasing() {
        let xs: Vec<Real> = (0..40).map(|i| ((i * 37) % 40) as Real / 7.0).collect();
        let ys: Vec<u8> = xs.iter().map(|&x| if x.sin() > 0.1 { 1 } else { 0 }).collect();
        let d = Dataset::new(vec![("x".to_string(), xs)], ys).unwrap();
        let cfg = GbdtConfig {
            n_trees: 20,
            max_depth: 3,
            ..GbdtConfig::default()
        };
        let e = train(&d, Some(&d), &cfg).unwrap();
        assert_eq!(e.valid_loss.len(), 20);
        for w in e.train_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "loss increased: {} -> {}", w[0], w[1]);
        }
    }

    /// Recompute every recorded split gain from the routed gradient/hessian
    /// sums of the first round and compare.
    #[test]
    fn recorded_gains_match_recomputation_single_tree() {
        let xs: Vec<Real> = (0..30).map(|i| ((i * 13) % 30) as Real).collect();
        let zs: Vec<Real> = (0..30).map(|i| ((i * 7) % 11) as Real).collect();
        let ys: Vec<u8> = (0..30).map(|i| ((i / 3) % 2) as u8).collect();
        let d = Dataset::new(
            vec![("x".to_string(), xs.clone()), ("z".to_string(), zs.clone())],
            ys.clone(),
        )
        .unwrap();
        let cfg = GbdtConfig {
            n_trees: 1,
            max_depth: 3,
            ..GbdtConfig::default()
        };
        let e = train(&d, None, &cfg).unwrap();

        // First-round gradients from the constant base score.
        let p = sigmoid(e.base_score);
        let grad: Vec<Real> = ys.iter().map(|&y| p - y as Real).collect();
        let hess = vec![p * (1.0 - p); 30];

        let tree = &e.trees[0];
        // Route every row, collecting (G, H) per node.
        let mut sums = vec![(0.0, 0.0); tree.nodes.len()];
        for i in 0..30 {
            let mut idx = 0;
            loop {
                sums[idx].0 += grad[i];
                sums[idx].1 += hess[i];
                match &tree.nodes[idx] {
                    Node::Leaf { .. } => break,
                    Node::Internal {
                        feature,
                        threshold,
                        left,
                        right,
                        ..
                    } => {
                        let v = if *feature == 0 { xs[i] } else { zs[i] };
                        idx = if v < *threshold { *left } else { *right };
                    }
                }
            }
        }
        for (idx, node) in tree.nodes.iter().enumerate() {
            if let Node::Internal {
                gain, left, right, ..
            } = node
            {
                let (gl, hl) = sums[*left];
                let (gr, hr) = sums[*right];
                let expect = split_gain(gl, hl, gr, hr, cfg.reg_lambda, cfg.min_gain);
                assert!(
                    (gain - expect).abs() < 1e-9,
                    "node {idx}: recorded {gain} vs recomputed {expect}"
                );
            }
        }
    }

    /// Brute-force depth-1 oracle: enumerate all (feature, midpoint) pairs.
    #[test]
    fn depth_one_matches_exhaustive_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for trial in 0..25 {
            let n = rng.gen_range(6..50);
            let m = rng.gen_range(1..=3);
            let cols: Vec<(String, Vec<Real>)> = (0..m)
                .map(|f| {
                    (
                        format!("f{f}"),
                        (0..n).map(|_| (rng.gen_range(0..8) as Real) / 2.0).collect(),
                    )
                })
                .collect();
            let mut ys: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            ys[0] = 0;
            ys[1] = 1;
            let d = Dataset::new(cols.clone(), ys.clone()).unwrap();
            let e = train(&d, None, &depth1_cfg()).unwrap();

            // Oracle over all features and all midpoints.
            let p = sigmoid(e.base_score);
            let grad: Vec<Real> = ys.iter().map(|&y| p - y as Real).collect();
            let h = p * (1.0 - p);
            let gt: Real = grad.iter().sum();
            let ht = h * n as Real;
            let mut best: Option<Candidate> = None;
            for f in 0..m {
                let mut vals: Vec<Real> = cols[f].1.clone();
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                vals.dedup();
                for w in vals.windows(2) {
                    let t = w[0] + (w[1] - w[0]) / 2.0;
                    let mut gl = 0.0;
                    let mut nl = 0usize;
                    for i in 0..n {
                        if cols[f].1[i] < t {
                            gl += grad[i];
                            nl += 1;
                        }
                    }
                    let hl = h * nl as Real;
                    let c = Candidate {
                        gain: split_gain(gl, hl, gt - gl, ht - hl, 1.0, 0.0),
                        feature: f,
                        threshold: t,
                    };
                    if c.better_than(&best) {
                        best = Some(c);
                    }
                }
            }

            match (&e.trees[0].nodes[0], best) {
                (
                    Node::Internal {
                        feature, threshold, ..
                    },
                    Some(b),
                ) => {
                    assert!(b.gain > 0.0, "trial {trial}");
                    assert_eq!(*feature, b.feature, "trial {trial}");
                    assert!(
                        (threshold - b.threshold).abs() < 1e-12,
                        "trial {trial}: {threshold} vs {}",
                        b.threshold
                    );
                }
                (Node::Leaf { .. }, b) => {
                    assert!(b.map_or(true, |b| b.gain <= 0.0), "trial {trial}");
                }
                (Node::Internal { .. }, None) => panic!("trial {trial}: split without oracle candidate"),
            }
        }
    }
}
