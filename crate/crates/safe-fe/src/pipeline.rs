//! Iterative generation/selection loop, baselines, and search-space counters.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::time::Instant;

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::combiner::{self, FeatureCombination, PathSet, ScoreKind};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::eval;
use crate::gbdt::{self, GbdtConfig};
use crate::operators::{self, FeatureDef, PlanMeta, TransformPlan};
use crate::selector::{self, SelectionReport, SelectorConfig};
use crate::Real;

/// How candidate combinations are chosen: mined from tree paths (safe),
/// random pairs of all features (rand), or random pairs of split features
/// (imp). The baselines share the full selection cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Safe,
    Rand,
    Imp,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "safe" => Ok(Mode::Safe),
            "rand" => Ok(Mode::Rand),
            "imp" => Ok(Mode::Imp),
            other => Err(format!("unknown mode {other:?} (expected safe|rand|imp)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SafeConfig {
    pub n_iter: usize,
    pub time_budget_secs: Option<Real>,
    /// Budget of top-scoring combinations carried into generation.
    pub gamma: usize,
    pub max_arity: usize,
    pub gbdt: GbdtConfig,
    pub selector: SelectorConfig,
    pub enabled_operators: HashSet<String>,
    pub score_kind: ScoreKind,
    pub seed: u64,
    pub mode: Mode,
}

impl SafeConfig {
    /// Paper-style defaults for a dataset with `m_original` features:
    /// one iteration, gamma and the output cap both 2M, six binary
    /// operators.
    pub fn default_for(m_original: usize) -> Self {
        Self {
            n_iter: 1,
            time_budget_secs: None,
            gamma: (2 * m_original).max(1),
            max_arity: 2,
            gbdt: GbdtConfig::default(),
            selector: SelectorConfig::with_cap_for(m_original),
            enabled_operators: operators::default_enabled(),
            score_kind: ScoreKind::GainRatio,
            seed: 0,
            mode: Mode::Safe,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iter < 1 {
            return Err(Error::InvalidConfig("n_iter must be >= 1".into()));
        }
        if self.gamma < 1 {
            return Err(Error::InvalidConfig("gamma must be >= 1".into()));
        }
        if self.max_arity < 1 {
            return Err(Error::InvalidConfig("max_arity must be >= 1".into()));
        }
        self.gbdt.validate()?;
        self.selector.validate()
    }

    fn digest(&self) -> String {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        let mut ops: Vec<&String> = self.enabled_operators.iter().collect();
        ops.sort();
        format!(
            "{}|{:?}|{}|{}|{:?}|{}|{:?}|{}|{}|{}|{}",
            self.n_iter,
            self.time_budget_secs,
            self.gamma,
            self.max_arity,
            ops,
            self.seed,
            self.mode,
            self.gbdt.n_trees,
            self.gbdt.max_depth,
            self.selector.alpha,
            self.selector.beta,
        )
        .hash(&mut h);
        format!("{:016x}", h.finish())
    }
}

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub path_count: usize,
    pub combination_count: usize,
    pub generated_count: usize,
    pub after_iv: usize,
    pub after_redundancy: usize,
    pub final_count: usize,
    pub valid_auc: Option<Real>,
}

#[derive(Debug, Clone, Default)]
pub struct IterationTrace {
    pub iterations: Vec<IterationRecord>,
    /// Set when the cascade emptied out and the original features were
    /// returned unchanged.
    pub fallback_to_original: bool,
}

impl IterationTrace {
    /// Line-oriented text dump, one iteration per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, r) in self.iterations.iter().enumerate() {
            let auc = r
                .valid_auc
                .map(|a| format!("{a:.6}"))
                .unwrap_or_else(|| "-".to_string());
            out.push_str(&format!(
                "iter={} paths={} combinations={} generated={} after_iv={} after_redundancy={} final={} valid_auc={}\n",
                i, r.path_count, r.combination_count, r.generated_count,
                r.after_iv, r.after_redundancy, r.final_count, auc
            ));
        }
        if self.fallback_to_original {
            out.push_str("warning=empty_selection_fallback_to_original\n");
        }
        out
    }
}

fn all_pairs(ids: &[usize]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            pairs.push((a, b));
        }
    }
    pairs
}

fn sampled_pair_combos(ids: &[usize], gamma: usize, seed: u64) -> Vec<FeatureCombination> {
    let mut pairs = all_pairs(ids);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pairs.shuffle(&mut rng);
    pairs.truncate(gamma);
    pairs.sort_unstable();
    pairs
        .into_iter()
        .map(|(a, b)| FeatureCombination {
            feature_ids: vec![a, b],
            split_values: vec![vec![], vec![]],
            score: 0.0,
        })
        .collect()
}

/// Run the full loop and return the feature-generation plan, the final
/// iteration's selection report, and the per-iteration trace.
pub fn run(
    train: &Dataset,
    valid: &Dataset,
    cfg: &SafeConfig,
) -> Result<(TransformPlan, SelectionReport, IterationTrace)> {
    cfg.validate()?;
    if train.feature_names() != valid.feature_names() {
        return Err(Error::InvalidConfig(
            "train and valid must share the same feature schema".into(),
        ));
    }
    if !train.has_both_classes() {
        return Err(Error::SingleClassLabels);
    }
    let registry = operators::default_registry();
    let original_defs: Vec<FeatureDef> = train
        .feature_names()
        .into_iter()
        .map(FeatureDef::base)
        .collect();

    let mut defs = original_defs.clone();
    let mut cur_train = train.clone();
    let mut report = SelectionReport::default();
    let mut trace = IterationTrace::default();

    let start = Instant::now();
    let mut iterations_done = 0;
    while iterations_done < cfg.n_iter
        && cfg
            .time_budget_secs
            .map_or(true, |b| start.elapsed().as_secs_f64() < b)
    {
        let ensemble = gbdt::train(&cur_train, None, &cfg.gbdt)?;

        let (path_count, combos) = match cfg.mode {
            Mode::Safe => {
                let paths = combiner::extract_paths(&ensemble);
                let mut combos = combiner::enumerate_combinations(&paths, cfg.max_arity);
                combiner::score_combinations(&cur_train, &mut combos, cfg.score_kind)?;
                (
                    paths.paths.len(),
                    combiner::top_gamma(combos, cfg.gamma),
                )
            }
            Mode::Rand => {
                let ids: Vec<usize> = (0..cur_train.n_features()).collect();
                (
                    0,
                    sampled_pair_combos(&ids, cfg.gamma, cfg.seed ^ iterations_done as u64),
                )
            }
            Mode::Imp => (
                0,
                sampled_pair_combos(
                    &ensemble.split_features(),
                    cfg.gamma,
                    cfg.seed ^ iterations_done as u64,
                ),
            ),
        };
        let combination_count = combos.len();

        // Definitions of the current columns, so derived parents flatten
        // through to the original columns.
        let parent_defs: HashMap<String, FeatureDef> = defs
            .iter()
            .map(|d| (d.canonical_name(), d.clone()))
            .collect();
        let (new_columns, new_defs) = operators::generate(
            &cur_train,
            &combos,
            &registry,
            &cfg.enabled_operators,
            &parent_defs,
        )?;
        let generated_count = new_columns.len();

        // Candidate set: current base features plus the generated columns.
        let mut candidate_columns: Vec<(String, Vec<Real>)> = cur_train
            .columns()
            .iter()
            .map(|c| (c.name.clone(), c.values.clone()))
            .collect();
        candidate_columns.extend(new_columns);
        let candidates = Dataset::new(candidate_columns, cur_train.labels().to_vec())?;
        let mut candidate_defs = parent_defs;
        for def in new_defs {
            candidate_defs.insert(def.canonical_name(), def);
        }

        let (iv_kept, ivs) = selector::filter_by_iv(&candidates, &cfg.selector)?;
        if iv_kept.is_empty() {
            trace.fallback_to_original = true;
            trace.iterations.push(IterationRecord {
                path_count,
                combination_count,
                generated_count,
                after_iv: 0,
                after_redundancy: 0,
                final_count: train.n_features(),
                valid_auc: None,
            });
            let plan = TransformPlan::new(
                original_defs,
                PlanMeta {
                    iterations: iterations_done,
                    config_digest: cfg.digest(),
                },
            )?;
            return Ok((plan, report, trace));
        }

        let survivors = candidates.select_columns(&iv_kept)?;
        let survivor_ivs: Vec<(String, Real)> = ivs
            .iter()
            .filter(|(n, _)| iv_kept.contains(n))
            .cloned()
            .collect();
        let (uncorrelated, prunes) =
            selector::remove_redundant(&survivors, &survivor_ivs, &cfg.selector, cfg.seed)?;

        let ranked_input = candidates.select_columns(&uncorrelated)?;
        let (kept, importance, rank_model) = selector::rank_and_cap(
            &ranked_input,
            None,
            &cfg.gbdt,
            cfg.selector.max_features,
        )?;

        // Next iteration's base features, expressed over original columns.
        defs = kept
            .iter()
            .map(|name| candidate_defs[name].clone())
            .collect();
        let plan_so_far = TransformPlan::new(
            defs.clone(),
            PlanMeta {
                iterations: iterations_done + 1,
                config_digest: cfg.digest(),
            },
        )?;

        cur_train = candidates.select_columns(&kept)?;
        let cur_valid = operators::apply_plan(&plan_so_far, valid, &registry)?;

        let valid_auc = if cur_valid.n_rows() > 0 && cur_valid.has_both_classes() {
            let margins = rank_model.predict_margin(&cur_valid)?;
            Some(eval::auc(&margins, cur_valid.labels())?)
        } else {
            None
        };

        report = SelectionReport {
            iv: ivs,
            prunes,
            importance,
            kept: kept.clone(),
        };
        trace.iterations.push(IterationRecord {
            path_count,
            combination_count,
            generated_count,
            after_iv: iv_kept.len(),
            after_redundancy: uncorrelated.len(),
            final_count: kept.len(),
            valid_auc,
        });
        iterations_done += 1;
    }

    let plan = TransformPlan::new(
        defs,
        PlanMeta {
            iterations: iterations_done,
            config_digest: cfg.digest(),
        },
    )?;
    Ok((plan, report, trace))
}

/// Number of ordered `k`-subsets of an `n`-set.
fn arrangements(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let mut acc = BigUint::from(1u32);
    for v in (n - k + 1)..=n {
        acc *= BigUint::from(v);
    }
    acc
}

/// Size of the unrestricted generation search space: sum over registered
/// arities of A(M, i) * |O_i|.
pub fn count_search_space(m: usize, operator_arity_counts: &BTreeMap<usize, usize>) -> BigUint {
    let mut total = BigUint::from(0u32);
    for (&arity, &ops) in operator_arity_counts {
        if arity >= 1 && arity <= m {
            total += arrangements(m, arity) * BigUint::from(ops);
        }
    }
    total
}

/// Upper bound on the path-restricted search space: for each path, sum over
/// subset sizes of A(|p|, j) * |O_j|. Duplicates across paths are not
/// subtracted.
pub fn count_reduced_search_space(
    paths: &PathSet,
    operator_arity_counts: &BTreeMap<usize, usize>,
) -> BigUint {
    let mut total = BigUint::from(0u32);
    for path in &paths.paths {
        let p = path.len();
        for j in 1..=p {
            if let Some(&ops) = operator_arity_counts.get(&j) {
                total += arrangements(p, j) * BigUint::from(ops);
            }
        }
    }
    total
}
