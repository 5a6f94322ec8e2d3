//! Operator registry and feature synthesis.
//!
//! Operators are pure elementwise functions applied to one or two parent
//! columns. A generation run turns selected feature combinations into named
//! derived columns, and the chosen definitions form a serializable transform
//! plan that maps original columns to the engineered representation.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::combiner::FeatureCombination;
use crate::error::{Error, Result};
use crate::Real;

/// Denominators smaller than this yield 0 instead of an overflow.
const DIV_GUARD: Real = 1e-12;

pub const PLAN_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy)]
pub enum Evaluator {
    Unary(fn(Real) -> Real),
    Binary(fn(Real, Real) -> Real),
}

#[derive(Debug, Clone)]
pub struct Operator {
    pub name: &'static str,
    pub commutative: bool,
    pub evaluator: Evaluator,
}

impl Operator {
    pub fn arity(&self) -> usize {
        match self.evaluator {
            Evaluator::Unary(_) => 1,
            Evaluator::Binary(_) => 2,
        }
    }
}

fn guarded_div(a: Real, b: Real) -> Real {
    if b.abs() < DIV_GUARD {
        0.0
    } else {
        a / b
    }
}

/// The shipped operators: six binary (non-commutative ones in both orders)
/// plus the basic unary transforms. Which of them actually generate features
/// is decided by the caller's enabled set; see [`default_enabled`].
pub fn default_registry() -> Vec<Operator> {
    vec![
        Operator {
            name: "add",
            commutative: true,
            evaluator: Evaluator::Binary(|a, b| a + b),
        },
        Operator {
            name: "mul",
            commutative: true,
            evaluator: Evaluator::Binary(|a, b| a * b),
        },
        Operator {
            name: "sub",
            commutative: false,
            evaluator: Evaluator::Binary(|a, b| a - b),
        },
        Operator {
            name: "rsub",
            commutative: false,
            evaluator: Evaluator::Binary(|a, b| b - a),
        },
        Operator {
            name: "div",
            commutative: false,
            evaluator: Evaluator::Binary(guarded_div),
        },
        Operator {
            name: "rdiv",
            commutative: false,
            evaluator: Evaluator::Binary(|a, b| guarded_div(b, a)),
        },
        Operator {
            name: "log1p_abs",
            commutative: false,
            evaluator: Evaluator::Unary(|x| x.abs().ln_1p()),
        },
        Operator {
            name: "square",
            commutative: false,
            evaluator: Evaluator::Unary(|x| x * x),
        },
        Operator {
            name: "sqrt_abs",
            commutative: false,
            evaluator: Evaluator::Unary(|x| x.abs().sqrt()),
        },
        Operator {
            name: "sigmoid",
            commutative: false,
            evaluator: Evaluator::Unary(crate::gbdt::sigmoid),
        },
        Operator {
            name: "tanh",
            commutative: false,
            evaluator: Evaluator::Unary(|x| x.tanh()),
        },
        Operator {
            name: "round",
            commutative: false,
            evaluator: Evaluator::Unary(|x| x.round()),
        },
    ]
}

/// The default enabled set: binary arithmetic only.
pub fn default_enabled() -> HashSet<String> {
    ["add", "mul", "sub", "rsub", "div", "rdiv"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

pub fn find_operator<'a>(registry: &'a [Operator], name: &str) -> Result<&'a Operator> {
    registry
        .iter()
        .find(|op| op.name == name)
        .ok_or_else(|| Error::UnknownOperator(name.to_string()))
}

/// A feature definition: a passthrough of an original column or an operator
/// applied to parent definitions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureDef {
    Base { name: String },
    Derived { op: String, args: Vec<FeatureDef> },
}

fn escape(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        if matches!(c, '(' | ')' | ',' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

impl FeatureDef {
    pub fn base(name: impl Into<String>) -> Self {
        FeatureDef::Base { name: name.into() }
    }

    /// Unique human-readable rendering, `op(parent1,parent2)`.
    pub fn canonical_name(&self) -> String {
        match self {
            FeatureDef::Base { name } => escape(name),
            FeatureDef::Derived { op, args } => {
                let parts: Vec<String> = args.iter().map(|a| a.canonical_name()).collect();
                format!("{op}({})", parts.join(","))
            }
        }
    }

    /// Names of the original columns this definition reads.
    pub fn base_names(&self, out: &mut HashSet<String>) {
        match self {
            FeatureDef::Base { name } => {
                out.insert(name.clone());
            }
            FeatureDef::Derived { args, .. } => {
                for a in args {
                    a.base_names(out);
                }
            }
        }
    }

    fn operator_names(&self, out: &mut HashSet<String>) {
        if let FeatureDef::Derived { op, args } = self {
            out.insert(op.clone());
            for a in args {
                a.operator_names(out);
            }
        }
    }

    /// Evaluate over whole columns.
    pub fn eval_columns(&self, d: &Dataset, registry: &[Operator]) -> Result<Vec<Real>> {
        match self {
            FeatureDef::Base { name } => Ok(d.column(name)?.to_vec()),
            FeatureDef::Derived { op, args } => {
                let op = find_operator(registry, op)?;
                match (op.evaluator, args.as_slice()) {
                    (Evaluator::Unary(f), [a]) => {
                        Ok(a.eval_columns(d, registry)?.into_iter().map(f).collect())
                    }
                    (Evaluator::Binary(f), [a, b]) => {
                        let av = a.eval_columns(d, registry)?;
                        let bv = b.eval_columns(d, registry)?;
                        Ok(av.into_iter().zip(bv).map(|(x, y)| f(x, y)).collect())
                    }
                    _ => Err(Error::MalformedPlan(format!(
                        "operator {} expects arity {}, got {} arguments",
                        op.name,
                        op.arity(),
                        args.len()
                    ))),
                }
            }
        }
    }

    /// Evaluate for a single row given a column lookup.
    pub fn eval_row(
        &self,
        lookup: &dyn Fn(&str) -> Option<Real>,
        registry: &[Operator],
    ) -> Result<Real> {
        match self {
            FeatureDef::Base { name } => {
                lookup(name).ok_or_else(|| Error::MissingFeature(name.clone()))
            }
            FeatureDef::Derived { op, args } => {
                let op = find_operator(registry, op)?;
                match (op.evaluator, args.as_slice()) {
                    (Evaluator::Unary(f), [a]) => Ok(f(a.eval_row(lookup, registry)?)),
                    (Evaluator::Binary(f), [a, b]) => Ok(f(
                        a.eval_row(lookup, registry)?,
                        b.eval_row(lookup, registry)?,
                    )),
                    _ => Err(Error::MalformedPlan(format!(
                        "operator {} arity mismatch",
                        op.name
                    ))),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanMeta {
    pub iterations: usize,
    pub config_digest: String,
}

/// The feature-generation function: an ordered list of feature definitions
/// over original columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformPlan {
    pub version: u32,
    pub operators_used: Vec<String>,
    pub features: Vec<FeatureDef>,
    #[serde(default)]
    pub meta: PlanMeta,
}

impl TransformPlan {
    pub fn new(features: Vec<FeatureDef>, meta: PlanMeta) -> Result<Self> {
        let mut seen = HashSet::new();
        for f in &features {
            if !seen.insert(f.canonical_name()) {
                return Err(Error::MalformedPlan(format!(
                    "duplicate feature definition {}",
                    f.canonical_name()
                )));
            }
        }
        let mut ops = HashSet::new();
        for f in &features {
            f.operator_names(&mut ops);
        }
        let mut operators_used: Vec<String> = ops.into_iter().collect();
        operators_used.sort();
        Ok(Self {
            version: PLAN_FORMAT_VERSION,
            operators_used,
            features,
            meta,
        })
    }

    pub fn output_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.canonical_name()).collect()
    }

    pub fn serialize(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("plan serializes")
    }

    /// Parse and validate a plan document against the registry.
    pub fn deserialize(bytes: &[u8], registry: &[Operator]) -> Result<Self> {
        let plan: TransformPlan = serde_json::from_slice(bytes)
            .map_err(|e| Error::MalformedPlan(e.to_string()))?;
        if plan.version != PLAN_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: plan.version,
                expected: PLAN_FORMAT_VERSION,
            });
        }
        let mut ops = HashSet::new();
        for f in &plan.features {
            f.operator_names(&mut ops);
        }
        for op in &ops {
            find_operator(registry, op)?;
        }
        Ok(plan)
    }
}

/// Apply a plan to a dataset: output columns in plan order, labels carried
/// through unchanged.
pub fn apply_plan(plan: &TransformPlan, d: &Dataset, registry: &[Operator]) -> Result<Dataset> {
    let mut columns = Vec::with_capacity(plan.features.len());
    for def in &plan.features {
        columns.push((def.canonical_name(), def.eval_columns(d, registry)?));
    }
    Dataset::new(columns, d.labels().to_vec())
}

/// Apply every enabled operator of matching arity to every combination.
/// Parents of commutative operators are ordered by name; columns whose
/// canonical name collides with an existing base or generated column are
/// dropped. Returns the new columns and their definitions, in deterministic
/// (combination, registry) order.
pub fn generate(
    d: &Dataset,
    combos: &[FeatureCombination],
    registry: &[Operator],
    enabled: &HashSet<String>,
    parent_defs: &HashMap<String, FeatureDef>,
) -> Result<(Vec<(String, Vec<Real>)>, Vec<FeatureDef>)> {
    let mut taken: HashSet<String> = d
        .columns()
        .iter()
        .map(|c| FeatureDef::base(c.name.clone()).canonical_name())
        .collect();
    let mut columns = Vec::new();
    let mut defs = Vec::new();

    for combo in combos {
        for op in registry.iter().filter(|op| enabled.contains(op.name)) {
            if op.arity() != combo.arity() {
                continue;
            }
            let mut parent_names: Vec<&str> = combo
                .feature_ids
                .iter()
                .map(|&fid| d.columns()[fid].name.as_str())
                .collect();
            if op.commutative {
                parent_names.sort_unstable();
            }
            let args: Vec<FeatureDef> = parent_names
                .iter()
                .map(|&name| {
                    parent_defs
                        .get(name)
                        .cloned()
                        .unwrap_or_else(|| FeatureDef::base(name))
                })
                .collect();
            let def = FeatureDef::Derived {
                op: op.name.to_string(),
                args,
            };
            let name = def.canonical_name();
            if !taken.insert(name.clone()) {
                continue;
            }
            let values = match op.evaluator {
                Evaluator::Unary(f) => d
                    .column_values(combo.feature_ids[0])
                    .iter()
                    .map(|&x| f(x))
                    .collect(),
                Evaluator::Binary(f) => {
                    let a = d.column(parent_names[0])?;
                    let b = d.column(parent_names[1])?;
                    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
                }
            };
            columns.push((name, values));
            defs.push(def);
        }
    }
    Ok((columns, defs))
}
