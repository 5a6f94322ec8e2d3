//! Columnar numeric datasets: CSV loading, validation, splitting, stats.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::Real;

/// How to treat cells that are empty, non-numeric, or non-finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingPolicy {
    /// Fail the load, naming the offending row and column.
    Reject,
    /// Replace missing cells with the mean of the column's observed values.
    ImputeColumnMean,
}

#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub values: Vec<Real>,
}

/// Immutable numeric feature matrix with a binary label vector.
#[derive(Debug, Clone)]
pub struct Dataset {
    columns: Vec<Column>,
    labels: Vec<u8>,
}

/// Train/valid/test fractions plus the shuffle seed.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub train_fraction: Real,
    pub valid_fraction: Real,
    pub test_fraction: Real,
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fracs = [self.train_fraction, self.valid_fraction, self.test_fraction];
        if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::InvalidConfig(
                "split fractions must lie in [0, 1]".into(),
            ));
        }
        let sum: Real = fracs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub mean: Real,
    pub stdev: Real,
    pub min: Real,
    pub max: Real,
    pub distinct_count: usize,
}

impl Dataset {
    /// Build a dataset from named columns and labels, checking the invariants:
    /// unique non-empty names, equal column lengths, binary labels.
    pub fn new(columns: Vec<(String, Vec<Real>)>, labels: Vec<u8>) -> Result<Self> {
        let n_rows = labels.len();
        let mut seen = std::collections::HashSet::new();
        for (name, values) in &columns {
            if name.is_empty() {
                return Err(Error::InvalidConfig("empty column name".into()));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
            if values.len() != n_rows {
                return Err(Error::LengthMismatch(values.len(), n_rows));
            }
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::InvalidConfig("labels must be 0 or 1".into()));
        }
        Ok(Self {
            columns: columns
                .into_iter()
                .map(|(name, values)| Column { name, values })
                .collect(),
            labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Result<&[Real]> {
        self.column_index(name)
            .map(|i| self.columns[i].values.as_slice())
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column_values(&self, index: usize) -> &[Real] {
        &self.columns[index].values
    }

    /// True when both label classes are present.
    pub fn has_both_classes(&self) -> bool {
        self.labels.iter().any(|&y| y == 0) && self.labels.iter().any(|&y| y == 1)
    }

    /// Load a CSV file with a header row; `label_column` must hold 0/1
    /// integers and is removed from the feature columns. Row numbers in
    /// errors are 1-based over data rows.
    pub fn load_csv(path: &Path, label_column: &str, policy: MissingPolicy) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
        let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
        let label_idx = headers
            .iter()
            .position(|h| h == label_column)
            .ok_or_else(|| Error::UnknownColumn(label_column.to_string()))?;

        let mut columns: Vec<(String, Vec<Real>)> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label_idx)
            .map(|(_, h)| (h.clone(), Vec::new()))
            .collect();
        // Missing cells per feature column, to impute after the pass.
        let mut missing: Vec<Vec<usize>> = vec![Vec::new(); columns.len()];
        let mut labels = Vec::new();

        for (row_i, record) in reader.records().enumerate() {
            let record = record?;
            let row = row_i + 1;
            let mut feat_i = 0;
            for (cell_i, cell) in record.iter().enumerate() {
                if cell_i == label_idx {
                    match cell.trim() {
                        "0" => labels.push(0),
                        "1" => labels.push(1),
                        other => {
                            return Err(Error::NonBinaryLabel {
                                column: label_column.to_string(),
                                row,
                                value: other.to_string(),
                            })
                        }
                    }
                    continue;
                }
                let parsed = cell.trim().parse::<Real>().ok().filter(|v| v.is_finite());
                match parsed {
                    Some(v) => columns[feat_i].1.push(v),
                    None => match policy {
                        MissingPolicy::Reject => {
                            return Err(Error::Parse {
                                row,
                                column: columns[feat_i].0.clone(),
                                reason: format!("cell {:?} is missing or non-numeric", cell),
                            })
                        }
                        MissingPolicy::ImputeColumnMean => {
                            missing[feat_i].push(columns[feat_i].1.len());
                            columns[feat_i].1.push(Real::NAN);
                        }
                    },
                }
                feat_i += 1;
            }
        }

        for (feat_i, rows) in missing.iter().enumerate() {
            if rows.is_empty() {
                continue;
            }
            let (name, values) = &mut columns[feat_i];
            let observed: Vec<Real> = values.iter().copied().filter(|v| v.is_finite()).collect();
            if observed.is_empty() {
                return Err(Error::AllMissingColumn(name.clone()));
            }
            let mean = observed.iter().sum::<Real>() / observed.len() as Real;
            for &r in rows {
                values[r] = mean;
            }
        }

        Dataset::new(columns, labels)
    }

    /// Write the dataset back to CSV (features plus a trailing label column).
    /// Values are formatted with the shortest round-trip representation, so
    /// load → write → load is bit-exact for finite values.
    pub fn write_csv(&self, path: &Path, label_column: &str) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = self.feature_names();
        header.push(label_column.to_string());
        writer.write_record(&header)?;
        for row in 0..self.n_rows() {
            let mut record: Vec<String> = self
                .columns
                .iter()
                .map(|c| format!("{}", c.values[row]))
                .collect();
            record.push(format!("{}", self.labels[row]));
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Deterministic seeded split. Valid and test sizes are floored, the
    /// remainder goes to train.
    pub fn split(&self, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
        spec.validate()?;
        let n = self.n_rows();
        if n < 3 {
            return Err(Error::InvalidConfig(
                "need at least 3 rows to split".into(),
            ));
        }
        let n_valid = (spec.valid_fraction * n as Real).floor() as usize;
        let n_test = (spec.test_fraction * n as Real).floor() as usize;
        let n_train = n - n_valid - n_test;

        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        order.shuffle(&mut rng);

        let train = self.select_rows(&order[..n_train]);
        let valid = self.select_rows(&order[n_train..n_train + n_valid]);
        let test = self.select_rows(&order[n_train + n_valid..]);
        Ok((train, valid, test))
    }

    /// Project the dataset onto the given rows, preserving their order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    values: rows.iter().map(|&r| c.values[r]).collect(),
                })
                .collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }

    /// Project onto a subset of columns by name, preserving the given order.
    pub fn select_columns(&self, names: &[String]) -> Result<Dataset> {
        let mut columns = Vec::with_capacity(names.len());
        for name in names {
            let idx = self
                .column_index(name)
                .ok_or_else(|| Error::UnknownColumn(name.clone()))?;
            columns.push(self.columns[idx].clone());
        }
        Ok(Dataset {
            columns,
            labels: self.labels.clone(),
        })
    }

    /// Mean, population standard deviation, min, max, and exact distinct
    /// count of a column.
    pub fn column_stats(&self, name: &str) -> Result<ColumnStats> {
        let values = self.column(name)?;
        if values.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = values.len() as Real;
        let mean = values.iter().sum::<Real>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<Real>() / n;
        let min = values.iter().copied().fold(Real::INFINITY, Real::min);
        let max = values.iter().copied().fold(Real::NEG_INFINITY, Real::max);
        let mut sorted: Vec<Real> = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let distinct_count = 1 + sorted.windows(2).filter(|w| w[0] != w[1]).count();
        Ok(ColumnStats {
            mean,
            stdev: var.sqrt(),
            min,
            max,
            distinct_count,
        })
    }
}
