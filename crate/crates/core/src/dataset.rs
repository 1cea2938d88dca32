//! Labelled feature matrices, CSV loading and `[-1, 1)` normalization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: expected {expected} columns ({features} features + label), found {found}")]
    Ragged {
        line: usize,
        expected: usize,
        features: usize,
        found: usize,
    },
    #[error("line {line}, column {column}: `{cell}` is not a number")]
    NonNumeric {
        line: usize,
        column: usize,
        cell: String,
    },
    #[error("line {line}: label `{cell}` is not a non-negative integer")]
    BadLabel { line: usize, cell: String },
    #[error("line {line}: feature value {value} in column {column} is not finite")]
    NonFinite {
        line: usize,
        column: usize,
        value: f64,
    },
    #[error("dataset is empty")]
    Empty,
    #[error("num_features must be at least 1")]
    NoFeatures,
    #[error("sample has {found} features, dataset expects {expected}")]
    FeatureCount { expected: usize, found: usize },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
}

/// Relative headroom added to each feature's range so that the training
/// maximum lands in `[1 - 2^-20, 1)` instead of on 1.
pub const RANGE_HEADROOM: f64 = 1.0 / (1u64 << 21) as f64;

/// Per-feature `(min, max)` statistics of the split the mapping was fitted on.
///
/// A value is mapped by `x -> -1 + 2 (x - min) / ((max - min)(1 + 2^-21))`
/// after clamping `x` to `[min, max]`. Constant features map to `0.0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalization {
    /// Fits min/max statistics on `data`. Warns once per constant feature.
    pub fn fit(data: &Dataset) -> Result<Self, DatasetError> {
        if data.is_empty() {
            return Err(DatasetError::Empty);
        }
        let f = data.num_features();
        let mut min = vec![f64::INFINITY; f];
        let mut max = vec![f64::NEG_INFINITY; f];
        for s in data.samples() {
            for (i, &x) in s.features.iter().enumerate() {
                min[i] = min[i].min(x);
                max[i] = max[i].max(x);
            }
        }
        for i in 0..f {
            if min[i] == max[i] {
                log::warn!("feature {i} is constant ({}); it normalizes to 0.0", min[i]);
            }
        }
        Ok(Self { min, max })
    }

    pub fn num_features(&self) -> usize {
        self.min.len()
    }

    pub fn apply(&self, feature: usize, x: f64) -> f64 {
        let (lo, hi) = (self.min[feature], self.max[feature]);
        let range = hi - lo;
        if range <= 0.0 {
            return 0.0;
        }
        let x = x.clamp(lo, hi);
        let y = -1.0 + 2.0 * (x - lo) / (range + range * RANGE_HEADROOM);
        y.clamp(-1.0, 1.0f64.next_down())
    }

    pub fn apply_sample(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .enumerate()
            .map(|(i, &x)| self.apply(i, x))
            .collect()
    }

    /// Maps every sample of `data` with these statistics and records them.
    pub fn apply_dataset(&self, data: &Dataset) -> Result<Dataset, DatasetError> {
        if data.num_features() != self.num_features() {
            return Err(DatasetError::FeatureCount {
                expected: self.num_features(),
                found: data.num_features(),
            });
        }
        let samples = data
            .samples()
            .iter()
            .map(|s| Sample {
                features: self.apply_sample(&s.features),
                label: s.label,
            })
            .collect();
        Ok(Dataset {
            num_features: data.num_features,
            samples,
            normalization: Some(self.clone()),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    num_features: usize,
    samples: Vec<Sample>,
    normalization: Option<Normalization>,
}

impl Dataset {
    pub fn new(num_features: usize, samples: Vec<Sample>) -> Result<Self, DatasetError> {
        if num_features == 0 {
            return Err(DatasetError::NoFeatures);
        }
        if let Some(s) = samples.iter().find(|s| s.features.len() != num_features) {
            return Err(DatasetError::FeatureCount {
                expected: num_features,
                found: s.features.len(),
            });
        }
        Ok(Self {
            num_features,
            samples,
            normalization: None,
        })
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn normalization(&self) -> Option<&Normalization> {
        self.normalization.as_ref()
    }

    /// One more than the largest label present, or 0 when empty.
    pub fn num_classes_seen(&self) -> usize {
        self.samples.iter().map(|s| s.label + 1).max().unwrap_or(0)
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.features[feature]).collect()
    }

    /// Same samples with every feature value passed through `f`.
    pub fn map_features(&self, mut f: impl FnMut(f64) -> f64) -> Dataset {
        let samples = self
            .samples
            .iter()
            .map(|s| Sample {
                features: s.features.iter().map(|&x| f(x)).collect(),
                label: s.label,
            })
            .collect();
        Dataset {
            num_features: self.num_features,
            samples,
            normalization: self.normalization.clone(),
        }
    }
}

/// Parses a headerless (unless `skip_header`) CSV of `num_features` numeric
/// columns followed by an integer label. Values are kept raw.
pub fn load_dataset(
    text: &str,
    num_features: usize,
    skip_header: bool,
) -> Result<Dataset, DatasetError> {
    if num_features == 0 {
        return Err(DatasetError::NoFeatures);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(skip_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != num_features + 1 {
            return Err(DatasetError::Ragged {
                line,
                expected: num_features + 1,
                features: num_features,
                found: record.len(),
            });
        }
        let mut features = Vec::with_capacity(num_features);
        for (column, cell) in record.iter().take(num_features).enumerate() {
            let value: f64 = cell.parse().map_err(|_| DatasetError::NonNumeric {
                line,
                column,
                cell: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(DatasetError::NonFinite {
                    line,
                    column,
                    value,
                });
            }
            features.push(value);
        }
        let cell = &record[num_features];
        let label: usize = cell.parse().map_err(|_| DatasetError::BadLabel {
            line,
            cell: cell.to_string(),
        })?;
        samples.push(Sample { features, label });
    }
    Dataset::new(num_features, samples)
}

/// Number of feature columns in the first data row (total columns minus the label).
pub fn infer_num_features(text: &str, skip_header: bool) -> Option<usize> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .nth(usize::from(skip_header))
        .map(|l| l.split(',').count().saturating_sub(1))
        .filter(|&n| n > 0)
}

/// Writes `data` back out in the loader's CSV layout.
pub fn dataset_to_csv(data: &Dataset) -> String {
    let mut out = String::new();
    for s in data.samples() {
        for x in &s.features {
            out.push_str(&format!("{x},"));
        }
        out.push_str(&format!("{}\n", s.label));
    }
    out
}

/// Fits normalization statistics on `data` and maps it into `[-1, 1)`.
pub fn normalize_dataset(data: &Dataset) -> Result<Dataset, DatasetError> {
    Normalization::fit(data)?.apply_dataset(data)
}
