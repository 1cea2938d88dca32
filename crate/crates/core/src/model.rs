//! The inference-time description of a single-layer DWN and its JSON form.
//!
//! A model has `F` features, each thermometer-encoded against `T` ascending
//! thresholds. The encoder output is flattened so that threshold `j` of
//! feature `f` lands on bit `f * T + j`. The LUT layer holds
//! `L = C * luts_per_class` LUTs of arity `k`; LUT `i` reads the encoder bits
//! named by `connections[i]` (column 0 is the least-significant address bit)
//! and votes for class `i / luts_per_class`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Normalization;
use crate::fixed::{FixedPointFormat, FormatError};

pub const MIN_LUT_ARITY: usize = 2;
pub const MAX_LUT_ARITY: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("invalid `{field}`: {reason}")]
    Field { field: &'static str, reason: String },
    #[error("`{field}` has {found} entries, expected {expected}")]
    Shape {
        field: String,
        expected: usize,
        found: usize,
    },
    #[error("thresholds not strictly ascending: thresholds[{feature}][{index}] = {value} <= previous")]
    NotAscending {
        feature: usize,
        index: usize,
        value: f64,
    },
    #[error("threshold not finite at thresholds[{feature}][{index}]")]
    NonFinite { feature: usize, index: usize },
    #[error(
        "threshold thresholds[{feature}][{index}] = {value} is not representable in (1,{frac_bits})"
    )]
    NotRepresentable {
        feature: usize,
        index: usize,
        value: f64,
        frac_bits: u32,
    },
    #[error("connection index out of range: connections[{lut}][{input}] = {index}, limit {limit}")]
    ConnectionOutOfRange {
        lut: usize,
        input: usize,
        index: usize,
        limit: usize,
    },
    #[error("truth_tables[{lut}]: {reason}")]
    TruthTable { lut: usize, reason: String },
    #[error(transparent)]
    Format(#[from] FormatError),
}

/// A `2^k`-entry truth table. Bit `a` of `bits` is the output for address `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TruthTable {
    arity: u8,
    bits: u64,
}

impl TruthTable {
    /// `arity` must be in `1..=6` and `bits` must fit in `2^arity` bits.
    pub fn new(arity: usize, bits: u64) -> Option<Self> {
        if !(1..=MAX_LUT_ARITY).contains(&arity) {
            return None;
        }
        let t = Self {
            arity: arity as u8,
            bits,
        };
        (bits & !t.mask() == 0).then_some(t)
    }

    pub fn constant(arity: usize, value: bool) -> Self {
        let mut t = Self::new(arity, 0).expect("arity in range");
        if value {
            t.bits = t.mask();
        }
        t
    }

    /// Builds the table by evaluating `f` on every address.
    pub fn from_fn(arity: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut t = Self::new(arity, 0).expect("arity in range");
        for a in 0..t.len() {
            if f(a) {
                t.bits |= 1 << a;
            }
        }
        t
    }

    fn mask(self) -> u64 {
        if self.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.len()) - 1
        }
    }

    pub fn arity(self) -> usize {
        self.arity as usize
    }

    /// Number of entries, `2^arity`.
    pub fn len(self) -> usize {
        1 << self.arity
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn get(self, address: usize) -> bool {
        (self.bits >> address) & 1 == 1
    }

    pub fn with_flipped(self, address: usize) -> Self {
        Self {
            arity: self.arity,
            bits: self.bits ^ (1 << address),
        }
    }

    /// Zero-padded lowercase hex, `max(1, 2^arity / 4)` digits.
    pub fn to_hex(self) -> String {
        let digits = (self.len() / 4).max(1);
        format!("{:0digits$x}", self.bits)
    }

    pub fn from_hex(arity: usize, text: &str) -> Result<Self, String> {
        let digits = text.strip_prefix("0x").unwrap_or(text);
        if digits.is_empty() {
            return Err("empty hex string".into());
        }
        let bits = u64::from_str_radix(digits, 16).map_err(|e| format!("`{text}`: {e}"))?;
        Self::new(arity, bits)
            .ok_or_else(|| format!("`{text}` does not fit in a {}-bit table", 1usize << arity))
    }
}

/// How thresholds are represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdFormat {
    #[default]
    Real,
    Fixed(FixedPointFormat),
}

impl ThresholdFormat {
    pub fn fixed(self) -> Option<FixedPointFormat> {
        match self {
            Self::Real => None,
            Self::Fixed(f) => Some(f),
        }
    }
}

/// Named shape of a model: features, thresholds per feature, LUT arity,
/// classes and LUTs per class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    pub num_features: usize,
    pub bits_per_feature: usize,
    pub lut_arity: usize,
    pub num_classes: usize,
    pub luts_per_class: usize,
}

/// Preset names recognised by [`ModelConfig::preset`].
pub const PRESETS: [&str; 4] = ["sm-10", "sm-50", "md-360", "lg-2400"];

impl ModelConfig {
    /// JSC-shaped presets: 16 features, 200 thresholds each, 6-input LUTs,
    /// 5 classes. The suffix is the total LUT count.
    pub fn preset(name: &str) -> Option<Self> {
        let luts: usize = match name {
            "sm-10" => 10,
            "sm-50" => 50,
            "md-360" => 360,
            "lg-2400" => 2400,
            _ => return None,
        };
        Some(Self {
            name: name.to_string(),
            num_features: 16,
            bits_per_feature: 200,
            lut_arity: 6,
            num_classes: 5,
            luts_per_class: luts / 5,
        })
    }

    pub fn num_luts(&self) -> usize {
        self.num_classes * self.luts_per_class
    }

    pub fn encoded_width(&self) -> usize {
        self.num_features * self.bits_per_feature
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = |field: &'static str, v: usize| {
            if v == 0 {
                Err(ModelError::Field {
                    field,
                    reason: "must be at least 1".into(),
                })
            } else {
                Ok(())
            }
        };
        positive("num_features", self.num_features)?;
        positive("bits_per_feature", self.bits_per_feature)?;
        positive("num_classes", self.num_classes)?;
        positive("luts_per_class", self.luts_per_class)?;
        if !(MIN_LUT_ARITY..=MAX_LUT_ARITY).contains(&self.lut_arity) {
            return Err(ModelError::Field {
                field: "lut_arity",
                reason: format!(
                    "{} is outside {MIN_LUT_ARITY}..={MAX_LUT_ARITY}",
                    self.lut_arity
                ),
            });
        }
        Ok(())
    }
}

/// Owned, unvalidated model contents. Turn into a [`DwnModel`] with
/// [`DwnModel::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParts {
    pub config: ModelConfig,
    pub threshold_format: ThresholdFormat,
    pub thresholds: Vec<Vec<f64>>,
    pub connections: Vec<Vec<usize>>,
    pub truth_tables: Vec<TruthTable>,
    pub normalization: Option<Normalization>,
}

/// A validated single-LUT-layer DWN. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct DwnModel {
    parts: ModelParts,
}

impl DwnModel {
    pub fn new(parts: ModelParts) -> Result<Self, ModelError> {
        validate(&parts)?;
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &ModelParts {
        &self.parts
    }

    pub fn into_parts(self) -> ModelParts {
        self.parts
    }

    pub fn config(&self) -> &ModelConfig {
        &self.parts.config
    }

    pub fn name(&self) -> &str {
        &self.parts.config.name
    }

    pub fn num_features(&self) -> usize {
        self.parts.config.num_features
    }

    pub fn bits_per_feature(&self) -> usize {
        self.parts.config.bits_per_feature
    }

    pub fn lut_arity(&self) -> usize {
        self.parts.config.lut_arity
    }

    pub fn num_classes(&self) -> usize {
        self.parts.config.num_classes
    }

    pub fn luts_per_class(&self) -> usize {
        self.parts.config.luts_per_class
    }

    pub fn num_luts(&self) -> usize {
        self.parts.config.num_luts()
    }

    /// Width of the flattened encoder output, `F * T`.
    pub fn encoded_width(&self) -> usize {
        self.parts.config.encoded_width()
    }

    /// Flattened encoder bit for threshold `j` of feature `f`.
    pub fn bit_index(&self, feature: usize, threshold: usize) -> usize {
        feature * self.bits_per_feature() + threshold
    }

    pub fn class_of_lut(&self, lut: usize) -> usize {
        lut / self.luts_per_class()
    }

    pub fn threshold_format(&self) -> ThresholdFormat {
        self.parts.threshold_format
    }

    pub fn thresholds(&self) -> &[Vec<f64>] {
        &self.parts.thresholds
    }

    pub fn connections(&self) -> &[Vec<usize>] {
        &self.parts.connections
    }

    pub fn truth_tables(&self) -> &[TruthTable] {
        &self.parts.truth_tables
    }

    pub fn normalization(&self) -> Option<&Normalization> {
        self.parts.normalization.as_ref()
    }

    /// Threshold mantissas, when the model is in fixed-point form.
    pub fn threshold_mantissas(&self) -> Option<Vec<Vec<i64>>> {
        let fmt = self.threshold_format().fixed()?;
        Some(
            self.thresholds()
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&t| fmt.mantissa_of(t).expect("validated as representable"))
                        .collect()
                })
                .collect(),
        )
    }
}

fn validate(p: &ModelParts) -> Result<(), ModelError> {
    let c = &p.config;
    c.validate()?;
    if p.thresholds.len() != c.num_features {
        return Err(ModelError::Shape {
            field: "thresholds".into(),
            expected: c.num_features,
            found: p.thresholds.len(),
        });
    }
    for (f, row) in p.thresholds.iter().enumerate() {
        if row.len() != c.bits_per_feature {
            return Err(ModelError::Shape {
                field: format!("thresholds[{f}]"),
                expected: c.bits_per_feature,
                found: row.len(),
            });
        }
        for (j, &t) in row.iter().enumerate() {
            if !t.is_finite() {
                return Err(ModelError::NonFinite { feature: f, index: j });
            }
            if j > 0 && t <= row[j - 1] {
                return Err(ModelError::NotAscending {
                    feature: f,
                    index: j,
                    value: t,
                });
            }
            if let ThresholdFormat::Fixed(fmt) = p.threshold_format {
                if fmt.mantissa_of(t).is_none() {
                    return Err(ModelError::NotRepresentable {
                        feature: f,
                        index: j,
                        value: t,
                        frac_bits: fmt.frac_bits(),
                    });
                }
            }
        }
    }
    let luts = c.num_luts();
    if p.connections.len() != luts {
        return Err(ModelError::Shape {
            field: "connections".into(),
            expected: luts,
            found: p.connections.len(),
        });
    }
    let limit = c.encoded_width();
    for (i, row) in p.connections.iter().enumerate() {
        if row.len() != c.lut_arity {
            return Err(ModelError::Shape {
                field: format!("connections[{i}]"),
                expected: c.lut_arity,
                found: row.len(),
            });
        }
        if let Some((input, &index)) = row.iter().enumerate().find(|(_, &x)| x >= limit) {
            return Err(ModelError::ConnectionOutOfRange {
                lut: i,
                input,
                index,
                limit,
            });
        }
    }
    if p.truth_tables.len() != luts {
        return Err(ModelError::Shape {
            field: "truth_tables".into(),
            expected: luts,
            found: p.truth_tables.len(),
        });
    }
    if let Some((i, t)) = p
        .truth_tables
        .iter()
        .enumerate()
        .find(|(_, t)| t.arity() != c.lut_arity)
    {
        return Err(ModelError::TruthTable {
            lut: i,
            reason: format!("arity {} does not match lut_arity {}", t.arity(), c.lut_arity),
        });
    }
    if let Some(n) = &p.normalization {
        if n.min.len() != c.num_features || n.max.len() != c.num_features {
            return Err(ModelError::Shape {
                field: "normalization".into(),
                expected: c.num_features,
                found: n.min.len().min(n.max.len()),
            });
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FormatMode {
    Real,
    Fixed,
}

#[derive(Serialize, Deserialize)]
struct FormatDocument {
    mode: FormatMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frac_bits: Option<u32>,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    name: String,
    num_features: usize,
    bits_per_feature: usize,
    lut_arity: usize,
    num_classes: usize,
    luts_per_class: usize,
    threshold_format: FormatDocument,
    thresholds: Vec<Vec<f64>>,
    connections: Vec<Vec<usize>>,
    truth_tables: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normalization: Option<Normalization>,
}

/// Parses and validates a model JSON document.
pub fn load_model(text: &str) -> Result<DwnModel, ModelError> {
    let doc: ModelDocument =
        serde_json::from_str(text).map_err(|e| ModelError::Schema(e.to_string()))?;
    let threshold_format = match (doc.threshold_format.mode, doc.threshold_format.frac_bits) {
        (FormatMode::Real, _) => ThresholdFormat::Real,
        (FormatMode::Fixed, Some(n)) => ThresholdFormat::Fixed(FixedPointFormat::new(n)?),
        (FormatMode::Fixed, None) => {
            return Err(ModelError::Schema(
                "threshold_format.frac_bits is required when mode is \"fixed\"".into(),
            ))
        }
    };
    let config = ModelConfig {
        name: doc.name,
        num_features: doc.num_features,
        bits_per_feature: doc.bits_per_feature,
        lut_arity: doc.lut_arity,
        num_classes: doc.num_classes,
        luts_per_class: doc.luts_per_class,
    };
    config.validate()?;
    let truth_tables = doc
        .truth_tables
        .iter()
        .enumerate()
        .map(|(lut, s)| {
            TruthTable::from_hex(config.lut_arity, s)
                .map_err(|reason| ModelError::TruthTable { lut, reason })
        })
        .collect::<Result<Vec<_>, _>>()?;
    DwnModel::new(ModelParts {
        config,
        threshold_format,
        thresholds: doc.thresholds,
        connections: doc.connections,
        truth_tables,
        normalization: doc.normalization,
    })
}

/// Serializes a model to pretty-printed JSON. Thresholds round-trip exactly.
pub fn save_model(model: &DwnModel) -> String {
    let p = model.parts();
    let threshold_format = match p.threshold_format {
        ThresholdFormat::Real => FormatDocument {
            mode: FormatMode::Real,
            frac_bits: None,
        },
        ThresholdFormat::Fixed(f) => FormatDocument {
            mode: FormatMode::Fixed,
            frac_bits: Some(f.frac_bits()),
        },
    };
    let doc = ModelDocument {
        name: p.config.name.clone(),
        num_features: p.config.num_features,
        bits_per_feature: p.config.bits_per_feature,
        lut_arity: p.config.lut_arity,
        num_classes: p.config.num_classes,
        luts_per_class: p.config.luts_per_class,
        threshold_format,
        thresholds: p.thresholds.clone(),
        connections: p.connections.clone(),
        truth_tables: p.truth_tables.iter().map(|t| t.to_hex()).collect(),
        normalization: p.normalization.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("model documents always serialize")
}
