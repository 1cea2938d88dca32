//! Bit-exact golden model of inference: encode, evaluate the LUT layer,
//! count ones per class, then pick the best class.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::Dataset;
use crate::encoder::{encode_mantissas, encode_sample, EncodeError};
use crate::model::{DwnModel, TruthTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("encoded input has {found} bits, model expects {expected}")]
    EncodedWidth { expected: usize, found: usize },
    #[error("feature {feature} = {value} is not representable in the model's (1,{frac_bits}) format; quantize inputs first")]
    Unquantized {
        feature: usize,
        value: f64,
        frac_bits: u32,
    },
    #[error("model has real-valued thresholds; integer evaluation needs a fixed-point model")]
    RealModel,
    #[error("sample {sample} has label {label} but the model only has {classes} classes")]
    LabelOutOfRange {
        sample: usize,
        label: usize,
        classes: usize,
    },
    #[error("accuracy of an empty dataset is undefined")]
    EmptyDataset,
}

/// LUT output for `inputs`, where `inputs[i]` is address bit `i`.
pub fn lut_eval(table: TruthTable, inputs: &[bool]) -> bool {
    debug_assert_eq!(inputs.len(), table.arity());
    table.get(address(inputs))
}

pub fn address(inputs: &[bool]) -> usize {
    inputs
        .iter()
        .enumerate()
        .fold(0, |a, (i, &b)| a | (usize::from(b) << i))
}

/// Number of firing LUTs per class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassScores {
    counts: Vec<u32>,
}

impl ClassScores {
    /// `None` when `counts` is empty.
    pub fn new(counts: Vec<u32>) -> Option<Self> {
        (!counts.is_empty()).then_some(Self { counts })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }
}

/// Winning class and its score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Prediction {
    pub class: usize,
    pub score: u32,
}

/// Pairwise reduction matching the hardware argmax tree: adjacent operands
/// are combined level by level, and an unpaired last operand is promoted
/// unchanged. The left operand of every combine covers lower indices.
pub fn tree_reduce<T>(mut level: Vec<T>, mut combine: impl FnMut(T, T) -> T) -> Option<T> {
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        level = next;
    }
    level.into_iter().next()
}

/// Index comparator: keeps the larger score, the left (lower-index) operand on ties.
pub fn index_compare(a: Prediction, b: Prediction) -> Prediction {
    if a.score >= b.score {
        a
    } else {
        b
    }
}

pub fn argmax(scores: &ClassScores) -> Prediction {
    let leaves = scores
        .counts
        .iter()
        .enumerate()
        .map(|(class, &score)| Prediction { class, score })
        .collect();
    tree_reduce(leaves, index_compare).expect("ClassScores is never empty")
}

pub fn class_scores(model: &DwnModel, encoded: &[bool]) -> Result<ClassScores, SimError> {
    if encoded.len() != model.encoded_width() {
        return Err(SimError::EncodedWidth {
            expected: model.encoded_width(),
            found: encoded.len(),
        });
    }
    let mut counts = vec![0u32; model.num_classes()];
    let mut inputs = [false; crate::model::MAX_LUT_ARITY];
    for (i, (conn, &table)) in model
        .connections()
        .iter()
        .zip(model.truth_tables())
        .enumerate()
    {
        let k = conn.len();
        for (slot, &bit) in inputs.iter_mut().zip(conn) {
            *slot = encoded[bit];
        }
        if lut_eval(table, &inputs[..k]) {
            counts[model.class_of_lut(i)] += 1;
        }
    }
    Ok(ClassScores { counts })
}

/// Full inference on real-valued features. Fixed-point models only accept
/// inputs that are already representable in their format.
pub fn infer(model: &DwnModel, sample: &[f64]) -> Result<Prediction, SimError> {
    if let Some(fmt) = model.threshold_format().fixed() {
        if let Some((feature, &value)) = sample
            .iter()
            .enumerate()
            .find(|(_, &x)| fmt.mantissa_of(x).is_none())
        {
            return Err(SimError::Unquantized {
                feature,
                value,
                frac_bits: fmt.frac_bits(),
            });
        }
    }
    let encoded = encode_sample(model, sample)?;
    Ok(argmax(&class_scores(model, &encoded)?))
}

/// Inference of a fixed-point model on input mantissas, using integer
/// comparisons only.
pub fn infer_mantissas(model: &DwnModel, words: &[i64]) -> Result<Prediction, SimError> {
    let thresholds = model.threshold_mantissas().ok_or(SimError::RealModel)?;
    if words.len() != model.num_features() {
        return Err(EncodeError::SampleLength {
            expected: model.num_features(),
            found: words.len(),
        }
        .into());
    }
    let encoded = encode_mantissas(&thresholds, words);
    Ok(argmax(&class_scores(model, &encoded)?))
}

/// Predictions for every sample, in order.
pub fn predict_all(model: &DwnModel, data: &Dataset) -> Result<Vec<Prediction>, SimError> {
    data.samples()
        .par_iter()
        .map(|s| infer(model, &s.features))
        .collect()
}

/// Fraction of samples whose predicted class equals the label.
pub fn accuracy(model: &DwnModel, data: &Dataset) -> Result<f64, SimError> {
    if data.is_empty() {
        return Err(SimError::EmptyDataset);
    }
    if let Some((sample, s)) = data
        .samples()
        .iter()
        .enumerate()
        .find(|(_, s)| s.label >= model.num_classes())
    {
        return Err(SimError::LabelOutOfRange {
            sample,
            label: s.label,
            classes: model.num_classes(),
        });
    }
    let correct = data
        .samples()
        .par_iter()
        .map(|s| infer(model, &s.features).map(|p| usize::from(p.class == s.label)))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(correct as f64 / data.len() as f64)
}
