//! Post-training quantization of thresholds and inputs to `(1, n)` fixed point,
//! and the search for the smallest `n` that still meets a baseline accuracy.

use serde::Serialize;
use thiserror::Error;

use crate::dataset::Dataset;
use crate::fixed::{FixedPointFormat, FormatError};
use crate::model::{DwnModel, ModelError, ThresholdFormat};
use crate::simulator::{accuracy, SimError};

/// Default starting point of the fractional-bit sweep (16-bit inputs).
pub const DEFAULT_N_MAX: u32 = 15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantizeError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{thresholds} distinct thresholds per feature do not fit in (1,{frac_bits}), which has only {capacity} values")]
    Capacity {
        thresholds: usize,
        frac_bits: u32,
        capacity: u64,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error("baseline accuracy must lie in (0, 1], got {0}")]
    Baseline(f64),
}

/// Nearest value of `fmt` to `x`, ties to even, saturating at `[-1, 1 - 2^-n]`.
pub fn quantize_value(x: f64, fmt: FixedPointFormat) -> f64 {
    fmt.value_of(fmt.quantize_mantissa(x))
}

/// Quantizes one ascending threshold row to strictly ascending mantissas.
/// Collisions are resolved by stepping upward, then stepping down from the
/// top of the range if the upward pass overflowed.
pub fn quantize_row(row: &[f64], fmt: FixedPointFormat) -> Result<Vec<i64>, QuantizeError> {
    if row.len() as u64 > fmt.capacity() {
        return Err(QuantizeError::Capacity {
            thresholds: row.len(),
            frac_bits: fmt.frac_bits(),
            capacity: fmt.capacity(),
        });
    }
    let mut m: Vec<i64> = row.iter().map(|&t| fmt.quantize_mantissa(t)).collect();
    for j in 1..m.len() {
        m[j] = m[j].max(m[j - 1] + 1);
    }
    let mut cap = fmt.max_mantissa();
    for v in m.iter_mut().rev() {
        *v = (*v).min(cap);
        cap = *v - 1;
    }
    debug_assert!(m.first().is_none_or(|&v| v >= fmt.min_mantissa()));
    Ok(m)
}

/// Re-expresses every threshold in `(1, n)`. The result has
/// `threshold_format = fixed(n)`; connections and tables are unchanged.
pub fn quantize_model(model: &DwnModel, frac_bits: u32) -> Result<DwnModel, QuantizeError> {
    let fmt = FixedPointFormat::new(frac_bits)?;
    let mut parts = model.parts().clone();
    parts.thresholds = model
        .thresholds()
        .iter()
        .map(|row| {
            quantize_row(row, fmt).map(|ms| ms.into_iter().map(|m| fmt.value_of(m)).collect())
        })
        .collect::<Result<_, _>>()?;
    parts.threshold_format = ThresholdFormat::Fixed(fmt);
    Ok(DwnModel::new(parts)?)
}

/// Quantizes every feature value, modelling `n + 1`-bit inputs.
pub fn quantize_dataset(data: &Dataset, frac_bits: u32) -> Result<Dataset, QuantizeError> {
    let fmt = FixedPointFormat::new(frac_bits)?;
    Ok(data.map_features(|x| quantize_value(x, fmt)))
}

/// Accuracy with both thresholds and inputs quantized to `(1, n)`.
pub fn quantized_accuracy(
    model: &DwnModel,
    data: &Dataset,
    frac_bits: u32,
) -> Result<f64, QuantizeError> {
    let q = quantize_model(model, frac_bits)?;
    let d = quantize_dataset(data, frac_bits)?;
    Ok(accuracy(&q, &d)?)
}

/// One point of the sweep. `accuracy` is `None` when the format could not
/// hold the model's thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PtqStep {
    pub frac_bits: u32,
    pub accuracy: Option<f64>,
}

impl PtqStep {
    pub fn meets(&self, baseline: f64) -> bool {
        self.accuracy.is_some_and(|a| a >= baseline)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum PtqOutcome {
    Feasible { frac_bits: u32, accuracy: f64 },
    NoFeasibleWidth,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PtqResult {
    pub baseline: f64,
    pub outcome: PtqOutcome,
    /// Evaluated points from `n_max` downward, ending at the first failure
    /// (or at `n = 1`).
    pub trace: Vec<PtqStep>,
}

impl PtqResult {
    pub fn chosen_frac_bits(&self) -> Option<u32> {
        match self.outcome {
            PtqOutcome::Feasible { frac_bits, .. } => Some(frac_bits),
            PtqOutcome::NoFeasibleWidth => None,
        }
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("frac_bits,width,accuracy,meets_baseline\n");
        for s in &self.trace {
            let acc = s.accuracy.map(|a| a.to_string()).unwrap_or_else(|| "capacity".into());
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.frac_bits,
                s.frac_bits + 1,
                acc,
                s.meets(self.baseline)
            ));
        }
        out
    }
}

/// Lowers `n` from `n_max` until the quantized model drops below `baseline`
/// and returns the last `n` that met it. A capacity error counts as a
/// failure at that `n`.
pub fn ptq_search(
    model: &DwnModel,
    data: &Dataset,
    baseline: f64,
    n_max: u32,
) -> Result<PtqResult, QuantizeError> {
    if !(baseline > 0.0 && baseline <= 1.0) {
        return Err(QuantizeError::Baseline(baseline));
    }
    FixedPointFormat::new(n_max)?;
    if data.is_empty() {
        return Err(SimError::EmptyDataset.into());
    }
    let mut trace = Vec::new();
    let mut best: Option<(u32, f64)> = None;
    for n in (1..=n_max).rev() {
        let step = match quantized_accuracy(model, data, n) {
            Ok(a) => PtqStep { frac_bits: n, accuracy: Some(a) },
            Err(QuantizeError::Capacity { .. }) => PtqStep { frac_bits: n, accuracy: None },
            Err(e) => return Err(e),
        };
        log::debug!("ptq n={n} accuracy={:?}", step.accuracy);
        trace.push(step);
        match step.accuracy {
            Some(a) if a >= baseline => best = Some((n, a)),
            _ => break,
        }
    }
    let outcome = match best {
        Some((frac_bits, accuracy)) => PtqOutcome::Feasible { frac_bits, accuracy },
        None => PtqOutcome::NoFeasibleWidth,
    };
    Ok(PtqResult {
        baseline,
        outcome,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelConfig, ModelParts, TruthTable};

    fn fmt(n: u32) -> FixedPointFormat {
        FixedPointFormat::new(n).unwrap()
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(quantize_value(0.3, fmt(2)), 0.25);
        assert_eq!(quantize_value(1.0, fmt(8)), 0.99609375);
        assert_eq!(quantize_value(0.375, fmt(2)), 0.5);
        assert_eq!(quantize_value(0.125, fmt(2)), 0.0);
        assert_eq!(quantize_value(-1.0, fmt(4)), -1.0);
        assert_eq!(quantize_value(-7.0, fmt(4)), -1.0);
    }

    fn model_with(t: usize, row: impl Fn(usize) -> f64) -> DwnModel {
        DwnModel::new(ModelParts {
            config: ModelConfig {
                name: "q".into(),
                num_features: 1,
                bits_per_feature: t,
                lut_arity: 2,
                num_classes: 1,
                luts_per_class: 1,
            },
            threshold_format: ThresholdFormat::Real,
            thresholds: vec![(0..t).map(row).collect()],
            connections: vec![vec![0, 0]],
            truth_tables: vec![TruthTable::constant(2, false)],
            normalization: None,
        })
        .unwrap()
    }

    #[test]
    fn capacity_bound_for_two_hundred_thresholds() {
        let m = model_with(200, |j| -1.0 + j as f64 * 0.009);
        // 2^(7+1) = 256 >= 200, 2^(6+1) = 128 < 200
        assert!(quantize_model(&m, 7).is_ok());
        assert!(matches!(
            quantize_model(&m, 6),
            Err(QuantizeError::Capacity { thresholds: 200, frac_bits: 6, capacity: 128 })
        ));
    }

    #[test]
    fn fine_quantization_moves_thresholds_by_at_most_half_a_step() {
        let m = model_with(50, |j| -0.9 + j as f64 * 0.0371);
        let q = quantize_model(&m, 20).unwrap();
        for (a, b) in m.thresholds()[0].iter().zip(&q.thresholds()[0]) {
            assert!((a - b).abs() <= 2f64.powi(-21));
        }
    }

    #[test]
    fn requantizing_at_the_same_width_is_identity() {
        let m = model_with(30, |j| -0.95 + j as f64 * 0.061);
        let q = quantize_model(&m, 5).unwrap();
        assert_eq!(quantize_model(&q, 5).unwrap(), q);
    }

    #[test]
    fn collisions_are_spread_and_kept_in_range() {
        let f = fmt(2);
        // eight thresholds all near the top of a format with exactly eight values
        let row: Vec<f64> = (0..8).map(|j| 0.9 + j as f64 * 1e-3).collect();
        let m = quantize_row(&row, f).unwrap();
        assert_eq!(m, (-4..=3).collect::<Vec<_>>());
        let row = [0.1, 0.11, 0.12];
        assert_eq!(quantize_row(&row, f).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn dataset_quantization_is_idempotent_and_keeps_minus_one() {
        let d = Dataset::new(
            2,
            vec![crate::dataset::Sample { features: vec![-1.0, 0.123456], label: 0 }],
        )
        .unwrap();
        let q = quantize_dataset(&d, 5).unwrap();
        assert_eq!(q.samples()[0].features[0], -1.0);
        assert_eq!(quantize_dataset(&q, 5).unwrap(), q);
        assert_eq!(fmt(5).width(), 6);
    }

    #[test]
    fn constant_accuracy_model_bottoms_out_at_capacity() {
        // one class: every prediction is class 0, accuracy is 1.0 for every n
        let m = model_with(10, |j| -0.5 + j as f64 * 0.1);
        let d = Dataset::new(
            1,
            vec![crate::dataset::Sample { features: vec![0.2], label: 0 }],
        )
        .unwrap();
        let r = ptq_search(&m, &d, 1.0, 8).unwrap();
        // 10 thresholds need 2^(n+1) >= 10, so n = 3 is the smallest usable width
        assert_eq!(r.chosen_frac_bits(), Some(3));
        assert_eq!(r.trace.last().unwrap(), &PtqStep { frac_bits: 2, accuracy: None });
        assert_eq!(r.trace.len(), 7);
    }

    #[test]
    fn bad_arguments_are_rejected() {
        let m = model_with(3, |j| j as f64 * 0.1);
        let d = Dataset::new(1, vec![]).unwrap();
        assert!(matches!(ptq_search(&m, &d, 0.0, 8), Err(QuantizeError::Baseline(_))));
        assert!(matches!(ptq_search(&m, &d, 0.5, 0), Err(QuantizeError::Format(_))));
        assert!(ptq_search(&m, &d, 0.5, 8).is_err());
    }
}
