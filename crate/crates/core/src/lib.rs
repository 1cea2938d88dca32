//! Toolchain for single-layer Differential Weightless Neural Network (DWN)
//! accelerators that take positional (fixed-point) inputs.
//!
//! The pieces line up with the hardware pipeline:
//!
//! * [`encoder`]: thermometer thresholds (uniform or quantile based) and encoding.
//! * [`quantize`]: `(1, n)` fixed-point conversion and the bit-width search.
//! * [`simulator`]: the bit-exact golden model (LUT layer, popcount, argmax).
//! * [`netlist`]: macro netlist, lowering to k-input LUTs, resource counts.
//! * [`hdl`]: structural Verilog and self-checking testbenches.
//! * [`trainer`]: a small deterministic trainer for synthetic experiments.
//!
//! Models travel as JSON ([`model::load_model`], [`model::save_model`]) and
//! datasets as CSV ([`dataset::load_dataset`]).

pub mod dataset;
pub mod encoder;
pub mod fixed;
pub mod hdl;
pub mod model;
pub mod netlist;
pub mod quantize;
pub mod simulator;
pub mod trainer;

pub use dataset::{Dataset, Normalization, Sample};
pub use fixed::FixedPointFormat;
pub use model::{DwnModel, ModelConfig, ThresholdFormat, TruthTable};
pub use simulator::Prediction;

// Runs the book's Rust snippets as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/thermometer.md")]
    mod thermometer {}
    #[doc = include_str!("../../../book/src/quantization.md")]
    mod quantization {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/netlist.md")]
    mod netlist {}
    #[doc = include_str!("../../../book/src/verilog.md")]
    mod verilog {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
