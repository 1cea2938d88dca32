use serde::Serialize;

use super::lower::{ge_const_nodes, idxcmp_nodes};
use super::{count_bits, index_bits, popcount_nodes, Component, LutNetlist};
use crate::model::{DwnModel, ModelConfig};

/// First line of every breakdown file.
pub const BREAKDOWN_NOTE: &str = "# LUT-node counts of this tool's technology mapping (mapped estimate); \
not vendor synthesis results, comparable to post-synthesis counts only in trend";

pub const BREAKDOWN_HEADER: &str = "model,width,encoder,lut_layer,popcount,argmax,total";

/// LUT nodes per accelerator component at one input width.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentBreakdown {
    pub model: String,
    pub width: u32,
    pub encoder: usize,
    pub lut_layer: usize,
    pub popcount: usize,
    pub argmax: usize,
    pub total: usize,
}

impl ComponentBreakdown {
    fn from_parts(model: &str, width: u32, [encoder, lut_layer, popcount, argmax]: [usize; 4]) -> Self {
        Self {
            model: model.to_string(),
            width,
            encoder,
            lut_layer,
            popcount,
            argmax,
            total: encoder + lut_layer + popcount + argmax,
        }
    }

    /// Counts the mapping would produce for any model of this shape at
    /// `width`-bit inputs, without building a netlist. Node counts do not
    /// depend on threshold values or table contents.
    pub fn estimate(config: &ModelConfig, width: u32, lut_size: usize) -> Self {
        let p = count_bits(config.luts_per_class);
        let q = index_bits(config.num_classes);
        Self::from_parts(
            &config.name,
            width,
            [
                config.encoded_width() * ge_const_nodes(width as usize, lut_size),
                config.num_luts(),
                config.num_classes * popcount_nodes(config.luts_per_class, lut_size),
                (config.num_classes - 1) * idxcmp_nodes(p, q, lut_size),
            ],
        )
    }

    /// Share of the total taken by the encoder.
    pub fn encoder_share(&self) -> f64 {
        self.encoder as f64 / self.total as f64
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.model, self.width, self.encoder, self.lut_layer, self.popcount, self.argmax, self.total
        )
    }
}

/// Counts the LUT nodes of `net` per component label.
pub fn resource_report(net: &LutNetlist, model: &DwnModel) -> ComponentBreakdown {
    ComponentBreakdown::from_parts(
        model.name(),
        net.ports().width(),
        Component::ALL.map(|c| net.count(c)),
    )
}

/// Note line, header and one row per breakdown.
pub fn breakdown_csv(rows: &[ComponentBreakdown]) -> String {
    let mut out = format!("{BREAKDOWN_NOTE}\n{BREAKDOWN_HEADER}\n");
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}
