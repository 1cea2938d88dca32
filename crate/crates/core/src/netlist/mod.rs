//! Hardware netlists of the accelerator at two levels.
//!
//! [`MacroNetlist`] holds comparators, LUT cells, popcounts and index
//! comparators. [`lower_to_luts`] maps it to a [`LutNetlist`] in which every
//! node is a single-output LUT with at most `K` inputs. Both levels can be
//! interpreted bit-exactly, and node counts of the mapped netlist give the
//! per-component resource estimate.
//!
//! Nets are numbered densely. Each net has exactly one [`Driver`]: a primary
//! input bit, a constant, or one output port of a node. Nodes are stored in
//! topological order, so a node only reads nets driven by inputs, constants,
//! or earlier nodes.

mod compressor;
mod lower;
mod lut;
mod macro_net;
mod report;

use serde::Serialize;
use thiserror::Error;

use crate::fixed::FixedPointFormat;

pub use compressor::{compressor_tree, popcount_nodes, AdderCells, CountingCells};
pub use lower::{
    compare_ge_luts, compare_nodes, ge_const_luts, ge_const_nodes, idxcmp_nodes, lower_to_luts,
    lower_with, mux_luts, popcount_luts, MappingTarget,
};
pub use lut::{interpret_luts, LutGraph, LutNetlist, LutNode};
pub use macro_net::{build_macro_netlist, interpret_macro, MacroKind, MacroNetlist, MacroNode};
pub use report::{
    breakdown_csv, resource_report, ComponentBreakdown, BREAKDOWN_HEADER, BREAKDOWN_NOTE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetlistError {
    #[error("model thresholds are real-valued; quantize the model to fixed point first")]
    RealModel,
    #[error("expected {expected} input words, got {found}")]
    InputCount { expected: usize, found: usize },
    #[error("input word {feature} = {value} does not fit in {width} signed bits")]
    InputRange {
        feature: usize,
        value: i64,
        width: u32,
    },
    #[error("LUT size {0} is not supported; choose 3..=6")]
    LutSize(usize),
    #[error("model LUT arity {arity} exceeds the mapping target's {lut_size}-input LUTs")]
    ArityExceedsTarget { arity: usize, lut_size: usize },
    #[error("malformed netlist: {0}")]
    Malformed(String),
}

/// Index of a net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NetId(pub u32);

impl NetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    /// Bit `bit` (LSB = 0) of primary input word `word`.
    Input { word: usize, bit: usize },
    Const(bool),
    /// Output `port` of node `node`.
    Node { node: usize, port: usize },
}

/// Which part of the accelerator a node implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Encoder,
    LutLayer,
    Popcount,
    Argmax,
}

impl Component {
    pub const ALL: [Component; 4] = [
        Component::Encoder,
        Component::LutLayer,
        Component::Popcount,
        Component::Argmax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Encoder => "encoder",
            Component::LutLayer => "lut_layer",
            Component::Popcount => "popcount",
            Component::Argmax => "argmax",
        }
    }
}

/// Primary ports. All bit vectors are LSB first.
#[derive(Debug, Clone, PartialEq)]
pub struct Ports {
    pub format: FixedPointFormat,
    /// One word of `format.width()` bits per feature.
    pub inputs: Vec<Vec<NetId>>,
    pub class_idx: Vec<NetId>,
    pub max_val: Vec<NetId>,
}

impl Ports {
    pub fn width(&self) -> u32 {
        self.format.width()
    }

    pub(crate) fn check_inputs(&self, words: &[i64]) -> Result<(), NetlistError> {
        if words.len() != self.inputs.len() {
            return Err(NetlistError::InputCount {
                expected: self.inputs.len(),
                found: words.len(),
            });
        }
        if let Some((feature, &value)) = words
            .iter()
            .enumerate()
            .find(|(_, &m)| !self.format.contains_mantissa(m))
        {
            return Err(NetlistError::InputRange {
                feature,
                value,
                width: self.width(),
            });
        }
        Ok(())
    }

    fn all_nets(&self) -> impl Iterator<Item = NetId> + '_ {
        self.inputs
            .iter()
            .flatten()
            .chain(&self.class_idx)
            .chain(&self.max_val)
            .copied()
    }
}

/// Bits needed for the class index: `ceil(log2 C)`, at least one.
pub fn index_bits(num_classes: usize) -> usize {
    (usize::BITS - (num_classes.max(2) - 1).leading_zeros()) as usize
}

/// Bits needed to hold a count in `0..=max`: `ceil(log2(max + 1))`.
pub fn count_bits(max: usize) -> usize {
    (usize::BITS - max.leading_zeros()).max(1) as usize
}

pub(crate) fn bits_to_usize(values: &[bool], nets: &[NetId]) -> usize {
    nets.iter()
        .enumerate()
        .fold(0, |acc, (i, n)| acc | (usize::from(values[n.index()]) << i))
}

/// Net table plus constant sharing, used while constructing either level.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct NetTable {
    pub drivers: Vec<Driver>,
    consts: [Option<NetId>; 2],
}

impl NetTable {
    pub fn push(&mut self, d: Driver) -> NetId {
        let id = NetId(u32::try_from(self.drivers.len()).expect("net count fits in u32"));
        self.drivers.push(d);
        id
    }

    pub fn constant(&mut self, value: bool) -> NetId {
        if let Some(id) = self.consts[usize::from(value)] {
            return id;
        }
        let id = self.push(Driver::Const(value));
        self.consts[usize::from(value)] = Some(id);
        id
    }

    /// Checks acyclicity and single drivers for nodes given as
    /// `(inputs, outputs)` in storage order.
    pub fn check<'a>(
        &self,
        nodes: impl Iterator<Item = (&'a [NetId], &'a [NetId])>,
        ports: &Ports,
    ) -> Result<(), NetlistError> {
        let n = self.drivers.len();
        let mut claimed = vec![false; n];
        let exists = |id: NetId| -> Result<(), NetlistError> {
            if id.index() < n {
                Ok(())
            } else {
                Err(NetlistError::Malformed(format!("net {} does not exist", id.0)))
            }
        };
        for (node, (inputs, outputs)) in nodes.enumerate() {
            for &i in inputs {
                exists(i)?;
                if let Driver::Node { node: src, .. } = self.drivers[i.index()] {
                    if src >= node {
                        return Err(NetlistError::Malformed(format!(
                            "node {node} reads net {} driven by later node {src}",
                            i.0
                        )));
                    }
                }
            }
            for (port, &o) in outputs.iter().enumerate() {
                exists(o)?;
                if self.drivers[o.index()] != (Driver::Node { node, port }) || claimed[o.index()] {
                    return Err(NetlistError::Malformed(format!(
                        "net {} has more than one driver",
                        o.0
                    )));
                }
                claimed[o.index()] = true;
            }
        }
        for (i, d) in self.drivers.iter().enumerate() {
            if matches!(d, Driver::Node { .. }) && !claimed[i] {
                return Err(NetlistError::Malformed(format!(
                    "net {i} names a driver node that does not output it"
                )));
            }
        }
        for id in ports.all_nets() {
            exists(id)?;
        }
        Ok(())
    }
}
