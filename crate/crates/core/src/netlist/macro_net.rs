use rayon::prelude::*;

use super::{bits_to_usize, count_bits, index_bits, Component, Driver, NetId, NetTable, NetlistError, Ports};
use crate::model::{DwnModel, TruthTable};
use crate::simulator::{address, tree_reduce, Prediction};

#[derive(Debug, Clone, PartialEq)]
pub enum MacroKind {
    /// Signed `word >= constant` over one input word (inputs LSB first).
    GeConst { constant: i64 },
    /// One DWN LUT; input `i` is address bit `i`.
    LutCell { table: TruthTable },
    /// Exact count of its inputs, `count_bits(B)` outputs.
    Popcount,
    /// Inputs `[a_val; p] ++ [a_idx; q] ++ [b_val; p] ++ [b_idx; q]`, outputs
    /// `[val; p] ++ [idx; q]`. Operand `a` wins unless `b_val > a_val`.
    IdxCmp { value_bits: usize, index_bits: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroNode {
    pub kind: MacroKind,
    pub inputs: Vec<NetId>,
    pub outputs: Vec<NetId>,
    pub component: Component,
}

/// Component-level netlist of a quantized model.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroNetlist {
    name: String,
    nets: NetTable,
    nodes: Vec<MacroNode>,
    ports: Ports,
}

impl MacroNetlist {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> &[MacroNode] {
        &self.nodes
    }

    pub fn ports(&self) -> &Ports {
        &self.ports
    }

    pub fn drivers(&self) -> &[Driver] {
        &self.nets.drivers
    }

    pub fn num_nets(&self) -> usize {
        self.nets.drivers.len()
    }

    pub fn count(&self, pred: impl Fn(&MacroNode) -> bool) -> usize {
        self.nodes.iter().filter(|n| pred(n)).count()
    }

    pub fn validate(&self) -> Result<(), NetlistError> {
        self.nets.check(
            self.nodes
                .iter()
                .map(|n| (n.inputs.as_slice(), n.outputs.as_slice())),
            &self.ports,
        )
    }

    fn add(&mut self, kind: MacroKind, inputs: Vec<NetId>, outputs: usize, component: Component) -> Vec<NetId> {
        let node = self.nodes.len();
        let outs: Vec<NetId> = (0..outputs)
            .map(|port| self.nets.push(Driver::Node { node, port }))
            .collect();
        self.nodes.push(MacroNode {
            kind,
            inputs,
            outputs: outs.clone(),
            component,
        });
        outs
    }

    /// Evaluates many input vectors in parallel.
    pub fn interpret_many(&self, vectors: &[Vec<i64>]) -> Result<Vec<Prediction>, NetlistError> {
        vectors.par_iter().map(|v| interpret_macro(self, v)).collect()
    }
}

/// Builds the component graph: one comparator per threshold, one LUT cell per
/// DWN LUT, one popcount per class and `C - 1` index comparators arranged as
/// the simulator's reduction tree.
pub fn build_macro_netlist(model: &DwnModel) -> Result<MacroNetlist, NetlistError> {
    let format = model.threshold_format().fixed().ok_or(NetlistError::RealModel)?;
    let thresholds = model.threshold_mantissas().expect("fixed model");
    let w = format.width() as usize;

    let mut nets = NetTable::default();
    let inputs: Vec<Vec<NetId>> = (0..model.num_features())
        .map(|word| (0..w).map(|bit| nets.push(Driver::Input { word, bit })).collect())
        .collect();
    let mut net = MacroNetlist {
        name: model.name().to_string(),
        nets,
        nodes: Vec::new(),
        ports: Ports {
            format,
            inputs,
            class_idx: Vec::new(),
            max_val: Vec::new(),
        },
    };

    let mut encoded = Vec::with_capacity(model.encoded_width());
    for (f, row) in thresholds.iter().enumerate() {
        for &constant in row {
            let word = net.ports.inputs[f].clone();
            let out = net.add(MacroKind::GeConst { constant }, word, 1, Component::Encoder);
            encoded.push(out[0]);
        }
    }

    let lut_outs: Vec<NetId> = model
        .connections()
        .iter()
        .zip(model.truth_tables())
        .map(|(conn, &table)| {
            let ins = conn.iter().map(|&b| encoded[b]).collect();
            net.add(MacroKind::LutCell { table }, ins, 1, Component::LutLayer)[0]
        })
        .collect();

    let p = count_bits(model.luts_per_class());
    let q = index_bits(model.num_classes());
    let leaves: Vec<(Vec<NetId>, Vec<NetId>)> = lut_outs
        .chunks(model.luts_per_class())
        .enumerate()
        .map(|(class, group)| {
            let val = net.add(MacroKind::Popcount, group.to_vec(), p, Component::Popcount);
            let idx = (0..q).map(|b| net.nets.constant((class >> b) & 1 == 1)).collect();
            (val, idx)
        })
        .collect();

    let (val, idx) = tree_reduce(leaves, |(av, ai), (bv, bi)| {
        let ins = [av, ai, bv, bi].concat();
        let outs = net.add(
            MacroKind::IdxCmp { value_bits: p, index_bits: q },
            ins,
            p + q,
            Component::Argmax,
        );
        (outs[..p].to_vec(), outs[p..].to_vec())
    })
    .expect("models have at least one class");
    net.ports.class_idx = idx;
    net.ports.max_val = val;
    net.validate()?;
    Ok(net)
}

/// Evaluates the macro netlist on input mantissas (one per feature).
pub fn interpret_macro(net: &MacroNetlist, inputs: &[i64]) -> Result<Prediction, NetlistError> {
    let ports = &net.ports;
    ports.check_inputs(inputs)?;
    let fmt = ports.format;
    let mut v = vec![false; net.num_nets()];
    for (i, d) in net.nets.drivers.iter().enumerate() {
        match *d {
            Driver::Input { word, bit } => v[i] = (fmt.to_word(inputs[word]) >> bit) & 1 == 1,
            Driver::Const(b) => v[i] = b,
            Driver::Node { .. } => {}
        }
    }
    for node in &net.nodes {
        match &node.kind {
            MacroKind::GeConst { constant } => {
                let word = bits_to_usize(&v, &node.inputs) as u64;
                v[node.outputs[0].index()] = fmt.from_word(word) >= *constant;
            }
            MacroKind::LutCell { table } => {
                let bits: Vec<bool> = node.inputs.iter().map(|n| v[n.index()]).collect();
                v[node.outputs[0].index()] = table.get(address(&bits));
            }
            MacroKind::Popcount => {
                let count = node.inputs.iter().filter(|n| v[n.index()]).count();
                for (i, o) in node.outputs.iter().enumerate() {
                    v[o.index()] = (count >> i) & 1 == 1;
                }
            }
            MacroKind::IdxCmp { value_bits: p, index_bits: q } => {
                let (p, q) = (*p, *q);
                let a_val = bits_to_usize(&v, &node.inputs[..p]);
                let b_val = bits_to_usize(&v, &node.inputs[p + q..2 * p + q]);
                let src = if a_val >= b_val { 0 } else { p + q };
                for (i, o) in node.outputs.iter().enumerate() {
                    v[o.index()] = v[node.inputs[src + i].index()];
                }
            }
        }
    }
    Ok(Prediction {
        class: bits_to_usize(&v, &ports.class_idx),
        score: bits_to_usize(&v, &ports.max_val) as u32,
    })
}
