use rayon::prelude::*;

use super::{bits_to_usize, Component, Driver, NetId, NetTable, NetlistError, Ports};
use crate::model::TruthTable;
use crate::simulator::Prediction;

/// One single-output LUT. Input `i` is address bit `i` of `table`.
#[derive(Debug, Clone, PartialEq)]
pub struct LutNode {
    pub table: TruthTable,
    pub inputs: Vec<NetId>,
    pub output: NetId,
    pub component: Component,
}

/// A DAG of LUT nodes over primary input bits and constants.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LutGraph {
    nets: NetTable,
    nodes: Vec<LutNode>,
}

impl LutGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_input(&mut self, word: usize, bit: usize) -> NetId {
        self.nets.push(Driver::Input { word, bit })
    }

    pub fn constant(&mut self, value: bool) -> NetId {
        self.nets.constant(value)
    }

    /// Appends a LUT reading `inputs` and returns its output net.
    pub fn add_lut(&mut self, table: TruthTable, inputs: Vec<NetId>, component: Component) -> NetId {
        debug_assert_eq!(table.arity(), inputs.len());
        let node = self.nodes.len();
        let output = self.nets.push(Driver::Node { node, port: 0 });
        self.nodes.push(LutNode {
            table,
            inputs,
            output,
            component,
        });
        output
    }

    pub fn nodes(&self) -> &[LutNode] {
        &self.nodes
    }

    pub fn drivers(&self) -> &[Driver] {
        &self.nets.drivers
    }

    pub fn num_nets(&self) -> usize {
        self.nets.drivers.len()
    }

    pub fn max_arity(&self) -> usize {
        self.nodes.iter().map(|n| n.inputs.len()).max().unwrap_or(0)
    }

    /// Value of every net, given the value of each primary input bit.
    pub fn evaluate(&self, input: impl Fn(usize, usize) -> bool) -> Vec<bool> {
        let mut v = vec![false; self.num_nets()];
        for (i, d) in self.nets.drivers.iter().enumerate() {
            match *d {
                Driver::Input { word, bit } => v[i] = input(word, bit),
                Driver::Const(b) => v[i] = b,
                Driver::Node { .. } => {}
            }
        }
        for n in &self.nodes {
            let a = n
                .inputs
                .iter()
                .enumerate()
                .fold(0usize, |a, (i, x)| a | (usize::from(v[x.index()]) << i));
            v[n.output.index()] = n.table.get(a);
        }
        v
    }

    fn check(&self, ports: &Ports) -> Result<(), NetlistError> {
        self.nets.check(
            self.nodes
                .iter()
                .map(|n| (n.inputs.as_slice(), std::slice::from_ref(&n.output))),
            ports,
        )
    }
}

/// Technology-mapped netlist: every node is a LUT of at most `lut_size` inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LutNetlist {
    pub(super) name: String,
    pub(super) lut_size: usize,
    pub(super) graph: LutGraph,
    pub(super) ports: Ports,
}

impl LutNetlist {
    /// Wraps a hand-built graph, checking it like a lowered one.
    pub fn from_graph(
        name: impl Into<String>,
        lut_size: usize,
        graph: LutGraph,
        ports: Ports,
    ) -> Result<Self, NetlistError> {
        let net = Self {
            name: name.into(),
            lut_size,
            graph,
            ports,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lut_size(&self) -> usize {
        self.lut_size
    }

    pub fn graph(&self) -> &LutGraph {
        &self.graph
    }

    pub fn nodes(&self) -> &[LutNode] {
        self.graph.nodes()
    }

    pub fn ports(&self) -> &Ports {
        &self.ports
    }

    pub fn count(&self, component: Component) -> usize {
        self.nodes().iter().filter(|n| n.component == component).count()
    }

    /// Acyclic, single-driver, and no node wider than the target LUT.
    pub fn validate(&self) -> Result<(), NetlistError> {
        self.graph.check(&self.ports)?;
        if let Some((i, n)) = self
            .nodes()
            .iter()
            .enumerate()
            .find(|(_, n)| n.inputs.len() > self.lut_size || n.inputs.is_empty())
        {
            return Err(NetlistError::Malformed(format!(
                "node {i} has {} inputs, target allows 1..={}",
                n.inputs.len(),
                self.lut_size
            )));
        }
        Ok(())
    }

    pub fn interpret_many(&self, vectors: &[Vec<i64>]) -> Result<Vec<Prediction>, NetlistError> {
        vectors.par_iter().map(|v| interpret_luts(self, v)).collect()
    }
}

/// Evaluates the mapped netlist on input mantissas (one per feature).
pub fn interpret_luts(net: &LutNetlist, inputs: &[i64]) -> Result<Prediction, NetlistError> {
    net.ports.check_inputs(inputs)?;
    let fmt = net.ports.format;
    let words: Vec<u64> = inputs.iter().map(|&m| fmt.to_word(m)).collect();
    let v = net.graph.evaluate(|word, bit| (words[word] >> bit) & 1 == 1);
    Ok(Prediction {
        class: bits_to_usize(&v, &net.ports.class_idx),
        score: bits_to_usize(&v, &net.ports.max_val) as u32,
    })
}
