//! Technology mapping from macro components to `K`-input LUTs.
//!
//! * `GE_CONST` over a `w`-bit word: an LSB-first chain of `ceil(w / (K-1))`
//!   LUTs. Each link sees up to `K - 1` data bits plus the previous link's
//!   result; the first link has no chain input.
//! * `LUT_CELL`: one LUT with the model's table.
//! * `POPCOUNT`: the compressor tree of [`compressor_tree`], full adders and
//!   half adders as two LUTs each (sum, carry).
//! * `IDXCMP`: a `>=` chain over the two score operands, `floor((K-1)/2)` bit
//!   positions per link, followed by one 3-input mux LUT per output bit.

use super::compressor::{compressor_tree, AdderCells};
use super::lut::{LutGraph, LutNetlist};
use super::macro_net::{MacroKind, MacroNetlist};
use super::{Component, Driver, NetId, NetlistError, Ports};
use crate::model::TruthTable;

/// Size of the physical LUTs the netlist is mapped to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MappingTarget {
    lut_size: usize,
}

impl Default for MappingTarget {
    fn default() -> Self {
        Self { lut_size: 6 }
    }
}

impl MappingTarget {
    pub fn new(lut_size: usize) -> Result<Self, NetlistError> {
        if (3..=6).contains(&lut_size) {
            Ok(Self { lut_size })
        } else {
            Err(NetlistError::LutSize(lut_size))
        }
    }

    pub fn lut_size(self) -> usize {
        self.lut_size
    }
}

/// LUTs in a `w`-bit constant comparator.
pub fn ge_const_nodes(width: usize, lut_size: usize) -> usize {
    width.div_ceil(lut_size - 1)
}

fn positions_per_link(lut_size: usize) -> usize {
    (lut_size - 1) / 2
}

/// LUTs in a `p`-bit two-operand `>=` comparator.
pub fn compare_nodes(bits: usize, lut_size: usize) -> usize {
    bits.div_ceil(positions_per_link(lut_size))
}

/// LUTs in one lowered index comparator.
pub fn idxcmp_nodes(value_bits: usize, index_bits: usize, lut_size: usize) -> usize {
    compare_nodes(value_bits, lut_size) + value_bits + index_bits
}

fn mask(bits: usize) -> u64 {
    (1u64 << bits) - 1
}

/// Signed `word >= constant`. `word` holds the two's-complement bits LSB
/// first; `constant` is a mantissa in the same width.
pub fn ge_const_luts(
    g: &mut LutGraph,
    word: &[NetId],
    constant: i64,
    lut_size: usize,
    component: Component,
) -> NetId {
    let w = word.len();
    let sign = 1u64 << (w - 1);
    // offset binary turns the signed comparison into an unsigned one
    let biased = ((constant as u64) & mask(w)) ^ sign;
    let mut chain: Option<NetId> = None;
    for (link, chunk) in word.chunks(lut_size - 1).enumerate() {
        let lo = link * (lut_size - 1);
        let len = chunk.len();
        let c = (biased >> lo) & mask(len);
        let flip = if lo + len == w { 1u64 << (len - 1) } else { 0 };
        let has_chain = chain.is_some();
        let table = TruthTable::from_fn(len + usize::from(has_chain), |a| {
            let d = (a as u64 & mask(len)) ^ flip;
            let prev = !has_chain || (a >> len) & 1 == 1;
            d > c || (d == c && prev)
        });
        let mut inputs = chunk.to_vec();
        inputs.extend(chain);
        chain = Some(g.add_lut(table, inputs, component));
    }
    chain.expect("word has at least one bit")
}

/// Unsigned `a >= b` for equal-width operands, LSB first.
pub fn compare_ge_luts(
    g: &mut LutGraph,
    a: &[NetId],
    b: &[NetId],
    lut_size: usize,
    component: Component,
) -> NetId {
    debug_assert_eq!(a.len(), b.len());
    let m = positions_per_link(lut_size);
    let mut chain: Option<NetId> = None;
    for (link, (ca, cb)) in a.chunks(m).zip(b.chunks(m)).enumerate() {
        let len = ca.len();
        let has_chain = chain.is_some();
        debug_assert_eq!(has_chain, link > 0);
        let table = TruthTable::from_fn(2 * len + usize::from(has_chain), |addr| {
            let x = addr as u64 & mask(len);
            let y = (addr as u64 >> len) & mask(len);
            let prev = !has_chain || (addr >> (2 * len)) & 1 == 1;
            x > y || (x == y && prev)
        });
        let mut inputs = [ca, cb].concat();
        inputs.extend(chain);
        chain = Some(g.add_lut(table, inputs, component));
    }
    chain.expect("operands have at least one bit")
}

/// `sel ? a : b` as one 3-input LUT (inputs `a`, `b`, `sel`).
pub fn mux_luts(g: &mut LutGraph, sel: NetId, a: NetId, b: NetId, component: Component) -> NetId {
    let table = TruthTable::from_fn(3, |addr| {
        if addr & 4 != 0 {
            addr & 1 != 0
        } else {
            addr & 2 != 0
        }
    });
    g.add_lut(table, vec![a, b, sel], component)
}

struct LutCells<'g> {
    graph: &'g mut LutGraph,
    lut_size: usize,
    component: Component,
}

impl AdderCells for LutCells<'_> {
    type Bit = NetId;

    fn full_adder(&mut self, a: NetId, b: NetId, c: NetId) -> (NetId, NetId) {
        let sum = TruthTable::from_fn(3, |x| (x as u32).count_ones() % 2 == 1);
        let carry = TruthTable::from_fn(3, |x| (x as u32).count_ones() >= 2);
        (
            self.graph.add_lut(sum, vec![a, b, c], self.component),
            self.graph.add_lut(carry, vec![a, b, c], self.component),
        )
    }

    fn half_adder(&mut self, a: NetId, b: NetId) -> (NetId, NetId) {
        let sum = TruthTable::new(2, 0b0110).unwrap();
        let carry = TruthTable::new(2, 0b1000).unwrap();
        (
            self.graph.add_lut(sum, vec![a, b], self.component),
            self.graph.add_lut(carry, vec![a, b], self.component),
        )
    }

    fn parity(&mut self, mut bits: Vec<NetId>) -> NetId {
        // first link takes up to K bits, later links K - 1 plus the running parity
        let mut acc: Option<NetId> = None;
        while !bits.is_empty() {
            let room = self.lut_size - usize::from(acc.is_some());
            let mut ins: Vec<NetId> = bits.drain(..room.min(bits.len())).collect();
            ins.extend(acc);
            if ins.len() == 1 {
                return ins[0];
            }
            let t = TruthTable::from_fn(ins.len(), |x| (x as u32).count_ones() % 2 == 1);
            acc = Some(self.graph.add_lut(t, ins, self.component));
        }
        acc.expect("parity of at least two bits")
    }

    fn zero(&mut self) -> NetId {
        self.graph.constant(false)
    }
}

/// Lowered popcount of `bits`; returns `count_bits(bits.len())` sum bits, LSB first.
pub fn popcount_luts(
    g: &mut LutGraph,
    bits: &[NetId],
    lut_size: usize,
    component: Component,
) -> Vec<NetId> {
    let mut cells = LutCells {
        graph: g,
        lut_size,
        component,
    };
    compressor_tree(&mut cells, bits.to_vec())
}

/// Lowers with the default 6-input target.
pub fn lower_to_luts(net: &MacroNetlist) -> Result<LutNetlist, NetlistError> {
    lower_with(net, MappingTarget::default())
}

pub fn lower_with(net: &MacroNetlist, target: MappingTarget) -> Result<LutNetlist, NetlistError> {
    let k = target.lut_size();
    let mut g = LutGraph::new();
    let mut map: Vec<Option<NetId>> = vec![None; net.num_nets()];
    for (i, d) in net.drivers().iter().enumerate() {
        map[i] = match *d {
            Driver::Input { word, bit } => Some(g.add_input(word, bit)),
            Driver::Const(b) => Some(g.constant(b)),
            Driver::Node { .. } => None,
        };
    }
    let get = |map: &[Option<NetId>], ids: &[NetId]| -> Vec<NetId> {
        ids.iter()
            .map(|n| map[n.index()].expect("macro nodes are topologically ordered"))
            .collect()
    };

    for node in net.nodes() {
        let ins = get(&map, &node.inputs);
        let comp = node.component;
        let outs: Vec<NetId> = match &node.kind {
            MacroKind::GeConst { constant } => vec![ge_const_luts(&mut g, &ins, *constant, k, comp)],
            MacroKind::LutCell { table } => {
                if table.arity() > k {
                    return Err(NetlistError::ArityExceedsTarget {
                        arity: table.arity(),
                        lut_size: k,
                    });
                }
                vec![g.add_lut(*table, ins, comp)]
            }
            MacroKind::Popcount => popcount_luts(&mut g, &ins, k, comp),
            MacroKind::IdxCmp { value_bits: p, index_bits: q } => {
                let (p, q) = (*p, *q);
                let (a, b) = ins.split_at(p + q);
                let sel = compare_ge_luts(&mut g, &a[..p], &b[..p], k, comp);
                (0..p + q).map(|i| mux_luts(&mut g, sel, a[i], b[i], comp)).collect()
            }
        };
        debug_assert_eq!(outs.len(), node.outputs.len());
        for (o, n) in node.outputs.iter().zip(outs) {
            map[o.index()] = Some(n);
        }
    }

    let ports = net.ports();
    let lowered = LutNetlist {
        name: net.name().to_string(),
        lut_size: k,
        ports: Ports {
            format: ports.format,
            inputs: ports.inputs.iter().map(|w| get(&map, w)).collect(),
            class_idx: get(&map, &ports.class_idx),
            max_val: get(&map, &ports.max_val),
        },
        graph: g,
    };
    lowered.validate()?;
    Ok(lowered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::FixedPointFormat;
    use crate::netlist::popcount_nodes;

    fn word_graph(w: usize) -> (LutGraph, Vec<NetId>) {
        let mut g = LutGraph::new();
        let word = (0..w).map(|b| g.add_input(0, b)).collect();
        (g, word)
    }

    #[test]
    fn constant_comparator_matches_signed_compare_exhaustively() {
        for (w, k) in [(2, 3), (3, 3), (4, 4), (6, 6), (8, 6), (9, 5), (11, 6)] {
            let fmt = FixedPointFormat::from_width(w as u32).unwrap();
            let consts = [fmt.min_mantissa(), -1, 0, 1, fmt.max_mantissa(), fmt.max_mantissa() / 3];
            for &c in &consts {
                let (mut g, word) = word_graph(w);
                let out = ge_const_luts(&mut g, &word, c, k, Component::Encoder);
                assert_eq!(g.nodes().len(), ge_const_nodes(w, k));
                assert!(g.max_arity() <= k);
                for m in fmt.min_mantissa()..=fmt.max_mantissa() {
                    let bits = fmt.to_word(m);
                    let v = g.evaluate(|_, b| (bits >> b) & 1 == 1);
                    assert_eq!(v[out.index()], m >= c, "w={w} k={k} c={c} m={m}");
                }
            }
        }
    }

    #[test]
    fn two_operand_comparator_matches_exhaustively() {
        for (p, k) in [(1, 3), (3, 3), (4, 6), (5, 6), (4, 5)] {
            let mut g = LutGraph::new();
            let a: Vec<NetId> = (0..p).map(|b| g.add_input(0, b)).collect();
            let b: Vec<NetId> = (0..p).map(|b| g.add_input(1, b)).collect();
            let out = compare_ge_luts(&mut g, &a, &b, k, Component::Argmax);
            assert_eq!(g.nodes().len(), compare_nodes(p, k));
            assert!(g.max_arity() <= k);
            for x in 0..1u32 << p {
                for y in 0..1u32 << p {
                    let v = g.evaluate(|w, bit| (if w == 0 { x } else { y } >> bit) & 1 == 1);
                    assert_eq!(v[out.index()], x >= y);
                }
            }
        }
    }

    #[test]
    fn mux_selects() {
        let mut g = LutGraph::new();
        let (a, b, s) = (g.add_input(0, 0), g.add_input(0, 1), g.add_input(0, 2));
        let o = mux_luts(&mut g, s, a, b, Component::Argmax);
        for x in 0..8usize {
            let v = g.evaluate(|_, bit| (x >> bit) & 1 == 1);
            let expect = if x & 4 != 0 { x & 1 != 0 } else { x & 2 != 0 };
            assert_eq!(v[o.index()], expect);
        }
    }

    #[test]
    fn lowered_popcount_is_exact_for_all_inputs_up_to_sixteen_bits() {
        for b in 1..=16usize {
            let mut g = LutGraph::new();
            let ins: Vec<NetId> = (0..b).map(|i| g.add_input(0, i)).collect();
            let outs = popcount_luts(&mut g, &ins, 6, Component::Popcount);
            assert_eq!(g.nodes().len(), popcount_nodes(b, 6));
            assert!(g.max_arity() <= 3);
            for x in 0u32..1 << b {
                let v = g.evaluate(|_, bit| (x >> bit) & 1 == 1);
                let got: u32 = outs
                    .iter()
                    .enumerate()
                    .map(|(i, n)| u32::from(v[n.index()]) << i)
                    .sum();
                assert_eq!(got, x.count_ones(), "B={b}");
            }
        }
    }

    #[test]
    fn popcount_of_three_is_one_full_adder() {
        let mut g = LutGraph::new();
        let ins: Vec<NetId> = (0..3).map(|i| g.add_input(0, i)).collect();
        let outs = popcount_luts(&mut g, &ins, 6, Component::Popcount);
        assert_eq!(outs.len(), 2);
        assert_eq!(g.nodes().len(), 2);
        assert!(g.nodes().iter().all(|n| n.inputs.len() == 3));
    }

    #[test]
    fn target_bounds() {
        assert!(MappingTarget::new(2).is_err());
        assert!(MappingTarget::new(7).is_err());
        assert_eq!(MappingTarget::default().lut_size(), 6);
        assert_eq!(ge_const_nodes(6, 6), 2);
        assert_eq!(ge_const_nodes(5, 6), 1);
        assert_eq!(ge_const_nodes(11, 6), 3);
    }
}
