//! Column-wise compressor tree for popcounts.
//!
//! Input bits start in column 0. Every column below the top is reduced with
//! full adders while it holds three or more bits (sum stays, carry moves up).
//! The remaining two rows are then summed by a ripple of half/full adders.
//! The top column `p - 1` never emits a carry: the count is at most `B < 2^p`,
//! so its bit is the parity of whatever lands there.

use super::count_bits;

/// Cell library the tree is built from.
pub trait AdderCells {
    type Bit: Clone;
    /// Returns `(sum, carry)`.
    fn full_adder(&mut self, a: Self::Bit, b: Self::Bit, c: Self::Bit) -> (Self::Bit, Self::Bit);
    fn half_adder(&mut self, a: Self::Bit, b: Self::Bit) -> (Self::Bit, Self::Bit);
    /// XOR of two or more bits.
    fn parity(&mut self, bits: Vec<Self::Bit>) -> Self::Bit;
    fn zero(&mut self) -> Self::Bit;
}

/// Sums `inputs` into `count_bits(inputs.len())` output bits, LSB first.
pub fn compressor_tree<C: AdderCells>(cells: &mut C, inputs: Vec<C::Bit>) -> Vec<C::Bit> {
    if inputs.is_empty() {
        return vec![cells.zero()];
    }
    let p = count_bits(inputs.len());
    let mut cols: Vec<std::collections::VecDeque<C::Bit>> = vec![Default::default(); p];
    cols[0].extend(inputs);

    for i in 0..p - 1 {
        while cols[i].len() >= 3 {
            let a = cols[i].pop_front().unwrap();
            let b = cols[i].pop_front().unwrap();
            let c = cols[i].pop_front().unwrap();
            let (s, carry) = cells.full_adder(a, b, c);
            cols[i].push_back(s);
            cols[i + 1].push_back(carry);
        }
    }

    let mut out = Vec::with_capacity(p);
    let mut carry: Option<C::Bit> = None;
    for (i, col) in cols.into_iter().enumerate() {
        let mut bits: Vec<C::Bit> = col.into_iter().collect();
        bits.extend(carry.take());
        let bit = match bits.len() {
            0 => cells.zero(),
            1 => bits.pop().unwrap(),
            _ if i == p - 1 => cells.parity(bits),
            2 => {
                let b = bits.pop().unwrap();
                let a = bits.pop().unwrap();
                let (s, c) = cells.half_adder(a, b);
                carry = Some(c);
                s
            }
            3 => {
                let c = bits.pop().unwrap();
                let b = bits.pop().unwrap();
                let a = bits.pop().unwrap();
                let (s, co) = cells.full_adder(a, b, c);
                carry = Some(co);
                s
            }
            n => unreachable!("column {i} holds {n} bits after reduction"),
        };
        out.push(bit);
    }
    out
}

/// Counts LUT nodes: 2 per full adder, 2 per half adder, and a chain of
/// `lut_size`-input XORs per parity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CountingCells {
    pub lut_size: usize,
    pub full_adders: usize,
    pub half_adders: usize,
    pub parity_luts: usize,
}

impl CountingCells {
    pub fn new(lut_size: usize) -> Self {
        Self {
            lut_size,
            ..Default::default()
        }
    }

    pub fn nodes(&self) -> usize {
        2 * self.full_adders + 2 * self.half_adders + self.parity_luts
    }
}

impl AdderCells for CountingCells {
    type Bit = ();

    fn full_adder(&mut self, _: (), _: (), _: ()) -> ((), ()) {
        self.full_adders += 1;
        ((), ())
    }

    fn half_adder(&mut self, _: (), _: ()) -> ((), ()) {
        self.half_adders += 1;
        ((), ())
    }

    fn parity(&mut self, bits: Vec<()>) {
        self.parity_luts += (bits.len() - 1).div_ceil(self.lut_size - 1);
    }

    fn zero(&mut self) {}
}

/// LUT nodes in the lowered popcount of `bits` inputs.
pub fn popcount_nodes(bits: usize, lut_size: usize) -> usize {
    let mut cells = CountingCells::new(lut_size);
    compressor_tree(&mut cells, vec![(); bits]);
    cells.nodes()
}
