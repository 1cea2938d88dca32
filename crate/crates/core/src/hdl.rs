//! Structural Verilog for mapped netlists, plus self-checking testbenches.
//!
//! Every LUT node becomes a `localparam` holding its truth table and one
//! continuous assignment that indexes it with the node's inputs, most
//! significant address bit first. Synthesis tools are free to re-map these.
//! Internal nets are named `n<net id>` and tables `T<node index>`, so the text
//! depends only on the netlist.

use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::Normalization;
use crate::netlist::{interpret_luts, Driver, LutNetlist, NetId, NetlistError};
use crate::simulator::Prediction;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HdlError {
    #[error("`{0}` is not a usable Verilog identifier")]
    InvalidIdentifier(String),
    #[error("netlist has no LUT nodes")]
    EmptyNetlist,
    #[error("testbench needs at least one vector")]
    NoVectors,
    #[error("vector {index} has {found} inputs, the netlist has {expected}")]
    VectorShape {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

const KEYWORDS: &[&str] = &[
    "always", "and", "assign", "begin", "buf", "case", "casex", "casez", "default", "defparam",
    "else", "end", "endcase", "endfunction", "endmodule", "endtask", "for", "forever", "function",
    "genvar", "generate", "if", "initial", "inout", "input", "integer", "localparam", "module",
    "nand", "negedge", "nor", "not", "or", "output", "parameter", "posedge", "reg", "repeat",
    "signed", "task", "time", "wire", "while", "xnor", "xor",
];

/// Whether `name` can name the emitted module (and `<name>_tb`).
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    (first.is_ascii_alphabetic() || first == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&name)
}

/// Turns a model name such as `sm-10` into an identifier (`sm10`).
pub fn module_name_for(model_name: &str) -> String {
    let mut s: String = model_name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect();
    if !s.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
        s.insert_str(0, "dwn_");
    }
    if KEYWORDS.contains(&s.as_str()) {
        s.push('_');
    }
    s
}

#[derive(Debug, Clone, Copy)]
pub struct EmitOptions<'a> {
    pub module_name: &'a str,
    /// Register inputs and outputs on `posedge clk`, two cycles of latency.
    pub registered_io: bool,
    /// Recorded in the header so integrators can produce input words.
    pub normalization: Option<&'a Normalization>,
}

fn check_emittable(net: &LutNetlist, module_name: &str) -> Result<(), HdlError> {
    if !is_identifier(module_name) {
        return Err(HdlError::InvalidIdentifier(module_name.to_string()));
    }
    if net.nodes().is_empty() {
        return Err(HdlError::EmptyNetlist);
    }
    net.validate()?;
    Ok(())
}

fn net_expr(net: &LutNetlist, id: NetId, input_suffix: &str) -> String {
    match net.graph().drivers()[id.index()] {
        Driver::Input { word, bit } => format!("in_f{word}{input_suffix}[{bit}]"),
        Driver::Const(b) => format!("1'b{}", u8::from(b)),
        Driver::Node { .. } => format!("n{}", id.0),
    }
}

/// `{msb, ..., lsb}` of an LSB-first bit vector.
fn concat(net: &LutNetlist, bits: &[NetId], input_suffix: &str) -> String {
    let parts: Vec<String> = bits.iter().rev().map(|&b| net_expr(net, b, input_suffix)).collect();
    format!("{{{}}}", parts.join(", "))
}

fn header(out: &mut String, net: &LutNetlist, opts: &EmitOptions) {
    let fmt = net.ports().format;
    let n = fmt.frac_bits();
    let w = fmt.width();
    let _ = writeln!(out, "// {} : DWN accelerator for model `{}`", opts.module_name, net.name());
    let _ = writeln!(out, "// Generated netlist: {} LUT nodes of at most {} inputs.", net.nodes().len(), net.lut_size());
    let _ = writeln!(out, "//");
    let _ = writeln!(out, "// Inputs: in_fI is feature I as a two's-complement word of {w} bits in (1,{n})");
    let _ = writeln!(out, "// fixed point: value = signed(word) / 2^{n}, range [-1, 1 - 2^-{n}].");
    let _ = writeln!(out, "// Raw features are normalized first, x' = -1 + 2 (x - min) / ((max - min)(1 + 2^-21))");
    let _ = writeln!(out, "// with x clamped to [min, max], then word = round_half_even(x' * 2^{n}), saturated.");
    match opts.normalization {
        Some(norm) => {
            let _ = writeln!(out, "// Normalization statistics (min, max) per feature:");
            for (i, (lo, hi)) in norm.min.iter().zip(&norm.max).enumerate() {
                let _ = writeln!(out, "//   in_f{i}: ({lo:e}, {hi:e})");
            }
        }
        None => {
            let _ = writeln!(out, "// No normalization statistics were recorded with the model.");
        }
    }
    let _ = writeln!(out, "// Outputs: class_idx is the winning class (lowest index on ties), max_val its popcount.");
    if opts.registered_io {
        let _ = writeln!(out, "// Inputs and outputs are registered on posedge clk: results appear two cycles later.");
    } else {
        let _ = writeln!(out, "// Purely combinational.");
    }
    out.push('\n');
}

/// Emits one Verilog module for `net`.
pub fn emit_verilog(net: &LutNetlist, opts: &EmitOptions) -> Result<String, HdlError> {
    check_emittable(net, opts.module_name)?;
    let ports = net.ports();
    let w = ports.width();
    let q = ports.class_idx.len();
    let p = ports.max_val.len();
    let reg = opts.registered_io;
    let suffix = if reg { "_r" } else { "" };

    let mut out = String::new();
    header(&mut out, net, opts);

    let mut port_lines = Vec::new();
    if reg {
        port_lines.push("input wire clk".to_string());
    }
    for f in 0..ports.inputs.len() {
        port_lines.push(format!("input wire signed [{}:0] in_f{f}", w - 1));
    }
    let out_kind = if reg { "reg" } else { "wire" };
    port_lines.push(format!("output {out_kind} [{}:0] class_idx", q - 1));
    port_lines.push(format!("output {out_kind} [{}:0] max_val", p - 1));
    let _ = writeln!(out, "module {} (", opts.module_name);
    let _ = writeln!(out, "  {}\n);", port_lines.join(",\n  "));

    if reg {
        out.push('\n');
        for f in 0..ports.inputs.len() {
            let _ = writeln!(out, "  reg signed [{}:0] in_f{f}_r;", w - 1);
        }
    }

    let mut section = None;
    for (i, node) in net.nodes().iter().enumerate() {
        if section != Some(node.component) {
            section = Some(node.component);
            let _ = writeln!(out, "\n  // {}", node.component.name());
        }
        let size = node.table.len();
        let _ = writeln!(out, "  localparam [{}:0] T{i} = {size}'h{};", size - 1, node.table.to_hex());
        let _ = writeln!(out, "  wire n{};", node.output.0);
        let _ = writeln!(
            out,
            "  assign n{} = T{i}[{}];",
            node.output.0,
            concat(net, &node.inputs, suffix)
        );
    }

    out.push('\n');
    let idx = concat(net, &ports.class_idx, suffix);
    let val = concat(net, &ports.max_val, suffix);
    if reg {
        let _ = writeln!(out, "  wire [{}:0] class_idx_c;", q - 1);
        let _ = writeln!(out, "  wire [{}:0] max_val_c;", p - 1);
        let _ = writeln!(out, "  assign class_idx_c = {idx};");
        let _ = writeln!(out, "  assign max_val_c = {val};");
        out.push('\n');
        let _ = writeln!(out, "  always @(posedge clk) begin");
        for f in 0..ports.inputs.len() {
            let _ = writeln!(out, "    in_f{f}_r <= in_f{f};");
        }
        let _ = writeln!(out, "    class_idx <= class_idx_c;");
        let _ = writeln!(out, "    max_val <= max_val_c;");
        let _ = writeln!(out, "  end");
    } else {
        let _ = writeln!(out, "  assign class_idx = {idx};");
        let _ = writeln!(out, "  assign max_val = {val};");
    }
    let _ = writeln!(out, "endmodule");
    Ok(out)
}

/// Input mantissas (one per feature) and the outputs they must produce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestVector {
    pub inputs: Vec<i64>,
    pub expected: Prediction,
}

/// `count` uniformly random input vectors with expectations from the mapped
/// netlist interpreter.
pub fn golden_vectors(net: &LutNetlist, count: usize, seed: u64) -> Result<Vec<TestVector>, HdlError> {
    let fmt = net.ports().format;
    let features = net.ports().inputs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<Vec<i64>> = (0..count)
        .map(|_| {
            (0..features)
                .map(|_| rng.random_range(fmt.min_mantissa()..=fmt.max_mantissa()))
                .collect()
        })
        .collect();
    let expected = net.interpret_many(&inputs)?;
    Ok(inputs
        .into_iter()
        .zip(expected)
        .map(|(inputs, expected)| TestVector { inputs, expected })
        .collect())
}

/// Recomputes every expectation with the netlist interpreter.
pub fn with_golden_expectations(net: &LutNetlist, inputs: Vec<Vec<i64>>) -> Result<Vec<TestVector>, HdlError> {
    inputs
        .into_iter()
        .map(|inputs| {
            let expected = interpret_luts(net, &inputs)?;
            Ok(TestVector { inputs, expected })
        })
        .collect()
}

/// Testbench driving `module_name` with `vectors`. It prints one `FAIL` line
/// per mismatching vector, then a `PASS` or `FAIL` summary, and calls
/// `$fatal(1)` if anything mismatched.
pub fn emit_testbench(
    net: &LutNetlist,
    vectors: &[TestVector],
    module_name: &str,
    registered_io: bool,
) -> Result<String, HdlError> {
    check_emittable(net, module_name)?;
    if vectors.is_empty() {
        return Err(HdlError::NoVectors);
    }
    let ports = net.ports();
    let fmt = ports.format;
    let features = ports.inputs.len();
    for (index, v) in vectors.iter().enumerate() {
        if v.inputs.len() != features {
            return Err(HdlError::VectorShape {
                index,
                expected: features,
                found: v.inputs.len(),
            });
        }
        ports.check_inputs(&v.inputs)?;
    }
    let w = ports.width();
    let q = ports.class_idx.len();
    let p = ports.max_val.len();

    let mut out = String::new();
    let _ = writeln!(out, "// Self-checking testbench for {module_name}: {} vectors.", vectors.len());
    let _ = writeln!(out, "// Expected outputs come from the bit-exact netlist interpreter.");
    let _ = writeln!(out, "`timescale 1ns/1ps");
    let _ = writeln!(out, "module {module_name}_tb;");
    if registered_io {
        let _ = writeln!(out, "  reg clk = 1'b0;");
        let _ = writeln!(out, "  always #5 clk = ~clk;");
    }
    for f in 0..features {
        let _ = writeln!(out, "  reg signed [{}:0] in_f{f};", w - 1);
    }
    let _ = writeln!(out, "  wire [{}:0] class_idx;", q - 1);
    let _ = writeln!(out, "  wire [{}:0] max_val;", p - 1);
    let _ = writeln!(out, "  integer errors = 0;");
    let _ = writeln!(out, "  integer checks = 0;");
    out.push('\n');

    let mut conns = Vec::new();
    if registered_io {
        conns.push(".clk(clk)".to_string());
    }
    conns.extend((0..features).map(|f| format!(".in_f{f}(in_f{f})")));
    conns.push(".class_idx(class_idx)".to_string());
    conns.push(".max_val(max_val)".to_string());
    let _ = writeln!(out, "  {module_name} dut ({});", conns.join(", "));
    out.push('\n');

    let _ = writeln!(out, "  task check(input integer id, input [{}:0] exp_idx, input [{}:0] exp_val);", q - 1, p - 1);
    let _ = writeln!(out, "    begin");
    let _ = writeln!(out, "      checks = checks + 1;");
    let _ = writeln!(out, "      if (class_idx !== exp_idx || max_val !== exp_val) begin");
    let _ = writeln!(out, "        errors = errors + 1;");
    let _ = writeln!(
        out,
        "        $display(\"FAIL vector %0d: class_idx=%0d max_val=%0d, expected %0d %0d\", id, class_idx, max_val, exp_idx, exp_val);"
    );
    let _ = writeln!(out, "      end");
    let _ = writeln!(out, "    end");
    let _ = writeln!(out, "  endtask");
    out.push('\n');

    let _ = writeln!(out, "  initial begin");
    for (i, v) in vectors.iter().enumerate() {
        let assigns: Vec<String> = v
            .inputs
            .iter()
            .enumerate()
            .map(|(f, &m)| format!("in_f{f} = {w}'h{:x};", fmt.to_word(m)))
            .collect();
        let wait = if registered_io {
            "@(posedge clk); @(posedge clk); #1"
        } else {
            "#1"
        };
        let _ = writeln!(
            out,
            "    {} {wait} check({i}, {q}'d{}, {p}'d{});",
            assigns.join(" "),
            v.expected.class,
            v.expected.score
        );
    }
    let _ = writeln!(out, "    if (errors == 0) begin");
    let _ = writeln!(out, "      $display(\"PASS: %0d/%0d vectors matched\", checks, checks);");
    let _ = writeln!(out, "    end else begin");
    let _ = writeln!(out, "      $display(\"FAIL: %0d of %0d vectors mismatched\", errors, checks);");
    let _ = writeln!(out, "      $fatal(1);");
    let _ = writeln!(out, "    end");
    let _ = writeln!(out, "    $finish;");
    let _ = writeln!(out, "  end");
    let _ = writeln!(out, "endmodule");
    Ok(out)
}

/// Vectors as CSV: signed input mantissas, then the expected outputs.
pub fn vectors_csv(vectors: &[TestVector], features: usize) -> String {
    let mut out = String::new();
    for f in 0..features {
        let _ = write!(out, "in_f{f},");
    }
    out.push_str("class_idx,max_val\n");
    for v in vectors {
        for m in &v.inputs {
            let _ = write!(out, "{m},");
        }
        let _ = writeln!(out, "{},{}", v.expected.class, v.expected.score);
    }
    out
}

/// Parses [`vectors_csv`] output.
pub fn parse_vectors_csv(text: &str) -> Result<Vec<TestVector>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty vectors file")?;
    let columns = header.split(',').count();
    if columns < 3 {
        return Err("vectors header needs inputs plus class_idx,max_val".into());
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != columns {
                return Err(format!("line {}: expected {columns} fields", i + 2));
            }
            let bad = |e: std::num::ParseIntError| format!("line {}: {e}", i + 2);
            let inputs = fields[..columns - 2]
                .iter()
                .map(|s| s.parse::<i64>().map_err(bad))
                .collect::<Result<_, _>>()?;
            Ok(TestVector {
                inputs,
                expected: Prediction {
                    class: fields[columns - 2].parse().map_err(bad)?,
                    score: fields[columns - 1].parse().map_err(bad)?,
                },
            })
        })
        .collect()
}

/// Number of per-node truth-table assignments in emitted text.
pub fn count_lut_assignments(verilog: &str) -> usize {
    verilog
        .lines()
        .filter(|l| l.trim_start().starts_with("assign n"))
        .count()
}
