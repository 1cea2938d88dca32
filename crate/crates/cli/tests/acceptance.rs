//! Acceptance gate. Every criterion prints one `PASS` or `FAIL` line; the
//! process exits non-zero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use dwn_core::dataset::normalize_dataset;
use dwn_core::encoder::{distributive_thresholds, encode_feature, uniform_thresholds};
use dwn_core::fixed::FixedPointFormat;
use dwn_core::hdl::{count_lut_assignments, parse_vectors_csv};
use dwn_core::model::load_model;
use dwn_core::netlist::{
    build_macro_netlist, interpret_luts, lower_to_luts, popcount_luts, Component,
    ComponentBreakdown, LutGraph, MacroKind,
};
use dwn_core::quantize::{ptq_search, quantize_model, quantize_value, quantized_accuracy, QuantizeError};
use dwn_core::simulator::{accuracy, argmax, infer, ClassScores};
use dwn_core::trainer::{fit_toy, gaussian_blobs, random_model, BlobSpec, FitOptions};
use dwn_core::{Dataset, DwnModel, ModelConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn blobs(cfg: &ModelConfig, samples: usize, seed: u64) -> Dataset {
    normalize_dataset(&gaussian_blobs(BlobSpec {
        samples,
        features: cfg.num_features,
        classes: cfg.num_classes,
        spread: 1.0,
        seed,
    }))
    .unwrap()
}

/// Toy-trained model of a preset shape at `(1, n)`. Six-bit inputs only
/// hold 64 distinct thresholds, so `T` is capped at the format's capacity.
fn toy_model(preset: &str, n: u32, seed: u64) -> DwnModel {
    let mut cfg = ModelConfig::preset(preset).unwrap();
    cfg.bits_per_feature = cfg.bits_per_feature.min(1 << (n + 1));
    let data = blobs(&cfg, 300, seed);
    let model = fit_toy(&data, &cfg, FitOptions { seed, hill_climb_budget: 8 }).unwrap();
    quantize_model(&model, n).unwrap()
}

fn golden_chain() -> Outcome {
    let start = Instant::now();
    let mut total = 0;
    for preset in ["sm-10", "sm-50"] {
        for n in [5, 7, 8] {
            let model = toy_model(preset, n, 100 + u64::from(n));
            let fmt = model.threshold_format().fixed().unwrap();
            let macro_net = build_macro_netlist(&model).map_err(|e| e.to_string())?;
            let luts = lower_to_luts(&macro_net).map_err(|e| e.to_string())?;
            let mut rng = ChaCha8Rng::seed_from_u64(u64::from(n));
            let vectors: Vec<Vec<i64>> = (0..10_000)
                .map(|_| (0..16).map(|_| rng.random_range(fmt.min_mantissa()..=fmt.max_mantissa())).collect())
                .collect();
            let via_macro = macro_net.interpret_many(&vectors).map_err(|e| e.to_string())?;
            let via_luts = luts.interpret_many(&vectors).map_err(|e| e.to_string())?;
            for (i, v) in vectors.iter().enumerate() {
                let x: Vec<f64> = v.iter().map(|&m| fmt.value_of(m)).collect();
                let golden = infer(&model, &x).map_err(|e| e.to_string())?;
                ensure(via_macro[i] == golden && via_luts[i] == golden, || {
                    format!("{preset} n={n} vector {i}: infer {golden:?}, macro {:?}, luts {:?}", via_macro[i], via_luts[i])
                })?;
            }
            total += vectors.len();
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("{total} vectors over 6 models agree exactly, {secs:.1} s (T capped at 64 for 6-bit inputs)"))
}

fn structural_counts() -> Outcome {
    let model = toy_model("sm-50", 7, 1);
    let macro_net = build_macro_netlist(&model).map_err(|e| e.to_string())?;
    let ge = macro_net.count(|n| matches!(n.kind, MacroKind::GeConst { .. }));
    let idx = macro_net.count(|n| matches!(n.kind, MacroKind::IdxCmp { .. }));
    let luts = lower_to_luts(&macro_net).map_err(|e| e.to_string())?;
    let lut_layer = luts.count(Component::LutLayer);
    ensure(lut_layer == 50, || format!("lut_layer = {lut_layer}"))?;
    ensure(ge == 3200, || format!("{ge} comparator outputs"))?;
    ensure(idx == 4, || format!("{idx} index comparators"))?;
    // every comparator output is a distinct net driven by an encoder LUT
    let enc_outputs = macro_net
        .nodes()
        .iter()
        .filter(|n| n.component == Component::Encoder)
        .map(|n| n.outputs.len())
        .sum::<usize>();
    ensure(enc_outputs == 3200, || format!("{enc_outputs} encoder output nets"))?;
    Ok("sm-50: 50 lut_layer nodes, 3200 comparator outputs, 4 index comparators".into())
}

fn thermometer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..10_000 {
        let t = rng.random_range(1..=200);
        let mut row: Vec<f64> = (0..t).map(|_| rng.random_range(-1.0..1.0)).collect();
        row.sort_by(f64::total_cmp);
        row.dedup();
        let x = rng.random_range(-1.1..1.1);
        let y = if rng.random_bool(0.3) { row[rng.random_range(0..row.len())] } else { rng.random_range(x..1.2) };
        let (cx, cy) = (encode_feature(x, &row), encode_feature(y.max(x), &row));
        ensure(cx.is_contiguous() && cy.is_contiguous(), || format!("case {case}: non-contiguous code"))?;
        ensure(cx.popcount() <= cy.popcount(), || format!("case {case}: not monotone"))?;
    }
    let mut worst: f64 = 0.0;
    for (lo, hi, t) in [(-1.0, 1.0, 200), (2.0, 5.0, 16)] {
        let values: Vec<f64> = (0..100_000).map(|_| rng.random_range(lo..hi)).collect();
        let d = distributive_thresholds(&values, t).map_err(|e| e.to_string())?;
        let u = uniform_thresholds(lo, hi, t).map_err(|e| e.to_string())?;
        for (a, b) in d.iter().zip(&u) {
            worst = worst.max((a - b).abs() / (hi - lo));
        }
    }
    ensure(worst <= 0.02, || format!("distributive vs uniform off by {:.4} of range", worst))?;
    Ok(format!("10^4 codes contiguous and monotone; distributive within {:.4} of range (limit 0.02)", worst))
}

fn quantization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_ratio: f64 = 0.0;
    for n in 2..=12u32 {
        let fmt = FixedPointFormat::new(n).map_err(|e| e.to_string())?;
        let bound = 2f64.powi(-(n as i32 + 1));
        for _ in 0..100_000 {
            let x = rng.random_range(-1.0..=fmt.max_value());
            let q = quantize_value(x, fmt);
            worst_ratio = worst_ratio.max((q - x).abs() / bound);
            ensure((q - x).abs() <= bound, || format!("n={n}: |{q} - {x}| > {bound}"))?;
            ensure(quantize_value(q, fmt) == q, || format!("n={n}: not idempotent at {x}"))?;
        }
        let top = 1.0 - 2f64.powi(-(n as i32));
        for x in [top, 1.0, 3.0, f64::INFINITY] {
            ensure(quantize_value(x, fmt) == top, || format!("n={n}: {x} does not saturate to {top}"))?;
        }
        for x in [-1.0, -1.5, f64::NEG_INFINITY] {
            ensure(quantize_value(x, fmt) == -1.0, || format!("n={n}: {x} does not saturate to -1"))?;
        }
    }
    Ok(format!("11 widths x 10^5 values, worst error {worst_ratio:.3} of the bound; saturation and idempotence exact"))
}

fn ptq_oracle() -> Outcome {
    let cfg = ModelConfig {
        name: "ptq".into(),
        num_features: 8,
        bits_per_feature: 50,
        lut_arity: 6,
        num_classes: 3,
        luts_per_class: 10,
    };
    let data = blobs(&cfg, 600, 4);
    let model = fit_toy(&data, &cfg, FitOptions { seed: 4, hill_climb_budget: 16 }).unwrap();
    let base = accuracy(&model, &data).map_err(|e| e.to_string())?;
    let n_max = 15;
    let sweep: Vec<(u32, Option<f64>)> = (1..=n_max)
        .rev()
        .map(|n| match quantized_accuracy(&model, &data, n) {
            Ok(a) => (n, Some(a)),
            Err(QuantizeError::Capacity { .. }) => (n, None),
            Err(e) => panic!("{e}"),
        })
        .collect();
    let mut checked = 0;
    for baseline in [base, base - 0.01, base - 0.05, 0.6] {
        let mut expected = None;
        let mut stop = sweep.len();
        for (i, &(n, a)) in sweep.iter().enumerate() {
            if a.is_some_and(|a| a >= baseline) {
                expected = Some(n);
            } else {
                stop = i + 1;
                break;
            }
        }
        let r = ptq_search(&model, &data, baseline, n_max).map_err(|e| e.to_string())?;
        ensure(r.chosen_frac_bits() == expected, || {
            format!("baseline {baseline}: search chose {:?}, oracle {expected:?}", r.chosen_frac_bits())
        })?;
        let replay: Vec<(u32, Option<f64>)> = r.trace.iter().map(|s| (s.frac_bits, s.accuracy)).collect();
        ensure(replay == sweep[..stop], || format!("baseline {baseline}: trace differs from the sweep"))?;
        checked += 1;
    }
    Ok(format!("{checked} baselines: chosen n and trace match the exhaustive sweep"))
}

fn popcount() -> Outcome {
    let mut vectors = 0;
    for b in 1..=12usize {
        let mut g = LutGraph::new();
        let ins: Vec<_> = (0..b).map(|i| g.add_input(0, i)).collect();
        let outs = popcount_luts(&mut g, &ins, 6, Component::Popcount);
        for x in 0u32..1 << b {
            let v = g.evaluate(|_, bit| (x >> bit) & 1 == 1);
            let got = outs.iter().enumerate().fold(0u32, |a, (i, o)| a | (u32::from(v[o.index()]) << i));
            ensure(got == x.count_ones(), || format!("B={b}, input {x:b}: got {got}"))?;
            vectors += 1;
        }
    }
    Ok(format!("{vectors} inputs over B = 1..12 counted exactly"))
}

fn argmax_ties() -> Outcome {
    let mut cases = 0;
    for code in 0..4u32.pow(5) {
        let counts: Vec<u32> = (0..5).map(|i| (code >> (2 * i)) & 3).collect();
        let mut best = 0;
        for c in 1..5 {
            if counts[c] > counts[best] {
                best = c;
            }
        }
        let p = argmax(&ClassScores::new(counts.clone()).unwrap());
        ensure(p.class == best && p.score == counts[best], || format!("{counts:?}: tree gave {p:?}"))?;
        cases += 1;
    }
    Ok(format!("{cases} cases, tree = lowest-index linear scan"))
}

fn run_dwn(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dwn"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("dwn {args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn pipeline_smoke() -> Outcome {
    let tmp = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let d = tmp.path();
    run_dwn(d, &["--seed", "7", "synth-blobs", "--samples", "1000", "--classes", "2", "--out", "toy.csv"])?;
    let out = run_dwn(
        d,
        &["--seed", "7", "--json", "pipeline", "--data", "toy.csv", "--preset", "sm-10", "--baseline", "0.9", "--out-dir", "build"],
    )?;
    let summary: serde_json::Value = serde_json::from_str(&out).map_err(|e| e.to_string())?;
    let train = summary["train_accuracy"].as_f64().ok_or("no train_accuracy")?;
    ensure(train >= 0.9, || format!("training accuracy {train}"))?;
    let n = summary["ptq"]["outcome"]["frac_bits"].as_u64().ok_or("no PTQ result")?;
    for f in ["model.json", "breakdown.csv", "sm10.v", "sm10_tb.v", "vectors.csv", "ptq_trace.csv"] {
        ensure(d.join("build").join(f).exists(), || format!("{f} missing"))?;
    }
    let read = |f: &str| std::fs::read_to_string(d.join("build").join(f)).map_err(|e| e.to_string());
    let model = load_model(&read("model.json")?).map_err(|e| e.to_string())?;
    let net = lower_to_luts(&build_macro_netlist(&model).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let verilog = read("sm10.v")?;
    ensure(count_lut_assignments(&verilog) == net.nodes().len(), || "Verilog does not match the netlist".into())?;
    ensure(read("sm10_tb.v")?.contains("$fatal"), || "testbench lacks a failure exit".into())?;
    let vectors = parse_vectors_csv(&read("vectors.csv")?)?;
    for (i, v) in vectors.iter().enumerate() {
        let p = interpret_luts(&net, &v.inputs).map_err(|e| e.to_string())?;
        ensure(p == v.expected, || format!("vector {i}: file says {:?}, netlist gives {p:?}", v.expected))?;
    }
    Ok(format!(
        "training accuracy {train}, PTQ chose {}-bit inputs, {} vectors match interpret_luts",
        n + 1,
        vectors.len()
    ))
}

fn encoder_dominance() -> Outcome {
    let mut shares = Vec::new();
    for preset in ["sm-10", "sm-50", "md-360"] {
        let cfg = ModelConfig::preset(preset).unwrap();
        for w in [6, 8, 9] {
            let b = ComponentBreakdown::estimate(&cfg, w, 6);
            let rest = b.lut_layer + b.popcount + b.argmax;
            ensure(b.encoder > rest, || format!("{preset} w={w}: encoder {} <= rest {rest}", b.encoder))?;
        }
        shares.push(format!("{preset} {:.0}%", 100.0 * ComponentBreakdown::estimate(&cfg, 9, 6).encoder_share()));
    }
    let lg = ModelConfig::preset("lg-2400").unwrap();
    let b = ComponentBreakdown::estimate(&lg, 9, 6);
    ensure(b.encoder < b.lut_layer + b.popcount, || {
        format!("lg-2400 w=9: encoder {} >= lut_layer + popcount {}", b.encoder, b.lut_layer + b.popcount)
    })?;
    // the estimator must describe the netlists the mapper actually builds
    for preset in ["sm-10", "sm-50", "md-360", "lg-2400"] {
        let cfg = ModelConfig::preset(preset).unwrap();
        let model = quantize_model(&random_model(&cfg, 5).unwrap(), 8).map_err(|e| e.to_string())?;
        let net = lower_to_luts(&build_macro_netlist(&model).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let actual = dwn_core::netlist::resource_report(&net, &model);
        ensure(actual == ComponentBreakdown::estimate(&cfg, 9, 6), || format!("{preset}: estimate differs from netlist"))?;
    }
    Ok(format!(
        "encoder share at w=9: {}; lg-2400 encoder {} < lut_layer + popcount {}",
        shares.join(", "),
        b.encoder,
        b.lut_layer + b.popcount
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("golden-chain equivalence", golden_chain),
        ("structural counts", structural_counts),
        ("thermometer properties", thermometer),
        ("quantization", quantization),
        ("PTQ oracle", ptq_oracle),
        ("popcount lowering", popcount),
        ("argmax tie-break", argmax_ties),
        ("end-to-end pipeline smoke", pipeline_smoke),
        ("encoder-dominance trend", encoder_dominance),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let result = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panicked".into());
                Err(format!("panic: {msg}"))
            });
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
