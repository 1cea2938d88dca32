mod common;

use std::time::Instant;

use common::{random_vectors, toy_model};
use dwn_core::netlist::{build_macro_netlist, lower_to_luts, lower_with, MappingTarget, NetlistError};
use dwn_core::quantize::quantize_model;
use dwn_core::trainer::{fit_toy, FitOptions};
use dwn_core::simulator::{infer, infer_mantissas};

fn check_chain(preset: &str, n: u32) {
    let model = toy_model(preset, n, 11 + u64::from(n));
    let fmt = model.threshold_format().fixed().unwrap();
    let macro_net = build_macro_netlist(&model).unwrap();
    let luts = lower_to_luts(&macro_net).unwrap();
    let vectors = random_vectors(&model, 10_000, u64::from(n));

    let via_macro = macro_net.interpret_many(&vectors).unwrap();
    let via_luts = luts.interpret_many(&vectors).unwrap();
    let mut classes = std::collections::BTreeSet::new();
    for (i, v) in vectors.iter().enumerate() {
        let values: Vec<f64> = v.iter().map(|&m| fmt.value_of(m)).collect();
        let golden = infer(&model, &values).unwrap();
        assert_eq!(infer_mantissas(&model, v).unwrap(), golden, "{preset} n={n} vector {i}");
        assert_eq!(via_macro[i], golden, "{preset} n={n} vector {i}: macro netlist");
        assert_eq!(via_luts[i], golden, "{preset} n={n} vector {i}: mapped netlist");
        classes.insert(golden.class);
    }
    // a chain stuck on one class would prove little
    assert!(classes.len() > 1, "{preset} n={n} only ever predicts {classes:?}");
}

#[test]
fn simulator_macro_and_mapped_netlists_agree() {
    let start = Instant::now();
    for preset in ["sm-10", "sm-50"] {
        for n in [5, 7, 8] {
            check_chain(preset, n);
        }
    }
    assert!(start.elapsed().as_secs() < 60, "took {:?}", start.elapsed());
}

#[test]
fn every_mapping_target_preserves_behaviour() {
    let mut cfg = common::shape_at("sm-10", 6);
    cfg.lut_arity = 3;
    let data = common::blobs(&cfg, 300, 4);
    let model = fit_toy(&data, &cfg, FitOptions { seed: 4, hill_climb_budget: 8 }).unwrap();
    let model = quantize_model(&model, 6).unwrap();
    let macro_net = build_macro_netlist(&model).unwrap();
    let vectors = random_vectors(&model, 2_000, 9);
    let expected = macro_net.interpret_many(&vectors).unwrap();
    for k in 3..=6 {
        let luts = lower_with(&macro_net, MappingTarget::new(k).unwrap()).unwrap();
        luts.validate().unwrap();
        assert!(luts.graph().max_arity() <= k);
        assert_eq!(luts.interpret_many(&vectors).unwrap(), expected, "K={k}");
    }
}

#[test]
fn model_lut_wider_than_target_is_rejected() {
    let macro_net = build_macro_netlist(&toy_model("sm-10", 6, 3)).unwrap();
    assert!(matches!(
        lower_with(&macro_net, MappingTarget::new(4).unwrap()),
        Err(NetlistError::ArityExceedsTarget { arity: 6, lut_size: 4 })
    ));
}
