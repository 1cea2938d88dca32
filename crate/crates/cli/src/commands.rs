use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use dwn_core::dataset::{infer_num_features, load_dataset, normalize_dataset};
use dwn_core::encoder::{distributive_thresholds, uniform_thresholds};
use dwn_core::hdl::{
    emit_testbench, emit_verilog, golden_vectors, module_name_for, vectors_csv,
    with_golden_expectations, EmitOptions, TestVector,
};
use dwn_core::model::{load_model, save_model};
use dwn_core::netlist::{
    breakdown_csv, build_macro_netlist, lower_with, resource_report, ComponentBreakdown,
    LutNetlist, MappingTarget,
};
use dwn_core::quantize::{ptq_search, quantize_dataset, quantize_model, PtqResult, QuantizeError};
use dwn_core::simulator::{accuracy, infer_mantissas, predict_all};
use dwn_core::trainer::{fit_toy, gaussian_blobs, BlobSpec, FitOptions};
use dwn_core::{Dataset, DwnModel, ModelConfig};

use crate::error::{code, CliError};
use crate::{
    BlobArgs, Cli, Command, DataArgs, DataModelArgs, GenerateArgs, HdlArgs, PipelineArgs, PtqArgs,
    QuantizeArgs, ReportArgs, ShapeArgs, SimulateArgs, ThresholdMode, ThresholdsArgs, TrainArgs,
};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Thresholds(a) => thresholds(cli, a),
        Command::SynthBlobs(a) => synth_blobs(cli, a),
        Command::TrainToy(a) => train_toy(cli, a),
        Command::Quantize(a) => quantize(cli, a),
        Command::Ptq(a) => ptq(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Accuracy(a) => print_accuracy(cli, a),
        Command::Generate(a) => generate(cli, a),
        Command::Report(a) => report(cli, a),
        Command::Pipeline(a) => pipeline(cli, a),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::read(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::write(path, e))
}

fn write_or_print(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Prints `value` as JSON, or `text` otherwise.
fn emit(cli: &Cli, value: impl Serialize, text: impl FnOnce() -> String) -> Result<()> {
    if cli.json {
        println!("{}", serde_json::to_string(&value)?);
    } else {
        println!("{}", text());
    }
    Ok(())
}

fn read_model(path: &PathBuf) -> Result<DwnModel> {
    load_model(&read(path)?).map_err(|e| CliError::from(e).in_file(path))
}

fn read_data(args: &DataArgs) -> Result<Dataset> {
    let text = read(&args.data)?;
    let features = infer_num_features(&text, args.skip_header).ok_or_else(|| {
        CliError::validation(format!("{}: no data rows with at least one feature", args.data.display()))
    })?;
    load_dataset(&text, features, args.skip_header).map_err(|e| CliError::from(e).in_file(&args.data))
}

/// Maps raw data into the model's input domain: the model's recorded
/// normalization if it has one, otherwise statistics fitted on `raw`.
fn prepare(model: &DwnModel, raw: &Dataset) -> Result<Dataset> {
    if raw.num_features() != model.num_features() {
        return Err(CliError::validation(format!(
            "dataset has {} features, model `{}` expects {}",
            raw.num_features(),
            model.name(),
            model.num_features()
        )));
    }
    if raw.is_empty() {
        return Err(CliError::validation("dataset is empty"));
    }
    Ok(match model.normalization() {
        Some(norm) => norm.apply_dataset(raw)?,
        None => {
            log::warn!("model has no normalization statistics; fitting them on the given data");
            normalize_dataset(raw)?
        }
    })
}

/// Normalized data as the model sees it: quantized when the model is fixed-point.
fn model_inputs(model: &DwnModel, raw: &Dataset) -> Result<Dataset> {
    let data = prepare(model, raw)?;
    Ok(match model.threshold_format().fixed() {
        Some(fmt) => quantize_dataset(&data, fmt.frac_bits())?,
        None => data,
    })
}

fn shape(args: &ShapeArgs) -> Result<Option<ModelConfig>> {
    if let Some(name) = &args.preset {
        return Ok(ModelConfig::preset(name));
    }
    let Some(text) = &args.custom_shape else {
        return Ok(None);
    };
    let v: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::usage(format!("--custom-shape `{text}`: expected five integers F,T,k,C,luts_per_class")))?;
    let [f, t, k, c, lpc] = v[..] else {
        return Err(CliError::usage(format!("--custom-shape `{text}`: expected five integers F,T,k,C,luts_per_class")));
    };
    let cfg = ModelConfig {
        name: format!("custom-{}", c * lpc),
        num_features: f,
        bits_per_feature: t,
        lut_arity: k,
        num_classes: c,
        luts_per_class: lpc,
    };
    cfg.validate()?;
    Ok(Some(cfg))
}

fn required_shape(args: &ShapeArgs) -> Result<ModelConfig> {
    shape(args)?.ok_or_else(|| CliError::usage("give --preset or --custom-shape"))
}

fn target(lut_size: usize) -> Result<MappingTarget> {
    MappingTarget::new(lut_size).map_err(|e| CliError::usage(e.to_string()))
}

fn thresholds(cli: &Cli, a: &ThresholdsArgs) -> Result<()> {
    let raw = read_data(&a.data)?;
    let data = if a.raw { raw } else { normalize_dataset(&raw)? };
    let mut out = String::from("feature,index,threshold,mode\n");
    let mut rows = 0;
    for f in 0..data.num_features() {
        let column = data.column(f);
        let mut sets = Vec::new();
        if a.mode != ThresholdMode::Distributive {
            let (lo, hi) = if a.raw {
                let lo = column.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            } else {
                (-1.0, 1.0)
            };
            sets.push(("uniform", uniform_thresholds(lo, hi, a.bits)?));
        }
        if a.mode != ThresholdMode::Uniform {
            sets.push(("distributive", distributive_thresholds(&column, a.bits)?));
        }
        for (mode, ts) in sets {
            for (j, t) in ts.iter().enumerate() {
                out.push_str(&format!("{f},{j},{t},{mode}\n"));
                rows += 1;
            }
        }
    }
    if a.out.is_some() || !cli.json {
        write_or_print(a.out.as_ref(), &out)?;
    }
    if cli.json {
        println!("{}", json!({ "features": data.num_features(), "rows": rows }));
    }
    Ok(())
}

fn synth_blobs(cli: &Cli, a: &BlobArgs) -> Result<()> {
    if a.samples == 0 || a.features == 0 || a.classes == 0 {
        return Err(CliError::usage("--samples, --features and --classes must be positive"));
    }
    if !(a.spread.is_finite() && a.spread >= 0.0) {
        return Err(CliError::usage("--spread must be a non-negative number"));
    }
    let data = gaussian_blobs(BlobSpec {
        samples: a.samples,
        features: a.features,
        classes: a.classes,
        spread: a.spread,
        seed: cli.seed,
    });
    write(&a.out, &dwn_core::dataset::dataset_to_csv(&data))?;
    emit(cli, json!({ "samples": a.samples, "out": a.out }), || {
        format!("wrote {} samples to {}", a.samples, a.out.display())
    })
}

fn fit(cli: &Cli, data: &Dataset, cfg: &ModelConfig, budget: usize) -> Result<DwnModel> {
    if data.num_features() != cfg.num_features {
        return Err(CliError::validation(format!(
            "dataset has {} features, shape {} expects {}",
            data.num_features(),
            cfg.name,
            cfg.num_features
        )));
    }
    Ok(fit_toy(
        data,
        cfg,
        FitOptions {
            seed: cli.seed,
            hill_climb_budget: budget,
        },
    )?)
}

fn train_toy(cli: &Cli, a: &TrainArgs) -> Result<()> {
    let cfg = required_shape(&a.shape)?;
    let data = normalize_dataset(&read_data(&a.data)?)?;
    let model = fit(cli, &data, &cfg, a.hill_climb_budget)?;
    let acc = accuracy(&model, &data)?;
    write(&a.out, &save_model(&model))?;
    emit(cli, json!({ "model": a.out, "train_accuracy": acc }), || {
        format!("training accuracy {acc}; model written to {}", a.out.display())
    })
}

fn quantize(cli: &Cli, a: &QuantizeArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let q = quantize_model(&model, a.frac_bits)?;
    write(&a.out, &save_model(&q))?;
    emit(cli, json!({ "frac_bits": a.frac_bits, "width": a.frac_bits + 1, "out": a.out }), || {
        format!("thresholds quantized to (1,{}); model written to {}", a.frac_bits, a.out.display())
    })
}

fn search(model: &DwnModel, data: &Dataset, baseline: f64, n_max: u32) -> Result<PtqResult> {
    if model.threshold_format().fixed().is_some() {
        return Err(CliError::validation("bit-width search needs a real-valued model"));
    }
    Ok(ptq_search(model, data, baseline, n_max)?)
}

fn no_feasible(r: &PtqResult) -> CliError {
    CliError::new(
        code::NO_FEASIBLE_WIDTH,
        format!(
            "no input width meets baseline {}: accuracy at n={} was {}",
            r.baseline,
            r.trace[0].frac_bits,
            r.trace[0].accuracy.map_or("out of capacity".into(), |a| a.to_string())
        ),
    )
}

fn ptq(cli: &Cli, a: &PtqArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let data = prepare(&model, &read_data(&a.data)?)?;
    let baseline = match a.baseline {
        Some(b) => b,
        None => accuracy(&model, &data)?,
    };
    let r = search(&model, &data, baseline, a.n_max)?;
    if let Some(path) = &a.emit_trace {
        write(path, &r.trace_csv())?;
    }
    let Some(n) = r.chosen_frac_bits() else {
        return Err(no_feasible(&r));
    };
    emit(cli, &r, || {
        let acc = r.trace.iter().find(|s| s.frac_bits == n).and_then(|s| s.accuracy).unwrap_or(0.0);
        format!("n = {n} (width {}), accuracy {acc} >= baseline {baseline}", n + 1)
    })
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    let model = read_model(&a.inner.model)?;
    let data = model_inputs(&model, &read_data(&a.inner.data)?)?;
    let preds = predict_all(&model, &data)?;
    let correct = data
        .samples()
        .iter()
        .zip(&preds)
        .filter(|(s, p)| s.label == p.class)
        .count();
    let acc = correct as f64 / data.len() as f64;
    if let Some(path) = &a.emit_predictions {
        let mut out = String::from("index,label,class,score\n");
        for (i, (s, p)) in data.samples().iter().zip(&preds).enumerate() {
            out.push_str(&format!("{i},{},{},{}\n", s.label, p.class, p.score));
        }
        write(path, &out)?;
    }
    let mut histogram = vec![0usize; model.num_classes()];
    for p in &preds {
        histogram[p.class] += 1;
    }
    emit(
        cli,
        json!({ "samples": data.len(), "correct": correct, "accuracy": acc, "predicted_per_class": histogram }),
        || format!("{correct}/{} correct (accuracy {acc}); predictions per class {histogram:?}", data.len()),
    )
}

fn print_accuracy(cli: &Cli, a: &DataModelArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let data = model_inputs(&model, &read_data(&a.data)?)?;
    let acc = accuracy(&model, &data)?;
    emit(cli, json!({ "accuracy": acc }), || acc.to_string())
}

fn lowered(model: &DwnModel, lut_size: usize) -> Result<LutNetlist> {
    let target = target(lut_size)?;
    Ok(lower_with(&build_macro_netlist(model)?, target)?)
}

struct Emitted {
    module: String,
    verilog: PathBuf,
    testbench: PathBuf,
    vectors: PathBuf,
}

fn write_hdl(model: &DwnModel, net: &LutNetlist, vectors: &[TestVector], out_dir: &Path, hdl: &HdlArgs) -> Result<Emitted> {
    let module = hdl.module_name.clone().unwrap_or_else(|| module_name_for(model.name()));
    let opts = EmitOptions {
        module_name: &module,
        registered_io: hdl.registered_io,
        normalization: model.normalization(),
    };
    let verilog = emit_verilog(net, &opts)?;
    let tb = emit_testbench(net, vectors, &module, hdl.registered_io)?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::write(out_dir, e))?;
    let emitted = Emitted {
        verilog: out_dir.join(format!("{module}.v")),
        testbench: out_dir.join(format!("{module}_tb.v")),
        vectors: out_dir.join("vectors.csv"),
        module,
    };
    write(&emitted.verilog, &verilog)?;
    write(&emitted.testbench, &tb)?;
    write(&emitted.vectors, &vectors_csv(vectors, model.num_features()))?;
    Ok(emitted)
}

fn generate(cli: &Cli, a: &GenerateArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let net = lowered(&model, a.hdl.lut_size)?;
    let vectors = golden_vectors(&net, a.hdl.tb_vectors, cli.seed)?;
    let e = write_hdl(&model, &net, &vectors, &a.out_dir, &a.hdl)?;
    emit(
        cli,
        json!({
            "module": e.module, "verilog": e.verilog, "testbench": e.testbench,
            "vectors": e.vectors, "lut_nodes": net.nodes().len(),
        }),
        || format!("module {} ({} LUT nodes) written to {}", e.module, net.nodes().len(), a.out_dir.display()),
    )
}

fn breakdown_at(model: &DwnModel, width: u32, lut_size: usize) -> Result<ComponentBreakdown> {
    let n = width
        .checked_sub(1)
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::usage(format!("width {width} is too small; widths start at 2")))?;
    match quantize_model(model, n) {
        Ok(q) => Ok(resource_report(&lowered(&q, lut_size)?, &q)),
        Err(QuantizeError::Capacity { .. }) => {
            log::warn!(
                "{} thresholds per feature do not fit {width}-bit inputs; reporting the structural estimate",
                model.bits_per_feature()
            );
            Ok(ComponentBreakdown::estimate(model.config(), width, lut_size))
        }
        Err(e) => Err(e.into()),
    }
}

fn report(cli: &Cli, a: &ReportArgs) -> Result<()> {
    target(a.lut_size)?;
    let rows = match &a.model {
        Some(path) => {
            let model = read_model(path)?;
            a.widths
                .iter()
                .map(|&w| breakdown_at(&model, w, a.lut_size))
                .collect::<Result<Vec<_>>>()?
        }
        None => {
            let cfg = required_shape(&a.shape)?;
            a.widths
                .iter()
                .map(|&w| ComponentBreakdown::estimate(&cfg, w, a.lut_size))
                .collect()
        }
    };
    let csv = breakdown_csv(&rows);
    if a.out.is_some() || !cli.json {
        write_or_print(a.out.as_ref(), &csv)?;
    }
    if cli.json {
        println!("{}", serde_json::to_string(&rows)?);
    }
    Ok(())
}

/// Testbench vectors: the quantized dataset first, then random words.
fn pipeline_vectors(net: &LutNetlist, model: &DwnModel, qdata: &Dataset, count: usize, seed: u64) -> Result<Vec<TestVector>> {
    let fmt = net.ports().format;
    let from_data: Vec<Vec<i64>> = qdata
        .samples()
        .iter()
        .take(count)
        .map(|s| s.features.iter().map(|&x| fmt.quantize_mantissa(x)).collect())
        .collect();
    let mut vectors = with_golden_expectations(net, from_data)?;
    for v in &vectors {
        if infer_mantissas(model, &v.inputs)? != v.expected {
            return Err(CliError::new(code::OTHER, "mapped netlist disagrees with the simulator"));
        }
    }
    let rest = count - vectors.len();
    if rest > 0 {
        vectors.extend(golden_vectors(net, rest, seed)?);
    }
    Ok(vectors)
}

fn pipeline(cli: &Cli, a: &PipelineArgs) -> Result<()> {
    let raw = read_data(&a.data)?;
    let (model, data) = match &a.model {
        Some(path) => {
            let model = read_model(path)?;
            let data = prepare(&model, &raw)?;
            (model, data)
        }
        None => {
            let cfg = required_shape(&a.shape)?;
            let data = normalize_dataset(&raw)?;
            (fit(cli, &data, &cfg, a.hill_climb_budget)?, data)
        }
    };
    let train_accuracy = accuracy(&model, &data)?;
    let baseline = a.baseline.unwrap_or(train_accuracy);
    log::info!("training accuracy {train_accuracy}, baseline {baseline}");

    fs::create_dir_all(&a.out_dir).map_err(|e| CliError::write(&a.out_dir, e))?;
    let r = search(&model, &data, baseline, a.n_max)?;
    write(&a.out_dir.join("ptq_trace.csv"), &r.trace_csv())?;
    let n = r.chosen_frac_bits().ok_or_else(|| no_feasible(&r))?;

    let q = quantize_model(&model, n)?;
    let qdata = quantize_dataset(&data, n)?;
    let quantized_accuracy = accuracy(&q, &qdata)?;
    if quantized_accuracy < baseline {
        return Err(CliError::new(
            code::OTHER,
            format!("quantized accuracy {quantized_accuracy} fell below baseline {baseline} at n={n}"),
        ));
    }

    let net = lowered(&q, a.hdl.lut_size)?;
    let breakdown = resource_report(&net, &q);
    write(&a.out_dir.join("breakdown.csv"), &breakdown_csv(std::slice::from_ref(&breakdown)))?;
    write(&a.out_dir.join("model.json"), &save_model(&q))?;
    let vectors = pipeline_vectors(&net, &q, &qdata, a.hdl.tb_vectors, cli.seed)?;
    let e = write_hdl(&q, &net, &vectors, &a.out_dir, &a.hdl)?;

    emit(
        cli,
        json!({
            "train_accuracy": train_accuracy,
            "baseline": baseline,
            "ptq": r,
            "frac_bits": n,
            "width": n + 1,
            "quantized_accuracy": quantized_accuracy,
            "breakdown": breakdown,
            "module": e.module,
            "out_dir": a.out_dir,
        }),
        || {
            format!(
                "training accuracy {train_accuracy}; {}-bit inputs keep accuracy {quantized_accuracy} (baseline {baseline}); \
                 {} LUT nodes, encoder share {:.1}%; module {} written to {}",
                n + 1,
                breakdown.total,
                100.0 * breakdown.encoder_share(),
                e.module,
                a.out_dir.display()
            )
        },
    )
}
