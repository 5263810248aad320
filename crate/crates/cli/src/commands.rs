use std::path::{Path, PathBuf};

use serde_json::json;
use wdist::dataset::{
    generate_dataset, read_dataset, split_dataset, write_dataset, GenerationSpec, LabeledDataset,
    PairKind, RankPolicy, DEFAULT_FRACTIONS,
};
use wdist::models::{evaluate, pearson_feature_ranking, Hyperparams, ModelKind, RegressionModel};
use wdist::quantum::NamedGate;
use wdist::validation::{
    gate_noise_sensitivity, validate_prop1 as run_prop1, validate_prop2 as run_prop2,
    DistanceOracle, NoiseKind, NoiseSpec, Prop1Config, Prop2Config, Prop2Noise, ValidationReport,
};

use crate::error::{CliError, CliResult};
use crate::manifest::{manifest_for, ManifestBuilder};
use crate::output::{create_dir, csv_writer, num, write_json};
use crate::{EvalArgs, GatesArgs, GenDataArgs, Prop1Args, Prop2Args, RankArgs, TrainArgs};

const HISTOGRAM_BINS: usize = 24;
const HISTOGRAM_MAX: f64 = 1.2;

fn args_json<T: serde::Serialize>(a: &T) -> serde_json::Value {
    serde_json::to_value(a).expect("arguments serialize")
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn parse_rank(s: &str) -> CliResult<RankPolicy> {
    match s.trim() {
        "uniform" => Ok(RankPolicy::Uniform),
        t => t.parse().map(RankPolicy::Fixed).map_err(|_| {
            CliError::usage(format!("--rank expects an integer or 'uniform', got '{s}'"))
        }),
    }
}

pub fn gen_data(a: &GenDataArgs) -> CliResult<()> {
    let mut m = ManifestBuilder::new("gen-data", args_json(a), Some(a.seed));
    let kind: PairKind = a.kind.parse()?;
    let mut spec = GenerationSpec::new(a.qubits, kind, a.samples, a.bins, a.seed);
    spec.rank = parse_rank(&a.rank)?;
    spec.gate_fraction = a.gate_fraction;
    spec.gate_epsilon = (a.gate_eps_min, a.gate_eps_max);
    let fractions = [
        a.train_frac.unwrap_or(DEFAULT_FRACTIONS[0]),
        a.val_frac.unwrap_or(DEFAULT_FRACTIONS[1]),
        a.test_frac.unwrap_or(DEFAULT_FRACTIONS[2]),
    ];
    let ds = generate_dataset(&spec)?;
    let splits = split_dataset(&ds, fractions)?;
    create_dir(&a.out)?;
    let mut rows = serde_json::Map::new();
    for (name, part) in ["train", "val", "test"].iter().zip(&splits) {
        let p = a.out.join(format!("{name}.csv"));
        write_dataset(part, &p)?;
        m.output(&p);
        m.output(&wdist::dataset::sidecar_path(&p));
        rows.insert(name.to_string(), json!(part.len()));
    }
    m.results(json!({
        "rows": rows,
        "layout_hash": ds.layout.hash(),
        "n_features": ds.layout.total_length,
        "bin_counts": ds.bin_counts(a.bins.max(1)),
    }));
    m.finish(&a.out.join("manifest.json"))?;
    Ok(())
}

fn parse_hyperparams(s: Option<&str>) -> CliResult<Hyperparams> {
    let Some(s) = s else {
        return Ok(Hyperparams::default());
    };
    let text = if s.trim_start().starts_with('{') {
        s.to_string()
    } else {
        std::fs::read_to_string(s)?
    };
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("--hyperparams: {e}")))
}

/// A CSV path, or `<dir>/<name>.csv` when `p` is a directory.
fn resolve(p: &Path, name: &str) -> PathBuf {
    if p.is_dir() {
        p.join(format!("{name}.csv"))
    } else {
        p.to_path_buf()
    }
}

/// `{model, split, n_rows, mse, mae, r2}` for one dataset.
fn split_metrics(
    model: &RegressionModel,
    split: &str,
    ds: &LabeledDataset,
    pred: &[f64],
) -> CliResult<serde_json::Value> {
    let m = evaluate(&ds.labels(), pred)?;
    Ok(
        json!({ "model": model.kind.as_str(), "split": split, "n_rows": ds.len(), "mse": m.mse, "mae": m.mae, "r2": m.r2 }),
    )
}

pub fn train(a: &TrainArgs) -> CliResult<()> {
    let kind: ModelKind = a.model.parse()?;
    let mut hp = parse_hyperparams(a.hyperparams.as_deref())?;
    if a.seed.is_some() {
        hp.seed = a.seed;
    }
    let mut m = ManifestBuilder::new("train", args_json(a), hp.seed);
    let train_path = resolve(&a.data, "train");
    let val_path = match &a.val {
        Some(v) => Some(v.clone()),
        None if a.data.is_dir() => Some(a.data.join("val.csv")).filter(|p| p.exists()),
        None => None,
    };
    let train = read_dataset(&train_path)?;
    m.input(&train_path);
    let val = match &val_path {
        Some(p) => {
            m.input(p);
            Some(read_dataset(p)?)
        }
        None => None,
    };
    let model = RegressionModel::fit_dataset(kind, &train, val.as_ref(), &hp)?;
    model.save(&a.out)?;
    m.output(&a.out);

    let mut reports = vec![split_metrics(
        &model,
        "train",
        &train,
        &model.predict_dataset(&train)?,
    )?];
    if let Some(v) = &val {
        reports.push(split_metrics(&model, "val", v, &model.predict_dataset(v)?)?);
    }
    let manifest_path = manifest_for(&a.out);
    let metrics = json!({
        "model": kind.as_str(),
        "splits": reports,
        "selected_l1": model.selected_l1(),
        "manifest": file_name(&manifest_path),
    });
    let metrics_path = PathBuf::from(format!("{}.metrics.json", a.out.display()));
    write_json(&metrics_path, &metrics)?;
    m.output(&metrics_path);
    m.results(json!({ "splits": reports, "selected_l1": model.selected_l1() }));
    m.finish(&manifest_path)?;
    Ok(())
}

pub fn eval(a: &EvalArgs) -> CliResult<()> {
    let mut m = ManifestBuilder::new("eval", args_json(a), None);
    let model = RegressionModel::load(&a.model)?;
    m.input(&a.model);
    let data_path = resolve(&a.data, "test");
    let ds = read_dataset(&data_path)?;
    m.input(&data_path);
    let pred = model.predict_dataset(&ds)?;

    create_dir(&a.out)?;
    let pred_path = a.out.join("predictions.csv");
    let mut w = csv_writer(&pred_path)?;
    w.write_record(["index", "label", "prediction", "bin", "provenance"])?;
    for (i, (row, p)) in ds.rows.iter().zip(&pred).enumerate() {
        w.write_record([
            i.to_string(),
            num(row.label),
            num(*p),
            row.bin.to_string(),
            row.provenance.as_str().into(),
        ])?;
    }
    w.flush()?;
    m.output(&pred_path);

    let split = data_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut metrics = split_metrics(&model, &split, &ds, &pred)?;
    metrics["manifest"] = json!("manifest.json");
    let metrics_path = a.out.join("metrics.json");
    write_json(&metrics_path, &metrics)?;
    m.output(&metrics_path);
    m.results(metrics);
    m.finish(&a.out.join("manifest.json"))?;
    Ok(())
}

fn pooled(p: &Path, m: &mut ManifestBuilder) -> CliResult<LabeledDataset> {
    if !p.is_dir() {
        m.input(p);
        return Ok(read_dataset(p)?);
    }
    let mut out: Option<LabeledDataset> = None;
    for name in ["train", "val", "test"] {
        let path = p.join(format!("{name}.csv"));
        if !path.exists() {
            continue;
        }
        m.input(&path);
        let ds = read_dataset(&path)?;
        match &mut out {
            None => out = Some(ds),
            Some(acc) if acc.layout == ds.layout => acc.rows.extend(ds.rows),
            Some(_) => {
                return Err(wdist::Error::Compatibility(format!(
                    "{} has a different layout",
                    path.display()
                ))
                .into())
            }
        }
    }
    out.ok_or_else(|| CliError::usage(format!("{} holds no train/val/test CSVs", p.display())))
}

pub fn rank(a: &RankArgs) -> CliResult<()> {
    let mut m = ManifestBuilder::new("rank", args_json(a), None);
    let ds = pooled(&a.data, &mut m)?;
    let top = pearson_feature_ranking(&ds, a.k)?;
    let mut w = csv_writer(&a.out)?;
    w.write_record(["rank", "feature", "pearson_r"])?;
    for (i, (name, r)) in top.iter().enumerate() {
        w.write_record([(i + 1).to_string(), name.clone(), num(*r)])?;
    }
    w.flush()?;
    m.output(&a.out);
    m.results(json!({ "rows": top.len(), "samples": ds.len() }));
    m.finish(&manifest_for(&a.out))?;
    Ok(())
}

fn load_model(p: Option<&Path>, m: &mut ManifestBuilder) -> CliResult<Option<RegressionModel>> {
    p.map(|p| {
        m.input(p);
        RegressionModel::load(p).map_err(CliError::from)
    })
    .transpose()
}

fn write_report(
    mut report: ValidationReport,
    no_records: bool,
    out: &Path,
    mut m: ManifestBuilder,
) -> CliResult<()> {
    create_dir(out)?;
    let hist_path = out.join("ratio_histogram.csv");
    let mut w = csv_writer(&hist_path)?;
    w.write_record(["ratio_lo", "ratio_hi", "count_true", "count_pred"])?;
    for (lo, hi, t, p) in report.ratio_histogram(HISTOGRAM_BINS, HISTOGRAM_MAX) {
        w.write_record([num(lo), num(hi), t.to_string(), p.to_string()])?;
    }
    w.flush()?;
    m.output(&hist_path);
    if no_records {
        report.records.clear();
    }
    let report_path = out.join("report.json");
    let mut value = serde_json::to_value(&report)?;
    value["manifest"] = json!("manifest.json");
    write_json(&report_path, &value)?;
    m.output(&report_path);
    let summary = json!({
        "trials": report.trials,
        "violations_true": report.violations_true,
        "violations_pred": report.violations_pred,
        "max_ratio_true": report.max_ratio_true,
        "max_ratio_pred": report.max_ratio_pred,
        "model_mae": report.model_mae,
    });
    m.results(summary);
    m.finish(&out.join("manifest.json"))?;
    if report.violations_true + report.violations_pred > 0 {
        return Err(CliError::violations(format!(
            "{}: {} true and {} predicted bound violations in {} trials",
            report.proposition, report.violations_true, report.violations_pred, report.trials
        )));
    }
    Ok(())
}

fn oracle(model: &Option<RegressionModel>) -> DistanceOracle<'_> {
    model
        .as_ref()
        .map_or(DistanceOracle::True, DistanceOracle::Model)
}

pub fn validate_prop1(a: &Prop1Args) -> CliResult<()> {
    let mut m = ManifestBuilder::new("validate prop1", args_json(a), Some(a.seed));
    let model = load_model(a.model.as_deref(), &mut m)?;
    let cfg = Prop1Config {
        n_qubits: a.qubits,
        trials: a.trials,
        eps_range: (a.eps_min, a.eps_max),
        seed: a.seed,
    };
    let report = run_prop1(&cfg, &oracle(&model))?;
    write_report(report, a.no_records, &a.out, m)
}

pub fn validate_prop2(a: &Prop2Args) -> CliResult<()> {
    let mut m = ManifestBuilder::new("validate prop2", args_json(a), Some(a.seed));
    let noise = match a
        .noise
        .trim()
        .to_ascii_lowercase()
        .replace('-', "_")
        .as_str()
    {
        "pauli_rotation" | "pauli" => Prop2Noise::PauliRotation,
        "hamiltonian" => Prop2Noise::Hamiltonian,
        other => {
            return Err(CliError::usage(format!(
                "--noise expects pauli_rotation or hamiltonian, got '{other}'"
            )))
        }
    };
    let model = load_model(a.model.as_deref(), &mut m)?;
    let cfg = Prop2Config {
        n_qubits: a.qubits,
        trials: a.trials,
        k: a.k,
        n_states: a.n_states,
        eps_range: (a.eps_min, a.eps_max),
        noise,
        seed: a.seed,
    };
    let report = run_prop2(&cfg, &oracle(&model))?;
    write_report(report, a.no_records, &a.out, m)
}

pub fn validate_gates(a: &GatesArgs) -> CliResult<()> {
    let mut m = ManifestBuilder::new("validate gates", args_json(a), Some(a.seed));
    let gates = a
        .gates
        .iter()
        .map(|g| g.parse::<NamedGate>())
        .collect::<wdist::Result<Vec<_>>>()?;
    let noises = a
        .noises
        .iter()
        .map(|n| {
            n.parse::<NoiseKind>().map(|kind| NoiseSpec {
                kind,
                p: a.p,
                theta: a.theta,
            })
        })
        .collect::<wdist::Result<Vec<_>>>()?;
    let model = load_model(a.model.as_deref(), &mut m)?;
    let report = gate_noise_sensitivity(&gates, &noises, &oracle(&model), a.n_states, a.seed)?;
    create_dir(&a.out)?;
    let csv_path = a.out.join("sensitivity.csv");
    report.write_csv(std::fs::File::create(&csv_path)?)?;
    m.output(&csv_path);
    let json_path = a.out.join("sensitivity.json");
    let mut value = serde_json::to_value(&report)?;
    value["manifest"] = json!("manifest.json");
    write_json(&json_path, &value)?;
    m.output(&json_path);
    m.results(json!({ "gates": report.gates, "values": report.values }));
    m.finish(&a.out.join("manifest.json"))?;
    Ok(())
}
