//! Dataset directories: config, plan, row CSVs, manifest and optional state
//! dumps.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::dataset::{ExperimentData, SampleMeta};
use super::io::{read_text, write_atomic};
use crate::error::{Error, Result};
use crate::features::MeasurementPlan;
use crate::nn::LabeledDataset;
use crate::state::DensityMatrix;

pub const CONFIG_FILE: &str = "config.txt";
pub const PLAN_FILE: &str = "plan.txt";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";
pub const TRAIN_STATES_FILE: &str = "train_states.txt";
pub const TEST_STATES_FILE: &str = "test_states.txt";

const META_COLUMNS: [&str; 11] = [
    "label",
    "index",
    "p",
    "theta",
    "phi",
    "lambda_min",
    "split",
    "channel",
    "group",
    "chsh",
    "witness",
];

fn opt_num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_show<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Rows as CSV: one column per feature (`f:` + feature name), then the label
/// and provenance columns. Numbers are written in shortest round-trip form.
pub fn dataset_to_csv(
    plan: &MeasurementPlan,
    data: &LabeledDataset,
    meta: &[SampleMeta],
) -> Result<String> {
    if meta.len() != data.len() || plan.n_features() != data.n_in() {
        return Err(Error::invalid(
            "dataset, provenance and plan sizes disagree",
        ));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = plan
        .feature_names()
        .iter()
        .map(|n| format!("f:{n}"))
        .collect();
    header.extend(META_COLUMNS.iter().map(|s| s.to_string()));
    let csv_err = |e: csv::Error| Error::invalid(format!("csv encoding: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for (i, m) in meta.iter().enumerate() {
        let mut rec: Vec<String> = data.row(i).iter().map(f64::to_string).collect();
        rec.extend([
            data.label(i).to_string(),
            m.index.to_string(),
            opt_num(m.p),
            opt_num(m.theta),
            opt_num(m.phi),
            opt_num(m.lambda_min),
            opt_show(m.split),
            opt_show(m.channel),
            opt_show(m.group),
            opt_num(m.chsh),
            opt_num(m.witness),
        ]);
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::invalid(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Parses [`dataset_to_csv`] output.
pub fn dataset_from_csv(
    text: &str,
    n_in: usize,
    n_classes: usize,
) -> Result<(LabeledDataset, Vec<SampleMeta>)> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::invalid(format!("dataset header: {e}")))?
        .clone();
    if header.len() != n_in + META_COLUMNS.len()
        || header.iter().skip(n_in).ne(META_COLUMNS.iter().copied())
        || header.iter().take(n_in).any(|h| !h.starts_with("f:"))
    {
        return Err(Error::invalid(format!(
            "dataset header does not match a {n_in}-feature plan"
        )));
    }
    let mut data = LabeledDataset::empty(n_in, n_classes)?;
    let mut meta = Vec::new();
    let mut row = vec![0.0; n_in];
    for (line, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Error::invalid(format!("dataset row {}: {e}", line + 1)))?;
        let bad = |col: &str| Error::invalid(format!("dataset row {}: bad {col}", line + 1));
        for (k, v) in row.iter_mut().enumerate() {
            *v = record[k].parse().map_err(|_| bad("feature"))?;
        }
        let field = |name: &str| {
            let k = n_in + META_COLUMNS.iter().position(|c| *c == name).unwrap();
            &record[k]
        };
        let num = |name: &str| -> Result<Option<f64>> {
            match field(name) {
                "" => Ok(None),
                v => v.parse().map(Some).map_err(|_| bad(name)),
            }
        };
        let label: usize = field("label").parse().map_err(|_| bad("label"))?;
        let m = SampleMeta {
            index: field("index").parse().map_err(|_| bad("index"))?,
            p: num("p")?,
            theta: num("theta")?,
            phi: num("phi")?,
            lambda_min: num("lambda_min")?,
            split: match field("split") {
                "" => None,
                v => Some(v.parse()?),
            },
            channel: match field("channel") {
                "" => None,
                v => Some(v.parse()?),
            },
            group: match field("group") {
                "" => None,
                v => Some(v.parse()?),
            },
            chsh: num("chsh")?,
            witness: num("witness")?,
        };
        data.push(&row, label)?;
        meta.push(m);
    }
    Ok((data, meta))
}

/// Density matrices, one per line: the row index followed by the real and
/// imaginary parts of every entry in row-major order.
pub fn states_to_text(states: &[DensityMatrix]) -> String {
    let mut s = String::from("# index then re im pairs, row-major\n");
    for (i, rho) in states.iter().enumerate() {
        let _ = write!(s, "{i}");
        for z in rho.matrix().as_slice() {
            let _ = write!(s, " {} {}", z.re, z.im);
        }
        s.push('\n');
    }
    s
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Summary of a generated dataset.
pub fn manifest_text(data: &ExperimentData, train_csv: &str, test_csv: &str) -> String {
    let counts = |d: &LabeledDataset| {
        d.class_counts()
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = String::new();
    let _ = writeln!(s, "experiment = {}", data.config.experiment);
    let _ = writeln!(s, "config_hash = {}", data.config.hash());
    let _ = writeln!(s, "scheme = {}", data.plan.scheme().name());
    let _ = writeln!(s, "n_features = {}", data.plan.n_features());
    let _ = writeln!(s, "n_train = {}", data.train.len());
    let _ = writeln!(s, "n_test = {}", data.test.len());
    let _ = writeln!(s, "train_class_counts = {}", counts(&data.train));
    let _ = writeln!(s, "test_class_counts = {}", counts(&data.test));
    let _ = writeln!(s, "train_candidates = {}", data.candidates.0);
    let _ = writeln!(s, "test_candidates = {}", data.candidates.1);
    let _ = writeln!(s, "train_sha256 = {}", sha256_hex(train_csv.as_bytes()));
    let _ = writeln!(s, "test_sha256 = {}", sha256_hex(test_csv.as_bytes()));
    s
}

/// Writes config, plan, row CSVs, manifest and (if kept) the states.
pub fn write_data_dir(dir: &Path, data: &ExperimentData) -> Result<()> {
    let train_csv = dataset_to_csv(&data.plan, &data.train, &data.train_meta)?;
    let test_csv = dataset_to_csv(&data.plan, &data.test, &data.test_meta)?;
    write_atomic(
        &dir.join(CONFIG_FILE),
        data.config.canonical_text().as_bytes(),
    )?;
    write_atomic(&dir.join(PLAN_FILE), data.plan.to_text().as_bytes())?;
    write_atomic(&dir.join(TRAIN_FILE), train_csv.as_bytes())?;
    write_atomic(&dir.join(TEST_FILE), test_csv.as_bytes())?;
    if let Some((train, test)) = &data.states {
        write_atomic(
            &dir.join(TRAIN_STATES_FILE),
            states_to_text(train).as_bytes(),
        )?;
        write_atomic(&dir.join(TEST_STATES_FILE), states_to_text(test).as_bytes())?;
    }
    write_atomic(
        &dir.join(MANIFEST_FILE),
        manifest_text(data, &train_csv, &test_csv).as_bytes(),
    )
}

fn parse_in<T>(path: &Path, parsed: Result<T>) -> Result<T> {
    parsed.map_err(|e| match e {
        Error::InvalidArgument(m) => Error::parse(path, m),
        other => other,
    })
}

/// Reads a directory written by [`write_data_dir`] (states are not loaded).
pub fn read_data_dir(dir: &Path) -> Result<ExperimentData> {
    let cfg_path = dir.join(CONFIG_FILE);
    let config = parse_in(
        &cfg_path,
        ExperimentConfig::from_text(&read_text(&cfg_path)?),
    )?;
    let plan_path = dir.join(PLAN_FILE);
    let plan = parse_in(
        &plan_path,
        MeasurementPlan::from_text(&read_text(&plan_path)?),
    )?;
    let n_classes = config.experiment.n_classes();
    let load = |name: &str| {
        let path = dir.join(name);
        parse_in(
            &path,
            dataset_from_csv(&read_text(&path)?, plan.n_features(), n_classes),
        )
    };
    let (train, train_meta) = load(TRAIN_FILE)?;
    let (test, test_meta) = load(TEST_FILE)?;
    let candidates = (train.len() as u64, test.len() as u64);
    Ok(ExperimentData {
        config,
        plan,
        train,
        train_meta,
        test,
        test_meta,
        candidates,
        states: None,
    })
}
