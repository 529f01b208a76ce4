//! Training, evaluation, baselines and the one-shot experiment pipeline.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{Experiment, ExperimentConfig};
use super::dataset::{build_dataset, theta_phi_sample, ExperimentData, SampleMeta, INIT_STREAM};
use super::files::{dataset_to_csv, manifest_text, CONFIG_FILE, MANIFEST_FILE, PLAN_FILE};
use super::io::{read_text, write_atomic};
use crate::error::{Error, Result};
use crate::features::{extract_features, MeasurementPlan};
use crate::metrics::{GroupRate, Heatmap, MetricsReport};
use crate::nn::{self, LabeledDataset, MlpModel, OutputKind};
use crate::oracle::Group;
use crate::rng::Rng;

pub const MODEL_FILE: &str = "model.txt";
pub const METRICS_STEM: &str = "metrics";

/// Test samples whose PPT eigenvalue is farther than this from zero count
/// as away from the separable/entangled edge.
pub const EDGE_MARGIN: f64 = 0.02;

/// Something that maps a sample to a class.
#[derive(Debug, Clone, Copy)]
pub enum Classifier<'a> {
    Model(&'a MlpModel),
    /// Entangled iff `|CHSH| > 2` at the standard settings.
    Chsh,
    /// Entangled iff `Tr(rho W+) < 0`.
    Witness,
}

impl Classifier<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Classifier::Model(_) => "model",
            Classifier::Chsh => "chsh-baseline",
            Classifier::Witness => "witness-baseline",
        }
    }

    pub fn predict(&self, features: &[f64], meta: &SampleMeta) -> Result<usize> {
        let missing =
            |what: &str| Error::invalid(format!("sample {} has no {what} value", meta.index));
        match self {
            Classifier::Model(m) => m.predict_label(features),
            Classifier::Chsh => {
                let v = meta.chsh.ok_or_else(|| missing("CHSH"))?;
                Ok(usize::from(v.abs() <= 2.0))
            }
            Classifier::Witness => {
                let v = meta.witness.ok_or_else(|| missing("witness"))?;
                Ok(usize::from(v >= 0.0))
            }
        }
    }
}

fn predict_rows(
    c: Classifier<'_>,
    data: &LabeledDataset,
    meta: &[SampleMeta],
) -> Result<Vec<usize>> {
    (0..data.len())
        .into_par_iter()
        .map(|i| c.predict(data.row(i), &meta[i]))
        .collect()
}

/// Grid samples of the `rho(theta, phi)` family at the bin centres of a
/// `grid x grid` partition of `[0, 1] x [0, pi]`, with `phi_samples` evenly
/// spaced phases per bin. Rows are `p`-major.
pub fn heatmap_grid(
    cfg: &ExperimentConfig,
    plan: &MeasurementPlan,
) -> Result<(LabeledDataset, Vec<SampleMeta>)> {
    let (g, n_phi) = (cfg.grid, cfg.phi_samples);
    let cells: Vec<(Vec<f64>, usize, SampleMeta)> = (0..g * g * n_phi)
        .into_par_iter()
        .map(|k| {
            let (cell, f) = (k / n_phi, k % n_phi);
            let p = (cell / g) as f64 / g as f64 + 0.5 / g as f64;
            let theta = ((cell % g) as f64 + 0.5) * PI / g as f64;
            let phi = TAU * f as f64 / n_phi as f64;
            let s = theta_phi_sample(p, theta, phi, k as u64)?;
            Ok((extract_features(&s.state, plan)?, s.label, s.meta))
        })
        .collect::<Result<_>>()?;
    let mut data = LabeledDataset::empty(plan.n_features(), 2)?;
    let mut meta = Vec::with_capacity(cells.len());
    for (x, y, m) in cells {
        data.push(&x, y)?;
        meta.push(m);
    }
    Ok((data, meta))
}

/// Mismatch rate per grid bin, averaged over the bin's phases.
pub fn heatmap(
    c: Classifier<'_>,
    cfg: &ExperimentConfig,
    grid: &(LabeledDataset, Vec<SampleMeta>),
) -> Result<Heatmap> {
    let pred = predict_rows(c, &grid.0, &grid.1)?;
    let n_phi = cfg.phi_samples;
    let mut h = Heatmap {
        p_bins: cfg.grid,
        theta_bins: cfg.grid,
        p: Vec::new(),
        theta: Vec::new(),
        r_mm: Vec::new(),
    };
    for cell in 0..cfg.grid * cfg.grid {
        let rows = cell * n_phi..(cell + 1) * n_phi;
        let wrong = rows.clone().filter(|&i| pred[i] != grid.0.label(i)).count();
        h.p.push(grid.1[rows.start].p.unwrap());
        h.theta.push(grid.1[rows.start].theta.unwrap());
        h.r_mm.push(wrong as f64 / n_phi as f64);
    }
    Ok(h)
}

/// Match rate, confusion matrix and experiment-specific extras of one
/// classifier on a labeled set.
pub fn evaluate_classifier(
    c: Classifier<'_>,
    data: &LabeledDataset,
    meta: &[SampleMeta],
) -> Result<MetricsReport> {
    let pred = predict_rows(c, data, meta)?;
    let mut report =
        MetricsReport::from_predictions(c.name(), data.n_classes(), data.labels(), &pred);
    report
        .extras
        .insert("majority_rate".into(), report.majority_rate());

    let edge: Vec<usize> = (0..data.len())
        .filter(|&i| meta[i].lambda_min.is_some_and(|l| l.abs() > EDGE_MARGIN))
        .collect();
    if !edge.is_empty() && data.n_classes() == 2 && meta.iter().all(|m| m.group.is_none()) {
        let wrong = edge.iter().filter(|&&i| pred[i] != data.label(i)).count();
        report
            .extras
            .insert("mismatch_off_edge".into(), wrong as f64 / edge.len() as f64);
        report.extras.insert("n_off_edge".into(), edge.len() as f64);
    }

    for g in Group::ALL {
        let rows: Vec<usize> = (0..data.len())
            .filter(|&i| meta[i].group == Some(g))
            .collect();
        if !rows.is_empty() {
            report.groups.push(GroupRate {
                group: g,
                total: rows.len() as u64,
                correct: rows.iter().filter(|&&i| pred[i] == data.label(i)).count() as u64,
            });
        }
    }
    Ok(report)
}

/// Fixed-CHSH and `W+` witness classifiers on a two-qubit test set.
pub fn baseline_classifiers(
    data: &LabeledDataset,
    meta: &[SampleMeta],
) -> Result<Vec<MetricsReport>> {
    if data.n_classes() != 2 || meta.iter().any(|m| m.chsh.is_none() || m.witness.is_none()) {
        return Err(Error::invalid(
            "baselines need a two-qubit binary dataset with CHSH and witness values",
        ));
    }
    [Classifier::Chsh, Classifier::Witness]
        .into_iter()
        .map(|c| evaluate_classifier(c, data, meta))
        .collect()
}

/// Initializes and trains the experiment's model on its training set.
pub fn train_model(cfg: &ExperimentConfig, train: &LabeledDataset) -> Result<(MlpModel, Vec<f64>)> {
    let n_classes = train.n_classes();
    let (n_out, kind) = if n_classes == 2 {
        (1, OutputKind::Sigmoid)
    } else {
        (n_classes, OutputKind::Softmax)
    };
    let mut rng = Rng::with_stream(cfg.seed, INIT_STREAM);
    let init = MlpModel::init(
        train.n_in(),
        cfg.hidden,
        n_out,
        kind,
        &mut rng,
        cfg.init_scale,
    )?;
    nn::train(init, train, &cfg.train_config())
}

/// Model report on the test set plus, for E1, the `(p, theta)` heatmap.
pub fn evaluate_experiment(
    data: &ExperimentData,
    model: &MlpModel,
    loss_history: &[f64],
) -> Result<MetricsReport> {
    let mut report = evaluate_classifier(Classifier::Model(model), &data.test, &data.test_meta)?;
    report.loss_history = loss_history.to_vec();
    let train_pred = nn::predict_all(model, &data.train)?;
    let train_ok = train_pred
        .iter()
        .zip(data.train.labels())
        .filter(|(p, y)| p == y)
        .count();
    report.extras.insert(
        "train_match_rate".into(),
        train_ok as f64 / data.train.len() as f64,
    );
    if data.config.experiment == Experiment::E1 {
        let grid = heatmap_grid(&data.config, &data.plan)?;
        report.heatmap = Some(heatmap(Classifier::Model(model), &data.config, &grid)?);
    }
    Ok(report.quantized())
}

/// Baseline reports for two-qubit experiments (with heatmaps for E1).
pub fn experiment_baselines(data: &ExperimentData) -> Result<Vec<MetricsReport>> {
    if data.config.experiment.n_qubits() != 2 {
        return Ok(Vec::new());
    }
    let mut reports = baseline_classifiers(&data.test, &data.test_meta)?;
    if data.config.experiment == Experiment::E1 {
        let grid = heatmap_grid(&data.config, &data.plan)?;
        for (r, c) in reports
            .iter_mut()
            .zip([Classifier::Chsh, Classifier::Witness])
        {
            r.heatmap = Some(heatmap(c, &data.config, &grid)?);
        }
    }
    Ok(reports.into_iter().map(|r| r.quantized()).collect())
}

/// Writes `<stem>.txt` and, when the report has a heatmap,
/// `<stem>-heatmap.csv` into `dir`.
pub fn emit_metrics(report: &MetricsReport, dir: &Path, stem: &str) -> Result<PathBuf> {
    let heatmap_file = format!("{stem}-heatmap.csv");
    if let Some(h) = &report.heatmap {
        write_atomic(&dir.join(&heatmap_file), h.to_csv().as_bytes())?;
    }
    let path = dir.join(format!("{stem}.txt"));
    write_atomic(&path, report.to_text(Some(&heatmap_file)).as_bytes())?;
    Ok(path)
}

/// Reads a metrics file written by [`emit_metrics`].
pub fn load_metrics(path: &Path) -> Result<MetricsReport> {
    let text = read_text(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    MetricsReport::from_text(&text, |file| read_text(&dir.join(file))).map_err(|e| match e {
        Error::InvalidArgument(m) => Error::parse(path, m),
        other => other,
    })
}

/// Results of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub report: MetricsReport,
    pub baselines: Vec<MetricsReport>,
    pub model: MlpModel,
}

/// Builds the data, trains, evaluates and writes config, manifest, plan,
/// model and metrics under `out_root/<experiment>-<config hash>`.
pub fn run_experiment(cfg: &ExperimentConfig, out_root: &Path) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let data = build_dataset(cfg, false)?;
    let (model, history) = train_model(cfg, &data.train)?;
    let report = evaluate_experiment(&data, &model, &history)?;
    let baselines = experiment_baselines(&data)?;

    let dir = out_root.join(cfg.dir_name());
    write_atomic(&dir.join(CONFIG_FILE), cfg.canonical_text().as_bytes())?;
    let train_csv = dataset_to_csv(&data.plan, &data.train, &data.train_meta)?;
    let test_csv = dataset_to_csv(&data.plan, &data.test, &data.test_meta)?;
    write_atomic(
        &dir.join(MANIFEST_FILE),
        manifest_text(&data, &train_csv, &test_csv).as_bytes(),
    )?;
    write_atomic(&dir.join(PLAN_FILE), data.plan.to_text().as_bytes())?;
    model.save(&dir.join(MODEL_FILE))?;
    emit_metrics(&report, &dir, METRICS_STEM)?;
    for b in &baselines {
        emit_metrics(b, &dir, b.name.as_str())?;
    }
    Ok(ExperimentOutcome {
        dir,
        report,
        baselines,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureScheme;

    fn small_e1() -> ExperimentConfig {
        let mut c = ExperimentConfig::defaults(Experiment::E1);
        c.n_train = 2000;
        c.n_test = Some(500);
        c.epochs = 20;
        c.grid = 10;
        c.phi_samples = 4;
        c
    }

    #[test]
    fn chsh_baseline_on_equator() {
        // theta = pi/2, phi = pi: entangled above 1/3, CHSH-violating above 1/sqrt 2.
        for (p, expect) in [(0.2, 1), (0.5, 1), (0.75, 0)] {
            let s = theta_phi_sample(p, PI / 2.0, PI, 0).unwrap();
            assert_eq!(
                Classifier::Chsh.predict(&[], &s.meta).unwrap(),
                expect,
                "p = {p}"
            );
        }
    }

    #[test]
    fn witness_baseline_depends_on_phi() {
        for p in [0.4, 0.7, 1.0] {
            let at_zero = theta_phi_sample(p, PI / 2.0, 0.0, 0).unwrap();
            assert_eq!(at_zero.label, 0);
            assert_eq!(Classifier::Witness.predict(&[], &at_zero.meta).unwrap(), 0);
            let at_pi = theta_phi_sample(p, PI / 2.0, PI, 0).unwrap();
            assert_eq!(Classifier::Witness.predict(&[], &at_pi.meta).unwrap(), 1);
        }
    }

    #[test]
    fn heatmap_shape_and_band() {
        let c = small_e1();
        let plan = crate::harness::dataset::experiment_plan(&c).unwrap();
        let grid = heatmap_grid(&c, &plan).unwrap();
        let h = heatmap(Classifier::Chsh, &c, &grid).unwrap();
        assert_eq!(h.r_mm.len(), 100);
        assert_eq!(h.to_csv().lines().count(), 101);
        assert_eq!(h.at(0.55, PI / 2.0), 1.0);
        // Only phi = pi violates CHSH at high p; the other phases miss.
        assert_eq!(h.at(0.95, PI / 2.0), 0.75);
        assert_eq!(h.at(0.15, PI / 2.0), 0.0);
    }

    #[test]
    fn small_e1_run_writes_artifacts() {
        let out = tempfile::tempdir().unwrap();
        let c = small_e1();
        let o = run_experiment(&c, out.path()).unwrap();
        for f in [
            CONFIG_FILE,
            MANIFEST_FILE,
            PLAN_FILE,
            MODEL_FILE,
            "metrics.txt",
            "metrics-heatmap.csv",
            "chsh-baseline.txt",
            "witness-baseline-heatmap.csv",
        ] {
            assert!(o.dir.join(f).exists(), "{f}");
        }
        let back = load_metrics(&o.dir.join("metrics.txt")).unwrap();
        assert_eq!(back, o.report);
        assert_eq!(MlpModel::load(&o.dir.join(MODEL_FILE)).unwrap(), o.model);
        assert_eq!(o.report.loss_history.len(), 20);
        assert!(o.report.match_rate >= o.report.majority_rate() - 0.05);
    }

    #[test]
    fn baselines_need_two_qubit_data() {
        let mut c = ExperimentConfig::defaults(Experiment::E3);
        c.n_train = 20;
        c.n_test = Some(5);
        c.scheme = FeatureScheme::Mermin4;
        let d = build_dataset(&c, false).unwrap();
        assert!(baseline_classifiers(&d.test, &d.test_meta).is_err());
        assert!(experiment_baselines(&d).unwrap().is_empty());
    }
}
