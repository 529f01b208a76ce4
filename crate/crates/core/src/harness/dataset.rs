//! Sample generation for the four experiments.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use super::config::{Experiment, ExperimentConfig};
use crate::error::Result;
use crate::features::{build_plan, extract_features, AxisSource, MeasurementPlan};
use crate::nn::LabeledDataset;
use crate::oracle::{self, Channel, ChshSettings, Group};
use crate::rng::Rng;
use crate::state::{self, DensityMatrix, Split};

/// RNG stream of the measurement axes.
pub const PLAN_STREAM: u64 = 0;
/// RNG stream of the weight initialization.
pub const INIT_STREAM: u64 = 1;
/// First RNG stream of the training samples; sample `k` uses `base + k`.
pub const TRAIN_STREAM_BASE: u64 = 1 << 32;
/// First RNG stream of the test samples.
pub const TEST_STREAM_BASE: u64 = 1 << 48;

/// Which half of the data a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Test,
}

impl Phase {
    fn stream_base(self) -> u64 {
        match self {
            Phase::Train => TRAIN_STREAM_BASE,
            Phase::Test => TEST_STREAM_BASE,
        }
    }
}

/// Generator parameters and oracle values recorded with each row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleMeta {
    /// Candidate index within its phase; the RNG stream is `base + index`.
    pub index: u64,
    pub p: Option<f64>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    /// Smallest partial-transpose eigenvalue used for the label, if any.
    pub lambda_min: Option<f64>,
    pub split: Option<Split>,
    pub channel: Option<Channel>,
    pub group: Option<Group>,
    /// CHSH value at the standard settings (two-qubit experiments).
    pub chsh: Option<f64>,
    /// Expectation of the `W+` witness (two-qubit experiments).
    pub witness: Option<f64>,
}

/// One generated state with its label.
#[derive(Debug, Clone)]
pub struct Sample {
    pub state: DensityMatrix,
    pub label: usize,
    pub meta: SampleMeta,
}

/// Train and test sets of one experiment with their provenance.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub config: ExperimentConfig,
    pub plan: MeasurementPlan,
    pub train: LabeledDataset,
    pub train_meta: Vec<SampleMeta>,
    pub test: LabeledDataset,
    pub test_meta: Vec<SampleMeta>,
    /// Candidates drawn per phase, including those removed by the gap filter.
    pub candidates: (u64, u64),
    /// Density matrices, kept only on request.
    pub states: Option<(Vec<DensityMatrix>, Vec<DensityMatrix>)>,
}

/// Measurement plan of `cfg`, drawn from its plan stream.
pub fn experiment_plan(cfg: &ExperimentConfig) -> Result<MeasurementPlan> {
    let mut rng = Rng::with_stream(cfg.seed, PLAN_STREAM);
    build_plan(cfg.scheme, AxisSource::Random(&mut rng))
}

fn two_qubit_meta(rho: &DensityMatrix, index: u64, lambda_min: f64) -> Result<SampleMeta> {
    Ok(SampleMeta {
        index,
        lambda_min: Some(lambda_min),
        chsh: Some(oracle::chsh_value(rho, &ChshSettings::standard())?),
        witness: Some(oracle::witness_plus_value(rho)?),
        ..SampleMeta::default()
    })
}

/// Sample `index` of `phase`, or `None` when the gap filter rejects it.
pub fn draw_sample(cfg: &ExperimentConfig, phase: Phase, index: u64) -> Result<Option<Sample>> {
    let mut rng = Rng::with_stream(cfg.seed, phase.stream_base() + index);
    let sample = match cfg.experiment {
        Experiment::E1 => {
            let theta = rng.uniform_in(0.0, PI);
            let phi = rng.uniform_in(0.0, TAU);
            let p = match phase {
                Phase::Train => {
                    let mean = 1.0 / (1.0 + 2.0 * theta.sin());
                    state::truncated_normal(&mut rng, mean, cfg.p_sd, 0.0, 1.0)
                }
                Phase::Test => rng.uniform(),
            };
            theta_phi_sample(p, theta, phi, index)?
        }
        Experiment::E2 => {
            let rho = state::random_density_matrix(&mut rng, 4)?;
            let verdict = oracle::two_qubit_ppt(&rho)?;
            if !oracle::passes_gap(&verdict, cfg.gap) {
                return Ok(None);
            }
            let meta = two_qubit_meta(&rho, index, verdict.lambda_min)?;
            Sample {
                state: rho,
                label: usize::from(!verdict.entangled),
                meta,
            }
        }
        Experiment::E3 => {
            let split = Split::ALL[rng.below(3)];
            let p = rng.uniform();
            let s = state::biseparable_mixture(&mut rng, split, p)?;
            let (label, verdict) = oracle::biseparable_label(split, &s.state)?;
            Sample {
                state: s.state,
                label: label.class_index,
                meta: SampleMeta {
                    index,
                    p: Some(p),
                    lambda_min: Some(verdict.lambda_min),
                    split: Some(split),
                    ..SampleMeta::default()
                },
            }
        }
        Experiment::E4 => {
            let channel = if rng.uniform() < 0.5 {
                Channel::Blue
            } else {
                Channel::Green
            };
            let (rho, p) = match channel {
                Channel::Blue => (state::random_fully_separable(&mut rng, 4)?, None),
                Channel::Green => {
                    let m = state::fourqubit_mix(&mut rng, cfg.p_min)?;
                    (m.state, Some(m.p))
                }
            };
            let (group, verdict) = oracle::fourqubit_group(channel, &rho)?;
            Sample {
                state: rho,
                label: usize::from(channel == Channel::Blue),
                meta: SampleMeta {
                    index,
                    p,
                    lambda_min: verdict.map(|v| v.lambda_min),
                    channel: Some(channel),
                    group: Some(group),
                    ..SampleMeta::default()
                },
            }
        }
    };
    Ok(Some(sample))
}

/// Labeled member of the `rho(theta, phi)` family with depolarizing weight `p`.
pub fn theta_phi_sample(p: f64, theta: f64, phi: f64, index: u64) -> Result<Sample> {
    let rho = state::depolarized(&state::psi_theta_phi(theta, phi)?, p)?;
    let verdict = oracle::two_qubit_ppt(&rho)?;
    let mut meta = two_qubit_meta(&rho, index, verdict.lambda_min)?;
    meta.p = Some(p);
    meta.theta = Some(theta);
    meta.phi = Some(phi);
    Ok(Sample {
        label: usize::from(!verdict.entangled),
        state: rho,
        meta,
    })
}

struct Generated {
    rows: LabeledDataset,
    meta: Vec<SampleMeta>,
    states: Vec<DensityMatrix>,
    candidates: u64,
}

/// The first `n` accepted samples of `phase`, in index order. The result
/// does not depend on the chunking or the number of worker threads.
fn generate_phase(
    cfg: &ExperimentConfig,
    plan: &MeasurementPlan,
    phase: Phase,
    n: usize,
    keep_states: bool,
) -> Result<Generated> {
    let mut out = Generated {
        rows: LabeledDataset::empty(plan.n_features(), cfg.experiment.n_classes())?,
        meta: Vec::with_capacity(n),
        states: Vec::new(),
        candidates: 0,
    };
    let mut next = 0u64;
    while out.meta.len() < n {
        let missing = n - out.meta.len();
        let chunk = (missing + missing / 4).max(64) as u64;
        let batch: Vec<Option<(Sample, Vec<f64>)>> = (next..next + chunk)
            .into_par_iter()
            .map(|k| {
                draw_sample(cfg, phase, k)?
                    .map(|s| extract_features(&s.state, plan).map(|f| (s, f)))
                    .transpose()
            })
            .collect::<Result<_>>()?;
        for (offset, item) in batch.into_iter().enumerate() {
            if out.meta.len() == n {
                break;
            }
            out.candidates = next + offset as u64 + 1;
            if let Some((sample, features)) = item {
                out.rows.push(&features, sample.label)?;
                out.meta.push(sample.meta);
                if keep_states {
                    out.states.push(sample.state);
                }
            }
        }
        next += chunk;
    }
    Ok(out)
}

/// Builds the measurement plan and the train and test sets of `cfg`.
pub fn build_dataset(cfg: &ExperimentConfig, keep_states: bool) -> Result<ExperimentData> {
    cfg.validate()?;
    let plan = experiment_plan(cfg)?;
    let train = generate_phase(cfg, &plan, Phase::Train, cfg.n_train, keep_states)?;
    let test = generate_phase(cfg, &plan, Phase::Test, cfg.test_size(), keep_states)?;
    Ok(ExperimentData {
        config: cfg.clone(),
        plan,
        candidates: (train.candidates, test.candidates),
        states: keep_states.then_some((train.states, test.states)),
        train: train.rows,
        train_meta: train.meta,
        test: test.rows,
        test_meta: test.meta,
    })
}
