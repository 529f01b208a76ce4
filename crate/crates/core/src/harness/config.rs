//! Experiment configuration, its canonical text form and hash.

use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::FeatureScheme;
use crate::nn::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    /// Depolarized two-qubit family `rho(theta, phi)`.
    E1,
    /// Hilbert-Schmidt random two-qubit states with an entanglement gap.
    E2,
    /// Three-qubit biseparable mixtures, four classes.
    E3,
    /// Four-qubit separable vs. noisy-pure channels.
    E4,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [
        Experiment::E1,
        Experiment::E2,
        Experiment::E3,
        Experiment::E4,
    ];

    pub fn n_qubits(self) -> usize {
        match self {
            Experiment::E1 | Experiment::E2 => 2,
            Experiment::E3 => 3,
            Experiment::E4 => 4,
        }
    }

    pub fn n_classes(self) -> usize {
        match self {
            Experiment::E3 => 4,
            _ => 2,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "E1" => Ok(Experiment::E1),
            "E2" => Ok(Experiment::E2),
            "E3" => Ok(Experiment::E3),
            "E4" => Ok(Experiment::E4),
            _ => Err(Error::invalid(format!("unknown experiment {s:?}"))),
        }
    }
}

/// Everything that determines an experiment's datasets, model and metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub n_train: usize,
    /// `None` derives the test size from `train_fraction`.
    pub n_test: Option<usize>,
    pub train_fraction: f64,
    pub scheme: FeatureScheme,
    pub hidden: usize,
    /// Entanglement gap applied to train and test sets (E2).
    pub gap: f64,
    /// Lower end of the mixing weight of the noisy channel (E4).
    pub p_min: f64,
    /// Standard deviation of the training `p` around the boundary (E1).
    pub p_sd: f64,
    /// Heatmap bins per axis (E1).
    pub grid: usize,
    /// `phi` values per heatmap bin (E1).
    pub phi_samples: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub init_scale: Option<f64>,
}

impl ExperimentConfig {
    /// Desk-scale defaults for `experiment`.
    pub fn defaults(experiment: Experiment) -> Self {
        let (n_train, scheme, hidden) = match experiment {
            Experiment::E1 => (50_000, FeatureScheme::ChshFixed, 0),
            Experiment::E2 => (50_000, FeatureScheme::Tomographic { n_qubits: 2 }, 256),
            Experiment::E3 => (30_000, FeatureScheme::TripleChsh12, 50),
            Experiment::E4 => (20_000, FeatureScheme::FullLocal { n_qubits: 4 }, 15),
        };
        let train = TrainConfig::default();
        ExperimentConfig {
            experiment,
            seed: 1,
            n_train,
            n_test: None,
            train_fraction: 0.95,
            scheme,
            hidden,
            gap: 0.0,
            p_min: 0.1,
            p_sd: 0.1,
            grid: 50,
            phi_samples: 8,
            epochs: train.epochs,
            learning_rate: if experiment == Experiment::E2 {
                0.2
            } else {
                train.learning_rate
            },
            batch_size: train.batch_size,
            init_scale: train.init_scale,
        }
    }

    /// Hidden width used in the original large-scale runs.
    pub fn paper_scale(mut self) -> Self {
        if self.experiment == Experiment::E2 {
            self.hidden = 4000;
        }
        self
    }

    pub fn test_size(&self) -> usize {
        self.n_test.unwrap_or_else(|| {
            let total = self.n_train as f64 / self.train_fraction;
            ((total - self.n_train as f64).round() as usize).max(1)
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            seed: self.seed,
            init_scale: self.init_scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::invalid(m));
        if !(0.90..=0.99).contains(&self.train_fraction) {
            return fail(format!(
                "train_fraction {} outside [0.90, 0.99]",
                self.train_fraction
            ));
        }
        if self.n_train == 0 || self.test_size() == 0 {
            return fail("train and test sets must be nonempty".into());
        }
        if self.scheme.n_qubits() != self.experiment.n_qubits() {
            return fail(format!(
                "scheme {} does not apply to {} ({} qubits)",
                self.scheme.name(),
                self.experiment,
                self.experiment.n_qubits()
            ));
        }
        if !(0.0..0.25).contains(&self.gap) {
            return fail(format!("gap {} outside [0, 0.25)", self.gap));
        }
        if !(0.0..1.0).contains(&self.p_min) {
            return fail(format!("p_min {} outside [0, 1)", self.p_min));
        }
        if !(self.p_sd > 0.0 && self.p_sd.is_finite()) {
            return fail(format!("p_sd must be positive, got {}", self.p_sd));
        }
        if self.grid == 0 || self.phi_samples == 0 {
            return fail("heatmap grid and phi samples must be positive".into());
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return fail(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            ));
        }
        self.train_config().validate()
    }

    /// Stable `key = value` text; equal configs give equal text.
    pub fn canonical_text(&self) -> String {
        let mut lines = vec![
            format!("experiment = {}", self.experiment),
            format!("seed = {}", self.seed),
            format!("n_train = {}", self.n_train),
            format!("n_test = {}", self.test_size()),
            format!("train_fraction = {:?}", self.train_fraction),
            format!("scheme = {}", self.scheme.name()),
            format!("hidden = {}", self.hidden),
        ];
        match self.experiment {
            Experiment::E1 => {
                lines.push(format!("p_sd = {:?}", self.p_sd));
                lines.push(format!("grid = {}", self.grid));
                lines.push(format!("phi_samples = {}", self.phi_samples));
            }
            Experiment::E2 => lines.push(format!("gap = {:?}", self.gap)),
            Experiment::E3 => {}
            Experiment::E4 => lines.push(format!("p_min = {:?}", self.p_min)),
        }
        lines.push(format!("epochs = {}", self.epochs));
        lines.push(format!("learning_rate = {:?}", self.learning_rate));
        lines.push(format!("batch_size = {}", self.batch_size));
        if let Some(s) = self.init_scale {
            lines.push(format!("init_scale = {s:?}"));
        }
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }

    /// First 16 hex digits of the SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Output directory name, e.g. `e2-1a2b3c4d5e6f7a8b`.
    pub fn dir_name(&self) -> String {
        format!(
            "{}-{}",
            self.experiment.to_string().to_lowercase(),
            self.hash()
        )
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::invalid(format!("bad value {value:?} for {key}")))
        }
        match key {
            "experiment" => {
                let e: Experiment = value.parse()?;
                if e != self.experiment {
                    return Err(Error::invalid(format!(
                        "config is for {e}, not {}",
                        self.experiment
                    )));
                }
            }
            "seed" => self.seed = num(key, value)?,
            "n_train" => self.n_train = num(key, value)?,
            "n_test" => self.n_test = Some(num(key, value)?),
            "train_fraction" => self.train_fraction = num(key, value)?,
            "scheme" => self.scheme = FeatureScheme::parse(value, self.experiment.n_qubits())?,
            "hidden" => self.hidden = num(key, value)?,
            "gap" => self.gap = num(key, value)?,
            "p_min" => self.p_min = num(key, value)?,
            "p_sd" => self.p_sd = num(key, value)?,
            "grid" => self.grid = num(key, value)?,
            "phi_samples" => self.phi_samples = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "learning_rate" | "lr" => self.learning_rate = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "init_scale" => self.init_scale = Some(num(key, value)?),
            _ => return Err(Error::invalid(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected key = value, got {raw:?}")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Parses a config file; `experiment` must be present.
    pub fn from_text(text: &str) -> Result<Self> {
        let experiment = text
            .lines()
            .filter_map(|l| l.split('#').next().unwrap().split_once('='))
            .find(|(k, _)| k.trim() == "experiment")
            .ok_or_else(|| Error::invalid("config text lacks an experiment key"))?
            .1
            .trim()
            .parse()?;
        let mut cfg = Self::defaults(experiment);
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
