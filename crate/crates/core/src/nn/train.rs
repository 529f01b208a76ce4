use std::f64::consts::LN_2;

use super::dataset::LabeledDataset;
use super::model::{activate, MlpModel, OutputKind, PROB_FLOOR};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// RNG stream used for per-epoch shuffling.
const SHUFFLE_STREAM: u64 = 2;

/// Mini-batch SGD settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Uniform init half-width; `None` uses `1/sqrt(fan_in)` per layer.
    pub init_scale: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 200,
            learning_rate: 0.05,
            seed: 0,
            init_scale: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate must be a finite non-negative number, got {}",
                self.learning_rate
            )));
        }
        if let Some(s) = self.init_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid(format!(
                    "init scale must be positive, got {s}"
                )));
            }
        }
        Ok(())
    }
}

/// Gradients with the same layout as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Gradients {
    fn zeros_like(m: &MlpModel) -> Self {
        Gradients {
            w1: vec![0.0; m.w1.len()],
            b1: vec![0.0; m.b1.len()],
            w2: vec![0.0; m.w2.len()],
            b2: vec![0.0; m.b2.len()],
        }
    }

    fn clear(&mut self) {
        for v in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    /// All gradient entries in the order `w1, b1, w2, b2`.
    pub fn flatten(&self) -> Vec<f64> {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }
}

/// Per-sample scratch buffers.
struct Workspace {
    hidden: Vec<f64>,
    out: Vec<f64>,
    delta_hidden: Vec<f64>,
}

impl Workspace {
    fn new(m: &MlpModel) -> Self {
        Workspace {
            hidden: vec![0.0; m.n_hidden],
            out: vec![0.0; m.n_out],
            delta_hidden: vec![0.0; m.n_hidden],
        }
    }
}

/// Loss of one sample in nats; `ws.out` holds the probabilities afterwards.
fn forward_sample(m: &MlpModel, x: &[f64], label: usize, ws: &mut Workspace) -> f64 {
    m.logits_into(x, &mut ws.hidden, &mut ws.out);
    activate(m.output, &mut ws.out);
    let p_true = match m.output {
        OutputKind::Sigmoid if label == 1 => ws.out[0],
        OutputKind::Sigmoid => 1.0 - ws.out[0],
        OutputKind::Softmax => ws.out[label],
    };
    -p_true.max(PROB_FLOOR).ln()
}

/// Adds the gradient of one sample's loss (nats) to `g`. Requires a prior
/// `forward_sample` on the same input.
fn backward_sample(m: &MlpModel, x: &[f64], label: usize, ws: &mut Workspace, g: &mut Gradients) {
    // d loss / d logit = p - y for both sigmoid and softmax outputs.
    match m.output {
        OutputKind::Sigmoid => ws.out[0] -= if label == 1 { 1.0 } else { 0.0 },
        OutputKind::Softmax => ws.out[label] -= 1.0,
    }
    let delta = &ws.out;
    let last: &[f64] = if m.n_hidden == 0 { x } else { &ws.hidden };
    let k = last.len();
    for (o, &d) in delta.iter().enumerate() {
        g.b2[o] += d;
        for (gw, &a) in g.w2[o * k..(o + 1) * k].iter_mut().zip(last) {
            *gw += d * a;
        }
    }
    if m.n_hidden == 0 {
        return;
    }
    for j in 0..m.n_hidden {
        // ReLU subgradient at exactly zero is taken as zero.
        ws.delta_hidden[j] = if ws.hidden[j] > 0.0 {
            delta
                .iter()
                .enumerate()
                .map(|(o, &d)| d * m.w2[o * k + j])
                .sum()
        } else {
            0.0
        };
    }
    let n_in = m.n_in;
    for (j, &dh) in ws.delta_hidden.iter().enumerate() {
        if dh == 0.0 {
            continue;
        }
        g.b1[j] += dh;
        for (gw, &xi) in g.w1[j * n_in..(j + 1) * n_in].iter_mut().zip(x) {
            *gw += dh * xi;
        }
    }
}

fn check_shapes(model: &MlpModel, data: &LabeledDataset) -> Result<()> {
    if data.n_in() != model.n_in {
        return Err(Error::invalid(format!(
            "model takes {} features but the dataset has {}",
            model.n_in,
            data.n_in()
        )));
    }
    if data.n_classes() != model.n_classes() {
        return Err(Error::invalid(format!(
            "model predicts {} classes but the dataset has {}",
            model.n_classes(),
            data.n_classes()
        )));
    }
    Ok(())
}

/// Backpropagation gradients of the mean loss (in nats) over the rows
/// `batch` of `data`.
pub fn gradients(model: &MlpModel, data: &LabeledDataset, batch: &[usize]) -> Result<Gradients> {
    check_shapes(model, data)?;
    if batch.is_empty() {
        return Err(Error::invalid("gradient of an empty batch"));
    }
    let mut g = Gradients::zeros_like(model);
    let mut ws = Workspace::new(model);
    for &i in batch {
        forward_sample(model, data.row(i), data.label(i), &mut ws);
        backward_sample(model, data.row(i), data.label(i), &mut ws, &mut g);
    }
    let inv = 1.0 / batch.len() as f64;
    for v in [&mut g.w1, &mut g.b1, &mut g.w2, &mut g.b2] {
        v.iter_mut().for_each(|x| *x *= inv);
    }
    Ok(g)
}

/// Mean cross-entropy in nats over the rows `batch` of `data`.
pub fn mean_loss_nats(model: &MlpModel, data: &LabeledDataset, batch: &[usize]) -> Result<f64> {
    check_shapes(model, data)?;
    if batch.is_empty() {
        return Err(Error::invalid("loss of an empty batch"));
    }
    let mut ws = Workspace::new(model);
    let total: f64 = batch
        .iter()
        .map(|&i| forward_sample(model, data.row(i), data.label(i), &mut ws))
        .sum();
    Ok(total / batch.len() as f64)
}

/// Mean cross-entropy in bits over the whole dataset.
pub fn mean_loss_bits(model: &MlpModel, data: &LabeledDataset) -> Result<f64> {
    let all: Vec<usize> = (0..data.len()).collect();
    Ok(mean_loss_nats(model, data, &all)? / LN_2)
}

fn apply_update(model: &mut MlpModel, g: &Gradients, step: f64) {
    for (w, d) in [
        (&mut model.w1, &g.w1),
        (&mut model.b1, &g.b1),
        (&mut model.w2, &g.w2),
        (&mut model.b2, &g.b2),
    ] {
        for (wi, di) in w.iter_mut().zip(d) {
            *wi -= step * di;
        }
    }
}

/// Mini-batch SGD. Each epoch shuffles the rows with the config RNG, splits
/// them into batches (the last may be short) and steps against the mean
/// batch gradient. Returns the model and the mean training loss of each
/// epoch in bits, accumulated over the epoch's forward passes.
pub fn train(
    mut model: MlpModel,
    data: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<(MlpModel, Vec<f64>)> {
    cfg.validate()?;
    check_shapes(&model, data)?;
    if data.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    let mut rng = Rng::with_stream(cfg.seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut g = Gradients::zeros_like(&model);
    let mut ws = Workspace::new(&model);
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            g.clear();
            for &i in batch {
                let (x, y) = (data.row(i), data.label(i));
                epoch_loss += forward_sample(&model, x, y, &mut ws);
                backward_sample(&model, x, y, &mut ws, &mut g);
            }
            if cfg.learning_rate > 0.0 {
                apply_update(&mut model, &g, cfg.learning_rate / batch.len() as f64);
            }
        }
        history.push(epoch_loss / data.len() as f64 / LN_2);
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::model::sigmoid;

    /// Flattened parameters, for finite differences.
    fn params_mut(m: &mut MlpModel) -> Vec<&mut f64> {
        m.w1.iter_mut()
            .chain(m.b1.iter_mut())
            .chain(m.w2.iter_mut())
            .chain(m.b2.iter_mut())
            .collect()
    }

    pub(crate) fn max_relative_fd_error(model: &MlpModel, data: &LabeledDataset) -> f64 {
        let batch: Vec<usize> = (0..data.len()).collect();
        let analytic = gradients(model, data, &batch).unwrap().flatten();
        let h = 1e-5;
        let mut numeric = Vec::with_capacity(analytic.len());
        for k in 0..analytic.len() {
            let mut plus = model.clone();
            *params_mut(&mut plus)[k] += h;
            let mut minus = model.clone();
            *params_mut(&mut minus)[k] -= h;
            let lp = mean_loss_nats(&plus, data, &batch).unwrap();
            let lm = mean_loss_nats(&minus, data, &batch).unwrap();
            numeric.push((lp - lm) / (2.0 * h));
        }
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n).powi(2))
            .sum();
        let norm: f64 = analytic.iter().chain(&numeric).map(|a| a * a).sum::<f64>() / 2.0;
        (diff / norm.max(1e-300)).sqrt()
    }

    fn random_data(rng: &mut Rng, n_in: usize, n_classes: usize, n: usize) -> LabeledDataset {
        let features = (0..n * n_in).map(|_| rng.normal()).collect();
        let labels = (0..n).map(|_| rng.below(n_classes)).collect();
        LabeledDataset::new(n_in, n_classes, features, labels).unwrap()
    }

    #[test]
    fn zero_input_bias_gradient() {
        let mut m = MlpModel::zeros(3, 0, 1, OutputKind::Sigmoid).unwrap();
        m.b2[0] = 0.7;
        let d = LabeledDataset::new(3, 2, vec![0.0; 3], vec![0]).unwrap();
        let g = gradients(&m, &d, &[0]).unwrap();
        assert!((g.b2[0] - sigmoid(0.7)).abs() < 1e-15);
        assert!(g.w2.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn finite_differences_4_8_1() {
        let mut rng = Rng::new(11);
        let m = MlpModel::init(4, 8, 1, OutputKind::Sigmoid, &mut rng, None).unwrap();
        let d = random_data(&mut rng, 4, 2, 16);
        let err = max_relative_fd_error(&m, &d);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn finite_differences_softmax() {
        let mut rng = Rng::new(12);
        for hidden in [0, 6] {
            let m = MlpModel::init(5, hidden, 4, OutputKind::Softmax, &mut rng, Some(0.8)).unwrap();
            let d = random_data(&mut rng, 5, 4, 10);
            let err = max_relative_fd_error(&m, &d);
            assert!(err < 1e-6, "hidden {hidden}: {err}");
        }
    }

    #[test]
    fn duplicate_samples_same_gradient() {
        let mut rng = Rng::new(13);
        let m = MlpModel::init(4, 5, 3, OutputKind::Softmax, &mut rng, None).unwrap();
        let d = random_data(&mut rng, 4, 3, 1);
        let one = gradients(&m, &d, &[0]).unwrap();
        let two = gradients(&m, &d, &[0, 0, 0]).unwrap();
        for (a, b) in one.flatten().iter().zip(two.flatten()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_learning_rate_keeps_weights() {
        let mut rng = Rng::new(14);
        let m = MlpModel::init(4, 8, 1, OutputKind::Sigmoid, &mut rng, None).unwrap();
        let d = random_data(&mut rng, 4, 2, 100);
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 3,
            ..TrainConfig::default()
        };
        let (trained, history) = train(m.clone(), &d, &cfg).unwrap();
        assert_eq!(trained, m);
        assert_eq!(history.len(), 3);
    }

    #[test]
    fn blobs_are_learned_deterministically() {
        let mut rng = Rng::new(15);
        let mut d = LabeledDataset::empty(2, 2).unwrap();
        for i in 0..400 {
            let c = i % 2;
            let centre = if c == 1 { 2.0 } else { -2.0 };
            d.push(&[centre + rng.normal(), centre + rng.normal()], c)
                .unwrap();
        }
        let cfg = TrainConfig {
            learning_rate: 0.1,
            epochs: 50,
            seed: 3,
            ..TrainConfig::default()
        };
        let init = MlpModel::init(2, 8, 1, OutputKind::Sigmoid, &mut Rng::new(1), None).unwrap();
        let (m, history) = train(init.clone(), &d, &cfg).unwrap();
        let correct = d
            .rows()
            .filter(|(x, y)| m.predict_label(x).unwrap() == *y)
            .count();
        assert!(correct as f64 / d.len() as f64 >= 0.99);
        assert!(history.iter().all(|h| h.is_finite()));
        assert!(history.last().unwrap() < &history[0]);
        let (again, history2) = train(init, &d, &cfg).unwrap();
        assert_eq!(again, m);
        assert_eq!(history, history2);
    }

    #[test]
    fn rejects_bad_config() {
        let d = LabeledDataset::new(1, 2, vec![0.0], vec![0]).unwrap();
        let m = MlpModel::zeros(1, 0, 1, OutputKind::Sigmoid).unwrap();
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(train(m.clone(), &d, &bad).is_err());
        let wrong = LabeledDataset::new(2, 2, vec![0.0; 2], vec![0]).unwrap();
        assert!(train(m, &wrong, &TrainConfig::default()).is_err());
    }
}
