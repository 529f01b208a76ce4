use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Probability clamp applied before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

/// Output nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    /// One output unit; the value is the probability of class 1.
    Sigmoid,
    /// One unit per class.
    Softmax,
}

impl OutputKind {
    pub fn name(&self) -> &'static str {
        match self {
            OutputKind::Sigmoid => "sigmoid",
            OutputKind::Softmax => "softmax",
        }
    }

    /// Number of classes predicted by a model with `n_out` output units.
    pub fn n_classes(&self, n_out: usize) -> usize {
        match self {
            OutputKind::Sigmoid => 2,
            OutputKind::Softmax => n_out,
        }
    }
}

/// Feedforward network with zero or one hidden ReLU layer.
///
/// Weights are row-major: `w1` is `n_hidden x n_in`, `w2` is
/// `n_out x n_hidden` (or `n_out x n_in` without a hidden layer).
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub(crate) n_in: usize,
    pub(crate) n_hidden: usize,
    pub(crate) n_out: usize,
    pub(crate) w1: Vec<f64>,
    pub(crate) b1: Vec<f64>,
    pub(crate) w2: Vec<f64>,
    pub(crate) b2: Vec<f64>,
    pub(crate) output: OutputKind,
}

impl MlpModel {
    /// All-zero model.
    pub fn zeros(n_in: usize, n_hidden: usize, n_out: usize, output: OutputKind) -> Result<Self> {
        if n_in == 0 {
            return Err(Error::invalid("a model needs at least one input"));
        }
        match output {
            OutputKind::Sigmoid if n_out != 1 => {
                return Err(Error::invalid("a sigmoid output has exactly one unit"))
            }
            OutputKind::Softmax if n_out < 2 => {
                return Err(Error::invalid("a softmax output needs at least two units"))
            }
            _ => {}
        }
        let last_in = if n_hidden == 0 { n_in } else { n_hidden };
        Ok(MlpModel {
            n_in,
            n_hidden,
            n_out,
            w1: vec![0.0; n_hidden * n_in],
            b1: vec![0.0; n_hidden],
            w2: vec![0.0; n_out * last_in],
            b2: vec![0.0; n_out],
            output,
        })
    }

    /// Uniform weight initialization on `[-s, s]`, zero biases. `s` defaults
    /// to `1/sqrt(fan_in)` of each layer; `init_scale` overrides it for every
    /// layer.
    pub fn init(
        n_in: usize,
        n_hidden: usize,
        n_out: usize,
        output: OutputKind,
        rng: &mut Rng,
        init_scale: Option<f64>,
    ) -> Result<Self> {
        let mut m = Self::zeros(n_in, n_hidden, n_out, output)?;
        let s1 = init_scale.unwrap_or(1.0 / (n_in as f64).sqrt());
        for w in m.w1.iter_mut() {
            *w = rng.uniform_in(-s1, s1);
        }
        let s2 = init_scale.unwrap_or(1.0 / (m.last_in() as f64).sqrt());
        for w in m.w2.iter_mut() {
            *w = rng.uniform_in(-s2, s2);
        }
        Ok(m)
    }

    /// Single-layer model with explicit weights, e.g. a fixed Bell inequality.
    pub fn linear(weights: &[f64], bias: f64) -> Result<Self> {
        let mut m = Self::zeros(weights.len(), 0, 1, OutputKind::Sigmoid)?;
        m.w2.copy_from_slice(weights);
        m.b2[0] = bias;
        Ok(m)
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn output(&self) -> OutputKind {
        self.output
    }

    pub fn n_classes(&self) -> usize {
        self.output.n_classes(self.n_out)
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.w2
    }

    pub fn output_biases(&self) -> &[f64] {
        &self.b2
    }

    pub fn hidden_weights(&self) -> &[f64] {
        &self.w1
    }

    pub fn hidden_biases(&self) -> &[f64] {
        &self.b1
    }

    pub(crate) fn last_in(&self) -> usize {
        if self.n_hidden == 0 {
            self.n_in
        } else {
            self.n_hidden
        }
    }

    /// All parameters in the order `W1, w01, W2, w02`.
    pub fn parameters(&self) -> Vec<f64> {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }

    /// Replaces all parameters, in the order of [`MlpModel::parameters`].
    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        let total = self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len();
        if values.len() != total {
            return Err(Error::invalid(format!(
                "model has {total} parameters, got {}",
                values.len()
            )));
        }
        let mut rest = values;
        for v in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            let (head, tail) = rest.split_at(v.len());
            v.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    /// Multiplies the output layer by `k`.
    pub fn scale_output(&mut self, k: f64) {
        self.w2.iter_mut().for_each(|w| *w *= k);
        self.b2.iter_mut().for_each(|w| *w *= k);
    }

    /// Computes hidden activations into `hidden` and output logits into
    /// `logits`. No length checks.
    pub(crate) fn logits_into(&self, x: &[f64], hidden: &mut [f64], logits: &mut [f64]) {
        let last: &[f64] = if self.n_hidden == 0 {
            x
        } else {
            for (j, h) in hidden.iter_mut().enumerate() {
                let row = &self.w1[j * self.n_in..(j + 1) * self.n_in];
                let z = self.b1[j] + dot(row, x);
                *h = z.max(0.0);
            }
            hidden
        };
        let k = self.last_in();
        for (o, l) in logits.iter_mut().enumerate() {
            *l = self.b2[o] + dot(&self.w2[o * k..(o + 1) * k], last);
        }
    }

    /// Output logits (pre-activation).
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut hidden = vec![0.0; self.n_hidden];
        let mut logits = vec![0.0; self.n_out];
        self.logits_into(x, &mut hidden, &mut logits);
        Ok(logits)
    }

    /// Class probabilities. For a sigmoid model this is the single value
    /// `P(class 1)`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut logits = self.logits(x)?;
        activate(self.output, &mut logits);
        Ok(logits)
    }

    /// Predicted class: sigmoid picks class 1 iff the output is at least 0.5,
    /// softmax takes the arg-max with ties going to the lowest index.
    pub fn predict_label(&self, x: &[f64]) -> Result<usize> {
        Ok(decide(self.output, &self.forward(x)?))
    }

    pub(crate) fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_in {
            return Err(Error::invalid(format!(
                "model expects {} features, got {}",
                self.n_in,
                x.len()
            )));
        }
        Ok(())
    }

    /// Serializes to the flat text model format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# bellml mlp v1");
        let _ = writeln!(s, "n_in {}", self.n_in);
        let _ = writeln!(s, "n_hidden {}", self.n_hidden);
        let _ = writeln!(s, "n_out {}", self.n_out);
        let _ = writeln!(s, "output {}", self.output.name());
        write_matrix(&mut s, "W1", &self.w1, self.n_hidden, self.n_in);
        write_matrix(
            &mut s,
            "w01",
            &self.b1,
            usize::from(self.n_hidden > 0),
            self.n_hidden,
        );
        write_matrix(&mut s, "W2", &self.w2, self.n_out, self.last_in());
        write_matrix(&mut s, "w02", &self.b2, 1, self.n_out);
        s
    }

    /// Parses the text model format.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut header = |key: &str| -> Result<String> {
            let line = lines
                .next()
                .ok_or_else(|| Error::invalid(format!("model file ends before {key}")))?;
            let (k, v) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| Error::invalid(format!("malformed model line {line:?}")))?;
            if k != key {
                return Err(Error::invalid(format!("expected {key}, found {k}")));
            }
            Ok(v.trim().to_string())
        };
        let parse_count = |v: String| {
            v.parse::<usize>()
                .map_err(|e| Error::invalid(format!("bad count {v:?}: {e}")))
        };
        let n_in = parse_count(header("n_in")?)?;
        let n_hidden = parse_count(header("n_hidden")?)?;
        let n_out = parse_count(header("n_out")?)?;
        let output = match header("output")?.as_str() {
            "sigmoid" => OutputKind::Sigmoid,
            "softmax" => OutputKind::Softmax,
            other => return Err(Error::invalid(format!("unknown output kind {other:?}"))),
        };
        let mut m = Self::zeros(n_in, n_hidden, n_out, output)?;
        let rest: Vec<&str> = lines.collect();
        let mut cursor = 0;
        let last_in = m.last_in();
        m.w1 = read_matrix(&rest, &mut cursor, "W1", n_hidden, n_in)?;
        m.b1 = read_matrix(
            &rest,
            &mut cursor,
            "w01",
            usize::from(n_hidden > 0),
            n_hidden,
        )?;
        m.w2 = read_matrix(&rest, &mut cursor, "W2", n_out, last_in)?;
        m.b2 = read_matrix(&rest, &mut cursor, "w02", 1, n_out)?;
        if cursor != rest.len() {
            return Err(Error::invalid("trailing data after model weights"));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::harness::io::write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| Error::parse(path, e.to_string()))
    }
}

fn write_matrix(s: &mut String, name: &str, data: &[f64], rows: usize, cols: usize) {
    let _ = writeln!(s, "{name} {rows} {cols}");
    for r in 0..rows {
        let row: Vec<String> = data[r * cols..(r + 1) * cols]
            .iter()
            .map(|x| format!("{x:?}"))
            .collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
}

fn read_matrix(
    lines: &[&str],
    cursor: &mut usize,
    name: &str,
    rows: usize,
    cols: usize,
) -> Result<Vec<f64>> {
    let head = lines
        .get(*cursor)
        .ok_or_else(|| Error::invalid(format!("missing {name} block")))?;
    let parts: Vec<&str> = head.split_whitespace().collect();
    let expect = [name.to_string(), rows.to_string(), cols.to_string()];
    if parts != expect.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::invalid(format!(
            "expected block header {:?}, found {head:?}",
            expect.join(" ")
        )));
    }
    *cursor += 1;
    let mut out = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let line = lines
            .get(*cursor)
            .ok_or_else(|| Error::invalid(format!("{name} block is truncated")))?;
        *cursor += 1;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::invalid(format!("bad number in {name}: {e}")))?;
        if row.len() != cols {
            return Err(Error::invalid(format!(
                "{name} row has {} values, expected {cols}",
                row.len()
            )));
        }
        out.extend(row);
    }
    Ok(out)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Softmax in place, shifted by the maximum logit.
pub fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    z.iter_mut().for_each(|v| *v /= total);
}

pub(crate) fn activate(kind: OutputKind, logits: &mut [f64]) {
    match kind {
        OutputKind::Sigmoid => logits[0] = sigmoid(logits[0]),
        OutputKind::Softmax => softmax_in_place(logits),
    }
}

pub(crate) fn decide(kind: OutputKind, probs: &[f64]) -> usize {
    match kind {
        OutputKind::Sigmoid => usize::from(probs[0] >= 0.5),
        OutputKind::Softmax => {
            let mut best = 0;
            for (i, &p) in probs.iter().enumerate() {
                if p > probs[best] {
                    best = i;
                }
            }
            best
        }
    }
}

/// `max(z, 0)` elementwise.
pub fn relu(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| v.max(0.0)).collect()
}

/// Cross-entropy in bits, `-sum_j y_j log2(p_j)`, with predictions clamped
/// below at 1e-12.
///
/// `pred` is either a full probability vector matching `label`, or a single
/// sigmoid output `P(class 1)` against a two-entry one-hot label.
pub fn cross_entropy(pred: &[f64], label: &[f64]) -> f64 {
    let probs: Vec<f64> = if pred.len() == 1 && label.len() == 2 {
        vec![1.0 - pred[0], pred[0]]
    } else {
        assert_eq!(
            pred.len(),
            label.len(),
            "prediction and label lengths differ"
        );
        pred.to_vec()
    };
    -probs
        .iter()
        .zip(label)
        .filter(|(_, &y)| y != 0.0)
        .map(|(&p, &y)| y * p.max(PROB_FLOOR).log2())
        .sum::<f64>()
}
