//! Evaluation results and their text serialization.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::oracle::Group;

/// Mismatch rate binned over `(p, theta)`, averaged over the other
/// parameters of each bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub p_bins: usize,
    pub theta_bins: usize,
    /// Bin centres, `p_bins * theta_bins` entries, `p`-major.
    pub p: Vec<f64>,
    pub theta: Vec<f64>,
    pub r_mm: Vec<f64>,
}

impl Heatmap {
    /// Mismatch rate of the bin containing `(p, theta)` on the uniform grid
    /// `[0, 1] x [0, pi]`.
    pub fn at(&self, p: f64, theta: f64) -> f64 {
        let i = ((p * self.p_bins as f64) as usize).min(self.p_bins - 1);
        let j = ((theta / std::f64::consts::PI * self.theta_bins as f64) as usize)
            .min(self.theta_bins - 1);
        self.r_mm[i * self.theta_bins + j]
    }

    /// Flat CSV with header `p,theta,r_mm`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("p,theta,r_mm\n");
        for k in 0..self.r_mm.len() {
            let _ = writeln!(
                s,
                "{},{},{}",
                fmt_num(self.p[k]),
                fmt_num(self.theta[k]),
                fmt_num(self.r_mm[k])
            );
        }
        s
    }

    pub fn from_csv(text: &str, p_bins: usize, theta_bins: usize) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::invalid(format!("heatmap header: {e}")))?;
        if headers != vec!["p", "theta", "r_mm"] {
            return Err(Error::invalid(format!(
                "unexpected heatmap header {headers:?}"
            )));
        }
        let mut h = Heatmap {
            p_bins,
            theta_bins,
            p: Vec::new(),
            theta: Vec::new(),
            r_mm: Vec::new(),
        };
        for record in reader.records() {
            let record = record.map_err(|e| Error::invalid(format!("heatmap row: {e}")))?;
            let num = |k: usize| -> Result<f64> {
                record
                    .get(k)
                    .unwrap_or("")
                    .parse()
                    .map_err(|e| Error::invalid(format!("heatmap value: {e}")))
            };
            h.p.push(num(0)?);
            h.theta.push(num(1)?);
            h.r_mm.push(num(2)?);
        }
        if h.r_mm.len() != p_bins * theta_bins {
            return Err(Error::invalid(format!(
                "heatmap has {} rows, expected {}",
                h.r_mm.len(),
                p_bins * theta_bins
            )));
        }
        Ok(h)
    }
}

/// Detection counts for one analysis group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupRate {
    pub group: Group,
    pub total: u64,
    pub correct: u64,
}

impl GroupRate {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Metrics of one classifier on one test set.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub name: String,
    pub n_classes: usize,
    pub match_rate: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    pub heatmap: Option<Heatmap>,
    pub groups: Vec<GroupRate>,
    /// Mean training loss per epoch, in bits.
    pub loss_history: Vec<f64>,
    /// Named scalar results specific to an experiment.
    pub extras: BTreeMap<String, f64>,
}

impl MetricsReport {
    /// Report from true and predicted labels.
    pub fn from_predictions(name: &str, n_classes: usize, truth: &[usize], pred: &[usize]) -> Self {
        assert_eq!(truth.len(), pred.len());
        let mut confusion = vec![vec![0u64; n_classes]; n_classes];
        for (&t, &p) in truth.iter().zip(pred) {
            confusion[t][p] += 1;
        }
        let matched = truth.iter().zip(pred).filter(|(t, p)| t == p).count();
        let match_rate = if truth.is_empty() {
            0.0
        } else {
            matched as f64 / truth.len() as f64
        };
        MetricsReport {
            name: name.to_string(),
            n_classes,
            match_rate,
            confusion,
            heatmap: None,
            groups: Vec::new(),
            loss_history: Vec::new(),
            extras: BTreeMap::new(),
        }
    }

    pub fn n_samples(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    pub fn mismatch_rate(&self) -> f64 {
        1.0 - self.match_rate
    }

    /// Rows of the confusion matrix summed: the true class counts.
    pub fn class_counts(&self) -> Vec<u64> {
        self.confusion.iter().map(|r| r.iter().sum()).collect()
    }

    /// Match rate of always predicting the most common true class.
    pub fn majority_rate(&self) -> f64 {
        let n = self.n_samples();
        if n == 0 {
            return 0.0;
        }
        *self.class_counts().iter().max().unwrap() as f64 / n as f64
    }

    pub fn group(&self, g: Group) -> Option<&GroupRate> {
        self.groups.iter().find(|r| r.group == g)
    }

    /// Every real value rounded to 12 significant digits, as written to disk.
    pub fn quantized(&self) -> Self {
        let mut r = self.clone();
        r.match_rate = quantize(r.match_rate);
        r.loss_history.iter_mut().for_each(|v| *v = quantize(*v));
        r.extras.values_mut().for_each(|v| *v = quantize(*v));
        if let Some(h) = r.heatmap.as_mut() {
            for v in
                h.p.iter_mut()
                    .chain(h.theta.iter_mut())
                    .chain(h.r_mm.iter_mut())
            {
                *v = quantize(*v);
            }
        }
        r
    }

    /// Key-value text. A heatmap is referenced by `heatmap_file` and stored
    /// separately with [`Heatmap::to_csv`].
    pub fn to_text(&self, heatmap_file: Option<&str>) -> String {
        let mut s = String::from("# bellml metrics v1\n");
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "n_classes = {}", self.n_classes);
        let _ = writeln!(s, "n_samples = {}", self.n_samples());
        let _ = writeln!(s, "match_rate = {}", fmt_num(self.match_rate));
        for (i, row) in self.confusion.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            let _ = writeln!(s, "confusion.{i} = {}", cells.join(" "));
        }
        for g in &self.groups {
            let _ = writeln!(
                s,
                "group.{} = {} {} {}",
                g.group,
                g.total,
                g.correct,
                fmt_num(g.rate())
            );
        }
        for (k, v) in &self.extras {
            let _ = writeln!(s, "extra.{k} = {}", fmt_num(*v));
        }
        if !self.loss_history.is_empty() {
            let vals: Vec<String> = self.loss_history.iter().map(|v| fmt_num(*v)).collect();
            let _ = writeln!(s, "loss_history = {}", vals.join(" "));
        }
        if let (Some(h), Some(file)) = (&self.heatmap, heatmap_file) {
            let _ = writeln!(s, "heatmap = {file} {} {}", h.p_bins, h.theta_bins);
        }
        s
    }

    /// Parses [`MetricsReport::to_text`] output. `load_heatmap` receives the
    /// referenced file name and returns its CSV text.
    pub fn from_text(
        text: &str,
        mut load_heatmap: impl FnMut(&str) -> Result<String>,
    ) -> Result<Self> {
        let mut name = None;
        let mut n_classes = None;
        let mut n_samples = None;
        let mut match_rate = None;
        let mut confusion: Vec<Vec<u64>> = Vec::new();
        let mut groups = Vec::new();
        let mut extras = BTreeMap::new();
        let mut loss_history = Vec::new();
        let mut heatmap = None;
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once(" = ")
                .ok_or_else(|| Error::invalid(format!("malformed metrics line {line:?}")))?;
            let bad = |what: &str| Error::invalid(format!("bad {what} in {line:?}"));
            match key {
                "name" => name = Some(value.to_string()),
                "n_classes" => n_classes = Some(value.parse::<usize>().map_err(|_| bad("count"))?),
                "n_samples" => n_samples = Some(value.parse::<u64>().map_err(|_| bad("count"))?),
                "match_rate" => match_rate = Some(parse_num(value).ok_or_else(|| bad("number"))?),
                "loss_history" => {
                    loss_history = value
                        .split_whitespace()
                        .map(|v| parse_num(v).ok_or_else(|| bad("number")))
                        .collect::<Result<_>>()?
                }
                "heatmap" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    let [file, pb, tb] = parts[..] else {
                        return Err(bad("heatmap reference"));
                    };
                    let pb = pb.parse().map_err(|_| bad("bin count"))?;
                    let tb = tb.parse().map_err(|_| bad("bin count"))?;
                    heatmap = Some(Heatmap::from_csv(&load_heatmap(file)?, pb, tb)?);
                }
                _ => {
                    if let Some(i) = key.strip_prefix("confusion.") {
                        let i: usize = i.parse().map_err(|_| bad("row index"))?;
                        if i != confusion.len() {
                            return Err(bad("row order"));
                        }
                        confusion.push(
                            value
                                .split_whitespace()
                                .map(|v| v.parse::<u64>().map_err(|_| bad("count")))
                                .collect::<Result<_>>()?,
                        );
                    } else if let Some(g) = key.strip_prefix("group.") {
                        let parts: Vec<&str> = value.split_whitespace().collect();
                        let [total, correct, _] = parts[..] else {
                            return Err(bad("group entry"));
                        };
                        groups.push(GroupRate {
                            group: g.parse()?,
                            total: total.parse().map_err(|_| bad("count"))?,
                            correct: correct.parse().map_err(|_| bad("count"))?,
                        });
                    } else if let Some(k) = key.strip_prefix("extra.") {
                        extras.insert(
                            k.to_string(),
                            parse_num(value).ok_or_else(|| bad("number"))?,
                        );
                    } else {
                        return Err(Error::invalid(format!("unknown metrics key {key:?}")));
                    }
                }
            }
        }
        let missing = |k: &str| Error::invalid(format!("metrics file lacks {k}"));
        let n_classes = n_classes.ok_or_else(|| missing("n_classes"))?;
        if confusion.len() != n_classes || confusion.iter().any(|r| r.len() != n_classes) {
            return Err(Error::invalid("confusion matrix does not match n_classes"));
        }
        let report = MetricsReport {
            name: name.ok_or_else(|| missing("name"))?,
            n_classes,
            match_rate: match_rate.ok_or_else(|| missing("match_rate"))?,
            confusion,
            heatmap,
            groups,
            loss_history,
            extras,
        };
        if Some(report.n_samples()) != n_samples {
            return Err(Error::invalid(
                "n_samples disagrees with the confusion matrix",
            ));
        }
        Ok(report)
    }
}

/// Rounds to 12 significant digits.
pub fn quantize(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap()
}

/// Decimal text of `x` rounded to 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    let q = quantize(x);
    if q.is_nan() {
        "nan".into()
    } else if q.is_infinite() {
        if q > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{q}")
    }
}

fn parse_num(s: &str) -> Option<f64> {
    s.parse().ok()
}
