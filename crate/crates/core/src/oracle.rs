//! Ground-truth labels: PPT criterion, CHSH value, the `W+` witness, the
//! entanglement gap filter and the multi-class labels of the three- and
//! four-qubit ensembles.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::chsh_operator;
use crate::features::MeasurementAxis;
use crate::linalg::{self, ComplexMatrix};
use crate::state::{DensityMatrix, Split};

/// A PPT eigenvalue below `-ENTANGLEMENT_TOL` counts as entangled.
pub const ENTANGLEMENT_TOL: f64 = 1e-12;

/// The parties transposed in a PPT test.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bipartition {
    pub n_parties: usize,
    pub transposed: Vec<usize>,
}

impl Bipartition {
    pub fn new(n_parties: usize, mut transposed: Vec<usize>) -> Result<Self> {
        transposed.sort_unstable();
        transposed.dedup();
        if transposed.is_empty()
            || transposed.len() >= n_parties
            || transposed.iter().any(|&p| p >= n_parties)
        {
            return Err(Error::invalid(format!(
                "{transposed:?} is not one side of a bipartition of {n_parties} parties"
            )));
        }
        Ok(Bipartition {
            n_parties,
            transposed,
        })
    }

    /// Every bipartition of `n` parties up to swapping the sides: the side
    /// listed is the one not containing the last party.
    pub fn all(n_parties: usize) -> Vec<Bipartition> {
        let last = n_parties - 1;
        (1u32..(1 << last))
            .map(|mask| {
                let parties = (0..last).filter(|&p| mask & (1 << p) != 0).collect();
                Bipartition::new(n_parties, parties).unwrap()
            })
            .collect()
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |p: usize| (b'A' + p as u8) as char;
        for &p in &self.transposed {
            write!(f, "{}", name(p))?;
        }
        f.write_str("|")?;
        for p in (0..self.n_parties).filter(|p| !self.transposed.contains(p)) {
            write!(f, "{}", name(p))?;
        }
        Ok(())
    }
}

/// Outcome of the PPT test across one bipartition.
#[derive(Debug, Clone, PartialEq)]
pub struct PptVerdict {
    pub lambda_min: f64,
    pub entangled: bool,
    pub bipartition: Bipartition,
}

/// Smallest eigenvalue of the partial transpose over subsystem `which`.
pub fn ppt_verdict(rho: &ComplexMatrix, dims: &[usize], which: usize) -> Result<PptVerdict> {
    let pt = linalg::partial_transpose(rho, dims, which)?;
    let lambda_min = linalg::hermitian_eigenvalues(&pt)?.min();
    Ok(PptVerdict {
        lambda_min,
        entangled: lambda_min < -ENTANGLEMENT_TOL,
        bipartition: Bipartition::new(dims.len(), vec![which])?,
    })
}

/// PPT test across an arbitrary bipartition of a multi-qubit state.
pub fn ppt_verdict_cut(rho: &DensityMatrix, cut: &Bipartition) -> Result<PptVerdict> {
    if cut.n_parties != rho.n_qubits() {
        return Err(Error::invalid(format!(
            "bipartition of {} parties applied to a {}-qubit state",
            cut.n_parties,
            rho.n_qubits()
        )));
    }
    let pt = linalg::partial_transpose_parties(rho.matrix(), &rho.qubit_dims(), &cut.transposed)?;
    let lambda_min = linalg::hermitian_eigenvalues(&pt)?.min();
    Ok(PptVerdict {
        lambda_min,
        entangled: lambda_min < -ENTANGLEMENT_TOL,
        bipartition: cut.clone(),
    })
}

/// PPT test of a two-qubit state, transposing the second qubit.
pub fn two_qubit_ppt(rho: &DensityMatrix) -> Result<PptVerdict> {
    if rho.n_qubits() != 2 {
        return Err(Error::invalid("expected a two-qubit state"));
    }
    ppt_verdict(rho.matrix(), &[2, 2], 1)
}

/// The verdict with the smallest eigenvalue over every bipartition.
pub fn min_ppt_over_all_cuts(rho: &DensityMatrix) -> Result<PptVerdict> {
    let mut best: Option<PptVerdict> = None;
    for cut in Bipartition::all(rho.n_qubits()) {
        let v = ppt_verdict_cut(rho, &cut)?;
        if best.as_ref().is_none_or(|b| v.lambda_min < b.lambda_min) {
            best = Some(v);
        }
    }
    best.ok_or_else(|| Error::invalid("a single qubit has no bipartition"))
}

/// Closed-form smallest PPT eigenvalue of the depolarized
/// `cos(theta/2)|00> + e^{i phi} sin(theta/2)|11>` family.
pub fn analytic_lambda_min(p: f64, theta: f64) -> f64 {
    (1.0 - p) / 4.0 - p * (theta / 2.0).cos() * (theta / 2.0).sin()
}

/// Four measurement axes `(a, a', b, b')` for a CHSH test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshSettings {
    pub a: MeasurementAxis,
    pub a_prime: MeasurementAxis,
    pub b: MeasurementAxis,
    pub b_prime: MeasurementAxis,
}

impl ChshSettings {
    /// `a = Z`, `a' = X`, `b = (X - Z)/sqrt 2`, `b' = (X + Z)/sqrt 2`.
    pub fn standard() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ChshSettings {
            a: MeasurementAxis::z(),
            a_prime: MeasurementAxis::x(),
            b: MeasurementAxis::new(s, 0.0, -s).unwrap(),
            b_prime: MeasurementAxis::new(s, 0.0, s).unwrap(),
        }
    }
}

/// `<ab> - <ab'> + <a'b> + <a'b'>`.
pub fn chsh_value(rho: &DensityMatrix, settings: &ChshSettings) -> Result<f64> {
    if rho.n_qubits() != 2 {
        return Err(Error::invalid("the CHSH value needs a two-qubit state"));
    }
    linalg::expectation(rho.matrix(), &chsh_operator(settings))
}

/// `I/2 - |psi+><psi+|`.
pub fn witness_plus() -> ComplexMatrix {
    let mut w = ComplexMatrix::identity(4).scale(0.5);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = [h.into(), 0.0.into(), 0.0.into(), h.into()];
    w = &w - &ComplexMatrix::outer(&plus);
    w
}

/// `Tr(rho W+)`; negative values detect entanglement.
pub fn witness_plus_value(rho: &DensityMatrix) -> Result<f64> {
    if rho.n_qubits() != 2 {
        return Err(Error::invalid("the W+ witness needs a two-qubit state"));
    }
    linalg::expectation(rho.matrix(), &witness_plus())
}

/// Drops entangled samples with `|lambda_min| <= gap`; separable samples pass.
pub fn gap_filter<T>(samples: Vec<(T, PptVerdict)>, gap: f64) -> Vec<(T, PptVerdict)> {
    samples
        .into_iter()
        .filter(|(_, v)| passes_gap(v, gap))
        .collect()
}

pub fn passes_gap(verdict: &PptVerdict, gap: f64) -> bool {
    !verdict.entangled || verdict.lambda_min.abs() > gap
}

/// A class index with its one-hot encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClassLabel {
    pub class_index: usize,
    pub n_classes: usize,
}

impl ClassLabel {
    pub fn new(class_index: usize, n_classes: usize) -> Result<Self> {
        if class_index >= n_classes {
            return Err(Error::invalid(format!(
                "class {class_index} out of range for {n_classes} classes"
            )));
        }
        Ok(ClassLabel {
            class_index,
            n_classes,
        })
    }

    pub fn one_hot(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n_classes];
        v[self.class_index] = 1.0;
        v
    }
}

/// Four-class label of a generated biseparable mixture: 0 for fully
/// separable, `1 + singleton party` when the pair left after tracing out the
/// singleton party is PPT-entangled.
pub fn biseparable_label(split: Split, rho: &DensityMatrix) -> Result<(ClassLabel, PptVerdict)> {
    if rho.n_qubits() != 3 {
        return Err(Error::invalid(format!(
            "biseparable labels need a three-qubit state, got {} qubits",
            rho.n_qubits()
        )));
    }
    let pair = linalg::partial_trace(rho.matrix(), &[2, 2, 2], split.singleton())?;
    let verdict = ppt_verdict(&pair, &[2, 2], 1)?;
    let class = if verdict.entangled {
        1 + split.singleton()
    } else {
        0
    };
    Ok((ClassLabel::new(class, 4)?, verdict))
}

/// Source channel of a four-qubit sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    /// Fully separable states.
    Blue,
    /// Random pure states mixed with separable noise.
    Green,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Blue => "blue",
            Channel::Green => "green",
        })
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blue" => Ok(Channel::Blue),
            "green" => Ok(Channel::Green),
            _ => Err(Error::invalid(format!("unknown channel {s:?}"))),
        }
    }
}

/// Analysis group of a four-qubit sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    /// Green channel with a negative PPT eigenvalue on some cut.
    I,
    /// Green channel, PPT on every cut.
    II,
    /// Blue channel.
    III,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::I, Group::II, Group::III];
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::I => "I",
            Group::II => "II",
            Group::III => "III",
        })
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" => Ok(Group::I),
            "II" => Ok(Group::II),
            "III" => Ok(Group::III),
            _ => Err(Error::invalid(format!("unknown group {s:?}"))),
        }
    }
}

/// Group of a four-qubit sample. Green samples are split on the smallest PPT
/// eigenvalue over all seven bipartitions; the verdict is returned for them.
pub fn fourqubit_group(
    channel: Channel,
    rho: &DensityMatrix,
) -> Result<(Group, Option<PptVerdict>)> {
    match channel {
        Channel::Blue => Ok((Group::III, None)),
        Channel::Green => {
            let v = min_ppt_over_all_cuts(rho)?;
            let group = if v.entangled { Group::I } else { Group::II };
            Ok((group, Some(v)))
        }
    }
}
