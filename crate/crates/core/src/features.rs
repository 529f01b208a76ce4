//! Measurement plans and feature extraction.
//!
//! A feature is the expectation value of a tensor product of local
//! observables. Each party measures along two axes `n` and `n'` (Bell-like
//! schemes) or along the Pauli axes (tomographic scheme). Operator order is
//! lexicographic in the per-party symbol index, `I = 0, n = 1, n' = 2` or
//! `I, X, Y, Z`, with the first party most significant. Dataset files depend
//! on this order.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{self, kron_all, pauli, ComplexMatrix};
use crate::oracle::ChshSettings;
use crate::rng::Rng;
use crate::state::DensityMatrix;

/// Unit vector `n` defining the observable `n . sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementAxis {
    pub nx: f64,
    pub ny: f64,
    pub nz: f64,
}

impl MeasurementAxis {
    pub fn new(nx: f64, ny: f64, nz: f64) -> Result<Self> {
        let norm2 = nx * nx + ny * ny + nz * nz;
        if norm2.is_nan() || (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "measurement axis ({nx}, {ny}, {nz}) is not a unit vector"
            )));
        }
        Ok(MeasurementAxis { nx, ny, nz })
    }

    pub fn x() -> Self {
        MeasurementAxis {
            nx: 1.0,
            ny: 0.0,
            nz: 0.0,
        }
    }

    pub fn y() -> Self {
        MeasurementAxis {
            nx: 0.0,
            ny: 1.0,
            nz: 0.0,
        }
    }

    pub fn z() -> Self {
        MeasurementAxis {
            nx: 0.0,
            ny: 0.0,
            nz: 1.0,
        }
    }

    /// `nx X + ny Y + nz Z`.
    pub fn operator(&self) -> ComplexMatrix {
        let x = pauli::x().scale(self.nx);
        let y = pauli::y().scale(self.ny);
        let z = pauli::z().scale(self.nz);
        &(&x + &y) + &z
    }
}

/// `n . sigma` for a validated axis.
pub fn axis_operator(axis: &MeasurementAxis) -> Result<ComplexMatrix> {
    MeasurementAxis::new(axis.nx, axis.ny, axis.nz)?;
    Ok(axis.operator())
}

/// Uniform direction on the unit sphere (normalized Gaussian 3-vector).
pub fn random_axis(rng: &mut Rng) -> MeasurementAxis {
    loop {
        let v = [rng.normal(), rng.normal(), rng.normal()];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-8 {
            return MeasurementAxis {
                nx: v[0] / norm,
                ny: v[1] / norm,
                nz: v[2] / norm,
            };
        }
    }
}

/// The CHSH operator `ab - ab' + a'b + a'b'`.
pub fn chsh_operator(s: &ChshSettings) -> ComplexMatrix {
    let (a, ap, b, bp) = (
        s.a.operator(),
        s.a_prime.operator(),
        s.b.operator(),
        s.b_prime.operator(),
    );
    let ab = linalg::kron(&a, &b);
    let abp = linalg::kron(&a, &bp);
    let apb = linalg::kron(&ap, &b);
    let apbp = linalg::kron(&ap, &bp);
    &(&(&ab - &abp) + &apb) + &apbp
}

/// Which observables make up the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureScheme {
    /// Every Pauli string except the identity: `4^n - 1` features.
    Tomographic { n_qubits: usize },
    /// `{ab, ab', a'b, a'b'}` at the standard CHSH angles.
    ChshFixed,
    /// `{ab, ab', a'b, a'b'}` at random angles.
    ChshRandom,
    /// `{abc, a'b'c, ab'c', a'bc'}`.
    Mermin4,
    /// All `O1 O2 O3` with `O in {n, n'}`.
    Svetlichny8,
    /// The CHSH monomials of each of the three pairs, identity on the third party.
    TripleChsh12,
    /// All `O1 ... On` with `O in {I, n, n'}` except the identity: `3^n - 1`.
    FullLocal { n_qubits: usize },
}

impl FeatureScheme {
    pub fn n_qubits(&self) -> usize {
        match *self {
            FeatureScheme::Tomographic { n_qubits } | FeatureScheme::FullLocal { n_qubits } => {
                n_qubits
            }
            FeatureScheme::ChshFixed | FeatureScheme::ChshRandom => 2,
            FeatureScheme::Mermin4 | FeatureScheme::Svetlichny8 | FeatureScheme::TripleChsh12 => 3,
        }
    }

    pub fn n_features(&self) -> usize {
        match *self {
            FeatureScheme::Tomographic { n_qubits } => 4usize.pow(n_qubits as u32) - 1,
            FeatureScheme::FullLocal { n_qubits } => 3usize.pow(n_qubits as u32) - 1,
            FeatureScheme::ChshFixed | FeatureScheme::ChshRandom | FeatureScheme::Mermin4 => 4,
            FeatureScheme::Svetlichny8 => 8,
            FeatureScheme::TripleChsh12 => 12,
        }
    }

    /// Name used on the command line and in plan files.
    pub fn name(&self) -> &'static str {
        match self {
            FeatureScheme::Tomographic { .. } => "tomographic",
            FeatureScheme::ChshFixed => "chsh-fixed",
            FeatureScheme::ChshRandom => "chsh-random",
            FeatureScheme::Mermin4 => "mermin4",
            FeatureScheme::Svetlichny8 => "svetlichny8",
            FeatureScheme::TripleChsh12 => "triple-chsh12",
            FeatureScheme::FullLocal { .. } => "full-local",
        }
    }

    /// Parses a scheme name for an `n_qubits` system.
    pub fn parse(name: &str, n_qubits: usize) -> Result<Self> {
        let scheme = match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "tomographic" => FeatureScheme::Tomographic { n_qubits },
            "chsh-fixed" | "chsh" => FeatureScheme::ChshFixed,
            "chsh-random" => FeatureScheme::ChshRandom,
            "mermin4" | "mermin" => FeatureScheme::Mermin4,
            "svetlichny8" | "svetlichny" => FeatureScheme::Svetlichny8,
            "triple-chsh12" | "triple-chsh" => FeatureScheme::TripleChsh12,
            "full-local" => FeatureScheme::FullLocal { n_qubits },
            other => return Err(Error::invalid(format!("unknown feature scheme {other:?}"))),
        };
        scheme.check_qubits(n_qubits)?;
        Ok(scheme)
    }

    fn check_qubits(&self, n_qubits: usize) -> Result<()> {
        if !(1..=4).contains(&n_qubits) || self.n_qubits() != n_qubits {
            return Err(Error::invalid(format!(
                "feature scheme {} does not apply to {n_qubits} qubits",
                self.name()
            )));
        }
        Ok(())
    }

    fn uses_axes(&self) -> bool {
        !matches!(self, FeatureScheme::Tomographic { .. })
    }

    /// Per-party symbol strings of every feature, in the stable order.
    pub fn monomials(&self) -> Vec<Vec<u8>> {
        match *self {
            FeatureScheme::Tomographic { n_qubits } => all_strings(n_qubits, 4).skip(1).collect(),
            FeatureScheme::FullLocal { n_qubits } => all_strings(n_qubits, 3).skip(1).collect(),
            FeatureScheme::ChshFixed | FeatureScheme::ChshRandom => {
                vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]
            }
            FeatureScheme::Mermin4 => {
                vec![vec![1, 1, 1], vec![2, 2, 1], vec![1, 2, 2], vec![2, 1, 2]]
            }
            FeatureScheme::Svetlichny8 => all_strings(3, 2)
                .map(|s| s.into_iter().map(|x| x + 1).collect())
                .collect(),
            FeatureScheme::TripleChsh12 => {
                let mut out = Vec::with_capacity(12);
                for (first, second) in [(0, 1), (0, 2), (1, 2)] {
                    for (x, y) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
                        let mut m = vec![0u8; 3];
                        m[first] = x;
                        m[second] = y;
                        out.push(m);
                    }
                }
                out
            }
        }
    }
}

impl fmt::Display for FeatureScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}({}, {})",
            self.name(),
            self.n_qubits(),
            self.n_features()
        )
    }
}

/// All base-`radix` digit strings of length `n`, lexicographic.
fn all_strings(n: usize, radix: u8) -> impl Iterator<Item = Vec<u8>> {
    let total = (radix as usize).pow(n as u32);
    (0..total).map(move |mut k| {
        let mut digits = vec![0u8; n];
        for d in digits.iter_mut().rev() {
            *d = (k % radix as usize) as u8;
            k /= radix as usize;
        }
        digits
    })
}

/// How the measurement axes of a plan are chosen.
pub enum AxisSource<'a> {
    /// One `(n, n')` pair per party, drawn uniformly on the sphere.
    Random(&'a mut Rng),
    /// Explicit `(n, n')` pairs, one per party.
    Fixed(Vec<(MeasurementAxis, MeasurementAxis)>),
}

/// A feature scheme with its axes and cached observables.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPlan {
    scheme: FeatureScheme,
    axes: Vec<(MeasurementAxis, MeasurementAxis)>,
    monomials: Vec<Vec<u8>>,
    operators: Vec<ComplexMatrix>,
}

/// Builds the observables for `scheme`. `ChshFixed` always uses the standard
/// CHSH angles and tomographic plans carry no axes; both ignore `source`.
pub fn build_plan(scheme: FeatureScheme, source: AxisSource<'_>) -> Result<MeasurementPlan> {
    scheme.check_qubits(scheme.n_qubits())?;
    let n = scheme.n_qubits();
    let axes = match scheme {
        FeatureScheme::Tomographic { .. } => Vec::new(),
        FeatureScheme::ChshFixed => {
            let s = ChshSettings::standard();
            vec![(s.a, s.a_prime), (s.b, s.b_prime)]
        }
        _ => match source {
            AxisSource::Random(rng) => (0..n)
                .map(|_| {
                    let first = random_axis(rng);
                    let second = random_axis(rng);
                    (first, second)
                })
                .collect(),
            AxisSource::Fixed(axes) => {
                if axes.len() != n {
                    return Err(Error::invalid(format!(
                        "{} needs {n} axis pairs, got {}",
                        scheme.name(),
                        axes.len()
                    )));
                }
                for (a, b) in &axes {
                    MeasurementAxis::new(a.nx, a.ny, a.nz)?;
                    MeasurementAxis::new(b.nx, b.ny, b.nz)?;
                }
                axes
            }
        },
    };
    MeasurementPlan::assemble(scheme, axes)
}

impl MeasurementPlan {
    fn assemble(
        scheme: FeatureScheme,
        axes: Vec<(MeasurementAxis, MeasurementAxis)>,
    ) -> Result<Self> {
        let monomials = scheme.monomials();
        let local: Vec<[ComplexMatrix; 4]> = if scheme.uses_axes() {
            axes.iter()
                .map(|(a, b)| {
                    [
                        pauli::identity(),
                        a.operator(),
                        b.operator(),
                        ComplexMatrix::zeros(2, 2),
                    ]
                })
                .collect()
        } else {
            (0..scheme.n_qubits()).map(|_| pauli::basis()).collect()
        };
        let operators = monomials
            .iter()
            .map(|m| {
                kron_all(
                    m.iter()
                        .enumerate()
                        .map(|(party, &sym)| &local[party][sym as usize]),
                )
            })
            .collect();
        Ok(MeasurementPlan {
            scheme,
            axes,
            monomials,
            operators,
        })
    }

    pub fn scheme(&self) -> FeatureScheme {
        self.scheme
    }

    pub fn axes(&self) -> &[(MeasurementAxis, MeasurementAxis)] {
        &self.axes
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn n_features(&self) -> usize {
        self.operators.len()
    }

    /// Human-readable feature names, e.g. `XZ` or `n1 I n'3`.
    pub fn feature_names(&self) -> Vec<String> {
        self.monomials
            .iter()
            .map(|m| {
                if self.scheme.uses_axes() {
                    m.iter()
                        .enumerate()
                        .map(|(party, &s)| match s {
                            0 => "I".to_string(),
                            1 => format!("n{}", party + 1),
                            _ => format!("n'{}", party + 1),
                        })
                        .collect::<Vec<_>>()
                        .join(" ")
                } else {
                    m.iter()
                        .map(|&s| ['I', 'X', 'Y', 'Z'][s as usize])
                        .collect()
                }
            })
            .collect()
    }

    /// Plain-text form: `key = value` lines, axes as six components each.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("scheme = {}\n", self.scheme.name()));
        out.push_str(&format!("n_qubits = {}\n", self.scheme.n_qubits()));
        out.push_str(&format!("n_features = {}\n", self.n_features()));
        for (i, (a, b)) in self.axes.iter().enumerate() {
            out.push_str(&format!(
                "axis.{i} = {} {} {} {} {} {}\n",
                a.nx, a.ny, a.nz, b.nx, b.ny, b.nz
            ));
        }
        out
    }

    /// Inverse of [`Self::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut scheme_name = None;
        let mut n_qubits = None;
        let mut axes = Vec::new();
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("malformed plan line {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "scheme" => scheme_name = Some(value.to_string()),
                "n_qubits" => {
                    n_qubits = Some(
                        value
                            .parse::<usize>()
                            .map_err(|e| Error::invalid(format!("bad n_qubits {value:?}: {e}")))?,
                    )
                }
                "n_features" => {}
                k if k.starts_with("axis.") => {
                    let nums: Vec<f64> = value
                        .split_whitespace()
                        .map(|t| t.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| Error::invalid(format!("bad axis {value:?}: {e}")))?;
                    if nums.len() != 6 {
                        return Err(Error::invalid(format!(
                            "axis line needs 6 numbers: {line:?}"
                        )));
                    }
                    axes.push((
                        MeasurementAxis::new(nums[0], nums[1], nums[2])?,
                        MeasurementAxis::new(nums[3], nums[4], nums[5])?,
                    ));
                }
                other => return Err(Error::invalid(format!("unknown plan key {other:?}"))),
            }
        }
        let scheme_name = scheme_name.ok_or_else(|| Error::invalid("plan has no scheme"))?;
        let n_qubits = n_qubits.ok_or_else(|| Error::invalid("plan has no n_qubits"))?;
        let scheme = FeatureScheme::parse(&scheme_name, n_qubits)?;
        build_plan(scheme, AxisSource::Fixed(axes))
    }
}

impl FromStr for MeasurementPlan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MeasurementPlan::from_text(s)
    }
}

/// Expectation value of every plan observable in `rho`.
pub fn extract_features(rho: &DensityMatrix, plan: &MeasurementPlan) -> Result<Vec<f64>> {
    if rho.n_qubits() != plan.scheme.n_qubits() {
        return Err(Error::invalid(format!(
            "plan for {} qubits applied to a {}-qubit state",
            plan.scheme.n_qubits(),
            rho.n_qubits()
        )));
    }
    plan.operators
        .iter()
        .map(|op| linalg::expectation(rho.matrix(), op))
        .collect()
}
