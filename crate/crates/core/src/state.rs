//! Quantum states and their seeded random generators.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, kron, kron_vec, ComplexMatrix};
use crate::rng::Rng;

/// Largest number of terms in a random fully separable mixture.
pub const MAX_SEPARABLE_TERMS: usize = 8;

/// A normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Wraps amplitudes that must already have unit norm (within 1e-12).
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = vector_norm(&amplitudes);
        if amplitudes.is_empty() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "state vector has norm {norm}, expected 1"
            )));
        }
        Ok(PureState { amplitudes })
    }

    /// Normalizes `v`; fails on the zero vector.
    pub fn normalized(mut v: Vec<Complex64>) -> Result<Self> {
        let norm = vector_norm(&v);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("cannot normalize a zero vector"));
        }
        v.iter_mut().for_each(|z| *z /= norm);
        Ok(PureState { amplitudes: v })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        vector_norm(&self.amplitudes)
    }

    /// `|psi><psi|`.
    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes)
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        let n_qubits = qubit_count(self.dim())?;
        Ok(DensityMatrix::trusted(self.projector(), n_qubits))
    }
}

fn vector_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn qubit_count(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::invalid(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// A trace-one positive-semidefinite Hermitian matrix on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    n_qubits: usize,
}

impl DensityMatrix {
    /// Validates and wraps `matrix`: Hermitian and unit trace within 1e-10,
    /// smallest eigenvalue at least -1e-9.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid("density matrix must be square"));
        }
        let n_qubits = qubit_count(matrix.rows())?;
        let herm = matrix.hermitian_residual();
        if herm > 1e-10 {
            return Err(Error::invalid(format!(
                "density matrix is not Hermitian (residual {herm:e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::invalid(format!("density matrix has trace {tr}")));
        }
        let min = linalg::hermitian_eigenvalues(&matrix)?.min();
        if min < -1e-9 {
            return Err(Error::invalid(format!(
                "density matrix has negative eigenvalue {min:e}"
            )));
        }
        Ok(DensityMatrix { matrix, n_qubits })
    }

    /// For matrices that are density matrices by construction.
    pub(crate) fn trusted(matrix: ComplexMatrix, n_qubits: usize) -> Self {
        debug_assert_eq!(matrix.rows(), 1 << n_qubits);
        DensityMatrix { matrix, n_qubits }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1 << n_qubits;
        Self::trusted(
            ComplexMatrix::identity(dim).scale(1.0 / dim as f64),
            n_qubits,
        )
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Qubit subsystem dimensions, `[2; n_qubits]`.
    pub fn qubit_dims(&self) -> Vec<usize> {
        vec![2; self.n_qubits]
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        linalg::trace_of_product(&self.matrix, &self.matrix).re
    }

    /// The convex combination `weight * self + (1 - weight) * other`.
    pub fn mix(&self, other: &DensityMatrix, weight: f64) -> Result<DensityMatrix> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::invalid(format!(
                "mixing weight {weight} outside [0, 1]"
            )));
        }
        if self.n_qubits != other.n_qubits {
            return Err(Error::invalid("cannot mix states of different sizes"));
        }
        let m = &self.matrix.scale(weight) + &other.matrix.scale(1.0 - weight);
        Ok(Self::trusted(m, self.n_qubits))
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self::trusted(
            kron(&self.matrix, &other.matrix),
            self.n_qubits + other.n_qubits,
        )
    }
}

/// Ginibre matrix: independent standard normal real and imaginary parts.
pub fn random_ginibre(rng: &mut Rng, dim: usize) -> ComplexMatrix {
    let data = (0..dim * dim)
        .map(|_| {
            let re = rng.normal();
            let im = rng.normal();
            Complex64::new(re, im)
        })
        .collect();
    ComplexMatrix::from_vec(dim, dim, data).unwrap()
}

/// Hilbert-Schmidt random density matrix `G G^dagger / Tr(G G^dagger)`.
pub fn random_density_matrix(rng: &mut Rng, dim: usize) -> Result<DensityMatrix> {
    let n_qubits = qubit_count(dim)?;
    let g = random_ginibre(rng, dim);
    let rho = g.matmul(&g.adjoint());
    let tr = rho.trace().re;
    let mut rho = rho.scale(1.0 / tr);
    // Remove rounding asymmetry so downstream Hermiticity checks see exact symmetry.
    for i in 0..dim {
        rho[(i, i)].im = 0.0;
        for j in i + 1..dim {
            let avg = (rho[(i, j)] + rho[(j, i)].conj()) * 0.5;
            rho[(i, j)] = avg;
            rho[(j, i)] = avg.conj();
        }
    }
    Ok(DensityMatrix::trusted(rho, n_qubits))
}

/// Householder QR of a square complex matrix, returning `(Q, R)` with `A = Q R`.
pub fn householder_qr(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    assert!(a.is_square());
    let n = a.rows();
    let mut r = a.clone();
    let mut q = ComplexMatrix::identity(n);
    for k in 0..n.saturating_sub(1) {
        let norm_x = (k..n).map(|i| r[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm_x;
        let mut v: Vec<Complex64> = (k..n).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // R <- H R with H = I - 2 v v^dagger / (v^dagger v).
        for j in 0..n {
            let dot: Complex64 = (k..n).map(|i| v[i - k].conj() * r[(i, j)]).sum();
            let f = dot * (2.0 / vnorm2);
            for i in k..n {
                r[(i, j)] -= v[i - k] * f;
            }
        }
        // Q <- Q H.
        for i in 0..n {
            let dot: Complex64 = (k..n).map(|j| q[(i, j)] * v[j - k]).sum();
            let f = dot * (2.0 / vnorm2);
            for j in k..n {
                q[(i, j)] -= f * v[j - k].conj();
            }
        }
    }
    for i in 1..n {
        for j in 0..i {
            r[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    (q, r)
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix, with
/// the columns of `Q` rephased by `sign(R_ii)` (zero diagonal entries count
/// as +1).
pub fn random_unitary(rng: &mut Rng, dim: usize) -> ComplexMatrix {
    let g = random_ginibre(rng, dim);
    let (mut q, r) = householder_qr(&g);
    for j in 0..dim {
        let d = r[(j, j)];
        let sign = if d.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            d / d.norm()
        };
        for i in 0..dim {
            q[(i, j)] *= sign;
        }
    }
    q
}

/// Haar-uniform unit vector: normalized complex Gaussian vector.
pub fn random_pure_state(rng: &mut Rng, dim: usize) -> PureState {
    loop {
        let v: Vec<Complex64> = (0..dim)
            .map(|_| {
                let re = rng.normal();
                let im = rng.normal();
                Complex64::new(re, im)
            })
            .collect();
        if let Ok(s) = PureState::normalized(v) {
            return s;
        }
    }
}

/// `cos(theta/2)|00> + e^{i phi} sin(theta/2)|11>`.
pub fn psi_theta_phi(theta: f64, phi: f64) -> Result<PureState> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::invalid(format!("theta {theta} outside [0, pi]")));
    }
    if !(0.0..=TAU).contains(&phi) {
        return Err(Error::invalid(format!("phi {phi} outside [0, 2pi]")));
    }
    let zero = Complex64::new(0.0, 0.0);
    let a = Complex64::new((theta / 2.0).cos(), 0.0);
    let b = Complex64::from_polar((theta / 2.0).sin(), phi);
    PureState::normalized(vec![a, zero, zero, b])
}

/// `p |psi><psi| + (1 - p) I / d`.
pub fn depolarized(psi: &PureState, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
    }
    let n_qubits = qubit_count(psi.dim())?;
    let dim = psi.dim() as f64;
    let mut m = psi.projector().scale(p);
    for i in 0..psi.dim() {
        m[(i, i)] += (1.0 - p) / dim;
    }
    Ok(DensityMatrix::trusted(m, n_qubits))
}

/// Random fully separable state: a convex mixture of `k` products of
/// single-qubit Hilbert-Schmidt states, `k` uniform in `1..=8`, weights
/// `u_i / sum(u)` with `u_i` uniform on (0, 1).
pub fn random_fully_separable(rng: &mut Rng, n_qubits: usize) -> Result<DensityMatrix> {
    check_separable_qubits(n_qubits)?;
    let terms = 1 + rng.below(MAX_SEPARABLE_TERMS);
    fully_separable_with_terms(rng, n_qubits, terms)
}

/// Fully separable mixture with a fixed number of product terms.
pub fn fully_separable_with_terms(
    rng: &mut Rng,
    n_qubits: usize,
    terms: usize,
) -> Result<DensityMatrix> {
    check_separable_qubits(n_qubits)?;
    if terms == 0 {
        return Err(Error::invalid(
            "a separable mixture needs at least one term",
        ));
    }
    let weights: Vec<f64> = (0..terms).map(|_| 1.0 - rng.uniform()).collect();
    let total: f64 = weights.iter().sum();
    let dim = 1 << n_qubits;
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for w in weights {
        let product = random_product_state(rng, n_qubits);
        acc = &acc + &product.matrix.scale(w / total);
    }
    Ok(DensityMatrix::trusted(acc, n_qubits))
}

/// Tensor product of independent single-qubit Hilbert-Schmidt states.
pub fn random_product_state(rng: &mut Rng, n_qubits: usize) -> DensityMatrix {
    let mut state = random_density_matrix(rng, 2).unwrap();
    for _ in 1..n_qubits {
        let next = random_density_matrix(rng, 2).unwrap();
        state = state.tensor(&next);
    }
    state
}

fn check_separable_qubits(n_qubits: usize) -> Result<()> {
    if !(1..=4).contains(&n_qubits) {
        return Err(Error::invalid(format!(
            "separable states are generated for 1 to 4 qubits, got {n_qubits}"
        )));
    }
    Ok(())
}

/// A three-qubit bipartition with one singleton party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    /// A | BC
    AvsBC,
    /// B | AC
    BvsAC,
    /// C | AB
    CvsAB,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::AvsBC, Split::BvsAC, Split::CvsAB];

    /// Index (0 = A, 1 = B, 2 = C) of the party split off from the other two.
    pub fn singleton(self) -> usize {
        match self {
            Split::AvsBC => 0,
            Split::BvsAC => 1,
            Split::CvsAB => 2,
        }
    }

    pub fn from_singleton(party: usize) -> Option<Split> {
        Split::ALL.get(party).copied()
    }

    /// Maps a basis index of `v2 (x) v4` (singleton factor first, remaining
    /// pair in ascending party order) to the standard `|abc>` index.
    pub fn product_to_standard_index(self, idx: usize) -> usize {
        debug_assert!(idx < 8);
        let s = (idx >> 2) & 1;
        let hi = (idx >> 1) & 1;
        let lo = idx & 1;
        match self {
            Split::AvsBC => (s << 2) | (hi << 1) | lo,
            Split::BvsAC => (hi << 2) | (s << 1) | lo,
            Split::CvsAB => (hi << 2) | (lo << 1) | s,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::AvsBC => "A|BC",
            Split::BvsAC => "B|AC",
            Split::CvsAB => "C|AB",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A|BC" => Ok(Split::AvsBC),
            "B|AC" => Ok(Split::BvsAC),
            "C|AB" => Ok(Split::CvsAB),
            _ => Err(Error::invalid(format!("unknown split {s:?}"))),
        }
    }
}

/// Random three-qubit pure state that is a product across `split`: a random
/// qubit vector on the singleton party times a random 4-dimensional vector on
/// the remaining pair.
pub fn biseparable_pure(rng: &mut Rng, split: Split) -> PureState {
    let single = random_pure_state(rng, 2);
    let pair = random_pure_state(rng, 4);
    let product = kron_vec(single.amplitudes(), pair.amplitudes());
    let mut amps = vec![Complex64::new(0.0, 0.0); 8];
    for (i, z) in product.into_iter().enumerate() {
        amps[split.product_to_standard_index(i)] = z;
    }
    PureState::normalized(amps).unwrap()
}

/// A generated biseparable mixture with its generator parameters.
#[derive(Debug, Clone)]
pub struct BiseparableSample {
    pub state: DensityMatrix,
    pub split: Split,
    pub p: f64,
}

/// `p |psi_bs><psi_bs| + (1 - p) rho_sep` on three qubits.
pub fn biseparable_mixture(rng: &mut Rng, split: Split, p: f64) -> Result<BiseparableSample> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
    }
    let pure = biseparable_pure(rng, split).to_density()?;
    let sep = random_fully_separable(rng, 3)?;
    Ok(BiseparableSample {
        state: pure.mix(&sep, p)?,
        split,
        p,
    })
}

/// A generated four-qubit two-channel mixture with its mixing weight.
#[derive(Debug, Clone)]
pub struct MixSample {
    pub state: DensityMatrix,
    pub p: f64,
}

/// `p |psi_rand><psi_rand| + (1 - p) rho_sep` on four qubits with `p`
/// uniform on `[p_min, 1]`.
pub fn fourqubit_mix(rng: &mut Rng, p_min: f64) -> Result<MixSample> {
    if !(0.0..1.0).contains(&p_min) {
        return Err(Error::invalid(format!("p_min {p_min} outside [0, 1)")));
    }
    let p = rng.uniform_in(p_min, 1.0);
    fourqubit_mix_with_p(rng, p)
}

/// Four-qubit mixture with a given weight `p`.
pub fn fourqubit_mix_with_p(rng: &mut Rng, p: f64) -> Result<MixSample> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
    }
    let pure = random_pure_state(rng, 16).to_density()?;
    let sep = random_fully_separable(rng, 4)?;
    Ok(MixSample {
        state: pure.mix(&sep, p)?,
        p,
    })
}

/// Truncated normal draw by rejection into `[lo, hi]`.
pub fn truncated_normal(rng: &mut Rng, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    loop {
        let x = mean + sd * rng.normal();
        if (lo..=hi).contains(&x) {
            return x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigenvalues, partial_trace, partial_transpose};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn assert_density(rho: &DensityMatrix) {
        let m = rho.matrix();
        assert!(m.hermitian_residual() < 1e-10);
        assert!((m.trace().re - 1.0).abs() < 1e-10);
        assert!(hermitian_eigenvalues(m).unwrap().min() >= -1e-9);
    }

    fn ppt_min(rho: &DensityMatrix, dims: &[usize], which: usize) -> f64 {
        let pt = partial_transpose(rho.matrix(), dims, which).unwrap();
        hermitian_eigenvalues(&pt).unwrap().min()
    }

    #[test]
    fn ginibre_moments() {
        let mut rng = Rng::new(11);
        let (mut re_sum, mut im_sum, mut im_sq, mut n) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..100_000 / 16 + 1 {
            let g = random_ginibre(&mut rng, 4);
            for z in g.as_slice() {
                re_sum += z.re;
                im_sum += z.im;
                im_sq += z.im * z.im;
                n += 1.0;
            }
        }
        let im_mean = im_sum / n;
        assert!((re_sum / n).abs() < 0.02);
        assert!((im_sq / n - im_mean * im_mean - 1.0).abs() < 0.05);

        let a = random_ginibre(&mut Rng::new(42), 4);
        let b = random_ginibre(&mut Rng::new(42), 4);
        assert_eq!(a, b);
    }

    #[test]
    fn density_matrices_are_valid() {
        let mut rng = Rng::new(5);
        for _ in 0..1000 {
            let rho = random_density_matrix(&mut rng, 4).unwrap();
            assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
            assert!(hermitian_eigenvalues(rho.matrix()).unwrap().min() >= -1e-12);
        }
        assert!(random_density_matrix(&mut rng, 3).is_err());
    }

    #[test]
    fn unitary_is_unitary() {
        let mut rng = Rng::new(9);
        for dim in [1, 2, 4, 8, 16] {
            let u = random_unitary(&mut rng, dim);
            let uu = u.adjoint().matmul(&u);
            assert!(uu.max_abs_diff(&ComplexMatrix::identity(dim)) < 1e-10);
        }
        // |det U| for 2x2.
        let u = random_unitary(&mut rng, 2);
        let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
        assert!((det.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn qr_reconstructs() {
        let mut rng = Rng::new(1);
        let g = random_ginibre(&mut rng, 8);
        let (q, r) = householder_qr(&g);
        assert!(q.matmul(&r).max_abs_diff(&g) < 1e-12);
        for i in 0..8 {
            for j in 0..i {
                assert_eq!(r[(i, j)], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn haar_marginal_is_uniform() {
        // For a 2x2 Haar unitary |U_00|^2 is uniform on [0, 1].
        let mut rng = Rng::new(2024);
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n)
            .map(|_| random_unitary(&mut rng, 2)[(0, 0)].norm_sqr())
            .collect();
        xs.sort_by(f64::total_cmp);
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let lo = i as f64 / n as f64;
                let hi = (i + 1) as f64 / n as f64;
                (x - lo).abs().max((hi - x).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS statistic {ks}");
    }

    #[test]
    fn pure_states() {
        let mut rng = Rng::new(3);
        let mut acc = 0.0;
        let n = 100_000;
        for _ in 0..n {
            let v = random_pure_state(&mut rng, 4);
            assert!((v.norm() - 1.0).abs() < 1e-12);
            acc += v.amplitudes()[0].norm_sqr();
        }
        assert!((acc / n as f64 - 0.25).abs() < 0.005);
        let a = random_pure_state(&mut Rng::new(42), 4);
        let b = random_pure_state(&mut Rng::new(42), 4);
        assert_eq!(a, b);
    }

    #[test]
    fn psi_theta_phi_special_cases() {
        let s = FRAC_1_SQRT_2;
        let minus = psi_theta_phi(PI / 2.0, PI).unwrap();
        let want = [s, 0.0, 0.0, -s];
        for (z, w) in minus.amplitudes().iter().zip(want) {
            assert!((z - Complex64::new(w, 0.0)).norm() < 1e-15);
        }
        let plus = psi_theta_phi(PI / 2.0, 0.0).unwrap();
        for (z, w) in plus.amplitudes().iter().zip([s, 0.0, 0.0, s]) {
            assert!((z - Complex64::new(w, 0.0)).norm() < 1e-15);
        }
        for phi in [0.0, 1.0, TAU] {
            let zero = psi_theta_phi(0.0, phi).unwrap();
            assert_eq!(zero.amplitudes()[0], Complex64::new(1.0, 0.0));
            assert!(zero.amplitudes()[3].norm() == 0.0);
        }
        assert!(psi_theta_phi(-0.1, 0.0).is_err());
        assert!(psi_theta_phi(1.0, 7.0).is_err());
    }

    #[test]
    fn depolarized_limits() {
        let psi = psi_theta_phi(PI / 2.0, PI).unwrap();
        assert_eq!(depolarized(&psi, 1.0).unwrap().matrix(), &psi.projector());
        let mixed = depolarized(&psi, 0.0).unwrap();
        assert!(
            mixed
                .matrix()
                .max_abs_diff(&DensityMatrix::maximally_mixed(2).into_matrix())
                < 1e-16
        );
        let boundary = depolarized(&psi, 1.0 / 3.0).unwrap();
        assert!(ppt_min(&boundary, &[2, 2], 1).abs() < 1e-10);
        assert!(depolarized(&psi, 1.5).is_err());
    }

    #[test]
    fn separable_mixtures() {
        let mut rng = Rng::new(77);
        for n in 2..=4 {
            for _ in 0..200 {
                assert_density(&random_fully_separable(&mut rng, n).unwrap());
            }
        }
        for _ in 0..10_000 {
            let rho = random_fully_separable(&mut rng, 2).unwrap();
            assert!(ppt_min(&rho, &[2, 2], 1) >= -1e-9);
        }
        assert!(random_fully_separable(&mut rng, 5).is_err());

        // One term is the bare product: replay the stream by hand.
        let mut a = Rng::new(8);
        let single = fully_separable_with_terms(&mut a, 3, 1).unwrap();
        let mut b = Rng::new(8);
        let _weight = b.uniform();
        let product = random_product_state(&mut b, 3);
        assert!(single.matrix().max_abs_diff(product.matrix()) < 1e-15);
    }

    #[test]
    fn split_permutation_is_bijective() {
        for split in Split::ALL {
            let mut seen = [false; 8];
            for i in 0..8 {
                seen[split.product_to_standard_index(i)] = true;
            }
            assert!(seen.iter().all(|&b| b));
            assert_eq!(split.to_string().parse::<Split>().unwrap(), split);
        }
    }

    #[test]
    fn biseparable_pure_factorizes() {
        let mut rng = Rng::new(4);
        for split in Split::ALL {
            let psi = biseparable_pure(&mut rng, split);
            assert!((psi.norm() - 1.0).abs() < 1e-12);
            // Reduced state of the singleton party is pure.
            let mut rho = psi.projector();
            let mut dims = vec![2, 2, 2];
            for party in (0..3).rev().filter(|&q| q != split.singleton()) {
                rho = partial_trace(&rho, &dims, party).unwrap();
                dims.remove(party);
            }
            let spec = hermitian_eigenvalues(&rho).unwrap();
            assert!(spec.eigenvalues()[0] < 1e-10);
            assert!((spec.max() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn biseparable_pair_factor_matches_direct_construction() {
        // Replaying the generator stream recovers the pair vector; tracing the
        // singleton party must give exactly its projector.
        for split in Split::ALL {
            let psi = biseparable_pure(&mut Rng::new(31), split);
            let mut replay = Rng::new(31);
            let _single = random_pure_state(&mut replay, 2);
            let pair = random_pure_state(&mut replay, 4);
            let reduced = partial_trace(&psi.projector(), &[2, 2, 2], split.singleton()).unwrap();
            assert!(reduced.max_abs_diff(&pair.projector()) < 1e-12);
        }
    }

    #[test]
    fn biseparable_mixture_limits() {
        let mut rng = Rng::new(6);
        let s = biseparable_mixture(&mut rng, Split::BvsAC, 0.0).unwrap();
        assert_density(&s.state);
        assert_eq!(s.split, Split::BvsAC);
        let s = biseparable_mixture(&mut rng, Split::CvsAB, 1.0).unwrap();
        assert!((s.state.purity() - 1.0).abs() < 1e-12);
        assert!(biseparable_mixture(&mut rng, Split::AvsBC, -0.1).is_err());
    }

    #[test]
    fn fourqubit_mix_purity() {
        let mut rng = Rng::new(12);
        for _ in 0..50 {
            let s = fourqubit_mix(&mut rng, 0.99).unwrap();
            assert!(s.p >= 0.99 && s.p < 1.0);
            assert!(s.state.purity() > 0.9);
            assert_eq!(s.state.dim(), 16);
        }
        let s = fourqubit_mix_with_p(&mut rng, 0.0).unwrap();
        assert_density(&s.state);
        assert!(fourqubit_mix(&mut rng, 1.0).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(ComplexMatrix::identity(4).scale(0.25)).is_ok());
        assert!(DensityMatrix::new(ComplexMatrix::identity(4)).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::identity(3).scale(1.0 / 3.0)).is_err());
        let bad = ComplexMatrix::diagonal(&[Complex64::new(1.5, 0.0), Complex64::new(-0.5, 0.0)]);
        assert!(DensityMatrix::new(bad).is_err());
    }
}
