//! Cross-checks the Jacobi eigensolver and partial transpose against nalgebra.

use bellml_core::linalg::{hermitian_eigenvalues, partial_transpose};
use bellml_core::state::{random_density_matrix, random_fully_separable, random_pure_state};
use bellml_core::{ComplexMatrix, Rng};
use nalgebra::DMatrix;

fn to_nalgebra(m: &ComplexMatrix) -> DMatrix<num_complex::Complex64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn reference_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = to_nalgebra(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

fn assert_spectra_match(m: &ComplexMatrix) {
    let ours = hermitian_eigenvalues(m).unwrap().into_vec();
    let theirs = reference_eigenvalues(m);
    for (a, b) in ours.iter().zip(&theirs) {
        assert!((a - b).abs() < 1e-10, "{ours:?} vs {theirs:?}");
    }
}

#[test]
fn density_spectra_match_reference() {
    let mut rng = Rng::new(11);
    for dim in [2, 4, 8, 16] {
        for _ in 0..25 {
            assert_spectra_match(random_density_matrix(&mut rng, dim).unwrap().matrix());
        }
    }
}

#[test]
fn partial_transpose_spectra_match_reference() {
    let mut rng = Rng::new(12);
    for n in 2..=4 {
        for which in 0..n {
            let pure = random_pure_state(&mut rng, 1 << n).to_density().unwrap();
            let sep = random_fully_separable(&mut rng, n).unwrap();
            for rho in [pure, sep] {
                let pt = partial_transpose(rho.matrix(), &vec![2; n], which).unwrap();
                assert_spectra_match(&pt);
            }
        }
    }
}

#[test]
fn degenerate_spectrum() {
    let m = ComplexMatrix::identity(8).scale(0.125);
    assert_spectra_match(&m);
}
