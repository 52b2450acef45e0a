//! Checks against independent computations: library routines are compared
//! with brute-force or differently-derived results.

mod common;

use common::lie_closure_oracle;
use feedctl::canonical::{canonical_form, canonical_qr};
use feedctl::controllability::{lie_algebra_rank, HamiltonianControlSystem};
use feedctl::matops::{
    self, c, diag_real, gaussian_matrix, haar_random_unitary, hermitian_part, identity,
    max_abs_diff, pauli_x, pauli_y, pauli_z, seeded_rng, ComplexMatrix, ToleranceConfig, ONE,
    ZERO,
};
use feedctl::quantum::builtin::*;
use feedctl::quantum::{apply_cptp, maps_equal, random_density, Measurement};
use feedctl::simulate::{feedback_superoperator, spectral_moduli};
use num_complex::Complex64;

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn larc(h0: ComplexMatrix, hs: Vec<ComplexMatrix>) -> (usize, usize) {
    let mut gens = vec![h0.clone()];
    gens.extend(hs.iter().cloned());
    let sys = HamiltonianControlSystem::new(h0, hs, 1.0, &tol()).unwrap();
    (lie_algebra_rank(&sys, &tol()).dim, lie_closure_oracle(&gens))
}

#[test]
fn lie_rank_matches_brute_force() {
    assert_eq!(larc(pauli_z(), vec![pauli_x()]), (3, 3));
    assert_eq!(larc(pauli_z(), vec![pauli_z().scale(2.0)]), (1, 1));
    let mut rng = seeded_rng(77);
    let h0 = hermitian_part(&gaussian_matrix(3, 3, &mut rng));
    let h1 = hermitian_part(&gaussian_matrix(3, 3, &mut rng));
    assert_eq!(larc(h0, vec![h1]), (8, 8));
    // a block-diagonal pair only generates u(1) ⊕ su(2)-type pieces
    let mut a = ComplexMatrix::zeros(3, 3);
    a[(0, 1)] = ONE;
    a[(1, 0)] = ONE;
    let b = diag_real(&[1.0, -1.0, 0.0]);
    let (got, want) = larc(b, vec![a]);
    assert_eq!(got, want);
    assert!(got < 8);
}

/// Householder QR with the phases of `R`'s diagonal moved into `Q`.
fn householder_positive(a: &ComplexMatrix) -> ComplexMatrix {
    let qr = a.clone().qr();
    let r = qr.r();
    let n = r.nrows();
    let mut phases = ComplexMatrix::identity(n, n);
    for i in 0..n {
        let d = r[(i, i)];
        phases[(i, i)] = if d.norm() > 0.0 { d.conj() / d.norm() } else { ONE };
    }
    phases * r
}

#[test]
fn full_rank_canonical_matches_householder() {
    for n in 2..=8 {
        for seed in 0..20 {
            let a = gaussian_matrix(n, n, &mut seeded_rng(1000 * n as u64 + seed));
            let r = canonical_form(&a, &tol()).unwrap();
            assert!(max_abs_diff(&r, &householder_positive(&a)) <= 1e-9, "n={n} seed={seed}");
        }
    }
}

#[test]
fn canonical_gram_identity() {
    // R†R = A†A for every A, including rank-deficient ones
    for n in 2..=6 {
        for r in 0..=n {
            let mut rng = seeded_rng(n as u64 * 31 + r as u64);
            let g = gaussian_matrix(n, r, &mut rng);
            let h = gaussian_matrix(r, n, &mut rng);
            let a = g * h;
            let f = canonical_form(&a, &tol()).unwrap();
            assert!(max_abs_diff(&(f.adjoint() * &f), &(a.adjoint() * &a)) <= 1e-9);
            assert_eq!(canonical_qr(&a, &tol()).unwrap().rank(), r);
        }
    }
}

#[test]
fn canonical_known_pattern() {
    // second column parallel to the first: only the first row is nonzero
    let a = matops::from_rows(&[&[c(3.0, 0.0), c(6.0, 0.0)], &[c(0.0, 4.0), c(0.0, 8.0)]]);
    let f = canonical_form(&a, &tol()).unwrap();
    let want = matops::from_rows(&[&[c(5.0, 0.0), c(10.0, 0.0)], &[ZERO, ZERO]]);
    assert!(max_abs_diff(&f, &want) <= 1e-12);
    // Example 3 operators differ at p = 0.5, a = 1
    let m = example3_unitary_pair(0.5);
    let nn = example3_nonunital(1.0);
    let d = max_abs_diff(
        &canonical_form(&m.operators()[0], &tol()).unwrap(),
        &canonical_form(&nn.operators()[0], &tol()).unwrap(),
    );
    assert!(d > 0.1);
}

/// `½ Σ σ_i(A − B)` via singular values.
fn trace_distance_oracle(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    0.5 * (a - b).singular_values().sum()
}

#[test]
fn trace_distance_matches_singular_values() {
    for n in 2..=8 {
        for seed in 0..10 {
            let a = random_density(n, n, seed).unwrap();
            let b = random_density(n, 1 + seed as usize % n, seed + 100).unwrap();
            let got = matops::trace_distance(a.matrix(), b.matrix()).unwrap();
            let want = trace_distance_oracle(a.matrix(), b.matrix());
            assert!((got - want).abs() <= 1e-10);
        }
    }
    let p = diag_real(&[0.6, 0.4]);
    let q = diag_real(&[0.5, 0.5]);
    assert!((matops::trace_distance(&p, &q).unwrap() - 0.1).abs() <= 1e-15);
}

#[test]
fn commutator_of_paulis() {
    let got = matops::commutator(&pauli_z(), &pauli_x()).unwrap();
    assert!(max_abs_diff(&got, &(pauli_y() * Complex64::new(0.0, 2.0))) <= 1e-15);
}

#[test]
fn choi_equality_agrees_with_action() {
    let t = tol();
    // different operator sums of the same channel: unitary mixing of the Kraus list
    for seed in 0..10 {
        let m = random_measurement(3, 3, seed);
        let v = haar_random_unitary(3, seed + 40);
        let mixed: Vec<ComplexMatrix> = (0..3)
            .map(|i| {
                (0..3).fold(ComplexMatrix::zeros(3, 3), |acc, j| acc + &m.operators()[j] * v[(i, j)])
            })
            .collect();
        let other = Measurement::new("mixed", mixed, &t).unwrap();
        assert!(maps_equal(&m, &other, &t).unwrap());
        for s in 0..5 {
            let rho = random_density(3, 3, 10 * seed + s).unwrap();
            let a = apply_cptp(&rho, &m, &t).unwrap();
            let b = apply_cptp(&rho, &other, &t).unwrap();
            assert!(max_abs_diff(a.matrix(), b.matrix()) <= 1e-12);
        }
        let different = random_measurement(3, 3, seed + 1000);
        assert!(!maps_equal(&m, &different, &t).unwrap());
    }
}

#[test]
fn superoperator_spectra_by_hand() {
    // depolarizing: rank-one projection onto I/2
    let m = example1_depolarizing();
    let s = feedback_superoperator(&m, &vec![identity(2); 4]).unwrap();
    let moduli = spectral_moduli(&s).unwrap();
    assert!((moduli[0] - 1.0).abs() <= 1e-12);
    assert!(moduli[1..].iter().all(|&x| x <= 1e-12));

    // {N1, N2} with identity controls: E00 ↦ E00, E11 ↦ a²E00 + b²E11, E01 ↦ bE01, E10 ↦ bE10
    let a = 0.6;
    let b = (1.0f64 - a * a).sqrt();
    let m = example3_nonunital(a);
    let s = feedback_superoperator(&m, &[identity(2), identity(2)]).unwrap();
    let moduli = spectral_moduli(&s).unwrap();
    for (got, want) in moduli.iter().zip([1.0, b, b, b * b]) {
        assert!((got - want).abs() <= 1e-10);
    }

    // single identity operator: identity superoperator
    let m = Measurement::new("id", vec![identity(3)], &tol()).unwrap();
    let s = feedback_superoperator(&m, &[identity(3)]).unwrap();
    assert!(max_abs_diff(&s, &identity(9)) == 0.0);
}
