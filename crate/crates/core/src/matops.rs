//! Dense complex linear algebra shared by the rest of the crate.
//!
//! Matrices are plain `nalgebra` dynamic matrices over `Complex64`. This module
//! adds the handful of primitives the feedback machinery needs on top of them:
//! unitarity and Hermiticity checks, a descending Hermitian eigensolver,
//! trace distance, commutators, Haar sampling and plane rotations between
//! unit vectors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::canonical::canonical_qr;
use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Numerical thresholds used wherever an exact "= 0" or "≠ 0" test is needed.
///
/// `psd_tol` is the magnitude of the negative eigenvalue floor: eigenvalues of
/// a density matrix may dip to `-psd_tol` before the state is rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    pub eq_tol: f64,
    pub psd_tol: f64,
    pub rank_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            eq_tol: 1e-10,
            psd_tol: 1e-10,
            rank_tol: 1e-10,
        }
    }
}

impl ToleranceConfig {
    pub fn new(eq_tol: f64, psd_tol: f64, rank_tol: f64) -> Result<Self> {
        let cfg = Self {
            eq_tol,
            psd_tol,
            rank_tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same threshold for all three tests.
    pub fn uniform(tol: f64) -> Result<Self> {
        Self::new(tol, tol, tol)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eq_tol", self.eq_tol),
            ("psd_tol", self.psd_tol),
            ("rank_tol", self.rank_tol),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidTolerance(format!(
                    "{name} = {v} must lie in (0, 1)"
                )));
            }
        }
        Ok(())
    }
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&l| Complex64::new(l, 0.0)),
        );
        let v = &self.eigenvectors;
        v * DMatrix::from_diagonal(&d) * v.adjoint()
    }

    /// Eigenvector of the largest eigenvalue.
    pub fn principal_vector(&self) -> ComplexVector {
        self.eigenvectors.column(0).into_owned()
    }
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Largest entry modulus.
pub fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn basis_vector(n: usize, i: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(n);
    v[i] = ONE;
    v
}

/// `E_ij`: one at `(i, j)`, zero elsewhere.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    m[(i, j)] = ONE;
    m
}

pub fn diag(entries: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&DVector::from_column_slice(entries))
}

pub fn diag_real(entries: &[f64]) -> ComplexMatrix {
    let e: Vec<Complex64> = entries.iter().map(|&x| real(x)).collect();
    diag(&e)
}

pub fn from_rows(rows: &[&[Complex64]]) -> ComplexMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    ComplexMatrix::from_fn(n, m, |i, j| rows[i][j])
}

pub fn pauli_x() -> ComplexMatrix {
    from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
}

pub fn pauli_y() -> ComplexMatrix {
    from_rows(&[&[ZERO, -I], &[I, ZERO]])
}

pub fn pauli_z() -> ComplexMatrix {
    diag_real(&[1.0, -1.0])
}

pub fn outer(u: &ComplexVector, v: &ComplexVector) -> ComplexMatrix {
    u * v.adjoint()
}

pub fn projector(v: &ComplexVector) -> ComplexMatrix {
    outer(v, v)
}

pub fn trace(a: &ComplexMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

pub fn ensure_square(a: &ComplexMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

pub fn ensure_same_shape(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

pub fn unitarity_residual(a: &ComplexMatrix) -> Result<f64> {
    let n = ensure_square(a)?;
    Ok(max_abs_diff(&(a.adjoint() * a), &identity(n)))
}

pub fn is_unitary(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<bool> {
    Ok(unitarity_residual(a)? <= tol.eq_tol)
}

pub fn hermiticity_residual(a: &ComplexMatrix) -> Result<f64> {
    ensure_square(a)?;
    Ok(max_abs_diff(a, &a.adjoint()))
}

pub fn is_hermitian(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<bool> {
    Ok(hermiticity_residual(a)? <= tol.eq_tol)
}

/// `(A + A†)/2`.
pub fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted descending.
pub fn eig_hermitian(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<HermitianEigen> {
    let residual = hermiticity_residual(a)?;
    if residual > tol.eq_tol {
        return Err(Error::NotHermitian { residual });
    }
    Ok(eig_hermitian_unchecked(&hermitian_part(a)))
}

pub(crate) fn eig_hermitian_unchecked(a: &ComplexMatrix) -> HermitianEigen {
    let n = a.nrows();
    let eig = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    HermitianEigen {
        eigenvalues,
        eigenvectors,
    }
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub(crate) fn hermitian_function(
    a: &ComplexMatrix,
    f: impl Fn(f64) -> Complex64,
) -> ComplexMatrix {
    let eig = eig_hermitian_unchecked(&hermitian_part(a));
    let d: Vec<Complex64> = eig.eigenvalues.iter().map(|&l| f(l)).collect();
    &eig.eigenvectors * diag(&d) * eig.eigenvectors.adjoint()
}

/// `(1/2) Σ |λ_i(A - B)|` for Hermitian `A`, `B`.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    ensure_square(a)?;
    ensure_same_shape(a, b)?;
    let diff = hermitian_part(&(a - b));
    let eig = eig_hermitian_unchecked(&diff);
    Ok(0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_square(a)?;
    ensure_same_shape(a, b)?;
    Ok(a * b - b * a)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Deterministic RNG for a user-facing seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix of i.i.d. standard complex Gaussians (real and imaginary parts of variance 1/2).
pub fn gaussian_matrix<R: rand::Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(s * re, s * im)
    })
}

pub fn gaussian_vector<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexVector {
    gaussian_matrix(n, 1, rng).column(0).into_owned()
}

pub fn random_unit_vector<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexVector {
    loop {
        let v = gaussian_vector(n, rng);
        let norm = v.norm();
        if norm > 1e-8 {
            return v.unscale(norm);
        }
    }
}

/// Haar-distributed unitary: Q factor of the canonical QR of a complex Ginibre matrix.
pub fn haar_random_unitary(n: usize, seed: u64) -> ComplexMatrix {
    haar_unitary_from_rng(n, &mut seeded_rng(seed))
}

pub fn haar_unitary_from_rng<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    assert!(n >= 1, "haar_random_unitary needs n >= 1");
    let tol = ToleranceConfig::default();
    loop {
        let g = gaussian_matrix(n, n, rng);
        let qr = canonical_qr(&g, &tol).expect("square input");
        // a Ginibre draw is almost surely full rank; redraw otherwise
        if qr.column_ranks.last() == Some(&n) {
            return qr.q;
        }
    }
}

/// Completes a set of orthonormal columns to a full orthonormal basis.
///
/// The given columns come first, in order; the completion is obtained by
/// orthogonalizing the standard basis vectors that keep the largest residual.
pub fn orthonormal_completion(columns: &[ComplexVector], n: usize) -> ComplexMatrix {
    let mut basis: Vec<ComplexVector> = columns.to_vec();
    while basis.len() < n {
        let mut best: Option<(f64, ComplexVector)> = None;
        for i in 0..n {
            let mut v = basis_vector(n, i);
            for _ in 0..2 {
                for q in &basis {
                    let coeff = q.dotc(&v);
                    v -= q * coeff;
                }
            }
            let norm = v.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b + 1e-12) {
                best = Some((norm, v));
            }
        }
        let (norm, v) = best.expect("n > 0");
        basis.push(v.unscale(norm));
    }
    ComplexMatrix::from_columns(&basis)
}

/// A unitary taking unit vector `x` to unit vector `y` that acts as the
/// identity on the orthogonal complement of `span{x, y}`.
pub fn unitary_mapping(x: &ComplexVector, y: &ComplexVector) -> ComplexMatrix {
    let n = x.len();
    let x = x.unscale(x.norm());
    let y = y.unscale(y.norm());
    let overlap = x.dotc(&y);
    let perp = &y - &x * overlap;
    let s = perp.norm();
    if s <= 1e-14 {
        // y = e^{iθ} x
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            ONE
        };
        return identity(n) + projector(&x) * (phase - ONE);
    }
    let u = perp.unscale(s);
    // in the orthonormal frame {x, u}: y = overlap·x + s·u
    let frame = ComplexMatrix::from_columns(&[x.clone(), u.clone()]);
    let rot = from_rows(&[&[overlap, real(-s)], &[real(s), overlap.conj()]]);
    identity(n) - &frame * frame.adjoint() + &frame * rot * frame.adjoint()
}

/// Unitary whose first column is `v` (normalized).
pub fn basis_with_first(v: &ComplexVector) -> ComplexMatrix {
    let n = v.len();
    unitary_mapping(&basis_vector(n, 0), v)
}

/// Permutation matrix `P` with `P e_i = e_{perm[i]}`.
pub fn permutation_matrix(perm: &[usize]) -> ComplexMatrix {
    let n = perm.len();
    let mut p = ComplexMatrix::zeros(n, n);
    for (i, &j) in perm.iter().enumerate() {
        p[(j, i)] = ONE;
    }
    p
}

/// JSON wire format of a complex matrix: `{"rows", "cols", "data": [[re, im], ...]}`, row-major.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.rows == 0 || j.cols == 0 {
            return Err(Error::Parse("matrix must have at least one row and column".into()));
        }
        if j.data.len() != j.rows * j.cols {
            return Err(Error::Parse(format!(
                "matrix declares {}x{} but carries {} entries",
                j.rows,
                j.cols,
                j.data.len()
            )));
        }
        if j.data.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Parse("matrix entries must be finite".into()));
        }
        Ok(ComplexMatrix::from_row_iterator(
            j.rows,
            j.cols,
            j.data.iter().map(|[re, im]| c(*re, *im)),
        ))
    }
}

pub fn matrix_to_json(m: &ComplexMatrix) -> serde_json::Value {
    serde_json::to_value(MatrixJson::from(m)).expect("matrix serializes")
}

pub fn matrix_from_json_str(s: &str) -> Result<ComplexMatrix> {
    let j: MatrixJson = serde_json::from_str(s)?;
    j.try_into()
}

/// Serde adapter for fields holding a [`ComplexMatrix`].
pub mod serde_matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ComplexMatrix, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        ComplexMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<ComplexMatrix>`.
pub mod serde_matrix_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[ComplexMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        let js: Vec<MatrixJson> = v.iter().map(MatrixJson::from).collect();
        js.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<ComplexMatrix>, D::Error> {
        let js = Vec::<MatrixJson>::deserialize(d)?;
        js.into_iter()
            .map(|j| ComplexMatrix::try_from(j).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter for `Option<ComplexMatrix>` (absent or `null` means `None`).
pub mod serde_matrix_opt {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        m: &Option<ComplexMatrix>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        m.as_ref().map(MatrixJson::from).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<ComplexMatrix>, D::Error> {
        Option::<MatrixJson>::deserialize(d)?
            .map(|j| ComplexMatrix::try_from(j).map_err(serde::de::Error::custom))
            .transpose()
    }
}
