//! States, generalized measurements, and their conditional and averaged action.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matops::{
    self, eig_hermitian_unchecked, ensure_square, hermitian_part, identity, matrix_unit,
    max_abs_diff, projector, real, ComplexMatrix, ComplexVector, MatrixJson, ToleranceConfig,
};

/// Trace-one positive semidefinite Hermitian matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let n = ensure_square(&mat)?;
        let herm = max_abs_diff(&mat, &mat.adjoint());
        if herm > tol.eq_tol {
            return Err(Error::InvalidState(format!(
                "not Hermitian (residual {herm:.3e})"
            )));
        }
        let tr = matops::trace(&mat);
        if (tr - real(1.0)).norm() > tol.eq_tol.max(n as f64 * f64::EPSILON * 8.0) {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let mat = hermitian_part(&mat);
        let min = eig_hermitian_unchecked(&mat)
            .eigenvalues
            .last()
            .copied()
            .unwrap_or(0.0);
        if min < -tol.psd_tol {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { mat })
    }

    /// Re-Hermitizes and trace-normalizes a matrix produced by a dynamical step.
    /// Returns the state and the max-entry size of the correction.
    pub(crate) fn stabilized(mat: ComplexMatrix) -> (Self, f64) {
        let herm = hermitian_part(&mat);
        let tr = matops::trace(&herm).re;
        let fixed = herm.unscale(tr);
        let correction = max_abs_diff(&fixed, &mat);
        (Self { mat: fixed }, correction)
    }

    pub(crate) fn from_dynamics(mat: ComplexMatrix, tol: &ToleranceConfig) -> Self {
        let (rho, correction) = Self::stabilized(mat);
        if correction > 10.0 * tol.eq_tol {
            log::warn!("state drift correction {correction:.3e} exceeds 10*eq_tol");
        } else {
            log::trace!("state drift correction {correction:.3e}");
        }
        rho
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self {
            mat: identity(n).unscale(n as f64),
        }
    }

    pub fn pure(psi: &PureState) -> Self {
        Self {
            mat: projector(psi.vector()),
        }
    }

    pub fn diagonal(probs: &[f64], tol: &ToleranceConfig) -> Result<Self> {
        Self::new(matops::diag_real(probs), tol)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Eigenvalues in descending order.
    pub fn spectrum(&self) -> Vec<f64> {
        eig_hermitian_unchecked(&self.mat).eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.spectrum().last().expect("dimension >= 1")
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        matops::trace_distance(&self.mat, &other.mat)
    }
}

impl TryFrom<MatrixJson> for DensityMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        DensityMatrix::new(ComplexMatrix::try_from(j)?, &ToleranceConfig::default())
    }
}

impl From<DensityMatrix> for MatrixJson {
    fn from(d: DensityMatrix) -> Self {
        MatrixJson::from(&d.mat)
    }
}

/// Unit vector representing a pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    vec: ComplexVector,
}

impl PureState {
    pub fn new(vec: ComplexVector, tol: &ToleranceConfig) -> Result<Self> {
        let norm = vec.norm();
        if (norm - 1.0).abs() > tol.eq_tol {
            return Err(Error::InvalidState(format!("state vector has norm {norm}")));
        }
        Ok(Self { vec })
    }

    /// Normalizes `vec`; fails on a (numerically) zero vector.
    pub fn normalized(vec: ComplexVector) -> Result<Self> {
        let norm = vec.norm();
        if norm <= 1e-300 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            vec: vec.unscale(norm),
        })
    }

    pub fn basis(n: usize, i: usize) -> Self {
        Self {
            vec: matops::basis_vector(n, i),
        }
    }

    pub fn vector(&self) -> &ComplexVector {
        &self.vec
    }

    pub fn dim(&self) -> usize {
        self.vec.len()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::pure(self)
    }
}

/// Ordered Kraus operators of a generalized measurement. Outcome `k` is the
/// `k`-th operator; reordering changes the conditional dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasurementJson", into = "MeasurementJson")]
pub struct Measurement {
    label: String,
    operators: Vec<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
struct MeasurementJson {
    label: String,
    operators: Vec<MatrixJson>,
}

impl TryFrom<MeasurementJson> for Measurement {
    type Error = Error;

    fn try_from(j: MeasurementJson) -> Result<Self> {
        let ops = j
            .operators
            .into_iter()
            .map(ComplexMatrix::try_from)
            .collect::<Result<Vec<_>>>()?;
        Measurement::new(j.label, ops, &ToleranceConfig::default())
    }
}

impl From<Measurement> for MeasurementJson {
    fn from(m: Measurement) -> Self {
        MeasurementJson {
            label: m.label,
            operators: m.operators.iter().map(MatrixJson::from).collect(),
        }
    }
}

impl Measurement {
    pub fn new(
        label: impl Into<String>,
        operators: Vec<ComplexMatrix>,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let Some(first) = operators.first() else {
            return Err(Error::InvalidArgument("measurement needs at least one operator".into()));
        };
        let n = ensure_square(first)?;
        for op in &operators {
            if op.shape() != (n, n) {
                return Err(Error::Dimension(format!(
                    "operator of shape {:?} in a measurement on dimension {n}",
                    op.shape()
                )));
            }
        }
        let m = Self {
            label: label.into(),
            operators,
        };
        let residual = m.completeness_residual();
        if residual > tol.eq_tol {
            return Err(Error::Completeness { residual });
        }
        Ok(m)
    }

    /// Parses the JSON wire format, checking completeness against `tol`.
    pub fn from_json_str(s: &str, tol: &ToleranceConfig) -> Result<Self> {
        let j: MeasurementJson = serde_json::from_str(s)?;
        let ops = j
            .operators
            .into_iter()
            .map(ComplexMatrix::try_from)
            .collect::<Result<Vec<_>>>()?;
        Measurement::new(j.label, ops, tol)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.operators[0].nrows()
    }

    /// `max |Σ M_k† M_k − I|`.
    pub fn completeness_residual(&self) -> f64 {
        let n = self.dim();
        let sum = self
            .operators
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, m| acc + m.adjoint() * m);
        max_abs_diff(&sum, &identity(n))
    }

    /// `max |Σ M_k M_k† − I|`.
    pub fn unitality_residual(&self) -> f64 {
        let n = self.dim();
        let sum = self
            .operators
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, m| acc + m * m.adjoint());
        max_abs_diff(&sum, &identity(n))
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::Dimension(format!(
                "state has dimension {n}, measurement acts on {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Measurement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} outcomes, dimension {})",
            self.label,
            self.len(),
            self.dim()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// `P(k) = tr(M_k ρ M_k†)`.
pub fn outcome_probabilities(rho: &DensityMatrix, m: &Measurement) -> Result<OutcomeDistribution> {
    m.check_dim(rho.dim())?;
    let probs = m
        .operators
        .iter()
        .map(|op| matops::trace(&(op * rho.matrix() * op.adjoint())).re)
        .collect();
    Ok(OutcomeDistribution { probs })
}

/// State after observing outcome `k`.
pub fn conditional_state(
    rho: &DensityMatrix,
    m: &Measurement,
    k: usize,
    tol: &ToleranceConfig,
) -> Result<DensityMatrix> {
    m.check_dim(rho.dim())?;
    let op = m
        .operators
        .get(k)
        .ok_or_else(|| Error::InvalidArgument(format!("outcome {k} out of range")))?;
    let branch = op * rho.matrix() * op.adjoint();
    let p = matops::trace(&branch).re;
    if p <= tol.rank_tol {
        return Err(Error::DegenerateConditioning {
            outcome: k,
            probability: p,
        });
    }
    Ok(DensityMatrix::from_dynamics(branch.unscale(p), tol))
}

/// Averaged post-measurement state `Σ_k M_k ρ M_k†`.
pub fn apply_cptp(rho: &DensityMatrix, m: &Measurement, tol: &ToleranceConfig) -> Result<DensityMatrix> {
    m.check_dim(rho.dim())?;
    let n = rho.dim();
    let out = m
        .operators
        .iter()
        .fold(ComplexMatrix::zeros(n, n), |acc, op| {
            acc + op * rho.matrix() * op.adjoint()
        });
    Ok(DensityMatrix::from_dynamics(out, tol))
}

pub fn apply_unitary(rho: &DensityMatrix, u: &ComplexMatrix, tol: &ToleranceConfig) -> Result<DensityMatrix> {
    if u.shape() != (rho.dim(), rho.dim()) {
        return Err(Error::Dimension(format!(
            "unitary {:?} on a state of dimension {}",
            u.shape(),
            rho.dim()
        )));
    }
    let residual = matops::unitarity_residual(u)?;
    if residual > tol.eq_tol {
        return Err(Error::NotUnitary { residual });
    }
    Ok(DensityMatrix::from_dynamics(u * rho.matrix() * u.adjoint(), tol))
}

/// One averaged feedback step `ρ ↦ Σ_k U_k M_k ρ M_k† U_k†`.
pub fn apply_feedback(
    rho: &DensityMatrix,
    m: &Measurement,
    controls: &[ComplexMatrix],
    tol: &ToleranceConfig,
) -> Result<DensityMatrix> {
    m.check_dim(rho.dim())?;
    if controls.len() != m.len() {
        return Err(Error::Dimension(format!(
            "{} controls for {} outcomes",
            controls.len(),
            m.len()
        )));
    }
    let n = rho.dim();
    let mut out = ComplexMatrix::zeros(n, n);
    for (op, u) in m.operators.iter().zip(controls) {
        let k = u * op;
        out += &k * rho.matrix() * k.adjoint();
    }
    Ok(DensityMatrix::from_dynamics(out, tol))
}

pub fn is_unital(m: &Measurement, tol: &ToleranceConfig) -> bool {
    m.unitality_residual() <= tol.eq_tol
}

/// Block matrix whose `(i, j)` block is `Σ_k M_k E_ij M_k†`.
pub fn choi_matrix(m: &Measurement) -> ComplexMatrix {
    let n = m.dim();
    let mut choi = ComplexMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let e = matrix_unit(n, i, j);
            let block = m
                .operators
                .iter()
                .fold(ComplexMatrix::zeros(n, n), |acc, op| acc + op * &e * op.adjoint());
            choi.view_mut((i * n, j * n), (n, n)).copy_from(&block);
        }
    }
    choi
}

/// Whether two operator-sum representations define the same channel.
pub fn maps_equal(a: &Measurement, b: &Measurement, tol: &ToleranceConfig) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!("{} vs {}", a.dim(), b.dim())));
    }
    Ok(max_abs_diff(&choi_matrix(a), &choi_matrix(b)) <= tol.eq_tol)
}

/// `tr(ρ²)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Random state of the given rank: Haar eigenbasis, eigenvalues drawn from `[0.2, 1]` and normalized.
pub fn random_density(n: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    use rand::Rng;
    if n == 0 || rank == 0 || rank > n {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} out of range for dimension {n}"
        )));
    }
    let mut rng = matops::seeded_rng(seed);
    let u = matops::haar_unitary_from_rng(n, &mut rng);
    let mut weights: Vec<f64> = (0..rank).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    weights.resize(n, 0.0);
    let mat = &u * matops::diag_real(&weights) * u.adjoint();
    Ok(DensityMatrix::stabilized(mat).0)
}

pub fn random_pure_state(n: usize, seed: u64) -> PureState {
    let v = matops::random_unit_vector(n, &mut matops::seeded_rng(seed));
    PureState { vec: v }
}

/// Named measurements used throughout the examples and the CLI.
pub mod builtin {
    use super::*;
    use crate::matops::{c, diag, from_rows, pauli_x, pauli_y, pauli_z, ZERO};

    use num_complex::Complex64;

    /// Completely depolarizing qubit measurement `{I, σx, σy, σz} / 2`.
    pub fn example1_depolarizing() -> Measurement {
        let ops = vec![identity(2), pauli_x(), pauli_y(), pauli_z()]
            .into_iter()
            .map(|p| p.scale(0.5))
            .collect();
        Measurement::new("example1-depolarizing", ops, &ToleranceConfig::default())
            .expect("complete")
    }

    /// `{√0.8·I, √0.2·σx}`: the first operator is full rank.
    pub fn example2_full_rank() -> Measurement {
        Measurement::new(
            "example2-full-rank",
            vec![identity(2).scale(0.8f64.sqrt()), pauli_x().scale(0.2f64.sqrt())],
            &ToleranceConfig::default(),
        )
        .expect("complete")
    }

    /// `{√p·diag(1, −1), √(1−p)·I}`.
    pub fn example3_unitary_pair(p: f64) -> Measurement {
        assert!((0.0..=1.0).contains(&p), "p must lie in [0, 1]");
        Measurement::new(
            format!("example3-unitary-pair({p})"),
            vec![pauli_z().scale(p.sqrt()), identity(2).scale((1.0 - p).sqrt())],
            &ToleranceConfig::default(),
        )
        .expect("complete")
    }

    /// `{[[0, a], [0, 0]], diag(1, √(1−a²))}`.
    pub fn example3_nonunital(a: f64) -> Measurement {
        assert!(a > 0.0 && a <= 1.0, "a must lie in (0, 1]");
        let n1 = from_rows(&[&[ZERO, c(a, 0.0)], &[ZERO, ZERO]]);
        let n2 = matops::diag_real(&[1.0, (1.0 - a * a).sqrt()]);
        Measurement::new(
            format!("example3-nonunital({a})"),
            vec![n1, n2],
            &ToleranceConfig::default(),
        )
        .expect("complete")
    }

    /// Projectors onto the computational basis states.
    pub fn projective_computational(n: usize) -> Measurement {
        let ops = (0..n).map(|i| matrix_unit(n, i, i)).collect();
        Measurement::new(
            format!("projective-computational({n})"),
            ops,
            &ToleranceConfig::default(),
        )
        .expect("complete")
    }

    pub fn diagonal_two_outcome(
        alphas: &[Complex64],
        betas: &[Complex64],
        tol: &ToleranceConfig,
    ) -> Result<Measurement> {
        if alphas.len() != betas.len() || alphas.is_empty() {
            return Err(Error::InvalidArgument(
                "alphas and betas must be non-empty and of equal length".into(),
            ));
        }
        let fmt_list = |v: &[Complex64]| {
            v.iter()
                .map(|z| {
                    if z.im == 0.0 {
                        format!("{}", z.re)
                    } else {
                        format!("{}{:+}i", z.re, z.im)
                    }
                })
                .collect::<Vec<_>>()
                .join(",")
        };
        Measurement::new(
            format!("diagonal-two-outcome({};{})", fmt_list(alphas), fmt_list(betas)),
            vec![diag(alphas), diag(betas)],
            tol,
        )
    }

    /// Generic measurement: `M_k = G_k S^{-1/2}` with Ginibre `G_k` and `S = Σ G_k†G_k`.
    pub fn random_measurement(n: usize, outcomes: usize, seed: u64) -> Measurement {
        let mut rng = matops::seeded_rng(seed);
        let gs: Vec<ComplexMatrix> = (0..outcomes)
            .map(|_| matops::gaussian_matrix(n, n, &mut rng))
            .collect();
        let s = gs
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, g| acc + g.adjoint() * g);
        let s_inv_sqrt = matops::hermitian_function(&s, |l| real(1.0 / l.sqrt()));
        let ops = gs.iter().map(|g| g * &s_inv_sqrt).collect();
        Measurement::new(
            format!("random({n},{outcomes},{seed})"),
            ops,
            &ToleranceConfig::default(),
        )
        .expect("complete by construction")
    }

    /// Probabilistic mixture of unitaries: `M_k = √p_k · U_k`.
    pub fn random_unitary_mixture(n: usize, outcomes: usize, seed: u64) -> Measurement {
        use rand::Rng;
        let mut rng = matops::seeded_rng(seed);
        let mut p: Vec<f64> = (0..outcomes).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        let ops = p
            .iter()
            .map(|&pk| matops::haar_unitary_from_rng(n, &mut rng).scale(pk.sqrt()))
            .collect();
        Measurement::new(
            format!("unitary-mixture({n},{outcomes},{seed})"),
            ops,
            &ToleranceConfig::default(),
        )
        .expect("complete by construction")
    }

    /// Two outcomes with a full-rank first operator and a singular second one:
    /// `M_1 = V diag(s) W`, `s_1 = 1`, `s_i ∈ [0.7, 1]`, `M_2 = W† diag(√(1−s²)) W`.
    pub fn random_full_rank_pair(n: usize, seed: u64) -> Measurement {
        use rand::Rng;
        let mut rng = matops::seeded_rng(seed);
        let v = matops::haar_unitary_from_rng(n, &mut rng);
        let w = matops::haar_unitary_from_rng(n, &mut rng);
        let s: Vec<f64> = (0..n)
            .map(|i| if i == 0 { 1.0 } else { rng.random_range(0.7..1.0) })
            .collect();
        let comp: Vec<f64> = s.iter().map(|x| (1.0 - x * x).max(0.0).sqrt()).collect();
        let m1 = &v * matops::diag_real(&s) * &w;
        let m2 = w.adjoint() * matops::diag_real(&comp) * &w;
        Measurement::new(
            format!("full-rank-pair({n},{seed})"),
            vec![m1, m2],
            &ToleranceConfig::default(),
        )
        .expect("complete by construction")
    }

    /// Two-outcome measurement `{V1 D1 V0†, V2 D2 V0†}` with Haar `V_i` and
    /// `D1 = diag(0, 1, α3, …)`, `D2 = diag(1, 0, β3, …)`, `|α_i|² + |β_i|² = 1`.
    pub fn random_ddc_pair(n: usize, seed: u64) -> Measurement {
        use rand::Rng;
        assert!(n >= 2, "dimension must be at least 2");
        let mut rng = matops::seeded_rng(seed);
        let mut a = vec![ZERO, real(1.0)];
        let mut b = vec![real(1.0), ZERO];
        for _ in 2..n {
            let th: f64 = rng.random_range(0.05..1.5);
            a.push(Complex64::from_polar(th.cos(), rng.random_range(0.0..std::f64::consts::TAU)));
            b.push(Complex64::from_polar(th.sin(), rng.random_range(0.0..std::f64::consts::TAU)));
        }
        let v0 = matops::haar_unitary_from_rng(n, &mut rng);
        let v1 = matops::haar_unitary_from_rng(n, &mut rng);
        let v2 = matops::haar_unitary_from_rng(n, &mut rng);
        Measurement::new(
            format!("random-ddc-pair({n},{seed})"),
            vec![v1 * diag(&a) * v0.adjoint(), v2 * diag(&b) * v0.adjoint()],
            &ToleranceConfig::default(),
        )
        .expect("complete by construction")
    }

    /// Resolves a builtin label such as `projective-computational(3)`.
    pub fn from_label(label: &str, tol: &ToleranceConfig) -> Result<Measurement> {
        let label = label.trim();
        let (name, args) = match label.find('(') {
            Some(open) => {
                let inner = label[open + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| Error::Parse(format!("unbalanced parentheses in '{label}'")))?;
                (&label[..open], Some(inner))
            }
            None => (label, None),
        };
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("'{s}': {e}")))
        };
        let uints = |s: &str, count: usize| -> Result<Vec<u64>> {
            let v = s
                .split(',')
                .map(|x| x.trim().parse::<u64>().map_err(|e| Error::Parse(format!("'{x}': {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if v.len() != count {
                return Err(Error::Parse(format!("expected {count} integer arguments, got '{s}'")));
            }
            Ok(v)
        };
        match (name, args) {
            ("example1-depolarizing", None) => Ok(example1_depolarizing()),
            ("example2-full-rank", None) => Ok(example2_full_rank()),
            ("example3-unitary-pair", Some(a)) => {
                let p = num(a)?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidArgument(format!("p = {p} outside [0, 1]")));
                }
                Ok(example3_unitary_pair(p))
            }
            ("example3-nonunital", Some(a)) => {
                let x = num(a)?;
                if !(x > 0.0 && x <= 1.0) {
                    return Err(Error::InvalidArgument(format!("a = {x} outside (0, 1]")));
                }
                Ok(example3_nonunital(x))
            }
            ("projective-computational", Some(a)) => {
                let n: usize = a
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("'{a}': {e}")))?;
                if n == 0 {
                    return Err(Error::InvalidArgument("dimension must be positive".into()));
                }
                Ok(projective_computational(n))
            }
            ("diagonal-two-outcome", Some(a)) => {
                let (al, be) = a
                    .split_once(';')
                    .ok_or_else(|| Error::Parse("expected 'alphas;betas'".into()))?;
                let parse_list = |s: &str| -> Result<Vec<Complex64>> {
                    s.split(',').map(|x| num(x).map(real)).collect()
                };
                diagonal_two_outcome(&parse_list(al)?, &parse_list(be)?, tol)
            }
            ("random", Some(a)) => {
                let v = uints(a, 3)?;
                if v[0] == 0 || v[1] == 0 {
                    return Err(Error::InvalidArgument("dimension and outcome count must be positive".into()));
                }
                Ok(random_measurement(v[0] as usize, v[1] as usize, v[2]))
            }
            ("random-ddc-pair", Some(a)) => {
                let v = uints(a, 2)?;
                if v[0] < 2 {
                    return Err(Error::InvalidArgument("dimension must be at least 2".into()));
                }
                Ok(random_ddc_pair(v[0] as usize, v[1]))
            }
            _ => Err(Error::Parse(format!("unknown builtin measurement '{label}'"))),
        }
    }

    pub const NAMES: &[&str] = &[
        "example1-depolarizing",
        "example2-full-rank",
        "example3-unitary-pair(p)",
        "example3-nonunital(a)",
        "projective-computational(N)",
        "diagonal-two-outcome(a1,...,aN;b1,...,bN)",
        "random(N,K,seed)",
        "random-ddc-pair(N,seed)",
    ];
}
