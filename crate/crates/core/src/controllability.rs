//! Decision procedures for the controlled dynamics.
//!
//! * open loop: the Lie-algebra rank test and the sampled (piecewise-constant)
//!   propagator of a Hamiltonian control system;
//! * closed loop: asymptotic density-to-pure controllability, pure-state
//!   stabilizability, and the basis change that exposes a stabilizable state.

use serde::{Deserialize, Serialize};

use crate::canonical::{canonical_form, canonical_qr};
use crate::error::{Error, Result};
use crate::matops::{
    self, basis_with_first, commutator, hermiticity_residual, identity, matrix_unit, max_abs,
    permutation_matrix, real, serde_matrix_opt, ComplexMatrix, ToleranceConfig, I,
};
use crate::quantum::{Measurement, PureState};
use crate::synthesis::diagonalize_two_outcome;

/// `H(u) = H0 + Σ_j u_j H_j`, controls held constant over intervals of length `sample_time`.
#[derive(Debug, Clone)]
pub struct HamiltonianControlSystem {
    drift: ComplexMatrix,
    controls: Vec<ComplexMatrix>,
    sample_time: f64,
}

impl HamiltonianControlSystem {
    pub fn new(
        drift: ComplexMatrix,
        controls: Vec<ComplexMatrix>,
        sample_time: f64,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        if controls.is_empty() {
            return Err(Error::InvalidArgument("at least one control Hamiltonian is required".into()));
        }
        if !(sample_time > 0.0 && sample_time.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample time must be positive, got {sample_time}"
            )));
        }
        let n = matops::ensure_square(&drift)?;
        for h in std::iter::once(&drift).chain(&controls) {
            if h.shape() != (n, n) {
                return Err(Error::Dimension(format!(
                    "Hamiltonian of shape {:?} in a system of dimension {n}",
                    h.shape()
                )));
            }
            let residual = hermiticity_residual(h)?;
            if residual > tol.eq_tol {
                return Err(Error::NotHermitian { residual });
            }
        }
        Ok(Self {
            drift,
            controls,
            sample_time,
        })
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    pub fn drift(&self) -> &ComplexMatrix {
        &self.drift
    }

    pub fn controls(&self) -> &[ComplexMatrix] {
        &self.controls
    }

    pub fn sample_time(&self) -> f64 {
        self.sample_time
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LieRank {
    pub dim: usize,
    pub controllable: bool,
}

fn real_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

fn traceless(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.nrows();
    let shift = matops::trace(a) / n as f64;
    a - identity(n) * shift
}

/// Real orthonormal basis of a subspace of skew-Hermitian matrices.
struct RealSpan {
    basis: Vec<ComplexMatrix>,
    rank_tol: f64,
}

impl RealSpan {
    fn insert(&mut self, mut x: ComplexMatrix) -> bool {
        for _ in 0..2 {
            for b in &self.basis {
                let c = real_inner(b, &x);
                x -= b * real(c);
            }
        }
        let norm = x.norm();
        if norm > self.rank_tol {
            self.basis.push(x.unscale(norm));
            true
        } else {
            false
        }
    }
}

/// Dimension of the Lie algebra generated by the traceless parts of
/// `{−iH_0, −iH_1, …}`, and whether it is all of `su(N)`.
pub fn lie_algebra_rank(sys: &HamiltonianControlSystem, tol: &ToleranceConfig) -> LieRank {
    let n = sys.dim();
    let full = n * n - 1;
    let mut span = RealSpan {
        basis: Vec::with_capacity(full),
        rank_tol: tol.rank_tol,
    };
    for h in std::iter::once(&sys.drift).chain(&sys.controls) {
        span.insert(traceless(&(h * -I)));
    }
    let cap = n.pow(4);
    let mut insertions = 0;
    // every new element is bracketed with all earlier ones
    let mut next = 0;
    'closure: while next < span.basis.len() && span.basis.len() < full {
        for prev in 0..next {
            let br = &span.basis[next] * &span.basis[prev] - &span.basis[prev] * &span.basis[next];
            if span.insert(br) {
                insertions += 1;
                if span.basis.len() >= full || insertions >= cap {
                    break 'closure;
                }
            }
        }
        next += 1;
    }
    let dim = span.basis.len();
    LieRank {
        dim,
        controllable: dim == full,
    }
}

/// `exp(−i (H0 + Σ u_j H_j) δ)`.
pub fn sampled_propagator(sys: &HamiltonianControlSystem, u: &[f64]) -> Result<ComplexMatrix> {
    if u.len() != sys.controls.len() {
        return Err(Error::Dimension(format!(
            "{} control values for {} control Hamiltonians",
            u.len(),
            sys.controls.len()
        )));
    }
    let h = sys
        .controls
        .iter()
        .zip(u)
        .fold(sys.drift.clone(), |acc, (hj, &uj)| acc + hj * real(uj));
    let dt = sys.sample_time;
    Ok(matops::hermitian_function(&h, |l| {
        num_complex::Complex64::from_polar(1.0, -l * dt)
    }))
}

fn is_scalar_factor(r: &ComplexMatrix, tol: &ToleranceConfig) -> bool {
    let q = r[(0, 0)];
    let n = r.nrows();
    matops::max_abs_diff(r, &(identity(n) * q)) <= tol.eq_tol
}

/// Whether feedback can asymptotically prepare any pure state from any state.
/// The witness is the first outcome whose canonical factor is not a scalar matrix.
pub fn is_asymptotically_dpc(m: &Measurement, tol: &ToleranceConfig) -> Result<(bool, Option<usize>)> {
    for (k, op) in m.operators().iter().enumerate() {
        if !is_scalar_factor(&canonical_form(op, tol)?, tol) {
            return Ok((true, Some(k)));
        }
    }
    Ok((false, None))
}

fn stabilizable_in_current_basis(ops: &[ComplexMatrix], tol: &ToleranceConfig) -> Result<bool> {
    let Some(first) = ops.first() else {
        return Ok(false);
    };
    let rho_s = matrix_unit(first.nrows(), 0, 0);
    for op in ops {
        let r = canonical_form(op, tol)?;
        if max_abs(&commutator(&rho_s, &r)?) > tol.eq_tol {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Feasibility of globally stabilizing `target` by feedback: in a basis whose
/// first vector is `target`, some canonical factor must fail to commute with
/// the projector onto that vector.
pub fn stabilizable_pure_state(
    m: &Measurement,
    target: &PureState,
    tol: &ToleranceConfig,
) -> Result<bool> {
    if target.dim() != m.dim() {
        return Err(Error::Dimension(format!(
            "target of dimension {} for a measurement on {}",
            target.dim(),
            m.dim()
        )));
    }
    let w = basis_with_first(target.vector());
    let rotated: Vec<ComplexMatrix> = m.operators().iter().map(|op| w.adjoint() * op * &w).collect();
    stabilizable_in_current_basis(&rotated, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisCase {
    /// Two columns of some operator overlap (or a null column precedes a nonzero one).
    NonOrthogonalColumns,
    /// All factors are diagonal; a Hadamard rotation mixes two distinct diagonal entries.
    DistinctDiagonal,
}

#[derive(Debug, Clone)]
pub struct DpcBasis {
    /// Basis change `W`: operators are expressed as `W† M_k W`, and the first
    /// new basis vector `W e_1` is stabilizable.
    pub w: ComplexMatrix,
    pub case: BasisCase,
    pub outcome: usize,
    /// Original basis indices moved to positions 1 and 2.
    pub columns: (usize, usize),
    pub note: String,
}

/// `(1,2)` entry of the canonical factor of `op` after moving columns `j`, `l` to the front.
fn leading_offdiag(op: &ComplexMatrix, j: usize, l: usize, tol: &ToleranceConfig) -> f64 {
    let cj = op.column(j);
    let cl = op.column(l);
    let nj = cj.norm();
    if nj > tol.rank_tol {
        cj.dotc(&cl).norm() / nj
    } else {
        cl.norm()
    }
}

fn front_permutation(n: usize, j: usize, l: usize) -> ComplexMatrix {
    let mut perm = vec![j, l];
    perm.extend((0..n).filter(|&i| i != j && i != l));
    permutation_matrix(&perm)
}

/// Basis change exposing a stabilizable pure state for an asymptotically DPC measurement.
pub fn dpc_basis_construction(m: &Measurement, tol: &ToleranceConfig) -> Result<DpcBasis> {
    let (dpc, _) = is_asymptotically_dpc(m, tol)?;
    if !dpc {
        return Err(Error::NotDpc);
    }
    let n = m.dim();
    let ops = m.operators();

    let mut found = None;
    'search: for (k, op) in ops.iter().enumerate() {
        for j in 0..n {
            for l in 0..n {
                if j != l && leading_offdiag(op, j, l, tol) > tol.eq_tol {
                    found = Some((k, j, l));
                    break 'search;
                }
            }
        }
    }

    let basis = if let Some((k, j, l)) = found {
        DpcBasis {
            w: front_permutation(n, j, l),
            case: BasisCase::NonOrthogonalColumns,
            outcome: k,
            columns: (j, l),
            note: format!(
                "outcome {k}: columns {j} and {l} moved to the front give a nonzero off-diagonal canonical entry"
            ),
        }
    } else {
        // all canonical factors are diagonal; pick the largest gap between two diagonal entries
        let mut best: Option<(f64, usize, usize, usize)> = None;
        for (k, op) in ops.iter().enumerate() {
            let r = canonical_form(op, tol)?;
            for j in 0..n {
                for l in j + 1..n {
                    let gap = (r[(j, j)] - r[(l, l)]).norm();
                    if gap > tol.eq_tol && best.is_none_or(|(g, ..)| gap > g) {
                        best = Some((gap, k, j, l));
                    }
                }
            }
        }
        let (_, k, j, l) = best.ok_or_else(|| {
            Error::Internal("DPC measurement without a distinguishing canonical factor".into())
        })?;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = identity(n);
        v[(0, 0)] = real(h);
        v[(0, 1)] = real(h);
        v[(1, 0)] = real(h);
        v[(1, 1)] = real(-h);
        DpcBasis {
            w: front_permutation(n, j, l) * v,
            case: BasisCase::DistinctDiagonal,
            outcome: k,
            columns: (j, l),
            note: format!(
                "diagonal factors: outcome {k}, entries {j} and {l} mixed by a Hadamard rotation"
            ),
        }
    };

    let rotated: Vec<ComplexMatrix> = ops.iter().map(|op| basis.w.adjoint() * op * &basis.w).collect();
    if !stabilizable_in_current_basis(&rotated, tol)? {
        return Err(Error::Internal(format!(
            "basis construction failed its stabilizability self-check ({})",
            basis.note
        )));
    }
    Ok(basis)
}

/// Aggregated verdicts for one measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControllabilityReport {
    pub measurement_label: String,
    pub dimension: usize,
    pub outcomes: usize,
    /// Dimension of the control Lie algebra; `None` when no Hamiltonian system was supplied.
    pub lie_dim: Option<usize>,
    /// Open-loop unitary controllability; `None` when no Hamiltonian system was supplied.
    pub unitary_controllable: Option<bool>,
    pub unital: bool,
    pub asymptotically_dpc: bool,
    /// 0-based index of the first outcome with a non-scalar canonical factor.
    pub dpc_witness_k: Option<usize>,
    #[serde(with = "serde_matrix_opt")]
    pub stabilizable_target_basis: Option<ComplexMatrix>,
    pub finite_time_ddc: bool,
    pub notes: Vec<String>,
}

pub fn classify(m: &Measurement, tol: &ToleranceConfig) -> Result<ControllabilityReport> {
    classify_with_system(m, None, tol)
}

pub fn classify_with_system(
    m: &Measurement,
    system: Option<&HamiltonianControlSystem>,
    tol: &ToleranceConfig,
) -> Result<ControllabilityReport> {
    let mut notes = Vec::new();
    let (lie_dim, unitary_controllable) = match system {
        Some(sys) => {
            if sys.dim() != m.dim() {
                return Err(Error::Dimension(format!(
                    "control system of dimension {} for a measurement on {}",
                    sys.dim(),
                    m.dim()
                )));
            }
            let rank = lie_algebra_rank(sys, tol);
            (Some(rank.dim), Some(rank.controllable))
        }
        None => {
            notes.push(
                "no Hamiltonian system given: arbitrary unitary controls are assumed available"
                    .to_string(),
            );
            (None, None)
        }
    };

    let (asymptotically_dpc, dpc_witness_k) = is_asymptotically_dpc(m, tol)?;
    let stabilizable_target_basis = if asymptotically_dpc {
        let basis = dpc_basis_construction(m, tol)?;
        notes.push(format!("stabilizable basis: {}", basis.note));
        Some(basis.w)
    } else {
        notes.push(
            "every canonical factor is scalar: the averaged dynamics is a mixture of unitary \
             conjugations, so no pure state is reachable from a full-rank state"
                .to_string(),
        );
        None
    };

    let finite_time_ddc = if m.len() == 2 {
        match diagonalize_two_outcome(m, tol) {
            Ok(_) => true,
            Err(Error::FormMismatch { alphas, betas }) => {
                notes.push(format!(
                    "two-outcome diagonal form has no singular pair (|alpha| = {alphas:?}, |beta| = {betas:?})"
                ));
                false
            }
            Err(e) => return Err(e),
        }
    } else {
        notes.push(format!(
            "finite-time synthesis needs exactly two outcomes, measurement has {}",
            m.len()
        ));
        false
    };
    if finite_time_ddc {
        notes.push(format!(
            "finite-time density-to-density transfer in at most {} steps",
            2 * m.dim()
        ));
    }
    notes.push("Kraus-map controllability: unknown (no decision procedure)".to_string());

    Ok(ControllabilityReport {
        measurement_label: m.label().to_string(),
        dimension: m.dim(),
        outcomes: m.len(),
        lie_dim,
        unitary_controllable,
        unital: crate::quantum::is_unital(m, tol),
        asymptotically_dpc,
        dpc_witness_k,
        stabilizable_target_basis,
        finite_time_ddc,
        notes,
    })
}

/// The canonical `Q`/`R` pair for every operator of a measurement.
pub fn canonical_factors(m: &Measurement, tol: &ToleranceConfig) -> Result<Vec<crate::canonical::CanonicalQR>> {
    m.operators().iter().map(|op| canonical_qr(op, tol)).collect()
}
