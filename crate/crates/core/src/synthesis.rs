//! Construction of feedback control sequences.
//!
//! Finite-time sequences are built for two-outcome measurements that can be
//! brought to the diagonal form
//!
//! ```text
//! M1 = diag(0, α2, α3, …),  M2 = diag(β1, 0, β3, …),  |α2| = |β1| = 1
//! ```
//!
//! by basis changes. Sequences are first expressed in that diagonal frame and
//! then lifted back to the physical frame.

use serde::{Deserialize, Serialize};

use crate::canonical::canonical_form;
use crate::error::{Error, Result};
use crate::matops::{
    self, basis_vector, identity, orthonormal_completion, permutation_matrix, real,
    serde_matrix_opt, unitary_mapping, ComplexMatrix, ComplexVector, ToleranceConfig, ZERO,
};
use crate::quantum::{DensityMatrix, Measurement, PureState};

use num_complex::Complex64;

/// Time-indexed feedback controls: `steps[t][k]` is applied after outcome `k` at step `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackPlan {
    pub measurement_label: String,
    /// Unitary applied to the state once, before the first step.
    #[serde(with = "serde_matrix_opt", default)]
    pub basis_pre_rotation: Option<ComplexMatrix>,
    #[serde(with = "plan_steps")]
    pub steps: Vec<Vec<ComplexMatrix>>,
}

mod plan_steps {
    use super::ComplexMatrix;
    use crate::matops::MatrixJson;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(steps: &[Vec<ComplexMatrix>], s: S) -> Result<S::Ok, S::Error> {
        let j: Vec<Vec<MatrixJson>> = steps
            .iter()
            .map(|step| step.iter().map(MatrixJson::from).collect())
            .collect();
        j.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<ComplexMatrix>>, D::Error> {
        let j = Vec::<Vec<MatrixJson>>::deserialize(d)?;
        j.into_iter()
            .map(|step| {
                step.into_iter()
                    .map(|m| ComplexMatrix::try_from(m).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

impl FeedbackPlan {
    pub fn new(label: impl Into<String>, steps: Vec<Vec<ComplexMatrix>>) -> Self {
        Self {
            measurement_label: label.into(),
            basis_pre_rotation: None,
            steps,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Controls for step `t`.
    pub fn step(&self, t: usize) -> Result<&[ComplexMatrix]> {
        self.steps
            .get(t)
            .map(Vec::as_slice)
            .ok_or(Error::PlanExhausted {
                available: self.steps.len(),
                requested: t + 1,
            })
    }

    /// Checks that every control is an `n × n` unitary and each step has `outcomes` entries.
    pub fn validate(&self, n: usize, outcomes: usize, tol: &ToleranceConfig) -> Result<()> {
        let check = |u: &ComplexMatrix| -> Result<()> {
            if u.shape() != (n, n) {
                return Err(Error::Dimension(format!(
                    "control of shape {:?} for dimension {n}",
                    u.shape()
                )));
            }
            let residual = matops::unitarity_residual(u)?;
            if residual > tol.eq_tol {
                return Err(Error::NotUnitary { residual });
            }
            Ok(())
        };
        if let Some(p) = &self.basis_pre_rotation {
            check(p)?;
        }
        for (t, step) in self.steps.iter().enumerate() {
            if step.len() != outcomes {
                return Err(Error::Dimension(format!(
                    "step {t} has {} controls for {outcomes} outcomes",
                    step.len()
                )));
            }
            step.iter().try_for_each(check)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Two-outcome diagonal measurement `M1 = diag(α)`, `M2 = diag(β)` with
/// `α1 = 0`, `β2 = 0` and `|α_i|² + |β_i|² = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalTwoOutcome {
    alphas: Vec<Complex64>,
    betas: Vec<Complex64>,
}

impl DiagonalTwoOutcome {
    pub fn new(alphas: Vec<Complex64>, betas: Vec<Complex64>, tol: &ToleranceConfig) -> Result<Self> {
        let n = alphas.len();
        if n < 2 || betas.len() != n {
            return Err(Error::Dimension(format!(
                "diagonal form needs two equal-length lists of length >= 2, got {} and {}",
                n,
                betas.len()
            )));
        }
        let mismatch = || Error::FormMismatch {
            alphas: alphas.iter().map(|z| z.norm()).collect(),
            betas: betas.iter().map(|z| z.norm()).collect(),
        };
        if alphas[0].norm() > tol.eq_tol || betas[1].norm() > tol.eq_tol {
            return Err(mismatch());
        }
        for (a, b) in alphas.iter().zip(&betas) {
            if (a.norm_sqr() + b.norm_sqr() - 1.0).abs() > tol.eq_tol {
                return Err(mismatch());
            }
        }
        Ok(Self { alphas, betas })
    }

    /// Qubit computational-basis measurement with the outcomes ordered to fit the form.
    pub fn qubit_projective() -> Self {
        Self {
            alphas: vec![ZERO, real(1.0)],
            betas: vec![real(1.0), ZERO],
        }
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[Complex64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[Complex64] {
        &self.betas
    }

    pub fn measurement(&self, tol: &ToleranceConfig) -> Result<Measurement> {
        crate::quantum::builtin::diagonal_two_outcome(&self.alphas, &self.betas, tol)
    }
}

/// Basis changes bringing `{M̃1, M̃2}` to diagonal form: `M_j = U_j M̃_j U0`.
#[derive(Debug, Clone)]
pub struct TwoOutcomeDiagonalization {
    pub u0: ComplexMatrix,
    pub u1: ComplexMatrix,
    pub u2: ComplexMatrix,
    pub form: DiagonalTwoOutcome,
}

impl TwoOutcomeDiagonalization {
    /// Expresses a physical state in the diagonal frame: `U0† ρ U0`.
    pub fn to_diagonal_frame(&self, rho: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::stabilized(self.u0.adjoint() * rho.matrix() * &self.u0).0
    }

    /// Expresses a diagonal-frame state physically: `U0 ρ U0†`.
    pub fn to_physical_frame(&self, rho: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::stabilized(&self.u0 * rho.matrix() * self.u0.adjoint()).0
    }

    /// Converts a plan for the diagonal measurement into one for the physical
    /// measurement. A diagonal-frame control `V_k` becomes `U0 V_k U_k`.
    pub fn lift_plan(&self, plan: &FeedbackPlan, label: &str) -> FeedbackPlan {
        let us = [&self.u1, &self.u2];
        let steps = plan
            .steps
            .iter()
            .map(|step| {
                step.iter()
                    .zip(us)
                    .map(|(v, u)| &self.u0 * v * u)
                    .collect()
            })
            .collect();
        FeedbackPlan::new(label, steps)
    }
}

/// For `A` with orthogonal columns, a unitary `U` with `U A` diagonal and
/// non-negative; the null columns get completion vectors.
fn column_polar(a: &ComplexMatrix, tol: &ToleranceConfig) -> (ComplexMatrix, Vec<f64>) {
    let n = a.ncols();
    let mut accepted: Vec<ComplexVector> = Vec::new();
    let mut slots: Vec<Option<usize>> = vec![None; n];
    for (i, slot) in slots.iter_mut().enumerate() {
        let mut col: ComplexVector = a.column(i).into_owned();
        for _ in 0..2 {
            for q in &accepted {
                let coeff = q.dotc(&col);
                col -= q * coeff;
            }
        }
        let norm = col.norm();
        if norm > tol.rank_tol {
            *slot = Some(accepted.len());
            accepted.push(col.unscale(norm));
        }
    }
    let completed = orthonormal_completion(&accepted, n);
    let mut extra = accepted.len();
    let columns: Vec<ComplexVector> = slots
        .iter()
        .map(|slot| {
            let idx = slot.unwrap_or_else(|| {
                extra += 1;
                extra - 1
            });
            completed.column(idx).into_owned()
        })
        .collect();
    let u = ComplexMatrix::from_columns(&columns).adjoint();
    let diag = (0..n).map(|i| u.row(i).transpose().dot(&a.column(i)).re).collect();
    (u, diag)
}

/// Finds unitaries `U0, U1, U2` with `U1 M̃1 U0` and `U2 M̃2 U0` diagonal and in
/// the singular form; among admissible orderings the lexicographically least
/// permutation of the eigenvalue order of `M̃1†M̃1` is chosen.
pub fn diagonalize_two_outcome(m: &Measurement, tol: &ToleranceConfig) -> Result<TwoOutcomeDiagonalization> {
    if m.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "diagonal form needs exactly two outcomes, measurement has {}",
            m.len()
        )));
    }
    let n = m.dim();
    if n < 2 {
        return Err(Error::Dimension("diagonal form needs dimension >= 2".into()));
    }
    let (m1, m2) = (&m.operators()[0], &m.operators()[1]);

    // eigenvectors of M̃1†M̃1 also diagonalize M̃2†M̃2 = I − M̃1†M̃1, so both
    // M̃1 U0 and M̃2 U0 have orthogonal columns
    let u0 = matops::eig_hermitian_unchecked(&(m1.adjoint() * m1)).eigenvectors;
    let (u1, alphas) = column_polar(&(m1 * &u0), tol);
    let (u2, betas) = column_polar(&(m2 * &u0), tol);

    let p = alphas.iter().position(|a| a.abs() <= tol.rank_tol);
    let qi = betas.iter().position(|b| b.abs() <= tol.rank_tol);
    let (Some(p), Some(qi)) = (p, qi) else {
        return Err(Error::FormMismatch { alphas, betas });
    };
    let mut perm = vec![p, qi];
    perm.extend((0..n).filter(|&i| i != p && i != qi));
    let pm = permutation_matrix(&perm);

    let mut a: Vec<Complex64> = perm.iter().map(|&i| real(alphas[i])).collect();
    let mut bs: Vec<Complex64> = perm.iter().map(|&i| real(betas[i])).collect();
    a[0] = ZERO;
    bs[1] = ZERO;
    let form = DiagonalTwoOutcome::new(a, bs, tol)?;
    Ok(TwoOutcomeDiagonalization {
        u0: &u0 * &pm,
        u1: pm.adjoint() * u1,
        u2: pm.adjoint() * u2,
        form,
    })
}

/// One-step transfer between pure states: after outcome `k` the conditional
/// state `M_k ψ0 / ‖M_k ψ0‖` is rotated onto `ψf`.
pub fn ppc_one_step(
    psi0: &PureState,
    psif: &PureState,
    m: &Measurement,
    tol: &ToleranceConfig,
) -> Result<FeedbackPlan> {
    let n = m.dim();
    if psi0.dim() != n || psif.dim() != n {
        return Err(Error::Dimension(format!(
            "states of dimension {} and {} for a measurement on {n}",
            psi0.dim(),
            psif.dim()
        )));
    }
    let step = m
        .operators()
        .iter()
        .map(|op| {
            let phi = op * psi0.vector();
            if phi.norm() > tol.rank_tol {
                unitary_mapping(&phi, psif.vector())
            } else {
                identity(n)
            }
        })
        .collect();
    Ok(FeedbackPlan::new(m.label(), vec![step]))
}

fn swap(n: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.swap(i, j);
    permutation_matrix(&perm)
}

/// Dimension of the support of the averaged state after each purification
/// step except the last; the state lives on the leading basis vectors.
pub fn purification_support_dims(n: usize) -> Vec<usize> {
    (0..n.saturating_sub(2)).map(|k| n - k - 1).collect()
}

/// Largest entry of `ρ` outside its leading `dim × dim` block.
pub fn support_leakage(rho: &DensityMatrix, dim: usize) -> f64 {
    let m = rho.matrix();
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i >= dim || j >= dim {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

/// `N − 1` steps driving any state to `|w⟩⟨w|` for the diagonal measurement.
pub fn purification_sequence(d: &DiagonalTwoOutcome, w: &PureState) -> Result<FeedbackPlan> {
    let n = d.dim();
    if w.dim() != n {
        return Err(Error::Dimension(format!(
            "target of dimension {} for a measurement on {n}",
            w.dim()
        )));
    }
    let mut steps = Vec::with_capacity(n - 1);
    for i in 0..n - 2 {
        // outcome 1 has emptied e1 and outcome 2 has emptied e2; refill both from the last occupied vector
        let last = n - 1 - i;
        steps.push(vec![swap(n, 0, last), swap(n, 1, last)]);
    }
    steps.push(vec![
        unitary_mapping(&basis_vector(n, 1), w.vector()),
        unitary_mapping(&basis_vector(n, 0), w.vector()),
    ]);
    Ok(FeedbackPlan::new(label_of(d), steps))
}

fn label_of(d: &DiagonalTwoOutcome) -> String {
    d.measurement(&ToleranceConfig::uniform(1e-6).expect("valid"))
        .map(|m| m.label().to_string())
        .unwrap_or_else(|_| "diagonal-two-outcome".into())
}

/// Validated spectral data of a target state: weights `γ` and orthonormal vectors `v`.
fn check_spectrum(
    n: usize,
    gammas: &[f64],
    vs: &[ComplexVector],
    tol: &ToleranceConfig,
) -> Result<()> {
    if gammas.len() != n || vs.len() != n {
        return Err(Error::Dimension(format!(
            "{} weights and {} vectors for dimension {n}",
            gammas.len(),
            vs.len()
        )));
    }
    if gammas.iter().any(|&g| g < -tol.psd_tol || !g.is_finite()) {
        return Err(Error::InvalidState("negative target weight".into()));
    }
    let total: f64 = gammas.iter().sum();
    if (total - 1.0).abs() > tol.eq_tol {
        return Err(Error::InvalidState(format!("target weights sum to {total}")));
    }
    let v = ComplexMatrix::from_columns(vs);
    if v.nrows() != n {
        return Err(Error::Dimension("target vectors have the wrong length".into()));
    }
    let residual = matops::unitarity_residual(&v)?;
    if residual > tol.eq_tol {
        return Err(Error::InvalidArgument(format!(
            "target vectors are not orthonormal (residual {residual:.3e})"
        )));
    }
    Ok(())
}

/// `√a e2 + √(1 − a) e1`.
fn staging_vector(n: usize, a: f64) -> ComplexVector {
    let a = a.clamp(0.0, 1.0);
    basis_vector(n, 1) * real(a.sqrt()) + basis_vector(n, 0) * real((1.0 - a).sqrt())
}

/// Staging vectors `z_1, …, z_N`: `z_i` splits the remaining weight so that
/// the outcome-2 branch deposits exactly `γ_i`.
fn staging_vectors(gammas: &[f64], tol: &ToleranceConfig) -> Vec<ComplexVector> {
    let n = gammas.len();
    let mut remaining = 1.0;
    gammas
        .iter()
        .map(|&g| {
            let a = if remaining > tol.rank_tol { g / remaining } else { 0.0 };
            remaining -= g;
            staging_vector(n, a)
        })
        .collect()
}

/// Steps `1..=N` of the preparation sequence, starting from `|z_1⟩⟨z_1|`.
fn preparation_tail(n: usize, zs: &[ComplexVector], vs: &[ComplexVector]) -> Vec<Vec<ComplexMatrix>> {
    let mut steps = Vec::with_capacity(n);
    for (i, z) in zs.iter().enumerate().take(n - 1).skip(1) {
        steps.push(vec![
            unitary_mapping(&basis_vector(n, 1), &basis_vector(n, n - i)),
            unitary_mapping(&basis_vector(n, 0), z),
        ]);
    }
    steps.push(vec![identity(n), identity(n)]);
    // U e_i = v_{N−i+1}
    let cols: Vec<ComplexVector> = (0..n).map(|i| vs[n - 1 - i].clone()).collect();
    let u = ComplexMatrix::from_columns(&cols);
    steps.push(vec![u.clone(), u]);
    steps
}

/// `N + 1` steps taking the pure state `ψ0` to `Σ γ_i |v_i⟩⟨v_i|`.
pub fn preparation_sequence(
    d: &DiagonalTwoOutcome,
    psi0: &PureState,
    gammas: &[f64],
    vs: &[ComplexVector],
    tol: &ToleranceConfig,
) -> Result<FeedbackPlan> {
    let n = d.dim();
    if psi0.dim() != n {
        return Err(Error::Dimension(format!(
            "initial state of dimension {} for a measurement on {n}",
            psi0.dim()
        )));
    }
    check_spectrum(n, gammas, vs, tol)?;
    let zs = staging_vectors(gammas, tol);
    let ops = [matops::diag(d.alphas()), matops::diag(d.betas())];
    let first = ops
        .iter()
        .map(|op| {
            let phi = op * psi0.vector();
            if phi.norm() > tol.rank_tol {
                unitary_mapping(&phi, &zs[0])
            } else {
                identity(n)
            }
        })
        .collect();
    let mut steps = vec![first];
    steps.extend(preparation_tail(n, &zs, vs));
    Ok(FeedbackPlan::new(label_of(d), steps))
}

/// Eigenvalues (descending) and eigenvectors of a target state.
fn target_spectrum(rhof: &DensityMatrix) -> (Vec<f64>, Vec<ComplexVector>) {
    let eig = matops::eig_hermitian_unchecked(rhof.matrix());
    let vs = eig.eigenvectors.column_iter().map(|c| c.into_owned()).collect();
    let total: f64 = eig.eigenvalues.iter().map(|g| g.max(0.0)).sum();
    let gammas = eig.eigenvalues.iter().map(|g| g.max(0.0) / total).collect();
    (gammas, vs)
}

/// `2N − 1` steps taking any state to `rhof` for the diagonal measurement:
/// purification onto `z_1` followed by preparation from `z_1`.
pub fn ddc_sequence(
    d: &DiagonalTwoOutcome,
    rho0: &DensityMatrix,
    rhof: &DensityMatrix,
    tol: &ToleranceConfig,
) -> Result<FeedbackPlan> {
    let n = d.dim();
    if rho0.dim() != n || rhof.dim() != n {
        return Err(Error::Dimension(format!(
            "states of dimension {} and {} for a measurement on {n}",
            rho0.dim(),
            rhof.dim()
        )));
    }
    let (gammas, vs) = target_spectrum(rhof);
    check_spectrum(n, &gammas, &vs, tol)?;
    let zs = staging_vectors(&gammas, tol);
    let mut plan = purification_sequence(d, &PureState::normalized(zs[0].clone())?)?;
    plan.steps.extend(preparation_tail(n, &zs, &vs));
    Ok(plan)
}

/// Finite-time transfer `rho0 → rhof` for an arbitrary two-outcome measurement
/// admitting the diagonal form, expressed in the physical frame.
pub fn ddc_plan_for_measurement(
    m: &Measurement,
    rho0: &DensityMatrix,
    rhof: &DensityMatrix,
    tol: &ToleranceConfig,
) -> Result<FeedbackPlan> {
    let diag = diagonalize_two_outcome(m, tol)?;
    let plan = ddc_sequence(
        &diag.form,
        &diag.to_diagonal_frame(rho0),
        &diag.to_diagonal_frame(rhof),
        tol,
    )?;
    Ok(diag.lift_plan(&plan, m.label()))
}

/// A final step replacing measurement by a classically randomized unitary:
/// `Û_j` is applied with probability `p_j`.
#[derive(Debug, Clone)]
pub struct RandomizedStep {
    pub unitaries: Vec<ComplexMatrix>,
    pub probabilities: Vec<f64>,
}

impl RandomizedStep {
    pub fn average(&self, rho: &DensityMatrix, tol: &ToleranceConfig) -> Result<DensityMatrix> {
        let n = rho.dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for (u, &p) in self.unitaries.iter().zip(&self.probabilities) {
            if u.shape() != (n, n) {
                return Err(Error::Dimension("randomized unitary has the wrong size".into()));
            }
            out += u * rho.matrix() * u.adjoint() * real(p);
        }
        Ok(DensityMatrix::from_dynamics(out, tol))
    }
}

/// Randomized step taking the pure state `ψ` to `Σ p_j |φ_j⟩⟨φ_j|`.
pub fn randomized_final_step(
    psi: &PureState,
    probabilities: &[f64],
    phis: &[PureState],
    tol: &ToleranceConfig,
) -> Result<RandomizedStep> {
    if probabilities.len() != phis.len() || phis.is_empty() {
        return Err(Error::InvalidArgument(
            "need one probability per target vector".into(),
        ));
    }
    if probabilities.iter().any(|&p| !p.is_finite() || p < 0.0) {
        return Err(Error::InvalidArgument("probabilities must be non-negative".into()));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > tol.eq_tol {
        return Err(Error::InvalidArgument(format!("probabilities sum to {total}")));
    }
    if phis.iter().any(|phi| phi.dim() != psi.dim()) {
        return Err(Error::Dimension("target vectors have the wrong length".into()));
    }
    Ok(RandomizedStep {
        unitaries: phis
            .iter()
            .map(|phi| unitary_mapping(psi.vector(), phi.vector()))
            .collect(),
        probabilities: probabilities.to_vec(),
    })
}

/// Stationary controls `U_k = Ū V_k†` for a measurement whose operators are
/// `M_k = q_k V_k` with unitary `V_k`; the averaged map becomes `ρ ↦ Ū ρ Ū†`.
pub fn example1_inversion_controls(
    m: &Measurement,
    u_bar: &ComplexMatrix,
    tol: &ToleranceConfig,
) -> Result<FeedbackPlan> {
    let n = m.dim();
    if u_bar.shape() != (n, n) {
        return Err(Error::Dimension("target unitary has the wrong size".into()));
    }
    let residual = matops::unitarity_residual(u_bar)?;
    if residual > tol.eq_tol {
        return Err(Error::NotUnitary { residual });
    }
    let mut controls = Vec::with_capacity(m.len());
    for (k, op) in m.operators().iter().enumerate() {
        let r = canonical_form(op, tol)?;
        let q = r[(0, 0)];
        if matops::max_abs_diff(&r, &(identity(n) * q)) > tol.eq_tol {
            return Err(Error::NotScalarUnitary { outcome: k });
        }
        if q.norm() > tol.rank_tol {
            let v = op.unscale(q.re);
            controls.push(u_bar * v.adjoint());
        } else {
            controls.push(u_bar.clone());
        }
    }
    Ok(FeedbackPlan::new(m.label(), vec![controls]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::{diag_real, max_abs_diff, unitarity_residual, ONE};
    use crate::quantum::builtin::*;
    use crate::quantum::{apply_feedback, random_density, random_pure_state};
    use proptest::prelude::*;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn run(plan: &FeedbackPlan, m: &Measurement, rho: &DensityMatrix) -> Vec<DensityMatrix> {
        let mut states = vec![rho.clone()];
        for step in &plan.steps {
            let next = apply_feedback(states.last().unwrap(), m, step, &tol()).unwrap();
            states.push(next);
        }
        states
    }

    /// Diagonal form with generic entries beyond the first two.
    fn generic_form(n: usize, seed: u64) -> DiagonalTwoOutcome {
        use rand::Rng;
        let mut rng = matops::seeded_rng(seed);
        let mut a = vec![ZERO, ONE];
        let mut b = vec![ONE, ZERO];
        for _ in 2..n {
            let th: f64 = rng.random_range(0.1..1.4);
            let (pa, pb): (f64, f64) = (rng.random_range(0.0..6.0), rng.random_range(0.0..6.0));
            a.push(Complex64::from_polar(th.cos(), pa));
            b.push(Complex64::from_polar(th.sin(), pb));
        }
        DiagonalTwoOutcome::new(a, b, &tol()).unwrap()
    }

    #[test]
    fn plan_json_roundtrip() {
        let d = generic_form(3, 1);
        let plan = ddc_sequence(
            &d,
            &DensityMatrix::maximally_mixed(3),
            &random_density(3, 3, 2).unwrap(),
            &tol(),
        )
        .unwrap();
        let back = FeedbackPlan::from_json(&plan.to_json().unwrap()).unwrap();
        assert_eq!(back.len(), plan.len());
        for (s, t) in back.steps.iter().zip(&plan.steps) {
            for (a, b) in s.iter().zip(t) {
                assert!(max_abs_diff(a, b) == 0.0);
            }
        }
        assert!(matches!(plan.step(99), Err(Error::PlanExhausted { .. })));
    }

    #[test]
    fn diagonal_form_validation() {
        assert!(DiagonalTwoOutcome::new(vec![ONE, ZERO], vec![ZERO, ONE], &tol()).is_err());
        assert!(DiagonalTwoOutcome::new(vec![ZERO], vec![ONE], &tol()).is_err());
        assert!(DiagonalTwoOutcome::new(
            vec![ZERO, ONE, real(0.5)],
            vec![ONE, ZERO, real(0.5)],
            &tol()
        )
        .is_err());
    }

    #[test]
    fn one_step_pure_transfer() {
        let t = tol();
        for seed in 0..10 {
            let m = random_measurement(3, 3, seed);
            let psi0 = random_pure_state(3, 100 + seed);
            let psif = random_pure_state(3, 200 + seed);
            let plan = ppc_one_step(&psi0, &psif, &m, &t).unwrap();
            let out = run(&plan, &m, &psi0.density());
            assert!(out[1].trace_distance(&psif.density()).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn diagonalization_of_rotated_forms() {
        let t = tol();
        for seed in 0..10 {
            let d = generic_form(2 + seed as usize % 4, seed);
            let n = d.dim();
            let (v0, v1, v2) = (
                matops::haar_random_unitary(n, seed),
                matops::haar_random_unitary(n, seed + 50),
                matops::haar_random_unitary(n, seed + 99),
            );
            let ops = vec![
                v1.adjoint() * matops::diag(d.alphas()) * v0.adjoint(),
                v2.adjoint() * matops::diag(d.betas()) * v0.adjoint(),
            ];
            let m = Measurement::new("rotated", ops, &t).unwrap();
            let diag = diagonalize_two_outcome(&m, &t).unwrap();
            for (u, op, target) in [
                (&diag.u1, &m.operators()[0], diag.form.alphas()),
                (&diag.u2, &m.operators()[1], diag.form.betas()),
            ] {
                assert!(unitarity_residual(u).unwrap() < 1e-10);
                let got = u * op * &diag.u0;
                assert!(max_abs_diff(&got, &matops::diag(target)) < 1e-9, "seed {seed}");
            }
            assert_eq!(diag.form.alphas()[0], ZERO);
            assert_eq!(diag.form.betas()[1], ZERO);
        }
    }

    #[test]
    fn diagonalization_rejects() {
        let t = tol();
        assert!(matches!(
            diagonalize_two_outcome(&example3_nonunital(0.6), &t),
            Err(Error::FormMismatch { .. })
        ));
        assert!(matches!(
            diagonalize_two_outcome(&example1_depolarizing(), &t),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn purification_of_maximally_mixed_qutrit() {
        let t = tol();
        let d = generic_form(3, 4);
        let w = random_pure_state(3, 5);
        let plan = purification_sequence(&d, &w).unwrap();
        assert_eq!(plan.len(), 2);
        let m = d.measurement(&t).unwrap();
        let states = run(&plan, &m, &DensityMatrix::maximally_mixed(3));
        for (k, dim) in purification_support_dims(3).into_iter().enumerate() {
            assert!(support_leakage(&states[k + 1], dim) <= 1e-12);
        }
        assert!(states[2].trace_distance(&w.density()).unwrap() <= 1e-9);
    }

    #[test]
    fn qubit_preparation() {
        let t = tol();
        let d = DiagonalTwoOutcome::qubit_projective();
        let m = d.measurement(&t).unwrap();
        let vs = vec![basis_vector(2, 0), basis_vector(2, 1)];
        let plan = preparation_sequence(&d, &PureState::basis(2, 0), &[0.7, 0.3], &vs, &t).unwrap();
        assert_eq!(plan.len(), 3);
        let states = run(&plan, &m, &PureState::basis(2, 0).density());
        let target = diag_real(&[0.7, 0.3]);
        assert!(max_abs_diff(states[3].matrix(), &target) <= 1e-9);
    }

    #[test]
    fn preparation_rejects_bad_spectrum() {
        let t = tol();
        let d = generic_form(3, 0);
        let vs: Vec<ComplexVector> = (0..3).map(|i| basis_vector(3, i)).collect();
        let psi = PureState::basis(3, 0);
        assert!(preparation_sequence(&d, &psi, &[0.5, 0.5, 0.5], &vs, &t).is_err());
        let bad = vec![vs[0].clone(), vs[0].clone(), vs[2].clone()];
        assert!(preparation_sequence(&d, &psi, &[0.5, 0.3, 0.2], &bad, &t).is_err());
    }

    #[test]
    fn ddc_random_qutrit_pairs() {
        let t = tol();
        for seed in 0..10 {
            let d = generic_form(3, seed);
            let m = d.measurement(&t).unwrap();
            let rho0 = random_density(3, 1 + seed as usize % 3, seed).unwrap();
            let rhof = random_density(3, 1 + (seed as usize + 1) % 3, 1000 + seed).unwrap();
            let plan = ddc_sequence(&d, &rho0, &rhof, &t).unwrap();
            assert_eq!(plan.len(), 5);
            let states = run(&plan, &m, &rho0);
            assert!(states[5].trace_distance(&rhof).unwrap() <= 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn ddc_physical_frame() {
        let t = tol();
        for seed in 0..5 {
            let n = 2 + seed as usize % 3;
            let d = generic_form(n, seed);
            let v0 = matops::haar_random_unitary(n, seed + 7);
            let v1 = matops::haar_random_unitary(n, seed + 8);
            let ops = vec![
                v1 * matops::diag(d.alphas()) * v0.adjoint(),
                matops::diag(d.betas()) * v0.adjoint(),
            ];
            let m = Measurement::new("physical", ops, &t).unwrap();
            let rho0 = random_density(n, n, seed).unwrap();
            let rhof = random_density(n, 1, seed + 3).unwrap();
            let plan = ddc_plan_for_measurement(&m, &rho0, &rhof, &t).unwrap();
            plan.validate(n, 2, &t).unwrap();
            let states = run(&plan, &m, &rho0);
            assert!(states.last().unwrap().trace_distance(&rhof).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn randomized_step_hits_mixture() {
        let t = tol();
        let psi = random_pure_state(3, 1);
        let phis: Vec<PureState> = (0..3).map(|i| PureState::basis(3, i)).collect();
        let step = randomized_final_step(&psi, &[0.5, 0.3, 0.2], &phis, &t).unwrap();
        let out = step.average(&psi.density(), &t).unwrap();
        assert!(max_abs_diff(out.matrix(), &diag_real(&[0.5, 0.3, 0.2])) <= 1e-12);
        assert!(randomized_final_step(&psi, &[0.5, 0.6, 0.2], &phis, &t).is_err());
    }

    #[test]
    fn inversion_controls() {
        let t = tol();
        let u_bar = matops::haar_random_unitary(2, 3);
        let m = example1_depolarizing();
        let plan = example1_inversion_controls(&m, &u_bar, &t).unwrap();
        let rho = random_density(2, 2, 9).unwrap();
        let out = apply_feedback(&rho, &m, &plan.steps[0], &t).unwrap();
        assert!(max_abs_diff(out.matrix(), &(&u_bar * rho.matrix() * u_bar.adjoint())) <= 1e-12);
        assert!(matches!(
            example1_inversion_controls(&example3_nonunital(0.6), &u_bar, &t),
            Err(Error::NotScalarUnitary { outcome: 0 })
        ));
        let m = Measurement::new(
            "with-null",
            vec![identity(2), ComplexMatrix::zeros(2, 2)],
            &t,
        )
        .unwrap();
        let plan = example1_inversion_controls(&m, &u_bar, &t).unwrap();
        assert!(max_abs_diff(&plan.steps[0][1], &u_bar) == 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn ddc_reaches_target(seed in 0u64..10_000, n in 2usize..5, r0 in 1usize..5, rf in 1usize..5) {
            let t = tol();
            let d = generic_form(n, seed);
            let m = d.measurement(&t).unwrap();
            let rho0 = random_density(n, r0.min(n), seed).unwrap();
            let rhof = random_density(n, rf.min(n), seed ^ 0xabc).unwrap();
            let plan = ddc_sequence(&d, &rho0, &rhof, &t).unwrap();
            prop_assert_eq!(plan.len(), 2 * n - 1);
            let states = run(&plan, &m, &rho0);
            prop_assert!(states.last().unwrap().trace_distance(&rhof).unwrap() <= 1e-9);
        }

        #[test]
        fn purification_reaches_target(seed in 0u64..10_000, n in 2usize..6) {
            let t = tol();
            let d = generic_form(n, seed);
            let m = d.measurement(&t).unwrap();
            let w = random_pure_state(n, seed + 1);
            let plan = purification_sequence(&d, &w).unwrap();
            let states = run(&plan, &m, &random_density(n, n, seed).unwrap());
            prop_assert!(states.last().unwrap().trace_distance(&w.density()).unwrap() <= 1e-9);
        }
    }
}
