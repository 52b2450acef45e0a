//! Averaged and single-trajectory simulation of feedback dynamics.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controllability::stabilizable_pure_state;
use crate::error::{Error, Result};
use crate::matops::{self, kron, unitary_mapping, ComplexMatrix, ToleranceConfig};
use crate::quantum::{self, purity, DensityMatrix, Measurement, PureState};
use crate::synthesis::{FeedbackPlan, RandomizedStep};

/// How controls are chosen at each step.
#[derive(Debug, Clone)]
pub enum FeedbackLaw {
    /// Controls read from a time-indexed plan.
    FixedPlan(FeedbackPlan),
    /// The same control per outcome at every step.
    Stationary(Vec<ComplexMatrix>),
    /// Rotate the principal eigenvector of each conditional state onto the target.
    Greedy { target: PureState },
    /// A plan followed by one randomized-unitary step without measurement.
    RandomizedTail { plan: FeedbackPlan, tail: RandomizedStep },
}

enum Action<'a> {
    Controls(&'a [ComplexMatrix]),
    Greedy(&'a PureState),
    Randomized(&'a RandomizedStep),
}

impl FeedbackLaw {
    /// Rejects laws whose shape does not match the measurement.
    pub fn check(&self, m: &Measurement, tol: &ToleranceConfig) -> Result<()> {
        let n = m.dim();
        match self {
            FeedbackLaw::FixedPlan(plan) => plan.validate(n, m.len(), tol),
            FeedbackLaw::Stationary(controls) => {
                FeedbackPlan::new(m.label(), vec![controls.clone()]).validate(n, m.len(), tol)
            }
            FeedbackLaw::Greedy { target } => {
                if target.dim() != n {
                    return Err(Error::Dimension(format!(
                        "target of dimension {} for a measurement on {n}",
                        target.dim()
                    )));
                }
                if !stabilizable_pure_state(m, target, tol)? {
                    return Err(Error::Infeasible);
                }
                Ok(())
            }
            FeedbackLaw::RandomizedTail { plan, tail } => {
                plan.validate(n, m.len(), tol)?;
                for u in &tail.unitaries {
                    if u.shape() != (n, n) || matops::unitarity_residual(u)? > tol.eq_tol {
                        return Err(Error::InvalidArgument(
                            "randomized tail contains a non-unitary".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// Number of steps the law can drive, if bounded.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            FeedbackLaw::FixedPlan(plan) => Some(plan.len()),
            FeedbackLaw::RandomizedTail { plan, .. } => Some(plan.len() + 1),
            _ => None,
        }
    }

    fn pre_rotation(&self) -> Option<&ComplexMatrix> {
        match self {
            FeedbackLaw::FixedPlan(plan) | FeedbackLaw::RandomizedTail { plan, .. } => {
                plan.basis_pre_rotation.as_ref()
            }
            _ => None,
        }
    }

    fn action(&self, t: usize) -> Result<Action<'_>> {
        match self {
            FeedbackLaw::FixedPlan(plan) => plan.step(t).map(Action::Controls),
            FeedbackLaw::Stationary(controls) => Ok(Action::Controls(controls)),
            FeedbackLaw::Greedy { target } => Ok(Action::Greedy(target)),
            FeedbackLaw::RandomizedTail { plan, tail } => {
                if t < plan.len() {
                    plan.step(t).map(Action::Controls)
                } else if t == plan.len() {
                    Ok(Action::Randomized(tail))
                } else {
                    Err(Error::PlanExhausted {
                        available: plan.len() + 1,
                        requested: t + 1,
                    })
                }
            }
        }
    }
}

/// Control used by the greedy law for a conditional state.
pub fn greedy_control(sigma: &ComplexMatrix, target: &PureState) -> ComplexMatrix {
    let v = matops::eig_hermitian_unchecked(sigma).principal_vector();
    unitary_mapping(&v, target.vector())
}

/// Greedy law for `target`, after checking that feedback can stabilize it.
pub fn greedy_stabilizing_law(
    m: &Measurement,
    target: &PureState,
    tol: &ToleranceConfig,
) -> Result<FeedbackLaw> {
    let law = FeedbackLaw::Greedy {
        target: target.clone(),
    };
    law.check(m, tol)?;
    Ok(law)
}

/// Weight of the isotropic perturbation used to resolve outcomes that have
/// zero probability exactly at the target.
const ASYMPTOTIC_PERTURBATION: f64 = 1e-3;

/// Stationary controls the greedy law applies near its target: greedy
/// controls evaluated at `(1 − ε)|ψ⟩⟨ψ| + ε I/N`.
pub fn greedy_asymptotic_controls(m: &Measurement, target: &PureState) -> Result<Vec<ComplexMatrix>> {
    let n = m.dim();
    if target.dim() != n {
        return Err(Error::Dimension(format!(
            "target of dimension {} for a measurement on {n}",
            target.dim()
        )));
    }
    let eps = ASYMPTOTIC_PERTURBATION;
    let rho = matops::projector(target.vector()) * matops::real(1.0 - eps)
        + matops::identity(n) * matops::real(eps / n as f64);
    Ok(m.operators()
        .iter()
        .map(|op| {
            let branch = op * &rho * op.adjoint();
            let p = matops::trace(&branch).re;
            greedy_control(&branch.unscale(p), target)
        })
        .collect())
}

fn initial_state(rho0: &DensityMatrix, m: &Measurement, law: &FeedbackLaw, tol: &ToleranceConfig) -> Result<DensityMatrix> {
    if rho0.dim() != m.dim() {
        return Err(Error::Dimension(format!(
            "state of dimension {} for a measurement on {}",
            rho0.dim(),
            m.dim()
        )));
    }
    law.check(m, tol)?;
    match law.pre_rotation() {
        Some(p) => quantum::apply_unitary(rho0, p, tol),
        None => Ok(rho0.clone()),
    }
}

fn check_horizon(law: &FeedbackLaw, steps: usize) -> Result<()> {
    match law.horizon() {
        Some(h) if steps > h => Err(Error::PlanExhausted {
            available: h,
            requested: steps,
        }),
        _ => Ok(()),
    }
}

fn averaged_step(
    rho: &DensityMatrix,
    m: &Measurement,
    action: Action<'_>,
    tol: &ToleranceConfig,
) -> Result<DensityMatrix> {
    match action {
        Action::Controls(controls) => quantum::apply_feedback(rho, m, controls, tol),
        Action::Randomized(step) => step.average(rho, tol),
        Action::Greedy(target) => {
            let n = rho.dim();
            let mut out = ComplexMatrix::zeros(n, n);
            for op in m.operators() {
                let branch = op * rho.matrix() * op.adjoint();
                let p = matops::trace(&branch).re;
                if p > tol.rank_tol {
                    let u = greedy_control(&branch.unscale(p), target);
                    out += &u * branch * u.adjoint();
                } else {
                    out += branch;
                }
            }
            Ok(DensityMatrix::from_dynamics(out, tol))
        }
    }
}

/// Ensemble-averaged evolution; the result starts with `rho0` and has `steps + 1` entries.
pub fn run_averaged(
    rho0: &DensityMatrix,
    m: &Measurement,
    law: &FeedbackLaw,
    steps: usize,
    tol: &ToleranceConfig,
) -> Result<Vec<DensityMatrix>> {
    check_horizon(law, steps)?;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(initial_state(rho0, m, law, tol)?);
    for t in 0..steps {
        let next = averaged_step(&states[t], m, law.action(t)?, tol)?;
        states.push(next);
    }
    Ok(states)
}

/// One sampled measurement record and the conditional states along it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    /// Outcome index at each step (for a randomized step, the unitary drawn).
    pub outcomes: Vec<usize>,
    /// Probability of the recorded outcome at each step.
    pub probabilities: Vec<f64>,
    /// Post-control conditional states, starting with the initial state.
    pub states: Vec<DensityMatrix>,
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Internal("no outcome has positive probability".into()));
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = Some(k);
            if u < acc {
                return Ok(k);
            }
        }
    }
    last.ok_or_else(|| Error::Internal("empty distribution".into()))
}

/// Samples one trajectory with a reproducible RNG stream.
pub fn run_trajectory(
    rho0: &DensityMatrix,
    m: &Measurement,
    law: &FeedbackLaw,
    steps: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<TrajectoryRecord> {
    check_horizon(law, steps)?;
    let mut rng = matops::seeded_rng(seed);
    let mut rho = initial_state(rho0, m, law, tol)?;
    let mut record = TrajectoryRecord {
        seed,
        outcomes: Vec::with_capacity(steps),
        probabilities: Vec::with_capacity(steps),
        states: vec![rho.clone()],
    };
    for t in 0..steps {
        let (k, p, next) = match law.action(t)? {
            Action::Randomized(step) => {
                let j = sample_index(&step.probabilities, &mut rng)?;
                let next = quantum::apply_unitary(&rho, &step.unitaries[j], tol)?;
                (j, step.probabilities[j], next)
            }
            action => {
                let probs = quantum::outcome_probabilities(&rho, m)?.probs;
                let weights: Vec<f64> = probs
                    .iter()
                    .map(|&p| if p > tol.rank_tol { p } else { 0.0 })
                    .collect();
                let k = sample_index(&weights, &mut rng)?;
                let sigma = quantum::conditional_state(&rho, m, k, tol)?;
                let u = match action {
                    Action::Controls(controls) => controls[k].clone(),
                    Action::Greedy(target) => greedy_control(sigma.matrix(), target),
                    Action::Randomized(_) => unreachable!(),
                };
                (k, probs[k], quantum::apply_unitary(&sigma, &u, tol)?)
            }
        };
        record.outcomes.push(k);
        record.probabilities.push(p);
        record.states.push(next.clone());
        rho = next;
    }
    Ok(record)
}

/// Per-trajectory seed derived from a base seed and the trajectory index.
pub fn trajectory_seed(base: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent trajectories, sampled in parallel; the result is ordered by index
/// and does not depend on the thread count.
pub fn run_ensemble(
    rho0: &DensityMatrix,
    m: &Measurement,
    law: &FeedbackLaw,
    steps: usize,
    base_seed: u64,
    count: usize,
    tol: &ToleranceConfig,
) -> Result<Vec<TrajectoryRecord>> {
    (0..count)
        .into_par_iter()
        .map(|i| run_trajectory(rho0, m, law, steps, trajectory_seed(base_seed, i as u64), tol))
        .collect()
}

/// Sample mean of the conditional states at step `t`.
pub fn ensemble_mean(records: &[TrajectoryRecord], t: usize) -> Result<DensityMatrix> {
    let first = records
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
    let n = first.states[0].dim();
    let mut acc = ComplexMatrix::zeros(n, n);
    for r in records {
        let s = r.states.get(t).ok_or_else(|| {
            Error::InvalidArgument(format!("trajectory has no state at step {t}"))
        })?;
        acc += s.matrix();
    }
    Ok(DensityMatrix::stabilized(acc.unscale(records.len() as f64)).0)
}

/// Matrix of the averaged map on row-major vectorized states:
/// `S[(a, b), (i, j)] = [Φ(E_ij)]_{ab}` with `Φ(ρ) = Σ_k U_k M_k ρ M_k† U_k†`.
pub fn feedback_superoperator(m: &Measurement, controls: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    if controls.len() != m.len() {
        return Err(Error::Dimension(format!(
            "{} controls for {} outcomes",
            controls.len(),
            m.len()
        )));
    }
    let n = m.dim();
    let mut s = ComplexMatrix::zeros(n * n, n * n);
    for (op, u) in m.operators().iter().zip(controls) {
        if u.shape() != (n, n) {
            return Err(Error::Dimension("control has the wrong size".into()));
        }
        let k = u * op;
        s += kron(&k, &k.conjugate());
    }
    Ok(s)
}

/// Moduli of the eigenvalues of a square matrix, descending.
pub fn spectral_moduli(s: &ComplexMatrix) -> Result<Vec<f64>> {
    let n = matops::ensure_square(s)?;
    // faer's solver stays accurate on the highly degenerate spectra of unitary channels
    let eig = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| s[(i, j)])
        .eigenvalues()
        .map_err(|e| Error::Internal(format!("eigenvalue solver failed: {e:?}")))?;
    let mut moduli: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    Ok(moduli)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub distances: Vec<f64>,
    /// Eigenvalue moduli of the stationary averaged map, when there is one.
    pub superop_moduli: Option<Vec<f64>>,
    /// Largest modulus strictly below one.
    pub estimated_rate: Option<f64>,
    /// Median ratio of successive distances over the last resolvable steps.
    pub empirical_rate: Option<f64>,
}

const DISTANCE_FLOOR: f64 = 1e-13;
const RATE_WINDOW: usize = 5;

/// Trace distances to `target` along `states`, plus contraction-rate estimates.
pub fn convergence_report(
    states: &[DensityMatrix],
    target: &DensityMatrix,
    stationary: Option<(&Measurement, &[ComplexMatrix])>,
    tol: &ToleranceConfig,
) -> Result<ConvergenceReport> {
    let distances = states
        .iter()
        .map(|s| s.trace_distance(target))
        .collect::<Result<Vec<f64>>>()?;
    let ratios: Vec<f64> = distances
        .windows(2)
        .filter(|w| w[0] > DISTANCE_FLOOR && w[1] > DISTANCE_FLOOR)
        .map(|w| w[1] / w[0])
        .collect();
    let empirical_rate = if ratios.is_empty() {
        None
    } else {
        let mut tail = ratios[ratios.len().saturating_sub(RATE_WINDOW)..].to_vec();
        tail.sort_by(f64::total_cmp);
        Some(tail[tail.len() / 2])
    };
    let (superop_moduli, estimated_rate) = match stationary {
        Some((m, controls)) => {
            let moduli = spectral_moduli(&feedback_superoperator(m, controls)?)?;
            let rate = moduli
                .iter()
                .copied()
                .find(|&x| x < 1.0 - tol.eq_tol.max(1e-9));
            (Some(moduli), rate)
        }
        None => (None, None),
    };
    Ok(ConvergenceReport {
        distances,
        superop_moduli,
        estimated_rate,
        empirical_rate,
    })
}

/// One row per trajectory and step:
/// `trajectory_id, step, outcome, purity, trace_distance_to_target`.
/// Step 0 is the initial state and has an empty outcome.
pub fn write_trajectories_csv<W: Write>(
    records: &[TrajectoryRecord],
    target: Option<&DensityMatrix>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "trajectory_id",
        "step",
        "outcome",
        "purity",
        "trace_distance_to_target",
    ])?;
    for (id, r) in records.iter().enumerate() {
        for (t, state) in r.states.iter().enumerate() {
            let outcome = if t == 0 {
                String::new()
            } else {
                r.outcomes[t - 1].to_string()
            };
            let dist = match target {
                Some(tg) => format!("{:.12e}", state.trace_distance(tg)?),
                None => String::new(),
            };
            w.write_record([
                id.to_string(),
                t.to_string(),
                outcome,
                format!("{:.12e}", purity(state)),
                dist,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Full per-step states of every trajectory as JSON.
pub fn write_trajectories_json<W: Write>(records: &[TrajectoryRecord], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, records)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::{diag_real, identity, max_abs_diff, pauli_x};
    use crate::quantum::builtin::*;
    use crate::quantum::{random_density, random_pure_state};
    use crate::synthesis::{ddc_sequence, randomized_final_step, DiagonalTwoOutcome};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn superoperator_matches_direct_action() {
        let t = tol();
        for seed in 0..10 {
            let m = random_measurement(3, 2, seed);
            let controls = vec![
                matops::haar_random_unitary(3, seed),
                matops::haar_random_unitary(3, seed + 1),
            ];
            let s = feedback_superoperator(&m, &controls).unwrap();
            let rho = random_density(3, 3, seed).unwrap();
            let direct = quantum::apply_feedback(&rho, &m, &controls, &t).unwrap();
            let vec = ComplexMatrix::from_row_slice(9, 1, rho.matrix().transpose().as_slice());
            let out = &s * vec;
            let got = ComplexMatrix::from_row_slice(3, 3, out.as_slice());
            assert!(max_abs_diff(&got, direct.matrix()) <= 1e-12);
        }
    }

    #[test]
    fn superoperator_spectrum_contains_one() {
        let m = example3_nonunital(0.6);
        let s = feedback_superoperator(&m, &[identity(2), identity(2)]).unwrap();
        let moduli = spectral_moduli(&s).unwrap();
        assert!((moduli[0] - 1.0).abs() <= 1e-12);
        let expected = [1.0, 0.8, 0.8, 0.64];
        for (a, b) in moduli.iter().zip(expected) {
            assert!((a - b).abs() <= 1e-9, "{moduli:?}");
        }
    }

    #[test]
    fn identity_law_is_the_channel() {
        let t = tol();
        let m = example2_full_rank();
        let rho = random_density(2, 2, 3).unwrap();
        let law = FeedbackLaw::Stationary(vec![identity(2), identity(2)]);
        let states = run_averaged(&rho, &m, &law, 3, &t).unwrap();
        assert_eq!(states.len(), 4);
        let mut expect = rho.clone();
        for s in &states[1..] {
            expect = quantum::apply_cptp(&expect, &m, &t).unwrap();
            assert!(max_abs_diff(s.matrix(), expect.matrix()) <= 1e-14);
        }
    }

    #[test]
    fn plan_length_is_enforced() {
        let t = tol();
        let d = DiagonalTwoOutcome::qubit_projective();
        let m = d.measurement(&t).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        let plan = ddc_sequence(&d, &rho, &rho, &t).unwrap();
        let law = FeedbackLaw::FixedPlan(plan.clone());
        assert!(matches!(
            run_averaged(&rho, &m, &law, plan.len() + 1, &t),
            Err(Error::PlanExhausted { .. })
        ));
        assert!(run_trajectory(&rho, &m, &law, plan.len(), 1, &t).is_ok());
        let wrong = FeedbackLaw::FixedPlan(plan);
        assert!(run_averaged(&rho, &example1_depolarizing(), &wrong, 1, &t).is_err());
    }

    #[test]
    fn pre_rotation_is_applied() {
        let t = tol();
        let m = projective_computational(2);
        let mut plan = FeedbackPlan::new("pre", vec![vec![identity(2), identity(2)]]);
        plan.basis_pre_rotation = Some(pauli_x());
        let rho = PureState::basis(2, 0).density();
        let states = run_averaged(&rho, &m, &FeedbackLaw::FixedPlan(plan), 1, &t).unwrap();
        assert!(max_abs_diff(states[0].matrix(), &diag_real(&[0.0, 1.0])) <= 1e-15);
    }

    #[test]
    fn trajectories_are_reproducible() {
        let t = tol();
        let m = random_measurement(3, 3, 4);
        let law = FeedbackLaw::Greedy {
            target: PureState::basis(3, 0),
        };
        let rho = DensityMatrix::maximally_mixed(3);
        let a = run_ensemble(&rho, &m, &law, 10, 42, 8, &t).unwrap();
        let b = run_ensemble(&rho, &m, &law, 10, 42, 8, &t).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.outcomes, y.outcomes);
            assert_eq!(x.states, y.states);
        }
        let c = run_ensemble(&rho, &m, &law, 10, 43, 8, &t).unwrap();
        assert!(a.iter().zip(&c).any(|(x, y)| x.outcomes != y.outcomes));
    }

    #[test]
    fn trajectory_states_stay_physical() {
        let t = tol();
        let m = random_measurement(3, 2, 5);
        let law = FeedbackLaw::Stationary(vec![
            matops::haar_random_unitary(3, 1),
            matops::haar_random_unitary(3, 2),
        ]);
        let rho = random_density(3, 3, 6).unwrap();
        let rec = run_trajectory(&rho, &m, &law, 30, 7, &t).unwrap();
        assert_eq!(rec.states.len(), 31);
        for s in &rec.states {
            assert!((matops::trace(s.matrix()).re - 1.0).abs() <= 1e-12);
            assert!(s.min_eigenvalue() >= -1e-10);
        }
        assert!(rec.probabilities.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn ensemble_mean_tracks_average() {
        let t = tol();
        let m = example3_nonunital(0.6);
        let law = FeedbackLaw::Stationary(vec![identity(2), pauli_x()]);
        let rho = random_density(2, 2, 1).unwrap();
        let avg = run_averaged(&rho, &m, &law, 4, &t).unwrap();
        let records = run_ensemble(&rho, &m, &law, 4, 9, 4000, &t).unwrap();
        let mean = ensemble_mean(&records, 4).unwrap();
        assert!(mean.trace_distance(&avg[4]).unwrap() < 0.05);
    }

    #[test]
    fn greedy_reaches_target() {
        let t = tol();
        let m = example3_nonunital(0.6);
        let target = PureState::basis(2, 0);
        let law = FeedbackLaw::Greedy {
            target: target.clone(),
        };
        let states = run_averaged(&DensityMatrix::maximally_mixed(2), &m, &law, 60, &t).unwrap();
        let report = convergence_report(&states, &target.density(), None, &t).unwrap();
        assert!(*report.distances.last().unwrap() <= 1e-6);
        let infeasible = FeedbackLaw::Greedy {
            target: random_pure_state(2, 1),
        };
        assert!(matches!(
            run_averaged(&DensityMatrix::maximally_mixed(2), &example1_depolarizing(), &infeasible, 3, &t),
            Err(Error::Infeasible)
        ));
    }

    #[test]
    fn greedy_rate_against_stationary_estimate() {
        let t = tol();
        let m = example3_nonunital(0.6);
        let target = PureState::basis(2, 0);
        let law = FeedbackLaw::Greedy {
            target: target.clone(),
        };
        let states = run_averaged(&DensityMatrix::maximally_mixed(2), &m, &law, 40, &t).unwrap();
        let controls = greedy_asymptotic_controls(&m, &target).unwrap();
        let report = convergence_report(&states, &target.density(), Some((&m, &controls)), &t).unwrap();
        let moduli = report.superop_moduli.as_ref().unwrap();
        assert!((moduli[0] - 1.0).abs() <= 1e-10);
        let (emp, est) = (report.empirical_rate.unwrap(), report.estimated_rate.unwrap());
        assert!(emp <= 2.0 * est && est <= 2.0 * emp, "empirical {emp}, estimated {est}");
    }

    #[test]
    fn randomized_tail_in_trajectory() {
        let t = tol();
        let d = DiagonalTwoOutcome::qubit_projective();
        let m = d.measurement(&t).unwrap();
        let psi = PureState::basis(2, 0);
        let plan = FeedbackPlan::new("empty", vec![]);
        let phis = vec![PureState::basis(2, 0), PureState::basis(2, 1)];
        let tail = randomized_final_step(&psi, &[0.25, 0.75], &phis, &t).unwrap();
        let law = FeedbackLaw::RandomizedTail { plan, tail };
        let avg = run_averaged(&psi.density(), &m, &law, 1, &t).unwrap();
        assert!(max_abs_diff(avg[1].matrix(), &diag_real(&[0.25, 0.75])) <= 1e-12);
        let recs = run_ensemble(&psi.density(), &m, &law, 1, 3, 2000, &t).unwrap();
        let ones = recs.iter().filter(|r| r.outcomes[0] == 1).count() as f64 / 2000.0;
        assert!((ones - 0.75).abs() < 0.05);
    }

    #[test]
    fn empirical_rate_of_geometric_sequence() {
        let t = tol();
        let target = DensityMatrix::maximally_mixed(2);
        let states: Vec<DensityMatrix> = (0..10)
            .map(|k| {
                let e = 0.5f64.powi(k) * 0.4;
                DensityMatrix::diagonal(&[0.5 + e, 0.5 - e], &t).unwrap()
            })
            .collect();
        let r = convergence_report(&states, &target, None, &t).unwrap();
        assert!((r.empirical_rate.unwrap() - 0.5).abs() <= 1e-9);
        assert!(r.superop_moduli.is_none());
    }

    #[test]
    fn csv_layout() {
        let t = tol();
        let m = projective_computational(2);
        let law = FeedbackLaw::Stationary(vec![identity(2), identity(2)]);
        let recs = run_ensemble(&DensityMatrix::maximally_mixed(2), &m, &law, 2, 0, 2, &t).unwrap();
        let mut buf = Vec::new();
        write_trajectories_csv(&recs, Some(&DensityMatrix::maximally_mixed(2)), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "trajectory_id,step,outcome,purity,trace_distance_to_target");
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert!(lines[1].starts_with("0,0,,"));
    }
}
