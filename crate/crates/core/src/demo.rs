//! Worked examples with embedded checks, printed as plain-text reports.

use std::fmt;

use crate::canonical::{can_simulate, canonical_form};
use crate::error::{Error, Result};
use crate::matops::{self, diag_real, haar_random_unitary, pauli_x, ComplexMatrix, ToleranceConfig};
use crate::quantum::builtin::{example1_depolarizing, example2_full_rank, example3_nonunital, example3_unitary_pair};
use crate::quantum::{self, random_density, DensityMatrix, Measurement};
use crate::simulate::{run_averaged, FeedbackLaw};
use crate::synthesis::example1_inversion_controls;

pub const DEMO_NAMES: &[&str] = &["example1", "example2", "example3"];

pub const EXAMPLE3_P: f64 = 0.5;
pub const EXAMPLE3_A: f64 = 0.6;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

#[derive(Debug, Clone, Default)]
pub struct DemoReport {
    pub name: String,
    pub lines: Vec<String>,
    pub checks: Vec<Check>,
}

impl DemoReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Default::default()
        }
    }

    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    fn check(&mut self, name: impl Into<String>, passed: bool) {
        self.checks.push(Check {
            name: name.into(),
            passed,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for DemoReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "== {} ==", self.name)?;
        for l in &self.lines {
            writeln!(f, "{l}")?;
        }
        writeln!(f)?;
        for c in &self.checks {
            writeln!(f, "[{}] {}", if c.passed { "ok" } else { "FAILED" }, c.name)?;
        }
        Ok(())
    }
}

pub fn run(name: &str, tol: &ToleranceConfig) -> Result<DemoReport> {
    match name {
        "example1" => example1(tol),
        "example2" => example2(tol),
        "example3" => example3(tol),
        _ => Err(Error::InvalidArgument(format!(
            "unknown demo '{name}' (expected one of {})",
            DEMO_NAMES.join(", ")
        ))),
    }
}

fn fmt_diag(rho: &DensityMatrix) -> String {
    let m = rho.matrix();
    let d: Vec<String> = (0..m.nrows()).map(|i| format!("{:.6}", m[(i, i)].re)).collect();
    format!("diag({})", d.join(", "))
}

fn example1(tol: &ToleranceConfig) -> Result<DemoReport> {
    let mut r = DemoReport::new("example1: depolarizing measurement");
    let m = example1_depolarizing();
    let mixed = DensityMatrix::maximally_mixed(2);
    r.line(format!("measurement: {m}"));
    r.line("without feedback the averaged state collapses to I/2 in one step:");
    r.line(format!("{:>6} {:>16} {:>16}", "seed", "d(rho0, I/2)", "d(rho1, I/2)"));
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let rho0 = random_density(2, 2, seed)?;
        let rho1 = quantum::apply_cptp(&rho0, &m, tol)?;
        let d = rho1.trace_distance(&mixed)?;
        worst = worst.max(d);
        r.line(format!("{seed:>6} {:>16.3e} {:>16.3e}", rho0.trace_distance(&mixed)?, d));
    }
    r.check("unconditional step reaches I/2 within 1e-10", worst <= 1e-10);

    r.line("");
    r.line("with conditional inversion controls U_k = Ubar V_k^dag the step becomes rho -> Ubar rho Ubar^dag:");
    let plan = example1_inversion_controls(&m, &pauli_x(), tol)?;
    let rho0 = DensityMatrix::diagonal(&[0.3, 0.7], tol)?;
    let rho1 = quantum::apply_feedback(&rho0, &m, &plan.steps[0], tol)?;
    r.line(format!("Ubar = sigma_x: {} -> {}", fmt_diag(&rho0), fmt_diag(&rho1)));
    r.check(
        "sigma_x inversion maps diag(0.3, 0.7) to diag(0.7, 0.3)",
        matops::max_abs_diff(rho1.matrix(), &diag_real(&[0.7, 0.3])) <= 1e-10,
    );
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let u_bar = haar_random_unitary(2, 100 + seed);
        let plan = example1_inversion_controls(&m, &u_bar, tol)?;
        let rho = random_density(2, 2, 200 + seed)?;
        let out = quantum::apply_feedback(&rho, &m, &plan.steps[0], tol)?;
        let want: ComplexMatrix = &u_bar * rho.matrix() * u_bar.adjoint();
        let err = matops::max_abs_diff(out.matrix(), &want);
        worst = worst.max(err);
        r.line(format!("Ubar seed {}: max |rho1 - Ubar rho0 Ubar^dag| = {err:.3e}", 100 + seed));
    }
    r.check("random inversions recover the unitary orbit within 1e-10", worst <= 1e-10);
    Ok(r)
}

fn example2(tol: &ToleranceConfig) -> Result<DemoReport> {
    let mut r = DemoReport::new("example2: a full-rank measurement operator");
    let m = example2_full_rank();
    r.line(format!("measurement: {m}"));
    r.line("stationary random controls, starting from a seeded full-rank state:");
    let law = FeedbackLaw::Stationary(vec![haar_random_unitary(2, 11), haar_random_unitary(2, 12)]);
    let rho0 = random_density(2, 2, 2)?;
    let states = run_averaged(&rho0, &m, &law, 20, tol)?;
    r.line(format!("{:>6} {:>16}", "step", "min eigenvalue"));
    let mut min = f64::INFINITY;
    for (t, s) in states.iter().enumerate() {
        let e = s.min_eigenvalue();
        min = min.min(e);
        r.line(format!("{t:>6} {e:>16.6e}"));
    }
    r.check("min eigenvalue stays positive for 20 steps", min > 0.0);
    Ok(r)
}

fn unitality_residual(m: &Measurement, controls: &[ComplexMatrix]) -> f64 {
    let n = m.dim();
    let sum = m
        .operators()
        .iter()
        .zip(controls)
        .fold(ComplexMatrix::zeros(n, n), |acc, (op, u)| {
            let k = u * op;
            acc + &k * k.adjoint()
        });
    matops::max_abs_diff(&sum, &matops::identity(n))
}

fn example3(tol: &ToleranceConfig) -> Result<DemoReport> {
    let mut r = DemoReport::new("example3: unital versus non-unital two-outcome measurements");
    let unital = example3_unitary_pair(EXAMPLE3_P);
    let nonunital = example3_nonunital(EXAMPLE3_A);
    r.line(format!("M = {unital}"));
    r.line(format!("N = {nonunital}"));
    r.line("unitality residual max |sum_k U_k M_k M_k^dag U_k^dag - I| under seeded stationary controls:");
    r.line(format!("{:>6} {:>14} {:>14}", "seed", "M", "N"));
    let mut worst_m = 0.0f64;
    for seed in 0..20u64 {
        let controls = vec![haar_random_unitary(2, 2 * seed), haar_random_unitary(2, 2 * seed + 1)];
        let rm = unitality_residual(&unital, &controls);
        let rn = unitality_residual(&nonunital, &controls);
        worst_m = worst_m.max(rm);
        r.line(format!("{seed:>6} {rm:>14.3e} {rn:>14.3e}"));
    }
    r.check("M stays unital for all 20 control pairs (residual <= 1e-10)", worst_m <= 1e-10);
    let ids = vec![matops::identity(2); 2];
    let rn = unitality_residual(&nonunital, &ids);
    r.line(format!("without controls: M {:.3e}, N {rn:.3e}", unitality_residual(&unital, &ids)));
    r.check("N is not unital (residual > 0.1)", rn > 0.1);

    r.line("");
    r.line("canonical factors:");
    for (name, m) in [("M", &unital), ("N", &nonunital)] {
        for (k, op) in m.operators().iter().enumerate() {
            let f = canonical_form(op, tol)?;
            let entries: Vec<String> = f.iter().map(|z| format!("{:.4}", z.re)).collect();
            r.line(format!("  {name}{} -> R (column-major) [{}]", k + 1, entries.join(", ")));
        }
    }
    let sim = can_simulate(&nonunital, &unital, tol)?;
    r.line(format!(
        "N from M by outcome-dependent unitaries: {}",
        if sim.is_some() { "possible" } else { "impossible" }
    ));
    r.check("canonical factors differ, so N cannot be enacted from M", sim.is_none());
    Ok(r)
}
