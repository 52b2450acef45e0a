//! Canonical QR decomposition with respect to left multiplication by unitaries.
//!
//! For a square `A`, [`canonical_qr`] produces `A = Q R` where `R` satisfies
//!
//! * `R[i][j] = 0` whenever `i >= rank(A[:, ..=j])` (0-based rows), and
//! * the first nonzero entry of every nonzero row is real and strictly positive.
//!
//! Such an `R` is determined by the Gram matrix `A†A` alone, so it is a
//! complete invariant of the orbit `{U A : U unitary}`. Two Kraus operators are
//! interchangeable under feedback exactly when their canonical factors agree.
//!
//! The factorization is a column-by-column Gram–Schmidt. A column whose residual
//! after projection is at most `rank_tol` adds no new direction: its `R` column
//! holds only the projection coefficients. An accepted column's pivot entry is
//! the residual norm itself, which is already real and positive, so no separate
//! phase fix-up is needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matops::{
    ensure_same_shape, ensure_square, max_abs_diff, orthonormal_completion, real, serde_matrix,
    ComplexMatrix, ComplexVector, ToleranceConfig,
};
use crate::quantum::Measurement;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CanonicalQR {
    #[serde(with = "serde_matrix")]
    pub q: ComplexMatrix,
    #[serde(with = "serde_matrix")]
    pub r: ComplexMatrix,
    /// `column_ranks[j]` is the rank of the first `j + 1` columns of the input.
    pub column_ranks: Vec<usize>,
}

impl CanonicalQR {
    pub fn rank(&self) -> usize {
        self.column_ranks.last().copied().unwrap_or(0)
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        &self.q * &self.r
    }
}

pub fn canonical_qr(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<CanonicalQR> {
    let n = ensure_square(a)?;
    let mut r = ComplexMatrix::zeros(n, n);
    let mut accepted: Vec<ComplexVector> = Vec::with_capacity(n);
    let mut column_ranks = Vec::with_capacity(n);

    for j in 0..n {
        let mut v = a.column(j).into_owned();
        // two passes of modified Gram-Schmidt keep Q orthonormal to working precision
        for _ in 0..2 {
            for (i, q) in accepted.iter().enumerate() {
                let coeff = q.dotc(&v);
                v -= q * coeff;
                r[(i, j)] += coeff;
            }
        }
        let norm = v.norm();
        if norm > tol.rank_tol {
            r[(accepted.len(), j)] = real(norm);
            accepted.push(v.unscale(norm));
        }
        column_ranks.push(accepted.len());
    }

    let q = orthonormal_completion(&accepted, n);
    Ok(CanonicalQR { q, r, column_ranks })
}

/// The canonical `R` factor, written `F(A)`.
pub fn canonical_form(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
    Ok(canonical_qr(a, tol)?.r)
}

/// Outcome of comparing two canonical factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Equivalence {
    Equal,
    Distinct,
    /// Distance in `(eq_tol, 10·eq_tol]`: reported as not equivalent.
    Borderline,
}

impl Equivalence {
    pub fn is_equal(self) -> bool {
        self == Equivalence::Equal
    }
}

pub fn compare_canonical(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    tol: &ToleranceConfig,
) -> Result<(Equivalence, f64)> {
    ensure_square(a)?;
    ensure_same_shape(a, b)?;
    let dist = max_abs_diff(&canonical_form(a, tol)?, &canonical_form(b, tol)?);
    let verdict = if dist <= tol.eq_tol {
        Equivalence::Equal
    } else if dist <= 10.0 * tol.eq_tol {
        Equivalence::Borderline
    } else {
        Equivalence::Distinct
    };
    Ok((verdict, dist))
}

/// True iff `B = U A` for some unitary `U`.
pub fn unitarily_equivalent(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    tol: &ToleranceConfig,
) -> Result<bool> {
    Ok(compare_canonical(a, b, tol)?.0.is_equal())
}

/// A reordering that lets one measurement simulate another under feedback,
/// together with the witnessing controls.
#[derive(Debug, Clone)]
pub struct Simulation {
    /// `assignment[k] = j` means target outcome `k` is produced from base outcome `j`.
    pub assignment: Vec<usize>,
    /// `controls[k]` satisfies `controls[k] · base[assignment[k]] = target[k]`.
    pub controls: Vec<ComplexMatrix>,
}

/// Decides whether `target` can be enacted from `base` by outcome-dependent
/// unitaries, i.e. whether canonical factors match under some reordering.
///
/// The shorter operator list is padded with zero operators first.
pub fn can_simulate(
    target: &Measurement,
    base: &Measurement,
    tol: &ToleranceConfig,
) -> Result<Option<Simulation>> {
    if target.dim() != base.dim() {
        return Err(Error::Dimension(format!(
            "target acts on dimension {}, base on {}",
            target.dim(),
            base.dim()
        )));
    }
    let n = target.dim();
    let m = target.len().max(base.len());
    let pad = |ops: &[ComplexMatrix]| -> Vec<ComplexMatrix> {
        let mut v = ops.to_vec();
        v.resize(m, ComplexMatrix::zeros(n, n));
        v
    };
    let targets = pad(target.operators());
    let bases = pad(base.operators());

    let tq: Vec<CanonicalQR> = targets
        .iter()
        .map(|a| canonical_qr(a, tol))
        .collect::<Result<_>>()?;
    let bq: Vec<CanonicalQR> = bases
        .iter()
        .map(|a| canonical_qr(a, tol))
        .collect::<Result<_>>()?;

    let compatible: Vec<Vec<bool>> = tq
        .iter()
        .map(|t| bq.iter().map(|b| max_abs_diff(&t.r, &b.r) <= tol.eq_tol).collect())
        .collect();

    let Some(assignment) = perfect_matching(&compatible) else {
        return Ok(None);
    };
    let controls = assignment
        .iter()
        .enumerate()
        .map(|(k, &j)| &tq[k].q * bq[j].q.adjoint())
        .collect();
    Ok(Some(Simulation {
        assignment,
        controls,
    }))
}

/// Lexicographically first perfect matching by depth-first search.
fn perfect_matching(compatible: &[Vec<bool>]) -> Option<Vec<usize>> {
    fn extend(row: usize, compatible: &[Vec<bool>], used: &mut [bool], out: &mut Vec<usize>) -> bool {
        if row == compatible.len() {
            return true;
        }
        for j in 0..used.len() {
            if compatible[row][j] && !used[j] {
                used[j] = true;
                out.push(j);
                if extend(row + 1, compatible, used, out) {
                    return true;
                }
                out.pop();
                used[j] = false;
            }
        }
        false
    }
    let mut used = vec![false; compatible.len()];
    let mut out = Vec::with_capacity(compatible.len());
    extend(0, compatible, &mut used, &mut out).then_some(out)
}
