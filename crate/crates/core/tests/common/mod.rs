//! Helpers shared by the integration test targets.

use feedctl::matops::{self, identity, ComplexMatrix, I};
use nalgebra::{DMatrix, DVector};

/// Real coordinates of a complex matrix.
fn realify(a: &ComplexMatrix) -> DVector<f64> {
    DVector::from_iterator(2 * a.len(), a.iter().flat_map(|z| [z.re, z.im]))
}

fn real_rank(vectors: &[ComplexMatrix]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let cols: Vec<DVector<f64>> = vectors.iter().map(realify).collect();
    let m = DMatrix::from_columns(&cols);
    let sv = m.singular_values();
    let top = sv.max();
    sv.iter().filter(|&&s| s > 1e-9 * top.max(1.0)).count()
}

/// Brute force: keep adding every pairwise commutator of every element found
/// so far (not just of a basis) until the real rank stops growing.
pub fn lie_closure_oracle(gens: &[ComplexMatrix]) -> usize {
    let n = gens[0].nrows();
    let mut elems: Vec<ComplexMatrix> = gens
        .iter()
        .map(|h| {
            let x = h * (-I);
            let shift = matops::trace(&x) / n as f64;
            x - identity(n) * shift
        })
        .collect();
    let mut rank = real_rank(&elems);
    loop {
        let mut next = elems.clone();
        for a in &elems {
            for b in &elems {
                let br = a * b - b * a;
                if br.norm() > 1e-12 {
                    next.push(br);
                }
            }
        }
        // keep a maximal independent subset so the list stays small
        let mut kept: Vec<ComplexMatrix> = Vec::new();
        for x in next {
            kept.push(x);
            if real_rank(&kept) < kept.len() {
                kept.pop();
            }
        }
        let new_rank = real_rank(&kept);
        elems = kept;
        if new_rank == rank {
            return rank;
        }
        rank = new_rank;
    }
}
