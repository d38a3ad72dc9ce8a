//! Irreducibility checks and invariant measures of finite intensity
//! matrices.
//!
//! With the zero-diagonal convention an invariant measure solves
//! `π^T Q = π^T Δ`, where `Δ` is the diagonal of row sums. Dimensions here
//! are tiny (a few hundred states at most), so a dense direct solve with the
//! normalization row substituted in is unconditionally adequate.

use nalgebra::{DMatrix, DVector};

use crate::ctmc::{IntensityMatrix, StateIndex};
use crate::error::{Error, Result};

/// Probability weights over the full state enumeration; entries outside the
/// support used to compute them are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    weights: Vec<f64>,
}

impl ProbabilityVector {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, i: StateIndex) -> f64 {
        self.weights[i]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn reachable(q: &IntensityMatrix, support: &[StateIndex], from: usize, reverse: bool) -> Vec<bool> {
    // DFS over the support-restricted digraph with edges where Q > 0.
    let mut seen = vec![false; support.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(i) = stack.pop() {
        for (j, &sj) in support.iter().enumerate() {
            if seen[j] {
                continue;
            }
            let si = support[i];
            let rate = if reverse { q.rate(sj, si) } else { q.rate(si, sj) };
            if rate > 0.0 {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

/// True iff the digraph on `support` with edges `{i→j : Q[i][j] > 0}` is
/// strongly connected. A singleton support is trivially irreducible.
pub fn is_irreducible(q: &IntensityMatrix, support: &[StateIndex]) -> bool {
    if support.is_empty() {
        return false;
    }
    reachable(q, support, 0, false).iter().all(|&b| b)
        && reachable(q, support, 0, true).iter().all(|&b| b)
}

/// Residual tolerance of the stationary solve, checked on every output.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-12;

/// The unique invariant measure of `q` restricted to `support`, returned
/// over the full space with zeros off the support.
///
/// Solves `(Q - Δ)^T π = 0` on the support with one equation replaced by the
/// normalization `Σ π = 1`, then verifies `‖π^T (Q - Δ)‖_∞` against
/// [`STATIONARY_RESIDUAL_TOL`].
pub fn invariant_measure(q: &IntensityMatrix, support: &[StateIndex]) -> Result<ProbabilityVector> {
    if !is_irreducible(q, support) {
        return Err(Error::NotIrreducible { block: format!("support {support:?}") });
    }
    let k = support.len();
    // A = (Q - Δ)^T restricted to the support, with the last row replaced by
    // the normalization.
    let mut a = DMatrix::<f64>::zeros(k, k);
    for (col, &sj) in support.iter().enumerate() {
        let exit: f64 = support.iter().map(|&t| q.rate(sj, t)).sum();
        for (row, &si) in support.iter().enumerate() {
            let v = if si == sj { -exit } else { q.rate(sj, si) };
            a[(row, col)] = v;
        }
    }
    for col in 0..k {
        a[(k - 1, col)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(k);
    b[k - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or(Error::SingularSystem { residual: f64::INFINITY })?;

    let mut weights = vec![0.0; q.dim()];
    for (i, &s) in support.iter().enumerate() {
        weights[s] = pi[i].max(0.0);
    }
    // Roundoff guard: renormalize the clamped vector.
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }

    let residual = stationary_residual(q, support, &weights);
    if residual > STATIONARY_RESIDUAL_TOL {
        return Err(Error::SingularSystem { residual });
    }
    Ok(ProbabilityVector { weights })
}

/// `‖π^T (Q - Δ)‖_∞` over the support: the defining property of an
/// invariant measure, usable as an independent replay check.
pub fn stationary_residual(q: &IntensityMatrix, support: &[StateIndex], weights: &[f64]) -> f64 {
    support
        .iter()
        .map(|&j| {
            let inflow: f64 = support.iter().map(|&i| weights[i] * q.rate(i, j)).sum();
            let exit: f64 = support.iter().map(|&t| q.rate(j, t)).sum();
            (inflow - weights[j] * exit).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::{simulate, RngStream};

    #[test]
    fn tridiagonal_full_support_is_irreducible() {
        let q = IntensityMatrix::tridiagonal(5, 1.0).unwrap();
        assert!(is_irreducible(&q, &[0, 1, 2, 3, 4]));
    }

    #[test]
    fn zero_matrix_is_reducible() {
        let q = IntensityMatrix::new(3, vec![0.0; 9]).unwrap();
        assert!(!is_irreducible(&q, &[0, 1]));
        assert!(is_irreducible(&q, &[1]), "singletons are trivially irreducible");
    }

    #[test]
    fn one_way_chain_is_reducible() {
        let q = IntensityMatrix::from_triplets(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert!(!is_irreducible(&q, &[0, 1, 2]));
    }

    #[test]
    fn spin_exchange_classes() {
        // Internal spin dynamics couples only the two single-excitation
        // words; the full four-word space is reducible, the middle class is
        // not.
        let q = IntensityMatrix::from_triplets(4, &[(1, 2, 10.0), (2, 1, 1.0)]).unwrap();
        assert!(is_irreducible(&q, &[1, 2]));
        assert!(!is_irreducible(&q, &[0, 1, 2, 3]));
    }

    #[test]
    fn uniform_measure_on_equal_rate_chain() {
        let q = IntensityMatrix::tridiagonal(5, 1.0).unwrap();
        let pi = invariant_measure(&q, &[0, 1, 2, 3, 4]).unwrap();
        for &w in pi.weights() {
            assert!((w - 0.2).abs() < 1e-14, "weights {:?}", pi.weights());
        }
    }

    #[test]
    fn two_state_balance() {
        // Rates 1<->2 of 10 and 1: balance gives π = (1/11, 10/11).
        let q = IntensityMatrix::from_triplets(4, &[(1, 2, 10.0), (2, 1, 1.0)]).unwrap();
        let pi = invariant_measure(&q, &[1, 2]).unwrap();
        assert!((pi.get(1) - 1.0 / 11.0).abs() < 1e-14);
        assert!((pi.get(2) - 10.0 / 11.0).abs() < 1e-14);
        assert_eq!(pi.get(0), 0.0);
        assert_eq!(pi.get(3), 0.0);
    }

    #[test]
    fn output_satisfies_defining_system() {
        let q = IntensityMatrix::from_triplets(
            3,
            &[(0, 1, 0.3), (1, 0, 2.0), (1, 2, 0.7), (2, 0, 1.1)],
        )
        .unwrap();
        let support = [0, 1, 2];
        let pi = invariant_measure(&q, &support).unwrap();
        assert!(stationary_residual(&q, &support, pi.weights()) < 1e-12);
        let sum: f64 = pi.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reducible_support_is_rejected() {
        let q = IntensityMatrix::from_triplets(2, &[(0, 1, 1.0)]).unwrap();
        let err = invariant_measure(&q, &[0, 1]).unwrap_err();
        assert!(matches!(err, Error::NotIrreducible { .. }));
    }

    #[test]
    fn occupation_matches_measure_on_long_run() {
        // Horizon-1e5 path of the 5-state equal-rate chain: occupation
        // fractions match the invariant measure within 0.02 per entry.
        let q = IntensityMatrix::tridiagonal(5, 1.0).unwrap();
        let support = [0, 1, 2, 3, 4];
        let pi = invariant_measure(&q, &support).unwrap();
        let tr = simulate(&q, 0, 1e5, &mut RngStream::new(33, 0), 10_000_000).unwrap();
        let occ = tr.occupation_fractions(5);
        for s in support {
            assert!((occ[s] - pi.get(s)).abs() < 0.02, "state {s}: {} vs {}", occ[s], pi.get(s));
        }
    }
}
