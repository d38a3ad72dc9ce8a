//! Two metastable macro-states, each holding `m` micro-states with fast
//! internal dynamics, coupled by slow cross-barrier jumps.
//!
//! State enumeration: `(x, z) ↦ z·m + x` with micro `x` in `0..m` and macro
//! `z` in `{0, 1}`. The assembled generator is the time-rescaled process,
//! internal rates sped up by `1/ε`, couplings left at order one.

use crate::ctmc::{IntensityMatrix, StateIndex};
use crate::error::{Error, Result};
use crate::models::CouplingMatrix;
use crate::stationary::is_irreducible;

#[derive(Debug, Clone)]
pub struct TwoMacroModel {
    m: usize,
    q0: IntensityMatrix,
    q1: IntensityMatrix,
    c01: CouplingMatrix,
    c10: CouplingMatrix,
    epsilon: f64,
    generator: IntensityMatrix,
}

/// Assemble the 2m-state generator from internal blocks `q0`, `q1` and
/// couplings `c01`, `c10`. Both internal blocks must be irreducible.
pub fn build_two_macro(
    q0: IntensityMatrix,
    q1: IntensityMatrix,
    c01: CouplingMatrix,
    c10: CouplingMatrix,
    epsilon: f64,
) -> Result<TwoMacroModel> {
    let m = q0.dim();
    if q1.dim() != m || c01.dim() != m || c10.dim() != m {
        return Err(Error::BadDimension(format!(
            "block dims differ: q0 {m}, q1 {}, c01 {}, c10 {}",
            q1.dim(),
            c01.dim(),
            c10.dim()
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
    }
    let full: Vec<usize> = (0..m).collect();
    if !is_irreducible(&q0, &full) {
        return Err(Error::NotIrreducible { block: "Q0".into() });
    }
    if !is_irreducible(&q1, &full) {
        return Err(Error::NotIrreducible { block: "Q1".into() });
    }

    let dim = 2 * m;
    let inv_eps = 1.0 / epsilon;
    let mut rates = vec![0.0; dim * dim];
    for x in 0..m {
        for y in 0..m {
            // Internal dynamics, sped up by 1/ε, within each macro block.
            rates[x * dim + y] = q0.rate(x, y) * inv_eps;
            rates[(m + x) * dim + (m + y)] = q1.rate(x, y) * inv_eps;
            // Order-one couplings across the barrier.
            rates[x * dim + (m + y)] = c01.rate(x, y);
            rates[(m + x) * dim + y] = c10.rate(x, y);
        }
    }
    let generator = IntensityMatrix::new(dim, rates)?;
    Ok(TwoMacroModel { m, q0, q1, c01, c10, epsilon, generator })
}

/// The symmetric nearest-neighbour landscape: `Q0 = Q1` tridiagonal with
/// rate `q`, couplings with a single entry `c` in each of the two corner
/// micro-states adjacent to the barrier.
pub fn build_paper_two_macro(m: usize, q: f64, c: f64, epsilon: f64) -> Result<TwoMacroModel> {
    if m < 2 {
        return Err(Error::BadDimension(format!("need at least 2 micro-states, got {m}")));
    }
    if q <= 0.0 || c <= 0.0 {
        return Err(Error::InvalidConfig(format!("rates must be positive: q={q}, c={c}")));
    }
    let internal = IntensityMatrix::tridiagonal(m, q)?;
    let coupling = CouplingMatrix::from_triplets(m, &[(0, m - 1, c), (m - 1, 0, c)])?;
    build_two_macro(internal.clone(), internal, coupling.clone(), coupling, epsilon)
}

impl TwoMacroModel {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn q0(&self) -> &IntensityMatrix {
        &self.q0
    }

    pub fn q1(&self) -> &IntensityMatrix {
        &self.q1
    }

    pub fn c01(&self) -> &CouplingMatrix {
        &self.c01
    }

    pub fn c10(&self) -> &CouplingMatrix {
        &self.c10
    }

    /// The assembled 2m-state intensity matrix.
    pub fn generator(&self) -> &IntensityMatrix {
        &self.generator
    }

    pub fn at_epsilon(&self, epsilon: f64) -> Result<Self> {
        build_two_macro(
            self.q0.clone(),
            self.q1.clone(),
            self.c01.clone(),
            self.c10.clone(),
            epsilon,
        )
    }

    #[inline]
    pub fn index(&self, x: usize, z: u8) -> StateIndex {
        z as usize * self.m + x
    }

    #[inline]
    pub fn decode(&self, state: StateIndex) -> (usize, u8) {
        ((state % self.m), (state / self.m) as u8)
    }

    #[inline]
    pub fn macro_of(&self, state: StateIndex) -> u8 {
        (state / self.m) as u8
    }

    /// Total coupling rate out of micro `x` when sitting in macro `z`.
    pub fn coupling_row_sum(&self, x: usize, z: u8) -> f64 {
        if z == 0 {
            self.c01.row_sum(x)
        } else {
            self.c10.row_sum(x)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_micro_state_reduces_to_two_state_chain() {
        let q = IntensityMatrix::new(1, vec![0.0]).unwrap();
        let c = CouplingMatrix::new(1, vec![0.4]).unwrap();
        let model = build_two_macro(q.clone(), q, c.clone(), c, 1.0).unwrap();
        let g = model.generator();
        assert_eq!(g.dim(), 2);
        assert_eq!(g.rate(0, 1), 0.4);
        assert_eq!(g.rate(1, 0), 0.4);
    }

    #[test]
    fn paper_landscape_entries() {
        // m=5, q=c=1: the barrier-adjacent micro couples across at rate 1
        // and to its internal neighbour at rate 1/ε.
        let model = build_paper_two_macro(5, 1.0, 1.0, 1.0).unwrap();
        let g = model.generator();
        assert_eq!(g.rate(model.index(0, 0), model.index(4, 1)), 1.0);
        assert_eq!(g.rate(model.index(0, 0), model.index(1, 0)), 1.0);

        let fast = build_paper_two_macro(5, 1.0, 1.0, 1e-3).unwrap();
        assert_eq!(fast.generator().rate(fast.index(0, 0), fast.index(1, 0)), 1000.0);
    }

    #[test]
    fn corner_coupling_has_two_entries() {
        let model = build_paper_two_macro(3, 1.0, 0.7, 1.0).unwrap();
        let nonzero: Vec<_> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .filter(|&(i, j)| model.c01().rate(i, j) > 0.0)
            .collect();
        assert_eq!(nonzero, vec![(0, 2), (2, 0)]);
        assert_eq!(model.c01().rate(0, 2), 0.7);
    }

    #[test]
    fn coupling_rows_live_on_the_barrier_only() {
        let model = build_paper_two_macro(20, 1.0, 1.0, 1.0).unwrap();
        for x in 0..20 {
            let expected = if x == 0 || x == 19 { 1.0 } else { 0.0 };
            assert_eq!(model.c01().row_sum(x), expected, "micro {x}");
        }
    }

    #[test]
    fn block_structure_is_exact() {
        // No rate joins the macro blocks except the couplings, and internal
        // rates equal the blocks scaled by 1/ε.
        let model = build_paper_two_macro(4, 1.3, 0.2, 0.1).unwrap();
        let g = model.generator();
        for x in 0..4 {
            for y in 0..4 {
                assert_eq!(g.rate(x, y), model.q0().rate(x, y) * 10.0);
                assert_eq!(g.rate(4 + x, 4 + y), model.q1().rate(x, y) * 10.0);
                assert_eq!(g.rate(x, 4 + y), model.c01().rate(x, y));
                assert_eq!(g.rate(4 + x, y), model.c10().rate(x, y));
            }
        }
    }

    #[test]
    fn reducible_internal_block_is_rejected() {
        let q = IntensityMatrix::from_triplets(2, &[(0, 1, 1.0)]).unwrap();
        let c = CouplingMatrix::zeros(2);
        let err = build_two_macro(q.clone(), q, c.clone(), c, 1.0).unwrap_err();
        assert_eq!(err, Error::NotIrreducible { block: "Q0".into() });
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let q2 = IntensityMatrix::tridiagonal(2, 1.0).unwrap();
        let q3 = IntensityMatrix::tridiagonal(3, 1.0).unwrap();
        let c = CouplingMatrix::zeros(2);
        let err = build_two_macro(q2, q3, c.clone(), c, 1.0).unwrap_err();
        assert!(matches!(err, Error::BadDimension(_)));
    }
}
