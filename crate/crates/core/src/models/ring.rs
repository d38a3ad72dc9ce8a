//! Infinitely many identical macro-states indexed by the integers, with
//! nearest-neighbour macro transitions. The lattice cannot be truncated
//! without bias, so no global matrix is ever assembled: the state index is a
//! bijection `(x, z) ↦ fold(z)·m + x` with `fold` the usual interleaving of
//! ℤ onto the nonnegative integers, and rate rows are computed on demand
//! from per-micro templates (translation invariance in `z`).

use crate::ctmc::{IntensityMatrix, JumpKernel, StateIndex};
use crate::error::{Error, Result};
use crate::models::CouplingMatrix;
use crate::stationary::is_irreducible;

#[inline]
pub(crate) fn fold(z: i64) -> usize {
    if z >= 0 {
        2 * z as usize
    } else {
        (-2 * z - 1) as usize
    }
}

#[inline]
pub(crate) fn unfold(u: usize) -> i64 {
    if u % 2 == 0 {
        (u / 2) as i64
    } else {
        -((u as i64 + 1) / 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Step {
    micro_to: usize,
    dz: i8,
    rate: f64,
}

#[derive(Debug, Clone)]
pub struct RingModel {
    m: usize,
    q: IntensityMatrix,
    cl: CouplingMatrix,
    cr: CouplingMatrix,
    epsilon: f64,
    /// Outgoing transitions per micro-state, identical for every `z`.
    templates: Vec<Vec<Step>>,
    exit: Vec<f64>,
}

/// Internal block `q` (irreducible) plus couplings `cr` to the right
/// neighbour macro and `cl` to the left.
pub fn build_ring(
    q: IntensityMatrix,
    cl: CouplingMatrix,
    cr: CouplingMatrix,
    epsilon: f64,
) -> Result<RingModel> {
    let m = q.dim();
    if cl.dim() != m || cr.dim() != m {
        return Err(Error::BadDimension(format!(
            "block dims differ: q {m}, cl {}, cr {}",
            cl.dim(),
            cr.dim()
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
    }
    let full: Vec<usize> = (0..m).collect();
    if !is_irreducible(&q, &full) {
        return Err(Error::NotIrreducible { block: "Q".into() });
    }

    let inv_eps = 1.0 / epsilon;
    let mut templates = Vec::with_capacity(m);
    let mut exit = Vec::with_capacity(m);
    for x in 0..m {
        let mut steps = Vec::new();
        for y in 0..m {
            let r = q.rate(x, y) * inv_eps;
            if r > 0.0 {
                steps.push(Step { micro_to: y, dz: 0, rate: r });
            }
        }
        for y in 0..m {
            let r = cl.rate(x, y);
            if r > 0.0 {
                steps.push(Step { micro_to: y, dz: -1, rate: r });
            }
        }
        for y in 0..m {
            let r = cr.rate(x, y);
            if r > 0.0 {
                steps.push(Step { micro_to: y, dz: 1, rate: r });
            }
        }
        // Summed in template order so the cached exit rate matches the
        // selection scan bit for bit.
        exit.push(steps.iter().map(|s| s.rate).sum());
        templates.push(steps);
    }
    Ok(RingModel { m, q, cl, cr, epsilon, templates, exit })
}

impl RingModel {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn q(&self) -> &IntensityMatrix {
        &self.q
    }

    pub fn cl(&self) -> &CouplingMatrix {
        &self.cl
    }

    pub fn cr(&self) -> &CouplingMatrix {
        &self.cr
    }

    pub fn at_epsilon(&self, epsilon: f64) -> Result<Self> {
        build_ring(self.q.clone(), self.cl.clone(), self.cr.clone(), epsilon)
    }

    #[inline]
    pub fn index(&self, x: usize, z: i64) -> StateIndex {
        fold(z) * self.m + x
    }

    #[inline]
    pub fn decode(&self, state: StateIndex) -> (usize, i64) {
        (state % self.m, unfold(state / self.m))
    }
}

impl JumpKernel for RingModel {
    #[inline]
    fn exit_rate(&self, state: StateIndex) -> f64 {
        self.exit[state % self.m]
    }

    fn transitions(&self, state: StateIndex, out: &mut Vec<(StateIndex, f64)>) {
        let (x, z) = self.decode(state);
        out.clear();
        out.extend(
            self.templates[x]
                .iter()
                .map(|s| (self.index(s.micro_to, z + s.dz as i64), s.rate)),
        );
    }
}
