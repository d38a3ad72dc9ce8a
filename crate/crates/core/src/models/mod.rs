//! The three fast/slow model families, assembled into simulable generators
//! over an enumerated product state space.
//!
//! Each model owns a bijection between flat [`StateIndex`] values and its
//! structured states, plus the slow observable that the limit dynamics and
//! the validation harness track.

mod energy;
mod file;
mod presets;
pub(crate) mod ring;
mod two_macro;

pub use energy::{build_energy, build_paper_energy, spin_sum_energies, EnergyModel};
pub use file::{load_model_file, parse_model_toml};
pub use presets::{energy_s43, preset_model, ring_s32, two_macro_s23, PRESET_NAMES};
pub use ring::{build_ring, RingModel};
pub use two_macro::{build_paper_two_macro, build_two_macro, TwoMacroModel};

use crate::ctmc::{IntensityMatrix, JumpKernel, StateIndex};
use crate::error::{Error, Result};

/// Nonnegative rate block coupling two copies of a micro space. Unlike an
/// intensity matrix the diagonal may be populated: a coupling jump may keep
/// the micro-state while switching the slow coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    dim: usize,
    rates: Vec<f64>,
    row_sums: Vec<f64>,
}

impl CouplingMatrix {
    pub fn new(dim: usize, rates: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::BadDimension("coupling matrix must be nonempty".into()));
        }
        if rates.len() != dim * dim {
            return Err(Error::BadDimension(format!(
                "expected {} entries for a {dim}x{dim} coupling matrix, got {}",
                dim * dim,
                rates.len()
            )));
        }
        for i in 0..dim {
            for j in 0..dim {
                let v = rates[i * dim + j];
                if !v.is_finite() {
                    return Err(Error::NonFiniteRate { row: i, col: j });
                }
                if v < 0.0 {
                    return Err(Error::NegativeRate { row: i, col: j, value: v });
                }
            }
        }
        let row_sums = (0..dim)
            .map(|i| rates[i * dim..(i + 1) * dim].iter().sum())
            .collect();
        Ok(Self { dim, rates, row_sums })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::BadDimension(format!(
                    "row {i} has length {}, expected {dim}",
                    r.len()
                )));
            }
        }
        Self::new(dim, rows.concat())
    }

    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rates = vec![0.0; dim * dim];
        for &(i, j, v) in triplets {
            if i >= dim || j >= dim {
                return Err(Error::BadDimension(format!(
                    "triplet ({i}, {j}) out of bounds for dim {dim}"
                )));
            }
            rates[i * dim + j] += v;
        }
        Self::new(dim, rates)
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, rates: vec![0.0; dim * dim], row_sums: vec![0.0; dim] }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[i * self.dim + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rates[i * self.dim..(i + 1) * self.dim]
    }

    /// Total coupling rate out of micro-state `i`.
    #[inline]
    pub fn row_sum(&self, i: usize) -> f64 {
        self.row_sums[i]
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.dim, self.rates.iter().map(|r| r * s).collect())
    }
}

/// A labeled two-scale model: one of the three families plus its state
/// enumeration and slow observable.
#[derive(Debug, Clone)]
pub struct MultiscaleModel {
    name: String,
    kind: ModelKind,
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    TwoMacro(TwoMacroModel),
    Ring(RingModel),
    Energy(EnergyModel),
}

impl MultiscaleModel {
    pub fn new(name: impl Into<String>, kind: ModelKind) -> Self {
        Self { name: name.into(), kind }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn epsilon(&self) -> f64 {
        match &self.kind {
            ModelKind::TwoMacro(m) => m.epsilon(),
            ModelKind::Ring(m) => m.epsilon(),
            ModelKind::Energy(m) => m.epsilon(),
        }
    }

    /// Same model family and parameters at a different time-scale ratio.
    pub fn at_epsilon(&self, epsilon: f64) -> Result<Self> {
        let kind = match &self.kind {
            ModelKind::TwoMacro(m) => ModelKind::TwoMacro(m.at_epsilon(epsilon)?),
            ModelKind::Ring(m) => ModelKind::Ring(m.at_epsilon(epsilon)?),
            ModelKind::Energy(m) => ModelKind::Energy(m.at_epsilon(epsilon)?),
        };
        Ok(Self { name: self.name.clone(), kind })
    }

    /// Number of enumerated states; `None` for the unbounded macro lattice.
    pub fn state_count(&self) -> Option<usize> {
        match &self.kind {
            ModelKind::TwoMacro(m) => Some(m.generator().dim()),
            ModelKind::Ring(_) => None,
            ModelKind::Energy(m) => Some(m.generator().dim()),
        }
    }

    /// The slow observable: the macro label for the landscape models, the
    /// first-particle energy for the exchange model.
    pub fn slow_observable(&self, state: StateIndex) -> f64 {
        match &self.kind {
            ModelKind::TwoMacro(m) => m.macro_of(state) as f64,
            ModelKind::Ring(m) => m.decode(state).1 as f64,
            ModelKind::Energy(m) => m.first_energy(state),
        }
    }

    /// Human-readable decoding of a state, e.g. `(3,0)`.
    pub fn label(&self, state: StateIndex) -> String {
        match &self.kind {
            ModelKind::TwoMacro(m) => {
                let (x, z) = m.decode(state);
                format!("({x},{z})")
            }
            ModelKind::Ring(m) => {
                let (x, z) = m.decode(state);
                format!("({x},{z})")
            }
            ModelKind::Energy(m) => {
                let (x, z) = m.decode(state);
                // 1-based spin-word labels.
                format!("({},{})", x + 1, z + 1)
            }
        }
    }

    /// Rate data for the simulator.
    pub fn kernel(&self) -> ModelKernel<'_> {
        match &self.kind {
            ModelKind::TwoMacro(m) => ModelKernel::Matrix(m.generator()),
            ModelKind::Ring(m) => ModelKernel::Ring(m),
            ModelKind::Energy(m) => ModelKernel::Matrix(m.generator()),
        }
    }

    /// Default starting state: micro 0 in macro 0, or the single-excitation
    /// first particle next to a ground-state partner.
    pub fn default_initial(&self) -> StateIndex {
        match &self.kind {
            ModelKind::TwoMacro(m) => m.index(0, 0),
            ModelKind::Ring(m) => m.index(0, 0),
            ModelKind::Energy(m) => m.pair_index(1, 0),
        }
    }

    /// Resolve a `(a, b)` pair from user input into a state index. Landscape
    /// models read `(micro, macro)` with 0-based micros; the energy model
    /// reads 1-based spin-word labels for both particles.
    pub fn state_from_pair(&self, a: i64, b: i64) -> Result<StateIndex> {
        let bad = |msg: String| Error::InvalidConfig(msg);
        match &self.kind {
            ModelKind::TwoMacro(m) => {
                let m_dim = m.m() as i64;
                if a < 0 || a >= m_dim || !(b == 0 || b == 1) {
                    return Err(bad(format!(
                        "start ({a},{b}) out of range: micro in 0..{m_dim}, macro in {{0,1}}"
                    )));
                }
                Ok(m.index(a as usize, b as u8))
            }
            ModelKind::Ring(m) => {
                let m_dim = m.m() as i64;
                if a < 0 || a >= m_dim {
                    return Err(bad(format!("start ({a},{b}): micro must be in 0..{m_dim}")));
                }
                Ok(m.index(a as usize, b))
            }
            ModelKind::Energy(m) => {
                let n = m.word_count() as i64;
                if a < 1 || a > n || b < 1 || b > n {
                    return Err(bad(format!(
                        "start ({a},{b}): spin-word labels are 1..={n}"
                    )));
                }
                Ok(m.pair_index((a - 1) as usize, (b - 1) as usize))
            }
        }
    }
}

/// Kernel view over a model: either a fully assembled finite matrix or the
/// translation-invariant lattice whose rows are computed on demand.
#[derive(Debug, Clone, Copy)]
pub enum ModelKernel<'a> {
    Matrix(&'a IntensityMatrix),
    Ring(&'a RingModel),
}

impl JumpKernel for ModelKernel<'_> {
    #[inline]
    fn exit_rate(&self, state: StateIndex) -> f64 {
        match self {
            ModelKernel::Matrix(m) => JumpKernel::exit_rate(*m, state),
            ModelKernel::Ring(r) => JumpKernel::exit_rate(*r, state),
        }
    }

    #[inline]
    fn transitions(&self, state: StateIndex, out: &mut Vec<(StateIndex, f64)>) {
        match self {
            ModelKernel::Matrix(m) => m.transitions(state, out),
            ModelKernel::Ring(r) => r.transitions(state, out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_allows_diagonal() {
        let c = CouplingMatrix::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_eq!(c.rate(0, 0), 0.5);
        assert_eq!(c.row_sum(0), 0.5);
    }

    #[test]
    fn coupling_rejects_negative() {
        let err = CouplingMatrix::from_rows(&[vec![0.0, -0.1], vec![0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::NegativeRate { .. }));
    }
}
