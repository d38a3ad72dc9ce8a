//! Two interacting particles of `k` spins each. Internal dynamics conserve
//! each particle's energy; the coupling exchanges energy between the
//! particles while conserving the total. The slow observable is the first
//! particle's energy.
//!
//! Spin words are integers `0..2^k` (bit `j` = spin `j+1`); pair states are
//! enumerated as `(x, z) ↦ x·2^k + z`. The simulated generator is the
//! time-rescaled one: internal rates at `1/ε`, couplings at order one.

use crate::ctmc::{IntensityMatrix, StateIndex};
use crate::error::{Error, Result};
use crate::models::CouplingMatrix;
use crate::stationary::is_irreducible;

#[derive(Debug, Clone)]
pub struct EnergyModel {
    k: u32,
    energies: Vec<f64>,
    q: IntensityMatrix,
    c: CouplingMatrix,
    epsilon: f64,
    energy_tol: f64,
    levels: Vec<f64>,
    generator: IntensityMatrix,
}

/// Energy of each spin word under the default functional: the number of up
/// spins.
pub fn spin_sum_energies(k: u32) -> Vec<f64> {
    (0u32..1 << k).map(|w| w.count_ones() as f64).collect()
}

/// Assemble the pair-state generator from a per-particle internal block `q`
/// (dimension `2^k`) and a coupling `c` over pair states (dimension `4^k`).
///
/// Construction checks, entry by entry, that `q` conserves single-particle
/// energy and that `c` conserves total energy while strictly changing the
/// first particle's energy. Energies are compared exactly when
/// `energy_tol = 0` (the right choice for integer-valued functionals).
pub fn build_energy(
    k: u32,
    energies: Vec<f64>,
    q: IntensityMatrix,
    c: CouplingMatrix,
    epsilon: f64,
    energy_tol: f64,
) -> Result<EnergyModel> {
    let words = 1usize << k;
    if energies.len() != words {
        return Err(Error::BadDimension(format!(
            "expected {words} energies for k={k}, got {}",
            energies.len()
        )));
    }
    if q.dim() != words {
        return Err(Error::BadDimension(format!(
            "internal block must be {words}x{words}, got {}",
            q.dim()
        )));
    }
    if c.dim() != words * words {
        return Err(Error::BadDimension(format!(
            "coupling must cover {} pair states, got {}",
            words * words,
            c.dim()
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(energy_tol >= 0.0) {
        return Err(Error::InvalidConfig(format!("energy_tol must be >= 0, got {energy_tol}")));
    }
    let eq = |a: f64, b: f64| (a - b).abs() <= energy_tol;

    for x in 0..words {
        for y in 0..words {
            if q.rate(x, y) > 0.0 && !eq(energies[x], energies[y]) {
                return Err(Error::EnergyNotConserved {
                    from_x: x,
                    from_z: x,
                    to_x: y,
                    to_z: y,
                    rate: q.rate(x, y),
                });
            }
        }
    }
    for x in 0..words {
        for z in 0..words {
            let from = x * words + z;
            for x2 in 0..words {
                for z2 in 0..words {
                    let rate = c.rate(from, x2 * words + z2);
                    if rate == 0.0 {
                        continue;
                    }
                    let total_kept =
                        eq(energies[x] + energies[z], energies[x2] + energies[z2]);
                    let first_changed = !eq(energies[x], energies[x2]);
                    if !total_kept || !first_changed {
                        return Err(Error::EnergyNotConserved {
                            from_x: x,
                            from_z: z,
                            to_x: x2,
                            to_z: z2,
                            rate,
                        });
                    }
                }
            }
        }
    }

    let mut levels: Vec<f64> = Vec::new();
    for &e in &energies {
        if !levels.iter().any(|&l| eq(l, e)) {
            levels.push(e);
        }
    }
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for &level in &levels {
        let class: Vec<usize> =
            (0..words).filter(|&w| eq(energies[w], level)).collect();
        if class.len() >= 2 && !is_irreducible(&q, &class) {
            return Err(Error::NotIrreducible {
                block: format!("internal dynamics on energy class {level}"),
            });
        }
    }

    // Pair generator: 1/ε-sped internal moves of either particle plus the
    // order-one coupling. The two parts never overlap (internal moves keep
    // the first-particle energy, couplings must change it).
    let dim = words * words;
    let inv_eps = 1.0 / epsilon;
    let mut rates = vec![0.0; dim * dim];
    for x in 0..words {
        for z in 0..words {
            let from = x * words + z;
            for y in 0..words {
                let rx = q.rate(x, y);
                if rx > 0.0 {
                    rates[from * dim + (y * words + z)] += rx * inv_eps;
                }
                let rz = q.rate(z, y);
                if rz > 0.0 {
                    rates[from * dim + (x * words + y)] += rz * inv_eps;
                }
            }
            for (to, &r) in c.row(from).iter().enumerate() {
                if r > 0.0 {
                    rates[from * dim + to] += r;
                }
            }
        }
    }
    let generator = IntensityMatrix::new(dim, rates)?;
    Ok(EnergyModel { k, energies, q, c, epsilon, energy_tol, levels, generator })
}

/// The two-spin exchange system: internal swap rates 10 and 1 between the
/// single-excitation words, coupling rate 1 out of first-particle word 2
/// (1-based) and 0.2 out of every other word, wherever total energy is
/// conserved and the first particle's energy changes.
pub fn build_paper_energy(epsilon: f64) -> Result<EnergyModel> {
    let k = 2u32;
    let words = 1usize << k;
    let energies = spin_sum_energies(k);
    let q = IntensityMatrix::from_triplets(words, &[(1, 2, 10.0), (2, 1, 1.0)])?;

    let mut triplets = Vec::new();
    for x in 0..words {
        for z in 0..words {
            for x2 in 0..words {
                for z2 in 0..words {
                    let conserves = energies[x] + energies[z] == energies[x2] + energies[z2];
                    let changes_first = energies[x] != energies[x2];
                    if conserves && changes_first {
                        let rate = if x == 1 { 1.0 } else { 0.2 };
                        triplets.push((x * words + z, x2 * words + z2, rate));
                    }
                }
            }
        }
    }
    let c = CouplingMatrix::from_triplets(words * words, &triplets)?;
    build_energy(k, energies, q, c, epsilon, 0.0)
}

impl EnergyModel {
    pub fn k(&self) -> u32 {
        self.k
    }

    /// Number of spin words per particle, `2^k`.
    pub fn word_count(&self) -> usize {
        1 << self.k
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn q(&self) -> &IntensityMatrix {
        &self.q
    }

    pub fn c(&self) -> &CouplingMatrix {
        &self.c
    }

    pub fn energy_tol(&self) -> f64 {
        self.energy_tol
    }

    /// Distinct energies, ascending.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn energy_of_word(&self, word: usize) -> f64 {
        self.energies[word]
    }

    /// Spin words whose energy matches `level` (within the model tolerance).
    pub fn class(&self, level: f64) -> Vec<usize> {
        (0..self.word_count())
            .filter(|&w| (self.energies[w] - level).abs() <= self.energy_tol)
            .collect()
    }

    /// The assembled pair-state intensity matrix.
    pub fn generator(&self) -> &IntensityMatrix {
        &self.generator
    }

    pub fn at_epsilon(&self, epsilon: f64) -> Result<Self> {
        build_energy(
            self.k,
            self.energies.clone(),
            self.q.clone(),
            self.c.clone(),
            epsilon,
            self.energy_tol,
        )
    }

    #[inline]
    pub fn pair_index(&self, x: usize, z: usize) -> StateIndex {
        x * self.word_count() + z
    }

    #[inline]
    pub fn decode(&self, state: StateIndex) -> (usize, usize) {
        (state / self.word_count(), state % self.word_count())
    }

    /// Energy of the first particle: the slow observable.
    #[inline]
    pub fn first_energy(&self, state: StateIndex) -> f64 {
        self.energies[state / self.word_count()]
    }

    #[inline]
    pub fn total_energy(&self, state: StateIndex) -> f64 {
        let (x, z) = self.decode(state);
        self.energies[x] + self.energies[z]
    }
}
