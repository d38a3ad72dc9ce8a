use crate::error::{Error, Result};

/// Position of a state in a finite enumeration. Product spaces document
/// their own bijection to structured states (see the model types).
pub type StateIndex = usize;

/// Square nonnegative rate matrix with a zero diagonal: the generator data
/// of a finite jump process. The true generator is `Q - Δ` with `Δ` the
/// diagonal of row sums; we never store `Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMatrix {
    dim: usize,
    rates: Vec<f64>,
    exit: Vec<f64>,
}

impl IntensityMatrix {
    /// Build from a row-major rate vector of length `dim * dim`.
    pub fn new(dim: usize, rates: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::BadDimension("intensity matrix must be nonempty".into()));
        }
        if rates.len() != dim * dim {
            return Err(Error::BadDimension(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
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
                if i == j && v != 0.0 {
                    return Err(Error::NonzeroDiagonal { state: i, value: v });
                }
                if v < 0.0 {
                    return Err(Error::NegativeRate { row: i, col: j, value: v });
                }
            }
        }
        let exit = (0..dim)
            .map(|i| rates[i * dim..(i + 1) * dim].iter().sum())
            .collect();
        Ok(Self { dim, rates, exit })
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

    /// Build from `(row, col, rate)` triplets; unlisted entries are zero.
    /// Duplicate triplets accumulate.
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

    /// Symmetric nearest-neighbour chain: rate `q` between adjacent states,
    /// no wraparound.
    pub fn tridiagonal(dim: usize, q: f64) -> Result<Self> {
        let mut triplets = Vec::with_capacity(2 * dim);
        for i in 0..dim.saturating_sub(1) {
            triplets.push((i, i + 1, q));
            triplets.push((i + 1, i, q));
        }
        Self::from_triplets(dim, &triplets)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn rate(&self, i: StateIndex, j: StateIndex) -> f64 {
        self.rates[i * self.dim + j]
    }

    #[inline]
    pub fn row(&self, i: StateIndex) -> &[f64] {
        &self.rates[i * self.dim..(i + 1) * self.dim]
    }

    /// Total exit rate `q(i) = Σ_{j≠i} Q[i][j]` (cached at construction).
    #[inline]
    pub fn exit_rate(&self, i: StateIndex) -> f64 {
        self.exit[i]
    }

    /// Entrywise scaling by `s >= 0` (e.g. the `1/ε` speedup of a fast block).
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.dim, self.rates.iter().map(|r| r * s).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_rate() {
        let err = IntensityMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::NegativeRate { row: 0, col: 1, .. }));
    }

    #[test]
    fn rejects_nonzero_diagonal() {
        let err = IntensityMatrix::from_rows(&[vec![0.5, 1.0], vec![1.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::NonzeroDiagonal { state: 0, .. }));
    }

    #[test]
    fn rejects_non_finite() {
        let err =
            IntensityMatrix::from_rows(&[vec![0.0, f64::NAN], vec![1.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteRate { .. }));
    }

    #[test]
    fn tridiagonal_exit_rates() {
        let q = IntensityMatrix::tridiagonal(5, 1.0).unwrap();
        assert_eq!(q.exit_rate(0), 1.0);
        assert_eq!(q.exit_rate(2), 2.0);
        assert_eq!(q.exit_rate(4), 1.0);
    }

    #[test]
    fn triplets_accumulate() {
        let q = IntensityMatrix::from_triplets(2, &[(0, 1, 1.0), (0, 1, 0.5)]).unwrap();
        assert_eq!(q.rate(0, 1), 1.5);
    }
}
