//! Human-editable model definition files (TOML): model kind, dimensions,
//! matrix entries (dense rows or sparse triplets), the time-scale ratio, and
//! an optional initial condition.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::ctmc::IntensityMatrix;
use crate::error::{Error, Result};
use crate::models::{
    build_energy, build_ring, build_two_macro, spin_sum_energies, CouplingMatrix, ModelKind,
    MultiscaleModel,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    kind: String,
    epsilon: f64,
    name: Option<String>,
    /// Initial condition as a state pair; interpretation is model-specific
    /// (see `MultiscaleModel::state_from_pair`).
    initial: Option<[i64; 2]>,
    two_macro: Option<TwoMacroSection>,
    ring: Option<RingSection>,
    energy: Option<EnergySection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TwoMacroSection {
    m: usize,
    q0: MatrixSpec,
    q1: MatrixSpec,
    c01: MatrixSpec,
    c10: MatrixSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RingSection {
    m: usize,
    q: MatrixSpec,
    cl: MatrixSpec,
    cr: MatrixSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnergySection {
    k: u32,
    energies: Option<Vec<f64>>,
    energy_tol: Option<f64>,
    q: MatrixSpec,
    c: MatrixSpec,
}

/// One matrix, written either as dense rows, as `[row, col, rate]` triplets,
/// or as the `tridiagonal = q` nearest-neighbour shorthand.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixSpec {
    dense: Option<Vec<Vec<f64>>>,
    sparse: Option<Vec<(usize, usize, f64)>>,
    tridiagonal: Option<f64>,
}

impl MatrixSpec {
    fn rows(&self, dim: usize, what: &str) -> Result<Vec<Vec<f64>>> {
        match (&self.dense, &self.sparse, self.tridiagonal) {
            (Some(rows), None, None) => {
                if rows.len() != dim {
                    return Err(Error::InvalidModel(format!(
                        "{what}: dense form has {} rows, expected {dim}",
                        rows.len()
                    )));
                }
                Ok(rows.clone())
            }
            (None, Some(triplets), None) => {
                let mut rows = vec![vec![0.0; dim]; dim];
                for &(i, j, v) in triplets {
                    if i >= dim || j >= dim {
                        return Err(Error::InvalidModel(format!(
                            "{what}: sparse entry ({i}, {j}) out of bounds for dim {dim}"
                        )));
                    }
                    rows[i][j] += v;
                }
                Ok(rows)
            }
            (None, None, Some(q)) => {
                let mut rows = vec![vec![0.0; dim]; dim];
                for i in 0..dim.saturating_sub(1) {
                    rows[i][i + 1] = q;
                    rows[i + 1][i] = q;
                }
                Ok(rows)
            }
            _ => Err(Error::InvalidModel(format!(
                "{what}: give exactly one of dense, sparse, tridiagonal"
            ))),
        }
    }

    fn intensity(&self, dim: usize, what: &str) -> Result<IntensityMatrix> {
        IntensityMatrix::from_rows(&self.rows(dim, what)?)
    }

    fn coupling(&self, dim: usize, what: &str) -> Result<CouplingMatrix> {
        CouplingMatrix::from_rows(&self.rows(dim, what)?)
    }
}

/// Parse a model definition document. Returns the model plus the optional
/// initial-condition pair for the caller to resolve.
pub fn parse_model_toml(
    text: &str,
    fallback_name: &str,
) -> Result<(MultiscaleModel, Option<(i64, i64)>)> {
    let file: ModelFile =
        toml::from_str(text).map_err(|e| Error::InvalidModel(e.to_string()))?;
    let name = file.name.clone().unwrap_or_else(|| fallback_name.to_string());
    let initial = file.initial.map(|[a, b]| (a, b));
    let kind = match file.kind.as_str() {
        "two-macro" => {
            let s = file
                .two_macro
                .ok_or_else(|| Error::InvalidModel("missing [two_macro] section".into()))?;
            ModelKind::TwoMacro(build_two_macro(
                s.q0.intensity(s.m, "q0")?,
                s.q1.intensity(s.m, "q1")?,
                s.c01.coupling(s.m, "c01")?,
                s.c10.coupling(s.m, "c10")?,
                file.epsilon,
            )?)
        }
        "ring" => {
            let s = file
                .ring
                .ok_or_else(|| Error::InvalidModel("missing [ring] section".into()))?;
            ModelKind::Ring(build_ring(
                s.q.intensity(s.m, "q")?,
                s.cl.coupling(s.m, "cl")?,
                s.cr.coupling(s.m, "cr")?,
                file.epsilon,
            )?)
        }
        "energy" => {
            let s = file
                .energy
                .ok_or_else(|| Error::InvalidModel("missing [energy] section".into()))?;
            let words = 1usize << s.k;
            let energies = s.energies.clone().unwrap_or_else(|| spin_sum_energies(s.k));
            ModelKind::Energy(build_energy(
                s.k,
                energies,
                s.q.intensity(words, "q")?,
                s.c.coupling(words * words, "c")?,
                file.epsilon,
                s.energy_tol.unwrap_or(0.0),
            )?)
        }
        other => {
            return Err(Error::InvalidModel(format!(
                "unknown kind {other:?}; expected two-macro, ring, or energy"
            )))
        }
    };
    Ok((MultiscaleModel::new(name, kind), initial))
}

pub fn load_model_file(path: &Path) -> Result<(MultiscaleModel, Option<(i64, i64)>)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidModel(format!("{}: {e}", path.display())))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    parse_model_toml(&text, stem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{two_macro_s23, ModelKind};

    #[test]
    fn two_macro_file_matches_preset() {
        let text = r#"
kind = "two-macro"
epsilon = 0.001
initial = [0, 0]

[two_macro]
m = 5
q0 = { tridiagonal = 1.0 }
q1 = { tridiagonal = 1.0 }
c01 = { sparse = [[0, 4, 1.0], [4, 0, 1.0]] }
c10 = { sparse = [[0, 4, 1.0], [4, 0, 1.0]] }
"#;
        let (model, initial) = parse_model_toml(text, "custom").unwrap();
        assert_eq!(initial, Some((0, 0)));
        let preset = two_macro_s23(5, 1.0, 1.0, 0.001).unwrap();
        let (ModelKind::TwoMacro(a), ModelKind::TwoMacro(b)) = (model.kind(), preset.kind())
        else {
            panic!("wrong kinds");
        };
        assert_eq!(a.generator(), b.generator());
    }

    #[test]
    fn ring_file_round_trips() {
        let text = r#"
kind = "ring"
epsilon = 0.01

[ring]
m = 3
q = { tridiagonal = 2.0 }
cl = { sparse = [[0, 2, 1.0]] }
cr = { dense = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [3.0, 0.0, 0.0]] }
"#;
        let (model, initial) = parse_model_toml(text, "ring-test").unwrap();
        assert!(initial.is_none());
        assert_eq!(model.name(), "ring-test");
        let ModelKind::Ring(r) = model.kind() else { panic!() };
        assert_eq!(r.cr().rate(2, 0), 3.0);
        assert_eq!(r.q().rate(0, 1), 2.0);
    }

    #[test]
    fn energy_file_defaults_to_spin_sum() {
        let text = r#"
kind = "energy"
epsilon = 0.5
initial = [2, 1]

[energy]
k = 2
q = { sparse = [[1, 2, 10.0], [2, 1, 1.0]] }

[energy.c]
sparse = [
    [4, 1, 1.0], [4, 2, 1.0],
    [8, 1, 0.2], [8, 2, 0.2],
    [1, 4, 0.2], [1, 8, 0.2],
    [2, 4, 0.2], [2, 8, 0.2],
]
"#;
        let (model, initial) = parse_model_toml(text, "energy-test").unwrap();
        assert_eq!(initial, Some((2, 1)));
        let ModelKind::Energy(e) = model.kind() else { panic!() };
        assert_eq!(e.c().rate(4, 1), 1.0);
        assert_eq!(e.energy_of_word(3), 2.0);
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let err = parse_model_toml("kind = \"what\"\nepsilon = 1.0", "x").unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn over_specified_matrix_is_rejected() {
        let text = r#"
kind = "ring"
epsilon = 1.0

[ring]
m = 2
q = { tridiagonal = 1.0, dense = [[0.0, 1.0], [1.0, 0.0]] }
cl = { sparse = [] }
cr = { sparse = [] }
"#;
        assert!(parse_model_toml(text, "x").is_err());
    }
}
