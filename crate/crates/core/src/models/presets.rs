//! Bundled model presets. Each returns a ready-to-simulate
//! [`MultiscaleModel`] at a chosen time-scale ratio.

use crate::error::{Error, Result};
use crate::models::{
    build_paper_energy, build_paper_two_macro, build_ring, CouplingMatrix, ModelKind,
    MultiscaleModel,
};
use crate::ctmc::IntensityMatrix;

pub const PRESET_NAMES: [&str; 3] = ["two-macro-s2.3", "ring-s3.2", "energy-s4.3"];

/// Two corner-coupled macro-states over a symmetric nearest-neighbour
/// landscape; defaults `m = 5`, `q = c = 1`.
pub fn two_macro_s23(m: usize, q: f64, c: f64, epsilon: f64) -> Result<MultiscaleModel> {
    Ok(MultiscaleModel::new(
        "two-macro-s2.3",
        ModelKind::TwoMacro(build_paper_two_macro(m, q, c, epsilon)?),
    ))
}

/// Biased macro lattice: `m = 5`, internal rate 1, right coupling 2, left
/// coupling 1, both through the barrier-adjacent micro-states.
pub fn ring_s32(epsilon: f64) -> Result<MultiscaleModel> {
    let m = 5;
    let q = IntensityMatrix::tridiagonal(m, 1.0)?;
    let cl = CouplingMatrix::from_triplets(m, &[(0, m - 1, 1.0)])?;
    let cr = CouplingMatrix::from_triplets(m, &[(m - 1, 0, 2.0)])?;
    Ok(MultiscaleModel::new("ring-s3.2", ModelKind::Ring(build_ring(q, cl, cr, epsilon)?)))
}

/// Two-spin energy-exchange system with internal rates (10, 1) and coupling
/// rates (1, 0.2).
pub fn energy_s43(epsilon: f64) -> Result<MultiscaleModel> {
    Ok(MultiscaleModel::new("energy-s4.3", ModelKind::Energy(build_paper_energy(epsilon)?)))
}

/// Resolve a preset by name. `m`, `q`, `c` override the two-macro landscape
/// parameters and are rejected for the fixed presets.
pub fn preset_model(
    name: &str,
    m: Option<usize>,
    q: Option<f64>,
    c: Option<f64>,
    epsilon: f64,
) -> Result<MultiscaleModel> {
    match name {
        "two-macro-s2.3" => {
            two_macro_s23(m.unwrap_or(5), q.unwrap_or(1.0), c.unwrap_or(1.0), epsilon)
        }
        "ring-s3.2" | "energy-s4.3" => {
            if m.is_some() || q.is_some() || c.is_some() {
                return Err(Error::InvalidConfig(format!(
                    "preset {name} has fixed parameters; use a model file to change them"
                )));
            }
            if name == "ring-s3.2" {
                ring_s32(epsilon)
            } else {
                energy_s43(epsilon)
            }
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown preset {other:?}; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}
