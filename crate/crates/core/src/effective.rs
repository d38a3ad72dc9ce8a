//! Analytic limit dynamics in the regime of complete time-scale separation.
//!
//! Once the fast internal dynamics equilibrate, the slow variable jumps at
//! rates that are invariant-measure averages of the microscopic coupling
//! frequencies. These derivations are finite rational sums over the model
//! matrices: no simulation, no dependence on the time-scale ratio.

use std::fmt;

use crate::ctmc::{IntensityMatrix, JumpKernel, StateIndex};
use crate::error::{Error, Result};
use crate::models::ring::{fold, unfold};
use crate::models::{EnergyModel, ModelKind, MultiscaleModel, RingModel, TwoMacroModel};
use crate::stationary::invariant_measure;

/// Limit description of the slow variable for each model family.
#[derive(Debug, Clone, PartialEq)]
pub enum EffectiveDynamics {
    /// Two-state chain: jump rates out of macro 0 and macro 1.
    TwoMacro { rate_to_1: f64, rate_to_0: f64 },
    /// Biased walk on the macro lattice.
    Ring { rate_left: f64, rate_right: f64 },
    /// Jump chain over the admissible first-particle energy levels.
    Energy { levels: Vec<f64>, rates: IntensityMatrix, total_energy: f64 },
}

/// `λ_z = Σ_x π_z(x) Σ_{x'} C_{z,1-z}(x, x')`, with `π_z` the invariant
/// measure of the internal block of macro `z`.
pub fn derive_two_macro(model: &TwoMacroModel) -> Result<EffectiveDynamics> {
    let support: Vec<StateIndex> = (0..model.m()).collect();
    let pi0 = invariant_measure(model.q0(), &support)
        .map_err(|_| Error::NotIrreducible { block: "Q0".into() })?;
    let pi1 = invariant_measure(model.q1(), &support)
        .map_err(|_| Error::NotIrreducible { block: "Q1".into() })?;
    let rate_to_1 = support.iter().map(|&x| pi0.get(x) * model.c01().row_sum(x)).sum();
    let rate_to_0 = support.iter().map(|&x| pi1.get(x) * model.c10().row_sum(x)).sum();
    Ok(EffectiveDynamics::TwoMacro { rate_to_1, rate_to_0 })
}

/// Invariant-measure averages of the left and right coupling frequencies.
pub fn derive_ring(model: &RingModel) -> Result<EffectiveDynamics> {
    let support: Vec<StateIndex> = (0..model.m()).collect();
    let pi = invariant_measure(model.q(), &support)
        .map_err(|_| Error::NotIrreducible { block: "Q".into() })?;
    let rate_left = support.iter().map(|&x| pi.get(x) * model.cl().row_sum(x)).sum();
    let rate_right = support.iter().map(|&x| pi.get(x) * model.cr().row_sum(x)).sum();
    Ok(EffectiveDynamics::Ring { rate_left, rate_right })
}

/// Level-to-level exchange rates: for admissible first-particle levels
/// `e, e'`, the rate is the coupling mass from `(x, z)` pairs at levels
/// `(e, E-e)` to pairs at `(e', E-e')`, weighted by the product of the
/// per-level invariant measures.
pub fn derive_energy(model: &EnergyModel, total_energy: f64) -> Result<EffectiveDynamics> {
    let tol = model.energy_tol();
    let eq = |a: f64, b: f64| (a - b).abs() <= tol;
    let levels: Vec<f64> = model
        .levels()
        .iter()
        .copied()
        .filter(|&e| !model.class(total_energy - e).is_empty())
        .collect();
    if levels.is_empty() {
        return Err(Error::InadmissibleEnergy { energy: total_energy });
    }

    let words = model.word_count();
    let n = levels.len();
    let mut rates = vec![0.0; n * n];
    for (i, &e) in levels.iter().enumerate() {
        let class_x = model.class(e);
        let class_z = model.class(total_energy - e);
        let pi_x = invariant_measure(model.q(), &class_x)?;
        let pi_z = invariant_measure(model.q(), &class_z)?;
        for &x in &class_x {
            for &z in &class_z {
                let weight = pi_x.get(x) * pi_z.get(z);
                if weight == 0.0 {
                    continue;
                }
                let row = model.c().row(model.pair_index(x, z));
                for (target, &rate) in row.iter().enumerate() {
                    if rate > 0.0 {
                        let e_to = model.energy_of_word(target / words);
                        let j = levels
                            .iter()
                            .position(|&l| eq(l, e_to))
                            .expect("conservation keeps targets on admissible levels");
                        rates[i * n + j] += weight * rate;
                    }
                }
            }
        }
    }
    let rates = IntensityMatrix::new(n, rates)?;
    Ok(EffectiveDynamics::Energy { levels, rates, total_energy })
}

/// Dispatch on the model family. The energy model needs the conserved total;
/// by default it is read off the model's default initial pair.
pub fn derive(model: &MultiscaleModel, total_energy: Option<f64>) -> Result<EffectiveDynamics> {
    match model.kind() {
        ModelKind::TwoMacro(m) => derive_two_macro(m),
        ModelKind::Ring(m) => derive_ring(m),
        ModelKind::Energy(m) => {
            let total = total_energy.unwrap_or_else(|| m.total_energy(model.default_initial()));
            derive_energy(m, total)
        }
    }
}

/// The limit dynamics as a simulable process, for side-by-side comparisons
/// with finite-separation runs.
#[derive(Debug, Clone, PartialEq)]
pub enum LimitProcess {
    /// Finite chain with human-readable state labels.
    Chain { matrix: IntensityMatrix, labels: Vec<String> },
    /// Unbounded walk on the macro lattice, rows materialized on demand
    /// under the same folded enumeration as the ring model.
    Walk { rate_left: f64, rate_right: f64 },
}

pub fn limit_process(eff: &EffectiveDynamics) -> LimitProcess {
    match eff {
        EffectiveDynamics::TwoMacro { rate_to_1, rate_to_0 } => LimitProcess::Chain {
            matrix: IntensityMatrix::from_rows(&[
                vec![0.0, *rate_to_1],
                vec![*rate_to_0, 0.0],
            ])
            .expect("derived rates are nonnegative"),
            labels: vec!["0".into(), "1".into()],
        },
        EffectiveDynamics::Ring { rate_left, rate_right } => {
            LimitProcess::Walk { rate_left: *rate_left, rate_right: *rate_right }
        }
        EffectiveDynamics::Energy { levels, rates, .. } => LimitProcess::Chain {
            matrix: rates.clone(),
            labels: levels.iter().map(|e| format!("{e}")).collect(),
        },
    }
}

impl LimitProcess {
    /// Index of the walk state with macro label `z` (chains index directly).
    pub fn walk_state(z: i64) -> StateIndex {
        fold(z)
    }

    pub fn exit_rate_from(&self, state: StateIndex) -> f64 {
        JumpKernel::exit_rate(self, state)
    }
}

impl JumpKernel for LimitProcess {
    fn exit_rate(&self, state: StateIndex) -> f64 {
        match self {
            LimitProcess::Chain { matrix, .. } => JumpKernel::exit_rate(matrix, state),
            LimitProcess::Walk { rate_left, rate_right } => {
                let _ = state;
                rate_left + rate_right
            }
        }
    }

    fn transitions(&self, state: StateIndex, out: &mut Vec<(StateIndex, f64)>) {
        match self {
            LimitProcess::Chain { matrix, .. } => matrix.transitions(state, out),
            LimitProcess::Walk { rate_left, rate_right } => {
                let z = unfold(state);
                out.clear();
                if *rate_left > 0.0 {
                    out.push((fold(z - 1), *rate_left));
                }
                if *rate_right > 0.0 {
                    out.push((fold(z + 1), *rate_right));
                }
            }
        }
    }
}

/// Text report of a derivation: the invariant measures that entered the
/// averages and every limit rate.
#[derive(Debug, Clone)]
pub struct DeriveReport {
    pub model_name: String,
    pub measures: Vec<(String, Vec<f64>)>,
    pub dynamics: EffectiveDynamics,
}

pub fn derive_report(
    model: &MultiscaleModel,
    total_energy: Option<f64>,
) -> Result<DeriveReport> {
    let dynamics = derive(model, total_energy)?;
    let mut measures = Vec::new();
    match model.kind() {
        ModelKind::TwoMacro(m) => {
            let support: Vec<StateIndex> = (0..m.m()).collect();
            measures.push((
                "invariant measure (macro 0)".into(),
                invariant_measure(m.q0(), &support)?.weights().to_vec(),
            ));
            measures.push((
                "invariant measure (macro 1)".into(),
                invariant_measure(m.q1(), &support)?.weights().to_vec(),
            ));
        }
        ModelKind::Ring(m) => {
            let support: Vec<StateIndex> = (0..m.m()).collect();
            measures.push((
                "invariant measure (internal)".into(),
                invariant_measure(m.q(), &support)?.weights().to_vec(),
            ));
        }
        ModelKind::Energy(m) => {
            if let EffectiveDynamics::Energy { levels, .. } = &dynamics {
                for &e in levels {
                    let class = m.class(e);
                    let pi = invariant_measure(m.q(), &class)?;
                    measures.push((
                        format!("invariant measure (first-particle level {e})"),
                        pi.weights().to_vec(),
                    ));
                }
            }
        }
    }
    Ok(DeriveReport { model_name: model.name().to_string(), measures, dynamics })
}

impl fmt::Display for DeriveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model: {}", self.model_name)?;
        for (label, weights) in &self.measures {
            let rendered: Vec<String> = weights.iter().map(|w| format!("{w}")).collect();
            writeln!(f, "{label}: [{}]", rendered.join(", "))?;
        }
        match &self.dynamics {
            EffectiveDynamics::TwoMacro { rate_to_1, rate_to_0 } => {
                writeln!(f, "effective rate 0 -> 1: {rate_to_1}")?;
                writeln!(f, "effective rate 1 -> 0: {rate_to_0}")?;
            }
            EffectiveDynamics::Ring { rate_left, rate_right } => {
                writeln!(f, "effective rate left: {rate_left}")?;
                writeln!(f, "effective rate right: {rate_right}")?;
                writeln!(f, "total macro jump rate: {}", rate_left + rate_right)?;
                if rate_left + rate_right > 0.0 {
                    writeln!(f, "P(jump right): {}", rate_right / (rate_left + rate_right))?;
                }
            }
            EffectiveDynamics::Energy { levels, rates, total_energy } => {
                writeln!(f, "total energy: {total_energy}")?;
                let rendered: Vec<String> = levels.iter().map(|e| format!("{e}")).collect();
                writeln!(f, "admissible first-particle levels: [{}]", rendered.join(", "))?;
                for (i, &e) in levels.iter().enumerate() {
                    for (j, &e2) in levels.iter().enumerate() {
                        if rates.rate(i, j) > 0.0 {
                            writeln!(f, "effective rate {e} -> {e2}: {}", rates.rate(i, j))?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::{first_hit, first_hit_time, RngStream};
    use crate::models::{
        build_paper_energy, build_paper_two_macro, build_ring, build_two_macro, ring_s32,
        CouplingMatrix,
    };
    use proptest::prelude::*;

    fn two_macro_rates(model: &TwoMacroModel) -> (f64, f64) {
        match derive_two_macro(model).unwrap() {
            EffectiveDynamics::TwoMacro { rate_to_1, rate_to_0 } => (rate_to_1, rate_to_0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn corner_coupling_rates_are_two_over_m() {
        for m in [3usize, 5, 7, 20] {
            let model = build_paper_two_macro(m, 1.0, 1.0, 1.0).unwrap();
            let (r01, r10) = two_macro_rates(&model);
            let expected = 2.0 / m as f64;
            assert!((r01 - expected).abs() < 1e-12, "m={m}: {r01}");
            assert!((r10 - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_coupling_rows_make_the_rate_independent_of_q() {
        // Row sums all equal 0.9, internal dynamics deliberately lopsided.
        let q = IntensityMatrix::from_triplets(
            3,
            &[(0, 1, 5.0), (1, 0, 0.1), (1, 2, 2.0), (2, 1, 0.3), (2, 0, 4.0)],
        )
        .unwrap();
        let c = CouplingMatrix::from_rows(&[
            vec![0.9, 0.0, 0.0],
            vec![0.3, 0.3, 0.3],
            vec![0.0, 0.45, 0.45],
        ])
        .unwrap();
        let model = build_two_macro(q.clone(), q, c.clone(), c, 1.0).unwrap();
        let (r01, _) = two_macro_rates(&model);
        assert!((r01 - 0.9).abs() < 1e-12, "{r01}");
    }

    #[test]
    fn three_state_corner_rate() {
        let model = build_paper_two_macro(3, 1.0, 1.0, 1.0).unwrap();
        let (r01, _) = two_macro_rates(&model);
        assert!((r01 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ring_preset_rates() {
        let model = ring_s32(1.0).unwrap();
        let ModelKind::Ring(ring) = model.kind() else { unreachable!() };
        let EffectiveDynamics::Ring { rate_left, rate_right } = derive_ring(ring).unwrap()
        else {
            unreachable!()
        };
        assert!((rate_left - 0.2).abs() < 1e-12);
        assert!((rate_right - 0.4).abs() < 1e-12);
    }

    #[test]
    fn zero_left_coupling_gives_zero_left_rate() {
        let q = IntensityMatrix::tridiagonal(4, 1.0).unwrap();
        let cr = CouplingMatrix::from_triplets(4, &[(3, 0, 2.0)]).unwrap();
        let ring = build_ring(q, CouplingMatrix::zeros(4), cr, 1.0).unwrap();
        let EffectiveDynamics::Ring { rate_left, .. } = derive_ring(&ring).unwrap() else {
            unreachable!()
        };
        assert_eq!(rate_left, 0.0);
    }

    #[test]
    fn two_unit_entries_in_distinct_rows_average_to_two_fifths() {
        let q = IntensityMatrix::tridiagonal(5, 1.0).unwrap();
        let cr = CouplingMatrix::from_triplets(5, &[(1, 0, 1.0), (3, 2, 1.0)]).unwrap();
        let ring = build_ring(q, CouplingMatrix::zeros(5), cr, 1.0).unwrap();
        let EffectiveDynamics::Ring { rate_right, .. } = derive_ring(&ring).unwrap() else {
            unreachable!()
        };
        assert!((rate_right - 0.4).abs() < 1e-12);
    }

    #[test]
    fn energy_exchange_rate_matches_closed_form() {
        // Level-1 measure is (1/11, 10/11); the 1 -> 0 rate is
        // (1/11)·2·1 + (10/11)·2·0.2 = 6/11.
        let model = build_paper_energy(1.0).unwrap();
        let EffectiveDynamics::Energy { levels, rates, .. } =
            derive_energy(&model, 1.0).unwrap()
        else {
            unreachable!()
        };
        assert_eq!(levels, vec![0.0, 1.0]);
        assert!((rates.rate(1, 0) - 6.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn energy_reverse_rate_matches_brute_force() {
        // Independent enumeration over all 16x16 pair transitions with the
        // hand-computed level measures π0 = δ and π1 = (1/11, 10/11).
        let model = build_paper_energy(1.0).unwrap();
        let pi1 = [(1usize, 1.0 / 11.0), (2usize, 10.0 / 11.0)];
        let mut oracle = 0.0;
        for &(z, w) in &pi1 {
            let from = model.pair_index(0, z);
            for x2 in 0..4 {
                for z2 in 0..4 {
                    if model.energy_of_word(x2) == 1.0 && model.energy_of_word(z2) == 0.0 {
                        oracle += w * model.c().rate(from, model.pair_index(x2, z2));
                    }
                }
            }
        }
        assert!((oracle - 0.4).abs() < 1e-15, "oracle {oracle}");

        let EffectiveDynamics::Energy { rates, .. } = derive_energy(&model, 1.0).unwrap()
        else {
            unreachable!()
        };
        assert!((rates.rate(0, 1) - oracle).abs() < 1e-12);
    }

    #[test]
    fn zero_total_energy_has_a_single_frozen_level() {
        let model = build_paper_energy(1.0).unwrap();
        let EffectiveDynamics::Energy { levels, rates, .. } =
            derive_energy(&model, 0.0).unwrap()
        else {
            unreachable!()
        };
        assert_eq!(levels, vec![0.0]);
        assert_eq!(rates.dim(), 1);
        assert_eq!(rates.exit_rate(0), 0.0);
    }

    #[test]
    fn unreachable_total_energy_is_rejected() {
        let model = build_paper_energy(1.0).unwrap();
        let err = derive_energy(&model, 7.0).unwrap_err();
        assert_eq!(err, Error::InadmissibleEnergy { energy: 7.0 });
    }

    #[test]
    fn derivation_ignores_the_time_scale_ratio() {
        for m in [3usize, 5] {
            let a = derive_two_macro(&build_paper_two_macro(m, 1.0, 1.0, 1.0).unwrap()).unwrap();
            let b =
                derive_two_macro(&build_paper_two_macro(m, 1.0, 1.0, 1e-3).unwrap()).unwrap();
            assert_eq!(a, b);
        }
        let a = derive_energy(&build_paper_energy(1.0).unwrap(), 1.0).unwrap();
        let b = derive_energy(&build_paper_energy(1e-3).unwrap(), 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn limit_chain_shape_and_walk_bias() {
        let eff = EffectiveDynamics::TwoMacro { rate_to_1: 0.1, rate_to_0: 0.1 };
        let LimitProcess::Chain { matrix, .. } = limit_process(&eff) else { unreachable!() };
        assert_eq!(matrix.rate(0, 1), 0.1);
        assert_eq!(matrix.rate(1, 0), 0.1);
        assert_eq!(matrix.rate(0, 0), 0.0);

        // Walk with rates (1/5, 2/5): P(jump right) = 2/3 within 4 binomial
        // standard errors over 1e4 first jumps.
        let walk = limit_process(&EffectiveDynamics::Ring { rate_left: 0.2, rate_right: 0.4 });
        let n = 10_000;
        let start = LimitProcess::walk_state(0);
        let right = (0..n)
            .filter(|&r| {
                let mut rng = RngStream::new(400, r);
                let (_, s) = first_hit(&walk, start, |s| s != start, &mut rng, 1 << 20).unwrap();
                s == LimitProcess::walk_state(1)
            })
            .count();
        let p = right as f64 / n as f64;
        let se = (2.0 / 3.0 * (1.0 / 3.0) / n as f64).sqrt();
        assert!((p - 2.0 / 3.0).abs() < 4.0 * se, "p {p}");
    }

    #[test]
    fn energy_limit_exit_rate() {
        let model = build_paper_energy(1.0).unwrap();
        let eff = derive_energy(&model, 1.0).unwrap();
        let limit = limit_process(&eff);
        // Level 1 is index 1 in the admissible list [0, 1].
        assert!((limit.exit_rate_from(1) - 6.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn limit_chain_exit_times_match_the_rate() {
        // Mean first exit of the limit chain over 1e4 draws within 4
        // standard errors of 1/rate.
        let eff = EffectiveDynamics::TwoMacro { rate_to_1: 0.4, rate_to_0: 0.4 };
        let limit = limit_process(&eff);
        let n = 10_000u64;
        let mut sum = 0.0;
        for r in 0..n {
            sum += first_hit_time(&limit, 0, |s| s != 0, &mut RngStream::new(401, r), 1 << 20)
                .unwrap();
        }
        let mean = sum / n as f64;
        let se = 2.5 / (n as f64).sqrt();
        assert!((mean - 2.5).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn report_renders_rates_and_measures() {
        let model = ring_s32(1e-2).unwrap();
        let report = derive_report(&model, None).unwrap();
        let text = report.to_string();
        assert!(text.contains("model: ring-s3.2"));
        assert!(text.contains("effective rate left: 0.2"));
        assert!(text.contains("effective rate right: 0.4"));
        assert!(text.contains("invariant measure (internal)"));
    }

    proptest! {
        // Power-of-two rescalings of every coupling entry rescale each
        // derived rate exactly.
        #[test]
        fn coupling_scaling_covariance(
            exp in -6i32..7,
            m in 2usize..6,
            q in 0.25f64..4.0,
            c in 0.25f64..4.0,
        ) {
            let s = 2.0f64.powi(exp);
            let base = build_paper_two_macro(m, q, c, 1.0).unwrap();
            let scaled = build_two_macro(
                base.q0().clone(),
                base.q1().clone(),
                base.c01().scaled(s).unwrap(),
                base.c10().scaled(s).unwrap(),
                1.0,
            ).unwrap();
            let (r1, r0) = two_macro_rates(&base);
            let (s1, s0) = two_macro_rates(&scaled);
            prop_assert_eq!(s1.to_bits(), (s * r1).to_bits());
            prop_assert_eq!(s0.to_bits(), (s * r0).to_bits());
        }
    }
}
