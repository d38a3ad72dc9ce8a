//! End-to-end validation suite: eleven checks with pinned seeds, sample
//! sizes, and tolerances, covering analytic exactness, convergence of the
//! exit-time law, conservation, solver correctness, and reproducibility.
//!
//! Each check returns a [`CriterionResult`] rather than panicking, so the
//! same suite backs both the `validate` CLI command and the acceptance test
//! target.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::ctmc::{simulate, IntensityMatrix, RngStream, StateIndex};
use crate::effective::{derive, limit_process, EffectiveDynamics, LimitProcess};
use crate::models::{
    build_two_macro, energy_s43, ring_s32, two_macro_s23, CouplingMatrix, ModelKind,
    MultiscaleModel,
};
use crate::stationary::{invariant_measure, is_irreducible, stationary_residual};
use crate::stats::{
    discrepancy, histogram, l1_error, martingale_residual, moments, sample_exit_times,
    sample_exit_times_limit, sweep, sweep_csv, two_sample_discrepancy, L1Weighting,
    SampleSettings, SweepSettings,
};

/// 1% critical value of the one-sample Kolmogorov–Smirnov statistic at
/// n = 10⁴, `1.63/√n`.
pub const KS_CRITICAL_1PCT_1E4: f64 = 1.63e-2;

/// Recorded ceiling for the harness L¹ noise floor: the Riemann-weighted L¹
/// error of a 10⁴-draw histogram sampled from the limit law itself, with the
/// suite's pinned seeds, stays below this on all three preset limit chains
/// (measured values sit near 0.07–0.09).
pub const L1_NOISE_FLOOR_BOUND: f64 = 0.12;

const REPLICAS: usize = 10_000;
const MAX_EVENTS: u64 = 100_000_000;

/// Outcome of one validation criterion.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
}

impl CriterionResult {
    pub fn summary_line(&self) -> String {
        format!(
            "[{}] criterion {:2} — {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name
        )
    }
}

struct Checker {
    id: usize,
    name: &'static str,
    passed: bool,
    details: Vec<String>,
}

impl Checker {
    fn new(id: usize, name: &'static str) -> Self {
        Self { id, name, passed: true, details: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: String) {
        if !ok {
            self.passed = false;
        }
        self.details.push(format!("{} {detail}", if ok { "ok:" } else { "FAIL:" }));
    }

    fn check_close(&mut self, label: &str, got: f64, want: f64, tol: f64) {
        self.check(
            (got - want).abs() <= tol,
            format!("{label}: got {got:.12e}, want {want:.12e} ± {tol:.3e}"),
        );
    }

    fn fail(&mut self, detail: String) {
        self.passed = false;
        self.details.push(format!("FAIL: {detail}"));
    }

    fn finish(self) -> CriterionResult {
        CriterionResult { id: self.id, name: self.name, passed: self.passed, details: self.details }
    }
}

pub fn criterion_ids() -> std::ops::RangeInclusive<usize> {
    1..=11
}

/// Run one criterion by id (1 through 11).
pub fn run_criterion(id: usize) -> CriterionResult {
    match id {
        1 => effective_rate_exactness(),
        2 => exit_time_moment_convergence(),
        3 => l1_error_decay(),
        4 => ring_limit_law(),
        5 => energy_limit_law(),
        6 => harness_noise_floor(),
        7 => martingale_residual_check(),
        8 => homogeneous_coupling_decoupling(),
        9 => energy_conservation(),
        10 => stationary_solver_oracle(),
        11 => sweep_determinism(),
        other => CriterionResult {
            id: other,
            name: "unknown criterion",
            passed: false,
            details: vec![format!("FAIL: no criterion with id {other}")],
        },
    }
}

/// Run the whole suite in order.
pub fn run_all() -> Vec<CriterionResult> {
    criterion_ids().map(run_criterion).collect()
}

fn two_macro_rates(model: &MultiscaleModel) -> (f64, f64) {
    match derive(model, None).unwrap() {
        EffectiveDynamics::TwoMacro { rate_to_1, rate_to_0 } => (rate_to_1, rate_to_0),
        _ => unreachable!(),
    }
}

// 1. Derived limit rates match their closed forms to 1e-12.
fn effective_rate_exactness() -> CriterionResult {
    let mut c = Checker::new(1, "analytic limit rates match closed forms");
    for m in [3usize, 5, 7, 20] {
        match two_macro_s23(m, 1.0, 1.0, 1.0) {
            Ok(model) => {
                let (r01, r10) = two_macro_rates(&model);
                c.check_close(&format!("two-macro m={m}: rate 0->1"), r01, 2.0 / m as f64, 1e-12);
                c.check_close(&format!("two-macro m={m}: rate 1->0"), r10, 2.0 / m as f64, 1e-12);
            }
            Err(e) => c.fail(format!("two-macro m={m}: {e}")),
        }
    }
    match ring_s32(1.0).and_then(|model| derive(&model, None)) {
        Ok(EffectiveDynamics::Ring { rate_left, rate_right }) => {
            c.check_close("ring: rate left", rate_left, 0.2, 1e-12);
            c.check_close("ring: rate right", rate_right, 0.4, 1e-12);
        }
        Ok(_) => c.fail("ring: wrong dynamics kind".into()),
        Err(e) => c.fail(format!("ring: {e}")),
    }
    match energy_s43(1.0).and_then(|model| derive(&model, Some(1.0))) {
        Ok(EffectiveDynamics::Energy { levels, rates, .. }) => {
            match (levels.iter().position(|&l| l == 1.0), levels.iter().position(|&l| l == 0.0)) {
                (Some(hi), Some(lo)) => c.check_close(
                    "energy: exchange rate 1->0",
                    rates.rate(hi, lo),
                    6.0 / 11.0,
                    1e-12,
                ),
                _ => c.fail(format!("energy: unexpected levels {levels:?}")),
            }
        }
        Ok(_) => c.fail("energy: wrong dynamics kind".into()),
        Err(e) => c.fail(format!("energy: {e}")),
    }
    c.finish()
}

// 2. Exit-time moments at strong separation match the limit exponential.
fn exit_time_moment_convergence() -> CriterionResult {
    let mut c = Checker::new(2, "two-macro exit-time moments converge to the limit law");
    let model = two_macro_s23(5, 1.0, 1.0, 1e-3).unwrap();
    let sample = sample_exit_times(
        &model,
        model.default_initial(),
        &SampleSettings { replica_count: REPLICAS, seed: 1002, stream_offset: 0, max_events: MAX_EVENTS },
    );
    c.check(
        sample.failures == 0,
        format!("replica failures: {}/{}", sample.failures, REPLICAS),
    );
    match moments(&sample.values) {
        Ok(m) => {
            let se = m.se_mean();
            c.check_close("mean exit time (λ = 0.4)", m.mean, 2.5, 4.0 * se);
            let (lo, hi) = m.ci95_variance;
            c.check(
                lo <= 6.25 && 6.25 <= hi,
                format!("variance 95% CI ({lo:.4}, {hi:.4}) covers 6.25"),
            );
        }
        Err(e) => c.fail(format!("moments: {e}")),
    }
    c.finish()
}

// Shared by criteria 3 and 6: the noise floor of the L¹ metric, measured by
// sampling the two-macro limit chain against its own rate with pinned seeds.
fn measured_l1_noise_floor() -> f64 {
    static FLOOR: OnceLock<f64> = OnceLock::new();
    *FLOOR.get_or_init(|| {
        let model = two_macro_s23(5, 1.0, 1.0, 1.0).unwrap();
        let limit = limit_process(&derive(&model, None).unwrap());
        let sample =
            sample_exit_times_limit(&limit, 0, &SampleSettings::new(REPLICAS, 1006));
        let hist = histogram(&sample.values, 0.05, 100);
        l1_error(&hist, 0.4, L1Weighting::Riemann)
    })
}

// 3. The L¹ error of the exit-time density decays with the scale separation.
fn l1_error_decay() -> CriterionResult {
    let mut c = Checker::new(3, "L1 error decays with time-scale separation");
    let model = two_macro_s23(5, 1.0, 1.0, 1.0).unwrap();
    let settings = SweepSettings {
        epsilons: vec![1.0, 0.1, 0.01, 1e-3],
        replica_count: REPLICAS,
        seed: 1003,
        max_events: MAX_EVENTS,
        bin_width: 0.05,
        num_bins: 100,
        weighting: L1Weighting::Riemann,
    };
    match sweep(&model, None, &settings) {
        Ok(report) => {
            let l1_coarse = report.rows.first().unwrap().l1_error;
            let l1_fine = report.rows.last().unwrap().l1_error;
            c.check(
                l1_fine < l1_coarse,
                format!("l1(eps=1e-3) = {l1_fine:.4} < l1(eps=1) = {l1_coarse:.4}"),
            );
            let floor = measured_l1_noise_floor();
            c.check(
                l1_fine < 3.0 * floor,
                format!("l1(eps=1e-3) = {l1_fine:.4} < 3 × noise floor {floor:.4}"),
            );
            for row in &report.rows {
                c.check(
                    row.failures == 0,
                    format!("eps={}: replica failures {}", row.epsilon, row.failures),
                );
            }
        }
        Err(e) => c.fail(format!("sweep: {e}")),
    }
    c.finish()
}

// 4. Ring exit law: mean exit time, displacement probabilities and mean.
fn ring_limit_law() -> CriterionResult {
    let mut c = Checker::new(4, "ring exit time and jump amplitude match the limit walk");
    let model = ring_s32(1e-3).unwrap();
    let settings = SweepSettings {
        epsilons: vec![1e-3],
        replica_count: REPLICAS,
        seed: 1004,
        max_events: MAX_EVENTS,
        bin_width: 0.05,
        num_bins: 100,
        weighting: L1Weighting::Riemann,
    };
    match sweep(&model, None, &settings) {
        Ok(report) => {
            let row = &report.rows[0];
            c.check(row.failures == 0, format!("replica failures: {}", row.failures));
            match &row.moments {
                Some(m) => {
                    c.check_close("mean exit time (λ = 0.6)", m.mean, 5.0 / 3.0, 4.0 * m.se_mean());
                }
                None => c.fail("no moments".into()),
            }
            match &row.jump {
                Some(j) => {
                    let n = j.n() as f64;
                    let se_p = (j.p_plus() * j.p_minus() / n).sqrt();
                    c.check_close("P(jump right)", j.p_plus(), 2.0 / 3.0, 4.0 * se_p);
                    c.check_close("mean displacement", j.mean(), 1.0 / 3.0, 4.0 * j.se_mean());
                }
                None => c.fail("no displacement tally".into()),
            }
        }
        Err(e) => c.fail(format!("sweep: {e}")),
    }
    c.finish()
}

// 5. Energy-exchange exit law against Exp(6/11).
fn energy_limit_law() -> CriterionResult {
    let mut c = Checker::new(5, "energy-exchange exit times follow the limit exponential");
    let model = energy_s43(1e-3).unwrap();
    let sample = sample_exit_times(
        &model,
        model.default_initial(),
        &SampleSettings { replica_count: REPLICAS, seed: 1005, stream_offset: 0, max_events: MAX_EVENTS },
    );
    c.check(sample.failures == 0, format!("replica failures: {}", sample.failures));
    match moments(&sample.values) {
        Ok(m) => {
            c.check_close("mean exit time (rate 6/11)", m.mean, 11.0 / 6.0, 4.0 * m.se_mean());
        }
        Err(e) => c.fail(format!("moments: {e}")),
    }
    let d = discrepancy(&sample.values, 6.0 / 11.0);
    c.check(
        d < KS_CRITICAL_1PCT_1E4,
        format!("KS discrepancy {d:.5} < {KS_CRITICAL_1PCT_1E4}"),
    );
    c.finish()
}

// 6. Sampling each limit process against its own rate bounds the harness
// noise; the measured L¹ floor is stored and reused by criterion 3.
fn harness_noise_floor() -> CriterionResult {
    let mut c = Checker::new(6, "harness noise floor on the limit processes themselves");

    let floor = measured_l1_noise_floor();
    c.check(
        floor < L1_NOISE_FLOOR_BOUND,
        format!("two-macro limit: L1 floor {floor:.4} < recorded bound {L1_NOISE_FLOOR_BOUND}"),
    );

    let cases: Vec<(&str, LimitProcess, StateIndex, f64, u64)> = vec![
        (
            "two-macro limit (rate 0.4)",
            limit_process(&derive(&two_macro_s23(5, 1.0, 1.0, 1.0).unwrap(), None).unwrap()),
            0,
            0.4,
            1006,
        ),
        (
            "ring limit walk (rate 0.6)",
            limit_process(&derive(&ring_s32(1.0).unwrap(), None).unwrap()),
            LimitProcess::walk_state(0),
            0.6,
            1106,
        ),
        (
            "energy limit chain (rate 6/11)",
            limit_process(&derive(&energy_s43(1.0).unwrap(), Some(1.0)).unwrap()),
            1,
            6.0 / 11.0,
            1206,
        ),
    ];
    for (label, limit, start, rate, seed) in cases {
        let sample = sample_exit_times_limit(&limit, start, &SampleSettings::new(REPLICAS, seed));
        let d = discrepancy(&sample.values, rate);
        c.check(d < KS_CRITICAL_1PCT_1E4, format!("{label}: discrepancy {d:.5}"));
        let l1 = l1_error(&histogram(&sample.values, 0.05, 100), rate, L1Weighting::Riemann);
        c.check(
            l1 < L1_NOISE_FLOOR_BOUND,
            format!("{label}: L1 {l1:.4} < recorded bound {L1_NOISE_FLOOR_BOUND}"),
        );
    }
    c.finish()
}

// 7. The martingale residual is centred and its variance matches the mean
// quadratic-variation integral.
fn martingale_residual_check() -> CriterionResult {
    let mut c = Checker::new(7, "martingale residual is centred with matching variance");
    let model = two_macro_s23(5, 1.0, 1.0, 0.1).unwrap();
    match martingale_residual(
        &model,
        model.default_initial(),
        5.0,
        &SampleSettings { replica_count: REPLICAS, seed: 1007, stream_offset: 0, max_events: MAX_EVENTS },
    ) {
        Ok(diag) => {
            c.check(diag.failures == 0, format!("replica failures: {}", diag.failures));
            let n = diag.residual.n_samples as f64;
            let bound = 4.0 * diag.residual.variance.sqrt() / n.sqrt();
            c.check(
                diag.residual.mean.abs() < bound,
                format!("|mean residual| {:.5} < 4·std/√n = {bound:.5}", diag.residual.mean.abs()),
            );
            let qv = diag.mean_quadratic_variation;
            let rel = (diag.residual.variance - qv).abs() / qv;
            c.check(
                rel <= 0.15,
                format!(
                    "residual variance {:.5} within 15% of mean quadratic variation {qv:.5} (off by {:.1}%)",
                    diag.residual.variance,
                    100.0 * rel
                ),
            );
        }
        Err(e) => c.fail(format!("martingale residual: {e}")),
    }
    c.finish()
}

// 8. Constant coupling row sums decouple the macro dynamics from the
// time-scale ratio entirely.
fn homogeneous_coupling_decoupling() -> CriterionResult {
    let mut c = Checker::new(8, "homogeneous coupling makes the exit law ratio-independent");
    let m = 5;
    let q = IntensityMatrix::tridiagonal(m, 1.0).unwrap();
    // Every row sums to 1: the macro clock is Exp(1) at any ratio.
    let coupling = CouplingMatrix::new(m, vec![0.2; m * m]).unwrap();
    let build = |eps: f64| {
        MultiscaleModel::new(
            "two-macro-homogeneous",
            ModelKind::TwoMacro(
                build_two_macro(q.clone(), q.clone(), coupling.clone(), coupling.clone(), eps)
                    .unwrap(),
            ),
        )
    };
    let coarse = build(1.0);
    let fine = build(1e-2);
    let sample_a = sample_exit_times(
        &coarse,
        coarse.default_initial(),
        &SampleSettings::new(REPLICAS, 1008),
    );
    let sample_b = sample_exit_times(
        &fine,
        fine.default_initial(),
        &SampleSettings::new(REPLICAS, 1008).with_offset(REPLICAS as u64),
    );
    c.check(
        sample_a.failures == 0 && sample_b.failures == 0,
        format!("replica failures: {} and {}", sample_a.failures, sample_b.failures),
    );
    let d = two_sample_discrepancy(&sample_a.values, &sample_b.values);
    // Two-sample 1% threshold: 1.63·√((n+m)/(n·m)).
    let threshold = 1.63 * (2.0 / REPLICAS as f64).sqrt();
    c.check(
        d < threshold,
        format!("two-sample KS {d:.5} < {threshold:.5} between eps=1 and eps=1e-2"),
    );
    c.finish()
}

// 9. Total energy is conserved exactly at every jump of every path.
fn energy_conservation() -> CriterionResult {
    let mut c = Checker::new(9, "total energy conserved exactly along every path");
    let model = energy_s43(1e-2).unwrap();
    let ModelKind::Energy(em) = model.kind() else { unreachable!() };
    let start = model.default_initial();
    let total0 = em.total_energy(start);
    let mut worst_events = 0usize;
    let mut violations = 0usize;
    for replica in 0..100u64 {
        let mut rng = RngStream::new(1009, replica);
        match simulate(em.generator(), start, 50.0, &mut rng, MAX_EVENTS) {
            Ok(tr) => {
                worst_events = worst_events.max(tr.n_events());
                for &(_, s) in &tr.events {
                    if em.total_energy(s) != total0 {
                        violations += 1;
                    }
                }
            }
            Err(e) => c.fail(format!("replica {replica}: {e}")),
        }
    }
    c.check(
        violations == 0,
        format!("0 violations over 100 paths (longest path {worst_events} events)"),
    );
    c.finish()
}

// 10. The stationary solver agrees with an independent SVD nullspace
// computation, and leaves tiny residuals on every preset block.
fn stationary_solver_oracle() -> CriterionResult {
    let mut c = Checker::new(10, "stationary solver matches an independent nullspace oracle");
    let mut rng = RngStream::new(1010, 0);
    let mut tested = 0usize;
    let mut max_gap: f64 = 0.0;
    while tested < 100 {
        let dim = 2 + rng.pick(5);
        let q = random_irreducible(dim, &mut rng);
        let support: Vec<StateIndex> = (0..dim).collect();
        let pi = match invariant_measure(&q, &support) {
            Ok(pi) => pi,
            Err(e) => {
                c.fail(format!("random matrix {tested} (dim {dim}): {e}"));
                break;
            }
        };
        let oracle = svd_nullspace_measure(&q);
        for i in 0..dim {
            max_gap = max_gap.max((pi.get(i) - oracle[i]).abs());
        }
        tested += 1;
    }
    c.check(
        tested == 100 && max_gap < 1e-9,
        format!("max entrywise gap vs SVD nullspace over {tested} random matrices: {max_gap:.3e}"),
    );

    // Residuals of the preset internal blocks.
    let mut presets: Vec<(String, IntensityMatrix, Vec<StateIndex>)> = Vec::new();
    for m in [3usize, 5, 7, 20] {
        let model = two_macro_s23(m, 1.0, 1.0, 1.0).unwrap();
        let ModelKind::TwoMacro(tm) = model.kind() else { unreachable!() };
        presets.push((format!("two-macro m={m}"), tm.q0().clone(), (0..m).collect()));
    }
    let ring = ring_s32(1.0).unwrap();
    let ModelKind::Ring(r) = ring.kind() else { unreachable!() };
    presets.push(("ring".into(), r.q().clone(), (0..5).collect()));
    let energy = energy_s43(1.0).unwrap();
    let ModelKind::Energy(em) = energy.kind() else { unreachable!() };
    presets.push(("energy level 1".into(), em.q().clone(), em.class(1.0)));
    for (label, q, support) in presets {
        match invariant_measure(&q, &support) {
            Ok(pi) => {
                let res = stationary_residual(&q, &support, pi.weights());
                c.check(res < 1e-12, format!("{label}: residual {res:.3e} < 1e-12"));
            }
            Err(e) => c.fail(format!("{label}: {e}")),
        }
    }
    c.finish()
}

// 11. The whole sweep pipeline is byte-deterministic.
fn sweep_determinism() -> CriterionResult {
    let mut c = Checker::new(11, "sweep output is byte-identical across reruns");
    let model = two_macro_s23(5, 1.0, 1.0, 1.0).unwrap();
    let settings = SweepSettings {
        epsilons: vec![1.0, 0.1],
        replica_count: 2000,
        seed: 1011,
        max_events: MAX_EVENTS,
        bin_width: 0.05,
        num_bins: 100,
        weighting: L1Weighting::Riemann,
    };
    let render = || -> crate::Result<(String, Vec<String>)> {
        let report = sweep(&model, None, &settings)?;
        let sweep_text = sweep_csv(&report, &["determinism check".into()]);
        let hist_text: Vec<String> = report
            .rows
            .iter()
            .map(|row| {
                crate::stats::histogram_csv(
                    &row.histogram,
                    &[format!("epsilon = {}", row.epsilon)],
                )
            })
            .collect();
        Ok((sweep_text, hist_text))
    };
    match (render(), render()) {
        (Ok(a), Ok(b)) => {
            c.check(a.0 == b.0, format!("sweep CSV identical ({} bytes)", a.0.len()));
            c.check(a.1 == b.1, format!("{} histogram CSVs identical", a.1.len()));
        }
        (Err(e), _) | (_, Err(e)) => c.fail(format!("sweep: {e}")),
    }
    c.finish()
}

/// Random intensity matrix guaranteed irreducible: a random cycle over all
/// states plus sparse extra entries.
fn random_irreducible(dim: usize, rng: &mut RngStream) -> IntensityMatrix {
    loop {
        let mut order: Vec<usize> = (0..dim).collect();
        for i in (1..dim).rev() {
            order.swap(i, rng.pick(i + 1));
        }
        let mut triplets = Vec::new();
        for w in 0..dim {
            let from = order[w];
            let to = order[(w + 1) % dim];
            triplets.push((from, to, rng.uniform_in(0.1, 10.0)));
        }
        for i in 0..dim {
            for j in 0..dim {
                if i != j && rng.uniform() < 0.3 {
                    triplets.push((i, j, rng.uniform_in(0.0, 5.0)));
                }
            }
        }
        let q = IntensityMatrix::from_triplets(dim, &triplets).unwrap();
        if is_irreducible(&q, &(0..dim).collect::<Vec<_>>()) {
            return q;
        }
    }
}

/// Independent oracle: normalized left-nullspace of `Q - Δ` from a dense
/// SVD, a different algebraic route than the solver's normalized LU solve.
fn svd_nullspace_measure(q: &IntensityMatrix) -> Vec<f64> {
    let dim = q.dim();
    // Columns of A are the balance equations: A = (Q - Δ)^T.
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let v = if i == j { -q.exit_rate(i) } else { q.rate(j, i) };
            a[(i, j)] = v;
        }
    }
    // A π = 0, so π is the right singular vector of A for the smallest
    // singular value.
    let svd = a.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let smallest = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let null: Vec<f64> = (0..dim).map(|j| v_t[(smallest, j)]).collect();
    let total: f64 = null.iter().sum();
    null.iter().map(|&x| x / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_oracle_on_a_known_chain() {
        let q = IntensityMatrix::from_triplets(2, &[(0, 1, 10.0), (1, 0, 1.0)]).unwrap();
        let pi = svd_nullspace_measure(&q);
        assert!((pi[0] - 1.0 / 11.0).abs() < 1e-12);
        assert!((pi[1] - 10.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn random_irreducible_matrices_are_irreducible() {
        let mut rng = RngStream::new(77, 0);
        for _ in 0..20 {
            let dim = 2 + rng.pick(5);
            let q = random_irreducible(dim, &mut rng);
            assert!(is_irreducible(&q, &(0..dim).collect::<Vec<_>>()));
        }
    }

    #[test]
    fn unknown_criterion_fails_cleanly() {
        let r = run_criterion(99);
        assert!(!r.passed);
    }
}
