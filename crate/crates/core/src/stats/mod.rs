//! Statistical harness: exit-time sampling, moment estimates with
//! confidence intervals, histogram densities, error metrics against the
//! limit law, jump-amplitude tallies, the martingale-residual diagnostic,
//! and scale-separation sweeps.
//!
//! Replicas are embarrassingly parallel. Replica `r` of a run owns stream
//! `stream_offset + r` of the seeded generator and results are reduced in
//! replica order, so every number here is independent of scheduling.

mod export;

pub use export::{histogram_csv, sweep_csv};

use rayon::prelude::*;

use crate::ctmc::{first_hit, simulate, JumpKernel, RngStream, StateIndex, DEFAULT_MAX_EVENTS};
use crate::effective::{derive, EffectiveDynamics, LimitProcess};
use crate::error::{Error, Result};
use crate::models::{ModelKind, MultiscaleModel};

/// Replica layout of one sampling run.
#[derive(Debug, Clone)]
pub struct SampleSettings {
    pub replica_count: usize,
    pub seed: u64,
    /// First stream id; replica `r` uses `stream_offset + r`.
    pub stream_offset: u64,
    pub max_events: u64,
}

impl SampleSettings {
    pub fn new(replica_count: usize, seed: u64) -> Self {
        Self { replica_count, seed, stream_offset: 0, max_events: DEFAULT_MAX_EVENTS }
    }

    pub fn with_offset(mut self, stream_offset: u64) -> Self {
        self.stream_offset = stream_offset;
        self
    }

    pub fn with_max_events(mut self, max_events: u64) -> Self {
        self.max_events = max_events;
        self
    }
}

/// I.i.d. first-exit-time draws. Replicas that exhausted their event budget
/// (or got trapped in an absorbing state) are excluded from `values` and
/// counted in `failures` — silent censoring would bias the tails.
#[derive(Debug, Clone)]
pub struct ExitTimeSample {
    pub values: Vec<f64>,
    pub epsilon: f64,
    pub model_id: String,
    pub initial_state: StateIndex,
    pub replica_count: usize,
    pub failures: usize,
}

impl ExitTimeSample {
    pub fn failure_fraction(&self) -> f64 {
        self.failures as f64 / self.replica_count.max(1) as f64
    }
}

fn run_first_hits<K: JumpKernel + Sync + ?Sized>(
    kernel: &K,
    initial: StateIndex,
    is_exit: impl Fn(StateIndex) -> bool + Sync,
    settings: &SampleSettings,
) -> Vec<Result<(f64, StateIndex)>> {
    (0..settings.replica_count)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(settings.seed, settings.stream_offset + r as u64);
            first_hit(kernel, initial, &is_exit, &mut rng, settings.max_events)
        })
        .collect()
}

/// Sample the first time the slow observable leaves its initial value.
pub fn sample_exit_times(
    model: &MultiscaleModel,
    initial: StateIndex,
    settings: &SampleSettings,
) -> ExitTimeSample {
    let kernel = model.kernel();
    let start_obs = model.slow_observable(initial);
    let outcomes = run_first_hits(
        &kernel,
        initial,
        |s| model.slow_observable(s) != start_obs,
        settings,
    );
    let mut values = Vec::with_capacity(outcomes.len());
    let mut failures = 0;
    for outcome in outcomes {
        match outcome {
            Ok((t, _)) => values.push(t),
            Err(_) => failures += 1,
        }
    }
    ExitTimeSample {
        values,
        epsilon: model.epsilon(),
        model_id: model.name().to_string(),
        initial_state: initial,
        replica_count: settings.replica_count,
        failures,
    }
}

/// Exit-time draws from a limit process itself (every jump of a limit chain
/// or walk changes the slow variable, so this is the first jump time).
/// Establishes the harness noise floor.
pub fn sample_exit_times_limit(
    limit: &LimitProcess,
    initial: StateIndex,
    settings: &SampleSettings,
) -> ExitTimeSample {
    let outcomes = run_first_hits(limit, initial, |s| s != initial, settings);
    let mut values = Vec::with_capacity(outcomes.len());
    let mut failures = 0;
    for outcome in outcomes {
        match outcome {
            Ok((t, _)) => values.push(t),
            Err(_) => failures += 1,
        }
    }
    ExitTimeSample {
        values,
        epsilon: 0.0,
        model_id: "limit".to_string(),
        initial_state: initial,
        replica_count: settings.replica_count,
        failures,
    }
}

/// Sample moments with 95% confidence intervals. The mean interval is the
/// usual normal approximation; the variance interval is a delta-method
/// approximation driven by the empirical fourth central moment.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub mean: f64,
    pub variance: f64,
    pub ci95_mean: (f64, f64),
    pub ci95_variance: (f64, f64),
    pub n_samples: usize,
}

impl MomentReport {
    /// Standard error of the mean.
    pub fn se_mean(&self) -> f64 {
        (self.ci95_mean.1 - self.mean) / 1.96
    }
}

pub fn moments(values: &[f64]) -> Result<MomentReport> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let variance = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    let m4 = values.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
    let se_mean = (variance / nf).sqrt();
    let se_var = ((m4 - variance * variance).max(0.0) / nf).sqrt();
    Ok(MomentReport {
        mean,
        variance,
        ci95_mean: (mean - 1.96 * se_mean, mean + 1.96 * se_mean),
        ci95_variance: (variance - 1.96 * se_var, variance + 1.96 * se_var),
        n_samples: n,
    })
}

/// Histogram density on `[0, num_bins·bin_width)` plus the mass beyond it.
/// `densities[i]` estimates the density on `[i·Δx, (i+1)·Δx)`, so bin mass
/// plus tail mass is exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    pub num_bins: usize,
    pub densities: Vec<f64>,
    pub tail_mass: f64,
    pub n_samples: usize,
}

pub fn histogram(values: &[f64], bin_width: f64, num_bins: usize) -> Histogram {
    assert!(bin_width > 0.0, "bin_width must be positive");
    let mut counts = vec![0u64; num_bins];
    let mut tail = 0u64;
    for &v in values {
        let bin = (v / bin_width).floor();
        if bin >= 0.0 && (bin as usize) < num_bins {
            counts[bin as usize] += 1;
        } else {
            tail += 1;
        }
    }
    let n = values.len();
    let denom = (n as f64) * bin_width;
    let densities = counts
        .iter()
        .map(|&c| if n == 0 { 0.0 } else { c as f64 / denom })
        .collect();
    Histogram {
        bin_width,
        num_bins,
        densities,
        tail_mass: if n == 0 { 0.0 } else { tail as f64 / n as f64 },
        n_samples: n,
    }
}

/// Weight convention for [`l1_error`]: `Riemann` weights each term by `Δx`
/// (a Riemann sum of the L¹ distance); `PaperLiteral` weights by `1/n`.
/// With `Δx = 0.05`, `n = 100` the two differ by a constant factor of 5;
/// comparisons across scale ratios are invariant to the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L1Weighting {
    Riemann,
    PaperLiteral,
}

impl L1Weighting {
    pub fn as_str(&self) -> &'static str {
        match self {
            L1Weighting::Riemann => "riemann",
            L1Weighting::PaperLiteral => "paper-literal",
        }
    }
}

/// Weighted L¹ mismatch between the histogram and the exponential density
/// of parameter `rate`, the reference evaluated at right bin endpoints
/// `i·Δx`, `i = 1..=n`.
pub fn l1_error(hist: &Histogram, rate: f64, weighting: L1Weighting) -> f64 {
    assert!(rate > 0.0, "rate must be positive");
    let w = match weighting {
        L1Weighting::Riemann => hist.bin_width,
        L1Weighting::PaperLiteral => 1.0 / hist.num_bins as f64,
    };
    (1..=hist.num_bins)
        .map(|i| {
            let x = i as f64 * hist.bin_width;
            let reference = rate * (-rate * x).exp();
            w * (reference - hist.densities[i - 1]).abs()
        })
        .sum()
}

/// Exact Kolmogorov–Smirnov statistic of the sample against the exponential
/// law of parameter `rate`: the supremum CDF gap, attained at sample points
/// and checked from both sides. An empty sample is maximally distant.
pub fn discrepancy(values: &[f64], rate: f64) -> f64 {
    assert!(rate > 0.0, "rate must be positive");
    if values.is_empty() {
        return 1.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = 1.0 - (-rate * x).exp();
        let above = (i as f64 + 1.0) / n - cdf;
        let below = cdf - i as f64 / n;
        sup = sup.max(above.abs()).max(below.abs());
    }
    sup
}

/// Two-sample Kolmogorov–Smirnov statistic: the supremum gap between the
/// empirical CDFs, evaluated by merging the sorted samples.
pub fn two_sample_discrepancy(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "both samples must be nonempty");
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup: f64 = 0.0;
    while i < xs.len() || j < ys.len() {
        let t = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}

/// Tally of the macro displacement at the first macro jump of the lattice
/// model (always ±1 by construction).
#[derive(Debug, Clone, PartialEq)]
pub struct JumpAmplitude {
    pub plus: usize,
    pub minus: usize,
    pub failures: usize,
}

impl JumpAmplitude {
    pub fn n(&self) -> usize {
        self.plus + self.minus
    }

    pub fn p_plus(&self) -> f64 {
        self.plus as f64 / self.n().max(1) as f64
    }

    pub fn p_minus(&self) -> f64 {
        self.minus as f64 / self.n().max(1) as f64
    }

    pub fn mean(&self) -> f64 {
        self.p_plus() - self.p_minus()
    }

    /// Standard error of the displacement mean (a rescaled Bernoulli).
    pub fn se_mean(&self) -> f64 {
        2.0 * (self.p_plus() * self.p_minus() / self.n().max(1) as f64).sqrt()
    }
}

/// Empirical law of the first macro displacement, one first hit per replica.
pub fn jump_amplitude(
    model: &MultiscaleModel,
    initial: StateIndex,
    settings: &SampleSettings,
) -> Result<JumpAmplitude> {
    let ModelKind::Ring(ring) = model.kind() else {
        return Err(Error::InvalidConfig(
            "jump amplitudes are defined for the ring model".into(),
        ));
    };
    let z0 = ring.decode(initial).1;
    let outcomes = run_first_hits(ring, initial, |s| ring.decode(s).1 != z0, settings);
    tally_amplitudes(outcomes.into_iter().map(|o| o.map(|(_, s)| ring.decode(s).1 - z0)))
}

fn tally_amplitudes(deltas: impl Iterator<Item = Result<i64>>) -> Result<JumpAmplitude> {
    let mut tally = JumpAmplitude { plus: 0, minus: 0, failures: 0 };
    for d in deltas {
        match d {
            Ok(1) => tally.plus += 1,
            Ok(-1) => tally.minus += 1,
            Ok(other) => {
                return Err(Error::InvalidConfig(format!(
                    "macro displacement {other} at first jump; expected ±1"
                )))
            }
            Err(_) => tally.failures += 1,
        }
    }
    Ok(tally)
}

/// Moments of the martingale residual of the macro variable, plus the mean
/// of its quadratic-variation integral along the same paths.
#[derive(Debug, Clone)]
pub struct MartingaleDiagnostic {
    pub residual: MomentReport,
    /// Mean of `∫ (coupling exit rate at the current micro-state) ds` over
    /// the sampled paths: the predictable quadratic variation, which the
    /// residual's variance must match.
    pub mean_quadratic_variation: f64,
    pub failures: usize,
}

/// For each replica, simulate to `horizon` and compute the macro variable
/// minus its compensator,
/// `M_T = Z_T - Z_0 - ∫ c̄(X_s, Z_s) (1 - 2 Z_s) ds`,
/// by exact piecewise-constant quadrature (the integrand is constant
/// between jumps). `M_T` has zero mean at every time-scale ratio; its
/// sample moments are a correctness diagnostic for the whole simulator.
pub fn martingale_residual(
    model: &MultiscaleModel,
    initial: StateIndex,
    horizon: f64,
    settings: &SampleSettings,
) -> Result<MartingaleDiagnostic> {
    let ModelKind::TwoMacro(tm) = model.kind() else {
        return Err(Error::InvalidConfig(
            "the martingale residual diagnostic applies to the two-macro model".into(),
        ));
    };
    let outcomes: Vec<Result<(f64, f64)>> = (0..settings.replica_count)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(settings.seed, settings.stream_offset + r as u64);
            let tr = simulate(tm.generator(), initial, horizon, &mut rng, settings.max_events)?;
            let z0 = tm.macro_of(initial) as f64;
            let mut drift = 0.0;
            let mut qv = 0.0;
            for (t0, t1, s) in tr.segments() {
                let (x, z) = tm.decode(s);
                let cbar = tm.coupling_row_sum(x, z);
                let dt = t1 - t0;
                drift += cbar * (1.0 - 2.0 * z as f64) * dt;
                qv += cbar * dt;
            }
            let z_final = tm.macro_of(tr.final_state()) as f64;
            Ok((z_final - z0 - drift, qv))
        })
        .collect();

    let mut residuals = Vec::with_capacity(outcomes.len());
    let mut qv_sum = 0.0;
    let mut failures = 0;
    for outcome in outcomes {
        match outcome {
            Ok((m, qv)) => {
                residuals.push(m);
                qv_sum += qv;
            }
            Err(_) => failures += 1,
        }
    }
    let residual = moments(&residuals)?;
    Ok(MartingaleDiagnostic {
        residual,
        mean_quadratic_variation: qv_sum / residuals.len().max(1) as f64,
        failures,
    })
}

/// Sweep configuration over a list of time-scale ratios.
#[derive(Debug, Clone)]
pub struct SweepSettings {
    pub epsilons: Vec<f64>,
    pub replica_count: usize,
    pub seed: u64,
    pub max_events: u64,
    pub bin_width: f64,
    pub num_bins: usize,
    pub weighting: L1Weighting,
}

impl SweepSettings {
    pub fn new(epsilons: Vec<f64>, replica_count: usize, seed: u64) -> Self {
        Self {
            epsilons,
            replica_count,
            seed,
            max_events: DEFAULT_MAX_EVENTS,
            bin_width: 0.05,
            num_bins: 100,
            weighting: L1Weighting::Riemann,
        }
    }
}

/// One sweep row: every statistic of the exit-time sample at one ratio.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub epsilon: f64,
    pub moments: Option<MomentReport>,
    pub histogram: Histogram,
    pub l1_error: f64,
    pub discrepancy: f64,
    pub jump: Option<JumpAmplitude>,
    pub failures: usize,
    pub fail_frac: f64,
}

/// Sweep output: rows sorted by decreasing ratio, against the analytic exit
/// rate of the limit dynamics from the chosen initial condition.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub model_name: String,
    pub initial_label: String,
    pub seed: u64,
    pub replica_count: usize,
    pub limit_rate: f64,
    pub weighting: L1Weighting,
    pub rows: Vec<SweepRow>,
}

/// Analytic exit rate of the limit dynamics out of the slow value taken at
/// `initial`.
pub fn limit_exit_rate(model: &MultiscaleModel, initial: StateIndex) -> Result<f64> {
    let eff = match model.kind() {
        ModelKind::Energy(m) => derive(model, Some(m.total_energy(initial)))?,
        _ => derive(model, None)?,
    };
    Ok(match (&eff, model.kind()) {
        (EffectiveDynamics::TwoMacro { rate_to_1, rate_to_0 }, ModelKind::TwoMacro(tm)) => {
            if tm.macro_of(initial) == 0 {
                *rate_to_1
            } else {
                *rate_to_0
            }
        }
        (EffectiveDynamics::Ring { rate_left, rate_right }, _) => rate_left + rate_right,
        (EffectiveDynamics::Energy { levels, rates, .. }, ModelKind::Energy(m)) => {
            let e0 = m.first_energy(initial);
            let idx = levels
                .iter()
                .position(|&l| (l - e0).abs() <= m.energy_tol())
                .ok_or(Error::InadmissibleEnergy { energy: e0 })?;
            rates.exit_rate(idx)
        }
        _ => unreachable!("derive matches the model kind"),
    })
}

/// Run the full per-ratio pipeline: exit-time sampling, moments, histogram,
/// L¹ error and discrepancy against the analytic limit rate, and (for the
/// lattice model) the first-jump displacement law. Per-replica failures are
/// recorded in the row, never fatal. Rows use disjoint stream-id blocks, so
/// the whole report is reproducible from `(settings, seed)` alone.
pub fn sweep(
    base_model: &MultiscaleModel,
    initial_pair: Option<(i64, i64)>,
    settings: &SweepSettings,
) -> Result<SweepReport> {
    if settings.epsilons.is_empty() {
        return Err(Error::InvalidConfig("epsilon list must be nonempty".into()));
    }
    if settings.epsilons.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidConfig("epsilons must be positive and finite".into()));
    }
    let mut epsilons = settings.epsilons.clone();
    epsilons.sort_by(|a, b| b.partial_cmp(a).unwrap());
    epsilons.dedup();

    let base_initial = match initial_pair {
        Some((a, b)) => base_model.state_from_pair(a, b)?,
        None => base_model.default_initial(),
    };
    let limit_rate = limit_exit_rate(base_model, base_initial)?;

    let mut rows = Vec::with_capacity(epsilons.len());
    for (row_idx, &epsilon) in epsilons.iter().enumerate() {
        let model = base_model.at_epsilon(epsilon)?;
        let initial = match initial_pair {
            Some((a, b)) => model.state_from_pair(a, b)?,
            None => model.default_initial(),
        };
        let row_settings = SampleSettings {
            replica_count: settings.replica_count,
            seed: settings.seed,
            stream_offset: (row_idx * settings.replica_count) as u64,
            max_events: settings.max_events,
        };

        // One first-hit run per replica feeds both the exit time and, for
        // the lattice model, the displacement tally.
        let kernel = model.kernel();
        let start_obs = model.slow_observable(initial);
        let outcomes = run_first_hits(
            &kernel,
            initial,
            |s| model.slow_observable(s) != start_obs,
            &row_settings,
        );
        let mut values = Vec::with_capacity(outcomes.len());
        let mut failures = 0usize;
        for outcome in &outcomes {
            match outcome {
                Ok((t, _)) => values.push(*t),
                Err(_) => failures += 1,
            }
        }
        let jump = match model.kind() {
            ModelKind::Ring(ring) => {
                let z0 = ring.decode(initial).1;
                Some(tally_amplitudes(outcomes.iter().map(|o| {
                    o.as_ref()
                        .map(|&(_, s)| ring.decode(s).1 - z0)
                        .map_err(|e| e.clone())
                }))?)
            }
            _ => None,
        };

        let hist = histogram(&values, settings.bin_width, settings.num_bins);
        rows.push(SweepRow {
            epsilon,
            moments: moments(&values).ok(),
            l1_error: l1_error(&hist, limit_rate, settings.weighting),
            discrepancy: discrepancy(&values, limit_rate),
            histogram: hist,
            jump,
            failures,
            fail_frac: failures as f64 / settings.replica_count.max(1) as f64,
        });
    }

    Ok(SweepReport {
        model_name: base_model.name().to_string(),
        initial_label: base_model.label(base_initial),
        seed: settings.seed,
        replica_count: settings.replica_count,
        limit_rate,
        weighting: settings.weighting,
        rows,
    })
}
