//! Exact stochastic simulation of finite-rate continuous-time Markov jump
//! processes with reproducible randomness.
//!
//! A jump process sits in a state for an exponential waiting time with the
//! state's total exit rate as parameter, then jumps to a target chosen with
//! probability proportional to its rate. Simulation here is exact (no
//! tau-leaping): every jump is realized.

mod matrix;
mod rng;

pub use matrix::{IntensityMatrix, StateIndex};
pub use rng::RngStream;

use std::io::{self, Write};

use crate::error::{Error, Result};

/// Rate data of a jump process, row by row. Finite generators are backed by
/// an [`IntensityMatrix`]; unbounded ones (the lattice of macro-states)
/// materialize rows on demand.
pub trait JumpKernel {
    /// Total exit rate out of `state`. Zero marks an absorbing state.
    fn exit_rate(&self, state: StateIndex) -> f64;

    /// Clears `out` and fills it with `(target, rate)` pairs, rate > 0.
    /// The order must be deterministic: target selection scans it.
    fn transitions(&self, state: StateIndex, out: &mut Vec<(StateIndex, f64)>);
}

impl JumpKernel for IntensityMatrix {
    #[inline]
    fn exit_rate(&self, state: StateIndex) -> f64 {
        IntensityMatrix::exit_rate(self, state)
    }

    fn transitions(&self, state: StateIndex, out: &mut Vec<(StateIndex, f64)>) {
        out.clear();
        out.extend(
            self.row(state)
                .iter()
                .enumerate()
                .filter(|(_, &r)| r > 0.0)
                .map(|(j, &r)| (j, r)),
        );
    }
}

/// Ordered jump events of one simulated path. The path is right continuous:
/// the process holds `initial_state` on `[0, t_1)`, then the state of event
/// `k` on `[t_k, t_{k+1})`, and the last state up to `horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial_state: StateIndex,
    /// `(jump_time, new_state)`, times strictly increasing, all ≤ `horizon`.
    pub events: Vec<(f64, StateIndex)>,
    pub horizon: f64,
    /// Set when the path entered a zero-exit-rate state and stopped evolving.
    pub absorbed: bool,
}

impl Trajectory {
    pub fn n_events(&self) -> usize {
        self.events.len()
    }

    pub fn final_state(&self) -> StateIndex {
        self.events.last().map_or(self.initial_state, |&(_, s)| s)
    }

    pub fn final_time(&self) -> f64 {
        self.events.last().map_or(0.0, |&(t, _)| t)
    }

    /// Piecewise-constant segments `(t_start, t_end, state)` covering
    /// `[0, horizon]`. Zero-length final segments are skipped.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, StateIndex)> + '_ {
        let starts = std::iter::once((0.0, self.initial_state)).chain(self.events.iter().copied());
        let ends = self
            .events
            .iter()
            .map(|&(t, _)| t)
            .chain(std::iter::once(self.horizon));
        starts
            .zip(ends)
            .filter(|&((t0, _), t1)| t1 > t0)
            .map(|((t0, s), t1)| (t0, t1, s))
    }

    /// Fraction of `[0, horizon]` spent in each of `dim` states.
    pub fn occupation_fractions(&self, dim: usize) -> Vec<f64> {
        let mut occ = vec![0.0; dim];
        for (t0, t1, s) in self.segments() {
            occ[s] += t1 - t0;
        }
        if self.horizon > 0.0 {
            for o in &mut occ {
                *o /= self.horizon;
            }
        }
        occ
    }

    /// CSV export, header `t,state_index,label`; times carry 17 significant
    /// digits so replays are bit-faithful.
    pub fn write_csv<W: Write>(
        &self,
        w: &mut W,
        label: impl Fn(StateIndex) -> String,
    ) -> io::Result<()> {
        writeln!(w, "t,state_index,label")?;
        writeln!(w, "{:.16e},{},\"{}\"", 0.0, self.initial_state, label(self.initial_state))?;
        for &(t, s) in &self.events {
            writeln!(w, "{t:.16e},{s},\"{}\"", label(s))?;
        }
        Ok(())
    }
}

/// Total exit rate of state `i` under `q`.
pub fn exit_rate(q: &IntensityMatrix, i: StateIndex) -> f64 {
    q.exit_rate(i)
}

#[inline]
fn pick_target<K: JumpKernel + ?Sized>(
    kernel: &K,
    state: StateIndex,
    total: f64,
    rng: &mut RngStream,
    buf: &mut Vec<(StateIndex, f64)>,
) -> Result<StateIndex> {
    kernel.transitions(state, buf);
    let u = rng.uniform() * total;
    let mut acc = 0.0;
    for &(j, r) in buf.iter() {
        acc += r;
        if u < acc {
            return Ok(j);
        }
    }
    // Roundoff can leave u a hair above the accumulated sum.
    buf.last()
        .map(|&(j, _)| j)
        .ok_or(Error::AbsorbingState { state })
}

/// One exact step: exponential waiting time with the total exit rate, then a
/// jump target drawn proportionally to the row rates.
pub fn sample_next<K: JumpKernel + ?Sized>(
    kernel: &K,
    state: StateIndex,
    rng: &mut RngStream,
) -> Result<(f64, StateIndex)> {
    let total = kernel.exit_rate(state);
    if total <= 0.0 {
        return Err(Error::AbsorbingState { state });
    }
    let wait = rng.exponential(total);
    let mut buf = Vec::new();
    let next = pick_target(kernel, state, total, rng, &mut buf)?;
    Ok((wait, next))
}

/// Simulate a path from `start` until its next jump would land past
/// `horizon`. Entering an absorbing state ends the path with the `absorbed`
/// flag set; exceeding `max_events` is an error (the cost blowup of small
/// time-scale separation should fail loudly, not silently truncate).
pub fn simulate<K: JumpKernel + ?Sized>(
    kernel: &K,
    start: StateIndex,
    horizon: f64,
    rng: &mut RngStream,
    max_events: u64,
) -> Result<Trajectory> {
    if !(horizon >= 0.0) {
        return Err(Error::InvalidConfig(format!("horizon must be >= 0, got {horizon}")));
    }
    let mut t = 0.0;
    let mut state = start;
    let mut events = Vec::new();
    let mut absorbed = false;
    let mut buf = Vec::new();
    loop {
        let total = kernel.exit_rate(state);
        if total <= 0.0 {
            absorbed = true;
            break;
        }
        let t_next = t + rng.exponential(total);
        if t_next > horizon {
            break;
        }
        if events.len() as u64 >= max_events {
            return Err(Error::EventBudgetExceeded { events: events.len() as u64 });
        }
        state = pick_target(kernel, state, total, rng, &mut buf)?;
        t = t_next;
        events.push((t, state));
    }
    Ok(Trajectory { initial_state: start, events, horizon, absorbed })
}

/// First time the path enters a state satisfying `target`, together with
/// that state. Runs with no horizon, only the event budget.
pub fn first_hit<K: JumpKernel + ?Sized>(
    kernel: &K,
    start: StateIndex,
    target: impl Fn(StateIndex) -> bool,
    rng: &mut RngStream,
    max_events: u64,
) -> Result<(f64, StateIndex)> {
    if target(start) {
        return Ok((0.0, start));
    }
    let mut t = 0.0;
    let mut state = start;
    let mut count: u64 = 0;
    let mut buf = Vec::new();
    loop {
        let total = kernel.exit_rate(state);
        if total <= 0.0 {
            return Err(Error::AbsorbingState { state });
        }
        if count >= max_events {
            return Err(Error::EventBudgetExceeded { events: count });
        }
        t += rng.exponential(total);
        state = pick_target(kernel, state, total, rng, &mut buf)?;
        count += 1;
        if target(state) {
            return Ok((t, state));
        }
    }
}

/// See [`first_hit`]; returns only the hitting time.
pub fn first_hit_time<K: JumpKernel + ?Sized>(
    kernel: &K,
    start: StateIndex,
    target: impl Fn(StateIndex) -> bool,
    rng: &mut RngStream,
    max_events: u64,
) -> Result<f64> {
    first_hit(kernel, start, target, rng, max_events).map(|(t, _)| t)
}

/// Default per-path event budget: generous enough for every model shipped
/// here, small enough to catch runaway time-scale ratios.
pub const DEFAULT_MAX_EVENTS: u64 = 100_000_000;

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(rate01: f64, rate10: f64) -> IntensityMatrix {
        IntensityMatrix::from_rows(&[vec![0.0, rate01], vec![rate10, 0.0]]).unwrap()
    }

    #[test]
    fn exit_rate_tridiagonal_interior() {
        let q = IntensityMatrix::tridiagonal(5, 1.0).unwrap();
        assert_eq!(exit_rate(&q, 2), 2.0);
    }

    #[test]
    fn exit_rate_absorbing_row() {
        let q = IntensityMatrix::from_triplets(3, &[(1, 0, 2.0)]).unwrap();
        assert_eq!(exit_rate(&q, 0), 0.0);
        assert_eq!(exit_rate(&q, 2), 0.0);
    }

    #[test]
    fn sample_next_forced_target_and_mean() {
        // Single open channel: the target is always state 1, and the mean
        // waiting time over 1e4 draws sits within 3·(1/λ)/√1e4 of 1/λ.
        let rate = 2.5;
        let q = two_state(rate, 0.0);
        let mut rng = RngStream::new(11, 0);
        let n = 10_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let (w, next) = sample_next(&q, 0, &mut rng).unwrap();
            assert_eq!(next, 1);
            sum += w;
        }
        let mean = sum / n as f64;
        let tol = 3.0 * (1.0 / rate) / (n as f64).sqrt();
        assert!((mean - 1.0 / rate).abs() < tol, "mean {mean}");
    }

    #[test]
    fn sample_next_deterministic() {
        let q = IntensityMatrix::tridiagonal(4, 1.0).unwrap();
        let a = sample_next(&q, 1, &mut RngStream::new(5, 3)).unwrap();
        let b = sample_next(&q, 1, &mut RngStream::new(5, 3)).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn sample_next_target_frequencies() {
        // Row rates (2, 1, 1) out of state 0: P(next = 1) = 0.5 within
        // 3 binomial standard errors over 1e4 draws.
        let q = IntensityMatrix::from_triplets(4, &[(0, 1, 2.0), (0, 2, 1.0), (0, 3, 1.0)])
            .unwrap();
        let mut rng = RngStream::new(12, 0);
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| sample_next(&q, 0, &mut rng).unwrap().1 == 1)
            .count();
        let p_hat = hits as f64 / n as f64;
        let se = (0.5 * 0.5 / n as f64).sqrt();
        assert!((p_hat - 0.5).abs() < 3.0 * se, "p_hat {p_hat}");
    }

    #[test]
    fn sample_next_absorbing_errors() {
        let q = IntensityMatrix::from_triplets(2, &[(1, 0, 1.0)]).unwrap();
        let err = sample_next(&q, 0, &mut RngStream::new(0, 0)).unwrap_err();
        assert_eq!(err, Error::AbsorbingState { state: 0 });
    }

    #[test]
    fn simulate_zero_horizon() {
        let q = two_state(1.0, 1.0);
        let tr = simulate(&q, 0, 0.0, &mut RngStream::new(1, 0), 100).unwrap();
        assert!(tr.events.is_empty());
        assert_eq!(tr.final_state(), 0);
        assert!(!tr.absorbed);
    }

    #[test]
    fn simulate_absorbing_start() {
        let q = IntensityMatrix::from_triplets(2, &[(1, 0, 1.0)]).unwrap();
        let tr = simulate(&q, 0, 10.0, &mut RngStream::new(1, 0), 100).unwrap();
        assert!(tr.events.is_empty());
        assert!(tr.absorbed);
    }

    #[test]
    fn simulate_occupation_of_symmetric_chain() {
        // Stationary measure of the symmetric 2-state chain is uniform.
        let q = two_state(1.0, 1.0);
        let tr = simulate(&q, 0, 1e4, &mut RngStream::new(2, 0), 10_000_000).unwrap();
        let occ = tr.occupation_fractions(2);
        assert!((occ[0] - 0.5).abs() < 0.05, "occ {occ:?}");
    }

    #[test]
    fn simulate_event_budget() {
        let q = two_state(1.0, 1.0);
        let err = simulate(&q, 0, 1e9, &mut RngStream::new(1, 0), 16).unwrap_err();
        assert_eq!(err, Error::EventBudgetExceeded { events: 16 });
    }

    #[test]
    fn simulate_byte_identical_for_identical_inputs() {
        let q = IntensityMatrix::tridiagonal(6, 0.7).unwrap();
        let a = simulate(&q, 3, 200.0, &mut RngStream::new(77, 5), 1 << 20).unwrap();
        let b = simulate(&q, 3, 200.0, &mut RngStream::new(77, 5), 1 << 20).unwrap();
        assert_eq!(a, b);
        for (&(ta, _), &(tb, _)) in a.events.iter().zip(&b.events) {
            assert_eq!(ta.to_bits(), tb.to_bits());
        }
    }

    #[test]
    fn trajectory_invariants_hold() {
        let q = IntensityMatrix::tridiagonal(5, 1.3).unwrap();
        let tr = simulate(&q, 0, 50.0, &mut RngStream::new(8, 1), 1 << 20).unwrap();
        let mut prev_t = 0.0;
        let mut prev_s = tr.initial_state;
        for &(t, s) in &tr.events {
            assert!(t > prev_t, "times strictly increasing");
            assert!(t <= tr.horizon);
            assert_ne!(s, prev_s, "no self-jumps");
            assert!(q.rate(prev_s, s) > 0.0, "jump uses a row entry of Q");
            prev_t = t;
            prev_s = s;
        }
    }

    #[test]
    fn first_hit_single_clock() {
        // Exit of a single exponential clock of rate 0.1: empirical mean over
        // 1e4 samples within 3·(1/λ)/√1e4 of 10.
        let q = two_state(0.1, 0.0);
        let n = 10_000;
        let mut sum = 0.0;
        for r in 0..n {
            sum += first_hit_time(&q, 0, |s| s == 1, &mut RngStream::new(21, r), 1 << 20)
                .unwrap();
        }
        let mean = sum / n as f64;
        assert!((mean - 10.0).abs() < 3.0 * 10.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn first_hit_trapped_is_an_error() {
        // 0 -> 1 only, and 1 is absorbing while the target is state 2.
        let q = IntensityMatrix::from_triplets(3, &[(0, 1, 1.0)]).unwrap();
        let err =
            first_hit_time(&q, 0, |s| s == 2, &mut RngStream::new(1, 0), 1 << 10).unwrap_err();
        assert_eq!(err, Error::AbsorbingState { state: 1 });
    }

    #[test]
    fn segments_cover_horizon() {
        let q = two_state(2.0, 2.0);
        let tr = simulate(&q, 0, 7.5, &mut RngStream::new(4, 2), 1 << 20).unwrap();
        let total: f64 = tr.segments().map(|(a, b, _)| b - a).sum();
        assert!((total - 7.5).abs() < 1e-12);
    }

    #[test]
    fn csv_has_header_and_initial_row() {
        let q = two_state(1.0, 1.0);
        let tr = simulate(&q, 0, 1.0, &mut RngStream::new(6, 0), 1 << 20).unwrap();
        let mut out = Vec::new();
        tr.write_csv(&mut out, |s| format!("({s},0)")).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,state_index,label"));
        assert!(lines.next().unwrap().starts_with("0.0000000000000000e0,0,"));
        assert_eq!(text.lines().count(), tr.n_events() + 2);
    }
}
