//! Run classification: synchronization, rotating waves by mode, or neither,
//! checked on trailing windows at regular checkpoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{Dopri5, IntegratorConfig, RunMeta, Trajectory};
use crate::interp;
use crate::network::{FhnNetwork, Topology};

/// Mean neighbour error below which a window counts as synchronized.
pub const SYNC_TOL: f64 = 2e-5;
/// Mean shifted-orbit difference below which neighbour orbits are identical.
pub const ORBIT_TOL: f64 = 1e-4;
/// Bound on `max_j |n τ_j - k T|`.
pub const PHASE_TOL: f64 = 1e-2;
pub const DEFAULT_WINDOW: f64 = 1000.0;
pub const CHECK_INTERVAL: f64 = 1000.0;
pub const DEFAULT_T_FINAL: f64 = 20_000.0;
/// Fraction of the analyzed window used as the converged tail.
const TAIL_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OutcomeKind {
    Sync,
    RotatingWave { mode: usize },
    None,
}

impl OutcomeKind {
    pub fn label(&self) -> &'static str {
        match self {
            OutcomeKind::Sync => "sync",
            OutcomeKind::RotatingWave { .. } => "rotating-wave",
            OutcomeKind::None => "none",
        }
    }

    pub fn mode(&self) -> Option<usize> {
        match self {
            OutcomeKind::RotatingWave { mode } => Some(*mode),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub sync_error: Option<f64>,
    #[serde(rename = "T")]
    pub period: Option<f64>,
    pub tau: Option<f64>,
    pub orbit_mismatch: Option<f64>,
    pub phase_defect: Option<f64>,
    pub checkpoint_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub kind: OutcomeKind,
    pub metrics: Metrics,
}

/// Flat JSON record of one classified run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRecord {
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
    pub sample_index: u64,
    pub kind: String,
    pub mode: Option<usize>,
    #[serde(rename = "T")]
    pub period: Option<f64>,
    pub tau: Option<f64>,
    pub sync_error: Option<f64>,
    pub checkpoint_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Classification {
    pub fn record(&self, n: usize, sigma: f64, seed: u64, sample_index: u64) -> ClassificationRecord {
        ClassificationRecord {
            n,
            sigma,
            seed,
            sample_index,
            kind: self.kind.label().to_string(),
            mode: self.kind.mode(),
            period: self.metrics.period,
            tau: self.metrics.tau,
            sync_error: self.metrics.sync_error,
            checkpoint_time: self.metrics.checkpoint_time,
            note: self.metrics.note.clone(),
        }
    }
}

/// Rotating wave: neighbour `j + 1` repeats node `j` delayed by `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveDescriptor {
    #[serde(rename = "T")]
    pub period: f64,
    pub tau: f64,
    pub mode: usize,
    /// Per-pair shifts `τ_j`, `y_{j+1}(t + τ_j) ≈ y_j(t)`.
    pub shifts: Vec<f64>,
    /// Largest per-pair mean orbit difference.
    pub orbit_mismatch: f64,
    pub phase_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodEstimate {
    pub period: f64,
    /// Standard deviation of the individual cycle lengths over the period.
    pub jitter: f64,
    pub crossings: usize,
    /// Time of the last upward crossing.
    pub last_crossing: f64,
}

/// Period from upward crossings of the signal mean, linearly interpolated
/// between samples.
pub fn estimate_period_detailed(signal: &[f64], t0: f64, dt: f64) -> Result<PeriodEstimate> {
    if signal.len() < 3 || !(dt > 0.0) {
        return Err(Error::NotPeriodic { crossings: 0 });
    }
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    let (lo, hi) = signal
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi - lo > 1e-9 * (1.0 + mean.abs())) {
        return Err(Error::NotPeriodic { crossings: 0 });
    }
    let mut crossings = Vec::new();
    for i in 0..signal.len() - 1 {
        let (a, b) = (signal[i] - mean, signal[i + 1] - mean);
        if a < 0.0 && b >= 0.0 {
            crossings.push(t0 + dt * (i as f64 + a / (a - b)));
        }
    }
    let m = crossings.len();
    if m < 3 {
        return Err(Error::NotPeriodic { crossings: m });
    }
    let period = (crossings[m - 1] - crossings[0]) / (m - 1) as f64;
    let var = crossings
        .windows(2)
        .map(|w| (w[1] - w[0] - period).powi(2))
        .sum::<f64>()
        / (m - 1) as f64;
    Ok(PeriodEstimate {
        period,
        jitter: var.sqrt() / period,
        crossings: m,
        last_crossing: crossings[m - 1],
    })
}

pub fn estimate_period(signal: &[f64], dt: f64) -> Result<f64> {
    estimate_period_detailed(signal, 0.0, dt).map(|e| e.period)
}

fn require_network_layout(traj: &Trajectory) -> Result<usize> {
    if traj.dim() == 0 || traj.dim() % 2 != 0 {
        return Err(Error::InvalidSize(format!(
            "expected a [z, y] network state, got dimension {}",
            traj.dim()
        )));
    }
    Ok(traj.dim() / 2)
}

/// Mean of `|x_to - x_from|` over the trailing `window`, the neighbour pairs
/// and both components.
pub fn sync_error(traj: &Trajectory, pairs: &[(usize, usize)], window: f64) -> Result<f64> {
    let n = require_network_layout(traj)?;
    if !(window > 0.0) {
        return Err(Error::Domain(format!("window must be positive, got {window}")));
    }
    let span = traj.t_end() - traj.t_start();
    if traj.len() < 2 || span < window * (1.0 - 1e-9) {
        return Err(Error::Domain(format!(
            "window {window} longer than trajectory span {span}"
        )));
    }
    if pairs.is_empty() {
        return Ok(0.0);
    }
    if pairs.iter().any(|&(a, b)| a >= n || b >= n) {
        return Err(Error::InvalidSize("neighbour pair outside the network".into()));
    }
    let start = traj
        .times()
        .partition_point(|&t| t < traj.t_end() - window - 1e-9 * traj.dt());
    let mut acc = 0.0;
    for i in start..traj.len() {
        let x = traj.state(i);
        for &(a, b) in pairs {
            acc += (x[b] - x[a]).abs() + (x[n + b] - x[n + a]).abs();
        }
    }
    Ok(acc / ((traj.len() - start) * pairs.len() * 2) as f64)
}

/// `(sync_error < 2e-5, sync_error)` over the trailing window.
pub fn detect_sync(traj: &Trajectory, topology: &Topology, window: f64) -> Result<(bool, f64)> {
    if topology.n() * 2 != traj.dim() {
        return Err(Error::InvalidSize(format!(
            "topology has {} nodes, trajectory dimension is {}",
            topology.n(),
            traj.dim()
        )));
    }
    let e = sync_error(traj, &topology.neighbour_pairs(), window)?;
    Ok((e < SYNC_TOL, e))
}

/// Period, cyclic neighbour shifts and orbit mismatches of a ring
/// trajectory, computed once and checked against any mode.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveAnalysis {
    pub n: usize,
    pub period: f64,
    pub period_jitter: f64,
    pub shifts: Vec<f64>,
    pub mismatches: Vec<f64>,
}

impl WaveAnalysis {
    pub fn orbit_mismatch(&self) -> f64 {
        self.mismatches.iter().fold(0.0, |a, &b| a.max(b))
    }

    pub fn phase_defect(&self, mode: usize) -> f64 {
        let target = mode as f64 * self.period;
        self.shifts
            .iter()
            .map(|tau| (self.n as f64 * tau - target).abs())
            .fold(0.0, f64::max)
    }

    pub fn mean_shift(&self) -> f64 {
        self.shifts.iter().sum::<f64>() / self.shifts.len() as f64
    }

    /// Descriptor when both the orbit and the phase criteria hold for `mode`.
    pub fn descriptor(&self, mode: usize) -> Option<WaveDescriptor> {
        let mismatch = self.orbit_mismatch();
        let defect = self.phase_defect(mode);
        let tau = self.mean_shift();
        (mode >= 1 && mismatch < ORBIT_TOL && defect < PHASE_TOL && tau > 0.0 && tau < self.period).then(|| {
            WaveDescriptor {
                period: self.period,
                tau,
                mode,
                shifts: self.shifts.clone(),
                orbit_mismatch: mismatch,
                phase_defect: defect,
            }
        })
    }
}

/// Golden-section minimization on `[a, b]`.
fn golden_min(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Shift analysis of a ring trajectory (node `j + 1` listens to node `j`).
///
/// The period comes from node 1's `y`. For each cyclic pair the shift is
/// found by an integer-lag search of the mean orbit difference over one
/// period, then refined to sub-sample accuracy by minimizing the squared
/// difference of the quintic interpolant. Uses the trailing 20% of the
/// trajectory, but never less than two periods.
pub fn analyze_wave(traj: &Trajectory) -> Result<WaveAnalysis> {
    let n = require_network_layout(traj)?;
    let dt = traj.dt();
    if traj.len() < 16 || !(dt > 0.0) {
        return Err(Error::NotPeriodic { crossings: 0 });
    }
    let y = |j: usize| n + j;
    let full = traj.component(y(0));
    let est = estimate_period_detailed(&full, traj.t_start(), dt)?;
    let period = est.period;

    // converged tail: 2 periods of reference plus up to one period of lag
    let span = traj.t_end() - traj.t_start();
    let needed = (2.0 * period + 4.0 * dt).max(TAIL_FRACTION * span);
    if needed > span {
        return Err(Error::Precondition(format!(
            "need {needed:.1} time units of tail, trajectory spans {span:.1}"
        )));
    }
    let tail = traj.tail_from(traj.t_end() - needed);
    let len = tail.len();
    let p = (period / dt).round() as usize;
    let max_lag = (period / dt).ceil() as usize + 1;
    if len < p + max_lag + 1 {
        return Err(Error::Precondition("tail shorter than two periods".into()));
    }
    let i0 = len - 1 - max_lag - p;
    let signals: Vec<Vec<f64>> = (0..n).map(|j| tail.component(y(j))).collect();

    let mut shifts = Vec::with_capacity(n);
    let mut mismatches = Vec::with_capacity(n);
    for j in 0..n {
        let a = &signals[j];
        let b = &signals[(j + 1) % n];
        // coarse integer lag
        let mut best = (f64::INFINITY, 0usize);
        for m in 0..=max_lag {
            let mut s = 0.0;
            for i in i0..i0 + p {
                s += (b[i + m] - a[i]).abs();
            }
            if s < best.0 {
                best = (s, m);
            }
        }
        let m = best.1;
        let shifted = |tau: f64, i: usize| {
            let t = (i as f64) * dt + tau;
            interp::uniform_at(len, 0.0, dt, t, |k| b[k])
        };
        let sq = |tau: f64| {
            (i0..i0 + p)
                .map(|i| (shifted(tau, i) - a[i]).powi(2))
                .sum::<f64>()
        };
        let lo = (m as f64 - 1.0).max(0.0) * dt;
        let hi = (m as f64 + 1.0).min(max_lag as f64) * dt;
        let mut tau = golden_min(lo, hi, 1e-9 * period, sq);
        let mismatch = (i0..i0 + p)
            .map(|i| (shifted(tau, i) - a[i]).abs())
            .sum::<f64>()
            / p as f64;
        if tau >= period {
            tau -= period;
        }
        shifts.push(tau);
        mismatches.push(mismatch);
    }
    Ok(WaveAnalysis {
        n,
        period,
        period_jitter: est.jitter,
        shifts,
        mismatches,
    })
}

/// Mode-`mode` rotating wave on a ring trajectory, if present.
pub fn detect_rotating_wave(traj: &Trajectory, mode: usize) -> Result<Option<WaveDescriptor>> {
    if mode == 0 {
        return Err(Error::Domain("mode must be positive".into()));
    }
    let analysis = analyze_wave(traj)?;
    Ok(analysis.descriptor(mode))
}

/// Checkpoints `interval, 2·interval, …` up to and including `t_final`.
pub fn checkpoint_schedule(t_final: f64, interval: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut k = 1u64;
    while (k as f64) * interval < t_final - 1e-9 * interval {
        v.push(k as f64 * interval);
        k += 1;
    }
    v.push(t_final);
    v
}

/// Sync and wave checks on one window. Waves are only sought on rings.
fn check_window(view: &Trajectory, topology: &Topology, window: f64, metrics: &mut Metrics) -> Option<OutcomeKind> {
    let n = topology.n();
    *metrics = Metrics {
        checkpoint_time: metrics.checkpoint_time,
        ..Metrics::default()
    };
    match detect_sync(view, topology, window) {
        Ok((synced, e)) => {
            metrics.sync_error = Some(e);
            if synced {
                return Some(OutcomeKind::Sync);
            }
        }
        Err(e) => {
            metrics.note = Some(e.to_string());
            return None;
        }
    }
    if !matches!(topology, Topology::DirectedRing { .. }) || n < 2 {
        return None;
    }
    let analysis = match analyze_wave(view) {
        Ok(a) => a,
        Err(e) => {
            metrics.note = Some(e.to_string());
            return None;
        }
    };
    metrics.period = Some(analysis.period);
    metrics.tau = Some(analysis.mean_shift());
    metrics.orbit_mismatch = Some(analysis.orbit_mismatch());
    let best_defect = (1..=n / 2)
        .map(|k| analysis.phase_defect(k))
        .fold(f64::INFINITY, f64::min);
    metrics.phase_defect = Some(best_defect);
    for k in 1..=n / 2 {
        if analysis.descriptor(k).is_some() {
            metrics.phase_defect = Some(analysis.phase_defect(k));
            return Some(OutcomeKind::RotatingWave { mode: k });
        }
    }
    None
}

/// Classify a sampled run: at each checkpoint the trailing `window` is
/// tested for synchronization, then for rotating waves of modes
/// `1..=n/2`; the first positive result wins.
pub fn classify(traj: &Trajectory, topology: &Topology, schedule: &[f64]) -> Classification {
    classify_with_window(traj, topology, schedule, DEFAULT_WINDOW)
}

pub fn classify_with_window(
    traj: &Trajectory,
    topology: &Topology,
    schedule: &[f64],
    window: f64,
) -> Classification {
    let mut metrics = Metrics::default();
    for &tc in schedule {
        if tc > traj.t_end() + 1e-9 * traj.dt() {
            break;
        }
        let view = traj.head_to(tc).tail_from(tc - window);
        metrics.checkpoint_time = Some(tc);
        if let Some(kind) = check_window(&view, topology, window, &mut metrics) {
            return Classification { kind, metrics };
        }
    }
    Classification {
        kind: OutcomeKind::None,
        metrics,
    }
}

/// Result of a simulated and classified run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub classification: Classification,
    /// Samples of the last checked window.
    pub tail: Trajectory,
    /// Final simulated time (the deciding checkpoint, or `t_final`).
    pub t_stop: f64,
}

/// Simulate a network and classify at each checkpoint, stopping at the first
/// decision. Only the trailing window is kept in memory; the samples and
/// verdicts equal `classify` applied to a full `integrate` run over
/// `[0, t_final]`.
pub fn simulate_classified(
    network: &FhnNetwork,
    x0: &[f64],
    t_final: f64,
    schedule: &[f64],
    config: &IntegratorConfig,
    window: f64,
    meta: Option<RunMeta>,
) -> Result<RunOutcome> {
    if !(t_final > 0.0) {
        return Err(Error::Domain(format!("t_final must be positive, got {t_final}")));
    }
    if x0.len() != network.dim() {
        return Err(Error::InvalidSize("initial state does not match the network".into()));
    }
    let topology = network.topology().clone();
    let dt = config.dense_output_dt;
    let keep = (window / dt).round() as usize + 2;
    let mut stepper = Dopri5::new(network.field(), 0.0, x0, t_final, config)?;
    let mut buffer = Trajectory::new(x0.len());
    let mut next = 0u64;
    let mut metrics = Metrics::default();
    let mut last_view = Trajectory::new(x0.len());
    for &tc in schedule.iter().filter(|&&t| t <= t_final * (1.0 + 1e-12)) {
        stepper.sample_until(tc, t_final, 0.0, dt, &mut next, |t, x| buffer.push(t, x))?;
        let start = buffer.times().partition_point(|&t| t < tc - window - 0.5 * dt);
        if start > keep {
            buffer = buffer.slice(start, buffer.len());
        }
        let view = buffer.head_to(tc).tail_from(tc - window);
        metrics.checkpoint_time = Some(tc);
        let verdict = check_window(&view, &topology, window, &mut metrics);
        last_view = view;
        if let Some(kind) = verdict {
            let tail = match &meta {
                Some(m) => last_view.with_meta(m.clone()),
                None => last_view,
            };
            return Ok(RunOutcome {
                classification: Classification { kind, metrics },
                tail,
                t_stop: tc,
            });
        }
    }
    let tail = match &meta {
        Some(m) => last_view.with_meta(m.clone()),
        None => last_view,
    };
    Ok(RunOutcome {
        classification: Classification {
            kind: OutcomeKind::None,
            metrics,
        },
        tail,
        t_stop: t_final,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn synthetic_wave(n: usize, period: f64, shift: f64, t_end: f64) -> Trajectory {
        let dt = 0.1;
        let g = |t: f64| {
            let w = 2.0 * PI * t / period;
            w.sin() + 0.3 * (2.0 * w).cos() + 0.1 * (3.0 * w + 0.4).sin()
        };
        let mut tr = Trajectory::new(2 * n);
        let steps = (t_end / dt).round() as usize;
        let mut x = vec![0.0; 2 * n];
        for i in 0..=steps {
            let t = i as f64 * dt;
            for j in 0..n {
                x[j] = 0.5 * g(t - j as f64 * shift - 1.3);
                x[n + j] = g(t - j as f64 * shift);
            }
            tr.push(t, &x);
        }
        tr
    }

    #[test]
    fn period_of_sine() {
        let s: Vec<f64> = (0..2000).map(|i| (2.0 * PI * i as f64 * 0.1 / 7.0).sin()).collect();
        assert!((estimate_period(&s, 0.1).unwrap() - 7.0).abs() < 0.01);
        assert!(matches!(
            estimate_period(&[1.0; 100], 0.1),
            Err(Error::NotPeriodic { .. })
        ));
    }

    #[test]
    fn identical_nodes_are_synchronized() {
        let mut tr = Trajectory::new(6);
        for i in 0..=100 {
            let v = (i as f64 * 0.1).sin();
            tr.push(i as f64 * 0.1, &[v, v, v, -v, -v, -v]);
        }
        let (ok, e) = detect_sync(&tr, &Topology::ring(3), 10.0).unwrap();
        assert!(ok);
        assert_eq!(e, 0.0);
        assert!(detect_sync(&tr, &Topology::ring(3), 11.0).is_err());
    }

    #[test]
    fn synthetic_mode_one_wave() {
        let (n, period) = (5, 9.7);
        let tr = synthetic_wave(n, period, period / n as f64, 200.0);
        let w = detect_rotating_wave(&tr, 1).unwrap().expect("wave");
        assert!((w.period - period).abs() / period < 1e-3);
        assert!((w.tau - period / n as f64).abs() / (period / n as f64) < 1e-3);
        assert!(detect_rotating_wave(&tr, 2).unwrap().is_none());
    }

    #[test]
    fn synthetic_mode_two_wave() {
        let (n, period) = (6, 11.0);
        let tr = synthetic_wave(n, period, 2.0 * period / n as f64, 300.0);
        assert!(detect_rotating_wave(&tr, 1).unwrap().is_none());
        let w = detect_rotating_wave(&tr, 2).unwrap().expect("mode 2");
        assert_eq!(w.mode, 2);
        let c = classify_with_window(&tr, &Topology::ring(n), &[300.0], 100.0);
        assert!(matches!(c.kind, OutcomeKind::RotatingWave { mode: 2 }));
    }

    #[test]
    fn synchronized_signal_is_not_a_wave() {
        let tr = synthetic_wave(4, 8.0, 0.0, 200.0);
        assert!(detect_rotating_wave(&tr, 1).unwrap().is_none());
        let c = classify_with_window(&tr, &Topology::ring(4), &[100.0, 200.0], 100.0);
        assert_eq!(c.kind, OutcomeKind::Sync);
        assert_eq!(c.metrics.checkpoint_time, Some(100.0));
    }

    #[test]
    fn schedule_ends_at_t_final() {
        assert_eq!(checkpoint_schedule(3000.0, 1000.0), vec![1000.0, 2000.0, 3000.0]);
        assert_eq!(checkpoint_schedule(2500.0, 1000.0), vec![1000.0, 2000.0, 2500.0]);
    }
}
