//! Rotating-wave orbits of FHN rings: extraction, Newton polish, Floquet
//! multipliers, the delay-system relation and the stability boundary in σ.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detect::{self, OutcomeKind};
use crate::error::{Error, Result};
use crate::integrate::{self, integrate_dde, integrate_variational, DelayHistory, Dopri5, IntegratorConfig, Trajectory};
use crate::interp;
use crate::linalg;
use crate::network::{CouplingConfig, FhnNetwork, FhnParams, NetworkState, Topology};

/// Non-trivial multipliers must satisfy `|μ| <= 1 - STABILITY_MARGIN`.
pub const STABILITY_MARGIN: f64 = 1e-3;
/// Largest accepted distance of the trivial multiplier from 1.
pub const TRIVIAL_TOL: f64 = 5e-2;
/// Bound on `|(T/τ*)(n - 1) - n|`.
pub const AUX_EPS: f64 = 0.01;
/// Periodicity defect required before Floquet analysis.
pub const MAX_RESIDUAL: f64 = 1e-6;
/// Integrator tolerance used for orbit refinement and monodromy.
pub const REFINE_TOL: f64 = 1e-10;
/// Largest sampling interval of stored orbits.
pub const ORBIT_DT: f64 = 0.05;

fn tight_config(dt: f64) -> IntegratorConfig {
    IntegratorConfig {
        dense_output_dt: dt,
        ..IntegratorConfig::with_tolerance(REFINE_TOL)
    }
}

/// Upward crossings of `x[component]` through `level`, located on the dense
/// output of each step by bracketed secant iteration.
fn upward_crossings<F>(
    f: F,
    x0: &[f64],
    t_span: (f64, f64),
    config: &IntegratorConfig,
    component: usize,
    level: f64,
) -> Result<Vec<(f64, Vec<f64>)>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let (t0, t1) = t_span;
    let mut stepper = Dopri5::new(f, t0, x0, t1 - t0, config)?;
    let mut out = Vec::new();
    let mut prev = x0[component] - level;
    while stepper.t() < t1 {
        stepper.step(t1)?;
        let cur = stepper.state()[component] - level;
        if prev < 0.0 && cur >= 0.0 {
            let seg = stepper.segment().expect("accepted step");
            let (mut a, mut b) = (seg.t, seg.t_end());
            let (mut fa, mut fb) = (prev, cur);
            for _ in 0..60 {
                let m = if fb != fa { b - fb * (b - a) / (fb - fa) } else { 0.5 * (a + b) };
                let m = if m <= a || m >= b { 0.5 * (a + b) } else { m };
                let fm = seg.eval_component(m, component) - level;
                if fm < 0.0 {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                    fb = fm;
                }
                if (b - a) < 1e-14 * (1.0 + b.abs()) || fm == 0.0 {
                    break;
                }
            }
            let tc = if fb.abs() < fa.abs() { b } else { a };
            let mut x = vec![0.0; x0.len()];
            seg.eval(tc, &mut x);
            out.push((tc, x));
        }
        prev = cur;
    }
    Ok(out)
}

/// Limit cycle of one uncoupled node, sampled from the upward crossing of
/// `y = 0`.
#[derive(Debug, Clone)]
pub struct ReferenceCycle {
    pub period: f64,
    z: Vec<f64>,
    y: Vec<f64>,
}

impl ReferenceCycle {
    pub fn compute(params: &FhnParams) -> Result<Self> {
        Self::compute_with(params, &tight_config(0.01))
    }

    pub fn compute_with(params: &FhnParams, config: &IntegratorConfig) -> Result<Self> {
        params.validate()?;
        let p = *params;
        let field = move |_: f64, x: &[f64], dx: &mut [f64]| {
            let (a, b) = p.node_field(x[0], x[1]);
            dx[0] = a;
            dx[1] = b;
        };
        let crossings = upward_crossings(field, &[0.0, 0.1], (0.0, 600.0), config, 1, 0.0)?;
        let m = crossings.len();
        if m < 3 {
            return Err(Error::NotPeriodic { crossings: m });
        }
        let (ta, xa) = &crossings[m - 2];
        let (tb, _) = &crossings[m - 1];
        let period = tb - ta;
        let len = (period / ORBIT_DT).ceil() as usize;
        let cfg = IntegratorConfig {
            dense_output_dt: period / len as f64,
            ..*config
        };
        let tr = integrate::integrate(field, xa, (0.0, period), &cfg)?;
        let z = (0..len).map(|i| tr.value(i, 0)).collect();
        let y = (0..len).map(|i| tr.value(i, 1)).collect();
        Ok(ReferenceCycle { period, z, y })
    }

    /// State at `phase ∈ [0, 1)` (fraction of a period after the section).
    pub fn at(&self, phase: f64) -> (f64, f64) {
        let t = phase.rem_euclid(1.0) * self.period;
        let len = self.z.len();
        (
            interp::periodic_at(len, self.period, t, |i| self.z[i]),
            interp::periodic_at(len, self.period, t, |i| self.y[i]),
        )
    }
}

/// Period of the uncoupled node started from `(z, y) = (0, 0.1)`, from the
/// last two upward crossings of `y = 0` before `t = 600`.
pub fn single_node_period(params: &FhnParams, config: &IntegratorConfig) -> Result<f64> {
    Ok(ReferenceCycle::compute_with(params, config)?.period)
}

const IC_JITTER: f64 = 1e-3;

/// Node `j` (0-based) placed at phase `φ0 - j/n` of the reference cycle, so
/// each node lags its input by `1/n` of a period. `φ0` and a `±1e-3` jitter
/// come from `seed`.
pub fn staggered_initial_condition(n: usize, seed: u64, reference: &ReferenceCycle) -> NetworkState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase0: f64 = rng.random();
    let mut s = NetworkState::zeros(n);
    for j in 0..n {
        let (z, y) = reference.at(phase0 - j as f64 / n as f64);
        s.z[j] = z + rng.random_range(-IC_JITTER..=IC_JITTER);
        s.y[j] = y + rng.random_range(-IC_JITTER..=IC_JITTER);
    }
    s
}

/// All nodes at one seeded phase, with the same `±1e-3` jitter.
pub fn synchronized_initial_condition(n: usize, seed: u64, reference: &ReferenceCycle) -> NetworkState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase0: f64 = rng.random();
    let (z, y) = reference.at(phase0);
    let mut s = NetworkState::zeros(n);
    for j in 0..n {
        s.z[j] = z + rng.random_range(-IC_JITTER..=IC_JITTER);
        s.y[j] = y + rng.random_range(-IC_JITTER..=IC_JITTER);
    }
    s
}

/// One period of a ring orbit, sampled at `period / len` starting from the
/// section point `x0` (`y_1 = section_level`, upward).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub n: usize,
    pub sigma: f64,
    pub params: FhnParams,
    #[serde(rename = "T")]
    pub period: f64,
    pub tau: f64,
    /// Per-pair shifts `τ_j` with `x_{j+1}(t + τ_j) ≈ x_j(t)`.
    pub shifts: Vec<f64>,
    /// `||x(T) - x(0)||_∞`.
    pub residual: f64,
    /// Largest mean `|x_{j+1}(t + τ) - x_j(t)|` over one period.
    pub symmetry_defect: f64,
    pub section_level: f64,
    pub x0: Vec<f64>,
    /// Row-major samples, `len` rows of dimension `2n`.
    pub samples: Vec<f64>,
}

impl PeriodicOrbit {
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.period / self.len() as f64
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.samples[i * d..(i + 1) * d]
    }

    /// Periodic interpolation of component `c` at time `t`.
    pub fn component_at(&self, t: f64, c: usize) -> f64 {
        let d = self.dim();
        interp::periodic_at(self.len(), self.period, t, |i| self.samples[i * d + c])
    }

    pub fn state_at(&self, t: f64, out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.component_at(t, c);
        }
    }

    pub fn network(&self) -> Result<FhnNetwork> {
        FhnNetwork::new(self.params, CouplingConfig::new(Topology::ring(self.n), self.sigma)?)
    }

    /// One period including the closing sample at `t = T`.
    pub fn to_trajectory(&self) -> Trajectory {
        let mut tr = Trajectory::new(self.dim());
        for i in 0..self.len() {
            tr.push(i as f64 * self.dt(), self.sample(i));
        }
        tr.push(self.period, self.sample(0));
        tr
    }

    /// JSON header of the orbit export.
    pub fn header(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "sigma": self.sigma,
            "T": self.period,
            "tau": self.tau,
            "residual": self.residual,
        })
    }

    /// `|n τ - T|`.
    pub fn phase_defect(&self) -> f64 {
        (self.n as f64 * self.tau - self.period).abs()
    }

    /// The synchronous orbit: every node on the uncoupled limit cycle.
    pub fn synchronous(n: usize, sigma: f64, params: &FhnParams) -> Result<Self> {
        let reference = ReferenceCycle::compute(params)?;
        let len = reference.z.len();
        let mut samples = Vec::with_capacity(len * 2 * n);
        for i in 0..len {
            samples.extend(std::iter::repeat_n(reference.z[i], n));
            samples.extend(std::iter::repeat_n(reference.y[i], n));
        }
        let x0 = samples[..2 * n].to_vec();
        let net = FhnNetwork::new(*params, CouplingConfig::new(Topology::ring(n), sigma)?)?;
        let end = integrate::integrate_final(net.field(), &x0, (0.0, reference.period), &tight_config(0.1))?;
        let residual = max_abs_diff(&end, &x0);
        Ok(PeriodicOrbit {
            n,
            sigma,
            params: *params,
            period: reference.period,
            tau: 0.0,
            shifts: vec![0.0; n],
            residual,
            symmetry_defect: 0.0,
            section_level: 0.0,
            x0,
            samples,
        })
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
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

/// Shifts `τ_j ∈ [0, T)` between cyclic neighbours of a sampled periodic
/// orbit, and the mean symmetry defect at those shifts.
fn orbit_shifts(samples: &[f64], n: usize, period: f64) -> (Vec<f64>, f64) {
    let d = 2 * n;
    let len = samples.len() / d;
    let dt = period / len as f64;
    let at = |t: f64, c: usize| interp::periodic_at(len, period, t, |i| samples[i * d + c]);
    let mut shifts = Vec::with_capacity(n);
    let mut defect: f64 = 0.0;
    for j in 0..n {
        let k = (j + 1) % n;
        let (ya, yb) = (n + j, n + k);
        let mut best = (f64::INFINITY, 0usize);
        for m in 0..len {
            let s: f64 = (0..len)
                .map(|i| (samples[((i + m) % len) * d + yb] - samples[i * d + ya]).powi(2))
                .sum();
            if s < best.0 {
                best = (s, m);
            }
        }
        let centre = best.1 as f64 * dt;
        let sq = |tau: f64| {
            (0..len)
                .map(|i| (at(i as f64 * dt + tau, yb) - samples[i * d + ya]).powi(2))
                .sum::<f64>()
        };
        let tau = golden_min(centre - dt, centre + dt, 1e-10 * period, sq).rem_euclid(period);
        let mismatch = (0..len)
            .map(|i| {
                let t = i as f64 * dt + tau;
                (at(t, yb) - samples[i * d + ya]).abs() + (at(t, k) - samples[i * d + j]).abs()
            })
            .sum::<f64>()
            / (2 * len) as f64;
        shifts.push(tau);
        defect = defect.max(mismatch);
    }
    (shifts, defect)
}

/// Mean of shifts on the circle of length `period` (handles wrap at 0/T).
fn circular_mean(shifts: &[f64], period: f64) -> f64 {
    let (s, c) = shifts.iter().fold((0.0, 0.0), |(s, c), &t| {
        let a = 2.0 * std::f64::consts::PI * t / period;
        (s + a.sin(), c + a.cos())
    });
    (s.atan2(c) / (2.0 * std::f64::consts::PI) * period).rem_euclid(period)
}

/// Flow `x(T)` and its sensitivity `∂x(T)/∂x0`.
fn flow_with_sensitivity(net: &FhnNetwork, x0: &[f64], period: f64) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let d = x0.len();
    let mut aug = x0.to_vec();
    aug.extend(DMatrix::<f64>::identity(d, d).as_slice());
    let field = |_: f64, u: &[f64], du: &mut [f64]| {
        let (x, phi) = u.split_at(d);
        let (dx, dphi) = du.split_at_mut(d);
        net.eval(x, dx);
        for (col, dcol) in phi.chunks(d).zip(dphi.chunks_mut(d)) {
            net.jacobian_apply(x, col, dcol);
        }
    };
    let end = integrate::integrate_final(field, &aug, (0.0, period), &tight_config(period))?;
    let m = DMatrix::from_column_slice(d, d, &end[d..]);
    Ok((end[..d].to_vec(), m))
}

const NEWTON_MAX_ITER: usize = 20;
const NEWTON_TOL: f64 = 1e-10;

/// Newton shooting on `(x0, T)` with the phase condition
/// `y_1(0) = level`. Returns the corrected point and period.
pub fn newton_shooting(net: &FhnNetwork, x0: &[f64], period: f64, level: f64) -> Result<(Vec<f64>, f64)> {
    let d = net.dim();
    let n = net.n();
    let mut x = x0.to_vec();
    let mut t = period;
    let mut fx = vec![0.0; d];
    for it in 0..NEWTON_MAX_ITER {
        let (xt, m) = flow_with_sensitivity(net, &x, t)?;
        let mut rhs = DVector::<f64>::zeros(d + 1);
        for i in 0..d {
            rhs[i] = -(xt[i] - x[i]);
        }
        rhs[d] = -(x[n] - level);
        let res = rhs.amax();
        if res < NEWTON_TOL {
            return Ok((x, t));
        }
        net.eval(&xt, &mut fx);
        let mut a = DMatrix::<f64>::zeros(d + 1, d + 1);
        a.view_mut((0, 0), (d, d)).copy_from(&m);
        for i in 0..d {
            a[(i, i)] -= 1.0;
            a[(i, d)] = fx[i];
        }
        a[(d, n)] = 1.0;
        let delta = a.lu().solve(&rhs).ok_or(Error::NoConvergence { iterations: it + 1 })?;
        // damp large corrections
        let step = delta.rows(0, d).amax().max(delta[d].abs() / period.max(1.0) * 10.0);
        let scale = if step > 0.5 { 0.5 / step } else { 1.0 };
        for i in 0..d {
            x[i] += scale * delta[i];
        }
        t += scale * delta[d];
        if !(t > 0.0) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NoConvergence { iterations: it + 1 });
        }
    }
    Err(Error::NoConvergence {
        iterations: NEWTON_MAX_ITER,
    })
}

/// Sample one period from a section point and measure its symmetry.
fn build_orbit(net: &FhnNetwork, x0: Vec<f64>, period: f64, level: f64) -> Result<PeriodicOrbit> {
    let n = net.n();
    let len = (period / ORBIT_DT).ceil() as usize;
    let tr = integrate::integrate(net.field(), &x0, (0.0, period), &tight_config(period / len as f64))?;
    if tr.len() != len + 1 {
        return Err(Error::InvalidSize(format!(
            "expected {} orbit samples, got {}",
            len + 1,
            tr.len()
        )));
    }
    let residual = max_abs_diff(tr.state(len), &x0);
    let samples = tr.slice(0, len);
    let data: Vec<f64> = (0..len).flat_map(|i| samples.state(i).to_vec()).collect();
    let (shifts, symmetry_defect) = orbit_shifts(&data, n, period);
    Ok(PeriodicOrbit {
        n,
        sigma: net.sigma(),
        params: net.params,
        period,
        tau: circular_mean(&shifts, period),
        shifts,
        residual,
        symmetry_defect,
        section_level: level,
        x0,
        samples: data,
    })
}

/// Locate the orbit through the attractor near `x_start`: section
/// crossings of `y_1 = level` give a first `(x0, T)`, polished by Newton
/// shooting when the periodicity defect exceeds `1e-6`.
pub fn refine_orbit(net: &FhnNetwork, x_start: &[f64], period_guess: f64, level: f64) -> Result<PeriodicOrbit> {
    let n = net.n();
    let crossings = upward_crossings(
        net.field(),
        x_start,
        (0.0, 4.0 * period_guess),
        &tight_config(period_guess),
        n,
        level,
    )?;
    let m = crossings.len();
    if m < 2 {
        return Err(Error::NotPeriodic { crossings: m });
    }
    let (ta, _) = &crossings[m - 2];
    let (tb, xb) = &crossings[m - 1];
    let mut x0 = xb.clone();
    let mut period = tb - ta;
    let end = integrate::integrate_final(net.field(), &x0, (0.0, period), &tight_config(period))?;
    if max_abs_diff(&end, &x0) > MAX_RESIDUAL {
        let (x, t) = newton_shooting(net, &x0, period, level)?;
        x0 = x;
        period = t;
    }
    build_orbit(net, x0, period, level)
}

/// Settings for wave searches.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveSearch {
    pub params: FhnParams,
    pub t_final: f64,
    pub integrator: IntegratorConfig,
    pub window: f64,
}

impl Default for WaveSearch {
    fn default() -> Self {
        WaveSearch {
            params: FhnParams::default(),
            t_final: detect::DEFAULT_T_FINAL,
            integrator: IntegratorConfig::default(),
            window: detect::DEFAULT_WINDOW,
        }
    }
}

/// Simulate a ring from phase-staggered initial conditions; on Mode-1
/// detection return the refined orbit.
pub fn find_wave_orbit(n: usize, sigma: f64, seed: u64, search: &WaveSearch) -> Result<Option<PeriodicOrbit>> {
    if n < 3 {
        return Err(Error::Domain(format!("wave search needs n >= 3, got {n}")));
    }
    let reference = ReferenceCycle::compute(&search.params)?;
    let net = FhnNetwork::new(search.params, CouplingConfig::new(Topology::ring(n), sigma)?)?;
    let x0 = staggered_initial_condition(n, seed, &reference).to_flat();
    let schedule = detect::checkpoint_schedule(search.t_final, detect::CHECK_INTERVAL);
    let run = detect::simulate_classified(&net, &x0, search.t_final, &schedule, &search.integrator, search.window, None)?;
    if run.classification.kind != (OutcomeKind::RotatingWave { mode: 1 }) {
        return Ok(None);
    }
    let period = run.classification.metrics.period.unwrap_or(reference.period);
    let tail = &run.tail;
    let y1 = tail.component(n);
    let level = y1.iter().sum::<f64>() / y1.len() as f64;
    let x_start = tail.last_state().expect("non-empty tail");
    refine_orbit(&net, x_start, period, level).map(Some)
}

/// `|(T/τ*)(n - 1) - n|` with the delay `τ* = T - τ`.
pub fn aux_relation_defect(period: f64, tau: f64, n: usize) -> f64 {
    let delay = period - tau;
    (period / delay * (n as f64 - 1.0) - n as f64).abs()
}

/// `|(T/τ*)(n - 1) - n| < 0.01` for the orbit's delay `τ* = T - τ`.
pub fn check_aux_relation(orbit: &PeriodicOrbit, n: usize) -> bool {
    orbit.tau > 0.0 && orbit.tau < orbit.period && aux_relation_defect(orbit.period, orbit.tau, n) < AUX_EPS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FloquetResult {
    /// `[re, im]` pairs.
    pub multipliers: Vec<[f64; 2]>,
    pub trivial_defect: f64,
    pub max_nontrivial_modulus: f64,
    pub stable: bool,
    /// `ln |det M|` from the monodromy integration.
    pub log_abs_det: f64,
    /// `∫ trace J dt` over one period.
    pub trace_integral: f64,
    /// `|exp(ln|det M| - ∫ trace J) - 1|`.
    pub liouville_defect: f64,
}

impl FloquetResult {
    pub fn multipliers_complex(&self) -> Vec<Complex64> {
        self.multipliers.iter().map(|m| Complex64::new(m[0], m[1])).collect()
    }
}

/// Monodromy of the full `2n`-dimensional linearization along the orbit and
/// its eigenvalues. The orbit is interpolated periodically between samples.
pub fn floquet_multipliers(orbit: &PeriodicOrbit, coupling: &CouplingConfig, params: &FhnParams) -> Result<FloquetResult> {
    if !(orbit.residual <= MAX_RESIDUAL) {
        return Err(Error::Precondition(format!(
            "orbit periodicity defect {:e} exceeds {MAX_RESIDUAL:e}",
            orbit.residual
        )));
    }
    if coupling.topology.n() != orbit.n {
        return Err(Error::InvalidSize(format!(
            "coupling has {} nodes, orbit has {}",
            coupling.topology.n(),
            orbit.n
        )));
    }
    let net = FhnNetwork::new(*params, coupling.clone())?;
    let d = orbit.dim();
    let mut x = vec![0.0; d];
    let jac = |t: f64, jm: &mut DMatrix<f64>| {
        orbit.state_at(t, &mut x);
        net.jacobian_into(&x, jm);
    };
    let mono = integrate_variational(jac, d, (0.0, orbit.period), &tight_config(orbit.period))?;
    let eig = linalg::eigenvalues(&mono.matrix)?;
    let trivial = eig
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 1.0).norm().total_cmp(&(b.1 - 1.0).norm()))
        .map(|(i, _)| i)
        .expect("non-empty spectrum");
    let trivial_defect = (eig[trivial] - 1.0).norm();
    let max_nontrivial_modulus = eig
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != trivial)
        .map(|(_, m)| m.norm())
        .fold(0.0, f64::max);
    let trace_integral = orbit.dt() * (0..orbit.len()).map(|i| net.jacobian_trace(orbit.sample(i))).sum::<f64>();
    let liouville_defect = ((mono.log_abs_det - trace_integral).exp() - 1.0).abs();
    Ok(FloquetResult {
        multipliers: eig.iter().map(|m| [m.re, m.im]).collect(),
        trivial_defect,
        max_nontrivial_modulus,
        stable: max_nontrivial_modulus <= 1.0 - STABILITY_MARGIN,
        log_abs_det: mono.log_abs_det,
        trace_integral,
        liouville_defect,
    })
}

/// Integrate the single-node delay system
/// `s' = f(s) - σ BC [s(t) - s(t - τ*)]`, `τ* = T - τ`, from the orbit's node-1
/// history over two periods; returns `max |s(t + T) - s(t)|` for
/// `t ∈ [0, T]`.
pub fn aux_periodicity_defect(orbit: &PeriodicOrbit) -> Result<f64> {
    let delay = orbit.period - orbit.tau;
    let n = orbit.n;
    let len = orbit.len();
    let period = orbit.period;
    let z1: Vec<f64> = (0..len).map(|i| orbit.sample(i)[0]).collect();
    let y1: Vec<f64> = (0..len).map(|i| orbit.sample(i)[n]).collect();
    let history = DelayHistory::from_fn(delay, 2, move |t, out| {
        out[0] = interp::periodic_at(len, period, t, |i| z1[i]);
        out[1] = interp::periodic_at(len, period, t, |i| y1[i]);
    })?;
    let p = orbit.params;
    let sigma = orbit.sigma;
    let field = move |_: f64, s: &[f64], sd: &[f64], ds: &mut [f64]| {
        let (a, b) = p.node_field(s[0], s[1]);
        ds[0] = a;
        ds[1] = b - sigma * (s[1] - sd[1]);
    };
    let tr = integrate_dde(field, &history, (0.0, 2.0 * period), &tight_config(orbit.dt()))?;
    let mut defect: f64 = 0.0;
    for i in 0..=len {
        if i + len >= tr.len() {
            break;
        }
        for c in 0..2 {
            defect = defect.max((tr.value(i + len, c) - tr.value(i, c)).abs());
        }
    }
    Ok(defect)
}

/// Wave status at one coupling strength.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanPoint {
    pub sigma: f64,
    pub exists: bool,
    pub max_multiplier: Option<f64>,
    pub stable: bool,
    #[serde(skip)]
    pub orbit: Option<PeriodicOrbit>,
}

fn is_mode_one(orbit: &PeriodicOrbit) -> bool {
    orbit.residual <= MAX_RESIDUAL
        && orbit.symmetry_defect < detect::ORBIT_TOL
        && orbit.phase_defect() < detect::PHASE_TOL
        && orbit.tau > 0.0
}

/// Wave orbit at `sigma`: Newton continuation from `previous` when given,
/// otherwise (or on failure) a staggered-start simulation.
fn probe(n: usize, sigma: f64, previous: Option<&PeriodicOrbit>, seed: u64, search: &WaveSearch) -> ScanPoint {
    let mut orbit = None;
    if let Some(prev) = previous {
        let attempt = (|| -> Result<PeriodicOrbit> {
            let net = FhnNetwork::new(search.params, CouplingConfig::new(Topology::ring(n), sigma)?)?;
            let (x0, t) = newton_shooting(&net, &prev.x0, prev.period, prev.section_level)?;
            build_orbit(&net, x0, t, prev.section_level)
        })();
        orbit = attempt.ok().filter(is_mode_one);
    }
    if orbit.is_none() {
        orbit = find_wave_orbit(n, sigma, seed, search).ok().flatten().filter(is_mode_one);
    }
    let floquet = orbit.as_ref().and_then(|o| {
        let coupling = CouplingConfig::new(Topology::ring(n), sigma).ok()?;
        floquet_multipliers(o, &coupling, &search.params).ok()
    });
    ScanPoint {
        sigma,
        exists: floquet.is_some(),
        max_multiplier: floquet.as_ref().map(|f| f.max_nontrivial_modulus),
        stable: floquet.as_ref().is_some_and(|f| f.stable),
        orbit: if floquet.is_some() { orbit } else { None },
    }
}

/// Mode-1 wave existence and stability along increasing `sigmas`.
pub fn wave_stability_scan(n: usize, sigmas: &[f64], seed: u64, search: &WaveSearch) -> Vec<ScanPoint> {
    let mut sorted = sigmas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<ScanPoint> = Vec::with_capacity(sorted.len());
    for &s in &sorted {
        let prev = out.iter().rev().find_map(|p| p.orbit.as_ref());
        out.push(probe(n, s, prev, seed, search));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryStatus {
    Resolved,
    /// No stable wave anywhere in the range.
    NoStableWave,
    /// The wave is still stable at the top of the range.
    StableThroughout,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryRow {
    pub n: usize,
    pub sigma_critical: Option<f64>,
    pub max_multiplier_below: Option<f64>,
    pub max_multiplier_above: Option<f64>,
    pub status: BoundaryStatus,
}

/// For each `n`, scan `σ` over `sigma_range` with `sigma_step`, take the
/// highest stable-to-unstable transition and bisect it to `sigma_step / 8`.
pub fn wave_stability_boundary(
    n_values: &[usize],
    sigma_range: (f64, f64),
    sigma_step: f64,
    seed: u64,
    search: &WaveSearch,
) -> Result<Vec<BoundaryRow>> {
    use rayon::prelude::*;
    let (lo, hi) = sigma_range;
    if n_values.is_empty() || !(hi >= lo) || !(sigma_step > 0.0) {
        return Err(Error::Domain("boundary needs a non-empty n list and σ range".into()));
    }
    if let Some(&n) = n_values.iter().find(|&&n| n < 3) {
        return Err(Error::Domain(format!("boundary needs n >= 3, got {n}")));
    }
    let count = ((hi - lo) / sigma_step + 1e-9).floor() as usize + 1;
    let sigmas: Vec<f64> = (0..count).map(|i| lo + i as f64 * sigma_step).collect();
    Ok(n_values
        .par_iter()
        .map(|&n| boundary_for(n, &sigmas, sigma_step, seed, search))
        .collect())
}

fn boundary_for(n: usize, sigmas: &[f64], step: f64, seed: u64, search: &WaveSearch) -> BoundaryRow {
    let scan = wave_stability_scan(n, sigmas, seed, search);
    let transition = (0..scan.len().saturating_sub(1))
        .rev()
        .find(|&i| scan[i].stable && !scan[i + 1].stable);
    let Some(i) = transition else {
        let any_stable = scan.iter().any(|p| p.stable);
        let status = if any_stable {
            BoundaryStatus::StableThroughout
        } else {
            BoundaryStatus::NoStableWave
        };
        return BoundaryRow {
            n,
            sigma_critical: None,
            max_multiplier_below: None,
            max_multiplier_above: None,
            status,
        };
    };
    let mut below = scan[i].clone();
    let mut above = scan[i + 1].clone();
    while above.sigma - below.sigma > step / 8.0 * (1.0 + 1e-9) {
        let mid = 0.5 * (below.sigma + above.sigma);
        let p = probe(n, mid, below.orbit.as_ref(), seed, search);
        if p.stable {
            below = p;
        } else {
            above = p;
        }
    }
    BoundaryRow {
        n,
        sigma_critical: Some(0.5 * (below.sigma + above.sigma)),
        max_multiplier_below: below.max_multiplier,
        max_multiplier_above: above.max_multiplier,
        status: BoundaryStatus::Resolved,
    }
}

/// Two directed rings of `k` nodes joined at nodes 1 and `k + 1`, started
/// with ring 1 near synchrony and ring 2 staggered.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoRingsDemo {
    pub k: usize,
    pub sigma: f64,
    pub seed: u64,
    pub t_final: f64,
    /// Trailing window over which both rings are measured.
    pub window: f64,
    pub params: FhnParams,
    pub integrator: IntegratorConfig,
}

impl Default for TwoRingsDemo {
    fn default() -> Self {
        TwoRingsDemo {
            k: 10,
            sigma: 0.75,
            seed: 4,
            t_final: 6000.0,
            window: detect::DEFAULT_WINDOW,
            params: FhnParams::default(),
            integrator: IntegratorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubRingRegime {
    NearSync,
    NearWave,
    Other,
}

/// Near-sync below this mean neighbour error.
pub const NEAR_SYNC_TOL: f64 = 0.1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubRingReport {
    /// 1 or 2.
    pub ring: usize,
    pub sync_error: f64,
    #[serde(rename = "T")]
    pub period: Option<f64>,
    /// `T / k`.
    pub tau: Option<f64>,
    /// Circular shifts `min(s, T - s)` along the ring's neighbour pairs.
    pub shifts: Vec<f64>,
    pub mean_shift: Option<f64>,
    pub min_shift: Option<f64>,
    pub regime: SubRingRegime,
    /// Strict classification of the ring's states on their own.
    pub strict: OutcomeKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoRingsReport {
    pub config: TwoRingsDemo,
    pub ring1: SubRingReport,
    pub ring2: SubRingReport,
    #[serde(skip)]
    pub excerpt: Option<Trajectory>,
}

impl TwoRingsReport {
    /// One ring near-sync and the other near-wave.
    pub fn competing(&self) -> bool {
        matches!(
            (self.ring1.regime, self.ring2.regime),
            (SubRingRegime::NearSync, SubRingRegime::NearWave) | (SubRingRegime::NearWave, SubRingRegime::NearSync)
        )
    }
}

/// Initial state: ring 1 from `synchronized_initial_condition(k, seed)`,
/// ring 2 from `staggered_initial_condition(k, seed + 1000)`.
pub fn two_rings_initial_condition(k: usize, seed: u64, reference: &ReferenceCycle) -> NetworkState {
    let a = synchronized_initial_condition(k, seed, reference);
    let b = staggered_initial_condition(k, seed.wrapping_add(1000), reference);
    let mut x = NetworkState::zeros(2 * k);
    for j in 0..k {
        x.z[j] = a.z[j];
        x.y[j] = a.y[j];
        x.z[k + j] = b.z[j];
        x.y[k + j] = b.y[j];
    }
    x
}

fn sub_ring_report(tail: &Trajectory, ring: usize, k: usize, window: f64) -> Result<SubRingReport> {
    let base = (ring - 1) * k;
    let comps: Vec<usize> = (base..base + k).chain(2 * k + base..2 * k + base + k).collect();
    let sub = tail.select(&comps);
    let topo = Topology::ring(k);
    let (_, sync_error) = detect::detect_sync(&sub, &topo, window)?;
    let strict = detect::classify_with_window(&sub, &topo, &[sub.t_end()], window).kind;
    let mut report = SubRingReport {
        ring,
        sync_error,
        period: None,
        tau: None,
        shifts: Vec::new(),
        mean_shift: None,
        min_shift: None,
        regime: SubRingRegime::Other,
        strict,
    };
    if sync_error < NEAR_SYNC_TOL {
        report.regime = SubRingRegime::NearSync;
    }
    if let Ok(w) = detect::analyze_wave(&sub) {
        let tau = w.period / k as f64;
        let shifts: Vec<f64> = w.shifts.iter().map(|&s| s.min(w.period - s)).collect();
        let mean = shifts.iter().sum::<f64>() / k as f64;
        report.min_shift = shifts.iter().copied().reduce(f64::min);
        report.mean_shift = Some(mean);
        report.period = Some(w.period);
        report.tau = Some(tau);
        report.shifts = shifts;
        if report.regime == SubRingRegime::Other && mean > 0.5 * tau {
            report.regime = SubRingRegime::NearWave;
        }
    }
    Ok(report)
}

/// Simulate the coupled rings and measure each ring over the trailing
/// window. The excerpt is the last window of the full trajectory.
pub fn two_rings_demo(demo: &TwoRingsDemo) -> Result<TwoRingsReport> {
    if demo.k < 3 {
        return Err(Error::Domain(format!("rings need k >= 3, got {}", demo.k)));
    }
    if !(demo.window > 0.0) || demo.window >= demo.t_final {
        return Err(Error::Domain("window must be positive and shorter than t_final".into()));
    }
    let reference = ReferenceCycle::compute(&demo.params)?;
    let x0 = two_rings_initial_condition(demo.k, demo.seed, &reference);
    let net = FhnNetwork::new(demo.params, CouplingConfig::new(Topology::two_rings(demo.k), demo.sigma)?)?;
    let traj = integrate::integrate(net.field(), &x0.to_flat(), (0.0, demo.t_final), &demo.integrator)?;
    let tail = traj.tail_from(demo.t_final - demo.window);
    Ok(TwoRingsReport {
        config: demo.clone(),
        ring1: sub_ring_report(&tail, 1, demo.k, demo.window)?,
        ring2: sub_ring_report(&tail, 2, demo.k, demo.window)?,
        excerpt: Some(tail),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aux_relation_arithmetic() {
        let (n, t) = (10, 12.0);
        assert!(aux_relation_defect(t, t / n as f64, n) < 1e-12);
        let perturbed = aux_relation_defect(t, 1.01 * t / n as f64, n);
        assert!((perturbed - 0.011_123_470_522_803_1).abs() < 1e-9);
        assert!(perturbed > AUX_EPS);
    }

    #[test]
    fn reference_cycle_is_closed() {
        let r = ReferenceCycle::compute(&FhnParams::default()).unwrap();
        assert!(r.period > 10.0);
        let (z0, y0) = r.at(0.0);
        let (z1, y1) = r.at(1.0 - 1e-12);
        assert!(y0.abs() < 1e-8);
        assert!((z0 - z1).abs() < 1e-6 && (y0 - y1).abs() < 1e-6);
    }

    #[test]
    fn staggered_ic_is_seeded() {
        let r = ReferenceCycle::compute(&FhnParams::default()).unwrap();
        let a = staggered_initial_condition(5, 1, &r);
        assert_eq!(a, staggered_initial_condition(5, 1, &r));
        assert_ne!(a, staggered_initial_condition(5, 2, &r));
    }
}
