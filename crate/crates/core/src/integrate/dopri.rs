//! Dormand–Prince 5(4) stepper with PI step-size control and the standard
//! fourth-order continuous extension.

use super::IntegratorConfig;
use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

/// Dense-output polynomial of one accepted step on `[t, t + h]`.
#[derive(Debug, Clone)]
pub struct Segment {
    pub t: f64,
    pub h: f64,
    rcont: [Vec<f64>; 5],
}

impl Segment {
    pub fn t_end(&self) -> f64 {
        self.t + self.h
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let theta = (t - self.t) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        for i in 0..out.len() {
            out[i] = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
        }
    }

    pub fn eval_component(&self, t: f64, i: usize) -> f64 {
        let theta = (t - self.t) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])))
    }
}

/// Adaptive explicit Runge–Kutta integrator for `x' = f(t, x)`.
///
/// The stepper owns its state and can be advanced repeatedly; the solution
/// on the last accepted step is available through [`Dopri5::interpolate`].
pub struct Dopri5<F> {
    f: F,
    dim: usize,
    rtol: f64,
    atol: f64,
    max_step: f64,
    min_step: f64,
    t: f64,
    y: Vec<f64>,
    h: f64,
    facold: f64,
    k: [Vec<f64>; 7],
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
    seg: Segment,
    has_segment: bool,
    accepted: usize,
    rejected: usize,
    evaluations: usize,
}

impl<F: FnMut(f64, &[f64], &mut [f64])> Dopri5<F> {
    /// `span` is the expected integration length; it sets the step
    /// underflow threshold (`1e-12 * span`).
    pub fn new(mut f: F, t0: f64, y0: &[f64], span: f64, config: &IntegratorConfig) -> Result<Self> {
        config.validate()?;
        let dim = y0.len();
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { t: t0 });
        }
        let mut k: [Vec<f64>; 7] = Default::default();
        for v in k.iter_mut() {
            *v = vec![0.0; dim];
        }
        f(t0, y0, &mut k[0]);
        let mut s = Dopri5 {
            f,
            dim,
            rtol: config.rtol,
            atol: config.atol,
            max_step: config.max_step,
            min_step: 1e-12 * span.abs().max(f64::MIN_POSITIVE),
            t: t0,
            y: y0.to_vec(),
            h: 0.0,
            facold: 1e-4,
            k,
            ytmp: vec![0.0; dim],
            ynew: vec![0.0; dim],
            seg: Segment {
                t: t0,
                h: 0.0,
                rcont: Default::default(),
            },
            has_segment: false,
            accepted: 0,
            rejected: 0,
            evaluations: 1,
        };
        s.h = if config.initial_step > 0.0 {
            config.initial_step.min(s.max_step)
        } else {
            s.initial_step()
        };
        Ok(s)
    }

    fn initial_step(&mut self) -> f64 {
        let n = self.dim.max(1) as f64;
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..self.dim {
            let sk = self.atol + self.rtol * self.y[i].abs();
            dnf += (self.k[0][i] / sk).powi(2);
            dny += (self.y[i] / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(self.max_step);
        for i in 0..self.dim {
            self.ytmp[i] = self.y[i] + h * self.k[0][i];
        }
        (self.f)(self.t + h, &self.ytmp, &mut self.k[1]);
        self.evaluations += 1;
        let mut der2 = 0.0;
        for i in 0..self.dim {
            let sk = self.atol + self.rtol * self.y[i].abs();
            der2 += ((self.k[1][i] - self.k[0][i]) / sk).powi(2);
        }
        der2 = (der2 / n).sqrt() / h;
        let der12 = der2.max((dnf / n).sqrt());
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(0.2)
        };
        (100.0 * h).min(h1).min(self.max_step)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[f64] {
        &self.y
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Derivative at the current state (first-same-as-last stage).
    pub fn derivative(&self) -> &[f64] {
        &self.k[0]
    }

    pub fn stats(&self) -> (usize, usize, usize) {
        (self.accepted, self.rejected, self.evaluations)
    }

    /// Take one accepted step, never passing `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<()> {
        let dim = self.dim;
        let expo1 = 0.2 - BETA * 0.75;
        let mut last_rejected = false;
        loop {
            let remaining = t_limit - self.t;
            if remaining <= 0.0 {
                return Ok(());
            }
            let mut h = self.h.min(self.max_step);
            let clipped = h >= remaining * (1.0 - 1e-12);
            if clipped {
                h = remaining;
            }
            if h < self.min_step && !clipped {
                return Err(Error::StepUnderflow { t: self.t, h });
            }
            let t = self.t;
            let y = &self.y;
            let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;

            for i in 0..dim {
                self.ytmp[i] = y[i] + h * A21 * k1[i];
            }
            (self.f)(t + C2 * h, &self.ytmp, k2);
            for i in 0..dim {
                self.ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            (self.f)(t + C3 * h, &self.ytmp, k3);
            for i in 0..dim {
                self.ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            (self.f)(t + C4 * h, &self.ytmp, k4);
            for i in 0..dim {
                self.ytmp[i] =
                    y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            (self.f)(t + C5 * h, &self.ytmp, k5);
            for i in 0..dim {
                self.ytmp[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let t_new = if clipped { t_limit } else { t + h };
            (self.f)(t_new, &self.ytmp, k6);
            for i in 0..dim {
                self.ynew[i] = y[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            (self.f)(t_new, &self.ynew, k7);
            self.evaluations += 6;

            let mut err: f64 = 0.0;
            let mut finite = true;
            for i in 0..dim {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let sk = self.atol + self.rtol * y[i].abs().max(self.ynew[i].abs());
                let r = (e / sk).abs();
                if !r.is_finite() || !self.ynew[i].is_finite() {
                    finite = false;
                }
                err = err.max(r);
            }
            if !finite {
                // Retry with a much smaller step; genuine blow-up ends in
                // underflow or a non-finite accepted state.
                if h <= self.min_step {
                    return Err(Error::Divergence { t });
                }
                self.h = h * 0.1;
                self.rejected += 1;
                last_rejected = true;
                continue;
            }

            let fac11 = err.powf(expo1);
            let fac = (fac11 / self.facold.powf(BETA) / SAFETY)
                .clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut hnew = h / fac;
            if err <= 1.0 {
                self.facold = err.max(1e-4);
                if last_rejected {
                    hnew = hnew.min(h);
                }
                // dense output on [t, t_new]
                for r in self.seg.rcont.iter_mut() {
                    r.resize(dim, 0.0);
                }
                {
                    let [r1, r2, r3, r4, r5] = &mut self.seg.rcont;
                    for i in 0..dim {
                        let ydiff = self.ynew[i] - y[i];
                        let bspl = h * k1[i] - ydiff;
                        r1[i] = y[i];
                        r2[i] = ydiff;
                        r3[i] = bspl;
                        r4[i] = ydiff - h * k7[i] - bspl;
                        r5[i] = h
                            * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                                + D7 * k7[i]);
                    }
                }
                self.seg.t = t;
                self.seg.h = t_new - t;
                self.has_segment = true;
                std::mem::swap(&mut self.y, &mut self.ynew);
                std::mem::swap(k1, k7);
                self.t = t_new;
                if !clipped {
                    self.h = hnew;
                }
                self.accepted += 1;
                if self.y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Divergence { t: self.t });
                }
                return Ok(());
            } else {
                hnew = h / (1.0 / FAC_MIN).min(fac11 / SAFETY);
                self.h = hnew;
                self.rejected += 1;
                last_rejected = true;
            }
        }
    }

    /// The dense-output segment of the last accepted step.
    pub fn segment(&self) -> Option<&Segment> {
        self.has_segment.then_some(&self.seg)
    }

    /// Evaluate the solution inside the last accepted step.
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        match self.segment() {
            Some(seg) => seg.eval(t, out),
            None => out.copy_from_slice(&self.y),
        }
    }

    /// Advance to `t_end`, calling `emit(t, x)` for every grid point
    /// `grid_t0 + k * dt` (k >= `*next`) reached along the way.
    pub fn advance_sampled(
        &mut self,
        t_end: f64,
        grid_t0: f64,
        dt: f64,
        next: &mut u64,
        emit: impl FnMut(f64, &[f64]),
    ) -> Result<()> {
        self.sample_until(t_end, t_end, grid_t0, dt, next, emit)
    }

    /// Like [`advance_sampled`](Self::advance_sampled), but steps are only
    /// clipped at `t_limit`; integration stops once every grid point up to
    /// `t_stop <= t_limit` has been emitted. The step sequence therefore does
    /// not depend on where the caller pauses.
    pub fn sample_until(
        &mut self,
        t_stop: f64,
        t_limit: f64,
        grid_t0: f64,
        dt: f64,
        next: &mut u64,
        mut emit: impl FnMut(f64, &[f64]),
    ) -> Result<()> {
        let mut buf = vec![0.0; self.dim];
        let snap = 1e-9 * dt;
        loop {
            loop {
                let tk = grid_t0 + *next as f64 * dt;
                if tk > self.t + snap || tk > t_limit + snap {
                    break;
                }
                if (tk - self.t).abs() <= snap {
                    emit(tk, &self.y);
                } else {
                    self.interpolate(tk, &mut buf);
                    emit(tk, &buf);
                }
                *next += 1;
            }
            let pending = grid_t0 + *next as f64 * dt;
            if self.t >= t_limit || pending > t_stop + snap {
                return Ok(());
            }
            self.step(t_limit)?;
        }
    }
}
