use std::fmt;

use super::{Dopri5, IntegratorConfig, Segment, Trajectory};
use crate::error::{Error, Result};
use crate::interp;

enum Source {
    Function(Box<dyn Fn(f64, &mut [f64]) + Send + Sync>),
    Samples { t0: f64, dt: f64, dim: usize, data: Vec<f64> },
}

/// Initial function of a single constant-delay system on `[t0 - delay, t0]`.
pub struct DelayHistory {
    delay: f64,
    dim: usize,
    source: Source,
}

impl fmt::Debug for DelayHistory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DelayHistory")
            .field("delay", &self.delay)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl DelayHistory {
    pub fn from_fn(
        delay: f64,
        dim: usize,
        f: impl Fn(f64, &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(delay > 0.0) {
            return Err(Error::Domain(format!("delay must be positive, got {delay}")));
        }
        Ok(DelayHistory {
            delay,
            dim,
            source: Source::Function(Box::new(f)),
        })
    }

    /// Uniform samples at `t_first + i * dt`, row-major with `dim` components,
    /// interpolated with a local quintic. The last sample is the initial time.
    pub fn from_samples(delay: f64, t_first: f64, dt: f64, dim: usize, data: Vec<f64>) -> Result<Self> {
        if !(delay > 0.0) || !(dt > 0.0) || dim == 0 {
            return Err(Error::Domain("delay, dt and dim must be positive".into()));
        }
        if data.len() % dim != 0 || data.len() / dim < 2 {
            return Err(Error::InvalidSize("history needs at least two samples".into()));
        }
        let span = dt * (data.len() / dim - 1) as f64;
        if span < delay * (1.0 - 1e-9) {
            return Err(Error::Domain(format!(
                "history spans {span} time units, shorter than the delay {delay}"
            )));
        }
        Ok(DelayHistory {
            delay,
            dim,
            source: Source::Samples {
                t0: t_first,
                dt,
                dim,
                data,
            },
        })
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Last time covered by sampled history, if any.
    fn t_last(&self) -> Option<f64> {
        match &self.source {
            Source::Function(_) => None,
            Source::Samples { t0, dt, dim, data } => Some(t0 + dt * (data.len() / dim - 1) as f64),
        }
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) {
        match &self.source {
            Source::Function(f) => f(t, out),
            Source::Samples { t0, dt, dim, data } => {
                let len = data.len() / dim;
                for (c, o) in out.iter_mut().enumerate() {
                    *o = interp::uniform_at(len, *t0, *dt, t, |i| data[i * dim + c]);
                }
            }
        }
    }
}

fn lookup(record: &[Segment], history: &DelayHistory, t0: f64, td: f64, out: &mut [f64]) {
    if td <= t0 || record.is_empty() {
        history.eval(td.min(t0), out);
        return;
    }
    let idx = record.partition_point(|s| s.t_end() < td);
    let seg = &record[idx.min(record.len() - 1)];
    seg.eval(td, out);
}

/// Method of steps for `x'(t) = field(t, x(t), x(t - delay), dx)`.
///
/// Each interval of one delay length is integrated with a fresh step-size
/// controller; the delayed argument is read from the dense output of the
/// previous interval (or the history on the first one).
pub fn integrate_dde<F>(
    mut field: F,
    history: &DelayHistory,
    t_span: (f64, f64),
    config: &IntegratorConfig,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &[f64], &mut [f64]),
{
    let (t0, t1) = t_span;
    if !(t1 > t0) {
        return Err(Error::Domain(format!("empty time span [{t0}, {t1}]")));
    }
    if let Some(t_last) = history.t_last() {
        if (t_last - t0).abs() > 1e-9 * (1.0 + t0.abs()) {
            return Err(Error::Domain(format!(
                "history ends at {t_last} but integration starts at {t0}"
            )));
        }
    }
    let dim = history.dim();
    let delay = history.delay();
    let dt = config.dense_output_dt;

    let mut x = vec![0.0; dim];
    history.eval(t0, &mut x);

    let mut traj = Trajectory::new(dim);
    traj.push(t0, &x);
    let mut next = 1u64;
    let mut record: Vec<Segment> = Vec::new();
    let mut delayed = vec![0.0; dim];
    let mut buf = vec![0.0; dim];

    let mut a = t0;
    while a < t1 {
        let b = (a + delay).min(t1);
        let mut new_segments = Vec::new();
        {
            let rec = &record;
            let rhs = |t: f64, xs: &[f64], dx: &mut [f64]| {
                lookup(rec, history, t0, t - delay, &mut delayed);
                field(t, xs, &delayed, dx);
            };
            let mut stepper = Dopri5::new(rhs, a, &x, b - a, config)?;
            while stepper.t() < b {
                stepper.step(b)?;
                let seg = stepper.segment().expect("accepted step has a segment");
                loop {
                    let tk = t0 + next as f64 * dt;
                    if tk > seg.t_end() + 1e-9 * dt {
                        break;
                    }
                    seg.eval(tk.min(seg.t_end()), &mut buf);
                    traj.push(tk, &buf);
                    next += 1;
                }
                new_segments.push(seg.clone());
            }
            x.copy_from_slice(stepper.state());
        }
        record.extend(new_segments);
        a = b;
        let keep_from = a - delay;
        let drop = record.partition_point(|s| s.t_end() < keep_from);
        if drop > 0 {
            record.drain(..drop);
        }
    }
    Ok(traj)
}
