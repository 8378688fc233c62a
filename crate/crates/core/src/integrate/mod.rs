//! Time integration: adaptive Runge–Kutta, variational equations and a
//! method-of-steps solver for constant-delay systems.

mod dde;
mod dopri;
mod variational;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use dde::{integrate_dde, DelayHistory};
pub use dopri::{Dopri5, Segment};
pub use variational::{integrate_variational, Monodromy};

use crate::error::{Error, Result};
use crate::network::{FhnParams, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; `0` selects one automatically.
    pub initial_step: f64,
    /// Unbounded when infinite (`null` in JSON).
    #[serde(with = "inf_as_null")]
    pub max_step: f64,
    /// Sampling interval of the stored trajectory.
    pub dense_output_dt: f64,
}

mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 1e-5,
            atol: 1e-5,
            initial_step: 0.0,
            max_step: f64::INFINITY,
            dense_output_dt: 0.1,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerance(tol: f64) -> Self {
        IntegratorConfig {
            rtol: tol,
            atol: tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::Config(format!(
                "tolerances must be positive (rtol = {}, atol = {})",
                self.rtol, self.atol
            )));
        }
        if !(self.dense_output_dt > 0.0) {
            return Err(Error::Config("dense_output_dt must be positive".into()));
        }
        if !(self.max_step > 0.0) || self.initial_step < 0.0 || self.initial_step.is_nan() {
            return Err(Error::Config("step bounds must be positive".into()));
        }
        Ok(())
    }
}

/// Provenance of a simulated network run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub topology: Topology,
    pub sigma: f64,
    pub seed: u64,
    pub sample_index: u64,
    pub params: FhnParams,
}

/// Uniformly sampled solution path. States are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    dim: usize,
    data: Vec<f64>,
    pub meta: Option<RunMeta>,
}

impl Trajectory {
    pub fn new(dim: usize) -> Self {
        Trajectory {
            times: Vec::new(),
            dim,
            data: Vec::new(),
            meta: None,
        }
    }

    pub fn from_parts(times: Vec<f64>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != times.len() * dim {
            return Err(Error::InvalidSize(format!(
                "{} values do not fit {} samples of dimension {dim}",
                data.len(),
                times.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("sample times must be strictly increasing".into()));
        }
        Ok(Trajectory {
            times,
            dim,
            data,
            meta: None,
        })
    }

    pub fn with_meta(mut self, meta: RunMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn push(&mut self, t: f64, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.times.push(t);
        self.data.extend_from_slice(x);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        (!self.is_empty()).then(|| self.state(self.len() - 1))
    }

    /// Value of component `c` at sample `i`.
    #[inline]
    pub fn value(&self, i: usize, c: usize) -> f64 {
        self.data[i * self.dim + c]
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i, c)).collect()
    }

    pub fn states(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.times.iter().copied().zip(self.data.chunks(self.dim.max(1)))
    }

    pub fn t_start(&self) -> f64 {
        self.times.first().copied().unwrap_or(0.0)
    }

    pub fn t_end(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Sampling interval (assumes uniform sampling).
    pub fn dt(&self) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        (self.t_end() - self.t_start()) / (self.len() - 1) as f64
    }

    /// Samples with `t >= t_from` (with a small tolerance), keeping metadata.
    pub fn tail_from(&self, t_from: f64) -> Trajectory {
        let eps = 1e-9 * self.dt().max(1e-300);
        let start = self.times.partition_point(|&t| t < t_from - eps);
        self.slice(start, self.len())
    }

    /// Samples with `t <= t_to`.
    pub fn head_to(&self, t_to: f64) -> Trajectory {
        let eps = 1e-9 * self.dt().max(1e-300);
        let end = self.times.partition_point(|&t| t <= t_to + eps);
        self.slice(0, end)
    }

    pub fn slice(&self, start: usize, end: usize) -> Trajectory {
        Trajectory {
            times: self.times[start..end].to_vec(),
            dim: self.dim,
            data: self.data[start * self.dim..end * self.dim].to_vec(),
            meta: self.meta.clone(),
        }
    }

    /// Keep only the listed components (in the given order).
    pub fn select(&self, components: &[usize]) -> Trajectory {
        let mut data = Vec::with_capacity(self.len() * components.len());
        for i in 0..self.len() {
            data.extend(components.iter().map(|&c| self.value(i, c)));
        }
        Trajectory {
            times: self.times.clone(),
            dim: components.len(),
            data,
            meta: None,
        }
    }

    /// CSV with header `t,z1..zn,y1..yn` (network layout) and values printed
    /// with 17 significant digits. `comment` lines are written first,
    /// prefixed with `# `.
    pub fn write_csv<W: Write>(&self, mut w: W, comment: Option<&str>) -> std::io::Result<()> {
        if let Some(c) = comment {
            for line in c.lines() {
                writeln!(w, "# {line}")?;
            }
        }
        write!(w, "t")?;
        if self.dim % 2 == 0 {
            let n = self.dim / 2;
            for j in 1..=n {
                write!(w, ",z{j}")?;
            }
            for j in 1..=n {
                write!(w, ",y{j}")?;
            }
        } else {
            for j in 1..=self.dim {
                write!(w, ",x{j}")?;
            }
        }
        writeln!(w)?;
        for (t, x) in self.states() {
            write!(w, "{}", fmt17(t))?;
            for v in x {
                write!(w, ",{}", fmt17(*v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Full double precision, 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Integrate `x' = field(t, x)` over `t_span`, sampling the dense output
/// every `config.dense_output_dt`.
pub fn integrate<F>(field: F, x0: &[f64], t_span: (f64, f64), config: &IntegratorConfig) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let (t0, t1) = t_span;
    if !(t1 > t0) {
        return Err(Error::Domain(format!("empty time span [{t0}, {t1}]")));
    }
    let mut stepper = Dopri5::new(field, t0, x0, t1 - t0, config)?;
    let mut traj = Trajectory::new(x0.len());
    let mut next = 0u64;
    stepper.advance_sampled(t1, t0, config.dense_output_dt, &mut next, |t, x| traj.push(t, x))?;
    Ok(traj)
}

/// Integrate and return only the final state.
pub fn integrate_final<F>(field: F, x0: &[f64], t_span: (f64, f64), config: &IntegratorConfig) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let (t0, t1) = t_span;
    if !(t1 > t0) {
        return Err(Error::Domain(format!("empty time span [{t0}, {t1}]")));
    }
    let mut stepper = Dopri5::new(field, t0, x0, t1 - t0, config)?;
    while stepper.t() < t1 {
        stepper.step(t1)?;
    }
    Ok(stepper.state().to_vec())
}
