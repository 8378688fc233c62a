//! C ABI over `ringlab`.
//!
//! Objects are opaque handles created by `ringlab_*_new`/`*_find` calls and
//! released with the matching `*_free`. Every fallible call returns a
//! `RinglabStatus`; on failure `ringlab_last_error` gives a message that
//! stays valid until the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ringlab::detect::{self, OutcomeKind};
use ringlab::integrate::IntegratorConfig;
use ringlab::network::{initial_condition, sync_threshold, CouplingConfig, FhnNetwork, FhnParams, Topology};
use ringlab::spectral::{self, KineticMatrix, SimplexState};
use ringlab::waves::{self, PeriodicOrbit, WaveSearch};
use ringlab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RinglabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    /// Output buffer too small; the required length was still written.
    BufferTooSmall = 4,
    /// No rotating wave was reached.
    NotFound = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RinglabTopology {
    Chain = 0,
    Ring = 1,
    /// `n` is nodes per ring.
    TwoRings = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RinglabOutcome {
    Sync = 0,
    RotatingWave = 1,
    Unresolved = 2,
}

/// Result of `ringlab_network_classify`. Absent metrics are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RinglabClassification {
    pub outcome: RinglabOutcome,
    /// Wave mode, 0 unless `outcome` is `RotatingWave`.
    pub mode: u32,
    pub period: f64,
    pub tau: f64,
    pub sync_error: f64,
    pub checkpoint_time: f64,
}

/// Ratio summary of a kinetic spectrum.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RinglabSpectrumSummary {
    pub max_im_re_ratio: f64,
    pub bound: f64,
    pub bound_satisfied: bool,
    pub purely_imaginary: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RinglabFloquetSummary {
    pub trivial_defect: f64,
    pub max_nontrivial_modulus: f64,
    pub stable: bool,
    pub liouville_defect: f64,
}

/// Opaque kinetic matrix.
pub struct RinglabKinetic(KineticMatrix);

/// Opaque FHN network.
pub struct RinglabNetwork(FhnNetwork);

/// Opaque periodic rotating-wave orbit.
pub struct RinglabOrbit {
    orbit: PeriodicOrbit,
    coupling: CouplingConfig,
    params: FhnParams,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(e: &Error) -> RinglabStatus {
    if e.is_numerical() || matches!(e, Error::Precondition(_) | Error::NonUniqueEquilibrium { .. }) {
        RinglabStatus::Numerical
    } else {
        RinglabStatus::InvalidArgument
    }
}

/// Run `f`, turning errors and panics into status codes.
fn guard<F>(f: F) -> RinglabStatus
where
    F: FnOnce() -> Result<RinglabStatus, (RinglabStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            RinglabStatus::Panic
        }
    }
}

trait Lift<T> {
    fn lift(self) -> Result<T, (RinglabStatus, String)>;
}

impl<T> Lift<T> for ringlab::Result<T> {
    fn lift(self) -> Result<T, (RinglabStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (RinglabStatus, String) {
    (RinglabStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (RinglabStatus, String) {
    (RinglabStatus::InvalidArgument, msg.into())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (RinglabStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], (RinglabStatus, String)> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), (RinglabStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// `topology` is a `RinglabTopology` value.
fn topology_of(topology: u32, n: usize) -> Result<Topology, (RinglabStatus, String)> {
    match topology {
        t if t == RinglabTopology::Chain as u32 => Ok(Topology::chain(n)),
        t if t == RinglabTopology::Ring as u32 => Ok(Topology::ring(n)),
        t if t == RinglabTopology::TwoRings as u32 => Ok(Topology::two_rings(n)),
        t => Err(invalid(format!("unknown topology {t}"))),
    }
}

/// Message of the last failure on this thread, or null.
#[no_mangle]
pub extern "C" fn ringlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, static string.
#[no_mangle]
pub extern "C" fn ringlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `cot(π/n)`, or NaN for `n < 2`.
#[no_mangle]
pub extern "C" fn ringlab_cot_bound(n: usize) -> f64 {
    if n < 2 {
        f64::NAN
    } else {
        spectral::cot_bound(n)
    }
}

/// Analytic synchronization threshold of a ring (`n >= 2`) or chain;
/// `topology` is a `RinglabTopology` value.
///
/// # Safety
/// `out` must point to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn ringlab_sync_threshold(topology: u32, n: usize, out: *mut f64) -> RinglabStatus {
    guard(|| {
        let t = topology_of(topology, n)?;
        let v = sync_threshold(&t).lift()?;
        write_out(out, v, "out")?;
        Ok(RinglabStatus::Ok)
    })
}

/// Uniform directed cycle with rate `q`.
///
/// # Safety
/// `out` must point to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn ringlab_kinetic_cycle(n: usize, q: f64, out: *mut *mut RinglabKinetic) -> RinglabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let k = KineticMatrix::cycle(n, q).lift()?;
        *out = Box::into_raw(Box::new(RinglabKinetic(k)));
        Ok(RinglabStatus::Ok)
    })
}

/// Kinetic matrix from `len` rate triples: transition `j -> i` with rate
/// `q[t]`, 0-based indices.
///
/// # Safety
/// `i`, `j` and `q` must each hold `len` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ringlab_kinetic_from_rates(
    n: usize,
    i: *const usize,
    j: *const usize,
    q: *const f64,
    len: usize,
    out: *mut *mut RinglabKinetic,
) -> RinglabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (i, j, q) = (slice(i, len, "i")?, slice(j, len, "j")?, slice(q, len, "q")?);
        let rates: Vec<(usize, usize, f64)> = (0..len).map(|t| (i[t], j[t], q[t])).collect();
        let k = KineticMatrix::from_rates(n, &rates).lift()?;
        *out = Box::into_raw(Box::new(RinglabKinetic(k)));
        Ok(RinglabStatus::Ok)
    })
}

/// # Safety
/// `k` must come from a `ringlab_kinetic_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn ringlab_kinetic_free(k: *mut RinglabKinetic) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

/// # Safety
/// `k` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ringlab_kinetic_n(k: *const RinglabKinetic) -> usize {
    k.as_ref().map_or(0, |k| k.0.n())
}

/// Eigenvalues into `re`/`im` (capacity `cap`), count into `len`, and the
/// ratio summary into `summary` (may be null).
///
/// # Safety
/// `re` and `im` must hold `cap` doubles; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ringlab_kinetic_spectrum(
    k: *const RinglabKinetic,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
    len: *mut usize,
    summary: *mut RinglabSpectrumSummary,
) -> RinglabStatus {
    guard(|| {
        let k = k.as_ref().ok_or_else(|| null("k"))?;
        let report = spectral::analyze(&k.0).lift()?;
        let m = report.eigenvalues.len();
        write_out(len, m, "len")?;
        if !summary.is_null() {
            summary.write(RinglabSpectrumSummary {
                max_im_re_ratio: report.max_im_re_ratio,
                bound: report.bound,
                bound_satisfied: report.bound_satisfied,
                purely_imaginary: report.purely_imaginary,
            });
        }
        if cap < m {
            return Err((RinglabStatus::BufferTooSmall, format!("need {m} slots, got {cap}")));
        }
        let (re, im) = (slice_mut(re, m, "re")?, slice_mut(im, m, "im")?);
        for (t, e) in report.eigenvalues.iter().enumerate() {
            re[t] = e[0];
            im[t] = e[1];
        }
        Ok(RinglabStatus::Ok)
    })
}

/// Equilibrium distribution into `out` (`n` doubles).
///
/// # Safety
/// `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn ringlab_kinetic_perron(k: *const RinglabKinetic, out: *mut f64, n: usize) -> RinglabStatus {
    guard(|| {
        let k = k.as_ref().ok_or_else(|| null("k"))?;
        if n != k.0.n() {
            return Err(invalid(format!("buffer length {n} differs from n = {}", k.0.n())));
        }
        let p = spectral::perron_vector(&k.0).lift()?;
        slice_mut(out, n, "out")?.copy_from_slice(p.as_slice());
        Ok(RinglabStatus::Ok)
    })
}

/// Evolve `P' = KP` from `p0` to `t_final` with tolerance `tol`; the final
/// distribution goes to `p_out`. Both buffers hold `n` doubles.
///
/// # Safety
/// `p0` and `p_out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn ringlab_kinetic_evolve(
    k: *const RinglabKinetic,
    p0: *const f64,
    n: usize,
    t_final: f64,
    tol: f64,
    p_out: *mut f64,
) -> RinglabStatus {
    guard(|| {
        let k = k.as_ref().ok_or_else(|| null("k"))?;
        if n != k.0.n() {
            return Err(invalid(format!("buffer length {n} differs from n = {}", k.0.n())));
        }
        let p = SimplexState::new(slice(p0, n, "p0")?.to_vec()).lift()?;
        let cfg = IntegratorConfig {
            dense_output_dt: t_final.max(f64::MIN_POSITIVE),
            ..IntegratorConfig::with_tolerance(tol)
        };
        let traj = spectral::evolve_master(&k.0, &p, t_final, &cfg).lift()?;
        let last = traj.last_state().ok_or_else(|| invalid("empty trajectory"))?;
        slice_mut(p_out, n, "p_out")?.copy_from_slice(last);
        Ok(RinglabStatus::Ok)
    })
}

/// FHN network with default parameters; `topology` is a
/// `RinglabTopology` value.
///
/// # Safety
/// `out` must point to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn ringlab_network_new(
    topology: u32,
    n: usize,
    sigma: f64,
    out: *mut *mut RinglabNetwork,
) -> RinglabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let t = topology_of(topology, n)?;
        if t.n() == 0 {
            return Err(invalid("network has no nodes"));
        }
        let net = FhnNetwork::new(FhnParams::default(), CouplingConfig::new(t, sigma).lift()?).lift()?;
        *out = Box::into_raw(Box::new(RinglabNetwork(net)));
        Ok(RinglabStatus::Ok)
    })
}

/// # Safety
/// `net` must come from `ringlab_network_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn ringlab_network_free(net: *mut RinglabNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// State dimension `2n` (layout `z1..zn, y1..yn`), 0 for null.
///
/// # Safety
/// `net` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ringlab_network_dim(net: *const RinglabNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.dim())
}

/// Vector field `dx = F(x)`.
///
/// # Safety
/// `x` and `dx` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn ringlab_network_field(
    net: *const RinglabNetwork,
    x: *const f64,
    dx: *mut f64,
    dim: usize,
) -> RinglabStatus {
    guard(|| {
        let net = net.as_ref().ok_or_else(|| null("net"))?;
        if dim != net.0.dim() {
            return Err(invalid(format!("dimension {dim} differs from {}", net.0.dim())));
        }
        let (x, dx) = (slice(x, dim, "x")?, slice_mut(dx, dim, "dx")?);
        net.0.eval(x, dx);
        Ok(RinglabStatus::Ok)
    })
}

/// Seeded initial state from the default box (`dim` doubles).
///
/// # Safety
/// `out` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn ringlab_network_initial_state(
    net: *const RinglabNetwork,
    seed: u64,
    out: *mut f64,
    dim: usize,
) -> RinglabStatus {
    guard(|| {
        let net = net.as_ref().ok_or_else(|| null("net"))?;
        if dim != net.0.dim() {
            return Err(invalid(format!("dimension {dim} differs from {}", net.0.dim())));
        }
        let x = initial_condition(net.0.n(), seed).to_flat();
        slice_mut(out, dim, "out")?.copy_from_slice(&x);
        Ok(RinglabStatus::Ok)
    })
}

/// Simulate from the seeded initial state with checkpoints every 1000 time
/// units up to `t_final` and classify.
///
/// # Safety
/// `out` must point to a writable `RinglabClassification`.
#[no_mangle]
pub unsafe extern "C" fn ringlab_network_classify(
    net: *const RinglabNetwork,
    seed: u64,
    t_final: f64,
    out: *mut RinglabClassification,
) -> RinglabStatus {
    guard(|| {
        let net = net.as_ref().ok_or_else(|| null("net"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let x0 = initial_condition(net.0.n(), seed).to_flat();
        let schedule = detect::checkpoint_schedule(t_final, detect::CHECK_INTERVAL);
        let run = detect::simulate_classified(
            &net.0,
            &x0,
            t_final,
            &schedule,
            &IntegratorConfig::default(),
            detect::DEFAULT_WINDOW.min(t_final),
            None,
        )
        .lift()?;
        let c = run.classification;
        let (outcome, mode) = match c.kind {
            OutcomeKind::Sync => (RinglabOutcome::Sync, 0),
            OutcomeKind::RotatingWave { mode } => (RinglabOutcome::RotatingWave, mode as u32),
            OutcomeKind::None => (RinglabOutcome::Unresolved, 0),
        };
        let m = &c.metrics;
        out.write(RinglabClassification {
            outcome,
            mode,
            period: m.period.unwrap_or(f64::NAN),
            tau: m.tau.unwrap_or(f64::NAN),
            sync_error: m.sync_error.unwrap_or(f64::NAN),
            checkpoint_time: m.checkpoint_time.unwrap_or(f64::NAN),
        });
        Ok(RinglabStatus::Ok)
    })
}

/// Search a ring of `n` nodes for a Mode-1 rotating wave from the seeded
/// staggered start. Returns `NotFound` when the run does not settle on one.
///
/// # Safety
/// `out` must point to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn ringlab_orbit_find(n: usize, sigma: f64, seed: u64, out: *mut *mut RinglabOrbit) -> RinglabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let search = WaveSearch::default();
        let coupling = CouplingConfig::new(Topology::ring(n), sigma).lift()?;
        match waves::find_wave_orbit(n, sigma, seed, &search).lift()? {
            Some(orbit) => {
                *out = Box::into_raw(Box::new(RinglabOrbit {
                    orbit,
                    coupling,
                    params: search.params,
                }));
                Ok(RinglabStatus::Ok)
            }
            None => {
                *out = ptr::null_mut();
                Err((RinglabStatus::NotFound, format!("no rotating wave for n = {n}, sigma = {sigma}")))
            }
        }
    })
}

/// # Safety
/// `orbit` must come from `ringlab_orbit_find` or be null.
#[no_mangle]
pub unsafe extern "C" fn ringlab_orbit_free(orbit: *mut RinglabOrbit) {
    if !orbit.is_null() {
        drop(Box::from_raw(orbit));
    }
}

/// Period, or NaN for null.
///
/// # Safety
/// `orbit` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ringlab_orbit_period(orbit: *const RinglabOrbit) -> f64 {
    orbit.as_ref().map_or(f64::NAN, |o| o.orbit.period)
}

/// Neighbour lag, or NaN for null.
///
/// # Safety
/// `orbit` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ringlab_orbit_tau(orbit: *const RinglabOrbit) -> f64 {
    orbit.as_ref().map_or(f64::NAN, |o| o.orbit.tau)
}

/// Floquet multipliers (`2n` of them) into `re`/`im`, count into `len`,
/// summary into `summary` (may be null).
///
/// # Safety
/// `re` and `im` must hold `cap` doubles; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ringlab_orbit_floquet(
    orbit: *const RinglabOrbit,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
    len: *mut usize,
    summary: *mut RinglabFloquetSummary,
) -> RinglabStatus {
    guard(|| {
        let o = orbit.as_ref().ok_or_else(|| null("orbit"))?;
        let f = waves::floquet_multipliers(&o.orbit, &o.coupling, &o.params).lift()?;
        let m = f.multipliers.len();
        write_out(len, m, "len")?;
        if !summary.is_null() {
            summary.write(RinglabFloquetSummary {
                trivial_defect: f.trivial_defect,
                max_nontrivial_modulus: f.max_nontrivial_modulus,
                stable: f.stable,
                liouville_defect: f.liouville_defect,
            });
        }
        if cap < m {
            return Err((RinglabStatus::BufferTooSmall, format!("need {m} slots, got {cap}")));
        }
        let (re, im) = (slice_mut(re, m, "re")?, slice_mut(im, m, "im")?);
        for (t, mu) in f.multipliers.iter().enumerate() {
            re[t] = mu[0];
            im[t] = mu[1];
        }
        Ok(RinglabStatus::Ok)
    })
}
