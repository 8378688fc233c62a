//! First-order kinetic matrices: construction, spectra and the
//! `cot(π/n)` bound on the oscillation ratio, equilibria, detailed balance
//! and master-equation evolution.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{self, IntegratorConfig, Trajectory};
use crate::linalg;

/// Metzler matrix with zero column sums: `k_ij = q_ij >= 0` for `i != j`
/// and `k_ii = -Σ_{m != i} q_mi`.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticMatrix {
    k: DMatrix<f64>,
}

impl KineticMatrix {
    /// Uniform directed cycle `1 -> 2 -> ... -> n -> 1` with rate `q`.
    pub fn cycle(n: usize, q: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(format!("cycle needs n >= 2, got {n}")));
        }
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::Domain(format!("rate must be positive, got {q}")));
        }
        let mut rates = Vec::with_capacity(n);
        for i in 0..n {
            rates.push(((i + 1) % n, i, q));
        }
        Self::from_rates(n, &rates)
    }

    /// Build from off-diagonal rates `(i, j, q_ij)` (0-based; `q_ij` is the
    /// rate of the transition `j -> i`). Repeated pairs are summed.
    pub fn from_rates(n: usize, rates: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("kinetic matrix needs n >= 1".into()));
        }
        let mut k = DMatrix::<f64>::zeros(n, n);
        for &(i, j, q) in rates {
            if i >= n || j >= n {
                return Err(Error::Domain(format!("rate index ({i}, {j}) outside 0..{n}")));
            }
            if i == j {
                return Err(Error::Domain(format!("diagonal rate given for state {i}")));
            }
            if !(q >= 0.0) || !q.is_finite() {
                return Err(Error::Domain(format!("negative or non-finite rate q[{i}][{j}] = {q}")));
            }
            k[(i, j)] += q;
        }
        for j in 0..n {
            let out: f64 = (0..n).filter(|&m| m != j).map(|m| k[(m, j)]).sum();
            k[(j, j)] = -out;
        }
        Ok(KineticMatrix { k })
    }

    /// Read CSV triples `i,j,q_ij` with 1-based indices.
    pub fn from_rates_csv(text: &str, n: Option<usize>) -> Result<Self> {
        let mut rates = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed = (f.len() == 3)
                .then(|| (f[0].parse::<usize>(), f[1].parse::<usize>(), f[2].parse::<f64>()));
            match parsed {
                Some((Ok(i), Ok(j), Ok(q))) if i >= 1 && j >= 1 => rates.push((i - 1, j - 1, q)),
                _ if lineno == 0 && rates.is_empty() => continue, // header
                _ => {
                    return Err(Error::Domain(format!(
                        "line {}: expected i,j,q_ij with 1-based indices",
                        lineno + 1
                    )))
                }
            }
        }
        let inferred = rates.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
        let n = n.unwrap_or(inferred);
        if n < 2 {
            return Err(Error::InvalidSize(format!("need at least 2 states, got {n}")));
        }
        Self::from_rates(n, &rates)
    }

    pub fn from_rates_file(path: &Path, n: Option<usize>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_rates_csv(&text, n)
    }

    /// Random kinetic matrix: off-diagonal rates i.i.d. uniform on `[0, 1)`,
    /// each kept with probability `density`; resampled until irreducible.
    pub fn random<R: Rng>(n: usize, density: f64, rng: &mut R) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(format!("need n >= 2, got {n}")));
        }
        if !(density > 0.0 && density <= 1.0) {
            return Err(Error::Domain(format!("density must be in (0, 1], got {density}")));
        }
        loop {
            let mut rates = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let q: f64 = rng.random();
                    let keep = density >= 1.0 || rng.random::<f64>() < density;
                    if keep && q > 0.0 {
                        rates.push((i, j, q));
                    }
                }
            }
            let km = Self::from_rates(n, &rates)?;
            if km.is_irreducible() {
                return Ok(km);
            }
        }
    }

    pub fn n(&self) -> usize {
        self.k.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.k
    }

    /// Strong connectivity of the transition graph.
    pub fn is_irreducible(&self) -> bool {
        let n = self.n();
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                for u in 0..n {
                    let w = if forward { self.k[(u, v)] } else { self.k[(v, u)] };
                    if u != v && w > 0.0 && !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }

    pub fn max_column_sum_defect(&self) -> f64 {
        self.k
            .column_iter()
            .map(|c| c.sum().abs())
            .fold(0.0, f64::max)
    }

    /// "Nonzero" threshold for eigenvalues: `1e-9 * ||K||_inf`.
    pub fn zero_tolerance(&self) -> f64 {
        (1e-9 * linalg::inf_norm(&self.k)).max(f64::MIN_POSITIVE)
    }
}

/// Probability vector on the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexState {
    p: Vec<f64>,
}

impl SimplexState {
    /// Accepts entries down to `-1e-12` (clamped to zero) and a total within
    /// `1e-10` of one.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidSize("empty probability vector".into()));
        }
        if p.iter().any(|v| !v.is_finite() || *v < -1e-12) {
            return Err(Error::Domain("probabilities must be non-negative".into()));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("probabilities sum to {s}, not 1")));
        }
        Ok(SimplexState {
            p: p.into_iter().map(|v| v.max(0.0)).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        SimplexState {
            p: vec![1.0 / n as f64; n],
        }
    }

    pub fn vertex(n: usize, i: usize) -> Self {
        let mut p = vec![0.0; n];
        p[i] = 1.0;
        SimplexState { p }
    }

    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        // normalized exponentials: uniform on the simplex
        let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let s: f64 = w.iter().sum();
        SimplexState {
            p: w.into_iter().map(|v| v / s).collect(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub n: usize,
    /// `[re, im]` pairs.
    pub eigenvalues: Vec<[f64; 2]>,
    pub max_im_re_ratio: f64,
    pub bound: f64,
    pub bound_satisfied: bool,
    /// A nonzero eigenvalue with vanishing real part was found.
    pub purely_imaginary: bool,
}

impl SpectrumReport {
    pub fn spectrum(&self) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect()
    }

    pub fn all_real(&self, tol: f64) -> bool {
        self.eigenvalues.iter().all(|e| e[1].abs() <= tol)
    }
}

/// Eigenvalues with multiplicity, sorted by real then imaginary part.
pub fn eigenvalues(k: &KineticMatrix) -> Result<Vec<Complex64>> {
    if k.n() > 2000 {
        return Err(Error::InvalidSize(format!(
            "dense eigensolver limited to n <= 2000, got {}",
            k.n()
        )));
    }
    linalg::eigenvalues(k.matrix())
}

/// `λ_k = -q + q exp(2πik/n)`, `k = 0..n-1`.
pub fn circulant_cycle_spectrum(n: usize, q: f64) -> Result<Vec<Complex64>> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("cycle needs n >= 2, got {n}")));
    }
    Ok((0..n)
        .map(|k| {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            Complex64::new(-q + q * phi.cos(), q * phi.sin())
        })
        .collect())
}

/// `cot(π/n)`.
pub fn cot_bound(n: usize) -> f64 {
    1.0 / (std::f64::consts::PI / n as f64).tan()
}

/// Largest `|Im λ| / |Re λ|` over eigenvalues with `|λ| > zero_tol`,
/// compared against `cot(π/n)` where `n` is the spectrum length.
pub fn max_im_re_ratio(spectrum: &[Complex64], zero_tol: f64) -> Result<SpectrumReport> {
    if spectrum.is_empty() {
        return Err(Error::InvalidSize("empty spectrum".into()));
    }
    let n = spectrum.len();
    let nonzero: Vec<&Complex64> = spectrum.iter().filter(|l| l.norm() > zero_tol).collect();
    if nonzero.is_empty() {
        return Err(Error::DegenerateSpectrum { zero_tol });
    }
    let mut ratio: f64 = 0.0;
    let mut purely_imaginary = false;
    for l in &nonzero {
        if l.re.abs() < zero_tol {
            purely_imaginary = true;
            ratio = f64::INFINITY;
        } else {
            ratio = ratio.max(l.im.abs() / l.re.abs());
        }
    }
    let bound = cot_bound(n);
    let mut eigen: Vec<Complex64> = spectrum.to_vec();
    linalg::sort_spectrum(&mut eigen);
    Ok(SpectrumReport {
        n,
        eigenvalues: eigen.iter().map(|z| [z.re, z.im]).collect(),
        max_im_re_ratio: ratio,
        bound,
        bound_satisfied: !purely_imaginary && ratio <= bound + 1e-9,
        purely_imaginary,
    })
}

/// Eigenvalues plus ratio report with the default zero tolerance.
pub fn analyze(k: &KineticMatrix) -> Result<SpectrumReport> {
    let ev = eigenvalues(k)?;
    max_im_re_ratio(&ev, k.zero_tolerance())
}

/// Non-negative normalized null vector of `K`.
pub fn perron_vector(k: &KineticMatrix) -> Result<SimplexState> {
    let n = k.n();
    let m = k.matrix();
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let tol = 1e-10 * smax.max(1.0) * n as f64;
    let nullity = sv.iter().filter(|s| **s <= tol).count();
    if nullity != 1 {
        return Err(Error::NonUniqueEquilibrium { nullity });
    }
    // Replace the last balance equation by normalization.
    let mut a = m.clone();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let p = a
        .lu()
        .solve(&b)
        .ok_or(Error::NonUniqueEquilibrium { nullity: 2 })?;
    let clamped: Vec<f64> = p.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = clamped.iter().sum();
    SimplexState::new(clamped.into_iter().map(|v| v / s).collect())
}

/// Smallest equilibrium component below which balance checks are skipped.
pub const MIN_POSITIVE_COMPONENT: f64 = 1e-12;

fn require_positive(p: &SimplexState, n: usize) -> Result<()> {
    if p.len() != n {
        return Err(Error::InvalidSize(format!("equilibrium has {} entries, K has {n}", p.len())));
    }
    if let Some(i) = p.as_slice().iter().position(|v| *v < MIN_POSITIVE_COMPONENT) {
        return Err(Error::Domain(format!("equilibrium component {i} is zero")));
    }
    Ok(())
}

/// `|q_ij p*_j - q_ji p*_i| <= tol` for all pairs.
pub fn check_detailed_balance(k: &KineticMatrix, pstar: &SimplexState, tol: f64) -> Result<bool> {
    let n = k.n();
    require_positive(pstar, n)?;
    let p = pstar.as_slice();
    let m = k.matrix();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] * p[j] - m[(j, i)] * p[i]).abs() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `max_ij |<K e_i, e_j> - <e_i, K e_j>|` under `<x, y> = Σ x_i y_i / p*_i`.
pub fn entropic_self_adjoint_defect(k: &KineticMatrix, pstar: &SimplexState) -> Result<f64> {
    let n = k.n();
    require_positive(pstar, n)?;
    let p = pstar.as_slice();
    let m = k.matrix();
    let mut defect: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            // <K e_i, e_j> = k_ji / p_j ; <e_i, K e_j> = k_ij / p_i
            defect = defect.max((m[(j, i)] / p[j] - m[(i, j)] / p[i]).abs());
        }
    }
    Ok(defect)
}

/// Integrate `P' = K P` from `p0` over `[0, t_final]`. Samples lie on the
/// dense-output grid, so the last one is at the largest grid time <= `t_final`.
pub fn evolve_master(
    k: &KineticMatrix,
    p0: &SimplexState,
    t_final: f64,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    if !(t_final > 0.0) {
        return Err(Error::Domain(format!("t_final must be positive, got {t_final}")));
    }
    if p0.len() != k.n() {
        return Err(Error::InvalidSize("initial state does not match K".into()));
    }
    let m = k.matrix();
    let n = k.n();
    let field = |_: f64, x: &[f64], dx: &mut [f64]| {
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += m[(i, j)] * x[j];
            }
            dx[i] = s;
        }
    };
    integrate::integrate(field, p0.as_slice(), (0.0, t_final), config)
}
