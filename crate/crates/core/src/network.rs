//! FitzHugh–Nagumo nodes on directed chains, rings and coupled rings.
//!
//! Network states are flat vectors laid out as `[z_1..z_n, y_1..y_n]`.

use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::mix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FhnParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for FhnParams {
    fn default() -> Self {
        FhnParams {
            alpha: 0.08,
            beta: 0.8,
            gamma: 1.0 / 3.0,
        }
    }
}

impl FhnParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha > 0.0 && self.beta > 0.0 && self.gamma > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!("FHN parameters must be positive: {self:?}")))
        }
    }

    /// Single uncoupled node: `(z, y) -> (z', y')`.
    #[inline]
    pub fn node_field(&self, z: f64, y: f64) -> (f64, f64) {
        (
            self.alpha * (y - self.beta * z),
            y - self.gamma * y * y * y - z,
        )
    }

    /// Node Jacobian with respect to `(z, y)`.
    #[inline]
    pub fn node_jacobian(&self, y: f64) -> [[f64; 2]; 2] {
        [
            [-self.alpha * self.beta, self.alpha],
            [-1.0, 1.0 - 3.0 * self.gamma * y * y],
        ]
    }
}

/// Adjacency `Q` with `q[j][l] > 0` meaning node `j` receives from node `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adjacency {
    n: usize,
    weights: Vec<f64>,
}

impl Adjacency {
    pub fn zeros(n: usize) -> Self {
        Adjacency {
            n,
            weights: vec![0.0; n * n],
        }
    }

    pub fn from_matrix(q: &DMatrix<f64>) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::InvalidSize("adjacency must be square".into()));
        }
        let n = q.nrows();
        let mut a = Adjacency::zeros(n);
        for j in 0..n {
            for l in 0..n {
                a.set(j, l, q[(j, l)])?;
            }
        }
        Ok(a)
    }

    /// Parse `from,to,weight` rows with 1-based indices. The node count is
    /// the largest index seen unless `n` is given.
    pub fn from_edge_csv(text: &str, n: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Domain(format!(
                    "line {}: expected from,to,weight",
                    lineno + 1
                )));
            }
            let from = fields[0].parse::<usize>();
            let to = fields[1].parse::<usize>();
            let w = fields[2].parse::<f64>();
            match (from, to, w) {
                (Ok(f), Ok(t), Ok(w)) => edges.push((f, t, w)),
                _ if lineno == 0 => continue, // header row
                _ => {
                    return Err(Error::Domain(format!("line {}: unparsable edge", lineno + 1)))
                }
            }
        }
        let max_idx = edges.iter().map(|&(f, t, _)| f.max(t)).max().unwrap_or(0);
        let n = n.unwrap_or(max_idx);
        if edges.iter().any(|&(f, t, _)| f == 0 || t == 0 || f > n || t > n) {
            return Err(Error::Domain(format!("edge index outside 1..={n}")));
        }
        let mut a = Adjacency::zeros(n);
        for (f, t, w) in edges {
            let cur = a.get(t - 1, f - 1);
            a.set(t - 1, f - 1, cur + w)?;
        }
        Ok(a)
    }

    pub fn from_edge_file(path: &Path, n: Option<usize>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_edge_csv(&text, n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, j: usize, l: usize) -> f64 {
        self.weights[j * self.n + l]
    }

    pub fn set(&mut self, j: usize, l: usize, w: f64) -> Result<()> {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::Domain(format!("edge weight must be non-negative, got {w}")));
        }
        if j == l && w != 0.0 {
            return Err(Error::Domain(format!("self-coupling at node {}", j + 1)));
        }
        self.weights[j * self.n + l] = w;
        Ok(())
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.weights)
    }

    /// Incoming edges `(l, q_jl)` of node `j`.
    pub fn inputs(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.n).filter_map(move |l| {
            let w = self.get(j, l);
            (w != 0.0).then_some((l, w))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Topology {
    /// Node 1 leads; node `j` listens to node `j - 1`.
    DirectedChain { n: usize },
    /// Chain closed by feeding node `n` back into node 1.
    DirectedRing { n: usize },
    /// Two directed rings of `k` nodes joined by an undirected edge between
    /// node 1 and node `k + 1`.
    TwoRings { k: usize },
    Custom { adjacency: Adjacency },
}

impl Topology {
    pub fn chain(n: usize) -> Self {
        Topology::DirectedChain { n }
    }

    pub fn ring(n: usize) -> Self {
        Topology::DirectedRing { n }
    }

    pub fn two_rings(k: usize) -> Self {
        Topology::TwoRings { k }
    }

    pub fn n(&self) -> usize {
        match self {
            Topology::DirectedChain { n } | Topology::DirectedRing { n } => *n,
            Topology::TwoRings { k } => 2 * k,
            Topology::Custom { adjacency } => adjacency.n(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Topology::DirectedChain { .. } => "chain",
            Topology::DirectedRing { .. } => "ring",
            Topology::TwoRings { .. } => "two-rings",
            Topology::Custom { .. } => "custom",
        }
    }

    pub fn adjacency(&self) -> Adjacency {
        let n = self.n();
        let mut a = Adjacency::zeros(n);
        let link = |a: &mut Adjacency, to: usize, from: usize| {
            if to != from {
                a.weights[to * n + from] = 1.0;
            }
        };
        match self {
            Topology::DirectedChain { n } => {
                for j in 1..*n {
                    link(&mut a, j, j - 1);
                }
            }
            Topology::DirectedRing { n } => {
                for j in 1..*n {
                    link(&mut a, j, j - 1);
                }
                if *n >= 2 {
                    link(&mut a, 0, n - 1);
                }
            }
            Topology::TwoRings { k } => {
                for base in [0, *k] {
                    for j in 1..*k {
                        link(&mut a, base + j, base + j - 1);
                    }
                    if *k >= 2 {
                        link(&mut a, base, base + k - 1);
                    }
                }
                if *k >= 1 {
                    link(&mut a, 0, *k);
                    link(&mut a, *k, 0);
                }
            }
            Topology::Custom { adjacency } => return adjacency.clone(),
        }
        a
    }

    /// `L = Diag(row sums of Q) - Q`, so the coupling input is `u = -σ L y`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let q = self.adjacency().to_matrix();
        let n = q.nrows();
        let mut l = -q.clone();
        for j in 0..n {
            l[(j, j)] = q.row(j).sum();
        }
        l
    }

    /// Ordered neighbour pairs `(from, to)` along which synchronization
    /// errors and wave shifts are measured: consecutive nodes for chains,
    /// cyclically for rings, per ring for two rings, edges for custom graphs.
    pub fn neighbour_pairs(&self) -> Vec<(usize, usize)> {
        match self {
            Topology::DirectedChain { n } => (1..*n).map(|j| (j - 1, j)).collect(),
            Topology::DirectedRing { n } => ring_pairs(0, *n),
            Topology::TwoRings { k } => {
                let mut p = ring_pairs(0, *k);
                p.extend(ring_pairs(*k, *k));
                p
            }
            Topology::Custom { adjacency } => {
                let mut p = Vec::new();
                for j in 0..adjacency.n() {
                    for (l, _) in adjacency.inputs(j) {
                        p.push((l, j));
                    }
                }
                p
            }
        }
    }
}

fn ring_pairs(base: usize, n: usize) -> Vec<(usize, usize)> {
    match n {
        0 | 1 => Vec::new(),
        2 => vec![(base, base + 1)],
        _ => (0..n).map(|j| (base + j, base + (j + 1) % n)).collect(),
    }
}

/// Analytic coupling strength above which synchronization is guaranteed:
/// 1 for a chain of any length, `1 / (1 - cos(2π/n))` for a ring.
pub fn sync_threshold(t: &Topology) -> Result<f64> {
    match t {
        Topology::DirectedChain { .. } => Ok(1.0),
        Topology::DirectedRing { n } if *n >= 2 => {
            Ok(1.0 / (1.0 - (2.0 * std::f64::consts::PI / *n as f64).cos()))
        }
        Topology::DirectedRing { n } => Err(Error::Domain(format!(
            "ring threshold needs n >= 2, got {n}"
        ))),
        other => Err(Error::UnsupportedTopology(format!(
            "no analytic synchronization threshold for {}",
            other.name()
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingConfig {
    pub topology: Topology,
    pub sigma: f64,
}

impl CouplingConfig {
    pub fn new(topology: Topology, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::Domain(format!("coupling strength must be >= 0, got {sigma}")));
        }
        Ok(CouplingConfig { topology, sigma })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub z: Vec<f64>,
    pub y: Vec<f64>,
}

impl NetworkState {
    pub fn zeros(n: usize) -> Self {
        NetworkState {
            z: vec![0.0; n],
            y: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.z.clone();
        v.extend_from_slice(&self.y);
        v
    }

    pub fn from_flat(x: &[f64]) -> Result<Self> {
        if x.len() % 2 != 0 {
            return Err(Error::InvalidSize(format!("odd state length {}", x.len())));
        }
        let n = x.len() / 2;
        Ok(NetworkState {
            z: x[..n].to_vec(),
            y: x[n..].to_vec(),
        })
    }
}

/// Coupled FHN network `x' = f(x) - σ (L ⊗ BC) x`.
#[derive(Debug, Clone)]
pub struct FhnNetwork {
    pub params: FhnParams,
    pub coupling: CouplingConfig,
    inputs: Vec<Vec<(usize, f64)>>,
    in_degree: Vec<f64>,
}

impl FhnNetwork {
    pub fn new(params: FhnParams, coupling: CouplingConfig) -> Result<Self> {
        params.validate()?;
        let q = coupling.topology.adjacency();
        let n = q.n();
        let inputs: Vec<Vec<(usize, f64)>> = (0..n).map(|j| q.inputs(j).collect()).collect();
        let in_degree = inputs.iter().map(|e| e.iter().map(|(_, w)| w).sum()).collect();
        Ok(FhnNetwork {
            params,
            coupling,
            inputs,
            in_degree,
        })
    }

    pub fn ring(n: usize, sigma: f64) -> Result<Self> {
        Self::new(FhnParams::default(), CouplingConfig::new(Topology::ring(n), sigma)?)
    }

    pub fn n(&self) -> usize {
        self.inputs.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.n()
    }

    pub fn sigma(&self) -> f64 {
        self.coupling.sigma
    }

    pub fn topology(&self) -> &Topology {
        &self.coupling.topology
    }

    /// Coupling input `u_j = σ Σ_l q_jl (y_l - y_j)`.
    #[inline]
    pub fn coupling_input(&self, j: usize, y: &[f64]) -> f64 {
        let yj = y[j];
        let s: f64 = self.inputs[j].iter().map(|&(l, w)| w * (y[l] - yj)).sum();
        self.coupling.sigma * s
    }

    /// Vector field on the flat layout `[z, y]`.
    pub fn eval(&self, x: &[f64], dx: &mut [f64]) {
        let n = self.n();
        let (z, y) = x.split_at(n);
        let (dz, dy) = dx.split_at_mut(n);
        for j in 0..n {
            let (fz, fy) = self.params.node_field(z[j], y[j]);
            dz[j] = fz;
            dy[j] = fy + self.coupling_input(j, y);
        }
    }

    /// Full `2n x 2n` Jacobian at `x` in the flat layout.
    pub fn jacobian_into(&self, x: &[f64], jm: &mut DMatrix<f64>) {
        let n = self.n();
        jm.fill(0.0);
        let sigma = self.coupling.sigma;
        for j in 0..n {
            let jj = self.params.node_jacobian(x[n + j]);
            jm[(j, j)] = jj[0][0];
            jm[(j, n + j)] = jj[0][1];
            jm[(n + j, j)] = jj[1][0];
            jm[(n + j, n + j)] = jj[1][1] - sigma * self.in_degree[j];
            for &(l, w) in &self.inputs[j] {
                jm[(n + j, n + l)] += sigma * w;
            }
        }
    }

    /// `out = J(x) v` without forming the matrix.
    pub fn jacobian_apply(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        let n = self.n();
        let sigma = self.coupling.sigma;
        let (vz, vy) = v.split_at(n);
        let (oz, oy) = out.split_at_mut(n);
        for j in 0..n {
            let jj = self.params.node_jacobian(x[n + j]);
            oz[j] = jj[0][0] * vz[j] + jj[0][1] * vy[j];
            let mut c = -self.in_degree[j] * vy[j];
            for &(l, w) in &self.inputs[j] {
                c += w * vy[l];
            }
            oy[j] = jj[1][0] * vz[j] + jj[1][1] * vy[j] + sigma * c;
        }
    }

    /// Trace of the Jacobian at `x`.
    pub fn jacobian_trace(&self, x: &[f64]) -> f64 {
        let n = self.n();
        (0..n)
            .map(|j| {
                let jj = self.params.node_jacobian(x[n + j]);
                jj[0][0] + jj[1][1] - self.coupling.sigma * self.in_degree[j]
            })
            .sum()
    }

    pub fn field(&self) -> impl Fn(f64, &[f64], &mut [f64]) + '_ {
        move |_, x, dx| self.eval(x, dx)
    }
}

/// `fhn_vector_field` on structured states.
pub fn fhn_vector_field(state: &NetworkState, params: &FhnParams, coupling: &CouplingConfig) -> Result<NetworkState> {
    let net = FhnNetwork::new(*params, coupling.clone())?;
    if state.z.len() != net.n() || state.y.len() != net.n() {
        return Err(Error::InvalidSize(format!(
            "state has {} nodes, network has {}",
            state.n(),
            net.n()
        )));
    }
    let x = state.to_flat();
    let mut dx = vec![0.0; x.len()];
    net.eval(&x, &mut dx);
    NetworkState::from_flat(&dx)
}

/// Half-widths of the initial-condition box: `|y| <= 3√3/2`, `|z| <= 15√3/8`.
pub fn ic_box() -> (f64, f64) {
    let s3 = 3f64.sqrt();
    (1.5 * s3, 15.0 / 8.0 * s3)
}

/// One initial condition drawn uniformly from the box, determined by `seed`.
pub fn initial_condition(n: usize, seed: u64) -> NetworkState {
    let (ybound, zbound) = ic_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = NetworkState::zeros(n);
    for j in 0..n {
        s.y[j] = rng.random_range(-ybound..=ybound);
        s.z[j] = rng.random_range(-zbound..=zbound);
    }
    s
}

/// `count` initial conditions; sample `k` depends only on `(seed, k)`.
pub fn sample_initial_conditions(n: usize, count: usize, seed: u64) -> Vec<NetworkState> {
    (0..count as u64)
        .map(|k| initial_condition(n, mix(&[seed, k])))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    #[serde(rename = "V")]
    pub v: f64,
    pub s_per_node: Vec<f64>,
    pub h_per_node: Vec<f64>,
}

/// Storage `S = (z²/α + y²)/2` and dissipation `H = βz² + y²(γy² - 1)` per
/// node, and their network total `V = Σ S`.
pub fn energy(state: &NetworkState, params: &FhnParams) -> EnergyReport {
    let s_per_node: Vec<f64> = state
        .z
        .iter()
        .zip(&state.y)
        .map(|(z, y)| 0.5 * (z * z / params.alpha + y * y))
        .collect();
    let h_per_node = state
        .z
        .iter()
        .zip(&state.y)
        .map(|(z, y)| params.beta * z * z + y * y * (params.gamma * y * y - 1.0))
        .collect();
    EnergyReport {
        v: s_per_node.iter().sum(),
        s_per_node,
        h_per_node,
    }
}

/// Constant term `n (αβ + 1)² / (4γ)` of the dissipation inequality
/// `V' <= -αβ V + n (αβ + 1)² / (4γ)`.
pub fn dissipation_offset(n: usize, params: &FhnParams) -> f64 {
    let ab = params.alpha * params.beta;
    n as f64 * (ab + 1.0).powi(2) / (4.0 * params.gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigenvalues;

    #[test]
    fn chain_laplacian_matches_display() {
        let l = Topology::chain(3).laplacian();
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, -1.0, 1.0]);
        assert_eq!(l, expected);
    }

    #[test]
    fn ring_laplacian_is_identity_minus_q() {
        let t = Topology::ring(3);
        let q = t.adjacency().to_matrix();
        assert_eq!(t.laplacian(), DMatrix::identity(3, 3) - q.clone());
        assert_eq!(q[(0, 2)], 1.0);
        assert_eq!(q[(1, 0)], 1.0);
        let ev = eigenvalues(&t.laplacian()).unwrap();
        let c = (2.0 * std::f64::consts::PI / 3.0).cos();
        let s = (2.0 * std::f64::consts::PI / 3.0).sin();
        assert!(ev[0].norm() < 1e-12);
        assert!((ev[1].re - (1.0 - c)).abs() < 1e-12 && (ev[1].im + s).abs() < 1e-12);
        assert!((ev[2].re - (1.0 - c)).abs() < 1e-12 && (ev[2].im - s).abs() < 1e-12);
    }

    #[test]
    fn two_rings_bridge_is_symmetric() {
        let t = Topology::two_rings(2);
        let l = t.laplacian();
        let q = t.adjacency().to_matrix();
        assert_eq!(l.nrows(), 4);
        assert_eq!(q[(0, 2)], 1.0);
        assert_eq!(q[(2, 0)], 1.0);
        for j in 0..4 {
            let degree: f64 = q.row(j).sum();
            assert_eq!(l[(j, j)], degree);
            assert_eq!(l.row(j).sum(), 0.0);
        }
        // nodes 1 and 3 have the ring input plus the bridge
        assert_eq!(l[(0, 0)], 2.0);
        assert_eq!(l[(1, 1)], 1.0);
    }

    #[test]
    fn thresholds() {
        assert_eq!(sync_threshold(&Topology::chain(150)).unwrap(), 1.0);
        assert!((sync_threshold(&Topology::ring(3)).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((sync_threshold(&Topology::ring(10)).unwrap() - 5.236_067_977_5).abs() < 1e-9);
        assert!(matches!(
            sync_threshold(&Topology::two_rings(3)),
            Err(Error::UnsupportedTopology(_))
        ));
    }

    #[test]
    fn field_vanishes_at_origin_and_on_sync_manifold() {
        let p = FhnParams::default();
        let c = CouplingConfig::new(Topology::ring(5), 2.7).unwrap();
        let d = fhn_vector_field(&NetworkState::zeros(5), &p, &c).unwrap();
        assert!(d.z.iter().chain(&d.y).all(|v| *v == 0.0));

        let net = FhnNetwork::new(p, c).unwrap();
        let y = vec![0.731; 5];
        for j in 0..5 {
            assert_eq!(net.coupling_input(j, &y), 0.0);
        }
    }

    #[test]
    fn single_node_has_no_coupling() {
        let p = FhnParams::default();
        for t in [Topology::ring(1), Topology::chain(1)] {
            let c = CouplingConfig::new(t, 9.0).unwrap();
            let s = NetworkState {
                z: vec![0.3],
                y: vec![-1.2],
            };
            let d = fhn_vector_field(&s, &p, &c).unwrap();
            let (fz, fy) = p.node_field(0.3, -1.2);
            assert_eq!(d.z[0], fz);
            assert_eq!(d.y[0], fy);
        }
    }

    #[test]
    fn negative_sigma_rejected() {
        assert!(CouplingConfig::new(Topology::ring(3), -0.1).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let net = FhnNetwork::new(
            FhnParams::default(),
            CouplingConfig::new(Topology::two_rings(3), 0.9).unwrap(),
        )
        .unwrap();
        let x0 = initial_condition(6, 3).to_flat();
        let mut jm = DMatrix::zeros(12, 12);
        net.jacobian_into(&x0, &mut jm);
        let h = 1e-6;
        let (mut fp, mut fm) = (vec![0.0; 12], vec![0.0; 12]);
        for c in 0..12 {
            let mut xp = x0.clone();
            let mut xm = x0.clone();
            xp[c] += h;
            xm[c] -= h;
            net.eval(&xp, &mut fp);
            net.eval(&xm, &mut fm);
            for r in 0..12 {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                assert!((fd - jm[(r, c)]).abs() < 1e-6, "({r},{c})");
            }
        }
        let tr: f64 = (0..12).map(|i| jm[(i, i)]).sum();
        assert!((tr - net.jacobian_trace(&x0)).abs() < 1e-12);

        let v: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut out = vec![0.0; 12];
        net.jacobian_apply(&x0, &v, &mut out);
        let dense = &jm * nalgebra::DVector::from_column_slice(&v);
        for r in 0..12 {
            assert!((out[r] - dense[r]).abs() < 1e-12);
        }
    }

    #[test]
    fn initial_conditions_in_box_and_reproducible() {
        let a = sample_initial_conditions(7, 50, 42);
        let b = sample_initial_conditions(7, 50, 42);
        assert_eq!(a, b);
        for s in &a {
            assert!(s.y.iter().all(|v| v.abs() <= 2.598_076_3));
            assert!(s.z.iter().all(|v| v.abs() <= 3.247_595_3));
        }
        // sample k does not depend on how many were requested
        let c = sample_initial_conditions(7, 3, 42);
        assert_eq!(c[2], a[2]);
    }

    #[test]
    fn energy_values() {
        let p = FhnParams::default();
        assert_eq!(energy(&NetworkState::zeros(4), &p).v, 0.0);
        let s = NetworkState {
            z: vec![0.0; 3],
            y: vec![1.0; 3],
        };
        let e = energy(&s, &p);
        for h in &e.h_per_node {
            assert!((h + 2.0 / 3.0).abs() < 1e-15);
        }
        assert!((e.v - e.s_per_node.iter().sum::<f64>()).abs() < 1e-15);
    }

    #[test]
    fn edge_csv_parsing() {
        let a = Adjacency::from_edge_csv("from,to,weight\n1,2,1\n2,3,0.5\n3,1,1\n", None).unwrap();
        assert_eq!(a.n(), 3);
        assert_eq!(a.get(1, 0), 1.0);
        assert_eq!(a.get(2, 1), 0.5);
        assert_eq!(a.get(0, 2), 1.0);
        assert!(Adjacency::from_edge_csv("1,1,1\n", None).is_err());
        assert!(Adjacency::from_edge_csv("1,2,-1\n", None).is_err());
        assert!(Adjacency::from_edge_csv("1,5,1\n", Some(3)).is_err());
    }
}
