//! The `(n, σ)` grid experiment: per-cell basin counts, region labels and
//! resumable on-disk results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::{self, ClassificationRecord, OutcomeKind};
use crate::error::{Error, Result};
use crate::integrate::{IntegratorConfig, RunMeta};
use crate::network::{initial_condition, sync_threshold, CouplingConfig, FhnNetwork, FhnParams, Topology};
use crate::seed::mix;
use crate::waves::{self, WaveSearch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    Ring,
    Chain,
}

impl TopologyKind {
    pub fn build(&self, n: usize) -> Topology {
        match self {
            TopologyKind::Ring => Topology::ring(n),
            TopologyKind::Chain => Topology::chain(n),
        }
    }
}

fn default_interval() -> f64 {
    detect::CHECK_INTERVAL
}

fn default_window() -> f64 {
    detect::DEFAULT_WINDOW
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub sigma_values: Vec<f64>,
    pub samples_per_cell: usize,
    pub t_final: f64,
    #[serde(default = "default_interval")]
    pub checkpoint_interval: f64,
    pub master_seed: u64,
    pub topology: TopologyKind,
    #[serde(default)]
    pub params: FhnParams,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default = "default_window")]
    pub window: f64,
    /// Run the wave-stability scan that separates Sync2 from Sync3.
    #[serde(default = "default_true")]
    pub floquet: bool,
}

impl SweepConfig {
    /// `n ∈ 2..=12`, `σ ∈ {0.25, 0.5, …, 3.0}`, 20 samples, `t_final = 20000`.
    pub fn desk_default() -> Self {
        SweepConfig {
            n_values: (2..=12).collect(),
            sigma_values: (1..=12).map(|i| i as f64 * 0.25).collect(),
            samples_per_cell: 20,
            t_final: detect::DEFAULT_T_FINAL,
            checkpoint_interval: detect::CHECK_INTERVAL,
            master_seed: 20_240_601,
            topology: TopologyKind::Ring,
            params: FhnParams::default(),
            integrator: IntegratorConfig::default(),
            window: detect::DEFAULT_WINDOW,
            floquet: true,
        }
    }

    /// `n ∈ 2..=20`, `σ ∈ {0.05, …, 10}`, 100 samples.
    pub fn full_grid() -> Self {
        SweepConfig {
            n_values: (2..=20).collect(),
            sigma_values: (1..=200).map(|i| i as f64 * 0.05).collect(),
            samples_per_cell: 100,
            ..Self::desk_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(Error::Config("n_values is empty".into()));
        }
        if self.sigma_values.is_empty() {
            return Err(Error::Config("sigma_values is empty".into()));
        }
        if let Some(n) = self.n_values.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!("n must be at least 2, got {n}")));
        }
        if let Some(s) = self.sigma_values.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return Err(Error::Config(format!("sigma must be finite and non-negative, got {s}")));
        }
        if self.samples_per_cell == 0 {
            return Err(Error::Config("samples_per_cell must be at least 1".into()));
        }
        if !(self.t_final > 0.0) || !(self.checkpoint_interval > 0.0) || !(self.window > 0.0) {
            return Err(Error::Config("t_final, checkpoint_interval and window must be positive".into()));
        }
        if self.window > self.t_final {
            return Err(Error::Config("window longer than t_final".into()));
        }
        self.params.validate()?;
        self.integrator.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: SweepConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn wave_search(&self) -> WaveSearch {
        WaveSearch {
            params: self.params,
            t_final: self.t_final,
            integrator: self.integrator,
            window: self.window,
        }
    }
}

/// Sub-seed of sample `k` in cell `(n, σ_index)`.
pub fn sample_seed(master_seed: u64, n: usize, sigma_index: usize, k: usize) -> u64 {
    mix(&[master_seed, n as u64, sigma_index as u64, k as u64])
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub sync: usize,
    pub wave_mode1: usize,
    pub wave_any: usize,
    pub none: usize,
}

impl Counts {
    pub fn total(&self) -> usize {
        self.sync + self.wave_any + self.none
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportions {
    pub sync: f64,
    pub wave_mode1: f64,
    pub wave_any: f64,
    pub none: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub n: usize,
    pub sigma: f64,
    pub sigma_index: usize,
    pub master_seed: u64,
    pub counts: Counts,
    pub proportions: Proportions,
    pub records: Vec<ClassificationRecord>,
}

/// Classify every sample of one cell. Failed runs count as `none` with the
/// error in the record's note.
pub fn run_cell(n: usize, sigma_index: usize, config: &SweepConfig) -> Result<CellResult> {
    config.validate()?;
    let sigma = *config
        .sigma_values
        .get(sigma_index)
        .ok_or_else(|| Error::Config(format!("sigma index {sigma_index} out of range")))?;
    let topology = config.topology.build(n);
    let net = FhnNetwork::new(config.params, CouplingConfig::new(topology.clone(), sigma)?)?;
    let schedule = detect::checkpoint_schedule(config.t_final, config.checkpoint_interval);
    let records: Vec<ClassificationRecord> = (0..config.samples_per_cell)
        .into_par_iter()
        .map(|k| {
            let seed = sample_seed(config.master_seed, n, sigma_index, k);
            let x0 = initial_condition(n, seed).to_flat();
            let meta = RunMeta {
                topology: topology.clone(),
                sigma,
                seed,
                sample_index: k as u64,
                params: config.params,
            };
            match detect::simulate_classified(&net, &x0, config.t_final, &schedule, &config.integrator, config.window, Some(meta)) {
                Ok(run) => run.classification.record(n, sigma, seed, k as u64),
                Err(e) => ClassificationRecord {
                    n,
                    sigma,
                    seed,
                    sample_index: k as u64,
                    kind: OutcomeKind::None.label().to_string(),
                    mode: None,
                    period: None,
                    tau: None,
                    sync_error: None,
                    checkpoint_time: None,
                    note: Some(format!("run failed: {e}")),
                },
            }
        })
        .collect();
    let mut counts = Counts::default();
    for r in &records {
        match (r.kind.as_str(), r.mode) {
            ("sync", _) => counts.sync += 1,
            ("rotating-wave", m) => {
                counts.wave_any += 1;
                if m == Some(1) {
                    counts.wave_mode1 += 1;
                }
            }
            _ => counts.none += 1,
        }
    }
    let total = records.len() as f64;
    Ok(CellResult {
        n,
        sigma,
        sigma_index,
        master_seed: config.master_seed,
        counts,
        proportions: Proportions {
            sync: counts.sync as f64 / total,
            wave_mode1: counts.wave_mode1 as f64 / total,
            wave_any: counts.wave_any as f64 / total,
            none: counts.none as f64 / total,
        },
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// Synchronization guaranteed by the analytic threshold.
    Sync1,
    /// Every sample synchronized and no stable wave orbit was found.
    Sync2,
    /// Every sample synchronized, but a stable wave orbit exists.
    Sync3,
    /// Both synchronization and rotating waves observed.
    Coexistence,
    /// Every sample synchronized; the wave-stability scan was skipped.
    SyncUndetermined,
    /// Anything else (waves only, or unresolved runs).
    Other,
}

impl Region {
    pub fn label(&self) -> &'static str {
        match self {
            Region::Sync1 => "Sync1",
            Region::Sync2 => "Sync2",
            Region::Sync3 => "Sync3",
            Region::Coexistence => "Coexistence",
            Region::SyncUndetermined => "Sync2/3-undetermined",
            Region::Other => "Other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticPoint {
    pub n: usize,
    pub sigma_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// `σ_c(n) = 1 / (1 - cos(2π/n))`. For `n = 2` the ring is a bidirectional
/// pair; the value 0.5 is reported with a note. Undefined below 2.
pub fn analytic_sync_curve(n_values: &[usize]) -> Vec<AnalyticPoint> {
    n_values
        .iter()
        .map(|&n| match n {
            0 | 1 => AnalyticPoint {
                n,
                sigma_c: None,
                note: Some("undefined for n < 2".into()),
            },
            2 => AnalyticPoint {
                n,
                sigma_c: Some(0.5),
                note: Some("n = 2: the ring is a bidirectional pair".into()),
            },
            _ => AnalyticPoint {
                n,
                sigma_c: sync_threshold(&Topology::ring(n)).ok(),
                note: None,
            },
        })
        .collect()
}

/// Strict analytic guarantee `σ (1 - cos(2π/n)) > 1` (ring) or `σ > 1`
/// (chain).
pub fn analytically_synchronized(kind: TopologyKind, n: usize, sigma: f64) -> bool {
    match kind {
        TopologyKind::Ring => n >= 2 && sigma * (1.0 - (2.0 * std::f64::consts::PI / n as f64).cos()) > 1.0,
        TopologyKind::Chain => sigma > 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub n: usize,
    pub sigma: f64,
    pub region: Region,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveScanRow {
    pub n: usize,
    pub sigma: f64,
    pub exists: bool,
    pub stable: bool,
    pub max_multiplier: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionMap {
    pub cells: Vec<RegionCell>,
    pub analytic_curve: Vec<AnalyticPoint>,
    pub wave_scan: Vec<WaveScanRow>,
}

impl RegionMap {
    pub fn get(&self, n: usize, sigma: f64) -> Option<Region> {
        self.cells
            .iter()
            .find(|c| c.n == n && c.sigma == sigma)
            .map(|c| c.region)
    }
}

/// Label one cell. `stable_wave` is `None` when the scan was skipped.
pub fn label_cell(kind: TopologyKind, cell: &CellResult, stable_wave: Option<bool>) -> Region {
    let c = &cell.counts;
    let samples = c.total();
    if analytically_synchronized(kind, cell.n, cell.sigma) {
        Region::Sync1
    } else if c.sync > 0 && c.wave_any > 0 {
        Region::Coexistence
    } else if c.sync == samples {
        match stable_wave {
            Some(true) => Region::Sync3,
            Some(false) => Region::Sync2,
            None => Region::SyncUndetermined,
        }
    } else {
        Region::Other
    }
}

/// Cells, region labels and where they were written.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub cells: Vec<CellResult>,
    pub regions: RegionMap,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StoredCell {
    fingerprint: String,
    cell: CellResult,
}

/// Everything a cell's outcome depends on.
fn cell_fingerprint(config: &SweepConfig, n: usize, sigma_index: usize) -> String {
    serde_json::json!({
        "n": n,
        "sigma": config.sigma_values[sigma_index],
        "sigma_index": sigma_index,
        "samples_per_cell": config.samples_per_cell,
        "t_final": config.t_final,
        "checkpoint_interval": config.checkpoint_interval,
        "master_seed": config.master_seed,
        "topology": config.topology,
        "params": config.params,
        "integrator": config.integrator,
        "window": config.window,
    })
    .to_string()
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn cell_path(dir: &Path, n: usize, sigma_index: usize) -> PathBuf {
    dir.join("cells").join(format!("n{n:03}_s{sigma_index:04}.json"))
}

fn load_cell(path: &Path, fingerprint: &str) -> Option<CellResult> {
    let text = fs::read_to_string(path).ok()?;
    let stored: StoredCell = serde_json::from_str(&text).ok()?;
    (stored.fingerprint == fingerprint).then_some(stored.cell)
}

/// Worker count from `RINGLAB_WORKERS`, if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var("RINGLAB_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
}

/// Run every cell (skipping those already stored under `out_dir`), label
/// regions and write `grid.csv`, `region.csv` and `wave_scan.csv`.
pub fn run_grid(config: &SweepConfig, out_dir: Option<&Path>) -> Result<SweepOutput> {
    config.validate()?;
    let run = || run_grid_inner(config, out_dir);
    match workers_from_env() {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(run),
        None => run(),
    }
}

fn run_grid_inner(config: &SweepConfig, out_dir: Option<&Path>) -> Result<SweepOutput> {
    if let Some(dir) = out_dir {
        let cells = dir.join("cells");
        fs::create_dir_all(&cells).map_err(|e| Error::io(&cells, e))?;
    }
    let jobs: Vec<(usize, usize)> = config
        .n_values
        .iter()
        .flat_map(|&n| (0..config.sigma_values.len()).map(move |s| (n, s)))
        .collect();
    let mut cells: Vec<CellResult> = jobs
        .par_iter()
        .map(|&(n, s)| -> Result<CellResult> {
            let fingerprint = cell_fingerprint(config, n, s);
            let path = out_dir.map(|d| cell_path(d, n, s));
            if let Some(cell) = path.as_deref().and_then(|p| load_cell(p, &fingerprint)) {
                return Ok(cell);
            }
            let cell = run_cell(n, s, config)?;
            if let Some(p) = path {
                let stored = StoredCell { fingerprint, cell };
                write_atomic(&p, serde_json::to_string_pretty(&stored)?.as_bytes())?;
                return Ok(stored.cell);
            }
            Ok(cell)
        })
        .collect::<Result<_>>()?;
    cells.sort_by(|a, b| a.n.cmp(&b.n).then(a.sigma.total_cmp(&b.sigma)));

    let wave_scan = if config.floquet && config.topology == TopologyKind::Ring {
        scan_waves(config, &cells, out_dir)?
    } else {
        Vec::new()
    };
    let stable: BTreeMap<(usize, u64), bool> = wave_scan
        .iter()
        .map(|r| ((r.n, r.sigma.to_bits()), r.stable))
        .collect();
    let regions = cells
        .iter()
        .map(|c| {
            let sw = if config.floquet && config.topology == TopologyKind::Ring {
                // n = 2 has no Mode-1 wave analysis; no stable wave is recorded
                Some(*stable.get(&(c.n, c.sigma.to_bits())).unwrap_or(&false))
            } else {
                None
            };
            RegionCell {
                n: c.n,
                sigma: c.sigma,
                region: label_cell(config.topology, c, sw),
            }
        })
        .collect();
    let mut n_sorted = config.n_values.clone();
    n_sorted.sort_unstable();
    n_sorted.dedup();
    let output = SweepOutput {
        regions: RegionMap {
            cells: regions,
            analytic_curve: analytic_sync_curve(&n_sorted),
            wave_scan,
        },
        cells,
    };
    if let Some(dir) = out_dir {
        write_outputs(config, &output, dir)?;
    }
    Ok(output)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StoredScan {
    fingerprint: String,
    rows: Vec<WaveScanRow>,
}

/// Wave existence and stability for every `n >= 3` at the grid's σ values
/// that lie below the analytic threshold and hold only synchronized runs.
fn scan_waves(config: &SweepConfig, cells: &[CellResult], out_dir: Option<&Path>) -> Result<Vec<WaveScanRow>> {
    let search = config.wave_search();
    let mut wanted: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for c in cells {
        if c.n >= 3
            && c.counts.sync == c.counts.total()
            && !analytically_synchronized(config.topology, c.n, c.sigma)
        {
            wanted.entry(c.n).or_default();
        }
    }
    for (n, sig) in wanted.iter_mut() {
        // scan all sub-threshold σ so continuation has a path to follow
        *sig = cells
            .iter()
            .filter(|c| c.n == *n && !analytically_synchronized(config.topology, c.n, c.sigma))
            .map(|c| c.sigma)
            .collect();
    }
    let per_n: Vec<Vec<WaveScanRow>> = wanted
        .into_par_iter()
        .map(|(n, sigmas)| -> Result<Vec<WaveScanRow>> {
            let fingerprint = serde_json::json!({
                "n": n,
                "sigmas": sigmas,
                "master_seed": config.master_seed,
                "search": search,
            })
            .to_string();
            let path = out_dir.map(|d| d.join("cells").join(format!("waves_n{n:03}.json")));
            if let Some(p) = &path {
                if let Some(stored) = fs::read_to_string(p)
                    .ok()
                    .and_then(|t| serde_json::from_str::<StoredScan>(&t).ok())
                    .filter(|s| s.fingerprint == fingerprint)
                {
                    return Ok(stored.rows);
                }
            }
            let seed = mix(&[config.master_seed, n as u64, u64::MAX]);
            let rows: Vec<WaveScanRow> = waves::wave_stability_scan(n, &sigmas, seed, &search)
                .into_iter()
                .map(|p| WaveScanRow {
                    n,
                    sigma: p.sigma,
                    exists: p.exists,
                    stable: p.stable,
                    max_multiplier: p.max_multiplier,
                })
                .collect();
            if let Some(p) = path {
                let stored = StoredScan { fingerprint, rows };
                write_atomic(&p, serde_json::to_string_pretty(&stored)?.as_bytes())?;
                return Ok(stored.rows);
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_n.into_iter().flatten().collect())
}

/// Config as a one-line JSON comment for CSV headers.
pub fn config_comment(config: &SweepConfig) -> String {
    serde_json::to_string(config).expect("config serializes")
}

pub fn grid_csv(config: &SweepConfig, cells: &[CellResult]) -> String {
    let mut s = format!("# {}\n", config_comment(config));
    s.push_str("n,sigma,samples,prop_sync,prop_wave_mode1,prop_wave_any,prop_none,seed\n");
    for c in cells {
        let p = &c.proportions;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            c.n,
            c.sigma,
            c.counts.total(),
            p.sync,
            p.wave_mode1,
            p.wave_any,
            p.none,
            c.master_seed
        );
    }
    s
}

pub fn region_csv(config: &SweepConfig, regions: &RegionMap) -> String {
    let mut s = format!("# {}\n", config_comment(config));
    s.push_str("n,sigma,region\n");
    for c in &regions.cells {
        let _ = writeln!(s, "{},{},{}", c.n, c.sigma, c.region.label());
    }
    s
}

pub fn wave_scan_csv(config: &SweepConfig, rows: &[WaveScanRow]) -> String {
    let mut s = format!("# {}\n", config_comment(config));
    s.push_str("n,sigma,exists,stable,max_multiplier\n");
    for r in rows {
        let m = r.max_multiplier.map(|m| m.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{}", r.n, r.sigma, r.exists, r.stable, m);
    }
    s
}

fn write_outputs(config: &SweepConfig, out: &SweepOutput, dir: &Path) -> Result<()> {
    write_atomic(&dir.join("grid.csv"), grid_csv(config, &out.cells).as_bytes())?;
    write_atomic(&dir.join("region.csv"), region_csv(config, &out.regions).as_bytes())?;
    if !out.regions.wave_scan.is_empty() {
        write_atomic(
            &dir.join("wave_scan.csv"),
            wave_scan_csv(config, &out.regions.wave_scan).as_bytes(),
        )?;
    }
    let mut curve = format!("# {}\nn,sigma_c,note\n", config_comment(config));
    for p in &out.regions.analytic_curve {
        let _ = writeln!(
            curve,
            "{},{},{}",
            p.n,
            p.sigma_c.map(|v| v.to_string()).unwrap_or_default(),
            p.note.clone().unwrap_or_default()
        );
    }
    write_atomic(&dir.join("analytic_curve.csv"), curve.as_bytes())
}
