//! Command-line front end. `run` parses arguments, dispatches one subcommand
//! and returns the process exit code.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::detect::{self, OutcomeKind};
use crate::error::{Error, Result};
use crate::integrate::{IntegratorConfig, RunMeta, Trajectory};
use crate::network::{initial_condition, Adjacency, CouplingConfig, FhnNetwork, FhnParams, Topology};
use crate::spectral::{self, KineticMatrix, SpectrumReport};
use crate::sweep::{self, SweepConfig};
use crate::waves::{self, TwoRingsDemo, WaveSearch};

/// `println!` that ignores a closed stdout.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

pub const EXIT_OK: i32 = 0;
/// `spectra`: the ratio bound does not hold.
pub const EXIT_BOUND_VIOLATED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
/// Run unresolved, or no wave where one was requested.
pub const EXIT_UNRESOLVED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "ringlab", version, about = "Kinetic-matrix spectra and FitzHugh-Nagumo ring dynamics")]
pub struct Cli {
    /// Directory all outputs are written to.
    #[arg(long, global = true, default_value = "./ringlab-out")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectrum of a kinetic matrix and the cycle ratio bound.
    Spectra(SpectraArgs),
    /// Integrate a network and write the trajectory.
    Simulate(SimulateArgs),
    /// Integrate with checkpoint classification.
    Classify(ClassifyArgs),
    /// The (n, σ) grid experiment.
    Sweep(SweepArgs),
    /// Rotating-wave orbit and its Floquet multipliers.
    Floquet(FloquetArgs),
    /// Wave-stability boundary σ_crit(n).
    Boundary(BoundaryArgs),
    /// Two rings joined by one undirected edge, from mixed initial states.
    TwoRingsDemo(TwoRingsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KineticTopology {
    Cycle,
    Custom,
}

#[derive(Debug, Args)]
pub struct SpectraArgs {
    #[arg(long, value_enum)]
    pub topology: KineticTopology,
    #[arg(long, required_if_eq("topology", "cycle"))]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// CSV of `i,j,q_ij` triples, 1-based.
    #[arg(long, required_if_eq("topology", "custom"))]
    pub rates: Option<PathBuf>,
    #[arg(long, default_value = "spectra.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetTopology {
    Chain,
    Ring,
    TwoRings,
    Custom,
}

#[derive(Debug, Args)]
pub struct NetArgs {
    #[arg(long, value_enum, default_value = "ring")]
    pub topology: NetTopology,
    /// Node count (chain, ring, custom).
    #[arg(long)]
    pub n: Option<usize>,
    /// Nodes per ring (two-rings).
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// CSV of directed edges `from,to,weight`, 1-based (custom).
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    #[arg(long)]
    pub sample_dt: Option<f64>,
}

impl NetArgs {
    fn topology(&self) -> Result<Topology> {
        let need_n = || self.n.ok_or_else(|| Error::Config("--n is required for this topology".into()));
        Ok(match self.topology {
            NetTopology::Chain => Topology::chain(need_n()?),
            NetTopology::Ring => Topology::ring(need_n()?),
            NetTopology::TwoRings => Topology::two_rings(self.k),
            NetTopology::Custom => {
                let path = self
                    .edges
                    .as_ref()
                    .ok_or_else(|| Error::Config("--edges is required for a custom topology".into()))?;
                Topology::Custom {
                    adjacency: Adjacency::from_edge_file(path, self.n)?,
                }
            }
        })
    }

    fn integrator(&self) -> Result<IntegratorConfig> {
        let mut c = IntegratorConfig::default();
        if let Some(v) = self.rtol {
            c.rtol = v;
        }
        if let Some(v) = self.atol {
            c.atol = v;
        }
        if let Some(v) = self.sample_dt {
            c.dense_output_dt = v;
        }
        c.validate()?;
        Ok(c)
    }

    fn network(&self) -> Result<(FhnNetwork, Topology)> {
        let topology = self.topology()?;
        if topology.n() == 0 {
            return Err(Error::Config("network has no nodes".into()));
        }
        let net = FhnNetwork::new(FhnParams::default(), CouplingConfig::new(topology.clone(), self.sigma)?)?;
        Ok((net, topology))
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[arg(long, default_value_t = 1000.0)]
    pub t_final: f64,
    #[arg(long, default_value = "trajectory.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[arg(long, default_value_t = detect::DEFAULT_T_FINAL)]
    pub t_final: f64,
    /// Checkpoint spacing.
    #[arg(long, default_value_t = detect::CHECK_INTERVAL)]
    pub interval: f64,
    /// Trailing window examined at each checkpoint.
    #[arg(long, default_value_t = detect::DEFAULT_WINDOW)]
    pub window: f64,
    /// Classification JSON.
    #[arg(long, default_value = "classification.json")]
    pub out: PathBuf,
    /// Trailing window of the run.
    #[arg(long, default_value = "trajectory.csv")]
    pub trajectory: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Desk,
    Full,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON file with the sweep configuration; overrides --preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "desk")]
    pub preset: Preset,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Skip the wave-stability scan (Sync2 and Sync3 become undetermined).
    #[arg(long)]
    pub no_floquet: bool,
}

#[derive(Debug, Args)]
pub struct FloquetArgs {
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 0.75, allow_negative_numbers = true)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = detect::DEFAULT_T_FINAL)]
    pub t_final: f64,
    #[arg(long, default_value = "floquet.json")]
    pub out: PathBuf,
    #[arg(long, default_value = "orbit.csv")]
    pub orbit: PathBuf,
}

#[derive(Debug, Args)]
pub struct BoundaryArgs {
    #[arg(long, default_value_t = 3)]
    pub n_min: usize,
    #[arg(long, default_value_t = 12)]
    pub n_max: usize,
    #[arg(long, default_value_t = 0.25)]
    pub sigma_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub sigma_max: f64,
    #[arg(long, default_value_t = 0.25)]
    pub step: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value = "boundary.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TwoRingsArgs {
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 0.75)]
    pub sigma: f64,
    #[arg(long, default_value_t = TwoRingsDemo::default().seed)]
    pub seed: u64,
    #[arg(long, default_value_t = TwoRingsDemo::default().t_final)]
    pub t_final: f64,
    #[arg(long, default_value_t = detect::DEFAULT_WINDOW)]
    pub window: f64,
    #[arg(long, default_value = "two_rings.json")]
    pub out: PathBuf,
    #[arg(long, default_value = "two_rings_excerpt.csv")]
    pub excerpt: PathBuf,
}

/// Map a library error to an exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Domain(_)
        | Error::InvalidSize(_)
        | Error::UnsupportedTopology(_)
        | Error::Io { .. }
        | Error::Json(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Spectra(a) => cmd_spectra(a, &cli.out_dir),
        Command::Simulate(a) => cmd_simulate(a, &cli.out_dir),
        Command::Classify(a) => cmd_classify(a, &cli.out_dir),
        Command::Sweep(a) => cmd_sweep(a, &cli.out_dir),
        Command::Floquet(a) => cmd_floquet(a, &cli.out_dir),
        Command::Boundary(a) => cmd_boundary(a, &cli.out_dir),
        Command::TwoRingsDemo(a) => cmd_two_rings_demo(a, &cli.out_dir),
    }
}

fn output_path(out_dir: &Path, file: &Path) -> Result<PathBuf> {
    let path = out_dir.join(file);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(path)
}

fn write_json<T: Serialize>(out_dir: &Path, file: &Path, value: &T) -> Result<PathBuf> {
    let path = output_path(out_dir, file)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn write_text(out_dir: &Path, file: &Path, text: &str) -> Result<PathBuf> {
    let path = output_path(out_dir, file)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn write_trajectory(out_dir: &Path, file: &Path, traj: &Trajectory, config: &serde_json::Value) -> Result<PathBuf> {
    let path = output_path(out_dir, file)?;
    let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    traj.write_csv(std::io::BufWriter::new(f), Some(&config.to_string()))
        .map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[derive(Serialize)]
struct SpectraOutput<'a> {
    config: serde_json::Value,
    #[serde(flatten)]
    report: &'a SpectrumReport,
    all_real: bool,
}

pub fn cmd_spectra(a: &SpectraArgs, out_dir: &Path) -> Result<i32> {
    let k = match a.topology {
        KineticTopology::Cycle => {
            let n = a.n.ok_or_else(|| Error::Config("--n is required".into()))?;
            KineticMatrix::cycle(n, a.q)?
        }
        KineticTopology::Custom => {
            let path = a.rates.as_ref().ok_or_else(|| Error::Config("--rates is required".into()))?;
            KineticMatrix::from_rates_file(path, a.n)?
        }
    };
    let report = spectral::analyze(&k)?;
    let all_real = report.all_real(k.zero_tolerance());
    let config = json!({
        "command": "spectra",
        "topology": a.topology,
        "n": k.n(),
        "q": (a.topology == KineticTopology::Cycle).then_some(a.q),
        "rates": a.rates,
    });
    let path = write_json(out_dir, &a.out, &SpectraOutput { config, report: &report, all_real })?;
    out!(
        "n = {}  max |Im|/|Re| = {:.10}  bound cot(pi/n) = {:.10}  satisfied = {}{}",
        report.n,
        report.max_im_re_ratio,
        report.bound,
        report.bound_satisfied,
        if all_real { "  (all eigenvalues real)" } else { "" }
    );
    out!("wrote {}", path.display());
    Ok(if report.bound_satisfied { EXIT_OK } else { EXIT_BOUND_VIOLATED })
}

fn net_config(command: &str, a: &NetArgs, topology: &Topology, integrator: &IntegratorConfig, t_final: f64) -> serde_json::Value {
    json!({
        "command": command,
        "topology": topology,
        "sigma": a.sigma,
        "seed": a.seed,
        "params": FhnParams::default(),
        "integrator": integrator,
        "t_final": t_final,
    })
}

pub fn cmd_simulate(a: &SimulateArgs, out_dir: &Path) -> Result<i32> {
    if !(a.t_final > 0.0) {
        return Err(Error::Config("--t-final must be positive".into()));
    }
    let (net, topology) = a.net.network()?;
    let integrator = a.net.integrator()?;
    let x0 = initial_condition(topology.n(), a.net.seed).to_flat();
    let traj = crate::integrate::integrate(net.field(), &x0, (0.0, a.t_final), &integrator)?;
    let config = net_config("simulate", &a.net, &topology, &integrator, a.t_final);
    let path = write_trajectory(out_dir, &a.out, &traj, &config)?;
    out!("{} samples to t = {}; wrote {}", traj.len(), traj.t_end(), path.display());
    Ok(EXIT_OK)
}

pub fn cmd_classify(a: &ClassifyArgs, out_dir: &Path) -> Result<i32> {
    if !(a.t_final > 0.0) || !(a.interval > 0.0) {
        return Err(Error::Config("--t-final and --interval must be positive".into()));
    }
    let (net, topology) = a.net.network()?;
    let integrator = a.net.integrator()?;
    let n = topology.n();
    let x0 = initial_condition(n, a.net.seed).to_flat();
    let schedule = detect::checkpoint_schedule(a.t_final, a.interval);
    let meta = RunMeta {
        topology: topology.clone(),
        sigma: a.net.sigma,
        seed: a.net.seed,
        sample_index: 0,
        params: FhnParams::default(),
    };
    let run = detect::simulate_classified(&net, &x0, a.t_final, &schedule, &integrator, a.window, Some(meta))?;
    let mut config = net_config("classify", &a.net, &topology, &integrator, a.t_final);
    config["interval"] = json!(a.interval);
    config["window"] = json!(a.window);
    let record = run.classification.record(n, a.net.sigma, a.net.seed, 0);
    let out = json!({
        "config": config,
        "classification": run.classification,
        "record": record,
        "t_stop": run.t_stop,
    });
    let path = write_json(out_dir, &a.out, &out)?;
    let tpath = write_trajectory(out_dir, &a.trajectory, &run.tail, &config)?;
    let kind = &run.classification.kind;
    out!(
        "{} (checkpoint t = {})",
        match kind {
            OutcomeKind::RotatingWave { mode } => format!("rotating-wave mode {mode}"),
            k => k.label().to_string(),
        },
        run.t_stop
    );
    out!("wrote {} and {}", path.display(), tpath.display());
    Ok(if matches!(kind, OutcomeKind::None) { EXIT_UNRESOLVED } else { EXIT_OK })
}

pub fn cmd_sweep(a: &SweepArgs, out_dir: &Path) -> Result<i32> {
    let mut config = match &a.config {
        Some(p) => SweepConfig::from_file(p)?,
        None => match a.preset {
            Preset::Desk => SweepConfig::desk_default(),
            Preset::Full => SweepConfig::full_grid(),
        },
    };
    if let Some(s) = a.seed {
        config.master_seed = s;
    }
    if a.no_floquet {
        config.floquet = false;
    }
    config.validate()?;
    let out = sweep::run_grid(&config, Some(out_dir))?;
    let mut counts = std::collections::BTreeMap::<&str, usize>::new();
    for c in &out.regions.cells {
        *counts.entry(c.region.label()).or_default() += 1;
    }
    out!("{} cells", out.cells.len());
    for (label, c) in counts {
        out!("  {label}: {c}");
    }
    out!("wrote {}/grid.csv and region.csv", out_dir.display());
    Ok(EXIT_OK)
}

pub fn cmd_floquet(a: &FloquetArgs, out_dir: &Path) -> Result<i32> {
    let search = WaveSearch {
        t_final: a.t_final,
        ..WaveSearch::default()
    };
    let coupling = CouplingConfig::new(Topology::ring(a.n), a.sigma)?;
    let config = json!({
        "command": "floquet",
        "n": a.n,
        "sigma": a.sigma,
        "seed": a.seed,
        "search": search,
    });
    let Some(orbit) = waves::find_wave_orbit(a.n, a.sigma, a.seed, &search)? else {
        eprintln!("no rotating wave reached from seed {}", a.seed);
        write_json(out_dir, &a.out, &json!({ "config": config, "orbit": null }))?;
        return Ok(EXIT_UNRESOLVED);
    };
    let floquet = waves::floquet_multipliers(&orbit, &coupling, &search.params)?;
    let aux_defect = waves::aux_relation_defect(orbit.period, orbit.tau, a.n);
    let dde_defect = waves::aux_periodicity_defect(&orbit)?;
    let out = json!({
        "config": config,
        "orbit": orbit.header(),
        "floquet": floquet,
        "aux_relation": { "defect": aux_defect, "satisfied": aux_defect < waves::AUX_EPS },
        "aux_periodicity_defect": dde_defect,
    });
    let path = write_json(out_dir, &a.out, &out)?;
    let opath = write_trajectory(out_dir, &a.orbit, &orbit.to_trajectory(), &config)?;
    out!(
        "T = {:.6}  tau = {:.6}  max |mu| (non-trivial) = {:.6}  stable = {}",
        orbit.period, orbit.tau, floquet.max_nontrivial_modulus, floquet.stable
    );
    out!("wrote {} and {}", path.display(), opath.display());
    Ok(EXIT_OK)
}

pub fn cmd_boundary(a: &BoundaryArgs, out_dir: &Path) -> Result<i32> {
    if a.n_min > a.n_max {
        return Err(Error::Config("--n-min exceeds --n-max".into()));
    }
    let search = WaveSearch::default();
    let n_values: Vec<usize> = (a.n_min..=a.n_max).collect();
    let rows = waves::wave_stability_boundary(&n_values, (a.sigma_min, a.sigma_max), a.step, a.seed, &search)?;
    let config = json!({
        "command": "boundary",
        "n_values": n_values,
        "sigma_range": [a.sigma_min, a.sigma_max],
        "step": a.step,
        "seed": a.seed,
        "search": search,
    });
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut csv = format!("# {config}\nn,sigma_critical,max_multiplier_below,max_multiplier_above\n");
    let mut curve = 0;
    for r in &rows {
        if r.status == waves::BoundaryStatus::NoStableWave {
            continue;
        }
        curve += 1;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.n,
            opt(r.sigma_critical),
            opt(r.max_multiplier_below),
            opt(r.max_multiplier_above)
        ));
    }
    let path = write_text(out_dir, &a.out, &csv)?;
    write_json(out_dir, Path::new("boundary.json"), &json!({ "config": config, "rows": rows }))?;
    for r in &rows {
        out!("n = {:2}  {:?}  sigma_crit = {}", r.n, r.status, opt(r.sigma_critical));
    }
    out!("wrote {}", path.display());
    Ok(if curve == 0 { EXIT_UNRESOLVED } else { EXIT_OK })
}

pub fn cmd_two_rings_demo(a: &TwoRingsArgs, out_dir: &Path) -> Result<i32> {
    let demo = TwoRingsDemo {
        k: a.k,
        sigma: a.sigma,
        seed: a.seed,
        t_final: a.t_final,
        window: a.window,
        ..TwoRingsDemo::default()
    };
    let report = waves::two_rings_demo(&demo)?;
    let config = json!({ "command": "two-rings-demo", "demo": demo });
    let out = json!({
        "config": config,
        "ring1": report.ring1,
        "ring2": report.ring2,
        "competing": report.competing(),
    });
    let path = write_json(out_dir, &a.out, &out)?;
    if let Some(excerpt) = &report.excerpt {
        write_trajectory(out_dir, &a.excerpt, excerpt, &config)?;
    }
    for r in [&report.ring1, &report.ring2] {
        out!(
            "ring {}: {:?}  sync error {:.4}  mean shift {}  tau {}",
            r.ring,
            r.regime,
            r.sync_error,
            r.mean_shift.map(|v| format!("{v:.4}")).unwrap_or("-".into()),
            r.tau.map(|v| format!("{v:.4}")).unwrap_or("-".into()),
        );
    }
    out!("wrote {}", path.display());
    Ok(if report.competing() { EXIT_OK } else { EXIT_UNRESOLVED })
}
