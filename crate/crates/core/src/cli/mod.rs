//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for configuration errors (bad flags, unknown
//! keys, out-of-domain values), 2 for runtime failures such as an unwritable
//! output directory.

pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::engine::{self, SimulationConfig};
use crate::sweep::{self, SweepParam, SweepSpec};
use config::{ConfigError, ExperimentConfig};
use output::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fashsim", version, about = "Agent-based fashion market simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single run; the trace is that run's shares.
    Run(CommonArgs),
    /// Ensemble of independent runs averaged per round.
    Ensemble(CommonArgs),
    /// Ensembles over a grid of advertisement values for the tracked item.
    SweepAdv(CommonArgs),
    /// Ensembles over a grid of sigmoid sharpness values.
    SweepBeta(CommonArgs),
    /// Grid search for the tracked item's best advertisement value.
    Optimize(CommonArgs),
    /// Re-executes the invocation recorded in a manifest.json.
    Replay {
        manifest: PathBuf,
        #[arg(long, env = "FASHSIM_OUT")]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub rounds: Option<String>,
    #[arg(long)]
    pub agents: Option<String>,
    #[arg(long)]
    pub items: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    /// cultural | fashion
    #[arg(long)]
    pub mode: Option<String>,
    /// ring | random | small-world
    #[arg(long)]
    pub topology: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub runs: Option<String>,
    /// Comma-separated grid values.
    #[arg(long)]
    pub grid: Option<String>,
    /// final | integrated
    #[arg(long)]
    pub objective: Option<String>,
    /// Any other config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory; falls back to $FASHSIM_OUT, then `out`.
    #[arg(long, env = "FASHSIM_OUT")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl CommonArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError {
                key: kv.clone(),
                reason: "expected KEY=VALUE".into(),
                line: None,
            })?;
            cfg.set(k.trim(), v)?;
        }
        let flags = [
            ("seed", &self.seed),
            ("rounds", &self.rounds),
            ("agents", &self.agents),
            ("items", &self.items),
            ("gamma", &self.gamma),
            ("beta", &self.beta),
            ("mode", &self.mode),
            ("topology", &self.topology),
            ("k", &self.k),
            ("p", &self.p),
            ("runs", &self.runs),
            ("grid", &self.grid),
            ("objective", &self.objective),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Run,
    Ensemble,
    SweepAdv,
    SweepBeta,
    Optimize,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Run => "run",
            Experiment::Ensemble => "ensemble",
            Experiment::SweepAdv => "sweep-adv",
            Experiment::SweepBeta => "sweep-beta",
            Experiment::Optimize => "optimize",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        [
            Experiment::Run,
            Experiment::Ensemble,
            Experiment::SweepAdv,
            Experiment::SweepBeta,
            Experiment::Optimize,
        ]
        .into_iter()
        .find(|e| e.name() == name)
    }

    /// Grid used when none is configured.
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            Experiment::SweepBeta => vec![1.0, 5.0, 10.0],
            _ => (0..=10).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::Domain { .. } | crate::Error::Topology(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn create<F>(dir: &Path, name: &str, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| io_err(&path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| io_err(&path, e))
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::Config("jobs: must be at least 1".into()));
        }
        b = b.num_threads(j);
    }
    b.build().map_err(|e| CliError::Runtime(e.to_string()))
}

/// Runs one experiment with a resolved config and writes its outputs to
/// `out`. The manifest records `cfg` with the grid materialized.
pub fn execute(
    experiment: Experiment,
    mut cfg: ExperimentConfig,
    out: &Path,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    let pool = pool(jobs)?;
    if matches!(
        experiment,
        Experiment::SweepAdv | Experiment::SweepBeta | Experiment::Optimize
    ) && cfg.grid.is_none()
    {
        cfg.grid = Some(experiment.default_grid());
    }
    // fail on config problems before touching the filesystem
    cfg.validate()?;
    if matches!(experiment, Experiment::SweepAdv | Experiment::Optimize) && cfg.sim.tracked_item().is_none() {
        return Err(CliError::Config(
            "rounds: no item is introduced within the horizon (needs fashion mode and rounds > intro_period)"
                .into(),
        ));
    }
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;

    let sim: &SimulationConfig = &cfg.sim;
    let tracked = sim.tracked_item();
    match experiment {
        Experiment::Run => {
            let trace = engine::run(sim)?;
            let rows = output::trace_rows(&trace);
            create(out, "trace.csv", |w| output::write_trace_csv(w, &rows))?;
            let summary = output::trace_summary(&trace);
            create(out, "summary.json", |w| output::write_json(w, &summary))?;
        }
        Experiment::Ensemble => {
            let result = pool.install(|| engine::run_ensemble(sim, cfg.runs))?;
            let rows = output::ensemble_rows(&result);
            create(out, "trace.csv", |w| output::write_trace_csv(w, &rows))?;
            let summary = output::ensemble_summary(&result, tracked);
            create(out, "summary.json", |w| output::write_json(w, &summary))?;
        }
        Experiment::SweepAdv | Experiment::SweepBeta => {
            let param = if experiment == Experiment::SweepAdv {
                SweepParam::Advertisement
            } else {
                SweepParam::Beta
            };
            let spec = SweepSpec {
                base: sim.clone(),
                param,
                grid: cfg.grid.clone().expect("grid materialized"),
                runs: cfg.runs,
            };
            let table = pool.install(|| sweep::sweep(&spec))?;
            create(out, "sweep.csv", |w| output::write_sweep_csv(w, &table))?;
            let summary = output::sweep_summary(&table, tracked, None);
            create(out, "summary.json", |w| output::write_json(w, &summary))?;
        }
        Experiment::Optimize => {
            let grid = cfg.grid.clone().expect("grid materialized");
            let (opt, table) =
                pool.install(|| sweep::optimize_advertisement(sim, &grid, cfg.objective, cfg.runs))?;
            create(out, "sweep.csv", |w| output::write_sweep_csv(w, &table))?;
            create(out, "objective.csv", |w| output::write_objective_csv(w, &opt))?;
            let summary = output::sweep_summary(&table, tracked, Some(opt));
            create(out, "summary.json", |w| output::write_json(w, &summary))?;
        }
    }

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: experiment.name().to_string(),
        master_seed: cfg.sim.seed,
        timestamp: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        config: cfg
            .to_pairs()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect::<BTreeMap<_, _>>(),
    };
    create(out, "manifest.json", |w| output::write_json(w, &manifest))
}

fn replay(manifest: &Path, out: &Path, jobs: Option<usize>) -> Result<(), CliError> {
    let text = fs::read_to_string(manifest).map_err(|e| CliError::Config(format!("{}: {e}", manifest.display())))?;
    let m: RunManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", manifest.display())))?;
    let experiment = Experiment::from_name(&m.command)
        .ok_or_else(|| CliError::Config(format!("unknown command '{}' in manifest", m.command)))?;
    let mut cfg = ExperimentConfig::default();
    for (k, v) in &m.config {
        cfg.set(k, v)?;
    }
    execute(experiment, cfg, out, jobs)
}

fn out_dir(out: &Option<PathBuf>) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Replay { manifest, out, jobs } => replay(manifest, &out_dir(out), *jobs),
        Command::Run(a) => dispatch(Experiment::Run, a),
        Command::Ensemble(a) => dispatch(Experiment::Ensemble, a),
        Command::SweepAdv(a) => dispatch(Experiment::SweepAdv, a),
        Command::SweepBeta(a) => dispatch(Experiment::SweepBeta, a),
        Command::Optimize(a) => dispatch(Experiment::Optimize, a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn dispatch(experiment: Experiment, args: &CommonArgs) -> Result<(), CliError> {
    let cfg = args.resolve()?;
    execute(experiment, cfg, &out_dir(&args.out), args.jobs)
}
