//! Command-line front end.
//!
//! Every subcommand writes CSV files into `--out-dir`. Flags may also be read
//! from a flat `key = value` file given with `--config`; flags on the command
//! line take precedence over the file.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{self, FitBands, TailMethod};
use crate::engine::{self, SweepGrid};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, read_degree_histogram, read_timeseries};
use crate::master_eq::{self, DistributionGrid, IntegrateOptions, MasterEquation};
use crate::model::{InitialW, SimParams};
use crate::stability;

#[derive(Debug, Parser)]
#[command(name = "cartel", version, about = "Trust-game cartel simulator", args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation; writes timeseries.csv and degree_hist.csv
    Simulate(SimulateArgs),
    /// Run a (K, a, replicate) grid; writes sweep.csv
    Sweep(SweepArgs),
    /// Locate the critical update rate; writes critical_a.csv
    CriticalA(CriticalArgs),
    /// Integrate the master equation; writes master_traj.csv and snapshots
    MasterEq(MasterArgs),
    /// Spectrum and tail fits of a finished run; writes spectrum.csv and fit.csv
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct Common {
    /// Flat `key = value` file with default flag values
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SimArgs {
    #[arg(long = "N", default_value_t = 100_000)]
    pub n: usize,
    #[arg(long = "r", default_value_t = 1e-6)]
    pub r: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Measurement window in sweeps
    #[arg(long, default_value_t = 10_000)]
    pub sweeps: u64,
    #[arg(long = "burn-in", default_value_t = 1_000)]
    pub burn_in: u64,
    #[arg(long = "record-every", default_value_t = 1)]
    pub record_every: u64,
    /// Initial values for money: uniform or all-ones
    #[arg(long, default_value = "uniform")]
    pub init: String,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long = "K", default_value_t = 1)]
    pub k: usize,
    #[arg(long = "a", default_value_t = 0.1)]
    pub a: f64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Comma-separated K values
    #[arg(long = "K", value_delimiter = ',', default_value = "1")]
    pub k: Vec<usize>,
    /// Comma-separated a values
    #[arg(long = "a", value_delimiter = ',', default_value = "0.1")]
    pub a: Vec<f64>,
    /// Interpret the a values as multiples of a_c(K)
    #[arg(long = "a-relative", default_value_t = false, action = clap::ArgAction::Set)]
    pub a_relative: bool,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    /// Maximum number of concurrent runs (default: hardware parallelism)
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct CriticalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated K values
    #[arg(long = "K", value_delimiter = ',', default_value = "1")]
    pub k: Vec<u32>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct MasterArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long = "K", default_value_t = 1)]
    pub k: u32,
    #[arg(long = "a", default_value_t = 0.8)]
    pub a: f64,
    #[arg(long = "n-w", default_value_t = master_eq::DEFAULT_N_W)]
    pub n_w: usize,
    /// Degree truncation (default K + 12√K + 40)
    #[arg(long = "k-max")]
    pub k_max: Option<usize>,
    #[arg(long, default_value_t = master_eq::DEFAULT_DT)]
    pub dt: f64,
    /// Horizon in sweeps
    #[arg(long = "T", default_value_t = 1_000.0)]
    pub t_end: f64,
    #[arg(long = "sample-every", default_value_t = 1.0)]
    pub sample_every: f64,
    /// Comma-separated times at which to write P_t<t>.csv
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Vec<f64>,
    /// Initial state: uniform, or perturbed (all w = 1 plus eps at --perturb-w)
    #[arg(long, default_value = "uniform")]
    pub init: String,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long = "perturb-w", default_value_t = 0.5)]
    pub perturb_w: f64,
    /// Optional mutation rate (uniform redistribution over w)
    #[arg(long, default_value_t = 0.0)]
    pub mutation: f64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Time series to analyze (default: <out-dir>/timeseries.csv)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Degree histogram for the tail fit (default: <out-dir>/degree_hist.csv if present)
    #[arg(long = "degree-hist")]
    pub degree_hist: Option<PathBuf>,
    #[arg(long = "segment-length", default_value_t = 4096)]
    pub segment_length: usize,
    /// Low fit band as f_min,f_max (default 4/T,0.01)
    #[arg(long = "low-band", value_delimiter = ',')]
    pub low_band: Option<Vec<f64>>,
    /// High fit band as f_min,f_max (default 0.05,0.5)
    #[arg(long = "high-band", value_delimiter = ',')]
    pub high_band: Option<Vec<f64>>,
    /// Mean degree used by the k_min policy
    #[arg(long = "K", default_value_t = 1.0)]
    pub k: f64,
    /// Override the automatic k_min
    #[arg(long = "k-min")]
    pub k_min: Option<usize>,
}

/// Expands `--config FILE` into flags placed right after the subcommand, so
/// that explicit flags, which come later, override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--config" {
            path = strs.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::param("config", format!("{path}: {e}")))?;
    let mut injected = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: i + 1,
                reason: format!("expected 'key = value' in {path}"),
            });
        };
        let key = key.trim();
        if key == "config" {
            return Err(Error::Parse {
                line: i + 1,
                reason: "nested config files are not supported".into(),
            });
        }
        injected.push(OsString::from(format!("--{key}")));
        injected.push(OsString::from(value.trim()));
    }
    let at = args.len().min(2);
    let mut out = args[..at].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn sim_params(sim: &SimArgs, k: usize, a: f64) -> Result<SimParams> {
    let p = SimParams {
        n: sim.n,
        k,
        a,
        r: sim.r,
        seed: sim.seed,
        burn_in_sweeps: sim.burn_in,
        measure_sweeps: sim.sweeps,
        record_every_sweeps: sim.record_every,
        init: sim.init.parse::<InitialW>()?,
    };
    p.validate()?;
    Ok(p)
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let params = sim_params(&args.sim, args.k, args.a)?;
    let result = engine::run(&params)?;
    let dir = &args.common.out_dir;
    let mut ts = create(dir, "timeseries.csv")?;
    result.series.write_csv(&mut ts)?;
    ts.flush()?;
    let mut hist = create(dir, "degree_hist.csv")?;
    result.degrees.write_csv(&mut hist)?;
    hist.flush()?;
    eprintln!(
        "mean_w {} var_w {} ({} samples)",
        fmt_f64(result.mean_w),
        fmt_f64(result.var_w),
        result.series.values.len()
    );
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    if args.k.is_empty() || args.a.is_empty() {
        return Err(Error::param("K", "K and a lists must be nonempty"));
    }
    if args.replicates == 0 {
        return Err(Error::param("replicates", "must be at least 1"));
    }
    if args.workers == Some(0) {
        return Err(Error::param("workers", "must be at least 1"));
    }
    // Validate the shared parameters once, with the first grid point.
    let base = sim_params(&args.sim, args.k[0], 0.0)?;
    let mut rows = Vec::new();
    if args.a_relative {
        // a_c depends on K, so each K gets its own a grid.
        for (ki, &k) in args.k.iter().enumerate() {
            let a_c = stability::find_critical_a(k as u32, 1e-6)?.a_c;
            let a_values: Vec<f64> = args.a.iter().map(|x| x * a_c).collect();
            if let Some(bad) = a_values.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                return Err(Error::param("a", format!("scaled value {bad} outside [0, 1]")));
            }
            let grid = SweepGrid {
                k_values: vec![k],
                a_values,
                replicates: args.replicates,
            };
            // Keep seeds distinct across K by offsetting the base seed per K index.
            let base_k = SimParams {
                seed: engine::cell_seed(base.seed, ki, usize::MAX, 0),
                ..base.clone()
            };
            rows.extend(engine::sweep(&base_k, &grid, args.workers)?);
        }
    } else {
        if let Some(bad) = args.a.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::param("a", format!("must lie in [0, 1], got {bad}")));
        }
        let grid = SweepGrid {
            k_values: args.k.clone(),
            a_values: args.a.clone(),
            replicates: args.replicates,
        };
        rows = engine::sweep(&base, &grid, args.workers)?;
    }
    for row in &rows {
        if let Err(e) = &row.outcome {
            eprintln!("error: cell K={} a={} seed={}: {e}", row.k, row.a, row.seed);
        }
    }
    let mut out = create(&args.common.out_dir, "sweep.csv")?;
    engine::write_sweep_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn critical_a(args: &CriticalArgs) -> Result<()> {
    if !(args.tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let mut rows = Vec::new();
    for &k in &args.k {
        if k < 1 {
            return Err(Error::param("K", "must be at least 1"));
        }
        rows.push(stability::find_critical_a(k, args.tol)?);
    }
    let mut out = create(&args.common.out_dir, "critical_a.csv")?;
    stability::write_critical_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn snapshot_name(t: f64) -> String {
    if t.fract() == 0.0 && t.abs() < 1e15 {
        format!("P_t{}.csv", t as i64)
    } else {
        format!("P_t{t}.csv")
    }
}

fn master(args: &MasterArgs) -> Result<()> {
    let k_max = args.k_max.unwrap_or_else(|| master_eq::default_k_max(args.k));
    let eq = MasterEquation::new(args.k, k_max, args.n_w)?;
    let grid0 = match args.init.as_str() {
        "uniform" => DistributionGrid::uniform_poisson(args.k, k_max, args.n_w)?,
        "perturbed" => {
            if !(0.0..1.0).contains(&args.perturb_w) {
                return Err(Error::param("perturb-w", "must lie in [0, 1)"));
            }
            if !(0.0..1.0).contains(&args.eps) {
                return Err(Error::param("eps", "must lie in [0, 1)"));
            }
            let col = (args.perturb_w * (args.n_w - 1) as f64).round() as usize;
            let col = col.min(args.n_w - 2);
            DistributionGrid::perturbed_top(args.k, k_max, args.n_w, col, args.eps)?
        }
        other => return Err(Error::param("init", format!("unknown initial state '{other}'"))),
    };
    if args.mutation < 0.0 {
        return Err(Error::param("mutation", "must be nonnegative"));
    }
    let opts = IntegrateOptions {
        a: args.a,
        dt: args.dt,
        t_end: args.t_end,
        sample_every: args.sample_every,
        snapshot_times: args.snapshots.clone(),
        mutation: args.mutation,
        ..Default::default()
    };
    let (_, traj) = master_eq::integrate(&eq, &grid0, &opts)?;
    let dir = &args.common.out_dir;
    let mut out = create(dir, "master_traj.csv")?;
    master_eq::write_trajectory_csv(&traj, &mut out)?;
    out.flush()?;
    for (t, g) in &traj.snapshots {
        let mut out = create(dir, &snapshot_name(*t))?;
        g.write_csv(&mut out)?;
        out.flush()?;
    }
    eprintln!(
        "{} steps, final dt {}, clipped mass {:e} (max per step {:e})",
        traj.steps, traj.final_dt, traj.clipped_total, traj.clipped_max
    );
    Ok(())
}

fn band(v: &Option<Vec<f64>>, default: (f64, f64), name: &'static str) -> Result<(f64, f64)> {
    match v {
        None => Ok(default),
        Some(b) if b.len() == 2 && b[0] < b[1] => Ok((b[0], b[1])),
        Some(_) => Err(Error::param(name, "expected f_min,f_max with f_min < f_max")),
    }
}

fn analyze(args: &AnalyzeArgs) -> Result<()> {
    // Bands are checked up front; the low default depends on the series length.
    band(&args.low_band, (0.0, 1.0), "low-band")?;
    let high = band(&args.high_band, FitBands::for_duration(1.0).high, "high-band")?;
    let dir = &args.common.out_dir;
    let input = args.input.clone().unwrap_or_else(|| dir.join("timeseries.csv"));
    let ts = read_timeseries(&input)?;
    let spec = analysis::psd(&ts, args.segment_length)?;
    let duration = ts.values.len() as f64 * ts.sample_period_sweeps as f64;
    let low = band(&args.low_band, FitBands::for_duration(duration).low, "low-band")?;
    let alpha_low = analysis::loglog_slope(&spec, low.0, low.1).unwrap_or_else(|e| {
        eprintln!("warning: low band: {e}");
        f64::NAN
    });
    let alpha_high = analysis::loglog_slope(&spec, high.0, high.1).unwrap_or_else(|e| {
        eprintln!("warning: high band: {e}");
        f64::NAN
    });

    let hist_path = match &args.degree_hist {
        Some(p) => Some(p.clone()),
        None => Some(dir.join("degree_hist.csv")).filter(|p| p.exists()),
    };
    let (mut tail, mut k_min) = (f64::NAN, f64::NAN);
    if let Some(path) = hist_path {
        let hist = read_degree_histogram(&path)?;
        let chosen = args.k_min.or_else(|| analysis::select_k_min(&hist, args.k));
        match chosen {
            Some(km) => {
                k_min = km as f64;
                match analysis::powerlaw_tail_exponent(&hist, km) {
                    Ok(fit) => tail = fit.exponent,
                    Err(e) => eprintln!("warning: tail fit: {e}"),
                }
            }
            None => eprintln!("warning: no non-Poissonian tail found"),
        }
    }

    let mut out = create(dir, "spectrum.csv")?;
    spec.write_csv(&mut out)?;
    out.flush()?;
    let mut out = create(dir, "fit.csv")?;
    analysis::write_fit_csv(
        &[
            ("alpha_low", alpha_low),
            ("alpha_high", alpha_high),
            ("tail_exponent", tail),
            ("k_min", k_min),
        ],
        &mut out,
    )?;
    out.flush()?;
    eprintln!("tail method: {}", TailMethod::DiscreteMle);
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::CriticalA(a) => critical_a(a),
        Command::MasterEq(a) => master(a),
        Command::Analyze(a) => analyze(a),
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code: 0 on success, 1 for invalid input, 2 for
/// runtime failures.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            return 1;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}
