//! Command-line front end: `rate`, `schedule`, `simulate`, `verify`, and
//! `demo` subcommands over the escapelab library. Every subcommand accepts
//! `--config <file>` with flat `key = value` lines mirroring its long flags;
//! explicit flags override the file and the file overrides defaults. Outputs
//! land in `--out`, falling back to the ESCAPELAB_OUT environment variable
//! and then the working directory.
//!
//! Exit codes: 0 success (and all requested checks passing), 1 runtime or
//! verification failure, 2 usage error.

pub mod config;
pub mod manifest;
pub mod tables;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use escapelab::models::{parse_manifold, parse_model, VolumeGrowth};
use escapelab::rate::{RateFunction, DEFAULT_LOWER, INVERT_REL_TOL};
use escapelab::schedule::{build_schedule, CrossingSchedule, DEFAULT_N_MIN};
use escapelab::sim::{run_ensemble, stationary_sample, Boundary, PolePolicy, SimConfig};
use escapelab::verify::{
    empirical_crossing_tail, rate_violation_fraction, render_report, stationary_ks_test,
    CheckRecord, ReportFormat, VerificationReport,
};

use config::{load_config, resolve, resolve_required, ConfigError, ConfigMap};
use manifest::{sha256_hex, RunManifest, MANIFEST_NAME};

const DEFAULT_CONSTANT: f64 = 512.0;
const DEFAULT_ACCEPT_FRACTION: f64 = 1e-3;
const DEFAULT_KS_THRESHOLD: f64 = 0.02;

#[derive(Parser)]
#[command(name = "escapelab", version, about = "Escape-rate laboratory for radial diffusions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the escape-rate function psi on a list of times.
    Rate(RateArgs),
    /// Emit the dyadic crossing schedule and its tail bounds.
    Schedule(ScheduleArgs),
    /// Simulate an ensemble of radial diffusion paths.
    Simulate(SimulateArgs),
    /// Check a simulated run against the library's predictions.
    Verify(VerifyArgs),
    /// Run a canned end-to-end pipeline.
    Demo(DemoArgs),
}

#[derive(Args)]
struct RateArgs {
    /// Volume-growth model spec, e.g. power:C=1,D=2
    #[arg(long)]
    model: Option<String>,
    /// Times: comma-separated values or START:STOP:COUNT (geometric).
    #[arg(long)]
    t: Option<String>,
    /// Lower limit of the growth integral (must exceed e).
    #[arg(long)]
    lower: Option<f64>,
    /// Envelope constant C for the C*psi(C*t) column.
    #[arg(long = "const")]
    constant: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long = "n-max")]
    n_max: Option<u32>,
    #[arg(long = "n-min")]
    n_min: Option<u32>,
    /// Constant in the reported tail bound.
    #[arg(long = "const")]
    constant: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Manifold spec, e.g. manifold:hyperbolic,n=3,kappa=1
    #[arg(long)]
    manifold: Option<String>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Reflecting wall radius; omitted means a free process.
    #[arg(long)]
    reflect: Option<f64>,
    /// Watch dyadic levels up to this schedule index.
    #[arg(long = "schedule")]
    schedule_n_max: Option<u32>,
    #[arg(long = "schedule-n-min")]
    schedule_n_min: Option<u32>,
    #[arg(long)]
    r0: Option<f64>,
    /// Pole handling: reflect (default) or none (dimension one only).
    #[arg(long)]
    pole: Option<String>,
    #[arg(long)]
    checkpoints: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run manifest path, or the directory containing run.manifest.
    #[arg(long)]
    run: Option<PathBuf>,
    /// Comma-separated subset of: tail, rate, stationary.
    #[arg(long)]
    checks: Option<String>,
    #[arg(long = "const")]
    constant: Option<f64>,
    #[arg(long = "t-min")]
    t_min: Option<f64>,
    /// Accepted violation fraction for the rate check.
    #[arg(long)]
    accept: Option<f64>,
    #[arg(long)]
    lower: Option<f64>,
    #[arg(long = "ks-threshold")]
    ks_threshold: Option<f64>,
    #[arg(long = "burn-in")]
    burn_in: Option<f64>,
    #[arg(long)]
    spacing: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    /// Demo name; `euclidean` is the only one.
    target: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(String),
}

impl Failure {
    fn report(self) -> i32 {
        match self {
            Failure::Usage(msg) => {
                eprintln!("error: {msg}");
                2
            }
            Failure::Run(msg) => {
                eprintln!("error: {msg}");
                1
            }
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

macro_rules! run_failure_from {
    ($($ty:ty),+) => {$(
        impl From<$ty> for Failure {
            fn from(e: $ty) -> Self {
                Failure::Run(e.to_string())
            }
        }
    )+};
}

run_failure_from!(
    escapelab::models::ModelError,
    escapelab::rate::RateError,
    escapelab::schedule::ScheduleError,
    escapelab::sim::SimError,
    escapelab::verify::VerifyError,
    tables::TableError,
    std::io::Error
);

pub fn run_command(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    2
                }
            }
        }
    };
    let outcome = match cli.cmd {
        Cmd::Rate(args) => cmd_rate(args),
        Cmd::Schedule(args) => cmd_schedule(args),
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Demo(args) => cmd_demo(args),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => f.report(),
    }
}

fn default_out_dir() -> PathBuf {
    std::env::var_os("ESCAPELAB_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

fn read_optional_config(path: &Option<PathBuf>, allowed: &[&str]) -> Result<ConfigMap, Failure> {
    match path {
        Some(p) => Ok(load_config(p, allowed)?),
        None => Ok(ConfigMap::default()),
    }
}

/// Comma list (`10,100,1e3`) or geometric range (`1e2:1e6:25`).
fn parse_t_values(raw: &str) -> Result<Vec<f64>, Failure> {
    let bad = |detail: String| Failure::Usage(format!("cannot parse --t `{raw}`: {detail}"));
    if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("range form is START:STOP:COUNT".into()));
        }
        let a: f64 = parts[0].parse().map_err(|_| bad(format!("bad start `{}`", parts[0])))?;
        let b: f64 = parts[1].parse().map_err(|_| bad(format!("bad stop `{}`", parts[1])))?;
        let n: usize = parts[2].parse().map_err(|_| bad(format!("bad count `{}`", parts[2])))?;
        if !(a > 0.0) || !(b > a) || n < 2 {
            return Err(bad("need 0 < start < stop and count >= 2".into()));
        }
        let ratio = b / a;
        let mut out: Vec<f64> = (0..n)
            .map(|j| a * ratio.powf(j as f64 / (n - 1) as f64))
            .collect();
        out[n - 1] = b;
        Ok(out)
    } else {
        raw.split(',')
            .map(|s| {
                let t: f64 = s
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("bad value `{}`", s.trim())))?;
                if t < 0.0 || !t.is_finite() {
                    return Err(bad(format!("time {t} must be finite and nonnegative")));
                }
                Ok(t)
            })
            .collect()
    }
}

fn with_pool<T>(
    workers: Option<usize>,
    f: impl FnOnce() -> Result<T, Failure> + Send,
) -> Result<T, Failure>
where
    T: Send,
{
    match workers {
        None => f(),
        Some(0) => Err(Failure::Usage("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Run(format!("cannot build a {n}-thread pool: {e}")))?
            .install(f),
    }
}

fn cmd_rate(args: RateArgs) -> Result<i32, Failure> {
    let cfg = read_optional_config(&args.config, &["model", "t", "lower", "const", "out"])?;
    let model_spec: String = resolve_required(args.model, &cfg, "model")?;
    let t_raw: String = resolve_required(args.t, &cfg, "t")?;
    let lower = resolve(args.lower, &cfg, "lower", DEFAULT_LOWER)?;
    let constant = resolve(args.constant, &cfg, "const", DEFAULT_CONSTANT)?;
    let out = resolve(args.out, &cfg, "out", default_out_dir().join("rate.csv"))?;

    let model = parse_model(&model_spec)?;
    let ts = parse_t_values(&t_raw)?;
    let rate = RateFunction::new(model, lower)?;
    let mut rows = Vec::with_capacity(ts.len());
    for &t in &ts {
        let psi = rate
            .psi(t)
            .map_err(|e| Failure::Run(format!("psi({t}) for {model_spec}: {e}")))?;
        let envelope = constant
            * rate
                .psi(constant * t)
                .map_err(|e| Failure::Run(format!("psi({} * {t}) for {model_spec}: {e}", constant)))?;
        rows.push((t, psi, envelope));
    }
    let body = tables::render_rate_rows(&rows, &rate.model().spec_string(), lower, INVERT_REL_TOL);
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&out, body)?;
    println!("wrote {} ({} rows)", out.display(), rows.len());
    Ok(0)
}

fn cmd_schedule(args: ScheduleArgs) -> Result<i32, Failure> {
    let cfg = read_optional_config(&args.config, &["model", "n-max", "n-min", "const", "out"])?;
    let model_spec: String = resolve_required(args.model, &cfg, "model")?;
    let n_max: u32 = resolve_required(args.n_max, &cfg, "n-max")?;
    let n_min = resolve(args.n_min, &cfg, "n-min", DEFAULT_N_MIN)?;
    let constant = resolve(args.constant, &cfg, "const", DEFAULT_CONSTANT)?;
    let out = resolve(args.out, &cfg, "out", default_out_dir().join("schedule.csv"))?;

    let model = parse_model(&model_spec)?;
    let s = build_schedule(&model, n_min, n_max)?;
    let body = tables::render_schedule(&s, constant);
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&out, body)?;
    println!("wrote {} ({} rows)", out.display(), s.entries().len());
    Ok(0)
}

struct SimulatePlan {
    manifold_spec: String,
    paths: usize,
    horizon: f64,
    dt: f64,
    seed: u64,
    r0: f64,
    reflect: Option<f64>,
    pole: String,
    checkpoints: usize,
    schedule_range: Option<(u32, u32)>,
    workers: Option<usize>,
    out_dir: PathBuf,
}

fn execute_simulate(plan: &SimulatePlan) -> Result<PathBuf, Failure> {
    let manifold = parse_manifold(&plan.manifold_spec)?;
    let pole = match plan.pole.as_str() {
        "reflect" => PolePolicy::Reflect,
        "none" => PolePolicy::None,
        other => return Err(Failure::Usage(format!("--pole must be reflect or none, got `{other}`"))),
    };
    let mut sim = SimConfig::new(plan.dt, plan.horizon, plan.r0, plan.seed, plan.paths);
    sim.pole = pole;
    sim.checkpoints = plan.checkpoints;
    if let Some(wall) = plan.reflect {
        sim.boundary = Boundary::ReflectAt(wall);
    }
    let (schedule, levels): (Option<CrossingSchedule>, Vec<(u32, f64)>) = match plan.schedule_range
    {
        Some((n_min, n_max)) => {
            let model = VolumeGrowth::FromManifold(manifold.clone());
            let s = build_schedule(&model, n_min, n_max)?;
            let levels = s.passage_levels();
            (Some(s), levels)
        }
        None => (None, Vec::new()),
    };

    let started = Instant::now();
    let ens = with_pool(plan.workers, || Ok(run_ensemble(&manifold, &sim, &levels)?))?;
    let elapsed_ms = started.elapsed().as_millis() as u64;

    std::fs::create_dir_all(&plan.out_dir)?;
    let passages = tables::render_passages(&ens);
    let suprema = tables::render_suprema(&ens);
    std::fs::write(plan.out_dir.join("passages.csv"), &passages)?;
    std::fs::write(plan.out_dir.join("suprema.csv"), &suprema)?;
    let m = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: "simulate".to_string(),
        manifold: manifold.spec_string(),
        paths: plan.paths,
        horizon: plan.horizon,
        dt: plan.dt,
        seed: plan.seed,
        r0: plan.r0,
        reflect: plan.reflect,
        pole: plan.pole.clone(),
        checkpoints: plan.checkpoints,
        schedule_n_min: schedule.as_ref().map(|s| s.n_min()),
        schedule_n_max: schedule.as_ref().map(|s| s.n_max()),
        passages_sha256: sha256_hex(passages.as_bytes()),
        suprema_sha256: sha256_hex(suprema.as_bytes()),
        created_unix: RunManifest::now_unix(),
        elapsed_ms,
    };
    let manifest_path = m.write(&plan.out_dir)?;
    println!(
        "simulated {} paths over horizon {} (dt {}) in {} ms; outputs in {}",
        plan.paths,
        plan.horizon,
        plan.dt,
        elapsed_ms,
        plan.out_dir.display()
    );
    Ok(manifest_path)
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32, Failure> {
    let cfg = read_optional_config(
        &args.config,
        &[
            "manifold",
            "paths",
            "horizon",
            "dt",
            "seed",
            "reflect",
            "schedule",
            "schedule-n-min",
            "r0",
            "pole",
            "checkpoints",
            "workers",
            "out",
        ],
    )?;
    let plan = SimulatePlan {
        manifold_spec: resolve_required(args.manifold, &cfg, "manifold")?,
        paths: resolve_required(args.paths, &cfg, "paths")?,
        horizon: resolve_required(args.horizon, &cfg, "horizon")?,
        dt: resolve_required(args.dt, &cfg, "dt")?,
        seed: resolve_required(args.seed, &cfg, "seed")?,
        r0: resolve(args.r0, &cfg, "r0", 1.0)?,
        reflect: match args.reflect {
            Some(r) => Some(r),
            None => cfg.parsed("reflect")?,
        },
        pole: resolve(args.pole, &cfg, "pole", "reflect".to_string())?,
        checkpoints: resolve(args.checkpoints, &cfg, "checkpoints", 48)?,
        schedule_range: {
            let n_max: Option<u32> = match args.schedule_n_max {
                Some(n) => Some(n),
                None => cfg.parsed("schedule")?,
            };
            let n_min = resolve(args.schedule_n_min, &cfg, "schedule-n-min", DEFAULT_N_MIN)?;
            n_max.map(|n_max| (n_min, n_max))
        },
        workers: match args.workers {
            Some(w) => Some(w),
            None => cfg.parsed("workers")?,
        },
        out_dir: resolve(args.out, &cfg, "out", default_out_dir())?,
    };
    execute_simulate(&plan)?;
    Ok(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Check {
    Tail,
    Rate,
    Stationary,
}

fn parse_checks(raw: &str) -> Result<Vec<Check>, Failure> {
    let mut out = Vec::new();
    for part in raw.split(',') {
        let check = match part.trim().to_ascii_lowercase().as_str() {
            "tail" => Check::Tail,
            "rate" => Check::Rate,
            "stationary" => Check::Stationary,
            other => {
                return Err(Failure::Usage(format!(
                    "unknown check `{other}`; choose from tail, rate, stationary"
                )))
            }
        };
        if !out.contains(&check) {
            out.push(check);
        }
    }
    if out.is_empty() {
        return Err(Failure::Usage("--checks must name at least one check".into()));
    }
    Ok(out)
}

struct VerifyPlan {
    manifest_path: PathBuf,
    checks: Vec<Check>,
    constant: f64,
    t_min: f64,
    accept: f64,
    lower: f64,
    ks_threshold: f64,
    burn_in: Option<f64>,
    spacing: Option<f64>,
    workers: Option<usize>,
    out_dir: Option<PathBuf>,
}

fn verified_read(path: &Path, expected_sha: &str) -> Result<String, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Run(format!("cannot read {}: {e}", path.display())))?;
    let actual = sha256_hex(text.as_bytes());
    if actual != expected_sha {
        return Err(Failure::Run(format!(
            "{} does not match the manifest hash (expected {expected_sha}, got {actual}); \
             the table was modified after the run",
            path.display()
        )));
    }
    Ok(text)
}

fn execute_verify(plan: &VerifyPlan) -> Result<(VerificationReport, PathBuf), Failure> {
    let manifest_path = if plan.manifest_path.is_dir() {
        plan.manifest_path.join(MANIFEST_NAME)
    } else {
        plan.manifest_path.clone()
    };
    let m = RunManifest::load(&manifest_path)?;
    let run_dir = manifest_path.parent().map(Path::to_path_buf).unwrap_or_else(|| ".".into());
    let manifold = parse_manifold(&m.manifold)?;
    let model = VolumeGrowth::FromManifold(manifold.clone());

    let mut sim = SimConfig::new(m.dt, m.horizon, m.r0, m.seed, m.paths);
    sim.checkpoints = m.checkpoints;
    if let Some(wall) = m.reflect {
        sim.boundary = Boundary::ReflectAt(wall);
    }
    if m.pole == "none" {
        sim.pole = PolePolicy::None;
    }

    let schedule = match (m.schedule_n_min, m.schedule_n_max) {
        (Some(lo), Some(hi)) => Some(build_schedule(&model, lo, hi)?),
        _ => None,
    };
    let levels = schedule.as_ref().map(|s| s.passage_levels()).unwrap_or_default();

    let needs_tables = plan.checks.iter().any(|c| matches!(c, Check::Tail | Check::Rate));
    let ensemble = if needs_tables {
        let passages_path = run_dir.join("passages.csv");
        let suprema_path = run_dir.join("suprema.csv");
        verified_read(&passages_path, &m.passages_sha256)?;
        verified_read(&suprema_path, &m.suprema_sha256)?;
        Some(tables::load_ensemble(
            &passages_path,
            &suprema_path,
            sim.clone(),
            m.manifold.clone(),
            levels.clone(),
        )?)
    } else {
        None
    };

    let mut checks: Vec<CheckRecord> = Vec::new();
    let mut rate_settings = String::new();
    for check in &plan.checks {
        match check {
            Check::Tail => {
                let ens = ensemble.as_ref().unwrap();
                let s = schedule.as_ref().ok_or_else(|| {
                    Failure::Run(
                        "tail check needs a run simulated with --schedule so passage levels exist"
                            .into(),
                    )
                })?;
                let tail = empirical_crossing_tail(ens, s)?;
                checks.extend(tail.to_records());
            }
            Check::Rate => {
                let ens = ensemble.as_ref().unwrap();
                let rate = RateFunction::new(model.clone(), plan.lower)?;
                let rc = rate_violation_fraction(ens, &rate, plan.constant, plan.t_min)?;
                rate_settings = format!(
                    "model={} lower={} const={} t-min={}",
                    m.manifold, plan.lower, plan.constant, plan.t_min
                );
                checks.push(rc.to_record(plan.accept));
            }
            Check::Stationary => {
                let wall = m.reflect.ok_or_else(|| {
                    Failure::Run(
                        "stationary check needs a run with --reflect so the walk has an \
                         invariant law"
                            .into(),
                    )
                })?;
                let burn_in = plan.burn_in.unwrap_or(m.horizon / 5.0);
                let spacing = plan.spacing.unwrap_or(10.0 * m.dt);
                let samples = with_pool(plan.workers, || {
                    Ok(stationary_sample(&manifold, wall, &sim, burn_in, spacing)?)
                })?;
                let ks = stationary_ks_test(&samples, &manifold, wall, plan.ks_threshold)?;
                checks.push(ks.to_record());
            }
        }
    }

    let report = VerificationReport {
        run_reference: manifest_path.display().to_string(),
        rate_settings,
        checks,
    };
    let out_dir = plan.out_dir.clone().unwrap_or(run_dir);
    std::fs::create_dir_all(&out_dir)?;
    std::fs::write(out_dir.join("report.csv"), render_report(&report, ReportFormat::Csv)?)?;
    std::fs::write(out_dir.join("report.txt"), render_report(&report, ReportFormat::Text)?)?;
    Ok((report, out_dir))
}

fn print_report(report: &VerificationReport, out_dir: &Path) -> i32 {
    let mut sorted: Vec<&CheckRecord> = report.checks.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    for c in sorted {
        println!(
            "[{}] {}: statistic {:.6e} vs threshold {:.6e} (n = {})",
            if c.passed { "pass" } else { "FAIL" },
            c.name,
            c.statistic,
            c.threshold,
            c.sample_size
        );
    }
    println!("report written to {}", out_dir.join("report.csv").display());
    if report.all_passed() {
        println!("overall: PASS");
        0
    } else {
        println!("overall: FAIL");
        1
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<i32, Failure> {
    let cfg = read_optional_config(
        &args.config,
        &[
            "run",
            "checks",
            "const",
            "t-min",
            "accept",
            "lower",
            "ks-threshold",
            "burn-in",
            "spacing",
            "workers",
            "out",
        ],
    )?;
    let plan = VerifyPlan {
        manifest_path: resolve_required(args.run, &cfg, "run")?,
        checks: parse_checks(&resolve_required::<String>(args.checks, &cfg, "checks")?)?,
        constant: resolve(args.constant, &cfg, "const", DEFAULT_CONSTANT)?,
        t_min: resolve(args.t_min, &cfg, "t-min", 1.0)?,
        accept: resolve(args.accept, &cfg, "accept", DEFAULT_ACCEPT_FRACTION)?,
        lower: resolve(args.lower, &cfg, "lower", DEFAULT_LOWER)?,
        ks_threshold: resolve(args.ks_threshold, &cfg, "ks-threshold", DEFAULT_KS_THRESHOLD)?,
        burn_in: match args.burn_in {
            Some(b) => Some(b),
            None => cfg.parsed("burn-in")?,
        },
        spacing: match args.spacing {
            Some(s) => Some(s),
            None => cfg.parsed("spacing")?,
        },
        workers: match args.workers {
            Some(w) => Some(w),
            None => cfg.parsed("workers")?,
        },
        out_dir: match args.out {
            Some(o) => Some(o),
            None => cfg.parsed("out")?,
        },
    };
    let (report, out_dir) = execute_verify(&plan)?;
    Ok(print_report(&report, &out_dir))
}

fn cmd_demo(args: DemoArgs) -> Result<i32, Failure> {
    let target = args.target.unwrap_or_else(|| "euclidean".to_string());
    if target != "euclidean" {
        return Err(Failure::Usage(format!(
            "unknown demo `{target}`; `euclidean` is the only one"
        )));
    }
    let out_dir = args.out.unwrap_or_else(|| default_out_dir().join("demo"));
    println!("demo: Euclidean plane, 1000 paths, dyadic levels 3..4 (radii 8 and 16)");
    let plan = SimulatePlan {
        manifold_spec: "manifold:euclidean,n=2".into(),
        paths: 1000,
        horizon: 200.0,
        dt: 1e-2,
        seed: 7,
        r0: 1.0,
        reflect: None,
        pole: "reflect".into(),
        checkpoints: 48,
        schedule_range: Some((3, 4)),
        workers: args.workers,
        out_dir: out_dir.clone(),
    };
    let manifest_path = execute_simulate(&plan)?;
    let verify_plan = VerifyPlan {
        manifest_path,
        checks: vec![Check::Tail, Check::Rate],
        constant: DEFAULT_CONSTANT,
        t_min: 1.0,
        accept: DEFAULT_ACCEPT_FRACTION,
        lower: DEFAULT_LOWER,
        ks_threshold: DEFAULT_KS_THRESHOLD,
        burn_in: None,
        spacing: None,
        workers: args.workers,
        out_dir: None,
    };
    let (report, report_dir) = execute_verify(&verify_plan)?;
    Ok(print_report(&report, &report_dir))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_lists_and_ranges_parse() {
        assert_eq!(parse_t_values("100").unwrap(), vec![100.0]);
        assert_eq!(parse_t_values("1, 2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        let range = parse_t_values("1:100:3").unwrap();
        assert_eq!(range.len(), 3);
        assert_eq!(range[0], 1.0);
        assert!((range[1] - 10.0).abs() < 1e-12);
        assert_eq!(range[2], 100.0);
        assert!(parse_t_values("5:1:3").is_err());
        assert!(parse_t_values("1:10").is_err());
        assert!(parse_t_values("a,b").is_err());
        assert!(parse_t_values("-1").is_err());
    }

    #[test]
    fn check_lists_parse_and_dedupe() {
        let checks = parse_checks("tail,rate,tail").unwrap();
        assert_eq!(checks, vec![Check::Tail, Check::Rate]);
        assert!(parse_checks("tail,bogus").is_err());
        assert!(parse_checks("").is_err());
    }
}
