//! `navkit` command-line simulator.
//!
//! Exit codes: 0 on success, 1 when a run fails (collision, goal not reached,
//! coverage or margin check failed), 2 on bad input.

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use navkit::bpnn::{self, io as bio, sensors, Mlp, Optimizer, TrainConfig};
use navkit::coverage::{
    check_full_coverage, check_safety_margins, plan_coverage, FovSpec, MarginReport, PlanConfig, RegionSpec,
};
use navkit::sim::{run, svg, RunOutcome, Scenario, SimError};
use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use walkdir::WalkDir;

const SEED_VAR: &str = "NAVKIT_SEED";

#[derive(Parser)]
#[command(name = "navkit", version, about = "Reactive navigation, prediction and coverage planning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trajectory log and summary.
    Run(RunArgs),
    /// Run every scenario matching a directory or file pattern in parallel.
    Batch(BatchArgs),
    /// Load and validate a scenario without running it.
    Validate { scenario: PathBuf },
    /// Coverage planning.
    #[command(subcommand)]
    Coverage(CoverageCommand),
    /// Sonar-array network: synthesize data, train, evaluate.
    #[command(subcommand)]
    Bpnn(BpnnCommand),
}

#[derive(Args)]
struct RunArgs {
    scenario: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write an SVG plot.
    #[arg(long)]
    svg: bool,
    /// Also write the log as JSON lines.
    #[arg(long)]
    jsonl: bool,
    /// Steps between obstacle snapshots in the plot.
    #[arg(long, default_value_t = 25)]
    svg_every: usize,
}

#[derive(Args)]
struct BatchArgs {
    /// Directory (every `*.json` inside) or a path whose file name may hold `*` and `?`.
    pattern: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    svg: bool,
}

#[derive(Subcommand)]
enum CoverageCommand {
    /// Place lattice waypoints over a region and smooth one tour per cluster.
    Plan(PlanArgs),
}

#[derive(Args)]
struct PlanArgs {
    region: PathBuf,
    /// Full apex angle of the downward camera cone (rad).
    #[arg(long)]
    fov_theta: f64,
    /// Ground coverage radius (m).
    #[arg(long)]
    radius: f64,
    #[arg(long, default_value_t = 1)]
    clusters: usize,
    /// Visit tolerance (m); defaults to a quarter of the radius.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    min_turn_radius: f64,
    /// Search lattice rotation and anchor for the fewest waypoints.
    #[arg(long)]
    search: bool,
    /// Grid step of the coverage check (m).
    #[arg(long, default_value_t = 1.0)]
    check_step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    svg: bool,
}

#[derive(Subcommand)]
enum BpnnCommand {
    /// Synthesize labelled sonar samples.
    Gen {
        #[arg(long, default_value_t = 150)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a network on a dataset file.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = bpnn::DEFAULT_HIDDEN)]
        hidden: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = OptimizerArg::Lm)]
        optimizer: OptimizerArg,
        #[arg(long)]
        max_epochs: Option<usize>,
    },
    /// Report error statistics of a model on a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Lm,
    Gd,
}

/// Error carrying the exit code it should produce.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn input(error: impl Into<anyhow::Error>) -> Self {
        Self { code: 2, error: error.into() }
    }

    fn io(error: impl Into<anyhow::Error>) -> Self {
        Self { code: 1, error: error.into() }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        Self { code: e.exit_code() as u8, error: e.into() }
    }
}

type Outcome = Result<u8, Failure>;

/// Prints to stdout, ignoring a closed pipe (`navkit run … | head`).
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Batch(a) => cmd_batch(&a),
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Coverage(CoverageCommand::Plan(a)) => cmd_coverage_plan(&a),
        Command::Bpnn(c) => cmd_bpnn(c),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let mut s = Scenario::load(path).map_err(|e| Failure::from(e).context(path))?;
    if let Ok(v) = std::env::var(SEED_VAR) {
        s.seed = v.trim().parse().map_err(|e| Failure::input(anyhow!("{SEED_VAR}={v:?}: {e}")))?;
    }
    Ok(s)
}

impl Failure {
    fn context(self, path: &Path) -> Self {
        Self { code: self.code, error: self.error.context(path.display().to_string()) }
    }
}

fn stem(s: &Scenario, path: &Path) -> String {
    if s.name.is_empty() {
        path.file_stem().map_or_else(|| "run".into(), |x| x.to_string_lossy().into_owned())
    } else {
        s.name.clone()
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(Failure::io)
}

fn run_one(path: &Path, out: &Path, svg_plot: bool, jsonl: bool, svg_every: usize) -> Result<RunOutcome, Failure> {
    let s = load_scenario(path)?;
    let c = s.compile().map_err(|e| Failure::from(e).context(path))?;
    let outcome = run(&c);
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display())).map_err(Failure::io)?;
    let name = stem(&s, path);
    write(&out.join(format!("{name}.csv")), &outcome.log.to_csv())?;
    let summary = serde_json::to_string_pretty(&outcome.summary).map_err(Failure::io)?;
    write(&out.join(format!("{name}.summary.json")), &(summary + "\n"))?;
    if jsonl {
        write(&out.join(format!("{name}.jsonl")), &outcome.log.to_jsonl())?;
    }
    if svg_plot {
        write(&out.join(format!("{name}.svg")), &svg::render_run(&c, &outcome.log, svg_every))?;
    }
    Ok(outcome)
}

fn verdict(o: &RunOutcome) -> u8 {
    if o.summary.reached && o.summary.violations.is_empty() {
        0
    } else {
        1
    }
}

fn cmd_run(a: &RunArgs) -> Outcome {
    let o = run_one(&a.scenario, &a.out, a.svg, a.jsonl, a.svg_every)?;
    say!("{}", serde_json::to_string_pretty(&o.summary).map_err(Failure::io)?);
    Ok(verdict(&o))
}

fn cmd_validate(path: &Path) -> Outcome {
    let s = load_scenario(path)?;
    let c = s.compile().map_err(|e| Failure::from(e).context(path))?;
    say!(
        "ok: {} ({}D, {} obstacle(s), horizon {} steps)",
        stem(&s, path),
        c.dimension(),
        c.tracks.len(),
        c.horizon
    );
    Ok(0)
}

/// `*` matches any run of characters, `?` exactly one.
fn wildcard(pattern: &[char], name: &[char]) -> bool {
    match (pattern.first(), name.first()) {
        (None, None) => true,
        (Some('*'), _) => wildcard(&pattern[1..], name) || (!name.is_empty() && wildcard(pattern, &name[1..])),
        (Some('?'), Some(_)) => wildcard(&pattern[1..], &name[1..]),
        (Some(p), Some(n)) if p == n => wildcard(&pattern[1..], &name[1..]),
        _ => false,
    }
}

fn expand(pattern: &str) -> Result<Vec<PathBuf>, Failure> {
    let p = Path::new(pattern);
    let (dir, file_pattern) = if p.is_dir() {
        (p.to_path_buf(), "*.json".to_string())
    } else {
        let dir = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let name = p.file_name().ok_or_else(|| Failure::input(anyhow!("pattern {pattern:?} has no file name")))?;
        (dir.to_path_buf(), name.to_string_lossy().into_owned())
    };
    let pat: Vec<char> = file_pattern.chars().collect();
    let mut files: Vec<PathBuf> = WalkDir::new(&dir)
        .max_depth(1)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .filter(|e| wildcard(&pat, &e.file_name().to_string_lossy().chars().collect::<Vec<_>>()))
        .map(|e| e.into_path())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure::input(anyhow!("no scenario matches {pattern:?}")));
    }
    Ok(files)
}

fn cmd_batch(a: &BatchArgs) -> Outcome {
    let files = expand(&a.pattern)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs.max(1)).build().map_err(Failure::io)?;
    let results: Vec<(PathBuf, Result<RunOutcome, Failure>)> = pool.install(|| {
        files.par_iter().map(|f| (f.clone(), run_one(f, &a.out, a.svg, false, 25))).collect()
    });
    let mut code = 0;
    for (f, r) in results {
        match r {
            Ok(o) => {
                let s = &o.summary;
                say!(
                    "{}: {:?} steps={} path_length={} min_clearance={}",
                    f.display(),
                    s.termination,
                    s.steps,
                    s.path_length,
                    s.min_clearance
                );
                code = code.max(verdict(&o));
            }
            Err(e) => {
                eprintln!("{}: error: {:#}", f.display(), e.error);
                code = code.max(e.code);
            }
        }
    }
    Ok(code)
}

#[derive(Serialize)]
struct CoverageReport {
    region: String,
    waypoints: usize,
    altitude: f64,
    coverage_radius: f64,
    altitude_clipped: bool,
    full_coverage: bool,
    uncovered_points: usize,
    check_samples: usize,
    tours: Vec<Vec<usize>>,
    tour_lengths: Vec<f64>,
    delta: f64,
    max_join_residual: f64,
    margins: Vec<MarginReport>,
    margins_ok: bool,
}

fn cmd_coverage_plan(a: &PlanArgs) -> Outcome {
    let spec = RegionSpec::load(&a.region).map_err(Failure::input)?;
    let region = spec.region().map_err(Failure::input)?;
    let fov = FovSpec::new(a.fov_theta, spec.altitude_band[0], spec.altitude_band[1]).map_err(Failure::input)?;
    let cfg = PlanConfig {
        clusters: a.clusters,
        delta: a.delta,
        min_turn_radius: a.min_turn_radius,
        seed: a.seed,
        search: a.search,
    };
    let plan = plan_coverage(&region, &fov, a.radius, &cfg).map_err(Failure::input)?;
    let check = check_full_coverage(&plan.waypoints, &region, a.check_step);
    let mut margins = Vec::new();
    for p in &plan.paths {
        margins.push(
            check_safety_margins(p, &plan.waypoints, &region, spec.separation_margin, spec.clearance_margin)
                .map_err(Failure::input)?,
        );
    }
    let report = CoverageReport {
        region: if spec.name.is_empty() { a.region.display().to_string() } else { spec.name.clone() },
        waypoints: plan.waypoints.points.len(),
        altitude: plan.altitude.z,
        coverage_radius: plan.altitude.radius,
        altitude_clipped: plan.altitude.clipped,
        full_coverage: check.covered,
        uncovered_points: check.uncovered.len(),
        check_samples: check.samples,
        tours: plan.tours.clone(),
        tour_lengths: plan.paths.iter().map(|p| p.length()).collect(),
        delta: plan.paths.first().map_or(0.0, |p| p.delta),
        max_join_residual: plan.paths.iter().map(|p| p.join_residuals().1).fold(0.0, f64::max),
        margins_ok: margins.iter().all(|m| m.ok()),
        margins,
    };
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display())).map_err(Failure::io)?;
    let name = a.region.file_stem().map_or_else(|| "region".into(), |s| s.to_string_lossy().into_owned());
    write(&a.out.join(format!("{name}.waypoints.csv")), &plan.waypoints.to_csv())?;
    for (i, p) in plan.paths.iter().enumerate() {
        write(&a.out.join(format!("{name}.path{i}.csv")), &p.to_csv(0.05))?;
    }
    let text = serde_json::to_string_pretty(&report).map_err(Failure::io)?;
    write(&a.out.join(format!("{name}.report.json")), &(text.clone() + "\n"))?;
    if a.svg {
        write(&a.out.join(format!("{name}.svg")), &svg::render_coverage(&region, &plan))?;
    }
    say!("{text}");
    Ok(if report.full_coverage && report.margins_ok { 0 } else { 1 })
}

fn cmd_bpnn(c: BpnnCommand) -> Outcome {
    let read = |p: &Path| std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())).map_err(Failure::input);
    match c {
        BpnnCommand::Gen { n, seed, out } => {
            let data = sensors::synth_dataset(&sensors::SceneConfig::default(), n, seed);
            write(&out, &bio::write_dataset(&data))?;
            say!("wrote {n} samples to {}", out.display());
            Ok(0)
        }
        BpnnCommand::Train { data, out, hidden, seed, optimizer, max_epochs } => {
            let data = bio::read_dataset(&read(&data)?).map_err(Failure::input)?;
            let mut cfg = TrainConfig {
                seed,
                optimizer: match optimizer {
                    OptimizerArg::Lm => Optimizer::LevenbergMarquardt,
                    OptimizerArg::Gd => Optimizer::GradientDescent,
                },
                ..TrainConfig::default()
            };
            if let Some(m) = max_epochs {
                cfg.max_epochs = m;
            }
            let (net, report) = bpnn::train(&Mlp::sonar(hidden, seed), &data, &cfg).map_err(Failure::input)?;
            write(&out, &bio::write_model(&net))?;
            let (lo, hi) = bpnn::error_band(&report.test_errors, 0);
            say!(
                "epochs={} best_epoch={} train_mse={} val_mse={} test_dmin_band=[{lo}, {hi}]",
                report.epochs_run, report.best_epoch, report.final_train_mse, report.final_val_mse
            );
            Ok(0)
        }
        BpnnCommand::Eval { model, data } => {
            let net = bio::read_model(&read(&model)?).map_err(Failure::input)?;
            let data = bio::read_dataset(&read(&data)?).map_err(Failure::input)?;
            let errs = bpnn::errors(&net, &data.samples);
            let (dlo, dhi) = bpnn::error_band(&errs, 0);
            let (ilo, ihi) = bpnn::error_band(&errs, 1);
            say!(
                "samples={} mse={} dmin_band=[{dlo}, {dhi}] index_band=[{ilo}, {ihi}]",
                data.samples.len(),
                net.dataset_mse(&data.samples)
            );
            Ok(0)
        }
    }
}
