//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 verification
//! failure, 4 resource limit or exhausted search budget.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{Config, Placement};
use crate::delivery::{
    decodable, AutoScheduler, DecodeReport, DeliverySchedule, ExhaustiveScheduler, GreedyScheduler,
    RequestVector, Scheduler, SearchLimits, ToyScheduler,
};
use crate::error::Error;
use crate::exact::{exact_to_f64, parse_exact, Exact, Frac};
use crate::placement::CacheState;
use crate::rates::sweep::{memory_curve, popularity_curve};
use crate::rates::{
    certify_table_allm, compare_strategies, expected_rate_mc, lower_envelope, table_allm, Family,
    RateProfile, Strategy, DEFAULT_ENUMERATION_LIMIT,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;
pub const EXIT_LIMIT: i32 = 4;

/// Thread-count override for parallel rate computations.
pub const THREADS_ENV: &str = "CODEDCACHE_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "codedcache",
    version,
    about = "Coded caching with nonuniform demands"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute cache contents.
    Place {
        config: PathBuf,
        /// Write JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build delivery schedules.
    Deliver(DeliverArgs),
    /// Expected rate of the configured placement.
    Expected {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = SchedulerKind::Auto)]
        scheduler: SchedulerKind,
        /// Estimate by sampling this many demands instead of enumerating.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_LIMIT)]
        limit: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rate curves against p (two files) or against M.
    Rates(RatesArgs),
    /// Closed-form comparison for three users and two files at M = 1.
    Compare {
        #[arg(long, default_value = "0.5:1:0.005")]
        p_grid: String,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// The nine (M, R) rows for three users and two files.
    Table {
        #[arg(long)]
        p: String,
        /// Recompute each row by exhaustive delivery search.
        #[arg(long)]
        certify: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct DeliverArgs {
    pub config: PathBuf,
    /// Comma-separated file names, one per user, e.g. A,A,B.
    #[arg(
        long,
        conflicts_with = "all_demands",
        required_unless_present = "all_demands"
    )]
    pub demand: Option<String>,
    #[arg(long)]
    pub all_demands: bool,
    #[arg(long, value_enum, default_value_t = SchedulerKind::Auto)]
    pub scheduler: SchedulerKind,
    /// Check every schedule with the GF(2) decoder; exit 3 on failure.
    #[arg(long)]
    pub verify: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    pub config: PathBuf,
    /// `start:stop:step` or a single value.
    #[arg(long, conflicts_with = "m_sweep", required_unless_present = "m_sweep")]
    pub p_grid: Option<String>,
    #[arg(long)]
    pub m_sweep: bool,
    #[arg(long, default_value = "alpha,beta")]
    pub strategies: String,
    #[arg(long, value_enum, default_value_t = SchedulerKind::Auto)]
    pub scheduler: SchedulerKind,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_LIMIT)]
    pub limit: u64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Also write points, envelope status and the curve as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchedulerKind {
    Toy,
    Greedy,
    Exhaustive,
    Auto,
}

impl SchedulerKind {
    pub fn build(self) -> Box<dyn Scheduler> {
        let limits = SearchLimits::default();
        match self {
            SchedulerKind::Toy => Box::new(ToyScheduler),
            SchedulerKind::Greedy => Box::new(GreedyScheduler),
            SchedulerKind::Exhaustive => Box::new(ExhaustiveScheduler { limits }),
            SchedulerKind::Auto => Box::new(AutoScheduler { limits }),
        }
    }
}

/// Failure of a command, with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Validation(_) | Error::Unsupported(_) => EXIT_USAGE,
            Error::Overflow(_) | Error::Limit(_) | Error::Infeasible(_) => EXIT_LIMIT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Written next to the first output of a command as `<output>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config: Option<String>,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    pub version: &'static str,
    pub timestamp: u64,
}

struct Outputs {
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new() -> Self {
        Outputs {
            written: Vec::new(),
        }
    }

    fn write(&mut self, path: &Path, contents: &str) -> CmdResult {
        fs::write(path, contents)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    /// Writes to `path`, or to stdout when there is none.
    fn emit(&mut self, path: Option<&Path>, contents: &str) -> CmdResult {
        match path {
            Some(p) => self.write(p, contents),
            None => {
                print!("{contents}");
                Ok(())
            }
        }
    }

    fn finish(self, args: &[String], config: Option<&Path>, seed: Option<u64>) -> CmdResult {
        let Some(first) = self.written.first() else {
            return Ok(());
        };
        let manifest = RunManifest {
            command: args.to_vec(),
            config: config.map(|p| p.display().to_string()),
            seed,
            outputs: self
                .written
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
            version: env!("CARGO_PKG_VERSION"),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let mut path = first.clone().into_os_string();
        path.push(".manifest.json");
        fs::write(&path, json(&manifest)).map_err(|e| usage(format!("cannot write manifest: {e}")))
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Parses `start:stop:step` (inclusive of `stop` when it is hit exactly) or a
/// single value, all read as exact decimals or fractions.
pub fn parse_grid(text: &str) -> crate::Result<Vec<Exact>> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [one] => Ok(vec![parse_exact(one)?]),
        [a, b, step] => {
            let (a, b, step) = (parse_exact(a)?, parse_exact(b)?, parse_exact(step)?);
            if step <= Exact::from_integer(0.into()) {
                return Err(Error::validation("grid step must be positive"));
            }
            if a > b {
                return Err(Error::validation("grid start exceeds stop"));
            }
            let mut out = Vec::new();
            let mut x = a;
            while x <= b {
                out.push(x.clone());
                x += &step;
                if out.len() > 1_000_000 {
                    return Err(Error::Limit("grid has more than 10^6 points".into()));
                }
            }
            Ok(out)
        }
        _ => Err(Error::validation(format!(
            "grid {text:?} is not start:stop:step"
        ))),
    }
}

pub fn parse_strategies(text: &str) -> crate::Result<Vec<Strategy>> {
    let list: Vec<Strategy> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<crate::Result<_>>()?;
    if list.is_empty() {
        return Err(Error::validation("no strategies given"));
    }
    Ok(list)
}

fn cmd_place(config: &Path, out: Option<&Path>, outputs: &mut Outputs) -> CmdResult {
    let cfg = Config::load(config)?;
    let text = json(&cfg.place()?.export());
    outputs.emit(out, &text)
}

#[derive(Serialize)]
struct ScheduleOutput {
    /// Memory-sharing part, for the grouping baseline.
    #[serde(skip_serializing_if = "Option::is_none")]
    part: Option<usize>,
    #[serde(serialize_with = "crate::rates::serialize_frac")]
    weight: Frac,
    #[serde(serialize_with = "crate::rates::serialize_frac")]
    rate: Frac,
    schedule: DeliverySchedule,
    text: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<DecodeReport>,
}

#[derive(Serialize)]
struct DemandOutput {
    demand: String,
    #[serde(serialize_with = "crate::rates::serialize_frac")]
    rate: Frac,
    schedules: Vec<ScheduleOutput>,
}

fn cmd_deliver(args: &DeliverArgs, outputs: &mut Outputs) -> CmdResult {
    let cfg = Config::load(&args.config)?;
    let layout = cfg.layout()?;
    let demands = match &args.demand {
        Some(d) => {
            let d = RequestVector::parse(d)?;
            d.check(layout.users(), layout.files())?;
            vec![d]
        }
        None => RequestVector::all(layout.users(), layout.files()),
    };
    let scheduler = args.scheduler.build();
    let placement = cfg.place()?;
    let caches: Vec<(Option<usize>, Frac, &CacheState)> = match &placement {
        Placement::Beta(c) => vec![(None, Frac::from_integer(1), c)],
        Placement::Alpha(s) => s
            .parts()
            .iter()
            .enumerate()
            .map(|(i, p)| (Some(i), p.weight, &p.cache))
            .collect(),
    };

    let mut results = Vec::with_capacity(demands.len());
    let mut failures = Vec::new();
    let mut text = String::new();
    for d in &demands {
        let mut schedules = Vec::new();
        let mut total = Frac::from_integer(0);
        for &(part, weight, cache) in &caches {
            let schedule = scheduler.schedule(cache, d)?;
            let verification = if args.verify {
                let report = decodable(cache, &schedule, d)?;
                if !report.decodable {
                    failures.push(d.to_string());
                }
                Some(report)
            } else {
                None
            };
            total += weight * schedule.rate();
            schedules.push(ScheduleOutput {
                part,
                weight,
                rate: schedule.rate(),
                text: schedule.messages.iter().map(|m| m.to_string()).collect(),
                schedule,
                verification,
            });
        }
        text.push_str(&format!("d={d} rate={total}\n"));
        for s in &schedules {
            if let Some(i) = s.part {
                text.push_str(&format!("  part {i} (weight {})\n", s.weight));
            }
            for line in &s.text {
                text.push_str(&format!("  {line}\n"));
            }
        }
        results.push(DemandOutput {
            demand: d.to_string(),
            rate: total,
            schedules,
        });
    }
    let body = serde_json::json!({
        "scheduler": scheduler.name(),
        "verified": args.verify,
        "demands": results,
    });
    match &args.out {
        Some(p) => {
            outputs.write(p, &json(&body))?;
            print!("{text}");
        }
        None if args.verify => print!("{text}"),
        None => print!("{}", json(&body)),
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VERIFY,
            message: format!("schedules failed verification for {}", failures.join(" ")),
        })
    }
}

fn cmd_expected(
    config: &Path,
    scheduler: SchedulerKind,
    samples: Option<u64>,
    seed: u64,
    limit: u64,
    out: Option<&Path>,
    outputs: &mut Outputs,
) -> CmdResult {
    let cfg = Config::load(config)?;
    let layout = cfg.layout()?;
    let scheduler = scheduler.build();
    let placement = cfg.place()?;
    let placed = placement.placed();
    let memory = cfg.memory()?;
    let body = match samples {
        Some(n) => {
            let est = expected_rate_mc(placed, &*scheduler, &layout.popularity_f64(), n, seed)?;
            serde_json::json!({
                "memory": memory.to_string(),
                "scheduler": scheduler.name(),
                "monte_carlo": est,
                "seed": seed,
            })
        }
        None => {
            let profile = RateProfile::build(placed, &*scheduler, layout.files(), limit)?;
            let r = profile.expectation(layout.popularity())?;
            serde_json::json!({
                "memory": memory.to_string(),
                "scheduler": scheduler.name(),
                "rate": exact_to_f64(&r),
                "rate_exact": r.to_string(),
            })
        }
    };
    outputs.emit(out, &json(&body))
}

fn cmd_rates(args: &RatesArgs, outputs: &mut Outputs) -> CmdResult {
    let cfg = Config::load(&args.config)?;
    let layout = cfg.layout()?;
    let strategies = parse_strategies(&args.strategies)?;
    let grid = args.p_grid.as_deref().map(parse_grid).transpose()?;
    if grid.is_some() && layout.files() != 2 {
        return Err(usage(format!(
            "--p-grid needs exactly two files, the config has {}",
            layout.files()
        )));
    }
    let scheduler = args.scheduler.build();
    let families: Vec<Family> = strategies
        .iter()
        .map(|&s| Family::build(s, &layout, &*scheduler, args.limit))
        .collect::<crate::Result<_>>()?;

    let (curve, points) = match &grid {
        Some(grid) => (popularity_curve(&families, cfg.memory()?, grid)?, None),
        None => {
            let pop = layout.popularity();
            let envelopes = families
                .iter()
                .map(|f| {
                    let pts = f.points(pop)?;
                    Ok(serde_json::json!({
                        "strategy": f.strategy,
                        "envelope": lower_envelope(&pts)?,
                    }))
                })
                .collect::<crate::Result<Vec<_>>>()?;
            (memory_curve(&families, pop)?, Some(envelopes))
        }
    };
    outputs.emit(args.csv.as_deref(), &curve.to_csv())?;
    if let Some(path) = &args.json {
        let body = serde_json::json!({
            "scheduler": scheduler.name(),
            "curve": curve,
            "strategies": points,
        });
        outputs.write(path, &json(&body))?;
    }
    Ok(())
}

fn grid_f64(text: &str) -> crate::Result<Vec<f64>> {
    Ok(parse_grid(text)?.iter().map(exact_to_f64).collect())
}

fn cmd_compare(
    p_grid: &str,
    csv: Option<&Path>,
    json_out: Option<&Path>,
    outputs: &mut Outputs,
) -> CmdResult {
    let cmp = compare_strategies(&grid_f64(p_grid)?)?;
    outputs.emit(csv, &cmp.curve.to_csv())?;
    let summary = format!(
        "alpha branch threshold {:.6}\nbeta advantage ends at {:.6}\nmax gain R_beta/R_alpha = {:.6} at p = {:.6}\n",
        cmp.thresholds.alpha_branch,
        cmp.thresholds.beta_advantage_end,
        cmp.max_gain.ratio,
        cmp.max_gain.p
    );
    match json_out {
        Some(p) => outputs.write(p, &json(&cmp))?,
        None if csv.is_some() => print!("{summary}"),
        None => eprint!("{summary}"),
    }
    Ok(())
}

fn cmd_table(p: &str, certify: bool, out: Option<&Path>, outputs: &mut Outputs) -> CmdResult {
    let p = parse_exact(p)?;
    let rows = table_allm(&p)?;
    let env = lower_envelope(&rows)?;
    let mut body = serde_json::json!({ "p": p.to_string(), "envelope": env });
    let mut mismatch = false;
    if certify {
        let cert = certify_table_allm(&p)?;
        mismatch = cert.iter().any(|c| !c.equal);
        body["certification"] = serde_json::to_value(&cert).expect("serializable");
    }
    outputs.emit(out, &json(&body))?;
    if mismatch {
        return Err(Failure {
            code: EXIT_VERIFY,
            message: "a closed form disagrees with the exhaustive rate".into(),
        });
    }
    Ok(())
}

fn configure_threads() -> CmdResult {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| usage(format!("{THREADS_ENV}={v:?} is not a thread count")))?;
        // A second initialisation in the same process is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

/// Runs the command line `args` (including the program name) and returns the
/// exit code. Errors go to stderr.
pub fn run(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, &args) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: &Cli, args: &[String]) -> CmdResult {
    configure_threads()?;
    let mut outputs = Outputs::new();
    let (config, seed) = match &cli.command {
        Command::Place { config, out } => {
            cmd_place(config, out.as_deref(), &mut outputs)?;
            (Some(config.as_path()), None)
        }
        Command::Deliver(a) => {
            let r = cmd_deliver(a, &mut outputs);
            // Keep the manifest for failed verifications too.
            outputs.finish(args, Some(&a.config), None)?;
            return r;
        }
        Command::Expected {
            config,
            scheduler,
            samples,
            seed,
            limit,
            out,
        } => {
            cmd_expected(
                config,
                *scheduler,
                *samples,
                *seed,
                *limit,
                out.as_deref(),
                &mut outputs,
            )?;
            (Some(config.as_path()), samples.map(|_| *seed))
        }
        Command::Rates(a) => {
            cmd_rates(a, &mut outputs)?;
            (Some(a.config.as_path()), None)
        }
        Command::Compare { p_grid, csv, json } => {
            cmd_compare(p_grid, csv.as_deref(), json.as_deref(), &mut outputs)?;
            (None, None)
        }
        Command::Table { p, certify, out } => {
            cmd_table(p, *certify, out.as_deref(), &mut outputs)?;
            (None, None)
        }
    };
    outputs.finish(args, config, seed)
}
