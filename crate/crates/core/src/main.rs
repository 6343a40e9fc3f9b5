use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use gmetrix::axioms::{check_extended_b, check_kind, classify_space};
use gmetrix::functions::{classify_fn_with, parse_fn, ClassifyOptions, RealFn, SampleGrid};
use gmetrix::model::{rational, random_space, ClassTag, SpaceFile, Status, Verdict};
use gmetrix::preservation::{counterexample_search, membership, preserve_check, Budget, PreservationError};
use gmetrix::region::{emit_region_svg, region_check_with, RegionError, RegionSpec};
use gmetrix::suite::theorem_suite;
use gmetrix::triplets::{realize_in_plane, Triplet};

const EX_USAGE: u8 = 64;
const EX_DATAERR: u8 = 65;
const EX_NOINPUT: u8 = 66;
const EX_SOFTWARE: u8 = 70;

/// Verification toolkit for generalized metric spaces and distance-preserving functions.
#[derive(Parser)]
#[command(name = "gmetrix", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Finite spaces: verify a file or generate a random one.
    #[command(subcommand)]
    Space(SpaceCmd),
    /// Functions: classify or evaluate an expression.
    #[command(subcommand)]
    Fn(FnCmd),
    /// Push a space forward through f and verify the image.
    Preserve {
        expr: String,
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        target: ClassTag,
    },
    /// Membership of f in a function class.
    Member {
        expr: String,
        #[arg(long)]
        class: ClassTag,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Counterexample search for f against a function class.
    Search {
        expr: String,
        #[arg(long)]
        class: ClassTag,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Report any image triplet constant above this bound instead of waiting for divergence.
        #[arg(long)]
        bound: Option<f64>,
    },
    /// Run the fixed assertion suite.
    Suite {
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Check or plot the graph region of a plateau function.
    Region {
        mode: RegionMode,
        expr: String,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long = "n")]
        n_max: usize,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        /// Rescale (0, b] to (0, 1].
        #[arg(long)]
        normalize: bool,
        #[arg(short = 'o', long = "out", default_value = "region.svg")]
        out: PathBuf,
    },
    /// Realize a triangle triplet as three points in the plane.
    Realize { a: String, b: String, c: String },
}

#[derive(Subcommand)]
enum SpaceCmd {
    Verify {
        file: PathBuf,
        #[arg(long)]
        class: Option<ClassTag>,
    },
    Random {
        #[arg(long)]
        kind: ClassTag,
        #[arg(short = 'n', default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short = 'o', long = "out")]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum FnCmd {
    Classify {
        expr: String,
        #[arg(long, default_value_t = 20.0)]
        x_max: f64,
        #[arg(long, default_value_t = 10_000)]
        points: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Verify a plateau on (0, b].
        #[arg(long)]
        plateau_b: Option<f64>,
    },
    Eval {
        expr: String,
        #[arg(long)]
        at: f64,
    },
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 20.0)]
    x_max: f64,
    #[arg(long, default_value_t = 10_000)]
    points: usize,
}

impl BudgetArgs {
    fn budget(&self) -> Budget {
        Budget {
            triplet_samples: self.samples,
            grid: SampleGrid { x_max: self.x_max, n_points: self.points, seed: self.seed },
            seed: self.seed,
            ..Budget::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RegionMode {
    Check,
    Plot,
}

/// A failed command: exit code plus message.
struct Failure(u8, String);

impl Failure {
    fn usage(msg: impl ToString) -> Self {
        Failure(EX_USAGE, msg.to_string())
    }
    fn data(msg: impl ToString) -> Self {
        Failure(EX_DATAERR, msg.to_string())
    }
}

type Outcome = Result<u8, Failure>;

fn emit<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn status_code(s: Status) -> u8 {
    match s {
        Status::Holds => 0,
        Status::Fails => 1,
        Status::Inconclusive => 2,
    }
}

fn parse_expr(src: &str) -> Result<RealFn, Failure> {
    parse_fn(src).map_err(|e| Failure::usage(format!("in `{src}`: {e}")))
}

fn read_space(path: &Path) -> Result<SpaceFile, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure(EX_NOINPUT, format!("{}: {e}", path.display())))?;
    SpaceFile::from_json(&text).map_err(|e| Failure(EX_NOINPUT, format!("{}: {e}", path.display())))
}

fn space_kind(tag: ClassTag) -> Result<ClassTag, Failure> {
    if tag.is_space_kind() {
        Ok(tag)
    } else {
        Err(Failure::usage(format!("{tag} is a function class, not a space kind")))
    }
}

fn function_class(tag: ClassTag) -> Result<ClassTag, Failure> {
    if tag.is_space_kind() {
        Err(Failure::usage(format!("{tag} is a space kind, not a function class")))
    } else {
        Ok(tag)
    }
}

fn preservation_failure(e: PreservationError) -> Failure {
    match e {
        PreservationError::UnsupportedClass(_) | PreservationError::UnsupportedTarget(_) | PreservationError::InvalidBudget(_) => {
            Failure::usage(e)
        }
        _ => Failure::data(e),
    }
}

fn run(cmd: Cmd) -> Outcome {
    match cmd {
        Cmd::Space(SpaceCmd::Verify { file, class }) => {
            let space = read_space(&file)?;
            let Some(tag) = class else {
                let report = classify_space(&space.table);
                eprintln!("verified {} points against every space kind", space.table.len());
                emit(&report);
                return Ok(0);
            };
            let tag = space_kind(tag)?;
            let verdict = match (&space.theta, tag) {
                (Some(theta), ClassTag::ExtendedBMetric) => {
                    check_extended_b(&space.table, theta).map_err(Failure::data)?
                }
                _ => check_kind(&space.table, tag),
            };
            eprintln!("{tag}: {:?}", verdict.status);
            emit(&json!({ "class": tag, "verdict": verdict }));
            Ok(status_code(verdict.status))
        }
        Cmd::Space(SpaceCmd::Random { kind, n, seed, out }) => {
            let kind = space_kind(kind)?;
            let (table, theta) = random_space(kind, n, seed).map_err(Failure::usage)?;
            let mut value: Value = serde_json::from_str(&SpaceFile { table, theta }.to_json()).expect("valid json");
            value["kind"] = json!(kind);
            value["seed"] = json!(seed);
            let text = serde_json::to_string_pretty(&value).expect("serializes");
            match out {
                Some(path) => {
                    fs::write(&path, text + "\n").map_err(|e| Failure(EX_NOINPUT, format!("{}: {e}", path.display())))?;
                    eprintln!("wrote {} ({kind}, n = {n}, seed = {seed})", path.display());
                }
                None => println!("{text}"),
            }
            Ok(0)
        }
        Cmd::Fn(FnCmd::Classify { expr, x_max, points, seed, plateau_b }) => {
            let f = parse_expr(&expr)?;
            let grid = SampleGrid::new(x_max, points, seed).map_err(Failure::usage)?;
            let opts = ClassifyOptions { plateau_b, ..Default::default() };
            let profile = classify_fn_with(&f, grid, &opts).map_err(Failure::data)?;
            eprintln!(
                "amenable {:?}, increasing {:?}, subadditive {:?}, quasi-subadditive {:?} (s* ≈ {})",
                profile.amenable.status,
                profile.increasing.status,
                profile.subadditive.status,
                profile.quasi_subadditive.status,
                profile.s_star_estimate()
            );
            emit(&profile);
            Ok(0)
        }
        Cmd::Fn(FnCmd::Eval { expr, at }) => {
            let f = parse_expr(&expr)?;
            let value = f.eval(at).map_err(Failure::data)?;
            emit(&json!({ "function": expr, "x": at, "value": value }));
            Ok(0)
        }
        Cmd::Preserve { expr, space, target } => {
            let f = parse_expr(&expr)?;
            let target = space_kind(target)?;
            let space = read_space(&space)?;
            let verdict: Verdict = preserve_check(&f, &space.table, target).map_err(preservation_failure)?;
            eprintln!("{expr} on {target}: {:?}", verdict.status);
            emit(&json!({ "function": expr, "target": target, "verdict": verdict }));
            Ok(status_code(verdict.status))
        }
        Cmd::Member { expr, class, budget } => {
            let f = parse_expr(&expr)?;
            let class = function_class(class)?;
            let report = membership(&f, class, &budget.budget()).map_err(preservation_failure)?;
            eprintln!("{expr} in {class}: {:?} ({})", report.status, report.basis);
            emit(&report);
            Ok(report.status.exit_code() as u8)
        }
        Cmd::Search { expr, class, budget, bound } => {
            let f = parse_expr(&expr)?;
            let class = function_class(class)?;
            let b = budget.budget();
            let found = counterexample_search(&f, class, &b, bound).map_err(preservation_failure)?;
            eprintln!("{expr} against {class}: {}", if found.is_some() { "witness found" } else { "no witness" });
            emit(&json!({
                "function": expr,
                "class": class,
                "seed": b.seed,
                "triplet_samples": b.triplet_samples,
                "bound": bound,
                "found": found.is_some(),
                "witness": found,
            }));
            Ok(if found.is_some() { 1 } else { 2 })
        }
        Cmd::Suite { seed } => {
            let report = theorem_suite(seed);
            let failed = report.assertions.iter().filter(|a| !a.passed).count();
            eprintln!("{} assertions, {failed} failed (seed {seed})", report.assertions.len());
            emit(&report);
            Ok(if report.all_passed { 0 } else { 1 })
        }
        Cmd::Region { mode, expr, a, b, n_max, samples, normalize, out } => {
            let f = parse_expr(&expr)?;
            let spec = RegionSpec::new(a, b, n_max, samples).map_err(Failure::usage)?;
            let region_failure = |e: RegionError| match e {
                RegionError::Io { .. } => Failure(EX_NOINPUT, e.to_string()),
                RegionError::InvalidSpec(_) | RegionError::OutOfRange { .. } => Failure::usage(e),
                _ => Failure::data(e),
            };
            let report = match mode {
                RegionMode::Check => region_check_with(&f, &spec, normalize).map_err(region_failure)?,
                RegionMode::Plot => {
                    if normalize {
                        return Err(Failure::usage("--normalize applies to `region check` only"));
                    }
                    let r = emit_region_svg(&f, &spec, &out).map_err(region_failure)?;
                    eprintln!("wrote {}", out.display());
                    r
                }
            };
            match report.first_failure() {
                Some(iv) => eprintln!("fails on interval n = {} ({:?} bound)", iv.n, iv.violated),
                None => eprintln!("all {} intervals hold", report.intervals.len()),
            }
            emit(&report);
            Ok(if report.all_hold { 0 } else { 1 })
        }
        Cmd::Realize { a, b, c } => {
            let side = |s: &str| {
                rational::parse(s)
                    .map(|q| rational::to_f64(&q))
                    .map_err(|e| Failure::usage(format!("`{s}`: {e}")))
            };
            let t = Triplet::new(side(&a)?, side(&b)?, side(&c)?);
            let points = realize_in_plane(&t).map_err(Failure::data)?;
            emit(&json!({ "triplet": t, "points": points }));
            Ok(0)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("GMETRIX_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("GMETRIX_THREADS must be a positive integer, got `{raw}`")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure(EX_SOFTWARE, e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EX_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = configure_threads().and_then(|()| {
        std::panic::catch_unwind(|| run(cli.cmd)).unwrap_or_else(|_| {
            Err(Failure(EX_SOFTWARE, "internal invariant violated (see the panic message above)".into()))
        })
    });
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("gmetrix: {msg}");
            ExitCode::from(code)
        }
    }
}
