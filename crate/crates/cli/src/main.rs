use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use srgstab::lti::{self, json::load_model, TransferMatrix};
use srgstab::numrange::{self, Classification, NumrangeConfig};
use srgstab::srg::{self, AlphaMaxConfig};
use srgstab::stability::{self, Certificate, SweepConfig, SweepReport};
use srgstab::rng::{self, Purpose};

const EXIT_PASS: u8 = 0;
const EXIT_INPUT: u8 = 1;
const EXIT_FAIL: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(name = "srg-stab", version, about = "Feedback stability certificates from scaled relative graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a frequency grid and certify the loop H1, H2.
    Analyze(AnalyzeArgs),
    /// Emit SRG point clouds of one system.
    Srg(SrgArgs),
    /// Emit numerical-range boundaries and classifications of one system.
    Numrange(NumrangeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Require {
    Any,
    All,
    SmallGain,
    SrgPhase,
    ClassicPhase,
    Mixed,
    Corollary1,
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    #[arg(long)]
    h1: PathBuf,
    /// Feedback model file, or `identity` (the default).
    #[arg(long, default_value = "identity")]
    h2: String,
    #[arg(long, default_value_t = 1e-2)]
    wmin: f64,
    #[arg(long, default_value_t = 1e3)]
    wmax: f64,
    #[arg(long, default_value_t = 30)]
    ppd: usize,
    #[arg(long)]
    include_zero: bool,
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    #[arg(long, default_value_t = 64)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Summary printed on stdout; report.json and verdicts.csv are always written.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Certificate(s) deciding the exit code.
    #[arg(long, value_enum, default_value = "any")]
    require: Require,
}

#[derive(clap::Args)]
struct SrgArgs {
    #[arg(long)]
    h1: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    omega: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.6, 0.3])]
    tau: Vec<f64>,
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    #[arg(long, default_value_t = 64)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct NumrangeArgs {
    #[arg(long)]
    h1: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    omega: Vec<f64>,
    #[arg(long, default_value_t = 360)]
    angles: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {}", e.0);
        return ExitCode::from(EXIT_INPUT);
    }
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Srg(a) => srg_cmd(a).map(|_| EXIT_PASS),
        Command::Numrange(a) => numrange_cmd(a).map(|_| EXIT_PASS),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.0);
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn configure_threads() -> Result<(), InputError> {
    let Ok(v) = std::env::var("SRGSTAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| InputError(format!("SRGSTAB_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn write(path: &Path, contents: &str) -> Result<(), InputError> {
    fs::write(path, contents).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn prepare_out(dir: &Path) -> Result<(), InputError> {
    fs::create_dir_all(dir).map_err(|e| InputError(format!("{}: {e}", dir.display())))
}

fn check_samples(samples: usize) -> Result<(), InputError> {
    if samples < srg::MIN_SAMPLES {
        return Err(InputError(format!("--samples must be at least {}", srg::MIN_SAMPLES)));
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<u8, InputError> {
    check_samples(args.samples)?;
    if args.starts == 0 {
        return Err(InputError("--starts must be at least 1".into()));
    }
    let h1 = load_model(&args.h1)?;
    let h2 = if args.h2 == "identity" {
        TransferMatrix::identity(h1.n())
    } else {
        load_model(&args.h2)?
    };
    if h1.n() != h2.n() {
        return Err(InputError(format!("H1 is {0}x{0} but H2 is {1}x{1}", h1.n(), h2.n())));
    }
    let grid = lti::make_grid(args.wmin, args.wmax, args.ppd, args.include_zero)?;
    let cfg = SweepConfig {
        samples: args.samples,
        alpha: AlphaMaxConfig {
            starts: args.starts,
            ..AlphaMaxConfig::default()
        },
        seed: args.seed,
        ..SweepConfig::default()
    };
    let report = stability::sweep(&h1, &h2, &grid, &cfg)?;

    prepare_out(&args.out)?;
    write(&args.out.join("report.json"), &report.to_json())?;
    write(&args.out.join("verdicts.csv"), &report.to_csv())?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match args.format {
        Format::Json => println!("{}", summary_json(&report)),
        Format::Csv => print!("{}", report.to_csv()),
    }
    Ok(exit_code(&report, args.require))
}

fn summary_json(report: &SweepReport) -> String {
    #[derive(Serialize)]
    struct Summary<'a> {
        certificates: serde_json::Map<String, serde_json::Value>,
        witnesses: &'a stability::Witnesses,
        oracle_stable: Option<bool>,
        grid_points: usize,
        warnings: &'a [String],
    }
    let certificates = report
        .certificates()
        .iter()
        .map(|(n, c)| (n.to_string(), serde_json::Value::String(c.to_string())))
        .collect();
    serde_json::to_string_pretty(&Summary {
        certificates,
        witnesses: &report.witnesses,
        oracle_stable: report.oracle.as_ref().map(|o| o.stable),
        grid_points: report.grid.len(),
        warnings: &report.warnings,
    })
    .expect("summary serializes")
}

fn exit_code(report: &SweepReport, require: Require) -> u8 {
    let code = |c: Certificate| match c {
        Certificate::Pass => EXIT_PASS,
        Certificate::Fail => EXIT_FAIL,
        Certificate::Inconclusive => EXIT_INCONCLUSIVE,
    };
    let all = report.certificates().map(|(_, c)| c);
    match require {
        Require::Any if all.contains(&Certificate::Pass) => EXIT_PASS,
        Require::All if all.iter().all(|c| c.passed()) => EXIT_PASS,
        Require::Any | Require::All if all.contains(&Certificate::Fail) => EXIT_FAIL,
        Require::Any | Require::All => EXIT_INCONCLUSIVE,
        Require::SmallGain => code(report.certified_small_gain),
        Require::SrgPhase => code(report.certified_srg_phase),
        Require::ClassicPhase => code(report.certified_classic_phase),
        Require::Mixed => code(report.certified_mixed),
        Require::Corollary1 => code(report.certified_corollary1),
    }
}

fn srg_cmd(args: SrgArgs) -> Result<(), InputError> {
    check_samples(args.samples)?;
    if let Some(t) = args.tau.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(InputError(format!("--tau values must lie in (0, 1], got {t}")));
    }
    let h = load_model(&args.h1)?;

    #[derive(Serialize)]
    struct TauEntry {
        tau: f64,
        distance: f64,
        contains_minus_one: bool,
    }
    #[derive(Serialize)]
    struct Entry {
        omega: f64,
        sigma_max: f64,
        alpha_max: f64,
        tau: Vec<TauEntry>,
    }

    let mut points = String::from("omega,re,im,r,alpha\n");
    let mut scaled = String::from("omega,tau,re,im\n");
    let mut entries = Vec::new();
    for (k, &w) in args.omega.iter().enumerate() {
        let m = h.eval_freq(w)?;
        let mut sample = srg::srg_sample(&m, args.samples, rng::split_seed(args.seed, k as u64, Purpose::SrgH1))?;
        srg::refine_sample(&m, &mut sample)?;
        let am = srg::alpha_max(
            &m,
            &AlphaMaxConfig {
                starts: args.starts,
                seed: rng::split_seed(args.seed, k as u64, Purpose::AlphaH1),
                ..AlphaMaxConfig::default()
            },
        )?;
        let rows = sample.mirrored();
        for r in &rows {
            let _ = writeln!(points, "{w},{},{},{},{}", r[0], r[1], r[2], r[3]);
        }
        let mut tau = Vec::new();
        for &t in &args.tau {
            for r in &rows {
                let _ = writeln!(scaled, "{w},{t},{},{}", t * r[0], t * r[1]);
            }
            let d = sample
                .points
                .iter()
                .map(|p| (p.z() * t + 1.0).norm())
                .fold(f64::INFINITY, f64::min);
            tau.push(TauEntry {
                tau: t,
                distance: d,
                contains_minus_one: d <= srg::TOL_MEMBER,
            });
        }
        entries.push(Entry {
            omega: w,
            sigma_max: srg::sigma_max(&m),
            alpha_max: am.angle.max(sample.max_angle()),
            tau,
        });
    }
    prepare_out(&args.out)?;
    write(&args.out.join("srg_points.csv"), &points)?;
    write(&args.out.join("srg_tau.csv"), &scaled)?;
    let summary = serde_json::to_string_pretty(&entries)?;
    write(&args.out.join("srg_summary.json"), &summary)?;
    println!("{summary}");
    Ok(())
}

fn numrange_cmd(args: NumrangeArgs) -> Result<(), InputError> {
    let h = load_model(&args.h1)?;
    let cfg = NumrangeConfig {
        n_angles: args.angles,
        ..NumrangeConfig::default()
    };

    #[derive(Serialize)]
    struct Entry {
        omega: f64,
        boundary_file: String,
        classification: Classification,
        contains_zero: bool,
        support_max: Option<f64>,
        support_min: Option<f64>,
        opening: f64,
        phases: Option<Vec<f64>>,
    }

    prepare_out(&args.out)?;
    let mut entries = Vec::new();
    for &w in &args.omega {
        let m = h.eval_freq(w)?;
        let nr = numrange::numrange_boundary(&m, &cfg)?;
        let phases = match nr.classification {
            Classification::Sectorial => Some(numrange::sectorial_phases_with(&m, &nr)?.phases),
            _ => None,
        };
        let mut csv = String::from("re,im\n");
        for z in &nr.boundary {
            let _ = writeln!(csv, "{},{}", z.re, z.im);
        }
        let file = format!("boundary_w{w}.csv");
        write(&args.out.join(&file), &csv)?;
        entries.push(Entry {
            omega: w,
            boundary_file: file,
            classification: nr.classification,
            contains_zero: nr.contains_zero,
            support_max: nr.support_max,
            support_min: nr.support_min,
            opening: nr.opening,
            phases,
        });
    }
    let summary = serde_json::to_string_pretty(&entries)?;
    write(&args.out.join("numrange.json"), &summary)?;
    println!("{summary}");
    Ok(())
}
