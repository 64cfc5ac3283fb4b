use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use paracond::condition::{algebraic_condition, lemma1_check};
use paracond::io::{build_report, read_algorithm, serialize_algorithm, trace_csv, write_atomic};
use paracond::lifting::{check_integral, lift};
use paracond::potential::{potential_trace, CALIBRATED_ROTATION_CONSTANT};
use paracond::suites::{prepare, verify_campaign, verify_programs, CampaignConfig, KappaChoice, Suite, VerifyOptions, DEFAULT_SEED};
use paracond::transform::{scaled_variant, target_program_with, tightness_program, BuildOptions};
use paracond::{Error, GateProgram, TransformKind, TransformSpec};

#[derive(Parser)]
#[command(name = "paracond", version, about = "Gate programs, paraunitary lifting, condition numbers and quasi-entropy potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a transform program, its scaled integral variant, or the 2x2 tightness example.
    Build(BuildArgs),
    /// Lift a program and report per-step supports and evaluation residuals.
    Lift(ProgramArgs),
    /// Condition report: geometric and algebraic condition at every step.
    Analyze(ProgramArgs),
    /// Potential trace (CSV by default).
    Trace(ProgramArgs),
    /// Run a named verification suite on a program or a random campaign.
    Verify(VerifyArgs),
    /// Aggregate report with every check.
    Report(ProgramArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Transform {
    Wh,
    Dft,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Md,
}

#[derive(Args)]
struct Source {
    /// Algorithm file to read.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Build the program from a transform instead of reading a file.
    #[arg(long, value_enum)]
    transform: Option<Transform>,
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Insert balanced constant gates keeping supports in `lo,hi`.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    window: Option<(i64, i64)>,
    /// Emit the DFT bit reversal as swap gates.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    explicit_permutation: bool,
    /// Use the 2x2 tightness example.
    #[arg(long)]
    tightness: bool,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0.75)]
    delta: f64,
    /// `auto` (measured algebraic condition) or a number.
    #[arg(long, default_value = "auto")]
    kappa: KappaChoice,
    /// Unit-circle samples for the maximum-modulus check.
    #[arg(long, default_value_t = 512)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Rotation-change constant of the potential bound.
    #[arg(long, default_value_t = CALIBRATED_ROTATION_CONSTANT)]
    c: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 0.75)]
    delta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProgramArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    /// paraunitary, evaluation, lemma1, lemma2, claim3, claim4, maxmod, appendixA, appendixB, parseval
    suite: Suite,
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    common: Common,
    /// Run on this many random integral programs instead of one program.
    #[arg(long)]
    random: Option<usize>,
    /// Gates per random program.
    #[arg(long, default_value_t = 50)]
    m: usize,
}

fn parse_window(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `lo,hi`")?;
    let lo = a.trim().parse().map_err(|_| format!("bad integer `{a}`"))?;
    let hi = b.trim().parse().map_err(|_| format!("bad integer `{b}`"))?;
    Ok((lo, hi))
}

enum Failure {
    Checks,
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn load(source: &Source, delta: f64) -> Result<GateProgram, Failure> {
    if source.tightness {
        return Ok(tightness_program(delta));
    }
    if let Some(path) = &source.input {
        return Ok(read_algorithm(path)?);
    }
    let Some(t) = source.transform else {
        return Err(Failure::Usage("one of --input, --transform or --tightness is required".into()));
    };
    let kind = match t {
        Transform::Wh => TransformKind::WalshHadamard,
        Transform::Dft => TransformKind::DftReal,
    };
    let spec = TransformSpec::new(kind, source.n)?;
    Ok(match source.window {
        Some(w) => scaled_variant(&spec, delta, w)?,
        None => target_program_with(
            &spec,
            BuildOptions {
                explicit_permutation: source.explicit_permutation,
            },
        ),
    })
}

fn options(c: &Common) -> VerifyOptions {
    VerifyOptions {
        delta: c.delta,
        kappa: c.kappa,
        circle_samples: c.samples,
        c: c.c,
        seed: c.seed,
        ..VerifyOptions::default()
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Outcome {
    match out {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct LiftStep {
    t: usize,
    deg: i64,
    val: i64,
    evaluation_residual: f64,
    paraunitary_residual: f64,
}

#[derive(Serialize)]
struct LiftOutput {
    label: String,
    delta: f64,
    requested_delta: f64,
    exponents: Vec<(f64, i64)>,
    steps: Vec<LiftStep>,
}

fn run_lift(args: &ProgramArgs) -> Outcome {
    let p = load(&args.source, args.common.delta)?;
    let cert = check_integral(&p, args.common.delta)?;
    let lifted = lift(&p, &cert)?;
    let prefixes = p.prefix_matrices();
    let mut steps = Vec::new();
    for (t, (m, real)) in lifted.steps.iter().zip(&prefixes).enumerate() {
        let (deg, val) = m.deg_val()?;
        let at = m.evaluate_real(cert.delta)?;
        steps.push(LiftStep {
            t,
            deg,
            val,
            evaluation_residual: at.iter().zip(real.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max),
            paraunitary_residual: m.paraunitary_residual()?,
        });
    }
    let out = LiftOutput {
        label: p.label.clone(),
        delta: cert.delta,
        requested_delta: cert.requested_delta,
        exponents: cert.exponents.clone(),
        steps,
    };
    emit(&args.common.out, &json(&out))
}

fn run_analyze(args: &ProgramArgs) -> Outcome {
    let p = load(&args.source, args.common.delta)?;
    let cert = check_integral(&p, args.common.delta)?;
    let report = algebraic_condition(&lift(&p, &cert)?)?;
    let lemma1 = lemma1_check(&p, &cert)?;
    let text = match args.common.format.unwrap_or(Format::Json) {
        Format::Md => {
            let mut s = format!("# Condition of `{}`\n\n| t | deg | val | algebraic | geometric |\n|---|---|---|---|---|\n", p.label);
            for st in &report.steps {
                s += &format!("| {} | {} | {} | {} | {} |\n", st.t, st.deg, st.val, st.algebraic, st.geometric);
            }
            s += &format!(
                "\nalgorithm: algebraic {}, geometric {}, rho {}\n",
                report.algorithm_algebraic, report.algorithm_geometric, report.rho
            );
            s
        }
        _ => json(&serde_json::json!({ "condition": report, "lemma1": lemma1 })),
    };
    emit(&args.common.out, &text)?;
    if lemma1.holds {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn run_trace(args: &ProgramArgs) -> Outcome {
    let p = load(&args.source, args.common.delta)?;
    let opts = options(&args.common);
    let prep = prepare(&p, &opts)?;
    let trace = potential_trace(&prep.lifted, &prep.pair, opts.c)?;
    let text = match args.common.format.unwrap_or(Format::Csv) {
        Format::Json => json(&trace),
        _ => trace_csv(&trace)?,
    };
    emit(&args.common.out, &text)?;
    if trace.violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn run_verify(args: &VerifyArgs) -> Outcome {
    let opts = options(&args.common);
    let results = match args.random {
        Some(programs) => {
            let cfg = CampaignConfig {
                programs,
                n: args.source.n,
                m: args.m,
                delta: args.common.delta,
                seed: args.common.seed,
                ..CampaignConfig::default()
            };
            verify_campaign(&[args.suite], &cfg, &opts)?
        }
        None => {
            let p = load(&args.source, args.common.delta)?;
            verify_programs(&[args.suite], &[p], &opts)?
        }
    };
    let text = match args.common.format.unwrap_or(Format::Md) {
        Format::Json => json(&results),
        _ => results
            .iter()
            .map(|r| {
                format!(
                    "{}: {} ({} programs, {}/{} checks passed, worst {} = {})\n",
                    r.suite,
                    if r.passed() { "pass" } else { "FAIL" },
                    r.programs,
                    r.checks - r.failures,
                    r.checks,
                    r.metric,
                    r.worst
                ) + &r.first_failure.as_ref().map(|f| format!("  first failure: {f}\n")).unwrap_or_default()
            })
            .collect(),
    };
    emit(&args.common.out, &text)?;
    if results.iter().all(|r| r.passed()) {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn run_report(args: &ProgramArgs) -> Outcome {
    let p = load(&args.source, args.common.delta)?;
    let report = build_report(&p, &options(&args.common))?;
    let text = match args.common.format.unwrap_or(Format::Json) {
        Format::Md => report.to_markdown(),
        _ => report.to_json(),
    };
    emit(&args.common.out, &text)?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Build(b) => {
            let p = load(&b.source, b.delta)?;
            emit(&b.out, &serialize_algorithm(&p))
        }
        Command::Lift(a) => run_lift(&a),
        Command::Analyze(a) => run_analyze(&a),
        Command::Trace(a) => run_trace(&a),
        Command::Verify(v) => run_verify(&v),
        Command::Report(a) => run_report(&a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
