//! The `dialectic` command line.
//!
//! Exit codes: 0 success, 1 domain failure, 2 usage or parse error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::applications::{self, ApplicationError, KnowledgeBase, RepairMode};
use crate::corpus;
use crate::diagonalizer::{diagonalize, DiagonalizeConfig};
use crate::legacy::{
    backward_translate, check_alignment, forward_translate, Direction, LegacyRun, LegacySystem, Mutation,
};
use crate::opponents::OpponentFamily;
use crate::run::{estimate_beliefs, QSystem, RunError, RunTrace};
use crate::spec_file::SystemSpec;

pub const BUNDLED_FAMILY: &str = include_str!("../assets/opponents.family");

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "dialectic",
    version,
    about = "Run, translate and diagonalize against dialectical systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone, Copy)]
struct Horizon {
    /// Number of stages to run.
    #[arg(long, default_value_t = 10_000)]
    horizon: u64,
    /// Stages without change before a position counts as stable.
    #[arg(long, default_value_t = 100)]
    window: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check Inclusion, staging, Monotony and Iteration over small sets.
    Validate {
        spec: PathBuf,
        /// Largest axiom index in the checked sets.
        #[arg(long, default_value_t = 8)]
        bound: u64,
        /// Largest checked set size; all subsets when omitted.
        #[arg(long)]
        width: Option<usize>,
    },
    /// Run a system and estimate its limiting beliefs.
    Run {
        spec: PathBuf,
        #[command(flatten)]
        horizon: Horizon,
        /// Write the trace file here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Compare runs with the legacy formalism in both directions.
    Diff {
        /// System to translate; with `--fuzz` random systems are used instead.
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1_000)]
        horizon: u64,
        /// Number of random systems to check.
        #[arg(long)]
        fuzz: Option<u64>,
        /// First seed of the fuzz corpus.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads for fuzzing.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Swap the legacy clause order (for testing the checker).
        #[arg(long, hide = true)]
        mutate: bool,
    },
    /// Build a system whose limiting beliefs differ from every opponent's.
    Diagonalize {
        /// Opponent family file; the bundled family when omitted.
        family: Option<PathBuf>,
        #[command(flatten)]
        horizon: Horizon,
        /// Upper bound on the fuel given to each opponent call.
        #[arg(long, default_value_t = 10_000)]
        fuel_cap: u64,
        /// Write the full report here instead of standard output.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the constructed system's trace file here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Repair an inconsistent knowledge base.
    Repair {
        kb: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::D)]
        mode: Mode,
        #[command(flatten)]
        horizon: Horizon,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Revise a knowledge base by incoming items.
    Revise {
        kb: PathBuf,
        input: PathBuf,
        #[command(flatten)]
        horizon: Horizon,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    D,
    Q,
}

/// A command's failure: message and exit code.
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn domain(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_FAILURE,
        message: message.into(),
    }
}

type Outcome = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let mut buf = String::new();
    let result = dispatch(cli.command, &mut buf);
    let _ = out.write_all(buf.as_bytes());
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, out: &mut String) -> Outcome {
    match command {
        Command::Validate { spec, bound, width } => cmd_validate(&spec, bound, width, out),
        Command::Run { spec, horizon, trace } => cmd_run(&spec, horizon, trace.as_deref(), out),
        Command::Diff {
            spec,
            horizon,
            fuzz,
            seed,
            jobs,
            mutate,
        } => {
            let mutation = Mutation {
                prefer_counterexample: mutate,
            };
            match (spec, fuzz) {
                (Some(_), Some(_)) => Err(usage("give either a spec file or --fuzz, not both")),
                (None, None) => Err(usage("give a spec file or --fuzz <count>")),
                (Some(spec), None) => cmd_diff(&spec, horizon, mutation, out),
                (None, Some(count)) => cmd_diff_fuzz(seed, count, jobs, horizon, mutation, out),
            }
        }
        Command::Diagonalize {
            family,
            horizon,
            fuel_cap,
            report,
            trace,
        } => cmd_diagonalize(
            family.as_deref(),
            horizon,
            fuel_cap,
            report.as_deref(),
            trace.as_deref(),
            out,
        ),
        Command::Repair {
            kb,
            mode,
            horizon,
            report,
            trace,
        } => {
            let mode = match mode {
                Mode::D => RepairMode::D,
                Mode::Q => RepairMode::Q,
            };
            cmd_repair(&kb, mode, horizon, report.as_deref(), trace.as_deref(), out)
        }
        Command::Revise {
            kb,
            input,
            horizon,
            report,
            trace,
        } => cmd_revise(&kb, &input, horizon, report.as_deref(), trace.as_deref(), out),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Writes to `path` when given, otherwise appends to `out`.
fn emit(path: Option<&Path>, contents: &str, out: &mut String) -> Result<(), Failure> {
    match path {
        Some(p) => write_file(p, contents),
        None => {
            out.push_str(contents);
            Ok(())
        }
    }
}

fn load_spec(path: &Path) -> Result<SystemSpec, Failure> {
    let text = read(path)?;
    SystemSpec::parse(&text).map_err(|e| usage(format!("{}:{e}", path.display())))
}

fn load_system(path: &Path) -> Result<QSystem, Failure> {
    load_spec(path)?
        .system()
        .map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn run_failure(e: RunError) -> Failure {
    match e {
        RunError::MissingReplacement { .. } => domain(e.to_string()),
        RunError::Load(_) => usage(e.to_string()),
    }
}

fn cmd_validate(path: &Path, bound: u64, width: Option<usize>, out: &mut String) -> Outcome {
    let spec = load_spec(path)?;
    let width = width.unwrap_or(bound as usize + 1);
    let report = spec.rules.validate(bound, width).map_err(|e| usage(e.to_string()))?;
    let _ = writeln!(
        out,
        "checked {} sets over a0..a{bound}, width {width}{}",
        report.sets_checked,
        if report.structural_iteration {
            " (iteration holds structurally)"
        } else {
            ""
        }
    );
    for v in &report.violations {
        let _ = writeln!(out, "violation: {v}");
    }
    if report.passed() {
        let _ = writeln!(out, "pass");
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(out, "fail");
        Ok(EXIT_FAILURE)
    }
}

fn join_or_dash<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    let v: Vec<String> = items.into_iter().map(|t| t.to_string()).collect();
    if v.is_empty() {
        "-".into()
    } else {
        v.join(" ")
    }
}

/// `a1 a4..a9 a12`: maximal runs of consecutive indices collapsed.
fn ranges(indices: impl IntoIterator<Item = u64>) -> String {
    let mut parts: Vec<(u64, u64)> = Vec::new();
    for i in indices {
        match parts.last_mut() {
            Some((_, hi)) if *hi + 1 == i => *hi = i,
            _ => parts.push((i, i)),
        }
    }
    join_or_dash(parts.into_iter().map(|(lo, hi)| match hi - lo {
        0 => format!("a{lo}"),
        1 => format!("a{lo} a{hi}"),
        _ => format!("a{lo}..a{hi}"),
    }))
}

fn cmd_run(path: &Path, h: Horizon, trace_path: Option<&Path>, out: &mut String) -> Outcome {
    let spec = load_spec(path)?;
    let system = spec.system().map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let trace = system.run(h.horizon).map_err(run_failure)?;
    if let Some(p) = trace_path {
        write_file(p, &trace.to_trace_file())?;
    }
    let stability = estimate_beliefs(&trace, h.window);
    let _ = writeln!(out, "variant: {}", spec.variant());
    let _ = writeln!(out, "horizon: {}", trace.horizon);
    let _ = writeln!(out, "length: {}", trace.final_string.len());
    let _ = writeln!(
        out,
        "stable prefix: {} of {} (window {})",
        stability.stable_prefix_length,
        trace.final_string.len(),
        stability.window
    );
    let _ = writeln!(
        out,
        "beliefs: {}",
        ranges(stability.belief_estimate().into_iter().map(|a| a.0))
    );
    let _ = writeln!(out, "loop suspects: {}", join_or_dash(&stability.loop_suspects));
    let _ = writeln!(
        out,
        "clean: {}",
        if stability.is_clean(trace.rule_horizon) {
            "yes"
        } else {
            "no"
        }
    );
    Ok(EXIT_OK)
}

/// Both directions for one q-system; one line per direction.
fn diff_system(system: &QSystem, horizon: u64, mutation: Mutation) -> Result<(bool, String), String> {
    let mut text = String::new();
    let trace = system.run(horizon).map_err(|e| e.to_string())?;
    let legacy = backward_translate(system);
    let ok_back = align_line(&mut text, "backward", &trace, &legacy, &Direction::Backward, mutation)?;
    let forward = forward_translate(&legacy).map_err(|e| e.to_string())?;
    let ok_fwd = diff_legacy(&forward, &legacy, horizon, mutation, &mut text)?;
    Ok((ok_back && ok_fwd, text))
}

fn diff_legacy(
    q: &QSystem,
    legacy: &LegacySystem,
    horizon: u64,
    mutation: Mutation,
    text: &mut String,
) -> Result<bool, String> {
    let trace = q.run(horizon).map_err(|e| e.to_string())?;
    align_line(
        text,
        "forward",
        &trace,
        legacy,
        &Direction::Forward(legacy.f.clone()),
        mutation,
    )
}

fn align_line(
    text: &mut String,
    label: &str,
    trace: &RunTrace,
    legacy: &LegacySystem,
    direction: &Direction,
    mutation: Mutation,
) -> Result<bool, String> {
    let report =
        check_alignment(trace, LegacyRun::with_mutation(legacy, mutation), direction).map_err(|e| e.to_string())?;
    match &report.first_mismatch {
        None => {
            let _ = writeln!(text, "{label}: agree over {} stages", report.stages_checked);
            Ok(true)
        }
        Some(m) => {
            let _ = writeln!(text, "{label}: {m}");
            Ok(false)
        }
    }
}

fn cmd_diff(path: &Path, horizon: u64, mutation: Mutation, out: &mut String) -> Outcome {
    let system = load_system(path)?;
    let (ok, text) = diff_system(&system, horizon, mutation).map_err(domain)?;
    out.push_str(&text);
    Ok(if ok { EXIT_OK } else { EXIT_FAILURE })
}

/// One fuzz case: a random system in both directions, then a scrambled
/// legacy system forward.
fn fuzz_case(seed: u64, horizon: u64, mutation: Mutation) -> (bool, String) {
    let system = corpus::random_q_system(seed, corpus::variant_for(seed));
    let mut text = String::new();
    let result = diff_system(&system, horizon, mutation).and_then(|(ok, t)| {
        text.push_str(&t);
        let legacy = corpus::random_legacy_system(seed);
        let q = forward_translate(&legacy).map_err(|e| e.to_string())?;
        let mut line = String::new();
        let ok2 = diff_legacy(&q, &legacy, horizon, mutation, &mut line)?;
        text.push_str(&line.replacen("forward", "scrambled forward", 1));
        Ok(ok && ok2)
    });
    let ok = match result {
        Ok(ok) => ok,
        Err(e) => {
            let _ = writeln!(text, "error: {e}");
            false
        }
    };
    let mut prefixed = String::new();
    for line in text.lines() {
        let _ = writeln!(prefixed, "seed {seed}: {line}");
    }
    (ok, prefixed)
}

fn cmd_diff_fuzz(seed: u64, count: u64, jobs: usize, horizon: u64, mutation: Mutation, out: &mut String) -> Outcome {
    let seeds: Vec<u64> = (seed..seed.saturating_add(count)).collect();
    let jobs = jobs.clamp(1, seeds.len().max(1));
    let chunk = seeds.len().div_ceil(jobs).max(1);
    let results: Vec<(bool, String)> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|&s| fuzz_case(s, horizon, mutation))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("fuzz worker panicked"))
            .collect()
    });
    let failures = results.iter().filter(|(ok, _)| !ok).count();
    for (_, text) in &results {
        out.push_str(text);
    }
    let _ = writeln!(out, "{} systems, {failures} with mismatches", results.len());
    Ok(if failures == 0 { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_diagonalize(
    family: Option<&Path>,
    h: Horizon,
    fuel_cap: u64,
    report_path: Option<&Path>,
    trace_path: Option<&Path>,
    out: &mut String,
) -> Outcome {
    let (label, text) = match family {
        Some(p) => (p.display().to_string(), read(p)?),
        None => ("bundled family".to_string(), BUNDLED_FAMILY.to_string()),
    };
    let family = OpponentFamily::parse(&text).map_err(|e| usage(format!("{label}: {e}")))?;
    let config = DiagonalizeConfig {
        horizon: h.horizon,
        window: h.window,
        fuel_cap,
    };
    let report = diagonalize(family.systems(), config).map_err(|e| usage(e.to_string()))?;
    if let Some(p) = trace_path {
        write_file(p, &report.trace.to_trace_file())?;
    }
    match report_path {
        Some(p) => {
            write_file(p, &report.to_string())?;
            for v in &report.verdicts {
                let _ = writeln!(out, "{v}");
            }
            for c in &report.checks {
                let _ = writeln!(out, "check {}: {}", c.name, if c.passed { "pass" } else { "FAIL" });
            }
        }
        None => out.push_str(&report.to_string()),
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_FAILURE })
}

fn load_kb(path: &Path) -> Result<KnowledgeBase, Failure> {
    let text = read(path)?;
    KnowledgeBase::parse(&text).map_err(|e| usage(format!("{}:{e}", path.display())))
}

fn application_failure(e: ApplicationError) -> Failure {
    match e {
        ApplicationError::InconsistentInput(_) | ApplicationError::Run(_) => domain(e.to_string()),
        _ => usage(e.to_string()),
    }
}

fn cmd_repair(
    path: &Path,
    mode: RepairMode,
    h: Horizon,
    report_path: Option<&Path>,
    trace_path: Option<&Path>,
    out: &mut String,
) -> Outcome {
    let kb = load_kb(path)?;
    let result = applications::repair(&kb, h.horizon, h.window, mode).map_err(application_failure)?;
    if let Some(p) = trace_path {
        write_file(p, &result.trace.to_trace_file())?;
    }
    let mut report = String::new();
    let _ = result.write_report(&kb, &mut report);
    emit(report_path, &report, out)?;
    Ok(EXIT_OK)
}

fn cmd_revise(
    kb_path: &Path,
    input_path: &Path,
    h: Horizon,
    report_path: Option<&Path>,
    trace_path: Option<&Path>,
    out: &mut String,
) -> Outcome {
    let kb = load_kb(kb_path)?;
    let text = read(input_path)?;
    let input = kb
        .parse_incoming(&text)
        .map_err(|e| usage(format!("{}:{e}", input_path.display())))?;
    let result = applications::revise_stream(&kb, &input, h.horizon, h.window).map_err(application_failure)?;
    if let Some(p) = trace_path {
        write_file(p, &result.repair.trace.to_trace_file())?;
    }
    let mut report = String::new();
    let _ = result.write_report(&kb, &input, &mut report);
    emit(report_path, &report, out)?;
    Ok(EXIT_OK)
}
