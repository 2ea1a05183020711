use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use trigrid::bench::{n_sweep, run_suite_with_progress, BenchConfig, BenchRecord};
use trigrid::exec::{EdmBuffer, Engine, Kernel};
use trigrid::pedm::write_pedm;
use trigrid::report::emit_csv;
use trigrid::verify::{exactness_sweep, verify_suite};
use trigrid_core::edm::{edm_reference, gen_points};
use trigrid_core::kernel::KernelSpec;
use trigrid_core::{AnyMapper, ProblemSize, SqrtEngine, StrategyKind};

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "trigrid", version, about = "Grid-to-triangle mapping strategies: benchmarks and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time strategies over a sweep of N and write a CSV report.
    Bench(BenchArgs),
    /// Check that every strategy covers each cell exactly once.
    Verify(VerifyArgs),
    /// Compare an LTM square-root engine with the integer oracle for every block index.
    Exactness(ExactnessArgs),
    /// Compute one distance matrix and write it as a packed dump.
    Edm(EdmArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Dummy,
    Edm,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated strategy tags, or `all`.
    #[arg(long, default_value = "all")]
    strategies: String,
    #[arg(long, value_enum, default_value = "dummy")]
    kernel: KernelArg,
    /// Features per point for the EDM kernel.
    #[arg(long, default_value_t = 2)]
    features: u32,
    #[arg(long, default_value_t = 1024)]
    n_start: u32,
    /// Defaults to 30720 for the dummy kernel and 8192 for EDM.
    #[arg(long)]
    n_end: Option<u32>,
    #[arg(long, default_value_t = 1024)]
    n_step: u32,
    /// Explicit comma-separated N values; overrides the start/end/step sweep.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<u32>>,
    #[arg(long, default_value_t = 16)]
    rho: u32,
    #[arg(long, default_value_t = 5)]
    reps: u32,
    /// Worker threads, or AUTO for one per core.
    #[arg(long, default_value = "AUTO", value_parser = parse_workers)]
    workers: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// EDM outputs are checked against the sequential oracle up to this N.
    #[arg(long, default_value_t = 1024)]
    verify_cap: u32,
    /// Skip the second, independently timed BB series.
    #[arg(long)]
    no_control: bool,
    /// Minimum duration of one repetition, in milliseconds.
    #[arg(long, default_value_t = 5)]
    min_rep_ms: u64,
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated strategy tags, or `all`.
    #[arg(long, default_value = "all")]
    strategy: String,
    #[arg(long, default_value_t = 256)]
    n_max: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    #[value(name = "ltm-x")]
    LtmX,
    #[value(name = "ltm-n")]
    LtmN,
    #[value(name = "ltm-r")]
    LtmR,
}

#[derive(Args)]
struct ExactnessArgs {
    #[arg(long, value_enum, default_value = "ltm-r")]
    engine: EngineArg,
    #[arg(long, default_value_t = 30720)]
    n: u32,
    #[arg(long, default_value_t = 16)]
    rho: u32,
    /// Repair constant; defaults to the engine's own.
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f32>,
}

#[derive(Args)]
struct EdmArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 2)]
    features: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "ltm-r")]
    strategy: String,
    #[arg(long, default_value_t = 16)]
    rho: u32,
    #[arg(long, default_value = "AUTO", value_parser = parse_workers)]
    workers: usize,
    /// Also compare against the sequential oracle.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    out: PathBuf,
}

fn parse_workers(s: &str) -> Result<usize, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(0);
    }
    match s.parse::<usize>() {
        Ok(0) | Err(_) => Err(format!("expected AUTO or a positive integer, got `{s}`")),
        Ok(w) => Ok(w),
    }
}

fn parse_strategies(s: &str) -> Result<Vec<StrategyKind>, String> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(StrategyKind::ALL.to_vec());
    }
    let mut out = Vec::new();
    for tag in s.split(',').filter(|t| !t.trim().is_empty()) {
        let kind: StrategyKind = tag.parse().map_err(|e| format!("`{}`: {e}", tag.trim()))?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    if out.is_empty() {
        return Err("no strategies given".into());
    }
    Ok(out)
}

/// A failure and the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl ToString) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bench(a) => bench(a),
        Command::Verify(a) => verify(a),
        Command::Exactness(a) => exactness(a),
        Command::Edm(a) => edm(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("trigrid: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    let strategies = parse_strategies(&a.strategies).map_err(Failure::config)?;
    let kernel = match a.kernel {
        KernelArg::Dummy => KernelSpec::Dummy,
        KernelArg::Edm => KernelSpec::edm(a.features).map_err(Failure::config)?,
    };
    let n_list = match a.n_list {
        Some(list) => list,
        None => {
            let end = a.n_end.unwrap_or(match kernel {
                KernelSpec::Dummy => 30720,
                KernelSpec::Edm { .. } => 8192,
            });
            n_sweep(a.n_start, end, a.n_step)
        }
    };
    let mut cfg = BenchConfig::new(strategies, n_list, kernel);
    cfg.rho = a.rho;
    cfg.repetitions = a.reps;
    cfg.workers = a.workers;
    cfg.seed = a.seed;
    cfg.verify_cap = a.verify_cap;
    cfg.control = !a.no_control;
    cfg.min_rep_time = Duration::from_millis(a.min_rep_ms);
    cfg.validate().map_err(Failure::config)?;

    let started = Instant::now();
    let report = run_suite_with_progress(&cfg, print_group).map_err(Failure::config)?;
    for s in &report.skipped {
        eprintln!("skipped {} at N = {}: {}", s.strategy, s.n, s.reason);
    }
    emit_csv(&report.records, &a.out).map_err(Failure::config)?;
    eprintln!(
        "wrote {} records to {} in {:.1} s",
        report.records.len(),
        a.out.display(),
        started.elapsed().as_secs_f64()
    );
    if !report.all_verified() {
        return Err(Failure {
            code: EXIT_VERIFY,
            message: "EDM output differs from the oracle".into(),
        });
    }
    Ok(())
}

/// One line per N: median time and improvement per series.
fn print_group(group: &[BenchRecord]) {
    let Some(first) = group.first() else { return };
    let mut line = format!("N = {:>6}", first.n);
    let mut seen: Vec<&str> = Vec::new();
    for r in group {
        if seen.contains(&r.strategy.as_str()) {
            continue;
        }
        seen.push(&r.strategy);
        let mut times: Vec<u64> = group.iter().filter(|o| o.strategy == r.strategy).map(|o| o.wall_time_ns).collect();
        let med = trigrid::bench::median(&mut times).unwrap_or(0);
        line.push_str(&format!("  {} {:.3} ms", r.strategy, med as f64 / 1e6));
        if let Some(i) = r.i_measured {
            line.push_str(&format!(" (I {i:.3})"));
        }
        if r.verified == Some(false) {
            line.push_str(" MISMATCH");
        }
    }
    eprintln!("{line}");
}

fn verify(a: VerifyArgs) -> Result<(), Failure> {
    let strategies = parse_strategies(&a.strategy).map_err(Failure::config)?;
    if a.n_max == 0 {
        return Err(Failure::config("--n-max must be positive"));
    }
    let started = Instant::now();
    let mut failed = false;
    for kind in strategies {
        let s = verify_suite(&[kind], a.n_max).map_err(Failure::config)?;
        println!(
            "{:<6} {:>6} grids  {}",
            kind.as_str(),
            s.cases,
            if s.passed() { "ok" } else { "FAILED" }
        );
        for f in s.failures.iter().take(10) {
            println!(
                "    N = {} rho = {}: {} duplicates, {} misses, {} out of domain",
                f.n_elems, f.rho, f.duplicates, f.misses, f.strays
            );
        }
        failed |= !s.passed();
    }
    println!("{:.1} s", started.elapsed().as_secs_f64());
    if failed {
        return Err(Failure {
            code: EXIT_VERIFY,
            message: "coverage check failed".into(),
        });
    }
    Ok(())
}

fn exactness(a: ExactnessArgs) -> Result<(), Failure> {
    let size = ProblemSize::new(a.n, a.rho).map_err(Failure::config)?;
    let mut engine = match a.engine {
        EngineArg::LtmX => SqrtEngine::native(),
        EngineArg::LtmN => SqrtEngine::newton(),
        EngineArg::LtmR => SqrtEngine::reciprocal(),
    };
    if let Some(eps) = a.epsilon {
        engine = engine.with_epsilon(eps);
    }
    let r = exactness_sweep(engine, size.blocks());
    println!(
        "{:?} eps = {:e}, n = {} blocks: {} indices, {} mismatches",
        engine.variant, engine.epsilon, r.n_blocks, r.checked, r.mismatches
    );
    if let Some(l) = r.first_mismatch {
        println!("first mismatch at lambda = {l}");
        return Err(Failure {
            code: EXIT_VERIFY,
            message: "engine disagrees with the integer square root".into(),
        });
    }
    Ok(())
}

fn edm(a: EdmArgs) -> Result<(), Failure> {
    let kind: StrategyKind = a.strategy.parse().map_err(Failure::config)?;
    let points = gen_points(a.n, a.features, a.seed).map_err(Failure::config)?;
    let mapper = AnyMapper::new(kind, a.n, a.rho).map_err(Failure::config)?;
    let engine = Engine::new(a.workers).map_err(Failure::config)?;
    let out = EdmBuffer::new(a.n, a.features);
    let stats = engine
        .launch(&mapper, Kernel::Edm { points: &points, out: &out })
        .map_err(Failure::config)?;
    let matrix = out.to_packed().map_err(Failure::config)?;
    write_pedm(&matrix, &a.out).map_err(Failure::config)?;
    eprintln!(
        "{kind}: {} blocks, {} discarded, {:.3} ms; wrote {}",
        stats.blocks_launched,
        stats.blocks_discarded,
        stats.wall_time_ns as f64 / 1e6,
        a.out.display()
    );
    if a.check && !matrix.bitwise_eq(&edm_reference(&points)) {
        return Err(Failure {
            code: EXIT_VERIFY,
            message: "EDM output differs from the oracle".into(),
        });
    }
    Ok(())
}
