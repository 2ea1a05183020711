//! End-to-end acceptance checks. Runs without the test harness so every
//! criterion prints exactly one PASS/FAIL line, in order, and the timed
//! ones do not share the CPU with other tests.

use std::collections::{BTreeMap, BTreeSet};
use std::process::{Command, ExitCode};
use std::sync::atomic::AtomicU64;
use std::time::{Duration, Instant};

use trigrid::bench::{improvement_model, median, CONTROL_LABEL};
use trigrid::exec::{count_wasted, EdmBuffer, Engine, Kernel};
use trigrid::report::read_csv;
use trigrid::verify::{exactness_sweep, verify_suite};
use trigrid_core::edm::{edm_reference, gen_points, PackedEdm};
use trigrid_core::tri::{grid_side_balanced, tri_count, Diagonal};
use trigrid_core::{AnyMapper, SqrtEngine, StrategyKind};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bijection() -> Outcome {
    let start = Instant::now();
    let s = verify_suite(&StrategyKind::ALL, 256).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(s.passed(), || format!("{} of {} grids not exact: {:?}", s.failures.len(), s.cases, s.failures.first()))?;
    ensure(took < Duration::from_secs(60), || format!("took {took:.1?}"))?;
    Ok(format!("{} grids exact in {took:.1?}", s.cases))
}

fn ltm_exactness() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for engine in [SqrtEngine::newton(), SqrtEngine::reciprocal()] {
        let r = exactness_sweep(engine, 1920);
        ensure(r.checked == 1_844_160, || format!("checked {} indices", r.checked))?;
        ensure(r.passed(), || {
            format!("{:?}: {} mismatches, first at {:?}", engine.variant, r.mismatches, r.first_mismatch)
        })?;
        parts.push(format!("{:?} 0/{}", engine.variant, r.checked));
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(30), || format!("took {took:.1?}"))?;
    Ok(format!("{} in {took:.1?}", parts.join(", ")))
}

fn run_edm(engine: &Engine, kind: StrategyKind, n: u32, d: u32) -> Result<PackedEdm, String> {
    let points = gen_points(n, d, 42).map_err(|e| e.to_string())?;
    let mapper = AnyMapper::new(kind, n, 16).map_err(|e| format!("{kind} N={n}: {e}"))?;
    let out = EdmBuffer::new(n, d);
    engine
        .launch_any(&mapper, Kernel::Edm { points: &points, out: &out })
        .map_err(|e| e.to_string())?;
    out.to_packed().map_err(|e| e.to_string())
}

fn edm_oracle() -> Outcome {
    let engine = Engine::new(0).map_err(|e| e.to_string())?;
    let mut cases = 0;
    for n in [64, 256, 1024] {
        for d in 1..=4 {
            let reference = edm_reference(&gen_points(n, d, 42).map_err(|e| e.to_string())?);
            for kind in StrategyKind::ALL {
                let got = run_edm(&engine, kind, n, d)?;
                ensure(got.bitwise_eq(&reference), || format!("{kind} N={n} d={d} differs"))?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} strategy/N/d cases bitwise equal"))
}

fn waste() -> Outcome {
    let engine = Engine::new(0).map_err(|e| e.to_string())?;
    let sink = AtomicU64::new(0);
    let block_kinds = [StrategyKind::Bb, StrategyKind::LtmX, StrategyKind::LtmN, StrategyKind::LtmR];
    for n in 1..=256u32 {
        for (big_n, rho) in [(n, 1), (16 * n, 16), (16 * n - 5, 16)] {
            for kind in block_kinds {
                let m = AnyMapper::new(kind, big_n, rho).map_err(|e| e.to_string())?;
                let s = engine.launch_any(&m, Kernel::Dummy(&sink)).map_err(|e| e.to_string())?;
                let want = count_wasted(kind, n).map_err(|e| e.to_string())?;
                ensure(s.blocks_discarded == want, || {
                    format!("{kind} n={n} rho={rho}: measured {} vs closed form {want}", s.blocks_discarded)
                })?;
            }
        }
    }

    let n = 1920u32;
    let bb = count_wasted(StrategyKind::Bb, n).map_err(|e| e.to_string())?;
    let ltm = count_wasted(StrategyKind::LtmR, n).map_err(|e| e.to_string())?;
    ensure(bb == 1_842_240, || format!("BB waste {bb}"))?;
    let side = grid_side_balanced(n as u64);
    ensure(side == 1358 && ltm == side * side - tri_count(n as u64, Diagonal::Included), || {
        format!("LTM padding {ltm} on a {side}-wide grid")
    })?;
    ensure(ltm == 4, || format!("LTM padding {ltm}"))?;

    let mut measured = BTreeMap::new();
    for kind in [StrategyKind::Bb, StrategyKind::LtmR] {
        let m = AnyMapper::new(kind, 30720, 16).map_err(|e| e.to_string())?;
        let s = engine.launch_any(&m, Kernel::Dummy(&sink)).map_err(|e| e.to_string())?;
        measured.insert(kind, (s.blocks_launched, s.blocks_discarded));
    }
    ensure(measured[&StrategyKind::Bb] == (1920 * 1920, bb), || format!("BB at N=30720: {:?}", measured[&StrategyKind::Bb]))?;
    ensure(measured[&StrategyKind::LtmR] == (side * side, ltm), || {
        format!("LTM at N=30720: {:?}", measured[&StrategyKind::LtmR])
    })?;

    // Quadratic against at most linear padding.
    for n in [64u32, 256, 1024, 1920] {
        let b = count_wasted(StrategyKind::Bb, n).unwrap();
        let l = count_wasted(StrategyKind::LtmR, n).unwrap();
        let s = grid_side_balanced(n as u64);
        ensure(l <= 2 * s, || format!("LTM padding {l} at n={n}"))?;
        ensure(b == n as u64 * (n as u64 - 1) / 2, || format!("BB waste {b} at n={n}"))?;
    }
    Ok(format!("closed forms match launches for n <= 256; n=1920: BB {bb} vs LTM {ltm}"))
}

fn model() -> Outcome {
    let mut checked = 0;
    for step in 1..=300 {
        let k = 1.0 + 3.0 * step as f64 / 300.0;
        for n in [1u64, 10, 1_000, 1_000_000] {
            let i = improvement_model(1.0, k, n).map_err(|e| e.to_string())?;
            ensure(i > 0.0 && i < 2.0, || format!("I = {i} at k = {k}, n = {n}"))?;
            checked += 1;
        }
        let i = improvement_model(1.0, k, 1_000_000).unwrap();
        ensure((i - 2.0 / k).abs() < 1e-3, || format!("I = {i} vs 2/k = {} at k = {k}", 2.0 / k))?;
    }
    Ok(format!("{checked} grid points inside (0, 2), n = 10^6 within 1e-3 of 2/k"))
}

fn determinism() -> Outcome {
    let parallel = Engine::new(4).map_err(|e| e.to_string())?;
    let single = Engine::new(1).map_err(|e| e.to_string())?;
    for kind in StrategyKind::ALL {
        let a = run_edm(&parallel, kind, 1024, 4)?;
        let b = run_edm(&single, kind, 1024, 4)?;
        ensure(a.bitwise_eq(&b), || format!("{kind} differs between 4 workers and 1"))?;
    }
    Ok("4-worker and 1-worker outputs bitwise equal for all strategies".into())
}

fn dummy_sweep() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let csv = dir.path().join("sweep.csv");
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_trigrid"))
        .args(["bench", "--strategies", "all", "--kernel", "dummy"])
        .args(["--n-start", "1024", "--n-end", "30720", "--n-step", "1024"])
        .args(["--rho", "16", "--reps", "5", "--workers", "AUTO", "--seed", "42", "--out"])
        .arg(&csv)
        .output()
        .map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(out.status.success(), || {
        format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
    })?;
    ensure(took < Duration::from_secs(600), || format!("took {took:.0?}"))?;

    let records = read_csv(&csv).map_err(|e| e.to_string())?;
    let sweep: BTreeSet<u32> = (1..=30).map(|k| 1024 * k).collect();
    let mut series: BTreeMap<(u32, String), Vec<&trigrid::bench::BenchRecord>> = BTreeMap::new();
    for r in &records {
        series.entry((r.n, r.strategy.clone())).or_default().push(r);
    }
    let mut labels: Vec<String> = StrategyKind::ALL.iter().map(|k| k.as_str().to_owned()).collect();
    labels.push(CONTROL_LABEL.to_owned());
    let mut worst = 0.0f64;
    let mut off = Vec::new();
    for &n in &sweep {
        for label in &labels {
            let rows = series.get(&(n, label.clone())).map(Vec::as_slice).unwrap_or(&[]);
            ensure(rows.len() == 5, || format!("{label} at N={n}: {} rows", rows.len()))?;
            ensure(rows.iter().all(|r| r.i_measured.is_some_and(|i| i > 0.0)), || {
                format!("{label} at N={n}: I_measured missing")
            })?;
        }
        let rows = &series[&(n, CONTROL_LABEL.to_owned())];
        let i = rows[0].i_measured.unwrap();
        let mut bb: Vec<u64> = series[&(n, "bb".to_owned())].iter().map(|r| r.wall_time_ns).collect();
        let mut ctl: Vec<u64> = rows.iter().map(|r| r.wall_time_ns).collect();
        let recomputed = median(&mut bb).unwrap() as f64 / median(&mut ctl).unwrap() as f64;
        ensure((recomputed - i).abs() < 1e-9, || format!("control I at N={n} is {i}, recomputed {recomputed}"))?;
        worst = worst.max((i - 1.0).abs());
        if (i - 1.0).abs() > 0.10 {
            off.push(format!("N={n}: {i:.3}"));
        }
    }
    ensure(off.is_empty(), || format!("BB-vs-BB control outside 1.0 +- 0.10 at {}", off.join(", ")))?;
    Ok(format!(
        "{} rows in {took:.0?}; control worst |I - 1| = {worst:.3}",
        records.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("bijection suite", bijection),
        ("LTM exactness sweep", ltm_exactness),
        ("EDM oracle equivalence", edm_oracle),
        ("waste accounting", waste),
        ("improvement-factor model", model),
        ("determinism", determinism),
        ("dummy-kernel sweep via CLI", dummy_sweep),
    ];
    let mut failed = 0;
    for (idx, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", idx + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", idx + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
