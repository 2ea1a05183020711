//! Benchmark sweeps.
//!
//! For each `N`, every requested strategy (plus a second, independently
//! timed BB series used as a noise control) is launched `repetitions`
//! times. Repetitions are interleaved across series, with the starting
//! series rotated each round, so slow drift on the machine hits every
//! series alike. `I_measured` is the BB median over the series median,
//! both taken from the same group.
//!
//! Small launches are too short to time on their own. A repetition
//! therefore repeats the launch until it has run for at least
//! `min_rep_time` and reports the mean per launch.
//!
//! BB and the control share a slot: their launches alternate one by one
//! in ABBA order, so both see the same machine state. A repetition of the
//! pair runs whole ABBA cycles for at least [`PAIR_MIN_TIME`]: with two
//! short launches each, one stall is enough to push the control well away
//! from 1.

use std::sync::atomic::AtomicU64;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use trigrid_core::edm::{edm_reference, gen_points, PackedEdm, PointSet};
use trigrid_core::kernel::KernelSpec;
use trigrid_core::{AnyMapper, Error as CoreError, StrategyKind};

use crate::exec::{DispatchStats, EdmBuffer, Engine, ExecError, Kernel};

const MAX_INNER: u32 = 10_000;

/// Shortest repetition of the BB/control pair.
pub const PAIR_MIN_TIME: Duration = Duration::from_millis(300);

/// Series label of the BB noise control.
pub const CONTROL_LABEL: &str = "bb-control";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no strategies selected")]
    NoStrategies,
    #[error("empty N sweep")]
    EmptySweep,
    #[error("N must be positive")]
    ZeroElements,
    #[error("rho must be positive")]
    ZeroRho,
    #[error("at least one repetition is required")]
    ZeroRepetitions,
    #[error("beta, tau and n must be positive (got beta={beta}, tau={tau}, n={n})")]
    ModelDomain { beta: f64, tau: f64, n: u64 },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

/// One timed repetition of one series. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub strategy: String,
    #[serde(rename = "N")]
    pub n: u32,
    pub rho: u32,
    pub d: u32,
    pub kernel: String,
    pub repetition: u32,
    pub wall_time_ns: u64,
    pub blocks_launched: u64,
    pub blocks_discarded: u64,
    pub threads_discarded: u64,
    #[serde(rename = "I_measured")]
    pub i_measured: Option<f64>,
    /// Oracle comparison of the EDM output; empty when not checked.
    pub verified: Option<bool>,
}

/// A strategy/N pair that could not be run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedCase {
    pub strategy: StrategyKind,
    pub n: u32,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub records: Vec<BenchRecord>,
    pub skipped: Vec<SkippedCase>,
}

impl SuiteReport {
    /// False if any checked output differed from the oracle.
    pub fn all_verified(&self) -> bool {
        self.records.iter().all(|r| r.verified != Some(false))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub strategies: Vec<StrategyKind>,
    pub n_list: Vec<u32>,
    pub rho: u32,
    pub kernel: KernelSpec,
    pub repetitions: u32,
    /// 0 means one per core.
    pub workers: usize,
    pub seed: u64,
    /// EDM outputs are checked against the oracle up to this `N`.
    pub verify_cap: u32,
    /// Adds the [`CONTROL_LABEL`] series when BB is selected. Off by
    /// default; the CLI turns it on.
    pub control: bool,
    pub min_rep_time: Duration,
}

impl BenchConfig {
    pub fn new(strategies: Vec<StrategyKind>, n_list: Vec<u32>, kernel: KernelSpec) -> Self {
        Self {
            strategies,
            n_list,
            rho: 16,
            kernel,
            repetitions: 5,
            workers: 0,
            seed: 42,
            verify_cap: 1024,
            control: false,
            min_rep_time: Duration::from_millis(5),
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.strategies.is_empty() {
            return Err(BenchError::NoStrategies);
        }
        if self.n_list.is_empty() {
            return Err(BenchError::EmptySweep);
        }
        if self.n_list.contains(&0) {
            return Err(BenchError::ZeroElements);
        }
        if self.rho == 0 {
            return Err(BenchError::ZeroRho);
        }
        if self.repetitions == 0 {
            return Err(BenchError::ZeroRepetitions);
        }
        if let KernelSpec::Edm { features } = self.kernel {
            KernelSpec::edm(features)?;
        }
        Ok(())
    }

    fn with_control(&self) -> bool {
        self.control && self.strategies.contains(&StrategyKind::Bb)
    }
}

/// `N = start, start + step, ..., <= end`.
pub fn n_sweep(start: u32, end: u32, step: u32) -> Vec<u32> {
    if step == 0 || start > end {
        return Vec::new();
    }
    (start..=end).step_by(step as usize).collect()
}

/// Modeled improvement of a strategy whose per-block cost is `tau` over BB
/// with per-block cost `beta`: `2 beta n^2 / (tau n^2 + tau n)`.
pub fn improvement_model(beta: f64, tau: f64, n: u64) -> Result<f64, BenchError> {
    if !(beta > 0.0 && tau > 0.0 && n >= 1 && beta.is_finite() && tau.is_finite()) {
        return Err(BenchError::ModelDomain { beta, tau, n });
    }
    let n = n as f64;
    Ok(2.0 * beta * n * n / (tau * n * n + tau * n))
}

pub fn median(values: &mut [u64]) -> Option<u64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]).div_ceil(2)
    })
}

struct Series {
    label: String,
    mapper: AnyMapper,
    bb: bool,
    /// Launches per repetition.
    inner: u32,
}

/// Series timed together in one round.
enum Slot {
    Single(usize),
    /// Launches alternate between the two.
    Pair(usize, usize),
}

impl Slot {
    fn members(&self) -> Vec<usize> {
        match *self {
            Slot::Single(a) => vec![a],
            Slot::Pair(a, b) => vec![a, b],
        }
    }
}

struct Workload {
    points: Option<PointSet>,
    reference: Option<PackedEdm>,
    /// One output per member of a slot, so a paired series cannot fill in
    /// cells its partner missed.
    outs: Vec<EdmBuffer>,
    sink: AtomicU64,
}

impl Workload {
    fn new(cfg: &BenchConfig, n: u32) -> Result<Self, BenchError> {
        let (points, reference, outs) = match cfg.kernel {
            KernelSpec::Dummy => (None, None, Vec::new()),
            KernelSpec::Edm { features } => {
                let points = gen_points(n, features, cfg.seed)?;
                let reference = (n <= cfg.verify_cap).then(|| edm_reference(&points));
                let outs = (0..2).map(|_| EdmBuffer::new(n, features)).collect();
                (Some(points), reference, outs)
            }
        };
        Ok(Self {
            points,
            reference,
            outs,
            sink: AtomicU64::new(0),
        })
    }

    fn kernel(&self, member: usize) -> Kernel<'_> {
        match (&self.points, self.outs.get(member)) {
            (Some(points), Some(out)) => Kernel::Edm { points, out },
            _ => Kernel::Dummy(&self.sink),
        }
    }

    /// Runs `inner` launches of every member, alternating between members
    /// launch by launch and reversing the order every other launch. `flip`
    /// reverses the first launch. Several members keep going in whole ABBA
    /// cycles until [`PAIR_MIN_TIME`] has passed. Returns the stats of each
    /// member's last launch with the time averaged over all of its launches.
    fn run(
        &mut self,
        engine: &Engine,
        members: &[&Series],
        flip: bool,
    ) -> Result<Vec<(DispatchStats, Option<bool>)>, BenchError> {
        for out in &mut self.outs {
            out.clear();
        }
        let inner = members.iter().map(|s| s.inner).max().unwrap_or(1);
        let pair = members.len() > 1;
        let mut totals = vec![0u64; members.len()];
        let mut stats = vec![DispatchStats::default(); members.len()];
        let mut order: Vec<usize> = (0..members.len()).collect();
        if flip {
            order.reverse();
        }
        let start = Instant::now();
        let mut launches = 0u32;
        loop {
            for &m in &order {
                stats[m] = engine.launch_any(&members[m].mapper, self.kernel(m))?;
                totals[m] += stats[m].wall_time_ns;
            }
            order.reverse();
            launches += 1;
            let cycle_done = !pair || launches % 2 == 0;
            let long_enough = !pair || start.elapsed() >= PAIR_MIN_TIME || launches >= MAX_INNER;
            if launches >= inner && cycle_done && long_enough {
                break;
            }
        }
        let inner = launches;
        let mut results = Vec::with_capacity(members.len());
        for (m, mut st) in stats.into_iter().enumerate() {
            st.wall_time_ns = (totals[m] / inner as u64).max(1);
            let verified = match (&self.reference, self.outs.get(m)) {
                (Some(reference), Some(out)) => Some(out.to_packed()?.bitwise_eq(reference)),
                _ => None,
            };
            results.push((st, verified));
        }
        Ok(results)
    }
}

pub fn run_suite(cfg: &BenchConfig) -> Result<SuiteReport, BenchError> {
    run_suite_with_progress(cfg, |_| {})
}

/// Like [`run_suite`], calling `progress` with each finished `N` group.
pub fn run_suite_with_progress<F>(cfg: &BenchConfig, mut progress: F) -> Result<SuiteReport, BenchError>
where
    F: FnMut(&[BenchRecord]),
{
    cfg.validate()?;
    let engine = Engine::new(cfg.workers)?;
    let mut report = SuiteReport::default();
    let mut prev_fastest = None;

    for &n in &cfg.n_list {
        let mut series = Vec::new();
        for &kind in &cfg.strategies {
            match AnyMapper::new(kind, n, cfg.rho) {
                Ok(mapper) => series.push(Series {
                    label: kind.as_str().to_owned(),
                    mapper,
                    bb: kind == StrategyKind::Bb,
                    inner: 1,
                }),
                Err(e) => report.skipped.push(SkippedCase {
                    strategy: kind,
                    n,
                    reason: skip_reason(kind, n, cfg.rho, &e),
                }),
            }
        }
        let bb_idx = series.iter().position(|s| s.bb);
        if let (true, Some(_)) = (cfg.with_control(), bb_idx) {
            series.push(Series {
                label: CONTROL_LABEL.to_owned(),
                mapper: AnyMapper::new(StrategyKind::Bb, n, cfg.rho)?,
                bb: false,
                inner: 1,
            });
        }
        if series.is_empty() {
            continue;
        }

        let mut work = Workload::new(cfg, n)?;
        // Launch time grows with N^2; once the fastest series of the last
        // group predicts launches far above the minimum, warming up is
        // pointless and one launch per repetition is enough.
        let min_ns = cfg.min_rep_time.as_nanos() as f64;
        let long = prev_fastest.is_some_and(|(pn, t): (u32, u64)| {
            t as f64 * (n as f64 / pn as f64).powi(2) >= 20.0 * min_ns
        });
        if !long {
            calibrate(&engine, &mut work, &mut series, cfg.min_rep_time)?;
        }

        let control_idx = series.iter().position(|s| s.label == CONTROL_LABEL);
        let slots: Vec<Slot> = series
            .iter()
            .enumerate()
            .filter_map(|(idx, _)| match (bb_idx, control_idx) {
                (Some(bb), Some(ctl)) if idx == bb => Some(Slot::Pair(bb, ctl)),
                (_, Some(ctl)) if idx == ctl => None,
                _ => Some(Slot::Single(idx)),
            })
            .collect();

        let first = report.records.len();
        let mut times = vec![Vec::with_capacity(cfg.repetitions as usize); series.len()];
        for rep in 0..cfg.repetitions {
            for off in 0..slots.len() {
                let members = slots[(off + rep as usize) % slots.len()].members();
                let group: Vec<&Series> = members.iter().map(|&m| &series[m]).collect();
                let results = work.run(&engine, &group, rep % 2 == 1)?;
                for (&idx, (stats, verified)) in members.iter().zip(results) {
                    times[idx].push(stats.wall_time_ns);
                    report.records.push(BenchRecord {
                        strategy: series[idx].label.clone(),
                        n,
                        rho: cfg.rho,
                        d: cfg.kernel.features(),
                        kernel: cfg.kernel.name().to_owned(),
                        repetition: rep,
                        wall_time_ns: stats.wall_time_ns,
                        blocks_launched: stats.blocks_launched,
                        blocks_discarded: stats.blocks_discarded,
                        threads_discarded: stats.threads_discarded,
                        i_measured: None,
                        verified,
                    });
                }
            }
        }

        let medians: Vec<u64> = times.iter_mut().map(|t| median(t).unwrap_or(1).max(1)).collect();
        prev_fastest = medians.iter().min().map(|&t| (n, t));
        if let Some(bb) = bb_idx {
            let base = medians[bb] as f64;
            for r in &mut report.records[first..] {
                let idx = series.iter().position(|s| s.label == r.strategy).expect("known series");
                r.i_measured = Some(base / medians[idx] as f64);
            }
        }
        progress(&report.records[first..]);
    }
    Ok(report)
}

/// One untimed launch per series, which also warms caches, then sets the
/// repeat count so a repetition lasts at least `min_time`.
fn calibrate(engine: &Engine, work: &mut Workload, series: &mut [Series], min_time: Duration) -> Result<(), BenchError> {
    let min_ns = min_time.as_nanos() as u64;
    for s in series.iter_mut() {
        let start = Instant::now();
        let _ = engine.launch_any(&s.mapper, work.kernel(0))?;
        let once = (start.elapsed().as_nanos() as u64).max(1);
        s.inner = min_ns.div_ceil(once).clamp(1, MAX_INNER as u64) as u32;
    }
    // Same repeat count everywhere, so every series is timed the same way.
    let inner = series.iter().map(|s| s.inner).max().unwrap_or(1);
    for s in series.iter_mut() {
        s.inner = inner;
    }
    Ok(())
}

fn skip_reason(kind: StrategyKind, n: u32, rho: u32, e: &CoreError) -> String {
    match e {
        CoreError::NotRecursive { .. } => format!("not m·2ᵏ (N = {n} has no N = m·2^k with k >= 1 and rho = {rho} dividing m)"),
        other => format!("{kind} cannot run at N = {n}: {other}"),
    }
}
