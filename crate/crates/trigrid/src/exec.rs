//! Parallel block dispatch.
//!
//! Blocks are the unit of work stealing: each block runs all of its threads
//! sequentially inside one worker, so per-cell writes stay disjoint and the
//! measured time reflects per-block mapping cost. Passes run one after the
//! other and only the dispatch itself is timed.

use std::hint::black_box;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;
use trigrid_core::edm::{PackedEdm, PointSet};
use trigrid_core::kernel::{dummy_kernel, edm_cell};
use trigrid_core::strategy::{run_block, BlockTally};
use trigrid_core::tri::{grid_side_balanced, tri_count, Diagonal, TriCoord};
use trigrid_core::{AnyMapper, BlockCoord, GridMapper, StrategyKind};

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("could not start a pool of {workers} workers: {source}")]
    Pool {
        workers: usize,
        #[source]
        source: rayon::ThreadPoolBuildError,
    },
    #[error("output buffer holds {got} cells, the kernel needs {expected}")]
    OutputSize { expected: u64, got: u64 },
    #[error("point set has {got} points, the grid covers {expected}")]
    PointCount { expected: u32, got: u32 },
    #[error("output buffer holds {got} features, points have {expected}")]
    FeatureMismatch { expected: u32, got: u32 },
    #[error("no closed-form waste count for strategy {0}")]
    UnsupportedStrategy(StrategyKind),
    #[error("block count must be at least 1")]
    EmptyProblem,
    #[error(transparent)]
    Core(#[from] trigrid_core::Error),
}

pub type Result<T, E = ExecError> = std::result::Result<T, E>;

/// Result of one launch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DispatchStats {
    pub blocks_launched: u64,
    pub blocks_discarded: u64,
    pub threads_discarded: u64,
    /// Threads that executed the kernel body.
    pub threads_run: u64,
    /// Summed over passes.
    pub wall_time_ns: u64,
}

impl DispatchStats {
    pub fn wall_time(&self) -> Duration {
        Duration::from_nanos(self.wall_time_ns)
    }
}

/// Packed lower-triangle output of the EDM kernel, written concurrently.
/// Each cell holds the bits of an `f32`.
#[derive(Debug)]
pub struct EdmBuffer {
    n: u32,
    d: u32,
    cells: Vec<AtomicU32>,
}

impl EdmBuffer {
    pub fn new(n: u32, d: u32) -> Self {
        let len = tri_count(n as u64, Diagonal::Included) as usize;
        Self {
            n,
            d,
            cells: (0..len).map(|_| AtomicU32::new(0)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn clear(&mut self) {
        for c in &mut self.cells {
            *c.get_mut() = 0;
        }
    }

    #[inline(always)]
    fn store(&self, slot: usize, v: f32) {
        self.cells[slot].store(v.to_bits(), Ordering::Relaxed);
    }

    pub fn to_packed(&self) -> Result<PackedEdm> {
        let values = self
            .cells
            .iter()
            .map(|c| f32::from_bits(c.load(Ordering::Relaxed)))
            .collect();
        Ok(PackedEdm::from_values(self.n, self.d, values)?)
    }
}

/// Kernel body plus its output.
#[derive(Debug, Clone, Copy)]
pub enum Kernel<'a> {
    Dummy(&'a AtomicU64),
    Edm { points: &'a PointSet, out: &'a EdmBuffer },
}

/// A worker pool that launches grids.
pub struct Engine {
    pool: rayon::ThreadPool,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("workers", &self.workers()).finish()
    }
}

/// Blocks handed to a worker at a time. Keeps scheduling overhead below the
/// cost of a 16x16 block while leaving enough chunks to balance.
const MIN_CHUNK: usize = 64;

impl Engine {
    /// `workers == 0` picks one worker per available core.
    pub fn new(workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .thread_name(|i| format!("trigrid-worker-{i}"))
            .build()
            .map_err(|source| ExecError::Pool { workers, source })?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Runs every block of every pass of `mapper`'s grid.
    pub fn launch<M: GridMapper>(&self, mapper: &M, kernel: Kernel<'_>) -> Result<DispatchStats> {
        let fma = has_fma();
        match kernel {
            Kernel::Dummy(sink) => Ok(self.dispatch(mapper, |p, b| {
                let mut last = None;
                let tally = run_block_with(fma, mapper, p, b, |c| {
                    black_box(c.i + c.j);
                    last = Some(c);
                });
                if let Some(c) = last {
                    dummy_kernel(c, sink);
                }
                tally
            })),
            Kernel::Edm { points, out } => {
                let n = mapper.n_elems();
                if points.len() != n {
                    return Err(ExecError::PointCount {
                        expected: n,
                        got: points.len(),
                    });
                }
                let expected = tri_count(n as u64, Diagonal::Included);
                if out.len() as u64 != expected || out.n != n {
                    return Err(ExecError::OutputSize {
                        expected,
                        got: out.len() as u64,
                    });
                }
                if out.d != points.features() {
                    return Err(ExecError::FeatureMismatch {
                        expected: points.features(),
                        got: out.d,
                    });
                }
                Ok(self.dispatch(mapper, |p, b| {
                    run_block_with(fma, mapper, p, b, |c: TriCoord| {
                        let (slot, v) = edm_cell(points, c);
                        out.store(slot, v);
                    })
                }))
            }
        }
    }

    /// [`Engine::launch`] with the strategy resolved once per launch
    /// instead of once per block and thread.
    pub fn launch_any(&self, mapper: &AnyMapper, kernel: Kernel<'_>) -> Result<DispatchStats> {
        match mapper {
            AnyMapper::Bb(m) => self.launch(m, kernel),
            AnyMapper::Ltm(m) => self.launch(m, kernel),
            AnyMapper::Utm(m) => self.launch(m, kernel),
            AnyMapper::Rb(m) => self.launch(m, kernel),
            AnyMapper::Rec(m) => self.launch(m, kernel),
        }
    }

    fn dispatch<M, F>(&self, mapper: &M, block: F) -> DispatchStats
    where
        M: GridMapper,
        F: Fn(usize, BlockCoord) -> BlockTally + Sync,
    {
        let mut stats = DispatchStats::default();
        for (p, pass) in mapper.grid().passes.iter().enumerate() {
            let count = pass.block_count();
            let start = Instant::now();
            let tally = if self.workers() == 1 {
                // A lone worker would only add a thread handoff per pass.
                let mut t = BlockTally::default();
                for idx in 0..count {
                    t += block(p, pass.block_at(idx));
                }
                t
            } else {
                self.pool.install(|| {
                    (0..count as usize)
                        .into_par_iter()
                        .with_min_len(MIN_CHUNK)
                        .map(|idx| block(p, pass.block_at(idx as u64)))
                        .reduce(BlockTally::default, |mut a, b| {
                            a += b;
                            a
                        })
                })
            };
            stats.wall_time_ns += start.elapsed().as_nanos() as u64;
            stats.blocks_launched += tally.blocks_launched;
            stats.blocks_discarded += tally.blocks_discarded;
            stats.threads_discarded += tally.threads_discarded;
            stats.threads_run += tally.threads_run;
        }
        stats
    }
}

fn has_fma() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::is_x86_feature_detected!("fma") && std::is_x86_feature_detected!("avx2")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

/// [`run_block`], compiled with FMA and AVX2 enabled when `fma` is set.
/// Fused multiply-adds round once either way, so results do not change;
/// the square-root engines stop paying for a library call and per-thread
/// mapping runs can use vector lanes.
#[inline(always)]
fn run_block_with<M, F>(fma: bool, mapper: &M, pass: usize, b: BlockCoord, body: F) -> BlockTally
where
    M: GridMapper,
    F: FnMut(TriCoord),
{
    #[cfg(target_arch = "x86_64")]
    if fma {
        // SAFETY: `fma` is only set when the CPU reports the feature.
        return unsafe { run_block_fma(mapper, pass, b, body) };
    }
    let _ = fma;
    run_block(mapper, pass, b, body)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
fn run_block_fma<M, F>(mapper: &M, pass: usize, b: BlockCoord, body: F) -> BlockTally
where
    M: GridMapper,
    F: FnMut(TriCoord),
{
    run_block(mapper, pass, b, body)
}

/// Closed-form count of wasted blocks for an `n x n` block problem: the
/// blocks above the diagonal for BB, the grid padding for LTM.
pub fn count_wasted(strategy: StrategyKind, n: u32) -> Result<u64> {
    if n == 0 {
        return Err(ExecError::EmptyProblem);
    }
    let n = n as u64;
    match strategy {
        StrategyKind::Bb => Ok(tri_count(n, Diagonal::Excluded)),
        StrategyKind::LtmX | StrategyKind::LtmN | StrategyKind::LtmR => {
            let side = grid_side_balanced(n);
            Ok(side * side - tri_count(n, Diagonal::Included))
        }
        other => Err(ExecError::UnsupportedStrategy(other)),
    }
}

/// Thread waste of LTM's diagonal blocks, in block equivalents: each of the
/// `n` diagonal blocks idles just under half its threads.
pub fn ltm_diagonal_waste(n: u32) -> f64 {
    n as f64 / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use trigrid_core::strategy::{BbMapper, LtmMapper, RecMapper};
    use trigrid_core::SqrtEngine;

    #[test]
    fn launch_examples() {
        let e = Engine::new(2).unwrap();
        let sink = AtomicU64::new(0);
        let bb = BbMapper::new(4, 1).unwrap();
        let s = e.launch(&bb, Kernel::Dummy(&sink)).unwrap();
        assert_eq!((s.blocks_launched, s.blocks_discarded), (16, 6));
        assert_eq!(s.threads_run, 10);

        let ltm = LtmMapper::new(4, 1, SqrtEngine::reciprocal()).unwrap();
        let s = e.launch(&ltm, Kernel::Dummy(&sink)).unwrap();
        assert_eq!((s.blocks_launched, s.blocks_discarded), (16, 6));

        let rec = RecMapper::new(64, 16, 2, 16).unwrap();
        let s = e.launch(&rec, Kernel::Dummy(&sink)).unwrap();
        assert_eq!(s.threads_discarded, 4 * (16 * 15 / 2));
        assert_eq!(s.threads_run, tri_count(64, Diagonal::Included));
    }

    #[test]
    fn dummy_sink_is_written() {
        let e = Engine::new(1).unwrap();
        let sink = AtomicU64::new(u64::MAX);
        let m = AnyMapper::new(StrategyKind::Rb, 8, 4).unwrap();
        e.launch(&m, Kernel::Dummy(&sink)).unwrap();
        assert!(sink.load(Ordering::Relaxed) <= 14);
    }

    #[test]
    fn output_size_is_checked_before_dispatch() {
        let e = Engine::new(1).unwrap();
        let points = trigrid_core::edm::gen_points(32, 2, 1).unwrap();
        let m = AnyMapper::new(StrategyKind::Bb, 32, 16).unwrap();
        let wrong = EdmBuffer::new(31, 2);
        assert!(matches!(
            e.launch(&m, Kernel::Edm { points: &points, out: &wrong }),
            Err(ExecError::OutputSize { expected: 528, got: 496 })
        ));
        let other_points = trigrid_core::edm::gen_points(16, 2, 1).unwrap();
        let out = EdmBuffer::new(32, 2);
        assert!(matches!(
            e.launch(&m, Kernel::Edm { points: &other_points, out: &out }),
            Err(ExecError::PointCount { .. })
        ));
        let out3 = EdmBuffer::new(32, 3);
        assert!(matches!(
            e.launch(&m, Kernel::Edm { points: &points, out: &out3 }),
            Err(ExecError::FeatureMismatch { .. })
        ));
    }

    #[test]
    fn count_wasted_examples() {
        assert_eq!(count_wasted(StrategyKind::Bb, 1920).unwrap(), 1_842_240);
        assert_eq!(count_wasted(StrategyKind::Bb, 1).unwrap(), 0);
        // 1358^2 - 1920*1921/2
        assert_eq!(count_wasted(StrategyKind::LtmR, 1920).unwrap(), 4);
        assert_eq!(count_wasted(StrategyKind::LtmN, 4).unwrap(), 6);
        assert!(matches!(
            count_wasted(StrategyKind::Rb, 4),
            Err(ExecError::UnsupportedStrategy(StrategyKind::Rb))
        ));
        assert!(count_wasted(StrategyKind::Bb, 0).is_err());
        assert_eq!(ltm_diagonal_waste(1920), 960.0);
    }
}
