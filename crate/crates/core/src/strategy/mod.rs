//! Grid-to-domain mapping strategies.
//!
//! Every strategy is a [`GridMapper`]: it owns a [`GridSpec`] describing the
//! launch geometry and decides, per block, whether the block is discarded,
//! covers a `rho x rho` tile of problem space starting at some origin, or
//! maps each thread individually. [`run_block`] turns that decision into the
//! sequence of covered cells; both the sequential visitor here and the
//! parallel engine in the `trigrid` crate are built on it.

use alloc::vec::Vec;
use core::fmt;
use core::ops::AddAssign;
use core::str::FromStr;

use crate::error::Result;
use crate::fastmath::SqrtEngine;
use crate::tri::{Diagonal, TriCoord};

mod bb;
mod ltm;
mod rb;
mod rec;
mod utm;

pub use bb::{bb_map, BbMapper};
pub use ltm::{ltm_block_to_lambda, ltm_map, ltm_row, repair_row, LtmMapper, LTM_VERIFIED_BLOCKS};
pub use rb::{rb_grid, rb_map, rb_rect, RbMapper, RbRect};
pub use rec::{rec_block_map, rec_decompose, rec_schedule, RecMapper};
pub use utm::{utm_map, utm_map_with, UpperPair, UtmMapper};

/// Strategy tag, as used on the command line and in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    Bb,
    LtmX,
    LtmN,
    LtmR,
    Utm,
    Rb,
    Rec,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 7] = [
        StrategyKind::Bb,
        StrategyKind::LtmX,
        StrategyKind::LtmN,
        StrategyKind::LtmR,
        StrategyKind::Utm,
        StrategyKind::Rb,
        StrategyKind::Rec,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Bb => "bb",
            StrategyKind::LtmX => "ltm-x",
            StrategyKind::LtmN => "ltm-n",
            StrategyKind::LtmR => "ltm-r",
            StrategyKind::Utm => "utm",
            StrategyKind::Rb => "rb",
            StrategyKind::Rec => "rec",
        }
    }

    /// Square-root engine for the LTM variants.
    pub fn ltm_engine(self) -> Option<SqrtEngine> {
        match self {
            StrategyKind::LtmX => Some(SqrtEngine::native()),
            StrategyKind::LtmN => Some(SqrtEngine::newton()),
            StrategyKind::LtmR => Some(SqrtEngine::reciprocal()),
            _ => None,
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownStrategy;

impl fmt::Display for UnknownStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("unknown strategy (expected one of bb, ltm-x, ltm-n, ltm-r, utm, rb, rec)")
    }
}

impl core::error::Error for UnknownStrategy {}

impl FromStr for StrategyKind {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, UnknownStrategy> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or(UnknownStrategy)
    }
}

/// What a pass of the grid is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassKind {
    Full,
    /// REC level `level` made of squares of side `side` elements.
    RecSquares { level: u32, side: u32 },
    /// REC's final pass over the diagonal triangles of side `side`.
    RecDiagonal { side: u32 },
}

/// One kernel launch: a `blocks_x x blocks_y` grid of `rho x rho` blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pass {
    pub blocks_x: u32,
    pub blocks_y: u32,
    pub kind: PassKind,
}

impl Pass {
    #[inline]
    pub fn block_count(&self) -> u64 {
        self.blocks_x as u64 * self.blocks_y as u64
    }

    /// Row-major block coordinate of linear block `idx` in this pass.
    #[inline]
    pub fn block_at(&self, idx: u64) -> BlockCoord {
        let bx = self.blocks_x as u64;
        BlockCoord {
            x: (idx % bx) as u32,
            y: (idx / bx) as u32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    pub strategy: StrategyKind,
    pub rho: u32,
    pub passes: Vec<Pass>,
}

impl GridSpec {
    pub fn blocks_launched(&self) -> u64 {
        self.passes.iter().map(Pass::block_count).sum()
    }

    pub fn threads_per_block(&self) -> u64 {
        self.rho as u64 * self.rho as u64
    }
}

/// Block coordinate in grid space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockCoord {
    pub x: u32,
    pub y: u32,
}

impl BlockCoord {
    #[inline]
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }
}

/// Thread coordinate inside a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ThreadCoord {
    pub x: u32,
    pub y: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapOutcome {
    Mapped(TriCoord),
    Discard,
}

impl MapOutcome {
    #[inline]
    pub fn mapped(self) -> Option<TriCoord> {
        match self {
            MapOutcome::Mapped(c) => Some(c),
            MapOutcome::Discard => None,
        }
    }
}

/// Block-level decision of a strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockTarget {
    /// The whole block returns immediately.
    Discard,
    /// The block covers cells `origin + (ty, tx)`. When `filter` is set some
    /// of them may fall outside the domain and each thread must check.
    Tile { origin: TriCoord, filter: bool },
    /// Threads are mapped one by one through [`GridMapper::map_thread`].
    PerThread,
}

pub trait GridMapper: Sync {
    fn grid(&self) -> &GridSpec;

    /// Elements per dimension, `N`.
    fn n_elems(&self) -> u32;

    /// Cells the strategy is meant to cover.
    #[inline]
    fn domain(&self) -> Diagonal {
        Diagonal::Included
    }

    fn map_block(&self, pass: usize, b: BlockCoord) -> BlockTarget;

    /// Only called for blocks that returned [`BlockTarget::PerThread`].
    fn map_thread(&self, _pass: usize, _b: BlockCoord, _t: ThreadCoord) -> Option<TriCoord> {
        None
    }

    /// Whether [`run_block`] should map threads through
    /// [`map_thread_run`](Self::map_thread_run).
    #[inline(always)]
    fn maps_thread_runs(&self) -> bool {
        false
    }

    /// Maps threads `first.x .. first.x + out.len()` of row `first.y`, with
    /// the same results as [`map_thread`](Self::map_thread) one by one.
    /// Strategies override it when a run of threads is cheaper to map
    /// together, as a warp would.
    #[inline(always)]
    fn map_thread_run(&self, pass: usize, b: BlockCoord, first: ThreadCoord, out: &mut [Option<TriCoord>]) {
        for (dx, slot) in (0..).zip(out.iter_mut()) {
            *slot = self.map_thread(pass, b, ThreadCoord { x: first.x + dx, y: first.y });
        }
    }
}

/// Threads mapped per [`GridMapper::map_thread_run`] call in [`run_block`].
pub const THREAD_RUN: usize = 16;

/// Counters for dispatched work.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BlockTally {
    pub blocks_launched: u64,
    pub blocks_discarded: u64,
    pub threads_discarded: u64,
    /// Threads that ran the kernel body.
    pub threads_run: u64,
}

impl AddAssign for BlockTally {
    fn add_assign(&mut self, o: Self) {
        self.blocks_launched += o.blocks_launched;
        self.blocks_discarded += o.blocks_discarded;
        self.threads_discarded += o.threads_discarded;
        self.threads_run += o.threads_run;
    }
}

/// Runs one block: maps it, then calls `body` once per covered cell in
/// thread order (`ty` major, `tx` minor).
#[inline(always)]
pub fn run_block<M, F>(mapper: &M, pass: usize, b: BlockCoord, mut body: F) -> BlockTally
where
    M: GridMapper + ?Sized,
    F: FnMut(TriCoord),
{
    let rho = mapper.grid().rho;
    let mut tally = BlockTally {
        blocks_launched: 1,
        ..BlockTally::default()
    };
    match mapper.map_block(pass, b) {
        BlockTarget::Discard => tally.blocks_discarded = 1,
        BlockTarget::Tile { origin, filter: false } => {
            for ty in 0..rho {
                for tx in 0..rho {
                    body(TriCoord::new(origin.i + ty, origin.j + tx));
                }
            }
            tally.threads_run = rho as u64 * rho as u64;
        }
        BlockTarget::Tile { origin, filter: true } => {
            let n = mapper.n_elems();
            let domain = mapper.domain();
            for ty in 0..rho {
                let i = origin.i + ty;
                for tx in 0..rho {
                    let j = origin.j + tx;
                    if i < n && domain.contains(i, j) {
                        body(TriCoord::new(i, j));
                        tally.threads_run += 1;
                    } else {
                        tally.threads_discarded += 1;
                    }
                }
            }
        }
        BlockTarget::PerThread if !mapper.maps_thread_runs() => {
            for ty in 0..rho {
                for tx in 0..rho {
                    match mapper.map_thread(pass, b, ThreadCoord { x: tx, y: ty }) {
                        Some(c) => {
                            body(c);
                            tally.threads_run += 1;
                        }
                        None => tally.threads_discarded += 1,
                    }
                }
            }
        }
        BlockTarget::PerThread => {
            let mut run = [None; THREAD_RUN];
            for ty in 0..rho {
                let mut tx = 0;
                while tx < rho {
                    let len = ((rho - tx) as usize).min(THREAD_RUN);
                    mapper.map_thread_run(pass, b, ThreadCoord { x: tx, y: ty }, &mut run[..len]);
                    for slot in &run[..len] {
                        match *slot {
                            Some(c) => {
                                body(c);
                                tally.threads_run += 1;
                            }
                            None => tally.threads_discarded += 1,
                        }
                    }
                    tx += len as u32;
                }
            }
        }
    }
    tally
}

/// Visits every block of every pass in order on the calling thread.
pub fn dispatch_sequential<M, F>(mapper: &M, mut body: F) -> BlockTally
where
    M: GridMapper + ?Sized,
    F: FnMut(TriCoord),
{
    let mut tally = BlockTally::default();
    for (p, pass) in mapper.grid().passes.iter().enumerate() {
        for idx in 0..pass.block_count() {
            tally += run_block(mapper, p, pass.block_at(idx), &mut body);
        }
    }
    tally
}

/// Any of the five strategies behind one statically dispatched type.
#[derive(Debug, Clone)]
pub enum AnyMapper {
    Bb(BbMapper),
    Ltm(LtmMapper),
    Utm(UtmMapper),
    Rb(RbMapper),
    Rec(RecMapper),
}

impl AnyMapper {
    /// Builds the mapper for `kind` over `n_elems` elements. REC picks the
    /// deepest valid recursion (see [`rec_decompose`]).
    pub fn new(kind: StrategyKind, n_elems: u32, rho: u32) -> Result<Self> {
        Ok(match kind {
            StrategyKind::Bb => AnyMapper::Bb(BbMapper::new(n_elems, rho)?),
            StrategyKind::LtmX | StrategyKind::LtmN | StrategyKind::LtmR => {
                let engine = kind.ltm_engine().expect("ltm kind");
                AnyMapper::Ltm(LtmMapper::new(n_elems, rho, engine)?)
            }
            StrategyKind::Utm => AnyMapper::Utm(UtmMapper::new(n_elems, rho, SqrtEngine::newton())?),
            StrategyKind::Rb => AnyMapper::Rb(RbMapper::new(n_elems, rho)?),
            StrategyKind::Rec => AnyMapper::Rec(RecMapper::auto(n_elems, rho)?),
        })
    }

    pub fn kind(&self) -> StrategyKind {
        self.grid().strategy
    }
}

macro_rules! delegate {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            AnyMapper::Bb($m) => $e,
            AnyMapper::Ltm($m) => $e,
            AnyMapper::Utm($m) => $e,
            AnyMapper::Rb($m) => $e,
            AnyMapper::Rec($m) => $e,
        }
    };
}

impl GridMapper for AnyMapper {
    #[inline]
    fn grid(&self) -> &GridSpec {
        delegate!(self, m => m.grid())
    }

    #[inline]
    fn n_elems(&self) -> u32 {
        delegate!(self, m => m.n_elems())
    }

    #[inline]
    fn domain(&self) -> Diagonal {
        delegate!(self, m => m.domain())
    }

    #[inline]
    fn map_block(&self, pass: usize, b: BlockCoord) -> BlockTarget {
        delegate!(self, m => m.map_block(pass, b))
    }

    #[inline]
    fn map_thread(&self, pass: usize, b: BlockCoord, t: ThreadCoord) -> Option<TriCoord> {
        delegate!(self, m => m.map_thread(pass, b, t))
    }

    #[inline]
    fn maps_thread_runs(&self) -> bool {
        delegate!(self, m => m.maps_thread_runs())
    }

    #[inline]
    fn map_thread_run(&self, pass: usize, b: BlockCoord, first: ThreadCoord, out: &mut [Option<TriCoord>]) {
        delegate!(self, m => m.map_thread_run(pass, b, first, out))
    }
}
