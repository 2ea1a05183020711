//! Exhaustive coverage and exactness checks behind `trigrid verify` and
//! `trigrid exactness`.

use trigrid_core::fastmath::SqrtEngine;
use trigrid_core::strategy::{
    dispatch_sequential, ltm_row, BbMapper, LtmMapper, RbMapper, RecMapper, UtmMapper,
};
use trigrid_core::tri::{tri_count, Diagonal};
use trigrid_core::{Error as CoreError, GridMapper, StrategyKind};

/// Outcome of running one grid through the sequential dispatcher.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    pub strategy: StrategyKind,
    pub n_elems: u32,
    pub rho: u32,
    /// Extra visits of in-domain cells.
    pub duplicates: u64,
    /// In-domain cells never visited.
    pub misses: u64,
    /// Visits to cells outside the domain.
    pub strays: u64,
    pub threads_run: u64,
}

impl CoverageReport {
    pub fn is_exact(&self) -> bool {
        self.duplicates == 0 && self.misses == 0 && self.strays == 0
    }
}

/// Counts visits per cell of the full `N x N` square.
pub fn check_coverage<M: GridMapper + ?Sized>(mapper: &M) -> CoverageReport {
    let n = mapper.n_elems() as usize;
    let domain = mapper.domain();
    let mut hits = vec![0u16; n * n];
    let mut strays = 0u64;
    let tally = dispatch_sequential(mapper, |c| {
        let (i, j) = (c.i as usize, c.j as usize);
        if i < n && j < n {
            hits[i * n + j] = hits[i * n + j].saturating_add(1);
        } else {
            strays += 1;
        }
    });
    let (mut duplicates, mut misses) = (0, 0);
    for i in 0..n {
        for j in 0..n {
            let h = hits[i * n + j] as u64;
            if domain.contains(i as u32, j as u32) {
                duplicates += h.saturating_sub(1);
                misses += (h == 0) as u64;
            } else {
                strays += h;
            }
        }
    }
    CoverageReport {
        strategy: mapper.grid().strategy,
        n_elems: n as u32,
        rho: mapper.grid().rho,
        duplicates,
        misses,
        strays,
        threads_run: tally.threads_run,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifySummary {
    pub cases: u64,
    pub failures: Vec<CoverageReport>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn record(&mut self, r: CoverageReport) {
        self.cases += 1;
        if !r.is_exact() {
            self.failures.push(r);
        }
    }
}

/// Every strategy at every size up to `n_max`:
///
/// - BB and LTM at `rho = 1` with `N = n`, and at `rho = 4` with a ragged
///   last block row (`N = 4n - n mod 4`, still `n` blocks).
/// - UTM and RB per thread with `N = n` at `rho = 1` and `rho = 16`.
/// - REC over every `(m, k)` with `m * 2^k <= 2 n_max`, at `rho = 1` and
///   every `rho = 4` that divides `m`.
pub fn verify_suite(strategies: &[StrategyKind], n_max: u32) -> Result<VerifySummary, CoreError> {
    let mut summary = VerifySummary::default();
    for &kind in strategies {
        match kind {
            StrategyKind::Bb | StrategyKind::LtmX | StrategyKind::LtmN | StrategyKind::LtmR => {
                for n in 1..=n_max {
                    for (big_n, rho) in [(n, 1), (4 * n - n % 4, 4)] {
                        let r = match kind.ltm_engine() {
                            Some(engine) => check_coverage(&LtmMapper::new(big_n, rho, engine)?),
                            None => check_coverage(&BbMapper::new(big_n, rho)?),
                        };
                        summary.record(r);
                    }
                }
            }
            StrategyKind::Utm => {
                for n in 1..=n_max {
                    for rho in [1, 16] {
                        summary.record(check_coverage(&UtmMapper::new(n, rho, SqrtEngine::newton())?));
                    }
                }
            }
            StrategyKind::Rb => {
                for n in 2..=n_max {
                    for rho in [1, 16] {
                        summary.record(check_coverage(&RbMapper::new(n, rho)?));
                    }
                }
            }
            StrategyKind::Rec => {
                let cap = 2 * n_max;
                for k in 1..=cap.max(2).ilog2() {
                    for m in 1..=(cap >> k) {
                        for rho in [1, 4] {
                            if m % rho == 0 {
                                summary.record(check_coverage(&RecMapper::new(m << k, m, k, rho)?));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactnessReport {
    pub engine: SqrtEngine,
    pub n_blocks: u32,
    pub checked: u64,
    pub mismatches: u64,
    pub first_mismatch: Option<u64>,
}

impl ExactnessReport {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

/// Compares the unrepaired row of every `lambda` of an `n_blocks`-row
/// triangle (diagonal included) with the integer square-root row.
pub fn exactness_sweep(engine: SqrtEngine, n_blocks: u32) -> ExactnessReport {
    let exact = SqrtEngine::exact();
    let checked = tri_count(n_blocks as u64, Diagonal::Included);
    let mut mismatches = 0;
    let mut first_mismatch = None;
    for lambda in 0..checked {
        if ltm_row(lambda, engine, Diagonal::Included) != ltm_row(lambda, exact, Diagonal::Included) {
            mismatches += 1;
            first_mismatch.get_or_insert(lambda);
        }
    }
    ExactnessReport {
        engine,
        n_blocks,
        checked,
        mismatches,
        first_mismatch,
    }
}
