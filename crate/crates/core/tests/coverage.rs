//! Every strategy must touch each cell of its domain exactly once.

use trigrid_core::strategy::{dispatch_sequential, BbMapper, LtmMapper, RbMapper, RecMapper, UtmMapper};
use trigrid_core::tri::{tri_count, tri_linear_index};
use trigrid_core::{AnyMapper, Diagonal, GridMapper, SqrtEngine, StrategyKind, TriCoord};

/// Visit counts per packed cell, plus anything that fell outside.
fn check_exactly_once<M: GridMapper>(mapper: &M) -> Result<u64, String> {
    let n = mapper.n_elems();
    let domain = mapper.domain();
    let mut hits = vec![0u8; tri_count(n as u64, Diagonal::Included) as usize];
    let mut stray: Option<TriCoord> = None;
    let tally = dispatch_sequential(mapper, |c| {
        if c.i >= n || !domain.contains(c.i, c.j) {
            stray.get_or_insert(c);
            return;
        }
        let at = tri_linear_index(c).unwrap().get() as usize;
        hits[at] = hits[at].saturating_add(1);
    });
    if let Some(c) = stray {
        return Err(format!("cell {c:?} outside the domain"));
    }
    for (at, &h) in hits.iter().enumerate() {
        let i = ((((8 * at as u64 + 1) as f64).sqrt() - 1.0) / 2.0) as u64;
        let on_diag = tri_count(i + 1, Diagonal::Included) - 1 == at as u64;
        let want = u8::from(domain == Diagonal::Included || !on_diag);
        if h != want {
            return Err(format!("packed cell {at} visited {h} times, expected {want}"));
        }
    }
    let expected = tri_count(n as u64, domain);
    if tally.threads_run != expected {
        return Err(format!("{} threads ran, expected {expected}", tally.threads_run));
    }
    Ok(tally.blocks_discarded)
}

#[test]
fn block_strategies_rho_one() {
    for n in 1..=128u32 {
        check_exactly_once(&BbMapper::new(n, 1).unwrap()).unwrap();
        for engine in [SqrtEngine::native(), SqrtEngine::newton(), SqrtEngine::reciprocal(), SqrtEngine::exact()] {
            check_exactly_once(&LtmMapper::new(n, 1, engine).unwrap()).unwrap();
        }
    }
}

#[test]
fn thread_strategies() {
    for n in 1..=128u32 {
        check_exactly_once(&UtmMapper::new(n, 4, SqrtEngine::newton()).unwrap()).unwrap();
        if n >= 2 {
            check_exactly_once(&RbMapper::new(n, 4).unwrap()).unwrap();
        }
    }
}

#[test]
fn ragged_sizes_with_wide_blocks() {
    for n in [1u32, 15, 16, 17, 31, 33, 100, 255, 257, 500] {
        for kind in [StrategyKind::Bb, StrategyKind::LtmX, StrategyKind::LtmN, StrategyKind::LtmR, StrategyKind::Utm] {
            check_exactly_once(&AnyMapper::new(kind, n, 16).unwrap())
                .unwrap_or_else(|e| panic!("{kind} n={n}: {e}"));
        }
        if n >= 2 {
            check_exactly_once(&AnyMapper::new(StrategyKind::Rb, n, 16).unwrap()).unwrap();
        }
    }
}

#[test]
fn rec_all_decompositions() {
    for rho in [1u32, 2, 4] {
        for k in 1..=6u32 {
            for m in (rho..=64).step_by(rho as usize) {
                let n = m << k;
                if n > 512 {
                    continue;
                }
                let mapper = RecMapper::new(n, m, k, rho).unwrap();
                assert_eq!(mapper.grid().passes.len(), k as usize + 1);
                check_exactly_once(&mapper).unwrap_or_else(|e| panic!("m={m} k={k} rho={rho}: {e}"));
            }
        }
    }
}

#[test]
fn rec_square_passes_never_filter() {
    use trigrid_core::strategy::{run_block, PassKind};
    let mapper = RecMapper::new(64, 16, 2, 16).unwrap();
    for (p, pass) in mapper.grid().passes.iter().enumerate() {
        let mut discarded = 0;
        for idx in 0..pass.block_count() {
            discarded += run_block(&mapper, p, pass.block_at(idx), |_| {}).threads_discarded;
        }
        match pass.kind {
            PassKind::RecSquares { .. } => assert_eq!(discarded, 0),
            PassKind::RecDiagonal { side } => assert_eq!(discarded, 4 * (side as u64) * (side as u64 - 1) / 2),
            PassKind::Full => unreachable!(),
        }
    }
}

#[test]
fn waste_closed_forms() {
    for n in 1..=64u32 {
        let bb = check_exactly_once(&BbMapper::new(n, 1).unwrap()).unwrap();
        assert_eq!(bb, tri_count(n as u64, Diagonal::Excluded));
        let ltm = LtmMapper::new(n, 1, SqrtEngine::reciprocal()).unwrap();
        let np = ltm.n_prime();
        assert_eq!(check_exactly_once(&ltm).unwrap(), np * np - tri_count(n as u64, Diagonal::Included));
    }
}
