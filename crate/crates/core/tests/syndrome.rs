use dswap_core::syndrome::{apply_correction, measure_window, CorrectionWord, SyndromeTable};
use dswap_core::ChainState;

fn window_walls(state: &ChainState, start: usize) -> usize {
    (0..3).filter(|&k| state.wall(start + k)).count()
}

#[test]
fn table_has_every_syndrome_once() {
    let table = SyndromeTable::default();
    let mut seen: Vec<_> = table.rows().iter().map(|r| r.0).collect();
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 8);
    assert_eq!(table.lookup([-1, 1, -1]), Some(CorrectionWord::Dswap123Dwall234));
}

// Every chain state and window position on small rings.
#[test]
fn exhaustive_windows() {
    let table = SyndromeTable::default();
    for len in 4..=10 {
        for mask in 0..1u64 << len {
            let state = ChainState::from_mask(len, mask).unwrap();
            for start in 0..len {
                let before = window_walls(&state, start);
                let syn = measure_window(&state, start).unwrap();
                let mut fixed = state.clone();
                let word = apply_correction(&mut fixed, start, &table).unwrap();
                assert_eq!(table.lookup(syn), Some(word));
                let after = window_walls(&fixed, start);
                // Walls outside the window are never touched.
                for b in 3..len {
                    assert_eq!(state.wall(start + b), fixed.wall(start + b));
                }
                if before == 2 {
                    assert_eq!(after, 0, "L={len} mask={mask:b} start={start}");
                } else {
                    assert_eq!(fixed, state);
                }
            }
        }
    }
}

// The sixteen spin patterns of one four-qubit window.
#[test]
fn sixteen_window_patterns() {
    let len = 4;
    let mut corrected = 0;
    for mask in 0..16u64 {
        let state = ChainState::from_mask(len, mask).unwrap();
        let mut fixed = state.clone();
        apply_correction(&mut fixed, 0, &SyndromeTable::default()).unwrap();
        if window_walls(&state, 0) == 2 {
            assert_eq!(window_walls(&fixed, 0), 0);
            corrected += 1;
        }
    }
    assert_eq!(corrected, 6);
}
