//! Measured λ = 3 corrector: read the three bond stabilizers of a
//! four-qubit window and apply a table-driven DSWAP/DWALL word.
//!
//! Qubits 1..4 of a window starting at spin `w` are spins `w..w+3`, and
//! `s_i` is the stabilizer on bond `w + i - 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ChainState, Gate, GateKind};

/// `(s1, s2, s3)`, each `±1`.
pub type Syndrome = [i8; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CorrectionWord {
    Identity,
    Dwall123,
    Dwall234,
    /// DSWAP on qubits 1-3, then DWALL on qubits 2-4.
    Dswap123Dwall234,
}

impl CorrectionWord {
    /// Gates in application order for a window starting at spin `start`.
    pub fn gates(self, start: usize) -> Vec<Gate> {
        match self {
            CorrectionWord::Identity => vec![],
            CorrectionWord::Dwall123 => vec![Gate::on_triple(GateKind::Dwall, start)],
            CorrectionWord::Dwall234 => vec![Gate::on_triple(GateKind::Dwall, start + 1)],
            CorrectionWord::Dswap123Dwall234 => vec![
                Gate::on_triple(GateKind::Dswap, start),
                Gate::on_triple(GateKind::Dwall, start + 1),
            ],
        }
    }
}

impl fmt::Display for CorrectionWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorrectionWord::Identity => "I",
            CorrectionWord::Dwall123 => "DWALL_123",
            CorrectionWord::Dwall234 => "DWALL_234",
            CorrectionWord::Dswap123Dwall234 => "DSWAP_123 DWALL_234",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyndromeTable {
    rows: [(Syndrome, CorrectionWord); 8],
}

impl Default for SyndromeTable {
    fn default() -> Self {
        use CorrectionWord::*;
        SyndromeTable {
            rows: [
                ([1, 1, 1], Identity),
                ([1, 1, -1], Identity),
                ([1, -1, 1], Identity),
                ([1, -1, -1], Dwall234),
                ([-1, 1, 1], Identity),
                ([-1, 1, -1], Dswap123Dwall234),
                ([-1, -1, 1], Dwall123),
                ([-1, -1, -1], Identity),
            ],
        }
    }
}

impl SyndromeTable {
    pub fn rows(&self) -> &[(Syndrome, CorrectionWord); 8] {
        &self.rows
    }

    pub fn lookup(&self, syndrome: Syndrome) -> Option<CorrectionWord> {
        self.rows
            .iter()
            .find(|(s, _)| *s == syndrome)
            .map(|&(_, w)| w)
    }
}

fn check_window(state: &ChainState, start: usize) -> Result<()> {
    let len = state.len();
    if len < 4 {
        return Err(Error::InvalidSize(len));
    }
    if start >= len {
        return Err(Error::OutOfRange { index: start, len });
    }
    Ok(())
}

/// Reads the window's three stabilizers without touching the state.
pub fn measure_window(state: &ChainState, start: usize) -> Result<Syndrome> {
    check_window(state, start)?;
    let s = |k: usize| if state.wall(start + k) { -1 } else { 1 };
    Ok([s(0), s(1), s(2)])
}

/// Measures the window, applies the table's word in place and returns it.
pub fn apply_correction(state: &mut ChainState, start: usize, table: &SyndromeTable) -> Result<CorrectionWord> {
    let word = table
        .lookup(measure_window(state, start)?)
        .expect("table covers every syndrome");
    for gate in word.gates(start) {
        let len = state.len();
        state.apply_gate(Gate::new(gate.kind, gate.site % len))?;
    }
    Ok(word)
}

/// Corrected copy of `state` using the standard table.
pub fn correct_window(state: &ChainState, start: usize) -> Result<ChainState> {
    let mut out = state.clone();
    apply_correction(&mut out, start, &SyndromeTable::default())?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Spin;

    fn with_walls(len: usize, walls: &[usize]) -> ChainState {
        let mut spins = vec![Spin::Up; len];
        let mut s = Spin::Up;
        for (i, spin) in spins.iter_mut().enumerate().skip(1) {
            if walls.contains(&(i - 1)) {
                s = s.flipped();
            }
            *spin = s;
        }
        let st = ChainState::from_spins(&spins).unwrap();
        assert_eq!(st.walls().iter().filter(|&&w| w).count(), walls.len());
        st
    }

    #[test]
    fn measurements() {
        let st = with_walls(8, &[]);
        assert_eq!(measure_window(&st, 2).unwrap(), [1, 1, 1]);
        let st = with_walls(8, &[3, 4]);
        assert_eq!(measure_window(&st, 2).unwrap(), [1, -1, -1]);
        let st = with_walls(8, &[2, 6]);
        assert_eq!(measure_window(&st, 2).unwrap(), [-1, 1, 1]);
        assert!(measure_window(&st, 8).is_err());
        assert!(measure_window(&ChainState::uniform(3, Spin::Up).unwrap(), 0).is_err());
    }

    #[test]
    fn printed_order_of_row_six_is_required() {
        let st = with_walls(8, &[2, 4]);
        let fixed = correct_window(&st, 2).unwrap();
        assert_eq!(fixed.wall_count(), 0);
        // The opposite order leaves the pair apart.
        let mut rev = st.clone();
        rev.apply_gate(Gate::on_triple(GateKind::Dwall, 3)).unwrap();
        rev.apply_gate(Gate::on_triple(GateKind::Dswap, 2)).unwrap();
        assert_eq!(rev.wall_count(), 2);
    }
}
