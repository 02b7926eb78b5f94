//! Periodic Ising chain and its dual (domain-wall) lattice.
//!
//! Dual site `b` sits on the bond between spins `b` and `b + 1 (mod L)`.
//! A gate "at `b`" acts on the dual pair `(b, b + 1)`, i.e. on the spins
//! `(b, b + 1, b + 2)`, and classically it can only ever flip the shared
//! spin `b + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A classical spin value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn flipped(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }

    /// The eigenvalue of `σ_z`: `+1` for up, `-1` for down.
    pub fn value(self) -> i8 {
        match self {
            Spin::Up => 1,
            Spin::Down => -1,
        }
    }
}

/// Wall occupation of every dual site for the given spin configuration.
pub fn walls_from_spins(spins: &[Spin]) -> Result<Vec<bool>> {
    let len = spins.len();
    if len < 3 {
        return Err(Error::InvalidSize(len));
    }
    Ok((0..len).map(|b| spins[b] != spins[(b + 1) % len]).collect())
}

/// Periodic spin chain together with its domain-wall view.
///
/// Both views are kept and updated incrementally; every mutation goes
/// through [`ChainState::flip_spin`] so the two can never disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    spins: Vec<Spin>,
    walls: Vec<bool>,
    wall_count: usize,
    down_count: usize,
    coupling: f64,
}

impl ChainState {
    /// Uniformly magnetized chain (a ground state) with unit coupling.
    pub fn uniform(len: usize, spin: Spin) -> Result<Self> {
        Self::from_spins(&vec![spin; len])
    }

    pub fn from_spins(spins: &[Spin]) -> Result<Self> {
        let walls = walls_from_spins(spins)?;
        let wall_count = walls.iter().filter(|&&w| w).count();
        let down_count = spins.iter().filter(|&&s| s == Spin::Down).count();
        Ok(ChainState {
            spins: spins.to_vec(),
            walls,
            wall_count,
            down_count,
            coupling: 1.0,
        })
    }

    /// Builds the chain from a bitmask where bit `i` set means spin `i` is down.
    pub fn from_mask(len: usize, mask: u64) -> Result<Self> {
        if len > 64 {
            return Err(Error::OutOfRange { index: len, len: 64 });
        }
        let spins: Vec<Spin> = (0..len)
            .map(|i| if mask >> i & 1 == 1 { Spin::Down } else { Spin::Up })
            .collect();
        Self::from_spins(&spins)
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    pub fn walls(&self) -> &[bool] {
        &self.walls
    }

    pub fn wall(&self, b: usize) -> bool {
        self.walls[b % self.walls.len()]
    }

    pub fn wall_count(&self) -> usize {
        self.wall_count
    }

    pub fn down_count(&self) -> usize {
        self.down_count
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// Bitmask of down spins (only meaningful for `len <= 64`).
    pub fn mask(&self) -> u64 {
        self.spins
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == Spin::Down)
            .fold(0u64, |m, (i, _)| m | 1 << i)
    }

    pub fn is_uniform(&self, spin: Spin) -> bool {
        match spin {
            Spin::Up => self.down_count == 0,
            Spin::Down => self.down_count == self.len(),
        }
    }

    /// Ising energy `-Δ Σ σ_i σ_{i+1}`, i.e. `-Δ L + 2 Δ (walls)`.
    pub fn energy(&self) -> f64 {
        let len = self.len() as f64;
        -self.coupling * len + 2.0 * self.coupling * self.wall_count as f64
    }

    /// Flips spin `i`, toggling dual sites `i - 1` and `i`.
    pub fn flip_spin(&mut self, i: usize) {
        let len = self.len();
        let i = i % len;
        let s = self.spins[i].flipped();
        self.spins[i] = s;
        if s == Spin::Down {
            self.down_count += 1;
        } else {
            self.down_count -= 1;
        }
        for b in [(i + len - 1) % len, i] {
            let w = !self.walls[b];
            self.walls[b] = w;
            if w {
                self.wall_count += 1;
            } else {
                self.wall_count -= 1;
            }
        }
    }

    /// Number of walls (0, 1 or 2) on the dual pair `(b, b + 1)`.
    pub fn pair_occupancy(&self, b: usize) -> u8 {
        let len = self.len();
        self.walls[b % len] as u8 + self.walls[(b + 1) % len] as u8
    }

    /// Applies `gate` and reports whether the configuration changed.
    ///
    /// `Create`, `Annihilate` and `Translate` are bath events and fail with
    /// [`Error::DisabledEvent`] when the pair does not enable them; `Dswap`
    /// and `Dwall` are unitaries and simply act as the identity instead.
    pub fn apply_gate(&mut self, gate: Gate) -> Result<bool> {
        let len = self.len();
        if gate.site >= len {
            return Err(Error::OutOfRange {
                index: gate.site,
                len,
            });
        }
        let occ = self.pair_occupancy(gate.site);
        let fire = match gate.kind {
            GateKind::Dswap => occ == 1,
            GateKind::Dwall => occ != 1,
            GateKind::Translate | GateKind::Create | GateKind::Annihilate => {
                let needed = match gate.kind {
                    GateKind::Translate => 1,
                    GateKind::Create => 0,
                    _ => 2,
                };
                if occ != needed {
                    return Err(Error::DisabledEvent {
                        kind: gate.kind.name(),
                        site: gate.site,
                    });
                }
                true
            }
        };
        if fire {
            self.flip_spin(gate.site + 1);
        }
        Ok(fire)
    }
}

/// The operators that act on a dual pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    /// Conditional swap: moves a lone wall across the pair.
    Dswap,
    /// Conditional pair flip: creates a pair on `00`, removes one on `11`.
    Dwall,
    /// Bath hop `T_b`.
    Translate,
    /// Bath pair creation `D†_b`.
    Create,
    /// Bath pair annihilation `D_b`.
    Annihilate,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::Dswap => "DSWAP",
            GateKind::Dwall => "DWALL",
            GateKind::Translate => "TRANSLATE",
            GateKind::Create => "CREATE",
            GateKind::Annihilate => "ANNIHILATE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    /// Dual site `b`; the gate acts on `(b, b + 1)`.
    pub site: usize,
}

impl Gate {
    pub fn new(kind: GateKind, site: usize) -> Self {
        Gate { kind, site }
    }

    /// Gate on the qubit triple `(q, q + 1, q + 2)`.
    pub fn on_triple(kind: GateKind, first_qubit: usize) -> Self {
        Gate {
            kind,
            site: first_qubit,
        }
    }
}
