//! Bath transition rates and the catalog of enabled stochastic events.
//!
//! Every bath event flips exactly one spin. Which of the three channels it
//! belongs to depends only on the two dual sites that spin touches: both
//! empty is a pair creation, both occupied an annihilation, one of each a
//! hop. The catalog is keyed by dual pair `b` (spin `b + 1`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::ChainState;

/// Bath rates for the three channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub gamma_zero: f64,
}

impl RateModel {
    pub fn new(gamma_plus: f64, gamma_minus: f64, gamma_zero: f64) -> Result<Self> {
        let r = RateModel {
            gamma_plus,
            gamma_minus,
            gamma_zero,
        };
        r.validate()?;
        Ok(r)
    }

    /// Rates with an Arrhenius creation rate `γ₋ exp(-activation / T)`.
    ///
    /// `activation = 1` reproduces the `e^{Δ/T}` background scale used for
    /// the protocol-off Ising lifetime at unit coupling.
    pub fn boltzmann(temperature: f64, activation: f64, gamma_minus: f64, gamma_zero: f64) -> Result<Self> {
        if !(temperature > 0.0) || !activation.is_finite() {
            return Err(Error::Domain(format!(
                "temperature {temperature} / activation {activation}"
            )));
        }
        Self::new(gamma_minus * (-activation / temperature).exp(), gamma_minus, gamma_zero)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_plus", self.gamma_plus),
            ("gamma_minus", self.gamma_minus),
            ("gamma_zero", self.gamma_zero),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidRate(format!("{name} = {v}")));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        RateModel {
            gamma_plus: self.gamma_plus * factor,
            gamma_minus: self.gamma_minus * factor,
            gamma_zero: self.gamma_zero * factor,
        }
    }
}

/// Markovian spectral bath `γ(ω) = ξ |ωⁿ / (1 − e^{−βω})|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBath {
    pub xi: f64,
    pub exponent: u32,
    pub temperature: f64,
    /// Energy of one adjacent wall pair; `4Δ` for a single flipped spin.
    pub pair_energy: f64,
}

impl SpectralBath {
    pub fn new(xi: f64, exponent: u32, temperature: f64) -> Self {
        SpectralBath {
            xi,
            exponent,
            temperature,
            pair_energy: 4.0,
        }
    }

    pub fn with_pair_energy(mut self, pair_energy: f64) -> Self {
        self.pair_energy = pair_energy;
        self
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    /// Rate for a transition that emits energy `omega` into the bath.
    pub fn gamma_of_omega(&self, omega: f64) -> Result<f64> {
        let beta = self.beta();
        if !(beta > 0.0) || !beta.is_finite() || !self.xi.is_finite() || !omega.is_finite() {
            return Err(Error::Domain(format!(
                "xi={}, T={}, omega={omega}",
                self.xi, self.temperature
            )));
        }
        if self.exponent == 0 {
            return Err(Error::Domain("bath exponent must be >= 1".into()));
        }
        if omega == 0.0 {
            // ω/(1 − e^{−βω}) → 1/β; higher powers of ω vanish.
            return Ok(if self.exponent == 1 {
                self.xi * self.temperature
            } else {
                0.0
            });
        }
        let denom = -(-beta * omega).exp_m1();
        Ok(self.xi * (omega.powi(self.exponent as i32) / denom).abs())
    }

    /// Annihilation releases the pair energy, creation absorbs it.
    pub fn rates(&self) -> Result<RateModel> {
        RateModel::new(
            self.gamma_of_omega(-self.pair_energy)?,
            self.gamma_of_omega(self.pair_energy)?,
            self.gamma_of_omega(0.0)?,
        )
    }
}

/// Convenience wrapper for [`SpectralBath::rates`].
pub fn rates_from_spectral(bath: &SpectralBath) -> Result<RateModel> {
    bath.rates()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Create,
    Annihilate,
    Hop,
}

/// A bath event on dual pair `pair`, i.e. a flip of spin `pair + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BathEvent {
    pub kind: EventKind,
    pub pair: usize,
}

impl BathEvent {
    /// Source and destination dual sites of a hop in `state`.
    pub fn hop_endpoints(&self, state: &ChainState) -> Option<(usize, usize)> {
        if self.kind != EventKind::Hop {
            return None;
        }
        let next = (self.pair + 1) % state.len();
        if state.wall(self.pair) {
            Some((self.pair, next))
        } else {
            Some((next, self.pair))
        }
    }
}

pub fn classify(occupancy: u8) -> EventKind {
    match occupancy {
        0 => EventKind::Create,
        2 => EventKind::Annihilate,
        _ => EventKind::Hop,
    }
}

/// Set of small integers with O(1) insert, remove and indexed access.
#[derive(Debug, Clone, Default)]
struct IndexedSet {
    items: Vec<u32>,
    slot: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl IndexedSet {
    fn with_universe(n: usize) -> Self {
        IndexedSet {
            items: Vec::with_capacity(n),
            slot: vec![ABSENT; n],
        }
    }

    fn insert(&mut self, x: usize) {
        if self.slot[x] == ABSENT {
            self.slot[x] = self.items.len() as u32;
            self.items.push(x as u32);
        }
    }

    fn remove(&mut self, x: usize) {
        let s = self.slot[x];
        if s == ABSENT {
            return;
        }
        let last = self.items.pop().unwrap();
        if last as usize != x {
            self.items[s as usize] = last;
            self.slot[last as usize] = s;
        }
        self.slot[x] = ABSENT;
    }

    fn len(&self) -> usize {
        self.items.len()
    }

    fn get(&self, i: usize) -> usize {
        self.items[i] as usize
    }

    fn sorted(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.items.iter().map(|&x| x as usize).collect();
        v.sort_unstable();
        v
    }
}

/// Enabled bath events for one chain configuration.
#[derive(Debug, Clone)]
pub struct EventCatalog {
    rates: RateModel,
    creations: IndexedSet,
    annihilations: IndexedSet,
    hops: IndexedSet,
    kind_of: Vec<EventKind>,
}

impl EventCatalog {
    pub fn build(state: &ChainState, rates: RateModel) -> Self {
        let len = state.len();
        let mut cat = EventCatalog {
            rates,
            creations: IndexedSet::with_universe(len),
            annihilations: IndexedSet::with_universe(len),
            hops: IndexedSet::with_universe(len),
            kind_of: vec![EventKind::Create; len],
        };
        for b in 0..len {
            let kind = classify(state.pair_occupancy(b));
            cat.kind_of[b] = kind;
            cat.set_mut(kind).insert(b);
        }
        cat
    }

    fn set_mut(&mut self, kind: EventKind) -> &mut IndexedSet {
        match kind {
            EventKind::Create => &mut self.creations,
            EventKind::Annihilate => &mut self.annihilations,
            EventKind::Hop => &mut self.hops,
        }
    }

    fn set(&self, kind: EventKind) -> &IndexedSet {
        match kind {
            EventKind::Create => &self.creations,
            EventKind::Annihilate => &self.annihilations,
            EventKind::Hop => &self.hops,
        }
    }

    pub fn rates(&self) -> RateModel {
        self.rates
    }

    pub fn rate_of(&self, kind: EventKind) -> f64 {
        match kind {
            EventKind::Create => self.rates.gamma_plus,
            EventKind::Annihilate => self.rates.gamma_minus,
            EventKind::Hop => self.rates.gamma_zero,
        }
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.set(kind).len()
    }

    /// Sorted dual pairs currently enabled for `kind`.
    pub fn events(&self, kind: EventKind) -> Vec<usize> {
        self.set(kind).sorted()
    }

    pub fn total_rate(&self) -> f64 {
        self.creations.len() as f64 * self.rates.gamma_plus
            + self.annihilations.len() as f64 * self.rates.gamma_minus
            + self.hops.len() as f64 * self.rates.gamma_zero
    }

    /// Re-classifies the three pairs touched by a flip of spin `spin`.
    pub fn update_after_flip(&mut self, state: &ChainState, spin: usize) {
        let len = state.len();
        for b in [(spin + len - 2) % len, (spin + len - 1) % len, spin % len] {
            let kind = classify(state.pair_occupancy(b));
            let old = self.kind_of[b];
            if kind != old {
                self.set_mut(old).remove(b);
                self.set_mut(kind).insert(b);
                self.kind_of[b] = kind;
            }
        }
    }

    /// Picks an event given `u` uniform in `[0, total_rate)`.
    pub fn select(&self, mut u: f64) -> Option<BathEvent> {
        let mut last = None;
        for kind in [EventKind::Annihilate, EventKind::Hop, EventKind::Create] {
            let set = self.set(kind);
            let rate = self.rate_of(kind);
            if set.len() == 0 || rate <= 0.0 {
                continue;
            }
            let weight = set.len() as f64 * rate;
            if u < weight {
                let i = ((u / rate) as usize).min(set.len() - 1);
                return Some(BathEvent {
                    kind,
                    pair: set.get(i),
                });
            }
            u -= weight;
            last = Some((kind, set.len() - 1));
        }
        // Rounding at the top of the range lands on the last enabled event.
        last.map(|(kind, i)| BathEvent {
            kind,
            pair: self.set(kind).get(i),
        })
    }

    /// True when both catalogs enumerate the same events.
    pub fn same_events(&self, other: &EventCatalog) -> bool {
        [EventKind::Create, EventKind::Annihilate, EventKind::Hop]
            .iter()
            .all(|&k| self.events(k) == other.events(k))
    }
}

/// Enabled events of `state`, as a freshly built catalog.
pub fn enumerate_events(state: &ChainState, rates: RateModel) -> EventCatalog {
    EventCatalog::build(state, rates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Gate, GateKind, Spin};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn ohmic_zero_frequency_limit() {
        let bath = SpectralBath::new(1.0, 1, 0.1);
        let exact = bath.gamma_of_omega(0.0).unwrap();
        assert_eq!(exact, 0.1);
        // Oracle: the formula evaluated just off zero.
        let left = bath.gamma_of_omega(-1e-8).unwrap();
        let right = bath.gamma_of_omega(1e-8).unwrap();
        assert!(rel(left, exact) < 1e-6 && rel(right, exact) < 1e-6, "{left} {right}");
    }

    #[test]
    fn superohmic_vanishes_at_zero() {
        let bath = SpectralBath::new(1.0, 2, 0.3);
        assert_eq!(bath.gamma_of_omega(0.0).unwrap(), 0.0);
        assert!(bath.gamma_of_omega(1e-6).unwrap() < 1e-5);
    }

    #[test]
    fn detailed_balance_ratio() {
        let bath = SpectralBath::new(1.0, 1, 0.5);
        let up = bath.gamma_of_omega(4.0).unwrap();
        let down = bath.gamma_of_omega(-4.0).unwrap();
        assert!(rel(up / down, 8f64.exp()) < 1e-12);
    }

    #[test]
    fn gamma_rejects_bad_inputs() {
        assert!(SpectralBath::new(1.0, 1, 0.0).gamma_of_omega(1.0).is_err());
        assert!(SpectralBath::new(1.0, 1, 1.0).gamma_of_omega(f64::NAN).is_err());
        assert!(SpectralBath::new(f64::INFINITY, 1, 1.0).gamma_of_omega(1.0).is_err());
    }

    #[test]
    fn spectral_rates() {
        let r = SpectralBath::new(1.0, 1, 1.0).rates().unwrap();
        assert!(rel(r.gamma_plus / r.gamma_minus, (-4f64).exp()) < 1e-12);
        let hot = SpectralBath::new(1.0, 1, 1e9).rates().unwrap();
        assert!(rel(hot.gamma_plus / hot.gamma_minus, 1.0) < 1e-6);
        let cold = SpectralBath::new(1.0, 1, 0.07).rates().unwrap();
        assert!(rel(cold.gamma_zero, 0.07) < 1e-15);
        assert!(cold.gamma_minus > cold.gamma_zero && cold.gamma_zero > cold.gamma_plus);
    }

    #[test]
    fn rate_model_validation() {
        assert!(RateModel::new(-1.0, 1.0, 0.0).is_err());
        assert!(RateModel::new(0.0, f64::NAN, 0.0).is_err());
        let r = RateModel::boltzmann(0.07, 1.0, 1.0, 7e-4).unwrap();
        assert!(rel(r.gamma_plus, (-1.0f64 / 0.07).exp()) < 1e-12);
    }

    fn walls_state(len: usize, walls: &[usize]) -> ChainState {
        let mut spins = vec![Spin::Up; len];
        for i in 1..len {
            spins[i] = if walls.contains(&(i - 1)) { spins[i - 1].flipped() } else { spins[i - 1] };
        }
        ChainState::from_spins(&spins).unwrap()
    }

    #[test]
    fn ground_state_catalog() {
        let rates = RateModel::new(0.1, 1.0, 0.5).unwrap();
        let cat = enumerate_events(&ChainState::uniform(8, Spin::Up).unwrap(), rates);
        assert_eq!(cat.count(EventKind::Create), 8);
        assert_eq!(cat.count(EventKind::Annihilate), 0);
        assert_eq!(cat.count(EventKind::Hop), 0);
        assert!((cat.total_rate() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn adjacent_pair_catalog() {
        let state = walls_state(8, &[3, 4]);
        let cat = enumerate_events(&state, RateModel::new(0.1, 1.0, 0.5).unwrap());
        assert_eq!(cat.events(EventKind::Annihilate), vec![3]);
        assert_eq!(cat.events(EventKind::Hop), vec![2, 4]);
        assert_eq!(cat.count(EventKind::Create), 5);
        let hops: Vec<_> = cat
            .events(EventKind::Hop)
            .into_iter()
            .map(|p| BathEvent { kind: EventKind::Hop, pair: p }.hop_endpoints(&state).unwrap())
            .collect();
        assert_eq!(hops, vec![(3, 2), (4, 5)]);
        // Hand count cross-checked against a brute-force classification.
        let brute: Vec<usize> = (0..8).filter(|&b| state.pair_occupancy(b) == 1).collect();
        assert_eq!(brute, cat.events(EventKind::Hop));
    }

    #[test]
    fn select_respects_weights() {
        let state = walls_state(8, &[3, 4]);
        let cat = enumerate_events(&state, RateModel::new(0.1, 1.0, 0.5).unwrap());
        // Order: annihilations [0,1), hops [1,2), creations [2,2.5).
        assert_eq!(cat.select(0.5).unwrap().kind, EventKind::Annihilate);
        assert_eq!(cat.select(1.2).unwrap(), BathEvent { kind: EventKind::Hop, pair: cat.set(EventKind::Hop).get(0) });
        assert_eq!(cat.select(2.49).unwrap().kind, EventKind::Create);
        assert_eq!(cat.select(2.5 + 1e-12).unwrap().kind, EventKind::Create);
        let off = enumerate_events(&state, RateModel::new(0.0, 0.0, 0.0).unwrap());
        assert_eq!(off.select(0.0), None);
    }

    #[test]
    fn incremental_catalog_matches_rebuild() {
        let rates = RateModel::new(0.3, 1.0, 0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let kinds = [GateKind::Dswap, GateKind::Dwall, GateKind::Translate, GateKind::Create, GateKind::Annihilate];
        for len in [3usize, 4, 5, 8, 17, 32] {
            let mut state = ChainState::uniform(len, Spin::Up).unwrap();
            let mut cat = EventCatalog::build(&state, rates);
            for _ in 0..100_000 / 6 {
                let b = rng.random_range(0..len);
                let gate = Gate::new(kinds[rng.random_range(0..kinds.len())], b);
                if let Ok(true) = state.apply_gate(gate) {
                    cat.update_after_flip(&state, b + 1);
                }
                let fresh = EventCatalog::build(&state, rates);
                assert!(cat.same_events(&fresh));
                assert_eq!(cat.total_rate(), fresh.total_rate());
            }
        }
    }

    #[test]
    fn counts_partition_the_ring() {
        for mask in 0u64..1 << 10 {
            let s = ChainState::from_mask(10, mask).unwrap();
            let cat = EventCatalog::build(&s, RateModel::new(1.0, 1.0, 1.0).unwrap());
            let (c, a, h) = (cat.count(EventKind::Create), cat.count(EventKind::Annihilate), cat.count(EventKind::Hop));
            assert_eq!(c + a + h, 10);
            // Every wall belongs to two pairs.
            assert_eq!(2 * a + h, 2 * s.wall_count());
        }
    }
}
