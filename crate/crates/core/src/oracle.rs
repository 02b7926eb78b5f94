//! Exact ground truth for small chains: the full single-flip generator over
//! all `2^L` configurations and dense linear solves on it.
//!
//! States are spin masks (bit `i` set when spin `i` is down), matching
//! [`ChainState::from_mask`].

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::bath::{classify, EventKind, RateModel};
use crate::engine::Absorbing;
use crate::error::{Error, Result};
use crate::lattice::ChainState;

/// Largest chain the oracle will enumerate.
pub const MAX_ORACLE_LEN: usize = 12;
/// Normwise backward error every solve must reach.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub target: usize,
    pub rate: f64,
    pub kind: EventKind,
    /// The flipped spin.
    pub spin: usize,
}

/// Sparse CTMC generator of the protocol-off dynamics.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    len: usize,
    rates: RateModel,
    rows: Vec<Vec<Transition>>,
}

impl GeneratorMatrix {
    pub fn build(len: usize, rates: RateModel) -> Result<Self> {
        if !(3..=MAX_ORACLE_LEN).contains(&len) {
            return Err(Error::InvalidSize(len));
        }
        rates.validate()?;
        let n = 1usize << len;
        let mut rows = Vec::with_capacity(n);
        for x in 0..n {
            let state = ChainState::from_mask(len, x as u64)?;
            let mut row = Vec::new();
            for spin in 0..len {
                let pair = (spin + len - 1) % len;
                let kind = classify(state.pair_occupancy(pair));
                let rate = match kind {
                    EventKind::Create => rates.gamma_plus,
                    EventKind::Annihilate => rates.gamma_minus,
                    EventKind::Hop => rates.gamma_zero,
                };
                if rate > 0.0 {
                    row.push(Transition {
                        target: x ^ (1 << spin),
                        rate,
                        kind,
                        spin,
                    });
                }
            }
            rows.push(row);
        }
        Ok(GeneratorMatrix { len, rates, rows })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rates(&self) -> RateModel {
        self.rates
    }

    pub fn state_count(&self) -> usize {
        self.rows.len()
    }

    pub fn transitions(&self, x: usize) -> &[Transition] {
        &self.rows[x]
    }

    /// Off-diagonal rate `q(x -> y)`.
    pub fn rate(&self, x: usize, y: usize) -> f64 {
        self.rows[x]
            .iter()
            .filter(|t| t.target == y)
            .map(|t| t.rate)
            .sum()
    }

    /// Diagonal entry, minus the total escape rate.
    pub fn diagonal(&self, x: usize) -> f64 {
        -self.rows[x].iter().map(|t| t.rate).sum::<f64>()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.state_count();
        let mut q = DMatrix::zeros(n, n);
        for x in 0..n {
            for t in &self.rows[x] {
                q[(x, t.target)] += t.rate;
            }
            q[(x, x)] = self.diagonal(x);
        }
        q
    }

    fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.state_count()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(x) = queue.pop_front() {
            for t in &self.rows[x] {
                if !seen[t.target] {
                    seen[t.target] = true;
                    queue.push_back(t.target);
                }
            }
        }
        seen
    }

    /// States from which some state in `targets` can be reached.
    fn reaching(&self, targets: &[bool]) -> Vec<bool> {
        let n = self.state_count();
        let mut reverse = vec![Vec::new(); n];
        for x in 0..n {
            for t in &self.rows[x] {
                reverse[t.target].push(x);
            }
        }
        let mut seen = targets.to_vec();
        let mut queue: VecDeque<usize> = (0..n).filter(|&x| targets[x]).collect();
        while let Some(y) = queue.pop_front() {
            for &x in &reverse[y] {
                if !seen[x] {
                    seen[x] = true;
                    queue.push_back(x);
                }
            }
        }
        seen
    }
}

/// States satisfying `predicate` on a chain of `len` spins.
pub fn absorbing_set(len: usize, predicate: Absorbing) -> Result<Vec<usize>> {
    if !(3..=MAX_ORACLE_LEN).contains(&len) {
        return Err(Error::InvalidSize(len));
    }
    let mut out = Vec::new();
    for x in 0..1usize << len {
        if predicate.holds(&ChainState::from_mask(len, x as u64)?) {
            out.push(x);
        }
    }
    Ok(out)
}

/// Solves `a x = b` by LU with iterative refinement, enforcing
/// [`SOLVE_TOLERANCE`] on the normwise backward error.
fn solve_refined(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = a.clone().lu();
    let mut x = lu
        .solve(b)
        .ok_or_else(|| Error::Singular("LU factorization is singular".into()))?;
    let a_norm = a
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let b_norm = b.amax();
    let mut backward = f64::INFINITY;
    for _ in 0..8 {
        let r = b - a * &x;
        backward = r.amax() / (a_norm * x.amax() + b_norm);
        if backward <= SOLVE_TOLERANCE * 1e-3 {
            break;
        }
        match lu.solve(&r) {
            Some(dx) => x += dx,
            None => break,
        }
    }
    if !backward.is_finite() || backward > SOLVE_TOLERANCE || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(format!("residual {backward:e} above tolerance")));
    }
    Ok(x)
}

/// Expected hitting time of `absorbing` from `start`.
pub fn mfpt_exact(gen: &GeneratorMatrix, start: usize, absorbing: &[usize]) -> Result<f64> {
    let n = gen.state_count();
    if start >= n {
        return Err(Error::OutOfRange { index: start, len: n });
    }
    if absorbing.is_empty() {
        return Err(Error::InvalidConfig("absorbing set is empty".into()));
    }
    let mut target = vec![false; n];
    for &a in absorbing {
        if a >= n {
            return Err(Error::OutOfRange { index: a, len: n });
        }
        target[a] = true;
    }
    if target[start] {
        return Ok(0.0);
    }
    let reach = gen.reachable_from(start);
    let back = gen.reaching(&target);
    if let Some(x) = (0..n).find(|&x| reach[x] && !back[x]) {
        return Err(Error::Singular(format!(
            "state {x:#b} is reachable from the start but cannot reach the absorbing set"
        )));
    }
    let transient: Vec<usize> = (0..n).filter(|&x| reach[x] && !target[x]).collect();
    let mut index = vec![usize::MAX; n];
    for (i, &x) in transient.iter().enumerate() {
        index[x] = i;
    }
    let m = transient.len();
    let mut a = DMatrix::zeros(m, m);
    for (i, &x) in transient.iter().enumerate() {
        a[(i, i)] = -gen.diagonal(x);
        for t in gen.transitions(x) {
            if !target[t.target] {
                a[(i, index[t.target])] -= t.rate;
            }
        }
    }
    let times = solve_refined(&a, &DVector::from_element(m, 1.0))?;
    Ok(times[index[start]])
}

/// Mean time from all up to all down.
pub fn mfpt_all_up_to_all_down(gen: &GeneratorMatrix) -> Result<f64> {
    mfpt_exact(gen, 0, &[(1usize << gen.len()) - 1])
}

/// Solves `π Q = 0`, `Σ π = 1`.
pub fn stationary_distribution(gen: &GeneratorMatrix) -> Result<Vec<f64>> {
    let n = gen.state_count();
    let reach = gen.reachable_from(0);
    let mut origin = vec![false; n];
    origin[0] = true;
    let back = gen.reaching(&origin);
    if reach.iter().chain(back.iter()).any(|&r| !r) {
        return Err(Error::Reducible);
    }
    let mut a = gen.to_dense().transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = solve_refined(&a, &b)?;
    Ok(pi.iter().map(|&p| p.max(0.0)).collect())
}

/// `e^{-E/T} / Z` with `E = wall_energy · walls`.
pub fn boltzmann_distribution(len: usize, wall_energy: f64, temperature: f64) -> Result<Vec<f64>> {
    if !(3..=MAX_ORACLE_LEN).contains(&len) {
        return Err(Error::InvalidSize(len));
    }
    if !(temperature > 0.0) {
        return Err(Error::Domain(format!("temperature {temperature} must be positive")));
    }
    let mut w = Vec::with_capacity(1 << len);
    for x in 0..1usize << len {
        let walls = ChainState::from_mask(len, x as u64)?.wall_count();
        w.push((-wall_energy * walls as f64 / temperature).exp());
    }
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / z).collect())
}

/// Largest `|a - b| / b` over all entries.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::SpectralBath;

    #[test]
    fn rows_sum_to_zero() {
        let rates = RateModel::new(0.01, 1.0, 0.3).unwrap();
        let gen = GeneratorMatrix::build(5, rates).unwrap();
        let q = gen.to_dense();
        for r in q.row_iter() {
            assert!(r.sum().abs() < 1e-15);
        }
        assert!(q.iter().enumerate().all(|(k, &v)| k % 33 == 0 || v >= 0.0));
    }

    #[test]
    fn lone_pair_on_three_sites() {
        // One flipped spin: its two walls can only annihilate.
        let rates = RateModel::new(0.0, 1.0, 0.0).unwrap();
        let gen = GeneratorMatrix::build(3, rates).unwrap();
        let t = mfpt_exact(&gen, 0b010, &[0b000, 0b111]).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        assert_eq!(mfpt_exact(&gen, 0b111, &[0b000, 0b111]).unwrap(), 0.0);
    }

    #[test]
    fn unreachable_target_is_singular() {
        let rates = RateModel::new(0.0, 1.0, 0.5).unwrap();
        let gen = GeneratorMatrix::build(4, rates).unwrap();
        assert!(matches!(mfpt_all_up_to_all_down(&gen), Err(Error::Singular(_))));
        assert!(mfpt_exact(&gen, 0, &[]).is_err());
        assert!(GeneratorMatrix::build(13, rates).is_err());
    }

    #[test]
    fn reducible_chain_has_no_stationary_solve() {
        let rates = RateModel::new(0.0, 1.0, 0.5).unwrap();
        let gen = GeneratorMatrix::build(4, rates).unwrap();
        assert_eq!(stationary_distribution(&gen), Err(Error::Reducible));
    }

    #[test]
    fn infinite_temperature_is_uniform() {
        let rates = RateModel::new(0.7, 0.7, 0.7).unwrap();
        let gen = GeneratorMatrix::build(5, rates).unwrap();
        let pi = stationary_distribution(&gen).unwrap();
        assert!(pi.iter().all(|p| (p * 32.0 - 1.0).abs() < 1e-10));
    }

    #[test]
    fn spectral_rates_are_boltzmann() {
        let bath = SpectralBath::new(1.0, 1, 1.0);
        let gen = GeneratorMatrix::build(4, bath.rates().unwrap()).unwrap();
        let pi = stationary_distribution(&gen).unwrap();
        let boltz = boltzmann_distribution(4, bath.pair_energy / 2.0, 1.0).unwrap();
        assert!(max_relative_error(&pi, &boltz) < 1e-8);
    }
}
