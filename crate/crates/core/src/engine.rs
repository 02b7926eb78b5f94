//! Hybrid event loop: Gillespie sampling of bath events raced against the
//! deterministic gate ticks of a protocol schedule.
//!
//! The next bath event is drawn from the current total rate. If it would
//! land before the next tick it is applied; otherwise the tick's gates are
//! applied and the bath clock is redrawn from the new configuration, which
//! is exact by memorylessness. With [`GateClock::Restart`] (the default) a
//! bath event also resets the wait for the next tick to a full `1/χ`. While
//! the chain has no walls every gate is the identity, so runs of idle
//! ticks are skipped in one step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::protocol_off_lifetime;
use crate::bath::{EventCatalog, EventKind, RateModel};
use crate::error::{Error, Result};
use crate::lattice::{ChainState, Spin};
use crate::protocol::ProtocolSchedule;
use crate::stats::{mean_and_stderr, neumaier_sum};

/// When a trial stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Absorbing {
    /// Every spin down.
    AllDown,
    /// Either ground state (no walls at all).
    NoWalls,
    /// Strictly more than half the spins down.
    MajorityDown,
}

impl Absorbing {
    pub fn holds(self, state: &ChainState) -> bool {
        match self {
            Absorbing::AllDown => state.down_count() == state.len(),
            Absorbing::NoWalls => state.wall_count() == 0,
            Absorbing::MajorityDown => 2 * state.down_count() > state.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    AllUp,
    Spins(Vec<Spin>),
}

/// How the gate clock reacts to bath events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateClock {
    /// Ticks every `1/χ` regardless of the bath.
    Periodic,
    /// Every bath event restarts the wait for the next gate, so a gate
    /// only fires after a quiet interval of `1/χ`. Each step is a fresh
    /// race between the bath and a full gate interval.
    #[default]
    Restart,
}

/// Everything that determines a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub len: usize,
    pub coupling: f64,
    pub rates: RateModel,
    pub schedule: Option<ProtocolSchedule>,
    #[serde(default)]
    pub clock: GateClock,
    pub initial: InitialState,
    pub absorbing: Absorbing,
    pub cutoff: f64,
    pub trials: usize,
    pub base_seed: u64,
}

/// Default cutoff as a multiple of the protocol-off lifetime estimate.
pub const DEFAULT_CUTOFF_FACTOR: f64 = 1e3;

impl SimConfig {
    /// Protocol-off configuration starting all up and absorbing all down.
    pub fn new(len: usize, rates: RateModel) -> Result<Self> {
        if len < 3 {
            return Err(Error::InvalidSize(len));
        }
        rates.validate()?;
        let estimate = protocol_off_lifetime(len, &rates);
        let cutoff = if estimate.is_finite() {
            DEFAULT_CUTOFF_FACTOR * estimate
        } else {
            f64::INFINITY
        };
        Ok(SimConfig {
            len,
            coupling: 1.0,
            rates,
            schedule: None,
            clock: GateClock::default(),
            initial: InitialState::AllUp,
            absorbing: Absorbing::AllDown,
            cutoff,
            trials: 400,
            base_seed: 0,
        })
    }

    pub fn with_schedule(mut self, schedule: ProtocolSchedule) -> Self {
        self.schedule = Some(schedule);
        self
    }

    pub fn with_clock(mut self, clock: GateClock) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    pub fn with_initial(mut self, initial: InitialState) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_absorbing(mut self, absorbing: Absorbing) -> Self {
        self.absorbing = absorbing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.rates.validate()?;
        if !(self.cutoff > 0.0) {
            return Err(Error::InvalidConfig(format!("cutoff {} must be positive", self.cutoff)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("need at least one trial".into()));
        }
        if let InitialState::Spins(s) = &self.initial {
            if s.len() != self.len {
                return Err(Error::InvalidConfig(format!(
                    "initial state has {} spins, L = {}",
                    s.len(),
                    self.len
                )));
            }
        }
        if let Some(s) = &self.schedule {
            if s.len != self.len {
                return Err(Error::InvalidConfig(format!(
                    "schedule built for L = {}, config has L = {}",
                    s.len, self.len
                )));
            }
        }
        Ok(())
    }

    fn initial_state(&self) -> Result<ChainState> {
        let s = match &self.initial {
            InitialState::AllUp => ChainState::uniform(self.len, Spin::Up)?,
            InitialState::Spins(spins) => ChainState::from_spins(spins)?,
        };
        Ok(s.with_coupling(self.coupling))
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrialResult {
    /// First-passage time, or the cutoff when `censored`.
    pub time: f64,
    pub censored: bool,
    pub creations: u64,
    pub annihilations: u64,
    pub hops: u64,
    /// Ticks elapsed, including idle ones skipped in the ground state.
    pub ticks: u64,
    pub gates_applied: u64,
    pub gates_changed: u64,
}

impl TrialResult {
    pub fn bath_events(&self) -> u64 {
        self.creations + self.annihilations + self.hops
    }
}

/// Generator for trial `trial` of a batch seeded with `base_seed`.
pub fn trial_rng(base_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(trial);
    rng
}

/// Largest tick count that still has an exact integer part in `f64`.
const EXACT_TICKS: f64 = 4_503_599_627_370_496.0;

/// Runs trial number `trial` of `config`. Deterministic in `(config, trial)`.
pub fn run_trial(config: &SimConfig, trial: u64) -> Result<TrialResult> {
    config.validate()?;
    let mut rng = trial_rng(config.base_seed, trial);
    let mut state = config.initial_state()?;
    let mut catalog = EventCatalog::build(&state, config.rates);
    let schedule = config.schedule.as_ref().filter(|s| s.fires());
    let cycle = schedule.map_or(1, |s| s.cycle_len());
    let interval = schedule.map_or(f64::INFINITY, |s| s.tick_interval());
    let mut to_tick = schedule.map_or(f64::INFINITY, |s| s.phase * interval);
    let mut pos = 0usize;
    let mut t = 0.0f64;
    let mut out = TrialResult::default();
    let mut events = 0u64;

    loop {
        if config.absorbing.holds(&state) {
            out.time = t;
            return Ok(out);
        }
        let rate = catalog.total_rate();
        let tau = if rate > 0.0 {
            rng.sample::<f64, _>(Exp1) / rate
        } else {
            f64::INFINITY
        };

        if let Some(schedule) = schedule {
            if !(tau < to_tick) && state.wall_count() > 0 {
                t += to_tick;
                if t >= config.cutoff {
                    break;
                }
                let before = state.wall_count();
                for &b in schedule.tick(pos) {
                    out.gates_applied += 1;
                    if state.pair_occupancy(b) == 1 {
                        state.flip_spin(b + 1);
                        catalog.update_after_flip(&state, b + 1);
                        out.gates_changed += 1;
                    }
                }
                debug_assert_eq!(state.wall_count(), before, "DSWAP changed the energy");
                out.ticks += 1;
                pos = (pos + 1) % cycle;
                to_tick = interval;
                continue;
            }
            if tau.is_finite() && !(tau < to_tick) {
                // Idle ticks: no walls, so every gate is the identity.
                let rest = tau - to_tick;
                let mut whole = (rest / interval).floor();
                let mut residual = rest - whole * interval;
                let skipped = if whole < EXACT_TICKS {
                    (whole as u64 % cycle as u64) as usize
                } else {
                    // Far beyond f64 resolution of t: draw the position and
                    // residual from their exact conditional laws instead.
                    let q = rate * interval;
                    let u: f64 = rng.random();
                    let j = ((-u * -(-q * cycle as f64).exp_m1()).ln_1p() / -q).floor();
                    let v: f64 = rng.random();
                    residual = -(-v * -(-q).exp_m1()).ln_1p() / rate;
                    whole = EXACT_TICKS;
                    (j.max(0.0) as usize).min(cycle - 1)
                };
                if !(residual < interval) || residual < 0.0 {
                    residual = residual.clamp(0.0, interval * (1.0 - f64::EPSILON));
                }
                out.ticks = out.ticks.saturating_add(1 + whole as u64);
                pos = (pos + 1 + skipped) % cycle;
                to_tick = interval - residual;
            } else {
                to_tick -= tau;
            }
        }

        if !tau.is_finite() {
            break;
        }
        t += tau;
        if t >= config.cutoff {
            break;
        }
        let u = rng.random::<f64>() * rate;
        let event = catalog
            .select(u)
            .expect("positive total rate implies an enabled event");
        match event.kind {
            EventKind::Create => out.creations += 1,
            EventKind::Annihilate => out.annihilations += 1,
            EventKind::Hop => out.hops += 1,
        }
        state.flip_spin(event.pair + 1);
        catalog.update_after_flip(&state, event.pair + 1);
        if config.clock == GateClock::Restart {
            to_tick = interval;
        }
        events += 1;
        if events % 1000 == 0 {
            debug_assert_eq!(state.wall_count() % 2, 0);
        }
    }
    out.time = config.cutoff;
    out.censored = true;
    Ok(out)
}

/// Aggregated first-passage statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
    pub censored_fraction: f64,
    /// Some trials hit the cutoff, so `mean` only bounds the lifetime from below.
    pub lower_bound_only: bool,
    pub creations: u64,
    pub annihilations: u64,
    pub hops: u64,
    pub gates_changed: u64,
}

impl LifetimeEstimate {
    pub fn from_trials(results: &[TrialResult]) -> Result<Self> {
        if results.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "{} trials; need at least 2",
                results.len()
            )));
        }
        let times: Vec<f64> = results.iter().map(|r| r.time).collect();
        let (mean, std_error) = mean_and_stderr(&times);
        let censored = results.iter().filter(|r| r.censored).count();
        Ok(LifetimeEstimate {
            mean,
            std_error,
            trials: results.len(),
            censored_fraction: censored as f64 / results.len() as f64,
            lower_bound_only: censored > 0,
            creations: results.iter().map(|r| r.creations).sum(),
            annihilations: results.iter().map(|r| r.annihilations).sum(),
            hops: results.iter().map(|r| r.hops).sum(),
            gates_changed: results.iter().map(|r| r.gates_changed).sum(),
        })
    }

    pub fn relative_error(&self) -> f64 {
        self.std_error / self.mean
    }
}

/// Runs trials `0..config.trials` in parallel, returned in trial order.
pub fn run_trials(config: &SimConfig) -> Result<Vec<TrialResult>> {
    config.validate()?;
    (0..config.trials as u64)
        .into_par_iter()
        .map(|i| run_trial(config, i))
        .collect()
}

pub fn estimate_lifetime(config: &SimConfig) -> Result<LifetimeEstimate> {
    if config.trials < 2 {
        return Err(Error::InvalidConfig("lifetime estimate needs at least 2 trials".into()));
    }
    LifetimeEstimate::from_trials(&run_trials(config)?)
}

/// Mean of per-trial times, in the order given.
pub fn mean_time(results: &[TrialResult]) -> f64 {
    neumaier_sum(results.iter().map(|r| r.time)) / results.len() as f64
}
