use dswap_core::analysis::protocol_off_lifetime;
use dswap_core::engine::run_trials;
use dswap_core::{
    estimate_lifetime, run_trial, Absorbing, GateClock, InitialState, Mode, ProtocolSchedule, RateModel, SimConfig, Spin,
};

fn fast_rates() -> RateModel {
    RateModel::boltzmann(0.2, 1.0, 1.0, 0.05).unwrap()
}

#[test]
fn vanishing_chi_reproduces_protocol_off_trials() {
    let off = SimConfig::new(12, fast_rates()).unwrap().with_trials(50).with_seed(3);
    let slow = off
        .clone()
        .with_schedule(ProtocolSchedule::lambda_mixing(12, 3, Mode::Parallel, 1e-12).unwrap());
    let a = run_trials(&off).unwrap();
    let b = run_trials(&slow).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.time.to_bits(), y.time.to_bits());
        assert_eq!(y.gates_changed, 0);
    }
}

#[test]
fn zero_chi_is_protocol_off() {
    let off = SimConfig::new(12, fast_rates()).unwrap().with_trials(20).with_seed(5);
    let zero = off
        .clone()
        .with_schedule(ProtocolSchedule::lambda_mixing(12, 3, Mode::Serial, 0.0).unwrap());
    assert_eq!(run_trials(&off).unwrap(), run_trials(&zero).unwrap());
}

#[test]
fn thread_count_does_not_change_results() {
    let cfg = SimConfig::new(12, fast_rates())
        .unwrap()
        .with_schedule(ProtocolSchedule::lambda_mixing(12, 3, Mode::Parallel, 0.05).unwrap())
        .with_trials(64)
        .with_seed(11);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_trials(&cfg).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn trials_are_independent_of_batch_size() {
    let cfg = SimConfig::new(8, fast_rates()).unwrap().with_seed(9);
    let batch = run_trials(&cfg.clone().with_trials(10)).unwrap();
    for (k, r) in batch.iter().enumerate() {
        assert_eq!(*r, run_trial(&cfg, k as u64).unwrap());
    }
}

#[test]
fn protocol_off_lifetime_near_analytic_value() {
    // Deep in the activated regime the winding formula is accurate.
    let r = RateModel::boltzmann(0.12, 1.0, 1.0, 0.02).unwrap();
    let cfg = SimConfig::new(16, r).unwrap().with_trials(800).with_seed(1);
    let est = estimate_lifetime(&cfg).unwrap();
    let predicted = protocol_off_lifetime(16, &r);
    assert!(!est.lower_bound_only);
    assert!((est.mean / predicted - 1.0).abs() < 0.15, "{} vs {predicted}", est.mean);
}

#[test]
fn short_cutoff_marks_lower_bound() {
    let cfg = SimConfig::new(12, fast_rates()).unwrap().with_trials(10).with_cutoff(1.0);
    let est = estimate_lifetime(&cfg).unwrap();
    assert!(est.lower_bound_only);
    assert!(est.censored_fraction > 0.0);
}

#[test]
fn restart_clock_starves_gates_under_a_busy_bath() {
    // Two walls hopping at total rate 4 against a gate interval of 1: the
    // restarting clock rarely sees a quiet interval, the periodic one
    // fires every tick until the walls meet.
    let r = RateModel::new(1e-12, 1.0, 1.0).unwrap();
    let mut spins = vec![Spin::Up; 12];
    for s in &mut spins[1..7] {
        *s = Spin::Down;
    }
    let sched = ProtocolSchedule::lambda_mixing(12, 3, Mode::Serial, 1.0).unwrap();
    let base = SimConfig::new(12, r)
        .unwrap()
        .with_schedule(sched)
        .with_initial(InitialState::Spins(spins))
        .with_absorbing(Absorbing::NoWalls)
        .with_cutoff(1e6)
        .with_trials(200)
        .with_seed(2);
    let rate = |clock| {
        let trials = run_trials(&base.clone().with_clock(clock)).unwrap();
        // Every trial opens with a tick at t = 0; leave it out.
        let ticks: u64 = trials.iter().map(|t| t.ticks - 1).sum();
        let time: f64 = trials.iter().map(|t| t.time).sum();
        ticks as f64 / time
    };
    let periodic = rate(GateClock::Periodic);
    let restart = rate(GateClock::Restart);
    assert!((periodic - 1.0).abs() < 0.1, "{periodic}");
    assert!(restart < 0.1, "{restart}");
    assert!(restart > 0.0);
}

#[test]
fn restart_is_the_default_clock() {
    assert_eq!(SimConfig::new(6, fast_rates()).unwrap().clock, GateClock::Restart);
}
