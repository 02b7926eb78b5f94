//! Parameter sweeps over (L, λ, mode, χ, rates) with CSV/JSON persistence.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    estimate_chi_c, fit_inverse_length, fit_parallel_constant, protocol_off_lifetime, rescale_collapse, ChiCritical,
    CollapsedPoint, LifetimePoint, ParallelFit,
};
use crate::bath::{RateModel, SpectralBath};
use crate::engine::{estimate_lifetime, Absorbing, GateClock, SimConfig, DEFAULT_CUTOFF_FACTOR};
use crate::error::{Error, Result};
use crate::protocol::{Mode, ProtocolSchedule};
use crate::stats::LineFit;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// How bath rates are specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RateSpec {
    Direct {
        gamma_plus: f64,
        gamma_minus: f64,
        gamma_zero: f64,
    },
    Boltzmann {
        temperature: f64,
        #[serde(default = "one")]
        activation: f64,
        gamma_minus: f64,
        gamma_zero: f64,
    },
    Spectral {
        xi: f64,
        exponent: u32,
        temperature: f64,
        #[serde(default = "four")]
        pair_energy: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn four() -> f64 {
    4.0
}

impl RateSpec {
    pub fn resolve(&self) -> Result<RateModel> {
        match *self {
            RateSpec::Direct {
                gamma_plus,
                gamma_minus,
                gamma_zero,
            } => RateModel::new(gamma_plus, gamma_minus, gamma_zero),
            RateSpec::Boltzmann {
                temperature,
                activation,
                gamma_minus,
                gamma_zero,
            } => RateModel::boltzmann(temperature, activation, gamma_minus, gamma_zero),
            RateSpec::Spectral {
                xi,
                exponent,
                temperature,
                pair_energy,
            } => SpectralBath::new(xi, exponent, temperature)
                .with_pair_energy(pair_energy)
                .rates(),
        }
    }

    pub fn temperature(&self) -> Option<f64> {
        match *self {
            RateSpec::Direct { .. } => None,
            RateSpec::Boltzmann { temperature, .. } | RateSpec::Spectral { temperature, .. } => Some(temperature),
        }
    }

    /// Same spec at another temperature; direct rates are left alone.
    pub fn at_temperature(&self, t: f64) -> RateSpec {
        let mut out = *self;
        match &mut out {
            RateSpec::Direct { .. } => {}
            RateSpec::Boltzmann { temperature, .. } | RateSpec::Spectral { temperature, .. } => *temperature = t,
        }
        out
    }

    /// Low-temperature rate hierarchy for the lifetime sweeps:
    /// `γ- = 1`, `γ0 = 7e-4`, `γ+ = e^{-1/T}` at `T = 0.07`.
    pub fn low_temperature_hierarchy() -> RateSpec {
        RateSpec::Boltzmann {
            temperature: 0.07,
            activation: 1.0,
            gamma_minus: 1.0,
            gamma_zero: 7e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedPolicy {
    /// Every point reuses the base seed (common random numbers across χ).
    #[default]
    Shared,
    /// Point `k` uses `base + k`.
    PerPoint,
}

fn default_trials() -> usize {
    400
}

fn default_modes() -> Vec<Mode> {
    vec![Mode::Parallel]
}

fn default_absorbing() -> Absorbing {
    Absorbing::AllDown
}

fn default_cutoff_factor() -> f64 {
    DEFAULT_CUTOFF_FACTOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub lens: Vec<usize>,
    pub lambdas: Vec<usize>,
    pub chis: Vec<f64>,
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
    pub rates: Vec<RateSpec>,
    /// Optional temperature grid applied to every temperature-based rate spec.
    #[serde(default)]
    pub temperatures: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub seed_policy: SeedPolicy,
    /// Cutoff as a multiple of the analytic protocol-off lifetime.
    #[serde(default = "default_cutoff_factor")]
    pub cutoff_factor: f64,
    #[serde(default = "default_absorbing")]
    pub absorbing: Absorbing,
    #[serde(default)]
    pub clock: GateClock,
    #[serde(default)]
    pub output: Option<String>,
}

impl SweepSpec {
    pub fn new(lens: Vec<usize>, lambdas: Vec<usize>, chis: Vec<f64>, rates: RateSpec) -> Self {
        SweepSpec {
            lens,
            lambdas,
            chis,
            modes: default_modes(),
            rates: vec![rates],
            temperatures: vec![],
            trials: default_trials(),
            seed: 0,
            seed_policy: SeedPolicy::Shared,
            cutoff_factor: DEFAULT_CUTOFF_FACTOR,
            absorbing: Absorbing::AllDown,
            clock: GateClock::default(),
            output: None,
        }
    }

    fn rate_grid(&self) -> Vec<RateSpec> {
        if self.temperatures.is_empty() {
            return self.rates.clone();
        }
        let mut out = Vec::new();
        for r in &self.rates {
            if r.temperature().is_some() {
                out.extend(self.temperatures.iter().map(|&t| r.at_temperature(t)));
            } else {
                out.push(*r);
            }
        }
        out
    }

    /// All grid points in output order: rates, L, λ, mode, χ.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for rates in self.rate_grid() {
            for &len in &self.lens {
                for &lambda in &self.lambdas {
                    for &mode in &self.modes {
                        for &chi in &self.chis {
                            out.push(SweepPoint {
                                len,
                                lambda,
                                mode,
                                chi,
                                rates,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub len: usize,
    pub lambda: usize,
    pub mode: Mode,
    pub chi: f64,
    pub rates: RateSpec,
}

impl SweepPoint {
    /// Simulation config, or the reason the point cannot run.
    pub fn config(&self, trials: usize, seed: u64, cutoff_factor: f64, absorbing: Absorbing) -> Result<SimConfig> {
        let rates = self.rates.resolve()?;
        let schedule = ProtocolSchedule::lambda_mixing(self.len, self.lambda, self.mode, self.chi)?;
        let cutoff = cutoff_factor * protocol_off_lifetime(self.len, &rates);
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "no finite cutoff for these rates (protocol-off lifetime {})",
                protocol_off_lifetime(self.len, &rates)
            )));
        }
        Ok(SimConfig::new(self.len, rates)?
            .with_schedule(schedule)
            .with_cutoff(cutoff)
            .with_trials(trials)
            .with_seed(seed)
            .with_absorbing(absorbing))
    }
}

/// One CSV row: full parameter tuple, seed, code version and results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub len: usize,
    pub lambda: usize,
    pub mode: Mode,
    pub clock: GateClock,
    pub chi: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub gamma_zero: f64,
    pub temperature: Option<f64>,
    pub absorbing: Absorbing,
    pub trials: usize,
    pub seed: u64,
    pub cutoff: f64,
    pub mean: f64,
    pub std_error: f64,
    pub censored_fraction: f64,
    pub lower_bound_only: bool,
    pub creations: u64,
    pub annihilations: u64,
    pub hops: u64,
    pub gates_changed: u64,
    pub version: String,
}

impl SweepRecord {
    pub fn rates(&self) -> RateModel {
        RateModel {
            gamma_plus: self.gamma_plus,
            gamma_minus: self.gamma_minus,
            gamma_zero: self.gamma_zero,
        }
    }

    pub fn point(&self) -> LifetimePoint {
        LifetimePoint {
            len: self.len,
            lambda: self.lambda,
            chi: self.chi,
            mean: self.mean,
            std_error: self.std_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub point: SweepPoint,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub skipped: Vec<SkipRecord>,
}

/// Runs every point; trials within a point run in parallel.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput> {
    if spec.trials < 2 {
        return Err(Error::InvalidConfig("sweeps need at least 2 trials per point".into()));
    }
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (k, point) in spec.points().into_iter().enumerate() {
        let seed = match spec.seed_policy {
            SeedPolicy::Shared => spec.seed,
            SeedPolicy::PerPoint => spec.seed.wrapping_add(k as u64),
        };
        let config = match point.config(spec.trials, seed, spec.cutoff_factor, spec.absorbing) {
            Ok(c) => c.with_clock(spec.clock),
            Err(e) => {
                skipped.push(SkipRecord {
                    point,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let est = estimate_lifetime(&config)?;
        records.push(SweepRecord {
            len: point.len,
            lambda: point.lambda,
            mode: point.mode,
            clock: spec.clock,
            chi: point.chi,
            gamma_plus: config.rates.gamma_plus,
            gamma_minus: config.rates.gamma_minus,
            gamma_zero: config.rates.gamma_zero,
            temperature: point.rates.temperature(),
            absorbing: spec.absorbing,
            trials: spec.trials,
            seed,
            cutoff: config.cutoff,
            mean: est.mean,
            std_error: est.std_error,
            censored_fraction: est.censored_fraction,
            lower_bound_only: est.lower_bound_only,
            creations: est.creations,
            annihilations: est.annihilations,
            hops: est.hops,
            gates_changed: est.gates_changed,
            version: VERSION.to_string(),
        });
    }
    Ok(SweepOutput { records, skipped })
}

pub fn write_csv(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub seed: u64,
    pub spec: SweepSpec,
    pub records: usize,
    pub skipped: Vec<SkipRecord>,
    pub csv: String,
}

/// Writes `lifetimes.csv` and `manifest.json` into `dir`.
pub fn write_outputs(dir: &Path, spec: &SweepSpec, out: &SweepOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    let csv_name = "lifetimes.csv";
    write_csv(&dir.join(csv_name), &out.records)?;
    let manifest = Manifest {
        version: VERSION.to_string(),
        seed: spec.seed,
        spec: spec.clone(),
        records: out.records.len(),
        skipped: out.skipped.clone(),
        csv: csv_name.to_string(),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

/// Points with `χL` below this are treated as the low-χ linear regime.
pub const LINEAR_REGIME_CHI_L: f64 = 0.02;

/// One lifetime-vs-χ curve at fixed (L, λ, mode, clock, rates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub len: usize,
    pub lambda: usize,
    pub mode: Mode,
    pub clock: GateClock,
    pub rates: RateModel,
    pub points: Vec<LifetimePoint>,
    pub off_lifetime: Option<f64>,
    pub max_lifetime: f64,
    pub chi_at_max: f64,
    pub chi_c: Option<ChiCritical>,
    pub chi_c_note: Option<String>,
}

/// Collapse and fits for all curves sharing (λ, mode, clock, rates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub lambda: usize,
    pub mode: Mode,
    pub clock: GateClock,
    pub rates: RateModel,
    pub lens: Vec<usize>,
    pub parallel_fit: Option<ParallelFit>,
    pub collapse: Vec<CollapsedPoint>,
    pub inverse_length_fit: Option<LineFit>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub curves: Vec<CurveSummary>,
    pub families: Vec<FamilySummary>,
}

fn same_rates(a: &RateModel, b: &RateModel) -> bool {
    a.gamma_plus == b.gamma_plus && a.gamma_minus == b.gamma_minus && a.gamma_zero == b.gamma_zero
}

/// Groups sweep rows into curves and fits each family. Pure in its input.
pub fn analyze_records(records: &[SweepRecord]) -> AnalysisReport {
    let mut curves: Vec<CurveSummary> = Vec::new();
    for r in records {
        let rates = r.rates();
        let found = curves
            .iter_mut()
            .find(|c| {
                c.len == r.len && c.lambda == r.lambda && c.mode == r.mode && c.clock == r.clock && same_rates(&c.rates, &rates)
            });
        let curve = match found {
            Some(c) => c,
            None => {
                curves.push(CurveSummary {
                    len: r.len,
                    lambda: r.lambda,
                    mode: r.mode,
                    clock: r.clock,
                    rates,
                    points: vec![],
                    off_lifetime: None,
                    max_lifetime: f64::NAN,
                    chi_at_max: f64::NAN,
                    chi_c: None,
                    chi_c_note: None,
                });
                curves.last_mut().expect("just pushed")
            }
        };
        if r.chi == 0.0 {
            curve.off_lifetime = Some(r.mean);
        }
        curve.points.push(r.point());
    }
    for c in &mut curves {
        c.points.sort_by(|a, b| a.chi.total_cmp(&b.chi));
        let on: Vec<&LifetimePoint> = c.points.iter().filter(|p| p.chi > 0.0).collect();
        if let Some(best) = on.iter().max_by(|a, b| a.mean.total_cmp(&b.mean)) {
            c.max_lifetime = best.mean;
            c.chi_at_max = best.chi;
        }
        let chi: Vec<f64> = on.iter().map(|p| p.chi).collect();
        let mean: Vec<f64> = on.iter().map(|p| p.mean).collect();
        let se: Vec<f64> = on.iter().map(|p| p.std_error).collect();
        match estimate_chi_c(&chi, &mean, &se) {
            Ok(est) => c.chi_c = Some(est),
            Err(e) => c.chi_c_note = Some(e.to_string()),
        }
    }

    let mut families: Vec<FamilySummary> = Vec::new();
    for c in &curves {
        let found = families
            .iter_mut()
            .find(|f| f.lambda == c.lambda && f.mode == c.mode && f.clock == c.clock && same_rates(&f.rates, &c.rates));
        match found {
            Some(f) => f.lens.push(c.len),
            None => families.push(FamilySummary {
                lambda: c.lambda,
                mode: c.mode,
                clock: c.clock,
                rates: c.rates,
                lens: vec![c.len],
                parallel_fit: None,
                collapse: vec![],
                inverse_length_fit: None,
                notes: vec![],
            }),
        }
    }
    for f in &mut families {
        f.lens.sort_unstable();
        let members: Vec<&CurveSummary> = curves
            .iter()
            .filter(|c| c.lambda == f.lambda && c.mode == f.mode && c.clock == f.clock && same_rates(&c.rates, &f.rates))
            .collect();
        let points: Vec<LifetimePoint> = members.iter().flat_map(|c| c.points.iter().copied()).collect();
        let linear: Vec<LifetimePoint> = points
            .iter()
            .copied()
            .filter(|p| p.chi > 0.0 && p.chi * (p.len as f64) < LINEAR_REGIME_CHI_L)
            .collect();
        match fit_parallel_constant(&linear, &f.rates) {
            Ok(fit) => f.parallel_fit = Some(fit),
            Err(e) => f.notes.push(format!("parallel fit: {e}")),
        }
        match rescale_collapse(&points, &f.rates) {
            Ok(col) => f.collapse = col,
            Err(e) => f.notes.push(format!("collapse: {e}")),
        }
        let with_chi_c: Vec<(usize, f64)> = members
            .iter()
            .filter_map(|c| c.chi_c.map(|e| (c.len, e.chi_c)))
            .collect();
        let lens: Vec<usize> = with_chi_c.iter().map(|p| p.0).collect();
        let chi_c: Vec<f64> = with_chi_c.iter().map(|p| p.1).collect();
        match fit_inverse_length(&lens, &chi_c) {
            Ok(fit) => f.inverse_length_fit = Some(fit),
            Err(e) => f.notes.push(format!("χ_c vs 1/L: {e}")),
        }
    }
    AnalysisReport { curves, families }
}
