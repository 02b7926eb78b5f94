use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use dswap_core::analysis::protocol_off_lifetime;
use dswap_core::engine::{run_trials, Absorbing, GateClock, InitialState, LifetimeEstimate, SimConfig};
use dswap_core::matchseq::{mixing_distance, winning, Graph};
use dswap_core::oracle::{
    absorbing_set, boltzmann_distribution, max_relative_error, mfpt_exact, stationary_distribution, GeneratorMatrix,
};
use dswap_core::protocol::{export_sequence, import_sequence, SequenceHeader};
use dswap_core::sweep::{analyze_records, read_csv, run_sweep, write_outputs, RateSpec, SweepSpec, VERSION};
use dswap_core::{constructive_strategy, generate_lambda_mixing, pairing_number_bfs, verify_protocol};
use dswap_core::{Mode, ProtocolSchedule};

/// `println!` that reports a closed stdout as an error instead of panicking.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        writeln!(std::io::stdout(), $($t)*)?;
    }};
}

#[derive(Parser)]
#[command(name = "dswap", version, about = "Domain-wall swap protocol experiments")]
struct Cli {
    /// TOML file mirroring the subcommand's spec.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for trial execution (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate one lifetime.
    Simulate(SimulateArgs),
    /// Run a parameter sweep described by --config.
    Sweep,
    /// Generate, verify, export or import λ-mixing sequences.
    Protocol(ProtocolArgs),
    /// Pairing numbers and constructive strategies.
    Matchseq(MatchseqArgs),
    /// Exact mean first-passage time or stationary distribution.
    Oracle(OracleArgs),
    /// Fit and rescale a sweep's CSV output.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Clone, Default)]
struct RateArgs {
    #[arg(long)]
    gamma_plus: Option<f64>,
    #[arg(long)]
    gamma_minus: Option<f64>,
    #[arg(long)]
    gamma_zero: Option<f64>,
    #[arg(long)]
    temperature: Option<f64>,
    /// Use an Ohmic/superohmic bath with this coupling.
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long, default_value_t = 1)]
    exponent: u32,
}

impl RateArgs {
    fn spec(&self) -> anyhow::Result<RateSpec> {
        if let Some(xi) = self.xi {
            let temperature = self.temperature.context("--xi needs --temperature")?;
            return Ok(RateSpec::Spectral {
                xi,
                exponent: self.exponent,
                temperature,
                pair_energy: 4.0,
            });
        }
        if let Some(gamma_plus) = self.gamma_plus {
            return Ok(RateSpec::Direct {
                gamma_plus,
                gamma_minus: self.gamma_minus.unwrap_or(1.0),
                gamma_zero: self.gamma_zero.unwrap_or(7e-4),
            });
        }
        let RateSpec::Boltzmann {
            temperature,
            activation,
            gamma_minus,
            gamma_zero,
        } = RateSpec::low_temperature_hierarchy()
        else {
            unreachable!()
        };
        Ok(RateSpec::Boltzmann {
            temperature: self.temperature.unwrap_or(temperature),
            activation,
            gamma_minus: self.gamma_minus.unwrap_or(gamma_minus),
            gamma_zero: self.gamma_zero.unwrap_or(gamma_zero),
        })
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 48)]
    len: usize,
    #[arg(long, default_value_t = 3)]
    lambda: usize,
    #[arg(long, default_value = "parallel")]
    mode: Mode,
    /// Gate rate; 0 switches the protocol off.
    #[arg(long, default_value_t = 0.0)]
    chi: f64,
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long, value_enum, default_value = "all-down")]
    absorbing: AbsorbingArg,
    /// Whether bath events restart the wait for the next gate.
    #[arg(long, value_enum, default_value = "restart")]
    clock: ClockArg,
    #[command(flatten)]
    rates: RateArgs,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ClockArg {
    Restart,
    Periodic,
}

impl From<ClockArg> for GateClock {
    fn from(c: ClockArg) -> Self {
        match c {
            ClockArg::Restart => GateClock::Restart,
            ClockArg::Periodic => GateClock::Periodic,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum AbsorbingArg {
    AllDown,
    NoWalls,
    MajorityDown,
}

impl From<AbsorbingArg> for Absorbing {
    fn from(a: AbsorbingArg) -> Self {
        match a {
            AbsorbingArg::AllDown => Absorbing::AllDown,
            AbsorbingArg::NoWalls => Absorbing::NoWalls,
            AbsorbingArg::MajorityDown => Absorbing::MajorityDown,
        }
    }
}

/// `simulate --config` document.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateFile {
    len: usize,
    #[serde(default = "three")]
    lambda: usize,
    #[serde(default = "parallel")]
    mode: Mode,
    #[serde(default)]
    chi: f64,
    rates: RateSpec,
    #[serde(default)]
    cutoff: Option<f64>,
    #[serde(default)]
    trials: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    absorbing: Option<Absorbing>,
    #[serde(default)]
    clock: Option<GateClock>,
    #[serde(default)]
    initial: Option<InitialState>,
}

fn three() -> usize {
    3
}

fn parallel() -> Mode {
    Mode::Parallel
}

#[derive(Args)]
struct ProtocolArgs {
    /// Generate for `L=<n> λ=<k>` (also `lambda=<k>`).
    #[arg(long, num_args = 1..=2, value_name = "KEY=VALUE")]
    gen: Vec<String>,
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    export: Option<PathBuf>,
    #[arg(long)]
    import: Option<PathBuf>,
    #[arg(long, default_value = "parallel")]
    mode: Mode,
    /// Also report the schedule at this gate rate.
    #[arg(long)]
    chi: Option<f64>,
}

#[derive(Args)]
struct MatchseqArgs {
    #[arg(long, group = "graph_kind")]
    path: Option<usize>,
    #[arg(long, group = "graph_kind")]
    cycle: Option<usize>,
    /// `ROWSxCOLS`.
    #[arg(long, group = "graph_kind")]
    grid: Option<String>,
    /// Edge-list file: vertex count, then one `u v` per line.
    #[arg(long, group = "graph_kind")]
    graph: Option<PathBuf>,
    /// Use the polynomial construction instead of breadth-first search.
    #[arg(long)]
    constructive: bool,
    #[arg(long, default_value_t = 5_000_000)]
    budget: usize,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 6)]
    len: usize,
    /// Start configuration as a down-spin bit mask (default all up).
    #[arg(long, default_value_t = 0)]
    start: u64,
    #[arg(long, value_enum, default_value = "all-down")]
    absorbing: AbsorbingArg,
    /// Solve for the stationary distribution instead.
    #[arg(long)]
    stationary: bool,
    #[command(flatten)]
    rates: RateArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Sweep CSV files (or directories containing lifetimes.csv).
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        let closed = e
            .downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe);
        if closed {
            return;
        }
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    match &cli.command {
        Command::Simulate(a) => simulate(&cli, a),
        Command::Sweep => sweep(&cli),
        Command::Protocol(a) => protocol(&cli, a),
        Command::Matchseq(a) => matchseq(a),
        Command::Oracle(a) => oracle(a),
        Command::Analyze(a) => analyze(&cli, a),
    }
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(out: Option<&Path>, name: &str, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), &text)?;
            say!("wrote {}", dir.join(name).display());
        }
        None => say!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateOutput {
    version: &'static str,
    config: SimConfig,
    estimate: LifetimeEstimate,
    analytic_off_lifetime: f64,
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(p) => read_toml::<SimulateFile>(p)?,
        None => SimulateFile {
            len: a.len,
            lambda: a.lambda,
            mode: a.mode,
            chi: a.chi,
            rates: a.rates.spec()?,
            cutoff: a.cutoff,
            trials: None,
            seed: None,
            absorbing: Some(a.absorbing.into()),
            clock: Some(a.clock.into()),
            initial: None,
        },
    };
    let rates = file.rates.resolve()?;
    let mut config = SimConfig::new(file.len, rates)?
        .with_trials(cli.trials.or(file.trials).unwrap_or(400))
        .with_seed(cli.seed.or(file.seed).unwrap_or(0))
        .with_absorbing(file.absorbing.unwrap_or(Absorbing::AllDown))
        .with_clock(file.clock.unwrap_or_default());
    if let Some(c) = file.cutoff {
        config = config.with_cutoff(c);
    }
    if let Some(init) = file.initial {
        config = config.with_initial(init);
    }
    if file.chi > 0.0 {
        config = config.with_schedule(ProtocolSchedule::lambda_mixing(file.len, file.lambda, file.mode, file.chi)?);
    }
    let results = run_trials(&config)?;
    let estimate = LifetimeEstimate::from_trials(&results)?;
    let output = SimulateOutput {
        version: VERSION,
        analytic_off_lifetime: protocol_off_lifetime(file.len, &rates),
        config,
        estimate,
    };
    emit(cli.out.as_deref(), "simulate.json", &output)
}

fn sweep(cli: &Cli) -> anyhow::Result<()> {
    let path = cli.config.as_deref().context("sweep needs --config <file>")?;
    let mut spec: SweepSpec = read_toml(path)?;
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    if let Some(t) = cli.trials {
        spec.trials = t;
    }
    let dir = cli
        .out
        .clone()
        .or_else(|| spec.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("sweep-out"));
    let out = run_sweep(&spec)?;
    for s in &out.skipped {
        eprintln!(
            "skipped L={} λ={} mode={} χ={}: {}",
            s.point.len, s.point.lambda, s.point.mode, s.point.chi, s.reason
        );
    }
    write_outputs(&dir, &spec, &out)?;
    say!(
        "{} points, {} skipped, written to {}",
        out.records.len(),
        out.skipped.len(),
        dir.display()
    );
    Ok(())
}

fn parse_gen(items: &[String]) -> anyhow::Result<(usize, usize)> {
    let (mut len, mut lambda) = (None, None);
    for item in items {
        let (k, v) = item
            .split_once('=')
            .with_context(|| format!("expected KEY=VALUE, got {item:?}"))?;
        let v: usize = v.parse().with_context(|| format!("bad value in {item:?}"))?;
        match k {
            "L" | "len" => len = Some(v),
            "λ" | "lambda" => lambda = Some(v),
            _ => bail!("unknown key {k:?}"),
        }
    }
    Ok((len.context("missing L=")?, lambda.context("missing λ=")?))
}

#[derive(Serialize)]
struct ProtocolReport {
    len: usize,
    lambda: usize,
    gates: usize,
    window_gates: usize,
    winning: Option<bool>,
    max_displacement: Option<usize>,
    witness: Option<(usize, usize)>,
    mixing_ok: Option<bool>,
    schedule: Option<ScheduleSummary>,
}

#[derive(Serialize)]
struct ScheduleSummary {
    mode: Mode,
    chi: f64,
    tick_interval: f64,
    cycle_ticks: usize,
    max_gates_per_tick: usize,
}

fn protocol(cli: &Cli, a: &ProtocolArgs) -> anyhow::Result<()> {
    let (header, seq) = if let Some(path) = &a.import {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        import_sequence(&text)?
    } else if !a.gen.is_empty() {
        let (len, lambda) = parse_gen(&a.gen)?;
        let seq = generate_lambda_mixing(len, lambda)?;
        (
            SequenceHeader {
                len,
                lambda,
                mode: a.mode,
            },
            seq,
        )
    } else {
        bail!("protocol needs --gen L=<n> λ=<k> or --import <file>");
    };
    let window_len = seq.len() / (header.len / header.lambda);
    let window = &seq.locations[..window_len];
    let mut report = ProtocolReport {
        len: header.len,
        lambda: header.lambda,
        gates: seq.len(),
        window_gates: window_len,
        winning: None,
        max_displacement: None,
        witness: None,
        mixing_ok: None,
        schedule: None,
    };
    if a.verify {
        let v = verify_protocol(window, 2 * header.lambda, header.lambda)?;
        report.winning = Some(v.winning);
        report.max_displacement = Some(v.max_displacement);
        report.witness = v.witness;
        report.mixing_ok = Some(v.mixing_ok);
    }
    if let Some(chi) = a.chi {
        let s = ProtocolSchedule::new(&seq, a.mode, chi, header.len, header.lambda)?;
        report.schedule = Some(ScheduleSummary {
            mode: s.mode,
            chi,
            tick_interval: s.tick_interval(),
            cycle_ticks: s.cycle_len(),
            max_gates_per_tick: (0..s.cycle_len()).map(|k| s.tick(k).len()).max().unwrap_or(0),
        });
    }
    if let Some(path) = &a.export {
        fs::write(path, export_sequence(&seq, &header))?;
        eprintln!("wrote {}", path.display());
    }
    let text = serde_json::to_string_pretty(&report)?;
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("protocol.json"), &text)?;
    }
    say!("{text}");
    if a.verify && !(report.winning == Some(true) && report.mixing_ok == Some(true)) {
        bail!("sequence failed verification");
    }
    Ok(())
}

fn parse_grid(s: &str) -> anyhow::Result<(usize, usize)> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .with_context(|| format!("grid must look like 3x3, got {s:?}"))?;
    Ok((r.trim().parse()?, c.trim().parse()?))
}

fn matchseq(a: &MatchseqArgs) -> anyhow::Result<()> {
    let graph = if let Some(n) = a.path {
        Graph::path(n)?
    } else if let Some(n) = a.cycle {
        Graph::cycle(n)?
    } else if let Some(g) = &a.grid {
        let (r, c) = parse_grid(g)?;
        Graph::grid(r, c)?
    } else if let Some(p) = &a.graph {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        Graph::parse(&text)?
    } else {
        bail!("matchseq needs one of --path, --cycle, --grid, --graph");
    };
    let strategy = if a.constructive {
        constructive_strategy(&graph)
    } else {
        pairing_number_bfs(&graph, a.budget)?.1
    };
    say!("{}", strategy.len());
    let edges: Vec<String> = strategy.edges.iter().map(|(u, v)| format!("{u}-{v}")).collect();
    say!("strategy: {}", edges.join(" "));
    say!("wins: {}", winning(&graph, &strategy)?);
    say!("mixing distance: {}", mixing_distance(&graph, &strategy));
    Ok(())
}

fn oracle(a: &OracleArgs) -> anyhow::Result<()> {
    let spec = a.rates.spec()?;
    let rates = spec.resolve()?;
    let gen = GeneratorMatrix::build(a.len, rates)?;
    if a.stationary {
        let pi = stationary_distribution(&gen)?;
        say!("states: {}", pi.len());
        if let (RateSpec::Spectral { temperature, pair_energy, .. }, _) = (spec, ()) {
            let boltz = boltzmann_distribution(a.len, pair_energy / 2.0, temperature)?;
            say!("max relative deviation from Boltzmann: {:e}", max_relative_error(&pi, &boltz));
        }
        say!("p(all up) = {:e}", pi[0]);
        return Ok(());
    }
    let targets = absorbing_set(a.len, a.absorbing.into())?;
    let t = mfpt_exact(&gen, a.start as usize, &targets)?;
    say!("{t:e}");
    Ok(())
}

fn analyze(cli: &Cli, a: &AnalyzeArgs) -> anyhow::Result<()> {
    let mut records = Vec::new();
    for input in &a.inputs {
        let path = if input.is_dir() {
            input.join("lifetimes.csv")
        } else {
            input.clone()
        };
        records.extend(read_csv(&path).with_context(|| format!("reading {}", path.display()))?);
    }
    let report = analyze_records(&records);
    for c in &report.curves {
        let chi_c = match (&c.chi_c, &c.chi_c_note) {
            (Some(e), _) => format!("χ_c = {:.4e} ± {:.1e} (χ_c L = {:.4})", e.chi_c, e.error, e.chi_c * c.len as f64),
            (None, Some(n)) => format!("χ_c: {n}"),
            _ => String::new(),
        };
        eprintln!(
            "L={} λ={} {}: max lifetime {:.4e} at χ={:.3e}; {}",
            c.len, c.lambda, c.mode, c.max_lifetime, c.chi_at_max, chi_c
        );
    }
    emit(cli.out.as_deref(), "analysis.json", &report)
}
