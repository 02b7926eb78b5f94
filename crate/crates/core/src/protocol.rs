//! λ-mixing DSWAP protocols and their serial/parallel schedules.
//!
//! The dual lattice is cut into `L / λ` domains of `λ` sites. For each pair
//! of neighboring domains a window subsequence of DSWAPs drives defects
//! towards the shared boundary without ever moving a gate across it, so a
//! lone defect stays inside its own domain.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matchseq::{first_survivor, mixing_distance, Graph, PairGame, Provenance, Strategy};

/// DSWAP locations; `b` swaps the occupations of dual sites `b` and `b + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSequence {
    pub locations: Vec<usize>,
}

impl GateSequence {
    pub fn new(locations: Vec<usize>) -> Self {
        GateSequence { locations }
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }
}

fn check_lambda(len: usize, lambda: usize) -> Result<()> {
    if lambda < 2 {
        return Err(Error::InvalidProtocol(format!(
            "lambda must be at least 2, got {lambda}"
        )));
    }
    if len % lambda != 0 {
        return Err(Error::InvalidProtocol(format!(
            "lambda {lambda} does not divide L = {len}"
        )));
    }
    if len < 2 * lambda {
        return Err(Error::InvalidProtocol(format!(
            "L = {len} cannot hold two domains of {lambda}"
        )));
    }
    Ok(())
}

/// Window subsequence for the domain pair `[0, λ) ∪ [λ, 2λ)` in local
/// coordinates.
///
/// For every partial conveyor on the left domain (ending at the boundary
/// site `λ - 1`) the full set of conveyors on the right domain is replayed,
/// so every left/right occupation meets at the boundary. Length is
/// `λ (λ² − 1) / 2`.
pub fn window_subsequence(lambda: usize) -> Vec<usize> {
    let mut seq = Vec::with_capacity(lambda * (lambda * lambda).saturating_sub(1) / 2);
    for k in 0..lambda {
        for m in 0..k {
            seq.push(lambda - 1 - k + m);
        }
        for i in 0..lambda {
            for j in 0..i {
                seq.push(lambda + i - j - 1);
            }
        }
    }
    seq
}

/// Full λ-mixing sequence on a ring of `len` dual sites: the window
/// subsequence for each neighboring domain pair, left to right with wrap.
pub fn generate_lambda_mixing(len: usize, lambda: usize) -> Result<GateSequence> {
    check_lambda(len, lambda)?;
    let window = window_subsequence(lambda);
    let locations = (0..len / lambda)
        .flat_map(|d| window.iter().map(move |&b| (b + d * lambda) % len))
        .collect();
    Ok(GateSequence { locations })
}

/// Outcome of the exhaustive check of a window sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    /// Every two-defect placement in the window fuses.
    pub winning: bool,
    /// Largest distance a lone defect travels from its start.
    pub max_displacement: usize,
    /// A placement that never fuses, when `winning` is false.
    pub witness: Option<(usize, usize)>,
    /// Some gate acts across the boundary between the two halves.
    pub crosses_shared_boundary: bool,
    /// `max_displacement < λ`.
    pub mixing_ok: bool,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.winning && self.mixing_ok && !self.crosses_shared_boundary
    }
}

/// Checks a window sequence by simulating every placement on an open
/// chain of `window` dual sites with fusion on adjacency.
pub fn verify_protocol(seq: &[usize], window: usize, lambda: usize) -> Result<VerifyReport> {
    let graph = Graph::path(window)?;
    if let Some(&bad) = seq.iter().find(|&&b| b + 1 >= window) {
        return Err(Error::OutOfRange {
            index: bad,
            len: window.saturating_sub(1),
        });
    }
    let strategy = Strategy::new(seq.iter().map(|&b| (b, b + 1)).collect(), Provenance::Imported);
    let game = PairGame::new(&graph);
    let survivors = game.survivors(&strategy)?;
    let max_displacement = mixing_distance(&graph, &strategy);
    Ok(VerifyReport {
        winning: survivors.is_empty(),
        max_displacement,
        witness: first_survivor(&game, &survivors),
        crosses_shared_boundary: 2 * lambda == window && seq.contains(&(lambda - 1)),
        mixing_ok: max_displacement < lambda,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Serial,
    Parallel,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "serial" => Ok(Mode::Serial),
            "parallel" => Ok(Mode::Parallel),
            _ => Err(Error::Parse(format!("unknown mode {s:?}"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Serial => "serial",
            Mode::Parallel => "parallel",
        })
    }
}

/// Periodic gate timetable: tick `k` fires at `(k + phase) / χ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSchedule {
    pub mode: Mode,
    pub chi: f64,
    pub lambda: usize,
    pub len: usize,
    /// Offset of the first tick in units of `1/χ`, in `[0, 1)`.
    pub phase: f64,
    /// Domain pairs (by left domain index) in firing order.
    pub pair_order: Vec<usize>,
    /// Gates fired on each tick of one cycle, ascending within a tick.
    pub ticks: Vec<Vec<usize>>,
}

impl ProtocolSchedule {
    /// Builds the timetable for `seq`, which must be the concatenation of
    /// equal-length window subsequences, one per domain pair.
    pub fn new(seq: &GateSequence, mode: Mode, chi: f64, len: usize, lambda: usize) -> Result<Self> {
        check_lambda(len, lambda)?;
        if !chi.is_finite() || chi < 0.0 {
            return Err(Error::InvalidRate(format!("chi = {chi}")));
        }
        let domains = len / lambda;
        if seq.len() % domains != 0 {
            return Err(Error::InvalidProtocol(format!(
                "sequence of {} gates does not split into {domains} domain pairs",
                seq.len()
            )));
        }
        if let Some(&b) = seq.locations.iter().find(|&&b| b >= len) {
            return Err(Error::OutOfRange { index: b, len });
        }
        let per_pair = seq.len() / domains;
        let block = |d: usize| &seq.locations[d * per_pair..(d + 1) * per_pair];
        let (pair_order, ticks) = match mode {
            Mode::Serial => (
                (0..domains).collect(),
                seq.locations.iter().map(|&b| vec![b]).collect(),
            ),
            Mode::Parallel => {
                if domains % 2 != 0 {
                    return Err(Error::InvalidProtocol(format!(
                        "parallel mode needs an even number of domains, got {domains}"
                    )));
                }
                let even: Vec<usize> = (0..domains).step_by(2).collect();
                let odd: Vec<usize> = (1..domains).step_by(2).collect();
                let mut ticks = Vec::with_capacity(2 * per_pair);
                for phase in [&even, &odd] {
                    for k in 0..per_pair {
                        ticks.push(phase.iter().map(|&d| block(d)[k]).collect());
                    }
                }
                (even.into_iter().chain(odd).collect(), ticks)
            }
        };
        let schedule = ProtocolSchedule {
            mode,
            chi,
            lambda,
            len,
            phase: 0.0,
            pair_order,
            ticks,
        };
        schedule.check_supports()?;
        Ok(schedule)
    }

    /// λ-mixing sequence and its schedule in one call.
    pub fn lambda_mixing(len: usize, lambda: usize, mode: Mode, chi: f64) -> Result<Self> {
        let seq = generate_lambda_mixing(len, lambda)?;
        Self::new(&seq, mode, chi, len, lambda)
    }

    pub fn with_phase(mut self, phase: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&phase) {
            return Err(Error::InvalidProtocol(format!("phase {phase} not in [0, 1)")));
        }
        self.phase = phase;
        Ok(self)
    }

    fn check_supports(&self) -> Result<()> {
        let mut owner: Vec<Option<usize>> = vec![None; self.len];
        for (t, tick) in self.ticks.iter().enumerate() {
            for &b in tick {
                for site in [b, (b + 1) % self.len] {
                    if let Some(first) = owner[site] {
                        return Err(Error::OverlappingSupport {
                            tick: t,
                            first,
                            second: b,
                        });
                    }
                }
                owner[b] = Some(b);
                owner[(b + 1) % self.len] = Some(b);
            }
            for &b in tick {
                owner[b] = None;
                owner[(b + 1) % self.len] = None;
            }
        }
        Ok(())
    }

    /// False for `χ = 0`, the protocol-off limit.
    pub fn fires(&self) -> bool {
        self.chi > 0.0 && !self.ticks.is_empty()
    }

    pub fn tick_interval(&self) -> f64 {
        1.0 / self.chi
    }

    pub fn cycle_len(&self) -> usize {
        self.ticks.len()
    }

    pub fn tick(&self, k: usize) -> &[usize] {
        &self.ticks[k % self.ticks.len()]
    }

    pub fn gates_per_cycle(&self) -> usize {
        self.ticks.iter().map(Vec::len).sum()
    }

    /// All gates of one cycle, sorted.
    pub fn gate_multiset(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.ticks.iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }
}

/// Header of the sequence text format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceHeader {
    pub len: usize,
    pub lambda: usize,
    pub mode: Mode,
}

/// Text export: a `# L=.. lambda=.. mode=..` header, then one location per line.
pub fn export_sequence(seq: &GateSequence, header: &SequenceHeader) -> String {
    let mut out = format!(
        "# L={} lambda={} mode={}\n",
        header.len, header.lambda, header.mode
    );
    for b in &seq.locations {
        let _ = writeln!(out, "{b}");
    }
    out
}

pub fn import_sequence(text: &str) -> Result<(SequenceHeader, GateSequence)> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let head = lines
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .ok_or_else(|| Error::Parse("missing '#' header line".into()))?;
    let (mut len, mut lambda, mut mode) = (None, None, None);
    for token in head.split_whitespace() {
        let (k, v) = token
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header token {token:?}")))?;
        let num = || v.parse::<usize>().map_err(|e| Error::Parse(format!("{k}: {e}")));
        match k {
            "L" => len = Some(num()?),
            "lambda" | "λ" => lambda = Some(num()?),
            "mode" => mode = Some(v.parse()?),
            _ => return Err(Error::Parse(format!("unknown header key {k:?}"))),
        }
    }
    let header = SequenceHeader {
        len: len.ok_or_else(|| Error::Parse("header lacks L".into()))?,
        lambda: lambda.ok_or_else(|| Error::Parse("header lacks lambda".into()))?,
        mode: mode.unwrap_or(Mode::Serial),
    };
    let locations = lines
        .map(|l| {
            let b: usize = l.parse().map_err(|e| Error::Parse(format!("location {l:?}: {e}")))?;
            if b >= header.len {
                return Err(Error::OutOfRange { index: b, len: header.len });
            }
            Ok(b)
        })
        .collect::<Result<_>>()?;
    Ok((header, GateSequence { locations }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{ChainState, Gate, GateKind, Spin};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent trace of lone and paired defects on an open window.
    fn brute_force(seq: &[usize], window: usize) -> (Vec<(usize, usize)>, usize) {
        let swap = |p: usize, g: usize| if p == g { g + 1 } else if p == g + 1 { g } else { p };
        let mut failures = Vec::new();
        for x in 0..window {
            for y in x + 2..window {
                let (mut a, mut b) = (x, y);
                let mut met = false;
                for &g in seq {
                    a = swap(a, g);
                    b = swap(b, g);
                    if a.abs_diff(b) == 1 {
                        met = true;
                        break;
                    }
                }
                if !met {
                    failures.push((x, y));
                }
            }
        }
        let disp = (0..window)
            .map(|s| {
                let mut p = s;
                seq.iter()
                    .map(|&g| {
                        p = swap(p, g);
                        p.abs_diff(s)
                    })
                    .max()
                    .unwrap_or(0)
            })
            .max()
            .unwrap();
        (failures, disp)
    }

    #[test]
    fn window_sequence_for_lambda_three() {
        assert_eq!(window_subsequence(2), vec![2, 0, 2]);
        assert_eq!(window_subsequence(3), vec![3, 4, 3, 1, 3, 4, 3, 0, 1, 3, 4, 3]);
        for lambda in 2..=8 {
            assert_eq!(window_subsequence(lambda).len(), lambda * (lambda * lambda - 1) / 2);
        }
    }

    #[test]
    fn generated_sequences_pass_the_verifier() {
        for lambda in 2..=8 {
            let seq = generate_lambda_mixing(2 * lambda, lambda).unwrap();
            let window = &seq.locations[..seq.len() / 2];
            let report = verify_protocol(window, 2 * lambda, lambda).unwrap();
            assert!(report.passed(), "lambda {lambda}: {report:?}");
            assert_eq!(report.max_displacement, lambda - 1);
            let (failures, disp) = brute_force(window, 2 * lambda);
            assert!(failures.is_empty());
            assert_eq!(disp, report.max_displacement);
        }
    }

    #[test]
    fn l6_lambda3_covers_every_placement() {
        let seq = generate_lambda_mixing(6, 3).unwrap();
        assert_eq!(seq.len(), 24);
        // Second domain pair wraps around the ring.
        assert_eq!(&seq.locations[12..15], &[0, 1, 0]);
        let report = verify_protocol(&seq.locations[..12], 6, 3).unwrap();
        assert!(report.winning && report.max_displacement <= 2);
    }

    #[test]
    fn l4_lambda2_displacements() {
        let seq = generate_lambda_mixing(4, 2).unwrap();
        let (failures, disp) = brute_force(&seq.locations[..3], 4);
        assert!(failures.is_empty());
        assert!(disp < 2);
    }

    #[test]
    fn verifier_edge_cases() {
        let empty = verify_protocol(&[], 6, 3).unwrap();
        assert!(!empty.winning);
        assert_eq!(empty.witness, Some((0, 2)));
        assert_eq!(empty.max_displacement, 0);
        let one = verify_protocol(&[0], 3, 2).unwrap();
        assert!(one.winning && one.witness.is_none());
        assert!(verify_protocol(&[5], 6, 3).is_err());
        let crossing = verify_protocol(&[2], 6, 3).unwrap();
        assert!(crossing.crosses_shared_boundary && !crossing.passed());
    }

    #[test]
    fn rejects_bad_lambda() {
        assert!(generate_lambda_mixing(6, 1).is_err());
        assert!(generate_lambda_mixing(10, 3).is_err());
        assert!(generate_lambda_mixing(3, 3).is_err());
    }

    #[test]
    fn parallel_schedule_width() {
        let s = ProtocolSchedule::lambda_mixing(96, 3, Mode::Parallel, 0.01).unwrap();
        assert_eq!(s.tick(0).len(), 16);
        assert_eq!(s.cycle_len(), 24);
        assert!(s.ticks.iter().all(|t| t.len() == 16));
        assert_eq!(s.pair_order[..3], [0, 2, 4]);
        assert!(ProtocolSchedule::lambda_mixing(9, 3, Mode::Parallel, 0.01).is_err());
        assert!(ProtocolSchedule::lambda_mixing(9, 3, Mode::Serial, 0.01).is_ok());
    }

    #[test]
    fn serial_schedule_and_protocol_off() {
        let s = ProtocolSchedule::lambda_mixing(12, 3, Mode::Serial, 0.5).unwrap();
        assert!(s.ticks.iter().all(|t| t.len() == 1));
        assert_eq!(s.tick_interval(), 2.0);
        assert!(s.fires());
        let off = ProtocolSchedule::lambda_mixing(12, 3, Mode::Serial, 0.0).unwrap();
        assert!(!off.fires());
        assert!(ProtocolSchedule::lambda_mixing(12, 3, Mode::Serial, -1.0).is_err());
    }

    #[test]
    fn overlapping_supports_are_rejected() {
        // Blocks 0 and 2 fire together and both touch dual site 2.
        let seq = GateSequence::new(vec![1, 0, 2, 0]);
        let err = ProtocolSchedule::new(&seq, Mode::Parallel, 1.0, 8, 2);
        assert!(matches!(err, Err(Error::OverlappingSupport { .. })), "{err:?}");
    }

    #[test]
    fn serial_and_parallel_share_gates() {
        for (len, lambda) in [(12, 3), (24, 3), (48, 6), (16, 4), (8, 2)] {
            let s = ProtocolSchedule::lambda_mixing(len, lambda, Mode::Serial, 1.0).unwrap();
            let p = ProtocolSchedule::lambda_mixing(len, lambda, Mode::Parallel, 1.0).unwrap();
            assert_eq!(s.gate_multiset(), p.gate_multiset());
        }
    }

    #[test]
    fn simultaneous_gates_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sched = ProtocolSchedule::lambda_mixing(24, 3, Mode::Parallel, 1.0).unwrap();
        for _ in 0..200 {
            let mask: u64 = rng.random::<u64>() & ((1 << 24) - 1);
            for tick in &sched.ticks {
                let mut a = ChainState::from_mask(24, mask).unwrap();
                let mut b = a.clone();
                for &g in tick {
                    a.apply_gate(Gate::new(GateKind::Dswap, g)).unwrap();
                }
                let mut shuffled = tick.clone();
                shuffled.shuffle(&mut rng);
                for &g in &shuffled {
                    b.apply_gate(Gate::new(GateKind::Dswap, g)).unwrap();
                }
                assert_eq!(a, b);
            }
        }
        let _ = Spin::Up;
    }

    #[test]
    fn text_format_round_trip() {
        let seq = generate_lambda_mixing(12, 3).unwrap();
        let header = SequenceHeader { len: 12, lambda: 3, mode: Mode::Parallel };
        let text = export_sequence(&seq, &header);
        assert!(text.starts_with("# L=12 lambda=3 mode=parallel\n"));
        let (h, s) = import_sequence(&text).unwrap();
        assert_eq!((h, s), (header, seq));
        assert!(import_sequence("1\n2\n").is_err());
        assert!(import_sequence("# L=4 lambda=2\n7\n").is_err());
    }
}
