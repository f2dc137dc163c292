//! Compilation of a logical circuit onto code blocks: block layout, qubit
//! accounting, the teleportation schedule, and weight-budget bookkeeping.

use std::collections::BTreeSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::LayeredCircuit;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("overhead target α = {0} must exceed 1")]
    InvalidAlpha(f64),
    #[error("need at least 4 logical qubits, got {0}")]
    TooFewQubits(u64),
    #[error("family {family} has no member with rate ≥ {rate} and at least {m} logical qubits")]
    NoSuchCode { family: String, rate: f64, m: u64 },
    #[error("ε = {0} gives no positive polylog factor")]
    DegenerateEpsilon(f64),
    #[error("invalid cost model: {0}")]
    InvalidCostModel(String),
    #[error("logical circuit layer {layer} holds {gates} non-idle gates")]
    NotSequential { layer: usize, gates: usize },
    #[error("logical circuit has {got} wires, the layout {expected}")]
    WireMismatch { expected: u64, got: usize },
    #[error("unknown code family `{0}` (expected exact-rate, hgp-hamming or hgp-repetition)")]
    UnknownFamily(String),
    #[error("negative or non-finite weight parameter {0}")]
    InvalidWeight(f64),
}

/// Code families available to the layout planner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodeFamily {
    /// Idealized codes with `n = ⌈m/R⌉` for every `m`.
    ExactRate,
    /// Hypergraph products of Hamming codes `[2^r−1, 2^r−1−r]`.
    HgpHamming,
    /// Hypergraph products of repetition codes (one logical qubit).
    HgpRepetition,
}

impl CodeFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ExactRate => "exact-rate",
            Self::HgpHamming => "hgp-hamming",
            Self::HgpRepetition => "hgp-repetition",
        }
    }

    /// Smallest member with rate at least `rate` and at least `m` logical
    /// qubits, as `(n, m, name)`.
    fn smallest(self, rate: f64, m: u64) -> Option<(u64, u64, String)> {
        match self {
            Self::ExactRate => {
                let n = (m as f64 / rate - 1e-9).ceil() as u64;
                Some((n, m, format!("exact-rate[[{n},{m}]]")))
            }
            Self::HgpHamming => (3..=20u32).find_map(|r| {
                let len = (1u64 << r) - 1;
                let k = len - r as u64;
                let n = len * len + (r as u64) * (r as u64);
                let mm = k * k;
                (mm >= m && mm as f64 / n as f64 >= rate).then(|| (n, mm, format!("hgp-hamming{r}")))
            }),
            Self::HgpRepetition => (2..=1000u64).find_map(|k| {
                let n = k * k + (k - 1) * (k - 1);
                (m <= 1 && 1.0 / n as f64 >= rate).then(|| (n, 1, format!("hgp-rep{k}")))
            }),
        }
    }
}

impl FromStr for CodeFamily {
    type Err = CompileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact-rate" => Ok(Self::ExactRate),
            "hgp-hamming" => Ok(Self::HgpHamming),
            "hgp-repetition" => Ok(Self::HgpRepetition),
            other => Err(CompileError::UnknownFamily(other.to_string())),
        }
    }
}

/// How many logical qubits each block should hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockSizeRule {
    /// `⌈√x⌉`.
    #[default]
    SquareRoot,
    /// `⌈x / ln²x⌉`.
    PolylogFraction,
}

impl BlockSizeRule {
    pub fn logical_per_block(self, x: u64) -> u64 {
        let xf = x as f64;
        match self {
            Self::SquareRoot => {
                let mut m = xf.sqrt().ceil() as u64;
                while m > 1 && (m - 1) * (m - 1) >= x {
                    m -= 1;
                }
                while m * m < x {
                    m += 1;
                }
                m
            }
            Self::PolylogFraction => ((xf / xf.ln().powi(2)).ceil() as u64).clamp(1, x),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockLayout {
    /// Logical qubits of the source circuit.
    pub x: u64,
    pub alpha: f64,
    /// Target rate `2/(1+α)`.
    pub rate: f64,
    /// Logical qubits per block.
    pub m: u64,
    /// Physical qubits per block.
    pub n: u64,
    /// Number of blocks `⌈x/m⌉`.
    pub h: u64,
    pub code: String,
    pub family: CodeFamily,
}

impl BlockLayout {
    pub fn realized_rate(&self) -> f64 {
        self.m as f64 / self.n as f64
    }

    pub fn block_of(&self, logical: u64) -> u64 {
        logical / self.m
    }
}

/// Splits `x` logical qubits into blocks of the smallest family member that
/// meets the rate `2/(1+α)` and the block size rule.
pub fn plan_layout(x: u64, alpha: f64, family: CodeFamily, rule: BlockSizeRule) -> Result<BlockLayout, CompileError> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(CompileError::InvalidAlpha(alpha));
    }
    if x < 4 {
        return Err(CompileError::TooFewQubits(x));
    }
    let rate = 2.0 / (1.0 + alpha);
    let want = rule.logical_per_block(x);
    let (n, m, code) = family.smallest(rate, want).ok_or_else(|| CompileError::NoSuchCode {
        family: family.as_str().to_string(),
        rate,
        m: want,
    })?;
    Ok(BlockLayout {
        x,
        alpha,
        rate,
        m,
        n,
        h: x.div_ceil(m),
        code,
        family,
    })
}

/// Cost of preparing one encoded ancilla: `c·n·log^p(x/ε)` qubits for
/// `n^q·log^p(x/ε)` rounds, logarithms in `log_base`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepCostModel {
    pub c: f64,
    pub p: f64,
    pub q: f64,
    #[serde(default = "natural_base")]
    pub log_base: f64,
}

fn natural_base() -> f64 {
    std::f64::consts::E
}

impl Default for PrepCostModel {
    fn default() -> Self {
        Self {
            c: 1.0,
            p: 2.0,
            q: 2.0,
            log_base: natural_base(),
        }
    }
}

impl PrepCostModel {
    fn validate(&self) -> Result<(), CompileError> {
        for (name, v) in [("c", self.c), ("p", self.p), ("q", self.q)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CompileError::InvalidCostModel(format!("{name} = {v}")));
            }
        }
        if !(self.log_base.is_finite() && self.log_base > 1.0) {
            return Err(CompileError::InvalidCostModel(format!("log base {}", self.log_base)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub layout: BlockLayout,
    pub epsilon: f64,
    pub cost_model: PrepCostModel,
    pub data_qubits: u64,
    pub ec_ancilla: u64,
    pub prep_ancilla: u64,
    pub total: u64,
    /// `total / x`.
    pub overhead: f64,
    /// Rounds needed to prepare one ancilla.
    pub prep_rounds: u64,
}

/// Qubit counts for running the layout to target error `ε`.
pub fn resource_report(
    layout: &BlockLayout,
    epsilon: f64,
    model: &PrepCostModel,
) -> Result<ResourceReport, CompileError> {
    model.validate()?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CompileError::DegenerateEpsilon(epsilon));
    }
    let polylog_arg = (layout.x as f64 / epsilon).ln() / model.log_base.ln();
    if polylog_arg <= 1.0 && model.p >= 1.0 {
        return Err(CompileError::DegenerateEpsilon(epsilon));
    }
    let polylog = polylog_arg.powf(model.p);
    let n = layout.n as f64;
    let data_qubits = layout.h * layout.n;
    let ec_ancilla = layout.h * (layout.n - layout.m);
    let prep_ancilla = (model.c * n * polylog).ceil() as u64;
    let prep_rounds = (n.powf(model.q) * polylog).ceil() as u64;
    let total = data_qubits + ec_ancilla + prep_ancilla;
    Ok(ResourceReport {
        layout: layout.clone(),
        epsilon,
        cost_model: *model,
        data_qubits,
        ec_ancilla,
        prep_ancilla,
        total,
        overhead: total as f64 / layout.x as f64,
        prep_rounds,
    })
}

/// Rounds charged to a teleportation: transversal Bell measurement, then the
/// Pauli correction.
pub const TELEPORT_ROUNDS: u64 = 2;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    /// Ancilla preparation for one gate, with an error-correction round on
    /// every data block during each preparation round.
    AncillaPrep {
        gate: usize,
        name: String,
        blocks: Vec<u64>,
        rounds: u64,
        concurrent_ec_rounds: u64,
    },
    Teleport {
        gate: usize,
        name: String,
        blocks: Vec<u64>,
        rounds: u64,
    },
    /// One error-correction round on every data block.
    EcRound,
}

impl Phase {
    pub fn rounds(&self) -> u64 {
        match self {
            Self::AncillaPrep { rounds, .. } | Self::Teleport { rounds, .. } => *rounds,
            Self::EcRound => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub data_blocks: u64,
    pub prep_rounds: u64,
    pub phases: Vec<Phase>,
}

impl Schedule {
    pub fn length_rounds(&self) -> u64 {
        self.phases.iter().map(Phase::rounds).sum()
    }

    pub fn teleports(&self) -> usize {
        self.phases
            .iter()
            .filter(|p| matches!(p, Phase::Teleport { .. }))
            .count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }
}

/// Unrolls a sequential logical circuit: every non-idle gate becomes
/// ancilla preparation (with concurrent error correction), teleportation and
/// one error-correction round; an all-idle layer becomes one round.
pub fn schedule(
    circuit: &LayeredCircuit,
    layout: &BlockLayout,
    report: &ResourceReport,
) -> Result<Schedule, CompileError> {
    if circuit.quantum_wires() as u64 > layout.h * layout.m {
        return Err(CompileError::WireMismatch {
            expected: layout.h * layout.m,
            got: circuit.quantum_wires(),
        });
    }
    let mut phases = Vec::new();
    let mut gate_index = 0;
    for (layer, gates) in circuit.layers().iter().enumerate() {
        let active: Vec<_> = gates.iter().filter(|g| !g.is_idle()).collect();
        match active.as_slice() {
            [] => phases.push(Phase::EcRound),
            [g] => {
                let blocks: Vec<u64> = g
                    .operands
                    .iter()
                    .map(|&q| layout.block_of(q as u64))
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                let name = g.kind.name().to_string();
                phases.push(Phase::AncillaPrep {
                    gate: gate_index,
                    name: name.clone(),
                    blocks: blocks.clone(),
                    rounds: report.prep_rounds,
                    concurrent_ec_rounds: report.prep_rounds,
                });
                phases.push(Phase::Teleport {
                    gate: gate_index,
                    name,
                    blocks,
                    rounds: TELEPORT_ROUNDS,
                });
                phases.push(Phase::EcRound);
                gate_index += 1;
            }
            many => {
                return Err(CompileError::NotSequential {
                    layer,
                    gates: many.len(),
                })
            }
        }
    }
    Ok(Schedule {
        data_blocks: layout.h,
        prep_rounds: report.prep_rounds,
        phases,
    })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleViolation {
    #[error("phase {0}: preparation without error correction on every round")]
    UncoveredPrep(usize),
    #[error("phase {0}: a preparation starts while another gate is in flight")]
    OverlappingGates(usize),
    #[error("phase {0}: teleportation without a matching preparation")]
    UnpreparedTeleport(usize),
    #[error("phase {0}: block {1} is outside the layout")]
    BlockOutOfRange(usize, u64),
    #[error("a gate is still in flight at the end of the schedule")]
    Unfinished,
}

/// Checks that at most one gate is in flight at a time and that every
/// preparation round is covered by error correction on all data blocks.
pub fn validate_schedule(s: &Schedule) -> Result<(), ScheduleViolation> {
    let mut in_flight: Option<usize> = None;
    for (i, p) in s.phases.iter().enumerate() {
        match p {
            Phase::AncillaPrep {
                gate,
                blocks,
                rounds,
                concurrent_ec_rounds,
                ..
            } => {
                if in_flight.is_some() {
                    return Err(ScheduleViolation::OverlappingGates(i));
                }
                if concurrent_ec_rounds != rounds {
                    return Err(ScheduleViolation::UncoveredPrep(i));
                }
                if let Some(&b) = blocks.iter().find(|&&b| b >= s.data_blocks) {
                    return Err(ScheduleViolation::BlockOutOfRange(i, b));
                }
                in_flight = Some(*gate);
            }
            Phase::Teleport { gate, .. } => {
                if in_flight != Some(*gate) {
                    return Err(ScheduleViolation::UnpreparedTeleport(i));
                }
                in_flight = None;
            }
            Phase::EcRound => {}
        }
    }
    if in_flight.is_some() {
        return Err(ScheduleViolation::Unfinished);
    }
    Ok(())
}

/// Parameters of the reduced-weight bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightKnobs {
    /// Weight added by every error-correction round.
    pub growth: f64,
    /// Weight added to each touched block by a teleportation.
    pub injection: f64,
    /// Input budget a block must stay within.
    pub t_data: f64,
    /// Certified residual weight after a round.
    pub t_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightTrajectory {
    pub steps: u64,
    pub final_weights: Vec<f64>,
    pub max_weights: Vec<f64>,
    /// First (step, block) whose weight exceeded `t_data`.
    pub first_flag: Option<(u64, u64)>,
    /// Weights after each phase, if recorded.
    pub history: Vec<Vec<f64>>,
}

impl WeightTrajectory {
    pub fn flagged(&self) -> bool {
        self.first_flag.is_some()
    }
}

/// Iterates the per-block weight map over `cycles` passes of the schedule:
/// a round takes `t ↦ min(t, t_residual) + growth` on every block (once per
/// round, including rounds concurrent with preparation) and a teleportation
/// adds `injection` to its blocks.
pub fn simulate_schedule_logical(
    s: &Schedule,
    knobs: &WeightKnobs,
    initial: &[f64],
    cycles: u64,
    record: bool,
) -> Result<WeightTrajectory, CompileError> {
    for v in [knobs.growth, knobs.injection, knobs.t_data, knobs.t_residual]
        .into_iter()
        .chain(initial.iter().copied())
    {
        if !(v.is_finite() && v >= 0.0) {
            return Err(CompileError::InvalidWeight(v));
        }
    }
    let h = s.data_blocks as usize;
    let mut w: Vec<f64> = (0..h).map(|i| initial.get(i).copied().unwrap_or(0.0)).collect();
    let mut max_w = w.clone();
    let mut first_flag = None;
    let mut history = Vec::new();
    let mut step = 0u64;
    // The round map is monotone, so repeated rounds stop changing weights
    // once they reach a fixed point.
    let ec = |w: &mut Vec<f64>, rounds: u64| {
        for _ in 0..rounds {
            let mut changed = false;
            for t in w.iter_mut() {
                let next = t.min(knobs.t_residual) + knobs.growth;
                changed |= next != *t;
                *t = next;
            }
            if !changed {
                break;
            }
        }
    };
    for _ in 0..cycles {
        for p in &s.phases {
            match p {
                Phase::EcRound => ec(&mut w, 1),
                Phase::AncillaPrep {
                    concurrent_ec_rounds, ..
                } => ec(&mut w, *concurrent_ec_rounds),
                Phase::Teleport { blocks, .. } => {
                    for &b in blocks {
                        if let Some(t) = w.get_mut(b as usize) {
                            *t += knobs.injection;
                        }
                    }
                }
            }
            for (i, &t) in w.iter().enumerate() {
                max_w[i] = max_w[i].max(t);
                if first_flag.is_none() && t > knobs.t_data {
                    first_flag = Some((step, i as u64));
                }
            }
            if record {
                history.push(w.clone());
            }
            step += 1;
        }
    }
    Ok(WeightTrajectory {
        steps: step,
        final_weights: w,
        max_weights: max_w,
        first_flag,
        history,
    })
}

/// `(x, total, overhead)` for each `x` in the grid.
pub fn overhead_grid(
    xs: &[u64],
    alpha: f64,
    family: CodeFamily,
    epsilon: f64,
    model: &PrepCostModel,
) -> Result<Vec<(u64, u64, f64)>, CompileError> {
    xs.iter()
        .map(|&x| {
            let layout = plan_layout(x, alpha, family, BlockSizeRule::SquareRoot)?;
            let r = resource_report(&layout, epsilon, model)?;
            Ok((x, r.total, r.overhead))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::code::{hamming_7_4, hypergraph_product};

    fn layout(x: u64, alpha: f64) -> BlockLayout {
        plan_layout(x, alpha, CodeFamily::ExactRate, BlockSizeRule::SquareRoot).unwrap()
    }

    #[test]
    fn layout_examples() {
        let l = layout(10_000, 3.0);
        assert_eq!(l.rate, 0.5);
        assert_eq!((l.m, l.n, l.h), (100, 200, 100));
        assert!(matches!(
            plan_layout(100, 1.0, CodeFamily::ExactRate, BlockSizeRule::SquareRoot),
            Err(CompileError::InvalidAlpha(_))
        ));
        let l = layout(4, 3.0);
        assert_eq!((l.m, l.h), (2, 2));
        assert!(matches!(
            plan_layout(3, 3.0, CodeFamily::ExactRate, BlockSizeRule::SquareRoot),
            Err(CompileError::TooFewQubits(3))
        ));
    }

    #[test]
    fn hamming_family_matches_construction() {
        let code = hypergraph_product(&hamming_7_4(), &hamming_7_4()).unwrap();
        assert_eq!((code.n(), code.m()), (58, 16));
        let l = plan_layout(16, 7.0, CodeFamily::HgpHamming, BlockSizeRule::SquareRoot).unwrap();
        assert_eq!((l.n, l.m), (58, 16));
        let l = plan_layout(10_000, 3.0, CodeFamily::HgpHamming, BlockSizeRule::SquareRoot).unwrap();
        assert_eq!((l.n, l.m, l.h), (241, 121, 83));
        assert!(l.realized_rate() >= 0.5);
        assert!(matches!(
            plan_layout(100, 3.0, CodeFamily::HgpRepetition, BlockSizeRule::SquareRoot),
            Err(CompileError::NoSuchCode { .. })
        ));
    }

    #[test]
    fn square_root_rule_is_exact() {
        assert_eq!(BlockSizeRule::SquareRoot.logical_per_block(10_000), 100);
        assert_eq!(BlockSizeRule::SquareRoot.logical_per_block(10_001), 101);
        assert_eq!(BlockSizeRule::SquareRoot.logical_per_block(10_000_000), 3163);
        assert!(BlockSizeRule::PolylogFraction.logical_per_block(10_000) > 100);
    }

    #[test]
    fn report_example() {
        let l = layout(10_000, 3.0);
        let r = resource_report(&l, 1e-6, &PrepCostModel::default()).unwrap();
        assert_eq!(r.data_qubits, 20_000);
        assert_eq!(r.ec_ancilla, 10_000);
        assert_eq!(r.total, 30_000 + r.prep_ancilla);
        let polylog = (1e10f64).ln().powi(2);
        assert_eq!(r.prep_ancilla, (200.0 * polylog).ceil() as u64);
        assert_eq!(r.prep_rounds, (40_000.0 * polylog).ceil() as u64);
        assert!(matches!(
            resource_report(&l, 1.0, &PrepCostModel::default()),
            Err(CompileError::DegenerateEpsilon(_))
        ));
        assert!(matches!(
            resource_report(&l, 0.0, &PrepCostModel::default()),
            Err(CompileError::DegenerateEpsilon(_))
        ));
    }

    #[test]
    fn overhead_decreases_toward_alpha() {
        let xs = [1_000, 10_000, 100_000, 1_000_000, 10_000_000];
        for alpha in [2.0, 3.0, 5.0] {
            let grid = overhead_grid(&xs, alpha, CodeFamily::ExactRate, 1e-6, &PrepCostModel::default()).unwrap();
            for pair in grid.windows(2) {
                assert!(pair[1].2 < pair[0].2);
            }
            assert!(grid.iter().all(|g| g.2 > alpha - 1e-3));
        }
    }

    fn logical(wires: usize, layers: Vec<Vec<Gate>>) -> LayeredCircuit {
        LayeredCircuit::from_layers(wires, layers).unwrap()
    }

    fn setup() -> (BlockLayout, ResourceReport) {
        let l = layout(4, 3.0);
        let mut r = resource_report(&l, 1e-3, &PrepCostModel::default()).unwrap();
        r.prep_rounds = 5;
        (l, r)
    }

    #[test]
    fn schedule_examples() {
        let (l, r) = setup();
        let s = schedule(&logical(4, vec![]), &l, &r).unwrap();
        assert!(s.phases.is_empty());

        let s = schedule(&logical(4, vec![vec![Gate::h(2)]]), &l, &r).unwrap();
        assert_eq!(s.phases.len(), 3);
        assert!(
            matches!(&s.phases[0], Phase::AncillaPrep { blocks, rounds: 5, concurrent_ec_rounds: 5, .. } if blocks == &vec![1])
        );
        assert!(matches!(&s.phases[1], Phase::Teleport { rounds: 2, .. }));
        assert_eq!(s.phases[2], Phase::EcRound);
        assert_eq!(s.length_rounds(), 5 + 3);

        let c = logical(
            4,
            vec![vec![Gate::h(0)], vec![], vec![Gate::cnot(0, 3)], vec![Gate::s(1)]],
        );
        let s = schedule(&c, &l, &r).unwrap();
        assert_eq!(s.teleports(), 3);
        assert_eq!(s.length_rounds(), 3 * (5 + 3) + 1);
        validate_schedule(&s).unwrap();

        let par = logical(4, vec![vec![Gate::h(0), Gate::h(1)]]);
        assert!(matches!(
            schedule(&par, &l, &r),
            Err(CompileError::NotSequential { layer: 0, gates: 2 })
        ));
    }

    #[test]
    fn validator_catches_overlap() {
        let (l, r) = setup();
        let mut s = schedule(&logical(4, vec![vec![Gate::h(0)], vec![Gate::h(1)]]), &l, &r).unwrap();
        s.phases.swap(1, 3);
        assert!(validate_schedule(&s).is_err());
        let mut s = schedule(&logical(4, vec![vec![Gate::h(0)]]), &l, &r).unwrap();
        if let Phase::AncillaPrep {
            concurrent_ec_rounds, ..
        } = &mut s.phases[0]
        {
            *concurrent_ec_rounds = 1;
        }
        assert_eq!(validate_schedule(&s), Err(ScheduleViolation::UncoveredPrep(0)));
    }

    fn knobs(growth: f64, injection: f64) -> WeightKnobs {
        WeightKnobs {
            growth,
            injection,
            t_data: 1.0,
            t_residual: 0.0,
        }
    }

    #[test]
    fn weight_trajectories() {
        let (l, r) = setup();
        let s = schedule(&logical(4, vec![vec![Gate::h(0)], vec![Gate::cnot(1, 2)]]), &l, &r).unwrap();
        let t = simulate_schedule_logical(&s, &knobs(0.0, 0.0), &[0.0, 0.0], 10, true).unwrap();
        assert!(t.history.iter().all(|w| w == &vec![0.0, 0.0]));
        assert!(!t.flagged());

        let t = simulate_schedule_logical(&s, &knobs(0.0, 1.0), &[0.0, 0.0], 1_000_000 / 6, false).unwrap();
        assert!(t.steps >= 999_990);
        assert!(!t.flagged());

        let t = simulate_schedule_logical(&s, &knobs(0.0, 1.5), &[0.0, 0.0], 3, false).unwrap();
        assert_eq!(t.first_flag, Some((1, 0)));
    }

    #[test]
    fn sustainability_threshold_is_exact() {
        let (l, r) = setup();
        let s = schedule(&logical(4, vec![vec![Gate::h(0)]]), &l, &r).unwrap();
        for (g, w) in [(0.25, 0.75), (0.5, 0.5), (0.3, 0.8), (0.0, 1.01), (0.6, 0.3)] {
            let k = knobs(g, w);
            let t = simulate_schedule_logical(&s, &k, &[0.0, 0.0], 20, false).unwrap();
            assert_eq!(t.flagged(), k.t_residual + g + w > k.t_data, "g={g} w={w}");
        }
    }
}
