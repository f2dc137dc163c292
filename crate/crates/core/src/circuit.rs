//! Layered circuit IR, syndrome-extraction synthesis, sequentialization and
//! light-cone ("shade") analysis.
//!
//! A circuit is a list of layers. Every quantum wire is touched by exactly one
//! gate per layer; wires without a real gate carry an explicit [`GateKind::Idle`],
//! so every (layer, position) pair is a noisy location. Measurements write
//! classical bits numbered by their order of appearance in the circuit.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::CssCode;
use crate::gf2::BinaryMatrix;
use crate::pauli::PauliOp;

/// Largest wire count accepted from serialized circuits.
pub const MAX_WIRES: usize = 1 << 16;
/// Largest layer count accepted from serialized circuits.
pub const MAX_LAYERS: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("wire {wire} is out of range for a circuit with {wires} wires")]
    WireOutOfRange { wire: usize, wires: usize },
    #[error("wire {wire} is used twice in layer {layer}")]
    DuplicateOperand { layer: usize, wire: usize },
    #[error("{kind} takes {expected} operand(s), got {got}")]
    ArityMismatch { kind: String, expected: usize, got: usize },
    #[error("layer {layer}: wire {wire} was measured and must be re-prepared before use")]
    MeasuredWireUsed { layer: usize, wire: usize },
    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("code has no stabilizers")]
    EmptyCode,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    PrepZ,
    PrepX,
    Cnot,
    Cz,
    H,
    S,
    MeasZ,
    MeasX,
    Idle,
    Pauli(PauliOp),
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Cz => 2,
            GateKind::Pauli(p) => p.num_qubits(),
            _ => 1,
        }
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, GateKind::MeasZ | GateKind::MeasX)
    }

    pub fn is_prep(&self) -> bool {
        matches!(self, GateKind::PrepZ | GateKind::PrepX)
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::PrepZ => "PrepZ",
            GateKind::PrepX => "PrepX",
            GateKind::Cnot => "CNOT",
            GateKind::Cz => "CZ",
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::MeasZ => "MeasZ",
            GateKind::MeasX => "MeasX",
            GateKind::Idle => "Idle",
            GateKind::Pauli(_) => "Pauli",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateKind::Pauli(p) => write!(f, "Pauli({p})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub operands: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, operands: Vec<usize>) -> Result<Self, CircuitError> {
        let expected = kind.arity();
        if operands.len() != expected || expected == 0 || expected > 2 {
            return Err(CircuitError::ArityMismatch {
                kind: kind.name().to_string(),
                expected,
                got: operands.len(),
            });
        }
        if expected == 2 && operands[0] == operands[1] {
            return Err(CircuitError::DuplicateOperand {
                layer: 0,
                wire: operands[0],
            });
        }
        Ok(Self { kind, operands })
    }

    fn unchecked(kind: GateKind, operands: Vec<usize>) -> Self {
        Self { kind, operands }
    }

    pub fn prep_z(q: usize) -> Self {
        Self::unchecked(GateKind::PrepZ, vec![q])
    }

    pub fn prep_x(q: usize) -> Self {
        Self::unchecked(GateKind::PrepX, vec![q])
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        assert_ne!(control, target, "CNOT needs distinct wires");
        Self::unchecked(GateKind::Cnot, vec![control, target])
    }

    pub fn cz(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "CZ needs distinct wires");
        Self::unchecked(GateKind::Cz, vec![a, b])
    }

    pub fn h(q: usize) -> Self {
        Self::unchecked(GateKind::H, vec![q])
    }

    pub fn s(q: usize) -> Self {
        Self::unchecked(GateKind::S, vec![q])
    }

    pub fn meas_z(q: usize) -> Self {
        Self::unchecked(GateKind::MeasZ, vec![q])
    }

    pub fn meas_x(q: usize) -> Self {
        Self::unchecked(GateKind::MeasX, vec![q])
    }

    pub fn idle(q: usize) -> Self {
        Self::unchecked(GateKind::Idle, vec![q])
    }

    pub fn arity(&self) -> usize {
        self.operands.len()
    }

    pub fn is_idle(&self) -> bool {
        self.kind == GateKind::Idle
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.kind, self.operands)
    }
}

/// A (layer, position) pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Location {
    pub layer: usize,
    pub position: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LayeredCircuit {
    quantum_wires: usize,
    classical_wires: usize,
    layers: Vec<Vec<Gate>>,
    measured: Vec<bool>,
}

impl LayeredCircuit {
    pub fn new(quantum_wires: usize) -> Self {
        Self {
            quantum_wires,
            classical_wires: 0,
            layers: Vec::new(),
            measured: vec![false; quantum_wires],
        }
    }

    pub fn from_layers(quantum_wires: usize, layers: Vec<Vec<Gate>>) -> Result<Self, CircuitError> {
        let mut c = Self::new(quantum_wires);
        for layer in layers {
            c.push_layer(layer)?;
        }
        Ok(c)
    }

    /// Validates a layer, fills untouched wires with `Idle` and sorts gates by
    /// their first operand.
    pub fn push_layer(&mut self, gates: Vec<Gate>) -> Result<(), CircuitError> {
        let layer = self.layers.len();
        let mut used = vec![false; self.quantum_wires];
        for g in &gates {
            let expected = g.kind.arity();
            if g.operands.len() != expected {
                return Err(CircuitError::ArityMismatch {
                    kind: g.kind.name().to_string(),
                    expected,
                    got: g.operands.len(),
                });
            }
            for &w in &g.operands {
                if w >= self.quantum_wires {
                    return Err(CircuitError::WireOutOfRange {
                        wire: w,
                        wires: self.quantum_wires,
                    });
                }
                if used[w] {
                    return Err(CircuitError::DuplicateOperand { layer, wire: w });
                }
                used[w] = true;
                if self.measured[w] && !g.kind.is_prep() && !g.is_idle() {
                    return Err(CircuitError::MeasuredWireUsed { layer, wire: w });
                }
            }
        }
        let mut gates = gates;
        for (w, &u) in used.iter().enumerate() {
            if !u {
                gates.push(Gate::idle(w));
            }
        }
        gates.sort_by_key(|g| g.operands[0]);
        for g in &gates {
            let w = g.operands[0];
            if g.kind.is_measurement() {
                self.measured[w] = true;
                self.classical_wires += 1;
            } else if g.kind.is_prep() {
                self.measured[w] = false;
            }
        }
        self.layers.push(gates);
        Ok(())
    }

    pub fn quantum_wires(&self) -> usize {
        self.quantum_wires
    }

    pub fn classical_wires(&self) -> usize {
        self.classical_wires
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Vec<Gate>] {
        &self.layers
    }

    pub fn layer(&self, i: usize) -> &[Gate] {
        &self.layers[i]
    }

    pub fn gate(&self, loc: Location) -> Option<&Gate> {
        self.layers.get(loc.layer)?.get(loc.position)
    }

    /// Number of locations (gates, idles included) in each layer.
    pub fn location_counts(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    pub fn num_locations(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn locations(&self) -> impl Iterator<Item = (Location, &Gate)> + '_ {
        self.layers.iter().enumerate().flat_map(|(layer, gates)| {
            gates
                .iter()
                .enumerate()
                .map(move |(position, g)| (Location { layer, position }, g))
        })
    }

    /// Non-idle gates in the busiest layer.
    pub fn max_parallelism(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.iter().filter(|g| !g.is_idle()).count())
            .max()
            .unwrap_or(0)
    }

    /// Whether every layer holds at most one non-idle gate.
    pub fn is_sequential(&self) -> bool {
        self.max_parallelism() <= 1
    }

    /// Checks `n ≤ t_i < 2n` on every layer.
    pub fn satisfies_location_bound(&self, n: usize) -> bool {
        self.location_counts().iter().all(|&t| n <= t && t < 2 * n)
    }

    /// One layer per line, each a JSON array of `{kind, operands}` objects.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for layer in &self.layers {
            let records: Vec<GateRecord> = layer.iter().map(GateRecord::from).collect();
            out.push_str(&serde_json::to_string(&records).expect("plain data serializes"));
            out.push('\n');
        }
        out
    }

    /// Parses [`LayeredCircuit::to_jsonl`] output. Wires missing from a layer
    /// are idle; the wire count is one past the largest operand seen.
    pub fn from_jsonl(text: &str) -> Result<Self, CircuitError> {
        let mut layers = Vec::new();
        let mut wires = 0usize;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            if layers.len() >= MAX_LAYERS {
                return Err(CircuitError::Parse {
                    line: line_no,
                    message: format!("more than {MAX_LAYERS} layers"),
                });
            }
            let records: Vec<GateRecord> = serde_json::from_str(line).map_err(|e| CircuitError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            let mut gates = Vec::with_capacity(records.len());
            for r in records {
                let gate = r
                    .into_gate()
                    .map_err(|message| CircuitError::Parse { line: line_no, message })?;
                for &w in &gate.operands {
                    if w >= MAX_WIRES {
                        return Err(CircuitError::Parse {
                            line: line_no,
                            message: format!("wire {w} exceeds the maximum {MAX_WIRES}"),
                        });
                    }
                    wires = wires.max(w + 1);
                }
                gates.push(gate);
            }
            layers.push(gates);
        }
        Self::from_layers(wires, layers)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateRecord {
    kind: String,
    operands: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pauli: Option<String>,
}

impl From<&Gate> for GateRecord {
    fn from(g: &Gate) -> Self {
        let pauli = match &g.kind {
            GateKind::Pauli(p) => Some(p.to_string()),
            _ => None,
        };
        Self {
            kind: g.kind.name().to_string(),
            operands: g.operands.clone(),
            pauli,
        }
    }
}

impl GateRecord {
    fn into_gate(self) -> Result<Gate, String> {
        let kind = match self.kind.as_str() {
            "PrepZ" => GateKind::PrepZ,
            "PrepX" => GateKind::PrepX,
            "CNOT" => GateKind::Cnot,
            "CZ" => GateKind::Cz,
            "H" => GateKind::H,
            "S" => GateKind::S,
            "MeasZ" => GateKind::MeasZ,
            "MeasX" => GateKind::MeasX,
            "Idle" => GateKind::Idle,
            "Pauli" => {
                let label = self.pauli.as_deref().ok_or("Pauli gate needs a `pauli` label")?;
                let p = PauliOp::parse(label).ok_or_else(|| format!("bad Pauli label `{label}`"))?;
                if p.num_qubits() > 2 {
                    return Err(format!("Pauli label `{label}` is longer than two qubits"));
                }
                GateKind::Pauli(p)
            }
            other => return Err(format!("unknown gate kind `{other}`")),
        };
        Gate::new(kind, self.operands).map_err(|e| e.to_string())
    }
}

/// Wire layout of a syndrome-extraction circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SyndromeLayout {
    pub data: usize,
    pub z_checks: usize,
    pub x_checks: usize,
}

impl SyndromeLayout {
    pub fn of(code: &CssCode) -> Self {
        Self {
            data: code.n(),
            z_checks: code.num_z_checks(),
            x_checks: code.num_x_checks(),
        }
    }

    pub fn wires(&self) -> usize {
        self.data + self.z_checks + self.x_checks
    }

    pub fn z_ancilla(&self, check: usize) -> usize {
        self.data + check
    }

    pub fn x_ancilla(&self, check: usize) -> usize {
        self.data + self.z_checks + check
    }
}

/// Prep layer, X-check CNOT layers, Z-check CNOT layers, measurement layer.
///
/// Data occupy wires `0..n`, Z-check ancillas come next and X-check ancillas
/// last, so the measurement record is in syndrome order. X-checks use
/// `PrepX`, `CNOT(ancilla → data)`, `MeasX`; Z-checks use `PrepZ`,
/// `CNOT(data → ancilla)`, `MeasZ`. CNOT layers come from a proper edge
/// coloring of each Tanner graph, so the X and Z phases take exactly their
/// maximum degree in layers.
pub fn build_syndrome_circuit(code: &CssCode) -> Result<LayeredCircuit, CircuitError> {
    if code.num_checks() == 0 {
        return Err(CircuitError::EmptyCode);
    }
    let layout = SyndromeLayout::of(code);
    let mut circuit = LayeredCircuit::new(layout.wires());

    let mut prep = Vec::with_capacity(code.num_checks());
    for c in 0..layout.z_checks {
        prep.push(Gate::prep_z(layout.z_ancilla(c)));
    }
    for c in 0..layout.x_checks {
        prep.push(Gate::prep_x(layout.x_ancilla(c)));
    }
    circuit.push_layer(prep)?;

    for layer in colored_layers(code.hx()) {
        let gates = layer
            .into_iter()
            .map(|(c, q)| Gate::cnot(layout.x_ancilla(c), q))
            .collect();
        circuit.push_layer(gates)?;
    }
    for layer in colored_layers(code.hz()) {
        let gates = layer
            .into_iter()
            .map(|(c, q)| Gate::cnot(q, layout.z_ancilla(c)))
            .collect();
        circuit.push_layer(gates)?;
    }

    let mut meas = Vec::with_capacity(code.num_checks());
    for c in 0..layout.z_checks {
        meas.push(Gate::meas_z(layout.z_ancilla(c)));
    }
    for c in 0..layout.x_checks {
        meas.push(Gate::meas_x(layout.x_ancilla(c)));
    }
    circuit.push_layer(meas)?;
    Ok(circuit)
}

/// Groups the (check, qubit) edges of `h` by color.
fn colored_layers(h: &BinaryMatrix) -> Vec<Vec<(usize, usize)>> {
    let colored = color_tanner_edges(h);
    let colors = colored.iter().flatten().map(|&(_, _, c)| c + 1).max().unwrap_or(0);
    let mut layers = vec![Vec::new(); colors];
    for (c, q, color) in colored.into_iter().flatten() {
        layers[color].push((c, q));
    }
    layers
}

/// Proper edge coloring of the bipartite Tanner graph of `h` with exactly
/// max-degree colors (König), via alternating-path recoloring.
/// Returns, per check, the `(check, qubit, color)` triples.
pub fn color_tanner_edges(h: &BinaryMatrix) -> Vec<Vec<(usize, usize, usize)>> {
    let checks = h.num_rows();
    let qubits = h.num_cols();
    let degree = h.row_weights().into_iter().chain(h.column_weights()).max().unwrap_or(0);
    // at_check[c][color] = qubit, at_qubit[q][color] = check
    let mut at_check = vec![vec![None::<usize>; degree]; checks];
    let mut at_qubit = vec![vec![None::<usize>; degree]; qubits];

    for c in 0..checks {
        for q in h.row(c).ones() {
            let a = (0..degree)
                .find(|&k| at_check[c][k].is_none())
                .expect("free color at check");
            let b = (0..degree)
                .find(|&k| at_qubit[q][k].is_none())
                .expect("free color at qubit");
            if at_qubit[q][a].is_some() {
                // flip the a/b alternating path that starts at q with color a
                let mut path = Vec::new();
                let mut on_qubit_side = true;
                let mut node = q;
                let mut color = a;
                loop {
                    let next = if on_qubit_side {
                        at_qubit[node][color]
                    } else {
                        at_check[node][color]
                    };
                    let Some(next) = next else { break };
                    let (ec, eq) = if on_qubit_side { (next, node) } else { (node, next) };
                    path.push((ec, eq, color));
                    node = next;
                    on_qubit_side = !on_qubit_side;
                    color = if color == a { b } else { a };
                }
                for &(ec, eq, col) in &path {
                    at_check[ec][col] = None;
                    at_qubit[eq][col] = None;
                }
                for &(ec, eq, col) in &path {
                    let new = if col == a { b } else { a };
                    at_check[ec][new] = Some(eq);
                    at_qubit[eq][new] = Some(ec);
                }
            }
            at_check[c][a] = Some(q);
            at_qubit[q][a] = Some(c);
        }
    }
    at_check
        .iter()
        .enumerate()
        .map(|(c, colors)| {
            colors
                .iter()
                .enumerate()
                .filter_map(|(k, q)| q.map(|q| (c, q, k)))
                .collect()
        })
        .collect()
}

/// Wires reachable from `seed` through layers `from..to`.
///
/// Two-qubit gates merge their operands' cones; a preparation resets its wire
/// and removes it from the cone.
pub fn shade(
    circuit: &LayeredCircuit,
    seed: &BTreeSet<usize>,
    from: usize,
    to: usize,
) -> Result<BTreeSet<usize>, CircuitError> {
    if to > circuit.depth() {
        return Err(CircuitError::IndexOutOfRange {
            index: to,
            len: circuit.depth(),
        });
    }
    if from > to {
        return Err(CircuitError::IndexOutOfRange { index: from, len: to });
    }
    if let Some(&w) = seed.iter().find(|&&w| w >= circuit.quantum_wires()) {
        return Err(CircuitError::WireOutOfRange {
            wire: w,
            wires: circuit.quantum_wires(),
        });
    }
    let mut cone = vec![false; circuit.quantum_wires()];
    for &w in seed {
        cone[w] = true;
    }
    for layer in &circuit.layers[from..to] {
        for g in layer {
            match g.operands.as_slice() {
                [a, b] => {
                    if cone[*a] || cone[*b] {
                        cone[*a] = true;
                        cone[*b] = true;
                    }
                }
                [a] if g.kind.is_prep() => cone[*a] = false,
                _ => {}
            }
        }
    }
    Ok(cone.iter().enumerate().filter_map(|(w, &c)| c.then_some(w)).collect())
}

/// One non-idle gate per layer, in layer order then position order. Layers
/// that hold only idles are kept as a single idle layer.
pub fn sequentialize(circuit: &LayeredCircuit) -> LayeredCircuit {
    let mut out = LayeredCircuit::new(circuit.quantum_wires());
    for layer in circuit.layers() {
        let mut any = false;
        for g in layer.iter().filter(|g| !g.is_idle()) {
            any = true;
            out.push_layer(vec![g.clone()]).expect("gates of a valid circuit");
        }
        if !any {
            out.push_layer(Vec::new()).expect("idle layer");
        }
    }
    out
}
