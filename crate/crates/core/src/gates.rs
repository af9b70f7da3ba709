//! Gate set, placed gates, circuits and device connectivity.
//!
//! Gate matrix conventions:
//!
//! - `Rz(phi) = diag(e^{-i phi/2}, e^{+i phi/2})` (differs from some toolkits
//!   by an overall global phase),
//! - `Rx`, `Ry` are the standard half-angle rotations,
//! - `PhaseE(delta) = diag(1, e^{i delta})`,
//! - `U2(delta, x1, x2, x3) = e^{-i delta} Rz(x1) Ry(x2) Rz(x3)`,
//! - `ControlledU2` applies that matrix on the target when the control is set.
//!
//! Circuits serialize to a line-oriented text format, one gate per line:
//! `KIND q0[,q1[,q2]] [angle...]` with angles in decimal radians.

use crate::sim::GateAction;
use crate::{Error, Result};
use num_complex::Complex64;
use std::collections::BTreeSet;
use std::fmt;

/// The gate vocabulary used by every circuit in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    Rx,
    Ry,
    Rz,
    /// `diag(1, e^{i delta})` on one qubit.
    PhaseE,
    Cnot,
    Swap,
    Toffoli,
    /// Controlled 2x2 unitary given as ZYZ Euler angles `(delta, x1, x2, x3)`.
    ControlledU2,
    /// Uncontrolled 2x2 unitary given as ZYZ Euler angles.
    U2,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::X
            | GateKind::Y
            | GateKind::Z
            | GateKind::H
            | GateKind::Rx
            | GateKind::Ry
            | GateKind::Rz
            | GateKind::PhaseE
            | GateKind::U2 => 1,
            GateKind::Cnot | GateKind::Swap | GateKind::ControlledU2 => 2,
            GateKind::Toffoli => 3,
        }
    }

    pub fn param_count(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::PhaseE => 1,
            GateKind::U2 | GateKind::ControlledU2 => 4,
            _ => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::H => "H",
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::PhaseE => "E",
            GateKind::Cnot => "CNOT",
            GateKind::Swap => "SWAP",
            GateKind::Toffoli => "TOFFOLI",
            GateKind::ControlledU2 => "CU2",
            GateKind::U2 => "U2",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Ok(match s {
            "X" => GateKind::X,
            "Y" => GateKind::Y,
            "Z" => GateKind::Z,
            "H" => GateKind::H,
            "RX" => GateKind::Rx,
            "RY" => GateKind::Ry,
            "RZ" => GateKind::Rz,
            "E" => GateKind::PhaseE,
            "CNOT" => GateKind::Cnot,
            "SWAP" => GateKind::Swap,
            "TOFFOLI" => GateKind::Toffoli,
            "CU2" => GateKind::ControlledU2,
            "U2" => GateKind::U2,
            other => return Err(Error::Parse(format!("unknown gate kind `{other}`"))),
        })
    }
}

/// 2x2 matrix helpers, row-major `[m00, m01, m10, m11]`.
pub mod mat2 {
    use num_complex::Complex64;

    pub const fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    pub fn x() -> [Complex64; 4] {
        [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]
    }

    pub fn y() -> [Complex64; 4] {
        [c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]
    }

    pub fn z() -> [Complex64; 4] {
        [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]
    }

    pub fn h() -> [Complex64; 4] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        [c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]
    }

    pub fn rx(phi: f64) -> [Complex64; 4] {
        let (ch, sh) = ((phi / 2.0).cos(), (phi / 2.0).sin());
        [c(ch, 0.0), c(0.0, -sh), c(0.0, -sh), c(ch, 0.0)]
    }

    pub fn ry(phi: f64) -> [Complex64; 4] {
        let (ch, sh) = ((phi / 2.0).cos(), (phi / 2.0).sin());
        [c(ch, 0.0), c(-sh, 0.0), c(sh, 0.0), c(ch, 0.0)]
    }

    pub fn rz(phi: f64) -> [Complex64; 4] {
        [
            Complex64::from_polar(1.0, -phi / 2.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            Complex64::from_polar(1.0, phi / 2.0),
        ]
    }

    pub fn phase_e(delta: f64) -> [Complex64; 4] {
        [
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            Complex64::from_polar(1.0, delta),
        ]
    }

    /// `e^{-i delta} Rz(x1) Ry(x2) Rz(x3)`.
    pub fn u2(delta: f64, x1: f64, x2: f64, x3: f64) -> [Complex64; 4] {
        let g = Complex64::from_polar(1.0, -delta);
        let a = rz(x1);
        let b = ry(x2);
        let cm = rz(x3);
        let bc = mul(&b, &cm);
        let abc = mul(&a, &bc);
        [g * abc[0], g * abc[1], g * abc[2], g * abc[3]]
    }

    pub fn mul(a: &[Complex64; 4], b: &[Complex64; 4]) -> [Complex64; 4] {
        [
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ]
    }
}

/// A gate placed on specific qubits (controls first, target last).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PlacedGate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub params: Vec<f64>,
}

impl PlacedGate {
    pub fn new(kind: GateKind, qubits: Vec<usize>, params: Vec<f64>) -> Self {
        Self {
            kind,
            qubits,
            params,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.qubits.len() != self.kind.arity() {
            return Err(Error::BadGateShape {
                kind: self.kind.name(),
                expected: self.kind.arity(),
                got: self.qubits.len(),
                what: "qubits",
            });
        }
        if self.params.len() != self.kind.param_count() {
            return Err(Error::BadGateShape {
                kind: self.kind.name(),
                expected: self.kind.param_count(),
                got: self.params.len(),
                what: "params",
            });
        }
        crate::sim::check_distinct_indices(&self.qubits, n_qubits)
    }

    /// Resolve to a concrete amplitude-level action.
    pub(crate) fn two_level_action(&self) -> GateAction {
        let q = &self.qubits;
        match self.kind {
            GateKind::X => GateAction::Single {
                qubit: q[0],
                matrix: mat2::x(),
            },
            GateKind::Y => GateAction::Single {
                qubit: q[0],
                matrix: mat2::y(),
            },
            GateKind::Z => GateAction::Single {
                qubit: q[0],
                matrix: mat2::z(),
            },
            GateKind::H => GateAction::Single {
                qubit: q[0],
                matrix: mat2::h(),
            },
            GateKind::Rx => GateAction::Single {
                qubit: q[0],
                matrix: mat2::rx(self.params[0]),
            },
            GateKind::Ry => GateAction::Single {
                qubit: q[0],
                matrix: mat2::ry(self.params[0]),
            },
            GateKind::Rz => GateAction::Single {
                qubit: q[0],
                matrix: mat2::rz(self.params[0]),
            },
            GateKind::PhaseE => GateAction::Single {
                qubit: q[0],
                matrix: mat2::phase_e(self.params[0]),
            },
            GateKind::U2 => GateAction::Single {
                qubit: q[0],
                matrix: mat2::u2(
                    self.params[0],
                    self.params[1],
                    self.params[2],
                    self.params[3],
                ),
            },
            GateKind::Cnot => GateAction::ControlledSingle {
                controls: vec![q[0]],
                target: q[1],
                matrix: mat2::x(),
            },
            GateKind::Toffoli => GateAction::ControlledSingle {
                controls: vec![q[0], q[1]],
                target: q[2],
                matrix: mat2::x(),
            },
            GateKind::ControlledU2 => GateAction::ControlledSingle {
                controls: vec![q[0]],
                target: q[1],
                matrix: mat2::u2(
                    self.params[0],
                    self.params[1],
                    self.params[2],
                    self.params[3],
                ),
            },
            GateKind::Swap => GateAction::Swap { a: q[0], b: q[1] },
        }
    }

    fn text_line(&self) -> String {
        let qubits = self
            .qubits
            .iter()
            .map(|q| q.to_string())
            .collect::<Vec<_>>()
            .join(",");
        if self.params.is_empty() {
            format!("{} {}", self.kind.name(), qubits)
        } else {
            let params = self
                .params
                .iter()
                .map(|p| format!("{p:?}"))
                .collect::<Vec<_>>()
                .join(" ");
            format!("{} {} {}", self.kind.name(), qubits, params)
        }
    }
}

/// An undirected connectivity graph over qubit indices.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Connectivity {
    pub n_qubits: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Connectivity {
    pub fn new(n_qubits: usize, edges: &[(usize, usize)]) -> Self {
        let edges = edges
            .iter()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect::<BTreeSet<_>>();
        Self { n_qubits, edges }
    }

    /// The 5-qubit T-shaped layout: edges 0-1, 1-2, 1-3, 3-4.
    pub fn vigo_t() -> Self {
        Self::new(5, &[(0, 1), (1, 2), (1, 3), (3, 4)])
    }

    pub fn all_to_all(n_qubits: usize) -> Self {
        let mut edges = Vec::new();
        for a in 0..n_qubits {
            for b in a + 1..n_qubits {
                edges.push((a, b));
            }
        }
        Self::new(n_qubits, &edges)
    }

    pub fn line(n_qubits: usize) -> Self {
        let edges: Vec<_> = (0..n_qubits.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        Self::new(n_qubits, &edges)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn neighbors(&self, q: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == q {
                    Some(b)
                } else if b == q {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        if self.n_qubits == 0 {
            return true;
        }
        let mut seen = vec![false; self.n_qubits];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(q) = stack.pop() {
            for nb in self.neighbors(q) {
                if !seen[nb] {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// BFS shortest path between two qubits.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        if from == to {
            return Some(vec![from]);
        }
        let mut prev = vec![usize::MAX; self.n_qubits];
        let mut queue = std::collections::VecDeque::from([from]);
        prev[from] = from;
        while let Some(q) = queue.pop_front() {
            for nb in self.neighbors(q) {
                if prev[nb] == usize::MAX {
                    prev[nb] = q;
                    if nb == to {
                        let mut path = vec![to];
                        let mut cur = to;
                        while cur != from {
                            cur = prev[cur];
                            path.push(cur);
                        }
                        path.reverse();
                        return Some(path);
                    }
                    queue.push_back(nb);
                }
            }
        }
        None
    }
}

/// An ordered list of placed gates over `n_qubits` named qubits, with an
/// optional connectivity context that every two-qubit gate must satisfy.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<PlacedGate>,
    pub connectivity: Option<Connectivity>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
            connectivity: None,
        }
    }

    pub fn with_connectivity(n_qubits: usize, connectivity: Connectivity) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
            connectivity: Some(connectivity),
        }
    }

    pub fn push(&mut self, kind: GateKind, qubits: Vec<usize>, params: Vec<f64>) {
        self.gates.push(PlacedGate::new(kind, qubits, params));
    }

    /// Validate gate shapes, qubit ranges and (when present) connectivity.
    pub fn validate(&self) -> Result<()> {
        for g in &self.gates {
            g.validate(self.n_qubits)?;
            if let Some(conn) = &self.connectivity {
                if g.qubits.len() == 2 && !conn.has_edge(g.qubits[0], g.qubits[1]) {
                    return Err(Error::EdgeViolation(g.qubits[0], g.qubits[1]));
                }
            }
        }
        Ok(())
    }

    /// Count plain CNOT gates.
    pub fn cnot_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| g.kind == GateKind::Cnot)
            .count()
    }

    /// CNOT count with composite gates expanded: SWAP = 3, Toffoli = 6,
    /// controlled-U2 = 2.
    pub fn cnot_count_expanded(&self) -> usize {
        self.gates
            .iter()
            .map(|g| match g.kind {
                GateKind::Cnot => 1,
                GateKind::Swap => 3,
                GateKind::Toffoli => 6,
                GateKind::ControlledU2 => 2,
                _ => 0,
            })
            .sum()
    }

    /// Apply the whole circuit to a state.
    pub fn apply(&self, state: &crate::sim::StateVector) -> Result<crate::sim::StateVector> {
        let mut s = state.clone();
        for g in &self.gates {
            s.apply_gate_in_place(g)?;
        }
        Ok(s)
    }

    /// Dense unitary of the circuit, built column-by-column.
    pub fn unitary(&self) -> Result<nalgebra::DMatrix<Complex64>> {
        let dim = 1usize << self.n_qubits;
        let mut u = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
        for col in 0..dim {
            let mut amps = vec![Complex64::ZERO; dim];
            amps[col] = Complex64::ONE;
            let mut s = crate::sim::StateVector::from_amplitudes(amps)?;
            for g in &self.gates {
                s.apply_gate_in_place(g)?;
            }
            for (row, a) in s.amplitudes().iter().enumerate() {
                u[(row, col)] = *a;
            }
        }
        Ok(u)
    }

    /// Serialize to the line-oriented text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("QUBITS {}\n", self.n_qubits);
        for g in &self.gates {
            out.push_str(&g.text_line());
            out.push('\n');
        }
        out
    }

    /// Parse the line-oriented text format.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut n_qubits: Option<usize> = None;
        let mut gates = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap();
            if head == "QUBITS" {
                let n = parts
                    .next()
                    .ok_or_else(|| Error::Parse(format!("line {}: missing qubit count", lineno + 1)))?;
                n_qubits = Some(
                    n.parse()
                        .map_err(|_| Error::Parse(format!("line {}: bad qubit count", lineno + 1)))?,
                );
                continue;
            }
            let kind = GateKind::from_name(head)?;
            let qubits_str = parts
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing qubits", lineno + 1)))?;
            let qubits = qubits_str
                .split(',')
                .map(|q| {
                    q.parse::<usize>()
                        .map_err(|_| Error::Parse(format!("line {}: bad qubit `{q}`", lineno + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            let params = parts
                .map(|p| {
                    p.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("line {}: bad angle `{p}`", lineno + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            gates.push(PlacedGate::new(kind, qubits, params));
        }
        let n_qubits = n_qubits.ok_or_else(|| Error::Parse("missing QUBITS header".into()))?;
        let circuit = Circuit {
            n_qubits,
            gates,
            connectivity: None,
        };
        circuit.validate()?;
        Ok(circuit)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
