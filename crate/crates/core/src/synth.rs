//! One- and two-qubit synthesis: ZYZ Euler decomposition, the two-CNOT
//! controlled-unitary construction, and greedy connectivity routing with
//! SWAP/CNOT merging.

use crate::gates::{mat2, Circuit, Connectivity, GateKind, PlacedGate};
use crate::{Error, Result};
use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

/// Tolerance for unitarity and reconstruction checks.
pub const SYNTH_TOL: f64 = 1e-10;

/// ZYZ Euler angles with a phase: `U = e^{-i delta} Rz(x1) Ry(x2) Rz(x3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerZyz {
    pub delta: f64,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl EulerZyz {
    /// Reconstruct the 2x2 matrix from the angles.
    pub fn matrix(&self) -> Matrix2<Complex64> {
        let m = mat2::u2(self.delta, self.x1, self.x2, self.x3);
        Matrix2::new(m[0], m[1], m[2], m[3])
    }

    /// Angles of the adjoint matrix.
    pub fn adjoint(&self) -> EulerZyz {
        EulerZyz {
            delta: -self.delta,
            x1: -self.x3,
            x2: -self.x2,
            x3: -self.x1,
        }
    }
}

fn check_unitary2(u: &Matrix2<Complex64>) -> Result<()> {
    let id = Matrix2::identity();
    let dev = (u.adjoint() * u - id).norm();
    if dev > SYNTH_TOL {
        return Err(Error::NonUnitary(dev));
    }
    Ok(())
}

/// ZYZ Euler decomposition of a 2x2 unitary.
///
/// When `x2` is 0 or pi the (x1, x3) split is degenerate; the convention here
/// fixes `x3 = 0` and folds all Z-rotation into `x1`, so the output is
/// deterministic.
pub fn euler_zyz(u: &Matrix2<Complex64>) -> Result<EulerZyz> {
    check_unitary2(u)?;
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    // det U = e^{-2 i delta}
    let delta = -det.arg() / 2.0;
    let v = u * Complex64::from_polar(1.0, delta); // in SU(2)
    let x2 = 2.0 * v[(1, 0)].norm().atan2(v[(0, 0)].norm());
    let (x1, x3) = if v[(1, 0)].norm() < 1e-13 {
        // diagonal: v00 = e^{-i x1/2}
        (-2.0 * v[(0, 0)].arg(), 0.0)
    } else if v[(0, 0)].norm() < 1e-13 {
        // anti-diagonal: v10 = e^{i x1/2} sin(x2/2)
        (2.0 * v[(1, 0)].arg(), 0.0)
    } else {
        let s = -v[(0, 0)].arg(); // (x1 + x3)/2
        let d = v[(1, 0)].arg(); // (x1 - x3)/2
        (s + d, s - d)
    };
    let angles = EulerZyz { delta, x1, x2, x3 };
    let dev = (angles.matrix() - u).norm();
    if dev > SYNTH_TOL {
        // the phase branch can be off by pi; retry with the other root
        let alt = EulerZyz {
            delta: delta + std::f64::consts::PI,
            ..angles
        };
        let flipped = euler_refit(u, alt)?;
        return Ok(flipped);
    }
    Ok(angles)
}

fn euler_refit(u: &Matrix2<Complex64>, seed: EulerZyz) -> Result<EulerZyz> {
    let v = u * Complex64::from_polar(1.0, seed.delta);
    let x2 = 2.0 * v[(1, 0)].norm().atan2(v[(0, 0)].norm());
    let (x1, x3) = if v[(1, 0)].norm() < 1e-13 {
        (-2.0 * v[(0, 0)].arg(), 0.0)
    } else if v[(0, 0)].norm() < 1e-13 {
        (2.0 * v[(1, 0)].arg(), 0.0)
    } else {
        let s = -v[(0, 0)].arg();
        let d = v[(1, 0)].arg();
        (s + d, s - d)
    };
    let angles = EulerZyz {
        delta: seed.delta,
        x1,
        x2,
        x3,
    };
    let dev = (angles.matrix() - u).norm();
    if dev > SYNTH_TOL {
        return Err(Error::NonUnitary(dev));
    }
    Ok(angles)
}

/// Append the two-CNOT controlled-`U` construction to `circuit`.
///
/// With `U = e^{-i delta} Rz(x1) Ry(x2) Rz(x3)` the gate sequence is
/// `A = Rz((x3-x1)/2)`, CNOT, `B = Ry(-x2/2) Rz(-(x1+x3)/2)`, CNOT,
/// `C = Rz(x1) Ry(x2/2)`, with the phase `E(-delta)` on the control. The
/// resulting block matrix is exactly `|0><0| (x) 1 + |1><1| (x) U`.
pub fn push_controlled_u2(circuit: &mut Circuit, angles: &EulerZyz, control: usize, target: usize) {
    let EulerZyz { delta, x1, x2, x3 } = *angles;
    circuit.push(GateKind::Rz, vec![target], vec![(x3 - x1) / 2.0]);
    circuit.push(GateKind::Cnot, vec![control, target], vec![]);
    circuit.push(GateKind::Rz, vec![target], vec![-(x1 + x3) / 2.0]);
    circuit.push(GateKind::Ry, vec![target], vec![-x2 / 2.0]);
    circuit.push(GateKind::Cnot, vec![control, target], vec![]);
    circuit.push(GateKind::Ry, vec![target], vec![x2 / 2.0]);
    circuit.push(GateKind::Rz, vec![target], vec![x1]);
    circuit.push(GateKind::PhaseE, vec![control], vec![-delta]);
}

/// Two-CNOT circuit for `|0><0| (x) 1 + |1><1| (x) U` on `(control, target)`.
pub fn controlled_u2_circuit(
    u: &Matrix2<Complex64>,
    control: usize,
    target: usize,
) -> Result<Circuit> {
    let angles = euler_zyz(u)?;
    let n = control.max(target) + 1;
    let mut c = Circuit::new(n);
    push_controlled_u2(&mut c, &angles, control, target);
    Ok(c)
}

/// Result of routing: the rewritten circuit plus the final wire assignment.
/// `final_wire[q]` is the wire that holds original logical qubit `q` after all
/// inserted SWAPs.
#[derive(Debug, Clone)]
pub struct RoutedCircuit {
    pub circuit: Circuit,
    pub final_wire: Vec<usize>,
}

/// Greedy shortest-path SWAP insertion so every two-qubit gate lies on a
/// connectivity edge.
///
/// Each inserted SWAP is bubbled backwards over single-qubit gates (relabeling
/// them) and gates on disjoint wires; when it lands directly after a CNOT on
/// the same wire pair, `CNOT(a,b) . SWAP(a,b)` is rewritten as the two-CNOT
/// sequence `CNOT(b,a), CNOT(a,b)`, which costs one CNOT instead of three.
pub fn route_to_connectivity(circuit: &Circuit, conn: &Connectivity) -> Result<RoutedCircuit> {
    if !conn.is_connected() {
        return Err(Error::DisconnectedGraph);
    }
    if conn.n_qubits < circuit.n_qubits {
        return Err(Error::DimensionMismatch(format!(
            "connectivity has {} qubits, circuit needs {}",
            conn.n_qubits, circuit.n_qubits
        )));
    }
    // wire_of[logical] = wire, logical_at[wire] = logical
    let mut wire_of: Vec<usize> = (0..conn.n_qubits).collect();
    let mut logical_at: Vec<usize> = (0..conn.n_qubits).collect();
    let mut out: Vec<PlacedGate> = Vec::with_capacity(circuit.gates.len());

    for gate in &circuit.gates {
        let mut mapped: Vec<usize> = gate.qubits.iter().map(|&q| wire_of[q]).collect();
        if mapped.len() == 2 && !conn.has_edge(mapped[0], mapped[1]) {
            let path = conn
                .shortest_path(mapped[0], mapped[1])
                .ok_or(Error::DisconnectedGraph)?;
            // walk the first endpoint toward the second until adjacent
            for w in 1..path.len() - 1 {
                let (a, b) = (path[w - 1], path[w]);
                insert_swap(&mut out, a, b);
                logical_at.swap(a, b);
                wire_of[logical_at[a]] = a;
                wire_of[logical_at[b]] = b;
            }
            mapped = gate.qubits.iter().map(|&q| wire_of[q]).collect();
        }
        out.push(PlacedGate::new(gate.kind, mapped, gate.params.clone()));
    }

    let routed = Circuit {
        n_qubits: conn.n_qubits,
        gates: out,
        connectivity: Some(conn.clone()),
    };
    routed.validate()?;
    Ok(RoutedCircuit {
        circuit: routed,
        final_wire: wire_of[..circuit.n_qubits].to_vec(),
    })
}

/// Insert SWAP(a, b) at the end of `gates`, bubbling it backwards and merging
/// with an adjacent same-pair CNOT when possible.
fn insert_swap(gates: &mut Vec<PlacedGate>, a: usize, b: usize) {
    let mut pos = gates.len();
    while pos > 0 {
        let g = &gates[pos - 1];
        let touches_a = g.qubits.contains(&a);
        let touches_b = g.qubits.contains(&b);
        if !touches_a && !touches_b {
            pos -= 1; // disjoint: the swap slides past unchanged
            continue;
        }
        if g.qubits.len() == 1 {
            pos -= 1; // single-qubit gate: relabel it once the swap is placed
            continue;
        }
        // two-qubit gate touching a or b: merge or stop
        if g.kind == GateKind::Cnot
            && ((g.qubits[0] == a && g.qubits[1] == b) || (g.qubits[0] == b && g.qubits[1] == a))
        {
            let (c, t) = (g.qubits[0], g.qubits[1]);
            // CNOT(c,t) then SWAP == CNOT(t,c) then CNOT(c,t)
            gates[pos - 1] = PlacedGate::new(GateKind::Cnot, vec![t, c], vec![]);
            gates.insert(pos, PlacedGate::new(GateKind::Cnot, vec![c, t], vec![]));
            relabel_from(gates, pos + 1, a, b);
            return;
        }
        break;
    }
    gates.insert(pos, PlacedGate::new(GateKind::Swap, vec![a, b], vec![]));
    relabel_from(gates, pos + 1, a, b);
}

fn relabel_from(gates: &mut [PlacedGate], start: usize, a: usize, b: usize) {
    for g in gates[start..].iter_mut() {
        for q in g.qubits.iter_mut() {
            if *q == a {
                *q = b;
            } else if *q == b {
                *q = a;
            }
        }
    }
}

/// Max-norm distance between two matrices modulo a global phase.
pub fn distance_up_to_phase(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let mut best = (0usize, 0usize);
    let mut best_norm = 0.0;
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            let n = b[(i, j)].norm();
            if n > best_norm {
                best_norm = n;
                best = (i, j);
            }
        }
    }
    if best_norm < 1e-14 {
        return (a - b).norm();
    }
    let phase = a[best] / b[best];
    let phase = phase / phase.norm();
    let mut max = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let d = (a[(i, j)] - phase * b[(i, j)]).norm();
            max = max.max(d);
        }
    }
    max
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unitary2(rng: &mut ChaCha8Rng) -> Matrix2<Complex64> {
        // QR of a random complex Gaussian matrix
        let mut g = || {
            // Box-Muller
            let u1: f64 = rng.gen::<f64>().max(1e-12);
            let u2: f64 = rng.gen();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        let mut m = Matrix2::new(
            Complex64::new(g(), g()),
            Complex64::new(g(), g()),
            Complex64::new(g(), g()),
            Complex64::new(g(), g()),
        );
        // Gram-Schmidt
        let c0 = m.column(0).normalize();
        let proj = c0.dotc(&m.column(1));
        let c1 = (m.column(1) - c0 * proj).normalize();
        m.set_column(0, &c0);
        m.set_column(1, &c1);
        m
    }

    #[test]
    fn euler_identity_and_rz() {
        let id = Matrix2::identity();
        let e = euler_zyz(&id).unwrap();
        assert!((e.matrix() - id).norm() < SYNTH_TOL);

        let rz = {
            let m = mat2::rz(0.7);
            Matrix2::new(m[0], m[1], m[2], m[3])
        };
        let e = euler_zyz(&rz).unwrap();
        assert!((e.matrix() - rz).norm() < SYNTH_TOL);
    }

    #[test]
    fn euler_random_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let u = random_unitary2(&mut rng);
            let e = euler_zyz(&u).unwrap();
            assert!((e.matrix() - u).norm() < SYNTH_TOL);
        }
    }

    #[test]
    fn euler_rejects_non_unitary() {
        let m = Matrix2::new(
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        );
        assert!(euler_zyz(&m).is_err());
    }

    #[test]
    fn controlled_u2_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let u = random_unitary2(&mut rng);
            let c = controlled_u2_circuit(&u, 1, 0).unwrap();
            assert_eq!(c.cnot_count(), 2);
            let w = c.unitary().unwrap();
            // expected: |0><0| (x) 1 + |1><1| (x) U with control = qubit 1
            let mut expect = DMatrix::<Complex64>::identity(4, 4);
            for i in 0..2 {
                for j in 0..2 {
                    expect[(2 + i, 2 + j)] = u[(i, j)];
                }
            }
            expect[(2, 2)] = u[(0, 0)];
            expect[(2, 3)] = u[(0, 1)];
            expect[(3, 2)] = u[(1, 0)];
            expect[(3, 3)] = u[(1, 1)];
            assert!((w - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn controlled_identity_and_x() {
        let id = Matrix2::identity();
        let c = controlled_u2_circuit(&id, 1, 0).unwrap();
        let w = c.unitary().unwrap();
        assert!(distance_up_to_phase(&w, &DMatrix::identity(4, 4)) < SYNTH_TOL);

        let x = {
            let m = mat2::x();
            Matrix2::new(m[0], m[1], m[2], m[3])
        };
        let c = controlled_u2_circuit(&x, 1, 0).unwrap();
        let mut cnot = Circuit::new(2);
        cnot.push(GateKind::Cnot, vec![1, 0], vec![]);
        let d = distance_up_to_phase(&c.unitary().unwrap(), &cnot.unitary().unwrap());
        assert!(d < SYNTH_TOL);
    }

    #[test]
    fn routing_noop_when_satisfied() {
        let conn = Connectivity::vigo_t();
        let mut c = Circuit::new(5);
        c.push(GateKind::Cnot, vec![0, 1], vec![]);
        c.push(GateKind::Cnot, vec![1, 3], vec![]);
        let routed = route_to_connectivity(&c, &conn).unwrap();
        assert_eq!(routed.circuit.gates.len(), 2);
        assert_eq!(routed.final_wire, vec![0, 1, 2, 3, 4]);
        assert_eq!(routed.circuit.cnot_count(), 2);
    }

    #[test]
    fn routing_equivalence_up_to_relabeling() {
        let conn = Connectivity::line(4);
        let mut c = Circuit::new(4);
        c.push(GateKind::H, vec![0], vec![]);
        c.push(GateKind::Cnot, vec![0, 3], vec![]);
        c.push(GateKind::Ry, vec![2], vec![0.4]);
        c.push(GateKind::Cnot, vec![1, 2], vec![]);
        c.push(GateKind::Rz, vec![3], vec![-0.9]);
        let routed = route_to_connectivity(&c, &conn).unwrap();
        routed.circuit.validate().unwrap();

        // routed unitary equals the original followed by the final relabeling
        let u_orig = c.unitary().unwrap();
        let u_rout = routed.circuit.unitary().unwrap();
        let dim = 16usize;
        let mut perm = DMatrix::<Complex64>::zeros(dim, dim);
        for i in 0..dim {
            let mut j = 0usize;
            for q in 0..4 {
                if i >> q & 1 == 1 {
                    j |= 1 << routed.final_wire[q];
                }
            }
            perm[(j, i)] = Complex64::ONE;
        }
        let expect = &perm * u_orig;
        assert!(distance_up_to_phase(&u_rout, &expect) < 1e-9);
    }

    #[test]
    fn routing_rejects_disconnected() {
        let conn = Connectivity::new(4, &[(0, 1), (2, 3)]);
        let c = Circuit::new(4);
        assert!(matches!(
            route_to_connectivity(&c, &conn),
            Err(Error::DisconnectedGraph)
        ));
    }
}
