//! Simulated hardware noise: per-qubit readout flips, per-CNOT two-qubit
//! depolarizing (realized as stochastic Pauli insertion, which is
//! trajectory-exact for measurement statistics), a global depolarizing
//! channel realized as uniform-outcome mixing, CNOT-repetition noise
//! amplification, and readout calibration experiments.

use crate::gates::{Circuit, GateKind, PlacedGate};
use crate::sim::{index_to_bits, ShotHistogram, StateVector};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Noise parameters for a simulated device run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseSpec {
    /// Probability of reading `1` after preparing `0`.
    pub e0: f64,
    /// Probability of reading `0` after preparing `1`.
    pub e1: f64,
    /// Optional per-qubit overrides of `(e0, e1)`.
    pub per_qubit: Option<Vec<(f64, f64)>>,
    /// Depolarizing strength attached to every CNOT.
    pub cnot_depol: f64,
    /// Global depolarizing strength applied to the final state.
    pub global_depol: f64,
    /// CNOT repetition index `k`; each CNOT is executed `2k - 1` times.
    pub cnot_repetition: usize,
}

impl Default for NoiseSpec {
    /// Few-percent two-qubit error and readout flip rates.
    fn default() -> Self {
        Self {
            e0: 0.02,
            e1: 0.02,
            per_qubit: None,
            cnot_depol: 0.01,
            global_depol: 0.0,
            cnot_repetition: 1,
        }
    }
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self {
            e0: 0.0,
            e1: 0.0,
            per_qubit: None,
            cnot_depol: 0.0,
            global_depol: 0.0,
            cnot_repetition: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |r: f64| (0.0..1.0).contains(&r);
        let rates_ok = ok(self.e0)
            && ok(self.e1)
            && ok(self.cnot_depol)
            && (0.0..=1.0).contains(&self.global_depol)
            && self
                .per_qubit
                .as_ref()
                .map(|v| v.iter().all(|&(a, b)| ok(a) && ok(b)))
                .unwrap_or(true);
        if !rates_ok {
            return Err(Error::InvalidArgument("noise rates out of range".into()));
        }
        if self.cnot_repetition == 0 {
            return Err(Error::InvalidArgument(
                "cnot_repetition must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn rates(&self, qubit: usize) -> (f64, f64) {
        match &self.per_qubit {
            Some(v) if qubit < v.len() => v[qubit],
            _ => (self.e0, self.e1),
        }
    }

    pub fn has_readout_noise(&self) -> bool {
        self.e0 > 0.0
            || self.e1 > 0.0
            || self
                .per_qubit
                .as_ref()
                .map(|v| v.iter().any(|&(a, b)| a > 0.0 || b > 0.0))
                .unwrap_or(false)
    }

    pub fn with_repetition(&self, k: usize) -> Self {
        Self {
            cnot_repetition: k,
            ..self.clone()
        }
    }
}

/// Flip each measured bit independently: `0 -> 1` with `e0`, `1 -> 0` with
/// `e1`. Deterministic for a fixed seed.
pub fn apply_readout_noise(
    hist: &ShotHistogram,
    spec: &NoiseSpec,
    seed: u64,
) -> Result<ShotHistogram> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for (bits, &count) in &hist.counts {
        for _ in 0..count {
            let flipped: String = bits
                .chars()
                .enumerate()
                .map(|(q, ch)| {
                    let (e0, e1) = spec.rates(q);
                    match ch {
                        '0' if rng.gen::<f64>() < e0 => '1',
                        '1' if rng.gen::<f64>() < e1 => '0',
                        other => other,
                    }
                })
                .collect();
            *counts.entry(flipped).or_insert(0) += 1;
        }
    }
    Ok(ShotHistogram {
        counts,
        total_shots: hist.total_shots,
        rng_seed: seed,
    })
}

/// Replace every CNOT by `2k - 1` consecutive copies; the noiseless unitary
/// is unchanged while the per-CNOT noise sites scale exactly by `2k - 1`.
pub fn amplify_noise(circuit: &Circuit, k: usize) -> Circuit {
    let mut gates = Vec::with_capacity(circuit.gates.len());
    for g in &circuit.gates {
        if g.kind == GateKind::Cnot {
            for _ in 0..(2 * k - 1) {
                gates.push(g.clone());
            }
        } else {
            gates.push(g.clone());
        }
    }
    Circuit {
        n_qubits: circuit.n_qubits,
        gates,
        connectivity: circuit.connectivity.clone(),
    }
}

const PAULI_KINDS: [Option<GateKind>; 4] = [
    None,
    Some(GateKind::X),
    Some(GateKind::Y),
    Some(GateKind::Z),
];

/// Sample measurement outcomes of `circuit` applied to `psi0` under the noise
/// model: each CNOT is followed, with probability `cnot_depol`, by a
/// uniformly random two-qubit Pauli on its operands (identity included, so
/// the non-identity weight is `15/16` of it); the final state mixes with the
/// uniform distribution with weight `global_depol`; readout flips apply to
/// every recorded bit. All qubits are measured.
pub fn simulate_with_cnot_noise(
    circuit: &Circuit,
    psi0: &StateVector,
    spec: &NoiseSpec,
    shots: u64,
    seed: u64,
) -> Result<ShotHistogram> {
    spec.validate()?;
    circuit.validate()?;
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    let circuit = if spec.cnot_repetition > 1 {
        std::borrow::Cow::Owned(amplify_noise(circuit, spec.cnot_repetition))
    } else {
        std::borrow::Cow::Borrowed(circuit)
    };
    let n = circuit.n_qubits;
    let dim = 1usize << n;

    // cumulative distribution of the noiseless run, reused by every
    // failure-free shot
    let clean = circuit.apply(psi0)?;
    let clean_cum = cumulative(clean.amplitudes());

    let cnot_positions: Vec<usize> = circuit
        .gates
        .iter()
        .enumerate()
        .filter(|(_, g)| g.kind == GateKind::Cnot)
        .map(|(i, _)| i)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let p = spec.cnot_depol;
    let mut failures: Vec<(usize, usize)> = Vec::new();

    for _ in 0..shots {
        let outcome_index = if spec.global_depol > 0.0 && rng.gen::<f64>() < spec.global_depol {
            rng.gen_range(0..dim)
        } else {
            failures.clear();
            if p > 0.0 {
                for &pos in &cnot_positions {
                    if rng.gen::<f64>() < p {
                        let pauli_pair = rng.gen_range(0..16usize);
                        if pauli_pair != 0 {
                            failures.push((pos, pauli_pair));
                        }
                    }
                }
            }
            if failures.is_empty() {
                draw_index(&clean_cum, &mut rng)
            } else {
                let state = run_trajectory(&circuit, psi0, &failures)?;
                let cum = cumulative(state.amplitudes());
                draw_index(&cum, &mut rng)
            }
        };

        let mut bits: Vec<u8> = index_to_bits(outcome_index, n).into_bytes();
        if spec.has_readout_noise() {
            for (q, b) in bits.iter_mut().enumerate() {
                let (e0, e1) = spec.rates(q);
                match *b {
                    b'0' if e0 > 0.0 && rng.gen::<f64>() < e0 => *b = b'1',
                    b'1' if e1 > 0.0 && rng.gen::<f64>() < e1 => *b = b'0',
                    _ => {}
                }
            }
        }
        *counts
            .entry(String::from_utf8(bits).expect("ascii bits"))
            .or_insert(0) += 1;
    }

    Ok(ShotHistogram {
        counts,
        total_shots: shots,
        rng_seed: seed,
    })
}

fn run_trajectory(
    circuit: &Circuit,
    psi0: &StateVector,
    failures: &[(usize, usize)],
) -> Result<StateVector> {
    let mut state = psi0.clone();
    let mut next_failure = 0usize;
    for (i, g) in circuit.gates.iter().enumerate() {
        state.apply_gate_in_place(g)?;
        while next_failure < failures.len() && failures[next_failure].0 == i {
            let pauli_pair = failures[next_failure].1;
            let (pa, pb) = (pauli_pair / 4, pauli_pair % 4);
            for (sel, q) in [(pa, g.qubits[0]), (pb, g.qubits[1])] {
                if let Some(kind) = PAULI_KINDS[sel] {
                    state.apply_gate_in_place(&PlacedGate::new(kind, vec![q], vec![]))?;
                }
            }
            next_failure += 1;
        }
    }
    Ok(state)
}

fn cumulative(amps: &[num_complex::Complex64]) -> Vec<f64> {
    let mut acc = 0.0;
    amps.iter()
        .map(|a| {
            acc += a.norm_sqr();
            acc
        })
        .collect()
}

fn draw_index(cum: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total = *cum.last().unwrap();
    let u = rng.gen::<f64>() * total;
    match cum.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
        Ok(i) => i,
        Err(i) => i.min(cum.len() - 1),
    }
}

/// Per-qubit readout rates estimated from calibration experiments, with
/// binomial uncertainties.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QubitCalibration {
    pub e0: f64,
    pub e1: f64,
    pub de0: f64,
    pub de1: f64,
}

impl QubitCalibration {
    /// `d = 1 - e0 - e1`, the inverse-matrix determinant factor.
    pub fn d(&self) -> f64 {
        1.0 - self.e0 - self.e1
    }

    /// Entries of the 2x2 calibration matrix `P` (columns sum to one).
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[1.0 - self.e0, self.e1], [self.e0, 1.0 - self.e1]]
    }

    /// Entries of `P^{-1}`.
    pub fn inverse(&self) -> [[f64; 2]; 2] {
        let d = self.d();
        [
            [(1.0 - self.e1) / d, -self.e1 / d],
            [-self.e0 / d, (1.0 - self.e0) / d],
        ]
    }

    /// First-order variances of the `P^{-1}` entries.
    pub fn inverse_variance(&self) -> [[f64; 2]; 2] {
        let d = self.d();
        let d01 = (self.de0.powi(2) + self.de1.powi(2)) / (d * d);
        let l = |e: f64, de: f64| de * de + (1.0 - e) * (1.0 - e) * d01 * d01;
        let r = |e: f64, de: f64| de * de + e * e * d01 * d01;
        [
            [l(self.e1, self.de1) / (d * d), r(self.e1, self.de1) / (d * d)],
            [r(self.e0, self.de0) / (d * d), l(self.e0, self.de0) / (d * d)],
        ]
    }
}

/// Factorized per-qubit readout calibration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReadoutCalibration {
    pub qubits: Vec<QubitCalibration>,
}

impl ReadoutCalibration {
    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    /// Calibration with the exact spec rates and zero uncertainty (the
    /// infinite-shot limit).
    pub fn exact(spec: &NoiseSpec, n_qubits: usize) -> Result<Self> {
        let qubits = (0..n_qubits)
            .map(|q| {
                let (e0, e1) = spec.rates(q);
                let cal = QubitCalibration {
                    e0,
                    e1,
                    de0: 0.0,
                    de1: 0.0,
                };
                if cal.d() <= 0.0 {
                    return Err(Error::SingularCalibration(q));
                }
                Ok(cal)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { qubits })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            qubits: vec![
                QubitCalibration {
                    e0: 0.0,
                    e1: 0.0,
                    de0: 0.0,
                    de1: 0.0,
                };
                n_qubits
            ],
        }
    }
}

/// Estimate per-qubit readout rates from two simulated prepare-and-measure
/// experiments (all-zeros and all-ones), `2 n` single-qubit measurements in
/// total under the independence assumption.
pub fn run_calibration(
    spec: &NoiseSpec,
    n_qubits: usize,
    shots: u64,
    seed: u64,
) -> Result<ReadoutCalibration> {
    spec.validate()?;
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ones_seen = vec![0u64; n_qubits];
    for _ in 0..shots {
        for (q, seen) in ones_seen.iter_mut().enumerate() {
            let (e0, _) = spec.rates(q);
            if rng.gen::<f64>() < e0 {
                *seen += 1;
            }
        }
    }
    let mut zeros_seen = vec![0u64; n_qubits];
    for _ in 0..shots {
        for (q, seen) in zeros_seen.iter_mut().enumerate() {
            let (_, e1) = spec.rates(q);
            if rng.gen::<f64>() < e1 {
                *seen += 1;
            }
        }
    }
    let qubits = (0..n_qubits)
        .map(|q| {
            let e0 = ones_seen[q] as f64 / shots as f64;
            let e1 = zeros_seen[q] as f64 / shots as f64;
            let cal = QubitCalibration {
                e0,
                e1,
                de0: (e0 * (1.0 - e0) / shots as f64).sqrt(),
                de1: (e1 * (1.0 - e1) / shots as f64).sqrt(),
            };
            if cal.d() <= 0.0 {
                return Err(Error::SingularCalibration(q));
            }
            Ok(cal)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReadoutCalibration { qubits })
}

/// Full `2^n x 2^n` calibration matrix estimated by preparing every basis
/// state; used to cross-check the per-qubit independence assumption.
pub fn run_full_calibration(
    spec: &NoiseSpec,
    n_qubits: usize,
    shots: u64,
    seed: u64,
) -> Result<nalgebra::DMatrix<f64>> {
    spec.validate()?;
    let dim = 1usize << n_qubits;
    let mut p = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for prepared in 0..dim {
        for _ in 0..shots {
            let mut measured = 0usize;
            for q in 0..n_qubits {
                let bit = prepared >> q & 1;
                let (e0, e1) = spec.rates(q);
                let flipped = if bit == 0 {
                    rng.gen::<f64>() < e0
                } else {
                    rng.gen::<f64>() >= e1
                };
                if flipped {
                    measured |= 1 << q;
                }
            }
            p[(measured, prepared)] += 1.0;
        }
    }
    Ok(p / shots as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::GateKind;
    use crate::sim::sample_shots;

    fn bell() -> (Circuit, StateVector) {
        let mut c = Circuit::new(2);
        c.push(GateKind::H, vec![0], vec![]);
        c.push(GateKind::Cnot, vec![0, 1], vec![]);
        (c, StateVector::zero_state(2))
    }

    #[test]
    fn readout_noise_limits() {
        let mut counts = BTreeMap::new();
        counts.insert("00".to_string(), 1000);
        let hist = ShotHistogram {
            counts,
            total_shots: 1000,
            rng_seed: 0,
        };
        // zero rates: unchanged
        let spec = NoiseSpec::noiseless();
        let out = apply_readout_noise(&hist, &spec, 1).unwrap();
        assert_eq!(out.counts, hist.counts);

        // e0 = 1: every 0 flips deterministically
        let spec = NoiseSpec {
            e0: 1.0 - f64::EPSILON,
            e1: 0.0,
            ..NoiseSpec::noiseless()
        };
        let out = apply_readout_noise(&hist, &spec, 1).unwrap();
        assert_eq!(out.counts.get("11"), Some(&1000));
    }

    #[test]
    fn readout_noise_binomial_band() {
        let mut counts = BTreeMap::new();
        counts.insert("0".to_string(), 1_000_000);
        let hist = ShotHistogram {
            counts,
            total_shots: 1_000_000,
            rng_seed: 0,
        };
        let spec = NoiseSpec {
            e0: 0.02,
            e1: 0.02,
            cnot_depol: 0.0,
            ..NoiseSpec::default()
        };
        let out = apply_readout_noise(&hist, &spec, 9).unwrap();
        let ones = *out.counts.get("1").unwrap() as f64;
        let sigma = (1e6 * 0.02 * 0.98f64).sqrt();
        assert!((ones - 20_000.0).abs() < 5.0 * sigma);
    }

    #[test]
    fn noiseless_cnot_sim_matches_distribution() {
        let (c, psi0) = bell();
        let spec = NoiseSpec::noiseless();
        let hist = simulate_with_cnot_noise(&c, &psi0, &spec, 100_000, 4).unwrap();
        // Bell state: only 00 and 11
        assert!(hist.counts.get("01").is_none());
        assert!(hist.counts.get("10").is_none());
        let f00 = hist.frequency("00");
        assert!((f00 - 0.5).abs() < 0.01);
    }

    #[test]
    fn full_depolarizing_cnot_uniformizes() {
        // one CNOT with p = 1 sends the two operand qubits to the maximally
        // mixed state, so all four outcomes are uniform
        let mut c = Circuit::new(2);
        c.push(GateKind::Cnot, vec![0, 1], vec![]);
        let psi0 = StateVector::zero_state(2);
        let spec = NoiseSpec {
            e0: 0.0,
            e1: 0.0,
            per_qubit: None,
            cnot_depol: 1.0 - f64::EPSILON,
            global_depol: 0.0,
            cnot_repetition: 1,
        };
        let shots = 1_000_000u64;
        let hist = simulate_with_cnot_noise(&c, &psi0, &spec, shots, 77).unwrap();
        let sigma = (shots as f64 * 0.25 * 0.75).sqrt();
        for key in ["00", "01", "10", "11"] {
            let n = hist.counts.get(key).copied().unwrap_or(0) as f64;
            assert!(
                (n - shots as f64 / 4.0).abs() < 5.0 * sigma,
                "{key}: {n}"
            );
        }
    }

    #[test]
    fn cnot_free_circuit_ignores_depolarizing() {
        let mut c = Circuit::new(1);
        c.push(GateKind::H, vec![0], vec![]);
        let psi0 = StateVector::zero_state(1);
        let noisy = NoiseSpec {
            cnot_depol: 0.9,
            e0: 0.0,
            e1: 0.0,
            ..NoiseSpec::default()
        };
        let clean = NoiseSpec::noiseless();
        let h1 = simulate_with_cnot_noise(&c, &psi0, &noisy, 20_000, 5).unwrap();
        let h2 = simulate_with_cnot_noise(&c, &psi0, &clean, 20_000, 5).unwrap();
        assert_eq!(h1.counts, h2.counts);
    }

    #[test]
    fn amplification_counts_and_unitary() {
        let (c, psi0) = bell();
        assert_eq!(amplify_noise(&c, 1).gates.len(), c.gates.len());
        let amp3 = amplify_noise(&c, 3);
        assert_eq!(amp3.cnot_count(), 5);
        // 6-CNOT circuit at k = 3 has 30
        let mut six = Circuit::new(2);
        for _ in 0..6 {
            six.push(GateKind::Cnot, vec![0, 1], vec![]);
        }
        assert_eq!(amplify_noise(&six, 3).cnot_count(), 30);

        // noiseless unitary unchanged at k = 2
        let u1 = c.unitary().unwrap();
        let u2 = amplify_noise(&c, 2).unitary().unwrap();
        assert!((u1 - u2).norm() < 1e-12);
        let _ = psi0;
    }

    #[test]
    fn global_depol_matches_closed_form() {
        // expectation of an ancilla-zero indicator under uniform mixing
        let (c, psi0) = bell();
        let spec = NoiseSpec {
            e0: 0.0,
            e1: 0.0,
            per_qubit: None,
            cnot_depol: 0.0,
            global_depol: 0.2,
            cnot_repetition: 1,
        };
        let shots = 1_000_000u64;
        let hist = simulate_with_cnot_noise(&c, &psi0, &spec, shots, 13).unwrap();
        // P(qubit0 = 0) ideal is 1/2; mixed also 1/2; P(00) = 0.8*0.5 + 0.2*0.25
        let p00 = hist.frequency("00");
        let expect = 0.8 * 0.5 + 0.2 * 0.25;
        let sigma = (expect * (1.0 - expect) / shots as f64).sqrt();
        assert!((p00 - expect).abs() < 5.0 * sigma);
    }

    #[test]
    fn calibration_recovery() {
        let spec = NoiseSpec {
            e0: 0.03,
            e1: 0.05,
            cnot_depol: 0.0,
            ..NoiseSpec::default()
        };
        let cal = run_calibration(&spec, 3, 100_000, 21).unwrap();
        for q in &cal.qubits {
            assert!((q.e0 - 0.03).abs() < 5.0 * (0.03 * 0.97f64 / 1e5).sqrt());
            assert!((q.e1 - 0.05).abs() < 5.0 * (0.05 * 0.95f64 / 1e5).sqrt());
        }

        // noiseless: exact identity calibration
        let cal = ReadoutCalibration::exact(&NoiseSpec::noiseless(), 2).unwrap();
        for q in &cal.qubits {
            assert_eq!(q.e0, 0.0);
            assert_eq!(q.de0, 0.0);
        }

        // e0 + e1 >= 1 is rejected
        let bad = NoiseSpec {
            e0: 0.6,
            e1: 0.5,
            ..NoiseSpec::noiseless()
        };
        assert!(matches!(
            run_calibration(&bad, 1, 10_000, 3),
            Err(Error::SingularCalibration(_))
        ));
    }

    #[test]
    fn readout_commutes_with_relabeling() {
        // flipping bit order before or after the channel gives the same
        // statistics for symmetric rates
        let mut counts = BTreeMap::new();
        counts.insert("01".to_string(), 50_000);
        counts.insert("10".to_string(), 50_000);
        let hist = ShotHistogram {
            counts,
            total_shots: 100_000,
            rng_seed: 0,
        };
        let spec = NoiseSpec {
            e0: 0.04,
            e1: 0.04,
            cnot_depol: 0.0,
            ..NoiseSpec::default()
        };
        let out = apply_readout_noise(&hist, &spec, 8).unwrap();
        let swapped: BTreeMap<String, u64> = out
            .counts
            .iter()
            .map(|(k, &v)| (k.chars().rev().collect(), v))
            .collect();
        // same marginal structure: totals agree and the 00/11 masses are
        // within statistical range of each other
        let tol = 5.0 * (100_000.0f64 * 0.08).sqrt();
        let a = *out.counts.get("00").unwrap_or(&0) as f64;
        let b = *swapped.get("00").unwrap_or(&0) as f64;
        assert!((a - b).abs() < tol);
        let _ = sample_shots; // silence unused import in some cfg combos
    }

    #[test]
    fn full_calibration_factorizes() {
        let spec = NoiseSpec {
            e0: 0.05,
            e1: 0.02,
            cnot_depol: 0.0,
            ..NoiseSpec::default()
        };
        let full = run_full_calibration(&spec, 2, 200_000, 31).unwrap();
        let per = ReadoutCalibration::exact(&spec, 2).unwrap();
        // tensor product of the per-qubit matrices
        for meas in 0..4usize {
            for prep in 0..4usize {
                let mut expect = 1.0;
                for q in 0..2 {
                    let m = per.qubits[q].matrix();
                    expect *= m[meas >> q & 1][prep >> q & 1];
                }
                let got = full[(meas, prep)];
                assert!((got - expect).abs() < 0.01, "({meas},{prep}): {got} vs {expect}");
            }
        }
    }
}
