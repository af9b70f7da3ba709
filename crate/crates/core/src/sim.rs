//! Dense state-vector simulation: basis states, gate application, measurement
//! distributions, shot sampling, post-selection and fidelity.
//!
//! Qubit 0 is the least-significant bit of a basis-state index; bitstrings
//! list qubit 0 first. A `StateVector` is immutable from the caller's
//! perspective: operations return new states, so independent simulations can
//! run concurrently without shared mutable state.

use crate::gates::PlacedGate;
use crate::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Absolute tolerance for exact-simulation assertions.
pub const SIM_TOL: f64 = 1e-10;

/// Probability below which a post-selection outcome is treated as impossible.
pub const POSTSELECT_EPS: f64 = 1e-14;

/// Dense complex amplitude vector over `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Basis state `|bitstring>`; the first character is qubit 0.
    pub fn new_basis_state(n_qubits: usize, bitstring: &str) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::DimensionMismatch("n_qubits must be >= 1".into()));
        }
        let index = bits_to_index(n_qubits, bitstring)?;
        let mut amps = vec![Complex64::ZERO; 1 << n_qubits];
        amps[index] = Complex64::ONE;
        Ok(Self { n_qubits, amps })
    }

    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero_state(n_qubits: usize) -> Self {
        let mut amps = vec![Complex64::ZERO; 1 << n_qubits];
        amps[0] = Complex64::ONE;
        Self { n_qubits, amps }
    }

    /// Build from raw amplitudes; normalizes and rejects zero vectors.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n = amps.len();
        if n < 2 || n & (n - 1) != 0 {
            return Err(Error::DimensionMismatch(format!(
                "amplitude count {n} is not a power of two >= 2"
            )));
        }
        let n_qubits = n.trailing_zeros() as usize;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < POSTSELECT_EPS {
            return Err(Error::ZeroNorm(norm));
        }
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Apply a placed gate, returning the new state.
    pub fn apply_gate(&self, gate: &PlacedGate) -> Result<Self> {
        let mut out = self.clone();
        out.apply_gate_in_place(gate)?;
        Ok(out)
    }

    /// In-place gate application; used by the hot sampling loops.
    pub fn apply_gate_in_place(&mut self, gate: &PlacedGate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match gate.two_level_action() {
            GateAction::Single { qubit, matrix } => self.apply_1q(qubit, &matrix),
            GateAction::ControlledSingle {
                controls,
                target,
                matrix,
            } => self.apply_controlled_1q(&controls, target, &matrix),
            GateAction::Swap { a, b } => self.apply_swap(a, b),
        }
        Ok(())
    }

    fn apply_1q(&mut self, q: usize, m: &[Complex64; 4]) {
        let bit = 1usize << q;
        let dim = self.amps.len();
        let mut i = 0;
        while i < dim {
            if i & bit == 0 {
                let j = i | bit;
                let a0 = self.amps[i];
                let a1 = self.amps[j];
                self.amps[i] = m[0] * a0 + m[1] * a1;
                self.amps[j] = m[2] * a0 + m[3] * a1;
            }
            i += 1;
        }
    }

    fn apply_controlled_1q(&mut self, controls: &[usize], target: usize, m: &[Complex64; 4]) {
        let tbit = 1usize << target;
        let cmask: usize = controls.iter().map(|&c| 1usize << c).sum();
        let dim = self.amps.len();
        let mut i = 0;
        while i < dim {
            if i & tbit == 0 && i & cmask == cmask {
                let j = i | tbit;
                let a0 = self.amps[i];
                let a1 = self.amps[j];
                self.amps[i] = m[0] * a0 + m[1] * a1;
                self.amps[j] = m[2] * a0 + m[3] * a1;
            }
            i += 1;
        }
    }

    fn apply_swap(&mut self, a: usize, b: usize) {
        let (abit, bbit) = (1usize << a, 1usize << b);
        let dim = self.amps.len();
        for i in 0..dim {
            // visit each (01, 10) pair once
            if i & abit != 0 && i & bbit == 0 {
                let j = (i & !abit) | bbit;
                self.amps.swap(i, j);
            }
        }
        let _ = dim;
    }

    /// Marginal Born-rule probabilities over the listed qubits.
    pub fn measurement_distribution(&self, qubits: &[usize]) -> Result<MeasurementDistribution> {
        check_distinct_indices(qubits, self.n_qubits)?;
        let mut probabilities = BTreeMap::new();
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let key = index_to_bits_subset(i, qubits);
            *probabilities.entry(key).or_insert(0.0) += p;
        }
        Ok(MeasurementDistribution {
            qubit_subset: qubits.to_vec(),
            probabilities,
        })
    }

    /// Born probability of `outcome` on `qubits` plus the renormalized
    /// conditional state. Errs when the outcome is (numerically) impossible.
    pub fn post_select(&self, qubits: &[usize], outcome: &str) -> Result<(f64, StateVector)> {
        check_distinct_indices(qubits, self.n_qubits)?;
        if outcome.len() != qubits.len() {
            return Err(Error::DimensionMismatch(format!(
                "outcome `{outcome}` does not match {} measured qubits",
                qubits.len()
            )));
        }
        let (mask, want) = subset_mask(qubits, outcome)?;
        let prob: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == want)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        if prob < POSTSELECT_EPS {
            return Err(Error::ImpossibleOutcome(prob));
        }
        let scale = prob.sqrt();
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if i & mask == want {
                    a / scale
                } else {
                    Complex64::ZERO
                }
            })
            .collect();
        Ok((
            prob,
            StateVector {
                n_qubits: self.n_qubits,
                amps,
            },
        ))
    }

    /// `|<a|b>|^2`, the squared overlap; insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {} qubits",
                self.n_qubits, other.n_qubits
            )));
        }
        let ip: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(ip.norm_sqr().min(1.0))
    }
}

/// How a placed gate acts on amplitudes; resolved once per application.
pub(crate) enum GateAction {
    Single {
        qubit: usize,
        matrix: [Complex64; 4],
    },
    ControlledSingle {
        controls: Vec<usize>,
        target: usize,
        matrix: [Complex64; 4],
    },
    Swap {
        a: usize,
        b: usize,
    },
}

/// Marginal outcome probabilities over an ordered qubit subset.
#[derive(Debug, Clone)]
pub struct MeasurementDistribution {
    pub qubit_subset: Vec<usize>,
    pub probabilities: BTreeMap<String, f64>,
}

impl MeasurementDistribution {
    pub fn total(&self) -> f64 {
        self.probabilities.values().sum()
    }

    pub fn probability(&self, bits: &str) -> f64 {
        self.probabilities.get(bits).copied().unwrap_or(0.0)
    }
}

/// Counts per measured bitstring for a finite number of shots.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ShotHistogram {
    pub counts: BTreeMap<String, u64>,
    pub total_shots: u64,
    pub rng_seed: u64,
}

impl ShotHistogram {
    pub fn frequency(&self, bits: &str) -> f64 {
        self.counts.get(bits).copied().unwrap_or(0) as f64 / self.total_shots as f64
    }

    /// Sum of frequencies over keys selected by a predicate.
    pub fn frequency_where(&self, pred: impl Fn(&str) -> bool) -> f64 {
        let hits: u64 = self
            .counts
            .iter()
            .filter(|(k, _)| pred(k))
            .map(|(_, &c)| c)
            .sum();
        hits as f64 / self.total_shots as f64
    }
}

/// Draw `shots` samples from the categorical distribution; deterministic for a
/// fixed seed.
pub fn sample_shots(
    dist: &MeasurementDistribution,
    shots: u64,
    seed: u64,
) -> Result<ShotHistogram> {
    if dist.probabilities.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    let keys: Vec<&String> = dist.probabilities.keys().collect();
    let mut cum = Vec::with_capacity(keys.len());
    let mut acc = 0.0;
    for p in dist.probabilities.values() {
        acc += p;
        cum.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = rng.gen::<f64>() * acc;
        let idx = match cum.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) => i,
            Err(i) => i.min(cum.len() - 1),
        };
        *counts.entry(keys[idx].clone()).or_insert(0) += 1;
    }
    Ok(ShotHistogram {
        counts,
        total_shots: shots,
        rng_seed: seed,
    })
}

/// Parse a bitstring (qubit 0 first) into a basis-state index.
pub fn bits_to_index(n_qubits: usize, bitstring: &str) -> Result<usize> {
    if bitstring.len() != n_qubits {
        return Err(Error::DimensionMismatch(format!(
            "bitstring `{bitstring}` has {} bits, expected {n_qubits}",
            bitstring.len()
        )));
    }
    let mut index = 0usize;
    for (q, ch) in bitstring.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => index |= 1 << q,
            _ => return Err(Error::Parse(format!("bad bit `{ch}` in `{bitstring}`"))),
        }
    }
    Ok(index)
}

/// Render a basis-state index as a bitstring over all `n_qubits` (qubit 0 first).
pub fn index_to_bits(index: usize, n_qubits: usize) -> String {
    (0..n_qubits)
        .map(|q| if index >> q & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Render the bits of `index` restricted to an ordered qubit subset.
pub fn index_to_bits_subset(index: usize, qubits: &[usize]) -> String {
    qubits
        .iter()
        .map(|&q| if index >> q & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn subset_mask(qubits: &[usize], outcome: &str) -> Result<(usize, usize)> {
    let mut mask = 0usize;
    let mut want = 0usize;
    for (&q, ch) in qubits.iter().zip(outcome.chars()) {
        mask |= 1 << q;
        match ch {
            '0' => {}
            '1' => want |= 1 << q,
            _ => return Err(Error::Parse(format!("bad bit `{ch}` in `{outcome}`"))),
        }
    }
    Ok((mask, want))
}

pub(crate) fn check_distinct_indices(qubits: &[usize], n_qubits: usize) -> Result<()> {
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n_qubits {
            return Err(Error::IndexOutOfRange {
                index: q,
                n_qubits,
            });
        }
        if qubits[..i].contains(&q) {
            return Err(Error::DuplicateQubit(q));
        }
    }
    Ok(())
}
