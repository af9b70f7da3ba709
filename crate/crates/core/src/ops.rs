//! Excitation operators as weighted Pauli sums, their coefficient-vector
//! 1-norm, dense assembly, matrix functions, and the exactly prepared excited
//! state.
//!
//! A `PauliSum` stores every coefficient as a positive weight `lambda` plus a
//! separate sign/phase, so the 1-norm is literally the sum of the lambdas.
//! Operator text format: one term per line, `[+|-][i]lambda PAULI_STRING`,
//! with the Pauli string listing qubit 0 first.

use crate::sim::StateVector;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::fmt;

/// Proton and neutron g factors used by the magnetic-dipole operator.
pub const G_PROTON: f64 = 5.586;
pub const G_NEUTRON: f64 = -3.826;

/// Largest qubit count accepted by the dense eigendecomposition path.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Threshold below which an excited-state norm counts as zero.
pub const ETA_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(ch: char) -> Result<Self> {
        Ok(match ch {
            'I' => Pauli::I,
            'X' => Pauli::X,
            'Y' => Pauli::Y,
            'Z' => Pauli::Z,
            _ => return Err(Error::Parse(format!("bad Pauli `{ch}`"))),
        })
    }

    fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Unit phase carried separately from the positive weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Phase {
    Plus,
    Minus,
    PlusI,
    MinusI,
}

impl Phase {
    pub fn value(self) -> Complex64 {
        match self {
            Phase::Plus => Complex64::new(1.0, 0.0),
            Phase::Minus => Complex64::new(-1.0, 0.0),
            Phase::PlusI => Complex64::new(0.0, 1.0),
            Phase::MinusI => Complex64::new(0.0, -1.0),
        }
    }

    pub fn from_sign(sign: f64) -> Phase {
        if sign < 0.0 {
            Phase::Minus
        } else {
            Phase::Plus
        }
    }
}

/// One term `phase * lambda * P_0 P_1 ... P_{n-1}` with `lambda > 0`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PauliTerm {
    pub lambda: f64,
    pub phase: Phase,
    pub paulis: Vec<Pauli>,
}

impl PauliTerm {
    /// The unitary part of the term (phase times Pauli word) as a dense matrix.
    pub fn unitary_matrix(&self) -> DMatrix<Complex64> {
        let n = self.paulis.len();
        let dim = 1usize << n;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for col in 0..dim {
            let mut row = col;
            let mut amp = self.phase.value();
            for (q, p) in self.paulis.iter().enumerate() {
                let bit = row >> q & 1;
                match p {
                    Pauli::I => {}
                    Pauli::X => row ^= 1 << q,
                    Pauli::Y => {
                        row ^= 1 << q;
                        amp *= if bit == 0 {
                            Complex64::new(0.0, 1.0)
                        } else {
                            Complex64::new(0.0, -1.0)
                        };
                    }
                    Pauli::Z => {
                        if bit == 1 {
                            amp = -amp;
                        }
                    }
                }
            }
            m[(row, col)] += amp;
        }
        m
    }
}

/// A weighted sum of (phased) Pauli words on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PauliSum {
    pub terms: Vec<PauliTerm>,
    pub n_qubits: usize,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            terms: Vec::new(),
            n_qubits,
        }
    }

    /// Add `coeff * word`; the sign is split off so the stored weight stays
    /// positive. Zero coefficients are dropped.
    pub fn add_term(&mut self, coeff: f64, word: &str) -> Result<()> {
        if word.len() != self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "Pauli word `{word}` has {} characters, expected {}",
                word.len(),
                self.n_qubits
            )));
        }
        if coeff == 0.0 {
            return Ok(());
        }
        let paulis = word
            .chars()
            .map(Pauli::from_char)
            .collect::<Result<Vec<_>>>()?;
        self.terms.push(PauliTerm {
            lambda: coeff.abs(),
            phase: Phase::from_sign(coeff),
            paulis,
        });
        Ok(())
    }

    /// The 1-norm of the coefficient vector, `Lambda = sum_k lambda_k`.
    pub fn lambda_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.lambda).sum()
    }

    /// Dense matrix assembly.
    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for t in &self.terms {
            m += t.unitary_matrix() * Complex64::new(t.lambda, 0.0);
        }
        m
    }

    /// Apply the operator to a state vector (no normalization).
    pub fn apply(&self, state: &StateVector) -> Result<DVector<Complex64>> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "operator on {} qubits, state on {}",
                self.n_qubits,
                state.n_qubits()
            )));
        }
        let m = self.to_matrix();
        let v = DVector::from_column_slice(state.amplitudes());
        Ok(m * v)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.terms {
            let sign = match t.phase {
                Phase::Plus => "+",
                Phase::Minus => "-",
                Phase::PlusI => "+i",
                Phase::MinusI => "-i",
            };
            let word: String = t.paulis.iter().map(|p| p.to_char()).collect();
            out.push_str(&format!("{sign}{:?} {word}\n", t.lambda));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut n_qubits = None;
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (coeff_str, word) = line
                .split_once(' ')
                .ok_or_else(|| Error::Parse(format!("bad term `{line}`")))?;
            let (phase, num) = if let Some(rest) = coeff_str.strip_prefix("+i") {
                (Phase::PlusI, rest)
            } else if let Some(rest) = coeff_str.strip_prefix("-i") {
                (Phase::MinusI, rest)
            } else if let Some(rest) = coeff_str.strip_prefix('+') {
                (Phase::Plus, rest)
            } else if let Some(rest) = coeff_str.strip_prefix('-') {
                (Phase::Minus, rest)
            } else {
                (Phase::Plus, coeff_str)
            };
            let lambda: f64 = num
                .parse()
                .map_err(|_| Error::Parse(format!("bad coefficient `{coeff_str}`")))?;
            if lambda < 0.0 {
                return Err(Error::Parse("weights must be positive".into()));
            }
            let word = word.trim();
            match n_qubits {
                None => n_qubits = Some(word.len()),
                Some(n) if n != word.len() => {
                    return Err(Error::Parse("inconsistent word lengths".into()))
                }
                _ => {}
            }
            let paulis = word
                .chars()
                .map(Pauli::from_char)
                .collect::<Result<Vec<_>>>()?;
            terms.push(PauliTerm {
                lambda,
                phase,
                paulis,
            });
        }
        let n_qubits = n_qubits.ok_or_else(|| Error::Parse("empty operator".into()))?;
        Ok(PauliSum { terms, n_qubits })
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// `O(theta) = cos(theta) X + sin(theta) 1` on one qubit.
pub fn simple_op(theta: f64) -> PauliSum {
    let mut op = PauliSum::new(1);
    op.add_term(theta.cos(), "X").unwrap();
    op.add_term(theta.sin(), "I").unwrap();
    op
}

/// The same excitation in second quantization on two qubits:
/// `cos(theta)/2 (X0 X1 + Y0 Y1) + sin(theta) 1`. The hopping term moves
/// `|10>` to `|01>` with amplitude `cos(theta)`.
pub fn second_quantized_simple_op(theta: f64) -> PauliSum {
    let mut op = PauliSum::new(2);
    op.add_term(theta.cos() / 2.0, "XX").unwrap();
    op.add_term(theta.cos() / 2.0, "YY").unwrap();
    op.add_term(theta.sin(), "II").unwrap();
    op
}

/// Angle and g-factor inputs for the magnetic-dipole transition operator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NuclearOpParams {
    pub theta_prime: f64,
    pub g_p: f64,
    pub g_n: f64,
    pub mu_n: f64,
}

impl NuclearOpParams {
    pub fn new(theta_prime: f64) -> Self {
        Self {
            theta_prime,
            g_p: G_PROTON,
            g_n: G_NEUTRON,
            mu_n: 1.0,
        }
    }

    /// `alpha = sin(theta') (g_p + g_n) mu_N / 4`.
    pub fn alpha(&self) -> f64 {
        self.theta_prime.sin() * (self.g_p + self.g_n) * self.mu_n / 4.0
    }

    /// `beta = mu_N (g_p - g_n) cos(theta') / (2 sqrt 2)`.
    pub fn beta(&self) -> f64 {
        self.mu_n * (self.g_p - self.g_n) * self.theta_prime.cos() / (2.0 * 2.0f64.sqrt())
    }
}

/// First-quantized dipole operator `alpha 1 + beta X - alpha Z`, whose matrix
/// is `[[0, beta], [beta, 2 alpha]]`.
pub fn nuclear_op_first_q(params: &NuclearOpParams) -> PauliSum {
    let (a, b) = (params.alpha(), params.beta());
    let mut op = PauliSum::new(1);
    op.add_term(a, "I").unwrap();
    op.add_term(b, "X").unwrap();
    op.add_term(-a, "Z").unwrap();
    op
}

/// Which second-quantized form of the dipole operator to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SecondQuantizedVariant {
    /// `alpha 1 + beta/2 (XX + YY) + alpha Z1`; corner entries `2 alpha`, `0`.
    A,
    /// `alpha 1 + beta/2 (XX + YY) - alpha/2 (Z0 - Z1)`; corner entries
    /// `alpha`, `alpha`. This one admits the shallower LCU implementation.
    B,
}

/// Second-quantized dipole operator on two qubits. Both variants have the
/// block `[[0, beta], [beta, 2 alpha]]` on the one-particle states
/// `{|01>, |10>}`.
pub fn nuclear_op_second_q(variant: SecondQuantizedVariant, params: &NuclearOpParams) -> PauliSum {
    let (a, b) = (params.alpha(), params.beta());
    let mut op = PauliSum::new(2);
    op.add_term(b / 2.0, "XX").unwrap();
    op.add_term(b / 2.0, "YY").unwrap();
    match variant {
        SecondQuantizedVariant::A => {
            op.add_term(a, "II").unwrap();
            op.add_term(a, "IZ").unwrap();
        }
        SecondQuantizedVariant::B => {
            op.add_term(a, "II").unwrap();
            op.add_term(-a / 2.0, "ZI").unwrap();
            op.add_term(a / 2.0, "IZ").unwrap();
        }
    }
    op
}

/// Uniform-angle form used for sweeps:
/// `sin(theta) 1 + cos(theta)/2 (XX + YY) - sin(theta)/2 (Z0 - Z1)`.
/// The physical operator is recovered as
/// `sqrt(alpha^2 + beta^2) * nuclear_op_uniform(arctan(alpha / beta))`.
pub fn nuclear_op_uniform(theta: f64) -> PauliSum {
    let mut op = PauliSum::new(2);
    op.add_term(theta.sin(), "II").unwrap();
    op.add_term(theta.cos() / 2.0, "XX").unwrap();
    op.add_term(theta.cos() / 2.0, "YY").unwrap();
    op.add_term(-theta.sin() / 2.0, "ZI").unwrap();
    op.add_term(theta.sin() / 2.0, "IZ").unwrap();
    op
}

/// The angle substitution that turns the uniform operator into the physical
/// one (up to the overall scale `sqrt(alpha^2 + beta^2)`).
pub fn uniform_angle_for(params: &NuclearOpParams) -> f64 {
    params.alpha().atan2(params.beta())
}

/// The exact excited state `O |psi0> / eta` with `eta = ||O |psi0>||`.
#[derive(Debug, Clone)]
pub struct ExcitedStateRef {
    pub eta: f64,
    pub state: StateVector,
}

/// Dense computation of the normalized excited state and its norm.
pub fn exact_excited_state(op: &PauliSum, psi0: &StateVector) -> Result<ExcitedStateRef> {
    let v = op.apply(psi0)?;
    let eta = v.norm();
    if eta < ETA_EPS {
        return Err(Error::ZeroNorm(eta));
    }
    let amps = v.iter().map(|a| a / eta).collect();
    Ok(ExcitedStateRef {
        eta,
        state: StateVector::from_amplitudes(amps)?,
    })
}

/// Dense `exp(-i gamma O)`, `sin(gamma O)`, `cos(gamma O)` for Hermitian `O`.
#[derive(Debug, Clone)]
pub struct MatrixFunctions {
    pub exp: DMatrix<Complex64>,
    pub sin: DMatrix<Complex64>,
    pub cos: DMatrix<Complex64>,
}

/// Eigendecomposition-based matrix functions of `gamma * O`.
pub fn matrix_functions(op: &PauliSum, gamma: f64) -> Result<MatrixFunctions> {
    if op.n_qubits > MAX_DENSE_QUBITS {
        return Err(Error::DimensionTooLarge(op.n_qubits));
    }
    let m = op.to_matrix();
    let herm_dev = (&m - m.adjoint()).norm();
    if herm_dev > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "operator is not Hermitian (deviation {herm_dev:.3e})"
        )));
    }
    let eig = nalgebra::SymmetricEigen::new(m);
    let dim = eig.eigenvalues.len();
    let mut exp_d = DMatrix::<Complex64>::zeros(dim, dim);
    let mut sin_d = DMatrix::<Complex64>::zeros(dim, dim);
    let mut cos_d = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        let x = gamma * eig.eigenvalues[i];
        exp_d[(i, i)] = Complex64::from_polar(1.0, -x);
        sin_d[(i, i)] = Complex64::new(x.sin(), 0.0);
        cos_d[(i, i)] = Complex64::new(x.cos(), 0.0);
    }
    let v = eig.eigenvectors;
    let vh = v.adjoint();
    Ok(MatrixFunctions {
        exp: &v * exp_d * &vh,
        sin: &v * sin_d * &vh,
        cos: &v * cos_d * &vh,
    })
}
