//! Exact and sampled protocol observables: success probabilities, transition
//! probabilities, and the closed-form depolarizing-channel predictions.

use crate::noise::{simulate_with_cnot_noise, NoiseSpec};
use crate::ops::{exact_excited_state, matrix_functions, PauliSum};
use crate::prep::{lcu_full_circuit, td_circuit, LcuVariant, TdPrepSpec};
use crate::sim::{bits_to_index, StateVector};
use crate::{Error, Result};
use nalgebra::DVector;

/// A value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(value: f64, stderr: f64) -> Self {
        Self { value, stderr }
    }

    pub fn exact(value: f64) -> Self {
        Self {
            value,
            stderr: 0.0,
        }
    }

    /// Wald standard error of a binomial frequency.
    pub fn binomial(p: f64, shots: u64) -> Self {
        let var = (p * (1.0 - p)).max(0.0) / shots as f64;
        Self {
            value: p,
            stderr: var.sqrt(),
        }
    }

    /// First-order error propagation for the ratio of two frequencies.
    pub fn ratio(num: Estimate, den: Estimate) -> Self {
        let value = num.value / den.value;
        let rel2 = if num.value != 0.0 && den.value != 0.0 {
            (num.stderr / num.value).powi(2) + (den.stderr / den.value).powi(2)
        } else if den.value != 0.0 {
            // zero numerator: keep the absolute numerator error scaled
            return Self {
                value,
                stderr: num.stderr / den.value,
            };
        } else {
            0.0
        };
        Self {
            value,
            stderr: value.abs() * rel2.sqrt(),
        }
    }
}

/// Which estimator produced a transition probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum EstimatorKind {
    /// Post-selected projection for the time-dependent protocol.
    TdPt,
    /// Joint frequency rescaled by the analytic success probability.
    LcuPtA,
    /// Joint frequency divided by the measured success probability.
    LcuPtB,
}

/// Shot-level outcome of one protocol run.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ProtocolResult {
    pub p_success: Estimate,
    pub p_transition: Option<Estimate>,
    pub estimator_kind: EstimatorKind,
    pub shots: u64,
    /// Set when no shot passed post-selection; downstream consumers skip the
    /// transition estimate in that case.
    pub zero_success: bool,
}

/// Exact observables of the time-dependent protocol.
#[derive(Debug, Clone)]
pub struct TdExact {
    pub p_success: f64,
    pub state: StateVector,
    pub fidelity: f64,
}

/// `P_s = <psi0| sin^2(gamma O) |psi0>`, the post-selected state, and its
/// fidelity against the exact excited state.
pub fn td_exact(op: &PauliSum, psi0: &StateVector, gamma: f64) -> Result<TdExact> {
    let f = matrix_functions(op, gamma)?;
    let v0 = DVector::from_column_slice(psi0.amplitudes());
    let sv = &f.sin * &v0;
    let p_success = sv.norm_squared();
    if p_success < 1e-300 {
        return Err(Error::ZeroNorm(p_success));
    }
    let norm = p_success.sqrt();
    let state = StateVector::from_amplitudes(sv.iter().map(|a| a / norm).collect())?;
    let reference = exact_excited_state(op, psi0)?;
    let fidelity = state.fidelity(&reference.state)?;
    Ok(TdExact {
        p_success,
        state,
        fidelity,
    })
}

/// Exact transition probability of the time-dependent protocol,
/// `|<final| sin(gamma O) |psi0>|^2 / P_s`.
pub fn td_exact_transition(
    op: &PauliSum,
    psi0: &StateVector,
    final_bits: &str,
    gamma: f64,
) -> Result<f64> {
    let f = matrix_functions(op, gamma)?;
    let v0 = DVector::from_column_slice(psi0.amplitudes());
    let sv = &f.sin * &v0;
    let ps = sv.norm_squared();
    if ps < 1e-300 {
        return Err(Error::ZeroNorm(ps));
    }
    let idx = bits_to_index(op.n_qubits, final_bits)?;
    Ok(sv[idx].norm_sqr() / ps)
}

/// Run the time-dependent protocol with shots and optional noise.
///
/// The circuit's ancilla is qubit 0 and the system occupies the remaining
/// wires; post-selection keeps shots with the ancilla in `|1>`.
pub fn td_run(
    spec: &TdPrepSpec,
    psi0_bits: &str,
    final_bits: &str,
    shots: u64,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<ProtocolResult> {
    let circuit = td_circuit(spec)?;
    let n = circuit.n_qubits;
    let mut bits = String::with_capacity(n);
    bits.push('0'); // ancilla
    bits.push_str(psi0_bits);
    let initial = StateVector::new_basis_state(n, &bits)?;
    let hist = simulate_with_cnot_noise(&circuit, &initial, noise, shots, seed)?;

    let accept = |k: &str| k.as_bytes()[0] == b'1';
    let p_s = hist.frequency_where(accept);
    let p_success = Estimate::binomial(p_s, shots);
    if p_s == 0.0 {
        return Ok(ProtocolResult {
            p_success,
            p_transition: None,
            estimator_kind: EstimatorKind::TdPt,
            shots,
            zero_success: true,
        });
    }
    let joint = hist.frequency_where(|k| accept(k) && &k[1..] == final_bits);
    let p_t = Estimate::ratio(Estimate::binomial(joint, shots), p_success);
    Ok(ProtocolResult {
        p_success,
        p_transition: Some(p_t),
        estimator_kind: EstimatorKind::TdPt,
        shots,
        zero_success: false,
    })
}

/// Exact LCU observables for one variant at one angle.
#[derive(Debug, Clone, Copy)]
pub struct LcuExact {
    pub p_success: f64,
    pub p_transition: f64,
    pub eta: f64,
    pub lambda: f64,
}

/// `P_s = eta^2 / Lambda^2` and `P_t = |<final|O|psi0>|^2 / eta^2`.
pub fn lcu_exact(variant: LcuVariant, theta: f64) -> Result<LcuExact> {
    let op = variant.operator(theta);
    let lambda = op.lambda_norm();
    let psi0 = StateVector::new_basis_state(op.n_qubits, variant.initial_target_bits())?;
    let excited = exact_excited_state(&op, &psi0)?;
    let eta = excited.eta;
    let fidx = bits_to_index(op.n_qubits, variant.final_target_bits())?;
    let applied = op.apply(&psi0)?;
    let p_transition = applied[fidx].norm_sqr() / (eta * eta);
    Ok(LcuExact {
        p_success: (eta / lambda).powi(2),
        p_transition,
        eta,
        lambda,
    })
}

/// Both LCU transition-probability estimators computed from one shot batch.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LcuRun {
    pub p_success: Estimate,
    pub pt_a: Option<Estimate>,
    pub pt_b: Option<Estimate>,
    pub shots: u64,
    pub zero_success: bool,
}

/// Run the LCU protocol with shots and optional noise.
///
/// `P_s` is the all-ancillas-zero frequency. The A-estimator rescales the
/// joint (accept, final-state) frequency by the analytic success probability
/// `eta^2 / Lambda^2`; the B-estimator divides by the measured one.
pub fn lcu_run(
    variant: LcuVariant,
    theta: f64,
    shots: u64,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<LcuRun> {
    let lcu = lcu_full_circuit(variant, theta)?;
    let initial = lcu.initial_state(variant.initial_target_bits())?;
    let hist = simulate_with_cnot_noise(&lcu.circuit, &initial, noise, shots, seed)?;
    let exact = lcu_exact(variant, theta)?;

    let anc = lcu.ancilla_wires.clone();
    let tgt = lcu.target_wires.clone();
    let final_bits: Vec<u8> = variant.final_target_bits().bytes().collect();
    let accept = move |k: &str| anc.iter().all(|&w| k.as_bytes()[w] == b'0');
    let in_final = move |k: &str| {
        tgt.iter()
            .enumerate()
            .all(|(i, &w)| k.as_bytes()[w] == final_bits[i])
    };

    let p_s = hist.frequency_where(&accept);
    let p_success = Estimate::binomial(p_s, shots);
    let joint = hist.frequency_where(|k| accept(k) && in_final(k));
    let joint_est = Estimate::binomial(joint, shots);

    // analytic rescale: joint / (eta^2 / Lambda^2)
    let scale = exact.p_success;
    let pt_a = Some(Estimate::new(
        joint_est.value / scale,
        joint_est.stderr / scale,
    ));
    let (pt_b, zero_success) = if p_s == 0.0 {
        (None, true)
    } else {
        (Some(Estimate::ratio(joint_est, p_success)), false)
    };
    Ok(LcuRun {
        p_success,
        pt_a,
        pt_b,
        shots,
        zero_success,
    })
}

/// Closed-form observables under a global depolarizing channel of strength
/// `eps` on `n` system plus `k` ancilla qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepolarizedPredictions {
    /// `(1 - eps) P_s + eps / 2^k`
    pub p_s: f64,
    /// `((1 - eps) P_s m + eps / d) / P_s^E` — the ratio estimator
    pub m: f64,
    /// `(1 - eps) m + eps / (d P_s)` — the analytic-rescale estimator
    pub m_tilde: f64,
}

/// Evaluate the depolarized closed forms; errs when the noisy success
/// probability vanishes.
pub fn depolarized_predictions(
    p_s: f64,
    m: f64,
    k: u32,
    n: u32,
    eps: f64,
) -> Result<DepolarizedPredictions> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidArgument("eps must lie in [0, 1]".into()));
    }
    let d = 2.0f64.powi((n + k) as i32);
    let p_s_e = (1.0 - eps) * p_s + eps / 2.0f64.powi(k as i32);
    if p_s_e <= 0.0 {
        return Err(Error::ZeroNorm(p_s_e));
    }
    let m_e = ((1.0 - eps) * p_s * m + eps / d) / p_s_e;
    let m_tilde_e = (1.0 - eps) * m + eps / (d * p_s);
    Ok(DepolarizedPredictions {
        p_s: p_s_e,
        m: m_e,
        m_tilde: m_tilde_e,
    })
}

/// Upper bound on `|m^E - m|` for the ratio estimator under depolarizing
/// noise: `eps/(1-eps) (1/(d P_s) + m/(2^k P_s) + eps/((1-eps) d 2^k P_s^2))`.
pub fn ratio_estimator_error_bound(p_s: f64, m: f64, k: u32, n: u32, eps: f64) -> f64 {
    let d = 2.0f64.powi((n + k) as i32);
    let two_k = 2.0f64.powi(k as i32);
    let f = eps / (1.0 - eps);
    f * (1.0 / (d * p_s) + m / (two_k * p_s) + f / (d * two_k * p_s * p_s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{nuclear_op_first_q, simple_op, NuclearOpParams};
    use crate::prep::TdVariant;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn td_exact_simple_values() {
        // O = X, psi0 = |0>, gamma = 0.3: P_s = sin^2(0.3)
        let psi0 = StateVector::new_basis_state(1, "0").unwrap();
        let r = td_exact(&simple_op(0.0), &psi0, 0.3).unwrap();
        assert!((r.p_success - 0.3f64.sin().powi(2)).abs() < 1e-12);
        assert!((r.fidelity - 1.0).abs() < 1e-12);

        // all theta: P_s in the quoted band at gamma = 0.3
        for i in 0..=100 {
            let theta = PI * i as f64 / 100.0;
            let r = td_exact(&simple_op(theta), &psi0, 0.3).unwrap();
            assert!(r.p_success >= 0.0846 && r.p_success <= 0.09, "{}", r.p_success);
        }
    }

    #[test]
    fn td_exact_nuclear_floor() {
        // min over theta' of P_s(0.3) with psi0 = |1> is 6.8%
        let psi0 = StateVector::new_basis_state(1, "1").unwrap();
        let mut min_ps = f64::INFINITY;
        for i in 0..=500 {
            let tp = PI * i as f64 / 500.0;
            let op = nuclear_op_first_q(&NuclearOpParams::new(tp));
            let r = td_exact(&op, &psi0, 0.3).unwrap();
            min_ps = min_ps.min(r.p_success);
        }
        assert!((min_ps - 0.068).abs() < 1e-3, "min = {min_ps}");
    }

    #[test]
    fn td_run_noiseless_limits() {
        let noise = NoiseSpec::noiseless();
        // theta = 0: O = X flips |0> to |1> exactly, so P_t = 1
        let spec = TdPrepSpec::new(simple_op(0.0), 0.3, TdVariant::Simple);
        let r = td_run(&spec, "0", "1", 200_000, &noise, 11).unwrap();
        let ps_exact = 0.3f64.sin().powi(2);
        assert!((r.p_success.value - ps_exact).abs() < 5.0 * r.p_success.stderr.max(1e-6));
        let pt = r.p_transition.unwrap();
        assert!((pt.value - 1.0).abs() < 1e-9);

        // theta = pi/2: O is the identity, nothing can flip -> P_t = 0
        let spec = TdPrepSpec::new(simple_op(FRAC_PI_2), 0.3, TdVariant::Simple);
        let r = td_run(&spec, "0", "1", 100_000, &noise, 12).unwrap();
        let pt = r.p_transition.unwrap();
        assert!(pt.value.abs() < 1e-9);
    }

    #[test]
    fn td_run_zero_success_flag() {
        // gamma -> 0 makes P_s = O(gamma^2) tiny; with few shots the
        // post-selected sample is empty and the result is flagged
        let noise = NoiseSpec::noiseless();
        let spec = TdPrepSpec::new(simple_op(0.2), 1e-6, TdVariant::Simple);
        let r = td_run(&spec, "0", "1", 200, &noise, 5).unwrap();
        assert!(r.zero_success);
        assert!(r.p_transition.is_none());
    }

    #[test]
    fn lcu_exact_values() {
        // simple-2q theta = 0: Lambda = 1, eta = 1, P_s = 1, P_t = 1
        let e = lcu_exact(LcuVariant::Simple2qOptimized, 0.0).unwrap();
        assert!((e.p_success - 1.0).abs() < 1e-12);
        assert!((e.p_transition - 1.0).abs() < 1e-12);

        // theta = pi/4: P_s = 1 / Lambda^2 = 1/2
        let e = lcu_exact(LcuVariant::Simple2qOptimized, PI / 4.0).unwrap();
        assert!((e.p_success - 0.5).abs() < 1e-12);

        // first-quantized dipole: P_s >= 0.5 for all angles
        for i in 0..=200 {
            let tp = PI * i as f64 / 200.0;
            let e = lcu_exact(LcuVariant::Nuclear1q, tp).unwrap();
            assert!(e.p_success >= 0.5 - 1e-12, "ps = {}", e.p_success);
            let p = NuclearOpParams::new(tp);
            let (a, b) = (p.alpha(), p.beta());
            let expect = (b * b + 4.0 * a * a) / (2.0 * a + b.abs()).powi(2);
            assert!((e.p_success - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn lcu_run_noiseless_consistency() {
        let noise = NoiseSpec::noiseless();
        let r = lcu_run(LcuVariant::Simple2qOptimized, 0.0, 50_000, &noise, 3).unwrap();
        assert!((r.p_success.value - 1.0).abs() < 1e-9);
        assert!((r.pt_a.unwrap().value - 1.0).abs() < 1e-9);
        assert!((r.pt_b.unwrap().value - 1.0).abs() < 1e-9);

        // A and B estimators coincide within errors without noise
        for theta in [0.4, 1.2, 2.6] {
            let r = lcu_run(LcuVariant::Simple2qOptimized, theta, 100_000, &noise, 17).unwrap();
            let (a, b) = (r.pt_a.unwrap(), r.pt_b.unwrap());
            let sigma = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt().max(1e-9);
            assert!((a.value - b.value).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn depolarized_closed_forms() {
        // eps = 0: unchanged
        let p = depolarized_predictions(0.4, 0.7, 2, 2, 0.0).unwrap();
        assert!((p.p_s - 0.4).abs() < 1e-15);
        assert!((p.m - 0.7).abs() < 1e-12);
        assert!((p.m_tilde - 0.7).abs() < 1e-15);

        // eps = 1, k = 1: P_s^E = 1/2
        let p = depolarized_predictions(0.4, 0.7, 1, 2, 1.0).unwrap();
        assert!((p.p_s - 0.5).abs() < 1e-15);
    }
}
