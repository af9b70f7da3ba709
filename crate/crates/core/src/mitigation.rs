//! Error mitigation and quality metrics: readout inversion with variance
//! propagation, zero-noise extrapolation (Richardson, polynomial,
//! exponential), the order-ladder consistency check, strategy combination,
//! resampled error bars, and the chi-squared / nssd quality metrics.
//!
//! The noise level of ladder entry `k` is taken as `2k - 1` in arbitrary
//! units (the CNOT count of the repetition-amplified circuit scales exactly
//! that way), so the unknown per-gate error cancels in every intercept.

use crate::estimators::Estimate;
use crate::noise::ReadoutCalibration;
use crate::sim::{bits_to_index, ShotHistogram};
use crate::{Error, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Observable estimates at increasing noise-amplification index, `k` starting
/// at 1.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct NoiseLadder {
    pub entries: Vec<(usize, Estimate)>,
}

impl NoiseLadder {
    pub fn new(entries: Vec<(usize, Estimate)>) -> Result<Self> {
        let increasing = entries
            .windows(2)
            .all(|w| w[1].0 > w[0].0);
        if entries.is_empty() || entries[0].0 != 1 || !increasing {
            return Err(Error::InvalidArgument(
                "ladder indices must increase from k = 1".into(),
            ));
        }
        Ok(Self { entries })
    }

    pub fn from_estimates(values: &[Estimate]) -> Result<Self> {
        Self::new(
            values
                .iter()
                .enumerate()
                .map(|(i, &e)| (i + 1, e))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Noise-level proxy of entry `i`: `2 k_i - 1`.
    pub fn epsilon(&self, i: usize) -> f64 {
        (2 * self.entries[i].0 - 1) as f64
    }

    pub fn truncated(&self, len: usize) -> NoiseLadder {
        NoiseLadder {
            entries: self.entries[..len].to_vec(),
        }
    }
}

/// Corrected observable after tensor-product inverse-calibration.
///
/// `weights[i]` is the observable weight of basis outcome `i`; the returned
/// variance includes shot noise propagated through the inverse matrix plus
/// the calibration-uncertainty terms. Corrected probability vectors with
/// negative components compatible with zero are clipped; larger violations
/// fall back to a non-negative least-squares inversion (the central value
/// keeps the linear-inversion error estimate).
pub fn readout_invert(
    hist: &ShotHistogram,
    cal: &ReadoutCalibration,
    weights: &[f64],
) -> Result<Estimate> {
    let n = cal.n_qubits();
    let dim = 1usize << n;
    if weights.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for dimension {dim}",
            weights.len()
        )));
    }
    for (q, qc) in cal.qubits.iter().enumerate() {
        if qc.d() <= 0.0 {
            return Err(Error::SingularCalibration(q));
        }
    }
    let shots = hist.total_shots as f64;
    let mut p_e = vec![0.0f64; dim];
    for (bits, &count) in &hist.counts {
        p_e[bits_to_index(n, bits)?] = count as f64 / shots;
    }
    let inv: Vec<[[f64; 2]; 2]> = cal.qubits.iter().map(|q| q.inverse()).collect();
    let inv_var: Vec<[[f64; 2]; 2]> = cal.qubits.iter().map(|q| q.inverse_variance()).collect();

    let minv = |i: usize, j: usize| -> f64 {
        let mut v = 1.0;
        for (q, m) in inv.iter().enumerate() {
            v *= m[i >> q & 1][j >> q & 1];
        }
        v
    };
    // variance of a product of independent entries
    let minv_var = |i: usize, j: usize| -> f64 {
        let mut prod_m2v = 1.0;
        let mut prod_m2 = 1.0;
        for q in 0..n {
            let m = inv[q][i >> q & 1][j >> q & 1];
            let v = inv_var[q][i >> q & 1][j >> q & 1];
            prod_m2v *= m * m + v;
            prod_m2 *= m * m;
        }
        prod_m2v - prod_m2
    };

    let mut p = vec![0.0f64; dim];
    for i in 0..dim {
        for (j, &pe) in p_e.iter().enumerate() {
            if pe != 0.0 {
                p[i] += minv(i, j) * pe;
            }
        }
    }

    // per-component standard deviations for the clipping decision
    let shot_var = |j: usize| p_e[j] * (1.0 - p_e[j]) / shots;
    let mut needs_fallback = false;
    for i in 0..dim {
        if p[i] < 0.0 {
            let mut var_i = 0.0;
            for j in 0..dim {
                var_i += minv(i, j).powi(2) * shot_var(j) + minv_var(i, j) * p_e[j] * p_e[j];
            }
            if p[i] < -var_i.sqrt() {
                needs_fallback = true;
            }
        }
    }
    if needs_fallback {
        p = nnls_probabilities(cal, &p_e)?;
    }
    // clip residual negatives compatible with zero, then renormalize
    let mut total = 0.0;
    for x in p.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
        total += *x;
    }
    if total > 0.0 {
        for x in p.iter_mut() {
            *x /= total;
        }
    }

    let value: f64 = weights.iter().zip(&p).map(|(w, pi)| w * pi).sum();
    // error estimate from the linear inversion
    let mut variance = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let mut shot_term = 0.0;
        let mut cal_term = 0.0;
        for j in 0..dim {
            shot_term += minv(i, j).powi(2) * shot_var(j);
            cal_term += minv_var(i, j) * p_e[j] * p_e[j];
        }
        variance += w * w * (shot_term + cal_term);
    }
    Ok(Estimate::new(value, variance.sqrt()))
}

/// Non-negative least squares `min || P p - p_e ||` over `p >= 0`, by
/// iteratively clamping the most negative component.
fn nnls_probabilities(cal: &ReadoutCalibration, p_e: &[f64]) -> Result<Vec<f64>> {
    let n = cal.n_qubits();
    let dim = 1usize << n;
    let mats: Vec<[[f64; 2]; 2]> = cal.qubits.iter().map(|q| q.matrix()).collect();
    let mut p_mat = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut v = 1.0;
            for (q, m) in mats.iter().enumerate() {
                v *= m[i >> q & 1][j >> q & 1];
            }
            p_mat[(i, j)] = v;
        }
    }
    let y = nalgebra::DVector::from_column_slice(p_e);
    let mut clamped = vec![false; dim];
    loop {
        let free: Vec<usize> = (0..dim).filter(|&i| !clamped[i]).collect();
        if free.is_empty() {
            return Ok(vec![0.0; dim]);
        }
        let sub = p_mat.select_columns(free.iter());
        let svd = sub.svd(true, true);
        let sol = svd
            .solve(&y, 1e-12)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut full = vec![0.0f64; dim];
        let mut worst: Option<(usize, f64)> = None;
        for (pos, &i) in free.iter().enumerate() {
            full[i] = sol[pos];
            if sol[pos] < -1e-12 {
                match worst {
                    Some((_, w)) if w <= sol[pos] => {}
                    _ => worst = Some((i, sol[pos])),
                }
            }
        }
        match worst {
            Some((i, _)) => clamped[i] = true,
            None => return Ok(full),
        }
    }
}

/// Richardson extrapolation of order `order` using the first `order + 1`
/// ladder entries. `order = 1` reproduces `(3 O_1 - O_2) / 2` bit-exactly.
pub fn richardson_extrapolate(ladder: &NoiseLadder, order: usize) -> Result<Estimate> {
    if ladder.len() < order + 1 {
        return Err(Error::InsufficientData(format!(
            "Richardson order {order} needs {} entries, have {}",
            order + 1,
            ladder.len()
        )));
    }
    if order == 0 {
        return Ok(ladder.entries[0].1);
    }
    if order == 1 {
        let o1 = ladder.entries[0].1;
        let o2 = ladder.entries[1].1;
        let value = 0.5 * (3.0 * o1.value - o2.value);
        let stderr = (2.25 * o1.stderr * o1.stderr + 0.25 * o2.stderr * o2.stderr).sqrt();
        return Ok(Estimate::new(value, stderr));
    }
    // Lagrange interpolation through (epsilon_k, O_k), evaluated at 0
    let m = order + 1;
    let mut value = 0.0;
    let mut var = 0.0;
    for k in 0..m {
        let ek = ladder.epsilon(k);
        let mut coeff = 1.0;
        for j in 0..m {
            if j != k {
                let ej = ladder.epsilon(j);
                coeff *= ej / (ej - ek);
            }
        }
        value += coeff * ladder.entries[k].1.value;
        var += coeff * coeff * ladder.entries[k].1.stderr.powi(2);
    }
    Ok(Estimate::new(value, var.sqrt()))
}

/// Weighted polynomial fit in the noise level with intercept extraction.
///
/// Degrees `0..=max_degree` are tried (capped so every fit keeps at least one
/// degree of freedom) and the lowest degree with fit chi-squared at most one
/// wins. Returns the intercept estimate, the degree used and the fit
/// chi-squared.
pub fn polynomial_extrapolate(
    ladder: &NoiseLadder,
    max_degree: usize,
) -> Result<(Estimate, usize, f64)> {
    let n = ladder.len();
    if n < 2 {
        return Err(Error::InsufficientData(
            "polynomial fit needs at least two points".into(),
        ));
    }
    let cap = max_degree.min(n - 2);
    for degree in 0..=cap {
        if let Ok((est, chi2)) = weighted_poly_fit(ladder, degree) {
            if chi2 <= 1.0 {
                return Ok((est, degree, chi2));
            }
        }
    }
    Err(Error::StrategyFailed(
        "no polynomial degree reaches chi-squared <= 1".into(),
    ))
}

/// Weighted least-squares fit of a fixed degree; returns the intercept and
/// the fit chi-squared.
pub fn weighted_poly_fit(ladder: &NoiseLadder, degree: usize) -> Result<(Estimate, f64)> {
    let n = ladder.len();
    let cols = degree + 1;
    if n < cols {
        return Err(Error::InsufficientData("underdetermined fit".into()));
    }
    let mut xtwx = DMatrix::<f64>::zeros(cols, cols);
    let mut xtwy = nalgebra::DVector::<f64>::zeros(cols);
    for i in 0..n {
        let e = ladder.epsilon(i);
        let o = ladder.entries[i].1;
        let sigma = if o.stderr > 0.0 { o.stderr } else { 1e-12 };
        let w = 1.0 / (sigma * sigma);
        let mut row = vec![1.0f64; cols];
        for c in 1..cols {
            row[c] = row[c - 1] * e;
        }
        for a in 0..cols {
            for b in 0..cols {
                xtwx[(a, b)] += w * row[a] * row[b];
            }
            xtwy[a] += w * row[a] * o.value;
        }
    }
    let inv = xtwx
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("singular normal equations".into()))?;
    let coeffs = &inv * xtwy;
    let mut chi2 = 0.0;
    for i in 0..n {
        let e = ladder.epsilon(i);
        let o = ladder.entries[i].1;
        let sigma = if o.stderr > 0.0 { o.stderr } else { 1e-12 };
        let mut fit = 0.0;
        let mut pow = 1.0;
        for c in 0..cols {
            fit += coeffs[c] * pow;
            pow *= e;
        }
        chi2 += ((o.value - fit) / sigma).powi(2);
    }
    Ok((Estimate::new(coeffs[0], inv[(0, 0)].max(0.0).sqrt()), chi2))
}

/// Two-point exponential extrapolation using entries 1 and `k`:
/// `O_F = O_1 (O_1 / O_k)^{1 / (2(k - 1))}`. Fails on sign changes or zeros.
pub fn exponential_extrapolate(ladder: &NoiseLadder, k: usize) -> Result<Estimate> {
    let pos = ladder
        .entries
        .iter()
        .position(|&(idx, _)| idx == k)
        .ok_or_else(|| Error::InsufficientData(format!("no ladder entry k = {k}")))?;
    if k < 2 {
        return Err(Error::InvalidArgument("pair requires k >= 2".into()));
    }
    let o1 = ladder.entries[0].1;
    let ok = ladder.entries[pos].1;
    if o1.value == 0.0 || ok.value == 0.0 || (o1.value.signum() != ok.value.signum()) {
        return Err(Error::StrategyFailed(
            "exponential fit requires same-sign, nonzero endpoints".into(),
        ));
    }
    let expo = 1.0 / (2.0 * (k as f64 - 1.0));
    let ratio = o1.value / ok.value;
    let value = o1.value * ratio.powf(expo);
    // first-order propagation
    let d1 = (value / o1.value) * (1.0 + expo);
    let dk = -value * expo / ok.value;
    let stderr = ((d1 * o1.stderr).powi(2) + (dk * ok.stderr).powi(2)).sqrt();
    Ok(Estimate::new(value, stderr))
}

/// Two estimates are compatible at the `m sigma` level when their difference
/// is within `m sqrt(E_A^2 + E_B^2)`.
pub fn compatible(a: &Estimate, b: &Estimate, m_sigma: f64) -> bool {
    (a.value - b.value).abs() <= m_sigma * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ConsistencyFlag {
    /// The unextrapolated result is already consistent with every order.
    NoExtrapolationNeeded,
    /// A higher order was chosen with no recorded failures.
    ErrorFree,
    /// A higher order was chosen after some failures.
    Accepted,
    /// No order passed, even after dropping the highest entry once.
    Failed,
}

/// Outcome of the order-ladder consistency check.
#[derive(Debug, Clone)]
pub struct ConsistencyOutcome {
    pub ctest: Vec<bool>,
    pub error_count: usize,
    /// Index into the checked list of the chosen (lowest consistent) entry.
    pub chosen_index: Option<usize>,
    pub flag: ConsistencyFlag,
}

/// Forward pairwise consistency check over an order ladder of results.
///
/// Entry `i` passes when it is compatible with every later entry; the count
/// of failures accumulates (and is not reset by the retry that drops the
/// highest-order entry when no entry passes). The last entry's vacuous pass
/// does not count as a success — trusting the highest-order extrapolation
/// alone is exactly the uncontrolled case the check exists to catch — so a
/// fully inconsistent ladder ends in the failed flag.
pub fn consistency_check(results: &[Estimate], m_sigma: f64) -> ConsistencyOutcome {
    fn pass(results: &[Estimate], m_sigma: f64, error_count: &mut usize) -> Vec<bool> {
        let n = results.len();
        let mut ctest = vec![true; n];
        for i in 0..n {
            for j in i + 1..n {
                if !compatible(&results[i], &results[j], m_sigma) {
                    ctest[i] = false;
                    *error_count += 1;
                    break;
                }
            }
        }
        ctest
    }
    fn choose(ctest: &[bool]) -> Option<usize> {
        ctest[..ctest.len().saturating_sub(1)]
            .iter()
            .position(|&c| c)
    }

    let mut error_count = 0usize;
    let ctest = pass(results, m_sigma, &mut error_count);
    if let Some(first) = choose(&ctest) {
        let flag = if first == 0 {
            ConsistencyFlag::NoExtrapolationNeeded
        } else if error_count == 0 {
            ConsistencyFlag::ErrorFree
        } else {
            ConsistencyFlag::Accepted
        };
        return ConsistencyOutcome {
            ctest,
            error_count,
            chosen_index: Some(first),
            flag,
        };
    }
    // retry without the highest-order result, keeping the error count
    if results.len() > 2 {
        let shorter = &results[..results.len() - 1];
        let ctest2 = pass(shorter, m_sigma, &mut error_count);
        if let Some(first) = choose(&ctest2) {
            let flag = if first == 0 {
                ConsistencyFlag::NoExtrapolationNeeded
            } else {
                ConsistencyFlag::Accepted
            };
            return ConsistencyOutcome {
                ctest: ctest2,
                error_count,
                chosen_index: Some(first),
                flag,
            };
        }
        return ConsistencyOutcome {
            ctest: ctest2,
            error_count,
            chosen_index: None,
            flag: ConsistencyFlag::Failed,
        };
    }
    ConsistencyOutcome {
        ctest,
        error_count,
        chosen_index: None,
        flag: ConsistencyFlag::Failed,
    }
}

/// One extrapolation strategy's final candidate.
#[derive(Debug, Clone, Copy)]
pub struct StrategyResult {
    pub estimate: Estimate,
    pub error_count: usize,
    pub ok: bool,
}

/// Combine per-strategy results: a successful global linear fit wins
/// outright; otherwise the surviving strategies with the smallest error count
/// are averaged with inverse-variance weights.
pub fn combine_strategies(
    per_strategy: &[StrategyResult],
    global_linear: Option<Estimate>,
) -> Result<Estimate> {
    if let Some(lin) = global_linear {
        return Ok(lin);
    }
    let ok: Vec<&StrategyResult> = per_strategy.iter().filter(|s| s.ok).collect();
    if ok.is_empty() {
        return Err(Error::AllFailed);
    }
    let min_count = ok.iter().map(|s| s.error_count).min().unwrap();
    let selected: Vec<&&StrategyResult> =
        ok.iter().filter(|s| s.error_count == min_count).collect();
    let mut wsum = 0.0;
    let mut vsum = 0.0;
    for s in &selected {
        let sigma = s.estimate.stderr.max(1e-15);
        let w = 1.0 / (sigma * sigma);
        wsum += w;
        vsum += w * s.estimate.value;
    }
    Ok(Estimate::new(vsum / wsum, (1.0 / wsum).sqrt()))
}

/// Options for the end-to-end mitigation pipeline.
#[derive(Debug, Clone)]
pub struct MitigationOptions {
    pub m_sigma: f64,
    pub max_poly_degree: usize,
    pub resamples: usize,
    pub seed: u64,
    /// Maximally-mixed prediction for the observable; when the highest ladder
    /// entry is statistically indistinguishable from it, that entry is
    /// dropped before extrapolating.
    pub mixed_value: Option<f64>,
}

impl Default for MitigationOptions {
    fn default() -> Self {
        Self {
            m_sigma: 1.0,
            max_poly_degree: 3,
            resamples: 1000,
            seed: 0,
            mixed_value: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MitigationFlag {
    NoExtrapolationNeeded,
    ErrorFree,
    Averaged,
    Failed,
}

impl MitigationFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            MitigationFlag::NoExtrapolationNeeded => "no-extrapolation-needed",
            MitigationFlag::ErrorFree => "error-free",
            MitigationFlag::Averaged => "averaged",
            MitigationFlag::Failed => "failed",
        }
    }
}

/// Mitigated observable with the intermediate stages kept for reporting.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MitigationReport {
    pub bare: Estimate,
    pub ro_mitigated: Estimate,
    pub fully_mitigated: Option<Estimate>,
    pub flag: MitigationFlag,
    /// Total consistency-failure count per strategy (Richardson, polynomial,
    /// exponential), in that order.
    pub error_counts: Vec<usize>,
    pub strategies_used: Vec<String>,
}

/// Deterministic core of the pipeline: per-strategy order ladders,
/// consistency checks and combination. Returns the combined estimate, the
/// per-strategy error counts, the survivors' names, and whether every
/// strategy settled on the unextrapolated value.
fn pipeline_core(
    ladder: &NoiseLadder,
    opts: &MitigationOptions,
) -> (Option<Estimate>, Vec<usize>, Vec<String>, bool, usize) {
    let n = ladder.len();
    let names = ["richardson", "polynomial", "exponential"];
    let mut strategy_results: Vec<StrategyResult> = Vec::new();
    let mut error_counts = vec![0usize; 3];
    let mut used = Vec::new();
    let mut all_chose_first = true;

    for (si, name) in names.iter().enumerate() {
        // order ladder: entry 0 is the unextrapolated k = 1 value, entry
        // k - 1 the order-k extrapolation using data up to level k
        let mut seq: Vec<Option<Estimate>> = vec![Some(ladder.entries[0].1)];
        for k in 2..=n {
            let sub = ladder.truncated(k);
            let est = match si {
                0 => richardson_extrapolate(&sub, k - 1).ok(),
                1 => polynomial_extrapolate(&sub, opts.max_poly_degree)
                    .ok()
                    .map(|(e, _, _)| e),
                _ => exponential_extrapolate(&sub, sub.entries[k - 1].0).ok(),
            };
            seq.push(est);
        }
        let missing = seq.iter().filter(|e| e.is_none()).count();
        let present: Vec<Estimate> = seq.iter().flatten().copied().collect();
        if present.len() < 2 {
            error_counts[si] = missing + seq.len();
            strategy_results.push(StrategyResult {
                estimate: Estimate::exact(0.0),
                error_count: error_counts[si],
                ok: false,
            });
            all_chose_first = false;
            continue;
        }
        let mut outcome = consistency_check(&present, opts.m_sigma);
        outcome.error_count += missing;
        error_counts[si] = outcome.error_count;
        match outcome.chosen_index {
            Some(idx) => {
                if idx != 0 || missing > 0 {
                    all_chose_first = false;
                }
                strategy_results.push(StrategyResult {
                    estimate: present[idx],
                    error_count: outcome.error_count,
                    ok: true,
                });
                used.push(name.to_string());
            }
            None => {
                all_chose_first = false;
                strategy_results.push(StrategyResult {
                    estimate: Estimate::exact(0.0),
                    error_count: outcome.error_count,
                    ok: false,
                });
            }
        }
    }

    // global linear fit over the full ladder
    let global_linear = if n >= 3 {
        weighted_poly_fit(ladder, 1)
            .ok()
            .and_then(|(est, chi2)| if chi2 <= 1.0 { Some(est) } else { None })
    } else {
        None
    };
    if global_linear.is_some() {
        used.push("global-linear".to_string());
    }
    let min_err = strategy_results
        .iter()
        .filter(|s| s.ok)
        .map(|s| s.error_count)
        .min()
        .unwrap_or(usize::MAX);
    let combined = combine_strategies(&strategy_results, global_linear).ok();
    (combined, error_counts, used, all_chose_first, min_err)
}

/// Resampled error bar: Gaussian-resample the ladder, run the deterministic
/// pipeline per sample, and report the mean and the central 68% interval
/// half-width. Fails when more than half the resamples fail.
pub fn resample_pipeline(
    ladder: &NoiseLadder,
    m_resamples: usize,
    seed: u64,
    opts: &MitigationOptions,
) -> Result<Estimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(m_resamples);
    let mut failures = 0usize;
    for _ in 0..m_resamples {
        let entries: Vec<(usize, Estimate)> = ladder
            .entries
            .iter()
            .map(|&(k, e)| {
                let draw = e.value + e.stderr * standard_normal(&mut rng);
                (k, Estimate::new(draw, e.stderr))
            })
            .collect();
        let resampled = NoiseLadder { entries };
        match pipeline_core(&resampled, opts).0 {
            Some(est) => values.push(est.value),
            None => failures += 1,
        }
    }
    if failures * 2 > m_resamples {
        return Err(Error::AllFailed);
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let q = |f: f64| -> f64 {
        let pos = f * (values.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        values[lo] * (1.0 - frac) + values[hi] * frac
    };
    let halfwidth = (q(0.84) - q(0.16)) / 2.0;
    Ok(Estimate::new(mean, halfwidth))
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Full mitigation of one observable from its bare estimate and readout-
/// corrected noise ladder.
pub fn mitigate(
    bare: Estimate,
    ladder: &NoiseLadder,
    opts: &MitigationOptions,
) -> Result<MitigationReport> {
    let ro_mitigated = ladder.entries[0].1;
    // decohered-run pre-check: drop the highest entry when it carries no
    // information beyond the maximally mixed prediction
    let mut working = ladder.clone();
    if let Some(mix) = opts.mixed_value {
        if working.len() > 2 {
            let last = working.entries.last().unwrap().1;
            if compatible(&last, &Estimate::exact(mix), opts.m_sigma) {
                working.entries.pop();
            }
        }
    }
    let (combined, error_counts, used, all_first, min_err) = pipeline_core(&working, opts);
    match combined {
        None => Ok(MitigationReport {
            bare,
            ro_mitigated,
            fully_mitigated: None,
            flag: MitigationFlag::Failed,
            error_counts,
            strategies_used: used,
        }),
        Some(det) => {
            let final_est = if opts.resamples > 0 {
                match resample_pipeline(&working, opts.resamples, opts.seed, opts) {
                    Ok(e) => e,
                    Err(_) => {
                        return Ok(MitigationReport {
                            bare,
                            ro_mitigated,
                            fully_mitigated: None,
                            flag: MitigationFlag::Failed,
                            error_counts,
                            strategies_used: used,
                        })
                    }
                }
            } else {
                det
            };
            let flag = if all_first {
                MitigationFlag::NoExtrapolationNeeded
            } else if min_err == 0 {
                MitigationFlag::ErrorFree
            } else {
                MitigationFlag::Averaged
            };
            Ok(MitigationReport {
                bare,
                ro_mitigated,
                fully_mitigated: Some(final_est),
                flag,
                error_counts,
                strategies_used: used,
            })
        }
    }
}

/// `chi^2 = sum_k (v_e - v_t)^2 / err_e^2`.
pub fn chi2_metric(theory: &[f64], experiment: &[Estimate]) -> Result<f64> {
    if theory.len() != experiment.len() {
        return Err(Error::DimensionMismatch(
            "metric inputs differ in length".into(),
        ));
    }
    let mut total = 0.0;
    for (t, e) in theory.iter().zip(experiment) {
        if e.stderr <= 0.0 {
            return Err(Error::InvalidArgument("zero error bar".into()));
        }
        total += ((e.value - t) / e.stderr).powi(2);
    }
    Ok(total)
}

/// `nssd(r) = sqrt( sum (v_e - v_t)^2 / sum (r v_t)^2 )`.
pub fn nssd_metric(theory: &[f64], experiment: &[Estimate], r: f64) -> Result<f64> {
    if theory.len() != experiment.len() {
        return Err(Error::DimensionMismatch(
            "metric inputs differ in length".into(),
        ));
    }
    let num: f64 = theory
        .iter()
        .zip(experiment)
        .map(|(t, e)| (e.value - t).powi(2))
        .sum();
    let den: f64 = theory.iter().map(|t| (r * t).powi(2)).sum();
    if den == 0.0 {
        return Err(Error::InvalidArgument(
            "all theory values are zero".into(),
        ));
    }
    Ok((num / den).sqrt())
}
