//! Batch experiment runner: angle sweeps for either protocol across noise
//! ladders and seeds, exact reference values, the mitigation pipeline, and
//! CSV/JSON output with chi-squared / nssd summaries.
//!
//! All randomness is derived from `(seed, theta index, purpose)` streams, so
//! results are deterministic regardless of worker scheduling, and reruns with
//! identical configuration are byte-identical.

use crate::estimators::{lcu_exact, td_exact, td_exact_transition, Estimate};
use crate::mitigation::{
    chi2_metric, mitigate, nssd_metric, readout_invert, MitigationOptions, NoiseLadder,
};
use crate::noise::{run_calibration, simulate_with_cnot_noise, NoiseSpec, ReadoutCalibration};
use crate::ops::simple_op;
use crate::prep::{lcu_full_circuit, td_circuit, LcuVariant, TdPrepSpec, TdVariant};
use crate::sim::{bits_to_index, ShotHistogram, StateVector};
use crate::{Error, Result};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Protocol {
    Td,
    Lcu,
}

impl Protocol {
    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "td" => Ok(Protocol::Td),
            "lcu" => Ok(Protocol::Lcu),
            other => Err(Error::UnknownVariant(other.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MitigationMode {
    Off,
    RoOnly,
    Full,
}

impl MitigationMode {
    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(MitigationMode::Off),
            "ro-only" | "ro" => Ok(MitigationMode::RoOnly),
            "full" => Ok(MitigationMode::Full),
            other => Err(Error::UnknownVariant(other.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "both" => Ok(OutputFormat::Both),
            other => Err(Error::UnknownVariant(other.into())),
        }
    }
}

/// Sweep configuration; parsed from a flat `key=value` file with command-line
/// overrides.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    /// LCU variant name, or `simple` / `nuclear` for the TD protocol.
    pub variant: String,
    pub theta_count: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    pub gamma: f64,
    pub shots_per_level: u64,
    pub noise: NoiseSpec,
    pub mitigation: MitigationMode,
    pub seeds: Vec<u64>,
    pub output_path: String,
    pub format: OutputFormat,
    pub max_ladder: usize,
    pub resamples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::Lcu,
            variant: "simple-2q-optimized".into(),
            theta_count: 16,
            theta_min: 0.0,
            theta_max: std::f64::consts::PI,
            gamma: 0.3,
            shots_per_level: 8192,
            noise: NoiseSpec::default(),
            mitigation: MitigationMode::Full,
            seeds: vec![1],
            output_path: "sweep".into(),
            format: OutputFormat::Csv,
            max_ladder: 4,
            resamples: 400,
        }
    }
}

impl ExperimentConfig {
    pub fn thetas(&self) -> Vec<f64> {
        if self.theta_count == 1 {
            return vec![self.theta_min];
        }
        (0..self.theta_count)
            .map(|i| {
                self.theta_min
                    + (self.theta_max - self.theta_min) * i as f64
                        / (self.theta_count - 1) as f64
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta_count == 0 || self.shots_per_level == 0 || self.seeds.is_empty() {
            return Err(Error::InvalidArgument(
                "grid, shots and seeds must be non-empty".into(),
            ));
        }
        if self.theta_min < -1e-12 || self.theta_max > std::f64::consts::PI + 1e-12 {
            return Err(Error::InvalidArgument("grid must lie in [0, pi]".into()));
        }
        self.noise.validate()
    }

    /// Parse a flat `key=value` config file.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |k: &str, v: &str| Error::Parse(format!("bad value `{v}` for `{k}`"));
        match key {
            "protocol" => self.protocol = Protocol::from_name(value)?,
            "variant" => self.variant = value.to_string(),
            "theta_count" => self.theta_count = value.parse().map_err(|_| bad(key, value))?,
            "theta_min" => self.theta_min = value.parse().map_err(|_| bad(key, value))?,
            "theta_max" => self.theta_max = value.parse().map_err(|_| bad(key, value))?,
            "gamma" => self.gamma = value.parse().map_err(|_| bad(key, value))?,
            "shots" => self.shots_per_level = value.parse().map_err(|_| bad(key, value))?,
            "noise.pe" => self.noise.cnot_depol = value.parse().map_err(|_| bad(key, value))?,
            "noise.e0" => self.noise.e0 = value.parse().map_err(|_| bad(key, value))?,
            "noise.e1" => self.noise.e1 = value.parse().map_err(|_| bad(key, value))?,
            "noise.global" => {
                self.noise.global_depol = value.parse().map_err(|_| bad(key, value))?
            }
            "mitigation" => self.mitigation = MitigationMode::from_name(value)?,
            "seeds" | "seed" => {
                self.seeds = value
                    .split(',')
                    .map(|s| s.trim().parse::<u64>().map_err(|_| bad(key, value)))
                    .collect::<Result<Vec<_>>>()?;
            }
            "out" => self.output_path = value.to_string(),
            "format" => self.format = OutputFormat::from_name(value)?,
            "max_ladder" => self.max_ladder = value.parse().map_err(|_| bad(key, value))?,
            "resamples" => self.resamples = value.parse().map_err(|_| bad(key, value))?,
            other => return Err(Error::Parse(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }
}

/// One (seed, angle, observable) row of a sweep.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SweepRecord {
    pub seed: u64,
    pub theta: f64,
    pub observable: String,
    pub exact: f64,
    pub bare: Estimate,
    pub ro: Option<Estimate>,
    pub full: Option<Estimate>,
    pub flag: String,
}

fn derive_seed(base: u64, theta_idx: usize, purpose: u64) -> u64 {
    // splitmix-style mixing keeps the per-(seed, angle, purpose) streams
    // independent and deterministic
    let mut z = base
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(theta_idx as u64)
        .wrapping_mul(0xbf58_476d_1ce4_e5b9)
        .wrapping_add(purpose);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct ObservableSpec {
    name: &'static str,
    exact: f64,
    /// Indicator-style weights over the measured full register.
    weights: Vec<f64>,
    /// Maximally mixed prediction (decohered-run pre-check).
    mixed: f64,
    /// Rescale applied to the weighted frequency (1 for plain frequencies,
    /// `1 / P_s^exact` for the analytically rescaled transition estimator).
    rescale: f64,
    /// Divide by the first observable's estimate (the ratio estimator).
    ratio_to_first: bool,
}

/// Run the configured sweep; records are ordered by seed, then angle, then
/// observable.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let thetas = config.thetas();
    let mut jobs: Vec<(u64, usize, f64)> = Vec::new();
    for &seed in &config.seeds {
        for (ti, &theta) in thetas.iter().enumerate() {
            jobs.push((seed, ti, theta));
        }
    }
    let results: Result<Vec<Vec<SweepRecord>>> = jobs
        .par_iter()
        .map(|&(seed, ti, theta)| run_point(config, seed, ti, theta))
        .collect();
    let mut records: Vec<SweepRecord> = results?.into_iter().flatten().collect();
    // reduce in (seed, theta, observable) order regardless of scheduling
    records.sort_by(|a, b| {
        (a.seed, a.theta, a.observable.clone())
            .partial_cmp(&(b.seed, b.theta, b.observable.clone()))
            .unwrap()
    });
    Ok(records)
}

fn run_point(
    config: &ExperimentConfig,
    seed: u64,
    theta_idx: usize,
    theta: f64,
) -> Result<Vec<SweepRecord>> {
    let (circuit, initial, observables) = match config.protocol {
        Protocol::Td => td_point(config, theta)?,
        Protocol::Lcu => lcu_point(config, theta)?,
    };
    let n = circuit.n_qubits;
    let levels = if config.mitigation == MitigationMode::Full {
        config.max_ladder
    } else {
        1
    };

    // shot data per amplification level
    let mut hists: Vec<ShotHistogram> = Vec::with_capacity(levels);
    for k in 1..=levels {
        let spec_k = config.noise.with_repetition(k);
        let h = simulate_with_cnot_noise(
            &circuit,
            &initial,
            &spec_k,
            config.shots_per_level,
            derive_seed(seed, theta_idx, k as u64),
        )?;
        hists.push(h);
    }

    // fresh readout calibration for this seed
    let cal = if config.mitigation == MitigationMode::Off || !config.noise.has_readout_noise() {
        ReadoutCalibration::identity(n)
    } else {
        run_calibration(
            &config.noise,
            n,
            config.shots_per_level,
            derive_seed(seed, 0, 1_000_003),
        )?
    };

    let mut records = Vec::new();
    let mut first_ro: Vec<Estimate> = Vec::new(); // P_s ladder for ratio estimators
    let mut first_bare = Estimate::exact(f64::NAN);
    for (oi, obs) in observables.iter().enumerate() {
        let weighted_freq = |hist: &ShotHistogram| -> f64 {
            hist.counts
                .iter()
                .map(|(bits, &c)| {
                    let idx = bits_to_index(n, bits).expect("histogram keys are valid");
                    obs.weights[idx] * c as f64
                })
                .sum::<f64>()
                / hist.total_shots as f64
        };

        // bare estimate at k = 1
        let bare_raw = Estimate::binomial(weighted_freq(&hists[0]), config.shots_per_level);
        let bare = finish_observable(obs, bare_raw, Some(first_bare), oi);
        if oi == 0 {
            first_bare = bare_raw;
        }

        if config.mitigation == MitigationMode::Off {
            records.push(SweepRecord {
                seed,
                theta,
                observable: obs.name.to_string(),
                exact: obs.exact,
                bare,
                ro: None,
                full: None,
                flag: "bare".into(),
            });
            continue;
        }

        // readout-corrected ladder
        let mut ro_ladder: Vec<Estimate> = Vec::with_capacity(levels);
        for hist in &hists {
            ro_ladder.push(readout_invert(hist, &cal, &obs.weights)?);
        }
        let ro = finish_observable(
            obs,
            ro_ladder[0],
            first_ro.first().copied(),
            oi,
        );
        if config.mitigation == MitigationMode::RoOnly {
            if oi == 0 {
                first_ro = ro_ladder.clone();
            }
            records.push(SweepRecord {
                seed,
                theta,
                observable: obs.name.to_string(),
                exact: obs.exact,
                bare,
                ro: Some(ro),
                full: None,
                flag: "ro".into(),
            });
            continue;
        }

        // full pipeline on the (rescaled) ladder
        let pipeline_ladder: Vec<Estimate> = ro_ladder
            .iter()
            .enumerate()
            .map(|(k, &e)| finish_observable(obs, e, first_ro.get(k).copied(), oi))
            .collect();
        if pipeline_ladder
            .iter()
            .any(|e| !e.value.is_finite() || !e.stderr.is_finite())
        {
            if oi == 0 {
                first_ro = ro_ladder.clone();
            }
            records.push(SweepRecord {
                seed,
                theta,
                observable: obs.name.to_string(),
                exact: obs.exact,
                bare,
                ro: Some(ro),
                full: None,
                flag: "failed".into(),
            });
            continue;
        }
        let ladder = NoiseLadder::from_estimates(&pipeline_ladder)?;
        let opts = MitigationOptions {
            resamples: config.resamples,
            seed: derive_seed(seed, theta_idx, 77 + oi as u64),
            mixed_value: Some(obs.mixed),
            ..Default::default()
        };
        let report = mitigate(bare, &ladder, &opts)?;
        if oi == 0 {
            first_ro = ro_ladder.clone();
        }
        records.push(SweepRecord {
            seed,
            theta,
            observable: obs.name.to_string(),
            exact: obs.exact,
            bare,
            ro: Some(ro),
            full: report.fully_mitigated,
            flag: report.flag.as_str().to_string(),
        });
    }
    Ok(records)
}

fn finish_observable(
    obs: &ObservableSpec,
    raw: Estimate,
    first: Option<Estimate>,
    oi: usize,
) -> Estimate {
    let mut est = Estimate::new(raw.value * obs.rescale, raw.stderr * obs.rescale);
    if obs.ratio_to_first && oi > 0 {
        if let Some(ps) = first {
            if ps.value > 0.0 {
                est = Estimate::ratio(raw, ps);
            } else {
                est = Estimate::new(f64::NAN, f64::INFINITY);
            }
        }
    }
    est
}

fn td_point(
    config: &ExperimentConfig,
    theta: f64,
) -> Result<(crate::gates::Circuit, StateVector, Vec<ObservableSpec>)> {
    let (op, psi0_bits, final_bits, variant) = match config.variant.as_str() {
        "simple" => (simple_op(theta), "0", "1", TdVariant::Simple),
        "nuclear" => (
            crate::ops::nuclear_op_first_q(&crate::ops::NuclearOpParams::new(theta)),
            "1",
            "0",
            TdVariant::Nuclear,
        ),
        other => return Err(Error::UnknownVariant(other.into())),
    };
    let spec = TdPrepSpec::new(op.clone(), config.gamma, variant);
    let circuit = td_circuit(&spec)?;
    let psi0 = StateVector::new_basis_state(1, psi0_bits)?;
    let exact = td_exact(&op, &psi0, config.gamma)?;
    let exact_pt = td_exact_transition(&op, &psi0, final_bits, config.gamma)?;

    let n = circuit.n_qubits;
    let dim = 1usize << n;
    // ancilla is qubit 0; accept on ancilla = 1
    let mut w_ps = vec![0.0; dim];
    let mut w_joint = vec![0.0; dim];
    let fidx = bits_to_index(1, final_bits)?;
    for i in 0..dim {
        if i & 1 == 1 {
            w_ps[i] = 1.0;
            if i >> 1 == fidx {
                w_joint[i] = 1.0;
            }
        }
    }
    let obs = vec![
        ObservableSpec {
            name: "P_s",
            exact: exact.p_success,
            weights: w_ps,
            mixed: 0.5,
            rescale: 1.0,
            ratio_to_first: false,
        },
        ObservableSpec {
            name: "P_t",
            exact: exact_pt,
            weights: w_joint,
            mixed: 0.5f64.powi(n as i32 - 1),
            rescale: 1.0,
            ratio_to_first: true,
        },
    ];
    let initial = {
        let mut bits = String::from("0");
        bits.push_str(psi0_bits);
        StateVector::new_basis_state(n, &bits)?
    };
    Ok((circuit, initial, obs))
}

fn lcu_point(
    config: &ExperimentConfig,
    theta: f64,
) -> Result<(crate::gates::Circuit, StateVector, Vec<ObservableSpec>)> {
    let variant = LcuVariant::from_name(&config.variant)?;
    let lcu = lcu_full_circuit(variant, theta)?;
    let exact = lcu_exact(variant, theta)?;
    let initial = lcu.initial_state(variant.initial_target_bits())?;

    let n = lcu.circuit.n_qubits;
    let dim = 1usize << n;
    let k = lcu.ancilla_wires.len() as i32;
    let mut anc_mask = 0usize;
    for &w in &lcu.ancilla_wires {
        anc_mask |= 1 << w;
    }
    let mut final_mask = 0usize;
    let mut final_want = 0usize;
    for (pos, ch) in variant.final_target_bits().chars().enumerate() {
        let w = lcu.target_wires[pos];
        final_mask |= 1 << w;
        if ch == '1' {
            final_want |= 1 << w;
        }
    }
    let mut w_ps = vec![0.0; dim];
    let mut w_joint = vec![0.0; dim];
    for i in 0..dim {
        if i & anc_mask == 0 {
            w_ps[i] = 1.0;
            if i & final_mask == final_want {
                w_joint[i] = 1.0;
            }
        }
    }
    let nt = lcu.target_wires.len() as i32;
    let obs = vec![
        ObservableSpec {
            name: "P_s",
            exact: exact.p_success,
            weights: w_ps,
            mixed: 0.5f64.powi(k),
            rescale: 1.0,
            ratio_to_first: false,
        },
        ObservableSpec {
            name: "Pt_A",
            exact: exact.p_transition,
            weights: w_joint.clone(),
            mixed: 0.5f64.powi(n as i32) / exact.p_success,
            rescale: 1.0 / exact.p_success,
            ratio_to_first: false,
        },
        ObservableSpec {
            name: "Pt_B",
            exact: exact.p_transition,
            weights: w_joint,
            mixed: 0.5f64.powi(nt),
            rescale: 1.0,
            ratio_to_first: true,
        },
    ];
    Ok((lcu.circuit, initial, obs))
}

/// chi-squared and nssd per observable and mitigation level.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MetricsRow {
    pub observable: String,
    pub level: String,
    pub chi2: f64,
    pub nssd: f64,
    pub points: usize,
}

/// Summarize records into the quality-metric table; rows ordered by
/// observable then level (bare, ro, full). Flagged-failed points are skipped.
pub fn summarize(records: &[SweepRecord]) -> Vec<MetricsRow> {
    let mut groups: BTreeMap<(String, &'static str), (Vec<f64>, Vec<Estimate>)> = BTreeMap::new();
    for r in records {
        let mut push = |level: &'static str, est: Estimate| {
            if est.value.is_finite() && est.stderr.is_finite() {
                let entry = groups
                    .entry((r.observable.clone(), level))
                    .or_default();
                entry.0.push(r.exact);
                entry.1.push(est);
            }
        };
        push("bare", r.bare);
        if let Some(ro) = r.ro {
            push("ro", ro);
        }
        if let Some(full) = r.full {
            push("full", full);
        }
    }
    let order = |lvl: &str| match lvl {
        "bare" => 0,
        "ro" => 1,
        _ => 2,
    };
    let mut rows: Vec<MetricsRow> = groups
        .into_iter()
        .map(|((obs, level), (theory, exp))| {
            let chi2 = chi2_metric(&theory, &exp).unwrap_or(f64::NAN);
            let nssd = nssd_metric(&theory, &exp, 0.1).unwrap_or(f64::NAN);
            MetricsRow {
                observable: obs,
                level: level.to_string(),
                chi2,
                nssd,
                points: theory.len(),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        (a.observable.clone(), order(&a.level)).cmp(&(b.observable.clone(), order(&b.level)))
    });
    rows
}

fn fmt_opt(e: &Option<Estimate>) -> (String, String) {
    match e {
        Some(e) => (format!("{:.12e}", e.value), format!("{:.12e}", e.stderr)),
        None => (String::new(), String::new()),
    }
}

/// Render records as CSV (stable field order and float formatting, so equal
/// configurations produce byte-identical output).
pub fn to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(
        "theta,observable,exact,bare,bare_err,ro,ro_err,full,full_err,flag\n",
    );
    for r in records {
        let (ro, ro_err) = fmt_opt(&r.ro);
        let (full, full_err) = fmt_opt(&r.full);
        writeln!(
            out,
            "{:.12e},{},{:.12e},{:.12e},{:.12e},{},{},{},{},{}",
            r.theta,
            r.observable,
            r.exact,
            r.bare.value,
            r.bare.stderr,
            ro,
            ro_err,
            full,
            full_err,
            r.flag
        )
        .expect("write to string");
    }
    out
}

/// Full JSON document: config echo, records and the metric summary.
pub fn to_json(
    config: &ExperimentConfig,
    records: &[SweepRecord],
    metrics: &[MetricsRow],
) -> Result<String> {
    #[derive(serde::Serialize)]
    struct Doc<'a> {
        config: &'a ExperimentConfig,
        records: &'a [SweepRecord],
        metrics: &'a [MetricsRow],
    }
    serde_json::to_string_pretty(&Doc {
        config,
        records,
        metrics,
    })
    .map_err(|e| Error::Parse(e.to_string()))
}

/// Write CSV and/or JSON files next to `output_path`.
pub fn emit(
    config: &ExperimentConfig,
    records: &[SweepRecord],
    metrics: &[MetricsRow],
) -> Result<Vec<String>> {
    let mut written = Vec::new();
    let base = Path::new(&config.output_path);
    if matches!(config.format, OutputFormat::Csv | OutputFormat::Both) {
        let path = base.with_extension("csv");
        std::fs::write(&path, to_csv(records))?;
        written.push(path.display().to_string());
    }
    if matches!(config.format, OutputFormat::Json | OutputFormat::Both) {
        let path = base.with_extension("json");
        std::fs::write(&path, to_json(config, records, metrics)?)?;
        written.push(path.display().to_string());
    }
    Ok(written)
}
