//! Command-line experiment runner: angle sweeps for the excited-state
//! preparation protocols, with noise, error mitigation and CSV/JSON output.

use clap::{Args, Parser, Subcommand};
use qprep::experiment::{
    emit, run_sweep, summarize, ExperimentConfig, MitigationMode, OutputFormat, Protocol,
};
use qprep::prep::{lcu_full_circuit, td_circuit, LcuVariant, TdPrepSpec, TdVariant};
use qprep::Error;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "qprep",
    about = "State-vector sweeps of excited-state preparation protocols"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an angle sweep and write CSV/JSON results.
    Sweep(SweepArgs),
    /// Print a preparation circuit in the text format.
    Circuit(CircuitArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Flat key=value configuration file; flags below override it.
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long = "theta-count")]
    theta_count: Option<usize>,
    #[arg(long = "noise.pe")]
    noise_pe: Option<f64>,
    #[arg(long = "noise.e0")]
    noise_e0: Option<f64>,
    #[arg(long = "noise.e1")]
    noise_e1: Option<f64>,
    /// off | ro-only | full
    #[arg(long)]
    mitigation: Option<String>,
    /// Comma-separated seed list.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// csv | json | both
    #[arg(long)]
    format: Option<String>,
    /// Exit with status 1 when any point carries the failed flag.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct CircuitArgs {
    /// td | lcu
    #[arg(long, default_value = "lcu")]
    protocol: String,
    /// simple | nuclear (td) or an LCU variant name.
    #[arg(long, default_value = "simple-2q-optimized")]
    variant: String,
    #[arg(long, default_value_t = 0.9)]
    theta: f64,
    #[arg(long, default_value_t = 0.3)]
    gamma: f64,
}

fn build_config(args: &SweepArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_key_values(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = &args.protocol {
        cfg.protocol = Protocol::from_name(v)?;
    }
    if let Some(v) = &args.variant {
        cfg.variant = v.clone();
    }
    if let Some(v) = args.gamma {
        cfg.gamma = v;
    }
    if let Some(v) = args.shots {
        cfg.shots_per_level = v;
    }
    if let Some(v) = args.theta_count {
        cfg.theta_count = v;
    }
    if let Some(v) = args.noise_pe {
        cfg.noise.cnot_depol = v;
    }
    if let Some(v) = args.noise_e0 {
        cfg.noise.e0 = v;
    }
    if let Some(v) = args.noise_e1 {
        cfg.noise.e1 = v;
    }
    if let Some(v) = &args.mitigation {
        cfg.mitigation = MitigationMode::from_name(v)?;
    }
    if let Some(v) = &args.seed {
        cfg.set("seeds", v)?;
    }
    if let Some(v) = &args.out {
        cfg.output_path = v.clone();
    }
    if let Some(v) = &args.format {
        cfg.format = OutputFormat::from_name(v)?;
    }
    Ok(cfg)
}

fn run() -> Result<bool, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Sweep(args) => {
            let cfg = build_config(&args)?;
            let records = run_sweep(&cfg)?;
            let metrics = summarize(&records);
            let written = emit(&cfg, &records, &metrics)?;
            for path in &written {
                eprintln!("wrote {path}");
            }
            println!("observable  level  chi2        nssd        points");
            for m in &metrics {
                println!(
                    "{:<11} {:<6} {:<11.4} {:<11.4} {}",
                    m.observable, m.level, m.chi2, m.nssd, m.points
                );
            }
            let any_failed = records.iter().any(|r| r.flag == "failed");
            Ok(args.strict && any_failed)
        }
        Command::Circuit(args) => {
            let text = match args.protocol.as_str() {
                "lcu" => {
                    let variant = LcuVariant::from_name(&args.variant)?;
                    let lcu = lcu_full_circuit(variant, args.theta)?;
                    format!(
                        "# variant {} | CNOTs {} | ancilla wires {:?} | target wires {:?}\n{}",
                        variant.name(),
                        lcu.circuit.cnot_count(),
                        lcu.ancilla_wires,
                        lcu.target_wires,
                        lcu.circuit.to_text()
                    )
                }
                "td" => {
                    let (op, variant) = match args.variant.as_str() {
                        "simple" => (qprep::ops::simple_op(args.theta), TdVariant::Simple),
                        "nuclear" => (
                            qprep::ops::nuclear_op_first_q(&qprep::ops::NuclearOpParams::new(
                                args.theta,
                            )),
                            TdVariant::Nuclear,
                        ),
                        other => return Err(Error::UnknownVariant(other.into())),
                    };
                    let spec = TdPrepSpec::new(op, args.gamma, variant);
                    let c = td_circuit(&spec)?;
                    format!("# CNOTs {}\n{}", c.cnot_count(), c.to_text())
                }
                other => return Err(Error::UnknownVariant(other.into())),
            };
            println!("{text}");
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
