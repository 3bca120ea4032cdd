mod figures;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use coherence::channels::KrausClassification;
use coherence::io::{read_channel, read_state, write_json, BundleJson, State};
use coherence::measures::{coherence_of_formation, coherence_rank, relative_entropy_of_coherence, RoofConfig};
use coherence::simulate::{build_simulation, verify_simulation, Protocol, VerifyTolerances};
use coherence::CoherenceError;

#[derive(Parser, Debug)]
#[command(name = "coherence", version, about = "Coherence measures, channel simulation and coherence-power tools")]
struct Cli {
    /// Base seed for every randomized search.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Random restarts per optimization.
    #[arg(long, global = true, default_value_t = 32)]
    restarts: usize,
    /// Verification tolerance.
    #[arg(long = "tol", global = true, default_value_t = 1e-8)]
    tolerance: f64,
    /// Output file or directory (command dependent).
    #[arg(long = "out", global = true)]
    output_path: Option<PathBuf>,
    /// Number of θ grid points for figures.
    #[arg(long = "grid", global = true, default_value_t = 50)]
    grid_points: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write fig1.csv and fig2.csv for the qubit rotation family.
    Figures,
    /// Evaluate a coherence measure on a state file.
    Compute {
        state_file: PathBuf,
        #[arg(long, value_enum)]
        measure: MeasureArg,
    },
    /// Build and verify a simulation protocol for a channel file.
    Simulate {
        channel_file: PathBuf,
        #[arg(long, value_enum)]
        protocol: ProtocolArg,
    },
    /// Run an invariant suite and print a JSON report.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MeasureArg {
    Cr,
    Cf,
    Rank,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProtocolArg {
    Unitary,
    Teleport,
    Sio,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Simulate,
    Measures,
    Power,
    Feasibility,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub restarts: usize,
    pub tolerance: f64,
    pub output_path: Option<PathBuf>,
    pub grid_points: usize,
}

impl RunConfig {
    fn from_cli(cli: &Cli) -> Result<Self, String> {
        if cli.restarts == 0 {
            return Err("--restarts must be positive".into());
        }
        if !(cli.tolerance > 0.0 && cli.tolerance.is_finite()) {
            return Err("--tol must be a positive number".into());
        }
        if cli.grid_points < 2 {
            return Err("--grid needs at least 2 points".into());
        }
        Ok(Self {
            seed: cli.seed,
            restarts: cli.restarts,
            tolerance: cli.tolerance,
            output_path: cli.output_path.clone(),
            grid_points: cli.grid_points,
        })
    }
}

pub enum Failure {
    Verification,
    Usage(String),
}

impl From<CoherenceError> for Failure {
    fn from(e: CoherenceError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

pub fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable report"));
}

#[derive(Serialize)]
struct ComputeReport {
    measure: &'static str,
    dim: usize,
    value: f64,
    unit: &'static str,
    /// Optimizer residual for the formation measure; 0 when exact.
    residual: f64,
}

fn cmd_compute(path: &Path, measure: MeasureArg, cfg: &RunConfig) -> Result<(), Failure> {
    let state = read_state(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let report = match measure {
        MeasureArg::Cr => ComputeReport {
            measure: "cr",
            dim: state.dim(),
            value: relative_entropy_of_coherence(&state.density()),
            unit: "bits",
            residual: 0.0,
        },
        MeasureArg::Cf => {
            let roof = RoofConfig {
                restarts: cfg.restarts,
                seed: cfg.seed,
                ..RoofConfig::default()
            };
            let r = coherence_of_formation(&state.density(), &roof)?;
            ComputeReport {
                measure: "cf",
                dim: state.dim(),
                value: r.value,
                unit: "bits",
                residual: r.residual,
            }
        }
        MeasureArg::Rank => match &state {
            State::Pure(p) => ComputeReport {
                measure: "rank",
                dim: p.dim(),
                value: coherence_rank(p, cfg.tolerance) as f64,
                unit: "count",
                residual: 0.0,
            },
            State::Mixed(_) => return Err(Failure::Usage("coherence rank needs a pure state (a dim x 1 column)".into())),
        },
    };
    print_json(&report);
    if let Some(out) = &cfg.output_path {
        write_json(out, &report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateReport {
    protocol: Protocol,
    bundle_path: String,
    resource_dim: usize,
    kraus_count: usize,
    completeness_residual: f64,
    choi_distance_lower: f64,
    choi_distance_upper: f64,
    classification: KrausClassification,
    strict: bool,
    tolerance: f64,
    pass: bool,
}

fn cmd_simulate(path: &Path, protocol: ProtocolArg, cfg: &RunConfig) -> Result<(), Failure> {
    let channel = read_channel(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let protocol = match protocol {
        ProtocolArg::Unitary => Protocol::Unitary,
        ProtocolArg::Teleport => Protocol::Teleport,
        ProtocolArg::Sio => Protocol::Sio,
    };
    let bundle = build_simulation(&channel, protocol).map_err(|e| match e {
        CoherenceError::TooManyKraus { count, max } => Failure::Usage(format!(
            "the sio protocol needs at most {max} Kraus operators (the input dimension), channel has {count}"
        )),
        other => Failure::Usage(format!("cannot build {protocol:?} protocol: {other}")),
    })?;
    let tol = VerifyTolerances {
        choi: cfg.tolerance,
        ..VerifyTolerances::default()
    };
    let v = verify_simulation(&bundle, &tol)?;
    let out = cfg.output_path.clone().unwrap_or_else(|| PathBuf::from("bundle.json"));
    write_json(&out, &BundleJson::from_bundle(&bundle))?;
    print_json(&SimulateReport {
        protocol,
        bundle_path: out.display().to_string(),
        resource_dim: bundle.resource.dim(),
        kraus_count: bundle.protocol_kraus.kraus().len(),
        completeness_residual: v.completeness_residual,
        choi_distance_lower: v.choi_lower,
        choi_distance_upper: v.choi_upper,
        classification: v.classification,
        strict: v.strict,
        tolerance: cfg.tolerance,
        pass: v.pass,
    });
    if v.pass {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = RunConfig::from_cli(cli).map_err(Failure::Usage)?;
    match &cli.command {
        Command::Figures => figures::cmd_figures(&cfg),
        Command::Compute { state_file, measure } => cmd_compute(state_file, *measure, &cfg),
        Command::Simulate { channel_file, protocol } => cmd_simulate(channel_file, *protocol, &cfg),
        Command::Verify { suite } => verify::cmd_verify(*suite, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
