//! Command-line orchestration: build code states, run broadcast rounds,
//! produce anonymity reports and contour grids, run percolation and
//! error-suppression studies, and convert squeezing levels.
//!
//! Every output starts with a header carrying the tool version, the
//! subcommand, its parameters, and the seed (when one is used), so runs are
//! reproducible byte for byte.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use cvtoric::anonymity::{self, alpha_for_capacity, bits_to_nats, figure2_grid, tau_for_alpha};
use cvtoric::calibration::{convert, Construction};
use cvtoric::closed_form::CovarianceModel;
use cvtoric::error::Error as CoreError;
use cvtoric::gaussian::{
    build_canonical_cluster, cluster_to_surface_code, face_nullifier, vertex_nullifier,
    ReductionOutcomes,
};
use cvtoric::lattice::{Boundary, LatticeSpec};
use cvtoric::protocol::{run_batch, ProtocolConfig};
use cvtoric::resilience::{percolation_lattice, percolation_mc, zeno_simulate, ZenoConfig};

#[derive(Parser)]
#[command(
    name = "cvtoric",
    version,
    about = "Continuous-variable toric-code anonymous broadcasting: simulation and analytics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output path; stdout when omitted. Relative paths resolve against
    /// CVTORIC_OUT_DIR when that variable is set.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Jsonl,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Build a code state with the dense engine and report its checks.
    State(StateArgs),
    /// Run broadcast rounds on the closed-form or engine path.
    Simulate(SimulateArgs),
    /// Anonymity report for one configuration.
    Analyze(AnalyzeArgs),
    /// Identification-probability grid over players and capacity.
    Contour(ContourArgs),
    /// Monte Carlo wedge-crossing failure estimate.
    Percolation(PercolationArgs),
    /// Moment-ODE trajectory of the monitored-decay error suppression.
    Zeno(ZenoArgs),
    /// Convert source squeezing in dB to the effective factor.
    Squeezing(SqueezingArgs),
}

#[derive(Args, Serialize)]
struct StateArgs {
    /// Code rows (horizontal lines on open patches).
    #[arg(long, default_value_t = 2)]
    rows: usize,
    /// Code columns (length of the broadcast loop).
    #[arg(long, default_value_t = 4)]
    cols: usize,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Toroidal)]
    boundary: BoundaryArg,
    /// Squeezing factor.
    #[arg(long)]
    s: f64,
    /// Sample the preparation outcomes with this seed; omitted means the
    /// deterministic zero-outcome reduction.
    #[arg(long)]
    seed: Option<u64>,
    /// Include the full mean/covariance arrays in the output.
    #[arg(long, default_value_t = false)]
    full_state: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum BoundaryArg {
    Toroidal,
    Open,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Toroidal => Boundary::Toroidal,
            BoundaryArg::Open => Boundary::Open,
        }
    }
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    /// Number of players.
    #[arg(long)]
    n: usize,
    /// Wedge width.
    #[arg(long)]
    w: usize,
    /// Effective squeezing factor.
    #[arg(long)]
    s: f64,
    /// Message standard deviation.
    #[arg(long)]
    tau: f64,
    /// 1-based sender index.
    #[arg(long)]
    sender: usize,
    #[arg(long)]
    rounds: usize,
    #[arg(long)]
    seed: u64,
    /// Fixed message value; omitted means one draw from N(0, tau^2) per round.
    #[arg(long)]
    message: Option<f64>,
    /// Run the full Gaussian engine instead of the closed-form sampler.
    #[arg(long, default_value_t = false)]
    engine: bool,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Toroidal)]
    boundary: BoundaryArg,
}

#[derive(Args, Serialize)]
struct AnalyzeArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    s: f64,
    #[arg(long)]
    w: usize,
    /// Extra squeezing of the string mode.
    #[arg(long, default_value_t = 1.0)]
    s2: f64,
    /// Broadcast capacity in bits (sets the SNR).
    #[arg(long, group = "signal")]
    capacity: Option<f64>,
    /// Broadcast signal-to-noise ratio.
    #[arg(long, group = "signal")]
    alpha: Option<f64>,
    /// Message standard deviation.
    #[arg(long, group = "signal")]
    tau: Option<f64>,
    /// Also report entropic quantities in nats.
    #[arg(long, default_value_t = false)]
    nats: bool,
}

#[derive(Args, Serialize)]
struct ContourArgs {
    /// Source squeezing in dB, direct convention (s = 10^(dB/20)).
    #[arg(long = "s-db", group = "squeeze")]
    s_db: Option<f64>,
    /// Effective squeezing factor directly.
    #[arg(long, group = "squeeze")]
    s: Option<f64>,
    #[arg(long)]
    w: usize,
    #[arg(long = "n-min", default_value_t = 3)]
    n_min: usize,
    #[arg(long = "n-max")]
    n_max: usize,
    #[arg(long = "c-max")]
    c_max: f64,
    #[arg(long = "c-step", default_value_t = 0.05)]
    c_step: f64,
}

#[derive(Args, Serialize)]
struct PercolationArgs {
    /// Wedge width.
    #[arg(long)]
    w: usize,
    #[arg(long = "p-err")]
    p_err: f64,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// Lattice rows; defaults to a wedge-sized torus.
    #[arg(long)]
    rows: Option<usize>,
}

#[derive(Args, Serialize)]
struct ZenoArgs {
    /// Code-ancilla coupling rate.
    #[arg(long)]
    g: f64,
    /// Ancilla decay rate.
    #[arg(long)]
    delta: f64,
    /// Local error rate.
    #[arg(long = "gamma-err")]
    gamma_err: f64,
    #[arg(long)]
    horizon: f64,
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

#[derive(Args, Serialize)]
struct SqueezingArgs {
    #[arg(long)]
    db: f64,
    #[arg(long, value_enum)]
    construction: ConstructionArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ConstructionArg {
    Surface,
    Linear,
    Direct,
}

impl From<ConstructionArg> for Construction {
    fn from(c: ConstructionArg) -> Self {
        match c {
            ConstructionArg::Surface => Construction::SurfaceMacronode,
            ConstructionArg::Linear => Construction::LinearMacronode,
            ConstructionArg::Direct => Construction::Direct,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage and parse problems exit 1 regardless of clap defaults.
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                CoreError::NumericalDegeneracy(_) | CoreError::StepSize(_) => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn header(subcommand: &str, params: serde_json::Value, seed: Option<u64>) -> serde_json::Value {
    json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "subcommand": subcommand,
        "params": params,
        "seed": seed,
    })
}

fn run(cli: Cli) -> Result<(), CoreError> {
    let text = match &cli.command {
        Command::State(args) => state_command(args, cli.format)?,
        Command::Simulate(args) => simulate_command(args, cli.format)?,
        Command::Analyze(args) => analyze_command(args, cli.format)?,
        Command::Contour(args) => contour_command(args, cli.format)?,
        Command::Percolation(args) => percolation_command(args, cli.format)?,
        Command::Zeno(args) => zeno_command(args, cli.format)?,
        Command::Squeezing(args) => squeezing_command(args, cli.format)?,
    };
    emit(&cli, &text)
}

fn emit(cli: &Cli, text: &str) -> Result<(), CoreError> {
    match &cli.out {
        None => {
            print!("{text}");
            std::io::stdout()
                .flush()
                .map_err(|e| CoreError::Validation(format!("stdout: {e}")))?;
        }
        Some(path) => {
            let path = match std::env::var_os("CVTORIC_OUT_DIR") {
                Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
                _ => path.clone(),
            };
            std::fs::write(&path, text)
                .map_err(|e| CoreError::Validation(format!("write {}: {e}", path.display())))?;
        }
    }
    Ok(())
}

fn to_params<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("serializable args")
}

fn json_document(head: serde_json::Value, result: serde_json::Value) -> String {
    let mut doc = head;
    doc["result"] = result;
    format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializable document"))
}

fn state_command(args: &StateArgs, format: Format) -> Result<String, CoreError> {
    if format == Format::Csv || format == Format::Jsonl {
        return Err(CoreError::Validation("state output is JSON only".into()));
    }
    let spec = LatticeSpec::build(args.rows, args.cols, args.boundary.into())?;
    let cluster = build_canonical_cluster(&spec, args.s)?;
    let record = match args.seed {
        None => cluster_to_surface_code(&cluster, &spec, args.s, ReductionOutcomes::ForceZero)?,
        Some(seed) => {
            use cvtoric::protocol::seeded_rng;
            let mut rng = seeded_rng(seed, 0);
            cluster_to_surface_code(&cluster, &spec, args.s, ReductionOutcomes::Sample(&mut rng))?
        }
    };
    let mut max_vertex = 0.0f64;
    if spec.boundary() == Boundary::Toroidal {
        for r in 0..spec.rows() {
            for c in 0..spec.cols() {
                let form = vertex_nullifier(&spec, &record, r, c)?;
                max_vertex = max_vertex.max(form.excitation(&record.state).abs());
            }
        }
    }
    let mut max_face = 0.0f64;
    for f in 0..spec.num_faces() {
        let form = face_nullifier(&spec, &record, f)?;
        max_face = max_face.max(form.excitation(&record.state).abs());
    }
    let mut result = json!({
        "modes": record.state.modes(),
        "q1": record.q1,
        "q2": record.q2,
        "q2_correction": record.q2_correction(),
        "min_uncertainty_eigenvalue": record.state.min_uncertainty_eigenvalue(),
        "purity_defect": record.state.purity_defect(),
        "max_vertex_nullifier_excitation": max_vertex,
        "max_face_nullifier_excitation": max_face,
    });
    if args.full_state {
        result["state"] = serde_json::to_value(record.state.to_document())
            .expect("serializable state");
    }
    Ok(json_document(header("state", to_params(args), args.seed), result))
}

fn simulate_command(args: &SimulateArgs, format: Format) -> Result<String, CoreError> {
    let model = match args.boundary {
        BoundaryArg::Toroidal => CovarianceModel::toroidal(args.n, args.w, args.s)?,
        BoundaryArg::Open => CovarianceModel::open(args.n, args.w, args.s)?,
    };
    let config = ProtocolConfig::new(model, args.tau, args.engine, args.seed)?;
    let runs = run_batch(&config, args.sender, args.message, args.rounds)?;
    let head = header("simulate", to_params(args), Some(args.seed));
    match format {
        Format::Json => Ok(json_document(
            head,
            serde_json::to_value(&runs).expect("serializable runs"),
        )),
        Format::Jsonl => {
            let mut out = String::new();
            out.push_str(&serde_json::to_string(&head).expect("serializable header"));
            out.push('\n');
            for run in &runs {
                out.push_str(&serde_json::to_string(run).expect("serializable run"));
                out.push('\n');
            }
            Ok(out)
        }
        Format::Csv => {
            let mut out = String::new();
            out.push_str(&format!(
                "# {}\n",
                serde_json::to_string(&head).expect("serializable header")
            ));
            out.push_str("a,r");
            for j in 1..=args.n {
                out.push_str(&format!(",m{j}"));
            }
            out.push_str(",M\n");
            for run in &runs {
                out.push_str(&format!("{},{}", run.sender, run.message));
                for m in &run.announcements {
                    out.push_str(&format!(",{m}"));
                }
                out.push_str(&format!(",{}\n", run.reconstructed));
            }
            Ok(out)
        }
    }
}

fn analyze_command(args: &AnalyzeArgs, format: Format) -> Result<String, CoreError> {
    if format != Format::Json {
        return Err(CoreError::Validation("analyze output is JSON only".into()));
    }
    let alpha = match (args.capacity, args.alpha, args.tau) {
        (Some(c), None, None) => alpha_for_capacity(c),
        (None, Some(a), None) => a,
        (None, None, Some(t)) => anonymity::alpha(args.s, t, args.s2),
        _ => {
            return Err(CoreError::Validation(
                "give exactly one of --capacity, --alpha, --tau".into(),
            ))
        }
    };
    let report = anonymity::report(args.n, args.s, args.w, args.s2, alpha)?;
    let mut result = serde_json::to_value(report).expect("serializable report");
    result["tau"] = json!(tau_for_alpha(args.s, alpha, args.s2));
    if args.nats {
        result["i_bound_nats"] = json!(bits_to_nats(report.i_bound_bits));
        result["capacity_nats"] = json!(bits_to_nats(report.capacity_bits));
        result["h_sender_given_record_nats"] =
            json!(bits_to_nats(report.h_sender_given_record_bits));
    }
    Ok(json_document(header("analyze", to_params(args), None), result))
}

fn contour_command(args: &ContourArgs, format: Format) -> Result<String, CoreError> {
    let s = match (args.s, args.s_db) {
        (Some(s), None) => s,
        (None, Some(db)) => cvtoric::calibration::effective_s(db, Construction::Direct)?,
        _ => {
            return Err(CoreError::Validation(
                "give exactly one of --s, --s-db".into(),
            ))
        }
    };
    let grid = figure2_grid(s, args.w, args.n_min, args.n_max, args.c_max, args.c_step)?;
    let head = header("contour", to_params(args), None);
    match format {
        Format::Json | Format::Jsonl => Ok(json_document(
            head,
            serde_json::to_value(&grid).expect("serializable grid"),
        )),
        Format::Csv => {
            let mut out = String::new();
            out.push_str(&format!(
                "# {}\n",
                serde_json::to_string(&head).expect("serializable header")
            ));
            out.push_str("n,C_bits,alpha,epsilon,I_bound_bits,p_identify\n");
            for p in &grid {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    p.n, p.c_bits, p.alpha, p.epsilon, p.i_bound_bits, p.p_identify
                ));
            }
            Ok(out)
        }
    }
}

fn percolation_command(args: &PercolationArgs, format: Format) -> Result<String, CoreError> {
    if format != Format::Json {
        return Err(CoreError::Validation("percolation output is JSON only".into()));
    }
    let spec = match args.rows {
        Some(rows) => LatticeSpec::build(rows, 2 * args.w.max(2), Boundary::Toroidal)?,
        None => percolation_lattice(args.w)?,
    };
    let estimate = percolation_mc(&spec, args.w, args.p_err, args.trials, args.seed)?;
    let result = json!({
        "estimate": estimate.failure_probability,
        "std_error": estimate.std_error,
        "trials": estimate.trials,
        "rows": spec.rows(),
        "cols": spec.cols(),
    });
    Ok(json_document(
        header("percolation", to_params(args), Some(args.seed)),
        result,
    ))
}

fn zeno_command(args: &ZenoArgs, format: Format) -> Result<String, CoreError> {
    let config = ZenoConfig::new(args.g, args.delta, args.gamma_err, args.horizon)?
        .with_samples(args.samples);
    let run = zeno_simulate(&config)?;
    let head = header("zeno", to_params(args), None);
    match format {
        Format::Json | Format::Jsonl => {
            let result = json!({
                "steady_state": run.steady_state,
                "min_uncertainty_eig": run.min_uncertainty_eig,
                "times": run.times,
                "excitation": run.excitation,
            });
            Ok(json_document(head, result))
        }
        Format::Csv => {
            let mut out = String::new();
            out.push_str(&format!(
                "# {}\n",
                serde_json::to_string(&head).expect("serializable header")
            ));
            out.push_str(&format!("# steady_state = {}\n", run.steady_state));
            out.push_str("t,excitation\n");
            for (t, x) in run.times.iter().zip(run.excitation.iter()) {
                out.push_str(&format!("{t},{x}\n"));
            }
            Ok(out)
        }
    }
}

fn squeezing_command(args: &SqueezingArgs, format: Format) -> Result<String, CoreError> {
    if format != Format::Json {
        return Err(CoreError::Validation("squeezing output is JSON only".into()));
    }
    let spec = convert(args.db, args.construction.into())?;
    let result = json!({
        "xi": spec.xi,
        "s_effective": spec.s_effective,
        "effective_db": spec.effective_db,
    });
    Ok(json_document(header("squeezing", to_params(args), None), result))
}
