use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polyhier::{
    blocks, grid_multistart, parse_instance, run_full_level, solve_detailed, BlockKind, CoordMode,
    DriverConfig, MomentIndex, PopInstanceF64, SolveOutcome, SolverConfig, StartMode, Strategy,
    ZUpdate,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "polyhier", version, about = "Fine-grained moment hierarchy solver for polynomial optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write the report (and optionally a trace).
    Solve(SolveArgs),
    /// Grid + multistart reference optimum for small instances.
    Oracle(OracleArgs),
    /// Print the block structure of one level without solving.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Fine,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoordArg {
    Gs,
    Jacobi,
}

#[derive(Clone, Copy, ValueEnum)]
enum ZArg {
    Scaled,
    Unscaled,
}

#[derive(Clone, Copy, ValueEnum)]
enum StartArg {
    All,
    Moment,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 1e-3)]
    tol_coord: f64,
    #[arg(long, default_value_t = 1e-3)]
    tol_admm: f64,
    #[arg(long, default_value_t = 100)]
    max_inner: usize,
    #[arg(long, default_value_t = 10_000)]
    max_outer: usize,
    #[arg(long, default_value_t = 1e-5)]
    eps_feas: f64,
    #[arg(long, default_value_t = 1e-5)]
    eps_obj: f64,
    #[arg(long, default_value_t = 1e-6)]
    rank_tau: f64,
    /// Highest level; defaults to two above the lowest.
    #[arg(long)]
    w_max: Option<u32>,
    /// Solve only this level with every block active.
    #[arg(long, conflicts_with_all = ["w_max", "start", "compare_cold"])]
    level: Option<u32>,
    #[arg(long, value_enum, default_value = "fine")]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "all")]
    start: StartArg,
    #[arg(long, value_enum, default_value = "gs")]
    coord_mode: CoordArg,
    #[arg(long, value_enum, default_value = "scaled")]
    z_update: ZArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record cold-start iteration counts next to the warm ones.
    #[arg(long)]
    compare_cold: bool,
    #[arg(long)]
    parallel: bool,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-iteration CSV trace path.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 201)]
    resolution: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    instance: PathBuf,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Input(String),
    Unconverged,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

fn load(path: &Path) -> Result<PopInstanceF64, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n"))
            .map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn write_trace(path: &Path, outcome: &SolveOutcome<f64>) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    for row in &outcome.trace {
        w.serialize(row)?;
    }
    if outcome.trace.is_empty() {
        w.write_record([
            "iter", "level", "q", "objective", "dual_objective", "primal_residual", "max_violation", "elapsed_s",
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn run_solve(a: &SolveArgs) -> Result<(), Failure> {
    let inst = load(&a.instance)?;
    let cfg = DriverConfig {
        eps_feas: a.eps_feas,
        eps_obj: a.eps_obj,
        rank_tau: a.rank_tau,
        w_max: a.w_max,
        solver: SolverConfig {
            mu: a.mu,
            tol_coord: a.tol_coord,
            tol_admm: a.tol_admm,
            max_inner: a.max_inner,
            max_outer: a.max_outer,
            coord_mode: match a.coord_mode {
                CoordArg::Gs => CoordMode::GaussSeidel,
                CoordArg::Jacobi => CoordMode::Jacobi,
            },
            z_update: match a.z_update {
                ZArg::Scaled => ZUpdate::Scaled,
                ZArg::Unscaled => ZUpdate::Unscaled,
            },
            parallel: a.parallel,
            ..SolverConfig::default()
        },
        strategy: match a.strategy {
            StrategyArg::Fine => Strategy::FineGrained,
            StrategyArg::Full => Strategy::FullLevel,
        },
        start: match a.start {
            StartArg::All => StartMode::AllBlocks,
            StartArg::Moment => StartMode::MomentOnly,
        },
        seed: Some(a.seed),
        compare_cold: a.compare_cold,
    };
    cfg.validate()?;
    let outcome = match a.level {
        Some(w) => run_full_level(&inst, w, &cfg)?,
        None => solve_detailed(&inst, &cfg)?,
    };
    emit(a.out.as_deref(), &serde_json::to_string_pretty(&outcome.report)?)?;
    if let Some(t) = &a.trace {
        write_trace(t, &outcome)?;
    }
    if outcome.report.status.is_success() {
        Ok(())
    } else {
        eprintln!("solver stopped with status {:?}", outcome.report.status);
        Err(Failure::Unconverged)
    }
}

fn run_oracle(a: &OracleArgs) -> Result<(), Failure> {
    let inst = load(&a.instance)?;
    let r = grid_multistart(&inst, None, a.resolution)?;
    emit(a.out.as_deref(), &serde_json::to_string_pretty(&r)?)
}

fn run_inspect(a: &InspectArgs) -> Result<(), Failure> {
    let inst = load(&a.instance)?;
    let w = a.level.unwrap_or_else(|| inst.min_level());
    let idx = MomentIndex::new(inst.nvars(), w);
    let set = blocks(&inst, w, &idx, Some(a.seed))?;
    let list: Vec<_> = set
        .blocks
        .iter()
        .map(|b| {
            json!({
                "block": b.id().to_string(),
                "kind": match b.kind() { BlockKind::Moment => "moment", BlockKind::Localizing(_) => "localizing" },
                "order": b.order(),
                "dim": b.dim(),
                "constraint": set.f_map.get(&b.id()),
            })
        })
        .collect();
    let g: Vec<_> = set
        .g_map
        .iter()
        .enumerate()
        .map(|(k, vars)| json!({ "constraint": k, "variables": vars }))
        .collect();
    let moment = set.blocks.iter().filter(|b| b.kind() == BlockKind::Moment).count();
    let doc = json!({
        "level": w,
        "n": inst.nvars(),
        "moment_vector_length": idx.len(),
        "moment_blocks": moment,
        "localizing_blocks": set.blocks.len() - moment,
        "blocks": list,
        "g_map": g,
    });
    emit(None, &serde_json::to_string_pretty(&doc)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Oracle(a) => run_oracle(a),
        Command::Inspect(a) => run_inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Unconverged) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
