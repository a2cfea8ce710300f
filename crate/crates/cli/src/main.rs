//! `lowdim` — simulate stationary and parabolic heat flow on structures
//! built from transversally intersecting segments and discs.
//!
//! Every subcommand consumes a scenario JSON file (see the repository
//! README for the schema), prints a machine-readable summary to stdout and
//! exits nonzero when a scenario assertion fails.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lowdim_heat::scenario::{run_scenario, ProblemKind, Scenario, Summary};
use lowdim_heat::spectral::jprime_root_table;

#[derive(Parser)]
#[command(name = "lowdim", version, about)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,

    /// Directory for CSV/VTK artifacts (created if missing).
    #[arg(long = "out-dir", global = true, default_value = "out")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Overrides {
    /// Target mesh size.
    #[arg(long = "h", global = true)]
    h: Option<f64>,
    /// Time step for parabolic runs.
    #[arg(long = "dt", global = true)]
    dt: Option<f64>,
    /// Final time for parabolic runs.
    #[arg(long = "T", global = true)]
    t_final: Option<f64>,
    /// Theta parameter in [1/2, 1] (1 = implicit Euler, 1/2 = midpoint).
    #[arg(long = "theta", global = true)]
    theta: Option<f64>,
    /// Linear solver tolerance.
    #[arg(long = "tol", global = true)]
    tol: Option<f64>,
    /// Seed for random initial data.
    #[arg(long = "seed", global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a structure: shapes, transversality, junctions, classes.
    Validate { scenario: PathBuf },
    /// Build the mesh and export it as VTK with quality metrics.
    Mesh { scenario: PathBuf },
    /// Solve the stationary heat balance.
    SolveStationary { scenario: PathBuf },
    /// Run the theta-scheme time stepper.
    RunParabolic { scenario: PathBuf },
    /// Compute per-class Poincare constants.
    Poincare { scenario: PathBuf },
    /// Eigenvalue tables: structure spectrum, or --roots for the Bessel
    /// derivative root table.
    Spectrum {
        scenario: Option<PathBuf>,
        /// Dump the j'_{n,k} root table instead of a structure spectrum.
        #[arg(long)]
        roots: bool,
        #[arg(long, default_value_t = 8)]
        n_max: u32,
        #[arg(long, default_value_t = 8)]
        k_max: u32,
    },
    /// Run a scenario file as-is.
    Scenario { scenario: PathBuf },
}

fn apply_overrides(s: &mut Scenario, o: &Overrides) {
    if let Some(h) = o.h {
        s.h = h;
    }
    if let Some(dt) = o.dt {
        s.dt = Some(dt);
    }
    if let Some(t) = o.t_final {
        s.t_final = Some(t);
    }
    if let Some(theta) = o.theta {
        s.theta = Some(theta);
    }
    if let Some(tol) = o.tol {
        s.tol = tol;
    }
    if let Some(seed) = o.seed {
        s.seed = seed;
    }
}

fn load(path: &PathBuf, o: &Overrides, force_kind: Option<ProblemKind>) -> Result<Scenario, String> {
    let mut s = Scenario::from_path(path).map_err(|e| format!("{}: {}", path.display(), e))?;
    apply_overrides(&mut s, o);
    if let Some(kind) = force_kind {
        if kind != s.problem {
            // the file's assertions target its own problem kind
            s.assertions.clear();
            s.problem = kind;
        }
    }
    Ok(s)
}

fn emit(summary: &Summary) -> ExitCode {
    println!("{}", serde_json::to_string_pretty(summary).expect("summary serializes"));
    if summary.passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("scenario assertions failed");
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    std::fs::create_dir_all(&cli.out_dir)
        .map_err(|e| format!("creating {}: {}", cli.out_dir.display(), e))?;
    let out_dir = cli.out_dir.clone();
    let o = cli.overrides;
    let run_kind = |path: &PathBuf, kind: Option<ProblemKind>| -> Result<ExitCode, String> {
        let scenario = load(path, &o, kind)?;
        let summary = run_scenario(&scenario, &out_dir).map_err(|e| e.to_string())?;
        Ok(emit(&summary))
    };
    match &cli.command {
        Command::Validate { scenario } => run_kind(scenario, Some(ProblemKind::Validate)),
        Command::SolveStationary { scenario } => run_kind(scenario, Some(ProblemKind::Stationary)),
        Command::RunParabolic { scenario } => run_kind(scenario, Some(ProblemKind::Parabolic)),
        Command::Poincare { scenario } => run_kind(scenario, Some(ProblemKind::Poincare)),
        Command::Scenario { scenario } => run_kind(scenario, None),
        Command::Mesh { scenario } => {
            let s = load(scenario, &o, None)?;
            let components = s.structure.to_components();
            let structure =
                lowdim_heat::validate_structure(components).map_err(|e| e.to_string())?;
            let mesh = lowdim_heat::build_mesh(&structure, s.h).map_err(|e| e.to_string())?;
            let q = lowdim_heat::mesh_quality(&mesh);
            let path = out_dir.join(format!("{}_mesh.vtk", s.name));
            lowdim_heat::vtk::emit_vtk(&mesh, &[], &path).map_err(|e| e.to_string())?;
            let summary = serde_json::json!({
                "name": s.name,
                "n_dofs": q.n_dofs,
                "h_max": q.h_max,
                "min_angle_deg": q.min_angle_deg,
                "max_aspect": q.max_aspect,
                "outputs": [path.display().to_string()],
            });
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            Ok(ExitCode::SUCCESS)
        }
        Command::Spectrum {
            scenario,
            roots,
            n_max,
            k_max,
        } => {
            if *roots || scenario.is_none() {
                let table = jprime_root_table(*n_max, *k_max).map_err(|e| e.to_string())?;
                let path = out_dir.join("bessel_jprime_roots.csv");
                let mut text = String::from("n,k,root\n");
                for (ni, row) in table.iter().enumerate() {
                    for (ki, root) in row.iter().enumerate() {
                        text.push_str(&format!("{},{},{:.16e}\n", ni + 1, ki + 1, root));
                    }
                }
                std::fs::write(&path, text).map_err(|e| e.to_string())?;
                let summary = serde_json::json!({
                    "table": "bessel_jprime_roots",
                    "n_max": n_max,
                    "k_max": k_max,
                    "outputs": [path.display().to_string()],
                });
                println!("{}", serde_json::to_string_pretty(&summary).unwrap());
                Ok(ExitCode::SUCCESS)
            } else {
                run_kind(scenario.as_ref().unwrap(), Some(ProblemKind::Spectrum))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {}", msg);
            ExitCode::FAILURE
        }
    }
}
