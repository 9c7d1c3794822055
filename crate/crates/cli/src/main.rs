//! `hyperideal`: validate, solve, render and double circle-pattern instances.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 angle data rejected by
//! the feasibility conditions, 3 solver or reconstruction failure (including
//! residuals above tolerance).

use clap::{Args, Parser, Subcommand};
use hyperideal::conditions::{CheckOptions, Geometry};
use hyperideal::demos::{demo, DEMO_NAMES};
use hyperideal::io::{parse_pattern, to_json, Instance, VerdictFile, Witness};
use hyperideal::pipeline::{self, PipelineError, PipelineOptions};
use hyperideal::reconstruct::{render_svg, RenderOptions};
use hyperideal::solver::{build_tets, FanOptions, SolverOptions};
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_USAGE: u8 = 1;
const EXIT_REJECTED: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "hyperideal", version, about = "Hyperideal circle patterns on singular surfaces")]
struct Cli {
    /// Worker threads for the parallel stages (0 = one per core).
    #[arg(long, global = true, env = "HYPERIDEAL_WORKERS", default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the feasibility conditions and write a verdict.
    Validate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        check: CheckArgs,
        /// Output file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate, maximize the volume, reconstruct and verify the pattern.
    Solve {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        check: CheckArgs,
        #[arg(long, default_value_t = 1e-9)]
        tol_grad: f64,
        #[arg(long, default_value_t = 1e-7)]
        tol_len: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        /// Start from a random feasible point drawn with this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Largest verification residual accepted for exit status 0.
        #[arg(long, default_value_t = 1e-6)]
        tol_verify: f64,
        /// Rotate the fan triangulation of every pyramid by this many corners.
        #[arg(long, default_value_t = 0)]
        fan_rotation: usize,
        /// Also write the tetrahedra of the solution (normals, vertices,
        /// angles, lengths, volume) to this file.
        #[arg(long)]
        dump_tets: Option<PathBuf>,
        /// Output file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a solution as SVG.
    Render {
        solution: PathBuf,
        #[arg(long, default_value_t = 1024)]
        size: u32,
        #[arg(long, default_value_t = 64)]
        segments: usize,
        /// Label cone points with their curvature.
        #[arg(long)]
        labels: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the closed double of a framed instance.
    Double {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a bundled instance.
    Demo {
        /// One of the bundled names; omit to list them.
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Instance JSON.
    instance: PathBuf,
    /// Separate angle-data JSON (overrides the instance's own angles).
    #[arg(long)]
    angles: Option<PathBuf>,
    /// Override the target geometry.
    #[arg(long, value_parser = parse_geometry)]
    geometry: Option<Geometry>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Allow this many chords per face in the domain search.
    #[arg(long)]
    exhaustive_chords: Option<usize>,
}

fn parse_geometry(s: &str) -> Result<Geometry, String> {
    match s.to_ascii_lowercase().as_str() {
        "euclidean" => Ok(Geometry::Euclidean),
        "hyperbolic" => Ok(Geometry::Hyperbolic),
        _ => Err(format!("unknown geometry {s:?} (expected euclidean or hyperbolic)")),
    }
}

/// A failure with its exit status and a JSON description for standard error.
struct Failure {
    code: u8,
    report: serde_json::Value,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_USAGE, report: json!({"error": "UsageError", "message": message.into()}) }
    }

    fn input(name: &str, message: impl Into<String>) -> Failure {
        Failure { code: EXIT_USAGE, report: json!({"error": name, "message": message.into()}) }
    }
}

fn pipeline_failure(e: PipelineError, inst: &Instance) -> Failure {
    let message = e.to_string();
    let name = e.name();
    match e {
        PipelineError::Rejected(verdict) => Failure {
            code: EXIT_REJECTED,
            report: json!({
                "error": name,
                "message": message,
                "witness": verdict.rejection().map(|r| Witness::of(r, &inst.complex)),
                "verdict": *verdict,
            }),
        },
        PipelineError::Solver { error, partial } => {
            let witness = match &partial {
                Some(p) => json!({"iterations": p.1.iterations, "residuals": p.1.residuals, "boundary_warning": p.1.boundary_warning}),
                None => json!(format!("{error:?}")),
            };
            Failure { code: EXIT_SOLVER, report: json!({"error": name, "message": message, "witness": witness}) }
        }
        PipelineError::Reconstruct(r) => {
            Failure { code: EXIT_SOLVER, report: json!({"error": name, "message": message, "witness": format!("{r:?}")}) }
        }
        PipelineError::Complex(c) => Failure::input(name, format!("{message} ({c:?})")),
        PipelineError::Conditions(c) => Failure::input(name, format!("{message} ({c:?})")),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input("ReadError", format!("{}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::input("WriteError", format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn serialize<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    to_json(value).map_err(|e| Failure::input(e.name(), e.to_string()))
}

fn distinct_paths(inputs: &[Option<&Path>], out: Option<&Path>) -> Result<(), Failure> {
    if let Some(o) = out {
        let canon = |p: &Path| fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf());
        for i in inputs.iter().flatten() {
            if canon(i) == canon(o) {
                return Err(Failure::usage(format!("output {} would overwrite an input", o.display())));
            }
        }
    }
    Ok(())
}

fn load(input: &InputArgs) -> Result<Instance, Failure> {
    let text = read(&input.instance)?;
    let angles = input.angles.as_deref().map(read).transpose()?;
    let mut inst = Instance::parse(&text, angles.as_deref()).map_err(|e| Failure::input(e.name(), e.to_string()))?;
    if let Some(g) = input.geometry {
        inst.data.geometry = g;
    }
    Ok(inst)
}

fn check_options(c: &CheckArgs) -> CheckOptions {
    let mut opts = CheckOptions::default();
    if let Some(k) = c.exhaustive_chords {
        opts.chord_budget = k;
    }
    opts
}

fn positive(name: &str, x: f64) -> Result<(), Failure> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage(format!("--{name} must be positive")))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot start {} workers: {e}", cli.workers)))?;
    }
    match cli.command {
        Command::Validate { input, check, out } => {
            distinct_paths(&[Some(&input.instance), input.angles.as_deref()], out.as_deref())?;
            let inst = load(&input)?;
            let verdict = pipeline::validate(&inst, &check_options(&check)).map_err(|e| pipeline_failure(e, &inst))?;
            write_output(out.as_deref(), &serialize(&VerdictFile::new(&inst, &verdict))?)?;
            if verdict.is_accepted() {
                Ok(())
            } else {
                let reason = verdict.rejection().map(|r| r.name()).unwrap_or("Rejected");
                Err(Failure { code: EXIT_REJECTED, report: json!({"error": reason, "message": "the angle data is rejected"}) })
            }
        }
        Command::Solve {
            input,
            check,
            tol_grad,
            tol_len,
            max_iter,
            seed,
            tol_verify,
            fan_rotation,
            dump_tets,
            out,
        } => {
            distinct_paths(&[Some(&input.instance), input.angles.as_deref()], out.as_deref())?;
            distinct_paths(&[Some(&input.instance), input.angles.as_deref(), out.as_deref()], dump_tets.as_deref())?;
            positive("tol-grad", tol_grad)?;
            positive("tol-len", tol_len)?;
            positive("tol-verify", tol_verify)?;
            if max_iter == 0 {
                return Err(Failure::usage("--max-iter must be positive"));
            }
            let inst = load(&input)?;
            let opts = PipelineOptions {
                check: check_options(&check),
                solver: SolverOptions { tol_grad, tol_len, max_iter, ..Default::default() },
                fan: FanOptions { rotation: fan_rotation },
                seed,
                ..Default::default()
            };
            let sol = pipeline::solve(&inst, &opts).map_err(|e| pipeline_failure(e, &inst))?;
            write_output(out.as_deref(), &serialize(&sol.to_file(inst.name.clone()))?)?;
            if let Some(path) = dump_tets {
                let tets = build_tets(&sol.tet_complex, &sol.theta.to_vector())
                    .map_err(|e| Failure { code: EXIT_SOLVER, report: json!({"error": e.name(), "message": e.to_string()}) })?;
                let dumps: Vec<_> = tets.iter().map(|t| t.dump()).collect();
                write_output(Some(&path), &serialize(&dumps)?)?;
            }
            let v = &sol.verification;
            log::info!(
                "converged={} iterations={} volume={:.12} max residual={:.3e}",
                sol.report.converged,
                sol.report.iterations,
                sol.report.volume,
                v.max_residual()
            );
            if sol.within_tolerance(tol_verify) {
                Ok(())
            } else {
                Err(Failure {
                    code: EXIT_SOLVER,
                    report: json!({
                        "error": "ResidualAboveTolerance",
                        "message": format!("largest verification residual {:.3e} exceeds {tol_verify:e}", v.max_residual()),
                        "witness": {"theta_error_edge": v.theta_error_edge, "verification": v},
                    }),
                })
            }
        }
        Command::Render { solution, size, segments, labels, out } => {
            distinct_paths(&[Some(&solution)], out.as_deref())?;
            if size == 0 || segments < 3 {
                return Err(Failure::usage("--size must be positive and --segments at least 3"));
            }
            let p = parse_pattern(&read(&solution)?).map_err(|e| Failure::input(e.name(), e.to_string()))?;
            let svg = render_svg(&p, &RenderOptions { size: size as f64, segments, labels });
            write_output(out.as_deref(), &svg)
        }
        Command::Double { input, out } => {
            distinct_paths(&[Some(&input.instance), input.angles.as_deref()], out.as_deref())?;
            let inst = load(&input)?;
            let doubled = pipeline::doubled_instance(&inst).map_err(|e| pipeline_failure(e, &inst))?;
            write_output(out.as_deref(), &serialize(&doubled.to_file())?)
        }
        Command::Demo { name: None, out } => write_output(out.as_deref(), &(DEMO_NAMES.join("\n") + "\n")),
        Command::Demo { name: Some(name), out } => {
            let inst = demo(&name)
                .ok_or_else(|| Failure::usage(format!("unknown demo {name:?}; available: {}", DEMO_NAMES.join(", "))))?;
            write_output(out.as_deref(), &serialize(&inst.to_file())?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", serde_json::to_string_pretty(&f.report).unwrap_or_default());
            ExitCode::from(f.code)
        }
    }
}
