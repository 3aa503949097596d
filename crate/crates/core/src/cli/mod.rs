//! The `adjflow` command line: config parsing, pipelines and exports.

pub mod config;
pub mod export;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::adjoint::{adjoint_residual, solve_adjoint};
use crate::flow::{dissipated_energy, residual_norm, solve_flow, FlowState};
use crate::mesh::{save_mesh, BentChannel, Mesh2D};
use crate::shape_opt::{gradient_check, optimize};
use crate::{Error, Result};

pub use config::{
    load_config, parse_config, GeneratorSpec, GradCheckConfig, MeshSource, OutputConfig, Perturbation, RunConfig,
};
pub use export::{export_history_csv, export_vtk, history_csv, vtk_string, write_atomic, HISTORY_HEADER};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "adjflow",
    version,
    about = "Steady flow, adjoint and shape optimization on MINI elements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Run configuration (JSON).
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(short, long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenKind {
    Channel,
    RectWithHole,
    BentChannel,
}

#[derive(Args, Debug)]
struct MeshArgs {
    /// Generator to run; alternatively take the mesh section of `--config`.
    #[arg(long = "gen", value_enum, conflicts_with = "config")]
    kind: Option<GenKind>,
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 3.0)]
    length: f64,
    #[arg(long, default_value_t = 1.0)]
    height: f64,
    #[arg(long, default_value_t = 30)]
    nx: usize,
    #[arg(long, default_value_t = 10)]
    ny: usize,
    /// `x0,y0,x1,y1` of the outer rectangle.
    #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [-0.5, -0.5, 1.5, 0.5])]
    rect: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.0, 0.0])]
    center: Vec<f64>,
    #[arg(long, default_value_t = 0.2)]
    radius: f64,
    /// Segments on the hole boundary.
    #[arg(long, default_value_t = 96)]
    resolution: usize,
    /// Output mesh file.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the flow and write the state and its energy.
    Solve(RunArgs),
    /// Solve flow and adjoint and write the adjoint field.
    Adjoint(RunArgs),
    /// Print the dissipated energy of the configured case.
    Energy(RunArgs),
    /// Compare the shape derivative with central differences.
    Gradcheck(RunArgs),
    /// Run the shape optimization.
    Optimize(RunArgs),
    /// Generate a mesh file.
    Mesh(MeshArgs),
}

/// Exit code of an error category.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Config { .. } | Error::InvalidMesh(_) | Error::InvalidArgument(_) => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_SOLVER,
    }
}

fn category(e: &Error) -> &'static str {
    match exit_code(e) {
        EXIT_CONFIG => "config",
        EXIT_IO => "io",
        _ => "solver",
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", category(&e));
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Solve(a) => solve_cmd(&a),
        Command::Adjoint(a) => adjoint_cmd(&a),
        Command::Energy(a) => energy_cmd(&a),
        Command::Gradcheck(a) => gradcheck_cmd(&a),
        Command::Optimize(a) => optimize_cmd(&a),
        Command::Mesh(a) => mesh_cmd(&a),
    }
}

fn prepare(a: &RunArgs) -> Result<(RunConfig, Mesh2D)> {
    let cfg = load_config(&a.config)?;
    let mesh = cfg.build_mesh()?;
    std::fs::create_dir_all(&a.out)?;
    Ok((cfg, mesh))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn state_report(cfg: &RunConfig, mesh: &Mesh2D, state: &FlowState) -> Result<serde_json::Value> {
    Ok(json!({
        "energy": dissipated_energy(mesh, state, cfg.flow.viscosity),
        "volume": mesh.volume(),
        "viscosity": cfg.flow.viscosity,
        "nodes": mesh.node_count(),
        "triangles": mesh.triangle_count(),
        "newton_iterations": state.report.iterations,
        "continuation_levels": state.report.continuation_levels,
        "residuals": state.report.residuals,
        "residual_norm": residual_norm(mesh, state, &cfg.flow)?,
        "velocity_norm": state.field.velocity_norm(),
        "pressure_norm": state.field.pressure_norm(),
    }))
}

fn solve_cmd(a: &RunArgs) -> Result<()> {
    let (cfg, mesh) = prepare(a)?;
    let state = solve_flow(&mesh, &cfg.flow, None)?;
    let report = state_report(&cfg, &mesh, &state)?;
    if cfg.output.vtk {
        export_vtk(&a.out.join("state.vtk"), &mesh, &state.field, "adjflow state")?;
    }
    write_json(&a.out.join("energy.json"), &report)?;
    println!(
        "J = {:e} ({} Newton iterations)",
        report["energy"].as_f64().unwrap_or(f64::NAN),
        state.report.iterations
    );
    Ok(())
}

fn adjoint_cmd(a: &RunArgs) -> Result<()> {
    let (cfg, mesh) = prepare(a)?;
    let state = solve_flow(&mesh, &cfg.flow, None)?;
    let adj = solve_adjoint(&mesh, &state, &cfg.flow)?;
    if cfg.output.vtk {
        export_vtk(&a.out.join("adjoint.vtk"), &mesh, &adj.field, "adjflow adjoint")?;
    }
    let report = json!({
        "energy": dissipated_energy(&mesh, &state, cfg.flow.viscosity),
        "adjoint_velocity_norm": adj.field.velocity_norm(),
        "adjoint_pressure_norm": adj.field.pressure_norm(),
        "adjoint_residual": adjoint_residual(&mesh, &state, &adj, &cfg.flow)?,
    });
    write_json(&a.out.join("adjoint.json"), &report)?;
    println!(
        "|v| = {:e}, |q| = {:e}",
        adj.field.velocity_norm(),
        adj.field.pressure_norm()
    );
    Ok(())
}

fn energy_cmd(a: &RunArgs) -> Result<()> {
    let (cfg, mesh) = prepare(a)?;
    let state = solve_flow(&mesh, &cfg.flow, None)?;
    let report = state_report(&cfg, &mesh, &state)?;
    write_json(&a.out.join("energy.json"), &report)?;
    println!("{:.16e}", report["energy"].as_f64().unwrap_or(f64::NAN));
    Ok(())
}

fn gradcheck_cmd(a: &RunArgs) -> Result<()> {
    let (cfg, mesh) = prepare(a)?;
    let Some(pert) = &cfg.gradcheck.perturbation else {
        return Err(Error::config(
            "gradcheck.perturbation",
            "required by the gradcheck subcommand",
        ));
    };
    let v = pert.field(&mesh)?;
    let r = gradient_check(&mesh, &cfg.flow, &v, &cfg.gradcheck.steps, cfg.gradcheck.recovery)?;
    println!("J = {:e}, dJ(V) = {:e}", r.energy, r.analytic);
    println!("{:>10} {:>22} {:>12}", "t", "central difference", "rel. error");
    for row in &r.rows {
        println!(
            "{:>10.3e} {:>22.12e} {:>12.3e}",
            row.t, row.central_difference, row.relative_error
        );
    }
    let rows: Vec<_> = r
        .rows
        .iter()
        .map(|row| {
            json!({
                "t": row.t,
                "j_plus": row.j_plus,
                "j_minus": row.j_minus,
                "central_difference": row.central_difference,
                "relative_error": row.relative_error,
            })
        })
        .collect();
    write_json(
        &a.out.join("gradcheck.json"),
        &json!({
            "energy": r.energy,
            "analytic": r.analytic,
            "rows": rows,
            "observed_orders": r.observed_orders,
            "decreasing": r.decreasing(),
        }),
    )
}

fn optimize_cmd(a: &RunArgs) -> Result<()> {
    let (cfg, mesh) = prepare(a)?;
    let r = optimize(&mesh, &cfg.flow, &cfg.optimize)?;
    export_history_csv(&a.out.join("history.csv"), &r.history)?;
    if cfg.output.mesh {
        write_atomic(&a.out.join("optimized_mesh.json"), &save_mesh(&r.mesh))?;
    }
    if cfg.output.vtk {
        export_vtk(
            &a.out.join("optimized.vtk"),
            &r.mesh,
            &r.state.field,
            "adjflow optimized state",
        )?;
    }
    let accepted = r.history.iter().filter(|h| h.accepted).count();
    write_json(
        &a.out.join("optimize.json"),
        &json!({
            "initial_energy": r.initial_energy,
            "final_energy": r.final_energy(),
            "reduction": r.reduction(),
            "initial_volume": r.initial_volume,
            "final_volume": r.mesh.volume(),
            "target_volume": r.target_volume,
            "max_volume_drift": r.max_volume_drift(),
            "attempts": r.history.len(),
            "accepted": accepted,
            "terminated_early": r.terminated_early,
        }),
    )?;
    println!(
        "J: {:e} -> {:e} ({:.2}% reduction), {accepted}/{} moves accepted{}",
        r.initial_energy,
        r.final_energy(),
        100.0 * r.reduction(),
        r.history.len(),
        if r.terminated_early { ", stopped early" } else { "" }
    );
    Ok(())
}

fn mesh_cmd(a: &MeshArgs) -> Result<()> {
    let mesh = match (a.kind, &a.config) {
        (Some(kind), _) => {
            let spec = match kind {
                GenKind::Channel => GeneratorSpec::Channel {
                    length: a.length,
                    height: a.height,
                    nx: a.nx,
                    ny: a.ny,
                },
                GenKind::RectWithHole => GeneratorSpec::RectWithHole {
                    rect: [a.rect[0], a.rect[1], a.rect[2], a.rect[3]],
                    center: [a.center[0], a.center[1]],
                    radius: a.radius,
                    resolution: a.resolution,
                },
                GenKind::BentChannel => GeneratorSpec::BentChannel(BentChannel::default()),
            };
            spec.generate()?
        }
        (None, Some(path)) => load_config(path)?.build_mesh()?,
        (None, None) => return Err(Error::InvalidArgument("either --gen or --config is required".into())),
    };
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_atomic(&a.out, &save_mesh(&mesh))?;
    println!(
        "{} nodes, {} triangles -> {}",
        mesh.node_count(),
        mesh.triangle_count(),
        a.out.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_category() {
        assert_eq!(exit_code(&Error::config("flow.viscosity", "x")), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::NewtonDiverged { trace: vec![1.0] }), EXIT_SOLVER);
        assert_eq!(exit_code(&Error::Singular("x".into())), EXIT_SOLVER);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "x");
        assert_eq!(exit_code(&Error::Io(io)), EXIT_IO);
    }

    #[test]
    fn usage_errors_exit_nonzero() {
        assert_eq!(run(["adjflow"]), EXIT_CONFIG);
        assert_eq!(run(["adjflow", "bogus"]), EXIT_CONFIG);
        assert_eq!(run(["adjflow", "solve"]), EXIT_CONFIG);
    }

    #[test]
    fn missing_config_file_is_io() {
        assert_eq!(
            run(["adjflow", "solve", "-c", "/nonexistent/cfg.json", "-o", "/tmp"]),
            EXIT_IO
        );
    }
}
