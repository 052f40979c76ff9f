use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mateforge::agent::{load_task_file, record_telemetry, run_session, trim_number, Outcome};
use mateforge::diag::{has_errors, to_json_lines, Diagnostic};
use mateforge::ir::{load_assembly_file, validate_assembly, AssemblyDef, LoadError};
use mateforge::solver::{build_constraints, check_intersections, pin_joint, solve, solve_report_json, SolveOutcome};
use mateforge::visual::{assign_visual_ids, render_outcome, render_sweep, to_obj, to_stl, Camera, ViewSpec};

/// Exit 0 on success, 1 when the model itself has problems (diagnostics),
/// 2 for usage and I/O failures.
#[derive(Parser, Debug)]
#[command(name = "mateforge", version, about = "Solve, render and build box assemblies")]
struct Cli {
    /// Suppress the summary on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate an assembly; diagnostics go to stdout as JSON lines.
    Check { assembly: PathBuf },
    /// Solve and write `solve.json` (also on failure).
    Solve {
        assembly: PathBuf,
        #[command(flatten)]
        pins: Pins,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write `assembly.stl`.
        #[arg(long)]
        stl: bool,
        /// Also write `assembly.obj`.
        #[arg(long)]
        obj: bool,
    },
    /// Render one SVG per view plus `legend.json`.
    Render {
        assembly: PathBuf,
        #[arg(long, default_value = "front,top,right,iso")]
        views: String,
        #[command(flatten)]
        pins: Pins,
        #[command(flatten)]
        size: Size,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Pin a revolute joint at each angle and render every view.
    Sweep {
        assembly: PathBuf,
        /// The revolute joint to sweep.
        #[arg(long)]
        joint: String,
        /// Degrees, comma separated; may be empty.
        #[arg(long, default_value = "0,20,40,60", allow_hyphen_values = true)]
        angles: String,
        #[arg(long, default_value = "iso")]
        views: String,
        #[command(flatten)]
        pins: Pins,
        #[command(flatten)]
        size: Size,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print the visual legend as JSON.
    Ids { assembly: PathBuf },
    /// Run a model-driven build session described by a task file.
    Agent {
        task: PathBuf,
        /// Session directory.
        #[arg(long)]
        out: PathBuf,
        /// Override the iteration budget.
        #[arg(long)]
        budget: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct Pins {
    /// Pin a revolute joint, `JOINT=DEG`; repeatable.
    #[arg(long = "pin", value_name = "JOINT=DEG")]
    pins: Vec<String>,
}

#[derive(Args, Debug)]
struct Size {
    #[arg(long, default_value_t = 800)]
    width: u32,
    #[arg(long, default_value_t = 600)]
    height: u32,
}

enum Failure {
    /// Exit 2.
    Usage(String),
    /// Exit 1, diagnostics already printed.
    Domain,
}

type Run = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn print_diagnostics(diags: &[Diagnostic]) {
    print!("{}", to_json_lines(diags));
}

fn domain_if(errors: bool) -> Run {
    if errors {
        Err(Failure::Domain)
    } else {
        Ok(())
    }
}

fn parse_pins(pins: &Pins) -> Result<Vec<(String, f64)>, Failure> {
    pins.pins
        .iter()
        .map(|p| {
            let (joint, deg) = p.split_once('=').ok_or_else(|| usage(format!("--pin {p}: expected JOINT=DEG")))?;
            let deg: f64 = deg.trim().parse().map_err(|_| usage(format!("--pin {p}: \"{deg}\" is not a number")))?;
            Ok((joint.trim().to_string(), deg))
        })
        .collect()
}

fn parse_views(list: &str, size: &Size, pins: &[(String, f64)]) -> Result<Vec<ViewSpec>, Failure> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| {
            let cam = Camera::parse(name).ok_or_else(|| usage(format!("unknown view \"{name}\" (front, top, right, iso)")))?;
            let mut v = ViewSpec::new(cam).with_size(size.width, size.height);
            for (j, d) in pins {
                v = v.with_override(j.clone(), *d);
            }
            Ok(v)
        })
        .collect()
}

fn parse_angles(list: &str) -> Result<Vec<f64>, Failure> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|a| a.parse().map_err(|_| usage(format!("--angles: \"{a}\" is not a number"))))
        .collect()
}

/// Load and validate; prints diagnostics and fails with 1 on errors.
fn load_valid(path: &Path) -> Result<AssemblyDef, Failure> {
    let def = match load_assembly_file(path) {
        Ok(def) => def,
        Err(LoadError::Invalid(d)) => {
            print_diagnostics(&d);
            return Err(Failure::Domain);
        }
        Err(e @ LoadError::Io { .. }) => return Err(usage(e.to_string())),
    };
    let diags = validate_assembly(&def);
    if has_errors(&diags) {
        print_diagnostics(&diags);
        return Err(Failure::Domain);
    }
    Ok(def)
}

fn write(path: &Path, contents: &str) -> Run {
    fs::write(path, contents).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Run {
    fs::create_dir_all(dir).map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))
}

fn solve_pinned(def: &AssemblyDef, pins: &[(String, f64)]) -> Result<SolveOutcome, Vec<Diagnostic>> {
    let mut sys = build_constraints(def);
    for (j, d) in pins {
        sys = pin_joint(&sys, j, d.to_radians()).map_err(|e| vec![e])?;
    }
    let mut out = solve(&sys, None);
    out.diagnostics.extend(check_intersections(def, &out.poses));
    Ok(out)
}

fn cmd_check(assembly: &Path) -> Run {
    let def = match load_assembly_file(assembly) {
        Ok(def) => def,
        Err(LoadError::Invalid(d)) => {
            print_diagnostics(&d);
            return Err(Failure::Domain);
        }
        Err(e @ LoadError::Io { .. }) => return Err(usage(e.to_string())),
    };
    let mut diags = validate_assembly(&def);
    diags.extend(assign_visual_ids(&def).diagnostics().iter().cloned());
    print_diagnostics(&diags);
    domain_if(has_errors(&diags))
}

fn cmd_solve(assembly: &Path, pins: &Pins, out: &Path, stl: bool, obj: bool, quiet: bool) -> Run {
    let pins = parse_pins(pins)?;
    let def = load_valid(assembly)?;
    let outcome = match solve_pinned(&def, &pins) {
        Ok(o) => o,
        Err(d) => {
            print_diagnostics(&d);
            return Err(Failure::Domain);
        }
    };
    create_dir(out)?;
    write(&out.join("solve.json"), &solve_report_json(&def, &outcome))?;
    if stl {
        write(&out.join("assembly.stl"), &to_stl(&def, &outcome.poses))?;
    }
    if obj {
        write(&out.join("assembly.obj"), &to_obj(&def, &outcome.poses))?;
    }
    print_diagnostics(&outcome.diagnostics);
    if !quiet {
        eprintln!(
            "converged: {}, residual norm {:.3e}, dof {}, {} iteration(s)",
            outcome.converged, outcome.residual_norm, outcome.dof, outcome.iterations
        );
    }
    domain_if(!outcome.converged || outcome.has_errors())
}

fn cmd_render(assembly: &Path, views: &str, pins: &Pins, size: &Size, out: &Path, quiet: bool) -> Run {
    let pins = parse_pins(pins)?;
    let views = parse_views(views, size, &pins)?;
    let def = load_valid(assembly)?;
    let map = assign_visual_ids(&def);
    let outcome = match solve_pinned(&def, &pins) {
        Ok(o) => o,
        Err(d) => {
            print_diagnostics(&d);
            return Err(Failure::Domain);
        }
    };
    create_dir(out)?;
    for v in &views {
        let path = out.join(format!("{}.svg", v.camera.name()));
        write(&path, &render_outcome(&def, &outcome, &map, v))?;
        if !quiet {
            eprintln!("wrote {}", path.display());
        }
    }
    write(&out.join("legend.json"), &map.legend_json())?;
    let mut diags = map.diagnostics().to_vec();
    diags.extend(outcome.diagnostics.iter().cloned());
    print_diagnostics(&diags);
    domain_if(has_errors(&diags) || !outcome.converged)
}

/// `sweep_<joint>_<deg>deg_<view>.svg`
fn sweep_file_name(joint: &str, deg: f64, view: Camera) -> String {
    format!("sweep_{joint}_{}deg_{}.svg", trim_number(deg, 3), view.name())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(assembly: &Path, joint: &str, angles: &str, views: &str, pins: &Pins, size: &Size, out: &Path, quiet: bool) -> Run {
    let pins = parse_pins(pins)?;
    let angles = parse_angles(angles)?;
    let views = parse_views(views, size, &pins)?;
    let def = load_valid(assembly)?;
    let map = assign_visual_ids(&def);
    create_dir(out)?;
    let mut failed = has_errors(map.diagnostics());
    print_diagnostics(map.diagnostics());
    for v in &views {
        let sweep = render_sweep(&def, joint, &angles, v);
        print_diagnostics(&sweep.diagnostics);
        failed |= !sweep.diagnostics.is_empty();
        for frame in &sweep.frames {
            let path = out.join(sweep_file_name(joint, frame.angle_deg, v.camera));
            write(&path, &frame.svg)?;
            print_diagnostics(&frame.outcome.diagnostics);
            failed |= frame.outcome.has_errors() || !frame.outcome.converged;
            if !quiet {
                eprintln!("wrote {}", path.display());
            }
        }
    }
    write(&out.join("legend.json"), &map.legend_json())?;
    domain_if(failed)
}

fn cmd_ids(assembly: &Path) -> Run {
    let def = load_valid(assembly)?;
    let map = assign_visual_ids(&def);
    print!("{}", map.legend_json());
    if has_errors(map.diagnostics()) {
        eprint!("{}", to_json_lines(map.diagnostics()));
        return Err(Failure::Domain);
    }
    Ok(())
}

fn cmd_agent(task: &Path, out: &Path, budget: Option<usize>, quiet: bool) -> Result<ExitCode, Failure> {
    let mut tf = load_task_file(task).map_err(usage)?;
    if let Some(n) = budget {
        tf.task.budget.iterations = n;
    }
    let client = tf.client.build().map_err(usage)?;
    let clock = tf.clock.build();
    let session = run_session(&tf.task, client.as_ref(), clock.as_ref(), out, &tf.config)
        .map_err(|e| usage(e.to_string()))?;
    if !quiet {
        eprint!("{}", record_telemetry(&session));
        if let Some(reason) = &session.abort_reason {
            eprintln!("aborted: {reason}");
        }
    }
    println!("{}", session.outcome.as_str());
    Ok(ExitCode::from(match session.outcome {
        Outcome::Accepted => 0,
        Outcome::BudgetExhausted => 1,
        Outcome::Aborted => 2,
    }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let q = cli.quiet;
    let result = match &cli.command {
        Command::Check { assembly } => cmd_check(assembly),
        Command::Solve {
            assembly,
            pins,
            out,
            stl,
            obj,
        } => cmd_solve(assembly, pins, out, *stl, *obj, q),
        Command::Render {
            assembly,
            views,
            pins,
            size,
            out,
        } => cmd_render(assembly, views, pins, size, out, q),
        Command::Sweep {
            assembly,
            joint,
            angles,
            views,
            pins,
            size,
            out,
        } => cmd_sweep(assembly, joint, angles, views, pins, size, out, q),
        Command::Ids { assembly } => cmd_ids(assembly),
        Command::Agent { task, out, budget } => match cmd_agent(task, out, *budget, q) {
            Ok(code) => return code,
            Err(f) => Err(f),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("mateforge: {msg}");
            ExitCode::from(2)
        }
    }
}
