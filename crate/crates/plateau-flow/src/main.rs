//! Batch CLI: `run <config>`, `verify [--level quick|full]`,
//! `curves list|show <name>`.
//!
//! Exit codes: 0 on a clean run, 2 on solver failure, 64 on malformed
//! configuration or usage.

use plateau_flow::config::{CurveSpec, FlowConfig};
use plateau_flow::curve::BoundaryCurve;
use plateau_flow::flow::{
    run_with_observer, write_final_state, write_obj, write_trajectory_csv, FlowTrajectory,
};
use plateau_flow::verify::{run_all, Level};
use plateau_flow::{presets, Error};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_SOLVER: u8 = 2;
const EXIT_USAGE: u8 = 64;

fn usage() -> String {
    "usage:\n  plateau-flow run <config-file>\n  plateau-flow run --preset <name> [--out <dir>]\n  \
     plateau-flow verify [--level quick|full]\n  plateau-flow curves list\n  plateau-flow curves \
     show <name>\n\npresets: catenoid-0.8, goldschmidt-2.4\nenv: PLATEAU_FLOW_THREADS caps the \
     worker count"
        .into()
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let code = match args.first().map(String::as_str) {
        Some("run") => cmd_run(&args[1..]),
        Some("verify") => cmd_verify(&args[1..]),
        Some("curves") => cmd_curves(&args[1..]),
        _ => {
            eprintln!("{}", usage());
            Err((EXIT_USAGE, "missing or unknown subcommand".into()))
        }
    };
    match code {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

type CmdResult = Result<(), (u8, String)>;

fn usage_err(msg: impl Into<String>) -> (u8, String) {
    (EXIT_USAGE, msg.into())
}

/// Experiment presets: a full config per named scenario.
fn run_preset(name: &str) -> Option<FlowConfig> {
    let mut cfg = FlowConfig::default();
    match name {
        "catenoid-0.8" => {
            cfg.curves = CurveSpec::Preset("circles r=1 sep=0.8".into());
            cfg.t_max = 60.0;
            Some(cfg)
        }
        "goldschmidt-2.4" => {
            cfg.curves = CurveSpec::Preset("circles r=1 sep=2.4".into());
            cfg.t_max = 200.0;
            cfg.ell_floor = 1e-3;
            Some(cfg)
        }
        _ => None,
    }
}

fn load_curves(spec: &CurveSpec) -> Result<(BoundaryCurve, BoundaryCurve), (u8, String)> {
    match spec {
        CurveSpec::Preset(name) => presets::curve_preset(name).map_err(|e| usage_err(e.to_string())),
        CurveSpec::Files { plus, minus } => {
            let load = |p: &Path| {
                BoundaryCurve::read_from(p).map_err(|e| match e {
                    Error::Io(io) => usage_err(format!("curve file {}: {io}", p.display())),
                    other => usage_err(format!("curve file {}: {other}", p.display())),
                })
            };
            Ok((load(plus)?, load(minus)?))
        }
    }
}

fn cmd_run(args: &[String]) -> CmdResult {
    let mut config: Option<FlowConfig> = None;
    let mut out_override: Option<PathBuf> = None;
    let mut i = 0;
    while i < args.len() {
        match args[i].as_str() {
            "--preset" => {
                let name = args.get(i + 1).ok_or_else(|| usage_err("--preset needs a name"))?;
                config = Some(
                    run_preset(name)
                        .ok_or_else(|| usage_err(format!("unknown preset '{name}'")))?,
                );
                i += 2;
            }
            "--out" => {
                out_override =
                    Some(PathBuf::from(args.get(i + 1).ok_or_else(|| usage_err("--out needs a path"))?));
                i += 2;
            }
            path if config.is_none() && !path.starts_with("--") => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| usage_err(format!("config {path}: {e}")))?;
                config =
                    Some(FlowConfig::parse(&text).map_err(|e| usage_err(format!("{path}: {e}")))?);
                i += 1;
            }
            other => return Err(usage_err(format!("unexpected argument '{other}'"))),
        }
    }
    let mut config = config.ok_or_else(|| usage_err("run needs a config file or --preset"))?;
    if let Some(out) = out_override {
        config.out_dir = Some(out);
    }
    let out_dir = config.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(out_dir.join("meshes"))
        .map_err(|e| usage_err(format!("cannot create output dir: {e}")))?;

    let (plus, minus) = load_curves(&config.curves)?;
    // Materialize the curves next to the results and point the effective
    // config at the files, so a re-run of the effective config is exact.
    let plus_path = out_dir.join("curve_plus.txt");
    let minus_path = out_dir.join("curve_minus.txt");
    plus.write_to(&plus_path).map_err(|e| (EXIT_SOLVER, e.to_string()))?;
    minus.write_to(&minus_path).map_err(|e| (EXIT_SOLVER, e.to_string()))?;
    let mut effective = config.clone();
    effective.curves = CurveSpec::Files { plus: plus_path.clone(), minus: minus_path.clone() };
    effective.out_dir = Some(out_dir.clone());
    std::fs::write(out_dir.join("effective_config.txt"), effective.serialize())
        .map_err(|e| (EXIT_SOLVER, e.to_string()))?;
    // Re-read the materialized curves so this run and any re-run from the
    // effective config use bitwise-identical spline data.
    let plus = BoundaryCurve::read_from(&plus_path).map_err(|e| (EXIT_SOLVER, e.to_string()))?;
    let minus = BoundaryCurve::read_from(&minus_path).map_err(|e| (EXIT_SOLVER, e.to_string()))?;

    let grid = plateau_flow::mesh::Grid::new(config.n_x, config.n_theta)
        .map_err(|e| usage_err(e.to_string()))?;
    let stride = config.obj_stride;
    let meshes = out_dir.join("meshes");
    let mut observer = |step: usize, u: &plateau_flow::mesh::SurfaceMap| {
        if stride > 0 && step % stride == 0 {
            write_obj(u, &grid, &meshes.join(format!("step_{step:06}.obj")))?;
        }
        Ok(())
    };
    let result = run_with_observer(&config, &plus, &minus, None, &mut observer);
    match result {
        Ok(traj) => {
            emit_outputs(&traj, &out_dir).map_err(|e| (EXIT_SOLVER, e.to_string()))?;
            println!(
                "classification: {} after {} steps (E = {:.6}, area = {:.6}, ell = {:.6})",
                traj.classification,
                traj.records.len() - 1,
                traj.records.last().map(|r| r.energy).unwrap_or(f64::NAN),
                traj.records.last().map(|r| r.area).unwrap_or(f64::NAN),
                traj.final_params[0],
            );
            Ok(())
        }
        Err(e) => {
            let _ = std::fs::write(out_dir.join("failure.txt"), format!("{e}\n"));
            Err((EXIT_SOLVER, e.to_string()))
        }
    }
}

fn emit_outputs(traj: &FlowTrajectory, out_dir: &Path) -> plateau_flow::Result<()> {
    write_trajectory_csv(traj, &out_dir.join("trajectory.csv"))?;
    write_final_state(traj, &out_dir.join("final_state.txt"))?;
    write_obj(&traj.final_map, &traj.grid, &out_dir.join("meshes").join("final.obj"))?;
    Ok(())
}

fn cmd_verify(args: &[String]) -> CmdResult {
    let mut level = Level::Quick;
    let mut i = 0;
    while i < args.len() {
        match args[i].as_str() {
            "--level" => {
                match args.get(i + 1).map(String::as_str) {
                    Some("quick") => level = Level::Quick,
                    Some("full") => level = Level::Full,
                    other => {
                        return Err(usage_err(format!("bad --level {other:?} (quick|full)")))
                    }
                }
                i += 2;
            }
            other => return Err(usage_err(format!("unexpected argument '{other}'"))),
        }
    }
    let corrupt = std::env::var("PLATEAU_FLOW_CORRUPT_CUTOFF").ok().as_deref() == Some("1");
    if corrupt {
        println!("note: cutoff corruption hook active (negative control)");
    }
    let results = run_all(level, corrupt);
    let mut all_ok = true;
    for r in &results {
        println!("{} {}", if r.passed { "PASS" } else { "FAIL" }, r.name);
        if !r.passed {
            print!("{}", r.detail);
            all_ok = false;
        }
    }
    if all_ok {
        Ok(())
    } else {
        Err((1, "verification failed".into()))
    }
}

fn cmd_curves(args: &[String]) -> CmdResult {
    match args.first().map(String::as_str) {
        Some("list") => {
            for name in presets::curve_preset_names() {
                println!("{name}");
            }
            Ok(())
        }
        Some("show") => {
            let name = args[1..].join(" ");
            if name.is_empty() {
                return Err(usage_err("curves show needs a preset name"));
            }
            let (plus, minus) =
                presets::curve_preset(&name).map_err(|e| usage_err(e.to_string()))?;
            for (label, curve) in [("plus", &plus), ("minus", &minus)] {
                println!("# {label}");
                for k in 0..256 {
                    let t = 2.0 * PI * k as f64 / 255.0;
                    let p = curve.eval_vec(t);
                    let row: Vec<String> = p.iter().map(|v| format!("{v:.12e}")).collect();
                    println!("{}", row.join(" "));
                }
            }
            Ok(())
        }
        _ => Err(usage_err("curves needs 'list' or 'show <name>'")),
    }
}
