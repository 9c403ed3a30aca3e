//! `workbench` command-line entry point.
//!
//! Exit codes: 0 success, 1 IO error, 2 configuration error,
//! 3 simulation aborted, 4 verification failures.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use manip_workbench::config::WorkbenchConfig;
use manip_workbench::report;
use manip_workbench::sim::{run_scenario, ControllerKind, ScenarioSpec, SimTrace};
use manip_workbench::verify;

#[derive(Parser)]
#[command(
    name = "workbench",
    about = "Trajectory-tracking simulation workbench for a 3-DOF cylindrical manipulator"
)]
struct Cli {
    /// Print the complete default configuration as JSON and exit.
    #[arg(long)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario with one controller; write trace, metrics, figures.
    Simulate {
        #[arg(long)]
        scenario: String,
        /// pd, smc or asmc-nn.
        #[arg(long)]
        controller: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several controllers on one scenario; write overlaid figures
    /// and a comparison table.
    Compare {
        #[arg(long)]
        scenario: String,
        /// Comma-separated list, e.g. smc,asmc-nn.
        #[arg(long)]
        controllers: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in verification suite.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SIM: u8 = 3;
const EXIT_VERIFY: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_defaults {
        print!("{}", WorkbenchConfig::default().to_json_pretty());
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: no command given; try --help or --print-defaults");
        return ExitCode::from(EXIT_CONFIG);
    };
    match command {
        Command::Simulate {
            scenario,
            controller,
            config,
            out,
        } => cmd_simulate(&scenario, &controller, config.as_deref(), out),
        Command::Compare {
            scenario,
            controllers,
            config,
            out,
        } => cmd_compare(&scenario, &controllers, config.as_deref(), out),
        Command::Verify { config } => cmd_verify(config.as_deref()),
    }
}

fn load_config(path: Option<&Path>) -> Result<WorkbenchConfig, String> {
    match path {
        Some(p) => WorkbenchConfig::load(p),
        None => Ok(WorkbenchConfig::default()),
    }
}

fn resolve_out_dir(cfg: &WorkbenchConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("WORKBENCH_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(&cfg.output_dir))
}

fn lookup_scenario(cfg: &WorkbenchConfig, name: &str) -> Result<ScenarioSpec, String> {
    cfg.scenario(name).ok_or_else(|| {
        format!(
            "unknown scenario '{name}'; valid: {}",
            cfg.scenario_names().join(", ")
        )
    })
}

fn run_one(
    cfg: &WorkbenchConfig,
    spec: &ScenarioSpec,
    kind: ControllerKind,
) -> Result<SimTrace, String> {
    run_scenario(spec, kind, &cfg.controller_setup(), &cfg.params)
        .map_err(|failure| format!("scenario '{}' with {}: {failure}", spec.name, kind.name()))
}

/// Per-joint settling thresholds: 1% of the commanded step for constant
/// references, absolute 0.01 for tracking references.
fn thresholds_for(trace: &SimTrace) -> [f64; 3] {
    if trace.step_reference && !trace.records.is_empty() {
        let first = &trace.records[0];
        let last = trace.records.last().unwrap();
        std::array::from_fn(|j| {
            let span = (last.q_d[j] - first.q[j]).abs();
            if span > 0.0 {
                0.01 * span
            } else {
                0.01
            }
        })
    } else {
        [0.01; 3]
    }
}

fn metrics_csv(controller: &str, summary: &report::MetricsSummary) -> String {
    let mut map = BTreeMap::new();
    map.insert(controller.to_string(), summary.clone());
    report::comparison_table(&map).1
}

fn cmd_simulate(
    scenario: &str,
    controller: &str,
    config: Option<&Path>,
    out: Option<PathBuf>,
) -> ExitCode {
    let (cfg, spec, kind) = match (|| -> Result<_, String> {
        let cfg = load_config(config)?;
        let spec = lookup_scenario(&cfg, scenario)?;
        let kind = ControllerKind::parse(controller)?;
        Ok((cfg, spec, kind))
    })() {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let trace = match run_one(&cfg, &spec, kind) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SIM);
        }
    };
    let out_dir = resolve_out_dir(&cfg, out);
    match write_outputs(&cfg, &spec, &[trace], &out_dir) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn write_outputs(
    _cfg: &WorkbenchConfig,
    spec: &ScenarioSpec,
    traces: &[SimTrace],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, String> {
    std::fs::create_dir_all(out_dir).map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let mut files = Vec::new();
    let thresholds = thresholds_for(&traces[0]);
    let onset = spec.disturbance.as_ref().map(|d| d.onset);
    let mut summaries = BTreeMap::new();
    for trace in traces {
        let csv_path = out_dir.join(format!("{}_{}.csv", spec.name, trace.controller.name()));
        report::write_csv(trace, &csv_path).map_err(|e| e.to_string())?;
        files.push(csv_path);
        let summary = report::compute_metrics_per_joint(trace, &thresholds, onset)
            .map_err(|e| e.to_string())?;
        let metrics_path = out_dir.join(format!(
            "{}_{}_metrics.csv",
            spec.name,
            trace.controller.name()
        ));
        std::fs::write(&metrics_path, metrics_csv(trace.controller.name(), &summary))
            .map_err(|e| e.to_string())?;
        files.push(metrics_path);
        summaries.insert(trace.controller.name().to_string(), summary);
    }
    let refs: Vec<&SimTrace> = traces.iter().collect();
    let figs = report::render_figures(&refs, &spec.name, Some(&thresholds), out_dir)
        .map_err(|e| e.to_string())?;
    files.extend(figs);
    if traces.len() > 1 {
        let (text, csv) = report::comparison_table(&summaries);
        let table_path = out_dir.join(format!("{}_comparison.csv", spec.name));
        std::fs::write(&table_path, csv).map_err(|e| e.to_string())?;
        files.push(table_path);
        print!("{text}");
    }
    Ok(files)
}

fn cmd_compare(
    scenario: &str,
    controllers: &str,
    config: Option<&Path>,
    out: Option<PathBuf>,
) -> ExitCode {
    let (cfg, spec, kinds) = match (|| -> Result<_, String> {
        let cfg = load_config(config)?;
        let spec = lookup_scenario(&cfg, scenario)?;
        let kinds: Vec<ControllerKind> = controllers
            .split(',')
            .map(|c| ControllerKind::parse(c.trim()))
            .collect::<Result<_, _>>()?;
        if kinds.len() < 2 {
            return Err("compare needs at least 2 controllers".into());
        }
        Ok((cfg, spec, kinds))
    })() {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let mut traces = Vec::new();
    for kind in kinds {
        match run_one(&cfg, &spec, kind) {
            Ok(t) => traces.push(t),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_SIM);
            }
        }
    }
    let out_dir = resolve_out_dir(&cfg, out);
    match write_outputs(&cfg, &spec, &traces, &out_dir) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn cmd_verify(config: Option<&Path>) -> ExitCode {
    let cfg = match load_config(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let results = verify::run_all(&cfg);
    let mut all_pass = true;
    for r in &results {
        let status = if r.pass { "PASS" } else { "FAIL" };
        println!("{status} {:<22} {}", r.name, r.detail);
        all_pass &= r.pass;
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY)
    }
}
