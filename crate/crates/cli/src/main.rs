//! `rigidmanip simulate | verify | rigidity`.
//!
//! Exit codes: 0 success, 1 output I/O failure, 2 invalid configuration or arguments,
//! 3 numeric failure during simulation, 4 a verification check failed.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rigidmanip::config::ScenarioConfig;
use rigidmanip::report::{summarize, write_csv};
use rigidmanip::rigidity::rigidity_report;
use rigidmanip::sim::run_scenario;
use rigidmanip::verify::{run_verification, Bound};

#[derive(Parser)]
#[command(name = "rigidmanip", version, about = "Rigid cooperative manipulation: simulation, verification and rigidity analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trajectory.csv and summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the configured step (s).
        #[arg(long)]
        dt: Option<f64>,
        /// Overrides the configured duration (s).
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Run the randomized identity battery.
    Verify {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        trials: usize,
        /// Agent counts: `3,4,5` or `3..5`.
        #[arg(long, value_parser = parse_agents)]
        agents: AgentList,
    },
    /// Rigidity of the agent framework at the initial object pose.
    Rigidity {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Debug)]
struct AgentList(Vec<usize>);

fn parse_agents(s: &str) -> Result<AgentList, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.parse().map_err(|_| format!("bad agent count `{a}`"))?;
            let b: usize = b.trim_start_matches('=').parse().map_err(|_| format!("bad agent count `{b}`"))?;
            if a > b {
                return Err(format!("empty range `{part}`"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| format!("bad agent count `{part}`"))?);
        }
    }
    if out.is_empty() {
        return Err("no agent counts given".into());
    }
    Ok(AgentList(out))
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl std::fmt::Display) -> Self {
        Failure { code, message: message.to_string() }
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::new(2, format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::new(2, format!("invalid config {}: {e}", path.display())))
}

fn simulate(config: &Path, out: &Path, dt: Option<f64>, duration: Option<f64>) -> Result<(), Failure> {
    let mut cfg = load(config)?;
    if let Some(dt) = dt {
        cfg.dt = dt;
    }
    if let Some(duration) = duration {
        cfg.duration = duration;
    }
    let scenario = cfg.build().map_err(|e| Failure::new(2, e))?;
    let log = run_scenario(&scenario).map_err(|e| Failure::new(3, e))?;

    let io = |e: std::io::Error| Failure::new(1, format!("cannot write to {}: {e}", out.display()));
    fs::create_dir_all(out).map_err(io)?;
    let mut csv = BufWriter::new(File::create(out.join("trajectory.csv")).map_err(io)?);
    write_csv(&log, &mut csv).map_err(io)?;
    csv.flush().map_err(io)?;
    let summary = summarize(&log, cfg.right_inverse);
    let mut json = serde_json::to_string_pretty(&summary).map_err(|e| Failure::new(1, e))?;
    json.push('\n');
    fs::write(out.join("summary.json"), json).map_err(io)?;

    let t = &summary.terminal;
    println!(
        "{} samples; terminal |e_p| {:.3e} m, e_O {:.3e}, |e_v| {:.3e}; max |h_int| {:.3e}",
        summary.samples, t.e_p_norm, t.e_o, t.e_v_norm, summary.max_h_int_norm
    );
    Ok(())
}

fn verify(seed: u64, trials: usize, agents: &[usize]) -> Result<(), Failure> {
    let report = run_verification(seed, trials, agents).map_err(|e| Failure::new(2, e))?;
    println!("seed {seed}, {} trials, agents {agents:?}", report.trials.len());
    for c in &report.checks {
        let bound = match c.bound {
            Bound::Below(b) => format!("< {b:.0e}"),
            Bound::Above(b) => format!("> {b}"),
        };
        println!("{:<28} {:>12.4e}  {bound:<8} {}", c.name, c.worst, if c.passed { "ok" } else { "FAIL" });
    }
    let d = &report.degenerate;
    println!(
        "collinear N={}: rank {} / {}, dim null(G) {}, |G R^T| / |R| {:.1e}, degeneracy detected: {}, strict containment: {}",
        d.agents,
        d.rank,
        6 * d.agents - 6,
        d.null_g_dim,
        d.containment_residual,
        d.detected,
        d.strict_containment()
    );
    match report.first_failure() {
        None => Ok(()),
        Some(name) => Err(Failure::new(4, format!("check failed: {name}"))),
    }
}

fn rigidity(config: &Path) -> Result<(), Failure> {
    let fw = load(config)?.agent_framework().map_err(|e| Failure::new(2, e))?;
    let r = rigidity_report(&fw).map_err(|e| Failure::new(2, e))?;
    println!("N = {}", r.nodes);
    println!("trivial motions: dim {}, dim null(R) {}", r.trivial_dim, r.null_dim);
    if r.degenerate {
        println!("rank {} / {}, degenerate", r.rank, r.rigid_rank);
    } else {
        println!("rank {} / {}, {}", r.rank, r.rigid_rank, if r.rigid { "rigid" } else { "not rigid" });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out, dt, duration } => simulate(&config, &out, dt, duration),
        Command::Verify { seed, trials, agents } => verify(seed, trials, &agents.0),
        Command::Rigidity { config } => rigidity(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
