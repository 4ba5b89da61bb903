//! Command-line front end: scenario files in, trajectories and reports out.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration, 3 solver
//! did not converge (the report is still written), 4 numerical singularity or
//! breakdown. With several scenarios the largest code is returned.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::{format_dual_field, format_trajectory};
use crate::linalg::Inertia;
use crate::periodic::{recover_periodic_orbit, solve_periodic, verify_periodic};
use crate::scenario::{scenario_presets, Mode, Scenario};
use crate::solver::{recover_primal, solve_dual, verify, VerificationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_SINGULAR: i32 = 4;

pub const REPORT_SCHEMA: &str = "dualchain.run-report.v1";
pub const REPORT_FILE: &str = "report.json";

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        Error::Dimension { .. }
        | Error::InvalidParameter(_)
        | Error::OutsideTable { .. }
        | Error::NotGradient(_)
        | Error::FinalCondition
        | Error::Config(_) => EXIT_CONFIG,
        Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
        Error::BlowUp { .. }
        | Error::StepFailed { .. }
        | Error::SingularStiffness { .. }
        | Error::SingularSystem { .. }
        | Error::Resonance { .. } => EXIT_SINGULAR,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub residual_scale: f64,
    pub tolerance: f64,
    pub inertia: Inertia,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// `trajectory`, `dual`, `orbit` or `oracle`.
    pub role: String,
    /// Relative to the report's directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub scenario: String,
    pub mode: Mode,
    pub config_hash: String,
    pub wall_time_s: f64,
    pub exit_code: i32,
    pub error: Option<String>,
    pub convergence: Option<Convergence>,
    pub verification: Option<VerificationReport>,
    pub files: Vec<FileEntry>,
}

struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<FileEntry>,
}

impl Outputs<'_> {
    fn write(&mut self, role: &str, name: &str, text: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), text)?;
        self.files.push(FileEntry {
            role: role.into(),
            path: name.into(),
            bytes: text.len() as u64,
            sha256: hex::encode(Sha256::digest(text.as_bytes())),
        });
        Ok(())
    }
}

#[derive(Default)]
struct Outcome {
    convergence: Option<Convergence>,
    verification: Option<VerificationReport>,
}

fn execute(scenario: &Scenario, mode: Mode, out: &mut Outputs<'_>, outcome: &mut Outcome) -> Result<()> {
    match mode {
        Mode::Simulate => {
            let traj = scenario.primal_solve()?;
            out.write("trajectory", "trajectory.csv", &format_trajectory(&traj))?;
        }
        Mode::DualSolve | Mode::Verify => {
            let spec = scenario.problem()?;
            let sol = solve_dual(&spec, &scenario.options)?;
            outcome.convergence = Some(Convergence {
                converged: sol.converged,
                iterations: sol.iterations,
                residual_history: sol.residual_history.clone(),
                residual_scale: sol.residual_scale,
                tolerance: sol.tolerance,
                inertia: sol.inertia,
            });
            out.write("dual", "dual.csv", &format_dual_field(&sol.field))?;
            let oracle = if mode == Mode::Verify {
                let oracle = scenario.primal_solve()?;
                out.write("oracle", "oracle.csv", &format_trajectory(&oracle))?;
                Some(oracle)
            } else {
                None
            };
            outcome.verification = Some(verify(&sol, &spec, oracle.as_ref())?);
            let traj = recover_primal(&sol, &spec)?;
            out.write("trajectory", "trajectory.csv", &format_trajectory(&traj))?;
            if !sol.converged {
                return Err(Error::NotConverged {
                    iterations: sol.iterations,
                    residual: sol.final_residual(),
                });
            }
        }
        Mode::Periodic => {
            let spec = scenario.periodic()?;
            let sol = solve_periodic(&spec, &scenario.options)?;
            outcome.convergence = Some(Convergence {
                converged: sol.converged,
                iterations: sol.iterations,
                residual_history: sol.residual_history.clone(),
                residual_scale: sol.residual_scale,
                tolerance: sol.tolerance,
                inertia: sol.inertia,
            });
            out.write("dual", "dual.csv", &format_dual_field(&sol.field))?;
            outcome.verification = Some(verify_periodic(&sol, &spec, None)?);
            let orbit = recover_periodic_orbit(&sol, &spec)?;
            out.write("orbit", "orbit.csv", &format_trajectory(&orbit))?;
            if !sol.converged {
                return Err(Error::NotConverged {
                    iterations: sol.iterations,
                    residual: sol.final_residual(),
                });
            }
        }
    }
    Ok(())
}

/// Runs one scenario, writing its files and `report.json` into `dir`.
pub fn run_scenario(scenario: &Scenario, mode: Mode, dir: &Path) -> Result<RunReport> {
    let start = Instant::now();
    std::fs::create_dir_all(dir)?;
    let mut out = Outputs {
        dir,
        files: Vec::new(),
    };
    let mut outcome = Outcome::default();
    let result = execute(scenario, mode, &mut out, &mut outcome);
    let report = RunReport {
        schema: REPORT_SCHEMA.into(),
        scenario: scenario.name.clone(),
        mode,
        config_hash: scenario.config_hash(mode),
        wall_time_s: start.elapsed().as_secs_f64(),
        exit_code: result.as_ref().map_or_else(exit_code, |_| EXIT_OK),
        error: result.err().map(|e| e.to_string()),
        convergence: outcome.convergence,
        verification: outcome.verification,
        files: out.files,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(dir.join(REPORT_FILE), json + "\n")?;
    Ok(report)
}

#[derive(Debug, Parser)]
#[command(name = "dualchain", version, about = "Dual variational solver for damped, forced particle chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Direct integration of the chain.
    Simulate(RunArgs),
    /// Dual extremal, recovered trajectory and report.
    DualSolve(RunArgs),
    /// Periodic dual extremal over the grid's time span.
    Periodic(RunArgs),
    /// Dual solve checked against a fresh direct integration.
    Verify(RunArgs),
    /// Uses the `mode` key of each scenario.
    Run(RunArgs),
    /// Lists bundled scenarios, or prints one.
    Presets { name: Option<String> },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario file; may be repeated.
    #[arg(long = "config", value_name = "PATH")]
    configs: Vec<PathBuf>,
    /// Bundled scenario by name; may be repeated.
    #[arg(long = "preset", value_name = "NAME")]
    presets: Vec<String>,
    /// Override applied to every scenario, e.g. `grid.intervals=400`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory; one subdirectory per scenario when several are given.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of scenarios run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

struct Job {
    scenario: Scenario,
    mode: Mode,
    dir: PathBuf,
}

fn plan(args: &RunArgs, forced: Option<Mode>) -> std::result::Result<Vec<Job>, (String, Error)> {
    let mut loaded = Vec::new();
    for path in &args.configs {
        loaded.push(Scenario::load(path, &args.set).map_err(|e| (path.display().to_string(), e))?);
    }
    for name in &args.presets {
        loaded.push(Scenario::from_preset(name, &args.set).map_err(|e| (name.clone(), e))?);
    }
    if loaded.is_empty() {
        return Err(("arguments".into(), Error::Config("no --config or --preset given".into())));
    }
    let several = loaded.len() > 1;
    let mut used: Vec<String> = Vec::new();
    let mut jobs = Vec::new();
    for scenario in loaded {
        let mode = forced.or(scenario.config.mode).ok_or_else(|| {
            (
                scenario.name.clone(),
                Error::Config("no mode: set `mode` in the scenario or use a mode subcommand".into()),
            )
        })?;
        let root = args
            .out
            .clone()
            .or_else(|| scenario.config.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        let dir = if several {
            let mut name = scenario.name.clone();
            let mut k = 2;
            while used.contains(&name) {
                name = format!("{}_{k}", scenario.name);
                k += 1;
            }
            used.push(name.clone());
            root.join(name)
        } else {
            root
        };
        jobs.push(Job { scenario, mode, dir });
    }
    Ok(jobs)
}

fn run_jobs(jobs: &[Job], workers: usize) -> Vec<Result<RunReport>> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunReport>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, jobs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(job) = jobs.get(i) else { break };
                let r = run_scenario(&job.scenario, job.mode, &job.dir);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results.into_inner().unwrap().into_iter().map(|r| r.unwrap()).collect()
}

fn run_command(args: &RunArgs, forced: Option<Mode>) -> i32 {
    if args.jobs == 0 {
        eprintln!("error: --jobs must be at least 1");
        return EXIT_CONFIG;
    }
    let jobs = match plan(args, forced) {
        Ok(jobs) => jobs,
        Err((what, e)) => {
            eprintln!("error: {what}: {e}");
            return exit_code(&e);
        }
    };
    let mut code = EXIT_OK;
    for (job, result) in jobs.iter().zip(run_jobs(&jobs, args.jobs)) {
        let report_path = job.dir.join(REPORT_FILE);
        match result {
            Ok(report) => {
                match &report.error {
                    Some(e) => eprintln!("{}: {} failed (exit {}): {e}", report.scenario, job.mode.name(), report.exit_code),
                    None => println!("{}: {} ok, report {}", report.scenario, job.mode.name(), report_path.display()),
                }
                code = code.max(report.exit_code);
            }
            Err(e) => {
                eprintln!("{}: {e}", job.scenario.name);
                code = code.max(exit_code(&e));
            }
        }
    }
    code
}

fn presets_command(name: Option<&str>) -> i32 {
    let presets = scenario_presets();
    match name {
        None => {
            for p in &presets {
                println!("{}", p.name);
            }
            EXIT_OK
        }
        Some(name) => match presets.iter().find(|p| p.name == name) {
            Some(p) => {
                print!("{}", p.text);
                EXIT_OK
            }
            None => {
                eprintln!("error: unknown preset {name:?}");
                EXIT_CONFIG
            }
        },
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match &cli.command {
        Command::Simulate(a) => run_command(a, Some(Mode::Simulate)),
        Command::DualSolve(a) => run_command(a, Some(Mode::DualSolve)),
        Command::Periodic(a) => run_command(a, Some(Mode::Periodic)),
        Command::Verify(a) => run_command(a, Some(Mode::Verify)),
        Command::Run(a) => run_command(a, None),
        Command::Presets { name } => presets_command(name.as_deref()),
    }
}
