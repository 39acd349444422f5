//! `virlab` scenario runner: one subcommand per audit, TOML in, JSON and CSV out.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{CommandFactory, Parser, Subcommand};
use serde_json::{json, Value};
use virlab_core::scenario::Scenario;
use virlab_core::virial_audit::VERSION;
use virlab_core::{par, LabError};

mod commands;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_AUDIT_FAILED: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_GUARD: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "virlab", version, about = "Virial and inequality audits on a 3-D lattice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root of the output tree.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Leave wall-clock timings out of the report so reruns are byte-identical.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Worker threads, overriding the scenario's `threads`.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Run on a single grid with this many points per axis.
    #[arg(long, global = true)]
    pub grid_override: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Propagate the datum and write the observables.
    Simulate,
    /// Second difference, commutator and expanded identity for the Schrödinger flow.
    AuditVirial,
    /// Wave-branch identity and literal-sign blow-up; eigenmode data adds the integration-by-parts residuals.
    AuditWave,
    /// Magnetic Hardy inequality on random band-limited fields.
    CheckHardy,
    /// Ellipticity, derivative decay and potential smallness.
    CheckHypotheses,
    /// Morrey and Sobolev norms of the datum.
    Norms,
    /// Smallness certificate of the smoothing estimate.
    Certificate,
    /// Smoothing seminorm over the configured horizons.
    Smoothing,
    /// Refinement study of the end-time observables.
    Converge,
}

impl Command {
    pub fn dir_name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::AuditVirial => "audit-virial",
            Command::AuditWave => "audit-wave",
            Command::CheckHardy => "check-hardy",
            Command::CheckHypotheses => "check-hypotheses",
            Command::Norms => "norms",
            Command::Certificate => "certificate",
            Command::Smoothing => "smoothing",
            Command::Converge => "converge",
        }
    }
}

/// What a subcommand hands back for the report.
pub struct Outcome {
    pub pass: bool,
    pub guard_violation: Option<String>,
    pub result: Value,
    /// `(file name, contents)` written next to `report.json`.
    pub csv: Vec<(String, String)>,
}

fn usage() -> String {
    Cli::command().render_help().to_string()
}

/// Parse, run and report; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let scenario = match load(&cli) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("{msg}\n\n{}", usage());
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = par::set_threads(scenario.threads) {
        eprintln!("thread pool: {e}");
    }
    let dir = cli.out.join(&scenario.name).join(cli.command.dir_name());
    let start = Instant::now();
    let outcome = commands::dispatch(cli.command, &scenario);
    let elapsed = start.elapsed().as_secs_f64();
    let (code, outcome) = match outcome {
        Ok(o) if o.guard_violation.is_some() => (EXIT_GUARD, o),
        Ok(o) if o.pass => (EXIT_PASS, o),
        Ok(o) => (EXIT_AUDIT_FAILED, o),
        Err(e) => {
            let code = match e {
                LabError::Config(_) => EXIT_CONFIG,
                LabError::Guard(_) => EXIT_GUARD,
                _ => EXIT_RUNTIME,
            };
            eprintln!("{}: {e}", cli.command.dir_name());
            let o = Outcome {
                pass: false,
                guard_violation: matches!(e, LabError::Guard(_)).then(|| e.to_string()),
                result: json!({ "error": e.to_string() }),
                csv: Vec::new(),
            };
            (code, o)
        }
    };
    let mut report = json!({
        "subcommand": cli.command.dir_name(),
        "version": VERSION,
        "scenario": scenario,
        "pass": outcome.pass,
        "guard_violation": outcome.guard_violation,
        "exit_code": code,
        "result": outcome.result,
    });
    if !cli.deterministic {
        report["elapsed_seconds"] = json!(elapsed);
    }
    if let Err(e) = write_artifacts(&dir, &report, &outcome.csv) {
        eprintln!("writing {}: {e}", dir.display());
        return EXIT_RUNTIME;
    }
    println!(
        "{} {}: {} ({})",
        scenario.name,
        cli.command.dir_name(),
        match code {
            EXIT_PASS => "pass",
            EXIT_GUARD => "guard violated",
            EXIT_AUDIT_FAILED => "fail",
            _ => "error",
        },
        dir.join("report.json").display()
    );
    code
}

fn load(cli: &Cli) -> Result<Scenario, String> {
    let path = cli.config.as_ref().ok_or("no scenario given: pass --config PATH")?;
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut s = Scenario::from_toml_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(n) = cli.grid_override {
        s = s.with_points(n);
        Scenario::from_toml_str(&s.to_toml_string()).map_err(|e| format!("--grid-override: {e}"))?;
    }
    if let Some(k) = cli.threads {
        s.threads = k;
    }
    Ok(s)
}

fn write_artifacts(dir: &Path, report: &Value, csv: &[(String, String)]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    text.push('\n');
    fs::write(dir.join("report.json"), text)?;
    for (name, body) in csv {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}
