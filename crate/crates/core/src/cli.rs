//! Command-line front end. `run` returns the process exit code.

use crate::explorer::ExplorerKind;
use crate::session::{replay_summary, run_session, summary_json, SessionConfig, SessionError};
use crate::sim::{sim_openapi_yaml, SimKind, SimServer};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_UNREACHABLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "restpilot", version, about = "Black-box REST API testing with reinforcement learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a testing session against a simulation or a real service.
    Test(TestArgs),
    /// Serve or describe a built-in simulation.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Recompute a session summary from its interaction log.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// JSON or YAML file with session settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in simulation: ecomm, chain[:N] or flaky.
    #[arg(long)]
    pub sim: Option<SimKind>,
    /// OpenAPI document of the service under test.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub base_url: Option<String>,
    /// Maximum number of requests, mutants included.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    pub time_budget: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum)]
    pub explorer: Option<ExplorerArg>,
    #[arg(long)]
    pub mutant_cap: Option<usize>,
    /// Extra request header as `Name: value`; `${VAR}` expands from the environment.
    #[arg(long = "header", value_name = "NAME: VALUE")]
    pub headers: Vec<String>,
    /// JSON file mapping parameter names to suggested values.
    #[arg(long)]
    pub llm_dictionary: Option<PathBuf>,
    /// Completion endpoint queried once for parameter values.
    #[arg(long)]
    pub llm_endpoint: Option<String>,
    /// Per-request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Keep going until the budget is spent even after full coverage.
    #[arg(long)]
    pub exhaust_budget: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ExplorerArg {
    Ppo,
    Uniform,
}

impl From<ExplorerArg> for ExplorerKind {
    fn from(a: ExplorerArg) -> Self {
        match a {
            ExplorerArg::Ppo => ExplorerKind::Ppo,
            ExplorerArg::Uniform => ExplorerKind::Uniform,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum SimCommand {
    /// Serve a simulation over HTTP until interrupted.
    Serve {
        #[arg(long, default_value = "ecomm")]
        sim: SimKind,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print a simulation's OpenAPI document.
    Spec {
        #[arg(long, default_value = "ecomm")]
        sim: SimKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl TestArgs {
    pub fn to_config(&self) -> Result<SessionConfig, SessionError> {
        let mut c = match &self.config {
            Some(path) => SessionConfig::load(path)?,
            None => SessionConfig::default(),
        };
        if let Some(s) = self.sim {
            c.sim = Some(s);
        }
        if let Some(s) = &self.spec {
            c.spec = Some(s.clone());
        }
        if let Some(u) = &self.base_url {
            c.base_url = Some(u.clone());
        }
        if let Some(b) = self.budget {
            c.budget = b;
        }
        if let Some(t) = self.time_budget {
            c.time_budget_s = Some(t);
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(e) = self.epsilon {
            c.epsilon = e;
        }
        if let Some(k) = self.explorer {
            c.explorer = k.into();
        }
        if let Some(m) = self.mutant_cap {
            c.mutant_cap = m;
        }
        for h in &self.headers {
            let (name, value) = h
                .split_once(':')
                .ok_or_else(|| SessionError::ConfigInvalid(format!("header {h:?} is not `Name: value`")))?;
            c.auth_headers.insert(name.trim().to_string(), value.trim().to_string());
        }
        if let Some(d) = &self.llm_dictionary {
            c.llm_dictionary = Some(d.clone());
        }
        if let Some(u) = &self.llm_endpoint {
            c.llm_endpoint = Some(u.clone());
        }
        if let Some(t) = self.timeout {
            c.timeout_s = t;
        }
        if self.exhaust_budget {
            c.stop_when_covered = false;
        }
        if let Some(o) = &self.out {
            c.out_dir = Some(o.clone());
        }
        Ok(c)
    }
}

fn exit_code(e: &SessionError) -> i32 {
    match e {
        SessionError::TargetUnreachable(_) => EXIT_UNREACHABLE,
        _ => EXIT_CONFIG,
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), SessionError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| SessionError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_test(args: &TestArgs) -> Result<(), SessionError> {
    let config = args.to_config()?;
    let report = run_session(&config)?;
    log::info!(
        "{} requests, {}/{} operations covered, {} unique faults, stopped on {:?}",
        report.summary.requests,
        report.summary.covered_operations,
        report.summary.operations,
        report.summary.unique_faults,
        report.stop_reason
    );
    print!("{}", summary_json(&report.summary));
    Ok(())
}

fn run_sim(cmd: &SimCommand) -> Result<(), SessionError> {
    match cmd {
        SimCommand::Serve { sim, port, host, seed } => {
            let server = SimServer::start(sim.build(*seed), &format!("{host}:{port}")).map_err(SessionError::ConfigInvalid)?;
            eprintln!("serving {sim} at {}", server.base_url());
            server.join();
            Ok(())
        }
        SimCommand::Spec { sim, seed, out } => emit(&sim_openapi_yaml(sim.build(*seed).as_ref()), out.as_ref()),
    }
}

fn run_report(args: &ReportArgs) -> Result<(), SessionError> {
    let summary = replay_summary(&args.log, &args.spec)?;
    emit(&summary_json(&summary), args.out.as_ref())
}

/// Parses `argv`, runs the command and maps failures to exit codes.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Test(a) => {
            if a.sim.is_none() && a.spec.is_none() && a.config.is_none() {
                use clap::CommandFactory;
                eprintln!("error: no target given; pass --sim or --spec\n");
                let mut cmd = Cli::command();
                let help = cmd.find_subcommand_mut("test").expect("test subcommand").render_help();
                eprint!("{help}");
                return EXIT_CONFIG;
            }
            run_test(a)
        }
        Command::Sim(c) => run_sim(c),
        Command::Report(a) => run_report(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from([
            "restpilot", "test", "--sim", "chain:3", "--budget", "77", "--seed", "5", "--explorer", "uniform", "--header",
            "X-Key: abc",
        ])
        .unwrap();
        let Command::Test(args) = cli.command else { panic!() };
        let c = args.to_config().unwrap();
        assert_eq!(c.sim, Some(SimKind::Chain(3)));
        assert_eq!((c.budget, c.seed), (77, 5));
        assert_eq!(c.explorer, ExplorerKind::Uniform);
        assert_eq!(c.auth_headers.get("X-Key").map(String::as_str), Some("abc"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["restpilot", "test"]), EXIT_CONFIG);
        assert_eq!(run(["restpilot", "test", "--sim", "nope"]), EXIT_CONFIG);
        assert_eq!(run(["restpilot", "test", "--sim", "ecomm", "--budget", "0"]), EXIT_CONFIG);
        assert_eq!(
            run(["restpilot", "test", "--spec", "/nonexistent/spec.yaml"]),
            EXIT_CONFIG
        );
    }
}
