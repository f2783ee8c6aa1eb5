use std::io::{BufReader, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tracing::{error, info};
use tracing_subscriber::EnvFilter;

use dcage_ccc::logfile::LOG_DIR_ENV;
use dcage_ccc::replay::{replay, summaries};
use dcage_ccc::server::{self, ServeConfig, DEFAULT_HTTP_PORT, DEFAULT_TCP_PORT};
use dcage_ccc::{resolve_log_dir, CccConfig};
use dcage_cli::live::{run_live, LiveOptions};
use dcage_cli::{run_scenario, CliError, OperatorScript, RunOptions, RunOutput, EXIT_CHECK_FAILED, EXIT_PASS};
use dcage_protocol::log::read_log;
use dcage_protocol::{Body, EventLogEntry};
use dcage_sim::{resolve_scenario, Scenario};

/// Dependability Cage: onboard monitor, simulated vehicle and control centre.
///
/// Exit codes: 0 run passed, 1 a check or expected Ack failed, 2 bad
/// configuration or input.
#[derive(Parser, Debug)]
#[command(name = "dcage", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Simulated vehicle with its cage.
    #[command(subcommand)]
    Sim(SimCmd),
    /// Command control centre.
    #[command(subcommand)]
    Ccc(CccCmd),
    /// Headless scenario runs with a scripted operator.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
    /// Re-emit a recorded event log at scaled timing.
    Replay(ReplayArgs),
}

#[derive(Subcommand, Debug)]
enum SimCmd {
    /// Run the vehicle. Without --ccc-addr it runs headless against an
    /// in-process control centre and no operator.
    Run(SimRunArgs),
}

#[derive(Args, Debug)]
struct SimRunArgs {
    /// Scenario file, or the name of a bundled scenario (hamburg_demo,
    /// hamburg_blocked, empty_lot).
    #[arg(long)]
    scenario: String,
    /// Pace the simulation to wall-clock time. Always on with --ccc-addr.
    #[arg(long)]
    realtime: bool,
    /// Overrides the scenario's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the event log (NDJSON) to this file.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Overrides the scenario's vehicle id.
    #[arg(long)]
    vehicle_id: Option<String>,
    /// Control centre TCP address (host:port) for a live run.
    #[arg(long)]
    ccc_addr: Option<String>,
    /// Cage tick period in ms, 1 to 100.
    #[arg(long)]
    tick_ms: Option<u64>,
    /// Write the run report (JSON) to this file as well as stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum CccCmd {
    /// Serve vehicles over TCP and operators over HTTP until interrupted.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
struct ServeArgs {
    /// Vehicle TCP port.
    #[arg(long, default_value_t = DEFAULT_TCP_PORT)]
    port: u16,
    /// Operator HTTP and WebSocket port.
    #[arg(long, default_value_t = DEFAULT_HTTP_PORT)]
    http_port: u16,
    /// Directory for event logs; falls back to $CCC_LOG_DIR, then ./logs.
    #[arg(long)]
    log_dir: Option<PathBuf>,
    /// Address to bind both listeners to.
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// A vehicle silent for longer than this many ms is listed as lost.
    #[arg(long, default_value_t = 3000)]
    connection_timeout_ms: u64,
    /// Commands without an Ack after this many ms resolve as timed out.
    #[arg(long, default_value_t = 2000)]
    ack_timeout_ms: u64,
}

#[derive(Subcommand, Debug)]
enum ScenarioCmd {
    /// Run a scenario with an operator script and check the outcome.
    Run(ScenarioRunArgs),
}

#[derive(Args, Debug)]
struct ScenarioRunArgs {
    /// Scenario file or bundled scenario name.
    #[arg(long)]
    scenario: String,
    /// Operator script (JSON). Omit for no operator.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Write the event log (NDJSON) to this file.
    #[arg(long)]
    out_log: Option<PathBuf>,
    /// Write the run report (JSON) to this file as well as stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Overrides the scenario's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Pace the simulation to wall-clock time.
    #[arg(long)]
    realtime: bool,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// Event log (NDJSON) written by the control centre.
    log: PathBuf,
    /// Playback speed relative to the recording; 2 plays twice as fast.
    #[arg(long, default_value_t = 1.0)]
    speed_factor: f64,
    /// Serve the replay to the operator console on this port instead of
    /// printing summaries to stdout.
    #[arg(long)]
    http_port: Option<u16>,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let code = match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn dispatch(cmd: Cmd) -> Result<i32, CliError> {
    match cmd {
        Cmd::Sim(SimCmd::Run(a)) => sim_run(a),
        Cmd::Ccc(CccCmd::Serve(a)) => ccc_serve(a),
        Cmd::Scenario(ScenarioCmd::Run(a)) => scenario_run(a),
        Cmd::Replay(a) => replay_cmd(a),
    }
}

fn load(spec: &str) -> Result<Scenario, CliError> {
    Ok(resolve_scenario(spec)?)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path.display().to_string(), e))
}

fn finish(out: &RunOutput, log: Option<&Path>, report: Option<&Path>) -> Result<i32, CliError> {
    if let Some(p) = log {
        write_file(p, &out.log_text())?;
    }
    let json = out.report.to_json();
    if let Some(p) = report {
        write_file(p, &json)?;
    }
    println!("{json}");
    for c in out.report.failed_checks() {
        eprintln!("FAILED {}: {}", c.name, c.detail);
    }
    Ok(if out.report.passed { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

fn sim_run(a: SimRunArgs) -> Result<i32, CliError> {
    let mut s = load(&a.scenario)?;
    if let Some(id) = a.vehicle_id {
        s.vehicle_id = id;
    }
    if let Some(t) = a.tick_ms {
        s.dc.tick_ms = t;
    }
    if let Some(seed) = a.seed {
        s.sim.seed = seed;
    }
    s.validate().map_err(|(k, r)| CliError::Config(format!("{k}: {r}")))?;
    match a.ccc_addr {
        Some(addr) => {
            let summary = run_live(&s, &LiveOptions { ccc_addr: addr, record: a.record })?;
            info!(?summary, "vehicle finished");
            Ok(EXIT_PASS)
        }
        None => {
            let opts = RunOptions { realtime: a.realtime, ..RunOptions::default() };
            let out = run_scenario(&s, &OperatorScript::default(), &opts)?;
            finish(&out, a.record.as_deref(), a.report.as_deref())
        }
    }
}

fn scenario_run(a: ScenarioRunArgs) -> Result<i32, CliError> {
    let s = load(&a.scenario)?;
    let script = match &a.script {
        Some(p) => OperatorScript::load(p)?,
        None => OperatorScript::default(),
    };
    let opts = RunOptions { seed: a.seed, realtime: a.realtime, ..RunOptions::default() };
    let out = run_scenario(&s, &script, &opts)?;
    finish(&out, a.out_log.as_deref(), a.report.as_deref())
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::io("tokio runtime", e))
}

fn ccc_serve(a: ServeArgs) -> Result<i32, CliError> {
    let dir = resolve_log_dir(a.log_dir.as_deref());
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    let log_path = dir.join(format!("ccc-{}.ndjson", server::wall_ms()));
    let cfg = ServeConfig {
        tcp_addr: SocketAddr::new(a.host, a.port),
        http_addr: SocketAddr::new(a.host, a.http_port),
        log_path,
        ccc: CccConfig { connection_timeout_ms: a.connection_timeout_ms, ack_timeout_ms: a.ack_timeout_ms },
    };
    info!(env = LOG_DIR_ENV, dir = %dir.display(), "log directory");
    runtime()?.block_on(async {
        let running = server::start(cfg).await.map_err(|e| CliError::io("ccc listen", e))?;
        eprintln!(
            "ccc serving vehicles on {} and operators on http://{} (log {})",
            running.tcp_addr,
            running.http_addr,
            running.log_path.display()
        );
        tokio::signal::ctrl_c().await.map_err(|e| CliError::io("signal", e))?;
        info!("shutting down");
        running.stop().await;
        Ok(EXIT_PASS)
    })
}

fn replay_cmd(a: ReplayArgs) -> Result<i32, CliError> {
    dcage_ccc::replay::check_speed_factor(a.speed_factor)?;
    let open = || std::fs::File::open(&a.log).map_err(|e| CliError::io(a.log.display().to_string(), e));
    match a.http_port {
        Some(port) => {
            let entries: Vec<EventLogEntry> = read_log(BufReader::new(open()?))?;
            let n = summaries(&entries).len();
            info!(entries = entries.len(), summaries = n, "replaying");
            let addr = SocketAddr::from(([127, 0, 0, 1], port));
            runtime()?.block_on(async {
                tokio::select! {
                    r = server::serve_replay(entries, a.speed_factor, addr, CccConfig::default()) => {
                        r.map_err(|e| CliError::io("replay server", e))?;
                    }
                    _ = tokio::signal::ctrl_c() => {}
                }
                Ok(EXIT_PASS)
            })
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            let mut write_err = None;
            let n = replay(BufReader::new(open()?), a.speed_factor, std::thread::sleep, |e| {
                if let Body::TelemetrySnapshot(t) = &e.message.body {
                    let line = serde_json::to_string(&t.summary).expect("summaries serialize");
                    if let Err(err) = writeln!(lock, "{line}") {
                        write_err.get_or_insert(err);
                    }
                }
            })?;
            if let Some(e) = write_err {
                return Err(CliError::io("stdout", e));
            }
            info!(entries = n, "replay finished");
            Ok(EXIT_PASS)
        }
    }
}
