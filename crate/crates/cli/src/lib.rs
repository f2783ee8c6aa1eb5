//! Wiring for headless scenario runs, live vehicle and control-centre
//! processes, and log replay.

pub mod headless;
pub mod live;
pub mod report;
pub mod script;

pub use headless::{dc_config, run_scenario, RunOptions, RunOutput};
pub use report::Report;
pub use script::{ExpectedAck, OperatorScript, ScriptStep, Trigger};

/// Exit code of a run whose checks passed.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] dcage_sim::ScenarioError),
    #[error("operator script: {0}")]
    Script(String),
    #[error(transparent)]
    Dc(#[from] dcage_dc::DcError),
    #[error(transparent)]
    Sim(#[from] dcage_sim::SimError),
    #[error("{0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("event log: {0}")]
    Log(#[from] dcage_protocol::log::LogReadError),
    #[error(transparent)]
    Replay(#[from] dcage_ccc::replay::ReplayError),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            // A replay that stops on a corrupt entry is a failed check of the log.
            CliError::Replay(dcage_ccc::replay::ReplayError::Corrupt { .. })
            | CliError::Replay(dcage_ccc::replay::ReplayError::OutOfOrder { .. })
            | CliError::Log(dcage_protocol::log::LogReadError::Corrupt { .. })
            | CliError::Log(dcage_protocol::log::LogReadError::OutOfOrder { .. }) => EXIT_CHECK_FAILED,
            _ => EXIT_CONFIG,
        }
    }
}
