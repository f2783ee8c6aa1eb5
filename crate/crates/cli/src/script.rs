//! Scripted operator: timed or event-triggered commands with expected Acks.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use dcage_protocol::{AckOutcome, Command, DcEvent};

use crate::CliError;

const EVENT_KINDS: [&str; 6] = [
    "mode_changed",
    "cage_state_changed",
    "mission_state_changed",
    "door_state_changed",
    "sensor_data_changed",
    "cage_mode_changed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventPattern {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
}

impl EventPattern {
    pub fn matches(&self, event: &DcEvent) -> bool {
        let v = serde_json::to_value(event).unwrap_or(Value::Null);
        let field = |name: &str, want: &Option<String>| want.as_ref().is_none_or(|w| v[name].as_str() == Some(w));
        v["event"].as_str() == Some(self.kind.as_str()) && field("from", &self.from) && field("to", &self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Trigger {
    /// First matching event seen by the control centre after the step is armed.
    OnEvent(EventPattern),
    /// Simulated time, ms.
    AtTimeMs(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedAck {
    Accepted,
    /// `null` accepts any rejection reason.
    Rejected(Option<String>),
    Timeout,
    Any,
}

impl ExpectedAck {
    pub fn admits(&self, outcome: &AckOutcome) -> bool {
        match (self, outcome) {
            (ExpectedAck::Any, _) => true,
            (ExpectedAck::Accepted, AckOutcome::Accepted) => true,
            (ExpectedAck::Timeout, AckOutcome::Timeout) => true,
            (ExpectedAck::Rejected(None), AckOutcome::Rejected { .. }) => true,
            (ExpectedAck::Rejected(Some(want)), AckOutcome::Rejected { reason }) => want == reason,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptStep {
    pub trigger: Trigger,
    /// Wait after the trigger before sending, ms.
    #[serde(default)]
    pub delay_ms: u64,
    pub action: Command,
    /// Defaults to the scenario's vehicle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle_id: Option<String>,
    pub expected_ack: ExpectedAck,
}

/// Steps run in order: each is armed once the previous one has been sent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorScript {
    #[serde(default)]
    pub steps: Vec<ScriptStep>,
}

impl OperatorScript {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Script(format!("line {} column {}: {e}", e.line(), e.column())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Script(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Script(format!("{}: {e}", path.display())))
    }

    /// Checks trigger ordering, event names and vehicle references.
    pub fn validate(&self, vehicle_id: &str) -> Result<(), CliError> {
        let mut last_time = 0;
        for (i, s) in self.steps.iter().enumerate() {
            let fail = |reason: String| Err(CliError::Script(format!("steps[{i}]: {reason}")));
            match &s.trigger {
                Trigger::AtTimeMs(t) => {
                    if *t < last_time {
                        return fail(format!("at_time_ms {t} precedes the previous timed step ({last_time})"));
                    }
                    last_time = *t;
                }
                Trigger::OnEvent(p) => {
                    if !EVENT_KINDS.contains(&p.kind.as_str()) {
                        return fail(format!("unknown event type {:?}, expected one of {EVENT_KINDS:?}", p.kind));
                    }
                }
            }
            if let Some(v) = &s.vehicle_id {
                if v != vehicle_id {
                    return fail(format!("vehicle {v:?} is not in the scenario (expected {vehicle_id:?})"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepResult {
    pub step: usize,
    pub command: String,
    pub fired_at_ms: Option<u64>,
    pub ref_seq: Option<u64>,
    pub outcome: Option<AckOutcome>,
    pub expected: ExpectedAck,
    pub pass: bool,
}

/// Drives a script against the control centre's view of one run.
#[derive(Debug)]
pub struct ScriptRunner {
    steps: Vec<ScriptStep>,
    next: usize,
    /// When the armed step's trigger fired; it is sent after its delay.
    due_at: Option<u64>,
    pub results: Vec<StepResult>,
}

impl ScriptRunner {
    pub fn new(script: &OperatorScript) -> Self {
        let results = script
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| StepResult {
                step: i,
                command: s.action.name().to_string(),
                fired_at_ms: None,
                ref_seq: None,
                outcome: None,
                expected: s.expected_ack.clone(),
                pass: false,
            })
            .collect();
        Self { steps: script.steps.clone(), next: 0, due_at: None, results }
    }

    /// Events the control centre logged at `now`.
    pub fn observe(&mut self, events: &[DcEvent], now: u64) {
        if self.due_at.is_some() {
            return;
        }
        if let Some(ScriptStep { trigger: Trigger::OnEvent(p), delay_ms, .. }) = self.steps.get(self.next) {
            if events.iter().any(|e| p.matches(e)) {
                self.due_at = Some(now + delay_ms);
            }
        }
    }

    /// Steps to send at `now`, with their index.
    pub fn due(&mut self, now: u64) -> Vec<(usize, ScriptStep)> {
        let mut out = Vec::new();
        while let Some(step) = self.steps.get(self.next) {
            if self.due_at.is_none() {
                if let Trigger::AtTimeMs(t) = step.trigger {
                    self.due_at = Some(t + step.delay_ms);
                }
            }
            match self.due_at {
                Some(t) if now >= t => {
                    out.push((self.next, step.clone()));
                    self.results[self.next].fired_at_ms = Some(now);
                    self.next += 1;
                    self.due_at = None;
                }
                _ => break,
            }
        }
        out
    }

    pub fn sent(&mut self, step: usize, ref_seq: u64) {
        self.results[step].ref_seq = Some(ref_seq);
    }

    pub fn resolve(&mut self, step: usize, outcome: AckOutcome) {
        let r = &mut self.results[step];
        r.pass = r.expected.admits(&outcome);
        r.outcome = Some(outcome);
    }
}
