//! The interview loop.
//!
//! Per turn: the current question is asked, the answer's cue events are
//! summarized and scored, the recruiter's affect and theory of mind are
//! updated, and the next question is chosen among the scenario successors.
//! Every turn produces a [`TurnRecord`]; the whole session is written as a
//! JSONL log that [`replay`] can re-check.

mod config;
mod input;
mod log;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::SessionConfig;
pub use input::{
    extract_manifest, AudioManifest, AudioSource, ManifestTurn, TraceSource, TurnInput, TurnSource,
};
pub use log::{
    replay, Divergence, LogEnd, LogHeader, LogLine, ReplayReport, SessionLog, LOG_FORMAT,
    LOG_VERSION,
};

use crate::affect::{AffectCore, AffectState};
use crate::scenario::{Scenario, ScenarioError, ScenarioNode};
use crate::tom::{select_goal, BeliefStore, DesireStore, MindModel};
use crate::user_model::{
    calibrate, compute_performance, summarize_turn, Baseline, ExpectedCueProfile, PerformanceIndex,
    TurnSummary, UserModelError,
};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Calibration(#[from] UserModelError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("audio manifest: {0}")]
    Manifest(String),
    #[error("cue trace: {0}")]
    Trace(String),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("session log line {line}: {message}")]
    Log { line: usize, message: String },
    #[error("internal contract violated: {0}")]
    Contract(String),
}

impl SessionError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        SessionError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    /// Process exit status: 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            SessionError::Io { .. } | SessionError::Scenario(ScenarioError::Io(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurnRecord {
    pub turn: usize,
    pub node: String,
    pub question: String,
    pub expected_performance: f64,
    /// Whether the turn was used to calibrate the speaker baseline.
    pub calibration: bool,
    pub summary: TurnSummary,
    pub performance: PerformanceIndex,
    pub affect: AffectState,
    pub beliefs: BeliefStore,
    pub desires: DesireStore,
    /// Question chosen for the next turn; none at the end of the script.
    pub next: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    /// A question without successors was answered.
    Terminal,
    /// The turn cap was reached.
    MaxTurns,
}

/// Turn-by-turn state of one interview.
#[derive(Debug, Clone)]
pub struct Interview<'a> {
    config: &'a SessionConfig,
    scenario: &'a Scenario,
    profiles: Vec<ExpectedCueProfile>,
    affect: AffectCore,
    mind: MindModel,
    calibration: Vec<TurnSummary>,
    baseline: Option<Baseline>,
    current: Option<&'a ScenarioNode>,
    turn: usize,
    end: Option<EndReason>,
}

fn contract<E: std::fmt::Display>(e: E) -> SessionError {
    SessionError::Contract(e.to_string())
}

impl<'a> Interview<'a> {
    pub fn new(config: &'a SessionConfig, scenario: &'a Scenario) -> Result<Self, SessionError> {
        config.validate()?;
        let base = config.base_profile();
        let profiles = scenario
            .nodes()
            .iter()
            .map(|n| {
                let p = n.profile.as_ref().map_or(base, |o| base.with(o));
                p.validate()
                    .map(|_| p)
                    .map_err(|e| SessionError::Config(format!("profile of node '{}': {e}", n.id)))
            })
            .collect::<Result<_, _>>()?;
        Ok(Interview {
            config,
            scenario,
            profiles,
            affect: AffectCore::new(config.personality)
                .map_err(|e| SessionError::Config(e.to_string()))?,
            mind: MindModel::new(scenario.topics(), config.desire_scope),
            calibration: Vec::new(),
            baseline: None,
            current: Some(scenario.entry()),
            turn: 0,
            end: None,
        })
    }

    /// The question about to be asked, if the interview is still running.
    pub fn current(&self) -> Option<&'a ScenarioNode> {
        self.current
    }

    pub fn end(&self) -> Option<EndReason> {
        self.end
    }

    pub fn baseline(&self) -> Option<&Baseline> {
        self.baseline.as_ref()
    }

    /// Plays one turn with the interviewee's answer.
    pub fn step(&mut self, input: &TurnInput) -> Result<TurnRecord, SessionError> {
        let node = self
            .current
            .ok_or_else(|| SessionError::Contract("the interview has ended".into()))?;
        self.turn += 1;
        let summary = summarize_turn(self.turn, &input.events, input.question_end);
        let calibrating = self.turn <= self.config.calibration_turns;

        let (performance, p_e) = if calibrating {
            self.calibration.push(summary.clone());
            if self.calibration.len() == self.config.calibration_turns {
                self.baseline = Some(calibrate(&self.calibration)?);
            }
            (PerformanceIndex::neutral(), 0.0)
        } else {
            let profile = &self.profiles[self
                .scenario
                .declaration_index(&node.id)
                .expect("scenario node")];
            let p = compute_performance(
                &summary,
                profile,
                self.baseline.as_ref(),
                node.difficulty,
                self.config.peak_z,
            );
            (p, node.expected_performance)
        };

        let affect = self.affect.step(performance.value, p_e).map_err(contract)?;
        self.mind
            .update(
                &node.topics,
                affect.attitudes.polarity,
                performance.value,
                self.config.personality.alpha,
            )
            .map_err(contract)?;
        let feasible = self.scenario.feasible_next(&node.id)?;
        let next = select_goal(&self.mind.desires, &feasible);

        self.current = next;
        if next.is_none() {
            self.end = Some(EndReason::Terminal);
        } else if self.turn >= self.config.max_turns {
            self.end = Some(EndReason::MaxTurns);
            self.current = None;
        }

        Ok(TurnRecord {
            turn: self.turn,
            node: node.id.clone(),
            question: node.text.clone(),
            expected_performance: node.expected_performance,
            calibration: calibrating,
            summary,
            performance,
            affect,
            beliefs: self.mind.beliefs.clone(),
            desires: self.mind.desires.clone(),
            next: next.map(|n| n.id.clone()),
        })
    }
}

/// Runs an interview from the entry question to its end.
pub fn run_session(
    config: &SessionConfig,
    scenario: &Scenario,
    source: &mut dyn TurnSource,
) -> Result<SessionLog, SessionError> {
    let mut interview = Interview::new(config, scenario)?;
    let mut records = Vec::new();
    while interview.current().is_some() {
        let input = source.next_turn(records.len() + 1)?;
        records.push(interview.step(&input)?);
    }
    let reason = interview.end().expect("loop ends with the interview");
    Ok(SessionLog {
        header: LogHeader::new(config, scenario),
        end: LogEnd {
            turns: records.len(),
            reason,
        },
        records,
    })
}
