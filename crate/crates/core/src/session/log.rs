//! Session logs and their replay.
//!
//! A log is JSONL. The first line is a header carrying the configuration
//! and the scenario, then one line per turn, then an end line. Each line has
//! a `"type"` of `header`, `turn` or `end`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{EndReason, SessionConfig, SessionError, TurnRecord};
use crate::affect::AffectCore;
use crate::scenario::{Scenario, ScenarioDocument};
use crate::tom::{select_goal, MindModel};
use crate::user_model::{calibrate, compute_performance, Baseline, PerformanceIndex, TurnSummary};

pub const LOG_FORMAT: &str = "recruiter-session";
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogHeader {
    pub format: String,
    pub version: u32,
    pub config: SessionConfig,
    pub scenario: ScenarioDocument,
}

impl LogHeader {
    pub fn new(config: &SessionConfig, scenario: &Scenario) -> Self {
        LogHeader {
            format: LOG_FORMAT.into(),
            version: LOG_VERSION,
            config: config.clone(),
            scenario: scenario.to_document(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogEnd {
    pub turns: usize,
    pub reason: EndReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogLine {
    Header(LogHeader),
    Turn(TurnRecord),
    End(LogEnd),
}

/// A complete session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub header: LogHeader,
    pub records: Vec<TurnRecord>,
    pub end: LogEnd,
}

impl SessionLog {
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut line = |item: &LogLine| -> std::io::Result<()> {
            serde_json::to_writer(&mut w, item)?;
            w.write_all(b"\n")
        };
        line(&LogLine::Header(self.header.clone()))?;
        for r in &self.records {
            line(&LogLine::Turn(r.clone()))?;
        }
        line(&LogLine::End(self.end.clone()))?;
        w.flush()
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }
}

/// A logged value that the pipeline does not reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub turn: usize,
    pub field: &'static str,
    pub logged: String,
    pub recomputed: String,
}

impl std::fmt::Display for Divergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "turn {}: {} logged {} but recomputed {}",
            self.turn, self.field, self.logged, self.recomputed
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplayReport {
    pub turns: usize,
    pub divergences: Vec<Divergence>,
}

impl ReplayReport {
    pub fn is_clean(&self) -> bool {
        self.divergences.is_empty()
    }

    /// First turn with a divergence.
    pub fn first_divergent_turn(&self) -> Option<usize> {
        self.divergences.iter().map(|d| d.turn).min()
    }
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

struct Replayer<'a> {
    config: &'a SessionConfig,
    scenario: &'a Scenario,
    affect: AffectCore,
    mind: MindModel,
    calibration: Vec<TurnSummary>,
    baseline: Option<Baseline>,
    expected_node: Option<String>,
    report: ReplayReport,
}

impl Replayer<'_> {
    fn diverge<T: Serialize + PartialEq>(
        &mut self,
        turn: usize,
        field: &'static str,
        logged: &T,
        recomputed: &T,
    ) {
        if logged != recomputed {
            self.report.divergences.push(Divergence {
                turn,
                field,
                logged: json(logged),
                recomputed: json(recomputed),
            });
        }
    }

    fn turn(&mut self, r: &TurnRecord, line: usize) -> Result<(), SessionError> {
        let schema = |message: String| SessionError::Log { line, message };
        let expected_turn = self.report.turns + 1;
        if r.turn != expected_turn {
            return Err(schema(format!(
                "expected turn {expected_turn}, found {}",
                r.turn
            )));
        }
        self.report.turns += 1;
        let node = self
            .scenario
            .node(&r.node)
            .ok_or_else(|| schema(format!("unknown node '{}'", r.node)))?;
        let expected_node = self.expected_node.take();
        self.diverge(r.turn, "node", &Some(r.node.clone()), &expected_node);
        self.diverge(r.turn, "question", &r.question, &node.text);
        self.diverge(
            r.turn,
            "expected_performance",
            &r.expected_performance,
            &node.expected_performance,
        );

        let calibrating = r.turn <= self.config.calibration_turns;
        self.diverge(r.turn, "calibration", &r.calibration, &calibrating);
        let performance = if calibrating {
            self.calibration.push(r.summary.clone());
            if self.calibration.len() == self.config.calibration_turns {
                self.baseline = Some(calibrate(&self.calibration)?);
            }
            PerformanceIndex::neutral()
        } else {
            let base = self.config.base_profile();
            let profile = node.profile.as_ref().map_or(base, |o| base.with(o));
            compute_performance(
                &r.summary,
                &profile,
                self.baseline.as_ref(),
                node.difficulty,
                self.config.peak_z,
            )
        };
        self.diverge(r.turn, "performance", &r.performance, &performance);

        // The trajectory continues from the logged index.
        let (p_d, p_e) = if r.calibration {
            (0.0, 0.0)
        } else {
            (r.performance.value, node.expected_performance)
        };
        let affect = self
            .affect
            .step(p_d, p_e)
            .map_err(|e| schema(format!("performance: {e}")))?;
        self.diverge(
            r.turn,
            "affect.emotions",
            &r.affect.emotions,
            &affect.emotions,
        );
        self.diverge(r.turn, "affect.mood", &r.affect.mood, &affect.mood);
        self.diverge(
            r.turn,
            "affect.attitudes",
            &r.affect.attitudes,
            &affect.attitudes,
        );

        self.mind
            .update(
                &node.topics,
                affect.attitudes.polarity,
                p_d,
                self.config.personality.alpha,
            )
            .map_err(|e| schema(e.to_string()))?;
        self.diverge(r.turn, "beliefs", &r.beliefs, &self.mind.beliefs.clone());
        self.diverge(r.turn, "desires", &r.desires, &self.mind.desires.clone());

        let feasible = self.scenario.feasible_next(&node.id)?;
        let next = select_goal(&self.mind.desires, &feasible).map(|n| n.id.clone());
        self.diverge(r.turn, "next", &r.next, &next);
        self.expected_node = r.next.clone();
        Ok(())
    }
}

fn parse_line(text: &str, line: usize) -> Result<LogLine, SessionError> {
    serde_json::from_str(text).map_err(|e| SessionError::Log {
        line,
        message: e.to_string(),
    })
}

/// Re-derives every turn of a log from its header and logged summaries and
/// reports where the logged values disagree.
pub fn replay<R: BufRead>(reader: R) -> Result<ReplayReport, SessionError> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let io = |e: std::io::Error| SessionError::Log {
        line: 0,
        message: e.to_string(),
    };

    let header = match lines.next() {
        None => {
            return Err(SessionError::Log {
                line: 1,
                message: "empty log".into(),
            })
        }
        Some((n, text)) => match parse_line(&text.map_err(io)?, n)? {
            LogLine::Header(h) => h,
            _ => {
                return Err(SessionError::Log {
                    line: n,
                    message: "the first line must be the header".into(),
                })
            }
        },
    };
    let at_header = |message: String| SessionError::Log { line: 1, message };
    if header.format != LOG_FORMAT || header.version != LOG_VERSION {
        return Err(at_header(format!(
            "unsupported log format {} version {}",
            header.format, header.version
        )));
    }
    header
        .config
        .validate()
        .map_err(|e| at_header(e.to_string()))?;
    let scenario =
        Scenario::from_document(header.scenario.clone()).map_err(|e| at_header(e.to_string()))?;

    let config = &header.config;
    let mut rp = Replayer {
        config,
        scenario: &scenario,
        affect: AffectCore::new(config.personality).map_err(|e| at_header(e.to_string()))?,
        mind: MindModel::new(scenario.topics(), config.desire_scope),
        calibration: Vec::new(),
        baseline: None,
        expected_node: Some(scenario.entry().id.clone()),
        report: ReplayReport::default(),
    };

    let mut last_line = 1;
    let mut last_next: Option<Option<String>> = None;
    for (n, text) in lines.by_ref() {
        last_line = n;
        let text = text.map_err(io)?;
        match parse_line(&text, n)? {
            LogLine::Header(_) => {
                return Err(SessionError::Log {
                    line: n,
                    message: "second header".into(),
                })
            }
            LogLine::Turn(r) => {
                rp.turn(&r, n)?;
                last_next = Some(r.next.clone());
            }
            LogLine::End(end) => {
                if end.turns != rp.report.turns {
                    return Err(SessionError::Log {
                        line: n,
                        message: format!(
                            "end line counts {} turns, log has {}",
                            end.turns, rp.report.turns
                        ),
                    });
                }
                let reason = match last_next {
                    Some(Some(_)) => EndReason::MaxTurns,
                    _ => EndReason::Terminal,
                };
                let turn = rp.report.turns;
                rp.diverge(turn, "end", &end.reason, &reason);
                if let Some((extra, _)) = lines.next() {
                    return Err(SessionError::Log {
                        line: extra,
                        message: "content after the end line".into(),
                    });
                }
                return Ok(rp.report);
            }
        }
    }
    Err(SessionError::Log {
        line: last_line + 1,
        message: "log ends before its end line (truncated)".into(),
    })
}
