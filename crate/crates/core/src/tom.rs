//! The recruiter's model of the interviewee: per-topic beliefs about how
//! well they handle each topic, per-topic desires to pursue it, and the
//! choice of the next question.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affect::Polarity;
use crate::scenario::{ScenarioNode, TopicId, TopicSet};

pub const INITIAL_BELIEF: f64 = 0.0;
pub const INITIAL_DESIRE: f64 = 0.5;
/// Score of a question that touches no topic.
pub const NEUTRAL_GOAL_SCORE: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum TomError {
    #[error("topic index {0} is not part of the topic set")]
    UnknownTopic(usize),
    #[error("{name} must lie in [{lo}, {hi}], got {value}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
}

fn check(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<(), TomError> {
    if (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(TomError::OutOfRange {
            name,
            value,
            lo,
            hi,
        })
    }
}

/// Which topics a desire update touches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesireScope {
    /// Only the topics of the question just answered.
    #[default]
    CurrentTopics,
    /// Every topic of the interview.
    AllTopics,
}

/// One value per topic, in topic-set order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TopicValues(Vec<f64>);

impl TopicValues {
    pub fn filled(topics: &TopicSet, value: f64) -> Self {
        TopicValues(vec![value; topics.len()])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        TopicValues(values)
    }

    pub fn get(&self, t: TopicId) -> Option<f64> {
        self.0.get(t.0).copied()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn slot(&mut self, t: TopicId) -> Result<&mut f64, TomError> {
        self.0.get_mut(t.0).ok_or(TomError::UnknownTopic(t.0))
    }

    fn check_topics(&self, topics: &[TopicId]) -> Result<(), TomError> {
        match topics.iter().find(|t| t.0 >= self.0.len()) {
            Some(t) => Err(TomError::UnknownTopic(t.0)),
            None => Ok(()),
        }
    }
}

/// Beliefs about the interviewee, in [-1, 1] per topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BeliefStore(pub TopicValues);

impl BeliefStore {
    pub fn new(topics: &TopicSet) -> Self {
        BeliefStore(TopicValues::filled(topics, INITIAL_BELIEF))
    }

    pub fn get(&self, t: TopicId) -> Option<f64> {
        self.0.get(t)
    }
}

/// Interest in pursuing each topic, in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DesireStore(pub TopicValues);

impl DesireStore {
    pub fn new(topics: &TopicSet) -> Self {
        DesireStore(TopicValues::filled(topics, INITIAL_DESIRE))
    }

    pub fn get(&self, t: TopicId) -> Option<f64> {
        self.0.get(t)
    }

    pub fn scaled(&self, k: f64) -> Self {
        DesireStore(TopicValues(
            self.0.as_slice().iter().map(|d| d * k).collect(),
        ))
    }
}

/// Moves the belief on each topic of the answered question by `alpha * p_d`.
pub fn update_beliefs(
    store: &mut BeliefStore,
    topics: &[TopicId],
    p_d: f64,
    alpha: f64,
) -> Result<(), TomError> {
    check("P_d", p_d, -1.0, 1.0)?;
    check("alpha", alpha, 0.0, 1.0)?;
    store.0.check_topics(topics)?;
    for &t in topics {
        let b = store.0.slot(t)?;
        *b = (*b + alpha * p_d).clamp(-1.0, 1.0);
    }
    Ok(())
}

/// Unclamped change of a desire. A recruiter with a negative attitude wants
/// to dig into topics the interviewee handles badly; a positive one favours
/// topics that go well.
pub fn desire_delta(polarity: Polarity, p_d: f64, alpha: f64) -> f64 {
    let step = alpha * p_d.abs();
    match (polarity, p_d < 0.0) {
        (Polarity::Negative, true) | (Polarity::Positive, false) => step,
        (Polarity::Negative, false) | (Polarity::Positive, true) => -step,
    }
}

pub fn update_desires(
    store: &mut DesireStore,
    polarity: Polarity,
    scope: &[TopicId],
    p_d: f64,
    alpha: f64,
) -> Result<(), TomError> {
    check("P_d", p_d, -1.0, 1.0)?;
    check("alpha", alpha, 0.0, 1.0)?;
    store.0.check_topics(scope)?;
    let delta = desire_delta(polarity, p_d, alpha);
    for &t in scope {
        let d = store.0.slot(t)?;
        *d = (*d + delta).clamp(0.0, 1.0);
    }
    Ok(())
}

/// How much the recruiter wants to ask `node`: its most desired topic.
pub fn goal_score(desires: &DesireStore, node: &ScenarioNode) -> f64 {
    node.topics
        .iter()
        .filter_map(|&t| desires.get(t))
        .reduce(f64::max)
        .unwrap_or(NEUTRAL_GOAL_SCORE)
}

/// The feasible node with the highest score, earliest on ties. `None` ends
/// the interview.
pub fn select_goal<'a>(
    desires: &DesireStore,
    feasible: &[&'a ScenarioNode],
) -> Option<&'a ScenarioNode> {
    let mut best: Option<(&ScenarioNode, f64)> = None;
    for &node in feasible {
        let s = goal_score(desires, node);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((node, s));
        }
    }
    best.map(|(n, _)| n)
}

/// Beliefs and desires of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct MindModel {
    pub beliefs: BeliefStore,
    pub desires: DesireStore,
    pub scope: DesireScope,
    all_topics: Vec<TopicId>,
}

impl MindModel {
    pub fn new(topics: &TopicSet, scope: DesireScope) -> Self {
        MindModel {
            beliefs: BeliefStore::new(topics),
            desires: DesireStore::new(topics),
            scope,
            all_topics: topics.ids().collect(),
        }
    }

    /// Applies one answered question.
    pub fn update(
        &mut self,
        question_topics: &[TopicId],
        polarity: Polarity,
        p_d: f64,
        alpha: f64,
    ) -> Result<(), TomError> {
        update_beliefs(&mut self.beliefs, question_topics, p_d, alpha)?;
        let scope = match self.scope {
            DesireScope::CurrentTopics => question_topics,
            DesireScope::AllTopics => &self.all_topics,
        };
        update_desires(&mut self.desires, polarity, scope, p_d, alpha)
    }
}
