//! Recruiter emotions, mood and attitudes.
//!
//! Each turn the detected performance `P_d` is appraised against the
//! expected performance `P_e`, giving eight emotion intensities. Emotions
//! pull a mood point in Pleasure-Arousal-Dominance space; the mood and the
//! recruiter's personality together decide seven attitude intensities.
//! All intensities lie in [0, 1].

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Emotions decay to this fraction of their value every turn.
pub const EMOTION_DECAY: f64 = 0.5;
/// Fraction of the gap to the emotion centroid the mood covers per turn.
pub const MOOD_STEP: f64 = 0.15;
/// PAD magnitude at which a mood label becomes active.
pub const MOOD_THRESHOLD: f64 = 0.5;
/// Dominance separating Disdainful from Bored.
pub const DISDAIN_DOMINANCE: f64 = 0.25;
/// Attentiveness of a recruiter in a neutral mood.
pub const NEUTRAL_ATTENTION: f64 = 0.3;
/// Number of recent performance changes averaged into the trend.
pub const TREND_WINDOW: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum AffectError {
    #[error("{name} must lie in [{lo}, {hi}], got {value}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
}

fn check(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<(), AffectError> {
    if (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(AffectError::OutOfRange {
            name,
            value,
            lo,
            hi,
        })
    }
}

fn unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emotion {
    Joy,
    Distress,
    Relief,
    Disappointment,
    Admiration,
    Anger,
    Hope,
    Fear,
}

impl Emotion {
    pub const ALL: [Emotion; 8] = [
        Emotion::Joy,
        Emotion::Distress,
        Emotion::Relief,
        Emotion::Disappointment,
        Emotion::Admiration,
        Emotion::Anger,
        Emotion::Hope,
        Emotion::Fear,
    ];

    /// Location of the emotion in PAD space.
    pub fn anchor(self) -> Pad {
        let (p, a, d) = match self {
            Emotion::Joy => (0.6, 0.4, 0.3),
            Emotion::Distress => (-0.6, 0.3, 0.0),
            Emotion::Relief => (0.5, -0.3, 0.2),
            Emotion::Disappointment => (-0.4, 0.2, 0.0),
            Emotion::Admiration => (0.5, 0.3, 0.2),
            Emotion::Anger => (-0.5, 0.7, 0.6),
            Emotion::Hope => (0.4, 0.2, 0.2),
            Emotion::Fear => (-0.6, 0.6, 0.0),
        };
        Pad::new(p, a, d)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmotionState {
    pub joy: f64,
    pub distress: f64,
    pub relief: f64,
    pub disappointment: f64,
    pub admiration: f64,
    pub anger: f64,
    pub hope: f64,
    pub fear: f64,
}

impl EmotionState {
    pub fn get(&self, e: Emotion) -> f64 {
        match e {
            Emotion::Joy => self.joy,
            Emotion::Distress => self.distress,
            Emotion::Relief => self.relief,
            Emotion::Disappointment => self.disappointment,
            Emotion::Admiration => self.admiration,
            Emotion::Anger => self.anger,
            Emotion::Hope => self.hope,
            Emotion::Fear => self.fear,
        }
    }

    pub fn set(&mut self, e: Emotion, v: f64) {
        let slot = match e {
            Emotion::Joy => &mut self.joy,
            Emotion::Distress => &mut self.distress,
            Emotion::Relief => &mut self.relief,
            Emotion::Disappointment => &mut self.disappointment,
            Emotion::Admiration => &mut self.admiration,
            Emotion::Anger => &mut self.anger,
            Emotion::Hope => &mut self.hope,
            Emotion::Fear => &mut self.fear,
        };
        *slot = v;
    }

    /// A state with one emotion at `intensity` and the rest at zero.
    pub fn only(e: Emotion, intensity: f64) -> Self {
        let mut s = EmotionState::default();
        s.set(e, intensity);
        s
    }

    pub fn iter(&self) -> impl Iterator<Item = (Emotion, f64)> + '_ {
        Emotion::ALL.into_iter().map(|e| (e, self.get(e)))
    }
}

/// Emotion values from the appraisal rules alone, before blending with the
/// previous state. `trend` is the recent mean change of `P_d`.
pub fn appraisal_rules(p_d: f64, p_e: f64, trend: f64) -> EmotionState {
    let delta = p_d - p_e;
    EmotionState {
        joy: unit(p_d),
        distress: unit(-p_d),
        relief: if p_e < 0.0 && p_d >= 0.0 {
            unit(delta)
        } else {
            0.0
        },
        disappointment: if p_e > 0.0 { unit(-delta) } else { 0.0 },
        admiration: if p_e <= 0.0 { unit(delta) } else { 0.0 },
        anger: if p_e > 0.0 && p_d < 0.0 {
            unit(-delta)
        } else {
            0.0
        },
        hope: unit(trend),
        fear: unit(-trend),
    }
}

/// Appraisal with memory of recent performance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Appraiser {
    history: VecDeque<f64>,
}

impl Appraiser {
    /// Mean change of `P_d` over the last turns, including `p_d` itself.
    pub fn trend_with(&self, p_d: f64) -> f64 {
        let values: Vec<f64> = self.history.iter().copied().chain([p_d]).collect();
        let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
        let recent = &diffs[diffs.len().saturating_sub(TREND_WINDOW)..];
        if recent.is_empty() {
            0.0
        } else {
            recent.iter().sum::<f64>() / recent.len() as f64
        }
    }

    /// New emotion state: each emotion takes the larger of its rule value
    /// and its decayed previous value.
    pub fn appraise(
        &mut self,
        p_d: f64,
        p_e: f64,
        previous: &EmotionState,
    ) -> Result<EmotionState, AffectError> {
        check("P_d", p_d, -1.0, 1.0)?;
        check("P_e", p_e, -1.0, 1.0)?;
        let rules = appraisal_rules(p_d, p_e, self.trend_with(p_d));
        self.history.push_back(p_d);
        while self.history.len() > TREND_WINDOW {
            self.history.pop_front();
        }
        let mut out = EmotionState::default();
        for e in Emotion::ALL {
            out.set(e, rules.get(e).max(EMOTION_DECAY * previous.get(e)));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pad {
    pub pleasure: f64,
    pub arousal: f64,
    pub dominance: f64,
}

impl Pad {
    pub const fn new(pleasure: f64, arousal: f64, dominance: f64) -> Self {
        Pad {
            pleasure,
            arousal,
            dominance,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.pleasure.powi(2) + self.arousal.powi(2) + self.dominance.powi(2)).sqrt()
    }

    pub fn distance(&self, other: &Pad) -> f64 {
        Pad::new(
            self.pleasure - other.pleasure,
            self.arousal - other.arousal,
            self.dominance - other.dominance,
        )
        .norm()
    }

    fn scale(&self, k: f64) -> Pad {
        Pad::new(self.pleasure * k, self.arousal * k, self.dominance * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoodLabel {
    Relaxed,
    Exuberant,
    Hostile,
    Bored,
    Disdainful,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoodState {
    pub pad: Pad,
    pub label: MoodLabel,
    pub intensity: f64,
}

impl Default for MoodState {
    fn default() -> Self {
        MoodState {
            pad: Pad::default(),
            label: MoodLabel::Neutral,
            intensity: 0.0,
        }
    }
}

/// Mood label of a PAD point.
pub fn mood_label(pad: &Pad) -> MoodLabel {
    if pad.norm() < MOOD_THRESHOLD {
        return MoodLabel::Neutral;
    }
    match (pad.pleasure >= 0.0, pad.arousal >= 0.0) {
        (true, true) => MoodLabel::Exuberant,
        (true, false) => MoodLabel::Relaxed,
        (false, true) => MoodLabel::Hostile,
        (false, false) if pad.dominance > DISDAIN_DOMINANCE => MoodLabel::Disdainful,
        (false, false) => MoodLabel::Bored,
    }
}

/// Point the mood is pulled toward: the direction of the intensity-weighted
/// emotion anchors, at a distance equal to the intensity-weighted mean
/// intensity. A single emotion at intensity 1 pulls toward the unit vector
/// through its anchor.
pub fn emotion_centroid(emotions: &EmotionState) -> Pad {
    let (mut sum, mut total, mut total_sq) = (Pad::default(), 0.0, 0.0);
    for (e, w) in emotions.iter() {
        if w <= 0.0 {
            continue;
        }
        let a = e.anchor();
        sum.pleasure += w * a.pleasure;
        sum.arousal += w * a.arousal;
        sum.dominance += w * a.dominance;
        total += w;
        total_sq += w * w;
    }
    let n = sum.norm();
    if total <= 0.0 || n <= 1e-12 {
        return Pad::default();
    }
    sum.scale(total_sq / total / n)
}

pub fn update_mood(mood: &MoodState, emotions: &EmotionState) -> MoodState {
    let c = emotion_centroid(emotions);
    let p = mood.pad;
    let pad = Pad::new(
        (p.pleasure + MOOD_STEP * (c.pleasure - p.pleasure)).clamp(-1.0, 1.0),
        (p.arousal + MOOD_STEP * (c.arousal - p.arousal)).clamp(-1.0, 1.0),
        unit(p.dominance + MOOD_STEP * (c.dominance - p.dominance)),
    );
    MoodState {
        pad,
        label: mood_label(&pad),
        intensity: unit(pad.norm()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attitude {
    Friendly,
    Supportive,
    Attentive,
    Aggressive,
    Dominant,
    Inattentive,
    Gossip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Attitude {
    /// Positive attitudes first, then negative; this is also the tie order.
    pub const ALL: [Attitude; 7] = [
        Attitude::Friendly,
        Attitude::Supportive,
        Attitude::Attentive,
        Attitude::Aggressive,
        Attitude::Dominant,
        Attitude::Inattentive,
        Attitude::Gossip,
    ];

    pub fn polarity(self) -> Polarity {
        match self {
            Attitude::Friendly | Attitude::Supportive | Attitude::Attentive => Polarity::Positive,
            _ => Polarity::Negative,
        }
    }
}

/// One value per attitude.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttitudeVector {
    pub friendly: f64,
    pub supportive: f64,
    pub attentive: f64,
    pub aggressive: f64,
    pub dominant: f64,
    pub inattentive: f64,
    pub gossip: f64,
}

impl AttitudeVector {
    pub fn get(&self, a: Attitude) -> f64 {
        match a {
            Attitude::Friendly => self.friendly,
            Attitude::Supportive => self.supportive,
            Attitude::Attentive => self.attentive,
            Attitude::Aggressive => self.aggressive,
            Attitude::Dominant => self.dominant,
            Attitude::Inattentive => self.inattentive,
            Attitude::Gossip => self.gossip,
        }
    }

    pub fn set(&mut self, a: Attitude, v: f64) {
        let slot = match a {
            Attitude::Friendly => &mut self.friendly,
            Attitude::Supportive => &mut self.supportive,
            Attitude::Attentive => &mut self.attentive,
            Attitude::Aggressive => &mut self.aggressive,
            Attitude::Dominant => &mut self.dominant,
            Attitude::Inattentive => &mut self.inattentive,
            Attitude::Gossip => &mut self.gossip,
        };
        *slot = v;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttitudeState {
    pub intensities: AttitudeVector,
    pub dominant: Attitude,
    pub polarity: Polarity,
}

/// Recruiter personality: standing attitude tendencies and the learning
/// rate of its beliefs and desires.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Personality {
    pub traits: AttitudeVector,
    pub alpha: f64,
}

impl Default for Personality {
    fn default() -> Self {
        Personality {
            traits: AttitudeVector::default(),
            alpha: 0.5,
        }
    }
}

impl Personality {
    pub fn validate(&self) -> Result<(), AffectError> {
        check("alpha", self.alpha, 0.0, 1.0)?;
        for a in Attitude::ALL {
            check("personality trait", self.traits.get(a), 0.0, 1.0)?;
        }
        Ok(())
    }
}

/// Attitude activation implied by the mood alone.
pub fn mood_activation(mood: &MoodState) -> AttitudeVector {
    let mut v = AttitudeVector::default();
    let i = unit(mood.intensity);
    match mood.label {
        MoodLabel::Hostile => v.aggressive = i,
        MoodLabel::Exuberant => v.friendly = i,
        MoodLabel::Relaxed => {
            v.supportive = i;
            v.attentive = i;
        }
        MoodLabel::Bored => v.inattentive = i,
        MoodLabel::Disdainful => {
            v.dominant = i;
            v.gossip = i;
        }
        MoodLabel::Neutral => v.attentive = NEUTRAL_ATTENTION,
    }
    v
}

/// Each attitude is the larger of its mood activation and personality trait.
pub fn compute_attitudes(mood: &MoodState, personality: &Personality) -> AttitudeState {
    let from_mood = mood_activation(mood);
    let mut intensities = AttitudeVector::default();
    for a in Attitude::ALL {
        intensities.set(a, unit(from_mood.get(a).max(personality.traits.get(a))));
    }
    let mut dominant = Attitude::ALL[0];
    for a in Attitude::ALL {
        if intensities.get(a) > intensities.get(dominant) {
            dominant = a;
        }
    }
    AttitudeState {
        intensities,
        dominant,
        polarity: dominant.polarity(),
    }
}

/// Snapshot of the recruiter's affect after a turn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffectState {
    pub emotions: EmotionState,
    pub mood: MoodState,
    pub attitudes: AttitudeState,
}

/// The per-session affect state machine.
#[derive(Debug, Clone, PartialEq)]
pub struct AffectCore {
    appraiser: Appraiser,
    personality: Personality,
    state: AffectState,
}

impl AffectCore {
    pub fn new(personality: Personality) -> Result<Self, AffectError> {
        personality.validate()?;
        let mood = MoodState::default();
        Ok(AffectCore {
            appraiser: Appraiser::default(),
            personality,
            state: AffectState {
                emotions: EmotionState::default(),
                mood,
                attitudes: compute_attitudes(&mood, &personality),
            },
        })
    }

    pub fn state(&self) -> &AffectState {
        &self.state
    }

    pub fn personality(&self) -> &Personality {
        &self.personality
    }

    /// Advances one turn.
    pub fn step(&mut self, p_d: f64, p_e: f64) -> Result<AffectState, AffectError> {
        let emotions = self.appraiser.appraise(p_d, p_e, &self.state.emotions)?;
        let mood = update_mood(&self.state.mood, &emotions);
        let attitudes = compute_attitudes(&mood, &self.personality);
        self.state = AffectState {
            emotions,
            mood,
            attitudes,
        };
        Ok(self.state)
    }
}
