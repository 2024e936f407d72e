//! Per-turn communicative performance.
//!
//! Cue events of one interview turn are condensed into a [`TurnSummary`].
//! The first turns establish a per-user [`Baseline`]; afterwards every turn
//! is scored against an [`ExpectedCueProfile`] giving a performance index in
//! [-1, 1], where 0 is neutral.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cues::{CueEvent, CueKind, EventKind};

pub const MIN_CALIBRATION_TURNS: usize = 3;
pub const DEFAULT_PEAK_Z: f64 = 2.0;
const STDEV_FLOOR_RATIO: f64 = 0.05;
const STDEV_FLOOR_ABS: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum UserModelError {
    #[error("calibration needs at least {MIN_CALIBRATION_TURNS} turns, got {0}")]
    CalibrationIncomplete(usize),
    #[error("invalid profile: {0}")]
    Profile(String),
}

/// Statistics tracked per turn and baselined during calibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    ResponseLatency,
    SpeechDuration,
    SpeechRate,
    MeanLoudness,
    PitchMean,
    PitchStdev,
    Jitter,
    Shimmer,
    Harmonicity,
    VoiceBreaks,
}

impl Statistic {
    pub const ALL: [Statistic; 10] = [
        Statistic::ResponseLatency,
        Statistic::SpeechDuration,
        Statistic::SpeechRate,
        Statistic::MeanLoudness,
        Statistic::PitchMean,
        Statistic::PitchStdev,
        Statistic::Jitter,
        Statistic::Shimmer,
        Statistic::Harmonicity,
        Statistic::VoiceBreaks,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnSummary {
    pub turn_index: usize,
    /// Seconds from the end of the question to the first speech onset;
    /// negative when the interviewee started early.
    pub response_latency: Option<f64>,
    pub speech_duration: f64,
    /// Syllables per second of speech.
    pub speech_rate: Option<f64>,
    /// RMS level in dB over voiced seconds.
    pub mean_loudness: Option<f64>,
    pub pitch_mean: Option<f64>,
    pub pitch_stdev: Option<f64>,
    pub jitter_mean: Option<f64>,
    pub shimmer_mean: Option<f64>,
    pub hnr_mean: Option<f64>,
    pub voice_breaks: u32,
    pub interrupted: bool,
}

impl TurnSummary {
    /// A turn in which nothing was said.
    pub fn silent(turn_index: usize) -> Self {
        TurnSummary {
            turn_index,
            response_latency: None,
            speech_duration: 0.0,
            speech_rate: None,
            mean_loudness: None,
            pitch_mean: None,
            pitch_stdev: None,
            jitter_mean: None,
            shimmer_mean: None,
            hnr_mean: None,
            voice_breaks: 0,
            interrupted: false,
        }
    }

    pub fn get(&self, stat: Statistic) -> Option<f64> {
        match stat {
            Statistic::ResponseLatency => self.response_latency,
            Statistic::SpeechDuration => Some(self.speech_duration),
            Statistic::SpeechRate => self.speech_rate,
            Statistic::MeanLoudness => self.mean_loudness,
            Statistic::PitchMean => self.pitch_mean,
            Statistic::PitchStdev => self.pitch_stdev,
            Statistic::Jitter => self.jitter_mean,
            Statistic::Shimmer => self.shimmer_mean,
            Statistic::Harmonicity => self.hnr_mean,
            Statistic::VoiceBreaks => Some(self.voice_breaks as f64),
        }
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn population_stdev(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    Some((values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt())
}

fn packet_values(events: &[CueEvent], cue: CueKind) -> Vec<(f64, f64)> {
    events
        .iter()
        .filter(|e| e.cue == cue && e.kind == EventKind::Continuous)
        .filter_map(|e| e.value.map(|v| (e.t, v)))
        .collect()
}

/// Aggregates the cue events of one turn. `question_end` is on the same
/// clock as the events.
pub fn summarize_turn(turn_index: usize, events: &[CueEvent], question_end: f64) -> TurnSummary {
    let mut s = TurnSummary::silent(turn_index);

    if let Some(onset) = events.iter().find(|e| e.cue == CueKind::VoiceActivity) {
        let latency = onset.t - question_end;
        s.response_latency = Some(latency);
        s.interrupted = latency < 0.0;
    }
    s.speech_duration = events
        .iter()
        .filter(|e| e.cue == CueKind::SpeechSegmentLength)
        .filter_map(|e| e.duration)
        .sum();
    s.voice_breaks = events
        .iter()
        .filter(|e| e.cue == CueKind::VoiceBreaks && e.kind == EventKind::Discrete)
        .count() as u32;

    let values = |cue| {
        packet_values(events, cue)
            .into_iter()
            .map(|p| p.1)
            .collect::<Vec<_>>()
    };
    if s.speech_duration > 0.0 {
        let nuclei: f64 = values(CueKind::SpeechRate).iter().sum();
        s.speech_rate = Some(nuclei / s.speech_duration);
    }

    let pitch = packet_values(events, CueKind::Pitch);
    let voiced_loudness: Vec<f64> = packet_values(events, CueKind::Loudness)
        .into_iter()
        .filter(|(t, _)| pitch.iter().any(|(pt, _)| (pt - t).abs() < 1e-6))
        .map(|p| p.1)
        .collect();
    s.mean_loudness = mean(&voiced_loudness)
        .filter(|&l| l > 0.0)
        .map(|l| 20.0 / 0.3 * l.log10());

    let pitch: Vec<f64> = pitch.into_iter().map(|p| p.1).collect();
    s.pitch_mean = mean(&pitch);
    s.pitch_stdev = if pitch.len() >= 2 {
        population_stdev(&pitch)
    } else {
        None
    };
    s.jitter_mean = mean(&values(CueKind::Jitter));
    s.shimmer_mean = mean(&values(CueKind::Shimmer));
    s.hnr_mean = mean(&values(CueKind::Harmonicity));
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatBaseline {
    pub mean: f64,
    pub stdev: f64,
}

impl StatBaseline {
    fn from_values(values: &[f64]) -> Option<Self> {
        let mean = mean(values)?;
        let stdev =
            population_stdev(values)?.max((STDEV_FLOOR_RATIO * mean.abs()).max(STDEV_FLOOR_ABS));
        Some(StatBaseline { mean, stdev })
    }

    pub fn z(&self, value: f64) -> f64 {
        (value - self.mean) / self.stdev
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub stats: BTreeMap<Statistic, StatBaseline>,
    pub turns_used: usize,
}

impl Baseline {
    pub fn get(&self, stat: Statistic) -> Option<&StatBaseline> {
        self.stats.get(&stat)
    }
}

/// Per-statistic mean and population standard deviation over the
/// calibration turns. Statistics absent from every turn are left out.
pub fn calibrate(summaries: &[TurnSummary]) -> Result<Baseline, UserModelError> {
    if summaries.len() < MIN_CALIBRATION_TURNS {
        return Err(UserModelError::CalibrationIncomplete(summaries.len()));
    }
    let stats = Statistic::ALL
        .iter()
        .filter_map(|&stat| {
            let values: Vec<f64> = summaries.iter().filter_map(|s| s.get(stat)).collect();
            StatBaseline::from_values(&values).map(|b| (stat, b))
        })
        .collect();
    Ok(Baseline {
        stats,
        turns_used: summaries.len(),
    })
}

/// Statistics lying more than `z` baseline deviations from the mean.
pub fn detect_peaks(summary: &TurnSummary, baseline: &Baseline, z: f64) -> Vec<Statistic> {
    Statistic::ALL
        .iter()
        .copied()
        .filter(|&stat| match (summary.get(stat), baseline.get(stat)) {
            (Some(v), Some(b)) => (v - b.mean).abs() > z * b.stdev,
            _ => false,
        })
        .collect()
}

/// Desired range `[lo, hi]` inside hard limits `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetBand {
    pub lo: f64,
    pub hi: f64,
    pub min: f64,
    pub max: f64,
}

impl TargetBand {
    pub fn new(lo: f64, hi: f64, min: f64, max: f64) -> Self {
        TargetBand { lo, hi, min, max }
    }

    pub fn validate(&self) -> Result<(), UserModelError> {
        let ok = [self.lo, self.hi, self.min, self.max]
            .iter()
            .all(|v| v.is_finite())
            && self.min <= self.lo
            && self.lo <= self.hi
            && self.hi <= self.max;
        if ok {
            Ok(())
        } else {
            Err(UserModelError::Profile(format!(
                "band needs min <= lo <= hi <= max, got [{}, {}] within [{}, {}]",
                self.lo, self.hi, self.min, self.max
            )))
        }
    }

    pub fn centre(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Trapezoidal score: +1 inside the band, falling linearly to -1 at each
/// hard limit and staying there beyond it.
pub fn score_statistic(value: f64, band: &TargetBand) -> f64 {
    if value >= band.lo && value <= band.hi {
        1.0
    } else if value < band.lo {
        if value <= band.min {
            -1.0
        } else {
            -1.0 + 2.0 * (value - band.min) / (band.lo - band.min)
        }
    } else if value >= band.max {
        -1.0
    } else {
        -1.0 + 2.0 * (band.max - value) / (band.max - band.hi)
    }
}

/// Speech-duration band as a function of question difficulty `d`:
/// `[lo_base + lo_slope d, hi_base + hi_slope d]`, hard limits `[0, 2 hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DurationRule {
    pub lo_base: f64,
    pub lo_slope: f64,
    pub hi_base: f64,
    pub hi_slope: f64,
}

impl Default for DurationRule {
    fn default() -> Self {
        DurationRule {
            lo_base: 2.0,
            lo_slope: 8.0,
            hi_base: 15.0,
            hi_slope: 30.0,
        }
    }
}

impl DurationRule {
    pub fn band(&self, difficulty: f64) -> TargetBand {
        let lo = self.lo_base + self.lo_slope * difficulty;
        let hi = self.hi_base + self.hi_slope * difficulty;
        TargetBand::new(lo, hi, 0.0, 2.0 * hi)
    }
}

/// Components of the performance index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Duration,
    Latency,
    Loudness,
    SpeechRate,
    PitchVariability,
    VoiceQuality,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::Duration,
        Component::Latency,
        Component::Loudness,
        Component::SpeechRate,
        Component::PitchVariability,
        Component::VoiceQuality,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub duration: f64,
    pub latency: f64,
    pub loudness: f64,
    pub speech_rate: f64,
    pub pitch_variability: f64,
    pub voice_quality: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            duration: 0.3,
            latency: 0.2,
            loudness: 0.15,
            speech_rate: 0.15,
            pitch_variability: 0.1,
            voice_quality: 0.1,
        }
    }
}

impl Weights {
    pub fn get(&self, c: Component) -> f64 {
        match c {
            Component::Duration => self.duration,
            Component::Latency => self.latency,
            Component::Loudness => self.loudness,
            Component::SpeechRate => self.speech_rate,
            Component::PitchVariability => self.pitch_variability,
            Component::VoiceQuality => self.voice_quality,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Weights {
            duration: self.duration * k,
            latency: self.latency * k,
            loudness: self.loudness * k,
            speech_rate: self.speech_rate * k,
            pitch_variability: self.pitch_variability * k,
            voice_quality: self.voice_quality * k,
        }
    }

    pub fn validate(&self) -> Result<(), UserModelError> {
        let all: Vec<f64> = Component::ALL.iter().map(|&c| self.get(c)).collect();
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(UserModelError::Profile(
                "weights must be finite and nonnegative".into(),
            ));
        }
        if all.iter().all(|&w| w == 0.0) {
            return Err(UserModelError::Profile(
                "at least one weight must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Loudness band in baseline standard deviations around the baseline mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelativeBand {
    pub band_sigmas: f64,
    pub limit_sigmas: f64,
}

impl RelativeBand {
    pub fn around(&self, b: &StatBaseline) -> TargetBand {
        TargetBand::new(
            b.mean - self.band_sigmas * b.stdev,
            b.mean + self.band_sigmas * b.stdev,
            b.mean - self.limit_sigmas * b.stdev,
            b.mean + self.limit_sigmas * b.stdev,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedCueProfile {
    pub latency: TargetBand,
    pub speech_rate: TargetBand,
    pub loudness: RelativeBand,
    pub pitch_variability: TargetBand,
    pub duration: DurationRule,
    pub jitter: TargetBand,
    pub shimmer: TargetBand,
    pub voice_breaks: TargetBand,
    pub weights: Weights,
}

impl Default for ExpectedCueProfile {
    fn default() -> Self {
        ExpectedCueProfile {
            latency: TargetBand::new(0.2, 1.5, 0.0, 4.0),
            speech_rate: TargetBand::new(2.5, 5.5, 0.5, 9.0),
            loudness: RelativeBand {
                band_sigmas: 1.0,
                limit_sigmas: 3.0,
            },
            pitch_variability: TargetBand::new(15.0, 80.0, 0.0, 160.0),
            duration: DurationRule::default(),
            jitter: TargetBand::new(0.0, 0.02, 0.0, 0.05),
            shimmer: TargetBand::new(0.0, 0.1, 0.0, 0.25),
            voice_breaks: TargetBand::new(0.0, 3.0, 0.0, 10.0),
            weights: Weights::default(),
        }
    }
}

impl ExpectedCueProfile {
    pub fn validate(&self) -> Result<(), UserModelError> {
        for band in [
            self.latency,
            self.speech_rate,
            self.pitch_variability,
            self.jitter,
            self.shimmer,
            self.voice_breaks,
            self.duration.band(0.0),
            self.duration.band(1.0),
        ] {
            band.validate()?;
        }
        let l = self.loudness;
        if !(l.band_sigmas.is_finite()
            && l.band_sigmas >= 0.0
            && l.limit_sigmas >= l.band_sigmas
            && l.limit_sigmas.is_finite())
        {
            return Err(UserModelError::Profile(
                "loudness needs 0 <= band_sigmas <= limit_sigmas".into(),
            ));
        }
        self.weights.validate()
    }

    /// Applies partial overrides, later ones winning.
    pub fn with(&self, overrides: &ProfileOverrides) -> Self {
        let o = overrides;
        ExpectedCueProfile {
            latency: o.latency.unwrap_or(self.latency),
            speech_rate: o.speech_rate.unwrap_or(self.speech_rate),
            loudness: o.loudness.unwrap_or(self.loudness),
            pitch_variability: o.pitch_variability.unwrap_or(self.pitch_variability),
            duration: o.duration.unwrap_or(self.duration),
            jitter: o.jitter.unwrap_or(self.jitter),
            shimmer: o.shimmer.unwrap_or(self.shimmer),
            voice_breaks: o.voice_breaks.unwrap_or(self.voice_breaks),
            weights: o.weights.unwrap_or(self.weights),
        }
    }
}

/// Partial profile, as written in configuration and scenario files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latency: Option<TargetBand>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speech_rate: Option<TargetBand>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loudness: Option<RelativeBand>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pitch_variability: Option<TargetBand>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<DurationRule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jitter: Option<TargetBand>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shimmer: Option<TargetBand>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub voice_breaks: Option<TargetBand>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Weights>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceIndex {
    pub value: f64,
    /// Sub-scores of the components that took part.
    pub scores: BTreeMap<Component, f64>,
    /// Share of the expected answer length actually spoken, in [0, 1].
    pub coverage: f64,
    /// Statistics far from the calibration baseline; informative only.
    pub peaks: Vec<Statistic>,
}

impl PerformanceIndex {
    pub fn neutral() -> Self {
        PerformanceIndex {
            value: 0.0,
            scores: BTreeMap::new(),
            coverage: 1.0,
            peaks: Vec::new(),
        }
    }
}

fn voice_quality_score(summary: &TurnSummary, profile: &ExpectedCueProfile) -> Option<f64> {
    let parts: Vec<f64> = [
        summary
            .jitter_mean
            .map(|j| score_statistic(j, &profile.jitter)),
        summary
            .shimmer_mean
            .map(|s| score_statistic(s, &profile.shimmer)),
        // Break counts only mean something once voicing was measured.
        summary
            .jitter_mean
            .or(summary.shimmer_mean)
            .map(|_| score_statistic(summary.voice_breaks as f64, &profile.voice_breaks)),
    ]
    .into_iter()
    .flatten()
    .collect();
    mean(&parts)
}

fn component_score(
    c: Component,
    summary: &TurnSummary,
    profile: &ExpectedCueProfile,
    baseline: &Baseline,
    difficulty: f64,
) -> Option<f64> {
    match c {
        Component::Duration => Some(score_statistic(
            summary.speech_duration,
            &profile.duration.band(difficulty),
        )),
        Component::Latency => {
            if summary.interrupted {
                Some(-1.0)
            } else {
                summary
                    .response_latency
                    .map(|l| score_statistic(l, &profile.latency))
            }
        }
        Component::Loudness => {
            let b = baseline.get(Statistic::MeanLoudness)?;
            summary
                .mean_loudness
                .map(|l| score_statistic(l, &profile.loudness.around(b)))
        }
        Component::SpeechRate => summary
            .speech_rate
            .map(|r| score_statistic(r, &profile.speech_rate)),
        Component::PitchVariability => summary
            .pitch_stdev
            .map(|p| score_statistic(p, &profile.pitch_variability)),
        Component::VoiceQuality => voice_quality_score(summary, profile),
    }
}

/// Spoken time relative to the lower end of the duration band: 1 once the
/// answer is long enough, 0 for silence.
pub fn answer_coverage(
    summary: &TurnSummary,
    profile: &ExpectedCueProfile,
    difficulty: f64,
) -> f64 {
    let lo = profile.duration.band(difficulty).lo;
    if lo <= 0.0 {
        1.0
    } else {
        (summary.speech_duration / lo).clamp(0.0, 1.0)
    }
}

/// Weighted mean of the component scores. Without a baseline (calibration
/// still running) the index is neutral. A silent turn scores -1 on every
/// weighted component; on a spoken turn, components that could not be
/// measured are left out and the remaining weights renormalized.
///
/// Positive scores of components other than duration are scaled by the
/// answer coverage: a well-delivered answer that is far too short earns
/// little credit for its delivery. Negative scores count in full.
pub fn compute_performance(
    summary: &TurnSummary,
    profile: &ExpectedCueProfile,
    baseline: Option<&Baseline>,
    difficulty: f64,
    peak_z: f64,
) -> PerformanceIndex {
    let Some(baseline) = baseline else {
        return PerformanceIndex::neutral();
    };
    let silent = summary.speech_duration <= 0.0;
    let coverage = answer_coverage(summary, profile, difficulty);
    let mut scores = BTreeMap::new();
    let (mut num, mut den) = (0.0, 0.0);
    for c in Component::ALL {
        let w = profile.weights.get(c);
        if w <= 0.0 {
            continue;
        }
        let s = if silent {
            Some(-1.0)
        } else {
            component_score(c, summary, profile, baseline, difficulty)
        };
        if let Some(s) = s {
            scores.insert(c, s);
            let credited = if c != Component::Duration && s > 0.0 {
                coverage * s
            } else {
                s
            };
            num += w * credited;
            den += w;
        }
    }
    let value = if den > 0.0 {
        (num / den).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    PerformanceIndex {
        value,
        scores,
        coverage,
        peaks: detect_peaks(summary, baseline, peak_z),
    }
}
