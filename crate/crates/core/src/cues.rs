//! Social-cue events derived from frame features.
//!
//! Two event kinds leave this module: *continuous* packets, one per second
//! per scalar cue carrying the mean magnitude over that second, and
//! *discrete* occurrences fired on speech onset, at the end of each speech
//! segment, on voice breaks, and whenever a configured cue threshold is
//! crossed upwards.
//!
//! Traces are stored as JSONL, one [`CueEvent`] per line. A trace may also
//! carry [`TurnMarker`] lines that split it into interview turns.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{self, FeatureConfig, FrameFeatures, NucleusDetector, PcmAudio};

/// Re-arm margin below a discrete threshold, as a fraction of it.
pub const HYSTERESIS: f64 = 0.1;

#[derive(Debug, Error)]
pub enum CueError {
    #[error("timestamps must increase: {time} after {previous}")]
    NonMonotonic { previous: f64, time: f64 },
    #[error("no discrete threshold can be set on {0}")]
    UnsupportedThreshold(CueKind),
    #[error("trace line {line}: {message}")]
    Trace { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Audio(#[from] audio::AudioError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CueKind {
    VoiceActivity,
    Intensity,
    Loudness,
    Energy,
    Pitch,
    Jitter,
    Shimmer,
    VoiceBreaks,
    Harmonicity,
    SpeechRate,
    SpeechSegmentLength,
}

impl CueKind {
    pub const ALL: [CueKind; 11] = [
        CueKind::VoiceActivity,
        CueKind::Intensity,
        CueKind::Loudness,
        CueKind::Energy,
        CueKind::Pitch,
        CueKind::Jitter,
        CueKind::Shimmer,
        CueKind::VoiceBreaks,
        CueKind::Harmonicity,
        CueKind::SpeechRate,
        CueKind::SpeechSegmentLength,
    ];

    /// Cues sent as once-per-second packets.
    pub const CONTINUOUS: [CueKind; 8] = [
        CueKind::Energy,
        CueKind::Intensity,
        CueKind::Loudness,
        CueKind::Pitch,
        CueKind::SpeechRate,
        CueKind::Jitter,
        CueKind::Shimmer,
        CueKind::Harmonicity,
    ];

    pub fn is_continuous(self) -> bool {
        Self::CONTINUOUS.contains(&self)
    }
}

impl std::fmt::Display for CueKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CueEvent {
    pub t: f64,
    pub cue: CueKind,
    pub kind: EventKind,
    #[serde(default)]
    pub value: Option<f64>,
    #[serde(default)]
    pub duration: Option<f64>,
}

impl CueEvent {
    pub fn continuous(t: f64, cue: CueKind, value: f64) -> Self {
        CueEvent {
            t,
            cue,
            kind: EventKind::Continuous,
            value: Some(value),
            duration: None,
        }
    }

    pub fn discrete(t: f64, cue: CueKind, value: Option<f64>) -> Self {
        CueEvent {
            t,
            cue,
            kind: EventKind::Discrete,
            value,
            duration: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CueConfig {
    /// Optional discrete thresholds on continuous cues, in cue-native units.
    pub thresholds: BTreeMap<CueKind, f64>,
}

#[derive(Debug, Default, Clone)]
struct Mean {
    sum: f64,
    n: usize,
}

impl Mean {
    fn add(&mut self, v: f64) {
        self.sum += v;
        self.n += 1;
    }

    fn get(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

#[derive(Debug, Default, Clone)]
struct SecondAccumulator {
    power: Mean,
    intensity: Mean,
    loudness: Mean,
    pitch: Mean,
    harmonicity: Mean,
    jitter: Mean,
    shimmer: Mean,
    nuclei: usize,
}

fn check_order(last: Option<f64>, t: f64) -> Result<(), CueError> {
    match last {
        Some(previous) if t <= previous => Err(CueError::NonMonotonic { previous, time: t }),
        _ => Ok(()),
    }
}

/// Emits one packet per continuous cue for every completed second.
///
/// Seconds are aligned to whole seconds of stream time; a packet is stamped
/// with the end of its second.
#[derive(Debug, Clone)]
pub struct ContinuousEmitter {
    hop: f64,
    window: f64,
    current: Option<i64>,
    acc: SecondAccumulator,
    nuclei: NucleusDetector,
    last_t: Option<f64>,
}

impl ContinuousEmitter {
    pub fn new(features: &FeatureConfig) -> Self {
        ContinuousEmitter {
            hop: features.hop_seconds(),
            window: features.window_seconds(),
            current: None,
            acc: SecondAccumulator::default(),
            nuclei: NucleusDetector::new(features.syllable_prominence_db),
            last_t: None,
        }
    }

    pub fn push(&mut self, frame: &FrameFeatures) -> Result<Vec<CueEvent>, CueError> {
        check_order(self.last_t, frame.time)?;
        self.last_t = Some(frame.time);
        let mut out = Vec::new();
        let second = frame.time.floor() as i64;
        match self.current {
            Some(c) if second > c => {
                self.flush(c, &mut out);
                self.current = Some(second);
            }
            None => self.current = Some(second),
            _ => {}
        }

        let a = &mut self.acc;
        a.power.add(10f64.powf(frame.energy_db / 10.0));
        a.intensity.add(frame.intensity);
        a.loudness.add(frame.loudness);
        if frame.voiced {
            if let Some(f0) = frame.f0_hz {
                a.pitch.add(f0);
            }
            if let Some(h) = frame.hnr_db {
                a.harmonicity.add(h);
            }
            if let Some(j) = frame.jitter {
                a.jitter.add(j);
            }
            if let Some(s) = frame.shimmer {
                a.shimmer.add(s);
            }
        }
        if self.nuclei.push(frame).is_some() {
            a.nuclei += 1;
        }
        Ok(out)
    }

    fn flush(&mut self, second: i64, out: &mut Vec<CueEvent>) {
        let acc = std::mem::take(&mut self.acc);
        let t = (second + 1) as f64;
        let mut emit = |cue, v: Option<f64>| {
            if let Some(v) = v {
                out.push(CueEvent::continuous(t, cue, v));
            }
        };
        emit(CueKind::Energy, acc.power.get().map(audio::power_to_db));
        emit(CueKind::Intensity, acc.intensity.get());
        emit(CueKind::Loudness, acc.loudness.get());
        emit(CueKind::Pitch, acc.pitch.get());
        emit(CueKind::SpeechRate, Some(acc.nuclei as f64));
        emit(CueKind::Jitter, acc.jitter.get());
        emit(CueKind::Shimmer, acc.shimmer.get());
        emit(CueKind::Harmonicity, acc.harmonicity.get());
    }

    /// Ends a stream of unknown length. The last second is reported when
    /// the audio could not have held another whole frame before its end.
    pub fn finish(&mut self) -> Vec<CueEvent> {
        let end = self.last_t.map(|t| t + self.window + self.hop - 1e-9);
        self.finish_at(end)
    }

    /// Ends a stream whose audio lasts until `end` seconds. The last second
    /// is reported only if the audio covers it.
    pub fn finish_at(&mut self, end: Option<f64>) -> Vec<CueEvent> {
        let mut out = Vec::new();
        if self.nuclei.finish().is_some() {
            self.acc.nuclei += 1;
        }
        if let (Some(c), Some(end)) = (self.current.take(), end) {
            if end >= (c + 1) as f64 - 1e-9 {
                self.flush(c, &mut out);
            }
        }
        self.acc = SecondAccumulator::default();
        out
    }
}

/// Rising-edge trigger with hysteresis.
#[derive(Debug, Clone)]
struct ThresholdGate {
    cue: CueKind,
    threshold: f64,
    armed: bool,
}

impl ThresholdGate {
    fn observe(&mut self, t: f64, value: f64) -> Option<CueEvent> {
        if self.armed && value >= self.threshold {
            self.armed = false;
            return Some(CueEvent::discrete(t, self.cue, Some(value)));
        }
        if !self.armed && value < self.threshold - HYSTERESIS * self.threshold.abs() {
            self.armed = true;
        }
        None
    }
}

fn frame_value(frame: &FrameFeatures, cue: CueKind) -> Option<f64> {
    match cue {
        CueKind::Energy => Some(frame.energy_db),
        CueKind::Intensity => Some(frame.intensity),
        CueKind::Loudness => Some(frame.loudness),
        CueKind::Pitch => frame.f0_hz,
        CueKind::Harmonicity => frame.hnr_db,
        CueKind::Jitter => frame.jitter,
        CueKind::Shimmer => frame.shimmer,
        _ => None,
    }
}

/// Emits discrete cue occurrences.
#[derive(Debug, Clone)]
pub struct DiscreteEmitter {
    hop: f64,
    max_break: f64,
    gates: Vec<ThresholdGate>,
    speech_start: Option<f64>,
    voiced: bool,
    unvoiced_since: Option<f64>,
    last_t: Option<f64>,
}

impl DiscreteEmitter {
    pub fn new(features: &FeatureConfig, cues: &CueConfig) -> Result<Self, CueError> {
        let gates = cues
            .thresholds
            .iter()
            .map(|(&cue, &threshold)| {
                if cue.is_continuous() && threshold.is_finite() {
                    Ok(ThresholdGate {
                        cue,
                        threshold,
                        armed: true,
                    })
                } else {
                    Err(CueError::UnsupportedThreshold(cue))
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(DiscreteEmitter {
            hop: features.hop_seconds(),
            max_break: features.max_break_s,
            gates,
            speech_start: None,
            voiced: false,
            unvoiced_since: None,
            last_t: None,
        })
    }

    pub fn push(&mut self, frame: &FrameFeatures) -> Result<Vec<CueEvent>, CueError> {
        check_order(self.last_t, frame.time)?;
        self.last_t = Some(frame.time);
        let t = frame.time;
        let mut out = Vec::new();

        match (self.speech_start, frame.speech) {
            (None, true) => {
                out.push(CueEvent::discrete(t, CueKind::VoiceActivity, None));
                self.speech_start = Some(t);
            }
            (Some(start), false) => {
                out.push(segment_event(t, t - start));
                self.speech_start = None;
            }
            _ => {}
        }

        if frame.voiced && !self.voiced {
            if let Some(gap_start) = self.unvoiced_since {
                let gap = t - gap_start;
                if gap > 0.0 && gap < self.max_break {
                    out.push(CueEvent::discrete(t, CueKind::VoiceBreaks, Some(gap)));
                }
            }
        } else if !frame.voiced && self.voiced {
            self.unvoiced_since = Some(t);
        }
        self.voiced = frame.voiced;

        for gate in &mut self.gates {
            if let Some(v) = frame_value(frame, gate.cue) {
                out.extend(gate.observe(t, v));
            }
        }
        Ok(out)
    }

    /// Applies thresholds that are evaluated on continuous packets rather
    /// than frames (speech rate).
    pub fn observe_packet(&mut self, packet: &CueEvent) -> Option<CueEvent> {
        if packet.cue != CueKind::SpeechRate {
            return None;
        }
        let v = packet.value?;
        self.gates
            .iter_mut()
            .find(|g| g.cue == CueKind::SpeechRate)
            .and_then(|g| g.observe(packet.t, v))
    }

    /// Closes an open speech segment at the end of the stream.
    pub fn finish(&mut self) -> Vec<CueEvent> {
        let mut out = Vec::new();
        if let (Some(start), Some(last)) = (self.speech_start.take(), self.last_t) {
            let end = last + self.hop;
            out.push(segment_event(end, end - start));
        }
        out
    }
}

fn segment_event(t: f64, duration: f64) -> CueEvent {
    CueEvent {
        t,
        cue: CueKind::SpeechSegmentLength,
        kind: EventKind::Discrete,
        value: None,
        duration: Some(duration),
    }
}

/// Both emitters behind one push interface; output is time-ordered.
#[derive(Debug, Clone)]
pub struct CueStream {
    continuous: ContinuousEmitter,
    discrete: DiscreteEmitter,
}

impl CueStream {
    pub fn new(features: &FeatureConfig, cues: &CueConfig) -> Result<Self, CueError> {
        Ok(CueStream {
            continuous: ContinuousEmitter::new(features),
            discrete: DiscreteEmitter::new(features, cues)?,
        })
    }

    fn merge(&mut self, mut packets: Vec<CueEvent>, mut events: Vec<CueEvent>) -> Vec<CueEvent> {
        let extra: Vec<CueEvent> = packets
            .iter()
            .filter_map(|p| self.discrete.observe_packet(p))
            .collect();
        packets.extend(extra);
        events.extend(packets);
        events.sort_by(|a, b| a.t.total_cmp(&b.t));
        events
    }

    pub fn push(&mut self, frame: &FrameFeatures) -> Result<Vec<CueEvent>, CueError> {
        let packets = self.continuous.push(frame)?;
        let events = self.discrete.push(frame)?;
        Ok(self.merge(packets, events))
    }

    pub fn finish(&mut self) -> Vec<CueEvent> {
        let packets = self.continuous.finish();
        let events = self.discrete.finish();
        self.merge(packets, events)
    }

    /// Like [`CueStream::finish`] for audio known to end at `end` seconds.
    pub fn finish_at(&mut self, end: f64) -> Vec<CueEvent> {
        let packets = self.continuous.finish_at(Some(end));
        let events = self.discrete.finish();
        self.merge(packets, events)
    }
}

/// Runs a whole feature sequence through a fresh [`CueStream`].
pub fn cues_from_features(
    features: &[FrameFeatures],
    feature_config: &FeatureConfig,
    cue_config: &CueConfig,
) -> Result<Vec<CueEvent>, CueError> {
    let mut stream = CueStream::new(feature_config, cue_config)?;
    let mut out = Vec::new();
    for f in features {
        out.extend(stream.push(f)?);
    }
    out.extend(stream.finish());
    Ok(out)
}

/// Audio in, cue events out.
pub fn extract_cues(
    pcm: &PcmAudio,
    feature_config: &FeatureConfig,
    cue_config: &CueConfig,
) -> Result<Vec<CueEvent>, CueError> {
    let analysis = audio::analyze_pcm(pcm, feature_config)?;
    let mut stream = CueStream::new(feature_config, cue_config)?;
    let mut out = Vec::new();
    for f in &analysis.features {
        out.extend(stream.push(f)?);
    }
    out.extend(stream.finish_at(analysis.signal.duration()));
    Ok(out)
}

/// Separates interview turns inside a cue trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurnMarker {
    pub turn: usize,
    /// When the recruiter finished asking, on the trace clock.
    pub question_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TraceLine {
    Turn(TurnMarker),
    Event(CueEvent),
}

pub fn write_trace<W: Write>(mut w: W, events: &[CueEvent]) -> Result<(), CueError> {
    for e in events {
        serde_json::to_writer(&mut w, e).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses a JSONL trace. Event times must not decrease within a turn.
/// Blank lines are skipped; line numbers in errors are 1-based.
pub fn read_trace<R: BufRead>(r: R) -> Result<Vec<TraceLine>, CueError> {
    let mut out = Vec::new();
    let mut last_t: Option<f64> = None;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item: TraceLine = serde_json::from_str(&line).map_err(|e| CueError::Trace {
            line: i + 1,
            message: e.to_string(),
        })?;
        match &item {
            TraceLine::Event(e) => {
                if !e.t.is_finite() || last_t.is_some_and(|p| e.t < p) {
                    return Err(CueError::Trace {
                        line: i + 1,
                        message: format!("event time {} out of order", e.t),
                    });
                }
                last_t = Some(e.t);
            }
            TraceLine::Turn(_) => last_t = None,
        }
        out.push(item);
    }
    Ok(out)
}
