//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use recruiter_core::cues::{CueEvent, CueKind, EventKind};
use recruiter_core::scenario::Scenario;
use recruiter_core::session::TurnInput;

pub const SR: u32 = 16_000;

/// An opening question leading either to a closing question or into a loop
/// over four topic questions. Ties pick the loop, so sessions run until the
/// turn cap.
pub fn looping_scenario() -> Scenario {
    Scenario::parse(
        r#"{
  "topics": ["motivation", "skills", "teamwork", "stress", "closing"],
  "entry": "intro",
  "nodes": [
    {"id": "intro", "text": "Tell me about yourself.", "topics": ["motivation"], "difficulty": 0.1, "next": ["skills", "bye"]},
    {"id": "skills", "text": "What are you good at?", "topics": ["skills"], "difficulty": 0.4, "next": ["team", "stress"]},
    {"id": "team", "text": "Describe a team conflict.", "topics": ["teamwork", "stress"], "difficulty": 0.7, "next": ["stress", "motivation"]},
    {"id": "stress", "text": "How do you handle pressure?", "topics": ["stress"], "difficulty": 0.9, "next": ["motivation", "skills"]},
    {"id": "motivation", "text": "Why this company?", "topics": ["motivation", "skills"], "difficulty": 0.3, "next": ["skills", "team"]},
    {"id": "bye", "text": "Any questions for us?", "topics": ["closing"], "difficulty": 0.0, "next": []}
  ]
}"#,
    )
    .unwrap()
}

/// Cue events of an answer: `speech` seconds of talk starting `latency`
/// seconds after the question, at loudness `db` (dB re full scale).
pub fn answer(latency: f64, speech: f64, db: f64, pitch_spread: f64) -> TurnInput {
    let question_end = 1.0;
    let start = question_end + latency;
    let loudness = 10f64.powf(db * 0.3 / 20.0);
    let mut events = vec![CueEvent::discrete(start, CueKind::VoiceActivity, None)];
    let mut t = start.ceil();
    while t <= start + speech {
        let side = if t as i64 % 2 == 0 { 1.0 } else { -1.0 };
        events.push(CueEvent::continuous(t, CueKind::Loudness, loudness));
        events.push(CueEvent::continuous(
            t,
            CueKind::Pitch,
            140.0 + side * pitch_spread,
        ));
        events.push(CueEvent::continuous(t, CueKind::SpeechRate, 4.0));
        events.push(CueEvent::continuous(t, CueKind::Jitter, 0.01));
        events.push(CueEvent::continuous(t, CueKind::Shimmer, 0.05));
        t += 1.0;
    }
    events.push(CueEvent {
        t: start + speech,
        cue: CueKind::SpeechSegmentLength,
        kind: EventKind::Discrete,
        value: None,
        duration: Some(speech),
    });
    TurnInput {
        events,
        question_end,
    }
}

/// A deterministic session: a stretch of poor answers that sours the
/// recruiter's mood, a stretch of good ones, then a mix with silences.
pub fn scripted_answers(n: usize) -> Vec<TurnInput> {
    (0..n)
        .map(|i| match (i, i % 7) {
            (0..3, _) => answer(0.7, 9.0, -21.0 - i as f64, 40.0),
            (3..18, k) if k % 2 == 0 => TurnInput::silent(),
            (3..18, _) => answer(3.5, 1.2, -35.0, 2.0),
            (18..33, k) => answer(0.6, 12.0 + k as f64, -22.0, 40.0),
            (_, 0 | 3) => answer(0.6, 9.0, -20.0 - (i % 3) as f64, 40.0),
            (_, 1) => answer(3.5, 1.2, -35.0, 2.0),
            (_, 2) => answer(0.9, 14.0, -22.0, 25.0),
            (_, 4) => TurnInput::silent(),
            (_, 5) => answer(0.3, 25.0, -18.0, 60.0),
            _ => answer(1.8, 4.0, -28.0, 10.0),
        })
        .collect()
}

/// Syllabic 150 Hz voice with vibrato, `seconds` long.
pub fn voice(seconds: f64) -> Vec<f32> {
    let n = (seconds * SR as f64) as usize;
    let mut phase = 0.0;
    (0..n)
        .map(|i| {
            let t = i as f64 / SR as f64;
            phase += 2.0 * PI * (150.0 + 8.0 * (2.0 * PI * 4.0 * t).sin()) / SR as f64;
            let env = 0.35 + 0.65 * (PI * 3.0 * t).sin().abs();
            (0.3 * env * (phase.sin() + 0.3 * (2.0 * phase).sin())) as f32
        })
        .collect()
}

/// Belief and desire updates written out over plain vectors.
pub struct MindOracle {
    pub beliefs: Vec<f64>,
    pub desires: Vec<f64>,
}

impl MindOracle {
    pub fn new(topics: usize) -> Self {
        MindOracle {
            beliefs: vec![0.0; topics],
            desires: vec![0.5; topics],
        }
    }

    pub fn turn(
        &mut self,
        topics: &[usize],
        negative: bool,
        p_d: f64,
        alpha: f64,
        all_topics: bool,
    ) {
        for &t in topics {
            self.beliefs[t] = (self.beliefs[t] + alpha * p_d).clamp(-1.0, 1.0);
        }
        let scope: Vec<usize> = if all_topics {
            (0..self.desires.len()).collect()
        } else {
            topics.to_vec()
        };
        for t in scope {
            let d = if negative == (p_d < 0.0) {
                self.desires[t] + alpha * p_d.abs()
            } else {
                self.desires[t] - alpha * p_d.abs()
            };
            self.desires[t] = d.clamp(0.0, 1.0);
        }
    }
}

pub fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}
