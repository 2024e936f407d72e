//! Syllable-rate estimation from energy peaks.

use super::{FeatureConfig, FrameFeatures, SILENCE_DB};

const SMOOTHING_FRAMES: usize = 3;

/// Streaming syllable-nucleus detector.
///
/// Frame energy (silence outside speech) is smoothed with a short moving
/// average; a nucleus is a local maximum that rises at least `prominence_db`
/// above the preceding dip and is confirmed once the energy falls at least
/// that far below it. The stream is assumed to start and end in silence.
#[derive(Debug, Clone)]
pub struct NucleusDetector {
    prominence_db: f64,
    recent: [f64; SMOOTHING_FRAMES],
    filled: usize,
    looking_for_max: bool,
    max: f64,
    max_time: f64,
    min: f64,
    last_time: f64,
}

impl NucleusDetector {
    pub fn new(prominence_db: f64) -> Self {
        NucleusDetector {
            prominence_db,
            recent: [SILENCE_DB; SMOOTHING_FRAMES],
            filled: 0,
            looking_for_max: true,
            max: SILENCE_DB,
            max_time: 0.0,
            min: SILENCE_DB,
            last_time: 0.0,
        }
    }

    fn frame_level(frame: &FrameFeatures) -> f64 {
        if frame.speech {
            frame.energy_db
        } else {
            SILENCE_DB
        }
    }

    /// Feeds one frame; returns the time of a nucleus confirmed by it.
    pub fn push(&mut self, frame: &FrameFeatures) -> Option<f64> {
        self.last_time = frame.time;
        self.push_level(frame.time, Self::frame_level(frame))
    }

    fn push_level(&mut self, time: f64, level: f64) -> Option<f64> {
        self.recent[self.filled % SMOOTHING_FRAMES] = level;
        self.filled += 1;
        let n = self.filled.min(SMOOTHING_FRAMES);
        let v = self.recent[..n].iter().sum::<f64>() / n as f64;

        if v > self.max {
            self.max = v;
            self.max_time = time;
        }
        if v < self.min {
            self.min = v;
        }
        if self.looking_for_max {
            if v < self.max - self.prominence_db && self.max - self.min >= self.prominence_db {
                let peak = self.max_time;
                self.min = v;
                self.looking_for_max = false;
                return Some(peak);
            }
        } else if v > self.min + self.prominence_db {
            self.max = v;
            self.max_time = time;
            self.looking_for_max = true;
        }
        None
    }

    /// Closes the stream with silence and returns any nucleus that completes.
    pub fn finish(&mut self) -> Option<f64> {
        let mut found = None;
        for _ in 0..SMOOTHING_FRAMES {
            if let Some(t) = self.push_level(self.last_time, SILENCE_DB) {
                found = Some(t);
            }
        }
        found
    }
}

/// Syllables per second over `span_s` seconds of features.
pub fn estimate_speech_rate(
    features: &[FrameFeatures],
    span_s: f64,
    config: &FeatureConfig,
) -> f64 {
    if span_s <= 0.0 {
        return 0.0;
    }
    let mut det = NucleusDetector::new(config.syllable_prominence_db);
    let mut count = features.iter().filter_map(|f| det.push(f)).count();
    count += usize::from(det.finish().is_some());
    count as f64 / span_s
}
