//! Voice-quality measures built on cycle-by-cycle peak marks.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{FeatureConfig, FrameFeatures, Signal};

/// Search window around the expected next peak, as a fraction of the period.
const CYCLE_SEARCH: f64 = 0.2;

/// A maximal run of voiced frames with its pitch periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoicedSegment {
    pub start: f64,
    pub end: f64,
    /// Consecutive period durations in seconds.
    pub period_sequence: Vec<f64>,
    /// Peak amplitude at the start of each period.
    pub peak_amplitudes: Vec<f64>,
}

/// Peak positions (fractional sample index) and amplitudes, one per glottal
/// cycle. `period_at` gives the expected period in samples near a position.
pub(crate) fn mark_cycles(
    samples: &[f32],
    range: Range<usize>,
    period_at: impl Fn(usize) -> f64,
) -> Vec<(f64, f64)> {
    let end = range.end.min(samples.len());
    if range.start >= end {
        return Vec::new();
    }
    let argmax = |a: usize, b: usize| -> usize {
        (a..b)
            .max_by(|&i, &j| samples[i].total_cmp(&samples[j]).then(j.cmp(&i)))
            .unwrap_or(a)
    };
    let refine = |i: usize| -> (f64, f64) {
        if i == 0 || i + 1 >= samples.len() {
            return (i as f64, samples[i] as f64);
        }
        let (l, c, r) = (
            samples[i - 1] as f64,
            samples[i] as f64,
            samples[i + 1] as f64,
        );
        let denom = l - 2.0 * c + r;
        if denom.abs() < 1e-15 {
            return (i as f64, c);
        }
        let off = (0.5 * (l - r) / denom).clamp(-0.5, 0.5);
        (i as f64 + off, c - 0.25 * (l - r) * off)
    };

    let first_period = period_at(range.start).max(2.0);
    let first_end = (range.start + first_period.ceil() as usize).min(end);
    let mut p = argmax(range.start, first_end);
    let mut marks = vec![refine(p)];
    loop {
        let t = period_at(p).max(2.0);
        let a = p + ((1.0 - CYCLE_SEARCH) * t).floor() as usize;
        let b = p + ((1.0 + CYCLE_SEARCH) * t).ceil() as usize + 1;
        if b > end || a <= p {
            break;
        }
        p = argmax(a, b);
        marks.push(refine(p));
    }
    marks
}

/// Builds a segment from cycle marks, keeping the longest chain of
/// consecutive periods inside the configured F0 range.
pub(crate) fn segment_from_cycles(
    start: f64,
    end: f64,
    marks: &[(f64, f64)],
    sample_rate: u32,
    config: &FeatureConfig,
) -> VoicedSegment {
    let sr = sample_rate as f64;
    let (min_p, max_p) = (1.0 / config.f0_max, 1.0 / config.f0_min);
    let mut best: Range<usize> = 0..0;
    let mut run_start = 0;
    for i in 0..marks.len().saturating_sub(1) {
        let period = (marks[i + 1].0 - marks[i].0) / sr;
        if period < min_p || period > max_p {
            run_start = i + 1;
        } else if i + 1 - run_start > best.len() {
            best = run_start..i + 1;
        }
    }
    let period_sequence = best
        .clone()
        .map(|i| (marks[i + 1].0 - marks[i].0) / sr)
        .collect();
    let peak_amplitudes = best.map(|i| marks[i].1).collect();
    VoicedSegment {
        start,
        end,
        period_sequence,
        peak_amplitudes,
    }
}

/// Groups voiced frames into maximal runs and marks the pitch periods of
/// each run on the signal.
pub fn extract_voiced_segments(
    features: &[FrameFeatures],
    signal: &Signal,
    config: &FeatureConfig,
) -> Vec<VoicedSegment> {
    let sr = signal.sample_rate as f64;
    let window = config.window_seconds();
    let mut segments = Vec::new();
    let mut i = 0;
    while i < features.len() {
        if !features[i].voiced {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < features.len() && features[j + 1].voiced {
            j += 1;
        }
        let run = &features[i..=j];
        let start = run[0].time;
        let end = run[run.len() - 1].time + window;
        let range =
            (start * sr).round() as usize..((end * sr).round() as usize).min(signal.samples.len());
        let period_at = |pos: usize| {
            let t = pos as f64 / sr;
            let k = run
                .partition_point(|f| f.time + window / 2.0 <= t)
                .min(run.len() - 1);
            sr / run[k].f0_hz.expect("voiced frames carry f0")
        };
        let marks = mark_cycles(&signal.samples, range, period_at);
        segments.push(segment_from_cycles(
            start,
            end,
            &marks,
            signal.sample_rate,
            config,
        ));
        i = j + 1;
    }
    segments
}

/// Mean absolute difference of consecutive values over their mean.
fn relative_perturbation(values: &[f64]) -> Option<f64> {
    if values.len() < 3 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean <= 0.0 || !mean.is_finite() {
        return None;
    }
    let diff =
        values.windows(2).map(|w| (w[0] - w[1]).abs()).sum::<f64>() / (values.len() - 1) as f64;
    Some(diff / mean)
}

/// Local jitter (ratio). Needs at least three periods.
pub fn compute_jitter(segment: &VoicedSegment) -> Option<f64> {
    relative_perturbation(&segment.period_sequence)
}

/// Local shimmer (ratio). Needs at least three periods and a non-zero mean
/// amplitude.
pub fn compute_shimmer(segment: &VoicedSegment) -> Option<f64> {
    relative_perturbation(&segment.peak_amplitudes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoiceBreaks {
    pub count: usize,
    /// Total break time over total voiced time.
    pub fraction: f64,
}

/// Counts voicing gaps shorter than `max_break_s` between consecutive
/// segments inside `span`. Longer gaps are pauses.
pub fn count_voice_breaks(
    segments: &[VoicedSegment],
    span: Range<f64>,
    max_break_s: f64,
) -> VoiceBreaks {
    let mut clipped: Vec<(f64, f64)> = segments
        .iter()
        .map(|s| (s.start.max(span.start), s.end.min(span.end)))
        .filter(|(a, b)| b > a)
        .collect();
    clipped.sort_by(|a, b| a.0.total_cmp(&b.0));
    let voiced: f64 = clipped.iter().map(|(a, b)| b - a).sum();
    let (mut count, mut gap_time) = (0, 0.0);
    for w in clipped.windows(2) {
        let gap = w[1].0 - w[0].1;
        if gap > 0.0 && gap < max_break_s {
            count += 1;
            gap_time += gap;
        }
    }
    VoiceBreaks {
        count,
        fraction: if voiced > 0.0 { gap_time / voiced } else { 0.0 },
    }
}
