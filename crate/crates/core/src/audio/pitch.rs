//! Autocorrelation pitch and harmonicity.
//!
//! The correlation at lag `τ` is normalized by the energies of the two
//! overlapping stretches, so a strictly periodic signal scores 1.0 at its
//! period and at every multiple of it. Picking the *smallest* lag whose peak
//! is close to the best one avoids sub-harmonic (octave-down) errors.

use super::{AudioError, AudioFrame, FeatureConfig};

/// A peak must reach this fraction of the best peak to be preferred as a
/// shorter-lag candidate.
const PEAK_ACCEPT_RATIO: f64 = 0.9;
const MAX_HNR_DB: f64 = 40.0;
const MIN_ENERGY: f64 = 1e-12;
const EDGE_SLACK: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchEstimate {
    pub f0_hz: Option<f64>,
    /// Normalized autocorrelation at the selected peak, in [0, 1].
    pub strength: f64,
}

impl PitchEstimate {
    pub(crate) fn unvoiced(strength: f64) -> Self {
        PitchEstimate {
            f0_hz: None,
            strength: strength.clamp(0.0, 1.0),
        }
    }
}

pub(crate) struct Autocorrelation {
    x: Vec<f64>,
    /// cum[i] = sum of x[j]^2 for j < i
    cum: Vec<f64>,
}

impl Autocorrelation {
    pub(crate) fn new(samples: &[f32]) -> Self {
        let mean = samples.iter().map(|&s| s as f64).sum::<f64>() / samples.len().max(1) as f64;
        let x: Vec<f64> = samples.iter().map(|&s| s as f64 - mean).collect();
        let mut cum = Vec::with_capacity(x.len() + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for v in &x {
            acc += v * v;
            cum.push(acc);
        }
        Autocorrelation { x, cum }
    }

    pub(crate) fn len(&self) -> usize {
        self.x.len()
    }

    pub(crate) fn total_energy(&self) -> f64 {
        self.cum[self.x.len()]
    }

    pub(crate) fn at(&self, lag: usize) -> f64 {
        let n = self.x.len();
        if lag >= n {
            return 0.0;
        }
        let head = self.cum[n - lag];
        let tail = self.cum[n] - self.cum[lag];
        let denom = (head * tail).sqrt();
        if denom <= MIN_ENERGY {
            return 0.0;
        }
        let dot: f64 = self.x[..n - lag]
            .iter()
            .zip(&self.x[lag..])
            .map(|(a, b)| a * b)
            .sum();
        dot / denom
    }
}

/// Vertex of the parabola through three equally spaced points, as
/// (offset from the centre in [-0.5, 0.5], interpolated value).
fn parabolic(left: f64, centre: f64, right: f64) -> (f64, f64) {
    let denom = left - 2.0 * centre + right;
    if denom.abs() < 1e-15 {
        return (0.0, centre);
    }
    let offset = (0.5 * (left - right) / denom).clamp(-0.5, 0.5);
    (offset, centre - 0.25 * (left - right) * offset)
}

/// Estimates F0 from the frame's normalized autocorrelation. Returns no F0
/// when the best peak falls below the voicing threshold.
pub fn estimate_pitch(frame: &AudioFrame, config: &FeatureConfig) -> PitchEstimate {
    let ac = Autocorrelation::new(&frame.samples);
    let n = ac.len();
    if n < 4 || ac.total_energy() <= MIN_ENERGY {
        return PitchEstimate::unvoiced(0.0);
    }
    let sr = frame.sample_rate as f64;
    let min_lag = ((sr / config.f0_max).floor() as usize).max(2);
    let max_lag = ((sr / config.f0_min).ceil() as usize).min(n / 2);
    if max_lag <= min_lag {
        return PitchEstimate::unvoiced(0.0);
    }

    let lo = min_lag - 1;
    let r: Vec<f64> = (lo..=max_lag + 1).map(|lag| ac.at(lag)).collect();
    let at = |lag: usize| r[lag - lo];

    let mut peaks: Vec<(f64, f64)> = Vec::new(); // (fractional lag, value)
    for lag in min_lag..=max_lag {
        let (l, c, rr) = (at(lag - 1), at(lag), at(lag + 1));
        if c > l && c >= rr {
            let (off, val) = parabolic(l, c, rr);
            peaks.push((lag as f64 + off, val));
        }
    }
    let best = peaks.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if peaks.is_empty() || best < config.voicing_threshold {
        return PitchEstimate::unvoiced(best.max(0.0));
    }
    let &(lag, value) = peaks
        .iter()
        .find(|p| p.1 >= PEAK_ACCEPT_RATIO * best)
        .expect("best peak satisfies its own ratio");
    // Interpolation can land a hair outside the search range at its edges.
    let f0 = sr / lag;
    if f0 < config.f0_min * (1.0 - EDGE_SLACK) || f0 > config.f0_max * (1.0 + EDGE_SLACK) {
        return PitchEstimate::unvoiced(value);
    }
    let f0 = f0.clamp(config.f0_min, config.f0_max);
    PitchEstimate {
        f0_hz: Some(f0),
        strength: value.clamp(0.0, 1.0),
    }
}

/// Harmonics-to-noise ratio in dB for a normalized correlation `r`, capped
/// to [0, 40] dB.
pub fn hnr_from_correlation(r: f64) -> f64 {
    if r.is_nan() || r <= 0.0 {
        return 0.0;
    }
    if r >= 1.0 {
        return MAX_HNR_DB;
    }
    (10.0 * (r / (1.0 - r)).log10()).clamp(0.0, MAX_HNR_DB)
}

/// HNR from the autocorrelation peak nearest the period of `f0_hz`.
pub fn compute_hnr(
    frame: &AudioFrame,
    f0_hz: f64,
    config: &FeatureConfig,
) -> Result<f64, AudioError> {
    if !f0_hz.is_finite() || f0_hz < config.f0_min || f0_hz > config.f0_max {
        return Err(AudioError::Domain(format!(
            "harmonicity needs a voiced frame, got f0 {f0_hz}"
        )));
    }
    let ac = Autocorrelation::new(&frame.samples);
    if ac.total_energy() <= MIN_ENERGY {
        return Err(AudioError::Domain("harmonicity of a silent frame".into()));
    }
    let period = frame.sample_rate as f64 / f0_hz;
    let lo = (period.floor() as usize).saturating_sub(1).max(1);
    let hi = period.ceil() as usize + 1;
    if hi + 1 >= ac.len() {
        return Err(AudioError::Domain(
            "frame shorter than one pitch period".into(),
        ));
    }
    let mut best = (lo, f64::NEG_INFINITY);
    for lag in lo..=hi {
        let v = ac.at(lag);
        if v > best.1 {
            best = (lag, v);
        }
    }
    let lag = best.0;
    let r = if lag > 1 {
        parabolic(ac.at(lag - 1), best.1, ac.at(lag + 1)).1
    } else {
        best.1
    };
    Ok(hnr_from_correlation(r))
}
