//! Frame-based acoustic analysis of mono speech.
//!
//! Input audio is validated, resampled to a fixed 16 kHz analysis rate and cut
//! into overlapping frames. Each frame yields a [`FrameFeatures`] record with
//! energy-based measures, a voice-activity decision and, for voiced frames,
//! F0, harmonicity and short-window jitter/shimmer.
//!
//! Everything here is a pure function of its inputs and the [`FeatureConfig`].

mod pitch;
mod quality;
mod rate;
mod resample;
mod wav;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use pitch::{compute_hnr, estimate_pitch, hnr_from_correlation, PitchEstimate};
pub use quality::{
    compute_jitter, compute_shimmer, count_voice_breaks, extract_voiced_segments, VoiceBreaks,
    VoicedSegment,
};
pub use rate::{estimate_speech_rate, NucleusDetector};
pub use wav::{read_wav, write_wav};

/// Sample rate every signal is converted to before analysis.
pub const ANALYSIS_RATE: u32 = 16_000;

/// Energy reported for digital silence, in dBFS.
pub const SILENCE_DB: f64 = -120.0;

const MIN_INPUT_RATE: u32 = 8_000;
const MAX_INPUT_RATE: u32 = 48_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AudioError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("wav error: {0}")]
    Wav(String),
}

/// Tunables for the acoustic front end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub window_ms: f64,
    pub hop_ms: f64,
    pub f0_min: f64,
    pub f0_max: f64,
    /// Minimum normalized autocorrelation peak for a frame to count as periodic.
    pub voicing_threshold: f64,
    pub vad_margin_db: f64,
    pub noise_floor_db: f64,
    /// Zero crossings per sample above which an aperiodic frame is treated as noise.
    pub zcr_cutoff: f64,
    pub max_break_s: f64,
    pub syllable_prominence_db: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            window_ms: 32.0,
            hop_ms: 16.0,
            f0_min: 60.0,
            f0_max: 500.0,
            voicing_threshold: 0.45,
            vad_margin_db: 10.0,
            noise_floor_db: -60.0,
            zcr_cutoff: 0.3,
            max_break_s: 0.3,
            syllable_prominence_db: 2.0,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), AudioError> {
        let positive = [
            ("window_ms", self.window_ms),
            ("hop_ms", self.hop_ms),
            ("f0_min", self.f0_min),
            ("f0_max", self.f0_max),
            ("max_break_s", self.max_break_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(AudioError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.hop_ms > self.window_ms {
            return Err(AudioError::Config(
                "hop_ms must not exceed window_ms".into(),
            ));
        }
        if self.f0_min >= self.f0_max {
            return Err(AudioError::Config("f0_min must be below f0_max".into()));
        }
        if self.f0_max * 2.0 > ANALYSIS_RATE as f64 / 2.0 {
            return Err(AudioError::Config(
                "f0_max too high for the analysis rate".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.voicing_threshold) {
            return Err(AudioError::Config(
                "voicing_threshold must be in [0, 1]".into(),
            ));
        }
        if !(self.vad_margin_db >= 0.0 && self.syllable_prominence_db > 0.0) {
            return Err(AudioError::Config("margins must be non-negative".into()));
        }
        Ok(())
    }

    pub fn window_len(&self) -> usize {
        ms_to_samples(self.window_ms)
    }

    pub fn hop_len(&self) -> usize {
        ms_to_samples(self.hop_ms).max(1)
    }

    pub fn hop_seconds(&self) -> f64 {
        self.hop_len() as f64 / ANALYSIS_RATE as f64
    }

    pub fn window_seconds(&self) -> f64 {
        self.window_len() as f64 / ANALYSIS_RATE as f64
    }
}

fn ms_to_samples(ms: f64) -> usize {
    (ms * ANALYSIS_RATE as f64 / 1000.0).round() as usize
}

/// Raw PCM as it arrives from a file or device, interleaved if multi-channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PcmAudio {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub channels: u16,
}

impl PcmAudio {
    pub fn mono(samples: Vec<f32>, sample_rate: u32) -> Self {
        PcmAudio {
            samples,
            sample_rate,
            channels: 1,
        }
    }
}

/// Mono audio at [`ANALYSIS_RATE`], amplitudes in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl Signal {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Samples covering `[start, end)` seconds, clipped to the signal.
    pub fn slice(&self, start: f64, end: f64) -> &[f32] {
        let sr = self.sample_rate as f64;
        let a = ((start * sr).round().max(0.0) as usize).min(self.samples.len());
        let b = ((end * sr).round().max(0.0) as usize).clamp(a, self.samples.len());
        &self.samples[a..b]
    }
}

/// Checks the input contract and converts to the analysis rate.
pub fn prepare(pcm: &PcmAudio) -> Result<Signal, AudioError> {
    if pcm.channels != 1 {
        return Err(AudioError::Config(format!(
            "expected mono audio, got {} channels",
            pcm.channels
        )));
    }
    if !(MIN_INPUT_RATE..=MAX_INPUT_RATE).contains(&pcm.sample_rate) {
        return Err(AudioError::Config(format!(
            "unsupported sample rate {} Hz (expected {MIN_INPUT_RATE}..={MAX_INPUT_RATE})",
            pcm.sample_rate
        )));
    }
    let samples = resample::to_rate(&pcm.samples, pcm.sample_rate, ANALYSIS_RATE);
    Ok(Signal {
        samples,
        sample_rate: ANALYSIS_RATE,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioFrame {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub start_time: f64,
}

/// Number of full frames that fit in `len` samples.
pub fn frame_count(len: usize, config: &FeatureConfig) -> usize {
    let (win, hop) = (config.window_len(), config.hop_len());
    if len < win || win == 0 {
        0
    } else {
        (len - win) / hop + 1
    }
}

/// Splits audio into fixed-size frames advancing by one hop. A trailing
/// partial frame is dropped.
pub fn frame_stream(pcm: &PcmAudio, config: &FeatureConfig) -> Result<Vec<AudioFrame>, AudioError> {
    config.validate()?;
    let signal = prepare(pcm)?;
    Ok(frames(&signal, config))
}

pub fn frames(signal: &Signal, config: &FeatureConfig) -> Vec<AudioFrame> {
    let (win, hop) = (config.window_len(), config.hop_len());
    (0..frame_count(signal.samples.len(), config))
        .map(|i| AudioFrame {
            samples: signal.samples[i * hop..i * hop + win].to_vec(),
            sample_rate: signal.sample_rate,
            start_time: (i * hop) as f64 / signal.sample_rate as f64,
        })
        .collect()
}

/// The pitch analysis window for frame `index`: twice the frame length,
/// centred on the frame, clipped at the signal edges.
pub fn pitch_window(signal: &Signal, index: usize, config: &FeatureConfig) -> AudioFrame {
    let (win, hop) = (config.window_len(), config.hop_len());
    let centre = index * hop + win / 2;
    let start = centre.saturating_sub(win);
    let end = (centre + win).min(signal.samples.len());
    AudioFrame {
        samples: signal.samples[start..end].to_vec(),
        sample_rate: signal.sample_rate,
        start_time: start as f64 / signal.sample_rate as f64,
    }
}

/// Per-frame acoustic measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFeatures {
    /// Frame start, seconds from the start of the signal.
    pub time: f64,
    /// Voice-activity decision.
    pub speech: bool,
    /// Speech with a detected pitch.
    pub voiced: bool,
    pub energy_db: f64,
    /// Linear RMS.
    pub intensity: f64,
    /// RMS raised to the 0.3 power.
    pub loudness: f64,
    pub zcr: f64,
    pub periodicity: f64,
    pub f0_hz: Option<f64>,
    pub hnr_db: Option<f64>,
    pub jitter: Option<f64>,
    pub shimmer: Option<f64>,
}

pub fn mean_square(samples: &[f32]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples
        .iter()
        .map(|&s| (s as f64) * (s as f64))
        .sum::<f64>()
        / samples.len() as f64
}

/// Energy in dB relative to full scale, floored at [`SILENCE_DB`].
pub fn energy_db(samples: &[f32]) -> f64 {
    power_to_db(mean_square(samples))
}

pub(crate) fn power_to_db(power: f64) -> f64 {
    if power <= 0.0 {
        SILENCE_DB
    } else {
        (10.0 * power.log10()).max(SILENCE_DB)
    }
}

/// Zero crossings per sample.
pub fn zero_crossing_rate(samples: &[f32]) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let crossings = samples
        .windows(2)
        .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
        .count();
    crossings as f64 / (samples.len() - 1) as f64
}

fn speech_like(
    energy_db: f64,
    zcr: f64,
    periodic: bool,
    noise_floor_db: f64,
    config: &FeatureConfig,
) -> bool {
    energy_db > noise_floor_db + config.vad_margin_db && (zcr < config.zcr_cutoff || periodic)
}

/// Energy gate above the noise floor combined with a speech-likeness test
/// (low zero-crossing rate or detectable periodicity).
pub fn detect_voice_activity(
    frame: &AudioFrame,
    noise_floor_db: f64,
    config: &FeatureConfig,
) -> bool {
    let e = energy_db(&frame.samples);
    if e <= noise_floor_db + config.vad_margin_db {
        return false;
    }
    let zcr = zero_crossing_rate(&frame.samples);
    let periodic = zcr >= config.zcr_cutoff && estimate_pitch(frame, config).f0_hz.is_some();
    speech_like(e, zcr, periodic, noise_floor_db, config)
}

/// Noise floor estimate: the 10th percentile of frame energies.
pub fn estimate_noise_floor(features: &[FrameFeatures]) -> Option<f64> {
    if features.is_empty() {
        return None;
    }
    let mut energies: Vec<f64> = features.iter().map(|f| f.energy_db).collect();
    energies.sort_by(f64::total_cmp);
    Some(energies[(energies.len() - 1) / 10])
}

/// Runs the full per-frame analysis over a prepared signal.
pub fn analyze(signal: &Signal, config: &FeatureConfig) -> Result<Vec<FrameFeatures>, AudioError> {
    config.validate()?;
    let (win, hop) = (config.window_len(), config.hop_len());
    let n = frame_count(signal.samples.len(), config);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let samples = &signal.samples[i * hop..i * hop + win];
        let time = (i * hop) as f64 / signal.sample_rate as f64;
        let ms = mean_square(samples);
        let energy = power_to_db(ms);
        let intensity = ms.sqrt();
        let zcr = zero_crossing_rate(samples);

        let gate = energy > config.noise_floor_db + config.vad_margin_db;
        let window = pitch_window(signal, i, config);
        let pitch = if gate {
            estimate_pitch(&window, config)
        } else {
            PitchEstimate::unvoiced(0.0)
        };
        let speech = speech_like(
            energy,
            zcr,
            pitch.f0_hz.is_some(),
            config.noise_floor_db,
            config,
        );
        let f0 = if speech { pitch.f0_hz } else { None };

        let (mut hnr, mut jitter, mut shimmer) = (None, None, None);
        if let Some(f0) = f0 {
            hnr = compute_hnr(&window, f0, config).ok();
            let cycles = quality::mark_cycles(&window.samples, 0..window.samples.len(), |_| {
                window.sample_rate as f64 / f0
            });
            let seg = quality::segment_from_cycles(0.0, 0.0, &cycles, window.sample_rate, config);
            jitter = compute_jitter(&seg);
            shimmer = compute_shimmer(&seg);
        }

        out.push(FrameFeatures {
            time,
            speech,
            voiced: f0.is_some(),
            energy_db: energy,
            intensity,
            loudness: intensity.powf(0.3),
            zcr,
            periodicity: pitch.strength,
            f0_hz: f0,
            hnr_db: hnr,
            jitter,
            shimmer,
        });
    }
    Ok(out)
}

/// Prepared signal together with its frame features.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub signal: Signal,
    pub features: Vec<FrameFeatures>,
}

pub fn analyze_pcm(pcm: &PcmAudio, config: &FeatureConfig) -> Result<Analysis, AudioError> {
    config.validate()?;
    let signal = prepare(pcm)?;
    let features = analyze(&signal, config)?;
    Ok(Analysis { signal, features })
}
