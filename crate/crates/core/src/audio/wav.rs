//! 16-bit PCM WAV input and output.

use std::path::Path;

use super::{AudioError, PcmAudio};

/// Reads a 16-bit integer PCM WAV file. Channel count is preserved;
/// multi-channel audio is rejected later by [`super::prepare`].
pub fn read_wav(path: &Path) -> Result<PcmAudio, AudioError> {
    let reader = hound::WavReader::open(path)
        .map_err(|e| AudioError::Wav(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(AudioError::Config(format!(
            "{}: expected 16-bit PCM, got {} bits {:?}",
            path.display(),
            spec.bits_per_sample,
            spec.sample_format
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f32 / 32768.0))
        .collect::<Result<Vec<f32>, _>>()
        .map_err(|e| AudioError::Wav(format!("{}: {e}", path.display())))?;
    Ok(PcmAudio {
        samples,
        sample_rate: spec.sample_rate,
        channels: spec.channels,
    })
}

/// Writes mono samples in [-1, 1] as 16-bit PCM.
pub fn write_wav(path: &Path, samples: &[f32], sample_rate: u32) -> Result<(), AudioError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let err = |e: hound::Error| AudioError::Wav(format!("{}: {e}", path.display()));
    let mut writer = hound::WavWriter::create(path, spec).map_err(err)?;
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(v).map_err(err)?;
    }
    writer.finalize().map_err(err)
}
