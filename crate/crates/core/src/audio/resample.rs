//! Band-limited sample-rate conversion (Hann-windowed sinc).

use std::f64::consts::PI;

/// Zero crossings of the interpolation kernel on each side, at the output
/// cutoff.
const HALF_TAPS: f64 = 16.0;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

pub(crate) fn to_rate(input: &[f32], from: u32, to: u32) -> Vec<f32> {
    if from == to || input.is_empty() {
        return input.to_vec();
    }
    let step = from as f64 / to as f64;
    // Low-pass at the lower of the two Nyquist frequencies.
    let cutoff = (to as f64 / from as f64).min(1.0);
    let half = (HALF_TAPS / cutoff).ceil();
    let n_out = (input.len() as f64 / step).floor() as usize;
    let len = input.len() as isize;
    (0..n_out)
        .map(|n| {
            let x = n as f64 * step;
            let centre = x.floor() as isize;
            let lo = (centre - half as isize + 1).max(0);
            let hi = (centre + half as isize).min(len - 1);
            let mut acc = 0.0;
            for k in lo..=hi {
                let d = x - k as f64;
                let window = 0.5 * (1.0 + (PI * d / half).cos());
                acc += input[k as usize] as f64 * cutoff * sinc(cutoff * d) * window;
            }
            acc as f32
        })
        .collect()
}
