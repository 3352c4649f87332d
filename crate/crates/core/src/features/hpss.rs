//! Median-filter harmonic/percussive separation on magnitude spectrograms.
//!
//! A bin that is stable across time is harmonic; a bin that is stable
//! across frequency is percussive. Each is estimated by a median filter in
//! that direction and the estimates become soft masks
//! `H^p / (H^p + P^p)` and `P^p / (H^p + P^p)` applied to the input.

use crate::error::{Error, Result};
use crate::spectral::Spectrogram;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpssParams {
    /// Median length across frames.
    pub harmonic_kernel: usize,
    /// Median length across bins.
    pub percussive_kernel: usize,
    /// Mask exponent.
    pub power: f64,
}

impl Default for HpssParams {
    fn default() -> Self {
        Self {
            harmonic_kernel: 17,
            percussive_kernel: 17,
            power: 2.0,
        }
    }
}

/// Result of [`hpss`], including the masks that produced it.
#[derive(Debug, Clone)]
pub struct HpssOutput {
    pub harmonic: Spectrogram,
    pub percussive: Spectrogram,
    /// Harmonic mask per cell, frame-major; the percussive mask is `1 - m`.
    pub harmonic_mask: Vec<f64>,
}

/// Median of `buf`, averaging the two middle values for even lengths.
fn median(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    let mid = n / 2;
    let (lower, upper, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower_max = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower_max + upper)
    }
}

/// Centered sliding median; the window is truncated at the sequence ends,
/// so a length-1 input is returned unchanged.
pub fn median_filter(values: &[f64], kernel: usize) -> Vec<f64> {
    let half = kernel / 2;
    let n = values.len();
    let mut buf = Vec::with_capacity(kernel);
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            buf.clear();
            buf.extend_from_slice(&values[lo..hi]);
            median(&mut buf)
        })
        .collect()
}

pub fn hpss(spec: &Spectrogram, params: &HpssParams) -> Result<HpssOutput> {
    if params.harmonic_kernel == 0 || params.percussive_kernel == 0 {
        return Err(Error::invalid("median kernels must be at least 1"));
    }
    if !(params.power > 0.0) {
        return Err(Error::invalid("mask power must be positive"));
    }
    let bins = spec.num_bins();
    let frames = spec.num_frames();

    let mut harmonic_est = vec![0.0; bins * frames];
    let mut row = Vec::with_capacity(frames);
    for k in 0..bins {
        row.clear();
        row.extend((0..frames).map(|m| spec.get(k, m)));
        for (m, v) in median_filter(&row, params.harmonic_kernel).into_iter().enumerate() {
            harmonic_est[m * bins + k] = v;
        }
    }
    let percussive_est: Vec<f64> = spec
        .frames()
        .flat_map(|f| median_filter(f, params.percussive_kernel))
        .collect();

    let mask: Vec<f64> = harmonic_est
        .iter()
        .zip(&percussive_est)
        .map(|(&h, &p)| soft_mask(h, p, params.power))
        .collect();
    let source = spec.as_slice();
    let harmonic = source.iter().zip(&mask).map(|(x, m)| x * m).collect();
    let percussive = source.iter().zip(&mask).map(|(x, m)| x * (1.0 - m)).collect();
    let sr = spec.sample_rate_hz();
    Ok(HpssOutput {
        harmonic: Spectrogram::from_raw(harmonic, bins, frames, sr),
        percussive: Spectrogram::from_raw(percussive, bins, frames, sr),
        harmonic_mask: mask,
    })
}

/// `h^p / (h^p + p^p)`, or 0.5 when both estimates vanish.
fn soft_mask(h: f64, p: f64, power: f64) -> f64 {
    // Scale by the larger estimate so h^p cannot underflow to 0/0.
    let scale = h.max(p);
    if scale <= 0.0 {
        return 0.5;
    }
    let hp = (h / scale).powf(power);
    let pp = (p / scale).powf(power);
    hp / (hp + pp)
}

/// Per-frame share of harmonic energy, `E_h / (E_h + E_p)`, 0.5 for frames
/// where both are zero.
pub fn harmonic_ratio(harmonic: &Spectrogram, percussive: &Spectrogram) -> Result<Vec<f64>> {
    if harmonic.num_bins() != percussive.num_bins() || harmonic.num_frames() != percussive.num_frames() {
        return Err(Error::DimensionMismatch {
            expected: harmonic.num_bins() * harmonic.num_frames(),
            found: percussive.num_bins() * percussive.num_frames(),
        });
    }
    Ok(harmonic
        .frame_energies()
        .into_iter()
        .zip(percussive.frame_energies())
        .map(|(h, p)| if h + p > 0.0 { h / (h + p) } else { 0.5 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_filter_truncates_at_edges() {
        assert_eq!(median_filter(&[4.0], 17), vec![4.0]);
        assert_eq!(median_filter(&[1.0, 9.0, 2.0, 8.0, 3.0], 3), vec![5.0, 2.0, 8.0, 3.0, 5.5]);
    }

    #[test]
    fn single_frame_time_filter_is_identity() {
        let spec = Spectrogram::new(vec![vec![0.0, 1.0, 5.0, 1.0, 0.0]], 8000).unwrap();
        let out = hpss(&spec, &HpssParams::default()).unwrap();
        for k in 0..5 {
            let h = out.harmonic.get(k, 0);
            let p = out.percussive.get(k, 0);
            assert!((h + p - spec.get(k, 0)).abs() < 1e-12);
        }
    }

    #[test]
    fn ratio_edge_cases() {
        let h = Spectrogram::new(vec![vec![1.0, 2.0], vec![0.0, 0.0]], 8000).unwrap();
        let zero = Spectrogram::new(vec![vec![0.0, 0.0], vec![0.0, 0.0]], 8000).unwrap();
        assert_eq!(harmonic_ratio(&h, &zero).unwrap(), vec![1.0, 0.5]);
        assert_eq!(harmonic_ratio(&h, &h).unwrap(), vec![0.5, 0.5]);
        let other = Spectrogram::new(vec![vec![0.0, 0.0]], 8000).unwrap();
        assert!(harmonic_ratio(&h, &other).is_err());
    }

    #[test]
    fn soft_mask_handles_tiny_values() {
        assert_eq!(soft_mask(0.0, 0.0, 2.0), 0.5);
        assert!((soft_mask(1e-200, 1e-200, 2.0) - 0.5).abs() < 1e-15);
        assert_eq!(soft_mask(1.0, 0.0, 2.0), 1.0);
    }
}
