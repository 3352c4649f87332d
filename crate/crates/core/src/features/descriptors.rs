//! Per-frame time- and frequency-domain descriptors.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Magnitude-weighted mean bin index over the one-sided spectrum.
///
/// Returns 0 for an all-zero frame.
pub fn spectral_centroid(magnitudes: &[f64]) -> f64 {
    let total: f64 = magnitudes.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    magnitudes
        .iter()
        .enumerate()
        .map(|(k, m)| k as f64 * (m / total))
        .sum()
}

/// Standard deviation of the bin index about `centroid`, weighted by the
/// normalized magnitudes. Returns 0 for an all-zero frame.
pub fn spectral_spread(magnitudes: &[f64], centroid: f64) -> f64 {
    let total: f64 = magnitudes.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let var: f64 = magnitudes
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let d = k as f64 - centroid;
            d * d * (m / total)
        })
        .sum();
    var.max(0.0).sqrt()
}

/// Smallest bin `R` whose cumulative magnitude reaches `percentile` of the
/// frame total. Returns 0 for an all-zero frame.
pub fn spectral_rolloff(magnitudes: &[f64], percentile: f64) -> Result<usize> {
    if !(percentile > 0.0 && percentile <= 1.0) {
        return Err(Error::invalid(format!("roll-off percentile {percentile} not in (0, 1]")));
    }
    let total: f64 = magnitudes.iter().sum();
    if total <= 0.0 {
        return Ok(0);
    }
    let threshold = percentile * total;
    let mut cumulative = 0.0;
    for (k, m) in magnitudes.iter().enumerate() {
        cumulative += m;
        if cumulative >= threshold {
            return Ok(k);
        }
    }
    // Only reachable through rounding when percentile == 1.
    Ok(magnitudes.iter().rposition(|&m| m > 0.0).unwrap_or(0))
}

#[inline]
fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign changes in a frame, with `sgn(0) = 1`.
pub fn zero_crossing_rate(frame: &[f64]) -> Result<f64> {
    if frame.len() < 2 {
        return Err(Error::invalid("zero-crossing rate needs at least 2 samples"));
    }
    Ok(0.5
        * frame
            .windows(2)
            .map(|w| (sgn(w[1]) - sgn(w[0])).abs())
            .sum::<f64>())
}

/// Root mean square amplitude. An empty frame has RMS 0.
pub fn rms_energy(frame: &[f64]) -> f64 {
    if frame.is_empty() {
        return 0.0;
    }
    (frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64).sqrt()
}

/// Lag and height of the strongest autocorrelation peak of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AutocorrelationPeak {
    pub lag: f64,
    pub strength: f64,
}

/// FFT-based autocorrelation of mean-centered frames.
#[derive(Clone)]
pub struct Autocorrelator {
    frame_length: usize,
    min_lag: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Autocorrelator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Autocorrelator")
            .field("frame_length", &self.frame_length)
            .field("min_lag", &self.min_lag)
            .finish()
    }
}

impl Autocorrelator {
    pub fn new(frame_length: usize, min_lag: usize) -> Self {
        // zero padding to >= 2N makes the circular correlation linear
        let size = (2 * frame_length).next_power_of_two().max(2);
        let mut planner = FftPlanner::new();
        Self {
            frame_length,
            min_lag: min_lag.max(1),
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    /// `r(τ) / r(0)` for `τ = 0..N` after removing the frame mean. All zeros
    /// when the centered frame is silent.
    pub fn normalized(&self, frame: &[f64]) -> Vec<f64> {
        let n = frame.len();
        let size = self.forward.len();
        if n == 0 || 2 * n > size {
            return Self::naive_normalized(frame);
        }
        let mean = frame.iter().sum::<f64>() / n as f64;
        if is_silent_after_centering(frame, mean) {
            return vec![0.0; n];
        }
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .map(|x| Complex::new(x - mean, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(size)
            .collect();
        self.forward.process(&mut buf);
        for c in &mut buf {
            *c = Complex::new(c.norm_sqr(), 0.0);
        }
        self.inverse.process(&mut buf);
        let r0 = buf[0].re;
        buf[..n].iter().map(|c| c.re / r0).collect()
    }

    fn naive_normalized(frame: &[f64]) -> Vec<f64> {
        let n = frame.len();
        if n == 0 {
            return Vec::new();
        }
        let mean = frame.iter().sum::<f64>() / n as f64;
        if is_silent_after_centering(frame, mean) {
            return vec![0.0; n];
        }
        let x: Vec<f64> = frame.iter().map(|v| v - mean).collect();
        let r: Vec<f64> = (0..n)
            .map(|lag| (0..n - lag).map(|i| x[i] * x[i + lag]).sum())
            .collect();
        r.iter().map(|v| v / r[0]).collect()
    }

    /// The highest local maximum of the normalized autocorrelation at lag
    /// `>= min_lag`; `(0, 0)` when there is none or the frame is too short.
    pub fn peak(&self, frame: &[f64]) -> AutocorrelationPeak {
        if frame.len() < 4 {
            return AutocorrelationPeak::default();
        }
        let r = self.normalized(frame);
        if r[0] == 0.0 {
            return AutocorrelationPeak::default();
        }
        let mut best: Option<(usize, f64)> = None;
        for lag in self.min_lag..r.len() - 1 {
            let is_max = r[lag] > r[lag - 1] && r[lag] >= r[lag + 1];
            if is_max && best.is_none_or(|(_, v)| r[lag] > v) {
                best = Some((lag, r[lag]));
            }
        }
        best.map_or_else(AutocorrelationPeak::default, |(lag, strength)| AutocorrelationPeak {
            lag: lag as f64,
            strength,
        })
    }

    pub fn frame_length(&self) -> usize {
        self.frame_length
    }
}

/// A constant frame leaves only rounding residue after mean removal.
fn is_silent_after_centering(frame: &[f64], mean: f64) -> bool {
    let raw: f64 = frame.iter().map(|x| x * x).sum();
    let centered: f64 = frame.iter().map(|x| (x - mean) * (x - mean)).sum();
    centered <= raw * 1e-24
}

/// One-shot autocorrelation peak with the default minimum lag of 2.
pub fn autocorrelation_features(frame: &[f64]) -> AutocorrelationPeak {
    Autocorrelator::new(frame.len(), 2).peak(frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centroid_cases() {
        let mut m = vec![0.0; 32];
        m[10] = 3.0;
        assert_eq!(spectral_centroid(&m), 10.0);

        let mut m = vec![0.0; 32];
        m[4] = 1.0;
        m[8] = 1.0;
        assert_eq!(spectral_centroid(&m), 6.0);

        for k in [1usize, 2, 7, 100, 513] {
            let flat = vec![0.7; k];
            let expected = (k - 1) as f64 / 2.0;
            assert!((spectral_centroid(&flat) - expected).abs() < 1e-9);
        }
        assert_eq!(spectral_centroid(&[0.0; 8]), 0.0);
    }

    #[test]
    fn spread_cases() {
        let mut m = vec![0.0; 32];
        m[10] = 2.0;
        assert_eq!(spectral_spread(&m, spectral_centroid(&m)), 0.0);

        let mut m = vec![0.0; 32];
        m[12 - 5] = 1.0;
        m[12 + 5] = 1.0;
        let c = spectral_centroid(&m);
        assert!((spectral_spread(&m, c) - 5.0).abs() < 1e-12);
        assert_eq!(spectral_spread(&[0.0; 4], 0.0), 0.0);
    }

    #[test]
    fn rolloff_cases() {
        let mut m = vec![0.0; 20];
        m[7] = 1.0;
        assert_eq!(spectral_rolloff(&m, 0.85).unwrap(), 7);
        assert_eq!(spectral_rolloff(&[1.0; 100], 0.85).unwrap(), 84);

        let m = [0.5, 0.0, 2.0, 0.1, 0.0, 0.0];
        assert_eq!(spectral_rolloff(&m, 1.0).unwrap(), 3);
        assert_eq!(spectral_rolloff(&[0.0; 5], 0.85).unwrap(), 0);
        assert!(spectral_rolloff(&m, 0.0).is_err());
        assert!(spectral_rolloff(&m, 1.5).is_err());
    }

    #[test]
    fn zcr_cases() {
        assert_eq!(zero_crossing_rate(&[0.3; 16]).unwrap(), 0.0);
        let alt: Vec<f64> = (0..64).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert_eq!(zero_crossing_rate(&alt).unwrap(), 63.0);
        // 0 counts as positive
        assert_eq!(zero_crossing_rate(&[0.0, 1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(zero_crossing_rate(&[0.0, -1.0]).unwrap(), 1.0);
        assert!(zero_crossing_rate(&[1.0]).is_err());
    }

    #[test]
    fn rms_cases() {
        assert!((rms_energy(&[-0.4; 10]) - 0.4).abs() < 1e-15);
        assert_eq!(rms_energy(&[0.0; 10]), 0.0);
    }

    #[test]
    fn constant_frame_has_no_autocorrelation_peak() {
        let p = autocorrelation_features(&[0.8; 256]);
        assert_eq!(p, AutocorrelationPeak { lag: 0.0, strength: 0.0 });
    }

    #[test]
    fn fft_autocorrelation_matches_direct_sum() {
        let frame: Vec<f64> = (0..300).map(|i| ((i * 37 % 101) as f64 / 50.0 - 1.0) * 0.5).collect();
        let ac = Autocorrelator::new(300, 2);
        let fast = ac.normalized(&frame);
        let slow = Autocorrelator::naive_normalized(&frame);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
