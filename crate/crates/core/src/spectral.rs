//! STFT magnitude spectrograms, power spectra and the Mel filterbank.

use std::io::Write;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::audio_io::{hamming_coefficients, FrameSequence};
use crate::error::{Error, Result};

/// One-sided STFT magnitudes, `frame_length / 2 + 1` bins per frame.
///
/// Stored frame-major: `frame(m)` is the spectrum of frame `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    data: Vec<f64>,
    num_bins: usize,
    num_frames: usize,
    sample_rate_hz: u32,
}

impl Spectrogram {
    pub fn new(frames: Vec<Vec<f64>>, sample_rate_hz: u32) -> Result<Self> {
        let num_bins = frames.first().map_or(0, Vec::len);
        if num_bins == 0 {
            return Err(Error::Empty("spectrogram"));
        }
        if frames.iter().any(|f| f.len() != num_bins) {
            return Err(Error::invalid("spectrogram frames differ in bin count"));
        }
        if frames.iter().flatten().any(|&v| !(v >= 0.0)) {
            return Err(Error::invalid("spectrogram magnitudes must be nonnegative"));
        }
        let num_frames = frames.len();
        Ok(Self {
            data: frames.concat(),
            num_bins,
            num_frames,
            sample_rate_hz,
        })
    }

    pub(crate) fn from_raw(data: Vec<f64>, num_bins: usize, num_frames: usize, sample_rate_hz: u32) -> Self {
        debug_assert_eq!(data.len(), num_bins * num_frames);
        Self {
            data,
            num_bins,
            num_frames,
            sample_rate_hz,
        }
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    /// FFT size the spectrogram was computed with.
    pub fn frame_length(&self) -> usize {
        (self.num_bins - 1) * 2
    }

    /// Hz per bin.
    pub fn bin_hz(&self) -> f64 {
        self.sample_rate_hz as f64 / self.frame_length() as f64
    }

    #[inline]
    pub fn get(&self, bin: usize, frame: usize) -> f64 {
        self.data[frame * self.num_bins + bin]
    }

    pub fn frame(&self, index: usize) -> &[f64] {
        &self.data[index * self.num_bins..(index + 1) * self.num_bins]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.num_bins)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sum of squared magnitudes per frame.
    pub fn frame_energies(&self) -> Vec<f64> {
        self.frames().map(|f| f.iter().map(|m| m * m).sum()).collect()
    }

    /// Writes the matrix as tab-separated text, one line per bin and one
    /// column per frame.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for bin in 0..self.num_bins {
            let line = (0..self.num_frames)
                .map(|m| self.get(bin, m).to_string())
                .collect::<Vec<_>>()
                .join("\t");
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Reusable forward transform for frames of one length.
#[derive(Clone)]
pub struct StftPlan {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
}

impl std::fmt::Debug for StftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StftPlan")
            .field("frame_length", &self.window.len())
            .finish()
    }
}

impl StftPlan {
    pub fn new(frame_length: usize) -> Result<Self> {
        if frame_length < 2 || !frame_length.is_power_of_two() {
            return Err(Error::invalid(format!(
                "frame length {frame_length} is not a power of two >= 2"
            )));
        }
        let fft = FftPlanner::new().plan_fft_forward(frame_length);
        Ok(Self {
            fft,
            window: hamming_coefficients(frame_length)?,
        })
    }

    pub fn frame_length(&self) -> usize {
        self.window.len()
    }

    /// Hamming-windows one frame and returns its one-sided magnitudes.
    pub fn magnitudes(&self, frame: &[f64], scratch: &mut Vec<Complex<f64>>) -> Vec<f64> {
        scratch.clear();
        scratch.extend(frame.iter().zip(&self.window).map(|(x, w)| Complex::new(x * w, 0.0)));
        self.fft.process(scratch);
        scratch[..=frame.len() / 2].iter().map(|c| c.norm()).collect()
    }

    pub fn process(&self, frames: &FrameSequence) -> Result<Spectrogram> {
        if frames.is_empty() {
            return Err(Error::Empty("frame sequence"));
        }
        if frames.frame_length() != self.frame_length() {
            return Err(Error::DimensionMismatch {
                expected: self.frame_length(),
                found: frames.frame_length(),
            });
        }
        let bins = self.frame_length() / 2 + 1;
        let mut scratch = Vec::with_capacity(self.frame_length());
        let mut data = Vec::with_capacity(bins * frames.frame_count());
        for frame in frames.iter() {
            data.extend(self.magnitudes(frame, &mut scratch));
        }
        Ok(Spectrogram::from_raw(
            data,
            bins,
            frames.frame_count(),
            frames.sample_rate_hz(),
        ))
    }
}

/// Hamming-windowed STFT magnitude spectrogram of a frame sequence.
pub fn stft(frames: &FrameSequence) -> Result<Spectrogram> {
    if frames.is_empty() {
        return Err(Error::Empty("frame sequence"));
    }
    StftPlan::new(frames.frame_length())?.process(frames)
}

/// Elementwise square of the magnitudes, frame-major.
pub fn power_spectrum(spec: &Spectrogram) -> Vec<Vec<f64>> {
    spec.frames()
        .map(|f| f.iter().map(|m| m * m).collect())
        .collect()
}

/// `2595 · log10(1 + f / 700)`.
pub fn hz_to_mel(hz: f64) -> Result<f64> {
    if !(hz >= 0.0) {
        return Err(Error::invalid(format!("negative frequency {hz}")));
    }
    Ok(2595.0 * (1.0 + hz / 700.0).log10())
}

/// Inverse of [`hz_to_mel`].
pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular, peak-normalized filters with centers equally spaced in Mel.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    /// `num_filters × num_bins`, row-major.
    weights: Vec<f64>,
    num_filters: usize,
    num_bins: usize,
    edge_frequencies_hz: Vec<f64>,
    edge_bins: Vec<usize>,
}

impl MelFilterbank {
    /// Builds `num_filters` triangles for a `frame_length`-point FFT.
    ///
    /// The `num_filters + 2` edge frequencies are equally spaced in Mel
    /// between `f_min` and `f_max` and snapped to the nearest FFT bin.
    /// Filter `m` rises linearly from edge bin `m` to its peak of exactly
    /// 1.0 at edge bin `m + 1` and falls back to zero at edge bin `m + 2`,
    /// so each filter's peak bin is the next filter's lower edge.
    pub fn new(
        num_filters: usize,
        frame_length: usize,
        sample_rate_hz: u32,
        f_min: f64,
        f_max: f64,
    ) -> Result<Self> {
        let nyquist = sample_rate_hz as f64 / 2.0;
        if num_filters == 0 {
            return Err(Error::invalid("filterbank needs at least one filter"));
        }
        if frame_length < 2 {
            return Err(Error::invalid("frame length must be at least 2"));
        }
        if !(f_min >= 0.0 && f_min < f_max && f_max <= nyquist) {
            return Err(Error::invalid(format!(
                "invalid Mel range {f_min}..{f_max} Hz for Nyquist {nyquist} Hz"
            )));
        }
        let num_bins = frame_length / 2 + 1;
        let bin_hz = sample_rate_hz as f64 / frame_length as f64;

        let mel_lo = hz_to_mel(f_min)?;
        let mel_hi = hz_to_mel(f_max)?;
        let step = (mel_hi - mel_lo) / (num_filters + 1) as f64;
        let edge_frequencies_hz: Vec<f64> = (0..num_filters + 2)
            .map(|i| {
                if i == num_filters + 1 {
                    f_max
                } else {
                    mel_to_hz(mel_lo + step * i as f64).max(f_min)
                }
            })
            .collect();
        let edge_bins: Vec<usize> = edge_frequencies_hz
            .iter()
            .map(|f| ((f / bin_hz).round() as usize).min(num_bins - 1))
            .collect();
        if edge_bins.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "{num_filters} Mel filters are too narrow for a {frame_length}-point FFT"
            )));
        }

        let mut weights = vec![0.0; num_filters * num_bins];
        for m in 0..num_filters {
            let (lo, peak, hi) = (edge_bins[m], edge_bins[m + 1], edge_bins[m + 2]);
            let row = &mut weights[m * num_bins..(m + 1) * num_bins];
            for k in lo..=peak {
                row[k] = (k - lo) as f64 / (peak - lo) as f64;
            }
            for k in peak..=hi {
                row[k] = (hi - k) as f64 / (hi - peak) as f64;
            }
        }
        Ok(Self {
            weights,
            num_filters,
            num_bins,
            edge_frequencies_hz,
            edge_bins,
        })
    }

    pub fn num_filters(&self) -> usize {
        self.num_filters
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn edge_frequencies_hz(&self) -> &[f64] {
        &self.edge_frequencies_hz
    }

    pub fn edge_bins(&self) -> &[usize] {
        &self.edge_bins
    }

    pub fn filter(&self, m: usize) -> &[f64] {
        &self.weights[m * self.num_bins..(m + 1) * self.num_bins]
    }

    /// Filter outputs `x'(k)` for one power-spectrum frame.
    pub fn apply(&self, power: &[f64]) -> Result<Vec<f64>> {
        if power.len() != self.num_bins {
            return Err(Error::DimensionMismatch {
                expected: self.num_bins,
                found: power.len(),
            });
        }
        Ok((0..self.num_filters)
            .map(|m| {
                let lo = self.edge_bins[m];
                let hi = self.edge_bins[m + 2];
                (lo..=hi).map(|k| self.filter(m)[k] * power[k]).sum()
            })
            .collect())
    }
}
