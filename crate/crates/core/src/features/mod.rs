//! Timbral descriptors and multi-channel fusion.
//!
//! Each clip is framed, and every enabled domain produces a handful of
//! per-frame series:
//!
//! | domain          | series                                          |
//! |-----------------|-------------------------------------------------|
//! | time            | zero-crossing rate, RMS                         |
//! | frequency       | centroid, spread, roll-off, harmonic ratio      |
//! | cepstral        | MFCC 1..L                                       |
//! | autocorrelation | peak lag, peak strength                         |
//!
//! Every series is reduced to its mean and population variance, the pairs
//! form one channel vector per domain, and the channels are concatenated in
//! the fixed order above. The default configuration (time, frequency,
//! cepstral with L = 12) gives 4 + 8 + 24 = 36 values.

mod descriptors;
mod hpss;
mod mfcc;
mod stats;
pub mod table;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use descriptors::{
    autocorrelation_features, rms_energy, spectral_centroid, spectral_rolloff, spectral_spread,
    zero_crossing_rate, AutocorrelationPeak, Autocorrelator,
};
pub use hpss::{harmonic_ratio, hpss, median_filter, HpssOutput, HpssParams};
pub use mfcc::mfcc;
pub use stats::aggregate_mean_variance;
pub use table::{FeatureRow, FeatureTable};

use crate::audio_io::{frame_length_for, split_frames, AudioClip};
use crate::error::{Error, Result};
use crate::spectral::{MelFilterbank, StftPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Time,
    Frequency,
    Cepstral,
    Autocorrelation,
}

impl Domain {
    pub const ALL: [Domain; 4] = [
        Domain::Time,
        Domain::Frequency,
        Domain::Cepstral,
        Domain::Autocorrelation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Domain::Time => "time",
            Domain::Frequency => "frequency",
            Domain::Cepstral => "cepstral",
            Domain::Autocorrelation => "autocorrelation",
        }
    }

    /// Per-frame series this domain contributes.
    pub fn series_names(self, mfcc_coefficients: usize) -> Vec<String> {
        match self {
            Domain::Time => vec!["zcr".into(), "rms".into()],
            Domain::Frequency => vec![
                "spectral_centroid".into(),
                "spectral_spread".into(),
                "spectral_rolloff".into(),
                "harmonic_ratio".into(),
            ],
            Domain::Cepstral => (1..=mfcc_coefficients).map(|n| format!("mfcc_{n}")).collect(),
            Domain::Autocorrelation => vec!["autocorr_lag".into(), "autocorr_strength".into()],
        }
    }

    /// Channel width: two summary values per series.
    pub fn dimension(self, mfcc_coefficients: usize) -> usize {
        2 * self.series_names(mfcc_coefficients).len()
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Domain::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown feature domain {s:?}")))
    }
}

/// Column names of a fused vector, in fusion order.
pub fn feature_names(domains: &[Domain], mfcc_coefficients: usize) -> Vec<String> {
    canonical_domains(domains)
        .into_iter()
        .flat_map(|d| d.series_names(mfcc_coefficients))
        .flat_map(|s| [format!("{s}_mean"), format!("{s}_var")])
        .collect()
}

fn canonical_domains(domains: &[Domain]) -> Vec<Domain> {
    let mut d = domains.to_vec();
    d.sort();
    d.dedup();
    d
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Clips at any other rate are rejected.
    pub sample_rate_hz: u32,
    /// Target frame duration; rounded up to a power-of-two sample count.
    pub frame_ms: f64,
    /// Explicit frame length in samples, overriding `frame_ms`.
    pub frame_length: Option<usize>,
    /// Defaults to half the frame length.
    pub hop: Option<usize>,
    pub pad_tail: bool,
    pub domains: Vec<Domain>,
    pub mfcc_coefficients: usize,
    pub mel_filters: usize,
    pub mel_fmin_hz: f64,
    /// Defaults to Nyquist.
    pub mel_fmax_hz: Option<f64>,
    pub rolloff_percentile: f64,
    pub hpss_kernel: usize,
    pub hpss_power: f64,
    pub log_floor: f64,
    pub autocorr_min_lag: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 44_100,
            frame_ms: 23.0,
            frame_length: None,
            hop: None,
            pad_tail: true,
            domains: vec![Domain::Time, Domain::Frequency, Domain::Cepstral],
            mfcc_coefficients: 12,
            mel_filters: 40,
            mel_fmin_hz: 0.0,
            mel_fmax_hz: None,
            rolloff_percentile: 0.85,
            hpss_kernel: 17,
            hpss_power: 2.0,
            log_floor: 1e-10,
            autocorr_min_lag: 2,
        }
    }
}

impl FeatureConfig {
    pub const KEYS: &'static [&'static str] = &[
        "sample_rate_hz",
        "frame_ms",
        "frame_length",
        "hop",
        "pad_tail",
        "domains",
        "mfcc_coefficients",
        "mel_filters",
        "mel_fmin_hz",
        "mel_fmax_hz",
        "rolloff_percentile",
        "hpss_kernel",
        "hpss_power",
        "log_floor",
        "autocorr_min_lag",
    ];

    pub fn frame_length(&self) -> usize {
        self.frame_length
            .unwrap_or_else(|| frame_length_for(self.frame_ms / 1000.0, self.sample_rate_hz))
    }

    pub fn hop(&self) -> usize {
        self.hop.unwrap_or_else(|| (self.frame_length() / 2).max(1))
    }

    pub fn mel_fmax_hz(&self) -> f64 {
        self.mel_fmax_hz.unwrap_or(self.sample_rate_hz as f64 / 2.0)
    }

    pub fn with_domains(mut self, domains: &[Domain]) -> Self {
        self.domains = domains.to_vec();
        self
    }

    /// Enabled domains in fusion order, without duplicates.
    pub fn domains(&self) -> Vec<Domain> {
        canonical_domains(&self.domains)
    }

    pub fn dimension(&self) -> usize {
        self.domains()
            .into_iter()
            .map(|d| d.dimension(self.mfcc_coefficients))
            .sum()
    }

    pub fn feature_names(&self) -> Vec<String> {
        feature_names(&self.domains, self.mfcc_coefficients)
    }

    pub fn hpss_params(&self) -> HpssParams {
        HpssParams {
            harmonic_kernel: self.hpss_kernel,
            percussive_kernel: self.hpss_kernel,
            power: self.hpss_power,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate_hz == 0 {
            return Err(Error::invalid("sample_rate_hz must be positive"));
        }
        if self.domains.is_empty() {
            return Err(Error::invalid("at least one feature domain must be enabled"));
        }
        let len = self.frame_length();
        if len < 4 || !len.is_power_of_two() {
            return Err(Error::invalid(format!("frame length {len} must be a power of two >= 4")));
        }
        if self.hop() == 0 {
            return Err(Error::invalid("hop must be at least 1"));
        }
        if self.mfcc_coefficients == 0 || self.mfcc_coefficients > self.mel_filters {
            return Err(Error::invalid("mfcc_coefficients must be in 1..=mel_filters"));
        }
        if !(self.rolloff_percentile > 0.0 && self.rolloff_percentile <= 1.0) {
            return Err(Error::invalid("rolloff_percentile must be in (0, 1]"));
        }
        if self.hpss_kernel == 0 || !(self.hpss_power > 0.0) {
            return Err(Error::invalid("hpss_kernel and hpss_power must be positive"));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::invalid("log_floor must be positive"));
        }
        Ok(())
    }
}

/// One descriptor evaluated on every frame of a clip.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatureSeries {
    pub name: String,
    pub domain: Domain,
    pub values: Vec<f64>,
}

/// Mean/variance pairs of one domain, in series order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub domain: Domain,
    pub values: Vec<f64>,
}

impl ChannelVector {
    pub fn new(domain: Domain, values: Vec<f64>) -> Self {
        Self { domain, values }
    }

    /// Summarizes each series by `(mean, variance)`.
    pub fn from_series(domain: Domain, series: &[FrameFeatureSeries]) -> Result<Self> {
        let mut values = Vec::with_capacity(2 * series.len());
        for s in series {
            let (mean, var) = aggregate_mean_variance(&s.values)?;
            values.push(mean);
            values.push(var);
        }
        Ok(Self { domain, values })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpan {
    pub domain: Domain,
    pub range: Range<usize>,
}

/// Concatenated channel vectors: the classifier input for one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedFeatureVector {
    values: Vec<f64>,
    layout: Vec<ChannelSpan>,
}

impl FusedFeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn layout(&self) -> &[ChannelSpan] {
        &self.layout
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn channel(&self, domain: Domain) -> Option<&[f64]> {
        self.layout
            .iter()
            .find(|s| s.domain == domain)
            .map(|s| &self.values[s.range.clone()])
    }
}

/// Concatenates channels in fusion order (time, frequency, cepstral,
/// autocorrelation), preserving order inside each channel.
pub fn fuse(channels: Vec<ChannelVector>) -> Result<FusedFeatureVector> {
    let mut channels = channels;
    channels.sort_by_key(|c| c.domain);
    if channels.is_empty() {
        return Err(Error::Empty("no channels to fuse"));
    }
    if let Some(c) = channels.iter().find(|c| c.values.is_empty()) {
        return Err(Error::invalid(format!("{} channel is empty", c.domain)));
    }
    if channels.windows(2).any(|w| w[0].domain == w[1].domain) {
        return Err(Error::invalid("duplicate channel domain"));
    }
    let mut values = Vec::new();
    let mut layout = Vec::with_capacity(channels.len());
    for c in channels {
        let start = values.len();
        values.extend(c.values);
        layout.push(ChannelSpan {
            domain: c.domain,
            range: start..values.len(),
        });
    }
    Ok(FusedFeatureVector { values, layout })
}

/// Three-channel fusion with an optional fourth channel appended.
pub fn fuse_channels(
    time: ChannelVector,
    frequency: ChannelVector,
    cepstral: ChannelVector,
    extra: Option<ChannelVector>,
) -> Result<FusedFeatureVector> {
    let mut channels = vec![time, frequency, cepstral];
    channels.extend(extra);
    fuse(channels)
}

/// Clip-level extractor holding the FFT plans and filterbank for one
/// configuration. Shareable across threads.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    config: FeatureConfig,
    domains: Vec<Domain>,
    stft: StftPlan,
    filterbank: MelFilterbank,
    autocorrelator: Autocorrelator,
}

impl FeatureExtractor {
    pub fn new(config: FeatureConfig) -> Result<Self> {
        config.validate()?;
        let frame_length = config.frame_length();
        let filterbank = MelFilterbank::new(
            config.mel_filters,
            frame_length,
            config.sample_rate_hz,
            config.mel_fmin_hz,
            config.mel_fmax_hz(),
        )?;
        Ok(Self {
            domains: config.domains(),
            stft: StftPlan::new(frame_length)?,
            autocorrelator: Autocorrelator::new(frame_length, config.autocorr_min_lag),
            filterbank,
            config,
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    /// All per-frame series for the enabled domains, in fusion order.
    pub fn series(&self, clip: &AudioClip) -> Result<Vec<FrameFeatureSeries>> {
        let cfg = &self.config;
        if clip.sample_rate_hz() != cfg.sample_rate_hz {
            return Err(Error::SampleRateMismatch {
                expected: cfg.sample_rate_hz,
                found: clip.sample_rate_hz(),
            });
        }
        let frames = split_frames(clip, cfg.frame_length(), cfg.hop(), cfg.pad_tail)?;
        let needs_spectrum = self
            .domains
            .iter()
            .any(|d| matches!(d, Domain::Frequency | Domain::Cepstral));
        let spec = if needs_spectrum {
            Some(self.stft.process(&frames)?)
        } else {
            None
        };

        let mut out = Vec::new();
        let mut push = |domain: Domain, name: &str, values: Vec<f64>| {
            out.push(FrameFeatureSeries {
                name: name.to_string(),
                domain,
                values,
            })
        };
        for &domain in &self.domains {
            match domain {
                Domain::Time => {
                    let zcr = frames.iter().map(zero_crossing_rate).collect::<Result<_>>()?;
                    push(domain, "zcr", zcr);
                    push(domain, "rms", frames.iter().map(rms_energy).collect());
                }
                Domain::Frequency => {
                    let spec = spec.as_ref().expect("spectrum computed for frequency domain");
                    let mut centroid = Vec::with_capacity(spec.num_frames());
                    let mut spread = Vec::with_capacity(spec.num_frames());
                    let mut rolloff = Vec::with_capacity(spec.num_frames());
                    for f in spec.frames() {
                        let c = spectral_centroid(f);
                        centroid.push(c);
                        spread.push(spectral_spread(f, c));
                        rolloff.push(spectral_rolloff(f, cfg.rolloff_percentile)? as f64);
                    }
                    let separated = hpss(spec, &cfg.hpss_params())?;
                    let ratio = harmonic_ratio(&separated.harmonic, &separated.percussive)?;
                    push(domain, "spectral_centroid", centroid);
                    push(domain, "spectral_spread", spread);
                    push(domain, "spectral_rolloff", rolloff);
                    push(domain, "harmonic_ratio", ratio);
                }
                Domain::Cepstral => {
                    let spec = spec.as_ref().expect("spectrum computed for cepstral domain");
                    let l = cfg.mfcc_coefficients;
                    let mut coeffs = vec![Vec::with_capacity(spec.num_frames()); l];
                    let mut power = vec![0.0; spec.num_bins()];
                    for f in spec.frames() {
                        for (p, m) in power.iter_mut().zip(f) {
                            *p = m * m;
                        }
                        let c = mfcc(&power, &self.filterbank, l, cfg.log_floor)?;
                        for (series, v) in coeffs.iter_mut().zip(c) {
                            series.push(v);
                        }
                    }
                    for (n, values) in coeffs.into_iter().enumerate() {
                        push(domain, &format!("mfcc_{}", n + 1), values);
                    }
                }
                Domain::Autocorrelation => {
                    let peaks: Vec<_> = frames.iter().map(|f| self.autocorrelator.peak(f)).collect();
                    push(domain, "autocorr_lag", peaks.iter().map(|p| p.lag).collect());
                    push(domain, "autocorr_strength", peaks.iter().map(|p| p.strength).collect());
                }
            }
        }
        Ok(out)
    }

    pub fn extract(&self, clip: &AudioClip) -> Result<FusedFeatureVector> {
        let series = self.series(clip)?;
        let channels = self
            .domains
            .iter()
            .map(|&d| {
                let of_domain: Vec<_> = series.iter().filter(|s| s.domain == d).cloned().collect();
                ChannelVector::from_series(d, &of_domain)
            })
            .collect::<Result<Vec<_>>>()?;
        fuse(channels)
    }
}

/// Convenience wrapper building a [`FeatureExtractor`] for a single clip.
pub fn extract_clip_features(clip: &AudioClip, config: &FeatureConfig) -> Result<FusedFeatureVector> {
    FeatureExtractor::new(config.clone())?.extract(clip)
}
