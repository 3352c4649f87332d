//! WAV decoding, mono downmix, framing and Hamming windowing.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};

/// A mono clip with samples normalized to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate_hz: u32,
    source_id: String,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32, source_id: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("audio clip has no samples"));
        }
        if sample_rate_hz == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(s) = samples.iter().find(|s| !(-1.0..=1.0).contains(*s)) {
            return Err(Error::invalid(format!("sample {s} outside [-1, 1]")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            source_id: source_id.into(),
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

/// Sample encodings accepted by [`write_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Pcm32,
    Float32,
}

/// Decodes a WAV file into a mono clip.
///
/// Integer PCM (8, 16, 24 or 32 bit) is scaled by `2^(bits-1)`; float input
/// is clamped to `[-1, 1]`. Multichannel audio is downmixed by taking the
/// per-sample mean over channels. The clip's `source_id` is the file stem.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::CorruptWav {
            path: path.to_path_buf(),
            detail: "zero channels".into(),
        });
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<_, _>>()
                .map_err(|e| wav_error(path, e))?
        }
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| (v as f64).clamp(-1.0, 1.0)))
            .collect::<Result<_, _>>()
            .map_err(|e| wav_error(path, e))?,
        (format, bits) => {
            return Err(Error::UnsupportedEncoding {
                path: path.to_path_buf(),
                detail: format!("{format:?} with {bits} bits per sample"),
            })
        }
    };
    if !interleaved.len().is_multiple_of(channels) {
        return Err(Error::CorruptWav {
            path: path.to_path_buf(),
            detail: "data chunk ends mid-frame".into(),
        });
    }

    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|c| c.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if samples.is_empty() {
        return Err(Error::Empty("WAV file has no samples"));
    }
    AudioClip::new(samples, spec.sample_rate, source_id)
}

fn wav_error(path: &Path, err: hound::Error) -> Error {
    let path = path.to_path_buf();
    match err {
        hound::Error::Unsupported | hound::Error::InvalidSampleFormat => Error::UnsupportedEncoding {
            path,
            detail: err.to_string(),
        },
        // hound reports short reads as UnexpectedEof or Other
        hound::Error::IoError(e)
            if !matches!(
                e.kind(),
                std::io::ErrorKind::UnexpectedEof | std::io::ErrorKind::Other | std::io::ErrorKind::InvalidData
            ) =>
        {
            Error::Io { path, source: e }
        }
        other => Error::CorruptWav {
            path,
            detail: other.to_string(),
        },
    }
}

/// Writes a mono clip. Used for fixtures and synthetic corpora.
pub fn write_wav(path: impl AsRef<Path>, clip: &AudioClip, encoding: WavEncoding) -> Result<()> {
    let path = path.as_ref();
    let (bits, format) = match encoding {
        WavEncoding::Pcm16 => (16, hound::SampleFormat::Int),
        WavEncoding::Pcm32 => (32, hound::SampleFormat::Int),
        WavEncoding::Float32 => (32, hound::SampleFormat::Float),
    };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate_hz(),
        bits_per_sample: bits,
        sample_format: format,
    };
    let map = |e: hound::Error| match e {
        hound::Error::IoError(e) => Error::io(path, e),
        other => Error::invalid(other.to_string()),
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(map)?;
    for &s in clip.samples() {
        match encoding {
            WavEncoding::Pcm16 => writer.write_sample(quantize(s, 16) as i16),
            WavEncoding::Pcm32 => writer.write_sample(quantize(s, 32) as i32),
            WavEncoding::Float32 => writer.write_sample(s as f32),
        }
        .map_err(map)?;
    }
    writer.finalize().map_err(map)
}

fn quantize(s: f64, bits: u32) -> i64 {
    let scale = (1i64 << (bits - 1)) as f64;
    (s * scale).round().clamp(-scale, scale - 1.0) as i64
}

/// Overlapping frames cut from one clip, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    data: Vec<f64>,
    frame_length: usize,
    hop: usize,
    sample_rate_hz: u32,
}

impl FrameSequence {
    pub fn from_frames(frames: &[Vec<f64>], hop: usize, sample_rate_hz: u32) -> Result<Self> {
        let frame_length = frames.first().map_or(0, Vec::len);
        if frame_length == 0 {
            return Err(Error::Empty("frame sequence"));
        }
        if let Some(f) = frames.iter().find(|f| f.len() != frame_length) {
            return Err(Error::DimensionMismatch {
                expected: frame_length,
                found: f.len(),
            });
        }
        Ok(Self {
            data: frames.concat(),
            frame_length,
            hop,
            sample_rate_hz,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.data.len().checked_div(self.frame_length).unwrap_or(0)
    }

    pub fn frame_length(&self) -> usize {
        self.frame_length
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn frame(&self, index: usize) -> &[f64] {
        &self.data[index * self.frame_length..(index + 1) * self.frame_length]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.frame_length)
    }
}

/// Number of full frames that fit in `num_samples`.
pub fn full_frame_count(num_samples: usize, frame_length: usize, hop: usize) -> usize {
    if num_samples < frame_length {
        0
    } else {
        (num_samples - frame_length) / hop + 1
    }
}

/// Cuts a clip into frames of `frame_length` samples advancing by `hop`.
///
/// With `pad_tail`, samples not covered by the last full frame get one more
/// frame starting at the next hop, zero-padded to `frame_length`; a clip
/// shorter than one frame becomes a single padded frame.
pub fn split_frames(
    clip: &AudioClip,
    frame_length: usize,
    hop: usize,
    pad_tail: bool,
) -> Result<FrameSequence> {
    if frame_length == 0 || hop == 0 {
        return Err(Error::invalid("frame length and hop must be at least 1"));
    }
    let samples = clip.samples();
    let n = samples.len();
    let full = full_frame_count(n, frame_length, hop);
    if full == 0 && !pad_tail {
        return Err(Error::invalid(format!(
            "clip of {n} samples is shorter than one {frame_length}-sample frame"
        )));
    }
    let covered = if full == 0 { 0 } else { (full - 1) * hop + frame_length };
    let count = if pad_tail && covered < n { full + 1 } else { full };

    let mut data = vec![0.0; count * frame_length];
    for (i, frame) in data.chunks_exact_mut(frame_length).enumerate() {
        let start = i * hop;
        let end = (start + frame_length).min(n);
        frame[..end - start].copy_from_slice(&samples[start..end]);
    }
    Ok(FrameSequence {
        data,
        frame_length,
        hop,
        sample_rate_hz: clip.sample_rate_hz(),
    })
}

/// Hamming coefficients `0.54 - 0.46 cos(2πn / (N-1))` for `n = 0..N`.
pub fn hamming_coefficients(len: usize) -> Result<Vec<f64>> {
    if len < 2 {
        return Err(Error::invalid("Hamming window needs at least 2 points"));
    }
    let denom = (len - 1) as f64;
    Ok((0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / denom).cos())
        .collect())
}

/// Multiplies a frame pointwise by a Hamming window of the same length.
pub fn hamming_window(frame: &[f64]) -> Result<Vec<f64>> {
    let w = hamming_coefficients(frame.len())?;
    Ok(frame.iter().zip(&w).map(|(x, w)| x * w).collect())
}

/// Frame length for a target duration, rounded up to a power of two.
pub fn frame_length_for(duration_secs: f64, sample_rate_hz: u32) -> usize {
    let samples = (duration_secs * sample_rate_hz as f64).round().max(1.0) as usize;
    samples.next_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn clip(n: usize) -> AudioClip {
        AudioClip::new((0..n).map(|i| (i % 7) as f64 / 10.0).collect(), 44_100, "t").unwrap()
    }

    #[test]
    fn frame_counts() {
        assert_eq!(split_frames(&clip(2048), 1024, 512, true).unwrap().frame_count(), 3);
        assert_eq!(split_frames(&clip(1024), 1024, 512, true).unwrap().frame_count(), 1);

        let f = split_frames(&clip(1030), 1024, 512, true).unwrap();
        assert_eq!(f.frame_count(), 2);
        // second frame holds samples 512..1030 then 506 zeros
        let second = f.frame(1);
        assert_eq!(&second[..518], &clip(1030).samples()[512..1030]);
        assert!(second[518..].iter().all(|&s| s == 0.0));
        assert_eq!(second.len() - 518, 506);
    }

    #[test]
    fn short_clip_without_padding_is_an_error() {
        assert!(split_frames(&clip(100), 1024, 512, false).is_err());
        let padded = split_frames(&clip(100), 1024, 512, true).unwrap();
        assert_eq!(padded.frame_count(), 1);
    }

    #[test]
    fn medley_clip_frame_count() {
        // 2972 ms at 44.1 kHz
        let f = split_frames(&clip(131_065), 1024, 512, true).unwrap();
        assert_eq!(f.frame_count(), 255);
    }

    #[test]
    fn default_frame_length_is_1024_at_44k1() {
        assert_eq!(frame_length_for(0.023, 44_100), 1024);
    }

    #[test]
    fn hamming_values() {
        let w = hamming_coefficients(9).unwrap();
        assert!((w[0] - 0.08).abs() < 1e-15);
        assert!((w[4] - 1.0).abs() < 1e-15);
        for n in 0..9 {
            assert!((w[n] - w[8 - n]).abs() < 1e-15);
        }
        assert!(hamming_coefficients(1).is_err());
    }

    #[test]
    fn clip_rejects_out_of_range_samples() {
        assert!(AudioClip::new(vec![0.0, 1.5], 44_100, "x").is_err());
        assert!(AudioClip::new(vec![], 44_100, "x").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn frame_count_formula(n in 1usize..5000, len in 1usize..600, hop in 1usize..600) {
            let c = AudioClip::new(vec![0.25; n], 8000, "p").unwrap();
            let frames = split_frames(&c, len, hop, false);
            if n >= len {
                let f = frames.unwrap();
                prop_assert_eq!(f.frame_count(), (n - len) / hop + 1);
                prop_assert!(f.iter().all(|r| r.len() == len));
            } else {
                prop_assert!(frames.is_err());
            }
        }

        #[test]
        fn windowing_is_pointwise(frame in prop::collection::vec(-1.0f64..1.0, 2..256)) {
            let w = hamming_coefficients(frame.len()).unwrap();
            let out = hamming_window(&frame).unwrap();
            prop_assert_eq!(out.len(), frame.len());
            for i in 0..frame.len() {
                if frame[i] != 0.0 {
                    prop_assert!((out[i] / frame[i] - w[i]).abs() < 1e-12);
                }
            }
        }
    }
}
