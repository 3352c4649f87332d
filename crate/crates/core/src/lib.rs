//! Timbral feature extraction and regularized gradient-boosted trees for
//! musical instrument recognition.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`audio_io`] decodes WAV files into mono [`AudioClip`]s and cuts them
//!    into overlapping frames.
//! 2. [`spectral`] turns frames into Hamming-windowed STFT magnitude
//!    spectrograms and builds the Mel filterbank.
//! 3. [`features`] computes per-frame time, frequency and cepstral
//!    descriptors, summarizes each by mean and variance, and concatenates the
//!    channels into one [`FusedFeatureVector`] per clip.
//! 4. [`gbt`] trains a one-vs-rest boosted tree ensemble on the fused vectors,
//!    after [`dataset`] has split and Min-Max scaled them.

pub mod audio_io;
pub mod dataset;
pub mod error;
pub mod features;
pub mod gbt;
pub mod matrix;
pub mod spectral;

pub use audio_io::{AudioClip, FrameSequence};
pub use error::{Error, Result};
pub use features::{Domain, FeatureConfig, FusedFeatureVector};
pub use gbt::{TrainConfig, TreeEnsemble};
pub use matrix::DenseMatrix;
pub use spectral::Spectrogram;
