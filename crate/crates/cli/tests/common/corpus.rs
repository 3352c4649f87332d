//! Seeded synthetic instrument corpus.
//!
//! Each class has its own harmonic profile, attack envelope, vibrato and
//! noise level. Pitch is drawn from one shared range so that the class has
//! to be recognized from timbre rather than from the fundamental.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use timbre_core::audio_io::{write_wav, AudioClip, WavEncoding};
use timbre_core::dataset::INSTRUMENT_CLASSES;

pub const SAMPLE_RATE: u32 = 44_100;

struct Voice {
    /// Relative amplitude of harmonic `n` (1-based).
    profile: fn(usize) -> f64,
    attack_s: f64,
    /// Exponential decay rate after the attack, per second.
    decay: f64,
    vibrato_hz: f64,
    vibrato_depth: f64,
    noise: f64,
    /// Soft-clipping drive; 0 leaves the waveform untouched.
    drive: f64,
}

fn voice(class: usize) -> Voice {
    match class {
        // clarinet: odd harmonics dominate
        0 => Voice {
            profile: |n| if n % 2 == 1 { 1.0 / n as f64 } else { 0.04 / n as f64 },
            attack_s: 0.04,
            decay: 0.0,
            vibrato_hz: 0.0,
            vibrato_depth: 0.0,
            noise: 0.005,
            drive: 0.0,
        },
        // distorted electric guitar: flat spectrum pushed through a clipper
        1 => Voice {
            profile: |n| 1.0 / (n as f64).sqrt(),
            attack_s: 0.008,
            decay: 0.6,
            vibrato_hz: 0.0,
            vibrato_depth: 0.0,
            noise: 0.01,
            drive: 6.0,
        },
        // female singer: two formant bumps and vibrato
        2 => Voice {
            profile: |n| {
                let x = n as f64;
                (-(x - 2.0).powi(2) / 1.5).exp() + 0.6 * (-(x - 7.0).powi(2) / 3.0).exp() + 0.02
            },
            attack_s: 0.08,
            decay: 0.0,
            vibrato_hz: 5.5,
            vibrato_depth: 0.02,
            noise: 0.01,
            drive: 0.0,
        },
        // flute: nearly sinusoidal with breath noise
        3 => Voice {
            profile: |n| [1.0, 0.25, 0.08, 0.02].get(n - 1).copied().unwrap_or(0.0),
            attack_s: 0.06,
            decay: 0.0,
            vibrato_hz: 4.5,
            vibrato_depth: 0.004,
            noise: 0.06,
            drive: 0.0,
        },
        // piano: percussive onset and fast decay
        4 => Voice {
            profile: |n| 1.0 / (n as f64).powf(1.6),
            attack_s: 0.003,
            decay: 3.5,
            vibrato_hz: 0.0,
            vibrato_depth: 0.0,
            noise: 0.002,
            drive: 0.0,
        },
        // tenor saxophone: bright and breathy
        5 => Voice {
            profile: |n| 1.0 / (n as f64).powf(0.6),
            attack_s: 0.03,
            decay: 0.0,
            vibrato_hz: 5.0,
            vibrato_depth: 0.006,
            noise: 0.035,
            drive: 1.2,
        },
        // trumpet: energy climbs to the fourth harmonic
        6 => Voice {
            profile: |n| if n <= 4 { n as f64 / 4.0 } else { 4.0 / n as f64 },
            attack_s: 0.02,
            decay: 0.0,
            vibrato_hz: 0.0,
            vibrato_depth: 0.0,
            noise: 0.004,
            drive: 0.0,
        },
        // violin: sawtooth-like with slow bowing attack and wide vibrato
        _ => Voice {
            profile: |n| 1.0 / n as f64,
            attack_s: 0.15,
            decay: 0.0,
            vibrato_hz: 6.0,
            vibrato_depth: 0.012,
            noise: 0.015,
            drive: 0.0,
        },
    }
}

/// One clip of `class`, fully determined by `seed`.
pub fn synth_clip(class: usize, seed: u64, seconds: f64) -> Vec<f64> {
    let v = voice(class);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = SAMPLE_RATE as f64;
    let f0 = 196.0 * 2f64.powf(rng.random_range(0.0..1.4));
    let harmonics = ((8_000.0 / f0) as usize).clamp(1, 24);
    let amps: Vec<f64> = (1..=harmonics)
        .map(|n| (v.profile)(n) * rng.random_range(0.8..1.2))
        .collect();
    let phases: Vec<f64> = (0..harmonics).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let vib_phase = rng.random_range(0.0..2.0 * PI);
    let attack = v.attack_s * rng.random_range(0.8..1.25);
    let noise = v.noise * rng.random_range(0.7..1.4);
    let gain = rng.random_range(0.3..0.8);

    let len = (seconds * sr) as usize;
    let mut out = Vec::with_capacity(len);
    let mut phase = 0.0;
    for i in 0..len {
        let t = i as f64 / sr;
        let f = f0 * (1.0 + v.vibrato_depth * (2.0 * PI * v.vibrato_hz * t + vib_phase).sin());
        phase += 2.0 * PI * f / sr;
        let mut s = 0.0;
        for (n, (a, p)) in amps.iter().zip(&phases).enumerate() {
            s += a * ((n + 1) as f64 * phase + p).sin();
        }
        if v.drive > 0.0 {
            s = (v.drive * s).tanh();
        }
        let env = (t / attack).min(1.0) * (-v.decay * (t - attack).max(0.0)).exp();
        out.push(env * s + noise * rng.random_range(-1.0..1.0));
    }
    let peak = out.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-12);
    out.iter().map(|x| x / peak * gain).collect()
}

pub struct Corpus {
    pub manifest: PathBuf,
    pub clips: usize,
}

/// Writes `per_class` clips of every class plus a manifest under `dir`.
pub fn write_corpus(dir: &Path, per_class: usize, seconds: f64, seed: u64) -> Corpus {
    let clip_dir = dir.join("clips");
    std::fs::create_dir_all(&clip_dir).unwrap();
    let jobs: Vec<(usize, usize)> = (0..INSTRUMENT_CLASSES.len())
        .flat_map(|c| (0..per_class).map(move |i| (c, i)))
        .collect();
    jobs.par_iter().for_each(|&(c, i)| {
        let clip_seed = seed.wrapping_mul(1_000_003).wrapping_add((c * 100_000 + i) as u64);
        let samples = synth_clip(c, clip_seed, seconds);
        let clip = AudioClip::new(samples, SAMPLE_RATE, "").unwrap();
        write_wav(clip_dir.join(format!("c{c}-{i:04}.wav")), &clip, WavEncoding::Pcm16).unwrap();
    });
    let mut manifest = String::from("uuid,instrument,path\n");
    for &(c, i) in &jobs {
        manifest.push_str(&format!("c{c}-{i:04},{},clips/c{c}-{i:04}.wav\n", INSTRUMENT_CLASSES[c]));
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, manifest).unwrap();
    Corpus {
        manifest: path,
        clips: jobs.len(),
    }
}
