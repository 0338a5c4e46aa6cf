#![allow(dead_code)]

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tlnmf::audio::Signal;
use tlnmf::linalg::{random_orthogonal, standard_normal_matrix, OrthogonalTransform};
use tlnmf::objective::power;

/// Sum of three steady sinusoids plus white noise.
pub fn sinusoid_mixture(seconds: f64, sample_rate: u32, seed: u64) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = (seconds * sample_rate as f64) as usize;
    let partials = [(0.5, 220.0), (0.3, 587.0), (0.2, 1250.0)];
    let samples = (0..len)
        .map(|i| {
            let t = i as f64 / sample_rate as f64;
            let tone: f64 = partials.iter().map(|(a, f)| a * (2.0 * PI * f * t).sin()).sum();
            let noise: f64 = rng.sample(StandardNormal);
            tone + 0.01 * noise
        })
        .collect();
    Signal::new(samples, sample_rate).unwrap()
}

/// A short melody of harmonic notes with percussive envelopes over low noise.
pub fn synthetic_music(seconds: f64, sample_rate: u32, seed: u64) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = (seconds * sample_rate as f64) as usize;
    let fs = sample_rate as f64;
    let scale = [261.63, 293.66, 329.63, 392.0, 440.0, 523.25];
    let note_len = (0.25 * fs) as usize;
    let mut samples = vec![0.0; len];
    let mut start = 0;
    while start < len {
        let f0 = scale[rng.random_range(0..scale.len())];
        let amp = 0.3 + 0.4 * rng.random::<f64>();
        for (i, s) in samples[start..(start + 2 * note_len).min(len)].iter_mut().enumerate() {
            let t = i as f64 / fs;
            let env = (-6.0 * t).exp() * (1.0 - (-200.0 * t).exp());
            let tone: f64 = (1..=5)
                .map(|h| (2.0 * PI * f0 * h as f64 * t).sin() / h as f64)
                .sum();
            *s += amp * env * tone;
        }
        start += note_len;
    }
    for s in samples.iter_mut() {
        let n: f64 = rng.sample(StandardNormal);
        *s += 1e-3 * n;
    }
    Signal::new(samples, sample_rate).unwrap()
}

/// Random frames, transform and positive model with an imperfect fit.
pub struct Instance {
    pub frames: Array2<f64>,
    pub phi: OrthogonalTransform,
    pub model: Array2<f64>,
}

impl Instance {
    pub fn random(m: usize, n: usize, seed: u64) -> Self {
        let frames = standard_normal_matrix(m, n, seed);
        let phi = random_orthogonal(m, seed + 1).unwrap();
        let other = random_orthogonal(m, seed + 2).unwrap();
        let scale = standard_normal_matrix(m, n, seed + 3).mapv(|z| (0.3 * z).exp());
        let model = (power(other.apply(frames.view()).unwrap().view()) + 0.1) * scale;
        Self { frames, phi, model }
    }

    /// Every coefficient of `Φ Y` at least 0.5 in magnitude.
    pub fn conditioned(m: usize, n: usize, seed: u64) -> Self {
        let phi = random_orthogonal(m, seed + 1).unwrap();
        let coefficients = standard_normal_matrix(m, n, seed).mapv(|z| z.signum() * (0.5 + z.abs()));
        let frames = phi.transpose().apply(coefficients.view()).unwrap();
        let scale = standard_normal_matrix(m, n, seed + 3).mapv(|z| (0.3 * z).exp());
        let model = power(coefficients.view()) * scale;
        Self { frames, phi, model }
    }

    pub fn x(&self) -> Array2<f64> {
        self.phi.apply(self.frames.view()).unwrap()
    }
}

pub fn unit_antisymmetric(m: usize, seed: u64) -> Array2<f64> {
    let e = tlnmf::linalg::project_antisymmetric(standard_normal_matrix(m, m, seed).view()).unwrap();
    let norm = tlnmf::linalg::frobenius_norm(e.view());
    e / norm
}
