//! Seeded synthetic test utterances: a few steady or gliding tones plus
//! noise shaped by two-pole formant resonators, at 16-bit PCM amplitude.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result, Waveform, SAMPLE_RATE};

/// Utterances in [`fidelity_suite`].
pub const SUITE_SIZE: usize = 10;

/// One utterance of `duration_s` seconds. Peak amplitude is about 12000.
pub fn mixed_utterance(seed: u64, duration_s: f64) -> Result<Waveform> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::InvalidArgument("duration must be positive".into()));
    }
    let sr = SAMPLE_RATE as f64;
    let len = (duration_s * sr).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; len];

    let tones = rng.random_range(2..=4);
    for _ in 0..tones {
        let f0 = rng.random_range(100.0..6000.0);
        let f1 = f0 * rng.random_range(0.7..1.4f64);
        let amp = rng.random_range(0.2..1.0);
        let phase0 = rng.random_range(0.0..2.0 * PI);
        let (on, off) = {
            let a = rng.random_range(0.0..0.5) * len as f64;
            let b = rng.random_range(0.5..1.0) * len as f64;
            (a as usize, b as usize)
        };
        let mut phase = phase0;
        for (t, v) in x.iter_mut().enumerate().take(off).skip(on) {
            let frac = t as f64 / len as f64;
            let f = (f0 * (1.0 - frac) + f1 * frac).min(7900.0);
            let ramp = ((t - on).min(off - t) as f64 / 160.0).min(1.0);
            *v += amp * ramp * phase.sin();
            phase += 2.0 * PI * f / sr;
        }
    }

    let formants = rng.random_range(2..=3);
    let mut noise = vec![0.0; len];
    for _ in 0..formants {
        let fc = rng.random_range(200.0..5000.0);
        let bw = rng.random_range(60.0..300.0);
        let gain = rng.random_range(0.3..1.0);
        let r = (-PI * bw / sr).exp();
        let (a1, a2) = (2.0 * r * (2.0 * PI * fc / sr).cos(), -r * r);
        let (mut y1, mut y2) = (0.0, 0.0);
        for v in noise.iter_mut() {
            let e: f64 = StandardNormal.sample(&mut rng);
            let y = (1.0 - r) * e + a1 * y1 + a2 * y2;
            *v += gain * y;
            y2 = y1;
            y1 = y;
        }
    }
    let rate = rng.random_range(2.0..6.0);
    for (t, (v, n)) in x.iter_mut().zip(&noise).enumerate() {
        let envelope = 0.6 + 0.4 * (2.0 * PI * rate * t as f64 / sr).sin();
        *v += envelope * n;
    }

    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let scale = 12_000.0 / peak;
        x.iter_mut().for_each(|v| *v = (*v * scale).round());
    }
    Ok(Waveform::new(x))
}

/// The fixed ten-utterance suite used to compare both front-ends; lengths
/// are drawn from 1 to 3 seconds.
pub fn fidelity_suite(seed: u64) -> Result<Vec<Waveform>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..SUITE_SIZE)
        .map(|_| {
            let duration = rng.random_range(1.0..=3.0);
            let child = rng.random::<u64>();
            mixed_utterance(child, duration)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn utterances_are_deterministic_pcm() {
        let a = mixed_utterance(5, 0.5).unwrap();
        assert_eq!(a, mixed_utterance(5, 0.5).unwrap());
        assert_ne!(a, mixed_utterance(6, 0.5).unwrap());
        assert_eq!(a.len(), 8000);
        assert!(a.samples().iter().all(|v| v.fract() == 0.0 && v.abs() <= 12_000.0));
    }

    #[test]
    fn suite_lengths() {
        let suite = fidelity_suite(0).unwrap();
        assert_eq!(suite.len(), SUITE_SIZE);
        assert!(suite.iter().all(|w| (16_000..=48_000).contains(&w.len())));
    }
}
