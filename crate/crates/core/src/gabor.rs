//! Gabor wavelets approximating the mel triangles, and the squared-Hanning
//! low-pass that replaces the STFT window.
//!
//! Band `n` gets a complex filter `exp(-2 pi i eta t) g_sigma(t)` sampled on
//! `t = -width/2 .. width/2 - 1`, where `eta` is the band center in
//! cycles/sample and `sigma` makes the magnitude response's FWHM equal to the
//! band's FWHM: `sigma = 2 sqrt(2 ln 2) / w` with `w` in rad/sample. The
//! filter is then rescaled so its energy matches the triangle it replaces.

use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};

#[allow(unused_imports)]
use num_traits::Float;

use crate::mel::MelSpec;
use crate::signal::hanning;
use crate::{Error, Result, FILTER_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaborParams {
    /// Center frequency, cycles/sample.
    pub eta: f64,
    /// Envelope standard deviation, samples.
    pub sigma: f64,
    pub gain: f64,
}

/// `sigma` (samples) whose Gaussian magnitude response has FWHM
/// `fwhm_rad` (rad/sample).
pub fn sigma_for_fwhm(fwhm_rad: f64) -> f64 {
    2.0 * (2.0 * LN_2).sqrt() / fwhm_rad
}

/// One parameter set per mel band. `gain` is left at 1; see
/// [`normalize_energy`].
pub fn gabor_params_from_mel(spec: &MelSpec) -> Vec<GaborParams> {
    let sr = spec.sample_rate() as f64;
    spec.centers()
        .iter()
        .zip(spec.fwhm())
        .map(|(&eta_hz, &w_hz)| GaborParams {
            eta: eta_hz / sr,
            sigma: sigma_for_fwhm(2.0 * PI * w_hz / sr),
            gain: 1.0,
        })
        .collect()
}

/// Real and imaginary taps of one complex filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFilter {
    pub real: Vec<f64>,
    pub imag: Vec<f64>,
}

impl ComplexFilter {
    pub fn new(real: Vec<f64>, imag: Vec<f64>) -> Result<Self> {
        if real.len() != imag.len() {
            return Err(Error::shape((2, real.len()), (2, imag.len())));
        }
        Ok(Self { real, imag })
    }

    pub fn width(&self) -> usize {
        self.real.len()
    }

    /// Time-domain energy, `sum re^2 + im^2`.
    pub fn energy(&self) -> f64 {
        self.real.iter().chain(&self.imag).map(|v| v * v).sum()
    }

    pub fn scaled(&self, s: f64) -> ComplexFilter {
        ComplexFilter {
            real: self.real.iter().map(|v| v * s).collect(),
            imag: self.imag.iter().map(|v| v * s).collect(),
        }
    }
}

/// Sample `gain exp(-2 pi i eta t) exp(-t^2 / 2 sigma^2) / (sqrt(2 pi) sigma)`
/// at `t = k - width/2`.
pub fn sample_gabor(p: &GaborParams, width: usize) -> Result<ComplexFilter> {
    if width % 2 != 0 {
        return Err(Error::OddLength(width));
    }
    let center = (width / 2) as f64;
    let norm = p.gain / ((2.0 * PI).sqrt() * p.sigma);
    let (mut real, mut imag) = (Vec::with_capacity(width), Vec::with_capacity(width));
    for k in 0..width {
        let t = k as f64 - center;
        let env = norm * (-t * t / (2.0 * p.sigma * p.sigma)).exp();
        let phase = -2.0 * PI * p.eta * t;
        real.push(env * phase.cos());
        imag.push(env * phase.sin());
    }
    Ok(ComplexFilter { real, imag })
}

/// Energy of the `n`-th mel triangle: the sum of its weights on the
/// one-sided grid.
///
/// A filter whose response satisfies `|H_k|^2 = n_fft * tri_k` reproduces the
/// band energy of the MFSC exactly; by Parseval its time-domain energy is
/// `sum_k tri_k`.
pub fn target_energy(spec: &MelSpec, n: usize) -> Result<f64> {
    Ok(spec.triangle_weights(n)?.iter().sum())
}

/// Rescale `f` so its time-domain energy equals [`target_energy`] of band `n`.
pub fn normalize_energy(f: &ComplexFilter, spec: &MelSpec, n: usize) -> Result<ComplexFilter> {
    let target = target_energy(spec, n)?;
    let e = f.energy();
    if !(e > 0.0) || !e.is_finite() {
        return Err(Error::ZeroEnergy);
    }
    Ok(f.scaled((target / e).sqrt()))
}

/// The energy-normalized Gabor bank for every band of `spec`.
pub fn gabor_bank(spec: &MelSpec) -> Result<Vec<ComplexFilter>> {
    gabor_params_from_mel(spec)
        .iter()
        .enumerate()
        .map(|(n, p)| normalize_energy(&sample_gabor(p, FILTER_WIDTH)?, spec, n))
        .collect()
}

/// Squared Hanning window, the time-domain counterpart of the STFT window's
/// power weighting.
pub fn init_lowpass(width: usize) -> Result<Vec<f64>> {
    Ok(hanning(width)?.squared().into_taps())
}
