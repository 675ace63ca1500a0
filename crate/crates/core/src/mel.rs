//! Reference mel-filterbank (MFSC) features.
//!
//! Triangular bands equally spaced on the HTK mel scale, applied to the
//! one-sided power spectrum of Hanning-windowed, pre-emphasized frames,
//! followed by `log(max(E, 1))` and per-utterance, per-channel
//! mean-variance normalization.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::fft::Fft;
use crate::signal::{frame_count, hanning, pre_emphasize, Waveform};
use crate::{Error, FeatureMap, Result};

pub const PRE_EMPHASIS: f64 = 0.97;

/// HTK mel scale, `2595 log10(1 + f / 700)`.
pub fn mel_of_hz(f: f64) -> Result<f64> {
    if !(f >= 0.0) {
        return Err(Error::NegativeInput(f));
    }
    Ok(2595.0 * (1.0 + f / 700.0).log10())
}

pub fn hz_of_mel(m: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::NegativeInput(m));
    }
    Ok(700.0 * (10.0.powf(m / 2595.0) - 1.0))
}

/// Mel filterbank design plus the framing geometry it is applied with.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpec {
    n_filters: usize,
    f_min: f64,
    f_max: f64,
    sample_rate: u32,
    win_length: usize,
    hop: usize,
    n_fft: usize,
    centers: Vec<f64>,
    fwhm: Vec<f64>,
    edges: Vec<f64>,
}

impl Default for MelSpec {
    /// 40 bands over 64-8000 Hz at 16 kHz.
    fn default() -> Self {
        make_mel_spec(40, 64.0, 8000.0, 16_000).expect("default mel spec is valid")
    }
}

/// Lay out `n_filters + 2` points equally spaced in mel between `f_min` and
/// `f_max`. Band `n` (0-based) spans points `n..=n + 2` with its center at
/// point `n + 1`; its FWHM is half the base width.
pub fn make_mel_spec(n_filters: usize, f_min: f64, f_max: f64, sample_rate: u32) -> Result<MelSpec> {
    if n_filters == 0 {
        return Err(Error::InvalidRange("at least one filter is required".into()));
    }
    let nyquist = sample_rate as f64 / 2.0;
    if !(f_min >= 0.0 && f_min < f_max && f_max <= nyquist) {
        return Err(Error::InvalidRange(alloc::format!(
            "need 0 <= f_min < f_max <= {nyquist}, got {f_min}..{f_max}"
        )));
    }
    let lo = mel_of_hz(f_min)?;
    let hi = mel_of_hz(f_max)?;
    let step = (hi - lo) / (n_filters + 1) as f64;
    let mut edges = Vec::with_capacity(n_filters + 2);
    for i in 0..n_filters + 2 {
        edges.push(hz_of_mel(lo + step * i as f64)?);
    }
    // Pin the outer edges to the requested range exactly.
    edges[0] = f_min;
    edges[n_filters + 1] = f_max;
    let centers = edges[1..=n_filters].to_vec();
    let fwhm = (0..n_filters).map(|n| (edges[n + 2] - edges[n]) / 2.0).collect();

    let win_length = (0.025 * sample_rate as f64).round() as usize;
    let hop = (0.010 * sample_rate as f64).round() as usize;
    Ok(MelSpec {
        n_filters,
        f_min,
        f_max,
        sample_rate,
        win_length,
        hop,
        n_fft: Fft::size_for(win_length),
        centers,
        fwhm,
        edges,
    })
}

impl MelSpec {
    pub fn n_filters(&self) -> usize {
        self.n_filters
    }
    pub fn f_min(&self) -> f64 {
        self.f_min
    }
    pub fn f_max(&self) -> f64 {
        self.f_max
    }
    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }
    pub fn win_length(&self) -> usize {
        self.win_length
    }
    pub fn hop(&self) -> usize {
        self.hop
    }
    pub fn n_fft(&self) -> usize {
        self.n_fft
    }
    /// Center frequencies in Hz.
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }
    /// Full width at half maximum of each triangle, in Hz.
    pub fn fwhm(&self) -> &[f64] {
        &self.fwhm
    }
    /// The `n_filters + 2` band edges in Hz.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Number of one-sided spectrum bins, `n_fft / 2 + 1`.
    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate as f64 / self.n_fft as f64
    }

    /// Squared frequency response of band `n` (0-based) sampled on the
    /// one-sided FFT grid: a unit-height triangle between the band edges.
    pub fn triangle_weights(&self, n: usize) -> Result<Vec<f64>> {
        if n >= self.n_filters {
            return Err(Error::IndexOutOfRange { index: n, len: self.n_filters });
        }
        let (left, center, right) = (self.edges[n], self.edges[n + 1], self.edges[n + 2]);
        let df = self.bin_hz();
        Ok((0..self.n_bins())
            .map(|k| {
                let f = k as f64 * df;
                if f <= left || f >= right {
                    0.0
                } else if f <= center {
                    (f - left) / (center - left)
                } else {
                    (right - f) / (right - center)
                }
            })
            .collect())
    }

    /// All bands, `n_filters x n_bins`, row-major.
    pub fn triangle_matrix(&self) -> Vec<f64> {
        (0..self.n_filters)
            .flat_map(|n| self.triangle_weights(n).expect("index in range"))
            .collect()
    }

    pub fn frame_count(&self, len: usize) -> usize {
        frame_count(len, self.win_length, self.hop)
    }
}

/// Mel band energies `Mx(t, n)` before log compression and normalization.
pub fn mfsc_energies(x: &Waveform, spec: &MelSpec) -> Result<FeatureMap> {
    let win = spec.win_length();
    if x.len() < win {
        return Err(Error::TooShort { needed: win, got: x.len() });
    }
    let y = pre_emphasize(x.samples(), PRE_EMPHASIS)?;
    let window = hanning(win)?;
    let fft = Fft::new(spec.n_fft())?;
    let weights = spec.triangle_matrix();
    let n_bins = spec.n_bins();
    let frames = spec.frame_count(x.len());

    let mut out = FeatureMap::zeros(frames, spec.n_filters());
    let mut buf = alloc::vec![Complex64::new(0.0, 0.0); spec.n_fft()];
    let mut power = alloc::vec![0.0; n_bins];
    for t in 0..frames {
        let start = t * spec.hop();
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (k, (s, w)) in y[start..start + win].iter().zip(window.taps()).enumerate() {
            buf[k] = Complex64::new(s * w, 0.0);
        }
        fft.forward(&mut buf);
        for (p, v) in power.iter_mut().zip(&buf[..n_bins]) {
            *p = v.norm_sqr();
        }
        for n in 0..spec.n_filters() {
            let row = &weights[n * n_bins..(n + 1) * n_bins];
            let e: f64 = row.iter().zip(&power).map(|(w, p)| w * p).sum();
            out.set(t, n, e);
        }
    }
    Ok(out)
}

/// `log(max(Mx, 1))` without the per-utterance normalization.
pub fn mfsc_log(x: &Waveform, spec: &MelSpec) -> Result<FeatureMap> {
    let mut m = mfsc_energies(x, spec)?;
    m.values_mut().iter_mut().for_each(|v| *v = v.max(1.0).ln());
    Ok(m)
}

/// Full MFSC pipeline: pre-emphasis, framing, Hanning window, 512-point
/// power spectrum, triangular bands, `log(max(., 1))`, per-channel
/// mean-variance normalization over the utterance.
pub fn mfsc(x: &Waveform, spec: &MelSpec) -> Result<FeatureMap> {
    Ok(mfsc_log(x, spec)?.normalized_per_channel())
}
