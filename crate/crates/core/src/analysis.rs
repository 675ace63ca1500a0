//! Filter analysis: frequency responses, center/bandwidth estimates and the
//! analyticity ratio `r_a` (negative- over positive-frequency energy).
//!
//! Responses are those the conv layer applies, `H(f) = sum_k w[k] e^{+2 pi i f k}`:
//! the layer cross-correlates, so a filter `e^{-2 pi i eta t} g(t)` responds at
//! `+eta`. Magnitudes equal `|DFT(conj(w))|`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::fft::Fft;
use crate::frontend::TdFilterbank;
use crate::{Error, Result, N_FFT};

fn response(real: &[f64], imag: &[f64], n_fft: usize) -> Result<Vec<Complex64>> {
    if real.len() != imag.len() {
        return Err(Error::shape((2, real.len()), (2, imag.len())));
    }
    if real.len() > n_fft {
        return Err(Error::InvalidArgument(alloc::format!(
            "{} taps do not fit in a {n_fft}-point transform",
            real.len()
        )));
    }
    let fft = Fft::new(n_fft)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for (b, (&re, &im)) in buf.iter_mut().zip(real.iter().zip(imag)) {
        *b = Complex64::new(re, -im);
    }
    fft.forward(&mut buf);
    Ok(buf)
}

/// `n_fft` magnitudes at frequencies `k sr / n_fft`, `k = -n_fft/2 .. n_fft/2 - 1`,
/// most negative first.
pub fn freq_response(real: &[f64], imag: &[f64], n_fft: usize) -> Result<Vec<f64>> {
    let h = response(real, imag, n_fft)?;
    let half = n_fft / 2;
    Ok((0..n_fft).map(|i| h[(i + half) % n_fft].norm()).collect())
}

/// Negative/positive energy ratio for one real/imaginary assignment. DC and
/// Nyquist are in neither half.
fn signed_energy_ratio(real: &[f64], imag: &[f64]) -> Result<f64> {
    let h = response(real, imag, N_FFT)?;
    let half = N_FFT / 2;
    let pos: f64 = h[1..half].iter().map(|v| v.norm_sqr()).sum();
    let neg: f64 = h[half + 1..].iter().map(|v| v.norm_sqr()).sum();
    Ok(if pos > 0.0 { neg / pos } else { f64::INFINITY })
}

/// Analyticity ratio of a complex filter: 0 when analytic, 1 for a purely
/// real filter. The layer cannot tell which tap row is the real part, so the
/// smaller ratio over both assignments is reported.
pub fn analyticity_ratio(real: &[f64], imag: &[f64]) -> Result<f64> {
    let energy: f64 = real.iter().chain(imag).map(|v| v * v).sum();
    if !(energy > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let a = signed_energy_ratio(real, imag)?;
    let b = signed_energy_ratio(imag, real)?;
    Ok(a.min(b).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub center_hz: f64,
    pub fwhm_hz: f64,
    /// Peak on DC or Nyquist, or the half-maximum band runs off the edge.
    pub at_band_edge: bool,
}

/// Center and bandwidth of the positive-frequency response.
///
/// The center is the peak of the squared magnitude, refined by a parabola
/// through the log-magnitudes of the peak bin and its neighbours. The
/// bandwidth is measured at half of the (interpolated) peak magnitude,
/// i.e. where the squared magnitude falls to a quarter of its peak, with
/// linear interpolation between bins at both crossings.
pub fn estimate_center_fwhm(real: &[f64], imag: &[f64], sample_rate: f64) -> Result<SpectralEstimate> {
    let energy: f64 = real.iter().chain(imag).map(|v| v * v).sum();
    if !(energy > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let h = response(real, imag, N_FFT)?;
    let half = N_FFT / 2;
    let mag: Vec<f64> = h[..=half].iter().map(|v| v.norm()).collect();
    let df = sample_rate / N_FFT as f64;
    let peak = (0..=half).max_by(|&a, &b| mag[a].total_cmp(&mag[b])).expect("non-empty");

    if peak == 0 || peak == half {
        return Ok(SpectralEstimate { center_hz: peak as f64 * df, fwhm_hz: 0.0, at_band_edge: true });
    }
    let (y0, y1, y2) = (mag[peak - 1].ln(), mag[peak].ln(), mag[peak + 1].ln());
    let curvature = y0 - 2.0 * y1 + y2;
    let (delta, log_peak) = if curvature < 0.0 && curvature.is_finite() {
        let d = 0.5 * (y0 - y2) / curvature;
        (d, y1 - 0.25 * (y0 - y2) * d)
    } else {
        (0.0, y1)
    };
    let threshold = log_peak.exp() / 2.0;

    let mut at_band_edge = false;
    let mut lo = peak;
    while lo > 0 && mag[lo - 1] >= threshold {
        lo -= 1;
    }
    let left = if lo == 0 {
        at_band_edge = true;
        0.0
    } else {
        lo as f64 - (mag[lo] - threshold) / (mag[lo] - mag[lo - 1])
    };
    let mut hi = peak;
    while hi < half && mag[hi + 1] >= threshold {
        hi += 1;
    }
    let right = if hi == half {
        at_band_edge = true;
        half as f64
    } else {
        hi as f64 + (mag[hi] - threshold) / (mag[hi] - mag[hi + 1])
    };
    Ok(SpectralEstimate { center_hz: (peak as f64 + delta) * df, fwhm_hz: (right - left) * df, at_band_edge })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterStats {
    /// 1-based filter index.
    pub index: usize,
    pub est_center_hz: f64,
    pub est_fwhm_hz: f64,
    pub r_a: f64,
    pub energy: f64,
    pub at_band_edge: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub filters: Vec<FilterStats>,
    /// Magnitude responses, one row of [`N_FFT`] values per complex filter,
    /// frequency ascending from `-sr/2`.
    pub heatmap: Vec<f64>,
    pub sample_rate: f64,
}

impl AnalysisReport {
    pub fn heatmap_row(&self, n: usize) -> &[f64] {
        &self.heatmap[n * N_FFT..(n + 1) * N_FFT]
    }

    /// Frequencies matching the heat-map columns.
    pub fn heatmap_frequencies(&self) -> Vec<f64> {
        let df = self.sample_rate / N_FFT as f64;
        (0..N_FFT).map(|i| (i as f64 - (N_FFT / 2) as f64) * df).collect()
    }

    pub fn mean_r_a(&self) -> f64 {
        self.filters.iter().map(|f| f.r_a).sum::<f64>() / self.filters.len().max(1) as f64
    }
}

pub fn analyze(fb: &TdFilterbank, sample_rate: f64) -> Result<AnalysisReport> {
    let mut filters = Vec::with_capacity(fb.n_filters());
    let mut heatmap = Vec::with_capacity(fb.n_filters() * N_FFT);
    for n in 0..fb.n_filters() {
        let f = fb.complex_filter(n)?;
        let est = estimate_center_fwhm(&f.real, &f.imag, sample_rate)?;
        filters.push(FilterStats {
            index: n + 1,
            est_center_hz: est.center_hz,
            est_fwhm_hz: est.fwhm_hz,
            r_a: analyticity_ratio(&f.real, &f.imag)?,
            energy: f.energy(),
            at_band_edge: est.at_band_edge,
        });
        heatmap.extend(freq_response(&f.real, &f.imag, N_FFT)?);
    }
    Ok(AnalysisReport { filters, heatmap, sample_rate })
}
