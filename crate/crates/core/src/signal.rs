//! Waveforms, analysis windows, pre-emphasis and mean-variance normalization.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result, SAMPLE_RATE};

/// Standard deviations below this are treated as silence by
/// [`mean_variance_normalize`].
pub const DEGENERATE_STD: f64 = 1e-12;

/// A mono 16 kHz signal. Samples keep whatever scale they were read with
/// (16-bit integer range for WAV input).
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>) -> Self {
        Self { samples, sample_rate: SAMPLE_RATE }
    }

    pub fn with_sample_rate(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate != SAMPLE_RATE {
            return Err(Error::UnsupportedSampleRate(sample_rate));
        }
        Ok(Self::new(samples))
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Hanning,
    HanningSquared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    taps: Vec<f64>,
    kind: WindowKind,
}

impl Window {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.taps.len()
    }

    /// Elementwise square, the power weighting of the window.
    pub fn squared(&self) -> Window {
        let kind = match self.kind {
            WindowKind::Hanning => WindowKind::HanningSquared,
            // Squaring twice has no name; keep the tag and let taps speak.
            WindowKind::HanningSquared => WindowKind::HanningSquared,
        };
        Window { taps: self.taps.iter().map(|t| t * t).collect(), kind }
    }

    pub fn into_taps(self) -> Vec<f64> {
        self.taps
    }
}

/// Symmetric Hanning window, `0.5 - 0.5 cos(2 pi k / (width - 1))`, with zero
/// endpoints.
pub fn hanning(width: usize) -> Result<Window> {
    if width < 2 {
        return Err(Error::InvalidArgument(alloc::format!(
            "window width must be at least 2, got {width}"
        )));
    }
    let denom = (width - 1) as f64;
    let mut taps: Vec<f64> = (0..width)
        .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / denom).cos())
        .collect();
    // Mirror so the window is exactly symmetric regardless of cos rounding.
    for k in 0..width / 2 {
        taps[width - 1 - k] = taps[k];
    }
    Ok(Window { taps, kind: WindowKind::Hanning })
}

/// First-order pre-emphasis `y[t] = x[t] - alpha x[t-1]`, with `y[0] = x[0]`.
pub fn pre_emphasis(x: &Waveform, alpha: f64) -> Result<Waveform> {
    let samples = pre_emphasize(x.samples(), alpha)?;
    Ok(Waveform { samples, sample_rate: x.sample_rate })
}

/// Slice form of [`pre_emphasis`].
pub fn pre_emphasize(x: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(alloc::format!(
            "pre-emphasis coefficient must lie in [0, 1), got {alpha}"
        )));
    }
    let mut y = Vec::with_capacity(x.len());
    y.push(x[0]);
    y.extend(x.windows(2).map(|w| w[1] - alpha * w[0]));
    Ok(y)
}

/// Shift to zero mean and scale to unit population standard deviation.
///
/// Inputs whose standard deviation is below [`DEGENERATE_STD`] map to all
/// zeros.
pub fn mean_variance_normalize(v: &[f64]) -> Result<Vec<f64>> {
    if v.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: v.len() });
    }
    let mut out = v.to_vec();
    normalize_in_place(&mut out);
    Ok(out)
}

/// In-place normalization used on feature columns. Sequences shorter than two
/// samples are degenerate and become zeros.
pub(crate) fn normalize_in_place(v: &mut [f64]) {
    let (mean, std) = mean_std(v);
    if v.len() < 2 || !(std >= DEGENERATE_STD) {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    for x in v.iter_mut() {
        *x = (*x - mean) / std;
    }
}

/// Sample mean and population standard deviation (two-pass).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Number of full windows of `width` samples taken every `hop` samples.
pub fn frame_count(len: usize, width: usize, hop: usize) -> usize {
    if len < width {
        0
    } else {
        (len - width) / hop + 1
    }
}

#[cfg(test)]
mod tests {
    extern crate std;

    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn pre_emphasis_examples() {
        let y = pre_emphasize(&[1.0, 1.0, 1.0], 0.97).unwrap();
        assert!(close(&y, &[1.0, 0.03, 0.03], 1e-12));
        assert_eq!(pre_emphasize(&[0.0; 5], 0.97).unwrap(), vec![0.0; 5]);
        let y = pre_emphasize(&[1.0, 0.0, 0.0, 0.0], 0.97).unwrap();
        assert_eq!(y, vec![1.0, -0.97, 0.0, 0.0]);
    }

    #[test]
    fn pre_emphasis_errors() {
        assert_eq!(pre_emphasize(&[], 0.97), Err(Error::EmptyInput));
        assert!(pre_emphasize(&[1.0], 1.0).is_err());
        assert!(pre_emphasize(&[1.0], -0.1).is_err());
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(mean_variance_normalize(&[1.0, 3.0]).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(mean_variance_normalize(&[5.0, 5.0, 5.0]).unwrap(), vec![0.0; 3]);
        assert!(matches!(mean_variance_normalize(&[1.0]), Err(Error::TooShort { .. })));
    }

    #[test]
    fn hanning_examples() {
        let w = hanning(4).unwrap();
        assert!(close(w.taps(), &[0.0, 0.75, 0.75, 0.0], 1e-15));
        let w = hanning(3).unwrap();
        assert!(close(w.taps(), &[0.0, 1.0, 0.0], 1e-15));
        assert!(hanning(1).is_err());
        assert_eq!(w.kind(), WindowKind::Hanning);
        assert_eq!(w.squared().kind(), WindowKind::HanningSquared);
    }

    #[test]
    fn hanning_area() {
        // The closed form (width - 1) / 2 needs width >= 3; width 2 is all zeros.
        assert_eq!(hanning(2).unwrap().taps(), &[0.0, 0.0]);
        for width in [3usize, 10, 400, 1001] {
            let sum: f64 = hanning(width).unwrap().taps().iter().sum();
            let want = (width - 1) as f64 / 2.0;
            assert!((sum - want).abs() <= 1e-9 * want, "width {width}: {sum} vs {want}");
        }
    }

    #[test]
    fn waveform_rate_checked() {
        assert_eq!(
            Waveform::with_sample_rate(vec![0.0], 44_100),
            Err(Error::UnsupportedSampleRate(44_100))
        );
        let w = Waveform::with_sample_rate(vec![0.0; 32_000], 16_000).unwrap();
        assert_eq!(w.duration_s(), 2.0);
    }

    #[test]
    fn frame_count_formula() {
        assert_eq!(frame_count(16_000, 400, 160), 98);
        assert_eq!(frame_count(400, 400, 160), 1);
        assert_eq!(frame_count(399, 400, 160), 0);
    }

    proptest! {
        #[test]
        fn pre_emphasis_is_linear(
            x in prop::collection::vec(-1e3f64..1e3, 1..64),
            a in -5.0f64..5.0, b in -5.0f64..5.0, alpha in 0.0f64..0.999,
        ) {
            let y: Vec<f64> = x.iter().rev().copied().collect();
            let mixed: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let lhs = pre_emphasize(&mixed, alpha).unwrap();
            let px = pre_emphasize(&x, alpha).unwrap();
            let py = pre_emphasize(&y, alpha).unwrap();
            for i in 0..x.len() {
                let rhs = a * px[i] + b * py[i];
                prop_assert!((lhs[i] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
            }
        }

        #[test]
        fn normalize_moments_and_idempotence(v in prop::collection::vec(-1e4f64..1e4, 2..200)) {
            let n = mean_variance_normalize(&v).unwrap();
            let (mean, std) = mean_std(&n);
            if mean_std(&v).1 >= DEGENERATE_STD {
                prop_assert!(mean.abs() < 1e-9);
                prop_assert!((std - 1.0).abs() < 1e-9);
            }
            let twice = mean_variance_normalize(&n).unwrap();
            prop_assert!(close(&twice, &n, 1e-9));
        }

        #[test]
        fn hanning_symmetric(width in 2usize..2000) {
            let w = hanning(width).unwrap();
            let t = w.taps();
            for k in 0..width {
                prop_assert_eq!(t[k], t[width - 1 - k]);
                prop_assert!((0.0..=1.0).contains(&t[k]));
            }
        }
    }
}
