//! The learnable time-domain filterbank.
//!
//! Layer stack, applied to a mean-variance normalized waveform:
//!
//! | layer                 | channels | width | stride |
//! |-----------------------|----------|-------|--------|
//! | pre-emphasis (opt.)   | 1 -> 1   | 2     | 1      |
//! | conv                  | 1 -> 80  | 400   | 1      |
//! | feature L2 pooling    | 80 -> 40 |       |        |
//! | square                |          |       |        |
//! | grouped conv          | 40 -> 40 | 400   | 160    |
//! | absolute value        |          |       |        |
//! | log(1 + .)            |          |       |        |
//!
//! No layer has a bias.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::conv::{grouped_conv, WideConv};
use crate::gabor::{gabor_bank, init_lowpass, ComplexFilter};
use crate::mel::{MelSpec, PRE_EMPHASIS};
use crate::signal::{frame_count, mean_variance_normalize, Waveform};
use crate::{Error, FeatureMap, Result, FILTER_WIDTH, HOP, N_FILTERS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LearningMode {
    /// Gabor/Hanning initialization, nothing learned.
    Fixed,
    /// Gabor/Hanning initialization, filters and averagers learned.
    LearnAll,
    /// Gabor/Hanning initialization, only the complex filters learned.
    LearnFilterbank,
    /// Random initialization, filters and averagers learned.
    Randinit,
}

impl LearningMode {
    pub const ALL: [LearningMode; 4] =
        [LearningMode::Fixed, LearningMode::LearnAll, LearningMode::LearnFilterbank, LearningMode::Randinit];

    pub fn as_str(self) -> &'static str {
        match self {
            LearningMode::Fixed => "fixed",
            LearningMode::LearnAll => "learn-all",
            LearningMode::LearnFilterbank => "learn-filterbank",
            LearningMode::Randinit => "randinit",
        }
    }

    pub fn is_gabor_initialized(self) -> bool {
        self != LearningMode::Randinit
    }
}

impl fmt::Display for LearningMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearningMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "fixed" => Ok(LearningMode::Fixed),
            "learn-all" => Ok(LearningMode::LearnAll),
            "learn-filterbank" => Ok(LearningMode::LearnFilterbank),
            "randinit" => Ok(LearningMode::Randinit),
            _ => Err(Error::InvalidArgument(alloc::format!("unknown learning mode '{s}'"))),
        }
    }
}

/// Which parameter blocks receive updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Trainable {
    pub conv: bool,
    pub lowpass: bool,
    pub preemph: bool,
}

impl Trainable {
    pub fn for_mode(mode: LearningMode, with_preemph: bool) -> Self {
        let (conv, lowpass) = match mode {
            LearningMode::Fixed => (false, false),
            LearningMode::LearnFilterbank => (true, false),
            LearningMode::LearnAll | LearningMode::Randinit => (true, true),
        };
        Trainable { conv, lowpass, preemph: with_preemph }
    }

    pub fn any(self) -> bool {
        self.conv || self.lowpass || self.preemph
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdFilterbank {
    /// `2 * n_filters x width`; rows `2n`, `2n + 1` are the real and
    /// imaginary parts of complex filter `n`.
    conv: Vec<f64>,
    /// `n_filters x width`.
    lowpass: Vec<f64>,
    /// `out[t] = k[0] x[t - 1] + k[1] x[t]`.
    preemph: Option<[f64; 2]>,
    mode: LearningMode,
    n_filters: usize,
    width: usize,
    stride: usize,
}

/// Intermediate values of one forward pass, enough to run the backward pass
/// without recomputation.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Mean-variance normalized waveform.
    pub normalized: Vec<f64>,
    /// Input to the wide conv (after the optional pre-emphasis layer).
    pub conv_input: Vec<f64>,
    pub(crate) plan: WideConv,
    pub(crate) spectrum: Vec<Complex64>,
    /// Wide conv output, `2N x L`.
    pub conv_out: Vec<f64>,
    /// L2-pooled modulus, `N x L`.
    pub pooled: Vec<f64>,
    /// Squared modulus, `N x L`.
    pub squared: Vec<f64>,
    /// Grouped conv output before the absolute value, `frames x N`.
    pub averaged: Vec<f64>,
    pub features: FeatureMap,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.normalized.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normalized.is_empty()
    }
}

fn random_taps(rng: &mut ChaCha8Rng, n: usize, width: usize) -> Vec<f64> {
    let bound = 1.0 / (width as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bounds");
    (0..n).map(|_| dist.sample(rng)).collect()
}

impl TdFilterbank {
    /// Initialize for `mode`. Gabor-initialized modes use the energy-matched
    /// Gabor bank and squared-Hanning averagers; `Randinit` draws every conv
    /// and averager tap uniformly from `[-1/sqrt(400), 1/sqrt(400)]` with a
    /// ChaCha8 generator seeded by `seed`. The optional pre-emphasis kernel
    /// always starts at `(-0.97, 1)`.
    pub fn build(spec: &MelSpec, mode: LearningMode, with_preemph: bool, seed: u64) -> Result<Self> {
        let n_filters = spec.n_filters();
        let width = FILTER_WIDTH;
        let (conv, lowpass) = if mode.is_gabor_initialized() {
            let mut conv = Vec::with_capacity(2 * n_filters * width);
            for f in gabor_bank(spec)? {
                conv.extend_from_slice(&f.real);
                conv.extend_from_slice(&f.imag);
            }
            let lp = init_lowpass(width)?;
            let lowpass = (0..n_filters).flat_map(|_| lp.iter().copied()).collect();
            (conv, lowpass)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let conv = random_taps(&mut rng, 2 * n_filters * width, width);
            let lowpass = random_taps(&mut rng, n_filters * width, width);
            (conv, lowpass)
        };
        Ok(Self {
            conv,
            lowpass,
            preemph: with_preemph.then_some([-PRE_EMPHASIS, 1.0]),
            mode,
            n_filters,
            width,
            stride: HOP,
        })
    }

    /// Reassemble a filterbank from stored parameter blocks (paper geometry:
    /// 40 complex filters, width 400, stride 160).
    pub fn from_parts(conv: Vec<f64>, lowpass: Vec<f64>, preemph: Option<[f64; 2]>, mode: LearningMode) -> Result<Self> {
        let (n, w) = (N_FILTERS, FILTER_WIDTH);
        if conv.len() != 2 * n * w {
            return Err(Error::shape((2 * n, w), (conv.len() / w, w)));
        }
        if lowpass.len() != n * w {
            return Err(Error::shape((n, w), (lowpass.len() / w, w)));
        }
        let all_finite = conv.iter().chain(&lowpass).chain(preemph.iter().flatten()).all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        Ok(Self { conv, lowpass, preemph, mode, n_filters: n, width: w, stride: HOP })
    }

    pub fn mode(&self) -> LearningMode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: LearningMode) {
        self.mode = mode;
    }

    pub fn n_filters(&self) -> usize {
        self.n_filters
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn conv_weights(&self) -> &[f64] {
        &self.conv
    }

    pub fn conv_weights_mut(&mut self) -> &mut [f64] {
        &mut self.conv
    }

    pub fn lowpass_weights(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn lowpass_weights_mut(&mut self) -> &mut [f64] {
        &mut self.lowpass
    }

    pub fn preemph_kernel(&self) -> Option<[f64; 2]> {
        self.preemph
    }

    pub fn preemph_kernel_mut(&mut self) -> Option<&mut [f64; 2]> {
        self.preemph.as_mut()
    }

    pub fn trainable(&self) -> Trainable {
        Trainable::for_mode(self.mode, self.preemph.is_some())
    }

    pub fn trainable_parameter_count(&self) -> usize {
        let t = self.trainable();
        let mut n = 0;
        if t.conv {
            n += self.conv.len();
        }
        if t.lowpass {
            n += self.lowpass.len();
        }
        if t.preemph {
            n += 2;
        }
        n
    }

    /// Complex filter `n` as a real/imaginary tap pair.
    pub fn complex_filter(&self, n: usize) -> Result<ComplexFilter> {
        if n >= self.n_filters {
            return Err(Error::IndexOutOfRange { index: n, len: self.n_filters });
        }
        let w = self.width;
        ComplexFilter::new(
            self.conv[2 * n * w..(2 * n + 1) * w].to_vec(),
            self.conv[(2 * n + 1) * w..(2 * n + 2) * w].to_vec(),
        )
    }

    pub fn frame_count(&self, len: usize) -> usize {
        frame_count(len, self.width, self.stride)
    }

    pub fn forward(&self, x: &Waveform) -> Result<FeatureMap> {
        Ok(self.forward_traced(x)?.features)
    }

    pub fn forward_traced(&self, x: &Waveform) -> Result<Trace> {
        if x.len() < self.width {
            return Err(Error::TooShort { needed: self.width, got: x.len() });
        }
        let normalized = mean_variance_normalize(x.samples())?;
        self.forward_normalized(normalized)
    }

    /// Forward pass from an already normalized waveform.
    pub fn forward_normalized(&self, normalized: Vec<f64>) -> Result<Trace> {
        let len = normalized.len();
        if len < self.width {
            return Err(Error::TooShort { needed: self.width, got: len });
        }
        let conv_input = match self.preemph {
            Some(k) => {
                let mut p = Vec::with_capacity(len);
                p.push(k[1] * normalized[0]);
                p.extend(normalized.windows(2).map(|w| k[0] * w[0] + k[1] * w[1]));
                p
            }
            None => normalized.clone(),
        };
        let plan = WideConv::new(&self.conv, self.width, len)?;
        let spectrum = plan.signal_spectrum(&conv_input);
        let conv_out = plan.forward(&spectrum);

        let n = self.n_filters;
        let mut pooled = vec![0.0; n * len];
        for c in 0..n {
            let re = &conv_out[2 * c * len..(2 * c + 1) * len];
            let im = &conv_out[(2 * c + 1) * len..(2 * c + 2) * len];
            for (t, out) in pooled[c * len..(c + 1) * len].iter_mut().enumerate() {
                *out = l2_norm(re[t], im[t]);
            }
        }
        let squared: Vec<f64> = pooled.iter().map(|v| v * v).collect();
        let averaged = grouped_conv(&squared, len, &self.lowpass, self.width, self.stride);
        let frames = self.frame_count(len);
        let features = FeatureMap::new(frames, n, averaged.iter().map(|u| u.abs().ln_1p()).collect())?;
        Ok(Trace { normalized, conv_input, plan, spectrum, conv_out, pooled, squared, averaged, features })
    }

    /// Plain gradient step on every trainable block.
    pub fn sgd_step(&mut self, grads: &crate::Gradients, lr: f64) {
        let t = self.trainable();
        if t.conv {
            self.conv.iter_mut().zip(&grads.d_conv).for_each(|(w, g)| *w -= lr * g);
        }
        if t.lowpass {
            self.lowpass.iter_mut().zip(&grads.d_lowpass).for_each(|(w, g)| *w -= lr * g);
        }
        if let (Some(k), Some(g)) = (self.preemph.as_mut(), grads.d_preemph) {
            k[0] -= lr * g[0];
            k[1] -= lr * g[1];
        }
    }
}

fn l2_norm(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

/// Feature L2 pooling: `out[k] = sqrt(z[2k]^2 + z[2k + 1]^2)`.
pub fn l2_pool(z: &[f64]) -> Result<Vec<f64>> {
    if z.len() % 2 != 0 {
        return Err(Error::OddLength(z.len()));
    }
    Ok(z.chunks_exact(2).map(|p| l2_norm(p[0], p[1])).collect())
}
