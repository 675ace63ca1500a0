//! Reverse-mode gradients of the front-end.
//!
//! The chain runs backwards through `log(1 + |u|)`, the grouped conv, the
//! square, the L2 pooling, the wide conv and the optional pre-emphasis
//! layer. Subgradients at the kinks are zero: `sign(0) = 0` for the absolute
//! value, and the pooling derivative `z / |z|` is zero where the pooled
//! modulus vanishes. The input normalization is preprocessing and is not
//! differentiated.

use alloc::vec;
use alloc::vec::Vec;

use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conv::grouped_conv_backward;
use crate::frontend::{TdFilterbank, Trace};
use crate::signal::Waveform;
use crate::{Error, FeatureMap, Result};

/// Gradients laid out exactly like the parameters of a [`TdFilterbank`].
/// Blocks that are not trainable are all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub d_conv: Vec<f64>,
    pub d_lowpass: Vec<f64>,
    pub d_preemph: Option<[f64; 2]>,
    /// Gradient with respect to the normalized waveform, when requested.
    pub d_input: Option<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(fb: &TdFilterbank) -> Self {
        Gradients {
            d_conv: vec![0.0; fb.conv_weights().len()],
            d_lowpass: vec![0.0; fb.lowpass_weights().len()],
            d_preemph: fb.preemph_kernel().map(|_| [0.0; 2]),
            d_input: None,
        }
    }

    /// Accumulate `other` into `self` (parameter blocks only).
    pub fn accumulate(&mut self, other: &Gradients) {
        self.d_conv.iter_mut().zip(&other.d_conv).for_each(|(a, b)| *a += b);
        self.d_lowpass.iter_mut().zip(&other.d_lowpass).for_each(|(a, b)| *a += b);
        if let (Some(a), Some(b)) = (self.d_preemph.as_mut(), other.d_preemph) {
            a[0] += b[0];
            a[1] += b[1];
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.d_conv.iter_mut().chain(self.d_lowpass.iter_mut()).for_each(|v| *v *= s);
        if let Some(p) = self.d_preemph.as_mut() {
            p[0] *= s;
            p[1] *= s;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.d_conv
            .iter()
            .chain(&self.d_lowpass)
            .chain(self.d_preemph.iter().flatten())
            .chain(self.d_input.iter().flatten())
            .all(|v| v.is_finite())
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Gradients of `sum(upstream * forward(fb, x))` with respect to the
/// trainable parameters.
pub fn backward(fb: &TdFilterbank, x: &Waveform, upstream: &FeatureMap) -> Result<Gradients> {
    let trace = fb.forward_traced(x)?;
    backward_traced(fb, &trace, upstream, false)
}

/// Same as [`backward`] but reusing the intermediates of a forward pass.
/// With `with_input` the gradient with respect to the normalized waveform is
/// also returned.
pub fn backward_traced(fb: &TdFilterbank, trace: &Trace, upstream: &FeatureMap, with_input: bool) -> Result<Gradients> {
    let expected = trace.features.shape();
    if upstream.shape() != expected {
        return Err(Error::shape(expected, upstream.shape()));
    }
    let trainable = fb.trainable();
    let mut grads = Gradients::zeros_like(fb);
    let need_conv_path = trainable.conv || trainable.preemph || with_input;
    if !(need_conv_path || trainable.lowpass) {
        return Ok(grads);
    }

    // log(1 + |u|) then |u|.
    let d_avg: Vec<f64> = upstream
        .values()
        .iter()
        .zip(&trace.averaged)
        .map(|(g, &u)| g * sign(u) / (1.0 + u.abs()))
        .collect();

    let len = trace.len();
    let (d_sq, d_lp) =
        grouped_conv_backward(&trace.squared, len, fb.lowpass_weights(), fb.width(), fb.stride(), &d_avg);
    if trainable.lowpass {
        grads.d_lowpass = d_lp;
    }
    if !need_conv_path {
        return Ok(grads);
    }

    // square: d pooled = 2 pooled d squared; pooling: d z = z / pooled d pooled.
    let n = fb.n_filters();
    let mut d_conv_out = vec![0.0; 2 * n * len];
    for c in 0..n {
        let pooled = &trace.pooled[c * len..(c + 1) * len];
        let d_s = &d_sq[c * len..(c + 1) * len];
        for t in 0..len {
            let q = pooled[t];
            if q == 0.0 {
                continue;
            }
            let d_pooled = 2.0 * q * d_s[t];
            let re = trace.conv_out[2 * c * len + t];
            let im = trace.conv_out[(2 * c + 1) * len + t];
            d_conv_out[2 * c * len + t] = d_pooled * re / q;
            d_conv_out[(2 * c + 1) * len + t] = d_pooled * im / q;
        }
    }

    let want_signal = trainable.preemph || with_input;
    let (d_rows, d_signal) = trace.plan.backward(&trace.spectrum, &d_conv_out, want_signal);
    if trainable.conv {
        grads.d_conv = d_rows;
    }

    if let Some(d_p) = d_signal {
        let xn = &trace.normalized;
        if let Some(k) = fb.preemph_kernel() {
            // p[t] = k0 x[t-1] + k1 x[t]
            let mut dk = [0.0; 2];
            for t in 0..len {
                dk[1] += d_p[t] * xn[t];
                if t > 0 {
                    dk[0] += d_p[t] * xn[t - 1];
                }
            }
            grads.d_preemph = Some(dk);
            if with_input {
                let mut d_x = vec![0.0; len];
                for t in 0..len {
                    d_x[t] += k[1] * d_p[t];
                    if t + 1 < len {
                        d_x[t] += k[0] * d_p[t + 1];
                    }
                }
                grads.d_input = Some(d_x);
            }
        } else if with_input {
            grads.d_input = Some(d_p);
        }
    }
    Ok(grads)
}

/// Which parameter block a checked entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Conv,
    Lowpass,
    Preemph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(block, entries checked, max relative error)`.
    pub per_block: Vec<(Block, usize, f64)>,
    /// Candidates rejected because the perturbation crossed a kink.
    pub skipped: usize,
}

/// Entries drawn per large block.
pub const GRADCHECK_SAMPLES: usize = 200;

/// Max relative error between analytic and central-difference gradients.
/// See [`finite_diff_report`].
pub fn finite_diff_check(fb: &TdFilterbank, x: &Waveform, seed: u64) -> Result<f64> {
    Ok(finite_diff_report(fb, x, seed)?.max_rel_error)
}

/// Compare analytic gradients against central differences of the scalar
/// loss `sum(R * forward(fb, x))`, with `R` a seeded uniform `[-1, 1]`
/// weight matrix.
///
/// For each trainable block, [`GRADCHECK_SAMPLES`] distinct entries (or all
/// of them, for the pre-emphasis kernel) are drawn with a ChaCha8 generator
/// seeded by `seed`. Each is perturbed by `h = 1e-5 max(1, |theta|)`.
/// Candidates whose perturbation flips the sign of any grouped-conv output
/// sit on a kink of `|.|` and are redrawn. The loss difference is summed
/// feature by feature, so features a parameter does not reach cancel
/// exactly. The relative error of an entry is
/// `|a - n| / max(|a|, |n|, 1e-6 max_block |a|)`.
pub fn finite_diff_report(fb: &TdFilterbank, x: &Waveform, seed: u64) -> Result<GradCheckReport> {
    if !(800..=4000).contains(&x.len()) {
        return Err(Error::InvalidArgument(alloc::format!(
            "gradient check expects 800..=4000 samples, got {}",
            x.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trace = fb.forward_traced(x)?;
    let (frames, channels) = trace.features.shape();
    let unit = Uniform::new_inclusive(-1.0, 1.0).expect("finite bounds");
    let weights: Vec<f64> = (0..frames * channels).map(|_| unit.sample(&mut rng)).collect();
    let upstream = FeatureMap::new(frames, channels, weights.clone())?;
    let analytic = backward_traced(fb, &trace, &upstream, false)?;

    let base_signs: Vec<f64> = trace.averaged.iter().map(|&u| sign(u)).collect();
    let normalized = trace.normalized.clone();
    let eval = |probe: &TdFilterbank| -> Result<(FeatureMap, bool)> {
        let tr = probe.forward_normalized(normalized.clone())?;
        let same_signs = tr.averaged.iter().zip(&base_signs).all(|(&u, &s)| sign(u) == s);
        Ok((tr.features, same_signs))
    };

    let trainable = fb.trainable();
    let mut report = GradCheckReport { max_rel_error: 0.0, per_block: Vec::new(), skipped: 0 };
    let blocks = [
        (Block::Conv, trainable.conv, fb.conv_weights().len()),
        (Block::Lowpass, trainable.lowpass, fb.lowpass_weights().len()),
        (Block::Preemph, trainable.preemph, if fb.preemph_kernel().is_some() { 2 } else { 0 }),
    ];
    for (block, enabled, size) in blocks {
        if !enabled || size == 0 {
            continue;
        }
        let grad_of = |i: usize| match block {
            Block::Conv => analytic.d_conv[i],
            Block::Lowpass => analytic.d_lowpass[i],
            Block::Preemph => analytic.d_preemph.expect("kernel present")[i],
        };
        let floor = 1e-6 * (0..size).map(|i| grad_of(i).abs()).fold(0.0, f64::max);
        let target = GRADCHECK_SAMPLES.min(size);
        let mut tried = vec![false; size];
        let mut remaining = size;
        let (mut checked, mut block_max) = (0usize, 0.0f64);
        while checked < target && remaining > 0 {
            let i = if size <= GRADCHECK_SAMPLES {
                (0..size).find(|&j| !tried[j]).expect("untried entry")
            } else {
                loop {
                    let j = rng.random_range(0..size);
                    if !tried[j] {
                        break j;
                    }
                }
            };
            tried[i] = true;
            remaining -= 1;

            let mut probe = fb.clone();
            let theta = param_mut(&mut probe, block, i);
            let original = *theta;
            let h = 1e-5 * original.abs().max(1.0);
            *theta = original + h;
            let (plus, ok_plus) = eval(&probe)?;
            *param_mut(&mut probe, block, i) = original - h;
            let (minus, ok_minus) = eval(&probe)?;
            if !(ok_plus && ok_minus) {
                report.skipped += 1;
                continue;
            }
            let numeric = plus
                .values()
                .iter()
                .zip(minus.values())
                .zip(&weights)
                .map(|((p, m), r)| r * (p - m))
                .sum::<f64>()
                / (2.0 * h);
            let a = grad_of(i);
            let denom = a.abs().max(numeric.abs()).max(floor);
            let rel = if denom == 0.0 { 0.0 } else { (a - numeric).abs() / denom };
            block_max = block_max.max(rel);
            checked += 1;
        }
        report.per_block.push((block, checked, block_max));
        report.max_rel_error = report.max_rel_error.max(block_max);
    }
    Ok(report)
}

fn param_mut(fb: &mut TdFilterbank, block: Block, i: usize) -> &mut f64 {
    match block {
        Block::Conv => &mut fb.conv_weights_mut()[i],
        Block::Lowpass => &mut fb.lowpass_weights_mut()[i],
        Block::Preemph => &mut fb.preemph_kernel_mut().expect("kernel present")[i],
    }
}
