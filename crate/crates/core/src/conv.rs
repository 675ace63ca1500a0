//! Convolution layers of the front-end and their transposes.
//!
//! Both layers follow the deep-learning convention (cross-correlation):
//!
//! * wide layer: `z[t] = sum_k w[k] x[t + k - width/2]`, zero padded so the
//!   output has the input's length;
//! * grouped layer: `u[f] = sum_k w[k] s[f * stride + k]`, valid positions
//!   only.
//!
//! The wide layer runs in the frequency domain: each real/imaginary row pair
//! is packed into one complex filter, so a single complex product gives both
//! output channels for a real input.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::fft::Fft;
use crate::signal::frame_count;
use crate::Result;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Frequency-domain plan for the wide complex convolution over signals of
/// one length.
#[derive(Debug, Clone)]
pub struct WideConv {
    fft: Fft,
    len: usize,
    width: usize,
    /// Spectra of the time-reversed complex filters, one per pair.
    filters: Vec<Vec<Complex64>>,
}

impl WideConv {
    /// `rows` holds `2 * pairs` rows of `width` taps; rows `2n` and `2n + 1`
    /// are the real and imaginary parts of filter `n`.
    pub fn new(rows: &[f64], width: usize, len: usize) -> Result<Self> {
        let fft = Fft::new(Fft::size_for(len + width - 1))?;
        let m = fft.len();
        let pairs = rows.len() / (2 * width);
        let filters = (0..pairs)
            .map(|n| {
                let re = &rows[2 * n * width..(2 * n + 1) * width];
                let im = &rows[(2 * n + 1) * width..(2 * n + 2) * width];
                let mut h = vec![ZERO; m];
                for k in 0..width {
                    h[width - 1 - k] = Complex64::new(re[k], im[k]);
                }
                fft.forward_bitrev(&mut h);
                h
            })
            .collect();
        Ok(Self { fft, len, width, filters })
    }

    pub fn pairs(&self) -> usize {
        self.filters.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn offset(&self) -> usize {
        self.width - 1 - self.width / 2
    }

    /// Spectrum of a real input signal of the planned length, in the
    /// bit-reversed order of [`Fft::forward_bitrev`].
    pub fn signal_spectrum(&self, x: &[f64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.len);
        let mut buf = vec![ZERO; self.fft.len()];
        for (b, &v) in buf.iter_mut().zip(x) {
            b.re = v;
        }
        self.fft.forward_bitrev(&mut buf);
        buf
    }

    /// Output rows `2 * pairs x len`, row-major.
    pub fn forward(&self, x_spec: &[Complex64]) -> Vec<f64> {
        let (len, off) = (self.len, self.offset());
        let mut out = vec![0.0; 2 * self.pairs() * len];
        let mut buf = vec![ZERO; self.fft.len()];
        for (n, h) in self.filters.iter().enumerate() {
            for ((b, p), q) in buf.iter_mut().zip(x_spec).zip(h) {
                *b = p * q;
            }
            self.fft.inverse_from_bitrev(&mut buf);
            let (re, rest) = out[2 * n * len..].split_at_mut(len);
            let im = &mut rest[..len];
            for t in 0..len {
                re[t] = buf[t + off].re;
                im[t] = buf[t + off].im;
            }
        }
        out
    }

    /// Transpose of [`WideConv::forward`]: given the gradient with respect to
    /// every output row, returns the gradient with respect to the filter
    /// taps (same layout as `rows` in [`WideConv::new`]) and, when
    /// requested, with respect to the input signal.
    pub fn backward(
        &self,
        x_spec: &[Complex64],
        d_out: &[f64],
        want_input: bool,
    ) -> (Vec<f64>, Option<Vec<f64>>) {
        let (len, off, width, m) = (self.len, self.offset(), self.width, self.fft.len());
        let mut d_rows = vec![0.0; 2 * self.pairs() * width];
        let mut acc = if want_input { Some(vec![ZERO; m]) } else { None };
        let mut g = vec![ZERO; m];
        let mut buf = vec![ZERO; m];
        for (n, h) in self.filters.iter().enumerate() {
            let d_re = &d_out[2 * n * len..(2 * n + 1) * len];
            let d_im = &d_out[(2 * n + 1) * len..(2 * n + 2) * len];
            g.iter_mut().for_each(|v| *v = ZERO);
            for t in 0..len {
                g[t + off] = Complex64::new(d_re[t], d_im[t]);
            }
            self.fft.forward_bitrev(&mut g);
            // d h[u] = sum_s G[s] x[s - u]  <=>  IFFT(G * conj(X)).
            for ((b, gk), xk) in buf.iter_mut().zip(&g).zip(x_spec) {
                *b = gk * xk.conj();
            }
            self.fft.inverse_from_bitrev(&mut buf);
            let (re, rest) = d_rows[2 * n * width..].split_at_mut(width);
            let im = &mut rest[..width];
            for k in 0..width {
                let v = buf[width - 1 - k];
                re[k] = v.re;
                im[k] = v.im;
            }
            if let Some(acc) = acc.as_mut() {
                for ((a, gk), hk) in acc.iter_mut().zip(&g).zip(h) {
                    *a += gk.conj() * hk;
                }
            }
        }
        let d_input = acc.map(|mut acc| {
            // d x[j] = Re sum_s conj(G[s]) h[s - j] = Re FFT(sum conj(G) H)[j] / m
            //        = Re IFFT(conj(sum conj(G) H))[j].
            acc.iter_mut().for_each(|v| *v = v.conj());
            self.fft.inverse_from_bitrev(&mut acc);
            acc[..len].iter().map(|v| v.re).collect()
        });
        (d_rows, d_input)
    }
}

/// Grouped strided convolution. `input` is `channels x len` row-major,
/// `weights` is `channels x width`; returns `frames x channels` row-major.
pub fn grouped_conv(input: &[f64], len: usize, weights: &[f64], width: usize, stride: usize) -> Vec<f64> {
    let channels = weights.len() / width;
    let frames = frame_count(len, width, stride);
    let mut out = vec![0.0; frames * channels];
    for c in 0..channels {
        let x = &input[c * len..(c + 1) * len];
        let w = &weights[c * width..(c + 1) * width];
        for f in 0..frames {
            let seg = &x[f * stride..f * stride + width];
            out[f * channels + c] = seg.iter().zip(w).map(|(a, b)| a * b).sum();
        }
    }
    out
}

/// Transpose of [`grouped_conv`]: returns `(d_input, d_weights)` for an
/// upstream gradient `d_out` of shape `frames x channels`.
pub fn grouped_conv_backward(
    input: &[f64],
    len: usize,
    weights: &[f64],
    width: usize,
    stride: usize,
    d_out: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let channels = weights.len() / width;
    let frames = frame_count(len, width, stride);
    let mut d_in = vec![0.0; channels * len];
    let mut d_w = vec![0.0; channels * width];
    for c in 0..channels {
        let x = &input[c * len..(c + 1) * len];
        let w = &weights[c * width..(c + 1) * width];
        let dx = &mut d_in[c * len..(c + 1) * len];
        let dw = &mut d_w[c * width..(c + 1) * width];
        for f in 0..frames {
            let g = d_out[f * channels + c];
            if g == 0.0 {
                continue;
            }
            let base = f * stride;
            for k in 0..width {
                dw[k] += g * x[base + k];
                dx[base + k] += g * w[k];
            }
        }
    }
    (d_in, d_w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    /// Direct-sum wide layer.
    fn direct(rows: &[f64], width: usize, x: &[f64]) -> Vec<f64> {
        let len = x.len();
        let n_rows = rows.len() / width;
        let mut out = vec![0.0; n_rows * len];
        for r in 0..n_rows {
            for t in 0..len {
                let mut s = 0.0;
                for k in 0..width {
                    let j = t as isize + k as isize - (width / 2) as isize;
                    if j >= 0 && (j as usize) < len {
                        s += rows[r * width + k] * x[j as usize];
                    }
                }
                out[r * len + t] = s;
            }
        }
        out
    }

    #[test]
    fn wide_conv_matches_direct_sum() {
        let mut seed = 7;
        for &(width, len, pairs) in &[(8usize, 13usize, 2usize), (400, 450, 3), (10, 5, 1)] {
            let rows: Vec<f64> = (0..2 * pairs * width).map(|_| lcg(&mut seed)).collect();
            let x: Vec<f64> = (0..len).map(|_| lcg(&mut seed)).collect();
            let plan = WideConv::new(&rows, width, len).unwrap();
            let got = plan.forward(&plan.signal_spectrum(&x));
            let want = direct(&rows, width, &x);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12 * (width as f64), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn wide_conv_backward_is_adjoint() {
        // <forward(x; w), g> must equal <w, d_w> and <x, d_x> (bilinearity).
        let mut seed = 11;
        let (width, len, pairs) = (16usize, 40usize, 2usize);
        let rows: Vec<f64> = (0..2 * pairs * width).map(|_| lcg(&mut seed)).collect();
        let x: Vec<f64> = (0..len).map(|_| lcg(&mut seed)).collect();
        let g: Vec<f64> = (0..2 * pairs * len).map(|_| lcg(&mut seed)).collect();
        let plan = WideConv::new(&rows, width, len).unwrap();
        let spec = plan.signal_spectrum(&x);
        let y = plan.forward(&spec);
        let inner: f64 = y.iter().zip(&g).map(|(a, b)| a * b).sum();
        let (dw, dx) = plan.backward(&spec, &g, true);
        let via_w: f64 = dw.iter().zip(&rows).map(|(a, b)| a * b).sum();
        let via_x: f64 = dx.unwrap().iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((inner - via_w).abs() < 1e-10 * inner.abs().max(1.0));
        assert!((inner - via_x).abs() < 1e-10 * inner.abs().max(1.0));
    }

    #[test]
    fn grouped_conv_backward_is_adjoint() {
        let mut seed = 3;
        let (channels, len, width, stride) = (3usize, 50usize, 8usize, 5usize);
        let x: Vec<f64> = (0..channels * len).map(|_| lcg(&mut seed)).collect();
        let w: Vec<f64> = (0..channels * width).map(|_| lcg(&mut seed)).collect();
        let frames = frame_count(len, width, stride);
        let g: Vec<f64> = (0..frames * channels).map(|_| lcg(&mut seed)).collect();
        let y = grouped_conv(&x, len, &w, width, stride);
        let inner: f64 = y.iter().zip(&g).map(|(a, b)| a * b).sum();
        let (dx, dw) = grouped_conv_backward(&x, len, &w, width, stride, &g);
        let via_w: f64 = dw.iter().zip(&w).map(|(a, b)| a * b).sum();
        let via_x: f64 = dx.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((inner - via_w).abs() < 1e-12);
        assert!((inner - via_x).abs() < 1e-12);
    }
}
