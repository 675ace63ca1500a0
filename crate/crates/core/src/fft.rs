//! Iterative radix-2 complex FFT for power-of-two lengths.
//!
//! Forward transform uses the `e^{-2 pi i k n / N}` kernel and is
//! unnormalized; the inverse applies the `1/N` factor.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    /// Twiddles of the radix-4 passes, pass after pass: for a pass joining
    /// blocks of size `q`, entries `[w, w^2, w^3]` with `w = e^{-i pi j / 2q}`
    /// for `j < q`.
    twiddles: Vec<[Complex64; 3]>,
    bitrev: Vec<u32>,
}

impl Fft {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(alloc::format!(
                "FFT length {len} is not a power of two"
            )));
        }
        let mut twiddles = Vec::new();
        let mut quarter = Self::first_quarter(len);
        while quarter < len {
            for j in 0..quarter {
                let w = |m: f64| {
                    let angle = -PI * m * j as f64 / (2 * quarter) as f64;
                    Complex64::new(angle.cos(), angle.sin())
                };
                twiddles.push([w(1.0), w(2.0), w(3.0)]);
            }
            quarter *= 4;
        }
        let bits = len.trailing_zeros();
        let bitrev = (0..len as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        Ok(Self { len, twiddles, bitrev })
    }

    /// Odd powers of two start with one radix-2 pass.
    fn first_quarter(len: usize) -> usize {
        if len.trailing_zeros() % 2 == 1 {
            2
        } else {
            1
        }
    }

    /// Smallest power of two that is at least `n`.
    pub fn size_for(n: usize) -> usize {
        n.max(1).next_power_of_two()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.forward_bitrev(buf);
        self.permute(buf);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.permute(buf);
        self.inverse_from_bitrev(buf);
    }

    /// Forward transform leaving the spectrum in bit-reversed order. Enough
    /// for pointwise products that go straight back through
    /// [`Fft::inverse_from_bitrev`].
    pub fn forward_bitrev(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length does not match FFT plan");
        let n = self.len;
        let first = Self::first_quarter(n);
        let mut quarter = first;
        let mut offsets = Vec::new();
        let mut offset = 0;
        while quarter < n {
            offsets.push((quarter, offset));
            offset += quarter;
            quarter *= 4;
        }
        for &(quarter, offset) in offsets.iter().rev() {
            let tw = &self.twiddles[offset..offset + quarter];
            for block in buf.chunks_exact_mut(4 * quarter) {
                let (b01, b23) = block.split_at_mut(2 * quarter);
                let (b0, b1) = b01.split_at_mut(quarter);
                let (b2, b3) = b23.split_at_mut(quarter);
                for j in 0..quarter {
                    let [w1, w2, w3] = tw[j];
                    let (y0, y1, y2, y3) = (b0[j], b1[j], b2[j], b3[j]);
                    let (a, b) = (y0 + y2, y0 - y2);
                    let (c, d) = (y1 + y3, y1 - y3);
                    let d_rot = Complex64::new(-d.im, d.re);
                    b0[j] = a + c;
                    b1[j] = (a - c) * w2;
                    b2[j] = (b - d_rot) * w1;
                    b3[j] = (b + d_rot) * w3;
                }
            }
        }
        if first == 2 {
            Self::radix2_pass(buf);
        }
    }

    /// Inverse transform (with the `1/N` factor) of a spectrum stored in
    /// bit-reversed order; the output is in natural order.
    pub fn inverse_from_bitrev(&self, buf: &mut [Complex64]) {
        buf.iter_mut().for_each(|v| v.im = -v.im);
        self.dit_passes(buf);
        let scale = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v = Complex64::new(v.re * scale, -v.im * scale);
        }
    }

    fn permute(&self, buf: &mut [Complex64]) {
        for i in 0..self.len {
            let j = self.bitrev[i] as usize;
            if i < j {
                buf.swap(i, j);
            }
        }
    }

    fn radix2_pass(buf: &mut [Complex64]) {
        for pair in buf.chunks_exact_mut(2) {
            let (a, b) = (pair[0], pair[1]);
            pair[0] = a + b;
            pair[1] = a - b;
        }
    }

    /// Forward decimation-in-time passes over bit-reversed input.
    fn dit_passes(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length does not match FFT plan");
        let n = self.len;
        let mut quarter = Self::first_quarter(n);
        if quarter == 2 {
            Self::radix2_pass(buf);
        }
        let mut offset = 0;
        while quarter < n {
            let tw = &self.twiddles[offset..offset + quarter];
            for block in buf.chunks_exact_mut(4 * quarter) {
                let (b01, b23) = block.split_at_mut(2 * quarter);
                let (b0, b1) = b01.split_at_mut(quarter);
                let (b2, b3) = b23.split_at_mut(quarter);
                for j in 0..quarter {
                    let [w1, w2, w3] = tw[j];
                    let u0 = b0[j];
                    let u1 = b1[j] * w2;
                    let u2 = b2[j] * w1;
                    let u3 = b3[j] * w3;
                    let (s, d) = (u0 + u1, u0 - u1);
                    let (t, e) = (u2 + u3, u2 - u3);
                    let e_rot = Complex64::new(e.im, -e.re);
                    b0[j] = s + t;
                    b2[j] = s - t;
                    b1[j] = d + e_rot;
                    b3[j] = d - e_rot;
                }
            }
            offset += quarter;
            quarter *= 4;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (t, v)| {
                    let a = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                    acc + v * Complex64::new(a.cos(), a.sin())
                })
            })
            .collect()
    }

    #[test]
    fn bitrev_pair_round_trips_and_matches() {
        for &n in &[1usize, 2, 8, 32, 256, 2048] {
            let f = Fft::new(n).unwrap();
            let x: Vec<Complex64> = (0..n).map(|i| Complex64::new((i as f64 * 0.7).cos(), (i as f64 * 0.11).sin())).collect();
            let mut a = x.clone();
            f.forward_bitrev(&mut a);
            let mut b = x.clone();
            f.forward(&mut b);
            for (i, v) in b.iter().enumerate() {
                assert!((a[f.bitrev[i] as usize] - v).norm() < 1e-9);
            }
            f.inverse_from_bitrev(&mut a);
            for (u, v) in a.iter().zip(&x) {
                assert!((u - v).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_brute_force_dft() {
        for &n in &[1usize, 2, 4, 8, 64, 512] {
            let x: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos() - 0.2))
                .collect();
            let mut y = x.clone();
            Fft::new(n).unwrap().forward(&mut y);
            let want = dft(&x);
            for (a, b) in y.iter().zip(want.iter()) {
                assert!((a - b).norm() < 1e-10 * n as f64, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn inverse_round_trips() {
        let fft = Fft::new(256).unwrap();
        let x: Vec<Complex64> = (0..256).map(|i| Complex64::new(i as f64, -(i as f64) / 3.0)).collect();
        let mut y = x.clone();
        fft.forward(&mut y);
        fft.inverse(&mut y);
        for (a, b) in y.iter().zip(x.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Fft::new(400).is_err());
        assert!(Fft::new(0).is_err());
        let mut buf = vec![Complex64::new(1.0, 0.0)];
        Fft::new(1).unwrap().forward(&mut buf);
        assert_eq!(buf[0], Complex64::new(1.0, 0.0));
    }
}
