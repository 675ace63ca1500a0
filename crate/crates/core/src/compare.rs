//! Per-channel agreement between two feature maps.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, FeatureMap, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelAgreement {
    pub channel: usize,
    /// NaN when either channel is constant.
    pub pearson_r: f64,
    pub rmse: f64,
}

/// Pearson correlation; NaN when either input has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return f64::NAN;
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a[..n].iter().zip(&b[..n]) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return f64::NAN;
    }
    sab / (saa * sbb).sqrt()
}

/// Normalize every channel of both maps over frames, then report Pearson
/// correlation and RMSE per channel.
pub fn compare_channels(a: &FeatureMap, b: &FeatureMap) -> Result<Vec<ChannelAgreement>> {
    if a.shape() != b.shape() {
        return Err(Error::shape(a.shape(), b.shape()));
    }
    let (na, nb) = (a.normalized_per_channel(), b.normalized_per_channel());
    Ok((0..a.channels())
        .map(|c| {
            let (x, y) = (na.column(c), nb.column(c));
            let mse = x.iter().zip(&y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / x.len().max(1) as f64;
            ChannelAgreement { channel: c, pearson_r: pearson(&x, &y), rmse: mse.sqrt() }
        })
        .collect())
}

/// Median of the finite values; NaN if there are none.
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_basics() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5]) - 0.9979487157886733).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert!(pearson(&[1.0, 1.0], &[1.0, 2.0]).is_nan());
    }

    #[test]
    fn constant_channels_report_nan() {
        let a = FeatureMap::zeros(5, 2);
        let r = compare_channels(&a, &a).unwrap();
        assert!(r.iter().all(|c| c.pearson_r.is_nan() && c.rmse == 0.0));
        assert!(compare_channels(&a, &FeatureMap::zeros(4, 2)).is_err());
    }

    #[test]
    fn median_ignores_nan() {
        assert_eq!(median(&[3.0, f64::NAN, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0]), 2.5);
        assert!(median(&[f64::NAN]).is_nan());
    }
}
