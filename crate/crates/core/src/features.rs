use alloc::vec::Vec;

use crate::signal::normalize_in_place;
use crate::{Error, Result};

/// Frames x channels matrix of front-end outputs, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    values: Vec<f64>,
    frames: usize,
    channels: usize,
    frame_hop_s: f64,
}

impl FeatureMap {
    pub fn new(frames: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != frames * channels {
            return Err(Error::shape((frames, channels), (values.len() / channels.max(1), channels)));
        }
        Ok(Self { values, frames, channels, frame_hop_s: 0.010 })
    }

    pub fn zeros(frames: usize, channels: usize) -> Self {
        Self { values: alloc::vec![0.0; frames * channels], frames, channels, frame_hop_s: 0.010 }
    }

    pub fn with_frame_hop(mut self, frame_hop_s: f64) -> Self {
        self.frame_hop_s = frame_hop_s;
        self
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn frame_hop_s(&self) -> f64 {
        self.frame_hop_s
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.frames, self.channels)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, frame: usize, channel: usize) -> f64 {
        self.values[frame * self.channels + channel]
    }

    pub fn set(&mut self, frame: usize, channel: usize, v: f64) {
        self.values[frame * self.channels + channel] = v;
    }

    pub fn row(&self, frame: usize) -> &[f64] {
        &self.values[frame * self.channels..(frame + 1) * self.channels]
    }

    pub fn column(&self, channel: usize) -> Vec<f64> {
        (0..self.frames).map(|t| self.get(t, channel)).collect()
    }

    /// Mean-variance normalization of every channel over frames. Constant
    /// channels (and single-frame maps) become zeros.
    pub fn normalized_per_channel(&self) -> FeatureMap {
        let mut out = self.clone();
        for c in 0..self.channels {
            let mut col = self.column(c);
            normalize_in_place(&mut col);
            for (t, v) in col.into_iter().enumerate() {
                out.set(t, c, v);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
