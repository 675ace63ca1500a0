//! Desk-scale training harness: a synthetic phone-like task, a linear frame
//! classifier on top of the front-end, and a plain SGD loop.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::frontend::TdFilterbank;
use crate::grad::backward_traced;
use crate::signal::{frame_count, mean_variance_normalize};
use crate::{Error, FeatureMap, Gradients, Result, Waveform, FILTER_WIDTH, HOP, SAMPLE_RATE};

/// Utterances in the default training split.
pub const DEFAULT_TRAIN_UTTERANCES: usize = 16;
/// Utterances in the default dev split.
pub const DEFAULT_DEV_UTTERANCES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyTaskConfig {
    pub n_classes: usize,
    /// Resonance frequencies of each class, 2 or 3 per class.
    pub formants_hz: Vec<Vec<f64>>,
    /// Segment duration range in milliseconds, `(min, max)`.
    pub segment_ms: (f64, f64),
    pub utterance_s: f64,
    /// Signal-to-noise ratio of the additive white noise. `f64::INFINITY`
    /// disables the noise.
    pub snr_db: f64,
    /// Fundamental frequency range of the excitation pulses, in Hz.
    pub pitch_hz: (f64, f64),
    /// 3 dB bandwidth of every resonance, in Hz.
    pub bandwidth_hz: f64,
    pub seed: u64,
}

impl Default for ToyTaskConfig {
    fn default() -> Self {
        let formants: [&[f64]; 6] = [
            &[270.0, 2290.0, 3010.0],
            &[300.0, 870.0, 2240.0],
            &[730.0, 1090.0, 2440.0],
            &[660.0, 1720.0, 2410.0],
            &[490.0, 1350.0, 1690.0],
            &[570.0, 840.0, 2410.0],
        ];
        ToyTaskConfig {
            n_classes: 6,
            formants_hz: formants.iter().map(|f| f.to_vec()).collect(),
            segment_ms: (60.0, 160.0),
            utterance_s: 0.45,
            snr_db: 0.0,
            pitch_hz: (100.0, 220.0),
            bandwidth_hz: 120.0,
            seed: 0,
        }
    }
}

impl ToyTaskConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if self.n_classes == 0 || self.formants_hz.len() != self.n_classes {
            return bad("need one formant list per class");
        }
        for f in &self.formants_hz {
            if !(2..=3).contains(&f.len()) {
                return bad("every class needs 2 or 3 formants");
            }
            if f.iter().any(|&v| !(v > 64.0 && v < 8000.0)) {
                return bad("formants must lie in (64, 8000) Hz");
            }
        }
        let (lo, hi) = self.segment_ms;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return bad("segment durations must be positive with min <= max");
        }
        if !(self.utterance_s > 0.0 && self.utterance_s.is_finite()) {
            return bad("utterance duration must be positive");
        }
        if (self.utterance_s * SAMPLE_RATE as f64).round() < FILTER_WIDTH as f64 {
            return bad("utterances must hold at least one frame");
        }
        let (p0, p1) = self.pitch_hz;
        if !(p0 > 0.0 && p1 >= p0 && p1.is_finite()) {
            return bad("pitch range must be positive with min <= max");
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return bad("bandwidth must be positive");
        }
        if self.snr_db.is_nan() {
            return bad("snr must be a number");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledUtterance {
    pub waveform: Waveform,
    /// One class per frame of the front-end output.
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToySplit {
    pub train: Vec<LabeledUtterance>,
    pub dev: Vec<LabeledUtterance>,
    pub n_classes: usize,
}

/// Class of every frame, taken from the segment covering the centre sample
/// `f * 160 + 200` of its analysis window.
pub fn frame_labels(sample_labels: &[usize]) -> Vec<usize> {
    let frames = frame_count(sample_labels.len(), FILTER_WIDTH, HOP);
    (0..frames).map(|f| sample_labels[f * HOP + FILTER_WIDTH / 2]).collect()
}

/// Generate `n_utterances` utterances. Each is a run of segments of random
/// class and length; a segment is a pitch-periodic train of exponentially
/// decaying sinusoids at the class formants (random phase per pulse and
/// formant). White Gaussian noise is added at `snr_db` relative to the
/// utterance power.
pub fn gen_toy_dataset(cfg: &ToyTaskConfig, n_utterances: usize) -> Result<Vec<LabeledUtterance>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..n_utterances).map(|_| gen_utterance(cfg, &mut rng)).collect()
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn gen_utterance(cfg: &ToyTaskConfig, rng: &mut ChaCha8Rng) -> Result<LabeledUtterance> {
    let sr = SAMPLE_RATE as f64;
    let len = (cfg.utterance_s * sr).round() as usize;
    let decay = (-PI * cfg.bandwidth_hz / sr).exp();
    let ring = ((9.0 / (PI * cfg.bandwidth_hz)) * sr).ceil() as usize;

    let mut x = vec![0.0; len];
    let mut sample_labels = vec![0usize; len];
    let mut start = 0;
    while start < len {
        let class = rng.random_range(0..cfg.n_classes);
        let seg = ((uniform(rng, cfg.segment_ms) * 1e-3 * sr).round() as usize).max(1);
        let end = (start + seg).min(len);
        sample_labels[start..end].fill(class);

        let period = sr / uniform(rng, cfg.pitch_hz);
        let mut onset = start as f64 + uniform(rng, (0.0, period));
        while (onset as usize) < end {
            let t0 = onset as usize;
            for &f in &cfg.formants_hz[class] {
                let phase = uniform(rng, (0.0, 2.0 * PI));
                let w = 2.0 * PI * f / sr;
                let mut amp = 1.0;
                for (k, v) in x[t0..end.min(t0 + ring)].iter_mut().enumerate() {
                    *v += amp * (w * k as f64 + phase).sin();
                    amp *= decay;
                }
            }
            onset += period;
        }
        start = end;
    }

    if cfg.snr_db.is_finite() {
        let power = x.iter().map(|v| v * v).sum::<f64>() / len as f64;
        let scale = (power / 10f64.powf(cfg.snr_db / 10.0)).sqrt();
        for v in x.iter_mut() {
            let n: f64 = StandardNormal.sample(rng);
            *v += scale * n;
        }
    }
    Ok(LabeledUtterance { labels: frame_labels(&sample_labels), waveform: Waveform::new(x) })
}

/// Generate the train and dev splits from one seed.
pub fn gen_toy_split(cfg: &ToyTaskConfig, n_train: usize, n_dev: usize) -> Result<ToySplit> {
    let mut all = gen_toy_dataset(cfg, n_train + n_dev)?;
    let dev = all.split_off(n_train);
    Ok(ToySplit { train: all, dev, n_classes: cfg.n_classes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr_frontend: f64,
    pub lr_head: f64,
    pub epochs: usize,
    /// Utterances per SGD step.
    pub batch: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { lr_frontend: 0.003, lr_head: 0.004, epochs: 50, batch: 1, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !(ok(self.lr_frontend) && ok(self.lr_head)) {
            return Err(Error::InvalidArgument("learning rates must be finite and non-negative".into()));
        }
        if self.batch == 0 {
            return Err(Error::InvalidArgument("batch must hold at least one utterance".into()));
        }
        Ok(())
    }
}

/// Linear map from front-end channels to class logits.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    n_classes: usize,
    n_inputs: usize,
    /// `n_classes x n_inputs`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl LinearHead {
    pub fn zeros(n_classes: usize, n_inputs: usize) -> Self {
        LinearHead { n_classes, n_inputs, weights: vec![0.0; n_classes * n_inputs], bias: vec![0.0; n_classes] }
    }

    pub fn from_parts(n_classes: usize, n_inputs: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if n_classes == 0 || weights.len() != n_classes * n_inputs {
            return Err(Error::shape((n_classes, n_inputs), (n_classes, weights.len() / n_classes.max(1))));
        }
        if bias.len() != n_classes {
            return Err(Error::shape((n_classes, 1), (bias.len(), 1)));
        }
        Ok(LinearHead { n_classes, n_inputs, weights, bias })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn logits(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.weights[k * self.n_inputs..(k + 1) * self.n_inputs];
            *o = self.bias[k] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// Arg-max class; ties go to the lower index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut logits = vec![0.0; self.n_classes];
        self.logits(x, &mut logits);
        argmax(&logits)
    }

    fn check_input(&self, features: &FeatureMap) -> Result<()> {
        if features.channels() != self.n_inputs {
            return Err(Error::shape((features.frames(), self.n_inputs), features.shape()));
        }
        Ok(())
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Head parameter gradients, laid out like [`LinearHead`].
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradients {
    pub d_weights: Vec<f64>,
    pub d_bias: Vec<f64>,
}

/// Summed softmax cross-entropy of every frame, with gradients of that sum
/// with respect to the head parameters and to the features.
pub fn cross_entropy(head: &LinearHead, features: &FeatureMap, labels: &[usize]) -> Result<(f64, HeadGradients, FeatureMap)> {
    head.check_input(features)?;
    if labels.len() != features.frames() {
        return Err(Error::shape((features.frames(), 1), (labels.len(), 1)));
    }
    let (k_classes, d) = (head.n_classes, head.n_inputs);
    let mut grads = HeadGradients { d_weights: vec![0.0; k_classes * d], d_bias: vec![0.0; k_classes] };
    let mut d_features = FeatureMap::zeros(features.frames(), d);
    let mut p = vec![0.0; k_classes];
    let mut loss = 0.0;
    for (t, &label) in labels.iter().enumerate() {
        if label >= k_classes {
            return Err(Error::IndexOutOfRange { index: label, len: k_classes });
        }
        let x = features.row(t);
        head.logits(x, &mut p);
        let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for v in p.iter_mut() {
            *v = (*v - max).exp();
            z += *v;
        }
        loss += z.ln() + max - (head.bias[label] + dot(&head.weights[label * d..(label + 1) * d], x));
        p.iter_mut().for_each(|v| *v /= z);
        p[label] -= 1.0;
        for (k, &g) in p.iter().enumerate() {
            grads.d_bias[k] += g;
            for (dw, &xv) in grads.d_weights[k * d..(k + 1) * d].iter_mut().zip(x) {
                *dw += g * xv;
            }
        }
        let row = &mut d_features.values_mut()[t * d..(t + 1) * d];
        for (k, &g) in p.iter().enumerate() {
            for (r, &w) in row.iter_mut().zip(&head.weights[k * d..(k + 1) * d]) {
                *r += g * w;
            }
        }
    }
    Ok((loss, grads, d_features))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Runs independent per-utterance jobs. Results must come back in index
/// order so that reductions do not depend on scheduling.
pub trait BatchExecutor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl BatchExecutor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    /// Mean frame cross-entropy over the epoch, measured before each step.
    pub train_loss: f64,
    pub dev_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub filterbank: TdFilterbank,
    pub head: LinearHead,
    pub metrics: Vec<EpochMetrics>,
}

impl TrainOutcome {
    pub fn final_dev_accuracy(&self) -> Option<f64> {
        self.metrics.last().map(|m| m.dev_accuracy)
    }
}

struct StepResult {
    loss: f64,
    frames: usize,
    head: HeadGradients,
    frontend: Option<Gradients>,
}

/// Train `fb` and a zero-initialized linear head with plain SGD, one
/// sequential pass over [`Sequential`].
pub fn train(fb: TdFilterbank, data: &ToySplit, tc: &TrainConfig) -> Result<TrainOutcome> {
    train_with(fb, data, tc, &Sequential)
}

/// Train with a custom executor for the per-utterance work of each step.
///
/// The loss of a step is the mean frame cross-entropy over its utterances.
/// The training order is reshuffled every epoch by a ChaCha8 generator
/// seeded with `tc.seed`. Only the trainable blocks of `fb` move; with a
/// frozen front-end, features are computed once.
pub fn train_with<E: BatchExecutor>(mut fb: TdFilterbank, data: &ToySplit, tc: &TrainConfig, exec: &E) -> Result<TrainOutcome> {
    tc.validate()?;
    if data.train.is_empty() || data.dev.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut head = LinearHead::zeros(data.n_classes, fb.n_filters());
    let normalized_train = normalize_all(&data.train)?;
    let normalized_dev = normalize_all(&data.dev)?;
    let frozen = !fb.trainable().any();
    let cached = if frozen { Some(features_of(&fb, &normalized_train, exec)?) } else { None };
    let cached_dev = if frozen { Some(features_of(&fb, &normalized_dev, exec)?) } else { None };

    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut metrics = Vec::with_capacity(tc.epochs);
    for epoch in 1..=tc.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut frame_sum) = (0.0, 0usize);
        for batch in order.chunks(tc.batch) {
            let results = exec.map(batch.len(), |j| -> Result<StepResult> {
                let u = batch[j];
                let labels = &data.train[u].labels;
                match &cached {
                    Some(feats) => {
                        let (loss, hg, _) = cross_entropy(&head, &feats[u], labels)?;
                        Ok(StepResult { loss, frames: labels.len(), head: hg, frontend: None })
                    }
                    None => {
                        let trace = fb.forward_normalized(normalized_train[u].clone())?;
                        let (loss, hg, d_feat) = cross_entropy(&head, &trace.features, labels)?;
                        let g = backward_traced(&fb, &trace, &d_feat, false)?;
                        Ok(StepResult { loss, frames: labels.len(), head: hg, frontend: Some(g) })
                    }
                }
            });
            let mut step_loss = 0.0;
            let mut step_frames = 0usize;
            let mut head_grad = HeadGradients { d_weights: vec![0.0; head.weights.len()], d_bias: vec![0.0; head.n_classes] };
            let mut fb_grad: Option<Gradients> = None;
            for r in results {
                let r = r?;
                step_loss += r.loss;
                step_frames += r.frames;
                head_grad.d_weights.iter_mut().zip(&r.head.d_weights).for_each(|(a, b)| *a += b);
                head_grad.d_bias.iter_mut().zip(&r.head.d_bias).for_each(|(a, b)| *a += b);
                if let Some(g) = r.frontend {
                    match fb_grad.as_mut() {
                        Some(acc) => acc.accumulate(&g),
                        None => fb_grad = Some(g),
                    }
                }
            }
            if !step_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            loss_sum += step_loss;
            frame_sum += step_frames;
            if step_frames == 0 {
                continue;
            }
            let scale = 1.0 / step_frames as f64;
            let lr = tc.lr_head * scale;
            head.weights.iter_mut().zip(&head_grad.d_weights).for_each(|(w, g)| *w -= lr * g);
            head.bias.iter_mut().zip(&head_grad.d_bias).for_each(|(w, g)| *w -= lr * g);
            if let Some(mut g) = fb_grad {
                g.scale(scale);
                if !g.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch });
                }
                fb.sgd_step(&g, tc.lr_frontend);
            }
        }
        let dev_accuracy = match &cached_dev {
            Some(feats) => accuracy(&head, feats.iter().zip(&data.dev).map(|(f, u)| (f, u.labels.as_slice())))?,
            None => {
                let feats = features_of(&fb, &normalized_dev, exec)?;
                accuracy(&head, feats.iter().zip(&data.dev).map(|(f, u)| (f, u.labels.as_slice())))?
            }
        };
        metrics.push(EpochMetrics { epoch, train_loss: loss_sum / frame_sum.max(1) as f64, dev_accuracy });
    }
    Ok(TrainOutcome { filterbank: fb, head, metrics })
}

fn normalize_all(data: &[LabeledUtterance]) -> Result<Vec<Vec<f64>>> {
    data.iter().map(|u| mean_variance_normalize(u.waveform.samples())).collect()
}

fn features_of<E: BatchExecutor>(fb: &TdFilterbank, normalized: &[Vec<f64>], exec: &E) -> Result<Vec<FeatureMap>> {
    exec.map(normalized.len(), |i| fb.forward_normalized(normalized[i].clone()).map(|t| t.features))
        .into_iter()
        .collect()
}

fn accuracy<'a>(head: &LinearHead, items: impl Iterator<Item = (&'a FeatureMap, &'a [usize])>) -> Result<f64> {
    let (mut correct, mut total) = (0usize, 0usize);
    for (features, labels) in items {
        head.check_input(features)?;
        if labels.len() != features.frames() {
            return Err(Error::shape((features.frames(), 1), (labels.len(), 1)));
        }
        for (t, &label) in labels.iter().enumerate() {
            correct += usize::from(head.predict(features.row(t)) == label);
        }
        total += labels.len();
    }
    Ok(if total == 0 { 0.0 } else { correct as f64 / total as f64 })
}

/// Frame accuracy of `head` on top of `fb`.
pub fn evaluate(fb: &TdFilterbank, head: &LinearHead, data: &[LabeledUtterance]) -> Result<f64> {
    let feats = data.iter().map(|u| fb.forward(&u.waveform)).collect::<Result<Vec<_>>>()?;
    accuracy(head, feats.iter().zip(data).map(|(f, u)| (f, u.labels.as_slice())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{LearningMode, MelSpec};

    fn small_task(seed: u64) -> (ToyTaskConfig, ToySplit) {
        let cfg = ToyTaskConfig { utterance_s: 0.1, ..ToyTaskConfig::default() }.with_seed(seed);
        let split = gen_toy_split(&cfg, 3, 2).unwrap();
        (cfg, split)
    }

    #[test]
    fn dataset_is_deterministic_and_labels_match_frames() {
        let cfg = ToyTaskConfig::default().with_seed(11);
        let a = gen_toy_dataset(&cfg, 3).unwrap();
        let b = gen_toy_dataset(&cfg, 3).unwrap();
        assert_eq!(a, b);
        for u in &a {
            assert_eq!(u.labels.len(), frame_count(u.waveform.len(), 400, 160));
            assert!(u.labels.iter().all(|&c| c < 6));
        }
        assert_ne!(a, gen_toy_dataset(&cfg.clone().with_seed(12), 3).unwrap());
    }

    #[test]
    fn single_clean_class_labels_zero() {
        let cfg = ToyTaskConfig {
            n_classes: 1,
            formants_hz: vec![vec![500.0, 1500.0]],
            snr_db: f64::INFINITY,
            ..ToyTaskConfig::default()
        };
        let data = gen_toy_dataset(&cfg, 2).unwrap();
        assert!(data.iter().all(|u| u.labels.iter().all(|&c| c == 0)));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = ToyTaskConfig::default();
        cfg.formants_hz[0] = vec![50.0, 1000.0];
        assert!(gen_toy_dataset(&cfg, 1).is_err());
        let cfg = ToyTaskConfig { segment_ms: (0.0, 10.0), ..ToyTaskConfig::default() };
        assert!(gen_toy_dataset(&cfg, 1).is_err());
        let tc = TrainConfig { lr_head: -1.0, ..TrainConfig::default() };
        assert!(tc.validate().is_err());
    }

    #[test]
    fn frame_labels_use_window_centres() {
        let mut s = vec![0usize; 720];
        s[360..].fill(1);
        assert_eq!(frame_labels(&s), vec![0, 1, 1]);
    }

    #[test]
    fn cross_entropy_gradient_matches_finite_differences() {
        let feats = FeatureMap::new(3, 2, vec![0.5, -1.0, 2.0, 0.3, -0.7, 1.1]).unwrap();
        let labels = [0, 2, 1];
        let head = LinearHead::from_parts(3, 2, vec![0.1, -0.2, 0.3, 0.4, -0.5, 0.6], vec![0.01, 0.02, -0.03]).unwrap();
        let (_, g, d_feat) = cross_entropy(&head, &feats, &labels).unwrap();
        let h = 1e-6;
        for i in 0..6 {
            let mut p = head.clone();
            p.weights_mut()[i] += h;
            let mut m = head.clone();
            m.weights_mut()[i] -= h;
            let num = (cross_entropy(&p, &feats, &labels).unwrap().0 - cross_entropy(&m, &feats, &labels).unwrap().0) / (2.0 * h);
            assert!((num - g.d_weights[i]).abs() < 1e-7);
            let mut fp = feats.clone();
            fp.values_mut()[i] += h;
            let mut fm = feats.clone();
            fm.values_mut()[i] -= h;
            let num = (cross_entropy(&head, &fp, &labels).unwrap().0 - cross_entropy(&head, &fm, &labels).unwrap().0) / (2.0 * h);
            assert!((num - d_feat.values()[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn zero_head_loss_is_log_k_and_ties_pick_class_zero() {
        let feats = FeatureMap::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let head = LinearHead::zeros(4, 2);
        let (loss, _, _) = cross_entropy(&head, &feats, &[1, 3]).unwrap();
        assert!((loss - 2.0 * 4f64.ln()).abs() < 1e-12);
        assert_eq!(head.predict(&[1.0, 1.0]), 0);
    }

    #[test]
    fn fixed_mode_leaves_filterbank_untouched() {
        let (_, split) = small_task(1);
        let fb = TdFilterbank::build(&MelSpec::default(), LearningMode::Fixed, false, 0).unwrap();
        let tc = TrainConfig { epochs: 3, ..TrainConfig::default() };
        let out = train(fb.clone(), &split, &tc).unwrap();
        assert_eq!(out.filterbank, fb);
        assert_eq!(out.metrics.len(), 3);
        assert!(out.metrics[2].train_loss < out.metrics[0].train_loss);
    }

    #[test]
    fn zero_learning_rates_give_constant_metrics() {
        let (_, split) = small_task(2);
        let fb = TdFilterbank::build(&MelSpec::default(), LearningMode::LearnAll, true, 0).unwrap();
        let tc = TrainConfig { lr_frontend: 0.0, lr_head: 0.0, epochs: 3, ..TrainConfig::default() };
        let out = train(fb.clone(), &split, &tc).unwrap();
        assert_eq!(out.filterbank, fb);
        let first = out.metrics[0];
        assert!(out.metrics.iter().all(|m| m.train_loss == first.train_loss && m.dev_accuracy == first.dev_accuracy));
        assert!((first.train_loss - 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn training_is_deterministic_and_moves_trainable_blocks() {
        let (_, split) = small_task(3);
        let fb = TdFilterbank::build(&MelSpec::default(), LearningMode::LearnFilterbank, false, 0).unwrap();
        let tc = TrainConfig { epochs: 2, ..TrainConfig::default() };
        let a = train(fb.clone(), &split, &tc).unwrap();
        let b = train(fb.clone(), &split, &tc).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.filterbank, b.filterbank);
        assert_ne!(a.filterbank.conv_weights(), fb.conv_weights());
        assert_eq!(a.filterbank.lowpass_weights(), fb.lowpass_weights());
    }

    #[test]
    fn empty_data_is_an_error() {
        let (_, mut split) = small_task(4);
        split.dev.clear();
        let fb = TdFilterbank::build(&MelSpec::default(), LearningMode::Fixed, false, 0).unwrap();
        assert_eq!(train(fb, &split, &TrainConfig::default()).unwrap_err(), Error::EmptyData);
    }

    #[test]
    fn perfect_and_chance_predictors() {
        let cfg = ToyTaskConfig {
            n_classes: 1,
            formants_hz: vec![vec![500.0, 1500.0]],
            utterance_s: 0.1,
            ..ToyTaskConfig::default()
        };
        let data = gen_toy_dataset(&cfg, 2).unwrap();
        let fb = TdFilterbank::build(&MelSpec::default(), LearningMode::Fixed, false, 0).unwrap();
        assert_eq!(evaluate(&fb, &LinearHead::zeros(1, 40), &data).unwrap(), 1.0);
        let acc = evaluate(&fb, &LinearHead::zeros(1, 40), &data).unwrap();
        assert_eq!(acc, 1.0);
    }
}
