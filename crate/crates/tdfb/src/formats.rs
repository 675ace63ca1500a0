//! On-disk formats: feature matrices (CSV and "TDFB" binary), parameter
//! blocks ("TDFW"), classifier heads ("HEADB"), training metrics and
//! analysis reports. Every writer goes through [`atomic_write`].

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use tdfb_core::analysis::AnalysisReport;
use tdfb_core::compare::ChannelAgreement;
use tdfb_core::trainer::{EpochMetrics, LinearHead};
use tdfb_core::{FeatureMap, LearningMode, TdFilterbank, FILTER_WIDTH, N_FILTERS};

use crate::error::{Error, Result};

pub const FEATURES_MAGIC: &[u8; 4] = b"TDFB";
pub const WEIGHTS_MAGIC: &[u8; 4] = b"TDFW";
pub const HEAD_MAGIC: &[u8; 5] = b"HEADB";

/// Write to a temporary file next to `path`, then rename over it.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::input(path, e))
}

/// `nan` for NaN, shortest round-trip decimal otherwise.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

pub fn features_to_csv(f: &FeatureMap) -> String {
    let mut out = String::with_capacity(f.values().len() * 20);
    for t in 0..f.frames() {
        for (c, v) in f.row(t).iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn features_from_csv(path: &Path, text: &str) -> Result<FeatureMap> {
    let mut values = Vec::new();
    let mut channels = None;
    let mut frames = 0;
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::corrupt(path, format!("line {}: {e}", i + 1)))?;
        match channels {
            None => channels = Some(row.len()),
            Some(c) if c != row.len() => return Err(Error::corrupt(path, format!("line {}: {} columns, expected {c}", i + 1, row.len()))),
            _ => {}
        }
        values.extend(row);
        frames += 1;
    }
    Ok(FeatureMap::new(frames, channels.unwrap_or(0), values)?)
}

/// "TDFB" container: magic, u32 frames, u32 channels, u32 zero, then
/// row-major little-endian `f32` values.
pub fn features_to_bin(f: &FeatureMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * f.values().len());
    out.extend_from_slice(FEATURES_MAGIC);
    out.extend_from_slice(&(f.frames() as u32).to_le_bytes());
    out.extend_from_slice(&(f.channels() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for &v in f.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn features_from_bin(path: &Path, bytes: &[u8]) -> Result<FeatureMap> {
    let mut r = Reader::new(path, bytes);
    r.magic(FEATURES_MAGIC)?;
    let frames = r.u32()? as usize;
    let channels = r.u32()? as usize;
    r.u32()?;
    let n = frames.checked_mul(channels).ok_or_else(|| Error::corrupt(path, "header overflow"))?;
    let values = (0..n).map(|_| r.f32().map(f64::from)).collect::<Result<Vec<_>>>()?;
    if !r.is_done() {
        return Err(Error::corrupt(path, "trailing bytes"));
    }
    Ok(FeatureMap::new(frames, channels, values)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureFormat {
    Csv,
    Bin,
}

pub fn save_features(path: &Path, f: &FeatureMap, format: FeatureFormat) -> Result<()> {
    match format {
        FeatureFormat::Csv => atomic_write(path, features_to_csv(f).as_bytes()),
        FeatureFormat::Bin => atomic_write(path, &features_to_bin(f)),
    }
}

pub fn load_features(path: &Path) -> Result<FeatureMap> {
    let bytes = read(path)?;
    if bytes.starts_with(FEATURES_MAGIC) {
        features_from_bin(path, &bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::corrupt(path, "neither TDFB nor UTF-8 CSV"))?;
        features_from_csv(path, &text)
    }
}

/// One "TDFW" block: magic, u32 rows, u32 width, row-major little-endian
/// `f64` values.
pub fn encode_block(out: &mut Vec<u8>, rows: usize, width: usize, values: &[f64]) {
    debug_assert_eq!(rows * width, values.len());
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(width as u32).to_le_bytes());
    for &v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub rows: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

/// A filterbank with an optional classifier head.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub filterbank: TdFilterbank,
    pub head: Option<LinearHead>,
}

/// Conv block (80 x 400), lowpass block (40 x 400), pre-emphasis block
/// (1 x 2) when present, then the head as a "HEADB" block: magic, u32
/// classes, u32 inputs, weights row-major, then one bias per class.
pub fn encode_checkpoint(fb: &TdFilterbank, head: Option<&LinearHead>) -> Vec<u8> {
    let mut out = Vec::new();
    encode_block(&mut out, 2 * fb.n_filters(), fb.width(), fb.conv_weights());
    encode_block(&mut out, fb.n_filters(), fb.width(), fb.lowpass_weights());
    if let Some(k) = fb.preemph_kernel() {
        encode_block(&mut out, 1, 2, &k);
    }
    if let Some(h) = head {
        out.extend_from_slice(HEAD_MAGIC);
        out.extend_from_slice(&(h.n_classes() as u32).to_le_bytes());
        out.extend_from_slice(&(h.n_inputs() as u32).to_le_bytes());
        for &v in h.weights().iter().chain(h.bias()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Decode a checkpoint; the filterbank comes back in `mode`.
pub fn decode_checkpoint(path: &Path, bytes: &[u8], mode: LearningMode) -> Result<Checkpoint> {
    let mut r = Reader::new(path, bytes);
    let mut blocks = Vec::new();
    let mut head = None;
    while !r.is_done() {
        if r.peek(HEAD_MAGIC) {
            r.magic(HEAD_MAGIC)?;
            let k = r.u32()? as usize;
            let d = r.u32()? as usize;
            let weights = r.f64s(k.checked_mul(d).ok_or_else(|| Error::corrupt(path, "header overflow"))?)?;
            let bias = r.f64s(k)?;
            head = Some(LinearHead::from_parts(k, d, weights, bias)?);
            continue;
        }
        if head.is_some() {
            return Err(Error::corrupt(path, "data after the head block"));
        }
        r.magic(WEIGHTS_MAGIC)?;
        let rows = r.u32()? as usize;
        let width = r.u32()? as usize;
        let values = r.f64s(rows.checked_mul(width).ok_or_else(|| Error::corrupt(path, "header overflow"))?)?;
        blocks.push(Block { rows, width, values });
    }
    let expect = |b: Option<&Block>, rows: usize, width: usize, what: &str| -> Result<Vec<f64>> {
        match b {
            Some(b) if b.rows == rows && b.width == width => Ok(b.values.clone()),
            Some(b) => Err(Error::corrupt(path, format!("{what} block is {}x{}, expected {rows}x{width}", b.rows, b.width))),
            None => Err(Error::corrupt(path, format!("missing {what} block"))),
        }
    };
    if blocks.len() > 3 {
        return Err(Error::corrupt(path, format!("{} parameter blocks, expected 2 or 3", blocks.len())));
    }
    let conv = expect(blocks.first(), 2 * N_FILTERS, FILTER_WIDTH, "conv")?;
    let lowpass = expect(blocks.get(1), N_FILTERS, FILTER_WIDTH, "lowpass")?;
    let preemph = match blocks.get(2) {
        Some(b) => {
            let v = expect(Some(b), 1, 2, "pre-emphasis")?;
            Some([v[0], v[1]])
        }
        None => None,
    };
    let filterbank = TdFilterbank::from_parts(conv, lowpass, preemph, mode)?;
    Ok(Checkpoint { filterbank, head })
}

pub fn save_checkpoint(path: &Path, fb: &TdFilterbank, head: Option<&LinearHead>) -> Result<()> {
    atomic_write(path, &encode_checkpoint(fb, head))
}

pub fn load_checkpoint(path: &Path, mode: LearningMode) -> Result<Checkpoint> {
    decode_checkpoint(path, &read(path)?, mode)
}

pub fn metrics_to_csv(metrics: &[EpochMetrics]) -> String {
    let mut out = String::from("epoch,train_loss,dev_accuracy\n");
    for m in metrics {
        let _ = writeln!(out, "{},{},{}", m.epoch, fmt_f64(m.train_loss), fmt_f64(m.dev_accuracy));
    }
    out
}

pub fn comparison_to_csv(rows: &[ChannelAgreement]) -> String {
    let mut out = String::from("channel,pearson_r,rmse\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.channel + 1, fmt_f64(r.pearson_r), fmt_f64(r.rmse));
    }
    out
}

pub fn report_to_csv(report: &AnalysisReport) -> String {
    let mut out = String::from("n,est_center_hz,est_fwhm_hz,r_a,energy\n");
    for f in &report.filters {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            f.index,
            fmt_f64(f.est_center_hz),
            fmt_f64(f.est_fwhm_hz),
            fmt_f64(f.r_a),
            fmt_f64(f.energy)
        );
    }
    out
}

/// One row per filter, columns ascending in frequency from `-sr/2`.
pub fn heatmap_to_csv(report: &AnalysisReport) -> String {
    let mut out = String::new();
    for n in 0..report.filters.len() {
        let row: Vec<String> = report.heatmap_row(n).iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub const REPORT_FILE: &str = "report.csv";
pub const HEATMAP_FILE: &str = "heatmap.csv";

/// Write `report.csv` and `heatmap.csv` into `dir`, creating it if needed.
pub fn export_report(report: &AnalysisReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    atomic_write(&dir.join(REPORT_FILE), report_to_csv(report).as_bytes())?;
    atomic_write(&dir.join(HEATMAP_FILE), heatmap_to_csv(report).as_bytes())
}

struct Reader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(path: &'a Path, bytes: &'a [u8]) -> Self {
        Reader { path, bytes, pos: 0 }
    }

    fn is_done(&self) -> bool {
        self.pos == self.bytes.len()
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::corrupt(self.path, format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn peek(&self, magic: &[u8]) -> bool {
        self.bytes[self.pos..].starts_with(magic)
    }

    fn magic(&mut self, magic: &[u8]) -> Result<()> {
        let at = self.pos;
        if self.take(magic.len())? != magic {
            return Err(Error::corrupt(self.path, format!("expected {:?} at byte {at}", String::from_utf8_lossy(magic))));
        }
        Ok(())
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::corrupt(self.path, "header overflow"))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tdfb_core::MelSpec;

    #[test]
    fn nan_sentinel() {
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_f64(0.25), "0.25");
        assert_eq!(fmt_f64(-3.0), "-3");
    }

    #[test]
    fn bin_header_layout() {
        let f = FeatureMap::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.5]).unwrap();
        let b = features_to_bin(&f);
        assert_eq!(&b[..4], b"TDFB");
        assert_eq!(&b[4..16], &[2, 0, 0, 0, 3, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(b.len(), 16 + 24);
        assert_eq!(&b[36..40], &6.5f32.to_le_bytes());
        assert_eq!(features_from_bin(Path::new("x"), &b).unwrap(), f);
        assert!(features_from_bin(Path::new("x"), &b[..30]).is_err());
    }

    #[test]
    fn checkpoint_round_trip_with_head() {
        let fb = TdFilterbank::build(&MelSpec::default(), LearningMode::Randinit, true, 9).unwrap();
        let head = LinearHead::from_parts(2, 40, (0..80).map(|i| i as f64).collect(), vec![0.5, -0.5]).unwrap();
        let bytes = encode_checkpoint(&fb, Some(&head));
        assert_eq!(bytes.len(), 3 * 12 + 8 * (32000 + 16000 + 2) + 5 + 8 + 8 * 82);
        let ck = decode_checkpoint(Path::new("x"), &bytes, LearningMode::Randinit).unwrap();
        assert_eq!(ck.filterbank, fb);
        assert_eq!(ck.head, Some(head));
        assert!(decode_checkpoint(Path::new("x"), &bytes[..100], LearningMode::Fixed).is_err());
    }
}
