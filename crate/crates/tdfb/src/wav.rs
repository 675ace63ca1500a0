//! 16-bit PCM mono WAV input and output.

use std::io;
use std::path::Path;

use hound::{SampleFormat, WavSpec};
use tdfb_core::{Waveform, SAMPLE_RATE};

use crate::error::{Error, Result};
use crate::formats::atomic_write;

/// Read a 16 kHz mono 16-bit PCM file. Samples keep their integer range.
pub fn load_wav(path: &Path) -> Result<Waveform> {
    let file = std::fs::File::open(path).map_err(|e| Error::input(path, e))?;
    let reader = hound::WavReader::new(io::BufReader::new(file)).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::unsupported(path, format!("{}-bit {:?} samples, expected 16-bit PCM", spec.bits_per_sample, spec.sample_format)));
    }
    if spec.channels != 1 {
        return Err(Error::unsupported(path, format!("{} channels, expected mono", spec.channels)));
    }
    if spec.sample_rate != SAMPLE_RATE {
        return Err(Error::unsupported(path, format!("{} Hz, expected {SAMPLE_RATE} Hz", spec.sample_rate)));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(f64::from))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| wav_error(path, e))?;
    Ok(Waveform::new(samples))
}

fn wav_error(path: &Path, e: hound::Error) -> Error {
    match e {
        // hound reports short reads as `Other`.
        hound::Error::IoError(io) if matches!(io.kind(), io::ErrorKind::UnexpectedEof | io::ErrorKind::Other) => {
            Error::corrupt(path, format!("truncated chunk: {io}"))
        }
        hound::Error::IoError(io) => Error::input(path, io),
        hound::Error::FormatError(msg) => Error::corrupt(path, msg),
        hound::Error::Unsupported | hound::Error::InvalidSampleFormat | hound::Error::UnfinishedSample => {
            Error::unsupported(path, e.to_string())
        }
        other => Error::corrupt(path, other.to_string()),
    }
}

/// Write samples as a 16 kHz mono 16-bit PCM file, rounding and clipping to
/// the `i16` range.
pub fn save_wav(path: &Path, samples: &[f64]) -> Result<()> {
    let spec = WavSpec { channels: 1, sample_rate: SAMPLE_RATE, bits_per_sample: 16, sample_format: SampleFormat::Int };
    let mut buf = io::Cursor::new(Vec::new());
    {
        let mut writer = hound::WavWriter::new(&mut buf, spec).map_err(|e| wav_error(path, e))?;
        for &s in samples {
            let v = s.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
            writer.write_sample(v).map_err(|e| wav_error(path, e))?;
        }
        writer.finalize().map_err(|e| wav_error(path, e))?;
    }
    atomic_write(path, &buf.into_inner())
}
