//! RIFF WAV reading and writing.
//!
//! Supported encodings: 16-bit integer PCM and 32-bit IEEE float, mono or
//! stereo. Samples are exposed as `f64` in `[-1, 1]`; integer PCM is scaled
//! by `1 / 32768`. Sample rates pass through untouched. Output rendered by
//! this crate is written as 32-bit float to keep the full precision of the
//! processing chain.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::render::{BinauralAudio, MonoAudio};

/// Decoded WAV content: one `Vec<f64>` per channel.
#[derive(Debug, Clone)]
pub struct WavContent {
    pub channels: Vec<Vec<f64>>,
    pub sample_rate: u32,
}

impl WavContent {
    /// Interprets the content as mono, erroring on multi-channel files.
    pub fn into_mono(self) -> Result<MonoAudio> {
        if self.channels.len() != 1 {
            return Err(Error::InvalidFormat {
                kind: "wav",
                detail: format!("expected mono, found {} channels", self.channels.len()),
            });
        }
        let mut channels = self.channels;
        Ok(MonoAudio { samples: channels.pop().unwrap(), sample_rate: self.sample_rate })
    }

    /// Interprets the content as stereo, erroring otherwise.
    pub fn into_stereo(self) -> Result<BinauralAudio> {
        if self.channels.len() != 2 {
            return Err(Error::InvalidFormat {
                kind: "wav",
                detail: format!("expected stereo, found {} channels", self.channels.len()),
            });
        }
        let mut channels = self.channels;
        let right = channels.pop().unwrap();
        let left = channels.pop().unwrap();
        Ok(BinauralAudio { left, right, sample_rate: self.sample_rate })
    }
}

/// Reads a 16-bit PCM or 32-bit float WAV file.
pub fn read_wav(path: impl AsRef<Path>) -> Result<WavContent> {
    let path = path.as_ref();
    let mut reader = WavReader::open(path)?;
    let spec = reader.spec();
    let n_channels = spec.channels as usize;
    if n_channels == 0 {
        return Err(Error::InvalidFormat { kind: "wav", detail: "zero channels".into() });
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        (fmt, bits) => {
            return Err(Error::InvalidFormat {
                kind: "wav",
                detail: format!("unsupported encoding: {bits}-bit {fmt:?}"),
            })
        }
    };

    let frames = interleaved.len() / n_channels;
    let mut channels = vec![Vec::with_capacity(frames); n_channels];
    for (i, sample) in interleaved.into_iter().enumerate() {
        channels[i % n_channels].push(sample);
    }
    Ok(WavContent { channels, sample_rate: spec.sample_rate })
}

fn float_spec(channels: u16, sample_rate: u32) -> WavSpec {
    WavSpec { channels, sample_rate, bits_per_sample: 32, sample_format: SampleFormat::Float }
}

fn pcm16_spec(channels: u16, sample_rate: u32) -> WavSpec {
    WavSpec { channels, sample_rate, bits_per_sample: 16, sample_format: SampleFormat::Int }
}

/// Writes a mono buffer as 32-bit float WAV.
pub fn write_mono_f32(path: impl AsRef<Path>, audio: &MonoAudio) -> Result<()> {
    let mut writer = WavWriter::create(path, float_spec(1, audio.sample_rate))?;
    for &s in &audio.samples {
        writer.write_sample(s as f32)?;
    }
    writer.finalize()?;
    Ok(())
}

/// Writes a mono buffer as 16-bit PCM WAV, clamping to `[-1, 1]`.
pub fn write_mono_pcm16(path: impl AsRef<Path>, audio: &MonoAudio) -> Result<()> {
    let mut writer = WavWriter::create(path, pcm16_spec(1, audio.sample_rate))?;
    for &s in &audio.samples {
        writer.write_sample(pcm16_quantize(s))?;
    }
    writer.finalize()?;
    Ok(())
}

/// Writes a stereo buffer as 32-bit float WAV.
pub fn write_stereo_f32(path: impl AsRef<Path>, audio: &BinauralAudio) -> Result<()> {
    if audio.left.len() != audio.right.len() {
        return Err(Error::LengthMismatch {
            context: format!("stereo channels: {} vs {}", audio.left.len(), audio.right.len()),
        });
    }
    let mut writer = WavWriter::create(path, float_spec(2, audio.sample_rate))?;
    for (&l, &r) in audio.left.iter().zip(&audio.right) {
        writer.write_sample(l as f32)?;
        writer.write_sample(r as f32)?;
    }
    writer.finalize()?;
    Ok(())
}

/// Writes a stereo buffer as 16-bit PCM WAV, clamping to `[-1, 1]`.
pub fn write_stereo_pcm16(path: impl AsRef<Path>, audio: &BinauralAudio) -> Result<()> {
    if audio.left.len() != audio.right.len() {
        return Err(Error::LengthMismatch {
            context: format!("stereo channels: {} vs {}", audio.left.len(), audio.right.len()),
        });
    }
    let mut writer = WavWriter::create(path, pcm16_spec(2, audio.sample_rate))?;
    for (&l, &r) in audio.left.iter().zip(&audio.right) {
        writer.write_sample(pcm16_quantize(l))?;
        writer.write_sample(pcm16_quantize(r))?;
    }
    writer.finalize()?;
    Ok(())
}

fn pcm16_quantize(sample: f64) -> i16 {
    (sample.clamp(-1.0, 1.0) * 32767.0).round() as i16
}
