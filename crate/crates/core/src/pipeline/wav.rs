//! Sample-accurate splitting of 16-bit mono PCM WAV files.
//!
//! The reader walks RIFF chunks (LIST and friends are skipped), the writer
//! emits the canonical 44-byte header. Cut points land at
//! `round(time * sample_rate)` samples, so a full-coverage plan concatenates
//! back to the original data chunk byte for byte.

use thiserror::Error;

use super::segment::SegmentPlan;

#[derive(Debug, Error, PartialEq)]
pub enum WavError {
    #[error("not a RIFF/WAVE file: {0}")]
    NotWave(String),
    #[error("unsupported format: {0}")]
    Unsupported(String),
    #[error("truncated file: {0}")]
    Truncated(String),
    #[error("cut time {time} s is beyond the file length {len} s")]
    OutOfRange { time: f64, len: f64 },
    #[error("chunk start {start} >= end {end}")]
    BadChunk { start: f64, end: f64 },
}

/// A decoded 16-bit mono PCM file: sample rate plus raw little-endian
/// sample bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct PcmAudio {
    pub sample_rate: u32,
    /// Raw data chunk contents; two bytes per sample.
    pub data: Vec<u8>,
}

impl PcmAudio {
    pub fn n_samples(&self) -> usize {
        self.data.len() / 2
    }

    pub fn duration(&self) -> f64 {
        self.n_samples() as f64 / self.sample_rate as f64
    }
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32, WavError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| WavError::Truncated(format!("u32 at offset {at}")))
}

fn read_u16(bytes: &[u8], at: usize) -> Result<u16, WavError> {
    bytes
        .get(at..at + 2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .ok_or_else(|| WavError::Truncated(format!("u16 at offset {at}")))
}

/// Parse a WAV file, accepting only uncompressed 16-bit mono PCM.
pub fn parse_wav(bytes: &[u8]) -> Result<PcmAudio, WavError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(WavError::NotWave("missing RIFF/WAVE signature".to_string()));
    }
    let mut pos = 12usize;
    let mut format: Option<(u16, u16, u32, u16)> = None; // tag, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4)? as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .ok_or_else(|| WavError::Truncated("chunk size overflow".to_string()))?;
        if body_end > bytes.len() {
            return Err(WavError::Truncated(format!(
                "chunk {:?} declares {size} bytes but only {} remain",
                String::from_utf8_lossy(id),
                bytes.len() - body_start
            )));
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(WavError::Truncated(
                        "fmt chunk shorter than 16 bytes".to_string(),
                    ));
                }
                format = Some((
                    read_u16(bytes, body_start)?,
                    read_u16(bytes, body_start + 2)?,
                    read_u32(bytes, body_start + 4)?,
                    read_u16(bytes, body_start + 14)?,
                ));
            }
            b"data" => {
                data = Some(&bytes[body_start..body_end]);
            }
            _ => {}
        }
        // chunks are word-aligned: odd sizes carry a pad byte
        pos = body_end + (size % 2);
    }
    let (tag, channels, rate, bits) =
        format.ok_or_else(|| WavError::Truncated("no fmt chunk".to_string()))?;
    let data = data.ok_or_else(|| WavError::Truncated("no data chunk".to_string()))?;
    if tag != 1 {
        return Err(WavError::Unsupported(format!(
            "format tag {tag}, want 1 (PCM)"
        )));
    }
    if bits != 16 {
        return Err(WavError::Unsupported(format!(
            "{bits}-bit samples, want 16"
        )));
    }
    if channels != 1 {
        return Err(WavError::Unsupported(format!(
            "{channels} channels, want mono"
        )));
    }
    if rate == 0 {
        return Err(WavError::Unsupported("zero sample rate".to_string()));
    }
    if data.len() % 2 != 0 {
        return Err(WavError::Truncated(
            "data chunk has an odd byte count".to_string(),
        ));
    }
    Ok(PcmAudio {
        sample_rate: rate,
        data: data.to_vec(),
    })
}

/// Serialize 16-bit mono PCM with the canonical 44-byte header.
pub fn write_wav(audio: &PcmAudio) -> Vec<u8> {
    let data_len = audio.data.len() as u32;
    let byte_rate = audio.sample_rate * 2;
    let mut out = Vec::with_capacity(44 + audio.data.len());
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&audio.sample_rate.to_le_bytes());
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    out.extend_from_slice(&audio.data);
    out
}

/// Sample index for a cut at `time` seconds.
fn sample_index(time: f64, rate: u32) -> usize {
    (time * rate as f64).round() as usize
}

/// Cut one chunk out of decoded audio, sample-accurately.
pub fn cut_chunk(audio: &PcmAudio, start: f64, end: f64) -> Result<PcmAudio, WavError> {
    if start >= end {
        return Err(WavError::BadChunk { start, end });
    }
    let n = audio.n_samples();
    let from = sample_index(start, audio.sample_rate);
    let to = sample_index(end, audio.sample_rate);
    if from > n || to > n {
        return Err(WavError::OutOfRange {
            time: if from > n { start } else { end },
            len: audio.duration(),
        });
    }
    Ok(PcmAudio {
        sample_rate: audio.sample_rate,
        data: audio.data[from * 2..to * 2].to_vec(),
    })
}

/// Split a WAV file according to a segment plan, returning one encoded WAV
/// per chunk in plan order.
pub fn split_wav(bytes: &[u8], plan: &SegmentPlan) -> Result<Vec<Vec<u8>>, WavError> {
    let audio = parse_wav(bytes)?;
    plan.chunks
        .iter()
        .map(|chunk| cut_chunk(&audio, chunk.start, chunk.end).map(|a| write_wav(&a)))
        .collect()
}
