use std::fs::File;
use std::io::{BufReader, Cursor, Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{AudioError, Waveform};

const PCM16_SCALE: f64 = 32768.0;

fn map_hound(err: hound::Error) -> AudioError {
    match err {
        hound::Error::IoError(e) => AudioError::Io(e),
        hound::Error::Unsupported => AudioError::UnsupportedEncoding("unsupported by reader".into()),
        other => AudioError::Format(other.to_string()),
    }
}

fn read_from<R: Read>(reader: WavReader<R>) -> Result<Waveform, AudioError> {
    let spec = reader.spec();
    if spec.channels == 0 {
        return Err(AudioError::Format("zero channels".into()));
    }
    if spec.sample_rate == 0 {
        return Err(AudioError::Format("zero sample rate".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / PCM16_SCALE))
            .collect::<Result<_, _>>()
            .map_err(map_hound)?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()
            .map_err(map_hound)?,
        (format, bits) => {
            return Err(AudioError::UnsupportedEncoding(format!(
                "{format:?} with {bits} bits per sample"
            )))
        }
    };
    let channels = spec.channels as usize;
    let samples = interleaved
        .chunks(channels)
        .map(|frame| (frame.iter().sum::<f64>() / channels as f64) as f32)
        .collect();
    Ok(Waveform::new(samples, spec.sample_rate))
}

/// Reads a PCM16 or float32 WAV file, averaging channels down to mono.
pub fn load_wav(path: impl AsRef<Path>) -> Result<Waveform, AudioError> {
    let file = BufReader::new(File::open(path)?);
    let reader = WavReader::new(file).map_err(map_hound)?;
    read_from(reader)
}

pub fn decode_wav(bytes: &[u8]) -> Result<Waveform, AudioError> {
    let reader = WavReader::new(Cursor::new(bytes)).map_err(map_hound)?;
    read_from(reader)
}

fn quantize_pcm16(sample: f32) -> i16 {
    (sample as f64 * PCM16_SCALE)
        .round()
        .clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

fn write_to<W: Write + Seek>(w: &Waveform, out: W) -> Result<(), AudioError> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: w.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::new(out, spec).map_err(map_hound)?;
    for &s in &w.samples {
        writer.write_sample(quantize_pcm16(s)).map_err(map_hound)?;
    }
    writer.finalize().map_err(map_hound)
}

/// Writes mono PCM16.
pub fn save_wav(w: &Waveform, path: impl AsRef<Path>) -> Result<(), AudioError> {
    let file = std::io::BufWriter::new(File::create(path)?);
    write_to(w, file)
}

pub fn encode_wav(w: &Waveform) -> Result<Vec<u8>, AudioError> {
    let mut cursor = Cursor::new(Vec::new());
    write_to(w, &mut cursor)?;
    Ok(cursor.into_inner())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pcm16_bytes(channels: u16, rate: u32, samples: &[i16]) -> Vec<u8> {
        let spec = WavSpec {
            channels,
            sample_rate: rate,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut cursor = Cursor::new(Vec::new());
        let mut writer = WavWriter::new(&mut cursor, spec).unwrap();
        for &s in samples {
            writer.write_sample(s).unwrap();
        }
        writer.finalize().unwrap();
        cursor.into_inner()
    }

    #[test]
    fn silence_file_loads_as_zeros() {
        let bytes = pcm16_bytes(1, 16_000, &vec![0; 16_000]);
        let w = decode_wav(&bytes).unwrap();
        assert_eq!(w.sample_rate, 16_000);
        assert_eq!(w.len(), 16_000);
        assert!(w.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn antiphase_stereo_averages_to_zero() {
        let mut interleaved = Vec::new();
        for i in 0..1000i32 {
            let v = ((i * 37) % 20_000 - 10_000) as i16;
            interleaved.push(v);
            interleaved.push(-v);
        }
        let w = decode_wav(&pcm16_bytes(2, 8_000, &interleaved)).unwrap();
        assert_eq!(w.len(), 1000);
        assert_eq!(w.sample_rate, 8_000);
        assert!(w.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn pcm_scaling_is_asymmetric() {
        let w = decode_wav(&pcm16_bytes(1, 16_000, &[32767, -32768])).unwrap();
        assert_eq!(w.samples[0], (32767.0f64 / 32768.0) as f32);
        assert_eq!(w.samples[1], -1.0);
    }

    #[test]
    fn float32_files_are_read() {
        let spec = WavSpec {
            channels: 1,
            sample_rate: 22_050,
            bits_per_sample: 32,
            sample_format: SampleFormat::Float,
        };
        let mut cursor = Cursor::new(Vec::new());
        let mut writer = WavWriter::new(&mut cursor, spec).unwrap();
        writer.write_sample(0.25f32).unwrap();
        writer.write_sample(-0.5f32).unwrap();
        writer.finalize().unwrap();
        let w = decode_wav(&cursor.into_inner()).unwrap();
        assert_eq!(w.samples, vec![0.25, -0.5]);
    }

    #[test]
    fn unsupported_and_malformed_inputs() {
        let spec = WavSpec {
            channels: 1,
            sample_rate: 16_000,
            bits_per_sample: 24,
            sample_format: SampleFormat::Int,
        };
        let mut cursor = Cursor::new(Vec::new());
        let mut writer = WavWriter::new(&mut cursor, spec).unwrap();
        writer.write_sample(5i32).unwrap();
        writer.finalize().unwrap();
        assert!(matches!(
            decode_wav(&cursor.into_inner()),
            Err(AudioError::UnsupportedEncoding(_))
        ));
        assert!(matches!(
            decode_wav(b"RIFF\x10\x00\x00\x00JUNKJUNK"),
            Err(AudioError::Format(_))
        ));
    }

    #[test]
    fn pcm16_round_trip_is_exact_for_representable_values() {
        let samples: Vec<f32> = (-100..100).map(|i| i as f32 * 163.0 / 32768.0).collect();
        let w = Waveform::new(samples, 16_000);
        let back = decode_wav(&encode_wav(&w).unwrap()).unwrap();
        assert_eq!(back, w);
    }
}
