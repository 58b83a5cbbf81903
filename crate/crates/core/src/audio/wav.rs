use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{resample, Waveform, SAMPLE_RATE};
use crate::error::{Error, Result};

// Smallest possible RIFF/WAVE file: RIFF header + fmt chunk + data chunk header.
const MIN_WAV_BYTES: u64 = 44;

fn map_hound(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e)
            if e.kind() == std::io::ErrorKind::UnexpectedEof
                || e.to_string().contains("read enough bytes") =>
        {
            Error::TruncatedFile(path.display().to_string())
        }
        hound::Error::IoError(e) => Error::io(path, e),
        hound::Error::Unsupported => Error::UnsupportedCodec(path.display().to_string()),
        hound::Error::FormatError(msg) => {
            Error::TruncatedFile(format!("{}: {msg}", path.display()))
        }
        other => Error::UnsupportedCodec(format!("{}: {other}", path.display())),
    }
}

/// Reads a PCM16, PCM24 or float-32 WAV file without resampling.
///
/// Integer samples are scaled by `2^(bits-1)`, so the full-scale 16-bit value 32767
/// decodes to `32767/32768`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let size = file.metadata().map_err(|e| Error::io(path, e))?.len();
    if size < MIN_WAV_BYTES {
        return Err(Error::TruncatedFile(path.display().to_string()));
    }
    let reader = WavReader::new(BufReader::new(file)).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 || channels > 2 {
        return Err(Error::UnsupportedCodec(format!(
            "{}: {channels} channels",
            path.display()
        )));
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>(),
        (SampleFormat::Int, bits @ (16 | 24)) => {
            let scale = (1i64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
        }
        (fmt, bits) => {
            return Err(Error::UnsupportedCodec(format!(
                "{}: {fmt:?} {bits}-bit",
                path.display()
            )))
        }
    }
    .map_err(|e| map_hound(path, e))?;

    if interleaved.is_empty() {
        return Err(Error::EmptyAudio);
    }
    if interleaved.len() % channels != 0 {
        return Err(Error::TruncatedFile(path.display().to_string()));
    }
    let frames = interleaved.len() / channels;
    let mut planar = vec![Vec::with_capacity(frames); channels];
    for frame in interleaved.chunks_exact(channels) {
        for (ch, &s) in frame.iter().enumerate() {
            planar[ch].push(s);
        }
    }
    Waveform::new(planar, spec.sample_rate)
}

/// Writes a float-32 WAV. Samples must be finite.
pub fn write_wav(wf: &Waveform, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    wf.check_finite()?;
    let spec = WavSpec {
        channels: wf.num_channels() as u16,
        sample_rate: wf.sample_rate(),
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for i in 0..wf.len() {
        for ch in wf.channels() {
            writer
                .write_sample(ch[i] as f32)
                .map_err(|e| map_hound(path, e))?;
        }
    }
    writer.finalize().map_err(|e| map_hound(path, e))
}

/// Ingestion path: reads a WAV, resamples to 44.1 kHz and duplicates mono to stereo.
pub fn load_audio(path: impl AsRef<Path>) -> Result<Waveform> {
    let wf = read_wav(path)?;
    let wf = if wf.sample_rate() != SAMPLE_RATE {
        resample(&wf, SAMPLE_RATE)?
    } else {
        wf
    };
    Ok(wf.to_stereo())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn float_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let l: Vec<f64> = (0..44100).map(|n| ((n as f64) * 0.01).sin() * 0.8).collect();
        let r: Vec<f64> = l.iter().map(|x| -x * 0.3).collect();
        let wf = Waveform::stereo(l, r, 44100).unwrap().quantize_f32();
        write_wav(&wf, &path).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.len(), 44100);
        assert_eq!(back.num_channels(), 2);
        assert_eq!(back, wf);
    }

    #[test]
    fn file_size_matches_container_arithmetic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("long.wav");
        let n = 44100 * 30;
        let wf = Waveform::silence(n, 44100).unwrap();
        write_wav(&wf, &path).unwrap();
        let size = std::fs::metadata(&path).unwrap().len();
        let payload = (n * 2 * 4) as u64;
        // float WAVs carry an extended fmt chunk (and possibly a fact chunk)
        assert!(size >= payload + 44 && size <= payload + 44 + 40, "size {size}");
    }

    #[test]
    fn pcm16_full_scale_decodes_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pcm.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 44100,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        for v in [32767i16, -32768, 0, 16384] {
            w.write_sample(v).unwrap();
        }
        w.finalize().unwrap();
        let wf = read_wav(&path).unwrap();
        assert_eq!(wf.num_channels(), 1);
        assert_eq!(wf.channel(0), &[32767.0 / 32768.0, -1.0, 0.0, 0.5]);
    }

    #[test]
    fn pcm24_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pcm24.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 48000,
            bits_per_sample: 24,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        for v in [8_388_607i32, -8_388_608] {
            w.write_sample(v).unwrap();
        }
        w.finalize().unwrap();
        let wf = read_wav(&path).unwrap();
        assert_eq!(wf.sample_rate(), 48000);
        assert_eq!(wf.channel(0), &[8_388_607.0 / 8_388_608.0]);
        assert_eq!(wf.channel(1), &[-1.0]);
    }

    #[test]
    fn empty_file_is_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.wav");
        File::create(&path).unwrap();
        assert!(matches!(read_wav(&path), Err(Error::TruncatedFile(_))));
    }

    #[test]
    fn header_only_file_is_zero_length() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hdr.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 44100,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        WavWriter::create(&path, spec).unwrap().finalize().unwrap();
        assert!(matches!(read_wav(&path), Err(Error::EmptyAudio)));
    }

    #[test]
    fn chopped_payload_is_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chop.wav");
        let wf = Waveform::silence(1000, 44100).unwrap();
        write_wav(&wf, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 1001]).unwrap();
        let r = read_wav(&path);
        assert!(matches!(r, Err(Error::TruncatedFile(_))), "{r:?}");
    }

    #[test]
    fn unsupported_bit_depth() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pcm8.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 44100,
            bits_per_sample: 8,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        for _ in 0..100 {
            w.write_sample(3i8).unwrap();
        }
        w.finalize().unwrap();
        assert!(matches!(read_wav(&path), Err(Error::UnsupportedCodec(_))));
    }

    #[test]
    fn nan_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let wf = Waveform::mono(vec![0.0, f64::NAN], 44100).unwrap();
        assert!(matches!(
            write_wav(&wf, dir.path().join("nan.wav")),
            Err(Error::NonFinite { index: 1, .. })
        ));
    }

    #[test]
    fn unwritable_path() {
        let wf = Waveform::mono(vec![0.0; 4], 44100).unwrap();
        assert!(write_wav(&wf, "/nonexistent-dir/x/y.wav").is_err());
    }

    #[test]
    fn load_audio_makes_stereo_44k() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.wav");
        let wf = Waveform::mono(vec![0.25; 22050], 22050).unwrap();
        write_wav(&wf, &path).unwrap();
        let loaded = load_audio(&path).unwrap();
        assert_eq!(loaded.sample_rate(), 44100);
        assert!(loaded.is_stereo());
        assert_eq!(loaded.len(), 44100);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn any_f32_waveform_round_trips(samples in proptest::collection::vec(-1.0f32..1.0, 1..512)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("p.wav");
            let l: Vec<f64> = samples.iter().map(|&x| x as f64).collect();
            let r: Vec<f64> = samples.iter().rev().map(|&x| x as f64).collect();
            let wf = Waveform::stereo(l, r, 44100).unwrap();
            write_wav(&wf, &path).unwrap();
            prop_assert_eq!(read_wav(&path).unwrap(), wf);
        }
    }
}
