//! Log-Mel spectrogram front end (16 kHz, 25 ms Hann windows, 10 ms hop,
//! 64 Mel bands over 125–7500 Hz, 96×64 patches) and a linear 128-D
//! embedding in place of a convolutional audio network.

use std::io::Cursor;
use std::path::Path;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::corpus::sample_frame_indices;

pub const SAMPLE_RATE: u32 = 16_000;
pub const WINDOW_LEN: usize = 400;
pub const HOP_LEN: usize = 160;
pub const FFT_LEN: usize = 512;
pub const N_FFT_BINS: usize = FFT_LEN / 2 + 1;
pub const N_MELS: usize = 64;
pub const PATCH_FRAMES: usize = 96;
pub const N_PATCHES: usize = 28;
pub const MEL_LOW_HZ: f64 = 125.0;
pub const MEL_HIGH_HZ: f64 = 7500.0;
pub const LOG_OFFSET: f64 = 0.01;
pub const EMBED_DIM: usize = 128;

/// Mono audio at 16 kHz.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
}

impl Waveform {
    pub fn new(samples: Vec<f64>) -> crate::Result<Self> {
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(crate::Error::data("waveform", format!("non-finite sample at {i}")));
        }
        Ok(Waveform { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn rate(&self) -> u32 {
        SAMPLE_RATE
    }

    pub fn scaled(&self, c: f64) -> Waveform {
        Waveform {
            samples: self.samples.iter().map(|s| s * c).collect(),
        }
    }
}

/// Parses a 16-bit PCM mono WAV at 16 kHz. Other rates are rejected rather
/// than resampled.
pub fn decode_wav(bytes: &[u8]) -> crate::Result<Waveform> {
    let reader = hound::WavReader::new(Cursor::new(bytes))?;
    let spec = reader.spec();
    if spec.sample_rate != SAMPLE_RATE {
        return Err(crate::Error::format(
            "wav",
            format!("sample rate {} Hz, expected {SAMPLE_RATE} Hz (no resampling)", spec.sample_rate),
        ));
    }
    if spec.channels != 1 {
        return Err(crate::Error::format("wav", format!("{} channels, expected mono", spec.channels)));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(crate::Error::format(
            "wav",
            format!("{:?} {}-bit samples, expected 16-bit PCM", spec.sample_format, spec.bits_per_sample),
        ));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<Result<Vec<_>, _>>()?;
    Waveform::new(samples)
}

pub fn read_wav(path: &Path) -> crate::Result<Waveform> {
    let bytes = std::fs::read(path).map_err(|e| crate::Error::io(path, e))?;
    decode_wav(&bytes)
}

/// 16-bit PCM encoding of `w`, the inverse of [`decode_wav`] on its
/// outputs. Samples outside the 16-bit range saturate.
pub fn encode_wav(w: &Waveform) -> crate::Result<Vec<u8>> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut buf = Cursor::new(Vec::new());
    {
        let mut writer = hound::WavWriter::new(&mut buf, spec)?;
        for &s in &w.samples {
            writer.write_sample((s * 32768.0).round().clamp(-32768.0, 32767.0) as i16)?;
        }
        writer.finalize()?;
    }
    Ok(buf.into_inner())
}

fn hann() -> Vec<f64> {
    (0..WINDOW_LEN)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / WINDOW_LEN as f64).cos())
        .collect()
}

/// Hann-windowed 400-sample frames at a 160-sample hop. Inputs shorter than
/// one window are zero-padded to a single frame.
pub fn frame_signal(w: &Waveform) -> Vec<Vec<f64>> {
    let window = hann();
    let s = &w.samples;
    if s.len() < WINDOW_LEN {
        let mut frame = vec![0.0; WINDOW_LEN];
        for (i, v) in s.iter().enumerate() {
            frame[i] = v * window[i];
        }
        return vec![frame];
    }
    let count = (s.len() - WINDOW_LEN) / HOP_LEN + 1;
    (0..count)
        .map(|j| {
            s[j * HOP_LEN..j * HOP_LEN + WINDOW_LEN]
                .iter()
                .zip(&window)
                .map(|(a, b)| a * b)
                .collect()
        })
        .collect()
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Center frequency (Hz) of each Mel band.
pub fn mel_centers_hz(n_mels: usize) -> Vec<f64> {
    let (lo, hi) = (hz_to_mel(MEL_LOW_HZ), hz_to_mel(MEL_HIGH_HZ));
    let step = (hi - lo) / (n_mels + 1) as f64;
    (1..=n_mels).map(|i| mel_to_hz(lo + step * i as f64)).collect()
}

/// Triangular Mel filters (`n_mels × n_fft_bins`), linear in Mel between
/// neighbouring band edges. Bins outside 125–7500 Hz get zero weight.
pub fn mel_filterbank(n_fft_bins: usize, n_mels: usize) -> crate::Result<Array2<f64>> {
    if n_mels == 0 || n_fft_bins < 2 {
        return Err(crate::Error::invalid("need n_mels >= 1 and n_fft_bins >= 2"));
    }
    let nyquist = SAMPLE_RATE as f64 / 2.0;
    let bin_mel: Vec<f64> = (0..n_fft_bins)
        .map(|k| hz_to_mel(nyquist * k as f64 / (n_fft_bins - 1) as f64))
        .collect();
    let (lo, hi) = (hz_to_mel(MEL_LOW_HZ), hz_to_mel(MEL_HIGH_HZ));
    let step = (hi - lo) / (n_mels + 1) as f64;
    let mut fb = Array2::zeros((n_mels, n_fft_bins));
    for m in 0..n_mels {
        let (left, center, right) = (lo + step * m as f64, lo + step * (m + 1) as f64, lo + step * (m + 2) as f64);
        for (k, &bm) in bin_mel.iter().enumerate() {
            let w = if bm > left && bm <= center {
                (bm - left) / (center - left)
            } else if bm > center && bm < right {
                (right - bm) / (right - center)
            } else {
                0.0
            };
            fb[[m, k]] = w;
        }
    }
    Ok(fb)
}

/// One 96×64 block of log-Mel energies.
#[derive(Debug, Clone, PartialEq)]
pub struct MelPatch {
    pub values: Array2<f64>,
}

/// Reusable FFT plan and filterbank.
pub struct MelFrontEnd {
    fft: Arc<dyn Fft<f64>>,
    filterbank: Array2<f64>,
}

impl Default for MelFrontEnd {
    fn default() -> Self {
        Self::new()
    }
}

impl MelFrontEnd {
    pub fn new() -> Self {
        MelFrontEnd {
            fft: FftPlanner::new().plan_fft_forward(FFT_LEN),
            filterbank: mel_filterbank(N_FFT_BINS, N_MELS).expect("constant sizes are valid"),
        }
    }

    pub fn filterbank(&self) -> &Array2<f64> {
        &self.filterbank
    }

    fn power_spectrum(&self, frame: &[f64]) -> Array1<f64> {
        let mut buf: Vec<Complex<f64>> = frame.iter().map(|&x| Complex::new(x, 0.0)).collect();
        buf.resize(FFT_LEN, Complex::new(0.0, 0.0));
        self.fft.process(&mut buf);
        Array1::from_iter(buf[..N_FFT_BINS].iter().map(|c| c.norm_sqr()))
    }

    /// Pre-log Mel energies, one row per STFT frame.
    pub fn mel_energies(&self, w: &Waveform) -> Array2<f64> {
        let frames = frame_signal(w);
        let mut out = Array2::zeros((frames.len(), N_MELS));
        for (i, f) in frames.iter().enumerate() {
            out.row_mut(i).assign(&self.filterbank.dot(&self.power_spectrum(f)));
        }
        out
    }

    /// 28 log-Mel patches of 96 frames, starting at uniformly sampled window
    /// positions. Short inputs are zero-padded to 96 frames.
    pub fn log_mel_patches(&self, w: &Waveform, n_patches: usize) -> crate::Result<Vec<MelPatch>> {
        let min_len = WINDOW_LEN + (PATCH_FRAMES - 1) * HOP_LEN;
        let padded;
        let w = if w.samples.len() < min_len {
            let mut s = w.samples.clone();
            s.resize(min_len, 0.0);
            padded = Waveform { samples: s };
            &padded
        } else {
            w
        };
        let log_mel = self.mel_energies(w).mapv(|e| (e + LOG_OFFSET).ln());
        let n_windows = log_mel.nrows() - PATCH_FRAMES + 1;
        sample_frame_indices(n_windows, n_patches)?
            .into_iter()
            .map(|start| {
                Ok(MelPatch {
                    values: log_mel.slice(ndarray::s![start..start + PATCH_FRAMES, ..]).to_owned(),
                })
            })
            .collect()
    }
}

/// Convenience wrapper building a fresh [`MelFrontEnd`].
pub fn log_mel_patches(w: &Waveform, n_patches: usize) -> crate::Result<Vec<MelPatch>> {
    MelFrontEnd::new().log_mel_patches(w, n_patches)
}

/// Affine map from a flattened 96×64 patch to a 128-D embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioEmbedding {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl AudioEmbedding {
    pub fn zeros(out_dim: usize) -> Self {
        AudioEmbedding {
            weight: Array2::zeros((out_dim, PATCH_FRAMES * N_MELS)),
            bias: Array1::zeros(out_dim),
        }
    }

    /// Uniform(-0.08, 0.08) weights, zero bias.
    pub fn init(out_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut e = Self::zeros(out_dim);
        e.weight.mapv_inplace(|_| rng.gen_range(-0.08..0.08));
        e
    }

    pub fn embed(&self, patch: &MelPatch) -> crate::Result<Array1<f64>> {
        if patch.values.dim() != (PATCH_FRAMES, N_MELS) || self.weight.ncols() != PATCH_FRAMES * N_MELS {
            return Err(crate::Error::invalid("patch or projection shape mismatch"));
        }
        let flat: ArrayView1<f64> = ArrayView1::from(
            patch
                .values
                .as_slice()
                .ok_or_else(|| crate::Error::invalid("patch not contiguous"))?,
        );
        Ok(self.weight.dot(&flat) + &self.bias)
    }
}

/// Full audio path: waveform → 28 patches → 28×128 feature matrix.
pub fn audio_features(w: &Waveform, embed: &AudioEmbedding) -> crate::Result<Array2<f64>> {
    let patches = log_mel_patches(w, N_PATCHES)?;
    let mut out = Array2::zeros((patches.len(), embed.bias.len()));
    for (i, p) in patches.iter().enumerate() {
        out.row_mut(i).assign(&embed.embed(p)?);
    }
    Ok(out)
}


#[cfg(test)]
mod tone_tests {
    use super::*;

    #[test]
    fn pure_tone_peaks_at_nearest_band() {
        let fe = MelFrontEnd::new();
        let centers = mel_centers_hz(N_MELS);
        for hz in [250.0, 1000.0, 4000.0] {
            let n = 2 * SAMPLE_RATE as usize;
            let w = Waveform::new(
                (0..n)
                    .map(|i| 0.5 * (2.0 * std::f64::consts::PI * hz * i as f64 / SAMPLE_RATE as f64).sin())
                    .collect(),
            )
            .unwrap();
            let nearest = (0..N_MELS)
                .min_by(|&a, &b| (centers[a] - hz).abs().total_cmp(&(centers[b] - hz).abs()))
                .unwrap();
            let patches = fe.log_mel_patches(&w, N_PATCHES).unwrap();
            for p in &patches {
                for row in p.values.rows() {
                    let arg = (0..N_MELS).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
                    assert_eq!(arg, nearest, "tone {hz} Hz");
                }
            }
        }
    }
}
