//! Audio rendering: pitch mapping, sine and FM voices, mixing, low-pass
//! filtering, 16-bit WAV output and STFT spectrograms.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::pipeline::{downsample, ChannelSet};

/// How a value in `[y_min, y_max]` is spread over `[f_min, f_max]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PitchScale {
    #[default]
    Linear,
    /// Equal ratios per equal value steps.
    Log,
}

impl std::str::FromStr for PitchScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(PitchScale::Linear),
            "log" => Ok(PitchScale::Log),
            other => Err(Error::invalid(format!("unknown pitch scale `{other}`"))),
        }
    }
}

impl std::fmt::Display for PitchScale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PitchScale::Linear => "linear",
            PitchScale::Log => "log",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SonifyConfig {
    /// Seconds per note.
    pub note_duration: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub audio_rate: u32,
    pub lowpass_cutoff: f64,
    pub amplitude_per_voice: f64,
    /// Linear fade at both ends of every note, seconds.
    pub fade: f64,
    pub pitch_scale: PitchScale,
}

impl Default for SonifyConfig {
    fn default() -> Self {
        Self {
            note_duration: 0.1,
            f_min: 261.63,
            f_max: 1244.51,
            audio_rate: 44100,
            lowpass_cutoff: 4000.0,
            amplitude_per_voice: 0.8,
            fade: 0.005,
            pitch_scale: PitchScale::Linear,
        }
    }
}

impl SonifyConfig {
    pub fn validate(&self) -> Result<()> {
        let nyquist = f64::from(self.audio_rate) / 2.0;
        if !(0.0 < self.f_min && self.f_min < self.f_max && self.f_max < nyquist) {
            return Err(Error::invalid(format!(
                "need 0 < f_min < f_max < {nyquist} Hz, got {} / {}",
                self.f_min, self.f_max
            )));
        }
        if !(self.note_duration > 0.0 && self.note_duration.is_finite()) {
            return Err(Error::invalid("note duration must be positive"));
        }
        if !(0.0..=1.0).contains(&self.amplitude_per_voice) {
            return Err(Error::invalid("amplitude per voice must lie in [0, 1]"));
        }
        if !(self.fade >= 0.0) {
            return Err(Error::invalid("fade must be non-negative"));
        }
        if !(0.0 < self.lowpass_cutoff && self.lowpass_cutoff < nyquist) {
            return Err(Error::invalid(format!(
                "low-pass cutoff {} outside (0, {nyquist})",
                self.lowpass_cutoff
            )));
        }
        Ok(())
    }

    fn samples_until_note(&self, note: usize) -> usize {
        (note as f64 * self.note_duration * f64::from(self.audio_rate)).round() as usize
    }
}

/// Mono samples at a fixed rate.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub rate: u32,
}

impl AudioBuffer {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.rate)
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Rescales to a 0.9 peak when the peak exceeds 1.
    pub fn limit_peak(&mut self) {
        let peak = self.peak();
        if peak > 1.0 {
            let gain = 0.9 / peak;
            self.samples.iter_mut().for_each(|s| *s *= gain);
        }
    }
}

pub fn pitch_map(value: f64, y_min: f64, y_max: f64, cfg: &SonifyConfig) -> Result<f64> {
    if !(y_min < y_max) {
        return Err(Error::invalid(format!(
            "degenerate value range [{y_min}, {y_max}]"
        )));
    }
    let u = ((value.clamp(y_min, y_max) - y_min) / (y_max - y_min)).clamp(0.0, 1.0);
    Ok(match cfg.pitch_scale {
        PitchScale::Linear => cfg.f_min + u * (cfg.f_max - cfg.f_min),
        PitchScale::Log => cfg.f_min * (cfg.f_max / cfg.f_min).powf(u),
    })
}

/// Maps a whole series using its own min and max. A flat series sits on
/// `f_min`.
pub fn pitch_series(values: &[f64], cfg: &SonifyConfig) -> Result<Vec<f64>> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if lo == hi {
        return Ok(vec![cfg.f_min; values.len()]);
    }
    values.iter().map(|&v| pitch_map(v, lo, hi, cfg)).collect()
}

fn fade_gain(pos: usize, len: usize, fade: usize) -> f64 {
    let fade = fade.min(len / 2);
    if fade == 0 {
        return 1.0;
    }
    let from_end = len - 1 - pos;
    (pos.min(from_end) as f64 / fade as f64).min(1.0)
}

fn check_pitches(pitches: &[f64], cfg: &SonifyConfig) -> Result<()> {
    cfg.validate()?;
    if pitches.is_empty() {
        return Err(Error::invalid("no notes to render"));
    }
    let tol = 1e-9 * cfg.f_max;
    if let Some(bad) = pitches
        .iter()
        .find(|&&f| !(f >= cfg.f_min - tol && f <= cfg.f_max + tol))
    {
        return Err(Error::invalid(format!(
            "pitch {bad} Hz outside [{}, {}]",
            cfg.f_min, cfg.f_max
        )));
    }
    Ok(())
}

/// Walks the note grid, handing each sample's note index, carrier phase
/// and phase increment to `sample`. Phases carry over between notes.
fn synthesize(
    pitches: &[f64],
    cfg: &SonifyConfig,
    mut sample: impl FnMut(usize, f64, f64) -> f64,
) -> AudioBuffer {
    let rate = f64::from(cfg.audio_rate);
    let fade = (cfg.fade * rate).round() as usize;
    let total = cfg.samples_until_note(pitches.len());
    let mut samples = Vec::with_capacity(total);
    let mut phase = 0.0_f64;
    for (j, &f) in pitches.iter().enumerate() {
        let (start, end) = (cfg.samples_until_note(j), cfg.samples_until_note(j + 1));
        let step = TAU * f / rate;
        for pos in 0..end - start {
            let gain = cfg.amplitude_per_voice * fade_gain(pos, end - start, fade);
            samples.push(gain * sample(j, phase, step));
            phase = (phase + step) % TAU;
        }
    }
    AudioBuffer {
        samples,
        rate: cfg.audio_rate,
    }
}

/// Concatenated sine notes of `note_duration` seconds each.
pub fn render_voice(pitches: &[f64], cfg: &SonifyConfig) -> Result<AudioBuffer> {
    check_pitches(pitches, cfg)?;
    Ok(synthesize(pitches, cfg, |_, phase, _| phase.sin()))
}

/// FM notes `sin(φ_c + I·sin(φ_m))` with `f_m = mod_ratio·f_c` and a
/// per-note modulation index.
pub fn fm_modulate(
    carrier_pitches: &[f64],
    index_envelope: &[f64],
    mod_ratio: f64,
    cfg: &SonifyConfig,
) -> Result<AudioBuffer> {
    check_pitches(carrier_pitches, cfg)?;
    if index_envelope.len() != carrier_pitches.len() {
        return Err(Error::DimensionMismatch {
            expected: carrier_pitches.len(),
            found: index_envelope.len(),
        });
    }
    if let Some(bad) = index_envelope.iter().find(|&&i| !(i >= 0.0)) {
        return Err(Error::invalid(format!("negative modulation index {bad}")));
    }
    if !(mod_ratio > 0.0 && mod_ratio.is_finite()) {
        return Err(Error::invalid("modulation ratio must be positive"));
    }
    let mut mod_phase = 0.0_f64;
    Ok(synthesize(carrier_pitches, cfg, |note, phase, step| {
        let out = (phase + index_envelope[note] * mod_phase.sin()).sin();
        mod_phase = (mod_phase + mod_ratio * step) % TAU;
        out
    }))
}

/// Spreads step values over `n_notes` by linear interpolation between step
/// centres and scales them by `index_max`.
pub fn fm_index_envelope(step_values: &[f64], n_notes: usize, index_max: f64) -> Vec<f64> {
    let m = step_values.len();
    if m == 0 {
        return vec![0.0; n_notes];
    }
    (0..n_notes)
        .map(|i| {
            let x = ((i as f64 + 0.5) * m as f64 / n_notes as f64 - 0.5).clamp(0.0, (m - 1) as f64);
            let lo = x.floor() as usize;
            let hi = (lo + 1).min(m - 1);
            let frac = x - lo as f64;
            index_max * (step_values[lo] * (1.0 - frac) + step_values[hi] * frac)
        })
        .collect()
}

/// Averages voices sample by sample (shorter ones zero-padded).
pub fn mix(voices: &[AudioBuffer]) -> Result<AudioBuffer> {
    let first = voices
        .first()
        .ok_or_else(|| Error::invalid("nothing to mix"))?;
    if let Some(bad) = voices.iter().find(|v| v.rate != first.rate) {
        return Err(Error::invalid(format!(
            "mixed sample rates {} and {}",
            first.rate, bad.rate
        )));
    }
    let len = voices.iter().map(|v| v.samples.len()).max().unwrap_or(0);
    let mut samples = vec![0.0; len];
    for voice in voices {
        for (acc, s) in samples.iter_mut().zip(&voice.samples) {
            *acc += s;
        }
    }
    let scale = 1.0 / voices.len() as f64;
    samples.iter_mut().for_each(|s| *s *= scale);
    let mut out = AudioBuffer {
        samples,
        rate: first.rate,
    };
    out.limit_peak();
    Ok(out)
}

/// Second-order Butterworth low-pass (bilinear biquad). The filter starts
/// in the steady state of the first sample, so constant input passes
/// unchanged.
pub fn lowpass(buffer: &AudioBuffer, cutoff: f64) -> Result<AudioBuffer> {
    let rate = f64::from(buffer.rate);
    if !(cutoff > 0.0 && cutoff < rate / 2.0) {
        return Err(Error::invalid(format!(
            "cutoff {cutoff} Hz outside (0, {})",
            rate / 2.0
        )));
    }
    let w0 = TAU * cutoff / rate;
    let alpha = w0.sin() / (2.0 * std::f64::consts::FRAC_1_SQRT_2);
    let cos = w0.cos();
    let a0 = 1.0 + alpha;
    let b0 = (1.0 - cos) / 2.0 / a0;
    let b1 = (1.0 - cos) / a0;
    let b2 = b0;
    let a1 = -2.0 * cos / a0;
    let a2 = (1.0 - alpha) / a0;

    let x0 = buffer.samples.first().copied().unwrap_or(0.0);
    let (mut x1, mut x2, mut y1, mut y2) = (x0, x0, x0, x0);
    let samples = buffer
        .samples
        .iter()
        .map(|&x| {
            let y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
            (x2, x1, y2, y1) = (x1, x, y1, y);
            y
        })
        .collect();
    Ok(AudioBuffer {
        samples,
        rate: buffer.rate,
    })
}

/// Renders one voice per pitch series, optionally FM-modulated with a
/// shared per-note index, then mixes, filters and limits the result.
pub fn render_polyphony(
    voices: &[Vec<f64>],
    fm: Option<(&[f64], f64)>,
    cfg: &SonifyConfig,
) -> Result<AudioBuffer> {
    let rendered = voices
        .par_iter()
        .map(|pitches| match fm {
            Some((index, ratio)) => fm_modulate(pitches, index, ratio, cfg),
            None => render_voice(pitches, cfg),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = lowpass(&mix(&rendered)?, cfg.lowpass_cutoff)?;
    out.limit_peak();
    Ok(out)
}

/// Pitch series of every channel after keeping one sample in `factor`.
pub fn channel_pitches(
    set: &ChannelSet,
    factor: usize,
    cfg: &SonifyConfig,
) -> Result<Vec<Vec<f64>>> {
    set.channels()
        .iter()
        .map(|c| pitch_series(&downsample(c, factor)?, cfg))
        .collect()
}

const WAV_HEADER_LEN: usize = 44;

/// 16-bit PCM mono WAV bytes. Samples are clamped to [−1, 1], scaled by
/// 32767 and rounded half away from zero.
pub fn encode_wav(buffer: &AudioBuffer) -> Vec<u8> {
    let data_len = (buffer.samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(WAV_HEADER_LEN + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&buffer.rate.to_le_bytes());
    out.extend_from_slice(&(buffer.rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &buffer.samples {
        let q = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

pub fn write_wav(buffer: &AudioBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_wav(buffer)).map_err(|e| Error::io(path, e))
}

/// Header fields of a PCM WAV file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WavInfo {
    pub channels: u16,
    pub rate: u32,
    pub bits_per_sample: u16,
    pub n_frames: usize,
}

/// Parses a 16-bit PCM WAV file, walking chunks until `data`.
pub fn decode_wav(bytes: &[u8]) -> std::result::Result<(WavInfo, Vec<i16>), String> {
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let u32_at =
        |i: usize| u32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
    if bytes.len() < 12 || &bytes[..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err("not a RIFF/WAVE file".into());
    }
    if u32_at(4) as usize + 8 != bytes.len() {
        return Err("RIFF size does not match file length".into());
    }
    let mut pos = 12;
    let mut fmt = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let len = u32_at(pos + 4) as usize;
        let body = pos + 8;
        if body + len > bytes.len() {
            return Err(format!(
                "chunk {:?} overruns file",
                String::from_utf8_lossy(id)
            ));
        }
        match id {
            b"fmt " => {
                if len < 16 || u16_at(body) != 1 {
                    return Err("only PCM fmt chunks are supported".into());
                }
                let info = WavInfo {
                    channels: u16_at(body + 2),
                    rate: u32_at(body + 4),
                    bits_per_sample: u16_at(body + 14),
                    n_frames: 0,
                };
                let block_align = u16_at(body + 12);
                if info.bits_per_sample != 16 || block_align != 2 * info.channels {
                    return Err("only 16-bit PCM is supported".into());
                }
                if u32_at(body + 8) != info.rate * u32::from(block_align) {
                    return Err("inconsistent byte rate".into());
                }
                fmt = Some(info);
            }
            b"data" => {
                let mut info = fmt.ok_or("data chunk before fmt chunk")?;
                let samples: Vec<i16> = bytes[body..body + len]
                    .chunks_exact(2)
                    .map(|b| i16::from_le_bytes([b[0], b[1]]))
                    .collect();
                info.n_frames = samples.len() / usize::from(info.channels.max(1));
                return Ok((info, samples));
            }
            _ => {}
        }
        pos = body + len + (len & 1);
    }
    Err("no data chunk".into())
}

/// Reads a mono 16-bit WAV back into [−1, 1] samples.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (info, samples) = decode_wav(&bytes).map_err(|message| Error::Format {
        path: path.to_owned(),
        message,
    })?;
    if info.channels != 1 {
        return Err(Error::Format {
            path: path.to_owned(),
            message: format!("expected mono, found {} channels", info.channels),
        });
    }
    Ok(AudioBuffer {
        samples: samples.iter().map(|&s| f64::from(s) / 32767.0).collect(),
        rate: info.rate,
    })
}

/// Hann-windowed STFT magnitudes, `frames[t][k]` for bins `0..=fft_size/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    pub fft_size: usize,
    pub hop: usize,
    pub rate: u32,
    pub frames: Vec<Vec<f64>>,
}

pub fn spectrogram(buffer: &AudioBuffer, fft_size: usize, hop: usize) -> Result<Spectrogram> {
    if fft_size < 2 || !fft_size.is_power_of_two() {
        return Err(Error::NotPowerOfTwo { len: fft_size });
    }
    if hop == 0 {
        return Err(Error::invalid("spectrogram hop must be at least 1"));
    }
    let len = buffer.samples.len();
    if len < fft_size {
        return Err(Error::TooShort {
            len,
            needed: fft_size,
        });
    }
    let window: Vec<f64> = (0..fft_size)
        .map(|n| 0.5 - 0.5 * (TAU * n as f64 / fft_size as f64).cos())
        .collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(fft_size);
    let n_frames = (len - fft_size) / hop + 1;
    let frames = (0..n_frames)
        .into_par_iter()
        .map(|t| {
            let start = t * hop;
            let mut bins: Vec<Complex<f64>> = buffer.samples[start..start + fft_size]
                .iter()
                .zip(&window)
                .map(|(s, w)| Complex::new(s * w, 0.0))
                .collect();
            fft.process(&mut bins);
            bins[..=fft_size / 2].iter().map(|c| c.norm()).collect()
        })
        .collect();
    Ok(Spectrogram {
        fft_size,
        hop,
        rate: buffer.rate,
        frames,
    })
}

/// Dynamic range of the PGM rendering, dB below the loudest bin.
const PGM_RANGE_DB: f64 = 80.0;

impl Spectrogram {
    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * f64::from(self.rate) / self.fft_size as f64
    }

    /// One row per frame: frame start time, then one magnitude per bin.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s");
        for k in 0..self.n_bins() {
            let _ = write!(out, ",{}", self.bin_frequency(k));
        }
        out.push('\n');
        for (t, frame) in self.frames.iter().enumerate() {
            let _ = write!(out, "{}", (t * self.hop) as f64 / f64::from(self.rate));
            for m in frame {
                let _ = write!(out, ",{m}");
            }
            out.push('\n');
        }
        out
    }

    /// Binary 8-bit PGM (P5): time left to right, highest frequency on top,
    /// log magnitude over the top 80 dB.
    pub fn to_pgm(&self) -> Vec<u8> {
        let (width, height) = (self.frames.len(), self.n_bins());
        let peak = self.frames.iter().flatten().fold(0.0_f64, |m, &v| m.max(v));
        let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
        for k in (0..height).rev() {
            for frame in &self.frames {
                let m = frame[k];
                let pixel = if peak > 0.0 && m > 0.0 {
                    let db = 20.0 * (m / peak).log10();
                    (255.0 * (1.0 + db / PGM_RANGE_DB))
                        .round()
                        .clamp(0.0, 255.0) as u8
                } else {
                    0
                };
                out.push(pixel);
            }
        }
        out
    }
}
