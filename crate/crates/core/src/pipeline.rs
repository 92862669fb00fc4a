//! Channel ingestion, reductions and schedule construction.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Named multi-channel series sharing one sample rate.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    names: Vec<String>,
    sample_rate: f64,
    data: Vec<Vec<f64>>,
}

impl ChannelSet {
    pub fn new(names: Vec<String>, sample_rate: f64, data: Vec<Vec<f64>>) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if names.len() != data.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                found: data.len(),
            });
        }
        let mut seen = HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::invalid(format!("duplicate channel name `{dup}`")));
        }
        if let Some(first) = data.first() {
            if let Some(bad) = data.iter().position(|c| c.len() != first.len()) {
                return Err(Error::invalid(format!(
                    "channel `{}` has {} samples, expected {}",
                    names[bad],
                    data[bad].len(),
                    first.len()
                )));
            }
        }
        Ok(Self {
            names,
            sample_rate,
            data,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn n_channels(&self) -> usize {
        self.names.len()
    }

    pub fn n_samples(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.data
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.index_of(name).map(|i| self.data[i].as_slice())
    }

    /// CSV text: `# sample_rate=<Hz>` line, header of names, one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.n_channels() * self.n_samples() * 8);
        let _ = writeln!(out, "# sample_rate={}", self.sample_rate);
        out.push_str(&self.names.join(","));
        out.push('\n');
        for i in 0..self.n_samples() {
            for (c, channel) in self.data.iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", channel[i]);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn sample_rate_from_metadata(line: &str) -> Option<Result<f64>> {
    let body = line.trim_start_matches('#').trim();
    let value = body.strip_prefix("sample_rate")?.trim_start();
    let value = value.strip_prefix('=')?.trim();
    Some(
        value
            .parse::<f64>()
            .map_err(|_| Error::invalid(format!("bad sample_rate metadata `{value}`"))),
    )
}

/// Parses channel CSV text. Rows and columns in errors are 1-based file
/// positions (comment and header lines count as rows).
pub fn parse_csv(text: &str, sample_rate: Option<f64>) -> Result<ChannelSet> {
    let mut metadata_rate = None;
    for line in text.lines().filter(|l| l.trim_start().starts_with('#')) {
        if let Some(rate) = sample_rate_from_metadata(line) {
            metadata_rate = Some(rate?);
        }
    }
    let rate = sample_rate
        .or(metadata_rate)
        .ok_or_else(|| Error::invalid("no sample rate given and no `# sample_rate=` line"))?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header_err = |e: csv::Error| Error::Parse {
        row: e.position().map_or(1, |p| p.line() as usize),
        column: 1,
        message: e.to_string(),
    };
    let header = reader.headers().map_err(header_err)?;
    let header_row = header.position().map_or(1, |p| p.line() as usize);
    let names: Vec<String> = header.iter().map(str::to_owned).collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(Error::Parse {
            row: 1,
            column: 1,
            message: "missing header row".into(),
        });
    }
    let mut seen = HashSet::new();
    for (c, name) in names.iter().enumerate() {
        if !seen.insert(name.as_str()) {
            return Err(Error::Parse {
                row: header_row,
                column: c + 1,
                message: format!("duplicate channel name `{name}`"),
            });
        }
    }

    let mut data = vec![Vec::new(); names.len()];
    for record in reader.records() {
        let record = record.map_err(header_err)?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != names.len() {
            return Err(Error::Parse {
                row,
                column: record.len().min(names.len()) + 1,
                message: format!("expected {} fields, found {}", names.len(), record.len()),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            let value = cell.parse::<f64>().map_err(|_| Error::Parse {
                row,
                column: c + 1,
                message: format!("`{cell}` is not a number"),
            })?;
            data[c].push(value);
        }
    }
    ChannelSet::new(names, rate, data)
}

pub fn load_csv(path: impl AsRef<Path>, sample_rate: Option<f64>) -> Result<ChannelSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, sample_rate)
}

/// Keeps samples `0, factor, 2·factor, …`.
pub fn downsample(series: &[f64], factor: usize) -> Result<Vec<f64>> {
    if factor == 0 {
        return Err(Error::invalid("downsample factor must be at least 1"));
    }
    Ok(series.iter().step_by(factor).copied().collect())
}

/// Values averaged over contiguous segments of a longer series.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedSeries {
    pub values: Vec<f64>,
}

impl ReducedSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Contiguous span boundaries; the first `len % n` spans are one longer.
pub fn segment_bounds(len: usize, n_segments: usize) -> Vec<(usize, usize)> {
    let (base, extra) = (len / n_segments, len % n_segments);
    let mut start = 0;
    (0..n_segments)
        .map(|j| {
            let end = start + base + usize::from(j < extra);
            let span = (start, end);
            start = end;
            span
        })
        .collect()
}

fn check_segments(len: usize, n_segments: usize) -> Result<()> {
    if n_segments == 0 {
        return Err(Error::invalid("need at least one segment"));
    }
    if len < n_segments {
        return Err(Error::TooShort {
            len,
            needed: n_segments,
        });
    }
    Ok(())
}

pub fn segment_average(series: &[f64], n_segments: usize) -> Result<ReducedSeries> {
    check_segments(series.len(), n_segments)?;
    let values = segment_bounds(series.len(), n_segments)
        .into_iter()
        .map(|(a, b)| series[a..b].iter().sum::<f64>() / (b - a) as f64)
        .collect();
    Ok(ReducedSeries { values })
}

/// Like [`segment_average`] but skips gaps; a segment made only of gaps
/// is an error.
pub fn segment_average_gapped(series: &[Option<f64>], n_segments: usize) -> Result<ReducedSeries> {
    check_segments(series.len(), n_segments)?;
    segment_bounds(series.len(), n_segments)
        .into_iter()
        .enumerate()
        .map(|(j, (a, b))| {
            let (sum, count) = series[a..b]
                .iter()
                .flatten()
                .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            if count == 0 {
                Err(Error::invalid(format!("segment {} holds only gaps", j + 1)))
            } else {
                Ok(sum / count as f64)
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(|values| ReducedSeries { values })
}

/// Coupling table, `rows[k][n]` = J_n at step k.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingTable {
    pub rows: Vec<Vec<f64>>,
    /// Channels whose baseline maximum was zero and were left unscaled.
    pub flagged: Vec<usize>,
}

/// Scales each channel by the largest |value| within its first
/// `baseline_segments` entries, so the baseline lies in [−1, 1].
pub fn renormalize_couplings(
    reduced: &[ReducedSeries],
    baseline_segments: usize,
) -> Result<CouplingTable> {
    let k = reduced
        .first()
        .map(ReducedSeries::len)
        .ok_or_else(|| Error::invalid("no coupling channels"))?;
    if let Some(bad) = reduced.iter().find(|r| r.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: bad.len(),
        });
    }
    if baseline_segments == 0 || baseline_segments > k {
        return Err(Error::invalid(format!(
            "baseline span {baseline_segments} must lie in 1..={k}"
        )));
    }
    let mut flagged = Vec::new();
    let scaled: Vec<Vec<f64>> = reduced
        .iter()
        .enumerate()
        .map(|(n, r)| {
            let scale = r.values[..baseline_segments]
                .iter()
                .fold(0.0_f64, |m, v| m.max(v.abs()));
            if scale == 0.0 {
                flagged.push(n);
                r.values.clone()
            } else {
                r.values.iter().map(|v| v / scale).collect()
            }
        })
        .collect();
    let rows = (0..k)
        .map(|step| scaled.iter().map(|channel| channel[step]).collect())
        .collect();
    Ok(CouplingTable { rows, flagged })
}

/// Divides by the value at `transition_step` (0-based), which becomes exactly 1.
pub fn renormalize_field(moment: &ReducedSeries, transition_step: usize) -> Result<Vec<f64>> {
    let pivot = *moment.values.get(transition_step).ok_or_else(|| {
        Error::invalid(format!(
            "transition step {} outside {} segments",
            transition_step + 1,
            moment.len()
        ))
    })?;
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::invalid(format!(
            "field value at transition step {} is {pivot}",
            transition_step + 1
        )));
    }
    Ok(moment.values.iter().map(|v| v / pivot).collect())
}

/// Electrode labels of the default synthetic montage.
pub fn default_channel_names() -> Vec<String> {
    ["TT", "AST", "MST", "PST"]
        .iter()
        .flat_map(|group| (1..=4).map(move |i| format!("{group}{i}")))
        .collect()
}

/// Parameters of the synthetic seizure recording.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub names: Vec<String>,
    pub duration: f64,
    pub sample_rate: f64,
    pub onset: f64,
    pub offset: f64,
    /// Delay between consecutive channels' seizure onsets, seconds.
    pub stagger: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            names: default_channel_names(),
            duration: 300.0,
            sample_rate: 1000.0,
            onset: 105.90,
            offset: 204.74,
            stagger: 0.5,
            seed: 2,
        }
    }
}

// Background AR(1) noise and ictal rhythm shape.
const AR_COEFF: f64 = 0.3;
const BACKGROUND_UV: f64 = 10.0;
const DC_SPREAD_UV: f64 = 5.0;
const ICTAL_PEAK_UV: f64 = 300.0;
const ICTAL_RAMP_S: f64 = 5.0;
const ICTAL_START_HZ: f64 = 12.0;
const ICTAL_END_HZ: f64 = 4.0;
/// Fraction of each ictal cycle spent rising; the rest is a sharp return.
const ICTAL_RISE: f64 = 0.85;
const POSTICTAL_WAVE_UV: f64 = 30.0;
const POSTICTAL_WAVE_HZ: f64 = 1.5;
const POSTICTAL_NOISE_UV: f64 = 20.0;
/// Samples are rounded to 1/100 µV, like an ADC would.
const STEPS_PER_UV: f64 = 100.0;

/// Deterministic seizure-like recording: AR(1) background, asymmetric
/// ictal rhythm slowing from 12 to 4 Hz with staggered channel onsets,
/// and a slow-wave, higher-variance tail after the offset.
pub fn synth_seizure(cfg: &SynthConfig) -> Result<ChannelSet> {
    let n_channels = cfg.names.len();
    if n_channels == 0 {
        return Err(Error::invalid("need at least one channel"));
    }
    if !(cfg.sample_rate > 0.0) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    if !(0.0 <= cfg.onset && cfg.onset < cfg.offset && cfg.offset < cfg.duration) {
        return Err(Error::invalid(format!(
            "need 0 <= onset < offset < duration, got {} / {} / {}",
            cfg.onset, cfg.offset, cfg.duration
        )));
    }
    let last_onset = cfg.onset + cfg.stagger * (n_channels - 1) as f64;
    if cfg.stagger < 0.0 || last_onset >= cfg.offset {
        return Err(Error::invalid(format!(
            "staggered onset of the last channel ({last_onset} s) must precede the offset"
        )));
    }

    let n_samples = (cfg.duration * cfg.sample_rate).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let innovation = Normal::new(0.0, BACKGROUND_UV).expect("finite sigma");
    let postictal = Normal::new(0.0, POSTICTAL_NOISE_UV).expect("finite sigma");

    let data = (0..n_channels)
        .map(|c| {
            let dc = rng.random_range(-DC_SPREAD_UV..DC_SPREAD_UV);
            let wave_phase = rng.random_range(0.0..std::f64::consts::TAU);
            let onset = cfg.onset + cfg.stagger * c as f64;
            let mut ar = 0.0;
            let mut cycles = 0.0_f64;
            (0..n_samples)
                .map(|i| {
                    let t = i as f64 / cfg.sample_rate;
                    ar = AR_COEFF * ar + innovation.sample(&mut rng);
                    let mut x = dc + ar;
                    if t >= onset && t < cfg.offset {
                        let progress = (t - onset) / (cfg.offset - onset);
                        let freq = ICTAL_START_HZ + (ICTAL_END_HZ - ICTAL_START_HZ) * progress;
                        cycles += freq / cfg.sample_rate;
                        let u = cycles.fract();
                        let shape = if u < ICTAL_RISE {
                            2.0 * u / ICTAL_RISE - 1.0
                        } else {
                            1.0 - 2.0 * (u - ICTAL_RISE) / (1.0 - ICTAL_RISE)
                        };
                        let envelope = ((t - onset) / ICTAL_RAMP_S).min(1.0) * ICTAL_PEAK_UV;
                        x += envelope * shape;
                    } else if t >= cfg.offset {
                        x += POSTICTAL_WAVE_UV
                            * (std::f64::consts::TAU * POSTICTAL_WAVE_HZ * t + wave_phase).sin()
                            + postictal.sample(&mut rng);
                    }
                    (x * STEPS_PER_UV).round() / STEPS_PER_UV
                })
                .collect()
        })
        .collect();
    ChannelSet::new(cfg.names.clone(), cfg.sample_rate, data)
}
