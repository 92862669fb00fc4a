//! Pipeline stages behind each subcommand.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use soniq_core::ising::{evolve, exact_evolve_small, EvolutionTrace, IsingSchedule};
use soniq_core::pipeline::{
    downsample, load_csv, renormalize_couplings, renormalize_field, segment_average,
    segment_average_gapped, synth_seizure, ChannelSet,
};
use soniq_core::qpam::{classical_moment_oracle, rolling_moment, MomentSeries};
use soniq_core::sonify::{
    channel_pitches, encode_wav, fm_index_envelope, pitch_series, render_polyphony, spectrogram,
    AudioBuffer,
};
use soniq_core::statevector::Statevector;

use crate::config::RunConfig;
use crate::error::{CliError, StageExt};

/// Collects the files written into one output directory.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self, CliError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self {
            dir,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        if !self.written.contains(&path) {
            self.written.push(path.clone());
        }
        Ok(path)
    }

    fn write_audio(
        &mut self,
        stem: &str,
        audio: &AudioBuffer,
        cfg: &RunConfig,
    ) -> Result<(), CliError> {
        self.write(&format!("{stem}.wav"), encode_wav(audio))?;
        let spec = spectrogram(audio, cfg.fft_size, cfg.spectrogram_hop)?;
        self.write(&format!("{stem}_spectrogram.csv"), spec.to_csv())?;
        self.write(&format!("{stem}_spectrogram.pgm"), spec.to_pgm())?;
        Ok(())
    }

    /// `sha256  name` for every file written so far, sorted by name.
    pub fn manifest(&self) -> Result<String, CliError> {
        let mut lines = self
            .written
            .iter()
            .map(|path| {
                let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
                let digest = Sha256::digest(&bytes);
                let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
                let name = path.file_name().unwrap_or_default().to_string_lossy();
                Ok(format!("{hex}  {name}"))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        lines.sort_by(|a, b| a[66..].cmp(&b[66..]));
        Ok(lines.join("\n") + "\n")
    }
}

pub fn load_input(path: &Path, cfg: &RunConfig) -> Result<ChannelSet, CliError> {
    Ok(load_csv(path, cfg.sample_rate.0)?)
}

fn named_channel<'a>(set: &'a ChannelSet, name: &str) -> Result<&'a [f64], CliError> {
    set.channel(name).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown channel `{name}` (available: {})",
            set.names().join(", ")
        ))
    })
}

/// Polyphonic rendering of every channel, one voice each.
pub fn sonify(
    set: &ChannelSet,
    cfg: &RunConfig,
    out: &mut Outputs,
) -> Result<AudioBuffer, CliError> {
    let scfg = cfg.sonify_config()?;
    let voices = channel_pitches(set, cfg.downsample, &scfg)?;
    let audio = render_polyphony(&voices, None, &scfg)?;
    out.write_audio("sonify", &audio, cfg)?;
    Ok(audio)
}

/// Rolling moments of the configured channel.
pub fn moments(set: &ChannelSet, cfg: &RunConfig) -> Result<MomentSeries, CliError> {
    let signal = named_channel(set, &cfg.channel)?;
    Ok(rolling_moment(signal, &cfg.window_spec()?, cfg.shift)?)
}

/// Largest relative disagreement between the statevector moments and the
/// direct formula; gaps must coincide.
pub fn verify_moments(
    set: &ChannelSet,
    cfg: &RunConfig,
    series: &MomentSeries,
) -> Result<f64, CliError> {
    let signal = named_channel(set, &cfg.channel)?;
    let spec = cfg.window_spec()?;
    let mut worst = 0.0_f64;
    for (&start, value) in series.starts.iter().zip(&series.values) {
        let window = &signal[start..start + spec.window_len];
        match (
            value,
            classical_moment_oracle(window, spec.moment_order, cfg.shift),
        ) {
            (Some(q), Ok(c)) => worst = worst.max((q - c).abs() / c.abs().max(1.0)),
            (None, Err(soniq_core::Error::DegenerateWindow)) => {}
            (q, c) => {
                return Err(CliError::Verification(format!(
                    "window {start}: quantum {q:?} vs classical {c:?}"
                )))
            }
        }
    }
    Ok(worst)
}

pub const VERIFY_TOLERANCE: f64 = 1e-9;

pub fn qpam(
    set: &ChannelSet,
    cfg: &RunConfig,
    out: &mut Outputs,
    sonify: bool,
    verify: bool,
) -> Result<MomentSeries, CliError> {
    let series = moments(set, cfg)?;
    out.write("moments.csv", series.to_csv())?;
    if verify {
        let worst = verify_moments(set, cfg, &series)?;
        if worst > VERIFY_TOLERANCE {
            return Err(CliError::Verification(format!(
                "relative deviation {worst:e} exceeds {VERIFY_TOLERANCE:e}"
            )));
        }
    }
    if sonify {
        let scfg = cfg.sonify_config()?;
        let values: Vec<f64> = series
            .values
            .iter()
            .step_by(cfg.moment_stride())
            .flatten()
            .copied()
            .collect();
        if values.is_empty() {
            return Err(CliError::Usage("every moment window is degenerate".into()));
        }
        let audio = render_polyphony(&[pitch_series(&values, &scfg)?], None, &scfg)?;
        out.write_audio("moments", &audio, cfg)?;
    }
    Ok(series)
}

/// Couplings from the segment means of the downsampled coupling channels and
/// the transverse field from the segment means of the rolling moments.
pub fn build_schedule(set: &ChannelSet, cfg: &RunConfig) -> Result<IsingSchedule, CliError> {
    cfg.check_ising()?;
    let names: Vec<String> = if cfg.couplings.0.is_empty() {
        set.names().to_vec()
    } else {
        cfg.couplings.0.clone()
    };
    if names.len() != cfg.spins {
        return Err(CliError::Usage(format!(
            "{} coupling channels for {} spins; set `spins` or `couplings` to match",
            names.len(),
            cfg.spins
        )));
    }
    let reduced = names
        .iter()
        .map(|name| {
            let kept = downsample(named_channel(set, name)?, cfg.downsample)?;
            Ok(segment_average(&kept, cfg.segments)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let table = renormalize_couplings(&reduced, cfg.baseline_segments)?;
    for &n in &table.flagged {
        eprintln!(
            "warning: channel {} has a zero baseline; left unscaled",
            names[n]
        );
    }

    let fields = match cfg.hx.0 {
        Some(h) => vec![h; cfg.segments],
        None => {
            let series = moments(set, cfg)?;
            let reduced = segment_average_gapped(&series.values, cfg.segments)?;
            renormalize_field(&reduced, cfg.transition_step - 1)?
        }
    };
    Ok(IsingSchedule::from_tables(&table.rows, &fields, cfg.dt)?)
}

fn trace_with_reference_csv(trace: &EvolutionTrace, exact: &EvolutionTrace) -> String {
    let n = trace.n_spins();
    let mut out = String::from("step");
    (0..n).for_each(|q| {
        let _ = write!(out, ",q{q}");
    });
    (0..n).for_each(|q| {
        let _ = write!(out, ",exact_q{q}");
    });
    out.push_str(",max_abs_dev\n");
    for (k, (row, reference)) in trace.rows.iter().zip(&exact.rows).enumerate() {
        let _ = write!(out, "{k}");
        row.iter().chain(reference).for_each(|p| {
            let _ = write!(out, ",{p}");
        });
        let dev = row
            .iter()
            .zip(reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let _ = writeln!(out, ",{dev}");
    }
    out
}

pub fn ising(
    set: &ChannelSet,
    cfg: &RunConfig,
    out: &mut Outputs,
    exact: bool,
) -> Result<EvolutionTrace, CliError> {
    let schedule = build_schedule(set, cfg)?;
    out.write("schedule.csv", schedule.to_csv())?;
    let initial = Statevector::zero_state(schedule.n_spins())?;
    let trace = evolve(&schedule, &initial)?;
    if exact {
        let reference = exact_evolve_small(&schedule, &initial)?;
        out.write("trace.csv", trace_with_reference_csv(&trace, &reference))?;
    } else {
        out.write("trace.csv", trace.to_csv())?;
    }
    Ok(trace)
}

/// Every stage in sequence, ending with the FM rendering whose index
/// follows the mean marginal of the Ising trace.
pub fn full(
    set: &ChannelSet,
    cfg: &RunConfig,
    out: &mut Outputs,
    no_fm: bool,
) -> Result<(), CliError> {
    sonify(set, cfg, out).stage("sonify")?;
    qpam(set, cfg, out, true, false).stage("qpam")?;
    let trace = ising(set, cfg, out, false).stage("ising")?;

    let fm_audio = (|| {
        let scfg = cfg.sonify_config()?;
        let voices = channel_pitches(set, cfg.downsample, &scfg)?;
        let audio = if no_fm {
            render_polyphony(&voices, None, &scfg)?
        } else {
            let per_step = &trace.mean_marginals()[1..];
            let n_notes = voices.first().map_or(0, Vec::len);
            let index = fm_index_envelope(per_step, n_notes, cfg.fm_index_max);
            render_polyphony(&voices, Some((&index, cfg.fm_ratio)), &scfg)?
        };
        out.write_audio("fm", &audio, cfg)
    })();
    fm_audio.stage("fm")?;

    out.write("config.txt", cfg.render())?;
    let manifest = out.manifest()?;
    out.write("manifest.txt", manifest)?;
    Ok(())
}

pub fn synth(cfg: &RunConfig, path: &Path) -> Result<ChannelSet, CliError> {
    let set = synth_seizure(&cfg.synth_config()).map_err(CliError::usage)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    set.write_csv(path)?;
    Ok(set)
}
