//! Run configuration: defaults, flat `key = value` files and flag overrides.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use soniq_core::pipeline::{default_channel_names, SynthConfig};
use soniq_core::qpam::{ShiftMode, WindowSpec};
use soniq_core::sonify::{PitchScale, SonifyConfig};

use crate::error::CliError;

/// An optional value spelled `auto` when absent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Auto<T>(pub Option<T>);

impl<T> Default for Auto<T> {
    fn default() -> Self {
        Auto(None)
    }
}

impl<T: FromStr> FromStr for Auto<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Auto(None));
        }
        s.parse()
            .map(|v| Auto(Some(v)))
            .map_err(|_| format!("expected a value or `auto`, got `{s}`"))
    }
}

impl<T: fmt::Display> fmt::Display for Auto<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Some(v) => v.fmt(f),
            None => f.write_str("auto"),
        }
    }
}

/// Comma-separated channel names; `all` selects every channel in file order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChannelList(pub Vec<String>);

impl FromStr for ChannelList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(ChannelList(Vec::new()));
        }
        let names: Vec<String> = s.split(',').map(|n| n.trim().to_owned()).collect();
        if names.iter().any(String::is_empty) {
            return Err(format!("empty channel name in `{s}`"));
        }
        Ok(ChannelList(names))
    }
}

impl fmt::Display for ChannelList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("all")
        } else {
            f.write_str(&self.0.join(","))
        }
    }
}

macro_rules! run_config {
    ($( $(#[doc = $doc:literal])* $field:ident : $ty:ty = $default:expr ),* $(,)?) => {
        /// Effective configuration of a run.
        #[derive(Clone, Debug, PartialEq)]
        pub struct RunConfig {
            $( $(#[doc = $doc])* pub $field: $ty, )*
        }

        impl Default for RunConfig {
            fn default() -> Self {
                Self { $( $field: $default, )* }
            }
        }

        impl RunConfig {
            /// Every key in declaration order.
            pub const KEYS: &'static [&'static str] = &[$( stringify!($field) ),*];

            pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
                match key {
                    $( stringify!($field) => {
                        self.$field = value
                            .parse::<$ty>()
                            .map_err(|e| format!("bad value `{value}` for `{key}`: {e}"))?;
                    } )*
                    other => return Err(format!("unknown configuration key `{other}`")),
                }
                Ok(())
            }

            pub fn entries(&self) -> Vec<(&'static str, String)> {
                vec![$( (stringify!($field), self.$field.to_string()) ),*]
            }
        }

        /// Per-key command-line overrides.
        #[derive(clap::Args, Clone, Debug, Default)]
        pub struct Overrides {
            $(
                $(#[doc = $doc])*
                #[arg(long = stringify!($field), value_name = "VALUE",
                      help_heading = "Configuration")]
                pub $field: Option<String>,
            )*
        }

        impl Overrides {
            pub fn apply(&self, cfg: &mut RunConfig) -> Result<(), String> {
                $( if let Some(v) = &self.$field { cfg.set(stringify!($field), v)?; } )*
                Ok(())
            }
        }
    };
}

run_config! {
    /// Directory receiving every artifact.
    out_dir: String = "soniq-out".to_owned(),
    /// Input sample rate in Hz; `auto` reads the `# sample_rate=` line.
    sample_rate: Auto<f64> = Auto(None),
    /// Keep one input sample in this many for sonification and couplings.
    downsample: usize = 500,
    /// Channel analysed with rolling moments and driving the transverse field.
    channel: String = "MST4".to_owned(),
    /// Channels mapped to coupling J_n, in spin order.
    couplings: ChannelList = ChannelList::default(),
    /// Spins in the Ising chain; must equal the number of coupling channels.
    spins: usize = 16,
    /// Samples per moment window (power of two).
    window: usize = 16,
    /// Stride between moment windows.
    hop: usize = 10,
    /// Moment order p.
    order: u32 = 4,
    /// `min-shift` or `none`.
    shift: ShiftMode = ShiftMode::MinShift,
    /// Segments the series are averaged into.
    segments: usize = 9,
    /// Leading segments used as the coupling baseline.
    baseline_segments: usize = 3,
    /// Step (1-based) at which the transverse field equals 1.
    transition_step: usize = 4,
    /// Trotter step length t/k.
    dt: f64 = 0.5,
    /// Number of trotter steps; must equal `segments`.
    k: usize = 9,
    /// Constant transverse field replacing the data-driven one.
    hx: Auto<f64> = Auto(None),
    /// Seconds per note.
    note_duration: f64 = 0.1,
    /// Lowest pitch in Hz.
    f_min: f64 = 261.63,
    /// Highest pitch in Hz.
    f_max: f64 = 1244.51,
    /// Audio sample rate in Hz.
    audio_rate: u32 = 44100,
    /// Low-pass cutoff in Hz.
    lowpass_cutoff: f64 = 4000.0,
    /// Gain of each voice before mixing.
    amplitude: f64 = 0.8,
    /// Linear fade at both ends of each note, seconds.
    fade: f64 = 0.005,
    /// `linear` or `log` value-to-pitch mapping.
    pitch_scale: PitchScale = PitchScale::Linear,
    /// FM index reached when every qubit reads |1⟩.
    fm_index_max: f64 = 3.0,
    /// Modulator to carrier frequency ratio.
    fm_ratio: f64 = 1.0,
    /// Spectrogram FFT length.
    fft_size: usize = 1024,
    /// Spectrogram hop in samples.
    spectrogram_hop: usize = 1024,
    /// Moment values per sonified note; `auto` is downsample / hop.
    moment_stride: Auto<usize> = Auto(None),
    /// Seed of the synthetic generator.
    seed: u64 = SynthConfig::default().seed,
    /// Synthetic recording length, seconds.
    synth_duration: f64 = SynthConfig::default().duration,
    /// Synthetic sample rate, Hz.
    synth_rate: f64 = SynthConfig::default().sample_rate,
    /// Synthetic seizure onset, seconds.
    synth_onset: f64 = SynthConfig::default().onset,
    /// Synthetic seizure offset, seconds.
    synth_offset: f64 = SynthConfig::default().offset,
    /// Delay between synthetic channel onsets, seconds.
    synth_stagger: f64 = SynthConfig::default().stagger,
    /// Synthetic channel names.
    synth_channels: ChannelList = ChannelList(default_channel_names()),
}

impl RunConfig {
    /// Applies `key = value` lines; `#` starts a comment line.
    pub fn merge_text(&mut self, text: &str) -> Result<(), String> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| format!("line {}: {e}", n + 1))?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_owned(),
            source: e,
        })?;
        self.merge_text(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Replayable `key = value` text.
    pub fn render(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn window_spec(&self) -> Result<WindowSpec, CliError> {
        WindowSpec::new(self.window, self.hop, self.order).map_err(CliError::usage)
    }

    pub fn sonify_config(&self) -> Result<SonifyConfig, CliError> {
        let cfg = SonifyConfig {
            note_duration: self.note_duration,
            f_min: self.f_min,
            f_max: self.f_max,
            audio_rate: self.audio_rate,
            lowpass_cutoff: self.lowpass_cutoff,
            amplitude_per_voice: self.amplitude,
            fade: self.fade,
            pitch_scale: self.pitch_scale,
        };
        cfg.validate().map_err(CliError::usage)?;
        Ok(cfg)
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            names: self.synth_channels.0.clone(),
            duration: self.synth_duration,
            sample_rate: self.synth_rate,
            onset: self.synth_onset,
            offset: self.synth_offset,
            stagger: self.synth_stagger,
            seed: self.seed,
        }
    }

    pub fn moment_stride(&self) -> usize {
        self.moment_stride
            .0
            .unwrap_or_else(|| (self.downsample / self.hop.max(1)).max(1))
    }

    /// Cross-key checks for the Ising stage.
    pub fn check_ising(&self) -> Result<(), CliError> {
        if self.k != self.segments {
            return Err(CliError::Usage(format!(
                "k ({}) must equal segments ({}): one trotter step per segment",
                self.k, self.segments
            )));
        }
        if self.transition_step == 0 || self.transition_step > self.segments {
            return Err(CliError::Usage(format!(
                "transition_step {} must lie in 1..={}",
                self.transition_step, self.segments
            )));
        }
        if !(self.dt > 0.0) {
            return Err(CliError::Usage("dt must be positive".into()));
        }
        Ok(())
    }
}
