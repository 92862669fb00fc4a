//! Rolling statistical moments of a signal through amplitude encoding.
//!
//! Each window `a_n … a_{n+L−1}` is loaded as the state `Σ_i a_{n+i}|i⟩`
//! (after normalization) and the diagonal observable `Σ_i i^p |i⟩⟨i|` is
//! measured on it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::statevector::{DiagonalObservable, Statevector};

/// How raw samples are made into amplitudes before normalization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ShiftMode {
    /// Normalize the raw samples.
    None,
    /// Subtract the window minimum so every amplitude is non-negative.
    #[default]
    MinShift,
}

impl std::str::FromStr for ShiftMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ShiftMode::None),
            "min-shift" | "min" => Ok(ShiftMode::MinShift),
            other => Err(Error::invalid(format!("unknown shift mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for ShiftMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ShiftMode::None => "none",
            ShiftMode::MinShift => "min-shift",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowSpec {
    pub window_len: usize,
    pub hop: usize,
    pub moment_order: u32,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            window_len: 16,
            hop: 10,
            moment_order: 4,
        }
    }
}

impl WindowSpec {
    pub fn new(window_len: usize, hop: usize, moment_order: u32) -> Result<Self> {
        let spec = Self {
            window_len,
            hop,
            moment_order,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_len < 2 || !self.window_len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo {
                len: self.window_len,
            });
        }
        if self.hop == 0 {
            return Err(Error::invalid("hop must be at least 1"));
        }
        if self.moment_order == 0 {
            return Err(Error::invalid("moment order must be at least 1"));
        }
        Ok(())
    }

    /// Number of windows that fit in a signal of `len` samples.
    pub fn window_count(&self, len: usize) -> usize {
        if len < self.window_len {
            0
        } else {
            (len - self.window_len) / self.hop + 1
        }
    }

    /// Largest value any moment can take, `(L − 1)^p`.
    pub fn max_value(&self) -> f64 {
        ((self.window_len - 1) as f64).powi(self.moment_order as i32)
    }
}

/// Rolling moment values indexed by window start. A `None` value marks a
/// degenerate (flat) window for which no moment exists.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSeries {
    pub starts: Vec<usize>,
    pub values: Vec<Option<f64>>,
}

impl MomentSeries {
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn gap_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// CSV with header `start_index,value`; gaps are written as `NaN`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("start_index,value\n");
        for (start, value) in self.starts.iter().zip(&self.values) {
            match value {
                Some(v) => out.push_str(&format!("{start},{v}\n")),
                None => out.push_str(&format!("{start},NaN\n")),
            }
        }
        out
    }
}

fn shifted(window: &[f64], shift_mode: ShiftMode) -> Vec<f64> {
    match shift_mode {
        ShiftMode::None => window.to_vec(),
        ShiftMode::MinShift => {
            let min = window.iter().copied().fold(f64::INFINITY, f64::min);
            window.iter().map(|x| x - min).collect()
        }
    }
}

fn check_window(window: &[f64]) -> Result<()> {
    if window.len() < 2 || !window.len().is_power_of_two() {
        return Err(Error::NotPowerOfTwo { len: window.len() });
    }
    if window.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("window contains non-finite samples"));
    }
    Ok(())
}

/// Loads a window into the probability amplitudes of a `log2(len)`-qubit state.
pub fn qpam_encode(window: &[f64], shift_mode: ShiftMode) -> Result<Statevector> {
    check_window(window)?;
    Statevector::from_real_amplitudes(&shifted(window, shift_mode))
}

/// `Σ_i i^order |i⟩⟨i|` over `dim` basis states.
pub fn moment_observable(order: u32, dim: usize) -> DiagonalObservable {
    DiagonalObservable::new((0..dim).map(|i| (i as f64).powi(order as i32)).collect())
}

/// `Σ i^p w_i² / Σ w_j²` evaluated directly on the samples.
pub fn classical_moment_oracle(window: &[f64], order: u32, shift_mode: ShiftMode) -> Result<f64> {
    check_window(window)?;
    let w = shifted(window, shift_mode);
    let energy: f64 = w.iter().map(|x| x * x).sum();
    if energy == 0.0 {
        return Err(Error::DegenerateWindow);
    }
    let weighted: f64 = w
        .iter()
        .enumerate()
        .map(|(i, x)| (i as f64).powi(order as i32) * x * x)
        .sum();
    Ok(weighted / energy)
}

/// Expectation of the moment observable on every window of `signal`.
pub fn rolling_moment(
    signal: &[f64],
    spec: &WindowSpec,
    shift_mode: ShiftMode,
) -> Result<MomentSeries> {
    spec.validate()?;
    if signal.len() < spec.window_len {
        return Err(Error::TooShort {
            len: signal.len(),
            needed: spec.window_len,
        });
    }
    let obs = moment_observable(spec.moment_order, spec.window_len);
    let starts: Vec<usize> = (0..spec.window_count(signal.len()))
        .map(|w| w * spec.hop)
        .collect();
    let values = starts
        .par_iter()
        .map(
            |&n| match qpam_encode(&signal[n..n + spec.window_len], shift_mode) {
                Ok(state) => state.expectation_diagonal(&obs).map(Some),
                Err(Error::DegenerateWindow) => Ok(None),
                Err(e) => Err(e),
            },
        )
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentSeries { starts, values })
}
