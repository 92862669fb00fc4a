//! Dense statevector simulator.
//!
//! Qubit `n` is bit `n` of the basis-state index (little-endian). Rotation
//! gates follow `R_G(θ) = exp(−i·θ/2·G)` for `G ∈ {σˣ, σᶻ, σᶻσᶻ}`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the simulator accepts (2²⁴ amplitudes, 256 MiB).
pub const MAX_QUBITS: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Elementary gate of the simulator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    Rx {
        qubit: usize,
        theta: f64,
    },
    Rz {
        qubit: usize,
        theta: f64,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    /// `exp(−i·θ/2·σᶻσᶻ)`, executed as CNOT · RZ(θ) on `b` · CNOT.
    Rzz {
        a: usize,
        b: usize,
        theta: f64,
    },
}

/// Pure state of `n_qubits` qubits as `2^n_qubits` complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// Real-valued diagonal observable `Σ_i w_i |i⟩⟨i|`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalObservable {
    weights: Vec<f64>,
}

impl DiagonalObservable {
    pub fn new(weights: Vec<f64>) -> Self {
        Self { weights }
    }

    /// `(I − σᶻ_qubit)/2`, the projector onto `|1⟩` of one qubit.
    pub fn excited_projector(n_qubits: usize, qubit: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        if qubit >= n_qubits {
            return Err(Error::QubitOutOfRange { qubit, n_qubits });
        }
        let weights = (0..1usize << n_qubits)
            .map(|i| ((i >> qubit) & 1) as f64)
            .collect();
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

fn check_qubit_count(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Capacity {
            n_qubits,
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

impl Statevector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        let mut state = Self::zero_state(n_qubits)?;
        if index >= state.dim() {
            return Err(Error::DimensionMismatch {
                expected: state.dim(),
                found: index,
            });
        }
        state.amplitudes[0] = ZERO;
        state.amplitudes[index] = ONE;
        Ok(state)
    }

    /// Loads `values` divided by their Euclidean norm.
    pub fn from_amplitudes(values: Vec<Complex64>) -> Result<Self> {
        let len = values.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo { len });
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubit_count(n_qubits)?;
        let norm = values.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::DegenerateWindow);
        }
        let amplitudes = values.into_iter().map(|a| a / norm).collect();
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn from_real_amplitudes(values: &[f64]) -> Result<Self> {
        Self::from_amplitudes(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    fn check_pair(&self, a: usize, b: usize) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(Error::SameQubit(a));
        }
        Ok(())
    }

    pub fn apply_rx(&mut self, qubit: usize, theta: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let (s, c) = (theta / 2.0).sin_cos();
        let mis = Complex64::new(0.0, -s);
        let stride = 1usize << qubit;
        for block in self.amplitudes.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = x0 * c + x1 * mis;
                *a1 = x0 * mis + x1 * c;
            }
        }
        Ok(())
    }

    pub fn apply_rz(&mut self, qubit: usize, theta: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let phase_one = Complex64::from_polar(1.0, theta / 2.0);
        let phase_zero = phase_one.conj();
        let stride = 1usize << qubit;
        for block in self.amplitudes.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            lo.iter_mut().for_each(|a| *a *= phase_zero);
            hi.iter_mut().for_each(|a| *a *= phase_one);
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_pair(control, target)?;
        let (cmask, tmask) = (1usize << control, 1usize << target);
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
        Ok(())
    }

    /// `exp(−i·θ/2·σᶻ_a σᶻ_b)` as the CNOT–RZ–CNOT sandwich.
    pub fn apply_rzz(&mut self, a: usize, b: usize, theta: f64) -> Result<()> {
        self.check_pair(a, b)?;
        self.apply_cnot(a, b)?;
        self.apply_rz(b, theta)?;
        self.apply_cnot(a, b)
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        match *gate {
            Gate::Rx { qubit, theta } => self.apply_rx(qubit, theta),
            Gate::Rz { qubit, theta } => self.apply_rz(qubit, theta),
            Gate::Cnot { control, target } => self.apply_cnot(control, target),
            Gate::Rzz { a, b, theta } => self.apply_rzz(a, b, theta),
        }
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.apply(g))
    }

    /// `Σ_i w_i |a_i|²`.
    pub fn expectation_diagonal(&self, obs: &DiagonalObservable) -> Result<f64> {
        if obs.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: obs.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(obs.weights())
            .map(|(a, w)| w * a.norm_sqr())
            .sum())
    }

    /// Probability of reading `|1⟩` on each qubit, i.e. `⟨(I − σᶻ_n)/2⟩`.
    pub fn marginal_one_probabilities(&self) -> Vec<f64> {
        let mut marginals = vec![0.0; self.n_qubits];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            let mut bits = i;
            while bits != 0 {
                let q = bits.trailing_zeros() as usize;
                marginals[q] += p;
                bits &= bits - 1;
            }
        }
        marginals
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn zero_state_layout() {
        let s = Statevector::zero_state(1).unwrap();
        assert_eq!(s.amplitudes(), &[ONE, ZERO]);
        let s = Statevector::zero_state(2).unwrap();
        assert_eq!(s.amplitudes(), &[ONE, ZERO, ZERO, ZERO]);
        let s = Statevector::zero_state(16).unwrap();
        assert_eq!(s.dim(), 65536);
        assert_eq!(s.amplitudes()[0], ONE);
        assert!(s.amplitudes()[1..].iter().all(|a| *a == ZERO));
    }

    #[test]
    fn zero_state_rejects_bad_sizes() {
        assert!(matches!(
            Statevector::zero_state(0),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(
            Statevector::zero_state(25),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn from_amplitudes_normalizes() {
        let s = Statevector::from_real_amplitudes(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.amplitudes()[0], ONE);
        let s = Statevector::from_real_amplitudes(&[1.0; 4]).unwrap();
        assert!(s
            .amplitudes()
            .iter()
            .all(|a| *a == Complex64::new(0.5, 0.0)));
        let s = Statevector::from_real_amplitudes(&[3.0, 4.0]).unwrap();
        assert!(close(s.amplitudes()[0], Complex64::new(0.6, 0.0), 1e-15));
        assert!(close(s.amplitudes()[1], Complex64::new(0.8, 0.0), 1e-15));
        assert_eq!(s.n_qubits(), 1);
    }

    #[test]
    fn from_amplitudes_errors() {
        assert!(matches!(
            Statevector::from_real_amplitudes(&[1.0, 2.0, 3.0]),
            Err(Error::NotPowerOfTwo { len: 3 })
        ));
        assert!(matches!(
            Statevector::from_real_amplitudes(&[0.0; 8]),
            Err(Error::DegenerateWindow)
        ));
    }

    #[test]
    fn rx_cases() {
        let mut s = Statevector::zero_state(3).unwrap();
        s.apply_rz(1, 0.3).unwrap();
        s.apply_rx(0, 0.7).unwrap();
        let before = s.clone();
        s.apply_rx(2, 0.0).unwrap();
        assert_eq!(s, before);

        let mut s = Statevector::zero_state(1).unwrap();
        s.apply_rx(0, PI).unwrap();
        assert!(close(s.amplitudes()[1], Complex64::new(0.0, -1.0), 1e-15));
        assert!(s.amplitudes()[0].norm() < 1e-15);

        let mut s = Statevector::zero_state(1).unwrap();
        s.apply_rx(0, FRAC_PI_2).unwrap();
        assert!((s.marginal_one_probabilities()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rz_cases() {
        let theta = 1.234;
        let mut s = Statevector::zero_state(1).unwrap();
        s.apply_rz(0, theta).unwrap();
        assert!(close(
            s.amplitudes()[0],
            Complex64::from_polar(1.0, -theta / 2.0),
            1e-15
        ));
        assert!((s.probabilities()[0] - 1.0).abs() < 1e-15);

        let mut s = Statevector::from_real_amplitudes(&[1.0, 1.0]).unwrap();
        s.apply_rz(0, PI).unwrap();
        let expected = [
            Complex64::new(0.0, -FRAC_1_SQRT_2),
            Complex64::new(0.0, FRAC_1_SQRT_2),
        ];
        assert!(close(s.amplitudes()[0], expected[0], 1e-15));
        assert!(close(s.amplitudes()[1], expected[1], 1e-15));

        let before = s.clone();
        s.apply_rz(0, 0.0).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn cnot_truth_table() {
        // |10⟩ written qubit-0-first: qubit 0 set → index 1.
        let mut s = Statevector::basis_state(2, 0b01).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s.amplitudes()[0b11], ONE);

        let mut s = Statevector::zero_state(2).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s.amplitudes()[0], ONE);

        let mut s = Statevector::from_real_amplitudes(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        s.apply_rx(1, 0.4).unwrap();
        let before = s.clone();
        s.apply_cnot(1, 0).unwrap();
        s.apply_cnot(1, 0).unwrap();
        let dev = s
            .amplitudes()
            .iter()
            .zip(before.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-12);

        assert!(matches!(s.apply_cnot(1, 1), Err(Error::SameQubit(1))));
        assert!(matches!(
            s.apply_cnot(0, 2),
            Err(Error::QubitOutOfRange { qubit: 2, .. })
        ));
    }

    #[test]
    fn rzz_eigenphases() {
        let theta = 0.9;
        let mut s = Statevector::zero_state(2).unwrap();
        s.apply_rzz(0, 1, theta).unwrap();
        assert!(close(
            s.amplitudes()[0],
            Complex64::from_polar(1.0, -theta / 2.0),
            1e-15
        ));
        // |01⟩: qubit 1 set.
        let mut s = Statevector::basis_state(2, 0b10).unwrap();
        s.apply_rzz(0, 1, theta).unwrap();
        assert!(close(
            s.amplitudes()[0b10],
            Complex64::from_polar(1.0, theta / 2.0),
            1e-15
        ));
        assert!(matches!(s.apply_rzz(0, 0, 1.0), Err(Error::SameQubit(0))));
    }

    #[test]
    fn expectation_diagonal_cases() {
        let obs = DiagonalObservable::new(vec![0.0, 1.0, 2.0, 3.0]);
        let s = Statevector::basis_state(2, 3).unwrap();
        assert_eq!(s.expectation_diagonal(&obs).unwrap(), 3.0);
        let s = Statevector::from_real_amplitudes(&[1.0; 4]).unwrap();
        assert!((s.expectation_diagonal(&obs).unwrap() - 1.5).abs() < 1e-15);
        let null = DiagonalObservable::new(vec![0.0; 4]);
        assert_eq!(s.expectation_diagonal(&null).unwrap(), 0.0);
        let wrong = DiagonalObservable::new(vec![0.0; 8]);
        assert!(matches!(
            s.expectation_diagonal(&wrong),
            Err(Error::DimensionMismatch {
                expected: 4,
                found: 8
            })
        ));
    }

    #[test]
    fn marginal_cases() {
        let s = Statevector::zero_state(16).unwrap();
        assert!(s.marginal_one_probabilities().iter().all(|&p| p == 0.0));
        let s = Statevector::basis_state(16, 0xFFFF).unwrap();
        assert!(s.marginal_one_probabilities().iter().all(|&p| p == 1.0));
        let s = Statevector::from_real_amplitudes(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        let m = s.marginal_one_probabilities();
        assert!((m[0] - 0.5).abs() < 1e-15 && (m[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn excited_projector_matches_bit_layout() {
        let obs = DiagonalObservable::excited_projector(2, 1).unwrap();
        assert_eq!(obs.weights(), &[0.0, 0.0, 1.0, 1.0]);
        assert!(DiagonalObservable::excited_projector(2, 2).is_err());
    }
}
