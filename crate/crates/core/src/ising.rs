//! Trotterized evolution of a periodic, time-dependent transverse-field
//! Ising chain
//!
//! ```text
//! H(k) = Σ_n J_n(k) σᶻ_n σᶻ_{n+1 mod N} + h_x(k) Σ_n σˣ_n
//! ```
//!
//! One trotter step of length `dt` is `exp(−i·H_zz·dt) · exp(−i·H_x·dt)`,
//! laid out as in the circuit below (for 16 spins): RZZ blocks on the
//! even pairs, RZZ blocks on the odd pairs including the wrap-around pair
//! (15, 0), then an RX column.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::statevector::{Gate, Statevector, MAX_QUBITS};

/// Largest chain accepted by [`exact_evolve_small`].
pub const MAX_EXACT_SPINS: usize = 6;

/// Couplings and field for a single trotter step.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingStep {
    /// `couplings[n]` couples spin `n` to spin `(n + 1) % n_spins`.
    pub couplings: Vec<f64>,
    pub field: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsingSchedule {
    n_spins: usize,
    steps: Vec<IsingStep>,
    dt: f64,
}

impl IsingSchedule {
    pub fn new(n_spins: usize, steps: Vec<IsingStep>, dt: f64) -> Result<Self> {
        if n_spins == 0 || n_spins > MAX_QUBITS {
            return Err(Error::Capacity {
                n_qubits: n_spins,
                max: MAX_QUBITS,
            });
        }
        if steps.is_empty() {
            return Err(Error::invalid("schedule needs at least one step"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        for step in &steps {
            if step.couplings.len() != n_spins {
                return Err(Error::DimensionMismatch {
                    expected: n_spins,
                    found: step.couplings.len(),
                });
            }
            if !step.field.is_finite() || step.couplings.iter().any(|j| !j.is_finite()) {
                return Err(Error::invalid("schedule contains non-finite values"));
            }
        }
        Ok(Self { n_spins, steps, dt })
    }

    /// The same `(J, h_x)` repeated `k` times.
    pub fn constant(couplings: Vec<f64>, field: f64, k: usize, dt: f64) -> Result<Self> {
        let n_spins = couplings.len();
        Self::new(n_spins, vec![IsingStep { couplings, field }; k], dt)
    }

    /// Builds a schedule from a `k × n_spins` coupling table and `k` fields.
    pub fn from_tables(couplings: &[Vec<f64>], fields: &[f64], dt: f64) -> Result<Self> {
        if couplings.len() != fields.len() {
            return Err(Error::DimensionMismatch {
                expected: couplings.len(),
                found: fields.len(),
            });
        }
        let n_spins = couplings.first().map_or(0, Vec::len);
        let steps = couplings
            .iter()
            .zip(fields)
            .map(|(j, &h)| IsingStep {
                couplings: j.clone(),
                field: h,
            })
            .collect();
        Self::new(n_spins, steps, dt)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn steps(&self) -> &[IsingStep] {
        &self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// CSV with header `step,h_x,J0,…,J{n-1}`, steps numbered from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,h_x");
        for n in 0..self.n_spins {
            out.push_str(&format!(",J{n}"));
        }
        out.push('\n');
        for (k, step) in self.steps.iter().enumerate() {
            out.push_str(&format!("{},{}", k + 1, step.field));
            for j in &step.couplings {
                out.push_str(&format!(",{j}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Coupled pairs in circuit order: even `n` first, then odd `n`.
fn coupling_order(n_spins: usize) -> impl Iterator<Item = usize> {
    (0..n_spins).step_by(2).chain((1..n_spins).step_by(2))
}

/// Gate sequence of one trotter step. Every RZZ block is expanded into
/// CNOT(n → n+1), RZ(2·J_n·dt) on spin n+1, CNOT(n → n+1).
pub fn build_trotter_step(couplings: &[f64], field: f64, dt: f64) -> Result<Vec<Gate>> {
    let n_spins = couplings.len();
    if n_spins == 0 {
        return Err(Error::invalid("empty coupling vector"));
    }
    let mut gates = Vec::with_capacity(4 * n_spins);
    // A single spin couples only to itself: σᶻσᶻ = I, a global phase.
    if n_spins > 1 {
        for n in coupling_order(n_spins) {
            let (control, target) = (n, (n + 1) % n_spins);
            gates.push(Gate::Cnot { control, target });
            gates.push(Gate::Rz {
                qubit: target,
                theta: 2.0 * couplings[n] * dt,
            });
            gates.push(Gate::Cnot { control, target });
        }
    }
    gates.extend((0..n_spins).map(|qubit| Gate::Rx {
        qubit,
        theta: 2.0 * field * dt,
    }));
    Ok(gates)
}

/// Per-qubit `P(|1⟩)` recorded before the first step and after every step.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionTrace {
    /// `rows[0]` is the initial state; `rows[k]` follows step `k`.
    pub rows: Vec<Vec<f64>>,
}

impl EvolutionTrace {
    pub fn initial(&self) -> &[f64] {
        &self.rows[0]
    }

    pub fn n_steps(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn n_spins(&self) -> usize {
        self.rows[0].len()
    }

    /// Marginals after step `k` (1-based); `k = 0` is the initial row.
    pub fn after_step(&self, k: usize) -> &[f64] {
        &self.rows[k]
    }

    /// Mean marginal over all qubits, one value per row.
    pub fn mean_marginals(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().sum::<f64>() / r.len() as f64)
            .collect()
    }

    /// Largest absolute difference between matching entries.
    pub fn max_abs_deviation(&self, other: &EvolutionTrace) -> f64 {
        self.rows
            .iter()
            .flatten()
            .zip(other.rows.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header `step,q0,…,q{n-1}` and one row per step including 0.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step");
        for q in 0..self.n_spins() {
            out.push_str(&format!(",q{q}"));
        }
        out.push('\n');
        for (k, row) in self.rows.iter().enumerate() {
            out.push_str(&k.to_string());
            for p in row {
                out.push_str(&format!(",{p}"));
            }
            out.push('\n');
        }
        out
    }
}

fn check_dimension(schedule: &IsingSchedule, state: &Statevector) -> Result<()> {
    if state.n_qubits() != schedule.n_spins() {
        return Err(Error::DimensionMismatch {
            expected: 1 << schedule.n_spins(),
            found: state.dim(),
        });
    }
    Ok(())
}

/// Runs the trotter circuit in place on `state`.
pub fn evolve_in_place(
    schedule: &IsingSchedule,
    state: &mut Statevector,
) -> Result<EvolutionTrace> {
    check_dimension(schedule, state)?;
    let mut rows = Vec::with_capacity(schedule.steps().len() + 1);
    rows.push(state.marginal_one_probabilities());
    for step in schedule.steps() {
        let gates = build_trotter_step(&step.couplings, step.field, schedule.dt())?;
        state.apply_all(&gates)?;
        rows.push(state.marginal_one_probabilities());
    }
    Ok(EvolutionTrace { rows })
}

pub fn evolve(schedule: &IsingSchedule, initial: &Statevector) -> Result<EvolutionTrace> {
    let mut state = initial.clone();
    evolve_in_place(schedule, &mut state)
}

/// Dense real-symmetric Hamiltonian of one step in the computational basis.
pub fn dense_hamiltonian(couplings: &[f64], field: f64) -> DMatrix<f64> {
    let n = couplings.len();
    let dim = 1usize << n;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        let spin = |q: usize| if (i >> q) & 1 == 0 { 1.0 } else { -1.0 };
        h[(i, i)] = (0..n)
            .map(|q| couplings[q] * spin(q) * spin((q + 1) % n))
            .sum();
        for q in 0..n {
            h[(i ^ (1 << q), i)] += field;
        }
    }
    h
}

/// Evolution under the exact propagator `exp(−i·H(k)·dt)` of every step,
/// computed from the eigendecomposition of the dense Hamiltonian.
pub fn exact_evolve_small(
    schedule: &IsingSchedule,
    initial: &Statevector,
) -> Result<EvolutionTrace> {
    if schedule.n_spins() > MAX_EXACT_SPINS {
        return Err(Error::Capacity {
            n_qubits: schedule.n_spins(),
            max: MAX_EXACT_SPINS,
        });
    }
    check_dimension(schedule, initial)?;
    let mut psi = DVector::<Complex64>::from_column_slice(initial.amplitudes());
    let mut rows = vec![initial.marginal_one_probabilities()];
    for step in schedule.steps() {
        let eig = dense_hamiltonian(&step.couplings, step.field).symmetric_eigen();
        let basis = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
        let mut coeffs = basis.adjoint() * &psi;
        for (c, &lambda) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
            *c *= Complex64::from_polar(1.0, -lambda * schedule.dt());
        }
        psi = basis * coeffs;
        let state = Statevector::from_amplitudes(psi.iter().copied().collect())?;
        rows.push(state.marginal_one_probabilities());
    }
    Ok(EvolutionTrace { rows })
}
