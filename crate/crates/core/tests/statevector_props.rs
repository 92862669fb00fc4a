use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soniq_core::statevector::{DiagonalObservable, Gate, Statevector};

fn random_state(n: usize, rng: &mut impl Rng) -> Statevector {
    let amps = (0..1usize << n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    Statevector::from_amplitudes(amps).unwrap()
}

fn random_gate(n: usize, rng: &mut impl Rng) -> Gate {
    let q = rng.random_range(0..n);
    let mut other = rng.random_range(0..n - 1);
    if other >= q {
        other += 1;
    }
    let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    match rng.random_range(0..4) {
        0 => Gate::Rx { qubit: q, theta },
        1 => Gate::Rz { qubit: q, theta },
        2 => Gate::Cnot {
            control: q,
            target: other,
        },
        _ => Gate::Rzz {
            a: q,
            b: other,
            theta,
        },
    }
}

#[test]
fn norm_survives_ten_thousand_gates() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut psi = random_state(16, &mut rng);
    for _ in 0..10_000 {
        psi.apply(&random_gate(16, &mut rng)).unwrap();
    }
    assert!((psi.norm_sqr() - 1.0).abs() < 1e-9, "{}", psi.norm_sqr());
}

/// `exp(−iθ/2 · z_a z_b)` applied amplitude by amplitude.
fn rzz_oracle(psi: &Statevector, a: usize, b: usize, theta: f64) -> Vec<Complex64> {
    psi.amplitudes()
        .iter()
        .enumerate()
        .map(|(i, &amp)| {
            let parity = ((i >> a) ^ (i >> b)) & 1;
            let z = if parity == 0 { 1.0 } else { -1.0 };
            amp * Complex64::from_polar(1.0, -theta / 2.0 * z)
        })
        .collect()
}

#[test]
fn rzz_matches_diagonal_phases() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.random_range(2..=8);
        let psi = random_state(n, &mut rng);
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(1..n)) % n;
        let theta = rng.random_range(-7.0..7.0);
        let expected = rzz_oracle(&psi, a, b, theta);
        let mut got = psi.clone();
        got.apply_rzz(a, b, theta).unwrap();
        let err = got
            .amplitudes()
            .iter()
            .zip(&expected)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "n={n} a={a} b={b}: {err}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn diagonal_gates_keep_probabilities(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_state(n, &mut rng);
        let mut out = psi.clone();
        for _ in 0..20 {
            let q = rng.random_range(0..n);
            let theta = rng.random_range(-4.0..4.0);
            if n > 1 && rng.random_bool(0.5) {
                out.apply_rzz(q, (q + 1) % n, theta).unwrap();
            } else {
                out.apply_rz(q, theta).unwrap();
            }
        }
        for (p, r) in psi.probabilities().iter().zip(out.probabilities()) {
            prop_assert!((p - r).abs() < 1e-12);
        }
    }

    #[test]
    fn marginals_equal_projector_expectations(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_state(n, &mut rng);
        let marginals = psi.marginal_one_probabilities();
        for (q, m) in marginals.iter().enumerate() {
            let proj = DiagonalObservable::excited_projector(n, q).unwrap();
            let e = psi.expectation_diagonal(&proj).unwrap();
            prop_assert!((m - e).abs() < 1e-12);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(m));
        }
    }

    #[test]
    fn rx_composes_additively(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_state(3, &mut rng);
        let mut split = psi.clone();
        split.apply_rx(1, a).unwrap();
        split.apply_rx(1, b).unwrap();
        let mut joined = psi;
        joined.apply_rx(1, a + b).unwrap();
        for (x, y) in split.amplitudes().iter().zip(joined.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }
}
