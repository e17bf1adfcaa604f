//! Collusion without the controller.
//!
//! If Alice and Bob exchange their BSM results directly and skip Charlie,
//! they must guess which channel pair Charlie's measurement selected. The run
//! succeeds exactly when the realized pair equals the guess, so the bypass
//! probability is the Born weight of the Charlie outcomes mapped to that pair.
//! With `l` Charlie qubits spread over distinct channels this is `2^-l`, floored
//! at `2^-2(m+n)` once every channel pair is in use.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::family_size;
use crate::protocol::{Exchange, ExchangeChoice, Routing};
use crate::qstate::{QuantumState, RegisterMap};
use crate::resource::{
    build_resource, build_security_variant, ChannelPair, Resource, ResourceSpec, MAX_VARIANT_QUBITS,
};
use crate::rng::stream_seed;

/// A sampled bypass counts as successful when both fidelities exceed `1 - SUCCESS_TOLERANCE`.
pub const SUCCESS_TOLERANCE: f64 = 1e-9;

/// The colluders' fixed guess of the channel pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BypassStrategy {
    pub guess: ChannelPair,
}

impl BypassStrategy {
    pub fn new(guess: ChannelPair) -> Self {
        Self { guess }
    }

    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.guess.forward >= family_size(m) {
            return Err(Error::IndexOutOfRange {
                index: self.guess.forward,
                digits: m,
            });
        }
        if self.guess.backward >= family_size(n) {
            return Err(Error::IndexOutOfRange {
                index: self.guess.backward,
                digits: n,
            });
        }
        Ok(())
    }
}

/// `2^{-min(l, 2(m+n))}`.
pub fn insecurity_bound(l: usize, m: usize, n: usize) -> f64 {
    let exponent = l.min(2 * (m + n));
    0.5f64.powi(exponent as i32)
}

/// Born distribution of Charlie's outcomes on the bare resource.
pub fn charlie_distribution(resource: &Resource) -> Result<Vec<f64>> {
    resource
        .state
        .outcome_probabilities(&resource.charlie_positions())
}

/// `Σ_c p(c) · [channel(c) = guess]`.
pub fn bypass_success_exact(resource: &Resource, strategy: &BypassStrategy) -> Result<f64> {
    strategy.validate(resource.m, resource.n)?;
    let p = charlie_distribution(resource)?;
    Ok(resource
        .channels
        .pairs()
        .iter()
        .zip(p)
        .filter(|(pair, _)| **pair == strategy.guess)
        .map(|(_, p)| p)
        .sum())
}

/// The guess maximizing the exact bypass probability; ties go to the
/// smallest channel pair.
pub fn best_guess(resource: &Resource) -> Result<BypassStrategy> {
    let mut candidates = resource.channels.pairs().to_vec();
    candidates.sort();
    candidates.dedup();
    let mut best: Option<(f64, BypassStrategy)> = None;
    for pair in candidates {
        let strategy = BypassStrategy::new(pair);
        let p = bypass_success_exact(resource, &strategy)?;
        if best.is_none_or(|(b, _)| p > b + 1e-12) {
            best = Some((p, strategy));
        }
    }
    best.map(|(_, s)| s)
        .ok_or_else(|| Error::Unconstructible("resource has no channels".into()))
}

/// Product of single-qubit states with Bloch vector `(1, 1, 1)/√3`.
///
/// Every non-identity Pauli string moves this state to fidelity at most 1/3,
/// so a wrong correction is never mistaken for success.
pub fn probe_state(num_qubits: usize) -> QuantumState {
    let theta = (1.0 / 3f64.sqrt()).acos();
    let single = [
        Complex64::new((theta / 2.0).cos(), 0.0),
        Complex64::from_polar((theta / 2.0).sin(), std::f64::consts::FRAC_PI_4),
    ];
    let mut amplitudes = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..num_qubits {
        amplitudes = amplitudes
            .iter()
            .flat_map(|a| single.iter().map(move |b| a * b))
            .collect();
    }
    QuantumState::normalized(amplitudes, RegisterMap::unlabeled())
        .expect("probe state is a valid product state")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: u64,
    pub successes: u64,
}

impl McEstimate {
    /// `|estimate - exact| <= sigmas · stderr`.
    pub fn consistent_with(&self, exact: f64, sigmas: f64) -> bool {
        (self.estimate - exact).abs() <= sigmas * self.stderr
    }
}

/// Runs `trials` full bypassed exchanges on the probe inputs. Trial `t` uses
/// the RNG stream `stream_seed(seed, t)`, so the result depends only on
/// `(seed, trials)`.
pub fn bypass_success_mc(
    resource: &Resource,
    strategy: &BypassStrategy,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::Parse("at least one trial is required".into()));
    }
    strategy.validate(resource.m, resource.n)?;
    let xi = probe_state(resource.m);
    let eta = probe_state(resource.n);
    let exchange = Exchange::new(resource, &xi, &eta)?;
    let routing = Routing::Bypass(*strategy);
    let successes = (0..trials)
        .into_par_iter()
        .map(|t| {
            exchange
                .run(ExchangeChoice::Seeded(stream_seed(seed, t)), routing)
                .map(|tr| u64::from(tr.succeeded(SUCCESS_TOLERANCE)))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let p = successes as f64 / trials as f64;
    Ok(McEstimate {
        estimate: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
        successes,
    })
}

/// Resource with `l` Charlie qubits: the single-qubit ladder for `m = n = 1`,
/// otherwise only the generalized resource at `l = 2·max(m, n)`.
pub fn variant_for(m: usize, n: usize, l: usize) -> Result<Resource> {
    if m == 1 && n == 1 && l <= MAX_VARIANT_QUBITS {
        return build_security_variant(l);
    }
    let spec = ResourceSpec::new(m, n)?;
    if l != spec.charlie_qubits {
        return Err(Error::Unconstructible(format!(
            "no resource with {l} Charlie qubits for m={m}, n={n}"
        )));
    }
    build_resource(&spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityRow {
    pub l: usize,
    pub guess: ChannelPair,
    pub exact: f64,
    pub mc: f64,
    pub mc_stderr: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub m: usize,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub rows: Vec<SecurityRow>,
}

/// Exact, sampled and closed-form bypass probability for each `l`. Row `l`
/// samples with master seed `stream_seed(seed, l)`.
pub fn security_sweep(
    m: usize,
    n: usize,
    ls: &[usize],
    trials: u64,
    seed: u64,
) -> Result<SecurityReport> {
    let rows = ls
        .iter()
        .map(|&l| {
            let resource = variant_for(m, n, l)?;
            let strategy = best_guess(&resource)?;
            let exact = bypass_success_exact(&resource, &strategy)?;
            let mc = bypass_success_mc(&resource, &strategy, trials, stream_seed(seed, l as u64))?;
            Ok(SecurityRow {
                l,
                guess: strategy.guess,
                exact,
                mc: mc.estimate,
                mc_stderr: mc.stderr,
                bound: insecurity_bound(l, m, n),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SecurityReport {
        m,
        n,
        trials,
        seed,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliString;
    use crate::protocol::enumerate_with;
    use crate::qstate::{trace_distance, Mode};
    use crate::resource::build_sse;
    use crate::resource::Permutation;

    #[test]
    fn bound_examples() {
        assert_eq!(insecurity_bound(3, 1, 1), 0.125);
        assert_eq!(insecurity_bound(0, 3, 2), 1.0);
        assert_eq!(insecurity_bound(9, 1, 1), 1.0 / 16.0);
        assert_eq!(insecurity_bound(4, 2, 1), 1.0 / 16.0);
    }

    #[test]
    fn exact_examples() {
        let l0 = build_security_variant(0).unwrap();
        let g = BypassStrategy::new(ChannelPair::new(0, 0));
        assert!((bypass_success_exact(&l0, &g).unwrap() - 1.0).abs() < 1e-12);
        let l2 = build_security_variant(2).unwrap();
        assert!((bypass_success_exact(&l2, &g).unwrap() - 0.25).abs() < 1e-12);
        let l5 = build_security_variant(5).unwrap();
        for pair in l5.channels.pairs() {
            let p = bypass_success_exact(&l5, &BypassStrategy::new(*pair)).unwrap();
            assert!((p - 0.0625).abs() < 1e-12);
        }
        let absent = BypassStrategy::new(ChannelPair::new(0, 1));
        assert_eq!(bypass_success_exact(&l2, &absent).unwrap(), 0.0);
        assert!(bypass_success_exact(&l2, &BypassStrategy::new(ChannelPair::new(4, 0))).is_err());
    }

    #[test]
    fn mc_degenerate_and_half() {
        let l0 = build_security_variant(0).unwrap();
        let g = BypassStrategy::new(ChannelPair::new(0, 0));
        let est = bypass_success_mc(&l0, &g, 200, 1).unwrap();
        assert_eq!((est.estimate, est.stderr), (1.0, 0.0));

        let l1 = build_security_variant(1).unwrap();
        let est = bypass_success_mc(&l1, &g, 4000, 2).unwrap();
        assert!(est.consistent_with(0.5, 3.0), "{est:?}");
        assert_eq!(est, bypass_success_mc(&l1, &g, 4000, 2).unwrap());
        assert!(bypass_success_mc(&l1, &g, 0, 2).is_err());
    }

    #[test]
    fn success_iff_guess_matches() {
        for l in 0..=5 {
            let r = build_security_variant(l).unwrap();
            let xi = probe_state(1);
            let eta = probe_state(1);
            for guess in [ChannelPair::new(0, 0), ChannelPair::new(3, 2)] {
                let branches =
                    enumerate_with(&r, &xi, &eta, Routing::Bypass(BypassStrategy::new(guess)))
                        .unwrap();
                for b in branches {
                    let t = &b.transcript;
                    if t.channel == guess {
                        assert!(t.succeeded(1e-10));
                    } else {
                        assert!(t.fidelity_at_bob.min(t.fidelity_at_alice) <= 0.9);
                    }
                }
            }
        }
    }

    #[test]
    fn probe_state_is_far_from_pauli_images() {
        for k in 1..=2 {
            let probe = probe_state(k);
            let q: Vec<usize> = (0..k).collect();
            for i in 1..family_size(k) {
                let moved = probe
                    .apply_string(&PauliString::from_index(i, k).unwrap(), &q)
                    .unwrap();
                assert!(probe.fidelity(&moved).unwrap() <= 1.0 / 3.0 + 1e-12);
            }
        }
    }

    #[test]
    fn colluders_learn_nothing_about_channel() {
        // Alice and Bob's joint state of the resource does not depend on phi,
        // i.e. on which basis state tags which channel.
        let a = build_sse(&Permutation::identity(4)).unwrap();
        let b = build_sse(&Permutation::new(vec![2, 3, 1, 0]).unwrap()).unwrap();
        let keep: Vec<usize> = [
            Mode::APrime,
            Mode::BPrime,
            Mode::BDoublePrime,
            Mode::ADoublePrime,
        ]
        .iter()
        .flat_map(|m| a.state.positions(*m).unwrap().to_vec())
        .collect();
        let ra = a.state.reduced_density(&keep).unwrap();
        let rb = b.state.reduced_density(&keep).unwrap();
        assert!(trace_distance(&ra, &rb) < 1e-10);
    }

    #[test]
    fn sweep_rejects_unconstructible() {
        assert!(matches!(
            variant_for(1, 1, 6),
            Err(Error::Unconstructible(_))
        ));
        assert!(matches!(
            variant_for(2, 1, 3),
            Err(Error::Unconstructible(_))
        ));
        assert_eq!(variant_for(2, 1, 4).unwrap().charlie_qubits, 4);
    }
}
