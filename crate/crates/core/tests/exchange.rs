use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqie::protocol::{enumerate_branches, run_exchange};
use sqie::qstate::trace_distance;
use sqie::resource::{build_resource, Permutation, ResourceSpec};
use sqie::{ExchangeChoice, Mode, QuantumState};

fn random_pair(seed: u64, m: usize, n: usize) -> (QuantumState, QuantumState) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (
        QuantumState::random(m, &mut rng).unwrap(),
        QuantumState::random(n, &mut rng).unwrap(),
    )
}

#[test]
fn outcomes_are_uniform() {
    let resource = build_resource(&ResourceSpec::new(1, 1).unwrap()).unwrap();
    let (xi, eta) = random_pair(4, 1, 1);
    for b in enumerate_branches(&resource, &xi, &eta).unwrap() {
        assert!((b.probability - 1.0 / 64.0).abs() < 1e-12);
    }
}

#[test]
fn receivers_learn_nothing_before_corrections() {
    // Bob's qubit after Alice's measurement but before any classical message
    // is maximally mixed whatever xi was.
    let resource = build_resource(&ResourceSpec::new(1, 1).unwrap()).unwrap();
    let (xi, eta) = random_pair(8, 1, 1);
    let exchange = sqie::protocol::Exchange::new(&resource, &xi, &eta).unwrap();
    let state = exchange.initial_state();
    let b_prime = state.positions(Mode::BPrime).unwrap();
    let rho = state.reduced_density(b_prime).unwrap();
    assert!(trace_distance(&rho, &sqie::qstate::maximally_mixed(2)) < 1e-12);
}

#[test]
fn relabeled_resources_exchange_perfectly() {
    let spec = ResourceSpec::new(1, 1)
        .unwrap()
        .with_phi(Permutation::new(vec![2, 0, 3, 1]).unwrap())
        .unwrap();
    let resource = build_resource(&spec).unwrap();
    let (xi, eta) = random_pair(21, 1, 1);
    for b in enumerate_branches(&resource, &xi, &eta).unwrap() {
        assert!(b.transcript.succeeded(1e-10));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exchange_is_perfect(m in 1usize..=2, n in 1usize..=2, inputs in any::<u64>(), run in any::<u64>()) {
        let resource = build_resource(&ResourceSpec::new(m, n).unwrap()).unwrap();
        let (xi, eta) = random_pair(inputs, m, n);
        let t = run_exchange(&resource, &xi, &eta, ExchangeChoice::Seeded(run)).unwrap();
        prop_assert!(t.messages_well_ordered());
        prop_assert!((t.fidelity_at_bob - 1.0).abs() < 1e-9);
        prop_assert!((t.fidelity_at_alice - 1.0).abs() < 1e-9);
    }

    #[test]
    fn seeded_runs_repeat(inputs in any::<u64>(), run in any::<u64>()) {
        let resource = build_resource(&ResourceSpec::new(1, 1).unwrap()).unwrap();
        let (xi, eta) = random_pair(inputs, 1, 1);
        let a = run_exchange(&resource, &xi, &eta, ExchangeChoice::Seeded(run)).unwrap();
        let b = run_exchange(&resource, &xi, &eta, ExchangeChoice::Seeded(run)).unwrap();
        prop_assert_eq!(a, b);
    }
}
