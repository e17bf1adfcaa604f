//! The three-party exchange.
//!
//! Alice, Bob and Charlie are separate state machines. They share one global
//! quantum state (the [`Lab`]) but each may only touch the modes it owns, and
//! all coordination goes through an ordered in-memory classical channel.
//!
//! Controlled run:
//!
//! 1. Alice measures `(A, A')` in the GBS basis (outcome `r`) and reports it to Charlie.
//! 2. Bob measures `(B, B'')` in the GBS basis (outcome `s`) and reports it to Charlie.
//! 3. Charlie measures `C` computationally (outcome `c`), looks up the channel
//!    pair `(i', i'')`, and sends Alice the index of `U^(i'') U^(s)` and Bob the
//!    index of `U^(i') U^(r)`.
//! 4. Each party applies the adjoint of the indicated string to its output mode
//!    (`A''` for Alice, `B'` for Bob).
//!
//! In a bypassed run the BSM reports go straight to the partner and both
//! parties correct for a guessed channel pair. Charlie still measures; his
//! outcome is simply never reported.

use std::collections::VecDeque;

use num_complex::Complex64;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{build_gbs_labeled, family_size, gbs_measure, GbsIndex, PauliString};
use crate::qstate::{Mode, QuantumState, RegisterMap, Selection};
use crate::resource::{ChannelPair, Resource, ResourceKind};
use crate::security::BypassStrategy;

/// Size limit for exhaustive branch enumeration.
pub const ENUMERATION_QUBIT_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
    Charlie,
}

impl Party {
    pub fn name(self) -> &'static str {
        match self {
            Party::Alice => "Alice",
            Party::Bob => "Bob",
            Party::Charlie => "Charlie",
        }
    }
}

pub fn owner(mode: Mode) -> Party {
    match mode {
        Mode::A | Mode::APrime | Mode::ADoublePrime => Party::Alice,
        Mode::B | Mode::BPrime | Mode::BDoublePrime => Party::Bob,
        Mode::C => Party::Charlie,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClassicalMessage {
    /// Alice's GBS outcome `r`, `2m` bits.
    AliceBsm { value: usize, bits: usize },
    /// Bob's GBS outcome `s`, `2n` bits.
    BobBsm { value: usize, bits: usize },
    /// Index of Alice's correction string, `2n` bits.
    CharlieToAlice { value: usize, bits: usize },
    /// Index of Bob's correction string, `2m` bits.
    CharlieToBob { value: usize, bits: usize },
}

impl ClassicalMessage {
    pub fn value(&self) -> usize {
        match *self {
            ClassicalMessage::AliceBsm { value, .. }
            | ClassicalMessage::BobBsm { value, .. }
            | ClassicalMessage::CharlieToAlice { value, .. }
            | ClassicalMessage::CharlieToBob { value, .. } => value,
        }
    }

    pub fn bits(&self) -> usize {
        match *self {
            ClassicalMessage::AliceBsm { bits, .. }
            | ClassicalMessage::BobBsm { bits, .. }
            | ClassicalMessage::CharlieToAlice { bits, .. }
            | ClassicalMessage::CharlieToBob { bits, .. } => bits,
        }
    }

    fn is_report(&self) -> bool {
        matches!(
            self,
            ClassicalMessage::AliceBsm { .. } | ClassicalMessage::BobBsm { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    pub from: Party,
    pub to: Party,
    pub message: ClassicalMessage,
}

/// Who the BSM reports go to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Routing {
    Controlled,
    Bypass(BypassStrategy),
}

/// Outcome selection for a whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExchangeChoice {
    /// Sample `r`, `s`, `c` in that order from one `ChaCha8Rng` seeded with this value.
    Seeded(u64),
    /// Follow the given branch; fails if it has zero probability.
    Forced { r: usize, s: usize, c: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeTranscript {
    pub m: usize,
    pub n: usize,
    pub charlie_qubits: usize,
    pub resource: ResourceKind,
    pub routing: Routing,
    pub input_xi: Vec<Complex64>,
    pub input_eta: Vec<Complex64>,
    pub alice_outcome: usize,
    pub bob_outcome: usize,
    pub charlie_outcome: usize,
    pub channel: ChannelPair,
    pub messages: Vec<Envelope>,
    pub alice_correction: PauliString,
    pub bob_correction: PauliString,
    pub fidelity_at_bob: f64,
    pub fidelity_at_alice: f64,
    pub branch_probability: f64,
}

impl ExchangeTranscript {
    /// Both BSM reports precede any message from Charlie.
    pub fn messages_well_ordered(&self) -> bool {
        let reports = self
            .messages
            .iter()
            .filter(|e| e.message.is_report())
            .count();
        let first_charlie = self
            .messages
            .iter()
            .position(|e| e.from == Party::Charlie)
            .unwrap_or(self.messages.len());
        reports == 2
            && self.messages[..first_charlie]
                .iter()
                .all(|e| e.message.is_report())
    }

    pub fn succeeded(&self, tolerance: f64) -> bool {
        self.fidelity_at_bob > 1.0 - tolerance && self.fidelity_at_alice > 1.0 - tolerance
    }
}

/// Corrections for channel pair `(i', i'')` and BSM outcomes `(r, s)`:
/// Alice gets `(U^(i'') U^(s))†` over `n` qubits, Bob gets `(U^(i') U^(r))†`
/// over `m` qubits.
pub fn compute_corrections(
    forward: GbsIndex,
    backward: GbsIndex,
    r: GbsIndex,
    s: GbsIndex,
) -> Result<(PauliString, PauliString)> {
    let alice = backward.string().compose(&s.string())?.dagger();
    let bob = forward.string().compose(&r.string())?.dagger();
    Ok((alice, bob))
}

/// The global state plus access control.
struct Lab {
    state: QuantumState,
    probability: f64,
}

impl Lab {
    fn positions(&self, party: Party, mode: Mode) -> Result<Vec<usize>> {
        if owner(mode) != party {
            return Err(Error::ForeignRegister {
                party: party.name(),
                mode,
            });
        }
        Ok(self
            .state
            .positions(mode)
            .map(<[usize]>::to_vec)
            .unwrap_or_default())
    }

    fn gbs_measure(
        &mut self,
        party: Party,
        halves: (Mode, Mode),
        selection: Selection<'_>,
    ) -> Result<usize> {
        let h1 = self.positions(party, halves.0)?;
        let h2 = self.positions(party, halves.1)?;
        let rec = gbs_measure(&self.state, &h1, &h2, selection)?;
        self.probability *= rec.probability;
        self.state = rec.post_state;
        Ok(rec.outcome)
    }

    fn measure_computational(
        &mut self,
        party: Party,
        mode: Mode,
        selection: Selection<'_>,
    ) -> Result<usize> {
        let q = self.positions(party, mode)?;
        let rec = self.state.measure_computational(&q, selection)?;
        self.probability *= rec.probability;
        self.state = rec.post_state;
        Ok(rec.outcome)
    }

    fn apply(&mut self, party: Party, mode: Mode, string: &PauliString) -> Result<()> {
        let q = self.positions(party, mode)?;
        self.state = self.state.apply_string(string, &q)?;
        Ok(())
    }
}

#[derive(Default)]
struct Network {
    pending: VecDeque<Envelope>,
    log: Vec<Envelope>,
}

impl Network {
    fn send(&mut self, envelope: Envelope) {
        self.log.push(envelope);
        self.pending.push_back(envelope);
    }

    fn next(&mut self) -> Option<Envelope> {
        self.pending.pop_front()
    }
}

#[derive(Debug, Clone)]
enum EndpointPhase {
    Ready,
    Measured { outcome: usize },
    Corrected { correction: PauliString },
}

/// Alice or Bob.
struct Endpoint {
    party: Party,
    partner: Party,
    halves: (Mode, Mode),
    output: Mode,
    /// Qubits this party sends (m for Alice).
    message_len: usize,
    /// Qubits this party receives (n for Alice).
    output_len: usize,
    routing: Routing,
    phase: EndpointPhase,
}

impl Endpoint {
    fn alice(m: usize, n: usize, routing: Routing) -> Self {
        Self {
            party: Party::Alice,
            partner: Party::Bob,
            halves: (Mode::A, Mode::APrime),
            output: Mode::ADoublePrime,
            message_len: m,
            output_len: n,
            routing,
            phase: EndpointPhase::Ready,
        }
    }

    fn bob(m: usize, n: usize, routing: Routing) -> Self {
        Self {
            party: Party::Bob,
            partner: Party::Alice,
            halves: (Mode::B, Mode::BDoublePrime),
            output: Mode::BPrime,
            message_len: n,
            output_len: m,
            routing,
            phase: EndpointPhase::Ready,
        }
    }

    fn measure(&mut self, lab: &mut Lab, selection: Selection<'_>) -> Result<Envelope> {
        if !matches!(self.phase, EndpointPhase::Ready) {
            return Err(Error::ProtocolOrder(format!(
                "{} measured twice",
                self.party.name()
            )));
        }
        let outcome = lab.gbs_measure(self.party, self.halves, selection)?;
        self.phase = EndpointPhase::Measured { outcome };
        let bits = 2 * self.message_len;
        let message = match self.party {
            Party::Alice => ClassicalMessage::AliceBsm {
                value: outcome,
                bits,
            },
            _ => ClassicalMessage::BobBsm {
                value: outcome,
                bits,
            },
        };
        let to = match self.routing {
            Routing::Controlled => Party::Charlie,
            Routing::Bypass(_) => self.partner,
        };
        Ok(Envelope {
            from: self.party,
            to,
            message,
        })
    }

    fn receive(&mut self, envelope: Envelope, lab: &mut Lab) -> Result<()> {
        if !matches!(self.phase, EndpointPhase::Measured { .. }) {
            return Err(Error::ProtocolOrder(format!(
                "{} received {:?} before measuring",
                self.party.name(),
                envelope.message
            )));
        }
        let correction = match (self.routing, envelope.from, envelope.message) {
            (
                Routing::Controlled,
                Party::Charlie,
                msg @ (ClassicalMessage::CharlieToAlice { .. }
                | ClassicalMessage::CharlieToBob { .. }),
            ) => PauliString::from_index(msg.value(), self.output_len)?.dagger(),
            (Routing::Bypass(strategy), from, msg) if from == self.partner && msg.is_report() => {
                let guess = match self.party {
                    Party::Alice => strategy.guess.backward,
                    _ => strategy.guess.forward,
                };
                let channel = GbsIndex::new(guess, self.output_len)?;
                let report = GbsIndex::new(msg.value(), self.output_len)?;
                channel.string().compose(&report.string())?.dagger()
            }
            (_, from, msg) => {
                return Err(Error::ProtocolOrder(format!(
                    "{} cannot act on {msg:?} from {}",
                    self.party.name(),
                    from.name()
                )))
            }
        };
        lab.apply(self.party, self.output, &correction)?;
        self.phase = EndpointPhase::Corrected { correction };
        Ok(())
    }

    fn outcome(&self) -> Result<usize> {
        match self.phase {
            EndpointPhase::Ready => Err(Error::ProtocolOrder(format!(
                "{} never measured",
                self.party.name()
            ))),
            EndpointPhase::Measured { outcome } => Ok(outcome),
            EndpointPhase::Corrected { .. } => unreachable!("outcome read after correction"),
        }
    }

    fn correction(&self) -> Result<PauliString> {
        match &self.phase {
            EndpointPhase::Corrected { correction } => Ok(correction.clone()),
            _ => Err(Error::ProtocolOrder(format!(
                "{} never corrected",
                self.party.name()
            ))),
        }
    }
}

enum ControllerPhase {
    Ready,
    Measured {
        outcome: usize,
        r: Option<usize>,
        s: Option<usize>,
    },
    Dispatched {
        outcome: usize,
    },
}

struct Controller<'r> {
    resource: &'r Resource,
    phase: ControllerPhase,
}

impl<'r> Controller<'r> {
    fn new(resource: &'r Resource) -> Self {
        Self {
            resource,
            phase: ControllerPhase::Ready,
        }
    }

    fn measure(&mut self, lab: &mut Lab, selection: Selection<'_>) -> Result<usize> {
        if !matches!(self.phase, ControllerPhase::Ready) {
            return Err(Error::ProtocolOrder("Charlie measured twice".into()));
        }
        let outcome = if self.resource.charlie_qubits == 0 {
            0
        } else {
            lab.measure_computational(Party::Charlie, Mode::C, selection)?
        };
        self.phase = ControllerPhase::Measured {
            outcome,
            r: None,
            s: None,
        };
        Ok(outcome)
    }

    fn receive(&mut self, envelope: Envelope) -> Result<Vec<Envelope>> {
        let ControllerPhase::Measured { outcome, r, s } = &mut self.phase else {
            return Err(Error::ProtocolOrder(
                "Charlie got a report outside the collection phase".into(),
            ));
        };
        match envelope.message {
            ClassicalMessage::AliceBsm { value, .. } if envelope.from == Party::Alice => {
                *r = Some(value)
            }
            ClassicalMessage::BobBsm { value, .. } if envelope.from == Party::Bob => {
                *s = Some(value)
            }
            other => {
                return Err(Error::ProtocolOrder(format!(
                    "Charlie cannot act on {other:?}"
                )))
            }
        }
        let (Some(r), Some(s)) = (*r, *s) else {
            return Ok(Vec::new());
        };
        let outcome = *outcome;
        let (m, n) = (self.resource.m, self.resource.n);
        let channel = self.resource.channel_of(outcome)?;
        let (alice, bob) = compute_corrections(
            GbsIndex::new(channel.forward, m)?,
            GbsIndex::new(channel.backward, n)?,
            GbsIndex::new(r, m)?,
            GbsIndex::new(s, n)?,
        )?;
        self.phase = ControllerPhase::Dispatched { outcome };
        Ok(vec![
            Envelope {
                from: Party::Charlie,
                to: Party::Alice,
                message: ClassicalMessage::CharlieToAlice {
                    value: alice.index(),
                    bits: 2 * n,
                },
            },
            Envelope {
                from: Party::Charlie,
                to: Party::Bob,
                message: ClassicalMessage::CharlieToBob {
                    value: bob.index(),
                    bits: 2 * m,
                },
            },
        ])
    }

    fn outcome(&self) -> Result<usize> {
        match self.phase {
            ControllerPhase::Ready => Err(Error::ProtocolOrder("Charlie never measured".into())),
            ControllerPhase::Measured { outcome, .. } | ControllerPhase::Dispatched { outcome } => {
                Ok(outcome)
            }
        }
    }
}

/// Inputs and resource bound together, with the initial composite state
/// `|xi>_A ⊗ resource ⊗ |eta>_B` built once.
pub struct Exchange<'r> {
    resource: &'r Resource,
    xi: QuantumState,
    eta: QuantumState,
    initial: QuantumState,
}

impl<'r> Exchange<'r> {
    pub fn new(resource: &'r Resource, xi: &QuantumState, eta: &QuantumState) -> Result<Self> {
        if xi.num_qubits() != resource.m {
            return Err(Error::DimensionMismatch {
                left: xi.num_qubits(),
                right: resource.m,
            });
        }
        if eta.num_qubits() != resource.n {
            return Err(Error::DimensionMismatch {
                left: eta.num_qubits(),
                right: resource.n,
            });
        }
        let xi = xi
            .clone()
            .with_registers(RegisterMap::single(Mode::A, resource.m))?;
        let eta = eta
            .clone()
            .with_registers(RegisterMap::single(Mode::B, resource.n))?;
        let initial = xi.tensor(&resource.state)?.tensor(&eta)?;
        Ok(Self {
            resource,
            xi,
            eta,
            initial,
        })
    }

    pub fn initial_state(&self) -> &QuantumState {
        &self.initial
    }

    pub fn run(&self, choice: ExchangeChoice, routing: Routing) -> Result<ExchangeTranscript> {
        let (m, n) = (self.resource.m, self.resource.n);
        if let Routing::Bypass(strategy) = routing {
            strategy.validate(m, n)?;
        }
        let mut rng = match choice {
            ExchangeChoice::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            ExchangeChoice::Forced { .. } => None,
        };
        let (fr, fs, fc) = match choice {
            ExchangeChoice::Forced { r, s, c } => (r, s, c),
            ExchangeChoice::Seeded(_) => (0, 0, 0),
        };

        let mut lab = Lab {
            state: self.initial.clone(),
            probability: 1.0,
        };
        let mut net = Network::default();
        let mut alice = Endpoint::alice(m, n, routing);
        let mut bob = Endpoint::bob(m, n, routing);
        let mut charlie = Controller::new(self.resource);

        net.send(alice.measure(&mut lab, selection(&mut rng, fr))?);
        net.send(bob.measure(&mut lab, selection(&mut rng, fs))?);
        charlie.measure(&mut lab, selection(&mut rng, fc))?;
        let r = alice.outcome()?;
        let s = bob.outcome()?;

        while let Some(envelope) = net.next() {
            match envelope.to {
                Party::Alice => alice.receive(envelope, &mut lab)?,
                Party::Bob => bob.receive(envelope, &mut lab)?,
                Party::Charlie => {
                    for reply in charlie.receive(envelope)? {
                        net.send(reply);
                    }
                }
            }
        }

        let c = charlie.outcome()?;
        let fidelity_at_bob = lab
            .state
            .marginal_fidelity(lab.state.positions(Mode::BPrime)?, &self.xi)?;
        let fidelity_at_alice = lab
            .state
            .marginal_fidelity(lab.state.positions(Mode::ADoublePrime)?, &self.eta)?;

        Ok(ExchangeTranscript {
            m,
            n,
            charlie_qubits: self.resource.charlie_qubits,
            resource: self.resource.kind.clone(),
            routing,
            input_xi: self.xi.amplitudes().to_vec(),
            input_eta: self.eta.amplitudes().to_vec(),
            alice_outcome: r,
            bob_outcome: s,
            charlie_outcome: c,
            channel: self.resource.channel_of(c)?,
            messages: net.log,
            alice_correction: alice.correction()?,
            bob_correction: bob.correction()?,
            fidelity_at_bob,
            fidelity_at_alice,
            branch_probability: lab.probability,
        })
    }
}

fn selection(rng: &mut Option<ChaCha8Rng>, forced: usize) -> Selection<'_> {
    match rng {
        Some(rng) => Selection::Sample(rng as &mut dyn RngCore),
        None => Selection::Force(forced),
    }
}

/// One controlled run of the exchange.
pub fn run_exchange(
    resource: &Resource,
    xi: &QuantumState,
    eta: &QuantumState,
    choice: ExchangeChoice,
) -> Result<ExchangeTranscript> {
    Exchange::new(resource, xi, eta)?.run(choice, Routing::Controlled)
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub r: usize,
    pub s: usize,
    pub c: usize,
    pub probability: f64,
    pub transcript: ExchangeTranscript,
}

/// Every `(r, s, c)` branch of nonzero probability, in lexicographic order.
pub fn enumerate_branches(
    resource: &Resource,
    xi: &QuantumState,
    eta: &QuantumState,
) -> Result<Vec<Branch>> {
    enumerate_with(resource, xi, eta, Routing::Controlled)
}

pub fn enumerate_with(
    resource: &Resource,
    xi: &QuantumState,
    eta: &QuantumState,
    routing: Routing,
) -> Result<Vec<Branch>> {
    let total = resource.total_qubits();
    if total > ENUMERATION_QUBIT_LIMIT {
        return Err(Error::TooManyQubits {
            requested: total,
            limit: ENUMERATION_QUBIT_LIMIT,
        });
    }
    let exchange = Exchange::new(resource, xi, eta)?;
    let (nr, ns, nc) = (
        family_size(resource.m),
        family_size(resource.n),
        1usize << resource.charlie_qubits,
    );
    let results: Vec<Result<Option<Branch>>> = (0..nr * ns * nc)
        .into_par_iter()
        .map(|k| {
            let (r, s, c) = (k / (ns * nc), (k / nc) % ns, k % nc);
            match exchange.run(ExchangeChoice::Forced { r, s, c }, routing) {
                Ok(t) => Ok(Some(Branch {
                    r,
                    s,
                    c,
                    probability: t.branch_probability,
                    transcript: t,
                })),
                Err(Error::ImpossibleOutcome { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    results.into_iter().filter_map(Result::transpose).collect()
}

/// Which side of the exchange an identity check is phrased for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Alice,
    Bob,
}

/// Checks the rewrite behind the exchange,
///
/// ```text
/// |psi>_in ⊗ |E^(i)>_{x,out} = 2^{-k} Σ_r |E^(r)>_{in,x} ⊗ U^(i) U^(r) |psi>_out
/// ```
///
/// by expanding both sides independently. Returns the largest absolute
/// amplitude difference; signs are tracked, so this is exact equality rather
/// than equality up to phase. For Alice `(in, x, out) = (A, A', B')`, for Bob
/// `(B, B'', A'')`.
pub fn verify_rewrite_identity(side: Side, k: usize, i: usize, psi: &QuantumState) -> Result<f64> {
    if psi.num_qubits() != k {
        return Err(Error::DimensionMismatch {
            left: psi.num_qubits(),
            right: k,
        });
    }
    let (input, link, out) = match side {
        Side::Alice => (Mode::A, Mode::APrime, Mode::BPrime),
        Side::Bob => (Mode::B, Mode::BDoublePrime, Mode::ADoublePrime),
    };
    let channel = GbsIndex::new(i, k)?;
    let psi_in = psi.clone().with_registers(RegisterMap::single(input, k))?;
    let left = psi_in.tensor(&build_gbs_labeled(k, i, link, out)?)?;

    let weight = (family_size(k) as f64).sqrt().recip();
    let targets: Vec<usize> = (0..k).collect();
    let mut right = vec![Complex64::new(0.0, 0.0); left.amplitudes().len()];
    for r in 0..family_size(k) {
        let correction = channel.string().compose(&GbsIndex::new(r, k)?.string())?;
        let moved = psi
            .apply_string(&correction, &targets)?
            .with_registers(RegisterMap::single(out, k))?;
        let term = build_gbs_labeled(k, r, input, link)?.tensor(&moved)?;
        for (acc, a) in right.iter_mut().zip(term.amplitudes()) {
            *acc += a * weight;
        }
    }
    Ok(left
        .amplitudes()
        .iter()
        .zip(&right)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}
