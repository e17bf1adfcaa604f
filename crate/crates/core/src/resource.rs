//! Shared entangled resources.
//!
//! Every resource here has the same shape: an equal-weight superposition over
//! Charlie's computational outcomes `c`, each term carrying one Alice-to-Bob
//! GBS over `(A', B')` and one Bob-to-Alice GBS over `(B'', A'')`:
//!
//! ```text
//! 2^{-l/2} Σ_c |E^(i'_c)>_{A'B'} ⊗ |E^(i''_c)>_{B''A''} ⊗ |c>_C
//! ```
//!
//! The map `c -> (i'_c, i''_c)` is the resource's [`ChannelAssignment`].
//! Qubit order is `A', B', B'', A'', C`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{build_gbs, family_size};
use crate::qstate::{Mode, QuantumState, RegisterMap, MAX_QUBITS};

/// Largest Charlie register for the single-qubit security ladder.
pub const MAX_VARIANT_QUBITS: usize = 5;

/// Bijection on `0..len`, `forward[i] = φ(i)`: term `i` of the resource is
/// tagged with Charlie basis state `|φ(i)>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(len: usize) -> Self {
        Self {
            forward: (0..len).collect(),
            inverse: (0..len).collect(),
        }
    }

    pub fn new(forward: Vec<usize>) -> Result<Self> {
        let mut inverse = vec![usize::MAX; forward.len()];
        for (i, &v) in forward.iter().enumerate() {
            if v >= forward.len() {
                return Err(Error::InvalidPermutation(format!(
                    "{v} out of range for {} elements",
                    forward.len()
                )));
            }
            if inverse[v] != usize::MAX {
                return Err(Error::InvalidPermutation(format!("{v} appears twice")));
            }
            inverse[v] = i;
        }
        Ok(Self { forward, inverse })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn apply(&self, i: usize) -> usize {
        self.forward[i]
    }

    pub fn invert(&self, c: usize) -> usize {
        self.inverse[c]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.forward
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Permutation::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Vec<usize> {
        p.forward
    }
}

/// Parameters of the generalized resource: Alice sends `m` qubits, Bob `n`,
/// Charlie holds `charlie_qubits` (default `2·max(m, n)`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceSpec {
    pub m: usize,
    pub n: usize,
    pub charlie_qubits: usize,
    pub phi: Permutation,
}

impl ResourceSpec {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Unconstructible(format!(
                "message sizes must be at least 1 (m={m}, n={n})"
            )));
        }
        let l = 2 * m.max(n);
        Ok(Self {
            m,
            n,
            charlie_qubits: l,
            phi: Permutation::identity(1 << l),
        })
    }

    pub fn with_phi(mut self, phi: Permutation) -> Result<Self> {
        if phi.len() != 1 << self.charlie_qubits {
            return Err(Error::InvalidPermutation(format!(
                "expected {} elements, got {}",
                1usize << self.charlie_qubits,
                phi.len()
            )));
        }
        self.phi = phi;
        Ok(self)
    }

    pub fn p(&self) -> usize {
        self.m.max(self.n)
    }

    /// Qubits in the full exchange: inputs, both GBS channels, Charlie.
    pub fn total_qubits(&self) -> usize {
        3 * self.m + 3 * self.n + self.charlie_qubits
    }
}

/// `(i', i'')`: GBS index of the Alice-to-Bob and Bob-to-Alice channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChannelPair {
    pub forward: usize,
    pub backward: usize,
}

impl ChannelPair {
    pub fn new(forward: usize, backward: usize) -> Self {
        Self { forward, backward }
    }
}

/// Charlie outcome to channel pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelAssignment {
    pairs: Vec<ChannelPair>,
}

impl ChannelAssignment {
    pub fn new(pairs: Vec<ChannelPair>) -> Self {
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, outcome: usize) -> Result<ChannelPair> {
        self.pairs
            .get(outcome)
            .copied()
            .ok_or(Error::OutcomeOutOfRange {
                outcome,
                count: self.pairs.len(),
            })
    }

    pub fn pairs(&self) -> &[ChannelPair] {
        &self.pairs
    }

    pub fn is_injective(&self) -> bool {
        let mut sorted = self.pairs.clone();
        sorted.sort();
        sorted.dedup();
        sorted.len() == self.pairs.len()
    }
}

/// How a resource was constructed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResourceKind {
    /// The generalized `2^{2p}`-term resource with Charlie ordering `phi`.
    Standard { phi: Permutation },
    /// Single-qubit security ladder member with `l` Charlie qubits.
    SecurityVariant { l: usize },
}

#[derive(Debug, Clone)]
pub struct Resource {
    pub m: usize,
    pub n: usize,
    pub charlie_qubits: usize,
    pub kind: ResourceKind,
    pub state: QuantumState,
    pub channels: ChannelAssignment,
}

impl Resource {
    pub fn charlie_positions(&self) -> Vec<usize> {
        self.state
            .positions(Mode::C)
            .map(<[usize]>::to_vec)
            .unwrap_or_default()
    }

    pub fn channel_of(&self, outcome: usize) -> Result<ChannelPair> {
        self.channels.get(outcome)
    }

    /// Number of qubits of the full exchange built on this resource.
    pub fn total_qubits(&self) -> usize {
        self.state.num_qubits() + self.m + self.n
    }
}

/// Channel pair for Charlie outcome `c` of the generalized resource:
/// `i = φ⁻¹(c)`, `i' = i mod 4^m`, `i'' = i mod 4^n`.
pub fn channel_of(spec: &ResourceSpec, outcome: usize) -> Result<ChannelPair> {
    let count = 1usize << spec.charlie_qubits;
    if outcome >= count {
        return Err(Error::OutcomeOutOfRange { outcome, count });
    }
    let i = spec.phi.invert(outcome);
    Ok(ChannelPair::new(
        i % family_size(spec.m),
        i % family_size(spec.n),
    ))
}

fn assemble(
    m: usize,
    n: usize,
    charlie_qubits: usize,
    kind: ResourceKind,
    channels: ChannelAssignment,
) -> Result<Resource> {
    let num_qubits = 2 * m + 2 * n + charlie_qubits;
    if num_qubits > MAX_QUBITS {
        return Err(Error::TooManyQubits {
            requested: num_qubits,
            limit: MAX_QUBITS,
        });
    }
    let forward: Vec<Vec<Complex64>> = (0..family_size(m))
        .map(|i| build_gbs(m, i).map(QuantumState::into_amplitudes))
        .collect::<Result<_>>()?;
    let backward: Vec<Vec<Complex64>> = (0..family_size(n))
        .map(|i| build_gbs(n, i).map(QuantumState::into_amplitudes))
        .collect::<Result<_>>()?;

    let weight = (channels.len() as f64).sqrt().recip();
    let back_dim = family_size(n);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
    for (c, pair) in channels.pairs().iter().enumerate() {
        let f = &forward[pair.forward];
        let b = &backward[pair.backward];
        for (x, fa) in f.iter().enumerate().filter(|(_, a)| a.norm_sqr() > 0.0) {
            for (y, ba) in b.iter().enumerate().filter(|(_, a)| a.norm_sqr() > 0.0) {
                let index = ((x * back_dim + y) << charlie_qubits) | c;
                amplitudes[index] += fa * ba * weight;
            }
        }
    }
    let registers = RegisterMap::blocks(&[
        (Mode::APrime, m),
        (Mode::BPrime, m),
        (Mode::BDoublePrime, n),
        (Mode::ADoublePrime, n),
        (Mode::C, charlie_qubits),
    ])?;
    Ok(Resource {
        m,
        n,
        charlie_qubits,
        kind,
        state: QuantumState::new(amplitudes, registers)?,
        channels,
    })
}

/// The generalized resource: `2^{-p} Σ_i |E^(i')>_{A'B'} ⊗ |E^(i'')>_{B''A''} ⊗ |φ(i)>_C`
/// with `i` ranging over `0..4^p`.
pub fn build_resource(spec: &ResourceSpec) -> Result<Resource> {
    let l = 2 * spec.p();
    if spec.charlie_qubits != l {
        return Err(Error::Unconstructible(format!(
            "generalized resource needs {l} Charlie qubits, got {}",
            spec.charlie_qubits
        )));
    }
    let pairs = (0..1usize << l)
        .map(|c| channel_of(spec, c))
        .collect::<Result<Vec<_>>>()?;
    assemble(
        spec.m,
        spec.n,
        l,
        ResourceKind::Standard {
            phi: spec.phi.clone(),
        },
        ChannelAssignment::new(pairs),
    )
}

/// Bell pair `index` from its explicit two-qubit expansion:
/// `(|00> ± |11>)/√2` for 0/1, `(|01> ± |10>)/√2` for 2/3.
fn bell_amplitudes(index: usize) -> [f64; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match index {
        0 => [h, 0.0, 0.0, h],
        1 => [h, 0.0, 0.0, -h],
        2 => [0.0, h, h, 0.0],
        3 => [0.0, h, -h, 0.0],
        _ => unreachable!("Bell index {index}"),
    }
}

/// Six-qubit resource of the single-qubit exchange, written out directly
/// from Bell pairs: `1/2 Σ_i |B^i>_{A1B1} |B^i>_{B2A2} |φ(i)>_{C1C2}`.
pub fn build_sse(phi: &Permutation) -> Result<Resource> {
    if phi.len() != 4 {
        return Err(Error::InvalidPermutation(format!(
            "expected 4 elements, got {}",
            phi.len()
        )));
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 64];
    for i in 0..4 {
        let bell = bell_amplitudes(i);
        for (x, a) in bell.iter().enumerate() {
            for (y, b) in bell.iter().enumerate() {
                amplitudes[(x << 4) | (y << 2) | phi.apply(i)] += Complex64::new(0.5 * a * b, 0.0);
            }
        }
    }
    let registers = RegisterMap::blocks(&[
        (Mode::APrime, 1),
        (Mode::BPrime, 1),
        (Mode::BDoublePrime, 1),
        (Mode::ADoublePrime, 1),
        (Mode::C, 2),
    ])?;
    let pairs = (0..4)
        .map(|c| {
            let i = phi.invert(c);
            ChannelPair::new(i, i)
        })
        .collect();
    Ok(Resource {
        m: 1,
        n: 1,
        charlie_qubits: 2,
        kind: ResourceKind::Standard { phi: phi.clone() },
        state: QuantumState::new(amplitudes, registers)?,
        channels: ChannelAssignment::new(pairs),
    })
}

/// Channel assignment of the single-qubit ladder member with `l` Charlie qubits.
///
/// - 0: one fixed channel `(0, 0)`.
/// - 1: `|0> -> (0, 0)`, `|1> -> (1, 1)`.
/// - 2: diagonal `(i, i)`.
/// - 3: the four diagonal channels, then `(0,1), (1,0), (2,3), (3,2)`.
/// - 4: `c = 4i + j -> (i, j)`, all sixteen channels.
/// - 5: the 4-qubit assignment repeated, so each channel appears twice.
pub fn variant_channels(l: usize) -> Result<ChannelAssignment> {
    let pairs: Vec<(usize, usize)> = match l {
        0 => vec![(0, 0)],
        1 => vec![(0, 0), (1, 1)],
        2 => (0..4).map(|i| (i, i)).collect(),
        3 => vec![
            (0, 0),
            (1, 1),
            (2, 2),
            (3, 3),
            (0, 1),
            (1, 0),
            (2, 3),
            (3, 2),
        ],
        4 => (0..16).map(|c| (c / 4, c % 4)).collect(),
        5 => (0..32).map(|c| ((c % 16) / 4, c % 4)).collect(),
        _ => {
            return Err(Error::Unconstructible(format!(
                "security variants exist for 0..={MAX_VARIANT_QUBITS} Charlie qubits, got {l}"
            )))
        }
    };
    Ok(ChannelAssignment::new(
        pairs
            .into_iter()
            .map(|(a, b)| ChannelPair::new(a, b))
            .collect(),
    ))
}

/// Single-qubit-exchange resource with `l` qubits on Charlie's side.
pub fn build_security_variant(l: usize) -> Result<Resource> {
    let channels = variant_channels(l)?;
    assemble(1, 1, l, ResourceKind::SecurityVariant { l }, channels)
}
