//! Dense statevector engine.
//!
//! Basis indices are big-endian: the first qubit of a state is the most
//! significant bit of the amplitude index, so `|j1 j2 ... jk>` reads
//! left-to-right. Every operation returns a new state; nothing mutates in
//! place through the public API.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, Sign};

/// Practical ceiling for dense simulation (4M complex amplitudes).
pub const MAX_QUBITS: usize = 18;

/// Tolerance on the input norm accepted by [`QuantumState::new`].
pub const INPUT_NORM_TOLERANCE: f64 = 1e-9;

/// Branches below this probability are treated as unreachable.
pub const IMPOSSIBLE_PROBABILITY: f64 = 1e-14;

pub type DensityMatrix = DMatrix<Complex64>;

/// Named qubit modes. Alice owns `A`, `A'`, `A''`; Bob owns `B`, `B'`, `B''`;
/// Charlie owns `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "A")]
    A,
    #[serde(rename = "A'")]
    APrime,
    #[serde(rename = "A''")]
    ADoublePrime,
    #[serde(rename = "B")]
    B,
    #[serde(rename = "B'")]
    BPrime,
    #[serde(rename = "B''")]
    BDoublePrime,
    #[serde(rename = "C")]
    C,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::A,
        Mode::APrime,
        Mode::ADoublePrime,
        Mode::B,
        Mode::BPrime,
        Mode::BDoublePrime,
        Mode::C,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Mode::A => "A",
            Mode::APrime => "A'",
            Mode::ADoublePrime => "A''",
            Mode::B => "B",
            Mode::BPrime => "B'",
            Mode::BDoublePrime => "B''",
            Mode::C => "C",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::Parse(format!("unknown mode {s:?}")))
    }
}

/// Mode name to ordered list of global qubit positions.
///
/// An empty map denotes an unlabeled state. A non-empty map must partition
/// `0..num_qubits` exactly.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RegisterMap {
    entries: Vec<(Mode, Vec<usize>)>,
}

impl RegisterMap {
    pub fn unlabeled() -> Self {
        Self::default()
    }

    /// One mode covering qubits `0..size`.
    pub fn single(mode: Mode, size: usize) -> Self {
        Self {
            entries: vec![(mode, (0..size).collect())],
        }
    }

    /// Consecutive blocks, in order: `[(A', 2), (B', 2)]` gives `A' -> [0, 1]`,
    /// `B' -> [2, 3]`. Zero-sized blocks are dropped.
    pub fn blocks(layout: &[(Mode, usize)]) -> Result<Self> {
        let mut entries = Vec::new();
        let mut next = 0;
        for &(mode, size) in layout {
            if size == 0 {
                continue;
            }
            entries.push((mode, (next..next + size).collect()));
            next += size;
        }
        Self::from_entries(entries, next)
    }

    pub fn from_entries(entries: Vec<(Mode, Vec<usize>)>, num_qubits: usize) -> Result<Self> {
        let map = Self { entries };
        map.validate(num_qubits)?;
        Ok(map)
    }

    fn validate(&self, num_qubits: usize) -> Result<()> {
        if self.entries.is_empty() {
            return Ok(());
        }
        let mut seen = vec![false; num_qubits];
        for (i, (mode, positions)) in self.entries.iter().enumerate() {
            if self.entries[..i].iter().any(|(m, _)| m == mode) {
                return Err(Error::InvalidRegisters(format!("mode {mode} listed twice")));
            }
            for &q in positions {
                if q >= num_qubits {
                    return Err(Error::QubitOutOfRange {
                        qubit: q,
                        num_qubits,
                    });
                }
                if std::mem::replace(&mut seen[q], true) {
                    return Err(Error::InvalidRegisters(format!("qubit {q} in two modes")));
                }
            }
        }
        if let Some(q) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidRegisters(format!("qubit {q} has no mode")));
        }
        Ok(())
    }

    pub fn is_unlabeled(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn positions(&self, mode: Mode) -> Result<&[usize]> {
        self.entries
            .iter()
            .find(|(m, _)| *m == mode)
            .map(|(_, p)| p.as_slice())
            .ok_or(Error::UnknownRegister(mode))
    }

    pub fn contains(&self, mode: Mode) -> bool {
        self.entries.iter().any(|(m, _)| *m == mode)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Mode, &[usize])> {
        self.entries.iter().map(|(m, p)| (*m, p.as_slice()))
    }
}

/// Outcome selection for a projective measurement.
pub enum Selection<'a> {
    /// Draw from the Born distribution.
    Sample(&'a mut dyn RngCore),
    /// Return the branch for this outcome; fails if it is unreachable.
    Force(usize),
}

#[derive(Debug, Clone)]
pub struct MeasurementRecord {
    pub outcome: usize,
    pub probability: f64,
    pub post_state: QuantumState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
    registers: RegisterMap,
}

impl QuantumState {
    /// Builds a state from big-endian amplitudes. The norm must be within
    /// [`INPUT_NORM_TOLERANCE`] of one and is then renormalized exactly.
    pub fn new(amplitudes: Vec<Complex64>, registers: RegisterMap) -> Result<Self> {
        let num_qubits = qubit_count(amplitudes.len())?;
        let norm = norm(&amplitudes);
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        if (norm - 1.0).abs() > INPUT_NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        registers.validate(num_qubits)?;
        let mut state = Self {
            num_qubits,
            amplitudes,
            registers,
        };
        state.renormalize(norm);
        Ok(state)
    }

    /// Like [`QuantumState::new`] but accepts any non-zero norm.
    pub fn normalized(amplitudes: Vec<Complex64>, registers: RegisterMap) -> Result<Self> {
        let norm = norm(&amplitudes);
        if norm == 0.0 {
            qubit_count(amplitudes.len())?;
            return Err(Error::ZeroVector);
        }
        Self::new(
            amplitudes.into_iter().map(|a| a / norm).collect(),
            registers,
        )
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(
            amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
            RegisterMap::unlabeled(),
        )
    }

    /// Computational basis state `|index>` over `num_qubits` qubits.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_size(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::OutcomeOutOfRange {
                outcome: index,
                count: dim,
            });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
            registers: RegisterMap::unlabeled(),
        })
    }

    /// Haar-ish random state: independent complex Gaussian amplitudes, normalized.
    pub fn random(num_qubits: usize, rng: &mut dyn RngCore) -> Result<Self> {
        check_size(num_qubits)?;
        let amplitudes: Vec<Complex64> = (0..1usize << num_qubits)
            .map(|_| Complex64::new(gaussian(rng), gaussian(rng)))
            .collect();
        Self::normalized(amplitudes, RegisterMap::unlabeled())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn registers(&self) -> &RegisterMap {
        &self.registers
    }

    pub fn positions(&self, mode: Mode) -> Result<&[usize]> {
        self.registers.positions(mode)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    pub fn with_registers(mut self, registers: RegisterMap) -> Result<Self> {
        registers.validate(self.num_qubits)?;
        self.registers = registers;
        Ok(self)
    }

    /// Kronecker product; `self` supplies the leading qubits. Registers of
    /// `other` are shifted past those of `self`.
    pub fn tensor(&self, other: &QuantumState) -> Result<QuantumState> {
        let num_qubits = self.num_qubits + other.num_qubits;
        check_size(num_qubits)?;
        let registers = match (
            self.registers.is_unlabeled(),
            other.registers.is_unlabeled(),
        ) {
            (true, true) => RegisterMap::unlabeled(),
            (false, false) => {
                let mut entries = self.registers.entries.clone();
                for (mode, positions) in &other.registers.entries {
                    if self.registers.contains(*mode) {
                        return Err(Error::RegisterCollision(*mode));
                    }
                    let shifted = positions.iter().map(|q| q + self.num_qubits).collect();
                    entries.push((*mode, shifted));
                }
                RegisterMap { entries }
            }
            _ => {
                return Err(Error::InvalidRegisters(
                    "cannot tensor a labeled state with an unlabeled one".into(),
                ))
            }
        };
        let mut amplitudes = Vec::with_capacity(1 << num_qubits);
        for a in &self.amplitudes {
            amplitudes.extend(other.amplitudes.iter().map(|b| a * b));
        }
        Ok(QuantumState {
            num_qubits,
            amplitudes,
            registers,
        })
    }

    pub fn apply_pauli(&self, pauli: Pauli, qubit: usize) -> Result<QuantumState> {
        self.check_qubit(qubit)?;
        let mut out = self.clone();
        out.apply_pauli_in_place(pauli, qubit);
        Ok(out)
    }

    /// Applies digit `k` of `string` to `qubits[k]`, then the string's sign.
    pub fn apply_string(&self, string: &PauliString, qubits: &[usize]) -> Result<QuantumState> {
        if string.len() != qubits.len() {
            return Err(Error::LengthMismatch {
                expected: qubits.len(),
                found: string.len(),
            });
        }
        check_distinct(self.num_qubits, qubits)?;
        let mut out = self.clone();
        for (&pauli, &q) in string.digits().iter().zip(qubits) {
            out.apply_pauli_in_place(pauli, q);
        }
        if string.sign() == Sign::Minus {
            out.amplitudes.iter_mut().for_each(|a| *a = -*a);
        }
        Ok(out)
    }

    pub fn apply_string_to(&self, string: &PauliString, mode: Mode) -> Result<QuantumState> {
        let qubits = self.positions(mode)?.to_vec();
        self.apply_string(string, &qubits)
    }

    fn apply_pauli_in_place(&mut self, pauli: Pauli, qubit: usize) {
        let mask = 1usize << (self.num_qubits - 1 - qubit);
        let amps = &mut self.amplitudes;
        match pauli {
            Pauli::I => {}
            Pauli::Z => amps
                .iter_mut()
                .enumerate()
                .filter(|(i, _)| i & mask != 0)
                .for_each(|(_, a)| *a = -*a),
            Pauli::X | Pauli::XZ => {
                for low in (0..amps.len()).filter(|i| i & mask == 0) {
                    let high = low | mask;
                    amps.swap(low, high);
                    // X Z: |0> -> |1>, |1> -> -|0>
                    if pauli == Pauli::XZ {
                        amps[low] = -amps[low];
                    }
                }
            }
        }
    }

    /// Born probabilities of every computational outcome on `qubits`.
    pub fn outcome_probabilities(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        let split = Split::new(self.num_qubits, qubits)?;
        Ok(split
            .sub
            .iter()
            .map(|&s| {
                split
                    .rest
                    .iter()
                    .map(|&r| self.amplitudes[s | r].norm_sqr())
                    .sum()
            })
            .collect())
    }

    pub fn measure_computational(
        &self,
        qubits: &[usize],
        selection: Selection<'_>,
    ) -> Result<MeasurementRecord> {
        let probabilities = self.outcome_probabilities(qubits)?;
        let (outcome, probability) = select(&probabilities, selection)?;
        let split = Split::new(self.num_qubits, qubits)?;
        let keep = split.sub[outcome];
        let scale = 1.0 / probability.sqrt();
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for &r in &split.rest {
            amplitudes[keep | r] = self.amplitudes[keep | r] * scale;
        }
        Ok(MeasurementRecord {
            outcome,
            probability,
            post_state: self.projected(amplitudes),
        })
    }

    /// Projective measurement on `qubits` in the orthonormal basis `basis`
    /// (each vector big-endian over `qubits`, in list order).
    pub fn measure_in_basis(
        &self,
        qubits: &[usize],
        basis: &[Vec<Complex64>],
        selection: Selection<'_>,
    ) -> Result<MeasurementRecord> {
        let split = Split::new(self.num_qubits, qubits)?;
        for v in basis {
            if v.len() != split.sub.len() {
                return Err(Error::LengthMismatch {
                    expected: split.sub.len(),
                    found: v.len(),
                });
            }
        }
        let probabilities: Vec<f64> = basis
            .iter()
            .map(|v| norm_sqr(&split.contract(&self.amplitudes, v)))
            .collect();
        let (outcome, probability) = select(&probabilities, selection)?;
        let vector = &basis[outcome];
        let remainder = split.contract(&self.amplitudes, vector);
        let scale = 1.0 / probability.sqrt();
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for (&s, &v) in split.sub.iter().zip(vector) {
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (&r, &x) in split.rest.iter().zip(&remainder) {
                amplitudes[s | r] = v * x * scale;
            }
        }
        Ok(MeasurementRecord {
            outcome,
            probability,
            post_state: self.projected(amplitudes),
        })
    }

    fn projected(&self, amplitudes: Vec<Complex64>) -> QuantumState {
        let mut state = QuantumState {
            num_qubits: self.num_qubits,
            amplitudes,
            registers: self.registers.clone(),
        };
        let n = state.norm();
        state.renormalize(n);
        state
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::DimensionMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<a|b>|^2`.
    pub fn fidelity(&self, other: &QuantumState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Partial trace over every qubit not in `keep`; rows and columns are
    /// big-endian over `keep` in list order.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let split = Split::new(self.num_qubits, keep)?;
        let dim = split.sub.len();
        let mut rho = DensityMatrix::zeros(dim, dim);
        for (i, &si) in split.sub.iter().enumerate() {
            for (j, &sj) in split.sub.iter().enumerate().skip(i) {
                let v: Complex64 = split
                    .rest
                    .iter()
                    .map(|&r| self.amplitudes[si | r] * self.amplitudes[sj | r].conj())
                    .sum();
                rho[(i, j)] = v;
                rho[(j, i)] = v.conj();
            }
        }
        Ok(rho)
    }

    /// `<target| rho_keep |target>`: fidelity of the marginal on `keep` with a pure target.
    pub fn marginal_fidelity(&self, keep: &[usize], target: &QuantumState) -> Result<f64> {
        if keep.len() != target.num_qubits {
            return Err(Error::DimensionMismatch {
                left: keep.len(),
                right: target.num_qubits,
            });
        }
        let rho = self.reduced_density(keep)?;
        let t = &target.amplitudes;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..t.len() {
            for j in 0..t.len() {
                acc += t[i].conj() * rho[(i, j)] * t[j];
            }
        }
        Ok(acc.re)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    fn renormalize(&mut self, norm: f64) {
        if norm != 1.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= norm);
        }
    }
}

/// Trace distance `1/2 ||a - b||_1` between Hermitian matrices.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    let diff = a - b;
    diff.symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .sum::<f64>()
        / 2.0
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(rho: &DensityMatrix) -> f64 {
    rho.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `I / dim`.
pub fn maximally_mixed(dim: usize) -> DensityMatrix {
    DensityMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0)
}

pub(crate) fn norm(amplitudes: &[Complex64]) -> f64 {
    norm_sqr(amplitudes).sqrt()
}

fn norm_sqr(amplitudes: &[Complex64]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum()
}

fn qubit_count(len: usize) -> Result<usize> {
    if !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    let n = len.trailing_zeros() as usize;
    check_size(n)?;
    Ok(n)
}

fn check_size(num_qubits: usize) -> Result<()> {
    if num_qubits > MAX_QUBITS {
        return Err(Error::TooManyQubits {
            requested: num_qubits,
            limit: MAX_QUBITS,
        });
    }
    Ok(())
}

fn check_distinct(num_qubits: usize, qubits: &[usize]) -> Result<()> {
    for (i, &q) in qubits.iter().enumerate() {
        if q >= num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: q,
                num_qubits,
            });
        }
        if qubits[..i].contains(&q) {
            return Err(Error::DuplicateQubit(q));
        }
    }
    Ok(())
}

fn gaussian(rng: &mut dyn RngCore) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn select(probabilities: &[f64], selection: Selection<'_>) -> Result<(usize, f64)> {
    match selection {
        Selection::Force(outcome) => {
            let p = *probabilities.get(outcome).ok_or(Error::OutcomeOutOfRange {
                outcome,
                count: probabilities.len(),
            })?;
            if p < IMPOSSIBLE_PROBABILITY {
                return Err(Error::ImpossibleOutcome {
                    outcome,
                    probability: p,
                });
            }
            Ok((outcome, p))
        }
        Selection::Sample(rng) => {
            let total: f64 = probabilities.iter().sum();
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut last = 0;
            for (i, &p) in probabilities.iter().enumerate() {
                if p < IMPOSSIBLE_PROBABILITY {
                    continue;
                }
                acc += p;
                last = i;
                if target < acc {
                    return Ok((i, p));
                }
            }
            // float round-off at the top of the cumulative sum
            Ok((last, probabilities[last]))
        }
    }
}

/// Index offsets for a subsystem and its complement; any full index is
/// `sub[s] | rest[r]`.
struct Split {
    sub: Vec<usize>,
    rest: Vec<usize>,
}

impl Split {
    fn new(num_qubits: usize, qubits: &[usize]) -> Result<Self> {
        check_distinct(num_qubits, qubits)?;
        let complement: Vec<usize> = (0..num_qubits).filter(|q| !qubits.contains(q)).collect();
        Ok(Self {
            sub: offsets(num_qubits, qubits),
            rest: offsets(num_qubits, &complement),
        })
    }

    /// `(<v| (x) I) |psi>` as a vector over the complement.
    fn contract(&self, psi: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.rest.len()];
        for (&s, c) in self.sub.iter().zip(v) {
            if *c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let c = c.conj();
            for (o, &r) in out.iter_mut().zip(&self.rest) {
                *o += c * psi[s | r];
            }
        }
        out
    }
}

fn offsets(num_qubits: usize, positions: &[usize]) -> Vec<usize> {
    let k = positions.len();
    (0..1usize << k)
        .map(|x| {
            positions
                .iter()
                .enumerate()
                .filter(|(j, _)| (x >> (k - 1 - j)) & 1 == 1)
                .fold(0, |off, (_, &q)| off | 1 << (num_qubits - 1 - q))
        })
        .collect()
}
