//! Quaternary Pauli strings and the generalized Bell state (GBS) basis.
//!
//! Digit values index the real single-qubit operators
//! `0 -> I`, `1 -> Z`, `2 -> X`, `3 -> XZ` (the product `X·Z`, which maps
//! `|0> -> |1>` and `|1> -> -|0>`). Because every operator in the set is real,
//! products only ever pick up a `±1` sign, which [`PauliString`] tracks.
//!
//! A string's digits are big-endian: digit 0 is the most significant
//! quaternary digit of the string's index and acts on the first target qubit.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{MeasurementRecord, Mode, QuantumState, RegisterMap, Selection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
#[repr(u8)]
pub enum Pauli {
    I = 0,
    Z = 1,
    X = 2,
    XZ = 3,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::Z, Pauli::X, Pauli::XZ];

    pub fn from_index(index: u8) -> Result<Self> {
        Self::ALL
            .get(index as usize)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index: index as usize,
                digits: 1,
            })
    }

    pub fn index(self) -> u8 {
        self as u8
    }

    pub const fn matrix(self) -> Matrix2 {
        match self {
            Pauli::I => [[1, 0], [0, 1]],
            Pauli::Z => [[1, 0], [0, -1]],
            Pauli::X => [[0, 1], [1, 0]],
            Pauli::XZ => [[0, -1], [1, 0]],
        }
    }

    /// `self · other = sign · product`.
    pub fn product(self, other: Pauli) -> (Pauli, Sign) {
        PRODUCT_TABLE[self as usize][other as usize]
    }

    /// Adjoint as a signed operator. Only `XZ` is not self-adjoint:
    /// `(XZ)† = Z X = -XZ`.
    pub fn dagger(self) -> (Pauli, Sign) {
        match self {
            Pauli::XZ => (Pauli::XZ, Sign::Minus),
            p => (p, Sign::Plus),
        }
    }
}

impl TryFrom<u8> for Pauli {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Pauli::from_index(v)
    }
}

impl From<Pauli> for u8 {
    fn from(p: Pauli) -> u8 {
        p as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(Error::Parse(format!("sign must be ±1, got {v}"))),
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

pub type Matrix2 = [[i8; 2]; 2];

pub type ProductTable = [[(Pauli, Sign); 4]; 4];

/// `PRODUCT_TABLE[a][b] = (c, sign)` with `σa σb = sign · σc`.
pub const PRODUCT_TABLE: ProductTable = {
    use Pauli::*;
    use Sign::*;
    [
        [(I, Plus), (Z, Plus), (X, Plus), (XZ, Plus)],
        [(Z, Plus), (I, Plus), (XZ, Minus), (X, Minus)],
        [(X, Plus), (XZ, Plus), (I, Plus), (Z, Plus)],
        [(XZ, Plus), (X, Plus), (Z, Minus), (I, Minus)],
    ]
};

const _: () = assert!(table_matches_matrices(&PRODUCT_TABLE).is_none());

const fn matmul(a: Matrix2, b: Matrix2) -> Matrix2 {
    let mut out = [[0i8; 2]; 2];
    let mut i = 0;
    while i < 2 {
        let mut j = 0;
        while j < 2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            j += 1;
        }
        i += 1;
    }
    out
}

/// Checks a product table against explicit 2×2 matrix multiplication.
/// Returns the first `(a, b)` entry that disagrees.
pub const fn table_matches_matrices(table: &ProductTable) -> Option<(u8, u8)> {
    let mut a = 0;
    while a < 4 {
        let mut b = 0;
        while b < 4 {
            let expected = matmul(Pauli::ALL[a].matrix(), Pauli::ALL[b].matrix());
            let (c, sign) = table[a][b];
            let s: i8 = match sign {
                Sign::Plus => 1,
                Sign::Minus => -1,
            };
            let m = c.matrix();
            let mut i = 0;
            while i < 2 {
                let mut j = 0;
                while j < 2 {
                    if expected[i][j] != s * m[i][j] {
                        return Some((a as u8, b as u8));
                    }
                    j += 1;
                }
                i += 1;
            }
            b += 1;
        }
        a += 1;
    }
    None
}

/// Big-endian quaternary digits of `index`, `k` of them.
pub fn digits_of(index: usize, k: usize) -> Result<Vec<Pauli>> {
    if k < usize::BITS as usize / 2 && index >= 1usize << (2 * k) {
        return Err(Error::IndexOutOfRange { index, digits: k });
    }
    Ok((0..k)
        .map(|j| Pauli::ALL[(index >> (2 * (k - 1 - j))) & 3])
        .collect())
}

pub fn index_of(digits: &[Pauli]) -> usize {
    digits.iter().fold(0, |acc, &p| acc * 4 + p as usize)
}

/// Index into a 4^k-element GBS family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GbsIndex {
    value: usize,
    half: usize,
}

impl GbsIndex {
    pub fn new(value: usize, half: usize) -> Result<Self> {
        if value >= family_size(half) {
            return Err(Error::IndexOutOfRange {
                index: value,
                digits: half,
            });
        }
        Ok(Self { value, half })
    }

    pub fn value(self) -> usize {
        self.value
    }

    pub fn half(self) -> usize {
        self.half
    }

    pub fn string(self) -> PauliString {
        PauliString::from_index(self.value, self.half).expect("validated on construction")
    }
}

/// Number of GBS states over `2k` qubits.
pub fn family_size(k: usize) -> usize {
    1usize << (2 * k)
}

/// Tensor product of single-qubit Paulis with a tracked global sign.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    digits: Vec<Pauli>,
    sign: Sign,
}

impl PauliString {
    pub fn new(digits: Vec<Pauli>, sign: Sign) -> Self {
        Self { digits, sign }
    }

    pub fn identity(len: usize) -> Self {
        Self::new(vec![Pauli::I; len], Sign::Plus)
    }

    /// `U^(index)` over `k` qubits, positive sign.
    pub fn from_index(index: usize, k: usize) -> Result<Self> {
        Ok(Self::new(digits_of(index, k)?, Sign::Plus))
    }

    pub fn digits(&self) -> &[Pauli] {
        &self.digits
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Index of the unsigned operator.
    pub fn index(&self) -> usize {
        index_of(&self.digits)
    }

    /// Operator product `self · other`, digit by digit.
    pub fn compose(&self, other: &PauliString) -> Result<PauliString> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        let mut sign = self.sign * other.sign;
        let digits = self
            .digits
            .iter()
            .zip(&other.digits)
            .map(|(&a, &b)| {
                let (c, s) = a.product(b);
                sign = sign * s;
                c
            })
            .collect();
        Ok(PauliString::new(digits, sign))
    }

    pub fn dagger(&self) -> PauliString {
        let mut sign = self.sign;
        let digits = self
            .digits
            .iter()
            .map(|&p| {
                let (q, s) = p.dagger();
                sign = sign * s;
                q
            })
            .collect();
        PauliString::new(digits, sign)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.sign == Sign::Minus { "-" } else { "+" })?;
        for p in &self.digits {
            write!(f, "{}", p.index())?;
        }
        Ok(())
    }
}

/// GBS `U^(index)` on the second half of `2^{-k/2} Σ_x |x>|x>`, over `2k`
/// unlabeled qubits (first half, then second half).
pub fn build_gbs(k: usize, index: usize) -> Result<QuantumState> {
    let string = PauliString::from_index(index, k)?;
    let dim = 1usize << k;
    let amp = Complex64::new((dim as f64).sqrt().recip(), 0.0);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim * dim];
    for x in 0..dim {
        amplitudes[x * dim + x] = amp;
    }
    let root = QuantumState::new(amplitudes, RegisterMap::unlabeled())?;
    let second: Vec<usize> = (k..2 * k).collect();
    root.apply_string(&string, &second)
}

/// [`build_gbs`] with the halves labeled `first` and `second`.
pub fn build_gbs_labeled(
    k: usize,
    index: usize,
    first: Mode,
    second: Mode,
) -> Result<QuantumState> {
    build_gbs(k, index)?.with_registers(RegisterMap::blocks(&[(first, k), (second, k)])?)
}

/// All 4^k GBS amplitude vectors, in index order.
pub fn gbs_basis(k: usize) -> Result<Vec<Vec<Complex64>>> {
    (0..family_size(k))
        .map(|i| build_gbs(k, i).map(QuantumState::into_amplitudes))
        .collect()
}

/// Projective measurement in the GBS basis over `half1 ++ half2`; the
/// outcome is the GBS index.
pub fn gbs_measure(
    state: &QuantumState,
    half1: &[usize],
    half2: &[usize],
    selection: Selection<'_>,
) -> Result<MeasurementRecord> {
    if half1.len() != half2.len() {
        return Err(Error::LengthMismatch {
            expected: half1.len(),
            found: half2.len(),
        });
    }
    let qubits: Vec<usize> = half1.iter().chain(half2).copied().collect();
    state.measure_in_basis(&qubits, &gbs_basis(half1.len())?, selection)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn string(digits: &[u8], sign: Sign) -> PauliString {
        PauliString::new(
            digits
                .iter()
                .map(|&d| Pauli::from_index(d).unwrap())
                .collect(),
            sign,
        )
    }

    #[test]
    fn digits_examples() {
        assert_eq!(digits_of(0, 3).unwrap(), vec![Pauli::I; 3]);
        assert_eq!(digits_of(9, 2).unwrap(), vec![Pauli::X, Pauli::Z]);
        assert_eq!(digits_of(15, 2).unwrap(), vec![Pauli::XZ, Pauli::XZ]);
        assert!(digits_of(16, 2).is_err());
        assert!(GbsIndex::new(4, 1).is_err());
        assert_eq!(
            GbsIndex::new(9, 2).unwrap().string(),
            string(&[2, 1], Sign::Plus)
        );
    }

    #[test]
    fn product_examples() {
        for b in Pauli::ALL {
            assert_eq!(Pauli::I.product(b), (b, Sign::Plus));
        }
        assert_eq!(Pauli::Z.product(Pauli::X), (Pauli::XZ, Sign::Minus));
        assert_eq!(Pauli::XZ.product(Pauli::XZ), (Pauli::I, Sign::Minus));
    }

    #[test]
    fn product_table_matches_matrix_oracle() {
        assert_eq!(table_matches_matrices(&PRODUCT_TABLE), None);
        let mut corrupted = PRODUCT_TABLE;
        corrupted[1][2] = (Pauli::XZ, Sign::Plus);
        assert_eq!(table_matches_matrices(&corrupted), Some((1, 2)));
    }

    #[test]
    fn compose_examples() {
        let s = string(&[3, 1, 2], Sign::Minus);
        assert_eq!(s.compose(&PauliString::identity(3)).unwrap(), s);
        assert_eq!(
            string(&[1], Sign::Plus)
                .compose(&string(&[2], Sign::Plus))
                .unwrap(),
            string(&[3], Sign::Minus)
        );
        assert_eq!(
            string(&[3, 1], Sign::Plus)
                .compose(&string(&[3, 2], Sign::Plus))
                .unwrap(),
            string(&[0, 3], Sign::Plus)
        );
        assert!(s.compose(&PauliString::identity(2)).is_err());
    }

    #[test]
    fn dagger_examples() {
        assert_eq!(PauliString::identity(2).dagger(), PauliString::identity(2));
        assert_eq!(string(&[3], Sign::Plus).dagger(), string(&[3], Sign::Minus));
        assert_eq!(
            string(&[1, 2], Sign::Plus).dagger(),
            string(&[1, 2], Sign::Plus)
        );
    }

    #[test]
    fn bell_states() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let b0 = build_gbs(1, 0).unwrap();
        let b3 = build_gbs(1, 3).unwrap();
        let expect = |s: &QuantumState, e: [f64; 4]| {
            for (a, x) in s.amplitudes().iter().zip(e) {
                assert!((a - Complex64::new(x, 0.0)).norm() < 1e-15);
            }
        };
        expect(&b0, [h, 0.0, 0.0, h]);
        expect(&build_gbs(1, 1).unwrap(), [h, 0.0, 0.0, -h]);
        expect(&build_gbs(1, 2).unwrap(), [0.0, h, h, 0.0]);
        expect(&b3, [0.0, h, -h, 0.0]);
    }

    #[test]
    fn gbs_k2_root() {
        // (1/2)(|0000> + |0101> + |1010> + |1111>) over (A'1 A'2 B'1 B'2)
        let s = build_gbs_labeled(2, 0, Mode::APrime, Mode::BPrime).unwrap();
        for i in 0..16 {
            let e = if [0b0000, 0b0101, 0b1010, 0b1111].contains(&i) {
                0.5
            } else {
                0.0
            };
            assert!((s.amplitudes()[i] - Complex64::new(e, 0.0)).norm() < 1e-15);
        }
        assert_eq!(s.positions(Mode::BPrime).unwrap(), &[2, 3]);
    }

    #[test]
    fn gbs_orthonormal() {
        for k in 1..=3 {
            let basis = gbs_basis(k).unwrap();
            for (i, u) in basis.iter().enumerate() {
                for (j, v) in basis.iter().enumerate() {
                    let g: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (g - Complex64::new(e, 0.0)).norm() < 1e-12,
                        "k={k} ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn gbs_measure_eigenstates() {
        for k in 1..=2 {
            for j in 0..family_size(k) {
                let s = build_gbs(k, j).unwrap();
                let h1: Vec<usize> = (0..k).collect();
                let h2: Vec<usize> = (k..2 * k).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(j as u64);
                let rec = gbs_measure(&s, &h1, &h2, Selection::Sample(&mut rng)).unwrap();
                assert_eq!(rec.outcome, j);
                assert!((rec.probability - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gbs_measure_teleport_input() {
        // |xi>_A (x) |B0>_{A'B'}: measuring (A, A') gives each r with 1/4
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let xi = QuantumState::random(1, &mut rng).unwrap();
        let s = xi.tensor(&build_gbs(1, 0).unwrap()).unwrap();
        let mut total = 0.0;
        for r in 0..4 {
            let rec = gbs_measure(&s, &[0], &[1], Selection::Force(r)).unwrap();
            assert!((rec.probability - 0.25).abs() < 1e-12);
            total += rec.probability;
        }
        assert!((total - 1.0).abs() < 1e-12);
        assert!(gbs_measure(&s, &[0], &[1, 2], Selection::Force(0)).is_err());
    }

    fn arb_string(len: usize) -> impl Strategy<Value = PauliString> {
        (proptest::collection::vec(0u8..4, len), any::<bool>())
            .prop_map(|(d, neg)| string(&d, if neg { Sign::Minus } else { Sign::Plus }))
    }

    proptest! {
        #[test]
        fn digits_round_trip(k in 0usize..8, seed in any::<u64>()) {
            let index = (seed as usize) % family_size(k);
            prop_assert_eq!(index_of(&digits_of(index, k).unwrap()), index);
        }

        #[test]
        fn dagger_inverts(s in arb_string(4), amp_seed in any::<u64>()) {
            prop_assert_eq!(s.compose(&s.dagger()).unwrap(), PauliString::identity(4));
            let mut rng = ChaCha8Rng::seed_from_u64(amp_seed);
            let psi = QuantumState::random(4, &mut rng).unwrap();
            let back = psi.apply_string(&s.dagger().compose(&s).unwrap(), &[0, 1, 2, 3]).unwrap();
            prop_assert_eq!(back, psi);
        }

        #[test]
        fn compose_matches_sequential_application(a in arb_string(3), b in arb_string(3), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = QuantumState::random(3, &mut rng).unwrap();
            let q = [0, 1, 2];
            let seq = psi.apply_string(&b, &q).unwrap().apply_string(&a, &q).unwrap();
            let once = psi.apply_string(&a.compose(&b).unwrap(), &q).unwrap();
            prop_assert_eq!(seq, once);
        }

        #[test]
        fn gbs_is_string_on_root(k in 1usize..=3, seed in any::<u64>()) {
            let i = (seed as usize) % family_size(k);
            let second: Vec<usize> = (k..2 * k).collect();
            let expected = build_gbs(k, 0).unwrap()
                .apply_string(&PauliString::from_index(i, k).unwrap(), &second).unwrap();
            prop_assert_eq!(build_gbs(k, i).unwrap(), expected);
        }
    }
}
