//! Exact Pauli algebra over sparse qubit supports.
//!
//! A [`PauliString`] is a phase in `{+1, +i, -1, -i}` times a tensor product of
//! single-qubit letters. Letters are stored sparsely, so strings can live on
//! arbitrary logical qubit indices (the machine gun numbers photons from 0
//! upward and never reuses an index).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use thiserror::Error;

/// Single-qubit Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum PauliLetter {
    #[default]
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    pub const NON_IDENTITY: [PauliLetter; 3] = [PauliLetter::X, PauliLetter::Y, PauliLetter::Z];

    /// Symplectic bits `(x, z)`; `Y` is `(1, 1)`.
    #[inline]
    pub const fn bits(self) -> (bool, bool) {
        match self {
            PauliLetter::I => (false, false),
            PauliLetter::X => (true, false),
            PauliLetter::Y => (true, true),
            PauliLetter::Z => (false, true),
        }
    }

    #[inline]
    pub const fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => PauliLetter::I,
            (true, false) => PauliLetter::X,
            (true, true) => PauliLetter::Y,
            (false, true) => PauliLetter::Z,
        }
    }

    #[inline]
    pub fn commutes_with(self, other: PauliLetter) -> bool {
        self == PauliLetter::I || other == PauliLetter::I || self == other
    }

    /// `self * other = i^k * letter`, returned as `(k mod 4, letter)`.
    #[inline]
    pub fn product(self, other: PauliLetter) -> (Phase, PauliLetter) {
        use PauliLetter::*;
        let k = match (self, other) {
            (X, Y) | (Y, Z) | (Z, X) => 1,
            (Y, X) | (Z, Y) | (X, Z) => 3,
            _ => 0,
        };
        let (ax, az) = self.bits();
        let (bx, bz) = other.bits();
        (Phase(k), PauliLetter::from_bits(ax ^ bx, az ^ bz))
    }

    pub fn symbol(self) -> char {
        match self {
            PauliLetter::I => 'I',
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }
}

/// Global phase `i^k`, `k` taken mod 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    #[inline]
    pub const fn from_power(k: u8) -> Self {
        Phase(k & 3)
    }

    /// Exponent `k` of `i^k`.
    #[inline]
    pub const fn power(self) -> u8 {
        self.0
    }

    #[inline]
    pub const fn is_real(self) -> bool {
        self.0 & 1 == 0
    }

    /// `Some(+1 / -1)` for a real phase.
    pub const fn sign(self) -> Option<i8> {
        match self.0 {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }
}

impl Mul for Phase {
    type Output = Phase;
    #[inline]
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) & 3)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        })
    }
}

/// Phase times a sparse tensor product of Pauli letters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PauliString {
    phase: Phase,
    letters: BTreeMap<usize, PauliLetter>,
}

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(qubit: usize, letter: PauliLetter) -> Self {
        Self::from_letters([(qubit, letter)])
    }

    /// Builds a `+1`-phase string; identity letters are dropped and a repeated
    /// qubit keeps its last letter.
    pub fn from_letters<I: IntoIterator<Item = (usize, PauliLetter)>>(letters: I) -> Self {
        let letters = letters
            .into_iter()
            .filter(|&(_, l)| l != PauliLetter::I)
            .collect();
        PauliString {
            phase: Phase::ONE,
            letters,
        }
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    /// Cluster stabilizer `K_i = Z_{i-1} X_i Z_{i+1}`. For `i = 0` the left
    /// neighbour does not exist and the boundary generator `X_0 Z_1` is returned.
    pub fn cluster_stabilizer(i: usize) -> Self {
        let mut letters = vec![(i, PauliLetter::X), (i + 1, PauliLetter::Z)];
        if i > 0 {
            letters.push((i - 1, PauliLetter::Z));
        }
        Self::from_letters(letters)
    }

    #[inline]
    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Letter acting on `qubit` (identity off the support).
    #[inline]
    pub fn get(&self, qubit: usize) -> PauliLetter {
        self.letters.get(&qubit).copied().unwrap_or(PauliLetter::I)
    }

    /// Non-identity positions in ascending order.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.letters.keys().copied()
    }

    /// `(qubit, letter)` pairs over the support in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, PauliLetter)> + '_ {
        self.letters.iter().map(|(&q, &l)| (q, l))
    }

    pub fn weight(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Hermitian strings have a real phase.
    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let (small, large) = if self.weight() <= other.weight() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .iter()
            .filter(|&(q, l)| !l.commutes_with(large.get(q)))
            .count()
            % 2
            == 0
    }

    /// Exact product `self * other`.
    pub fn multiply(&self, other: &PauliString) -> PauliString {
        let mut phase = self.phase * other.phase;
        let mut letters = self.letters.clone();
        for (&q, &b) in &other.letters {
            let a = letters.get(&q).copied().unwrap_or(PauliLetter::I);
            let (p, c) = a.product(b);
            phase = phase * p;
            if c == PauliLetter::I {
                letters.remove(&q);
            } else {
                letters.insert(q, c);
            }
        }
        PauliString { phase, letters }
    }

    /// Copy with every qubit index shifted by `offset`.
    pub fn shifted(&self, offset: usize) -> PauliString {
        PauliString {
            phase: self.phase,
            letters: self.letters.iter().map(|(&q, &l)| (q + offset, l)).collect(),
        }
    }
}

impl Mul for &PauliString {
    type Output = PauliString;
    fn mul(self, rhs: &PauliString) -> PauliString {
        self.multiply(rhs)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.phase)?;
        if self.letters.is_empty() {
            return f.write_str("I");
        }
        for (i, (q, l)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}{}", l.symbol(), q)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot parse Pauli string {input:?}: {reason}")]
pub struct ParsePauliError {
    input: String,
    reason: &'static str,
}

/// Parses strings such as `"Z0 X1 Z2"`, `"-i Y3"` or `"+I"`.
impl FromStr for PauliString {
    type Err = ParsePauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason| ParsePauliError {
            input: s.to_owned(),
            reason,
        };
        let mut rest = s.trim();
        let mut phase = Phase::ONE;
        if let Some(r) = rest.strip_prefix('-') {
            phase = Phase::MINUS_ONE;
            rest = r.trim_start();
        } else if let Some(r) = rest.strip_prefix('+') {
            rest = r.trim_start();
        }
        if let Some(r) = rest.strip_prefix('i') {
            phase = phase * Phase::I;
            rest = r.trim_start();
        }
        let mut out = PauliString::identity().with_phase(phase);
        for token in rest.split_whitespace() {
            let mut chars = token.chars();
            let letter = match chars.next() {
                Some('I') => PauliLetter::I,
                Some('X') => PauliLetter::X,
                Some('Y') => PauliLetter::Y,
                Some('Z') => PauliLetter::Z,
                _ => return Err(err("expected a letter in IXYZ")),
            };
            let idx = chars.as_str();
            if letter == PauliLetter::I && idx.is_empty() {
                continue;
            }
            let q: usize = idx.parse().map_err(|_| err("expected a qubit index"))?;
            if out.letters.contains_key(&q) {
                return Err(err("qubit index repeated"));
            }
            if letter != PauliLetter::I {
                out.letters.insert(q, letter);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn letter_algebra() {
        use PauliLetter::*;
        assert_eq!(X.product(Y), (Phase::I, Z));
        assert_eq!(Y.product(Z), (Phase::I, X));
        assert_eq!(Z.product(X), (Phase::I, Y));
        assert_eq!(Y.product(X), (Phase::MINUS_I, Z));
        for a in [I, X, Y, Z] {
            assert_eq!(a.product(a), (Phase::ONE, I));
            assert!(a.commutes_with(a));
            assert!(a.commutes_with(I));
        }
        assert!(!X.commutes_with(Z));
    }

    #[test]
    fn adjacent_cluster_stabilizers_multiply_to_zyyz() {
        let k1 = PauliString::cluster_stabilizer(1);
        let k2 = PauliString::cluster_stabilizer(2);
        assert_eq!(k1, p("Z0 X1 Z2"));
        assert_eq!(&k1 * &k2, p("Z0 Y1 Y2 Z3"));
        assert_eq!((&k1 * &k2).phase(), Phase::ONE);
    }

    #[test]
    fn x_times_z_is_minus_i_y() {
        assert_eq!(&p("X0") * &p("Z0"), p("-i Y0"));
    }

    #[test]
    fn boundary_generator() {
        assert_eq!(PauliString::cluster_stabilizer(0), p("X0 Z1"));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("Q1".parse::<PauliString>().is_err());
        assert!("X1 Z1".parse::<PauliString>().is_err());
        assert!("X".parse::<PauliString>().is_err());
        assert_eq!(p("+I"), PauliString::identity());
        assert_eq!(p("-i Y3").to_string(), "-iY3");
    }

    fn letter() -> impl Strategy<Value = PauliLetter> {
        prop_oneof![
            Just(PauliLetter::I),
            Just(PauliLetter::X),
            Just(PauliLetter::Y),
            Just(PauliLetter::Z)
        ]
    }

    fn string() -> impl Strategy<Value = PauliString> {
        (prop::collection::vec((0usize..6, letter()), 0..6), 0u8..4)
            .prop_map(|(ls, k)| PauliString::from_letters(ls).with_phase(Phase::from_power(k)))
    }

    proptest! {
        #[test]
        fn swapped_product_differs_by_commutation_sign(a in string(), b in string()) {
            let ab = &a * &b;
            let ba = &b * &a;
            let expected = if a.commutes_with(&b) { Phase::ONE } else { Phase::MINUS_ONE };
            prop_assert_eq!(ab.clone().with_phase(Phase::ONE), ba.clone().with_phase(Phase::ONE));
            prop_assert_eq!(ab.phase(), ba.phase() * expected);
        }

        #[test]
        fn product_is_associative(a in string(), b in string(), c in string()) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        }

        #[test]
        fn support_of_product_within_union(a in string(), b in string()) {
            let ab = &a * &b;
            for q in ab.support() {
                prop_assert!(a.get(q) != PauliLetter::I || b.get(q) != PauliLetter::I);
            }
        }

        #[test]
        fn hermitian_strings_are_involutions(a in string()) {
            let h = a.clone().with_phase(Phase::ONE);
            prop_assert_eq!(&h * &h, PauliString::identity());
        }
    }
}
