//! Bounded-window stabilizer state ("frontier").
//!
//! The frame holds the stabilizer generators of the not-yet-finalized tail of
//! the cluster. Active qubits are assigned bit positions in emission order, so
//! each generator is a pair of `u64` masks plus a sign. Sixty-four active
//! qubits is a hard ceiling; the machine gun never needs more than two.
//!
//! Fewer generators than qubits encodes a mixed state, which is what the exact
//! [`StabilizerFrame::trace_out`] produces.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::pauli::{Phase, PauliLetter, PauliString};

pub const MAX_ACTIVE_QUBITS: usize = 64;

/// Single-qubit measurement basis. Codes match the record payload encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    X = 1,
    Y = 2,
    Z = 3,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    #[inline]
    pub const fn code(self) -> u8 {
        self as u8
    }

    #[inline]
    pub const fn from_code(code: u8) -> Option<Basis> {
        match code {
            1 => Some(Basis::X),
            2 => Some(Basis::Y),
            3 => Some(Basis::Z),
            _ => None,
        }
    }

    #[inline]
    pub const fn letter(self) -> PauliLetter {
        match self {
            Basis::X => PauliLetter::X,
            Basis::Y => PauliLetter::Y,
            Basis::Z => PauliLetter::Z,
        }
    }

    pub const fn symbol(self) -> char {
        match self {
            Basis::X => 'X',
            Basis::Y => 'Y',
            Basis::Z => 'Z',
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Eigenvalue of a single-qubit Pauli measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    #[inline]
    pub const fn from_bit(minus: bool) -> Outcome {
        if minus {
            Outcome::Minus
        } else {
            Outcome::Plus
        }
    }

    /// `true` for `-1`.
    #[inline]
    pub const fn bit(self) -> bool {
        matches!(self, Outcome::Minus)
    }

    #[inline]
    pub const fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("qubit {got} emitted out of order (expected {expected})")]
    NonConsecutive { expected: usize, got: usize },
    #[error("qubit {0} is not active in the frame")]
    Inactive(usize),
    #[error("frame already holds {MAX_ACTIVE_QUBITS} active qubits")]
    WindowFull,
    #[error("observable {0} is not Hermitian")]
    NotHermitian(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Generator {
    x: u64,
    z: u64,
    neg: bool,
}

impl Generator {
    #[inline]
    fn single(bit: u64, basis: Basis, neg: bool) -> Self {
        let (x, z) = basis.letter().bits();
        Generator {
            x: if x { bit } else { 0 },
            z: if z { bit } else { 0 },
            neg,
        }
    }

    #[inline]
    fn anticommutes(&self, x: u64, z: u64) -> bool {
        ((self.x & z) ^ (self.z & x)).count_ones() & 1 == 1
    }

    /// `self <- self * other` for commuting Hermitian strings.
    #[inline]
    fn mul_assign(&mut self, other: &Generator) {
        let (ax, az, bx, bz) = (self.x, self.z, other.x, other.z);
        let (xa, ya, za) = (ax & !az, ax & az, !ax & az);
        let (xb, yb, zb) = (bx & !bz, bx & bz, !bx & bz);
        let plus = (xa & yb) | (ya & zb) | (za & xb);
        let minus = (ya & xb) | (za & yb) | (xa & zb);
        let k = 2 * (self.neg as u32)
            + 2 * (other.neg as u32)
            + plus.count_ones()
            + 3 * minus.count_ones();
        debug_assert!(k % 2 == 0, "product of anticommuting generators");
        self.x = ax ^ bx;
        self.z = az ^ bz;
        self.neg = k % 4 == 2;
    }

    #[inline]
    fn letter(&self, bit: u64) -> (bool, bool) {
        (self.x & bit != 0, self.z & bit != 0)
    }

    #[inline]
    fn remove_bit(&mut self, slot: usize) {
        let low = (1u64 << slot) - 1;
        self.x = (self.x & low) | ((self.x >> 1) & !low);
        self.z = (self.z & low) | ((self.z >> 1) & !low);
    }

    #[inline]
    fn packed(&self) -> u128 {
        (self.x as u128) | ((self.z as u128) << 64)
    }
}

/// Stabilizer description of the active (un-finalized) qubits.
#[derive(Clone, Debug, Default)]
pub struct StabilizerFrame {
    qubits: Vec<usize>,
    gens: Vec<Generator>,
}

impl StabilizerFrame {
    pub fn new() -> Self {
        Self::default()
    }

    /// Active logical qubit indices in ascending order.
    pub fn active_qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn generator_count(&self) -> usize {
        self.gens.len()
    }

    pub fn is_pure(&self) -> bool {
        self.gens.len() == self.qubits.len()
    }

    pub fn is_active(&self, qubit: usize) -> bool {
        self.slot(qubit).is_ok()
    }

    #[inline]
    fn slot(&self, qubit: usize) -> Result<usize, FrameError> {
        // Window is tiny; a linear scan beats a map here.
        self.qubits
            .iter()
            .position(|&q| q == qubit)
            .ok_or(FrameError::Inactive(qubit))
    }

    /// Generators as Pauli strings over logical indices.
    pub fn generators(&self) -> Vec<PauliString> {
        self.gens.iter().map(|g| self.to_string_op(g)).collect()
    }

    fn to_string_op(&self, g: &Generator) -> PauliString {
        let letters = self.qubits.iter().enumerate().map(|(slot, &q)| {
            let (x, z) = g.letter(1 << slot);
            (q, PauliLetter::from_bits(x, z))
        });
        let phase = if g.neg { Phase::MINUS_ONE } else { Phase::ONE };
        PauliString::from_letters(letters).with_phase(phase)
    }

    fn masks(&self, p: &PauliString) -> Result<(u64, u64), FrameError> {
        let mut x = 0;
        let mut z = 0;
        for (q, l) in p.iter() {
            let bit = 1u64 << self.slot(q)?;
            let (lx, lz) = l.bits();
            if lx {
                x |= bit;
            }
            if lz {
                z |= bit;
            }
        }
        Ok((x, z))
    }

    /// Extends the linear cluster by qubit `index`: prepares `|+>` and applies
    /// a controlled-phase to the previous qubit, so the stabilizers follow
    /// `K_i = Z_{i-1} X_i Z_{i+1}` on the un-finalized qubits.
    pub fn emit_cluster_qubit(&mut self, index: usize) -> Result<(), FrameError> {
        let prev_slot = match self.qubits.last() {
            Some(&last) if index != last + 1 => {
                return Err(FrameError::NonConsecutive {
                    expected: last + 1,
                    got: index,
                })
            }
            Some(_) => Some(self.qubits.len() - 1),
            None => None,
        };
        if self.qubits.len() == MAX_ACTIVE_QUBITS {
            return Err(FrameError::WindowFull);
        }
        let slot = self.qubits.len();
        self.qubits.push(index);
        self.gens.push(Generator::single(1 << slot, Basis::X, false));
        if let Some(prev) = prev_slot {
            self.apply_cz(prev, slot);
        }
        self.debug_check();
        Ok(())
    }

    fn apply_cz(&mut self, a: usize, b: usize) {
        for g in &mut self.gens {
            let xa = (g.x >> a) & 1;
            let xb = (g.x >> b) & 1;
            let za = (g.z >> a) & 1;
            let zb = (g.z >> b) & 1;
            g.neg ^= (xa & xb & (za ^ zb)) == 1;
            g.z ^= (xb << a) | (xa << b);
        }
    }

    /// Conjugates the state by `p`: generators anticommuting with `p` flip sign.
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<(), FrameError> {
        let (x, z) = self.masks(p)?;
        self.apply_masks(x, z);
        Ok(())
    }

    /// Single-qubit Pauli error on an active qubit.
    pub fn apply_letter(&mut self, qubit: usize, letter: PauliLetter) -> Result<(), FrameError> {
        let bit = 1u64 << self.slot(qubit)?;
        let (lx, lz) = letter.bits();
        self.apply_masks(if lx { bit } else { 0 }, if lz { bit } else { 0 });
        Ok(())
    }

    /// `Z_a Z_b` on two active qubits.
    pub fn apply_zz(&mut self, a: usize, b: usize) -> Result<(), FrameError> {
        let z = (1u64 << self.slot(a)?) | (1u64 << self.slot(b)?);
        self.apply_masks(0, z);
        Ok(())
    }

    #[inline]
    fn apply_masks(&mut self, x: u64, z: u64) {
        for g in &mut self.gens {
            if g.anticommutes(x, z) {
                g.neg = !g.neg;
            }
        }
    }

    /// Projective measurement of `qubit` in `basis`. The qubit stays active.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        qubit: usize,
        basis: Basis,
        rng: &mut R,
    ) -> Result<Outcome, FrameError> {
        let slot = self.slot(qubit)?;
        Ok(self.measure_slot(slot, basis, rng))
    }

    fn measure_slot<R: Rng + ?Sized>(&mut self, slot: usize, basis: Basis, rng: &mut R) -> Outcome {
        let target = Generator::single(1 << slot, basis, false);
        let mut pivot = None;
        for i in 0..self.gens.len() {
            if self.gens[i].anticommutes(target.x, target.z) {
                match pivot {
                    None => pivot = Some(i),
                    Some(p) => {
                        let pg = self.gens[p];
                        self.gens[i].mul_assign(&pg);
                    }
                }
            }
        }
        let outcome = match pivot {
            Some(p) => {
                let minus = rng.random::<bool>();
                self.gens[p] = Generator { neg: minus, ..target };
                Outcome::from_bit(minus)
            }
            None => match self.eigenvalue_sign(target.x, target.z) {
                Some(neg) => Outcome::from_bit(neg),
                None => {
                    let minus = rng.random::<bool>();
                    self.gens.push(Generator { neg: minus, ..target });
                    Outcome::from_bit(minus)
                }
            },
        };
        self.debug_check();
        outcome
    }

    /// For an observable commuting with the group: `Some(neg)` when `±P` is in
    /// the stabilizer group, `None` when it is independent of it.
    fn eigenvalue_sign(&self, x: u64, z: u64) -> Option<bool> {
        // GF(2) elimination on (x|z) rows, tracking which generators combine.
        let mut basis: Vec<(u128, u64)> = Vec::with_capacity(self.gens.len());
        for (i, g) in self.gens.iter().enumerate() {
            let mut v = g.packed();
            let mut combo = 1u64 << i;
            for &(b, c) in &basis {
                if v & (b & b.wrapping_neg()) != 0 {
                    v ^= b;
                    combo ^= c;
                }
            }
            if v != 0 {
                // Keep rows in reduced form so pivots stay unique.
                let pivot = v & v.wrapping_neg();
                for (b, c) in basis.iter_mut() {
                    if *b & pivot != 0 {
                        *b ^= v;
                        *c ^= combo;
                    }
                }
                basis.push((v, combo));
            }
        }
        let mut v = (x as u128) | ((z as u128) << 64);
        let mut combo = 0u64;
        for &(b, c) in &basis {
            if v & (b & b.wrapping_neg()) != 0 {
                v ^= b;
                combo ^= c;
            }
        }
        if v != 0 {
            return None;
        }
        let mut acc = Generator {
            x: 0,
            z: 0,
            neg: false,
        };
        for (i, g) in self.gens.iter().enumerate() {
            if combo & (1 << i) != 0 {
                acc.mul_assign(g);
            }
        }
        debug_assert_eq!((acc.x, acc.z), (x, z));
        Some(acc.neg)
    }

    /// Expectation of a Hermitian Pauli observable: `+1`, `-1`, or `0`.
    pub fn expectation(&self, p: &PauliString) -> Result<i8, FrameError> {
        let sign = p
            .phase()
            .sign()
            .ok_or_else(|| FrameError::NotHermitian(p.to_string()))?;
        let (x, z) = self.masks(p)?;
        if self.gens.iter().any(|g| g.anticommutes(x, z)) {
            return Ok(0);
        }
        Ok(match self.eigenvalue_sign(x, z) {
            Some(neg) => sign * if neg { -1 } else { 1 },
            None => 0,
        })
    }

    /// Exact partial trace over `qubit`. The result may be mixed.
    pub fn trace_out(&mut self, qubit: usize) -> Result<(), FrameError> {
        let slot = self.slot(qubit)?;
        self.remove_slot(slot);
        Ok(())
    }

    /// Loss unravelling: measure in `basis`, forget the outcome, remove the
    /// qubit. Keeps a pure frame pure.
    pub fn discard<R: Rng + ?Sized>(
        &mut self,
        qubit: usize,
        basis: Basis,
        rng: &mut R,
    ) -> Result<(), FrameError> {
        let slot = self.slot(qubit)?;
        self.measure_slot(slot, basis, rng);
        self.remove_slot(slot);
        Ok(())
    }

    /// Measures `qubit` and removes it from the window.
    pub fn finalize<R: Rng + ?Sized>(
        &mut self,
        qubit: usize,
        basis: Basis,
        rng: &mut R,
    ) -> Result<Outcome, FrameError> {
        let slot = self.slot(qubit)?;
        let outcome = self.measure_slot(slot, basis, rng);
        self.remove_slot(slot);
        Ok(outcome)
    }

    fn remove_slot(&mut self, slot: usize) {
        let bit = 1u64 << slot;
        let mut first: Option<(usize, (bool, bool))> = None;
        let mut second: Option<(usize, (bool, bool))> = None;
        for i in 0..self.gens.len() {
            let l = self.gens[i].letter(bit);
            if l == (false, false) {
                continue;
            }
            match (first, second) {
                (None, _) => first = Some((i, l)),
                (Some((p, pl)), _) if l == pl => {
                    let pg = self.gens[p];
                    self.gens[i].mul_assign(&pg);
                }
                (Some(_), None) => second = Some((i, l)),
                (Some((p, pl)), Some((s, sl))) => {
                    let sg = self.gens[s];
                    self.gens[i].mul_assign(&sg);
                    if l != sl {
                        debug_assert_eq!((l.0 ^ sl.0, l.1 ^ sl.1), pl);
                        let pg = self.gens[p];
                        self.gens[i].mul_assign(&pg);
                    }
                }
            }
        }
        let mut drop = [first.map(|f| f.0), second.map(|s| s.0)];
        drop.sort_unstable_by(|a, b| b.cmp(a));
        for i in drop.into_iter().flatten() {
            self.gens.swap_remove(i);
        }
        for g in &mut self.gens {
            g.remove_bit(slot);
        }
        self.qubits.remove(slot);
        self.debug_check();
    }

    /// Structural invariants: mutual commutation, no `±I` generator, and no
    /// more generators than qubits.
    pub fn check_invariants(&self) -> bool {
        if self.gens.len() > self.qubits.len() {
            return false;
        }
        let used = if self.qubits.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.qubits.len()) - 1
        };
        for (i, a) in self.gens.iter().enumerate() {
            if (a.x | a.z) == 0 || (a.x | a.z) & !used != 0 {
                return false;
            }
            if self.gens[i + 1..].iter().any(|b| a.anticommutes(b.x, b.z)) {
                return false;
            }
        }
        true
    }

    #[inline]
    fn debug_check(&self) {
        debug_assert!(self.check_invariants(), "frame invariant violated: {self:?}");
    }
}
