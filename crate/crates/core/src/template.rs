//! Γ₁ / Γ₂ measurement templates.
//!
//! A template is a fixed window of per-photon basis requirements. Its outcome
//! product is the expectation of a product of cluster stabilizers, so on the
//! ideal state every complete instance multiplies to `+1`.
//!
//! Γ₁(l) spans `l + 2` photons, `Z (Y Y _)* Y Y Z`, and correlates the pair
//! `(0, l)` as `Z ⊗ Y` (its one-step shift `(1, l + 1)` gives `Y ⊗ Z`).
//! Γ₂(l) spans `l + 3` photons, `Z X _ (Y Y _)* X Z`, and correlates the
//! pair `(1, l + 1)` as `X ⊗ X`. Both exist only for `l ≡ 2 (mod 3)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::Basis;
use crate::pauli::{Phase, PauliLetter, PauliString};
use crate::sim::{stream_rng, Fate, MachineGun, NoiseLaw};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gamma1,
    Gamma2,
}

impl Family {
    pub const ALL: [Family; 2] = [Family::Gamma1, Family::Gamma2];

    pub fn name(self) -> &'static str {
        match self {
            Family::Gamma1 => "gamma1",
            Family::Gamma2 => "gamma2",
        }
    }

    /// Template-derived photon counts `(n_m, n_p)` at separation `l`.
    pub fn counts(self, l: u32) -> Result<(u32, u32), TemplateError> {
        check_separation(l)?;
        Ok(match self {
            Family::Gamma1 => ((2 * l + 8) / 3, (2 * l + 2) / 3),
            Family::Gamma2 => ((2 * l + 8) / 3, (2 * l - 4) / 3),
        })
    }

    /// Detectors outside the preferred (Y) direction the template needs.
    pub fn other_detectors(self) -> u32 {
        match self {
            Family::Gamma1 => 1,
            Family::Gamma2 => 2,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = TemplateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gamma1" | "g1" | "γ1" => Ok(Family::Gamma1),
            "gamma2" | "g2" | "γ2" => Ok(Family::Gamma2),
            _ => Err(TemplateError::UnknownFamily(s.to_owned())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("separation l = {0} is invalid: need l >= 2 and l = 2 (mod 3)")]
    InvalidSeparation(u32),
    #[error("unknown template family {0:?}")]
    UnknownFamily(String),
    #[error("{id}: algebraic check failed: {reason}")]
    Algebraic { id: TemplateId, reason: String },
    #[error("{id}: {failures} of {trials} noiseless instances had outcome product -1")]
    Dynamic {
        id: TemplateId,
        failures: usize,
        trials: usize,
    },
}

pub fn check_separation(l: u32) -> Result<(), TemplateError> {
    if l >= 2 && l % 3 == 2 {
        Ok(())
    } else {
        Err(TemplateError::InvalidSeparation(l))
    }
}

/// All valid separations `2, 5, 8, ... <= l_max`.
pub fn separation_grid(l_max: u32) -> impl Iterator<Item = u32> {
    (2..=l_max).step_by(3)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Require(Basis),
    Free,
}

impl Slot {
    pub fn letter(self) -> PauliLetter {
        match self {
            Slot::Require(b) => b.letter(),
            Slot::Free => PauliLetter::I,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TemplateId {
    pub family: Family,
    pub l: u32,
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(l={})", self.family, self.l)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    id: TemplateId,
    slots: Vec<Slot>,
    phase: Phase,
    pair_positions: (usize, usize),
}

impl Template {
    pub fn new(family: Family, l: u32) -> Result<Template, TemplateError> {
        match family {
            Family::Gamma1 => make_gamma1(l),
            Family::Gamma2 => make_gamma2(l),
        }
    }

    pub fn id(&self) -> TemplateId {
        self.id
    }

    pub fn family(&self) -> Family {
        self.id.family
    }

    pub fn l(&self) -> u32 {
        self.id.l
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn span(&self) -> usize {
        self.slots.len()
    }

    /// Declared sign of the outcome product on the ideal state.
    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn pair_positions(&self) -> (usize, usize) {
        self.pair_positions
    }

    pub fn pair_letters(&self) -> (PauliLetter, PauliLetter) {
        let (a, b) = self.pair_positions;
        (self.slots[a].letter(), self.slots[b].letter())
    }

    /// Measured photons.
    pub fn n_measured(&self) -> u32 {
        self.slots.iter().filter(|s| **s != Slot::Free).count() as u32
    }

    /// Photons measured in the preferred (Y) basis.
    pub fn n_preferred(&self) -> u32 {
        self.count_basis(Basis::Y)
    }

    pub fn count_basis(&self, basis: Basis) -> u32 {
        self.slots
            .iter()
            .filter(|s| **s == Slot::Require(basis))
            .count() as u32
    }

    /// Number of nearest-neighbour bonds whose `Z Z` error anticommutes with
    /// the template, counting the bonds leaving the window on either side.
    pub fn zz_flip_count(&self) -> u32 {
        let flips = |s: Option<&Slot>| {
            matches!(
                s,
                Some(Slot::Require(Basis::X)) | Some(Slot::Require(Basis::Y))
            )
        };
        (0..=self.slots.len())
            .filter(|&j| {
                let left = j.checked_sub(1).and_then(|k| self.slots.get(k));
                flips(left) != flips(self.slots.get(j))
            })
            .count() as u32
    }

    /// The template as a Pauli operator on positions `0..span`.
    pub fn as_pauli(&self) -> PauliString {
        PauliString::from_letters(self.slots.iter().enumerate().map(|(p, s)| (p, s.letter())))
            .with_phase(self.phase)
    }

    /// Copy with one slot replaced; used to build negative controls.
    pub fn with_slot(&self, pos: usize, slot: Slot) -> Template {
        let mut t = self.clone();
        t.slots[pos] = slot;
        t
    }
}

/// Γ₁(l): `Z` at both ends, `Y` at interior positions not divisible by 3.
pub fn make_gamma1(l: u32) -> Result<Template, TemplateError> {
    check_separation(l)?;
    let l = l as usize;
    let slots = (0..l + 2)
        .map(|p| {
            if p == 0 || p == l + 1 {
                Slot::Require(Basis::Z)
            } else if p % 3 != 0 {
                Slot::Require(Basis::Y)
            } else {
                Slot::Free
            }
        })
        .collect();
    Ok(Template {
        id: TemplateId {
            family: Family::Gamma1,
            l: l as u32,
        },
        slots,
        phase: Phase::ONE,
        pair_positions: (0, l),
    })
}

/// Γ₂(l): `Z X` and `X Z` caps around `Y Y` blocks separated by free sites.
pub fn make_gamma2(l: u32) -> Result<Template, TemplateError> {
    check_separation(l)?;
    let l = l as usize;
    let slots = (0..l + 3)
        .map(|p| match p {
            0 => Slot::Require(Basis::Z),
            1 => Slot::Require(Basis::X),
            p if p == l + 1 => Slot::Require(Basis::X),
            p if p == l + 2 => Slot::Require(Basis::Z),
            p if p % 3 == 2 => Slot::Free,
            _ => Slot::Require(Basis::Y),
        })
        .collect();
    Ok(Template {
        id: TemplateId {
            family: Family::Gamma2,
            l: l as u32,
        },
        slots,
        phase: Phase::ONE,
        pair_positions: (1, l + 1),
    })
}

/// Result of expressing a template as a product of cluster stabilizers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraicCheck {
    /// Centres `j` of the `K_j` factors.
    pub stabilizers: Vec<usize>,
    pub product: PauliString,
}

/// Writes the template as `∏ K_j` over interior centres and checks that the
/// product reproduces the slots with the declared phase.
///
/// Each `K_j` carries its only X-component at `j`, so the factor set is forced:
/// it is exactly the set of positions whose slot has an X-component.
pub fn algebraic_check(t: &Template) -> Result<AlgebraicCheck, TemplateError> {
    let fail = |reason: String| TemplateError::Algebraic { id: t.id, reason };
    let span = t.span();
    let has_x = |s: &Slot| matches!(s.letter(), PauliLetter::X | PauliLetter::Y);
    if span < 3 || has_x(&t.slots[0]) || has_x(&t.slots[span - 1]) {
        return Err(fail("boundary slot needs a stabilizer outside the window".into()));
    }
    let stabilizers: Vec<usize> = (1..span - 1).filter(|&j| has_x(&t.slots[j])).collect();
    let product = stabilizers
        .iter()
        .fold(PauliString::identity(), |acc, &j| {
            acc.multiply(&PauliString::cluster_stabilizer(j))
        });
    for (p, slot) in t.slots.iter().enumerate() {
        if product.get(p) != slot.letter() {
            return Err(fail(format!(
                "position {p}: product has {:?}, template requires {:?}",
                product.get(p),
                slot.letter()
            )));
        }
    }
    if product.support().any(|q| q >= span) {
        return Err(fail("product leaks outside the window".into()));
    }
    if product.phase() != t.phase {
        return Err(fail(format!(
            "product phase {} differs from declared {}",
            product.phase(),
            t.phase
        )));
    }
    Ok(AlgebraicCheck {
        stabilizers,
        product,
    })
}

/// Forces the template's bases onto a noiseless stream `trials` times and
/// counts instances whose signed outcome product is not `+1`. Free slots get a
/// random fate (lost or any basis) and each trial starts at a random depth.
pub fn dynamic_check(t: &Template, trials: usize, seed: u64) -> usize {
    let sign_bit = t.phase != Phase::ONE;
    (0..trials)
        .filter(|&trial| {
            let mut gun = MachineGun::new(NoiseLaw::noiseless(), stream_rng(seed, trial as u64));
            let lead = gun.rng_mut().random_range(0..6);
            for _ in 0..lead {
                let f = random_fate(gun.rng_mut());
                gun.fire(f);
            }
            let mut parity = sign_bit;
            for slot in &t.slots {
                match *slot {
                    Slot::Require(b) => {
                        let (ev, _) = gun.fire(Fate::Measure(b));
                        parity ^= ev.outcome().expect("measured").bit();
                    }
                    Slot::Free => {
                        let f = random_fate(gun.rng_mut());
                        gun.fire(f);
                    }
                }
            }
            parity
        })
        .count()
}

fn random_fate<R: Rng + ?Sized>(rng: &mut R) -> Fate {
    match rng.random_range(0..4) {
        0 => Fate::Lost,
        k => Fate::Measure(Basis::ALL[k - 1]),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyReport {
    pub id: TemplateId,
    pub phase: Phase,
    pub stabilizers: Vec<usize>,
    pub trials: usize,
}

pub const DEFAULT_VERIFY_TRIALS: usize = 64;

/// Runs both checks; fails on the first one that does not pass.
pub fn verify_template(t: &Template, trials: usize, seed: u64) -> Result<VerifyReport, TemplateError> {
    let alg = algebraic_check(t)?;
    let failures = dynamic_check(t, trials, seed);
    if failures > 0 {
        return Err(TemplateError::Dynamic {
            id: t.id,
            failures,
            trials,
        });
    }
    Ok(VerifyReport {
        id: t.id,
        phase: alg.product.phase(),
        stabilizers: alg.stabilizers,
        trials,
    })
}
