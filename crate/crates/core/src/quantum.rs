//! Real pure polarization states.
//!
//! Every state used by the protocol and the attacks has real amplitudes, so a
//! state is fully described by its Hilbert angle θ: |θ⟩ = cos θ |0⟩ + sin θ |π/2⟩.
//! The overlap of two states is cos(θ − φ) and a projective measurement onto
//! |φ⟩ succeeds with probability cos²(θ − φ).
//!
//! Bit coding: Rectilinear maps bit 0 to |0⟩ and bit 1 to |π/2⟩, Diagonal maps
//! bit 0 to |π/4⟩ and bit 1 to |3π/4⟩.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};

use rand::Rng;
use thiserror::Error;

/// Tolerance used when matching overlap values against a [`ReferenceList`].
pub const MATCH_TOLERANCE: f64 = 1e-9;

/// Ancilla angle θ_α = π/6, i.e. |α⟩ = (√3/2)|0⟩ + (1/2)|π/2⟩.
pub const DEFAULT_ANCILLA_ANGLE: f64 = FRAC_PI_6;

/// Probabilities this close to 0 or 1 are treated as exact.
const PROBABILITY_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QuantumError {
    #[error("ancilla maps entries {first} and {second} to the same overlap value {m}")]
    DegenerateAncilla { first: usize, second: usize, m: f64 },
    #[error("no reference entry matches overlap value {m}")]
    NoMatch { m: f64 },
    #[error("reference list needs at least one signal state")]
    EmptyAlphabet,
}

/// Angle of a real polarization ray, reduced into `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HilbertAngle(f64);

impl HilbertAngle {
    pub fn new(theta: f64) -> Self {
        let mut reduced = theta % PI;
        if reduced < 0.0 {
            reduced += PI;
        }
        // -tiny % π + π rounds up to π itself
        if reduced >= PI {
            reduced -= PI;
        }
        HilbertAngle(reduced)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// The angle of the state orthogonal to this one.
    pub fn orthogonal(self) -> Self {
        HilbertAngle::new(self.0 + FRAC_PI_2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    Rectilinear,
    Diagonal,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::Rectilinear, Basis::Diagonal];

    /// Angle of the eigenstate that encodes `bit`.
    pub fn angle(self, bit: bool) -> HilbertAngle {
        let theta = match (self, bit) {
            (Basis::Rectilinear, false) => 0.0,
            (Basis::Rectilinear, true) => FRAC_PI_2,
            (Basis::Diagonal, false) => FRAC_PI_4,
            (Basis::Diagonal, true) => 3.0 * FRAC_PI_4,
        };
        HilbertAngle::new(theta)
    }

    pub fn state(self, bit: bool) -> QuantumState {
        QuantumState::new(self.angle(bit))
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random::<bool>() {
            Basis::Diagonal
        } else {
            Basis::Rectilinear
        }
    }

    /// The bit `state` encodes in this basis, if it is one of the two eigenstates.
    pub fn decode(self, state: QuantumState) -> Option<bool> {
        [false, true]
            .into_iter()
            .find(|&bit| state.approx_eq(self.state(bit), MATCH_TOLERANCE))
    }
}

/// A real pure polarization state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumState {
    angle: HilbertAngle,
}

impl QuantumState {
    pub fn new(angle: HilbertAngle) -> Self {
        QuantumState { angle }
    }

    pub fn from_radians(theta: f64) -> Self {
        QuantumState::new(HilbertAngle::new(theta))
    }

    pub fn angle(self) -> HilbertAngle {
        self.angle
    }

    /// Amplitudes `(c₁, c₂)` in the rectilinear basis.
    pub fn amplitudes(self) -> (f64, f64) {
        (libm::cos(self.angle.0), libm::sin(self.angle.0))
    }

    pub fn orthogonal(self) -> Self {
        QuantumState::new(self.angle.orthogonal())
    }

    /// Same ray up to `tolerance` in squared overlap.
    pub fn approx_eq(self, other: QuantumState, tolerance: f64) -> bool {
        1.0 - born_probability(self, other.angle) <= tolerance
    }
}

/// The four BB84 signal states in reference-list order: |0⟩, |π/2⟩, |π/4⟩, |3π/4⟩.
pub fn bb84_states() -> [QuantumState; 4] {
    [
        Basis::Rectilinear.state(false),
        Basis::Rectilinear.state(true),
        Basis::Diagonal.state(false),
        Basis::Diagonal.state(true),
    ]
}

pub fn overlap(a: QuantumState, b: QuantumState) -> f64 {
    libm::cos(a.angle.0 - b.angle.0)
}

/// Probability that projecting `state` onto `outcome` succeeds.
pub fn born_probability(state: QuantumState, outcome: HilbertAngle) -> f64 {
    let c = libm::cos(state.angle.0 - outcome.0);
    c * c
}

fn snap(p: f64) -> f64 {
    if p <= PROBABILITY_SNAP {
        0.0
    } else if p >= 1.0 - PROBABILITY_SNAP {
        1.0
    } else {
        p
    }
}

/// Single-shot projective measurement in the basis `{|axis⟩, |axis⊥⟩}`.
///
/// Returns `true` when the state collapsed onto `|axis⟩`, together with the
/// post-measurement eigenstate.
pub fn project<R: Rng + ?Sized>(
    state: QuantumState,
    axis: HilbertAngle,
    rng: &mut R,
) -> (bool, QuantumState) {
    let p_axis = snap(born_probability(state, axis));
    let along = rng.random::<f64>() < p_axis;
    if along {
        (true, QuantumState::new(axis))
    } else {
        (false, QuantumState::new(axis.orthogonal()))
    }
}

/// Measures `state` in `basis`, returning the decoded bit and the collapsed state.
pub fn measure<R: Rng + ?Sized>(
    state: QuantumState,
    basis: Basis,
    rng: &mut R,
) -> (bool, QuantumState) {
    let (along_zero, collapsed) = project(state, basis.angle(false), rng);
    (!along_zero, collapsed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceEntry {
    pub state: QuantumState,
    /// Squared overlap with the ancilla.
    pub m: f64,
}

/// One-to-one table from squared ancilla overlaps to signal states.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceList {
    ancilla: QuantumState,
    entries: Vec<ReferenceEntry>,
}

impl ReferenceList {
    pub fn ancilla(&self) -> QuantumState {
        self.ancilla
    }

    pub fn entries(&self) -> &[ReferenceEntry] {
        &self.entries
    }

    /// Table for the BB84 alphabet with the ancilla at angle `theta`.
    pub fn bb84(theta: f64) -> Result<Self, QuantumError> {
        build_reference_list(QuantumState::from_radians(theta), &bb84_states())
    }

    /// The state whose overlap value lies within [`MATCH_TOLERANCE`] of `m`.
    pub fn lookup(&self, m: f64) -> Result<QuantumState, QuantumError> {
        self.entries
            .iter()
            .find(|entry| libm::fabs(entry.m - m) <= MATCH_TOLERANCE)
            .map(|entry| entry.state)
            .ok_or(QuantumError::NoMatch { m })
    }
}

/// Builds the overlap table, rejecting ancillas that map two signal states
/// to the same value.
pub fn build_reference_list(
    ancilla: QuantumState,
    bqs: &[QuantumState],
) -> Result<ReferenceList, QuantumError> {
    if bqs.is_empty() {
        return Err(QuantumError::EmptyAlphabet);
    }
    let entries: Vec<ReferenceEntry> = bqs
        .iter()
        .map(|&state| ReferenceEntry {
            state,
            m: born_probability(state, ancilla.angle),
        })
        .collect();
    for (i, a) in entries.iter().enumerate() {
        for (j, b) in entries.iter().enumerate().skip(i + 1) {
            if libm::fabs(a.m - b.m) <= MATCH_TOLERANCE {
                return Err(QuantumError::DegenerateAncilla {
                    first: i,
                    second: j,
                    m: a.m,
                });
            }
        }
    }
    Ok(ReferenceList { ancilla, entries })
}

pub fn lookup(list: &ReferenceList, m: f64) -> Result<QuantumState, QuantumError> {
    list.lookup(m)
}
