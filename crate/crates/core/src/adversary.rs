//! Eavesdropper strategies interposed on the quantum channel.
//!
//! Four behaviors are available:
//!
//! * [`EveKind::NoEve`] forwards every pulse untouched.
//! * [`EveKind::InterceptResend`] measures in a random BB84 basis and forwards
//!   the collapsed eigenstate.
//! * [`EveKind::IndirectCopyOracle`] reads the squared ancilla overlap `m` of
//!   the incoming state *exactly*, looks it up in the reference list and
//!   forwards a fresh copy of the matched state. No physical measurement on a
//!   single copy yields `m`; the simulator grants it as an explicit capability.
//! * [`EveKind::IndirectCopyPhysical`] performs the one measurement a single
//!   copy actually allows, a projection onto `{|α⟩, |α⊥⟩}`, and then resends
//!   according to a [`ResendRule`].
//!
//! Every intercepted pulse leaves an [`EveRecord`] holding what Eve observed.
//! Once bases are announced, [`EveRecord::sifted_guess`] turns that
//! observation into her best guess of Alice's bit.

use rand::Rng;

use crate::quantum::{
    born_probability, project, Basis, HilbertAngle, QuantumError, QuantumState, ReferenceList,
};

/// Posterior weights closer than this count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EveKind {
    NoEve,
    InterceptResend,
    IndirectCopyOracle,
    IndirectCopyPhysical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ResendRule {
    /// Forward the signal state with the largest posterior given the outcome.
    #[default]
    MaxPosterior,
    /// Forward |α⟩ or |α⊥⟩, whichever the measurement collapsed onto.
    ResendAncilla,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StrategyError {
    #[error("attack fraction {0} is outside [0, 1]")]
    AttackFraction(f64),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

/// What Eve learned from one pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    /// Outcome of a projection onto `{|axis⟩, |axis⊥⟩}`; `along` is true for `|axis⟩`.
    Projection { axis: HilbertAngle, along: bool },
    /// The state itself, read through the oracle capability.
    Exact(QuantumState),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EveRecord {
    /// Bit encoded by `guessed_state` in its own basis.
    pub guessed_bit: Option<bool>,
    pub guessed_state: Option<QuantumState>,
    pub resent_state: QuantumState,
    pub observation: Option<Observation>,
}

/// Eve's guess of Alice's bit once the basis is public, with its posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiftedGuess {
    pub bit: bool,
    pub confidence: f64,
}

impl SiftedGuess {
    pub const UNINFORMED: SiftedGuess = SiftedGuess {
        bit: false,
        confidence: 0.5,
    };

    pub fn is_certain(&self) -> bool {
        self.confidence >= 1.0 - TIE_TOLERANCE
    }
}

impl EveRecord {
    pub fn passthrough(incoming: QuantumState) -> Self {
        EveRecord {
            guessed_bit: None,
            guessed_state: None,
            resent_state: incoming,
            observation: None,
        }
    }

    /// Best guess of Alice's bit given Eve's observation and the announced
    /// basis, under a uniform prior on Alice's bit. Ties guess bit 0.
    pub fn sifted_guess(&self, basis: Basis) -> SiftedGuess {
        let (zero, one) = match self.observation {
            None => return SiftedGuess::UNINFORMED,
            Some(Observation::Exact(state)) => (
                born_probability(state, basis.angle(false)),
                born_probability(state, basis.angle(true)),
            ),
            Some(Observation::Projection { axis, along }) => {
                let likelihood = |bit| {
                    let p = born_probability(basis.state(bit), axis);
                    if along {
                        p
                    } else {
                        1.0 - p
                    }
                };
                (likelihood(false), likelihood(true))
            }
        };
        let total = zero + one;
        if total <= 0.0 {
            return SiftedGuess::UNINFORMED;
        }
        if one > zero + TIE_TOLERANCE {
            SiftedGuess {
                bit: true,
                confidence: one / total,
            }
        } else {
            SiftedGuess {
                bit: false,
                confidence: zero / total,
            }
        }
    }
}

/// Immutable eavesdropper configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EveStrategy {
    kind: EveKind,
    reference_list: Option<ReferenceList>,
    resend_rule: ResendRule,
    attack_fraction: f64,
}

impl EveStrategy {
    pub fn none() -> Self {
        EveStrategy {
            kind: EveKind::NoEve,
            reference_list: None,
            resend_rule: ResendRule::default(),
            attack_fraction: 1.0,
        }
    }

    pub fn intercept_resend() -> Self {
        EveStrategy {
            kind: EveKind::InterceptResend,
            ..EveStrategy::none()
        }
    }

    pub fn indirect_copy_oracle(reference_list: ReferenceList) -> Self {
        EveStrategy {
            kind: EveKind::IndirectCopyOracle,
            reference_list: Some(reference_list),
            ..EveStrategy::none()
        }
    }

    pub fn indirect_copy_physical(reference_list: ReferenceList, resend_rule: ResendRule) -> Self {
        EveStrategy {
            kind: EveKind::IndirectCopyPhysical,
            reference_list: Some(reference_list),
            resend_rule,
            attack_fraction: 1.0,
        }
    }

    /// Attack only a random fraction of pulses; the rest pass untouched.
    pub fn with_attack_fraction(mut self, fraction: f64) -> Result<Self, StrategyError> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(StrategyError::AttackFraction(fraction));
        }
        self.attack_fraction = fraction;
        Ok(self)
    }

    pub fn kind(&self) -> EveKind {
        self.kind
    }

    pub fn reference_list(&self) -> Option<&ReferenceList> {
        self.reference_list.as_ref()
    }

    pub fn resend_rule(&self) -> ResendRule {
        self.resend_rule
    }

    pub fn attack_fraction(&self) -> f64 {
        self.attack_fraction
    }

    fn list(&self) -> &ReferenceList {
        self.reference_list
            .as_ref()
            .expect("indirect-copy strategies are constructed with a reference list")
    }

    /// Index into the reference list of the state Eve considers most likely
    /// after a projection outcome, under a uniform prior.
    pub fn max_posterior_index(&self, along_ancilla: bool) -> usize {
        let mut best = 0;
        let mut best_weight = f64::NEG_INFINITY;
        for (i, entry) in self.list().entries().iter().enumerate() {
            let weight = if along_ancilla { entry.m } else { 1.0 - entry.m };
            if weight > best_weight + TIE_TOLERANCE {
                best = i;
                best_weight = weight;
            }
        }
        best
    }
}

fn own_basis_bit(state: QuantumState) -> Option<bool> {
    Basis::ALL.iter().find_map(|basis| basis.decode(state))
}

/// Lets Eve act on one pulse and returns the state she forwards to Bob.
pub fn intercept<R: Rng + ?Sized>(
    strategy: &EveStrategy,
    incoming: QuantumState,
    rng: &mut R,
) -> Result<(QuantumState, EveRecord), QuantumError> {
    if strategy.kind == EveKind::NoEve {
        return Ok((incoming, EveRecord::passthrough(incoming)));
    }
    if strategy.attack_fraction < 1.0 && !rng.random_bool(strategy.attack_fraction) {
        return Ok((incoming, EveRecord::passthrough(incoming)));
    }
    let record = match strategy.kind {
        EveKind::NoEve => unreachable!(),
        EveKind::InterceptResend => intercept_resend(incoming, rng),
        EveKind::IndirectCopyOracle => indirect_copy_oracle(strategy.list(), incoming)?,
        EveKind::IndirectCopyPhysical => indirect_copy_physical(strategy, incoming, rng),
    };
    Ok((record.resent_state, record))
}

fn intercept_resend<R: Rng + ?Sized>(incoming: QuantumState, rng: &mut R) -> EveRecord {
    let basis = Basis::random(rng);
    let axis = basis.angle(false);
    let (along, collapsed) = project(incoming, axis, rng);
    EveRecord {
        guessed_bit: Some(!along),
        guessed_state: Some(collapsed),
        resent_state: collapsed,
        observation: Some(Observation::Projection { axis, along }),
    }
}

fn indirect_copy_oracle(
    list: &ReferenceList,
    incoming: QuantumState,
) -> Result<EveRecord, QuantumError> {
    let m = born_probability(incoming, list.ancilla().angle());
    let copy = list.lookup(m)?;
    Ok(EveRecord {
        guessed_bit: own_basis_bit(copy),
        guessed_state: Some(copy),
        resent_state: copy,
        observation: Some(Observation::Exact(copy)),
    })
}

fn indirect_copy_physical<R: Rng + ?Sized>(
    strategy: &EveStrategy,
    incoming: QuantumState,
    rng: &mut R,
) -> EveRecord {
    let axis = strategy.list().ancilla().angle();
    let (along, collapsed) = project(incoming, axis, rng);
    let guess = strategy.list().entries()[strategy.max_posterior_index(along)].state;
    let resent = match strategy.resend_rule {
        ResendRule::MaxPosterior => guess,
        ResendRule::ResendAncilla => collapsed,
    };
    EveRecord {
        guessed_bit: own_basis_bit(guess),
        guessed_state: Some(guess),
        resent_state: resent,
        observation: Some(Observation::Projection { axis, along }),
    }
}
