//! BB84 key exchange between Alice and Bob with an eavesdropper on the channel.
//!
//! A session runs preparation, transit, measurement, basis sifting, `k` rounds
//! of public parity verification and, optionally, privacy amplification. Basis
//! announcements travel over an authenticated error-free classical channel.

use alloc::vec::Vec;

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::adversary::{intercept, EveKind, EveRecord, EveStrategy, SiftedGuess};
use crate::amplification::{compress, sample_hash, AmplificationError, AmplifiedKey, PrivacyParams};
use crate::quantum::{measure, Basis, QuantumError, QuantumState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("a session needs at least one pulse")]
    NoPulses,
    #[error("detector efficiency {0} is outside (0, 1]")]
    Efficiency(f64),
    #[error("sifted key of {len} bits cannot absorb {rounds} parity rounds")]
    KeyTooShort { len: usize, rounds: usize },
    #[error("sifted keys differ in length ({alice} vs {bob})")]
    LengthMismatch { alice: usize, bob: usize },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Amplification(#[from] AmplificationError),
}

/// One pulse as Alice prepares it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preparation {
    pub bit: bool,
    pub basis: Basis,
    pub state: QuantumState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseRecord {
    pub index: usize,
    pub alice_bit: bool,
    pub alice_basis: Basis,
    pub sent_state: QuantumState,
    /// What reached Bob's detector, after Eve and before loss.
    pub channel_state: Option<QuantumState>,
    pub bob_basis: Basis,
    pub bob_bit: Option<bool>,
    pub lost: bool,
    pub eve: EveRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SiftedKey {
    pub bits: Vec<bool>,
    pub source_indices: Vec<usize>,
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// One public parity comparison. Positions index the sifted key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityRound {
    pub subset: Vec<usize>,
    pub alice_parity: bool,
    pub bob_parity: bool,
    pub discarded_position: usize,
}

impl ParityRound {
    pub fn mismatch(&self) -> bool {
        self.alice_parity != self.bob_parity
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub detected: bool,
    pub rounds: Vec<ParityRound>,
    /// Sifted positions that survive all rounds; `None` once a mismatch aborts.
    pub surviving: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub n_pulses: usize,
    pub efficiency: f64,
    pub parity_rounds: usize,
    /// Flip one uniformly chosen sifted bit of Bob's key before verification.
    pub force_key_difference: bool,
    /// Hash the first `n` reconciled bits when set.
    pub privacy: Option<PrivacyParams>,
}

impl SessionConfig {
    pub fn new(n_pulses: usize) -> Self {
        SessionConfig {
            n_pulses,
            efficiency: 1.0,
            parity_rounds: 0,
            force_key_difference: false,
            privacy: None,
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.n_pulses == 0 {
            return Err(ProtocolError::NoPulses);
        }
        check_efficiency(self.efficiency)?;
        if let Some(params) = &self.privacy {
            params.validate()?;
        }
        Ok(())
    }
}

fn check_efficiency(efficiency: f64) -> Result<(), ProtocolError> {
    if efficiency > 0.0 && efficiency <= 1.0 {
        Ok(())
    } else {
        Err(ProtocolError::Efficiency(efficiency))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionTranscript {
    pub adversary: EveKind,
    pub pulses: Vec<PulseRecord>,
    pub sifted_alice: SiftedKey,
    pub sifted_bob: SiftedKey,
    pub parity_rounds: Vec<ParityRound>,
    pub detected: bool,
    pub reconciled_key: Option<Vec<bool>>,
    /// Sifted positions of `reconciled_key`.
    pub reconciled_positions: Option<Vec<usize>>,
    /// Eve's post-announcement guess for each sifted position; `None` without Eve.
    pub eve_guesses: Option<Vec<SiftedGuess>>,
    pub amplified: Option<AmplifiedKey>,
}

impl SessionTranscript {
    pub fn sifted_len(&self) -> usize {
        self.sifted_alice.len()
    }

    /// Positions where Alice's and Bob's sifted bits differ.
    pub fn sifted_errors(&self) -> usize {
        self.sifted_alice
            .bits
            .iter()
            .zip(&self.sifted_bob.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Error fraction of the sifted keys, before parity verification. Zero
    /// when nothing was sifted.
    pub fn qber(&self) -> f64 {
        if self.sifted_len() == 0 {
            0.0
        } else {
            self.sifted_errors() as f64 / self.sifted_len() as f64
        }
    }

    pub fn eve_bits(&self) -> Option<Vec<bool>> {
        self.eve_guesses
            .as_ref()
            .map(|guesses| guesses.iter().map(|g| g.bit).collect())
    }

    /// Fraction of sifted positions where Eve's guess equals Alice's bit.
    pub fn eve_accuracy(&self) -> Option<f64> {
        let guesses = self.eve_guesses.as_ref()?;
        if guesses.is_empty() {
            return None;
        }
        let hits = guesses
            .iter()
            .zip(&self.sifted_alice.bits)
            .filter(|(g, &a)| g.bit == a)
            .count();
        Some(hits as f64 / guesses.len() as f64)
    }

    /// Sifted positions where Eve's guess is certain.
    pub fn eve_certain_bits(&self) -> Option<usize> {
        self.eve_guesses
            .as_ref()
            .map(|guesses| guesses.iter().filter(|g| g.is_certain()).count())
    }

    /// Length of the key the session ends with: the amplified key when
    /// amplification ran, else the reconciled key.
    pub fn final_key_len(&self) -> Option<usize> {
        match (&self.amplified, &self.reconciled_key) {
            (Some(a), _) => Some(a.key.len()),
            (None, Some(k)) => Some(k.len()),
            (None, None) => None,
        }
    }
}

pub fn prepare_pulses<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> Result<Vec<Preparation>, ProtocolError> {
    if n == 0 {
        return Err(ProtocolError::NoPulses);
    }
    Ok((0..n)
        .map(|_| {
            let bit = rng.random::<bool>();
            let basis = Basis::random(rng);
            Preparation {
                bit,
                basis,
                state: basis.state(bit),
            }
        })
        .collect())
}

/// Sends one pulse through Eve and then the lossy detector.
pub fn transmit<R: Rng + ?Sized>(
    pulse: QuantumState,
    adversary: &EveStrategy,
    efficiency: f64,
    rng: &mut R,
) -> Result<(Option<QuantumState>, EveRecord), ProtocolError> {
    check_efficiency(efficiency)?;
    let (forwarded, record) = intercept(adversary, pulse, rng)?;
    let lost = efficiency < 1.0 && !rng.random_bool(efficiency);
    Ok((if lost { None } else { Some(forwarded) }, record))
}

/// Keeps the received pulses whose bases agree.
pub fn sift(pulses: &[PulseRecord]) -> (SiftedKey, SiftedKey) {
    let mut alice = SiftedKey::default();
    let mut bob = SiftedKey::default();
    for pulse in pulses {
        let Some(bob_bit) = pulse.bob_bit else {
            continue;
        };
        if pulse.lost || pulse.alice_basis != pulse.bob_basis {
            continue;
        }
        alice.bits.push(pulse.alice_bit);
        alice.source_indices.push(pulse.index);
        bob.bits.push(bob_bit);
        bob.source_indices.push(pulse.index);
    }
    (alice, bob)
}

/// Nonempty subset of `candidates` with each member kept by a fair coin.
fn random_subset<R: RngCore + ?Sized>(candidates: &[usize], rng: &mut R) -> Vec<usize> {
    loop {
        let mut subset = Vec::new();
        let mut word = 0u64;
        for (i, &position) in candidates.iter().enumerate() {
            if i % 64 == 0 {
                word = rng.next_u64();
            }
            if word >> (i % 64) & 1 == 1 {
                subset.push(position);
            }
        }
        if !subset.is_empty() {
            return subset;
        }
    }
}

fn parity(bits: &[bool], subset: &[usize]) -> bool {
    subset.iter().fold(false, |acc, &p| acc ^ bits[p])
}

/// Runs up to `k` public parity rounds, discarding the lowest subset member
/// after each. Verification stops at the first mismatch.
pub fn parity_verify<R: Rng + ?Sized>(
    alice: &SiftedKey,
    bob: &SiftedKey,
    k: usize,
    rng: &mut R,
) -> Result<Verification, ProtocolError> {
    if alice.len() != bob.len() {
        return Err(ProtocolError::LengthMismatch {
            alice: alice.len(),
            bob: bob.len(),
        });
    }
    if k > 0 && alice.len() <= k {
        return Err(ProtocolError::KeyTooShort {
            len: alice.len(),
            rounds: k,
        });
    }
    let mut surviving: Vec<usize> = (0..alice.len()).collect();
    let mut rounds = Vec::with_capacity(k);
    for _ in 0..k {
        let subset = random_subset(&surviving, rng);
        let discarded_position = subset[0];
        let round = ParityRound {
            alice_parity: parity(&alice.bits, &subset),
            bob_parity: parity(&bob.bits, &subset),
            subset,
            discarded_position,
        };
        let mismatch = round.mismatch();
        rounds.push(round);
        if mismatch {
            return Ok(Verification {
                detected: true,
                rounds,
                surviving: None,
            });
        }
        surviving.retain(|&p| p != discarded_position);
    }
    Ok(Verification {
        detected: false,
        rounds,
        surviving: Some(surviving),
    })
}

/// Runs one complete key exchange.
pub fn run_session<R: Rng + ?Sized>(
    config: &SessionConfig,
    adversary: &EveStrategy,
    rng: &mut R,
) -> Result<SessionTranscript, ProtocolError> {
    config.validate()?;
    let prepared = prepare_pulses(config.n_pulses, rng)?;

    let mut pulses = Vec::with_capacity(prepared.len());
    for (index, prep) in prepared.into_iter().enumerate() {
        let (channel_state, eve) = transmit(prep.state, adversary, config.efficiency, rng)?;
        let bob_basis = Basis::random(rng);
        let bob_bit = channel_state.map(|state| measure(state, bob_basis, rng).0);
        pulses.push(PulseRecord {
            index,
            alice_bit: prep.bit,
            alice_basis: prep.basis,
            sent_state: prep.state,
            channel_state,
            bob_basis,
            bob_bit,
            lost: channel_state.is_none(),
            eve,
        });
    }

    let (sifted_alice, mut sifted_bob) = sift(&pulses);
    if config.force_key_difference && !sifted_bob.is_empty() {
        let flip = rng.random_range(0..sifted_bob.len());
        sifted_bob.bits[flip] = !sifted_bob.bits[flip];
    }

    let eve_guesses = (adversary.kind() != EveKind::NoEve).then(|| {
        sifted_alice
            .source_indices
            .iter()
            .map(|&i| pulses[i].eve.sifted_guess(pulses[i].alice_basis))
            .collect::<Vec<_>>()
    });

    let verification = parity_verify(&sifted_alice, &sifted_bob, config.parity_rounds, rng)?;
    let reconciled_key = verification
        .surviving
        .as_ref()
        .map(|positions| positions.iter().map(|&p| sifted_alice.bits[p]).collect::<Vec<_>>());

    let amplified = match (&config.privacy, &verification.surviving) {
        (Some(params), Some(positions)) if positions.len() >= params.n => {
            let source_positions = positions[..params.n].to_vec();
            let input: Vec<bool> = source_positions.iter().map(|&p| sifted_alice.bits[p]).collect();
            let hash = sample_hash(params, rng)?;
            let key = compress(&input, &hash)?;
            Some(AmplifiedKey {
                params: *params,
                hash,
                source_positions,
                key,
            })
        }
        _ => None,
    };

    Ok(SessionTranscript {
        adversary: adversary.kind(),
        pulses,
        sifted_alice,
        sifted_bob,
        parity_rounds: verification.rounds,
        detected: verification.detected,
        reconciled_key,
        reconciled_positions: verification.surviving,
        eve_guesses,
        amplified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{bb84_states, ReferenceList, DEFAULT_ANCILLA_ANGLE};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn within_sigmas(count: usize, trials: usize, p: f64, sigmas: f64) -> bool {
        let freq = count as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        (freq - p).abs() <= sigmas * sigma
    }

    fn key(bits: &[u8]) -> SiftedKey {
        SiftedKey {
            bits: bits.iter().map(|&b| b == 1).collect(),
            source_indices: (0..bits.len()).collect(),
        }
    }

    #[test]
    fn prepared_states_are_encodings() {
        let pulses = prepare_pulses(4, &mut rng(1)).unwrap();
        assert_eq!(pulses.len(), 4);
        for p in &pulses {
            assert!(bb84_states().contains(&p.state));
            assert_eq!(p.basis.decode(p.state), Some(p.bit));
        }
        assert_eq!(prepare_pulses(0, &mut rng(1)), Err(ProtocolError::NoPulses));
    }

    #[test]
    fn prepared_states_are_uniform() {
        let n = 100_000;
        let pulses = prepare_pulses(n, &mut rng(2)).unwrap();
        for state in bb84_states() {
            let count = pulses.iter().filter(|p| p.state == state).count();
            assert!(within_sigmas(count, n, 0.25, 4.0), "{state:?}: {count}");
        }
    }

    #[test]
    fn transmit_identity_channel() {
        let zero = Basis::Rectilinear.state(false);
        let (out, _) = transmit(zero, &EveStrategy::none(), 1.0, &mut rng(3)).unwrap();
        assert_eq!(out, Some(zero));
        let oracle = EveStrategy::indirect_copy_oracle(ReferenceList::bb84(DEFAULT_ANCILLA_ANGLE).unwrap());
        let (out, _) = transmit(zero, &oracle, 1.0, &mut rng(3)).unwrap();
        assert_eq!(out, Some(zero));
        assert_eq!(
            transmit(zero, &EveStrategy::none(), 0.0, &mut rng(3)),
            Err(ProtocolError::Efficiency(0.0))
        );
    }

    #[test]
    fn transmit_loss_fraction() {
        let mut r = rng(4);
        let n = 100_000;
        let lost = (0..n)
            .filter(|i| {
                transmit(bb84_states()[i % 4], &EveStrategy::none(), 0.5, &mut r)
                    .unwrap()
                    .0
                    .is_none()
            })
            .count();
        assert!(within_sigmas(lost, n, 0.5, 4.0));
    }

    #[test]
    fn sift_without_matches_is_empty() {
        let transcript = run_session(&SessionConfig::new(50), &EveStrategy::none(), &mut rng(5)).unwrap();
        let mismatched: Vec<PulseRecord> = transcript
            .pulses
            .iter()
            .filter(|p| p.alice_basis != p.bob_basis)
            .copied()
            .collect();
        let (a, b) = sift(&mismatched);
        assert!(a.is_empty() && b.is_empty());
    }

    #[test]
    fn honest_session_has_no_errors() {
        let config = SessionConfig {
            parity_rounds: 16,
            ..SessionConfig::new(10_000)
        };
        let t = run_session(&config, &EveStrategy::none(), &mut rng(6)).unwrap();
        assert_eq!(t.sifted_alice.bits, t.sifted_bob.bits);
        assert_eq!(t.qber(), 0.0);
        assert!(!t.detected);
        assert_eq!(t.parity_rounds.len(), 16);
        assert_eq!(t.reconciled_key.as_ref().unwrap().len(), t.sifted_len() - 16);
        assert!(t.eve_guesses.is_none());
        assert!(within_sigmas(t.sifted_len(), 10_000, 0.5, 4.0));
    }

    #[test]
    fn lost_pulses_carry_no_bit() {
        let config = SessionConfig {
            efficiency: 0.3,
            ..SessionConfig::new(2_000)
        };
        let t = run_session(&config, &EveStrategy::none(), &mut rng(7)).unwrap();
        for p in &t.pulses {
            assert_eq!(p.lost, p.bob_bit.is_none());
            assert_eq!(p.lost, p.channel_state.is_none());
        }
        for &i in &t.sifted_alice.source_indices {
            assert!(!t.pulses[i].lost);
            assert_eq!(t.pulses[i].alice_basis, t.pulses[i].bob_basis);
        }
    }

    #[test]
    fn identical_keys_lose_k_bits() {
        let mut r = rng(8);
        let bits: Vec<u8> = (0..100).map(|i| (i * 7 % 3 == 0) as u8).collect();
        let k = key(&bits);
        let v = parity_verify(&k, &k, 20, &mut r).unwrap();
        assert!(!v.detected);
        let surviving = v.surviving.unwrap();
        assert_eq!(surviving.len(), 80);
        for round in &v.rounds {
            assert!(round.subset.contains(&round.discarded_position));
            assert_eq!(round.discarded_position, *round.subset.iter().min().unwrap());
            assert!(!surviving.contains(&round.discarded_position));
        }
    }

    #[test]
    fn short_key_is_rejected() {
        let k = key(&[1, 0, 1]);
        assert_eq!(
            parity_verify(&k, &k, 3, &mut rng(9)),
            Err(ProtocolError::KeyTooShort { len: 3, rounds: 3 })
        );
        assert!(parity_verify(&k, &k, 0, &mut rng(9)).is_ok());
        assert!(matches!(
            parity_verify(&k, &key(&[1, 0]), 1, &mut rng(9)),
            Err(ProtocolError::LengthMismatch { .. })
        ));
    }

    fn detection_rate(k: usize, trials: usize, seed: u64) -> f64 {
        let mut r = rng(seed);
        let alice = key(&[0; 64]);
        let mut detected = 0;
        for t in 0..trials {
            let mut bob = alice.clone();
            bob.bits[t % 64] = true;
            if parity_verify(&alice, &bob, k, &mut r).unwrap().detected {
                detected += 1;
            }
        }
        detected as f64 / trials as f64
    }

    #[test]
    fn single_round_detects_half_the_time() {
        let rate = detection_rate(1, 10_000, 10);
        assert!((rate - 0.5).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn ten_rounds_detect_almost_always() {
        let rate = detection_rate(10, 10_000, 11);
        assert!((rate - (1.0 - 2f64.powi(-10))).abs() <= 0.01, "rate {rate}");
    }

    #[test]
    fn oracle_session_is_transparent() {
        let oracle = EveStrategy::indirect_copy_oracle(ReferenceList::bb84(DEFAULT_ANCILLA_ANGLE).unwrap());
        let config = SessionConfig {
            parity_rounds: 8,
            ..SessionConfig::new(5_000)
        };
        let t = run_session(&config, &oracle, &mut rng(12)).unwrap();
        assert_eq!(t.qber(), 0.0);
        assert!(!t.detected);
        assert_eq!(t.eve_bits().unwrap(), t.sifted_alice.bits);
        assert_eq!(t.eve_accuracy(), Some(1.0));
    }

    #[test]
    fn intercept_resend_session_error_rate() {
        let t = run_session(&SessionConfig::new(100_000), &EveStrategy::intercept_resend(), &mut rng(13)).unwrap();
        assert!((t.qber() - 0.25).abs() <= 0.01, "qber {}", t.qber());
        let acc = t.eve_accuracy().unwrap();
        assert!((acc - 0.75).abs() <= 0.01, "accuracy {acc}");
    }

    #[test]
    fn forced_difference_flips_exactly_one_bit() {
        let config = SessionConfig {
            force_key_difference: true,
            ..SessionConfig::new(200)
        };
        let t = run_session(&config, &EveStrategy::none(), &mut rng(14)).unwrap();
        assert_eq!(t.sifted_errors(), 1);
    }

    #[test]
    fn amplification_runs_on_reconciled_prefix() {
        let config = SessionConfig {
            parity_rounds: 4,
            privacy: Some(PrivacyParams::new(100, 20, 10).unwrap()),
            ..SessionConfig::new(1_000)
        };
        let t = run_session(&config, &EveStrategy::none(), &mut rng(15)).unwrap();
        let a = t.amplified.as_ref().unwrap();
        assert_eq!(a.key.len(), 70);
        assert_eq!(t.final_key_len(), Some(70));
        assert_eq!(&a.source_positions[..], &t.reconciled_positions.as_ref().unwrap()[..100]);
    }

    #[test]
    fn invalid_config_rejected() {
        let mut config = SessionConfig::new(0);
        assert_eq!(config.validate(), Err(ProtocolError::NoPulses));
        config.n_pulses = 10;
        config.efficiency = 1.5;
        assert_eq!(config.validate(), Err(ProtocolError::Efficiency(1.5)));
        let config = SessionConfig {
            parity_rounds: 40,
            ..SessionConfig::new(10)
        };
        assert!(matches!(
            run_session(&config, &EveStrategy::none(), &mut rng(0)),
            Err(ProtocolError::KeyTooShort { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn transcript_invariants(seed in any::<u64>(), n in 20usize..400, eff in 0.2f64..=1.0,
                                 k in 0usize..6, eve in 0usize..3) {
            let strategy = match eve {
                0 => EveStrategy::none(),
                1 => EveStrategy::intercept_resend(),
                _ => EveStrategy::indirect_copy_physical(
                    ReferenceList::bb84(DEFAULT_ANCILLA_ANGLE).unwrap(),
                    crate::adversary::ResendRule::MaxPosterior),
            };
            let config = SessionConfig { efficiency: eff, parity_rounds: k, ..SessionConfig::new(n) };
            let result = run_session(&config, &strategy, &mut rng(seed));
            let t = match result {
                Err(ProtocolError::KeyTooShort { .. }) => return Ok(()),
                other => other.unwrap(),
            };
            prop_assert_eq!(&t.sifted_alice.source_indices, &t.sifted_bob.source_indices);
            prop_assert_eq!(t.sifted_alice.len(), t.sifted_bob.len());
            prop_assert_eq!(t.detected, t.parity_rounds.iter().any(|r| r.mismatch()));
            prop_assert_eq!(t.reconciled_key.is_some(), !t.detected);
            if let Some(key) = &t.reconciled_key {
                prop_assert_eq!(key.len(), t.sifted_len() - t.parity_rounds.len());
                let kept = t.reconciled_positions.as_ref().unwrap();
                for round in &t.parity_rounds {
                    prop_assert!(!kept.contains(&round.discarded_position));
                }
            }
            for round in &t.parity_rounds {
                prop_assert!(round.subset.contains(&round.discarded_position));
                prop_assert_eq!(round.alice_parity, parity(&t.sifted_alice.bits, &round.subset));
                prop_assert_eq!(round.bob_parity, parity(&t.sifted_bob.bits, &round.subset));
            }
            for p in &t.pulses {
                prop_assert_eq!(p.sent_state, p.alice_basis.state(p.alice_bit));
            }
            let again = run_session(&config, &strategy, &mut rng(seed)).unwrap();
            prop_assert_eq!(again, t);
        }
    }
}
