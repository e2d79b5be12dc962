//! Privacy amplification with binary Toeplitz hashing.
//!
//! A reconciled key `W` of `n` bits is compressed to `r = n − t − s` bits by a
//! publicly chosen Toeplitz matrix, where `t` bounds what Eve is assumed to
//! know about `W` and `s` is the security margin.
//!
//! Eve's residual information is measured by linear algebra rather than by
//! sampling her guesses bit by bit. Positions of `W` where her guess is certain
//! are known to her; every other position is treated as unknown. A parity
//! `c·K` of the final key is then determined by her knowledge exactly when
//! `cᵀ T` vanishes on the unknown columns, so she knows
//! `D = r − rank(T_unknown)` independent parities of `K` (evaluated as
//! `c·G(W_guess)`) and is at chance on the rest. The reported advantage is
//! `D / (2r)`: 0 when she knows nothing and 0.5 when `G(W_guess) = K`.

use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::adversary::EveKind;
use crate::bits::{rank, PackedBits};
use crate::protocol::SessionTranscript;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmplificationError {
    #[error("invalid privacy parameters n={n}, t={t}, s={s}: need t < n and 0 < s < n − t")]
    InvalidParams { n: usize, t: usize, s: usize },
    #[error("key has {actual} bits, hash expects {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("session {index} has an active eavesdropper but no recorded guesses")]
    MissingEveBits { index: usize },
    #[error("session {index} produced no amplified key")]
    MissingAmplifiedKey { index: usize },
    #[error("session {index} was amplified with different parameters")]
    ParamsMismatch { index: usize },
    #[error("no transcripts to evaluate")]
    NoTranscripts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrivacyParams {
    /// Length of the key fed to the hash.
    pub n: usize,
    /// Bits of information Eve is assumed to hold about it.
    pub t: usize,
    /// Security margin.
    pub s: usize,
}

impl PrivacyParams {
    pub fn new(n: usize, t: usize, s: usize) -> Result<Self, AmplificationError> {
        let params = PrivacyParams { n, t, s };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), AmplificationError> {
        let ok = self.t < self.n && self.s > 0 && self.s < self.n - self.t;
        if ok {
            Ok(())
        } else {
            Err(AmplificationError::InvalidParams {
                n: self.n,
                t: self.t,
                s: self.s,
            })
        }
    }

    /// `r = n − t − s`; only meaningful once validated.
    pub fn output_len(&self) -> usize {
        self.n.saturating_sub(self.t).saturating_sub(self.s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HashFamily {
    ToeplitzBinary,
}

/// A public `n → r` compression map.
///
/// Entry `(i, j)` of the Toeplitz matrix is `seed[i + n − 1 − j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashDescriptor {
    family: HashFamily,
    input_len: usize,
    output_len: usize,
    seed: PackedBits,
}

impl HashDescriptor {
    /// Builds a Toeplitz descriptor from `n + r − 1` seed bits.
    pub fn toeplitz(input_len: usize, seed: &[bool]) -> Result<Self, AmplificationError> {
        if input_len == 0 || seed.len() < input_len {
            return Err(AmplificationError::LengthMismatch {
                expected: input_len,
                actual: seed.len(),
            });
        }
        Ok(HashDescriptor {
            family: HashFamily::ToeplitzBinary,
            input_len,
            output_len: seed.len() + 1 - input_len,
            seed: PackedBits::from_bools(seed.iter().copied()),
        })
    }

    pub fn family(&self) -> HashFamily {
        self.family
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    pub fn seed_bits(&self) -> Vec<bool> {
        (0..self.seed.len()).map(|i| self.seed.get(i)).collect()
    }

    pub fn entry(&self, row: usize, col: usize) -> bool {
        self.seed.get(row + self.input_len - 1 - col)
    }
}

/// Draws a uniformly random descriptor for `params`.
pub fn sample_hash<R: Rng + ?Sized>(
    params: &PrivacyParams,
    rng: &mut R,
) -> Result<HashDescriptor, AmplificationError> {
    params.validate()?;
    let seed_len = params.n + params.output_len() - 1;
    let mut seed = PackedBits::zeros(seed_len);
    let mut word = 0u64;
    for i in 0..seed_len {
        if i % 64 == 0 {
            word = rng.next_u64();
        }
        if word >> (i % 64) & 1 == 1 {
            seed.set(i);
        }
    }
    Ok(HashDescriptor {
        family: HashFamily::ToeplitzBinary,
        input_len: params.n,
        output_len: params.output_len(),
        seed,
    })
}

/// Applies the hash: `K_i = ⊕_j T[i][j]·W_j`.
pub fn compress(key: &[bool], hash: &HashDescriptor) -> Result<Vec<bool>, AmplificationError> {
    if key.len() != hash.input_len {
        return Err(AmplificationError::LengthMismatch {
            expected: hash.input_len,
            actual: key.len(),
        });
    }
    // with W reversed, row i is the seed window starting at i
    let reversed = PackedBits::from_bools(key.iter().rev().copied());
    Ok((0..hash.output_len)
        .map(|i| hash.seed.window(i, hash.input_len).dot(&reversed))
        .collect())
}

/// The final key of one session together with the hash that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmplifiedKey {
    pub params: PrivacyParams,
    pub hash: HashDescriptor,
    /// Sifted-key positions of the `n` input bits, in input order.
    pub source_positions: Vec<usize>,
    pub key: Vec<bool>,
}

/// Eve's guess of the final key, `G(W_guess)`.
pub fn eve_key_guess(transcript: &SessionTranscript) -> Option<Vec<bool>> {
    let amplified = transcript.amplified.as_ref()?;
    let guesses = transcript.eve_guesses.as_ref()?;
    let guessed_input: Vec<bool> = amplified
        .source_positions
        .iter()
        .map(|&p| guesses[p].bit)
        .collect();
    compress(&guessed_input, &amplified.hash).ok()
}

/// Per-parity advantage of Eve on one session's final key, in `[0, 0.5]`.
pub fn session_eve_advantage(
    transcript: &SessionTranscript,
    index: usize,
) -> Result<f64, AmplificationError> {
    let amplified = transcript
        .amplified
        .as_ref()
        .ok_or(AmplificationError::MissingAmplifiedKey { index })?;
    if transcript.adversary == EveKind::NoEve {
        return Ok(0.0);
    }
    let guesses = transcript
        .eve_guesses
        .as_ref()
        .ok_or(AmplificationError::MissingEveBits { index })?;
    let hash = &amplified.hash;
    let unknown: Vec<usize> = amplified
        .source_positions
        .iter()
        .enumerate()
        .filter(|(_, &p)| !guesses[p].is_certain())
        .map(|(col, _)| col)
        .collect();
    let rows: Vec<PackedBits> = (0..hash.output_len)
        .map(|i| PackedBits::from_bools(unknown.iter().map(|&col| hash.entry(i, col))))
        .collect();
    let determined = hash.output_len - rank(rows);
    Ok(0.5 * determined as f64 / hash.output_len as f64)
}

/// Mean of [`session_eve_advantage`] over transcripts amplified with `params`.
pub fn eve_residual_information(
    transcripts: &[SessionTranscript],
    params: &PrivacyParams,
) -> Result<f64, AmplificationError> {
    if transcripts.is_empty() {
        return Err(AmplificationError::NoTranscripts);
    }
    let mut total = 0.0;
    for (index, transcript) in transcripts.iter().enumerate() {
        match &transcript.amplified {
            Some(a) if a.params != *params => {
                return Err(AmplificationError::ParamsMismatch { index })
            }
            _ => {}
        }
        total += session_eve_advantage(transcript, index)?;
    }
    Ok(total / transcripts.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Straight matrix-vector product from the entry definition.
    fn naive(key: &[bool], hash: &HashDescriptor) -> Vec<bool> {
        (0..hash.output_len())
            .map(|i| {
                (0..hash.input_len()).fold(false, |acc, j| acc ^ (hash.entry(i, j) & key[j]))
            })
            .collect()
    }

    fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
        (0..n).map(|_| rng.random::<bool>()).collect()
    }

    #[test]
    fn params_validation() {
        let p = PrivacyParams::new(128, 32, 31).unwrap();
        assert_eq!(p.output_len(), 65);
        assert!(PrivacyParams::new(8, 4, 4).is_err());
        assert!(PrivacyParams::new(8, 8, 1).is_err());
        assert!(PrivacyParams::new(8, 0, 0).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bad = PrivacyParams { n: 8, t: 4, s: 4 };
        assert_eq!(
            sample_hash(&bad, &mut rng),
            Err(AmplificationError::InvalidParams { n: 8, t: 4, s: 4 })
        );
    }

    #[test]
    fn sampled_descriptor_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hash = sample_hash(&PrivacyParams::new(128, 32, 31).unwrap(), &mut rng).unwrap();
        assert_eq!(hash.family(), HashFamily::ToeplitzBinary);
        assert_eq!(hash.input_len(), 128);
        assert_eq!(hash.output_len(), 65);
        assert_eq!(hash.seed_bits().len(), 128 + 65 - 1);
        let rebuilt = HashDescriptor::toeplitz(128, &hash.seed_bits()).unwrap();
        assert_eq!(rebuilt, hash);
    }

    #[test]
    fn distinct_seeds_give_distinct_maps() {
        let params = PrivacyParams::new(64, 16, 8).unwrap();
        let a = sample_hash(&params, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
        let b = sample_hash(&params, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let mut probe_rng = ChaCha8Rng::seed_from_u64(12);
        let differs = (0..32).any(|_| {
            let w = random_bits(&mut probe_rng, 64);
            compress(&w, &a).unwrap() != compress(&w, &b).unwrap()
        });
        assert!(differs);
    }

    #[test]
    fn zero_key_compresses_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hash = sample_hash(&PrivacyParams::new(100, 10, 10).unwrap(), &mut rng).unwrap();
        assert_eq!(compress(&vec![false; 100], &hash).unwrap(), vec![false; 80]);
    }

    #[test]
    fn compress_is_deterministic_and_checks_length() {
        let params = PrivacyParams::new(70, 5, 5).unwrap();
        let w = random_bits(&mut ChaCha8Rng::seed_from_u64(3), 70);
        let k1 = compress(&w, &sample_hash(&params, &mut ChaCha8Rng::seed_from_u64(4)).unwrap());
        let k2 = compress(&w, &sample_hash(&params, &mut ChaCha8Rng::seed_from_u64(4)).unwrap());
        assert_eq!(k1, k2);
        let hash = sample_hash(&params, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(
            compress(&w[..69], &hash),
            Err(AmplificationError::LengthMismatch { expected: 70, actual: 69 })
        );
    }

    #[test]
    fn small_collision_rate_is_two_to_minus_r() {
        let params = PrivacyParams::new(16, 6, 6).unwrap();
        assert_eq!(params.output_len(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_bits(&mut rng, 16);
        let mut b = a.clone();
        b[3] = !b[3];
        b[11] = !b[11];
        let trials = 20_000;
        let collisions = (0..trials)
            .filter(|_| {
                let h = sample_hash(&params, &mut rng).unwrap();
                compress(&a, &h).unwrap() == compress(&b, &h).unwrap()
            })
            .count();
        let rate = collisions as f64 / trials as f64;
        assert!((rate - 1.0 / 16.0).abs() < 0.01, "rate {rate}");
    }

    proptest! {
        #[test]
        fn matches_naive_product(seed in any::<u64>(), n in 1usize..150, r in 1usize..90) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let seed_bits = random_bits(&mut rng, n + r - 1);
            let hash = HashDescriptor::toeplitz(n, &seed_bits).unwrap();
            let w = random_bits(&mut rng, n);
            let fast = compress(&w, &hash).unwrap();
            prop_assert_eq!(fast.len(), r);
            prop_assert_eq!(fast, naive(&w, &hash));
        }

        #[test]
        fn compress_is_linear(seed in any::<u64>(), n in 2usize..300, t_frac in 0.0f64..0.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = (n as f64 * t_frac) as usize;
            let params = PrivacyParams::new(n, t, 1).unwrap_or(PrivacyParams { n, t: 0, s: 1 });
            let hash = sample_hash(&params, &mut rng).unwrap();
            let a = random_bits(&mut rng, n);
            let b = random_bits(&mut rng, n);
            let sum: Vec<bool> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let lhs = compress(&sum, &hash).unwrap();
            let rhs: Vec<bool> = compress(&a, &hash).unwrap().iter()
                .zip(compress(&b, &hash).unwrap())
                .map(|(x, y)| x ^ y)
                .collect();
            prop_assert_eq!(lhs.len(), params.output_len());
            prop_assert_eq!(lhs, rhs);
        }
    }
}
