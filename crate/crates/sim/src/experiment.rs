//! Seeded multi-session experiments.
//!
//! Sessions run in parallel, each on its own ChaCha8 stream derived from the
//! master seed and the session index; results are collected in index order,
//! so a report depends only on the configuration.

use bb84_core::amplification::session_eve_advantage;
use bb84_core::{run_session, AmplificationError, ProtocolError, SessionTranscript};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::report::{CurvePoint, CurveReport, ExperimentReport, SessionRow};
use crate::seed::{derive_seed, session_rng};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("session {session}: {source}")]
    Session {
        session: usize,
        #[source]
        source: ProtocolError,
    },
    #[error("session {session}: {source}")]
    Analysis {
        session: usize,
        #[source]
        source: AmplificationError,
    },
}

impl ExperimentError {
    /// Process exit code: 2 for configuration errors, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            _ => 3,
        }
    }
}

/// Runs every session of `config` and hands each transcript to `inspect`.
///
/// Transcripts are dropped after inspection; results come back in session order.
pub fn map_sessions<T, F>(config: &ExperimentConfig, inspect: F) -> Result<Vec<T>, ExperimentError>
where
    T: Send,
    F: Fn(usize, u64, &SessionTranscript) -> Result<T, ExperimentError> + Sync,
{
    let session_config = config.session_config()?;
    let strategy = config.strategy.build()?;
    (0..config.n_sessions)
        .into_par_iter()
        .map(|index| {
            let seed = derive_seed(config.master_seed, index as u64);
            let mut rng = session_rng(config.master_seed, index as u64);
            let transcript = run_session(&session_config, &strategy, &mut rng)
                .map_err(|source| ExperimentError::Session { session: index, source })?;
            inspect(index, seed, &transcript)
        })
        .collect()
}

pub fn session_row(
    index: usize,
    seed: u64,
    transcript: &SessionTranscript,
    n_pulses: usize,
) -> Result<SessionRow, ExperimentError> {
    let eve_advantage = match &transcript.amplified {
        Some(_) => Some(
            session_eve_advantage(transcript, index)
                .map_err(|source| ExperimentError::Analysis { session: index, source })?,
        ),
        None => None,
    };
    Ok(SessionRow {
        index,
        seed,
        qber: transcript.qber(),
        sifted_errors: transcript.sifted_errors(),
        sifted_length: transcript.sifted_len(),
        sifted_fraction: transcript.sifted_len() as f64 / n_pulses as f64,
        detected: transcript.detected,
        parity_rounds_run: transcript.parity_rounds.len(),
        final_key_length: transcript.final_key_len(),
        eve_accuracy: transcript.eve_accuracy(),
        eve_certain_bits: transcript.eve_certain_bits(),
        eve_advantage,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let rows = map_sessions(config, |index, seed, transcript| {
        session_row(index, seed, transcript, config.n_pulses)
    })?;
    Ok(ExperimentReport::new(config.clone(), rows))
}

/// Detection rate for each number of parity rounds in `k_values`.
///
/// Each `k` runs a full experiment whose master seed is derived from the
/// configured one and `k`.
pub fn detection_rate_curve(
    config: &ExperimentConfig,
    k_values: &[usize],
) -> Result<CurveReport, ExperimentError> {
    let mut curve = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let per_k = ExperimentConfig {
            parity_rounds: k,
            master_seed: derive_seed(config.master_seed, k as u64),
            ..config.clone()
        };
        let detected = map_sessions(&per_k, |_, _, transcript| Ok(transcript.detected))?;
        let hits = detected.iter().filter(|&&d| d).count();
        curve.push(CurvePoint {
            k,
            detection_rate: hits as f64 / detected.len() as f64,
            sessions: detected.len(),
        });
    }
    Ok(CurveReport {
        config: config.clone(),
        curve,
    })
}
