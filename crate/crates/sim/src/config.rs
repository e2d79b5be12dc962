//! Experiment configuration.

use bb84_core::quantum::DEFAULT_ANCILLA_ANGLE;
use bb84_core::{EveStrategy, PrivacyParams, ReferenceList, ResendRule, SessionConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::real;

/// Name of the per-session generator, echoed in every report.
pub const RNG_ALGORITHM: &str = "chacha8";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),
    #[error("efficiency {0} is outside (0, 1]")]
    Efficiency(f64),
    #[error("attack fraction {0} is outside [0, 1]")]
    AttackFraction(f64),
    #[error("ancilla angle {0} is not finite")]
    AncillaAngle(f64),
    #[error("invalid eavesdropper: {0}")]
    Strategy(#[from] bb84_core::QuantumError),
    #[error(transparent)]
    Privacy(#[from] bb84_core::AmplificationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EveChoice {
    None,
    InterceptResend,
    IndirectOracle,
    IndirectPhysical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ResendRuleChoice {
    MaxPosterior,
    ResendAncilla,
}

impl From<ResendRuleChoice> for ResendRule {
    fn from(choice: ResendRuleChoice) -> Self {
        match choice {
            ResendRuleChoice::MaxPosterior => ResendRule::MaxPosterior,
            ResendRuleChoice::ResendAncilla => ResendRule::ResendAncilla,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub eve: EveChoice,
    #[serde(with = "real")]
    pub ancilla_angle: f64,
    pub resend_rule: ResendRuleChoice,
    #[serde(with = "real")]
    pub attack_fraction: f64,
}

impl Default for StrategySpec {
    fn default() -> Self {
        StrategySpec {
            eve: EveChoice::None,
            ancilla_angle: DEFAULT_ANCILLA_ANGLE,
            resend_rule: ResendRuleChoice::MaxPosterior,
            attack_fraction: 1.0,
        }
    }
}

impl StrategySpec {
    pub fn of(eve: EveChoice) -> Self {
        StrategySpec {
            eve,
            ..StrategySpec::default()
        }
    }

    pub fn build(&self) -> Result<EveStrategy, ConfigError> {
        if !(0.0..=1.0).contains(&self.attack_fraction) {
            return Err(ConfigError::AttackFraction(self.attack_fraction));
        }
        if !self.ancilla_angle.is_finite() {
            return Err(ConfigError::AncillaAngle(self.ancilla_angle));
        }
        let strategy = match self.eve {
            EveChoice::None => EveStrategy::none(),
            EveChoice::InterceptResend => EveStrategy::intercept_resend(),
            EveChoice::IndirectOracle => {
                EveStrategy::indirect_copy_oracle(ReferenceList::bb84(self.ancilla_angle)?)
            }
            EveChoice::IndirectPhysical => EveStrategy::indirect_copy_physical(
                ReferenceList::bb84(self.ancilla_angle)?,
                self.resend_rule.into(),
            ),
        };
        strategy
            .with_attack_fraction(self.attack_fraction)
            .map_err(|_| ConfigError::AttackFraction(self.attack_fraction))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivacySpec {
    pub n: usize,
    pub t: usize,
    pub s: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_pulses: usize,
    pub n_sessions: usize,
    #[serde(with = "real")]
    pub efficiency: f64,
    pub parity_rounds: usize,
    pub strategy: StrategySpec,
    /// `None` skips privacy amplification.
    pub privacy: Option<PrivacySpec>,
    /// Flip one sifted bit of Bob's key in every session.
    pub force_key_difference: bool,
    pub master_seed: u64,
    pub format: OutputFormat,
    pub rng: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_pulses: 10_000,
            n_sessions: 1,
            efficiency: 1.0,
            parity_rounds: 0,
            strategy: StrategySpec::default(),
            privacy: None,
            force_key_difference: false,
            master_seed: 0,
            format: OutputFormat::Json,
            rng: RNG_ALGORITHM.to_string(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.session_config()?;
        self.strategy.build()?;
        Ok(())
    }

    pub fn privacy_params(&self) -> Result<Option<PrivacyParams>, ConfigError> {
        self.privacy
            .map(|p| PrivacyParams::new(p.n, p.t, p.s))
            .transpose()
            .map_err(ConfigError::from)
    }

    pub fn session_config(&self) -> Result<SessionConfig, ConfigError> {
        if self.n_pulses == 0 {
            return Err(ConfigError::ZeroCount("n_pulses"));
        }
        if self.n_sessions == 0 {
            return Err(ConfigError::ZeroCount("n_sessions"));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(ConfigError::Efficiency(self.efficiency));
        }
        Ok(SessionConfig {
            n_pulses: self.n_pulses,
            efficiency: self.efficiency,
            parity_rounds: self.parity_rounds,
            force_key_difference: self.force_key_difference,
            privacy: self.privacy_params()?,
        })
    }
}
