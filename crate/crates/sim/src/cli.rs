//! `bb84` command line.

use std::fs;
use std::path::PathBuf;

use bb84_core::quantum::DEFAULT_ANCILLA_ANGLE;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::{
    EveChoice, ExperimentConfig, OutputFormat, PrivacySpec, ResendRuleChoice, StrategySpec,
    RNG_ALGORITHM,
};
use crate::experiment::{detection_rate_curve, run_experiment, ExperimentError};
use crate::report::ReportError;

#[derive(Debug, Parser)]
#[command(name = "bb84", version, about = "BB84 key distribution simulator with eavesdroppers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run sessions and report per-session statistics and aggregates.
    Run(CommonArgs),
    /// Estimate the parity-check detection rate as a function of rounds.
    DetectCurve {
        #[command(flatten)]
        common: CommonArgs,
        /// Parity round counts to evaluate.
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3, 4, 5, 6, 7, 8])]
        k_values: Vec<usize>,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, default_value_t = 10_000)]
    pub pulses: usize,
    #[arg(long, default_value_t = 1)]
    pub sessions: usize,
    #[arg(long, default_value_t = 1.0)]
    pub efficiency: f64,
    #[arg(long, default_value_t = 0)]
    pub parity_rounds: usize,
    #[arg(long, value_enum, default_value_t = EveChoice::None)]
    pub eve: EveChoice,
    /// Ancilla angle in radians for the indirect-copy attacks.
    #[arg(long, default_value_t = DEFAULT_ANCILLA_ANGLE, allow_negative_numbers = true)]
    pub ancilla_angle: f64,
    #[arg(long, value_enum, default_value_t = ResendRuleChoice::MaxPosterior)]
    pub resend_rule: ResendRuleChoice,
    #[arg(long, default_value_t = 1.0)]
    pub attack_fraction: f64,
    /// Reconciled bits fed to privacy amplification.
    #[arg(long, default_value_t = 256)]
    pub pa_n: usize,
    /// Bits of Eve information assumed by privacy amplification.
    #[arg(long, requires = "pa_s")]
    pub pa_t: Option<usize>,
    /// Privacy amplification security margin.
    #[arg(long, requires = "pa_t")]
    pub pa_s: Option<usize>,
    /// Flip one sifted bit of Bob's key in every session.
    #[arg(long)]
    pub force_difference: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    pub fn to_config(&self) -> ExperimentConfig {
        let privacy = match (self.pa_t, self.pa_s) {
            (Some(t), Some(s)) => Some(PrivacySpec { n: self.pa_n, t, s }),
            _ => None,
        };
        ExperimentConfig {
            n_pulses: self.pulses,
            n_sessions: self.sessions,
            efficiency: self.efficiency,
            parity_rounds: self.parity_rounds,
            strategy: StrategySpec {
                eve: self.eve,
                ancilla_angle: self.ancilla_angle,
                resend_rule: self.resend_rule,
                attack_fraction: self.attack_fraction,
            },
            privacy,
            force_key_difference: self.force_difference,
            master_seed: self.seed,
            format: self.format,
            rng: RNG_ALGORITHM.to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Experiment(e) => e.exit_code() as u8,
            _ => 3,
        }
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(args) => {
            let config = args.to_config();
            config.validate().map_err(ExperimentError::from)?;
            let report = run_experiment(&config)?;
            let text = match config.format {
                OutputFormat::Json => report.to_json()? + "\n",
                OutputFormat::Csv => report.to_csv()?,
            };
            emit(&text, &args.out)
        }
        Command::DetectCurve { common, k_values } => {
            let config = common.to_config();
            config.validate().map_err(ExperimentError::from)?;
            let report = detection_rate_curve(&config, k_values)?;
            let text = match config.format {
                OutputFormat::Json => report.to_json()? + "\n",
                OutputFormat::Csv => report.to_csv()?,
            };
            emit(&text, &common.out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_map_onto_config() {
        let cli = Cli::try_parse_from([
            "bb84", "run", "--pulses", "500", "--sessions", "3", "--eve", "indirect-physical",
            "--resend-rule", "resend-ancilla", "--ancilla-angle", "0.3", "--pa-t", "10",
            "--pa-s", "5", "--pa-n", "100", "--seed", "7", "--format", "csv",
        ])
        .unwrap();
        let Command::Run(args) = cli.command else { panic!("expected run") };
        let config = args.to_config();
        assert_eq!(config.n_pulses, 500);
        assert_eq!(config.strategy.eve, EveChoice::IndirectPhysical);
        assert_eq!(config.strategy.resend_rule, ResendRuleChoice::ResendAncilla);
        assert_eq!(config.privacy, Some(PrivacySpec { n: 100, t: 10, s: 5 }));
        assert_eq!(config.format, OutputFormat::Csv);
    }

    #[test]
    fn privacy_flags_come_in_pairs() {
        assert!(Cli::try_parse_from(["bb84", "run", "--pa-t", "10"]).is_err());
    }

    #[test]
    fn curve_k_values_parse() {
        let cli = Cli::try_parse_from(["bb84", "detect-curve", "--k-values", "1,3,5"]).unwrap();
        let Command::DetectCurve { k_values, .. } = cli.command else { panic!() };
        assert_eq!(k_values, vec![1, 3, 5]);
        let cli = Cli::try_parse_from(["bb84", "detect-curve"]).unwrap();
        let Command::DetectCurve { k_values, .. } = cli.command else { panic!() };
        assert_eq!(k_values, (1..=8).collect::<Vec<_>>());
    }
}
