//! Frozen Monte-Carlo values of Eve's residual advantage after privacy
//! amplification of intercept/resend sessions (n = 256, t = 130, 1000
//! sessions per margin, ChaCha8 streams from master seed 30 + s).

use bb84_core::{eve_residual_information, PrivacyParams};
use bb84_sim::{map_sessions, EveChoice, ExperimentConfig, PrivacySpec, StrategySpec};

const FIXTURES: [(usize, f64); 3] = [
    (4, 0.004979508196721313),
    (8, 0.001817796610169489),
    (16, 0.00014545454545454548),
];

#[test]
fn intercept_resend_advantage_fixtures() {
    let mut previous = f64::INFINITY;
    for (s, expected) in FIXTURES {
        let config = ExperimentConfig {
            n_pulses: 800,
            n_sessions: 1000,
            strategy: StrategySpec::of(EveChoice::InterceptResend),
            privacy: Some(PrivacySpec { n: 256, t: 130, s }),
            master_seed: 30 + s as u64,
            ..ExperimentConfig::default()
        };
        let transcripts = map_sessions(&config, |_, _, t| {
            let mut t = t.clone();
            t.pulses.clear();
            Ok(t)
        })
        .unwrap();
        let params = PrivacyParams::new(256, 130, s).unwrap();
        let advantage = eve_residual_information(&transcripts, &params).unwrap();
        assert!((advantage - expected).abs() <= 1e-15, "s={s}: {advantage}");
        assert!(advantage < previous);
        previous = advantage;
    }
}

#[test]
fn honest_sessions_leak_nothing() {
    let config = ExperimentConfig {
        n_pulses: 800,
        n_sessions: 20,
        parity_rounds: 10,
        privacy: Some(PrivacySpec { n: 256, t: 10, s: 4 }),
        ..ExperimentConfig::default()
    };
    let transcripts = map_sessions(&config, |_, _, t| Ok(t.clone())).unwrap();
    let params = PrivacyParams::new(256, 10, 4).unwrap();
    assert_eq!(eve_residual_information(&transcripts, &params).unwrap(), 0.0);
    let other = PrivacyParams::new(256, 10, 5).unwrap();
    assert!(eve_residual_information(&transcripts, &other).is_err());
}
