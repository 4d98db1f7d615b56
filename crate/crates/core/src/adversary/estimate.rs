use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AdversaryKind;
use crate::error::{contract, Result};
use crate::math::{rng_stream, Dim};
use crate::protocol::{run_protocol, MaskRule, ProtocolConfig};
use crate::stats::binomial_std_error;

/// `1 - ((d + 1) / (2d))^n`: the chance that `n` test rounds expose a Bob
/// who intercepts and resends Charlie's qudits with uniformly guessed
/// directions. A right guess always escapes, a wrong one escapes with
/// probability `1/d`.
pub fn detection_analytic(d: Dim, n: usize) -> f64 {
    let d = d.get() as f64;
    1.0 - ((d + 1.0) / (2.0 * d)).powi(n as i32)
}

/// Monte Carlo estimate of the abort probability under an attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEstimate {
    pub adversary: AdversaryKind,
    pub trials: usize,
    pub detected: usize,
    /// Runs the adversary invalidated; excluded from `detected`.
    #[serde(default)]
    pub invalid: usize,
    pub rate: f64,
    /// `sqrt(rate (1 - rate) / trials)`.
    pub std_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic: Option<f64>,
    /// `(rate - analytic) / sqrt(analytic (1 - analytic) / trials)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_score: Option<f64>,
}

impl DetectionEstimate {
    pub fn from_counts(adversary: AdversaryKind, trials: usize, detected: usize, analytic: Option<f64>) -> Self {
        let rate = detected as f64 / trials as f64;
        let z_score = analytic.and_then(|p| {
            let se = binomial_std_error(p, trials);
            (se > 0.0).then(|| (rate - p) / se)
        });
        DetectionEstimate {
            adversary,
            trials,
            detected,
            invalid: 0,
            rate,
            std_error: binomial_std_error(rate, trials),
            analytic,
            z_score,
        }
    }

    /// `rate +- k * std_error`.
    pub fn interval(&self, k: f64) -> (f64, f64) {
        (self.rate - k * self.std_error, self.rate + k * self.std_error)
    }
}

/// Runs `trials` independent protocol runs under `kind` and counts aborts.
/// Trial `i` is seeded from the stream `(config.seed, "trial-i")`, so the
/// result does not depend on how trials are scheduled across threads.
pub fn estimate_detection(config: &ProtocolConfig, kind: AdversaryKind, trials: usize) -> Result<DetectionEstimate> {
    if trials == 0 {
        return contract("at least one trial is required");
    }
    config.validate()?;
    let outcomes: Vec<Result<(bool, bool)>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut cfg = config.clone();
            cfg.seed = trial_seed(config.seed, i);
            let mut strategy = kind.build();
            let report = run_protocol(&cfg, strategy.as_deref_mut())?;
            Ok((report.aborted, report.invalid.is_some()))
        })
        .collect();
    let mut detected = 0;
    let mut invalid = 0;
    for o in outcomes {
        let (aborted, bad) = o?;
        detected += aborted as usize;
        invalid += bad as usize;
    }
    let analytic = match (kind, config.mask) {
        (AdversaryKind::BobIr, MaskRule::Balanced) => Some(detection_analytic(config.d, config.n)),
        _ => None,
    };
    let mut est = DetectionEstimate::from_counts(kind, trials, detected, analytic);
    est.invalid = invalid;
    Ok(est)
}

pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    rng_stream(seed, &format!("trial-{trial}")).next_u64()
}
