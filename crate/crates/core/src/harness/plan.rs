use std::path::Path;

use num_complex::Complex;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::estimator::Training;
use crate::specfn::Probability;
use crate::worldmodel::{Fingerprint, SystemConfig, SystemConfigFile};

/// Environment variable that overrides the default trial count.
pub const TRIALS_ENV: &str = "RPAUTH_TRIALS";

const DEFAULT_TRIALS: usize = 100_000;

/// `RPAUTH_TRIALS` if set to a positive integer, else 100000.
pub fn default_trials() -> usize {
    std::env::var(TRIALS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(DEFAULT_TRIALS)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// How Eve's fingerprint is chosen in intruder trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EveModel {
    FixedFingerprint(Fingerprint<f64>),
    /// A fresh `mu_E ~ CN(1, 1)` per trial.
    RandomPerTrial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub base: SystemConfig<f64>,
    /// Strictly increasing false-alarm set-points in `(0, 1)`.
    pub pfa_grid: Vec<Probability<f64>>,
    /// Linear `(gamma_AB, gamma_EB)` pairs; powers follow [`SystemConfig::at_snr`].
    pub snr_grid: Option<Vec<(f64, f64)>>,
    pub trials: usize,
    pub seed: u64,
    pub eve_model: EveModel,
    pub training: Training,
}

pub const DEFAULT_PFA_GRID: [f64; 10] = [0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 0.9];
pub const DEFAULT_SNR_GRID_DB: [f64; 4] = [0.0, 10.0, 20.0, 30.0];

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            base: SystemConfig::default(),
            pfa_grid: grid(&DEFAULT_PFA_GRID),
            snr_grid: None,
            trials: default_trials(),
            seed: 42,
            eve_model: EveModel::RandomPerTrial,
            training: Training::Ideal,
        }
    }
}

pub(crate) fn grid(values: &[f64]) -> Vec<Probability<f64>> {
    values
        .iter()
        .map(|&p| Probability::new(p).expect("grid constants are probabilities"))
        .collect()
}

/// The `{0, 10, 20, 30}` dB grid with equal Alice and Eve SNRs.
pub fn default_snr_grid() -> Vec<(f64, f64)> {
    DEFAULT_SNR_GRID_DB
        .iter()
        .map(|&db| (db_to_linear(db), db_to_linear(db)))
        .collect()
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.pfa_grid.is_empty() {
            return Err(Error::config("pfa_grid is empty"));
        }
        if let Some(p) = self.pfa_grid.iter().find(|p| !p.is_interior()) {
            return Err(Error::config(format!("pfa_grid value {} not in (0, 1)", p.value())));
        }
        if self.pfa_grid.windows(2).any(|w| w[0].value() >= w[1].value()) {
            return Err(Error::config("pfa_grid must be strictly increasing"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if let Some(snr) = &self.snr_grid {
            if snr.is_empty() {
                return Err(Error::config("snr_grid_db is empty"));
            }
            if snr
                .iter()
                .any(|&(a, e)| !(a > 0.0 && e > 0.0 && a.is_finite() && e.is_finite()))
            {
                return Err(Error::config("snr_grid_db entries must be finite"));
            }
        }
        if let Training::Estimated(0) = self.training {
            return Err(Error::config("training_iterations must be positive"));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: PlanFile = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        file.into_plan()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum EveModelKey {
    Fixed,
    Random,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    system: Option<SystemConfigFile>,
    pfa_grid: Option<Vec<f64>>,
    snr_grid_db: Option<Vec<[f64; 2]>>,
    trials: Option<usize>,
    seed: Option<u64>,
    eve_model: Option<EveModelKey>,
    eve_fingerprint: Option<[f64; 2]>,
    /// 0 selects ideal training.
    training_iterations: Option<usize>,
}

impl PlanFile {
    fn into_plan(self) -> Result<ExperimentPlan> {
        let mut plan = ExperimentPlan::default();
        if let Some(sys) = self.system {
            plan.base = sys.into_config()?;
        }
        if let Some(g) = self.pfa_grid {
            plan.pfa_grid = g
                .into_iter()
                .map(|p| {
                    Probability::new(p).map_err(|_| Error::config(format!("pfa_grid value {p} is not a probability")))
                })
                .collect::<Result<_>>()?;
        }
        if let Some(g) = self.snr_grid_db {
            plan.snr_grid = Some(g.iter().map(|&[a, e]| (db_to_linear(a), db_to_linear(e))).collect());
        }
        if let Some(n) = self.trials {
            plan.trials = n;
        }
        if let Some(s) = self.seed {
            plan.seed = s;
        }
        plan.eve_model = match (self.eve_model, self.eve_fingerprint) {
            (Some(EveModelKey::Random), Some(_)) => {
                return Err(Error::config("eve_fingerprint only applies with eve_model = \"fixed\""));
            }
            (Some(EveModelKey::Random), None) => EveModel::RandomPerTrial,
            (Some(EveModelKey::Fixed), v) | (None, v @ Some(_)) => EveModel::FixedFingerprint(match v {
                Some([re, im]) => Fingerprint::new(Complex::new(re, im)),
                None => plan.base.eve_fingerprint(),
            }),
            (None, None) => plan.eve_model,
        };
        if let Some(n) = self.training_iterations {
            plan.training = if n == 0 {
                Training::Ideal
            } else {
                Training::Estimated(n)
            };
        }
        plan.validate()?;
        Ok(plan)
    }
}
