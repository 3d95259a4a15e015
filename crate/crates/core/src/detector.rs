//! Neyman-Pearson test of the estimated fingerprint against Alice's.

use std::fmt;

use crate::analysis::Corollary1Density;
use crate::error::{Error, Result};
use crate::estimator::{ls_estimate, FingerprintEstimate};
use crate::pingpong::{link_variance, round_trip_with_link, LinkRealization};
use crate::scalar::Scalar;
use crate::specfn::{Probability, RandomStream};
use crate::worldmodel::{CsiMode, Device, DeviceId, Fingerprint, RelayMode, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    /// Sender judged to be Alice; packet accepted.
    H0Accept,
    /// Sender judged to be an intruder; packet rejected.
    H1Reject,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::H0Accept => f.write_str("H0 (accept)"),
            Hypothesis::H1Reject => f.write_str("H1 (reject)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision<T> {
    pub hypothesis: Hypothesis,
    /// `T = |p - mu_A|`.
    pub statistic: T,
    pub threshold: T,
}

impl<T> Decision<T> {
    pub fn is_rejected(&self) -> bool {
        self.hypothesis == Hypothesis::H1Reject
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSpec<T> {
    pub pfa_setpoint: Probability<T>,
    pub csi_mode: CsiMode,
    pub value: T,
}

/// `delta = sqrt(-ln(Pfa) Sigma_{B|A})`.
pub fn threshold_full_csi<T: Scalar>(pfa: Probability<T>, sigma_ba: T) -> Result<T> {
    if !pfa.is_interior() {
        return Err(Error::domain(format!(
            "false-alarm set-point {} not in (0, 1)",
            pfa.value()
        )));
    }
    if !(sigma_ba > T::zero()) || !sigma_ba.is_finite() {
        return Err(Error::domain(format!(
            "estimate variance must be positive, got {sigma_ba}"
        )));
    }
    Ok((-pfa.value().ln() * sigma_ba).sqrt())
}

/// Threshold for AF relaying when Bob knows only the average Alice-Bob SNR:
/// the mean of the threshold's distribution over Alice's channel.
pub fn threshold_statistical_af<T: Scalar>(cfg: &SystemConfig<T>) -> Result<T> {
    if cfg.relay_mode != RelayMode::Af {
        return Err(Error::Usage(
            "statistical-CSI threshold applies to amplify-and-forward only".into(),
        ));
    }
    Ok(Corollary1Density::from_config(cfg)?.mean())
}

/// `Pfa = exp(-delta^2 / Sigma_{B|A})`.
pub fn analytic_pfa<T: Scalar>(delta: T, sigma_ba: T) -> Result<Probability<T>> {
    if !(delta >= T::zero()) {
        return Err(Error::domain(format!("negative threshold {delta}")));
    }
    if !(sigma_ba > T::zero()) {
        return Err(Error::domain(format!(
            "estimate variance must be positive, got {sigma_ba}"
        )));
    }
    Ok(Probability::saturating((-(delta * delta) / sigma_ba).exp()))
}

/// Threshold Bob uses under `cfg`. `sigma_ba` is the realized
/// `Sigma_{B|A}`; it is ignored for statistical-CSI AF.
pub fn threshold_for<T: Scalar>(cfg: &SystemConfig<T>, sigma_ba: T) -> Result<ThresholdSpec<T>> {
    let csi_mode = match cfg.relay_mode {
        // The DF variance is deterministic, so Bob always has it.
        RelayMode::Df => CsiMode::Full,
        RelayMode::Af => cfg.csi_mode,
    };
    let value = match csi_mode {
        CsiMode::Full => threshold_full_csi(cfg.pfa_setpoint, sigma_ba)?,
        CsiMode::Statistical => threshold_statistical_af(cfg)?,
    };
    Ok(ThresholdSpec {
        pfa_setpoint: cfg.pfa_setpoint,
        csi_mode,
        value,
    })
}

/// `H1` iff `|p - mu_A| > delta`; ties go to `H0`.
pub fn decide<T: Scalar>(est: &FingerprintEstimate<T>, mu_a: &Fingerprint<T>, delta: T) -> Decision<T> {
    let statistic = (est.p - mu_a.value).norm();
    let hypothesis = if statistic > delta {
        Hypothesis::H1Reject
    } else {
        Hypothesis::H0Accept
    };
    Decision {
        hypothesis,
        statistic,
        threshold: delta,
    }
}

/// What Bob holds after the ping-pong of one slot, before thresholding.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotMeasurement<T> {
    pub estimate: FingerprintEstimate<T>,
    /// Realized `Sigma_{B|A}` a full-CSI Bob thresholds on.
    pub sigma_ba: T,
}

/// Ping-pong with the occupant and LS estimate. When Eve occupies the slot
/// a full-CSI AF Bob still knows Alice's channel; it is drawn here after the
/// occupant's round trip.
pub fn measure_slot<T: Scalar>(
    rng: &mut RandomStream,
    cfg: &SystemConfig<T>,
    occupant: &Device<T>,
) -> Result<SlotMeasurement<T>> {
    let (link, obs) = round_trip_with_link(rng, cfg, occupant);
    let estimate = ls_estimate(&obs)?;
    let sigma_ba = if occupant.id == DeviceId::Alice {
        link_variance(cfg, occupant, &link)
    } else {
        match (cfg.relay_mode, cfg.csi_mode) {
            (RelayMode::Af, CsiMode::Full) => {
                let alice_link = LinkRealization::sample(rng, cfg, &cfg.alice);
                link_variance(cfg, &cfg.alice, &alice_link)
            }
            _ => link_variance(cfg, &cfg.alice, &link),
        }
    };
    Ok(SlotMeasurement { estimate, sigma_ba })
}

/// Everything one authentication slot produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome<T> {
    pub decision: Decision<T>,
    pub estimate: FingerprintEstimate<T>,
    pub sigma_ba: T,
    pub threshold: ThresholdSpec<T>,
}

/// One test-phase slot: ping-pong with the occupant, LS estimate, threshold,
/// decision.
pub fn authenticate_slot_detailed<T: Scalar>(
    rng: &mut RandomStream,
    cfg: &SystemConfig<T>,
    occupant: &Device<T>,
    mu_a: &Fingerprint<T>,
) -> Result<SlotOutcome<T>> {
    let SlotMeasurement { estimate, sigma_ba } = measure_slot(rng, cfg, occupant)?;
    let threshold = threshold_for(cfg, sigma_ba)?;
    Ok(SlotOutcome {
        decision: decide(&estimate, mu_a, threshold.value),
        estimate,
        sigma_ba,
        threshold,
    })
}

pub fn authenticate_slot<T: Scalar>(
    rng: &mut RandomStream,
    cfg: &SystemConfig<T>,
    occupant: &Device<T>,
    mu_a: &Fingerprint<T>,
) -> Result<Decision<T>> {
    Ok(authenticate_slot_detailed(rng, cfg, occupant, mu_a)?.decision)
}
