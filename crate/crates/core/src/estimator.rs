//! Least-squares fingerprint estimation and its error variance.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::pingpong::{round_trip, PongObservation};
use crate::scalar::Scalar;
use crate::specfn::{ComplexSample, RandomStream};
use crate::worldmodel::{Fingerprint, RelayMode, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerprintEstimate<T> {
    pub p: ComplexSample<T>,
    /// Variance of `p - h~`.
    pub variance: T,
    pub relay_mode: RelayMode,
}

/// `p = x~^H z / ||x~||^2`.
pub fn ls_estimate<T: Scalar>(obs: &PongObservation<T>) -> Result<FingerprintEstimate<T>> {
    if obs.z.len() != obs.effective_training.len() {
        return Err(Error::domain("observation and training lengths differ"));
    }
    let energy = obs
        .effective_training
        .iter()
        .fold(T::zero(), |acc, x| acc + x.norm_sqr());
    if !(energy > T::zero()) {
        return Err(Error::domain("effective training has zero energy"));
    }
    let corr = obs
        .effective_training
        .iter()
        .zip(&obs.z)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, z)| acc + x.conj() * z);
    Ok(FingerprintEstimate {
        p: corr / energy,
        variance: variance_formula(obs)?,
        relay_mode: obs.relay_mode,
    })
}

/// AF: `sigma_{B|S}^2 / (K P_B beta^2)`; DF: `sigma_B^2 / (K P_S)`.
pub fn variance_formula<T: Scalar>(obs: &PongObservation<T>) -> Result<T> {
    let k = T::from_usize(obs.k()).unwrap();
    if obs.k() == 0 {
        return Err(Error::domain("empty observation"));
    }
    let denom = match obs.relay_mode {
        RelayMode::Af => k * obs.ping_power * obs.beta * obs.beta,
        RelayMode::Df => k * obs.sender_power,
    };
    if !(denom > T::zero()) {
        return Err(Error::domain("non-positive training energy"));
    }
    Ok(obs.net_noise_var / denom)
}

/// How Bob obtains Alice's reference fingerprint before the test phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Training {
    /// Use the exact residual channel (no training error).
    Ideal,
    /// Average this many LS estimates from ping-pong rounds with Alice.
    Estimated(usize),
}

/// Averages `n_iters` independent LS estimates of Alice's fingerprint.
/// Round `i` draws from `rng.child(i)`.
pub fn train_ground_truth<T: Scalar>(
    rng: &RandomStream,
    cfg: &SystemConfig<T>,
    n_iters: usize,
) -> Result<Fingerprint<T>> {
    if n_iters == 0 {
        return Err(Error::domain("training needs at least one iteration"));
    }
    let mut sum = Complex::new(T::zero(), T::zero());
    for i in 0..n_iters {
        let mut child = rng.child(i as u64);
        let obs = round_trip(&mut child, cfg, &cfg.alice);
        sum = sum + ls_estimate(&obs)?.p;
    }
    Ok(Fingerprint::new(sum / T::from_usize(n_iters).unwrap()))
}

pub fn ground_truth<T: Scalar>(
    rng: &RandomStream,
    cfg: &SystemConfig<T>,
    training: Training,
) -> Result<Fingerprint<T>> {
    match training {
        Training::Ideal => Ok(cfg.alice_fingerprint()),
        Training::Estimated(n) => train_ground_truth(rng, cfg, n),
    }
}
