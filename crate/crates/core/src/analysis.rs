//! Closed-form missed-detection probability and the offline approximations
//! used when Eve's fingerprint or the AF channel realizations are unknown.

use crate::error::{Error, Result};
use crate::pingpong::compute_beta;
use crate::scalar::Scalar;
use crate::specfn::{marcum_q1, rice_mean, Probability};
use crate::worldmodel::{Fingerprint, SystemConfig};

/// `Rice(v, sigma)`: the law of `|v + CN(0, 2 sigma^2)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiceParams<T> {
    pub v: T,
    pub sigma: T,
}

impl<T: Scalar> RiceParams<T> {
    pub fn new(v: T, sigma: T) -> Result<Self> {
        if !(v >= T::zero()) || !(sigma > T::zero()) || !v.is_finite() || !sigma.is_finite() {
            return Err(Error::domain(format!("invalid Rice parameters ({v}, {sigma})")));
        }
        Ok(RiceParams { v, sigma })
    }

    pub fn mean(&self) -> Result<T> {
        rice_mean(self.v, self.sigma)
    }
}

/// Arguments `(a, b)` of `Q1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarcumArgs<T> {
    pub a: T,
    pub b: T,
}

impl<T: Scalar> MarcumArgs<T> {
    pub fn new(a: T, b: T) -> Result<Self> {
        if !(a >= T::zero()) || !(b >= T::zero()) || !a.is_finite() || !b.is_finite() {
            return Err(Error::domain(format!("invalid Marcum arguments ({a}, {b})")));
        }
        Ok(MarcumArgs { a, b })
    }
}

/// `e^{x^2} erfc(x)` for `x >= 0`.
fn erfcx(x: f64) -> f64 {
    if x < 5.0 {
        (x * x).exp() * libm::erfc(x)
    } else {
        // Continued fraction 1/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
        // evaluated bottom-up; 60 levels is far past convergence at x >= 5.
        let mut tail = x;
        for k in (1..=60).rev() {
            tail = x + (k as f64 / 2.0) / tail;
        }
        1.0 / (std::f64::consts::PI.sqrt() * tail)
    }
}

/// `E[Y]` for the density `2 k y exp(-k (y^2 - s))` on `y >= sqrt(s)`:
/// `sqrt(s) + sqrt(pi / k) / 2 * e^{k s} erfc(sqrt(k s))`.
fn shifted_rayleigh_mean<T: Scalar>(rate: T, shift: T) -> T {
    let (k, s) = (rate.as_f64(), shift.as_f64());
    let tail = 0.5 * (std::f64::consts::PI / k).sqrt() * erfcx((k * s).sqrt());
    T::lit(s.sqrt() + tail)
}

fn shifted_rayleigh_pdf<T: Scalar>(y: T, rate: T, shift: T) -> T {
    if y < T::zero() || y * y < shift {
        return T::zero();
    }
    T::lit(2.0) * rate * y * (-rate * (y * y - shift)).exp()
}

/// Law of the AF threshold when only the average Alice-Bob SNR is known:
/// `f(y) = 2 lambda y exp(-lambda (y^2 - c))`, `y >= sqrt(c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corollary1Density<T> {
    pub lambda: T,
    pub c: T,
}

impl<T: Scalar> Corollary1Density<T> {
    pub fn new(lambda: T, c: T) -> Result<Self> {
        if !(lambda > T::zero()) || !(c >= T::zero()) || !lambda.is_finite() || !c.is_finite() {
            return Err(Error::domain(format!("invalid threshold density ({lambda}, {c})")));
        }
        Ok(Corollary1Density { lambda, c })
    }

    /// `lambda = K P_B / (-ln Pfa sigma_A^2 gamma_AB)`,
    /// `c = -ln Pfa sigma_B^2 / (K P_B beta_AB^2)` with `beta_AB` taken at
    /// `|h_BA|^2 = |h_B^Tx h_A^Rx|^2`.
    pub fn from_config(cfg: &SystemConfig<T>) -> Result<Self> {
        let pfa = cfg.pfa_setpoint;
        if !pfa.is_interior() {
            return Err(Error::domain("false-alarm set-point must lie in (0, 1)"));
        }
        let neg_ln = -pfa.value().ln();
        let k = T::from_usize(cfg.k).unwrap();
        let p_b = cfg.bob.power;
        let gain = (cfg.bob.rp.h_tx * cfg.alice.rp.h_rx).norm_sqr();
        let beta = compute_beta(cfg.alice.power, p_b, gain, cfg.alice.noise_var)?;
        Self::new(
            k * p_b / (neg_ln * cfg.alice.noise_var * cfg.gamma_ab),
            neg_ln * cfg.bob.noise_var / (k * p_b * beta * beta),
        )
    }

    pub fn pdf(&self, y: T) -> T {
        shifted_rayleigh_pdf(y, self.lambda, self.c)
    }

    pub fn support_start(&self) -> T {
        self.c.sqrt()
    }

    /// Exact `E[Y]` of the density.
    pub fn mean(&self) -> T {
        shifted_rayleigh_mean(self.lambda, self.c)
    }

    /// `E[Y^2] = c + 1 / lambda`.
    pub fn second_moment(&self) -> T {
        self.c + self.lambda.recip()
    }
}

/// The threshold estimate written as
/// `((1/gamma_AB) sigma_B^2 / (sigma_A^2 beta_AB^2) + 1) /
/// ((1/gamma_AB) K P_B / (-ln Pfa sigma_A^2))`.
///
/// This simplifies to `c + 1/lambda`, the second moment of the threshold
/// density rather than its mean; [`Corollary1Density::mean`] is what the
/// detector uses.
pub fn threshold_closed_form<T: Scalar>(cfg: &SystemConfig<T>) -> Result<T> {
    let neg_ln = -cfg.pfa_setpoint.value().ln();
    let k = T::from_usize(cfg.k).unwrap();
    let gain = (cfg.bob.rp.h_tx * cfg.alice.rp.h_rx).norm_sqr();
    let beta = compute_beta(cfg.alice.power, cfg.bob.power, gain, cfg.alice.noise_var)?;
    let inv_g = cfg.gamma_ab.recip();
    let sa = cfg.alice.noise_var;
    let num = inv_g * (cfg.bob.noise_var / (sa * beta * beta)) + T::one();
    let den = inv_g * (k * cfg.bob.power / (neg_ln * sa));
    Ok(num / den)
}

/// Law of `sigma_T = sqrt(Sigma_{B|E}^AF / 2)`:
/// `f(s) = 2 eta s exp(-eta (s^2 - d))`, `s >= sqrt(d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaTDensity<T> {
    pub eta: T,
    pub d: T,
}

impl<T: Scalar> SigmaTDensity<T> {
    pub fn new(eta: T, d: T) -> Result<Self> {
        if !(eta > T::zero()) || !(d >= T::zero()) || !eta.is_finite() || !d.is_finite() {
            return Err(Error::domain(format!("invalid sigma_T density ({eta}, {d})")));
        }
        Ok(SigmaTDensity { eta, d })
    }

    /// `eta = 2 K P_B / (sigma_E^2 gamma_EB)`, `d = sigma_B^2 / (2 K P_B beta_EB^2)`
    /// with `beta_EB` taken at `|h_BE|^2 = |h_B^Tx h_E^Rx|^2`.
    pub fn from_config(cfg: &SystemConfig<T>) -> Result<Self> {
        let k = T::from_usize(cfg.k).unwrap();
        let p_b = cfg.bob.power;
        let two = T::lit(2.0);
        let gain = (cfg.bob.rp.h_tx * cfg.eve.rp.h_rx).norm_sqr();
        let beta = compute_beta(cfg.eve.power, p_b, gain, cfg.eve.noise_var)?;
        Self::new(
            two * k * p_b / (cfg.eve.noise_var * cfg.gamma_eb),
            cfg.bob.noise_var / (two * k * p_b * beta * beta),
        )
    }

    pub fn pdf(&self, s: T) -> T {
        shifted_rayleigh_pdf(s, self.eta, self.d)
    }

    pub fn support_start(&self) -> T {
        self.d.sqrt()
    }

    pub fn mean(&self) -> T {
        shifted_rayleigh_mean(self.eta, self.d)
    }

    /// `E[sigma_T^2] = d + 1 / eta`.
    pub fn second_moment(&self) -> T {
        self.d + self.eta.recip()
    }
}

/// `E(sigma_T)` as written in closed form,
/// `((1/gamma_EB) sigma_B^2 / (sigma_E^2 beta_EB^2) + 1) / ((1/gamma_EB) 2 K P_B / sigma_E^2)`,
/// which equals `d + 1/eta`.
pub fn sigma_t_closed_form<T: Scalar>(cfg: &SystemConfig<T>) -> Result<T> {
    let k = T::from_usize(cfg.k).unwrap();
    let gain = (cfg.bob.rp.h_tx * cfg.eve.rp.h_rx).norm_sqr();
    let beta = compute_beta(cfg.eve.power, cfg.bob.power, gain, cfg.eve.noise_var)?;
    let inv_g = cfg.gamma_eb.recip();
    let se = cfg.eve.noise_var;
    let num = inv_g * (cfg.bob.noise_var / (se * beta * beta)) + T::one();
    let den = inv_g * (T::lit(2.0) * k * cfg.bob.power / se);
    Ok(num / den)
}

pub fn corollary1_pdf<T: Scalar>(y: T, params: &Corollary1Density<T>) -> T {
    params.pdf(y)
}

pub fn sigma_t_pdf<T: Scalar>(s: T, params: &SigmaTDensity<T>) -> T {
    params.pdf(s)
}

/// `P_md = 1 - Q1(v_T / sigma_T, delta / sigma_T)` with `v_T = |mu_E - mu_A|`
/// and `sigma_T = sqrt(Sigma_{B|E} / 2)`.
pub fn pmd_exact<T: Scalar>(
    mu_a: &Fingerprint<T>,
    mu_e: &Fingerprint<T>,
    sigma_be: T,
    delta: T,
) -> Result<Probability<T>> {
    if !(sigma_be > T::zero()) || !sigma_be.is_finite() {
        return Err(Error::domain(format!(
            "pmd_exact: variance must be positive, got {sigma_be}"
        )));
    }
    if !(delta >= T::zero()) {
        return Err(Error::domain(format!("pmd_exact: negative threshold {delta}")));
    }
    let sigma_t = (sigma_be / T::lit(2.0)).sqrt();
    let v_t = (mu_e.value - mu_a.value).norm();
    pmd_approx(&MarcumArgs::new(v_t / sigma_t, delta / sigma_t)?)
}

/// `1 - Q1(a, b)`.
pub fn pmd_approx<T: Scalar>(args: &MarcumArgs<T>) -> Result<Probability<T>> {
    Ok(marcum_q1(args.a, args.b)?.complement())
}

/// Rice law of `a` for DF relaying with `mu_E ~ CN(1, 1)`:
/// `v_a^2 = (1 - mu_Ax / sqrt(Sigma/2))^2 + mu_Ay^2 / (Sigma/2)`,
/// `sigma_a^2 = 1 / Sigma`.
pub fn corollary2_params<T: Scalar>(mu_a: &Fingerprint<T>, sigma_df_be: T) -> Result<RiceParams<T>> {
    if !(sigma_df_be > T::zero()) {
        return Err(Error::domain(format!(
            "corollary2: variance must be positive, got {sigma_df_be}"
        )));
    }
    let half = sigma_df_be / T::lit(2.0);
    let x = mu_a.value.re;
    let y = mu_a.value.im;
    let t = T::one() - x / half.sqrt();
    RiceParams::new((t * t + y * y / half).sqrt(), sigma_df_be.sqrt().recip())
}

/// `a_hat = E(a) = sigma_a sqrt(pi/2) L_{1/2}(-v_a^2 / (2 sigma_a^2))`.
pub fn corollary2_ahat<T: Scalar>(mu_a: &Fingerprint<T>, sigma_df_be: T) -> Result<T> {
    corollary2_params(mu_a, sigma_df_be)?.mean()
}

/// Rice law of `v_T = |mu_E - mu_A|` as stated for the AF case:
/// `v_v^2 = (1 - mu_Ax)^2 + mu_Ay^2`, `sigma_v = 1`.
pub fn corollary3_vt_params<T: Scalar>(mu_a: &Fingerprint<T>) -> Result<RiceParams<T>> {
    let x = T::one() - mu_a.value.re;
    let y = mu_a.value.im;
    RiceParams::new((x * x + y * y).sqrt(), T::one())
}

/// `a_hat = E(v_T) / E(sigma_T)`, `b_hat = E(delta^AF) / E(sigma_T)`.
pub fn corollary3_ab_hat<T: Scalar>(cfg: &SystemConfig<T>, mu_a: &Fingerprint<T>) -> Result<MarcumArgs<T>> {
    let e_vt = corollary3_vt_params(mu_a)?.mean()?;
    let e_sigma_t = SigmaTDensity::from_config(cfg)?.mean();
    let e_delta = Corollary1Density::from_config(cfg)?.mean();
    MarcumArgs::new(e_vt / e_sigma_t, e_delta / e_sigma_t)
}
