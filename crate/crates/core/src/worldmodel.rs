//! Devices, links and experiment configuration, and the ground-truth
//! residual-channel fingerprint of a node pair.

use std::fmt;
use std::path::Path;

use num_complex::Complex;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::specfn::{sample_cgauss, ComplexSample, Probability, RandomStream};

/// Complex gains of a device's transmit and receive RF chains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReciprocityParams<T> {
    pub h_tx: ComplexSample<T>,
    pub h_rx: ComplexSample<T>,
}

impl<T: Scalar> ReciprocityParams<T> {
    pub fn new(h_tx: ComplexSample<T>, h_rx: ComplexSample<T>) -> Result<Self> {
        let rp = ReciprocityParams { h_tx, h_rx };
        rp.validate()?;
        Ok(rp)
    }

    /// Unit-magnitude chain gains with the given phases (radians).
    pub fn from_phases(tx_phase: T, rx_phase: T) -> Self {
        ReciprocityParams {
            h_tx: Complex::from_polar(T::one(), tx_phase),
            h_rx: Complex::from_polar(T::one(), rx_phase),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("h_tx", self.h_tx), ("h_rx", self.h_rx)] {
            if !g.re.is_finite() || !g.im.is_finite() {
                return Err(Error::config(format!("{name} is not finite")));
            }
            if g.norm() <= T::zero() {
                return Err(Error::config(format!("{name} must have non-zero magnitude")));
            }
        }
        Ok(())
    }

    /// Parameters that keep this receive chain but retune the transmit chain
    /// so the residual channel with `bob` equals `target`.
    pub fn with_residual(&self, target: ComplexSample<T>, bob: &ReciprocityParams<T>) -> Result<Self> {
        let rest = self.h_rx * bob.h_tx * bob.h_rx;
        ReciprocityParams::new(target / rest, self.h_rx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviceId {
    Alice,
    Bob,
    Eve,
}

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            DeviceId::Alice => "alice",
            DeviceId::Bob => "bob",
            DeviceId::Eve => "eve",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Device<T> {
    pub id: DeviceId,
    pub rp: ReciprocityParams<T>,
    /// Noise variance at this device's receiver.
    pub noise_var: T,
    /// Transmit power.
    pub power: T,
}

impl<T: Scalar> Device<T> {
    pub fn validate(&self) -> Result<()> {
        self.rp
            .validate()
            .map_err(|e| Error::config(format!("{}: {e}", self.id)))?;
        if !(self.noise_var > T::zero() && self.noise_var.is_finite()) {
            return Err(Error::config(format!("{}: noise_var must be positive", self.id)));
        }
        if !(self.power > T::zero() && self.power.is_finite()) {
            return Err(Error::config(format!("{}: power must be positive", self.id)));
        }
        Ok(())
    }
}

/// Carrier frequency (Hz) and phase (rad) offset between two oscillators.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OscillatorOffset<T> {
    pub freq_offset: T,
    pub phase_offset: T,
}

impl<T: Scalar> OscillatorOffset<T> {
    /// Offset seen in the opposite direction.
    pub fn reversed(self) -> Self {
        OscillatorOffset {
            freq_offset: -self.freq_offset,
            phase_offset: -self.phase_offset,
        }
    }

    /// `exp(j (2 pi f t + phi))`.
    pub fn rotation(self, t: T) -> ComplexSample<T> {
        let angle = T::lit(2.0) * T::PI() * self.freq_offset * t + self.phase_offset;
        Complex::from_polar(T::one(), angle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelayMode {
    Af,
    Df,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsiMode {
    /// Bob knows the realized estimate-error variance of Alice's link.
    Full,
    /// Bob knows only its distribution (the average SNR).
    Statistical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModulus {
    /// `e^{j psi}`: the round trip cancels the radio channel exactly.
    Unit,
    /// `CN(0, 1)`: the round trip leaves a `|h^c|^2` gain on the signal.
    Rayleigh,
}

/// Gain policy of an amplify-and-forward sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AfGain {
    /// Gain recomputed from the realized downlink power every slot.
    Variable,
    /// Gain computed once from the mean downlink channel power.
    Fixed,
}

/// Residual channel of a node pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fingerprint<T> {
    pub value: ComplexSample<T>,
}

impl<T: Scalar> Fingerprint<T> {
    pub fn new(value: ComplexSample<T>) -> Self {
        Fingerprint { value }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig<T> {
    pub bob: Device<T>,
    pub alice: Device<T>,
    pub eve: Device<T>,
    /// Training preamble length.
    pub k: usize,
    pub pfa_setpoint: Probability<T>,
    pub relay_mode: RelayMode,
    pub csi_mode: CsiMode,
    pub channel_modulus: ChannelModulus,
    pub af_gain: AfGain,
    /// Average SNR of the Alice-Bob link (linear).
    pub gamma_ab: T,
    /// Average SNR of the Eve-Bob link (linear).
    pub gamma_eb: T,
    /// Seconds per preamble symbol, for the oscillator phase ramp.
    pub symbol_period: T,
    /// Frequency offsets are drawn uniformly from `[-max, max]` Hz.
    pub max_freq_offset: T,
}

impl<T: Scalar> Default for SystemConfig<T> {
    fn default() -> Self {
        let device = |id, tx: f64, rx: f64| Device {
            id,
            rp: ReciprocityParams::from_phases(T::lit(tx), T::lit(rx)),
            noise_var: T::one(),
            power: T::one(),
        };
        SystemConfig {
            bob: device(DeviceId::Bob, 0.2, 0.9),
            alice: device(DeviceId::Alice, 0.3, -0.5),
            eve: device(DeviceId::Eve, 1.7, -1.1),
            k: 16,
            pfa_setpoint: Probability::new(T::lit(0.1)).expect("0.1 is a probability"),
            relay_mode: RelayMode::Df,
            csi_mode: CsiMode::Full,
            channel_modulus: ChannelModulus::Unit,
            af_gain: AfGain::Variable,
            gamma_ab: T::one(),
            gamma_eb: T::one(),
            symbol_period: T::lit(1e-6),
            max_freq_offset: T::lit(1e3),
        }
    }
}

impl<T: Scalar> SystemConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.bob.validate()?;
        self.alice.validate()?;
        self.eve.validate()?;
        if self.k < 1 {
            return Err(Error::config("k must be at least 1"));
        }
        if !self.pfa_setpoint.is_interior() {
            return Err(Error::config("pfa_setpoint must lie strictly inside (0, 1)"));
        }
        for (name, v) in [("gamma_ab", self.gamma_ab), ("gamma_eb", self.gamma_eb)] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        if !(self.symbol_period >= T::zero() && self.symbol_period.is_finite()) {
            return Err(Error::config("symbol_period must be non-negative"));
        }
        if !(self.max_freq_offset >= T::zero() && self.max_freq_offset.is_finite()) {
            return Err(Error::config("max_freq_offset must be non-negative"));
        }
        Ok(())
    }

    pub fn device(&self, id: DeviceId) -> &Device<T> {
        match id {
            DeviceId::Alice => &self.alice,
            DeviceId::Bob => &self.bob,
            DeviceId::Eve => &self.eve,
        }
    }

    /// Ground-truth fingerprint of Alice, `mu_A`.
    pub fn alice_fingerprint(&self) -> Fingerprint<T> {
        residual_fingerprint(&self.alice.rp, &self.bob.rp)
    }

    pub fn eve_fingerprint(&self) -> Fingerprint<T> {
        residual_fingerprint(&self.eve.rp, &self.bob.rp)
    }

    pub fn with_pfa(mut self, pfa: Probability<T>) -> Self {
        self.pfa_setpoint = pfa;
        self
    }

    pub fn with_relay_mode(mut self, mode: RelayMode) -> Self {
        self.relay_mode = mode;
        self
    }

    pub fn with_csi_mode(mut self, mode: CsiMode) -> Self {
        self.csi_mode = mode;
        self
    }

    /// Sets the average SNRs and scales transmit powers to match, with
    /// Bob and Alice following `gamma_ab` and Eve following `gamma_eb`.
    pub fn at_snr(mut self, gamma_ab: T, gamma_eb: T) -> Self {
        self.gamma_ab = gamma_ab;
        self.gamma_eb = gamma_eb;
        self.bob.power = gamma_ab * self.alice.noise_var;
        self.alice.power = gamma_ab * self.bob.noise_var;
        self.eve.power = gamma_eb * self.bob.noise_var;
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SystemConfigFile = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        file.into_config()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

/// `h_S^Tx h_B^Rx h_B^Tx h_S^Rx`.
pub fn residual_fingerprint<T: Scalar>(sender: &ReciprocityParams<T>, bob: &ReciprocityParams<T>) -> Fingerprint<T> {
    Fingerprint::new(sender.h_tx * bob.h_rx * bob.h_tx * sender.h_rx)
}

/// Unknown intruder fingerprint drawn from `CN(1, 1)`.
pub fn sample_eve_fingerprint<T: Scalar>(rng: &mut RandomStream) -> Fingerprint<T> {
    let value = sample_cgauss(rng, Complex::new(T::one(), T::zero()), T::one()).expect("unit variance is valid");
    Fingerprint::new(value)
}

/// Radio channel `h^c` for one slot.
pub fn sample_radio_channel<T: Scalar>(rng: &mut RandomStream, mode: ChannelModulus) -> ComplexSample<T> {
    match mode {
        ChannelModulus::Unit => {
            let psi = T::lit(2.0 * std::f64::consts::PI * rng.uniform());
            Complex::from_polar(T::one(), psi)
        }
        ChannelModulus::Rayleigh => {
            sample_cgauss(rng, Complex::new(T::zero(), T::zero()), T::one()).expect("unit variance is valid")
        }
    }
}

/// Randomized chain gains, each drawn from `CN(1, 0.1)`.
pub fn sample_reciprocity_params<T: Scalar>(rng: &mut RandomStream) -> ReciprocityParams<T> {
    let one = Complex::new(T::one(), T::zero());
    loop {
        let h_tx = sample_cgauss(rng, one, T::lit(0.1)).expect("valid variance");
        let h_rx = sample_cgauss(rng, one, T::lit(0.1)).expect("valid variance");
        if let Ok(rp) = ReciprocityParams::new(h_tx, h_rx) {
            return rp;
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct DeviceFile {
    h_tx: Option<[f64; 2]>,
    h_rx: Option<[f64; 2]>,
    noise_var: Option<f64>,
    power: Option<f64>,
}

impl DeviceFile {
    fn apply<T: Scalar>(&self, device: &mut Device<T>) {
        let c = |v: [f64; 2]| Complex::new(T::lit(v[0]), T::lit(v[1]));
        if let Some(v) = self.h_tx {
            device.rp.h_tx = c(v);
        }
        if let Some(v) = self.h_rx {
            device.rp.h_rx = c(v);
        }
        if let Some(v) = self.noise_var {
            device.noise_var = T::lit(v);
        }
        if let Some(v) = self.power {
            device.power = T::lit(v);
        }
    }
}

/// On-disk form of [`SystemConfig`]; every key is optional and falls back
/// to the default configuration.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct SystemConfigFile {
    bob: Option<DeviceFile>,
    alice: Option<DeviceFile>,
    eve: Option<DeviceFile>,
    k: Option<usize>,
    pfa_setpoint: Option<f64>,
    relay_mode: Option<RelayMode>,
    csi_mode: Option<CsiMode>,
    channel_modulus: Option<ChannelModulus>,
    af_gain: Option<AfGain>,
    gamma_ab: Option<f64>,
    gamma_eb: Option<f64>,
    symbol_period: Option<f64>,
    max_freq_offset: Option<f64>,
}

impl SystemConfigFile {
    pub(crate) fn into_config<T: Scalar>(self) -> Result<SystemConfig<T>> {
        let mut cfg = SystemConfig::<T>::default();
        if let Some(d) = &self.bob {
            d.apply(&mut cfg.bob);
        }
        if let Some(d) = &self.alice {
            d.apply(&mut cfg.alice);
        }
        if let Some(d) = &self.eve {
            d.apply(&mut cfg.eve);
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(p) = self.pfa_setpoint {
            cfg.pfa_setpoint = Probability::new(T::lit(p))
                .map_err(|_| Error::config(format!("pfa_setpoint {p} is not a probability")))?;
        }
        if let Some(m) = self.relay_mode {
            cfg.relay_mode = m;
        }
        if let Some(m) = self.csi_mode {
            cfg.csi_mode = m;
        }
        if let Some(m) = self.channel_modulus {
            cfg.channel_modulus = m;
        }
        if let Some(m) = self.af_gain {
            cfg.af_gain = m;
        }
        if let Some(v) = self.gamma_ab {
            cfg.gamma_ab = T::lit(v);
        }
        if let Some(v) = self.gamma_eb {
            cfg.gamma_eb = T::lit(v);
        }
        if let Some(v) = self.symbol_period {
            cfg.symbol_period = T::lit(v);
        }
        if let Some(v) = self.max_freq_offset {
            cfg.max_freq_offset = T::lit(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
