//! One ping-pong iteration: Bob's ping, reception at the sender, the AF or
//! DF pong, and reception of the K pong symbols back at Bob.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::specfn::{sample_cgauss, ComplexSample, RandomStream};
use crate::worldmodel::{sample_radio_channel, AfGain, Device, DeviceId, OscillatorOffset, RelayMode, SystemConfig};

/// Bob's training preamble: `K` unit-modulus symbols sent at power `P_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct Preamble<T> {
    symbols: Vec<ComplexSample<T>>,
    power: T,
}

impl<T: Scalar> Preamble<T> {
    pub fn new(symbols: Vec<ComplexSample<T>>, power: T) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::domain("preamble needs at least one symbol"));
        }
        let tol = T::lit(1e3) * T::epsilon();
        if symbols.iter().any(|s| (s.norm() - T::one()).abs() > tol) {
            return Err(Error::domain("preamble symbols must have unit modulus"));
        }
        if !(power > T::zero() && power.is_finite()) {
            return Err(Error::domain("preamble power must be positive"));
        }
        Ok(Preamble { symbols, power })
    }

    /// Constant-envelope chirp `exp(j pi n^2 / K)`.
    pub fn chirp(k: usize, power: T) -> Result<Self> {
        let kf = T::from_usize(k.max(1)).unwrap();
        let symbols = (0..k)
            .map(|n| {
                let nf = T::from_usize(n).unwrap();
                Complex::from_polar(T::one(), T::PI() * nf * nf / kf)
            })
            .collect();
        Preamble::new(symbols, power)
    }

    pub fn symbols(&self) -> &[ComplexSample<T>] {
        &self.symbols
    }

    pub fn power(&self) -> T {
        self.power
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Channel state of one Bob-sender slot.
///
/// `directional_fwd` is `h_BS = h_B^Tx h^c h_S^Rx e^{j phi}` and
/// `directional_rev` is `h_SB = h_S^Tx (h^c)^* h_B^Rx e^{-j phi}`, both at
/// the first symbol; the per-symbol frequency ramp is applied by
/// [`LinkRealization::forward_at`] and [`LinkRealization::reverse_at`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRealization<T> {
    pub sender: DeviceId,
    pub radio: ComplexSample<T>,
    pub offsets: OscillatorOffset<T>,
    pub directional_fwd: ComplexSample<T>,
    pub directional_rev: ComplexSample<T>,
    pub symbol_period: T,
}

impl<T: Scalar> LinkRealization<T> {
    pub fn new(
        cfg: &SystemConfig<T>,
        sender: &Device<T>,
        radio: ComplexSample<T>,
        offsets: OscillatorOffset<T>,
    ) -> Self {
        let bob = &cfg.bob.rp;
        let s = &sender.rp;
        let fwd = bob.h_tx * radio * s.h_rx * offsets.rotation(T::zero());
        let rev = s.h_tx * radio.conj() * bob.h_rx * offsets.reversed().rotation(T::zero());
        LinkRealization {
            sender: sender.id,
            radio,
            offsets,
            directional_fwd: fwd,
            directional_rev: rev,
            symbol_period: cfg.symbol_period,
        }
    }

    /// Fresh radio channel, phase offset and frequency offset.
    pub fn sample(rng: &mut RandomStream, cfg: &SystemConfig<T>, sender: &Device<T>) -> Self {
        let radio = sample_radio_channel(rng, cfg.channel_modulus);
        let phase = T::lit(2.0 * std::f64::consts::PI * rng.uniform());
        let freq = cfg.max_freq_offset * T::lit(2.0 * rng.uniform() - 1.0);
        let offsets = OscillatorOffset {
            freq_offset: freq,
            phase_offset: phase,
        };
        LinkRealization::new(cfg, sender, radio, offsets)
    }

    fn ramp(&self, n: usize, sign: T) -> ComplexSample<T> {
        let t = self.symbol_period * T::from_usize(n).unwrap();
        let angle = sign * T::lit(2.0) * T::PI() * self.offsets.freq_offset * t;
        Complex::from_polar(T::one(), angle)
    }

    pub fn forward_at(&self, n: usize) -> ComplexSample<T> {
        self.directional_fwd * self.ramp(n, T::one())
    }

    pub fn reverse_at(&self, n: usize) -> ComplexSample<T> {
        self.directional_rev * self.ramp(n, -T::one())
    }
}

/// What Bob holds after the pong: the received block, the effective
/// training vector it is regressed on, and the noise bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct PongObservation<T> {
    pub z: Vec<ComplexSample<T>>,
    pub effective_training: Vec<ComplexSample<T>>,
    /// Sender gain `beta_SB`; 1 for DF.
    pub beta: T,
    /// Per-symbol variance of the net noise at Bob.
    pub net_noise_var: T,
    pub relay_mode: RelayMode,
    /// Bob's ping power `P_B`.
    pub ping_power: T,
    /// Sender transmit power `P_S`.
    pub sender_power: T,
}

impl<T: Scalar> PongObservation<T> {
    pub fn k(&self) -> usize {
        self.z.len()
    }
}

/// AF gain meeting the sender's power budget:
/// `sqrt(P_S / (P_B |h_BS|^2 + sigma_S^2))`.
pub fn compute_beta<T: Scalar>(p_s: T, p_b: T, h_bs_sq: T, sigma_s_sq: T) -> Result<T> {
    if !(p_s > T::zero()) || !(p_b > T::zero()) || h_bs_sq < T::zero() || sigma_s_sq < T::zero() {
        return Err(Error::domain("compute_beta: invalid powers or gains"));
    }
    let denom = p_b * h_bs_sq + sigma_s_sq;
    if !(denom > T::zero()) {
        return Err(Error::domain("compute_beta: received power is zero"));
    }
    Ok((p_s / denom).sqrt())
}

/// Signal at the sender: `y_S = sqrt(P_B) h_BS x_B + n_S`.
pub fn ping<T: Scalar>(
    rng: &mut RandomStream,
    sender: &Device<T>,
    link: &LinkRealization<T>,
    preamble: &Preamble<T>,
) -> Vec<ComplexSample<T>> {
    let amp = preamble.power().sqrt();
    preamble
        .symbols()
        .iter()
        .enumerate()
        .map(|(n, &x)| {
            let clean = link.forward_at(n) * x * amp;
            sample_cgauss(rng, clean, sender.noise_var).expect("validated noise variance")
        })
        .collect()
}

fn af_beta<T: Scalar>(cfg: &SystemConfig<T>, sender: &Device<T>, link: &LinkRealization<T>) -> T {
    let h_bs_sq = match cfg.af_gain {
        AfGain::Variable => link.directional_fwd.norm_sqr(),
        // Both channel models have E|h^c|^2 = 1.
        AfGain::Fixed => (cfg.bob.rp.h_tx * sender.rp.h_rx).norm_sqr(),
    };
    compute_beta(sender.power, cfg.bob.power, h_bs_sq, sender.noise_var).expect("validated config")
}

/// Amplify-and-forward pong: `z = beta h_SB y_S + n_B`.
pub fn pong_af<T: Scalar>(
    rng: &mut RandomStream,
    cfg: &SystemConfig<T>,
    sender: &Device<T>,
    link: &LinkRealization<T>,
    preamble: &Preamble<T>,
    y_s: &[ComplexSample<T>],
) -> PongObservation<T> {
    let beta = af_beta(cfg, sender, link);
    let z = y_s
        .iter()
        .enumerate()
        .map(|(n, &y)| {
            let relayed = link.reverse_at(n) * y * beta;
            sample_cgauss(rng, relayed, cfg.bob.noise_var).expect("validated noise variance")
        })
        .collect();
    let scale = preamble.power().sqrt() * beta;
    let effective_training = preamble.symbols().iter().map(|&x| x * scale).collect();
    let net_noise_var = beta * beta * link.directional_rev.norm_sqr() * sender.noise_var + cfg.bob.noise_var;
    PongObservation {
        z,
        effective_training,
        beta,
        net_noise_var,
        relay_mode: RelayMode::Af,
        ping_power: preamble.power(),
        sender_power: sender.power,
    }
}

/// Decode-and-forward pong: the sender re-synthesizes `x_B` premultiplied
/// by the (perfectly known) downlink channel, so
/// `z = sqrt(P_S) h_SB h_BS x_B + n_B`.
pub fn pong_df<T: Scalar>(
    rng: &mut RandomStream,
    cfg: &SystemConfig<T>,
    sender: &Device<T>,
    link: &LinkRealization<T>,
    preamble: &Preamble<T>,
) -> PongObservation<T> {
    let amp = sender.power.sqrt();
    let z = preamble
        .symbols()
        .iter()
        .enumerate()
        .map(|(n, &x)| {
            let clean = link.reverse_at(n) * link.forward_at(n) * x * amp;
            sample_cgauss(rng, clean, cfg.bob.noise_var).expect("validated noise variance")
        })
        .collect();
    let effective_training = preamble.symbols().iter().map(|&x| x * amp).collect();
    PongObservation {
        z,
        effective_training,
        beta: T::one(),
        net_noise_var: cfg.bob.noise_var,
        relay_mode: RelayMode::Df,
        ping_power: preamble.power(),
        sender_power: sender.power,
    }
}

/// One full ping-pong iteration with `sender` over a freshly drawn link.
pub fn round_trip<T: Scalar>(rng: &mut RandomStream, cfg: &SystemConfig<T>, sender: &Device<T>) -> PongObservation<T> {
    round_trip_with_link(rng, cfg, sender).1
}

/// As [`round_trip`], also returning the link the iteration ran over.
pub fn round_trip_with_link<T: Scalar>(
    rng: &mut RandomStream,
    cfg: &SystemConfig<T>,
    sender: &Device<T>,
) -> (LinkRealization<T>, PongObservation<T>) {
    let preamble = Preamble::chirp(cfg.k, cfg.bob.power).expect("validated config");
    let link = LinkRealization::sample(rng, cfg, sender);
    let obs = match cfg.relay_mode {
        RelayMode::Af => {
            let y_s = ping(rng, sender, &link, &preamble);
            pong_af(rng, cfg, sender, &link, &preamble, &y_s)
        }
        RelayMode::Df => pong_df(rng, cfg, sender, &link, &preamble),
    };
    (link, obs)
}

/// LS error variance a round trip with `sender` over `link` would have,
/// without running it: `sigma_{B|S}^2 / (K P_B beta^2)` or `sigma_B^2 / (K P_S)`.
pub fn link_variance<T: Scalar>(cfg: &SystemConfig<T>, sender: &Device<T>, link: &LinkRealization<T>) -> T {
    let k = T::from_usize(cfg.k).unwrap();
    match cfg.relay_mode {
        RelayMode::Af => {
            let beta = af_beta(cfg, sender, link);
            let net = beta * beta * link.directional_rev.norm_sqr() * sender.noise_var + cfg.bob.noise_var;
            net / (k * cfg.bob.power * beta * beta)
        }
        RelayMode::Df => cfg.bob.noise_var / (k * sender.power),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worldmodel::{residual_fingerprint, ChannelModulus, ReciprocityParams};

    fn noiseless() -> SystemConfig<f64> {
        let mut cfg = SystemConfig::<f64>::default();
        for d in [&mut cfg.bob, &mut cfg.alice, &mut cfg.eve] {
            d.noise_var = 0.0;
        }
        cfg
    }

    #[test]
    fn beta_examples() {
        assert_eq!(compute_beta(1.0, 1.0, 1.0, 0.0).unwrap(), 1.0);
        assert_eq!(compute_beta(4.0, 1.0, 0.0, 1.0).unwrap(), 2.0);
        assert!(compute_beta(1.0, 1.0, 0.0, 0.0).is_err());
        assert!(compute_beta(-1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn preamble_validation() {
        assert!(Preamble::<f64>::chirp(0, 1.0).is_err());
        assert!(Preamble::<f64>::chirp(4, 0.0).is_err());
        assert!(Preamble::new(vec![Complex::new(2.0, 0.0)], 1.0).is_err());
        let p = Preamble::<f64>::chirp(16, 1.0).unwrap();
        assert_eq!(p.len(), 16);
    }

    #[test]
    fn noiseless_ping_scales_preamble() {
        let mut cfg = noiseless();
        cfg.bob.power = 4.0;
        let alice = cfg.alice;
        let unit = ReciprocityParams::new(Complex::new(1.0, 0.0), Complex::new(1.0, 0.0)).unwrap();
        cfg.bob.rp = unit;
        let mut sender = alice;
        sender.rp = unit;
        let link = LinkRealization::new(&cfg, &sender, Complex::new(1.0, 0.0), OscillatorOffset::default());
        let pre = Preamble::chirp(8, cfg.bob.power).unwrap();
        let y = ping(&mut RandomStream::new(1), &sender, &link, &pre);
        for (yi, xi) in y.iter().zip(pre.symbols()) {
            assert!((yi - xi * 2.0).norm() < 1e-15);
        }
    }

    #[test]
    fn noise_only_ping_variance() {
        let mut cfg = SystemConfig::<f64>::default();
        cfg.alice.noise_var = 0.6;
        let sender = cfg.alice;
        let link = LinkRealization::new(&cfg, &sender, Complex::new(0.0, 0.0), OscillatorOffset::default());
        let pre = Preamble::chirp(100, 1.0).unwrap();
        let mut rng = RandomStream::new(17);
        let mut samples = Vec::new();
        for _ in 0..1000 {
            samples.extend(ping(&mut rng, &sender, &link, &pre));
        }
        let n = samples.len() as f64;
        let var = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / n;
        // |n_S|^2 ~ Exp(0.6), standard error 0.6 / sqrt(n).
        assert!((var - 0.6).abs() < 4.0 * 0.6 / n.sqrt());
    }

    #[test]
    fn noiseless_af_recovers_fingerprint() {
        let cfg = noiseless();
        let sender = cfg.alice;
        let mut rng = RandomStream::new(2);
        let link = LinkRealization::sample(&mut rng, &cfg, &sender);
        let pre = Preamble::chirp(cfg.k, cfg.bob.power).unwrap();
        let y = ping(&mut rng, &sender, &link, &pre);
        let obs = pong_af(&mut rng, &cfg, &sender, &link, &pre, &y);
        let h = residual_fingerprint(&sender.rp, &cfg.bob.rp).value;
        for (z, xt) in obs.z.iter().zip(&obs.effective_training) {
            assert!((z / xt - h).norm() < 1e-12);
        }
    }

    #[test]
    fn noiseless_df_recovers_fingerprint() {
        let cfg = noiseless();
        let sender = cfg.eve;
        let mut rng = RandomStream::new(3);
        let link = LinkRealization::sample(&mut rng, &cfg, &sender);
        let pre = Preamble::chirp(cfg.k, cfg.bob.power).unwrap();
        let obs = pong_df(&mut rng, &cfg, &sender, &link, &pre);
        let h = residual_fingerprint(&sender.rp, &cfg.bob.rp).value;
        for (z, xt) in obs.z.iter().zip(&obs.effective_training) {
            assert!((z / xt - h).norm() < 1e-12);
        }
        assert_eq!(obs.net_noise_var, 0.0);
    }

    #[test]
    fn offsets_and_channel_phase_cancel() {
        let cfg = noiseless();
        let sender = cfg.alice;
        let pre = Preamble::chirp(cfg.k, cfg.bob.power).unwrap();
        let run = |radio: Complex<f64>, off: OscillatorOffset<f64>, mode| {
            let link = LinkRealization::new(&cfg, &sender, radio, off);
            let mut rng = RandomStream::new(0);
            match mode {
                RelayMode::Af => {
                    let y = ping(&mut rng, &sender, &link, &pre);
                    pong_af(&mut rng, &cfg, &sender, &link, &pre, &y).z
                }
                RelayMode::Df => pong_df(&mut rng, &cfg, &sender, &link, &pre).z,
            }
        };
        for mode in [RelayMode::Af, RelayMode::Df] {
            let base = run(Complex::new(1.0, 0.0), OscillatorOffset::default(), mode);
            let shifted = run(
                Complex::from_polar(1.0, 2.2),
                OscillatorOffset {
                    freq_offset: 950.0,
                    phase_offset: -0.8,
                },
                mode,
            );
            let dev = base
                .iter()
                .zip(&shifted)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(dev < 1e-12, "{mode:?}: deviation {dev}");
        }
    }

    #[test]
    fn vector_form_matches_per_symbol_model() {
        let cfg = noiseless();
        let sender = cfg.alice;
        let mut rng = RandomStream::new(9);
        let obs = round_trip(&mut rng, &cfg.clone().with_relay_mode(RelayMode::Af), &sender);
        let h = cfg.alice_fingerprint().value;
        let pre = Preamble::chirp(cfg.k, cfg.bob.power).unwrap();
        let scale = cfg.bob.power.sqrt() * obs.beta;
        for (z, x) in obs.z.iter().zip(pre.symbols()) {
            assert!((z - x * h * scale).norm() < 1e-12);
        }
    }

    #[test]
    fn af_relay_meets_power_budget() {
        let mut cfg = SystemConfig::<f64> {
            channel_modulus: ChannelModulus::Rayleigh,
            ..Default::default()
        };
        cfg.alice.power = 2.5;
        let sender = cfg.alice;
        let pre = Preamble::chirp(1, cfg.bob.power).unwrap();
        let mut rng = RandomStream::new(13);
        let n = 100_000;
        let mut acc = Vec::with_capacity(n);
        for _ in 0..n {
            let link = LinkRealization::sample(&mut rng, &cfg, &sender);
            let y = ping(&mut rng, &sender, &link, &pre);
            let beta = af_beta(&cfg, &sender, &link);
            acc.push((y[0] * beta).norm_sqr());
        }
        let mean = acc.iter().sum::<f64>() / n as f64;
        let sd = (acc.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((mean - 2.5).abs() < 4.0 * sd / (n as f64).sqrt(), "relay power {mean}");
    }

    #[test]
    fn af_net_noise_variance() {
        let cfg = SystemConfig::<f64>::default();
        let sender = cfg.alice;
        let pre = Preamble::chirp(cfg.k, cfg.bob.power).unwrap();
        let link = LinkRealization::new(
            &cfg,
            &sender,
            Complex::from_polar(1.0, 0.4),
            OscillatorOffset::default(),
        );
        let mut rng = RandomStream::new(31);
        let h = cfg.alice_fingerprint().value;
        let mut resid = Vec::new();
        let mut predicted = 0.0;
        for _ in 0..100_000 / cfg.k {
            let y = ping(&mut rng, &sender, &link, &pre);
            let obs = pong_af(&mut rng, &cfg, &sender, &link, &pre, &y);
            predicted = obs.net_noise_var;
            for (z, xt) in obs.z.iter().zip(&obs.effective_training) {
                resid.push((z - xt * h).norm_sqr());
            }
        }
        let n = resid.len() as f64;
        let var = resid.iter().sum::<f64>() / n;
        assert!(
            (var - predicted).abs() < 4.0 * predicted / n.sqrt(),
            "{var} vs {predicted}"
        );
    }

    #[test]
    fn df_noise_variance() {
        let mut cfg = SystemConfig::<f64>::default();
        cfg.bob.noise_var = 0.3;
        let sender = cfg.alice;
        let h = cfg.alice_fingerprint().value;
        let mut rng = RandomStream::new(41);
        let mut resid = Vec::new();
        for _ in 0..100_000 / cfg.k {
            let obs = round_trip(&mut rng, &cfg, &sender);
            for (z, xt) in obs.z.iter().zip(&obs.effective_training) {
                resid.push((z - xt * h).norm_sqr());
            }
        }
        let n = resid.len() as f64;
        let var = resid.iter().sum::<f64>() / n;
        assert!((var - 0.3).abs() < 4.0 * 0.3 / n.sqrt());
    }

    #[test]
    fn round_trip_determinism_and_fingerprint_stability() {
        let cfg = noiseless().with_relay_mode(RelayMode::Af);
        let sender = cfg.alice;
        let a = round_trip(&mut RandomStream::new(5), &cfg, &sender);
        let b = round_trip(&mut RandomStream::new(5), &cfg, &sender);
        assert_eq!(a, b);
        let c = round_trip(&mut RandomStream::new(6), &cfg, &sender);
        let link_a = LinkRealization::sample(&mut RandomStream::new(5), &cfg, &sender);
        let link_c = LinkRealization::sample(&mut RandomStream::new(6), &cfg, &sender);
        assert_ne!(link_a.radio, link_c.radio);
        let h = cfg.alice_fingerprint().value;
        for obs in [&a, &c] {
            assert!((obs.z[0] / obs.effective_training[0] - h).norm() < 1e-12);
        }
    }

    #[test]
    fn round_trip_dispatches_on_mode() {
        let cfg = SystemConfig::<f64>::default();
        let mut rng = RandomStream::new(1);
        assert_eq!(round_trip(&mut rng, &cfg, &cfg.alice).relay_mode, RelayMode::Df);
        let af = cfg.clone().with_relay_mode(RelayMode::Af);
        assert_eq!(round_trip(&mut rng, &af, &af.alice).relay_mode, RelayMode::Af);
    }

    #[test]
    fn link_variance_matches_observation() {
        for mode in [RelayMode::Af, RelayMode::Df] {
            let mut cfg = SystemConfig::<f64>::default().with_relay_mode(mode);
            cfg.channel_modulus = ChannelModulus::Rayleigh;
            for seed in 0..20 {
                let (link, obs) = round_trip_with_link(&mut RandomStream::new(seed), &cfg, &cfg.alice);
                let energy: f64 = obs.effective_training.iter().map(|x| x.norm_sqr()).sum();
                let v = link_variance(&cfg, &cfg.alice, &link);
                assert!((v - obs.net_noise_var / energy).abs() < 1e-12 * v);
            }
        }
    }
}
