use rayon::prelude::*;

use crate::analysis::{corollary2_ahat, corollary3_ab_hat, pmd_approx, pmd_exact, MarcumArgs};
use crate::detector::{decide, measure_slot, threshold_for};
use crate::error::{Error, Result};
use crate::estimator::ground_truth;
use crate::harness::plan::{EveModel, ExperimentPlan};
use crate::specfn::{Probability, RandomStream};
use crate::worldmodel::{sample_eve_fingerprint, Device, Fingerprint, RelayMode, SystemConfig};

/// One operating point of the ROC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub pfa_set: Probability<f64>,
    pub pfa_emp: Probability<f64>,
    pub pd_emp: Probability<f64>,
    /// Trial average of the closed-form `Pd` at the realized quantities.
    pub pd_analytic: Probability<f64>,
    /// Offline approximation from expected Marcum arguments.
    pub pd_approx: Probability<f64>,
    pub stderr_pd: f64,
}

/// ROC at one `(gamma_AB, gamma_EB)` point of an SNR sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrCurve {
    pub gamma_ab: f64,
    pub gamma_eb: f64,
    pub points: Vec<RocPoint>,
}

const BLOCK: usize = 512;

#[derive(Debug, Clone)]
struct Tally {
    alarms: Vec<u64>,
    detections: Vec<u64>,
    pd_analytic: Vec<f64>,
}

impl Tally {
    fn new(points: usize) -> Self {
        Tally {
            alarms: vec![0; points],
            detections: vec![0; points],
            pd_analytic: vec![0.0; points],
        }
    }

    fn merge(&mut self, other: &Tally) {
        for j in 0..self.alarms.len() {
            self.alarms[j] += other.alarms[j];
            self.detections[j] += other.detections[j];
            self.pd_analytic[j] += other.pd_analytic[j];
        }
    }
}

/// Everything the trials share at one SNR point.
struct Setup<'a> {
    cfgs: Vec<SystemConfig<f64>>,
    mu_a: Fingerprint<f64>,
    fixed_eve: Option<(Device<f64>, Fingerprint<f64>)>,
    plan: &'a ExperimentPlan,
    h0: RandomStream,
    h1: RandomStream,
}

fn eve_with_fingerprint(cfg: &SystemConfig<f64>, mu_e: &Fingerprint<f64>) -> Result<Device<f64>> {
    Ok(Device {
        rp: cfg.eve.rp.with_residual(mu_e.value, &cfg.bob.rp)?,
        ..cfg.eve
    })
}

impl Setup<'_> {
    fn h0_trial(&self, i: usize, tally: &mut Tally) -> Result<()> {
        let base = &self.cfgs[0];
        let m = measure_slot(&mut self.h0.child(i as u64), base, &base.alice)?;
        for (j, cfg) in self.cfgs.iter().enumerate() {
            let delta = threshold_for(cfg, m.sigma_ba)?.value;
            tally.alarms[j] += decide(&m.estimate, &self.mu_a, delta).is_rejected() as u64;
        }
        Ok(())
    }

    fn h1_trial(&self, i: usize, tally: &mut Tally) -> Result<()> {
        let base = &self.cfgs[0];
        let mut rng = self.h1.child(i as u64);
        let (eve, mu_e) = match &self.fixed_eve {
            Some(fixed) => *fixed,
            None => {
                let mu_e = sample_eve_fingerprint::<f64>(&mut rng);
                (eve_with_fingerprint(base, &mu_e)?, mu_e)
            }
        };
        let m = measure_slot(&mut rng, base, &eve)?;
        for (j, cfg) in self.cfgs.iter().enumerate() {
            let delta = threshold_for(cfg, m.sigma_ba)?.value;
            tally.detections[j] += decide(&m.estimate, &self.mu_a, delta).is_rejected() as u64;
            let pmd = pmd_exact(&self.mu_a, &mu_e, m.estimate.variance, delta)?;
            tally.pd_analytic[j] += 1.0 - pmd.value();
        }
        Ok(())
    }

    fn block(&self, index: usize) -> Result<Tally> {
        let mut tally = Tally::new(self.cfgs.len());
        let lo = index * BLOCK;
        let hi = (lo + BLOCK).min(self.plan.trials);
        for i in lo..hi {
            self.h0_trial(i, &mut tally)?;
            self.h1_trial(i, &mut tally)?;
        }
        Ok(tally)
    }
}

/// Offline detection-probability approximation for one set-point.
fn pd_approx(cfg: &SystemConfig<f64>, mu_a: &Fingerprint<f64>) -> Result<f64> {
    let args = match cfg.relay_mode {
        RelayMode::Df => {
            let k = cfg.k as f64;
            let sigma_ba = cfg.bob.noise_var / (k * cfg.alice.power);
            let sigma_be = cfg.bob.noise_var / (k * cfg.eve.power);
            let delta = threshold_for(cfg, sigma_ba)?.value;
            let a = corollary2_ahat(mu_a, sigma_be)?;
            MarcumArgs::new(a, delta / (sigma_be / 2.0).sqrt())?
        }
        RelayMode::Af => corollary3_ab_hat(cfg, mu_a)?,
    };
    Ok(1.0 - pmd_approx(&args)?.value())
}

fn run_grid(
    plan: &ExperimentPlan,
    cfg: &SystemConfig<f64>,
    stream: &RandomStream,
    pfas: &[Probability<f64>],
) -> Result<Vec<RocPoint>> {
    if pfas.is_empty() {
        return Ok(Vec::new());
    }
    cfg.validate()?;
    let cfgs: Vec<SystemConfig<f64>> = pfas.iter().map(|&p| cfg.clone().with_pfa(p)).collect();
    for c in &cfgs {
        c.validate()?;
    }
    let mu_a = ground_truth(&stream.child(0), cfg, plan.training)?;
    let fixed_eve = match plan.eve_model {
        EveModel::FixedFingerprint(mu_e) => Some((eve_with_fingerprint(cfg, &mu_e)?, mu_e)),
        EveModel::RandomPerTrial => None,
    };
    let setup = Setup {
        cfgs,
        mu_a,
        fixed_eve,
        plan,
        h0: stream.child(1),
        h1: stream.child(2),
    };
    let blocks = plan.trials.div_ceil(BLOCK);
    let tallies: Vec<Tally> = (0..blocks)
        .into_par_iter()
        .map(|b| setup.block(b))
        .collect::<Result<_>>()?;
    let mut total = Tally::new(pfas.len());
    for t in &tallies {
        total.merge(t);
    }

    let n = plan.trials as f64;
    let prob = |x: f64| Probability::new(x.clamp(0.0, 1.0)).expect("clamped");
    setup
        .cfgs
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let pd = total.detections[j] as f64 / n;
            Ok(RocPoint {
                pfa_set: c.pfa_setpoint,
                pfa_emp: prob(total.alarms[j] as f64 / n),
                pd_emp: prob(pd),
                pd_analytic: prob(total.pd_analytic[j] / n),
                pd_approx: prob(pd_approx(c, &setup.mu_a)?),
                stderr_pd: (pd * (1.0 - pd) / n).sqrt(),
            })
        })
        .collect()
}

fn in_pool<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::Usage("workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Usage(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// One point of the base configuration's ROC. Trials are keyed by index
/// only, so this matches the corresponding entry of [`run_roc`].
pub fn run_point(plan: &ExperimentPlan, pfa: Probability<f64>) -> Result<RocPoint> {
    plan.validate()?;
    let stream = RandomStream::new(plan.seed).child(0);
    Ok(run_grid(plan, &plan.base, &stream, &[pfa])?.remove(0))
}

pub fn run_roc(plan: &ExperimentPlan) -> Result<Vec<RocPoint>> {
    run_roc_with_workers(plan, None)
}

/// `workers = None` uses rayon's global pool. Output does not depend on
/// the worker count.
pub fn run_roc_with_workers(plan: &ExperimentPlan, workers: Option<usize>) -> Result<Vec<RocPoint>> {
    plan.validate()?;
    let stream = RandomStream::new(plan.seed).child(0);
    in_pool(workers, || run_grid(plan, &plan.base, &stream, &plan.pfa_grid))?
}

/// ROC at every entry of the plan's SNR grid (the base SNR alone when the
/// plan has no grid).
pub fn run_sweep(plan: &ExperimentPlan, workers: Option<usize>) -> Result<Vec<SnrCurve>> {
    plan.validate()?;
    let root = RandomStream::new(plan.seed);
    let grid = plan
        .snr_grid
        .clone()
        .unwrap_or_else(|| vec![(plan.base.gamma_ab, plan.base.gamma_eb)]);
    in_pool(workers, || {
        grid.iter()
            .enumerate()
            .map(|(i, &(g_ab, g_eb))| {
                let cfg = plan.base.clone().at_snr(g_ab, g_eb);
                let points = run_grid(plan, &cfg, &root.child(i as u64 + 1), &plan.pfa_grid)?;
                Ok(SnrCurve {
                    gamma_ab: g_ab,
                    gamma_eb: g_eb,
                    points,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::plan::grid;
    use crate::worldmodel::CsiMode;

    fn small(trials: usize) -> ExperimentPlan {
        ExperimentPlan {
            trials,
            ..ExperimentPlan::default()
        }
    }

    #[test]
    fn df_half_pfa_is_calibrated() {
        let plan = small(100_000);
        let pt = run_point(&plan, Probability::new(0.5).unwrap()).unwrap();
        let se = (0.25 / 100_000.0_f64).sqrt();
        assert!((pt.pfa_emp.value() - 0.5).abs() < 3.0 * se, "{:?}", pt);
    }

    #[test]
    fn identical_eve_detects_at_false_alarm_rate() {
        let mut plan = small(50_000);
        plan.eve_model = EveModel::FixedFingerprint(plan.base.alice_fingerprint());
        for pt in run_roc(&plan).unwrap() {
            let p = pt.pfa_set.value();
            let se = (2.0 * p * (1.0 - p) / 50_000.0).sqrt();
            assert!(
                (pt.pd_emp.value() - pt.pfa_emp.value()).abs() < 4.0 * se.max(1e-4),
                "{pt:?}"
            );
            assert!((pt.pd_analytic.value() - p).abs() < 1e-12);
        }
    }

    #[test]
    fn single_trial_edge() {
        let plan = small(1);
        for pt in run_roc(&plan).unwrap() {
            for v in [pt.pfa_emp.value(), pt.pd_emp.value()] {
                assert!(v == 0.0 || v == 1.0);
            }
            assert_eq!(pt.stderr_pd, 0.0);
        }
    }

    #[test]
    fn points_are_order_independent() {
        let mut plan = small(2_000);
        plan.pfa_grid = grid(&[0.01, 0.1, 0.5]);
        let roc = run_roc(&plan).unwrap();
        for &idx in &[2usize, 0, 1] {
            let pt = run_point(&plan, plan.pfa_grid[idx]).unwrap();
            assert_eq!(pt, roc[idx]);
        }
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let mut plan = small(3_000);
        plan.base = plan.base.with_relay_mode(RelayMode::Af);
        let a = run_roc_with_workers(&plan, Some(1)).unwrap();
        let b = run_roc_with_workers(&plan, Some(4)).unwrap();
        assert_eq!(a, b);
        assert!(run_roc_with_workers(&plan, Some(0)).is_err());
    }

    #[test]
    fn roc_is_monotone() {
        let mut plan = small(20_000);
        plan.base = plan
            .base
            .with_relay_mode(RelayMode::Af)
            .with_csi_mode(CsiMode::Statistical);
        let roc = run_roc(&plan).unwrap();
        for w in roc.windows(2) {
            // Common random numbers across set-points make this exact.
            assert!(w[1].pd_emp.value() >= w[0].pd_emp.value());
            assert!(w[1].pfa_emp.value() >= w[0].pfa_emp.value());
        }
    }

    #[test]
    fn invalid_plan_fails_before_running() {
        let mut plan = small(10);
        plan.pfa_grid = grid(&[0.5, 0.1]);
        assert!(matches!(run_roc(&plan), Err(Error::Config(_))));
    }

    #[test]
    fn sweep_defaults_to_base_snr() {
        let plan = small(200);
        let curves = run_sweep(&plan, None).unwrap();
        assert_eq!(curves.len(), 1);
        assert_eq!(curves[0].points.len(), plan.pfa_grid.len());
    }
}
