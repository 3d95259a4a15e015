//! Independent reference computations used to cross-check the library:
//! direct Bessel power series, adaptive Gauss-Kronrod quadrature and the
//! Kolmogorov-Smirnov test.
//!
//! Nothing in the implementation paths calls into this module; it backs the
//! test suites and the `selftest` / `validate` CLI commands.

/// Sum of `(x/2)^{2k + nu} / (k! (k + nu)!)`, terms built in log space and
/// accumulated smallest-first.
fn bessel_series(nu: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0 { 1.0 } else { 0.0 };
    }
    let ln_half = (x.abs() / 2.0).ln();
    let mut terms = Vec::new();
    let mut ln_fact_k = 0.0_f64;
    let mut ln_fact_k_nu: f64 = (1..=nu).map(|j| (j as f64).ln()).sum();
    let mut largest = 0.0_f64;
    let mut k = 0u32;
    loop {
        let ln_term = (2 * k + nu) as f64 * ln_half - ln_fact_k - ln_fact_k_nu;
        let term = ln_term.exp();
        terms.push(term);
        largest = largest.max(term);
        if k > 2 && term < largest * 1e-18 {
            break;
        }
        k += 1;
        ln_fact_k += (k as f64).ln();
        ln_fact_k_nu += ((k + nu) as f64).ln();
    }
    let sum: f64 = terms.iter().rev().sum();
    if nu % 2 == 1 && x < 0.0 {
        -sum
    } else {
        sum
    }
}

pub fn bessel_i0_series(x: f64) -> f64 {
    bessel_series(0, x)
}

pub fn bessel_i1_series(x: f64) -> f64 {
    bessel_series(1, x)
}

const GK15_XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK15_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * GK15_WGK[7];
    let mut gauss = fc * GK15_WG[3];
    for j in 0..7 {
        let dx = half * GK15_XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += GK15_WGK[j] * pair;
        if j % 2 == 1 {
            gauss += GK15_WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature on a finite interval to the
/// given absolute tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut stack = vec![(a, b, abs_tol)];
    let mut total = 0.0;
    while let Some((lo, hi, tol)) = stack.pop() {
        let (value, err) = gk15(&f, lo, hi);
        if err <= tol.max(1e-15 * value.abs()) || (hi - lo).abs() < 1e-12 {
            total += value;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, tol / 2.0));
            stack.push((mid, hi, tol / 2.0));
        }
    }
    total
}

/// Integrates a density-like integrand over `[lo, inf)`, truncating where
/// the integrand has fallen below 1e-16 past its peak. `scale` is a rough
/// width used to step towards the tail.
pub fn integrate_to_tail<F: Fn(f64) -> f64>(f: F, lo: f64, scale: f64, abs_tol: f64) -> f64 {
    let step = scale.max(1e-12);
    let mut hi = lo + step;
    let mut peak = f(lo).abs();
    loop {
        let v = f(hi).abs();
        if v > peak {
            peak = v;
        } else if v < 1e-16 && v < peak {
            break;
        }
        hi += step;
    }
    // Split so every panel sees a smooth piece of the bump.
    let pieces = 16;
    let w = (hi - lo) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let a = lo + w * i as f64;
            integrate(&f, a, a + w, abs_tol / pieces as f64)
        })
        .sum()
}

/// `Q1(a, b)` by adaptive quadrature of
/// `int_b^inf x exp(-(x^2 + a^2) / 2) I0(a x) dx`, with `I0` from the
/// power series (log form, so large `a x` does not overflow the product).
pub fn marcum_q1_quadrature(a: f64, b: f64) -> f64 {
    let integrand = |x: f64| {
        if x <= 0.0 {
            return 0.0;
        }
        // ln(I0(z) e^{-z}), so the exponent below is -(x - a)^2 / 2 without
        // cancelling two large terms.
        let z = a * x;
        let ln_i0e = if z < 600.0 {
            bessel_i0_series(z).ln() - z
        } else {
            // Series terms overflow beyond here. Four terms of the Hankel
            // expansion leave a relative error below 1e-12 for z >= 600.
            let inv = 1.0 / z;
            -0.5 * (2.0 * std::f64::consts::PI * z).ln()
                + (1.0 + inv / 8.0 + 9.0 * inv * inv / 128.0 + 225.0 * inv.powi(3) / 3072.0).ln()
        };
        let d = x - a;
        x * (-(d * d) / 2.0 + ln_i0e).exp()
    };
    let hi = a.max(b) + 40.0;
    let lo = b.max(a - 40.0);
    if lo >= hi {
        return 0.0;
    }
    let pieces = ((hi - lo) / 2.0).ceil().max(1.0) as usize;
    let w = (hi - lo) / pieces as f64;
    let tail: f64 = (0..pieces)
        .map(|i| {
            let s = lo + w * i as f64;
            integrate(integrand, s, s + w, 1e-14)
        })
        .sum();
    tail
}

/// One-sample Kolmogorov-Smirnov test. Returns `(D, p_value)` using the
/// asymptotic Kolmogorov distribution with Stephens' small-sample
/// correction.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> (f64, f64) {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let c = cdf(x);
        let upper = (i + 1) as f64 / n - c;
        let lower = c - i as f64 / n;
        d = d.max(upper).max(lower);
    }
    let root = n.sqrt();
    let lambda = (root + 0.12 + 0.11 / root) * d;
    (d, kolmogorov_survival(lambda))
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// CDF of `Rayleigh(rho)`.
pub fn rayleigh_cdf(x: f64, rho: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        1.0 - (-(x * x) / (2.0 * rho * rho)).exp()
    }
}
