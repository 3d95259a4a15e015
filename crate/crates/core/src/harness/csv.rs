use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::run::RocPoint;
use crate::pingpong::PongObservation;

pub const ROC_HEADER: &str = "pfa_set,pfa_emp,pd_emp,pd_analytic,pd_approx,stderr_pd";
pub const OBSERVATION_HEADER: &str = "trial,symbol_index,z_re,z_im,xt_re,xt_im";

/// Plain decimal with `digits` significant digits.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding may carry into a new leading digit (9.99.. -> 10.0..); redo
    // with one decimal fewer so the digit count holds.
    let leading = s.trim_start_matches('-').split('.').next().unwrap_or("");
    if decimals > 0 && leading.trim_start_matches('0').len() as i64 > (magnitude + 1).max(0) {
        return format!("{x:.prec$}", prec = decimals - 1);
    }
    s
}

pub fn roc_to_csv(points: &[RocPoint]) -> String {
    let mut out = String::with_capacity(64 * (points.len() + 1));
    out.push_str(ROC_HEADER);
    out.push('\n');
    for p in points {
        let cols = [
            p.pfa_set.value(),
            p.pfa_emp.value(),
            p.pd_emp.value(),
            p.pd_analytic.value(),
            p.pd_approx.value(),
            p.stderr_pd,
        ];
        let row: Vec<String> = cols.iter().map(|&v| format_significant(v, 10)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn emit_csv(points: &[RocPoint], path: &Path) -> Result<()> {
    std::fs::write(path, roc_to_csv(points)).map_err(|e| Error::io(path, e))
}

/// Parses a file written by [`emit_csv`] into rows of six values.
pub fn parse_roc_csv(text: &str) -> Result<Vec<[f64; 6]>> {
    let mut lines = text.lines();
    if lines.next() != Some(ROC_HEADER) {
        return Err(Error::config("missing or unexpected ROC header"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let vals: Vec<f64> = line
                .split(',')
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::config(format!("row {}: {e}", i + 1)))?;
            vals.try_into()
                .map_err(|_| Error::config(format!("row {}: expected 6 columns", i + 1)))
        })
        .collect()
}

/// Debug dump of raw observations, one row per symbol.
pub fn emit_observations_csv(observations: &[PongObservation<f64>], path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(OBSERVATION_HEADER);
    out.push('\n');
    for (trial, obs) in observations.iter().enumerate() {
        for (n, (z, x)) in obs.z.iter().zip(&obs.effective_training).enumerate() {
            let f = |v: f64| format_significant(v, 10);
            let _ = writeln!(out, "{trial},{n},{},{},{},{}", f(z.re), f(z.im), f(x.re), f(x.im));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
