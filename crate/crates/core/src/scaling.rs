//! Order fits of `gamma` over an hbar-ladder.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};
use crate::stats::linear_fit;
use crate::trace::GammaSample;

/// Geometric ladder `hbar_max * ratio^i`, `i = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub hbar_max: f64,
    pub ratio: f64,
    pub count: usize,
}

impl Default for Ladder {
    fn default() -> Self {
        Self { hbar_max: 0.1, ratio: 0.75, count: 10 }
    }
}

impl Ladder {
    pub fn new(hbar_max: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(hbar_max > 0.0) || !(ratio > 0.0 && ratio < 1.0) || count == 0 {
            return Err(ProbeError::Config(format!("invalid ladder {hbar_max},{ratio},{count}")));
        }
        Ok(Self { hbar_max, ratio, count })
    }

    pub fn hbars(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.hbar_max * self.ratio.powi(i as i32)).collect()
    }

    pub fn hbar_min(&self) -> f64 {
        self.hbar_max * self.ratio.powi(self.count as i32 - 1)
    }

    fn describe(samples: &[GammaSample]) -> Self {
        let mut h: Vec<f64> = samples.iter().map(|s| s.hbar).collect();
        h.sort_by(|a, b| b.total_cmp(a));
        let count = h.len();
        let ratio = if count > 1 { (h[count - 1] / h[0]).powf(1.0 / (count - 1) as f64) } else { 1.0 };
        Self { hbar_max: h[0], ratio, count }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub energy: f64,
    pub alpha: f64,
    /// 1 when the `log(1/hbar)` model was selected.
    pub log_flag: u8,
    pub coefficient: Complex64,
    /// RMS residual of the selected model in log space.
    pub residual: f64,
    pub ambiguous: bool,
    pub alpha_power: f64,
    pub residual_power: f64,
    pub alpha_log: f64,
    pub residual_log: f64,
    /// Standard error of the selected exponent.
    pub alpha_std_error: f64,
    pub ladder: Ladder,
}

fn sorted_by_hbar(samples: &[GammaSample]) -> Vec<GammaSample> {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| b.hbar.total_cmp(&a.hbar));
    s
}

fn oscillatory(s: &[GammaSample]) -> bool {
    let reference = s.last().unwrap().value;
    let proj: Vec<f64> = s.iter().map(|g| (g.value * reference.conj()).re).collect();
    let sign_changes = proj.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();
    let mags: Vec<f64> = s.iter().map(|g| g.value.norm()).collect();
    let up = mags.windows(2).any(|w| w[1] > w[0]);
    let down = mags.windows(2).any(|w| w[1] < w[0]);
    sign_changes > 0 && up && down
}

/// Least squares of `log|gamma|` against `alpha log hbar + c` and
/// `alpha log hbar + log log(1/hbar) + c`; the log model wins only when its
/// residual is more than 10% smaller.
pub fn fit_order(samples: &[GammaSample]) -> Result<OrderFit> {
    if samples.len() < 6 {
        return Err(ProbeError::TooFewSamples { need: 6, got: samples.len() });
    }
    let energy = samples[0].energy;
    if samples.iter().any(|s| s.energy != energy) {
        return Err(ProbeError::MixedEnergies);
    }
    let s = sorted_by_hbar(samples);
    if let Some(bad) = s.iter().find(|g| !(g.value.norm() > 10.0 * g.err_bound)) {
        return Err(ProbeError::BelowErrorBound { hbar: bad.hbar });
    }
    if oscillatory(&s) {
        return Err(ProbeError::Oscillatory { energy });
    }
    let power: Vec<(f64, f64)> = s.iter().map(|g| (g.hbar.ln(), g.value.norm().ln())).collect();
    let logm: Vec<(f64, f64)> =
        s.iter().map(|g| (g.hbar.ln(), g.value.norm().ln() - (1.0 / g.hbar).ln().ln())).collect();
    let (a0, c0, r0) = linear_fit(&power);
    let (a1, c1, r1) = linear_fit(&logm);
    let log_flag = u8::from(r1 < 0.9 * r0);
    let ambiguous = (r0 - r1).abs() <= 0.1 * r0.max(r1);
    let (alpha, c, residual, pts) = if log_flag == 1 { (a1, c1, r1, &logm) } else { (a0, c0, r0, &power) };
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let alpha_std_error = residual * (n / (n - 2.0)).sqrt() / sxx.sqrt();
    let last = s.last().unwrap().value;
    let coefficient = Complex64::from_polar(c.exp(), last.arg());
    Ok(OrderFit {
        energy,
        alpha,
        log_flag,
        coefficient,
        residual,
        ambiguous,
        alpha_power: a0,
        residual_power: r0,
        alpha_log: a1,
        residual_log: r1,
        alpha_std_error,
        ladder: Ladder::describe(samples),
    })
}

/// Coefficient read off the smallest-hbar sample under a fixed model:
/// `gamma / (hbar^alpha log(1/hbar)^m)`.
pub fn coefficient_at_smallest(samples: &[GammaSample], alpha: f64, log_flag: u8) -> Option<Complex64> {
    let g = samples.iter().min_by(|a, b| a.hbar.total_cmp(&b.hbar))?;
    let mut d = g.hbar.powf(alpha);
    if log_flag == 1 {
        d *= (1.0 / g.hbar).ln();
    }
    Some(g.value / d)
}

/// Linear fit of `Re gamma` against `log(1/hbar)` at fixed `alpha = 0`:
/// returns `(slope, intercept, rms relative residual)`. Used to exhibit a
/// logarithm that sits on top of an O(1) companion term.
pub fn log_companion_fit(samples: &[GammaSample]) -> (f64, f64, f64) {
    let pts: Vec<(f64, f64)> = samples.iter().map(|g| ((1.0 / g.hbar).ln(), g.value.re)).collect();
    let (a, b, r) = linear_fit(&pts);
    let scale = pts.iter().map(|p| p.1.abs()).sum::<f64>() / pts.len() as f64;
    (a, b, r / scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub slope: f64,
    pub is_fast_decay: bool,
}

/// Log-log slope of `|gamma|`; fast decay means slope >= 4 or every sample
/// below `1e-10 * sweep_max`.
pub fn classify_regular(samples: &[GammaSample], sweep_max: f64) -> Result<DecayReport> {
    if samples.len() < 6 {
        return Err(ProbeError::TooFewSamples { need: 6, got: samples.len() });
    }
    let floor = 1e-10 * sweep_max;
    let below = samples.iter().all(|g| g.value.norm() <= floor);
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|g| g.value.norm() > 0.0)
        .map(|g| (g.hbar.ln(), g.value.norm().ln()))
        .collect();
    let slope = if pts.len() >= 2 { linear_fit(&pts).0 } else { f64::INFINITY };
    Ok(DecayReport { slope, is_fast_decay: below || slope >= 4.0 })
}

/// Fits CSV `E,alpha,logflag,re_C,im_C,residual,ambiguous`.
pub fn write_fits_csv<W: Write>(fits: &[OrderFit], mut out: W) -> Result<()> {
    writeln!(out, "E,alpha,logflag,re_C,im_C,residual,ambiguous")?;
    for f in fits {
        writeln!(
            out,
            "{:?},{:?},{},{:?},{:?},{:?},{}",
            f.energy, f.alpha, f.log_flag, f.coefficient.re, f.coefficient.im, f.residual, f.ambiguous
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(hs: &[f64], f: impl Fn(f64) -> f64) -> Vec<GammaSample> {
        hs.iter()
            .map(|&h| GammaSample { energy: 0.0, hbar: h, value: Complex64::new(f(h), 0.0), count: 1, err_bound: 0.0 })
            .collect()
    }

    #[test]
    fn exact_power_and_log() {
        let hs = Ladder::default().hbars();
        let f = fit_order(&synth(&hs, |h| 2.0 * h.powf(-0.25))).unwrap();
        assert!((f.alpha + 0.25).abs() < 1e-12 && f.log_flag == 0);
        assert!((f.coefficient.re - 2.0).abs() < 1e-10);
        let f = fit_order(&synth(&hs, |h| 3.0 * (1.0 / h).ln())).unwrap();
        assert!(f.alpha.abs() < 1e-12 && f.log_flag == 1);
        assert!((f.coefficient.re - 3.0).abs() < 1e-10);
    }

    #[test]
    fn preconditions() {
        let hs = Ladder::default().hbars();
        assert!(matches!(fit_order(&synth(&hs[..5], |_| 1.0)), Err(ProbeError::TooFewSamples { .. })));
        let mut s = synth(&hs, |_| 1.0);
        s[3].energy = 0.5;
        assert_eq!(fit_order(&s), Err(ProbeError::MixedEnergies));
        let mut s = synth(&hs, |_| 1.0);
        s[2].err_bound = 0.5;
        assert!(matches!(fit_order(&s), Err(ProbeError::BelowErrorBound { .. })));
        let s = synth(&hs, |h| (40.0 / h).cos());
        assert!(matches!(fit_order(&s), Err(ProbeError::Oscillatory { .. })));
    }

    #[test]
    fn regular_classification() {
        let hs = Ladder::default().hbars();
        assert!(classify_regular(&synth(&hs, |h| h.powi(6)), 1.0).unwrap().is_fast_decay);
        assert!(!classify_regular(&synth(&hs, |_| 0.3), 1.0).unwrap().is_fast_decay);
        let r = classify_regular(&synth(&hs, |_| 0.0), 1.0).unwrap();
        assert!(r.is_fast_decay);
    }

    #[test]
    fn smallest_coefficient() {
        let hs = Ladder::default().hbars();
        let s = synth(&hs, |h| 1.5 * h.powf(-0.25));
        let c = coefficient_at_smallest(&s, -0.25, 0).unwrap();
        assert!((c.re - 1.5).abs() < 1e-12);
    }
}
