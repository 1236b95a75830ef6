//! The spectral sum `gamma(E, hbar, phi)`, phase-space volumes and the Weyl control.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};
use crate::potential::{find_critical_points, Potential};
use crate::quad;
use crate::quantum::EigenSet;
use crate::testfn::TestFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaSample {
    pub energy: f64,
    pub hbar: f64,
    pub value: Complex64,
    pub count: usize,
    pub err_bound: f64,
}

/// `sum_j w(lambda_j) phi((lambda_j - E) / hbar)` over the eigenvalues of the set,
/// where `w` is the window weight.
pub fn gamma(es: &EigenSet, tf: &TestFunction, energy: f64) -> Result<GammaSample> {
    let hbar = es.hbar;
    if es.err_bound >= 0.1 * hbar {
        return Err(ProbeError::SpectrumTooCoarse { hbar, err: es.err_bound });
    }
    if energy < es.window.e1 || energy > es.window.e2 {
        return Err(ProbeError::Config(format!(
            "E={energy} outside [{}, {}]",
            es.window.e1, es.window.e2
        )));
    }
    let interp_tol = 1e-11 * tf.peak() + tf.tail_bound();
    let mut value = Complex64::new(0.0, 0.0);
    let mut count = 0;
    let mut err = 0.0;
    for &l in &es.eigenvalues {
        let w = es.window.weight(l);
        if w == 0.0 {
            continue;
        }
        let s = (l - energy) / hbar;
        value += tf.eval(s) * w;
        err += w * (interp_tol + tf.eval_deriv(s).norm() * es.err_bound / hbar);
        count += 1;
    }
    Ok(GammaSample { energy, hbar, value, count, err_bound: err })
}

/// Writes the sweep CSV `E,hbar,re_gamma,im_gamma,count,err_bound`.
pub fn write_sweep_csv<W: Write>(samples: &[GammaSample], mut out: W) -> Result<()> {
    writeln!(out, "E,hbar,re_gamma,im_gamma,count,err_bound")?;
    for s in samples {
        writeln!(
            out,
            "{:?},{:?},{:?},{:?},{},{:?}",
            s.energy, s.hbar, s.value.re, s.value.im, s.count, s.err_bound
        )?;
    }
    Ok(())
}

fn intervals_below(pot: &Potential, e: f64) -> Vec<(f64, f64)> {
    let l = pot.half_width();
    let m = 4001;
    let xs: Vec<f64> = (0..m).map(|k| -l + 2.0 * l * k as f64 / (m - 1) as f64).collect();
    let root = |a: f64, b: f64| {
        let (mut a, mut b) = (a, b);
        let fa = pot.value(&[a]) - e;
        for _ in 0..100 {
            let mid = 0.5 * (a + b);
            if (pot.value(&[mid]) - e > 0.0) == (fa > 0.0) {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    };
    let mut out = Vec::new();
    let mut start = if pot.value(&[xs[0]]) < e { Some(xs[0]) } else { None };
    for w in xs.windows(2) {
        let (a, b) = (pot.value(&[w[0]]) < e, pot.value(&[w[1]]) < e);
        if !a && b {
            start = Some(root(w[0], w[1]));
        } else if a && !b {
            if let Some(s) = start.take() {
                out.push((s, root(w[0], w[1])));
            }
        }
    }
    if let Some(s) = start {
        out.push((s, l));
    }
    out
}

/// `Vol{(x, xi) : |xi|^2 + V(x) <= E}` inside the box.
pub fn phase_volume(pot: &Potential, e: f64) -> Result<f64> {
    match pot.dimension() {
        1 => {
            let mut total = 0.0;
            for (a, b) in intervals_below(pot, e) {
                // x = a + (b - a)(1 - cos th)/2 removes the square-root endpoints.
                let h = 0.5 * (b - a);
                total += quad::integrate(
                    |th| {
                        let x = a + h * (1.0 - th.cos());
                        2.0 * (e - pot.value(&[x])).max(0.0).sqrt() * h * th.sin()
                    },
                    0.0,
                    PI,
                    1e-14,
                    1e-13,
                )?;
            }
            Ok(total)
        }
        2 => {
            let l = pot.half_width();
            let m = 2000;
            let d = 2.0 * l / m as f64;
            let mut s = 0.0;
            for i in 0..m {
                for j in 0..m {
                    let x = [-l + (i as f64 + 0.5) * d, -l + (j as f64 + 0.5) * d];
                    s += (e - pot.value(&x)).max(0.0);
                }
            }
            Ok(PI * s * d * d)
        }
        n => Err(ProbeError::Unsupported(format!("dimension {n}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Liouville {
    pub value: f64,
    /// Monte Carlo standard error (0 for deterministic quadrature).
    pub std_error: f64,
}

/// `d/dE Vol{p <= E}`: central difference of the quadrature volume for n=1,
/// `pi * Area{V <= E}` by Monte Carlo for n=2.
pub fn liouville_volume(pot: &Potential, e: f64, mc_points: usize, seed: u64) -> Result<Liouville> {
    let band = 0.02 * (1.0 + e.abs());
    for cp in find_critical_points(pot, 16)?.points {
        if (cp.value - e).abs() < band {
            return Err(ProbeError::NearCritical { energy: e, critical: cp.value, band });
        }
    }
    match pot.dimension() {
        1 => {
            let d = 1e-4 * (1.0 + e.abs());
            let v = (phase_volume(pot, e + d)? - phase_volume(pot, e - d)?) / (2.0 * d);
            Ok(Liouville { value: v, std_error: 0.0 })
        }
        2 => {
            let l = pot.half_width();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut hits = 0usize;
            for _ in 0..mc_points {
                let x = [rng.random_range(-l..l), rng.random_range(-l..l)];
                if pot.value(&x) <= e {
                    hits += 1;
                }
            }
            let p = hits as f64 / mc_points as f64;
            let area = 4.0 * l * l;
            Ok(Liouville {
                value: PI * area * p,
                std_error: PI * area * (p * (1.0 - p) / mc_points as f64).sqrt(),
            })
        }
        n => Err(ProbeError::Unsupported(format!("dimension {n}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylReport {
    pub energy: f64,
    pub liouville: f64,
    pub phihat0: f64,
    /// (hbar, gamma, relative deviation) per ladder point.
    pub rows: Vec<(f64, f64, f64)>,
    /// Deviation at the smallest hbar.
    pub deviation: f64,
}

/// Compares `gamma` with the Weyl prediction `(2 pi hbar)^{1-n} phihat(0) LVol / (2 pi)`.
pub fn weyl_check(
    pot: &Potential,
    tf: &TestFunction,
    e: f64,
    sets: &[EigenSet],
    mc_points: usize,
    seed: u64,
) -> Result<WeylReport> {
    let ph0 = tf.phihat(0.0);
    if ph0 == 0.0 {
        return Err(ProbeError::Config("Weyl check needs phihat(0) != 0 (use j0 = 0)".into()));
    }
    let n = pot.dimension() as i32;
    let lv = liouville_volume(pot, e, mc_points, seed)?.value;
    let mut rows = Vec::new();
    for es in sets {
        let g = gamma(es, tf, e)?.value.re;
        let pred = (2.0 * PI * es.hbar).powi(1 - n) * ph0 * lv / (2.0 * PI);
        rows.push((es.hbar, g, (g / pred - 1.0).abs()));
    }
    let deviation = rows
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|r| r.2)
        .ok_or(ProbeError::TooFewSamples { need: 1, got: 0 })?;
    Ok(WeylReport { energy: e, liouville: lv, phihat0: ph0, rows, deviation })
}
