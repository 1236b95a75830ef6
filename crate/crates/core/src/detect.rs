//! Inverse problem: locate critical energies from a `gamma` sweep, infer the
//! germ degree, tell minima from maxima and recover the spherical average.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};
use crate::scaling::{classify_regular, DecayReport, OrderFit};
use crate::stats::linear_fit;
use crate::testfn::TestFunction;
use crate::trace::GammaSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SingularityClass {
    Minimum,
    Maximum,
    Ambiguous,
}

/// Surface measure of the unit sphere in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / libm::tgamma(h)
}

fn beta(a: f64, b: f64) -> f64 {
    (libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)).exp()
}

/// Exponent `n(k+1)/2k - 1` of the one-sided maximum distributions.
pub fn tnk_exponent(n: usize, k: u32) -> f64 {
    n as f64 * (k as f64 + 1.0) / (2.0 * k as f64) - 1.0
}

/// `n(k+1)/2k` is an integer and `n` is odd: the maximum carries `log(1/hbar)`.
pub fn is_log_case(n: usize, k: u32) -> bool {
    n % 2 == 1 && (n * (k as usize + 1)) % (2 * k as usize) == 0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tnk {
    pub n: usize,
    pub k: u32,
    pub plus: Complex64,
    pub minus: Complex64,
}

pub fn tnk_functional(n: usize, k: u32, tf: &TestFunction) -> Result<Tnk> {
    let p = tnk_exponent(n, k);
    let plus = tf.half_line_integral(|s| s.powf(p), 1.0)?;
    let minus = tf.half_line_integral(|s| s.powf(p), -1.0)?;
    Ok(Tnk { n, k, plus, minus })
}

/// `-int |s|^p log|s| phi(s) ds` with `p = n(k+1)/2k - 1`.
pub fn log_functional(n: usize, k: u32, tf: &TestFunction) -> Result<Complex64> {
    let p = tnk_exponent(n, k);
    let w = |s: f64| if s > 0.0 { s.powf(p) * s.ln() } else { 0.0 };
    Ok(-(tf.half_line_integral(w, 1.0)? + tf.half_line_integral(w, -1.0)?))
}

/// Leading maximum functional, up to the universal constant. One-sided
/// constants are taken equal, and for even `n` only the minus side enters.
/// In the log case a flat `phi` kills the `log(1/hbar)` coefficient and the
/// O(1) term pairs `phi` with the log-regularized kernel instead.
pub fn max_functional(n: usize, k: u32, tf: &TestFunction) -> Result<Complex64> {
    if is_log_case(n, k) && 2 * tf.j0() as usize > tnk_exponent(n, k).round() as usize {
        return log_functional(n, k, tf);
    }
    let t = tnk_functional(n, k, tf)?;
    Ok(if n % 2 == 0 { t.minus } else { t.plus + t.minus })
}

/// Leading coefficient at a minimum with spherical average `a`:
/// `S(S^{n-1}) / (2 pi)^n * a * int int_{u,v>0} phi(u^2 + v^{2k}) u^{n-1} v^{n-1}`,
/// reduced to one dimension with the Beta integral.
pub fn predict_min_coefficient(n: usize, k: u32, tf: &TestFunction, a: f64) -> Result<Complex64> {
    let (nf, kf) = (n as f64, k as f64);
    let p = nf / 2.0 + nf / (2.0 * kf) - 1.0;
    let radial = tf.half_line_integral(|s| s.powf(p), 1.0)?;
    let kernel = beta(nf / 2.0, nf / (2.0 * kf)) / (4.0 * kf);
    Ok(radial * (sphere_area(n) / (2.0 * PI).powi(n as i32) * a * kernel))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub energy: f64,
    /// Refined modulus maxima `(hbar, E)` along the linked ridge.
    pub ridge: Vec<(f64, f64)>,
    pub decay: DecayReport,
    pub peak: f64,
}

struct Slice {
    hbar: f64,
    samples: Vec<GammaSample>,
}

fn slices(sweep: &[GammaSample]) -> Result<Vec<Slice>> {
    let mut hs: Vec<f64> = sweep.iter().map(|s| s.hbar).collect();
    hs.sort_by(|a, b| a.total_cmp(b));
    hs.dedup();
    let mut out = Vec::with_capacity(hs.len());
    for h in hs {
        let mut samples: Vec<GammaSample> = sweep.iter().filter(|s| s.hbar == h).copied().collect();
        samples.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        out.push(Slice { hbar: h, samples });
    }
    let grid: Vec<f64> = out[0].samples.iter().map(|s| s.energy).collect();
    if out.iter().any(|s| s.samples.iter().map(|g| g.energy).ne(grid.iter().copied())) {
        return Err(ProbeError::Config("sweep energies differ between hbar values".into()));
    }
    Ok(out)
}

/// Interior local maxima of `|gamma(E)|`, refined by a parabola through
/// three neighbours.
fn modulus_maxima(s: &Slice, rel_floor: f64) -> Vec<(f64, f64)> {
    let y: Vec<f64> = s.samples.iter().map(|g| g.value.norm()).collect();
    let top = y.iter().cloned().fold(0.0, f64::max);
    let mut out = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        if y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] >= rel_floor * top && y[i] > 0.0 {
            let h = s.samples[i + 1].energy - s.samples[i].energy;
            let den = y[i - 1] - 2.0 * y[i] + y[i + 1];
            let shift = if den < 0.0 { 0.5 * h * (y[i - 1] - y[i + 1]) / den } else { 0.0 };
            out.push((s.samples[i].energy + shift, y[i]));
        }
    }
    out
}

/// Candidate critical energies from a sweep over an `(E, hbar)` grid.
///
/// At each `hbar` the modulus maxima of `|gamma|` in `E` sit at
/// `E_c + sigma hbar`; ridges are linked from the smallest `hbar` upward and
/// extrapolated linearly to `hbar = 0` over their `fit_points` smallest members.
/// A candidate survives when the samples at the grid energy nearest to it
/// do not decay fast. Survivors closer than `merge` keep the strongest.
pub fn detect_critical_energies(sweep: &[GammaSample], fit_points: usize, merge: f64) -> Result<Vec<Candidate>> {
    if sweep.is_empty() {
        return Ok(Vec::new());
    }
    let sl = slices(sweep)?;
    let h_min = sl[0].hbar;
    let grid: Vec<f64> = sl[0].samples.iter().map(|g| g.energy).collect();
    if grid.windows(2).any(|w| w[1] - w[0] > h_min * (1.0 + 1e-9)) {
        return Err(ProbeError::Config(format!("sweep E-step exceeds hbar_min = {h_min}")));
    }
    let sweep_max = sweep.iter().map(|g| g.value.norm()).fold(0.0, f64::max);
    let maxima: Vec<Vec<(f64, f64)>> = sl.iter().map(|s| modulus_maxima(s, 1e-3)).collect();

    let mut found: Vec<Candidate> = Vec::new();
    for &(e0, peak) in &maxima[0] {
        let mut ridge = vec![(h_min, e0)];
        for (s, m) in sl.iter().zip(&maxima).skip(1) {
            let last = ridge.last().unwrap().1;
            let next = m
                .iter()
                .map(|&(e, _)| e)
                .filter(|e| (e - last).abs() <= 10.0 * s.hbar)
                .min_by(|a, b| (a - last).abs().total_cmp(&(b - last).abs()));
            match next {
                Some(e) => ridge.push((s.hbar, e)),
                None => break,
            }
        }
        let use_n = ridge.len().min(fit_points.max(2));
        let energy = if use_n >= 2 { linear_fit(&ridge[..use_n]).1 } else { e0 };
        let idx = grid
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - energy).abs().total_cmp(&(b.1 - energy).abs()))
            .map(|(i, _)| i)
            .unwrap();
        let column: Vec<GammaSample> = sl.iter().map(|s| s.samples[idx]).collect();
        let decay = classify_regular(&column, sweep_max)?;
        if !decay.is_fast_decay {
            found.push(Candidate { energy, ridge, decay, peak });
        }
    }
    found.sort_by(|a, b| b.peak.total_cmp(&a.peak));
    let mut kept: Vec<Candidate> = Vec::new();
    for c in found {
        if kept.iter().all(|k| (k.energy - c.energy).abs() > merge) {
            kept.push(c);
        }
    }
    kept.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(kept)
}

/// Measured `gamma` at the smallest `hbar` for one test function.
#[derive(Debug, Clone, Copy)]
pub struct Probe<'a> {
    pub tf: &'a TestFunction,
    pub value: Complex64,
    pub hbar: f64,
}

impl Probe<'_> {
    /// `gamma / hbar^alpha`.
    fn coefficient(&self, alpha: f64) -> Complex64 {
        self.value / self.hbar.powf(alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub energy: f64,
    pub k: u32,
    pub class: SingularityClass,
    pub spherical_average: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub energy: f64,
    pub alpha: f64,
    pub alpha_std_error: f64,
    pub log_flag: u8,
    pub residual: f64,
    pub fit_ambiguous: bool,
    /// `n / (2 alpha + n)` before rounding.
    pub k_estimate: f64,
    pub k: u32,
    pub k_within_tolerance: bool,
    pub class: SingularityClass,
    /// `|C_even| / (|C_even| + |C_odd|)` measured and predicted per model.
    pub parity_share: f64,
    pub share_minimum: f64,
    pub share_maximum: f64,
    pub coefficient_even: Complex64,
    pub coefficient_odd: Complex64,
    pub coefficient_max_probe: Option<Complex64>,
    pub spherical_average: Option<f64>,
    pub up_to_universal_constant: bool,
    pub multi_point: bool,
    pub ground_truth: Option<GroundTruth>,
}

fn share(even: Complex64, odd: Complex64) -> f64 {
    let (e, o) = (even.norm(), odd.norm());
    if e + o == 0.0 {
        0.5
    } else {
        e / (e + o)
    }
}

/// Turns an exponent fit plus parity-pair measurements into a report.
/// `even`/`odd` are flat parity partners; `max_probe` is the fixed-support
/// function whose coefficient carries the amplitude at maxima.
pub fn invert_singularity(
    fit: &OrderFit,
    n: usize,
    even: Probe<'_>,
    odd: Probe<'_>,
    max_probe: Option<Probe<'_>>,
    calibration: Option<&CalibrationTable>,
) -> Result<SingularityReport> {
    let nf = n as f64;
    let denom = 2.0 * fit.alpha + nf;
    if denom <= 0.0 {
        return Err(ProbeError::InconsistentExponent { alpha: fit.alpha, n });
    }
    let k_estimate = nf / denom;
    let k = k_estimate.round().max(1.0) as u32;
    let alpha_k = nf / (2.0 * k as f64) - nf / 2.0;
    let c_even = even.coefficient(alpha_k);
    let c_odd = odd.coefficient(alpha_k);
    let parity_share = share(c_even, c_odd);

    let pe = predict_min_coefficient(n, k, even.tf, 1.0)?;
    let po = predict_min_coefficient(n, k, odd.tf, 1.0)?;
    let share_minimum = share(pe, po);
    let share_maximum = share(max_functional(n, k, even.tf)?, max_functional(n, k, odd.tf)?);

    let class = if fit.log_flag == 1 {
        SingularityClass::Maximum
    } else {
        let dmin = (parity_share - share_minimum).abs();
        let dmax = (parity_share - share_maximum).abs();
        if dmin.min(dmax) > 0.2 {
            SingularityClass::Ambiguous
        } else if dmin <= dmax {
            SingularityClass::Minimum
        } else {
            SingularityClass::Maximum
        }
    };

    let mut up_to_universal_constant = false;
    let mut coefficient_max_probe = None;
    let spherical_average = match class {
        SingularityClass::Minimum => Some((c_even.norm() + c_odd.norm()) / (pe.norm() + po.norm())),
        SingularityClass::Maximum => match max_probe {
            Some(p) => {
                let c = p.coefficient(alpha_k);
                coefficient_max_probe = Some(c);
                let f = max_amplitude_functional(n, k, p.tf)?;
                let constant = calibration.and_then(|t| t.get(n, k));
                up_to_universal_constant = constant.is_none();
                Some(c.norm() / (constant.unwrap_or(1.0) * f))
            }
            None => None,
        },
        SingularityClass::Ambiguous => None,
    };

    Ok(SingularityReport {
        energy: fit.energy,
        alpha: fit.alpha,
        alpha_std_error: fit.alpha_std_error,
        log_flag: fit.log_flag,
        residual: fit.residual,
        fit_ambiguous: fit.ambiguous,
        k_estimate,
        k,
        k_within_tolerance: (k_estimate - k as f64).abs() <= 0.1,
        class,
        parity_share,
        share_minimum,
        share_maximum,
        coefficient_even: c_even,
        coefficient_odd: c_odd,
        coefficient_max_probe,
        spherical_average: spherical_average.filter(|a| *a > 0.0 && a.is_finite()),
        up_to_universal_constant,
        multi_point: false,
        ground_truth: None,
    })
}

/// `S(S^{n-1}) / (2 pi)^n * |max_functional|`, the part of a maximum's
/// coefficient that is neither `A` nor the universal constant.
pub fn max_amplitude_functional(n: usize, k: u32, tf: &TestFunction) -> Result<f64> {
    Ok(sphere_area(n) / (2.0 * PI).powi(n as i32) * max_functional(n, k, tf)?.norm())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub n: usize,
    pub k: u32,
    pub constant: f64,
    pub reference: String,
    /// Support radius and flatness of the probe the constant refers to.
    pub probe_m: f64,
    pub probe_j0: u32,
}

/// Universal maximum constants keyed by `(n, k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub version: u32,
    pub entries: Vec<CalibrationEntry>,
}

impl Default for CalibrationTable {
    fn default() -> Self {
        Self { version: 1, entries: Vec::new() }
    }
}

impl CalibrationTable {
    pub fn get(&self, n: usize, k: u32) -> Option<f64> {
        self.entries.iter().find(|e| e.n == n && e.k == k).map(|e| e.constant)
    }

    /// Replaces any entry with the same key; returns a new snapshot.
    pub fn with_entry(&self, entry: CalibrationEntry) -> Self {
        let mut t = self.clone();
        t.entries.retain(|e| !(e.n == entry.n && e.k == entry.k));
        t.entries.push(entry);
        t.entries.sort_by_key(|e| (e.n, e.k));
        t
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| ProbeError::Calibration(format!("{}: {e}", path.display())))
    }

    /// Writes through a temporary file and renames, so readers never see a
    /// partial table.
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(self).map_err(|e| ProbeError::Calibration(e.to_string()))?;
        std::fs::write(&tmp, text + "\n")?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

/// Universal constant from a reference maximum with known spherical average.
pub fn calibrate_max_constant(
    report: &SingularityReport,
    n: usize,
    probe: Probe<'_>,
    known_a: f64,
    reference: &str,
) -> Result<CalibrationEntry> {
    if report.class != SingularityClass::Maximum {
        return Err(ProbeError::Calibration(format!(
            "reference at E={} classified {:?}, not a maximum",
            report.energy, report.class
        )));
    }
    let k = report.k;
    let alpha_k = n as f64 / (2.0 * k as f64) - n as f64 / 2.0;
    let c = probe.coefficient(alpha_k).norm();
    let f = max_amplitude_functional(n, k, probe.tf)?;
    if !(known_a > 0.0) || f == 0.0 || c == 0.0 {
        return Err(ProbeError::Calibration("degenerate reference measurement".into()));
    }
    Ok(CalibrationEntry {
        n,
        k,
        constant: c / (known_a * f),
        reference: reference.to_string(),
        probe_m: probe.tf.m(),
        probe_j0: probe.tf.j0(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use crate::testfn::{build_test_function, parity_pair, GridSpec, Shape};

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn log_cases() {
        assert!(is_log_case(1, 1));
        assert!(!is_log_case(1, 2));
        assert!(!is_log_case(2, 1));
        assert!(is_log_case(3, 3));
    }

    #[test]
    fn tnk_parity() {
        let (e, o) = parity_pair(1.0, 1, GridSpec::default()).unwrap();
        let te = tnk_functional(1, 2, &e).unwrap();
        assert!((te.plus - te.minus).norm() <= 1e-9 * te.plus.norm().max(1e-300));
        let to = tnk_functional(1, 2, &o).unwrap();
        assert!((to.plus + to.minus).norm() <= 1e-9 * to.plus.norm());
        let t1 = tnk_functional(1, 1, &e).unwrap();
        let half = e.half_line_integral(|_| 1.0, 1.0).unwrap();
        assert!((t1.plus - half).norm() <= 1e-12 * half.norm().max(1e-12));
    }

    #[test]
    fn min_coefficient_harmonic() {
        let tf = build_test_function(1.0, 0, Shape::StandardEven, GridSpec::default()).unwrap();
        let c = predict_min_coefficient(1, 1, &tf, 2.0).unwrap();
        let half = tf.half_line_integral(|_| 1.0, 1.0).unwrap();
        assert!((c - half * 0.5).norm() <= 1e-10 * half.norm());
        let c2 = predict_min_coefficient(1, 1, &tf, 4.0).unwrap();
        assert!((c2 - c * 2.0).norm() <= 1e-14 * c.norm());
    }

    /// Beta reduction against the direct quarter-plane integral.
    #[test]
    fn min_coefficient_direct_2d() {
        let tf = build_test_function(1.0, 0, Shape::StandardEven, GridSpec::default()).unwrap();
        for (n, k) in [(1usize, 2u32), (2, 1), (2, 2)] {
            let reduced = predict_min_coefficient(n, k, &tf, 1.0).unwrap().re;
            let nf = n as f64;
            let smax = 0.9 * tf.x_max();
            let umax = smax.sqrt();
            let inner = |u: f64| {
                let vmax = (smax - u * u).max(0.0).powf(1.0 / (2.0 * k as f64));
                quad::integrate(
                    |v| tf.eval(u * u + v.powi(2 * k as i32)).re * (u * v).powf(nf - 1.0),
                    0.0,
                    vmax,
                    1e-14,
                    1e-10,
                )
                .unwrap()
            };
            let mut direct = 0.0;
            let pieces = 400;
            for i in 0..pieces {
                let a = umax * (i as f64 / pieces as f64).powi(2);
                let b = umax * ((i + 1) as f64 / pieces as f64).powi(2);
                direct += quad::integrate(inner, a, b, 1e-14, 1e-10).unwrap();
            }
            direct *= sphere_area(n) / (2.0 * PI).powi(n as i32);
            assert!((reduced - direct).abs() <= 1e-6 * direct.abs(), "n={n} k={k}: {reduced} vs {direct}");
        }
    }

    #[test]
    fn log_functional_kills_odd() {
        let (e, o) = parity_pair(1.0, 3, GridSpec::default()).unwrap();
        let le = log_functional(1, 1, &e).unwrap();
        let lo = log_functional(1, 1, &o).unwrap();
        assert!(le.norm() > 0.0);
        assert!(lo.norm() <= 1e-8 * le.norm());
    }

    #[test]
    fn calibration_table_round_trip() {
        let t = CalibrationTable::default().with_entry(CalibrationEntry {
            n: 1,
            k: 1,
            constant: 0.05,
            reference: "ref".into(),
            probe_m: 0.3,
            probe_j0: 3,
        });
        assert_eq!(t.get(1, 1), Some(0.05));
        assert_eq!(t.get(1, 2), None);
        let dir = std::env::temp_dir().join(format!("probe-calib-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("cal.json");
        t.save(&p).unwrap();
        assert_eq!(CalibrationTable::load(&p).unwrap(), t);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    fn flat_fit(alpha: f64, log_flag: u8) -> OrderFit {
        OrderFit {
            energy: 0.0,
            alpha,
            log_flag,
            coefficient: Complex64::new(1.0, 0.0),
            residual: 0.01,
            ambiguous: false,
            alpha_power: alpha,
            residual_power: 0.01,
            alpha_log: alpha,
            residual_log: 0.02,
            alpha_std_error: 0.001,
            ladder: Default::default(),
        }
    }

    #[test]
    fn inversion_synthetic_minimum() {
        let (e, o) = parity_pair(0.4, 3, GridSpec::default()).unwrap();
        let h: f64 = 0.01;
        for (k, a) in [(1u32, 2.0), (2, 2.0)] {
            let alpha = 0.5 / k as f64 - 0.5;
            let ce = predict_min_coefficient(1, k, &e, a).unwrap() * h.powf(alpha);
            let co = predict_min_coefficient(1, k, &o, a).unwrap() * h.powf(alpha);
            let r = invert_singularity(
                &flat_fit(alpha, 0),
                1,
                Probe { tf: &e, value: ce, hbar: h },
                Probe { tf: &o, value: co, hbar: h },
                None,
                None,
            )
            .unwrap();
            assert_eq!(r.k, k);
            assert_eq!(r.class, SingularityClass::Minimum);
            assert!((r.spherical_average.unwrap() - a).abs() < 1e-9);
        }
    }

    #[test]
    fn inversion_log_flag_is_maximum() {
        let (e, o) = parity_pair(1.0, 3, GridSpec::default()).unwrap();
        let v = Complex64::new(1e-3, 0.0);
        let r = invert_singularity(
            &flat_fit(0.0, 1),
            1,
            Probe { tf: &e, value: v, hbar: 0.01 },
            Probe { tf: &o, value: v, hbar: 0.01 },
            Some(Probe { tf: &e, value: v, hbar: 0.01 }),
            None,
        )
        .unwrap();
        assert_eq!((r.k, r.class), (1, SingularityClass::Maximum));
        assert!(r.up_to_universal_constant);
    }

    #[test]
    fn inversion_rejects_bad_exponent() {
        let (e, o) = parity_pair(1.0, 3, GridSpec::default()).unwrap();
        let p = Probe { tf: &e, value: Complex64::new(1.0, 0.0), hbar: 0.01 };
        let q = Probe { tf: &o, ..p };
        assert!(matches!(
            invert_singularity(&flat_fit(-0.6, 0), 1, p, q, None, None),
            Err(ProbeError::InconsistentExponent { .. })
        ));
    }

    #[test]
    fn calibration_needs_maximum() {
        let (e, o) = parity_pair(1.0, 3, GridSpec::default()).unwrap();
        let h: f64 = 0.01;
        let ce = predict_min_coefficient(1, 1, &e, 2.0).unwrap();
        let co = predict_min_coefficient(1, 1, &o, 2.0).unwrap();
        let r = invert_singularity(
            &flat_fit(0.0, 0),
            1,
            Probe { tf: &e, value: ce, hbar: h },
            Probe { tf: &o, value: co, hbar: h },
            None,
            None,
        )
        .unwrap();
        let p = Probe { tf: &e, value: ce, hbar: h };
        assert!(matches!(calibrate_max_constant(&r, 1, p, 2.0, "x"), Err(ProbeError::Calibration(_))));
    }
}
