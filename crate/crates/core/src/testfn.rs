//! Admissible test functions: `phihat(t) = t^{2 j0} g(t)` with a compactly
//! supported bump `g`, and `phi` tabulated by inverse FFT.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    StandardEven,
    Odd,
    Shifted,
}

impl Shape {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "even" | "standard-even" => Ok(Shape::StandardEven),
            "odd" => Ok(Shape::Odd),
            "shifted" => Ok(Shape::Shifted),
            other => Err(ProbeError::Config(format!("unknown bump shape '{other}'"))),
        }
    }
}

/// Tabulation resolution: `t_nodes` samples of `phihat` on `[-M, M)` and a
/// zero-padding factor for the inverse transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_nodes: usize,
    pub pad: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { t_nodes: 4096, pad: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionSpec {
    pub m: f64,
    pub j0: u32,
    pub shape: Shape,
}

#[derive(Debug, Clone)]
pub struct TestFunction {
    spec: TestFunctionSpec,
    grid: GridSpec,
    phihat_table: Vec<f64>,
    x_min: f64,
    dx: f64,
    phi: Vec<Complex64>,
    dphi: Vec<Complex64>,
    tail_bound: f64,
    x_signal: f64,
    peak: f64,
    norm1: f64,
}

fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// Closed-form `phihat` for the given spec.
pub fn phihat_exact(spec: &TestFunctionSpec, t: f64) -> f64 {
    let m = spec.m;
    let g = match spec.shape {
        Shape::StandardEven => bump(t / m),
        Shape::Odd => bump(t / m) * t / m,
        Shape::Shifted => bump((t - 0.5 * m) / (0.5 * m)),
    };
    if g == 0.0 {
        0.0
    } else {
        t.powi(2 * spec.j0 as i32) * g
    }
}

fn lagrange6(table: &[Complex64], x_min: f64, dx: f64, x: f64) -> Complex64 {
    let u = (x - x_min) / dx;
    let i0 = u.floor() as isize - 2;
    if i0 < 0 || i0 + 5 >= table.len() as isize {
        return Complex64::new(0.0, 0.0);
    }
    let s = u - (i0 as f64);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..6 {
        let mut w = 1.0;
        for m in 0..6 {
            if m != j {
                w *= (s - m as f64) / (j as f64 - m as f64);
            }
        }
        acc += table[(i0 + j as isize) as usize] * w;
    }
    acc
}

/// Builds `phi` from `phihat` with the convention `phihat(t) = \int e^{itx} phi(x) dx`.
pub fn build_test_function(m: f64, j0: u32, shape: Shape, grid: GridSpec) -> Result<TestFunction> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(ProbeError::Config(format!("support radius must be positive, got {m}")));
    }
    if grid.t_nodes < 4096 || grid.pad < 8 {
        return Err(ProbeError::Config("need at least 4096 t-nodes and padding factor 8".into()));
    }
    let spec = TestFunctionSpec { m, j0, shape };
    let nt = grid.t_nodes;
    let dt = 2.0 * m / nt as f64;
    let phihat_table: Vec<f64> = (0..=nt).map(|j| phihat_exact(&spec, -m + j as f64 * dt)).collect();
    let n = nt * grid.pad;
    let dx = 2.0 * PI / (n as f64 * dt);
    let transform = |weight: &dyn Fn(f64) -> Complex64| -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..nt {
            let t = -m + j as f64 * dt;
            buf[j] = weight(t) * phihat_table[j];
        }
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        // Reorder to x_k = k dx, k = -n/2 .. n/2 - 1, with the e^{i M x} phase.
        (0..n)
            .map(|i| {
                let k = i as isize - (n / 2) as isize;
                let x = k as f64 * dx;
                let idx = k.rem_euclid(n as isize) as usize;
                buf[idx] * Complex64::from_polar(dt / (2.0 * PI), m * x)
            })
            .collect()
    };
    let phi = transform(&|_| Complex64::new(1.0, 0.0));
    let dphi = transform(&|t| Complex64::new(0.0, -t));
    let x_min = -((n / 2) as f64) * dx;
    let total: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
    let edge = n / 20;
    let outer: f64 = phi[..edge].iter().chain(&phi[n - edge..]).map(|z| z.norm_sqr()).sum();
    if outer > 1e-10 * total {
        return Err(ProbeError::IncreaseGrid { fraction: outer / total });
    }
    let tail_bound = phi[..edge].iter().chain(&phi[n - edge..]).fold(0.0, |a: f64, z| a.max(z.norm()));
    let peak = phi.iter().fold(0.0, |a: f64, z| a.max(z.norm()));
    let norm1 = phi.iter().map(|z| z.norm()).sum::<f64>() * dx;
    // Beyond x_signal the table is dominated by transform round-off.
    let floor = 10.0 * tail_bound.max(1e-300);
    let x_signal = phi
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > floor)
        .map(|(i, _)| (x_min + i as f64 * dx).abs())
        .fold(0.0, f64::max);
    Ok(TestFunction { spec, grid, phihat_table, x_min, dx, phi, dphi, tail_bound, x_signal, peak, norm1 })
}

/// Even and odd bumps with identical support, flatness and grid.
pub fn parity_pair(m: f64, j0: u32, grid: GridSpec) -> Result<(TestFunction, TestFunction)> {
    Ok((
        build_test_function(m, j0, Shape::StandardEven, grid)?,
        build_test_function(m, j0, Shape::Odd, grid)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub support_ok: bool,
    pub flat_ok: bool,
    /// Number of leading moments found to vanish.
    pub max_flatness_verified: u32,
}

pub fn check_admissibility(tf: &TestFunction, period_bound: f64) -> Admissibility {
    let mut verified = 0;
    while verified < 16 && tf.moment_vanishes(verified) {
        verified += 1;
    }
    Admissibility {
        support_ok: tf.spec.m < period_bound,
        flat_ok: verified >= 2 * tf.spec.j0,
        max_flatness_verified: verified,
    }
}

impl TestFunction {
    pub fn spec(&self) -> TestFunctionSpec {
        self.spec
    }

    pub fn m(&self) -> f64 {
        self.spec.m
    }

    pub fn j0(&self) -> u32 {
        self.spec.j0
    }

    pub fn shape(&self) -> Shape {
        self.spec.shape
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// True unless the bump is even (then `phi` is real).
    pub fn is_complex(&self) -> bool {
        self.spec.shape != Shape::StandardEven
    }

    /// Half-width of the tabulated x-range.
    pub fn x_max(&self) -> f64 {
        -self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Largest `|phi|` in the outer 5% on each side of the tabulation.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn peak(&self) -> f64 {
        self.peak
    }

    pub fn norm1(&self) -> f64 {
        self.norm1
    }

    /// Tabulated `phihat` at nodes `-M + j * 2M / t_nodes`, `j = 0..=t_nodes`.
    pub fn phihat_table(&self) -> &[f64] {
        &self.phihat_table
    }

    pub fn phihat(&self, t: f64) -> f64 {
        phihat_exact(&self.spec, t)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        lagrange6(&self.phi, self.x_min, self.dx, x)
    }

    pub fn eval_deriv(&self, x: f64) -> Complex64 {
        lagrange6(&self.dphi, self.x_min, self.dx, x)
    }

    /// Grid nodes and values of the tabulation.
    pub fn samples(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.phi.iter().enumerate().map(move |(i, &z)| (self.x_min + i as f64 * self.dx, z))
    }

    /// Extent of the tabulation above the round-off floor.
    pub fn x_signal(&self) -> f64 {
        self.x_signal
    }

    /// `\int x^j phi(x) dx` on the tabulation, restricted to `|x| <= x_signal`.
    pub fn moment(&self, j: u32) -> Complex64 {
        self.samples()
            .filter(|(x, _)| x.abs() <= self.x_signal)
            .map(|(x, z)| z * x.powi(j as i32))
            .sum::<Complex64>()
            * self.dx
    }

    /// `\int |x|^j |phi(x)| dx` over the same range: the scale against which
    /// the cancellation in `moment(j)` is judged.
    pub fn abs_moment(&self, j: u32) -> f64 {
        self.samples()
            .filter(|(x, _)| x.abs() <= self.x_signal)
            .map(|(x, z)| z.norm() * x.abs().powi(j as i32))
            .sum::<f64>()
            * self.dx
    }

    /// True when `|moment(j)| <= 1e-6 * abs_moment(j)`.
    pub fn moment_vanishes(&self, j: u32) -> bool {
        self.moment(j).norm() <= 1e-6 * self.abs_moment(j)
    }

    /// `\int e^{itx} phi(x) dx` recomputed from the tabulation.
    pub fn phihat_from_table(&self, t: f64) -> Complex64 {
        self.samples().map(|(x, z)| z * Complex64::from_polar(1.0, t * x)).sum::<Complex64>() * self.dx
    }

    /// `\int_0^inf w(s) phi(sign * s) ds` by adaptive quadrature on the interpolant.
    /// `w` may have an integrable singularity at 0.
    pub fn half_line_integral<W: Fn(f64) -> f64>(&self, w: W, sign: f64) -> Result<Complex64> {
        let x_end = self.x_max() * 0.95;
        let chunks = 256;
        let edges: Vec<f64> = (0..=chunks).map(|i| x_end * (i as f64 / chunks as f64).powi(3)).collect();
        let mut re = 0.0;
        let mut im = 0.0;
        let tol = 1e-13 * self.norm1;
        for c in edges.windows(2) {
            re += quad::integrate(|s| w(s) * self.eval(sign * s).re, c[0], c[1], tol, 1e-11)?;
            if self.is_complex() {
                im += quad::integrate(|s| w(s) * self.eval(sign * s).im, c[0], c[1], tol, 1e-11)?;
            }
        }
        Ok(Complex64::new(re, im))
    }

    /// Writes `x re_phi im_phi` rows for `|x| <= x_limit`.
    pub fn export_table<W: Write>(&self, mut out: W, x_limit: f64) -> Result<()> {
        writeln!(out, "# x re_phi im_phi (M={}, j0={}, shape={:?})", self.spec.m, self.spec.j0, self.spec.shape)?;
        for (x, z) in self.samples().filter(|(x, _)| x.abs() <= x_limit) {
            writeln!(out, "{x:.10e} {:.16e} {:.16e}", z.re, z.im)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_phi(spec: &TestFunctionSpec, x: f64) -> Complex64 {
        let m = spec.m;
        let re = quad::integrate(|t| (t * x).cos() * phihat_exact(spec, t), -m, m, 1e-15, 1e-13).unwrap();
        let im = quad::integrate(|t| -(t * x).sin() * phihat_exact(spec, t), -m, m, 1e-15, 1e-13).unwrap();
        Complex64::new(re, im) / (2.0 * PI)
    }

    #[test]
    fn matches_direct_inversion() {
        for shape in [Shape::StandardEven, Shape::Odd, Shape::Shifted] {
            let tf = build_test_function(1.0, 2, shape, GridSpec::default()).unwrap();
            for &x in &[0.0, 0.37, -2.5, 11.3, -40.1] {
                let d = direct_phi(&tf.spec(), x);
                assert!((tf.eval(x) - d).norm() < 1e-10 * tf.peak(), "{shape:?} x={x} {} {} {}", tf.eval(x), d, tf.peak());
            }
        }
    }

    #[test]
    fn nonflat_integral_is_phihat_zero() {
        let tf = build_test_function(1.0, 0, Shape::StandardEven, GridSpec::default()).unwrap();
        assert!((tf.phihat(0.0) - (-1f64).exp()).abs() < 1e-15);
        assert!((tf.moment(0).re - (-1f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn flat_moments_vanish() {
        let tf = build_test_function(1.0, 2, Shape::StandardEven, GridSpec::default()).unwrap();
        for j in 0..4 {
            assert!(tf.moment(j).norm() <= 1e-6 * tf.norm1(), "moment {j}");
            assert!(tf.moment_vanishes(j));
        }
        assert!(!tf.moment_vanishes(4));
        assert!(tf.moment(4).norm() > 1e-3 * tf.norm1());
    }

    #[test]
    fn parity_of_phi() {
        let (e, o) = parity_pair(1.0, 1, GridSpec::default()).unwrap();
        assert!(!e.is_complex() && o.is_complex());
        let max_re_e = e.samples().fold(0.0, |a: f64, (_, z)| a.max(z.re.abs()));
        let max_im_e = e.samples().fold(0.0, |a: f64, (_, z)| a.max(z.im.abs()));
        assert!(max_im_e <= 1e-10 * max_re_e);
        let max_re_o = o.samples().fold(0.0, |a: f64, (_, z)| a.max(z.re.abs()));
        let max_im_o = o.samples().fold(0.0, |a: f64, (_, z)| a.max(z.im.abs()));
        assert!(max_re_o <= 1e-10 * max_im_o);
        assert_eq!(e.m(), o.m());
        assert_eq!(e.j0(), o.j0());
        assert_eq!(e.grid(), o.grid());
        assert_eq!(e.dx(), o.dx());
    }

    #[test]
    fn round_trip() {
        let tf = build_test_function(1.0, 3, Shape::Shifted, GridSpec::default()).unwrap();
        let scale = tf.phihat_table().iter().fold(0.0, |a: f64, v| a.max(v.abs()));
        for &t in &[-0.9, -0.3, 0.1, 0.45, 0.8] {
            let back = tf.phihat_from_table(t);
            assert!((back - tf.phihat(t)).norm() <= 1e-9 * scale, "t={t}");
        }
    }

    #[test]
    fn shifted_tail_decay() {
        // The bump is only Gevrey-2, so the tail decays like exp(-sqrt(M|x|)).
        let tf = build_test_function(1.0, 2, Shape::Shifted, GridSpec::default()).unwrap();
        let rel = |x: f64| tf.eval(x).norm().max(tf.eval(-x).norm()) / tf.peak();
        assert!(rel(150.0) > 1e-8);
        assert!(rel(150.0) < 1e-2);
        assert!(rel(1500.0) < 1e-8);
    }

    #[test]
    fn admissibility_reports() {
        let tf = build_test_function(1.0, 3, Shape::StandardEven, GridSpec::default()).unwrap();
        let r = check_admissibility(&tf, PI);
        assert!(r.support_ok && r.flat_ok && r.max_flatness_verified == 6);
        let tf = build_test_function(4.0, 0, Shape::StandardEven, GridSpec::default()).unwrap();
        assert!(!check_admissibility(&tf, PI).support_ok);
    }

    #[test]
    fn bad_support_rejected() {
        assert!(build_test_function(0.0, 0, Shape::Odd, GridSpec::default()).is_err());
        assert!(build_test_function(1.0, 0, Shape::Odd, GridSpec { t_nodes: 100, pad: 8 }).is_err());
    }
}
