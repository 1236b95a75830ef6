//! Eigenvalues of `-hbar^2 Laplacian + V` on a Dirichlet box, restricted to a window.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};
use crate::potential::Potential;

/// How eigenvalues near the window edges are weighted in spectral sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cutoff {
    /// Weight 1 on `J(eps)`, 0 outside.
    Hard,
    /// Weight 1 on `[E1, E2]`, falling smoothly to 0 across the margins.
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub e1: f64,
    pub e2: f64,
    pub eps: f64,
    pub cutoff: Cutoff,
}

fn smoothstep(u: f64) -> f64 {
    let f = |v: f64| if v <= 0.0 { 0.0 } else { (-1.0 / v).exp() };
    let u = u.clamp(0.0, 1.0);
    let a = f(u);
    let b = f(1.0 - u);
    a / (a + b)
}

impl Window {
    pub fn new(e1: f64, e2: f64, eps: f64, cutoff: Cutoff) -> Result<Self> {
        if !(e1 <= e2) {
            return Err(ProbeError::Config(format!("window needs E1 <= E2, got [{e1}, {e2}]")));
        }
        if !(eps > 0.0) {
            return Err(ProbeError::Config("window margin must be positive".into()));
        }
        Ok(Self { e1, e2, eps, cutoff })
    }

    /// Margin `max(0.1 |E2 - E1|, 1)` with the smooth cutoff.
    pub fn with_default_margin(e1: f64, e2: f64) -> Result<Self> {
        Self::new(e1, e2, (0.1 * (e2 - e1)).max(1.0), Cutoff::Smooth)
    }

    pub fn lower(&self) -> f64 {
        self.e1 - self.eps
    }

    pub fn upper(&self) -> f64 {
        self.e2 + self.eps
    }

    pub fn contains(&self, lambda: f64) -> bool {
        lambda >= self.lower() && lambda <= self.upper()
    }

    pub fn weight(&self, lambda: f64) -> f64 {
        if !self.contains(lambda) {
            return 0.0;
        }
        match self.cutoff {
            Cutoff::Hard => 1.0,
            Cutoff::Smooth => {
                if lambda > self.e2 {
                    smoothstep((self.upper() - lambda) / self.eps)
                } else if lambda < self.e1 {
                    smoothstep((lambda - self.lower()) / self.eps)
                } else {
                    1.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub n: usize,
    pub half_width: f64,
    pub grid_points: usize,
    pub stencil: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSet {
    pub hbar: f64,
    pub window: Window,
    pub eigenvalues: Vec<f64>,
    pub discretization: Discretization,
    pub err_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    /// Grid points per shortest local de Broglie wavelength.
    pub points_per_wavelength: f64,
    /// Cap on the matrix dimension.
    pub max_dimension: usize,
    /// Re-solve on a grid 20% coarser to bound the eigenvalue error.
    pub error_check: bool,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { points_per_wavelength: 6.0, max_dimension: 3000, error_check: true }
    }
}

fn min_on_box(pot: &Potential) -> f64 {
    let l = pot.half_width();
    let m = 401;
    let axis: Vec<f64> = (0..m).map(|i| -l + 2.0 * l * i as f64 / (m - 1) as f64).collect();
    match pot.dimension() {
        1 => axis.iter().map(|&x| pot.value(&[x])).fold(f64::INFINITY, f64::min),
        _ => axis
            .iter()
            .flat_map(|&a| axis.iter().map(move |&b| [a, b]))
            .map(|p| pot.value(&p))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Smallest symmetric half-width such that, beyond the outermost turning
/// point at `e_top` along each axis and diagonal, the tunnelling action
/// `\int sqrt(V - e_top) dx` reaches `30 hbar`.
pub fn auto_box(pot: &Potential, e_top: f64, hbar: f64) -> f64 {
    let dirs: Vec<Vec<f64>> = match pot.dimension() {
        1 => vec![vec![1.0], vec![-1.0]],
        _ => (0..8)
            .map(|i| {
                let th = PI * i as f64 / 4.0;
                vec![th.cos(), th.sin()]
            })
            .collect(),
    };
    let step = 1e-3;
    let mut best: f64 = 0.0;
    for d in dirs {
        let mut r = 0.0;
        let mut last_inside = 0.0;
        let mut action = 0.0;
        while r < 100.0 {
            r += step;
            let x: Vec<f64> = d.iter().map(|c| c * r).collect();
            let v = pot.value(&x) - e_top;
            if v <= 0.0 {
                last_inside = r;
                action = 0.0;
            } else {
                action += v.sqrt() * step;
                if action >= 30.0 * hbar && r > last_inside + 10.0 * step {
                    break;
                }
            }
        }
        let scale = d.iter().fold(0.0, |m: f64, c| m.max(c.abs()));
        best = best.max(r * scale);
    }
    best
}

fn dvr_kinetic_1d(m: usize, dx: f64, hbar: f64) -> DMatrix<f64> {
    let c = hbar * hbar / (dx * dx);
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            c * PI * PI / 3.0
        } else {
            let d = i as f64 - j as f64;
            let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            c * 2.0 * s / (d * d)
        }
    })
}

fn dvr_spectrum(pot: &Potential, hbar: f64, dx_target: f64) -> (Vec<f64>, usize) {
    let l = pot.half_width();
    let cells = (2.0 * l / dx_target).ceil() as usize;
    let dx = 2.0 * l / cells as f64;
    let m = cells - 1;
    let xs: Vec<f64> = (1..cells).map(|i| -l + i as f64 * dx).collect();
    let t = dvr_kinetic_1d(m, dx, hbar);
    let h = match pot.dimension() {
        1 => {
            let mut h = t;
            for i in 0..m {
                h[(i, i)] += pot.value(&[xs[i]]);
            }
            h
        }
        _ => {
            let dim = m * m;
            DMatrix::from_fn(dim, dim, |p, q| {
                let (i1, j1) = (p / m, p % m);
                let (i2, j2) = (q / m, q % m);
                let mut v = 0.0;
                if j1 == j2 {
                    v += t[(i1, i2)];
                }
                if i1 == i2 {
                    v += t[(j1, j2)];
                }
                if p == q {
                    v += pot.value(&[xs[i1], xs[j1]]);
                }
                v
            })
        }
    };
    let mut eig: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    (eig, cells + 1)
}

/// Sinc-DVR discretization with a dense symmetric eigensolve; the error
/// bound compares against a grid 20% coarser.
pub fn discretize_and_solve(pot: &Potential, hbar: f64, win: &Window, res: &Resolution) -> Result<EigenSet> {
    if !(hbar > 0.0) {
        return Err(ProbeError::Config("hbar must be positive".into()));
    }
    let top = win.upper();
    let boundary = pot.boundary_min();
    if !(boundary > top) {
        return Err(ProbeError::BoxTooSmall { boundary_min: boundary, top });
    }
    let p_max = (top - min_on_box(pot)).max(1e-12).sqrt();
    let dx_target = 2.0 * PI * hbar / (p_max * res.points_per_wavelength);
    let per_axis = (2.0 * pot.half_width() / dx_target).ceil() as usize;
    let dim = per_axis.saturating_sub(1).pow(pot.dimension() as u32);
    if dim > res.max_dimension {
        return Err(ProbeError::ResolutionInsufficient { hbar, suggested: dim });
    }
    let (all, grid_points) = dvr_spectrum(pot, hbar, dx_target);
    let lo = all.partition_point(|&l| l < win.lower());
    let hi = all.partition_point(|&l| l <= win.upper());
    let eigenvalues = all[lo..hi].to_vec();
    let mut err_bound = 0.0;
    if res.error_check && !eigenvalues.is_empty() {
        let (coarse, _) = dvr_spectrum(pot, hbar, dx_target / 0.8);
        for (i, l) in eigenvalues.iter().enumerate() {
            if let Some(c) = coarse.get(lo + i) {
                err_bound = f64::max(err_bound, (c - l).abs());
            }
        }
        err_bound = err_bound.max(1e-15 * eigenvalues.iter().fold(1.0, |m: f64, v| m.max(v.abs())));
        if err_bound > 0.01 * hbar {
            return Err(ProbeError::ResolutionInsufficient { hbar, suggested: 2 * dim });
        }
    }
    Ok(EigenSet {
        hbar,
        window: *win,
        eigenvalues,
        discretization: Discretization {
            n: pot.dimension(),
            half_width: pot.half_width(),
            grid_points,
            stencil: "sinc-dvr".into(),
        },
        err_bound,
    })
}

/// Closed-form spectrum of `c |x|^2`: `hbar sqrt(c) (2j+1)` for n=1 and
/// `2 hbar sqrt(c) (j+1)` with multiplicity `j+1` for n=2.
pub fn oscillator_oracle(c: f64, hbar: f64, win: &Window, n: usize) -> Result<EigenSet> {
    if !(c > 0.0) || !(n == 1 || n == 2) {
        return Err(ProbeError::Config("oracle needs c > 0 and n in {1, 2}".into()));
    }
    let w = hbar * c.sqrt();
    let mut eigenvalues = Vec::new();
    let mut j = 0usize;
    loop {
        let (lambda, mult) = if n == 1 { (w * (2 * j + 1) as f64, 1) } else { (2.0 * w * (j + 1) as f64, j + 1) };
        if lambda > win.upper() {
            break;
        }
        if lambda >= win.lower() {
            eigenvalues.extend(std::iter::repeat(lambda).take(mult));
        }
        j += 1;
    }
    Ok(EigenSet {
        hbar,
        window: *win,
        eigenvalues,
        discretization: Discretization { n, half_width: f64::INFINITY, grid_points: 0, stencil: "oracle".into() },
        err_bound: 0.0,
    })
}

/// Weyl estimate of the number of eigenvalues in `J(eps)` (n=1 only).
pub fn weyl_count_estimate(pot: &Potential, win: &Window, hbar: f64) -> Result<f64> {
    let hi = crate::trace::phase_volume(pot, win.upper())?;
    let lo = crate::trace::phase_volume(pot, win.lower())?;
    Ok((hi - lo) / (2.0 * PI * hbar).powi(pot.dimension() as i32))
}

impl EigenSet {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// CSV with header `hbar,lambda,err_bound`; floats use round-trip formatting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "hbar,lambda,err_bound")?;
        for l in &self.eigenvalues {
            writeln!(out, "{:?},{:?},{:?}", self.hbar, l, self.err_bound)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R, window: Window, discretization: Discretization) -> Result<Self> {
        let mut lines = input.lines().filter(|l| l.as_ref().map_or(true, |l| !l.starts_with('#')));
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != "hbar,lambda,err_bound" {
            return Err(ProbeError::Io(format!("unexpected eigenvalue CSV header '{header}'")));
        }
        let mut hbar = f64::NAN;
        let mut err_bound: f64 = 0.0;
        let mut eigenvalues = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| ProbeError::Io(format!("bad row '{line}'"))))
                .collect::<Result<_>>()?;
            if f.len() != 3 {
                return Err(ProbeError::Io(format!("bad row '{line}'")));
            }
            hbar = f[0];
            eigenvalues.push(f[1]);
            err_bound = err_bound.max(f[2]);
        }
        Ok(Self { hbar, window, eigenvalues, discretization, err_bound })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_window_example() {
        let win = Window::new(0.1, 2.0, 1e-3, Cutoff::Hard).unwrap();
        let pot = Potential::harmonic(1.0).with_half_width(3.5);
        let es = discretize_and_solve(&pot, 0.05, &win, &Resolution::default()).unwrap();
        assert_eq!(es.len(), 19);
        for (j, l) in es.eigenvalues.iter().enumerate() {
            let exact = 0.05 * (2 * (j + 1) + 1) as f64;
            assert!((l - exact).abs() < 1e-9, "{l} vs {exact}");
        }
    }

    #[test]
    fn scaled_harmonic() {
        let win = Window::new(0.0, 3.0, 0.1, Cutoff::Hard).unwrap();
        let pot = Potential::harmonic(4.0).with_half_width(2.5);
        let es = discretize_and_solve(&pot, 0.1, &win, &Resolution::default()).unwrap();
        for (j, l) in es.eigenvalues.iter().enumerate() {
            assert!((l - 0.2 * (2 * j + 1) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn isotropic_2d_multiplicities() {
        let win = Window::new(0.0, 0.75, 0.1, Cutoff::Hard).unwrap();
        let pot = Potential::anisotropic(1.0, 1.0).with_half_width(2.6);
        let res = Resolution { points_per_wavelength: 4.0, ..Resolution::default() };
        let es = discretize_and_solve(&pot, 0.1, &win, &res).unwrap();
        let oracle = oscillator_oracle(1.0, 0.1, &win, 2).unwrap();
        assert_eq!(es.len(), oracle.len());
        for (a, b) in es.eigenvalues.iter().zip(&oracle.eigenvalues) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn oracle_examples() {
        let w = |a, b| Window::new(a, b, 1e-9, Cutoff::Hard).unwrap();
        assert_eq!(oscillator_oracle(1.0, 1.0, &w(0.0, 10.0), 1).unwrap().eigenvalues, vec![1.0, 3.0, 5.0, 7.0, 9.0]);
        assert_eq!(oscillator_oracle(4.0, 0.5, &w(0.0, 4.0), 1).unwrap().eigenvalues, vec![1.0, 3.0]);
        assert_eq!(oscillator_oracle(1.0, 1.0, &w(0.0, 5.0), 2).unwrap().eigenvalues, vec![2.0, 4.0, 4.0]);
    }

    #[test]
    fn box_too_small() {
        let win = Window::new(0.0, 2.0, 0.2, Cutoff::Hard).unwrap();
        let pot = Potential::harmonic(1.0).with_half_width(1.0);
        assert!(matches!(
            discretize_and_solve(&pot, 0.1, &win, &Resolution::default()),
            Err(ProbeError::BoxTooSmall { .. })
        ));
    }

    #[test]
    fn smooth_weight_profile() {
        let win = Window::new(0.0, 1.0, 0.5, Cutoff::Smooth).unwrap();
        assert_eq!(win.weight(0.5), 1.0);
        assert_eq!(win.weight(1.5), 0.0);
        assert_eq!(win.weight(-0.6), 0.0);
        assert!((win.weight(1.25) - 0.5).abs() < 1e-12);
        assert!(win.weight(1.1) > win.weight(1.3));
    }

    #[test]
    fn invalid_windows() {
        assert!(Window::new(2.0, 1.0, 0.1, Cutoff::Hard).is_err());
        assert!(Window::new(0.0, 1.0, 0.0, Cutoff::Hard).is_err());
    }
}
