//! Hamiltonian flow of `p = |xi|^2 + V(x)`, the Lipschitz period bound and
//! periodic-orbit searches.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};
use crate::potential::{CriticalPoint, PointClass, Potential};
use crate::quantum::Window;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Self {
        Self { x, xi }
    }
}

pub fn energy(pot: &Potential, z: &PhasePoint) -> f64 {
    z.xi.iter().map(|p| p * p).sum::<f64>() + pot.value(&z.x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    /// The orbit left the box and was truncated.
    pub exited: bool,
}

impl Trajectory {
    /// CSV `t,x1..,xi1..`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.points.first().map_or(1, |z| z.x.len());
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=n).map(|i| format!("xi{i}")));
        writeln!(out, "{}", header.join(","))?;
        for (t, z) in self.times.iter().zip(&self.points) {
            let mut row = vec![format!("{t:?}")];
            row.extend(z.x.iter().chain(&z.xi).map(|v| format!("{v:?}")));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn leapfrog_step(pot: &Potential, x: &mut [f64], xi: &mut [f64], h: f64) {
    let g = pot.gradient(x);
    for (p, gi) in xi.iter_mut().zip(&g) {
        *p -= 0.5 * h * gi;
    }
    for (q, p) in x.iter_mut().zip(xi.iter()) {
        *q += 2.0 * h * p;
    }
    let g = pot.gradient(x);
    for (p, gi) in xi.iter_mut().zip(&g) {
        *p -= 0.5 * h * gi;
    }
}

/// Leapfrog integration of `x' = 2 xi`, `xi' = -grad V` up to time `t` (either sign).
pub fn flow(pot: &Potential, z0: &PhasePoint, t: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(ProbeError::Config("dt must be positive".into()));
    }
    let steps = (t.abs() / dt).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let e0 = energy(pot, z0);
    let l = pot.half_width();
    let mut x = z0.x.clone();
    let mut xi = z0.xi.clone();
    let mut times = vec![0.0];
    let mut points = vec![z0.clone()];
    for s in 1..=steps {
        leapfrog_step(pot, &mut x, &mut xi, h);
        let z = PhasePoint::new(x.clone(), xi.clone());
        if x.iter().any(|q| q.abs() > l) {
            return Ok(Trajectory { times, points, exited: true });
        }
        let drift = (energy(pot, &z) - e0).abs() / (1.0 + e0.abs());
        if drift > 1e-6 {
            return Err(ProbeError::EnergyDrift { drift });
        }
        times.push(s as f64 * h);
        points.push(z);
    }
    Ok(Trajectory { times, points, exited: false })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    /// Level defining the region `{V <= level}`.
    pub level: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub grid_hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodBound {
    pub a: f64,
    pub t: f64,
    pub b: f64,
    pub region: Region,
}

fn spectral_norm(h: &nalgebra::DMatrix<f64>) -> f64 {
    nalgebra::SymmetricEigen::new(h.clone())
        .eigenvalues
        .iter()
        .fold(0.0, |m: f64, v| m.max(v.abs()))
}

fn region_grid(pot: &Potential, level: f64) -> Vec<Vec<f64>> {
    let l = pot.half_width();
    let m = if pot.dimension() == 1 { 4001 } else { 201 };
    let axis: Vec<f64> = (0..m).map(|i| -l + 2.0 * l * i as f64 / (m - 1) as f64).collect();
    let pts: Vec<Vec<f64>> = match pot.dimension() {
        1 => axis.iter().map(|&a| vec![a]).collect(),
        _ => axis.iter().flat_map(|&a| axis.iter().map(move |&b| vec![a, b])).collect(),
    };
    pts.into_iter().filter(|p| pot.value(p) <= level).collect()
}

/// `b = sup |d^2 V|` over `{V <= E2 + eps}` plus 5% of the sampled range of
/// Hessian norms; `a = max(2, b)`, `T = 2 pi / a`.
pub fn period_bound(pot: &Potential, win: &Window, samples: usize, seed: u64) -> Result<PeriodBound> {
    let level = win.upper();
    let grid = region_grid(pot, level);
    if grid.is_empty() {
        return Err(ProbeError::EmptyRegion { level });
    }
    let n = pot.dimension();
    let mut lower = vec![f64::INFINITY; n];
    let mut upper = vec![f64::NEG_INFINITY; n];
    for p in &grid {
        for d in 0..n {
            lower[d] = lower[d].min(p[d]);
            upper[d] = upper[d].max(p[d]);
        }
    }
    let mut norms: Vec<f64> = grid.iter().map(|p| spectral_norm(&pot.hessian(p))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tries = 0;
    let mut taken = 0;
    while taken < samples && tries < 100 * samples.max(1) {
        tries += 1;
        let p: Vec<f64> = (0..n).map(|d| rng.random_range(lower[d]..=upper[d])).collect();
        if pot.value(&p) <= level {
            norms.push(spectral_norm(&pot.hessian(&p)));
            taken += 1;
        }
    }
    let hi = norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let b = hi + 0.05 * (hi - lo);
    let a = b.max(2.0);
    Ok(PeriodBound { a, t: 2.0 * PI / a, b, region: Region { level, lower, upper, grid_hits: grid.len() } })
}

/// `T_i = 2 pi / sqrt(2 mu_i)` at a nondegenerate minimum; empty otherwise.
pub fn linearized_periods(cp: &CriticalPoint) -> Vec<f64> {
    if cp.class != PointClass::Minimum || cp.degenerate {
        return Vec::new();
    }
    cp.hessian_eigenvalues.iter().map(|&mu| 2.0 * PI / (2.0 * mu).sqrt()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSearch {
    /// Shortest period found, if any closed orbit was found.
    pub period: Option<f64>,
    pub energy: f64,
    pub start: Option<PhasePoint>,
    /// (energy, period) for every orbit found.
    pub log: Vec<(f64, f64)>,
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Period of the brake orbit released from rest at `x0`: time of the second
/// sign change of the momentum component along the initial force.
fn brake_orbit_period(pot: &Potential, x0: &[f64], dt: f64, t_max: f64) -> Option<f64> {
    let g = pot.gradient(x0);
    let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if gn == 0.0 {
        return None;
    }
    let dir: Vec<f64> = g.iter().map(|v| -v / gn).collect();
    let mut x = x0.to_vec();
    let mut xi = vec![0.0; x0.len()];
    let proj = |xi: &[f64]| xi.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>();
    let mut prev = 0.0;
    let mut crossings = 0;
    let l = pot.half_width();
    let steps = (t_max / dt) as usize;
    let n = x0.len();
    let start_scale = 1.0 + x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    for s in 1..=steps {
        leapfrog_step(pot, &mut x, &mut xi, dt);
        if x.iter().any(|q| q.abs() > l) {
            return None;
        }
        let p = proj(&xi);
        if s > 1 && (p > 0.0) != (prev > 0.0) {
            crossings += 1;
            if crossings == 2 {
                let t = (s as f64 - 1.0 + prev / (prev - p)) * dt;
                if n == 1 {
                    return Some(t);
                }
                // In 2D only accept genuine returns to the release point.
                let dist = x.iter().zip(x0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                return (dist <= 1e-3 * start_scale).then_some(t);
            }
        }
        prev = p;
    }
    None
}

/// Shooting search for the shortest closed orbit in `p^{-1}(J(eps))`: brake
/// orbits released from equipotentials on a grid of energies (and
/// directions in 2D).
pub fn shortest_period(pot: &Potential, win: &Window, levels: usize, dt: f64) -> Result<OrbitSearch> {
    let grid = region_grid(pot, win.upper());
    if grid.is_empty() {
        return Err(ProbeError::EmptyRegion { level: win.upper() });
    }
    let vmin = grid.iter().map(|p| pot.value(p)).fold(f64::INFINITY, f64::min);
    let lo = win.lower().max(vmin + 1e-3 * (win.upper() - vmin));
    let hi = win.upper();
    let t_max = 60.0;
    let mut best = OrbitSearch { period: None, energy: f64::NAN, start: None, log: Vec::new() };
    for i in 0..levels {
        let e = lo + (hi - lo) * i as f64 / (levels.max(2) - 1) as f64;
        let starts: Vec<Vec<f64>> = match pot.dimension() {
            1 => {
                // Left turning point of every connected component of {V < e}.
                let l = pot.half_width();
                let m = 4001;
                let xs: Vec<f64> = (0..m).map(|k| -l + 2.0 * l * k as f64 / (m - 1) as f64).collect();
                let mut out = Vec::new();
                for w in xs.windows(2) {
                    let (a, b) = (pot.value(&[w[0]]) - e, pot.value(&[w[1]]) - e);
                    if a >= 0.0 && b < 0.0 {
                        let x = bisect(|x| pot.value(&[x]) - e, w[0], w[1]);
                        out.push(vec![x]);
                    }
                }
                out
            }
            _ => {
                let mut out = Vec::new();
                for k in 0..24 {
                    let th = 2.0 * PI * k as f64 / 24.0;
                    let d = [th.cos(), th.sin()];
                    let f = |r: f64| pot.value(&[r * d[0], r * d[1]]) - e;
                    let rmax = pot.half_width();
                    if f(0.0) < 0.0 && f(rmax) > 0.0 {
                        let r = bisect(f, 0.0, rmax);
                        out.push(vec![r * d[0], r * d[1]]);
                    }
                }
                out
            }
        };
        for x0 in starts {
            if let Some(p) = brake_orbit_period(pot, &x0, dt, t_max) {
                best.log.push((e, p));
                if best.period.is_none_or(|q| p < q) {
                    best.period = Some(p);
                    best.energy = e;
                    best.start = Some(PhasePoint::new(x0.clone(), vec![0.0; x0.len()]));
                }
            }
        }
    }
    Ok(best)
}
