//! Polynomial potentials, their critical points, homogeneous germs and
//! spherical averages.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};
use crate::quad;

/// One monomial `coef * prod x_i^exps[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub exps: Vec<u32>,
    pub coef: f64,
}

/// A polynomial potential on the box `[-L, L]^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    n: usize,
    terms: Vec<Term>,
    half_width: f64,
    label: String,
}

fn powi(x: f64, e: u32) -> f64 {
    x.powi(e as i32)
}

impl Potential {
    pub fn polynomial(n: usize, terms: Vec<Term>, half_width: f64, label: &str) -> Result<Self> {
        if n == 0 || n > 2 {
            return Err(ProbeError::Unsupported(format!("dimension {n}")));
        }
        if !(half_width > 0.0) {
            return Err(ProbeError::Config("box half-width must be positive".into()));
        }
        if let Some(t) = terms.iter().find(|t| t.exps.len() != n) {
            return Err(ProbeError::Config(format!(
                "term {:?} has {} exponents, expected {n}",
                t.exps,
                t.exps.len()
            )));
        }
        Ok(Self { n, terms, half_width, label: label.to_string() })
    }

    fn one_d(terms: &[(u32, f64)], half_width: f64, label: &str) -> Self {
        let terms = terms.iter().map(|&(e, c)| Term { exps: vec![e], coef: c }).collect();
        Self { n: 1, terms, half_width, label: label.to_string() }
    }

    /// `c * x^2`.
    pub fn harmonic(c: f64) -> Self {
        Self::one_d(&[(2, c)], 3.0, "harmonic")
    }

    /// `x^4`.
    pub fn quartic() -> Self {
        Self::one_d(&[(4, 1.0)], 2.0, "quartic")
    }

    /// `(x^2 - 1)^2`.
    pub fn double_well() -> Self {
        Self::one_d(&[(4, 1.0), (2, -2.0), (0, 1.0)], 2.5, "double-well")
    }

    /// `1 - x^2 + x^4/4`: a barrier of height 1 at the origin, confined at large |x|.
    pub fn inverted_barrier() -> Self {
        Self::one_d(&[(0, 1.0), (2, -1.0), (4, 0.25)], 3.2, "inverted-barrier")
    }

    /// `c1 * x1^2 + c2 * x2^2`.
    pub fn anisotropic(c1: f64, c2: f64) -> Self {
        Self {
            n: 2,
            terms: vec![Term { exps: vec![2, 0], coef: c1 }, Term { exps: vec![0, 2], coef: c2 }],
            half_width: 3.0,
            label: "anisotropic".into(),
        }
    }

    /// Looks up a catalog entry. Parameters: `c` for harmonic, `c1,c2` for anisotropic.
    pub fn from_catalog(name: &str, params: &[f64]) -> Result<Self> {
        let p = |i: usize, d: f64| params.get(i).copied().unwrap_or(d);
        match name {
            "harmonic" => Ok(Self::harmonic(p(0, 1.0))),
            "quartic" => Ok(Self::quartic()),
            "double-well" => Ok(Self::double_well()),
            "inverted-barrier" => Ok(Self::inverted_barrier()),
            "anisotropic" => Ok(Self::anisotropic(p(0, 1.0), p(1, 2.0))),
            other => Err(ProbeError::Config(format!("unknown catalog potential '{other}'"))),
        }
    }

    /// Parses lines `e1 [e2] coef`; `#` starts a comment.
    pub fn parse_polynomial(text: &str, half_width: f64, label: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut n = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let err = |msg: &str| ProbeError::PolynomialFile { line: i + 1, msg: msg.into() };
            if fields.len() < 2 {
                return Err(err("expected exponents followed by a coefficient"));
            }
            let (exp_fields, coef_field) = fields.split_at(fields.len() - 1);
            let exps = exp_fields
                .iter()
                .map(|s| s.parse::<u32>().map_err(|_| err("bad exponent")))
                .collect::<Result<Vec<_>>>()?;
            let coef = coef_field[0].parse::<f64>().map_err(|_| err("bad coefficient"))?;
            match n {
                None => n = Some(exps.len()),
                Some(m) if m != exps.len() => return Err(err("inconsistent dimension")),
                _ => {}
            }
            terms.push(Term { exps, coef });
        }
        let n = n.ok_or(ProbeError::PolynomialFile { line: 0, msg: "no terms".into() })?;
        Self::polynomial(n, terms, half_width, label)
    }

    pub fn with_half_width(mut self, half_width: f64) -> Self {
        self.half_width = half_width;
        self
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef * t.exps.iter().zip(x).map(|(&e, &xi)| powi(xi, e)).product::<f64>())
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        for t in &self.terms {
            for (d, gd) in g.iter_mut().enumerate() {
                let e = t.exps[d];
                if e == 0 {
                    continue;
                }
                let mut p = t.coef * e as f64;
                for (j, (&ej, &xj)) in t.exps.iter().zip(x).enumerate() {
                    p *= if j == d { powi(xj, e - 1) } else { powi(xj, ej) };
                }
                *gd += p;
            }
        }
        g
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let mut h = DMatrix::zeros(n, n);
        for t in &self.terms {
            for a in 0..n {
                for b in a..n {
                    let mut e = t.exps.clone();
                    let mut c = t.coef;
                    c *= e[a] as f64;
                    if e[a] == 0 {
                        continue;
                    }
                    e[a] -= 1;
                    c *= e[b] as f64;
                    if e[b] == 0 {
                        continue;
                    }
                    e[b] -= 1;
                    let v = c * e.iter().zip(x).map(|(&ei, &xi)| powi(xi, ei)).product::<f64>();
                    h[(a, b)] += v;
                    if a != b {
                        h[(b, a)] += v;
                    }
                }
            }
        }
        h
    }

    /// Smallest value of V on the boundary of the box, sampled.
    pub fn boundary_min(&self) -> f64 {
        let l = self.half_width;
        match self.n {
            1 => self.value(&[-l]).min(self.value(&[l])),
            _ => {
                let m = 801;
                let mut best = f64::INFINITY;
                for i in 0..m {
                    let s = -l + 2.0 * l * i as f64 / (m - 1) as f64;
                    for p in [[s, -l], [s, l], [-l, s], [l, s]] {
                        best = best.min(self.value(&p));
                    }
                }
                best
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointClass {
    Minimum,
    Maximum,
    Saddle,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: Vec<f64>,
    pub value: f64,
    pub hessian_eigenvalues: Vec<f64>,
    pub degenerate: bool,
    pub class: PointClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalSearch {
    pub points: Vec<CriticalPoint>,
    /// Set when no seed converged.
    pub warning: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn spectral_norm(h: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(h.clone()).eigenvalues.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

fn newton(pot: &Potential, mut x: Vec<f64>) -> Option<Vec<f64>> {
    let l = pot.half_width;
    for _ in 0..500 {
        let g = pot.gradient(&x);
        let h = pot.hessian(&x);
        if norm(&g) == 0.0 {
            return Some(x);
        }
        let eig = SymmetricEigen::new(h);
        let scale = 1.0 + eig.eigenvalues.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let gv = DVector::from_column_slice(&g);
        let mut step = DVector::zeros(pot.n);
        for (i, &mu) in eig.eigenvalues.iter().enumerate() {
            if mu.abs() > 1e-300 * scale {
                let v = eig.eigenvectors.column(i);
                step += v * (v.dot(&gv) / mu);
            }
        }
        for (xi, si) in x.iter_mut().zip(step.iter()) {
            *xi -= si;
        }
        if x.iter().any(|xi| !xi.is_finite() || xi.abs() > l) {
            return None;
        }
        if step.norm() <= 1e-13 * l {
            break;
        }
    }
    let g = pot.gradient(&x);
    let tol = 1e-10 * (1.0 + spectral_norm(&pot.hessian(&x)));
    (norm(&g) <= tol).then_some(x)
}

fn classify(eigs: &[f64]) -> (bool, PointClass) {
    let scale = 1.0 + eigs.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let degenerate = eigs.iter().any(|m| m.abs() <= 1e-6 * scale);
    let class = if degenerate {
        PointClass::Unresolved
    } else if eigs.iter().all(|&m| m > 0.0) {
        PointClass::Minimum
    } else if eigs.iter().all(|&m| m < 0.0) {
        PointClass::Maximum
    } else {
        PointClass::Saddle
    };
    (degenerate, class)
}

/// Newton iteration on the gradient from a uniform seed grid; merges roots
/// closer than `1e-6 * L` and sorts by critical value.
pub fn find_critical_points(pot: &Potential, seeds_per_axis: usize) -> Result<CriticalSearch> {
    if seeds_per_axis < 3 {
        return Err(ProbeError::Config("seeds-per-axis must be at least 3".into()));
    }
    let l = pot.half_width;
    let axis: Vec<f64> = (0..seeds_per_axis)
        .map(|i| -l + 2.0 * l * (i as f64 + 0.5) / seeds_per_axis as f64)
        .collect();
    let seeds: Vec<Vec<f64>> = match pot.n {
        1 => axis.iter().map(|&a| vec![a]).collect(),
        _ => axis.iter().flat_map(|&a| axis.iter().map(move |&b| vec![a, b])).collect(),
    };
    let radius = 1e-6 * l;
    let mut roots: Vec<Vec<f64>> = Vec::new();
    for s in seeds {
        if let Some(r) = newton(pot, s) {
            let dup = roots.iter_mut().find(|q| {
                norm(&q.iter().zip(&r).map(|(a, b)| a - b).collect::<Vec<_>>()) <= radius
            });
            match dup {
                Some(q) => {
                    if norm(&pot.gradient(&r)) < norm(&pot.gradient(q)) {
                        *q = r;
                    }
                }
                None => roots.push(r),
            }
        }
    }
    let mut points: Vec<CriticalPoint> = roots
        .into_iter()
        .map(|x| {
            let eig = SymmetricEigen::new(pot.hessian(&x));
            let mut mu: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            mu.sort_by(f64::total_cmp);
            let (degenerate, class) = classify(&mu);
            CriticalPoint { value: pot.value(&x), location: x, hessian_eigenvalues: mu, degenerate, class }
        })
        .collect();
    points.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then_with(|| a.location.partial_cmp(&b.location).unwrap_or(std::cmp::Ordering::Equal))
    });
    let warning = points.is_empty();
    Ok(CriticalSearch { points, warning })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GermSign {
    PositiveDefinite,
    NegativeDefinite,
}

/// Leading homogeneous part of `V - E_c` at a critical point.
#[derive(Debug, Clone, PartialEq)]
pub struct Germ {
    pot: Potential,
    base: Vec<f64>,
    critical_value: f64,
    degree: u32,
    sign: GermSign,
    slope: f64,
}

impl Germ {
    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn critical_value(&self) -> f64 {
        self.critical_value
    }

    /// The even degree `2k`.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn k(&self) -> u32 {
        self.degree / 2
    }

    pub fn sign(&self) -> GermSign {
        self.sign
    }

    /// Averaged log-log slope measured during extraction.
    pub fn measured_slope(&self) -> f64 {
        self.slope
    }

    /// `V_{2k}(x) = lim_{s->0} s^{-2k} (V(x0 + s x) - E_c)` by Neville extrapolation.
    pub fn value(&self, x: &[f64]) -> f64 {
        germ_limit(&self.pot, &self.base, self.critical_value, self.degree, x)
    }
}

fn germ_limit(pot: &Potential, base: &[f64], ec: f64, degree: u32, x: &[f64]) -> f64 {
    let r = norm(x);
    if r == 0.0 {
        return 0.0;
    }
    let h = 0.1 / r;
    let pts: usize = 5;
    let s: Vec<f64> = (0..pts).map(|i| h * 0.5f64.powi(i as i32)).collect();
    let mut f: Vec<f64> = s
        .iter()
        .map(|&si| {
            let p: Vec<f64> = base.iter().zip(x).map(|(b, xi)| b + si * xi).collect();
            (pot.value(&p) - ec) / si.powi(degree as i32)
        })
        .collect();
    for m in 1..pts {
        for i in 0..pts - m {
            f[i] = (s[i + m] * f[i] - s[i] * f[i + 1]) / (s[i + m] - s[i]);
        }
    }
    f[0]
}

fn sphere_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        _ => (0..count)
            .map(|i| {
                let th = 2.0 * PI * (i as f64 + 0.37) / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
    }
}

/// Estimates the degree by the log-log slope over `r in [1e-3, 1e-1]` and
/// checks sign-definiteness over the sphere.
pub fn extract_germ(pot: &Potential, cp: &CriticalPoint) -> Result<Germ> {
    if cp.class == PointClass::Saddle {
        return Err(ProbeError::NotExtremumGerm);
    }
    let ec = cp.value;
    let dirs = sphere_directions(pot.n, 16);
    let rs: Vec<f64> = (0..21).map(|i| 10f64.powf(-3.0 + 2.0 * i as f64 / 20.0)).collect();
    let mut slopes = Vec::new();
    for eta in &dirs {
        let pts: Vec<(f64, f64)> = rs
            .iter()
            .map(|&r| {
                let p: Vec<f64> = cp.location.iter().zip(eta).map(|(b, e)| b + r * e).collect();
                (r.ln(), (pot.value(&p) - ec).abs().ln())
            })
            .filter(|(_, y)| y.is_finite())
            .collect();
        if pts.len() < 2 {
            return Err(ProbeError::GermVanishes);
        }
        slopes.push(crate::stats::linear_fit(&pts).0);
    }
    let slope = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let even = (slope / 2.0).round() * 2.0;
    if even < 2.0 || (slope - even).abs() > 0.1 {
        return Err(ProbeError::NonHomogeneousGerm { slope });
    }
    let degree = even as u32;
    let probe = sphere_directions(pot.n, 64);
    let vals: Vec<f64> =
        probe.iter().map(|eta| germ_limit(pot, &cp.location, ec, degree, eta)).collect();
    let pos = vals.iter().any(|&v| v > 0.0);
    let neg = vals.iter().any(|&v| v < 0.0);
    let sign = match (pos, neg) {
        (true, false) => GermSign::PositiveDefinite,
        (false, true) => GermSign::NegativeDefinite,
        (false, false) => return Err(ProbeError::GermVanishes),
        _ => return Err(ProbeError::NotExtremumGerm),
    };
    Ok(Germ { pot: pot.clone(), base: cp.location.clone(), critical_value: ec, degree, sign, slope })
}

/// Resolves degenerate points by the sign of their germ.
pub fn resolve_class(pot: &Potential, cp: &CriticalPoint) -> PointClass {
    if cp.class != PointClass::Unresolved {
        return cp.class;
    }
    match extract_germ(pot, cp) {
        Ok(g) if g.sign == GermSign::PositiveDefinite => PointClass::Minimum,
        Ok(_) => PointClass::Maximum,
        Err(_) => PointClass::Unresolved,
    }
}

/// `A = \int_{S^{n-1}} |V_{2k}|^{-n/2k}`.
pub fn spherical_average(g: &Germ, n: usize) -> Result<f64> {
    let p = -(n as f64) / g.degree as f64;
    let term = |eta: &[f64]| -> Result<f64> {
        let v = g.value(eta).abs();
        if v < 1e-14 {
            Err(ProbeError::GermVanishes)
        } else {
            Ok(v.powf(p))
        }
    };
    match n {
        1 => Ok(term(&[1.0])? + term(&[-1.0])?),
        2 => {
            let trap = |m: usize| -> Result<f64> {
                let mut s = 0.0;
                for i in 0..m {
                    let th = 2.0 * PI * i as f64 / m as f64;
                    s += term(&[th.cos(), th.sin()])?;
                }
                Ok(s * 2.0 * PI / m as f64)
            };
            let mut m = 4096;
            let mut prev = trap(m)?;
            loop {
                m *= 2;
                let next = trap(m)?;
                if (next - prev).abs() <= 1e-8 * next.abs() || m >= 1 << 18 {
                    return Ok(next);
                }
                prev = next;
            }
        }
        _ => Err(ProbeError::Unsupported(format!("dimension {n}"))),
    }
}

/// Relative discrepancy between `\int e^{-|V_{2k}|}` and `Gamma(n/2k) A / 2k`.
pub fn gamma_identity_check(g: &Germ, n: usize) -> Result<f64> {
    let two_k = g.degree as f64;
    let cut = 40.0;
    let radial = |eta: &[f64], weight_power: i32| -> Result<f64> {
        let v1 = g.value(eta).abs();
        if v1 < 1e-14 {
            return Err(ProbeError::GermVanishes);
        }
        let rmax = (cut / v1).powf(1.0 / two_k) * 1.05;
        quad::integrate(
            |r| {
                let x: Vec<f64> = eta.iter().map(|e| r * e).collect();
                (-g.value(&x).abs()).exp() * r.powi(weight_power)
            },
            0.0,
            rmax,
            1e-13,
            1e-11,
        )
    };
    let lhs = match n {
        1 => radial(&[1.0], 0)? + radial(&[-1.0], 0)?,
        2 => {
            let m = 256;
            let mut s = 0.0;
            for i in 0..m {
                let th = 2.0 * PI * i as f64 / m as f64;
                s += radial(&[th.cos(), th.sin()], 1)?;
            }
            s * 2.0 * PI / m as f64
        }
        _ => return Err(ProbeError::Unsupported(format!("dimension {n}"))),
    };
    let rhs = libm::tgamma(n as f64 / two_k) * spherical_average(g, n)? / two_k;
    Ok((lhs - rhs).abs() / rhs)
}
