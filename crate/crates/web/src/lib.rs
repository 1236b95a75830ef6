//! Browser bindings: small single-threaded versions of the sweep, order fit
//! and period-bound computations. Every call returns a JSON string.

use probe_core::classical::{period_bound, shortest_period};
use probe_core::potential::Potential;
use probe_core::quantum::{auto_box, discretize_and_solve, EigenSet, Resolution, Window};
use probe_core::scaling::{fit_order, Ladder};
use probe_core::testfn::{build_test_function, GridSpec, Shape};
use probe_core::trace::gamma;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// A catalog name, or polynomial lines `exponent coefficient` for a 1D potential.
fn potential(spec: &str) -> Result<Potential, String> {
    let name = spec.trim();
    match Potential::from_catalog(name, &[]) {
        Ok(p) => Ok(p),
        Err(_) if name.lines().count() > 1 || name.contains(' ') => {
            Potential::parse_polynomial(name, 3.0, "custom").map_err(|e| e.to_string())
        }
        Err(e) => Err(e.to_string()),
    }
}

fn solve(pot: &Potential, win: &Window, hbar: f64) -> Result<EigenSet, String> {
    let boxed = pot.clone().with_half_width(auto_box(pot, win.upper(), hbar));
    discretize_and_solve(&boxed, hbar, win, &Resolution::default()).map_err(|e| e.to_string())
}

pub fn gamma_curve_json(spec: &str, hbar: f64, e1: f64, e2: f64, m: f64, j0: u32, points: usize) -> Result<String, String> {
    let pot = potential(spec)?;
    let win = Window::with_default_margin(e1, e2).map_err(|e| e.to_string())?;
    let es = solve(&pot, &win, hbar)?;
    let tf = build_test_function(m, j0, Shape::StandardEven, GridSpec::default()).map_err(|e| e.to_string())?;
    let points = points.max(2);
    let mut energies = Vec::with_capacity(points);
    let mut values = Vec::with_capacity(points);
    for i in 0..points {
        let e = e1 + (e2 - e1) * i as f64 / (points - 1) as f64;
        energies.push(e);
        values.push(gamma(&es, &tf, e).map_err(|e| e.to_string())?.value.norm());
    }
    let inside: Vec<f64> = es.eigenvalues.iter().copied().filter(|l| (e1..=e2).contains(l)).collect();
    Ok(json!({ "hbar": hbar, "eigenvalues": inside, "energies": energies, "abs_gamma": values }).to_string())
}

pub fn order_fit_json(spec: &str, energy: f64, hbar_max: f64, ratio: f64, count: usize) -> Result<String, String> {
    let pot = potential(spec)?;
    let ladder = Ladder::new(hbar_max, ratio, count).map_err(|e| e.to_string())?;
    let win = Window::with_default_margin(energy - 1.0, energy + 1.0).map_err(|e| e.to_string())?;
    let tf = build_test_function(1.0, 3, Shape::Shifted, GridSpec::default()).map_err(|e| e.to_string())?;
    let mut samples = Vec::new();
    for h in ladder.hbars() {
        let es = solve(&pot, &win, h)?;
        samples.push(gamma(&es, &tf, energy).map_err(|e| e.to_string())?);
    }
    let fit = fit_order(&samples).map_err(|e| e.to_string())?;
    let n = pot.dimension() as f64;
    let k = n / (2.0 * fit.alpha + n);
    let points: Vec<_> = samples.iter().map(|s| json!([s.hbar, s.value.norm()])).collect();
    Ok(json!({
        "alpha": fit.alpha,
        "log_flag": fit.log_flag,
        "ambiguous": fit.ambiguous,
        "residual": fit.residual,
        "k_estimate": k,
        "samples": points,
    })
    .to_string())
}

pub fn period_bound_json(spec: &str, e1: f64, e2: f64) -> Result<String, String> {
    let pot = potential(spec)?;
    let win = Window::with_default_margin(e1, e2).map_err(|e| e.to_string())?;
    let pb = period_bound(&pot, &win, 20_000, 1).map_err(|e| e.to_string())?;
    let orbits = shortest_period(&pot, &win, 12, 1e-3).map_err(|e| e.to_string())?;
    Ok(json!({ "a": pb.a, "t": pb.t, "shortest": orbits.period, "orbit_log": orbits.log }).to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// |gamma(E)| on `points` energies of [e1, e2] with an even flat test function.
#[wasm_bindgen]
pub fn gamma_curve(spec: &str, hbar: f64, e1: f64, e2: f64, m: f64, j0: u32, points: usize) -> Result<String, JsValue> {
    js(gamma_curve_json(spec, hbar, e1, e2, m, j0, points))
}

#[wasm_bindgen]
pub fn order_fit(spec: &str, energy: f64, hbar_max: f64, ratio: f64, count: usize) -> Result<String, JsValue> {
    js(order_fit_json(spec, energy, hbar_max, ratio, count))
}

#[wasm_bindgen]
pub fn period_info(spec: &str, e1: f64, e2: f64) -> Result<String, JsValue> {
    js(period_bound_json(spec, e1, e2))
}
