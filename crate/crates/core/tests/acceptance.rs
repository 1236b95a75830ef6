//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Criteria listed in
//! `KNOWN_FAILURES` are evaluated with their full tolerances; their failure
//! is reported but does not fail the run, while an unexpected pass does.

use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64;
use probe_core::classical::{period_bound, shortest_period};
use probe_core::config::{ExperimentConfig, Mode, PotentialSource};
use probe_core::detect::predict_min_coefficient;
use probe_core::pipeline::{resolve, run_experiment, solve_ladder, Outcome};
use probe_core::potential::{extract_germ, find_critical_points, gamma_identity_check, resolve_class, PointClass, Potential};
use probe_core::quantum::{discretize_and_solve, oscillator_oracle, Resolution, Window};
use probe_core::scaling::{classify_regular, fit_order, log_companion_fit, Ladder};
use probe_core::testfn::{build_test_function, GridSpec, Shape};
use probe_core::trace::{gamma, weyl_check, GammaSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that fail for a documented reason; see README.
const KNOWN_FAILURES: &[u32] = &[4];

struct Verdict {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn catalog(name: &str, e1: f64, e2: f64, mode: Mode) -> ExperimentConfig {
    ExperimentConfig {
        mode,
        potential: PotentialSource::Catalog { name: name.into(), params: vec![] },
        e1,
        e2,
        ..ExperimentConfig::default()
    }
}

fn run(cfg: &ExperimentConfig) -> Outcome {
    run_experiment(cfg, None).unwrap_or_else(|e| panic!("pipeline failed: {e}"))
}

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("probe-acceptance-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn harmonic_oracle() -> Verdict {
    let pot = Potential::harmonic(1.0);
    let win = Window::with_default_margin(-0.5, 1.5).unwrap();
    let cfg = catalog("harmonic", -0.5, 1.5, Mode::Sweep);
    let (r, _) = resolve(&cfg).unwrap();
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    let mut levels = usize::MAX;
    for h in Ladder::default().hbars() {
        let l = probe_core::quantum::auto_box(&pot, r.window.upper(), h);
        let t = Instant::now();
        let es = discretize_and_solve(&pot.clone().with_half_width(l), h, &win, &Resolution::default()).unwrap();
        slowest = slowest.max(t.elapsed().as_secs_f64());
        let first = ((win.lower() / h - 1.0) / 2.0).ceil().max(0.0) as usize;
        let take = es.len().min(50);
        levels = levels.min(take);
        for (i, l) in es.eigenvalues.iter().take(take).enumerate() {
            let exact = h * (2 * (first + i) + 1) as f64;
            worst = worst.max((l - exact).abs() / exact);
        }
    }
    Verdict {
        id: 1,
        title: "harmonic oracle",
        pass: worst <= 1e-5 && slowest <= 5.0,
        detail: format!("max rel err {worst:.2e} (<= 1e-5) over >= {levels} levels per hbar, slowest solve {slowest:.2}s (<= 5s)"),
    }
}

fn minimum_exponents(x2: &Outcome, x4: &Outcome, t2: f64, t4: f64) -> Verdict {
    let f2 = &x2.detect.as_ref().unwrap().fits;
    let f4 = &x4.detect.as_ref().unwrap().fits;
    let near = |fits: &[probe_core::scaling::OrderFit]| fits.iter().find(|f| f.energy.abs() < 0.0075).cloned();
    let (Some(a), Some(b)) = (near(f2), near(f4)) else {
        return Verdict { id: 2, title: "minimum exponents", pass: false, detail: "no fit at E=0".into() };
    };
    let pass = (a.alpha - 0.0).abs() <= 0.05
        && a.log_flag == 0
        && (b.alpha + 0.25).abs() <= 0.03
        && b.log_flag == 0
        && t2 <= 120.0
        && t4 <= 120.0;
    Verdict {
        id: 2,
        title: "minimum exponents",
        pass,
        detail: format!(
            "x^2: alpha {:.4} (0 +- 0.05), m {}; x^4: alpha {:.4} (-0.25 +- 0.03), m {}; runs {t2:.1}s / {t4:.1}s (<= 120s)",
            a.alpha, a.log_flag, b.alpha, b.log_flag
        ),
    }
}

fn minimum_coefficient(x2: &Outcome) -> Verdict {
    let rep = x2.detect.as_ref().unwrap().reports.iter().find(|r| r.energy.abs() < 0.0075).unwrap().clone();
    let r = &x2.resolved;
    let odd = build_test_function(r.m_coef, r.config.j0, Shape::Odd, GridSpec::default()).unwrap();
    let predicted = predict_min_coefficient(1, 1, &odd, 2.0).unwrap();
    let half = odd.half_line_integral(|_| 1.0, 1.0).unwrap() * 0.5;
    let coef_err = (rep.coefficient_odd - predicted).norm() / predicted.norm();
    let identity_err = (predicted - half).norm() / half.norm();

    // closed-form sum at every ladder hbar with at least 50 levels below E2
    let pot = Potential::harmonic(1.0);
    let (res, _) = resolve(&catalog("harmonic", -0.5, 1.5, Mode::Sweep)).unwrap();
    let sets = solve_ladder(&pot, &res).unwrap();
    let closed: Complex64 = (0..100_000).map(|j| odd.eval((2 * j + 1) as f64)).sum();
    let mut sum_err: f64 = 0.0;
    let mut used = Vec::new();
    for es in sets.iter().filter(|es| res.config.e2 / es.hbar >= 100.0) {
        let g = gamma(es, &odd, 0.0).unwrap().value;
        sum_err = sum_err.max((g - closed).norm() / closed.norm());
        used.push(format!("{:.4}", es.hbar));
    }
    Verdict {
        id: 3,
        title: "minimum coefficient",
        pass: coef_err <= 0.02 && sum_err <= 1e-4 && !used.is_empty(),
        detail: format!(
            "C vs predicted (A=2): rel {coef_err:.4} (<= 0.02); predicted vs half-line/2: {identity_err:.1e}; \
             gamma(0) vs sum phi(2j+1): max rel {sum_err:.1e} (<= 1e-4) at hbar {}",
            used.join(" ")
        ),
    }
}

fn maximum_log(dw: &Outcome) -> Verdict {
    let d = dw.detect.as_ref().unwrap();
    let fit = d.fits.iter().find(|f| (f.energy - 1.0).abs() < 0.0075);
    let r = &dw.resolved;
    let pot = Potential::double_well();
    let sets = solve_ladder(&pot, r).unwrap();
    let nonflat = build_test_function(r.m, 0, Shape::StandardEven, GridSpec::default()).unwrap();
    let col: Vec<GammaSample> = sets.iter().map(|es| gamma(es, &nonflat, 1.0).unwrap()).collect();
    let nf = fit_order(&col).unwrap();
    let (slope, intercept, rms) = log_companion_fit(&col);
    let check = |f: &probe_core::scaling::OrderFit| {
        f.log_flag == 1 && f.residual_log <= 0.9 * f.residual_power && f.ladder.count >= 8
    };
    let pass = fit.is_some_and(check) || check(&nf);
    let flat = fit.map_or("no fit at E=1".into(), |f| {
        format!("flat: m {} r_pow {:.3} r_log {:.3}", f.log_flag, f.residual_power, f.residual_log)
    });
    Verdict {
        id: 4,
        title: "maximum log signature",
        pass,
        detail: format!(
            "{flat}; non-flat: m {} r_pow {:.4} r_log {:.4}; gamma = {slope:.4} log(1/hbar) + {intercept:.4} \
             (rel rms {rms:.1e}), log coefficient predicted {:.4}",
            nf.log_flag,
            nf.residual_power,
            nf.residual_log,
            2f64.sqrt() / (4.0 * std::f64::consts::PI) * nonflat.phihat(0.0)
        ),
    }
}

fn regular_suppression() -> Verdict {
    let pot = Potential::harmonic(1.0);
    let cfg = catalog("harmonic", -0.5, 1.5, Mode::Sweep);
    let (r, _) = resolve(&cfg).unwrap();
    let sets = solve_ladder(&pot, &r).unwrap();
    // auto support: 0.9 min(T, linearized periods); both equal pi here
    let m_auto = 0.9 * r.period_bound.min(r.shortest_period.unwrap_or(f64::INFINITY));
    let slope = |m: f64| {
        let tf = build_test_function(m, 3, Shape::StandardEven, GridSpec::default()).unwrap();
        let col: Vec<GammaSample> = sets.iter().map(|es| gamma(es, &tf, 1.0).unwrap()).collect();
        let max = col.iter().map(|g| g.value.norm()).fold(0.0, f64::max);
        classify_regular(&col, max).unwrap().slope
    };
    let (s_auto, s_one) = (slope(m_auto), slope(1.0));
    Verdict {
        id: 5,
        title: "regular-energy suppression",
        pass: m_auto < std::f64::consts::PI && s_auto >= 4.0,
        detail: format!("x^2, E=1, j0=3, M={m_auto:.4}: slope {s_auto:.2} (>= 4); at M=1: slope {s_one:.2}"),
    }
}

fn period_tightness() -> Verdict {
    let win = Window::with_default_margin(-0.5, 1.5).unwrap();
    let h = Potential::harmonic(1.0);
    let pb = period_bound(&h, &win, 20_000, 1).unwrap();
    let so = shortest_period(&h, &win, 12, 1e-3).unwrap();
    let tp = so.period.unwrap_or(f64::NAN);
    let mut ok = (pb.a - 2.0).abs() < 1e-12 && (pb.t - std::f64::consts::PI).abs() < 1e-12 && (tp - std::f64::consts::PI).abs() <= 1e-4;
    let mut lines = vec![format!("x^2: a {:.3}, T {:.6}, shortest {tp:.6}", pb.a, pb.t)];
    for name in ["quartic", "double-well", "inverted-barrier", "anisotropic"] {
        let pot = Potential::from_catalog(name, &[]).unwrap();
        let pb = period_bound(&pot, &win, 20_000, 1).unwrap();
        let so = shortest_period(&pot, &win, 12, 1e-3).unwrap();
        let all = so.log.iter().all(|(_, t)| *t >= pb.t);
        ok &= all && so.period.is_some();
        lines.push(format!("{name}: T {:.3}, shortest {:.3}", pb.t, so.period.unwrap_or(f64::NAN)));
    }
    Verdict { id: 6, title: "period bound tightness", pass: ok, detail: lines.join("; ") }
}

fn weyl_control() -> Verdict {
    let out = run(&ExperimentConfig { weyl_energy: Some(1.0), ..catalog("harmonic", 0.5, 1.5, Mode::Weyl) });
    let w1 = out.weyl.unwrap();
    let pot2 = Potential::anisotropic(1.0, 1.0);
    let win = Window::with_default_margin(0.5, 1.5).unwrap();
    let sets: Vec<_> = Ladder::default()
        .hbars()
        .into_iter()
        .filter(|h| *h <= 0.02)
        .map(|h| oscillator_oracle(1.0, h, &win, 2).unwrap())
        .collect();
    let tf = build_test_function(1.0, 0, Shape::StandardEven, GridSpec::default()).unwrap();
    let w2 = weyl_check(&pot2, &tf, 1.0, &sets, 10_000_000, 1).unwrap();
    let worst2 = w2.rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let small1 = w1.rows.iter().filter(|r| r.0 <= 0.01).map(|r| r.2).fold(0.0, f64::max);
    Verdict {
        id: 7,
        title: "Weyl control",
        pass: small1 <= 0.02 && worst2 <= 0.05,
        detail: format!("n=1 x^2 E=1: max dev {small1:.4} for hbar <= 0.01 (<= 0.02); n=2 oracle: max dev {worst2:.4} for hbar <= 0.02 (<= 0.05)"),
    }
}

fn inverse_pipeline(x2: &Outcome, x4: &Outcome) -> Verdict {
    let dir = scratch("calibration");
    let table = dir.join("calibration.json");
    let _ = std::fs::remove_file(&table);
    let mut cal = catalog("inverted-barrier", -0.5, 1.5, Mode::Calibrate);
    cal.calibration_table = Some(table.clone());
    cal.calibration_energy = Some(1.0);
    let calibrated = run(&cal);
    let constant = calibrated.calibration.as_ref().and_then(|t| t.get(1, 1));
    let mut dw = catalog("double-well", -0.5, 1.5, Mode::Validate);
    dw.calibration_table = Some(table);
    let dw = run(&dw);

    let mut pass = constant.is_some();
    let mut lines = vec![format!("C_11 from inverted barrier {:.4}", constant.unwrap_or(f64::NAN))];
    for (name, out) in [("x^2", x2), ("x^4", x4), ("dw", &dw)] {
        for row in out.validation.as_ref().unwrap() {
            pass &= row.pass();
            let rep = out
                .detect
                .as_ref()
                .unwrap()
                .reports
                .iter()
                .find(|r| Some(r.energy) == row.found_energy);
            lines.push(format!(
                "{name} E_c={}: found {:?}, k {}, class {:?}, A err {}, multi-point {} -> {}",
                row.truth.energy,
                row.found_energy.map(|e| (e * 1e5).round() / 1e5),
                rep.map_or("-".into(), |r| r.k.to_string()),
                rep.map(|r| r.class),
                row.a_rel_err.map_or("-".into(), |e| format!("{:.3}", e)),
                rep.is_some_and(|r| r.multi_point),
                if row.pass() { "ok" } else { "FAIL" }
            ));
        }
        let extra = out.detect.as_ref().unwrap().reports.iter().filter(|r| r.ground_truth.is_none()).count();
        if extra > 0 {
            pass = false;
            lines.push(format!("{name}: {extra} spurious detections"));
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    Verdict { id: 8, title: "inverse pipeline", pass, detail: lines.join("; ") }
}

fn identity_suite() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut germs = 0;
    for name in ["harmonic", "quartic", "double-well", "inverted-barrier", "anisotropic"] {
        let pot = Potential::from_catalog(name, &[]).unwrap();
        let seeds = if pot.dimension() == 1 { 41 } else { 15 };
        for cp in find_critical_points(&pot, seeds).unwrap().points {
            if matches!(resolve_class(&pot, &cp), PointClass::Minimum | PointClass::Maximum) {
                let g = extract_germ(&pot, &cp).unwrap();
                worst = worst.max(gamma_identity_check(&g, pot.dimension()).unwrap());
                germs += 1;
            }
        }
    }
    let ladder = Ladder::new(0.1, 0.7, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut a_ok, mut m_ok) = (0, 0);
    for t in 0..200 {
        let alpha: f64 = rng.random_range(-1.0..1.0);
        let c: f64 = rng.random_range(0.1..10.0);
        let log = t % 2 == 0;
        let s: Vec<GammaSample> = ladder
            .hbars()
            .into_iter()
            .map(|h| {
                let noise = 1.0 + rng.random_range(-0.01..0.01);
                let v = c * h.powf(alpha) * noise * if log { (1.0 / h).ln() } else { 1.0 };
                GammaSample { energy: 0.0, hbar: h, value: Complex64::new(v, 0.0), count: 1, err_bound: 0.0 }
            })
            .collect();
        let f = fit_order(&s).unwrap();
        a_ok += usize::from((f.alpha - alpha).abs() <= 0.02);
        m_ok += usize::from(f.log_flag == u8::from(log));
    }
    Verdict {
        id: 9,
        title: "identity suite",
        pass: worst <= 1e-6 && germs >= 8 && a_ok >= 190 && m_ok >= 190,
        detail: format!(
            "gamma identity max discrepancy {worst:.1e} over {germs} germs (<= 1e-6); synthetic: alpha ok {a_ok}/200, m ok {m_ok}/200 (>= 190)"
        ),
    }
}

fn determinism() -> Verdict {
    let cfg = catalog("double-well", -0.5, 1.5, Mode::Validate);
    let a = run_experiment(&cfg, Some(1)).unwrap();
    let b = run_experiment(&cfg, Some(4)).unwrap();
    let same = a.artifacts == b.artifacts;
    let n = a.artifacts.len();
    Verdict {
        id: 10,
        title: "determinism",
        pass: same && n > 0,
        detail: format!("{n} artifacts byte-identical across runs with 1 and 4 workers: {same}"),
    }
}

fn main() {
    let t = Instant::now();
    let x2 = run(&catalog("harmonic", -0.5, 1.5, Mode::Validate));
    let t2 = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let x4 = run(&catalog("quartic", -0.5, 0.5, Mode::Validate));
    let t4 = t.elapsed().as_secs_f64();
    let dw = run(&catalog("double-well", -0.5, 1.5, Mode::Detect));

    let verdicts = vec![
        harmonic_oracle(),
        minimum_exponents(&x2, &x4, t2, t4),
        minimum_coefficient(&x2),
        maximum_log(&dw),
        regular_suppression(),
        period_tightness(),
        weyl_control(),
        inverse_pipeline(&x2, &x4),
        identity_suite(),
        determinism(),
    ];

    let mut unexpected = 0;
    for v in &verdicts {
        let known = KNOWN_FAILURES.contains(&v.id);
        let tag = match (v.pass, known) {
            (true, false) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
            (true, true) => "XPASS",
        };
        if v.pass == known {
            unexpected += 1;
        }
        println!("criterion {:>2} [{}] {}: {}", v.id, tag, v.title, v.detail);
    }
    let passed = verdicts.iter().filter(|v| v.pass).count();
    println!("acceptance: {passed}/{} criteria pass", verdicts.len());
    if unexpected > 0 {
        eprintln!("acceptance: {unexpected} unexpected outcome(s)");
        std::process::exit(1);
    }
}
