//! SVG and gnuplot renderings of sweep and fit artifacts.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::pipeline::Artifact;

pub struct PlotOutput {
    pub artifacts: Vec<Artifact>,
    pub warnings: Vec<String>,
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .skip(1)
        .map(|l| l.split(',').map(|s| s.trim().to_string()).collect())
        .collect()
}

fn f(s: &str) -> Option<f64> {
    s.parse().ok().filter(|v: &f64| v.is_finite())
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    line: bool,
    color: &'static str,
}

struct Frame<'a> {
    title: &'a str,
    xlabel: &'a str,
    ylabel: &'a str,
    log: bool,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;

fn svg(hash: &str, frame: &Frame<'_>, series: &[Series], markers: &[f64]) -> String {
    let tx = |v: f64| if frame.log { v.log10() } else { v };
    let all: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|&(x, y)| (tx(x), tx(y))))
        .filter(|p| p.0.is_finite() && p.1.is_finite())
        .collect();
    let (mut x0, mut x1, y0, mut y1) = all.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), p| (a.min(p.0), b.max(p.0), c.min(p.1), d.max(p.1)),
    );
    for &m in markers {
        x0 = x0.min(m);
        x1 = x1.max(m);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(s, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">");
    let _ = writeln!(s, "<!-- config_hash={hash} -->");
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(s, "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>", W / 2.0, frame.title);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>", W / 2.0, H - 16.0, frame.xlabel);
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>",
        H / 2.0,
        H / 2.0,
        frame.ylabel
    );
    for i in 0..=4 {
        let xv = x0 + (x1 - x0) * i as f64 / 4.0;
        let yv = y0 + (y1 - y0) * i as f64 / 4.0;
        let (xl, yl) = if frame.log {
            (format!("1e{xv:.2}"), format!("1e{yv:.2}"))
        } else {
            (format!("{xv:.3}"), format!("{yv:.3}"))
        };
        let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{xl}</text>", px(xv), H - PAD + 16.0);
        let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{yl}</text>", PAD - 4.0, py(yv) + 4.0);
    }
    for &m in markers {
        let _ = writeln!(
            s,
            "<line x1=\"{0:.2}\" x2=\"{0:.2}\" y1=\"{PAD}\" y2=\"{1}\" stroke=\"red\" stroke-dasharray=\"4 3\"/>",
            px(m),
            H - PAD
        );
    }
    for (i, se) in series.iter().enumerate() {
        let pts: Vec<(f64, f64)> = se
            .points
            .iter()
            .map(|&(x, y)| (tx(x), tx(y)))
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|(x, y)| (px(x), py(y)))
            .collect();
        if se.line {
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"{}\" points=\"{}\"/>", se.color, path.join(" "));
        } else {
            for (x, y) in &pts {
                let _ = writeln!(s, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"{}\"/>", se.color);
            }
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"{}\">{}</text>",
            W - PAD - 150.0,
            PAD + 16.0 + 14.0 * i as f64,
            se.color,
            se.label
        );
    }
    s.push_str("</svg>\n");
    s
}

const GNUPLOT: &str = "set datafile separator ','
set terminal svg size 640,420
set key autotitle columnhead
set output 'alpha_vs_E_gnuplot.svg'
set xlabel 'E'
set ylabel 'log-log slope'
plot 'scan.csv' using 1:2 with lines title 'slope'
set output 'loglog_gnuplot.svg'
set logscale xy
set xlabel 'hbar'
set ylabel '|gamma|'
plot 'fit_samples.csv' using 2:(sqrt($3**2+$4**2)) with points title '|gamma|'
";

/// Renders (a) `|gamma|` against `hbar` per fitted energy with the fitted
/// model and (b) the log-log slope against `E` with fitted energies marked.
pub fn render(hash: &str, scan: Option<&str>, fit_samples: Option<&str>, fits: Option<&str>) -> PlotOutput {
    let mut artifacts = Vec::new();
    let mut warnings = Vec::new();
    let fit_rows = fits.map(rows).unwrap_or_default();
    let markers: Vec<f64> = fit_rows.iter().filter_map(|r| r.first().and_then(|s| f(s))).collect();

    match scan.map(rows) {
        Some(r) if !r.is_empty() => {
            let pts: Vec<(f64, f64)> = r
                .iter()
                .filter_map(|row| Some((f(&row[0])?, f(&row[1])?.clamp(-2.0, 8.0))))
                .collect();
            let doc = svg(
                hash,
                &Frame { title: "log-log slope of |gamma| against E", xlabel: "E", ylabel: "slope (clipped to [-2, 8])", log: false },
                &[Series { label: "slope".into(), points: pts, line: true, color: "black" }],
                &markers,
            );
            artifacts.push(Artifact { name: "alpha_vs_E.svg".into(), bytes: doc.into_bytes() });
        }
        _ => warnings.push("no sweep scan: slope plot skipped".into()),
    }

    let samples = fit_samples.map(rows).unwrap_or_default();
    if samples.is_empty() || fit_rows.is_empty() {
        warnings.push("no fits: log-log plots skipped".into());
    }
    for (i, fr) in fit_rows.iter().enumerate() {
        let (Some(e), Some(alpha), Some(re), Some(im)) = (f(&fr[0]), f(&fr[1]), f(&fr[3]), f(&fr[4])) else {
            continue;
        };
        let m = fr[2] == "1";
        let pts: Vec<(f64, f64)> = samples
            .iter()
            .filter(|r| f(&r[0]) == Some(e))
            .filter_map(|r| Some((f(&r[1])?, f(&r[2])?.hypot(f(&r[3])?))))
            .collect();
        let c = re.hypot(im);
        let model: Vec<(f64, f64)> = pts
            .iter()
            .map(|&(h, _)| (h, c * h.powf(alpha) * if m { (1.0 / h).ln() } else { 1.0 }))
            .collect();
        let title = format!("E = {e:.5}: alpha = {alpha:.4}, log flag {}", u8::from(m));
        let doc = svg(
            hash,
            &Frame { title: &title, xlabel: "hbar", ylabel: "|gamma|", log: true },
            &[
                Series { label: "|gamma|".into(), points: pts, line: false, color: "black" },
                Series { label: format!("fit, slope {alpha:.3}"), points: model, line: true, color: "blue" },
            ],
            &[],
        );
        artifacts.push(Artifact { name: format!("loglog_{i:02}.svg"), bytes: doc.into_bytes() });
    }
    if !artifacts.is_empty() {
        artifacts.push(Artifact { name: "plots.gp".into(), bytes: format!("# config_hash={hash}\n{GNUPLOT}").into_bytes() });
    }
    PlotOutput { artifacts, warnings }
}

fn hash_of(text: &str) -> Option<String> {
    text.lines().next()?.strip_prefix("# config_hash=").map(str::to_string)
}

/// Reads sweep and fit artifacts from `dir` and writes the plots next to
/// them. Missing inputs are reported and skipped.
pub fn emit_plots(dir: &Path) -> Result<Vec<String>> {
    let read = |name: &str| std::fs::read_to_string(dir.join(name)).ok();
    let (scan, samples, fits) = (read("scan.csv"), read("fit_samples.csv"), read("fits.csv"));
    let hash = [&scan, &fits].iter().find_map(|t| t.as_deref().and_then(hash_of)).unwrap_or_default();
    let out = render(&hash, scan.as_deref(), samples.as_deref(), fits.as_deref());
    for a in &out.artifacts {
        std::fs::write(dir.join(&a.name), &a.bytes)?;
    }
    Ok(out.warnings)
}
