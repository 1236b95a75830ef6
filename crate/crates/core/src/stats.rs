//! Small least-squares helpers.

/// Ordinary least squares `y = a x + b`; returns `(a, b, rms residual)`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - a * mx;
    let rms = (pts.iter().map(|p| (a * p.0 + b - p.1).powi(2)).sum::<f64>() / n).sqrt();
    (a, b, rms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 3.0 * i as f64 - 1.0)).collect();
        let (a, b, r) = linear_fit(&pts);
        assert!((a - 3.0).abs() < 1e-12 && (b + 1.0).abs() < 1e-12 && r < 1e-12);
    }
}
