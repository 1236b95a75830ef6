use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbeError {
    #[error("config: {0}")]
    Config(String),
    #[error("potential file line {line}: {msg}")]
    PolynomialFile { line: usize, msg: String },
    #[error("non-homogeneous germ: log-log slope {slope:.4} is not within 0.1 of an even integer")]
    NonHomogeneousGerm { slope: f64 },
    #[error("not an extremum germ: sign changes over the sphere")]
    NotExtremumGerm,
    #[error("germ vanishes on sphere")]
    GermVanishes,
    #[error("quadrature did not converge (estimate {estimate:.6e}, error {error:.3e})")]
    Quadrature { estimate: f64, error: f64 },
    #[error("increase grid: tail energy fraction {fraction:.3e}")]
    IncreaseGrid { fraction: f64 },
    #[error("box too small: V on boundary is {boundary_min:.4}, window top is {top:.4}")]
    BoxTooSmall { boundary_min: f64, top: f64 },
    #[error("resolution insufficient for hbar={hbar}: need about {suggested} grid points")]
    ResolutionInsufficient { hbar: f64, suggested: usize },
    #[error("spectrum too coarse for hbar={hbar}: eigenvalue error {err:.3e}")]
    SpectrumTooCoarse { hbar: f64, err: f64 },
    #[error("trajectory left the box at t={t:.4}")]
    BoxExit { t: f64 },
    #[error("reduce dt: relative energy drift {drift:.3e}")]
    EnergyDrift { drift: f64 },
    #[error("region estimation failed: no point with V <= {level}")]
    EmptyRegion { level: f64 },
    #[error("regular energies only: E={energy} is within {band} of critical value {critical}")]
    NearCritical { energy: f64, critical: f64, band: f64 },
    #[error("need at least {need} ladder points, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("samples do not share one energy")]
    MixedEnergies,
    #[error("signal below error bound at hbar={hbar}")]
    BelowErrorBound { hbar: f64 },
    #[error("oscillatory, refine E (E={energy})")]
    Oscillatory { energy: f64 },
    #[error("exponent {alpha:.4} inconsistent with an extremum germ in dimension {n}")]
    InconsistentExponent { alpha: f64, n: usize },
    #[error("calibration refused: {0}")]
    Calibration(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for ProbeError {
    fn from(e: std::io::Error) -> Self {
        ProbeError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ProbeError>;
