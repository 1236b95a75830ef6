//! INI-style experiment configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ini::Ini;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ProbeError, Result};
use crate::potential::Potential;
use crate::quantum::{Cutoff, Resolution};
use crate::scaling::Ladder;
use crate::testfn::Shape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sweep,
    Detect,
    Validate,
    Weyl,
    Classical,
    Calibrate,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "sweep" => Mode::Sweep,
            "detect" => Mode::Detect,
            "validate" => Mode::Validate,
            "weyl" => Mode::Weyl,
            "classical" => Mode::Classical,
            "calibrate" => Mode::Calibrate,
            other => return Err(ProbeError::Config(format!("unknown mode '{other}'"))),
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Sweep => "sweep",
            Mode::Detect => "detect",
            Mode::Validate => "validate",
            Mode::Weyl => "weyl",
            Mode::Classical => "classical",
            Mode::Calibrate => "calibrate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PotentialSource {
    Catalog { name: String, params: Vec<f64> },
    File(PathBuf),
}

/// `None` fields mean "auto" and are filled by the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub potential: PotentialSource,
    pub half_width: Option<f64>,
    pub n: Option<usize>,
    pub e1: f64,
    pub e2: f64,
    pub eps: Option<f64>,
    pub cutoff: Cutoff,
    pub ladder: Ladder,
    pub e_step: Option<f64>,
    pub m: Option<f64>,
    pub j0: u32,
    pub parity: Vec<Shape>,
    pub m_coef: Option<f64>,
    pub m_probe: f64,
    pub weyl_energy: Option<f64>,
    pub mc_points: usize,
    pub calibration_table: Option<PathBuf>,
    pub calibration_energy: Option<f64>,
    pub resolution: Resolution,
    pub orbit_levels: usize,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Detect,
            potential: PotentialSource::Catalog { name: "harmonic".into(), params: vec![1.0] },
            half_width: None,
            n: None,
            e1: -0.5,
            e2: 1.5,
            eps: None,
            cutoff: Cutoff::Smooth,
            ladder: Ladder::default(),
            e_step: None,
            m: None,
            j0: 3,
            parity: vec![Shape::Shifted, Shape::StandardEven, Shape::Odd],
            m_coef: None,
            m_probe: 0.3,
            weyl_energy: None,
            mc_points: 10_000_000,
            calibration_table: None,
            calibration_energy: None,
            resolution: Resolution::default(),
            orbit_levels: 12,
            out: PathBuf::from("out"),
            seed: 1,
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> ProbeError {
    ProbeError::Config(msg.into())
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| cfg_err(format!("{key}: cannot parse '{v}'")))
}

fn auto_num(key: &str, v: &str) -> Result<Option<f64>> {
    if v.trim() == "auto" {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(key, s)).collect()
}

fn shape_name(s: Shape) -> &'static str {
    match s {
        Shape::StandardEven => "even",
        Shape::Odd => "odd",
        Shape::Shifted => "shifted",
    }
}

fn show(v: Option<f64>) -> String {
    v.map_or("auto".into(), |x| format!("{x:?}"))
}

impl ExperimentConfig {
    /// Parses INI text; relative file paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let doc = Ini::load_from_str(text).map_err(|e| cfg_err(format!("INI syntax: {e}")))?;
        let mut cfg = Self::default();
        for (section, props) in &doc {
            for (key, value) in props.iter() {
                let full = match section {
                    Some(s) => format!("{s}.{key}"),
                    None => key.to_string(),
                };
                cfg.set(&full, value, base)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Sets one `section.key` value.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let v = value.trim();
        match key {
            "run.mode" => self.mode = Mode::parse(v)?,
            "run.out" => self.out = PathBuf::from(v),
            "run.seed" => self.seed = num(key, v)?,
            "potential.name" => {
                let params = match &self.potential {
                    PotentialSource::Catalog { params, .. } => params.clone(),
                    PotentialSource::File(_) => Vec::new(),
                };
                self.potential = PotentialSource::Catalog { name: v.to_string(), params };
            }
            "potential.params" => {
                let p = list(key, v)?;
                match &mut self.potential {
                    PotentialSource::Catalog { params, .. } => *params = p,
                    PotentialSource::File(_) => return Err(cfg_err("potential.params given for a file potential")),
                }
            }
            "potential.file" => self.potential = PotentialSource::File(base.join(v)),
            "potential.half_width" => self.half_width = auto_num(key, v)?,
            "potential.n" => self.n = if v == "auto" { None } else { Some(num(key, v)?) },
            "window.e1" => self.e1 = num(key, v)?,
            "window.e2" => self.e2 = num(key, v)?,
            "window.eps" => self.eps = auto_num(key, v)?,
            "window.cutoff" => {
                self.cutoff = match v {
                    "smooth" => Cutoff::Smooth,
                    "hard" => Cutoff::Hard,
                    _ => return Err(cfg_err(format!("{key}: expected smooth or hard"))),
                }
            }
            "ladder.hbar_max" => self.ladder.hbar_max = num(key, v)?,
            "ladder.ratio" => self.ladder.ratio = num(key, v)?,
            "ladder.count" => self.ladder.count = num(key, v)?,
            "energy.step" => self.e_step = auto_num(key, v)?,
            "testfn.m" => self.m = auto_num(key, v)?,
            "testfn.j0" => self.j0 = num(key, v)?,
            "testfn.parity" => {
                self.parity = v.split(',').map(|s| Shape::parse(s.trim())).collect::<Result<_>>()?;
            }
            "testfn.m_coef" => self.m_coef = auto_num(key, v)?,
            "testfn.m_probe" => self.m_probe = num(key, v)?,
            "weyl.energy" => self.weyl_energy = auto_num(key, v)?,
            "weyl.mc_points" => self.mc_points = num(key, v)?,
            "calibration.table" => {
                self.calibration_table = if v.is_empty() { None } else { Some(base.join(v)) }
            }
            "calibration.energy" => self.calibration_energy = auto_num(key, v)?,
            "resolution.points_per_wavelength" => self.resolution.points_per_wavelength = num(key, v)?,
            "resolution.max_dimension" => self.resolution.max_dimension = num(key, v)?,
            "resolution.error_check" => self.resolution.error_check = num(key, v)?,
            "classical.levels" => self.orbit_levels = num(key, v)?,
            other => return Err(cfg_err(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `section.key=value` overrides.
    pub fn apply_overrides(&mut self, overrides: &[String], base: &Path) -> Result<()> {
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| cfg_err(format!("override '{o}' is not key=value")))?;
            self.set(k.trim(), v, base)?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e1 <= self.e2) {
            return Err(cfg_err(format!("window: E1={} > E2={}", self.e1, self.e2)));
        }
        if let Some(e) = self.eps {
            if !(e > 0.0) {
                return Err(cfg_err("window.eps must be positive"));
            }
        }
        Ladder::new(self.ladder.hbar_max, self.ladder.ratio, self.ladder.count)?;
        for (name, v) in [("testfn.m", self.m), ("testfn.m_coef", self.m_coef), ("energy.step", self.e_step)] {
            if let Some(x) = v {
                if !(x > 0.0) {
                    return Err(cfg_err(format!("{name} must be positive")));
                }
            }
        }
        if !(self.m_probe > 0.0) {
            return Err(cfg_err("testfn.m_probe must be positive"));
        }
        if self.parity.is_empty() {
            return Err(cfg_err("testfn.parity is empty"));
        }
        if let PotentialSource::File(p) = &self.potential {
            if !p.is_file() {
                return Err(cfg_err(format!("potential file {} not found", p.display())));
            }
        }
        if self.mode == Mode::Calibrate && self.calibration_table.is_none() {
            return Err(cfg_err("calibrate mode needs calibration.table"));
        }
        if let Some(t) = &self.calibration_table {
            if self.mode != Mode::Calibrate && !t.is_file() {
                return Err(cfg_err(format!("calibration table {} not found (run calibrate first)", t.display())));
            }
        }
        Ok(())
    }

    /// Builds the potential; `half_width` overrides the catalog box.
    pub fn build_potential(&self) -> Result<Potential> {
        let pot = match &self.potential {
            PotentialSource::Catalog { name, params } => Potential::from_catalog(name, params)?,
            PotentialSource::File(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| cfg_err(format!("{}: {e}", p.display())))?;
                let label = p.file_stem().and_then(|s| s.to_str()).unwrap_or("polynomial");
                Potential::parse_polynomial(&text, self.half_width.unwrap_or(3.0), label)?
            }
        };
        if let Some(n) = self.n {
            if n != pot.dimension() {
                return Err(cfg_err(format!("potential.n={n} but the potential has dimension {}", pot.dimension())));
            }
        }
        Ok(match self.half_width {
            Some(l) => pot.with_half_width(l),
            None => pot,
        })
    }

    /// Canonical INI text; every key written, `auto` where unresolved.
    /// The output directory is left out so it does not affect the hash.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[run]\nmode = {}\nseed = {}\n", self.mode.as_str(), self.seed);
        match &self.potential {
            PotentialSource::Catalog { name, params } => {
                let p: Vec<String> = params.iter().map(|x| format!("{x:?}")).collect();
                let _ = writeln!(s, "[potential]\nname = {name}\nparams = {}", p.join(","));
            }
            PotentialSource::File(p) => {
                let _ = writeln!(s, "[potential]\nfile = {}", p.display());
            }
        }
        let _ = writeln!(
            s,
            "half_width = {}\nn = {}\n",
            show(self.half_width),
            self.n.map_or("auto".into(), |n| n.to_string())
        );
        let cutoff = if self.cutoff == Cutoff::Smooth { "smooth" } else { "hard" };
        let _ = writeln!(
            s,
            "[window]\ne1 = {:?}\ne2 = {:?}\neps = {}\ncutoff = {cutoff}\n",
            self.e1,
            self.e2,
            show(self.eps)
        );
        let _ = writeln!(
            s,
            "[ladder]\nhbar_max = {:?}\nratio = {:?}\ncount = {}\n",
            self.ladder.hbar_max, self.ladder.ratio, self.ladder.count
        );
        let _ = writeln!(s, "[energy]\nstep = {}\n", show(self.e_step));
        let parity: Vec<&str> = self.parity.iter().map(|p| shape_name(*p)).collect();
        let _ = writeln!(
            s,
            "[testfn]\nm = {}\nj0 = {}\nparity = {}\nm_coef = {}\nm_probe = {:?}\n",
            show(self.m),
            self.j0,
            parity.join(","),
            show(self.m_coef),
            self.m_probe
        );
        let _ = writeln!(s, "[weyl]\nenergy = {}\nmc_points = {}\n", show(self.weyl_energy), self.mc_points);
        let table = self.calibration_table.as_ref().map_or(String::new(), |p| p.display().to_string());
        let _ = writeln!(s, "[calibration]\ntable = {table}\nenergy = {}\n", show(self.calibration_energy));
        let _ = writeln!(
            s,
            "[resolution]\npoints_per_wavelength = {:?}\nmax_dimension = {}\nerror_check = {}\n",
            self.resolution.points_per_wavelength, self.resolution.max_dimension, self.resolution.error_check
        );
        let _ = writeln!(s, "[classical]\nlevels = {}", self.orbit_levels);
        s
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_ini().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
[run]
mode = detect
seed = 7

[potential]
name = double-well

[window]
e1 = -0.5
e2 = 1.5

[ladder]
hbar_max = 0.1
ratio = 0.75
count = 10
";

    #[test]
    fn parse_and_round_trip() {
        let cfg = ExperimentConfig::parse(SAMPLE, Path::new(".")).unwrap();
        assert_eq!(cfg.mode, Mode::Detect);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.m, None);
        let again = ExperimentConfig::parse(&cfg.to_ini(), Path::new(".")).unwrap();
        assert_eq!(again.to_ini(), cfg.to_ini());
        assert_eq!(again.hash(), cfg.hash());
    }

    #[test]
    fn reversed_window_rejected() {
        let text = SAMPLE.replace("e1 = -0.5", "e1 = 2.0");
        assert!(matches!(ExperimentConfig::parse(&text, Path::new(".")), Err(ProbeError::Config(_))));
    }

    #[test]
    fn unknown_key_rejected() {
        let text = format!("{SAMPLE}\n[testfn]\nsuport = 1\n");
        assert!(ExperimentConfig::parse(&text, Path::new(".")).is_err());
    }

    #[test]
    fn overrides_and_hash() {
        let mut cfg = ExperimentConfig::parse(SAMPLE, Path::new(".")).unwrap();
        let h0 = cfg.hash();
        cfg.apply_overrides(&["testfn.j0=4".into()], Path::new(".")).unwrap();
        assert_eq!(cfg.j0, 4);
        assert_ne!(cfg.hash(), h0);
        cfg.out = PathBuf::from("elsewhere");
        let h1 = cfg.hash();
        assert_eq!(h1, cfg.hash());
        assert!(cfg.apply_overrides(&["nonsense".into()], Path::new(".")).is_err());
    }

    #[test]
    fn missing_file_rejected() {
        let text = "[potential]\nfile = /nonexistent/poly.txt\n";
        assert!(ExperimentConfig::parse(text, Path::new(".")).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let text = format!("{SAMPLE}\n[potential]\nn = 2\n");
        let cfg = ExperimentConfig::parse(&text, Path::new(".")).unwrap();
        assert!(cfg.build_potential().is_err());
    }
}
