//! Sampled signal curves and their CSV representation.
//!
//! ```text
//! # write_pol=L
//! # read_pol=D
//! # scan=delay
//! # ...
//! abscissa,value
//! 0,10000
//! 0.5,10128.4...
//! ```
//!
//! Metadata lines come first as `# key=value`, in a fixed key order, followed
//! by a column header and one `abscissa,value` row per sample. Numbers use
//! Rust's shortest round-trip formatting, so writing and re-reading a curve
//! is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::dynamics::{DotParameters, WritePath};
use crate::error::{Error, Result};
use crate::polarization::{
    angles_from_jones, jones_from_angles, NamedPolarization, PoincareAngles, PolarizationState,
};
use crate::readout::{Noise, SignalParams};

/// What the abscissa of a curve means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScanKind {
    /// Abscissa is the write/read delay in ps.
    Delay,
    /// Abscissa is `phi` in rad, with `theta = π/2`.
    AnglePhi,
    /// Abscissa is `theta` in rad, with `phi = 0`.
    AngleTheta,
}

impl ScanKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Delay => "delay",
            Self::AnglePhi => "angle_phi",
            Self::AngleTheta => "angle_theta",
        }
    }

    pub fn abscissa_label(self) -> &'static str {
        match self {
            Self::Delay => "delay (ps)",
            Self::AnglePhi => "phi (rad)",
            Self::AngleTheta => "theta (rad)",
        }
    }
}

impl std::str::FromStr for ScanKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "delay" => Ok(Self::Delay),
            "angle_phi" => Ok(Self::AnglePhi),
            "angle_theta" => Ok(Self::AngleTheta),
            other => Err(format!(
                "unknown scan kind `{other}` (expected delay, angle_phi or angle_theta)"
            )),
        }
    }
}

/// Everything needed to regenerate or interpret a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveMeta {
    /// Write polarization; `None` when it is the swept variable.
    pub write: Option<PolarizationState>,
    pub read: PolarizationState,
    pub scan: ScanKind,
    pub path: WritePath,
    /// Fixed delay of an angle scan, in ps.
    pub delay: Option<f64>,
    /// Retardance error of the write-side preparation optics, rad.
    pub lcvr_offset: Option<f64>,
    pub dot: DotParameters,
    pub signal: SignalParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalCurve {
    pub abscissa: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: CurveMeta,
}

impl SignalCurve {
    /// Checks equal lengths, finiteness and a strictly increasing abscissa.
    pub fn new(abscissa: Vec<f64>, values: Vec<f64>, meta: CurveMeta) -> Result<Self> {
        if abscissa.len() != values.len() {
            return Err(Error::MalformedCurve(format!(
                "{} abscissa points but {} values",
                abscissa.len(),
                values.len()
            )));
        }
        if let Some(i) = abscissa.iter().chain(&values).position(|v| !v.is_finite()) {
            return Err(Error::MalformedCurve(format!(
                "non-finite entry at index {i}"
            )));
        }
        if let Some(i) = abscissa.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::MalformedCurve(format!(
                "abscissa not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Self {
            abscissa,
            values,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.abscissa
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn to_csv_string(&self) -> String {
        let m = &self.meta;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "# {k}={v}");
        };
        kv(
            "write_pol",
            m.write
                .as_ref()
                .map(format_polarization)
                .unwrap_or_else(|| "swept".into()),
        );
        kv("read_pol", format_polarization(&m.read));
        kv("scan", m.scan.as_str().into());
        kv("delta_ueV", m.dot.delta_gs.to_string());
        kv("tau_x_ps", m.dot.tau_x.to_string());
        kv("t2_ps", m.dot.t2.to_string());
        kv("scale", m.signal.scale.to_string());
        kv("background", m.signal.background.to_string());
        kv("noise", m.signal.noise.to_string());
        kv("seed", m.signal.seed.to_string());
        kv("path", m.path.as_str().into());
        kv("delta_es_ueV", m.dot.delta_es.to_string());
        kv("t1_ps", m.dot.t1.to_string());
        kv("relax_depol", m.dot.relax_depol.to_string());
        kv("pulse_ps", m.dot.pulse_duration.to_string());
        if let Some(d) = m.delay {
            kv("delay_ps", d.to_string());
        }
        if let Some(o) = m.lcvr_offset {
            kv("lcvr_offset", o.to_string());
        }
        out.push_str("abscissa,value\n");
        for (a, v) in self.points() {
            let _ = writeln!(out, "{a},{v}");
        }
        out
    }

    /// Parses the CSV format. Missing metadata keys take their defaults,
    /// except `read_pol`, which is required; unrecognized keys are ignored.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut dot = DotParameters::default();
        let mut signal = SignalParams::default();
        let mut write = None;
        let mut read = None;
        let mut scan = ScanKind::Delay;
        let mut path = WritePath::GroundResonant;
        let mut delay = None;
        let mut lcvr_offset = None;
        let mut abscissa = Vec::new();
        let mut values = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let Some((key, value)) = rest.split_once('=') else {
                    continue;
                };
                let (key, value) = (key.trim(), value.trim());
                let num = || -> Result<f64> {
                    value
                        .parse::<f64>()
                        .map_err(|_| err(format!("`{key}` expects a number, got `{value}`")))
                };
                match key {
                    "write_pol" => {
                        write = if value == "swept" {
                            None
                        } else {
                            Some(parse_polarization(value).map_err(err)?)
                        }
                    }
                    "read_pol" => read = Some(parse_polarization(value).map_err(err)?),
                    "scan" => scan = value.parse().map_err(err)?,
                    "delta_ueV" => dot.delta_gs = num()?,
                    "tau_x_ps" => dot.tau_x = num()?,
                    "t2_ps" => dot.t2 = num()?,
                    "t1_ps" => dot.t1 = num()?,
                    "delta_es_ueV" => dot.delta_es = num()?,
                    "relax_depol" => dot.relax_depol = num()?,
                    "pulse_ps" => dot.pulse_duration = num()?,
                    "scale" => signal.scale = num()?,
                    "background" => signal.background = num()?,
                    "noise" => signal.noise = value.parse().map_err(err)?,
                    "seed" => {
                        signal.seed = value
                            .parse()
                            .map_err(|_| err(format!("`seed` expects an integer, got `{value}`")))?
                    }
                    "path" => path = value.parse().map_err(err)?,
                    "delay_ps" => delay = Some(num()?),
                    "lcvr_offset" => lcvr_offset = Some(num()?),
                    _ => {}
                }
                continue;
            }
            if line.eq_ignore_ascii_case("abscissa,value") {
                continue;
            }
            let (a, v) = line
                .split_once(',')
                .ok_or_else(|| err(format!("expected `abscissa,value`, got `{line}`")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| err(format!("not a number: `{}`", s.trim())))
            };
            abscissa.push(parse(a)?);
            values.push(parse(v)?);
        }

        if values.is_empty() {
            return Err(Error::MalformedCurve("no data rows".into()));
        }
        let read =
            read.ok_or_else(|| Error::MalformedCurve("missing `read_pol` metadata".into()))?;
        dot.validate()?;
        signal.validate()?;
        let meta = CurveMeta {
            write,
            read,
            scan,
            path,
            delay,
            lcvr_offset,
            dot,
            signal,
        };
        Self::new(abscissa, values, meta)
    }

    /// Writes to a sibling temporary file and renames it into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv_string().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv_str(&fs::read_to_string(path)?)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// A lab name when the state is one of the six, else `(theta,phi)`.
pub fn format_polarization(state: &PolarizationState) -> String {
    match NamedPolarization::identify(state) {
        Some(n) => n.to_string(),
        None => {
            let a = angles_from_jones(state);
            format!("({},{})", a.theta, a.phi)
        }
    }
}

/// Accepts a lab name (`H`, `V`, `D`, `Dbar`, `R`, `L`) or `(theta, phi)`.
pub fn parse_polarization(text: &str) -> std::result::Result<PolarizationState, String> {
    let t = text.trim();
    if let Some(inner) = t.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
        let (a, b) = inner
            .split_once(',')
            .ok_or_else(|| format!("expected `(theta, phi)`, got `{t}`"))?;
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("not a number: `{}`", s.trim()))
        };
        let angles = PoincareAngles::new(num(a)?, num(b)?).map_err(|e| e.to_string())?;
        return Ok(jones_from_angles(angles));
    }
    t.parse::<NamedPolarization>().map(NamedPolarization::state)
}

/// Builds a state from raw amplitudes, used by tests and callers holding
/// measured Jones vectors.
pub fn polarization_from_amplitudes(ch: (f64, f64), cv: (f64, f64)) -> Result<PolarizationState> {
    PolarizationState::new(Complex64::new(ch.0, ch.1), Complex64::new(cv.0, cv.1))
}

impl std::fmt::Display for Noise {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Noise::None => f.write_str("none"),
            Noise::Poisson => f.write_str("poisson"),
            Noise::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
        }
    }
}

impl std::str::FromStr for Noise {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "none" => Ok(Noise::None),
            "poisson" => Ok(Noise::Poisson),
            _ => {
                let sigma = s.strip_prefix("gaussian:").ok_or_else(|| {
                    format!("unknown noise `{s}` (expected none, poisson or gaussian:<sigma>)")
                })?;
                let sigma: f64 = sigma
                    .trim()
                    .parse()
                    .map_err(|_| format!("gaussian sigma is not a number: `{sigma}`"))?;
                Ok(Noise::Gaussian { sigma })
            }
        }
    }
}
