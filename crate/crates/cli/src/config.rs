//! Experiment configuration: a flat `key = value` text with optional
//! `[dot]`, `[signal]`, `[scan]` and `[output]` sections.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use exciton_core::curve::parse_polarization;
use exciton_core::{
    DotParameters, Error as CoreError, NamedPolarization, PolarizationState, ScanKind,
    SignalParams, WritePath,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    /// 1-based line in the config text; `None` for command-line flags.
    pub line: Option<usize>,
    pub key: String,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) if self.key.is_empty() => write!(f, "line {l}: {}", self.msg),
            Some(l) => write!(f, "line {l}: `{}`: {}", self.key, self.msg),
            None if self.key.is_empty() => f.write_str(&self.msg),
            None => write!(f, "`{}`: {}", self.key, self.msg),
        }
    }
}

/// A number with an optional unit suffix: plain, `pi` (radians) or `T`
/// (precession periods). `T` alone means one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    One,
    Pi,
    Period,
}

impl Quantity {
    pub fn plain(value: f64) -> Self {
        Self {
            value,
            unit: Unit::One,
        }
    }

    pub fn resolve(self, period: f64) -> f64 {
        match self.unit {
            Unit::One => self.value,
            Unit::Pi => self.value * PI,
            Unit::Period => self.value * period,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.unit {
            Unit::One => write!(f, "{}", self.value),
            Unit::Pi => write!(f, "{}pi", self.value),
            Unit::Period => write!(f, "{}T", self.value),
        }
    }
}

impl std::str::FromStr for Quantity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let (num, unit) = if let Some(n) = s.strip_suffix("pi") {
            (n, Unit::Pi)
        } else if let Some(n) = s.strip_suffix('T') {
            (n, Unit::Period)
        } else {
            (s, Unit::One)
        };
        let num = num.trim().trim_end_matches('*').trim();
        let value = if num.is_empty() && unit != Unit::One {
            1.0
        } else {
            num.parse::<f64>()
                .map_err(|_| format!("not a number: `{s}`"))?
        };
        if !value.is_finite() {
            return Err(format!("must be finite: `{s}`"));
        }
        Ok(Self { value, unit })
    }
}

/// Sample positions of a scan.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    /// `start:stop:step`, both ends inclusive when they fall on the grid.
    Range {
        start: Quantity,
        stop: Quantity,
        step: Quantity,
    },
    /// `linspace(start, stop, n)`.
    Linspace {
        start: Quantity,
        stop: Quantity,
        n: usize,
    },
    /// Explicit comma-separated values.
    List(Vec<Quantity>),
}

impl Grid {
    pub fn values(&self, period: f64) -> Vec<f64> {
        match self {
            Grid::Range { start, stop, step } => {
                let (a, b, h) = (
                    start.resolve(period),
                    stop.resolve(period),
                    step.resolve(period),
                );
                let n = ((b - a) / h + 1e-9).floor() as usize + 1;
                (0..n).map(|i| a + i as f64 * h).collect()
            }
            Grid::Linspace { start, stop, n } => {
                let (a, b) = (start.resolve(period), stop.resolve(period));
                if *n == 1 {
                    return vec![a];
                }
                (0..*n)
                    .map(|i| {
                        if i + 1 == *n {
                            b
                        } else {
                            a + (b - a) * i as f64 / (*n - 1) as f64
                        }
                    })
                    .collect()
            }
            Grid::List(v) => v.iter().map(|q| q.resolve(period)).collect(),
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::Range { start, stop, step } => write!(f, "{start}:{stop}:{step}"),
            Grid::Linspace { start, stop, n } => write!(f, "linspace({start}, {stop}, {n})"),
            Grid::List(v) => {
                let parts: Vec<String> = v.iter().map(|q| q.to_string()).collect();
                f.write_str(&parts.join(", "))
            }
        }
    }
}

impl std::str::FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let grid = if let Some(inner) = s
            .strip_prefix("linspace(")
            .and_then(|r| r.strip_suffix(')'))
        {
            let parts: Vec<&str> = inner.split(',').collect();
            if parts.len() != 3 {
                return Err(format!("expected linspace(start, stop, n), got `{s}`"));
            }
            let n: usize = parts[2].trim().parse().map_err(|_| {
                format!(
                    "point count is not a positive integer: `{}`",
                    parts[2].trim()
                )
            })?;
            if n == 0 {
                return Err("linspace needs at least one point".into());
            }
            Grid::Linspace {
                start: parts[0].parse()?,
                stop: parts[1].parse()?,
                n,
            }
        } else if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(format!("expected start:stop:step, got `{s}`"));
            }
            let step: Quantity = parts[2].parse()?;
            if !(step.value > 0.0) {
                return Err(format!("step must be positive, got `{}`", parts[2].trim()));
            }
            Grid::Range {
                start: parts[0].parse()?,
                stop: parts[1].parse()?,
                step,
            }
        } else {
            if s.is_empty() {
                return Err("empty grid".into());
            }
            Grid::List(s.split(',').map(str::parse).collect::<Result<_, _>>()?)
        };
        Ok(grid)
    }
}

/// A polarization as written in the config: a lab name or explicit angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolSpec {
    Named(NamedPolarization),
    Angles { theta: f64, phi: f64 },
}

impl PolSpec {
    pub fn state(&self) -> PolarizationState {
        match *self {
            PolSpec::Named(n) => n.state(),
            PolSpec::Angles { theta, phi } => {
                parse_polarization(&format!("({theta},{phi})")).expect("validated when parsed")
            }
        }
    }

    /// Short tag for file names.
    pub fn tag(&self) -> String {
        match self {
            PolSpec::Named(n) => n.as_str().to_string(),
            PolSpec::Angles { theta, phi } => format!("t{theta:.3}p{phi:.3}"),
        }
    }
}

impl fmt::Display for PolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolSpec::Named(n) => write!(f, "{n}"),
            PolSpec::Angles { theta, phi } => write!(f, "({theta}, {phi})"),
        }
    }
}

impl std::str::FromStr for PolSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.starts_with('(') {
            // validates the syntax and the angle ranges
            parse_polarization(s)?;
            let (a, b) = s[1..s.len() - 1].split_once(',').expect("checked above");
            Ok(PolSpec::Angles {
                theta: a.trim().parse().unwrap(),
                phi: b.trim().parse().unwrap(),
            })
        } else {
            s.parse().map(PolSpec::Named)
        }
    }
}

fn parse_pol_list(s: &str) -> Result<Vec<PolSpec>, String> {
    let list: Vec<PolSpec> = s
        .split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    if list.is_empty() {
        return Err("expected at least one polarization".into());
    }
    Ok(list)
}

fn format_pol_list(list: &[PolSpec]) -> String {
    list.iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub kind: ScanKind,
    pub path: WritePath,
    /// Empty for angle scans, where the write polarization is swept.
    pub write: Vec<PolSpec>,
    pub read: Vec<PolSpec>,
    pub delays: Grid,
    pub angles: Grid,
    /// Fixed write/read delay of an angle scan.
    pub delay: Quantity,
    /// Retardance error of the write-side LCVRs, rad; `None` is ideal optics.
    pub lcvr_offset: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub name: String,
    pub plot: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dot: DotParameters,
    pub signal: SignalParams,
    pub scan: ScanSpec,
    pub output: OutputSpec,
}

const SECTIONS: [(&str, &[&str]); 4] = [
    (
        "dot",
        &[
            "delta_gs",
            "delta_es",
            "tau_x",
            "t2",
            "t1",
            "relax_depol",
            "pulse_duration",
        ],
    ),
    ("signal", &["scale", "background", "noise", "seed"]),
    (
        "scan",
        &[
            "scan",
            "path",
            "write",
            "read",
            "delays",
            "angles",
            "delay",
            "lcvr_offset",
        ],
    ),
    ("output", &["dir", "name", "plot"]),
];

fn section_of(key: &str) -> Option<&'static str> {
    SECTIONS
        .iter()
        .find(|(_, keys)| keys.contains(&key))
        .map(|(s, _)| *s)
}

pub fn known_keys() -> impl Iterator<Item = &'static str> {
    SECTIONS.iter().flat_map(|(_, keys)| keys.iter().copied())
}

/// Raw key/value assignments, each remembering where it came from.
#[derive(Debug, Clone, Default)]
pub struct Assignments {
    entries: Vec<(String, String, Option<usize>)>,
}

impl Assignments {
    /// Parses config text. Sections are optional but a key placed under the
    /// wrong one is rejected.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut out = Self::default();
        let mut section: Option<String> = None;
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |key: &str, msg: String| ConfigError {
                line: Some(line_no),
                key: key.into(),
                msg,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !SECTIONS.iter().any(|(s, _)| *s == name) {
                    return Err(err("", format!("unknown section `[{name}]`")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("", format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let home = section_of(key).ok_or_else(|| err(key, "unknown key".into()))?;
            if let Some(s) = &section {
                if s != home {
                    return Err(err(key, format!("belongs in [{home}], not [{s}]")));
                }
            }
            if let Some(prev) = seen.insert(key.to_string(), line_no) {
                return Err(err(key, format!("duplicate key, first set on line {prev}")));
            }
            out.entries
                .push((key.to_string(), value.to_string(), Some(line_no)));
        }
        Ok(out)
    }

    /// Adds a command-line override; later assignments win.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.push((key.to_string(), value.into(), None));
    }

    pub fn merge(&mut self, other: Assignments) {
        self.entries.extend(other.entries);
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Builds and validates a full configuration. Missing keys take their
    /// defaults except `scan` and `read`, and `write` for delay scans.
    pub fn build(&self) -> Result<ExperimentConfig, ConfigError> {
        let mut last: HashMap<&str, (&str, Option<usize>)> = HashMap::new();
        for (k, v, l) in &self.entries {
            if section_of(k).is_none() {
                return Err(ConfigError {
                    line: *l,
                    key: k.clone(),
                    msg: "unknown key".into(),
                });
            }
            last.insert(k.as_str(), (v.as_str(), *l));
        }
        let line_of = |key: &str| last.get(key).and_then(|(_, l)| *l);
        let get = |key: &'static str| last.get(key).map(|(v, l)| (*v, *l));
        let fail = |key: &str, msg: String| ConfigError {
            line: line_of(key),
            key: key.into(),
            msg,
        };

        fn value<T: std::str::FromStr>(
            raw: Option<(&str, Option<usize>)>,
            key: &str,
            default: T,
        ) -> Result<T, ConfigError>
        where
            T::Err: fmt::Display,
        {
            match raw {
                None => Ok(default),
                Some((v, line)) => v.parse::<T>().map_err(|e| ConfigError {
                    line,
                    key: key.into(),
                    msg: format!("cannot parse `{v}`: {e}"),
                }),
            }
        }

        let d = DotParameters::default();
        let dot = DotParameters {
            delta_gs: value(get("delta_gs"), "delta_gs", d.delta_gs)?,
            delta_es: value(get("delta_es"), "delta_es", d.delta_es)?,
            tau_x: value(get("tau_x"), "tau_x", d.tau_x)?,
            t2: value(get("t2"), "t2", d.t2)?,
            t1: value(get("t1"), "t1", d.t1)?,
            relax_depol: value(get("relax_depol"), "relax_depol", d.relax_depol)?,
            pulse_duration: value(get("pulse_duration"), "pulse_duration", d.pulse_duration)?,
        };
        let s = SignalParams::default();
        let signal = SignalParams {
            scale: value(get("scale"), "scale", s.scale)?,
            background: value(get("background"), "background", s.background)?,
            noise: value(get("noise"), "noise", s.noise)?,
            seed: value(get("seed"), "seed", s.seed)?,
        };
        let range_error = |e: CoreError| match e {
            CoreError::InvalidParameter {
                name,
                value,
                reason,
            } => {
                let key = if name == "sigma" { "noise" } else { name };
                fail(key, format!("out of range: {reason} (got {value})"))
            }
            other => fail("", other.to_string()),
        };
        dot.validate().map_err(range_error)?;
        signal.validate().map_err(range_error)?;

        let kind: ScanKind = match get("scan") {
            None => {
                return Err(fail(
                    "scan",
                    "missing required key (delay, angle_phi or angle_theta)".into(),
                ))
            }
            Some(_) => value(get("scan"), "scan", ScanKind::Delay)?,
        };
        let read = match get("read") {
            None => return Err(fail("read", "missing required key".into())),
            Some((v, l)) => parse_pol_list(v).map_err(|m| ConfigError {
                line: l,
                key: "read".into(),
                msg: m,
            })?,
        };
        let write = match (kind, get("write")) {
            (ScanKind::Delay, None) => {
                return Err(fail(
                    "write",
                    "missing required key for a delay scan".into(),
                ))
            }
            (ScanKind::Delay, Some((v, l))) => parse_pol_list(v).map_err(|m| ConfigError {
                line: l,
                key: "write".into(),
                msg: m,
            })?,
            (_, Some(_)) => {
                return Err(fail(
                    "write",
                    "an angle scan sweeps the write polarization; remove `write`".into(),
                ))
            }
            (_, None) => Vec::new(),
        };
        let default_delays = Grid::Linspace {
            start: Quantity::plain(0.0),
            stop: Quantity {
                value: 4.0,
                unit: Unit::Period,
            },
            n: 401,
        };
        let default_angles = Grid::Linspace {
            start: Quantity::plain(0.0),
            stop: Quantity {
                value: 2.0,
                unit: Unit::Pi,
            },
            n: 181,
        };
        let scan = ScanSpec {
            kind,
            path: value(get("path"), "path", WritePath::GroundResonant)?,
            write,
            read,
            delays: value(get("delays"), "delays", default_delays)?,
            angles: value(get("angles"), "angles", default_angles)?,
            delay: value(
                get("delay"),
                "delay",
                Quantity {
                    value: 1.0,
                    unit: Unit::Period,
                },
            )?,
            lcvr_offset: match get("lcvr_offset") {
                None => None,
                Some(raw) => Some(value(Some(raw), "lcvr_offset", 0.0)?),
            },
        };
        let period = dot.period();
        let delays = scan.delays.values(period);
        if delays.iter().any(|&t| t < 0.0) {
            return Err(fail("delays", "delays must be non-negative".into()));
        }
        if delays.windows(2).any(|w| w[1] <= w[0]) {
            return Err(fail("delays", "delays must be strictly increasing".into()));
        }
        let angles = scan.angles.values(period);
        if angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(fail("angles", "angles must be strictly increasing".into()));
        }
        if kind == ScanKind::AngleTheta
            && angles
                .iter()
                .any(|a| !(-1e-12..=2.0 * PI + 1e-12).contains(a))
        {
            return Err(fail(
                "angles",
                "a theta sweep must stay within [0, 2pi]".into(),
            ));
        }
        if !(scan.delay.resolve(period) >= 0.0) {
            return Err(fail("delay", "must be non-negative".into()));
        }
        if let Some(o) = scan.lcvr_offset {
            if !o.is_finite() {
                return Err(fail("lcvr_offset", "must be finite".into()));
            }
        }

        let output = OutputSpec {
            dir: value(get("dir"), "dir", PathBuf::from("."))?,
            name: value(get("name"), "name", String::from("scan"))?,
            plot: value(get("plot"), "plot", true)?,
        };
        if output.name.is_empty() || output.name.contains(['/', '\\']) {
            return Err(fail("name", "must be a plain file stem".into()));
        }
        Ok(ExperimentConfig {
            dot,
            signal,
            scan,
            output,
        })
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    Assignments::parse(text)?.build()
}

impl ExperimentConfig {
    /// Every key written out explicitly; parses back to an equal config.
    pub fn to_config_string(&self) -> String {
        let d = &self.dot;
        let s = &self.signal;
        let c = &self.scan;
        let mut out = String::new();
        out.push_str("[dot]\n");
        out.push_str(&format!("delta_gs = {}\n", d.delta_gs));
        out.push_str(&format!("delta_es = {}\n", d.delta_es));
        out.push_str(&format!("tau_x = {}\n", d.tau_x));
        out.push_str(&format!("t2 = {}\n", d.t2));
        out.push_str(&format!("t1 = {}\n", d.t1));
        out.push_str(&format!("relax_depol = {}\n", d.relax_depol));
        out.push_str(&format!("pulse_duration = {}\n", d.pulse_duration));
        out.push_str("\n[signal]\n");
        out.push_str(&format!("scale = {}\n", s.scale));
        out.push_str(&format!("background = {}\n", s.background));
        out.push_str(&format!("noise = {}\n", s.noise));
        out.push_str(&format!("seed = {}\n", s.seed));
        out.push_str("\n[scan]\n");
        out.push_str(&format!("scan = {}\n", c.kind.as_str()));
        out.push_str(&format!("path = {}\n", c.path.as_str()));
        if !c.write.is_empty() {
            out.push_str(&format!("write = {}\n", format_pol_list(&c.write)));
        }
        out.push_str(&format!("read = {}\n", format_pol_list(&c.read)));
        out.push_str(&format!("delays = {}\n", c.delays));
        out.push_str(&format!("angles = {}\n", c.angles));
        out.push_str(&format!("delay = {}\n", c.delay));
        if let Some(o) = c.lcvr_offset {
            out.push_str(&format!("lcvr_offset = {o}\n"));
        }
        out.push_str("\n[output]\n");
        out.push_str(&format!("dir = {}\n", self.output.dir.display()));
        out.push_str(&format!("name = {}\n", self.output.name));
        out.push_str(&format!("plot = {}\n", self.output.plot));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "scan = delay\nwrite = L\nread = D\n";

    #[test]
    fn defaults_fill_missing_keys() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.dot, DotParameters::default());
        assert_eq!(c.signal, SignalParams::default());
        assert_eq!(c.scan.path, WritePath::GroundResonant);
        assert_eq!(c.scan.delays.values(c.dot.period()).len(), 401);
    }

    #[test]
    fn quantities_with_units() {
        let q: Quantity = "T".parse().unwrap();
        assert_eq!(
            q,
            Quantity {
                value: 1.0,
                unit: Unit::Period
            }
        );
        let q: Quantity = "0.5pi".parse().unwrap();
        assert!((q.resolve(1.0) - PI / 2.0).abs() < 1e-15);
        assert!("x".parse::<Quantity>().is_err());
        assert!("inf".parse::<Quantity>().is_err());
    }

    #[test]
    fn grids() {
        let g: Grid = "0:10:2.5".parse().unwrap();
        assert_eq!(g.values(1.0), vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        let g: Grid = "linspace(0, 2T, 3)".parse().unwrap();
        assert_eq!(g.values(100.0), vec![0.0, 100.0, 200.0]);
        let g: Grid = "1, 2, 0.5T".parse().unwrap();
        assert_eq!(g.values(10.0), vec![1.0, 2.0, 5.0]);
        assert!("0:10:0".parse::<Grid>().is_err());
        assert!("linspace(0, 1)".parse::<Grid>().is_err());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("[dot]\ndelta_gs = 34\nwobble = 3\n").unwrap_err();
        assert_eq!((e.line, e.key.as_str()), (Some(3), "wobble"));

        let e = parse_config("scan = delay\nwrite = L\n\nread = D\ndelta_gs = -3\n").unwrap_err();
        assert_eq!((e.line, e.key.as_str()), (Some(5), "delta_gs"));
        assert!(e.to_string().starts_with("line 5: `delta_gs`"), "{e}");

        let e = parse_config("write = L\nread = D\n").unwrap_err();
        assert_eq!(e.key, "scan");

        let e = parse_config("[signal]\nscan = delay\n").unwrap_err();
        assert_eq!(e.line, Some(2));

        let e =
            parse_config("scan = delay\nwrite = L\nread = D\nnoise = gaussian:-1\n").unwrap_err();
        assert_eq!((e.line, e.key.as_str()), (Some(4), "noise"));

        let e = parse_config("scan = angle_phi\nwrite = L\nread = D\n").unwrap_err();
        assert_eq!(e.key, "write");
    }

    #[test]
    fn overrides_win() {
        let mut a = Assignments::parse(MINIMAL).unwrap();
        a.set("read", "R");
        a.set("seed", "9");
        let c = a.build().unwrap();
        assert_eq!(c.scan.read, vec![PolSpec::Named(NamedPolarization::R)]);
        assert_eq!(c.signal.seed, 9);
    }

    #[test]
    fn round_trip() {
        let text = "scan = delay\npath = excited\nwrite = L; (1.2, 0.3); Dbar\nread = D\n\
                    delays = 0:600:0.5\nnoise = gaussian:200\nt2 = 800\nlcvr_offset = 0.05\n";
        let c = parse_config(text).unwrap();
        let again = parse_config(&c.to_config_string()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.scan.write.len(), 3);
        assert!(c.scan.write[1].state().fidelity(&PolarizationState::D) < 1.0);
    }
}
