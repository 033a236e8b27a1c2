use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use exciton_cli::config::ConfigError;
use exciton_cli::plot::render_svg;
use exciton_cli::{load_preset, run_experiment, Assignments, ExperimentConfig};
use exciton_core::curve::{parse_polarization, write_atomic};
use exciton_core::polarization::lcvr_forward;
use exciton_core::tomography::fit_angle_curve;
use exciton_core::{
    estimate_state, fit_delay_curve, locate_maxima, solve_lcvr_pair, Error as CoreError, Noise,
    ScanKind, SignalCurve,
};

#[derive(Parser)]
#[command(
    name = "exciton",
    version,
    about = "Two-pulse write/read simulator for exciton spin in a quantum dot"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Signal versus write/read delay.
    ScanDelay(ConfigFlags),
    /// Signal versus a Poincaré angle of the write polarization at fixed delay.
    ScanAngle {
        #[arg(long, value_enum)]
        vary: Vary,
        #[command(flatten)]
        flags: ConfigFlags,
    },
    /// Run a built-in configuration.
    Preset {
        #[arg(value_name = "NAME")]
        preset: String,
        #[command(flatten)]
        flags: ConfigFlags,
    },
    /// Fit a delay curve (or the first harmonic of an angle curve).
    Fit {
        csv: PathBuf,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct the written spin from delay curves with different probes.
    Estimate {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
    /// Retardances that turn H into the given polarization.
    SolveLcvr {
        /// H, V, D, Dbar, R, L or "(theta, phi)".
        #[arg(allow_hyphen_values = true)]
        pol: String,
    },
    /// Render curves to SVG.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long, short, default_value = "plot.svg")]
        out: PathBuf,
        #[arg(long)]
        title: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Vary {
    Phi,
    Theta,
}

/// One flag per configuration key; these override `--config`.
#[derive(Args, Default)]
struct ConfigFlags {
    /// Config file merged under the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    delta_gs: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    delta_es: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tau_x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    relax_depol: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pulse_duration: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    scale: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    background: Option<String>,
    /// none, poisson or gaussian:<sigma>
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// ground or excited
    #[arg(long)]
    path: Option<String>,
    /// Semicolon-separated list of H, V, D, Dbar, R, L or (theta, phi).
    #[arg(long)]
    write: Option<String>,
    #[arg(long)]
    read: Option<String>,
    /// start:stop:step, linspace(a, b, n) or a list; `T` suffix for periods.
    #[arg(long, allow_hyphen_values = true)]
    delays: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    angles: Option<String>,
    #[arg(long)]
    delay: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lcvr_offset: Option<String>,
    /// Output directory (config key `dir`).
    #[arg(long = "out-dir")]
    dir: Option<String>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    plot: Option<String>,
}

impl ConfigFlags {
    fn assignments(&self) -> Assignments {
        let mut a = Assignments::default();
        let pairs = [
            ("delta_gs", &self.delta_gs),
            ("delta_es", &self.delta_es),
            ("tau_x", &self.tau_x),
            ("t2", &self.t2),
            ("t1", &self.t1),
            ("relax_depol", &self.relax_depol),
            ("pulse_duration", &self.pulse_duration),
            ("scale", &self.scale),
            ("background", &self.background),
            ("noise", &self.noise),
            ("seed", &self.seed),
            ("path", &self.path),
            ("write", &self.write),
            ("read", &self.read),
            ("delays", &self.delays),
            ("angles", &self.angles),
            ("delay", &self.delay),
            ("lcvr_offset", &self.lcvr_offset),
            ("dir", &self.dir),
            ("name", &self.name),
            ("plot", &self.plot),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                a.set(key, v.clone());
            }
        }
        a
    }
}

enum Failure {
    /// Bad input: exit status 2.
    Validation(String),
    /// Everything else: exit status 1.
    Runtime(String),
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Io(_) | CoreError::NoMaxima | CoreError::LcvrNoConvergence { .. } => {
                Failure::Runtime(e.to_string())
            }
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Validation(e.to_string())
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn load_curve(path: &Path) -> Result<SignalCurve, Failure> {
    SignalCurve::from_csv_str(&read_file(path)?)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn build(flags: &ConfigFlags, scan: &str) -> Result<ExperimentConfig, Failure> {
    let mut a = match &flags.config {
        Some(path) => Assignments::parse(&read_file(path)?)
            .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?,
        None => Assignments::default(),
    };
    a.set("scan", scan);
    a.merge(flags.assignments());
    let from_file = flags.config.as_ref();
    a.build().map_err(|e| match (from_file, e.line) {
        (Some(p), Some(_)) => Failure::Validation(format!("{}: {e}", p.display())),
        _ => e.into(),
    })
}

fn execute(cfg: &ExperimentConfig) -> Result<(), Failure> {
    for w in cfg.dot.warnings() {
        eprintln!("warning: {w}");
    }
    for path in run_experiment(cfg)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::ScanDelay(flags) => execute(&build(&flags, "delay")?),
        Command::ScanAngle { vary, flags } => {
            let scan = match vary {
                Vary::Phi => "angle_phi",
                Vary::Theta => "angle_theta",
            };
            execute(&build(&flags, scan)?)
        }
        Command::Preset { preset, flags } => {
            if flags.config.is_some() {
                return Err(Failure::Validation(
                    "`--config` cannot be combined with a preset".into(),
                ));
            }
            execute(&load_preset(&preset, flags.assignments())?)
        }
        Command::Fit { csv, out } => {
            let curve = load_curve(&csv)?;
            let report = if curve.meta.scan == ScanKind::Delay {
                let fit = fit_delay_curve(&curve, None)?;
                // on noisy data the raw samples have spurious local maxima,
                // so read them off the fitted model instead
                let smooth = if curve.meta.signal.noise == Noise::None {
                    curve.clone()
                } else {
                    let mut c = curve.clone();
                    c.values = c.abscissa.iter().map(|&t| fit.model.eval(t)).collect();
                    c
                };
                let maxima = match locate_maxima(&smooth) {
                    Ok(m) => m
                        .iter()
                        .map(|x| format!("{x:.6}"))
                        .collect::<Vec<_>>()
                        .join(", "),
                    Err(CoreError::NoMaxima) => "none".into(),
                    Err(e) => return Err(e.into()),
                };
                format!("{}maxima_ps = {maxima}\n", fit.report())
            } else {
                let h = fit_angle_curve(&curve)?;
                format!(
                    "mean = {}\namplitude = {}\nphase_rad = {}\ncontrast = {}\n",
                    h.mean, h.amplitude, h.phase, h.contrast
                )
            };
            print!("{report}");
            if let Some(path) = out {
                write_atomic(&path, report.as_bytes())?;
            }
            Ok(())
        }
        Command::Estimate { csv } => {
            let curves = csv
                .iter()
                .map(|p| load_curve(p))
                .collect::<Result<Vec<_>, _>>()?;
            print!("{}", estimate_state(&curves)?.report());
            Ok(())
        }
        Command::SolveLcvr { pol } => {
            let target = parse_polarization(&pol).map_err(Failure::Validation)?;
            let (r1, r2) = solve_lcvr_pair(&target)?;
            println!("retardance1_rad = {r1}");
            println!("retardance2_rad = {r2}");
            println!("fidelity = {}", lcvr_forward(r1, r2).fidelity(&target));
            Ok(())
        }
        Command::Plot { csv, out, title } => {
            let curves = csv
                .iter()
                .map(|p| load_curve(p))
                .collect::<Result<Vec<_>, _>>()?;
            let refs: Vec<&SignalCurve> = curves.iter().collect();
            let title = title.unwrap_or_else(|| {
                csv[0]
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            });
            write_atomic(&out, render_svg(&refs, &title)?.as_bytes())?;
            println!("{}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
