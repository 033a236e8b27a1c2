//! Turns a configuration into curves and files.

use std::path::PathBuf;

use exciton_core::curve::write_atomic;
use exciton_core::{
    angle_scan_with, delay_scan, AngleSweep, Result, ScanKind, SignalCurve, WriteOptics,
};

use crate::config::ExperimentConfig;
use crate::plot::render_svg;

/// One simulated curve and the file stem it is saved under.
#[derive(Debug, Clone)]
pub struct NamedCurve {
    pub stem: String,
    pub curve: SignalCurve,
}

/// Simulates every write/read pair of the configuration. With several
/// curves, curve `k` draws its noise from seed `seed + k`.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Vec<NamedCurve>> {
    let period = cfg.dot.period();
    let scan = &cfg.scan;
    let pairs: Vec<_> = match scan.kind {
        ScanKind::Delay => scan
            .write
            .iter()
            .flat_map(|w| scan.read.iter().map(move |r| (Some(*w), *r)))
            .collect(),
        _ => scan.read.iter().map(|r| (None, *r)).collect(),
    };
    let single = pairs.len() == 1;
    pairs
        .into_iter()
        .enumerate()
        .map(|(k, (write, read))| {
            let mut sig = cfg.signal;
            sig.seed = sig.seed.wrapping_add(k as u64);
            let curve = match (scan.kind, write) {
                (ScanKind::Delay, Some(w)) => delay_scan(
                    &w.state(),
                    scan.path,
                    &read.state(),
                    &scan.delays.values(period),
                    &cfg.dot,
                    &sig,
                )?,
                (kind, _) => {
                    let vary = if kind == ScanKind::AnglePhi {
                        AngleSweep::Phi
                    } else {
                        AngleSweep::Theta
                    };
                    let optics = match scan.lcvr_offset {
                        Some(retardance_offset) => WriteOptics::Lcvr { retardance_offset },
                        None => WriteOptics::Ideal,
                    };
                    angle_scan_with(
                        vary,
                        &scan.angles.values(period),
                        &read.state(),
                        scan.delay.resolve(period),
                        scan.path,
                        &cfg.dot,
                        &sig,
                        optics,
                    )?
                }
            };
            let stem = if single {
                cfg.output.name.clone()
            } else {
                match write {
                    Some(w) => format!("{}_{}{}", cfg.output.name, w.tag(), read.tag()),
                    None => format!("{}_{}", cfg.output.name, read.tag()),
                }
            };
            Ok(NamedCurve { stem, curve })
        })
        .collect()
}

/// Simulates and writes one CSV per curve, plus an SVG of all of them when
/// plotting is on. Returns the files written.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let curves = simulate(cfg)?;
    std::fs::create_dir_all(&cfg.output.dir)?;
    let mut written = Vec::new();
    for c in &curves {
        let path = cfg.output.dir.join(format!("{}.csv", c.stem));
        c.curve.save(&path)?;
        written.push(path);
    }
    if cfg.output.plot {
        let refs: Vec<&SignalCurve> = curves.iter().map(|c| &c.curve).collect();
        let path = cfg.output.dir.join(format!("{}.svg", cfg.output.name));
        write_atomic(&path, render_svg(&refs, &cfg.output.name)?.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}
