//! Biexciton readout: projection probability, PL signal and scan generators.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::curve::{CurveMeta, ScanKind, SignalCurve};
use crate::dynamics::{evolve, write_state, DotParameters, ExcitonState, WritePath};
use crate::error::{Error, Result};
use crate::polarization::{
    jones_from_angles, lcvr_forward, orthogonal, solve_lcvr_pair, stokes_from_jones,
    PoincareAngles, PolarizationState,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    None,
    Poisson,
    Gaussian { sigma: f64 },
}

/// Maps biexciton generation probability to detected counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalParams {
    pub scale: f64,
    pub background: f64,
    pub noise: Noise,
    pub seed: u64,
}

impl Default for SignalParams {
    fn default() -> Self {
        Self {
            scale: 10_000.0,
            background: 0.0,
            noise: Noise::None,
            seed: 0,
        }
    }
}

impl SignalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "scale",
                value: self.scale,
                reason: "must be positive and finite",
            });
        }
        if !(self.background >= 0.0 && self.background.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "background",
                value: self.background,
                reason: "must be non-negative and finite",
            });
        }
        if let Noise::Gaussian { sigma } = self.noise {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "sigma",
                    value: sigma,
                    reason: "must be non-negative and finite",
                });
            }
        }
        Ok(())
    }

    fn noiseless(&self) -> Self {
        Self {
            noise: Noise::None,
            ..*self
        }
    }
}

/// Probability that the probe creates a biexciton.
///
/// The electron-singlet/hole-triplet resonance absorbs cross-linear pairs, so
/// the probe weighs the spin's overlap with the polarization orthogonal to
/// it: `p·(1 + b·ŝ⊥)/2`.
pub fn projection_probability(state: &ExcitonState, probe: &PolarizationState) -> f64 {
    let target = stokes_from_jones(&orthogonal(probe));
    let overlap = state.bloch_vector().dot(&target);
    let p = state.population * 0.5 * (1.0 + overlap);
    p.clamp(0.0, state.population.max(0.0))
}

fn mean_signal(
    write: &PolarizationState,
    path: WritePath,
    probe: &PolarizationState,
    delay: f64,
    dot: &DotParameters,
    sig: &SignalParams,
) -> Result<f64> {
    if !(delay >= 0.0) {
        return Err(Error::NegativeTime(delay));
    }
    let spin = evolve(&write_state(write, path, dot), delay, dot)?;
    Ok(sig.scale * projection_probability(&spin, probe) + sig.background)
}

/// Detected counts for one write/read pair at one delay. Noise, if any, is
/// drawn as for point 0 of a curve.
pub fn pl_signal(
    write: &PolarizationState,
    path: WritePath,
    probe: &PolarizationState,
    delay: f64,
    dot: &DotParameters,
    sig: &SignalParams,
) -> Result<f64> {
    sig.validate()?;
    let mean = mean_signal(write, path, probe, delay, dot, sig)?;
    draw(mean, 0, sig)
}

pub fn delay_scan(
    write: &PolarizationState,
    path: WritePath,
    probe: &PolarizationState,
    delays: &[f64],
    dot: &DotParameters,
    sig: &SignalParams,
) -> Result<SignalCurve> {
    dot.validate()?;
    sig.validate()?;
    let values = delays
        .iter()
        .map(|&d| mean_signal(write, path, probe, d, dot, sig))
        .collect::<Result<Vec<_>>>()?;
    let meta = CurveMeta {
        write: Some(*write),
        read: *probe,
        scan: ScanKind::Delay,
        path,
        delay: None,
        lcvr_offset: None,
        dot: *dot,
        signal: sig.noiseless(),
    };
    let curve = SignalCurve::new(delays.to_vec(), values, meta)?;
    add_noise(&curve, sig)
}

/// Which Poincaré angle an angle scan sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleSweep {
    /// `phi` around the equator at `theta = π/2`; any finite angle.
    Phi,
    /// `theta` along the H–L–V–R great circle: `[0, π]` at `phi = 0`, and
    /// `(π, 2π]` continues through V back to H at `phi = π`.
    Theta,
}

impl AngleSweep {
    fn scan_kind(self) -> ScanKind {
        match self {
            Self::Phi => ScanKind::AnglePhi,
            Self::Theta => ScanKind::AngleTheta,
        }
    }

    /// Target write polarization for one abscissa value.
    pub fn target(self, angle: f64) -> Result<PolarizationState> {
        let angles = match self {
            Self::Phi => PoincareAngles::new(FRAC_PI_2, angle)?,
            Self::Theta => {
                if !(0.0..=TAU).contains(&angle) {
                    return Err(Error::InvalidParameter {
                        name: "theta",
                        value: angle,
                        reason: "theta sweep must lie in [0, 2pi]",
                    });
                }
                if angle <= PI {
                    PoincareAngles::new(angle, 0.0)?
                } else {
                    PoincareAngles::new(TAU - angle, PI)?
                }
            }
        };
        Ok(jones_from_angles(angles))
    }
}

/// How the write polarization is physically produced.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum WriteOptics {
    /// Exactly the requested polarization.
    #[default]
    Ideal,
    /// Through the two-LCVR train, solved for the requested polarization and
    /// then driven with both retardances off by `retardance_offset` rad.
    Lcvr { retardance_offset: f64 },
}

impl WriteOptics {
    pub fn prepare(&self, target: &PolarizationState) -> Result<PolarizationState> {
        match *self {
            Self::Ideal => Ok(*target),
            Self::Lcvr { retardance_offset } => {
                let (r1, r2) = solve_lcvr_pair(target)?;
                Ok(lcvr_forward(r1 + retardance_offset, r2 + retardance_offset))
            }
        }
    }
}

pub fn angle_scan(
    vary: AngleSweep,
    angles: &[f64],
    probe: &PolarizationState,
    delay: f64,
    path: WritePath,
    dot: &DotParameters,
    sig: &SignalParams,
) -> Result<SignalCurve> {
    angle_scan_with(
        vary,
        angles,
        probe,
        delay,
        path,
        dot,
        sig,
        WriteOptics::Ideal,
    )
}

/// [`angle_scan`] with an explicit model of the write-side optics.
#[allow(clippy::too_many_arguments)]
pub fn angle_scan_with(
    vary: AngleSweep,
    angles: &[f64],
    probe: &PolarizationState,
    delay: f64,
    path: WritePath,
    dot: &DotParameters,
    sig: &SignalParams,
    optics: WriteOptics,
) -> Result<SignalCurve> {
    dot.validate()?;
    sig.validate()?;
    let values = angles
        .iter()
        .map(|&a| {
            let write = optics.prepare(&vary.target(a)?)?;
            mean_signal(&write, path, probe, delay, dot, sig)
        })
        .collect::<Result<Vec<_>>>()?;
    let meta = CurveMeta {
        write: None,
        read: *probe,
        scan: vary.scan_kind(),
        path,
        delay: Some(delay),
        lcvr_offset: match optics {
            WriteOptics::Ideal => None,
            WriteOptics::Lcvr { retardance_offset } => Some(retardance_offset),
        },
        dot: *dot,
        signal: sig.noiseless(),
    };
    let curve = SignalCurve::new(angles.to_vec(), values, meta)?;
    add_noise(&curve, sig)
}

/// Per-point generator: the stream is selected by the point index, so the
/// draw for a point does not depend on evaluation order.
fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn draw(mean: f64, index: usize, sig: &SignalParams) -> Result<f64> {
    match sig.noise {
        Noise::None => Ok(mean),
        Noise::Poisson => {
            if !(mean >= 0.0) {
                return Err(Error::NegativeMean(mean, index));
            }
            if mean == 0.0 {
                return Ok(0.0);
            }
            let dist = Poisson::new(mean).map_err(|_| Error::NegativeMean(mean, index))?;
            Ok(dist.sample(&mut point_rng(sig.seed, index)))
        }
        Noise::Gaussian { sigma } => {
            if sigma == 0.0 {
                return Ok(mean);
            }
            let dist = Normal::new(0.0, sigma).map_err(|_| Error::InvalidParameter {
                name: "sigma",
                value: sigma,
                reason: "must be non-negative and finite",
            })?;
            Ok(mean + dist.sample(&mut point_rng(sig.seed, index)))
        }
    }
}

/// Replaces each value by a noisy draw around it and records `sig` in the
/// curve metadata.
pub fn add_noise(curve: &SignalCurve, sig: &SignalParams) -> Result<SignalCurve> {
    sig.validate()?;
    let values = curve
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| draw(v, i, sig))
        .collect::<Result<Vec<_>>>()?;
    let mut out = curve.clone();
    out.values = values;
    out.meta.signal = *sig;
    Ok(out)
}
