//! Write map and free evolution of the exciton spin.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::polarization::{stokes_from_jones, PolarizationState, StokesVector};

/// Reduced Planck constant in μeV·ps.
pub const HBAR_UEV_PS: f64 = 658.211_956_9;

/// Physical constants of one dot. Energies in μeV, times in ps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DotParameters {
    /// Fine-structure splitting of the ground exciton.
    pub delta_gs: f64,
    /// Splitting of the excited exciton. Informational only.
    pub delta_es: f64,
    /// Radiative lifetime of the exciton population.
    pub tau_x: f64,
    /// Transverse spin coherence time; `f64::INFINITY` disables it.
    pub t2: f64,
    /// Longitudinal (H/V population) relaxation time; infinite by default.
    pub t1: f64,
    /// Fraction of transverse spin lost on excited-state relaxation.
    pub relax_depol: f64,
    /// Write pulse duration, only used for the validity warning.
    pub pulse_duration: f64,
}

impl Default for DotParameters {
    fn default() -> Self {
        Self {
            delta_gs: 34.0,
            delta_es: 60.0,
            tau_x: 1000.0,
            t2: f64::INFINITY,
            t1: f64::INFINITY,
            relax_depol: 0.0,
            pulse_duration: 10.0,
        }
    }
}

impl DotParameters {
    pub fn validate(&self) -> Result<()> {
        let positive = |name, value: f64| {
            if value > 0.0 && !value.is_nan() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive",
                })
            }
        };
        positive("delta_gs", self.delta_gs)?;
        if !self.delta_gs.is_finite() {
            return Err(Error::InvalidParameter {
                name: "delta_gs",
                value: self.delta_gs,
                reason: "must be finite",
            });
        }
        positive("delta_es", self.delta_es)?;
        positive("tau_x", self.tau_x)?;
        positive("t2", self.t2)?;
        positive("t1", self.t1)?;
        if !(0.0..=1.0).contains(&self.relax_depol) {
            return Err(Error::InvalidParameter {
                name: "relax_depol",
                value: self.relax_depol,
                reason: "must lie in [0, 1]",
            });
        }
        if !(self.pulse_duration >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "pulse_duration",
                value: self.pulse_duration,
                reason: "must be non-negative",
            });
        }
        Ok(())
    }

    /// Precession period of the ground exciton.
    pub fn period(&self) -> f64 {
        TAU * HBAR_UEV_PS / self.delta_gs
    }

    /// Conditions under which the instantaneous-pulse write model is
    /// questionable.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let limit = self.period() / 10.0;
        if self.pulse_duration > limit {
            out.push(format!(
                "pulse duration {} ps exceeds T/10 = {:.3} ps; instantaneous write is a poor approximation",
                self.pulse_duration, limit
            ));
        }
        out
    }
}

/// Exciton spin as a Bloch vector plus surviving population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitonState {
    pub bloch: [f64; 3],
    pub population: f64,
}

impl ExcitonState {
    pub fn pure(state: &PolarizationState) -> Self {
        Self {
            bloch: stokes_from_jones(state).to_array(),
            population: 1.0,
        }
    }

    pub fn bloch_vector(&self) -> StokesVector {
        StokesVector::from_array(self.bloch)
    }

    pub fn bloch_norm(&self) -> f64 {
        self.bloch_vector().norm()
    }
}

/// Which exciton resonance the write pulse addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WritePath {
    GroundResonant,
    ExcitedResonant,
}

impl WritePath {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::GroundResonant => "ground",
            Self::ExcitedResonant => "excited",
        }
    }
}

impl std::str::FromStr for WritePath {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "ground" => Ok(Self::GroundResonant),
            "excited" => Ok(Self::ExcitedResonant),
            other => Err(format!(
                "unknown write path `{other}` (expected ground or excited)"
            )),
        }
    }
}

/// The pulse polarization is copied onto the spin. The excited path relaxes
/// instantaneously and may shed part of the transverse spin.
pub fn write_state(
    pulse: &PolarizationState,
    path: WritePath,
    params: &DotParameters,
) -> ExcitonState {
    let mut state = ExcitonState::pure(pulse);
    if path == WritePath::ExcitedResonant {
        let keep = 1.0 - params.relax_depol;
        state.bloch[0] *= keep;
        state.bloch[1] *= keep;
    }
    state
}

/// `T = 2πħ/δ`.
pub fn precession_period(delta: f64) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            reason: "must be positive and finite",
        });
    }
    Ok(TAU * HBAR_UEV_PS / delta)
}

/// `e^{-dt/tau}`, treating an infinite time constant as no decay.
pub(crate) fn decay(dt: f64, tau: f64) -> f64 {
    if tau.is_infinite() {
        1.0
    } else {
        (-dt / tau).exp()
    }
}

/// Advances the spin by `dt` picoseconds.
///
/// The transverse part turns by `β = 2π·dt/T` in the sense L → D̄ → R → D and
/// shrinks with `t2`; the H/V component shrinks with `t1`; the population
/// decays with `tau_x`.
pub fn evolve(state: &ExcitonState, dt: f64, params: &DotParameters) -> Result<ExcitonState> {
    if !(dt >= 0.0) {
        return Err(Error::NegativeTime(dt));
    }
    let beta = TAU * dt / params.period();
    let (sb, cb) = beta.sin_cos();
    let [s1, s2, s3] = state.bloch;
    let shrink = decay(dt, params.t2);
    Ok(ExcitonState {
        bloch: [
            (s1 * cb + s2 * sb) * shrink,
            (-s1 * sb + s2 * cb) * shrink,
            s3 * decay(dt, params.t1),
        ],
        population: state.population * decay(dt, params.tau_x),
    })
}
