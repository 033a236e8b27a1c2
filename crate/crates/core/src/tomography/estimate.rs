use std::f64::consts::TAU;

use crate::curve::{ScanKind, SignalCurve};
use crate::dynamics::decay;
use crate::error::{Error, Result};
use crate::polarization::{orthogonal, stokes_from_jones, wrap_tau, PoincareAngles, StokesVector};

use super::fit::linear_lstsq;

/// Recovered write state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateEstimate {
    pub theta: f64,
    pub phi: f64,
    /// Length of the recovered Bloch vector, clamped to `[0, 1]`.
    pub purity: f64,
}

impl StateEstimate {
    pub fn angles(&self) -> PoincareAngles {
        PoincareAngles {
            theta: self.theta,
            phi: self.phi,
        }
    }

    /// Unit Bloch direction of the estimate.
    pub fn direction(&self) -> StokesVector {
        self.angles().stokes()
    }

    pub fn report(&self) -> String {
        format!(
            "theta_rad = {}\nphi_rad = {}\npurity = {}\n",
            self.theta, self.phi, self.purity
        )
    }
}

const PROBE_EPS: f64 = 1e-9;

/// Recovers `(θ, φ)` of the written spin from delay scans taken with
/// different probes.
///
/// Period, lifetime and coherence times are taken from the curves'
/// metadata. Every curve is then linear in the unknowns
/// `(B, c, c·b₁, c·b₂, c·b₃)` with `c` the common half-scale and `b` the
/// written Bloch vector, so all curves are solved jointly in one
/// least-squares problem. A polar probe fixes `b₃` through its mean level;
/// an equatorial probe fixes the transverse length through its contrast and
/// the azimuth through its phase at `Δτ = 0`. Only ratios to `c` enter the
/// result, so rescaling every curve by a common factor leaves it unchanged.
pub fn estimate_state(curves: &[SignalCurve]) -> Result<StateEstimate> {
    if curves.len() < 2 {
        return Err(Error::InsufficientProbes(format!(
            "need at least 2 curves, got {}",
            curves.len()
        )));
    }
    let first = &curves[0].meta;
    for (k, c) in curves.iter().enumerate() {
        let m = &c.meta;
        if m.scan != ScanKind::Delay {
            return Err(Error::InconsistentMetadata(format!(
                "curve {k} is a {} scan, not a delay scan",
                m.scan.as_str()
            )));
        }
        if m.dot != first.dot {
            return Err(Error::InconsistentMetadata(format!(
                "curve {k} has different dot parameters"
            )));
        }
        if m.path != first.path {
            return Err(Error::InconsistentMetadata(format!(
                "curve {k} uses a different write path"
            )));
        }
        match (m.write, first.write) {
            (Some(a), Some(b)) if a.fidelity(&b) < 1.0 - 1e-12 => {
                return Err(Error::InconsistentMetadata(format!(
                    "curve {k} has a different write polarization"
                )))
            }
            _ => {}
        }
        if c.len() < 3 {
            return Err(Error::TooFewPoints {
                needed: 3,
                got: c.len(),
            });
        }
        for (j, other) in curves[..k].iter().enumerate() {
            if other.meta.read.fidelity(&m.read) > 1.0 - 1e-12 {
                return Err(Error::InsufficientProbes(format!(
                    "curves {j} and {k} use the same probe"
                )));
            }
        }
    }

    let targets: Vec<StokesVector> = curves
        .iter()
        .map(|c| stokes_from_jones(&orthogonal(&c.meta.read)))
        .collect();
    if !targets.iter().any(|q| q.s3.abs() > PROBE_EPS) {
        return Err(Error::InsufficientProbes(
            "no probe with an H/V component".into(),
        ));
    }
    if !targets.iter().any(|q| q.s1.hypot(q.s2) > PROBE_EPS) {
        return Err(Error::InsufficientProbes(
            "no probe with an equatorial component".into(),
        ));
    }

    let dot = &first.dot;
    let omega = TAU / dot.period();
    let mut rows: Vec<(f64, StokesVector)> = Vec::new();
    let mut y = Vec::new();
    for (c, q) in curves.iter().zip(&targets) {
        for (t, v) in c.points() {
            rows.push((t, *q));
            y.push(v);
        }
    }
    let (x, _, sv) = linear_lstsq(
        rows.len(),
        5,
        |i, row| {
            let (t, q) = rows[i];
            let e = decay(t, dot.tau_x);
            let e2 = e * decay(t, dot.t2);
            let e1 = e * decay(t, dot.t1);
            let (s, co) = (omega * t).sin_cos();
            row.copy_from_slice(&[
                1.0,
                e,
                (q.s1 * co - q.s2 * s) * e2,
                (q.s1 * s + q.s2 * co) * e2,
                q.s3 * e1,
            ]);
        },
        &y,
    )
    .ok_or_else(|| Error::InsufficientProbes("least-squares solve failed".into()))?;
    if sv.min() < 1e-10 * sv.max() {
        return Err(Error::InsufficientProbes(
            "probe set and delay grid leave the spin underdetermined".into(),
        ));
    }
    let half_scale = x[1];
    if !(half_scale > 0.0) {
        return Err(Error::InsufficientProbes(
            "recovered signal level is not positive".into(),
        ));
    }
    let b = [x[2] / half_scale, x[3] / half_scale, x[4] / half_scale];
    let transverse = b[0].hypot(b[1]);
    let norm = transverse.hypot(b[2]);
    let theta = transverse.atan2(b[2]);
    let phi = if transverse <= 1e-12 * norm.max(1e-300) {
        0.0
    } else {
        wrap_tau((-b[0]).atan2(-b[1]))
    };
    Ok(StateEstimate {
        theta,
        phi,
        purity: norm.min(1.0),
    })
}
