use crate::curve::SignalCurve;
use crate::error::{Error, Result};
use crate::polarization::wrap_tau;

use super::fit::linear_lstsq;

/// First-harmonic description of an angle scan:
/// `value = mean + amplitude·cos(angle − phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleHarmonic {
    pub mean: f64,
    pub amplitude: f64,
    pub phase: f64,
    /// `amplitude / (mean − background)`, 1 for a full-contrast sinusoid.
    pub contrast: f64,
}

/// Fits the 2π-periodic first harmonic to an angle scan.
pub fn fit_angle_curve(curve: &SignalCurve) -> Result<AngleHarmonic> {
    let x = &curve.abscissa;
    if x.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: x.len(),
        });
    }
    let (c, _, sv) = linear_lstsq(
        x.len(),
        3,
        |i, row| {
            let (s, co) = x[i].sin_cos();
            row.copy_from_slice(&[1.0, co, s]);
        },
        &curve.values,
    )
    .ok_or_else(|| Error::MalformedCurve("angle grid cannot resolve a harmonic".into()))?;
    if sv.min() < 1e-10 * sv.max() {
        return Err(Error::MalformedCurve(format!(
            "angle grid spans {} rad, too little to resolve a harmonic",
            x[x.len() - 1] - x[0]
        )));
    }
    let amplitude = c[1].hypot(c[2]);
    let base = c[0] - curve.meta.signal.background;
    Ok(AngleHarmonic {
        mean: c[0],
        amplitude,
        phase: wrap_tau(c[2].atan2(c[1])),
        contrast: if base > 0.0 {
            amplitude / base
        } else {
            f64::INFINITY
        },
    })
}
