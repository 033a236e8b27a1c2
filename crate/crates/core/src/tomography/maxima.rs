use crate::curve::{ScanKind, SignalCurve};
use crate::dynamics::decay;
use crate::error::{Error, Result};

/// Positions of the local maxima of a curve, refined by fitting a parabola
/// through each peak sample and its neighbours.
///
/// Delay scans are first corrected with the background and lifetime recorded
/// in their metadata, so the positions are those of the spin oscillation
/// rather than of the decaying product. A maximum at the first sample is
/// reported only when the curve also has interior maxima and peaks there. Meant for
/// noiseless or smoothed data; every noise wiggle counts as a maximum.
pub fn locate_maxima(curve: &SignalCurve) -> Result<Vec<f64>> {
    let x = &curve.abscissa;
    let n = x.len();
    if n < 3 {
        return Err(Error::NoMaxima);
    }
    let u: Vec<f64> = match curve.meta.scan {
        ScanKind::Delay => {
            let b = curve.meta.signal.background;
            let tau = curve.meta.dot.tau_x;
            curve
                .points()
                .map(|(t, v)| (v - b) / decay(t, tau))
                .collect()
        }
        _ => curve.values.clone(),
    };
    let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * scale;

    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if u[i] - u[i - 1] > tol && u[i] >= u[i + 1] {
            let p = (x[i - 1], u[i - 1]);
            let q = (x[i], u[i]);
            let r = (x[i + 1], u[i + 1]);
            peaks.push(parabola_vertex(p, q, r).map_or(x[i], |v| v.clamp(x[i - 1], x[i + 1])));
        }
    }
    if peaks.is_empty() {
        return Err(Error::NoMaxima);
    }
    // the first sample is a maximum only if the curve actually turns over
    // there, not merely because it is falling
    if u[0] - u[1] > tol {
        let half_step = 0.5 * (x[1] - x[0]);
        if let Some(v) = parabola_vertex((x[0], u[0]), (x[1], u[1]), (x[2], u[2])) {
            if v >= x[0] - half_step {
                peaks.insert(0, x[0]);
            }
        }
    }
    Ok(peaks)
}

/// Abscissa of the vertex of the parabola through three points, if it opens
/// downward.
fn parabola_vertex(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Option<f64> {
    let (x0, y0) = a;
    let (x1, y1) = b;
    let (x2, y2) = c;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    if curv >= 0.0 {
        return None;
    }
    // vertex of y = y0 + d01·(x − x0) + curv·(x − x0)(x − x1)
    Some(0.5 * (x0 + x1) - d01 / (2.0 * curv))
}
