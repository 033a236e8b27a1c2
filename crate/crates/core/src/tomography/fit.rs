//! Damped Gauss–Newton fit of the decaying-oscillation delay model
//!
//! ```text
//! I(Δτ) = B + I0·e^{-Δτ/τx}·(1 + A·cos(2πΔτ/T − phase))
//! ```
//!
//! Internally the fit runs on rates `(ω = 2π/T, γ = 1/τx)`, which keeps the
//! Jacobian well scaled and lets `γ` reach zero without overflow.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{DMatrix, DVector, Matrix6, Vector6};

use crate::curve::SignalCurve;
use crate::error::{Error, Result};
use crate::polarization::wrap_tau;

pub const MIN_POINTS: usize = 8;
const MAX_ITERATIONS: usize = 500;
/// Below this contrast the period and phase are reported as unidentifiable.
pub const MIN_IDENTIFIABLE_CONTRAST: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitModel {
    /// Oscillation period T, ps.
    pub period: f64,
    /// Envelope lifetime τx, ps. Infinite when no decay is resolved.
    pub lifetime: f64,
    /// Contrast A in `[0, 1]`.
    pub contrast: f64,
    /// Phase in `[0, 2π)`; maxima sit at `Δτ = phase·T/2π + k·T`.
    pub phase: f64,
    /// Level I0, counts.
    pub level: f64,
    /// Background B, counts.
    pub background: f64,
}

impl FitModel {
    pub fn eval(&self, t: f64) -> f64 {
        let envelope = if self.lifetime.is_infinite() {
            1.0
        } else {
            (-t / self.lifetime).exp()
        };
        self.background
            + self.level
                * envelope
                * (1.0 + self.contrast * (TAU * t / self.period - self.phase).cos())
    }

    fn to_params(self) -> Params {
        Params([
            TAU / self.period,
            if self.lifetime.is_infinite() {
                0.0
            } else {
                1.0 / self.lifetime
            },
            self.contrast,
            self.phase,
            self.level,
            self.background,
        ])
    }
}

/// One-sigma uncertainties from the local curvature of the cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitUncertainty {
    pub period: f64,
    pub lifetime: f64,
    pub contrast: f64,
    pub phase: f64,
    pub level: f64,
    pub background: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FitModel,
    pub uncertainty: FitUncertainty,
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    /// False when the contrast is too small for the period to mean anything.
    pub fn period_identifiable(&self) -> bool {
        self.uncertainty.period.is_finite()
    }

    /// `key = value` report, one parameter per line.
    pub fn report(&self) -> String {
        let m = &self.model;
        let u = &self.uncertainty;
        let rows = [
            ("period_ps", m.period, u.period),
            ("lifetime_ps", m.lifetime, u.lifetime),
            ("contrast", m.contrast, u.contrast),
            ("phase_rad", m.phase, u.phase),
            ("level", m.level, u.level),
            ("background", m.background, u.background),
        ];
        let mut out = String::new();
        for (k, v, s) in rows {
            out.push_str(&format!("{k} = {v}\n{k}_sigma = {s:e}\n"));
        }
        out.push_str(&format!("residual_rms = {:e}\n", self.residual_rms));
        out.push_str(&format!("converged = {}\n", self.converged));
        out.push_str(&format!("iterations = {}\n", self.iterations));
        out.push_str(&format!(
            "period_identifiable = {}\n",
            self.period_identifiable()
        ));
        out
    }
}

/// `[ω, γ, A, phase, I0, B]`.
#[derive(Debug, Clone, Copy)]
struct Params([f64; 6]);

impl Params {
    fn model(&self) -> FitModel {
        let [w, g, a, ph, i0, b] = self.0;
        FitModel {
            period: TAU / w,
            lifetime: if g > 0.0 { 1.0 / g } else { f64::INFINITY },
            contrast: a,
            phase: wrap_tau(ph),
            level: i0,
            background: b,
        }
    }
}

struct Problem<'a> {
    t: &'a [f64],
    y: &'a [f64],
    omega_min: f64,
}

impl Problem<'_> {
    fn cost(&self, p: &Params) -> f64 {
        let [w, g, a, ph, i0, b] = p.0;
        0.5 * self
            .t
            .iter()
            .zip(self.y)
            .map(|(&t, &y)| {
                let r = b + i0 * (-g * t).exp() * (1.0 + a * (w * t - ph).cos()) - y;
                r * r
            })
            .sum::<f64>()
    }

    /// Normal-equation pieces `JᵀJ` and `Jᵀr`.
    fn normal_equations(&self, p: &Params) -> (Matrix6<f64>, Vector6<f64>) {
        let [w, g, a, ph, i0, b] = p.0;
        let mut jtj = Matrix6::zeros();
        let mut jtr = Vector6::zeros();
        for (&t, &y) in self.t.iter().zip(self.y) {
            let e = (-g * t).exp();
            let (s, c) = (w * t - ph).sin_cos();
            let osc = 1.0 + a * c;
            let r = b + i0 * e * osc - y;
            let row = Vector6::new(
                -i0 * e * a * s * t,
                -t * i0 * e * osc,
                i0 * e * c,
                i0 * e * a * s,
                e * osc,
                1.0,
            );
            jtj += row * row.transpose();
            jtr += row * r;
        }
        (jtj, jtr)
    }

    fn project(&self, mut p: Params, prev: &Params) -> Params {
        let v = &mut p.0;
        if !(v[0] >= self.omega_min) {
            v[0] = self.omega_min.max(0.5 * prev.0[0]);
        }
        if !(v[1] >= 0.0) {
            v[1] = 0.0;
        }
        if v[2] < 0.0 {
            v[2] = -v[2];
            v[3] += PI;
        }
        v[2] = v[2].min(1.0);
        v[3] = wrap_tau(v[3]);
        p
    }

    fn step_size(&self, delta: &Vector6<f64>, p: &Params) -> f64 {
        let [w, g, _, _, i0, b] = p.0;
        let refs = [
            w,
            g.max(1e-6 * w),
            1.0,
            1.0,
            i0.abs().max(1e-300),
            b.abs().max(i0.abs()).max(1e-300),
        ];
        (0..6).map(|k| delta[k].abs() / refs[k]).fold(0.0, f64::max)
    }
}

struct Outcome {
    params: Params,
    cost: f64,
    converged: bool,
    iterations: usize,
}

fn levenberg_marquardt(problem: &Problem, start: Params) -> Outcome {
    let mut p = problem.project(start, &start);
    let mut cost = problem.cost(&p);
    let total: f64 = problem.y.iter().map(|y| y * y).sum();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        if cost <= 1e-30 * total {
            return Outcome {
                params: p,
                cost,
                converged: true,
                iterations,
            };
        }
        let (jtj, jtr) = problem.normal_equations(&p);
        let floor = 1e-12 * jtj.diagonal().max();
        loop {
            let mut damped = jtj;
            for k in 0..6 {
                damped[(k, k)] += lambda * jtj[(k, k)].max(floor);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                if lambda > 1e20 {
                    return Outcome {
                        params: p,
                        cost,
                        converged: true,
                        iterations,
                    };
                }
                continue;
            };
            let delta = chol.solve(&(-jtr));
            let mut trial = p;
            for k in 0..6 {
                trial.0[k] += delta[k];
            }
            let trial = problem.project(trial, &p);
            let trial_cost = problem.cost(&trial);
            if trial_cost.is_finite() && trial_cost < cost {
                let step = problem.step_size(&delta, &p);
                let gain = cost - trial_cost;
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-15);
                if step < 1e-10 || gain <= 1e-15 * cost {
                    return Outcome {
                        params: p,
                        cost,
                        converged: true,
                        iterations,
                    };
                }
                break;
            }
            lambda *= 4.0;
            if lambda > 1e20 {
                // no descent direction left: residual has stagnated
                return Outcome {
                    params: p,
                    cost,
                    converged: true,
                    iterations,
                };
            }
        }
    }
    Outcome {
        params: p,
        cost,
        converged: false,
        iterations,
    }
}

/// Linear least squares of `y` on the columns produced by `basis`.
pub(crate) fn linear_lstsq(
    rows: usize,
    cols: usize,
    basis: impl Fn(usize, &mut [f64]),
    y: &[f64],
) -> Option<(DVector<f64>, f64, DVector<f64>)> {
    let mut m = DMatrix::zeros(rows, cols);
    let mut buf = vec![0.0; cols];
    for i in 0..rows {
        basis(i, &mut buf);
        for j in 0..cols {
            m[(i, j)] = buf[j];
        }
    }
    let rhs = DVector::from_column_slice(y);
    let svd = m.clone().svd(true, true);
    let sv = svd.singular_values.clone();
    let x = svd.solve(&rhs, 1e-13 * sv.max()).ok()?;
    let rss = (&m * &x - &rhs).norm_squared();
    Some((x, rss, sv))
}

fn median_spacing(t: &[f64]) -> f64 {
    let mut d: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

/// Dominant angular frequency of the quadratically detrended curve and the
/// phase of that spectral component.
fn spectral_peak(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len();
    let t0 = t[0];
    let span = t[n - 1] - t0;
    let detrended: Vec<f64> = match linear_lstsq(
        n,
        3,
        |i, row| {
            let x = (t[i] - t0) / span;
            row.copy_from_slice(&[1.0, x, x * x]);
        },
        y,
    ) {
        Some((c, _, _)) => (0..n)
            .map(|i| {
                let x = (t[i] - t0) / span;
                y[i] - (c[0] + c[1] * x + c[2] * x * x)
            })
            .collect(),
        None => y.to_vec(),
    };
    let f_lo = 1.0 / span;
    let f_hi = 0.5 / median_spacing(t);
    let df = 1.0 / (8.0 * span);
    let bins = (((f_hi - f_lo) / df).floor() as usize).max(1);
    let power = |f: f64| {
        let w = TAU * f;
        let (mut re, mut im) = (0.0, 0.0);
        for (&ti, &di) in t.iter().zip(&detrended) {
            let (s, c) = (w * ti).sin_cos();
            re += di * c;
            im -= di * s;
        }
        (re * re + im * im, (re, im))
    };
    let spectrum: Vec<f64> = (0..=bins).map(|k| power(f_lo + k as f64 * df).0).collect();
    let k = spectrum
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let mut f = f_lo + k as f64 * df;
    if k > 0 && k < bins {
        let (a, b, c) = (spectrum[k - 1], spectrum[k], spectrum[k + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            f += 0.5 * (a - c) / denom * df;
        }
    }
    let (_, (re, im)) = power(f);
    // Σ cos(ωt − φ)·e^{-iωt} ∝ e^{-iφ}
    (TAU * f, wrap_tau(-im.atan2(re)))
}

/// Envelope decay rate from a log-linear fit to one-period window means.
fn envelope_rate(t: &[f64], y: &[f64], omega: f64) -> Option<f64> {
    let period = TAU / omega;
    let span = t[t.len() - 1] - t[0];
    let windows = (span / period).floor() as usize;
    if windows < 2 {
        return None;
    }
    let mut xs = Vec::new();
    let mut ls = Vec::new();
    for k in 0..windows {
        let lo = t[0] + k as f64 * period;
        let hi = lo + period;
        let (sum, cnt) = t
            .iter()
            .zip(y)
            .filter(|(&ti, _)| ti >= lo && ti < hi)
            .fold((0.0, 0usize), |(s, c), (_, &yi)| (s + yi, c + 1));
        if cnt == 0 {
            continue;
        }
        let mean = sum / cnt as f64;
        if mean <= 0.0 {
            return None;
        }
        xs.push(0.5 * (lo + hi));
        ls.push(mean.ln());
    }
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let ml = ls.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxl: f64 = xs.iter().zip(&ls).map(|(x, l)| (x - mx) * (l - ml)).sum();
    let rate = -sxl / sxx;
    rate.is_finite().then_some(rate)
}

/// Solves for `(B, I0, A, phase)` at fixed `(ω, γ)`; returns them with the RSS.
fn linear_stage(t: &[f64], y: &[f64], omega: f64, gamma: f64) -> Option<(Params, f64)> {
    let (x, rss, _) = linear_lstsq(
        t.len(),
        4,
        |i, row| {
            let e = (-gamma * t[i]).exp();
            let (s, c) = (omega * t[i]).sin_cos();
            row.copy_from_slice(&[1.0, e, e * c, e * s]);
        },
        y,
    )?;
    let (b, i0) = (x[0], x[1]);
    let amp = x[2].hypot(x[3]);
    let (a, ph) = if i0 > 0.0 {
        ((amp / i0).min(1.0), wrap_tau(x[3].atan2(x[2])))
    } else {
        (0.0, 0.0)
    };
    let i0 = if i0 > 0.0 {
        i0
    } else {
        y.iter().sum::<f64>() / y.len() as f64
    };
    Some((Params([omega, gamma, a, ph, i0, b]), rss))
}

fn initial_guess(t: &[f64], y: &[f64]) -> Params {
    let span = t[t.len() - 1] - t[0];
    let (omega, spectral_phase) = spectral_peak(t, y);
    let centre = envelope_rate(t, y, omega)
        .filter(|r| *r > 0.0)
        .unwrap_or(1.0 / span)
        .clamp(1e-3 / span, 100.0 / span);
    let mut best: Option<(Params, f64)> = None;
    for k in -8..=8 {
        let gamma = centre * 2f64.powf(k as f64 / 4.0);
        if let Some((p, rss)) = linear_stage(t, y, omega, gamma) {
            if best.as_ref().is_none_or(|(_, r)| rss < *r) {
                best = Some((p, rss));
            }
        }
    }
    match best {
        Some((p, _)) => p,
        None => {
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            Params([omega, centre, 0.5, spectral_phase, mean, 0.0])
        }
    }
}

fn uncertainties(problem: &Problem, p: &Params, cost: f64) -> FitUncertainty {
    let n = problem.t.len();
    let dof = n.saturating_sub(6).max(1) as f64;
    let sigma2 = 2.0 * cost / dof;
    let (jtj, _) = problem.normal_equations(p);
    let [w, g, a, ..] = p.0;
    let identifiable = a >= MIN_IDENTIFIABLE_CONTRAST;

    let mut var = [f64::INFINITY; 6];
    if identifiable {
        if let Some(inv) = jtj.try_inverse() {
            for k in 0..6 {
                var[k] = sigma2 * inv[(k, k)].abs();
            }
        }
    }
    if !identifiable || var.iter().any(|v| !v.is_finite()) {
        // drop ω and phase, which the data no longer constrain
        let idx = [1usize, 2, 4, 5];
        let sub = nalgebra::Matrix4::from_fn(|i, j| jtj[(idx[i], idx[j])]);
        if let Some(inv) = sub.try_inverse() {
            for (i, &k) in idx.iter().enumerate() {
                var[k] = sigma2 * inv[(i, i)].abs();
            }
        }
        var[0] = f64::INFINITY;
        var[3] = f64::INFINITY;
    }
    let sd = var.map(f64::sqrt);
    if identifiable && sd[2].is_finite() && a < 2.0 * sd[2] {
        var[0] = f64::INFINITY;
        var[3] = f64::INFINITY;
    }
    let sd_w = var[0].sqrt();
    FitUncertainty {
        period: TAU * sd_w / (w * w),
        lifetime: if g > 0.0 {
            sd[1] / (g * g)
        } else {
            f64::INFINITY
        },
        contrast: sd[2],
        phase: var[3].sqrt(),
        level: sd[4],
        background: sd[5],
    }
}

/// Least-squares fit of the delay model to a curve.
///
/// Without `init` the period comes from the strongest non-trivial spectral
/// line of the detrended data and the lifetime from a log-linear envelope
/// fit; level, background, contrast and phase then follow from a linear solve,
/// and the full model is refined from four phase-shifted starts.
pub fn fit_delay_curve(curve: &SignalCurve, init: Option<FitModel>) -> Result<FitResult> {
    let t = &curve.abscissa;
    let y = &curve.values;
    if t.len() < MIN_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_POINTS,
            got: t.len(),
        });
    }
    let span = t[t.len() - 1] - t[0];
    let problem = Problem {
        t,
        y,
        omega_min: PI / span,
    };
    let base = match init {
        Some(m) => {
            if m.period > span {
                return Err(Error::ShortSpan {
                    span,
                    period: m.period,
                });
            }
            m.to_params()
        }
        None => initial_guess(t, y),
    };

    let mut best: Option<Outcome> = None;
    for k in 0..4 {
        let mut start = base;
        start.0[3] = wrap_tau(start.0[3] + k as f64 * FRAC_PI_2);
        let out = levenberg_marquardt(&problem, start);
        if best.as_ref().is_none_or(|b| out.cost < b.cost) {
            best = Some(out);
        }
    }
    let best = best.expect("four starts ran");
    let residual_rms = (2.0 * best.cost / t.len() as f64).sqrt();
    Ok(FitResult {
        model: best.params.model(),
        uncertainty: uncertainties(&problem, &best.params, best.cost),
        residual_rms,
        converged: best.converged,
        iterations: best.iterations,
    })
}
