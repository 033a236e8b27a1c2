//! Pure-state polarization calculus over the (H, V) basis.
//!
//! The same two-component vector describes the light pulse and the exciton
//! spin it writes, so everything here doubles as Bloch-sphere machinery.
//! Chart conventions (see `CONVENTIONS.md`):
//!
//! - Stokes axes: `s1` toward D, `s2` toward R, `s3` toward H.
//! - `theta` is the polar angle from H, `phi` the equatorial angle measured
//!   from L toward D̄, so `s = (-sinθ sinφ, -sinθ cosφ, cosθ)`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Below this modulus an amplitude is treated as exactly zero.
const POLE_EPS: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const S: f64 = FRAC_1_SQRT_2;

/// Normalized Jones vector `cH·|H⟩ + cV·|V⟩` with the global phase fixed so
/// that `cH` is real and non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    ch: Complex64,
    cv: Complex64,
}

impl PolarizationState {
    pub const H: Self = Self { ch: ONE, cv: ZERO };
    pub const V: Self = Self { ch: ZERO, cv: ONE };
    pub const D: Self = Self {
        ch: Complex64::new(S, 0.0),
        cv: Complex64::new(S, 0.0),
    };
    pub const DBAR: Self = Self {
        ch: Complex64::new(S, 0.0),
        cv: Complex64::new(-S, 0.0),
    };
    pub const R: Self = Self {
        ch: Complex64::new(S, 0.0),
        cv: Complex64::new(0.0, S),
    };
    pub const L: Self = Self {
        ch: Complex64::new(S, 0.0),
        cv: Complex64::new(0.0, -S),
    };

    /// Normalizes and canonicalizes an arbitrary amplitude pair.
    pub fn new(ch: Complex64, cv: Complex64) -> Result<Self> {
        let norm = (ch.norm_sqr() + cv.norm_sqr()).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroNorm(ch.norm(), cv.norm()));
        }
        Ok(Self::canonical(ch / norm, cv / norm))
    }

    fn canonical(ch: Complex64, cv: Complex64) -> Self {
        let mag = ch.norm();
        if mag < POLE_EPS {
            return Self::V;
        }
        let rot = ch.conj() / mag;
        Self {
            ch: Complex64::new(mag, 0.0),
            cv: cv * rot,
        }
    }

    pub fn ch(&self) -> Complex64 {
        self.ch
    }

    pub fn cv(&self) -> Complex64 {
        self.cv
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        [self.ch, self.cv]
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.ch.conj() * other.ch + self.cv.conj() * other.cv
    }

    /// `|⟨self|other⟩|²`, independent of global phase.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        (self.ch.norm_sqr() + self.cv.norm_sqr()).sqrt()
    }

    pub fn stokes(&self) -> StokesVector {
        stokes_from_jones(self)
    }

    pub fn angles(&self) -> PoincareAngles {
        angles_from_jones(self)
    }
}

impl From<NamedPolarization> for PolarizationState {
    fn from(n: NamedPolarization) -> Self {
        n.state()
    }
}

/// The six polarizations with names in the lab: H, V, D, D̄, R, L.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedPolarization {
    H,
    V,
    D,
    Dbar,
    R,
    L,
}

impl NamedPolarization {
    pub const ALL: [NamedPolarization; 6] =
        [Self::H, Self::V, Self::D, Self::Dbar, Self::R, Self::L];

    pub fn state(self) -> PolarizationState {
        match self {
            Self::H => PolarizationState::H,
            Self::V => PolarizationState::V,
            Self::D => PolarizationState::D,
            Self::Dbar => PolarizationState::DBAR,
            Self::R => PolarizationState::R,
            Self::L => PolarizationState::L,
        }
    }

    /// Returns the name whose state has fidelity within `1e-12` of `state`.
    pub fn identify(state: &PolarizationState) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.state().fidelity(state) > 1.0 - 1e-12)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::H => "H",
            Self::V => "V",
            Self::D => "D",
            Self::Dbar => "Dbar",
            Self::R => "R",
            Self::L => "L",
        }
    }
}

impl fmt::Display for NamedPolarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NamedPolarization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "H" => Ok(Self::H),
            "V" => Ok(Self::V),
            "D" => Ok(Self::D),
            "Dbar" | "D̄" | "A" => Ok(Self::Dbar),
            "R" => Ok(Self::R),
            "L" => Ok(Self::L),
            other => Err(format!(
                "unknown polarization `{other}` (expected H, V, D, Dbar, R or L)"
            )),
        }
    }
}

/// Spherical coordinates on the Poincaré (equivalently Bloch) sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareAngles {
    pub theta: f64,
    pub phi: f64,
}

impl PoincareAngles {
    /// Rejects `theta` outside `[0, π]`; `phi` is wrapped into `[0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidParameter {
                name: "theta",
                value: theta,
                reason: "must lie in [0, pi]",
            });
        }
        if !phi.is_finite() {
            return Err(Error::InvalidParameter {
                name: "phi",
                value: phi,
                reason: "must be finite",
            });
        }
        Ok(Self {
            theta,
            phi: wrap_tau(phi),
        })
    }

    /// Point on the unit sphere for these angles.
    pub fn stokes(&self) -> StokesVector {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        StokesVector {
            s1: -st * sp,
            s2: -st * cp,
            s3: ct,
        }
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_tau(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Unit vector on the Poincaré sphere.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StokesVector {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    pub fn new(s1: f64, s2: f64, s3: f64) -> Self {
        Self { s1, s2, s3 }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.s1, self.s2, self.s3]
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.s1 * o.s1 + self.s2 * o.s2 + self.s3 * o.s3
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Great-circle angle to `o`, both assumed non-zero.
    pub fn angle_to(&self, o: &Self) -> f64 {
        let cross = [
            self.s2 * o.s3 - self.s3 * o.s2,
            self.s3 * o.s1 - self.s1 * o.s3,
            self.s1 * o.s2 - self.s2 * o.s1,
        ];
        let c = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        c.atan2(self.dot(o))
    }
}

impl std::ops::Neg for StokesVector {
    type Output = Self;

    fn neg(self) -> Self {
        Self::new(-self.s1, -self.s2, -self.s3)
    }
}

/// Maps Poincaré angles to a canonical Jones vector.
pub fn jones_from_angles(angles: PoincareAngles) -> PolarizationState {
    let half = 0.5 * angles.theta;
    let alpha = -(FRAC_PI_2 + angles.phi);
    let ch = Complex64::new(half.cos(), 0.0);
    let cv = Complex64::from_polar(half.sin(), alpha);
    PolarizationState::canonical(ch, cv)
}

/// Inverse of [`jones_from_angles`]; `phi` is 0 at the poles.
pub fn angles_from_jones(state: &PolarizationState) -> PoincareAngles {
    let a = state.ch.norm();
    let b = state.cv.norm();
    let theta = 2.0 * b.atan2(a);
    if a < POLE_EPS || b < POLE_EPS {
        return PoincareAngles { theta, phi: 0.0 };
    }
    let alpha = state.cv.arg() - state.ch.arg();
    PoincareAngles {
        theta,
        phi: wrap_tau(-alpha - FRAC_PI_2),
    }
}

/// The state orthogonal to `state`, i.e. its antipode on the sphere.
pub fn orthogonal(state: &PolarizationState) -> PolarizationState {
    PolarizationState::canonical(-state.cv.conj(), state.ch.conj())
}

pub fn stokes_from_jones(state: &PolarizationState) -> StokesVector {
    let cross = state.ch.conj() * state.cv;
    StokesVector {
        s1: 2.0 * cross.re,
        s2: 2.0 * cross.im,
        s3: state.ch.norm_sqr() - state.cv.norm_sqr(),
    }
}

/// 2×2 complex matrix acting on Jones vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix(pub [[Complex64; 2]; 2]);

impl JonesMatrix {
    pub const IDENTITY: Self = Self([[ONE, ZERO], [ZERO, ONE]]);

    fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self([
            [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
            [Complex64::new(-s, 0.0), Complex64::new(c, 0.0)],
        ])
    }

    pub fn apply(&self, state: &PolarizationState) -> PolarizationState {
        let m = &self.0;
        let ch = m[0][0] * state.ch + m[0][1] * state.cv;
        let cv = m[1][0] * state.ch + m[1][1] * state.cv;
        let norm = (ch.norm_sqr() + cv.norm_sqr()).sqrt();
        PolarizationState::canonical(ch / norm, cv / norm)
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        d
    }
}

impl Mul for JonesMatrix {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self(out)
    }
}

/// Linear retarder (wave plate or LCVR) with its fast axis at `fast_axis`
/// radians from H in real space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Retarder {
    pub retardance: f64,
    pub fast_axis: f64,
}

impl Retarder {
    /// Retardance is wrapped into `[0, 2π)`.
    pub fn new(retardance: f64, fast_axis: f64) -> Self {
        Self {
            retardance: wrap_tau(retardance),
            fast_axis,
        }
    }

    /// `R(-ψ) · diag(e^{-iΓ}, 1) · R(ψ)` where `R(ψ)` takes lab components
    /// into (fast, slow) components.
    pub fn matrix(&self) -> JonesMatrix {
        let phase = JonesMatrix([
            [Complex64::from_polar(1.0, -self.retardance), ZERO],
            [ZERO, ONE],
        ]);
        JonesMatrix::rotation(-self.fast_axis) * phase * JonesMatrix::rotation(self.fast_axis)
    }
}

pub fn apply_retarder(r: &Retarder, state: &PolarizationState) -> PolarizationState {
    r.matrix().apply(state)
}

/// Fast axis of the first variable retarder in the preparation optics.
pub const LCVR1_AXIS: f64 = FRAC_PI_4;
/// Fast axis of the second variable retarder.
pub const LCVR2_AXIS: f64 = 0.0;

/// Output of the preparation optics: H light through LCVR1 (axis π/4) then
/// LCVR2 (axis 0).
pub fn lcvr_forward(retardance1: f64, retardance2: f64) -> PolarizationState {
    let first = Retarder::new(retardance1, LCVR1_AXIS);
    let second = Retarder::new(retardance2, LCVR2_AXIS);
    (second.matrix() * first.matrix()).apply(&PolarizationState::H)
}

/// Retardances that make the preparation optics emit `target`.
///
/// LCVR1 tilts H down the H–L meridian by its retardance, and LCVR2 then
/// advances the Stokes azimuth `atan2(s2, s1)` by its retardance. Both are
/// returned in `[0, 2π)`.
pub fn solve_lcvr_pair(target: &PolarizationState) -> Result<(f64, f64)> {
    let s = target.stokes();
    let transverse = s.s1.hypot(s.s2);
    let r1 = transverse.atan2(s.s3);
    let r2 = if transverse < POLE_EPS {
        0.0
    } else {
        wrap_tau(s.s2.atan2(s.s1) + FRAC_PI_2)
    };
    let mut best = (wrap_tau(r1), r2);
    let mut fid = lcvr_forward(best.0, best.1).fidelity(target);
    if fid < 1.0 - 1e-12 {
        best = polish_lcvr(target, best);
        fid = lcvr_forward(best.0, best.1).fidelity(target);
    }
    if fid < 1.0 - 1e-9 {
        return Err(Error::LcvrNoConvergence { fidelity: fid });
    }
    Ok(best)
}

/// Gauss–Newton on the Stokes mismatch with a finite-difference Jacobian.
fn polish_lcvr(target: &PolarizationState, start: (f64, f64)) -> (f64, f64) {
    let goal = target.stokes().to_array();
    let residual = |r1: f64, r2: f64| {
        let s = lcvr_forward(r1, r2).stokes().to_array();
        [s[0] - goal[0], s[1] - goal[1], s[2] - goal[2]]
    };
    let (mut r1, mut r2) = start;
    let h = 1e-7;
    for _ in 0..50 {
        let f = residual(r1, r2);
        let f1 = residual(r1 + h, r2);
        let f2 = residual(r1, r2 + h);
        let j: Vec<[f64; 2]> = (0..3)
            .map(|k| [(f1[k] - f[k]) / h, (f2[k] - f[k]) / h])
            .collect();
        let (mut a11, mut a12, mut a22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for k in 0..3 {
            a11 += j[k][0] * j[k][0];
            a12 += j[k][0] * j[k][1];
            a22 += j[k][1] * j[k][1];
            g1 += j[k][0] * f[k];
            g2 += j[k][1] * f[k];
        }
        let lambda = 1e-12 * (a11 + a22).max(1e-30);
        let det = (a11 + lambda) * (a22 + lambda) - a12 * a12;
        if det.abs() < 1e-300 {
            break;
        }
        let d1 = -((a22 + lambda) * g1 - a12 * g2) / det;
        let d2 = -((a11 + lambda) * g2 - a12 * g1) / det;
        r1 += d1;
        r2 += d2;
        if d1.abs().max(d2.abs()) < 1e-15 {
            break;
        }
    }
    (wrap_tau(r1), wrap_tau(r2))
}
