//! Brute-force density-matrix propagation used to cross-check [`evolve`].
//!
//! The unnormalized 2×2 density matrix `ρ = p·(I + b·σ)/2` is integrated with
//! classical RK4 under
//!
//! ```text
//! dρ/dt = -i[Hₛ, ρ]/ħ - ρ/τx + (dephasing of ρ_HV at 1/t2) + (H↔V flips at 1/(2·t1))
//! ```
//!
//! with `Hₛ = diag(-δ/2, +δ/2)`. That ordering of the eigenenergies is what
//! turns L into D̄ after a quarter period; the opposite ordering would run the
//! sequence backwards and is not observable otherwise.
//!
//! [`evolve`]: crate::dynamics::evolve

use num_complex::Complex64;

use crate::dynamics::{DotParameters, ExcitonState, HBAR_UEV_PS};
use crate::error::{Error, Result};

type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn density_matrix(state: &ExcitonState) -> Mat2 {
    let p = state.population;
    let [b1, b2, b3] = state.bloch;
    let hv = Complex64::new(b1, -b2) * (0.5 * p);
    [
        [Complex64::new(0.5 * p * (1.0 + b3), 0.0), hv],
        [hv.conj(), Complex64::new(0.5 * p * (1.0 - b3), 0.0)],
    ]
}

fn exciton_state(rho: &Mat2) -> ExcitonState {
    let population = (rho[0][0] + rho[1][1]).re;
    if population <= 0.0 {
        return ExcitonState {
            bloch: [0.0; 3],
            population: 0.0,
        };
    }
    let hv = rho[0][1];
    ExcitonState {
        bloch: [
            2.0 * hv.re / population,
            -2.0 * hv.im / population,
            (rho[0][0] - rho[1][1]).re / population,
        ],
        population,
    }
}

fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn axpy(a: f64, x: &Mat2, y: &Mat2) -> Mat2 {
    let mut out = *y;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] += x[i][j] * a;
        }
    }
    out
}

struct Generator {
    hamiltonian: Mat2,
    gamma_pop: f64,
    gamma_dephase: f64,
    gamma_flip: f64,
}

impl Generator {
    fn new(params: &DotParameters) -> Self {
        let half = 0.5 * params.delta_gs / HBAR_UEV_PS;
        let rate = |tau: f64| if tau.is_infinite() { 0.0 } else { 1.0 / tau };
        Self {
            hamiltonian: [
                [Complex64::new(-half, 0.0), ZERO],
                [ZERO, Complex64::new(half, 0.0)],
            ],
            gamma_pop: rate(params.tau_x),
            gamma_dephase: rate(params.t2),
            gamma_flip: 0.5 * rate(params.t1),
        }
    }

    fn rhs(&self, rho: &Mat2) -> Mat2 {
        let hr = matmul(&self.hamiltonian, rho);
        let rh = matmul(rho, &self.hamiltonian);
        let minus_i = Complex64::new(0.0, -1.0);
        let mut out = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = minus_i * (hr[i][j] - rh[i][j]) - rho[i][j] * self.gamma_pop;
            }
        }
        out[0][1] -= rho[0][1] * self.gamma_dephase;
        out[1][0] -= rho[1][0] * self.gamma_dephase;
        let flip = (rho[0][0] - rho[1][1]) * self.gamma_flip;
        out[0][0] -= flip;
        out[1][1] += flip;
        out
    }
}

/// Propagates `state` for `dt` ps in RK4 steps no longer than `step`.
///
/// `step` must not exceed `dt/100`; `dt = 0` returns the input unchanged.
pub fn evolve_oracle(
    state: &ExcitonState,
    dt: f64,
    params: &DotParameters,
    step: f64,
) -> Result<ExcitonState> {
    if !(dt >= 0.0) {
        return Err(Error::NegativeTime(dt));
    }
    if dt == 0.0 {
        return Ok(*state);
    }
    let limit = dt / 100.0;
    if !(step > 0.0 && step <= limit) {
        return Err(Error::StepTooLarge { step, limit });
    }
    let gen = Generator::new(params);
    let n = (dt / step).ceil() as usize;
    let h = dt / n as f64;
    let mut rho = density_matrix(state);
    for _ in 0..n {
        let k1 = gen.rhs(&rho);
        let k2 = gen.rhs(&axpy(0.5 * h, &k1, &rho));
        let k3 = gen.rhs(&axpy(0.5 * h, &k2, &rho));
        let k4 = gen.rhs(&axpy(h, &k3, &rho));
        for i in 0..2 {
            for j in 0..2 {
                rho[i][j] += (k1[i][j] + (k2[i][j] + k3[i][j]) * 2.0 + k4[i][j]) * (h / 6.0);
            }
        }
    }
    Ok(exciton_state(&rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::evolve;
    use crate::polarization::PolarizationState;

    #[test]
    fn zero_interval_is_identity() {
        let s = ExcitonState::pure(&PolarizationState::D);
        let out = evolve_oracle(&s, 0.0, &DotParameters::default(), 1.0).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn step_limit_enforced() {
        let s = ExcitonState::pure(&PolarizationState::D);
        let p = DotParameters::default();
        assert!(matches!(
            evolve_oracle(&s, 100.0, &p, 2.0),
            Err(Error::StepTooLarge { .. })
        ));
        assert!(evolve_oracle(&s, 100.0, &p, 0.0).is_err());
        assert!(evolve_oracle(&s, -1.0, &p, 0.01).is_err());
    }

    #[test]
    fn pure_dephasing_keeps_population() {
        let p = DotParameters {
            tau_x: f64::INFINITY,
            t2: 150.0,
            ..Default::default()
        };
        let s = ExcitonState::pure(&PolarizationState::L);
        let out = evolve_oracle(&s, 300.0, &p, 0.05).unwrap();
        assert!((out.population - 1.0).abs() < 1e-12);
        let tr = out.bloch[0].hypot(out.bloch[1]);
        assert!((tr - (-2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn matches_closed_form_at_quarter_period() {
        let p = DotParameters::default();
        let t = p.period();
        let s = ExcitonState::pure(&PolarizationState::L);
        let a = evolve_oracle(&s, 0.25 * t, &p, t / 4000.0).unwrap();
        let b = evolve(&s, 0.25 * t, &p).unwrap();
        for k in 0..3 {
            assert!((a.bloch[k] - b.bloch[k]).abs() < 1e-10);
        }
        assert!((a.bloch[0] + 1.0).abs() < 1e-10);
        assert!((a.population - b.population).abs() < 1e-12);
    }

    #[test]
    fn density_matrix_round_trip() {
        let s = ExcitonState {
            bloch: [0.3, -0.4, 0.5],
            population: 0.7,
        };
        let back = exciton_state(&density_matrix(&s));
        for k in 0..3 {
            assert!((back.bloch[k] - s.bloch[k]).abs() < 1e-15);
        }
        assert!((back.population - 0.7).abs() < 1e-15);
    }
}
