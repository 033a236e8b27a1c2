use std::f64::consts::{PI, TAU};

use exciton_core::polarization::{lcvr_forward, wrap_tau};
use exciton_core::{
    angles_from_jones, apply_retarder, evolve, evolve_oracle, jones_from_angles, orthogonal,
    solve_lcvr_pair, stokes_from_jones, DotParameters, ExcitonState, PoincareAngles,
    PolarizationState, Retarder,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn state() -> impl Strategy<Value = PolarizationState> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("non-zero", |(a, b, c, d)| {
            a * a + b * b + c * c + d * d > 1e-6
        })
        .prop_map(|(a, b, c, d)| {
            PolarizationState::new(Complex64::new(a, b), Complex64::new(c, d)).unwrap()
        })
}

fn angles() -> impl Strategy<Value = PoincareAngles> {
    (0.0..=PI, 0.0..TAU).prop_map(|(t, p)| PoincareAngles::new(t, p).unwrap())
}

fn bloch() -> impl Strategy<Value = ExcitonState> {
    (angles(), 0.0..=1.0f64, 0.05..=1.0f64).prop_map(|(a, r, pop)| {
        let s = a.stokes();
        ExcitonState {
            bloch: [r * s.s1, r * s.s2, r * s.s3],
            population: pop,
        }
    })
}

proptest! {
    #[test]
    fn operations_preserve_norm(s in state(), ret in 0.0..TAU, axis in -PI..PI) {
        prop_assert!((s.norm() - 1.0).abs() < 1e-12);
        prop_assert!((orthogonal(&s).norm() - 1.0).abs() < 1e-12);
        prop_assert!((apply_retarder(&Retarder::new(ret, axis), &s).norm() - 1.0).abs() < 1e-12);
        prop_assert!((stokes_from_jones(&s).norm() - 1.0).abs() < 1e-12);
        prop_assert!(s.ch().im == 0.0 && s.ch().re >= 0.0);
    }

    #[test]
    fn chart_consistency(a in angles()) {
        let s = stokes_from_jones(&jones_from_angles(a));
        let (st, ct) = a.theta.sin_cos();
        let (sp, cp) = a.phi.sin_cos();
        prop_assert!((s.s1 + st * sp).abs() < 1e-12);
        prop_assert!((s.s2 + st * cp).abs() < 1e-12);
        prop_assert!((s.s3 - ct).abs() < 1e-12);
    }

    #[test]
    fn angle_round_trip(s in state()) {
        let back = jones_from_angles(angles_from_jones(&s));
        prop_assert!(back.fidelity(&s) >= 1.0 - 1e-12);
    }

    #[test]
    fn angle_round_trip_interior(a in (1e-6..PI - 1e-6, 0.0..TAU)) {
        let angles = PoincareAngles::new(a.0, a.1).unwrap();
        let back = angles_from_jones(&jones_from_angles(angles));
        prop_assert!((back.theta - a.0).abs() < 1e-9);
        let d = (back.phi - a.1).abs();
        prop_assert!(d.min(TAU - d) < 1e-6);
    }

    #[test]
    fn orthogonal_is_antipodal_involution(s in state()) {
        let o = orthogonal(&s);
        prop_assert!(s.inner(&o).norm() < 1e-12);
        let (a, b) = (stokes_from_jones(&s), stokes_from_jones(&o));
        prop_assert!((a.s1 + b.s1).abs() < 1e-12);
        prop_assert!((a.s2 + b.s2).abs() < 1e-12);
        prop_assert!((a.s3 + b.s3).abs() < 1e-12);
        prop_assert!(orthogonal(&o).fidelity(&s) > 1.0 - 1e-12);
    }

    #[test]
    fn sphere_distance_is_isometric(a in state(), b in state()) {
        let geo = stokes_from_jones(&a).angle_to(&stokes_from_jones(&b));
        // acos loses digits within ~1e-7 rad of the ends
        prop_assume!(geo > 1e-6 && geo < PI - 1e-6);
        let via_overlap = (2.0 * a.fidelity(&b) - 1.0).clamp(-1.0, 1.0).acos();
        prop_assert!((geo - via_overlap).abs() < 1e-9);
    }

    #[test]
    fn retarders_are_unitary(ret in 0.0..TAU, axis in -PI..PI, a in state(), b in state()) {
        let r = Retarder::new(ret, axis);
        let ip = a.inner(&b).norm();
        let ip2 = apply_retarder(&r, &a).inner(&apply_retarder(&r, &b)).norm();
        prop_assert!((ip - ip2).abs() < 1e-12);
    }

    #[test]
    fn transverse_norm_kept_without_dephasing(s in bloch(), dt in 0.0..2000.0f64) {
        let p = DotParameters::default();
        let out = evolve(&s, dt, &p).unwrap();
        let before = s.bloch[0].hypot(s.bloch[1]);
        let after = out.bloch[0].hypot(out.bloch[1]);
        prop_assert!((before - after).abs() < 1e-12);
        prop_assert!(out.bloch_norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn evolution_is_a_semigroup(s in bloch(), a in 0.0..700.0f64, b in 0.0..700.0f64, t2 in 50.0..5000.0f64) {
        let p = DotParameters { t2, t1: 3.0 * t2, ..Default::default() };
        let two = evolve(&evolve(&s, a, &p).unwrap(), b, &p).unwrap();
        let one = evolve(&s, a + b, &p).unwrap();
        for k in 0..3 {
            prop_assert!((two.bloch[k] - one.bloch[k]).abs() < 1e-10);
        }
        prop_assert!((two.population - one.population).abs() < 1e-10);
    }

    #[test]
    fn full_period_restores_direction(s in bloch(), k in 1u32..6) {
        let p = DotParameters::default();
        let out = evolve(&s, k as f64 * p.period(), &p).unwrap();
        for i in 0..3 {
            prop_assert!((out.bloch[i] - s.bloch[i]).abs() < 1e-10);
        }
    }
}

#[test]
fn precession_crossings_from_l() {
    let p = DotParameters::default();
    let t = p.period();
    let l = ExcitonState::pure(&PolarizationState::L);
    // azimuth of the evolved vector, measured like phi
    let phi_at = |dt: f64| {
        let b = evolve(&l, dt, &p).unwrap().bloch;
        wrap_tau((-b[0]).atan2(-b[1]))
    };
    for (k, frac) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let target = (k + 1) as f64 * PI / 2.0;
        // bisection on the monotone azimuth in the quarter before the crossing
        let (mut lo, mut hi) = ((frac - 0.2) * t, (frac + 0.2) * t);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi_at(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!(
            (0.5 * (lo + hi) - frac * t).abs() < 1e-10 * t,
            "crossing {frac}"
        );
    }
}

#[test]
fn oracle_agrees_on_random_cases() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..60 {
        let p = DotParameters {
            tau_x: rng.random_range(200.0..3000.0),
            t2: if rng.random_bool(0.5) {
                f64::INFINITY
            } else {
                rng.random_range(100.0..2000.0)
            },
            t1: if rng.random_bool(0.7) {
                f64::INFINITY
            } else {
                rng.random_range(300.0..4000.0)
            },
            ..Default::default()
        };
        let a = PoincareAngles::new(rng.random_range(0.0..PI), rng.random_range(0.0..TAU)).unwrap();
        let s = ExcitonState::pure(&jones_from_angles(a));
        let dt = rng.random_range(0.0..5.0 * p.period());
        let step = (dt / 100.0).min(p.period() / 2000.0);
        let o = evolve_oracle(&s, dt, &p, step).unwrap();
        let e = evolve(&s, dt, &p).unwrap();
        for k in 0..3 {
            assert!((o.bloch[k] - e.bloch[k]).abs() < 1e-8, "{:?} vs {:?}", o, e);
        }
        assert!((o.population - e.population).abs() < 1e-8);
    }
}

#[test]
fn lcvr_reaches_random_targets() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..300 {
        let t = PolarizationState::new(
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        )
        .unwrap();
        let (r1, r2) = solve_lcvr_pair(&t).unwrap();
        assert!((0.0..TAU).contains(&r1) && (0.0..TAU).contains(&r2));
        assert!(lcvr_forward(r1, r2).fidelity(&t) >= 1.0 - 1e-9);
    }
}
