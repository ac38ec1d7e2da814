//! Property tests over randomized models and parameters.

use num_complex::Complex64;
use proptest::prelude::*;

use rau_core::coupling::CouplingFunction as Cf;
use rau_core::makharko::lambda_from_kappa;
use rau_core::models::{eigen_analysis, pt_apply, pt_conjugate, pt_phase, static_hamiltonian, ModelTag, PTPhase, DEFAULT_PHASE_TOL};
use rau_core::oracle::{propagate_from, propagate_on, OracleConfig};
use rau_core::propagator::{assemble_spin, det_error_profile, gauss_decompose, simulate, Method, SimulationConfig};
use rau_core::riccati::{closed_form_b_proportional, consistency_residuals, grid_with_points, integrate_factors};
use rau_core::{Complex2x2, FactorState, IntegratorConfig, Model, PTModelParams, SpinModelParams, StaticPTParams};

fn static_params() -> impl Strategy<Value = StaticPTParams> {
    (0.0f64..3.0, -3.0f64..3.0, -std::f64::consts::PI..std::f64::consts::PI).prop_map(|(r, s, t)| StaticPTParams::new(r, s, t))
}

fn smooth_coupling() -> impl Strategy<Value = Cf> {
    prop_oneof![
        (-1.0f64..1.0).prop_map(Cf::constant),
        (-1.0f64..1.0, 0.2f64..2.0, -1.0f64..1.0).prop_map(|(a, w, p)| Cf::sinusoid(a, w, p)),
        (-1.0f64..1.0, 0.0f64..1.0).prop_map(|(a, r)| Cf::exponential_decay(a, r)),
        (-0.5f64..0.5, -0.5f64..0.5, -0.5f64..0.5).prop_map(|(a, b, c)| Cf::polynomial(vec![a, b, c])),
    ]
}

proptest! {
    #[test]
    fn static_hamiltonian_is_pt_symmetric(p in static_params()) {
        let h = static_hamiltonian(&p);
        prop_assert_eq!(pt_conjugate(&h), h);
    }

    #[test]
    fn spectrum_follows_phase(p in static_params()) {
        let disc = p.discriminant();
        prop_assume!(disc.abs() > 1e-6);
        let e = eigen_analysis(&p);
        match pt_phase(&p, DEFAULT_PHASE_TOL) {
            PTPhase::Unbroken => {
                let base = p.r * p.theta.cos();
                let root = disc.sqrt();
                prop_assert!(e.lambda_plus.im.abs() <= 1e-10 && e.lambda_minus.im.abs() <= 1e-10);
                prop_assert!((e.lambda_plus.re - (base + root)).abs() <= 1e-10);
                prop_assert!((e.lambda_minus.re - (base - root)).abs() <= 1e-10);
            }
            PTPhase::Broken => prop_assert!((e.lambda_plus - e.lambda_minus.conj()).norm() <= 1e-10),
            PTPhase::Exceptional => prop_assert!(false, "off-band point tagged exceptional"),
        }
    }

    #[test]
    fn eigenvectors_solve_the_eigenproblem(p in static_params()) {
        prop_assume!(p.discriminant().abs() > 1e-6);
        let e = eigen_analysis(&p);
        let h = static_hamiltonian(&p);
        for (v, l) in [(e.psi_plus, e.lambda_plus), (e.psi_minus, e.lambda_minus)] {
            let hv = h.apply(v);
            let scale = v[0].norm().max(v[1].norm());
            prop_assert!((hv[0] - l * v[0]).norm().max((hv[1] - l * v[1]).norm()) <= 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn pt_apply_is_an_involution(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0, d in -5.0f64..5.0) {
        let v = [Complex64::new(a, b), Complex64::new(c, d)];
        prop_assert_eq!(pt_apply(pt_apply(v)), v);
    }

    #[test]
    fn pt_trace_is_twice_nu(nu in -3.0f64..3.0, kappa in smooth_coupling(), lambda in smooth_coupling(), t in 0.0f64..3.0) {
        let h = PTModelParams::new(nu, kappa, lambda).hamiltonian_at(t).unwrap();
        prop_assert!((h.trace() - Complex64::new(2.0 * nu, 0.0)).norm() <= 1e-15);
    }

    #[test]
    fn spin_round_trip(a in -2.0f64..2.0, b in -3.0f64..3.0, c in -3.0f64..3.0, d in -3.0f64..3.0) {
        let s = FactorState::new(a, b, c, d);
        let back = gauss_decompose(&assemble_spin(&s), ModelTag::Spin).unwrap();
        prop_assert!(back.max_abs_diff(&s) <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn factor_equations_hold_along_trajectories(nu in -1.0f64..1.0, kappa in smooth_coupling(), lambda in smooth_coupling()) {
        let m = Model::Pt(PTModelParams::new(nu, kappa, lambda));
        let traj = integrate_factors(&m, 0.0, 1.0, &IntegratorConfig::default()).unwrap();
        prop_assume!(traj.is_complete());
        let worst = consistency_residuals(&traj, &m).unwrap().into_iter().map(|(_, r)| r).fold(0.0, f64::max);
        prop_assert!(worst <= 1e-6, "{worst:e}");
    }

    #[test]
    fn spin_equations_hold_along_trajectories(omega in -1.0f64..1.0, alpha in -2.0f64..2.0, kappa in smooth_coupling()) {
        let m = Model::Spin(SpinModelParams::new(omega, alpha, kappa));
        let traj = integrate_factors(&m, 0.0, 1.0, &IntegratorConfig::default()).unwrap();
        prop_assume!(traj.is_complete());
        let worst = consistency_residuals(&traj, &m).unwrap().into_iter().map(|(_, r)| r).fold(0.0, f64::max);
        prop_assert!(worst <= 1e-6, "{worst:e}");
    }

    #[test]
    fn factorized_matches_oracle(nu in -1.0f64..1.0, kappa in smooth_coupling(), lambda in smooth_coupling()) {
        let m = Model::Pt(PTModelParams::new(nu, kappa, lambda));
        let res = simulate(&m, 0.0, 1.0, &SimulationConfig::default().with_points(201)).unwrap();
        prop_assume!(res.pole_events.is_empty());
        prop_assert!(res.cross_method_error.unwrap() <= 1e-6);
        let f = res.factorized.as_ref().unwrap();
        let start = m.initial_matrix(m.convention()).det();
        let det = det_error_profile(f, &m, start).unwrap().into_iter().flatten().fold(0.0, f64::max);
        prop_assert!(det <= 1e-9, "{det:e}");
    }

    #[test]
    fn oracle_composes(nu in -1.0f64..1.0, kappa in smooth_coupling(), lambda in smooth_coupling(), split in 0.2f64..1.8) {
        let m = Model::Pt(PTModelParams::new(nu, kappa, lambda));
        let cfg = OracleConfig::default();
        let whole = propagate_on(&m, &[0.0, split, 2.0], &cfg).unwrap();
        let tail = propagate_from(&m, &[split, 2.0], Complex2x2::IDENTITY, &cfg).unwrap();
        let composed = tail.last().unwrap() * whole.matrices[1].unwrap();
        prop_assert!(whole.last().unwrap().distance(&composed) <= 1e-8);
    }

    #[test]
    fn hermitian_limit_is_unitary(r in 0.0f64..3.0, s in -3.0f64..3.0) {
        let m = Model::Pt(PTModelParams::from_static(&StaticPTParams::new(r, s, 0.0)));
        let series = propagate_on(&m, &grid_with_points(0.0, 2.0, 11), &OracleConfig::default()).unwrap();
        for u in series.matrices.iter().flatten() {
            prop_assert!((u.adjoint() * *u).distance(&Complex2x2::IDENTITY) <= 1e-8);
        }
    }

    #[test]
    fn proportional_closed_form_matches_integration(p in 0.05f64..0.4, kappa in smooth_coupling()) {
        let lambda = lambda_from_kappa(p, &kappa).unwrap();
        let m = Model::Pt(PTModelParams::new(0.0, kappa.clone(), lambda));
        let traj = integrate_factors(&m, 0.0, 1.0, &IntegratorConfig::default()).unwrap();
        prop_assume!(traj.is_complete());
        let closed = closed_form_b_proportional(p, &kappa, 0.0, 1.0, traj.len()).unwrap();
        for (s, b) in traj.states.iter().zip(&closed.values) {
            prop_assert!((s.unwrap().b - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn constant_couplings_match_the_exponential(p in static_params(), t1 in 0.1f64..1.5) {
        let m = Model::Pt(PTModelParams::from_static(&p));
        let cfg = SimulationConfig::default().with_method(Method::Factorized).with_points(11);
        let res = simulate(&m, 0.0, t1, &cfg).unwrap();
        prop_assume!(res.pole_events.is_empty());
        let exact = rau_core::pauli::exp2(&static_hamiltonian(&p).scale(Complex64::new(0.0, -t1)));
        let u = res.factorized.unwrap().last().unwrap();
        prop_assert!(u.distance(&exact) <= 1e-7 * (1.0 + exact.max_norm()), "{:e}", u.distance(&exact));
    }
}
