mod common;

use nalgebra::DVector;
use proxnewton::diagnostics::*;
use proxnewton::operators::residual_fb;
use proxnewton::problem::Splitting;
use proxnewton::problems::*;
use rand::{Rng, SeedableRng};

use common::fixtures;

#[test]
fn gradients_match_finite_differences() {
    for fx in fixtures() {
        let p = &fx.problem;
        let pts = sample_points(&p.start, 10, 0.5, 11);
        if p.as_regularized().is_some() {
            let c = gradient_check(p, &pts).unwrap();
            assert!(c.passed(), "{}: {c:?}", p.name);
        }
    }
}

#[test]
fn jacobians_match_finite_differences() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for fx in fixtures() {
        let p = &fx.problem;
        // keep Hölder coordinates away from the kink at 0
        let pts: Vec<DVector<f64>> = (0..5)
            .map(|_| {
                DVector::from_fn(p.dim, |_, _| {
                    let m = rng.gen_range(0.1..0.5);
                    if rng.gen_bool(0.5) {
                        m
                    } else {
                        -m
                    }
                })
            })
            .collect();
        let c = jacobian_check(p, &pts).unwrap().expect("built-ins supply Jacobians");
        assert!(c.passed(), "{}: {c:?}", p.name);
    }
}

#[test]
fn resolvents_are_firmly_nonexpansive() {
    for fx in fixtures() {
        let p = &fx.problem;
        let pts = sample_points(&p.start, 40, 3.0, 17);
        for tau in [0.3, 1.0, 7.0] {
            let c = firm_nonexpansiveness_check(p, tau, &pts).unwrap();
            assert!(c.passed(), "{} tau={tau}: {c:?}", p.name);
            assert_eq!(c.samples, 20);
        }
    }
}

#[test]
fn prox_gradient_sandwich_on_100_points() {
    for fx in fixtures() {
        let p = &fx.problem;
        if p.as_regularized().is_none() {
            continue;
        }
        let pts = sample_points(&p.start, 100, 1.0, 23);
        let c = sandwich_check(p, &pts).unwrap();
        assert!(c.passed(), "{}: {c:?}", p.name);
    }
}

#[test]
fn error_bound_holds_near_solutions() {
    for fx in fixtures() {
        let p = &fx.problem;
        let Some(x_ref) = p.metadata.reference_solution.clone() else {
            continue;
        };
        if p.metadata.dist_oracle.is_none() {
            continue;
        }
        let pts = sample_points(&x_ref, 50, 1e-2, 29);
        let kappa = empirical_kappa(p, &pts).unwrap();
        assert!(kappa.is_finite() && kappa > 0.0, "{}: {kappa}", p.name);
        if let Some(k) = p.metadata.eb_kappa {
            assert!(kappa <= k + 1e-9, "{}: empirical {kappa} above stated {k}", p.name);
        }
    }
}

#[test]
fn residual_below_min_norm_subgradient() {
    for fx in fixtures() {
        let Some(lambda) = fx.lambda else { continue };
        let p = &fx.problem;
        let mut pts = sample_points(&p.start, 50, 1.0, 31);
        // points with exact zeros exercise the soft-threshold branch
        pts.extend(sample_points(&p.start, 50, 1.0, 37).into_iter().map(|z| p.resolvent(1.0, &z)));
        let c = subgradient_bound_check(p, lambda, &pts).unwrap();
        assert!(c.passed(), "{}: {c:?}", p.name);
    }
}

#[test]
fn reference_solutions_are_accurate() {
    for fx in fixtures() {
        let p = &fx.problem;
        let Some(x) = p.metadata.reference_solution.clone() else { continue };
        let (_, r) = residual_fb(p, &x).unwrap();
        assert!(r <= 1e-12, "{}: r = {r:e}", p.name);
        if let Some(d) = p.distance(&x) {
            assert!(d <= 1e-12, "{}: dist = {d:e}", p.name);
        }
        if let Some(fs) = p.metadata.f_star {
            assert!((p.objective(&x).unwrap() - fs).abs() <= 1e-12, "{}", p.name);
        }
    }
}

#[test]
fn smooth_residual_is_the_gradient() {
    let p = make_quadratic_singular::<f64>(15, 5, 8).unwrap();
    let x = DVector::from_fn(15, |i, _| (i as f64).sin());
    let (res, _) = residual_fb(&p, &x).unwrap();
    assert_eq!(res, p.forward(&x));
}

#[test]
fn full_rank_quadratic_solves_in_a_few_steps() {
    let p = make_quadratic_singular::<f64>(10, 10, 3).unwrap();
    let cfg = proxnewton::Config::default();
    let res = proxnewton::solvers::run_alg2(&p, &p.start, &cfg).unwrap();
    assert_eq!(res.termination, proxnewton::Termination::ResidualTol);
    assert!(res.iterations() <= 12, "{}", res.iterations());
}

#[test]
fn fixtures_are_deterministic() {
    let a = make_lasso_degenerate::<f64>(30, 60, 15, 0.1, 4).unwrap();
    let b = make_lasso_degenerate::<f64>(30, 60, 15, 0.1, 4).unwrap();
    assert_eq!(a.start, b.start);
    assert_eq!(a.metadata.reference_solution, b.metadata.reference_solution);
    let c = make_lasso_degenerate::<f64>(30, 60, 15, 0.1, 5).unwrap();
    assert_ne!(a.metadata.reference_solution, c.metadata.reference_solution);
}

#[test]
fn fixtures_convert_to_f32() {
    let p = make_holder::<f32>(8, 1.5, 0, None).unwrap();
    let cfg = proxnewton::config::SolverConfig::<f32>::new(&proxnewton::config::SolverParams {
        r_tol: Some(1e-5),
        tol_floor: Some(1e-7),
        ..Default::default()
    })
    .unwrap();
    let res = proxnewton::solvers::run_alg3(&p, &p.start, &cfg).unwrap();
    assert_eq!(res.termination, proxnewton::Termination::ResidualTol, "{:?}", res.message);
}
