use nalgebra::DVector;
use proptest::prelude::*;
use proxnewton::analysis::{audit_trace, estimate_rate_from};
use proxnewton::config::{SolverConfig, SolverParams};
use proxnewton::operators::{build_metric, residual_fb, subproblem_residual};
use proxnewton::problems::*;
use proxnewton::solvers::run;
use proxnewton::trace::IterateTrace;
use proxnewton::{Algorithm, Config, Error, Termination};

fn point(n: usize, seed: u64) -> DVector<f64> {
    proxnewton::diagnostics::sample_points(&DVector::zeros(n), 1, 0.8, seed).remove(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn residual_is_pure(seed in 0u64..1000) {
        let p = make_lasso_degenerate::<f64>(20, 40, 10, 0.1, seed % 7).unwrap();
        let x = point(40, seed);
        let (a, ra) = residual_fb(&p, &x).unwrap();
        let (b, rb) = residual_fb(&p, &x).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(ra.to_bits(), rb.to_bits());
    }

    #[test]
    fn subproblem_residual_matches_at_anchor(seed in 0u64..1000, c in 0.1f64..5.0, rho in 0.1f64..=1.0) {
        let cfg = Config::new(&SolverParams { c: Some(c), rho: Some(rho), ..Default::default() }).unwrap();
        let problems = [
            make_holder::<f64>(6, 1.5, seed, Some(0.05)).unwrap(),
            make_box_ge::<f64>(6, seed, true).unwrap(),
        ];
        for p in &problems {
            let x = point(6, seed + 1);
            let (res, r) = residual_fb(p, &x).unwrap();
            let h = build_metric(p, &x, r, &cfg).unwrap();
            let (hres, _) = subproblem_residual(p, &x, &h, &x).unwrap();
            prop_assert!((hres - res).amax() <= 1e-12);
            prop_assert!(h.is_psd());
            prop_assert!(h.norm_bound >= h.operator_norm());
        }
    }

    #[test]
    fn every_algorithm_passes_the_audit(seed in 0u64..200, alg in prop::sample::select(vec![Algorithm::Local, Algorithm::Alg1, Algorithm::Alg2, Algorithm::Alg3]), rho in 0.25f64..=1.0) {
        let cfg = Config::new(&SolverParams { rho: Some(rho), ..Default::default() }).unwrap();
        let p = make_holder::<f64>(8, 1.5, seed, None).unwrap();
        let res = run(&p, &p.start, &cfg, alg).unwrap();
        prop_assert_eq!(res.termination, Termination::ResidualTol);
        let v = audit_trace(&res.trace, &p, &cfg);
        prop_assert!(v.is_empty(), "{:?}", v);
        // the line searches decrease F at every step
        if matches!(alg, Algorithm::Alg2 | Algorithm::Alg3) {
            let fs: Vec<f64> = res.trace.rows().iter().filter_map(|r| r.objective).collect();
            prop_assert!(fs.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn csv_round_trip_keeps_recorded_columns(seed in 0u64..100) {
        let p = make_lasso_degenerate::<f64>(20, 40, 10, 0.1, seed).unwrap();
        let res = proxnewton::solvers::run_alg2(&p, &p.start, &Config::default()).unwrap();
        let text = res.trace.to_csv_string().unwrap();
        let back = IterateTrace::<f64>::read_csv(text.as_bytes()).unwrap();
        prop_assert_eq!(back.len(), res.trace.len());
        for (a, b) in res.trace.rows().iter().zip(back.rows()) {
            prop_assert_eq!(a.t, b.t);
            prop_assert_eq!(a.r, b.r);
            prop_assert_eq!(a.objective, b.objective);
            prop_assert_eq!(a.alpha, b.alpha);
            prop_assert_eq!(a.subres, b.subres);
            prop_assert_eq!(a.unit_step, b.unit_step);
        }
        prop_assert_eq!(back.to_csv_string().unwrap(), text);
    }

    #[test]
    fn rate_of_power_sequences(omega in 1.05f64..2.5, r0 in 1e-3f64..1e-2) {
        let mut rs = vec![1.0, 0.5, 0.2, 0.05];
        let mut r = r0;
        while r > 1e-11 {
            rs.push(r);
            r = r.powf(omega);
        }
        if let Ok(est) = estimate_rate_from(&rs, 1e-11) {
            prop_assert!((est.q_order - omega).abs() < 1e-9);
            prop_assert!(est.residual_of_fit < 1e-9);
        }
    }
}

#[test]
fn line_searches_need_an_objective() {
    let p = make_box_ge::<f64>(6, 1, true).unwrap();
    for alg in [Algorithm::Alg1, Algorithm::Alg2, Algorithm::Alg3] {
        let err = run(&p, &p.start, &Config::default(), alg).unwrap_err();
        assert!(matches!(err, Error::NoObjective(_)), "{err:?}");
        assert!(err.to_string().contains("line search requires objective"), "{err}");
    }
}

#[test]
fn alg3_rejects_a_regularizer() {
    let p = make_lasso_degenerate::<f64>(10, 20, 5, 0.1, 0).unwrap();
    assert!(matches!(
        run(&p, &p.start, &Config::default(), Algorithm::Alg3),
        Err(Error::Config(_))
    ));
}

#[test]
fn starting_at_the_solution_stops_immediately() {
    let p = make_holder::<f64>(5, 1.5, 0, None).unwrap();
    for alg in [Algorithm::Local, Algorithm::Alg1, Algorithm::Alg2, Algorithm::Alg3] {
        let res = run(&p, &DVector::zeros(5), &Config::default(), alg).unwrap();
        assert_eq!(res.termination, Termination::ResidualTol);
        assert_eq!(res.trace.len(), 1);
        assert_eq!(res.iterations(), 0);
    }
}

#[test]
fn underestimated_lipschitz_is_reported() {
    // L far too small makes the prox-gradient correction overshoot
    let base = make_lasso_degenerate::<f64>(20, 40, 10, 0.1, 3).unwrap();
    let reg = base.as_regularized().unwrap().clone();
    let bad = proxnewton::problem::RegularizedProblem { lipschitz: 1e-3, ..reg };
    let p = proxnewton::problem::ProblemInstance::regularized("bad_l", bad, base.start.clone());
    let res = proxnewton::solvers::run_alg2(&p, &p.start, &Config::default()).unwrap();
    assert_eq!(res.termination, Termination::StepZero);
    assert!(res.message.unwrap().contains("Lipschitz"));
    assert_eq!(res.final_x, p.start);
}

#[test]
fn budget_exhaustion_keeps_a_partial_trace() {
    let p = make_lasso_degenerate::<f64>(20, 40, 10, 0.1, 1).unwrap();
    let cfg = SolverConfig::<f64>::new(&SolverParams {
        max_inner: Some(1),
        ..Default::default()
    })
    .unwrap();
    let res = proxnewton::solvers::run_alg2(&p, &p.start, &cfg).unwrap();
    assert_eq!(res.termination, Termination::InnerBudgetExhausted);
    assert!(res.message.is_some());
    assert!(!res.trace.is_empty());
    let cfg = SolverConfig::<f64>::new(&SolverParams {
        max_outer: Some(2),
        ..Default::default()
    })
    .unwrap();
    let res = proxnewton::solvers::run_alg2(&p, &p.start, &cfg).unwrap();
    assert_eq!(res.termination, Termination::OuterBudget);
    assert_eq!(res.iterations(), 2);
}

#[test]
fn perturbed_jacobian_still_converges() {
    let p = make_holder::<f64>(10, 1.5, 2, None).unwrap();
    let cfg = Config::new(&SolverParams {
        jacobian_perturbation: Some(0.5),
        ..Default::default()
    })
    .unwrap();
    let res = proxnewton::solvers::run_alg3(&p, &p.start, &cfg).unwrap();
    assert_eq!(res.termination, Termination::ResidualTol);
    assert!(audit_trace(&res.trace, &p, &cfg).is_empty());
}

#[test]
fn relaxed_acceptance_converges() {
    let p = make_lasso_degenerate::<f64>(20, 40, 10, 0.1, 2).unwrap();
    let cfg = Config::new(&SolverParams {
        relaxed_acceptance: Some(true),
        ..Default::default()
    })
    .unwrap();
    let res = proxnewton::solvers::run_alg2(&p, &p.start, &cfg).unwrap();
    assert_eq!(res.termination, Termination::ResidualTol);
}

#[test]
fn nonmonotone_local_run_converges_from_nearby_start() {
    let p = make_nonmonotone_ge::<f64>(10, 5.0, 5).unwrap();
    let res = run(&p, &p.start, &Config::default(), Algorithm::Local).unwrap();
    assert_eq!(res.termination, Termination::ResidualTol, "{:?}", res.message);
    assert!(audit_trace(&res.trace, &p, &Config::default()).is_empty());
}
