mod common;

use std::f64::consts::TAU;

use common::*;
use dualchain::*;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn harmonic_spec(m: usize, base: impl Fn(TimeGrid) -> BaseState) -> ProblemSpec {
    let grid = TimeGrid::new(TAU, m).unwrap();
    ProblemSpec::new(
        oscillator(1.0, 0.0, 1.0, Signal::default()),
        ScaleParams::new(1.0, 1.0).unwrap(),
        base(grid),
        scalar(1.0),
        scalar(0.0),
    )
    .unwrap()
}

fn cos_error(traj: &Trajectory) -> f64 {
    let exact = sampled(traj.grid, |t| (scalar(t.cos()), scalar(-t.sin())));
    traj.max_deviation(&exact).unwrap()
}

#[test]
fn linear_chain_converges_in_one_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..=4 {
        let (mut spec, _) = random_instance(&mut rng, n, 40, 0.1);
        let force = spec.params.force.clone();
        spec.params.force = QuadraticForce::linear(force.c().clone(), force.a().clone()).unwrap();
        let sol = solve_dual(&spec, &SolveOptions::default()).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.iterations, 1, "n = {n}");
        assert!(sol.inertia.is_negative_semidefinite());
    }
}

#[test]
fn resolve_from_solution_is_idempotent() {
    let sc = Scenario::from_preset("perturbed_base_n4", &["grid.intervals=200".into()]).unwrap();
    let spec = sc.problem().unwrap();
    let first = solve_dual(&spec, &SolveOptions::default()).unwrap();
    assert!(first.converged);
    let again = solve_dual(
        &spec,
        &SolveOptions {
            initial_guess: Some(first.field.clone()),
            ..SolveOptions::default()
        },
    )
    .unwrap();
    assert!(again.converged);
    assert_eq!(again.iterations, 0);
    assert_eq!(again.field, first.field);
}

#[test]
fn solve_is_deterministic() {
    let sc = Scenario::from_preset("perturbed_base_n4", &["grid.intervals=100".into()]).unwrap();
    let spec = sc.problem().unwrap();
    let a = solve_dual(&spec, &SolveOptions::default()).unwrap();
    let b = solve_dual(&spec, &SolveOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn harmonic_recovery_from_zero_base_is_second_order() {
    let errors: Vec<f64> = [100, 200, 400, 800]
        .iter()
        .map(|&m| {
            let spec = harmonic_spec(m, |g| BaseState::zero(g, 1));
            let sol = solve_dual(&spec, &SolveOptions::default()).unwrap();
            assert!(sol.converged);
            cos_error(&recover_primal(&sol, &spec).unwrap())
        })
        .collect();
    for r in ratios(&errors) {
        assert!((3.0..=5.0).contains(&r), "ratios {:?}", ratios(&errors));
    }
}

#[test]
fn harmonic_recovery_from_perturbed_analytic_base() {
    let base = |g: TimeGrid| {
        let t = sampled(g, |t| {
            (
                scalar(t.cos() + 0.02 * (3.0 * t).sin()),
                scalar(-t.sin() + 0.06 * (3.0 * t).cos()),
            )
        });
        BaseState::from_trajectory(&t, BaseProvenance::UserTable)
    };
    let errors: Vec<f64> = [100, 200, 400, 800]
        .iter()
        .map(|&m| {
            let spec = harmonic_spec(m, base);
            let sol = solve_dual(&spec, &SolveOptions::default()).unwrap();
            assert_eq!(sol.iterations, 1);
            cos_error(&recover_primal(&sol, &spec).unwrap())
        })
        .collect();
    assert!(errors[3] < 1e-4);
    for r in ratios(&errors) {
        assert!((3.0..=5.0).contains(&r), "ratios {:?}", ratios(&errors));
    }
}

#[test]
fn forced_damped_recovery_matches_fine_rk4() {
    let mut errors = Vec::new();
    for m in [250, 500, 1000] {
        let sc = Scenario::from_preset("forced_damped_n1", &[format!("grid.intervals={m}")]).unwrap();
        let spec = sc.problem().unwrap();
        let sol = solve_dual(&spec, &SolveOptions::default()).unwrap();
        let oracle = sc.direct_solve(Method::Rk4, 10).unwrap();
        errors.push(recover_primal(&sol, &spec).unwrap().max_deviation(&oracle).unwrap());
    }
    for r in ratios(&errors) {
        assert!((3.0..=5.0).contains(&r), "errors {errors:?}");
    }
}

#[test]
fn fput_primal_base_gives_vanishing_duals() {
    let mut sizes = Vec::new();
    for m in [500, 1000, 2000] {
        let sc = Scenario::from_preset("fput_alpha_n8", &[format!("grid.intervals={m}")]).unwrap();
        let spec = sc.problem().unwrap();
        let sol = solve_dual(&spec, &SolveOptions::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.final_residual() <= 1e-10 * sol.residual_scale);
        sizes.push(sol.field.amax());
    }
    for r in ratios(&sizes) {
        assert!((3.0..=5.0).contains(&r), "|D| {sizes:?}");
    }
}

#[test]
fn trust_region_control_also_converges() {
    let sc = Scenario::from_preset("perturbed_base_n4", &["grid.intervals=100".into()]).unwrap();
    let spec = sc.problem().unwrap();
    let opts = SolveOptions {
        step_control: StepControl::TrustRegion,
        ..SolveOptions::default()
    };
    let tr = solve_dual(&spec, &opts).unwrap();
    let dn = solve_dual(&spec, &SolveOptions::default()).unwrap();
    assert!(tr.converged);
    let diff = tr
        .field
        .lambda
        .iter()
        .zip(&dn.field.lambda)
        .map(|(a, b)| (a - b).amax())
        .fold(0.0, f64::max);
    assert!(diff < 1e-8, "{diff}");
}

#[test]
fn frozen_jacobian_matches_default_about_zero_base() {
    let sc = Scenario::from_preset("perturbed_base_n4", &["grid.intervals=60".into(), "base={kind=\"zero\"}".into()]).unwrap();
    let spec = sc.problem().unwrap();
    let field = solve_dual(&spec, &SolveOptions::default()).unwrap().field;
    let frozen = spec.clone().with_frozen_a(true);
    assert_eq!(action(&field, &spec).unwrap(), action(&field, &frozen).unwrap());
}

#[test]
fn frozen_jacobian_changes_the_modelled_force() {
    // Keeping A from the origin drops the B xbar correction, so the dual
    // problem no longer describes the configured chain away from x = 0.
    let sc = Scenario::from_preset("perturbed_base_n4", &["grid.intervals=800".into()]).unwrap();
    let oracle = sc.primal_solve().unwrap();
    let deviation = |spec: &ProblemSpec| {
        let sol = solve_dual(spec, &SolveOptions::default()).unwrap();
        assert!(sol.converged);
        recover_primal(&sol, spec).unwrap().max_deviation(&oracle).unwrap()
    };
    let spec = sc.problem().unwrap();
    let exact = deviation(&spec);
    let frozen = deviation(&spec.with_frozen_a(true));
    assert!(exact < 1e-3 && frozen > 10.0 * exact, "{exact} {frozen}");
}

#[test]
fn iteration_cap_reports_non_convergence() {
    let sc = Scenario::from_preset("perturbed_base_n4", &["grid.intervals=100".into()]).unwrap();
    let spec = sc.problem().unwrap();
    let sol = solve_dual(
        &spec,
        &SolveOptions {
            max_iterations: 1,
            ..SolveOptions::default()
        },
    )
    .unwrap();
    assert!(!sol.converged);
    assert_eq!(sol.iterations, 1);
    assert_eq!(sol.residual_history.len(), 2);
    let report = verify(&sol, &spec, None).unwrap();
    assert!(!report.converged);
    assert!(report.flags.iter().any(|f| f.contains("did not converge")));
    assert!(matches!(sol.ensure_converged(), Err(Error::NotConverged { iterations: 1, .. })));
}

#[test]
fn initial_guess_must_vanish_at_final_time() {
    let spec = harmonic_spec(10, |g| BaseState::zero(g, 1));
    let mut guess = DualField::zeros(spec.grid, 1);
    guess.lambda[10] = scalar(1e-3);
    let opts = SolveOptions {
        initial_guess: Some(guess),
        ..SolveOptions::default()
    };
    assert_eq!(solve_dual(&spec, &opts), Err(Error::FinalCondition));
}

#[test]
fn verify_linear_solution() {
    let mut momentum = Vec::new();
    for m in [200, 400, 800] {
        let sc = Scenario::from_preset("damped_n1", &[format!("grid.intervals={m}"), "scales.c_x=2.0".into(), "scales.c_v=0.5".into()])
            .unwrap();
        let spec = sc.problem().unwrap();
        let sol = solve_dual(&spec, &SolveOptions::default()).unwrap();
        let oracle = sc.primal_solve().unwrap();
        let report = verify(&sol, &spec, Some(&oracle)).unwrap();
        assert!(report.flags.is_empty(), "{:?}", report.flags);
        assert!(report.gradient_norm <= 1e-10 * sol.residual_scale);
        assert_eq!(report.ellipticity_min, 0.5);
        assert!(report.concavity.linear && report.concavity.negative_semidefinite);
        assert!(report.oracle_max_deviation.unwrap() < 1e-3);
        momentum.push(report.primal_residual_momentum.unwrap());
    }
    for r in ratios(&momentum) {
        assert!((3.0..=5.0).contains(&r), "{momentum:?}");
    }
}

#[test]
fn verify_flags_lost_ellipticity() {
    // n = 1, B = 10: lambda = -0.2 gives KK = 1 - 2 < 0.
    let force = QuadraticForce::new(DVector::zeros(1), nalgebra::DMatrix::from_element(1, 1, 1.0), vec![
        nalgebra::DMatrix::from_element(1, 1, 10.0),
    ])
    .unwrap();
    let params = ChainParams::new(1.0, 0.0, force, ForcingSpec::zero(1)).unwrap();
    let grid = TimeGrid::new(1.0, 8).unwrap();
    let spec = ProblemSpec::new(params, ScaleParams::new(1.0, 1.0).unwrap(), BaseState::zero(grid, 1), scalar(0.1), scalar(0.0)).unwrap();
    let mut field = DualField::zeros(grid, 1);
    field.lambda[3] = scalar(-0.2);
    let ell = ellipticity_check(&field, &spec).unwrap();
    assert!(ell[3] <= 0.0, "{ell:?}");
    assert!(ell[0] > 0.0);
    let sol = DualSolution {
        field,
        converged: true,
        iterations: 0,
        residual_history: vec![0.0],
        residual_scale: 1.0,
        tolerance: 1e-10,
        inertia: Default::default(),
    };
    let report = verify(&sol, &spec, None).unwrap();
    assert!(report.ellipticity_min <= 0.0);
    assert!(report.flags.iter().any(|f| f.contains("ellipticity lost")), "{:?}", report.flags);
}

#[test]
fn blown_up_duals_report_singular_stiffness() {
    let force = QuadraticForce::new(DVector::zeros(1), nalgebra::DMatrix::from_element(1, 1, 1.0), vec![
        nalgebra::DMatrix::from_element(1, 1, 10.0),
    ])
    .unwrap();
    let params = ChainParams::new(1.0, 0.0, force, ForcingSpec::zero(1)).unwrap();
    let grid = TimeGrid::new(1.0, 4).unwrap();
    let spec = ProblemSpec::new(params, ScaleParams::new(1.0, 1.0).unwrap(), BaseState::zero(grid, 1), scalar(0.1), scalar(0.0)).unwrap();
    let mut field = DualField::zeros(grid, 1);
    field.lambda[1] = scalar(-0.1);
    field.lambda[2] = scalar(-0.1);
    assert!(matches!(action(&field, &spec), Err(Error::SingularStiffness { location: Some(1), .. })));
}

#[test]
fn action_matches_pre_dual_functional() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..20 {
        let n = 1 + case % 4;
        let m = 3 + case % 14;
        let (spec, field) = random_instance(&mut rng, n, m, 0.2);
        let s = action(&field, &spec).unwrap();
        let oracle = pre_dual(&field, &spec);
        assert!((s - oracle).abs() <= 1e-10 * s.abs().max(1e-300), "case {case}: {s} vs {oracle}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), n in 1usize..4, m in 3usize..9) {
        let (spec, field) = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), n, m, 0.15);
        let grid = spec.grid;
        let g = gradient(&field, &spec).unwrap();
        let fd = fd_gradient(|z| action(&unpack(grid, n, z), &spec).unwrap(), &pack(&field), 1e-6);
        let err = (&g - &fd).amax() / g.amax().max(1e-12);
        prop_assert!(err < 1e-6, "relative error {}", err);
    }

    #[test]
    fn hessian_matches_gradient_differences(seed in any::<u64>(), n in 1usize..4, m in 3usize..9) {
        let (spec, field) = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), n, m, 0.15);
        let grid = spec.grid;
        let z = pack(&field);
        let h = hessian(&field, &spec).unwrap().to_dense();
        let eps = 1e-6;
        let mut worst: f64 = 0.0;
        for i in 0..z.len() {
            let (mut zp, mut zm) = (z.clone(), z.clone());
            zp[i] += eps;
            zm[i] -= eps;
            let col = (gradient(&unpack(grid, n, &zp), &spec).unwrap() - gradient(&unpack(grid, n, &zm), &spec).unwrap()) / (2.0 * eps);
            worst = worst.max((col - h.column(i)).amax());
        }
        let err = worst / h.amax();
        prop_assert!(err < 1e-5, "relative error {}", err);
    }

    #[test]
    fn linear_hessian_is_negative_semidefinite(seed in any::<u64>(), n in 1usize..4, m in 3usize..12) {
        let (mut spec, field) = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), n, m, 0.3);
        let f = spec.params.force.clone();
        spec.params.force = QuadraticForce::linear(f.c().clone(), f.a().clone()).unwrap();
        let h = hessian(&field, &spec).unwrap().to_dense();
        let top = h.clone().symmetric_eigen().eigenvalues.max();
        prop_assert!(top <= 1e-10 * h.norm());
    }
}
