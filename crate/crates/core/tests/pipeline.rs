use smax_core::dynamics::{integrate, invariant_set_check, monitor_lyapunov, score_field, IntegratorConfig};
use smax_core::equilibrium::{contraction_certificate, logit_equilibrium, solve_fixed_point, verify_equilibrium, SolverConfig};
use smax_core::games::check_stable_game;
use smax_core::io::{load_game, parse_game, save_game, trajectory_csv};
use smax_core::properties::{run_suite, OperatorUnderTest, SampleEnsemble, SuiteConfig};
use smax_core::{Error, MatrixGame, ScoreVector, Temperature};

fn lam(l: f64) -> Temperature {
    Temperature::new(l).unwrap()
}

fn sv(v: &[f64]) -> ScoreVector {
    ScoreVector::new(v.to_vec()).unwrap()
}

#[test]
fn file_to_equilibrium_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    let g = MatrixGame::from_rows(&[vec![0.0, 2.0, -1.0], vec![-2.0, 0.0, 1.0], vec![1.0, -1.0, 0.0]])
        .unwrap()
        .with_name("skewed");
    save_game(&g, &path).unwrap();
    let g = load_game(&path).unwrap();

    let t = lam(0.8);
    let cfg = SolverConfig::default();
    let x = logit_equilibrium(&g, t, &ScoreVector::zeros(3).unwrap(), &cfg).unwrap();
    assert!(verify_equilibrium(&g, t, &x).unwrap() <= 1e-9);

    // The flow from any start reaches the same rest point in a stable game.
    let report = check_stable_game(&g, &SampleEnsemble::new(3, 500, -1.0, 1.0, 2).unwrap()).unwrap();
    assert!(report.stable);
    let traj = integrate(&g, t, &sv(&[3.0, -1.0, 0.5]), &IntegratorConfig::new(0.01, 60.0, 20).unwrap()).unwrap();
    let last = traj.last().unwrap();
    for (a, b) in last.x.iter().zip(x.as_slice()) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn lyapunov_and_invariant_set_on_stable_game() {
    let g = MatrixGame::from_rows(&[vec![-1.0, 1.0], vec![0.0, -2.0]]).unwrap();
    let t = lam(2.0);
    let z_star = solve_fixed_point(&g, t, &ScoreVector::zeros(2).unwrap(), &SolverConfig::default())
        .unwrap()
        .z_star;
    let mut traj = integrate(&g, t, &sv(&[4.0, -3.0]), &IntegratorConfig::default()).unwrap();
    let report = monitor_lyapunov(&traj, &g, &z_star, t).unwrap();
    assert!(report.passed(), "{}", report.summary());
    assert!(invariant_set_check(&traj, &g).unwrap().passed());

    traj.attach_reference(&z_star, t).unwrap();
    let vs: Vec<f64> = traj.samples.iter().map(|s| s.v.unwrap()).collect();
    assert!(vs[0] > 0.0);
    assert!(*vs.last().unwrap() < 1e-10);
    let csv = trajectory_csv(&traj);
    assert_eq!(csv.lines().count(), traj.len() + 1);
}

#[test]
fn monitor_rejects_non_rest_point() {
    let g = MatrixGame::rock_paper_scissors();
    let t = lam(1.0);
    let traj = integrate(&g, t, &sv(&[1.0, 0.0, 0.0]), &IntegratorConfig::new(0.1, 1.0, 1).unwrap()).unwrap();
    let err = monitor_lyapunov(&traj, &g, &sv(&[1.0, 0.0, 0.0]), t).unwrap_err();
    assert!(matches!(err, Error::InvalidReference { .. }));
}

#[test]
fn unstable_game_is_flagged_but_still_solvable_at_low_lambda() {
    let g = MatrixGame::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let report = check_stable_game(&g, &SampleEnsemble::new(2, 200, -1.0, 1.0, 5).unwrap()).unwrap();
    assert!(!report.stable && report.criteria_agree());
    let t = lam(0.5);
    assert!(contraction_certificate(&g, t).certified);
    let r = solve_fixed_point(&g, t, &sv(&[3.0, -3.0]), &SolverConfig::default()).unwrap();
    assert!(r.converged);
    assert!((r.x_star.as_slice()[0] - 0.5).abs() < 1e-9);
    let field = score_field(&g, t, &r.z_star).unwrap();
    assert!(field.iter().all(|v| v.abs() <= 1e-9));
}

#[test]
fn small_suite_report_json_shape() {
    let cfg = SuiteConfig {
        dims: vec![3],
        lambdas: vec![1.0],
        samples: 50,
        ..SuiteConfig::default()
    };
    let report = run_suite(&cfg, &OperatorUnderTest::exact()).unwrap();
    assert!(report.passed);
    let v = serde_json::to_value(&report).unwrap();
    let first = &v["reports"][0];
    for key in ["property", "n_samples", "violations", "worst_margin", "witness"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }

    let faulty = run_suite(&cfg, &OperatorUnderTest::with_lambda_scale(2.0).unwrap()).unwrap();
    assert!(!faulty.passed);
    let bad = faulty.reports.iter().find(|r| r.violations > 0).unwrap();
    assert!(bad.witness.is_some());
}

#[test]
fn malformed_game_files() {
    for body in [
        r#"{"n": 2, "payoff_matrix": [[1, 0], [0, 1], [1, 1]]}"#,
        r#"{"n": 2, "payoff_matrix": [[1, "a"], [0, 1]]}"#,
        r#"{"n": 1, "payoff_matrix": [[1]]}"#,
        r#"[]"#,
    ] {
        assert!(parse_game(body).is_err(), "{body}");
    }
}
